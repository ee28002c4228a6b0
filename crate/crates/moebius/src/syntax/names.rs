//! Free variables, fresh names and capture-free renaming.

use std::collections::HashSet;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use super::{Branch, Context, CtxType, Decl, Hat, Name, RawItem, Subst, SubstEntry, Term, Type};

static COUNTER: AtomicUsize = AtomicUsize::new(0);

/// A fresh name derived from `base`, unique for the lifetime of the process.
pub fn fresh(base: &str) -> Name {
    let stem = match base.rfind('_') {
        Some(i) if i > 0 && base[i + 1..].chars().all(|c| c.is_ascii_digit()) => &base[..i],
        _ => base,
    };
    let k = COUNTER.fetch_add(1, Ordering::Relaxed);
    Arc::from(format!("{stem}_{k}"))
}

pub fn fresh_avoiding(base: &str, avoid: &HashSet<Name>) -> Name {
    loop {
        let n = fresh(base);
        if !avoid.contains(&n) {
            return n;
        }
    }
}

/// A simultaneous renaming of free names.
pub type Renaming = Vec<(Name, Name)>;

fn without(map: &Renaming, bound: &Name) -> Renaming {
    map.iter().filter(|(a, _)| a != bound).cloned().collect()
}

fn without_all<'a>(map: &Renaming, bound: impl Iterator<Item = &'a Name>) -> Renaming {
    let bound: Vec<&Name> = bound.collect();
    map.iter()
        .filter(|(a, _)| !bound.contains(&a))
        .cloned()
        .collect()
}

fn look(map: &Renaming, n: &Name) -> Name {
    map.iter()
        .rev()
        .find(|(a, _)| a == n)
        .map(|(_, b)| b.clone())
        .unwrap_or_else(|| n.clone())
}

pub fn rename_type(t: &Type, map: &Renaming) -> Type {
    if map.is_empty() {
        return t.clone();
    }
    match t {
        Type::Var(a, s) => Type::Var(look(map, a), rename_subst(s, map)),
        Type::Raw(a, items) => Type::Raw(look(map, a), items.as_ref().map(|is| rename_items(is, map))),
        Type::Arrow(a, b) => Type::arrow(rename_type(a, map), rename_type(b, map)),
        Type::Forall(a, c, n, body) => {
            let (c2, _) = rename_ctx_free(c, map);
            Type::Forall(a.clone(), c2, *n, Box::new(rename_type(body, &without(map, a))))
        }
        Type::Boxed(c, n, body) => {
            let (c2, inner) = rename_ctx_free(c, map);
            Type::Boxed(c2, *n, Box::new(rename_type(body, &inner)))
        }
        Type::Int | Type::Bool => t.clone(),
        Type::List(e) => Type::list(rename_type(e, map)),
    }
}

fn rename_items(items: &[RawItem], map: &Renaming) -> Vec<RawItem> {
    items
        .iter()
        .map(|it| match it {
            RawItem::Bare(n) => RawItem::Bare(look(map, n)),
            RawItem::Term(hat, e) => {
                let inner = hat
                    .as_ref()
                    .map(|h| without_all(map, h.iter()))
                    .unwrap_or_else(|| map.clone());
                RawItem::Term(hat.clone(), rename_term(e, &inner))
            }
            RawItem::Type(hat, t) => {
                let inner = hat
                    .as_ref()
                    .map(|h| without_all(map, h.iter()))
                    .unwrap_or_else(|| map.clone());
                RawItem::Type(hat.clone(), rename_type(t, &inner))
            }
        })
        .collect()
}

pub fn rename_subst(s: &Subst, map: &Renaming) -> Subst {
    if map.is_empty() {
        return s.clone();
    }
    Subst(
        s.0.iter()
            .map(|e| match e {
                SubstEntry::Term(h, n, t) => {
                    SubstEntry::Term(h.clone(), *n, rename_term(t, &without_all(map, h.names())))
                }
                SubstEntry::Type(h, n, t) => {
                    SubstEntry::Type(h.clone(), *n, rename_type(t, &without_all(map, h.names())))
                }
                SubstEntry::RenTerm(x, n) => SubstEntry::RenTerm(look(map, x), *n),
                SubstEntry::RenType(x, n) => SubstEntry::RenType(look(map, x), *n),
            })
            .collect(),
    )
}

fn rename_decl(d: &Decl, map: &Renaming) -> Decl {
    match d {
        Decl::Term {
            name,
            ctx,
            level,
            ty,
        } => {
            let (c, inner) = rename_ctx_free(ctx, map);
            Decl::Term {
                name: name.clone(),
                ctx: c,
                level: *level,
                ty: rename_type(ty, &inner),
            }
        }
        Decl::Type { name, ctx, level } => Decl::Type {
            name: name.clone(),
            ctx: rename_ctx_free(ctx, map).0,
            level: *level,
        },
        Decl::Solved {
            name,
            ctx,
            level,
            hat,
            sol,
        } => Decl::Solved {
            name: name.clone(),
            ctx: rename_ctx_free(ctx, map).0,
            level: *level,
            hat: hat.clone(),
            sol: rename_type(sol, &without_all(map, hat.names())),
        },
        Decl::Absurd => Decl::Absurd,
    }
}

/// Renames free names inside a context; returns the renaming still in force
/// after its declarations, for use on whatever the context scopes over.
pub fn rename_ctx_free(c: &Context, map: &Renaming) -> (Context, Renaming) {
    let mut map = map.clone();
    let mut out = Vec::with_capacity(c.0.len());
    for d in &c.0 {
        out.push(rename_decl(d, &map));
        if let Some(n) = d.name() {
            map = without(&map, n);
        }
    }
    (Context(out), map)
}

/// Renames the declared names of a context to `new`, positionally, threading
/// the change through later declarations. Returns the renaming for the scope.
pub fn rename_ctx_binders(c: &Context, new: &[Name], outer: &Renaming) -> (Context, Renaming) {
    let mut map = outer.clone();
    let mut out = Vec::with_capacity(c.0.len());
    let mut it = new.iter();
    for d in &c.0 {
        let d2 = rename_decl(d, &map);
        match d.name() {
            Some(old) => {
                let nn = it.next().cloned().unwrap_or_else(|| old.clone());
                map = without(&map, old);
                if nn != *old {
                    map.push((old.clone(), nn.clone()));
                }
                out.push(d2.with_name(nn));
            }
            None => out.push(d2),
        }
    }
    (Context(out), map)
}

fn rename_ctxtype(c: &CtxType, map: &Renaming) -> CtxType {
    let (ctx, inner) = rename_ctx_free(&c.ctx, map);
    CtxType {
        ctx,
        level: c.level,
        ty: rename_type(&c.ty, &inner),
    }
}

fn rename_branch(b: &Branch, map: &Renaming) -> Branch {
    let (vars, inner) = rename_ctx_free(&b.vars, map);
    Branch {
        vars,
        hat: b.hat.clone(),
        pat: rename_term(&b.pat, &without_all(&inner, b.hat.names())),
        annot: b.annot.as_ref().map(|a| rename_ctxtype(a, &inner)),
        body: rename_term(&b.body, &inner),
    }
}

pub fn rename_term(t: &Term, map: &Renaming) -> Term {
    if map.is_empty() {
        return t.clone();
    }
    let r = |e: &Term| Box::new(rename_term(e, map));
    match t {
        Term::Var(x, s) => Term::Var(look(map, x), rename_subst(s, map)),
        Term::Raw(x, items) => Term::Raw(look(map, x), items.as_ref().map(|is| rename_items(is, map))),
        Term::Lam(x, ann, e) => Term::Lam(
            x.clone(),
            ann.as_ref().map(|a| rename_type(a, map)),
            Box::new(rename_term(e, &without(map, x))),
        ),
        Term::App(a, b) => Term::App(r(a), r(b)),
        Term::TLam(a, n, e) => Term::TLam(a.clone(), *n, Box::new(rename_term(e, &without(map, a)))),
        Term::TApp(e, h, n, ty) => Term::TApp(
            r(e),
            h.clone(),
            *n,
            rename_type(ty, &without_all(map, h.names())),
        ),
        Term::Boxed(h, n, e) => Term::Boxed(
            h.clone(),
            *n,
            Box::new(rename_term(e, &without_all(map, h.names()))),
        ),
        Term::LetBox(h, n, u, e1, e2) => Term::LetBox(
            h.clone(),
            *n,
            u.clone(),
            r(e1),
            Box::new(rename_term(e2, &without(map, u))),
        ),
        Term::Case(s, a, bs) => Term::Case(
            r(s),
            rename_ctxtype(a, map),
            bs.iter().map(|b| rename_branch(b, map)).collect(),
        ),
        Term::Let(x, e1, e2) => Term::Let(x.clone(), r(e1), Box::new(rename_term(e2, &without(map, x)))),
        Term::Fix(f, ty, e) => Term::Fix(
            f.clone(),
            rename_type(ty, map),
            Box::new(rename_term(e, &without(map, f))),
        ),
        Term::Ann(e, ty) => Term::Ann(r(e), rename_type(ty, map)),
        Term::If(a, b, c) => Term::If(r(a), r(b), r(c)),
        Term::Int(_) | Term::Bool(_) => t.clone(),
        Term::Nil(ty) => Term::Nil(ty.as_ref().map(|ty| rename_type(ty, map))),
        Term::Cons(a, b) => Term::Cons(r(a), r(b)),
        Term::Prim(p, args) => Term::Prim(*p, args.iter().map(|a| rename_term(a, map)).collect()),
    }
}

/// Collects free names of terms, types and substitutions.
struct Fv {
    bound: Vec<Name>,
    out: HashSet<Name>,
}

impl Fv {
    fn new() -> Self {
        Fv {
            bound: Vec::new(),
            out: HashSet::new(),
        }
    }

    fn occ(&mut self, n: &Name) {
        if !self.bound.contains(n) {
            self.out.insert(n.clone());
        }
    }

    fn scoped<F: FnOnce(&mut Self)>(&mut self, names: &[Name], f: F) {
        let k = self.bound.len();
        self.bound.extend(names.iter().cloned());
        f(self);
        self.bound.truncate(k);
    }

    fn hat_names(h: &Hat) -> Vec<Name> {
        h.names().cloned().collect()
    }

    fn ty(&mut self, t: &Type) {
        match t {
            Type::Var(a, s) => {
                self.occ(a);
                self.subst(s);
            }
            Type::Raw(a, items) => {
                self.occ(a);
                if let Some(is) = items {
                    self.items(is);
                }
            }
            Type::Arrow(a, b) => {
                self.ty(a);
                self.ty(b);
            }
            Type::Forall(a, c, _, body) => {
                self.ctx_then(c, |_| {});
                self.scoped(std::slice::from_ref(a), |s| s.ty(body));
            }
            Type::Boxed(c, _, body) => self.ctx_then(c, |s| s.ty(body)),
            Type::Int | Type::Bool => {}
            Type::List(e) => self.ty(e),
        }
    }

    fn items(&mut self, items: &[RawItem]) {
        for it in items {
            match it {
                RawItem::Bare(n) => self.occ(n),
                RawItem::Term(h, e) => {
                    let names = h.clone().unwrap_or_default();
                    self.scoped(&names, |s| s.term(e));
                }
                RawItem::Type(h, t) => {
                    let names = h.clone().unwrap_or_default();
                    self.scoped(&names, |s| s.ty(t));
                }
            }
        }
    }

    fn subst(&mut self, s: &Subst) {
        for e in &s.0 {
            match e {
                SubstEntry::Term(h, _, t) => self.scoped(&Self::hat_names(h), |s| s.term(t)),
                SubstEntry::Type(h, _, t) => self.scoped(&Self::hat_names(h), |s| s.ty(t)),
                SubstEntry::RenTerm(x, _) | SubstEntry::RenType(x, _) => self.occ(x),
            }
        }
    }

    fn decl(&mut self, d: &Decl) {
        match d {
            Decl::Term { ctx, ty, .. } => self.ctx_then(ctx, |s| s.ty(ty)),
            Decl::Type { ctx, .. } => self.ctx_then(ctx, |_| {}),
            Decl::Solved { ctx, hat, sol, .. } => {
                self.ctx_then(ctx, |_| {});
                self.scoped(&Self::hat_names(hat), |s| s.ty(sol));
            }
            Decl::Absurd => {}
        }
    }

    fn ctx_then<F: FnOnce(&mut Self)>(&mut self, c: &Context, f: F) {
        let k = self.bound.len();
        for d in &c.0 {
            self.decl(d);
            if let Some(n) = d.name() {
                self.bound.push(n.clone());
            }
        }
        f(self);
        self.bound.truncate(k);
    }

    fn term(&mut self, t: &Term) {
        match t {
            Term::Var(x, s) => {
                self.occ(x);
                self.subst(s);
            }
            Term::Raw(x, items) => {
                self.occ(x);
                if let Some(is) = items {
                    self.items(is);
                }
            }
            Term::Lam(x, ann, e) => {
                if let Some(a) = ann {
                    self.ty(a);
                }
                self.scoped(std::slice::from_ref(x), |s| s.term(e));
            }
            Term::App(a, b) | Term::Cons(a, b) => {
                self.term(a);
                self.term(b);
            }
            Term::TLam(a, _, e) => self.scoped(std::slice::from_ref(a), |s| s.term(e)),
            Term::TApp(e, h, _, ty) => {
                self.term(e);
                self.scoped(&Self::hat_names(h), |s| s.ty(ty));
            }
            Term::Boxed(h, _, e) => self.scoped(&Self::hat_names(h), |s| s.term(e)),
            Term::LetBox(_, _, u, e1, e2) => {
                self.term(e1);
                self.scoped(std::slice::from_ref(u), |s| s.term(e2));
            }
            Term::Case(s, a, bs) => {
                self.term(s);
                self.ctx_then(&a.ctx, |s| s.ty(&a.ty));
                for b in bs {
                    self.ctx_then(&b.vars, |s| {
                        s.scoped(&Self::hat_names(&b.hat), |s| s.term(&b.pat));
                        if let Some(a) = &b.annot {
                            s.ctx_then(&a.ctx, |s| s.ty(&a.ty));
                        }
                        s.term(&b.body);
                    });
                }
            }
            Term::Let(x, e1, e2) => {
                self.term(e1);
                self.scoped(std::slice::from_ref(x), |s| s.term(e2));
            }
            Term::Fix(f, ty, e) => {
                self.ty(ty);
                self.scoped(std::slice::from_ref(f), |s| s.term(e));
            }
            Term::Ann(e, ty) => {
                self.term(e);
                self.ty(ty);
            }
            Term::If(a, b, c) => {
                self.term(a);
                self.term(b);
                self.term(c);
            }
            Term::Int(_) | Term::Bool(_) => {}
            Term::Nil(ty) => {
                if let Some(ty) = ty {
                    self.ty(ty);
                }
            }
            Term::Prim(_, args) => {
                for a in args {
                    self.term(a);
                }
            }
        }
    }
}

pub fn free_in_term(t: &Term) -> HashSet<Name> {
    let mut fv = Fv::new();
    fv.term(t);
    fv.out
}

pub fn free_in_type(t: &Type) -> HashSet<Name> {
    let mut fv = Fv::new();
    fv.ty(t);
    fv.out
}

pub fn free_in_subst(s: &Subst) -> HashSet<Name> {
    let mut fv = Fv::new();
    fv.subst(s);
    fv.out
}

pub fn free_in_ctx(c: &Context) -> HashSet<Name> {
    let mut fv = Fv::new();
    fv.ctx_then(c, |_| {});
    fv.out
}
