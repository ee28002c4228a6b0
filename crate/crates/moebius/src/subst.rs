//! Simultaneous substitution `[σ/Ψ̂]` for types, terms, substitutions and
//! contexts.
//!
//! Binders met on the way down are renamed apart from the names in the
//! domain and the free names of the range before the substitution is pushed
//! underneath them.

use std::cell::Cell;
use std::collections::HashSet;

use thiserror::Error;

use crate::context::domain;
use crate::syntax::{
    fresh_avoiding, free_in_subst, free_in_term, free_in_type, rename_ctx_binders, rename_term,
    rename_type, Branch, Context, CtxType, Decl, Hat, HatEntry, Kind, Level, Name, Subst,
    SubstEntry, Term, Type,
};

thread_local! {
    static WORK: Cell<u64> = const { Cell::new(0) };
}

/// Substitution steps taken on this thread since the last [`reset_work`].
pub fn work() -> u64 {
    WORK.with(Cell::get)
}

pub fn reset_work() {
    WORK.with(|w| w.set(0));
}

fn tick() {
    WORK.with(|w| w.set(w.get() + 1));
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SubstError {
    #[error("substitution has {got} entries but its domain has {expected}")]
    Arity { expected: usize, got: usize },
    #[error("substitution entry for `{0}` has the wrong kind")]
    KindMismatch(Name),
    #[error("`{0}` still carries an unelaborated substitution")]
    Unelaborated(Name),
}

/// A substitution paired with its domain.
#[derive(Clone, Debug, Default)]
pub struct Sub {
    entries: Vec<(HatEntry, SubstEntry)>,
}

impl Sub {
    pub fn new(sigma: &Subst, dom: &Hat) -> Result<Sub, SubstError> {
        if sigma.len() != dom.len() {
            return Err(SubstError::Arity {
                expected: dom.len(),
                got: sigma.len(),
            });
        }
        let mut entries = Vec::with_capacity(dom.len());
        for (d, e) in dom.0.iter().zip(&sigma.0) {
            if d.kind != e.kind() {
                return Err(SubstError::KindMismatch(d.name.clone()));
            }
            entries.push((d.clone(), e.clone()));
        }
        Ok(Sub { entries })
    }

    pub fn single(dom: HatEntry, e: SubstEntry) -> Sub {
        Sub {
            entries: vec![(dom, e)],
        }
    }

    pub fn id(dom: &Hat) -> Sub {
        Sub {
            entries: dom
                .0
                .iter()
                .map(|d| (d.clone(), SubstEntry::rename(d.name.clone(), d.level)))
                .collect(),
        }
    }

    pub fn dom(&self) -> Hat {
        Hat(self.entries.iter().map(|(d, _)| d.clone()).collect())
    }

    pub fn subst(&self) -> Subst {
        Subst(self.entries.iter().map(|(_, e)| e.clone()).collect())
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The level of the domain.
    pub fn level(&self) -> Level {
        self.entries
            .iter()
            .map(|(d, _)| d.level + 1)
            .max()
            .unwrap_or(0)
    }

    pub fn lookup(&self, n: &Name) -> Option<&SubstEntry> {
        self.entries
            .iter()
            .rev()
            .find(|(d, _)| &d.name == n)
            .map(|(_, e)| e)
    }

    /// Keeps the entries whose domain level is `n` or above.
    pub fn chop(&self, n: Level) -> Sub {
        Sub {
            entries: self
                .entries
                .iter()
                .filter(|(d, _)| d.level >= n)
                .cloned()
                .collect(),
        }
    }

    pub fn push(&mut self, dom: HatEntry, e: SubstEntry) {
        self.entries.push((dom, e));
    }

    /// Places an entry where [`crate::context::insert`] would place its
    /// domain: after every entry of equal or higher level.
    pub fn insert(&mut self, dom: HatEntry, e: SubstEntry) {
        let i = self
            .entries
            .iter()
            .rposition(|(d, _)| d.level >= dom.level)
            .map_or(0, |i| i + 1);
        self.entries.insert(i, (dom, e));
    }

    /// Extends with the identity on `h`.
    pub fn with_id(&self, h: &Hat) -> Sub {
        let mut s = self.clone();
        for d in &h.0 {
            s.push(d.clone(), SubstEntry::rename(d.name.clone(), d.level));
        }
        s
    }

    pub fn extend(&self, other: &Sub) -> Sub {
        let mut s = self.clone();
        s.entries.extend(other.entries.iter().cloned());
        s
    }

    fn with_ren(&self, n: &Name, level: Level) -> Sub {
        let mut s = self.clone();
        s.push(HatEntry::new(n.clone(), level), SubstEntry::rename(n.clone(), level));
        s
    }

    pub fn is_identity(&self) -> bool {
        self.entries.iter().all(|(d, e)| match e {
            SubstEntry::RenTerm(x, _) | SubstEntry::RenType(x, _) => *x == d.name,
            _ => false,
        })
    }

    /// Names a binder must not take when this substitution is pushed under it.
    fn avoid(&self) -> HashSet<Name> {
        let mut out = HashSet::new();
        for (d, e) in &self.entries {
            out.insert(d.name.clone());
            match e {
                SubstEntry::RenTerm(x, _) | SubstEntry::RenType(x, _) => {
                    out.insert(x.clone());
                }
                SubstEntry::Term(h, _, t) => {
                    for n in free_in_term(t) {
                        if !h.contains(&n) {
                            out.insert(n);
                        }
                    }
                }
                SubstEntry::Type(h, _, t) => {
                    for n in free_in_type(t) {
                        if !h.contains(&n) {
                            out.insert(n);
                        }
                    }
                }
            }
        }
        out
    }
}

fn pick(n: &Name, avoid: &HashSet<Name>, body_fv: &HashSet<Name>) -> Name {
    let mut all = avoid.clone();
    all.extend(body_fv.iter().cloned());
    fresh_avoiding(n, &all)
}

fn freshen_ty_binder(a: &Name, body: &Type, avoid: &HashSet<Name>) -> (Name, Type) {
    if !avoid.contains(a) {
        return (a.clone(), body.clone());
    }
    let b = pick(a, avoid, &free_in_type(body));
    let t = rename_type(body, &vec![(a.clone(), b.clone())]);
    (b, t)
}

fn freshen_tm_binder(a: &Name, body: &Term, avoid: &HashSet<Name>) -> (Name, Term) {
    if !avoid.contains(a) {
        return (a.clone(), body.clone());
    }
    let b = pick(a, avoid, &free_in_term(body));
    let t = rename_term(body, &vec![(a.clone(), b.clone())]);
    (b, t)
}

fn fresh_names(names: &[Name], avoid: &HashSet<Name>, fv: &HashSet<Name>) -> Option<Vec<Name>> {
    if names.iter().all(|n| !avoid.contains(n)) {
        return None;
    }
    Some(
        names
            .iter()
            .map(|n| if avoid.contains(n) { pick(n, avoid, fv) } else { n.clone() })
            .collect(),
    )
}

fn rename_hat(h: &Hat, new: &[Name]) -> Hat {
    Hat(h
        .0
        .iter()
        .zip(new)
        .map(|(e, n)| HatEntry {
            name: n.clone(),
            level: e.level,
            kind: e.kind,
        })
        .collect())
}

fn hat_map(h: &Hat, new: &[Name]) -> Vec<(Name, Name)> {
    h.names()
        .zip(new)
        .filter(|(a, b)| a != b)
        .map(|(a, b)| (a.clone(), b.clone()))
        .collect()
}

fn freshen_hat_tm(h: &Hat, body: &Term, avoid: &HashSet<Name>) -> (Hat, Term) {
    let names: Vec<Name> = h.names().cloned().collect();
    match fresh_names(&names, avoid, &free_in_term(body)) {
        None => (h.clone(), body.clone()),
        Some(new) => (rename_hat(h, &new), rename_term(body, &hat_map(h, &new))),
    }
}

fn freshen_hat_ty(h: &Hat, body: &Type, avoid: &HashSet<Name>) -> (Hat, Type) {
    let names: Vec<Name> = h.names().cloned().collect();
    match fresh_names(&names, avoid, &free_in_type(body)) {
        None => (h.clone(), body.clone()),
        Some(new) => (rename_hat(h, &new), rename_type(body, &hat_map(h, &new))),
    }
}

fn freshen_ctx_ty(c: &Context, body: &Type, avoid: &HashSet<Name>) -> (Context, Type) {
    let names: Vec<Name> = c.names().cloned().collect();
    match fresh_names(&names, avoid, &free_in_type(body)) {
        None => (c.clone(), body.clone()),
        Some(new) => {
            let (c2, map) = rename_ctx_binders(c, &new, &Vec::new());
            (c2, rename_type(body, &map))
        }
    }
}

pub fn apply_type(s: &Sub, t: &Type) -> Result<Type, SubstError> {
    tick();
    if s.is_empty() {
        return Ok(t.clone());
    }
    Ok(match t {
        Type::Var(a, sp) => {
            let sp2 = apply_subst(s, sp)?;
            match s.lookup(a) {
                None => Type::Var(a.clone(), sp2),
                Some(SubstEntry::Type(h, _, body)) => apply_type(&Sub::new(&sp2, h)?, body)?,
                Some(SubstEntry::RenType(b, _)) => Type::Var(b.clone(), sp2),
                Some(_) => return Err(SubstError::KindMismatch(a.clone())),
            }
        }
        Type::Raw(a, _) => return Err(SubstError::Unelaborated(a.clone())),
        Type::Arrow(a, b) => Type::arrow(apply_type(s, a)?, apply_type(s, b)?),
        Type::Forall(a, c, n, body) => {
            let (a2, body2) = freshen_ty_binder(a, body, &s.avoid());
            let inner = if s.level() > *n {
                s.with_ren(&a2, *n)
            } else {
                s.clone()
            };
            Type::Forall(a2, c.clone(), *n, Box::new(apply_type(&inner, &body2)?))
        }
        Type::Boxed(c, n, body) => {
            if s.level() >= *n {
                let s1 = s.chop(*n);
                let (c2, body2) = freshen_ctx_ty(c, body, &s1.avoid());
                let c3 = apply_ctx(&s1, &c2)?;
                let body3 = apply_type(&s1.with_id(&domain(&c2)), &body2)?;
                Type::Boxed(c3, *n, Box::new(body3))
            } else {
                t.clone()
            }
        }
        Type::Int | Type::Bool => t.clone(),
        Type::List(e) => Type::list(apply_type(s, e)?),
    })
}

/// Composition `[σ]σ'`.
pub fn apply_subst(s: &Sub, sp: &Subst) -> Result<Subst, SubstError> {
    tick();
    if s.is_empty() {
        return Ok(sp.clone());
    }
    let mut out = Vec::with_capacity(sp.len());
    for e in &sp.0 {
        out.push(match e {
            SubstEntry::Term(h, n, body) => {
                let s1 = s.chop(*n);
                let (h2, body2) = freshen_hat_tm(h, body, &s1.avoid());
                SubstEntry::Term(h2.clone(), *n, apply_term(&s1.with_id(&h2), &body2)?)
            }
            SubstEntry::Type(h, n, body) => {
                let s1 = s.chop(*n);
                let (h2, body2) = freshen_hat_ty(h, body, &s1.avoid());
                SubstEntry::Type(h2.clone(), *n, apply_type(&s1.with_id(&h2), &body2)?)
            }
            SubstEntry::RenTerm(x, n) => match s.lookup(x) {
                None => e.clone(),
                Some(SubstEntry::RenTerm(y, _)) => SubstEntry::RenTerm(y.clone(), *n),
                Some(SubstEntry::Term(h, _, body)) => SubstEntry::Term(h.clone(), *n, body.clone()),
                Some(_) => return Err(SubstError::KindMismatch(x.clone())),
            },
            SubstEntry::RenType(x, n) => match s.lookup(x) {
                None => e.clone(),
                Some(SubstEntry::RenType(y, _)) => SubstEntry::RenType(y.clone(), *n),
                Some(SubstEntry::Type(h, _, body)) => SubstEntry::Type(h.clone(), *n, body.clone()),
                Some(_) => return Err(SubstError::KindMismatch(x.clone())),
            },
        });
    }
    Ok(Subst(out))
}

/// `[σ/Ψ̂]Γ`: each declaration at level `n` sees `σ` chopped at `n`, extended
/// with the identity on the declarations before it.
pub fn apply_ctx(s: &Sub, c: &Context) -> Result<Context, SubstError> {
    if s.is_empty() || c.is_empty() {
        return Ok(c.clone());
    }
    let names: Vec<Name> = c.names().cloned().collect();
    let mut fv = HashSet::new();
    for d in &c.0 {
        if let Decl::Term { ty, .. } = d {
            fv.extend(free_in_type(ty));
        }
    }
    let c = match fresh_names(&names, &s.avoid(), &fv) {
        None => c.clone(),
        Some(new) => rename_ctx_binders(c, &new, &Vec::new()).0,
    };
    let mut out: Vec<Decl> = Vec::with_capacity(c.len());
    let mut prefix = Sub::default();
    for d in &c.0 {
        let Some(n) = d.level() else {
            out.push(Decl::Absurd);
            continue;
        };
        let rho = s.extend(&prefix).chop(n);
        out.push(apply_decl(&rho, d)?);
        if let (Some(x), Some(k)) = (d.name(), d.kind()) {
            let he = HatEntry {
                name: x.clone(),
                level: n,
                kind: k,
            };
            prefix.push(he, SubstEntry::rename(x.clone(), n));
        }
    }
    Ok(Context(out))
}

fn apply_decl(rho: &Sub, d: &Decl) -> Result<Decl, SubstError> {
    Ok(match d {
        Decl::Term {
            name,
            ctx,
            level,
            ty,
        } => {
            let (ctx2, ty2) = freshen_ctx_ty(ctx, ty, &rho.avoid());
            Decl::Term {
                name: name.clone(),
                ctx: apply_ctx(rho, &ctx2)?,
                level: *level,
                ty: apply_type(&rho.with_id(&domain(&ctx2)), &ty2)?,
            }
        }
        Decl::Type { name, ctx, level } => Decl::Type {
            name: name.clone(),
            ctx: apply_ctx(rho, ctx)?,
            level: *level,
        },
        Decl::Solved {
            name,
            ctx,
            level,
            hat,
            sol,
        } => {
            let (hat2, sol2) = freshen_hat_ty(hat, sol, &rho.avoid());
            Decl::Solved {
                name: name.clone(),
                ctx: apply_ctx(rho, ctx)?,
                level: *level,
                hat: hat2.clone(),
                sol: apply_type(&rho.with_id(&hat2), &sol2)?,
            }
        }
        Decl::Absurd => Decl::Absurd,
    })
}

fn apply_ctxtype(s: &Sub, c: &CtxType) -> Result<CtxType, SubstError> {
    match apply_type(s, &c.to_type())? {
        Type::Boxed(ctx, level, ty) => Ok(CtxType {
            ctx,
            level,
            ty: *ty,
        }),
        _ => unreachable!("substitution preserves the outer box"),
    }
}

fn apply_branch(s: &Sub, b: &Branch) -> Result<Branch, SubstError> {
    let names: Vec<Name> = b.vars.names().cloned().collect();
    let b = match fresh_names(&names, &s.avoid(), &free_in_term(&b.body)) {
        None => b.clone(),
        Some(new) => {
            let (vars, map) = rename_ctx_binders(&b.vars, &new, &Vec::new());
            Branch {
                vars,
                hat: b.hat.clone(),
                pat: rename_term(&b.pat, &map),
                annot: b.annot.as_ref().map(|a| {
                    let t = rename_type(&a.to_type(), &map);
                    match t {
                        Type::Boxed(ctx, level, ty) => CtxType {
                            ctx,
                            level,
                            ty: *ty,
                        },
                        _ => unreachable!(),
                    }
                }),
                body: rename_term(&b.body, &map),
            }
        }
    };
    let mut inner = s.clone();
    let lvl = s.level();
    for d in &b.vars.0 {
        if let (Some(x), Some(n)) = (d.name(), d.level()) {
            if lvl > n {
                inner = inner.with_ren(x, n);
            }
        }
    }
    Ok(Branch {
        body: apply_term(&inner, &b.body)?,
        ..b
    })
}

pub fn apply_term(s: &Sub, t: &Term) -> Result<Term, SubstError> {
    tick();
    if s.is_empty() {
        return Ok(t.clone());
    }
    let r = |e: &Term| -> Result<Box<Term>, SubstError> { Ok(Box::new(apply_term(s, e)?)) };
    Ok(match t {
        Term::Var(x, sp) => {
            let sp2 = apply_subst(s, sp)?;
            match s.lookup(x) {
                None => Term::Var(x.clone(), sp2),
                Some(SubstEntry::Term(h, _, body)) => apply_term(&Sub::new(&sp2, h)?, body)?,
                Some(SubstEntry::RenTerm(y, _)) => Term::Var(y.clone(), sp2),
                Some(_) => return Err(SubstError::KindMismatch(x.clone())),
            }
        }
        Term::Raw(x, _) => return Err(SubstError::Unelaborated(x.clone())),
        Term::Lam(x, ann, e) => {
            let ann2 = match ann {
                Some(a) => Some(apply_type(s, a)?),
                None => None,
            };
            let (x2, e2) = freshen_tm_binder(x, e, &s.avoid());
            Term::Lam(x2.clone(), ann2, Box::new(apply_term(&s.with_ren(&x2, 0), &e2)?))
        }
        Term::Fix(f, ty, e) => {
            let ty2 = apply_type(s, ty)?;
            let (f2, e2) = freshen_tm_binder(f, e, &s.avoid());
            Term::Fix(f2.clone(), ty2, Box::new(apply_term(&s.with_ren(&f2, 0), &e2)?))
        }
        Term::Let(x, e1, e2) => {
            let e1b = r(e1)?;
            let (x2, e2b) = freshen_tm_binder(x, e2, &s.avoid());
            Term::Let(x2.clone(), e1b, Box::new(apply_term(&s.with_ren(&x2, 0), &e2b)?))
        }
        Term::App(a, b) => Term::App(r(a)?, r(b)?),
        Term::TLam(a, n, e) => {
            let (a2, e2) = freshen_tm_binder(a, e, &s.avoid());
            let inner = if s.level() > *n {
                s.with_ren(&a2, *n)
            } else {
                s.clone()
            };
            Term::TLam(a2, *n, Box::new(apply_term(&inner, &e2)?))
        }
        Term::TApp(e, h, n, ty) => {
            let e2 = r(e)?;
            if s.level() >= *n {
                let s1 = s.chop(*n);
                let (h2, ty2) = freshen_hat_ty(h, ty, &s1.avoid());
                let ty3 = apply_type(&s1.with_id(&h2), &ty2)?;
                Term::TApp(e2, h2, *n, ty3)
            } else {
                Term::TApp(e2, h.clone(), *n, ty.clone())
            }
        }
        Term::Boxed(h, n, e) => {
            if s.level() >= *n {
                let s1 = s.chop(*n);
                let (h2, e2) = freshen_hat_tm(h, e, &s1.avoid());
                let e3 = apply_term(&s1.with_id(&h2), &e2)?;
                Term::Boxed(h2, *n, Box::new(e3))
            } else {
                t.clone()
            }
        }
        Term::LetBox(h, n, u, e1, e2) => {
            let e1b = r(e1)?;
            let (u2, e2b) = freshen_tm_binder(u, e2, &s.avoid());
            let inner = if s.level() > *n {
                s.with_ren(&u2, *n)
            } else {
                s.clone()
            };
            Term::LetBox(h.clone(), *n, u2, e1b, Box::new(apply_term(&inner, &e2b)?))
        }
        Term::Case(scrut, annot, bs) => {
            let scrut2 = r(scrut)?;
            let annot2 = apply_ctxtype(s, annot)?;
            let bs2 = bs
                .iter()
                .map(|b| apply_branch(s, b))
                .collect::<Result<Vec<_>, _>>()?;
            Term::Case(scrut2, annot2, bs2)
        }
        Term::Ann(e, ty) => Term::Ann(r(e)?, apply_type(s, ty)?),
        Term::If(a, b, c) => Term::If(r(a)?, r(b)?, r(c)?),
        Term::Int(_) | Term::Bool(_) => t.clone(),
        Term::Nil(ty) => Term::Nil(match ty {
            Some(ty) => Some(apply_type(s, ty)?),
            None => None,
        }),
        Term::Cons(a, b) => Term::Cons(r(a)?, r(b)?),
        Term::Prim(p, args) => Term::Prim(
            *p,
            args.iter()
                .map(|a| apply_term(s, a))
                .collect::<Result<Vec<_>, _>>()?,
        ),
    })
}

/// `[σ/Ψ̂]T`
pub fn subst_type(sigma: &Subst, dom: &Hat, t: &Type) -> Result<Type, SubstError> {
    apply_type(&Sub::new(sigma, dom)?, t)
}

/// `[σ/Ψ̂]e`
pub fn subst_term(sigma: &Subst, dom: &Hat, t: &Term) -> Result<Term, SubstError> {
    apply_term(&Sub::new(sigma, dom)?, t)
}

/// `[σ/Ψ̂]σ'`
pub fn subst_subst(sigma: &Subst, dom: &Hat, t: &Subst) -> Result<Subst, SubstError> {
    apply_subst(&Sub::new(sigma, dom)?, t)
}

/// `[σ/Ψ̂]Γ`
pub fn subst_ctx(sigma: &Subst, dom: &Hat, c: &Context) -> Result<Context, SubstError> {
    apply_ctx(&Sub::new(sigma, dom)?, c)
}

/// `[(Φ̂ⁿ. e)/xⁿ]`
pub fn single_term(h: &Hat, n: Level, e: &Term, x: &Name) -> Sub {
    Sub::single(
        HatEntry {
            name: x.clone(),
            level: n,
            kind: Kind::Term,
        },
        SubstEntry::Term(h.clone(), n, e.clone()),
    )
}

/// `[(Φ̂ⁿ. T)/αⁿ]`
pub fn single_type(h: &Hat, n: Level, t: &Type, a: &Name) -> Sub {
    Sub::single(
        HatEntry {
            name: a.clone(),
            level: n,
            kind: Kind::Type,
        },
        SubstEntry::Type(h.clone(), n, t.clone()),
    )
}

/// Free names of a substitution's range, not counting its entries' own hats.
pub fn range_names(s: &Subst) -> HashSet<Name> {
    free_in_subst(s)
}
