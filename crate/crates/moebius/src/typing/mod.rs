//! Bidirectional elaboration: kinding, typing of terms and substitutions, and
//! the pattern judgment `Ψ; Γⁿ ⊩ p : T`, which shares the same rules with a
//! frozen pattern-variable context on the side.
//!
//! Elaboration resolves raw closures against their declarations, fills in
//! levels and λ annotations, and wraps forms whose type cannot be synthesized
//! in an annotation, so every elaborated term is inferable.

pub mod equal;

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

pub use equal::{constraints_enabled, context_eq, subst_eq, type_eq, whnf, without_constraints};

use crate::context::{
    self, append, chop_lower, chop_upper, domain, insert, is_kind_only, is_sorted, merge,
    ContextError,
};
use crate::frontend::{Def, Program};
use crate::subst::{apply_term, apply_type, single_type, subst_type, Sub, SubstError};
use crate::syntax::{
    fresh, is_type_name, rename_ctx_binders, rename_term, rename_type, Branch, Context, CtxType,
    Decl, Hat, HatEntry, Kind, Level, Name, Prim, RawItem, Renaming, Subst, SubstEntry, Term,
    Type, UNRESOLVED,
};
use crate::unify;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ErrorKind {
    Unbound,
    LevelViolation,
    KindMismatch,
    TypeMismatch,
    ContextMalformed,
    CircularConstraint,
    ArityMismatch,
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorKind::Unbound => "unbound variable",
            ErrorKind::LevelViolation => "level violation",
            ErrorKind::KindMismatch => "kind mismatch",
            ErrorKind::TypeMismatch => "type mismatch",
            ErrorKind::ContextMalformed => "malformed context",
            ErrorKind::CircularConstraint => "circular constraint",
            ErrorKind::ArityMismatch => "arity mismatch",
        })
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub struct TypeError {
    pub kind: ErrorKind,
    pub msg: String,
    /// The expression or type being checked when the error arose.
    pub at: String,
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.msg)?;
        if !self.at.is_empty() {
            write!(f, "\n  in: {}", self.at)?;
        }
        Ok(())
    }
}

impl TypeError {
    pub fn new(kind: ErrorKind, msg: impl Into<String>) -> Self {
        TypeError {
            kind,
            msg: msg.into(),
            at: String::new(),
        }
    }

    fn at(mut self, x: &impl fmt::Display) -> Self {
        if self.at.is_empty() {
            let s = x.to_string();
            self.at = if s.chars().count() > 200 {
                format!("{}...", s.chars().take(200).collect::<String>())
            } else {
                s
            };
        }
        self
    }
}

impl From<ContextError> for TypeError {
    fn from(e: ContextError) -> Self {
        let kind = match e {
            ContextError::Unbound(_) => ErrorKind::Unbound,
            _ => ErrorKind::ContextMalformed,
        };
        TypeError::new(kind, e.to_string())
    }
}

impl From<SubstError> for TypeError {
    fn from(e: SubstError) -> Self {
        let kind = match e {
            SubstError::Arity { .. } => ErrorKind::ArityMismatch,
            _ => ErrorKind::KindMismatch,
        };
        TypeError::new(kind, e.to_string())
    }
}

type Res<T> = Result<T, TypeError>;

fn err<T>(kind: ErrorKind, msg: impl Into<String>) -> Res<T> {
    Err(TypeError::new(kind, msg))
}

/// Frozen pattern variables and the level of the current pattern position.
#[derive(Clone, Debug)]
struct PatScope {
    vars: Context,
    level: Level,
}

/// A typing context. In pattern mode `g` is the bound context `Γ`.
#[derive(Clone, Debug)]
struct Cx {
    g: Context,
    pat: Option<PatScope>,
}

impl Cx {
    fn plain(g: Context) -> Cx {
        Cx { g, pat: None }
    }

    fn lookup(&self, x: &str) -> Option<(&Decl, bool)> {
        if let Some(d) = self.g.lookup(x) {
            return Some((d, false));
        }
        self.pat.as_ref()?.vars.lookup(x).map(|d| (d, true))
    }

    fn taken(&self) -> HashSet<Name> {
        let mut s: HashSet<Name> = self.g.names().cloned().collect();
        if let Some(p) = &self.pat {
            s.extend(p.vars.names().cloned());
        }
        s
    }

    /// The context used for equality: pattern variables and bound variables together.
    fn full(&self) -> Context {
        match &self.pat {
            None => self.g.clone(),
            Some(p) => merge(&p.vars, &self.g).unwrap_or_else(|_| {
                let mut v = p.vars.0.clone();
                v.extend(self.g.0.iter().cloned());
                Context(v)
            }),
        }
    }

    fn raise(&mut self, m: Level) {
        if let Some(p) = &mut self.pat {
            p.level = p.level.max(m);
        }
    }

    fn chop(&self, m: Level) -> Cx {
        let mut c = Cx {
            g: chop_lower(&self.g, m),
            pat: self.pat.clone(),
        };
        c.raise(m);
        c
    }

    /// Renames the binders of `phi` that clash with names in scope.
    fn freshen(&self, phi: &Context) -> (Context, Renaming) {
        let taken = self.taken();
        if phi.names().all(|n| !taken.contains(n)) {
            return (phi.clone(), Vec::new());
        }
        let new: Vec<Name> = phi
            .names()
            .map(|n| if taken.contains(n) { fresh(n) } else { n.clone() })
            .collect();
        rename_ctx_binders(phi, &new, &Vec::new())
    }

    /// Appends an elaborated context whose names are already fresh.
    fn extend(&self, phi: &Context) -> Res<Cx> {
        let g = match append(&self.g, phi) {
            Ok(g) => g,
            Err(ContextError::AppendLevels(..)) => merge(&self.g, phi)?,
            Err(e) => return Err(e.into()),
        };
        Ok(Cx {
            g,
            pat: self.pat.clone(),
        })
    }

    /// `⌊Γ⌋m ⌢ Φ`, freshening the binders of `phi`.
    fn enter(&self, m: Level, phi: &Context) -> Res<(Cx, Context, Renaming)> {
        let base = self.chop(m);
        let (phi2, map) = base.freshen(phi);
        let cx = base.extend(&phi2)?;
        Ok((cx, phi2, map))
    }

    /// Inserts a declaration, renaming it if its name is taken.
    fn bind(&self, d: Decl) -> Res<(Cx, Name)> {
        let x = d.name().expect("named declaration").clone();
        let x2 = if self.taken().contains(&x) { fresh(&x) } else { x };
        let mut c = Cx {
            g: insert(&self.g, d.with_name(x2.clone()))?,
            pat: self.pat.clone(),
        };
        if let Some(l) = d.level() {
            c.raise(l);
        }
        Ok((c, x2))
    }
}

fn ren1(a: &Name, b: &Name) -> Renaming {
    if a == b {
        Vec::new()
    } else {
        vec![(a.clone(), b.clone())]
    }
}

fn positional(from: &Context, to: &Context) -> Renaming {
    from.names()
        .zip(to.names())
        .filter(|(a, b)| a != b)
        .map(|(a, b)| (a.clone(), b.clone()))
        .collect()
}

fn rename_to_hat(c: &Context, t: &Type, h: &Hat) -> Res<(Context, Type)> {
    if c.names().count() != h.len() {
        return err(
            ErrorKind::ArityMismatch,
            format!("expected {} local variables, found {}", c.names().count(), h.len()),
        );
    }
    for (d, e) in c.0.iter().filter(|d| d.name().is_some()).zip(&h.0) {
        if d.kind() != Some(e.kind) {
            return err(
                ErrorKind::KindMismatch,
                format!("local variable `{}` has the wrong sort for `{}`", e.name, d.name().unwrap()),
            );
        }
    }
    let names: Vec<Name> = h.names().cloned().collect();
    let (c2, map) = rename_ctx_binders(c, &names, &Vec::new());
    Ok((c2, rename_type(t, &map)))
}

/// Splits `[Φ ⊢n T]` produced by substituting into a box type.
fn unbox(t: Type) -> (Context, Level, Type) {
    match t {
        Type::Boxed(c, n, t) => (c, n, *t),
        _ => unreachable!("substitution preserves box types"),
    }
}

enum Item<'a> {
    Entry(&'a SubstEntry),
    Raw(&'a RawItem),
    Bare(Name),
}

#[derive(Default)]
struct Tc {
    seen: HashSet<Name>,
}

impl Tc {
    // ------------------------------------------------------------- contexts

    /// Elaborates `phi` as an extension of `cx`, returning it with clashing
    /// binders renamed, and the renaming.
    fn wf_ext(&mut self, cx: &Cx, phi: &Context) -> Res<(Context, Renaming)> {
        if !is_sorted(phi) {
            return err(ErrorKind::ContextMalformed, "context is not sorted by level");
        }
        let (phi, map) = cx.freshen(phi);
        let mut running = cx.clone();
        let mut out = Vec::with_capacity(phi.len());
        for d in &phi.0 {
            let d2 = self.decl(&running, d)?;
            running = running.extend(&Context(vec![d2.clone()]))?;
            out.push(d2);
        }
        Ok((Context(out), map))
    }

    fn decl(&mut self, cx: &Cx, d: &Decl) -> Res<Decl> {
        let Some(m) = d.level() else {
            return Ok(Decl::Absurd);
        };
        let local = d.local().unwrap();
        let x = d.name().unwrap();
        if local.level() > m {
            return err(
                ErrorKind::LevelViolation,
                format!("`{x}` at level {m} has a local context of level {}", local.level()),
            );
        }
        let base = cx.chop(m);
        let (local2, map) = self.wf_ext(&base, local)?;
        let inner = base.extend(&local2)?;
        Ok(match d {
            Decl::Term { ty, .. } => Decl::Term {
                name: x.clone(),
                ctx: local2,
                level: m,
                ty: self.kind(&inner, &rename_type(ty, &map))?,
            },
            Decl::Type { .. } => Decl::Type {
                name: x.clone(),
                ctx: local2,
                level: m,
            },
            Decl::Solved { hat, sol, .. } => {
                if hat.len() != local2.names().count() {
                    return err(ErrorKind::ArityMismatch, format!("solution for `{x}` binds the wrong number of variables"));
                }
                let hmap: Renaming = hat
                    .names()
                    .cloned()
                    .zip(local2.names().cloned())
                    .filter(|(a, b)| a != b)
                    .collect();
                let sol2 = self.kind(&inner, &rename_type(sol, &hmap))?;
                if unify::occurs(&cx.full(), x, &sol2) {
                    return err(ErrorKind::CircularConstraint, format!("`{x}` occurs in its own solution"));
                }
                Decl::Solved {
                    name: x.clone(),
                    ctx: local2.clone(),
                    level: m,
                    hat: domain(&local2),
                    sol: sol2,
                }
            }
            Decl::Absurd => unreachable!(),
        })
    }

    // --------------------------------------------------------------- kinding

    fn kind(&mut self, cx: &Cx, t: &Type) -> Res<Type> {
        self.kind_inner(cx, t).map_err(|e| e.at(t))
    }

    fn kind_inner(&mut self, cx: &Cx, t: &Type) -> Res<Type> {
        Ok(match t {
            Type::Var(a, s) => self.tvar(cx, a, s.0.iter().map(Item::Entry).collect())?,
            Type::Raw(a, items) => {
                let items = match items {
                    Some(v) => v.iter().map(Item::Raw).collect(),
                    None => self.implicit(cx, a)?,
                };
                self.tvar(cx, a, items)?
            }
            Type::Arrow(a, b) => Type::arrow(self.kind(cx, a)?, self.kind(cx, b)?),
            Type::List(a) => Type::list(self.kind(cx, a)?),
            Type::Int | Type::Bool => t.clone(),
            Type::Forall(a, c, n, body) => {
                if !is_kind_only(c) {
                    return err(ErrorKind::KindMismatch, "a quantifier's context may only declare type variables");
                }
                if c.level() > *n {
                    return err(ErrorKind::LevelViolation, format!("context of level {} under a level-{n} quantifier", c.level()));
                }
                let (c2, _) = self.wf_ext(&Cx::plain(Context::empty()), c)?;
                let (cx2, a2) = cx.bind(Decl::Type {
                    name: a.clone(),
                    ctx: c2.clone(),
                    level: *n,
                })?;
                let body2 = self.kind(&cx2, &rename_type(body, &ren1(a, &a2)))?;
                Type::Forall(a2, c2, *n, Box::new(body2))
            }
            Type::Boxed(c, n, body) => {
                if *n == 0 {
                    return err(ErrorKind::LevelViolation, "box types need a level above 0");
                }
                if c.level() > *n {
                    return err(ErrorKind::LevelViolation, format!("context of level {} in a level-{n} box", c.level()));
                }
                let base = cx.chop(*n);
                let (c2, map) = self.wf_ext(&base, c)?;
                let inner = base.extend(&c2)?;
                Type::boxed(c2, *n, self.kind(&inner, &rename_type(body, &map))?)
            }
        })
    }

    fn implicit<'a>(&self, cx: &Cx, x: &Name) -> Res<Vec<Item<'a>>> {
        let (d, _) = cx.lookup(x).ok_or_else(|| TypeError::new(ErrorKind::Unbound, format!("`{x}` is not in scope")))?;
        Ok(d.local()
            .unwrap()
            .names()
            .map(|n| Item::Bare(n.clone()))
            .collect())
    }

    fn tvar(&mut self, cx: &Cx, a: &Name, items: Vec<Item>) -> Res<Type> {
        let (d, is_pat) = cx
            .lookup(a)
            .ok_or_else(|| TypeError::new(ErrorKind::Unbound, format!("`{a}` is not in scope")))?;
        if d.kind() != Some(Kind::Type) {
            return err(ErrorKind::KindMismatch, format!("`{a}` is a term variable, not a type"));
        }
        let (local, lvl) = (d.local().unwrap().clone(), d.level().unwrap());
        let s = self.subst_items(cx, items, &local, a)?;
        if is_pat {
            self.patvar_use(cx, a, lvl, &s)?;
        }
        Ok(Type::Var(a.clone(), s))
    }

    fn patvar_use(&self, cx: &Cx, x: &Name, lvl: Level, s: &Subst) -> Res<()> {
        let n = cx.pat.as_ref().unwrap().level;
        if lvl != n {
            return err(
                ErrorKind::LevelViolation,
                format!("pattern variable `{x}` is declared at level {lvl} but used at level {n}"),
            );
        }
        let mut seen = HashSet::new();
        for e in &s.0 {
            match e {
                SubstEntry::RenTerm(y, _) | SubstEntry::RenType(y, _)
                    if cx.g.contains(y) && seen.insert(y.clone()) => {}
                _ => {
                    return err(
                        ErrorKind::TypeMismatch,
                        format!("pattern variable `{x}` must be applied to distinct bound variables"),
                    )
                }
            }
        }
        Ok(())
    }

    // ---------------------------------------------------------- substitutions

    /// Elaborates and checks `Ψ ⊩ σ : Φ` entry by entry.
    fn subst_items(&mut self, cx: &Cx, items: Vec<Item>, local: &Context, x: &Name) -> Res<Subst> {
        let dom: Vec<&Decl> = local.0.iter().filter(|d| d.name().is_some()).collect();
        if local.has_absurd() && !cx.full().has_absurd() {
            return err(
                ErrorKind::ContextMalformed,
                format!("the context of `{x}` is contradictory but the current one is not"),
            );
        }
        if items.len() != dom.len() {
            return err(
                ErrorKind::ArityMismatch,
                format!("`{x}` needs {} substitution entries, found {}", dom.len(), items.len()),
            );
        }
        let mut prefix = Sub::default();
        let mut out = Vec::with_capacity(dom.len());
        for (d, item) in dom.into_iter().zip(items) {
            let n = d.level().unwrap();
            let rho = prefix.chop(n);
            let entry = match d {
                Decl::Term { ctx, ty, name, .. } => self.term_entry(cx, n, &rho, ctx, ty, item, name)?,
                Decl::Type { ctx, name, .. } => self.type_entry(cx, n, &rho, ctx, None, item, name)?,
                Decl::Solved {
                    ctx, hat, sol, name, ..
                } => self.type_entry(cx, n, &rho, ctx, Some((hat, sol)), item, name)?,
                Decl::Absurd => unreachable!(),
            };
            prefix.push(
                HatEntry {
                    name: d.name().unwrap().clone(),
                    level: n,
                    kind: d.kind().unwrap(),
                },
                entry.clone(),
            );
            out.push(entry);
        }
        Ok(Subst(out))
    }

    fn renames_to(cx: &Cx, y: &Name, kind: Kind, n: Level) -> bool {
        cx.lookup(y)
            .is_some_and(|(d, _)| d.kind() == Some(kind) && d.level() == Some(n))
    }

    #[allow(clippy::too_many_arguments)]
    fn term_entry(
        &mut self,
        cx: &Cx,
        n: Level,
        rho: &Sub,
        dctx: &Context,
        dty: &Type,
        item: Item,
        x: &Name,
    ) -> Res<SubstEntry> {
        match &item {
            Item::Entry(SubstEntry::RenTerm(y, _)) => {
                self.check_rename(cx, y, n, rho, dctx, Some(dty))?;
                Ok(SubstEntry::RenTerm(y.clone(), n))
            }
            Item::Raw(RawItem::Bare(y)) | Item::Bare(y) if !is_type_name(y) => {
                let y = y.clone();
                if Self::renames_to(cx, &y, Kind::Term, n) {
                    self.check_rename(cx, &y, n, rho, dctx, Some(dty))?;
                    Ok(SubstEntry::RenTerm(y, n))
                } else {
                    self.cterm(cx, n, rho, dctx, dty, None, &Term::Raw(y, None))
                }
            }
            Item::Entry(SubstEntry::Term(h, _, e)) => {
                let names: Vec<Name> = h.names().cloned().collect();
                self.cterm(cx, n, rho, dctx, dty, Some(&names), e)
            }
            Item::Raw(RawItem::Term(hn, e)) => self.cterm(cx, n, rho, dctx, dty, hn.as_deref(), e),
            _ => err(ErrorKind::KindMismatch, format!("expected a term for `{x}`")),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn type_entry(
        &mut self,
        cx: &Cx,
        n: Level,
        rho: &Sub,
        dctx: &Context,
        solved: Option<(&Hat, &Type)>,
        item: Item,
        x: &Name,
    ) -> Res<SubstEntry> {
        let entry = match &item {
            Item::Entry(SubstEntry::RenType(b, _)) => {
                self.check_rename(cx, b, n, rho, dctx, None)?;
                SubstEntry::RenType(b.clone(), n)
            }
            Item::Raw(RawItem::Bare(b)) | Item::Bare(b) if is_type_name(b) => {
                let b = b.clone();
                if Self::renames_to(cx, &b, Kind::Type, n) {
                    self.check_rename(cx, &b, n, rho, dctx, None)?;
                    SubstEntry::RenType(b, n)
                } else {
                    self.ctype(cx, n, rho, dctx, None, &Type::Raw(b, None))?
                }
            }
            Item::Entry(SubstEntry::Type(h, _, t)) => {
                let names: Vec<Name> = h.names().cloned().collect();
                self.ctype(cx, n, rho, dctx, Some(&names), t)?
            }
            Item::Raw(RawItem::Type(hn, t)) => self.ctype(cx, n, rho, dctx, hn.as_deref(), t)?,
            _ => return err(ErrorKind::KindMismatch, format!("expected a type for `{x}`")),
        };
        if let Some((hat, sol)) = solved {
            let hmap: Renaming = hat
                .names()
                .cloned()
                .zip(dctx.names().cloned())
                .filter(|(a, b)| a != b)
                .collect();
            let (c1, _, s1) = unbox(apply_type(rho, &Type::boxed(dctx.clone(), n, rename_type(sol, &hmap)))?);
            let actual = match &entry {
                SubstEntry::Type(h, _, t) => {
                    let names: Vec<Name> = h.names().cloned().collect();
                    Type::boxed(rename_ctx_binders(&c1, &names, &Vec::new()).0, n, t.clone())
                }
                SubstEntry::RenType(b, _) => {
                    Type::boxed(c1.clone(), n, Type::Var(b.clone(), Subst::id(&domain(&c1))))
                }
                _ => unreachable!(),
            };
            if !type_eq(&cx.full(), &actual, &Type::boxed(c1, n, s1)) {
                return err(
                    ErrorKind::TypeMismatch,
                    format!("the entry for `{x}` disagrees with its solution"),
                );
            }
        }
        Ok(entry)
    }

    /// A variable standing for a domain variable: its declaration must match
    /// the domain declaration under the substitution so far.
    fn check_rename(
        &mut self,
        cx: &Cx,
        y: &Name,
        n: Level,
        rho: &Sub,
        dctx: &Context,
        dty: Option<&Type>,
    ) -> Res<()> {
        let (d, _) = cx
            .lookup(y)
            .ok_or_else(|| TypeError::new(ErrorKind::Unbound, format!("`{y}` is not in scope")))?;
        if d.level() != Some(n) {
            return err(
                ErrorKind::LevelViolation,
                format!("`{y}` is at level {} but level {n} is needed", d.level().unwrap_or(0)),
            );
        }
        let body = dty.cloned().unwrap_or(Type::Int);
        let expected = apply_type(rho, &Type::boxed(dctx.clone(), n, body))?;
        let actual = match d {
            Decl::Term { ctx, ty, .. } => Type::boxed(ctx.clone(), n, ty.clone()),
            _ => Type::boxed(d.local().unwrap().clone(), n, Type::Int),
        };
        if !type_eq(&cx.full(), &actual, &expected) {
            return err(
                ErrorKind::TypeMismatch,
                format!("`{y}` has declaration {actual} but {expected} is needed"),
            );
        }
        Ok(())
    }

    /// Opens the local context of a domain declaration for a contextual entry.
    fn open_entry(
        &mut self,
        cx: &Cx,
        n: Level,
        rho: &Sub,
        dctx: &Context,
        body: &Type,
        hn: Option<&[Name]>,
    ) -> Res<(Cx, Context, Type, Renaming)> {
        let (dctx_h, body_h) = match hn {
            Some(names) => {
                if names.len() != dctx.names().count() {
                    return err(
                        ErrorKind::ArityMismatch,
                        format!("entry binds {} variables but its context has {}", names.len(), dctx.names().count()),
                    );
                }
                let (c, m) = rename_ctx_binders(dctx, names, &Vec::new());
                let b = rename_type(body, &m);
                (c, b)
            }
            None => (dctx.clone(), body.clone()),
        };
        let (c1, _, t1) = unbox(apply_type(rho, &Type::boxed(dctx_h.clone(), n, body_h))?);
        let m1 = positional(&dctx_h, &c1);
        let (cx2, c2, m2) = cx.enter(n, &c1)?;
        Ok((cx2, c2, rename_type(&t1, &m2), compose(&m1, &m2)))
    }

    #[allow(clippy::too_many_arguments)]
    fn cterm(
        &mut self,
        cx: &Cx,
        n: Level,
        rho: &Sub,
        dctx: &Context,
        dty: &Type,
        hn: Option<&[Name]>,
        e: &Term,
    ) -> Res<SubstEntry> {
        let (cx2, c2, t2, map) = self.open_entry(cx, n, rho, dctx, dty, hn)?;
        let e2 = self.check(&cx2, &rename_term(e, &map), &t2)?;
        Ok(SubstEntry::Term(domain(&c2), n, e2))
    }

    fn ctype(
        &mut self,
        cx: &Cx,
        n: Level,
        rho: &Sub,
        dctx: &Context,
        hn: Option<&[Name]>,
        t: &Type,
    ) -> Res<SubstEntry> {
        let (cx2, c2, _, map) = self.open_entry(cx, n, rho, dctx, &Type::Int, hn)?;
        let t2 = self.kind(&cx2, &rename_type(t, &map))?;
        Ok(SubstEntry::Type(domain(&c2), n, t2))
    }

    // ----------------------------------------------------------------- terms

    fn infer(&mut self, cx: &Cx, e: &Term) -> Res<(Term, Type)> {
        self.infer_inner(cx, e).map_err(|err| err.at(e))
    }

    fn check(&mut self, cx: &Cx, e: &Term, t: &Type) -> Res<Term> {
        let (e2, inferable) = self.check_core(cx, e, t).map_err(|err| err.at(e))?;
        Ok(if inferable || cx.pat.is_some() {
            e2
        } else {
            Term::ann(e2, t.clone())
        })
    }

    fn var(&mut self, cx: &Cx, x: &Name, items: Vec<Item>) -> Res<(Term, Type)> {
        let (d, is_pat) = cx
            .lookup(x)
            .ok_or_else(|| TypeError::new(ErrorKind::Unbound, format!("`{x}` is not in scope")))?;
        let Decl::Term { ctx, level, ty, .. } = d else {
            return err(ErrorKind::KindMismatch, format!("`{x}` is a type variable, not a term"));
        };
        let (ctx, level, ty) = (ctx.clone(), *level, ty.clone());
        let s = self.subst_items(cx, items, &ctx, x)?;
        if is_pat {
            self.patvar_use(cx, x, level, &s)?;
            if !self.seen.insert(x.clone()) {
                return err(
                    ErrorKind::TypeMismatch,
                    format!("pattern variable `{x}` occurs more than once"),
                );
            }
        }
        let t = subst_type(&s, &domain(&ctx), &ty)?;
        Ok((Term::Var(x.clone(), s), t))
    }

    fn expect_arrow(cx: &Cx, t: &Type) -> Res<(Type, Type)> {
        match whnf(&cx.full(), t) {
            Type::Arrow(a, b) => Ok((*a, *b)),
            other => err(ErrorKind::TypeMismatch, format!("expected a function, found `{other}`")),
        }
    }

    fn expect_list(cx: &Cx, t: &Type) -> Res<Type> {
        match whnf(&cx.full(), t) {
            Type::List(a) => Ok(*a),
            other => err(ErrorKind::TypeMismatch, format!("expected a list, found `{other}`")),
        }
    }

    fn level_of(given: Level, actual: Level) -> Res<Level> {
        if given != UNRESOLVED && given != actual {
            return err(
                ErrorKind::LevelViolation,
                format!("level {given} written where level {actual} is expected"),
            );
        }
        Ok(actual)
    }

    fn infer_inner(&mut self, cx: &Cx, e: &Term) -> Res<(Term, Type)> {
        match e {
            Term::Var(x, s) => self.var(cx, x, s.0.iter().map(Item::Entry).collect()),
            Term::Raw(x, items) => {
                let items = match items {
                    Some(v) => v.iter().map(Item::Raw).collect(),
                    None => self.implicit(cx, x)?,
                };
                self.var(cx, x, items)
            }
            Term::Lam(x, Some(a), body) => {
                let a2 = self.kind(cx, a)?;
                let (cx2, x2) = cx.bind(Decl::Term {
                    name: x.clone(),
                    ctx: Context::empty(),
                    level: 0,
                    ty: a2.clone(),
                })?;
                let (b2, bt) = self.infer(&cx2, &rename_term(body, &ren1(x, &x2)))?;
                Ok((Term::Lam(x2, Some(a2.clone()), Box::new(b2)), Type::arrow(a2, bt)))
            }
            Term::Fix(f, t, body) => {
                let t2 = self.kind(cx, t)?;
                let (cx2, f2) = cx.bind(Decl::Term {
                    name: f.clone(),
                    ctx: Context::empty(),
                    level: 0,
                    ty: t2.clone(),
                })?;
                let b2 = self.check(&cx2, &rename_term(body, &ren1(f, &f2)), &t2)?;
                Ok((Term::Fix(f2, t2.clone(), Box::new(b2)), t2))
            }
            Term::App(f, a) if matches!(**f, Term::Lam(_, None, _)) => {
                let Term::Lam(x, None, body) = &**f else { unreachable!() };
                let (a2, at) = self.infer(cx, a)?;
                let lam = Term::Lam(x.clone(), Some(at), body.clone());
                let (f2, ft) = self.infer(cx, &lam)?;
                let (_, cod) = Self::expect_arrow(cx, &ft)?;
                Ok((Term::App(Box::new(f2), Box::new(a2)), cod))
            }
            Term::App(f, a) => {
                let (f2, ft) = self.infer(cx, f)?;
                let (dom, cod) = Self::expect_arrow(cx, &ft)?;
                let a2 = self.check(cx, a, &dom)?;
                Ok((Term::App(Box::new(f2), Box::new(a2)), cod))
            }
            Term::TLam(a, n, body) => {
                let n = if *n == UNRESOLVED { 0 } else { *n };
                let (cx2, a2) = cx.bind(Decl::Type {
                    name: a.clone(),
                    ctx: Context::empty(),
                    level: n,
                })?;
                let (b2, bt) = self.infer(&cx2, &rename_term(body, &ren1(a, &a2)))?;
                Ok((
                    Term::TLam(a2.clone(), n, Box::new(b2)),
                    Type::Forall(a2, Context::empty(), n, Box::new(bt)),
                ))
            }
            Term::TApp(f, h, n, targ) => {
                let (f2, ft) = self.infer(cx, f)?;
                let Type::Forall(a, c, m, body) = whnf(&cx.full(), &ft) else {
                    return err(ErrorKind::TypeMismatch, format!("expected a polymorphic function, found `{ft}`"));
                };
                let m = Self::level_of(*n, m)?;
                let (c_h, _) = rename_to_hat(&c, &Type::Int, h)?;
                let (cx2, c2, map) = cx.enter(m, &c_h)?;
                let t2 = self.kind(&cx2, &rename_type(targ, &map))?;
                let hat = domain(&c2);
                let result = apply_type(&single_type(&hat, m, &t2, &a), &body)?;
                Ok((Term::TApp(Box::new(f2), hat, m, t2), result))
            }
            Term::Boxed(h, n, body) if h.is_empty() => {
                let n = if *n == UNRESOLVED { 1 } else { *n };
                if n == 0 {
                    return err(ErrorKind::LevelViolation, "box needs a level above 0");
                }
                let (b2, bt) = self.infer(&cx.chop(n), body)?;
                let term = Term::boxed(Hat::empty(), n, b2);
                let ty = Type::boxed(Context::empty(), n, bt);
                if n == 1 || cx.pat.is_some() {
                    Ok((term, ty))
                } else {
                    Ok((Term::ann(term, ty.clone()), ty))
                }
            }
            Term::LetBox(h, n, u, e1, e2) => {
                let (e1b, t1) = self.infer(cx, e1)?;
                let Type::Boxed(c, m, t) = whnf(&cx.full(), &t1) else {
                    return err(ErrorKind::TypeMismatch, format!("let box needs code, found `{t1}`"));
                };
                let m = Self::level_of(*n, m)?;
                let (c_h, t_h) = rename_to_hat(&c, &t, h)?;
                let (cx2, u2) = cx.bind(Decl::Term {
                    name: u.clone(),
                    ctx: c_h.clone(),
                    level: m,
                    ty: t_h,
                })?;
                let (e2b, t2) = self.infer(&cx2, &rename_term(e2, &ren1(u, &u2)))?;
                Ok((
                    Term::LetBox(domain(&c_h), m, u2, Box::new(e1b), Box::new(e2b)),
                    t2,
                ))
            }
            Term::Let(x, e1, e2) => {
                let (e1b, t1) = self.infer(cx, e1)?;
                let (cx2, x2) = cx.bind(Decl::Term {
                    name: x.clone(),
                    ctx: Context::empty(),
                    level: 0,
                    ty: t1,
                })?;
                let (e2b, t2) = self.infer(&cx2, &rename_term(e2, &ren1(x, &x2)))?;
                Ok((Term::Let(x2, Box::new(e1b), Box::new(e2b)), t2))
            }
            Term::Ann(inner, t) => {
                let t2 = self.kind(cx, t)?;
                let (core, _) = self.check_core(cx, inner, &t2).map_err(|err| err.at(inner))?;
                Ok((Term::ann(core, t2.clone()), t2))
            }
            Term::If(c, a, b) => {
                let c2 = self.check(cx, c, &Type::Bool)?;
                let (a2, t) = self.infer(cx, a)?;
                let b2 = self.check(cx, b, &t)?;
                Ok((Term::If(Box::new(c2), Box::new(a2), Box::new(b2)), t))
            }
            Term::Int(_) => Ok((e.clone(), Type::Int)),
            Term::Bool(_) => Ok((e.clone(), Type::Bool)),
            Term::Nil(Some(t)) => {
                let t2 = self.kind(cx, t)?;
                Ok((Term::Nil(Some(t2.clone())), Type::list(t2)))
            }
            Term::Cons(h, t) => {
                let (h2, ht) = self.infer(cx, h)?;
                let lt = Type::list(ht);
                let t2 = self.check(cx, t, &lt)?;
                Ok((Term::Cons(Box::new(h2), Box::new(t2)), lt))
            }
            Term::Prim(p, args) => self.prim(cx, *p, args),
            Term::Lam(..) | Term::Nil(None) | Term::Boxed(..) | Term::Case(..) => err(
                ErrorKind::TypeMismatch,
                "cannot synthesize a type here; add an annotation",
            ),
        }
    }

    fn prim(&mut self, cx: &Cx, p: Prim, args: &[Term]) -> Res<(Term, Type)> {
        if args.len() != p.arity() {
            return err(ErrorKind::ArityMismatch, format!("`{}` takes {} arguments", p.symbol(), p.arity()));
        }
        let (args2, t) = match p {
            Prim::Add | Prim::Sub | Prim::Mul | Prim::Le => {
                let a = self.check(cx, &args[0], &Type::Int)?;
                let b = self.check(cx, &args[1], &Type::Int)?;
                (vec![a, b], if p == Prim::Le { Type::Bool } else { Type::Int })
            }
            Prim::Eq => {
                let (a, at) = self.infer(cx, &args[0])?;
                let at = whnf(&cx.full(), &at);
                if !matches!(at, Type::Int | Type::Bool) {
                    return err(ErrorKind::TypeMismatch, format!("`=` compares int or bool, found `{at}`"));
                }
                let b = self.check(cx, &args[1], &at)?;
                (vec![a, b], Type::Bool)
            }
            Prim::Hd | Prim::Tl | Prim::Null => {
                let (a, at) = self.infer(cx, &args[0])?;
                let el = Self::expect_list(cx, &at)?;
                let t = match p {
                    Prim::Hd => el,
                    Prim::Tl => Type::list(el),
                    _ => Type::Bool,
                };
                (vec![a], t)
            }
        };
        Ok((Term::Prim(p, args2), t))
    }

    /// Checks `e` against `t`; the flag says whether the result is inferable.
    fn check_core(&mut self, cx: &Cx, e: &Term, t: &Type) -> Res<(Term, bool)> {
        let full = cx.full();
        let tw = whnf(&full, t);
        match (e, &tw) {
            (Term::Lam(x, ann, body), Type::Arrow(a, b)) => {
                if let Some(ann) = ann {
                    let ann2 = self.kind(cx, ann)?;
                    if !type_eq(&full, &ann2, a) {
                        return err(ErrorKind::TypeMismatch, format!("parameter annotated `{ann2}` but `{a}` is expected"));
                    }
                }
                let (cx2, x2) = cx.bind(Decl::Term {
                    name: x.clone(),
                    ctx: Context::empty(),
                    level: 0,
                    ty: (**a).clone(),
                })?;
                let b2 = self.check(&cx2, &rename_term(body, &ren1(x, &x2)), b)?;
                Ok((Term::Lam(x2, Some((**a).clone()), Box::new(b2)), true))
            }
            (Term::TLam(a, n, body), Type::Forall(b, c, m, s)) => {
                let m = Self::level_of(*n, *m)?;
                let (cx2, a2) = cx.bind(Decl::Type {
                    name: a.clone(),
                    ctx: c.clone(),
                    level: m,
                })?;
                let s2 = rename_type(s, &ren1(b, &a2));
                let b2 = self.check(&cx2, &rename_term(body, &ren1(a, &a2)), &s2)?;
                Ok((Term::TLam(a2, m, Box::new(b2)), c.is_empty()))
            }
            (Term::Boxed(h, n, body), Type::Boxed(c, m, s)) => {
                let m = Self::level_of(*n, *m)?;
                let (c_h, s_h) = rename_to_hat(c, s, h)?;
                let (cx2, c2, map) = cx.enter(m, &c_h)?;
                let b2 = self.check(&cx2, &rename_term(body, &map), &rename_type(&s_h, &map))?;
                Ok((Term::boxed(domain(&c2), m, b2), c2.is_empty() && m == 1))
            }
            (Term::Case(s, annot, bs), _) => {
                if cx.pat.is_some() {
                    return err(ErrorKind::TypeMismatch, "case expressions are not allowed inside patterns");
                }
                let (s2, ann) = if annot.level == UNRESOLVED {
                    let (s2, st) = self.infer(cx, s)?;
                    match whnf(&full, &st) {
                        Type::Boxed(c, k, ty) => (s2, CtxType { ctx: c, level: k, ty: *ty }),
                        other => {
                            return err(ErrorKind::TypeMismatch, format!("match on code needs a box, found `{other}`"))
                        }
                    }
                } else {
                    let at = self.kind(cx, &annot.to_type())?;
                    let s2 = self.check(cx, s, &at)?;
                    let (c, k, ty) = unbox(at);
                    (s2, CtxType { ctx: c, level: k, ty })
                };
                let mut out = Vec::with_capacity(bs.len());
                for b in bs {
                    out.push(self.branch(cx, &ann, b, t)?);
                }
                Ok((Term::Case(Box::new(s2), ann, out), false))
            }
            (Term::If(c, a, b), _) => {
                let c2 = self.check(cx, c, &Type::Bool)?;
                let a2 = self.check(cx, a, t)?;
                let b2 = self.check(cx, b, t)?;
                Ok((Term::If(Box::new(c2), Box::new(a2), Box::new(b2)), true))
            }
            (Term::Let(x, e1, e2), _) => {
                let (e1b, t1) = self.infer(cx, e1)?;
                let (cx2, x2) = cx.bind(Decl::Term {
                    name: x.clone(),
                    ctx: Context::empty(),
                    level: 0,
                    ty: t1,
                })?;
                let e2b = self.check(&cx2, &rename_term(e2, &ren1(x, &x2)), t)?;
                Ok((Term::Let(x2, Box::new(e1b), Box::new(e2b)), true))
            }
            (Term::LetBox(h, n, u, e1, e2), _) => {
                let (e1b, t1) = self.infer(cx, e1)?;
                let Type::Boxed(c, m, bt) = whnf(&full, &t1) else {
                    return err(ErrorKind::TypeMismatch, format!("let box needs code, found `{t1}`"));
                };
                let m = Self::level_of(*n, m)?;
                let (c_h, t_h) = rename_to_hat(&c, &bt, h)?;
                let (cx2, u2) = cx.bind(Decl::Term {
                    name: u.clone(),
                    ctx: c_h.clone(),
                    level: m,
                    ty: t_h,
                })?;
                let e2b = self.check(&cx2, &rename_term(e2, &ren1(u, &u2)), t)?;
                Ok((
                    Term::LetBox(domain(&c_h), m, u2, Box::new(e1b), Box::new(e2b)),
                    true,
                ))
            }
            (Term::Nil(None), Type::List(a)) => Ok((Term::Nil(Some((**a).clone())), true)),
            (Term::Cons(h, tl), Type::List(a)) => {
                let h2 = self.check(cx, h, a)?;
                let t2 = self.check(cx, tl, t)?;
                Ok((Term::Cons(Box::new(h2), Box::new(t2)), true))
            }
            _ => {
                let (e2, found) = self.infer(cx, e)?;
                if !type_eq(&full, &found, t) {
                    return err(
                        ErrorKind::TypeMismatch,
                        format!("expected `{t}`, found `{found}`"),
                    );
                }
                Ok((e2, true))
            }
        }
    }

    fn branch(&mut self, cx: &Cx, ann: &CtxType, b: &Branch, result: &Type) -> Res<Branch> {
        let k = ann.level;
        // Pattern variables are renamed apart from everything in scope.
        let (vars, vmap) = cx.freshen(&b.vars);
        let pat = rename_term(&b.pat, &vmap);
        let body = rename_term(&b.body, &vmap);
        let bannot = b.annot.as_ref().map(|a| unbox(rename_type(&a.to_type(), &vmap)));
        let (psi, _) = self.wf_ext(&Cx::plain(Context::empty()), &vars)?;
        for d in &psi.0 {
            if let (Some(x), Some(l)) = (d.name(), d.level()) {
                if l < k {
                    return err(
                        ErrorKind::LevelViolation,
                        format!("pattern variable `{x}` must be at level {k} or above"),
                    );
                }
            }
        }
        let (phi, ti) = match bannot {
            Some((c, l, t)) => {
                if l != k {
                    return err(ErrorKind::LevelViolation, format!("branch annotation at level {l}, case at level {k}"));
                }
                (c, t)
            }
            None => (ann.ctx.clone(), ann.ty.clone()),
        };
        let (phi_h, ti_h) = rename_to_hat(&phi, &ti, &b.hat)?;
        let cxp = Cx::plain(psi.clone());
        let (phi2, map) = self.wf_ext(&cxp, &phi_h)?;
        let inner = cxp.extend(&phi2)?;
        let ti2 = self.kind(&inner, &rename_type(&ti_h, &map))?;
        let cx_pat = Cx {
            g: phi2.clone(),
            pat: Some(PatScope {
                vars: psi.clone(),
                level: k,
            }),
        };
        self.seen.clear();
        let pat2 = self.check(&cx_pat, &rename_term(&pat, &map), &ti2)?;
        let gu = merge(&psi, &chop_lower(&cx.g, k))?;
        let gi = unify::unify_ctxtype(
            &gu,
            &CtxType {
                ctx: ann.ctx.clone(),
                level: k,
                ty: ann.ty.clone(),
            },
            &CtxType {
                ctx: phi2.clone(),
                level: k,
                ty: ti2.clone(),
            },
        );
        let cxb = Cx::plain(append(&gi, &chop_upper(&cx.g, k))?);
        let body2 = self.check(&cxb, &body, result)?;
        Ok(Branch {
            vars: psi,
            hat: domain(&phi2),
            pat: pat2,
            annot: Some(CtxType {
                ctx: phi2,
                level: k,
                ty: ti2,
            }),
            body: body2,
        })
    }
}

fn compose(a: &Renaming, b: &Renaming) -> Renaming {
    let mut out: Renaming = a
        .iter()
        .map(|(x, y)| {
            let z = b.iter().find(|(p, _)| p == y).map_or(y.clone(), |(_, q)| q.clone());
            (x.clone(), z)
        })
        .collect();
    for (p, q) in b {
        if !a.iter().any(|(x, _)| x == p) {
            out.push((p.clone(), q.clone()));
        }
    }
    out
}

// ------------------------------------------------------------------ public API

/// `⊩ Γ`, returning the elaborated context.
pub fn wf_context(g: &Context) -> Result<Context, TypeError> {
    let (c, map) = Tc::default().wf_ext(&Cx::plain(Context::empty()), g)?;
    debug_assert!(map.is_empty());
    Ok(c)
}

/// `Γ ⊩ T`, returning the elaborated type.
pub fn kind_check(g: &Context, t: &Type) -> Result<Type, TypeError> {
    Tc::default().kind(&Cx::plain(g.clone()), t)
}

/// Synthesizes the type of `e` in `Γ`, returning the elaborated term.
pub fn infer(g: &Context, e: &Term) -> Result<(Term, Type), TypeError> {
    Tc::default().infer(&Cx::plain(g.clone()), e)
}

/// Checks `e` against `t` in `Γ`, returning the elaborated (inferable) term.
pub fn check(g: &Context, e: &Term, t: &Type) -> Result<Term, TypeError> {
    Tc::default().check(&Cx::plain(g.clone()), e, t)
}

pub fn type_of(g: &Context, e: &Term) -> Result<Type, TypeError> {
    infer(g, e).map(|(_, t)| t)
}

/// `Γ ⊩ σ : Φ`, returning the elaborated substitution.
pub fn subst_check(g: &Context, sigma: &Subst, phi: &Context) -> Result<Subst, TypeError> {
    Tc::default().subst_items(
        &Cx::plain(g.clone()),
        sigma.0.iter().map(Item::Entry).collect(),
        phi,
        &crate::syntax::name("σ"),
    )
}

/// `Ψ; Γⁿ ⊩ T` for type patterns.
pub fn pat_kind_check(psi: &Context, gamma: &Context, n: Level, t: &Type) -> Result<Type, TypeError> {
    let cx = Cx {
        g: gamma.clone(),
        pat: Some(PatScope {
            vars: psi.clone(),
            level: n,
        }),
    };
    Tc::default().kind(&cx, t)
}

/// `Ψ; Γⁿ ⊩ p : T` for code patterns.
pub fn pat_type_check(
    psi: &Context,
    gamma: &Context,
    n: Level,
    p: &Term,
    t: &Type,
) -> Result<Term, TypeError> {
    let cx = Cx {
        g: gamma.clone(),
        pat: Some(PatScope {
            vars: psi.clone(),
            level: n,
        }),
    };
    Tc::default().check(&cx, p, t)
}

/// `Ψ; Γⁿ ⊩ σ : Φ` for substitution patterns.
pub fn pat_subst_check(
    psi: &Context,
    gamma: &Context,
    n: Level,
    sigma: &Subst,
    phi: &Context,
) -> Result<Subst, TypeError> {
    let cx = Cx {
        g: gamma.clone(),
        pat: Some(PatScope {
            vars: psi.clone(),
            level: n,
        }),
    };
    Tc::default().subst_items(&cx, sigma.0.iter().map(Item::Entry).collect(), phi, &crate::syntax::name("σ"))
}

/// Checks `Ψ ⊩ box(Γ̂ⁿ. p) : [Γ ⊢n T]` with the ordinary rules.
pub fn pattern_reflect(psi: &Context, gamma: &Context, n: Level, p: &Term, t: &Type) -> Result<(), TypeError> {
    let bt = Type::boxed(gamma.clone(), n, t.clone());
    check(psi, &Term::boxed(domain(gamma), n, p.clone()), &bt).map(|_| ())
}

/// An elaborated program.
#[derive(Clone, Debug)]
pub struct Checked {
    pub defs: Vec<(Name, Type, Term)>,
    pub main: Option<(Term, Type)>,
}

/// Checks every definition in order, then the entry expression. Each
/// definition sees the earlier ones and itself as level-0 variables.
pub fn check_program(p: &Program) -> Result<Checked, TypeError> {
    let mut g = Context::empty();
    let mut defs = Vec::new();
    for Def { name, ty, body } in &p.defs {
        let wrap = |e: TypeError| TypeError {
            msg: format!("{} (in definition `{name}`)", e.msg),
            ..e
        };
        let t = kind_check(&g, ty).map_err(wrap)?;
        if g.contains(name) {
            return Err(wrap(TypeError::new(
                ErrorKind::ContextMalformed,
                format!("`{name}` is defined twice"),
            )));
        }
        let fix = Term::Fix(name.clone(), t.clone(), Box::new(body.clone()));
        let (e, _) = infer(&g, &fix).map_err(wrap)?;
        g = context::insert(
            &g,
            Decl::Term {
                name: name.clone(),
                ctx: Context::empty(),
                level: 0,
                ty: t.clone(),
            },
        )?;
        defs.push((name.clone(), t, e));
    }
    let main = match &p.main {
        Some(m) => Some(infer(&g, m)?),
        None => None,
    };
    Ok(Checked { defs, main })
}

impl Checked {
    /// The definitions as closed terms, each with earlier ones substituted in.
    pub fn closed_defs(&self) -> Result<Vec<(Name, Term)>, SubstError> {
        let mut sub = Sub::default();
        let mut out = Vec::new();
        for (x, _, e) in &self.defs {
            let c = apply_term(&sub, e)?;
            sub.push(
                HatEntry {
                    name: x.clone(),
                    level: 0,
                    kind: Kind::Term,
                },
                SubstEntry::Term(Hat::empty(), 0, c.clone()),
            );
            out.push((x.clone(), c));
        }
        Ok(out)
    }

    /// The entry expression with every definition substituted in.
    pub fn closed_main(&self) -> Result<Option<Term>, SubstError> {
        let Some((m, _)) = &self.main else {
            return Ok(None);
        };
        let mut sub = Sub::default();
        for (x, c) in self.closed_defs()? {
            sub.push(
                HatEntry {
                    name: x,
                    level: 0,
                    kind: Kind::Term,
                },
                SubstEntry::Term(Hat::empty(), 0, c),
            );
        }
        Ok(Some(apply_term(&sub, m)?))
    }
}
