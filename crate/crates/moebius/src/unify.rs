//! Unification of types, contexts, substitutions and contextual types.
//!
//! Unification refines a constraint context: unsolved type variables whose
//! closure substitution is a renaming of distinct bound variables are
//! flexible and get solved in place. Failure appends `#`.

use std::collections::HashSet;

use crate::context::{absurd, append, chop_lower, domain, merge};
use crate::subst::subst_type;
use crate::syntax::{
    alpha_eq_term, fresh, free_in_type, rename_ctx_binders, rename_type, Context, CtxType, Decl,
    Hat, Kind, Name, Renaming, Subst, SubstEntry, Term, Type,
};
use crate::typing::kind_check;

/// Does `a` occur in `t`, directly or through solved variables of `g`?
pub fn occurs(g: &Context, a: &Name, t: &Type) -> bool {
    let mut seen = HashSet::new();
    let mut todo: Vec<Name> = free_in_type(t).into_iter().collect();
    while let Some(b) = todo.pop() {
        if &b == a {
            return true;
        }
        if !seen.insert(b.clone()) {
            continue;
        }
        if let Some(Decl::Solved { sol, hat, .. }) = g.lookup(&b) {
            todo.extend(free_in_type(sol).into_iter().filter(|n| !hat.contains(n)));
        }
    }
    false
}

/// `bound` extended with `c`, where `c` shadows equally named entries.
fn scope(bound: &Context, c: &Context) -> Context {
    let names: HashSet<&Name> = c.names().collect();
    let kept = Context(
        bound
            .0
            .iter()
            .filter(|d| d.name().is_none_or(|n| !names.contains(n)))
            .cloned()
            .collect(),
    );
    append(&kept, c)
        .or_else(|_| merge(&kept, c))
        .unwrap_or_else(|_| {
            let mut v = kept.0;
            v.extend(c.0.iter().cloned());
            Context(v)
        })
}

fn common(a: &[Name], b: &[Name]) -> Vec<Name> {
    a.iter()
        .zip(b)
        .map(|(x, y)| if x == y { x.clone() } else { fresh(x) })
        .collect()
}

/// Renames both contexts onto common binder names.
fn align(a: &Context, b: &Context) -> (Context, Context, Renaming, Renaming) {
    let an: Vec<Name> = a.names().cloned().collect();
    let bn: Vec<Name> = b.names().cloned().collect();
    let names = common(&an, &bn);
    let (a2, m1) = rename_ctx_binders(a, &names[..an.len().min(names.len())], &Vec::new());
    let (b2, m2) = rename_ctx_binders(b, &names[..bn.len().min(names.len())], &Vec::new());
    (a2, b2, m1, m2)
}

fn hat_map(h: &Hat, names: &[Name]) -> Renaming {
    h.names()
        .zip(names)
        .filter(|(a, b)| a != b)
        .map(|(a, b)| (a.clone(), b.clone()))
        .collect()
}

struct U<'a> {
    g: Context,
    frozen: &'a HashSet<Name>,
}

impl U<'_> {
    fn fail(&mut self) {
        self.g = absurd(&self.g);
    }

    fn failed(&self) -> bool {
        self.g.has_absurd()
    }

    fn decl<'b>(&'b self, bound: &'b Context, x: &Name) -> Option<&'b Decl> {
        bound.lookup(x).or_else(|| self.g.lookup(x))
    }

    fn unfold(&self, bound: &Context, t: &Type) -> Type {
        let mut t = t.clone();
        for _ in 0..256 {
            let Type::Var(x, s) = &t else { break };
            if bound.contains(x) {
                break;
            }
            match self.g.lookup(x) {
                Some(Decl::Solved { hat, sol, .. }) => match subst_type(s, hat, sol) {
                    Ok(u) => t = u,
                    Err(_) => break,
                },
                _ => break,
            }
        }
        t
    }

    /// Unsolved, not frozen, and applied to distinct bound variables.
    fn flex(&self, bound: &Context, x: &Name, s: &Subst) -> bool {
        if bound.contains(x) || self.frozen.contains(x) {
            return false;
        }
        if !matches!(self.g.lookup(x), Some(Decl::Type { .. })) {
            return false;
        }
        let mut seen = HashSet::new();
        s.0.iter().all(|e| match e {
            SubstEntry::RenTerm(y, _) | SubstEntry::RenType(y, _) => {
                bound.contains(y) && seen.insert(y.clone())
            }
            _ => false,
        })
    }

    fn solve(&mut self, bound: &Context, x: &Name, s: &Subst, t: &Type) {
        let Some(pos) = self.g.position(x) else {
            return self.fail();
        };
        let Decl::Type { ctx, level, .. } = self.g.0[pos].clone() else {
            return self.fail();
        };
        let local_names: Vec<Name> = ctx.names().cloned().collect();
        let z: Vec<Name> = local_names.iter().map(|n| fresh(n)).collect();
        let (local_z, _) = rename_ctx_binders(&ctx, &z, &Vec::new());
        let inv: Renaming = s
            .0
            .iter()
            .zip(&z)
            .map(|(e, zn)| match e {
                SubstEntry::RenTerm(y, _) | SubstEntry::RenType(y, _) => (y.clone(), zn.clone()),
                _ => unreachable!("flexible closures carry renamings"),
            })
            .collect();
        if occurs(&self.g, x, t) {
            return self.fail();
        }
        let prefix = Context(self.g.0[..pos].to_vec());
        for f in free_in_type(t) {
            if bound.contains(&f) {
                if !inv.iter().any(|(y, _)| *y == f) {
                    return self.fail();
                }
            } else if !prefix.contains(&f) {
                return self.fail();
            }
        }
        let sol = rename_type(t, &inv);
        let Ok(scope_ctx) = append(&chop_lower(&prefix, level), &local_z) else {
            return self.fail();
        };
        if kind_check(&scope_ctx, &sol).is_err() {
            return self.fail();
        }
        self.g.0[pos] = Decl::Solved {
            name: x.clone(),
            ctx,
            level,
            hat: domain(&local_z),
            sol,
        };
    }

    fn ty(&mut self, bound: &Context, a: &Type, b: &Type) {
        if self.failed() {
            return;
        }
        let a = self.unfold(bound, a);
        let b = self.unfold(bound, b);
        match (&a, &b) {
            (Type::Var(x, s), Type::Var(y, t)) if x == y => {
                let Some(local) = self.decl(bound, x).and_then(Decl::local).cloned() else {
                    return self.fail();
                };
                self.subst(bound, s, t, &local);
            }
            (Type::Var(x, s), Type::Var(y, t)) => {
                let (fx, fy) = (self.flex(bound, x, s), self.flex(bound, y, t));
                match (fx, fy) {
                    (true, true) => {
                        if self.g.position(x) > self.g.position(y) {
                            self.solve(bound, x, s, &b)
                        } else {
                            self.solve(bound, y, t, &a)
                        }
                    }
                    (true, false) => self.solve(bound, x, s, &b),
                    (false, true) => self.solve(bound, y, t, &a),
                    (false, false) => self.fail(),
                }
            }
            (Type::Var(x, s), _) if self.flex(bound, x, s) => self.solve(bound, x, s, &b),
            (_, Type::Var(y, t)) if self.flex(bound, y, t) => self.solve(bound, y, t, &a),
            (Type::Arrow(a1, a2), Type::Arrow(b1, b2)) => {
                self.ty(bound, a1, b1);
                self.ty(bound, a2, b2);
            }
            (Type::List(x), Type::List(y)) => self.ty(bound, x, y),
            (Type::Int, Type::Int) | (Type::Bool, Type::Bool) => {}
            (Type::Forall(x, c1, n, t1), Type::Forall(y, c2, m, t2)) => {
                if n != m {
                    return self.fail();
                }
                let before = self.g.clone();
                let (c1a, c2a, _, _) = align(c1, c2);
                self.ctx(&chop_lower(bound, *n), &c1a, &c2a);
                if self.g != before {
                    return self.fail();
                }
                let z = if x == y { x.clone() } else { fresh(x) };
                let inner = scope(
                    bound,
                    &Context(vec![Decl::Type {
                        name: z.clone(),
                        ctx: c1.clone(),
                        level: *n,
                    }]),
                );
                let t1 = rename_type(t1, &ren(x, &z));
                let t2 = rename_type(t2, &ren(y, &z));
                self.ty(&inner, &t1, &t2);
            }
            (Type::Boxed(c1, n, t1), Type::Boxed(c2, m, t2)) => {
                if n != m {
                    return self.fail();
                }
                let base = chop_lower(bound, *n);
                let (c1a, c2a, m1, m2) = align(c1, c2);
                self.ctx(&base, &c1a, &c2a);
                let inner = scope(&base, &c1a);
                self.ty(&inner, &rename_type(t1, &m1), &rename_type(t2, &m2));
            }
            _ => self.fail(),
        }
    }

    /// Pointwise unification of two contexts with the same binder names.
    fn ctx(&mut self, bound: &Context, a: &Context, b: &Context) {
        if self.failed() {
            return;
        }
        if a.len() != b.len() {
            return self.fail();
        }
        let mut running = bound.clone();
        for (d, e) in a.0.iter().zip(&b.0) {
            if d.kind() != e.kind() || d.level() != e.level() {
                return self.fail();
            }
            match (d, e) {
                (
                    Decl::Term {
                        ctx: l1,
                        ty: t1,
                        level,
                        ..
                    },
                    Decl::Term { ctx: l2, ty: t2, .. },
                ) => {
                    let base = chop_lower(&running, *level);
                    let (l1a, l2a, m1, m2) = align(l1, l2);
                    self.ctx(&base, &l1a, &l2a);
                    let inner = scope(&base, &l1a);
                    self.ty(&inner, &rename_type(t1, &m1), &rename_type(t2, &m2));
                }
                (Decl::Type { ctx: l1, level, .. }, Decl::Type { ctx: l2, .. }) => {
                    let (l1a, l2a, _, _) = align(l1, l2);
                    self.ctx(&chop_lower(&running, *level), &l1a, &l2a);
                }
                (Decl::Absurd, Decl::Absurd) => {}
                _ => return self.fail(),
            }
            if self.failed() {
                return;
            }
            running = scope(&running, &Context(vec![d.clone()]));
        }
    }

    fn entry_type(&self, bound: &Context, e: &SubstEntry, local: &Context) -> Option<(Hat, Type)> {
        match e {
            SubstEntry::Type(h, _, t) => Some((h.clone(), t.clone())),
            SubstEntry::RenType(x, _) => {
                let own = self.decl(bound, x).and_then(Decl::local).cloned()?;
                if own.names().count() != local.names().count() {
                    return None;
                }
                let h = domain(&own);
                Some((h.clone(), Type::Var(x.clone(), Subst::id(&h))))
            }
            _ => None,
        }
    }

    fn subst(&mut self, bound: &Context, s1: &Subst, s2: &Subst, dom: &Context) {
        let decls: Vec<&Decl> = dom.0.iter().filter(|d| d.name().is_some()).collect();
        if s1.len() != s2.len() || s1.len() != decls.len() {
            return self.fail();
        }
        for ((e1, e2), d) in s1.0.iter().zip(&s2.0).zip(decls) {
            if self.failed() {
                return;
            }
            let local = d.local().unwrap();
            let n = d.level().unwrap();
            match (e1, e2) {
                (SubstEntry::RenType(x, _), SubstEntry::RenType(y, _)) if x == y => {}
                (SubstEntry::RenTerm(x, _), SubstEntry::RenTerm(y, _)) => {
                    if x != y {
                        self.fail();
                    }
                }
                (SubstEntry::Term(h1, _, t1), SubstEntry::Term(h2, _, t2)) => {
                    let ok = h1.len() == h2.len()
                        && alpha_eq_term(
                            &Term::boxed(h1.clone(), 0, t1.clone()),
                            &Term::boxed(h2.clone(), 0, t2.clone()),
                        );
                    if !ok {
                        self.fail();
                    }
                }
                (SubstEntry::RenTerm(x, _), SubstEntry::Term(h, _, t))
                | (SubstEntry::Term(h, _, t), SubstEntry::RenTerm(x, _)) => {
                    if !alpha_eq_term(&Term::Var(x.clone(), Subst::id(h)), t) {
                        self.fail();
                    }
                }
                _ if e1.kind() == Kind::Type && e2.kind() == Kind::Type => {
                    let (Some((h1, t1)), Some((h2, t2))) = (
                        self.entry_type(bound, e1, local),
                        self.entry_type(bound, e2, local),
                    ) else {
                        return self.fail();
                    };
                    if h1.len() != h2.len() || h1.len() != local.names().count() {
                        return self.fail();
                    }
                    let n1: Vec<Name> = h1.names().cloned().collect();
                    let n2: Vec<Name> = h2.names().cloned().collect();
                    let names = common(&n1, &n2);
                    let (local_c, _) = rename_ctx_binders(local, &names, &Vec::new());
                    let inner = scope(&chop_lower(bound, n), &local_c);
                    self.ty(
                        &inner,
                        &rename_type(&t1, &hat_map(&h1, &names)),
                        &rename_type(&t2, &hat_map(&h2, &names)),
                    );
                }
                _ => self.fail(),
            }
        }
    }
}

fn ren(a: &Name, b: &Name) -> Renaming {
    if a == b {
        Vec::new()
    } else {
        vec![(a.clone(), b.clone())]
    }
}

fn run(g: &Context, frozen: &HashSet<Name>, f: impl FnOnce(&mut U)) -> Context {
    let mut u = U {
        g: g.clone(),
        frozen,
    };
    if !u.failed() {
        f(&mut u);
    }
    u.g
}

/// `Γ; Φ ⊩ T = S ↘ Γ′`
pub fn unify_type(g: &Context, phi: &Context, t: &Type, s: &Type) -> Context {
    run(g, &HashSet::new(), |u| u.ty(phi, t, s))
}

/// `Γ; Γ0 ⊩ Ψ = Φ ↘ Γ′`. Binders of `phi` are identified positionally with
/// those of `psi`.
pub fn unify_context(g: &Context, g0: &Context, psi: &Context, phi: &Context) -> Context {
    run(g, &HashSet::new(), |u| {
        if psi.len() != phi.len() {
            return u.fail();
        }
        let (a, b, _, _) = align(psi, phi);
        u.ctx(g0, &a, &b)
    })
}

/// `Γ; Φ ⊩ σ1 = σ2 : Ψ ↘ Γ′`
pub fn unify_subst(g: &Context, phi: &Context, s1: &Subst, s2: &Subst, psi: &Context) -> Context {
    run(g, &HashSet::new(), |u| u.subst(phi, s1, s2, psi))
}

/// `Γ ⊩ (Φ ⊢k T) = (Φi ⊢k Ti) ↘ Γ′`
pub fn unify_ctxtype(g: &Context, a: &CtxType, b: &CtxType) -> Context {
    match_ctxtype(g, a, b, &HashSet::new())
}

/// [`unify_ctxtype`] with the variables in `frozen` treated as rigid.
pub fn match_ctxtype(g: &Context, a: &CtxType, b: &CtxType, frozen: &HashSet<Name>) -> Context {
    run(g, frozen, |u| {
        if a.level != b.level || a.ctx.len() != b.ctx.len() {
            return u.fail();
        }
        let (c1, c2, m1, m2) = align(&a.ctx, &b.ctx);
        u.ctx(&Context::empty(), &c1, &c2);
        u.ty(&c1, &rename_type(&a.ty, &m1), &rename_type(&b.ty, &m2));
    })
}

/// `Γ′ ⪰ Γ`: `Γ′` is `Γ` with some type variables solved and possibly `#`.
pub fn refines(g2: &Context, g1: &Context) -> bool {
    let d2: Vec<&Decl> = g2.0.iter().filter(|d| !matches!(d, Decl::Absurd)).collect();
    let d1: Vec<&Decl> = g1.0.iter().filter(|d| !matches!(d, Decl::Absurd)).collect();
    if g1.has_absurd() && !g2.has_absurd() {
        return false;
    }
    d1.len() == d2.len()
        && d1.iter().zip(&d2).all(|(a, b)| match (a, b) {
            (
                Decl::Type { name, ctx, level },
                Decl::Solved {
                    name: n2,
                    ctx: c2,
                    level: l2,
                    ..
                },
            ) => name == n2 && ctx == c2 && level == l2,
            _ => a == b,
        })
}

/// Pairs each flexible variable solved in `after` with its solution.
pub fn solutions(after: &Context) -> Vec<(Name, Hat, Type)> {
    after
        .0
        .iter()
        .filter_map(|d| match d {
            Decl::Solved { name, hat, sol, .. } => Some((name.clone(), hat.clone(), sol.clone())),
            _ => None,
        })
        .collect()
}
