//! Equality of types, contexts and substitutions modulo solved variables.

use std::cell::Cell;

use crate::subst::subst_type;
use crate::syntax::{
    alpha_eq_term, fresh, rename_ctx_binders, rename_type, Context, Decl, Hat, Name, Renaming,
    Subst, SubstEntry, Term, Type,
};

thread_local! {
    static CONSTRAINTS: Cell<bool> = const { Cell::new(true) };
}

/// Runs `f` with solved-variable lookup switched off on this thread.
pub fn without_constraints<R>(f: impl FnOnce() -> R) -> R {
    let prev = CONSTRAINTS.with(|c| c.replace(false));
    let out = f();
    CONSTRAINTS.with(|c| c.set(prev));
    out
}

pub fn constraints_enabled() -> bool {
    CONSTRAINTS.with(Cell::get)
}

/// Unfolds solved variables at the head of `t`.
pub fn whnf(g: &Context, t: &Type) -> Type {
    whnf_bound(g, &[], t)
}

fn whnf_bound(g: &Context, bound: &[Name], t: &Type) -> Type {
    let mut t = t.clone();
    if !constraints_enabled() {
        return t;
    }
    for _ in 0..256 {
        let Type::Var(a, s) = &t else { return t };
        if bound.contains(a) {
            return t;
        }
        match g.lookup(a) {
            Some(Decl::Solved { hat, sol, .. }) => match subst_type(s, hat, sol) {
                Ok(u) => t = u,
                Err(_) => return t,
            },
            _ => return t,
        }
    }
    t
}

/// Fresh names for positions where two binder lists disagree.
fn common_names<'a>(a: impl Iterator<Item = &'a Name>, b: impl Iterator<Item = &'a Name>) -> Vec<Name> {
    a.zip(b)
        .map(|(x, y)| if x == y { x.clone() } else { fresh(x) })
        .collect()
}

struct Eq<'g> {
    g: &'g Context,
    bound: Vec<Name>,
}

impl Eq<'_> {
    fn ty(&mut self, a: &Type, b: &Type) -> bool {
        if self.g.has_absurd() && constraints_enabled() {
            return true;
        }
        let a = whnf_bound(self.g, &self.bound, a);
        let b = whnf_bound(self.g, &self.bound, b);
        match (&a, &b) {
            (Type::Var(x, s), Type::Var(y, t)) => x == y && self.subst(s, t),
            (Type::Arrow(a1, a2), Type::Arrow(b1, b2)) => self.ty(a1, b1) && self.ty(a2, b2),
            (Type::Int, Type::Int) | (Type::Bool, Type::Bool) => true,
            (Type::List(x), Type::List(y)) => self.ty(x, y),
            (Type::Forall(x, c1, n1, t1), Type::Forall(y, c2, n2, t2)) => {
                if n1 != n2 {
                    return false;
                }
                let k = self.bound.len();
                let ok = self.ctx_then(c1, c2, |_, _, _| true);
                if !ok {
                    return false;
                }
                let ok = if x == y {
                    self.bound.push(x.clone());
                    self.ty(t1, t2)
                } else {
                    let z = fresh(x);
                    self.bound.push(z.clone());
                    let t1 = rename_type(t1, &vec![(x.clone(), z.clone())]);
                    let t2 = rename_type(t2, &vec![(y.clone(), z)]);
                    self.ty(&t1, &t2)
                };
                self.bound.truncate(k);
                ok
            }
            (Type::Boxed(c1, n1, t1), Type::Boxed(c2, n2, t2)) => {
                n1 == n2 && self.ctx_then(c1, c2, |s, m1, m2| s.ty(&rename_type(t1, m1), &rename_type(t2, m2)))
            }
            _ => false,
        }
    }

    /// Compares two contexts pointwise and, if they agree, runs `k` with the
    /// renamings that bring both onto common binder names.
    fn ctx_then(
        &mut self,
        a: &Context,
        b: &Context,
        k: impl FnOnce(&mut Self, &Renaming, &Renaming) -> bool,
    ) -> bool {
        if a.len() != b.len() {
            return false;
        }
        let names = common_names(a.names(), b.names());
        let (a2, m1) = rename_ctx_binders(a, &names, &Vec::new());
        let (b2, m2) = rename_ctx_binders(b, &names, &Vec::new());
        let mark = self.bound.len();
        let mut ok = true;
        for (d, e) in a2.0.iter().zip(&b2.0) {
            if !self.decl(d, e) {
                ok = false;
                break;
            }
            if let Some(n) = d.name() {
                self.bound.push(n.clone());
            }
        }
        let ok = ok && k(self, &m1, &m2);
        self.bound.truncate(mark);
        ok
    }

    fn decl(&mut self, d: &Decl, e: &Decl) -> bool {
        match (d, e) {
            (
                Decl::Term {
                    ctx: c1,
                    level: n1,
                    ty: t1,
                    ..
                },
                Decl::Term {
                    ctx: c2,
                    level: n2,
                    ty: t2,
                    ..
                },
            ) => {
                n1 == n2
                    && self.ctx_then(c1, c2, |s, m1, m2| {
                        s.ty(&rename_type(t1, m1), &rename_type(t2, m2))
                    })
            }
            (
                Decl::Type {
                    ctx: c1, level: n1, ..
                },
                Decl::Type {
                    ctx: c2, level: n2, ..
                },
            ) => n1 == n2 && self.ctx_then(c1, c2, |_, _, _| true),
            (Decl::Absurd, Decl::Absurd) => true,
            _ => false,
        }
    }

    fn subst(&mut self, a: &Subst, b: &Subst) -> bool {
        a.len() == b.len() && a.0.iter().zip(&b.0).all(|(x, y)| self.entry(x, y))
    }

    fn entry(&mut self, a: &SubstEntry, b: &SubstEntry) -> bool {
        match (a, b) {
            (SubstEntry::RenType(x, _), SubstEntry::RenType(y, _)) => {
                x == y || self.ty(&Type::Var(x.clone(), Subst::empty()), &Type::Var(y.clone(), Subst::empty()))
            }
            (SubstEntry::RenTerm(x, _), SubstEntry::RenTerm(y, _)) => x == y,
            (SubstEntry::Type(h1, _, t1), SubstEntry::Type(h2, _, t2)) => self.hats(h1, h2, |s, m1, m2| {
                s.ty(&rename_type(t1, m1), &rename_type(t2, m2))
            }),
            (SubstEntry::RenType(x, _), SubstEntry::Type(h, _, t))
            | (SubstEntry::Type(h, _, t), SubstEntry::RenType(x, _)) => {
                let v = Type::Var(x.clone(), Subst::id(h));
                let mark = self.bound.len();
                self.bound.extend(h.names().cloned());
                let ok = self.ty(&v, t);
                self.bound.truncate(mark);
                ok
            }
            (SubstEntry::Term(h1, _, t1), SubstEntry::Term(h2, _, t2)) => {
                h1.len() == h2.len()
                    && alpha_eq_term(
                        &Term::boxed(h1.clone(), 0, t1.clone()),
                        &Term::boxed(h2.clone(), 0, t2.clone()),
                    )
            }
            (SubstEntry::RenTerm(x, _), SubstEntry::Term(h, _, t))
            | (SubstEntry::Term(h, _, t), SubstEntry::RenTerm(x, _)) => {
                alpha_eq_term(&Term::Var(x.clone(), Subst::id(h)), t)
            }
            _ => false,
        }
    }

    fn hats(
        &mut self,
        a: &Hat,
        b: &Hat,
        k: impl FnOnce(&mut Self, &Renaming, &Renaming) -> bool,
    ) -> bool {
        if a.len() != b.len() {
            return false;
        }
        let names = common_names(a.names(), b.names());
        let m1: Renaming = a.names().cloned().zip(names.iter().cloned()).filter(|(x, y)| x != y).collect();
        let m2: Renaming = b.names().cloned().zip(names.iter().cloned()).filter(|(x, y)| x != y).collect();
        let mark = self.bound.len();
        self.bound.extend(names);
        let ok = k(self, &m1, &m2);
        self.bound.truncate(mark);
        ok
    }
}

/// `Ψ ⊩ T = S`
pub fn type_eq(g: &Context, a: &Type, b: &Type) -> bool {
    Eq {
        g,
        bound: Vec::new(),
    }
    .ty(a, b)
}

/// `Ψ ⊩ Φ = Φ'`, up to the names of the declarations.
pub fn context_eq(g: &Context, a: &Context, b: &Context) -> bool {
    if g.has_absurd() {
        return true;
    }
    Eq {
        g,
        bound: Vec::new(),
    }
    .ctx_then(a, b, |_, _, _| true)
}

/// `Ψ ⊩ σ = σ'`
pub fn subst_eq(g: &Context, a: &Subst, b: &Subst) -> bool {
    if g.has_absurd() {
        return true;
    }
    Eq {
        g,
        bound: Vec::new(),
    }
    .subst(a, b)
}
