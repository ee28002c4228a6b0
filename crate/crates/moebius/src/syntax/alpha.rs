//! Alpha-equivalence. Type annotations on binders, ascriptions and empty
//! lists are elaboration artifacts and are ignored.

use super::{Branch, Context, CtxType, Decl, Hat, Name, RawItem, Subst, SubstEntry, Term, Type};

#[derive(Default)]
struct Env {
    pairs: Vec<(Name, Name)>,
}

impl Env {
    fn var(&self, a: &Name, b: &Name) -> bool {
        for (l, r) in self.pairs.iter().rev() {
            if l == a || r == b {
                return l == a && r == b;
            }
        }
        a == b
    }

    fn push(&mut self, a: &Name, b: &Name) {
        self.pairs.push((a.clone(), b.clone()));
    }

    fn mark(&self) -> usize {
        self.pairs.len()
    }

    fn reset(&mut self, k: usize) {
        self.pairs.truncate(k);
    }

    fn hat(&mut self, a: &Hat, b: &Hat) -> bool {
        if a.len() != b.len() {
            return false;
        }
        for (x, y) in a.0.iter().zip(&b.0) {
            if x.level != y.level || x.kind != y.kind {
                return false;
            }
            self.push(&x.name, &y.name);
        }
        true
    }

    fn ty(&mut self, s: &Type, t: &Type) -> bool {
        match (s, t) {
            (Type::Var(a, sa), Type::Var(b, sb)) => self.var(a, b) && self.subst(sa, sb),
            (Type::Raw(a, ia), Type::Raw(b, ib)) => self.var(a, b) && self.items(ia, ib),
            (Type::Arrow(a1, b1), Type::Arrow(a2, b2)) => self.ty(a1, a2) && self.ty(b1, b2),
            (Type::Forall(a, c1, n1, t1), Type::Forall(b, c2, n2, t2)) => {
                if n1 != n2 {
                    return false;
                }
                let k = self.mark();
                let ok = self.ctx(c1, c2);
                self.reset(k);
                if !ok {
                    return false;
                }
                self.push(a, b);
                let ok = self.ty(t1, t2);
                self.reset(k);
                ok
            }
            (Type::Boxed(c1, n1, t1), Type::Boxed(c2, n2, t2)) => {
                let k = self.mark();
                let ok = n1 == n2 && self.ctx(c1, c2) && self.ty(t1, t2);
                self.reset(k);
                ok
            }
            (Type::Int, Type::Int) | (Type::Bool, Type::Bool) => true,
            (Type::List(a), Type::List(b)) => self.ty(a, b),
            _ => false,
        }
    }

    fn items(&mut self, a: &Option<Vec<RawItem>>, b: &Option<Vec<RawItem>>) -> bool {
        match (a, b) {
            (None, None) => true,
            (Some(a), Some(b)) => a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x == y),
            _ => false,
        }
    }

    fn subst(&mut self, a: &Subst, b: &Subst) -> bool {
        if a.len() != b.len() {
            return false;
        }
        a.0.iter().zip(&b.0).all(|(x, y)| self.entry(x, y))
    }

    fn entry(&mut self, a: &SubstEntry, b: &SubstEntry) -> bool {
        match (a, b) {
            (SubstEntry::Term(h1, n1, t1), SubstEntry::Term(h2, n2, t2)) => {
                let k = self.mark();
                let ok = n1 == n2 && self.hat(h1, h2) && self.term(t1, t2);
                self.reset(k);
                ok
            }
            (SubstEntry::Type(h1, n1, t1), SubstEntry::Type(h2, n2, t2)) => {
                let k = self.mark();
                let ok = n1 == n2 && self.hat(h1, h2) && self.ty(t1, t2);
                self.reset(k);
                ok
            }
            (SubstEntry::RenTerm(x, n1), SubstEntry::RenTerm(y, n2))
            | (SubstEntry::RenType(x, n1), SubstEntry::RenType(y, n2)) => {
                n1 == n2 && self.var(x, y)
            }
            _ => false,
        }
    }

    /// Compares two contexts, leaving their declared names paired on success.
    fn ctx(&mut self, a: &Context, b: &Context) -> bool {
        if a.len() != b.len() {
            return false;
        }
        for (x, y) in a.0.iter().zip(&b.0) {
            if !self.decl(x, y) {
                return false;
            }
            if let (Some(n), Some(m)) = (x.name(), y.name()) {
                self.push(n, m);
            }
        }
        true
    }

    fn decl(&mut self, a: &Decl, b: &Decl) -> bool {
        let k = self.mark();
        let ok = match (a, b) {
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
            ) => n1 == n2 && self.ctx(c1, c2) && self.ty(t1, t2),
            (
                Decl::Type {
                    ctx: c1, level: n1, ..
                },
                Decl::Type {
                    ctx: c2, level: n2, ..
                },
            ) => n1 == n2 && self.ctx(c1, c2),
            (
                Decl::Solved {
                    ctx: c1,
                    level: n1,
                    hat: h1,
                    sol: s1,
                    ..
                },
                Decl::Solved {
                    ctx: c2,
                    level: n2,
                    hat: h2,
                    sol: s2,
                    ..
                },
            ) => {
                n1 == n2 && {
                    let ok = self.ctx(c1, c2);
                    self.reset(k);
                    ok
                } && self.hat(h1, h2)
                    && self.ty(s1, s2)
            }
            (Decl::Absurd, Decl::Absurd) => true,
            _ => false,
        };
        self.reset(k);
        ok
    }

    fn ctxtype(&mut self, a: &CtxType, b: &CtxType) -> bool {
        let k = self.mark();
        let ok = a.level == b.level && self.ctx(&a.ctx, &b.ctx) && self.ty(&a.ty, &b.ty);
        self.reset(k);
        ok
    }

    fn branch(&mut self, a: &Branch, b: &Branch) -> bool {
        let k = self.mark();
        let mut ok = self.ctx(&a.vars, &b.vars);
        if ok {
            let k2 = self.mark();
            ok = self.hat(&a.hat, &b.hat) && self.term(&a.pat, &b.pat);
            self.reset(k2);
        }
        ok = ok
            && match (&a.annot, &b.annot) {
                (Some(x), Some(y)) => self.ctxtype(x, y),
                (None, None) => true,
                _ => false,
            };
        ok = ok && self.term(&a.body, &b.body);
        self.reset(k);
        ok
    }

    fn bind<F: FnOnce(&mut Self) -> bool>(&mut self, a: &Name, b: &Name, f: F) -> bool {
        let k = self.mark();
        self.push(a, b);
        let ok = f(self);
        self.reset(k);
        ok
    }

    fn term(&mut self, s: &Term, t: &Term) -> bool {
        match (s, t) {
            (Term::Ann(e, _), _) => self.term(e, t),
            (_, Term::Ann(e, _)) => self.term(s, e),
            (Term::Var(x, sx), Term::Var(y, sy)) => self.var(x, y) && self.subst(sx, sy),
            (Term::Raw(x, ix), Term::Raw(y, iy)) => self.var(x, y) && self.items(ix, iy),
            (Term::Lam(x, _, e1), Term::Lam(y, _, e2)) => self.bind(x, y, |s| s.term(e1, e2)),
            (Term::Fix(x, _, e1), Term::Fix(y, _, e2)) => self.bind(x, y, |s| s.term(e1, e2)),
            (Term::App(a1, b1), Term::App(a2, b2)) | (Term::Cons(a1, b1), Term::Cons(a2, b2)) => {
                self.term(a1, a2) && self.term(b1, b2)
            }
            (Term::TLam(a, n1, e1), Term::TLam(b, n2, e2)) => {
                n1 == n2 && self.bind(a, b, |s| s.term(e1, e2))
            }
            (Term::TApp(e1, h1, n1, t1), Term::TApp(e2, h2, n2, t2)) => {
                if n1 != n2 || !self.term(e1, e2) {
                    return false;
                }
                let k = self.mark();
                let ok = self.hat(h1, h2) && self.ty(t1, t2);
                self.reset(k);
                ok
            }
            (Term::Boxed(h1, n1, e1), Term::Boxed(h2, n2, e2)) => {
                let k = self.mark();
                let ok = n1 == n2 && self.hat(h1, h2) && self.term(e1, e2);
                self.reset(k);
                ok
            }
            (Term::LetBox(h1, n1, u1, a1, b1), Term::LetBox(h2, n2, u2, a2, b2)) => {
                n1 == n2
                    && h1.len() == h2.len()
                    && h1.0.iter().zip(&h2.0).all(|(x, y)| x.level == y.level && x.kind == y.kind)
                    && self.term(a1, a2)
                    && self.bind(u1, u2, |s| s.term(b1, b2))
            }
            (Term::Let(x, a1, b1), Term::Let(y, a2, b2)) => {
                self.term(a1, a2) && self.bind(x, y, |s| s.term(b1, b2))
            }
            (Term::Case(s1, a1, bs1), Term::Case(s2, a2, bs2)) => {
                self.term(s1, s2)
                    && self.ctxtype(a1, a2)
                    && bs1.len() == bs2.len()
                    && bs1.iter().zip(bs2).all(|(x, y)| self.branch(x, y))
            }
            (Term::If(a1, b1, c1), Term::If(a2, b2, c2)) => {
                self.term(a1, a2) && self.term(b1, b2) && self.term(c1, c2)
            }
            (Term::Int(a), Term::Int(b)) => a == b,
            (Term::Bool(a), Term::Bool(b)) => a == b,
            (Term::Nil(_), Term::Nil(_)) => true,
            (Term::Prim(p, xs), Term::Prim(q, ys)) => {
                p == q && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| self.term(x, y))
            }
            _ => false,
        }
    }
}

pub fn alpha_eq_term(a: &Term, b: &Term) -> bool {
    Env::default().term(a, b)
}

pub fn alpha_eq_type(a: &Type, b: &Type) -> bool {
    Env::default().ty(a, b)
}

pub fn alpha_eq_subst(a: &Subst, b: &Subst) -> bool {
    Env::default().subst(a, b)
}

pub fn alpha_eq_ctx(a: &Context, b: &Context) -> bool {
    Env::default().ctx(a, b)
}
