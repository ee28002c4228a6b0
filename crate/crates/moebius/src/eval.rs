//! Call-by-value small-step evaluation with first-match code pattern matching.

use std::collections::HashMap;
use std::fmt;

use crate::context::domain;
use crate::subst::{apply_term, single_term, single_type, subst_term, subst_type, SubstError};
use crate::syntax::{
    alpha_eq_term, free_in_term, free_in_type, fresh, rename_term, rename_type, Branch, Context,
    CtxType, Decl, Hat, HatEntry, Name, Prim, Renaming, Subst, SubstEntry, Term, Type,
};
use crate::typing::{equal::type_eq, subst_check};
use crate::unify::{solutions, unify_ctxtype};

pub const DEFAULT_FUEL: u64 = 1_000_000;

/// Fuel from `MOEBIUS_FUEL`, or [`DEFAULT_FUEL`].
pub fn default_fuel() -> u64 {
    std::env::var("MOEBIUS_FUEL")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_FUEL)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EvalError {
    Stuck(Term),
    MatchFailure(Term),
    OutOfFuel(Term),
    Subst(SubstError),
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::Stuck(t) => write!(f, "stuck: {t}"),
            EvalError::MatchFailure(t) => write!(f, "match failure: no branch matches {t}"),
            EvalError::OutOfFuel(_) => write!(f, "out of fuel"),
            EvalError::Subst(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for EvalError {}

impl From<SubstError> for EvalError {
    fn from(e: SubstError) -> Self {
        EvalError::Subst(e)
    }
}

type Res<T> = Result<T, EvalError>;

/// Values of the evaluator. A recursive definition whose body is a function
/// stays folded until it is applied.
pub fn is_value(t: &Term) -> bool {
    match t {
        Term::Lam(..) | Term::TLam(..) | Term::Boxed(..) => true,
        Term::Int(_) | Term::Bool(_) | Term::Nil(_) => true,
        Term::Cons(h, t) => is_value(h) && is_value(t),
        Term::Fix(_, _, b) => matches!(strip(b), Term::Lam(..) | Term::TLam(..)),
        Term::Ann(v, _) => is_value(v),
        _ => false,
    }
}

/// Removes the annotations around a value and its list cells.
pub fn erase_annotations(v: &Term) -> Term {
    match strip(v) {
        Term::Cons(h, t) => Term::Cons(Box::new(erase_annotations(h)), Box::new(erase_annotations(t))),
        other => other.clone(),
    }
}

fn strip(t: &Term) -> &Term {
    match t {
        Term::Ann(e, _) => strip(e),
        _ => t,
    }
}

fn unfold(f: &Name, t: &Type, body: &Term) -> Res<Term> {
    let fix = Term::Fix(f.clone(), t.clone(), Box::new(body.clone()));
    Ok(apply_term(&single_term(&Hat::empty(), 0, &fix, f), body)?)
}

/// Evaluation settings and counters.
#[derive(Clone, Debug)]
pub struct Machine {
    pub fuel: u64,
    /// Re-validate every successful match against the case rule's premises.
    pub oracle: bool,
    pub steps: u64,
    pub matches: u64,
    pub discrepancies: u64,
}

impl Default for Machine {
    fn default() -> Self {
        Machine {
            fuel: default_fuel(),
            oracle: cfg!(debug_assertions),
            steps: 0,
            matches: 0,
            discrepancies: 0,
        }
    }
}

impl Machine {
    pub fn new(fuel: u64) -> Self {
        Machine {
            fuel,
            ..Machine::default()
        }
    }

    /// Evaluates to a value, calling `on_step` on every intermediate term.
    pub fn run_with(&mut self, e: &Term, mut on_step: impl FnMut(&Term)) -> Res<Term> {
        let mut cur = e.clone();
        let mut left = self.fuel;
        while !is_value(&cur) {
            if left == 0 {
                return Err(EvalError::OutOfFuel(cur));
            }
            left -= 1;
            cur = self.step(&cur)?;
            self.steps += 1;
            on_step(&cur);
        }
        Ok(erase_annotations(&cur))
    }

    pub fn run(&mut self, e: &Term) -> Res<Term> {
        self.run_with(e, |_| {})
    }

    /// One reduction step. Fails with `Stuck` on values and on stuck terms.
    pub fn step(&mut self, e: &Term) -> Res<Term> {
        let stuck = || Err(EvalError::Stuck(e.clone()));
        match e {
            Term::App(f, a) if !is_value(f) => Ok(Term::App(Box::new(self.step(f)?), a.clone())),
            Term::App(f, a) if !is_value(a) => Ok(Term::App(f.clone(), Box::new(self.step(a)?))),
            Term::App(f, a) => match strip(f) {
                Term::Lam(x, _, body) => Ok(apply_term(&single_term(&Hat::empty(), 0, a, x), body)?),
                Term::Fix(g, t, body) => Ok(Term::App(Box::new(unfold(g, t, body)?), a.clone())),
                _ => stuck(),
            },
            Term::TApp(f, h, n, t) if !is_value(f) => {
                Ok(Term::TApp(Box::new(self.step(f)?), h.clone(), *n, t.clone()))
            }
            Term::TApp(f, h, n, t) => match strip(f) {
                Term::TLam(a, _, body) => Ok(apply_term(&single_type(h, *n, t, a), body)?),
                Term::Fix(g, ft, body) => Ok(Term::TApp(Box::new(unfold(g, ft, body)?), h.clone(), *n, t.clone())),
                _ => stuck(),
            },
            Term::LetBox(h, n, u, e1, e2) if !is_value(e1) => Ok(Term::LetBox(
                h.clone(),
                *n,
                u.clone(),
                Box::new(self.step(e1)?),
                e2.clone(),
            )),
            Term::LetBox(_, n, u, e1, e2) => match strip(e1) {
                Term::Boxed(h, _, code) => Ok(apply_term(&single_term(h, *n, code, u), e2)?),
                _ => stuck(),
            },
            Term::Let(x, e1, e2) if !is_value(e1) => {
                Ok(Term::Let(x.clone(), Box::new(self.step(e1)?), e2.clone()))
            }
            Term::Let(x, v, e2) => Ok(apply_term(&single_term(&Hat::empty(), 0, v, x), e2)?),
            Term::Fix(f, t, body) if !is_value(e) => unfold(f, t, body),
            Term::Ann(e1, t) => Ok(Term::Ann(Box::new(self.step(e1)?), t.clone())),
            Term::If(c, a, b) if !is_value(c) => Ok(Term::If(Box::new(self.step(c)?), a.clone(), b.clone())),
            Term::If(c, a, b) => match strip(c) {
                Term::Bool(true) => Ok((**a).clone()),
                Term::Bool(false) => Ok((**b).clone()),
                _ => stuck(),
            },
            Term::Cons(h, t) if !is_value(h) => Ok(Term::Cons(Box::new(self.step(h)?), t.clone())),
            Term::Cons(h, t) if !is_value(t) => Ok(Term::Cons(h.clone(), Box::new(self.step(t)?))),
            Term::Prim(p, args) => {
                if let Some(i) = args.iter().position(|a| !is_value(a)) {
                    let mut args = args.clone();
                    args[i] = self.step(&args[i])?;
                    return Ok(Term::Prim(*p, args));
                }
                let args: Vec<Term> = args.iter().map(|a| strip(a).clone()).collect();
                prim(*p, &args).map_or_else(stuck, Ok)
            }
            Term::Case(s, _, _) if !is_value(s) => {
                let Term::Case(s, ann, bs) = e else { unreachable!() };
                Ok(Term::Case(Box::new(self.step(s)?), ann.clone(), bs.clone()))
            }
            Term::Case(s, ann, bs) => self.select(strip(s), ann, bs).and_then(|r| r.ok_or_else(|| EvalError::MatchFailure(strip(s).clone()))),
            _ => stuck(),
        }
    }

    /// The body of the first branch whose pattern matches, instantiated.
    fn select(&mut self, scrut: &Term, ann: &CtxType, bs: &[Branch]) -> Res<Option<Term>> {
        let Term::Boxed(..) = scrut else {
            return Err(EvalError::Stuck(scrut.clone()));
        };
        for b in bs {
            if let Some(sigma) = match_branch(scrut, ann, b) {
                self.matches += 1;
                if self.oracle && !premises_hold(scrut, ann, b, &sigma) {
                    self.discrepancies += 1;
                    continue;
                }
                return Ok(Some(subst_term(&sigma, &domain(&b.vars), &b.body)?));
            }
        }
        Ok(None)
    }
}

fn prim(p: Prim, args: &[Term]) -> Option<Term> {
    use Term::{Bool, Int};
    Some(match (p, args) {
        (Prim::Add, [Int(a), Int(b)]) => Int(a.wrapping_add(*b)),
        (Prim::Sub, [Int(a), Int(b)]) => Int(a.wrapping_sub(*b)),
        (Prim::Mul, [Int(a), Int(b)]) => Int(a.wrapping_mul(*b)),
        (Prim::Eq, [Int(a), Int(b)]) => Bool(a == b),
        (Prim::Eq, [Bool(a), Bool(b)]) => Bool(a == b),
        (Prim::Le, [Int(a), Int(b)]) => Bool(a <= b),
        (Prim::Hd, [Term::Cons(h, _)]) => (**h).clone(),
        (Prim::Tl, [Term::Cons(_, t)]) => (**t).clone(),
        (Prim::Null, [Term::Nil(_)]) => Bool(true),
        (Prim::Null, [Term::Cons(..)]) => Bool(false),
        _ => return None,
    })
}

/// Evaluates a closed term with default settings.
pub fn evaluate(e: &Term, fuel: u64) -> Res<Term> {
    Machine::new(fuel).run(e)
}

/// Checks the three premises of the case reduction rule for `sigma`.
pub fn premises_hold(scrut: &Term, ann: &CtxType, b: &Branch, sigma: &Subst) -> bool {
    let empty = Context::empty();
    let Some(bann) = &b.annot else { return false };
    let dom = domain(&b.vars);
    let Ok(sigma2) = subst_check(&empty, sigma, &b.vars) else {
        return false;
    };
    let Ok(ty) = subst_type(&sigma2, &dom, &bann.to_type()) else {
        return false;
    };
    if !type_eq(&empty, &ty, &ann.to_type()) {
        return false;
    }
    let pat = Term::boxed(b.hat.clone(), ann.level, b.pat.clone());
    match subst_term(&sigma2, &dom, &pat) {
        Ok(p) => alpha_eq_term(&p, scrut),
        Err(_) => false,
    }
}

/// `Ψi` instantiation making the branch pattern equal to the scrutinee.
pub fn match_branch(scrut: &Term, ann: &CtxType, b: &Branch) -> Option<Subst> {
    let Term::Boxed(h, _, code) = scrut else { return None };
    let bann = b.annot.as_ref()?;
    let psi = &b.vars;
    let refined = unify_ctxtype(psi, ann, bann);
    if refined.has_absurd() {
        return None;
    }
    let mut m = Matcher {
        psi,
        types: solutions(&refined)
            .into_iter()
            .map(|(a, hat, t)| (a, (hat, t)))
            .collect(),
        terms: HashMap::new(),
        env: Vec::new(),
    };
    if h.len() != b.hat.len() {
        return None;
    }
    for (p, s) in b.hat.names().zip(h.names()) {
        m.env.push((p.clone(), s.clone()));
    }
    m.term(&b.pat, code)?;
    m.finish()
}

struct Matcher<'a> {
    psi: &'a Context,
    types: HashMap<Name, (Hat, Type)>,
    terms: HashMap<Name, (Hat, Term)>,
    /// Pattern-side bound name paired with scrutinee-side bound name.
    env: Vec<(Name, Name)>,
}

impl Matcher<'_> {
    fn image(&self, p: &Name) -> Option<&Name> {
        self.env.iter().rev().find(|(a, _)| a == p).map(|(_, b)| b)
    }

    fn preimage_bound(&self, s: &Name) -> bool {
        self.env.iter().any(|(_, b)| b == s)
    }

    fn same_name(&self, p: &Name, s: &Name) -> bool {
        match self.image(p) {
            Some(i) => i == s && self.env.iter().rev().find(|(_, b)| b == s).map(|(a, _)| a) == Some(p),
            None => p == s && !self.preimage_bound(s),
        }
    }

    fn scoped<R>(&mut self, pairs: Vec<(Name, Name)>, f: impl FnOnce(&mut Self) -> R) -> R {
        let mark = self.env.len();
        self.env.extend(pairs);
        let r = f(self);
        self.env.truncate(mark);
        r
    }

    fn pattern_var(&self, x: &Name) -> Option<&Decl> {
        self.psi.lookup(x)
    }

    /// Solution hat for a pattern variable and the renaming from scrutinee
    /// names to it, or `None` if the closure is not a bound-variable renaming.
    fn invert(&self, d: &Decl, s: &Subst) -> Option<(Hat, Renaming)> {
        let local = d.local()?;
        let mut hat = Vec::new();
        let mut ren = Vec::new();
        for (e, ld) in s.0.iter().zip(local.0.iter().filter(|d| d.name().is_some())) {
            let (SubstEntry::RenTerm(y, _) | SubstEntry::RenType(y, _)) = e else {
                return None;
            };
            let img = self.image(y)?.clone();
            let z = fresh(ld.name()?);
            hat.push(HatEntry::new(z.clone(), ld.level()?));
            ren.push((img, z));
        }
        Some((Hat(hat), ren))
    }

    /// Scrutinee-bound names escaping through `free` must be in the renaming.
    fn escapes(&self, free: impl IntoIterator<Item = Name>, ren: &Renaming) -> bool {
        free.into_iter()
            .any(|f| self.preimage_bound(&f) && !ren.iter().any(|(a, _)| *a == f))
    }

    fn ty(&mut self, p: &Type, s: &Type) -> Option<()> {
        match (p, s) {
            (Type::Var(a, ps), _) if self.pattern_var(a).is_some() && self.image(a).is_none() => {
                if let Some((hat, sol)) = self.types.get(a).cloned() {
                    let inst = subst_type(ps, &hat, &sol).ok()?;
                    return self.ty(&inst, s);
                }
                let d = self.pattern_var(a)?.clone();
                let (hat, ren) = self.invert(&d, ps)?;
                if self.escapes(free_in_type(s), &ren) {
                    return None;
                }
                self.types.insert(a.clone(), (hat, rename_type(s, &ren)));
                Some(())
            }
            (Type::Var(a, ps), Type::Var(b, ss)) => {
                self.same_name(a, b).then_some(())?;
                self.subst(ps, ss)
            }
            (Type::Arrow(a1, a2), Type::Arrow(b1, b2)) => {
                self.ty(a1, b1)?;
                self.ty(a2, b2)
            }
            (Type::List(a), Type::List(b)) => self.ty(a, b),
            (Type::Int, Type::Int) | (Type::Bool, Type::Bool) => Some(()),
            (Type::Forall(a, c1, n, t1), Type::Forall(b, c2, m, t2)) => {
                (n == m).then_some(())?;
                let pairs = self.ctx(c1, c2)?;
                self.scoped(pairs, |m| m.scoped(vec![(a.clone(), b.clone())], |m| m.ty(t1, t2)))
            }
            (Type::Boxed(c1, n, t1), Type::Boxed(c2, m, t2)) => {
                (n == m).then_some(())?;
                let pairs = self.ctx(c1, c2)?;
                self.scoped(pairs, |m| m.ty(t1, t2))
            }
            _ => None,
        }
    }

    /// Matches two contexts declaration by declaration, returning the
    /// binder pairs they introduce.
    fn ctx(&mut self, a: &Context, b: &Context) -> Option<Vec<(Name, Name)>> {
        (a.len() == b.len()).then_some(())?;
        let mut pairs = Vec::new();
        for (d, e) in a.0.iter().zip(&b.0) {
            (d.kind() == e.kind() && d.level() == e.level()).then_some(())?;
            let ok = self.scoped(pairs.clone(), |m| match (d, e) {
                (
                    Decl::Term { ctx: l1, ty: t1, .. },
                    Decl::Term { ctx: l2, ty: t2, .. },
                ) => {
                    let inner = m.ctx(l1, l2)?;
                    m.scoped(inner, |m| m.ty(t1, t2))
                }
                (Decl::Type { ctx: l1, .. }, Decl::Type { ctx: l2, .. }) => m.ctx(l1, l2).map(|_| ()),
                (Decl::Absurd, Decl::Absurd) => Some(()),
                _ => None,
            });
            ok?;
            if let (Some(x), Some(y)) = (d.name(), e.name()) {
                pairs.push((x.clone(), y.clone()));
            }
        }
        Some(pairs)
    }

    fn subst(&mut self, a: &Subst, b: &Subst) -> Option<()> {
        (a.len() == b.len()).then_some(())?;
        for (x, y) in a.0.iter().zip(&b.0) {
            self.entry(x, y)?;
        }
        Some(())
    }

    fn entry(&mut self, a: &SubstEntry, b: &SubstEntry) -> Option<()> {
        match (a, b) {
            (SubstEntry::RenTerm(x, _), SubstEntry::RenTerm(y, _))
            | (SubstEntry::RenType(x, _), SubstEntry::RenType(y, _)) => self.same_name(x, y).then_some(()),
            (SubstEntry::Term(h1, _, t1), SubstEntry::Term(h2, _, t2)) => {
                (h1.len() == h2.len()).then_some(())?;
                self.scoped(hat_pairs(h1, h2), |m| m.term(t1, t2))
            }
            (SubstEntry::Type(h1, _, t1), SubstEntry::Type(h2, _, t2)) => {
                (h1.len() == h2.len()).then_some(())?;
                self.scoped(hat_pairs(h1, h2), |m| m.ty(t1, t2))
            }
            (SubstEntry::RenTerm(x, _), SubstEntry::Term(h, _, t)) => {
                self.term(&Term::Var(x.clone(), Subst::id(h)), t)
            }
            (SubstEntry::Term(h, _, t), SubstEntry::RenTerm(y, _)) => {
                self.term(t, &Term::Var(y.clone(), Subst::id(h)))
            }
            (SubstEntry::RenType(x, _), SubstEntry::Type(h, _, t)) => {
                self.ty(&Type::Var(x.clone(), Subst::id(h)), t)
            }
            (SubstEntry::Type(h, _, t), SubstEntry::RenType(y, _)) => {
                self.ty(t, &Type::Var(y.clone(), Subst::id(h)))
            }
            _ => None,
        }
    }

    fn term(&mut self, p: &Term, s: &Term) -> Option<()> {
        let s = strip(s);
        let p = strip(p);
        match (p, s) {
            (Term::Var(x, ps), _) if self.pattern_var(x).is_some() && self.image(x).is_none() => {
                if self.terms.contains_key(x) {
                    return None;
                }
                let d = self.pattern_var(x)?.clone();
                let (hat, ren) = self.invert(&d, ps)?;
                if self.escapes(free_in_term(s), &ren) {
                    return None;
                }
                self.terms.insert(x.clone(), (hat, rename_term(s, &ren)));
                Some(())
            }
            (Term::Var(x, ps), Term::Var(y, ss)) => {
                self.same_name(x, y).then_some(())?;
                self.subst(ps, ss)
            }
            (Term::Lam(x, _, a), Term::Lam(y, _, b)) | (Term::Fix(x, _, a), Term::Fix(y, _, b)) => {
                self.scoped(vec![(x.clone(), y.clone())], |m| m.term(a, b))
            }
            (Term::Let(x, a1, a2), Term::Let(y, b1, b2)) => {
                self.term(a1, b1)?;
                self.scoped(vec![(x.clone(), y.clone())], |m| m.term(a2, b2))
            }
            (Term::App(a1, a2), Term::App(b1, b2)) | (Term::Cons(a1, a2), Term::Cons(b1, b2)) => {
                self.term(a1, b1)?;
                self.term(a2, b2)
            }
            (Term::TLam(a, n, e1), Term::TLam(b, m, e2)) => {
                (n == m).then_some(())?;
                self.scoped(vec![(a.clone(), b.clone())], |m| m.term(e1, e2))
            }
            (Term::TApp(e1, h1, n, t1), Term::TApp(e2, h2, m, t2)) => {
                (n == m && h1.len() == h2.len()).then_some(())?;
                self.term(e1, e2)?;
                self.scoped(hat_pairs(h1, h2), |m| m.ty(t1, t2))
            }
            (Term::Boxed(h1, n, e1), Term::Boxed(h2, m, e2)) => {
                (n == m && h1.len() == h2.len()).then_some(())?;
                self.scoped(hat_pairs(h1, h2), |m| m.term(e1, e2))
            }
            (Term::LetBox(h1, n, u, a1, a2), Term::LetBox(h2, m, v, b1, b2)) => {
                (n == m && h1.len() == h2.len()).then_some(())?;
                self.term(a1, b1)?;
                self.scoped(vec![(u.clone(), v.clone())], |m| m.term(a2, b2))
            }
            (Term::If(a1, a2, a3), Term::If(b1, b2, b3)) => {
                self.term(a1, b1)?;
                self.term(a2, b2)?;
                self.term(a3, b3)
            }
            (Term::Prim(o1, a), Term::Prim(o2, b)) => {
                (o1 == o2 && a.len() == b.len()).then_some(())?;
                a.iter().zip(b).try_for_each(|(x, y)| self.term(x, y))
            }
            (Term::Int(a), Term::Int(b)) => (a == b).then_some(()),
            (Term::Bool(a), Term::Bool(b)) => (a == b).then_some(()),
            (Term::Nil(_), Term::Nil(_)) => Some(()),
            (Term::Case(a, c1, bs1), Term::Case(b, c2, bs2)) => {
                (bs1.len() == bs2.len() && c1.level == c2.level).then_some(())?;
                self.term(a, b)?;
                let pairs = self.ctx(&c1.ctx, &c2.ctx)?;
                self.scoped(pairs, |m| m.ty(&c1.ty, &c2.ty))?;
                bs1.iter().zip(bs2).try_for_each(|(x, y)| self.branch(x, y))
            }
            _ => None,
        }
    }

    fn branch(&mut self, a: &Branch, b: &Branch) -> Option<()> {
        (a.hat.len() == b.hat.len()).then_some(())?;
        let vars = self.ctx(&a.vars, &b.vars)?;
        self.scoped(vars, |m| {
            if let (Some(x), Some(y)) = (&a.annot, &b.annot) {
                (x.level == y.level).then_some(())?;
                let pairs = m.ctx(&x.ctx, &y.ctx)?;
                m.scoped(pairs, |m| m.ty(&x.ty, &y.ty))?;
            }
            m.scoped(hat_pairs(&a.hat, &b.hat), |m| m.term(&a.pat, &b.pat))?;
            m.term(&a.body, &b.body)
        })
    }

    /// The instantiation of `Ψi`, defaulting unconstrained types to `int`.
    fn finish(self) -> Option<Subst> {
        let mut out = Vec::new();
        for d in &self.psi.0 {
            match d {
                Decl::Term { name, level, ctx, .. } => {
                    let (hat, t) = self.terms.get(name)?;
                    out.push(SubstEntry::Term(hat.clone(), *level, t.clone()));
                    debug_assert_eq!(hat.len(), ctx.names().count());
                }
                Decl::Type { name, level, ctx } | Decl::Solved { name, level, ctx, .. } => {
                    match self.types.get(name) {
                        Some((hat, t)) => out.push(SubstEntry::Type(hat.clone(), *level, t.clone())),
                        None => out.push(SubstEntry::Type(domain(ctx), *level, Type::Int)),
                    }
                }
                Decl::Absurd => return None,
            }
        }
        Some(Subst(out))
    }
}

fn hat_pairs(a: &Hat, b: &Hat) -> Vec<(Name, Name)> {
    a.names().cloned().zip(b.names().cloned()).collect()
}
