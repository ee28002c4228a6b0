//! Randomized checks of the calculus' metatheory.
//!
//! Each lemma is a property over generated inputs. Samples are independent:
//! sample `i` draws from its own generator seeded by `(seed, i)`, so reports
//! are identical whether samples run in parallel or in sequence.

pub mod gen;

use std::fmt;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use crate::context::{append, chop_lower, domain, insert};
use crate::eval::{is_value, EvalError, Machine};
use crate::frontend::{parse_term, pretty};
use crate::subst::{apply_ctx, apply_term, apply_type, reset_work, work, Sub};
use crate::syntax::{
    alpha_eq_term, alpha_eq_type, fresh, rename_type, Context, Decl, Level, Name, Subst,
    SubstEntry, Term, Type,
};
use crate::typing::{check, equal::type_eq, pat_type_check, pattern_reflect, subst_check, type_of, wf_context};
use crate::unify::{refines, unify_type};

pub use gen::Gen;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Lemma {
    IdentitySubst,
    CommutingSubst,
    TypeSubst,
    TermSubst,
    SimultaneousSubst,
    PatternReflection,
    UnifyTotal,
    UnifySound,
    UnifyStable,
    UnifyCompatible,
    Termination,
    Preservation,
    CaseOracle,
    RoundTrip,
}

const ALL: [(Lemma, &str); 14] = [
    (Lemma::IdentitySubst, "identity-substitution"),
    (Lemma::CommutingSubst, "commuting-substitutions"),
    (Lemma::TypeSubst, "type-substitution"),
    (Lemma::TermSubst, "term-substitution"),
    (Lemma::SimultaneousSubst, "simultaneous-substitution"),
    (Lemma::PatternReflection, "pattern-reflection"),
    (Lemma::UnifyTotal, "unify-totality"),
    (Lemma::UnifySound, "unify-soundness"),
    (Lemma::UnifyStable, "unify-stability"),
    (Lemma::UnifyCompatible, "unify-compatibility"),
    (Lemma::Termination, "termination"),
    (Lemma::Preservation, "preservation"),
    (Lemma::CaseOracle, "case-oracle"),
    (Lemma::RoundTrip, "round-trip"),
];

impl Lemma {
    pub fn from_name(s: &str) -> Option<Lemma> {
        ALL.iter().find(|(_, n)| *n == s).map(|(l, _)| *l)
    }

    pub fn names() -> Vec<&'static str> {
        ALL.iter().map(|(_, n)| *n).collect()
    }

    pub fn all() -> Vec<Lemma> {
        ALL.iter().map(|(l, _)| *l).collect()
    }

    pub fn name(self) -> &'static str {
        ALL.iter().find(|(l, _)| *l == self).map(|(_, n)| *n).unwrap()
    }

    pub fn substitution() -> [Lemma; 6] {
        [
            Lemma::IdentitySubst,
            Lemma::CommutingSubst,
            Lemma::TypeSubst,
            Lemma::TermSubst,
            Lemma::SimultaneousSubst,
            Lemma::Termination,
        ]
    }

    pub fn unification() -> [Lemma; 4] {
        [
            Lemma::UnifyTotal,
            Lemma::UnifySound,
            Lemma::UnifyStable,
            Lemma::UnifyCompatible,
        ]
    }
}

impl fmt::Display for Lemma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A failing sample, with its witness shrunk where the lemma supports it.
#[derive(Clone, Debug)]
pub struct Counterexample {
    pub sample: usize,
    pub message: String,
    pub witness: String,
}

#[derive(Clone, Debug)]
pub struct Report {
    pub lemma: Lemma,
    pub samples: usize,
    pub passed: usize,
    /// Samples for which the generator could not build an input.
    pub gave_up: usize,
    pub counterexamples: Vec<Counterexample>,
    pub elapsed: Duration,
}

impl Report {
    /// No counterexample and at least half of the samples exercised.
    pub fn passed(&self) -> bool {
        self.counterexamples.is_empty() && self.passed * 2 >= self.samples
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{}: {} samples, {} passed, {} discarded, {} counterexamples ({:.2}s)",
            self.lemma,
            self.samples,
            self.passed,
            self.gave_up,
            self.counterexamples.len(),
            self.elapsed.as_secs_f64()
        )?;
        for c in &self.counterexamples {
            writeln!(f, "  sample {}: {}", c.sample, c.message)?;
            for line in c.witness.lines() {
                writeln!(f, "    {line}")?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub enum Outcome {
    Pass,
    Discard,
    Fail { message: String, witness: String },
}

fn fail(message: impl Into<String>, witness: impl Into<String>) -> Outcome {
    Outcome::Fail {
        message: message.into(),
        witness: witness.into(),
    }
}

/// How samples are scheduled.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Parallel,
    Sequential,
}

pub fn sample_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (i as u64).wrapping_mul(0xD1B5_4A32_D192_ED03).rotate_left(17)
}

/// Runs one sample of `lemma`, turning a panic into a counterexample.
pub fn run_sample(lemma: Lemma, seed: u64) -> Outcome {
    let res = catch_unwind(AssertUnwindSafe(|| {
        let mut g = Gen::new(seed);
        match lemma {
            Lemma::IdentitySubst => identity_subst(&mut g),
            Lemma::CommutingSubst => commuting_subst(&mut g),
            Lemma::TypeSubst => single_subst(&mut g, true),
            Lemma::TermSubst => single_subst(&mut g, false),
            Lemma::SimultaneousSubst => simultaneous_subst(&mut g),
            Lemma::PatternReflection => pattern_reflection(&mut g),
            Lemma::UnifyTotal => unify_total(&mut g),
            Lemma::UnifySound => unify_sound(&mut g),
            Lemma::UnifyStable => unify_stable(&mut g),
            Lemma::UnifyCompatible => unify_compatible(&mut g),
            Lemma::Termination => termination(&mut g),
            Lemma::Preservation => preservation(&mut g),
            Lemma::CaseOracle => case_oracle(&mut g),
            Lemma::RoundTrip => round_trip(&mut g),
        }
    }));
    match res {
        Ok(o) => o,
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            fail(format!("panicked: {msg}"), format!("seed {seed}"))
        }
    }
}

pub fn check_lemma(lemma: Lemma, samples: usize, seed: u64) -> Report {
    check_lemma_with(lemma, samples, seed, Mode::Parallel)
}

/// [`check_lemma`] with an explicit schedule. Without the `parallel`
/// feature both modes run sequentially.
pub fn check_lemma_with(lemma: Lemma, samples: usize, seed: u64, mode: Mode) -> Report {
    let start = Instant::now();
    let one = |i: usize| run_sample(lemma, sample_seed(seed, i));
    let outcomes: Vec<Outcome> = match mode {
        #[cfg(feature = "parallel")]
        Mode::Parallel => {
            use rayon::prelude::*;
            (0..samples).into_par_iter().map(one).collect()
        }
        _ => (0..samples).map(one).collect(),
    };
    let mut report = Report {
        lemma,
        samples,
        passed: 0,
        gave_up: 0,
        counterexamples: Vec::new(),
        elapsed: Duration::ZERO,
    };
    for (i, o) in outcomes.into_iter().enumerate() {
        match o {
            Outcome::Pass => report.passed += 1,
            Outcome::Discard => report.gave_up += 1,
            Outcome::Fail { message, witness } => report.counterexamples.push(Counterexample {
                sample: i,
                message,
                witness,
            }),
        }
    }
    report.elapsed = start.elapsed();
    report
}

// ------------------------------------------------------------- shrinking

fn children(t: &Term) -> Vec<&Term> {
    match t {
        Term::Var(..) | Term::Raw(..) | Term::Int(_) | Term::Bool(_) | Term::Nil(_) => Vec::new(),
        Term::Lam(_, _, e) | Term::TLam(_, _, e) | Term::Boxed(_, _, e) => vec![e],
        Term::Fix(_, _, e) | Term::Ann(e, _) | Term::TApp(e, ..) => vec![e],
        Term::App(a, b) | Term::Cons(a, b) | Term::Let(_, a, b) | Term::LetBox(_, _, _, a, b) => vec![a, b],
        Term::If(a, b, c) => vec![a, b, c],
        Term::Case(s, _, bs) => {
            let mut v = vec![&**s];
            v.extend(bs.iter().map(|b| &b.body));
            v
        }
        Term::Prim(_, args) => args.iter().collect(),
    }
}

fn descendants(t: &Term) -> Vec<Term> {
    let mut out = Vec::new();
    let mut stack: Vec<&Term> = children(t);
    while let Some(s) = stack.pop() {
        out.push(s.clone());
        stack.extend(children(s));
    }
    out.sort_by_key(Term::size);
    out
}

/// Replaces `e` by its smallest subterm that still checks against `t` in `g`
/// and still violates `prop`, until no subterm does.
pub fn shrink(g: &Context, e: &Term, t: &Type, prop: &dyn Fn(&Term) -> Result<(), String>) -> (Term, String) {
    let mut cur = e.clone();
    let mut msg = prop(e).err().unwrap_or_default();
    'outer: for _ in 0..64 {
        for s in descendants(&cur) {
            let Ok(s) = check(g, &s, t) else { continue };
            if let Err(m) = prop(&s) {
                cur = s;
                msg = m;
                continue 'outer;
            }
        }
        break;
    }
    (cur, msg)
}

fn term_witness(g: &Context, e: &Term, t: &Type) -> String {
    let mut s = String::new();
    if !g.is_empty() {
        s.push_str(&format!("context: {}\n", pretty::ctx(g)));
    }
    s.push_str(&format!("term: {}\ntype: {}", pretty::term(e), pretty::ty(t)));
    s
}

fn shrunk(g: &Context, e: &Term, t: &Type, prop: &dyn Fn(&Term) -> Result<(), String>) -> Outcome {
    match prop(e) {
        Ok(()) => Outcome::Pass,
        Err(_) => {
            let (small, msg) = shrink(g, e, t, prop);
            fail(msg, term_witness(g, &small, t))
        }
    }
}

// ---------------------------------------------------------- substitution

fn identity_subst(g: &mut Gen) -> Outcome {
    let c = g.context(4);
    let n = g.rng_level().max(1);
    let phi = g.local_ctx(&chop_lower(&c, n), n, 3);
    let Some(whole) = gen::extend(&c, &phi).filter(|w| wf_context(w).is_ok()) else { return Outcome::Discard };
    if let Err(e) = subst_check(&whole, &Subst::id(&domain(&phi)), &phi) {
        return fail(
            format!("the identity is not a substitution: {e}"),
            format!("Γ = {}\nΦ = {}", pretty::ctx(&c), pretty::ctx(&phi)),
        );
    }
    let id = Sub::id(&domain(&c));
    let t = g.ty(&c, 2);
    match apply_type(&id, &t) {
        Ok(t2) if alpha_eq_type(&t, &t2) => {}
        Ok(t2) => return fail("identity changed a type", format!("{}\n{}", pretty::ty(&t), pretty::ty(&t2))),
        Err(e) => return fail(format!("identity failed: {e}"), pretty::ty(&t)),
    }
    let Some(e) = g.typed(&c, &t, 3) else { return Outcome::Discard };
    let prop = |e: &Term| match apply_term(&id, e) {
        Ok(e2) if alpha_eq_term(e, &e2) => Ok(()),
        Ok(e2) => Err(format!("identity changed the term to {}", pretty::term(&e2))),
        Err(err) => Err(format!("identity failed: {err}")),
    };
    shrunk(&c, &e, &t, &prop)
}

/// `Ψ2` over `Γ ⌢ Ψ1` with fresh names.
fn commuting_subst(g: &mut Gen) -> Outcome {
    let base = g.context(2);
    let m = g.rng_level();
    let psi1 = g.local_ctx(&chop_lower(&base, m), m.max(1), 2);
    let Some(g1) = gen::extend(&base, &psi1).filter(|c| wf_context(c).is_ok()) else { return Outcome::Discard };
    let n = g.rng_level().min(m);
    let psi2 = g.local_ctx(&chop_lower(&g1, n), n.max(1), 2);
    let Some(g2) = gen::extend(&g1, &psi2).filter(|c| wf_context(c).is_ok()) else { return Outcome::Discard };
    let Some(s1) = g.subst(&base, &psi1, m, 2) else { return Outcome::Discard };
    let Some(s2) = g.subst(&g1, &psi2, n, 2) else { return Outcome::Discard };
    let (d1, d2) = (domain(&psi1), domain(&psi2));
    let (Ok(sub1), Ok(sub2)) = (Sub::new(&s1, &d1), Sub::new(&s2, &d2)) else {
        return fail("substitutions do not match their domains", String::new());
    };
    let Ok(s12) = crate::subst::apply_subst(&sub1, &s2) else {
        return fail("composing substitutions failed", pretty::subst(&s2));
    };
    let Ok(sub12) = Sub::new(&s12, &d2) else { return fail("composite has the wrong shape", String::new()) };
    let t = g.ty(&g2, 2);
    let lhs = apply_type(&sub2, &t).and_then(|x| apply_type(&sub1, &x));
    let rhs = apply_type(&sub1, &t).and_then(|x| apply_type(&sub12, &x));
    let wit = |a: &str, b: &str| {
        format!(
            "context: {}\nσ1 = {} for {}\nσ2 = {} for {}\n{a}\n{b}",
            pretty::ctx(&base),
            pretty::subst(&s1),
            pretty::ctx(&psi1),
            pretty::subst(&s2),
            pretty::ctx(&psi2)
        )
    };
    match (lhs, rhs) {
        (Ok(a), Ok(b)) if alpha_eq_type(&a, &b) => {}
        (Ok(a), Ok(b)) => return fail("types differ", wit(&pretty::ty(&a), &pretty::ty(&b))),
        (a, b) => return fail(format!("substitution failed: {a:?} {b:?}"), wit(&pretty::ty(&t), "")),
    }
    let Some(e) = g.typed(&g2, &t, 3) else { return Outcome::Pass };
    let lhs = apply_term(&sub2, &e).and_then(|x| apply_term(&sub1, &x));
    let rhs = apply_term(&sub1, &e).and_then(|x| apply_term(&sub12, &x));
    match (lhs, rhs) {
        (Ok(a), Ok(b)) if alpha_eq_term(&a, &b) => Outcome::Pass,
        (Ok(a), Ok(b)) => fail("terms differ", wit(&pretty::term(&a), &pretty::term(&b))),
        (a, b) => fail(format!("substitution failed: {a:?} {b:?}"), wit(&pretty::term(&e), "")),
    }
}

/// Substitutes for one declaration in the middle of a context and re-checks.
fn single_subst(g: &mut Gen, type_var: bool) -> Outcome {
    let base = g.context(3);
    let n = g.rng_level();
    let decl = loop {
        let Some(d) = g.decl(&base, n, 1) else { return Outcome::Discard };
        if matches!(d, Decl::Type { .. }) == type_var {
            break d;
        }
    };
    let Ok(full) = insert(&base, decl.clone()) else { return Outcome::Discard };
    if wf_context(&full).is_err() {
        return Outcome::Discard;
    }
    let i = full.position(decl.name().unwrap()).unwrap();
    let prefix = Context(full.0[..i].to_vec());
    let suffix = Context(full.0[i + 1..].to_vec());
    let local = decl.local().unwrap().clone();
    let (local2, map) = gen::freshen_ctx(&local);
    let Some(inner) = gen::extend(&chop_lower(&prefix, n), &local2) else { return Outcome::Discard };
    let entry = match &decl {
        Decl::Type { .. } => SubstEntry::Type(domain(&local2), n, g.ty(&inner, 2)),
        Decl::Term { ty, .. } => {
            let Some(e) = g.term(&inner, &rename_type(ty, &map), 2) else { return Outcome::Discard };
            SubstEntry::Term(domain(&local2), n, e)
        }
        _ => return Outcome::Discard,
    };
    let Ok(entry) = subst_check(&prefix, &Subst(vec![entry]), &Context(vec![decl.clone()])) else {
        return Outcome::Discard;
    };
    let Ok(sub) = Sub::new(&entry, &domain(&Context(vec![decl.clone()]))) else {
        return fail("entry does not fit its declaration", String::new());
    };
    let Ok(suffix2) = apply_ctx(&sub, &suffix) else { return fail("substituting into the context failed", pretty::ctx(&suffix)) };
    let Ok(after) = append(&prefix, &suffix2) else { return fail("substituted context is unsorted", pretty::ctx(&suffix2)) };
    if let Err(e) = wf_context(&after) {
        return fail(format!("substituted context is ill formed: {e}"), pretty::ctx(&after));
    }
    let t = g.ty(&full, 2);
    let Ok(t2) = apply_type(&sub, &t) else { return fail("substituting into the type failed", pretty::ty(&t)) };
    let Some(e) = g.typed(&full, &t, 3) else { return Outcome::Discard };
    let x = decl.name().unwrap().clone();
    let prop = |e: &Term| -> Result<(), String> {
        let e2 = apply_term(&sub, e).map_err(|err| format!("substitution failed: {err}"))?;
        let t2 = apply_type(&sub, &type_of(&full, e).map_err(|err| err.to_string())?).map_err(|err| err.to_string())?;
        check(&after, &e2, &t2)
            .map(|_| ())
            .map_err(|err| format!("[{} / {x}] breaks typing: {err}", pretty::subst(&entry)))
    };
    let _ = t2;
    shrunk(&full, &e, &t, &prop)
}

fn simultaneous_subst(g: &mut Gen) -> Outcome {
    let psi = g.context(3);
    let target = g.context(3);
    let Some(sigma) = g.subst(&target, &psi, 0, 2) else { return Outcome::Discard };
    let Ok(sub) = Sub::new(&sigma, &domain(&psi)) else { return fail("substitution does not fit", String::new()) };
    let t = g.ty(&psi, 2);
    let Some(e) = g.typed(&psi, &t, 3) else { return Outcome::Discard };
    let prop = |e: &Term| -> Result<(), String> {
        let ty = type_of(&psi, e).map_err(|err| err.to_string())?;
        let e2 = apply_term(&sub, e).map_err(|err| format!("substitution failed: {err}"))?;
        let t2 = apply_type(&sub, &ty).map_err(|err| format!("substitution failed: {err}"))?;
        check(&target, &e2, &t2).map(|_| ()).map_err(|err| {
            format!("under σ = {} into {}: {err}", pretty::subst(&sigma), pretty::ctx(&target))
        })
    };
    shrunk(&psi, &e, &t, &prop)
}

fn pattern_reflection(g: &mut Gen) -> Outcome {
    let Some((phi, k, s, code)) = g.code(3) else { return Outcome::Discard };
    let pats = g.patterns(&phi, k, &s, &code);
    let mut any = false;
    for (psi, p) in pats.into_iter().chain([Gen::catch_all(&phi, k, &s)]) {
        let Ok(p2) = pat_type_check(&psi, &phi, k, &p, &s) else { continue };
        any = true;
        if let Err(e) = pattern_reflect(&psi, &phi, k, &p2, &s) {
            return fail(
                format!("pattern does not reflect: {e}"),
                format!(
                    "pattern variables: {}\ncontext: {}\npattern: {}\ntype: {}",
                    pretty::ctx(&psi),
                    pretty::ctx(&phi),
                    pretty::term(&p2),
                    pretty::ty(&s)
                ),
            );
        }
    }
    if any {
        Outcome::Pass
    } else {
        Outcome::Discard
    }
}

// ----------------------------------------------------------- unification

/// A unification problem: `Γ`, the bound context `Φ`, and `T` with
/// non-binding subterms replaced by flexible variables `u[id]`.
struct Problem {
    g: Context,
    phi: Context,
    t: Type,
    s: Type,
    holes: Vec<(Name, Type)>,
}

impl Problem {
    fn witness(&self) -> String {
        format!(
            "Γ = {}\nΦ = {}\nT = {}\nS = {}",
            pretty::ctx(&self.g),
            pretty::ctx(&self.phi),
            pretty::ty(&self.t),
            pretty::ty(&self.s)
        )
    }
}

impl Gen {
    fn rng_level(&mut self) -> Level {
        use rand::Rng;
        self.rng.gen_range(0..=self.max_level)
    }

    /// Replaces non-binding subterms of `t` by fresh `u:(Φ ⊢k *)` applied to
    /// the identity.
    fn punch(&mut self, t: &Type, phi: &Context, p: f64, holes: &mut Vec<(Name, Type)>) -> Type {
        if self.chance(p) {
            let u = fresh("'u");
            holes.push((u.clone(), t.clone()));
            return Type::Var(u, Subst::id(&domain(phi)));
        }
        match t {
            Type::Arrow(a, b) => Type::arrow(self.punch(a, phi, p, holes), self.punch(b, phi, p, holes)),
            Type::List(a) => Type::list(self.punch(a, phi, p, holes)),
            _ => t.clone(),
        }
    }

    /// `flex_only` restricts `Γ` to type variables at levels `k` and up.
    fn problem(&mut self, flex_only: bool) -> Option<Problem> {
        let k = self.rng_level();
        let phi = if k > 0 {
            self.local_ctx(&Context::empty(), k, 2)
        } else {
            Context::empty()
        };
        let mut g = if flex_only {
            let mut c = Context::empty();
            for _ in 0..self.below(3) {
                let l = k + self.below(self.max_level + 1 - k);
                c = insert(
                    &c,
                    Decl::Type {
                        name: fresh("'a"),
                        ctx: Context::empty(),
                        level: l,
                    },
                )
                .ok()?;
            }
            c
        } else {
            self.context(3)
        };
        let whole = gen::extend(&g, &phi).filter(|c| wf_context(c).is_ok())?;
        let t = self.ty(&whole, 2);
        let mut holes = Vec::new();
        let s = self.punch(&t, &phi, 0.3, &mut holes);
        for (u, _) in &holes {
            g = insert(
                &g,
                Decl::Type {
                    name: u.clone(),
                    ctx: phi.clone(),
                    level: k,
                },
            )
            .ok()?;
        }
        wf_context(&g).ok()?;
        Some(Problem { g, phi, t, s, holes })
    }
}

fn sound(p: &Problem, out: &Context) -> Result<(), String> {
    if out.has_absurd() {
        return Ok(());
    }
    wf_context(out).map_err(|e| format!("result is ill formed: {e}"))?;
    if !refines(out, &p.g) {
        return Err(format!("result {} does not refine the input", pretty::ctx(out)));
    }
    let whole = gen::extend(out, &p.phi).ok_or("cannot extend the result")?;
    if !type_eq(&whole, &p.t, &p.s) {
        return Err(format!("result {} does not equate the types", pretty::ctx(out)));
    }
    Ok(())
}

fn unify_total(g: &mut Gen) -> Outcome {
    let Some(mut p) = g.problem(false) else { return Outcome::Discard };
    if g.chance(0.5) {
        let Some(whole) = gen::extend(&p.g, &p.phi) else { return Outcome::Discard };
        p.s = g.ty(&whole, 2);
    }
    let out = unify_type(&p.g, &p.phi, &p.t, &p.s);
    if refines(&out, &p.g) {
        Outcome::Pass
    } else {
        fail(format!("result {} does not refine the input", pretty::ctx(&out)), p.witness())
    }
}

fn unify_sound(g: &mut Gen) -> Outcome {
    let Some(p) = g.problem(false) else { return Outcome::Discard };
    let out = unify_type(&p.g, &p.phi, &p.t, &p.s);
    match sound(&p, &out) {
        Ok(()) => Outcome::Pass,
        Err(m) => fail(m, p.witness()),
    }
}

/// A ground instance of a unifiable problem is an instance of the result.
fn unify_stable(g: &mut Gen) -> Outcome {
    let Some(p) = g.problem(true) else { return Outcome::Discard };
    let rigid: Vec<Decl> = p.g.0.iter().filter(|d| !p.holes.iter().any(|(u, _)| Some(u) == d.name())).cloned().collect();
    let rigid = Context(rigid);
    let Some(ground) = g.subst(&Context::empty(), &rigid, 0, 1) else { return Outcome::Discard };
    let Ok(gsub) = Sub::new(&ground, &domain(&rigid)) else { return Outcome::Discard };
    let mut entries = Vec::new();
    for d in &p.g.0 {
        let n = d.name().unwrap();
        let e = match p.holes.iter().find(|(u, _)| u == n) {
            Some((_, sub)) => {
                let Ok(t) = apply_type(&gsub, sub) else { return Outcome::Discard };
                SubstEntry::Type(domain(&p.phi), d.level().unwrap(), t)
            }
            None => {
                let i = rigid.position(n).unwrap();
                ground.0[i].clone()
            }
        };
        entries.push(e);
    }
    let sigma = Subst(entries);
    if subst_check(&Context::empty(), &sigma, &p.g).is_err() {
        return Outcome::Discard;
    }
    let out = unify_type(&p.g, &p.phi, &p.t, &p.s);
    if out.has_absurd() {
        return fail("a unifiable problem was refuted", format!("{}\nσ = {}", p.witness(), pretty::subst(&sigma)));
    }
    match subst_check(&Context::empty(), &sigma, &out) {
        Ok(_) => Outcome::Pass,
        Err(e) => fail(
            format!("the unifier is not an instance of the result: {e}"),
            format!("{}\nσ = {}\nresult = {}", p.witness(), pretty::subst(&sigma), pretty::ctx(&out)),
        ),
    }
}

/// Renames every binder inside `t`.
pub fn alpha_variant(t: &Type) -> Type {
    match t {
        Type::Arrow(a, b) => Type::arrow(alpha_variant(a), alpha_variant(b)),
        Type::List(a) => Type::list(alpha_variant(a)),
        Type::Boxed(c, n, body) => {
            let (c2, map) = gen::freshen_ctx(c);
            Type::boxed(c2, *n, alpha_variant(&rename_type(body, &map)))
        }
        Type::Forall(a, c, n, body) => {
            let (c2, mut map) = gen::freshen_ctx(c);
            let a2 = fresh(a);
            map.push((a.clone(), a2.clone()));
            Type::Forall(a2, c2, *n, Box::new(alpha_variant(&rename_type(body, &map))))
        }
        _ => t.clone(),
    }
}

fn unify_compatible(g: &mut Gen) -> Outcome {
    let k = g.rng_level().max(1);
    let phi = g.local_ctx(&Context::empty(), k, 3);
    let t = g.ty(&phi, 3);
    let s = alpha_variant(&t);
    let out = unify_type(&Context::empty(), &phi, &t, &s);
    if out.is_empty() {
        Outcome::Pass
    } else {
        fail(
            format!("unifying alpha-variants gave {}", pretty::ctx(&out)),
            format!("Φ = {}\nT = {}\nS = {}", pretty::ctx(&phi), pretty::ty(&t), pretty::ty(&s)),
        )
    }
}

/// Substitution work allowed for a problem of total size `n`.
pub fn work_budget(n: usize) -> u64 {
    let n = n as u64 + 1;
    10_000 + 200 * n * n
}

/// Applying a generated substitution and unifying a generated pair both
/// stay within a work budget polynomial in the input size.
fn termination(g: &mut Gen) -> Outcome {
    let psi = g.context(3);
    let target = g.context(3);
    let t = g.ty(&psi, 2);
    if let (Some(sigma), Some(e)) = (g.subst(&target, &psi, 0, 2), g.typed(&psi, &t, 3)) {
        let Ok(sub) = Sub::new(&sigma, &domain(&psi)) else { return fail("substitution does not fit", String::new()) };
        let size = sigma.size() + e.size() + t.size();
        reset_work();
        let _ = apply_term(&sub, &e);
        let _ = apply_type(&sub, &t);
        let w = work();
        if w > work_budget(size) {
            return fail(
                format!("substitution took {w} steps for input size {size}"),
                format!("σ = {}\nterm: {}", pretty::subst(&sigma), pretty::term(&e)),
            );
        }
    }
    let Some(mut p) = g.problem(false) else { return Outcome::Discard };
    if g.chance(0.5) {
        let Some(whole) = gen::extend(&p.g, &p.phi) else { return Outcome::Discard };
        p.s = g.ty(&whole, 3);
    }
    let size = p.g.size() + p.phi.size() + p.t.size() + p.s.size();
    reset_work();
    let start = Instant::now();
    let _ = unify_type(&p.g, &p.phi, &p.t, &p.s);
    let (w, dt) = (work(), start.elapsed());
    if w > work_budget(size) || dt > Duration::from_secs(2) {
        fail(format!("unification took {w} substitution steps and {dt:?}"), p.witness())
    } else {
        Outcome::Pass
    }
}

// ------------------------------------------------------------ evaluation

/// Steps allowed before a preservation sample is cut off.
pub const STEP_LIMIT: usize = 2_000;

/// Steps `e` to a value, re-typing every intermediate term at `t`.
pub fn preserves(e: &Term, t: &Type) -> Result<(), String> {
    let empty = Context::empty();
    let mut m = Machine::new(STEP_LIMIT as u64);
    m.oracle = false;
    let mut cur = e.clone();
    for i in 0..STEP_LIMIT {
        if is_value(&cur) {
            return Ok(());
        }
        let next = match m.step(&cur) {
            Ok(n) => n,
            Err(EvalError::Stuck(s)) => return Err(format!("step {i} is stuck at {}", pretty::term(&s))),
            Err(EvalError::MatchFailure(_)) => return Ok(()),
            Err(err) => return Err(format!("step {i}: {err}")),
        };
        match type_of(&empty, &next) {
            Ok(t2) if type_eq(&empty, &t2, t) => {}
            Ok(t2) => {
                return Err(format!("step {i} changes the type to {}: {}", pretty::ty(&t2), pretty::term(&next)))
            }
            Err(err) => return Err(format!("step {i} is ill typed: {err}: {}", pretty::term(&next))),
        }
        cur = next;
    }
    Ok(())
}

fn preservation(g: &mut Gen) -> Outcome {
    let prog = if g.chance(0.3) { g.case_program(4) } else { g.program(5) };
    let Some((e, t)) = prog else { return Outcome::Discard };
    shrunk(&Context::empty(), &e, &t, &|x| preserves(x, &t))
}

/// Runs `e` with every match re-validated; fails on a discrepancy.
pub fn oracle_agrees(e: &Term) -> Result<(), String> {
    let mut m = Machine::new(STEP_LIMIT as u64);
    m.oracle = true;
    match m.run(e) {
        Ok(_) | Err(EvalError::MatchFailure(_)) | Err(EvalError::OutOfFuel(_)) => {}
        Err(err) => return Err(err.to_string()),
    }
    if m.discrepancies > 0 {
        return Err(format!("{} of {} matches disagree with the case rule", m.discrepancies, m.matches));
    }
    Ok(())
}

fn case_oracle(g: &mut Gen) -> Outcome {
    let Some((e, t)) = g.case_program(4) else { return Outcome::Discard };
    shrunk(&Context::empty(), &e, &t, &oracle_agrees)
}

/// Pretty-prints `e`, parses it back and checks both elaborate alike.
pub fn reparses(g: &Context, e: &Term, t: &Type) -> Result<(), String> {
    let src = pretty::term(e);
    let back = parse_term(&src).map_err(|err| format!("printed term does not parse: {err}: {src}"))?;
    let e1 = check(g, e, t).map_err(|err| err.to_string())?;
    let e2 = check(g, &back, t).map_err(|err| format!("reparsed term does not check: {err}: {src}"))?;
    if alpha_eq_term(&e1, &e2) {
        Ok(())
    } else {
        Err(format!("reparsed term differs: {}", pretty::term(&e2)))
    }
}

fn round_trip(g: &mut Gen) -> Outcome {
    let c = g.context(3);
    let t = g.ty(&c, 2);
    let Some(e) = g.term(&c, &t, 4) else { return Outcome::Discard };
    let prop = |e: &Term| reparses(&c, e, &t);
    match prop(&e) {
        Ok(()) => Outcome::Pass,
        Err(_) => {
            let (small, msg) = shrink(&c, &e, &t, &prop);
            fail(msg, term_witness(&c, &small, &t))
        }
    }
}
