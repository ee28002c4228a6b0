use std::path::PathBuf;

use moebius::context::{domain, insert};
use moebius::frontend::{parse_context, parse_program, parse_term, parse_type};
use moebius::metatheory::Gen;
use moebius::syntax::{
    alpha_eq_type, fresh, Context, Decl, Subst, SubstEntry, Term, Type,
};
use moebius::typing::{
    check, check_program, context_eq, infer, kind_check, subst_check, subst_eq, type_eq, type_of,
    wf_context, without_constraints, ErrorKind,
};
use proptest::prelude::*;

fn ctx(src: &str) -> Context {
    wf_context(&parse_context(src).unwrap()).unwrap()
}

fn ty(g: &Context, src: &str) -> Type {
    kind_check(g, &parse_type(src).unwrap()).unwrap()
}

fn example(file: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples").join(file);
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn well_formed_contexts() {
    assert!(wf_context(&Context::empty()).is_ok());
    assert!(wf_context(&parse_context("'a:( |- *), x:'a").unwrap()).is_ok());
    let err = wf_context(&parse_context("x:'a").unwrap()).unwrap_err();
    assert_eq!(err.kind, ErrorKind::Unbound);
}

#[test]
fn boxes_at_level_zero_are_rejected() {
    let err = kind_check(&Context::empty(), &parse_type("[x:int |-^0 int]").unwrap()).unwrap_err();
    assert_eq!(err.kind, ErrorKind::LevelViolation);
}

#[test]
fn quantified_types_kind_check() {
    assert!(kind_check(&ctx("'a:*"), &parse_type("'a").unwrap()).is_ok());
    assert!(kind_check(&Context::empty(), &parse_type("('a:( |- *)) -> ['a] list").unwrap()).is_ok());
}

#[test]
fn simple_inference() {
    let (_, t) = infer(&Context::empty(), &parse_term("fn (x : int) -> x").unwrap()).unwrap();
    assert_eq!(t, Type::arrow(Type::Int, Type::Int));
    let want = ty(&Context::empty(), "['a:*, x:'a, f:'a -> 'a |- 'a]");
    let e = check(&Context::empty(), &parse_term("box('a, x, f. x)").unwrap(), &want).unwrap();
    assert!(alpha_eq_type(&type_of(&Context::empty(), &e).unwrap(), &want));
    assert!(infer(&Context::empty(), &parse_term("box('a, x, f. f x)").unwrap()).is_err());
}

#[test]
fn splicing_program_has_a_level_one_code_type() {
    let c = check_program(&parse_program(&example("intro_letbox.mbs")).unwrap()).unwrap();
    let (_, t) = c.main.unwrap();
    assert!(alpha_eq_type(&t, &ty(&Context::empty(), "[y:int |- int]")));
}

#[test]
fn substitution_checking() {
    let phi = ctx("x:int");
    let sigma = Subst(vec![SubstEntry::Term(moebius::syntax::Hat::empty(), 0, Term::Int(3))]);
    assert!(subst_check(&Context::empty(), &sigma, &phi).is_ok());
    let bad = Subst(vec![SubstEntry::Term(moebius::syntax::Hat::empty(), 0, Term::Bool(true))]);
    assert!(subst_check(&Context::empty(), &bad, &phi).is_err());
    let g = ctx("'a:*, y:'a, z:int");
    assert!(subst_check(&g, &Subst::id(&domain(&g)), &g).is_ok());
    let absurd = Context(vec![Decl::Absurd]);
    assert!(subst_check(&Context::empty(), &Subst::empty(), &absurd).is_err());
}

#[test]
fn type_equality_consults_solutions_and_contradictions() {
    let g = Context::empty();
    assert!(type_eq(&g, &Type::Int, &Type::Int));
    let solved = ctx("'a := (. int) : ( |- *)");
    let a = ty(&solved, "'a");
    assert!(type_eq(&solved, &a, &Type::Int));
    assert!(!without_constraints(|| type_eq(&solved, &a, &Type::Int)));
    let absurd = Context(vec![Decl::Absurd]);
    assert!(type_eq(&absurd, &Type::Int, &Type::Bool));
    assert!(!type_eq(&g, &Type::Int, &Type::Bool));
}

#[test]
fn context_and_substitution_equality() {
    let g = Context::empty();
    assert!(context_eq(&g, &Context::empty(), &Context::empty()));
    assert!(!context_eq(&g, &ctx("x:int"), &ctx("x:int, y:int")));
    let absurd = Context(vec![Decl::Absurd]);
    assert!(context_eq(&absurd, &ctx("x:int"), &ctx("x:int, y:int")));
    assert!(subst_eq(&g, &Subst::empty(), &Subst::empty()));
    let h = moebius::syntax::Hat::empty();
    let s1 = Subst(vec![SubstEntry::Type(h.clone(), 0, Type::Int)]);
    let s2 = Subst(vec![SubstEntry::Type(h, 0, Type::Bool)]);
    assert!(subst_eq(&g, &s1, &s1));
    assert!(!subst_eq(&g, &s1, &s2));
}

#[test]
fn pred_checks() {
    assert!(check_program(&parse_program(&example("pred.mbs")).unwrap()).is_ok());
}

#[test]
fn refinement_needs_constraints() {
    let p = parse_program(&example("refine.mbs")).unwrap();
    assert!(check_program(&p).is_ok());
    assert!(without_constraints(|| check_program(&p)).is_err());
}

#[test]
fn duplicate_definitions_are_rejected() {
    let p = parse_program("f : int = 1;\nf : int = 2;\n").unwrap();
    assert!(check_program(&p).is_err());
}

fn sample(seed: u64) -> Option<(Context, Type, Term)> {
    let mut g = Gen::new(seed);
    let c = g.context(3);
    let t = g.ty(&c, 2);
    let e = g.typed(&c, &t, 3)?;
    Some((c, t, e))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weakening(seed in any::<u64>(), level in 0u32..3) {
        let Some((c, t, e)) = sample(seed) else { return Ok(()) };
        let extra = Decl::Term { name: fresh("w"), ctx: Context::empty(), level, ty: Type::Bool };
        let Ok(c2) = insert(&c, extra) else { return Ok(()) };
        prop_assert!(wf_context(&c2).is_ok());
        let t2 = type_of(&c2, &e).unwrap();
        prop_assert!(type_eq(&c2, &t, &t2));
    }

    #[test]
    fn elaborated_terms_recheck(seed in any::<u64>()) {
        let Some((c, t, e)) = sample(seed) else { return Ok(()) };
        let t2 = type_of(&c, &e).unwrap();
        prop_assert!(type_eq(&c, &t, &t2));
        prop_assert!(check(&c, &e, &t).is_ok());
    }

    #[test]
    fn type_equality_is_reflexive_and_symmetric(s1 in any::<u64>(), s2 in any::<u64>()) {
        let mut g = Gen::new(s1);
        let c = g.context(3);
        let a = g.ty(&c, 3);
        let b = Gen::new(s2).ty(&c, 3);
        prop_assert!(type_eq(&c, &a, &a));
        prop_assert_eq!(type_eq(&c, &a, &b), type_eq(&c, &b, &a));
        prop_assert_eq!(type_eq(&c, &a, &b), alpha_eq_type(&a, &b));
    }

    #[test]
    fn eta_expansions_recheck(seed in any::<u64>()) {
        let Some((c, t, e)) = sample(seed) else { return Ok(()) };
        let eta = match &t {
            Type::Arrow(a, _) => {
                let x = fresh("x");
                Term::Lam(x.clone(), Some((**a).clone()), Box::new(Term::app(e.clone(), Term::var(&x))))
            }
            Type::Boxed(phi, n, _) => {
                let u = fresh("U");
                let h = domain(phi);
                let body = Term::Var(u.clone(), Subst::id(&h));
                Term::LetBox(h.clone(), *n, u, Box::new(e.clone()), Box::new(Term::boxed(h, *n, body)))
            }
            _ => return Ok(()),
        };
        prop_assert!(check(&c, &eta, &t).is_ok(), "{}", eta);
    }
}
