use std::path::PathBuf;

use moebius::eval::{evaluate, is_value, match_branch, premises_hold, EvalError, Machine};
use moebius::frontend::{parse_program, parse_term, parse_type, pretty};
use moebius::metatheory::{oracle_agrees, preserves, Gen};
use moebius::syntax::{alpha_eq_term, Branch, Context, CtxType, SubstEntry, Term, Type};
use moebius::typing::{check, check_program, infer, kind_check};
use proptest::prelude::*;

fn closed(src: &str) -> Term {
    let c = check_program(&parse_program(src).unwrap()).unwrap();
    c.closed_main().unwrap().unwrap()
}

fn example(file: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples").join(file);
    std::fs::read_to_string(p).unwrap()
}

fn value(src: &str) -> Term {
    evaluate(&closed(src), 100_000).unwrap()
}

fn printed(src: &str) -> String {
    pretty::term(&value(src))
}

#[test]
fn beta_steps() {
    let (e, _) = infer(&Context::empty(), &parse_term("(fn (x : int) -> x + 1) 2").unwrap()).unwrap();
    let mut trace = Vec::new();
    let v = Machine::new(10).run_with(&e, |t| trace.push(pretty::term(t))).unwrap();
    assert_eq!(trace, ["2 + 1", "3"]);
    assert_eq!(v, Term::Int(3));
}

#[test]
fn stepping_a_value_is_an_error() {
    let mut m = Machine::new(10);
    assert!(matches!(m.step(&Term::Int(1)), Err(EvalError::Stuck(_))));
}

#[test]
fn splicing_example() {
    let want = check(
        &Context::empty(),
        &parse_term("box(y. 3 * y + (2 * y + 2))").unwrap(),
        &kind_check(&Context::empty(), &parse_type("[y:int |- int]").unwrap()).unwrap(),
    )
    .unwrap();
    assert!(alpha_eq_term(&value(&example("intro_letbox.mbs")), &want));
}

#[test]
fn combine_true_runs_to_27() {
    assert_eq!(value(&example("combine_demo.mbs")), Term::Int(27));
}

#[test]
fn church_numerals() {
    let gen = example("gen_church.mbs");
    assert_eq!(printed(&gen), "box('a, x, f. f (f x))");
    let five = gen.replace("gen_church 2;", "gen_church 5;");
    assert_eq!(printed(&five), "box('a, x, f. f (f (f (f (f x)))))");
    assert_eq!(printed(&example("church_add.mbs")), "box('a, x, f. f (f (f (f (f x)))))");
    assert_eq!(printed(&example("nth_demo.mbs")), "box('a, v. hd (tl (tl v)))");
}

fn case_parts(src: &str) -> (Term, CtxType, Vec<Branch>) {
    let Term::Ann(case, _) = closed(src) else { panic!("not annotated") };
    let Term::Case(s, ann, bs) = *case else { panic!("not a case") };
    (evaluate(&s, 1000).unwrap(), ann, bs)
}

const CHURCH: &str = "['a:*, x:'a, f:'a -> 'a |- 'a]";

fn pred_case(numeral: &str) -> String {
    format!(
        "(case (box('a,x,f. {numeral}) : {CHURCH}) : {CHURCH} of
         | box('a,x,f. x) -> 0
         | {{X:('a:*, x:'a, f:'a -> 'a |- 'a)}} box('a,x,f. f X) -> 1 : int);"
    )
}

#[test]
fn pred_matches_strip_one_application() {
    let (v, ann, bs) = case_parts(&pred_case("f x"));
    assert!(match_branch(&v, &ann, &bs[0]).is_none());
    let sigma = match_branch(&v, &ann, &bs[1]).unwrap();
    assert!(premises_hold(&v, &ann, &bs[1], &sigma));
    let SubstEntry::Term(h, _, Term::Var(x, _)) = &sigma.0[0] else { panic!("{sigma}") };
    assert_eq!(x, &h.0[1].name);
}

#[test]
fn first_matching_branch_wins() {
    assert_eq!(value(&pred_case("x")), Term::Int(0));
    assert_eq!(value(&pred_case("f (f x)")), Term::Int(1));
    let (v, ann, bs) = case_parts(&pred_case("f (f x)"));
    let sigma = match_branch(&v, &ann, &bs[1]).unwrap();
    let SubstEntry::Term(h, _, t) = &sigma.0[0] else { panic!() };
    let Term::App(f, x) = t else { panic!("{t}") };
    assert!(matches!(&**f, Term::Var(n, _) if n == &h.0[2].name));
    assert!(matches!(&**x, Term::Var(n, _) if n == &h.0[1].name));
}

#[test]
fn type_matching_refines_the_branch() {
    assert_eq!(value(&example("refine.mbs")), Term::Int(42));
}

#[test]
fn pred_of_three_is_two() {
    assert_eq!(printed(&example("pred.mbs")), "box('a, x, f. f (f x))");
}

#[test]
fn empty_case_is_a_match_failure() {
    let t = kind_check(&Context::empty(), &parse_type("[int]").unwrap()).unwrap();
    let b = check(&Context::empty(), &parse_term("box(0)").unwrap(), &t).unwrap();
    let Type::Boxed(ctx, level, ty) = t else { unreachable!() };
    let case = Term::Case(Box::new(b), CtxType { ctx, level, ty: *ty }, Vec::new());
    assert!(matches!(evaluate(&case, 10), Err(EvalError::MatchFailure(_))));
}

#[test]
fn missing_branch_is_a_runtime_error() {
    let src = example("bad_case.mbs");
    assert!(matches!(evaluate(&closed(&src), 1000), Err(EvalError::MatchFailure(_))));
}

#[test]
fn code_is_inert() {
    let (e, _) = infer(&Context::empty(), &parse_term("(box(1 + 2) : [int])").unwrap()).unwrap();
    assert!(is_value(&e));
    let mut m = Machine::new(10);
    let v = m.run(&e).unwrap();
    assert_eq!(m.steps, 0);
    assert_eq!(pretty::term(&v), "box(1 + 2)");
    assert!(infer(&Context::empty(), &parse_term("(fn (n : int) -> (box(n + 2) : [int])) 1").unwrap()).is_err());
    let (e, _) = infer(&Context::empty(), &parse_term("(fn (n : int) -> (box(3 * 2) : [int])) 1").unwrap()).unwrap();
    let mut m = Machine::new(10);
    assert_eq!(pretty::term(&m.run(&e).unwrap()), "box(3 * 2)");
    assert_eq!(m.steps, 1);
}

#[test]
fn divergence_runs_out_of_fuel() {
    let e = closed("spin : int -> int = fn n -> spin n;\n\nspin 0;\n");
    assert!(matches!(evaluate(&e, 500), Err(EvalError::OutOfFuel(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn generated_programs_preserve_types(seed in any::<u64>()) {
        let Some((e, t)) = Gen::new(seed).program(4) else { return Ok(()) };
        prop_assert!(preserves(&e, &t).is_ok(), "{}", e);
    }

    #[test]
    fn generated_matches_satisfy_the_case_rule(seed in any::<u64>()) {
        let Some((e, _)) = Gen::new(seed).case_program(4) else { return Ok(()) };
        prop_assert!(oracle_agrees(&e).is_ok(), "{}", e);
    }
}
