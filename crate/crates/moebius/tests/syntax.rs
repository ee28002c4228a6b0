use moebius::context::erase;
use moebius::frontend::{parse_context, parse_term};
use moebius::metatheory::{alpha_variant, Gen};
use moebius::syntax::{
    alpha_eq_term, alpha_eq_type, fresh, rename_term, Context, Hat, HatEntry, Term, Type,
};
use moebius::typing::wf_context;
use proptest::prelude::*;

fn ctx(src: &str) -> Context {
    wf_context(&parse_context(src).unwrap()).unwrap()
}

fn hat(items: &[(&str, u32)]) -> Hat {
    Hat(items.iter().map(|(n, l)| HatEntry::new((*n).into(), *l)).collect())
}

#[test]
fn erase_of_empty_is_empty() {
    assert_eq!(erase(&Context::empty()).unwrap(), Hat::empty());
}

#[test]
fn erase_keeps_names_and_levels() {
    assert_eq!(erase(&ctx("x:int")).unwrap(), hat(&[("x", 0)]));
    assert_eq!(
        erase(&ctx("u:(x:int |- int), x:int")).unwrap(),
        hat(&[("u", 1), ("x", 0)])
    );
}

#[test]
fn level_of_contexts() {
    assert_eq!(Context::empty().level(), 0);
    assert_eq!(ctx("x:int").level(), 1);
    assert_eq!(ctx("u:(x:int |- int), x:int").level(), 2);
}

#[test]
fn alpha_equivalence_examples() {
    let p = |s: &str| parse_term(s).unwrap();
    assert!(alpha_eq_term(&p("fn x -> x"), &p("fn y -> y")));
    assert!(alpha_eq_term(&p("box(x. x + 2)"), &p("box(y. y + 2)")));
    assert!(!alpha_eq_term(&p("fn x -> x"), &p("fn x -> fn y -> x")));
    assert!(!alpha_eq_term(&p("fn x -> fn y -> x"), &p("fn x -> fn y -> y")));
}

#[test]
fn alpha_equivalence_ignores_annotations() {
    let p = |s: &str| parse_term(s).unwrap();
    assert!(alpha_eq_term(&p("fn (x : int) -> x"), &p("fn y -> y")));
}

fn sample(seed: u64) -> Option<(Context, Type, Term)> {
    let mut g = Gen::new(seed);
    let c = g.context(3);
    let t = g.ty(&c, 2);
    let e = g.term(&c, &t, 3)?;
    Some((c, t, e))
}

fn rebind(e: &Term) -> (Term, Term) {
    let x = fresh("x");
    let y = fresh("y");
    let a = Term::lam(&x, Some(Type::Int), e.clone());
    let b = Term::lam(&y, Some(Type::Int), rename_term(e, &vec![(x.clone(), y.clone())]));
    (a, b)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn erase_preserves_length_and_order(seed in any::<u64>()) {
        let c = Gen::new(seed).context(5);
        let h = erase(&c).unwrap();
        prop_assert_eq!(h.len(), c.len());
        for (e, d) in h.0.iter().zip(&c.0) {
            prop_assert_eq!(Some(&e.name), d.name());
            prop_assert_eq!(Some(e.level), d.level());
        }
    }

    #[test]
    fn alpha_equivalence_is_reflexive_and_symmetric(s1 in any::<u64>(), s2 in any::<u64>()) {
        let (Some((_, t1, e1)), Some((_, t2, e2))) = (sample(s1), sample(s2)) else {
            return Ok(());
        };
        prop_assert!(alpha_eq_term(&e1, &e1));
        prop_assert!(alpha_eq_type(&t1, &t1));
        prop_assert_eq!(alpha_eq_term(&e1, &e2), alpha_eq_term(&e2, &e1));
        prop_assert_eq!(alpha_eq_type(&t1, &t2), alpha_eq_type(&t2, &t1));
    }

    #[test]
    fn alpha_equivalence_is_transitive(seed in any::<u64>()) {
        let Some((_, t, e)) = sample(seed) else { return Ok(()) };
        let (a, b) = rebind(&e);
        let (_, c) = rebind(&e);
        prop_assert!(alpha_eq_term(&a, &b));
        prop_assert!(alpha_eq_term(&b, &c));
        prop_assert!(alpha_eq_term(&a, &c));
        let (t1, t2) = (alpha_variant(&t), alpha_variant(&t));
        prop_assert!(alpha_eq_type(&t, &t1) && alpha_eq_type(&t1, &t2) && alpha_eq_type(&t, &t2));
    }
}
