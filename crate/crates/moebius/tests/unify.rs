use std::collections::HashSet;

use moebius::context::append;
use moebius::frontend::{parse_context, parse_type};
use moebius::metatheory::Gen;
use moebius::syntax::{name, Context, CtxType, Subst, SubstEntry, Type};
use moebius::typing::{kind_check, type_eq, wf_context};
use moebius::unify::{
    match_ctxtype, occurs, refines, solutions, unify_context, unify_ctxtype, unify_subst,
    unify_type,
};
use proptest::prelude::*;

fn ctx(src: &str) -> Context {
    wf_context(&parse_context(src).unwrap()).unwrap()
}

fn ty(g: &Context, src: &str) -> Type {
    kind_check(g, &parse_type(src).unwrap()).unwrap()
}

fn solved(after: &Context) -> Vec<(String, Type)> {
    solutions(after).into_iter().map(|(n, _, t)| (n.to_string(), t)).collect()
}

#[test]
fn occurs_check() {
    let g = ctx("'a:*");
    assert!(occurs(&g, &name("'a"), &ty(&g, "'a -> int")));
    assert!(!occurs(&g, &name("'a"), &Type::Int));
    let g = ctx("'a:*, 'b := (. 'a) : *");
    assert!(occurs(&g, &name("'a"), &ty(&g, "'b")));
    assert!(!occurs(&g, &name("'b"), &ty(&g, "'a")));
}

#[test]
fn flexible_variable_is_solved_under_its_context() {
    let g = ctx("'a:(x:int |- *)");
    let phi = ctx("x:int");
    let whole = append(&g, &phi).unwrap();
    let out = unify_type(&g, &phi, &ty(&whole, "'a"), &Type::Int);
    assert_eq!(solved(&out), [("'a".to_string(), Type::Int)]);
    let (_, hat, _) = &solutions(&out)[0];
    assert_eq!(hat.len(), 1);
    assert!(refines(&out, &g));
}

#[test]
fn occurs_failure_and_clash_are_contradictions() {
    let g = ctx("'a:*");
    let out = unify_type(&g, &Context::empty(), &ty(&g, "'a"), &ty(&g, "'a -> int"));
    assert!(out.has_absurd());
    let out = unify_type(&g, &Context::empty(), &Type::Int, &Type::Bool);
    assert!(out.has_absurd());
}

#[test]
fn rigid_match_adds_nothing() {
    let t = ty(&Context::empty(), "int -> int");
    assert_eq!(unify_type(&Context::empty(), &Context::empty(), &t, &t), Context::empty());
}

#[test]
fn later_variable_is_solved_between_two_flexible_ones() {
    let g = ctx("'a:*, 'b:*");
    let out = unify_type(&g, &Context::empty(), &ty(&g, "'a"), &ty(&g, "'b"));
    let s = solved(&out);
    assert_eq!(s.len(), 1);
    assert_eq!(s[0].0, "'b");
}

#[test]
fn context_unification() {
    let g = ctx("'a:*");
    assert_eq!(unify_context(&g, &Context::empty(), &Context::empty(), &Context::empty()), g);
    let psi = Context(vec![moebius::syntax::Decl::term("x", Context::empty(), 0, ty(&g, "'a"))]);
    let phi = ctx("x:int");
    let out = unify_context(&g, &Context::empty(), &psi, &phi);
    assert_eq!(solved(&out), [("'a".to_string(), Type::Int)]);
    let out = unify_context(&g, &Context::empty(), &phi, &ctx("x:int, y:int"));
    assert!(out.has_absurd());
}

#[test]
fn substitution_unification() {
    let g = ctx("'a:*");
    let e = Context::empty();
    assert_eq!(unify_subst(&g, &e, &Subst::empty(), &Subst::empty(), &e), g);
    let psi = ctx("'c:*");
    let h = moebius::syntax::Hat::empty();
    let s1 = Subst(vec![SubstEntry::Type(h.clone(), 0, ty(&g, "'a"))]);
    let s2 = Subst(vec![SubstEntry::Type(h.clone(), 0, Type::Int)]);
    let out = unify_subst(&g, &e, &s1, &s2, &psi);
    assert_eq!(solved(&out), [("'a".to_string(), Type::Int)]);
    let s3 = Subst(vec![SubstEntry::Type(h, 0, Type::Bool)]);
    assert!(unify_subst(&Context::empty(), &e, &s2, &s3, &psi).has_absurd());
}

fn ctxtype(g: &Context, src: &str) -> CtxType {
    match ty(g, src) {
        Type::Boxed(ctx, level, t) => CtxType { ctx, level, ty: *t },
        t => panic!("not a box type: {t}"),
    }
}

#[test]
fn contextual_type_unification() {
    let g = ctx("'a:( |- *)");
    let a = ctxtype(&g, "[x:'a |- 'a]");
    let b = ctxtype(&g, "[x:int |- int]");
    let out = unify_ctxtype(&g, &a, &b);
    assert_eq!(solved(&out), [("'a".to_string(), Type::Int)]);
    let e = Context::empty();
    let c = ctxtype(&e, "[x:int |- int]");
    assert_eq!(unify_ctxtype(&e, &c, &c), e);
    assert!(unify_ctxtype(&e, &ctxtype(&e, "[int]"), &ctxtype(&e, "[bool]")).has_absurd());
    let d = ctxtype(&e, "[x:int |-^2 int]");
    assert!(unify_ctxtype(&e, &c, &d).has_absurd());
}

#[test]
fn matching_never_solves_frozen_variables() {
    let g = ctx("'a:( |- *), 'b:( |- *)");
    let scrut = ctxtype(&g, "[x:'a |- 'a]");
    let pat = ctxtype(&g, "[x:int |- int]");
    let frozen: HashSet<_> = [name("'a")].into_iter().collect();
    assert!(match_ctxtype(&g, &scrut, &pat, &frozen).has_absurd());
    let pat = ctxtype(&g, "[x:'b |- 'b]");
    let out = match_ctxtype(&g, &scrut, &pat, &frozen);
    assert!(!out.has_absurd());
    assert_eq!(solved(&out)[0].0, "'b");
}

#[test]
fn refinement_relation() {
    let g = ctx("'a:*");
    assert!(refines(&g, &g));
    assert!(refines(&ctx("'a := (. int) : *"), &g));
    assert!(!refines(&ctx("'b:*"), &g));
    assert!(!refines(&g, &ctx("'a := (. int) : *")));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn unification_is_monotone_and_sound(seed in any::<u64>()) {
        let mut gen = Gen::new(seed);
        let g = gen.context(4);
        let (t, s) = (gen.ty(&g, 3), gen.ty(&g, 3));
        let out = unify_type(&g, &Context::empty(), &t, &s);
        prop_assert!(refines(&out, &g));
        if !out.has_absurd() {
            prop_assert!(type_eq(&out, &t, &s));
        }
        let r = gen.ty(&g, 2);
        let out2 = unify_type(&out, &Context::empty(), &s, &r);
        prop_assert!(refines(&out2, &out));
        prop_assert!(refines(&out2, &g));
    }

    #[test]
    fn unifying_a_type_with_itself_adds_nothing(seed in any::<u64>()) {
        let mut gen = Gen::new(seed);
        let g = gen.context(4);
        let t = gen.ty(&g, 3);
        prop_assert_eq!(unify_type(&g, &Context::empty(), &t, &t), g);
    }
}
