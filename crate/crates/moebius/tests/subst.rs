use moebius::context::{chop_lower, domain, erase, insert, merge};
use moebius::frontend::{parse_context, parse_term, parse_type};
use moebius::metatheory::gen::{freshen_ctx, Gen};
use moebius::subst::{
    apply_ctx, apply_subst, apply_term, apply_type, single_term, single_type, Sub,
};
use moebius::syntax::{
    alpha_eq_ctx, alpha_eq_subst, alpha_eq_term, alpha_eq_type, name, Context, Decl, Hat,
    HatEntry, Subst, SubstEntry, Term, Type,
};
use moebius::typing::{check, kind_check, wf_context};
use proptest::prelude::*;

fn ctx(src: &str) -> Context {
    wf_context(&parse_context(src).unwrap()).unwrap()
}

fn ty(g: &Context, src: &str) -> Type {
    kind_check(g, &parse_type(src).unwrap()).unwrap()
}

fn term(g: &Context, src: &str, t: &Type) -> Term {
    check(g, &parse_term(src).unwrap(), t).unwrap()
}

fn he(n: &str, l: u32) -> HatEntry {
    HatEntry::new(name(n), l)
}

#[test]
fn lookup_finds_terms_and_renamings() {
    let e = SubstEntry::Term(Hat::empty(), 0, Term::Int(3));
    let s = Sub::new(&Subst(vec![e.clone()]), &Hat(vec![he("x", 0)])).unwrap();
    assert_eq!(s.lookup(&name("x")), Some(&e));
    let r = SubstEntry::RenTerm(name("y"), 1);
    let s = Sub::new(&Subst(vec![r.clone()]), &Hat(vec![he("x", 1)])).unwrap();
    assert_eq!(s.lookup(&name("x")), Some(&r));
    assert_eq!(Sub::default().lookup(&name("x")), None);
}

#[test]
fn domain_must_fit() {
    let e = SubstEntry::Term(Hat::empty(), 0, Term::Int(3));
    assert!(Sub::new(&Subst(vec![e.clone()]), &Hat::empty()).is_err());
    assert!(Sub::new(&Subst(vec![e]), &Hat(vec![he("'a", 0)])).is_err());
}

#[test]
fn chop_counts_high_entries() {
    assert!(Sub::default().chop(3).is_empty());
    let dom = Hat(vec![he("u", 2), he("v", 1), he("x", 0)]);
    let s = Sub::id(&dom);
    for n in 0..4 {
        let expected = dom.0.iter().filter(|d| d.level >= n).count();
        assert_eq!(s.chop(n).subst().len(), expected);
    }
}

#[test]
fn insert_matches_context_insert() {
    let c = ctx("'a:( |-^2 *), 'b:( |- *), 'c:*");
    let mut s = Sub::id(&domain(&c));
    s.insert(he("'d", 1), SubstEntry::RenType(name("'d"), 1));
    let c2 = insert(&c, Decl::ty("'d", Context::empty(), 1)).unwrap();
    assert_eq!(s.dom(), domain(&c2));
}

#[test]
fn append_then_erase_is_append_of_domains() {
    let a = Sub::id(&Hat(vec![he("u", 1)]));
    let b = Sub::id(&Hat(vec![he("x", 0), he("y", 0)]));
    let names: Vec<String> = a.extend(&b).dom().0.iter().map(|e| e.name.to_string()).collect();
    assert_eq!(names, ["u", "x", "y"]);
    assert_eq!(a.extend(&Sub::default()).subst(), a.subst());
}

#[test]
fn type_variable_solution_reaches_both_sides_of_an_arrow() {
    let g = ctx("'a:*");
    let t = ty(&g, "'a -> 'a");
    let s = single_type(&Hat::empty(), 0, &Type::Int, &name("'a"));
    assert_eq!(apply_type(&s, &t).unwrap(), Type::arrow(Type::Int, Type::Int));
}

#[test]
fn substitution_skips_boxes_above_its_level() {
    let g = ctx("x:int");
    let t = ty(&g, "[ |-^1 int]");
    let e = term(&g, "box(3)", &t);
    let s = single_term(&Hat::empty(), 0, &Term::Int(7), &name("x"));
    assert_eq!(apply_type(&s, &t).unwrap(), t);
    assert_eq!(apply_term(&s, &e).unwrap(), e);
}

#[test]
fn lambda_bodies_see_the_substitution() {
    let g = ctx("y:int");
    let t = ty(&g, "int -> int");
    let e = term(&g, "fn x -> x + y", &t);
    let s = single_term(&Hat::empty(), 0, &Term::Int(5), &name("y"));
    let want = term(&Context::empty(), "fn z -> z + 5", &t);
    assert!(alpha_eq_term(&apply_term(&s, &e).unwrap(), &want));
}

#[test]
fn closure_substitution_splices_code() {
    let g = ctx("u:(x:int |- int)");
    let bt = ty(&g, "[y:int |- int]");
    let e = term(&g, "box(y. u with y)", &bt);
    let x = ctx("x:int");
    let body = term(&x, "x + 2", &Type::Int);
    let s = single_term(&erase(&x).unwrap(), 1, &body, &name("u"));
    let want = term(&Context::empty(), "box(y. y + 2)", &bt);
    assert!(alpha_eq_term(&apply_term(&s, &e).unwrap(), &want));
}

#[test]
fn identity_solution_is_neutral() {
    let g = ctx("'a:(x:int |- *), z:int");
    let t = ty(&g, "'a with 4 -> [x:int |- 'a]");
    let h = Hat(vec![he("x", 0)]);
    let id = Type::Var(name("'a"), Subst::id(&h));
    let s = single_type(&h, 1, &id, &name("'a"));
    assert!(alpha_eq_type(&apply_type(&s, &t).unwrap(), &t));
}

#[test]
fn empty_substitution_targets() {
    let s = Sub::id(&Hat(vec![he("x", 0)]));
    assert_eq!(apply_subst(&s, &Subst::empty()).unwrap(), Subst::empty());
    assert_eq!(apply_ctx(&s, &Context::empty()).unwrap(), Context::empty());
}

#[test]
fn renaming_entries_resolve_to_terms() {
    let rho = Subst(vec![SubstEntry::RenTerm(name("x"), 0)]);
    let s = single_term(&Hat::empty(), 0, &Term::Int(1), &name("x"));
    let out = apply_subst(&s, &rho).unwrap();
    assert!(matches!(&out.0[0], SubstEntry::Term(_, 0, Term::Int(1))));
}

fn setting(seed: u64) -> Option<(Context, Context, Subst, Type, Term)> {
    let mut g = Gen::new(seed);
    let target = g.context(3);
    let psi = g.context(3);
    let sigma = g.subst(&target, &psi, 0, 2)?;
    let t = g.ty(&psi, 2);
    let e = g.typed(&psi, &t, 3)?;
    Some((target, psi, sigma, t, e))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn identity_is_neutral_on_every_kind(seed in any::<u64>()) {
        let Some((target, psi, sigma, t, e)) = setting(seed) else { return Ok(()) };
        let id = Sub::id(&domain(&psi));
        prop_assert!(alpha_eq_type(&apply_type(&id, &t).unwrap(), &t));
        prop_assert!(alpha_eq_term(&apply_term(&id, &e).unwrap(), &e));
        let tid = Sub::id(&domain(&target));
        prop_assert!(alpha_eq_subst(&apply_subst(&tid, &sigma).unwrap(), &sigma));
        let mut g = Gen::new(seed ^ 1);
        let local = g.local_ctx(&psi, 3, 3);
        prop_assert!(alpha_eq_ctx(&apply_ctx(&id, &local).unwrap(), &local));
    }

    #[test]
    fn chopping_commutes_with_substitution(seed in any::<u64>(), n in 0u32..4) {
        let Some((_, psi, sigma, _, _)) = setting(seed) else { return Ok(()) };
        let s = Sub::new(&sigma, &domain(&psi)).unwrap();
        let local = Gen::new(seed ^ 2).local_ctx(&psi, 4, 4);
        let a = chop_lower(&apply_ctx(&s, &local).unwrap(), n);
        let b = apply_ctx(&s, &chop_lower(&local, n)).unwrap();
        prop_assert!(alpha_eq_ctx(&a, &b), "{a} vs {b}");
    }

    #[test]
    fn substitution_distributes_over_merge(seed in any::<u64>()) {
        let Some((_, psi, sigma, _, _)) = setting(seed) else { return Ok(()) };
        let s = Sub::new(&sigma, &domain(&psi)).unwrap();
        let mut g = Gen::new(seed ^ 3);
        let a = g.local_ctx(&psi, 3, 3);
        let (b, _) = freshen_ctx(&g.local_ctx(&psi, 3, 3));
        let m = merge(&a, &b).unwrap();
        let lhs = apply_ctx(&s, &m).unwrap();
        let rhs = merge(&apply_ctx(&s, &a).unwrap(), &apply_ctx(&s, &b).unwrap()).unwrap();
        prop_assert!(alpha_eq_ctx(&lhs, &rhs), "{lhs} vs {rhs}");
    }
}
