use std::process::Command;

use moebius::context::is_sorted;
use moebius::frontend::{parse_term, parse_type};
use moebius::metatheory::{
    check_lemma, check_lemma_with, sample_seed, shrink, Gen, Lemma, Mode, Report,
};
use moebius::syntax::{alpha_eq_term, alpha_eq_type, Context, Decl, Type};
use moebius::typing::{check, kind_check, type_eq, type_of, wf_context};

#[test]
fn empty_budget_gives_empty_context() {
    for seed in 0..20 {
        assert!(Gen::new(seed).context(0).is_empty());
    }
}

fn nested(d: &Decl) -> bool {
    d.local().is_some_and(|c| !c.is_empty())
}

#[test]
fn generated_contexts_are_well_formed_and_varied() {
    let mut levels = [0usize; 3];
    let mut with_local = 0;
    for seed in 0..1000 {
        let mut g = Gen::new(seed);
        g.max_level = 2;
        let c = g.context(4);
        assert!(wf_context(&c).is_ok(), "{c}");
        assert!(is_sorted(&c));
        for d in &c.0 {
            let l = d.level().unwrap() as usize;
            assert!(l <= 2);
            levels[l] += 1;
        }
        if c.0.iter().any(nested) {
            with_local += 1;
        }
    }
    assert!(levels.iter().all(|&n| n > 100), "{levels:?}");
    assert!(with_local > 100, "{with_local}");
}

#[test]
fn generated_terms_have_their_target_type() {
    let empty = Context::empty();
    let e = Gen::new(1).typed(&empty, &Type::Int, 0).unwrap();
    assert_eq!(type_of(&empty, &e).unwrap(), Type::Int);
    let bt = kind_check(&empty, &parse_type("[x:int |- int]").unwrap()).unwrap();
    let found = (0..20).filter_map(|s| Gen::new(s).typed(&empty, &bt, 3)).next().unwrap();
    assert!(type_eq(&empty, &type_of(&empty, &found).unwrap(), &bt));
    let mut ok = 0;
    for seed in 0..500 {
        let mut g = Gen::new(seed);
        let c = g.context(3);
        let t = g.ty(&c, 2);
        if let Some(e) = g.typed(&c, &t, 3) {
            let t2 = type_of(&c, &e).unwrap();
            assert!(type_eq(&c, &t, &t2), "{e} : {t2}, wanted {t}");
            ok += 1;
        }
    }
    assert!(ok > 250, "{ok}");
}

#[test]
fn generators_are_deterministic() {
    let found = (0..20).find_map(|s| Some((s, Gen::new(s).program(4)?))).unwrap();
    let (seed, (a, t)) = found;
    let (b, u) = Gen::new(seed).program(4).unwrap();
    assert!(alpha_eq_term(&a, &b));
    assert!(alpha_eq_type(&t, &u));
    assert_ne!(sample_seed(1, 0), sample_seed(1, 1));
    assert_ne!(sample_seed(1, 0), sample_seed(2, 0));
}

fn summary(r: &Report) -> (usize, usize, usize) {
    (r.passed, r.gave_up, r.counterexamples.len())
}

#[test]
fn parallel_and_sequential_runs_agree() {
    for lemma in [Lemma::CommutingSubst, Lemma::UnifySound, Lemma::Preservation] {
        let p = check_lemma_with(lemma, 40, 3, Mode::Parallel);
        let s = check_lemma_with(lemma, 40, 3, Mode::Sequential);
        assert_eq!(summary(&p), summary(&s), "{lemma}");
    }
}

#[test]
fn lemma_names_round_trip() {
    assert_eq!(Lemma::all().len(), 14);
    for l in Lemma::all() {
        assert_eq!(Lemma::from_name(l.name()), Some(l));
    }
    assert_eq!(Lemma::from_name("no-such-lemma"), None);
}

#[test]
fn reports_need_exercised_samples() {
    let r = check_lemma(Lemma::UnifyCompatible, 20, 0);
    assert!(r.passed());
    let empty = Report { passed: 0, ..r.clone() };
    assert!(!empty.passed());
    assert!(r.to_string().starts_with("unify-compatibility: 20 samples, "));
}

#[test]
fn shrinking_finds_a_smallest_failing_subterm() {
    let empty = Context::empty();
    let e = check(&empty, &parse_term("(1 + 2) * (3 + (4 - 5))").unwrap(), &Type::Int).unwrap();
    let prop = |t: &moebius::syntax::Term| if t.size() >= 3 { Err(format!("size {}", t.size())) } else { Ok(()) };
    let (small, msg) = shrink(&empty, &e, &Type::Int, &prop);
    assert!(small.size() < e.size());
    assert!(prop(&small).is_err());
    assert_eq!(msg, format!("size {}", small.size()));
}

#[test]
fn meta_subcommand() {
    let out = Command::new(env!("CARGO_BIN_EXE_moebius"))
        .args(["meta", "--lemma", "unify-totality", "--samples", "30", "--seed", "5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("unify-totality: 30 samples, 30 passed"), "{text}");
    let out = Command::new(env!("CARGO_BIN_EXE_moebius"))
        .args(["meta", "--lemma", "bogus"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
