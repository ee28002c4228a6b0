use std::path::PathBuf;
use std::process::Command;

use moebius::frontend::dump::dump_program;
use moebius::frontend::{parse_program, parse_term, parse_type, pretty};
use moebius::metatheory::{reparses, Gen};
use moebius::syntax::{Context, Hat, Term, Type};
use moebius::typing::{check, check_program, kind_check};
use proptest::prelude::*;

fn example(file: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples").join(file)
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_moebius")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn path(file: &str) -> String {
    example(file).display().to_string()
}

#[test]
fn nth_listing_round_trips() {
    let src = std::fs::read_to_string(example("nth.mbs")).unwrap();
    let p = parse_program(&src).unwrap();
    let again = parse_program(&pretty::program(&p)).unwrap();
    assert_eq!(pretty::program(&again), pretty::program(&p));
}

#[test]
fn unannotated_box_gets_level_one() {
    let t = kind_check(&Context::empty(), &parse_type("[int]").unwrap()).unwrap();
    assert_eq!(t, Type::boxed(Context::empty(), 1, Type::Int));
    let e = check(&Context::empty(), &parse_term("box(0)").unwrap(), &t).unwrap();
    assert_eq!(e, Term::boxed(Hat::empty(), 1, Term::Int(0)));
    assert_eq!(pretty::ty(&t), "[int]");
}

#[test]
fn bare_variable_means_identity() {
    assert!(matches!(parse_term("R").unwrap(), Term::Raw(_, None)));
    let p = parse_program("f : [x:int |- int] -> [x:int |- int] = fn c -> let box (x. R) = c in box(x. R);").unwrap();
    let c = check_program(&p).unwrap();
    let dump = dump_program(&c.defs, None);
    assert!(dump.contains("(var R (subst (rterm x"), "{dump}");
}

#[test]
fn parse_errors_carry_positions() {
    let err = parse_program("f : int = ;").unwrap_err();
    assert!(err.to_string().contains(':'), "{err}");
}

#[test]
fn nat_is_an_alias_for_int() {
    assert_eq!(parse_type("nat").unwrap(), Type::Int);
}

#[test]
fn elaboration_is_deterministic() {
    let src = std::fs::read_to_string(example("map_reduce.mbs")).unwrap();
    let p = parse_program(&src).unwrap();
    let a = check_program(&p).unwrap();
    let b = check_program(&p).unwrap();
    assert_eq!(dump_program(&a.defs, a.main.as_ref()), dump_program(&b.defs, b.main.as_ref()));
}

#[test]
fn cli_check() {
    let (code, out, _) = cli(&["check", &path("nth.mbs")]);
    assert_eq!(code, 0);
    assert!(out.starts_with("nth : int -> ['a : *, v : 'a list |- 'a]"));
}

#[test]
fn cli_run() {
    let (code, out, _) = cli(&["run", &path("church_add.mbs")]);
    assert_eq!(code, 0);
    assert_eq!(out.trim(), "box('a, x, f. f (f (f (f (f x)))))");
}

#[test]
fn cli_exit_codes() {
    assert_eq!(cli(&["run", &path("bad_case.mbs")]).0, 3);
    let dir = std::env::temp_dir();
    let bad_type = dir.join("moebius_bad_type.mbs");
    std::fs::write(&bad_type, "x : int = true;\n").unwrap();
    assert_eq!(cli(&["check", &bad_type.display().to_string()]).0, 1);
    let bad_parse = dir.join("moebius_bad_parse.mbs");
    std::fs::write(&bad_parse, "x : int = (;\n").unwrap();
    assert_eq!(cli(&["check", &bad_parse.display().to_string()]).0, 2);
}

#[test]
fn cli_trace_and_fuel() {
    let (code, out, _) = cli(&["run", "--trace", &path("nth_demo.mbs")]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert!(lines.len() > 2);
    assert!(lines[..lines.len() - 1].iter().all(|l| l.starts_with("⟹ ")));
    let (code, _, err) = cli(&["run", "--fuel", "3", &path("church_add.mbs")]);
    assert_eq!(code, 3);
    assert!(err.contains("fuel"));
    let out = Command::new(env!("CARGO_BIN_EXE_moebius"))
        .args(["run", &path("church_add.mbs")])
        .env("MOEBIUS_FUEL", "3")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn cli_dump_is_stable() {
    let (c1, a, _) = cli(&["dump-ast", &path("pred.mbs")]);
    let (c2, b, _) = cli(&["dump-ast", &path("pred.mbs")]);
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(a, b);
    assert!(a.starts_with("(def gen_church "));
}

#[test]
fn cli_refine_without_constraints_fails() {
    assert_eq!(cli(&["check", &path("refine.mbs")]).0, 0);
    assert_eq!(cli(&["--no-constraints", "check", &path("refine.mbs")]).0, 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn generated_terms_round_trip(seed in any::<u64>()) {
        let mut g = Gen::new(seed);
        let c = g.context(3);
        let t = g.ty(&c, 2);
        let Some(e) = g.term(&c, &t, 3) else { return Ok(()) };
        prop_assert!(reparses(&c, &e, &t).is_ok());
    }

    #[test]
    fn generated_types_round_trip(seed in any::<u64>()) {
        let mut g = Gen::new(seed);
        let c = g.context(3);
        let t = g.ty(&c, 3);
        let back = kind_check(&c, &parse_type(&pretty::ty(&t)).unwrap()).unwrap();
        prop_assert!(moebius::syntax::alpha_eq_type(&t, &back), "{}", t);
    }
}
