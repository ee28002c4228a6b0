use std::path::PathBuf;

use moebius::corpus::{corpus_run, run_source};
use moebius::frontend::{parse_program, pretty};
use moebius::syntax::{alpha_eq_term, alpha_eq_type, Term, Type};
use moebius::typing::check_program;

fn examples() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples")
}

#[test]
fn every_program_matches_its_golden_file() {
    let entries = corpus_run(&examples()).unwrap();
    assert!(entries.len() >= 17);
    for e in &entries {
        assert!(
            e.matches(),
            "{} differs from its golden file:\n{}",
            e.program.display(),
            e.actual
        );
    }
}

#[test]
fn matches_agree_with_the_case_rule() {
    let entries = corpus_run(&examples()).unwrap();
    let matches: u64 = entries.iter().map(|e| e.run.matches).sum();
    let bad: u64 = entries.iter().map(|e| e.run.discrepancies).sum();
    assert!(matches > 0);
    assert_eq!(bad, 0);
}

#[test]
fn map_reduce_builds_code_inside_code() {
    let src = std::fs::read_to_string(examples().join("map_reduce.mbs")).unwrap();
    let run = run_source(&src);
    let v = run.value.unwrap().unwrap();
    let Term::Boxed(h, 2, body) = v else { panic!("expected a level-2 box") };
    assert_eq!(h.len(), 3);
    let mut inner = &*body;
    let mut nested = 0;
    while let Term::LetBox(_, 1, _, _, rest) = inner {
        nested += 1;
        inner = rest;
    }
    assert!(nested >= 1);
    let checked = run.checked.unwrap();
    let (_, t) = checked.main.unwrap();
    let Type::Boxed(_, 2, code) = t else { panic!() };
    assert!(matches!(*code, Type::Boxed(_, 1, _)));
}

#[test]
fn corpus_round_trips_through_the_printer() {
    for e in corpus_run(&examples()).unwrap() {
        let src = std::fs::read_to_string(&e.program).unwrap();
        let p1 = parse_program(&src).unwrap();
        let printed = pretty::program(&p1);
        let p2 = parse_program(&printed)
            .unwrap_or_else(|err| panic!("{}: {err}\n{printed}", e.program.display()));
        let (Ok(c1), Ok(c2)) = (check_program(&p1), check_program(&p2)) else {
            panic!("{} does not check after printing", e.program.display())
        };
        assert_eq!(c1.defs.len(), c2.defs.len());
        for ((n1, t1, e1), (n2, t2, e2)) in c1.defs.iter().zip(&c2.defs) {
            assert_eq!(n1, n2);
            assert!(alpha_eq_type(t1, t2), "{n1}");
            assert!(alpha_eq_term(e1, e2), "{n1}");
        }
        match (&c1.main, &c2.main) {
            (Some((m1, t1)), Some((m2, t2))) => {
                assert!(alpha_eq_term(m1, m2), "{}", e.program.display());
                assert!(alpha_eq_type(t1, t2));
            }
            (None, None) => {}
            _ => panic!("{} lost its entry expression", e.program.display()),
        }
    }
}

#[test]
fn elaboration_is_deterministic() {
    for e in corpus_run(&examples()).unwrap() {
        let src = std::fs::read_to_string(&e.program).unwrap();
        let again = moebius::corpus::render(&run_source(&src));
        assert_eq!(again, e.actual, "{}", e.program.display());
    }
}
