use std::path::PathBuf;

use moebius::frontend::{parse_context, parse_program, parse_term, parse_type};
use moebius::pattern::{pat_kind_check, pat_subst_check, pat_type_check, pattern_reflect};
use moebius::syntax::{free_in_type, Branch, Context, Hat, Subst, SubstEntry, Term, Type};
use moebius::typing::{check_program, kind_check, wf_context, ErrorKind};

fn ctx(src: &str) -> Context {
    wf_context(&parse_context(src).unwrap()).unwrap()
}

fn church() -> Context {
    ctx("'a:*, x:'a, f:'a -> 'a")
}

fn tvar() -> Type {
    kind_check(&church(), &parse_type("'a").unwrap()).unwrap()
}

#[test]
fn pattern_types_over_pattern_variables() {
    let gamma = ctx("z:int");
    let psi = ctx("'b:(z:int |- *), 'c:(z:int |- *)");
    assert!(pat_kind_check(&psi, &gamma, 1, &parse_type("'b -> 'c").unwrap()).is_ok());
    assert!(pat_kind_check(&Context::empty(), &gamma, 1, &parse_type("'b -> 'c").unwrap()).is_err());
}

#[test]
fn box_patterns_need_a_positive_level() {
    let t = Type::boxed(Context::empty(), 0, Type::Int);
    let err = pat_kind_check(&Context::empty(), &Context::empty(), 1, &t).unwrap_err();
    assert_eq!(err.kind, ErrorKind::LevelViolation);
}

#[test]
fn pred_patterns() {
    let g = church();
    let p1 = pat_type_check(&Context::empty(), &g, 1, &parse_term("x").unwrap(), &tvar()).unwrap();
    pattern_reflect(&Context::empty(), &g, 1, &p1, &tvar()).unwrap();
    let psi = ctx("X:('a:*, x:'a, f:'a -> 'a |- 'a)");
    let p2 = pat_type_check(&psi, &g, 1, &parse_term("f X").unwrap(), &tvar()).unwrap();
    pattern_reflect(&psi, &g, 1, &p2, &tvar()).unwrap();
}

#[test]
fn lambda_patterns_extend_the_bound_context() {
    let gamma = ctx("z:int");
    let psi = ctx("Q:(z:int, y:int |- int)");
    let t = parse_type("int -> int").unwrap();
    let p = pat_type_check(&psi, &gamma, 1, &parse_term("fn y -> Q").unwrap(), &t).unwrap();
    pattern_reflect(&psi, &gamma, 1, &p, &t).unwrap();
}

#[test]
fn broken_patterns_fail_both_checkers() {
    let g = church();
    let p = parse_term("f Y").unwrap();
    assert!(pat_type_check(&Context::empty(), &g, 1, &p, &tvar()).is_err());
    assert!(pattern_reflect(&Context::empty(), &g, 1, &p, &tvar()).is_err());
}

#[test]
fn pattern_variables_are_linear() {
    let gamma = ctx("z:int");
    let psi = ctx("Q:(z:int |- int)");
    let p = parse_term("Q + Q").unwrap();
    assert!(pat_type_check(&psi, &gamma, 1, &p, &Type::Int).is_err());
}

#[test]
fn substitution_patterns() {
    let g = church();
    assert!(pat_subst_check(&Context::empty(), &g, 1, &Subst::empty(), &Context::empty()).is_ok());
    let psi = ctx("X:('a:*, x:'a, f:'a -> 'a |- 'a)");
    let phi = ctx("'b:*, y:'b");
    let x = parse_term("X").unwrap();
    let sigma = Subst(vec![SubstEntry::Type(Hat::empty(), 0, tvar()), SubstEntry::Term(Hat::empty(), 0, x)]);
    let checked = pat_subst_check(&psi, &g, 1, &sigma, &phi);
    assert!(checked.is_ok(), "{checked:?}");
    let bad = Subst(vec![SubstEntry::Type(Hat::empty(), 0, tvar()), SubstEntry::Term(Hat::empty(), 0, Term::Int(1))]);
    assert!(pat_subst_check(&psi, &g, 1, &bad, &phi).is_err());
}

fn collect(t: &Term, out: &mut Vec<Branch>) {
    match t {
        Term::Lam(_, _, e) | Term::TLam(_, _, e) | Term::Boxed(_, _, e) | Term::Fix(_, _, e) => collect(e, out),
        Term::TApp(e, ..) | Term::Ann(e, _) => collect(e, out),
        Term::App(a, b) | Term::LetBox(_, _, _, a, b) | Term::Let(_, a, b) | Term::Cons(a, b) => {
            collect(a, out);
            collect(b, out);
        }
        Term::If(a, b, c) => {
            collect(a, out);
            collect(b, out);
            collect(c, out);
        }
        Term::Prim(_, args) => args.iter().for_each(|a| collect(a, out)),
        Term::Case(s, _, bs) => {
            collect(s, out);
            for b in bs {
                out.push(b.clone());
                collect(&b.body, out);
            }
        }
        _ => {}
    }
}

#[test]
fn corpus_patterns_reflect() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples");
    let mut reflected = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_none_or(|x| x != "mbs") {
            continue;
        }
        let Ok(c) = check_program(&parse_program(&std::fs::read_to_string(&path).unwrap()).unwrap()) else {
            continue;
        };
        let mut bs = Vec::new();
        for (_, _, e) in &c.defs {
            collect(e, &mut bs);
        }
        for b in bs {
            let Some(a) = &b.annot else { continue };
            let closed = free_in_type(&a.to_type()).iter().all(|n| b.vars.contains(n));
            if !closed {
                continue;
            }
            let r = pattern_reflect(&b.vars, &a.ctx, a.level, &b.pat, &a.ty);
            assert!(r.is_ok(), "{}: {} : {}: {r:?}", path.display(), b.pat, a.to_type());
            reflected += 1;
        }
    }
    assert!(reflected >= 4, "only {reflected} patterns reflected");
}
