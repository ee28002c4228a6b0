//! Pattern kinding and pattern typing, `Ψ; Γⁿ ⊩ ...`.
//!
//! `Ψ` holds the pattern variables of a branch and `Γ` the variables bound by
//! the code being matched. Pattern variables are linear and occur only under
//! identity substitutions. The judgments share the checker's rules and differ
//! only in how variables from `Ψ` are looked up.

pub use crate::typing::{pat_kind_check, pat_subst_check, pat_type_check, pattern_reflect};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse_context, parse_term, parse_type};
    use crate::syntax::{Context, Term};

    fn ctx(s: &str) -> Context {
        crate::typing::wf_context(&parse_context(s).unwrap()).unwrap()
    }

    #[test]
    fn bound_variable_pattern() {
        let g = ctx("'a : *, x : 'a, f : 'a -> 'a");
        let p = parse_term("x").unwrap();
        let t = crate::typing::kind_check(&g, &parse_type("'a").unwrap()).unwrap();
        let p2 = pat_type_check(&Context::empty(), &g, 1, &p, &t).unwrap();
        pattern_reflect(&Context::empty(), &g, 1, &p2, &t).unwrap();
    }

    #[test]
    fn unbound_pattern_variable_is_rejected() {
        let g = ctx("'a : *, x : 'a");
        let p = Term::var("Y");
        let t = crate::typing::kind_check(&g, &parse_type("'a").unwrap()).unwrap();
        assert!(pat_type_check(&Context::empty(), &g, 1, &p, &t).is_err());
        assert!(pattern_reflect(&Context::empty(), &g, 1, &p, &t).is_err());
    }
}
