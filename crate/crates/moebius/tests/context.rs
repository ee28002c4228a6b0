use moebius::context::{append, chop_lower, chop_upper, insert, is_sorted, merge};
use moebius::syntax::{Context, Decl, Level};
use proptest::prelude::*;

fn tv(n: &str, l: Level) -> Decl {
    Decl::ty(n, Context::empty(), l)
}

fn names(c: &Context) -> Vec<String> {
    c.names().map(|n| n.to_string()).collect()
}

fn sorted(prefix: &str, mut levels: Vec<Level>) -> Context {
    levels.sort_unstable_by(|a, b| b.cmp(a));
    Context(
        levels
            .into_iter()
            .enumerate()
            .map(|(i, l)| tv(&format!("'{prefix}{i}"), l))
            .collect(),
    )
}

/// Stable sort of the concatenation by non-increasing level.
fn merge_oracle(a: &Context, b: &Context) -> Context {
    let mut v: Vec<Decl> = a.0.iter().chain(&b.0).cloned().collect();
    v.sort_by_key(|d| std::cmp::Reverse(d.level()));
    Context(v)
}

fn levels() -> impl Strategy<Value = Vec<Level>> {
    prop::collection::vec(0u32..5, 0..8)
}

#[test]
fn merge_example() {
    let a = Context(vec![tv("'a", 3), tv("'b", 1)]);
    let b = Context(vec![tv("'c", 2), tv("'d", 0)]);
    assert_eq!(names(&merge(&a, &b).unwrap()), ["'a", "'c", "'b", "'d"]);
}

#[test]
fn merge_with_empty_is_identity() {
    let a = Context(vec![tv("'a", 2), tv("'b", 0)]);
    assert_eq!(merge(&a, &Context::empty()).unwrap(), a);
    assert_eq!(merge(&Context::empty(), &a).unwrap(), a);
}

#[test]
fn chop_example() {
    let c = Context(vec![tv("'a", 2), tv("'b", 1), tv("'c", 0)]);
    assert_eq!(names(&chop_lower(&c, 1)), ["'a", "'b"]);
    assert_eq!(names(&chop_upper(&c, 1)), ["'c"]);
}

#[test]
fn unsorted_input_is_rejected() {
    let bad = Context(vec![tv("'a", 0), tv("'b", 1)]);
    assert!(!is_sorted(&bad));
    assert!(merge(&bad, &Context::empty()).is_err());
}

proptest! {
    #[test]
    fn merge_is_a_stable_sort(a in levels(), b in levels()) {
        let (a, b) = (sorted("a", a), sorted("b", b));
        let m = merge(&a, &b).unwrap();
        prop_assert!(is_sorted(&m));
        prop_assert_eq!(m, merge_oracle(&a, &b));
    }

    #[test]
    fn random_interleavings_sort_or_reject(ls in levels()) {
        let c = Context(ls.iter().enumerate().map(|(i, l)| tv(&format!("'x{i}"), *l)).collect());
        let mut built = Ok(Context::empty());
        for d in &c.0 {
            built = built.and_then(|g| insert(&g, d.clone()));
        }
        let built = built.unwrap();
        prop_assert!(is_sorted(&built));
        prop_assert_eq!(built, merge_oracle(&c, &Context::empty()));
        prop_assert_eq!(merge(&c, &Context::empty()).is_ok(), is_sorted(&c));
    }

    #[test]
    fn chops_partition(ls in levels(), n in 0u32..6) {
        let c = sorted("a", ls);
        let (hi, lo) = (chop_lower(&c, n), chop_upper(&c, n));
        prop_assert_eq!(hi.len() + lo.len(), c.len());
        prop_assert_eq!(append(&hi, &lo).unwrap(), c);
    }

    #[test]
    fn append_agrees_with_merge_when_defined(a in levels(), b in levels()) {
        let (a, b) = (sorted("a", a), sorted("b", b));
        if let Ok(c) = append(&a, &b) {
            prop_assert_eq!(c, merge(&a, &b).unwrap());
        }
    }

    #[test]
    fn insert_is_stable(ls in levels(), l in 0u32..5) {
        let c = sorted("a", ls);
        let m = insert(&c, tv("'new", l)).unwrap();
        let i = m.position("'new").unwrap();
        prop_assert!(m.0[i + 1..].iter().all(|d| d.level().unwrap() < l));
        prop_assert!(m.0[..i].iter().all(|d| d.level().unwrap() >= l));
    }

    #[test]
    fn chop_distributes_over_merge(a in levels(), b in levels(), n in 0u32..6) {
        let (a, b) = (sorted("a", a), sorted("b", b));
        let m = merge(&a, &b).unwrap();
        prop_assert_eq!(chop_lower(&m, n), merge(&chop_lower(&a, n), &chop_lower(&b, n)).unwrap());
        prop_assert_eq!(chop_upper(&m, n), merge(&chop_upper(&a, n), &chop_upper(&b, n)).unwrap());
    }
}
