//! Level-sorted contexts and the operations that keep them sorted.
//!
//! Declarations are ordered by non-increasing level from left to right. The
//! contradiction marker `#` carries no level; it sorts below everything and
//! survives `chop_lower`, so a refuted branch stays refuted inside boxes.

use thiserror::Error;

use crate::syntax::{Context, Decl, Hat, HatEntry, Kind, Level, Name};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ContextError {
    #[error("duplicate declaration of `{0}`")]
    Duplicate(Name),
    #[error("context is not sorted by level")]
    Unsorted,
    #[error("cannot append: `{0}` at level {1} sits above a declaration at level {2}")]
    AppendLevels(Name, Level, Level),
    #[error("cannot erase: `{0}` is a solved variable")]
    EraseSolved(Name),
    #[error("cannot erase a contradictory context")]
    EraseAbsurd,
    #[error("unbound variable `{0}`")]
    Unbound(Name),
}

fn sort_key(d: &Decl) -> i64 {
    d.level().map(i64::from).unwrap_or(-1)
}

pub fn is_sorted(c: &Context) -> bool {
    c.0.windows(2).all(|w| sort_key(&w[0]) >= sort_key(&w[1]))
}

fn check_unique(c: &Context) -> Result<(), ContextError> {
    let mut seen: Vec<&Name> = Vec::with_capacity(c.len());
    for n in c.names() {
        if seen.contains(&n) {
            return Err(ContextError::Duplicate(n.clone()));
        }
        seen.push(n);
    }
    Ok(())
}

/// Merges two sorted contexts. On equal levels the right operand's
/// declarations end up to the right.
pub fn merge(a: &Context, b: &Context) -> Result<Context, ContextError> {
    if !is_sorted(a) || !is_sorted(b) {
        return Err(ContextError::Unsorted);
    }
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (a.len(), b.len());
    while i > 0 && j > 0 {
        if sort_key(&b.0[j - 1]) <= sort_key(&a.0[i - 1]) {
            out.push(b.0[j - 1].clone());
            j -= 1;
        } else {
            out.push(a.0[i - 1].clone());
            i -= 1;
        }
    }
    out.extend(a.0[..i].iter().rev().cloned());
    out.extend(b.0[..j].iter().rev().cloned());
    out.reverse();
    let c = Context(out);
    check_unique(&c)?;
    Ok(c)
}

pub fn insert(c: &Context, d: Decl) -> Result<Context, ContextError> {
    merge(c, &Context(vec![d]))
}

/// Keeps the declarations at level `n` or above.
pub fn chop_lower(c: &Context, n: Level) -> Context {
    Context(
        c.0.iter()
            .filter(|d| d.level().is_none_or(|l| l >= n))
            .cloned()
            .collect(),
    )
}

/// Keeps the declarations strictly below level `n`.
pub fn chop_upper(c: &Context, n: Level) -> Context {
    Context(
        c.0.iter()
            .filter(|d| d.level().is_some_and(|l| l < n))
            .cloned()
            .collect(),
    )
}

/// Concatenation, defined when every level in `b` is at most every level in
/// `a`. At an equal-level boundary this coincides with [`merge`].
pub fn append(a: &Context, b: &Context) -> Result<Context, ContextError> {
    let lowest = a
        .0
        .iter()
        .filter_map(|d| d.level().map(|l| (d.name().cloned(), l)))
        .min_by_key(|(_, l)| *l);
    let highest = b.0.iter().filter_map(Decl::level).max();
    if let (Some((n, lo)), Some(hi)) = (lowest, highest) {
        if hi > lo {
            return Err(ContextError::AppendLevels(
                n.unwrap_or_else(|| crate::syntax::name("#")),
                lo,
                hi,
            ));
        }
    }
    let mut v: Vec<Decl> =
        a.0.iter()
            .chain(&b.0)
            .filter(|d| !matches!(d, Decl::Absurd))
            .cloned()
            .collect();
    if a.has_absurd() || b.has_absurd() {
        v.push(Decl::Absurd);
    }
    let c = Context(v);
    check_unique(&c)?;
    Ok(c)
}

/// Appends the contradiction marker.
pub fn absurd(c: &Context) -> Context {
    if c.has_absurd() {
        return c.clone();
    }
    let mut v = c.0.clone();
    v.push(Decl::Absurd);
    Context(v)
}

/// Erases a pure context. Solved variables and `#` are rejected.
pub fn erase(c: &Context) -> Result<Hat, ContextError> {
    let mut v = Vec::with_capacity(c.len());
    for d in &c.0 {
        match d {
            Decl::Term { name, level, .. } => v.push(HatEntry {
                name: name.clone(),
                level: *level,
                kind: Kind::Term,
            }),
            Decl::Type { name, level, .. } => v.push(HatEntry {
                name: name.clone(),
                level: *level,
                kind: Kind::Type,
            }),
            Decl::Solved { name, .. } => return Err(ContextError::EraseSolved(name.clone())),
            Decl::Absurd => return Err(ContextError::EraseAbsurd),
        }
    }
    Ok(Hat(v))
}

/// The domain of a substitution for `c`: solved variables count as type
/// variables, `#` has no entry.
pub fn domain(c: &Context) -> Hat {
    Hat(c
        .0
        .iter()
        .filter_map(|d| {
            Some(HatEntry {
                name: d.name()?.clone(),
                level: d.level()?,
                kind: d.kind()?,
            })
        })
        .collect())
}

pub fn lookup<'a>(c: &'a Context, n: &Name) -> Result<&'a Decl, ContextError> {
    c.lookup(n).ok_or_else(|| ContextError::Unbound(n.clone()))
}

/// True when every declaration of `c` is a type declaration whose local
/// context is itself kind-only. Such contexts are closed.
pub fn is_kind_only(c: &Context) -> bool {
    c.0.iter().all(|d| match d {
        Decl::Type { ctx, .. } => is_kind_only(ctx),
        _ => false,
    })
}

/// Builds a context from a hat whose entries are all type variables of
/// kind `*` over the empty context.
pub fn pure_types(h: &Hat) -> Context {
    Context(
        h.0.iter()
            .map(|e| Decl::Type {
                name: e.name.clone(),
                ctx: Context::empty(),
                level: e.level,
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{Decl, Type};

    fn tv(n: &str, l: Level) -> Decl {
        Decl::ty(n, Context::empty(), l)
    }

    fn names(c: &Context) -> Vec<String> {
        c.names().map(|n| n.to_string()).collect()
    }

    #[test]
    fn merge_interleaves_by_level() {
        let a = Context(vec![tv("'a", 3), tv("'b", 1)]);
        let b = Context(vec![tv("'c", 2), tv("'d", 0)]);
        let m = merge(&a, &b).unwrap();
        assert_eq!(names(&m), ["'a", "'c", "'b", "'d"]);
        assert!(is_sorted(&m));
    }

    #[test]
    fn insert_goes_right_of_equal_levels() {
        let a = Context(vec![tv("'a", 2), tv("'b", 1)]);
        let m = insert(&a, tv("'c", 2)).unwrap();
        assert_eq!(names(&m), ["'a", "'c", "'b"]);
    }

    #[test]
    fn merge_rejects_duplicates() {
        let a = Context(vec![tv("'a", 1)]);
        assert_eq!(
            merge(&a, &a),
            Err(ContextError::Duplicate(crate::syntax::name("'a")))
        );
    }

    #[test]
    fn chops_partition() {
        let c = Context(vec![tv("'a", 3), tv("'b", 2), tv("'c", 1), tv("'d", 0)]);
        assert_eq!(names(&chop_lower(&c, 2)), ["'a", "'b"]);
        assert_eq!(names(&chop_upper(&c, 2)), ["'c", "'d"]);
        let back = append(&chop_lower(&c, 2), &chop_upper(&c, 2)).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn append_checks_levels() {
        let a = Context(vec![tv("'a", 1)]);
        let b = Context(vec![tv("'b", 2)]);
        assert!(append(&a, &b).is_err());
        assert!(append(&b, &a).is_ok());
    }

    #[test]
    fn absurd_survives_chop_lower() {
        let c = absurd(&Context(vec![tv("'a", 0)]));
        assert!(chop_lower(&c, 5).has_absurd());
        assert!(!chop_upper(&c, 5).has_absurd());
    }

    #[test]
    fn erase_rejects_solved() {
        let c = Context(vec![Decl::Solved {
            name: crate::syntax::name("'a"),
            ctx: Context::empty(),
            level: 1,
            hat: Hat::empty(),
            sol: Type::Int,
        }]);
        assert!(erase(&c).is_err());
        assert_eq!(domain(&c).len(), 1);
    }
}
