//! Abstract syntax of types, terms, substitutions and contexts.
//!
//! Every variable occurrence is a closure `x[σ]`: a name together with a
//! substitution for the variable's local context. Type variable names carry a
//! leading apostrophe, so term and type names never collide.

mod alpha;
mod names;

pub use alpha::{alpha_eq_ctx, alpha_eq_subst, alpha_eq_term, alpha_eq_type};
pub use names::{
    free_in_ctx, free_in_subst, free_in_term, free_in_type, fresh, fresh_avoiding,
    rename_ctx_binders, rename_ctx_free, rename_subst, rename_term, rename_type, Renaming,
};

use std::fmt;
use std::sync::Arc;

pub type Level = u32;

/// Placeholder for a level the parser could not determine; elaboration fills it.
pub const UNRESOLVED: Level = Level::MAX;

pub type Name = Arc<str>;

pub fn name(s: &str) -> Name {
    Arc::from(s)
}

pub fn is_type_name(n: &str) -> bool {
    n.starts_with('\'')
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Kind {
    Term,
    Type,
}

impl Kind {
    pub fn of_name(n: &str) -> Kind {
        if is_type_name(n) {
            Kind::Type
        } else {
            Kind::Term
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HatEntry {
    pub name: Name,
    pub level: Level,
    pub kind: Kind,
}

impl HatEntry {
    pub fn new(name: Name, level: Level) -> Self {
        let kind = Kind::of_name(&name);
        HatEntry { name, level, kind }
    }
}

/// An erased context: names and levels only.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Hat(pub Vec<HatEntry>);

impl Hat {
    pub fn empty() -> Self {
        Hat(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The least level strictly above every entry.
    pub fn level(&self) -> Level {
        self.0
            .iter()
            .filter(|e| e.level != UNRESOLVED)
            .map(|e| e.level + 1)
            .max()
            .unwrap_or(0)
    }

    pub fn names(&self) -> impl Iterator<Item = &Name> {
        self.0.iter().map(|e| &e.name)
    }

    pub fn contains(&self, n: &str) -> bool {
        self.0.iter().any(|e| &*e.name == n)
    }

    pub fn is_resolved(&self) -> bool {
        self.0.iter().all(|e| e.level != UNRESOLVED)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Type {
    Var(Name, Subst),
    /// A type variable as written, before its substitution is elaborated.
    Raw(Name, Option<Vec<RawItem>>),
    Arrow(Box<Type>, Box<Type>),
    /// `(α : (Φ ⊢n *)) → T`
    Forall(Name, Context, Level, Box<Type>),
    /// `[Φ ⊢n T]`
    Boxed(Context, Level, Box<Type>),
    Int,
    Bool,
    List(Box<Type>),
}

impl Type {
    pub fn var(n: &str) -> Type {
        Type::Var(name(n), Subst::empty())
    }

    pub fn arrow(a: Type, b: Type) -> Type {
        Type::Arrow(Box::new(a), Box::new(b))
    }

    pub fn boxed(ctx: Context, level: Level, t: Type) -> Type {
        Type::Boxed(ctx, level, Box::new(t))
    }

    pub fn forall(a: &str, ctx: Context, level: Level, t: Type) -> Type {
        Type::Forall(name(a), ctx, level, Box::new(t))
    }

    pub fn list(t: Type) -> Type {
        Type::List(Box::new(t))
    }

    pub fn size(&self) -> usize {
        match self {
            Type::Var(_, s) => 1 + s.size(),
            Type::Raw(..) | Type::Int | Type::Bool => 1,
            Type::Arrow(a, b) => 1 + a.size() + b.size(),
            Type::Forall(_, c, _, t) | Type::Boxed(c, _, t) => 1 + c.size() + t.size(),
            Type::List(t) => 1 + t.size(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Prim {
    Add,
    Sub,
    Mul,
    Eq,
    Le,
    Hd,
    Tl,
    Null,
}

impl Prim {
    pub fn arity(self) -> usize {
        match self {
            Prim::Hd | Prim::Tl | Prim::Null => 1,
            _ => 2,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Prim::Add => "+",
            Prim::Sub => "-",
            Prim::Mul => "*",
            Prim::Eq => "=",
            Prim::Le => "<=",
            Prim::Hd => "hd",
            Prim::Tl => "tl",
            Prim::Null => "null",
        }
    }
}

/// A contextual type `Φ ⊢n T`, used for case annotations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CtxType {
    pub ctx: Context,
    pub level: Level,
    pub ty: Type,
}

impl CtxType {
    pub fn to_type(&self) -> Type {
        Type::boxed(self.ctx.clone(), self.level, self.ty.clone())
    }
}

/// One case branch `Ψi. box(Φ̂i. pi) : (Φi ⊢k Ti) ⇒ ei`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Branch {
    pub vars: Context,
    pub hat: Hat,
    pub pat: Term,
    pub annot: Option<CtxType>,
    pub body: Term,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Term {
    Var(Name, Subst),
    /// A term variable as written, before its substitution is elaborated.
    Raw(Name, Option<Vec<RawItem>>),
    Lam(Name, Option<Type>, Box<Term>),
    App(Box<Term>, Box<Term>),
    TLam(Name, Level, Box<Term>),
    TApp(Box<Term>, Hat, Level, Type),
    Boxed(Hat, Level, Box<Term>),
    LetBox(Hat, Level, Name, Box<Term>, Box<Term>),
    Case(Box<Term>, CtxType, Vec<Branch>),
    Let(Name, Box<Term>, Box<Term>),
    Fix(Name, Type, Box<Term>),
    Ann(Box<Term>, Type),
    If(Box<Term>, Box<Term>, Box<Term>),
    Int(i64),
    Bool(bool),
    Nil(Option<Type>),
    Cons(Box<Term>, Box<Term>),
    Prim(Prim, Vec<Term>),
}

impl Term {
    pub fn var(n: &str) -> Term {
        Term::Var(name(n), Subst::empty())
    }

    pub fn raw(n: &str) -> Term {
        Term::Raw(name(n), None)
    }

    pub fn lam(x: &str, ann: Option<Type>, body: Term) -> Term {
        Term::Lam(name(x), ann, Box::new(body))
    }

    pub fn app(f: Term, a: Term) -> Term {
        Term::App(Box::new(f), Box::new(a))
    }

    pub fn boxed(hat: Hat, level: Level, body: Term) -> Term {
        Term::Boxed(hat, level, Box::new(body))
    }

    pub fn ann(e: Term, t: Type) -> Term {
        Term::Ann(Box::new(e), t)
    }

    pub fn prim(p: Prim, args: Vec<Term>) -> Term {
        Term::Prim(p, args)
    }

    pub fn is_value(&self) -> bool {
        match self {
            Term::Lam(..) | Term::TLam(..) | Term::Boxed(..) => true,
            Term::Int(_) | Term::Bool(_) | Term::Nil(_) => true,
            Term::Cons(h, t) => h.is_value() && t.is_value(),
            _ => false,
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Term::Var(_, s) => 1 + s.size(),
            Term::Raw(..) | Term::Int(_) | Term::Bool(_) | Term::Nil(_) => 1,
            Term::Lam(_, _, e) | Term::TLam(_, _, e) | Term::Boxed(_, _, e) => 1 + e.size(),
            Term::Fix(_, _, e) | Term::Ann(e, _) => 1 + e.size(),
            Term::App(a, b) | Term::Cons(a, b) | Term::Let(_, a, b) => 1 + a.size() + b.size(),
            Term::LetBox(_, _, _, a, b) => 1 + a.size() + b.size(),
            Term::TApp(e, _, _, t) => 1 + e.size() + t.size(),
            Term::If(a, b, c) => 1 + a.size() + b.size() + c.size(),
            Term::Case(s, _, bs) => {
                1 + s.size() + bs.iter().map(|b| b.pat.size() + b.body.size()).sum::<usize>()
            }
            Term::Prim(_, args) => 1 + args.iter().map(Term::size).sum::<usize>(),
        }
    }
}

/// A with-list item as written, before it is matched against a domain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RawItem {
    Term(Option<Vec<Name>>, Term),
    Type(Option<Vec<Name>>, Type),
    Bare(Name),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SubstEntry {
    /// `(Φ̂ⁿ. e)`
    Term(Hat, Level, Term),
    /// `(Φ̂ⁿ. T)`
    Type(Hat, Level, Type),
    /// A term variable standing for itself at level `n`.
    RenTerm(Name, Level),
    /// A type variable standing for itself at level `n`.
    RenType(Name, Level),
}

impl SubstEntry {
    pub fn kind(&self) -> Kind {
        match self {
            SubstEntry::Term(..) | SubstEntry::RenTerm(..) => Kind::Term,
            SubstEntry::Type(..) | SubstEntry::RenType(..) => Kind::Type,
        }
    }

    pub fn level(&self) -> Level {
        match self {
            SubstEntry::Term(_, n, _)
            | SubstEntry::Type(_, n, _)
            | SubstEntry::RenTerm(_, n)
            | SubstEntry::RenType(_, n) => *n,
        }
    }

    pub fn rename(n: Name, level: Level) -> SubstEntry {
        if is_type_name(&n) {
            SubstEntry::RenType(n, level)
        } else {
            SubstEntry::RenTerm(n, level)
        }
    }
}

/// A simultaneous substitution, positionally paired with a domain [`Hat`].
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Subst(pub Vec<SubstEntry>);

impl Subst {
    pub fn empty() -> Self {
        Subst(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The identity substitution on a domain.
    pub fn id(hat: &Hat) -> Subst {
        Subst(
            hat.0
                .iter()
                .map(|e| SubstEntry::rename(e.name.clone(), e.level))
                .collect(),
        )
    }

    pub fn size(&self) -> usize {
        self.0
            .iter()
            .map(|e| match e {
                SubstEntry::Term(_, _, t) => t.size(),
                SubstEntry::Type(_, _, t) => t.size(),
                _ => 1,
            })
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decl {
    /// `x : (Φ ⊢n T)`
    Term {
        name: Name,
        ctx: Context,
        level: Level,
        ty: Type,
    },
    /// `α : (Φ ⊢n *)`
    Type { name: Name, ctx: Context, level: Level },
    /// `α := (Φ̂. S) : (Φ ⊢n *)`
    Solved {
        name: Name,
        ctx: Context,
        level: Level,
        hat: Hat,
        sol: Type,
    },
    /// The contradiction marker `#`.
    Absurd,
}

impl Decl {
    pub fn term(n: &str, ctx: Context, level: Level, ty: Type) -> Decl {
        Decl::Term {
            name: name(n),
            ctx,
            level,
            ty,
        }
    }

    pub fn ty(n: &str, ctx: Context, level: Level) -> Decl {
        Decl::Type {
            name: name(n),
            ctx,
            level,
        }
    }

    pub fn name(&self) -> Option<&Name> {
        match self {
            Decl::Term { name, .. } | Decl::Type { name, .. } | Decl::Solved { name, .. } => {
                Some(name)
            }
            Decl::Absurd => None,
        }
    }

    pub fn level(&self) -> Option<Level> {
        match self {
            Decl::Term { level, .. } | Decl::Type { level, .. } | Decl::Solved { level, .. } => {
                Some(*level)
            }
            Decl::Absurd => None,
        }
    }

    pub fn local(&self) -> Option<&Context> {
        match self {
            Decl::Term { ctx, .. } | Decl::Type { ctx, .. } | Decl::Solved { ctx, .. } => Some(ctx),
            Decl::Absurd => None,
        }
    }

    pub fn kind(&self) -> Option<Kind> {
        match self {
            Decl::Term { .. } => Some(Kind::Term),
            Decl::Type { .. } | Decl::Solved { .. } => Some(Kind::Type),
            Decl::Absurd => None,
        }
    }

    pub fn with_name(&self, n: Name) -> Decl {
        let mut d = self.clone();
        match &mut d {
            Decl::Term { name, .. } | Decl::Type { name, .. } | Decl::Solved { name, .. } => {
                *name = n
            }
            Decl::Absurd => {}
        }
        d
    }

    fn size(&self) -> usize {
        match self {
            Decl::Term { ctx, ty, .. } => 1 + ctx.size() + ty.size(),
            Decl::Type { ctx, .. } => 1 + ctx.size(),
            Decl::Solved { ctx, sol, .. } => 1 + ctx.size() + sol.size(),
            Decl::Absurd => 1,
        }
    }
}

/// A level-sorted context, outermost declaration first.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Context(pub Vec<Decl>);

impl Context {
    pub fn empty() -> Self {
        Context(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn size(&self) -> usize {
        self.0.iter().map(Decl::size).sum()
    }

    /// The least level strictly above every declaration.
    pub fn level(&self) -> Level {
        self.0
            .iter()
            .filter_map(Decl::level)
            .map(|l| l + 1)
            .max()
            .unwrap_or(0)
    }

    pub fn names(&self) -> impl Iterator<Item = &Name> {
        self.0.iter().filter_map(Decl::name)
    }

    pub fn has_absurd(&self) -> bool {
        self.0.iter().any(|d| matches!(d, Decl::Absurd))
    }

    pub fn position(&self, n: &str) -> Option<usize> {
        self.0
            .iter()
            .rposition(|d| d.name().is_some_and(|m| &**m == n))
    }

    pub fn lookup(&self, n: &str) -> Option<&Decl> {
        self.position(n).map(|i| &self.0[i])
    }

    pub fn contains(&self, n: &str) -> bool {
        self.position(n).is_some()
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::frontend::pretty::ty(self))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::frontend::pretty::term(self))
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::frontend::pretty::ctx(self))
    }
}

impl fmt::Display for Subst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::frontend::pretty::subst(self))
    }
}

impl fmt::Display for Hat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self
            .0
            .iter()
            .map(|e| format!("{}^{}", e.name, e.level))
            .collect();
        f.write_str(&names.join(", "))
    }
}
