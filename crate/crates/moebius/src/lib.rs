pub mod context;
pub mod corpus;
pub mod eval;
pub mod frontend;
pub mod metatheory;
pub mod pattern;
pub mod subst;
pub mod syntax;
pub mod typing;
pub mod unify;
