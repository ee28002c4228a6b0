//! Surface syntax: lexing, parsing and pretty printing.

pub mod dump;
pub mod lexer;
pub mod parser;
pub mod pretty;

pub use lexer::ParseError;
pub use parser::{parse_context, parse_program, parse_term, parse_type, Def, Program};
