use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    TVar(String),
    Int(i64),
    Kw(&'static str),
    Sym(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{line}:{col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

const KEYWORDS: &[&str] = &[
    "fn", "fun", "tfn", "box", "let", "in", "case", "match", "of", "with", "if", "then", "else",
    "fix", "true", "false", "int", "bool", "nat", "list", "hd", "tl", "null", "forall",
];

const SYMBOLS: &[&str] = &[
    "|-", "->", "::", ":=", "<=", "(", ")", "[", "]", "{", "}", ",", ".", ":", ";", "|", "^", "=",
    "+", "-", "*", "#",
];

fn ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\''
}

pub fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let err = |line, col, msg: String| ParseError { line, col, msg };
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'-') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c == '(' && chars.get(i + 1) == Some(&'*') {
            let (l0, c0) = (line, col);
            i += 2;
            col += 2;
            loop {
                if i + 1 >= chars.len() {
                    return Err(err(l0, c0, "unterminated comment".into()));
                }
                if chars[i] == '*' && chars[i + 1] == ')' {
                    i += 2;
                    col += 2;
                    break;
                }
                if chars[i] == '\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
                i += 1;
            }
            continue;
        }
        let start_col = col;
        if c.is_ascii_digit() || (c == '~' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let neg = c == '~';
            let mut j = if neg { i + 1 } else { i };
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            let digits: String = chars[if neg { i + 1 } else { i }..j].iter().collect();
            let v: i64 = digits
                .parse()
                .map_err(|_| err(line, col, format!("integer literal `{digits}` out of range")))?;
            out.push(Token {
                tok: Tok::Int(if neg { -v } else { v }),
                line,
                col: start_col,
            });
            col += j - i;
            i = j;
            continue;
        }
        if c == '\'' {
            let mut j = i + 1;
            while j < chars.len() && ident_char(chars[j]) {
                j += 1;
            }
            if j == i + 1 {
                return Err(err(line, col, "expected a type variable name after `'`".into()));
            }
            let s: String = chars[i..j].iter().collect();
            out.push(Token {
                tok: Tok::TVar(s),
                line,
                col: start_col,
            });
            col += j - i;
            i = j;
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut j = i;
            while j < chars.len() && ident_char(chars[j]) {
                j += 1;
            }
            let s: String = chars[i..j].iter().collect();
            let tok = match KEYWORDS.iter().find(|k| **k == s) {
                Some(k) => Tok::Kw(k),
                None => Tok::Ident(s),
            };
            out.push(Token {
                tok,
                line,
                col: start_col,
            });
            col += j - i;
            i = j;
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                out.push(Token {
                    tok: Tok::Sym(s),
                    line,
                    col: start_col,
                });
                i += s.len();
                col += s.len();
            }
            None => return Err(err(line, col, format!("unexpected character `{c}`"))),
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexes_turnstile_and_primes() {
        let toks: Vec<Tok> = lex("[x:'a |-^2 X'] -- note\n ~3")
            .unwrap()
            .into_iter()
            .map(|t| t.tok)
            .collect();
        assert_eq!(
            toks,
            vec![
                Tok::Sym("["),
                Tok::Ident("x".into()),
                Tok::Sym(":"),
                Tok::TVar("'a".into()),
                Tok::Sym("|-"),
                Tok::Sym("^"),
                Tok::Int(2),
                Tok::Ident("X'".into()),
                Tok::Sym("]"),
                Tok::Int(-3),
                Tok::Eof,
            ]
        );
    }
}
