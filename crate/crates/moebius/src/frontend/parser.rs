//! Recursive-descent parser for the surface syntax.
//!
//! Variables are produced as raw closures and box hats carry unresolved
//! levels; elaboration in [`crate::typing`] fills both in.

use super::lexer::{lex, ParseError, Tok, Token};
use crate::context::is_sorted;
use crate::syntax::{
    name, Branch, Context, CtxType, Decl, Hat, HatEntry, Level, Name, Prim, RawItem, Term, Type,
    UNRESOLVED,
};

#[derive(Clone, Debug)]
pub struct Def {
    pub name: Name,
    pub ty: Type,
    pub body: Term,
}

#[derive(Clone, Debug, Default)]
pub struct Program {
    pub defs: Vec<Def>,
    pub main: Option<Term>,
}

pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let mut p = Parser::new(src)?;
    let mut prog = Program::default();
    while !p.at_eof() {
        if prog.main.is_some() {
            return Err(p.error("the entry expression must come last"));
        }
        if matches!(p.peek(), Tok::Ident(_)) && p.peek_at(1) == &Tok::Sym(":") {
            let n = p.ident()?;
            p.expect(":")?;
            let ty = p.ty()?;
            p.expect("=")?;
            let body = p.term()?;
            p.expect(";")?;
            prog.defs.push(Def { name: n, ty, body });
        } else {
            let e = p.term()?;
            if !p.at_eof() {
                p.expect(";")?;
            }
            prog.main = Some(e);
        }
    }
    Ok(prog)
}

pub fn parse_term(src: &str) -> Result<Term, ParseError> {
    let mut p = Parser::new(src)?;
    let t = p.term()?;
    p.finish()?;
    Ok(t)
}

pub fn parse_type(src: &str) -> Result<Type, ParseError> {
    let mut p = Parser::new(src)?;
    let t = p.ty()?;
    p.finish()?;
    Ok(t)
}

pub fn parse_context(src: &str) -> Result<Context, ParseError> {
    let mut p = Parser::new(src)?;
    let c = p.ctx()?;
    p.finish()?;
    Ok(c)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

fn default_level(c: &Context) -> Level {
    c.level().max(1)
}

impl Parser {
    fn new(src: &str) -> Result<Self, ParseError> {
        Ok(Parser {
            toks: lex(src)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn at_eof(&self) -> bool {
        self.peek() == &Tok::Eof
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, msg: &str) -> ParseError {
        let t = &self.toks[self.pos];
        let found = match &t.tok {
            Tok::Ident(s) | Tok::TVar(s) => format!("`{s}`"),
            Tok::Int(n) => format!("`{n}`"),
            Tok::Kw(k) | Tok::Sym(k) => format!("`{k}`"),
            Tok::Eof => "end of input".into(),
        };
        ParseError {
            line: t.line,
            col: t.col,
            msg: format!("{msg}, found {found}"),
        }
    }

    fn finish(&mut self) -> Result<(), ParseError> {
        if self.peek() == &Tok::Sym(";") {
            self.bump();
        }
        if self.at_eof() {
            Ok(())
        } else {
            Err(self.error("expected end of input"))
        }
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Kw(x) if *x == s)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, s: &str) -> bool {
        if self.is_kw(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> Result<(), ParseError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.error(&format!("expected `{s}`")))
        }
    }

    fn expect_kw(&mut self, s: &str) -> Result<(), ParseError> {
        if self.eat_kw(s) {
            Ok(())
        } else {
            Err(self.error(&format!("expected `{s}`")))
        }
    }

    fn ident(&mut self) -> Result<Name, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(name(&s))
            }
            _ => Err(self.error("expected an identifier")),
        }
    }

    fn tvar(&mut self) -> Result<Name, ParseError> {
        match self.peek().clone() {
            Tok::TVar(s) => {
                self.bump();
                Ok(name(&s))
            }
            _ => Err(self.error("expected a type variable")),
        }
    }

    fn any_name(&mut self) -> Result<Name, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) | Tok::TVar(s) => {
                self.bump();
                Ok(name(&s))
            }
            _ => Err(self.error("expected a name")),
        }
    }

    fn int(&mut self) -> Result<i64, ParseError> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(n)
            }
            _ => Err(self.error("expected an integer")),
        }
    }

    fn level(&mut self) -> Result<Level, ParseError> {
        let n = self.int()?;
        Level::try_from(n).map_err(|_| self.error("expected a level"))
    }

    fn attempt<T>(&mut self, f: impl FnOnce(&mut Self) -> Result<T, ParseError>) -> Option<T> {
        let save = self.pos;
        match f(self) {
            Ok(v) => Some(v),
            Err(_) => {
                self.pos = save;
                None
            }
        }
    }

    /// Index of the token closing the group opened at `self.pos + k`.
    fn group_end(&self, k: usize) -> Option<usize> {
        let mut depth = 0usize;
        let mut i = self.pos + k;
        while i < self.toks.len() {
            match &self.toks[i].tok {
                Tok::Sym("(") | Tok::Sym("[") | Tok::Sym("{") => depth += 1,
                Tok::Sym(")") | Tok::Sym("]") | Tok::Sym("}") => {
                    depth = depth.checked_sub(1)?;
                    if depth == 0 {
                        return Some(i);
                    }
                }
                Tok::Eof => return None,
                _ => {}
            }
            i += 1;
        }
        None
    }

    /// Whether the group opened at `self.pos + k` contains `sym` at depth one.
    fn group_has(&self, k: usize, sym: &str) -> bool {
        let Some(end) = self.group_end(k) else {
            return false;
        };
        let mut depth = 0usize;
        for i in self.pos + k..end {
            match &self.toks[i].tok {
                Tok::Sym("(") | Tok::Sym("[") | Tok::Sym("{") => depth += 1,
                Tok::Sym(")") | Tok::Sym("]") | Tok::Sym("}") => depth -= 1,
                Tok::Sym(s) if depth == 1 && *s == sym => return true,
                _ => {}
            }
        }
        false
    }

    /// Whether a hat `x, 'a, y .` starts at `self.pos + k`.
    fn hat_ahead(&self, k: usize) -> bool {
        let mut i = k;
        if self.peek_at(i) == &Tok::Sym(".") {
            return true;
        }
        loop {
            match self.peek_at(i) {
                Tok::Ident(_) | Tok::TVar(_) => i += 1,
                _ => return false,
            }
            match self.peek_at(i) {
                Tok::Sym(",") => i += 1,
                Tok::Sym(".") => return true,
                _ => return false,
            }
        }
    }

    fn hat_names(&mut self) -> Result<Vec<Name>, ParseError> {
        let mut v = Vec::new();
        if self.eat_sym(".") {
            return Ok(v);
        }
        loop {
            v.push(self.any_name()?);
            if self.eat_sym(".") {
                return Ok(v);
            }
            self.expect(",")?;
        }
    }

    fn unresolved_hat(names: Vec<Name>) -> Hat {
        Hat(names.into_iter().map(|n| HatEntry::new(n, UNRESOLVED)).collect())
    }

    // ---------------------------------------------------------------- types

    pub fn ty(&mut self) -> Result<Type, ParseError> {
        if self.eat_kw("forall") {
            let a = self.tvar()?;
            let lvl = if self.eat_sym("^") { self.level()? } else { 0 };
            self.expect(".")?;
            let body = self.ty()?;
            return Ok(Type::Forall(a, Context::empty(), lvl, Box::new(body)));
        }
        if self.is_sym("(") && matches!(self.peek_at(1), Tok::TVar(_)) && self.peek_at(2) == &Tok::Sym(":") {
            self.bump();
            let a = self.tvar()?;
            self.expect(":")?;
            let (c, lvl) = self.kind()?;
            self.expect(")")?;
            self.expect("->")?;
            let body = self.ty()?;
            return Ok(Type::Forall(a, c, lvl, Box::new(body)));
        }
        let lhs = self.ty_app()?;
        if self.eat_sym("->") {
            let rhs = self.ty()?;
            Ok(Type::arrow(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn ty_app(&mut self) -> Result<Type, ParseError> {
        let mut t = self.ty_atom()?;
        while self.eat_kw("list") {
            t = Type::list(t);
        }
        Ok(t)
    }

    fn ty_atom(&mut self) -> Result<Type, ParseError> {
        match self.peek().clone() {
            Tok::Kw("int") | Tok::Kw("nat") => {
                self.bump();
                Ok(Type::Int)
            }
            Tok::Kw("bool") => {
                self.bump();
                Ok(Type::Bool)
            }
            Tok::TVar(_) => {
                let a = self.tvar()?;
                if self.eat_kw("with") {
                    let items = self.items()?;
                    Ok(Type::Raw(a, Some(items)))
                } else {
                    Ok(Type::Raw(a, None))
                }
            }
            Tok::Sym("(") => {
                self.bump();
                let t = self.ty()?;
                self.expect(")")?;
                Ok(t)
            }
            Tok::Sym("[") => {
                let turnstile = self.group_has(0, "|-");
                self.bump();
                if turnstile {
                    let c = self.ctx()?;
                    self.expect("|-")?;
                    let lvl = if self.eat_sym("^") {
                        self.level()?
                    } else {
                        default_level(&c)
                    };
                    let t = self.ty()?;
                    self.expect("]")?;
                    Ok(Type::boxed(c, lvl, t))
                } else {
                    let t = self.ty()?;
                    self.expect("]")?;
                    Ok(Type::boxed(Context::empty(), 1, t))
                }
            }
            _ => Err(self.error("expected a type")),
        }
    }

    fn kind(&mut self) -> Result<(Context, Level), ParseError> {
        if self.eat_sym("*") {
            return Ok((Context::empty(), 0));
        }
        self.expect("(")?;
        let c = self.ctx()?;
        self.expect("|-")?;
        let lvl = if self.eat_sym("^") {
            self.level()?
        } else {
            default_level(&c)
        };
        self.expect("*")?;
        self.expect(")")?;
        Ok((c, lvl))
    }

    pub fn ctx(&mut self) -> Result<Context, ParseError> {
        let mut decls = Vec::new();
        let start = self.pos;
        if matches!(self.peek(), Tok::Ident(_) | Tok::TVar(_) | Tok::Sym("#")) {
            loop {
                decls.push(self.decl()?);
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        let c = Context(decls);
        if !is_sorted(&c) {
            self.pos = start;
            return Err(self.error("context declarations must be ordered by non-increasing level"));
        }
        Ok(c)
    }

    fn decl(&mut self) -> Result<Decl, ParseError> {
        if self.eat_sym("#") {
            return Ok(Decl::Absurd);
        }
        match self.peek().clone() {
            Tok::TVar(_) => {
                let a = self.tvar()?;
                if self.eat_sym(":=") {
                    self.expect("(")?;
                    let names = self.hat_names()?;
                    let sol = self.ty()?;
                    self.expect(")")?;
                    self.expect(":")?;
                    let (c, lvl) = self.kind()?;
                    let hat = Hat(c
                        .0
                        .iter()
                        .zip(&names)
                        .map(|(d, n)| HatEntry::new(n.clone(), d.level().unwrap_or(0)))
                        .collect());
                    return Ok(Decl::Solved {
                        name: a,
                        ctx: c,
                        level: lvl,
                        hat,
                        sol,
                    });
                }
                self.expect(":")?;
                let (c, lvl) = self.kind()?;
                Ok(Decl::Type {
                    name: a,
                    ctx: c,
                    level: lvl,
                })
            }
            Tok::Ident(_) => {
                let x = self.ident()?;
                self.expect(":")?;
                if self.is_sym("(") && self.group_has(0, "|-") {
                    self.bump();
                    let c = self.ctx()?;
                    self.expect("|-")?;
                    let lvl = if self.eat_sym("^") {
                        self.level()?
                    } else {
                        default_level(&c)
                    };
                    let t = self.ty()?;
                    self.expect(")")?;
                    Ok(Decl::Term {
                        name: x,
                        ctx: c,
                        level: lvl,
                        ty: t,
                    })
                } else {
                    let t = self.ty()?;
                    Ok(Decl::Term {
                        name: x,
                        ctx: Context::empty(),
                        level: 0,
                        ty: t,
                    })
                }
            }
            _ => Err(self.error("expected a declaration")),
        }
    }

    fn boxed_ctxtype(&mut self) -> Result<CtxType, ParseError> {
        match self.ty_atom()? {
            Type::Boxed(ctx, level, ty) => Ok(CtxType {
                ctx,
                level,
                ty: *ty,
            }),
            _ => Err(self.error("expected a box type")),
        }
    }

    // ------------------------------------------------------------ with-lists

    fn items(&mut self) -> Result<Vec<RawItem>, ParseError> {
        if self.is_sym("(") && self.group_has(0, ",") && !self.hat_ahead(1) {
            self.bump();
            let mut v = vec![self.item()?];
            while self.eat_sym(",") {
                v.push(self.item()?);
            }
            self.expect(")")?;
            return Ok(v);
        }
        let mut v = vec![self.item()?];
        while self.eat_sym(",") {
            v.push(self.item()?);
        }
        Ok(v)
    }

    fn item_ends(&self, k: usize) -> bool {
        matches!(
            self.peek_at(k),
            Tok::Sym(",") | Tok::Sym(")") | Tok::Sym("]") | Tok::Sym(";") | Tok::Sym("|") | Tok::Eof
        ) || matches!(self.peek_at(k), Tok::Kw("in") | Tok::Kw("then") | Tok::Kw("else") | Tok::Kw("of"))
    }

    fn item(&mut self) -> Result<RawItem, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) | Tok::TVar(s) if self.item_ends(1) => {
                self.bump();
                Ok(RawItem::Bare(name(&s)))
            }
            Tok::Sym("(") => {
                self.bump();
                let hat = if self.hat_ahead(0) {
                    Some(self.hat_names()?)
                } else {
                    None
                };
                if let Some(t) = self.attempt(|p| {
                    let t = p.term()?;
                    p.expect(")")?;
                    Ok(t)
                }) {
                    return Ok(RawItem::Term(hat, t));
                }
                let t = self.ty()?;
                self.expect(")")?;
                Ok(RawItem::Type(hat, t))
            }
            Tok::TVar(_) | Tok::Kw("int") | Tok::Kw("bool") | Tok::Kw("nat") => {
                Ok(RawItem::Type(None, self.ty()?))
            }
            _ => Ok(RawItem::Term(None, self.app()?)),
        }
    }

    // ---------------------------------------------------------------- terms

    pub fn term(&mut self) -> Result<Term, ParseError> {
        match self.peek().clone() {
            Tok::Kw("fn") | Tok::Kw("fun") => {
                self.bump();
                let (x, ann) = if self.eat_sym("(") {
                    let x = self.ident()?;
                    self.expect(":")?;
                    let t = self.ty()?;
                    self.expect(")")?;
                    (x, Some(t))
                } else {
                    (self.ident()?, None)
                };
                self.expect("->")?;
                let body = self.term()?;
                Ok(Term::Lam(x, ann, Box::new(body)))
            }
            Tok::Kw("tfn") => {
                self.bump();
                let a = self.tvar()?;
                let lvl = if self.eat_sym("^") {
                    self.level()?
                } else {
                    UNRESOLVED
                };
                self.expect("->")?;
                let body = self.term()?;
                Ok(Term::TLam(a, lvl, Box::new(body)))
            }
            Tok::Kw("fix") => {
                self.bump();
                self.expect("(")?;
                let f = self.ident()?;
                self.expect(":")?;
                let t = self.ty()?;
                self.expect(")")?;
                self.expect("->")?;
                let body = self.term()?;
                Ok(Term::Fix(f, t, Box::new(body)))
            }
            Tok::Kw("let") => {
                self.bump();
                if self.eat_kw("box") {
                    let (names, u) = if self.eat_sym("(") {
                        let names = if self.hat_ahead(0) {
                            self.hat_names()?
                        } else {
                            Vec::new()
                        };
                        let u = self.ident()?;
                        self.expect(")")?;
                        (names, u)
                    } else {
                        (Vec::new(), self.ident()?)
                    };
                    self.expect("=")?;
                    let e1 = self.term()?;
                    self.expect_kw("in")?;
                    let e2 = self.term()?;
                    Ok(Term::LetBox(
                        Self::unresolved_hat(names),
                        UNRESOLVED,
                        u,
                        Box::new(e1),
                        Box::new(e2),
                    ))
                } else {
                    let x = self.ident()?;
                    self.expect("=")?;
                    let e1 = self.term()?;
                    self.expect_kw("in")?;
                    let e2 = self.term()?;
                    Ok(Term::Let(x, Box::new(e1), Box::new(e2)))
                }
            }
            Tok::Kw("if") => {
                self.bump();
                let c = self.term()?;
                self.expect_kw("then")?;
                let a = self.term()?;
                self.expect_kw("else")?;
                let b = self.term()?;
                Ok(Term::If(Box::new(c), Box::new(a), Box::new(b)))
            }
            Tok::Kw("case") => {
                self.bump();
                let s = self.cmp()?;
                self.expect(":")?;
                let annot = self.boxed_ctxtype()?;
                self.expect_kw("of")?;
                let bs = self.branches()?;
                Ok(Term::Case(Box::new(s), annot, bs))
            }
            Tok::Kw("match") => {
                self.bump();
                let s = self.cmp()?;
                if !self.eat_kw("with") {
                    self.expect_kw("of")?;
                }
                self.eat_sym("|");
                if self.is_sym("[") || (matches!(self.peek(), Tok::Ident(_)) && self.peek_at(1) == &Tok::Sym("::")) {
                    return self.list_match(s);
                }
                self.pos -= usize::from(self.toks[self.pos - 1].tok == Tok::Sym("|"));
                let bs = self.branches()?;
                let annot = CtxType {
                    ctx: Context::empty(),
                    level: UNRESOLVED,
                    ty: Type::Int,
                };
                Ok(Term::Case(Box::new(s), annot, bs))
            }
            _ => self.cmp(),
        }
    }

    fn list_match(&mut self, scrut: Term) -> Result<Term, ParseError> {
        let mut nil = None;
        let mut cons = None;
        loop {
            if self.eat_sym("[") {
                self.expect("]")?;
                self.expect("->")?;
                nil = Some(self.term()?);
            } else {
                let x = self.ident()?;
                self.expect("::")?;
                let xs = self.ident()?;
                self.expect("->")?;
                cons = Some((x, xs, self.term()?));
            }
            if !self.eat_sym("|") {
                break;
            }
        }
        let (Some(nil), Some((x, xs, body))) = (nil, cons) else {
            return Err(self.error("a list match needs one `[]` and one `x :: xs` branch"));
        };
        let (bind, var) = match &scrut {
            Term::Raw(v, None) => (None, v.clone()),
            _ => {
                let v = crate::syntax::fresh("l");
                (Some(scrut.clone()), v)
            }
        };
        let l = || Term::Raw(var.clone(), None);
        let inner = Term::If(
            Box::new(Term::prim(Prim::Null, vec![l()])),
            Box::new(nil),
            Box::new(Term::Let(
                x,
                Box::new(Term::prim(Prim::Hd, vec![l()])),
                Box::new(Term::Let(xs, Box::new(Term::prim(Prim::Tl, vec![l()])), Box::new(body))),
            )),
        );
        Ok(match bind {
            Some(e) => Term::Let(var, Box::new(e), Box::new(inner)),
            None => inner,
        })
    }

    fn branches(&mut self) -> Result<Vec<Branch>, ParseError> {
        let mut bs = Vec::new();
        while self.eat_sym("|") {
            let vars = if self.eat_sym("{") {
                let c = self.ctx()?;
                self.expect("}")?;
                c
            } else {
                Context::empty()
            };
            self.expect_kw("box")?;
            self.expect("(")?;
            let names = if self.hat_ahead(0) {
                self.hat_names()?
            } else {
                Vec::new()
            };
            let pat = self.term()?;
            self.expect(")")?;
            let annot = if self.eat_sym(":") {
                Some(self.boxed_ctxtype()?)
            } else {
                None
            };
            self.expect("->")?;
            let body = self.term()?;
            bs.push(Branch {
                vars,
                hat: Self::unresolved_hat(names),
                pat,
                annot,
                body,
            });
        }
        if bs.is_empty() {
            return Err(self.error("expected at least one branch"));
        }
        Ok(bs)
    }

    fn cmp(&mut self) -> Result<Term, ParseError> {
        let lhs = self.cons()?;
        if self.eat_sym("=") {
            let rhs = self.cons()?;
            return Ok(Term::prim(Prim::Eq, vec![lhs, rhs]));
        }
        if self.eat_sym("<=") {
            let rhs = self.cons()?;
            return Ok(Term::prim(Prim::Le, vec![lhs, rhs]));
        }
        Ok(lhs)
    }

    fn cons(&mut self) -> Result<Term, ParseError> {
        let h = self.arith()?;
        if self.eat_sym("::") {
            let t = self.cons()?;
            return Ok(Term::Cons(Box::new(h), Box::new(t)));
        }
        Ok(h)
    }

    fn arith(&mut self) -> Result<Term, ParseError> {
        let mut t = self.mul()?;
        loop {
            if self.eat_sym("+") {
                t = Term::prim(Prim::Add, vec![t, self.mul()?]);
            } else if self.eat_sym("-") {
                t = Term::prim(Prim::Sub, vec![t, self.mul()?]);
            } else {
                return Ok(t);
            }
        }
    }

    fn mul(&mut self) -> Result<Term, ParseError> {
        let mut t = self.app()?;
        while self.eat_sym("*") {
            t = Term::prim(Prim::Mul, vec![t, self.app()?]);
        }
        Ok(t)
    }

    fn starts_atom(&self) -> bool {
        match self.peek() {
            Tok::Int(_) | Tok::Ident(_) => true,
            Tok::Kw(k) => matches!(*k, "true" | "false" | "box"),
            Tok::Sym(s) => matches!(*s, "(") || (*s == "[" && self.peek_at(1) == &Tok::Sym("]")),
            _ => false,
        }
    }

    fn tyarg_ahead(&self) -> bool {
        if !self.is_sym("(") {
            return false;
        }
        self.hat_ahead(1)
            || matches!(
                self.peek_at(1),
                Tok::TVar(_) | Tok::Kw("int") | Tok::Kw("bool") | Tok::Kw("nat") | Tok::Kw("forall")
            )
    }

    fn app(&mut self) -> Result<Term, ParseError> {
        let mut t = self.head()?;
        loop {
            if self.tyarg_ahead() {
                self.bump();
                let names = if self.hat_ahead(0) {
                    self.hat_names()?
                } else {
                    Vec::new()
                };
                let ty = self.ty()?;
                self.expect(")")?;
                t = Term::TApp(Box::new(t), Self::unresolved_hat(names), UNRESOLVED, ty);
            } else if self.starts_atom() {
                let a = self.atom()?;
                t = Term::app(t, a);
            } else {
                return Ok(t);
            }
        }
    }

    fn head(&mut self) -> Result<Term, ParseError> {
        for (kw, op) in [("hd", Prim::Hd), ("tl", Prim::Tl), ("null", Prim::Null)] {
            if self.eat_kw(kw) {
                let a = self.atom()?;
                return Ok(Term::prim(op, vec![a]));
            }
        }
        if matches!(self.peek(), Tok::Ident(_))
            && self.peek_at(1) == &Tok::Kw("with")
            && !matches!(self.peek_at(2), Tok::Sym("|") | Tok::Eof)
        {
            let x = self.ident()?;
            self.bump();
            let items = self.items()?;
            return Ok(Term::Raw(x, Some(items)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Term, ParseError> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(Term::Int(n))
            }
            Tok::Kw("true") => {
                self.bump();
                Ok(Term::Bool(true))
            }
            Tok::Kw("false") => {
                self.bump();
                Ok(Term::Bool(false))
            }
            Tok::Ident(_) => Ok(Term::Raw(self.ident()?, None)),
            Tok::Kw("hd") | Tok::Kw("tl") | Tok::Kw("null") => self.head(),
            Tok::Sym("[") => {
                self.bump();
                self.expect("]")?;
                Ok(Term::Nil(None))
            }
            Tok::Kw("box") => {
                self.bump();
                let lvl = if self.eat_sym("^") {
                    self.level()?
                } else {
                    UNRESOLVED
                };
                self.expect("(")?;
                let names = if self.hat_ahead(0) {
                    self.hat_names()?
                } else {
                    Vec::new()
                };
                let body = self.term()?;
                self.expect(")")?;
                Ok(Term::Boxed(Self::unresolved_hat(names), lvl, Box::new(body)))
            }
            Tok::Sym("(") => {
                self.bump();
                let t = self.term()?;
                if self.eat_sym(":") {
                    let ty = self.ty()?;
                    self.expect(")")?;
                    return Ok(Term::ann(t, ty));
                }
                self.expect(")")?;
                Ok(t)
            }
            _ => Err(self.error("expected a term")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_with_lists() {
        let t = parse_term("U with ((y. R with y), y)").unwrap();
        let Term::Raw(_, Some(items)) = t else { panic!() };
        assert_eq!(items.len(), 2);
        assert!(matches!(&items[0], RawItem::Term(Some(h), _) if h.len() == 1));
        assert!(matches!(&items[1], RawItem::Bare(_)));
        let t = parse_term("X with 'a, tl v").unwrap();
        let Term::Raw(_, Some(items)) = t else { panic!() };
        assert!(matches!(&items[0], RawItem::Bare(n) if &**n == "'a"));
        assert!(matches!(&items[1], RawItem::Term(None, Term::Prim(Prim::Tl, _))));
    }

    #[test]
    fn parses_box_types_with_levels() {
        let t = parse_type("[c:(x:int |-^1 int), x:int |-^2 int]").unwrap();
        let Type::Boxed(c, 2, _) = t else { panic!() };
        assert_eq!(c.0[0].level(), Some(1));
        assert_eq!(c.0[1].level(), Some(0));
        let t = parse_type("('a:( |- *)) -> 'a list").unwrap();
        assert!(matches!(t, Type::Forall(_, _, 1, _)));
    }

    #[test]
    fn rejects_unsorted_context() {
        assert!(parse_type("[x:int, c:(x:int |- int) |- int]").is_err());
    }

    #[test]
    fn type_application_is_recognised() {
        let t = parse_term("f ('a, x. 'a list) (int) y").unwrap();
        let Term::App(f, _) = t else { panic!() };
        let Term::TApp(f, _, _, Type::Int) = *f else { panic!() };
        assert!(matches!(*f, Term::TApp(..)));
    }
}
