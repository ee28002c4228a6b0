//! Pretty printer. Output re-parses to an alpha-equivalent term once
//! elaborated: identity substitutions whose domain is visible from the
//! binding site are elided, and so are levels that elaboration recovers.

use crate::syntax::{
    Branch, Context, CtxType, Decl, Hat, Level, Name, Prim, RawItem, Subst, SubstEntry, Term,
    Type, UNRESOLVED,
};

pub fn term(t: &Term) -> String {
    Printer::default().term(t, 0)
}

pub fn ty(t: &Type) -> String {
    Printer::default().ty(t, 0)
}

pub fn ctx(c: &Context) -> String {
    let mut p = Printer::default();
    let k = p.scopes.len();
    let s = p.ctx(c);
    p.scopes.truncate(k);
    s
}

pub fn subst(s: &Subst) -> String {
    let p = Printer::default();
    let items: Vec<String> = s.0.iter().map(|e| p.clone().entry(e)).collect();
    format!("({})", items.join(", "))
}

pub fn ctxtype(c: &CtxType) -> String {
    Printer::default().ty(&c.to_type(), 2)
}

fn default_level(c: &Context) -> Level {
    c.level().max(1)
}

#[derive(Default, Clone)]
struct Printer {
    scopes: Vec<(Name, Option<Hat>)>,
}

impl Printer {
    fn domain_of(&self, x: &Name) -> Option<&Hat> {
        self.scopes
            .iter()
            .rev()
            .find(|(n, _)| n == x)
            .and_then(|(_, h)| h.as_ref())
    }

    fn bind(&mut self, x: &Name, dom: Option<Hat>) {
        self.scopes.push((x.clone(), dom));
    }

    fn bind_hat(&mut self, h: &Hat) {
        for e in &h.0 {
            let dom = (e.level == 0).then(Hat::empty);
            self.bind(&e.name, dom);
        }
    }

    fn is_identity(&self, x: &Name, s: &Subst) -> bool {
        if s.is_empty() {
            return true;
        }
        let Some(dom) = self.domain_of(x) else {
            return false;
        };
        dom.len() == s.len()
            && dom.0.iter().zip(&s.0).all(|(d, e)| match e {
                SubstEntry::RenTerm(y, n) | SubstEntry::RenType(y, n) => {
                    *y == d.name && *n == d.level
                }
                _ => false,
            })
    }

    fn hat(h: &Hat) -> String {
        h.names().map(|n| n.to_string()).collect::<Vec<_>>().join(", ")
    }

    fn entry(mut self, e: &SubstEntry) -> String {
        match e {
            SubstEntry::RenTerm(x, _) | SubstEntry::RenType(x, _) => x.to_string(),
            SubstEntry::Term(h, _, t) => {
                self.bind_hat(h);
                if h.is_empty() {
                    format!("({})", self.term(t, 0))
                } else {
                    format!("({}. {})", Self::hat(h), self.term(t, 0))
                }
            }
            SubstEntry::Type(h, _, t) => {
                self.bind_hat(h);
                if h.is_empty() {
                    format!("({})", self.ty(t, 0))
                } else {
                    format!("({}. {})", Self::hat(h), self.ty(t, 0))
                }
            }
        }
    }

    fn items(&self, items: Vec<String>) -> String {
        if items.len() == 1 {
            items.into_iter().next().unwrap()
        } else {
            format!("({})", items.join(", "))
        }
    }

    fn closure(&self, x: &Name, s: &Subst) -> Option<String> {
        if self.is_identity(x, s) {
            return None;
        }
        let items: Vec<String> = s.0.iter().map(|e| self.clone().entry(e)).collect();
        Some(format!("{x} with {}", self.items(items)))
    }

    fn raw_items(&self, items: &[RawItem]) -> String {
        let parts: Vec<String> = items
            .iter()
            .map(|it| {
                let mut p = self.clone();
                match it {
                    RawItem::Bare(n) => n.to_string(),
                    RawItem::Term(h, t) => match h {
                        Some(h) => {
                            let names: Vec<String> = h.iter().map(|n| n.to_string()).collect();
                            for n in h {
                                p.bind(n, None);
                            }
                            format!("({}. {})", names.join(", "), p.term(t, 0))
                        }
                        None => format!("({})", p.term(t, 0)),
                    },
                    RawItem::Type(h, t) => match h {
                        Some(h) => {
                            let names: Vec<String> = h.iter().map(|n| n.to_string()).collect();
                            format!("({}. {})", names.join(", "), p.ty(t, 0))
                        }
                        None => format!("({})", p.ty(t, 0)),
                    },
                }
            })
            .collect();
        self.items(parts)
    }

    fn ty(&mut self, t: &Type, prec: u8) -> String {
        let (s, p) = match t {
            Type::Var(a, s) => match self.closure(a, s) {
                None => (a.to_string(), 2),
                Some(c) => (format!("({c})"), 2),
            },
            Type::Raw(a, None) => (a.to_string(), 2),
            Type::Raw(a, Some(items)) => (format!("({a} with {})", self.raw_items(items)), 2),
            Type::Arrow(a, b) => (format!("{} -> {}", self.ty(a, 1), self.ty(b, 0)), 0),
            Type::Forall(a, c, n, body) => {
                let k = self.kind(c, *n);
                let mark = self.scopes.len();
                self.bind(a, Some(crate::context::domain(c)));
                let b = self.ty(body, 0);
                self.scopes.truncate(mark);
                (format!("({a} : {k}) -> {b}"), 0)
            }
            Type::Boxed(c, n, body) => {
                let mark = self.scopes.len();
                let cs = self.ctx(c);
                let b = self.ty(body, 0);
                self.scopes.truncate(mark);
                let s = if c.is_empty() && *n == 1 {
                    format!("[{b}]")
                } else if *n == default_level(c) {
                    if cs.is_empty() {
                        format!("[|- {b}]")
                    } else {
                        format!("[{cs} |- {b}]")
                    }
                } else if cs.is_empty() {
                    format!("[|-^{n} {b}]")
                } else {
                    format!("[{cs} |-^{n} {b}]")
                };
                (s, 2)
            }
            Type::Int => ("int".into(), 2),
            Type::Bool => ("bool".into(), 2),
            Type::List(e) => (format!("{} list", self.ty(e, 1)), 1),
        };
        if p < prec {
            format!("({s})")
        } else {
            s
        }
    }

    fn kind(&mut self, c: &Context, n: Level) -> String {
        if c.is_empty() && n == 0 {
            return "*".into();
        }
        let mark = self.scopes.len();
        let cs = self.ctx(c);
        self.scopes.truncate(mark);
        let turnstile = if n == default_level(c) {
            "|-".to_string()
        } else {
            format!("|-^{n}")
        };
        if cs.is_empty() {
            format!("({turnstile} *)")
        } else {
            format!("({cs} {turnstile} *)")
        }
    }

    /// Prints a context and leaves its names in scope.
    fn ctx(&mut self, c: &Context) -> String {
        let mut parts = Vec::with_capacity(c.len());
        for d in &c.0 {
            parts.push(self.decl(d));
            if let (Some(n), Some(local)) = (d.name(), d.local()) {
                self.bind(n, Some(crate::context::domain(local)));
            }
        }
        parts.join(", ")
    }

    fn decl(&mut self, d: &Decl) -> String {
        match d {
            Decl::Term {
                name,
                ctx,
                level,
                ty,
            } => {
                if ctx.is_empty() && *level == 0 {
                    format!("{name} : {}", self.ty(ty, 0))
                } else {
                    let mark = self.scopes.len();
                    let cs = self.ctx(ctx);
                    let ts = self.ty(ty, 0);
                    self.scopes.truncate(mark);
                    let turnstile = if *level == default_level(ctx) {
                        "|-".to_string()
                    } else {
                        format!("|-^{level}")
                    };
                    if cs.is_empty() {
                        format!("{name} : ({turnstile} {ts})")
                    } else {
                        format!("{name} : ({cs} {turnstile} {ts})")
                    }
                }
            }
            Decl::Type { name, ctx, level } => format!("{name} : {}", self.kind(ctx, *level)),
            Decl::Solved {
                name,
                ctx,
                level,
                hat,
                sol,
            } => {
                let k = self.kind(ctx, *level);
                let mark = self.scopes.len();
                self.bind_hat(hat);
                let s = self.ty(sol, 0);
                self.scopes.truncate(mark);
                format!("{name} := ({}. {s}) : {k}", Self::hat(hat))
            }
            Decl::Absurd => "#".into(),
        }
    }

    fn scoped<F: FnOnce(&mut Self) -> String>(&mut self, f: F) -> String {
        let mark = self.scopes.len();
        let s = f(self);
        self.scopes.truncate(mark);
        s
    }

    fn tyarg(&mut self, h: &Hat, t: &Type) -> String {
        self.scoped(|p| {
            p.bind_hat(h);
            let ts = p.ty(t, 0);
            if !h.is_empty() {
                format!("({}. {ts})", Self::hat(h))
            } else if ts.starts_with('\'') || ts.starts_with("int") || ts.starts_with("bool") {
                format!("({ts})")
            } else {
                format!("(. {ts})")
            }
        })
    }

    fn branch(&mut self, b: &Branch, last: bool) -> String {
        self.scoped(|p| {
            let vars = if b.vars.is_empty() {
                String::new()
            } else {
                format!("{{{}}} ", p.ctx(&b.vars))
            };
            let pat = p.scoped(|p| {
                p.bind_hat(&b.hat);
                let body = p.term(&b.pat, 0);
                if b.hat.is_empty() {
                    format!("box({body})")
                } else {
                    format!("box({}. {body})", Self::hat(&b.hat))
                }
            });
            let annot = match &b.annot {
                Some(a) => format!(" : {}", p.ty(&a.to_type(), 2)),
                None => String::new(),
            };
            let body = if last && !matches!(b.body, Term::Case(..)) {
                p.term(&b.body, 0)
            } else {
                p.term(&b.body, 7)
            };
            format!("| {vars}{pat}{annot} -> {body}")
        })
    }

    fn term(&mut self, t: &Term, prec: u8) -> String {
        let (s, p): (String, u8) = match t {
            Term::Var(x, s) => match self.closure(x, s) {
                None => (x.to_string(), 7),
                Some(c) => (c, 5),
            },
            Term::Raw(x, None) => (x.to_string(), 7),
            Term::Raw(x, Some(items)) => (format!("{x} with {}", self.raw_items(items)), 5),
            Term::Lam(x, ann, e) => {
                let head = match ann {
                    Some(a) => format!("({x} : {})", self.ty(a, 0)),
                    None => x.to_string(),
                };
                let body = self.scoped(|p| {
                    p.bind(x, Some(Hat::empty()));
                    p.term(e, 0)
                });
                (format!("fn {head} -> {body}"), 0)
            }
            Term::Fix(f, ty, e) => {
                let a = self.ty(ty, 0);
                let body = self.scoped(|p| {
                    p.bind(f, Some(Hat::empty()));
                    p.term(e, 0)
                });
                (format!("fix ({f} : {a}) -> {body}"), 0)
            }
            Term::Let(x, e1, e2) => {
                let a = self.term(e1, 0);
                let b = self.scoped(|p| {
                    p.bind(x, Some(Hat::empty()));
                    p.term(e2, 0)
                });
                (format!("let {x} = {a} in {b}"), 0)
            }
            Term::App(f, a) => (format!("{} {}", self.term(f, 6), self.term(a, 7)), 6),
            Term::TLam(a, n, e) => {
                let body = self.scoped(|p| {
                    p.bind(a, None);
                    p.term(e, 0)
                });
                (format!("tfn {a}^{n} -> {body}"), 0)
            }
            Term::TApp(e, h, _, ty) => {
                let f = self.term(e, 6);
                (format!("{f} {}", self.tyarg(h, ty)), 6)
            }
            Term::Boxed(h, n, e) => {
                let body = self.scoped(|p| {
                    p.bind_hat(h);
                    p.term(e, 0)
                });
                let lvl = if *n == 1 || *n == UNRESOLVED {
                    String::new()
                } else {
                    format!("^{n}")
                };
                if h.is_empty() {
                    (format!("box{lvl}({body})"), 7)
                } else {
                    (format!("box{lvl}({}. {body})", Self::hat(h)), 7)
                }
            }
            Term::LetBox(h, _, u, e1, e2) => {
                let a = self.term(e1, 0);
                let b = self.scoped(|p| {
                    p.bind(u, Some(h.clone()));
                    p.term(e2, 0)
                });
                if h.is_empty() {
                    (format!("let box {u} = {a} in {b}"), 0)
                } else {
                    (format!("let box ({}. {u}) = {a} in {b}", Self::hat(h)), 0)
                }
            }
            Term::Case(s, a, bs) => {
                let sc = self.term(s, 1);
                let an = self.ty(&a.to_type(), 2);
                let n = bs.len();
                let branches: Vec<String> = bs
                    .iter()
                    .enumerate()
                    .map(|(i, b)| self.branch(b, i + 1 == n))
                    .collect();
                (format!("case {sc} : {an} of {}", branches.join(" ")), 0)
            }
            Term::Ann(e, ty) => (format!("({} : {})", self.term(e, 0), self.ty(ty, 0)), 7),
            Term::If(c, a, b) => (
                format!(
                    "if {} then {} else {}",
                    self.term(c, 0),
                    self.term(a, 0),
                    self.term(b, 0)
                ),
                0,
            ),
            Term::Int(n) if *n < 0 => (format!("~{}", n.unsigned_abs()), 7),
            Term::Int(n) => (n.to_string(), 7),
            Term::Bool(b) => (b.to_string(), 7),
            Term::Nil(_) => ("[]".into(), 7),
            Term::Cons(a, b) => (format!("{} :: {}", self.term(a, 3), self.term(b, 2)), 2),
            Term::Prim(op, args) => match op {
                Prim::Hd | Prim::Tl | Prim::Null => {
                    (format!("{} {}", op.symbol(), self.term(&args[0], 7)), 6)
                }
                Prim::Eq | Prim::Le => (
                    format!("{} {} {}", self.term(&args[0], 2), op.symbol(), self.term(&args[1], 2)),
                    1,
                ),
                Prim::Add | Prim::Sub => (
                    format!("{} {} {}", self.term(&args[0], 3), op.symbol(), self.term(&args[1], 4)),
                    3,
                ),
                Prim::Mul => (
                    format!("{} * {}", self.term(&args[0], 4), self.term(&args[1], 5)),
                    4,
                ),
            },
        };
        if p < prec {
            format!("({s})")
        } else {
            s
        }
    }
}

/// A whole program in the syntax accepted by `parse_program`.
pub fn program(p: &crate::frontend::Program) -> String {
    let mut out = String::new();
    for d in &p.defs {
        out.push_str(&format!("{} : {} =\n  {};\n\n", d.name, ty(&d.ty), term(&d.body)));
    }
    if let Some(m) = &p.main {
        out.push_str(&format!("{};\n", term(m)));
    }
    out
}
