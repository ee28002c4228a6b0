//! Canonical s-expression dump of elaborated programs.
//!
//! Generated names (`stem_N`) are renumbered in order of first appearance so
//! the output does not depend on the global fresh-name counter.

use std::collections::HashMap;

use crate::syntax::{
    Branch, Context, CtxType, Decl, Hat, Level, Name, RawItem, Subst, SubstEntry, Term, Type,
    UNRESOLVED,
};

#[derive(Default)]
pub struct Dumper {
    names: HashMap<Name, String>,
    counters: HashMap<String, usize>,
}

fn split_generated(n: &str) -> Option<&str> {
    let i = n.rfind('_')?;
    let digits = &n[i + 1..];
    (i > 0 && !digits.is_empty() && digits.chars().all(|c| c.is_ascii_digit())).then(|| &n[..i])
}

fn level(n: Level) -> String {
    if n == UNRESOLVED {
        "?".into()
    } else {
        n.to_string()
    }
}

impl Dumper {
    pub fn name(&mut self, n: &Name) -> String {
        if let Some(s) = self.names.get(n) {
            return s.clone();
        }
        let out = match split_generated(n) {
            Some(stem) => {
                let k = self.counters.entry(stem.to_string()).or_insert(0);
                *k += 1;
                format!("{stem}_{k}")
            }
            None => n.to_string(),
        };
        self.names.insert(n.clone(), out.clone());
        out
    }

    pub fn hat(&mut self, h: &Hat) -> String {
        let items: Vec<String> = h
            .0
            .iter()
            .map(|e| format!("{}^{}", self.name(&e.name), level(e.level)))
            .collect();
        format!("(hat{}{})", if items.is_empty() { "" } else { " " }, items.join(" "))
    }

    pub fn ctx(&mut self, c: &Context) -> String {
        let items: Vec<String> = c.0.iter().map(|d| self.decl(d)).collect();
        format!("(ctx{}{})", if items.is_empty() { "" } else { " " }, items.join(" "))
    }

    fn decl(&mut self, d: &Decl) -> String {
        match d {
            Decl::Term { name, ctx, level: n, ty } => {
                let x = self.name(name);
                format!("(term {x} {} {} {})", self.ctx(ctx), level(*n), self.ty(ty))
            }
            Decl::Type { name, ctx, level: n } => {
                let a = self.name(name);
                format!("(type {a} {} {})", self.ctx(ctx), level(*n))
            }
            Decl::Solved { name, ctx, level: n, hat, sol } => {
                let a = self.name(name);
                format!(
                    "(solved {a} {} {} {} {})",
                    self.ctx(ctx),
                    level(*n),
                    self.hat(hat),
                    self.ty(sol)
                )
            }
            Decl::Absurd => "#".into(),
        }
    }

    fn subst(&mut self, s: &Subst) -> String {
        let items: Vec<String> = s.0.iter().map(|e| self.entry(e)).collect();
        format!("(subst{}{})", if items.is_empty() { "" } else { " " }, items.join(" "))
    }

    fn entry(&mut self, e: &SubstEntry) -> String {
        match e {
            SubstEntry::RenTerm(x, n) => format!("(rterm {} {})", self.name(x), level(*n)),
            SubstEntry::RenType(a, n) => format!("(rtype {} {})", self.name(a), level(*n)),
            SubstEntry::Term(h, n, t) => format!("(term {} {} {})", self.hat(h), level(*n), self.term(t)),
            SubstEntry::Type(h, n, t) => format!("(type {} {} {})", self.hat(h), level(*n), self.ty(t)),
        }
    }

    fn items(&mut self, items: &Option<Vec<RawItem>>) -> String {
        let Some(items) = items else { return "implicit".into() };
        let v: Vec<String> = items
            .iter()
            .map(|i| match i {
                RawItem::Bare(n) => self.name(n),
                RawItem::Term(h, t) => format!("(term {} {})", self.raw_hat(h), self.term(t)),
                RawItem::Type(h, t) => format!("(type {} {})", self.raw_hat(h), self.ty(t)),
            })
            .collect();
        format!("(items {})", v.join(" "))
    }

    fn raw_hat(&mut self, h: &Option<Vec<Name>>) -> String {
        match h {
            None => "_".into(),
            Some(ns) => {
                let v: Vec<String> = ns.iter().map(|n| self.name(n)).collect();
                format!("({})", v.join(" "))
            }
        }
    }

    pub fn ty(&mut self, t: &Type) -> String {
        match t {
            Type::Var(a, s) => format!("(tvar {} {})", self.name(a), self.subst(s)),
            Type::Raw(a, items) => format!("(traw {} {})", self.name(a), self.items(items)),
            Type::Arrow(a, b) => format!("(arrow {} {})", self.ty(a), self.ty(b)),
            Type::Forall(a, c, n, body) => {
                let a = self.name(a);
                format!("(forall {a} {} {} {})", self.ctx(c), level(*n), self.ty(body))
            }
            Type::Boxed(c, n, body) => format!("(cbox {} {} {})", self.ctx(c), level(*n), self.ty(body)),
            Type::Int => "int".into(),
            Type::Bool => "bool".into(),
            Type::List(a) => format!("(list {})", self.ty(a)),
        }
    }

    fn ctxtype(&mut self, c: &CtxType) -> String {
        format!("({} {} {})", self.ctx(&c.ctx), level(c.level), self.ty(&c.ty))
    }

    fn branch(&mut self, b: &Branch) -> String {
        let annot = match &b.annot {
            Some(a) => self.ctxtype(a),
            None => "_".into(),
        };
        format!(
            "(branch {} {} {} {} {})",
            self.ctx(&b.vars),
            self.hat(&b.hat),
            self.term(&b.pat),
            annot,
            self.term(&b.body)
        )
    }

    pub fn term(&mut self, t: &Term) -> String {
        match t {
            Term::Var(x, s) => format!("(var {} {})", self.name(x), self.subst(s)),
            Term::Raw(x, items) => format!("(raw {} {})", self.name(x), self.items(items)),
            Term::Lam(x, ann, e) => {
                let x = self.name(x);
                let a = ann.as_ref().map_or("_".into(), |a| self.ty(a));
                format!("(lam {x} {a} {})", self.term(e))
            }
            Term::App(a, b) => format!("(app {} {})", self.term(a), self.term(b)),
            Term::TLam(a, n, e) => {
                let a = self.name(a);
                format!("(tlam {a} {} {})", level(*n), self.term(e))
            }
            Term::TApp(e, h, n, ty) => {
                format!("(tapp {} {} {} {})", self.term(e), self.hat(h), level(*n), self.ty(ty))
            }
            Term::Boxed(h, n, e) => format!("(box {} {} {})", self.hat(h), level(*n), self.term(e)),
            Term::LetBox(h, n, u, e1, e2) => {
                let h = self.hat(h);
                let u = self.name(u);
                format!("(letbox {h} {} {u} {} {})", level(*n), self.term(e1), self.term(e2))
            }
            Term::Case(s, ann, bs) => {
                let mut out = format!("(case {} {}", self.term(s), self.ctxtype(ann));
                for b in bs {
                    out.push(' ');
                    out.push_str(&self.branch(b));
                }
                out.push(')');
                out
            }
            Term::Let(x, a, b) => {
                let x = self.name(x);
                format!("(let {x} {} {})", self.term(a), self.term(b))
            }
            Term::Fix(f, ty, e) => {
                let f = self.name(f);
                format!("(fix {f} {} {})", self.ty(ty), self.term(e))
            }
            Term::Ann(e, ty) => format!("(ann {} {})", self.term(e), self.ty(ty)),
            Term::If(a, b, c) => format!("(if {} {} {})", self.term(a), self.term(b), self.term(c)),
            Term::Int(n) => format!("(int {n})"),
            Term::Bool(b) => format!("(bool {b})"),
            Term::Nil(None) => "(nil _)".into(),
            Term::Nil(Some(t)) => format!("(nil {})", self.ty(t)),
            Term::Cons(a, b) => format!("(cons {} {})", self.term(a), self.term(b)),
            Term::Prim(p, args) => {
                let v: Vec<String> = args.iter().map(|a| self.term(a)).collect();
                format!("(prim {} {})", p.symbol(), v.join(" "))
            }
        }
    }
}

/// One line per definition, then the entry expression and its type.
pub fn dump_program(defs: &[(Name, Type, Term)], main: Option<&(Term, Type)>) -> String {
    let mut d = Dumper::default();
    let mut out = String::new();
    for (n, t, e) in defs {
        let n = d.name(n);
        out.push_str(&format!("(def {n} {} {})\n", d.ty(t), d.term(e)));
    }
    if let Some((e, t)) = main {
        out.push_str(&format!("(main {} {})\n", d.term(e), d.ty(t)));
    }
    out
}
