//! Random well-formed contexts, types, substitutions and terms.
//!
//! Generators build candidates by following the typing rules and then
//! validate them with the checker, so everything they return is well formed.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::context::{append, chop_lower, domain, insert, merge};
use crate::subst::{apply_type, Sub};
use crate::syntax::{
    fresh, rename_ctx_binders, rename_type, Branch, Context, CtxType, Decl, Hat, HatEntry, Kind,
    Level, Name, Prim, Subst, SubstEntry, Term, Type,
};
use crate::typing::{check, equal::type_eq, kind_check, subst_check, type_of, wf_context};

pub struct Gen {
    pub rng: ChaCha8Rng,
    pub max_level: Level,
    /// Generate only type-variable declarations.
    types_only: bool,
    /// Term attempts left before every further attempt gives up.
    pub attempts: u32,
}

/// Term attempts per generator.
pub const ATTEMPTS: u32 = 2_000;

/// `a ⌢ b`, or their merge when `b` reaches above `a`.
pub fn extend(a: &Context, b: &Context) -> Option<Context> {
    append(a, b).or_else(|_| merge(a, b)).ok()
}

fn term_decl(x: Name, ty: Type) -> Decl {
    Decl::Term {
        name: x,
        ctx: Context::empty(),
        level: 0,
        ty,
    }
}

/// Renames every binder of `c` to a fresh name.
pub fn freshen_ctx(c: &Context) -> (Context, crate::syntax::Renaming) {
    let names: Vec<Name> = c.names().map(|n| fresh(n)).collect();
    rename_ctx_binders(c, &names, &Vec::new())
}

fn split_box(t: Type) -> Option<(Context, Level, Type)> {
    match t {
        Type::Boxed(c, n, t) => Some((c, n, *t)),
        _ => None,
    }
}

impl Gen {
    pub fn new(seed: u64) -> Gen {
        Gen {
            rng: ChaCha8Rng::seed_from_u64(seed),
            max_level: 3,
            types_only: false,
            attempts: ATTEMPTS,
        }
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p)
    }

    pub fn below(&mut self, n: u32) -> u32 {
        if n == 0 {
            0
        } else {
            self.rng.gen_range(0..n)
        }
    }

    fn small_int(&mut self) -> i64 {
        self.rng.gen_range(-3..10)
    }

    // ----------------------------------------------------------- contexts

    /// A well-formed context with up to `budget` declarations.
    pub fn context(&mut self, budget: usize) -> Context {
        let mut levels: Vec<Level> = (0..budget).map(|_| self.rng.gen_range(0..=self.max_level)).collect();
        levels.sort_unstable_by(|a, b| b.cmp(a));
        let mut g = Context::empty();
        for l in levels {
            let Some(d) = self.decl(&g, l, 2) else { continue };
            if let Ok(g2) = insert(&g, d) {
                if wf_context(&g2).is_ok() {
                    g = g2;
                }
            }
        }
        g
    }

    /// A declaration at level `l` meant to follow `g`.
    pub fn decl(&mut self, g: &Context, l: Level, depth: u32) -> Option<Decl> {
        let outer = chop_lower(g, l);
        let local = if l > 0 && self.chance(0.4) {
            self.local_ctx(&outer, l, 2)
        } else {
            Context::empty()
        };
        if self.types_only || self.chance(0.4) {
            Some(Decl::Type {
                name: fresh("'a"),
                ctx: local,
                level: l,
            })
        } else {
            let inner = extend(&outer, &local)?;
            let ty = self.ty(&inner, depth);
            Some(Decl::Term {
                name: fresh("x"),
                ctx: local,
                level: l,
                ty,
            })
        }
    }

    /// A local context of levels below `n`, well formed after `outer`.
    pub fn local_ctx(&mut self, outer: &Context, n: Level, budget: usize) -> Context {
        if n == 0 {
            return Context::empty();
        }
        let k = self.rng.gen_range(0..=budget);
        let mut levels: Vec<Level> = (0..k).map(|_| self.rng.gen_range(0..n)).collect();
        levels.sort_unstable_by(|a, b| b.cmp(a));
        let mut local = Context::empty();
        for l in levels {
            let Some(whole) = extend(outer, &local) else { break };
            let Some(d) = self.decl(&whole, l, 1) else { continue };
            let mut v = local.0.clone();
            v.push(d);
            let cand = Context(v);
            if extend(outer, &cand).is_some_and(|c| wf_context(&c).is_ok()) {
                local = cand;
            }
        }
        local
    }

    // -------------------------------------------------------------- types

    /// A type kinded in `g`.
    pub fn ty(&mut self, g: &Context, depth: u32) -> Type {
        let tvars: Vec<Decl> = g
            .0
            .iter()
            .filter(|d| matches!(d, Decl::Type { .. }))
            .cloned()
            .collect();
        for _ in 0..4 {
            let pick = if depth == 0 { self.below(3) } else { self.below(8) };
            let t = match pick {
                0 => Some(Type::Int),
                1 => Some(Type::Bool),
                2 => match tvars.choose(&mut self.rng).cloned() {
                    Some(d) => self.tvar(g, &d, depth),
                    None => Some(Type::Int),
                },
                3 => Some(Type::list(self.ty(g, depth - 1))),
                4 | 5 => Some(Type::arrow(self.ty(g, depth - 1), self.ty(g, depth - 1))),
                6 => self.box_type(g, depth),
                _ => self.forall_type(g, depth),
            };
            if let Some(t) = t {
                return t;
            }
        }
        Type::Int
    }

    fn tvar(&mut self, g: &Context, d: &Decl, depth: u32) -> Option<Type> {
        let Decl::Type { name, ctx, level, .. } = d else { return None };
        if ctx.is_empty() {
            return Some(Type::Var(name.clone(), Subst::empty()));
        }
        let s = self.subst(g, ctx, *level, depth)?;
        Some(Type::Var(name.clone(), s))
    }

    pub fn box_type(&mut self, g: &Context, depth: u32) -> Option<Type> {
        let n = self.rng.gen_range(1..=self.max_level);
        let outer = chop_lower(g, n);
        let phi = self.local_ctx(&outer, n, 2);
        let inner = extend(&outer, &phi)?;
        let body = self.ty(&inner, depth.saturating_sub(1));
        Some(Type::boxed(phi, n, body))
    }

    fn forall_type(&mut self, g: &Context, depth: u32) -> Option<Type> {
        let n = self.rng.gen_range(0..=self.max_level);
        let phi = if n > 0 && self.chance(0.3) {
            let saved = std::mem::replace(&mut self.types_only, true);
            let phi = self.local_ctx(&chop_lower(g, n), n, 1);
            self.types_only = saved;
            phi
        } else {
            Context::empty()
        };
        let a = fresh("'a");
        let g2 = insert(
            g,
            Decl::Type {
                name: a.clone(),
                ctx: phi.clone(),
                level: n,
            },
        )
        .ok()?;
        let body = self.ty(&g2, depth.saturating_sub(1));
        Some(Type::Forall(a, phi, n, Box::new(body)))
    }

    // ------------------------------------------------------ substitutions

    /// `g ⊩ σ : phi`, built entry by entry.
    pub fn subst(&mut self, g: &Context, phi: &Context, _level: Level, depth: u32) -> Option<Subst> {
        if phi.is_empty() {
            return Some(Subst::empty());
        }
        let depth = depth.checked_sub(1)?;
        let mut prefix = Sub::default();
        let mut out = Vec::new();
        for d in &phi.0 {
            let n = d.level()?;
            let rho = prefix.chop(n);
            let entry = match d {
                Decl::Term { ctx, ty, .. } => {
                    let (c1, _, t1) = split_box(apply_type(&rho, &Type::boxed(ctx.clone(), n, ty.clone())).ok()?)?;
                    let (c2, map) = freshen_ctx(&c1);
                    let t2 = rename_type(&t1, &map);
                    let inner = extend(&chop_lower(g, n), &c2)?;
                    let e = self.term(&inner, &t2, depth)?;
                    SubstEntry::Term(domain(&c2), n, e)
                }
                Decl::Type { ctx, .. } => {
                    let (c1, _, _) = split_box(apply_type(&rho, &Type::boxed(ctx.clone(), n, Type::Int)).ok()?)?;
                    let (c2, _) = freshen_ctx(&c1);
                    let inner = extend(&chop_lower(g, n), &c2)?;
                    SubstEntry::Type(domain(&c2), n, self.ty(&inner, depth))
                }
                _ => return None,
            };
            prefix.push(
                HatEntry {
                    name: d.name()?.clone(),
                    level: n,
                    kind: d.kind()?,
                },
                entry.clone(),
            );
            out.push(entry);
        }
        let s = Subst(out);
        subst_check(g, &s, phi).ok()
    }

    // -------------------------------------------------------------- terms

    /// A term checked against `t` in `g`, elaborated.
    pub fn typed(&mut self, g: &Context, t: &Type, depth: u32) -> Option<Term> {
        let e = self.term(g, t, depth)?;
        check(g, &e, t).ok()
    }

    /// A surface term that checks against `t` in `g`.
    pub fn term(&mut self, g: &Context, t: &Type, depth: u32) -> Option<Term> {
        for _ in 0..6 {
            if self.attempts == 0 {
                return None;
            }
            self.attempts -= 1;
            let e = if depth == 0 || self.chance(0.45) {
                self.intro(g, t, depth)
            } else {
                self.elim(g, t, depth)
            };
            if let Some(e) = e {
                if check(g, &e, t).is_ok() {
                    return Some(e);
                }
            }
        }
        None
    }

    fn intro(&mut self, g: &Context, t: &Type, depth: u32) -> Option<Term> {
        let d = depth.saturating_sub(1);
        if self.chance(0.3) {
            if let Some(v) = self.var_use(g, t, d) {
                return Some(v);
            }
        }
        match t {
            Type::Int => match self.below(if depth == 0 { 1 } else { 3 }) {
                0 => Some(Term::Int(self.small_int())),
                1 => {
                    let op = *[Prim::Add, Prim::Sub, Prim::Mul].choose(&mut self.rng)?;
                    Some(Term::prim(op, vec![self.term(g, t, d)?, self.term(g, t, d)?]))
                }
                _ => {
                    let l = Type::list(Type::Int);
                    let tail = self.term(g, &l, d)?;
                    Some(Term::prim(Prim::Hd, vec![Term::Cons(Box::new(self.term(g, t, d)?), Box::new(tail))]))
                }
            },
            Type::Bool => match self.below(if depth == 0 { 1 } else { 3 }) {
                0 => Some(Term::Bool(self.chance(0.5))),
                1 => {
                    let op = *[Prim::Eq, Prim::Le].choose(&mut self.rng)?;
                    Some(Term::prim(op, vec![self.term(g, &Type::Int, d)?, self.term(g, &Type::Int, d)?]))
                }
                _ => {
                    let l = Type::list(self.ty(g, 0));
                    Some(Term::prim(Prim::Null, vec![self.term(g, &l, d)?]))
                }
            },
            Type::List(a) => {
                if depth == 0 || self.chance(0.35) {
                    Some(Term::Nil(None))
                } else {
                    Some(Term::Cons(Box::new(self.term(g, a, d)?), Box::new(self.term(g, t, d)?)))
                }
            }
            Type::Arrow(a, b) => {
                let x = fresh("x");
                let g2 = insert(g, term_decl(x.clone(), (**a).clone())).ok()?;
                Some(Term::Lam(x, Some((**a).clone()), Box::new(self.term(&g2, b, d)?)))
            }
            Type::Forall(a, phi, n, body) => {
                let a2 = fresh("'a");
                let body = rename_type(body, &vec![(a.clone(), a2.clone())]);
                let g2 = insert(
                    g,
                    Decl::Type {
                        name: a2.clone(),
                        ctx: phi.clone(),
                        level: *n,
                    },
                )
                .ok()?;
                Some(Term::TLam(a2, *n, Box::new(self.term(&g2, &body, d)?)))
            }
            Type::Boxed(phi, n, body) => {
                let (phi2, map) = freshen_ctx(phi);
                let body = rename_type(body, &map);
                let inner = extend(&chop_lower(g, *n), &phi2)?;
                Some(Term::boxed(domain(&phi2), *n, self.term(&inner, &body, d)?))
            }
            Type::Var(..) => self.var_use(g, t, d),
            Type::Raw(..) => None,
        }
    }

    /// A variable of type `t`, possibly applied to an argument.
    fn var_use(&mut self, g: &Context, t: &Type, depth: u32) -> Option<Term> {
        let mut vars: Vec<Decl> = g.0.iter().filter(|d| matches!(d, Decl::Term { .. })).cloned().collect();
        vars.shuffle(&mut self.rng);
        for d in vars.iter().take(6) {
            let Decl::Term { name, ctx, level, ty } = d else { continue };
            let (s, ty) = if ctx.is_empty() {
                (Subst::empty(), ty.clone())
            } else {
                let Some(s) = self.subst(g, ctx, *level, depth) else { continue };
                let Ok(ty) = crate::subst::subst_type(&s, &domain(ctx), ty) else { continue };
                (s, ty)
            };
            let v = Term::Var(name.clone(), s);
            if type_eq(g, &ty, t) {
                return Some(v);
            }
            if let Type::Arrow(a, b) = &ty {
                if depth > 0 && type_eq(g, b, t) {
                    if let Some(arg) = self.term(g, a, depth - 1) {
                        return Some(Term::app(v, arg));
                    }
                }
            }
        }
        None
    }

    fn elim(&mut self, g: &Context, t: &Type, depth: u32) -> Option<Term> {
        let d = depth - 1;
        match self.below(9) {
            0 | 1 => {
                let a = self.ty(g, 1);
                let x = fresh("x");
                let g2 = insert(g, term_decl(x.clone(), a.clone())).ok()?;
                let body = self.term(&g2, t, d)?;
                Some(Term::app(Term::Lam(x, Some(a.clone()), Box::new(body)), self.term(g, &a, d)?))
            }
            2 => {
                let a = self.ty(g, 1);
                let x = fresh("x");
                let g2 = insert(g, term_decl(x.clone(), a.clone())).ok()?;
                let e1 = Term::ann(self.term(g, &a, d)?, a);
                Some(Term::Let(x, Box::new(e1), Box::new(self.term(&g2, t, d)?)))
            }
            3 => {
                let c = self.term(g, &Type::Bool, d)?;
                Some(Term::If(Box::new(c), Box::new(self.term(g, t, d)?), Box::new(self.term(g, t, d)?)))
            }
            4 => self.tapp_redex(g, t, d),
            5 | 6 => self.letbox_redex(g, t, d),
            7 if *t == Type::Int => self.fix_loop(g, d),
            _ => self.case_term(g, t, d),
        }
    }

    fn tapp_redex(&mut self, g: &Context, t: &Type, d: u32) -> Option<Term> {
        let n = self.rng.gen_range(0..=self.max_level);
        let a = fresh("'a");
        let g2 = insert(
            g,
            Decl::Type {
                name: a.clone(),
                ctx: Context::empty(),
                level: n,
            },
        )
        .ok()?;
        let body = self.term(&g2, t, d)?;
        let arg = self.ty(&chop_lower(g, n), 1);
        let f = Term::TLam(a, n, Box::new(body));
        Some(Term::TApp(Box::new(f), Hat::empty(), n, arg))
    }

    fn letbox_redex(&mut self, g: &Context, t: &Type, d: u32) -> Option<Term> {
        let bt = self.box_type(g, 1)?;
        let Type::Boxed(phi, n, s) = &bt else { return None };
        let code = self.term(g, &bt, d)?;
        let u = fresh("u");
        let g2 = insert(
            g,
            Decl::Term {
                name: u.clone(),
                ctx: phi.clone(),
                level: *n,
                ty: (**s).clone(),
            },
        )
        .ok()?;
        let body = self.term(&g2, t, d)?;
        Some(Term::LetBox(domain(phi), *n, u, Box::new(Term::ann(code, bt.clone())), Box::new(body)))
    }

    /// A bounded recursive countdown applied to a small literal.
    fn fix_loop(&mut self, g: &Context, d: u32) -> Option<Term> {
        let f = fresh("f");
        let k = fresh("k");
        let ft = Type::arrow(Type::Int, Type::Int);
        let base = self.term(g, &Type::Int, d)?;
        let kv = Term::Var(k.clone(), Subst::empty());
        let fv = Term::Var(f.clone(), Subst::empty());
        let body = Term::If(
            Box::new(Term::prim(Prim::Le, vec![kv.clone(), Term::Int(0)])),
            Box::new(base),
            Box::new(Term::app(fv, Term::prim(Prim::Sub, vec![kv, Term::Int(1)]))),
        );
        let fix = Term::Fix(f, ft, Box::new(Term::Lam(k, Some(Type::Int), Box::new(body))));
        Some(Term::app(fix, Term::Int(self.rng.gen_range(0..5))))
    }

    // --------------------------------------------------------------- case

    /// A closed piece of code `(Φ, k, S, e)` with `Φ ⊢ e : S` at level `k`.
    pub fn code(&mut self, depth: u32) -> Option<(Context, Level, Type, Term)> {
        let k = self.rng.gen_range(1..=self.max_level);
        let phi = self.local_ctx(&Context::empty(), k, 2);
        let s = self.ty(&phi, 1);
        let e = self.term(&phi, &s, depth)?;
        Some((phi, k, s, e))
    }

    /// Pattern candidates for `e`, each a pattern-variable context and pattern.
    pub fn patterns(&mut self, phi: &Context, k: Level, s: &Type, e: &Term) -> Vec<(Context, Term)> {
        let mut out = vec![(Context::empty(), e.clone())];
        let children: Vec<(usize, Term)> = match e {
            Term::App(a, b) | Term::Cons(a, b) => vec![(0, (**a).clone()), (1, (**b).clone())],
            Term::If(a, b, c) => vec![(0, (**a).clone()), (1, (**b).clone()), (2, (**c).clone())],
            Term::Prim(_, args) => args.iter().cloned().enumerate().collect(),
            _ => Vec::new(),
        };
        for (i, c) in children {
            let Ok(ct) = type_of(phi, &c) else { continue };
            let x = fresh("X");
            let hole = Term::Var(x.clone(), Subst::id(&domain(phi)));
            let p = match e {
                Term::App(a, b) if i == 0 => Term::App(Box::new(hole), b.clone()),
                Term::App(a, _) => Term::App(a.clone(), Box::new(hole)),
                Term::Cons(_, b) if i == 0 => Term::Cons(Box::new(hole), b.clone()),
                Term::Cons(a, _) => Term::Cons(a.clone(), Box::new(hole)),
                Term::If(a, b, c) => {
                    let mut v = [a.clone(), b.clone(), c.clone()];
                    *v[i] = hole;
                    let [a, b, c] = v;
                    Term::If(a, b, c)
                }
                Term::Prim(op, args) => {
                    let mut v = args.clone();
                    v[i] = hole;
                    Term::Prim(*op, v)
                }
                _ => continue,
            };
            let vars = Context(vec![Decl::Term {
                name: x,
                ctx: phi.clone(),
                level: k,
                ty: ct,
            }]);
            out.push((vars, p));
        }
        if let Term::Lam(_, Some(a), _) = e {
            if let Type::Arrow(_, b) = s {
                let y2 = fresh("y");
                let mut v = phi.0.clone();
                v.push(term_decl(y2.clone(), a.clone()));
                let local = Context(v);
                let x = fresh("X");
                let body_ty = (**b).clone();
                let hole = Term::Var(x.clone(), Subst::id(&domain(&local)));
                let vars = Context(vec![Decl::Term {
                    name: x,
                    ctx: local,
                    level: k,
                    ty: body_ty,
                }]);
                out.push((vars, Term::Lam(y2, Some(a.clone()), Box::new(hole))));
            }
        }
        if let Some(other) = self.term(phi, s, 1) {
            out.push((Context::empty(), other));
        }
        out
    }

    /// A branch that matches any code of type `[Φ ⊢k S]`.
    pub fn catch_all(phi: &Context, k: Level, s: &Type) -> (Context, Term) {
        let x = fresh("X");
        let vars = Context(vec![Decl::Term {
            name: x.clone(),
            ctx: phi.clone(),
            level: k,
            ty: s.clone(),
        }]);
        (vars, Term::Var(x, Subst::id(&domain(phi))))
    }

    /// A `case` on generated code whose branches produce `t`.
    pub fn case_term(&mut self, g: &Context, t: &Type, d: u32) -> Option<Term> {
        let (phi, k, s, code) = self.code(d.min(2))?;
        let ann = CtxType {
            ctx: phi.clone(),
            level: k,
            ty: s.clone(),
        };
        let scrut = if self.chance(0.75) {
            Term::boxed(domain(&phi), k, code.clone())
        } else {
            self.term(g, &ann.to_type(), d)?
        };
        let mut pats = self.patterns(&phi, k, &s, &code);
        pats.shuffle(&mut self.rng);
        pats.truncate(self.rng.gen_range(1..=3));
        if self.chance(0.9) {
            pats.push(Self::catch_all(&phi, k, &s));
        }
        let mut branches = Vec::new();
        for (vars, pat) in pats {
            let Some(inner) = extend(g, &vars).filter(|c| wf_context(c).is_ok()) else { continue };
            let Some(body) = self.term(&inner, t, d) else { continue };
            branches.push(Branch {
                vars,
                hat: domain(&phi),
                pat,
                annot: None,
                body,
            });
        }
        if branches.is_empty() {
            return None;
        }
        Some(Term::Case(Box::new(scrut), ann, branches))
    }

    // ----------------------------------------------------------- programs

    /// A closed, elaborated program and its type.
    pub fn program(&mut self, depth: u32) -> Option<(Term, Type)> {
        let t = self.ty(&Context::empty(), 2);
        let t = kind_check(&Context::empty(), &t).ok()?;
        let e = self.typed(&Context::empty(), &t, depth)?;
        Some((e, t))
    }

    /// A closed, elaborated program whose head is a `case`.
    pub fn case_program(&mut self, depth: u32) -> Option<(Term, Type)> {
        let t = self.ty(&Context::empty(), 1);
        let e = self.case_term(&Context::empty(), &t, depth)?;
        let e = check(&Context::empty(), &e, &t).ok()?;
        Some((e, t))
    }
}

/// `HatEntry` for a declaration.
pub fn hat_entry(d: &Decl) -> Option<HatEntry> {
    Some(HatEntry {
        name: d.name()?.clone(),
        level: d.level()?,
        kind: d.kind().unwrap_or(Kind::Term),
    })
}
