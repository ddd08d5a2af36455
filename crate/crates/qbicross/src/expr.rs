//! Expression grammar for spec files and the commutative exp-polynomial
//! function algebra on ℝˢ.
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := '-' factor | base ('^' integer)?
//! base   := rational | symbol | '(' expr ')' | 'exp' '(' linform ')'
//! tensor := tterm (('+'|'-') tterm)*      tterm := term '@' term
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::multiindex::MultiIndex;
use crate::paramseries::{fmt_q, q_from_str, q_to_f64, Param, ParamSeries, Q};

/// Names visible to the parser: the parameter symbol and an ordered symbol list.
#[derive(Clone, Debug)]
pub struct SymbolTable {
    pub param: String,
    pub symbols: Vec<String>,
}

impl SymbolTable {
    pub fn new(param: &str, symbols: &[&str]) -> Self {
        SymbolTable {
            param: param.to_string(),
            symbols: symbols.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn lookup(&self, name: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s == name)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(Q),
    /// The deformation parameter symbol.
    Param,
    Sym(usize),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    /// Division by a nonzero `c·param^k` (validated at parse time).
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Pow(Box<Expr>, i32),
    Exp(Box<Expr>),
}

impl Expr {
    pub fn count_nodes(&self, pred: &dyn Fn(&Expr) -> bool) -> usize {
        let own = usize::from(pred(self));
        own + match self {
            Expr::Num(_) | Expr::Param | Expr::Sym(_) => 0,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.count_nodes(pred) + b.count_nodes(pred)
            }
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Exp(a) => a.count_nodes(pred),
        }
    }

    /// Renumbers symbols; `None` if some symbol has no image.
    pub fn map_syms(&self, f: &dyn Fn(usize) -> Option<usize>) -> Option<Expr> {
        let b = |e: &Expr| e.map_syms(f).map(Box::new);
        Some(match self {
            Expr::Num(_) | Expr::Param => self.clone(),
            Expr::Sym(i) => Expr::Sym(f(*i)?),
            Expr::Add(x, y) => Expr::Add(b(x)?, b(y)?),
            Expr::Sub(x, y) => Expr::Sub(b(x)?, b(y)?),
            Expr::Mul(x, y) => Expr::Mul(b(x)?, b(y)?),
            Expr::Div(x, y) => Expr::Div(b(x)?, b(y)?),
            Expr::Neg(x) => Expr::Neg(b(x)?),
            Expr::Pow(x, n) => Expr::Pow(b(x)?, *n),
            Expr::Exp(x) => Expr::Exp(b(x)?),
        })
    }

    /// `c · param^k` if the expression contains no symbols and is a monomial in the parameter.
    /// `k` counts occurrences of the parameter symbol (not formal degrees).
    pub fn as_param_monomial(&self) -> Option<(Q, i32)> {
        match self {
            Expr::Num(c) => Some((c.clone(), 0)),
            Expr::Param => Some((Q::one(), 1)),
            Expr::Sym(_) | Expr::Exp(_) | Expr::Add(..) | Expr::Sub(..) => {
                // sums collapse only when one side vanishes
                if let Expr::Add(a, b) | Expr::Sub(a, b) = self {
                    let (ca, ka) = a.as_param_monomial()?;
                    let (cb, kb) = b.as_param_monomial()?;
                    let cb = if matches!(self, Expr::Sub(..)) { -cb } else { cb };
                    if ca.is_zero() {
                        return Some((cb, kb));
                    }
                    if cb.is_zero() {
                        return Some((ca, ka));
                    }
                    if ka == kb {
                        return Some((ca + cb, ka));
                    }
                }
                None
            }
            Expr::Mul(a, b) => {
                let (ca, ka) = a.as_param_monomial()?;
                let (cb, kb) = b.as_param_monomial()?;
                Some((ca * cb, ka + kb))
            }
            Expr::Div(a, b) => {
                let (ca, ka) = a.as_param_monomial()?;
                let (cb, kb) = b.as_param_monomial()?;
                if cb.is_zero() {
                    return None;
                }
                Some((ca / cb, ka - kb))
            }
            Expr::Neg(a) => a.as_param_monomial().map(|(c, k)| (-c, k)),
            Expr::Pow(a, n) => {
                let (c, k) = a.as_param_monomial()?;
                if *n < 0 && c.is_zero() {
                    return None;
                }
                let cp = if *n >= 0 {
                    num_traits::pow(c, *n as usize)
                } else {
                    num_traits::pow(c.recip(), (-n) as usize)
                };
                Some((cp, k * n))
            }
        }
    }

    /// Linear form `Σ cⱼ·xⱼ` with coefficients given as (rational, parameter-symbol power) sums.
    /// Returns `None` when the expression is not linear or has a nonzero constant.
    pub fn as_linear(&self, nsym: usize) -> Option<Vec<Vec<(i32, Q)>>> {
        let lin = linear_parts(self, nsym)?;
        if !lin.0.iter().all(|(_, c)| c.is_zero()) {
            return None;
        }
        Some(lin.1)
    }
}

type ParamPoly = Vec<(i32, Q)>;

fn pp_norm(mut p: ParamPoly) -> ParamPoly {
    p.sort_by_key(|t| t.0);
    let mut out: ParamPoly = Vec::with_capacity(p.len());
    for (d, c) in p {
        match out.last_mut() {
            Some(l) if l.0 == d => l.1 += c,
            _ => out.push((d, c)),
        }
    }
    out.retain(|t| !t.1.is_zero());
    out
}

fn pp_mul(a: &ParamPoly, b: &ParamPoly) -> ParamPoly {
    let mut out = Vec::new();
    for (da, ca) in a {
        for (db, cb) in b {
            out.push((da + db, ca * cb));
        }
    }
    pp_norm(out)
}

fn pp_scale(a: &ParamPoly, c: &Q, k: i32) -> ParamPoly {
    pp_norm(a.iter().map(|(d, x)| (d + k, x * c)).collect())
}

fn pp_add(a: &ParamPoly, b: &ParamPoly) -> ParamPoly {
    let mut v = a.clone();
    v.extend(b.iter().cloned());
    pp_norm(v)
}

/// (constant part, per-symbol coefficients); parameter powers are symbol counts.
fn linear_parts(e: &Expr, nsym: usize) -> Option<(ParamPoly, Vec<ParamPoly>)> {
    let zero = || (Vec::new(), vec![Vec::new(); nsym]);
    match e {
        Expr::Num(c) => Some((pp_norm(vec![(0, c.clone())]), vec![Vec::new(); nsym])),
        Expr::Param => Some((vec![(1, Q::one())], vec![Vec::new(); nsym])),
        Expr::Sym(i) => {
            let mut z = zero();
            z.1[*i] = vec![(0, Q::one())];
            Some(z)
        }
        Expr::Add(a, b) | Expr::Sub(a, b) => {
            let (ca, la) = linear_parts(a, nsym)?;
            let (mut cb, mut lb) = linear_parts(b, nsym)?;
            if matches!(e, Expr::Sub(..)) {
                cb = pp_scale(&cb, &-Q::one(), 0);
                lb = lb.iter().map(|p| pp_scale(p, &-Q::one(), 0)).collect();
            }
            Some((
                pp_add(&ca, &cb),
                la.iter().zip(&lb).map(|(x, y)| pp_add(x, y)).collect(),
            ))
        }
        Expr::Neg(a) => {
            let (c, l) = linear_parts(a, nsym)?;
            Some((
                pp_scale(&c, &-Q::one(), 0),
                l.iter().map(|p| pp_scale(p, &-Q::one(), 0)).collect(),
            ))
        }
        Expr::Mul(a, b) => {
            let pa = linear_parts(a, nsym)?;
            let pb = linear_parts(b, nsym)?;
            let a_const = pa.1.iter().all(|p| p.is_empty());
            let b_const = pb.1.iter().all(|p| p.is_empty());
            let (k, (c, l)) = if a_const {
                (pa.0, pb)
            } else if b_const {
                (pb.0, pa)
            } else {
                return None;
            };
            Some((pp_mul(&k, &c), l.iter().map(|p| pp_mul(&k, p)).collect()))
        }
        Expr::Div(a, b) => {
            let (c, k) = b.as_param_monomial()?;
            let (ca, la) = linear_parts(a, nsym)?;
            let inv = c.recip();
            Some((
                pp_scale(&ca, &inv, -k),
                la.iter().map(|p| pp_scale(p, &inv, -k)).collect(),
            ))
        }
        Expr::Pow(..) => {
            let (c, k) = e.as_param_monomial()?;
            Some((pp_norm(vec![(k, c)]), vec![Vec::new(); nsym]))
        }
        Expr::Exp(_) => None,
    }
}

// ---------------------------------------------------------------- lexer

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(Q),
    Ident(String),
    Op(char),
    End,
}

struct Lexer {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (p, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|x| x.1.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].1.is_ascii_digit() || chars[i].1 == '.') {
                i += 1;
            }
            let s: String = chars[start..i].iter().map(|x| x.1).collect();
            let v = q_from_str(&s).ok_or_else(|| Error::Parse {
                pos: p,
                msg: format!("bad number `{s}`"),
            })?;
            out.push((Tok::Num(v), p));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].1.is_alphanumeric() || chars[i].1 == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().map(|x| x.1).collect()), p));
        } else if "+-*/^()@".contains(c) {
            out.push((Tok::Op(c), p));
            i += 1;
        } else if c == '·' {
            out.push((Tok::Op('*'), p));
            i += 1;
        } else {
            return Err(Error::Parse {
                pos: p,
                msg: format!("unexpected character `{c}`"),
            });
        }
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser<'a> {
    lx: Lexer,
    ctx: &'a SymbolTable,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.lx.toks[self.lx.pos].0
    }
    fn pos(&self) -> usize {
        self.lx.toks[self.lx.pos].1
    }
    fn bump(&mut self) -> Tok {
        let t = self.lx.toks[self.lx.pos].0.clone();
        if self.lx.pos + 1 < self.lx.toks.len() {
            self.lx.pos += 1;
        }
        t
    }
    fn err<T>(&self, msg: &str) -> Result<T> {
        Err(Error::Parse {
            pos: self.pos(),
            msg: msg.to_string(),
        })
    }
    fn expect(&mut self, c: char) -> Result<()> {
        if *self.peek() == Tok::Op(c) {
            self.bump();
            Ok(())
        } else {
            self.err(&format!("expected `{c}`"))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Op('+') => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Op('-') => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Tok::Op('*') => {
                    self.bump();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Tok::Op('/') => {
                    self.bump();
                    let at = self.pos();
                    let rhs = self.factor()?;
                    match rhs.as_param_monomial() {
                        Some((c, _)) if !c.is_zero() => {}
                        Some(_) => {
                            return Err(Error::Parse {
                                pos: at,
                                msg: "division by zero".into(),
                            })
                        }
                        None => {
                            return Err(Error::Parse {
                                pos: at,
                                msg: "division only by nonzero rationals or parameter monomials".into(),
                            })
                        }
                    }
                    lhs = Expr::Div(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        if *self.peek() == Tok::Op('-') {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let base = self.base()?;
        if *self.peek() == Tok::Op('^') {
            self.bump();
            let neg = if *self.peek() == Tok::Op('-') {
                self.bump();
                true
            } else {
                false
            };
            let at = self.pos();
            let n = match self.bump() {
                Tok::Num(v) if v.is_integer() => v.to_integer().to_i32().ok_or_else(|| Error::Parse {
                    pos: at,
                    msg: "exponent too large".into(),
                })?,
                _ => {
                    return Err(Error::Parse {
                        pos: at,
                        msg: "expected integer exponent".into(),
                    })
                }
            };
            let n = if neg { -n } else { n };
            if n < 0 && base.as_param_monomial().is_none_or(|(c, _)| c.is_zero()) {
                return Err(Error::Parse {
                    pos: at,
                    msg: "negative powers only of nonzero parameter monomials".into(),
                });
            }
            return Ok(Expr::Pow(Box::new(base), n));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr> {
        let at = self.pos();
        match self.bump() {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::Op('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) if name == "exp" && *self.peek() == Tok::Op('(') => {
                self.bump();
                let arg_at = self.pos();
                let arg = self.expr()?;
                self.expect(')')?;
                if arg.as_linear(self.ctx.symbols.len()).is_none() {
                    return Err(Error::NonlinearExp { pos: arg_at });
                }
                Ok(Expr::Exp(Box::new(arg)))
            }
            Tok::Ident(name) => {
                if name == self.ctx.param {
                    Ok(Expr::Param)
                } else if let Some(i) = self.ctx.lookup(&name) {
                    Ok(Expr::Sym(i))
                } else {
                    Err(Error::UnknownSymbol { pos: at, name })
                }
            }
            Tok::End => Err(Error::Parse {
                pos: at,
                msg: "unexpected end of input".into(),
            }),
            Tok::Op(c) => Err(Error::Parse {
                pos: at,
                msg: format!("unexpected `{c}`"),
            }),
        }
    }
}

fn parser<'a>(text: &str, ctx: &'a SymbolTable) -> Result<Parser<'a>> {
    Ok(Parser {
        lx: Lexer {
            toks: lex(text)?,
            pos: 0,
        },
        ctx,
    })
}

/// Parses an expression against a symbol table.
pub fn parse(text: &str, ctx: &SymbolTable) -> Result<Expr> {
    let mut p = parser(text, ctx)?;
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return p.err("trailing input");
    }
    Ok(e)
}

/// Parses `a @ b ± c @ d …` into (left, right, sign-carrying) pairs.
pub fn parse_tensor(text: &str, ctx: &SymbolTable) -> Result<Vec<(Expr, Expr)>> {
    let mut p = parser(text, ctx)?;
    let mut out = Vec::new();
    let mut negate = false;
    if *p.peek() == Tok::Op('-') {
        // leading sign belongs to the first left factor
        p.bump();
        negate = true;
    }
    loop {
        let l = p.term()?;
        p.expect('@')?;
        let r = p.term()?;
        let l = if negate { Expr::Neg(Box::new(l)) } else { l };
        out.push((l, r));
        match p.peek() {
            Tok::Op('+') => {
                p.bump();
                negate = false;
            }
            Tok::Op('-') => {
                p.bump();
                negate = true;
            }
            Tok::End => return Ok(out),
            _ => return p.err("expected `+`, `-` or end of tensor expression"),
        }
    }
}

/// Renders an AST back to grammar text.
pub fn print_ast(e: &Expr, ctx: &SymbolTable) -> String {
    fn go(e: &Expr, ctx: &SymbolTable, prec: u8) -> String {
        let (s, p) = match e {
            Expr::Num(c) => (fmt_q(c), if c.is_integer() && !c.is_negative() { 4 } else { 1 }),
            Expr::Param => (ctx.param.clone(), 4),
            Expr::Sym(i) => (ctx.symbols[*i].clone(), 4),
            Expr::Add(a, b) => (format!("{} + {}", go(a, ctx, 0), go(b, ctx, 1)), 0),
            Expr::Sub(a, b) => (format!("{} - {}", go(a, ctx, 0), go(b, ctx, 1)), 0),
            Expr::Mul(a, b) => (format!("{}*{}", go(a, ctx, 1), go(b, ctx, 2)), 1),
            Expr::Div(a, b) => (format!("{}/{}", go(a, ctx, 1), go(b, ctx, 2)), 1),
            Expr::Neg(a) => (format!("-{}", go(a, ctx, 2)), 2),
            Expr::Pow(a, n) => (format!("{}^{}", go(a, ctx, 4), n), 3),
            Expr::Exp(a) => (format!("exp({})", go(a, ctx, 0)), 4),
        };
        if p < prec {
            format!("({s})")
        } else {
            s
        }
    }
    go(e, ctx, 0)
}

// ------------------------------------------------------------- ExpPoly

/// Linear form `Σ dⱼxⱼ`; each `dⱼ` is an exact polynomial in the formal parameter variable.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinForm(pub Vec<Vec<(i32, Q)>>);

impl LinForm {
    pub fn zero(n: usize) -> Self {
        LinForm(vec![Vec::new(); n])
    }
    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|d| d.is_empty())
    }
    pub fn add(&self, o: &LinForm) -> LinForm {
        LinForm(self.0.iter().zip(&o.0).map(|(a, b)| pp_add(a, b)).collect())
    }
    pub fn scale(&self, c: &Q) -> LinForm {
        LinForm(self.0.iter().map(|p| pp_scale(p, c, 0)).collect())
    }
    /// Coefficient `dⱼ` as a series in the given window.
    pub fn coeff(&self, j: usize, param: &Param) -> ParamSeries {
        ParamSeries::from_terms(param, self.0[j].clone())
    }
    pub fn eval(&self, x: &[f64], formal: f64) -> f64 {
        self.0
            .iter()
            .zip(x)
            .map(|(d, xi)| d.iter().map(|(k, c)| q_to_f64(c) * formal.powi(*k)).sum::<f64>() * xi)
            .sum()
    }
    /// Exact value, defined only when the form vanishes at the point.
    fn eval_exact_is_zero(&self, x: &[Q], formal: &Q) -> Option<bool> {
        let mut acc = Q::zero();
        for (d, xi) in self.0.iter().zip(x) {
            for (k, c) in d {
                if *k < 0 && formal.is_zero() {
                    return None;
                }
                let p = if *k >= 0 {
                    num_traits::pow(formal.clone(), *k as usize)
                } else {
                    num_traits::pow(formal.recip(), (-k) as usize)
                };
                acc += c * p * xi;
            }
        }
        Some(acc.is_zero())
    }
}

/// Canonical sum of `coefficient · x^m · exp(ℓ)` terms.
#[derive(Clone)]
pub struct ExpPoly {
    param: Param,
    vars: Arc<Vec<String>>,
    terms: BTreeMap<(MultiIndex, LinForm), ParamSeries>,
}

impl PartialEq for ExpPoly {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms
    }
}

impl fmt::Debug for ExpPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl ExpPoly {
    pub fn zero(param: &Param, vars: Arc<Vec<String>>) -> Self {
        ExpPoly {
            param: param.clone(),
            vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(param: &Param, vars: Arc<Vec<String>>, c: ParamSeries) -> Self {
        let n = vars.len();
        let mut e = Self::zero(param, vars);
        e.push(MultiIndex::zero(n), LinForm::zero(n), c);
        e
    }

    pub fn coordinate(param: &Param, vars: Arc<Vec<String>>, j: usize) -> Self {
        let n = vars.len();
        let mut e = Self::zero(param, vars);
        e.push(MultiIndex::unit(n, j), LinForm::zero(n), ParamSeries::one(param));
        e
    }

    pub fn exp_of(param: &Param, vars: Arc<Vec<String>>, l: LinForm) -> Self {
        let n = vars.len();
        let mut e = Self::zero(param, vars);
        e.push(MultiIndex::zero(n), l, ParamSeries::one(param));
        e
    }

    pub fn param(&self) -> &Param {
        &self.param
    }
    pub fn vars(&self) -> &Arc<Vec<String>> {
        &self.vars
    }
    pub fn nvars(&self) -> usize {
        self.vars.len()
    }
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    pub fn len(&self) -> usize {
        self.terms.len()
    }
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &LinForm, &ParamSeries)> {
        self.terms.iter().map(|((m, l), c)| (m, l, c))
    }

    pub fn push(&mut self, m: MultiIndex, l: LinForm, c: ParamSeries) {
        if c.is_zero() {
            return;
        }
        let key = (m, l);
        match self.terms.get_mut(&key) {
            Some(x) => {
                x.add_assign_ref(&c);
                if x.is_zero() {
                    self.terms.remove(&key);
                }
            }
            None => {
                self.terms.insert(key, c);
            }
        }
    }

    fn like(&self) -> Self {
        Self::zero(&self.param, self.vars.clone())
    }

    pub fn add(&self, o: &ExpPoly) -> ExpPoly {
        let mut r = self.clone();
        for ((m, l), c) in &o.terms {
            r.push(m.clone(), l.clone(), c.clone());
        }
        r
    }

    pub fn neg(&self) -> ExpPoly {
        let mut r = self.like();
        for ((m, l), c) in &self.terms {
            r.terms.insert((m.clone(), l.clone()), c.neg_ref());
        }
        r
    }

    pub fn sub(&self, o: &ExpPoly) -> ExpPoly {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &ExpPoly) -> ExpPoly {
        let mut r = self.like();
        for ((m1, l1), c1) in &self.terms {
            for ((m2, l2), c2) in &o.terms {
                r.push(m1.add(m2), l1.add(l2), c1.mul_ref(c2));
            }
        }
        r
    }

    pub fn scale(&self, c: &ParamSeries) -> ExpPoly {
        let mut r = self.like();
        for ((m, l), x) in &self.terms {
            r.push(m.clone(), l.clone(), x.mul_ref(c));
        }
        r
    }

    pub fn scale_q(&self, c: &Q) -> ExpPoly {
        let mut r = self.like();
        for ((m, l), x) in &self.terms {
            r.push(m.clone(), l.clone(), x.scale(c));
        }
        r
    }

    pub fn pow(&self, n: u32) -> ExpPoly {
        let mut acc = Self::constant(&self.param, self.vars.clone(), ParamSeries::one(&self.param));
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// True if some coefficient fell off the top of the parameter window.
    pub fn is_truncated(&self) -> bool {
        self.terms.values().any(|c| c.is_truncated())
    }

    pub fn lowest_param_degree(&self) -> Option<i32> {
        self.terms.values().filter_map(|c| c.lowest_degree()).min()
    }

    /// Total polynomial degree in the coordinates (exponentials count as 0).
    pub fn poly_degree(&self) -> u32 {
        self.terms.keys().map(|(m, _)| m.degree()).max().unwrap_or(0)
    }

    /// Drops every term whose monomial has total degree above `d`.
    pub fn truncate_poly_degree(&self, d: u32) -> ExpPoly {
        let mut r = self.like();
        for ((m, l), c) in &self.terms {
            if m.degree() <= d {
                r.terms.insert((m.clone(), l.clone()), c.clone());
            }
        }
        r
    }

    /// Polynomial part only (terms without exponentials).
    pub fn has_exponentials(&self) -> bool {
        self.terms.keys().any(|(_, l)| !l.is_zero())
    }

    /// Rewrites every coefficient in another window of the same parameter symbol.
    pub fn rewindow(&self, param: &Param) -> ExpPoly {
        let mut r = Self::zero(param, self.vars.clone());
        for ((m, l), c) in &self.terms {
            r.push(m.clone(), l.clone(), c.rewindow(param));
        }
        r
    }

    /// Renames / reinterprets variables (same count).
    pub fn with_vars(&self, vars: Arc<Vec<String>>) -> ExpPoly {
        assert_eq!(vars.len(), self.vars.len());
        ExpPoly {
            param: self.param.clone(),
            vars,
            terms: self.terms.clone(),
        }
    }

    /// Numeric value; parameter poles are allowed when the parameter value is nonzero.
    pub fn eval(&self, x: &[f64], value: f64) -> Result<f64> {
        if x.len() != self.nvars() {
            return Err(Error::Dimension {
                expected: self.nvars(),
                got: x.len(),
            });
        }
        let formal = self.param.formal_value(value);
        let mut acc = 0.0;
        for ((m, l), c) in &self.terms {
            let cv = c.eval_laurent(value)?;
            let mut mv = 1.0;
            for (xi, e) in x.iter().zip(m.entries()) {
                mv *= xi.powi(*e as i32);
            }
            let ev = if l.is_zero() { 1.0 } else { l.eval(x, formal).exp() };
            acc += cv * mv * ev;
        }
        Ok(acc)
    }

    /// Exact value at a rational point, when every exponential has zero argument there.
    pub fn eval_exact(&self, x: &[Q], value: &Q) -> Option<Q> {
        let formal = self.param.formal_value_exact(value)?;
        let mut acc = Q::zero();
        for ((m, l), c) in &self.terms {
            if !l.eval_exact_is_zero(x, &formal)? {
                return None;
            }
            let mut mv = c.eval_exact(value)?;
            for (xi, e) in x.iter().zip(m.entries()) {
                mv *= num_traits::pow(xi.clone(), *e as usize);
            }
            acc += mv;
        }
        Some(acc)
    }

    /// Grammar text that parses back to the same canonical form.
    pub fn to_text(&self) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut out = String::new();
        for (i, ((m, l), c)) in self.terms.iter().enumerate() {
            let mut factors: Vec<String> = Vec::new();
            for (j, e) in m.entries().iter().enumerate() {
                match e {
                    0 => {}
                    1 => factors.push(self.vars[j].clone()),
                    _ => factors.push(format!("{}^{}", self.vars[j], e)),
                }
            }
            if !l.is_zero() {
                factors.push(format!("exp({})", self.lin_text(l)));
            }
            let (neg, coef) = coef_text(c);
            let body = match (coef, factors.is_empty()) {
                (None, true) => "1".to_string(),
                (None, false) => factors.join("*"),
                (Some(s), true) => s,
                (Some(s), false) => format!("{s}*{}", factors.join("*")),
            };
            if i == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            out.push_str(&body);
        }
        out
    }

    fn lin_text(&self, l: &LinForm) -> String {
        let mut out = String::new();
        let mut first = true;
        for (j, d) in l.0.iter().enumerate() {
            if d.is_empty() {
                continue;
            }
            let s = ParamSeries::from_terms(&self.param.with_window(u32::MAX / 4, u32::MAX / 4), d.clone());
            let (neg, coef) = coef_text(&s);
            let body = match coef {
                None => self.vars[j].clone(),
                Some(c) => format!("{c}*{}", self.vars[j]),
            };
            if first {
                if neg {
                    out.push('-');
                }
                first = false;
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            out.push_str(&body);
        }
        out
    }
}

/// (leading sign, coefficient text without the sign or `None` for ±1).
fn coef_text(c: &ParamSeries) -> (bool, Option<String>) {
    let terms = c.terms();
    if terms.len() == 1 {
        let (d, v) = &terms[0];
        let neg = v.is_negative();
        let pos = ParamSeries::monomial(c.param(), v.abs(), *d);
        let s = pos.canonical();
        return (neg, if s == "1" { None } else { Some(s) });
    }
    (false, Some(format!("({})", c.canonical())))
}

impl fmt::Display for ExpPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Converts an AST over coordinates into a canonical exp-polynomial.
pub fn to_exppoly(ast: &Expr, param: &Param, coords: Arc<Vec<String>>) -> Result<ExpPoly> {
    let n = coords.len();
    let sym_deg = param.symbol_degree();
    let go = |e: &Expr| to_exppoly(e, param, coords.clone());
    let r = match ast {
        Expr::Num(c) => ExpPoly::constant(param, coords.clone(), ParamSeries::constant(param, c.clone())),
        Expr::Param => ExpPoly::constant(param, coords.clone(), ParamSeries::monomial(param, Q::one(), sym_deg)),
        Expr::Sym(i) => {
            if *i >= n {
                return Err(Error::NotCommutative(format!("symbol #{i} is not a coordinate")));
            }
            ExpPoly::coordinate(param, coords.clone(), *i)
        }
        Expr::Add(a, b) => go(a)?.add(&go(b)?),
        Expr::Sub(a, b) => go(a)?.sub(&go(b)?),
        Expr::Mul(a, b) => go(a)?.mul(&go(b)?),
        Expr::Neg(a) => go(a)?.neg(),
        Expr::Div(a, b) => {
            let (c, k) = b.as_param_monomial().ok_or_else(|| Error::Parse {
                pos: 0,
                msg: "invalid divisor".into(),
            })?;
            go(a)?.scale(&ParamSeries::monomial(param, c.recip(), -k * sym_deg))
        }
        Expr::Pow(a, k) => {
            if *k >= 0 {
                go(a)?.pow(*k as u32)
            } else {
                let (c, p) = a.as_param_monomial().ok_or_else(|| Error::Parse {
                    pos: 0,
                    msg: "negative power".into(),
                })?;
                let cp = num_traits::pow(c.recip(), (-k) as usize);
                ExpPoly::constant(param, coords.clone(), ParamSeries::monomial(param, cp, p * k * sym_deg))
            }
        }
        Expr::Exp(a) => {
            let lin = a.as_linear(n).ok_or(Error::NonlinearExp { pos: 0 })?;
            let lin = LinForm(
                lin.into_iter()
                    .map(|p| pp_norm(p.into_iter().map(|(k, c)| (k * sym_deg, c)).collect()))
                    .collect(),
            );
            ExpPoly::exp_of(param, coords.clone(), lin)
        }
    };
    if let Some(d) = r.lowest_param_degree() {
        if d < -(param.bottom() as i32) {
            return Err(Error::Underflow {
                degree: d,
                bottom: param.bottom(),
            });
        }
    }
    Ok(r)
}

/// Parses text directly into an exp-polynomial over the given coordinates.
pub fn parse_exppoly(text: &str, param: &Param, coords: &[&str]) -> Result<ExpPoly> {
    let vars: Arc<Vec<String>> = Arc::new(coords.iter().map(|s| s.to_string()).collect());
    let ctx = SymbolTable::new(param.name(), coords);
    to_exppoly(&parse(text, &ctx)?, param, vars)
}

/// Exact partial derivative `∂f/∂xⱼ`.
pub fn ep_derive(f: &ExpPoly, j: usize) -> ExpPoly {
    let mut r = f.like();
    let n = f.nvars();
    for ((m, l), c) in &f.terms {
        let e = m.entries()[j];
        if e > 0 {
            let mut mm = m.entries().to_vec();
            mm[j] -= 1;
            r.push(
                MultiIndex::new(mm),
                l.clone(),
                c.scale(&Q::from_integer(BigInt::from(e))),
            );
        }
        if !l.0[j].is_empty() {
            let d = l.coeff(j, &f.param);
            r.push(m.clone(), l.clone(), c.mul_ref(&d));
        }
    }
    debug_assert_eq!(r.nvars(), n);
    r
}

/// `exp(f)` when `f` is a linear form with a parameter-only coefficient per coordinate.
pub(crate) fn ep_exp(f: &ExpPoly) -> Option<ExpPoly> {
    let n = f.nvars();
    let mut lin = LinForm::zero(n);
    for ((m, l), c) in &f.terms {
        if !l.is_zero() || c.is_truncated() {
            return None;
        }
        match m.degree() {
            1 => {
                let j = m.entries().iter().position(|e| *e == 1)?;
                lin.0[j] = pp_add(&lin.0[j], &c.terms().to_vec());
            }
            _ => return None,
        }
    }
    Some(ExpPoly::exp_of(&f.param, f.vars.clone(), lin))
}

/// `ln(f)` when `f` is a single pure exponential `exp(ℓ)`.
pub(crate) fn ep_ln(f: &ExpPoly) -> Option<ExpPoly> {
    if f.terms.len() != 1 {
        return None;
    }
    let ((m, l), c) = f.terms.iter().next()?;
    if m.degree() != 0 || c.as_constant() != Some(Q::one()) {
        return None;
    }
    let mut r = f.like();
    for (j, d) in l.0.iter().enumerate() {
        if !d.is_empty() {
            r.push(
                MultiIndex::unit(f.nvars(), j),
                LinForm::zero(f.nvars()),
                l.coeff(j, &f.param),
            );
        }
    }
    Some(r)
}

/// `1/f` when `f` is a single term `c·exp(ℓ)` with a monomial coefficient.
pub(crate) fn ep_inv(f: &ExpPoly) -> Option<ExpPoly> {
    if f.terms.len() != 1 {
        return None;
    }
    let ((m, l), c) = f.terms.iter().next()?;
    if m.degree() != 0 || c.terms().len() != 1 || c.is_truncated() {
        return None;
    }
    let (d, v) = &c.terms()[0];
    let mut r = f.like();
    r.push(
        m.clone(),
        l.scale(&-Q::one()),
        ParamSeries::monomial(&f.param, v.recip(), -d),
    );
    Some(r)
}

pub fn ep_eval(f: &ExpPoly, x: &[f64], value: f64) -> Result<f64> {
    f.eval(x, value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paramseries::q;

    fn zp() -> Param {
        Param::z(2, 8)
    }
    fn kp() -> Param {
        Param::new("k", true, 2, 8)
    }

    #[test]
    fn parse_examples() {
        let ctx = SymbolTable::new("z", &["K", "Pm", "Pp"]);
        let e = parse("(-1/z)*(exp(-2*z*Pp)-1)", &ctx).unwrap();
        assert_eq!(e.count_nodes(&|n| matches!(n, Expr::Div(..))), 1);
        assert_eq!(e.count_nodes(&|n| matches!(n, Expr::Exp(..))), 1);
        let ctxk = SymbolTable::new("k", &["K", "P", "H"]);
        assert!(parse("P^2/(2*k)", &ctxk).is_ok());
        assert!(matches!(parse("exp(P*P)", &ctxk), Err(Error::NonlinearExp { .. })));
    }

    #[test]
    fn parse_errors_carry_positions() {
        let ctx = SymbolTable::new("z", &["P"]);
        assert_eq!(
            parse("P + Q", &ctx),
            Err(Error::UnknownSymbol {
                pos: 4,
                name: "Q".into()
            })
        );
        assert!(matches!(parse("P / P", &ctx), Err(Error::Parse { pos: 4, .. })));
        assert!(matches!(parse("(P + 1", &ctx), Err(Error::Parse { pos: 6, .. })));
        assert!(matches!(parse("P $", &ctx), Err(Error::Parse { pos: 2, .. })));
        assert!(parse("  2 *  P ^ 3 ", &ctx).is_ok());
    }

    #[test]
    fn tensor_parse() {
        let ctx = SymbolTable::new("z", &["v", "t", "x"]);
        let t = parse_tensor("x @ 1 + 1 @ x - t @ v", &ctx).unwrap();
        assert_eq!(t.len(), 3);
        assert!(matches!(t[2].0, Expr::Neg(_)));
    }

    #[test]
    fn to_exppoly_examples() {
        let f = parse_exppoly("-(1/(4*z))*(1-exp(-4*z*P))", &zp(), &["P"]).unwrap();
        assert_eq!(f.len(), 2);
        let p = parse_exppoly("P", &zp(), &["P"]).unwrap();
        assert_eq!(p.len(), 1);
        let e = parse_exppoly("exp(-2*z*Pp)*exp(-2*z*Pp)", &zp(), &["Pm", "Pp"]).unwrap();
        assert_eq!(e.len(), 1);
        let (_, l, _) = e.terms().next().unwrap();
        assert_eq!(l.0[1], vec![(1, q(-4, 1))]);
        assert!(matches!(
            parse_exppoly("K*P", &zp(), &["P"]),
            Err(Error::UnknownSymbol { .. })
        ));
    }

    #[test]
    fn derive_examples() {
        let f = parse_exppoly("exp(-4*z*P)", &zp(), &["P"]).unwrap();
        assert_eq!(
            ep_derive(&f, 0),
            parse_exppoly("-4*z*exp(-4*z*P)", &zp(), &["P"]).unwrap()
        );
        let g = parse_exppoly("P^2/(2*k)", &kp(), &["P", "H"]).unwrap();
        assert_eq!(ep_derive(&g, 0), parse_exppoly("P/k", &kp(), &["P", "H"]).unwrap());
        let h = parse_exppoly("P*exp(H/(2*k))", &kp(), &["P", "H"]).unwrap();
        assert_eq!(
            ep_derive(&h, 1),
            parse_exppoly("P/(2*k)*exp(H/(2*k))", &kp(), &["P", "H"]).unwrap()
        );
    }

    #[test]
    fn eval_examples() {
        let g = parse_exppoly("P^2/(2*k)", &kp(), &["P", "H"]).unwrap();
        assert!((ep_eval(&g, &[1.0, 0.0], 1.0).unwrap() - 0.5).abs() < 1e-15);
        let f = parse_exppoly("2*Pm", &zp(), &["Pm", "Pp"]).unwrap();
        assert_eq!(ep_eval(&f, &[3.0, 7.0], 0.3).unwrap(), 6.0);
        let e = parse_exppoly("exp(-4*z*P)", &zp(), &["P"]).unwrap();
        assert_eq!(ep_eval(&e, &[0.0], 0.3).unwrap(), 1.0);
        assert!(matches!(ep_eval(&e, &[0.0, 1.0], 0.3), Err(Error::Dimension { .. })));
    }

    #[test]
    fn exact_eval() {
        let f = parse_exppoly("P/(1 + 0)*exp(z*H) + 1/2", &zp(), &["P", "H"]).unwrap();
        assert_eq!(f.eval_exact(&[q(3, 1), q(0, 1)], &q(3, 10)), Some(q(7, 2)));
        assert_eq!(f.eval_exact(&[q(3, 1), q(1, 1)], &q(3, 10)), None);
    }

    #[test]
    fn roundtrip_catalog_strings() {
        let cases: &[(&str, &[&str], Param)] = &[
            ("(1/z)*(exp(-2*z*Pp)-1)", &["Pm", "Pp"], zp()),
            ("2*Pm", &["Pm", "Pp"], zp()),
            ("-(1-exp(-4*z*P))/(4*z)", &["H", "P"], zp()),
            ("P^2/(2*k)", &["P", "H"], kp()),
            ("-P", &["P", "H"], kp()),
            ("P*exp(H/(2*k))", &["P", "H"], kp()),
            ("Pm*(exp(2*z*Pp)-1)", &["Pm", "Pp"], zp()),
            ("2*z*(exp(-phi)-1)", &["phi"], zp()),
        ];
        for (text, vars, p) in cases {
            let f = parse_exppoly(text, p, vars).unwrap();
            let printed = f.to_text();
            let g = parse_exppoly(&printed, p, vars).unwrap();
            assert_eq!(f, g, "{text} -> {printed}");
            assert_eq!(g.to_text(), printed);
        }
    }

    use proptest::prelude::*;

    fn arb_ep() -> impl Strategy<Value = ExpPoly> {
        let term = (0u32..3, 0u32..3, -2i64..=2, -2i64..=2, -3i64..=3, 0i32..2);
        proptest::collection::vec(term, 1..4).prop_map(|ts| {
            let p = Param::z(2, 8);
            let vars = Arc::new(vec!["x".to_string(), "y".to_string()]);
            let mut f = ExpPoly::zero(&p, vars);
            for (a, b, dx, dy, c, k) in ts {
                let l = LinForm(vec![
                    if dx == 0 { vec![] } else { vec![(1, q(dx, 1))] },
                    if dy == 0 { vec![] } else { vec![(0, q(dy, 2))] },
                ]);
                f.push(MultiIndex::new(vec![a, b]), l, ParamSeries::monomial(&p, q(c, 1), k));
            }
            f
        })
    }

    proptest! {
        #[test]
        fn leibniz_and_linearity(f in arb_ep(), g in arb_ep()) {
            for j in 0..2 {
                prop_assert_eq!(ep_derive(&f.add(&g), j), ep_derive(&f, j).add(&ep_derive(&g, j)));
                prop_assert_eq!(
                    ep_derive(&f.mul(&g), j),
                    ep_derive(&f, j).mul(&g).add(&f.mul(&ep_derive(&g, j)))
                );
            }
        }

        #[test]
        fn eval_is_multiplicative(f in arb_ep(), g in arb_ep(), x in -1.0f64..1.0, y in -1.0f64..1.0) {
            let pt = [x, y];
            let lhs = f.mul(&g).eval(&pt, 0.3).unwrap();
            let rhs = f.eval(&pt, 0.3).unwrap() * g.eval(&pt, 0.3).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
        }

        #[test]
        fn print_parse_roundtrip(f in arb_ep()) {
            let back = parse_exppoly(&f.to_text(), f.param(), &["x", "y"]).unwrap();
            prop_assert_eq!(back, f);
        }
    }
}
