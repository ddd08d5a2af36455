//! Truncated Laurent polynomials in one deformation parameter with exact
//! rational coefficients.
//!
//! The formal variable is either the parameter itself (`z`) or its inverse
//! (`1/κ`, for algebras whose relations only ever divide by κ). Degrees above
//! the top `Z` are dropped and flagged; degrees below `-B` are an error at the
//! public API.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn q_to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Exact rational from a decimal literal such as `-0.25` or `3/4`.
pub fn q_from_str(s: &str) -> Option<Q> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let a = q_from_str(a)?;
        let b = q_from_str(b)?;
        if b.is_zero() {
            return None;
        }
        return Some(a / b);
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int}{frac}");
    let num: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().ok()?
    };
    let den = num_traits::pow(BigInt::from(10), frac.len());
    let v = Q::new(num, den);
    Some(if neg { -v } else { v })
}

#[derive(Debug, PartialEq, Eq, Hash)]
pub struct ParamInfo {
    pub name: String,
    /// The formal variable is `1/name` rather than `name`.
    pub inverse: bool,
    pub bottom: u32,
    pub top: u32,
}

/// Shared descriptor of the deformation parameter and its degree window.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Param(Arc<ParamInfo>);

impl Param {
    pub fn new(name: &str, inverse: bool, bottom: u32, top: u32) -> Self {
        Param(Arc::new(ParamInfo {
            name: name.to_string(),
            inverse,
            bottom,
            top,
        }))
    }

    pub fn z(bottom: u32, top: u32) -> Self {
        Param::new("z", false, bottom, top)
    }

    pub fn name(&self) -> &str {
        &self.0.name
    }
    pub fn inverse(&self) -> bool {
        self.0.inverse
    }
    pub fn bottom(&self) -> u32 {
        self.0.bottom
    }
    pub fn top(&self) -> u32 {
        self.0.top
    }

    /// Same parameter with a different window.
    pub fn with_window(&self, bottom: u32, top: u32) -> Param {
        Param::new(self.name(), self.inverse(), bottom, top)
    }

    pub fn same_symbol(&self, other: &Param) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || (self.name() == other.name() && self.inverse() == other.inverse())
    }

    /// Formal degree carried by one occurrence of the parameter symbol.
    pub fn symbol_degree(&self) -> i32 {
        if self.inverse() {
            -1
        } else {
            1
        }
    }

    /// Numeric value of the formal variable for a numeric parameter value.
    pub fn formal_value(&self, value: f64) -> f64 {
        if self.inverse() {
            1.0 / value
        } else {
            value
        }
    }

    pub fn formal_value_exact(&self, value: &Q) -> Option<Q> {
        if self.inverse() {
            if value.is_zero() {
                None
            } else {
                Some(value.recip())
            }
        } else {
            Some(value.clone())
        }
    }

    fn check(&self, other: &Param) -> Result<()> {
        if Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0 {
            Ok(())
        } else {
            Err(Error::ParamMismatch {
                left: format!("{}[{},{}]", self.name(), self.bottom(), self.top()),
                right: format!("{}[{},{}]", other.name(), other.bottom(), other.top()),
            })
        }
    }
}

/// Sparse truncated Laurent polynomial. Terms are sorted by degree with no zeros.
#[derive(Clone)]
pub struct ParamSeries {
    param: Param,
    terms: Vec<(i32, Q)>,
    truncated: bool,
}

impl PartialEq for ParamSeries {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms
    }
}
impl Eq for ParamSeries {}

impl fmt::Debug for ParamSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl ParamSeries {
    pub fn zero(param: &Param) -> Self {
        ParamSeries {
            param: param.clone(),
            terms: Vec::new(),
            truncated: false,
        }
    }

    pub fn one(param: &Param) -> Self {
        Self::constant(param, Q::one())
    }

    pub fn constant(param: &Param, c: Q) -> Self {
        Self::from_terms(param, vec![(0, c)])
    }

    /// `c · var^d` in the formal variable; dropped (and flagged) if `d > Z`.
    pub fn monomial(param: &Param, c: Q, d: i32) -> Self {
        Self::from_terms(param, vec![(d, c)])
    }

    /// Builds a series from arbitrary (degree, coefficient) pairs, merging
    /// duplicates and truncating above the top.
    pub fn from_terms(param: &Param, raw: Vec<(i32, Q)>) -> Self {
        let mut terms = raw;
        terms.sort_by_key(|t| t.0);
        let mut out: Vec<(i32, Q)> = Vec::with_capacity(terms.len());
        let mut truncated = false;
        let top = param.top() as i32;
        for (d, c) in terms {
            if d > top {
                if !c.is_zero() {
                    truncated = true;
                }
                continue;
            }
            match out.last_mut() {
                Some(last) if last.0 == d => last.1 += c,
                _ => out.push((d, c)),
            }
        }
        out.retain(|t| !t.1.is_zero());
        ParamSeries {
            param: param.clone(),
            terms: out,
            truncated,
        }
    }

    pub fn param(&self) -> &Param {
        &self.param
    }

    pub fn terms(&self) -> &[(i32, Q)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    pub fn set_truncated(&mut self, t: bool) {
        self.truncated = t;
    }

    pub fn coeff(&self, d: i32) -> Q {
        self.terms
            .iter()
            .find(|t| t.0 == d)
            .map(|t| t.1.clone())
            .unwrap_or_else(Q::zero)
    }

    pub fn lowest_degree(&self) -> Option<i32> {
        self.terms.first().map(|t| t.0)
    }

    pub fn highest_degree(&self) -> Option<i32> {
        self.terms.last().map(|t| t.0)
    }

    /// The constant term if this series has no other terms.
    pub fn as_constant(&self) -> Option<Q> {
        match self.terms.as_slice() {
            [] => Some(Q::zero()),
            [(0, c)] => Some(c.clone()),
            _ => None,
        }
    }

    /// Degrees below the window bottom are an error.
    pub fn check_window(&self) -> Result<()> {
        match self.lowest_degree() {
            Some(d) if d < -(self.param.bottom() as i32) => Err(Error::Underflow {
                degree: d,
                bottom: self.param.bottom(),
            }),
            _ => Ok(()),
        }
    }

    /// Same coefficients re-expressed in another window of the same symbol.
    pub fn rewindow(&self, param: &Param) -> Self {
        let mut s = Self::from_terms(param, self.terms.clone());
        s.truncated |= self.truncated;
        s
    }

    /// Drops every degree above `top` (flagging if anything was dropped).
    pub fn truncate_above(&self, top: i32) -> Self {
        let mut s = self.clone();
        let before = s.terms.len();
        s.terms.retain(|t| t.0 <= top);
        if s.terms.len() != before {
            s.truncated = true;
        }
        s
    }

    pub fn scale(&self, c: &Q) -> Self {
        if c.is_zero() {
            return Self::zero(&self.param);
        }
        ParamSeries {
            param: self.param.clone(),
            terms: self.terms.iter().map(|(d, x)| (*d, x * c)).collect(),
            truncated: self.truncated,
        }
    }

    /// Multiplies by `var^k` (shifting degrees).
    pub fn shift(&self, k: i32) -> Self {
        let mut s = Self::from_terms(
            &self.param,
            self.terms.iter().map(|(d, c)| (d + k, c.clone())).collect(),
        );
        s.truncated |= self.truncated;
        s
    }

    pub fn add_ref(&self, other: &Self) -> Self {
        let mut out = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() || j < other.terms.len() {
            let ord = match (self.terms.get(i), other.terms.get(j)) {
                (Some(a), Some(b)) => a.0.cmp(&b.0),
                (Some(_), None) => Ordering::Less,
                _ => Ordering::Greater,
            };
            match ord {
                Ordering::Less => {
                    out.push(self.terms[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(other.terms[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    let c = &self.terms[i].1 + &other.terms[j].1;
                    if !c.is_zero() {
                        out.push((self.terms[i].0, c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        ParamSeries {
            param: self.param.clone(),
            terms: out,
            truncated: self.truncated || other.truncated,
        }
    }

    pub fn add_assign_ref(&mut self, other: &Self) {
        if other.terms.is_empty() {
            self.truncated |= other.truncated;
            return;
        }
        *self = self.add_ref(other);
    }

    pub fn neg_ref(&self) -> Self {
        ParamSeries {
            param: self.param.clone(),
            terms: self.terms.iter().map(|(d, c)| (*d, -c)).collect(),
            truncated: self.truncated,
        }
    }

    pub fn sub_ref(&self, other: &Self) -> Self {
        self.add_ref(&other.neg_ref())
    }

    pub fn mul_ref(&self, other: &Self) -> Self {
        let top = self.param.top() as i32;
        let mut raw = Vec::with_capacity(self.terms.len() * other.terms.len());
        let mut truncated = self.truncated || other.truncated;
        for (da, ca) in &self.terms {
            for (db, cb) in &other.terms {
                let d = da + db;
                if d > top {
                    truncated = true;
                    continue;
                }
                raw.push((d, ca * cb));
            }
        }
        let mut s = Self::from_terms(&self.param, raw);
        s.truncated |= truncated;
        s
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::one(&self.param);
        for _ in 0..n {
            acc = acc.mul_ref(self);
        }
        acc
    }

    /// Numeric value at a (nonzero where needed) parameter value; negative
    /// formal powers are allowed here as long as the formal variable is nonzero.
    pub fn eval_laurent(&self, value: f64) -> Result<f64> {
        let x = self.param.formal_value(value);
        if x == 0.0 {
            if let Some(d) = self.lowest_degree().filter(|d| *d < 0) {
                return Err(Error::NegativePowers(d));
            }
        }
        Ok(self.terms.iter().map(|(d, c)| q_to_f64(c) * x.powi(*d)).sum())
    }

    /// Exact value at a rational parameter value, if defined.
    pub fn eval_exact(&self, value: &Q) -> Option<Q> {
        let x = self.param.formal_value_exact(value)?;
        let mut acc = Q::zero();
        for (d, c) in &self.terms {
            if *d < 0 && x.is_zero() {
                return None;
            }
            let p = if *d >= 0 {
                num_traits::pow(x.clone(), *d as usize)
            } else {
                num_traits::pow(x.recip(), (-d) as usize)
            };
            acc += c * p;
        }
        Some(acc)
    }

    /// Canonical text: `p/q·var^d` terms in ascending degree.
    pub fn canonical(&self) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut s = String::new();
        for (i, (d, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if i == 0 {
                if neg {
                    s.push('-');
                }
            } else {
                s.push_str(if neg { " - " } else { " + " });
            }
            let var = self.var_power(*d);
            match var {
                None => s.push_str(&fmt_q(&a)),
                Some(v) if a.is_one() => s.push_str(&v),
                Some(v) => {
                    s.push_str(&fmt_q(&a));
                    s.push('*');
                    s.push_str(&v);
                }
            }
        }
        s
    }

    /// Text of `var^d` in terms of the user-facing parameter symbol.
    fn var_power(&self, d: i32) -> Option<String> {
        if d == 0 {
            return None;
        }
        let e = if self.param.inverse() { -d } else { d };
        let name = self.param.name();
        Some(if e == 1 {
            name.to_string()
        } else {
            format!("{name}^{e}")
        })
    }
}

impl fmt::Display for ParamSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

pub fn fmt_q(c: &Q) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

pub fn ps_add(a: &ParamSeries, b: &ParamSeries) -> Result<ParamSeries> {
    a.param.check(&b.param)?;
    let s = a.add_ref(b);
    s.check_window()?;
    Ok(s)
}

pub fn ps_mul(a: &ParamSeries, b: &ParamSeries) -> Result<ParamSeries> {
    a.param.check(&b.param)?;
    a.check_window()?;
    b.check_window()?;
    let s = a.mul_ref(b);
    s.check_window()?;
    Ok(s)
}

pub fn ps_neg(a: &ParamSeries) -> ParamSeries {
    a.neg_ref()
}

/// The degree-`n` Taylor coefficient `cⁿ/n!` of `exp(c·x)`.
pub fn ps_exp_series(c: &ParamSeries, n: u32) -> ParamSeries {
    let mut fact = BigInt::one();
    for k in 2..=n {
        fact *= BigInt::from(k);
    }
    c.pow(n).scale(&Q::new(BigInt::one(), fact))
}

/// Horner evaluation; the series must not contain negative powers.
pub fn ps_eval(a: &ParamSeries, value: f64) -> Result<f64> {
    if let Some(d) = a.lowest_degree().filter(|d| *d < 0) {
        return Err(Error::NegativePowers(d));
    }
    let x = a.param.formal_value(value);
    let top = a.highest_degree().unwrap_or(0);
    let mut acc = 0.0;
    for d in (0..=top).rev() {
        acc = acc * x + q_to_f64(&a.coeff(d));
    }
    Ok(acc)
}
