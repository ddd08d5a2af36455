//! Scalar types that closed-form formulas can be evaluated over: plain floats,
//! exact exp-polynomials, and truncated Taylor jets in one variable over either.
//!
//! Writing a formula once, generically over [`Real`], lets the same text serve
//! as a numeric oracle (`f64`) and as an exact series oracle (`Jet<ExpPoly>`).

use crate::expr::{ep_exp, ep_inv, ep_ln, ExpPoly};
use crate::paramseries::{q_to_f64, qi, ParamSeries, Q};

/// Partial field operations. The transcendental ones return `None` outside
/// their domain, or when the representation cannot express the result.
pub trait Real: Clone {
    /// A rational constant in the same context as `self`.
    fn cst(&self, c: Q) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn inv(&self) -> Option<Self>;
    fn exp(&self) -> Option<Self>;
    fn ln(&self) -> Option<Self>;

    fn div(&self, o: &Self) -> Option<Self> {
        Some(self.mul(&o.inv()?))
    }
    fn int(&self, n: i64) -> Self {
        self.cst(qi(n))
    }
    fn scale(&self, c: Q) -> Self {
        self.mul(&self.cst(c))
    }
}

impl Real for f64 {
    fn cst(&self, c: Q) -> Self {
        q_to_f64(&c)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn inv(&self) -> Option<Self> {
        (*self != 0.0).then(|| 1.0 / self)
    }
    fn exp(&self) -> Option<Self> {
        let e = f64::exp(*self);
        e.is_finite().then_some(e)
    }
    fn ln(&self) -> Option<Self> {
        (*self > 0.0).then(|| f64::ln(*self))
    }
}

impl Real for ExpPoly {
    fn cst(&self, c: Q) -> Self {
        ExpPoly::constant(
            self.param(),
            self.vars().clone(),
            ParamSeries::constant(self.param(), c),
        )
    }
    fn add(&self, o: &Self) -> Self {
        ExpPoly::add(self, o)
    }
    fn sub(&self, o: &Self) -> Self {
        ExpPoly::sub(self, o)
    }
    fn mul(&self, o: &Self) -> Self {
        ExpPoly::mul(self, o)
    }
    fn neg(&self) -> Self {
        ExpPoly::neg(self)
    }
    fn inv(&self) -> Option<Self> {
        ep_inv(self)
    }
    fn exp(&self) -> Option<Self> {
        ep_exp(self)
    }
    fn ln(&self) -> Option<Self> {
        ep_ln(self)
    }
}

/// Truncated power series `Σ_{k≤n} c_k t^k` in one variable `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet<T> {
    pub c: Vec<T>,
}

impl<T: Real> Jet<T> {
    /// The constant `a`, carried to order `n`.
    pub fn constant(a: T, n: usize) -> Self {
        let zero = a.int(0);
        let mut c = vec![zero; n + 1];
        c[0] = a;
        Jet { c }
    }

    /// The variable `t + a`.
    pub fn var(a: T, n: usize) -> Self {
        let mut j = Self::constant(a, n);
        if n >= 1 {
            j.c[1] = j.c[0].int(1);
        }
        j
    }

    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    fn zero_like(&self) -> T {
        self.c[0].int(0)
    }

    fn map(&self, f: impl Fn(&T) -> T) -> Self {
        Jet {
            c: self.c.iter().map(f).collect(),
        }
    }
}

impl<T: Real> Real for Jet<T> {
    fn cst(&self, c: Q) -> Self {
        Jet::constant(self.c[0].cst(c), self.order())
    }
    fn add(&self, o: &Self) -> Self {
        Jet {
            c: self.c.iter().zip(&o.c).map(|(a, b)| a.add(b)).collect(),
        }
    }
    fn sub(&self, o: &Self) -> Self {
        Jet {
            c: self.c.iter().zip(&o.c).map(|(a, b)| a.sub(b)).collect(),
        }
    }
    fn mul(&self, o: &Self) -> Self {
        let n = self.order().min(o.order());
        let c = (0..=n)
            .map(|k| (0..=k).fold(self.zero_like(), |acc, i| acc.add(&self.c[i].mul(&o.c[k - i]))))
            .collect();
        Jet { c }
    }
    fn neg(&self) -> Self {
        self.map(|a| a.neg())
    }

    // b₀ = 1/a₀, b_k = −b₀ Σ_{i≥1} a_i b_{k−i}
    fn inv(&self) -> Option<Self> {
        let b0 = self.c[0].inv()?;
        let mut b = vec![b0.clone()];
        for k in 1..=self.order() {
            let s = (1..=k).fold(self.zero_like(), |acc, i| acc.add(&self.c[i].mul(&b[k - i])));
            b.push(b0.mul(&s).neg());
        }
        Some(Jet { c: b })
    }

    // e_k = (1/k) Σ_{i≥1} i a_i e_{k−i}
    fn exp(&self) -> Option<Self> {
        let mut e = vec![self.c[0].exp()?];
        for k in 1..=self.order() {
            let s = (1..=k).fold(self.zero_like(), |acc, i| {
                acc.add(&self.c[i].mul(&e[k - i]).scale(qi(i as i64)))
            });
            e.push(s.scale(Q::new(1.into(), (k as i64).into())));
        }
        Some(Jet { c: e })
    }

    // l_k = (a_k − (1/k) Σ_{1≤i<k} i l_i a_{k−i}) / a₀
    fn ln(&self) -> Option<Self> {
        let inv0 = self.c[0].inv()?;
        let mut l = vec![self.c[0].ln()?];
        for k in 1..=self.order() {
            let s = (1..k).fold(self.zero_like(), |acc, i| {
                acc.add(&l[i].mul(&self.c[k - i]).scale(qi(i as i64)))
            });
            let t = self.c[k].sub(&s.scale(Q::new(1.into(), (k as i64).into())));
            l.push(t.mul(&inv0));
        }
        Some(Jet { c: l })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_exppoly;
    use crate::paramseries::{q, Param};

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn jet_exp_ln_roundtrip_f64() {
        let x = Jet::var(0.3f64, 6);
        let y = x.exp().unwrap().ln().unwrap();
        assert!(close(&y.c, &x.c));
        // 1/(1−t) = Σ t^k
        let g = Jet::constant(1.0f64, 5).sub(&Jet::var(0.0, 5)).inv().unwrap();
        assert!(close(&g.c, &[1.0; 6]));
    }

    #[test]
    fn jet_exp_coefficients_are_inverse_factorials() {
        let e = Jet::var(0.0f64, 5).exp().unwrap();
        assert!(close(&e.c, &[1.0, 1.0, 0.5, 1.0 / 6.0, 1.0 / 24.0, 1.0 / 120.0]));
    }

    #[test]
    fn exppoly_partial_ops() {
        let p = Param::z(2, 6);
        let f = parse_exppoly("2*z*a", &p, &["a", "b"]).unwrap();
        let e = f.exp().unwrap();
        assert_eq!(e.to_text(), "exp(2*z*a)");
        assert_eq!(e.ln().unwrap(), f);
        assert_eq!(e.inv().unwrap().to_text(), "exp(-2*z*a)");
        let half = e.cst(q(1, 2)).mul(&parse_exppoly("1/z", &p, &["a", "b"]).unwrap());
        assert_eq!(half.inv().unwrap().to_text(), "2*z");
        assert!(parse_exppoly("a*b", &p, &["a", "b"]).unwrap().exp().is_none());
        assert!(parse_exppoly("1 + a", &p, &["a", "b"]).unwrap().ln().is_none());
    }

    #[test]
    fn jet_over_exppoly_ln_of_shifted_exponential() {
        // ln(1 − t(1 − eᵃ)) = t(eᵃ − 1) − t²(eᵃ − 1)²/2 + …
        let p = Param::z(2, 6);
        let vars = ["a"];
        let ea = parse_exppoly("exp(a)", &p, &vars).unwrap();
        let one = ea.cst(qi(1));
        let t = Jet::var(one.cst(qi(0)), 2);
        let arg = Jet::constant(one.clone(), 2).sub(&t.mul(&Jet::constant(one.sub(&ea), 2)));
        // argument at t=0 is 1, so ln starts at 0
        let l = arg.ln().unwrap();
        assert!(l.c[0].is_zero());
        assert_eq!(l.c[1], ea.sub(&one));
        let sq = ea.sub(&one).mul(&ea.sub(&one));
        assert_eq!(l.c[2], sq.scale_q(&q(-1, 2)));
    }
}
