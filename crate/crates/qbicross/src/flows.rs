//! Vector fields on the L-coordinates induced by the K-action, their flows as
//! exact truncated series and as RK4 trajectories, first integrals and the
//! fixed-point test used for strata.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use serde::Serialize;

use crate::bicross::BicrossData;
use crate::error::{Error, Result};
use crate::expr::{ep_derive, ep_exp, to_exppoly, ExpPoly};
use crate::multiindex::{mfactorial, MultiIndex};
use crate::ncalg::Sector;
use crate::paramseries::{Param, ParamSeries, Q};
use crate::real::{Jet, Real};

/// `X = Σ Xⱼ ∂/∂xⱼ` with exp-polynomial components.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    components: Vec<ExpPoly>,
}

impl VectorField {
    pub fn new(components: Vec<ExpPoly>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::Precondition("a vector field needs at least one coordinate".into()))?;
        if first.nvars() != components.len() {
            return Err(Error::Dimension {
                expected: first.nvars(),
                got: components.len(),
            });
        }
        if components.iter().any(|c| c.vars() != first.vars()) {
            return Err(Error::Precondition("components use different coordinates".into()));
        }
        Ok(VectorField { components })
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }
    pub fn components(&self) -> &[ExpPoly] {
        &self.components
    }
    pub fn coords(&self) -> &Arc<Vec<String>> {
        self.components[0].vars()
    }
    pub fn param(&self) -> &Param {
        self.components[0].param()
    }

    /// `X f = Σ Xⱼ ∂ⱼf`.
    pub fn apply(&self, f: &ExpPoly) -> ExpPoly {
        let mut acc = ExpPoly::zero(self.param(), self.coords().clone());
        for (j, xj) in self.components.iter().enumerate() {
            let d = ep_derive(f, j);
            if !d.is_zero() && !xj.is_zero() {
                acc = acc.add(&xj.mul(&d));
            }
        }
        acc
    }

    pub fn eval(&self, x: &[f64], value: f64) -> Result<Vec<f64>> {
        self.components.iter().map(|c| c.eval(x, value)).collect()
    }

    pub fn coordinate(&self, j: usize) -> ExpPoly {
        ExpPoly::coordinate(self.param(), self.coords().clone(), j)
    }
}

/// Component `j` is the action value `l_j ⊲ k_i` read as a function of the L-coordinates.
pub fn field_from_action(data: &BicrossData, i: usize, param: &Param) -> Result<VectorField> {
    if data.gens.get(i).map(|g| g.1) != Some(Sector::K) {
        return Err(Error::Precondition(format!("generator #{i} is not in the K sector")));
    }
    let ls = data.gens_in(Sector::L);
    let coords: Arc<Vec<String>> = Arc::new(ls.iter().map(|&l| data.gens[l].0.clone()).collect());
    let remap = |s: usize| ls.iter().position(|&l| l == s);
    let mut comps = Vec::with_capacity(ls.len());
    for &l in &ls {
        let c = match data.action.get(&(l, i)) {
            None => ExpPoly::zero(param, coords.clone()),
            Some(ast) => {
                let mapped = ast.map_syms(&remap).ok_or_else(|| {
                    Error::NotCommutative(format!(
                        "{} <| {} involves K generators",
                        data.gens[l].0, data.gens[i].0
                    ))
                })?;
                to_exppoly(&mapped, param, coords.clone())?
            }
        };
        comps.push(c);
    }
    VectorField::new(comps)
}

/// `[f, Xf, X²f/2!, …, Xᴺf/N!]`: the Taylor coefficients of `f∘Φᵗ` in `t`.
pub fn flow_series(x: &VectorField, f: &ExpPoly, order: u32) -> Vec<ExpPoly> {
    let mut out = vec![f.clone()];
    for n in 1..=order {
        let next = x
            .apply(&out[n as usize - 1])
            .scale_q(&Q::new(1.into(), (n as i64).into()));
        out.push(next);
    }
    out
}

/// `X(h)`; zero exactly when `h` is a first integral.
pub fn check_first_integral(x: &VectorField, h: &ExpPoly) -> ExpPoly {
    x.apply(h)
}

// ------------------------------------------------------------------ series in flow times

/// Polynomial in flow times with exp-polynomial coefficients.
pub type TimePoly = BTreeMap<MultiIndex, ExpPoly>;

/// Coordinate functions composed with a flow, as polynomials in `r` flow times
/// with exp-polynomial coefficients, truncated at total time degree `order`.
#[derive(Clone, PartialEq)]
pub struct FlowSeries {
    ntimes: usize,
    order: u32,
    proto: ExpPoly,
    coords: Vec<TimePoly>,
}

impl fmt::Debug for FlowSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FlowSeries")
            .field("ntimes", &self.ntimes)
            .field("order", &self.order)
            .field("coords", &self.coords)
            .finish()
    }
}

impl FlowSeries {
    /// `xⱼ∘Φᵗ` for every coordinate, one flow time.
    pub fn from_field(x: &VectorField, order: u32) -> Self {
        let coords = (0..x.dim())
            .map(|j| {
                flow_series(x, &x.coordinate(j), order)
                    .into_iter()
                    .enumerate()
                    .filter(|(_, c)| !c.is_zero())
                    .map(|(n, c)| (MultiIndex::new(vec![n as u32]), c))
                    .collect()
            })
            .collect();
        FlowSeries {
            ntimes: 1,
            order,
            proto: ExpPoly::zero(x.param(), x.coords().clone()),
            coords,
        }
    }

    /// The identity map written with `ntimes` (unused) flow times.
    pub fn identity(param: &Param, vars: Arc<Vec<String>>, ntimes: usize, order: u32) -> Self {
        let coords = (0..vars.len())
            .map(|j| {
                let mut t = TimePoly::new();
                t.insert(MultiIndex::zero(ntimes), ExpPoly::coordinate(param, vars.clone(), j));
                t
            })
            .collect();
        FlowSeries {
            ntimes,
            order,
            proto: ExpPoly::zero(param, vars),
            coords,
        }
    }

    pub fn ntimes(&self) -> usize {
        self.ntimes
    }
    pub fn order(&self) -> u32 {
        self.order
    }
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Coefficient of `t^m` in coordinate `j`.
    pub fn coeff(&self, j: usize, m: &MultiIndex) -> ExpPoly {
        self.coords[j].get(m).cloned().unwrap_or_else(|| self.proto.clone())
    }

    /// Coordinate `j` as a time polynomial.
    pub fn coord(&self, j: usize) -> &TimePoly {
        &self.coords[j]
    }

    /// Univariate coefficient list of coordinate `j` (one flow time only).
    pub fn coeffs(&self, j: usize) -> Vec<ExpPoly> {
        (0..=self.order)
            .map(|n| self.coeff(j, &MultiIndex::new(vec![n])))
            .collect()
    }

    /// Numeric value of the truncated series.
    pub fn eval(&self, times: &[f64], x: &[f64], value: f64) -> Result<Vec<f64>> {
        if times.len() != self.ntimes {
            return Err(Error::Dimension {
                expected: self.ntimes,
                got: times.len(),
            });
        }
        self.coords
            .iter()
            .map(|tp| {
                let mut acc = 0.0;
                for (m, c) in tp {
                    let tm: f64 = m.entries().iter().zip(times).map(|(e, t)| t.powi(*e as i32)).product();
                    acc += tm * c.eval(x, value)?;
                }
                Ok(acc)
            })
            .collect()
    }

    /// Substitutes the single flow time `s ↦ t₁ + … + t_r`.
    pub fn time_sum(&self, r: usize) -> Result<FlowSeries> {
        if self.ntimes != 1 {
            return Err(Error::Precondition("time_sum needs a one-time series".into()));
        }
        let coords = self
            .coords
            .iter()
            .map(|tp| {
                let mut out = TimePoly::new();
                for (m, c) in tp {
                    let n = m.entries()[0];
                    let nf = mfactorial(&MultiIndex::new(vec![n]));
                    for k in MultiIndex::all_up_to(r, n).into_iter().filter(|k| k.degree() == n) {
                        let w = Q::new(BigInt::from(nf.clone()), BigInt::from(mfactorial(&k)));
                        tp_push(&mut out, k, c.scale_q(&w));
                    }
                }
                out
            })
            .collect();
        Ok(FlowSeries {
            ntimes: r,
            order: self.order,
            proto: self.proto.clone(),
            coords,
        })
    }
}

pub(crate) fn tp_push(tp: &mut TimePoly, m: MultiIndex, c: ExpPoly) {
    if c.is_zero() {
        return;
    }
    match tp.get_mut(&m) {
        Some(x) => {
            *x = x.add(&c);
            if x.is_zero() {
                tp.remove(&m);
            }
        }
        None => {
            tp.insert(m, c);
        }
    }
}

pub(crate) fn tp_mul(a: &TimePoly, b: &TimePoly, order: u32) -> TimePoly {
    let mut out = TimePoly::new();
    for (ma, ca) in a {
        for (mb, cb) in b {
            let m = ma.add(mb);
            if m.degree() <= order {
                tp_push(&mut out, m, ca.mul(cb));
            }
        }
    }
    out
}

pub(crate) fn tp_constant(c: ExpPoly, ntimes: usize) -> TimePoly {
    let mut t = TimePoly::new();
    tp_push(&mut t, MultiIndex::zero(ntimes), c);
    t
}

/// `exp` of a time polynomial whose constant term is an admissible exponent.
pub(crate) fn tp_exp(a: &TimePoly, proto: &ExpPoly, ntimes: usize, order: u32) -> Result<TimePoly> {
    let zero = MultiIndex::zero(ntimes);
    let a0 = a.get(&zero).cloned().unwrap_or_else(|| proto.clone());
    let e0 = ep_exp(&a0).ok_or_else(|| Error::Unsupported(format!("exp of {a0} in a flow substitution")))?;
    let mut nil = a.clone();
    nil.remove(&zero);
    // e^{a} = e^{a₀} Σ nilᵏ/k!, nilpotent beyond the order
    let one = proto.cst(Q::from_integer(1.into()));
    let mut term = tp_constant(one, ntimes);
    let mut sum = term.clone();
    for k in 1..=order {
        term = tp_mul(&term, &nil, order);
        if term.is_empty() {
            break;
        }
        let inv = Q::new(1.into(), (k as i64).into());
        term = term.into_iter().map(|(m, c)| (m, c.scale_q(&inv))).collect();
        for (m, c) in &term {
            tp_push(&mut sum, m.clone(), c.clone());
        }
    }
    Ok(sum.into_iter().map(|(m, c)| (m, c.mul(&e0))).collect())
}

/// `f(y)` where each coordinate `yⱼ` is a time polynomial.
pub(crate) fn substitute(f: &ExpPoly, ys: &[TimePoly], proto: &ExpPoly, ntimes: usize, order: u32) -> Result<TimePoly> {
    let mut out = TimePoly::new();
    for (m, l, c) in f.terms() {
        let cst = proto.add(&ExpPoly::constant(proto.param(), proto.vars().clone(), c.clone()));
        let mut acc = tp_constant(cst, ntimes);
        for (j, &e) in m.entries().iter().enumerate() {
            for _ in 0..e {
                acc = tp_mul(&acc, &ys[j], order);
            }
        }
        if !l.is_zero() {
            let mut arg = TimePoly::new();
            for (j, y) in ys.iter().enumerate() {
                if l.0[j].is_empty() {
                    continue;
                }
                let d = l.coeff(j, proto.param());
                for (tm, tc) in y {
                    tp_push(&mut arg, tm.clone(), tc.scale(&d));
                }
            }
            acc = tp_mul(&acc, &tp_exp(&arg, proto, ntimes, order)?, order);
        }
        for (tm, tc) in acc {
            tp_push(&mut out, tm, tc);
        }
    }
    Ok(out)
}

fn concat(a: &MultiIndex, b: &MultiIndex) -> MultiIndex {
    MultiIndex::new(a.entries().iter().chain(b.entries()).copied().collect())
}

/// `outer ∘ inner`, with the times of `inner` listed first.
fn compose_pair(outer: &FlowSeries, inner: &FlowSeries) -> Result<FlowSeries> {
    let order = outer.order;
    let nt = inner.ntimes + outer.ntimes;
    // inner coordinates lifted into the joint time space
    let lifted: Vec<TimePoly> = inner
        .coords
        .iter()
        .map(|tp| {
            tp.iter()
                .map(|(m, c)| (concat(m, &MultiIndex::zero(outer.ntimes)), c.clone()))
                .collect()
        })
        .collect();
    let mut coords = Vec::with_capacity(outer.dim());
    for tp in &outer.coords {
        let mut out = TimePoly::new();
        for (mo, c) in tp {
            let shift = concat(&MultiIndex::zero(inner.ntimes), mo);
            let sub = substitute(c, &lifted, &outer.proto, nt, order - mo.degree())?;
            for (mi, ci) in sub {
                let m = mi.add(&shift);
                if m.degree() <= order {
                    tp_push(&mut out, m, ci);
                }
            }
        }
        coords.push(out);
    }
    Ok(FlowSeries {
        ntimes: nt,
        order,
        proto: outer.proto.clone(),
        coords,
    })
}

/// `Φ_r ∘ ⋯ ∘ Φ_1` for `series = [Φ_1, …, Φ_r]`; the result's times are `(t₁, …, t_r)`.
pub fn flow_compose(series: &[FlowSeries]) -> Result<FlowSeries> {
    let first = series
        .first()
        .ok_or_else(|| Error::Precondition("nothing to compose".into()))?;
    for s in series {
        if s.order != first.order {
            return Err(Error::Precondition(format!(
                "truncation orders differ: {} vs {}",
                first.order, s.order
            )));
        }
        if s.proto.vars() != first.proto.vars() {
            return Err(Error::Precondition("flows act on different coordinates".into()));
        }
    }
    let mut acc = first.clone();
    for next in &series[1..] {
        acc = compose_pair(next, &acc)?;
    }
    Ok(acc)
}

// ------------------------------------------------------------------ numeric flows

/// Fixed-step RK4 settings and the blow-up guards.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StepControl {
    pub h: f64,
    pub max_norm: f64,
    pub max_error: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            h: 1e-3,
            max_norm: 1e9,
            max_error: 1e-4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NumericFlow {
    pub x: Vec<f64>,
    /// Richardson estimate `‖y_h − y_{h/2}‖∞ / 15` of the error in `x`.
    pub error: f64,
}

fn rk4(x: &VectorField, x0: &[f64], s: f64, value: f64, h: f64, max_norm: f64) -> Result<Vec<f64>> {
    let n = (s.abs() / h).ceil().max(0.0) as usize;
    if n == 0 {
        return Ok(x0.to_vec());
    }
    let dt = s / n as f64;
    let mut y = x0.to_vec();
    let field = |y: &[f64], t: f64| -> Result<Vec<f64>> {
        let v = x.eval(y, value).map_err(|_| Error::BlowUp { s: t })?;
        if v.iter().any(|c| !c.is_finite()) {
            return Err(Error::BlowUp { s: t });
        }
        Ok(v)
    };
    let axpy = |y: &[f64], k: &[f64], a: f64| -> Vec<f64> { y.iter().zip(k).map(|(u, v)| u + a * v).collect() };
    for step in 0..n {
        let t = step as f64 * dt;
        let k1 = field(&y, t)?;
        let k2 = field(&axpy(&y, &k1, dt / 2.0), t)?;
        let k3 = field(&axpy(&y, &k2, dt / 2.0), t)?;
        let k4 = field(&axpy(&y, &k3, dt), t)?;
        for j in 0..y.len() {
            y[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        let norm = y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if !norm.is_finite() || norm > max_norm {
            return Err(Error::BlowUp { s: t + dt });
        }
    }
    Ok(y)
}

/// Integrates `ẋ = X(x)` from `x0` for time `s` (either sign).
// negated comparisons so NaN steps and errors are rejected too
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn flow_numeric(x: &VectorField, x0: &[f64], s: f64, value: f64, ctl: StepControl) -> Result<NumericFlow> {
    if x0.len() != x.dim() {
        return Err(Error::Dimension {
            expected: x.dim(),
            got: x0.len(),
        });
    }
    if !(ctl.h > 0.0) {
        return Err(Error::Precondition("step size must be positive".into()));
    }
    let coarse = rk4(x, x0, s, value, ctl.h, ctl.max_norm)?;
    let fine = rk4(x, x0, s, value, ctl.h / 2.0, ctl.max_norm)?;
    let error = coarse.iter().zip(&fine).fold(0.0f64, |a, (u, v)| a.max((u - v).abs())) / 15.0;
    if !(error <= ctl.max_error) {
        return Err(Error::BlowUp { s });
    }
    Ok(NumericFlow { x: fine, error })
}

// ------------------------------------------------------------------ closed forms

/// A closed-form map `(s, x, parameter) ↦ x′` written once over [`Real`] and
/// exposed at the two scalar types the crate evaluates it at.
pub trait Formula: Send + Sync {
    fn at_f64(&self, s: &f64, x: &[f64], p: &f64) -> Option<Vec<f64>>;
    fn at_jet(&self, s: &Jet<ExpPoly>, x: &[Jet<ExpPoly>], p: &Jet<ExpPoly>) -> Option<Vec<Jet<ExpPoly>>>;
}

/// The parameter symbol itself as an exp-polynomial (`z`, or `κ = u⁻¹` for an inverse parameter).
pub fn param_element(param: &Param, vars: Arc<Vec<String>>) -> ExpPoly {
    ExpPoly::constant(
        param,
        vars,
        ParamSeries::monomial(param, Q::from_integer(1.into()), param.symbol_degree()),
    )
}

/// One-parameter flow in closed form. Outside its domain the formula yields
/// `None` (a logarithm of a nonpositive number or a vanishing denominator).
#[derive(Clone)]
pub struct ClosedFlow {
    pub name: String,
    formula: Arc<dyn Formula>,
}

impl fmt::Debug for ClosedFlow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ClosedFlow({})", self.name)
    }
}

impl ClosedFlow {
    pub fn new(name: &str, formula: Arc<dyn Formula>) -> Self {
        ClosedFlow {
            name: name.to_string(),
            formula,
        }
    }

    pub fn eval(&self, s: f64, x: &[f64], value: f64) -> Result<Vec<f64>> {
        match self.formula.at_f64(&s, x, &value) {
            Some(y) if y.iter().all(|v| v.is_finite()) => Ok(y),
            _ => Err(Error::Domain(format!(
                "{} is undefined at s = {s}, x = {x:?}",
                self.name
            ))),
        }
    }

    pub fn in_domain(&self, s: f64, x: &[f64], value: f64) -> bool {
        self.eval(s, x, value).is_ok()
    }

    /// Taylor coefficients in `s` at `s = 0`, exact, per coordinate.
    pub fn taylor(&self, param: &Param, vars: Arc<Vec<String>>, order: usize) -> Result<Vec<Vec<ExpPoly>>> {
        let zero = ExpPoly::zero(param, vars.clone());
        let s = Jet::var(zero, order);
        let x: Vec<Jet<ExpPoly>> = (0..vars.len())
            .map(|j| Jet::constant(ExpPoly::coordinate(param, vars.clone(), j), order))
            .collect();
        let p = Jet::constant(param_element(param, vars), order);
        let y = self
            .formula
            .at_jet(&s, &x, &p)
            .ok_or_else(|| Error::Unsupported(format!("{} has no exact series expansion", self.name)))?;
        Ok(y.into_iter().map(|j| j.c).collect())
    }
}

/// Stratum descriptor of a point: fixed or not, and the orbit labels.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointClass {
    pub point: Vec<f64>,
    pub fixed: bool,
    pub field: Vec<f64>,
    /// Displacement `‖Φ^{0.1}(x) − x‖∞` under the closed flow (absent outside its domain).
    pub displacement: Option<f64>,
    pub integrals: Vec<(String, f64)>,
}

pub const FIXED_TOL: f64 = 1e-12;

pub fn classify_point(
    x: &VectorField,
    flow: &ClosedFlow,
    point: &[f64],
    value: f64,
    integrals: &[(String, ExpPoly)],
) -> Result<PointClass> {
    let field = x.eval(point, value)?;
    let fixed = field.iter().all(|v| v.abs() < FIXED_TOL);
    let displacement = flow
        .eval(0.1, point, value)
        .ok()
        .map(|y| y.iter().zip(point).fold(0.0f64, |a, (u, v)| a.max((u - v).abs())));
    let integrals = integrals
        .iter()
        .map(|(n, h)| Ok((n.clone(), h.eval(point, value)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(PointClass {
        point: point.to_vec(),
        fixed,
        field,
        displacement,
        integrals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bicross::tests::POINCARE;
    use crate::expr::parse_exppoly;

    fn kappa_field() -> VectorField {
        let p = Param::new("k", true, 2, 10);
        let c = ["P", "H"];
        VectorField::new(vec![
            parse_exppoly("P^2/(2*k)", &p, &c).unwrap(),
            parse_exppoly("-P", &p, &c).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn field_from_poincare_action() {
        let data = BicrossData::from_text(POINCARE).unwrap();
        let x = field_from_action(&data, 0, &Param::z(2, 8)).unwrap();
        assert_eq!(x.coords().as_slice(), ["Pm", "Pp"]);
        assert_eq!(x.components()[0].to_text(), "2*Pm");
        assert_eq!(x.components()[1].to_text(), "-z^-1 + z^-1*exp(-2*z*Pp)");
        assert!(field_from_action(&data, 1, &Param::z(2, 8)).is_err());
    }

    #[test]
    fn kappa_series_is_geometric() {
        let x = kappa_field();
        let s = flow_series(&x, &x.coordinate(0), 2);
        assert_eq!(s[0].to_text(), "P");
        let p = x.param();
        let c = ["P", "H"];
        assert_eq!(s[1], parse_exppoly("P^2/(2*k)", p, &c).unwrap());
        assert_eq!(s[2], parse_exppoly("P^3/(4*k^2)", p, &c).unwrap());
        assert_eq!(flow_series(&x, &x.coordinate(0), 0), vec![x.coordinate(0)]);
    }

    #[test]
    fn kappa_integral_and_numeric_flow() {
        let x = kappa_field();
        let h = parse_exppoly("P*exp(H/(2*k))", x.param(), &["P", "H"]).unwrap();
        assert!(check_first_integral(&x, &h).is_zero());
        assert!(flow_series(&x, &h, 6)[1..].iter().all(ExpPoly::is_zero));
        let r = flow_numeric(&x, &[1.0, 0.0], 1.0, 1.0, StepControl::default()).unwrap();
        assert!((r.x[0] - 2.0).abs() < 1e-8);
        assert!((r.x[1] + 2.0 * std::f64::consts::LN_2).abs() < 1e-8);
        assert!(r.error < 1e-9);
        let r0 = flow_numeric(&x, &[1.0, 0.5], 0.0, 1.0, StepControl::default()).unwrap();
        assert_eq!(r0.x, vec![1.0, 0.5]);
        // P = a/(1 − s a/2) reaches infinity at s = 2
        assert!(matches!(
            flow_numeric(&x, &[1.0, 0.0], 2.5, 1.0, StepControl::default()),
            Err(Error::BlowUp { .. })
        ));
    }

    #[test]
    fn composition_group_law() {
        let x = kappa_field();
        let one = FlowSeries::from_field(&x, 6);
        let two = flow_compose(&[one.clone(), one.clone()]).unwrap();
        assert_eq!(two, one.time_sum(2).unwrap());
        assert_eq!(flow_compose(std::slice::from_ref(&one)).unwrap(), one);
        let id = FlowSeries::identity(x.param(), x.coords().clone(), 1, 6);
        let c = flow_compose(&[id, one.clone()]).unwrap();
        let m = |a, b| MultiIndex::new(vec![a, b]);
        assert_eq!(c.coeff(0, &m(0, 3)), one.coeff(0, &MultiIndex::new(vec![3])));
        assert!(c.coeff(0, &m(1, 0)).is_zero());
        let short = FlowSeries::from_field(&x, 4);
        assert!(flow_compose(&[one, short]).is_err());
    }

    #[test]
    fn composition_through_exponentials() {
        let data = BicrossData::from_text(POINCARE).unwrap();
        let x = field_from_action(&data, 0, &Param::z(2, 10)).unwrap();
        let one = FlowSeries::from_field(&x, 5);
        let two = flow_compose(&[one.clone(), one.clone()]).unwrap();
        assert_eq!(two, one.time_sum(2).unwrap());
    }

    #[test]
    fn sign_flipped_integral_is_not_conserved() {
        let data = BicrossData::from_text(POINCARE).unwrap();
        let x = field_from_action(&data, 0, &Param::z(2, 8)).unwrap();
        let c = ["Pm", "Pp"];
        let printed = parse_exppoly("Pm*(exp(-2*z*Pp) - 1)", x.param(), &c).unwrap();
        let want = parse_exppoly("-2*Pm*(exp(-2*z*Pp) - 1)^2", x.param(), &c).unwrap();
        assert_eq!(check_first_integral(&x, &printed), want);
        let fixed = parse_exppoly("Pm*(exp(2*z*Pp) - 1)", x.param(), &c).unwrap();
        assert!(check_first_integral(&x, &fixed).is_zero());
    }
}
