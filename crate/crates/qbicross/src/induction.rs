//! Representations of `U(𝔨) ▸◂ F(L)` induced by characters of `F(L)`, the
//! four regular co-space actions, local representations and the
//! intertwiner check between representations induced on one orbit.
//!
//! `F(K)` is modelled by truncated series in the second-kind coordinates
//! `κ₁…κ_r` of `K`. A character is kept symbolic: series coefficients are
//! exp-polynomials in the character coordinates, evaluated numerically on demand.
//! Operators act on the right, so `f ⊣ (xy) = (f ⊣ x) ⊣ y`.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::Zero;
use serde::Serialize;

use crate::bicross::{BicrossData, BicrossModel};
use crate::error::{Error, Result};
use crate::expr::{to_exppoly, ExpPoly, Expr};
use crate::flows::{
    field_from_action, flow_compose, flow_series, substitute, tp_mul, tp_push, ClosedFlow, FlowSeries, TimePoly,
    VectorField,
};
use crate::multiindex::{mfactorial, MultiIndex};
use crate::ncalg::{nc_mul, NCElement, Sector, SpecSource};
use crate::paramseries::{fmt_q, Param, ParamSeries, Q};
use crate::report::{CheckResult, Report};

/// A function on `K`: truncated series in the group coordinates.
pub type CoSeries = TimePoly;

/// The induced representation for a symbolic character `a`.
#[derive(Clone, Debug)]
pub struct InducedRep {
    pub data: Arc<BicrossData>,
    pub param: Param,
    /// Character coordinates (the L-generator names).
    pub vars: Arc<Vec<String>>,
    pub order: u32,
    pub kgens: Vec<usize>,
    pub lgens: Vec<usize>,
    /// Per K-generator: `κ^{m′} ↦ Σ (coefficient, κ^m)` for the regular action `κ^{m′} ≺ k_i`.
    pub kmat: Vec<BTreeMap<MultiIndex, Vec<(MultiIndex, ParamSeries)>>>,
    /// Per L-generator: `M_j(κ; a) = l̂_j ∘ Φ_{(κ₁,…,κ_r)}(a)`.
    pub mult: Vec<CoSeries>,
}

fn fact(m: &MultiIndex) -> Q {
    Q::from_integer(BigInt::from(mfactorial(m)))
}

/// Builds the regular K-action matrices and the multiplication series.
///
/// The model's frame window must have degree at least `order + 1`.
pub fn induce(model: &BicrossModel, param: &Param, order: u32) -> Result<InducedRep> {
    let data = model.data.clone();
    let frame = &model.frame;
    if frame.window().degree < order + 1 {
        return Err(Error::Precondition(format!(
            "frame degree {} is below order + 1 = {}",
            frame.window().degree,
            order + 1
        )));
    }
    let kgens = data.gens_in(Sector::K);
    let lgens = data.gens_in(Sector::L);
    let r = kgens.len();
    let embed = |m: &MultiIndex| -> MultiIndex {
        let mut full = vec![0; data.gens.len()];
        for (a, &g) in kgens.iter().enumerate() {
            full[g] = m.entries()[a];
        }
        MultiIndex::new(full)
    };
    let restrict = |full: &MultiIndex| -> Option<MultiIndex> {
        if lgens.iter().any(|&g| full.entries()[g] > 0) {
            return None;
        }
        Some(MultiIndex::new(kgens.iter().map(|&g| full.entries()[g]).collect()))
    };

    // ⟨k_m, κ^{m′} ≺ k_i⟩ = ⟨k_i k_m, κ^{m′}⟩
    let mut kmat = Vec::with_capacity(r);
    for &gi in &kgens {
        let gen = NCElement::generator(frame, gi);
        let mut table: BTreeMap<MultiIndex, Vec<(MultiIndex, ParamSeries)>> = BTreeMap::new();
        for m in MultiIndex::all_up_to(r, order) {
            let km = NCElement::monomial(frame, embed(&m), ParamSeries::one(frame.param()));
            let prod = nc_mul(&gen, &km)?;
            let inv = fact(&m).recip();
            for (full, c) in prod.terms() {
                let target =
                    restrict(full).ok_or_else(|| Error::Unsupported("K-sector products leave the K sector".into()))?;
                if target.degree() > order {
                    continue;
                }
                let w = fact(&target) * &inv;
                table
                    .entry(target)
                    .or_default()
                    .push((m.clone(), c.rewindow(param).scale(&w)));
            }
        }
        kmat.push(table);
    }

    // M_j from the flows of k_1, …, k_r composed as Φ_r ∘ ⋯ ∘ Φ_1
    let fields = kgens
        .iter()
        .map(|&g| field_from_action(&data, g, param))
        .collect::<Result<Vec<VectorField>>>()?;
    let series: Vec<FlowSeries> = fields.iter().map(|x| FlowSeries::from_field(x, order)).collect();
    let joint = flow_compose(&series)?;
    let vars = fields[0].coords().clone();
    let mult = (0..lgens.len()).map(|j| joint.coord(j).clone()).collect();
    Ok(InducedRep {
        data,
        param: param.clone(),
        vars,
        order,
        kgens,
        lgens,
        kmat,
        mult,
    })
}

impl InducedRep {
    pub fn ntimes(&self) -> usize {
        self.kgens.len()
    }

    fn proto(&self) -> ExpPoly {
        ExpPoly::zero(&self.param, self.vars.clone())
    }

    fn cst(&self, c: ParamSeries) -> ExpPoly {
        ExpPoly::constant(&self.param, self.vars.clone(), c)
    }

    /// The monomial `κ^m` with coefficient 1.
    pub fn monomial(&self, m: MultiIndex) -> CoSeries {
        let mut f = CoSeries::new();
        f.insert(m, self.cst(ParamSeries::one(&self.param)));
        f
    }

    pub fn one(&self) -> CoSeries {
        self.monomial(MultiIndex::zero(self.ntimes()))
    }

    fn truncate(&self, f: CoSeries, d: u32) -> CoSeries {
        f.into_iter().filter(|(m, _)| m.degree() <= d).collect()
    }

    /// `f ⊣ g` for a generator `g` (index into the bicross generators).
    pub fn apply(&self, g: usize, f: &CoSeries) -> Result<CoSeries> {
        if let Some(i) = self.kgens.iter().position(|&k| k == g) {
            let mut out = CoSeries::new();
            for (m, c) in f {
                if let Some(row) = self.kmat[i].get(m) {
                    for (target, w) in row {
                        tp_push(&mut out, target.clone(), c.scale(w));
                    }
                }
            }
            return Ok(out);
        }
        if let Some(j) = self.lgens.iter().position(|&l| l == g) {
            return Ok(tp_mul(f, &self.mult[j], self.order));
        }
        Err(Error::Precondition(format!(
            "generator #{g} is not part of this algebra"
        )))
    }

    /// `f ⊣ e` for an expression `e` in the generators, as an operator word.
    pub fn apply_expr(&self, e: &Expr, f: &CoSeries) -> Result<CoSeries> {
        let scale = |f: CoSeries, c: ParamSeries| -> CoSeries {
            f.into_iter()
                .filter_map(|(m, x)| {
                    let y = x.scale(&c);
                    (!y.is_zero()).then_some((m, y))
                })
                .collect()
        };
        let sym_deg = self.param.symbol_degree();
        Ok(match e {
            Expr::Num(c) => scale(f.clone(), ParamSeries::constant(&self.param, c.clone())),
            Expr::Param => scale(
                f.clone(),
                ParamSeries::monomial(&self.param, Q::from_integer(1.into()), sym_deg),
            ),
            Expr::Sym(g) => self.apply(*g, f)?,
            Expr::Neg(a) => scale(
                self.apply_expr(a, f)?,
                ParamSeries::constant(&self.param, Q::from_integer((-1).into())),
            ),
            Expr::Add(a, b) => add(self.apply_expr(a, f)?, &self.apply_expr(b, f)?),
            Expr::Sub(a, b) => {
                let nb = self.apply_expr(&Expr::Neg(b.clone()), f)?;
                add(self.apply_expr(a, f)?, &nb)
            }
            Expr::Mul(a, b) => self.apply_expr(b, &self.apply_expr(a, f)?)?,
            Expr::Div(a, b) => {
                let (c, k) = b.as_param_monomial().ok_or_else(|| Error::Parse {
                    pos: 0,
                    msg: "invalid divisor".into(),
                })?;
                scale(
                    self.apply_expr(a, f)?,
                    ParamSeries::monomial(&self.param, c.recip(), -k * sym_deg),
                )
            }
            Expr::Pow(a, n) => {
                if *n < 0 {
                    let (c, p) = a
                        .as_param_monomial()
                        .ok_or_else(|| Error::Unsupported("negative power of an operator".into()))?;
                    let cp = num_traits::pow(c.recip(), (-n) as usize);
                    scale(f.clone(), ParamSeries::monomial(&self.param, cp, p * n * sym_deg))
                } else {
                    let mut acc = f.clone();
                    for _ in 0..*n {
                        acc = self.apply_expr(a, &acc)?;
                    }
                    acc
                }
            }
            Expr::Exp(_) => {
                // exponentials only of L-generators: multiplication by the pulled-back function
                let ex = self.l_function(e)?;
                let g = substitute(&ex, &self.mult, &self.proto(), self.ntimes(), self.order)?;
                tp_mul(f, &g, self.order)
            }
        })
    }

    /// An expression in the L-generators as an exp-polynomial in the character coordinates.
    fn l_function(&self, e: &Expr) -> Result<ExpPoly> {
        let remap = |s: usize| self.lgens.iter().position(|&l| l == s);
        let mapped = e
            .map_syms(&remap)
            .ok_or_else(|| Error::Unsupported("exponential of a K-generator".into()))?;
        to_exppoly(&mapped, &self.param, self.vars.clone())
    }

    /// Coefficients of `M_j` evaluated at the character `a`.
    pub fn series_at(&self, j: usize, a: &[f64], value: f64) -> Result<Vec<(MultiIndex, f64)>> {
        self.mult[j]
            .iter()
            .map(|(m, c)| Ok((m.clone(), c.eval(a, value)?)))
            .collect()
    }

    /// Exact coefficients of `M_j` at a rational character, when no exponential survives there.
    pub fn series_at_exact(&self, j: usize, a: &[Q], value: &Q) -> Option<Vec<(MultiIndex, Q)>> {
        self.mult[j]
            .iter()
            .map(|(m, c)| Some((m.clone(), c.eval_exact(a, value)?)))
            .filter(|t| t.as_ref().is_none_or(|(_, q)| !q.is_zero()))
            .collect()
    }

    /// Time-coordinate names: `v` for one K-generator, else `v1, v2, …`.
    pub fn time_names(&self) -> Vec<String> {
        match self.ntimes() {
            1 => vec!["v".into()],
            r => (1..=r).map(|i| format!("v{i}")).collect(),
        }
    }

    /// Serializable summary at a character: K-matrices, exact and evaluated series.
    pub fn dump(&self, a: &[f64], exact: Option<(&[Q], &Q)>, value: f64) -> Result<InducedDump> {
        let names = self.time_names();
        let mut k_action = BTreeMap::new();
        for (i, &g) in self.kgens.iter().enumerate() {
            let mut rows = Vec::new();
            for (from, targets) in &self.kmat[i] {
                for (to, c) in targets {
                    rows.push(KEntry {
                        from: from.entries().to_vec(),
                        to: to.entries().to_vec(),
                        coeff: c.canonical(),
                    });
                }
            }
            k_action.insert(self.data.gens[g].0.clone(), rows);
        }
        let mut series = BTreeMap::new();
        for (j, &g) in self.lgens.iter().enumerate() {
            let numeric = self.series_at(j, a, value)?;
            let exact = exact.and_then(|(qa, qv)| self.series_at_exact(j, qa, qv));
            let text = match &exact {
                Some(t) => series_text(t.iter().map(|(m, c)| (m, fmt_q(c))), &names),
                None => series_text(
                    numeric
                        .iter()
                        .filter(|(_, c)| *c != 0.0)
                        .map(|(m, c)| (m, format!("{c}"))),
                    &names,
                ),
            };
            let terms = self.mult[j]
                .iter()
                .zip(&numeric)
                .map(|((m, c), (_, v))| SeriesTerm {
                    power: m.entries().to_vec(),
                    symbolic: c.to_text(),
                    value: *v,
                })
                .collect();
            series.insert(self.data.gens[g].0.clone(), InducedSeries { text, terms });
        }
        Ok(InducedDump {
            algebra: self.data.name.clone(),
            character: a.to_vec(),
            order: self.order,
            k_action,
            series,
        })
    }

    /// Numeric value of `M_j` at flow times `times` and character `a`.
    pub fn eval_mult(&self, j: usize, times: &[f64], a: &[f64], value: f64) -> Result<f64> {
        eval_series(&self.mult[j], times, a, value)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct KEntry {
    pub from: Vec<u32>,
    pub to: Vec<u32>,
    pub coeff: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SeriesTerm {
    pub power: Vec<u32>,
    pub symbolic: String,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct InducedSeries {
    /// Human-readable series at the character.
    pub text: String,
    pub terms: Vec<SeriesTerm>,
}

/// JSON view of an induced representation at one character.
#[derive(Clone, Debug, Serialize)]
pub struct InducedDump {
    pub algebra: String,
    pub character: Vec<f64>,
    pub order: u32,
    /// Per K-generator, `κ^from ↦ coeff·κ^to`.
    pub k_action: BTreeMap<String, Vec<KEntry>>,
    /// Per L-generator, the multiplication series `M_j`.
    pub series: BTreeMap<String, InducedSeries>,
}

/// `1 + (1/2)v + (1/4)v^2 + …` from `(power, coefficient text)` pairs in degree order.
fn series_text<'a>(terms: impl Iterator<Item = (&'a MultiIndex, String)>, names: &[String]) -> String {
    let mut out = String::new();
    for (m, c) in terms {
        let mono: String = m
            .entries()
            .iter()
            .zip(names)
            .filter(|(e, _)| **e > 0)
            .map(|(e, n)| if *e == 1 { n.clone() } else { format!("{n}^{e}") })
            .collect();
        let (neg, mag) = match c.strip_prefix('-') {
            Some(rest) => (true, rest.to_string()),
            None => (false, c),
        };
        let mag = mag.trim_start_matches('(').trim_end_matches(')').to_string();
        let mag = if mag.contains('/') { format!("({mag})") } else { mag };
        let body = match (mag.as_str(), mono.is_empty()) {
            (_, true) => mag.clone(),
            ("1", false) => mono,
            (_, false) => format!("{mag}{mono}"),
        };
        if out.is_empty() {
            out = if neg { format!("-{body}") } else { body };
        } else {
            out += if neg { " - " } else { " + " };
            out += &body;
        }
    }
    if out.is_empty() {
        "0".into()
    } else {
        out + " + …"
    }
}

fn add(mut a: CoSeries, b: &CoSeries) -> CoSeries {
    for (m, c) in b {
        tp_push(&mut a, m.clone(), c.clone());
    }
    a
}

pub fn eval_series(f: &CoSeries, times: &[f64], a: &[f64], value: f64) -> Result<f64> {
    let mut acc = 0.0;
    for (m, c) in f {
        let tm: f64 = m.entries().iter().zip(times).map(|(e, t)| t.powi(*e as i32)).product();
        acc += tm * c.eval(a, value)?;
    }
    Ok(acc)
}

/// `f ⊣ g` (the spec-level entry point).
pub fn rep_apply(rep: &InducedRep, g: usize, f: &CoSeries) -> Result<CoSeries> {
    rep.apply(g, f)
}

/// Verifies `ρ([g_j, g_i]) = ρ(g_j)ρ(g_i) − ρ(g_i)ρ(g_j)` for every generator
/// pair of `src` on the monomials `κ^m`, `|m| ≤ pmax`, comparing degrees below the order.
pub fn check_rep_relations(rep: &InducedRep, src: &SpecSource, pmax: u32) -> Report {
    let mut report = Report::new(&format!("induced representation: {}", src.name));
    let n = src.gens.len();
    let cmp_deg = rep.order.saturating_sub(1);
    let map: Vec<Option<usize>> = src.gens.iter().map(|(name, _)| rep.data.gen_index(name)).collect();
    for j in 0..n {
        for i in 0..j {
            let label = format!("[{}, {}]", src.gens[j].0, src.gens[i].0);
            let failure = (|| -> Result<Option<String>> {
                let (gj, gi) = match (map[j], map[i]) {
                    (Some(a), Some(b)) => (a, b),
                    _ => return Ok(Some("generator missing from the bicross data".into())),
                };
                let value = src
                    .relations
                    .iter()
                    .find(|(a, b, _)| *a == j && *b == i)
                    .map(|(_, _, v)| v.clone())
                    .unwrap_or(Expr::Num(Q::from_integer(0.into())));
                // relation values use the spec's symbol numbering; renumber into the bicross data
                let value = value
                    .map_syms(&|s| map[s])
                    .ok_or_else(|| Error::Spec(format!("{label}: value uses unknown generators")))?;
                for m in MultiIndex::all_up_to(rep.ntimes(), pmax) {
                    let f = rep.monomial(m.clone());
                    let ij = rep.apply(gi, &rep.apply(gj, &f)?)?;
                    let ji = rep.apply(gj, &rep.apply(gi, &f)?)?;
                    let neg: CoSeries = ji.into_iter().map(|(k, c)| (k, c.neg())).collect();
                    let lhs = rep.truncate(add(ij, &neg), cmp_deg);
                    let rhs = rep.truncate(rep.apply_expr(&value, &f)?, cmp_deg);
                    if lhs != rhs {
                        return Ok(Some(format!("{label} on κ^{:?}", m.entries())));
                    }
                }
                Ok(None)
            })()
            .unwrap_or_else(|e| Some(format!("error: {e}")));
            report
                .results
                .push(CheckResult::new(&label, failure, pmax, rep.param.top()));
        }
    }
    report
}

/// Formal skew-symmetry of the K-generators under `⟨κ^m, κ^n⟩ = (−1)^{|m|} m! n! δ_{m+n=N}`
/// on monomials of degree ≤ `order`, one flow time. Returns the first failing pair.
pub fn check_skew_symmetry(rep: &InducedRep) -> Result<Option<(u32, u32)>> {
    if rep.ntimes() != 1 {
        return Err(Error::Unsupported("skew-symmetry is checked for one flow time".into()));
    }
    let n = rep.order;
    let pairing = |f: &CoSeries, g: &CoSeries| -> ParamSeries {
        let mut acc = ParamSeries::zero(&rep.param);
        for (a, c) in f {
            let da = a.entries()[0];
            if da > n {
                continue;
            }
            if let Some(d) = g.get(&MultiIndex::new(vec![n - da])) {
                let w = fact(a) * fact(&MultiIndex::new(vec![n - da]));
                let w = if da % 2 == 1 { -w } else { w };
                // coefficients are constants in the character coordinates here
                let cc = c
                    .terms()
                    .next()
                    .map(|t| t.2.clone())
                    .unwrap_or_else(|| ParamSeries::zero(&rep.param));
                let dd = d
                    .terms()
                    .next()
                    .map(|t| t.2.clone())
                    .unwrap_or_else(|| ParamSeries::zero(&rep.param));
                acc.add_assign_ref(&cc.mul_ref(&dd).scale(&w));
            }
        }
        acc
    };
    let k = rep.kgens[0];
    for p in 0..=n {
        for q in 0..=n {
            let f = rep.monomial(MultiIndex::new(vec![p]));
            let g = rep.monomial(MultiIndex::new(vec![q]));
            let s = pairing(&rep.apply(k, &f)?, &g).add_ref(&pairing(&f, &rep.apply(k, &g)?));
            if !s.is_zero() {
                return Ok(Some((p, q)));
            }
        }
    }
    Ok(None)
}

// ------------------------------------------------------------------ local representations

/// `e^{sK} ⊢ l = e^{sc}·Φˢ(l)`: the scalar and the moved point.
pub fn local_rep(flow: &ClosedFlow, c: f64, l: &[f64], s: f64, value: f64) -> Result<(f64, Vec<f64>)> {
    Ok(((s * c).exp(), flow.eval(s, l, value)?))
}

/// `λ ⊢ l = λ(l)·l`: L-functions act by their value at the point.
pub fn local_rep_l(lambda: &ExpPoly, l: &[f64], value: f64) -> Result<f64> {
    lambda.eval(l, value)
}

// ------------------------------------------------------------------ regular co-spaces

/// The four regular modules of a bicrossproduct and its dual.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Module {
    /// `(H, ≺)`
    HRight,
    /// `(H, ≻)`
    HLeft,
    /// `(H*, ≺)`
    DualRight,
    /// `(H*, ≻)`
    DualLeft,
}

/// Elements of the co-spaces for a one-parameter `K`.
#[derive(Clone, Debug, PartialEq)]
pub enum CoSpaceElement {
    /// `κ·l ∈ H*`: `κ(v) = Σ kappa[m] v^m` times the point `l ∈ L`.
    KappaL { kappa: Vec<f64>, point: Vec<f64> },
    /// `coeff · e^{tK} · Π λ_i∘Φ^{τ_i} ∈ H` with `λ_i ∈ F(L)`.
    KLambda {
        time: f64,
        factors: Vec<(ExpPoly, f64)>,
        coeff: f64,
    },
}

/// What acts on a co-space element.
#[derive(Clone, Debug)]
pub enum Actor {
    /// `e^{sK}`.
    Group(f64),
    /// `λ′ ∈ F(L)`.
    LFun(ExpPoly),
}

impl CoSpaceElement {
    /// Value of the function part: `κ(v)` for `κl`, or `coeff·Πλ_i(Φ^{τ_i}(x))` for `kλ` at `x`.
    pub fn eval(&self, at: &[f64], flow: &ClosedFlow, value: f64) -> Result<f64> {
        match self {
            CoSpaceElement::KappaL { kappa, .. } => Ok(poly_eval(kappa, at[0])),
            CoSpaceElement::KLambda { factors, coeff, .. } => {
                let mut acc = *coeff;
                for (f, tau) in factors {
                    acc *= f.eval(&flow.eval(*tau, at, value)?, value)?;
                }
                Ok(acc)
            }
        }
    }
}

fn poly_eval(c: &[f64], v: f64) -> f64 {
    c.iter().rev().fold(0.0, |a, x| a * v + x)
}

/// `v ↦ κ(v + s)` on coefficient lists.
pub fn poly_shift(c: &[f64], s: f64) -> Vec<f64> {
    let n = c.len();
    let mut out = vec![0.0; n];
    for (m, cm) in c.iter().enumerate() {
        // (v+s)^m = Σ_k C(m,k) s^{m−k} v^k
        let mut binom = 1.0;
        for k in (0..=m).rev() {
            out[k] += cm * binom * s.powi((m - k) as i32);
            binom = binom * k as f64 / (m - k + 1) as f64;
        }
    }
    out
}

fn poly_mul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            if i + j < n {
                out[i + j] += x * y;
            }
        }
    }
    out
}

/// Taylor coefficients in `v` of `v ↦ λ(Φᵛ(l))`: the orbit pull-back `λ∘l̂` as a function on `K`.
pub fn orbit_pullback(x: &VectorField, lambda: &ExpPoly, l: &[f64], value: f64, order: u32) -> Result<Vec<f64>> {
    flow_series(x, lambda, order).iter().map(|c| c.eval(l, value)).collect()
}

/// Applies an actor to a co-space element in one of the four regular modules.
pub fn cospace_act(
    el: &CoSpaceElement,
    actor: &Actor,
    module: Module,
    field: &VectorField,
    flow: &ClosedFlow,
    value: f64,
) -> Result<CoSpaceElement> {
    use CoSpaceElement::*;
    match (el, module) {
        (KappaL { kappa, point }, Module::DualLeft) => match actor {
            // k′ ≻ (κl) = (k′ ≻ κ)(k′ ▷ l)
            Actor::Group(s) => Ok(KappaL {
                kappa: poly_shift(kappa, *s),
                point: flow.eval(*s, point, value)?,
            }),
            // λ′ ≻ (κl) = λ′(l)·κl
            Actor::LFun(lam) => {
                let c = lam.eval(point, value)?;
                Ok(KappaL {
                    kappa: kappa.iter().map(|x| x * c).collect(),
                    point: point.clone(),
                })
            }
        },
        (KappaL { kappa, point }, Module::DualRight) => match actor {
            // (κl) ≺ k′ = (κ ≺ k′)l
            Actor::Group(s) => Ok(KappaL {
                kappa: poly_shift(kappa, *s),
                point: point.clone(),
            }),
            // (κl) ≺ λ′ = κ·(λ′∘l̂)·l
            Actor::LFun(lam) => {
                let n = kappa.len();
                let pull = orbit_pullback(field, lam, point, value, n.saturating_sub(1) as u32)?;
                Ok(KappaL {
                    kappa: poly_mul(kappa, &pull, n),
                    point: point.clone(),
                })
            }
        },
        (KLambda { time, factors, coeff }, Module::HRight) => match actor {
            // (kλ) ≺ k′ = kk′(λ ⊲ k′)
            Actor::Group(s) => Ok(KLambda {
                time: time + s,
                factors: factors.iter().map(|(f, tau)| (f.clone(), tau + s)).collect(),
                coeff: *coeff,
            }),
            // (kλ) ≺ λ′ = kλλ′
            Actor::LFun(lam) => {
                let mut fs = factors.clone();
                fs.push((lam.clone(), 0.0));
                Ok(KLambda {
                    time: *time,
                    factors: fs,
                    coeff: *coeff,
                })
            }
        },
        (KLambda { time, factors, coeff }, Module::HLeft) => match actor {
            // k′ ≻ (kλ) = k′kλ
            Actor::Group(s) => Ok(KLambda {
                time: time + s,
                factors: factors.clone(),
                coeff: *coeff,
            }),
            // λ′ ≻ (kλ) = k(λ′ ⊲ k)λ
            Actor::LFun(lam) => {
                let mut fs = vec![(lam.clone(), *time)];
                fs.extend(factors.iter().cloned());
                Ok(KLambda {
                    time: *time,
                    factors: fs,
                    coeff: *coeff,
                })
            }
        },
        _ => Err(Error::Precondition(format!(
            "element form does not match module {module:?}"
        ))),
    }
}

// ------------------------------------------------------------------ equivalence

/// Tolerance of the evaluation-based intertwiner check.
pub const EQUIV_TOL: f64 = 1e-8;

/// Checks that `f_k(κ) = k ≻ κ` (here `κ(·) ↦ κ(· + s)`) intertwines the
/// representations induced by `l` and by `k ▷ l = Φˢ(l)`:
/// `f_k(κ ⊣_l λ)(v) = (f_k κ ⊣_{k▷l} λ)(v)` on the time grid, and
/// `f_k` commutes with the K-generator. `target` overrides `Φˢ(l)` (negative control).
#[allow(clippy::too_many_arguments)]
pub fn equivalence_check(
    flow: &ClosedFlow,
    value: f64,
    l: &[f64],
    s: f64,
    kappas: &[Vec<f64>],
    lambdas: &[ExpPoly],
    grid: &[f64],
    target: Option<&[f64]>,
) -> Result<Report> {
    let moved = match target {
        Some(t) => t.to_vec(),
        None => flow.eval(s, l, value)?,
    };
    let mut report = Report::new(&format!("intertwiner {} at s = {s}", flow.name));
    let mut fail = None;
    for kappa in kappas {
        for lam in lambdas {
            for &v in grid {
                // left: (κ ⊣_l λ)(v + s) = κ(v + s)·λ(Φ^{v+s}(l))
                let lhs = poly_eval(kappa, v + s) * lam.eval(&flow.eval(v + s, l, value)?, value)?;
                // right: (f_k κ)(v)·λ(Φᵛ(k ▷ l))
                let rhs = poly_eval(&poly_shift(kappa, s), v) * lam.eval(&flow.eval(v, &moved, value)?, value)?;
                let d = (lhs - rhs).abs();
                if d > EQUIV_TOL && fail.is_none() {
                    fail = Some(format!("κ={kappa:?}, λ={lam}, v={v}: {lhs} vs {rhs}"));
                }
            }
        }
    }
    report.results.push(CheckResult::new("intertwiner-L", fail, 0, 0));

    // K acts by d/dv on both sides; f_k must commute with it
    let mut kfail = None;
    for kappa in kappas {
        let deriv: Vec<f64> = kappa.iter().enumerate().skip(1).map(|(m, c)| m as f64 * c).collect();
        let shifted = poly_shift(kappa, s);
        let deriv_shifted: Vec<f64> = shifted.iter().enumerate().skip(1).map(|(m, c)| m as f64 * c).collect();
        for &v in grid {
            let a = poly_eval(&poly_shift(&deriv, s), v);
            let b = poly_eval(&deriv_shifted, v);
            if (a - b).abs() > EQUIV_TOL && kfail.is_none() {
                kfail = Some(format!("κ={kappa:?}, v={v}: {a} vs {b}"));
            }
        }
    }
    report.results.push(CheckResult::new("intertwiner-K", kfail, 0, 0));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::expr::parse_exppoly;
    use crate::ncalg::Window;

    fn rep(name: &str, order: u32) -> (catalog::CatalogEntry, InducedRep) {
        let e = catalog::get(name).unwrap();
        let model = e.model(Window::new(order + 1, order + 2)).unwrap();
        let r = induce(&model, &e.param(2, order + 2), order).unwrap();
        (e, r)
    }

    #[test]
    fn k_generator_acts_as_derivative() {
        let (_, r) = rep("galilei-kappa", 6);
        for p in 0..=6u32 {
            let f = r.monomial(MultiIndex::new(vec![p]));
            let g = r.apply(0, &f).unwrap();
            if p == 0 {
                assert!(g.is_empty());
            } else {
                let want = r.monomial(MultiIndex::new(vec![p - 1]));
                let want: CoSeries = want
                    .into_iter()
                    .map(|(m, c)| (m, c.scale_q(&Q::from_integer(p.into()))))
                    .collect();
                assert_eq!(g, want);
            }
        }
    }

    #[test]
    fn kappa_h_series() {
        let (e, r) = rep("galilei-kappa", 4);
        let h = &r.mult[1];
        let c = |p: u32| h.get(&MultiIndex::new(vec![p])).cloned().unwrap_or_else(|| r.proto());
        let p = &r.param;
        assert_eq!(c(0), parse_exppoly("H", p, &e.coords).unwrap());
        assert_eq!(c(1), parse_exppoly("-P", p, &e.coords).unwrap());
        assert_eq!(c(2), parse_exppoly("-P^2/(4*k)", p, &e.coords).unwrap());
        // P at (1,0), κ = 1: 1 + v/2 + v²/4 + …
        let one = r.one();
        let pv = r.apply(1, &one).unwrap();
        for (k, want) in [(0u32, 1.0), (1, 0.5), (2, 0.25), (3, 0.125)] {
            let got = pv[&MultiIndex::new(vec![k])].eval(&[1.0, 0.0], 1.0).unwrap();
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn relations_hold_and_mutation_is_caught() {
        for name in catalog::NAMES {
            let (e, r) = rep(name, 8);
            let report = check_rep_relations(&r, &e.primal, 4);
            assert!(report.passed(), "{}", report.to_text());
        }
        let (e, mut r) = rep("galilei-kappa", 8);
        r.mult[1].remove(&MultiIndex::new(vec![2]));
        let report = check_rep_relations(&r, &e.primal, 4);
        assert!(!report.passed());
        assert!(report.failures().any(|f| f.axiom == "[H, K]"));
    }

    #[test]
    fn multiplication_series_match_closed_forms() {
        for name in catalog::NAMES {
            let (e, r) = rep(name, 6);
            let oracle = e.induced.taylor(&r.param, r.vars.clone(), 6).unwrap();
            for (j, coeffs) in oracle.iter().enumerate() {
                for (k, want) in coeffs.iter().enumerate() {
                    let got = r.mult[j]
                        .get(&MultiIndex::new(vec![k as u32]))
                        .cloned()
                        .unwrap_or_else(|| r.proto());
                    assert_eq!(got, *want, "{name}: coordinate {j}, v^{k}");
                }
            }
        }
    }

    #[test]
    fn constant_terms_reproduce_the_character() {
        for name in catalog::NAMES {
            let (e, r) = rep(name, 4);
            for a in &e.grid {
                for j in 0..r.lgens.len() {
                    let c0 = r.mult[j][&MultiIndex::new(vec![0])].eval(a, e.default_value).unwrap();
                    assert_eq!(c0, a[j], "{name} at {a:?}");
                }
            }
        }
        // Galilei character (b, 0): P acts by 0 at every order
        let (_, r) = rep("galilei-nonstandard", 6);
        let p = r.series_at(1, &[0.7, 0.0], 0.3).unwrap();
        assert!(p.iter().all(|(_, c)| *c == 0.0));
    }

    #[test]
    fn dump_prints_the_geometric_series() {
        let (_, r) = rep("galilei-kappa", 4);
        let one = Q::from_integer(1.into());
        let zero = Q::from_integer(0.into());
        let d = r.dump(&[1.0, 0.0], Some((&[one.clone(), zero], &one)), 1.0).unwrap();
        assert_eq!(d.series["P"].text, "1 + (1/2)v + (1/4)v^2 + (1/8)v^3 + (1/16)v^4 + …");
        assert_eq!(d.series["H"].text, "-v - (1/4)v^2 - (1/12)v^3 - (1/32)v^4 + …");
        assert_eq!(d.k_action["K"][0].coeff, "1");
        let numeric = r.dump(&[1.0, 0.0], None, 1.0).unwrap();
        assert_eq!(
            numeric.series["P"].text,
            "1 + 0.5v + 0.25v^2 + 0.125v^3 + 0.0625v^4 + …"
        );
    }

    #[test]
    fn skew_symmetry() {
        let (_, r) = rep("poincare-null-plane", 6);
        assert_eq!(check_skew_symmetry(&r).unwrap(), None);
    }

    #[test]
    fn local_rep_kappa() {
        let e = catalog::get("galilei-kappa").unwrap();
        let (c, p) = local_rep(&e.flow, 2.0, &[1.0, 0.0], 0.5, 1.0).unwrap();
        assert!((c - std::f64::consts::E).abs() < 1e-15);
        assert!((p[0] - 4.0 / 3.0).abs() < 1e-14);
        assert!((p[1] - 2.0 * (0.75f64).ln()).abs() < 1e-14);
        assert_eq!(
            local_rep(&e.flow, 2.0, &[1.0, 0.0], 0.0, 1.0).unwrap(),
            (1.0, vec![1.0, 0.0])
        );
        let pfun = parse_exppoly("P", &e.param(2, 4), &e.coords).unwrap();
        assert_eq!(local_rep_l(&pfun, &[1.0, 0.0], 1.0).unwrap(), 1.0);
    }

    #[test]
    fn cospace_examples() {
        let e = catalog::get("poincare-null-plane").unwrap();
        let p = e.param(2, 6);
        let x = e.field(&p).unwrap();
        let pm = parse_exppoly("Pm", &p, &e.coords).unwrap();
        let el = CoSpaceElement::KappaL {
            kappa: vec![1.0, 2.0],
            point: vec![0.5, -0.2],
        };
        let got = cospace_act(&el, &Actor::LFun(pm.clone()), Module::DualLeft, &x, &e.flow, 0.3).unwrap();
        assert_eq!(
            got,
            CoSpaceElement::KappaL {
                kappa: vec![0.5, 1.0],
                point: vec![0.5, -0.2]
            }
        );
        // ≺ by the group shifts the function and keeps the point
        let got = cospace_act(&el, &Actor::Group(0.5), Module::DualRight, &x, &e.flow, 0.3).unwrap();
        assert_eq!(
            got,
            CoSpaceElement::KappaL {
                kappa: vec![2.0, 2.0],
                point: vec![0.5, -0.2]
            }
        );
        // ≺ by P₋ multiplies by α₋e^{2v}
        let got = cospace_act(
            &CoSpaceElement::KappaL {
                kappa: vec![1.0, 0.0, 0.0],
                point: vec![0.5, -0.2],
            },
            &Actor::LFun(pm),
            Module::DualRight,
            &x,
            &e.flow,
            0.3,
        )
        .unwrap();
        assert_eq!(
            got,
            CoSpaceElement::KappaL {
                kappa: vec![0.5, 1.0, 1.0],
                point: vec![0.5, -0.2]
            }
        );
        assert!(cospace_act(&el, &Actor::Group(0.1), Module::HLeft, &x, &e.flow, 0.3).is_err());
    }

    #[test]
    fn h_modules_move_functions_along_the_flow() {
        let e = catalog::get("galilei-kappa").unwrap();
        let p = e.param(2, 6);
        let x = e.field(&p).unwrap();
        let hfun = parse_exppoly("H", &p, &e.coords).unwrap();
        let el = CoSpaceElement::KLambda {
            time: 0.0,
            factors: vec![(hfun.clone(), 0.0)],
            coeff: 1.0,
        };
        let moved = cospace_act(&el, &Actor::Group(0.5), Module::HRight, &x, &e.flow, 1.0).unwrap();
        let at = [1.0, 0.0];
        let v = moved.eval(&at, &e.flow, 1.0).unwrap();
        assert!((v - 2.0 * 0.75f64.ln()).abs() < 1e-14);
        let left = cospace_act(&el, &Actor::Group(0.5), Module::HLeft, &x, &e.flow, 1.0).unwrap();
        assert_eq!(left.eval(&at, &e.flow, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn intertwiner_and_negative_control() {
        let e = catalog::get("galilei-kappa").unwrap();
        let p = e.param(2, 6);
        let h = parse_exppoly("H", &p, &e.coords).unwrap();
        let grid = [0.0, 0.1, 0.2, 0.3];
        let kappas = vec![vec![0.0, 0.0, 1.0]];
        let r = equivalence_check(
            &e.flow,
            1.0,
            &[1.0, 0.0],
            0.3,
            &kappas,
            std::slice::from_ref(&h),
            &grid,
            None,
        )
        .unwrap();
        assert!(r.passed(), "{}", r.to_text());
        let r0 = equivalence_check(
            &e.flow,
            1.0,
            &[1.0, 0.0],
            0.0,
            &kappas,
            std::slice::from_ref(&h),
            &grid,
            None,
        )
        .unwrap();
        assert!(r0.passed());
        // (2, 0) has h = 2, a different orbit from (1, 0) with h = 1
        let bad = equivalence_check(&e.flow, 1.0, &[1.0, 0.0], 0.3, &kappas, &[h], &grid, Some(&[2.0, 0.0])).unwrap();
        assert!(!bad.passed());
    }

    #[test]
    fn poly_shift_is_taylor_shift() {
        // (v + 2)² = v² + 4v + 4
        assert_eq!(poly_shift(&[0.0, 0.0, 1.0], 2.0), vec![4.0, 4.0, 1.0]);
    }
}
