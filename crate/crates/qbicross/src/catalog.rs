//! The three shipped algebras: null-plane Poincaré, non-standard Galilei and
//! κ-Galilei in 1+1 dimensions, with their duals, bicrossproduct data, closed
//! flows, first integrals and strata.
//!
//! Generator orders follow the pairing monomials (`K Pm Pp`, `K H P`, `K P H`),
//! so the dual correspondence is the identity and the flow coordinates are
//! the L-generators in declaration order.

use std::sync::Arc;

use crate::bicross::{BicrossData, BicrossModel};
use crate::error::{Error, Result};
use crate::expr::{parse_exppoly, ExpPoly};
use crate::flows::{field_from_action, ClosedFlow, Formula, VectorField};
use crate::ncalg::{Sector, Spec, SpecSource, Window};
use crate::pairing::DualPairSpec;
use crate::paramseries::Param;
use crate::real::{Jet, Real};

pub const NAMES: [&str; 3] = ["poincare-null-plane", "galilei-nonstandard", "galilei-kappa"];

pub const DEFAULT_Z: f64 = 0.3;
pub const DEFAULT_KAPPA: f64 = 1.0;

/// Everything known about one algebra.
#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub primal: Arc<SpecSource>,
    pub dual: Arc<SpecSource>,
    pub bicross: Arc<BicrossData>,
    /// Primal generator `i` pairs with dual generator `correspondence[i]`.
    pub correspondence: Vec<usize>,
    /// L-coordinate names, the order used by fields, flows and characters.
    pub coords: Vec<&'static str>,
    /// Closed flow of the (single) K-generator.
    pub flow: ClosedFlow,
    /// Closed-form induced actions `φ ⊣ l_j` as functions of the group coordinate `v`.
    pub induced: ClosedFlow,
    /// Registered first integrals `(name, text over coords)`.
    pub integrals: Vec<(&'static str, &'static str)>,
    /// A non-conserved variant of the first integral, kept as a negative check.
    pub printed_integral: Option<&'static str>,
    pub fixed: fn(&[f64]) -> bool,
    /// Stratum label of a point.
    pub stratum: fn(&[f64]) -> &'static str,
    pub strata: &'static [&'static str],
    /// Parameter value used by numeric oracles.
    pub default_value: f64,
    /// Sample points inside the flow domain for `s ∈ [0, 0.5]`.
    pub grid: Vec<Vec<f64>>,
}

impl CatalogEntry {
    pub fn primal_spec(&self, w: Window) -> Result<Spec> {
        self.primal.materialize(w)
    }
    pub fn dual_spec(&self, w: Window) -> Result<Spec> {
        self.dual.materialize(w)
    }
    pub fn pairing(&self, w: Window) -> Result<DualPairSpec> {
        DualPairSpec::with_correspondence(self.primal_spec(w)?, self.dual_spec(w)?, self.correspondence.clone())
    }
    pub fn model(&self, w: Window) -> Result<BicrossModel> {
        BicrossModel::new(&self.bicross, w)
    }

    /// Parameter descriptor for exp-polynomials with window `[-bottom, top]`.
    pub fn param(&self, bottom: u32, top: u32) -> Param {
        Param::new(&self.bicross.param, self.bicross.inverse, bottom, top)
    }

    pub fn k_generator(&self) -> usize {
        self.bicross.gens_in(Sector::K)[0]
    }

    pub fn field(&self, param: &Param) -> Result<VectorField> {
        field_from_action(&self.bicross, self.k_generator(), param)
    }

    pub fn vars(&self) -> Arc<Vec<String>> {
        Arc::new(self.coords.iter().map(|s| s.to_string()).collect())
    }

    pub fn integrals(&self, param: &Param) -> Result<Vec<(String, ExpPoly)>> {
        self.integrals
            .iter()
            .map(|(n, t)| Ok((n.to_string(), parse_exppoly(t, param, &self.coords)?)))
            .collect()
    }

    pub fn printed_integral(&self, param: &Param) -> Option<Result<ExpPoly>> {
        self.printed_integral.map(|t| parse_exppoly(t, param, &self.coords))
    }
}

pub fn list() -> Vec<&'static str> {
    NAMES.to_vec()
}

pub fn get(name: &str) -> Result<CatalogEntry> {
    match name {
        "poincare-null-plane" => Ok(poincare()),
        "galilei-nonstandard" => Ok(galilei()),
        "galilei-kappa" => Ok(kappa()),
        _ => Err(Error::UnknownEntry(name.to_string())),
    }
}

pub fn all() -> Vec<CatalogEntry> {
    NAMES.iter().map(|n| get(n).expect("catalog names resolve")).collect()
}

/// Raw spec texts `(primal, dual, bicross)` of an entry.
pub fn texts(name: &str) -> Result<(&'static str, &'static str, &'static str)> {
    match name {
        "poincare-null-plane" => Ok((POINCARE, POINCARE_DUAL, POINCARE_BICROSS)),
        "galilei-nonstandard" => Ok((GALILEI, GALILEI_DUAL, GALILEI_BICROSS)),
        "galilei-kappa" => Ok((KAPPA, KAPPA_DUAL, KAPPA_BICROSS)),
        _ => Err(Error::UnknownEntry(name.to_string())),
    }
}

type Built = (
    Arc<SpecSource>,
    Arc<SpecSource>,
    Arc<BicrossData>,
    ClosedFlow,
    ClosedFlow,
    Vec<&'static str>,
);

fn build(name: &'static str, coords: Vec<&'static str>, flow: Arc<dyn Formula>, induced: Arc<dyn Formula>) -> Built {
    let (p, d, b) = texts(name).expect("known name");
    let parse = |t: &str| Arc::new(SpecSource::from_text(t).expect("catalog spec parses"));
    (
        parse(p),
        parse(d),
        Arc::new(BicrossData::from_text(b).expect("catalog bicross data parses")),
        ClosedFlow::new(&format!("{name} flow"), flow),
        ClosedFlow::new(&format!("{name} induced action"), induced),
        coords,
    )
}

// ------------------------------------------------------------------ closed forms

/// Implements [`Formula`] for a unit struct by forwarding to a generic function.
macro_rules! formula {
    ($ty:ident, $f:ident) => {
        struct $ty;
        impl Formula for $ty {
            fn at_f64(&self, s: &f64, x: &[f64], p: &f64) -> Option<Vec<f64>> {
                $f(s, x, p)
            }
            fn at_jet(&self, s: &Jet<ExpPoly>, x: &[Jet<ExpPoly>], p: &Jet<ExpPoly>) -> Option<Vec<Jet<ExpPoly>>> {
                $f(s, x, p)
            }
        }
    };
}

/// `Φˢ(α₋, α₊) = (α₋e^{2s}, (1/2z)·ln(1 − e^{−2s}(1 − e^{2zα₊})))`.
pub fn poincare_flow<T: Real>(s: &T, x: &[T], z: &T) -> Option<Vec<T>> {
    let two = s.int(2);
    let am = x[0].mul(&two.mul(s).exp()?);
    let gap = s.int(1).sub(&two.mul(z).mul(&x[1]).exp()?);
    let arg = s.int(1).sub(&two.mul(s).neg().exp()?.mul(&gap));
    let ap = arg.ln()?.div(&two.mul(z))?;
    Some(vec![am, ap])
}

/// `φ ⊣ P₋ = α₋e^{2v}`, `φ ⊣ P₊ = (1/2z)·ln(1 − e^{−2v}(1 − e^{2zα₊}))`.
pub fn poincare_induced<T: Real>(v: &T, a: &[T], z: &T) -> Option<Vec<T>> {
    let pm = a[0].mul(&v.int(2).mul(v).exp()?);
    let e = v.int(2).mul(z).mul(&a[1]).exp()?;
    let pp = v
        .int(1)
        .sub(&v.int(-2).mul(v).exp()?.mul(&v.int(1).sub(&e)))
        .ln()?
        .mul(&v.int(2).mul(z).inv()?);
    Some(vec![pm, pp])
}

/// `Φˢ(b, a) = (b − (1/4z)(1 − e^{−4za})·s, a)` on coordinates `(H, P)`.
pub fn galilei_flow<T: Real>(s: &T, x: &[T], z: &T) -> Option<Vec<T>> {
    let rate = s
        .int(1)
        .sub(&s.int(-4).mul(z).mul(&x[1]).exp()?)
        .div(&s.int(4).mul(z))?;
    Some(vec![x[0].sub(&rate.mul(s)), x[1].clone()])
}

/// `φ ⊣ H = b − (1/4z)(1 − e^{−4za})·v`, `φ ⊣ P = a`.
pub fn galilei_induced<T: Real>(v: &T, a: &[T], z: &T) -> Option<Vec<T>> {
    let quarter = v.int(4).mul(z).inv()?;
    let h = a[0].add(
        &quarter
            .neg()
            .mul(&v.int(1).sub(&v.int(-4).mul(z).mul(&a[1]).exp()?))
            .mul(v),
    );
    Some(vec![h, a[1].clone()])
}

/// `Φˢ(a, b) = (a/(1 − sa/2κ), b + 2κ·ln(1 − sa/2κ))` on coordinates `(P, H)`.
pub fn kappa_flow<T: Real>(s: &T, x: &[T], kappa: &T) -> Option<Vec<T>> {
    let two_k = s.int(2).mul(kappa);
    let d = s.int(1).sub(&s.mul(&x[0]).div(&two_k)?);
    Some(vec![x[0].div(&d)?, x[1].add(&two_k.mul(&d.ln()?))])
}

/// `φ ⊣ P = a/(1 − av/2κ)`, `φ ⊣ H = b + 2κ·ln(1 − av/2κ)`.
pub fn kappa_induced<T: Real>(v: &T, a: &[T], kappa: &T) -> Option<Vec<T>> {
    let d = v.int(1).sub(&a[0].mul(v).mul(&v.int(2).mul(kappa).inv()?));
    let p = a[0].mul(&d.inv()?);
    let h = a[1].add(&v.int(2).mul(kappa).mul(&d.ln()?));
    Some(vec![p, h])
}

formula!(PoincareFlow, poincare_flow);
formula!(PoincareInduced, poincare_induced);
formula!(GalileiFlow, galilei_flow);
formula!(GalileiInduced, galilei_induced);
formula!(KappaFlow, kappa_flow);
formula!(KappaInduced, kappa_induced);

// ------------------------------------------------------------------ entries

fn poincare() -> CatalogEntry {
    let (primal, dual, bicross, flow, induced, coords) = build(
        "poincare-null-plane",
        vec!["Pm", "Pp"],
        Arc::new(PoincareFlow),
        Arc::new(PoincareInduced),
    );
    CatalogEntry {
        name: "poincare-null-plane",
        primal,
        dual,
        bicross,
        correspondence: vec![0, 1, 2],
        coords,
        flow,
        induced,
        integrals: vec![("h", "Pm*(exp(2*z*Pp) - 1)")],
        printed_integral: Some("Pm*(exp(-2*z*Pp) - 1)"),
        fixed: |x| x[0] == 0.0 && x[1] == 0.0,
        stratum: |x| match (x[0] == 0.0, x[1] == 0.0) {
            (true, true) => "origin",
            (true, false) | (false, true) => "semiaxis",
            _ => "generic",
        },
        strata: &[
            "origin: the fixed point (0,0), stabilized by the whole group",
            "semiaxis: the four open semiaxes, each a single orbit",
            "generic: the rest, foliated by deformed hyperbolic branches",
        ],
        default_value: DEFAULT_Z,
        grid: vec![
            vec![1.0, -0.5],
            vec![0.5, 0.2],
            vec![-1.0, 0.3],
            vec![0.2, -1.0],
            vec![-0.3, 0.0],
        ],
    }
}

fn galilei() -> CatalogEntry {
    let (primal, dual, bicross, flow, induced, coords) = build(
        "galilei-nonstandard",
        vec!["H", "P"],
        Arc::new(GalileiFlow),
        Arc::new(GalileiInduced),
    );
    CatalogEntry {
        name: "galilei-nonstandard",
        primal,
        dual,
        bicross,
        correspondence: vec![0, 1, 2],
        coords,
        flow,
        induced,
        integrals: vec![("P", "P")],
        printed_integral: None,
        fixed: |x| x[1] == 0.0,
        stratum: |x| if x[1] == 0.0 { "fixed-line" } else { "generic" },
        strata: &[
            "fixed-line: the points (b,0), each a fixed point",
            "generic: the rest, foliated by the lines P = a",
        ],
        default_value: DEFAULT_Z,
        grid: vec![
            vec![0.0, 0.5],
            vec![1.0, -0.3],
            vec![-0.5, 1.0],
            vec![2.0, 0.1],
            vec![0.3, -1.0],
        ],
    }
}

fn kappa() -> CatalogEntry {
    let (primal, dual, bicross, flow, induced, coords) = build(
        "galilei-kappa",
        vec!["P", "H"],
        Arc::new(KappaFlow),
        Arc::new(KappaInduced),
    );
    CatalogEntry {
        name: "galilei-kappa",
        primal,
        dual,
        bicross,
        correspondence: vec![0, 1, 2],
        coords,
        flow,
        induced,
        integrals: vec![("h", "P*exp(H/(2*k))")],
        printed_integral: None,
        fixed: |x| x[0] == 0.0,
        stratum: |x| if x[0] == 0.0 { "fixed-line" } else { "generic" },
        strata: &[
            "fixed-line: the points (0,b), each a fixed point",
            "generic: the rest, foliated by one-dimensional orbits",
        ],
        default_value: DEFAULT_KAPPA,
        grid: vec![
            vec![1.0, 0.0],
            vec![0.5, 1.0],
            vec![-1.0, 0.5],
            vec![2.0, -1.0],
            vec![-0.5, -0.5],
        ],
    }
}

// ------------------------------------------------------------------ spec texts

pub const POINCARE: &str = "\
[algebra]
name = poincare-null-plane
parameter = z

[generators]
K = K
Pm = L
Pp = L

[relations]
[Pm, K] = 2*Pm
[Pp, K] = (1/z)*(exp(-2*z*Pp) - 1)
[Pp, Pm] = 0

[coproduct]
K = K @ 1 + exp(-2*z*Pp) @ K
Pm = Pm @ 1 + exp(-2*z*Pp) @ Pm
Pp = Pp @ 1 + 1 @ Pp

[counit]
K = 0
Pm = 0
Pp = 0

[antipode]
K = -exp(2*z*Pp)*K
Pm = -exp(2*z*Pp)*Pm
Pp = -Pp

[star]
K = -K
Pm = Pm
Pp = Pp
";

pub const POINCARE_DUAL: &str = "\
[algebra]
name = poincare-null-plane-dual
parameter = z

[generators]
phi = K
am = L
ap = L

[relations]
[am, phi] = 0
[ap, phi] = z*(exp(-2*phi) - 1)
[ap, am] = -2*z*am

[coproduct]
phi = phi @ 1 + 1 @ phi
am = am @ exp(2*phi) + 1 @ am
ap = ap @ exp(-2*phi) + 1 @ ap

[counit]
phi = 0
am = 0
ap = 0

[antipode]
phi = -phi
am = -am*exp(-2*phi)
ap = -ap*exp(2*phi)
";

pub const POINCARE_BICROSS: &str = "\
[bicross]
name = poincare-null-plane
parameter = z

[generators]
K = K
Pm = L
Pp = L

[coproduct]
Pm = Pm @ 1 + exp(-2*z*Pp) @ Pm
Pp = Pp @ 1 + 1 @ Pp

[counit]
Pm = 0
Pp = 0

[antipode]
Pm = -exp(2*z*Pp)*Pm
Pp = -Pp

[action]
Pm <| K = 2*Pm
Pp <| K = (1/z)*(exp(-2*z*Pp) - 1)

[coaction]
K = exp(-2*z*Pp) @ K

[star]
K = -K
Pm = Pm
Pp = Pp
";

pub const GALILEI: &str = "\
[algebra]
name = galilei-nonstandard
parameter = z

[generators]
K = K
H = L
P = L

[relations]
[H, K] = -(1/(4*z))*(1 - exp(-4*z*P))
[P, K] = 0
[P, H] = 0

[coproduct]
K = K @ 1 + exp(-2*z*P) @ K
H = H @ 1 + exp(-2*z*P) @ H
P = P @ 1 + 1 @ P

[counit]
K = 0
H = 0
P = 0

[antipode]
K = -exp(2*z*P)*K
H = -exp(2*z*P)*H
P = -P

[star]
K = -K
H = H
P = P
";

pub const GALILEI_DUAL: &str = "\
[algebra]
name = galilei-nonstandard-dual
parameter = z

[generators]
v = K
t = L
x = L

[relations]
[t, v] = 0
[x, v] = -2*z*v
[x, t] = -2*z*t

[coproduct]
v = v @ 1 + 1 @ v
t = t @ 1 + 1 @ t
x = x @ 1 + 1 @ x - t @ v

[counit]
v = 0
t = 0
x = 0

[antipode]
v = -v
t = -t
x = -x - t*v
";

pub const GALILEI_BICROSS: &str = "\
[bicross]
name = galilei-nonstandard
parameter = z

[generators]
K = K
H = L
P = L

[coproduct]
H = H @ 1 + exp(-2*z*P) @ H
P = P @ 1 + 1 @ P

[counit]
H = 0
P = 0

[antipode]
H = -exp(2*z*P)*H
P = -P

[action]
H <| K = -(1/(4*z))*(1 - exp(-4*z*P))

[coaction]
K = exp(-2*z*P) @ K

[star]
K = -K
H = H
P = P
";

pub const KAPPA: &str = "\
[algebra]
name = galilei-kappa
parameter = k
inverse = true

[generators]
K = K
P = L
H = L

[relations]
[P, K] = P^2/(2*k)
[H, K] = -P
[H, P] = 0

[coproduct]
K = K @ 1 + exp(-H/k) @ K
P = P @ 1 + exp(-H/k) @ P
H = H @ 1 + 1 @ H

[counit]
K = 0
P = 0
H = 0

[antipode]
K = -exp(H/k)*K
P = -exp(H/k)*P
H = -H

[star]
K = -K
P = P
H = H
";

pub const KAPPA_DUAL: &str = "\
[algebra]
name = galilei-kappa-dual
parameter = k
inverse = true

[generators]
v = K
x = L
t = L

[relations]
[x, v] = v^2/(2*k)
[t, v] = -v/k
[t, x] = -x/k

[coproduct]
v = v @ 1 + 1 @ v
x = x @ 1 + 1 @ x - t @ v
t = t @ 1 + 1 @ t

[counit]
v = 0
x = 0
t = 0

[antipode]
v = -v
x = -x - t*v
t = -t
";

pub const KAPPA_BICROSS: &str = "\
[bicross]
name = galilei-kappa
parameter = k
inverse = true

[generators]
K = K
P = L
H = L

[coproduct]
P = P @ 1 + exp(-H/k) @ P
H = H @ 1 + 1 @ H

[counit]
P = 0
H = 0

[antipode]
P = -exp(H/k)*P
H = -H

[action]
P <| K = P^2/(2*k)
H <| K = -P

[coaction]
K = exp(-H/k) @ K

[star]
K = -K
P = P
H = H
";

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::check_first_integral;
    use crate::hopf::{check_hopf_axioms, work_window};
    use crate::ncalg::{parse_element, NCElement};

    #[test]
    fn names_are_stable_and_unique() {
        assert_eq!(list(), list());
        assert_eq!(list().len(), 3);
        let mut n = list();
        n.dedup();
        assert_eq!(n.len(), 3);
        assert!(matches!(get("galilei-extended"), Err(Error::UnknownEntry(_))));
    }

    #[test]
    fn entry_examples() {
        let w = Window::new(3, 4);
        let p = get("poincare-null-plane").unwrap().primal_spec(w).unwrap();
        let (k, pm) = (NCElement::generator(&p, 0), NCElement::generator(&p, 1));
        let comm = k.mul(&pm).unwrap().sub(&pm.mul(&k).unwrap()).unwrap();
        assert_eq!(comm, parse_element(&p, "-2*Pm").unwrap());

        let d = get("galilei-kappa").unwrap().dual_spec(w).unwrap();
        let (x, t) = (
            NCElement::gen_named(&d, "x").unwrap(),
            NCElement::gen_named(&d, "t").unwrap(),
        );
        let comm = t.mul(&x).unwrap().sub(&x.mul(&t).unwrap()).unwrap();
        assert_eq!(comm, parse_element(&d, "-x/k").unwrap());

        let g = get("galilei-nonstandard").unwrap().dual_spec(w).unwrap();
        let dx = crate::hopf::coproduct(&NCElement::gen_named(&g, "x").unwrap()).unwrap();
        assert_eq!(dx.canonical(), "1 @ x + x @ 1 - t @ v");
    }

    #[test]
    fn integrals_are_conserved() {
        for e in all() {
            let p = e.param(2, 8);
            let x = e.field(&p).unwrap();
            for (n, h) in e.integrals(&p).unwrap() {
                assert!(check_first_integral(&x, &h).is_zero(), "{}: {n}", e.name);
            }
        }
    }

    #[test]
    fn flows_start_at_identity_and_compose() {
        for e in all() {
            let v = e.default_value;
            for x in &e.grid {
                let x0 = e.flow.eval(0.0, x, v).unwrap();
                assert!(x0.iter().zip(x).all(|(u, w)| (u - w).abs() < 1e-12), "{}", e.name);
                let a = e.flow.eval(0.2, &e.flow.eval(0.15, x, v).unwrap(), v).unwrap();
                let b = e.flow.eval(0.35, x, v).unwrap();
                assert!(a.iter().zip(&b).all(|(u, w)| (u - w).abs() < 1e-9), "{}", e.name);
            }
        }
    }

    #[test]
    fn poincare_domain_boundary() {
        let e = get("poincare-null-plane").unwrap();
        let x = [1.0, -0.5];
        let edge = 0.5 * (1.0 - (2.0 * 0.3 * -0.5f64).exp()).ln();
        assert!(e.flow.in_domain(edge + 1e-3, &x, 0.3));
        assert!(!e.flow.in_domain(edge - 1e-3, &x, 0.3));
    }

    #[test]
    fn strata_labels() {
        let p = get("poincare-null-plane").unwrap();
        assert_eq!((p.stratum)(&[0.0, 0.0]), "origin");
        assert_eq!((p.stratum)(&[0.0, -2.0]), "semiaxis");
        assert_eq!((p.stratum)(&[1.0, 1.0]), "generic");
        assert!((get("galilei-nonstandard").unwrap().fixed)(&[3.0, 0.0]));
        assert!(!(get("galilei-kappa").unwrap().fixed)(&[1.0, 0.0]));
    }

    #[test]
    fn duals_are_hopf_at_degree_two() {
        for e in all() {
            let r = check_hopf_axioms(&e.dual_spec(work_window(2, 3, 2)).unwrap(), 2);
            assert!(r.passed(), "{}", r.to_text());
        }
    }
}
