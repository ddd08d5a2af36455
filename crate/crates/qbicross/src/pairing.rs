//! Nondegenerate pairing between an algebra and its dual through dual
//! monomial bases: `⟨g^m, γ^{m′}⟩ = m!·δ_{m,m′}`.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::hopf::{antipode, coproduct, counit};
use crate::multiindex::{mfactorial, MultiIndex};
use crate::ncalg::{nc_mul, NCElement, Sector, Spec, TensorElement};
use crate::par;
use crate::paramseries::{ParamSeries, Q};
use crate::report::{CheckResult, Report};

/// A primal/dual couple with the generator correspondence `primal i ↔ dual corr[i]`.
#[derive(Clone, Debug)]
pub struct DualPairSpec {
    pub primal: Spec,
    pub dual: Spec,
    pub corr: Vec<usize>,
}

impl DualPairSpec {
    /// Pairs generators in declaration order.
    pub fn new(primal: Spec, dual: Spec) -> Result<Self> {
        let corr = (0..primal.ngens()).collect();
        Self::with_correspondence(primal, dual, corr)
    }

    pub fn with_correspondence(primal: Spec, dual: Spec, corr: Vec<usize>) -> Result<Self> {
        if primal.ngens() != dual.ngens() || corr.len() != primal.ngens() {
            return Err(Error::Dimension {
                expected: primal.ngens(),
                got: dual.ngens(),
            });
        }
        let mut seen = corr.clone();
        seen.sort_unstable();
        if seen != (0..primal.ngens()).collect::<Vec<_>>() {
            return Err(Error::Spec("generator correspondence is not a bijection".into()));
        }
        for (i, &j) in corr.iter().enumerate() {
            if primal.sector(i) != dual.sector(j) {
                return Err(Error::Spec(format!(
                    "sector mismatch between `{}` and `{}`",
                    primal.gen_name(i),
                    dual.gen_name(j)
                )));
            }
        }
        if !primal.param().same_symbol(dual.param()) {
            return Err(Error::ParamMismatch {
                left: primal.param().name().into(),
                right: dual.param().name().into(),
            });
        }
        Ok(DualPairSpec { primal, dual, corr })
    }

    /// The dual monomial matching a primal one.
    pub fn dual_index(&self, m: &MultiIndex) -> MultiIndex {
        let mut out = vec![0; m.len()];
        for (i, &e) in m.entries().iter().enumerate() {
            out[self.corr[i]] = e;
        }
        MultiIndex::new(out)
    }

    fn check_sides(&self, h: &NCElement, eta: &NCElement) -> Result<()> {
        if h.spec().id() != self.primal.id() || eta.spec().id() != self.dual.id() {
            return Err(Error::SpecMismatch);
        }
        Ok(())
    }
}

fn fact_q(m: &MultiIndex) -> Q {
    Q::from_integer(BigInt::from(mfactorial(m)))
}

/// `⟨h, η⟩ = Σ c_m d_{m′} m!` over matching monomials.
pub fn pair(dp: &DualPairSpec, h: &NCElement, eta: &NCElement) -> Result<ParamSeries> {
    dp.check_sides(h, eta)?;
    let mut acc = ParamSeries::zero(dp.primal.param());
    for (m, c) in h.terms() {
        if let Some(d) = eta.terms().get(&dp.dual_index(m)) {
            acc.add_assign_ref(&c.mul_ref(&d.rewindow(dp.primal.param())).scale(&fact_q(m)));
        }
    }
    Ok(acc)
}

/// `⟨h ⊗ h′, η ⊗ η′⟩ = ⟨h, η⟩⟨h′, η′⟩` on two-fold tensors.
pub fn pair_tensor(dp: &DualPairSpec, x: &TensorElement, y: &TensorElement) -> Result<ParamSeries> {
    if x.arity() != y.arity() {
        return Err(Error::Dimension {
            expected: x.arity(),
            got: y.arity(),
        });
    }
    let mut acc = ParamSeries::zero(dp.primal.param());
    for (k, c) in x.terms() {
        let dk: Vec<MultiIndex> = k.iter().map(|m| dp.dual_index(m)).collect();
        if let Some(d) = y.terms().get(&dk) {
            let w = k.iter().fold(Q::one(), |a, m| a * fact_q(m));
            acc.add_assign_ref(&c.mul_ref(&d.rewindow(dp.primal.param())).scale(&w));
        }
    }
    Ok(acc)
}

fn basis(spec: &Spec, d: u32) -> Vec<NCElement> {
    crate::ncalg::basis_upto(spec, d)
}

/// Pairing axioms on all monomials of degree ≤ `d` in each slot
/// (the single-element slot ranges up to `2d`).
pub fn check_pairing_axioms(dp: &DualPairSpec, d: u32) -> Report {
    let z = dp.primal.window().zorder;
    let mut report = Report::new(&format!("pairing: {} / {}", dp.primal.name(), dp.dual.name()));
    let (hs, etas) = (basis(&dp.primal, d), basis(&dp.dual, d));
    let (hs2, etas2) = (basis(&dp.primal, 2 * d), basis(&dp.dual, 2 * d));
    let fail = |e: Error| Some(format!("error: {e}"));

    // ⟨h, ηη′⟩ = ⟨Δh, η⊗η′⟩
    let r = par::map(&hs2, |h| -> Option<String> {
        let dh = match coproduct(h) {
            Ok(x) => x,
            Err(e) => return fail(e),
        };
        for a in &etas {
            for b in &etas {
                let lhs = nc_mul(a, b).and_then(|ab| pair(dp, h, &ab));
                let rhs = pair_tensor(dp, &dh, &TensorElement::pure(&[a, b]));
                match (lhs, rhs) {
                    (Ok(l), Ok(r)) if l == r => {}
                    (Err(e), _) | (_, Err(e)) => return fail(e),
                    _ => return Some(format!("h={h}, η={a}, η′={b}")),
                }
            }
        }
        None
    });
    report.results.push(CheckResult::new(
        "product-coproduct",
        r.into_iter().flatten().next(),
        d,
        z,
    ));

    // ⟨hh′, η⟩ = ⟨h⊗h′, Δη⟩
    let r = par::map(&etas2, |eta| -> Option<String> {
        let de = match coproduct(eta) {
            Ok(x) => x,
            Err(e) => return fail(e),
        };
        for a in &hs {
            for b in &hs {
                let lhs = nc_mul(a, b).and_then(|ab| pair(dp, &ab, eta));
                let rhs = pair_tensor(dp, &TensorElement::pure(&[a, b]), &de);
                match (lhs, rhs) {
                    (Ok(l), Ok(r)) if l == r => {}
                    (Err(e), _) | (_, Err(e)) => return fail(e),
                    _ => return Some(format!("h={a}, h′={b}, η={eta}")),
                }
            }
        }
        None
    });
    report.results.push(CheckResult::new(
        "coproduct-product",
        r.into_iter().flatten().next(),
        d,
        z,
    ));

    // ⟨1, η⟩ = ε′(η) and ⟨h, 1⟩ = ε(h)
    let one_p = NCElement::one(&dp.primal);
    let one_d = NCElement::one(&dp.dual);
    let mut unit_fail = None;
    for eta in &etas2 {
        match (pair(dp, &one_p, eta), counit(eta)) {
            (Ok(l), Ok(r)) if l == r.rewindow(dp.primal.param()) => {}
            _ => {
                unit_fail = Some(format!("⟨1, {eta}⟩"));
                break;
            }
        }
    }
    if unit_fail.is_none() {
        for h in &hs2 {
            match (pair(dp, h, &one_d), counit(h)) {
                (Ok(l), Ok(r)) if l == r => {}
                _ => {
                    unit_fail = Some(format!("⟨{h}, 1⟩"));
                    break;
                }
            }
        }
    }
    report.results.push(CheckResult::new("unit-counit", unit_fail, d, z));

    // ⟨h, S′η⟩ = ⟨Sh, η⟩
    let r = par::map(&hs, |h| -> Option<String> {
        let sh = match antipode(h) {
            Ok(x) => x,
            Err(e) => return fail(e),
        };
        for eta in &etas2 {
            let lhs = antipode(eta).and_then(|se| pair(dp, h, &se));
            let rhs = pair(dp, &sh, eta);
            match (lhs, rhs) {
                (Ok(l), Ok(r)) if l == r => {}
                (Err(e), _) | (_, Err(e)) => return fail(e),
                _ => return Some(format!("h={h}, η={eta}")),
            }
        }
        None
    });
    report
        .results
        .push(CheckResult::new("antipode", r.into_iter().flatten().next(), d, z));
    report
}

/// Matrix of the adjoint `f†` on dual monomials of degree ≤ `probe`:
/// entry `[a][b]` is the coefficient of `η_a` in `f†η_b`, i.e. `⟨f h_a, η_b⟩ / a!`.
pub fn adjoint_map(
    dp: &DualPairSpec,
    f: impl Fn(&NCElement) -> Result<NCElement>,
    probe: u32,
) -> Result<(Vec<MultiIndex>, Vec<Vec<ParamSeries>>)> {
    if probe > dp.primal.window().degree || probe > dp.dual.window().degree {
        return Err(Error::Precondition(format!(
            "probe degree {probe} exceeds the degree cap"
        )));
    }
    let monos = MultiIndex::all_up_to(dp.primal.ngens(), probe);
    let mut mat = Vec::with_capacity(monos.len());
    for a in &monos {
        let fh = f(&NCElement::monomial(
            &dp.primal,
            a.clone(),
            ParamSeries::one(dp.primal.param()),
        ))?;
        let inv = fact_q(a).recip();
        let row = monos
            .iter()
            .map(|b| {
                let eta = NCElement::monomial(&dp.dual, dp.dual_index(b), ParamSeries::one(dp.dual.param()));
                pair(dp, &fh, &eta).map(|v| v.scale(&inv))
            })
            .collect::<Result<Vec<_>>>()?;
        mat.push(row);
    }
    Ok((monos, mat))
}

/// Pairing restricted to one sector: used to test that the pairing factors over the two sectors.
pub fn pair_sector(dp: &DualPairSpec, sector: Sector, h: &NCElement, eta: &NCElement) -> Result<ParamSeries> {
    dp.check_sides(h, eta)?;
    for m in h.terms().keys() {
        if m.entries()
            .iter()
            .enumerate()
            .any(|(g, &e)| e > 0 && dp.primal.sector(g) != sector)
        {
            return Err(Error::Precondition(format!("{h} is not in the {sector:?} sector")));
        }
    }
    pair(dp, h, eta)
}

/// Verifies `⟨kl, κλ⟩ = ⟨k, κ⟩⟨l, λ⟩` on the given factored samples.
pub fn check_product_pairing(
    dp: &DualPairSpec,
    ks: &[NCElement],
    ls: &[NCElement],
    kappas: &[NCElement],
    lambdas: &[NCElement],
) -> Result<Option<String>> {
    for k in ks {
        for l in ls {
            let kl = nc_mul(k, l)?;
            for kappa in kappas {
                let pk = pair_sector(dp, Sector::K, k, kappa)?;
                for lambda in lambdas {
                    let lhs = pair(dp, &kl, &nc_mul(kappa, lambda)?)?;
                    let rhs = pk.mul_ref(&pair_sector(dp, Sector::L, l, lambda)?);
                    if lhs != rhs {
                        return Ok(Some(format!("k={k}, l={l}, κ={kappa}, λ={lambda}")));
                    }
                }
            }
        }
    }
    Ok(None)
}

/// Gram matrix on monomials of degree ≤ `d`: returns the first off-diagonal or zero-diagonal entry.
pub fn gram_defect(dp: &DualPairSpec, d: u32) -> Result<Option<(MultiIndex, MultiIndex)>> {
    let monos = MultiIndex::all_up_to(dp.primal.ngens(), d);
    for a in &monos {
        let h = NCElement::monomial(&dp.primal, a.clone(), ParamSeries::one(dp.primal.param()));
        for b in &monos {
            let eta = NCElement::monomial(&dp.dual, dp.dual_index(b), ParamSeries::one(dp.dual.param()));
            let v = pair(dp, &h, &eta)?;
            let ok = if a == b {
                v == ParamSeries::constant(dp.primal.param(), fact_q(a)) && !fact_q(a).is_zero()
            } else {
                v.is_zero()
            };
            if !ok {
                return Ok(Some((a.clone(), b.clone())));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::hopf::work_window;
    use crate::ncalg::{parse_element, Window};

    #[test]
    fn poincare_monomial_pairing() {
        let dp = catalog::get("poincare-null-plane")
            .unwrap()
            .pairing(Window::new(5, 4))
            .unwrap();
        let h = parse_element(&dp.primal, "K^2*Pm*Pp").unwrap();
        let eta = parse_element(&dp.dual, "phi^2*am*ap").unwrap();
        assert_eq!(
            pair(&dp, &h, &eta).unwrap().as_constant(),
            Some(crate::paramseries::qi(2))
        );
        let off = parse_element(&dp.dual, "phi*am*ap").unwrap();
        assert!(pair(&dp, &h, &off).unwrap().is_zero());
        assert_eq!(gram_defect(&dp, 3).unwrap(), None);
    }

    #[test]
    fn catalog_pairing_axioms() {
        for e in catalog::all() {
            let dp = e.pairing(work_window(4, 3, 2)).unwrap();
            let r = check_pairing_axioms(&dp, 2);
            assert!(r.passed(), "{}", r.to_text());
        }
    }

    #[test]
    fn mismatched_sides_are_rejected() {
        let dp = catalog::get("galilei-kappa")
            .unwrap()
            .pairing(Window::new(3, 3))
            .unwrap();
        let h = parse_element(&dp.primal, "K").unwrap();
        assert_eq!(pair(&dp, &h, &h), Err(Error::SpecMismatch));
        let bad = DualPairSpec::with_correspondence(dp.primal.clone(), dp.dual.clone(), vec![0, 0, 1]);
        assert!(bad.is_err());
    }

    #[test]
    fn adjoint_of_left_multiplication() {
        // f = left multiplication by K; f† on the dual basis is read off the pairing
        let dp = catalog::get("galilei-kappa")
            .unwrap()
            .pairing(Window::new(4, 4))
            .unwrap();
        let k = parse_element(&dp.primal, "K").unwrap();
        let (monos, mat) = adjoint_map(&dp, |h| nc_mul(&k, h), 2).unwrap();
        let one = monos.iter().position(|m| m.is_zero()).unwrap();
        let kpos = monos.iter().position(|m| m.entries() == [1, 0, 0]).unwrap();
        // K·1 = K pairs with v only
        assert_eq!(mat[one][kpos].as_constant(), Some(crate::paramseries::qi(1)));
        assert!(mat[one].iter().enumerate().all(|(b, c)| b == kpos || c.is_zero()));
    }

    #[test]
    fn product_pairing_factorizes() {
        let dp = catalog::get("poincare-null-plane")
            .unwrap()
            .pairing(Window::new(6, 4))
            .unwrap();
        let p = |t: &str| parse_element(&dp.primal, t).unwrap();
        let d = |t: &str| parse_element(&dp.dual, t).unwrap();
        let ks = [p("1"), p("K"), p("K^2")];
        let ls = [p("Pm"), p("Pp^2"), p("Pm*Pp")];
        let kappas = [d("1"), d("phi"), d("phi^2")];
        let lambdas = [d("am"), d("ap^2"), d("am*ap")];
        assert_eq!(check_product_pairing(&dp, &ks, &ls, &kappas, &lambdas).unwrap(), None);
    }
}
