//! Coproduct, counit and antipode on arbitrary elements, and truncated
//! verification of the Hopf axioms.

use std::sync::Arc;

use crate::error::Result;
use crate::multiindex::MultiIndex;
use crate::ncalg::{nc_mul, NCElement, Spec, SpecSource, TensorElement, Window};
use crate::par;
use crate::paramseries::ParamSeries;
use crate::report::{CheckResult, Report};

/// Materialization window under which checks at output degree ≤ `d` are exact.
///
/// Rewriting can lower the generator degree only by trading a parameter order
/// (dual algebras) or a K-sector generator (primal algebras), so anything
/// dropped above this cap cannot come back below `d` within order `z`.
pub fn work_window(d: u32, z: u32, bottom: u32) -> Window {
    Window {
        degree: (3 * d).max(d + z) + 2,
        zorder: z,
        bottom,
    }
}

fn mono_elem(spec: &Spec, m: &MultiIndex) -> NCElement {
    NCElement::monomial(spec, m.clone(), ParamSeries::one(spec.param()))
}

pub fn mono_coproduct(spec: &Spec, m: &MultiIndex) -> Result<TensorElement> {
    let mut acc = TensorElement::one(&[spec.clone(), spec.clone()]);
    for (g, &e) in m.entries().iter().enumerate() {
        if e == 0 {
            continue;
        }
        let dg = spec.coproduct_of(g)?;
        for _ in 0..e {
            acc = acc.mul(&dg)?;
        }
    }
    Ok(acc)
}

/// Multiplicative extension of the generator coproducts.
pub fn coproduct(el: &NCElement) -> Result<TensorElement> {
    let spec = el.spec();
    let mut acc = TensorElement::zero(&[spec.clone(), spec.clone()]);
    for (m, c) in el.terms() {
        acc = acc.add(&mono_coproduct(spec, m)?.scale(c))?;
    }
    Ok(acc)
}

pub fn mono_counit(spec: &Spec, m: &MultiIndex) -> Result<ParamSeries> {
    let mut acc = ParamSeries::one(spec.param());
    for (g, &e) in m.entries().iter().enumerate() {
        if e > 0 {
            acc = acc.mul_ref(&spec.counit_of(g)?.pow(e));
        }
    }
    Ok(acc)
}

pub fn counit(el: &NCElement) -> Result<ParamSeries> {
    let mut acc = ParamSeries::zero(el.spec().param());
    for (m, c) in el.terms() {
        acc.add_assign_ref(&c.mul_ref(&mono_counit(el.spec(), m)?));
    }
    Ok(acc)
}

/// `S(g_1^{m_1} ⋯ g_n^{m_n}) = S(g_n)^{m_n} ⋯ S(g_1)^{m_1}`.
pub fn mono_antipode(spec: &Spec, m: &MultiIndex) -> Result<NCElement> {
    let mut acc = NCElement::one(spec);
    for (g, &e) in m.entries().iter().enumerate().rev() {
        if e > 0 {
            acc = nc_mul(&acc, &spec.antipode_of(g)?.pow(e)?)?;
        }
    }
    Ok(acc)
}

pub fn antipode(el: &NCElement) -> Result<NCElement> {
    let spec = el.spec();
    let mut acc = NCElement::zero(spec);
    for (m, c) in el.terms() {
        acc = acc.add(&mono_antipode(spec, m)?.scale(c))?;
    }
    Ok(acc)
}

fn mono_text(spec: &Spec, m: &MultiIndex) -> String {
    mono_elem(spec, m).canonical()
}

/// First failing sample (in order), or `None`.
fn first_failure<T: Sync>(items: &[T], f: impl Fn(&T) -> Result<Option<String>> + Sync + Send) -> Option<String> {
    par::map(items, |x| match f(x) {
        Ok(v) => v,
        Err(e) => Some(format!("error: {e}")),
    })
    .into_iter()
    .flatten()
    .next()
}

/// Checks every Hopf axiom on all monomials of total degree ≤ `d`, comparing
/// outputs up to degree `d` at the spec's parameter order.
pub fn check_hopf_axioms(spec: &Spec, d: u32) -> Report {
    let z = spec.window().zorder;
    let monos = MultiIndex::all_up_to(spec.ngens(), d);
    let mut report = Report::new(&format!("hopf axioms: {}", spec.name()));

    let coassoc = first_failure(&monos, |m| {
        let dm = mono_coproduct(spec, m)?;
        let left = dm.expand_slot(0, |a| mono_coproduct(spec, a))?;
        let right = dm.expand_slot(1, |a| mono_coproduct(spec, a))?;
        Ok((left.upto(d) != right.upto(d)).then(|| mono_text(spec, m)))
    });
    report.results.push(CheckResult::new("coassociativity", coassoc, d, z));

    for (name, slot) in [("counit-left", 0usize), ("counit-right", 1)] {
        let fail = first_failure(&monos, |m| {
            let dm = mono_coproduct(spec, m)?;
            let got = dm.contract(spec, |k| {
                Ok(mono_elem(spec, &k[1 - slot]).scale(&mono_counit(spec, &k[slot])?))
            })?;
            Ok((got.upto(d) != mono_elem(spec, m).upto(d)).then(|| mono_text(spec, m)))
        });
        report.results.push(CheckResult::new(name, fail, d, z));
    }

    for (name, left) in [("antipode-left", true), ("antipode-right", false)] {
        let fail = first_failure(&monos, |m| {
            let dm = mono_coproduct(spec, m)?;
            let got = dm.contract(spec, |k| {
                if left {
                    nc_mul(&mono_antipode(spec, &k[0])?, &mono_elem(spec, &k[1]))
                } else {
                    nc_mul(&mono_elem(spec, &k[0]), &mono_antipode(spec, &k[1])?)
                }
            })?;
            let expect = NCElement::scalar(spec, mono_counit(spec, m)?);
            Ok((got.upto(d) != expect.upto(d)).then(|| mono_text(spec, m)))
        });
        report.results.push(CheckResult::new(name, fail, d, z));
    }

    let n = spec.ngens();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|j| (0..j).map(move |i| (j, i))).collect();
    let label = |&(j, i): &(usize, usize)| format!("[{}, {}]", spec.gen_name(j), spec.gen_name(i));
    let rule = |j: usize, i: usize| -> NCElement {
        match spec.rule(j, i) {
            Some(p) => {
                let mut e = NCElement::zero(spec);
                for (m, c) in p {
                    e = e
                        .add(&NCElement::monomial(spec, m.clone(), c.clone()))
                        .expect("same spec");
                }
                e
            }
            None => NCElement::zero(spec),
        }
    };

    let fail = first_failure(&pairs, |&(j, i)| {
        let (dj, di) = (spec.coproduct_of(j)?, spec.coproduct_of(i)?);
        let lhs = dj.mul(&di)?.sub(&di.mul(&dj)?)?;
        let rhs = coproduct(&rule(j, i))?;
        Ok((lhs.upto(d) != rhs.upto(d)).then(|| label(&(j, i))))
    });
    report.results.push(CheckResult::new("relations-coproduct", fail, d, z));

    let fail = first_failure(&pairs, |&(j, i)| {
        Ok((!counit(&rule(j, i))?.is_zero()).then(|| label(&(j, i))))
    });
    report.results.push(CheckResult::new("relations-counit", fail, d, z));

    let fail = first_failure(&pairs, |&(j, i)| {
        let (sj, si) = (spec.antipode_of(j)?, spec.antipode_of(i)?);
        let lhs = nc_mul(&si, &sj)?.sub(&nc_mul(&sj, &si)?)?;
        let rhs = antipode(&rule(j, i))?;
        Ok((lhs.upto(d) != rhs.upto(d)).then(|| label(&(j, i))))
    });
    report.results.push(CheckResult::new("relations-antipode", fail, d, z));

    report
}

/// Materializes at the exact working window and runs [`check_hopf_axioms`].
pub fn check_hopf(src: &Arc<SpecSource>, d: u32, z: u32) -> Result<Report> {
    let spec = src.materialize(work_window(d, z, 2))?;
    Ok(check_hopf_axioms(&spec, d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ncalg::parse_element;
    use crate::paramseries::qi;

    const KAPPA: &str = "
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
";

    const POINCARE: &str = "
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
";

    fn load(text: &str, w: Window) -> Spec {
        Arc::new(SpecSource::from_text(text).unwrap()).materialize(w).unwrap()
    }

    #[test]
    fn structure_map_examples() {
        let s = load(POINCARE, Window::new(4, 4));
        let el = |t: &str| parse_element(&s, t).unwrap();
        let pp = el("Pp");
        let one = NCElement::one(&s);
        let pair = [s.clone(), s.clone()];
        assert_eq!(coproduct(&one).unwrap(), TensorElement::one(&pair));
        assert_eq!(coproduct(&pp).unwrap().canonical(), "1 @ Pp + Pp @ 1");
        assert_eq!(
            coproduct(&el("Pp^2")).unwrap().canonical(),
            "1 @ Pp^2 + 2*Pp @ Pp + Pp^2 @ 1"
        );
        assert_eq!(counit(&one).unwrap(), ParamSeries::one(s.param()));
        assert!(counit(&el("K^2*Pm")).unwrap().is_zero());
        assert_eq!(counit(&el("3 + K")).unwrap(), ParamSeries::constant(s.param(), qi(3)));
        assert_eq!(antipode(&one).unwrap(), one);
        assert_eq!(antipode(&pp).unwrap(), pp.neg());
    }

    #[test]
    fn kappa_antipode_of_p_is_dressed() {
        let s = load(KAPPA, Window::new(4, 4));
        let p = parse_element(&s, "P").unwrap();
        let expect = parse_element(&s, "-P - 1/k*P*H - 1/(2*k^2)*P*H^2 - 1/(6*k^3)*P*H^3").unwrap();
        assert_eq!(antipode(&p).unwrap(), expect);
    }

    #[test]
    fn catalog_like_specs_pass() {
        for text in [KAPPA, POINCARE] {
            let r = check_hopf(&Arc::new(SpecSource::from_text(text).unwrap()), 3, 4).unwrap();
            assert!(r.passed(), "{}", r.to_text());
        }
    }

    #[test]
    fn mutated_antipode_is_caught() {
        let bad = POINCARE.replace("Pp = -Pp", "Pp = Pp");
        let r = check_hopf(&Arc::new(SpecSource::from_text(&bad).unwrap()), 2, 3).unwrap();
        let a = r.get("antipode-left").unwrap();
        assert!(!a.passed());
        assert_eq!(a.counterexample.as_deref(), Some("Pp"));
    }

    #[test]
    fn exact_window_is_stable() {
        // results at the working window agree with a wider one
        let src = Arc::new(SpecSource::from_text(POINCARE).unwrap());
        let w = work_window(3, 4, 2);
        let a = src.materialize(w).unwrap();
        let b = src
            .materialize(Window {
                degree: w.degree + 2,
                ..w
            })
            .unwrap();
        for m in MultiIndex::all_up_to(3, 3) {
            let x = mono_antipode(&a, &m).unwrap().upto(3);
            let y = mono_antipode(&b, &m).unwrap().upto(3).transport(&a).unwrap();
            assert_eq!(x, y, "{m:?}");
        }
    }

    #[test]
    fn multiplicativity() {
        let s = load(KAPPA, work_window(2, 4, 2));
        let samples = ["K + P", "H^2 - 2*K", "K*P + 1/k*H", "P*H"];
        for a in samples {
            for b in samples {
                let (x, y) = (parse_element(&s, a).unwrap(), parse_element(&s, b).unwrap());
                let xy = nc_mul(&x, &y).unwrap();
                assert_eq!(
                    coproduct(&xy).unwrap().upto(4),
                    coproduct(&x).unwrap().mul(&coproduct(&y).unwrap()).unwrap().upto(4)
                );
                assert_eq!(
                    antipode(&xy).unwrap().upto(4),
                    nc_mul(&antipode(&y).unwrap(), &antipode(&x).unwrap()).unwrap().upto(4)
                );
            }
        }
    }
}
