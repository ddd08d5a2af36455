//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the libtest
//! harness so the lines always show up in `cargo test` output.

use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use qbicross::bicross::{build_bicross, check_compatibility, check_reconstruction, check_star, BicrossModel};
use qbicross::catalog::{self, CatalogEntry};
use qbicross::expr::{parse_exppoly, ExpPoly};
use qbicross::flows::{check_first_integral, flow_numeric, flow_series, StepControl};
use qbicross::hopf::{check_hopf, work_window};
use qbicross::induction::{check_rep_relations, check_skew_symmetry, equivalence_check, induce};
use qbicross::multiindex::MultiIndex;
use qbicross::ncalg::{adjoint_power_expand, nc_mul, normal_order, NCElement, Side, Spec, Window};
use qbicross::pairing::{check_pairing_axioms, gram_defect};

/// Wall-clock budget for criterion 1.
const HOPF_BUDGET: Duration = Duration::from_secs(60);
/// Criterion 5 tolerances.
const TAYLOR_TOL: f64 = 1e-10;
const RK4_TOL: f64 = 1e-8;
const GROUP_LAW_TOL: f64 = 1e-9;
/// Criterion 8 tolerance is `induction::EQUIV_TOL` (1e-8), pinned below.
const EQUIV_TOL: f64 = 1e-8;

type Outcome = Result<(), String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Outcome {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

// 1. Hopf axioms for the six catalog specs at degree ≤ 3, parameter order 4.
fn hopf_axioms() -> Outcome {
    let start = Instant::now();
    for e in catalog::all() {
        for src in [&e.primal, &e.dual] {
            let r = check_hopf(src, 3, 4).map_err(err)?;
            ensure(r.passed(), || r.to_text())?;
        }
    }
    let took = start.elapsed();
    ensure(took < HOPF_BUDGET, || format!("took {took:?}"))
}

// 2. Reconstruction at the same window and compatibility at degree ≤ 2.
fn reconstruction() -> Outcome {
    for e in catalog::all() {
        let w = work_window(2, 4, 2);
        let model = BicrossModel::new(&e.bicross, w).map_err(err)?;
        let built = build_bicross(&e.bicross, w).map_err(err)?;
        let direct = e.primal_spec(w).map_err(err)?;
        let r = check_reconstruction(&model, &built, &direct, 2);
        ensure(r.passed(), || r.to_text())?;
        let r = check_compatibility(&model, 2);
        ensure(r.passed(), || r.to_text())?;
    }
    Ok(())
}

// 3. Diagonal monomial pairing to degree 3 and the pairing axioms at degree 2.
fn pairing() -> Outcome {
    for e in catalog::all() {
        let dp = e.pairing(work_window(3, 4, 2)).map_err(err)?;
        let defect = gram_defect(&dp, 3).map_err(err)?;
        ensure(defect.is_none(), || format!("{}: {defect:?}", e.name))?;
        let dp = e.pairing(work_window(2, 4, 2)).map_err(err)?;
        let r = check_pairing_axioms(&dp, 2);
        ensure(r.passed(), || r.to_text())?;
    }
    Ok(())
}

// 4. Iterated-commutator expansion against straightening of the raw word.
// Terms at the degree cap depend on where exponential relations are cut, so
// outputs are compared on degrees ≤ m + 1 inside a window with room above that.
fn adjoint_expansion() -> Outcome {
    const CAP: u32 = 8;
    let specs: Vec<Spec> = catalog::all()
        .iter()
        .flat_map(|e| [e.primal_spec(Window::new(CAP, 4)), e.dual_spec(Window::new(CAP, 4))])
        .collect::<Result<_, _>>()
        .map_err(err)?;
    for s in &specs {
        let n = s.ngens();
        for a in 0..n {
            for b in 0..n {
                let (ga, gb) = (NCElement::generator(s, a), NCElement::generator(s, b));
                for m in 0..=4u32 {
                    let d = m + 1;
                    let left = adjoint_power_expand(&ga, &gb, m, Side::Left).map_err(err)?.upto(d);
                    let word = normal_order(s, &[(a, m), (b, 1)]).map_err(err)?.upto(d);
                    let product = nc_mul(&ga.pow(m).map_err(err)?, &gb).map_err(err)?.upto(d);
                    let name = |side| format!("{}: {}^{m} with {} ({side})", s.name(), s.gen_name(a), s.gen_name(b));
                    ensure(left == word && left == product, || name("left"))?;
                    let right = adjoint_power_expand(&ga, &gb, m, Side::Right).map_err(err)?.upto(d);
                    let word = normal_order(s, &[(b, 1), (a, m)]).map_err(err)?.upto(d);
                    ensure(right == word, || name("right"))?;
                }
            }
        }
    }
    Ok(())
}

// 5. Flow series vs closed-form Taylor coefficients, RK4 vs closed form, group law.
fn flows() -> Outcome {
    for e in catalog::all() {
        let p = e.param(2, 10);
        let x = e.field(&p).map_err(err)?;
        let oracle = e.flow.taylor(&p, e.vars(), 8).map_err(err)?;
        for (j, want) in oracle.iter().enumerate() {
            let got = flow_series(&x, &x.coordinate(j), 8);
            for (k, (g, w)) in got.iter().zip(want).enumerate() {
                if g == w {
                    continue;
                }
                // not equal as exact series: fall back to values on the grid
                for pt in &e.grid {
                    let (a, b) = (
                        g.eval(pt, e.default_value).map_err(err)?,
                        w.eval(pt, e.default_value).map_err(err)?,
                    );
                    ensure((a - b).abs() < TAYLOR_TOL, || {
                        format!("{}: x{j}, s^{k} at {pt:?}", e.name)
                    })?;
                }
            }
        }
        for pt in &e.grid {
            for s in [0.1, 0.25, 0.5] {
                let num = flow_numeric(&x, pt, s, e.default_value, StepControl::default()).map_err(err)?;
                let closed = e.flow.eval(s, pt, e.default_value).map_err(err)?;
                let d = max_diff(&num.x, &closed);
                ensure(d < RK4_TOL, || format!("{}: RK4 at {pt:?}, s={s}: {d:e}", e.name))?;
            }
            let (s1, s2) = (0.2, 0.3);
            let one = e.flow.eval(s1 + s2, pt, e.default_value).map_err(err)?;
            let two = e
                .flow
                .eval(s2, &e.flow.eval(s1, pt, e.default_value).map_err(err)?, e.default_value)
                .map_err(err)?;
            ensure(max_diff(&one, &two) < GROUP_LAW_TOL, || {
                format!("{}: group law at {pt:?}", e.name)
            })?;
        }
    }
    Ok(())
}

// 6. Registered integrals are conserved; the printed Poincaré form has the known residual.
fn integrals() -> Outcome {
    for e in catalog::all() {
        let p = e.param(2, 8);
        let x = e.field(&p).map_err(err)?;
        for (name, h) in e.integrals(&p).map_err(err)? {
            let r = check_first_integral(&x, &h);
            ensure(r.is_zero(), || format!("{}: X({name}) = {r}", e.name))?;
        }
    }
    let e = catalog::get("poincare-null-plane").map_err(err)?;
    let p = e.param(2, 8);
    let x = e.field(&p).map_err(err)?;
    let printed = e.printed_integral(&p).expect("printed form").map_err(err)?;
    let want = parse_exppoly("-2*Pm*(exp(-2*z*Pp) - 1)^2", &p, &e.coords).map_err(err)?;
    let got = check_first_integral(&x, &printed);
    ensure(got == want, || format!("printed residual {got}"))
}

// 7. Induced multiplication series vs closed forms, representation property, character reproduction.
fn induced() -> Outcome {
    for e in catalog::all() {
        let model = e.model(Window::new(9, 10)).map_err(err)?;
        let p = e.param(2, 10);
        let rep = induce(&model, &p, 8).map_err(err)?;
        let oracle = e.induced.taylor(&p, rep.vars.clone(), 6).map_err(err)?;
        for (j, coeffs) in oracle.iter().enumerate() {
            for (k, want) in coeffs.iter().enumerate() {
                let got = rep.mult[j].get(&MultiIndex::new(vec![k as u32])).cloned();
                let got = got.unwrap_or_else(|| ExpPoly::zero(&p, rep.vars.clone()));
                ensure(got == *want, || format!("{}: M_{j}, v^{k}", e.name))?;
            }
        }
        let r = check_rep_relations(&rep, &e.primal, 4);
        ensure(r.passed(), || r.to_text())?;
        for a in &e.grid {
            for j in 0..a.len() {
                let c0 = rep.mult[j][&MultiIndex::new(vec![0])]
                    .eval(a, e.default_value)
                    .map_err(err)?;
                ensure(c0 == a[j], || format!("{}: constant term at {a:?}", e.name))?;
            }
        }
    }
    Ok(())
}

fn integral_values(e: &CatalogEntry, pt: &[f64]) -> Result<Vec<f64>, String> {
    let p = e.param(2, 4);
    e.integrals(&p)
        .map_err(err)?
        .iter()
        .map(|(_, h)| h.eval(pt, e.default_value).map_err(err))
        .collect()
}

// 8. Intertwiner identity on sampled data, and the cross-orbit negative control.
fn equivalence() -> Outcome {
    assert_eq!(qbicross::induction::EQUIV_TOL, EQUIV_TOL);
    let grid = [0.0, 0.05, 0.1, 0.2, 0.3];
    let kappas = vec![vec![1.0], vec![0.0, 1.0], vec![0.0, 0.0, 1.0], vec![0.5, -1.0, 0.25]];
    for e in catalog::all() {
        let p = e.param(2, 4);
        let mut lambdas: Vec<ExpPoly> = (0..e.coords.len())
            .map(|j| ExpPoly::coordinate(&p, e.vars(), j))
            .collect();
        lambdas.extend(e.integrals(&p).map_err(err)?.into_iter().map(|(_, h)| h));
        for l in e.grid.iter().take(3) {
            for s in [0.0, 0.15, 0.3] {
                let r =
                    equivalence_check(&e.flow, e.default_value, l, s, &kappas, &lambdas, &grid, None).map_err(err)?;
                ensure(r.passed(), || r.to_text())?;
            }
        }
        // identify l with a point on a different orbit
        let l = &e.grid[0];
        let moved = e.flow.eval(0.3, l, e.default_value).map_err(err)?;
        let other = e
            .grid
            .iter()
            .find(|q| {
                let (a, b) = (integral_values(&e, q), integral_values(&e, &moved));
                matches!((a, b), (Ok(a), Ok(b)) if max_diff(&a, &b) > 1e-3)
            })
            .ok_or_else(|| format!("{}: no second orbit in the grid", e.name))?;
        let r =
            equivalence_check(&e.flow, e.default_value, l, 0.3, &kappas, &lambdas, &grid, Some(other)).map_err(err)?;
        ensure(!r.passed(), || format!("{}: negative control passed", e.name))?;
    }
    Ok(())
}

// 9. Star structure at degree ≤ 3 and formal skew-symmetry of the K-generator.
fn star() -> Outcome {
    for e in catalog::all() {
        let w = work_window(3, 4, 2);
        let model = BicrossModel::new(&e.bicross, w).map_err(err)?;
        let built = build_bicross(&e.bicross, w).map_err(err)?;
        let r = check_star(&built, Some(&model), 3);
        ensure(r.passed(), || r.to_text())?;
        ensure(r.results.len() == 3, || "star compatibility not checked".into())?;
        let model = e.model(Window::new(9, 10)).map_err(err)?;
        let rep = induce(&model, &e.param(2, 10), 8).map_err(err)?;
        let skew = check_skew_symmetry(&rep).map_err(err)?;
        ensure(skew.is_none(), || {
            format!("{}: skew-symmetry fails at {skew:?}", e.name)
        })?;
    }
    Ok(())
}

fn cli_binary() -> Result<PathBuf, String> {
    let exe = std::env::current_exe().map_err(err)?;
    // target/<profile>/deps/acceptance-… → target/<profile>/qbicross
    let dir = exe.parent().and_then(|d| d.parent()).ok_or("no target directory")?;
    let bin = dir.join(format!("qbicross{}", std::env::consts::EXE_SUFFIX));
    if !bin.exists() {
        let cargo = std::env::var("CARGO").unwrap_or_else(|_| "cargo".into());
        let status = Command::new(cargo)
            .args(["build", "-p", "qbicross-cli", "--bin", "qbicross"])
            .status()
            .map_err(err)?;
        ensure(status.success(), || "building the CLI failed".into())?;
    }
    ensure(bin.exists(), || format!("{} not found", bin.display()))?;
    Ok(bin)
}

// 10. The three documented CLI commands, and a mutated spec exiting 1 with a counterexample.
fn cli() -> Outcome {
    let bin = cli_binary()?;
    let run = |args: &[&str]| -> Result<(i32, String), String> {
        let out = Command::new(&bin).args(args).output().map_err(err)?;
        Ok((
            out.status.code().unwrap_or(-1),
            String::from_utf8_lossy(&out.stdout).into_owned(),
        ))
    };
    let (code, out) = run(&[
        "check-hopf",
        "--algebra",
        "galilei-kappa",
        "--degree",
        "3",
        "--zorder",
        "4",
        "--format",
        "json",
    ])?;
    ensure(code == 0, || format!("check-hopf exit {code}"))?;
    let json: serde_json::Value = serde_json::from_str(&out).map_err(err)?;
    let results = json["reports"][0]["results"].as_array().ok_or("no results")?;
    ensure(
        results.iter().all(|r| r["status"] == "pass") && results.len() == 8,
        || out.clone(),
    )?;

    let (code, out) = run(&[
        "flow",
        "--algebra",
        "poincare-null-plane",
        "--x0",
        "1,-0.5",
        "--s",
        "0.25",
        "--z",
        "0.3",
        "--compare",
        "closed",
        "--format",
        "json",
    ])?;
    ensure(code == 0, || format!("flow exit {code}"))?;
    let json: serde_json::Value = serde_json::from_str(&out).map_err(err)?;
    let delta = json["data"]["points"][0]["delta"].as_f64().ok_or("no delta")?;
    ensure(delta < 1e-8, || format!("delta {delta}"))?;

    let (code, out) = run(&[
        "induce",
        "--algebra",
        "galilei-kappa",
        "--character",
        "1,0",
        "--order",
        "6",
        "--dump",
    ])?;
    ensure(code == 0, || format!("induce exit {code}"))?;
    ensure(out.contains("P = 1 + (1/2)v + (1/4)v^2"), || out.clone())?;

    let mutated = catalog::KAPPA.replace("P = -exp(H/k)*P", "P = -exp(H/k)*P + H");
    let path = std::env::temp_dir().join(format!("qbicross-acceptance-{}.spec", std::process::id()));
    std::fs::write(&path, mutated).map_err(err)?;
    let (code, out) = run(&[
        "check-hopf",
        "--algebra",
        path.to_str().unwrap(),
        "--degree",
        "2",
        "--zorder",
        "3",
    ])?;
    let _ = std::fs::remove_file(&path);
    ensure(code == 1, || format!("mutated spec exit {code}"))?;
    ensure(out.contains("counterexample"), || out)
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("1 hopf axioms, 6 specs, degree 3, order 4", hopf_axioms),
        ("2 bicross reconstruction and compatibility", reconstruction),
        ("3 pairing tables and pairing axioms", pairing),
        ("4 adjoint expansion vs straightening", adjoint_expansion),
        ("5 flow series, RK4 and group law", flows),
        ("6 first integrals", integrals),
        ("7 induced representations", induced),
        ("8 intertwiner and negative control", equivalence),
        ("9 star structure and skew-symmetry", star),
        ("10 command-line driver", cli),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let outcome = f();
        let took = start.elapsed().as_secs_f64();
        match outcome {
            Ok(()) => println!("PASS  {name}  ({took:.1} s)"),
            Err(msg) => {
                failed += 1;
                println!("FAIL  {name}  ({took:.1} s)\n      {}", msg.replace('\n', "\n      "));
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
