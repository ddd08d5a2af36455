//! One function per subcommand. Each returns the reports it ran, a JSON
//! payload and a text rendering of that payload.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use qbicross::bicross::check_bicross;
use qbicross::catalog::{self, CatalogEntry};
use qbicross::expr::{parse_exppoly, ExpPoly};
use qbicross::flows::{
    check_first_integral, classify_point, field_from_action, flow_numeric, StepControl, VectorField,
};
use qbicross::hopf::{check_hopf, work_window};
use qbicross::induction::{check_rep_relations, equivalence_check, induce, local_rep};
use qbicross::multiindex::MultiIndex;
use qbicross::ncalg::{Sector, SpecSource, Window};
use qbicross::pairing::{check_pairing_axioms, gram_defect};
use qbicross::paramseries::{q_from_str, Param};
use qbicross::report::{CheckResult, Report, RunConfig};
use serde::Serialize;
use serde_json::{json, Value};

use crate::source::{resolve, Source};
use crate::{config, Cli, Command, Compare, Failure, Format};

struct Outcome {
    reports: Vec<Report>,
    data: Value,
    text: String,
}

impl Outcome {
    fn reports(reports: Vec<Report>) -> Self {
        Outcome {
            reports,
            data: Value::Null,
            text: String::new(),
        }
    }
}

#[derive(Serialize)]
struct Envelope<'a> {
    config: &'a RunConfig,
    reports: &'a [Report],
    data: &'a Value,
}

/// Runs the subcommand and writes its report. `Ok(false)` means a check failed.
pub fn run(cli: &Cli) -> Result<bool, Failure> {
    let mut cfg = config(cli);
    let outcome = if let (Command::Dump { out_dir }, "all") = (&cli.command, cli.common.algebra.as_str()) {
        dump_all(out_dir.as_deref())?
    } else {
        let src = resolve(&cli.common.algebra)?;
        cfg.value = if src.inverse() { cli.common.kappa } else { cli.common.z };
        dispatch(cli, &src, &mut cfg)?
    };
    let rendered = match cli.common.format {
        Format::Json => {
            let env = Envelope {
                config: &cfg,
                reports: &outcome.reports,
                data: &outcome.data,
            };
            serde_json::to_string_pretty(&env).map_err(|e| Failure::Usage(e.to_string()))? + "\n"
        }
        Format::Text => {
            let mut s = cfg.to_text();
            for r in &outcome.reports {
                s += &r.to_text();
            }
            s + &outcome.text
        }
    };
    match &cli.common.output {
        Some(path) => std::fs::write(path, rendered)?,
        None => print!("{rendered}"),
    }
    Ok(outcome.reports.iter().all(Report::passed))
}

fn parse_vec(text: &str, what: &str) -> Result<Vec<f64>, Failure> {
    text.split(',')
        .map(|t| {
            let v: f64 = t
                .trim()
                .parse()
                .map_err(|_| Failure::Usage(format!("bad number `{t}` in {what}")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Failure::Usage(format!("{what} must be finite")))
            }
        })
        .collect()
}

fn check_dim(v: &[f64], n: usize, what: &str) -> Result<(), Failure> {
    if v.len() == n {
        Ok(())
    } else {
        Err(Failure::Usage(format!("{what} needs {n} coordinates, got {}", v.len())))
    }
}

fn param_of(src: &Source, zorder: u32) -> Result<Param, Failure> {
    let b = src.bicross()?;
    Ok(Param::new(&b.param, b.inverse, 2, zorder))
}

fn k_field(src: &Source, param: &Param) -> Result<VectorField, Failure> {
    let b = src.bicross()?;
    let k = *b
        .gens_in(Sector::K)
        .first()
        .ok_or_else(|| Failure::Usage("bicross data has no K generator".into()))?;
    Ok(field_from_action(&b, k, param)?)
}

fn coord_names(x: &VectorField) -> Vec<&str> {
    x.coords().iter().map(String::as_str).collect()
}

fn dispatch(cli: &Cli, src: &Source, cfg: &mut RunConfig) -> Result<Outcome, Failure> {
    let c = &cli.common;
    let value = cfg.value;
    match &cli.command {
        Command::CheckHopf { dual } => {
            let spec: Arc<SpecSource> = match (src, dual) {
                (Source::Catalog(e), true) => e.dual.clone(),
                (Source::Catalog(e), false) => e.primal.clone(),
                (Source::Algebra(s), false) => s.clone(),
                (Source::Bicross(b), false) => Arc::new(b.bicross_source()),
                _ => return Err(Failure::Usage("--dual needs a catalog entry".into())),
            };
            Ok(Outcome::reports(vec![check_hopf(&spec, c.degree, c.zorder)?]))
        }
        Command::CheckBicross => {
            let data = src.bicross()?;
            let direct = match src {
                Source::Catalog(e) => Some(e.primal.clone()),
                _ => None,
            };
            Ok(Outcome::reports(vec![check_bicross(
                &data,
                direct.as_ref(),
                c.degree,
                c.zorder,
            )?]))
        }
        Command::CheckPairing => {
            let e = src.entry("check-pairing")?;
            let dp = e.pairing(work_window(c.degree, c.zorder, 2))?;
            let defect = gram_defect(&dp, c.degree)?.map(|(a, b)| format!("⟨{a:?}, {b:?}⟩"));
            let mut report = check_pairing_axioms(&dp, c.degree);
            report
                .results
                .insert(0, CheckResult::new("monomial-pairing", defect, c.degree, c.zorder));
            Ok(Outcome::reports(vec![report]))
        }
        Command::Flow {
            x0,
            s,
            compare,
            step,
            csv,
            samples,
        } => {
            let param = param_of(src, c.zorder)?;
            let x = k_field(src, &param)?;
            let x0 = parse_vec(x0, "--x0")?;
            check_dim(&x0, x.dim(), "--x0")?;
            let times = parse_vec(s, "--s")?;
            cfg.times = times.clone();
            let ctl = StepControl {
                h: *step,
                ..StepControl::default()
            };
            if step.is_nan() || *step <= 0.0 {
                return Err(Failure::Usage("--step must be positive".into()));
            }
            let closed = match compare {
                Compare::Closed => Some(src.entry("--compare closed")?),
                Compare::None => None,
            };
            flow(
                &x,
                &x0,
                &times,
                ctl,
                value,
                closed,
                cfg.tolerance,
                csv.as_deref(),
                *samples,
            )
        }
        Command::Integral { exprs, printed } => {
            let param = param_of(src, c.zorder)?;
            let x = k_field(src, &param)?;
            let names = coord_names(&x);
            let mut cands: Vec<(String, ExpPoly)> = match src {
                Source::Catalog(e) => e.integrals(&param)?,
                _ => Vec::new(),
            };
            for t in exprs {
                cands.push((t.clone(), parse_exppoly(t, &param, &names)?));
            }
            if *printed {
                let e = src.entry("--printed")?;
                match e.printed_integral(&param) {
                    Some(h) => cands.push(("printed".into(), h?)),
                    None => return Err(Failure::Usage(format!("{} has no separate printed form", e.name))),
                }
            }
            if cands.is_empty() {
                return Err(Failure::Usage("no integrals to check; pass --expr".into()));
            }
            let mut report = Report::new(&format!("first integrals: {}", src.name()));
            let mut data = Vec::new();
            let mut text = String::new();
            for (name, h) in &cands {
                let r = check_first_integral(&x, h);
                let fail = (!r.is_zero()).then(|| format!("X({}) = {}", h.to_text(), r.to_text()));
                report.results.push(CheckResult::new(name, fail, 0, c.zorder));
                writeln!(text, "X({}) = {}", h.to_text(), r.to_text()).unwrap();
                data.push(json!({"name": name, "integral": h.to_text(), "residual": r.to_text()}));
            }
            Ok(Outcome {
                reports: vec![report],
                data: json!({ "integrals": data }),
                text,
            })
        }
        Command::Induce { character, dump, pmax } => {
            let data = src.bicross()?;
            let a = parse_vec(character, "--character")?;
            let nl = data.gens_in(Sector::L).len();
            check_dim(&a, nl, "--character")?;
            cfg.character = Some(a.clone());
            let model = qbicross::bicross::BicrossModel::new(&data, Window::new(c.order + 1, c.zorder))?;
            let param = Param::new(&data.param, data.inverse, 2, c.zorder);
            let rep = induce(&model, &param, c.order)?;
            let spec = match src {
                Source::Catalog(e) => e.primal.clone(),
                _ => Arc::new(data.bicross_source()),
            };
            let mut report = check_rep_relations(&rep, &spec, *pmax);
            let mut reproduce = None;
            for (j, aj) in a.iter().enumerate() {
                let c0 = rep.mult[j]
                    .get(&MultiIndex::new(vec![0; rep.ntimes()]))
                    .map(|c| c.eval(&a, value));
                let c0 = c0.transpose()?.unwrap_or(0.0);
                if (c0 - aj).abs() > 1e-12 && reproduce.is_none() {
                    reproduce = Some(format!("M_{j}(0) = {c0}, character {aj}"));
                }
            }
            report
                .results
                .push(CheckResult::new("character-reproduction", reproduce, *pmax, c.zorder));
            let exact: Option<Vec<_>> = character.split(',').map(q_from_str).collect();
            let qv = q_from_str(&value.to_string());
            let exact = match (&exact, &qv) {
                (Some(qa), Some(qv)) => Some((qa.as_slice(), qv)),
                _ => None,
            };
            let d = rep.dump(&a, exact, value)?;
            let mut text = String::new();
            if *dump {
                for (g, rows) in &d.k_action {
                    writeln!(text, "{g} acts on monomials of {}:", rep.time_names().join(", ")).unwrap();
                    for r in rows {
                        writeln!(text, "  {:?} -> {} * {:?}", r.from, r.coeff, r.to).unwrap();
                    }
                }
                for (g, s) in &d.series {
                    writeln!(text, "{g} = {}", s.text).unwrap();
                }
            }
            Ok(Outcome {
                reports: vec![report],
                data: if *dump {
                    serde_json::to_value(&d).unwrap()
                } else {
                    Value::Null
                },
                text,
            })
        }
        Command::LocalRep { c: ch, l, s } => {
            let e = src.entry("local-rep")?;
            let l = parse_vec(l, "--l")?;
            check_dim(&l, e.coords.len(), "--l")?;
            cfg.times = vec![*s];
            let (scalar, point) = local_rep(&e.flow, *ch, &l, *s, value)?;
            let mut text = format!("e^(sK) |- l = {scalar} * {point:?}\n");
            for (j, name) in e.coords.iter().enumerate() {
                writeln!(text, "{name} |- l = {} * l", l[j]).unwrap();
            }
            Ok(Outcome {
                reports: Vec::new(),
                data: json!({"scalar": scalar, "point": point, "l_scalars": l}),
                text,
            })
        }
        Command::Equiv {
            l,
            s,
            target,
            lambdas,
            grid,
        } => {
            let e = src.entry("equiv")?;
            let p = e.param(2, c.zorder);
            let l = parse_vec(l, "--l")?;
            check_dim(&l, e.coords.len(), "--l")?;
            let target = target.as_deref().map(|t| parse_vec(t, "--target")).transpose()?;
            if let Some(t) = &target {
                check_dim(t, e.coords.len(), "--target")?;
            }
            let grid = parse_vec(grid, "--grid")?;
            cfg.times = vec![*s];
            let funcs: Vec<ExpPoly> = if lambdas.is_empty() {
                let mut f: Vec<ExpPoly> = (0..e.coords.len())
                    .map(|j| ExpPoly::coordinate(&p, e.vars(), j))
                    .collect();
                f.extend(e.integrals(&p)?.into_iter().map(|(_, h)| h));
                f
            } else {
                lambdas
                    .iter()
                    .map(|t| parse_exppoly(t, &p, &e.coords))
                    .collect::<qbicross::Result<_>>()?
            };
            let kappas = vec![vec![1.0], vec![0.0, 1.0], vec![0.0, 0.0, 1.0]];
            let r = equivalence_check(&e.flow, value, &l, *s, &kappas, &funcs, &grid, target.as_deref())?;
            Ok(Outcome::reports(vec![r]))
        }
        Command::Strata { points } => {
            let e = src.entry("strata")?;
            strata(e, points.as_deref(), value, c.zorder)
        }
        Command::Dump { out_dir } => match src {
            Source::Catalog(e) => dump_entries(&[e.as_ref().clone()], out_dir.as_deref()),
            Source::Algebra(s) => Ok(text_only(s.to_text())),
            Source::Bicross(b) => Ok(text_only(b.to_text())),
        },
    }
}

fn text_only(text: String) -> Outcome {
    Outcome {
        reports: Vec::new(),
        data: json!({ "text": text }),
        text,
    }
}

#[allow(clippy::too_many_arguments)]
fn flow(
    x: &VectorField,
    x0: &[f64],
    times: &[f64],
    ctl: StepControl,
    value: f64,
    closed: Option<&CatalogEntry>,
    tol: f64,
    csv: Option<&Path>,
    samples: usize,
) -> Result<Outcome, Failure> {
    let mut report = Report::new("flow: RK4 against the closed form");
    let mut points = Vec::new();
    let mut text = String::new();
    let mut worst: Option<String> = None;
    for &s in times {
        let num = flow_numeric(x, x0, s, value, ctl)?;
        let mut p = json!({"s": s, "numeric": num.x, "error_estimate": num.error});
        write!(text, "s = {s}: {:?} (error estimate {:.1e})", num.x, num.error).unwrap();
        if let Some(e) = closed {
            let cf = e.flow.eval(s, x0, value)?;
            let delta = num.x.iter().zip(&cf).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            p["closed"] = json!(cf);
            p["delta"] = json!(delta);
            write!(text, "  closed {cf:?}  delta {delta:.3e}").unwrap();
            if delta > tol && worst.is_none() {
                worst = Some(format!("s = {s}: delta {delta:e}"));
            }
        }
        text.push('\n');
        points.push(p);
    }
    if closed.is_some() {
        report.results.push(CheckResult::new("rk4-vs-closed", worst, 0, 0));
    }
    if let Some(path) = csv {
        let smax = times
            .iter()
            .cloned()
            .fold(0.0f64, |m, t| if t.abs() > m.abs() { t } else { m });
        let n = samples.max(1);
        let mut out = String::from("s");
        for name in x.coords().iter() {
            write!(out, ",{name}").unwrap();
        }
        if closed.is_some() {
            for name in x.coords().iter() {
                write!(out, ",{name}_closed").unwrap();
            }
        }
        out.push('\n');
        for i in 0..=n {
            let t = smax * i as f64 / n as f64;
            let num = flow_numeric(x, x0, t, value, ctl)?;
            write!(out, "{t}").unwrap();
            for v in &num.x {
                write!(out, ",{v}").unwrap();
            }
            if let Some(e) = closed {
                for v in e.flow.eval(t, x0, value)? {
                    write!(out, ",{v}").unwrap();
                }
            }
            out.push('\n');
        }
        std::fs::write(path, out)?;
    }
    let reports = if closed.is_some() { vec![report] } else { Vec::new() };
    Ok(Outcome {
        reports,
        data: json!({ "points": points }),
        text,
    })
}

fn strata(e: &CatalogEntry, points: Option<&str>, value: f64, zorder: u32) -> Result<Outcome, Failure> {
    let p = e.param(2, zorder);
    let x = e.field(&p)?;
    let integrals = e.integrals(&p)?;
    let pts: Vec<Vec<f64>> = match points {
        Some(t) => t
            .split(';')
            .map(|s| {
                let v = parse_vec(s, "--points")?;
                check_dim(&v, e.coords.len(), "--points")?;
                Ok(v)
            })
            .collect::<Result<_, Failure>>()?,
        None => e.grid.clone(),
    };
    let mut report = Report::new(&format!("strata: {}", e.name));
    let mut mismatch = None;
    let mut rows = Vec::new();
    let mut text = String::new();
    for pt in &pts {
        let class = classify_point(&x, &e.flow, pt, value, &integrals)?;
        let label = (e.stratum)(pt);
        if class.fixed != (e.fixed)(pt) && mismatch.is_none() {
            mismatch = Some(format!("{pt:?}: field says fixed = {}", class.fixed));
        }
        writeln!(
            text,
            "{pt:?}: {label}{}  integrals {:?}",
            if class.fixed { " (fixed)" } else { "" },
            class.integrals
        )
        .unwrap();
        let mut row = serde_json::to_value(&class).unwrap();
        row["stratum"] = json!(label);
        rows.push(row);
    }
    report
        .results
        .push(CheckResult::new("fixed-point-predicate", mismatch, 0, zorder));
    Ok(Outcome {
        reports: vec![report],
        data: json!({ "strata": e.strata, "points": rows }),
        text,
    })
}

/// File names used for the serialized catalog.
pub fn spec_files(name: &str) -> [String; 3] {
    [
        format!("{name}.spec"),
        format!("{name}-dual.spec"),
        format!("{name}-bicross.spec"),
    ]
}

fn dump_entries(entries: &[CatalogEntry], out_dir: Option<&Path>) -> Result<Outcome, Failure> {
    let mut text = String::new();
    let mut files = Vec::new();
    for e in entries {
        let texts = [e.primal.to_text(), e.dual.to_text(), e.bicross.to_text()];
        for (file, body) in spec_files(e.name).iter().zip(texts) {
            match out_dir {
                Some(dir) => {
                    std::fs::create_dir_all(dir)?;
                    let path = dir.join(file);
                    std::fs::write(&path, &body)?;
                    writeln!(text, "wrote {}", path.display()).unwrap();
                }
                None => writeln!(text, "### {file}\n{body}").unwrap(),
            }
            files.push(json!({"file": file, "text": body}));
        }
    }
    Ok(Outcome {
        reports: Vec::new(),
        data: json!({ "files": files }),
        text,
    })
}

fn dump_all(out_dir: Option<&Path>) -> Result<Outcome, Failure> {
    dump_entries(&catalog::all(), out_dir)
}
