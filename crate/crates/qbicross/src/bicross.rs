//! Right–left bicrossproducts `K ▸◂ L` built from a right action of a
//! cocommutative `K` on a commutative `L` and a group-like left coaction,
//! with the five compatibility conditions and the star structure.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::{self, print_ast, Expr, SymbolTable};
use crate::hopf::{antipode, coproduct, counit};
use crate::multiindex::MultiIndex;
use crate::ncalg::{
    at_line, basis_upto, eval_ast, nc_mul, parse_header, parse_per_gen, parse_relations, parse_sections, section,
    NCElement, Sector, Spec, SpecSource, TensorAst, TensorElement, Window,
};
use crate::paramseries::{qi, ParamSeries};
use crate::report::{CheckResult, Report};

/// Action/coaction data of a bicrossproduct, kept as ASTs.
#[derive(Clone, Debug)]
pub struct BicrossData {
    pub name: String,
    pub param: String,
    pub inverse: bool,
    pub gens: Vec<(String, Sector)>,
    /// Relations inside the K sector, `(j, i, value)` with `j > i`.
    pub relations: Vec<(usize, usize, Expr)>,
    /// Coproduct, counit and antipode of the L-sector generators (`None` on K).
    pub coproduct: Vec<Option<TensorAst>>,
    pub counit: Vec<Option<Expr>>,
    pub antipode: Vec<Option<Expr>>,
    /// `(l, k) ↦ l ⊲ k` on generators; absent entries are zero.
    pub action: BTreeMap<(usize, usize), Expr>,
    /// Dressing `β_k` of the coaction `k ◂ = β_k ⊗ k` (`None` on L).
    pub coaction: Vec<Option<Expr>>,
    pub star: Option<Vec<Expr>>,
}

const SECTIONS: [&str; 9] = [
    "bicross",
    "generators",
    "relations",
    "coproduct",
    "counit",
    "antipode",
    "action",
    "coaction",
    "star",
];

impl BicrossData {
    pub fn symbols(&self) -> SymbolTable {
        SymbolTable {
            param: self.param.clone(),
            symbols: self.gens.iter().map(|g| g.0.clone()).collect(),
        }
    }

    pub fn gens_in(&self, s: Sector) -> Vec<usize> {
        (0..self.gens.len()).filter(|&i| self.gens[i].1 == s).collect()
    }

    pub fn gen_index(&self, name: &str) -> Option<usize> {
        self.gens.iter().position(|g| g.0 == name)
    }

    /// Parses a bicross data file (`[bicross]` header).
    pub fn from_text(text: &str) -> Result<BicrossData> {
        let secs = parse_sections(text)?;
        for s in &secs {
            if !SECTIONS.contains(&s.name.as_str()) {
                return Err(Error::Spec(format!("unknown section [{}]", s.name)));
            }
        }
        let (name, param, inverse, gens) = parse_header(&secs, "bicross")?;
        let ctx = SymbolTable {
            param: param.clone(),
            symbols: gens.iter().map(|g| g.0.clone()).collect(),
        };
        let ks: Vec<usize> = (0..gens.len()).filter(|&i| gens[i].1 == Sector::K).collect();
        let ls: Vec<usize> = (0..gens.len()).filter(|&i| gens[i].1 == Sector::L).collect();
        if ks.is_empty() {
            return Err(Error::Spec("no K-sector generators".into()));
        }

        let relations = parse_relations(section(&secs, "relations"), &ctx)?;
        if let Some((j, i, _)) = relations
            .iter()
            .find(|(j, i, _)| gens[*j].1 == Sector::L || gens[*i].1 == Sector::L)
        {
            return Err(Error::Spec(format!(
                "[{}, {}]: only K-sector relations may be given; L is commutative and cross terms come from [action]",
                gens[*j].0, gens[*i].0
            )));
        }
        let need = |name: &str| section(&secs, name).ok_or_else(|| Error::Spec(format!("missing [{name}] section")));
        let coproduct = parse_per_gen(Some(need("coproduct")?), &ctx, &ls, expr::parse_tensor)?.unwrap_or_default();
        let counit = parse_per_gen(Some(need("counit")?), &ctx, &ls, expr::parse)?.unwrap_or_default();
        let antipode = parse_per_gen(Some(need("antipode")?), &ctx, &ls, expr::parse)?.unwrap_or_default();

        let mut action = BTreeMap::new();
        if let Some(sec) = section(&secs, "action") {
            for (lhs, rhs, line) in &sec.entries {
                let (l, k) = lhs
                    .split_once("<|")
                    .ok_or_else(|| Error::Spec(format!("line {line}: action must look like `l <| k = …`")))?;
                let idx = |s: &str, want: Sector| -> Result<usize> {
                    let i = ctx
                        .symbols
                        .iter()
                        .position(|g| g == s.trim())
                        .ok_or_else(|| Error::Spec(format!("line {line}: unknown generator `{}`", s.trim())))?;
                    if gens[i].1 != want {
                        return Err(Error::Spec(format!(
                            "line {line}: `{}` is not in the {want:?} sector",
                            s.trim()
                        )));
                    }
                    Ok(i)
                };
                let key = (idx(l, Sector::L)?, idx(k, Sector::K)?);
                let v = expr::parse(rhs, &ctx).map_err(|e| at_line(*line, e))?;
                if action.insert(key, v).is_some() {
                    return Err(Error::Spec(format!("line {line}: duplicate action entry")));
                }
            }
        }

        let coaction_sec = need("coaction")?;
        let coaction = parse_per_gen(Some(coaction_sec), &ctx, &ks, |text, ctx| {
            let t = expr::parse_tensor(text, ctx)?;
            Ok(t)
        })?
        .unwrap_or_default();
        let mut dress = vec![None; gens.len()];
        for (k, t) in coaction.into_iter().enumerate() {
            let Some(t) = t else { continue };
            match t.as_slice() {
                [(beta, Expr::Sym(j))] if *j == k => dress[k] = Some(beta.clone()),
                _ => {
                    return Err(Error::Unsupported(format!(
                        "coaction of `{}` is not of the form β ⊗ {}",
                        gens[k].0, gens[k].0
                    )))
                }
            }
        }

        let all: Vec<usize> = (0..gens.len()).collect();
        let star = parse_per_gen(section(&secs, "star"), &ctx, &all, expr::parse)?
            .map(|v| v.into_iter().map(|x| x.expect("checked by parse_per_gen")).collect());

        Ok(BicrossData {
            name,
            param,
            inverse,
            gens,
            relations,
            coproduct,
            counit,
            antipode,
            action,
            coaction: dress,
            star,
        })
    }

    pub fn to_text(&self) -> String {
        let ctx = self.symbols();
        let p = |e: &Expr| print_ast(e, &ctx);
        let mut s = format!(
            "[bicross]\nname = {}\nparameter = {}\ninverse = {}\n\n[generators]\n",
            self.name, self.param, self.inverse
        );
        for (g, sec) in &self.gens {
            s += &format!("{g} = {sec:?}\n");
        }
        if !self.relations.is_empty() {
            s += "\n[relations]\n";
            for (j, i, v) in &self.relations {
                s += &format!("[{}, {}] = {}\n", ctx.symbols[*j], ctx.symbols[*i], p(v));
            }
        }
        s += "\n[coproduct]\n";
        for (g, t) in self.coproduct.iter().enumerate() {
            if let Some(t) = t {
                let parts: Vec<String> = t.iter().map(|(a, b)| format!("({}) @ ({})", p(a), p(b))).collect();
                s += &format!("{} = {}\n", ctx.symbols[g], parts.join(" + "));
            }
        }
        for (title, v) in [("counit", &self.counit), ("antipode", &self.antipode)] {
            s += &format!("\n[{title}]\n");
            for (g, e) in v.iter().enumerate() {
                if let Some(e) = e {
                    s += &format!("{} = {}\n", ctx.symbols[g], p(e));
                }
            }
        }
        s += "\n[action]\n";
        for ((l, k), v) in &self.action {
            s += &format!("{} <| {} = {}\n", ctx.symbols[*l], ctx.symbols[*k], p(v));
        }
        s += "\n[coaction]\n";
        for (k, b) in self.coaction.iter().enumerate() {
            if let Some(b) = b {
                s += &format!("{} = ({}) @ {}\n", ctx.symbols[k], p(b), ctx.symbols[k]);
            }
        }
        if let Some(st) = &self.star {
            s += "\n[star]\n";
            for (g, e) in st.iter().enumerate() {
                s += &format!("{} = {}\n", ctx.symbols[g], p(e));
            }
        }
        s
    }

    fn base_source(&self, name: String) -> SpecSource {
        SpecSource {
            name,
            param: self.param.clone(),
            inverse: self.inverse,
            gens: self.gens.clone(),
            relations: self.relations.clone(),
            coproduct: None,
            counit: None,
            antipode: None,
            star: self.star.clone(),
        }
    }

    fn l_or<T: Clone>(v: &[Option<T>], g: usize, k: impl FnOnce() -> T) -> T {
        v[g].clone().unwrap_or_else(k)
    }

    /// The tensor-product Hopf algebra `K ⊗ L` (trivial action and coaction).
    pub fn frame_source(&self) -> SpecSource {
        let mut s = self.base_source(format!("{}-frame", self.name));
        let one = || Expr::Num(qi(1));
        let zero = || Expr::Num(qi(0));
        let n = self.gens.len();
        s.coproduct = Some(
            (0..n)
                .map(|g| {
                    Self::l_or(&self.coproduct, g, || {
                        vec![(Expr::Sym(g), one()), (one(), Expr::Sym(g))]
                    })
                })
                .collect(),
        );
        s.counit = Some((0..n).map(|g| Self::l_or(&self.counit, g, zero)).collect());
        s.antipode = Some(
            (0..n)
                .map(|g| Self::l_or(&self.antipode, g, || Expr::Neg(Box::new(Expr::Sym(g)))))
                .collect(),
        );
        s
    }

    /// The bicrossproduct presentation: `[l, k] = l ⊲ k`, `Δk = k⊗1 + β⊗k`,
    /// `S(k) = −β⁻¹k`, L-sector structure maps unchanged.
    pub fn bicross_source(&self) -> SpecSource {
        let mut s = self.frame_source();
        s.name = self.name.clone();
        for ((l, k), v) in &self.action {
            s.relations.push((*l, *k, v.clone()));
        }
        let cop = s.coproduct.as_mut().expect("frame has a coproduct");
        let anti = s.antipode.as_mut().expect("frame has an antipode");
        for (k, beta) in self.coaction.iter().enumerate() {
            if let Some(beta) = beta {
                cop[k] = vec![(Expr::Sym(k), Expr::Num(qi(1))), (beta.clone(), Expr::Sym(k))];
                let inv = Expr::Pow(Box::new(beta.clone()), -1);
                anti[k] = Expr::Neg(Box::new(Expr::Mul(Box::new(inv), Box::new(Expr::Sym(k)))));
            }
        }
        s
    }
}

/// Builds `K ▸◂ L` as a normal-ordered algebra at the given window.
pub fn build_bicross(data: &BicrossData, w: Window) -> Result<Spec> {
    Arc::new(data.bicross_source()).materialize(w)
}

/// Bicross data materialized inside the frame algebra `K ⊗ L`.
#[derive(Clone, Debug)]
pub struct BicrossModel {
    pub data: Arc<BicrossData>,
    pub frame: Spec,
    action: BTreeMap<(usize, usize), NCElement>,
    beta: Vec<Option<NCElement>>,
}

fn mono(spec: &Spec, m: &MultiIndex) -> NCElement {
    NCElement::monomial(spec, m.clone(), ParamSeries::one(spec.param()))
}

fn word_of(m: &MultiIndex) -> Vec<usize> {
    m.entries()
        .iter()
        .enumerate()
        .flat_map(|(g, &e)| std::iter::repeat_n(g, e as usize))
        .collect()
}

fn only_sector(spec: &Spec, el: &NCElement, s: Sector) -> bool {
    el.terms().keys().all(|m| {
        m.entries()
            .iter()
            .enumerate()
            .all(|(g, &e)| e == 0 || spec.sector(g) == s)
    })
}

/// Monomials of degree ≤ `d` supported in one sector.
pub fn sector_monomials(spec: &Spec, s: Sector, d: u32) -> Vec<MultiIndex> {
    MultiIndex::all_up_to(spec.ngens(), d)
        .into_iter()
        .filter(|m| {
            m.entries()
                .iter()
                .enumerate()
                .all(|(g, &e)| e == 0 || spec.sector(g) == s)
        })
        .collect()
}

impl BicrossModel {
    /// Materializes the frame and the action/coaction tables. Coactions whose
    /// dressing is not group-like at this window are rejected as unsupported.
    pub fn new(data: &Arc<BicrossData>, w: Window) -> Result<BicrossModel> {
        let src = Arc::new(data.frame_source());
        let frame = src.materialize(w)?;
        // Values like (1/z)(e^{-2zP} - 1) are evaluated `bottom` orders deeper,
        // so the division by the parameter does not eat the top order.
        let wide = src.materialize(Window {
            zorder: w.zorder + w.bottom,
            ..w
        })?;
        let eval = |ast: &Expr| -> Result<NCElement> {
            let v = eval_ast(&wide, ast)?.transport(&frame)?;
            match v.lowest_param_degree() {
                Some(d) if d < 0 => Err(Error::NegativePowers(d)),
                _ => Ok(v),
            }
        };
        let mut action = BTreeMap::new();
        for (&(l, k), ast) in &data.action {
            let v = eval(ast)?;
            if !only_sector(&frame, &v, Sector::L) {
                return Err(Error::Admissibility(format!(
                    "{} <| {} has K-sector terms",
                    data.gens[l].0, data.gens[k].0
                )));
            }
            if !v.is_zero() {
                action.insert((l, k), v);
            }
        }
        let mut beta = vec![None; data.gens.len()];
        for (k, b) in data.coaction.iter().enumerate() {
            let Some(b) = b else { continue };
            let v = eval(b)?;
            if !only_sector(&frame, &v, Sector::L) {
                return Err(Error::Spec(format!(
                    "coaction dressing of {} has K-sector terms",
                    data.gens[k].0
                )));
            }
            let grouplike = coproduct(&v)?.upto(w.degree) == TensorElement::pure(&[&v, &v]).upto(w.degree);
            if !grouplike {
                return Err(Error::Unsupported(format!(
                    "coaction dressing of {} is not group-like",
                    data.gens[k].0
                )));
            }
            beta[k] = Some(v);
        }
        for k in data.gens_in(Sector::K) {
            if beta[k].is_none() {
                return Err(Error::Spec(format!("no coaction given for {}", data.gens[k].0)));
            }
        }
        Ok(BicrossModel {
            data: data.clone(),
            frame,
            action,
            beta,
        })
    }

    /// `l ⊲ k` on a generator table entry (zero if absent).
    pub fn action_value(&self, l: usize, k: usize) -> NCElement {
        self.action
            .get(&(l, k))
            .cloned()
            .unwrap_or_else(|| NCElement::zero(&self.frame))
    }

    pub fn dressing(&self, k: usize) -> Option<&NCElement> {
        self.beta[k].as_ref()
    }

    /// Leibniz extension of a primitive generator's action to an L-sector element.
    fn act_gen(&self, l: &NCElement, k: usize) -> Result<NCElement> {
        let f = &self.frame;
        let mut acc = NCElement::zero(f);
        for (m, c) in l.terms() {
            for (j, &e) in m.entries().iter().enumerate() {
                if e == 0 {
                    continue;
                }
                if f.sector(j) != Sector::L {
                    return Err(Error::Precondition(format!("{l} is not in the L sector")));
                }
                let Some(v) = self.action.get(&(j, k)) else { continue };
                let mut rest = m.entries().to_vec();
                rest[j] -= 1;
                let base = NCElement::monomial(f, MultiIndex::new(rest), c.scale(&qi(e as i64)));
                acc = acc.add(&nc_mul(&base, v)?)?;
            }
        }
        Ok(acc)
    }

    /// `l ⊲ (k_1 k_2 ⋯)` = `((l ⊲ k_1) ⊲ k_2) ⋯`.
    pub fn act_word(&self, l: &NCElement, word: &[usize]) -> Result<NCElement> {
        if !only_sector(&self.frame, l, Sector::L) {
            return Err(Error::Precondition(format!("{l} is not in the L sector")));
        }
        let mut acc = l.clone();
        for &k in word {
            if self.frame.sector(k) != Sector::K {
                return Err(Error::Precondition(format!(
                    "`{}` is not a K-sector generator",
                    self.frame.gen_name(k)
                )));
            }
            acc = self.act_gen(&acc, k)?;
        }
        Ok(acc)
    }

    /// Action of an arbitrary K-sector element, linear in it.
    pub fn act(&self, l: &NCElement, k: &NCElement) -> Result<NCElement> {
        let mut acc = NCElement::zero(&self.frame);
        for (m, c) in k.terms() {
            acc = acc.add(&self.act_word(l, &word_of(m))?.scale(c))?;
        }
        Ok(acc)
    }

    /// Coaction on a K-sector monomial, in `L ⊗ K`, extended from generators by
    /// `(w k)◂ = Σ (w⁽¹⁾ ⊲ k) ⊗ w⁽²⁾ + Σ w⁽¹⁾β_k ⊗ w⁽²⁾k` for primitive `k`.
    pub fn coaction_mono(&self, m: &MultiIndex) -> Result<TensorElement> {
        let f = &self.frame;
        let specs = [f.clone(), f.clone()];
        let mut acc = TensorElement::one(&specs);
        for k in word_of(m) {
            let beta = self.beta[k]
                .as_ref()
                .ok_or_else(|| Error::Precondition(format!("`{}` is not a K-sector generator", f.gen_name(k))))?;
            let kg = NCElement::generator(f, k);
            let mut next = TensorElement::zero(&specs);
            for (key, c) in acc.terms() {
                let (b, w) = (mono(f, &key[0]), mono(f, &key[1]));
                let t1 = TensorElement::pure(&[&self.act_gen(&b, k)?, &w]);
                let t2 = TensorElement::pure(&[&nc_mul(&b, beta)?, &nc_mul(&w, &kg)?]);
                next = next.add(&t1.add(&t2)?.scale(c))?;
            }
            acc = next;
        }
        Ok(acc)
    }

    pub fn coaction(&self, k: &NCElement) -> Result<TensorElement> {
        let specs = [self.frame.clone(), self.frame.clone()];
        let mut acc = TensorElement::zero(&specs);
        for (m, c) in k.terms() {
            acc = acc.add(&self.coaction_mono(m)?.scale(c))?;
        }
        Ok(acc)
    }
}

/// `l ⊲ (k_1 ⋯ k_n)` for an L-sector element of the model frame.
pub fn action_extend(model: &BicrossModel, l: &NCElement, kword: &[usize]) -> Result<NCElement> {
    model.act_word(l, kword)
}

fn first_failure<T>(items: &[T], f: impl Fn(&T) -> Result<Option<String>>) -> Option<String> {
    items.iter().find_map(|x| match f(x) {
        Ok(v) => v,
        Err(e) => Some(format!("error: {e}")),
    })
}

/// Verifies the five compatibility conditions (plus group-likeness of the
/// dressings) on L-monomials and K-monomials of degree ≤ `d`.
pub fn check_compatibility(model: &BicrossModel, d: u32) -> Report {
    let f = &model.frame;
    let w = f.window().degree;
    let z = f.window().zorder;
    let mut report = Report::new(&format!("bicross compatibility: {}", model.data.name));
    let ls = sector_monomials(f, Sector::L, d);
    let ks = sector_monomials(f, Sector::K, d);
    let pairs: Vec<(MultiIndex, MultiIndex)> = ls
        .iter()
        .flat_map(|l| ks.iter().map(move |k| (l.clone(), k.clone())))
        .collect();
    let label = |l: &MultiIndex, k: &MultiIndex| format!("l={}, k={}", mono(f, l), mono(f, k));
    let specs = [f.clone(), f.clone()];

    // ε(l ⊲ k) = ε(l)ε(k)
    let r = first_failure(&pairs, |(l, k)| {
        let lhs = counit(&model.act_word(&mono(f, l), &word_of(k))?)?;
        let rhs = counit(&mono(f, l))?.mul_ref(&counit(&mono(f, k))?);
        Ok((lhs != rhs).then(|| label(l, k)))
    });
    report.results.push(CheckResult::new("action-counit", r, d, z));

    // Δ(l ⊲ k) = (l₍₁₎ ⊲ k₍₁₎) k₍₂₎⁽¹⁾ ⊗ l₍₂₎ ⊲ k₍₂₎⁽²⁾
    let r = first_failure(&pairs, |(l, k)| {
        let lhs = coproduct(&model.act_word(&mono(f, l), &word_of(k))?)?;
        let mut rhs = TensorElement::zero(&specs);
        let dk = coproduct(&mono(f, k))?;
        for (lk, lc) in coproduct(&mono(f, l))?.terms() {
            for (kk, kc) in dk.terms() {
                let left = model.act_word(&mono(f, &lk[0]), &word_of(&kk[0]))?;
                for (ck, cc) in model.coaction_mono(&kk[1])?.terms() {
                    let a = nc_mul(&left, &mono(f, &ck[0]))?;
                    let b = model.act_word(&mono(f, &lk[1]), &word_of(&ck[1]))?;
                    rhs = rhs.add(&TensorElement::pure(&[&a, &b]).scale(&lc.mul_ref(kc).mul_ref(cc)))?;
                }
            }
        }
        Ok((lhs.upto(w) != rhs.upto(w)).then(|| label(l, k)))
    });
    report.results.push(CheckResult::new("action-coproduct", r, d, z));

    // 1◂ = 1 ⊗ 1
    let r = match model.coaction_mono(&MultiIndex::zero(f.ngens())) {
        Ok(t) if t == TensorElement::one(&specs) => None,
        Ok(t) => Some(format!("1◂ = {t}")),
        Err(e) => Some(format!("error: {e}")),
    };
    report.results.push(CheckResult::new("coaction-unit", r, d, z));

    // (kk′)◂ = (k⁽¹⁾ ⊲ k′₍₁₎) k′₍₂₎⁽¹⁾ ⊗ k⁽²⁾ k′₍₂₎⁽²⁾
    let kpairs: Vec<(MultiIndex, MultiIndex)> = ks
        .iter()
        .flat_map(|a| {
            ks.iter()
                .filter(|b| a.degree() + b.degree() <= d)
                .map(move |b| (a.clone(), b.clone()))
        })
        .collect();
    let r = first_failure(&kpairs, |(a, b)| {
        let lhs = model.coaction(&nc_mul(&mono(f, a), &mono(f, b))?)?;
        let mut rhs = TensorElement::zero(&specs);
        let db = coproduct(&mono(f, b))?;
        for (ak, ac) in model.coaction_mono(a)?.terms() {
            for (bk, bc) in db.terms() {
                let left = model.act_word(&mono(f, &ak[0]), &word_of(&bk[0]))?;
                for (ck, cc) in model.coaction_mono(&bk[1])?.terms() {
                    let x = nc_mul(&left, &mono(f, &ck[0]))?;
                    let y = nc_mul(&mono(f, &ak[1]), &mono(f, &ck[1]))?;
                    rhs = rhs.add(&TensorElement::pure(&[&x, &y]).scale(&ac.mul_ref(bc).mul_ref(cc)))?;
                }
            }
        }
        Ok((lhs.upto(w) != rhs.upto(w)).then(|| format!("k={}, k′={}", mono(f, a), mono(f, b))))
    });
    report.results.push(CheckResult::new("coaction-product", r, d, z));

    // k₍₁₎⁽¹⁾(l ⊲ k₍₂₎) ⊗ k₍₁₎⁽²⁾ = (l ⊲ k₍₁₎) k₍₂₎⁽¹⁾ ⊗ k₍₂₎⁽²⁾
    let r = first_failure(&pairs, |(l, k)| {
        let lm = mono(f, l);
        let dk = coproduct(&mono(f, k))?;
        let mut lhs = TensorElement::zero(&specs);
        let mut rhs = TensorElement::zero(&specs);
        for (kk, kc) in dk.terms() {
            let acted2 = model.act_word(&lm, &word_of(&kk[1]))?;
            for (ck, cc) in model.coaction_mono(&kk[0])?.terms() {
                let x = nc_mul(&mono(f, &ck[0]), &acted2)?;
                lhs = lhs.add(&TensorElement::pure(&[&x, &mono(f, &ck[1])]).scale(&kc.mul_ref(cc)))?;
            }
            let acted1 = model.act_word(&lm, &word_of(&kk[0]))?;
            for (ck, cc) in model.coaction_mono(&kk[1])?.terms() {
                let x = nc_mul(&acted1, &mono(f, &ck[0]))?;
                rhs = rhs.add(&TensorElement::pure(&[&x, &mono(f, &ck[1])]).scale(&kc.mul_ref(cc)))?;
            }
        }
        Ok((lhs.upto(w) != rhs.upto(w)).then(|| label(l, k)))
    });
    report.results.push(CheckResult::new("action-coaction", r, d, z));

    let kgens = model.data.gens_in(Sector::K);
    let r = first_failure(&kgens, |&k| {
        let b = model.dressing(k).expect("checked at construction");
        let ok = coproduct(b)?.upto(w) == TensorElement::pure(&[b, b]).upto(w);
        Ok((!ok).then(|| format!("β of {}", f.gen_name(k))))
    });
    report.results.push(CheckResult::new("coaction-grouplike", r, d, z));
    report
}

/// Compares a built bicrossproduct with a directly entered presentation, and
/// the coaction with the K-free part of the built coproduct.
pub fn check_reconstruction(model: &BicrossModel, built: &Spec, direct: &Spec, d: u32) -> Report {
    let z = built.window().zorder;
    let mut report = Report::new(&format!("bicross reconstruction: {}", model.data.name));
    let n = built.ngens();
    if direct.ngens() != n
        || (0..n).any(|g| built.gen_name(g) != direct.gen_name(g))
        || built.window() != direct.window()
    {
        report.results.push(CheckResult::new(
            "generators",
            Some("generator lists or windows differ".into()),
            d,
            z,
        ));
        return report;
    }
    let mut rel = None;
    'outer: for j in 0..n {
        for i in 0..j {
            if built.rule(j, i) != direct.rule(j, i) {
                rel = Some(format!("[{}, {}]", built.gen_name(j), built.gen_name(i)));
                break 'outer;
            }
        }
    }
    report.results.push(CheckResult::new("relations", rel, d, z));

    let gens: Vec<usize> = (0..n).collect();
    let name = |g: usize| built.gen_name(g).to_string();
    let r = first_failure(&gens, |&g| {
        Ok((built.coproduct_of(g)?.terms() != direct.coproduct_of(g)?.terms()).then(|| name(g)))
    });
    report.results.push(CheckResult::new("coproduct", r, d, z));
    let r = first_failure(&gens, |&g| {
        Ok((built.counit_of(g)? != direct.counit_of(g)?).then(|| name(g)))
    });
    report.results.push(CheckResult::new("counit", r, d, z));
    let r = first_failure(&gens, |&g| {
        Ok((built.antipode_of(g)?.terms() != direct.antipode_of(g)?.terms()).then(|| name(g)))
    });
    report.results.push(CheckResult::new("antipode", r, d, z));

    // k◂ is the part of Δ_H(k) whose first slot carries no K-sector generator.
    let ks = sector_monomials(built, Sector::K, d);
    let w = built.window().degree;
    let r = first_failure(&ks, |m| {
        let from_h: BTreeMap<Vec<MultiIndex>, ParamSeries> = coproduct(&mono(built, m))?
            .upto(w)
            .terms()
            .iter()
            .filter(|(k, _)| {
                k[0].entries()
                    .iter()
                    .enumerate()
                    .all(|(g, &e)| e == 0 || built.sector(g) == Sector::L)
            })
            .map(|(k, c)| (k.clone(), c.clone()))
            .collect();
        let co = model.coaction_mono(m)?.upto(w);
        Ok((&from_h != co.terms()).then(|| mono(built, m).to_string()))
    });
    report
        .results
        .push(CheckResult::new("coaction-from-coproduct", r, d, z));
    report
}

/// Antilinear antimultiplicative extension of the generator star images.
/// Coefficients are real, so conjugation acts trivially on them.
pub fn star_apply(el: &NCElement) -> Result<NCElement> {
    let spec = el.spec();
    let mut acc = NCElement::zero(spec);
    for (m, c) in el.terms() {
        let mut t = NCElement::one(spec);
        for (g, &e) in m.entries().iter().enumerate().rev() {
            if e > 0 {
                t = nc_mul(&t, &spec.star_of(g)?.pow(e)?)?;
            }
        }
        acc = acc.add(&t.scale(c))?;
    }
    Ok(acc)
}

/// Involutivity and antimultiplicativity on monomials of degree ≤ `d`, and,
/// given a model, `(l ⊲ k)* = l* ⊲ S(k)*` on L-monomials of degree ≤ `d`.
pub fn check_star(spec: &Spec, model: Option<&BicrossModel>, d: u32) -> Report {
    let z = spec.window().zorder;
    let mut report = Report::new(&format!("star structure: {}", spec.name()));
    let basis = basis_upto(spec, d);

    let r = first_failure(&basis, |x| {
        let back = star_apply(&star_apply(x)?)?;
        Ok((back.upto(d) != x.upto(d)).then(|| x.to_string()))
    });
    report.results.push(CheckResult::new("star-involutive", r, d, z));

    let pairs: Vec<(&NCElement, &NCElement)> = basis
        .iter()
        .flat_map(|x| basis.iter().map(move |y| (x, y)))
        .filter(|(x, y)| x.degree().unwrap_or(0) + y.degree().unwrap_or(0) <= d)
        .collect();
    let r = first_failure(&pairs, |(x, y)| {
        let lhs = star_apply(&nc_mul(x, y)?)?;
        let rhs = nc_mul(&star_apply(y)?, &star_apply(x)?)?;
        Ok((lhs.upto(d) != rhs.upto(d)).then(|| format!("x={x}, y={y}")))
    });
    report
        .results
        .push(CheckResult::new("star-antimultiplicative", r, d, z));

    if let Some(model) = model {
        let f = &model.frame;
        let ls = sector_monomials(f, Sector::L, d);
        let ks = model.data.gens_in(Sector::K);
        let w = f.window().degree;
        let pairs: Vec<(MultiIndex, usize)> = ls
            .iter()
            .flat_map(|l| ks.iter().map(move |&k| (l.clone(), k)))
            .collect();
        let r = first_failure(&pairs, |(l, k)| {
            let lm = mono(f, l);
            let lhs = star_apply(&model.act_word(&lm, &[*k])?)?;
            let sk = star_apply(&antipode(&NCElement::generator(f, *k))?)?;
            let rhs = model.act(&star_apply(&lm)?, &sk)?;
            Ok((lhs.upto(w) != rhs.upto(w)).then(|| format!("l={lm}, k={}", f.gen_name(*k))))
        });
        report.results.push(CheckResult::new("star-compatibility", r, d, z));
    }
    report
}

/// Compatibility at degree `d`, reconstruction against `direct` when given,
/// and the star checks when the data carries a star, all at the working window.
pub fn check_bicross(data: &Arc<BicrossData>, direct: Option<&Arc<SpecSource>>, d: u32, z: u32) -> Result<Report> {
    let w = crate::hopf::work_window(d, z, 2);
    let model = BicrossModel::new(data, w)?;
    let built = build_bicross(data, w)?;
    let mut report = check_compatibility(&model, d);
    report.subject = format!("bicrossproduct: {}", data.name);
    if let Some(src) = direct {
        report.extend(check_reconstruction(&model, &built, &src.materialize(w)?, d));
    }
    if built.has_star() {
        report.extend(check_star(&built, Some(&model), d));
    }
    Ok(report)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::hopf::{check_hopf_axioms, work_window};
    use crate::ncalg::parse_element;

    pub(crate) const POINCARE: &str = "
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

    fn model(text: &str, w: Window) -> BicrossModel {
        BicrossModel::new(&Arc::new(BicrossData::from_text(text).unwrap()), w).unwrap()
    }

    #[test]
    fn action_examples() {
        let m = model(POINCARE, Window::new(4, 4));
        let f = &m.frame;
        let pm = parse_element(f, "Pm").unwrap();
        assert_eq!(action_extend(&m, &pm, &[0]).unwrap(), parse_element(f, "2*Pm").unwrap());
        // Leibniz on a product
        let pmpp = parse_element(f, "Pm*Pp").unwrap();
        let expect = parse_element(f, "2*Pm*Pp + Pm*(1/z)*(exp(-2*z*Pp) - 1)").unwrap();
        assert_eq!(action_extend(&m, &pmpp, &[0]).unwrap(), expect);
        // scalars are annihilated
        assert!(action_extend(&m, &NCElement::one(f), &[0]).unwrap().is_zero());
    }

    #[test]
    fn coaction_on_k_squared_is_not_purely_multiplicative() {
        let m = model(POINCARE, Window::new(4, 4));
        let f = &m.frame;
        let k2 = MultiIndex::new(vec![2, 0, 0]);
        let co = m.coaction_mono(&k2).unwrap();
        // (K²)◂ = β² ⊗ K² + (β ⊲ K) ⊗ K
        let beta = parse_element(f, "exp(-2*z*Pp)").unwrap();
        let b2 = nc_mul(&beta, &beta).unwrap();
        let bk = action_extend(&m, &beta, &[0]).unwrap();
        let kk = parse_element(f, "K^2").unwrap();
        let k = parse_element(f, "K").unwrap();
        let expect = TensorElement::pure(&[&b2, &kk])
            .add(&TensorElement::pure(&[&bk, &k]))
            .unwrap();
        assert_eq!(co, expect);
    }

    #[test]
    fn build_reconstructs_generator_structure() {
        let data = BicrossData::from_text(POINCARE).unwrap();
        let h = build_bicross(&data, Window::new(4, 4)).unwrap();
        let pm = parse_element(&h, "Pm").unwrap();
        let k = parse_element(&h, "K").unwrap();
        let comm = nc_mul(&k, &pm).unwrap().sub(&nc_mul(&pm, &k).unwrap()).unwrap();
        assert_eq!(comm, parse_element(&h, "-2*Pm").unwrap());
        assert_eq!(
            coproduct(&pm).unwrap().canonical(),
            "1 @ Pm - 2*z*Pp @ Pm + 2*z^2*Pp^2 @ Pm - 4/3*z^3*Pp^3 @ Pm + 2/3*z^4*Pp^4 @ Pm + Pm @ 1"
        );
    }

    #[test]
    fn compatibility_and_mutation() {
        let w = work_window(2, 4, 2);
        let data = Arc::new(BicrossData::from_text(POINCARE).unwrap());
        let m = BicrossModel::new(&data, w).unwrap();
        let r = check_compatibility(&m, 2);
        assert!(r.passed(), "{}", r.to_text());

        let mut bad = (*data).clone();
        bad.action.insert((1, 0), expr::parse("3*Pm", &bad.symbols()).unwrap());
        let m = BicrossModel::new(&Arc::new(bad), w).unwrap();
        let r = check_compatibility(&m, 2);
        assert!(!r.get("action-coproduct").unwrap().passed());
        assert!(r.get("action-counit").unwrap().passed());
    }

    #[test]
    fn trivial_data_gives_tensor_product() {
        let text = "
[bicross]
name = trivial
parameter = z
[generators]
K = K
X = L
[coproduct]
X = X @ 1 + 1 @ X
[counit]
X = 0
[antipode]
X = -X
[coaction]
K = 1 @ K
";
        let data = BicrossData::from_text(text).unwrap();
        let h = build_bicross(&data, Window::new(3, 2)).unwrap();
        assert!(h.rule(1, 0).is_none());
        assert!(check_hopf_axioms(&h, 3).passed());
        let k = parse_element(&h, "K").unwrap();
        assert_eq!(coproduct(&k).unwrap().canonical(), "1 @ K + K @ 1");
    }

    #[test]
    fn star_examples() {
        let data = BicrossData::from_text(POINCARE).unwrap();
        let h = build_bicross(&data, Window::new(4, 4)).unwrap();
        let pp = parse_element(&h, "Pp").unwrap();
        assert_eq!(star_apply(&pp).unwrap(), pp);
        assert_eq!(star_apply(&NCElement::one(&h)).unwrap(), NCElement::one(&h));
        let kpp = parse_element(&h, "K*Pp").unwrap();
        let expect = nc_mul(&pp, &parse_element(&h, "K").unwrap()).unwrap().neg();
        assert_eq!(star_apply(&kpp).unwrap(), expect);
    }

    #[test]
    fn non_grouplike_coaction_is_unsupported() {
        let text = POINCARE.replace("K = exp(-2*z*Pp) @ K", "K = exp(-2*z*Pp) @ K + Pm @ 1");
        assert!(matches!(BicrossData::from_text(&text), Err(Error::Unsupported(_))));
        let text = POINCARE.replace("K = exp(-2*z*Pp) @ K", "K = (1 + Pm) @ K");
        let data = Arc::new(BicrossData::from_text(&text).unwrap());
        assert!(matches!(
            BicrossModel::new(&data, Window::new(3, 2)),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn text_roundtrip() {
        let a = BicrossData::from_text(POINCARE).unwrap();
        let b = BicrossData::from_text(&a.to_text()).unwrap();
        assert_eq!(a.to_text(), b.to_text());
    }
}
