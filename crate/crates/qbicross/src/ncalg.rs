//! Normal-ordered noncommutative algebras given by generators, straightening
//! rules and (optionally) Hopf structure maps, plus their tensor powers.
//!
//! Generators are ordered K-sector first. A rule for `j > i` reads
//! `g_j g_i = g_i g_j + [g_j, g_i]`, so repeated swapping moves every word into
//! the basis `g_1^{m_1} ⋯ g_n^{m_n}`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{self, print_ast, Expr, SymbolTable};
use crate::multiindex::{mcomb, MultiIndex};
use crate::paramseries::{Param, ParamSeries, Q};

/// Upper bound on swap steps for a single product before admissibility is declared violated.
pub const MAX_STEPS: u64 = 20_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Sector {
    K,
    L,
}

/// Truncation window: generator-degree cap `degree`, parameter window `[-bottom, zorder]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Window {
    pub degree: u32,
    pub zorder: u32,
    pub bottom: u32,
}

impl Window {
    pub fn new(degree: u32, zorder: u32) -> Self {
        Window {
            degree,
            zorder,
            bottom: 2,
        }
    }
}

pub type TensorAst = Vec<(Expr, Expr)>;

/// Parsed presentation, kept as ASTs so it can be materialized at any window.
#[derive(Clone, Debug)]
pub struct SpecSource {
    pub name: String,
    pub param: String,
    pub inverse: bool,
    pub gens: Vec<(String, Sector)>,
    /// `(j, i, value)` with `j > i`, meaning `[g_j, g_i] = value`.
    pub relations: Vec<(usize, usize, Expr)>,
    pub coproduct: Option<Vec<TensorAst>>,
    pub counit: Option<Vec<Expr>>,
    pub antipode: Option<Vec<Expr>>,
    pub star: Option<Vec<Expr>>,
}

/// One `[section]` of a spec file: `(lhs, rhs, line)` entries.
#[derive(Clone, Debug)]
pub struct Section {
    pub name: String,
    pub entries: Vec<(String, String, usize)>,
}

/// Splits INI-like text into sections. `#` starts a comment.
pub fn parse_sections(text: &str) -> Result<Vec<Section>> {
    let mut out: Vec<Section> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if body.starts_with('[') && body.ends_with(']') && !body.contains('=') {
            out.push(Section {
                name: body[1..body.len() - 1].trim().to_string(),
                entries: Vec::new(),
            });
            continue;
        }
        let Some(sec) = out.last_mut() else {
            return Err(Error::Spec(format!("line {line}: entry outside any section")));
        };
        let Some((l, r)) = body.split_once('=') else {
            return Err(Error::Spec(format!("line {line}: expected `lhs = rhs`")));
        };
        sec.entries.push((l.trim().to_string(), r.trim().to_string(), line));
    }
    Ok(out)
}

pub fn section<'a>(secs: &'a [Section], name: &str) -> Option<&'a Section> {
    secs.iter().find(|s| s.name == name)
}

pub(crate) fn at_line(line: usize, e: Error) -> Error {
    Error::Spec(format!("line {line}: {e}"))
}

fn key_values(secs: &[Section], name: &str) -> Result<HashMap<String, String>> {
    let s = section(secs, name).ok_or_else(|| Error::Spec(format!("missing [{name}] section")))?;
    Ok(s.entries.iter().map(|(k, v, _)| (k.clone(), v.clone())).collect())
}

/// Header and generator list shared by algebra and bicross files.
/// `(name, parameter, inverse, generators)` of a spec header.
pub(crate) type Header = (String, String, bool, Vec<(String, Sector)>);

pub(crate) fn parse_header(secs: &[Section], head: &str) -> Result<Header> {
    let kv = key_values(secs, head)?;
    let name = kv
        .get("name")
        .cloned()
        .ok_or_else(|| Error::Spec("missing name".into()))?;
    let param = kv
        .get("parameter")
        .cloned()
        .ok_or_else(|| Error::Spec("missing parameter".into()))?;
    let inverse = match kv.get("inverse").map(String::as_str) {
        None | Some("false") => false,
        Some("true") => true,
        Some(o) => return Err(Error::Spec(format!("inverse must be true or false, got `{o}`"))),
    };
    let gsec = section(secs, "generators").ok_or_else(|| Error::Spec("missing [generators] section".into()))?;
    let mut gens = Vec::new();
    for (g, s, line) in &gsec.entries {
        let sector = match s.as_str() {
            "K" => Sector::K,
            "L" => Sector::L,
            _ => return Err(Error::Spec(format!("line {line}: sector must be K or L"))),
        };
        if gens.iter().any(|(n, _): &(String, Sector)| n == g) || *g == param {
            return Err(Error::Spec(format!("line {line}: duplicate symbol `{g}`")));
        }
        gens.push((g.clone(), sector));
    }
    if gens.windows(2).any(|w| w[0].1 == Sector::L && w[1].1 == Sector::K) {
        return Err(Error::Spec(
            "K-sector generators must precede L-sector generators".into(),
        ));
    }
    Ok((name, param, inverse, gens))
}

/// Parses `[A, B] = value` lines into `(j, i, value)` with `j > i`.
pub(crate) fn parse_relations(sec: Option<&Section>, ctx: &SymbolTable) -> Result<Vec<(usize, usize, Expr)>> {
    let mut out: Vec<(usize, usize, Expr)> = Vec::new();
    let Some(sec) = sec else { return Ok(out) };
    for (lhs, rhs, line) in &sec.entries {
        let inner = lhs
            .strip_prefix('[')
            .and_then(|s| s.strip_suffix(']'))
            .ok_or_else(|| Error::Spec(format!("line {line}: relation must look like `[A, B] = …`")))?;
        let (a, b) = inner
            .split_once(',')
            .ok_or_else(|| Error::Spec(format!("line {line}: relation must look like `[A, B] = …`")))?;
        let idx = |s: &str| {
            ctx.symbols
                .iter()
                .position(|g| g == s.trim())
                .ok_or_else(|| Error::Spec(format!("line {line}: unknown generator `{}`", s.trim())))
        };
        let (a, b) = (idx(a)?, idx(b)?);
        if a == b {
            return Err(Error::Spec(format!(
                "line {line}: commutator of a generator with itself"
            )));
        }
        let v = expr::parse(rhs, ctx).map_err(|e| at_line(*line, e))?;
        let (j, i, v) = if a > b {
            (a, b, v)
        } else {
            (b, a, Expr::Neg(Box::new(v)))
        };
        if out.iter().any(|r| r.0 == j && r.1 == i) {
            return Err(Error::Spec(format!("line {line}: duplicate relation")));
        }
        out.push((j, i, v));
    }
    Ok(out)
}

/// Parses a per-generator section; missing generators are an error when `required`.
pub(crate) fn parse_per_gen<T>(
    sec: Option<&Section>,
    ctx: &SymbolTable,
    only: &[usize],
    f: impl Fn(&str, &SymbolTable) -> Result<T>,
) -> Result<Option<Vec<Option<T>>>> {
    let Some(sec) = sec else { return Ok(None) };
    let mut out: Vec<Option<T>> = (0..ctx.symbols.len()).map(|_| None).collect();
    for (g, rhs, line) in &sec.entries {
        let i = ctx
            .symbols
            .iter()
            .position(|s| s == g)
            .ok_or_else(|| Error::Spec(format!("line {line}: unknown generator `{g}`")))?;
        if !only.contains(&i) {
            return Err(Error::Spec(format!(
                "line {line}: `{g}` is not allowed in [{}]",
                sec.name
            )));
        }
        if out[i].is_some() {
            return Err(Error::Spec(format!("line {line}: `{g}` given twice")));
        }
        out[i] = Some(f(rhs, ctx).map_err(|e| at_line(*line, e))?);
    }
    for &i in only {
        if out[i].is_none() {
            return Err(Error::Spec(format!(
                "[{}] has no entry for `{}`",
                sec.name, ctx.symbols[i]
            )));
        }
    }
    Ok(Some(out))
}

fn unwrap_all<T>(v: Option<Vec<Option<T>>>) -> Option<Vec<T>> {
    v.map(|v| v.into_iter().map(|x| x.expect("checked by parse_per_gen")).collect())
}

impl SpecSource {
    pub fn symbols(&self) -> SymbolTable {
        SymbolTable {
            param: self.param.clone(),
            symbols: self.gens.iter().map(|g| g.0.clone()).collect(),
        }
    }

    pub fn gen_index(&self, name: &str) -> Option<usize> {
        self.gens.iter().position(|g| g.0 == name)
    }

    /// Parses an algebra spec file (`[algebra]` header).
    pub fn from_text(text: &str) -> Result<SpecSource> {
        let secs = parse_sections(text)?;
        let (name, param, inverse, gens) = parse_header(&secs, "algebra")?;
        let ctx = SymbolTable {
            param: param.clone(),
            symbols: gens.iter().map(|g| g.0.clone()).collect(),
        };
        let all: Vec<usize> = (0..gens.len()).collect();
        let relations = parse_relations(section(&secs, "relations"), &ctx)?;
        let coproduct = unwrap_all(parse_per_gen(
            section(&secs, "coproduct"),
            &ctx,
            &all,
            expr::parse_tensor,
        )?);
        let counit = unwrap_all(parse_per_gen(section(&secs, "counit"), &ctx, &all, expr::parse)?);
        let antipode = unwrap_all(parse_per_gen(section(&secs, "antipode"), &ctx, &all, expr::parse)?);
        let star = unwrap_all(parse_per_gen(section(&secs, "star"), &ctx, &all, expr::parse)?);
        for s in &secs {
            if ![
                "algebra",
                "generators",
                "relations",
                "coproduct",
                "counit",
                "antipode",
                "star",
            ]
            .contains(&s.name.as_str())
            {
                return Err(Error::Spec(format!("unknown section [{}]", s.name)));
            }
        }
        Ok(SpecSource {
            name,
            param,
            inverse,
            gens,
            relations,
            coproduct,
            counit,
            antipode,
            star,
        })
    }

    /// Serializes back to spec-file text.
    pub fn to_text(&self) -> String {
        let ctx = self.symbols();
        let mut s = format!(
            "[algebra]\nname = {}\nparameter = {}\ninverse = {}\n\n[generators]\n",
            self.name, self.param, self.inverse
        );
        for (g, sec) in &self.gens {
            s += &format!("{g} = {sec:?}\n");
        }
        s += "\n[relations]\n";
        for (j, i, v) in &self.relations {
            s += &format!("[{}, {}] = {}\n", ctx.symbols[*j], ctx.symbols[*i], print_ast(v, &ctx));
        }
        if let Some(cop) = &self.coproduct {
            s += "\n[coproduct]\n";
            for (g, t) in cop.iter().enumerate() {
                let parts: Vec<String> = t
                    .iter()
                    .map(|(a, b)| format!("({}) @ ({})", print_ast(a, &ctx), print_ast(b, &ctx)))
                    .collect();
                s += &format!("{} = {}\n", ctx.symbols[g], parts.join(" + "));
            }
        }
        for (title, v) in [
            ("counit", &self.counit),
            ("antipode", &self.antipode),
            ("star", &self.star),
        ] {
            if let Some(v) = v {
                s += &format!("\n[{title}]\n");
                for (g, e) in v.iter().enumerate() {
                    s += &format!("{} = {}\n", ctx.symbols[g], print_ast(e, &ctx));
                }
            }
        }
        s
    }

    /// Builds the normal-ordered algebra at a truncation window.
    pub fn materialize(self: &Arc<Self>, w: Window) -> Result<Spec> {
        let n = self.gens.len();
        let eval_param = Param::new(&self.param, self.inverse, w.bottom, w.zorder + w.bottom);
        let final_param = Param::new(&self.param, self.inverse, w.bottom, w.zorder);
        let sectors: Vec<Sector> = self.gens.iter().map(|g| g.1).collect();

        // Rules are read with ordered concatenation only.
        let phase1 = Arc::new(AlgebraSpec::bare(
            self.clone(),
            w,
            eval_param.clone(),
            true,
            vec![vec![None; n]; n],
        ));
        let mut rules = vec![vec![None; n]; n];
        let mut cross_sector: Option<Sector> = None;
        for (j, i, ast) in &self.relations {
            let v = eval_ast(&phase1, ast)
                .map_err(|e| Error::Spec(format!("[{}, {}]: {e}", self.gens[*j].0, self.gens[*i].0)))?;
            let label = format!("[{}, {}]", self.gens[*j].0, self.gens[*i].0);
            if let Some(d) = v.lowest_param_degree() {
                if d < 0 {
                    return Err(Error::Spec(format!("{label}: {}", Error::NegativePowers(d))));
                }
            }
            if sectors[*j] != sectors[*i] {
                let mut seen: HashSet<Sector> = HashSet::new();
                for m in v.terms.keys() {
                    for (g, &e) in m.entries().iter().enumerate() {
                        if e > 0 {
                            seen.insert(sectors[g]);
                        }
                    }
                }
                if seen.len() > 1 {
                    return Err(Error::Admissibility(format!(
                        "{label} mixes K- and L-sector generators"
                    )));
                }
                if let Some(&s) = seen.iter().next() {
                    match cross_sector {
                        Some(c) if c != s => {
                            return Err(Error::Admissibility(format!(
                                "{label} lands in a different sector than earlier cross rules"
                            )))
                        }
                        _ => cross_sector = Some(s),
                    }
                }
            } else if v.terms.keys().any(|m| m.degree() > 1) {
                return Err(Error::Admissibility(format!(
                    "{label}: same-sector rules must be linear"
                )));
            }
            if !v.is_zero() {
                rules[*j][*i] = Some(v.terms);
            }
        }

        let eval_alg = Arc::new(AlgebraSpec::bare(self.clone(), w, eval_param, false, rules.clone()));
        let ev = |e: &Expr| eval_ast(&eval_alg, e);
        let rewin = |x: NCElement| -> Result<Poly> {
            let p: Poly = x
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), c.rewindow(&final_param)))
                .filter(|(_, c)| !c.is_zero())
                .collect();
            if let Some(d) = p.values().filter_map(|c| c.lowest_degree()).min() {
                if d < 0 {
                    return Err(Error::NegativePowers(d));
                }
            }
            Ok(p)
        };
        let coproduct = match &self.coproduct {
            None => None,
            Some(v) => {
                let mut out = Vec::with_capacity(n);
                for (g, t) in v.iter().enumerate() {
                    let mut acc: BTreeMap<Vec<MultiIndex>, ParamSeries> = BTreeMap::new();
                    for (a, b) in t {
                        let (ea, eb) = (ev(a)?, ev(b)?);
                        for (ma, ca) in &ea.terms {
                            for (mb, cb) in &eb.terms {
                                add_term(&mut acc, vec![ma.clone(), mb.clone()], ca.mul_ref(cb));
                            }
                        }
                    }
                    let mut fin = BTreeMap::new();
                    for (k, c) in acc {
                        let c = c.rewindow(&final_param);
                        if c.lowest_degree().is_some_and(|d| d < 0) {
                            return Err(Error::Spec(format!(
                                "coproduct of {}: negative parameter powers",
                                self.gens[g].0
                            )));
                        }
                        if !c.is_zero() {
                            fin.insert(k, c);
                        }
                    }
                    out.push(fin);
                }
                Some(out)
            }
        };
        let counit = match &self.counit {
            None => None,
            Some(v) => {
                let mut out = Vec::with_capacity(n);
                for (g, e) in v.iter().enumerate() {
                    let x = rewin(ev(e)?)?;
                    if x.keys().any(|m| !m.is_zero()) {
                        return Err(Error::Spec(format!("counit of {} is not a scalar", self.gens[g].0)));
                    }
                    out.push(
                        x.into_values()
                            .next()
                            .unwrap_or_else(|| ParamSeries::zero(&final_param)),
                    );
                }
                Some(out)
            }
        };
        let map_all = |v: &Option<Vec<Expr>>| -> Result<Option<Vec<Poly>>> {
            match v {
                None => Ok(None),
                Some(v) => v.iter().map(|e| rewin(ev(e)?)).collect::<Result<Vec<_>>>().map(Some),
            }
        };
        let antipode = map_all(&self.antipode)?;
        let star = map_all(&self.star)?;
        let rules = rules
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|r| {
                        r.map(|p: Poly| {
                            p.into_iter()
                                .map(|(m, c)| (m, c.rewindow(&final_param)))
                                .filter(|(_, c)| !c.is_zero())
                                .collect::<Poly>()
                        })
                        .filter(|p| !p.is_empty())
                    })
                    .collect()
            })
            .collect();
        let mut alg = AlgebraSpec::bare(self.clone(), w, final_param, false, rules);
        alg.coproduct = coproduct;
        alg.counit = counit;
        alg.antipode = antipode;
        alg.star = star;
        Ok(Arc::new(alg))
    }
}

pub type Poly = BTreeMap<MultiIndex, ParamSeries>;
type Cached = Arc<(Poly, bool)>;

fn add_term<K: Ord>(acc: &mut BTreeMap<K, ParamSeries>, k: K, c: ParamSeries) {
    if c.is_zero() {
        return;
    }
    match acc.get_mut(&k) {
        Some(x) => {
            x.add_assign_ref(&c);
            if x.is_zero() {
                acc.remove(&k);
            }
        }
        None => {
            acc.insert(k, c);
        }
    }
}

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

/// A materialized algebra: straightening rules and structure maps at a fixed window.
pub struct AlgebraSpec {
    id: u64,
    source: Arc<SpecSource>,
    window: Window,
    param: Param,
    strict: bool,
    rules: Vec<Vec<Option<Poly>>>,
    coproduct: Option<Vec<BTreeMap<Vec<MultiIndex>, ParamSeries>>>,
    counit: Option<Vec<ParamSeries>>,
    antipode: Option<Vec<Poly>>,
    star: Option<Vec<Poly>>,
    cache: RwLock<HashMap<(MultiIndex, usize), Cached>>,
}

pub type Spec = Arc<AlgebraSpec>;

impl fmt::Debug for AlgebraSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "AlgebraSpec({} #{} D={} Z={})",
            self.source.name, self.id, self.window.degree, self.window.zorder
        )
    }
}

struct Ctx {
    steps: u64,
    active: HashSet<(MultiIndex, usize)>,
}

impl AlgebraSpec {
    fn bare(
        source: Arc<SpecSource>,
        window: Window,
        param: Param,
        strict: bool,
        rules: Vec<Vec<Option<Poly>>>,
    ) -> Self {
        AlgebraSpec {
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
            source,
            window,
            param,
            strict,
            rules,
            coproduct: None,
            counit: None,
            antipode: None,
            star: None,
            cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn id(&self) -> u64 {
        self.id
    }
    pub fn name(&self) -> &str {
        &self.source.name
    }
    pub fn source(&self) -> &Arc<SpecSource> {
        &self.source
    }
    pub fn window(&self) -> Window {
        self.window
    }
    pub fn param(&self) -> &Param {
        &self.param
    }
    pub fn ngens(&self) -> usize {
        self.source.gens.len()
    }
    pub fn gen_name(&self, i: usize) -> &str {
        &self.source.gens[i].0
    }
    pub fn sector(&self, i: usize) -> Sector {
        self.source.gens[i].1
    }
    pub fn gens_in(&self, s: Sector) -> Vec<usize> {
        (0..self.ngens()).filter(|&i| self.sector(i) == s).collect()
    }
    pub fn has_hopf(&self) -> bool {
        self.coproduct.is_some() && self.counit.is_some() && self.antipode.is_some()
    }
    pub fn has_star(&self) -> bool {
        self.star.is_some()
    }

    /// Declared value of `[g_j, g_i]` for `j > i`.
    pub fn rule(&self, j: usize, i: usize) -> Option<&Poly> {
        self.rules.get(j).and_then(|r| r.get(i)).and_then(|r| r.as_ref())
    }

    pub fn cache_len(&self) -> usize {
        self.cache.read().map(|c| c.len()).unwrap_or(0)
    }

    fn ps(&self, c: Q) -> ParamSeries {
        ParamSeries::constant(&self.param, c)
    }

    /// `m · g_g` in normal form, memoized.
    fn mono_gen(&self, m: &MultiIndex, g: usize, ctx: &mut Ctx) -> Result<Cached> {
        let key = (m.clone(), g);
        if let Some(hit) = self.cache.read().expect("cache lock").get(&key) {
            return Ok(hit.clone());
        }
        let top = m.entries().iter().rposition(|&e| e > 0);
        let res = match top {
            Some(h) if h > g => {
                if self.strict {
                    return Err(Error::Spec(format!(
                        "`{}` follows `{}`: value is not written in normal order",
                        self.gen_name(g),
                        self.gen_name(h)
                    )));
                }
                ctx.steps += 1;
                if ctx.steps > MAX_STEPS {
                    return Err(Error::Admissibility(format!(
                        "straightening exceeded {MAX_STEPS} steps"
                    )));
                }
                if !ctx.active.insert(key.clone()) {
                    return Err(Error::Admissibility(format!(
                        "rewriting {:?}·{} loops",
                        m,
                        self.gen_name(g)
                    )));
                }
                // m·g = m'·h·g = (m'·g)·h + m'·[h,g]
                let mut mp = m.entries().to_vec();
                mp[h] -= 1;
                let mp = MultiIndex::new(mp);
                let first = self.mono_gen(&mp, g, ctx)?;
                let mut acc: Poly = BTreeMap::new();
                let mut tr = first.1;
                for (n, c) in &first.0 {
                    let r = self.mono_gen(n, h, ctx)?;
                    tr |= r.1;
                    for (k, d) in &r.0 {
                        add_term(&mut acc, k.clone(), c.mul_ref(d));
                    }
                }
                if let Some(rule) = self.rule(h, g) {
                    for (rm, rc) in rule {
                        let (p, t) = self.mono_mono(&mp, rm, ctx)?;
                        tr |= t;
                        for (k, d) in p {
                            add_term(&mut acc, k, rc.mul_ref(&d));
                        }
                    }
                }
                ctx.active.remove(&key);
                (acc, tr)
            }
            _ => {
                let mut e = m.entries().to_vec();
                e[g] += 1;
                let k = MultiIndex::new(e);
                let mut p = BTreeMap::new();
                if k.degree() <= self.window.degree {
                    p.insert(k, ParamSeries::one(&self.param));
                    (p, false)
                } else {
                    (p, true)
                }
            }
        };
        let res = Arc::new(res);
        self.cache.write().expect("cache lock").insert(key, res.clone());
        Ok(res)
    }

    fn mono_mono(&self, a: &MultiIndex, b: &MultiIndex, ctx: &mut Ctx) -> Result<(Poly, bool)> {
        let mut cur: Poly = BTreeMap::new();
        cur.insert(a.clone(), ParamSeries::one(&self.param));
        let mut tr = false;
        for (g, &e) in b.entries().iter().enumerate() {
            for _ in 0..e {
                let mut next = BTreeMap::new();
                for (n, c) in &cur {
                    let r = self.mono_gen(n, g, ctx)?;
                    tr |= r.1;
                    for (k, d) in &r.0 {
                        add_term(&mut next, k.clone(), c.mul_ref(d));
                    }
                }
                cur = next;
            }
        }
        Ok((cur, tr))
    }

    fn mul_poly(&self, a: &Poly, b: &Poly) -> Result<(Poly, bool)> {
        let mut ctx = Ctx {
            steps: 0,
            active: HashSet::new(),
        };
        let mut acc = BTreeMap::new();
        let mut tr = false;
        for (ma, ca) in a {
            for (mb, cb) in b {
                let (p, t) = self.mono_mono(ma, mb, &mut ctx)?;
                tr |= t;
                let c = ca.mul_ref(cb);
                for (k, d) in p {
                    add_term(&mut acc, k, c.mul_ref(&d));
                }
            }
        }
        Ok((acc, tr))
    }
}

/// Element of a materialized algebra: normal-ordered monomials with series coefficients.
#[derive(Clone)]
pub struct NCElement {
    spec: Spec,
    terms: Poly,
    truncated: bool,
}

impl PartialEq for NCElement {
    fn eq(&self, o: &Self) -> bool {
        self.spec.id == o.spec.id && self.terms == o.terms
    }
}

impl fmt::Debug for NCElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.canonical())
    }
}

impl fmt::Display for NCElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

pub(crate) fn same_spec(a: &Spec, b: &Spec) -> Result<()> {
    if a.id == b.id {
        Ok(())
    } else {
        Err(Error::SpecMismatch)
    }
}

fn mono_text(spec: &AlgebraSpec, m: &MultiIndex) -> Option<String> {
    let parts: Vec<String> = m
        .entries()
        .iter()
        .enumerate()
        .filter(|(_, &e)| e > 0)
        .map(|(g, &e)| {
            if e == 1 {
                spec.gen_name(g).to_string()
            } else {
                format!("{}^{e}", spec.gen_name(g))
            }
        })
        .collect();
    if parts.is_empty() {
        None
    } else {
        Some(parts.join("*"))
    }
}

/// `coef*mono` text pieces; a single-term coefficient keeps its sign outside.
fn term_text(c: &ParamSeries, mono: Option<String>) -> (bool, String) {
    let t = c.terms();
    let (neg, coef) = if t.len() == 1 {
        let neg = t[0].1 < Q::zero();
        let s =
            ParamSeries::monomial(c.param(), if neg { -t[0].1.clone() } else { t[0].1.clone() }, t[0].0).canonical();
        (neg, if s == "1" { None } else { Some(s) })
    } else {
        (false, Some(format!("({})", c.canonical())))
    };
    let body = match (coef, mono) {
        (None, None) => "1".to_string(),
        (None, Some(m)) => m,
        (Some(c), None) => c,
        (Some(c), Some(m)) => format!("{c}*{m}"),
    };
    (neg, body)
}

fn join_terms(parts: Vec<(bool, String)>) -> String {
    if parts.is_empty() {
        return "0".into();
    }
    let mut s = String::new();
    for (i, (neg, body)) in parts.into_iter().enumerate() {
        if i == 0 {
            if neg {
                s.push('-');
            }
        } else {
            s.push_str(if neg { " - " } else { " + " });
        }
        s.push_str(&body);
    }
    s
}

impl NCElement {
    pub fn zero(spec: &Spec) -> Self {
        NCElement {
            spec: spec.clone(),
            terms: BTreeMap::new(),
            truncated: false,
        }
    }

    pub fn one(spec: &Spec) -> Self {
        Self::monomial(spec, MultiIndex::zero(spec.ngens()), ParamSeries::one(&spec.param))
    }

    pub fn scalar(spec: &Spec, c: ParamSeries) -> Self {
        Self::monomial(spec, MultiIndex::zero(spec.ngens()), c)
    }

    pub fn generator(spec: &Spec, i: usize) -> Self {
        Self::monomial(spec, MultiIndex::unit(spec.ngens(), i), ParamSeries::one(&spec.param))
    }

    pub fn gen_named(spec: &Spec, name: &str) -> Result<Self> {
        let i = spec.source.gen_index(name).ok_or_else(|| Error::UnknownSymbol {
            pos: 0,
            name: name.into(),
        })?;
        Ok(Self::generator(spec, i))
    }

    /// A basis monomial (degree above the cap gives zero with the truncation flag).
    pub fn monomial(spec: &Spec, m: MultiIndex, c: ParamSeries) -> Self {
        let mut e = Self::zero(spec);
        if m.degree() > spec.window.degree {
            e.truncated = true;
        } else if !c.is_zero() {
            e.terms.insert(m, c.rewindow(&spec.param));
        }
        e
    }

    pub(crate) fn from_poly(spec: &Spec, terms: Poly, truncated: bool) -> Self {
        NCElement {
            spec: spec.clone(),
            terms,
            truncated,
        }
    }

    pub fn spec(&self) -> &Spec {
        &self.spec
    }
    pub fn terms(&self) -> &Poly {
        &self.terms
    }
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    /// True if a monomial above the degree cap or a parameter order above `Z` was dropped.
    pub fn is_truncated(&self) -> bool {
        self.truncated || self.terms.values().any(|c| c.is_truncated())
    }
    pub fn coeff(&self, m: &MultiIndex) -> ParamSeries {
        self.terms
            .get(m)
            .cloned()
            .unwrap_or_else(|| ParamSeries::zero(&self.spec.param))
    }
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.degree()).max()
    }
    pub fn lowest_param_degree(&self) -> Option<i32> {
        self.terms.values().filter_map(|c| c.lowest_degree()).min()
    }

    pub fn add(&self, o: &NCElement) -> Result<NCElement> {
        same_spec(&self.spec, &o.spec)?;
        let mut r = self.clone();
        for (m, c) in &o.terms {
            add_term(&mut r.terms, m.clone(), c.clone());
        }
        r.truncated |= o.truncated;
        Ok(r)
    }

    pub fn sub(&self, o: &NCElement) -> Result<NCElement> {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> NCElement {
        NCElement {
            spec: self.spec.clone(),
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c.neg_ref())).collect(),
            truncated: self.truncated,
        }
    }

    pub fn scale(&self, c: &ParamSeries) -> NCElement {
        let mut r = Self::zero(&self.spec);
        r.truncated = self.truncated;
        for (m, x) in &self.terms {
            add_term(&mut r.terms, m.clone(), x.mul_ref(c));
        }
        r
    }

    pub fn scale_q(&self, c: &Q) -> NCElement {
        self.scale(&self.spec.ps(c.clone()))
    }

    pub fn mul(&self, o: &NCElement) -> Result<NCElement> {
        nc_mul(self, o)
    }

    pub fn pow(&self, n: u32) -> Result<NCElement> {
        let mut acc = Self::one(&self.spec);
        for _ in 0..n {
            acc = nc_mul(&acc, self)?;
        }
        Ok(acc)
    }

    /// Terms of total generator degree ≤ `d`.
    pub fn upto(&self, d: u32) -> NCElement {
        NCElement {
            spec: self.spec.clone(),
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.degree() <= d)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
            truncated: self.truncated,
        }
    }

    /// Moves the element into another materialization of the same presentation.
    pub fn transport(&self, to: &Spec) -> Result<NCElement> {
        if self.spec.ngens() != to.ngens() || (0..to.ngens()).any(|i| self.spec.gen_name(i) != to.gen_name(i)) {
            return Err(Error::SpecMismatch);
        }
        let mut r = Self::zero(to);
        for (m, c) in &self.terms {
            if m.degree() > to.window.degree {
                r.truncated = true;
            } else {
                add_term(&mut r.terms, m.clone(), c.rewindow(&to.param));
            }
        }
        Ok(r)
    }

    /// Bit-exact canonical text: lexicographic monomial order, ascending parameter degrees.
    pub fn canonical(&self) -> String {
        join_terms(
            self.terms
                .iter()
                .map(|(m, c)| term_text(c, mono_text(&self.spec, m)))
                .collect(),
        )
    }

    /// Counterpart in the commutative exp-polynomial algebra over the given generators
    /// (as coordinates). Fails if other generators occur.
    pub fn to_exppoly(&self, coords: &[usize]) -> Result<expr::ExpPoly> {
        let names: Arc<Vec<String>> = Arc::new(coords.iter().map(|&g| self.spec.gen_name(g).to_string()).collect());
        let mut f = expr::ExpPoly::zero(&self.spec.param, names);
        for (m, c) in &self.terms {
            let mut e = vec![0; coords.len()];
            for (g, &k) in m.entries().iter().enumerate() {
                if k == 0 {
                    continue;
                }
                let pos = coords
                    .iter()
                    .position(|&x| x == g)
                    .ok_or_else(|| Error::NotCommutative(self.spec.gen_name(g).to_string()))?;
                e[pos] = k;
            }
            f.push(MultiIndex::new(e), expr::LinForm::zero(coords.len()), c.clone());
        }
        Ok(f)
    }
}

/// Product `a·b` rewritten to normal order.
pub fn nc_mul(a: &NCElement, b: &NCElement) -> Result<NCElement> {
    same_spec(&a.spec, &b.spec)?;
    let (terms, tr) = a.spec.mul_poly(&a.terms, &b.terms)?;
    Ok(NCElement {
        spec: a.spec.clone(),
        terms,
        truncated: tr || a.truncated || b.truncated,
    })
}

/// Normal form of `g_{w_1}^{p_1} g_{w_2}^{p_2} ⋯`. The empty word gives 1.
pub fn normal_order(spec: &Spec, word: &[(usize, u32)]) -> Result<NCElement> {
    let mut acc = NCElement::one(spec);
    for &(g, p) in word {
        if g >= spec.ngens() {
            return Err(Error::Precondition(format!("generator index {g} out of range")));
        }
        let mut m = vec![0; spec.ngens()];
        m[g] = p;
        let mono = NCElement::monomial(spec, MultiIndex::new(m), ParamSeries::one(&spec.param));
        acc = nc_mul(&acc, &mono)?;
    }
    Ok(acc)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Iterated-commutator form of `a^m a'` (left) or `a' a^m` (right):
/// `Σ C(m,k) ad_a^k(a') a^{m-k}` resp. `Σ C(m,k) a^{m-k} ad'_a^k(a')` with `ad'_a(x) = xa − ax`.
pub fn adjoint_power_expand(a: &NCElement, aprime: &NCElement, m: u32, side: Side) -> Result<NCElement> {
    same_spec(&a.spec, &aprime.spec)?;
    if m > a.spec.window.degree {
        return Err(Error::Precondition(format!("m = {m} exceeds the degree cap")));
    }
    let mut acc = NCElement::zero(&a.spec);
    let mut ad = aprime.clone();
    let mm = MultiIndex::new(vec![m]);
    for k in 0..=m {
        let c = Q::from_integer(BigInt::from(mcomb(&mm, &MultiIndex::new(vec![k]))?));
        let rest = a.pow(m - k)?;
        let term = match side {
            Side::Left => nc_mul(&ad, &rest)?,
            Side::Right => nc_mul(&rest, &ad)?,
        };
        acc = acc.add(&term.scale_q(&c))?;
        ad = match side {
            Side::Left => nc_mul(a, &ad)?.sub(&nc_mul(&ad, a)?)?,
            Side::Right => nc_mul(&ad, a)?.sub(&nc_mul(a, &ad)?)?,
        };
    }
    Ok(acc)
}

/// Evaluates an AST inside an algebra: exponentials become truncated series,
/// negative powers of invertible elements become geometric series.
pub fn eval_ast(spec: &Spec, e: &Expr) -> Result<NCElement> {
    let p = &spec.param;
    let sym_deg = p.symbol_degree();
    Ok(match e {
        Expr::Num(c) => NCElement::scalar(spec, ParamSeries::constant(p, c.clone())),
        Expr::Param => NCElement::scalar(spec, ParamSeries::monomial(p, Q::one(), sym_deg)),
        Expr::Sym(i) => {
            if *i >= spec.ngens() {
                return Err(Error::Precondition(format!("symbol #{i} out of range")));
            }
            NCElement::generator(spec, *i)
        }
        Expr::Add(a, b) => eval_ast(spec, a)?.add(&eval_ast(spec, b)?)?,
        Expr::Sub(a, b) => eval_ast(spec, a)?.sub(&eval_ast(spec, b)?)?,
        Expr::Mul(a, b) => nc_mul(&eval_ast(spec, a)?, &eval_ast(spec, b)?)?,
        Expr::Neg(a) => eval_ast(spec, a)?.neg(),
        Expr::Div(a, b) => {
            let (c, k) = b.as_param_monomial().ok_or_else(|| Error::Parse {
                pos: 0,
                msg: "invalid divisor".into(),
            })?;
            eval_ast(spec, a)?.scale(&ParamSeries::monomial(p, c.recip(), -k * sym_deg))
        }
        Expr::Pow(a, n) if *n >= 0 => eval_ast(spec, a)?.pow(*n as u32)?,
        Expr::Pow(a, n) => {
            if let Some((c, k)) = a.as_param_monomial() {
                let cp = num_traits::pow(c.recip(), n.unsigned_abs() as usize);
                NCElement::scalar(spec, ParamSeries::monomial(p, cp, k * n * sym_deg))
            } else {
                series_inverse(&eval_ast(spec, a)?)?.pow(n.unsigned_abs())?
            }
        }
        Expr::Exp(a) => series_exp(&eval_ast(spec, a)?)?,
    })
}

/// `exp(x)` for `x` without constant term, summed until the terms vanish under truncation.
pub fn series_exp(x: &NCElement) -> Result<NCElement> {
    let spec = &x.spec;
    let zero = MultiIndex::zero(spec.ngens());
    if x.terms.get(&zero).is_some_and(|c| c.terms().iter().any(|t| t.0 <= 0)) {
        return Err(Error::Precondition("exp argument must vanish at the origin".into()));
    }
    let bound = spec.window.degree + spec.window.zorder + spec.window.bottom + 2;
    let mut acc = NCElement::one(spec);
    let mut term = NCElement::one(spec);
    for n in 1..=bound {
        term = nc_mul(&term, x)?.scale_q(&Q::new(BigInt::one(), BigInt::from(n)));
        if term.is_zero() {
            acc.truncated |= term.truncated;
            return Ok(acc);
        }
        acc = acc.add(&term)?;
    }
    Err(Error::Precondition(
        "exp series did not terminate under truncation".into(),
    ))
}

/// Inverse of `c·(1 − y)` with `c` a nonzero rational and `y` nilpotent under truncation.
pub fn series_inverse(x: &NCElement) -> Result<NCElement> {
    let spec = &x.spec;
    let zero = MultiIndex::zero(spec.ngens());
    let c = x.coeff(&zero).coeff(0);
    if c.is_zero() {
        return Err(Error::Precondition("element is not invertible as a series".into()));
    }
    let cinv = c.recip();
    // y = 1 − x/c
    let y = NCElement::one(spec).sub(&x.scale_q(&cinv))?;
    let bound = spec.window.degree + spec.window.zorder + spec.window.bottom + 2;
    let mut acc = NCElement::one(spec);
    let mut term = NCElement::one(spec);
    for _ in 0..bound {
        term = nc_mul(&term, &y)?;
        if term.is_zero() {
            acc.truncated |= term.truncated;
            return Ok(acc.scale_q(&cinv));
        }
        acc = acc.add(&term)?;
    }
    Err(Error::Precondition(
        "geometric series did not terminate under truncation".into(),
    ))
}

// ------------------------------------------------------------------ tensors

/// Element of `A_1 ⊗ ⋯ ⊗ A_k`, slotwise normal-ordered.
#[derive(Clone)]
pub struct TensorElement {
    specs: Vec<Spec>,
    terms: BTreeMap<Vec<MultiIndex>, ParamSeries>,
    truncated: bool,
}

impl PartialEq for TensorElement {
    fn eq(&self, o: &Self) -> bool {
        self.specs.len() == o.specs.len()
            && self.specs.iter().zip(&o.specs).all(|(a, b)| a.id == b.id)
            && self.terms == o.terms
    }
}

impl fmt::Debug for TensorElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.canonical())
    }
}

impl fmt::Display for TensorElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

impl TensorElement {
    pub fn zero(specs: &[Spec]) -> Self {
        TensorElement {
            specs: specs.to_vec(),
            terms: BTreeMap::new(),
            truncated: false,
        }
    }

    pub fn one(specs: &[Spec]) -> Self {
        let mut t = Self::zero(specs);
        let key: Vec<MultiIndex> = specs.iter().map(|s| MultiIndex::zero(s.ngens())).collect();
        t.terms.insert(key, ParamSeries::one(&specs[0].param));
        t
    }

    /// `x_1 ⊗ ⋯ ⊗ x_k`.
    pub fn pure(parts: &[&NCElement]) -> Self {
        let specs: Vec<Spec> = parts.iter().map(|p| p.spec.clone()).collect();
        let mut cur: Vec<(Vec<MultiIndex>, ParamSeries)> = vec![(Vec::new(), ParamSeries::one(&specs[0].param))];
        for p in parts {
            let mut next = Vec::new();
            for (k, c) in &cur {
                for (m, d) in &p.terms {
                    let mut k2 = k.clone();
                    k2.push(m.clone());
                    next.push((k2, c.mul_ref(d)));
                }
            }
            cur = next;
        }
        let mut t = Self::zero(&specs);
        t.truncated = parts.iter().any(|p| p.truncated);
        for (k, c) in cur {
            add_term(&mut t.terms, k, c);
        }
        t
    }

    pub fn specs(&self) -> &[Spec] {
        &self.specs
    }
    pub fn arity(&self) -> usize {
        self.specs.len()
    }
    pub fn terms(&self) -> &BTreeMap<Vec<MultiIndex>, ParamSeries> {
        &self.terms
    }
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    pub fn is_truncated(&self) -> bool {
        self.truncated || self.terms.values().any(|c| c.is_truncated())
    }

    fn check(&self, o: &TensorElement) -> Result<()> {
        if self.specs.len() != o.specs.len() {
            return Err(Error::SpecMismatch);
        }
        for (a, b) in self.specs.iter().zip(&o.specs) {
            same_spec(a, b)?;
        }
        Ok(())
    }

    pub fn push(&mut self, key: Vec<MultiIndex>, c: ParamSeries) {
        add_term(&mut self.terms, key, c);
    }

    pub fn add(&self, o: &TensorElement) -> Result<TensorElement> {
        self.check(o)?;
        let mut r = self.clone();
        for (k, c) in &o.terms {
            add_term(&mut r.terms, k.clone(), c.clone());
        }
        r.truncated |= o.truncated;
        Ok(r)
    }

    pub fn neg(&self) -> TensorElement {
        let mut r = self.clone();
        for c in r.terms.values_mut() {
            *c = c.neg_ref();
        }
        r
    }

    pub fn sub(&self, o: &TensorElement) -> Result<TensorElement> {
        self.add(&o.neg())
    }

    pub fn scale(&self, c: &ParamSeries) -> TensorElement {
        let mut r = Self::zero(&self.specs);
        r.truncated = self.truncated;
        for (k, x) in &self.terms {
            add_term(&mut r.terms, k.clone(), x.mul_ref(c));
        }
        r
    }

    /// Terms whose total degree (summed over slots) is ≤ `d`.
    pub fn upto(&self, d: u32) -> TensorElement {
        let mut r = Self::zero(&self.specs);
        r.truncated = self.truncated;
        for (k, c) in &self.terms {
            if k.iter().map(|m| m.degree()).sum::<u32>() <= d {
                r.terms.insert(k.clone(), c.clone());
            }
        }
        r
    }

    /// Slotwise product.
    pub fn mul(&self, o: &TensorElement) -> Result<TensorElement> {
        tensor_mul(self, o)
    }

    /// Replaces slot `i` of every term by a tensor-valued image (arity grows by `k − 1`).
    pub fn expand_slot(&self, i: usize, f: impl Fn(&MultiIndex) -> Result<TensorElement>) -> Result<TensorElement> {
        let mut specs: Option<Vec<Spec>> = None;
        let mut acc: BTreeMap<Vec<MultiIndex>, ParamSeries> = BTreeMap::new();
        let mut tr = self.truncated;
        for (k, c) in &self.terms {
            let img = f(&k[i])?;
            tr |= img.truncated;
            if specs.is_none() {
                let mut s = self.specs[..i].to_vec();
                s.extend(img.specs.iter().cloned());
                s.extend(self.specs[i + 1..].iter().cloned());
                specs = Some(s);
            }
            for (ik, ic) in &img.terms {
                let mut key = k[..i].to_vec();
                key.extend(ik.iter().cloned());
                key.extend(k[i + 1..].iter().cloned());
                add_term(&mut acc, key, c.mul_ref(ic));
            }
        }
        let specs = match specs {
            Some(s) => s,
            None => {
                // empty tensor: probe the image arity on the unit
                let img = f(&MultiIndex::zero(self.specs[i].ngens()))?;
                let mut s = self.specs[..i].to_vec();
                s.extend(img.specs.iter().cloned());
                s.extend(self.specs[i + 1..].iter().cloned());
                s
            }
        };
        Ok(TensorElement {
            specs,
            terms: acc,
            truncated: tr,
        })
    }

    /// Linear map out of the tensor: `Σ c · f(key)`.
    pub fn contract(&self, target: &Spec, f: impl Fn(&[MultiIndex]) -> Result<NCElement>) -> Result<NCElement> {
        let mut acc = NCElement::zero(target);
        acc.truncated = self.truncated;
        for (k, c) in &self.terms {
            acc = acc.add(&f(k)?.scale(c))?;
        }
        Ok(acc)
    }

    pub fn canonical(&self) -> String {
        join_terms(
            self.terms
                .iter()
                .map(|(k, c)| {
                    let slots: Vec<String> = k
                        .iter()
                        .zip(&self.specs)
                        .map(|(m, s)| mono_text(s, m).unwrap_or_else(|| "1".into()))
                        .collect();
                    let (neg, body) = term_text(c, None);
                    let body = if body == "1" {
                        slots.join(" @ ")
                    } else {
                        format!("{body}*{}", slots.join(" @ "))
                    };
                    (neg, body)
                })
                .collect(),
        )
    }
}

/// `(a⊗b)(a′⊗b′) = aa′ ⊗ bb′`, extended bilinearly; each slot normal-ordered in its own algebra.
pub fn tensor_mul(a: &TensorElement, b: &TensorElement) -> Result<TensorElement> {
    a.check(b)?;
    let k = a.specs.len();
    let mut ctxs: Vec<Ctx> = (0..k)
        .map(|_| Ctx {
            steps: 0,
            active: HashSet::new(),
        })
        .collect();
    let mut acc = BTreeMap::new();
    let mut tr = a.truncated || b.truncated;
    for (ka, ca) in &a.terms {
        for (kb, cb) in &b.terms {
            let mut cur: Vec<(Vec<MultiIndex>, ParamSeries)> = vec![(Vec::new(), ca.mul_ref(cb))];
            for s in 0..k {
                let (p, t) = a.specs[s].mono_mono(&ka[s], &kb[s], &mut ctxs[s])?;
                tr |= t;
                let mut next = Vec::with_capacity(cur.len() * p.len());
                for (key, c) in &cur {
                    for (m, d) in &p {
                        let mut k2 = key.clone();
                        k2.push(m.clone());
                        next.push((k2, c.mul_ref(d)));
                    }
                }
                cur = next;
            }
            for (key, c) in cur {
                add_term(&mut acc, key, c);
            }
        }
    }
    Ok(TensorElement {
        specs: a.specs.clone(),
        terms: acc,
        truncated: tr,
    })
}

// Structure-map accessors used by the hopf and bicross modules.
impl AlgebraSpec {
    pub(crate) fn coproduct_of(self: &Arc<Self>, g: usize) -> Result<TensorElement> {
        let cop = self
            .coproduct
            .as_ref()
            .ok_or_else(|| Error::Spec(format!("{} declares no coproduct", self.name())))?;
        Ok(TensorElement {
            specs: vec![self.clone(), self.clone()],
            terms: cop[g].clone(),
            truncated: false,
        })
    }

    pub(crate) fn counit_of(&self, g: usize) -> Result<ParamSeries> {
        let c = self
            .counit
            .as_ref()
            .ok_or_else(|| Error::Spec(format!("{} declares no counit", self.name())))?;
        Ok(c[g].clone())
    }

    pub(crate) fn antipode_of(self: &Arc<Self>, g: usize) -> Result<NCElement> {
        let s = self
            .antipode
            .as_ref()
            .ok_or_else(|| Error::Spec(format!("{} declares no antipode", self.name())))?;
        Ok(NCElement::from_poly(self, s[g].clone(), false))
    }

    pub(crate) fn star_of(self: &Arc<Self>, g: usize) -> Result<NCElement> {
        let s = self
            .star
            .as_ref()
            .ok_or_else(|| Error::Spec(format!("{} declares no star structure", self.name())))?;
        Ok(NCElement::from_poly(self, s[g].clone(), false))
    }
}

/// All basis monomials of total degree ≤ `d`, as elements.
pub fn basis_upto(spec: &Spec, d: u32) -> Vec<NCElement> {
    MultiIndex::all_up_to(spec.ngens(), d)
        .into_iter()
        .map(|m| NCElement::monomial(spec, m, ParamSeries::one(spec.param())))
        .collect()
}

/// Parses an element written in normal order (e.g. canonical text) or as any expression.
pub fn parse_element(spec: &Spec, text: &str) -> Result<NCElement> {
    let ast = expr::parse(text, &spec.source.symbols())?;
    eval_ast(spec, &ast)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paramseries::{q, qi};

    pub(crate) const KAPPA: &str = "
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
";

    pub(crate) const POINCARE: &str = "
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

    fn load(text: &str, d: u32, z: u32) -> Spec {
        Arc::new(SpecSource::from_text(text).unwrap())
            .materialize(Window::new(d, z))
            .unwrap()
    }

    fn el(s: &Spec, t: &str) -> NCElement {
        parse_element(s, t).unwrap()
    }

    /// Independent oracle: repeatedly rewrite the leftmost adjacent inversion of a word.
    fn brute_force(spec: &Spec, word: &[usize]) -> NCElement {
        let mut work: Vec<(Vec<usize>, ParamSeries)> = vec![(word.to_vec(), ParamSeries::one(spec.param()))];
        let mut out = NCElement::zero(spec);
        let mut steps = 0;
        while let Some((w, c)) = work.pop() {
            steps += 1;
            assert!(steps < 1_000_000, "brute force did not terminate");
            if w.len() as u32 > spec.window().degree {
                continue;
            }
            match (0..w.len().saturating_sub(1)).find(|&p| w[p] > w[p + 1]) {
                None => {
                    let mut m = vec![0; spec.ngens()];
                    for &g in &w {
                        m[g] += 1;
                    }
                    out = out.add(&NCElement::monomial(spec, MultiIndex::new(m), c)).unwrap();
                }
                Some(p) => {
                    let (j, i) = (w[p], w[p + 1]);
                    let mut swapped = w.clone();
                    swapped.swap(p, p + 1);
                    work.push((swapped, c.clone()));
                    if let Some(rule) = spec.rule(j, i) {
                        for (m, rc) in rule {
                            let mut nw = w[..p].to_vec();
                            for (g, &e) in m.entries().iter().enumerate() {
                                nw.extend(std::iter::repeat_n(g, e as usize));
                            }
                            nw.extend_from_slice(&w[p + 2..]);
                            work.push((nw, c.mul_ref(rc)));
                        }
                    }
                }
            }
        }
        out
    }

    #[test]
    fn kappa_normal_order_examples() {
        let s = load(KAPPA, 6, 8);
        let (k, h) = (0, 2);
        assert_eq!(normal_order(&s, &[(h, 1), (k, 1)]).unwrap(), el(&s, "K*H - P"));
        assert_eq!(
            normal_order(&s, &[(h, 1), (k, 2)]).unwrap(),
            el(&s, "K^2*H - 2*K*P - P^2/(2*k)")
        );
        assert_eq!(
            normal_order(&s, &[(k, 2), (1, 1), (h, 3)]).unwrap(),
            el(&s, "K^2*P*H^3")
        );
        assert_eq!(normal_order(&s, &[]).unwrap(), NCElement::one(&s));
    }

    #[test]
    fn brute_force_agrees_on_words() {
        for text in [KAPPA, POINCARE] {
            // generous cap; only degrees ≤ 4 are compared
            let s = load(text, 9, 4);
            let n = s.ngens();
            let mut words: Vec<Vec<usize>> = vec![vec![]];
            for _ in 0..4 {
                let mut next = Vec::new();
                for w in &words {
                    for g in 0..n {
                        let mut w2 = w.clone();
                        w2.push(g);
                        next.push(w2);
                    }
                }
                words.extend(next.iter().cloned());
                words.dedup();
                words.retain(|w| w.len() <= 4);
                words.sort();
                words.dedup();
            }
            for w in &words {
                let word: Vec<(usize, u32)> = w.iter().map(|&g| (g, 1)).collect();
                assert_eq!(
                    normal_order(&s, &word).unwrap().upto(4),
                    brute_force(&s, w).upto(4),
                    "{} {w:?}",
                    s.name()
                );
            }
        }
    }

    #[test]
    fn poincare_products() {
        let s = load(POINCARE, 5, 4);
        let (k, pm, pp) = (el(&s, "K"), el(&s, "Pm"), el(&s, "Pp"));
        assert_eq!(nc_mul(&pm, &k).unwrap(), el(&s, "K*Pm + 2*Pm"));
        // P₊K = KP₊ + Σ_{n≥1} (−2)ⁿ zⁿ⁻¹ P₊ⁿ / n!, truncated at z⁴
        let mut expect = el(&s, "K*Pp");
        let mut fact = 1i64;
        for n in 1..=5u32 {
            fact *= n as i64;
            let c = ParamSeries::monomial(s.param(), q((-2i64).pow(n), fact), n as i32 - 1);
            let m = NCElement::monomial(&s, MultiIndex::new(vec![0, 0, n]), c);
            expect = expect.add(&m).unwrap();
        }
        assert_eq!(nc_mul(&pp, &k).unwrap(), expect);
        assert_eq!(nc_mul(&pm, &NCElement::one(&s)).unwrap(), pm);
    }

    #[test]
    fn mismatched_specs_are_rejected() {
        let a = load(KAPPA, 3, 4);
        let b = load(KAPPA, 3, 4);
        assert!(matches!(
            nc_mul(&NCElement::one(&a), &NCElement::one(&b)),
            Err(Error::SpecMismatch)
        ));
    }

    #[test]
    fn adjoint_expansion_examples() {
        let s = load(KAPPA, 6, 8);
        let (k, h) = (el(&s, "K"), el(&s, "H"));
        assert_eq!(adjoint_power_expand(&k, &h, 0, Side::Left).unwrap(), h);
        assert_eq!(
            adjoint_power_expand(&k, &h, 1, Side::Left).unwrap(),
            nc_mul(&k, &h).unwrap()
        );
        assert_eq!(
            adjoint_power_expand(&k, &h, 2, Side::Right).unwrap(),
            normal_order(&s, &[(2, 1), (0, 2)]).unwrap()
        );
    }

    #[test]
    fn tensor_examples() {
        let s = load(POINCARE, 5, 4);
        let specs = [s.clone(), s.clone()];
        let (k, pp, one) = (el(&s, "K"), el(&s, "Pp"), NCElement::one(&s));
        let a = TensorElement::pure(&[&pp, &one])
            .add(&TensorElement::pure(&[&one, &pp]))
            .unwrap();
        assert_eq!(tensor_mul(&TensorElement::one(&specs), &a).unwrap(), a);
        assert_eq!(
            tensor_mul(&TensorElement::pure(&[&k, &one]), &TensorElement::pure(&[&one, &k])).unwrap(),
            TensorElement::pure(&[&k, &k])
        );
        let sq = tensor_mul(&a, &a).unwrap();
        let pp2 = el(&s, "Pp^2");
        let expect = TensorElement::pure(&[&pp2, &one])
            .add(&TensorElement::pure(&[&pp, &pp]).scale(&ParamSeries::constant(s.param(), qi(2))))
            .unwrap()
            .add(&TensorElement::pure(&[&one, &pp2]))
            .unwrap();
        assert_eq!(sq, expect);
        assert_eq!(sq.canonical(), "1 @ Pp^2 + 2*Pp @ Pp + Pp^2 @ 1");
    }

    #[test]
    fn canonical_text_roundtrips() {
        let s = load(POINCARE, 5, 4);
        let x = nc_mul(&el(&s, "Pp"), &el(&s, "K")).unwrap();
        assert_eq!(
            x.canonical(),
            "-2*Pp + 2*z*Pp^2 - 4/3*z^2*Pp^3 + 2/3*z^3*Pp^4 - 4/15*z^4*Pp^5 + K*Pp"
        );
        assert_eq!(el(&s, &x.canonical()), x);
        let k = load(KAPPA, 4, 4);
        let y = el(&k, "P^2/(2*k) + K");
        assert_eq!(y.canonical(), "1/2*k^-1*P^2 + K");
        assert_eq!(el(&k, &y.canonical()), y);
    }

    #[test]
    fn load_time_validation() {
        let bad_order = KAPPA.replace("[H, K] = -P", "[H, K] = -P*K");
        assert!(matches!(
            Arc::new(SpecSource::from_text(&bad_order).unwrap()).materialize(Window::new(3, 4)),
            Err(Error::Spec(_))
        ));
        let mixed = KAPPA.replace("[H, K] = -P", "[H, K] = K*P");
        assert!(matches!(
            Arc::new(SpecSource::from_text(&mixed).unwrap()).materialize(Window::new(3, 4)),
            Err(Error::Admissibility(_))
        ));
        let pole = POINCARE.replace("[Pm, K] = 2*Pm", "[Pm, K] = Pm/z");
        assert!(Arc::new(SpecSource::from_text(&pole).unwrap())
            .materialize(Window::new(3, 4))
            .is_err());
        assert!(SpecSource::from_text(&KAPPA.replace("[H, P] = 0", "[H, Q] = 0")).is_err());
    }

    #[test]
    fn spec_text_roundtrip() {
        let src = SpecSource::from_text(POINCARE).unwrap();
        let again = SpecSource::from_text(&src.to_text()).unwrap();
        let a = Arc::new(src).materialize(Window::new(4, 4)).unwrap();
        let b = Arc::new(again).materialize(Window::new(4, 4)).unwrap();
        for g in 0..3 {
            assert_eq!(
                a.coproduct_of(g).unwrap().canonical(),
                b.coproduct_of(g).unwrap().canonical()
            );
            assert_eq!(
                a.antipode_of(g).unwrap().canonical(),
                b.antipode_of(g).unwrap().canonical()
            );
        }
    }

    use proptest::prelude::*;

    fn arb_elem(s: Spec, deg: u32) -> impl Strategy<Value = NCElement> {
        let basis = MultiIndex::all_up_to(s.ngens(), deg);
        let nb = basis.len();
        proptest::collection::vec((0..nb, -3i64..=3, 0i32..2), 1..4).prop_map(move |ts| {
            let mut e = NCElement::zero(&s);
            for (i, c, d) in ts {
                let m = NCElement::monomial(&s, basis[i].clone(), ParamSeries::monomial(s.param(), qi(c), d));
                e = e.add(&m).unwrap();
            }
            e
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn associativity_kappa(
            (a, b, c) in {
                let s = load(KAPPA, 9, 4);
                (arb_elem(s.clone(), 3), arb_elem(s.clone(), 3), arb_elem(s, 3))
            }
        ) {
            let l = nc_mul(&nc_mul(&a, &b).unwrap(), &c).unwrap();
            let r = nc_mul(&a, &nc_mul(&b, &c).unwrap()).unwrap();
            prop_assert_eq!(l.upto(3), r.upto(3));
        }

        #[test]
        fn associativity_poincare(
            (a, b, c) in {
                let s = load(POINCARE, 9, 4);
                (arb_elem(s.clone(), 3), arb_elem(s.clone(), 3), arb_elem(s, 3))
            }
        ) {
            let l = nc_mul(&nc_mul(&a, &b).unwrap(), &c).unwrap();
            let r = nc_mul(&a, &nc_mul(&b, &c).unwrap()).unwrap();
            prop_assert_eq!(l.upto(3), r.upto(3));
        }
    }
}
