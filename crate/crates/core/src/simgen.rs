//! Simulation scenarios: class-weight families, k=4 groupings, sample sizes
//! and logistic outcome-generating models.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::data::CategoricalDataset;
use crate::distances::dummy_encode;
use crate::error::{invalid, Error, Result};
use crate::seeds::{derive_seed, hash_str};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Balance {
    Balanced,
    Unbalanced,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Family {
    Null,
    BinaryShift(f64),
    Skewed(f64),
    OneUpOneDown(f64),
}

impl Family {
    pub fn delta(self) -> Option<f64> {
        match self {
            Family::Null => None,
            Family::BinaryShift(d) | Family::Skewed(d) | Family::OneUpOneDown(d) => Some(d),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Family::Null => "null",
            Family::BinaryShift(_) => "binary",
            Family::Skewed(_) => "skewed",
            Family::OneUpOneDown(_) => "updown",
        }
    }

    /// Parses `null`, `binary:0.5`, `skewed:1`, `updown:0.3`.
    pub fn parse(s: &str) -> Result<Self> {
        let (name, delta) = match s.split_once(':') {
            Some((a, b)) => (a, Some(b)),
            None => (s, None),
        };
        Self::from_parts(name, delta.map(str::parse::<f64>).transpose().map_err(|_| {
            Error::Config(format!("bad deviation in family '{s}'"))
        })?)
    }

    fn from_parts(name: &str, delta: Option<f64>) -> Result<Self> {
        let need = |d: Option<f64>| {
            d.ok_or_else(|| Error::Config(format!("family '{name}' needs a delta")))
        };
        match name {
            "null" => Ok(Family::Null),
            "binary" => Ok(Family::BinaryShift(need(delta)?)),
            "skewed" => Ok(Family::Skewed(need(delta)?)),
            "updown" => Ok(Family::OneUpOneDown(need(delta)?)),
            _ => Err(Error::Config(format!("unknown family '{name}'"))),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.delta() {
            None => write!(f, "{}", self.name()),
            Some(d) => write!(f, "{}:{}", self.name(), d),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Grouping {
    ThreeOne,
    TwoTwo,
    TwoOneOne,
    OneOneOneOne,
}

impl Grouping {
    pub const ALL: [Grouping; 4] = [
        Grouping::ThreeOne,
        Grouping::TwoTwo,
        Grouping::TwoOneOne,
        Grouping::OneOneOneOne,
    ];

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "3+1" => Ok(Grouping::ThreeOne),
            "2+2" => Ok(Grouping::TwoTwo),
            "2+1+1" => Ok(Grouping::TwoOneOne),
            "1+1+1+1" => Ok(Grouping::OneOneOneOne),
            _ => Err(Error::Config(format!("unknown grouping '{s}'"))),
        }
    }

    /// Escalation step of each of the four datasets; `None` means the
    /// dataset keeps the reference weights.
    fn steps(self) -> [Option<u32>; 4] {
        match self {
            Grouping::ThreeOne => [None, None, None, Some(0)],
            Grouping::TwoTwo => [None, None, Some(0), Some(0)],
            Grouping::TwoOneOne => [None, None, Some(0), Some(1)],
            Grouping::OneOneOneOne => [None, Some(0), Some(1), Some(2)],
        }
    }
}

impl fmt::Display for Grouping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Grouping::ThreeOne => "3+1",
            Grouping::TwoTwo => "2+2",
            Grouping::TwoOneOne => "2+1+1",
            Grouping::OneOneOneOne => "1+1+1+1",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ogm {
    None,
    True,
    WrongSign,
    WrongSize,
    WrongCoef,
}

impl Ogm {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Ogm::None),
            "true" => Ok(Ogm::True),
            "wrong-sign" => Ok(Ogm::WrongSign),
            "wrong-size" => Ok(Ogm::WrongSize),
            "wrong-coef" => Ok(Ogm::WrongCoef),
            _ => Err(Error::Config(format!("unknown ogm '{s}'"))),
        }
    }
}

impl fmt::Display for Ogm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Ogm::None => "none",
            Ogm::True => "true",
            Ogm::WrongSign => "wrong-sign",
            Ogm::WrongSize => "wrong-size",
            Ogm::WrongCoef => "wrong-coef",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub k: usize,
    pub n_total: usize,
    pub p: usize,
    pub arity: u32,
    pub balance: Balance,
    pub family: Family,
    pub grouping: Option<Grouping>,
    pub ogm: Ogm,
    pub reps: usize,
    pub seed: u64,
    /// Use (1,1,1,1-δ,1+δ) instead of (1,1,1,1+δ,1-δ) for the up/down family.
    pub updown_swapped: bool,
}

impl ScenarioSpec {
    pub fn new(k: usize, n_total: usize, p: usize, arity: u32, family: Family) -> Self {
        Self {
            k,
            n_total,
            p,
            arity,
            balance: Balance::Balanced,
            family,
            grouping: (k == 4).then_some(Grouping::OneOneOneOne),
            ogm: Ogm::None,
            reps: 500,
            seed: 1,
            updown_swapped: false,
        }
    }

    /// Stable identifier of the data-generating cell. Repetition count and
    /// master seed are not part of it.
    pub fn id(&self) -> String {
        let bal = match self.balance {
            Balance::Balanced => "bal",
            Balance::Unbalanced => "unbal",
        };
        let mut s = format!(
            "k{}-N{}-p{}-a{}-{}-{}",
            self.k, self.n_total, self.p, self.arity, bal, self.family
        );
        if let Some(g) = self.grouping {
            s.push_str(&format!("-g{g}"));
        }
        if self.ogm != Ogm::None {
            s.push_str(&format!("-ogm:{}", self.ogm));
        }
        if self.updown_swapped {
            s.push_str("-swapped");
        }
        s
    }

    pub fn sizes(&self) -> Vec<usize> {
        let shares: &[f64] = match (self.k, self.balance) {
            (2, Balance::Balanced) => &[0.5, 0.5],
            (2, Balance::Unbalanced) => &[0.2, 0.8],
            (4, Balance::Balanced) => &[0.25, 0.25, 0.25, 0.25],
            (4, Balance::Unbalanced) => &[0.1, 0.2, 0.3, 0.4],
            _ => return Vec::new(),
        };
        let mut out: Vec<usize> = shares
            .iter()
            .map(|s| (s * self.n_total as f64).round() as usize)
            .collect();
        let head: usize = out[..out.len() - 1].iter().sum();
        let last = out.len() - 1;
        out[last] = self.n_total.saturating_sub(head);
        out
    }

    /// Structural checks only. Values outside the standard grid are
    /// accepted; see [`is_standard_grid`].
    pub fn validate(&self) -> Result<()> {
        if self.k != 2 && self.k != 4 {
            return Err(invalid("k must be 2 or 4"));
        }
        if self.p == 0 {
            return Err(invalid("p must be positive"));
        }
        if self.arity < 2 {
            return Err(Error::ArityTooSmall { column: 0 });
        }
        if self.reps == 0 {
            return Err(invalid("reps must be positive"));
        }
        let sizes = self.sizes();
        if sizes.iter().any(|&n| n < 2) {
            return Err(invalid(format!("dataset sizes {sizes:?} too small")));
        }
        match (self.k, self.grouping) {
            (4, None) => return Err(invalid("k=4 needs a grouping")),
            (2, Some(_)) => return Err(invalid("grouping only applies to k=4")),
            _ => {}
        }
        match self.family {
            Family::Null => {}
            Family::BinaryShift(d) | Family::Skewed(d) | Family::OneUpOneDown(d) => {
                if !(d.is_finite() && d > 0.0) {
                    return Err(invalid("deviation must be positive"));
                }
            }
        }
        if matches!(self.family, Family::BinaryShift(_)) && self.arity != 2 {
            return Err(invalid("binary shift needs arity 2"));
        }
        if matches!(self.family, Family::OneUpOneDown(_)) && self.arity < 3 {
            return Err(invalid("up/down family needs arity at least 3"));
        }
        if self.ogm != Ogm::None {
            if self.k != 2 {
                return Err(invalid("outcome models only apply to k=2"));
            }
            if ((self.arity - 1) as usize * self.p) % 2 != 0 {
                return Err(invalid("outcome model needs an even dummy width"));
            }
        }
        for j in 0..self.k {
            weights_for(self, j)?;
        }
        Ok(())
    }

    /// The same cell with both datasets drawn from the reference weights.
    pub fn matched_null(&self) -> Self {
        let mut s = self.clone();
        s.family = Family::Null;
        s.updown_swapped = false;
        if s.ogm != Ogm::None {
            s.ogm = Ogm::True;
        }
        s
    }

    pub fn is_null(&self) -> bool {
        self.family == Family::Null && matches!(self.ogm, Ogm::None | Ogm::True)
    }

    pub fn to_config(&self) -> String {
        let mut s = format!(
            "k = {}\nN = {}\np = {}\narity = {}\nbalance = \"{}\"\nfamily = \"{}\"\n",
            self.k,
            self.n_total,
            self.p,
            self.arity,
            match self.balance {
                Balance::Balanced => "balanced",
                Balance::Unbalanced => "unbalanced",
            },
            self.family.name()
        );
        if let Some(d) = self.family.delta() {
            s.push_str(&format!("delta = {d:?}\n"));
        }
        if let Some(g) = self.grouping {
            s.push_str(&format!("grouping = \"{g}\"\n"));
        }
        s.push_str(&format!(
            "ogm = \"{}\"\nreps = {}\nseed = {}\n",
            self.ogm, self.reps, self.seed
        ));
        if self.updown_swapped {
            s.push_str("updown_swapped = true\n");
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector {
    w: Vec<f64>,
}

impl WeightVector {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() || w.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
            return Err(invalid(format!("weights must be positive, got {w:?}")));
        }
        Ok(Self { w })
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn probabilities(&self) -> Vec<f64> {
        let s: f64 = self.w.iter().sum();
        self.w.iter().map(|x| x / s).collect()
    }
}

/// Deviation applied to dataset `j` (0-based), or `None` for reference data.
fn deviation(spec: &ScenarioSpec, j: usize) -> Option<f64> {
    let delta = spec.family.delta()?;
    let step = if spec.k == 2 {
        (j == 1).then_some(0)
    } else {
        spec.grouping?.steps().get(j).copied().flatten()
    }?;
    Some(match spec.family {
        Family::BinaryShift(_) => (step + 1) as f64 * delta,
        _ => delta + 0.1 * step as f64,
    })
}

pub fn weights_for(spec: &ScenarioSpec, j: usize) -> Result<WeightVector> {
    if j >= spec.k {
        return Err(invalid(format!("dataset index {j} out of range")));
    }
    let c = spec.arity as usize;
    let Some(d) = deviation(spec, j) else {
        return WeightVector::new(vec![1.0; c]);
    };
    let w = match spec.family {
        Family::Null => vec![1.0; c],
        Family::BinaryShift(_) => vec![1.0, 1.0 + d],
        Family::Skewed(_) => (0..c).map(|i| 1.0 + i as f64 * d).collect(),
        Family::OneUpOneDown(_) => {
            if d >= 1.0 - 1e-12 {
                return Err(invalid(format!(
                    "up/down deviation {d} leaves a non-positive weight"
                )));
            }
            let mut w = vec![1.0; c];
            let (up, down) = if spec.updown_swapped { (c - 1, c - 2) } else { (c - 2, c - 1) };
            w[up] = 1.0 + d;
            w[down] = 1.0 - d;
            w
        }
    };
    WeightVector::new(w)
}

fn draw(rng: &mut ChaCha20Rng, cumulative: &[f64]) -> u32 {
    let u: f64 = rng.gen::<f64>() * cumulative[cumulative.len() - 1];
    cumulative.iter().position(|&c| u < c).unwrap_or(cumulative.len() - 1) as u32
}

/// Draws the datasets of one repetition. Each dataset has its own stream
/// keyed by scenario, repetition and dataset index.
pub fn generate(spec: &ScenarioSpec, rep: usize) -> Result<Vec<CategoricalDataset>> {
    spec.validate()?;
    let key = hash_str(&spec.id());
    let sizes = spec.sizes();
    let mut out = Vec::with_capacity(spec.k);
    for (j, &n) in sizes.iter().enumerate() {
        let w = weights_for(spec, j)?;
        let cumulative: Vec<f64> = w
            .weights()
            .iter()
            .scan(0.0, |acc, x| {
                *acc += x;
                Some(*acc)
            })
            .collect();
        let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(spec.seed, &[key, rep as u64, j as u64]));
        let values: Vec<u32> = (0..n * spec.p).map(|_| draw(&mut rng, &cumulative)).collect();
        out.push(CategoricalDataset::new(
            n,
            spec.p,
            values,
            vec![spec.arity; spec.p],
            None,
        )?);
    }
    if spec.ogm != Ogm::None {
        let seed = derive_seed(spec.seed, &[key, rep as u64, u64::MAX]);
        out = attach_target(out, spec.ogm, seed)?;
    }
    Ok(out)
}

/// Intercept and dummy coefficients of the outcome model used for dataset
/// `j` under `ogm`. The first dataset always follows the true model.
pub fn ogm_coefficients(width: usize, ogm: Ogm, j: usize) -> (f64, Vec<f64>) {
    let half = width / 2;
    let true_beta = |scale: f64| -> Vec<f64> {
        (0..width).map(|i| if i < half { scale } else { -scale }).collect()
    };
    let variant = if j == 0 { Ogm::True } else { ogm };
    match variant {
        Ogm::None | Ogm::True => (-0.5, true_beta(0.5)),
        Ogm::WrongSign => (-0.5, true_beta(-0.5)),
        Ogm::WrongSize => (-0.5, true_beta(0.25)),
        Ogm::WrongCoef => (1.0, (0..width).map(|i| if i < half { 0.0 } else { -2.0 }).collect()),
    }
}

pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Linear predictor for one dummy-coded row.
pub fn linear_predictor(dummies: &[f64], intercept: f64, beta: &[f64]) -> f64 {
    intercept + dummies.iter().zip(beta).map(|(x, b)| x * b).sum::<f64>()
}

/// Draws a binary target for each dataset from the logistic model on its
/// dummy-coded covariates. The variant applies to the second dataset only.
pub fn attach_target(
    datasets: Vec<CategoricalDataset>,
    ogm: Ogm,
    seed: u64,
) -> Result<Vec<CategoricalDataset>> {
    if datasets.len() != 2 {
        return Err(invalid("outcome models need exactly two datasets"));
    }
    let mut out = Vec::with_capacity(2);
    for (j, d) in datasets.into_iter().enumerate() {
        let enc = dummy_encode(&d);
        if enc.width() % 2 != 0 {
            return Err(invalid("outcome model needs an even dummy width"));
        }
        let (b0, beta) = ogm_coefficients(enc.width(), ogm, j);
        let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(seed, &[j as u64]));
        let target: Vec<u8> = (0..d.n())
            .map(|i| {
                let prob = logistic(linear_predictor(enc.row(i), b0, &beta));
                u8::from(rng.gen::<f64>() < prob)
            })
            .collect();
        out.push(d.with_target(target)?);
    }
    Ok(out)
}

const K2_N: [usize; 5] = [50, 100, 200, 500, 1000];
const K4_N: [usize; 3] = [100, 200, 400];
const P_SET: [usize; 3] = [2, 10, 50];

fn binary_deltas() -> Vec<f64> {
    let mut v: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
    v.extend([1.5, 2.0]);
    v
}

/// Deviation magnitudes of the standard grid for a family and number of datasets.
pub fn standard_deltas(family: &str, k: usize) -> Vec<f64> {
    match (family, k) {
        ("binary", _) => binary_deltas(),
        ("skewed", 2) => vec![0.1, 0.2, 0.3, 0.4, 0.5, 1.0],
        ("skewed", _) => (1..=10).map(|i| i as f64 / 10.0).collect(),
        ("updown", _) => (1..=9).map(|i| i as f64 / 10.0).collect(),
        _ => Vec::new(),
    }
}

/// Whether the scenario belongs to the standard simulation grid.
pub fn is_standard_grid(spec: &ScenarioSpec) -> bool {
    let n_ok = match spec.k {
        2 => K2_N.contains(&spec.n_total),
        4 => K4_N.contains(&spec.n_total),
        _ => false,
    };
    let family_ok = match spec.family {
        Family::Null => spec.arity == 2 || spec.arity == 5,
        Family::BinaryShift(_) => spec.arity == 2,
        Family::Skewed(_) | Family::OneUpOneDown(_) => spec.arity == 5,
    };
    let delta_ok = spec.family.delta().is_none_or(|d| {
        standard_deltas(spec.family.name(), spec.k)
            .iter()
            .any(|x| (x - d).abs() < 1e-9)
    });
    n_ok && P_SET.contains(&spec.p)
        && family_ok
        && delta_ok
        && (spec.ogm == Ogm::None || spec.k == 2)
        && !spec.updown_swapped
}

/// Every cell of the standard grid, including those whose escalated deviation leaves a
/// non-positive weight (these fail [`ScenarioSpec::validate`]).
pub fn standard_grid(reps: usize, seed: u64) -> Vec<ScenarioSpec> {
    let mut out = Vec::new();
    for k in [2usize, 4] {
        let ns: &[usize] = if k == 2 { &K2_N } else { &K4_N };
        let groupings: Vec<Option<Grouping>> = if k == 2 {
            vec![None]
        } else {
            Grouping::ALL.iter().copied().map(Some).collect()
        };
        let ogms: &[Ogm] = if k == 2 {
            &[Ogm::None, Ogm::True, Ogm::WrongSign, Ogm::WrongSize, Ogm::WrongCoef]
        } else {
            &[Ogm::None]
        };
        let mut families = vec![(2u32, Family::Null), (5, Family::Null)];
        for d in standard_deltas("binary", k) {
            families.push((2, Family::BinaryShift(d)));
        }
        for d in standard_deltas("skewed", k) {
            families.push((5, Family::Skewed(d)));
        }
        for d in standard_deltas("updown", k) {
            families.push((5, Family::OneUpOneDown(d)));
        }
        for &n in ns {
            for p in P_SET {
                for balance in [Balance::Balanced, Balance::Unbalanced] {
                    for &(arity, family) in &families {
                        let gs: &[Option<Grouping>] =
                            if family == Family::Null { &groupings[..1] } else { &groupings };
                        for &g in gs {
                            for &ogm in ogms {
                                let mut s = ScenarioSpec::new(k, n, p, arity, family);
                                s.balance = balance;
                                s.grouping = if k == 4 { g.or(Some(Grouping::OneOneOneOne)) } else { None };
                                s.ogm = ogm;
                                s.reps = reps;
                                s.seed = seed;
                                out.push(s);
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Scalar config value rendered as text.
fn scalar(v: &serde_json::Value) -> Result<String> {
    match v {
        serde_json::Value::String(s) => Ok(s.clone()),
        serde_json::Value::Number(n) => Ok(n.to_string()),
        serde_json::Value::Bool(b) => Ok(b.to_string()),
        _ => Err(Error::Config(format!("unsupported config value {v}"))),
    }
}

/// Reads a flat TOML or JSON table into lists of textual values. A scalar
/// becomes a one-element list.
fn read_table(text: &str) -> Result<BTreeMap<String, Vec<String>>> {
    let value: serde_json::Value = match serde_json::from_str(text) {
        Ok(v) => v,
        Err(_) => {
            let t: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
            serde_json::to_value(t).map_err(|e| Error::Config(e.to_string()))?
        }
    };
    let obj = value
        .as_object()
        .ok_or_else(|| Error::Config("config must be a table".into()))?;
    let mut out = BTreeMap::new();
    for (k, v) in obj {
        let list = match v {
            serde_json::Value::Array(a) => a.iter().map(scalar).collect::<Result<Vec<_>>>()?,
            other => vec![scalar(other)?],
        };
        if list.is_empty() {
            return Err(Error::Config(format!("empty value list for '{k}'")));
        }
        out.insert(k.clone(), list);
    }
    Ok(out)
}

const KEYS: [&str; 12] = [
    "k", "N", "p", "arity", "balance", "family", "delta", "grouping", "ogm", "reps", "seed",
    "updown_swapped",
];

fn num<T: std::str::FromStr>(key: &str, s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Config(format!("bad value '{s}' for '{key}'")))
}

/// Expands a grid config into the full factorial of its value lists.
/// Combinations that are structurally invalid (for example a binary shift
/// with arity 5) are skipped; duplicates collapse.
pub fn expand_grid(text: &str) -> Result<Vec<ScenarioSpec>> {
    let table = read_table(text)?;
    if let Some(k) = table.keys().find(|k| !KEYS.contains(&k.as_str())) {
        return Err(Error::Config(format!("unknown key '{k}'")));
    }
    let get = |key: &str, default: &[&str]| -> Vec<String> {
        table
            .get(key)
            .cloned()
            .unwrap_or_else(|| default.iter().map(|s| s.to_string()).collect())
    };
    let axes: Vec<Vec<String>> = vec![
        get("k", &["2"]),
        get("N", &["100"]),
        get("p", &["2"]),
        get("arity", &["2"]),
        get("balance", &["balanced"]),
        get("family", &["null"]),
        get("delta", &[""]),
        get("grouping", &[""]),
        get("ogm", &["none"]),
        get("reps", &["500"]),
        get("seed", &["1"]),
        get("updown_swapped", &["false"]),
    ];
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    let mut idx = vec![0usize; axes.len()];
    loop {
        let v: Vec<&str> = idx.iter().zip(&axes).map(|(&i, a)| a[i].as_str()).collect();
        if let Some(spec) = build_spec(&v)? {
            if spec.validate().is_ok() && seen.insert((spec.id(), spec.reps, spec.seed)) {
                out.push(spec);
            }
        }
        let mut pos = axes.len();
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < axes[pos].len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Builds one spec from textual axis values; `None` for combinations that
/// do not apply (k=2 with a grouping, k=4 without one).
fn build_spec(v: &[&str]) -> Result<Option<ScenarioSpec>> {
    let k: usize = num("k", v[0])?;
    let delta = if v[6].is_empty() { None } else { Some(num::<f64>("delta", v[6])?) };
    let family = match v[5] {
        "null" => Family::Null,
        name => match delta {
            Some(d) => Family::from_parts(name, Some(d))?,
            None => Family::parse(name)?,
        },
    };
    let grouping = if v[7].is_empty() { None } else { Some(Grouping::parse(v[7])?) };
    if (k == 4) != grouping.is_some() {
        return Ok(None);
    }
    let balance = match v[4] {
        "balanced" => Balance::Balanced,
        "unbalanced" => Balance::Unbalanced,
        s => return Err(Error::Config(format!("unknown balance '{s}'"))),
    };
    Ok(Some(ScenarioSpec {
        k,
        n_total: num("N", v[1])?,
        p: num("p", v[2])?,
        arity: num("arity", v[3])?,
        balance,
        family,
        grouping,
        ogm: Ogm::parse(v[8])?,
        reps: num("reps", v[9])?,
        seed: num("seed", v[10])?,
        updown_swapped: num("updown_swapped", v[11])?,
    }))
}

/// Parses a single-scenario config. Every key must hold one value.
pub fn parse_scenario(text: &str) -> Result<ScenarioSpec> {
    let table = read_table(text)?;
    if let Some((k, _)) = table.iter().find(|(_, v)| v.len() != 1) {
        return Err(Error::Config(format!("'{k}' must be a single value")));
    }
    let get = |key: &str, default: &'static str| -> String {
        table.get(key).map(|v| v[0].clone()).unwrap_or_else(|| default.to_string())
    };
    let v = [
        get("k", "2"),
        get("N", "100"),
        get("p", "2"),
        get("arity", "2"),
        get("balance", "balanced"),
        get("family", "null"),
        get("delta", ""),
        get("grouping", ""),
        get("ogm", "none"),
        get("reps", "500"),
        get("seed", "1"),
        get("updown_swapped", "false"),
    ];
    let v: Vec<&str> = v.iter().map(String::as_str).collect();
    let spec = build_spec(&v)?
        .ok_or_else(|| Error::Config("grouping must be given exactly when k = 4".into()))?;
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_shift_probability() {
        let s = ScenarioSpec::new(2, 100, 2, 2, Family::BinaryShift(2.0));
        let p = weights_for(&s, 1).unwrap().probabilities();
        assert!((p[1] - 0.75).abs() < 1e-12);
        assert_eq!(weights_for(&s, 0).unwrap().weights(), &[1.0, 1.0]);
    }

    #[test]
    fn k4_escalation() {
        let s = ScenarioSpec::new(4, 100, 2, 2, Family::BinaryShift(0.1));
        let w = weights_for(&s, 3).unwrap();
        assert!((w.weights()[1] - 1.3).abs() < 1e-12);
        let mut s = ScenarioSpec::new(4, 100, 2, 5, Family::Skewed(0.2));
        s.grouping = Some(Grouping::TwoOneOne);
        assert_eq!(weights_for(&s, 1).unwrap().weights(), &[1.0; 5]);
        assert!((weights_for(&s, 2).unwrap().weights()[1] - 1.2).abs() < 1e-12);
        assert!((weights_for(&s, 3).unwrap().weights()[1] - 1.3).abs() < 1e-12);
    }

    #[test]
    fn updown_errors_and_swap() {
        let s = ScenarioSpec::new(2, 100, 2, 5, Family::OneUpOneDown(1.0));
        assert!(weights_for(&s, 1).is_err());
        let mut s = ScenarioSpec::new(2, 100, 2, 5, Family::OneUpOneDown(0.3));
        assert_eq!(weights_for(&s, 1).unwrap().weights(), &[1.0, 1.0, 1.0, 1.3, 0.7]);
        s.updown_swapped = true;
        assert_eq!(weights_for(&s, 1).unwrap().weights(), &[1.0, 1.0, 1.0, 0.7, 1.3]);
    }

    #[test]
    fn unbalanced_sizes() {
        let mut s = ScenarioSpec::new(2, 50, 2, 2, Family::Null);
        s.balance = Balance::Unbalanced;
        assert_eq!(s.sizes(), vec![10, 40]);
        let mut s = ScenarioSpec::new(4, 100, 2, 2, Family::Null);
        s.balance = Balance::Unbalanced;
        assert_eq!(s.sizes(), vec![10, 20, 30, 40]);
    }

    #[test]
    fn generation_is_deterministic() {
        let s = ScenarioSpec::new(2, 100, 10, 5, Family::Skewed(0.5));
        assert_eq!(generate(&s, 3).unwrap(), generate(&s, 3).unwrap());
        assert_ne!(generate(&s, 3).unwrap(), generate(&s, 4).unwrap());
    }

    #[test]
    fn true_model_at_reference() {
        let (b0, beta) = ogm_coefficients(2, Ogm::True, 0);
        let eta = linear_predictor(&[0.0, 0.0], b0, &beta);
        assert!((logistic(eta) - 0.377_540_668_798_145_4).abs() < 1e-12);
    }

    #[test]
    fn grid_config_expands() {
        let text = "k = 2\nN = [50, 100]\np = 2\narity = [2, 5]\nfamily = \"binary\"\ndelta = [0.5, 1.0]\n";
        let specs = expand_grid(text).unwrap();
        // arity 5 is incompatible with the binary shift
        assert_eq!(specs.len(), 4);
        let one = parse_scenario(&specs[0].to_config()).unwrap();
        assert_eq!(one, specs[0]);
        let json = r#"{"k": 4, "N": 100, "p": 2, "arity": 5, "family": "skewed", "delta": 0.3, "grouping": ["3+1", "2+2"]}"#;
        assert_eq!(expand_grid(json).unwrap().len(), 2);
    }
}
