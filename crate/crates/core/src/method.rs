//! Method identifiers and evaluation of one method on one set of datasets.
//!
//! Ids are short strings such as `fr:1nn-u`, `zc:5mst-u:1.14`, `c2st-knn`,
//! `hmn:perclass`, `cm:enumerate`, `ggrl:fs:max:tuned` or
//! `otdd:sinkhorn:0.01`. A metric other than the method's default is
//! appended as `@hamming` or `@euclidean`.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use crate::classifier::ggrl::{ggrl, Aggregate, DiffFn, GgrlParams};
use crate::classifier::{c2st, hmn, ymrzl, C2stClassifier, OobMode, DEFAULT_SPLIT, DEFAULT_TREES};
use crate::cmdist::{cm_distance, CovarianceMode};
use crate::crossmatch::{cross_test_on_matching, min_weight_matching, tie_flag, CrossTest, MatchPolicy, Matching};
use crate::data::{pool, CategoricalDataset, PooledSample};
use crate::distances::{distance_matrix, DistanceMatrix, Metric};
use crate::error::{invalid, Result};
use crate::otdd::{otdd, OtMode, OtddParams};
use crate::outcome::{Direction, SimilarityOutcome};
use crate::simgen::ScenarioSpec;
use crate::simgraph::{build_graph, edge_test_on_graph, validate_kappa, EdgeTest, GraphSpec, SimilarityGraph};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MethodKind {
    Edge(EdgeTest, GraphSpec),
    /// `true` visits observations in a seeded random order.
    Cross(CrossTest, bool),
    C2st(C2stClassifier),
    Hmn(OobMode),
    Ymrzl,
    Cm(CovarianceMode),
    Ggrl(GgrlParams),
    Otdd(OtMode),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MethodSpec {
    pub kind: MethodKind,
    pub metric: Metric,
}

fn default_metric(kind: &MethodKind) -> Metric {
    match kind {
        MethodKind::Cross(..) => Metric::EuclideanDummy,
        _ => Metric::Hamming,
    }
}

impl MethodSpec {
    pub fn new(kind: MethodKind) -> Self {
        let metric = default_metric(&kind);
        Self { kind, metric }
    }

    pub fn parse(id: &str) -> Result<Self> {
        let (body, metric) = match id.split_once('@') {
            Some((b, m)) => (b, Some(Metric::parse(m)?)),
            None => (id, None),
        };
        let bad = || invalid(format!("unknown method '{id}'"));
        let parts: Vec<&str> = body.split(':').collect();
        let kind = match parts[0] {
            "fr" | "ccs" | "cf" | "zc" => {
                let graph = match parts.get(1) {
                    Some(g) => GraphSpec::parse(g)?,
                    None => GraphSpec::default_menu()[0],
                };
                let test = match parts[0] {
                    "fr" => EdgeTest::Fr,
                    "ccs" => EdgeTest::Ccs,
                    "cf" => EdgeTest::Cf,
                    _ => {
                        let kappa = match parts.get(2) {
                            Some(k) => k.parse().map_err(|_| bad())?,
                            None => 1.14,
                        };
                        validate_kappa(kappa)?;
                        EdgeTest::Zc { kappa }
                    }
                };
                if parts.len() > 2 + usize::from(parts[0] == "zc") {
                    return Err(bad());
                }
                MethodKind::Edge(test, graph)
            }
            "petrie" | "mmcm" => {
                let test = if parts[0] == "petrie" { CrossTest::Petrie } else { CrossTest::Mmcm };
                match parts.get(1).copied() {
                    None => MethodKind::Cross(test, false),
                    Some("permuted") if parts.len() == 2 => MethodKind::Cross(test, true),
                    _ => return Err(bad()),
                }
            }
            "c2st-knn" if parts.len() == 1 => MethodKind::C2st(C2stClassifier::Knn),
            "c2st-nn" if parts.len() == 1 => MethodKind::C2st(C2stClassifier::Mlp),
            "hmn" => match parts.get(1).copied() {
                None | Some("overall") => MethodKind::Hmn(OobMode::Overall),
                Some("perclass") => MethodKind::Hmn(OobMode::PerClass),
                _ => return Err(bad()),
            },
            "ymrzl" if parts.len() == 1 => MethodKind::Ymrzl,
            "cm" => match parts.get(1).copied() {
                None | Some("closed") => MethodKind::Cm(CovarianceMode::ClosedForm),
                Some("enumerate") => MethodKind::Cm(CovarianceMode::Enumerate),
                _ => return Err(bad()),
            },
            "ggrl" => {
                let mut params = GgrlParams::default();
                for p in &parts[1..] {
                    match *p {
                        "fa" => params.f = DiffFn::Abs,
                        "fs" => params.f = DiffFn::Scaled,
                        "sum" => params.g = Aggregate::Sum,
                        "max" => params.g = Aggregate::Max,
                        "tuned" => params.tune = true,
                        _ => return Err(bad()),
                    }
                }
                MethodKind::Ggrl(params)
            }
            "otdd" => match (parts.get(1).copied(), parts.get(2)) {
                (None | Some("exact"), None) => MethodKind::Otdd(OtMode::Exact),
                (Some("sinkhorn"), eps) => {
                    let eps: f64 = match eps {
                        Some(e) => e.parse().map_err(|_| bad())?,
                        None => 0.01,
                    };
                    if !(eps.is_finite() && eps > 0.0) {
                        return Err(invalid("sinkhorn regularisation must be positive"));
                    }
                    MethodKind::Otdd(OtMode::Sinkhorn(eps))
                }
                _ => return Err(bad()),
            },
            _ => return Err(bad()),
        };
        let mut spec = Self::new(kind);
        if let Some(m) = metric {
            spec.metric = m;
        }
        Ok(spec)
    }

    pub fn id(&self) -> String {
        self.to_string()
    }

    pub fn direction(&self) -> Direction {
        match self.kind {
            MethodKind::Edge(t, _) => t.direction(),
            MethodKind::Cross(t, _) => t.direction(),
            _ => Direction::LowMeansSimilar,
        }
    }

    pub fn needs_target(&self) -> bool {
        matches!(self.kind, MethodKind::Ggrl(_) | MethodKind::Otdd(_))
    }

    pub fn two_sample_only(&self) -> bool {
        matches!(
            self.kind,
            MethodKind::Edge(..)
                | MethodKind::Cross(CrossTest::Petrie, _)
                | MethodKind::Cm(_)
                | MethodKind::Ggrl(_)
                | MethodKind::Otdd(_)
        )
    }

    /// Whether the method can run on data drawn from `spec` at all.
    pub fn applicable(&self, spec: &ScenarioSpec) -> bool {
        (!self.two_sample_only() || spec.k == 2) && (!self.needs_target() || spec.ogm != crate::simgen::Ogm::None)
    }

    /// Evaluates the method. Failures are reported in the outcome status;
    /// `seed` drives every random choice the method makes.
    pub fn evaluate(&self, datasets: &[CategoricalDataset], cache: &EvalCache, seed: u64) -> SimilarityOutcome {
        let dir = self.direction();
        if self.two_sample_only() && datasets.len() != 2 {
            return SimilarityOutcome::error("two-sample-only", dir);
        }
        match self.kind {
            MethodKind::Cm(mode) => return cm_distance(&datasets[0], &datasets[1], mode),
            MethodKind::Ggrl(params) => return ggrl(&datasets[0], &datasets[1], params, seed),
            MethodKind::Otdd(mode) => {
                let params = OtddParams { mode, ..OtddParams::default() };
                return otdd(&datasets[0], &datasets[1], params);
            }
            _ => {}
        }
        let pooled = match cache.pooled(datasets) {
            Ok(p) => p,
            Err(e) => return SimilarityOutcome::error(e.to_string(), dir),
        };
        match self.kind {
            MethodKind::Edge(test, graph) => match cache.graph(&pooled, graph, self.metric) {
                Ok(g) => edge_test_on_graph(test, &g, pooled.membership()),
                Err(e) => SimilarityOutcome::error(e.to_string(), dir),
            },
            MethodKind::Cross(test, permuted) => {
                if test == CrossTest::Petrie && pooled.k() != 2 {
                    return SimilarityOutcome::error("two-sample-only", dir);
                }
                let d = match cache.distances(&pooled, self.metric) {
                    Ok(d) => d,
                    Err(e) => return SimilarityOutcome::error(e.to_string(), dir),
                };
                let m = if permuted {
                    min_weight_matching(&d, MatchPolicy::Permuted(seed)).map(Arc::new)
                } else {
                    cache.matching(&d, self.metric)
                };
                match m {
                    Ok(m) => {
                        let flags: Vec<String> = tie_flag(&d, pooled.k()).into_iter().collect();
                        cross_test_on_matching(test, &m, &pooled).with_flags(&flags)
                    }
                    Err(e) => SimilarityOutcome::error(e.to_string(), dir),
                }
            }
            MethodKind::C2st(c) => c2st(&pooled, c, DEFAULT_SPLIT, seed),
            MethodKind::Hmn(mode) => hmn(&pooled, mode, DEFAULT_TREES, seed),
            MethodKind::Ymrzl => ymrzl(&pooled, DEFAULT_SPLIT, seed),
            MethodKind::Cm(_) | MethodKind::Ggrl(_) | MethodKind::Otdd(_) => unreachable!(),
        }
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            MethodKind::Edge(test, g) => match test {
                EdgeTest::Fr => write!(f, "fr:{g}")?,
                EdgeTest::Ccs => write!(f, "ccs:{g}")?,
                EdgeTest::Cf => write!(f, "cf:{g}")?,
                EdgeTest::Zc { kappa } => write!(f, "zc:{g}:{kappa}")?,
            },
            MethodKind::Cross(test, permuted) => {
                f.write_str(if test == CrossTest::Petrie { "petrie" } else { "mmcm" })?;
                if permuted {
                    f.write_str(":permuted")?;
                }
            }
            MethodKind::C2st(C2stClassifier::Knn) => f.write_str("c2st-knn")?,
            MethodKind::C2st(C2stClassifier::Mlp) => f.write_str("c2st-nn")?,
            MethodKind::Hmn(OobMode::Overall) => f.write_str("hmn:overall")?,
            MethodKind::Hmn(OobMode::PerClass) => f.write_str("hmn:perclass")?,
            MethodKind::Ymrzl => f.write_str("ymrzl")?,
            MethodKind::Cm(CovarianceMode::ClosedForm) => f.write_str("cm")?,
            MethodKind::Cm(CovarianceMode::Enumerate) => f.write_str("cm:enumerate")?,
            MethodKind::Ggrl(p) => {
                let fs = if p.f == DiffFn::Abs { "fa" } else { "fs" };
                let g = if p.g == Aggregate::Sum { "sum" } else { "max" };
                write!(f, "ggrl:{fs}:{g}")?;
                if p.tune {
                    f.write_str(":tuned")?;
                }
            }
            MethodKind::Otdd(OtMode::Exact) => f.write_str("otdd:exact")?,
            MethodKind::Otdd(OtMode::Sinkhorn(eps)) => write!(f, "otdd:sinkhorn:{eps}")?,
        }
        if self.metric != default_metric(&self.kind) {
            let m = match self.metric {
                Metric::Hamming => "hamming",
                _ => "euclidean",
            };
            write!(f, "@{m}")?;
        }
        Ok(())
    }
}

/// The methods run when none are named: every edge-count test on the three
/// default graphs and one default variant of every other method.
pub fn default_methods() -> Vec<MethodSpec> {
    let mut out = Vec::new();
    for g in GraphSpec::default_menu() {
        for t in [EdgeTest::Fr, EdgeTest::Ccs, EdgeTest::Cf, EdgeTest::Zc { kappa: 1.14 }] {
            out.push(MethodSpec::new(MethodKind::Edge(t, g)));
        }
    }
    for id in ["c2st-knn", "c2st-nn", "hmn:overall", "ymrzl", "petrie", "mmcm", "cm", "ggrl", "otdd"] {
        out.push(MethodSpec::parse(id).expect("built-in id"));
    }
    out
}

/// Intermediate results shared by the methods evaluated on one set of
/// datasets: the pooled sample, distance matrices, graphs and matchings.
#[derive(Default)]
pub struct EvalCache {
    pooled: OnceLock<std::result::Result<Arc<PooledSample>, String>>,
    distances: Mutex<HashMap<u8, Arc<DistanceMatrix>>>,
    graphs: Mutex<HashMap<(GraphSpec, u8), Arc<SimilarityGraph>>>,
    matchings: Mutex<HashMap<u8, Arc<Matching>>>,
}

fn metric_key(m: Metric) -> u8 {
    match m {
        Metric::Hamming => 0,
        Metric::EuclideanDummy => 1,
        Metric::Custom => 2,
    }
}

impl EvalCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn pooled(&self, datasets: &[CategoricalDataset]) -> std::result::Result<Arc<PooledSample>, String> {
        self.pooled
            .get_or_init(|| pool(datasets).map(Arc::new).map_err(|e| e.to_string()))
            .clone()
    }

    fn distances(&self, pooled: &PooledSample, metric: Metric) -> Result<Arc<DistanceMatrix>> {
        if let Some(d) = self.distances.lock().unwrap().get(&metric_key(metric)) {
            return Ok(d.clone());
        }
        let d = Arc::new(distance_matrix(pooled, metric)?);
        self.distances.lock().unwrap().insert(metric_key(metric), d.clone());
        Ok(d)
    }

    fn graph(&self, pooled: &PooledSample, spec: GraphSpec, metric: Metric) -> Result<Arc<SimilarityGraph>> {
        let key = (spec, metric_key(metric));
        if let Some(g) = self.graphs.lock().unwrap().get(&key) {
            return Ok(g.clone());
        }
        let d = self.distances(pooled, metric)?;
        let g = Arc::new(build_graph(&d, spec)?);
        self.graphs.lock().unwrap().insert(key, g.clone());
        Ok(g)
    }

    fn matching(&self, d: &DistanceMatrix, metric: Metric) -> Result<Arc<Matching>> {
        if let Some(m) = self.matchings.lock().unwrap().get(&metric_key(metric)) {
            return Ok(m.clone());
        }
        let m = Arc::new(min_weight_matching(d, MatchPolicy::Deterministic)?);
        self.matchings.lock().unwrap().insert(metric_key(metric), m.clone());
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip() {
        for id in [
            "fr:1nn-u",
            "ccs:5mst-u",
            "cf:5nn-a",
            "zc:5mst-u:1.31",
            "petrie",
            "mmcm:permuted",
            "c2st-knn",
            "c2st-nn",
            "hmn:perclass",
            "ymrzl",
            "cm:enumerate",
            "ggrl:fs:max:tuned",
            "otdd:sinkhorn:0.05",
            "fr:1nn-u@euclidean",
            "petrie@hamming",
        ] {
            assert_eq!(MethodSpec::parse(id).unwrap().id(), id);
        }
        assert_eq!(MethodSpec::parse("zc:5mst-u").unwrap().id(), "zc:5mst-u:1.14");
        assert!(MethodSpec::parse("zc:5mst-u:2").is_err());
        assert!(MethodSpec::parse("bogus").is_err());
        assert_eq!(default_methods().len(), 21);
    }

    #[test]
    fn cached_and_direct_agree() {
        let s = ScenarioSpec::new(2, 60, 3, 2, crate::simgen::Family::BinaryShift(1.0));
        let data = crate::simgen::generate(&s, 0).unwrap();
        let cache = EvalCache::new();
        let pooled = pool(&data).unwrap();
        let g = GraphSpec::parse("5mst-u").unwrap();
        let direct = crate::simgraph::edge_test(EdgeTest::Fr, &pooled, g, Metric::Hamming);
        let m = MethodSpec::parse("fr:5mst-u").unwrap();
        assert_eq!(m.evaluate(&data, &cache, 0), direct);
        assert_eq!(m.evaluate(&data, &cache, 0), direct);
        let petrie = crate::crossmatch::petrie_statistic(&pooled, MatchPolicy::Deterministic, Metric::EuclideanDummy);
        assert_eq!(MethodSpec::parse("petrie").unwrap().evaluate(&data, &cache, 0), petrie);
    }
}
