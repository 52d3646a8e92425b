//! Runs every (scenario, method, repetition) triple of a grid, journals the
//! results so an interrupted run can resume, and writes the sorted
//! statistic table. Also times methods on a fixed dataset.

use std::collections::{HashMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Read};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{mpsc, Arc, Mutex};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::CategoricalDataset;
use crate::error::{invalid, Error, Result};
use crate::method::{EvalCache, MethodSpec};
use crate::outcome::{SimilarityOutcome, Status};
use crate::seeds::{derive_seed, hash_str};
use crate::simgen::{generate, ScenarioSpec};

pub const JOURNAL: &str = "journal.csv";
pub const STATISTICS: &str = "statistics.csv";
pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub scenarios: Vec<ScenarioSpec>,
    pub methods: Vec<String>,
}

impl RunManifest {
    /// Builds a manifest and adds the matched null of every scenario that is
    /// not already present, so thresholds can be computed later.
    pub fn with_nulls(scenarios: Vec<ScenarioSpec>, methods: &[MethodSpec]) -> Result<Self> {
        let mut out: Vec<ScenarioSpec> = Vec::new();
        let mut seen: HashMap<String, (usize, u64)> = HashMap::new();
        for s in scenarios {
            s.validate()?;
            let null = s.matched_null();
            for c in [null, s] {
                match seen.get(&c.id()) {
                    None => {
                        seen.insert(c.id(), (c.reps, c.seed));
                        out.push(c);
                    }
                    Some(&prev) if prev != (c.reps, c.seed) => {
                        return Err(invalid(format!("scenario {} listed with different reps or seeds", c.id())));
                    }
                    Some(_) => {}
                }
            }
        }
        Ok(Self {
            scenarios: out,
            methods: methods.iter().map(MethodSpec::id).collect(),
        })
    }

    pub fn parsed_methods(&self) -> Result<Vec<MethodSpec>> {
        self.methods.iter().map(|m| MethodSpec::parse(m)).collect()
    }

    /// Number of triples the run evaluates.
    pub fn triples(&self) -> Result<usize> {
        let methods = self.parsed_methods()?;
        Ok(self
            .scenarios
            .iter()
            .map(|s| s.reps * methods.iter().filter(|m| m.applicable(s)).count())
            .sum())
    }
}

/// One evaluated triple.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatRow {
    pub scenario: String,
    pub rep: usize,
    pub method: String,
    pub status: String,
    pub statistic: Option<f64>,
    pub p_value: Option<f64>,
    pub flags: String,
}

impl StatRow {
    fn from_outcome(scenario: &str, rep: usize, method: &str, o: &SimilarityOutcome) -> Self {
        let ok = o.status == Status::Ok;
        Self {
            scenario: scenario.to_string(),
            rep,
            method: method.to_string(),
            status: o.status.label(),
            statistic: if ok { o.statistic } else { None },
            p_value: if ok { o.p_value } else { None },
            flags: o.flags.join(";"),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub jobs: usize,
    /// Wall-clock budget per triple; `None` runs without a watchdog.
    pub timeout: Option<Duration>,
    pub progress: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            jobs: 1,
            timeout: Some(Duration::from_secs(60)),
            progress: false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunSummary {
    pub triples: usize,
    pub resumed: usize,
    pub computed: usize,
    pub failures: usize,
}

/// Seed for the random choices of one method on one repetition.
pub fn triple_seed(spec: &ScenarioSpec, rep: usize, method: &str) -> u64 {
    derive_seed(spec.seed, &[hash_str(&spec.id()), rep as u64, hash_str(method)])
}

fn evaluate_guarded(
    method: MethodSpec,
    data: Arc<Vec<CategoricalDataset>>,
    cache: Arc<EvalCache>,
    seed: u64,
    timeout: Option<Duration>,
) -> SimilarityOutcome {
    let dir = method.direction();
    let Some(limit) = timeout else {
        return catch_unwind(AssertUnwindSafe(|| method.evaluate(&data, &cache, seed)))
            .unwrap_or_else(|_| SimilarityOutcome::error("panic", dir));
    };
    let (tx, rx) = mpsc::channel();
    std::thread::spawn(move || {
        let _ = tx.send(method.evaluate(&data, &cache, seed));
    });
    match rx.recv_timeout(limit) {
        Ok(o) => o,
        Err(mpsc::RecvTimeoutError::Timeout) => SimilarityOutcome::error("timeout", dir),
        Err(mpsc::RecvTimeoutError::Disconnected) => SimilarityOutcome::error("panic", dir),
    }
}

/// Reads the journal, dropping a trailing partial line left by an
/// interrupted write.
pub fn read_journal(path: &Path) -> Result<Vec<StatRow>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    let keep = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    if keep < bytes.len() {
        bytes.truncate(keep);
        fs::write(path, &bytes)?;
    }
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(&bytes[..]);
    let mut rows = Vec::new();
    for r in reader.deserialize() {
        rows.push(r?);
    }
    Ok(rows)
}

fn open_journal(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let fresh = !path.exists() || fs::metadata(path)?.len() == 0;
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    Ok(csv::WriterBuilder::new()
        .has_headers(fresh)
        .from_writer(BufWriter::new(file)))
}

fn check_manifest(out: &Path, manifest: &RunManifest) -> Result<()> {
    let path = out.join(MANIFEST);
    let text = serde_json::to_string_pretty(manifest).map_err(|e| Error::Config(e.to_string()))?;
    if path.exists() {
        let old = fs::read_to_string(&path)?;
        let old: RunManifest = serde_json::from_str(&old).map_err(|e| Error::Config(e.to_string()))?;
        if &old != manifest {
            return Err(Error::Config(format!(
                "{} holds a different run; use a fresh output directory",
                out.display()
            )));
        }
        return Ok(());
    }
    fs::write(path, text + "\n")?;
    Ok(())
}

/// Evaluates every triple not already in the journal of `out`, then writes
/// the sorted statistic table. Per-triple failures are recorded, never
/// fatal.
pub fn run(manifest: &RunManifest, out: &Path, options: &RunOptions) -> Result<RunSummary> {
    let methods = manifest.parsed_methods()?;
    fs::create_dir_all(out)?;
    check_manifest(out, manifest)?;
    let journal_path = out.join(JOURNAL);
    let done: HashSet<(String, usize, String)> = read_journal(&journal_path)?
        .into_iter()
        .map(|r| (r.scenario, r.rep, r.method))
        .collect();

    let mut items = Vec::new();
    let mut summary = RunSummary::default();
    for spec in &manifest.scenarios {
        let id = spec.id();
        for rep in 0..spec.reps {
            let todo: Vec<MethodSpec> = methods
                .iter()
                .filter(|m| m.applicable(spec))
                .filter(|m| {
                    summary.triples += 1;
                    let key = (id.clone(), rep, m.id());
                    let seen = done.contains(&key);
                    summary.resumed += usize::from(seen);
                    !seen
                })
                .copied()
                .collect();
            if !todo.is_empty() {
                items.push((spec, id.clone(), rep, todo));
            }
        }
    }

    let writer = Mutex::new(open_journal(&journal_path)?);
    let write_error: Mutex<Option<Error>> = Mutex::new(None);
    let computed = AtomicUsize::new(0);
    let failures = AtomicUsize::new(0);
    let total = items.len();
    let finished = AtomicUsize::new(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.jobs.max(1))
        .build()
        .map_err(|e| invalid(e.to_string()))?;
    pool.install(|| {
        items.par_iter().for_each(|(spec, id, rep, todo)| {
            let rows: Vec<StatRow> = match generate(spec, *rep) {
                Ok(data) => {
                    let data = Arc::new(data);
                    let cache = Arc::new(EvalCache::new());
                    todo.iter()
                        .map(|m| {
                            let mid = m.id();
                            let seed = triple_seed(spec, *rep, &mid);
                            let o = evaluate_guarded(*m, data.clone(), cache.clone(), seed, options.timeout);
                            StatRow::from_outcome(id, *rep, &mid, &o)
                        })
                        .collect()
                }
                Err(e) => todo
                    .iter()
                    .map(|m| {
                        let o = SimilarityOutcome::error(format!("generation: {e}"), m.direction());
                        StatRow::from_outcome(id, *rep, &m.id(), &o)
                    })
                    .collect(),
            };
            computed.fetch_add(rows.len(), Ordering::Relaxed);
            failures.fetch_add(rows.iter().filter(|r| !r.is_ok()).count(), Ordering::Relaxed);
            let mut w = writer.lock().unwrap();
            let res = rows
                .iter()
                .try_for_each(|r| w.serialize(r))
                .map_err(Error::from)
                .and_then(|_| w.flush().map_err(Error::from));
            if let Err(e) = res {
                write_error.lock().unwrap().get_or_insert(e);
            }
            drop(w);
            let f = finished.fetch_add(1, Ordering::Relaxed) + 1;
            if options.progress && (f == total || f % (total / 20).max(1) == 0) {
                eprintln!("{f}/{total} repetitions done");
            }
        });
    });
    if let Some(e) = write_error.into_inner().unwrap() {
        return Err(e);
    }
    drop(writer);
    summary.computed = computed.into_inner();
    let rows = read_journal(&journal_path)?;
    summary.failures = rows.iter().filter(|r| !r.is_ok()).count();
    write_statistics(manifest, &rows, &out.join(STATISTICS))?;
    Ok(summary)
}

/// Writes rows in manifest order: scenario, then repetition, then method.
/// Duplicate triples from overlapping resumes collapse to the first row.
pub fn write_statistics(manifest: &RunManifest, rows: &[StatRow], path: &Path) -> Result<()> {
    let ids: Vec<String> = manifest.scenarios.iter().map(ScenarioSpec::id).collect();
    let s_order: HashMap<&str, usize> = ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let m_order: HashMap<&str, usize> =
        manifest.methods.iter().enumerate().map(|(i, m)| (m.as_str(), i)).collect();
    let mut sorted: Vec<&StatRow> = rows.iter().collect();
    sorted.sort_by_key(|r| {
        (
            s_order.get(r.scenario.as_str()).copied().unwrap_or(usize::MAX),
            r.rep,
            m_order.get(r.method.as_str()).copied().unwrap_or(usize::MAX),
        )
    });
    sorted.dedup_by(|a, b| a.scenario == b.scenario && a.rep == b.rep && a.method == b.method);
    let mut w = csv::Writer::from_path(path)?;
    for r in sorted {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Manifest and statistic table of a finished run directory.
pub fn load_run(dir: &Path) -> Result<(RunManifest, Vec<StatRow>)> {
    let text = fs::read_to_string(dir.join(MANIFEST))?;
    let manifest: RunManifest = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
    let mut reader = csv::Reader::from_path(dir.join(STATISTICS))?;
    let rows = reader.deserialize().collect::<std::result::Result<Vec<StatRow>, _>>()?;
    Ok((manifest, rows))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub method: String,
    pub calls: usize,
    pub median_s: f64,
    pub q05_s: f64,
    pub q95_s: f64,
    pub status: String,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Times `f` after one warmup call until both `min_reps` calls and
/// `min_total` wall-clock time are reached. Returns per-call seconds.
pub fn bench_fn<F: FnMut()>(mut f: F, min_reps: usize, min_total: Duration) -> Vec<f64> {
    f();
    let start = Instant::now();
    let mut times = Vec::new();
    while times.len() < min_reps || start.elapsed() < min_total {
        let t = Instant::now();
        f();
        times.push(t.elapsed().as_secs_f64());
    }
    times
}

pub fn summarize(method: &str, mut times: Vec<f64>, status: String) -> BenchRow {
    times.sort_by(f64::total_cmp);
    BenchRow {
        method: method.to_string(),
        calls: times.len(),
        median_s: quantile(&times, 0.5),
        q05_s: quantile(&times, 0.05),
        q95_s: quantile(&times, 0.95),
        status,
    }
}

/// Runtime per call of each method on the first repetition of `spec`.
/// Every call starts from an empty cache.
pub fn bench_runtime(
    methods: &[MethodSpec],
    spec: &ScenarioSpec,
    min_reps: usize,
    min_total: Duration,
) -> Result<Vec<BenchRow>> {
    let data = generate(spec, 0)?;
    let mut out = Vec::new();
    for m in methods.iter().filter(|m| m.applicable(spec)) {
        let id = m.id();
        let seed = triple_seed(spec, 0, &id);
        let mut status = String::new();
        let times = bench_fn(
            || {
                let o = m.evaluate(&data, &EvalCache::new(), seed);
                status = o.status.label();
            },
            min_reps,
            min_total,
        );
        out.push(summarize(&id, times, status));
    }
    Ok(out)
}

pub fn write_bench(rows: &[BenchRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simgen::Family;

    fn small_manifest() -> RunManifest {
        let mut a = ScenarioSpec::new(2, 40, 3, 2, Family::BinaryShift(1.0));
        a.reps = 5;
        let methods: Vec<MethodSpec> = ["fr:1nn-u", "cm"].iter().map(|m| MethodSpec::parse(m).unwrap()).collect();
        RunManifest::with_nulls(vec![a], &methods).unwrap()
    }

    #[test]
    fn row_count_and_resume() {
        let m = small_manifest();
        assert_eq!(m.scenarios.len(), 2);
        let dir = tempfile::tempdir().unwrap();
        let opts = RunOptions { timeout: None, ..RunOptions::default() };
        let s = run(&m, dir.path(), &opts).unwrap();
        assert_eq!(s.triples, 20);
        assert_eq!(s.computed, 20);
        let full = fs::read(dir.path().join(STATISTICS)).unwrap();

        let dir2 = tempfile::tempdir().unwrap();
        fs::write(dir2.path().join(MANIFEST), fs::read(dir.path().join(MANIFEST)).unwrap()).unwrap();
        let journal = fs::read_to_string(dir.path().join(JOURNAL)).unwrap();
        let lines: Vec<&str> = journal.lines().collect();
        let mut partial = lines[..8].join("\n");
        partial.push('\n');
        partial.push_str(&lines[8][..10]);
        fs::write(dir2.path().join(JOURNAL), partial).unwrap();
        let s2 = run(&m, dir2.path(), &RunOptions { jobs: 2, ..opts }).unwrap();
        assert_eq!(s2.resumed, 7);
        assert_eq!(s2.computed, 13);
        assert_eq!(fs::read(dir2.path().join(STATISTICS)).unwrap(), full);
    }

    #[test]
    fn bench_fills_minimum_time() {
        let t = bench_fn(|| {}, 10, Duration::from_millis(20));
        assert!(t.len() >= 10);
        let r = summarize("noop", t, "ok".into());
        assert!(r.median_s < 1e-3);
    }
}
