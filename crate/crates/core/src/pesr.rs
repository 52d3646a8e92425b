//! Proportion of extreme simulation repetitions (PESR): thresholds from the
//! matched null scenario, Monte Carlo standard errors, missing-value
//! exclusion, asymptotic power and the gap-to-best summary.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::method::MethodSpec;
use crate::outcome::Direction;
use crate::runner::{RunManifest, StatRow};
use crate::simgen::Balance;

/// Share of missing repetitions above which no PESR is reported.
pub const EXCLUSION_FRACTION: f64 = 0.2;

fn finite_sorted(values: &[Option<f64>]) -> Vec<f64> {
    let mut v: Vec<f64> = values.iter().flatten().copied().filter(|x| x.is_finite()).collect();
    v.sort_by(f64::total_cmp);
    v
}

/// The ceil(0.95 n)-th smallest value.
pub fn upper_threshold(sorted: &[f64]) -> Option<f64> {
    let n = sorted.len();
    (n > 0).then(|| sorted[((0.95 * n as f64).ceil() as usize).clamp(1, n) - 1])
}

/// The (floor(0.05 n) + 1)-th smallest value.
pub fn lower_threshold(sorted: &[f64]) -> Option<f64> {
    let n = sorted.len();
    (n > 0).then(|| sorted[((0.05 * n as f64).floor() as usize).min(n - 1)])
}

pub fn mcse(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PesrEstimate {
    pub pesr: Option<f64>,
    pub mcse: Option<f64>,
    pub n_valid: usize,
    pub n_missing: usize,
}

fn too_many_missing(missing: usize, total: usize) -> bool {
    missing as f64 > EXCLUSION_FRACTION * total as f64
}

/// Share of alternative repetitions strictly beyond the null threshold in
/// the dissimilar direction. `None` entries and non-finite values count as
/// missing.
pub fn pesr(null: &[Option<f64>], alt: &[Option<f64>], direction: Direction) -> Result<PesrEstimate> {
    let null_sorted = finite_sorted(null);
    let valid: Vec<f64> = alt.iter().flatten().copied().filter(|x| x.is_finite()).collect();
    if null_sorted.is_empty() || valid.is_empty() {
        return Err(invalid("no valid repetitions"));
    }
    let n_valid = valid.len();
    let n_missing = alt.len() - n_valid;
    if too_many_missing(n_missing, alt.len()) || too_many_missing(null.len() - null_sorted.len(), null.len()) {
        return Ok(PesrEstimate { pesr: None, mcse: None, n_valid, n_missing });
    }
    let extreme = match direction {
        Direction::LowMeansSimilar => {
            let t = upper_threshold(&null_sorted).unwrap();
            valid.iter().filter(|&&x| x > t).count()
        }
        Direction::HighMeansSimilar => {
            let t = lower_threshold(&null_sorted).unwrap();
            valid.iter().filter(|&&x| x < t).count()
        }
    };
    let p = extreme as f64 / n_valid as f64;
    Ok(PesrEstimate { pesr: Some(p), mcse: Some(mcse(p, n_valid)), n_valid, n_missing })
}

/// Share of valid repetitions with p-value below `alpha`.
pub fn asymptotic_power(p_values: &[Option<f64>], alpha: f64) -> Option<f64> {
    let valid: Vec<f64> = p_values.iter().flatten().copied().filter(|p| p.is_finite()).collect();
    (!valid.is_empty()).then(|| valid.iter().filter(|&&p| p < alpha).count() as f64 / valid.len() as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PesrRecord {
    pub scenario: String,
    pub k: usize,
    #[serde(rename = "N")]
    pub n_total: usize,
    pub p: usize,
    pub arity: u32,
    pub balance: String,
    pub family: String,
    pub delta: Option<f64>,
    pub grouping: String,
    pub ogm: String,
    pub method: String,
    pub pesr: Option<f64>,
    pub mcse: Option<f64>,
    pub n_valid: usize,
    pub n_missing: usize,
    pub asymptotic_power: Option<f64>,
    #[serde(skip)]
    pub null_scenario: bool,
}

fn balance_label(b: Balance) -> &'static str {
    match b {
        Balance::Balanced => "balanced",
        Balance::Unbalanced => "unbalanced",
    }
}

/// One record per (scenario, method) pair present in the statistic table.
/// Thresholds come from the matched null scenario of the same run.
pub fn compute_records(manifest: &RunManifest, rows: &[StatRow]) -> Result<Vec<PesrRecord>> {
    let mut stats: HashMap<(&str, &str), Vec<Option<f64>>> = HashMap::new();
    let mut pvals: HashMap<(&str, &str), Vec<Option<f64>>> = HashMap::new();
    for r in rows {
        let key = (r.scenario.as_str(), r.method.as_str());
        stats.entry(key).or_default().push(if r.is_ok() { r.statistic } else { None });
        pvals.entry(key).or_default().push(if r.is_ok() { r.p_value } else { None });
    }
    let methods = manifest.parsed_methods()?;
    let mut out = Vec::new();
    for spec in &manifest.scenarios {
        let id = spec.id();
        let null_id = spec.matched_null().id();
        for m in &methods {
            let mid = m.id();
            let (Some(alt), Some(null)) = (stats.get(&(id.as_str(), mid.as_str())), stats.get(&(null_id.as_str(), mid.as_str()))) else {
                continue;
            };
            let est = pesr(null, alt, m.direction()).unwrap_or(PesrEstimate {
                pesr: None,
                mcse: None,
                n_valid: 0,
                n_missing: alt.len(),
            });
            out.push(PesrRecord {
                scenario: id.clone(),
                k: spec.k,
                n_total: spec.n_total,
                p: spec.p,
                arity: spec.arity,
                balance: balance_label(spec.balance).into(),
                family: spec.family.to_string().split(':').next().unwrap().to_string(),
                delta: spec.family.delta(),
                grouping: spec.grouping.map(|g| g.to_string()).unwrap_or_default(),
                ogm: spec.ogm.to_string(),
                method: mid.clone(),
                pesr: est.pesr,
                mcse: est.mcse,
                n_valid: est.n_valid,
                n_missing: est.n_missing,
                asymptotic_power: asymptotic_power(&pvals[&(id.as_str(), mid.as_str())], 0.05),
                null_scenario: spec.is_null(),
            });
        }
    }
    Ok(out)
}

pub fn write_records(records: &[PesrRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapRow {
    /// `balance/arity/p` or `overall`.
    pub group: String,
    pub method: String,
    pub median_gap: f64,
    pub scenarios: usize,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Per scenario, the gap of each method to the best PESR (missing counts as
/// a gap of 1), then medians per balance/arity/p group and overall. Null
/// scenarios are left out.
pub fn gap_to_best(records: &[PesrRecord]) -> Vec<GapRow> {
    let mut by_scenario: BTreeMap<&str, Vec<&PesrRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| !r.null_scenario) {
        by_scenario.entry(&r.scenario).or_default().push(r);
    }
    let mut groups: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for recs in by_scenario.values() {
        let best = recs.iter().filter_map(|r| r.pesr).fold(f64::NEG_INFINITY, f64::max);
        for r in recs {
            let gap = match r.pesr {
                Some(p) => best - p,
                None => 1.0,
            };
            let g = format!("{}/{}/{}", r.balance, r.arity, r.p);
            groups.entry((g, r.method.clone())).or_default().push(gap);
            groups.entry(("overall".into(), r.method.clone())).or_default().push(gap);
        }
    }
    groups
        .into_iter()
        .map(|((group, method), mut gaps)| GapRow {
            group,
            method,
            scenarios: gaps.len(),
            median_gap: median(&mut gaps),
        })
        .collect()
}

pub fn write_gaps(rows: &[GapRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

const COLORS: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22",
    "#17becf",
];

fn panel_svg(title: &str, series: &BTreeMap<String, Vec<(f64, f64, f64)>>) -> String {
    let (w, h, left, right, top, bottom) = (720.0, 420.0, 60.0, 200.0, 40.0, 50.0);
    let xmax = series
        .values()
        .flatten()
        .map(|p| p.0)
        .fold(0.0_f64, f64::max)
        .max(1e-9);
    let px = |x: f64| left + x / xmax * (w - left - right);
    let py = |y: f64| top + (1.0 - y) * (h - top - bottom);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{left}" y="20" font-size="14">{title}</text>"#);
    for i in 0..=5 {
        let y = i as f64 / 5.0;
        let _ = writeln!(
            s,
            r##"<line x1="{left}" x2="{}" y1="{y0}" y2="{y0}" stroke="#ddd"/><text x="{}" y="{}" text-anchor="end">{y:.1}</text>"##,
            w - right,
            left - 6.0,
            py(y) + 4.0,
            y0 = py(y)
        );
    }
    let mut xs: Vec<f64> = series.values().flatten().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    for x in &xs {
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{x}</text>"#, px(*x), h - bottom + 18.0);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">deviation</text>"#, (left + w - right) / 2.0, h - 10.0);
    let _ = writeln!(s, r#"<text x="15" y="{}" transform="rotate(-90 15 {})" text-anchor="middle">PESR</text>"#, h / 2.0, h / 2.0);
    for (i, (method, pts)) in series.iter().enumerate() {
        let c = COLORS[i % COLORS.len()];
        let line: Vec<String> = pts.iter().map(|&(x, y, _)| format!("{:.1},{:.1}", px(x), py(y))).collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{}"/>"#, line.join(" "));
        for &(x, y, e) in pts {
            let _ = writeln!(
                s,
                r#"<line x1="{x0:.1}" x2="{x0:.1}" y1="{:.1}" y2="{:.1}" stroke="{c}"/><circle cx="{x0:.1}" cy="{:.1}" r="2.5" fill="{c}"/>"#,
                py((y - e).max(0.0)),
                py((y + e).min(1.0)),
                py(y),
                x0 = px(x)
            );
        }
        let ly = top + 14.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{}" x2="{}" y1="{ly}" y2="{ly}" stroke="{c}" stroke-width="2"/><text x="{}" y="{}">{method}</text>"#,
            w - right + 10.0,
            w - right + 30.0,
            w - right + 35.0,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}

/// One SVG per panel (k, N, p, balance, arity, family, grouping): PESR
/// against the deviation with MCSE bars, the matched null at zero. Outcome
/// model variants are not plotted.
pub fn write_plots(records: &[PesrRecord], dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let nulls: HashMap<(String, &str), &PesrRecord> = records
        .iter()
        .filter(|r| r.null_scenario && r.ogm == "none")
        .map(|r| ((format!("{}-{}-{}-{}-{}", r.k, r.n_total, r.p, r.balance, r.arity), r.method.as_str()), r))
        .collect();
    let mut panels: BTreeMap<String, BTreeMap<String, Vec<(f64, f64, f64)>>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.delta.is_some() && r.ogm == "none") {
        let (Some(p), Some(e)) = (r.pesr, r.mcse) else { continue };
        let base = format!("{}-{}-{}-{}-{}", r.k, r.n_total, r.p, r.balance, r.arity);
        let panel = format!("k{}_N{}_p{}_{}_a{}_{}{}", r.k, r.n_total, r.p, r.balance, r.arity, r.family, if r.grouping.is_empty() { String::new() } else { format!("_g{}", r.grouping) });
        let series = panels.entry(panel).or_default().entry(r.method.clone()).or_default();
        if series.is_empty() {
            if let Some(n) = nulls.get(&(base, r.method.as_str())) {
                if let (Some(np), Some(ne)) = (n.pesr, n.mcse) {
                    series.push((0.0, np, ne));
                }
            }
        }
        series.push((r.delta.unwrap(), p, e));
    }
    let mut out = Vec::new();
    for (panel, mut series) in panels {
        for pts in series.values_mut() {
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        }
        let path = dir.join(format!("{}.svg", panel.replace('+', "-")));
        fs::write(&path, panel_svg(&panel, &series))?;
        out.push(path);
    }
    Ok(out)
}

/// Direction of a method id, for callers that only hold the id.
pub fn direction_of(method: &str) -> Result<Direction> {
    Ok(MethodSpec::parse(method)?.direction())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn some(v: &[f64]) -> Vec<Option<f64>> {
        v.iter().map(|&x| Some(x)).collect()
    }

    #[test]
    fn mcse_values() {
        assert!((mcse(0.5, 500) - 0.02236).abs() < 1e-4);
        assert!((mcse(0.05, 500) - 0.00975).abs() < 1e-4);
    }

    #[test]
    fn self_test_stays_below_level() {
        let null: Vec<f64> = (0..500).map(|i| ((i * 7919) % 500) as f64).collect();
        let e = pesr(&some(&null), &some(&null), Direction::LowMeansSimilar).unwrap();
        assert!(e.pesr.unwrap() <= 0.05);
        let e = pesr(&some(&null), &some(&null), Direction::HighMeansSimilar).unwrap();
        assert!(e.pesr.unwrap() <= 0.05);
    }

    #[test]
    fn missing_exclusion() {
        let null = some(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let mut alt = some(&[6.0, 6.0, 6.0, 6.0]);
        alt.push(None);
        let e = pesr(&null, &alt, Direction::LowMeansSimilar).unwrap();
        assert_eq!(e.pesr, Some(1.0));
        alt.push(Some(f64::NAN));
        let e = pesr(&null, &alt, Direction::LowMeansSimilar).unwrap();
        assert_eq!((e.pesr, e.n_valid, e.n_missing), (None, 4, 2));
        assert!(pesr(&null, &[None], Direction::LowMeansSimilar).is_err());
    }

    #[test]
    fn asymptotic_power_bounds() {
        assert_eq!(asymptotic_power(&some(&[1.0, 1.0]), 0.05), Some(0.0));
        assert_eq!(asymptotic_power(&some(&[0.0, 0.0]), 0.05), Some(1.0));
        assert_eq!(asymptotic_power(&[None], 0.05), None);
    }
}
