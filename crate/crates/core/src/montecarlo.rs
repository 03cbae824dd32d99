//! Deterministic parallel sampling and summary reports.
//!
//! Samples are grouped into fixed chunks of consecutive indices. Each chunk
//! is reduced on whichever worker picks it up, and chunk summaries are merged
//! in index order, so results do not depend on the thread count.

use std::collections::BTreeMap;
use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{invalid, Error, Result};

/// Samples per chunk.
pub const CHUNK: u64 = 64;

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Welford {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Chan et al. pairwise combination.
    pub fn merge(&mut self, other: &Welford) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        let (na, nb) = (self.count as f64, other.count as f64);
        self.mean += delta * nb / n;
        self.m2 += other.m2 + delta * delta * na * nb / n;
        self.count += other.count;
    }

    /// Unbiased sample variance; 0 below two samples.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

/// Runs `f(index, out)` for every index in `range`, where `f` fills `out`
/// with `width` observables, and returns one accumulator per observable.
pub fn accumulate<F>(range: Range<u64>, width: usize, threads: usize, f: F) -> Result<Vec<Welford>>
where
    F: Fn(u64, &mut [f64]) -> Result<()> + Sync,
{
    let chunks: Vec<Range<u64>> = (range.start..range.end)
        .step_by(CHUNK as usize)
        .map(|s| s..(s + CHUNK).min(range.end))
        .collect();
    let reduce = |chunk: &Range<u64>| -> Result<Vec<Welford>> {
        let mut acc = vec![Welford::default(); width];
        let mut out = vec![0.0; width];
        for i in chunk.clone() {
            f(i, &mut out)?;
            for (a, &x) in acc.iter_mut().zip(&out) {
                a.push(x);
            }
        }
        Ok(acc)
    };
    let parts: Vec<Vec<Welford>> = if threads <= 1 {
        chunks.iter().map(reduce).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
        pool.install(|| chunks.par_iter().map(reduce).collect::<Result<_>>())?
    };
    let mut total = vec![Welford::default(); width];
    for part in &parts {
        for (t, p) in total.iter_mut().zip(part) {
            t.merge(p);
        }
    }
    Ok(total)
}

/// Worker count to use when none is requested.
pub fn default_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

pub const SCHEMA_VERSION: u32 = 1;

/// Summary of one Monte Carlo estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub schema_version: u32,
    pub quantity: String,
    pub params: BTreeMap<String, Value>,
    pub samples: u64,
    pub mean: f64,
    pub variance: f64,
    pub stderr: f64,
    pub ci95: [f64; 2],
    pub seed: u64,
    /// Excluded from [`EstimateReport::canonical_json`].
    pub wall_time_secs: f64,
    #[serde(default)]
    pub extras: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl EstimateReport {
    pub fn new(quantity: &str, params: BTreeMap<String, Value>, stats: &Welford, seed: u64) -> Self {
        let stderr = stats.stderr();
        Self {
            schema_version: SCHEMA_VERSION,
            quantity: quantity.to_string(),
            params,
            samples: stats.count,
            mean: stats.mean,
            variance: stats.variance(),
            stderr,
            ci95: [stats.mean - 1.96 * stderr, stats.mean + 1.96 * stderr],
            seed,
            wall_time_secs: 0.0,
            extras: BTreeMap::new(),
            warnings: Vec::new(),
        }
    }

    pub fn with_extra(mut self, key: &str, value: f64) -> Self {
        self.extras.insert(key.to_string(), value);
        self
    }

    pub fn welford(&self) -> Welford {
        Welford {
            count: self.samples,
            mean: self.mean,
            m2: self.variance * self.samples.saturating_sub(1) as f64,
        }
    }

    /// Combines two reports of the same quantity and parameters computed on
    /// disjoint sample ranges. Extras are dropped.
    pub fn merge(&self, other: &EstimateReport) -> Result<EstimateReport> {
        if self.quantity != other.quantity || self.params != other.params || self.seed != other.seed {
            return invalid("reports describe different estimates");
        }
        let mut w = self.welford();
        w.merge(&other.welford());
        let mut merged = EstimateReport::new(&self.quantity, self.params.clone(), &w, self.seed);
        merged.wall_time_secs = self.wall_time_secs + other.wall_time_secs;
        Ok(merged)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Compact JSON without wall time; identical across reruns with the
    /// same seed.
    pub fn canonical_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Value::Object(map) = &mut v {
            map.remove("wall_time_secs");
        }
        v.to_string()
    }

    pub const CSV_HEADER: [&'static str; 13] = [
        "schema_version",
        "quantity",
        "params",
        "samples",
        "mean",
        "variance",
        "stderr",
        "ci95_low",
        "ci95_high",
        "seed",
        "wall_time_secs",
        "extras",
        "warnings",
    ];

    fn csv_record(&self) -> Vec<String> {
        vec![
            self.schema_version.to_string(),
            self.quantity.clone(),
            serde_json::to_string(&self.params).expect("params serialize"),
            self.samples.to_string(),
            self.mean.to_string(),
            self.variance.to_string(),
            self.stderr.to_string(),
            self.ci95[0].to_string(),
            self.ci95[1].to_string(),
            self.seed.to_string(),
            self.wall_time_secs.to_string(),
            serde_json::to_string(&self.extras).expect("extras serialize"),
            self.warnings.join("; "),
        ]
    }

    /// Header row plus one row per report.
    pub fn to_csv(reports: &[EstimateReport]) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Parse(e.to_string());
        w.write_record(Self::CSV_HEADER).map_err(io)?;
        for r in reports {
            w.write_record(r.csv_record()).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("CSV is UTF-8"))
    }
}

/// Outcome of a statistical or exact check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn exact(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    /// The claim `E >= bound`: PASS when the whole `mean ± 3 stderr` band is
    /// at or above the bound, FAIL when it is entirely below.
    pub fn at_least(mean: f64, stderr: f64, bound: f64) -> Self {
        if mean - 3.0 * stderr >= bound {
            Verdict::Pass
        } else if mean + 3.0 * stderr < bound {
            Verdict::Fail
        } else {
            Verdict::Inconclusive
        }
    }

    /// The claim `E <= bound`.
    pub fn at_most(mean: f64, stderr: f64, bound: f64) -> Self {
        Self::at_least(-mean, stderr, -bound)
    }

    pub fn label(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "INCONCLUSIVE",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn welford_matches_two_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 101) as f64 * 0.5 + 1e6).collect();
        let mut w = Welford::default();
        xs.iter().for_each(|&x| w.push(x));
        let (m, v) = direct(&xs);
        assert!((w.mean - m).abs() / m < 1e-12 && (w.variance() - v).abs() / v < 1e-9);
        let (mut a, mut b) = (Welford::default(), Welford::default());
        xs[..313].iter().for_each(|&x| a.push(x));
        xs[313..].iter().for_each(|&x| b.push(x));
        a.merge(&b);
        assert!((a.mean - w.mean).abs() / w.mean < 1e-12);
        assert!((a.variance() - w.variance()).abs() / w.variance() < 1e-12);
        let mut e = Welford::default();
        e.merge(&w);
        assert_eq!(e, w);
    }

    #[test]
    fn accumulate_ignores_thread_count() {
        let f = |i: u64, out: &mut [f64]| {
            out[0] = ((i * 2654435761) % 1000) as f64 / 7.0;
            out[1] = (i % 3) as f64;
            Ok(())
        };
        let one = accumulate(0..1000, 2, 1, f).unwrap();
        let four = accumulate(0..1000, 2, 4, f).unwrap();
        assert_eq!(one, four);
        assert_eq!(one[0].count, 1000);
        let failing = accumulate(0..10, 1, 2, |i, _| if i == 7 { invalid("boom") } else { Ok(()) });
        assert!(failing.is_err());
    }

    #[test]
    fn report_merge_and_serialization() {
        let f = |i: u64, out: &mut [f64]| {
            out[0] = (i as f64).sin();
            Ok(())
        };
        let params: BTreeMap<String, Value> = [("k".to_string(), Value::from(2))].into();
        let whole = EstimateReport::new("x", params.clone(), &accumulate(0..500, 1, 1, f).unwrap()[0], 9);
        let a = EstimateReport::new("x", params.clone(), &accumulate(0..200, 1, 1, f).unwrap()[0], 9);
        let b = EstimateReport::new("x", params, &accumulate(200..500, 1, 1, f).unwrap()[0], 9);
        let merged = a.merge(&b).unwrap();
        assert_eq!(merged.samples, 500);
        assert!((merged.mean - whole.mean).abs() <= 1e-12 * whole.mean.abs().max(1e-300));
        assert!((merged.variance - whole.variance).abs() <= 1e-12 * whole.variance);
        assert!((whole.ci95[1] - whole.mean - 1.96 * whole.stderr).abs() < 1e-15);

        let json = whole.to_json();
        let back: EstimateReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, whole);
        let mut later = whole.clone();
        later.wall_time_secs = 12.5;
        assert_eq!(later.canonical_json(), whole.canonical_json());
        assert!(!whole.canonical_json().contains("wall_time"));

        let csv = EstimateReport::to_csv(std::slice::from_ref(&whole)).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), EstimateReport::CSV_HEADER.join(","));
        assert!(lines.next().unwrap().contains("\"{\"\"k\"\":2}\""));
    }

    #[test]
    fn verdicts() {
        assert_eq!(Verdict::at_least(10.0, 1.0, 6.9), Verdict::Pass);
        assert_eq!(Verdict::at_least(10.0, 1.0, 13.1), Verdict::Fail);
        assert_eq!(Verdict::at_least(10.0, 1.0, 11.0), Verdict::Inconclusive);
        assert_eq!(Verdict::at_most(10.0, 1.0, 13.0), Verdict::Pass);
        assert_eq!(Verdict::at_most(10.0, 1.0, 6.0), Verdict::Fail);
        assert_eq!(Verdict::at_most(10.0, 1.0, 9.0), Verdict::Inconclusive);
    }
}
