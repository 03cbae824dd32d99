//! Named verification suites. Each suite runs fixed desk-scale checks and
//! returns one row per checked identity or inequality.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{invalid, Error, Result};
use crate::estimators::{
    estimate_bbar_tail, estimate_concat_lower, estimate_drift, estimate_gamma, estimate_gamma_eps,
    estimate_lnds_binomial, estimate_lnds_mean, estimate_nontrivial_tail, estimate_two_game, ConcatParams, Sampling,
};
use crate::games::chain::{
    closed_form_stationary, exact_stationarity_defect, star_probability_from_chain, stationary_residual,
    trivial_chain_exact, trivial_game_policy_gaps, ChainState, Side,
};
use crate::games::delta::{delta_game_exact, mean_within_bound, second_moment_bound};
use crate::games::walk::walk_abs_by_enumeration;
use crate::games::{
    random_walk_abs_expectation, star_probability, stationary_distribution, DeltaObjective, FRule, Scalar,
};
use crate::montecarlo::{EstimateReport, Verdict, SCHEMA_VERSION};
use crate::particles::{q_step, run_dynamics_on, w_prime_generator, Dynamics};
use crate::rng::{Lane, RngStream};
use crate::seqalgs::{lcs_length_dp, lnds_restricted};
use crate::words::{sample_word, sample_word_in_lane, LazyWord, Word};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Thm1,
    Thm2,
    Thm3,
    Thm4,
    Thm5,
    Lemma11,
    Chain,
    Walk,
    Props,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::Thm1,
        Suite::Thm2,
        Suite::Thm3,
        Suite::Thm4,
        Suite::Thm5,
        Suite::Lemma11,
        Suite::Chain,
        Suite::Walk,
        Suite::Props,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Thm1 => "thm1",
            Suite::Thm2 => "thm2",
            Suite::Thm3 => "thm3",
            Suite::Thm4 => "thm4",
            Suite::Thm5 => "thm5",
            Suite::Lemma11 => "lemma11",
            Suite::Chain => "chain",
            Suite::Walk => "walk",
            Suite::Props => "props",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown suite {s:?}")))
    }
}

/// Seed, worker count and the alphabet size for the `chain` suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyOptions {
    pub seed: u64,
    pub threads: usize,
    pub chain_k: u32,
}

impl VerifyOptions {
    pub fn new(seed: u64, threads: usize) -> Self {
        Self {
            seed,
            threads,
            chain_k: 8,
        }
    }

    fn sampling(&self, samples: u64) -> Sampling {
        Sampling::new(samples, self.seed, self.threads)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub name: String,
    pub verdict: Verdict,
    pub observed: String,
    pub expected: String,
}

impl CheckRow {
    fn new(
        name: impl Into<String>,
        verdict: Verdict,
        observed: impl Into<String>,
        expected: impl Into<String>,
    ) -> Self {
        Self {
            name: name.into(),
            verdict,
            observed: observed.into(),
            expected: expected.into(),
        }
    }

    fn exact(name: impl Into<String>, ok: bool, observed: impl Into<String>, expected: impl Into<String>) -> Self {
        Self::new(name, Verdict::exact(ok), observed, expected)
    }
}

/// All rows of one suite run. Carries no timing or thread information, so
/// the JSON form depends only on the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub schema_version: u32,
    pub suite: Suite,
    pub seed: u64,
    pub params: BTreeMap<String, Value>,
    pub rows: Vec<CheckRow>,
}

impl SuiteReport {
    fn new(suite: Suite, seed: u64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            suite,
            seed,
            params: BTreeMap::new(),
            rows: Vec::new(),
        }
    }

    fn param(&mut self, key: &str, value: impl Into<Value>) {
        self.params.insert(key.to_string(), value.into());
    }

    /// True when no row failed.
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.verdict != Verdict::Fail)
    }

    pub fn count(&self, verdict: Verdict) -> usize {
        self.rows.iter().filter(|r| r.verdict == verdict).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("suite report serializes")
    }

    /// Header row plus one row per check.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Parse(e.to_string());
        w.write_record(["suite", "seed", "check", "verdict", "observed", "expected"])
            .map_err(io)?;
        for r in &self.rows {
            let seed = self.seed.to_string();
            w.write_record([
                self.suite.name(),
                &seed,
                &r.name,
                r.verdict.label(),
                &r.observed,
                &r.expected,
            ])
            .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Aligned plain-text table, one line per row.
    pub fn table(&self) -> String {
        let width = |f: fn(&CheckRow) -> usize, min: usize| self.rows.iter().map(f).max().unwrap_or(0).max(min);
        let wn = width(|r| r.name.chars().count(), 5);
        let wo = width(|r| r.observed.chars().count(), 8);
        let mut out = format!("{:<12}  {:<wn$}  {:<wo$}  expected\n", "verdict", "check", "observed");
        for r in &self.rows {
            out.push_str(&format!(
                "{:<12}  {:<wn$}  {:<wo$}  {}\n",
                r.verdict.label(),
                r.name,
                r.observed,
                r.expected
            ));
        }
        out.push_str(&format!(
            "{}: {} pass, {} fail, {} inconclusive\n",
            self.suite,
            self.count(Verdict::Pass),
            self.count(Verdict::Fail),
            self.count(Verdict::Inconclusive)
        ));
        out
    }
}

/// Runs one suite at its registered parameters.
pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(suite, opts.seed);
    match suite {
        Suite::Thm1 => thm1(&mut report, opts)?,
        Suite::Thm2 => thm2(&mut report, opts)?,
        Suite::Thm3 => thm3(&mut report, opts)?,
        Suite::Thm4 => thm4(&mut report, opts)?,
        Suite::Thm5 => thm5(&mut report, opts)?,
        Suite::Lemma11 => lemma11(&mut report, opts)?,
        Suite::Chain => chain(&mut report, opts.chain_k)?,
        Suite::Walk => walk(&mut report),
        Suite::Props => props(&mut report, opts)?,
    }
    Ok(report)
}

/// Both ends of a two-sided window must hold.
pub fn within(mean: f64, stderr: f64, low: f64, high: f64) -> Verdict {
    match (
        Verdict::at_least(mean, stderr, low),
        Verdict::at_most(mean, stderr, high),
    ) {
        (Verdict::Fail, _) | (_, Verdict::Fail) => Verdict::Fail,
        (Verdict::Pass, Verdict::Pass) => Verdict::Pass,
        _ => Verdict::Inconclusive,
    }
}

fn band(mean: f64, stderr: f64) -> String {
    format!("{mean:.6} ± {stderr:.6}")
}

fn mean_band(r: &EstimateReport) -> String {
    band(r.mean, r.stderr)
}

fn extra(r: &EstimateReport, key: &str) -> f64 {
    r.extras.get(key).copied().unwrap_or(f64::NAN)
}

/// Two-letter block construction at `L0 = 400`, `α = 1/√7`, which yields
/// blocks of length 819.
pub fn desk_concat(d: usize) -> ConcatParams {
    ConcatParams {
        k: 2,
        eps: 0.018,
        d,
        alpha: 1.0 / 7f64.sqrt(),
        l0: 400,
        n: 20_000,
    }
}

fn concat_rows(report: &mut SuiteReport, opts: &VerifyOptions, d: usize, samples: u64) -> Result<()> {
    let p = desk_concat(d);
    let r = estimate_concat_lower(&p, &opts.sampling(samples))?;
    let lower = extra(&r, "expected_lower");
    report.rows.push(CheckRow::new(
        format!(
            "concat d={d}: E[Y] >= M(L/k + a sqrt(L/k)), L={}, M={}",
            extra(&r, "L"),
            extra(&r, "M")
        ),
        Verdict::at_least(r.mean, r.stderr, lower),
        mean_band(&r),
        format!(">= {lower:.3}"),
    ));
    let z = extra(&r, "independence_z");
    report.rows.push(CheckRow::exact(
        format!("concat d={d}: Var(Y) = sum Var(Y_i) (batch z-score)"),
        z.abs() < 5.0,
        format!("z = {z:.3}"),
        "|z| < 5",
    ));
    Ok(())
}

fn thm1(report: &mut SuiteReport, opts: &VerifyOptions) -> Result<()> {
    report.param("gamma_eps_a", "k=2 eps=0.3 n=2000 samples=200");
    report.param("gamma_eps_b", "k=3 eps=0.1 n=5000 samples=100");
    report.param("gamma2", "k=2 n=100000 samples=100");
    report.param("concat", "k=2 d=1 alpha=1/sqrt7 L0=400 eps=0.018 n=20000 samples=400");

    let r = estimate_gamma_eps(2, 0.3, 2000, &opts.sampling(200))?;
    report.rows.push(CheckRow::new(
        "gamma_eps(k=2, eps=0.3, n=2000) <= 1",
        Verdict::at_most(r.mean, r.stderr, 1.0),
        mean_band(&r),
        "<= 1",
    ));
    report.rows.push(CheckRow::new(
        "gamma_eps(k=2, eps=0.3, n=2000) >= 1 - eps",
        Verdict::at_least(r.mean, r.stderr, 0.7),
        mean_band(&r),
        ">= 0.7",
    ));

    // The quadratic floor is a limit statement; a miss is only logged.
    let r = estimate_gamma_eps(3, 0.1, 5000, &opts.sampling(100))?;
    let floor = 1.0 - 8.0 * 0.01 - 0.02;
    let verdict = match Verdict::at_least(r.mean, r.stderr, floor) {
        Verdict::Fail => Verdict::Inconclusive,
        v => v,
    };
    report.rows.push(CheckRow::new(
        "gamma_eps(k=3, eps=0.1, n=5000) >= 1 - 8 eps^2 - 0.02",
        verdict,
        mean_band(&r),
        format!(">= {floor:.3}"),
    ));

    let r = estimate_gamma(2, 100_000, &opts.sampling(100))?;
    report.rows.push(CheckRow::new(
        "gamma_2 at n=100000 in [0.78, 0.8263]",
        within(r.mean, r.stderr, 0.78, 0.8263),
        mean_band(&r),
        "[0.78, 0.8263]",
    ));

    concat_rows(report, opts, 1, 400)
}

fn thm2(report: &mut SuiteReport, opts: &VerifyOptions) -> Result<()> {
    report.param("lnds", "k=64 n=4096 samples=2000");
    report.param("lnds_binomial", "k=32 n=8192 p=0.5 samples=2000");
    report.param("concat", "k=2 d=2 alpha=1/sqrt7 L0=400 eps=0.018 n=20000 samples=400");

    let r = estimate_lnds_mean(64, 4096, &opts.sampling(2000))?;
    let (m, se) = (extra(&r, "normalized"), extra(&r, "normalized_stderr"));
    report.rows.push(CheckRow::new(
        "(E[LNDS] - n/k) / 2 sqrt(n) at k=64, n=4096 in [0.80, 1.05]",
        within(m, se, 0.80, 1.05),
        band(m, se),
        "[0.80, 1.05]",
    ));

    let r = estimate_lnds_binomial(32, 8192, 0.5, &opts.sampling(2000))?;
    let (m, se) = (extra(&r, "normalized"), extra(&r, "normalized_stderr"));
    report.rows.push(CheckRow::new(
        "(E[LNDS] - pn/k) / 2 sqrt(pn), binomial length, k=32, n=8192, p=1/2 in [0.75, 1.10]",
        within(m, se, 0.75, 1.10),
        band(m, se),
        "[0.75, 1.10]",
    ));
    let (lm, lse, target) = (
        extra(&r, "length_mean"),
        extra(&r, "length_stderr"),
        extra(&r, "length_target"),
    );
    report.rows.push(CheckRow::exact(
        "binomial length sampler mean = pn",
        (lm - target).abs() <= 3.0 * lse,
        band(lm, lse),
        format!("{target} within 3 stderr"),
    ));

    let r = estimate_lnds_mean(1, 500, &opts.sampling(10))?;
    report.rows.push(CheckRow::exact(
        "LNDS of a one-letter word is its length",
        r.mean == 500.0 && r.variance == 0.0,
        format!("{}", r.mean),
        "500",
    ));

    concat_rows(report, opts, 2, 400)
}

fn thm3(report: &mut SuiteReport, opts: &VerifyOptions) -> Result<()> {
    report.param("drift", "k=2 d=1 L in {40, 400} samples=100000");
    report.param(
        "two_game",
        "k=2 L=400 rules={always-same, always-diff, honest} samples=20000",
    );
    let k = 2u32;
    for l in [40usize, 400] {
        let r = estimate_drift(k, 1, l, &opts.sampling(100_000))?;
        let bound = (l as f64 / (7.0 * f64::from(k))).sqrt();
        report.rows.push(CheckRow::new(
            format!("E[P_1 - P_0] >= sqrt(L/7k) at k=2, L={l}"),
            Verdict::at_least(r.mean, r.stderr, bound),
            mean_band(&r),
            format!(">= {bound:.4}"),
        ));
    }
    for rule in [FRule::AlwaysSame, FRule::AlwaysDiff, FRule::Honest] {
        let r = estimate_two_game(k, 400, rule, &opts.sampling(20_000))?;
        let bound = extra(&r, "lower_bound");
        let name = serde_json::to_value(rule).expect("rule serializes");
        report.rows.push(CheckRow::new(
            format!(
                "gap game, rule {}: E[delta] >= 1/2 + sqrt(L/7k) at L=400",
                name.as_str().unwrap_or("?")
            ),
            Verdict::at_least(r.mean, r.stderr, bound),
            mean_band(&r),
            format!(">= {bound:.4}"),
        ));
    }
    Ok(())
}

fn thm4(report: &mut SuiteReport, opts: &VerifyOptions) -> Result<()> {
    report.param("drift_grid", "k in {2,4,8} d in {1,2,3} L in {100,1000} samples=10000");
    report.param("dp", "k in 2..=5 L in 0..=50 exact");
    for k in [2u32, 4, 8] {
        for d in 1..=3usize {
            for l in [100usize, 1000] {
                let r = estimate_drift(k, d, l, &opts.sampling(10_000))?;
                let bound = extra(&r, "upper_bound");
                report.rows.push(CheckRow::new(
                    format!("E[P_d - P_0] <= d sqrt(2L/k) + d at k={k}, d={d}, L={l}"),
                    Verdict::at_most(r.mean, r.stderr, bound),
                    mean_band(&r),
                    format!("<= {bound:.4}"),
                ));
            }
        }
    }
    for row in delta_dp_rows(2..=5, 50)? {
        report.rows.push(row);
    }
    Ok(())
}

/// Exact gap-game values against both bounds for every horizon up to
/// `max_l`, one row per alphabet size and objective.
pub fn delta_dp_rows(ks: impl IntoIterator<Item = u32>, max_l: usize) -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    for k in ks {
        let mean = delta_game_exact(k, max_l, DeltaObjective::Mean)?;
        let worst = (0..=max_l)
            .filter(|&l| !mean_within_bound(mean.value_for_horizon(l), k, l))
            .collect::<Vec<_>>();
        rows.push(CheckRow::exact(
            format!("gap game optimum <= sqrt(2L/k) + 1, k={k}, L=0..={max_l}"),
            worst.is_empty(),
            format!("value at L={max_l}: {:.6}", mean.value().to_f64()),
            if worst.is_empty() {
                "all horizons".to_string()
            } else {
                format!("violated at L={worst:?}")
            },
        ));
        let second = delta_game_exact(k, max_l, DeltaObjective::SecondMoment)?;
        let worst = (0..=max_l)
            .filter(|&l| *second.value_for_horizon(l) > second_moment_bound(k, l))
            .collect::<Vec<_>>();
        rows.push(CheckRow::exact(
            format!("gap game second moment <= 1/4 + 2L/k, k={k}, L=0..={max_l}"),
            worst.is_empty(),
            format!("value at L={max_l}: {:.6}", second.value().to_f64()),
            if worst.is_empty() {
                "all horizons".to_string()
            } else {
                format!("violated at L={worst:?}")
            },
        ));
    }
    Ok(rows)
}

fn thm5(report: &mut SuiteReport, opts: &VerifyOptions) -> Result<()> {
    report.param("drift", "k=50 d=3 L=100000 samples=200");
    let r = estimate_drift(50, 3, 100_000, &opts.sampling(200))?;
    let (m, se) = (extra(&r, "ratio"), extra(&r, "ratio_stderr"));
    report.rows.push(CheckRow::new(
        "E[P_d - P_0] / 2 sqrt(dL/k) at k=50, d=3, L=100000 in [0.75, 1.25]",
        within(m, se, 0.75, 1.25),
        band(m, se),
        "[0.75, 1.25]",
    ));
    Ok(())
}

fn lemma11(report: &mut SuiteReport, opts: &VerifyOptions) -> Result<()> {
    report.param("nontrivial", "k=16 d=2 L=2048 samples=10000");
    report.param("bbar", "k=2 L=64 samples=100000");
    let r = estimate_nontrivial_tail(16, 2, 2048, &opts.sampling(10_000))?;
    let (bound, se) = (extra(&r, "bound"), extra(&r, "binomial_stderr"));
    report.rows.push(CheckRow::new(
        format!(
            "Pr[|B| >= 6d^2L/k] <= min(1, 4d^2L e^(-sqrt(L) k^(-3/2))) at k=16, d=2, L=2048 (mean |B| = {:.1})",
            extra(&r, "mean_nontrivial")
        ),
        Verdict::at_most(r.mean, se, bound),
        band(r.mean, se),
        format!("<= {bound:.6}"),
    ));
    let r = estimate_bbar_tail(2, 64, &opts.sampling(100_000))?;
    let (bound, se) = (extra(&r, "bound"), extra(&r, "binomial_stderr"));
    report.rows.push(CheckRow::new(
        "reduced chain: Pr[Bbar >= 3pL] <= min(1, 2L e^(-p sqrt(2L/k))) at k=2, L=64",
        Verdict::at_most(r.mean, se, bound),
        band(r.mean, se),
        format!("<= {bound:.6}"),
    ));
    Ok(())
}

/// Exact and numeric checks on the reduced chain for one alphabet size.
pub fn chain_rows(k: u32) -> Result<Vec<CheckRow>> {
    if k < 2 {
        return invalid(format!("need k >= 2, got {k}"));
    }
    let mut rows = Vec::new();
    let exact = trivial_chain_exact(k)?;
    let spec = exact.to_spec();
    spec.validate()?;

    let rows_ok = exact
        .rows
        .iter()
        .all(|r| r.iter().fold(BigRational::zero(), |a, b| a + b).is_one());
    rows.push(CheckRow::exact(
        format!("k={k}: every row sums to 1"),
        rows_ok,
        rows_ok.to_string(),
        "true",
    ));
    let top = exact.index_of(ChainState::new(k, Side::In));
    let to_top = BigRational::new(1.into(), k.into());
    let top_ok = exact.rows.iter().all(|r| r[top] == to_top);
    rows.push(CheckRow::exact(
        format!("k={k}: every state moves to (k,in) w.p. 1/k"),
        top_ok,
        top_ok.to_string(),
        "true",
    ));

    let closed = closed_form_stationary(k);
    let defect_ok = exact_stationarity_defect(&exact, &closed).iter().all(Zero::is_zero);
    rows.push(CheckRow::exact(
        format!("k={k}: closed form is exactly stationary"),
        defect_ok,
        defect_ok.to_string(),
        "true",
    ));

    let pi = stationary_distribution(&spec)?;
    let gap = pi
        .iter()
        .zip(&closed)
        .map(|(a, b)| (a - b.to_f64()).abs())
        .fold(0.0, f64::max);
    rows.push(CheckRow::exact(
        format!("k={k}: solved stationary law matches closed form"),
        gap <= 1e-10,
        format!("max gap {gap:.3e}"),
        "<= 1e-10",
    ));
    let residual = stationary_residual(&spec, &pi);
    rows.push(CheckRow::exact(
        format!("k={k}: stationary residual"),
        residual < 1e-12,
        format!("{residual:.3e}"),
        "< 1e-12",
    ));

    let p = star_probability(k);
    let from_chain = star_probability_from_chain(k)?;
    rows.push(CheckRow::exact(
        format!("k={k}: star probability = (2^k - 1)/(k 2^(k-1))"),
        from_chain == p,
        from_chain.to_string(),
        p.to_string(),
    ));
    let kr = BigRational::from_integer(k.into());
    let in_range = p >= kr.recip() && p <= BigRational::from_integer(2.into()) / &kr;
    rows.push(CheckRow::exact(
        format!("k={k}: 1/k <= p <= 2/k"),
        in_range,
        p.to_string(),
        "[1/k, 2/k]",
    ));

    let max_k = k.min(4);
    let gaps = trivial_game_policy_gaps(max_k, 6)?;
    rows.push(CheckRow::exact(
        format!("no adversary policy beats the chain tail, k=2..={max_k}, T<=6"),
        gaps.is_empty(),
        format!("{} gaps", gaps.len()),
        "0 gaps",
    ));
    Ok(rows)
}

fn chain(report: &mut SuiteReport, k: u32) -> Result<()> {
    report.param("k", k);
    report.rows = chain_rows(k)?;
    Ok(())
}

fn walk(report: &mut SuiteReport) {
    report.param("T", "0..=16");
    for t in 0..=16u32 {
        let formula = random_walk_abs_expectation(u64::from(t));
        let paths = walk_abs_by_enumeration(t);
        report.rows.push(CheckRow::exact(
            format!("E|walk| closed form = 2^T path enumeration, T={t}"),
            formula == paths,
            formula.to_string(),
            paths.to_string(),
        ));
    }
}

/// Largest `m <= |w|` with `m - LCS(w_{<m}, w') <= d`, by quadratic DP.
fn definitional_waiting_time(w: &[u32], w_prime: &[u32], d: usize) -> usize {
    let mut best = 0;
    for m in 0..=w.len() {
        if m - lcs_length_dp(&w[..m], w_prime) <= d {
            best = m;
        } else {
            break;
        }
    }
    best
}

/// Mismatches between the particle dynamics and the definitions over
/// `instances` random small cases: `(waiting time, restricted LNDS)`.
pub fn particle_oracle_mismatches(seed: u64, instances: u64) -> Result<(usize, usize)> {
    let mut g = RngStream::new(seed, u64::MAX).generator(Lane::Fortune);
    let (mut wait_bad, mut lnds_bad) = (0, 0);
    for case in 0..instances {
        let k = 2 + g.symbol(3);
        let d = g.symbol(4) as usize;
        let l = g.symbol(13) as usize;
        let rng = RngStream::new(seed, case);
        let w = sample_word(k, l + d + 1, &rng)?;
        let wp = sample_word_in_lane(k, l, &rng, Lane::WordPrime)?;
        let mut dynamics = Dynamics::new(w.clone(), d);
        let mut a_concat: Vec<u32> = Vec::new();
        for ell in 0..=l {
            for i in 0..=d {
                let p = dynamics.positions()[i];
                wait_bad += usize::from(p != definitional_waiting_time(&w, &wp[..ell], i));
                lnds_bad += usize::from(lnds_restricted(&a_concat, i as u32) + i != p);
            }
            if ell < l {
                let rec = dynamics.step_recorded(wp[ell])?;
                a_concat.extend(rec.a.iter().map(|&i| i as u32));
            }
        }
    }
    Ok((wait_bad, lnds_bad))
}

/// Steps where the sorted Q-particles differ from the P-particles.
pub fn q_lockstep_mismatches(seed: u64, k: u32, d: usize, steps: usize) -> Result<usize> {
    let rng = RngStream::new(seed, 0);
    let mut dynamics = Dynamics::new(LazyWord::new(k, &rng, Lane::Word)?, d).with_q();
    let mut wp = w_prime_generator(&rng);
    let mut bad = 0;
    for _ in 0..steps {
        dynamics.step(wp.symbol(k))?;
        let mut q = dynamics.q_positions().expect("q tracked").to_vec();
        q.sort_unstable();
        bad += usize::from(q != dynamics.positions());
    }
    Ok(bad)
}

/// Three steps with `w = 1323121`, `w' = 231`, `d = 3` (one-based letters).
pub fn three_step_example_matches() -> Result<bool> {
    let w = Word::from_one_based("1323121", 3)?;
    let wp = Word::from_one_based("231", 3)?;
    let t = run_dynamics_on(&w, &wp, 3)?;
    let states = t.states();
    let a: Vec<Vec<usize>> = t.steps.iter().map(|s| s.a.clone()).collect();
    Ok(
        states == vec![vec![0, 1, 2, 3], vec![0, 1, 3, 4], vec![0, 2, 4, 5], vec![1, 2, 5, 6]]
            && a == vec![vec![2], vec![2, 1], vec![2, 0]],
    )
}

/// The Q-step from `(3,7,0,6,2,8)` with positions `{0,2,6,7}` excited.
pub fn q_step_example_matches() -> Result<bool> {
    let mut w = Word::new(vec![1, 0, 1, 0, 0, 0, 1, 1, 0, 0, 0], 2)?;
    Ok(q_step(&[3, 7, 0, 6, 2, 8], &mut w, 1)? == vec![3, 9, 1, 7, 4, 8])
}

fn props(report: &mut SuiteReport, opts: &VerifyOptions) -> Result<()> {
    report.param("oracle", "1000 instances, k<=4, d<=3, L<=12");
    report.param("lockstep", "k=3 d=4 steps=100000");
    report.param("p0", "k=3 L=30 samples=100000");
    let (wait_bad, lnds_bad) = particle_oracle_mismatches(opts.seed, 1000)?;
    report.rows.push(CheckRow::exact(
        "particle positions = definitional waiting times (1000 instances)",
        wait_bad == 0,
        format!("{wait_bad} mismatches"),
        "0 mismatches",
    ));
    report.rows.push(CheckRow::exact(
        "restricted LNDS of A-concatenation = P_i - i (1000 instances)",
        lnds_bad == 0,
        format!("{lnds_bad} mismatches"),
        "0 mismatches",
    ));
    let ex1 = three_step_example_matches()?;
    report.rows.push(CheckRow::exact(
        "worked example: states and A-sets",
        ex1,
        ex1.to_string(),
        "true",
    ));
    let ex2 = q_step_example_matches()?;
    report
        .rows
        .push(CheckRow::exact("worked example: Q-step", ex2, ex2.to_string(), "true"));
    let bad = q_lockstep_mismatches(opts.seed, 3, 4, 100_000)?;
    report.rows.push(CheckRow::exact(
        "sorted Q = P over 100000 random steps",
        bad == 0,
        format!("{bad} mismatches"),
        "0 mismatches",
    ));
    let r = estimate_drift(3, 1, 30, &opts.sampling(100_000))?;
    let (m, se) = (extra(&r, "p0_mean"), extra(&r, "p0_stderr"));
    report.rows.push(CheckRow::exact(
        "E[P_0(L)] = L/k at k=3, L=30",
        (m - 10.0).abs() <= 4.0 * se,
        band(m, se),
        "10 within 4 stderr",
    ));
    Ok(())
}
