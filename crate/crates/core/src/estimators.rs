//! Monte Carlo estimators. Sample `i` draws all of its randomness from
//! `RngStream::new(seed, i)`.

use std::collections::BTreeMap;
use std::time::Instant;

use serde_json::Value;

use crate::error::{invalid, Result};
use crate::games::chain::{bbar_sample, bbar_tail_bound, trivial_chain_spec, ChainState, Side};
use crate::games::two::{two_game_lower_bound, two_game_simulate, FRule};
use crate::games::{star_probability, Scalar};
use crate::montecarlo::{accumulate, EstimateReport, Welford};
use crate::particles::{final_state, nontrivial_count};
use crate::rng::{BinomialSampler, Lane, RngStream};
use crate::seqalgs::{lcs_length, lnds};
use crate::words::{sample_word_in_lane, waiting_time, LazyWord, Suffix};

/// Sample count, master seed and worker count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sampling {
    pub samples: u64,
    pub seed: u64,
    pub threads: usize,
}

impl Sampling {
    pub fn new(samples: u64, seed: u64, threads: usize) -> Self {
        Self { samples, seed, threads }
    }

    fn check(&self) -> Result<()> {
        if self.samples == 0 {
            return invalid("need at least one sample");
        }
        Ok(())
    }

    fn stream(&self, i: u64) -> RngStream {
        RngStream::new(self.seed, i)
    }
}

fn params(pairs: &[(&str, Value)]) -> BTreeMap<String, Value> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn need_k(k: u32, min: u32) -> Result<()> {
    if k < min {
        return invalid(format!("need k >= {min}, got {k}"));
    }
    Ok(())
}

fn finish(mut report: EstimateReport, start: Instant) -> EstimateReport {
    report.wall_time_secs = start.elapsed().as_secs_f64();
    report
}

/// Published bracket for the two-letter constant.
pub const TWO_LETTER_LOWER: f64 = 0.788071;
pub const TWO_LETTER_UPPER: f64 = 0.826280;

/// Mean of `LCS(w, w') / n` for independent `w, w' ~ [k]^n`.
pub fn estimate_gamma(k: u32, n: usize, s: &Sampling) -> Result<EstimateReport> {
    need_k(k, 2)?;
    s.check()?;
    if n == 0 {
        return invalid("need n >= 1");
    }
    let start = Instant::now();
    let stats = accumulate(0..s.samples, 1, s.threads, |i, out| {
        let rng = s.stream(i);
        let w = sample_word_in_lane(k, n, &rng, Lane::Word)?;
        let wp = sample_word_in_lane(k, n, &rng, Lane::WordPrime)?;
        out[0] = lcs_length(&w, &wp) as f64 / n as f64;
        Ok(())
    })?;
    let mut report = EstimateReport::new("gamma", params(&[("k", k.into()), ("n", n.into())]), &stats[0], s.seed);
    if k == 2 {
        report = report
            .with_extra("reference_low", TWO_LETTER_LOWER)
            .with_extra("reference_high", TWO_LETTER_UPPER);
    }
    Ok(finish(report, start))
}

/// `floor((1 - ε) k n)`, tolerant of representation error in `ε`.
pub fn reference_length(k: u32, eps: f64, n: usize) -> usize {
    ((1.0 - eps) * f64::from(k) * n as f64 + 1e-9).floor() as usize
}

/// Mean of `LCS(w, w') / n` for `w ~ [k]^n`, `w' ~ [k]^floor((1-ε)kn)`.
pub fn estimate_gamma_eps(k: u32, eps: f64, n: usize, s: &Sampling) -> Result<EstimateReport> {
    need_k(k, 2)?;
    s.check()?;
    if !(eps > 0.0 && eps < 1.0) {
        return invalid(format!("need 0 < eps < 1, got {eps}"));
    }
    if n == 0 {
        return invalid("need n >= 1");
    }
    let m = reference_length(k, eps, n);
    let start = Instant::now();
    let stats = accumulate(0..s.samples, 1, s.threads, |i, out| {
        let rng = s.stream(i);
        let w = sample_word_in_lane(k, n, &rng, Lane::Word)?;
        let wp = sample_word_in_lane(k, m, &rng, Lane::WordPrime)?;
        out[0] = lcs_length(&w, &wp) as f64 / n as f64;
        Ok(())
    })?;
    let mut report = EstimateReport::new(
        "gamma_eps",
        params(&[("k", k.into()), ("eps", eps.into()), ("n", n.into())]),
        &stats[0],
        s.seed,
    )
    .with_extra("reference_len", m as f64)
    .with_extra("window_low", 1.0 - 8.0 * eps * eps)
    .with_extra("window_high", 1.0 - eps * eps / 72.0)
    .with_extra("floor", 1.0 - eps);
    if m < n {
        report
            .warnings
            .push(format!("reference length {m} is shorter than n = {n}"));
    }
    Ok(finish(report, start))
}

/// Mean of `P_d(L) - P_0(L)`; `P_0(L)` is tracked alongside.
pub fn estimate_drift(k: u32, d: usize, l: usize, s: &Sampling) -> Result<EstimateReport> {
    need_k(k, 2)?;
    s.check()?;
    let start = Instant::now();
    let stats = accumulate(0..s.samples, 2, s.threads, |i, out| {
        let state = final_state(k, d, l, &s.stream(i))?;
        out[0] = state.spread() as f64;
        out[1] = state.get(0) as f64;
        Ok(())
    })?;
    let (kf, lf, df) = (f64::from(k), l as f64, d as f64);
    let asymptotic = 2.0 * (df * lf / kf).sqrt();
    let report = EstimateReport::new(
        "drift",
        params(&[("k", k.into()), ("d", d.into()), ("L", l.into())]),
        &stats[0],
        s.seed,
    )
    .with_extra("p0_mean", stats[1].mean)
    .with_extra("p0_stderr", stats[1].stderr())
    .with_extra("p0_target", lf / kf)
    .with_extra("lower_bound_d1", (lf / (7.0 * kf)).sqrt())
    .with_extra("upper_bound", df * (2.0 * lf / kf).sqrt() + df)
    .with_extra("asymptotic", asymptotic)
    .with_extra(
        "ratio",
        if asymptotic > 0.0 {
            stats[0].mean / asymptotic
        } else {
            f64::NAN
        },
    )
    .with_extra(
        "ratio_stderr",
        if asymptotic > 0.0 {
            stats[0].stderr() / asymptotic
        } else {
            f64::NAN
        },
    );
    Ok(finish(report, start))
}

/// Parameters of the block construction: blocks of `w'` of length `L`, and
/// greedy pieces of one infinite `w` that are `d`-almost contained in them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcatParams {
    pub k: u32,
    pub eps: f64,
    pub d: usize,
    pub alpha: f64,
    pub l0: usize,
    pub n: usize,
}

impl ConcatParams {
    /// `ε < min(1/20, α √(k / 2L_0))`.
    pub fn admissible_eps(&self) -> f64 {
        (1.0 / 20.0_f64).min(self.alpha * (f64::from(self.k) / (2.0 * self.l0 as f64)).sqrt())
    }

    /// `(L, M)` with `L = round((1-2ε)^2 α^2 k / ε^2)` and
    /// `M = floor(floor((1-ε)kn) / L)`.
    pub fn blocks(&self) -> Result<(usize, usize)> {
        if self.k < 2 {
            return invalid(format!("need k >= 2, got {}", self.k));
        }
        if !(self.alpha > 0.0) || self.l0 == 0 {
            return invalid("need alpha > 0 and L0 >= 1");
        }
        let bound = self.admissible_eps();
        if !(self.eps > 0.0 && self.eps < bound) {
            return invalid(format!("eps = {} is outside (0, {bound:.6})", self.eps));
        }
        let e = self.eps;
        let l = ((1.0 - 2.0 * e).powi(2) * self.alpha.powi(2) * f64::from(self.k) / (e * e)).round() as usize;
        let m = reference_length(self.k, e, self.n) / l.max(1);
        if l == 0 || m == 0 {
            return invalid(format!(
                "no complete block: L = {l}, reference length {}",
                reference_length(self.k, e, self.n)
            ));
        }
        Ok((l, m))
    }
}

/// Lengths `Y_1..Y_M` of the greedy pieces for one sample.
pub fn concat_piece_lengths(p: &ConcatParams, l: usize, m: usize, rng: &RngStream) -> Result<Vec<usize>> {
    let mut w = LazyWord::new(p.k, rng, Lane::Word)?;
    let mut wp = rng.generator(Lane::WordPrime);
    let mut block = vec![0u32; l];
    let mut offset = 0;
    let mut lengths = Vec::with_capacity(m);
    for _ in 0..m {
        block.iter_mut().for_each(|b| *b = wp.symbol(p.k));
        let mut rest = Suffix { source: &mut w, offset };
        let y = waiting_time(&mut rest, &block, p.d)?;
        lengths.push(y);
        offset += y;
    }
    Ok(lengths)
}

/// Mean of `Y = Y_1 + ... + Y_M`, with `Pr[Y >= n]` and a check that the
/// variance of `Y` matches the sum of the piece variances.
pub fn estimate_concat_lower(p: &ConcatParams, s: &Sampling) -> Result<EstimateReport> {
    s.check()?;
    let (l, m) = p.blocks()?;
    let batches = s.samples.clamp(1, 20);
    let start = Instant::now();
    let width = 2 + m;
    let mut total = vec![Welford::default(); width];
    let mut gaps = Welford::default();
    for b in 0..batches {
        let range = s.samples * b / batches..s.samples * (b + 1) / batches;
        let stats = accumulate(range, width, s.threads, |i, out| {
            let ys = concat_piece_lengths(p, l, m, &s.stream(i))?;
            let y: usize = ys.iter().sum();
            out[0] = y as f64;
            out[1] = f64::from(u8::from(y >= p.n));
            for (o, &yi) in out[2..].iter_mut().zip(&ys) {
                *o = yi as f64;
            }
            Ok(())
        })?;
        let piece_var: f64 = stats[2..].iter().map(Welford::variance).sum();
        gaps.push(stats[0].variance() - piece_var);
        for (t, x) in total.iter_mut().zip(&stats) {
            t.merge(x);
        }
    }
    let (kf, lf) = (f64::from(p.k), l as f64);
    let piece_var: f64 = total[2..].iter().map(Welford::variance).sum();
    let z = if gaps.stderr() > 0.0 {
        gaps.mean / gaps.stderr()
    } else {
        0.0
    };
    let report = EstimateReport::new(
        "concat_lower",
        params(&[
            ("k", p.k.into()),
            ("eps", p.eps.into()),
            ("d", p.d.into()),
            ("alpha", p.alpha.into()),
            ("L0", p.l0.into()),
            ("n", p.n.into()),
        ]),
        &total[0],
        s.seed,
    )
    .with_extra("L", lf)
    .with_extra("M", m as f64)
    .with_extra("expected_lower", m as f64 * (lf / kf + p.alpha * (lf / kf).sqrt()))
    .with_extra("pr_y_ge_n", total[1].mean)
    .with_extra("pr_y_ge_n_stderr", total[1].stderr())
    .with_extra("lcs_lower_fraction", (p.n as f64 - (p.d * m) as f64) / p.n as f64)
    .with_extra(
        "gamma_lower",
        1.0 - p.d as f64 * p.eps.powi(2) * (1.0 + 4.0 * p.eps) / p.alpha.powi(2),
    )
    .with_extra("var_y", total[0].variance())
    .with_extra("sum_var_pieces", piece_var)
    .with_extra("independence_z", z);
    Ok(finish(report, start))
}

/// Mean LNDS of `w ~ [k]^n`; `k = 1` is allowed.
pub fn estimate_lnds_mean(k: u32, n: usize, s: &Sampling) -> Result<EstimateReport> {
    need_k(k, 1)?;
    s.check()?;
    if n == 0 {
        return invalid("need n >= 1");
    }
    let start = Instant::now();
    let stats = accumulate(0..s.samples, 1, s.threads, |i, out| {
        let w = sample_word_in_lane(k, n, &s.stream(i), Lane::Word)?;
        out[0] = lnds(&w) as f64;
        Ok(())
    })?;
    let scale = 2.0 * (n as f64).sqrt();
    let normalized = (stats[0].mean - n as f64 / f64::from(k)) / scale;
    let report = EstimateReport::new(
        "lnds_mean",
        params(&[("k", k.into()), ("n", n.into())]),
        &stats[0],
        s.seed,
    )
    .with_extra("normalized", normalized)
    .with_extra("normalized_stderr", stats[0].stderr() / scale);
    Ok(finish(report, start))
}

/// Mean LNDS of `w ~ [k]^m` with `m ~ Binom(n, p)`.
pub fn estimate_lnds_binomial(k: u32, n: usize, p: f64, s: &Sampling) -> Result<EstimateReport> {
    need_k(k, 1)?;
    s.check()?;
    let sampler = BinomialSampler::new(n as u64, p)?;
    let start = Instant::now();
    let stats = accumulate(0..s.samples, 2, s.threads, |i, out| {
        let rng = s.stream(i);
        let m = sampler.sample(&mut rng.generator(Lane::Length)) as usize;
        let w = sample_word_in_lane(k, m, &rng, Lane::Word)?;
        out[0] = lnds(&w) as f64;
        out[1] = m as f64;
        Ok(())
    })?;
    let pn = p * n as f64;
    let scale = 2.0 * pn.sqrt();
    let report = EstimateReport::new(
        "lnds_binomial",
        params(&[("k", k.into()), ("n", n.into()), ("p", p.into())]),
        &stats[0],
        s.seed,
    )
    .with_extra("normalized", (stats[0].mean - pn / f64::from(k)) / scale)
    .with_extra("normalized_stderr", stats[0].stderr() / scale)
    .with_extra("length_mean", stats[1].mean)
    .with_extra("length_stderr", stats[1].stderr())
    .with_extra("length_target", pn);
    Ok(finish(report, start))
}

/// `min(1, 4 d^2 L e^(-√L k^(-3/2)))`.
pub fn nontrivial_tail_bound(k: u32, d: usize, l: usize) -> f64 {
    let (kf, lf, df) = (f64::from(k), l as f64, d as f64);
    (4.0 * df * df * lf * (-lf.sqrt() * kf.powf(-1.5)).exp()).min(1.0)
}

/// Frequency of `|B| >= 6 d^2 L / k`.
pub fn estimate_nontrivial_tail(k: u32, d: usize, l: usize, s: &Sampling) -> Result<EstimateReport> {
    need_k(k, 2)?;
    s.check()?;
    let threshold = 6.0 * (d * d) as f64 * l as f64 / f64::from(k);
    let start = Instant::now();
    let stats = accumulate(0..s.samples, 2, s.threads, |i, out| {
        let b = nontrivial_count(k, d, l, &s.stream(i))? as f64;
        out[0] = f64::from(u8::from(b >= threshold));
        out[1] = b;
        Ok(())
    })?;
    let f = stats[0].mean;
    let report = EstimateReport::new(
        "nontrivial_tail",
        params(&[("k", k.into()), ("d", d.into()), ("L", l.into())]),
        &stats[0],
        s.seed,
    )
    .with_extra("threshold", threshold)
    .with_extra("bound", nontrivial_tail_bound(k, d, l))
    .with_extra("binomial_stderr", (f * (1.0 - f) / s.samples as f64).sqrt())
    .with_extra("mean_nontrivial", stats[1].mean);
    Ok(finish(report, start))
}

/// Frequency of `B̄ >= 3pL` for the reduced chain started at `(k,in)`.
pub fn estimate_bbar_tail(k: u32, l: usize, s: &Sampling) -> Result<EstimateReport> {
    s.check()?;
    let spec = trivial_chain_spec(k)?;
    let start_state = spec.index_of(ChainState::new(k, Side::In)).expect("top state");
    let p = star_probability(k).to_f64();
    let threshold = 3.0 * p * l as f64;
    let start = Instant::now();
    let stats = accumulate(0..s.samples, 2, s.threads, |i, out| {
        let b = bbar_sample(&spec, start_state, l, &mut s.stream(i).generator(Lane::Fortune)) as f64;
        out[0] = f64::from(u8::from(b >= threshold));
        out[1] = b;
        Ok(())
    })?;
    let f = stats[0].mean;
    let report = EstimateReport::new(
        "bbar_tail",
        params(&[("k", k.into()), ("L", l.into())]),
        &stats[0],
        s.seed,
    )
    .with_extra("threshold", threshold)
    .with_extra("p", p)
    .with_extra("bound", bbar_tail_bound(k, l))
    .with_extra("binomial_stderr", (f * (1.0 - f) / s.samples as f64).sqrt())
    .with_extra("mean_bbar", stats[1].mean);
    Ok(finish(report, start))
}

/// Mean final gap of the flagged gap game under `rule`.
pub fn estimate_two_game(k: u32, l: usize, rule: FRule, s: &Sampling) -> Result<EstimateReport> {
    need_k(k, 2)?;
    s.check()?;
    let start = Instant::now();
    let stats = accumulate(0..s.samples, 3, s.threads, |i, out| {
        let o = two_game_simulate(k, l, rule, &s.stream(i))?;
        out[0] = o.delta as f64;
        out[1] = o.good_turns as f64;
        out[2] = o.heads as f64;
        Ok(())
    })?;
    let rule_name = serde_json::to_value(rule).expect("rule serializes");
    let report = EstimateReport::new(
        "two_game",
        params(&[("k", k.into()), ("L", l.into()), ("rule", rule_name)]),
        &stats[0],
        s.seed,
    )
    .with_extra("lower_bound", two_game_lower_bound(k, l))
    .with_extra("good_turns_mean", stats[1].mean)
    .with_extra("heads_mean", stats[2].mean);
    Ok(finish(report, start))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqalgs::lcs_length;
    use crate::words::Word;

    fn quick(samples: u64) -> Sampling {
        Sampling::new(samples, 42, 1)
    }

    #[test]
    fn gamma_single_symbol_is_half() {
        let r = estimate_gamma(2, 1, &quick(20_000)).unwrap();
        assert!((r.mean - 0.5).abs() < 4.0 * r.stderr);
        assert!(estimate_gamma(1, 10, &quick(10)).is_err());
        assert!(estimate_gamma(2, 10, &quick(0)).is_err());
    }

    #[test]
    fn gamma_eps_is_at_most_one() {
        let r = estimate_gamma_eps(2, 0.3, 300, &quick(50)).unwrap();
        assert!(r.mean <= 1.0);
        assert_eq!(r.extras["reference_len"], 420.0);
        // 0.7 * 2 * 2000 is 2799.999... in floating point.
        assert_eq!(reference_length(2, 0.3, 2000), 2800);
        assert!(estimate_gamma_eps(2, 1.0, 10, &quick(1)).is_err());
        let short = estimate_gamma_eps(2, 0.6, 50, &quick(2)).unwrap();
        assert_eq!(short.warnings.len(), 1);
    }

    #[test]
    fn drift_report_fields() {
        let r = estimate_drift(3, 2, 30, &quick(3000)).unwrap();
        assert!((r.extras["p0_mean"] - 10.0).abs() < 4.0 * r.extras["p0_stderr"]);
        assert!(r.mean > 0.0 && r.mean <= r.extras["upper_bound"]);
        let none = estimate_drift(3, 0, 30, &quick(10)).unwrap();
        assert_eq!((none.mean, none.variance), (0.0, 0.0));
    }

    #[test]
    fn concat_parameter_gate() {
        let mut p = ConcatParams {
            k: 2,
            eps: 0.018,
            d: 1,
            alpha: 1.0 / 7f64.sqrt(),
            l0: 400,
            n: 4000,
        };
        let (l, m) = p.blocks().unwrap();
        assert_eq!(l, 819);
        assert_eq!(m, reference_length(2, 0.018, 4000) / 819);
        p.eps = 0.02;
        assert!(p.blocks().is_err());
    }

    #[test]
    fn concat_pieces_certify_the_lcs_bound() {
        let p = ConcatParams {
            k: 2,
            eps: 0.045,
            d: 1,
            alpha: 1.0,
            l0: 100,
            n: 600,
        };
        let (l, m) = p.blocks().unwrap();
        for i in 0..30 {
            let rng = RngStream::new(3, i);
            let ys = concat_piece_lengths(&p, l, m, &rng).unwrap();
            let y: usize = ys.iter().sum();
            if y < p.n {
                continue;
            }
            let w = Word::new(lazy_prefix(&rng, p.k, p.n), p.k).unwrap();
            let mut g = rng.generator(Lane::WordPrime);
            let wp: Vec<u32> = (0..l * m).map(|_| g.symbol(p.k)).collect();
            assert!(lcs_length(&w, &wp) >= p.n - p.d * m);
        }
    }

    fn lazy_prefix(rng: &RngStream, k: u32, n: usize) -> Vec<u32> {
        let mut w = LazyWord::new(k, rng, Lane::Word).unwrap();
        (0..n).map(|i| w.get(i)).collect()
    }

    #[test]
    fn lnds_degenerate_cases() {
        let one = estimate_lnds_mean(1, 50, &quick(5)).unwrap();
        assert_eq!((one.mean, one.extras["normalized"]), (50.0, 0.0));
        let single = estimate_lnds_mean(7, 1, &quick(5)).unwrap();
        assert_eq!(single.mean, 1.0);
    }

    #[test]
    fn binomial_lengths_and_p_one() {
        let r = estimate_lnds_binomial(8, 500, 0.3, &quick(3000)).unwrap();
        assert!((r.extras["length_mean"] - 150.0).abs() < 3.0 * r.extras["length_stderr"]);
        let full = estimate_lnds_binomial(8, 500, 1.0, &quick(3000)).unwrap();
        let plain = estimate_lnds_mean(8, 500, &Sampling::new(3000, 43, 1)).unwrap();
        assert_eq!(full.extras["length_stderr"], 0.0);
        let gap = (full.mean - plain.mean).abs();
        assert!(gap < 4.0 * (full.stderr.powi(2) + plain.stderr.powi(2)).sqrt());
    }

    #[test]
    fn thread_count_does_not_change_reports() {
        let a = estimate_drift(2, 1, 100, &Sampling::new(500, 5, 1)).unwrap();
        let b = estimate_drift(2, 1, 100, &Sampling::new(500, 5, 3)).unwrap();
        assert_eq!(a.canonical_json(), b.canonical_json());
    }
}
