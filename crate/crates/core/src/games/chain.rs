//! The reduced chain on `(|S|, in/out)` that dominates the count of turns
//! with an empty candidate set, its stationary law and marked-transition
//! probability, and an exact check of the adversary's optimal policy.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::{rat, Scalar};
use crate::error::{invalid, Error, Result};
use crate::rng::{Generator, Lane, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Out,
    In,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ChainState {
    pub s: u32,
    pub side: Side,
}

impl ChainState {
    pub fn new(s: u32, side: Side) -> Self {
        Self { s, side }
    }
}

/// States `(0,out), (1,out), ..., (k-1,out), (1,in), ..., (k,in)`.
pub fn chain_states(k: u32) -> Vec<ChainState> {
    (0..k)
        .map(|s| ChainState::new(s, Side::Out))
        .chain((1..=k).map(|s| ChainState::new(s, Side::In)))
        .collect()
}

/// A finite chain with some transition mass marked. `star[i][j] <= rows[i][j]`
/// is the marked part of the move `i -> j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub states: Vec<ChainState>,
    pub rows: Vec<Vec<f64>>,
    pub star: Vec<Vec<f64>>,
}

impl ChainSpec {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, state: ChainState) -> Option<usize> {
        self.states.iter().position(|&s| s == state)
    }

    /// Total marked mass leaving state `i`.
    pub fn star_mass(&self, i: usize) -> f64 {
        self.star[i].iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.states.len();
        if n == 0 {
            return invalid("chain has no states");
        }
        if self.rows.len() != n || self.star.len() != n {
            return invalid("matrix shape does not match the state list");
        }
        for (i, (row, star)) in self.rows.iter().zip(&self.star).enumerate() {
            if row.len() != n || star.len() != n {
                return invalid(format!("row {i} has the wrong length"));
            }
            if row.iter().any(|&p| !(p >= 0.0)) {
                return invalid(format!("row {i} has a negative or NaN entry"));
            }
            if star.iter().zip(row).any(|(&s, &p)| !(s >= 0.0) || s > p + 1e-15) {
                return invalid(format!("row {i} marks more mass than it has"));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return invalid(format!("row {i} sums to {sum}"));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("chain serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ChainSpec = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }
}

/// The chain with exact rational entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactChain {
    pub k: u32,
    pub states: Vec<ChainState>,
    pub rows: Vec<Vec<BigRational>>,
    pub star: Vec<Vec<BigRational>>,
}

impl ExactChain {
    pub fn index_of(&self, state: ChainState) -> usize {
        self.states
            .iter()
            .position(|&s| s == state)
            .expect("state of this chain")
    }

    pub fn to_spec(&self) -> ChainSpec {
        let conv = |m: &Vec<Vec<BigRational>>| m.iter().map(|r| r.iter().map(Scalar::to_f64).collect()).collect();
        ChainSpec {
            states: self.states.clone(),
            rows: conv(&self.rows),
            star: conv(&self.star),
        }
    }

    pub fn star_mass(&self, i: usize) -> BigRational {
        self.star[i].iter().fold(BigRational::zero(), |a, b| a + b)
    }
}

pub fn trivial_chain_exact(k: u32) -> Result<ExactChain> {
    if k < 2 {
        return invalid(format!("need k >= 2, got {k}"));
    }
    let states = chain_states(k);
    let n = states.len();
    let idx = |s: u32, side: Side| states.iter().position(|&x| x == ChainState::new(s, side)).unwrap();
    let mut rows = vec![vec![BigRational::zero(); n]; n];
    let mut star = vec![vec![BigRational::zero(); n]; n];
    let kk = u64::from(k);
    let top = idx(k, Side::In);
    let empty = idx(0, Side::Out);
    for (i, st) in states.iter().enumerate() {
        let s = u64::from(st.s);
        let mut add = |j: usize, p: BigRational, marked: bool| {
            if marked {
                star[i][j] += &p;
            }
            rows[i][j] += p;
        };
        match (st.s, st.side) {
            (0, _) => {
                add(top, rat(1, kk), true);
                add(empty, rat(kk - 1, kk), true);
            }
            (_, Side::Out) => {
                add(idx(st.s, Side::In), rat(1, kk), false);
                add(top, rat(1, kk), false);
                add(i, rat(kk - 2, kk), false);
            }
            (_, Side::In) => {
                add(top, rat(1, kk * s), true);
                add(empty, rat(kk - 1, kk * s), true);
                if s > 1 {
                    let keep = rat(s - 1, s);
                    add(idx(st.s - 1, Side::In), &keep * rat(1, kk), false);
                    add(top, &keep * rat(1, kk), false);
                    add(idx(st.s - 1, Side::Out), &keep * rat(kk - 2, kk), false);
                }
            }
        }
    }
    Ok(ExactChain { k, states, rows, star })
}

pub fn trivial_chain_spec(k: u32) -> Result<ChainSpec> {
    Ok(trivial_chain_exact(k)?.to_spec())
}

/// Stationary law in closed form, in the order of [`chain_states`]:
/// `(s,in) ∝ s 2^(s-1)`, `(s,out) ∝ s 2^(s-1) (k-2)`, `(0,out) ∝ (2^k - 1)(k - 1)`,
/// normalized by `k^2 2^(k-1)`.
pub fn closed_form_stationary(k: u32) -> Vec<BigRational> {
    use num_bigint::BigInt;
    let pow = |e: u32| BigInt::one() << e;
    let kb = BigInt::from(k);
    let norm = &kb * &kb * pow(k - 1);
    chain_states(k)
        .into_iter()
        .map(|st| {
            let s = BigInt::from(st.s);
            let num = match (st.s, st.side) {
                (0, _) => (pow(k) - 1u32) * (&kb - 1u32),
                (_, Side::In) => &s * pow(st.s - 1),
                (_, Side::Out) => &s * pow(st.s - 1) * (&kb - 2u32),
            };
            BigRational::new(num, norm.clone())
        })
        .collect()
}

/// `(2^k - 1) / (k 2^(k-1))`.
pub fn star_probability(k: u32) -> BigRational {
    use num_bigint::BigInt;
    BigRational::new((BigInt::one() << k) - 1u32, BigInt::from(k) << (k - 1))
}

/// `Σ π(x) · (marked mass out of x)` with the closed-form `π`.
pub fn star_probability_from_chain(k: u32) -> Result<BigRational> {
    let chain = trivial_chain_exact(k)?;
    let pi = closed_form_stationary(k);
    Ok(pi
        .iter()
        .enumerate()
        .fold(BigRational::zero(), |acc, (i, p)| acc + p * chain.star_mass(i)))
}

/// Exact `πP - π` for a rational vector.
pub fn exact_stationarity_defect(chain: &ExactChain, pi: &[BigRational]) -> Vec<BigRational> {
    let n = chain.states.len();
    (0..n)
        .map(|j| {
            let flow = (0..n).fold(BigRational::zero(), |acc, i| acc + &pi[i] * &chain.rows[i][j]);
            flow - &pi[j]
        })
        .collect()
}

fn successors(spec: &ChainSpec) -> Vec<Vec<usize>> {
    spec.rows
        .iter()
        .map(|r| r.iter().enumerate().filter(|(_, &p)| p > 0.0).map(|(j, _)| j).collect())
        .collect()
}

fn reachable(succ: &[Vec<usize>], from: usize) -> Vec<bool> {
    let mut seen = vec![false; succ.len()];
    let mut queue = VecDeque::from([from]);
    seen[from] = true;
    while let Some(u) = queue.pop_front() {
        for &v in &succ[u] {
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    seen
}

/// The states of the unique closed class, if there is one and it is
/// aperiodic. States outside it are transient.
pub fn recurrent_class(spec: &ChainSpec) -> Result<Vec<usize>> {
    let succ = successors(spec);
    let n = succ.len();
    let reach: Vec<Vec<bool>> = (0..n).map(|i| reachable(&succ, i)).collect();
    let recurrent: Vec<usize> = (0..n)
        .filter(|&i| (0..n).all(|j| !reach[i][j] || reach[j][i]))
        .collect();
    let root = recurrent[0];
    if recurrent.iter().any(|&j| !reach[root][j]) {
        return Err(Error::NotErgodic("more than one closed class".into()));
    }
    // Period: gcd of level[u] + 1 - level[v] over edges inside the class.
    let mut level = vec![usize::MAX; n];
    level[root] = 0;
    let mut queue = VecDeque::from([root]);
    let mut period = 0usize;
    while let Some(u) = queue.pop_front() {
        for &v in &succ[u] {
            if level[v] == usize::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            } else {
                period = period.gcd(&(level[u] + 1).abs_diff(level[v]));
            }
        }
    }
    if period != 1 {
        return Err(Error::NotErgodic(format!("closed class has period {period}")));
    }
    Ok(recurrent)
}

/// `max_j |(πP)_j - π_j|`.
pub fn stationary_residual(spec: &ChainSpec, pi: &[f64]) -> f64 {
    let n = spec.len();
    (0..n)
        .map(|j| {
            let flow: f64 = (0..n).map(|i| pi[i] * spec.rows[i][j]).sum();
            (flow - pi[j]).abs()
        })
        .fold(0.0, f64::max)
}

/// Solves `πP = π`, `Σπ = 1` by LU, then polishes with power steps.
pub fn stationary_distribution(spec: &ChainSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    recurrent_class(spec)?;
    let n = spec.len();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a[(j, i)] = spec.rows[i][j];
        }
        a[(i, i)] -= 1.0;
    }
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    let x = a.lu().solve(&b).ok_or(Error::NonConvergence {
        residual: f64::INFINITY,
    })?;
    let mut pi: Vec<f64> = x.iter().map(|&v| v.max(0.0)).collect();
    let mut residual = stationary_residual(spec, &pi);
    for _ in 0..1000 {
        if residual < 1e-15 {
            break;
        }
        let next: Vec<f64> = (0..n).map(|j| (0..n).map(|i| pi[i] * spec.rows[i][j]).sum()).collect();
        let total: f64 = next.iter().sum();
        pi = next.into_iter().map(|v| v / total).collect();
        let r = stationary_residual(spec, &pi);
        if r >= residual {
            residual = r;
            break;
        }
        residual = r;
    }
    if residual > 1e-12 {
        return Err(Error::NonConvergence { residual });
    }
    Ok(pi)
}

/// One run of `L` transitions; returns the number of marked transitions.
pub fn bbar_sample(spec: &ChainSpec, start: usize, l: usize, g: &mut Generator) -> u64 {
    let mut state = start;
    let mut marked = 0;
    for _ in 0..l {
        let u = g.unit();
        let mut acc = 0.0;
        let row = &spec.rows[state];
        let mut next = None;
        for (j, &p) in row.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let star = spec.star[state][j];
            if u < acc + star {
                next = Some((j, true));
                break;
            }
            if u < acc + p {
                next = Some((j, false));
                break;
            }
            acc += p;
        }
        // Rounding can leave u just above the last cumulative sum.
        let (j, is_star) = next.unwrap_or_else(|| {
            let j = row.iter().rposition(|&p| p > 0.0).expect("non-empty row");
            (j, spec.star[state][j] >= row[j])
        });
        marked += u64::from(is_star);
        state = j;
    }
    marked
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub k: u32,
    pub l: usize,
    pub threshold: f64,
    pub samples: u64,
    pub hits: u64,
    pub frequency: f64,
    pub stderr: f64,
    pub mean_bbar: f64,
    /// `min(1, 2L e^(-p √(2L/k)))`.
    pub bound: f64,
}

/// `min(1, 2L e^(-p √(2L/k)))`.
pub fn bbar_tail_bound(k: u32, l: usize) -> f64 {
    let p = Scalar::to_f64(&star_probability(k));
    let l = l as f64;
    (2.0 * l * (-p * (2.0 * l / f64::from(k)).sqrt()).exp()).min(1.0)
}

/// Frequency of `B̄ >= 3pL` over runs started at `(k,in)`; sample `i` uses
/// stream `rng.advanced(i)`.
pub fn chain_bbar_tail(k: u32, l: usize, samples: u64, rng: &RngStream) -> Result<TailEstimate> {
    if samples == 0 {
        return invalid("need at least one sample");
    }
    let spec = trivial_chain_spec(k)?;
    let start = spec.index_of(ChainState::new(k, Side::In)).expect("top state");
    let p = Scalar::to_f64(&star_probability(k));
    let threshold = 3.0 * p * l as f64;
    let mut hits = 0u64;
    let mut total = 0u64;
    for i in 0..samples {
        let mut g = rng.advanced(i).generator(Lane::Fortune);
        let b = bbar_sample(&spec, start, l, &mut g);
        total += b;
        hits += u64::from(b as f64 >= threshold);
    }
    let frequency = hits as f64 / samples as f64;
    Ok(TailEstimate {
        k,
        l,
        threshold,
        samples,
        hits,
        frequency,
        stderr: (frequency * (1.0 - frequency) / samples as f64).sqrt(),
        mean_bbar: total as f64 / samples as f64,
        bound: bbar_tail_bound(k, l),
    })
}

/// Exact law of `B̄` after `T` transitions from `start`: entry `c` is
/// `Pr[B̄ = c]`.
pub fn bbar_distribution(chain: &ExactChain, start: ChainState, t: usize) -> Vec<BigRational> {
    let n = chain.states.len();
    let mut dist = vec![vec![BigRational::zero(); t + 1]; n];
    dist[chain.index_of(start)][0] = BigRational::one();
    for _ in 0..t {
        let mut next = vec![vec![BigRational::zero(); t + 1]; n];
        for i in 0..n {
            for c in 0..=t {
                if dist[i][c].is_zero() {
                    continue;
                }
                for j in 0..n {
                    let star = &chain.star[i][j];
                    let plain = &chain.rows[i][j] - star;
                    if !star.is_zero() {
                        next[j][c + 1] += &dist[i][c] * star;
                    }
                    if !plain.is_zero() {
                        next[j][c] += &dist[i][c] * plain;
                    }
                }
            }
        }
        dist = next;
    }
    (0..=t)
        .map(|c| (0..n).fold(BigRational::zero(), |acc, i| acc + &dist[i][c]))
        .collect()
}

/// `Pr[B̄ >= threshold]` for the chain itself.
pub fn chain_tail_exact(k: u32, t: usize, threshold: usize) -> Result<BigRational> {
    let chain = trivial_chain_exact(k)?;
    let dist = bbar_distribution(&chain, ChainState::new(k, Side::In), t);
    Ok(dist.iter().skip(threshold).fold(BigRational::zero(), |a, b| a + b))
}

/// Best achievable `Pr[B̄ >= threshold]` over `T` turns from `(k,in)` when
/// the adversary, after each move of the lower particle, may put the lower
/// symbol inside or outside the candidate set or jump above the upper
/// particle (which refills the set). Exact backward induction.
pub fn trivial_game_optimal_tail(k: u32, t: usize, threshold: usize) -> Result<BigRational> {
    if k < 2 {
        return invalid(format!("need k >= 2, got {k}"));
    }
    let states = chain_states(k);
    let n = states.len();
    let idx = |s: u32, side: Side| states.iter().position(|&x| x == ChainState::new(s, side)).unwrap();
    let kk = u64::from(k);
    // value[i][c]: best probability with the current number of turns left.
    let mut value: Vec<Vec<BigRational>> = (0..n)
        .map(|_| {
            (0..=t)
                .map(|c| {
                    if c >= threshold {
                        BigRational::one()
                    } else {
                        BigRational::zero()
                    }
                })
                .collect()
        })
        .collect();
    for rem in 1..=t {
        let prev = value.clone();
        for (i, st) in states.iter().enumerate() {
            for c in 0..=t - rem {
                // First phase: the lower symbol is examined against the set.
                let after_first: Vec<(BigRational, u32, Side)> = match st.side {
                    Side::In => {
                        let s = u64::from(st.s);
                        let mut v = vec![(rat(1, s), 0, Side::Out)];
                        if st.s > 1 {
                            v.push((rat(s - 1, s), st.s - 1, Side::Out));
                        }
                        v
                    }
                    Side::Out => vec![(BigRational::one(), st.s, Side::Out)],
                };
                let mut total = BigRational::zero();
                for (p, s, side) in after_first {
                    let here = idx(s, side);
                    let top = idx(k, Side::In);
                    let v = if s == 0 {
                        rat(1, kk) * &prev[top][c + 1] + rat(kk - 1, kk) * &prev[here][c + 1]
                    } else {
                        let mut options = vec![idx(s, Side::In), top];
                        if s < k {
                            options.push(idx(s, Side::Out));
                        }
                        let best = options.iter().map(|&o| prev[o][c].clone()).max().expect("options");
                        rat(1, kk) * best + rat(1, kk) * &prev[top][c] + rat(kk - 2, kk) * &prev[here][c]
                    };
                    total += p * v;
                }
                value[i][c] = total;
            }
        }
    }
    Ok(value[idx(k, Side::In)][0].clone())
}

/// A threshold at which some adversary policy beats the chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyGap {
    pub k: u32,
    pub turns: usize,
    pub threshold: usize,
    pub chain: String,
    pub optimal: String,
}

/// Compares the chain's tail with the optimal adversary's for all
/// `2 <= k <= max_k`, `T <= max_t` and every threshold; returns the gaps.
pub fn trivial_game_policy_gaps(max_k: u32, max_t: usize) -> Result<Vec<PolicyGap>> {
    let mut gaps = Vec::new();
    for k in 2..=max_k {
        let chain = trivial_chain_exact(k)?;
        for t in 0..=max_t {
            let dist = bbar_distribution(&chain, ChainState::new(k, Side::In), t);
            for threshold in 0..=t + 1 {
                let tail = dist.iter().skip(threshold).fold(BigRational::zero(), |a, b| a + b);
                let best = trivial_game_optimal_tail(k, t, threshold)?;
                if best != tail {
                    gaps.push(PolicyGap {
                        k,
                        turns: t,
                        threshold,
                        chain: tail.to_string(),
                        optimal: best.to_string(),
                    });
                }
            }
        }
    }
    Ok(gaps)
}
