//! Bumping particle dynamics for waiting times, expectant partitions, and the
//! jumping (non-bumping) variant used to count symbol coincidences.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::{Generator, Lane, RngStream};
use crate::words::{LazyWord, SymbolSource, Word};

/// Positions `P_0 < P_1 < ... < P_d`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParticleState {
    positions: Vec<usize>,
}

impl ParticleState {
    /// `P_i = i`.
    pub fn initial(d: usize) -> Self {
        Self {
            positions: (0..=d).collect(),
        }
    }

    pub fn from_positions(positions: Vec<usize>) -> Result<Self> {
        if positions.is_empty() {
            return invalid("a state needs at least one particle");
        }
        if positions.windows(2).any(|p| p[0] >= p[1]) {
            return invalid(format!("positions not strictly increasing: {positions:?}"));
        }
        Ok(Self { positions })
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn d(&self) -> usize {
        self.positions.len() - 1
    }

    pub fn get(&self, i: usize) -> usize {
        self.positions[i]
    }

    /// `P_d - P_0`.
    pub fn spread(&self) -> usize {
        self.positions[self.d()] - self.positions[0]
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.positions.windows(2).all(|p| p[0] < p[1])
    }
}

fn read<S: SymbolSource>(w: &mut S, pos: usize) -> Result<u32> {
    w.symbol(pos).ok_or(Error::Exhausted { consumed: pos })
}

/// One step of the update. Returns the new state and `A`, sorted descending.
pub fn evolve_step<S: SymbolSource>(
    state: &ParticleState,
    w: &mut S,
    symbol: u32,
) -> Result<(ParticleState, Vec<usize>)> {
    let mut positions = state.positions.clone();
    let mut a = Vec::new();
    let mut under = Vec::with_capacity(positions.len());
    for &p in &positions {
        under.push(read(w, p)?);
    }
    for i in (0..positions.len()).rev() {
        if under[i] == symbol {
            a.push(i);
        }
    }
    apply_rule(&mut positions, &under, symbol);
    Ok((ParticleState { positions }, a))
}

#[inline]
fn apply_rule(positions: &mut [usize], under: &[u32], symbol: u32) {
    // `prev` is P_{i-1} after the update; None plays the role of minus infinity.
    let mut prev: Option<usize> = None;
    for (p, &s) in positions.iter_mut().zip(under) {
        if s == symbol {
            *p += 1;
        } else if let Some(q) = prev {
            *p = (*p).max(q + 1);
        }
        prev = Some(*p);
    }
}

#[inline]
fn has_coincidence(under: &[u32]) -> bool {
    under.iter().enumerate().any(|(i, s)| under[i + 1..].contains(s))
}

/// Groups particle indices by the symbol beneath them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectantPartition {
    pub k: u32,
    pub parts: BTreeMap<u32, Vec<usize>>,
}

impl ExpectantPartition {
    pub fn is_trivial(&self) -> bool {
        self.parts.values().all(|p| p.len() == 1)
    }

    pub fn part_count(&self) -> usize {
        self.parts.len()
    }

    /// Parts ordered by their smallest member.
    pub fn sorted_parts(&self) -> Vec<Vec<usize>> {
        let mut parts: Vec<Vec<usize>> = self.parts.values().cloned().collect();
        parts.sort();
        parts
    }
}

pub fn expectant_partition<S: SymbolSource>(state: &ParticleState, w: &mut S) -> Result<ExpectantPartition> {
    let mut parts: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, &p) in state.positions.iter().enumerate() {
        parts.entry(read(w, p)?).or_default().push(i);
    }
    Ok(ExpectantPartition {
        k: w.alphabet_size(),
        parts,
    })
}

/// Moves every excited particle (one standing on `symbol`) to the nearest
/// vacant position on its right, rightmost excited particle first.
pub fn q_step<S: SymbolSource>(q: &[usize], w: &mut S, symbol: u32) -> Result<Vec<usize>> {
    let mut excited = Vec::new();
    for (i, &p) in q.iter().enumerate() {
        if read(w, p)? == symbol {
            excited.push(i);
        }
    }
    let mut next = q.to_vec();
    q_move(&mut next, &mut excited);
    Ok(next)
}

fn q_move(q: &mut [usize], excited: &mut [usize]) {
    if excited.is_empty() {
        return;
    }
    excited.sort_unstable_by(|&a, &b| q[b].cmp(&q[a]));
    let mut occupied: BTreeSet<usize> = q.iter().copied().collect();
    for &i in excited.iter() {
        occupied.remove(&q[i]);
        let mut target = q[i] + 1;
        while occupied.contains(&target) {
            target += 1;
        }
        occupied.insert(target);
        q[i] = target;
    }
}

/// Everything observed during one step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    /// `w'[step]`.
    pub symbol: u32,
    /// `A[step]`, descending.
    pub a: Vec<usize>,
    /// The expectant partition before the step has a part of size two or more.
    pub nontrivial: bool,
    pub before: Vec<usize>,
    pub after: Vec<usize>,
    /// `w[P_i]` before the step.
    pub under: Vec<u32>,
    /// Jumping-particle positions before the step, when tracked.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<usize>>,
}

/// Incremental driver: owns the word `w` and the current state.
#[derive(Debug, Clone)]
pub struct Dynamics<S> {
    w: S,
    positions: Vec<usize>,
    q: Option<Vec<usize>>,
    steps: usize,
    nontrivial_steps: usize,
    under: Vec<u32>,
}

impl<S: SymbolSource> Dynamics<S> {
    pub fn new(w: S, d: usize) -> Self {
        Self {
            w,
            positions: (0..=d).collect(),
            q: None,
            steps: 0,
            nontrivial_steps: 0,
            under: vec![0; d + 1],
        }
    }

    /// Also run the jumping particles in lockstep.
    pub fn with_q(mut self) -> Self {
        self.q = Some(self.positions.clone());
        self
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn state(&self) -> ParticleState {
        ParticleState {
            positions: self.positions.clone(),
        }
    }

    pub fn q_positions(&self) -> Option<&[usize]> {
        self.q.as_deref()
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// `|B|` so far.
    pub fn nontrivial_steps(&self) -> usize {
        self.nontrivial_steps
    }

    pub fn word_mut(&mut self) -> &mut S {
        &mut self.w
    }

    fn load_under(&mut self) -> Result<()> {
        for (u, &p) in self.under.iter_mut().zip(&self.positions) {
            *u = self.w.symbol(p).ok_or(Error::Exhausted { consumed: p })?;
        }
        Ok(())
    }

    /// Advances by one symbol of `w'`; returns whether the partition before
    /// the step was non-trivial.
    pub fn step(&mut self, symbol: u32) -> Result<bool> {
        self.load_under()?;
        let nontrivial = has_coincidence(&self.under);
        if let Some(q) = self.q.as_mut() {
            let mut excited: Vec<usize> = (0..q.len())
                .filter(|&i| {
                    let p = self.positions.binary_search(&q[i]).expect("Q is a permutation of P");
                    self.under[p] == symbol
                })
                .collect();
            q_move(q, &mut excited);
        }
        apply_rule(&mut self.positions, &self.under, symbol);
        self.steps += 1;
        self.nontrivial_steps += usize::from(nontrivial);
        Ok(nontrivial)
    }

    pub fn step_recorded(&mut self, symbol: u32) -> Result<StepRecord> {
        let before = self.positions.clone();
        let q = self.q.clone();
        let step = self.steps;
        let nontrivial = self.step(symbol)?;
        let under = self.under.clone();
        let a = (0..under.len()).rev().filter(|&i| under[i] == symbol).collect();
        Ok(StepRecord {
            step,
            symbol,
            a,
            nontrivial,
            before,
            after: self.positions.clone(),
            under,
            q,
        })
    }
}

/// A full run of `L` steps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    pub k: u32,
    pub d: usize,
    pub steps: Vec<StepRecord>,
    pub final_state: ParticleState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_q: Option<Vec<usize>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// `|B|`.
    pub fn nontrivial_count(&self) -> usize {
        self.steps.iter().filter(|s| s.nontrivial).count()
    }

    /// `A[0] A[1] ... A[L-1]` with each set written in descending order.
    pub fn a_concatenation(&self) -> Vec<u32> {
        self.steps.iter().flat_map(|s| s.a.iter().map(|&i| i as u32)).collect()
    }

    /// States `P(0), ..., P(L)`.
    pub fn states(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = self.steps.iter().map(|s| s.before.clone()).collect();
        out.push(self.final_state.positions.clone());
        out
    }

    /// One JSON object per step, newline separated.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for step in &self.steps {
            serde_json::to_writer(&mut out, step)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("JSON is UTF-8")
    }

    pub fn read_jsonl(text: &str) -> Result<Vec<StepRecord>> {
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(|e| Error::Parse(e.to_string())))
            .collect()
    }
}

fn drive<S: SymbolSource>(
    mut dynamics: Dynamics<S>,
    k: u32,
    d: usize,
    symbols: impl Iterator<Item = u32>,
) -> Result<Trajectory> {
    let steps = symbols.map(|s| dynamics.step_recorded(s)).collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        k,
        d,
        steps,
        final_state: dynamics.state(),
        final_q: dynamics.q.clone(),
    })
}

/// Runs `L` steps on lazily sampled `w` and `w'`, tracking jumping particles.
pub fn run_dynamics(k: u32, d: usize, l: usize, rng: &RngStream) -> Result<Trajectory> {
    if k < 2 {
        return invalid(format!("need k >= 2, got {k}"));
    }
    let w = LazyWord::new(k, rng, Lane::Word)?;
    let mut wp = rng.generator(Lane::WordPrime);
    drive(Dynamics::new(w, d).with_q(), k, d, (0..l).map(|_| wp.symbol(k)))
}

/// Runs one step per symbol of `w_prime` over the finite word `w`.
pub fn run_dynamics_on(w: &Word, w_prime: &[u32], d: usize) -> Result<Trajectory> {
    let k = w.alphabet_size();
    if let Some(&bad) = w_prime.iter().find(|&&s| s >= k) {
        return Err(Error::SymbolOutOfRange { symbol: bad, k });
    }
    drive(Dynamics::new(w.clone(), d).with_q(), k, d, w_prime.iter().copied())
}

/// Final state after `L` steps, without recording anything.
pub fn final_state(k: u32, d: usize, l: usize, rng: &RngStream) -> Result<ParticleState> {
    let mut dynamics = random_dynamics(k, d, rng)?;
    let mut wp = rng.generator(Lane::WordPrime);
    for _ in 0..l {
        dynamics.step(wp.symbol(k))?;
    }
    Ok(dynamics.state())
}

/// `|B|` after `L` steps, without recording anything.
pub fn nontrivial_count(k: u32, d: usize, l: usize, rng: &RngStream) -> Result<usize> {
    let mut dynamics = random_dynamics(k, d, rng)?;
    let mut wp = rng.generator(Lane::WordPrime);
    for _ in 0..l {
        dynamics.step(wp.symbol(k))?;
    }
    Ok(dynamics.nontrivial_steps())
}

fn random_dynamics(k: u32, d: usize, rng: &RngStream) -> Result<Dynamics<LazyWord>> {
    if k < 2 {
        return invalid(format!("need k >= 2, got {k}"));
    }
    Ok(Dynamics::new(LazyWord::new(k, rng, Lane::Word)?, d))
}

/// The symbol stream of `w'` used by [`run_dynamics`] for this `rng`.
pub fn w_prime_generator(rng: &RngStream) -> Generator {
    rng.generator(Lane::WordPrime)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCount {
    pub i: usize,
    pub j: usize,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrivialityStats {
    pub steps: usize,
    /// `|B|`.
    pub nontrivial: usize,
    /// `|B_ij|` for `i < j`, indexed by jumping particle.
    pub pairs: Vec<PairCount>,
}

impl TrivialityStats {
    pub fn pair(&self, i: usize, j: usize) -> Option<usize> {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        self.pairs.iter().find(|p| p.i == i && p.j == j).map(|p| p.count)
    }
}

/// Counts non-trivial steps and, per pair of jumping particles, the steps
/// where both stand on the same symbol. Errors if the trajectory did not
/// track jumping particles or if the two notions disagree on some step.
pub fn triviality_stats(trajectory: &Trajectory) -> Result<TrivialityStats> {
    let n = trajectory.d + 1;
    let mut counts = vec![0usize; n * n];
    let mut nontrivial = 0;
    for step in &trajectory.steps {
        let Some(q) = &step.q else {
            return invalid("trajectory has no jumping-particle positions");
        };
        let q_under =
            q.iter()
                .map(|p| {
                    step.before.binary_search(p).map(|idx| step.under[idx]).map_err(|_| {
                        Error::InvalidParameter(format!("step {}: Q is not a permutation of P", step.step))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
        let mut any = false;
        for i in 0..n {
            for j in i + 1..n {
                if q_under[i] == q_under[j] {
                    counts[i * n + j] += 1;
                    any = true;
                }
            }
        }
        if any != step.nontrivial {
            return invalid(format!(
                "step {}: pair coincidences disagree with the partition flag",
                step.step
            ));
        }
        nontrivial += usize::from(step.nontrivial);
    }
    let pairs = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| PairCount {
            i,
            j,
            count: counts[i * n + j],
        })
        .collect();
    Ok(TrivialityStats {
        steps: trajectory.len(),
        nontrivial,
        pairs,
    })
}
