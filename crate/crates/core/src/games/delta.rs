//! Backward induction for the gap game: each turn the adversary picks an
//! increment vector in `Z^k`, a uniform coordinate of it is added to the gap,
//! and a gap of 0 or less resets to 1.

use num_rational::BigRational;
use num_traits::Signed;
use serde::Serialize;

use super::{rat, Scalar};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaObjective {
    /// `Δ`.
    Mean,
    /// `(Δ - 1/2)^2`.
    SecondMoment,
}

impl DeltaObjective {
    fn eval<T: Scalar>(self, delta: usize) -> T {
        let d = delta as i64;
        match self {
            DeltaObjective::Mean => T::ratio(d, 1),
            DeltaObjective::SecondMoment => T::ratio((2 * d - 1) * (2 * d - 1), 4),
        }
    }
}

/// An increment vector, up to permutation: `(increment, coordinates)` pairs
/// whose counts sum to `k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct DeltaAction {
    pub outcomes: Vec<(i64, u32)>,
}

impl DeltaAction {
    fn from_vector(v: &[i64]) -> Self {
        let mut sorted = v.to_vec();
        sorted.sort_unstable();
        let mut outcomes: Vec<(i64, u32)> = Vec::new();
        for x in sorted {
            match outcomes.last_mut() {
                Some((y, c)) if *y == x => *c += 1,
                _ => outcomes.push((x, 1)),
            }
        }
        Self { outcomes }
    }
}

/// One representative per distinct multiset of increments: the zero vector,
/// a single `-1`, a `(+1,-1)` pair, `(+1,-2)`, and for `k >= 3` `(+1,-1,-1)`.
pub fn canonical_actions(k: u32) -> Vec<DeltaAction> {
    let k = k as usize;
    let pad = |mut v: Vec<i64>| {
        v.resize(k, 0);
        DeltaAction::from_vector(&v)
    };
    let mut actions = vec![pad(vec![]), pad(vec![-1]), pad(vec![1, -1]), pad(vec![1, -2])];
    if k >= 3 {
        actions.push(pad(vec![1, -1, -1]));
    }
    actions
}

/// Every (pair choice, decrement choice) combination, duplicates included:
/// `(1 + k(k-1)) (k + 1)` actions.
pub fn all_actions(k: u32) -> Vec<DeltaAction> {
    let k = k as usize;
    let mut pairs: Vec<Option<(usize, usize)>> = vec![None];
    for a in 0..k {
        for b in 0..k {
            if a != b {
                pairs.push(Some((a, b)));
            }
        }
    }
    let mut actions = Vec::new();
    for pair in &pairs {
        for dec in (0..=k).map(|c| (c < k).then_some(c)) {
            let mut v = vec![0i64; k];
            if let Some((a, b)) = pair {
                v[*a] += 1;
                v[*b] -= 1;
            }
            if let Some(c) = dec {
                v[c] -= 1;
            }
            actions.push(DeltaAction::from_vector(&v));
        }
    }
    actions
}

/// Optimal values by turns remaining.
#[derive(Debug, Clone)]
pub struct GameValueTable<T> {
    pub k: u32,
    pub horizon: usize,
    pub cap: usize,
    pub objective: DeltaObjective,
    pub actions: Vec<DeltaAction>,
    /// `remaining[s][Δ-1]`: optimal expected objective with `s` turns left.
    remaining: Vec<Vec<T>>,
    /// Index into `actions` of a maximizing action, for `s >= 1`.
    best: Vec<Vec<usize>>,
}

impl<T: Scalar> GameValueTable<T> {
    /// Value from gap 1 at the start of a game of `horizon` turns.
    pub fn value(&self) -> &T {
        &self.remaining[self.horizon][0]
    }

    /// Value from gap 1 for any shorter game `l <= horizon`.
    pub fn value_for_horizon(&self, l: usize) -> &T {
        &self.remaining[l][0]
    }

    /// Value at the start of turn `turn` (0-based) with gap `delta`.
    pub fn value_at(&self, turn: usize, delta: usize) -> &T {
        &self.remaining[self.horizon - turn][delta - 1]
    }

    pub fn best_action(&self, turn: usize, delta: usize) -> &DeltaAction {
        &self.actions[self.best[self.horizon - turn][delta - 1]]
    }

    fn expand(&self, next: &[T], delta: usize, action: &DeltaAction) -> T {
        expectation(self.k, self.cap, next, delta, action)
    }

    /// Re-derives `value_at(turn, delta)` from the next row by maximizing
    /// over all actions again.
    pub fn satisfies_recursion(&self, turn: usize, delta: usize) -> bool {
        let s = self.horizon - turn;
        let here = &self.remaining[s][delta - 1];
        if s == 0 {
            return *here == self.objective.eval::<T>(delta);
        }
        let next = &self.remaining[s - 1];
        let mut best: Option<T> = None;
        for a in &self.actions {
            let v = self.expand(next, delta, a);
            if best.as_ref().is_none_or(|b| v > *b) {
                best = Some(v);
            }
        }
        best.as_ref() == Some(here) && self.expand(next, delta, self.best_action(turn, delta)) == *here
    }
}

fn expectation<T: Scalar>(k: u32, cap: usize, next: &[T], delta: usize, action: &DeltaAction) -> T {
    let mut acc = T::ratio(0, 1);
    for &(x, count) in &action.outcomes {
        let target = (delta as i64 + x).clamp(1, cap as i64) as usize;
        acc = acc + T::ratio(i64::from(count), i64::from(k)) * next[target - 1].clone();
    }
    acc
}

/// Backward induction over `(turns left, Δ)` with `Δ` in `1..=cap`.
pub fn solve_delta_game<T: Scalar>(
    k: u32,
    l: usize,
    cap: usize,
    objective: DeltaObjective,
    actions: Vec<DeltaAction>,
) -> Result<GameValueTable<T>> {
    if k < 2 {
        return invalid(format!("need k >= 2, got {k}"));
    }
    if cap < l + 2 {
        return invalid(format!("delta cap {cap} is below L + 2 = {}", l + 2));
    }
    if actions.is_empty() {
        return invalid("no actions");
    }
    let mut remaining: Vec<Vec<T>> = Vec::with_capacity(l + 1);
    let mut best: Vec<Vec<usize>> = Vec::with_capacity(l + 1);
    remaining.push((1..=cap).map(|d| objective.eval(d)).collect());
    best.push(Vec::new());
    for s in 1..=l {
        let next = &remaining[s - 1];
        let mut row = Vec::with_capacity(cap);
        let mut choice = Vec::with_capacity(cap);
        for delta in 1..=cap {
            let mut top: Option<(T, usize)> = None;
            for (i, a) in actions.iter().enumerate() {
                let v = expectation(k, cap, next, delta, a);
                if top.as_ref().is_none_or(|(b, _)| v > *b) {
                    top = Some((v, i));
                }
            }
            let (v, i) = top.expect("at least one action");
            row.push(v);
            choice.push(i);
        }
        remaining.push(row);
        best.push(choice);
    }
    Ok(GameValueTable {
        k,
        horizon: l,
        cap,
        objective,
        actions,
        remaining,
        best,
    })
}

/// Optimal `E[Δ(L)]` from `Δ = 1`.
pub fn delta_game_optimal_value(k: u32, l: usize, cap: usize) -> Result<f64> {
    Ok(*solve_delta_game::<f64>(k, l, cap, DeltaObjective::Mean, canonical_actions(k))?.value())
}

/// Optimal `E[(Δ(L) - 1/2)^2]` from `Δ = 1`.
pub fn delta_game_second_moment(k: u32, l: usize) -> Result<f64> {
    Ok(*solve_delta_game::<f64>(k, l, l + 2, DeltaObjective::SecondMoment, canonical_actions(k))?.value())
}

/// Exact table over the canonical actions, horizon `l`, cap `l + 2`.
pub fn delta_game_exact(k: u32, l: usize, objective: DeltaObjective) -> Result<GameValueTable<BigRational>> {
    solve_delta_game(k, l, l + 2, objective, canonical_actions(k))
}

/// `√(2L/k) + 1`.
pub fn mean_bound(k: u32, l: usize) -> f64 {
    (2.0 * l as f64 / f64::from(k)).sqrt() + 1.0
}

/// `value <= √(2L/k) + 1`, decided exactly.
pub fn mean_within_bound(value: &BigRational, k: u32, l: usize) -> bool {
    let excess = value - rat(1, 1);
    !excess.is_positive() || &excess * &excess <= rat(2 * l as u64, k)
}

/// `1/4 + 2L/k`.
pub fn second_moment_bound(k: u32, l: usize) -> BigRational {
    rat(1, 4) + rat(2 * l as u64, k)
}
