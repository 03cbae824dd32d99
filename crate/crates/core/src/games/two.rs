//! The gap game with a same/different flag, driven either by a fixed
//! adversary rule for the flag or by the actual two-particle dynamics.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::particles::Dynamics;
use crate::rng::{Lane, RngStream};
use crate::words::LazyWord;

/// How the flag is set after a decrement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FRule {
    AlwaysSame,
    AlwaysDiff,
    /// Run the real dynamics with two particles; the flag is whether both
    /// particles stand on the same symbol.
    Honest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwoGameOutcome {
    pub delta: u64,
    /// Turns where the gap was incremented or decremented.
    pub good_turns: u64,
    /// Coin tosses that set the flag to different.
    pub heads: u64,
    pub tosses: u64,
}

/// One rollout of `L` turns. Panics if the good-turn count ever falls more
/// than one below the heads count.
pub fn two_game_simulate(k: u32, l: usize, rule: FRule, rng: &RngStream) -> Result<TwoGameOutcome> {
    if k < 2 {
        return invalid(format!("need k >= 2, got {k}"));
    }
    let out = match rule {
        FRule::Honest => honest(k, l, rng)?,
        _ => abstract_game(k, l, rule, rng),
    };
    assert!(
        out.good_turns + 1 >= out.heads,
        "good turns {} < heads {} - 1",
        out.good_turns,
        out.heads
    );
    Ok(out)
}

fn abstract_game(k: u32, l: usize, rule: FRule, rng: &RngStream) -> TwoGameOutcome {
    let mut g = rng.generator(Lane::Fortune);
    let mut out = TwoGameOutcome {
        delta: 1,
        good_turns: 0,
        heads: 0,
        tosses: 0,
    };
    let kk = u64::from(k);
    let mut same = g.chance(1, kk);
    for _ in 0..l {
        let mut toss = false;
        if same {
            toss = g.chance(1, kk);
        } else {
            match g.symbol(k) {
                0 => {
                    out.delta = (out.delta - 1).max(1);
                    out.good_turns += 1;
                    same = rule == FRule::AlwaysSame;
                }
                1 => {
                    out.delta += 1;
                    out.good_turns += 1;
                    toss = true;
                }
                _ => {}
            }
        }
        if toss {
            out.tosses += 1;
            let heads = g.chance(kk - 1, kk);
            out.heads += u64::from(heads);
            same = !heads;
        }
    }
    out
}

fn honest(k: u32, l: usize, rng: &RngStream) -> Result<TwoGameOutcome> {
    let mut dynamics = Dynamics::new(LazyWord::new(k, rng, Lane::Word)?, 1);
    let mut wp = rng.generator(Lane::WordPrime);
    let mut out = TwoGameOutcome {
        delta: 1,
        good_turns: 0,
        heads: 0,
        tosses: 0,
    };
    let under = |d: &mut Dynamics<LazyWord>| {
        let (p0, p1) = (d.positions()[0], d.positions()[1]);
        let w = d.word_mut();
        (w.get(p0), w.get(p1))
    };
    for _ in 0..l {
        let symbol = wp.symbol(k);
        let (s0, s1) = under(&mut dynamics);
        dynamics.step(symbol)?;
        let (n0, n1) = under(&mut dynamics);
        let toss = if s0 == s1 {
            s0 == symbol
        } else if s0 == symbol {
            out.good_turns += 1;
            false
        } else if s1 == symbol {
            out.good_turns += 1;
            true
        } else {
            false
        };
        if toss {
            out.tosses += 1;
            out.heads += u64::from(n0 != n1);
        }
    }
    let p = dynamics.positions();
    out.delta = (p[1] - p[0]) as u64;
    Ok(out)
}

/// `1/2 + √(L/7k)`.
pub fn two_game_lower_bound(k: u32, l: usize) -> f64 {
    0.5 + (l as f64 / (7.0 * f64::from(k))).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::particles::final_state;

    #[test]
    fn zero_turns() {
        for rule in [FRule::AlwaysSame, FRule::AlwaysDiff, FRule::Honest] {
            let out = two_game_simulate(2, 0, rule, &RngStream::new(1, 1)).unwrap();
            assert_eq!(out.delta, 1);
        }
        assert!(two_game_simulate(1, 3, FRule::Honest, &RngStream::new(1, 1)).is_err());
    }

    #[test]
    fn honest_gap_is_particle_gap() {
        for i in 0..50 {
            let rng = RngStream::new(10, i);
            let out = two_game_simulate(3, 300, FRule::Honest, &rng).unwrap();
            let state = final_state(3, 1, 300, &rng).unwrap();
            assert_eq!(out.delta as usize, state.spread());
        }
    }

    #[test]
    fn toss_rate_and_invariant() {
        // Tosses happen with probability 1/k per turn whatever the flag is.
        for rule in [FRule::AlwaysSame, FRule::AlwaysDiff, FRule::Honest] {
            let (k, l, runs) = (4u32, 400usize, 400u64);
            let mut tosses = 0u64;
            for i in 0..runs {
                tosses += two_game_simulate(k, l, rule, &RngStream::new(12, i)).unwrap().tosses;
            }
            let mean = tosses as f64 / (runs as f64 * l as f64);
            let se = (0.25 * 0.75 / (runs as f64 * l as f64)).sqrt();
            assert!((mean - 0.25).abs() < 5.0 * se, "{rule:?}: {mean}");
        }
    }
}
