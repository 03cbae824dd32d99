//! Exact solvers and simulators for the small games and chains that bound
//! the particle dynamics.

use std::fmt::Debug;
use std::ops::{Add, Mul, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;

pub mod chain;
pub mod delta;
pub mod two;
pub mod walk;

pub use chain::{star_probability, stationary_distribution, trivial_chain_spec, ChainSpec};
pub use delta::{delta_game_optimal_value, delta_game_second_moment, DeltaObjective, GameValueTable};
pub use two::{two_game_simulate, FRule, TwoGameOutcome};
pub use walk::{good_turn_walk_value, random_walk_abs_expectation};

/// Field used by the dynamic programs: `f64` for speed, `BigRational` for
/// exact identities.
pub trait Scalar: Clone + PartialOrd + Debug + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> {
    fn ratio(num: i64, den: i64) -> Self;
    fn to_f64(&self) -> f64;
}

impl Scalar for f64 {
    fn ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for BigRational {
    fn ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// `a/b` for big integers.
pub(crate) fn rat(num: impl Into<BigInt>, den: impl Into<BigInt>) -> BigRational {
    BigRational::new(num.into(), den.into())
}
