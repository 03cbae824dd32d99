//! Absolute value of a simple random walk on the half-integers.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::rat;

/// `C(n, r)`.
pub fn binomial(n: u64, r: u64) -> BigInt {
    if r > n {
        return BigInt::zero();
    }
    let r = r.min(n - r);
    let mut acc = BigInt::one();
    for i in 0..r {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// `E|X_T|` for a simple ±1 walk started at 1/2.
///
/// Even `T`: `2^-T (T + 1/2) C(T, T/2)`; odd `T`: `2^-T 2T C(T-1, (T-1)/2)`.
pub fn random_walk_abs_expectation(t: u64) -> BigRational {
    let scale = BigInt::one() << t;
    if t.is_multiple_of(2) {
        rat(BigInt::from(2 * t + 1) * binomial(t, t / 2), scale * 2)
    } else {
        rat(BigInt::from(2 * t) * binomial(t - 1, (t - 1) / 2), scale)
    }
}

/// Expected gap after `T` good turns when every other turn is skipped:
/// `1/2 + E|X_T|`.
pub fn good_turn_walk_value(t: u64) -> BigRational {
    rat(1, 2) + random_walk_abs_expectation(t)
}

/// `E|X_T|` by walking all `2^T` paths. Exponential; meant for `T <= 24`.
pub fn walk_abs_by_enumeration(t: u32) -> BigRational {
    assert!(t <= 30, "path enumeration is exponential");
    // Doubled coordinates keep everything integral: start at 1, steps of 2.
    let mut total: u64 = 0;
    for path in 0u64..(1 << t) {
        let mut x: i64 = 1;
        for i in 0..t {
            x += if path >> i & 1 == 1 { 2 } else { -2 };
        }
        total += x.unsigned_abs();
    }
    rat(total, BigInt::from(2u64) << t)
}
