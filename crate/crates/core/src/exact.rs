//! Exact rational arithmetic for hypothesis checks, plus accurate natural
//! logarithms of big integers and rationals.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{contract, Error, Result};

/// Exact value of a finite double.
pub fn rational(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| contract(format!("{x} is not a finite number")))
}

/// `ln n` for `n > 0`, accurate to a few ulps regardless of size.
pub fn ln_biguint(n: &BigUint) -> f64 {
    assert!(!n.is_zero(), "logarithm of zero");
    let bits = n.bits();
    let shift = bits.saturating_sub(64);
    let top = (n >> shift).to_u64().expect("at most 64 bits remain");
    (top as f64).ln() + shift as f64 * std::f64::consts::LN_2
}

/// `ln x` for `x > 0`.
pub fn ln_rational(x: &BigRational) -> f64 {
    assert!(x.is_positive(), "logarithm of a non-positive number");
    let (num, den) = (x.numer().magnitude(), x.denom().magnitude());
    // near 1 the difference of two logs would cancel; go through ln_1p
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let two = BigRational::from_integer(BigInt::from(2));
    if x > &half && x < &two {
        let delta = (x - BigRational::one()).to_f64().expect("bounded");
        return delta.ln_1p();
    }
    ln_biguint(num) - ln_biguint(den)
}

/// `2d (2dL(b-a)/ε + 2)^d`, the smallest admissible hidden width.
pub fn tau_threshold(d: usize, lip: f64, a: f64, b: f64, eps: f64) -> Result<BigRational> {
    if d == 0 {
        return Err(contract("dimension must be positive"));
    }
    if !(eps > 0.0) {
        return Err(contract(format!("ε must be positive, got {eps}")));
    }
    let dd = BigRational::from_integer(BigInt::from(2 * d));
    let inner = &dd * rational(lip)? * (rational(b)? - rational(a)?) / rational(eps)?
        + BigRational::from_integer(BigInt::from(2));
    Ok(dd * num_traits::pow(inner, d))
}

/// `τ(d+1) + (τ-3)τ(τ+1) + τ + 1`, the smallest admissible parameter count.
pub fn dfrak_threshold(d: usize, tau: usize) -> BigInt {
    let t = BigInt::from(tau);
    &t * BigInt::from(d + 1) + (&t - 3) * &t * (&t + 1) + &t + 1
}

pub const TAU_HYPOTHESIS: &str = "τ ≥ 2d(2dL(b−a)ε⁻¹+2)ᵈ";
pub const DFRAK_HYPOTHESIS: &str = "𝔡 ≥ τ(d+1) + (τ−3)τ(τ+1)+τ+1";
pub const RADIUS_HYPOTHESIS: &str = "R ≥ max{1, L, |a|, |b|, 2|u|, 2|v|}";

pub fn check_tau(tau: usize, d: usize, lip: f64, a: f64, b: f64, eps: f64) -> Result<()> {
    let rhs = tau_threshold(d, lip, a, b, eps)?;
    if BigRational::from_integer(BigInt::from(tau)) >= rhs {
        Ok(())
    } else {
        Err(Error::Hypothesis { name: TAU_HYPOTHESIS, lhs: tau.to_string(), rhs: show(&rhs) })
    }
}

pub fn check_dfrak(dfrak: usize, d: usize, tau: usize) -> Result<()> {
    let rhs = dfrak_threshold(d, tau);
    if BigInt::from(dfrak) >= rhs {
        Ok(())
    } else {
        Err(Error::Hypothesis { name: DFRAK_HYPOTHESIS, lhs: dfrak.to_string(), rhs: rhs.to_string() })
    }
}

/// `max{1, L, |a|, |b|, 2|u|, 2|v|}`; comparisons against it are exact in
/// floating point.
pub fn radius_threshold(lip: f64, a: f64, b: f64, u: f64, v: f64) -> f64 {
    [1.0, lip, a.abs(), b.abs(), 2.0 * u.abs(), 2.0 * v.abs()].into_iter().fold(f64::NEG_INFINITY, f64::max)
}

pub fn check_radius(r: f64, lip: f64, a: f64, b: f64, u: f64, v: f64) -> Result<()> {
    let rhs = radius_threshold(lip, a, b, u, v);
    if r >= rhs {
        Ok(())
    } else {
        Err(Error::Hypothesis { name: RADIUS_HYPOTHESIS, lhs: r.to_string(), rhs: rhs.to_string() })
    }
}

/// Integers print as such; other rationals as `p/q (≈ decimal)`.
fn show(x: &BigRational) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        let approx = x.to_f64().map_or_else(String::new, |f| format!(" (≈ {f})"));
        format!("{}/{}{}", x.numer(), x.denom(), approx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tau_and_dfrak_minimal_config() {
        assert_eq!(tau_threshold(1, 1.0, 0.0, 1.0, 1.0).unwrap(), BigRational::from_integer(8.into()));
        assert_eq!(dfrak_threshold(1, 8), BigInt::from(385));
        assert!(check_tau(8, 1, 1.0, 0.0, 1.0, 1.0).is_ok());
        assert!(check_dfrak(385, 1, 8).is_ok());
    }

    #[test]
    fn violations_name_the_inequality() {
        match check_tau(7, 1, 1.0, 0.0, 1.0, 1.0) {
            Err(Error::Hypothesis { name, lhs, rhs }) => {
                assert_eq!(name, TAU_HYPOTHESIS);
                assert_eq!((lhs.as_str(), rhs.as_str()), ("7", "8"));
            }
            other => panic!("unexpected {other:?}"),
        }
        match check_dfrak(384, 1, 8) {
            Err(Error::Hypothesis { name, rhs, .. }) => {
                assert_eq!(name, DFRAK_HYPOTHESIS);
                assert_eq!(rhs, "385");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(check_radius(1.5, 1.0, 0.0, 1.0, 0.0, 1.0).is_err());
        assert!(check_radius(2.0, 1.0, 0.0, 1.0, 0.0, 1.0).is_ok());
    }

    #[test]
    fn tau_threshold_is_exact_at_decimal_inputs() {
        // 0.1 is not a double; the threshold uses the double actually stored
        let t = tau_threshold(1, 1.0, 0.0, 1.0, 0.1).unwrap();
        let f = 2.0 * (2.0 / 0.1 + 2.0);
        assert!((t.to_f64().unwrap() - f).abs() < 1e-12);
        assert!(!t.is_integer());
    }

    #[test]
    fn ln_helpers() {
        assert_eq!(ln_biguint(&BigUint::one()), 0.0);
        let big = BigUint::from(3u32).pow(1000);
        let expect = 1000.0 * 3f64.ln();
        assert!((ln_biguint(&big) - expect).abs() / expect < 1e-14);
        let near_one = BigRational::new(BigInt::from(1_000_000_001), BigInt::from(1_000_000_000));
        let got = ln_rational(&near_one);
        assert!((got - 1e-9f64.ln_1p()).abs() < 1e-24);
        let third = BigRational::new(1.into(), 3.into());
        assert!((ln_rational(&third) + 3f64.ln()).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn ln_rational_matches_f64(p in 1u64..1u64 << 50, q in 1u64..1u64 << 50) {
            let x = BigRational::new(BigInt::from(p), BigInt::from(q));
            let want = (p as f64 / q as f64).ln();
            prop_assert!((ln_rational(&x) - want).abs() <= 1e-13 * want.abs().max(1e-3));
        }

        #[test]
        fn rational_is_exact(x in -1e300f64..1e300) {
            prop_assert_eq!(rational(x).unwrap().to_f64().unwrap(), x);
        }
    }
}
