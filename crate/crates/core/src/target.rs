//! Lipschitz target functions that can be named in a configuration file.

use serde::{Deserialize, Serialize};

use crate::error::{contract, shape, Result};

/// A target `φ : ℝᵈ → ℝ` with a known Euclidean Lipschitz constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetSpec {
    /// `φ(x) = value`.
    Constant { value: f64 },
    /// `φ(x) = w·x + bias`.
    Linear { weights: Vec<f64>, bias: f64 },
    /// `φ(x) = max{floor, height - slope ‖x - center‖₂}`.
    Peak { center: Vec<f64>, height: f64, slope: f64, floor: f64 },
    /// `φ(x) = offset + amplitude sin(frequency · w·x)`.
    Ridge { direction: Vec<f64>, amplitude: f64, frequency: f64, offset: f64 },
}

impl TargetSpec {
    /// Checks that the target is defined on `ℝᵈ`.
    pub fn validate(&self, d: usize) -> Result<()> {
        let dim = match self {
            Self::Constant { value } => {
                finite(&[*value])?;
                return Ok(());
            }
            Self::Linear { weights, bias } => {
                finite(weights)?;
                finite(&[*bias])?;
                weights.len()
            }
            Self::Peak { center, height, slope, floor } => {
                finite(center)?;
                finite(&[*height, *slope, *floor])?;
                if *slope < 0.0 {
                    return Err(contract("peak slope must be non-negative"));
                }
                center.len()
            }
            Self::Ridge { direction, amplitude, frequency, offset } => {
                finite(direction)?;
                finite(&[*amplitude, *frequency, *offset])?;
                direction.len()
            }
        };
        if dim != d {
            return Err(shape(format!("target is defined on dimension {dim}, expected {d}")));
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Self::Constant { value } => *value,
            Self::Linear { weights, bias } => dot(weights, x) + bias,
            Self::Peak { center, height, slope, floor } => {
                let dist = center.iter().zip(x).map(|(c, xi)| (xi - c) * (xi - c)).sum::<f64>().sqrt();
                (height - slope * dist).max(*floor)
            }
            Self::Ridge { direction, amplitude, frequency, offset } => {
                offset + amplitude * (frequency * dot(direction, x)).sin()
            }
        }
    }

    /// Lipschitz constant with respect to the Euclidean norm.
    pub fn lipschitz(&self) -> f64 {
        match self {
            Self::Constant { .. } => 0.0,
            Self::Linear { weights, .. } => norm2(weights),
            Self::Peak { slope, .. } => *slope,
            Self::Ridge { direction, amplitude, frequency, .. } => {
                amplitude.abs() * frequency.abs() * norm2(direction)
            }
        }
    }
}

fn finite(xs: &[f64]) -> Result<()> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(contract("target parameters must be finite"))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn samples() -> Vec<TargetSpec> {
        vec![
            TargetSpec::Constant { value: 0.3 },
            TargetSpec::Linear { weights: vec![0.25, -0.5], bias: 0.5 },
            TargetSpec::Peak { center: vec![0.5, 0.5], height: 0.9, slope: 1.5, floor: 0.1 },
            TargetSpec::Ridge { direction: vec![1.0, 2.0], amplitude: 0.2, frequency: 3.0, offset: 0.5 },
        ]
    }

    #[test]
    fn evaluation_examples() {
        let t = samples();
        assert_eq!(t[0].eval(&[7.0, 7.0]), 0.3);
        assert_eq!(t[1].eval(&[1.0, 1.0]), 0.25);
        assert_eq!(t[2].eval(&[0.5, 0.5]), 0.9);
        assert_eq!(t[2].eval(&[5.0, 5.0]), 0.1);
        assert_eq!(t[3].eval(&[0.0, 0.0]), 0.5);
        assert!((t[1].lipschitz() - 0.3125f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn dimension_checks() {
        for t in samples() {
            assert!(t.validate(2).is_ok());
        }
        assert!(samples()[1].validate(3).is_err());
        assert!(samples()[0].validate(5).is_ok());
        let bad = TargetSpec::Peak { center: vec![0.0], height: 1.0, slope: -1.0, floor: 0.0 };
        assert!(bad.validate(1).is_err());
    }

    #[test]
    fn json_form() {
        let t: TargetSpec = serde_json::from_str(r#"{"kind":"linear","weights":[1.0],"bias":0.0}"#).unwrap();
        assert_eq!(t, TargetSpec::Linear { weights: vec![1.0], bias: 0.0 });
    }

    proptest! {
        #[test]
        fn stated_lipschitz_constant_holds(
            x in proptest::collection::vec(-2.0f64..2.0, 2),
            y in proptest::collection::vec(-2.0f64..2.0, 2),
        ) {
            let dist = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt();
            for t in samples() {
                let diff = (t.eval(&x) - t.eval(&y)).abs();
                prop_assert!(diff <= t.lipschitz() * dist * (1.0 + 1e-12) + 1e-15);
            }
        }
    }
}
