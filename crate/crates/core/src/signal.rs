use serde::{Deserialize, Serialize};

use crate::problem::Vector;

/// Exogenous, piecewise-C¹ vector signal with an analytic derivative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputSignal {
    Constant {
        value: Vec<f64>,
    },
    /// `offset + amplitude · sin(omega t + phase)`, componentwise.
    Sinusoid {
        offset: Vec<f64>,
        amplitude: Vec<f64>,
        omega: f64,
        #[serde(default)]
        phase: f64,
    },
}

impl InputSignal {
    pub fn zero(n: usize) -> Self {
        InputSignal::Constant {
            value: vec![0.0; n],
        }
    }

    pub fn constant(value: &Vector) -> Self {
        InputSignal::Constant {
            value: value.iter().copied().collect(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            InputSignal::Constant { value } => value.len(),
            InputSignal::Sinusoid { offset, .. } => offset.len(),
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            InputSignal::Constant { .. } => true,
            InputSignal::Sinusoid {
                amplitude, omega, ..
            } => *omega == 0.0 || amplitude.iter().all(|&a| a == 0.0),
        }
    }

    pub fn value(&self, t: f64) -> Vector {
        match self {
            InputSignal::Constant { value } => Vector::from_column_slice(value),
            InputSignal::Sinusoid {
                offset,
                amplitude,
                omega,
                phase,
            } => {
                let s = (omega * t + phase).sin();
                Vector::from_iterator(
                    offset.len(),
                    offset.iter().zip(amplitude).map(|(o, a)| o + a * s),
                )
            }
        }
    }

    pub fn rate(&self, t: f64) -> Vector {
        match self {
            InputSignal::Constant { value } => Vector::zeros(value.len()),
            InputSignal::Sinusoid {
                amplitude,
                omega,
                phase,
                ..
            } => {
                let c = omega * (omega * t + phase).cos();
                Vector::from_iterator(amplitude.len(), amplitude.iter().map(|a| a * c))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinusoid_rate_is_the_derivative() {
        let s = InputSignal::Sinusoid {
            offset: vec![1.0, -2.0],
            amplitude: vec![0.5, 3.0],
            omega: 1.7,
            phase: 0.2,
        };
        let h = 1e-6;
        for &t in &[0.0, 0.4, 2.9] {
            let fd = (s.value(t + h) - s.value(t - h)) / (2.0 * h);
            assert!((fd - s.rate(t)).amax() < 1e-8);
        }
        assert!(!s.is_constant());
        assert!(InputSignal::zero(3).is_constant());
        assert_eq!(InputSignal::zero(3).rate(1.0), Vector::zeros(3));
    }
}
