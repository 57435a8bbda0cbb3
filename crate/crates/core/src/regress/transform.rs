use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Response transform. `Power` with `lambda == 0` is the natural log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TransformSpec {
    Identity,
    Power { lambda: f64 },
    ShiftedPower { lambda: f64, shift: f64 },
}

impl TransformSpec {
    fn parts(self) -> Option<(f64, f64)> {
        match self {
            TransformSpec::Identity => None,
            TransformSpec::Power { lambda } => Some((lambda, 0.0)),
            TransformSpec::ShiftedPower { lambda, shift } => Some((lambda, shift)),
        }
    }

    pub fn forward(self, y: f64) -> Result<f64> {
        let Some((lambda, shift)) = self.parts() else {
            return Ok(y);
        };
        let v = y - shift;
        let integral = lambda.fract() == 0.0 && lambda > 0.0;
        if !(v > 0.0 || (integral && v.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "transform undefined for response {y} (shifted value {v} must be positive)"
            )));
        }
        Ok(if lambda == 0.0 {
            v.ln()
        } else {
            v.powf(lambda)
        })
    }

    pub fn forward_all(self, y: &[f64]) -> Result<Vec<f64>> {
        y.iter().map(|&v| self.forward(v)).collect()
    }

    /// Monotone inverse. Transformed values below the transform's range are
    /// clamped to its lower end.
    pub fn inverse(self, t: f64) -> f64 {
        match self.parts() {
            None => t,
            Some((0.0, shift)) => t.exp() + shift,
            Some((lambda, shift)) => t.max(0.0).powf(1.0 / lambda) + shift,
        }
    }

    /// True when `t` lies outside the image of the transform.
    pub fn out_of_range(self, t: f64) -> bool {
        matches!(self.parts(), Some((lambda, _)) if lambda != 0.0 && t < 0.0)
    }
}
