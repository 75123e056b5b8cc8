use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Largest `f64` strictly below one.
const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

/// Logistic function, clamped so the result stays strictly inside (0, 1).
#[inline]
pub fn sigmoid_scalar(v: f64) -> f64 {
    let s = if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    };
    s.clamp(f64::MIN_POSITIVE, BELOW_ONE)
}

/// `ln(1 + e^v)` without overflow.
#[inline]
pub fn softplus(v: f64) -> f64 {
    v.max(0.0) + (-v.abs()).exp().ln_1p()
}

pub fn sigmoid(v: &Matrix) -> Matrix {
    v.map(sigmoid_scalar)
}

pub fn relu(v: &Matrix) -> Matrix {
    v.map(|x| x.max(0.0))
}

/// Elementwise nonlinearity of an encoder or decoder.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Transfer {
    Sigmoid,
    Relu,
    Linear,
}

impl Transfer {
    #[inline]
    pub fn apply(self, v: f64) -> f64 {
        match self {
            Transfer::Sigmoid => sigmoid_scalar(v),
            Transfer::Relu => v.max(0.0),
            Transfer::Linear => v,
        }
    }

    pub fn apply_matrix(self, m: &Matrix) -> Matrix {
        m.map(|v| self.apply(v))
    }

    pub fn apply_inplace(self, m: &mut Matrix) {
        if self != Transfer::Linear {
            m.map_inplace(|v| self.apply(v));
        }
    }

    /// Derivative expressed through the activation value `out = f(pre)`.
    #[inline]
    pub fn derivative_from_output(self, out: f64) -> f64 {
        match self {
            Transfer::Sigmoid => out * (1.0 - out),
            Transfer::Relu => {
                if out > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Transfer::Linear => 1.0,
        }
    }

    pub fn code(self) -> u64 {
        match self {
            Transfer::Sigmoid => 0,
            Transfer::Relu => 1,
            Transfer::Linear => 2,
        }
    }

    pub fn from_code(code: u64) -> Result<Self> {
        match code {
            0 => Ok(Transfer::Sigmoid),
            1 => Ok(Transfer::Relu),
            2 => Ok(Transfer::Linear),
            other => Err(Error::Format(format!("unknown transfer code {other}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Transfer::Sigmoid => "sigmoid",
            Transfer::Relu => "relu",
            Transfer::Linear => "linear",
        }
    }
}

impl std::str::FromStr for Transfer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sigmoid" => Ok(Transfer::Sigmoid),
            "relu" | "rectifier" => Ok(Transfer::Relu),
            "linear" | "identity" => Ok(Transfer::Linear),
            other => Err(Error::Config(format!("unknown transfer function `{other}`"))),
        }
    }
}
