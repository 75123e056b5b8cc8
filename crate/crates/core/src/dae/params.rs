use std::io::{Read, Write};
use std::path::Path;

use crate::codec;
use crate::error::{shape_err, Error, Result};
use crate::numerics::{Matrix, Rng, Transfer};

/// Tied-weight autoencoder parameters.
///
/// The decoder reuses `w` transposed; there is no separate decoder matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DaeParams {
    /// Encoder weights, `hidden × input`.
    pub w: Matrix,
    /// Encoder bias, length `hidden`.
    pub b: Vec<f64>,
    /// Decoder bias, length `input`.
    pub b_prime: Vec<f64>,
    pub encoder: Transfer,
    pub decoder: Transfer,
}

/// Width of the hidden layer and the two nonlinearities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Architecture {
    pub hidden: usize,
    pub encoder: Transfer,
    pub decoder: Transfer,
}

impl Architecture {
    pub fn sigmoid(hidden: usize) -> Self {
        Self {
            hidden,
            encoder: Transfer::Sigmoid,
            decoder: Transfer::Sigmoid,
        }
    }
}

/// Half-width of the uniform initialization interval for a `fan_in`/`fan_out` layer.
pub fn init_radius(input: usize, hidden: usize, encoder: Transfer) -> f64 {
    let factor = match encoder {
        Transfer::Sigmoid => 4.0,
        Transfer::Relu => 2.0,
        Transfer::Linear => 1.0,
    };
    factor * (6.0 / (input + hidden) as f64).sqrt()
}

impl DaeParams {
    pub fn new(
        w: Matrix,
        b: Vec<f64>,
        b_prime: Vec<f64>,
        encoder: Transfer,
        decoder: Transfer,
    ) -> Result<Self> {
        let p = Self {
            w,
            b,
            b_prime,
            encoder,
            decoder,
        };
        p.check()?;
        Ok(p)
    }

    /// All-zero parameters.
    pub fn zeros(input: usize, arch: Architecture) -> Self {
        Self {
            w: Matrix::zeros(arch.hidden, input),
            b: vec![0.0; arch.hidden],
            b_prime: vec![0.0; input],
            encoder: arch.encoder,
            decoder: arch.decoder,
        }
    }

    /// Uniform weights on `[-r, r]` (see [`init_radius`]), zero biases.
    pub fn init(input: usize, arch: Architecture, rng: &mut Rng) -> Self {
        let r = init_radius(input, arch.hidden, arch.encoder);
        let data = rng
            .uniform(-r, r, arch.hidden * input)
            .expect("radius is finite and non-negative");
        Self {
            w: Matrix::new(arch.hidden, input, data).expect("sized above"),
            ..Self::zeros(input, arch)
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w.cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w.rows()
    }

    pub fn architecture(&self) -> Architecture {
        Architecture {
            hidden: self.hidden_dim(),
            encoder: self.encoder,
            decoder: self.decoder,
        }
    }

    fn check(&self) -> Result<()> {
        if self.b.len() != self.w.rows() {
            return Err(shape_err("encoder bias", self.w.shape(), (1, self.b.len())));
        }
        if self.b_prime.len() != self.w.cols() {
            return Err(shape_err(
                "decoder bias",
                self.w.shape(),
                (1, self.b_prime.len()),
            ));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.w.is_finite()
            && self.b.iter().all(|v| v.is_finite())
            && self.b_prime.iter().all(|v| v.is_finite())
    }

    /// Writes the `SDA1` checkpoint: magic, then little-endian u64 input
    /// width, hidden width, encoder code, decoder code, then `W` row-major,
    /// `b` and `b'` as little-endian f64.
    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(b"SDA1")?;
        codec::write_u64(w, self.input_dim() as u64)?;
        codec::write_u64(w, self.hidden_dim() as u64)?;
        codec::write_u64(w, self.encoder.code())?;
        codec::write_u64(w, self.decoder.code())?;
        codec::write_f64s(w, self.w.as_slice())?;
        codec::write_f64s(w, &self.b)?;
        codec::write_f64s(w, &self.b_prime)?;
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        codec::read_magic(r, b"SDA1")?;
        let d = codec::read_usize(r, "input width")?;
        let h = codec::read_usize(r, "hidden width")?;
        let encoder = Transfer::from_code(codec::read_u64(r)?)?;
        let decoder = Transfer::from_code(codec::read_u64(r)?)?;
        let w = codec::read_matrix(r, h, d)?;
        let b = codec::read_f64s(r, h)?;
        let b_prime = codec::read_f64s(r, d)?;
        codec::expect_end(r)?;
        Self::new(w, b, b_prime, encoder, decoder)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        Self::read_from(&mut bytes.as_slice())
    }
}

impl TryFrom<&[u8]> for DaeParams {
    type Error = Error;

    fn try_from(mut bytes: &[u8]) -> Result<Self> {
        Self::read_from(&mut bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_respects_radius_and_zero_biases() {
        let p = DaeParams::init(16, Architecture::sigmoid(8), &mut Rng::new(1));
        let r = 4.0 * (6.0f64 / 24.0).sqrt();
        assert!(p.w.as_slice().iter().all(|v| v.abs() <= r));
        assert!(p.b.iter().chain(&p.b_prime).all(|&v| v == 0.0));
    }

    #[test]
    fn checkpoint_layout() {
        let p = DaeParams::new(
            Matrix::from_rows(&[vec![1.0, 2.0, 3.0]]).unwrap(),
            vec![0.5],
            vec![-1.0, -2.0, -3.0],
            Transfer::Relu,
            Transfer::Sigmoid,
        )
        .unwrap();
        let bytes = p.to_bytes();
        assert_eq!(&bytes[..4], b"SDA1");
        assert_eq!(u64::from_le_bytes(bytes[4..12].try_into().unwrap()), 3);
        assert_eq!(u64::from_le_bytes(bytes[12..20].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(bytes[20..28].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(bytes[28..36].try_into().unwrap()), 0);
        assert_eq!(f64::from_le_bytes(bytes[36..44].try_into().unwrap()), 1.0);
        assert_eq!(bytes.len(), 4 + 4 * 8 + (3 + 1 + 3) * 8);
        assert_eq!(DaeParams::try_from(bytes.as_slice()).unwrap(), p);
    }

    #[test]
    fn truncated_checkpoint_is_a_format_error() {
        let p = DaeParams::zeros(4, Architecture::sigmoid(2));
        let bytes = p.to_bytes();
        let err = DaeParams::try_from(&bytes[..bytes.len() - 3]).unwrap_err();
        assert!(matches!(err, Error::Format(_)));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(DaeParams::try_from(bad.as_slice()).is_err());
    }
}
