use std::path::Path;

use scheda_core::composite::CompositeParams;
use scheda_core::dae::DaeParams;
use scheda_core::eval::Encoder;
use scheda_core::numerics::Matrix;
use scheda_core::{Error, Result};

/// A trained model of either kind, as stored on disk.
#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    Dae(DaeParams),
    Composite(CompositeParams),
}

impl Model {
    /// Reads a checkpoint, telling the kinds apart by their magic bytes.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        let context = |e: Error| Error::Format(format!("{}: {e}", path.display()));
        match bytes.get(..4) {
            Some(b"SDA1") => DaeParams::try_from(&bytes[..]).map(Model::Dae).map_err(context),
            Some(b"SDC1") => {
                CompositeParams::read_from(&mut &bytes[..]).map(Model::Composite).map_err(context)
            }
            _ => Err(Error::Format(format!(
                "{}: not an autoencoder checkpoint",
                path.display()
            ))),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        match self {
            Model::Dae(p) => p.save(path),
            Model::Composite(p) => p.save(path),
        }
    }

    pub fn encoder(&self) -> &dyn Encoder {
        match self {
            Model::Dae(p) => p,
            Model::Composite(p) => p,
        }
    }

    /// Encoder weights with one row per hidden unit; composite partitions
    /// are stacked in order.
    pub fn filters(&self) -> Matrix {
        match self {
            Model::Dae(p) => p.w.clone(),
            Model::Composite(p) => {
                let d = p.input_dim();
                let data = p
                    .partitions
                    .iter()
                    .flat_map(|part| part.w.as_slice().iter().copied())
                    .collect();
                Matrix::new(p.hidden_dim(), d, data).expect("partitions share the input width")
            }
        }
    }
}
