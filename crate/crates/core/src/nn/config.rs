use serde::{Deserialize, Serialize};

use super::{Activation, EmbeddingConfig, InputLayout, MlpSpec};
use crate::error::{Error, Result};
use crate::gbdt::EarlyStopping;
use crate::preprocess::EncodedTable;
use crate::task::Task;

/// Hidden-width ladder of the tuned network; grid arms start at their
/// `width` entry and walk down it.
pub const WIDTH_LADDER: [usize; 6] = [2000, 1200, 500, 250, 100, 50];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingSize {
    Fixed(usize),
    TenPercent,
}

impl EmbeddingSize {
    pub fn resolve(self, cardinality: usize) -> EmbeddingConfig {
        match self {
            EmbeddingSize::Fixed(d) => EmbeddingConfig::Dim(d),
            EmbeddingSize::TenPercent => EmbeddingConfig::ten_percent(cardinality),
        }
    }
}

/// Which categorical features get an embedding table; the rest enter
/// one-hot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingChoice {
    None,
    All,
    Only(Vec<String>),
}

/// Network hyperparameters independent of the encoded input layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NnConfig {
    pub hidden_widths: Vec<usize>,
    pub activation: Activation,
    pub dropout: f64,
    pub batch_norm: bool,
    pub l2_rate: f64,
    pub l1_rate: f64,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub early_stopping: EarlyStopping,
    pub embeddings: EmbeddingChoice,
    pub embedding_size: EmbeddingSize,
}

impl Default for NnConfig {
    fn default() -> Self {
        NnConfig {
            hidden_widths: WIDTH_LADDER.to_vec(),
            activation: Activation::LeakyRelu,
            dropout: 0.3,
            batch_norm: true,
            l2_rate: 0.01,
            l1_rate: 0.0,
            learning_rate: 1e-3,
            max_epochs: 1000,
            batch_size: 256,
            early_stopping: EarlyStopping::Patience(50),
            embeddings: EmbeddingChoice::All,
            embedding_size: EmbeddingSize::TenPercent,
        }
    }
}

/// `depth` widths taken from the ladder starting at `width`; the last rung
/// repeats when the ladder runs out.
pub fn ladder_widths(depth: usize, width: usize) -> Result<Vec<usize>> {
    let start = WIDTH_LADDER
        .iter()
        .position(|&w| w == width)
        .ok_or_else(|| Error::Config(format!("width {width} is not on the ladder {WIDTH_LADDER:?}")))?;
    Ok((0..depth)
        .map(|i| WIDTH_LADDER[(start + i).min(WIDTH_LADDER.len() - 1)])
        .collect())
}

impl NnConfig {
    pub fn spec_for(&self, enc: &EncodedTable, task: Task) -> Result<MlpSpec> {
        let input = InputLayout::of(enc);
        if let EmbeddingChoice::Only(names) = &self.embeddings {
            if let Some(bad) = names.iter().find(|n| !enc.categorical.iter().any(|c| &c.name == *n)) {
                return Err(Error::Config(format!(
                    "embedding requested for unknown categorical feature {bad:?}"
                )));
            }
        }
        let embeddings = enc
            .categorical
            .iter()
            .map(|c| {
                let on = match &self.embeddings {
                    EmbeddingChoice::None => false,
                    EmbeddingChoice::All => true,
                    EmbeddingChoice::Only(names) => names.contains(&c.name),
                };
                if on {
                    self.embedding_size.resolve(c.cardinality())
                } else {
                    EmbeddingConfig::Off
                }
            })
            .collect();
        let spec = MlpSpec {
            input,
            task,
            embeddings,
            hidden_widths: self.hidden_widths.clone(),
            activation: self.activation,
            dropout: self.dropout,
            batch_norm: self.batch_norm,
            l2_rate: self.l2_rate,
            l1_rate: self.l1_rate,
            learning_rate: self.learning_rate,
            max_epochs: self.max_epochs,
            batch_size: self.batch_size,
            early_stopping: self.early_stopping,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder() {
        assert_eq!(ladder_widths(6, 2000).unwrap(), WIDTH_LADDER.to_vec());
        assert_eq!(ladder_widths(4, 250).unwrap(), vec![250, 100, 50, 50]);
        assert!(ladder_widths(4, 300).is_err());
    }
}
