use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Sums must match 1 within this tolerance.
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WeightError {
    #[error("{list} list: {names} must sum to 1 (got {sum})")]
    Sum {
        list: ListKind,
        names: &'static str,
        sum: f64,
    },
    #[error("{list} list: {name} must be a finite non-negative number (got {value})")]
    Negative {
        list: ListKind,
        name: &'static str,
        value: f64,
    },
    #[error("expected 10 weights, got {0}")]
    Count(usize),
    #[error("unknown weight preset {0:?}; known presets: {known}", known = PRESETS.join(", "))]
    UnknownPreset(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ListKind {
    Reference,
    Citation,
}

impl fmt::Display for ListKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Reference => "reference",
            Self::Citation => "citation",
        })
    }
}

/// Weights for one candidate list: the similarity mix (w1, w2, w3) and the
/// fundamental-score mix (w4, w5) of normalized citations and weighted-sim.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ListWeights {
    pub similarity: [f64; 3],
    pub fundamental: [f64; 2],
}

impl ListWeights {
    pub const UNIFORM: Self = Self {
        similarity: [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        fundamental: [0.5, 0.5],
    };

    pub fn validate(&self, list: ListKind) -> Result<(), WeightError> {
        let (sim_names, fund_names) = match list {
            ListKind::Reference => (["w1", "w2", "w3"], ["w4", "w5"]),
            ListKind::Citation => (["w6", "w7", "w8"], ["w9", "w10"]),
        };
        for (name, &value) in sim_names
            .iter()
            .zip(&self.similarity)
            .chain(fund_names.iter().zip(&self.fundamental))
        {
            if !value.is_finite() || value < 0.0 {
                return Err(WeightError::Negative { list, name, value });
            }
        }
        let sum: f64 = self.similarity.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            let names = match list {
                ListKind::Reference => "w1 + w2 + w3",
                ListKind::Citation => "w6 + w7 + w8",
            };
            return Err(WeightError::Sum { list, names, sum });
        }
        let sum: f64 = self.fundamental.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            let names = match list {
                ListKind::Reference => "w4 + w5",
                ListKind::Citation => "w9 + w10",
            };
            return Err(WeightError::Sum { list, names, sum });
        }
        Ok(())
    }
}

/// The ten user weights: w1..w5 for the reference list, w6..w10 for the
/// citation list.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightConfig {
    pub reference: ListWeights,
    pub citation: ListWeights,
}

impl Default for WeightConfig {
    fn default() -> Self {
        Self {
            reference: ListWeights::UNIFORM,
            citation: ListWeights::UNIFORM,
        }
    }
}

pub const PRESETS: [&str; 5] = ["uniform", "abstract", "title", "network", "content"];

impl WeightConfig {
    pub fn new(reference: ListWeights, citation: ListWeights) -> Result<Self, WeightError> {
        let w = Self {
            reference,
            citation,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<(), WeightError> {
        self.reference.validate(ListKind::Reference)?;
        self.citation.validate(ListKind::Citation)
    }

    /// From `[w1, ..., w10]`.
    pub fn from_values(values: &[f64]) -> Result<Self, WeightError> {
        let v: [f64; 10] = values
            .try_into()
            .map_err(|_| WeightError::Count(values.len()))?;
        Self::new(
            ListWeights {
                similarity: [v[0], v[1], v[2]],
                fundamental: [v[3], v[4]],
            },
            ListWeights {
                similarity: [v[5], v[6], v[7]],
                fundamental: [v[8], v[9]],
            },
        )
    }

    pub fn values(&self) -> [f64; 10] {
        let (r, c) = (&self.reference, &self.citation);
        [
            r.similarity[0],
            r.similarity[1],
            r.similarity[2],
            r.fundamental[0],
            r.fundamental[1],
            c.similarity[0],
            c.similarity[1],
            c.similarity[2],
            c.fundamental[0],
            c.fundamental[1],
        ]
    }

    pub fn preset(name: &str) -> Result<Self, WeightError> {
        let third = 1.0 / 3.0;
        let similarity = match name {
            "uniform" => [third, third, third],
            "abstract" => [1.0, 0.0, 0.0],
            "title" => [0.0, 1.0, 0.0],
            "network" => [0.0, 0.0, 1.0],
            "content" => [0.5, 0.5, 0.0],
            _ => return Err(WeightError::UnknownPreset(name.to_owned())),
        };
        let lw = ListWeights {
            similarity,
            fundamental: [0.5, 0.5],
        };
        Ok(Self {
            reference: lw,
            citation: lw,
        })
    }

    pub fn for_list(&self, list: ListKind) -> &ListWeights {
        match list {
            ListKind::Reference => &self.reference,
            ListKind::Citation => &self.citation,
        }
    }
}

impl std::str::FromStr for WeightConfig {
    type Err = WeightError;

    /// A preset name, or ten comma-separated values.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.contains(',') {
            let values = s
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| WeightError::UnknownPreset(s.to_owned()))?;
            Self::from_values(&values)
        } else {
            Self::preset(s.trim())
        }
    }
}
