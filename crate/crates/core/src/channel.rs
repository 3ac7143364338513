//! Discrete memoryless channels as row-stochastic matrices.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::types::{Distribution, Symbol, MAX_ALPHABET};

/// `W(y|x)`: one probability row over the output alphabet per input symbol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct ChannelMatrix {
    inputs: usize,
    outputs: usize,
    entries: Vec<f64>,
    cumulative: Vec<f64>,
}

impl ChannelMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let inputs = rows.len();
        if inputs == 0 || inputs > MAX_ALPHABET {
            return domain(format!("channel with {inputs} inputs"));
        }
        let outputs = rows[0].len();
        if outputs == 0 || outputs > MAX_ALPHABET {
            return domain(format!("channel with {outputs} outputs"));
        }
        let mut entries = Vec::with_capacity(inputs * outputs);
        for (x, row) in rows.into_iter().enumerate() {
            if row.len() != outputs {
                return domain(format!("row {x} has {} entries, expected {outputs}", row.len()));
            }
            Distribution::new(row.clone())
                .map_err(|e| crate::Error::Domain(format!("row {x}: {e}")))?;
            entries.extend(row);
        }
        let mut cumulative = entries.clone();
        for row in cumulative.chunks_mut(outputs) {
            let mut acc = 0.0;
            for v in row.iter_mut() {
                acc += *v;
                *v = acc;
            }
        }
        Ok(Self {
            inputs,
            outputs,
            entries,
            cumulative,
        })
    }

    pub fn bsc(eps: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eps) {
            return domain(format!("crossover probability {eps} outside [0,1]"));
        }
        Self::new(vec![vec![1.0 - eps, eps], vec![eps, 1.0 - eps]])
    }

    pub fn identity(k: usize) -> Result<Self> {
        Self::new(
            (0..k)
                .map(|x| (0..k).map(|y| if x == y { 1.0 } else { 0.0 }).collect())
                .collect(),
        )
    }

    /// Every input produces the output symbol `y`.
    pub fn constant_output(inputs: usize, outputs: usize, y: usize) -> Result<Self> {
        if y >= outputs {
            return domain("constant output symbol outside the output alphabet");
        }
        Self::new(
            (0..inputs)
                .map(|_| (0..outputs).map(|b| if b == y { 1.0 } else { 0.0 }).collect())
                .collect(),
        )
    }

    /// Rows drawn uniformly from the simplex (normalized exponentials).
    pub fn random<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Result<Self> {
        let rows = (0..inputs)
            .map(|_| {
                let raw: Vec<f64> = (0..outputs)
                    .map(|_| -(1.0 - rng.gen::<f64>()).ln())
                    .collect();
                let s: f64 = raw.iter().sum();
                let mut row: Vec<f64> = raw.iter().map(|v| v / s).collect();
                let fix = 1.0 - row.iter().sum::<f64>();
                row[0] += fix;
                row
            })
            .collect();
        Self::new(rows)
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.entries[x * self.outputs..(x + 1) * self.outputs]
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.entries[x * self.outputs + y]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.outputs).map(|r| r.to_vec()).collect()
    }

    /// Output symbol for input `x` given a uniform variate `u ∈ [0,1)`.
    pub fn sample_with(&self, x: Symbol, u: f64) -> Symbol {
        let row = &self.cumulative[x as usize * self.outputs..(x as usize + 1) * self.outputs];
        let y = row.partition_point(|&c| c <= u);
        // Rounding can leave the last cumulative entry a hair below 1.
        let mut y = y.min(self.outputs - 1);
        while self.get(x as usize, y) == 0.0 && y > 0 {
            y -= 1;
        }
        y as Symbol
    }
}

impl TryFrom<Vec<Vec<f64>>> for ChannelMatrix {
    type Error = crate::Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(rows)
    }
}

impl From<ChannelMatrix> for Vec<Vec<f64>> {
    fn from(w: ChannelMatrix) -> Self {
        w.rows()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampling_respects_support() {
        let w = ChannelMatrix::new(vec![vec![0.0, 1.0, 0.0], vec![0.5, 0.0, 0.5]]).unwrap();
        for i in 0..1000 {
            let u = i as f64 / 1000.0;
            assert_eq!(w.sample_with(0, u), 1);
            assert_ne!(w.sample_with(1, u), 1);
        }
        assert_eq!(w.sample_with(1, 0.25), 0);
        assert_eq!(w.sample_with(1, 0.75), 2);
    }

    #[test]
    fn json_round_trip() {
        let w = ChannelMatrix::bsc(0.1).unwrap();
        let s = serde_json::to_string(&w).unwrap();
        assert_eq!(s, "[[0.9,0.1],[0.1,0.9]]");
        let back: ChannelMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, w);
        assert!(serde_json::from_str::<ChannelMatrix>("[[0.5,0.4]]").is_err());
    }
}
