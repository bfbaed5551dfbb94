use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// A batch of equally long multivariate sequences, laid out
/// `[batch][time][feature]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceBatch {
    batch: usize,
    time: usize,
    features: usize,
    data: Vec<f64>,
}

impl SequenceBatch {
    pub fn new(batch: usize, time: usize, features: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != batch * time * features {
            return Err(Error::Shape {
                op: "SequenceBatch::new",
                left: (batch * time, features),
                right: (data.len(), 1),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("sequence batch construction".into()));
        }
        Ok(SequenceBatch {
            batch,
            time,
            features,
            data,
        })
    }

    /// Wraps one sequence given as a `time × features` matrix.
    pub fn single(sequence: &Matrix) -> Self {
        SequenceBatch {
            batch: 1,
            time: sequence.rows(),
            features: sequence.cols(),
            data: sequence.as_slice().to_vec(),
        }
    }

    /// Stacks `time × features` matrices of identical shape into one batch.
    pub fn from_sequences(sequences: &[Matrix]) -> Result<Self> {
        let first = sequences
            .first()
            .ok_or_else(|| Error::Data("cannot build an empty sequence batch".into()))?;
        let mut data = Vec::with_capacity(sequences.len() * first.len());
        for s in sequences {
            if s.shape() != first.shape() {
                return Err(Error::Shape {
                    op: "SequenceBatch::from_sequences",
                    left: first.shape(),
                    right: s.shape(),
                });
            }
            data.extend_from_slice(s.as_slice());
        }
        Ok(SequenceBatch {
            batch: sequences.len(),
            time: first.rows(),
            features: first.cols(),
            data,
        })
    }

    pub(crate) fn from_raw(batch: usize, time: usize, features: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), batch * time * features);
        SequenceBatch {
            batch,
            time,
            features,
            data,
        }
    }

    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn time(&self) -> usize {
        self.time
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn get(&self, b: usize, t: usize, f: usize) -> f64 {
        self.data[(b * self.time + t) * self.features + f]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// The `batch × features` slice at one timestep.
    pub fn timestep(&self, t: usize) -> Matrix {
        let mut out = Vec::with_capacity(self.batch * self.features);
        for b in 0..self.batch {
            let start = (b * self.time + t) * self.features;
            out.extend_from_slice(&self.data[start..start + self.features]);
        }
        Matrix::from_raw(self.batch, self.features, out)
    }

    pub(crate) fn time_major(&self) -> Vec<Matrix> {
        (0..self.time).map(|t| self.timestep(t)).collect()
    }

    /// Sub-batch of rows `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> SequenceBatch {
        let stride = self.time * self.features;
        SequenceBatch::from_raw(
            end - start,
            self.time,
            self.features,
            self.data[start * stride..end * stride].to_vec(),
        )
    }
}
