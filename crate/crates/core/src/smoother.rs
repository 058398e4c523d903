//! Overlapping Schwarz smoothers over the subdomains `Ω_i`.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::aggregation::AggregateTopology;
use crate::dense::SpdFactor;
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Which side of the local solve the Boolean partition of unity sits on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SchwarzMode {
    /// Restricted additive Schwarz: solve on `Ω_i`, keep the `ω_i` entries.
    Ras,
    /// Transpose of RAS: zero the `Γ_i` residual entries, solve, add everything.
    RasTranspose,
    /// Plain additive Schwarz.
    Asm,
}

#[derive(Clone, Debug)]
struct Block {
    /// `ω_i` then `Γ_i`.
    indices: Vec<usize>,
    n_interior: usize,
    factor: SpdFactor,
}

/// Factorized principal blocks `A(Ω_i, Ω_i)`.
#[derive(Clone, Debug)]
pub struct SchwarzSmoother {
    blocks: Vec<Block>,
    n: usize,
}

impl SchwarzSmoother {
    pub fn new(a: &CsrMatrix, topology: &AggregateTopology) -> Result<Self> {
        if a.n_rows() != topology.n_nodes {
            return Err(Error::Dim(format!(
                "matrix has {} rows, topology has {} nodes",
                a.n_rows(),
                topology.n_nodes
            )));
        }
        let blocks = (0..topology.n_aggregates())
            .into_par_iter()
            .map(|i| {
                let indices = topology.omega_cap(i);
                let local = a.submatrix(&indices, &indices)?;
                let factor = SpdFactor::new(local)
                    .map_err(|e| Error::Setup(format!("smoother block {i}: {e}")))?;
                Ok(Block {
                    indices,
                    n_interior: topology.omega[i].len(),
                    factor,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            blocks,
            n: a.n_rows(),
        })
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Sizes `|Ω_i|`.
    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.indices.len()).collect()
    }

    /// Number of blocks that needed a diagonal shift to factor.
    pub fn n_jittered(&self) -> usize {
        self.blocks.iter().filter(|b| b.factor.jittered()).count()
    }

    /// `Σ_i R_iᵀ (·) A_i⁻¹ (·) R_i r` with the partition of unity placed per `mode`.
    pub fn apply(&self, mode: SchwarzMode, r: &[f64]) -> Result<Vec<f64>> {
        if r.len() != self.n {
            return Err(Error::Dim(format!(
                "smoother of size {} applied to length {}",
                self.n,
                r.len()
            )));
        }
        let local: Vec<DVector<f64>> = self
            .blocks
            .par_iter()
            .map(|b| {
                let mut v =
                    DVector::from_iterator(b.indices.len(), b.indices.iter().map(|&k| r[k]));
                if mode == SchwarzMode::RasTranspose {
                    v.rows_mut(b.n_interior, b.indices.len() - b.n_interior)
                        .fill(0.0);
                }
                b.factor.solve_in_place(&mut v);
                v
            })
            .collect();
        // Ordered reduction keeps results bit-reproducible.
        let mut out = vec![0.0; self.n];
        for (b, v) in self.blocks.iter().zip(&local) {
            let take = if mode == SchwarzMode::Ras {
                b.n_interior
            } else {
                b.indices.len()
            };
            for (&k, &x) in b.indices[..take].iter().zip(v.iter()) {
                out[k] += x;
            }
        }
        Ok(out)
    }
}
