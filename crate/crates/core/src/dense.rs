//! Dense helpers: SPD factorization with a one-shot jitter retry, and panel
//! orthonormalization.

use nalgebra::{Cholesky, DVector, Dyn};

use crate::error::{Error, Result};
use crate::sparse::DenseMatrix;

/// Relative diagonal shift applied when a first factorization attempt fails.
pub const JITTER: f64 = 1e-12;

/// Cholesky factor of a symmetric positive definite block.
#[derive(Clone, Debug)]
pub struct SpdFactor {
    chol: Cholesky<f64, Dyn>,
    jittered: bool,
}

impl SpdFactor {
    /// Factorizes `m`; on breakdown retries once with `JITTER · max diag`
    /// added to the diagonal.
    pub fn new(m: DenseMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Dim(format!(
                "cannot factor {}x{} block",
                m.nrows(),
                m.ncols()
            )));
        }
        let shift = JITTER * m.diagonal().iter().fold(0.0f64, |a, &d| a.max(d.abs()));
        if let Some(chol) = Cholesky::new(m.clone()) {
            return Ok(Self {
                chol,
                jittered: false,
            });
        }
        let mut m = m;
        for i in 0..m.nrows() {
            m[(i, i)] += shift;
        }
        Cholesky::new(m)
            .map(|chol| Self {
                chol,
                jittered: true,
            })
            .ok_or_else(|| Error::Setup("Cholesky factorization failed after jitter".into()))
    }

    pub fn dim(&self) -> usize {
        self.chol.l_dirty().nrows()
    }

    pub fn jittered(&self) -> bool {
        self.jittered
    }

    /// Solves in place.
    pub fn solve_in_place(&self, rhs: &mut DVector<f64>) {
        self.chol.solve_mut(rhs);
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut v = DVector::from_column_slice(rhs);
        self.chol.solve_mut(&mut v);
        v.data.into()
    }
}

/// Orthonormal basis for the column span of `panel`, column order preserved
/// (Gram-Schmidt semantics: column `k` spans the same nested subspace). Each
/// column is signed so that its largest-magnitude entry is positive.
pub fn orthonormalize(panel: &DenseMatrix) -> DenseMatrix {
    let k = panel.ncols().min(panel.nrows());
    let qr = panel.clone().qr();
    let mut q = qr.q().columns(0, k).into_owned();
    for mut col in q.column_iter_mut() {
        let imax = col.iamax();
        if col[imax] < 0.0 {
            col.neg_mut();
        }
    }
    q
}
