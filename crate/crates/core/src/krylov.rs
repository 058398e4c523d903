//! Preconditioned conjugate gradients and convergence metrics.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::eigen::sym_eig;
use crate::error::{Error, Result};
use crate::sparse::{dot, norm2, DenseMatrix};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAXIT: usize = 1000;
/// Largest dimension [`precond_spectrum`] will densify.
pub const SPECTRUM_MAX_DIM: usize = 2000;

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// `‖r_k‖₂` for `k = 0..=iterations`.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    /// `ρ = (‖r_k‖/‖r₀‖)^{1/k}`.
    #[serde(with = "crate::float_serde")]
    pub avg_conv_factor: f64,
    /// `ln(0.1)/ln(ρ)`; infinite when `ρ ≥ 1`.
    #[serde(with = "crate::float_serde")]
    pub iters_to_tenth: f64,
    pub operator_complexity: f64,
    pub setup_seconds: f64,
    pub solve_seconds: f64,
}

impl SolveReport {
    pub fn relative_residual(&self) -> f64 {
        match (self.residual_history.first(), self.residual_history.last()) {
            (Some(r0), Some(rk)) => rk / r0,
            _ => f64::NAN,
        }
    }
}

/// Average convergence factor over `k` iterations and the matching iterations
/// per tenfold reduction.
pub fn convergence_metrics(r0: f64, rk: f64, k: usize) -> (f64, f64) {
    if k == 0 {
        return (0.0, 0.0);
    }
    let rho = (rk / r0).powf(1.0 / k as f64);
    let tenth = if rho < 1.0 {
        0.1f64.ln() / rho.ln()
    } else {
        f64::INFINITY
    };
    (rho, tenth)
}

/// PCG from a zero initial guess, stopping at `‖r_k‖ ≤ tol·‖r₀‖` or `maxit`.
pub fn pcg<A, B>(
    apply_a: A,
    apply_b: B,
    b: &[f64],
    tol: f64,
    maxit: usize,
) -> Result<(Vec<f64>, SolveReport)>
where
    A: Fn(&[f64]) -> Result<Vec<f64>>,
    B: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let start = std::time::Instant::now();
    let n = b.len();
    let r0 = norm2(b);
    if !(r0 > 0.0) || !r0.is_finite() {
        return Err(Error::Input(format!(
            "right-hand side must be nonzero and finite, ‖b‖ = {r0}"
        )));
    }
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z = apply_b(&r)?;
    let mut rz = dot(&r, &z);
    if !(rz > 0.0) {
        return Err(Error::Indefinite(format!(
            "preconditioner gives <r, z> = {rz:e} at iteration 0"
        )));
    }
    let mut p = z.clone();
    let mut history = vec![r0];
    let mut converged = false;
    for it in 1..=maxit {
        let ap = apply_a(&p)?;
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Indefinite(format!(
                "operator gives <p, Ap> = {pap:e} at iteration {it}"
            )));
        }
        let alpha = rz / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        let rn = norm2(&r);
        history.push(rn);
        if rn <= tol * r0 {
            converged = true;
            break;
        }
        z = apply_b(&r)?;
        let rz_next = dot(&r, &z);
        if !(rz_next > 0.0) {
            return Err(Error::Indefinite(format!(
                "preconditioner gives <r, z> = {rz_next:e} at iteration {it}"
            )));
        }
        let beta = rz_next / rz;
        rz = rz_next;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    let iterations = history.len() - 1;
    let (avg_conv_factor, iters_to_tenth) =
        convergence_metrics(r0, *history.last().unwrap(), iterations);
    let report = SolveReport {
        iterations,
        residual_history: history,
        converged,
        avg_conv_factor,
        iters_to_tenth,
        operator_complexity: 1.0,
        setup_seconds: 0.0,
        solve_seconds: start.elapsed().as_secs_f64(),
    };
    Ok((x, report))
}

/// Extreme eigenvalues of `B A` for symmetric positive definite `A` and
/// symmetric `B`, from dense matrices of dimension `n`.
pub fn precond_spectrum<A, B>(apply_a: A, apply_b: B, n: usize) -> Result<(f64, f64)>
where
    A: Fn(&[f64]) -> Result<Vec<f64>>,
    B: Fn(&[f64]) -> Result<Vec<f64>>,
{
    if n > SPECTRUM_MAX_DIM {
        return Err(Error::Size(format!(
            "dense spectrum limited to n <= {SPECTRUM_MAX_DIM}, got {n}"
        )));
    }
    if n == 0 {
        return Err(Error::Input("empty operator".into()));
    }
    let columns = |f: &dyn Fn(&[f64]) -> Result<Vec<f64>>| -> Result<DenseMatrix> {
        let mut m = DenseMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = f(&e)?;
            if col.len() != n {
                return Err(Error::Dim(format!(
                    "operator returned length {}, expected {n}",
                    col.len()
                )));
            }
            m.set_column(j, &DVector::from_vec(col));
            e[j] = 0.0;
        }
        Ok(m)
    };
    let a = columns(&apply_a)?;
    let b = columns(&apply_b)?;
    let a = (&a + a.transpose()) * 0.5;
    let l = a
        .cholesky()
        .ok_or_else(|| Error::Indefinite("operator is not positive definite".into()))?
        .l();
    // σ(BA) = σ(Lᵀ B L) when A = L Lᵀ.
    let eig = sym_eig(&(l.transpose() * b * &l))?;
    Ok((eig.values[0], eig.values[n - 1]))
}
