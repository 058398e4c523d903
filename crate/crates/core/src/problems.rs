//! Least-squares test systems `A = GᵀG`.
//!
//! Both generators discretize `-∇·(K∇u)` on the unit square with homogeneous
//! Dirichlet data using forward differences, writing the conductivity as
//! `K = B Bᵀ` so that the factor `G = Bᵀ∇⁺` is available explicitly. Unknowns
//! are interior nodes, numbered `k = i + nx·j` with `i` along x.

use std::f64::consts::PI;
use std::path::Path;

use log::warn;

use crate::error::{Error, Result};
use crate::mm;
use crate::sparse::{CsrMatrix, Pattern};

/// A factor `G` together with the cached normal matrix `A = GᵀG`.
#[derive(Clone, Debug)]
pub struct LeastSquaresSystem {
    pub g: CsrMatrix,
    pub a: CsrMatrix,
    pub rhs: Vec<f64>,
    pub label: String,
    /// Non-fatal issues found while assembling, e.g. a rank-deficient factor.
    pub warnings: Vec<String>,
}

impl LeastSquaresSystem {
    /// Builds `A = GᵀG` with the symbolic product so that cancellation never
    /// hides structural couplings. A missing right-hand side defaults to `A·1`.
    pub fn from_factor(
        g: CsrMatrix,
        rhs: Option<Vec<f64>>,
        label: impl Into<String>,
    ) -> Result<Self> {
        let a = g.transpose().spgemm(&g, Pattern::Symbolic)?;
        let n = a.n_rows();
        let rhs = match rhs {
            Some(r) if r.len() != n => {
                return Err(Error::Dim(format!(
                    "rhs has length {}, system has {n} unknowns",
                    r.len()
                )))
            }
            Some(r) => r,
            None => a.spmv(&vec![1.0; n])?,
        };
        let mut warnings = Vec::new();
        let zero_diag = a.diagonal().iter().filter(|&&d| d <= 0.0).count();
        if zero_diag > 0 {
            let msg = format!(
                "factor is rank deficient: {zero_diag} nonpositive diagonal entries in GᵀG"
            );
            warn!("{msg}");
            warnings.push(msg);
        }
        Ok(Self {
            g,
            a,
            rhs,
            label: label.into(),
            warnings,
        })
    }

    pub fn n(&self) -> usize {
        self.a.n_rows()
    }

    /// `x ↦ Gᵀ(G x)`.
    pub fn apply_factored(&self, x: &[f64]) -> Vec<f64> {
        let gx = self.g.spmv(x).expect("dimension checked by caller");
        self.g
            .spmv_transpose(&gx)
            .expect("dimension checked by caller")
    }
}

/// Rotated anisotropic diffusion, `K = Q(θ) diag(ε, 1) Q(θ)ᵀ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnisoParams {
    pub nx: usize,
    pub ny: usize,
    pub epsilon: f64,
    pub theta: f64,
}

impl AnisoParams {
    pub fn new(nx: usize, ny: usize, epsilon: f64, theta: f64) -> Self {
        Self {
            nx,
            ny,
            epsilon,
            theta,
        }
    }

    pub fn hx(&self) -> f64 {
        1.0 / (self.nx + 1) as f64
    }

    pub fn hy(&self) -> f64 {
        1.0 / (self.ny + 1) as f64
    }

    fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.ny < 2 {
            return Err(Error::Input(format!(
                "grid {}x{} too small (need >= 2x2)",
                self.nx, self.ny
            )));
        }
        if !(self.epsilon > 0.0) || !self.theta.is_finite() {
            return Err(Error::Input(format!(
                "invalid epsilon {} or theta {}",
                self.epsilon, self.theta
            )));
        }
        Ok(())
    }
}

/// Closed-field-line heat conduction analogue: conduction `κ_∥` along the
/// circular field of `T = cos(π(x-½))cos(π(y-½))`, `κ_⊥` across it, plus an
/// implicit time-step mass term.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldParams {
    pub nx: usize,
    pub ny: usize,
    pub kpar: f64,
    pub kperp: f64,
    pub dt: f64,
}

impl FieldParams {
    fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.ny < 2 {
            return Err(Error::Input(format!(
                "grid {}x{} too small (need >= 2x2)",
                self.nx, self.ny
            )));
        }
        if !(self.kperp > 0.0 && self.kpar >= self.kperp && self.dt > 0.0) {
            return Err(Error::Input(format!(
                "need kpar >= kperp > 0 and dt > 0 (kpar {}, kperp {}, dt {})",
                self.kpar, self.kperp, self.dt
            )));
        }
        Ok(())
    }
}

/// Samples of `sin(πx) sin(πy)` at the interior nodes.
pub fn smooth_target(nx: usize, ny: usize) -> Vec<f64> {
    let (hx, hy) = (1.0 / (nx + 1) as f64, 1.0 / (ny + 1) as f64);
    (0..nx * ny)
        .map(|k| {
            let (i, j) = (k % nx, k / nx);
            (PI * (i + 1) as f64 * hx).sin() * (PI * (j + 1) as f64 * hy).sin()
        })
        .collect()
}

/// Pushes the two rows `c[0]·D⁺ₓ + c[1]·D⁺ᵧ` of the local `Bᵀ` at every
/// grid point whose forward stencil touches an unknown: the interior nodes
/// plus the left and bottom boundary lines (the corner is skipped). Boundary
/// values are zero. Returns the number of rows written.
fn push_gradient_rows(
    nx: usize,
    ny: usize,
    bt: impl Fn(f64, f64) -> [[f64; 2]; 2],
    triplets: &mut Vec<(usize, usize, f64)>,
) -> usize {
    let (hx, hy) = (1.0 / (nx + 1) as f64, 1.0 / (ny + 1) as f64);
    let node = |i: isize, j: isize| -> Option<usize> {
        (i >= 0 && j >= 0 && (i as usize) < nx && (j as usize) < ny)
            .then(|| i as usize + nx * j as usize)
    };
    let mut row = 0;
    for j in -1..ny as isize {
        for i in -1..nx as isize {
            if i < 0 && j < 0 {
                continue;
            }
            let c = bt((i + 1) as f64 * hx, (j + 1) as f64 * hy);
            for [cx, cy] in c {
                if let Some(k) = node(i, j) {
                    triplets.push((row, k, -cx / hx - cy / hy));
                }
                if let Some(k) = node(i + 1, j) {
                    triplets.push((row, k, cx / hx));
                }
                if let Some(k) = node(i, j + 1) {
                    triplets.push((row, k, cy / hy));
                }
                row += 1;
            }
        }
    }
    row
}

/// Number of gradient rows produced for an `nx × ny` grid.
pub fn gradient_row_count(nx: usize, ny: usize) -> usize {
    2 * ((nx + 1) * (ny + 1) - 1)
}

fn with_smooth_rhs(
    g: CsrMatrix,
    nx: usize,
    ny: usize,
    label: String,
) -> Result<LeastSquaresSystem> {
    let mut sys = LeastSquaresSystem::from_factor(g, None, label)?;
    sys.rhs = sys.a.spmv(&smooth_target(nx, ny))?;
    Ok(sys)
}

/// `G = Bᵀ∇⁺` with `Bᵀ = diag(√ε, 1) Q(θ)ᵀ`, rows as in
/// [`gradient_row_count`]. The right-hand side is `A s` for the smooth target
/// `s` of [`smooth_target`].
pub fn build_rotated_aniso(p: &AnisoParams) -> Result<LeastSquaresSystem> {
    p.validate()?;
    let (s, c) = p.theta.sin_cos();
    let se = p.epsilon.sqrt();
    let bt = [[se * c, se * s], [-s, c]];
    let n = p.nx * p.ny;
    let mut triplets = Vec::with_capacity(6 * n);
    let m = push_gradient_rows(p.nx, p.ny, |_, _| bt, &mut triplets);
    let g = CsrMatrix::from_triplets(m, n, &triplets)?;
    with_smooth_rhs(
        g,
        p.nx,
        p.ny,
        format!(
            "rotated_aniso nx={} ny={} eps={:e} theta={:.4}",
            p.nx, p.ny, p.epsilon, p.theta
        ),
    )
}

/// Unit field direction at `(x, y)`; `(1, 0)` where the field vanishes.
pub fn field_direction(x: f64, y: f64) -> [f64; 2] {
    let (sx, cx) = (PI * (x - 0.5)).sin_cos();
    let (sy, cy) = (PI * (y - 0.5)).sin_cos();
    let dtdx = -PI * sx * cy;
    let dtdy = -PI * cx * sy;
    let (bx, by) = (-dtdy, dtdx);
    let norm = bx.hypot(by);
    if norm < 1e-14 {
        [1.0, 0.0]
    } else {
        [bx / norm, by / norm]
    }
}

/// Gradient rows with node-dependent `Bᵀ = [√κ_∥ bᵀ; √κ_⊥ b⊥ᵀ]` followed by
/// `n` rows `√(1/Δt) eᵢᵀ`, so `A = -∇⁻·(K∇⁺) + I/Δt`.
pub fn build_closed_fieldline(p: &FieldParams) -> Result<LeastSquaresSystem> {
    p.validate()?;
    let n = p.nx * p.ny;
    let (sp, sq) = (p.kpar.sqrt(), p.kperp.sqrt());
    let mut triplets = Vec::with_capacity(7 * n);
    let m = push_gradient_rows(
        p.nx,
        p.ny,
        |x, y| {
            let [bx, by] = field_direction(x, y);
            [[sp * bx, sp * by], [-sq * by, sq * bx]]
        },
        &mut triplets,
    );
    let mass = (1.0 / p.dt).sqrt();
    triplets.extend((0..n).map(|k| (m + k, k, mass)));
    let g = CsrMatrix::from_triplets(m + n, n, &triplets)?;
    with_smooth_rhs(
        g,
        p.nx,
        p.ny,
        format!(
            "closed_fieldline nx={} ny={} kpar={:e} kperp={:e} dt={:e}",
            p.nx, p.ny, p.kpar, p.kperp, p.dt
        ),
    )
}

/// Loads `G` (and optionally `b`) from Matrix Market files. Without a
/// right-hand side file, `b = Gᵀ(G·1)`.
pub fn load_system(
    g_path: impl AsRef<Path>,
    rhs_path: Option<&Path>,
) -> Result<LeastSquaresSystem> {
    let g_path = g_path.as_ref();
    let g = mm::read_matrix(g_path)?;
    let rhs = rhs_path.map(mm::read_vector).transpose()?;
    LeastSquaresSystem::from_factor(g, rhs, format!("mtx {}", g_path.display()))
}
