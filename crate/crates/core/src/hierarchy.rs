//! Multilevel setup and the V-cycle preconditioner.

use log::{debug, info};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aggregation::{build_topology, multi_pass_aggregation, AggregateTopology};
use crate::dense::SpdFactor;
use crate::error::{Error, Result};
use crate::smoother::{SchwarzMode, SchwarzSmoother};
use crate::sparse::{relative_frobenius_error, CsrMatrix, DenseMatrix, Pattern};
use crate::splitting::{
    assemble_local, compute_row_sets, eigen_threshold, local_gevp, verify_splitting, RowSets,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LevelParams {
    /// Maximum number of levels, coarsest included.
    pub l_max: usize,
    /// Stop coarsening once a level has at most this many unknowns.
    pub n_coarse: usize,
    /// Aggregation passes per level.
    pub n_agg: usize,
    pub kappa: f64,
    /// Minimum coarsening ratio per level; the last entry repeats.
    pub c_min: Vec<usize>,
    pub pre_sweeps: usize,
    pub post_sweeps: usize,
}

impl Default for LevelParams {
    fn default() -> Self {
        Self {
            l_max: 10,
            n_coarse: 400,
            n_agg: 1,
            kappa: 50.0,
            c_min: vec![2, 3],
            pre_sweeps: 1,
            post_sweeps: 1,
        }
    }
}

impl LevelParams {
    pub fn with_c_min(c_min: &[usize]) -> Self {
        Self {
            c_min: c_min.to_vec(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.l_max < 2 {
            return Err(Error::Input(format!(
                "l_max must be at least 2, got {}",
                self.l_max
            )));
        }
        if self.n_coarse == 0 || self.n_agg == 0 || self.pre_sweeps == 0 || self.post_sweeps == 0 {
            return Err(Error::Input(
                "n_coarse, n_agg and sweep counts must be positive".into(),
            ));
        }
        if !(self.kappa > 1.0) {
            return Err(Error::Input(format!(
                "kappa must exceed 1, got {}",
                self.kappa
            )));
        }
        if self.c_min.is_empty() || self.c_min.iter().any(|&c| c < 2) {
            return Err(Error::Input(format!(
                "c_min entries must be >= 2, got {:?}",
                self.c_min
            )));
        }
        Ok(())
    }

    pub fn c_min_at(&self, level: usize) -> usize {
        self.c_min[level.min(self.c_min.len() - 1)]
    }
}

/// Per-level numbers reported in the hierarchy summary.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LevelStats {
    pub level: usize,
    pub dim: usize,
    pub nnz: usize,
    pub nnz_g: usize,
    pub n_aggregates: usize,
    pub n_colors: usize,
    pub n_mult: usize,
    pub thresh: f64,
    pub c_min: usize,
    /// Columns of `P`, i.e. the next level's dimension.
    pub modes_kept: usize,
    pub modes_infinite: usize,
    /// Aggregates where the `|ω_i|/c_min` cap dropped modes above the threshold.
    pub n_capped: usize,
    /// Largest generalized eigenvalue left out of the coarse space, at least
    /// `thresh`; infinite if an infinite mode was dropped.
    #[serde(with = "crate::float_serde")]
    pub tau_eff: f64,
    pub max_block: usize,
    pub n_jittered: usize,
}

/// A level that smooths and restricts.
#[derive(Clone, Debug)]
pub struct Level {
    pub a: CsrMatrix,
    pub g: CsrMatrix,
    pub p: CsrMatrix,
    pub topology: AggregateTopology,
    pub rowsets: RowSets,
    pub smoother: SchwarzSmoother,
    /// Generalized eigenvalues of every aggregate, descending.
    pub spectra: Vec<Vec<f64>>,
    pub stats: LevelStats,
}

#[derive(Clone, Debug)]
pub struct CoarseLevel {
    pub a: CsrMatrix,
    pub g: CsrMatrix,
    pub factor: SpdFactor,
}

#[derive(Clone, Debug)]
pub struct Hierarchy {
    pub levels: Vec<Level>,
    pub coarse: CoarseLevel,
    pub params: LevelParams,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HierarchySummary {
    pub n_levels: usize,
    pub levels: Vec<LevelStats>,
    pub coarse_dim: usize,
    pub coarse_nnz: usize,
    pub operator_complexity: f64,
    pub params: LevelParams,
}

/// Stacks the panels block-diagonally: column group `i` lives on rows `ω_i`.
pub fn assemble_p(topology: &AggregateTopology, panels: &[DenseMatrix]) -> Result<CsrMatrix> {
    if panels.len() != topology.n_aggregates() {
        return Err(Error::Dim(format!(
            "{} panels for {} aggregates",
            panels.len(),
            topology.n_aggregates()
        )));
    }
    let mut triplets = Vec::new();
    let mut col = 0;
    for (i, (omega, z)) in topology.omega.iter().zip(panels).enumerate() {
        if z.ncols() == 0 {
            return Err(Error::Setup(format!(
                "aggregate {i} has an empty coarse panel"
            )));
        }
        if z.nrows() != omega.len() {
            return Err(Error::Dim(format!(
                "panel {i} has {} rows, aggregate has {} nodes",
                z.nrows(),
                omega.len()
            )));
        }
        for c in 0..z.ncols() {
            for (r, &node) in omega.iter().enumerate() {
                triplets.push((node, col + c, z[(r, c)]));
            }
        }
        col += z.ncols();
    }
    CsrMatrix::from_triplets(topology.n_nodes, col, &triplets)
}

fn build_level(a: CsrMatrix, g: CsrMatrix, params: &LevelParams, level: usize) -> Result<Level> {
    let partition = multi_pass_aggregation(&a, params.n_agg)?;
    let mut topology = build_topology(&a, &partition)?;
    let smoother = SchwarzSmoother::new(&a, &topology)?;
    let rowsets = compute_row_sets(&g, &mut topology)?;
    let thresh = eigen_threshold(params.kappa, topology.n_colors, rowsets.n_mult);
    let c_min = params.c_min_at(level);
    let modes = (0..topology.n_aggregates())
        .into_par_iter()
        .map(|i| {
            let blocks = assemble_local(i, &g, &topology, &rowsets)?;
            let max_modes = (topology.omega[i].len() / c_min).max(1);
            local_gevp(&blocks, thresh, max_modes)
                .map_err(|e| Error::Setup(format!("level {level}, aggregate {i}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let panels: Vec<DenseMatrix> = modes.iter().map(|m| m.panel.clone()).collect();
    let p = assemble_p(&topology, &panels)?;
    let stats = LevelStats {
        level,
        dim: a.n_rows(),
        nnz: a.nnz(),
        nnz_g: g.nnz(),
        n_aggregates: topology.n_aggregates(),
        n_colors: topology.n_colors,
        n_mult: rowsets.n_mult,
        thresh,
        c_min,
        modes_kept: p.n_cols(),
        modes_infinite: modes
            .iter()
            .map(|m| m.kept.iter().filter(|v| v.is_infinite()).count())
            .sum(),
        n_capped: modes
            .iter()
            .filter(|m| m.spectrum.iter().filter(|&&v| v > thresh).count() > m.kept.len())
            .count(),
        tau_eff: modes
            .iter()
            .filter_map(|m| m.spectrum.get(m.kept.len()).copied())
            .fold(thresh, f64::max),
        max_block: smoother.block_sizes().into_iter().max().unwrap_or(0),
        n_jittered: smoother.n_jittered(),
    };
    Ok(Level {
        a,
        g,
        p,
        topology,
        rowsets,
        smoother,
        spectra: modes.into_iter().map(|m| m.spectrum).collect(),
        stats,
    })
}

impl Hierarchy {
    /// Builds all levels from the finest factor `g0` and its normal matrix `a0`.
    pub fn setup(g0: &CsrMatrix, a0: &CsrMatrix, params: &LevelParams) -> Result<Self> {
        params.validate()?;
        if a0.n_rows() != a0.n_cols() || g0.n_cols() != a0.n_rows() {
            return Err(Error::Dim(format!(
                "G is {}x{}, A is {}x{}",
                g0.n_rows(),
                g0.n_cols(),
                a0.n_rows(),
                a0.n_cols()
            )));
        }
        let (mut a, mut g) = (a0.clone(), g0.clone());
        let mut levels = Vec::new();
        while a.n_rows() > params.n_coarse && levels.len() + 1 < params.l_max {
            let lvl = levels.len();
            let level = build_level(a, g, params, lvl)?;
            let (n, nc) = (level.a.n_rows(), level.p.n_cols());
            if nc >= n {
                return Err(Error::Setup(format!(
                    "stagnant coarsening at level {lvl}: {n} -> {nc} unknowns"
                )));
            }
            info!(
                "level {lvl}: n = {n}, nnz = {}, aggregates = {}, k_c = {}, n_mult = {}, thresh = {:.3}, coarse n = {nc}",
                level.stats.nnz, level.stats.n_aggregates, level.stats.n_colors, level.stats.n_mult, level.stats.thresh
            );
            g = level.g.spgemm(&level.p, Pattern::Symbolic)?;
            a = g.transpose().spgemm(&g, Pattern::Symbolic)?;
            levels.push(level);
        }
        debug!("coarsest level: n = {}, nnz = {}", a.n_rows(), a.nnz());
        let factor = SpdFactor::new(a.to_dense())
            .map_err(|e| Error::Setup(format!("coarsest level: {e}")))?;
        Ok(Self {
            levels,
            coarse: CoarseLevel { a, g, factor },
            params: params.clone(),
        })
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len() + 1
    }

    pub fn dim(&self) -> usize {
        self.a(0).n_rows()
    }

    pub fn a(&self, level: usize) -> &CsrMatrix {
        self.levels.get(level).map_or(&self.coarse.a, |l| &l.a)
    }

    pub fn g(&self, level: usize) -> &CsrMatrix {
        self.levels.get(level).map_or(&self.coarse.g, |l| &l.g)
    }

    pub fn operator_complexity(&self) -> f64 {
        let total: usize = (0..self.n_levels()).map(|l| self.a(l).nnz()).sum();
        total as f64 / self.a(0).nnz().max(1) as f64
    }

    /// `‖PᵀA_ℓP − A_{ℓ+1}‖_F / ‖PᵀA_ℓP‖_F` per level, with `A_{ℓ+1}` formed
    /// from `G_ℓP`.
    pub fn galerkin_errors(&self) -> Result<Vec<f64>> {
        self.levels
            .iter()
            .enumerate()
            .map(|(l, lvl)| {
                let ptap = lvl
                    .p
                    .transpose()
                    .spgemm(&lvl.a.spgemm(&lvl.p, Pattern::Numeric)?, Pattern::Numeric)?;
                Ok(relative_frobenius_error(&ptap, self.a(l + 1)))
            })
            .collect()
    }

    /// Splitting residual of every smoothing level.
    pub fn splitting_errors(&self) -> Result<Vec<f64>> {
        self.levels
            .iter()
            .map(|l| verify_splitting(&l.g, &l.a, &l.topology, &l.rowsets))
            .collect()
    }

    /// One V-cycle at `level`: RAS pre-smoothing, coarse correction, RAS-T
    /// post-smoothing.
    pub fn vcycle(&self, level: usize, r: &[f64]) -> Result<Vec<f64>> {
        let n = self.a(level).n_rows();
        if r.len() != n {
            return Err(Error::Dim(format!(
                "level {level} has {n} unknowns, residual has {}",
                r.len()
            )));
        }
        let Some(lvl) = self.levels.get(level) else {
            return Ok(self.coarse.factor.solve(r));
        };
        let mut e = vec![0.0; n];
        for _ in 0..self.params.pre_sweeps {
            let z = lvl
                .smoother
                .apply(SchwarzMode::Ras, &residual(&lvl.a, r, &e)?)?;
            axpy(&mut e, &z);
        }
        let rc = lvl.p.spmv_transpose(&residual(&lvl.a, r, &e)?)?;
        let ec = self.vcycle(level + 1, &rc)?;
        axpy(&mut e, &lvl.p.spmv(&ec)?);
        for _ in 0..self.params.post_sweeps {
            let z = lvl
                .smoother
                .apply(SchwarzMode::RasTranspose, &residual(&lvl.a, r, &e)?)?;
            axpy(&mut e, &z);
        }
        Ok(e)
    }

    /// The V-cycle on the finest level.
    pub fn apply(&self, r: &[f64]) -> Result<Vec<f64>> {
        self.vcycle(0, r)
    }

    /// Additive two-level operator on the finest level with an exact coarse solve.
    pub fn two_level_additive(&self) -> Result<TwoLevelAdditive<'_>> {
        self.two_level_additive_at(0)
    }

    /// Same as [`Hierarchy::two_level_additive`] between `level` and `level + 1`.
    pub fn two_level_additive_at(&self, level: usize) -> Result<TwoLevelAdditive<'_>> {
        let Some(lvl) = self.levels.get(level) else {
            return Err(Error::Input(format!(
                "two-level operator at level {level} needs a coarser level (hierarchy has {})",
                self.n_levels()
            )));
        };
        let coarse = SpdFactor::new(self.a(level + 1).to_dense())?;
        Ok(TwoLevelAdditive { level: lvl, coarse })
    }

    pub fn summary(&self) -> HierarchySummary {
        HierarchySummary {
            n_levels: self.n_levels(),
            levels: self.levels.iter().map(|l| l.stats.clone()).collect(),
            coarse_dim: self.coarse.a.n_rows(),
            coarse_nnz: self.coarse.a.nnz(),
            operator_complexity: self.operator_complexity(),
            params: self.params.clone(),
        }
    }
}

/// `P A_c⁻¹ Pᵀ + M_ASM⁻¹` on the finest level.
pub struct TwoLevelAdditive<'a> {
    level: &'a Level,
    coarse: SpdFactor,
}

impl TwoLevelAdditive<'_> {
    /// The largest coloring class count and threshold this operator was built with.
    pub fn k_c(&self) -> usize {
        self.level.stats.n_colors
    }

    pub fn thresh(&self) -> f64 {
        self.level.stats.thresh
    }

    /// Threshold the selected coarse space actually achieves.
    pub fn tau_eff(&self) -> f64 {
        self.level.stats.tau_eff
    }

    pub fn apply(&self, r: &[f64]) -> Result<Vec<f64>> {
        let mut z = self.level.smoother.apply(SchwarzMode::Asm, r)?;
        let ec = self.coarse.solve(&self.level.p.spmv_transpose(r)?);
        axpy(&mut z, &self.level.p.spmv(&ec)?);
        Ok(z)
    }

    /// `[(2 + (2k_c + 1)τ)⁻¹, k_c + 1]`.
    pub fn spectral_bounds(&self, tau: f64) -> (f64, f64) {
        let kc = self.k_c() as f64;
        (1.0 / (2.0 + (2.0 * kc + 1.0) * tau), kc + 1.0)
    }
}

fn residual(a: &CsrMatrix, r: &[f64], e: &[f64]) -> Result<Vec<f64>> {
    let ae = a.spmv(e)?;
    Ok(r.iter().zip(ae).map(|(ri, ai)| ri - ai).collect())
}

fn axpy(y: &mut [f64], x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += xi;
    }
}
