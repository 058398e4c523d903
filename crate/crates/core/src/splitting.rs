//! Local SPSD splitting of `A = GᵀG` over overlapping aggregates and the
//! reduced local generalized eigenproblems that define coarse basis vectors.
//!
//! For aggregate `i`, `nz_i` are the rows of `G` with a stored entry in the
//! columns `ω_i`. Every such row has all of its stored columns inside
//! `Ω_i = ω_i ∪ Γ_i` because `Γ_i` comes from the symbolic pattern of `GᵀG`.
//! Weighting each row by the reciprocal of the number of aggregates that
//! claim it gives `A = Σ_i R_iᵀ Ã_i R_i` with every `Ã_i` semidefinite.

use log::debug;

use crate::aggregation::AggregateTopology;
use crate::eigen::spsd_gevp;
use crate::error::{Error, Result};
use crate::sparse::{relative_frobenius_error, CsrMatrix, DenseMatrix};

/// Relative cutoff below which eigenvalues of a semidefinite block count as zero.
pub const TAU_REL: f64 = 1e-10;

/// Largest relative error tolerated by [`verify_splitting`].
pub const SPLITTING_LIMIT: f64 = 1e-12;

/// Row sets `nz_i` and row multiplicities of the factor.
#[derive(Clone, Debug)]
pub struct RowSets {
    pub nz: Vec<Vec<usize>>,
    pub multiplicity: Vec<usize>,
    pub n_mult: usize,
}

/// Computes `nz_i` for every aggregate and records `max_j M(j)` in the topology.
pub fn compute_row_sets(g: &CsrMatrix, topology: &mut AggregateTopology) -> Result<RowSets> {
    if g.n_cols() != topology.n_nodes {
        return Err(Error::Dim(format!(
            "factor has {} columns, topology has {} nodes",
            g.n_cols(),
            topology.n_nodes
        )));
    }
    let gt = g.transpose();
    let mut multiplicity = vec![0usize; g.n_rows()];
    let mut mark = vec![usize::MAX; g.n_rows()];
    let nz: Vec<Vec<usize>> = topology
        .omega
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let mut rows = Vec::new();
            for &c in w {
                for &r in gt.row(c).0 {
                    if mark[r] != i {
                        mark[r] = i;
                        rows.push(r);
                    }
                }
            }
            rows.sort_unstable();
            for &r in &rows {
                multiplicity[r] += 1;
            }
            rows
        })
        .collect();
    let empty_rows = multiplicity.iter().filter(|&&m| m == 0).count();
    if empty_rows > 0 {
        debug!("{empty_rows} structurally empty rows in the factor");
    }
    let n_mult = multiplicity.iter().copied().max().unwrap_or(0);
    topology.multiplicity_max = n_mult;
    Ok(RowSets {
        nz,
        multiplicity,
        n_mult,
    })
}

/// Dense blocks `G(nz_i, ω_i)`, `G(nz_i, Γ_i)` and the row weights `1/M(j)`.
#[derive(Clone, Debug)]
pub struct LocalBlocks {
    pub g_omega: DenseMatrix,
    pub g_gamma: DenseMatrix,
    pub weights: Vec<f64>,
}

impl LocalBlocks {
    fn weighted(&self, m: &DenseMatrix) -> DenseMatrix {
        let mut out = m.clone();
        for (mut row, &w) in out.row_iter_mut().zip(&self.weights) {
            row *= w;
        }
        out
    }

    /// `Ã_i = [G_ω G_Γ]ᵀ W [G_ω G_Γ]` over `ω_i` then `Γ_i`.
    pub fn a_tilde(&self) -> DenseMatrix {
        let (nw, ng) = (self.g_omega.ncols(), self.g_gamma.ncols());
        let mut full = DenseMatrix::zeros(self.g_omega.nrows(), nw + ng);
        full.columns_mut(0, nw).copy_from(&self.g_omega);
        full.columns_mut(nw, ng).copy_from(&self.g_gamma);
        full.transpose() * self.weighted(&full)
    }

    /// `G_ωᵀ G_ω`, unweighted: the principal block `A(ω_i, ω_i)`.
    pub fn omega_energy(&self) -> DenseMatrix {
        self.g_omega.transpose() * &self.g_omega
    }

    /// Schur complement of `Ã_i` onto `ω_i`, with a spectral pseudoinverse of
    /// the `Γ_i` block.
    pub fn schur_omega(&self) -> Result<DenseMatrix> {
        let wgw = self.weighted(&self.g_omega);
        let s_ww = self.g_omega.transpose() * &wgw;
        if self.g_gamma.ncols() == 0 {
            return Ok(s_ww);
        }
        let s_gw = self.g_gamma.transpose() * &wgw;
        let s_gg = self.g_gamma.transpose() * self.weighted(&self.g_gamma);
        let pinv = spectral_pinv(&s_gg)?;
        let s = s_ww - s_gw.transpose() * pinv * &s_gw;
        Ok((&s + s.transpose()) * 0.5)
    }
}

/// Pseudoinverse of a symmetric semidefinite block, dropping eigenvalues at
/// or below `TAU_REL · λ_max`.
fn spectral_pinv(m: &DenseMatrix) -> Result<DenseMatrix> {
    let e = crate::eigen::sym_eig(m)?;
    let lmax = e.values.last().copied().unwrap_or(0.0);
    let mut out = DenseMatrix::zeros(m.nrows(), m.ncols());
    if lmax <= 0.0 {
        return Ok(out);
    }
    for (k, &lam) in e.values.iter().enumerate() {
        if lam > TAU_REL * lmax {
            let v = e.vectors.column(k);
            out += v * v.transpose() / lam;
        }
    }
    Ok(out)
}

pub fn assemble_local(
    i: usize,
    g: &CsrMatrix,
    topology: &AggregateTopology,
    rowsets: &RowSets,
) -> Result<LocalBlocks> {
    if i >= topology.n_aggregates() {
        return Err(Error::Index(format!(
            "aggregate {i} of {}",
            topology.n_aggregates()
        )));
    }
    let nz = &rowsets.nz[i];
    Ok(LocalBlocks {
        g_omega: g.submatrix(nz, &topology.omega[i])?,
        g_gamma: g.submatrix(nz, &topology.gamma[i])?,
        weights: nz
            .iter()
            .map(|&r| 1.0 / rowsets.multiplicity[r] as f64)
            .collect(),
    })
}

/// Assembles `Σ_i R_iᵀ Ã_i R_i` and returns its relative Frobenius distance
/// to `GᵀG`. Fails with [`Error::Splitting`] above [`SPLITTING_LIMIT`].
pub fn verify_splitting(
    g: &CsrMatrix,
    a: &CsrMatrix,
    topology: &AggregateTopology,
    rowsets: &RowSets,
) -> Result<f64> {
    let n = topology.n_nodes;
    let mut triplets = Vec::new();
    for i in 0..topology.n_aggregates() {
        let blocks = assemble_local(i, g, topology, rowsets)?;
        let at = blocks.a_tilde();
        let idx = topology.omega_cap(i);
        for (p, &r) in idx.iter().enumerate() {
            for (q, &c) in idx.iter().enumerate() {
                triplets.push((r, c, at[(p, q)]));
            }
        }
    }
    let sum = CsrMatrix::from_triplets(n, n, &triplets)?;
    let error = relative_frobenius_error(&sum, a);
    if error > SPLITTING_LIMIT {
        return Err(Error::Splitting {
            error,
            limit: SPLITTING_LIMIT,
        });
    }
    Ok(error)
}

/// Selected coarse modes of one aggregate.
#[derive(Clone, Debug)]
pub struct LocalModes {
    /// `|ω_i| × k_i`, orthonormal columns.
    pub panel: DenseMatrix,
    /// Generalized eigenvalues of the kept modes, descending (`∞` first).
    pub kept: Vec<f64>,
    /// Full returned spectrum, descending.
    pub spectrum: Vec<f64>,
}

/// Solves `G_ωᵀG_ω u = λ S̃_ω u` and keeps the modes with `λ > thresh`
/// (infinite ones first), at most `max_modes`, and always at least one.
pub fn local_gevp(blocks: &LocalBlocks, thresh: f64, max_modes: usize) -> Result<LocalModes> {
    if !(thresh > 0.0) || max_modes == 0 {
        return Err(Error::Input(format!(
            "need thresh > 0 and max_modes >= 1 (got {thresh}, {max_modes})"
        )));
    }
    let n = blocks.g_omega.ncols();
    if n == 0 {
        return Err(Error::Input("aggregate has no interior nodes".into()));
    }
    let l = blocks.omega_energy();
    let s = blocks.schur_omega()?;
    let pairs = spsd_gevp(&l, &s, TAU_REL)?;
    let n_above = pairs.values.iter().take_while(|&&v| v > thresh).count();
    let k = n_above.min(max_modes).max(1);
    let panel = if pairs.is_empty() {
        // L and S̃ vanish together (no rows touch ω_i): fall back to a constant.
        DenseMatrix::from_element(n, 1, 1.0 / (n as f64).sqrt())
    } else {
        let k = k.min(pairs.len());
        crate::dense::orthonormalize(&pairs.vectors.columns(0, k).into_owned())
    };
    let k = panel.ncols();
    Ok(LocalModes {
        panel,
        kept: pairs.values.iter().take(k).copied().collect(),
        spectrum: pairs.values,
    })
}

/// `max{0.1, (κ − k_c) / (k_c · n_mult)}`.
pub fn eigen_threshold(kappa: f64, n_colors: usize, n_mult: usize) -> f64 {
    let kc = n_colors.max(1) as f64;
    let nm = n_mult.max(1) as f64;
    if kappa <= kc {
        log::warn!("kappa {kappa} does not exceed the color count {n_colors}; using the 0.1 floor");
        return 0.1;
    }
    f64::max(0.1, (kappa - kc) / (kc * nm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregation::{build_topology, multi_pass_aggregation, Partition};
    use crate::problems::{build_rotated_aniso, AnisoParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gradient_1d(n: usize) -> CsrMatrix {
        // Row r couples nodes r and r+1; the last row is a Dirichlet closure.
        let mut t = Vec::new();
        for r in 0..n {
            t.push((r, r, -1.0));
            if r + 1 < n {
                t.push((r, r + 1, 1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, &t).unwrap()
    }

    fn topo_for(g: &CsrMatrix, assignment: Vec<usize>) -> (CsrMatrix, AggregateTopology) {
        let a = g
            .transpose()
            .spgemm(g, crate::sparse::Pattern::Symbolic)
            .unwrap();
        let t = build_topology(&a, &Partition::new(assignment).unwrap()).unwrap();
        (a, t)
    }

    #[test]
    fn identity_factor_singletons() {
        let g = CsrMatrix::identity(4);
        let (a, mut t) = topo_for(&g, vec![0, 1, 2, 3]);
        let rs = compute_row_sets(&g, &mut t).unwrap();
        assert_eq!(rs.nz, vec![vec![0], vec![1], vec![2], vec![3]]);
        assert!(rs.multiplicity.iter().all(|&m| m == 1));
        assert_eq!(t.multiplicity_max, 1);
        let b = assemble_local(2, &g, &t, &rs).unwrap();
        assert_eq!(b.a_tilde(), DenseMatrix::identity(1, 1));
        assert_eq!(verify_splitting(&g, &a, &t, &rs).unwrap(), 0.0);
    }

    #[test]
    fn shared_row_has_multiplicity_two() {
        let g = gradient_1d(6);
        let (_, mut t) = topo_for(&g, vec![0, 0, 0, 1, 1, 1]);
        let rs = compute_row_sets(&g, &mut t).unwrap();
        // Row 2 couples nodes 2 and 3.
        assert_eq!(rs.nz[0], vec![0, 1, 2]);
        assert_eq!(rs.nz[1], vec![2, 3, 4, 5]);
        assert_eq!(rs.multiplicity[2], 2);
        assert_eq!(rs.n_mult, 2);
        let total: usize = rs.nz.iter().map(Vec::len).sum();
        assert_eq!(total, rs.multiplicity.iter().sum::<usize>());
    }

    #[test]
    fn empty_row_set_gives_zero_blocks() {
        // Column 1 is structurally zero.
        let g = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 0, 2.0)]).unwrap();
        let (_, mut t) = topo_for(&g, vec![0, 1]);
        let rs = compute_row_sets(&g, &mut t).unwrap();
        assert!(rs.nz[1].is_empty());
        let b = assemble_local(1, &g, &t, &rs).unwrap();
        assert_eq!(b.a_tilde(), DenseMatrix::zeros(1, 1));
    }

    #[test]
    fn local_matrix_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut trip = Vec::new();
        for r in 0..10 {
            for c in 0..6 {
                if rng.gen::<f64>() < 0.35 {
                    trip.push((r, c, rng.gen_range(-1.0..1.0)));
                }
            }
        }
        let g = CsrMatrix::from_triplets(10, 6, &trip).unwrap();
        let (a, mut t) = topo_for(&g, vec![0, 0, 0, 1, 1, 1]);
        let rs = compute_row_sets(&g, &mut t).unwrap();
        let gd = g.to_dense();
        for i in 0..2 {
            let b = assemble_local(i, &g, &t, &rs).unwrap();
            let idx = t.omega_cap(i);
            let mut oracle = DenseMatrix::zeros(idx.len(), idx.len());
            for r in 0..10 {
                let m = (0..2)
                    .filter(|&k| t.omega[k].iter().any(|&c| gd[(r, c)] != 0.0))
                    .count();
                if !t.omega[i].iter().any(|&c| gd[(r, c)] != 0.0) {
                    continue;
                }
                for (p, &cp) in idx.iter().enumerate() {
                    for (q, &cq) in idx.iter().enumerate() {
                        oracle[(p, q)] += gd[(r, cp)] * gd[(r, cq)] / m as f64;
                    }
                }
            }
            assert!((b.a_tilde() - oracle).amax() <= 1e-14);
        }
        assert!(verify_splitting(&g, &a, &t, &rs).unwrap() <= 1e-13);
    }

    #[test]
    fn single_aggregate_reproduces_a() {
        let sys = build_rotated_aniso(&AnisoParams::new(5, 4, 1e-2, 0.7)).unwrap();
        let (a, mut t) = topo_for(&sys.g, vec![0; 20]);
        let rs = compute_row_sets(&sys.g, &mut t).unwrap();
        let b = assemble_local(0, &sys.g, &t, &rs).unwrap();
        assert!((b.a_tilde() - a.to_dense()).amax() <= 1e-12 * a.to_dense().amax());
        assert!(verify_splitting(&sys.g, &a, &t, &rs).unwrap() <= 1e-14);
    }

    #[test]
    fn splitting_identity_and_local_bounds_on_generated_problems() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for (eps, theta, passes) in [(1.0, 0.0, 1), (1e-4, 0.5, 1), (1e-6, 1.1, 2)] {
            let sys = build_rotated_aniso(&AnisoParams::new(10, 9, eps, theta)).unwrap();
            let part = multi_pass_aggregation(&sys.a, passes).unwrap();
            let mut t = build_topology(&sys.a, &part).unwrap();
            let rs = compute_row_sets(&sys.g, &mut t).unwrap();
            assert!(verify_splitting(&sys.g, &sys.a, &t, &rs).unwrap() <= 1e-13);

            let v: Vec<f64> = (0..sys.n()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let av = sys.a.spmv(&v).unwrap();
            let global: f64 = v.iter().zip(&av).map(|(a, b)| a * b).sum();
            for i in 0..t.n_aggregates() {
                let at = assemble_local(i, &sys.g, &t, &rs).unwrap().a_tilde();
                let vi = nalgebra::DVector::from_iterator(
                    at.nrows(),
                    t.omega_cap(i).iter().map(|&k| v[k]),
                );
                let local = vi.dot(&(&at * &vi));
                assert!(local >= -1e-12 * at.norm() * vi.norm_squared());
                assert!(local <= global * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn splitting_detects_numeric_overlap() {
        // Drop an overlap node: the claimed rows now reach outside Ω.
        let g = gradient_1d(6);
        let (a, mut t) = topo_for(&g, vec![0, 0, 0, 1, 1, 1]);
        t.gamma[0].clear();
        let rs = compute_row_sets(&g, &mut t).unwrap();
        assert!(matches!(
            verify_splitting(&g, &a, &t, &rs),
            Err(Error::Splitting { .. })
        ));
    }

    #[test]
    fn one_node_aggregate_has_single_unit_mode() {
        let g = gradient_1d(4);
        let (_, mut t) = topo_for(&g, vec![0, 1, 1, 1]);
        let rs = compute_row_sets(&g, &mut t).unwrap();
        let m = local_gevp(&assemble_local(0, &g, &t, &rs).unwrap(), 0.5, 3).unwrap();
        assert_eq!(m.panel.shape(), (1, 1));
        assert_eq!(m.panel[(0, 0)], 1.0);
    }

    #[test]
    fn isolated_aggregate_has_unit_spectrum() {
        // Block-diagonal factor: aggregates never share rows, so W = I and Γ = ∅.
        let g = CsrMatrix::from_triplets(
            4,
            4,
            &[
                (0, 0, 1.0),
                (0, 1, -1.0),
                (1, 1, 2.0),
                (2, 2, 1.0),
                (2, 3, 1.0),
                (3, 3, 3.0),
            ],
        )
        .unwrap();
        let (_, mut t) = topo_for(&g, vec![0, 0, 1, 1]);
        let rs = compute_row_sets(&g, &mut t).unwrap();
        assert!(t.gamma.iter().all(Vec::is_empty));
        let b = assemble_local(0, &g, &t, &rs).unwrap();
        let below = local_gevp(&b, 0.5, 5).unwrap();
        assert!(below.spectrum.iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert_eq!(below.panel.ncols(), 2);
        let capped = local_gevp(&b, 0.5, 1).unwrap();
        assert_eq!(capped.panel.ncols(), 1);
        // All λ = 1 < thresh: keep-one rule.
        let above = local_gevp(&b, 2.0, 5).unwrap();
        assert_eq!(above.panel.ncols(), 1);
    }

    #[test]
    fn gevp_pairs_satisfy_residual_bound() {
        let sys = build_rotated_aniso(&AnisoParams::new(12, 12, 1e-3, 0.5)).unwrap();
        let part = multi_pass_aggregation(&sys.a, 1).unwrap();
        let mut t = build_topology(&sys.a, &part).unwrap();
        let rs = compute_row_sets(&sys.g, &mut t).unwrap();
        for i in 0..t.n_aggregates() {
            let b = assemble_local(i, &sys.g, &t, &rs).unwrap();
            let l = b.omega_energy();
            let s = b.schur_omega().unwrap();
            let pairs = spsd_gevp(&l, &s, TAU_REL).unwrap();
            assert!(pairs.values.windows(2).all(|w| w[0] >= w[1]));
            for (j, &lam) in pairs.values.iter().enumerate() {
                let u = pairs.vectors.column(j);
                if lam.is_infinite() {
                    assert!((&s * u).norm() <= 1e-8 * s.norm() * u.norm());
                    continue;
                }
                let res = (&l * u - &s * u * lam).norm();
                assert!(
                    res <= 1e-10 * (l.norm() + lam.abs() * s.norm()) * u.norm(),
                    "agg {i} lam {lam} res {res} l {} s {} u {}",
                    l.norm(),
                    s.norm(),
                    u.norm()
                );
            }
            let m = local_gevp(&b, eigen_threshold(50.0, t.n_colors, rs.n_mult), 3).unwrap();
            let gram = m.panel.transpose() * &m.panel;
            assert!(
                (gram - DenseMatrix::identity(m.panel.ncols(), m.panel.ncols())).amax() <= 1e-12
            );
        }
    }

    #[test]
    fn interior_aggregate_keeps_constant_as_infinite_mode() {
        // Rotated problem: constants on Ω are annihilated by interior rows.
        let sys = build_rotated_aniso(&AnisoParams::new(12, 12, 1.0, 0.0)).unwrap();
        let part = multi_pass_aggregation(&sys.a, 1).unwrap();
        let mut t = build_topology(&sys.a, &part).unwrap();
        let rs = compute_row_sets(&sys.g, &mut t).unwrap();
        // An aggregate away from the boundary.
        let i = (0..t.n_aggregates())
            .find(|&i| {
                t.omega_cap(i)
                    .iter()
                    .all(|&k| (1..11).contains(&(k % 12)) && (1..11).contains(&(k / 12)))
            })
            .unwrap();
        let m = local_gevp(&assemble_local(i, &sys.g, &t, &rs).unwrap(), 1.0, 1).unwrap();
        assert!(m.kept[0].is_infinite());
        let c = 1.0 / (t.omega[i].len() as f64).sqrt();
        assert!(m.panel.column(0).iter().all(|v| (v - c).abs() < 1e-8));
    }

    #[test]
    fn threshold_formula() {
        assert_eq!(eigen_threshold(50.0, 4, 2), 5.75);
        assert_eq!(eigen_threshold(50.0, 49, 100), 0.1);
        assert_eq!(eigen_threshold(50.0, 2, 1), 24.0);
        assert_eq!(eigen_threshold(3.0, 4, 1), 0.1);
    }
}
