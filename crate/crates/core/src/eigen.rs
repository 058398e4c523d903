//! Dense symmetric eigensolvers: the standard problem, and the generalized
//! problem `L u = λ B u` for a semidefinite pair.

use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::sparse::DenseMatrix;

const EIG_TOL: f64 = 1e-15;
const EIG_MAX_SWEEPS: usize = 10_000;

/// Eigenvalues in ascending order with matching orthonormal eigenvector columns.
#[derive(Clone, Debug)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

/// Solution of a semidefinite generalized eigenproblem.
///
/// `values` is in descending order. The first `n_infinite` entries are
/// `f64::INFINITY` and belong to directions with `B u = 0`, `L u != 0`.
/// Joint null directions of `L` and `B` are dropped and counted in
/// `n_discarded`.
#[derive(Clone, Debug)]
pub struct GeneralizedPairs {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
    pub n_infinite: usize,
    pub n_discarded: usize,
}

impl GeneralizedPairs {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn check_square(m: &DenseMatrix, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dim(format!(
            "{what} is {}x{}, expected square",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

fn symmetrized(m: &DenseMatrix) -> DenseMatrix {
    (m + m.transpose()) * 0.5
}

/// Full spectrum of a symmetric matrix, ascending.
pub fn sym_eig(m: &DenseMatrix) -> Result<EigenPairs> {
    check_square(m, "sym_eig input")?;
    let n = m.nrows();
    if n == 0 {
        return Ok(EigenPairs {
            values: Vec::new(),
            vectors: DenseMatrix::zeros(0, 0),
        });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eig("non-finite matrix entry".into()));
    }
    let eig = SymmetricEigen::try_new(symmetrized(m), EIG_TOL, EIG_MAX_SWEEPS)
        .ok_or_else(|| Error::Eig(format!("symmetric eigensolver did not converge (n = {n})")))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DenseMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(EigenPairs { values, vectors })
}

/// Solves `L u = λ B u` for symmetric positive semidefinite `L` and `B`.
///
/// Eigen-directions of `B` with eigenvalue at most `tau_rel · λ_max(B)` form
/// its numerical null space. Inside it, directions that `L` also annihilates
/// are discarded and the rest are returned as infinite eigenvalues. On the
/// retained range of `B` the infinite directions are eliminated and the pencil
/// is reduced to a standard problem with `B^{-1/2}`. Finite eigenvectors are
/// `B`-normalized; infinite ones have unit 2-norm.
pub fn spsd_gevp(l: &DenseMatrix, b: &DenseMatrix, tau_rel: f64) -> Result<GeneralizedPairs> {
    check_square(l, "L")?;
    check_square(b, "B")?;
    if l.nrows() != b.nrows() {
        return Err(Error::Dim(format!(
            "L is {0}x{0} but B is {1}x{1}",
            l.nrows(),
            b.nrows()
        )));
    }
    let n = l.nrows();
    let l = symmetrized(l);
    let beig = sym_eig(b)?;
    let bmax = beig.values.last().copied().unwrap_or(0.0).max(0.0);
    let cutoff = tau_rel * bmax;

    let (range, null): (Vec<usize>, Vec<usize>) =
        (0..n).partition(|&k| bmax > 0.0 && beig.values[k] > cutoff);

    let w = DenseMatrix::from_fn(n, range.len(), |i, j| {
        let k = range[j];
        beig.vectors[(i, k)] / beig.values[k].sqrt()
    });

    // Null space of B split by L: directions with L > 0 are the infinite
    // modes, the rest lie in the joint null space and are dropped.
    let vn = DenseMatrix::from_fn(n, null.len(), |i, j| beig.vectors[(i, null[j])]);
    let inf = sym_eig(&(vn.transpose() * &l * &vn))?;
    let lscale = l.norm();
    let inf_keep: Vec<usize> = (0..null.len())
        .rev()
        .filter(|&k| inf.values[k] > tau_rel * lscale)
        .collect();
    let nmat = DenseMatrix::from_fn(n, inf_keep.len(), |i, j| {
        (&vn * inf.vectors.column(inf_keep[j]))[i]
    });

    // Finite part: eliminate the infinite directions, u = W y + N z with
    // z = -K⁻¹ Nᵀ L W y, leaving C = Wᵀ L W - Wᵀ L N K⁻¹ Nᵀ L W.
    let nlw = nmat.transpose() * &l * &w;
    let kinv_nlw = DenseMatrix::from_fn(inf_keep.len(), range.len(), |i, j| {
        nlw[(i, j)] / inf.values[inf_keep[i]]
    });
    let c = w.transpose() * &l * &w - nlw.transpose() * &kinv_nlw;
    let finite = sym_eig(&symmetrized(&c))?;
    let lift = &w - &nmat * &kinv_nlw;

    let n_infinite = inf_keep.len();
    let n_finite = range.len();
    let mut values = Vec::with_capacity(n_infinite + n_finite);
    let mut vectors = DenseMatrix::zeros(n, n_infinite + n_finite);
    for col in 0..n_infinite {
        values.push(f64::INFINITY);
        vectors.set_column(col, &nmat.column(col));
    }
    for (j, k) in (0..n_finite).rev().enumerate() {
        let lambda = finite.values[k];
        if !lambda.is_finite() {
            return Err(Error::Eig(format!(
                "non-finite generalized eigenvalue {lambda}"
            )));
        }
        values.push(lambda);
        vectors.set_column(n_infinite + j, &(&lift * finite.vectors.column(k)));
    }
    Ok(GeneralizedPairs {
        values,
        vectors,
        n_infinite,
        n_discarded: null.len() - n_infinite,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use nalgebra::dmatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Cyclic Jacobi rotations; an independent route used only to check the
    /// production eigensolver.
    pub(crate) fn jacobi_eigenvalues(m: &DenseMatrix) -> Vec<f64> {
        let n = m.nrows();
        let mut a = symmetrized(m);
        for _ in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[(i, j)].powi(2))
                .sum();
            if off.sqrt() <= 1e-15 * a.norm() {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    if a[(p, q)] == 0.0 {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let (akp, akq) = (a[(k, p)], a[(k, q)]);
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut v: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    pub(crate) fn random_spd(rng: &mut ChaCha8Rng, n: usize, shift: f64) -> DenseMatrix {
        let x = DenseMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        &x * x.transpose() + DenseMatrix::identity(n, n) * shift
    }

    #[test]
    fn sym_eig_trivial() {
        let e = sym_eig(&DenseMatrix::identity(3, 3)).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);

        let e = sym_eig(&DenseMatrix::from_diagonal(&nalgebra::dvector![
            3.0, 1.0, 2.0
        ]))
        .unwrap();
        assert_eq!(e.values, vec![1.0, 2.0, 3.0]);
        for (j, axis) in [1usize, 2, 0].into_iter().enumerate() {
            assert!((e.vectors[(axis, j)].abs() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn sym_eig_reconstructs_random_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = DenseMatrix::from_fn(20, 20, |_, _| rng.gen_range(-1.0..1.0));
        let m = symmetrized(&x);
        let e = sym_eig(&m).unwrap();
        let lam = DenseMatrix::from_diagonal(&nalgebra::DVector::from_vec(e.values.clone()));
        let rec = &e.vectors * lam * e.vectors.transpose();
        assert!((rec - &m).norm() <= 1e-11 * m.norm());
        let ortho = e.vectors.transpose() * &e.vectors - DenseMatrix::identity(20, 20);
        assert!(ortho.amax() <= 1e-12);
        let oracle = jacobi_eigenvalues(&m);
        for (a, b) in e.values.iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-12 * m.norm());
        }
        for k in 0..20 {
            let v = e.vectors.column(k);
            assert!((&m * v - v * e.values[k]).norm() <= 1e-11 * m.norm());
        }
    }

    #[test]
    fn sym_eig_rejects_nonsquare_and_nan() {
        assert!(matches!(
            sym_eig(&DenseMatrix::zeros(2, 3)),
            Err(Error::Dim(_))
        ));
        let mut m = DenseMatrix::identity(2, 2);
        m[(0, 1)] = f64::NAN;
        assert!(matches!(sym_eig(&m), Err(Error::Eig(_))));
    }

    #[test]
    fn gevp_trivial_pairs() {
        let i3 = DenseMatrix::identity(3, 3);
        let g = spsd_gevp(&i3, &i3, 1e-10).unwrap();
        assert_eq!(g.values.len(), 3);
        assert!(g.values.iter().all(|v| (v - 1.0).abs() < 1e-14));

        let g = spsd_gevp(
            &dmatrix![2.0, 0.0; 0.0, 0.0],
            &DenseMatrix::identity(2, 2),
            1e-10,
        )
        .unwrap();
        assert!((g.values[0] - 2.0).abs() < 1e-14);
        assert!(g.values[1].abs() < 1e-14);
        assert_eq!((g.n_infinite, g.n_discarded), (0, 0));
    }

    #[test]
    fn gevp_matches_cholesky_inverse_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for n in [3, 8, 15] {
            let l = random_spd(&mut rng, n, 0.1);
            let b = random_spd(&mut rng, n, 0.5);
            let g = spsd_gevp(&l, &b, 1e-10).unwrap();
            assert_eq!(g.n_infinite, 0);
            // Oracle: C = K⁻¹ L K⁻ᵀ with B = K Kᵀ, eigenvalues by Jacobi.
            let k = b.clone().cholesky().unwrap().l();
            let kinv = k.try_inverse().unwrap();
            let c = &kinv * &l * kinv.transpose();
            let mut oracle = jacobi_eigenvalues(&c);
            oracle.reverse();
            for (a, o) in g.values.iter().zip(&oracle) {
                assert!((a - o).abs() <= 1e-9 * o.abs().max(1e-12), "{a} vs {o}");
            }
            for j in 0..n {
                let u = g.vectors.column(j);
                let res = (&l * u - &b * u * g.values[j]).norm();
                assert!(res <= 1e-10 * (l.norm() + g.values[j].abs() * b.norm()) * u.norm());
            }
        }
    }

    #[test]
    fn gevp_singular_b_yields_infinite_and_discarded_modes() {
        // B annihilates e2 and e3; L is nonzero on e2 only.
        let l = DenseMatrix::from_diagonal(&nalgebra::dvector![1.0, 5.0, 0.0]);
        let b = DenseMatrix::from_diagonal(&nalgebra::dvector![2.0, 0.0, 0.0]);
        let g = spsd_gevp(&l, &b, 1e-10).unwrap();
        assert_eq!(g.n_infinite, 1);
        assert_eq!(g.n_discarded, 1);
        assert_eq!(g.values.len(), 2);
        assert!(g.values[0].is_infinite());
        assert!((g.values[1] - 0.5).abs() < 1e-14);
        assert!((g.vectors[(1, 0)].abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn gevp_scaling_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..5 {
            let l = random_spd(&mut rng, 7, 0.0);
            let b = random_spd(&mut rng, 7, 0.2);
            let c = rng.gen_range(0.1..10.0);
            let g1 = spsd_gevp(&l, &b, 1e-10).unwrap();
            let g2 = spsd_gevp(&(&l * c), &b, 1e-10).unwrap();
            for (a, s) in g1.values.iter().zip(&g2.values) {
                assert!((a * c - s).abs() <= 1e-10 * s.abs().max(1.0));
            }
        }
    }
}
