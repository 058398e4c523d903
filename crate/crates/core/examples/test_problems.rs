//! The two generated least-squares systems and their basic properties.

use std::f64::consts::PI;

use lsamgdd::problems::{
    build_closed_fieldline, build_rotated_aniso, AnisoParams, FieldParams, LeastSquaresSystem,
};

fn describe(sys: &LeastSquaresSystem) {
    let d = sys.a.diagonal();
    let (dmin, dmax) = d
        .iter()
        .fold((f64::MAX, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    println!(
        "{:<48} G {}x{} nnz {:>6} | A nnz {:>6} | diag [{dmin:.3e}, {dmax:.3e}]",
        sys.label,
        sys.g.n_rows(),
        sys.g.n_cols(),
        sys.g.nnz(),
        sys.a.nnz()
    );
}

fn main() -> lsamgdd::Result<()> {
    for (eps, theta) in [(1.0, 0.0), (1e-4, 0.0), (1e-4, PI / 6.0), (1e-6, PI / 4.0)] {
        describe(&build_rotated_aniso(&AnisoParams::new(32, 32, eps, theta))?);
    }
    for kpar in [1e2, 1e4, 1e6] {
        describe(&build_closed_fieldline(&FieldParams {
            nx: 32,
            ny: 32,
            kpar,
            kperp: 1.0,
            dt: 1e-3,
        })?);
    }

    // The 5-point Laplacian appears for eps = 1, theta = 0.
    let p = AnisoParams::new(5, 5, 1.0, 0.0);
    let sys = build_rotated_aniso(&p)?;
    let (cols, vals) = sys.a.row(12);
    let h2 = p.hx() * p.hx();
    println!(
        "centre row of the 5x5 Laplacian (times h²): {:?} at {:?}",
        vals.iter().map(|v| v * h2).collect::<Vec<_>>(),
        cols
    );
    Ok(())
}
