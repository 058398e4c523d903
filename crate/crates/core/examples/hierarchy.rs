//! Multilevel setup, per-level statistics, and the checks that hold on every level.

use lsamgdd::hierarchy::{Hierarchy, LevelParams};
use lsamgdd::krylov::precond_spectrum;
use lsamgdd::problems::{build_rotated_aniso, AnisoParams};

fn main() -> lsamgdd::Result<()> {
    let sys = build_rotated_aniso(&AnisoParams::new(48, 48, 1e-4, std::f64::consts::FRAC_PI_6))?;
    let params = LevelParams {
        n_coarse: 100,
        ..LevelParams::with_c_min(&[2, 3])
    };
    let h = Hierarchy::setup(&sys.g, &sys.a, &params)?;

    println!("level      n      nnz  aggs  k_c  n_mult  thresh  coarse");
    for s in h.summary().levels {
        println!(
            "{:>5} {:>6} {:>8} {:>5} {:>4} {:>7} {:>7.3} {:>7}",
            s.level, s.dim, s.nnz, s.n_aggregates, s.n_colors, s.n_mult, s.thresh, s.modes_kept
        );
    }
    println!(
        "coarsest n = {}, operator complexity = {:.3}",
        h.coarse.a.n_rows(),
        h.operator_complexity()
    );
    println!(
        "Galerkin vs GᵀG per level: {:?}",
        h.galerkin_errors()?
            .iter()
            .map(|e| format!("{e:.1e}"))
            .collect::<Vec<_>>()
    );
    println!(
        "splitting error per level: {:?}",
        h.splitting_errors()?
            .iter()
            .map(|e| format!("{e:.1e}"))
            .collect::<Vec<_>>()
    );

    // Spectrum of the additive two-level operator on a small Poisson problem.
    let poisson = build_rotated_aniso(&AnisoParams::new(16, 16, 1.0, 0.0))?;
    let h2 = Hierarchy::setup(
        &poisson.g,
        &poisson.a,
        &LevelParams {
            n_coarse: 10,
            ..Default::default()
        },
    )?;
    let two = h2.two_level_additive()?;
    let (lo, hi) = precond_spectrum(|v| poisson.a.spmv(v), |v| two.apply(v), poisson.n())?;
    let (blo, bhi) = two.spectral_bounds(two.thresh());
    println!("16x16 Poisson two-level spectrum [{lo:.4}, {hi:.4}] within [{blo:.4}, {bhi}]");

    println!(
        "{}",
        serde_json::to_string_pretty(&h.summary().levels[0]).unwrap()
    );
    Ok(())
}
