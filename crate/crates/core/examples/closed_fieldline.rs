//! Diffusion along closed field lines with a growing parallel conductivity.

use lsamgdd::experiment::{run, ExperimentConfig, ProblemKind};

fn main() -> lsamgdd::Result<()> {
    let n: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(48);
    println!(
        "{:>8} {:>6} {:>7} {:>8} {:>7} {:>7}",
        "kpar", "iters", "rho", "t_tenth", "levels", "cplx"
    );
    for kpar in [1e2, 1e4, 1e6] {
        let config = ExperimentConfig {
            problem: ProblemKind::ClosedFieldline,
            nx: n,
            ny: n,
            kpar,
            kperp: 1.0,
            dt: 1e-3,
            n_agg: 2,
            c_min: vec![4, 5],
            sweeps: 2,
            ..Default::default()
        };
        let rep = run(&config)?;
        println!(
            "{kpar:>8.0e} {:>6} {:>7.3} {:>8.2} {:>7} {:>7.2}",
            rep.solve.iterations,
            rep.solve.avg_conv_factor,
            rep.solve.iters_to_tenth,
            rep.hierarchy.n_levels,
            rep.hierarchy.operator_complexity
        );
    }
    Ok(())
}
