//! RAS, its transpose, and additive Schwarz on overlapping subdomains.

use lsamgdd::aggregation::{build_topology, multi_pass_aggregation};
use lsamgdd::problems::{build_rotated_aniso, AnisoParams};
use lsamgdd::smoother::{SchwarzMode, SchwarzSmoother};
use lsamgdd::sparse::dot;
use rand::{Rng, SeedableRng};

fn main() -> lsamgdd::Result<()> {
    let sys = build_rotated_aniso(&AnisoParams::new(32, 32, 1e-2, 0.4))?;
    let topo = build_topology(&sys.a, &multi_pass_aggregation(&sys.a, 1)?)?;
    let s = SchwarzSmoother::new(&sys.a, &topo)?;
    let sizes = s.block_sizes();
    println!(
        "{} blocks, |Ω_i| from {} to {}",
        s.n_blocks(),
        sizes.iter().min().unwrap(),
        sizes.iter().max().unwrap()
    );

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let x: Vec<f64> = (0..sys.n()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..sys.n()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lhs = dot(&s.apply(SchwarzMode::Ras, &x)?, &y);
        let rhs = dot(&x, &s.apply(SchwarzMode::RasTranspose, &y)?);
        worst = worst.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()));
    }
    println!("max |<RAS x, y> - <x, RAS-T y>| (relative) = {worst:.2e}");

    // Stationary sweeps e <- e - M A e on an isotropic problem, measured in the A-norm.
    let poisson = build_rotated_aniso(&AnisoParams::new(32, 32, 1.0, 0.0))?;
    let ptopo = build_topology(&poisson.a, &multi_pass_aggregation(&poisson.a, 1)?)?;
    let ps = SchwarzSmoother::new(&poisson.a, &ptopo)?;
    let anorm = |e: &[f64]| -> lsamgdd::Result<f64> { Ok(dot(&poisson.a.spmv(e)?, e).sqrt()) };
    for (mode, weight) in [
        (SchwarzMode::Ras, 1.0),
        (SchwarzMode::Asm, 1.0 / ptopo.n_colors as f64),
    ] {
        let mut e: Vec<f64> = (0..poisson.n()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let e0 = anorm(&e)?;
        let mut hist = Vec::new();
        for _ in 0..6 {
            let z = ps.apply(mode, &poisson.a.spmv(&e)?)?;
            e.iter_mut().zip(&z).for_each(|(e, z)| *e -= weight * z);
            hist.push(format!("{:.3}", anorm(&e)? / e0));
        }
        println!(
            "{mode:?} (weight {weight:.2}) ‖e‖_A / ‖e₀‖_A: {}",
            hist.join(" ")
        );
    }
    Ok(())
}
