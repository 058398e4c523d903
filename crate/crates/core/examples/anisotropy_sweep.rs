//! Iteration counts across anisotropy strengths, grid sizes and angles, as CSV.

use std::f64::consts::PI;

use lsamgdd::experiment::{rows_to_csv, sweep, ExperimentConfig, SweepAxis};

fn main() {
    let n: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(64);
    let base = ExperimentConfig {
        nx: n,
        ny: n,
        theta: PI / 6.0,
        c_min: vec![2, 3],
        ..Default::default()
    };
    println!("# epsilon, {n}x{n}, theta = pi/6");
    print!(
        "{}",
        rows_to_csv(&sweep(
            &base,
            SweepAxis::Epsilon,
            &[1.0, 1e-2, 1e-4, 1e-6],
            false
        ))
    );

    let eps = ExperimentConfig {
        epsilon: 1e-4,
        ..base.clone()
    };
    println!("# N, epsilon = 1e-4");
    print!(
        "{}",
        rows_to_csv(&sweep(&eps, SweepAxis::N, &[256.0, 1024.0, 4096.0], false))
    );

    let angle = ExperimentConfig {
        epsilon: 1e-5,
        c_min: vec![2, 3, 4],
        sweeps: 2,
        ..base
    };
    println!("# theta, epsilon = 1e-5, two smoothing sweeps");
    print!(
        "{}",
        rows_to_csv(&sweep(
            &angle,
            SweepAxis::Theta,
            &[PI / 16.0, PI / 6.0, PI / 4.0, 3.0 * PI / 8.0],
            false
        ))
    );
}
