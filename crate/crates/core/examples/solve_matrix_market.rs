//! Solve a least-squares system given as a Matrix Market factor `G`.
//!
//! `cargo run --example solve_matrix_market -- G.mtx [rhs.mtx]`. Without
//! arguments a generated factor is written to a temporary directory first.

use std::path::PathBuf;

use lsamgdd::experiment::{export_system, run, ExperimentConfig, ProblemKind};

fn main() -> lsamgdd::Result<()> {
    let mut args = std::env::args().skip(1).map(PathBuf::from);
    let (g, rhs) = match args.next() {
        Some(g) => (g, args.next()),
        None => {
            let dir = std::env::temp_dir().join("lsamgdd-mtx-example");
            std::fs::create_dir_all(&dir)?;
            let (g, b) = (dir.join("g.mtx"), dir.join("rhs.mtx"));
            let generated = ExperimentConfig {
                nx: 40,
                ny: 40,
                epsilon: 1e-3,
                theta: 0.3,
                ..Default::default()
            };
            export_system(&generated, &g, Some(&b))?;
            println!("wrote {} and {}", g.display(), b.display());
            (g, Some(b))
        }
    };
    let config = ExperimentConfig {
        problem: ProblemKind::Mtx,
        g_path: Some(g),
        rhs_path: rhs,
        ..Default::default()
    };
    let rep = run(&config)?;
    println!(
        "{}: n = {}, {} levels, {} iterations, final relative residual {:.2e}",
        rep.label, rep.n, rep.hierarchy.n_levels, rep.solve.iterations, rep.final_relative_residual
    );
    for w in &rep.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
