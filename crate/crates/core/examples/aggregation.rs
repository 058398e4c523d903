//! Aggregates, overlaps and the coloring on a small grid.

use lsamgdd::aggregation::{build_topology, multi_pass_aggregation};
use lsamgdd::problems::{build_rotated_aniso, AnisoParams};

fn main() -> lsamgdd::Result<()> {
    let n = 12;
    let sys = build_rotated_aniso(&AnisoParams::new(n, n, 1e-3, 0.5))?;
    for passes in [1, 2] {
        let part = multi_pass_aggregation(&sys.a, passes)?;
        let topo = build_topology(&sys.a, &part)?;
        println!(
            "{passes} pass(es): {} aggregates, {} colors, largest overlap {}",
            part.n_aggregates,
            topo.n_colors,
            topo.gamma.iter().map(Vec::len).max().unwrap_or(0)
        );
        // Aggregate ids on the grid, top row first.
        for j in (0..n).rev() {
            let row: Vec<String> = (0..n)
                .map(|i| format!("{:>3}", part.assignment[i + n * j]))
                .collect();
            println!("  {}", row.join(""));
        }
        let sizes: Vec<usize> = topo.omega.iter().map(Vec::len).collect();
        println!("  sizes |ω_i| = {sizes:?}");
        println!("  colors      = {:?}\n", topo.colors);
    }
    Ok(())
}
