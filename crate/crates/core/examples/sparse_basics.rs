//! CSR assembly, products, and a Matrix Market round trip.

use lsamgdd::mm;
use lsamgdd::sparse::{relative_frobenius_error, CsrMatrix, Pattern};

fn main() -> lsamgdd::Result<()> {
    // A 4x3 factor whose normal matrix has an exact cancellation at (0, 2).
    let g = CsrMatrix::from_triplets(
        4,
        3,
        &[
            (0, 0, 1.0),
            (0, 2, 1.0),
            (1, 0, 1.0),
            (1, 2, -1.0),
            (2, 1, 2.0),
            (3, 1, 1.0),
            (3, 2, 1.0),
        ],
    )?;
    let gt = g.transpose();
    let numeric = gt.spgemm(&g, Pattern::Numeric)?;
    let symbolic = gt.spgemm(&g, Pattern::Symbolic)?;
    println!(
        "GᵀG: numeric nnz = {}, symbolic nnz = {}",
        numeric.nnz(),
        symbolic.nnz()
    );
    println!(
        "same values: {}",
        relative_frobenius_error(&numeric, &symbolic) == 0.0
    );
    println!("asymmetry = {:e}", symbolic.asymmetry());

    let x = [1.0, 2.0, 3.0];
    let ax = symbolic.spmv(&x)?;
    let gtgx = gt.spmv(&g.spmv(&x)?)?;
    println!("A x = {ax:?}, Gᵀ(G x) = {gtgx:?}");

    let dir = std::env::temp_dir().join("lsamgdd-sparse-basics");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("g.mtx");
    mm::write_matrix(&path, &g)?;
    let back = mm::read_matrix(&path)?;
    println!(
        "wrote {} and read it back: identical = {}",
        path.display(),
        back == g
    );
    Ok(())
}
