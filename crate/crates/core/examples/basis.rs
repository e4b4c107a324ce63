//! Symmetric matrices as coordinates in an orthonormal basis.

use l0fa::BasisSet;
use nalgebra::DMatrix;

fn main() -> l0fa::Result<()> {
    let basis = BasisSet::new(3)?;
    println!("p = {}, m = {}", basis.p(), basis.m());
    for a in 0..basis.m() {
        println!("coordinate {a} <-> entry {:?}", basis.pair(a));
    }

    let s = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, -2.0, 0.0, -2.0, 5.0]);
    let v = basis.mat_to_vec(&s)?;
    println!("vec(S) = {:.6?}", v.as_slice());
    println!("|vec(S)| = {:.12}, |S|_F = {:.12}", v.norm(), s.norm());
    let back = basis.vec_to_mat(&v)?;
    println!("round trip error = {:e}", (back - s).amax());
    Ok(())
}
