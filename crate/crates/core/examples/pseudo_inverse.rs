//! Pseudo-inverse of an exactly rank-deficient matrix and the four Penrose
//! identities.

use plmmse::linalg::pseudo_inverse;
use plmmse::DMatrix;

fn main() -> plmmse::Result<()> {
    let u = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 2.0, 1.0, 0.0, 3.0, 1.0, 1.0]);
    let v = DMatrix::from_row_slice(2, 3, &[1.0, -1.0, 0.5, 0.0, 2.0, 1.0]);
    let a = &u * &v;
    let p = pseudo_inverse(&a, 0.0)?;
    println!("A (rank 2) ={a}A^+ ={p}");
    let ap = &a * &p;
    let pa = &p * &a;
    println!("|A A+ A - A|     = {:.2e}", (&ap * &a - &a).amax());
    println!("|A+ A A+ - A+|   = {:.2e}", (&pa * &p - &p).amax());
    println!("|(A A+)' - A A+| = {:.2e}", (ap.transpose() - &ap).amax());
    println!("|(A+ A)' - A+ A| = {:.2e}", (pa.transpose() - &pa).amax());
    Ok(())
}
