//! Qubit operators in the basis `{|0⟩, |1⟩}` with `|0⟩` the ground state.
//!
//! `σz = |1⟩⟨1| - |0⟩⟨0|`, `σ- = |0⟩⟨1|`, `σx = σ+ + σ-` and
//! `σy = i(σ- - σ+)`, so that `[σx, σy] = 2iσz`.

use alloc::vec;

use super::ComplexMatrix;
use crate::C64;

const O: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

fn m2(a: C64, b: C64, c: C64, d: C64) -> ComplexMatrix {
    ComplexMatrix::from_row_major(2, vec![a, b, c, d]).expect("2x2")
}

pub fn sigma_x() -> ComplexMatrix {
    m2(O, ONE, ONE, O)
}

pub fn sigma_y() -> ComplexMatrix {
    m2(O, I, -I, O)
}

pub fn sigma_z() -> ComplexMatrix {
    m2(-ONE, O, O, ONE)
}

pub fn sigma_minus() -> ComplexMatrix {
    m2(O, ONE, O, O)
}

pub fn sigma_plus() -> ComplexMatrix {
    m2(O, O, ONE, O)
}
