//! Dense matrix backend for small registers.
//!
//! Every Pauli word acts as a signed permutation in the computational basis,
//! so dense matrices and matrix-vector products are assembled directly from
//! the bit masks without any 2^n x 2^n intermediate products.  Site 1 is the
//! least significant bit of the basis index, matching
//! [`crate::pauli::ProductState::to_vector`].

use ndarray::{Array1, Array2};

use crate::circuit::CircuitSpec;
use crate::error::{FfdError, FfdResult};
use crate::pauli::{OperatorSum, PauliWord};
use crate::C64;

/// Largest register for which dense matrices may be formed (1 GiB of f64
/// pairs at 13 sites is past the budget; 12 keeps a matrix at 256 MiB).
pub const MAX_DENSE_SITES: usize = 12;

/// Largest register for dense state vectors.
pub const MAX_VECTOR_SITES: usize = 24;

fn guard_matrix(n: usize) -> FfdResult<()> {
    if n > MAX_DENSE_SITES {
        return Err(FfdError::Resource(format!(
            "dense matrix on {n} sites exceeds the {MAX_DENSE_SITES}-site cap"
        )));
    }
    Ok(())
}

fn guard_vector(n: usize) -> FfdResult<()> {
    if n > MAX_VECTOR_SITES {
        return Err(FfdError::Resource(format!(
            "dense vector on {n} sites exceeds the {MAX_VECTOR_SITES}-site cap"
        )));
    }
    Ok(())
}

/// Pack the word's per-site letters into (x_mask, z_mask), site s at bit s-1.
pub fn word_masks(word: &PauliWord) -> (u64, u64) {
    let n = word.sites();
    debug_assert!(n <= 64);
    let mut xm = 0u64;
    let mut zm = 0u64;
    for s in 1..=n {
        let (x, z) = word.letter(s);
        if x {
            xm |= 1 << (s - 1);
        }
        if z {
            zm |= 1 << (s - 1);
        }
    }
    (xm, zm)
}

/// Dense matrix of an operator sum.
pub fn sum_matrix(op: &OperatorSum) -> FfdResult<Array2<C64>> {
    let n = op.sites();
    guard_matrix(n)?;
    let dim = 1usize << n;
    let mut mat = Array2::<C64>::zeros((dim, dim));
    for (word, &coeff) in op.terms() {
        let (xm, zm) = word_masks(word);
        for col in 0..dim as u64 {
            let sign = if ((zm & col).count_ones() & 1) == 1 {
                -1.0
            } else {
                1.0
            };
            let row = (col ^ xm) as usize;
            mat[(row, col as usize)] += coeff * sign;
        }
    }
    Ok(mat)
}

/// v -> op v without forming the matrix.
pub fn sum_apply_vec(op: &OperatorSum, v: &Array1<C64>) -> FfdResult<Array1<C64>> {
    let n = op.sites();
    guard_vector(n)?;
    let dim = 1usize << n;
    if v.len() != dim {
        return Err(FfdError::Argument(format!(
            "vector length {} does not match {n} sites",
            v.len()
        )));
    }
    let mut out = Array1::<C64>::zeros(dim);
    for (word, &coeff) in op.terms() {
        let (xm, zm) = word_masks(word);
        for col in 0..dim as u64 {
            let sign = if ((zm & col).count_ones() & 1) == 1 {
                -coeff
            } else {
                coeff
            };
            out[(col ^ xm) as usize] += sign * v[col as usize];
        }
    }
    Ok(out)
}

/// M -> op M, term by term; rows are signed-permuted, columns untouched.
pub fn sum_apply_mat(op: &OperatorSum, mat: &Array2<C64>) -> FfdResult<Array2<C64>> {
    let n = op.sites();
    guard_matrix(n)?;
    let dim = 1usize << n;
    if mat.nrows() != dim || mat.ncols() != dim {
        return Err(FfdError::Argument(format!(
            "matrix shape {:?} does not match {n} sites",
            mat.dim()
        )));
    }
    let mut out = Array2::<C64>::zeros((dim, dim));
    for (word, &coeff) in op.terms() {
        let (xm, zm) = word_masks(word);
        for rp in 0..dim as u64 {
            // (w M)[r, c] with r = rp ^ xm picks up the sign of column rp of w
            let sign = if ((zm & rp).count_ones() & 1) == 1 {
                -coeff
            } else {
                coeff
            };
            let r = (rp ^ xm) as usize;
            for c in 0..dim {
                out[(r, c)] += sign * mat[(rp as usize, c)];
            }
        }
    }
    Ok(out)
}

/// Dense matrix of one driving period (all gates, then the same gates in
/// reverse), built by sparse left-multiplication.
pub fn period_matrix(spec: &CircuitSpec, n: usize) -> FfdResult<Array2<C64>> {
    guard_matrix(n)?;
    let dim = 1usize << n;
    let mut v = Array2::<C64>::eye(dim);
    for j in spec.floquet_order() {
        v = sum_apply_mat(&spec.gate(j, n)?, &v)?;
    }
    Ok(v)
}

/// One driving period applied to every column of a matrix at once.  Costs
/// O(gates * 4^n) versus O(terms * 4^n) for the expanded Pauli sum, which
/// grows much faster than the gate count.
pub fn period_apply_mat(spec: &CircuitSpec, n: usize, m: &Array2<C64>) -> FfdResult<Array2<C64>> {
    let mut out = m.clone();
    for j in spec.floquet_order() {
        out = sum_apply_mat(&spec.gate(j, n)?, &out)?;
    }
    Ok(out)
}

/// One driving period applied to a state vector.
pub fn period_apply_vec(spec: &CircuitSpec, n: usize, v: &Array1<C64>) -> FfdResult<Array1<C64>> {
    let mut out = v.clone();
    for j in spec.floquet_order() {
        out = sum_apply_vec(&spec.gate(j, n)?, &out)?;
    }
    Ok(out)
}

/// <v| op |v>.
pub fn expect(op: &OperatorSum, v: &Array1<C64>) -> FfdResult<C64> {
    let w = sum_apply_vec(op, v)?;
    Ok(v.iter().zip(w.iter()).map(|(a, b)| a.conj() * b).sum())
}

pub fn frob_norm(mat: &Array2<C64>) -> f64 {
    mat.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(mat: &Array2<C64>) -> f64 {
    mat.iter().map(|c| c.norm()).fold(0.0, f64::max)
}
