//! Thin wrappers over the LAPACK routines the crate needs: Hermitian and
//! real-symmetric eigensolves with vectors, and nonsymmetric real
//! eigenvalues.  Matrices are copied into column-major scratch buffers, so
//! callers can stay in ndarray's default layout.

use ndarray::Array2;

use crate::error::{FfdError, FfdResult};
use crate::C64;

extern "C" {
    fn zheevd_(
        jobz: *const u8,
        uplo: *const u8,
        n: *const i32,
        a: *mut C64,
        lda: *const i32,
        w: *mut f64,
        work: *mut C64,
        lwork: *const i32,
        rwork: *mut f64,
        lrwork: *const i32,
        iwork: *mut i32,
        liwork: *const i32,
        info: *mut i32,
    );

    fn dsyevd_(
        jobz: *const u8,
        uplo: *const u8,
        n: *const i32,
        a: *mut f64,
        lda: *const i32,
        w: *mut f64,
        work: *mut f64,
        lwork: *const i32,
        iwork: *mut i32,
        liwork: *const i32,
        info: *mut i32,
    );

    fn dgeev_(
        jobvl: *const u8,
        jobvr: *const u8,
        n: *const i32,
        a: *mut f64,
        lda: *const i32,
        wr: *mut f64,
        wi: *mut f64,
        vl: *mut f64,
        ldvl: *const i32,
        vr: *mut f64,
        ldvr: *const i32,
        work: *mut f64,
        lwork: *const i32,
        info: *mut i32,
    );
}

fn dim_i32(mat_dim: usize) -> FfdResult<i32> {
    i32::try_from(mat_dim)
        .map_err(|_| FfdError::Resource(format!("matrix dimension {mat_dim} overflows LAPACK")))
}

/// Eigenvalues (ascending) and eigenvectors (as columns) of a Hermitian
/// matrix, via the divide-and-conquer driver.  Only the lower triangle is
/// referenced.
pub fn eigh(mat: &Array2<C64>) -> FfdResult<(Vec<f64>, Array2<C64>)> {
    let (rows, cols) = mat.dim();
    if rows != cols {
        return Err(FfdError::Argument(format!(
            "eigh needs a square matrix, got {rows}x{cols}"
        )));
    }
    let n = dim_i32(rows)?;
    // column-major copy
    let mut a: Vec<C64> = Vec::with_capacity(rows * rows);
    for c in 0..rows {
        for r in 0..rows {
            a.push(mat[(r, c)]);
        }
    }
    let mut w = vec![0.0f64; rows];
    let mut info: i32 = 0;

    // workspace query
    let mut wprobe = [C64::new(0.0, 0.0)];
    let mut rprobe = [0.0f64];
    let mut iprobe = [0i32];
    let minus_one: i32 = -1;
    unsafe {
        zheevd_(
            b"V".as_ptr(),
            b"L".as_ptr(),
            &n,
            a.as_mut_ptr(),
            &n,
            w.as_mut_ptr(),
            wprobe.as_mut_ptr(),
            &minus_one,
            rprobe.as_mut_ptr(),
            &minus_one,
            iprobe.as_mut_ptr(),
            &minus_one,
            &mut info,
        );
    }
    if info != 0 {
        return Err(FfdError::Consistency(format!(
            "zheevd workspace query failed with info={info}"
        )));
    }
    let lwork = wprobe[0].re as i32;
    let lrwork = rprobe[0] as i32;
    let liwork = iprobe[0];
    let mut work = vec![C64::new(0.0, 0.0); lwork.max(1) as usize];
    let mut rwork = vec![0.0f64; lrwork.max(1) as usize];
    let mut iwork = vec![0i32; liwork.max(1) as usize];
    unsafe {
        zheevd_(
            b"V".as_ptr(),
            b"L".as_ptr(),
            &n,
            a.as_mut_ptr(),
            &n,
            w.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork,
            rwork.as_mut_ptr(),
            &lrwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(FfdError::Consistency(format!(
            "zheevd failed to converge (info={info})"
        )));
    }
    let mut vecs = Array2::<C64>::zeros((rows, rows));
    for c in 0..rows {
        for r in 0..rows {
            vecs[(r, c)] = a[c * rows + r];
        }
    }
    Ok((w, vecs))
}

/// Eigenvalues (ascending) and eigenvectors (as columns) of a real symmetric
/// matrix; a quarter of the arithmetic of the complex driver.  Only the lower
/// triangle is referenced.
pub fn eigh_real(mat: &Array2<f64>) -> FfdResult<(Vec<f64>, Array2<f64>)> {
    let (rows, cols) = mat.dim();
    if rows != cols {
        return Err(FfdError::Argument(format!(
            "eigh_real needs a square matrix, got {rows}x{cols}"
        )));
    }
    let n = dim_i32(rows)?;
    let mut a: Vec<f64> = Vec::with_capacity(rows * rows);
    for c in 0..rows {
        for r in 0..rows {
            a.push(mat[(r, c)]);
        }
    }
    let mut w = vec![0.0f64; rows];
    let mut info: i32 = 0;

    // workspace query
    let mut wprobe = [0.0f64];
    let mut iprobe = [0i32];
    let minus_one: i32 = -1;
    unsafe {
        dsyevd_(
            b"V".as_ptr(),
            b"L".as_ptr(),
            &n,
            a.as_mut_ptr(),
            &n,
            w.as_mut_ptr(),
            wprobe.as_mut_ptr(),
            &minus_one,
            iprobe.as_mut_ptr(),
            &minus_one,
            &mut info,
        );
    }
    if info != 0 {
        return Err(FfdError::Consistency(format!(
            "dsyevd workspace query failed with info={info}"
        )));
    }
    let lwork = wprobe[0] as i32;
    let liwork = iprobe[0];
    let mut work = vec![0.0f64; lwork.max(1) as usize];
    let mut iwork = vec![0i32; liwork.max(1) as usize];
    unsafe {
        dsyevd_(
            b"V".as_ptr(),
            b"L".as_ptr(),
            &n,
            a.as_mut_ptr(),
            &n,
            w.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(FfdError::Consistency(format!(
            "dsyevd failed to converge (info={info})"
        )));
    }
    let mut vecs = Array2::<f64>::zeros((rows, rows));
    for c in 0..rows {
        for r in 0..rows {
            vecs[(r, c)] = a[c * rows + r];
        }
    }
    Ok((w, vecs))
}

/// All eigenvalues of a real square matrix.
pub fn eig_real(mat: &Array2<f64>) -> FfdResult<Vec<C64>> {
    let (rows, cols) = mat.dim();
    if rows != cols {
        return Err(FfdError::Argument(format!(
            "eig_real needs a square matrix, got {rows}x{cols}"
        )));
    }
    let n = dim_i32(rows)?;
    let mut a: Vec<f64> = Vec::with_capacity(rows * rows);
    for c in 0..rows {
        for r in 0..rows {
            a.push(mat[(r, c)]);
        }
    }
    let mut wr = vec![0.0f64; rows];
    let mut wi = vec![0.0f64; rows];
    let mut info: i32 = 0;
    let minus_one: i32 = -1;
    let mut probe = [0.0f64];
    let one: i32 = 1;
    unsafe {
        dgeev_(
            b"N".as_ptr(),
            b"N".as_ptr(),
            &n,
            a.as_mut_ptr(),
            &n,
            wr.as_mut_ptr(),
            wi.as_mut_ptr(),
            std::ptr::null_mut(),
            &one,
            std::ptr::null_mut(),
            &one,
            probe.as_mut_ptr(),
            &minus_one,
            &mut info,
        );
    }
    if info != 0 {
        return Err(FfdError::Consistency(format!(
            "dgeev workspace query failed with info={info}"
        )));
    }
    let lwork = probe[0] as i32;
    let mut work = vec![0.0f64; lwork.max(1) as usize];
    unsafe {
        dgeev_(
            b"N".as_ptr(),
            b"N".as_ptr(),
            &n,
            a.as_mut_ptr(),
            &n,
            wr.as_mut_ptr(),
            wi.as_mut_ptr(),
            std::ptr::null_mut(),
            &one,
            std::ptr::null_mut(),
            &one,
            work.as_mut_ptr(),
            &lwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(FfdError::Consistency(format!(
            "dgeev failed to converge (info={info})"
        )));
    }
    Ok(wr
        .into_iter()
        .zip(wi)
        .map(|(re, im)| C64::new(re, im))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn pauli_x_eigensystem() {
        let mut m = Array2::<C64>::zeros((2, 2));
        m[(0, 1)] = c(1.0, 0.0);
        m[(1, 0)] = c(1.0, 0.0);
        let (w, v) = eigh(&m).unwrap();
        assert!((w[0] + 1.0).abs() < 1e-14 && (w[1] - 1.0).abs() < 1e-14);
        for j in 0..2 {
            let r0 = m[(0, 0)] * v[(0, j)] + m[(0, 1)] * v[(1, j)] - v[(0, j)] * w[j];
            let r1 = m[(1, 0)] * v[(0, j)] + m[(1, 1)] * v[(1, j)] - v[(1, j)] * w[j];
            assert!(r0.norm() < 1e-14 && r1.norm() < 1e-14);
        }
    }

    #[test]
    fn random_hermitian_residuals_and_orthonormality() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let n = 24;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = Array2::from_shape_fn((n, n), |_| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let m = &b + &b.t().mapv(|x| x.conj());
        let (w, v) = eigh(&m).unwrap();
        assert!(w.windows(2).all(|p| p[0] <= p[1]));
        let mv = m.dot(&v);
        for j in 0..n {
            let mut resid: f64 = 0.0;
            for r in 0..n {
                resid = resid.max((mv[(r, j)] - v[(r, j)] * w[j]).norm());
            }
            assert!(resid < 1e-12, "column {j}: residual {resid:e}");
        }
        let gram = v.t().mapv(|x| x.conj()).dot(&v);
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((gram[(i, j)] - c(want, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn random_symmetric_real_residuals_and_orthonormality() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let n = 24;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let b = Array2::from_shape_fn((n, n), |_| rng.gen_range(-1.0..1.0));
        let m = &b + &b.t();
        let (w, v) = eigh_real(&m).unwrap();
        assert!(w.windows(2).all(|p| p[0] <= p[1]));
        let mv = m.dot(&v);
        for j in 0..n {
            let mut resid: f64 = 0.0;
            for r in 0..n {
                resid = resid.max((mv[(r, j)] - v[(r, j)] * w[j]).abs());
            }
            assert!(resid < 1e-12, "column {j}: residual {resid:e}");
        }
        let gram = v.t().dot(&v);
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((gram[(i, j)] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn companion_matrix_recovers_roots() {
        // monic cubic with roots 1, 2, 3: w^3 - 6w^2 + 11w - 6
        let coeffs = [-6.0, 11.0, -6.0, 1.0];
        let n = 3;
        let mut m = Array2::<f64>::zeros((n, n));
        for r in 1..n {
            m[(r, r - 1)] = 1.0;
        }
        for r in 0..n {
            m[(r, n - 1)] = -coeffs[r];
        }
        let mut roots: Vec<f64> = eig_real(&m)
            .unwrap()
            .into_iter()
            .map(|z| {
                assert!(z.im.abs() < 1e-12);
                z.re
            })
            .collect();
        roots.sort_by(f64::total_cmp);
        for (got, want) in roots.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn shape_errors_are_reported() {
        let m = Array2::<C64>::zeros((2, 3));
        assert!(matches!(eigh(&m), Err(FfdError::Argument(_))));
    }
}
