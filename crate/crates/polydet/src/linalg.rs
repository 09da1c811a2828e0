//! Dense complex linear algebra helpers.
//!
//! Matrices are `nalgebra` column-major dense matrices over `Complex<f64>`.
//! Products of any size run through `matrixmultiply::zgemm`; with the
//! `parallel` feature, large products are split into fixed column blocks so
//! the result is bitwise independent of the worker count.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Column width of one parallel gemm block. Fixed so that the partition (and
/// therefore every floating-point accumulation order) never depends on the
/// thread count.
const GEMM_BLOCK_COLS: usize = 64;

/// Flop threshold below which a product stays on one thread.
const GEMM_PAR_MIN_FLOPS: usize = 1 << 22;

#[inline]
fn as_cgemm_ptr(m: &CMat) -> *const [f64; 2] {
    // Complex<f64> is repr(C) { re, im }, layout-identical to [f64; 2].
    m.as_ptr() as *const [f64; 2]
}

unsafe fn zgemm_block(a: &CMat, b_ptr: *const [f64; 2], n_cols: usize, c: &mut [C64]) {
    let (m, k) = a.shape();
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            n_cols,
            [1.0, 0.0],
            as_cgemm_ptr(a),
            1,
            m as isize,
            b_ptr,
            1,
            k as isize,
            [0.0, 0.0],
            c.as_mut_ptr() as *mut [f64; 2],
            1,
            m as isize,
        );
    }
}

/// `a * b` on a single thread.
pub fn matmul_seq(a: &CMat, b: &CMat) -> CMat {
    let (m, k) = a.shape();
    let (k2, n) = b.shape();
    assert_eq!(k, k2, "inner dimensions differ: {k} vs {k2}");
    let mut c = CMat::zeros(m, n);
    if m == 0 || n == 0 || k == 0 {
        return c;
    }
    unsafe { zgemm_block(a, as_cgemm_ptr(b), n, c.as_mut_slice()) };
    c
}

/// `a * b`, split over column blocks when the product is large enough and the
/// `parallel` feature is enabled.
pub fn matmul(a: &CMat, b: &CMat) -> CMat {
    let (m, k) = a.shape();
    let (k2, n) = b.shape();
    assert_eq!(k, k2, "inner dimensions differ: {k} vs {k2}");

    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        if 8 * m * k * n >= GEMM_PAR_MIN_FLOPS && n > GEMM_BLOCK_COLS {
            let mut c = CMat::zeros(m, n);
            let b_slice = b.as_slice();
            c.as_mut_slice()
                .par_chunks_mut(m * GEMM_BLOCK_COLS)
                .zip(b_slice.par_chunks(k * GEMM_BLOCK_COLS))
                .for_each(|(c_block, b_block)| {
                    let cols = b_block.len() / k;
                    unsafe {
                        zgemm_block(a, b_block.as_ptr() as *const [f64; 2], cols, c_block)
                    };
                });
            return c;
        }
    }
    matmul_seq(a, b)
}

/// `h * h^H`, hermitized.
pub fn gram_rx(h: &CMat) -> CMat {
    let hh = h.adjoint();
    hermitized(matmul(h, &hh))
}

/// `h^H * h`, hermitized.
pub fn gram_tx(h: &CMat) -> CMat {
    let hh = h.adjoint();
    hermitized(matmul(&hh, h))
}

/// Replaces `x` by `(x + x^H) / 2` in place.
pub fn hermitize(x: &mut CMat) {
    let n = x.nrows();
    debug_assert_eq!(n, x.ncols());
    for j in 0..n {
        for i in 0..j {
            let v = 0.5 * (x[(i, j)] + x[(j, i)].conj());
            x[(i, j)] = v;
            x[(j, i)] = v.conj();
        }
        x[(j, j)] = C64::new(x[(j, j)].re, 0.0);
    }
}

pub fn hermitized(mut x: CMat) -> CMat {
    hermitize(&mut x);
    x
}

/// Relative Frobenius asymmetry `|x - x^H| / |x|` (0 for exactly Hermitian).
pub fn herm_asymmetry(x: &CMat) -> f64 {
    let norm = x.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (x - x.adjoint()).norm() / norm
}

/// `Re tr(a b)` for Hermitian `a`, `b`, without forming the product.
///
/// For Hermitian factors `tr(ab) = sum_ij a_ij conj(b_ij)` is real.
pub fn trace_product_herm(a: &CMat, b: &CMat) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| x.re * y.re + x.im * y.im)
        .sum()
}

/// Real part of the trace.
pub fn trace_re(x: &CMat) -> f64 {
    (0..x.nrows().min(x.ncols())).map(|i| x[(i, i)].re).sum()
}

/// Largest eigenvalue of a Hermitian PSD matrix by power iteration.
///
/// Deterministic (fixed start vector); converges in value even when the top
/// eigenvalue is degenerate.
pub fn spectral_norm_herm_psd(a: &CMat) -> f64 {
    let n = a.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut v = CVec::from_element(n, C64::new(1.0 / (n as f64).sqrt(), 0.0));
    let mut lambda = 0.0f64;
    for _ in 0..500 {
        let w = a * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = norm;
        v = w / C64::new(norm, 0.0);
        if (next - lambda).abs() <= 1e-12 * next.max(1.0) {
            return next;
        }
        lambda = next;
    }
    lambda
}

/// Eigendecomposition of a Hermitian matrix: `(eigenvalues, eigenvectors)`
/// with `x = V diag(l) V^H`.
pub fn hermitian_eigen(x: CMat) -> (DVector<f64>, CMat) {
    let eig = x.symmetric_eigen();
    (eig.eigenvalues, eig.eigenvectors)
}

/// Solves `(a) y = rhs` for Hermitian positive-definite `a`.
pub fn solve_hpd(a: &CMat, rhs: &CMat) -> Option<CMat> {
    a.clone().cholesky().map(|ch| ch.solve(rhs))
}

/// Inverse of a Hermitian positive-definite matrix, hermitized.
pub fn inverse_hpd(a: &CMat) -> Option<CMat> {
    let inv = match a.clone().cholesky() {
        Some(ch) => ch.inverse(),
        None => a.clone().lu().try_inverse()?,
    };
    Some(hermitized(inv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_cmat(r: usize, c: usize, rng: &mut ChaCha8Rng) -> CMat {
        CMat::from_fn(r, c, |_, _| {
            C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        })
    }

    #[test]
    fn matmul_matches_nalgebra() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (m, k, n) in [(3, 4, 5), (17, 9, 33), (64, 64, 64)] {
            let a = random_cmat(m, k, &mut rng);
            let b = random_cmat(k, n, &mut rng);
            let c = matmul(&a, &b);
            let reference = &a * &b;
            assert!((&c - &reference).norm() <= 1e-12 * reference.norm());
            let cs = matmul_seq(&a, &b);
            assert!((&cs - &reference).norm() <= 1e-12 * reference.norm());
        }
    }

    #[test]
    fn parallel_split_is_bitwise_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        // Large enough to cross the parallel threshold and block width.
        let a = random_cmat(96, 96, &mut rng);
        let b = random_cmat(96, 200, &mut rng);
        let c_par = matmul(&a, &b);
        let c_seq = matmul_seq(&a, &b);
        assert_eq!(c_par.as_slice(), c_seq.as_slice());
    }

    #[test]
    fn trace_product_agrees_with_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_cmat(10, 6, &mut rng);
        let a = gram_rx(&x);
        let y = random_cmat(10, 7, &mut rng);
        let b = gram_rx(&y);
        let direct = (&a * &b).trace();
        assert!((trace_product_herm(&a, &b) - direct.re).abs() <= 1e-10 * direct.re.abs());
        assert!(direct.im.abs() <= 1e-10 * direct.re.abs());
    }

    #[test]
    fn spectral_norm_matches_eigen() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = random_cmat(24, 16, &mut rng);
        let a = gram_rx(&x);
        let (vals, _) = hermitian_eigen(a.clone());
        let top = vals.iter().cloned().fold(f64::MIN, f64::max);
        let pow = spectral_norm_herm_psd(&a);
        assert!((pow - top).abs() <= 1e-8 * top);
    }

    #[test]
    fn hermitize_fixes_drift() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut x = random_cmat(8, 8, &mut rng);
        x[(0, 1)] += C64::new(1e-3, 2e-3);
        let h = hermitized(x);
        assert_eq!(herm_asymmetry(&h), 0.0);
    }
}
