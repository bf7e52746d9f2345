//! Hermitian eigensolver: cyclic Jacobi on the complex matrix.
//!
//! Each rotation first removes the phase of the pivot entry with a diagonal
//! unitary, then applies a real Givens rotation. Sweeps run in fixed row-major
//! order so results are bit-identical for identical input.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;

const MAX_SWEEPS: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, ordered like `values`.
    pub vectors: Option<CMatrix>,
}

/// All eigenvalues (ascending) and optionally eigenvectors of a Hermitian matrix.
pub fn eigh(h: &CMatrix, want_vectors: bool) -> Result<Spectrum> {
    assert!(h.is_square(), "eigh needs a square matrix");
    let n = h.rows();
    let scale = h.frobenius();
    let defect = h.hermitian_defect();
    if defect > 1e-12 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NotHermitian { asymmetry: defect });
    }

    let mut a = h.clone();
    for i in 0..n {
        a[(i, i)] = Complex64::new(a[(i, i)].re, 0.0);
    }
    let mut v = want_vectors.then(|| CMatrix::identity(n));

    let threshold = (f64::EPSILON * scale).powi(2) * 1e-2;
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum();
        if off <= threshold || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, v.as_mut(), p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = v.map(|v| CMatrix::from_fn(n, n, |i, k| v[(i, order[k])]));
    Ok(Spectrum { values, vectors })
}

/// Ascending eigenvalues only.
pub fn eigvalsh(h: &CMatrix) -> Result<Vec<f64>> {
    eigh(h, false).map(|s| s.values)
}

fn rotate(a: &mut CMatrix, v: Option<&mut CMatrix>, p: usize, q: usize) {
    let b = a[(p, q)];
    let b_abs = b.norm();
    if b_abs == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    // skip entries already negligible relative to both diagonals
    if b_abs <= f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
        a[(p, q)] = Complex64::new(0.0, 0.0);
        a[(q, p)] = Complex64::new(0.0, 0.0);
        return;
    }
    let phase = b / b_abs;
    let theta = (aqq - app) / (2.0 * b_abs);
    let t = if theta >= 0.0 {
        1.0 / (theta + (theta * theta + 1.0).sqrt())
    } else {
        -1.0 / (-theta + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // U = [[c, s], [−s e^{−iφ}, c e^{−iφ}]] on coordinates (p, q); A ← Uᴴ A U
    let conj_phase = phase.conj();
    let n = a.rows();
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * c - akq * (conj_phase * s);
        a[(k, q)] = akp * s + akq * (conj_phase * c);
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = apk * c - aqk * (phase * s);
        a[(q, k)] = apk * s + aqk * (phase * c);
    }
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);
    a[(p, p)] = Complex64::new(app - t * b_abs, 0.0);
    a[(q, q)] = Complex64::new(aqq + t * b_abs, 0.0);

    if let Some(v) = v {
        for k in 0..n {
            let vkp = v[(k, p)];
            let vkq = v[(k, q)];
            v[(k, p)] = vkp * c - vkq * (conj_phase * s);
            v[(k, q)] = vkp * s + vkq * (conj_phase * c);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, seed: u64) -> CMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(rng.gen_range(-3.0..3.0), 0.0);
            for j in i + 1..n {
                let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        m
    }

    fn nalgebra_eigenvalues(m: &CMatrix) -> Vec<f64> {
        let n = m.rows();
        let na = nalgebra::DMatrix::from_fn(n, n, |i, j| {
            let z = m[(i, j)];
            nalgebra::Complex::new(z.re, z.im)
        });
        let mut values: Vec<f64> = na.symmetric_eigenvalues().iter().copied().collect();
        values.sort_by(f64::total_cmp);
        values
    }

    #[test]
    fn diagonal_is_sorted() {
        let m = CMatrix::from_real_diagonal(&[3.0, 1.0, 2.0]);
        assert_eq!(eigvalsh(&m).unwrap(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn one_by_one() {
        let m = CMatrix::from_real_diagonal(&[0.0]);
        assert_eq!(eigvalsh(&m).unwrap(), vec![0.0]);
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 1)] = Complex64::new(1.0, 0.0);
        assert!(matches!(eigh(&m, false), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn matches_independent_solver() {
        for (n, seed) in [(2, 1), (3, 2), (5, 3), (8, 4), (16, 5), (33, 6)] {
            let m = random_hermitian(n, seed);
            let ours = eigvalsh(&m).unwrap();
            let reference = nalgebra_eigenvalues(&m);
            for (a, b) in ours.iter().zip(&reference) {
                assert!((a - b).abs() < 1e-11 * m.frobenius(), "n={n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn residuals_and_orthonormality() {
        for (n, seed) in [(4, 10), (9, 11), (20, 12)] {
            let m = random_hermitian(n, seed);
            let spec = eigh(&m, true).unwrap();
            let vectors = spec.vectors.unwrap();
            let norm = m.frobenius();
            for k in 0..n {
                let x = vectors.column(k);
                let hx = m.matvec(&x);
                let residual: f64 = hx
                    .iter()
                    .zip(&x)
                    .map(|(a, b)| (a - b * spec.values[k]).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                assert!(residual <= 1e-12 * norm, "residual {residual}");
            }
            let gram = vectors.adjoint().matmul(&vectors);
            let defect = gram.sub(&CMatrix::identity(n)).max_abs();
            assert!(defect < 1e-10);
        }
    }

    #[test]
    fn repeated_eigenvalues() {
        // I + J: eigenvalues 1 (×n−1) and n+1
        let n = 5;
        let m = CMatrix::from_fn(n, n, |i, j| Complex64::new(if i == j { 2.0 } else { 1.0 }, 0.0));
        let values = eigvalsh(&m).unwrap();
        for v in &values[..n - 1] {
            assert!((v - 1.0).abs() < 1e-13);
        }
        assert!((values[n - 1] - 6.0).abs() < 1e-13);
    }

    #[test]
    fn deterministic() {
        let m = random_hermitian(12, 99);
        assert_eq!(eigh(&m, true).unwrap(), eigh(&m, true).unwrap());
    }
}
