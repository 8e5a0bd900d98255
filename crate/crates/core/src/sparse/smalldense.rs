//! Dense symmetric eigensolver (cyclic Jacobi) and Cholesky for the small
//! matrices arising in Rayleigh-Ritz projections and desk-scale eigenproblem
//! reductions.

/// Eigen-decomposition of a symmetric matrix (row-major, destroyed).
/// Returns eigenvalues ascending and eigenvectors as columns (row-major
/// storage: `vecs[i * n + j]` is component i of eigenvector j).
pub fn jacobi_eigen(a: &mut [f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let max_sweeps = 64;
    for _ in 0..max_sweeps {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[i * n + j] * a[i * n + j];
            }
        }
        if off.sqrt() <= 1e-14 * frobenius(a, n).max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].partial_cmp(&a[j * n + j]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vecs = vec![0.0; n * n];
    for (new, &old) in order.iter().enumerate() {
        for i in 0..n {
            vecs[i * n + new] = v[i * n + old];
        }
    }
    (vals, vecs)
}

fn frobenius(a: &[f64], n: usize) -> f64 {
    a[..n * n].iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Dense lower Cholesky (row-major, in place); returns false on a
/// nonpositive pivot.
pub fn dense_cholesky(a: &mut [f64], n: usize) -> bool {
    for i in 0..n {
        for j in 0..=i {
            let mut acc = a[i * n + j];
            for k in 0..j {
                acc -= a[i * n + k] * a[j * n + k];
            }
            if i == j {
                if acc <= 0.0 || !acc.is_finite() {
                    return false;
                }
                a[i * n + i] = acc.sqrt();
            } else {
                a[i * n + j] = acc / a[j * n + j];
            }
        }
        for j in (i + 1)..n {
            a[i * n + j] = 0.0;
        }
    }
    true
}

/// Solves L x = b in place (lower triangular, row-major).
pub fn forward_solve(l: &[f64], n: usize, x: &mut [f64]) {
    for i in 0..n {
        let mut acc = x[i];
        for j in 0..i {
            acc -= l[i * n + j] * x[j];
        }
        x[i] = acc / l[i * n + i];
    }
}

/// Solves L^T x = b in place.
pub fn backward_solve_t(l: &[f64], n: usize, x: &mut [f64]) {
    for i in (0..n).rev() {
        let mut acc = x[i];
        for j in (i + 1)..n {
            acc -= l[j * n + i] * x[j];
        }
        x[i] = acc / l[i * n + i];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn jacobi_recovers_known_spectrum() {
        // diag(1, 4, 9) conjugated by a rotation
        let a = vec![
            2.0, -1.0, 0.0, //
            -1.0, 2.0, -1.0, //
            0.0, -1.0, 2.0,
        ];
        let (vals, vecs) = jacobi_eigen(&mut a.clone(), 3);
        let s2 = 2.0f64.sqrt();
        let expect = [2.0 - s2, 2.0, 2.0 + s2];
        for (v, e) in vals.iter().zip(&expect) {
            assert!((v - e).abs() < 1e-12);
        }
        // residual check A x = lambda x
        for j in 0..3 {
            for i in 0..3 {
                let mut ax = 0.0;
                for k in 0..3 {
                    ax += a[i * 3 + k] * vecs[k * 3 + j];
                }
                assert!((ax - vals[j] * vecs[i * 3 + j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn jacobi_matches_random_symmetric_trace_and_residuals() {
        let mut rng = StdRng::seed_from_u64(9);
        let n = 12;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = rng.gen::<f64>() - 0.5;
                a[i * n + j] = v;
                a[j * n + i] = v;
            }
        }
        let orig = a.clone();
        let (vals, vecs) = jacobi_eigen(&mut a, n);
        let trace: f64 = (0..n).map(|i| orig[i * n + i]).sum();
        let sum: f64 = vals.iter().sum();
        assert!((trace - sum).abs() < 1e-10);
        for j in 0..n {
            let mut res: f64 = 0.0;
            for i in 0..n {
                let mut ax = 0.0;
                for k in 0..n {
                    ax += orig[i * n + k] * vecs[k * n + j];
                }
                res += (ax - vals[j] * vecs[i * n + j]).powi(2);
            }
            assert!(res.sqrt() < 1e-10);
        }
    }

    #[test]
    fn cholesky_solves() {
        let mut a = vec![4.0, 2.0, 2.0, 3.0];
        assert!(dense_cholesky(&mut a, 2));
        let mut x = vec![8.0, 7.0];
        forward_solve(&a, 2, &mut x);
        backward_solve_t(&a, 2, &mut x);
        // A x = (8, 7) -> x = (1.25, 1.5)
        assert!((x[0] - 1.25).abs() < 1e-14);
        assert!((x[1] - 1.5).abs() < 1e-14);
    }
}
