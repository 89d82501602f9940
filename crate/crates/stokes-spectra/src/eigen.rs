//! Dense nonsymmetric complex eigenvalues: Householder reduction to upper
//! Hessenberg form followed by single-shift QR with Givens rotations.
//! Eigenvectors come from inverse iteration on the original matrix.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

fn abs1(z: Complex64) -> f64 {
    z.re.abs() + z.im.abs()
}

/// Reduces `a` in place to upper Hessenberg form by unitary similarity.
pub fn hessenberg(a: &mut DMatrix<Complex64>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "square matrix expected");
    if n < 3 {
        return;
    }
    let mut v = vec![zero(); n];
    for k in 0..n - 2 {
        let norm: f64 = (k + 1..n).map(|i| a[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let phase = if x0.norm() == 0.0 { Complex64::new(1.0, 0.0) } else { x0 / x0.norm() };
        let alpha = -phase * norm;
        for i in k + 1..n {
            v[i] = a[(i, k)];
        }
        v[k + 1] -= alpha;
        let vn: f64 = (k + 1..n).map(|i| v[i].norm_sqr()).sum::<f64>().sqrt();
        if vn == 0.0 {
            continue;
        }
        for i in k + 1..n {
            v[i] /= vn;
        }
        // A ← (I − 2vvᴴ) A
        for j in k..n {
            let s: Complex64 = (k + 1..n).map(|i| v[i].conj() * a[(i, j)]).sum();
            let s = s * 2.0;
            for i in k + 1..n {
                let vi = v[i];
                a[(i, j)] -= vi * s;
            }
        }
        // A ← A (I − 2vvᴴ)
        for i in 0..n {
            let s: Complex64 = (k + 1..n).map(|j| a[(i, j)] * v[j]).sum();
            let s = s * 2.0;
            for j in k + 1..n {
                let vj = v[j].conj();
                a[(i, j)] -= s * vj;
            }
        }
        a[(k + 1, k)] = alpha;
        for i in k + 2..n {
            a[(i, k)] = zero();
        }
    }
}

/// Rotation `[[c, s], [−s̄, c]]` mapping `(x, y)` to `(r, 0)`.
fn givens(x: Complex64, y: Complex64) -> (f64, Complex64) {
    let ax = x.norm();
    let ay = y.norm();
    if ay == 0.0 {
        return (1.0, zero());
    }
    if ax == 0.0 {
        return (0.0, y.conj() / ay);
    }
    let r = ax.hypot(ay);
    (ax / r, (x / ax) * y.conj() / r)
}

/// Eigenvalues of an upper Hessenberg matrix, destroying it.
pub fn hessenberg_eigenvalues(h: &mut DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    let n = h.nrows();
    let mut eig = vec![zero(); n];
    if n == 0 {
        return Ok(eig);
    }
    let ulp = f64::EPSILON;
    let safmin = f64::MIN_POSITIVE;
    let smlnum = safmin * (n as f64 / ulp);
    let itmax = 30 * n.max(10);
    let mut total = 0usize;

    let mut hi = n - 1;
    loop {
        let mut its = 0usize;
        loop {
            // look for a negligible subdiagonal entry
            let mut l = hi;
            while l > 0 {
                let sub = h[(l, l - 1)];
                if abs1(sub) <= smlnum {
                    break;
                }
                let mut tst = abs1(h[(l - 1, l - 1)]) + abs1(h[(l, l)]);
                if tst == 0.0 {
                    if l >= 2 {
                        tst += abs1(h[(l - 1, l - 2)]);
                    }
                    if l + 1 <= hi {
                        tst += abs1(h[(l + 1, l)]);
                    }
                }
                if abs1(sub) <= ulp * tst {
                    // refined test on the 2×2 window
                    let ab = abs1(sub).max(abs1(h[(l - 1, l)]));
                    let ba = abs1(sub).min(abs1(h[(l - 1, l)]));
                    let aa = abs1(h[(l, l)]).max(abs1(h[(l - 1, l - 1)] - h[(l, l)]));
                    let bb = abs1(h[(l, l)]).min(abs1(h[(l - 1, l - 1)] - h[(l, l)]));
                    let s = aa + ab;
                    if ba * (ab / s) <= smlnum.max(ulp * (bb * (aa / s))) {
                        break;
                    }
                }
                l -= 1;
            }
            if l > 0 {
                h[(l, l - 1)] = zero();
            }
            if l == hi {
                eig[hi] = h[(hi, hi)];
                break;
            }
            its += 1;
            total += 1;
            if total > itmax {
                return Err(Error::EigenNonConvergence(total));
            }

            let shift = if its % 10 == 0 {
                // exceptional shifts break cycles
                if its % 20 == 0 {
                    h[(hi, hi)] + 0.75 * abs1(h[(hi, hi - 1)])
                } else {
                    h[(l, l)] + 0.75 * abs1(h[(l + 1, l)])
                }
            } else {
                let a = h[(hi - 1, hi - 1)];
                let b = h[(hi - 1, hi)];
                let c = h[(hi, hi - 1)];
                let d = h[(hi, hi)];
                let tr = (a + d) * 0.5;
                let disc = (((a - d) * 0.5) * ((a - d) * 0.5) + b * c).sqrt();
                let m1 = tr + disc;
                let m2 = tr - disc;
                if (m1 - d).norm() <= (m2 - d).norm() {
                    m1
                } else {
                    m2
                }
            };

            // implicit single-shift sweep over rows l..=hi
            let mut x = h[(l, l)] - shift;
            let mut y = h[(l + 1, l)];
            for k in l..hi {
                if k > l {
                    x = h[(k, k - 1)];
                    y = h[(k + 1, k - 1)];
                }
                let (c, s) = givens(x, y);
                let c0 = if k > l { k - 1 } else { l };
                for j in c0..=hi {
                    let t1 = h[(k, j)];
                    let t2 = h[(k + 1, j)];
                    h[(k, j)] = t1 * c + s * t2;
                    h[(k + 1, j)] = -s.conj() * t1 + t2 * c;
                }
                let r1 = (k + 2).min(hi);
                for i in l..=r1 {
                    let t1 = h[(i, k)];
                    let t2 = h[(i, k + 1)];
                    h[(i, k)] = t1 * c + t2 * s.conj();
                    h[(i, k + 1)] = -t1 * s + t2 * c;
                }
                if k > l {
                    h[(k + 1, k - 1)] = zero();
                }
            }
        }
        if hi == 0 {
            break;
        }
        hi -= 1;
    }
    Ok(eig)
}

/// All eigenvalues of a general complex square matrix, unsorted.
pub fn eigenvalues(a: &DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    let mut h = a.clone();
    hessenberg(&mut h);
    hessenberg_eigenvalues(&mut h)
}

/// Right eigenvector for an eigenvalue estimate, by inverse iteration.
/// Returns the unit vector and the residual `‖Av − λv‖`.
pub fn eigenvector(a: &DMatrix<Complex64>, lambda: Complex64) -> Result<(DVector<Complex64>, f64)> {
    let n = a.nrows();
    let scale = a.iter().fold(0.0f64, |m, z| m.max(z.norm())).max(1.0);
    let mut shifted = a.clone();
    let nudge = Complex64::new(1e-13 * scale, 1e-13 * scale);
    for i in 0..n {
        shifted[(i, i)] -= lambda + nudge;
    }
    let lu = shifted.lu();
    let mut v = DVector::from_fn(n, |i, _| Complex64::new(1.0, 0.37 * (i as f64 + 1.0).sin()));
    v /= Complex64::from(v.norm());
    for _ in 0..3 {
        let w = lu
            .solve(&v)
            .ok_or_else(|| Error::EigenNonConvergence(0))?;
        let nw = w.norm();
        if !nw.is_finite() || nw == 0.0 {
            return Err(Error::EigenNonConvergence(0));
        }
        v = w / Complex64::from(nw);
    }
    let res = (a * &v - &v * lambda).norm();
    Ok((v, res))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
        v
    }

    #[test]
    fn triangular_matrix() {
        let a = DMatrix::from_fn(5, 5, |i, j| if i <= j { c((i + 2 * j) as f64, i as f64) } else { zero() });
        let ev = sorted(eigenvalues(&a).unwrap());
        let want = sorted((0..5).map(|i| a[(i, i)]).collect());
        for (x, y) in ev.iter().zip(&want) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn similarity_preserves_spectrum() {
        let n = 12;
        let d: Vec<Complex64> = (0..n).map(|i| c(i as f64 * 0.5 - 2.0, (i as f64).cos())).collect();
        let s = DMatrix::from_fn(n, n, |i, j| c(((i * 7 + j * 3) % 11) as f64 / 11.0 + if i == j { 2.0 } else { 0.0 }, ((i + 2 * j) % 5) as f64 / 9.0));
        let sinv = s.clone().try_inverse().unwrap();
        let a = &s * DMatrix::from_diagonal(&DVector::from_vec(d.clone())) * sinv;
        let ev = sorted(eigenvalues(&a).unwrap());
        for (x, y) in ev.iter().zip(sorted(d).iter()) {
            assert!((x - y).norm() < 1e-10, "{x} vs {y}");
        }
    }

    #[test]
    fn hessenberg_is_similar() {
        let n = 9;
        let a = DMatrix::from_fn(n, n, |i, j| c(((i * 5 + j * 7) % 13) as f64, ((i + j) % 3) as f64 - 1.0));
        let mut h = a.clone();
        hessenberg(&mut h);
        for i in 0..n {
            for j in 0..n {
                if i > j + 1 {
                    assert_eq!(h[(i, j)], zero());
                }
            }
        }
        assert!((a.trace() - h.trace()).norm() < 1e-12);
        assert!(((a.clone() * a.clone()).trace() - (h.clone() * h.clone()).trace()).norm() < 1e-9);
    }

    #[test]
    fn nilpotent_jordan_block() {
        let n = 4;
        let a = DMatrix::from_fn(n, n, |i, j| if j == i + 1 { c(1.0, 0.0) } else { zero() });
        for l in eigenvalues(&a).unwrap() {
            assert!(l.norm() < 1e-3);
        }
    }

    #[test]
    fn rotation_matrix_spectrum() {
        let a = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let ev = sorted(eigenvalues(&a).unwrap());
        assert!((ev[0] - c(0.0, -1.0)).norm() < 1e-14);
        assert!((ev[1] - c(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn inverse_iteration_vectors() {
        let n = 10;
        let a = DMatrix::from_fn(n, n, |i, j| c(1.0 / (1.0 + i as f64 + j as f64), if i == j { i as f64 } else { 0.0 }));
        for l in eigenvalues(&a).unwrap() {
            let (_, res) = eigenvector(&a, l).unwrap();
            assert!(res < 1e-10, "{res}");
        }
    }
}
