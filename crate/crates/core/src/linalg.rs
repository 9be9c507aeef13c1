//! Eigenvalues of Hermitian matrices, LU solves and the matrix exponential.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64 as C64;
#[allow(unused_imports)] // inherent f64 math is only present when std is linked
use num_traits::Float;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::matrix::CMatrix;

/// Eigenvalues of the Hermitian part of `m`, ascending.
///
/// The n×n Hermitian matrix `A + iB` is embedded as the real symmetric
/// `[[A, -B], [B, A]]`, whose spectrum is that of `A + iB` with every value
/// doubled; one copy of each pair is kept.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Result<Vec<f64>> {
    let n = m.dim();
    let h = m.hermitian_part();
    let nn = 2 * n;
    let mut a = vec![0.0; nn * nn];
    for i in 0..n {
        for j in 0..n {
            let z = h[(i, j)];
            a[i * nn + j] = z.re;
            a[(i + n) * nn + (j + n)] = z.re;
            a[i * nn + (j + n)] = -z.im;
            a[(i + n) * nn + j] = z.im;
        }
    }
    let mut ev = symmetric_eigenvalues(nn, &mut a)?;
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap_or(core::cmp::Ordering::Equal));
    Ok(ev.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect())
}

/// Eigenvalues of a real symmetric matrix (row-major, destroyed in place),
/// by Householder tridiagonalisation followed by implicit-shift QL.
pub fn symmetric_eigenvalues(n: usize, a: &mut [f64]) -> Result<Vec<f64>> {
    assert_eq!(a.len(), n * n);
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(n, a, &mut d, &mut e);
    tridiagonal_ql(&mut d, &mut e)?;
    Ok(d)
}

fn tridiagonalize(n: usize, a: &mut [f64], d: &mut [f64], e: &mut [f64]) {
    let idx = |i: usize, j: usize| i * n + j;
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let scale: f64 = (0..=l).map(|k| a[idx(i, k)].abs()).sum();
            if scale == 0.0 {
                e[i] = a[idx(i, l)];
            } else {
                for k in 0..=l {
                    a[idx(i, k)] /= scale;
                    h += a[idx(i, k)] * a[idx(i, k)];
                }
                let f = a[idx(i, l)];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[idx(i, l)] = f - g;
                let mut f = 0.0;
                for j in 0..=l {
                    let mut g = 0.0;
                    for k in 0..=j {
                        g += a[idx(j, k)] * a[idx(i, k)];
                    }
                    for k in (j + 1)..=l {
                        g += a[idx(k, j)] * a[idx(i, k)];
                    }
                    e[j] = g / h;
                    f += e[j] * a[idx(i, j)];
                }
                let hh = f / (h + h);
                for j in 0..=l {
                    let f = a[idx(i, j)];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        a[idx(j, k)] -= f * e[k] + g * a[idx(i, k)];
                    }
                }
            }
        } else {
            e[i] = a[idx(i, l)];
        }
        d[i] = h;
    }
    e[0] = 0.0;
    for i in 0..n {
        d[i] = a[idx(i, i)];
    }
}

fn tridiagonal_ql(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    // Off-diagonals are negligible relative to the whole matrix, so clusters of
    // tiny eigenvalues still deflate.
    let norm = d.iter().zip(e.iter()).map(|(a, b)| a.abs() + b.abs()).fold(0.0, f64::max);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                if e[m].abs() <= f64::EPSILON * norm {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::Numerical("tridiagonal QL did not converge".into()));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// LU factorisation with partial pivoting.
pub struct Lu {
    n: usize,
    lu: Vec<C64>,
    perm: Vec<usize>,
}

impl Lu {
    pub fn new(m: &CMatrix) -> Result<Self> {
        let n = m.dim();
        let mut lu = m.as_slice().to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = m.max_abs().max(f64::MIN_POSITIVE);
        for k in 0..n {
            let (piv, best) =
                (k..n).map(|i| (i, lu[i * n + k].norm())).fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best <= 1e-300 * scale {
                return Err(Error::Numerical("singular matrix in LU".into()));
            }
            if piv != k {
                for j in 0..n {
                    lu.swap(k * n + j, piv * n + j);
                }
                perm.swap(k, piv);
            }
            let pivot = lu[k * n + k];
            for i in (k + 1)..n {
                let f = lu[i * n + k] / pivot;
                lu[i * n + k] = f;
                if f.is_zero() {
                    continue;
                }
                for j in (k + 1)..n {
                    let u = lu[k * n + j];
                    lu[i * n + j] -= f * u;
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    /// Solves `A X = B` for a square right-hand side.
    pub fn solve_matrix(&self, b: &CMatrix) -> CMatrix {
        let n = self.n;
        assert_eq!(b.dim(), n);
        let mut x = CMatrix::zeros(n);
        for col in 0..n {
            let rhs: Vec<C64> = (0..n).map(|i| b[(self.perm[i], col)]).collect();
            let sol = self.substitute(rhs);
            for i in 0..n {
                x[(i, col)] = sol[i];
            }
        }
        x
    }

    pub fn solve_vec(&self, b: &[C64]) -> Vec<C64> {
        let rhs: Vec<C64> = (0..self.n).map(|i| b[self.perm[i]]).collect();
        self.substitute(rhs)
    }

    fn substitute(&self, mut y: Vec<C64>) -> Vec<C64> {
        let n = self.n;
        for i in 0..n {
            let mut acc = y[i];
            for j in 0..i {
                acc -= self.lu[i * n + j] * y[j];
            }
            y[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = y[i];
            for j in (i + 1)..n {
                acc -= self.lu[i * n + j] * y[j];
            }
            y[i] = acc / self.lu[i * n + i];
        }
        y
    }
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

const THETA13: f64 = 5.371920351148152;

/// Matrix exponential by scaling and squaring with a degree-13 Padé
/// approximant.
pub fn expm(a: &CMatrix) -> Result<CMatrix> {
    let n = a.dim();
    let norm = a.norm_one();
    if norm == 0.0 {
        return Ok(CMatrix::identity(n));
    }
    let s = if norm > THETA13 { (norm / THETA13).log2().ceil() as i32 } else { 0 };
    let a = a.scale_real(0.5f64.powi(s));
    let id = CMatrix::identity(n);
    let a2 = a.matmul(&a);
    let a4 = a2.matmul(&a2);
    let a6 = a4.matmul(&a2);
    let b = &PADE13;
    let lin = |c6: f64, c4: f64, c2: f64, c0: f64| -> CMatrix {
        let mut m = a6.scale_real(c6);
        m += &a4.scale_real(c4);
        m += &a2.scale_real(c2);
        m += &id.scale_real(c0);
        m
    };
    let mut u_inner = a6.matmul(&lin(b[13], b[11], b[9], 0.0));
    u_inner += &lin(0.0, b[5], b[3], b[1]).scale_real(1.0);
    u_inner += &a6.scale_real(b[7]);
    let u = a.matmul(&u_inner);
    let mut v = a6.matmul(&lin(b[12], b[10], b[8], 0.0));
    v += &lin(b[6], b[4], b[2], b[0]);
    let p = &v + &u;
    let q = &v - &u;
    let mut r = Lu::new(&q)?.solve_matrix(&p);
    for _ in 0..s {
        r = r.matmul(&r);
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn graded_rank_one_matrix_converges() {
        // Entries decay like exp(-i/10): most eigenvalues sit far below the
        // local diagonal scale.
        let d = 256;
        let v: Vec<C64> = (0..d)
            .map(|i| c((i as f64 * 0.37).cos(), (i as f64 * 0.11).sin()).scale((-(i as f64) / 10.0).exp()))
            .collect();
        let m = CMatrix::from_fn(d, |i, j| v[i] * v[j].conj());
        let ev = hermitian_eigenvalues(&m).unwrap();
        let norm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        assert!((ev[d - 1] - norm2).abs() < 1e-13 * norm2);
        assert!(ev[..d - 1].iter().all(|x| x.abs() < 1e-14 * norm2));
    }

    #[test]
    fn eigenvalues_of_pauli_y() {
        let y = CMatrix::from_row_major(vec![c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]);
        let ev = hermitian_eigenvalues(&y).unwrap();
        assert!((ev[0] + 1.0).abs() < 1e-14 && (ev[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eigenvalues_of_diagonal_are_sorted_entries() {
        let d = CMatrix::diagonal(&[c(3., 0.), c(-1., 0.), c(0.5, 0.), c(2., 0.)]);
        let ev = hermitian_eigenvalues(&d).unwrap();
        for (got, want) in ev.iter().zip([-1.0, 0.5, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-13);
        }
    }

    #[test]
    fn expm_of_zero_and_of_diagonal() {
        let z = CMatrix::zeros(3);
        assert_eq!(expm(&z).unwrap(), CMatrix::identity(3));
        let d = CMatrix::diagonal(&[c(1., 0.), c(-2., 0.), c(0., 7.)]);
        let e = expm(&d).unwrap();
        assert!((e[(0, 0)] - c(1f64.exp(), 0.)).norm() < 1e-13);
        assert!((e[(1, 1)] - c((-2f64).exp(), 0.)).norm() < 1e-15);
        assert!((e[(2, 2)] - c(7f64.cos(), 7f64.sin())).norm() < 1e-13);
    }

    #[test]
    fn expm_of_rotation_generator() {
        // exp(t [[0, 1], [-1, 0]]) = [[cos t, sin t], [-sin t, cos t]]
        let t = 12.3;
        let g = CMatrix::from_real_rows(&[&[0., t], &[-t, 0.]]);
        let e = expm(&g).unwrap();
        assert!((e[(0, 0)].re - t.cos()).abs() < 1e-12);
        assert!((e[(0, 1)].re - t.sin()).abs() < 1e-12);
        assert!((e[(1, 0)].re + t.sin()).abs() < 1e-12);
    }

    #[test]
    fn lu_solves_linear_system() {
        let a = CMatrix::from_row_major(vec![c(0., 1.), c(2., 0.), c(1., -1.), c(3., 0.)]);
        let x = [c(1., 2.), c(-0.5, 0.25)];
        let b = a.mul_vec(&x);
        let sol = Lu::new(&a).unwrap().solve_vec(&b);
        for (s, want) in sol.iter().zip(&x) {
            assert!((s - want).norm() < 1e-14);
        }
    }
}
