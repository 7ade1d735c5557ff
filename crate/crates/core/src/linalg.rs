//! Small dense complex kernels on row-major slices.
//!
//! The equalizer runs these once or twice per symbol with `n` equal to the
//! channel memory, so everything works in caller-provided buffers.

use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `out = a * b` for `n x n` matrices.
pub fn matmul(a: &[Complex64], b: &[Complex64], out: &mut [Complex64], n: usize) {
    debug_assert!(a.len() >= n * n && b.len() >= n * n && out.len() >= n * n);
    for i in 0..n {
        let row = &mut out[i * n..(i + 1) * n];
        row.fill(ZERO);
        for p in 0..n {
            let aip = a[i * n + p];
            if aip == ZERO {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            for (o, &bv) in row.iter_mut().zip(brow) {
                *o += aip * bv;
            }
        }
    }
}

/// `out = a * v` for an `n x n` matrix and a length-`n` vector.
pub fn matvec(a: &[Complex64], v: &[Complex64], out: &mut [Complex64], n: usize) {
    for i in 0..n {
        out[i] = a[i * n..(i + 1) * n]
            .iter()
            .zip(v)
            .fold(ZERO, |acc, (&x, &y)| acc + x * y);
    }
}

pub fn set_identity(a: &mut [Complex64], n: usize) {
    a[..n * n].fill(ZERO);
    for i in 0..n {
        a[i * n + i] = ONE;
    }
}

/// Replaces `a` by `(a + aᴴ) / 2`.
pub fn hermitize(a: &mut [Complex64], n: usize) {
    for i in 0..n {
        a[i * n + i].im = 0.0;
        for j in i + 1..n {
            let avg = (a[i * n + j] + a[j * n + i].conj()) * 0.5;
            a[i * n + j] = avg;
            a[j * n + i] = avg.conj();
        }
    }
}

/// Solves `a X = rhs` in place by LU with partial pivoting. `rhs` is
/// `n x m` row-major and is overwritten with `X`; `a` is destroyed.
///
/// Returns `false` when a pivot is exactly zero.
pub fn lu_solve(a: &mut [Complex64], rhs: &mut [Complex64], n: usize, m: usize) -> bool {
    for col in 0..n {
        let mut piv = col;
        let mut best = a[col * n + col].norm_sqr();
        for r in col + 1..n {
            let v = a[r * n + col].norm_sqr();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best == 0.0 {
            return false;
        }
        if piv != col {
            for j in 0..n {
                a.swap(col * n + j, piv * n + j);
            }
            for j in 0..m {
                rhs.swap(col * m + j, piv * m + j);
            }
        }
        let inv = ONE / a[col * n + col];
        for r in col + 1..n {
            let f = a[r * n + col] * inv;
            if f == ZERO {
                continue;
            }
            a[r * n + col] = ZERO;
            for j in col + 1..n {
                let v = a[col * n + j];
                a[r * n + j] -= f * v;
            }
            for j in 0..m {
                let v = rhs[col * m + j];
                rhs[r * m + j] -= f * v;
            }
        }
    }
    for col in (0..n).rev() {
        let inv = ONE / a[col * n + col];
        for j in 0..m {
            let mut acc = rhs[col * m + j];
            for p in col + 1..n {
                acc -= a[col * n + p] * rhs[p * m + j];
            }
            rhs[col * m + j] = acc * inv;
        }
    }
    true
}

/// Cholesky factorization of a Hermitian matrix, returning the squared
/// diagonal of the factor (the LDLᴴ pivots), or `None` if a pivot is not
/// strictly positive. `a` is overwritten with the lower factor.
pub fn cholesky_pivots(a: &mut [Complex64], n: usize) -> Option<Vec<f64>> {
    let mut pivots = Vec::with_capacity(n);
    for j in 0..n {
        let mut d = a[j * n + j].re;
        for p in 0..j {
            d -= a[j * n + p].norm_sqr();
        }
        if !(d > 0.0) {
            return None;
        }
        pivots.push(d);
        let ljj = d.sqrt();
        a[j * n + j] = Complex64::new(ljj, 0.0);
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for p in 0..j {
                s -= a[i * n + p] * a[j * n + p].conj();
            }
            a[i * n + j] = s / ljj;
        }
    }
    Some(pivots)
}
