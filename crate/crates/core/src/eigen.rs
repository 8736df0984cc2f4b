//! Dense symmetric eigendecomposition.
//!
//! Householder reduction to tridiagonal form followed by the implicit QL
//! algorithm with Wilkinson-style shifts (the classic `tred2`/`tql2` pair).
//! Both phases are sequential, so results are bit-identical between runs.

use crate::error::{Error, Result};

/// Entries `|a_ij - a_ji|` above this are rejected as non-symmetric.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Components with magnitude at or below this are skipped when fixing signs.
pub const SIGN_TOL: f64 = 1e-12;

const MAX_QL_ITERATIONS: usize = 60;

/// Eigenpairs sorted by decreasing eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigen {
    n: usize,
    pub values: Vec<f64>,
    /// Column-major: vector `j` occupies `vectors[j * n..(j + 1) * n]`.
    vectors: Vec<f64>,
}

impl Eigen {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, j: usize) -> &[f64] {
        &self.vectors[j * self.n..(j + 1) * self.n]
    }
}

/// Row-major dense symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    values: Vec<f64>,
}

impl SymMatrix {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("matrix must be at least 1 x 1"));
        }
        if values.len() != n * n {
            return Err(Error::shape(n * n, values.len()));
        }
        for i in 0..n {
            for j in i..n {
                let (a, b) = (values[i * n + j], values[j * n + i]);
                if !a.is_finite() {
                    return Err(Error::invalid(format!("non-finite entry at ({i}, {j})")));
                }
                if (a - b).abs() > SYMMETRY_TOL {
                    return Err(Error::invalid(format!(
                        "matrix is not symmetric at ({i}, {j}): {a} vs {b}"
                    )));
                }
            }
        }
        Ok(Self { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn frobenius(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                self.values[i * self.n..(i + 1) * self.n]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }
}

/// The `k` largest eigenvalues (descending) with orthonormal eigenvectors.
///
/// Each eigenvector is flipped so that its first component with magnitude above
/// [`SIGN_TOL`] is positive.
pub fn sym_eigen_topk(a: &SymMatrix, k: usize) -> Result<Eigen> {
    let n = a.n();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("k = {k} outside 1..={n}")));
    }
    // v[i][j]: component i of vector j, row-major, overwritten in place
    let mut v = a.values.clone();
    // symmetrize exactly from the upper triangle
    for i in 0..n {
        for j in 0..i {
            v[i * n + j] = v[j * n + i];
        }
    }
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(n, &mut v, &mut d, &mut e);
    tql2(n, &mut v, &mut d, &mut e)?;

    let mut idx: Vec<usize> = (0..n).collect();
    // stable sort: equal eigenvalues keep the solver's order
    idx.sort_by(|&x, &y| d[y].total_cmp(&d[x]));

    let mut values = Vec::with_capacity(k);
    let mut vectors = Vec::with_capacity(k * n);
    for &col in &idx[..k] {
        values.push(d[col]);
        let start = vectors.len();
        vectors.extend((0..n).map(|i| v[i * n + col]));
        let vec = &mut vectors[start..];
        if let Some(&first) = vec.iter().find(|x| x.abs() > SIGN_TOL) {
            if first < 0.0 {
                vec.iter_mut().for_each(|x| *x = -*x);
            }
        }
    }
    Ok(Eigen { n, values, vectors })
}

fn tred2(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64]) {
    for j in 0..n {
        d[j] = v[(n - 1) * n + j];
    }

    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1) * n + j];
                v[i * n + j] = 0.0;
                v[j * n + i] = 0.0;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }

            for j in 0..i {
                f = d[j];
                v[j * n + i] = f;
                g = e[j] + v[j * n + j] * f;
                for k in j + 1..i {
                    g += v[k * n + j] * d[k];
                    e[k] += v[k * n + j] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[k * n + j] -= f * e[k] + g * d[k];
                }
                d[j] = v[(i - 1) * n + j];
                v[i * n + j] = 0.0;
            }
        }
        d[i] = h;
    }

    // accumulate transformations
    for i in 0..n.saturating_sub(1) {
        v[(n - 1) * n + i] = v[i * n + i];
        v[i * n + i] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[k * n + i + 1] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[k * n + i + 1] * v[k * n + j];
                }
                for k in 0..=i {
                    v[k * n + j] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[k * n + i + 1] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1) * n + j];
        v[(n - 1) * n + j] = 0.0;
    }
    v[(n - 1) * n + n - 1] = 1.0;
    e[0] = 0.0;
}

fn tql2(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64]) -> Result<()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        // e[n-1] is zero, so m < n here
        let m = m.min(n - 1);

        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_QL_ITERATIONS {
                    return Err(Error::NumericFailure(format!(
                        "QL iteration did not converge for eigenvalue {l} after {MAX_QL_ITERATIONS} sweeps"
                    )));
                }

                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);

                    for k in 0..n {
                        h = v[k * n + i + 1];
                        v[k * n + i + 1] = s * v[k * n + i] + c * h;
                        v[k * n + i] = c * v[k * n + i] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;

                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}
