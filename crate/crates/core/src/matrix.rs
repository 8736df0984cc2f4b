//! Dense feature and dissimilarity containers plus the pairwise-distance kernel.
//!
//! Every downstream permutation refers to the row order of a [`FeatureMatrix`].
//! Dissimilarities are stored as a full row-major `n × n` block of `f64`; only
//! the upper triangle is computed and then mirrored, so the stored matrix is
//! exactly symmetric.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when checking `m[i][j] == m[j][i]`.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// `n` records of `d` features each, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    n: usize,
    d: usize,
    values: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(n: usize, d: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::invalid(format!(
                "feature matrix needs n >= 1 and d >= 1, got {n} x {d}"
            )));
        }
        if values.len() != n * d {
            return Err(Error::shape(format!("{} values", n * d), values.len()));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / d,
                col: pos % d,
            });
        }
        Ok(Self { n, d, values })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let d = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut values = Vec::with_capacity(rows.len() * d);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != d {
                return Err(Error::shape(
                    format!("row {i} of length {d}"),
                    format!("length {}", row.len()),
                ));
            }
            values.extend_from_slice(row);
        }
        Self::new(rows.len(), d, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    /// Rows selected by `indices`, in that order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(indices.len() * self.d);
        for &i in indices {
            if i >= self.n {
                return Err(Error::invalid(format!(
                    "row index {i} out of range for {} records",
                    self.n
                )));
            }
            values.extend_from_slice(self.row(i));
        }
        Self::new(indices.len(), self.d, values)
    }

    /// Per-dimension z-scoring. Constant columns are centred but not scaled.
    pub fn standardized(&self) -> Self {
        let (n, d) = (self.n, self.d);
        let mut values = self.values.clone();
        for c in 0..d {
            let mean = (0..n).map(|i| self.values[i * d + c]).sum::<f64>() / n as f64;
            let var = (0..n)
                .map(|i| (self.values[i * d + c] - mean).powi(2))
                .sum::<f64>()
                / n as f64;
            let sd = var.sqrt();
            for i in 0..n {
                let v = &mut values[i * d + c];
                *v -= mean;
                if sd > 0.0 {
                    *v /= sd;
                }
            }
        }
        Self { n, d, values }
    }
}

/// First invariant violated by a candidate dissimilarity matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NotSquare {
        len: usize,
        n: usize,
    },
    NonFinite {
        i: usize,
        j: usize,
    },
    Negative {
        i: usize,
        j: usize,
        value: f64,
    },
    NonZeroDiagonal {
        i: usize,
        value: f64,
    },
    Asymmetric {
        i: usize,
        j: usize,
        upper: f64,
        lower: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NotSquare { len, n } => {
                write!(f, "{len} values cannot form a {n} x {n} matrix")
            }
            Violation::NonFinite { i, j } => write!(f, "non-finite entry at ({i}, {j})"),
            Violation::Negative { i, j, value } => {
                write!(f, "negative entry {value} at ({i}, {j})")
            }
            Violation::NonZeroDiagonal { i, value } => {
                write!(f, "diagonal entry ({i}, {i}) is {value}, expected 0")
            }
            Violation::Asymmetric { i, j, upper, lower } => write!(
                f,
                "asymmetric entries at ({i}, {j}) = {upper} and ({j}, {i}) = {lower}"
            ),
        }
    }
}

/// Checks the dissimilarity invariants in row-major order and reports the first failure.
pub fn validate_dissim(n: usize, values: &[f64]) -> std::result::Result<(), Violation> {
    if values.len() != n * n {
        return Err(Violation::NotSquare {
            len: values.len(),
            n,
        });
    }
    for i in 0..n {
        for j in 0..n {
            let v = values[i * n + j];
            if !v.is_finite() {
                return Err(Violation::NonFinite { i, j });
            }
            if v < 0.0 {
                return Err(Violation::Negative { i, j, value: v });
            }
            if i == j && v != 0.0 {
                return Err(Violation::NonZeroDiagonal { i, value: v });
            }
            if j > i {
                let lower = values[j * n + i];
                if lower.is_finite() && (v - lower).abs() > SYMMETRY_TOL {
                    return Err(Violation::Asymmetric {
                        i,
                        j,
                        upper: v,
                        lower,
                    });
                }
            }
        }
    }
    Ok(())
}

/// Symmetric `n × n` nonnegative distances with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DissimilarityMatrix {
    n: usize,
    values: Vec<f64>,
}

impl DissimilarityMatrix {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("dissimilarity matrix must have n >= 1"));
        }
        validate_dissim(n, &values).map_err(Error::InvalidMatrix)?;
        Ok(Self { n, values })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let mut values = Vec::with_capacity(n * n);
        for row in rows {
            let row = row.as_ref();
            if row.len() != n {
                return Err(Error::InvalidMatrix(Violation::NotSquare {
                    len: row.len() * n,
                    n,
                }));
            }
            values.extend_from_slice(row);
        }
        Self::new(n, values)
    }

    /// Skips validation; callers guarantee the invariants by construction.
    pub(crate) fn from_trusted(n: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), n * n);
        Self { n, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn validate(&self) -> std::result::Result<(), Violation> {
        validate_dissim(self.n, &self.values)
    }

    /// Principal submatrix on `indices`, in that order.
    pub fn submatrix(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::invalid("submatrix needs at least one index"));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.n) {
            return Err(Error::invalid(format!(
                "index {bad} out of range for n = {}",
                self.n
            )));
        }
        let k = indices.len();
        let mut values = Vec::with_capacity(k * k);
        for &i in indices {
            let row = self.row(i);
            values.extend(indices.iter().map(|&j| row[j]));
        }
        Ok(Self::from_trusted(k, values))
    }
}

/// A bijection on `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let n = order.len();
        let mut seen = vec![false; n];
        for &p in &order {
            if p >= n || seen[p] {
                return Err(Error::invalid(format!(
                    "not a permutation of 0..{n}: index {p} out of range or repeated"
                )));
            }
            seen[p] = true;
        }
        Ok(Self(order))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.0.len()];
        for (pos, &p) in self.0.iter().enumerate() {
            inv[p] = pos;
        }
        Self(inv)
    }

    /// `items` rearranged so that position `i` holds `items[self[i]]`.
    pub fn apply<T: Clone>(&self, items: &[T]) -> Result<Vec<T>> {
        if items.len() != self.0.len() {
            return Err(Error::shape(self.0.len(), items.len()));
        }
        Ok(self.0.iter().map(|&p| items[p].clone()).collect())
    }
}

impl std::ops::Index<usize> for Permutation {
    type Output = usize;

    fn index(&self, i: usize) -> &usize {
        &self.0[i]
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;

    fn try_from(order: Vec<usize>) -> Result<Self> {
        Self::new(order)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.0
    }
}

#[inline]
fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Pairwise Euclidean distances between the rows of `features`.
pub fn euclidean_dissim(features: &FeatureMatrix) -> DissimilarityMatrix {
    pairwise_dissim(features, euclidean)
}

/// Pairwise distances under a caller-supplied metric.
///
/// Only pairs `i < j` are evaluated; the lower triangle is mirrored. The
/// metric must be nonnegative and finite. Each entry is computed by a single
/// call, so the result does not depend on the number of worker threads.
pub fn pairwise_dissim<F>(features: &FeatureMatrix, metric: F) -> DissimilarityMatrix
where
    F: Fn(&[f64], &[f64]) -> f64 + Sync,
{
    let n = features.n();
    let mut values = vec![0.0; n * n];
    values.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let xi = features.row(i);
        for (j, out) in row.iter_mut().enumerate().skip(i + 1) {
            *out = metric(xi, features.row(j));
        }
    });
    mirror_upper(n, &mut values);
    DissimilarityMatrix::from_trusted(n, values)
}

fn mirror_upper(n: usize, values: &mut [f64]) {
    for i in 0..n {
        for j in i + 1..n {
            values[j * n + i] = values[i * n + j];
        }
    }
}

/// Streams the Euclidean dissimilarity matrix row by row without holding it.
///
/// Rows are produced in tiles of `tile_rows`; each row is computed in full
/// (both triangles), giving bit-identical values to [`euclidean_dissim`]
/// because `‖a − b‖` is evaluated with the operands in upper-triangle order.
pub fn for_each_dissim_row<E>(
    features: &FeatureMatrix,
    tile_rows: usize,
    mut sink: impl FnMut(usize, &[f64]) -> std::result::Result<(), E>,
) -> std::result::Result<(), E> {
    let n = features.n();
    let tile_rows = tile_rows.max(1);
    let mut tile = vec![0.0; tile_rows * n];
    let mut start = 0;
    while start < n {
        let rows = tile_rows.min(n - start);
        tile[..rows * n]
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(r, row)| {
                let i = start + r;
                for (j, out) in row.iter_mut().enumerate() {
                    *out = match j.cmp(&i) {
                        std::cmp::Ordering::Equal => 0.0,
                        std::cmp::Ordering::Greater => euclidean(features.row(i), features.row(j)),
                        std::cmp::Ordering::Less => euclidean(features.row(j), features.row(i)),
                    };
                }
            });
        for r in 0..rows {
            sink(start + r, &tile[r * n..(r + 1) * n])?;
        }
        start += rows;
    }
    Ok(())
}

/// `out[i][j] = m[p[i]][p[j]]`.
pub fn permute_matrix(m: &DissimilarityMatrix, p: &Permutation) -> Result<DissimilarityMatrix> {
    let n = m.n();
    if p.len() != n {
        return Err(Error::shape(
            format!("permutation of length {n}"),
            format!("length {}", p.len()),
        ));
    }
    let mut values = vec![0.0; n * n];
    values.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let src = m.row(p[i]);
        for (out, &pj) in row.iter_mut().zip(p.as_slice()) {
            *out = src[pj];
        }
    });
    Ok(DissimilarityMatrix::from_trusted(n, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fm(rows: &[&[f64]]) -> FeatureMatrix {
        FeatureMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn three_four_five() {
        let d = euclidean_dissim(&fm(&[&[0.0, 0.0], &[3.0, 4.0]]));
        assert_eq!(d.as_slice(), &[0.0, 5.0, 5.0, 0.0]);
    }

    #[test]
    fn identical_rows_have_zero_distance() {
        let d = euclidean_dissim(&fm(&[&[1.5, -2.0], &[1.5, -2.0]]));
        assert_eq!(d.get(0, 1), 0.0);
    }

    #[test]
    fn three_points_in_3d() {
        let d = euclidean_dissim(&fm(&[&[1.0, 2.0, 2.0], &[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0]]));
        // sqrt(1+4+4), sqrt(0+4+4), sqrt(1)
        assert_eq!(d.get(0, 1), 3.0);
        assert!((d.get(0, 2) - 8f64.sqrt()).abs() < 1e-12);
        assert!((d.get(0, 2) - 2.828_427_1).abs() < 1e-7);
        assert_eq!(d.get(1, 2), 1.0);
    }

    #[test]
    fn non_finite_features_name_the_row() {
        let err = FeatureMatrix::new(2, 2, vec![0.0, 1.0, f64::NAN, 0.0]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { row: 1, col: 0 }));
        assert!(err.to_string().contains("row 1"));
    }

    #[test]
    fn empty_features_rejected() {
        assert!(FeatureMatrix::new(0, 3, vec![]).is_err());
        assert!(FeatureMatrix::new(2, 0, vec![]).is_err());
    }

    #[test]
    fn permute_identity_and_swap() {
        let m = DissimilarityMatrix::from_rows(&[[0.0, 2.0], [2.0, 0.0]]).unwrap();
        assert_eq!(permute_matrix(&m, &Permutation::identity(2)).unwrap(), m);
        let swap = Permutation::new(vec![1, 0]).unwrap();
        assert_eq!(permute_matrix(&m, &swap).unwrap(), m);
    }

    #[test]
    fn permute_three_by_three() {
        let m =
            DissimilarityMatrix::from_rows(&[[0.0, 1.0, 2.0], [1.0, 0.0, 3.0], [2.0, 3.0, 0.0]])
                .unwrap();
        let p = Permutation::new(vec![2, 0, 1]).unwrap();
        let out = permute_matrix(&m, &p).unwrap();
        // out[i][j] = m[p[i]][p[j]]: out[0][1] = m[2][0] = 2, out[0][2] = m[2][1] = 3,
        // out[1][2] = m[0][1] = 1
        let expected =
            DissimilarityMatrix::from_rows(&[[0.0, 2.0, 3.0], [2.0, 0.0, 1.0], [3.0, 1.0, 0.0]])
                .unwrap();
        assert_eq!(out, expected);
    }

    #[test]
    fn permute_length_mismatch() {
        let m = DissimilarityMatrix::from_rows(&[[0.0, 2.0], [2.0, 0.0]]).unwrap();
        assert!(permute_matrix(&m, &Permutation::identity(3)).is_err());
    }

    #[test]
    fn validation_reports_first_violation() {
        assert_eq!(validate_dissim(2, &[0.0, 1.0, 1.0, 0.0]), Ok(()));
        assert!(matches!(
            validate_dissim(2, &[0.0, 1.0, 2.0, 0.0]),
            Err(Violation::Asymmetric { i: 0, j: 1, .. })
        ));
        assert!(matches!(
            validate_dissim(2, &[0.0, -1.0, -1.0, 0.0]),
            Err(Violation::Negative { i: 0, j: 1, .. })
        ));
        assert!(matches!(
            validate_dissim(2, &[0.5, 1.0, 1.0, 0.0]),
            Err(Violation::NonZeroDiagonal { i: 0, .. })
        ));
        assert!(matches!(
            validate_dissim(2, &[0.0, 1.0, 1.0]),
            Err(Violation::NotSquare { .. })
        ));
    }

    #[test]
    fn permutation_rejects_repeats() {
        assert!(Permutation::new(vec![0, 0]).is_err());
        assert!(Permutation::new(vec![0, 2]).is_err());
        let p = Permutation::try_from(vec![1, 2, 0]).unwrap();
        assert_eq!(p.inverse().as_slice(), &[2, 0, 1]);
    }

    #[test]
    fn streaming_rows_match_dense() {
        let f =
            FeatureMatrix::new(7, 3, (0..21).map(|x| (x as f64 * 0.37).sin()).collect()).unwrap();
        let dense = euclidean_dissim(&f);
        let mut streamed = Vec::new();
        for_each_dissim_row(&f, 3, |_, row| {
            streamed.extend_from_slice(row);
            Ok::<_, ()>(())
        })
        .unwrap();
        assert_eq!(streamed, dense.as_slice());
    }

    #[test]
    fn thread_count_does_not_change_bits() {
        let f =
            FeatureMatrix::new(40, 5, (0..200).map(|x| (x as f64 * 1.3).cos()).collect()).unwrap();
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| euclidean_dissim(&f));
        let many = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| euclidean_dissim(&f));
        assert_eq!(one, many);
    }

    #[test]
    fn standardized_columns() {
        let f = fm(&[&[1.0, 5.0], &[3.0, 5.0]]);
        let z = f.standardized();
        assert_eq!(z.as_slice(), &[-1.0, 0.0, 1.0, 0.0]);
    }

    fn features_strategy() -> impl Strategy<Value = FeatureMatrix> {
        (1usize..12, 1usize..5).prop_flat_map(|(n, d)| {
            prop::collection::vec(-100.0f64..100.0, n * d)
                .prop_map(move |v| FeatureMatrix::new(n, d, v).unwrap())
        })
    }

    proptest! {
        #[test]
        fn euclidean_output_is_valid(f in features_strategy()) {
            let d = euclidean_dissim(&f);
            prop_assert_eq!(d.validate(), Ok(()));
        }

        #[test]
        fn triangle_inequality(f in features_strategy()) {
            let d = euclidean_dissim(&f);
            let n = d.n();
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        prop_assert!(d.get(i, k) <= d.get(i, j) + d.get(j, k) + 1e-9);
                    }
                }
            }
        }

        #[test]
        fn permute_then_inverse_is_exact(
            f in features_strategy(),
            seed in any::<u64>(),
        ) {
            let d = euclidean_dissim(&f);
            let mut order: Vec<usize> = (0..d.n()).collect();
            // Fisher-Yates driven by a simple LCG
            let mut s = seed;
            for i in (1..order.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                order.swap(i, (s >> 33) as usize % (i + 1));
            }
            let p = Permutation::new(order).unwrap();
            let back = permute_matrix(&permute_matrix(&d, &p).unwrap(), &p.inverse()).unwrap();
            prop_assert_eq!(back, d);
        }
    }
}
