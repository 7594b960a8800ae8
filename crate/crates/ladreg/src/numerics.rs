//! Minimal dense linear algebra: row-major matrices, vectors, symmetric
//! positive-definite factorization, and the sorted-absolute-value partial
//! sums used by the corruption adversaries and robustness certificates.
//!
//! Problem sizes in scope are modest (`m <= 1e5`, `n <= 2e3` dense Gaussian
//! designs), so plain row-major storage and an unblocked Cholesky are enough.
//! Long reductions use Neumaier compensated accumulation because several
//! downstream checks compare sums of `1e5` terms at tight tolerances.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("dimension mismatch: {context} (expected {expected}, got {got})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("matrix is not positive definite: pivot {pivot} at column {column}")]
    NotPositiveDefinite { column: usize, pivot: f64 },
    #[error("non-finite entry at index {index}")]
    NonFinite { index: usize },
    #[error("count {count} out of range for vector of length {len}")]
    CountOutOfRange { count: usize, len: usize },
    #[error("I/O failure on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse failure in {path} line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
}

/// Neumaier compensated sum.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Formats a float with 17 significant digits so a reload reproduces the
/// exact bit pattern.
pub fn fmt_full(x: f64) -> String {
    format!("{x:.16e}")
}

/// A dense vector with all-finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector {
    data: Vec<f64>,
}

impl Vector {
    pub fn new(data: Vec<f64>) -> Result<Self, NumericsError> {
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(NumericsError::NonFinite { index });
        }
        Ok(Self { data })
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            data: vec![0.0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn norm1(&self) -> f64 {
        compensated_sum(self.data.iter().map(|v| v.abs()))
    }

    pub fn norm2(&self) -> f64 {
        compensated_sum(self.data.iter().map(|v| v * v)).sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Number of nonzero entries.
    pub fn norm0(&self) -> usize {
        self.data.iter().filter(|v| **v != 0.0).count()
    }
}

impl std::ops::Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.data[i]
    }
}

impl std::ops::IndexMut<usize> for Vector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.data[i]
    }
}

impl From<Vec<f64>> for Vector {
    /// Panics on non-finite entries; use [`Vector::new`] for checked
    /// construction from untrusted data.
    fn from(data: Vec<f64>) -> Self {
        Vector::new(data).expect("non-finite vector entry")
    }
}

/// A dense row-major matrix with all-finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, NumericsError> {
        if data.len() != rows * cols {
            return Err(NumericsError::DimensionMismatch {
                context: "matrix storage length",
                expected: rows * cols,
                got: data.len(),
            });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(NumericsError::NonFinite { index });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `A v`.
    pub fn matvec(&self, v: &Vector) -> Result<Vector, NumericsError> {
        if v.len() != self.cols {
            return Err(NumericsError::DimensionMismatch {
                context: "matvec operand length",
                expected: self.cols,
                got: v.len(),
            });
        }
        let vs = v.as_slice();
        let mut out = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            out.push(dot(self.row(i), vs));
        }
        Ok(Vector { data: out })
    }

    /// `A^T v`.
    pub fn matvec_transpose(&self, v: &Vector) -> Result<Vector, NumericsError> {
        if v.len() != self.rows {
            return Err(NumericsError::DimensionMismatch {
                context: "transposed matvec operand length",
                expected: self.rows,
                got: v.len(),
            });
        }
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let vi = v[i];
            if vi == 0.0 {
                continue;
            }
            for (o, &x) in out.iter_mut().zip(self.row(i)) {
                *o += vi * x;
            }
        }
        Ok(Vector { data: out })
    }

    /// `A^T A`, accumulated row by row into the upper triangle.
    pub fn gram(&self) -> DenseMatrix {
        let n = self.cols;
        let mut g = vec![0.0; n * n];
        for r in 0..self.rows {
            let row = self.row(r);
            for i in 0..n {
                let xi = row[i];
                if xi == 0.0 {
                    continue;
                }
                let gi = &mut g[i * n..(i + 1) * n];
                for (j, &xj) in row.iter().enumerate().skip(i) {
                    gi[j] += xi * xj;
                }
            }
        }
        // mirror the upper triangle
        for i in 0..n {
            for j in 0..i {
                g[i * n + j] = g[j * n + i];
            }
        }
        DenseMatrix {
            rows: n,
            cols: n,
            data: g,
        }
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cholesky factor of a symmetric positive definite matrix, cached for
/// repeated solves against the same system.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    n: usize,
    /// Lower-triangular factor `L` with `A = L L^T`, row-major.
    lower: Vec<f64>,
}

/// Factors a symmetric positive definite matrix. A nonpositive pivot is
/// reported as [`NumericsError::NotPositiveDefinite`], distinct from shape
/// errors.
pub fn spd_factor(a: &DenseMatrix) -> Result<SpdFactor, NumericsError> {
    if a.rows != a.cols {
        return Err(NumericsError::DimensionMismatch {
            context: "spd_factor requires a square matrix",
            expected: a.rows,
            got: a.cols,
        });
    }
    let n = a.rows;
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut diag = a[(j, j)];
        for k in 0..j {
            diag -= l[j * n + k] * l[j * n + k];
        }
        if diag <= 0.0 || !diag.is_finite() {
            return Err(NumericsError::NotPositiveDefinite {
                column: j,
                pivot: diag,
            });
        }
        let ljj = diag.sqrt();
        l[j * n + j] = ljj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / ljj;
        }
    }
    Ok(SpdFactor { n, lower: l })
}

impl SpdFactor {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` via the cached factor.
    pub fn solve(&self, b: &Vector) -> Result<Vector, NumericsError> {
        if b.len() != self.n {
            return Err(NumericsError::DimensionMismatch {
                context: "solve right-hand side length",
                expected: self.n,
                got: b.len(),
            });
        }
        let n = self.n;
        let l = &self.lower;
        let mut x = b.as_slice().to_vec();
        // forward: L y = b
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= l[i * n + k] * x[k];
            }
            x[i] = s / l[i * n + i];
        }
        // backward: L^T x = y
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s -= l[k * n + i] * x[k];
            }
            x[i] = s / l[i * n + i];
        }
        Ok(Vector { data: x })
    }
}

/// Splits `|v|` into the `count` largest entries and the rest, returning
/// `(top_sum, rest_sum)`. Ties in magnitude are broken toward the lower
/// index, so the partition is deterministic.
pub fn top_abs_partial_sums(v: &Vector, count: usize) -> Result<(f64, f64), NumericsError> {
    if count > v.len() {
        return Err(NumericsError::CountOutOfRange {
            count,
            len: v.len(),
        });
    }
    let order = sort_by_abs_desc(v.as_slice());
    let top = compensated_sum(order[..count].iter().map(|&i| v[i].abs()));
    let rest = compensated_sum(order[count..].iter().map(|&i| v[i].abs()));
    Ok((top, rest))
}

/// Indices of `v` ordered by decreasing magnitude, ties toward lower index.
pub fn sort_by_abs_desc(v: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| {
        v[b].abs()
            .partial_cmp(&v[a].abs())
            .expect("finite entries")
            .then(a.cmp(&b))
    });
    order
}

/// Writes a matrix in the shared CSV format: an optional `# m,n` header,
/// then one comma-separated row per line with full-precision floats.
pub fn write_matrix_csv(path: &Path, m: &DenseMatrix) -> Result<(), NumericsError> {
    let mut out = String::new();
    let _ = writeln!(out, "# {},{}", m.rows(), m.cols());
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|&x| fmt_full(x)).collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    std::fs::write(path, out).map_err(|source| NumericsError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_matrix_csv(path: &Path) -> Result<DenseMatrix, NumericsError> {
    let text = std::fs::read_to_string(path).map_err(|source| NumericsError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut row = Vec::new();
        for field in line.split(',') {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|e| NumericsError::Parse {
                    path: path.display().to_string(),
                    line: lineno + 1,
                    message: format!("bad float {field:?}: {e}"),
                })?;
            row.push(v);
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(NumericsError::Parse {
                    path: path.display().to_string(),
                    line: lineno + 1,
                    message: format!("ragged row: expected {} fields, got {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    DenseMatrix::new(nrows, ncols, rows.into_iter().flatten().collect())
}

/// Vectors reuse the matrix format with one value per line.
pub fn write_vector_csv(path: &Path, v: &Vector) -> Result<(), NumericsError> {
    let mut out = String::new();
    let _ = writeln!(out, "# {},1", v.len());
    for &x in v.as_slice() {
        let _ = writeln!(out, "{}", fmt_full(x));
    }
    std::fs::write(path, out).map_err(|source| NumericsError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_vector_csv(path: &Path) -> Result<Vector, NumericsError> {
    let m = read_matrix_csv(path)?;
    if m.cols() != 1 && m.rows() != 1 {
        return Err(NumericsError::Parse {
            path: path.display().to_string(),
            line: 0,
            message: format!("expected a vector, got {}x{}", m.rows(), m.cols()),
        });
    }
    Ok(Vector {
        data: m.data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn matvec_identity_and_zero() {
        let v = Vector::from(vec![1.5, -2.0, 3.25]);
        let id = DenseMatrix::identity(3);
        assert_eq!(id.matvec(&v).unwrap(), v);
        let z = DenseMatrix::zeros(2, 3);
        assert_eq!(z.matvec(&v).unwrap().as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn matvec_two_by_two() {
        let a = DenseMatrix::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let v = Vector::from(vec![1.0, 1.0]);
        assert_eq!(a.matvec(&v).unwrap().as_slice(), &[3.0, 7.0]);
    }

    #[test]
    fn matvec_dimension_mismatch() {
        let a = DenseMatrix::zeros(2, 3);
        let v = Vector::zeros(2);
        assert!(matches!(
            a.matvec(&v),
            Err(NumericsError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn non_finite_rejected() {
        assert!(matches!(
            Vector::new(vec![1.0, f64::NAN]),
            Err(NumericsError::NonFinite { index: 1 })
        ));
        assert!(matches!(
            DenseMatrix::new(1, 2, vec![f64::INFINITY, 0.0]),
            Err(NumericsError::NonFinite { index: 0 })
        ));
    }

    #[test]
    fn spd_identity_and_diagonal() {
        let f = spd_factor(&DenseMatrix::identity(4)).unwrap();
        let b = Vector::from(vec![1.0, -2.0, 3.0, 4.0]);
        assert_eq!(f.solve(&b).unwrap(), b);

        let mut d = DenseMatrix::zeros(1, 1);
        d[(0, 0)] = 4.0;
        let f = spd_factor(&d).unwrap();
        let x = f.solve(&Vector::from(vec![2.0])).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn spd_rejects_indefinite() {
        let a = DenseMatrix::new(2, 2, vec![1.0, 2.0, 2.0, 1.0]).unwrap();
        assert!(matches!(
            spd_factor(&a),
            Err(NumericsError::NotPositiveDefinite { column: 1, .. })
        ));
        let rect = DenseMatrix::zeros(2, 3);
        assert!(matches!(
            spd_factor(&rect),
            Err(NumericsError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn spd_random_multiply_back() {
        // random SPD via G^T G + I, checked against direct multiplication
        let mut state = 0x9E3779B97F4A7C15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for _ in 0..10 {
            let n = 5;
            let g = DenseMatrix::new(n, n, (0..n * n).map(|_| next()).collect()).unwrap();
            let mut a = g.gram();
            for i in 0..n {
                a[(i, i)] += 1.0;
            }
            let b = Vector::new((0..n).map(|_| next()).collect()).unwrap();
            let f = spd_factor(&a).unwrap();
            let x = f.solve(&b).unwrap();
            let ax = a.matvec(&x).unwrap();
            let resid = (0..n).fold(0.0f64, |acc, i| acc.max((ax[i] - b[i]).abs()));
            assert!(resid <= 1e-8 * (1.0 + b.norm_inf()), "residual {resid}");
        }
    }

    #[test]
    fn partial_sums_basics() {
        let v = Vector::from(vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(top_abs_partial_sums(&v, 1).unwrap(), (4.0, 6.0));
        assert_eq!(top_abs_partial_sums(&v, 0).unwrap(), (0.0, 10.0));
        assert!(top_abs_partial_sums(&v, 5).is_err());
    }

    #[test]
    fn partial_sums_tie_break_low_index() {
        let v = Vector::from(vec![2.0, -2.0, 1.0]);
        // |2| ties with |-2|; the lower index wins the "top" slot
        assert_eq!(top_abs_partial_sums(&v, 1).unwrap(), (2.0, 3.0));
        let order = sort_by_abs_desc(v.as_slice());
        assert_eq!(order, vec![0, 1, 2]);
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let m = DenseMatrix::new(
            2,
            3,
            vec![1.0 / 3.0, -0.1, 1e-300, 2.5e17, f64::MIN_POSITIVE, -7.25],
        )
        .unwrap();
        write_matrix_csv(&path, &m).unwrap();
        let back = read_matrix_csv(&path).unwrap();
        assert_eq!(m, back);
    }

    proptest! {
        #[test]
        fn partial_sums_partition_l1(v in proptest::collection::vec(-1e6f64..1e6, 0..64),
                                     frac in 0.0f64..1.0) {
            let vec = Vector::new(v).unwrap();
            let count = (frac * vec.len() as f64) as usize;
            let (top, rest) = top_abs_partial_sums(&vec, count).unwrap();
            let total = vec.norm1();
            prop_assert!((top + rest - total).abs() <= 1e-12 * total.max(1.0));
        }

        #[test]
        fn spd_solve_property(seed in 0u64..1000) {
            let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1);
            let mut next = move || {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            };
            let n = 4;
            let g = DenseMatrix::new(n, n, (0..n * n).map(|_| next()).collect()).unwrap();
            let mut a = g.gram();
            // shift keeps the condition number moderate
            for i in 0..n {
                a[(i, i)] += 0.1;
            }
            let b = Vector::new((0..n).map(|_| next()).collect()).unwrap();
            let x = spd_factor(&a).unwrap().solve(&b).unwrap();
            let ax = a.matvec(&x).unwrap();
            for i in 0..n {
                prop_assert!((ax[i] - b[i]).abs() <= 1e-8 * (1.0 + b.norm_inf()));
            }
        }
    }
}
