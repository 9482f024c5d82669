//! Realizations, squared Euclidean distance matrices and Gram matrices.
//!
//! The three representations convert into each other:
//!
//! * realization -> EDM by pairwise squared distances,
//! * EDM -> Gram by double centering, `G = -1/2 J D J` with `J = I - 11ᵀ/n`,
//! * Gram -> EDM by `D = diag(G) 1ᵀ - 2G + 1 diag(G)ᵀ`,
//! * Gram -> realization by the spectral factor `P √Λ`.
//!
//! Every rank or definiteness decision compares eigenvalues (or singular
//! values) against `tol` times the largest one in magnitude.

use nalgebra::{DMatrix, SymmetricEigen, SVD};
use serde::ser::{Serialize, SerializeSeq, Serializer};
use thiserror::Error;

use crate::util::next_combination;

/// Relative tolerance used for rank and definiteness decisions.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EdmError {
    #[error("row {row} has {found} coordinates, expected {expected}")]
    Dimension {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("non-finite coordinate in row {0}")]
    NonFinite(usize),
    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue} below -{threshold}")]
    NotPsd { eigenvalue: f64, threshold: f64 },
    #[error("matrix has {rank} significant positive eigenvalues, more than K = {k}")]
    RankTooHigh { rank: usize, k: usize },
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
}

/// `n` points in `R^dim`. Row `i` holds the position of vertex `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    dim: usize,
    coords: Vec<f64>,
}

impl Realization {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, EdmError> {
        let dim = rows.first().map_or(0, Vec::len);
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for (row, point) in rows.into_iter().enumerate() {
            if point.len() != dim {
                return Err(EdmError::Dimension {
                    row,
                    expected: dim,
                    found: point.len(),
                });
            }
            coords.extend(point);
        }
        Self::from_flat(dim, coords)
    }

    /// Row-major coordinates, `dim` per point.
    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self, EdmError> {
        if dim == 0 {
            if !coords.is_empty() {
                return Err(EdmError::Dimension {
                    row: 0,
                    expected: 0,
                    found: coords.len(),
                });
            }
        } else if coords.len() % dim != 0 {
            return Err(EdmError::Dimension {
                row: coords.len() / dim,
                expected: dim,
                found: coords.len() % dim,
            });
        }
        if let Some(pos) = coords.iter().position(|c| !c.is_finite()) {
            return Err(EdmError::NonFinite(pos / dim.max(1)));
        }
        Ok(Self { dim, coords })
    }

    pub fn n(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.coords.len() / self.dim
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, row: usize) -> &[f64] {
        &self.coords[row * self.dim..(row + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim.max(1))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.points().map(<[f64]>::to_vec).collect()
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.coords
    }
}

impl Serialize for Realization {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.n()))?;
        for p in self.points() {
            seq.serialize_element(p)?;
        }
        seq.end()
    }
}

fn serialize_matrix<S: Serializer>(m: &DMatrix<f64>, serializer: S) -> Result<S::Ok, S::Error> {
    let mut seq = serializer.serialize_seq(Some(m.nrows()))?;
    for i in 0..m.nrows() {
        let row: Vec<f64> = m.row(i).iter().copied().collect();
        seq.serialize_element(&row)?;
    }
    seq.end()
}

/// Squared Euclidean distance matrix: symmetric, zero diagonal, nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct SquaredEdm(DMatrix<f64>);

/// Gram (inner product) matrix of a centered realization.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix(DMatrix<f64>);

macro_rules! matrix_newtype {
    ($name:ident) => {
        impl $name {
            pub fn from_matrix(m: DMatrix<f64>) -> Result<Self, EdmError> {
                if m.nrows() != m.ncols() {
                    return Err(EdmError::NotSquare {
                        rows: m.nrows(),
                        cols: m.ncols(),
                    });
                }
                Ok(Self(m))
            }

            pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, EdmError> {
                let n = rows.len();
                for (row, r) in rows.iter().enumerate() {
                    if r.len() != n {
                        return Err(EdmError::Dimension {
                            row,
                            expected: n,
                            found: r.len(),
                        });
                    }
                }
                Ok(Self(DMatrix::from_fn(n, n, |i, j| rows[i][j])))
            }

            pub fn n(&self) -> usize {
                self.0.nrows()
            }

            pub fn get(&self, i: usize, j: usize) -> f64 {
                self.0[(i, j)]
            }

            pub fn as_matrix(&self) -> &DMatrix<f64> {
                &self.0
            }

            pub fn into_matrix(self) -> DMatrix<f64> {
                self.0
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serialize_matrix(&self.0, serializer)
            }
        }
    };
}

matrix_newtype!(SquaredEdm);
matrix_newtype!(GramMatrix);

impl SquaredEdm {
    /// Principal submatrix on the given row indices, in the given order.
    pub fn submatrix(&self, rows: &[usize]) -> SquaredEdm {
        SquaredEdm(DMatrix::from_fn(rows.len(), rows.len(), |a, b| {
            self.0[(rows[a], rows[b])]
        }))
    }
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn edm_from_realization(x: &Realization) -> SquaredEdm {
    let n = x.n();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let v = squared_distance(x.point(i), x.point(j));
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    SquaredEdm(d)
}

pub fn gram_from_edm(d: &SquaredEdm) -> GramMatrix {
    let n = d.n();
    if n == 0 {
        return GramMatrix(DMatrix::zeros(0, 0));
    }
    let m = &d.0;
    let nf = n as f64;
    let row_mean: Vec<f64> = (0..n).map(|i| m.row(i).sum() / nf).collect();
    let col_mean: Vec<f64> = (0..n).map(|j| m.column(j).sum() / nf).collect();
    let total = row_mean.iter().sum::<f64>() / nf;
    GramMatrix(DMatrix::from_fn(n, n, |i, j| {
        -0.5 * (m[(i, j)] - row_mean[i] - col_mean[j] + total)
    }))
}

pub fn edm_from_gram(g: &GramMatrix) -> SquaredEdm {
    let m = &g.0;
    let n = m.nrows();
    SquaredEdm(DMatrix::from_fn(n, n, |i, j| {
        m[(i, i)] - 2.0 * m[(i, j)] + m[(j, j)]
    }))
}

fn symmetrized(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn max_abs(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Number of eigenvalues of a symmetric matrix whose magnitude exceeds
/// `tol` times the largest magnitude.
pub fn numerical_rank(m: &DMatrix<f64>, tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let eig = SymmetricEigen::new(symmetrized(m));
    let scale = max_abs(eig.eigenvalues.iter().copied());
    if scale == 0.0 {
        return 0;
    }
    eig.eigenvalues
        .iter()
        .filter(|l| l.abs() > tol * scale)
        .count()
}

/// Factors `G = P Λ Pᵀ` and returns `P √Λ` restricted to the `k` leading
/// eigenpairs. Each eigenvector is oriented so that its first nonzero
/// component is positive.
pub fn realize_from_gram(g: &GramMatrix, k: usize, tol: f64) -> Result<Realization, EdmError> {
    let n = g.n();
    if n == 0 {
        return Realization::from_flat(k, Vec::new());
    }
    let eig = SymmetricEigen::new(symmetrized(&g.0));
    let values = &eig.eigenvalues;
    let scale = max_abs(values.iter().copied());
    let threshold = tol * scale;
    if let Some(&neg) = values.iter().find(|&&l| l < -threshold) {
        return Err(EdmError::NotPsd {
            eigenvalue: neg,
            threshold,
        });
    }
    let rank = values.iter().filter(|&&l| l > threshold).count();
    if rank > k {
        return Err(EdmError::RankTooHigh { rank, k });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));

    let mut coords = vec![0.0; n * k];
    for (col, &e) in idx.iter().take(rank).enumerate() {
        let v = eig.eigenvectors.column(e);
        let sign = v
            .iter()
            .find(|c| c.abs() > 1e-10)
            .map_or(1.0, |c| c.signum());
        let s = values[e].sqrt() * sign;
        for row in 0..n {
            coords[row * k + col] = v[row] * s;
        }
    }
    Realization::from_flat(k, coords)
}

/// True iff `d` is symmetric with zero diagonal and its Gram matrix is
/// positive semidefinite with at most `k` significant positive eigenvalues.
pub fn is_valid_edm(d: &SquaredEdm, k: usize, tol: f64) -> bool {
    let m = &d.0;
    let n = m.nrows();
    let scale = max_abs(m.iter().copied());
    if scale == 0.0 {
        return true;
    }
    if !m.iter().all(|v| v.is_finite()) {
        return false;
    }
    for i in 0..n {
        if m[(i, i)].abs() > tol * scale {
            return false;
        }
        for j in i + 1..n {
            if (m[(i, j)] - m[(j, i)]).abs() > tol * scale || m[(i, j)] < -tol * scale {
                return false;
            }
        }
    }
    let g = gram_from_edm(d);
    let eig = SymmetricEigen::new(symmetrized(&g.0));
    let gscale = max_abs(eig.eigenvalues.iter().copied());
    if gscale == 0.0 {
        return true;
    }
    let threshold = tol * gscale;
    eig.eigenvalues.iter().all(|&l| l >= -threshold)
        && eig.eigenvalues.iter().filter(|&&l| l > threshold).count() <= k
}

/// Dimension of the affine hull: rank of the differences to the first point.
pub fn affine_rank<P: AsRef<[f64]>>(points: &[P], tol: f64) -> usize {
    if points.len() < 2 {
        return 0;
    }
    let origin = points[0].as_ref();
    let dim = origin.len();
    let rows = points.len() - 1;
    let diffs = DMatrix::from_fn(rows, dim, |r, c| points[r + 1].as_ref()[c] - origin[c]);
    let sv = SVD::new(diffs, false, false).singular_values;
    let largest = max_abs(sv.iter().copied());
    if largest == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * largest).count()
}

/// Every subset of `h + 1 <= k + 1` points spans an affine subspace of
/// dimension `h`.
pub fn general_position<P: AsRef<[f64]>>(points: &[P], k: usize, tol: f64) -> bool {
    let m = points.len();
    if m <= k + 1 {
        return affine_rank(points, tol) == m.saturating_sub(1);
    }
    // Subsets of an affinely independent set are independent, so checking
    // every (k+1)-subset covers the smaller sizes.
    let mut idx: Vec<usize> = (0..=k).collect();
    loop {
        let subset: Vec<&[f64]> = idx.iter().map(|&i| points[i].as_ref()).collect();
        if affine_rank(&subset, tol) != k {
            return false;
        }
        if !next_combination(&mut idx, m) {
            return true;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn real(rows: &[&[f64]]) -> Realization {
        Realization::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    fn example_points() -> Realization {
        real(&[
            &[1.0, 0.0],
            &[2.0, 0.0],
            &[2.0, 1.0],
            &[0.0, 1.0],
            &[0.0, 0.0],
        ])
    }

    #[test]
    fn edm_of_two_points() {
        let d = edm_from_realization(&real(&[&[0.0, 0.0], &[2.0, 0.0]]));
        assert_eq!(
            d.as_matrix(),
            &DMatrix::from_row_slice(2, 2, &[0.0, 4.0, 4.0, 0.0])
        );
        let single = edm_from_realization(&real(&[&[3.0, 1.0]]));
        assert_eq!(single.as_matrix(), &DMatrix::zeros(1, 1));
    }

    #[test]
    fn edm_of_example_points() {
        let d = edm_from_realization(&example_points());
        assert_relative_eq!(d.get(0, 2), 2.0);
        assert_relative_eq!(d.get(1, 3), 5.0);
        assert_relative_eq!(d.get(2, 3), 4.0);
        assert_relative_eq!(d.get(0, 4), 1.0);
        assert_relative_eq!(d.get(3, 4), 1.0);
    }

    #[test]
    fn gram_of_two_points() {
        let d = SquaredEdm::from_rows(&[vec![0.0, 4.0], vec![4.0, 0.0]]).unwrap();
        let g = gram_from_edm(&d);
        let expected = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        assert!((g.as_matrix() - &expected).abs().max() < 1e-15);
        assert_eq!(edm_from_gram(&g), d);
        let zero = SquaredEdm::from_matrix(DMatrix::zeros(3, 3)).unwrap();
        assert_eq!(gram_from_edm(&zero).as_matrix(), &DMatrix::zeros(3, 3));
    }

    #[test]
    fn edm_from_identity_gram() {
        let g = GramMatrix::from_matrix(DMatrix::identity(3, 3)).unwrap();
        let d = edm_from_gram(&g);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(d.get(i, j), if i == j { 0.0 } else { 2.0 });
            }
        }
        let z = GramMatrix::from_matrix(DMatrix::zeros(2, 2)).unwrap();
        assert_eq!(edm_from_gram(&z).as_matrix(), &DMatrix::zeros(2, 2));
    }

    #[test]
    fn realize_two_points_on_a_line() {
        let g = GramMatrix::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
        let y = realize_from_gram(&g, 1, DEFAULT_TOL).unwrap();
        assert_eq!(y.dim(), 1);
        assert_relative_eq!(
            squared_distance(y.point(0), y.point(1)),
            4.0,
            epsilon = 1e-12
        );
        // first nonzero component of the eigenvector is positive
        assert!(y.point(0)[0] > 0.0);
    }

    #[test]
    fn realize_rejects_indefinite_and_high_rank() {
        let g = GramMatrix::from_matrix(-DMatrix::<f64>::identity(3, 3)).unwrap();
        assert!(matches!(
            realize_from_gram(&g, 3, DEFAULT_TOL),
            Err(EdmError::NotPsd { .. })
        ));

        let x = real(&[
            &[0.0, 0.0, 0.0],
            &[1.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0],
            &[0.0, 0.0, 1.0],
        ]);
        let g = gram_from_edm(&edm_from_realization(&x));
        assert_eq!(
            realize_from_gram(&g, 2, DEFAULT_TOL),
            Err(EdmError::RankTooHigh { rank: 3, k: 2 })
        );
    }

    #[test]
    fn validity() {
        assert!(is_valid_edm(
            &edm_from_realization(&example_points()),
            2,
            DEFAULT_TOL
        ));
        let bad = SquaredEdm::from_rows(&[
            vec![0.0, 10.0, 1.0],
            vec![10.0, 0.0, 1.0],
            vec![1.0, 1.0, 0.0],
        ])
        .unwrap();
        for k in 1..=3 {
            assert!(!is_valid_edm(&bad, k, DEFAULT_TOL));
        }
        let two = SquaredEdm::from_rows(&[vec![0.0, 4.0], vec![4.0, 0.0]]).unwrap();
        assert!(is_valid_edm(&two, 1, DEFAULT_TOL));
        // a planar square is not realizable on a line
        let square =
            edm_from_realization(&real(&[&[0.0, 0.0], &[1.0, 0.0], &[1.0, 1.0], &[0.0, 1.0]]));
        assert!(!is_valid_edm(&square, 1, DEFAULT_TOL));
    }

    #[test]
    fn affine_ranks() {
        let line = [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]];
        assert_eq!(affine_rank(&line, DEFAULT_TOL), 1);
        assert!(!general_position(&line, 2, DEFAULT_TOL));
        let tri = [[1.0, 0.0], [2.0, 0.0], [2.0, 1.0]];
        assert_eq!(affine_rank(&tri, DEFAULT_TOL), 2);
        assert!(general_position(&tri, 2, DEFAULT_TOL));
        assert_eq!(affine_rank(&[[5.0, 5.0]], DEFAULT_TOL), 0);
        // four points, one collinear triple
        let four = [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [0.0, 1.0]];
        assert!(!general_position(&four, 2, DEFAULT_TOL));
        let four = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.2]];
        assert!(general_position(&four, 2, DEFAULT_TOL));
    }

    #[test]
    fn serializes_as_nested_arrays() {
        let d = SquaredEdm::from_rows(&[vec![0.0, 4.0], vec![4.0, 0.0]]).unwrap();
        assert_eq!(serde_json::to_string(&d).unwrap(), "[[0.0,4.0],[4.0,0.0]]");
        let x = real(&[&[0.5, 1.0]]);
        assert_eq!(serde_json::to_string(&x).unwrap(), "[[0.5,1.0]]");
    }
}
