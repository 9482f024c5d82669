//! K-lateration: the points of `R^K` at prescribed distances from `K` base
//! points.
//!
//! The quadratic system `‖base_i − y‖² = d_i²` is reduced to `K − 1` linear
//! equations by subtracting a reference equation, the linear system is solved
//! for all but one free coordinate, and the free coordinate is found from the
//! remaining quadratic. Both roots are checked against every original
//! equation before they are returned.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq)]
pub enum Trilateration {
    NoPosition,
    /// `plus` has the larger value of the free coordinate.
    TwoPositions {
        plus: Vec<f64>,
        minus: Vec<f64>,
    },
    /// The discriminant of the final quadratic is within tolerance of zero.
    SinglePosition(Vec<f64>),
    /// The reduced linear system is rank deficient: the base points are not in
    /// general position and the solution set is a continuum or empty.
    Degenerate(DegenerateReason),
}

impl Trilateration {
    pub fn positions(&self) -> Vec<&[f64]> {
        match self {
            Trilateration::TwoPositions { plus, minus } => vec![plus, minus],
            Trilateration::SinglePosition(y) => vec![y],
            Trilateration::NoPosition | Trilateration::Degenerate(_) => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DegenerateReason {
    /// Rank of the reduced linear system.
    pub rank: usize,
    /// Rank required for a discrete solution set (`K − 1`).
    pub required: usize,
}

impl fmt::Display for DegenerateReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "base points are not in general position (linear system rank {} < {})",
            self.rank, self.required
        )
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrilaterationError {
    #[error("need at least one base point")]
    Empty,
    #[error("expected {expected} base points and distances in R^{expected}, got {points} points, {distances} distances, dimension {dim}")]
    Shape {
        expected: usize,
        points: usize,
        distances: usize,
        dim: usize,
    },
    #[error("distance {0} is not positive and finite")]
    BadDistance(f64),
    #[error("non-finite base coordinate")]
    NonFinite,
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
}

/// Position(s) at distances `dist` from the `K` points in `base`.
///
/// `tol` is relative: the rank test compares pivots against `tol` times the
/// largest coefficient, the tangency window is `tol` times the quadratic's
/// scale, and a root is accepted when every residual
/// `|‖base_i − y‖² − d_i²|` is at most `tol · max(d)²`.
pub fn trilaterate<P: AsRef<[f64]>>(
    base: &[P],
    dist: &[f64],
    tol: f64,
) -> Result<Trilateration, TrilaterationError> {
    let k = base.len();
    if k == 0 {
        return Err(TrilaterationError::Empty);
    }
    if dist.len() != k || base.iter().any(|p| p.as_ref().len() != k) {
        return Err(TrilaterationError::Shape {
            expected: k,
            points: k,
            distances: dist.len(),
            dim: base
                .iter()
                .map(|p| p.as_ref().len())
                .find(|&d| d != k)
                .unwrap_or(k),
        });
    }
    if let Some(&d) = dist.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
        return Err(TrilaterationError::BadDistance(d));
    }
    if base
        .iter()
        .any(|p| p.as_ref().iter().any(|c| !c.is_finite()))
    {
        return Err(TrilaterationError::NonFinite);
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(TrilaterationError::BadTolerance(tol));
    }

    let norm2 = |p: &[f64]| p.iter().map(|c| c * c).sum::<f64>();
    // Reference equation: largest ‖base_i‖ (first on ties).
    let reference = (0..k).fold(0, |best, i| {
        if norm2(base[i].as_ref()) > norm2(base[best].as_ref()) {
            i
        } else {
            best
        }
    });
    let origin = base[reference].as_ref();
    let dr2 = dist[reference] * dist[reference];

    // Work in coordinates centred on the reference point, where the linear
    // rows read 2 (x_i − x_r)·y' = ‖x_i − x_r‖² − d_i² + d_r².
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(k - 1);
    let mut rhs: Vec<f64> = Vec::with_capacity(k - 1);
    for i in (0..k).filter(|&i| i != reference) {
        let shifted: Vec<f64> = base[i]
            .as_ref()
            .iter()
            .zip(origin)
            .map(|(a, o)| a - o)
            .collect();
        rhs.push(norm2(&shifted) - dist[i] * dist[i] + dr2);
        rows.push(shifted.iter().map(|c| 2.0 * c).collect());
    }

    let Reduced { b, coef } = match reduce(rows, rhs, k, tol) {
        Ok(r) => r,
        Err(rank) => {
            return Ok(Trilateration::Degenerate(DegenerateReason {
                rank,
                required: k - 1,
            }))
        }
    };

    // y' = b − coef·t with t the free coordinate; substitute into ‖y'‖² = d_r².
    let a: f64 = coef.iter().map(|c| c * c).sum();
    let h: f64 = coef.iter().zip(&b).map(|(c, v)| c * v).sum();
    let b2: f64 = b.iter().map(|v| v * v).sum();
    let mid = h / a;
    let prod = (b2 - dr2) / a;
    let disc = mid * mid - prod;
    // Magnitude of the terms that cancel in the discriminant.
    let scale = mid * mid + (b2 + dr2) / a;

    let point = |t: f64| -> Vec<f64> { (0..k).map(|i| b[i] - coef[i] * t + origin[i]).collect() };
    let dmax2 = dist.iter().fold(0.0f64, |m, d| m.max(d * d));
    let residual = |y: &[f64]| -> f64 {
        base.iter()
            .zip(dist)
            .map(|(p, d)| {
                let s: f64 = p
                    .as_ref()
                    .iter()
                    .zip(y)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                (s - d * d).abs()
            })
            .fold(0.0, f64::max)
    };

    if disc < -tol * scale {
        return Ok(Trilateration::NoPosition);
    }
    if disc <= tol * scale {
        let y = point(mid);
        // The window itself admits a residual of a·|disc| in the reference
        // equation.
        let bound = tol * dmax2.max(a * scale) * 4.0;
        return Ok(if residual(&y) <= bound {
            Trilateration::SinglePosition(y)
        } else {
            Trilateration::NoPosition
        });
    }

    let root = disc.sqrt();
    // Larger-magnitude root directly, the other from the product of roots.
    let (hi, lo) = if mid >= 0.0 {
        let t1 = mid + root;
        (t1, if t1 != 0.0 { prod / t1 } else { mid - root })
    } else {
        let t2 = mid - root;
        (if t2 != 0.0 { prod / t2 } else { mid + root }, t2)
    };
    let plus = point(hi);
    let minus = point(lo);
    let bound = tol * dmax2;
    let ok_plus = residual(&plus) <= bound;
    let ok_minus = residual(&minus) <= bound;
    Ok(match (ok_plus, ok_minus) {
        (true, true) => Trilateration::TwoPositions { plus, minus },
        (true, false) => Trilateration::SinglePosition(plus),
        (false, true) => Trilateration::SinglePosition(minus),
        (false, false) => Trilateration::NoPosition,
    })
}

struct Reduced {
    b: Vec<f64>,
    coef: Vec<f64>,
}

/// Gauss–Jordan elimination with complete pivoting on a `(k−1) × k` system.
/// The column never chosen as a pivot becomes the free coordinate. Returns
/// the rank reached when a pivot falls below `tol` times the largest entry.
fn reduce(
    mut rows: Vec<Vec<f64>>,
    mut rhs: Vec<f64>,
    k: usize,
    tol: f64,
) -> Result<Reduced, usize> {
    let m = rows.len();
    let scale = rows
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    let mut pivot_cols: Vec<usize> = Vec::with_capacity(m);
    let mut used = vec![false; k];
    for step in 0..m {
        let mut best = (0.0f64, step, 0usize);
        for (r, row) in rows.iter().enumerate().skip(step) {
            for c in (0..k).filter(|&c| !used[c]) {
                if row[c].abs() > best.0 {
                    best = (row[c].abs(), r, c);
                }
            }
        }
        let (mag, pr, pc) = best;
        if scale == 0.0 || mag <= tol * scale {
            return Err(step);
        }
        rows.swap(step, pr);
        rhs.swap(step, pr);
        used[pc] = true;
        pivot_cols.push(pc);
        let p = rows[step][pc];
        for v in rows[step].iter_mut() {
            *v /= p;
        }
        rhs[step] /= p;
        for r in 0..m {
            if r != step {
                let f = rows[r][pc];
                if f != 0.0 {
                    for c in 0..k {
                        rows[r][c] -= f * rows[step][c];
                    }
                    rhs[r] -= f * rhs[step];
                }
            }
        }
    }
    let free = (0..k).find(|&c| !used[c]).expect("one column stays free");
    let mut b = vec![0.0; k];
    let mut coef = vec![0.0; k];
    for (r, &pc) in pivot_cols.iter().enumerate() {
        b[pc] = rhs[r];
        coef[pc] = rows[r][free];
    }
    coef[free] = -1.0;
    Ok(Reduced { b, coef })
}
