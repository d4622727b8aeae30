//! Small dense symmetric linear algebra.
//!
//! Coupling and correlation matrices in this crate are tiny (the number of
//! groups is at most on the order of 100), so everything here is plain
//! dense arithmetic: a cyclic Jacobi eigensolver for definiteness tests,
//! pivoted Gaussian elimination for general solves, and the closed-form
//! inverses for the structured matrices that show up in the weight
//! calculations (constant-diagonal/constant-off-diagonal and two-cluster
//! block matrices).

use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;

/// Dense symmetric matrix, row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    /// Builds a matrix from row-major entries, checking symmetry within
    /// `1e-12` relative to the largest entry.
    pub fn from_rows(dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::Dimension(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                data.len()
            )));
        }
        let scale = data.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        for i in 0..dim {
            for j in (i + 1)..dim {
                if (data[i * dim + j] - data[j * dim + i]).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::Invalid(format!(
                        "matrix not symmetric at ({i},{j}): {} vs {}",
                        data[i * dim + j],
                        data[j * dim + i]
                    )));
                }
            }
        }
        Ok(Self { dim, data })
    }

    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![0.0; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    /// Constant diagonal `diag`, constant off-diagonal `off`.
    pub fn uniform(dim: usize, diag: f64, off: f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.data[i * dim + j] = if i == j { diag } else { off };
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    pub fn rows(&self) -> &[f64] {
        &self.data
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|x| c * x).collect() }
    }

    /// `self - other`
    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::Dimension("matrix subtraction".into()));
        }
        Ok(Self {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let row = &self.data[i * n..(i + 1) * n];
            y[i] = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
        y
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    /// Eigenvalues by cyclic Jacobi rotations. Returns them in ascending
    /// order. Convergence: off-diagonal Frobenius mass below
    /// `1e-14 * ||S||_F`.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let n = self.dim;
        if n == 1 {
            return vec![self.data[0]];
        }
        let mut a = self.data.clone();
        let frob: f64 = self.data.iter().map(|x| x * x).sum::<f64>().sqrt();
        let tol = 1e-14 * frob.max(f64::MIN_POSITIVE);

        for _sweep in 0..100 {
            let off: f64 = {
                let mut s = 0.0;
                for i in 0..n {
                    for j in (i + 1)..n {
                        s += a[i * n + j] * a[i * n + j];
                    }
                }
                (2.0 * s).sqrt()
            };
            if off <= tol {
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
                    let theta = (aqq - app) / (2.0 * apq);
                    let t = if theta >= 0.0 {
                        1.0 / (theta + (1.0 + theta * theta).sqrt())
                    } else {
                        1.0 / (theta - (1.0 + theta * theta).sqrt())
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
                }
            }
        }
        let mut eigs: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
        eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
        eigs
    }

    /// Dense inverse via column-by-column pivoted solves.
    pub fn inverse(&self) -> Result<Self> {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let col = solve_dense(self, &e)?;
            for i in 0..n {
                out.data[i * n + j] = col[i];
            }
        }
        // Symmetrise away elimination round-off.
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (out.data[i * n + j] + out.data[j * n + i]);
                out.data[i * n + j] = v;
                out.data[j * n + i] = v;
            }
        }
        Ok(out)
    }
}

/// Definiteness classification for a symmetric matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Definiteness {
    PositiveDefinite,
    PositiveSemiDefinite,
    Indefinite,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct DefinitenessReport {
    pub tag: Definiteness,
    pub min_eigenvalue_estimate: f64,
}

/// Classifies a symmetric matrix by its spectrum. The tolerance is
/// `1e-10 * max(1, max|entry|)`: eigenvalues above it mean positive
/// definite, eigenvalues at least its negative mean positive
/// semi-definite, anything lower means indefinite.
pub fn definiteness(s: &SymmetricMatrix) -> DefinitenessReport {
    let tau = 1e-10 * s.max_abs_entry().max(1.0);
    let eigs = s.eigenvalues();
    let min = eigs[0];
    let tag = if min > tau {
        Definiteness::PositiveDefinite
    } else if min >= -tau {
        Definiteness::PositiveSemiDefinite
    } else {
        Definiteness::Indefinite
    };
    DefinitenessReport { tag, min_eigenvalue_estimate: min }
}

/// Eigenvalues of the matrix with constant diagonal `a` and constant
/// off-diagonal `b`: `a - b` with multiplicity `M - 1` and `a + (M-1) b`
/// with multiplicity one.
pub fn uniform_matrix_eigenvalues(a: f64, b: f64, m: usize) -> (f64, f64) {
    (a - b, a + (m as f64 - 1.0) * b)
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn solve_dense(a: &SymmetricMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.dim;
    if b.len() != n {
        return Err(Error::Dimension(format!(
            "rhs length {} does not match matrix dimension {n}",
            b.len()
        )));
    }
    let mut m = a.data.clone();
    let mut x = b.to_vec();
    let pivot_tol = 1e-12 * a.max_abs_entry().max(1.0);

    for k in 0..n {
        let (piv_row, piv_val) = (k..n)
            .map(|i| (i, m[i * n + k].abs()))
            .max_by(|p, q| p.1.partial_cmp(&q.1).unwrap())
            .unwrap();
        if piv_val <= pivot_tol {
            return Err(Error::Singular { pivot: piv_val, step: k });
        }
        if piv_row != k {
            for j in 0..n {
                m.swap(k * n + j, piv_row * n + j);
            }
            x.swap(k, piv_row);
        }
        let pivot = m[k * n + k];
        for i in (k + 1)..n {
            let factor = m[i * n + k] / pivot;
            if factor == 0.0 {
                continue;
            }
            for j in k..n {
                m[i * n + j] -= factor * m[k * n + j];
            }
            x[i] -= factor * x[k];
        }
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for j in (i + 1)..n {
            s -= m[i * n + j] * x[j];
        }
        x[i] = s / m[i * n + i];
    }
    Ok(x)
}

/// Unnormalised inverse of the matrix with constant diagonal `diag` and
/// constant off-diagonal `off`, together with the scalar `d` such that
/// `original * unnormalised = d * I`.
///
/// For the unit-diagonal case (`diag = 1`, off-diagonal `a`) the pattern is
/// diagonal `1 + (M-2) a`, off-diagonal `-a`, and
/// `d = (1 - a)(1 + (M-1) a)`. The scalar is returned separately because
/// weights are only defined up to a positive factor and the determinant
/// drops out of them.
pub fn invert_uniform(diag: f64, off: f64, m: usize) -> Result<(SymmetricMatrix, f64)> {
    if diag == 0.0 {
        return Err(Error::Invalid("zero diagonal in uniform inverse".into()));
    }
    let mf = m as f64;
    let a = off / diag;
    let d_hat = (1.0 - a) * (1.0 + (mf - 1.0) * a);
    if d_hat.abs() < 1e-14 {
        return Err(Error::Singular { pivot: d_hat.abs(), step: 0 });
    }
    let inv = SymmetricMatrix::uniform(m, 1.0 + (mf - 2.0) * a, -a);
    Ok((inv, diag * d_hat))
}

/// Inverts a two-cluster block matrix
/// `[[P, Q], [Q^T, R]]` (given as a whole symmetric matrix plus the split
/// sizes) via the Schur complement of each diagonal block:
/// the (1,1) block of the inverse is `(P - Q R^{-1} Q^T)^{-1}`, the (2,2)
/// block is `(R - Q^T P^{-1} Q)^{-1}`, and the off-diagonal block is
/// `-P^{-1} Q (R - Q^T P^{-1} Q)^{-1}`.
pub fn schur_invert_two_cluster(
    i_minus_j: &SymmetricMatrix,
    m1: usize,
    m2: usize,
) -> Result<SymmetricMatrix> {
    let n = i_minus_j.dim();
    if m1 + m2 != n || m1 == 0 || m2 == 0 {
        return Err(Error::Dimension(format!(
            "cluster split {m1}+{m2} does not match dimension {n}"
        )));
    }
    let block = |rows: std::ops::Range<usize>, cols: std::ops::Range<usize>| -> Vec<Vec<f64>> {
        rows.clone()
            .map(|i| cols.clone().map(|j| i_minus_j.get(i, j)).collect())
            .collect()
    };
    let p = SymmetricMatrix::from_rows(m1, block(0..m1, 0..m1).concat())?;
    let r = SymmetricMatrix::from_rows(m2, block(m1..n, m1..n).concat())?;
    let q = block(0..m1, m1..n); // m1 x m2

    let p_inv = p.inverse()?;
    let r_inv = r.inverse()?;

    // Q R^{-1} Q^T (m1 x m1) and Q^T P^{-1} Q (m2 x m2).
    let mul_rect = |left: &[Vec<f64>], mid: &SymmetricMatrix| -> Vec<Vec<f64>> {
        // left is k x mid.dim; returns left * mid (k x mid.dim)
        left.iter().map(|row| mid.matvec(row)).collect()
    };
    let q_rinv = mul_rect(&q, &r_inv); // m1 x m2
    let mut s1 = SymmetricMatrix::zeros(m1); // P - Q R^{-1} Q^T
    for i in 0..m1 {
        for j in 0..m1 {
            let dot: f64 = (0..m2).map(|k| q_rinv[i][k] * q[j][k]).sum();
            let v = p.get(i, j) - dot;
            if i <= j {
                s1.set(i, j, v);
            }
        }
    }
    let qt: Vec<Vec<f64>> = (0..m2).map(|i| (0..m1).map(|j| q[j][i]).collect()).collect();
    let qt_pinv = mul_rect(&qt, &p_inv); // m2 x m1
    let mut s2 = SymmetricMatrix::zeros(m2); // R - Q^T P^{-1} Q
    for i in 0..m2 {
        for j in 0..m2 {
            let dot: f64 = (0..m1).map(|k| qt_pinv[i][k] * qt[j][k]).sum();
            let v = r.get(i, j) - dot;
            if i <= j {
                s2.set(i, j, v);
            }
        }
    }
    let s1_inv = s1.inverse()?;
    let s2_inv = s2.inverse()?;

    // Off-diagonal block: -P^{-1} Q S2^{-1} (m1 x m2).
    let pinv_q: Vec<Vec<f64>> = (0..m1)
        .map(|i| {
            (0..m2)
                .map(|j| (0..m1).map(|k| p_inv.get(i, k) * q[k][j]).sum::<f64>())
                .collect()
        })
        .collect();
    let off: Vec<Vec<f64>> = (0..m1)
        .map(|i| {
            (0..m2)
                .map(|j| -(0..m2).map(|k| pinv_q[i][k] * s2_inv.get(k, j)).sum::<f64>())
                .collect()
        })
        .collect();

    let mut out = SymmetricMatrix::zeros(n);
    for i in 0..m1 {
        for j in i..m1 {
            out.set(i, j, s1_inv.get(i, j));
        }
    }
    for i in 0..m2 {
        for j in i..m2 {
            out.set(m1 + i, m1 + j, s2_inv.get(i, j));
        }
    }
    for i in 0..m1 {
        for j in 0..m2 {
            out.set(i, m1 + j, off[i][j]);
        }
    }
    Ok(out)
}
