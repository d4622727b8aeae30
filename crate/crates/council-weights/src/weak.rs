//! Weak-interaction-regime asymptotics.
//!
//! In the weak regime the normalised group margins are asymptotically
//! Gaussian, so the council-vote correlations reduce to orthant
//! probabilities of a bivariate normal and thus to an arcsine expression
//! in the covariance entries. The optimal weights solve `A w = b` with
//! `A` the council correlation matrix and `b` the normalised
//! margin/council cross moments; for the recognised coupling families the
//! solution collapses to `w = c1 * sqrt(alpha) + c2 * eta` closed forms.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{solve_dense, SymmetricMatrix};
use crate::model::{classify_regime, CouplingFamily, CouplingMatrix, Regime};

/// Covariance matrix of the normalised voting margins in the weak regime.
#[derive(Debug, Clone)]
pub struct CovarianceMatrix(pub SymmetricMatrix);

impl CovarianceMatrix {
    pub fn entries(&self) -> &SymmetricMatrix {
        &self.0
    }
}

fn require_weak(coupling: &CouplingMatrix) -> Result<()> {
    match classify_regime(coupling).tag {
        Regime::Weak => Ok(()),
        tag => Err(Error::Regime(format!(
            "{:?} regime: weak-regime asymptotics do not apply",
            tag
        ))),
    }
}

fn check_alphas(alphas: &[f64]) -> Result<()> {
    if alphas.iter().any(|&a| !(a > 0.0)) {
        return Err(Error::Invalid(
            "group fractions must be strictly positive".into(),
        ));
    }
    Ok(())
}

/// Covariance of the normalised margins: `I + beta/(1 - M beta) * ones`
/// for homogeneous coupling, `(I - J)^{-1}` for heterogeneous coupling.
pub fn covariance_matrix(coupling: &CouplingMatrix) -> Result<CovarianceMatrix> {
    require_weak(coupling)?;
    let m = coupling.dim();
    match coupling.family() {
        CouplingFamily::Homogeneous { beta } => {
            let gamma = beta / (1.0 - m as f64 * beta);
            Ok(CovarianceMatrix(SymmetricMatrix::uniform(m, 1.0 + gamma, gamma)))
        }
        _ => {
            let i_minus_j = SymmetricMatrix::identity(m).sub(coupling.entries())?;
            Ok(CovarianceMatrix(i_minus_j.inverse()?))
        }
    }
}

/// Probability that two jointly standard normal variables with correlation
/// `rho` are both positive: `1/4 + arcsin(rho) / (2 pi)`.
pub fn orthant_probability(rho: f64) -> Result<f64> {
    let rho = clamp_unit(rho)?;
    Ok(0.25 + rho.asin() / (2.0 * std::f64::consts::PI))
}

fn clamp_unit(x: f64) -> Result<f64> {
    if x.abs() <= 1.0 {
        Ok(x)
    } else if x.abs() <= 1.0 + 1e-12 {
        Ok(x.signum())
    } else {
        Err(Error::Invalid(format!("correlation {x} outside [-1, 1]")))
    }
}

/// Council-vote correlation matrix `A`: unit diagonal, off-diagonals
/// `(2/pi) arcsin(c_kv / sqrt(c_kk c_vv))`.
pub fn council_correlation_matrix(c: &CovarianceMatrix) -> Result<SymmetricMatrix> {
    let m = c.0.dim();
    for i in 0..m {
        if c.0.get(i, i) <= 0.0 {
            return Err(Error::Invalid(
                "covariance matrix has a non-positive diagonal entry".into(),
            ));
        }
    }
    let mut a = SymmetricMatrix::identity(m);
    for i in 0..m {
        for j in (i + 1)..m {
            let rho = clamp_unit(c.0.get(i, j) / (c.0.get(i, i) * c.0.get(j, j)).sqrt())?;
            a.set(i, j, 2.0 / std::f64::consts::PI * rho.asin());
        }
    }
    Ok(a)
}

/// Right-hand side of the weak-regime linear system:
/// `b_k = sqrt(2 / (pi c_kk)) * (c_kk sqrt(alpha_k) + sum_{v != k} c_kv sqrt(alpha_v))`.
pub fn weak_b_vector(c: &CovarianceMatrix, alphas: &[f64]) -> Result<Vec<f64>> {
    check_alphas(alphas)?;
    let m = c.0.dim();
    if alphas.len() != m {
        return Err(Error::Dimension("alphas do not match covariance dimension".into()));
    }
    let sqrt_a: Vec<f64> = alphas.iter().map(|a| a.sqrt()).collect();
    let mut b = vec![0.0; m];
    for k in 0..m {
        let mut s = 0.0;
        for v in 0..m {
            s += c.0.get(k, v) * sqrt_a[v];
        }
        b[k] = (2.0 / (std::f64::consts::PI * c.0.get(k, k))).sqrt() * s;
    }
    Ok(b)
}

/// The weak-regime linear system `A w = b`.
#[derive(Debug, Clone)]
pub struct WeakSystem {
    pub a: SymmetricMatrix,
    pub b: Vec<f64>,
}

/// Assembles `A` and `b` for a weak-regime coupling.
pub fn weak_system(coupling: &CouplingMatrix, alphas: &[f64]) -> Result<WeakSystem> {
    let c = covariance_matrix(coupling)?;
    let a = council_correlation_matrix(&c)?;
    let b = weak_b_vector(&c, alphas)?;
    Ok(WeakSystem { a, b })
}

/// Solves for the optimal weights in the weak regime and rescales so the
/// largest weight equals 1 (weights are defined up to a positive factor).
pub fn solve_weak_weights(coupling: &CouplingMatrix, alphas: &[f64]) -> Result<Vec<f64>> {
    let sys = weak_system(coupling, alphas)?;
    let w = solve_dense(&sys.a, &sys.b).map_err(|e| match e {
        Error::Singular { pivot, step } => Error::Invalid(format!(
            "internal consistency error: weak-regime system singular (pivot {pivot:e}, step {step})"
        )),
        other => other,
    })?;
    normalize_max_one(w)
}

pub(crate) fn normalize_max_one(mut w: Vec<f64>) -> Result<Vec<f64>> {
    let max = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) {
        return Err(Error::Invalid(
            "cannot normalise weights: largest weight is not positive".into(),
        ));
    }
    for x in &mut w {
        *x /= max;
    }
    Ok(w)
}

/// Coefficients of the closed-form weight expressions
/// `w = first * sqrt(alpha) +/- second * eta`.
#[derive(Debug, Clone, Serialize)]
pub struct ClosedFormCoefficients {
    pub scenario: &'static str,
    /// Coefficient of `sqrt(alpha_lambda)` (C1, D1, or D1').
    pub first: f64,
    /// Coefficient of the group-independent term (C2, D2, or D2').
    pub second: f64,
    /// Council-vote correlation between two distinct groups (its negative
    /// in the hostile scenario).
    pub a: f64,
    /// `eta = sum sqrt(alpha)`, or the signed cluster difference
    /// `eta_bar` in the two-cluster scenario.
    pub eta: f64,
}

fn arcsin_corr(x: f64) -> Result<f64> {
    Ok(2.0 / std::f64::consts::PI * clamp_unit(x)?.asin())
}

/// Closed-form optimal weights for the four recognised weak-regime
/// scenarios, in the normalisation of the weight formulas themselves
/// (no max-1 rescaling).
pub fn closed_form_weights(
    coupling: &CouplingMatrix,
    alphas: &[f64],
) -> Result<(Vec<f64>, ClosedFormCoefficients)> {
    require_weak(coupling)?;
    check_alphas(alphas)?;
    let m = coupling.dim();
    if alphas.len() != m {
        return Err(Error::Dimension("alphas do not match coupling dimension".into()));
    }
    let mf = m as f64;
    let sqrt_a: Vec<f64> = alphas.iter().map(|a| a.sqrt()).collect();
    let eta: f64 = sqrt_a.iter().sum();

    match *coupling.family() {
        CouplingFamily::Homogeneous { beta } => {
            let a = arcsin_corr(beta / (1.0 - (mf - 1.0) * beta))?;
            let c1 = (1.0 + (mf - 1.0) * a) * (1.0 - mf * beta);
            let c2 = (1.0 + (mf - 1.0) * a) * beta - a;
            let w = sqrt_a.iter().map(|s| c1 * s + c2 * eta).collect();
            Ok((w, ClosedFormCoefficients { scenario: "homogeneous", first: c1, second: c2, a, eta }))
        }
        CouplingFamily::Uniform { j0, jbar } => {
            let a = arcsin_corr(jbar / (1.0 - j0 - (mf - 2.0) * jbar))?;
            let d1 = (1.0 + (mf - 1.0) * a) * (1.0 - j0 - (mf - 1.0) * jbar);
            let d2 = (1.0 + (mf - 2.0) * a) * jbar - a * (1.0 - j0);
            let w = sqrt_a.iter().map(|s| d1 * s + d2 * eta).collect();
            Ok((w, ClosedFormCoefficients { scenario: "uniform", first: d1, second: d2, a, eta }))
        }
        CouplingFamily::TwoCluster { j0, jbar, m1, .. } => {
            let a = arcsin_corr(jbar / (1.0 - j0 - (mf - 2.0) * jbar))?;
            let d1 = (1.0 + (mf - 1.0) * a) * (1.0 - j0 - (mf - 1.0) * jbar);
            let d2 = (1.0 + (mf - 2.0) * a) * jbar - a * (1.0 - j0);
            let eta_bar: f64 = sqrt_a[..m1].iter().sum::<f64>() - sqrt_a[m1..].iter().sum::<f64>();
            let w = sqrt_a
                .iter()
                .enumerate()
                .map(|(lambda, s)| {
                    let sign = if lambda < m1 { 1.0 } else { -1.0 };
                    d1 * s + sign * d2 * eta_bar
                })
                .collect();
            Ok((
                w,
                ClosedFormCoefficients {
                    scenario: "two_cluster",
                    first: d1,
                    second: d2,
                    a,
                    eta: eta_bar,
                },
            ))
        }
        CouplingFamily::Hostile { j0, jbar } => {
            // a = -E(chi_1 chi_2) >= 0
            let a = arcsin_corr(jbar / (1.0 - j0 + (mf - 2.0) * jbar))?;
            let d1 = (1.0 - (mf - 1.0) * a) * (1.0 - j0 + (mf - 1.0) * jbar);
            let d2 = (1.0 - (mf - 2.0) * a) * jbar - a * (1.0 - j0);
            let w = sqrt_a.iter().map(|s| d1 * s - d2 * eta).collect();
            Ok((w, ClosedFormCoefficients { scenario: "hostile", first: d1, second: d2, a, eta }))
        }
        _ => Err(Error::Invalid(format!(
            "no closed form for the {} family; use solve_weak_weights",
            coupling.family().name()
        ))),
    }
}

/// Whether a weight vector is realisable as an actual voting system.
#[derive(Debug, Clone, Serialize)]
pub struct FeasibilityReport {
    pub all_nonnegative: bool,
    pub offending_groups: Vec<usize>,
    /// Present when some weight is negative: the minimal democracy deficit
    /// is then unattainable by any real voting system.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<&'static str>,
}

/// Flags groups with negative optimal weight.
pub fn check_feasibility(w: &[f64]) -> FeasibilityReport {
    let offending: Vec<usize> = w
        .iter()
        .enumerate()
        .filter_map(|(i, &x)| (x < 0.0).then_some(i))
        .collect();
    let all_nonnegative = offending.is_empty();
    FeasibilityReport {
        all_nonnegative,
        offending_groups: offending,
        note: (!all_nonnegative)
            .then_some("negative weights: the minimal democracy deficit is unattainable"),
    }
}
