//! Strong-interaction-regime asymptotics.
//!
//! In the strong regime the per-capita voting margins concentrate on the
//! global minima of a free-energy function `F`, so the council-vote
//! moments degenerate to sign patterns of those minima. Weights are
//! computed from the minima: fully degenerate (any positive tuple) for
//! positive coupling, constrained by a fixed cluster-weight difference
//! for two antagonistic clusters, zero or a unique positive vector in the
//! hostile-world scenario.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{solve_dense, SymmetricMatrix};
use crate::model::{classify_regime, CouplingFamily, CouplingMatrix, Regime};
use crate::weak;

/// Largest nonnegative root of the fixed-point equation
/// `beta * sum_lambda tanh(x / sqrt(alpha_lambda)) = x`.
#[derive(Debug, Clone, Serialize)]
pub struct CWRoot {
    pub beta: f64,
    pub alphas: Vec<f64>,
    /// Largest nonnegative solution of the equation as written.
    pub root: f64,
    /// `|beta * sum tanh(root / sqrt(alpha)) - root|`.
    pub residual: f64,
    /// `tanh(root / sqrt(alpha_lambda))` per group: the per-group
    /// magnetisation under the saturation reading of the equation. Both
    /// this and `root` are surfaced because the equation's scaling admits
    /// two readings of the two-point support; see `scaling_note`.
    pub per_group_tanh: Vec<f64>,
    /// Set when the largest root is positive although `beta <= 1/M`. The
    /// equation as written has a positive root below the claimed
    /// threshold for sufficiently unequal group sizes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scaling_note: Option<String>,
}

/// Solves the fixed-point equation by bracketed bisection on
/// `[eps, beta * M + 1]` followed by one Newton polish.
///
/// The left-hand side is concave and bounded by `beta * M` on the
/// positive axis, so a positive root exists exactly when the slope at the
/// origin exceeds one; otherwise the largest root is 0.
pub fn solve_curie_weiss(beta: f64, alphas: &[f64]) -> Result<CWRoot> {
    if beta < 0.0 {
        return Err(Error::Invalid(format!("beta = {beta} must be nonnegative")));
    }
    if alphas.is_empty() || alphas.iter().any(|&a| !(a > 0.0)) {
        return Err(Error::Invalid("group fractions must be strictly positive".into()));
    }
    let m = alphas.len() as f64;
    let g = |x: f64| -> f64 { beta * alphas.iter().map(|a| (x / a.sqrt()).tanh()).sum::<f64>() };
    let h = |x: f64| g(x) - x;
    let h_prime = |x: f64| -> f64 {
        beta * alphas
            .iter()
            .map(|a| {
                let c = (x / a.sqrt()).cosh();
                1.0 / (a.sqrt() * c * c)
            })
            .sum::<f64>()
            - 1.0
    };

    let eps = 1e-8;
    let mut root = 0.0;
    if h(eps) > 0.0 {
        let mut lo = eps;
        let mut hi = beta * m + 1.0;
        debug_assert!(h(hi) < 0.0);
        while hi - lo > 1e-13 {
            let mid = 0.5 * (lo + hi);
            if h(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        root = 0.5 * (lo + hi);
        let dh = h_prime(root);
        if dh.abs() > 1e-8 {
            let polished = root - h(root) / dh;
            if polished.is_finite() && polished > 0.0 && h(polished).abs() < h(root).abs() {
                root = polished;
            }
        }
    }
    let residual = h(root).abs();
    if residual > 1e-12 {
        return Err(Error::NoConvergence(format!(
            "fixed-point residual {residual:e} exceeds 1e-12"
        )));
    }
    let scaling_note = (root > 0.0 && beta <= 1.0 / m + 1e-15).then(|| {
        format!(
            "positive root {root} although beta = {beta} <= 1/M = {}; \
             the equation's scaling is ambiguous for unequal group sizes",
            1.0 / m
        )
    });
    Ok(CWRoot {
        beta,
        alphas: alphas.to_vec(),
        per_group_tanh: alphas.iter().map(|a| (root / a.sqrt()).tanh()).collect(),
        root,
        residual,
        scaling_note,
    })
}

/// The free-energy function
/// `F(y) = 1/2 y^T sqrt(alpha) J^{-1} sqrt(alpha) y - sum alpha_l ln cosh y_l`
/// with its gradient and Hessian. `J` must be positive definite.
pub struct FreeEnergy {
    /// `sqrt(alpha) J^{-1} sqrt(alpha)`
    quad: SymmetricMatrix,
    alphas: Vec<f64>,
}

impl FreeEnergy {
    pub fn new(coupling: &CouplingMatrix, alphas: &[f64]) -> Result<Self> {
        let m = coupling.dim();
        if alphas.len() != m {
            return Err(Error::Dimension("alphas do not match coupling dimension".into()));
        }
        if alphas.iter().any(|&a| !(a > 0.0)) {
            return Err(Error::Invalid("group fractions must be strictly positive".into()));
        }
        let j_inv = coupling.entries().inverse().map_err(|_| {
            Error::Invalid(format!(
                "coupling matrix of the {} family is singular; the free-energy \
                 landscape is only defined for positive definite J",
                coupling.family().name()
            ))
        })?;
        let mut quad = SymmetricMatrix::zeros(m);
        for i in 0..m {
            for j in i..m {
                quad.set(i, j, alphas[i].sqrt() * j_inv.get(i, j) * alphas[j].sqrt());
            }
        }
        Ok(Self { quad, alphas: alphas.to_vec() })
    }

    pub fn value(&self, y: &[f64]) -> f64 {
        let qy = self.quad.matvec(y);
        let quad: f64 = y.iter().zip(&qy).map(|(a, b)| a * b).sum();
        let entropy: f64 = self
            .alphas
            .iter()
            .zip(y)
            .map(|(a, &yl)| a * ln_cosh(yl))
            .sum();
        0.5 * quad - entropy
    }

    pub fn gradient(&self, y: &[f64]) -> Vec<f64> {
        let mut g = self.quad.matvec(y);
        for (i, (a, &yl)) in self.alphas.iter().zip(y).enumerate() {
            g[i] -= a * yl.tanh();
        }
        g
    }

    #[doc(hidden)]
    pub fn hessian_dbg(&self, y: &[f64]) -> SymmetricMatrix {
        self.hessian(y)
    }

    fn hessian(&self, y: &[f64]) -> SymmetricMatrix {
        let mut h = self.quad.clone();
        for (i, (a, &yl)) in self.alphas.iter().zip(y).enumerate() {
            let t = yl.tanh();
            h.set(i, i, h.get(i, i) - a * (1.0 - t * t));
        }
        h
    }
}

// ln cosh without overflow at large |x|.
fn ln_cosh(x: f64) -> f64 {
    let ax = x.abs();
    ax + (-2.0 * ax).exp().ln_1p() - std::f64::consts::LN_2
}

/// `F(y)` for a single point (convenience wrapper over [`FreeEnergy`]).
pub fn f_value(y: &[f64], coupling: &CouplingMatrix, alphas: &[f64]) -> Result<f64> {
    Ok(FreeEnergy::new(coupling, alphas)?.value(y))
}

/// Gradient of `F` at `y`.
pub fn f_gradient(y: &[f64], coupling: &CouplingMatrix, alphas: &[f64]) -> Result<Vec<f64>> {
    Ok(FreeEnergy::new(coupling, alphas)?.gradient(y))
}

/// Global minima of the free-energy function with their orthant
/// signatures. The list always contains `-m` alongside `m`.
#[derive(Debug, Clone, Serialize)]
pub struct StrongMinima {
    pub minimizers: Vec<Vec<f64>>,
    pub f_value: f64,
    pub orthant_signatures: Vec<Vec<i8>>,
}

const GRAD_TOL: f64 = 1e-10;
const DEDUP_TOL: f64 = 1e-6;
const TIE_TOL: f64 = 1e-8;
const MAX_ITERS: usize = 10_000;

fn equal_alphas(alphas: &[f64]) -> bool {
    let first = alphas[0];
    alphas.iter().all(|a| (a - first).abs() <= 1e-9)
}

/// Orthant signatures to seed from, per coupling family. Only one of each
/// `+/-` pair is listed; negations are added when seeding.
fn seed_signatures(coupling: &CouplingMatrix, alphas: &[f64]) -> Result<Vec<Vec<i8>>> {
    let m = coupling.dim();
    match coupling.family() {
        CouplingFamily::Uniform { .. } => Ok(vec![vec![1; m]]),
        CouplingFamily::TwoCluster { m1, .. } => {
            let mut s = vec![1i8; m];
            for x in s.iter_mut().skip(*m1) {
                *x = -1;
            }
            Ok(vec![s])
        }
        CouplingFamily::Hostile { .. } if equal_alphas(alphas) => {
            // balanced signatures: ceil(M/2) positive coordinates
            let positives = m.div_ceil(2);
            let mut sigs = Vec::new();
            let mut idx: Vec<usize> = (0..positives).collect();
            loop {
                let mut s = vec![-1i8; m];
                for &i in &idx {
                    s[i] = 1;
                }
                sigs.push(s);
                // next combination
                let mut k = positives;
                loop {
                    if k == 0 {
                        return Ok(sigs);
                    }
                    k -= 1;
                    if idx[k] < m - (positives - k) {
                        idx[k] += 1;
                        for j in (k + 1)..positives {
                            idx[j] = idx[j - 1] + 1;
                        }
                        break;
                    }
                }
            }
        }
        _ => {
            if m > 12 {
                return Err(Error::Guard(format!(
                    "exhaustive orthant search needs 2^{m} starts; only supported for M <= 12"
                )));
            }
            // all sign patterns with the first coordinate positive
            let count = 1usize << (m - 1).min(63);
            let mut sigs = Vec::with_capacity(count);
            for bits in 0..count {
                let mut s = vec![1i8; m];
                for (k, x) in s.iter_mut().enumerate().skip(1) {
                    if bits >> (k - 1) & 1 == 1 {
                        *x = -1;
                    }
                }
                sigs.push(s);
            }
            Ok(sigs)
        }
    }
}

fn minimize_from(f: &FreeEnergy, start: &[f64]) -> Result<Vec<f64>> {
    let mut y = start.to_vec();
    for _ in 0..MAX_ITERS {
        let g = f.gradient(&y);
        let gnorm = g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if gnorm <= GRAD_TOL {
            return Ok(y);
        }
        // Newton direction when available and descending, else steepest
        // descent.
        let dir = match solve_dense(&f.hessian(&y), &g.iter().map(|x| -x).collect::<Vec<_>>()) {
            Ok(d) if d.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>() < 0.0 => d,
            _ => g.iter().map(|x| -x).collect(),
        };
        let fy = f.value(&y);
        let slope: f64 = dir.iter().zip(&g).map(|(a, b)| a * b).sum();
        let mut t = 1.0;
        let mut stepped = false;
        while t >= 1e-14 {
            let cand: Vec<f64> = y.iter().zip(&dir).map(|(a, b)| a + t * b).collect();
            if f.value(&cand) <= fy + 1e-4 * t * slope {
                // a step below one ulp makes no progress; treat as a stall
                stepped = cand != y;
                y = cand;
                break;
            }
            t *= 0.5;
        }
        if !stepped {
            // flat within floating point; accept as converged if gradient
            // is small, else report failure
            if gnorm <= 1e-8 {
                return Ok(y);
            }
            return Err(Error::NoConvergence(format!(
                "line search stalled at gradient norm {gnorm:e}, best iterate {y:?}"
            )));
        }
    }
    Err(Error::NoConvergence(format!(
        "no convergence after {MAX_ITERS} iterations from start {start:?}"
    )))
}

/// Finds the global minima of `F` by multistart damped Newton from
/// orthant-informed seeds.
pub fn minimize_f(coupling: &CouplingMatrix, alphas: &[f64]) -> Result<StrongMinima> {
    match classify_regime(coupling).tag {
        Regime::Strong => {}
        tag => {
            return Err(Error::Regime(format!(
                "{tag:?} regime: free-energy minimisation applies to the strong regime"
            )))
        }
    }
    let f = FreeEnergy::new(coupling, alphas)?;
    let m = coupling.dim();

    // Seed magnitude: the saturation scale of the tanh terms.
    let max_diag = (0..m)
        .map(|i| coupling.entries().get(i, i))
        .fold(0.0f64, f64::max);
    let x0 = solve_curie_weiss(max_diag, alphas)?.root.max(1.0);

    let mut starts = Vec::new();
    for sig in seed_signatures(coupling, alphas)? {
        let seed: Vec<f64> = sig
            .iter()
            .zip(alphas)
            .map(|(&s, a)| s as f64 * x0 / a.sqrt())
            .collect();
        starts.push((sig.clone(), seed.clone()));
        starts.push((
            sig.iter().map(|s| -s).collect(),
            seed.iter().map(|x| -x).collect(),
        ));
    }

    let mut converged: Vec<Vec<f64>> = Vec::new();
    for (_, seed) in &starts {
        let point = minimize_from(&f, seed)?;
        let duplicate = converged.iter().any(|p| {
            p.iter()
                .zip(&point)
                .all(|(a, b)| (a - b).abs() <= DEDUP_TOL)
        });
        if !duplicate {
            converged.push(point);
        }
    }

    let best = converged
        .iter()
        .map(|p| f.value(p))
        .fold(f64::INFINITY, f64::min);
    let mut minima: Vec<Vec<f64>> = converged
        .into_iter()
        .filter(|p| f.value(p) <= best + TIE_TOL)
        .collect();

    // F is even; make sure each minimum is paired with its negation.
    let existing = minima.clone();
    for p in existing {
        let neg: Vec<f64> = p.iter().map(|x| -x).collect();
        let present = minima.iter().any(|q| {
            q.iter().zip(&neg).all(|(a, b)| (a - b).abs() <= DEDUP_TOL)
        });
        if !present {
            minima.push(neg);
        }
    }

    let signature = |p: &[f64]| -> Vec<i8> { p.iter().map(|&x| if x > 0.0 { 1 } else { -1 }).collect() };
    minima.sort_by_key(|a| signature(a));
    let orthant_signatures = minima.iter().map(|p| signature(p)).collect();
    Ok(StrongMinima { minimizers: minima, f_value: best, orthant_signatures })
}

/// Optimal-weight structure in the strong regime.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "tag", rename_all = "snake_case")]
pub enum WeightSolution {
    /// Unique vector of weights.
    Unique { weights: Vec<f64> },
    /// Any tuple of positive weights is optimal; the linear system only
    /// pins their sum (relevant when mixing clusters of different
    /// regimes).
    AnyPositive { weight_sum: f64 },
    /// Weights are free within each cluster, but the total weight of
    /// cluster 1 minus the total of cluster 2 must equal `theta`.
    ClusterConstrained { cluster_sizes: (usize, usize), theta: f64 },
    /// The unique optimum assigns weight zero to every group.
    Zero { m: usize },
    /// Independent clusters solved separately (block coupling).
    PerCluster { sigma: SigmaScale, clusters: Vec<ClusterSolution> },
}

/// Normalisation of the democracy deficit: `sqrt(N)` when every cluster is
/// in the weak regime, `N` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaScale {
    SqrtN,
    N,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClusterSolution {
    /// First group index of this cluster in the full model.
    pub start: usize,
    pub len: usize,
    pub regime: Regime,
    pub solution: WeightSolution,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

// Per-group magnetisation magnitudes at a minimizer. The minimization
// runs in the dual coordinates y; the margin proportion S_l/N_l
// concentrates on tanh(y_l) (for one group this is exactly the classical
// fixed point: y = J tanh(y) with m = tanh(y) solving m = tanh(J m)).
fn magnitudes(minimizer: &[f64]) -> Vec<f64> {
    minimizer.iter().map(|x| x.tanh().abs()).collect()
}

/// Derives the strong-regime weight solution from the coupling family and
/// the minima of `F`. `minima` may be omitted for the homogeneous family,
/// whose landscape is characterised by the fixed-point root instead; it is
/// computed on demand otherwise.
pub fn strong_weight_solution(
    coupling: &CouplingMatrix,
    alphas: &[f64],
    minima: Option<&StrongMinima>,
) -> Result<WeightSolution> {
    match classify_regime(coupling).tag {
        Regime::Strong => {}
        tag => {
            return Err(Error::Regime(format!(
                "{tag:?} regime: strong-regime weights requested"
            )))
        }
    }
    let m = coupling.dim();

    let get_minima = |computed: &mut Option<StrongMinima>| -> Result<StrongMinima> {
        if let Some(mm) = minima {
            return Ok(mm.clone());
        }
        if computed.is_none() {
            *computed = Some(minimize_f(coupling, alphas)?);
        }
        Ok(computed.clone().unwrap())
    };
    let mut computed: Option<StrongMinima> = None;

    match coupling.family() {
        CouplingFamily::Homogeneous { beta } => {
            if m == 1 {
                // single group: A = [1], b = alpha * m(beta); the weight is
                // unique and proportional to the group's population
                let cw = solve_curie_weiss(*beta, alphas)?;
                return Ok(WeightSolution::Unique {
                    weights: vec![alphas[0] * cw.per_group_tanh[0]],
                });
            }
            // council votes are asymptotically unanimous: A is all ones
            // and every entry of b equals the common sum
            let cw = solve_curie_weiss(*beta, alphas)?;
            let sum: f64 = alphas
                .iter()
                .zip(&cw.per_group_tanh)
                .map(|(a, t)| a * t)
                .sum();
            Ok(WeightSolution::AnyPositive { weight_sum: sum })
        }
        CouplingFamily::Uniform { .. } => {
            let mm = get_minima(&mut computed)?;
            let aligned = mm
                .orthant_signatures
                .iter()
                .all(|s| s.iter().all(|&x| x == s[0]));
            if !aligned || mm.minimizers.len() != 2 {
                return Err(Error::UnresolvedMinima(format!(
                    "expected two aligned-orthant minima, found signatures {:?}",
                    mm.orthant_signatures
                )));
            }
            let mags = magnitudes(&mm.minimizers[0]);
            let sum: f64 = alphas.iter().zip(&mags).map(|(a, x)| a * x).sum();
            Ok(WeightSolution::AnyPositive { weight_sum: sum })
        }
        CouplingFamily::TwoCluster { m1, m2, .. } => {
            let mm = get_minima(&mut computed)?;
            if mm.minimizers.len() != 2 {
                return Err(Error::UnresolvedMinima(format!(
                    "two-cluster weights need exactly two global minima, found {}",
                    mm.minimizers.len()
                )));
            }
            let split_ok = mm.orthant_signatures.iter().all(|s| {
                let c1 = s[..*m1].iter().all(|&x| x == s[0]);
                let c2 = s[*m1..].iter().all(|&x| x == -s[0]);
                c1 && c2
            });
            if !split_ok {
                return Err(Error::UnresolvedMinima(format!(
                    "minima signatures {:?} do not split along the cluster boundary",
                    mm.orthant_signatures
                )));
            }
            let mags = magnitudes(&mm.minimizers[0]);
            let theta: f64 = alphas[..*m1]
                .iter()
                .zip(&mags[..*m1])
                .map(|(a, x)| a * x)
                .sum::<f64>()
                - alphas[*m1..]
                    .iter()
                    .zip(&mags[*m1..])
                    .map(|(a, x)| a * x)
                    .sum::<f64>();
            Ok(WeightSolution::ClusterConstrained { cluster_sizes: (*m1, *m2), theta })
        }
        CouplingFamily::Hostile { .. } => {
            if !equal_alphas(alphas) {
                return Err(Error::UnresolvedMinima(
                    "hostile world with unequal group sizes is not characterised in the \
                     strong regime"
                        .into(),
                ));
            }
            let mm = get_minima(&mut computed)?;
            let balanced = mm.orthant_signatures.iter().all(|s| {
                let pos = s.iter().filter(|&&x| x > 0).count();
                pos == m / 2 || pos == m.div_ceil(2)
            });
            if !balanced {
                return Err(Error::UnresolvedMinima(format!(
                    "hostile-world minima signatures {:?} are not balanced",
                    mm.orthant_signatures
                )));
            }
            if m.is_multiple_of(2) {
                return Ok(WeightSolution::Zero { m });
            }
            // odd M: w_lambda = m_lambda (M+1) / M^3, with m_lambda read
            // from the majority-positive minimizers at the coordinates
            // with positive sign
            let mf = m as f64;
            let mut sums = vec![0.0f64; m];
            let mut counts = vec![0usize; m];
            for (p, s) in mm.minimizers.iter().zip(&mm.orthant_signatures) {
                let pos = s.iter().filter(|&&x| x > 0).count();
                if pos != m.div_ceil(2) {
                    continue;
                }
                for lambda in 0..m {
                    if s[lambda] > 0 {
                        sums[lambda] += p[lambda].tanh();
                        counts[lambda] += 1;
                    }
                }
            }
            if counts.contains(&0) {
                return Err(Error::UnresolvedMinima(
                    "some group never appears with positive sign among the minima".into(),
                ));
            }
            let weights: Vec<f64> = sums
                .iter()
                .zip(&counts)
                .map(|(s, &c)| s / c as f64 * (mf + 1.0) / (mf * mf * mf))
                .collect();
            Ok(WeightSolution::Unique { weights })
        }
        CouplingFamily::Block { .. } => Err(Error::Invalid(
            "block coupling: use mixed_cluster_weights".into(),
        )),
        CouplingFamily::General => {
            let mm = get_minima(&mut computed)?;
            let k = mm.minimizers.len() as f64;
            let mut a = SymmetricMatrix::zeros(m);
            for i in 0..m {
                for j in i..m {
                    let v: f64 = mm
                        .orthant_signatures
                        .iter()
                        .map(|s| (s[i] * s[j]) as f64)
                        .sum::<f64>()
                        / k;
                    a.set(i, j, v);
                }
            }
            let mut b = vec![0.0; m];
            for (p, s) in mm.minimizers.iter().zip(&mm.orthant_signatures) {
                let total: f64 = alphas.iter().zip(p).map(|(al, y)| al * y.tanh()).sum();
                for lambda in 0..m {
                    b[lambda] += s[lambda] as f64 * total / k;
                }
            }
            let weights = solve_dense(&a, &b).map_err(|e| {
                Error::UnresolvedMinima(format!(
                    "sign-pattern matrix singular ({e}); the weight family is degenerate \
                     beyond the recognised scenarios"
                ))
            })?;
            Ok(WeightSolution::Unique { weights })
        }
    }
}

/// Solves a block-coupled model cluster by cluster. The deficit
/// normalisation is `sqrt(N)` only when every cluster is weak; otherwise
/// it is `N` and weak clusters get limit weight zero (their finite-`N`
/// weight scales as `1/sqrt(N)`).
pub fn mixed_cluster_weights(
    coupling: &CouplingMatrix,
    alphas: &[f64],
) -> Result<WeightSolution> {
    let blocks = match coupling.family() {
        CouplingFamily::Block { blocks } => blocks,
        _ => {
            return Err(Error::Invalid(
                "mixed_cluster_weights requires a block coupling".into(),
            ))
        }
    };
    if alphas.len() != coupling.dim() {
        return Err(Error::Dimension("alphas do not match coupling dimension".into()));
    }
    let regimes: Vec<Regime> = blocks.iter().map(|b| classify_regime(b).tag).collect();
    if regimes.contains(&Regime::Critical) {
        return Err(Error::Regime(
            "a cluster sits in the critical regime; weights are undefined there".into(),
        ));
    }
    let all_weak = regimes.iter().all(|&r| r == Regime::Weak);
    let sigma = if all_weak { SigmaScale::SqrtN } else { SigmaScale::N };

    let mut clusters = Vec::with_capacity(blocks.len());
    let mut start = 0;
    for (block, &regime) in blocks.iter().zip(&regimes) {
        let len = block.dim();
        let block_alphas = &alphas[start..start + len];
        let (solution, note) = match (sigma, regime) {
            (SigmaScale::SqrtN, Regime::Weak) => {
                // raw per-cluster solve: relative scales across clusters
                // are meaningful, so no per-cluster renormalisation
                let sys = weak::weak_system(block, block_alphas)?;
                let w = solve_dense(&sys.a, &sys.b)?;
                (WeightSolution::Unique { weights: w }, None)
            }
            (SigmaScale::N, Regime::Weak) => (
                WeightSolution::Zero { m: len },
                Some(
                    "weak cluster mixed with strong ones: limit weight 0; the finite-N \
                     weight scales as 1/sqrt(N)"
                        .to_string(),
                ),
            ),
            (_, Regime::Strong) => (strong_weight_solution(block, block_alphas, None)?, None),
            (_, Regime::Critical) => unreachable!(),
        };
        clusters.push(ClusterSolution { start, len, regime, solution, note });
        start += len;
    }
    Ok(WeightSolution::PerCluster { sigma, clusters })
}
