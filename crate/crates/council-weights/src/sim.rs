//! Finite-size validation: exact enumeration and Monte Carlo sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::SymmetricMatrix;
use crate::model::{CouplingMatrix, GroupSizes};

/// Exact distribution of the group margin vector `(S_1, ..., S_M)` under
/// the mean-field Gibbs measure, represented on the grid of margin
/// values. Margins of a group with `N` voters live on
/// `{-N, -N+2, ..., N}`.
pub struct MarginDistribution {
    sizes: Vec<u64>,
    /// Probability of each margin combination, indexed in mixed radix by
    /// `k_lambda = (S_lambda + N_lambda) / 2 in 0..=N_lambda`.
    probabilities: Vec<f64>,
}

const MAX_STATES: u64 = 10_000_000;

impl MarginDistribution {
    fn index_to_margins(&self, mut idx: usize) -> Vec<f64> {
        let mut margins = Vec::with_capacity(self.sizes.len());
        for &n in &self.sizes {
            let k = (idx % (n as usize + 1)) as i64;
            idx /= n as usize + 1;
            margins.push((2 * k - n as i64) as f64);
        }
        margins
    }

    /// Iterates over `(margins, probability)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<f64>, f64)> + '_ {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(i, &p)| (self.index_to_margins(i), p))
    }

    pub fn sizes(&self) -> &[u64] {
        &self.sizes
    }
}

// table of ln C(n, k) for k in 0..=n, built by the ratio recurrence
fn ln_choose_table(n: u64) -> Vec<f64> {
    let mut table = Vec::with_capacity(n as usize + 1);
    let mut lc = 0.0f64;
    table.push(lc);
    for k in 0..n {
        lc += ((n - k) as f64 / (k + 1) as f64).ln();
        table.push(lc);
    }
    table
}

/// Enumerates the margin distribution exactly. The number of margin
/// combinations `prod (N_lambda + 1)` must not exceed 1e7.
pub fn exact_margin_distribution(
    coupling: &CouplingMatrix,
    sizes: &GroupSizes,
) -> Result<MarginDistribution> {
    let finite = sizes.finite_sizes().ok_or_else(|| {
        Error::Invalid("exact enumeration requires finite group sizes".into())
    })?;
    if finite.len() != coupling.dim() {
        return Err(Error::Dimension("group count does not match coupling dimension".into()));
    }
    let mut states: u64 = 1;
    for &n in finite {
        states = states.saturating_mul(n + 1);
        if states > MAX_STATES {
            return Err(Error::Guard(format!(
                "margin-state count prod(N+1) exceeds {MAX_STATES}; use the sampler instead"
            )));
        }
    }
    let states = states as usize;

    let m = finite.len();
    let binom_tables: Vec<Vec<f64>> = finite.iter().map(|&n| ln_choose_table(n)).collect();
    // coupling with the 1/sqrt(N_l N_k) normalisation folded in
    let mut scaled = SymmetricMatrix::zeros(m);
    for l in 0..m {
        for k in l..m {
            scaled.set(
                l,
                k,
                coupling.entries().get(l, k)
                    / ((finite[l] as f64) * (finite[k] as f64)).sqrt(),
            );
        }
    }

    // log-weights, then a log-sum-exp normalisation for stability
    let mut log_w = vec![0.0f64; states];
    let mut margins = vec![0.0f64; m];
    for (idx, lw) in log_w.iter_mut().enumerate() {
        let mut rest = idx;
        let mut log_mult = 0.0;
        for (l, &n) in finite.iter().enumerate() {
            let k = rest % (n as usize + 1);
            rest /= n as usize + 1;
            margins[l] = (2 * k as i64 - n as i64) as f64;
            log_mult += binom_tables[l][k];
        }
        let mut energy = 0.0;
        for l in 0..m {
            for k in 0..m {
                energy += scaled.get(l, k) * margins[l] * margins[k];
            }
        }
        *lw = log_mult + 0.5 * energy;
    }
    let max_lw = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut probabilities: Vec<f64> = log_w.iter().map(|lw| (lw - max_lw).exp()).collect();
    let z: f64 = probabilities.iter().sum();
    for p in &mut probabilities {
        *p /= z;
    }
    Ok(MarginDistribution { sizes: finite.to_vec(), probabilities })
}

/// First and second moments of council votes and margins, exact or
/// estimated. `chi_lambda = +1` if `S_lambda > 0`, else `-1` (ties count
/// as -1 under the strict-majority quota).
#[derive(Debug, Clone, Serialize)]
pub struct Moments {
    /// `E[chi_l chi_n]`, symmetric with unit diagonal only for odd sizes.
    pub chi_chi: Vec<Vec<f64>>,
    /// `E[chi_l * S]` where `S = sum_n S_n` (unnormalised).
    pub chi_s: Vec<f64>,
    /// `E[chi_l]`.
    pub chi_mean: Vec<f64>,
    /// `E[S_l]`.
    pub s_mean: Vec<f64>,
    /// `E[|S|]` of the total margin.
    pub abs_s_mean: f64,
    /// Standard errors for `chi_s` (zero for exact results).
    pub chi_s_se: Vec<f64>,
    /// Number of samples behind the estimate (0 marks an exact result).
    pub samples: u64,
}

fn chi(margin: f64) -> f64 {
    if margin > 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Exact moments by full enumeration.
pub fn exact_moments(dist: &MarginDistribution) -> Moments {
    let m = dist.sizes.len();
    let mut chi_chi = vec![vec![0.0; m]; m];
    let mut chi_s = vec![0.0; m];
    let mut chi_mean = vec![0.0; m];
    let mut s_mean = vec![0.0; m];
    let mut abs_s_mean = 0.0;
    for (margins, p) in dist.iter() {
        let chis: Vec<f64> = margins.iter().map(|&s| chi(s)).collect();
        let total: f64 = margins.iter().sum();
        for l in 0..m {
            chi_mean[l] += p * chis[l];
            s_mean[l] += p * margins[l];
            chi_s[l] += p * chis[l] * total;
            for n in 0..m {
                chi_chi[l][n] += p * chis[l] * chis[n];
            }
        }
        abs_s_mean += p * total.abs();
    }
    Moments {
        chi_chi,
        chi_s,
        chi_mean,
        s_mean,
        abs_s_mean,
        chi_s_se: vec![0.0; m],
        samples: 0,
    }
}

/// Configuration of the heat-bath Gibbs sampler.
#[derive(Debug, Clone, Serialize)]
pub struct ChainConfig {
    pub chains: usize,
    /// Recorded sweeps per chain (one sweep = one full pass over voters).
    pub sweeps: usize,
    /// Discarded initial sweeps per chain.
    pub burn_in: usize,
    pub seed: u64,
}

/// Margin trajectories of independent chains: `samples[chain][sweep]` is
/// the margin vector after that recorded sweep.
pub struct SampleSet {
    pub config: ChainConfig,
    pub sizes: Vec<u64>,
    pub samples: Vec<Vec<Vec<f64>>>,
}

/// Runs independent heat-bath chains in parallel. Chain `c` draws from a
/// stream derived from `(seed, c)`, so results are reproducible and
/// independent of thread scheduling.
pub fn gibbs_sample(
    coupling: &CouplingMatrix,
    sizes: &GroupSizes,
    config: &ChainConfig,
) -> Result<SampleSet> {
    let finite = sizes
        .finite_sizes()
        .ok_or_else(|| Error::Invalid("sampling requires finite group sizes".into()))?;
    if finite.len() != coupling.dim() {
        return Err(Error::Dimension("group count does not match coupling dimension".into()));
    }
    if config.chains == 0 || config.sweeps == 0 {
        return Err(Error::Invalid("chains and sweeps must be positive".into()));
    }
    let finite = finite.to_vec();
    let samples: Vec<Vec<Vec<f64>>> = (0..config.chains)
        .into_par_iter()
        .map(|chain| run_chain(coupling, &finite, config, chain as u64))
        .collect();
    Ok(SampleSet { config: config.clone(), sizes: finite, samples })
}

fn run_chain(
    coupling: &CouplingMatrix,
    sizes: &[u64],
    config: &ChainConfig,
    chain: u64,
) -> Vec<Vec<f64>> {
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    rng.set_stream(chain + 1);
    let m = sizes.len();
    let total: u64 = sizes.iter().sum();

    // spins grouped by block; margins tracked incrementally
    let mut spins: Vec<Vec<i8>> = sizes
        .iter()
        .map(|&n| (0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect())
        .collect();
    let mut margins: Vec<f64> = spins
        .iter()
        .map(|block| block.iter().map(|&s| s as f64).sum())
        .collect();

    let sqrt_n: Vec<f64> = sizes.iter().map(|&n| (n as f64).sqrt()).collect();
    let mut out = Vec::with_capacity(config.sweeps);
    for sweep in 0..config.burn_in + config.sweeps {
        for _ in 0..total {
            // uniform voter: group by size-weighted choice, then index
            let mut pick = rng.gen_range(0..total);
            let mut l = 0;
            while pick >= sizes[l] {
                pick -= sizes[l];
                l += 1;
            }
            let i = pick as usize;
            // local field with the voter's own spin removed from its
            // group margin
            let own = spins[l][i] as f64;
            let mut field = 0.0;
            for k in 0..m {
                let s_k = if k == l { margins[k] - own } else { margins[k] };
                field += coupling.entries().get(l, k) * s_k / (sqrt_n[l] * sqrt_n[k]);
            }
            // heat bath: P(spin = +1) = e^f / (e^f + e^-f)
            let p_up = 1.0 / (1.0 + (-2.0 * field).exp());
            let new: i8 = if rng.gen::<f64>() < p_up { 1 } else { -1 };
            margins[l] += (new - spins[l][i]) as f64;
            spins[l][i] = new;
        }
        if sweep >= config.burn_in {
            out.push(margins.clone());
        }
    }
    out
}

const BATCHES: usize = 32;

/// Moment estimates from samples, with batch-means standard errors over
/// 32 fixed batches. Requires at least 64 pooled samples.
pub fn estimate_moments(set: &SampleSet) -> Result<Moments> {
    let m = set.sizes.len();
    let pooled: Vec<&Vec<f64>> = set.samples.iter().flatten().collect();
    let n = pooled.len();
    if n < 2 * BATCHES {
        return Err(Error::Guard(format!(
            "need at least {} samples for batch-means errors, got {n}",
            2 * BATCHES
        )));
    }
    let mut chi_chi = vec![vec![0.0; m]; m];
    let mut chi_s = vec![0.0; m];
    let mut chi_mean = vec![0.0; m];
    let mut s_mean = vec![0.0; m];
    let mut abs_s_mean = 0.0;
    // per-batch means of chi*S for the standard error
    let mut batch_chi_s = vec![vec![0.0; m]; BATCHES];
    let batch_len = n / BATCHES;
    let used = batch_len * BATCHES;
    let w = 1.0 / used as f64;
    for (t, margins) in pooled.iter().take(used).enumerate() {
        let chis: Vec<f64> = margins.iter().map(|&s| chi(s)).collect();
        let total: f64 = margins.iter().sum();
        let batch = t / batch_len;
        for l in 0..m {
            chi_mean[l] += w * chis[l];
            s_mean[l] += w * margins[l];
            chi_s[l] += w * chis[l] * total;
            batch_chi_s[batch][l] += chis[l] * total / batch_len as f64;
            for k in 0..m {
                chi_chi[l][k] += w * chis[l] * chis[k];
            }
        }
        abs_s_mean += w * total.abs();
    }
    let mut chi_s_se = vec![0.0; m];
    for l in 0..m {
        let var: f64 = batch_chi_s
            .iter()
            .map(|b| (b[l] - chi_s[l]).powi(2))
            .sum::<f64>()
            / (BATCHES as f64 - 1.0);
        chi_s_se[l] = (var / BATCHES as f64).sqrt();
    }
    Ok(Moments {
        chi_chi,
        chi_s,
        chi_mean,
        s_mean,
        abs_s_mean,
        chi_s_se,
        samples: used as u64,
    })
}

/// How margins are normalised in the deficit: `sigma = sqrt(N)` (weak
/// regime) or `sigma = N` (strong regime).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaMode {
    SqrtN,
    N,
}

impl SigmaMode {
    pub fn value(self, total: u64) -> f64 {
        match self {
            SigmaMode::SqrtN => (total as f64).sqrt(),
            SigmaMode::N => total as f64,
        }
    }
}

/// Democracy deficit `E[(S/sigma - sum_l w_l chi_l)^2]` from exact
/// enumeration.
pub fn democracy_deficit_exact(
    dist: &MarginDistribution,
    weights: &[f64],
    sigma_mode: SigmaMode,
) -> Result<f64> {
    if weights.len() != dist.sizes.len() {
        return Err(Error::Dimension("weights do not match group count".into()));
    }
    let sigma = sigma_mode.value(dist.sizes.iter().sum());
    let mut deficit = 0.0;
    for (margins, p) in dist.iter() {
        let total: f64 = margins.iter().sum();
        let council: f64 = margins.iter().zip(weights).map(|(&s, &w)| chi(s) * w).sum();
        deficit += p * (total / sigma - council).powi(2);
    }
    Ok(deficit)
}

/// Democracy deficit estimated from samples, with a batch-means standard
/// error.
pub fn democracy_deficit_sampled(
    set: &SampleSet,
    weights: &[f64],
    sigma_mode: SigmaMode,
) -> Result<(f64, f64)> {
    if weights.len() != set.sizes.len() {
        return Err(Error::Dimension("weights do not match group count".into()));
    }
    let pooled: Vec<&Vec<f64>> = set.samples.iter().flatten().collect();
    let n = pooled.len();
    if n < 2 * BATCHES {
        return Err(Error::Guard(format!(
            "need at least {} samples for batch-means errors, got {n}",
            2 * BATCHES
        )));
    }
    let sigma = sigma_mode.value(set.sizes.iter().sum());
    let batch_len = n / BATCHES;
    let used = batch_len * BATCHES;
    let mut batch_means = vec![0.0f64; BATCHES];
    for (t, margins) in pooled.iter().take(used).enumerate() {
        let total: f64 = margins.iter().sum();
        let council: f64 = margins.iter().zip(weights).map(|(&s, &w)| chi(s) * w).sum();
        batch_means[t / batch_len] += (total / sigma - council).powi(2) / batch_len as f64;
    }
    let mean = batch_means.iter().sum::<f64>() / BATCHES as f64;
    let var = batch_means
        .iter()
        .map(|b| (b - mean).powi(2))
        .sum::<f64>()
        / (BATCHES as f64 - 1.0);
    Ok((mean, (var / BATCHES as f64).sqrt()))
}

/// Result of checking candidate weights against the empirically estimated
/// normal equations.
#[derive(Debug, Clone, Serialize)]
pub struct OptimalityReport {
    /// Weights solving the estimated system `A_hat w = b_hat`.
    pub estimated_weights: Vec<f64>,
    /// Candidate weights after the same max-entry normalisation.
    pub candidate_weights: Vec<f64>,
    /// Max absolute difference between the two, both normalised.
    pub max_deviation: f64,
    /// Residual `A_hat w_cand - b_hat` before normalisation.
    pub residual: Vec<f64>,
}

/// Solves the estimated normal equations from finite-size moments and
/// compares against candidate weights (both rescaled so their largest
/// entry is 1).
pub fn verify_optimality(
    moments: &Moments,
    sigma: f64,
    candidate: &[f64],
) -> Result<OptimalityReport> {
    let m = moments.chi_s.len();
    if candidate.len() != m {
        return Err(Error::Dimension("candidate weights do not match group count".into()));
    }
    let mut a = crate::linalg::SymmetricMatrix::zeros(m);
    for l in 0..m {
        for k in l..m {
            // symmetrise the estimate: sampling noise breaks exact symmetry
            a.set(l, k, 0.5 * (moments.chi_chi[l][k] + moments.chi_chi[k][l]));
        }
    }
    let b: Vec<f64> = moments.chi_s.iter().map(|x| x / sigma).collect();
    let estimated = crate::linalg::solve_dense(&a, &b)?;
    let norm = |v: &[f64]| -> Vec<f64> {
        let max = v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
        if max == 0.0 {
            v.to_vec()
        } else {
            v.iter().map(|x| x / max).collect()
        }
    };
    let est_n = norm(&estimated);
    let cand_n = norm(candidate);
    let max_deviation = est_n
        .iter()
        .zip(&cand_n)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    let residual: Vec<f64> = a
        .matvec(candidate)
        .iter()
        .zip(&b)
        .map(|(x, y)| x - y)
        .collect();
    Ok(OptimalityReport {
        estimated_weights: est_n,
        candidate_weights: cand_n,
        max_deviation,
        residual,
    })
}

/// Writes sampled margins as CSV with header `chain,sweep,S1,...,SM`.
pub fn write_samples_csv<W: std::io::Write>(set: &SampleSet, out: &mut W) -> Result<()> {
    write!(out, "chain,sweep")?;
    for l in 1..=set.sizes.len() {
        write!(out, ",S{l}")?;
    }
    writeln!(out)?;
    for (chain, sweeps) in set.samples.iter().enumerate() {
        for (sweep, margins) in sweeps.iter().enumerate() {
            write!(out, "{chain},{sweep}")?;
            for s in margins {
                write!(out, ",{s}")?;
            }
            writeln!(out)?;
        }
    }
    Ok(())
}
