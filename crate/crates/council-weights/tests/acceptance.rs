//! Acceptance suite: one test per criterion, each printing a single
//! PASS/FAIL line. All tolerances are pinned here.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use council_weights::linalg::{solve_dense, SymmetricMatrix};
use council_weights::model::{build_coupling, CouplingFamily, GroupSizes};
use council_weights::sim::{
    democracy_deficit_exact, estimate_moments, exact_margin_distribution, exact_moments,
    gibbs_sample, ChainConfig, SigmaMode,
};
use council_weights::strong::{
    f_gradient, f_value, minimize_f, mixed_cluster_weights, strong_weight_solution, SigmaScale,
    WeightSolution,
};
use council_weights::weak::{closed_form_weights, solve_weak_weights};

fn report(criterion: usize, name: &str, pass: bool) {
    println!(
        "ACCEPTANCE {criterion:2} [{}] {name}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "acceptance criterion {criterion} ({name}) failed");
}

fn max_rel_deviation(got: &[f64], want: &[f64]) -> f64 {
    got.iter()
        .zip(want)
        .map(|(g, w)| (g - w).abs() / w.abs().max(1e-300))
        .fold(0.0, f64::max)
}

/// Rescale by the largest magnitude (a positive scale factor).
fn normalize(w: &[f64]) -> Vec<f64> {
    let max = w.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    w.iter().map(|x| x / max).collect()
}

#[test]
fn criterion_01_square_root_law() {
    const TOL: f64 = 1e-10;
    let alphas = [0.4, 0.3, 0.2, 0.1];
    let coupling = build_coupling(CouplingFamily::Homogeneous { beta: 0.0 }, 4).unwrap();
    let weights = solve_weak_weights(&coupling, &alphas).unwrap();
    let expected: Vec<f64> = alphas.iter().map(|a| (a / alphas[0]).sqrt()).collect();
    let dev = max_rel_deviation(&normalize(&weights), &normalize(&expected));
    report(1, "square-root law for independent voters", dev <= TOL);
}

#[test]
fn criterion_02_closed_form_matches_general_solve() {
    const TOL: f64 = 1e-8;
    const DRAWS: usize = 50;
    let mut rng = ChaCha12Rng::seed_from_u64(20260823);
    let mut worst = 0.0f64;
    for family in 0..4 {
        for _ in 0..DRAWS {
            let m = rng.gen_range(2..=6usize);
            // equal sizes for hostile (the closed form assumes them);
            // otherwise a random normalised positive vector
            let alphas: Vec<f64> = if family == 3 {
                vec![1.0 / m as f64; m]
            } else {
                let raw: Vec<f64> = (0..m).map(|_| rng.gen_range(0.2..1.0)).collect();
                let sum: f64 = raw.iter().sum();
                raw.iter().map(|x| x / sum).collect()
            };
            let coupling = loop {
                let cand = match family {
                    0 => {
                        let beta = rng.gen_range(0.0..1.0 / m as f64 - 0.02);
                        CouplingFamily::Homogeneous { beta }
                    }
                    1 | 2 => {
                        let j0: f64 = rng.gen_range(0.05..0.9);
                        let cap = j0.min((1.0 - j0) / (m as f64 - 1.0));
                        let jbar = rng.gen_range(0.0..0.95 * cap);
                        if family == 1 {
                            CouplingFamily::Uniform { j0, jbar }
                        } else {
                            let m1 = rng.gen_range(1..m);
                            CouplingFamily::TwoCluster { j0, jbar, m1, m2: m - m1 }
                        }
                    }
                    _ => {
                        let j0 = rng.gen_range(0.05..0.9);
                        let cap = (j0 / (m as f64 - 1.0)).min(j0).min(1.0 - j0);
                        let jbar = rng.gen_range(0.0..0.95 * cap);
                        CouplingFamily::Hostile { j0, jbar }
                    }
                };
                if let Ok(c) = build_coupling(cand, m) {
                    break c;
                }
            };
            let general = solve_weak_weights(&coupling, &alphas).unwrap();
            let (closed, _) = closed_form_weights(&coupling, &alphas).unwrap();
            let dev: f64 = normalize(&general)
                .iter()
                .zip(&normalize(&closed))
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            worst = worst.max(dev);
        }
    }
    report(
        2,
        "closed-form weights match the general normal-equation solve",
        worst <= TOL,
    );
}

#[test]
fn criterion_03_finite_n_converges_to_arcsin_law() {
    const TARGET: f64 = 0.216340; // (2/pi) asin(1/3)
    const TOL: f64 = 0.01;
    let coupling = build_coupling(CouplingFamily::Homogeneous { beta: 0.25 }, 2).unwrap();
    let sizes = GroupSizes::new(vec![0.5, 0.5], Some(vec![2001, 2001])).unwrap();
    let dist = exact_margin_distribution(&coupling, &sizes).unwrap();
    let moments = exact_moments(&dist);
    let got = moments.chi_chi[0][1];
    report(
        3,
        "exact enumeration at N=2001 approaches the arcsin-law correlation",
        (got - TARGET).abs() <= TOL,
    );
}

#[test]
fn criterion_04_two_point_concentration() {
    const MASS_TOL: f64 = 0.05;
    const MIN_MASS: f64 = 0.99;
    const MIN_ALIGNMENT: f64 = 0.99;
    const SELF_CONSISTENCY_TOL: f64 = 0.05;
    let beta = 1.2;
    let coupling = build_coupling(CouplingFamily::Homogeneous { beta }, 2).unwrap();
    let sizes = GroupSizes::new(vec![0.5, 0.5], Some(vec![400, 400])).unwrap();
    let config = ChainConfig { chains: 4, sweeps: 25_000, burn_in: 1_000, seed: 11 };
    let set = gibbs_sample(&coupling, &sizes, &config).unwrap();

    // location of the concentration points: mean of |S1|/N1
    let samples: Vec<&Vec<f64>> = set.samples.iter().flatten().collect();
    let n1 = 400.0;
    let m_emp: f64 =
        samples.iter().map(|s| (s[0] / n1).abs()).sum::<f64>() / samples.len() as f64;
    let near: usize = samples
        .iter()
        .filter(|s| ((s[0] / n1).abs() - m_emp).abs() <= MASS_TOL)
        .count();
    let aligned: usize = samples
        .iter()
        .filter(|s| (s[0] > 0.0) == (s[1] > 0.0))
        .count();
    let mass = near as f64 / samples.len() as f64;
    let alignment = aligned as f64 / samples.len() as f64;

    // self-consistency against the fixed-point solver under the
    // saturation reading tanh(root / sqrt(alpha))
    let cw = council_weights::strong::solve_curie_weiss(beta, &[0.5, 0.5]).unwrap();
    let m_theory = cw.per_group_tanh[0];

    report(
        4,
        "strong-regime margins concentrate on two symmetric points",
        mass >= MIN_MASS
            && alignment >= MIN_ALIGNMENT
            && (m_emp - m_theory).abs() <= SELF_CONSISTENCY_TOL,
    );
}

#[test]
fn criterion_05_mcmc_matches_exact_enumeration() {
    const SE_FACTOR: f64 = 4.0;
    const SE_FLOOR: f64 = 1e-4;
    let couplings = [
        build_coupling(CouplingFamily::Homogeneous { beta: 0.2 }, 2).unwrap(),
        build_coupling(CouplingFamily::Uniform { j0: 0.3, jbar: 0.1 }, 2).unwrap(),
        build_coupling(CouplingFamily::Hostile { j0: 0.6, jbar: 0.2 }, 2).unwrap(),
    ];
    let sizes = GroupSizes::new(vec![0.5, 0.5], Some(vec![9, 9])).unwrap();
    let mut pass = true;
    for (i, coupling) in couplings.iter().enumerate() {
        let dist = exact_margin_distribution(coupling, &sizes).unwrap();
        let exact = exact_moments(&dist);
        let config = ChainConfig { chains: 4, sweeps: 25_000, burn_in: 1_000, seed: 100 + i as u64 };
        let set = gibbs_sample(coupling, &sizes, &config).unwrap();
        let est = estimate_moments(&set).unwrap();
        for l in 0..2 {
            let gap = (est.chi_s[l] - exact.chi_s[l]).abs();
            let band = SE_FACTOR * est.chi_s_se[l].max(SE_FLOOR);
            if gap > band {
                eprintln!("coupling {i}, chi_s[{l}]: gap {gap} > band {band}");
                pass = false;
            }
            for k in 0..2 {
                // batch-means SE tracked for chi_s; reuse its scale as a
                // conservative band for the +/-1-bounded chi-chi moments
                let gap = (est.chi_chi[l][k] - exact.chi_chi[l][k]).abs();
                let band = SE_FACTOR * est.chi_s_se[l].max(SE_FLOOR);
                if gap > band {
                    eprintln!("coupling {i}, chi_chi[{l}][{k}]: gap {gap} > band {band}");
                    pass = false;
                }
            }
        }
    }
    report(5, "MCMC moments match exact enumeration within 4 SE", pass);
}

#[test]
fn criterion_06_normal_equation_solution_is_optimal() {
    const PERTURBATIONS: usize = 100;
    const REL_SIZE: f64 = 0.05;
    let coupling = build_coupling(CouplingFamily::Homogeneous { beta: 0.2 }, 2).unwrap();
    let sizes = GroupSizes::new(vec![0.5, 0.5], Some(vec![9, 9])).unwrap();
    let dist = exact_margin_distribution(&coupling, &sizes).unwrap();
    let moments = exact_moments(&dist);
    let sigma = 18f64.sqrt();

    let mut a = SymmetricMatrix::zeros(2);
    for l in 0..2 {
        for k in l..2 {
            a.set(l, k, moments.chi_chi[l][k]);
        }
    }
    let b: Vec<f64> = moments.chi_s.iter().map(|x| x / sigma).collect();
    let w = solve_dense(&a, &b).unwrap();
    let base = democracy_deficit_exact(&dist, &w, SigmaMode::SqrtN).unwrap();

    let mut rng = ChaCha12Rng::seed_from_u64(606);
    let mut improvements = 0;
    for _ in 0..PERTURBATIONS {
        let cand: Vec<f64> = w
            .iter()
            .map(|x| x * (1.0 + rng.gen_range(-REL_SIZE..REL_SIZE)))
            .collect();
        let deficit = democracy_deficit_exact(&dist, &cand, SigmaMode::SqrtN).unwrap();
        if deficit < base {
            improvements += 1;
        }
    }
    report(
        6,
        "normal-equation weights beat all random perturbations in exact deficit",
        improvements == 0,
    );
}

#[test]
fn criterion_07_strong_regime_degeneracy() {
    const THETA_TOL: f64 = 1e-8;
    const FORMULA_TOL: f64 = 1e-10;
    let mut pass = true;

    // uniform strong: any positive tuple optimal
    let uniform = build_coupling(CouplingFamily::Uniform { j0: 1.3, jbar: 0.2 }, 3).unwrap();
    match strong_weight_solution(&uniform, &[0.5, 0.3, 0.2], None).unwrap() {
        WeightSolution::AnyPositive { weight_sum } if weight_sum > 0.0 => {}
        other => {
            eprintln!("uniform strong: expected AnyPositive, got {other:?}");
            pass = false;
        }
    }

    // symmetric two-cluster: constrained with theta = 0
    let two = build_coupling(
        CouplingFamily::TwoCluster { j0: 1.2, jbar: 0.1, m1: 1, m2: 1 },
        2,
    )
    .unwrap();
    match strong_weight_solution(&two, &[0.5, 0.5], None).unwrap() {
        WeightSolution::ClusterConstrained { theta, .. } if theta.abs() <= THETA_TOL => {}
        other => {
            eprintln!("two-cluster strong: expected theta = 0, got {other:?}");
            pass = false;
        }
    }

    // hostile even M: zero weights
    let hostile_even = build_coupling(CouplingFamily::Hostile { j0: 1.2, jbar: 0.1 }, 2).unwrap();
    match strong_weight_solution(&hostile_even, &[0.5, 0.5], None).unwrap() {
        WeightSolution::Zero { m: 2 } => {}
        other => {
            eprintln!("hostile even strong: expected Zero, got {other:?}");
            pass = false;
        }
    }

    // hostile M = 3: unique weights proportional to m * 4/27
    let hostile_odd = build_coupling(CouplingFamily::Hostile { j0: 1.5, jbar: 0.3 }, 3).unwrap();
    let third = [1.0 / 3.0; 3];
    let minima = minimize_f(&hostile_odd, &third).unwrap();
    // majority magnetisation: tanh of a positively-signed coordinate of a
    // majority-positive minimizer
    let m_maj = minima
        .minimizers
        .iter()
        .zip(&minima.orthant_signatures)
        .find(|(_, s)| s.iter().filter(|&&x| x > 0).count() == 2)
        .map(|(p, s)| {
            let idx = s.iter().position(|&x| x > 0).unwrap();
            p[idx].tanh()
        })
        .unwrap();
    match strong_weight_solution(&hostile_odd, &third, Some(&minima)).unwrap() {
        WeightSolution::Unique { weights } => {
            let expected = m_maj * 4.0 / 27.0;
            for (l, w) in weights.iter().enumerate() {
                if (w - expected).abs() > FORMULA_TOL {
                    eprintln!("hostile odd strong: w[{l}] = {w}, expected {expected}");
                    pass = false;
                }
            }
        }
        other => {
            eprintln!("hostile odd strong: expected Unique, got {other:?}");
            pass = false;
        }
    }

    report(7, "strong-regime weight degeneracy by scenario", pass);
}

#[test]
fn criterion_08_gradient_check() {
    const REL_TOL: f64 = 1e-6;
    const DRAWS: usize = 100;
    let mut rng = ChaCha12Rng::seed_from_u64(808);
    let mut pass = true;
    for _ in 0..DRAWS {
        let m = rng.gen_range(2..=5usize);
        let j0 = rng.gen_range(1.05..2.0);
        let cap = j0 / (m as f64 - 1.0);
        let jbar = rng.gen_range(0.0..0.9 * cap);
        let family = if rng.gen::<bool>() {
            CouplingFamily::Uniform { j0, jbar: jbar.min(0.99 * j0) }
        } else {
            CouplingFamily::Hostile { j0, jbar }
        };
        let coupling = match build_coupling(family, m) {
            Ok(c) => c,
            Err(_) => continue,
        };
        let raw: Vec<f64> = (0..m).map(|_| rng.gen_range(0.2..1.0)).collect();
        let sum: f64 = raw.iter().sum();
        let alphas: Vec<f64> = raw.iter().map(|x| x / sum).collect();
        let y: Vec<f64> = (0..m).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let g = f_gradient(&y, &coupling, &alphas).unwrap();
        let h = 1e-6;
        for k in 0..m {
            let mut yp = y.clone();
            let mut ym = y.clone();
            yp[k] += h;
            ym[k] -= h;
            let fd = (f_value(&yp, &coupling, &alphas).unwrap()
                - f_value(&ym, &coupling, &alphas).unwrap())
                / (2.0 * h);
            if (g[k] - fd).abs() > REL_TOL * fd.abs().max(1.0) {
                eprintln!("gradient mismatch at coord {k}: {} vs {fd}", g[k]);
                pass = false;
            }
        }
    }
    report(8, "analytic gradient matches central finite differences", pass);
}

#[test]
fn criterion_09_hostile_correlation_bound() {
    const SLACK: f64 = 1e-12;
    let mut pass = true;
    for m in [3usize, 4, 5] {
        let bound = 1.0 / (m as f64 - 1.0);
        for i in 1..=20 {
            for k in 1..=20 {
                let j0 = i as f64 / 21.0; // in (0, 1): weak regime needs j0 < 1
                let cap = (j0 / (m as f64 - 1.0)).min(1.0 - j0);
                let jbar = k as f64 / 21.0 * cap * 0.999;
                let coupling =
                    match build_coupling(CouplingFamily::Hostile { j0, jbar }, m) {
                        Ok(c) => c,
                        Err(_) => continue,
                    };
                let alphas = vec![1.0 / m as f64; m];
                let (_, coef) = match closed_form_weights(&coupling, &alphas) {
                    Ok(r) => r,
                    Err(_) => continue, // critical-band or strong points
                };
                if coef.a > bound + SLACK {
                    eprintln!("a = {} > 1/(M-1) = {bound} at j0={j0}, jbar={jbar}, M={m}", coef.a);
                    pass = false;
                }
            }
        }
    }
    report(9, "hostile-world correlation bounded by 1/(M-1)", pass);
}

#[test]
fn criterion_10_mixed_clusters() {
    let weak_block = build_coupling(CouplingFamily::Homogeneous { beta: 0.2 }, 1).unwrap();
    let strong_block = build_coupling(CouplingFamily::Uniform { j0: 1.2, jbar: 0.1 }, 2).unwrap();
    let coupling = build_coupling(
        CouplingFamily::Block { blocks: vec![weak_block, strong_block] },
        3,
    )
    .unwrap();
    let solution = mixed_cluster_weights(&coupling, &[0.4, 0.3, 0.3]).unwrap();
    let pass = match &solution {
        WeightSolution::PerCluster { sigma: SigmaScale::N, clusters } => {
            let weak_zero = matches!(clusters[0].solution, WeightSolution::Zero { .. });
            let strong_positive = match &clusters[1].solution {
                WeightSolution::AnyPositive { weight_sum } => *weight_sum > 0.0,
                WeightSolution::Unique { weights } => weights.iter().sum::<f64>() > 0.0,
                _ => false,
            };
            weak_zero && strong_positive
        }
        _ => false,
    };
    if !pass {
        eprintln!("mixed clusters: got {solution:?}");
    }
    report(
        10,
        "mixed clusters: weak block weight 0, strong block total positive",
        pass,
    );
}
