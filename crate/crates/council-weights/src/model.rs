//! Voting-model specifications: group sizes, coupling matrices and their
//! recognised families, interaction-regime classification, and the JSON
//! input format consumed by the CLI.
//!
//! The quota is fixed at 1/2 (simple majority in the council); none of the
//! weight results support any other quota.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{definiteness, Definiteness, SymmetricMatrix};

/// Council quota. Fixed; the optimality theory assumes a simple majority.
pub const QUOTA: f64 = 0.5;

/// Tolerance around the critical manifold (`beta = 1/M`, or the smallest
/// eigenvalue of `I - J` crossing zero). Inside it we refuse to compute
/// weights rather than pick a side.
pub const CRITICAL_TOL: f64 = 1e-10;

const ALPHA_SUM_TOL: f64 = 1e-9;
/// Allowed absolute gap between each `N_lambda / N` and the declared limit
/// fraction `alpha_lambda` when finite sizes are present.
const ALPHA_SIZE_TOL: f64 = 1e-2;

/// Number of groups plus their (limit) size fractions, and optionally the
/// finite populations used for simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSizes {
    m: usize,
    alphas: Vec<f64>,
    finite_sizes: Option<Vec<u64>>,
}

impl GroupSizes {
    /// Validates and normalises the group-size data. The fractions must be
    /// strictly positive and sum to 1; a deviation of at most `1e-9` is
    /// renormalised away.
    pub fn new(alphas: Vec<f64>, finite_sizes: Option<Vec<u64>>) -> Result<Self> {
        let m = alphas.len();
        if m == 0 {
            return Err(Error::Invalid("need at least one group".into()));
        }
        if alphas.iter().any(|&a| !(a > 0.0) || a >= 1.0 + ALPHA_SUM_TOL) {
            // alpha = 1 is allowed only for M = 1
            if !(m == 1 && (alphas[0] - 1.0).abs() <= ALPHA_SUM_TOL) {
                return Err(Error::Invalid(
                    "group fractions must lie in (0, 1) and be positive".into(),
                ));
            }
        }
        let sum: f64 = alphas.iter().sum();
        if (sum - 1.0).abs() > ALPHA_SUM_TOL {
            return Err(Error::Invalid(format!(
                "group fractions sum to {sum}, expected 1"
            )));
        }
        let alphas: Vec<f64> = alphas.iter().map(|a| a / sum).collect();
        if let Some(sizes) = &finite_sizes {
            if sizes.len() != m {
                return Err(Error::Dimension(format!(
                    "{} finite sizes for {m} groups",
                    sizes.len()
                )));
            }
            if sizes.contains(&0) {
                return Err(Error::Invalid("finite group sizes must be >= 1".into()));
            }
            let total: u64 = sizes.iter().sum();
            for (lambda, (&n, &a)) in sizes.iter().zip(&alphas).enumerate() {
                let frac = n as f64 / total as f64;
                if (frac - a).abs() > ALPHA_SIZE_TOL {
                    return Err(Error::Invalid(format!(
                        "group {lambda}: N_lambda/N = {frac} is far from alpha = {a}"
                    )));
                }
            }
        }
        Ok(Self { m, alphas, finite_sizes })
    }

    /// Equal fractions, no finite sizes.
    pub fn equal(m: usize) -> Self {
        Self { m, alphas: vec![1.0 / m as f64; m], finite_sizes: None }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn finite_sizes(&self) -> Option<&[u64]> {
        self.finite_sizes.as_deref()
    }

    pub fn total_finite(&self) -> Option<u64> {
        self.finite_sizes.as_ref().map(|s| s.iter().sum())
    }
}

/// Recognised coupling families. The family tag, not the storage, drives
/// the closed-form solution paths; the matrix is always materialised
/// densely.
#[derive(Debug, Clone, PartialEq)]
pub enum CouplingFamily {
    /// All entries equal to `beta >= 0`.
    Homogeneous { beta: f64 },
    /// Diagonal `j0`, off-diagonal `jbar`, with `j0 > jbar >= 0`.
    Uniform { j0: f64, jbar: f64 },
    /// Two clusters of sizes `m1 + m2 = M`: intra-cluster off-diagonals
    /// `jbar`, inter-cluster `-jbar`.
    TwoCluster { j0: f64, jbar: f64, m1: usize, m2: usize },
    /// Diagonal `j0`, off-diagonal `-jbar <= 0`.
    Hostile { j0: f64, jbar: f64 },
    /// Block-diagonal: independent clusters, each with its own family.
    Block { blocks: Vec<CouplingMatrix> },
    /// Arbitrary symmetric positive definite matrix.
    General,
}

impl CouplingFamily {
    pub fn name(&self) -> &'static str {
        match self {
            CouplingFamily::Homogeneous { .. } => "homogeneous",
            CouplingFamily::Uniform { .. } => "uniform",
            CouplingFamily::TwoCluster { .. } => "two_cluster",
            CouplingFamily::Hostile { .. } => "hostile",
            CouplingFamily::Block { .. } => "block",
            CouplingFamily::General => "general",
        }
    }
}

/// Symmetric coupling matrix `J` with its family tag.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    entries: SymmetricMatrix,
    family: CouplingFamily,
}

impl CouplingMatrix {
    pub fn entries(&self) -> &SymmetricMatrix {
        &self.entries
    }

    pub fn family(&self) -> &CouplingFamily {
        &self.family
    }

    pub fn dim(&self) -> usize {
        self.entries.dim()
    }

    /// Arbitrary symmetric matrix as the `general` family. Requires
    /// positive definiteness, like every non-homogeneous family.
    pub fn general(entries: SymmetricMatrix) -> Result<Self> {
        if definiteness(&entries).tag != Definiteness::PositiveDefinite {
            return Err(Error::Constraint(
                "general coupling matrix must be positive definite".into(),
            ));
        }
        Ok(Self { entries, family: CouplingFamily::General })
    }
}

/// Materialises the coupling matrix for a family, checking the family's
/// definiteness constraints.
pub fn build_coupling(family: CouplingFamily, m: usize) -> Result<CouplingMatrix> {
    if m == 0 {
        return Err(Error::Invalid("M must be >= 1".into()));
    }
    let mf = m as f64;
    let entries = match &family {
        CouplingFamily::Homogeneous { beta } => {
            if *beta < 0.0 {
                return Err(Error::Constraint(format!("beta = {beta} violates beta >= 0")));
            }
            SymmetricMatrix::uniform(m, *beta, *beta)
        }
        CouplingFamily::Uniform { j0, jbar } => {
            if !(*jbar >= 0.0) {
                return Err(Error::Constraint(format!("jbar = {jbar} violates jbar >= 0")));
            }
            if !(j0 > jbar) {
                return Err(Error::Constraint(format!(
                    "j0 = {j0}, jbar = {jbar} violates j0 > jbar (positive definiteness)"
                )));
            }
            SymmetricMatrix::uniform(m, *j0, *jbar)
        }
        CouplingFamily::TwoCluster { j0, jbar, m1, m2 } => {
            if m1 + m2 != m || *m1 == 0 || *m2 == 0 {
                return Err(Error::Dimension(format!(
                    "cluster sizes {m1} + {m2} must equal M = {m} and be positive"
                )));
            }
            if !(*jbar >= 0.0) {
                return Err(Error::Constraint(format!("jbar = {jbar} violates jbar >= 0")));
            }
            if !(j0 > jbar) {
                return Err(Error::Constraint(format!(
                    "j0 = {j0}, jbar = {jbar} violates j0 > jbar (positive definiteness)"
                )));
            }
            let mut s = SymmetricMatrix::zeros(m);
            for i in 0..m {
                for j in i..m {
                    let v = if i == j {
                        *j0
                    } else if (i < *m1) == (j < *m1) {
                        *jbar
                    } else {
                        -*jbar
                    };
                    s.set(i, j, v);
                }
            }
            s
        }
        CouplingFamily::Hostile { j0, jbar } => {
            if m < 2 {
                return Err(Error::Invalid("hostile coupling needs M >= 2".into()));
            }
            if !(*jbar >= 0.0) {
                return Err(Error::Constraint(format!("jbar = {jbar} violates jbar >= 0")));
            }
            if !(*jbar < j0 / (mf - 1.0)) {
                return Err(Error::Constraint(format!(
                    "j0 = {j0}, jbar = {jbar} violates jbar < j0/(M-1) (positive definiteness)"
                )));
            }
            SymmetricMatrix::uniform(m, *j0, -*jbar)
        }
        CouplingFamily::Block { blocks } => {
            let total: usize = blocks.iter().map(|b| b.dim()).sum();
            if total != m {
                return Err(Error::Dimension(format!(
                    "block dimensions sum to {total}, expected M = {m}"
                )));
            }
            let mut s = SymmetricMatrix::zeros(m);
            let mut off = 0;
            for b in blocks {
                let d = b.dim();
                for i in 0..d {
                    for j in i..d {
                        s.set(off + i, off + j, b.entries().get(i, j));
                    }
                }
                off += d;
            }
            s
        }
        CouplingFamily::General => {
            return Err(Error::Invalid(
                "general family needs explicit entries; use CouplingMatrix::general".into(),
            ))
        }
    };
    Ok(CouplingMatrix { entries, family })
}

/// Interaction regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Weak,
    Critical,
    Strong,
}

/// Regime classification; block couplings carry one entry per diagonal
/// block.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeClass {
    pub tag: Regime,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_cluster: Option<Vec<RegimeClass>>,
}

fn tag_from_margin(margin: f64) -> Regime {
    if margin.abs() < CRITICAL_TOL {
        Regime::Critical
    } else if margin > 0.0 {
        Regime::Weak
    } else {
        Regime::Strong
    }
}

/// Classifies the interaction regime of a coupling matrix.
///
/// Homogeneous matrices are classified by the sign of `1/M - beta`;
/// heterogeneous ones by the smallest eigenvalue of `I - J`. Block
/// matrices are classified per diagonal block; the overall tag is weak
/// only if every block is weak, critical if any block is critical, and
/// strong otherwise (this matches the normalisation choice `sigma`).
pub fn classify_regime(coupling: &CouplingMatrix) -> RegimeClass {
    match coupling.family() {
        CouplingFamily::Homogeneous { beta } => {
            let margin = 1.0 / coupling.dim() as f64 - beta;
            RegimeClass { tag: tag_from_margin(margin), per_cluster: None }
        }
        CouplingFamily::Block { blocks } => {
            let per: Vec<RegimeClass> = blocks.iter().map(classify_regime).collect();
            let tag = if per.iter().any(|r| r.tag == Regime::Critical) {
                Regime::Critical
            } else if per.iter().all(|r| r.tag == Regime::Weak) {
                Regime::Weak
            } else {
                Regime::Strong
            };
            RegimeClass { tag, per_cluster: Some(per) }
        }
        _ => {
            let i_minus_j = SymmetricMatrix::identity(coupling.dim())
                .sub(coupling.entries())
                .expect("dimensions match");
            let rep = definiteness(&i_minus_j);
            RegimeClass { tag: tag_from_margin(rep.min_eigenvalue_estimate), per_cluster: None }
        }
    }
}

/// A complete model: group sizes plus coupling. The quota is the constant
/// [`QUOTA`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub sizes: GroupSizes,
    pub coupling: CouplingMatrix,
}

impl ModelSpec {
    pub fn m(&self) -> usize {
        self.sizes.m()
    }
}

/// Validates consistency between sizes and coupling; returns the
/// normalised spec.
pub fn validate_model(spec: ModelSpec) -> Result<ModelSpec> {
    if spec.sizes.m() != spec.coupling.dim() {
        return Err(Error::Dimension(format!(
            "coupling dimension {} does not match group count {}",
            spec.coupling.dim(),
            spec.sizes.m()
        )));
    }
    Ok(spec)
}

// ---------------------------------------------------------------------------
// JSON input format
// ---------------------------------------------------------------------------

/// On-disk coupling description. Field names are part of the file format.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum CouplingSpec {
    Homogeneous {
        beta: f64,
    },
    Uniform {
        j0: f64,
        jbar: f64,
    },
    TwoCluster {
        j0: f64,
        jbar: f64,
        #[serde(rename = "M1")]
        m1: usize,
        #[serde(rename = "M2")]
        m2: usize,
    },
    Hostile {
        j0: f64,
        jbar: f64,
    },
    Block {
        blocks: Vec<BlockSpec>,
    },
    General {
        entries: Vec<Vec<f64>>,
    },
}

/// One diagonal block of a block coupling: its size plus its own coupling,
/// written inline as `{"M": 2, "family": "uniform", ...}`.
#[derive(Debug, Clone, Serialize)]
pub struct BlockSpec {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(flatten)]
    pub coupling: CouplingSpec,
}

// Manual impl: serde cannot combine `flatten` with `deny_unknown_fields`,
// so the block size is split off by hand before parsing the family.
impl<'de> Deserialize<'de> for BlockSpec {
    fn deserialize<D>(deserializer: D) -> std::result::Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        use serde::de::Error as _;
        let mut map = serde_json::Map::deserialize(deserializer)?;
        let m = map
            .remove("M")
            .ok_or_else(|| D::Error::missing_field("M"))?;
        let m: usize = serde_json::from_value(m).map_err(D::Error::custom)?;
        let coupling: CouplingSpec =
            serde_json::from_value(serde_json::Value::Object(map)).map_err(D::Error::custom)?;
        Ok(BlockSpec { m, coupling })
    }
}

/// On-disk model description:
/// `{"M": ..., "alphas": [...], "finite_sizes": [...]?, "coupling": {...}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    #[serde(rename = "M")]
    pub m: usize,
    pub alphas: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finite_sizes: Option<Vec<u64>>,
    pub coupling: CouplingSpec,
}

fn coupling_from_spec(spec: &CouplingSpec, m: usize) -> Result<CouplingMatrix> {
    match spec {
        CouplingSpec::Homogeneous { beta } => {
            build_coupling(CouplingFamily::Homogeneous { beta: *beta }, m)
        }
        CouplingSpec::Uniform { j0, jbar } => {
            build_coupling(CouplingFamily::Uniform { j0: *j0, jbar: *jbar }, m)
        }
        CouplingSpec::TwoCluster { j0, jbar, m1, m2 } => build_coupling(
            CouplingFamily::TwoCluster { j0: *j0, jbar: *jbar, m1: *m1, m2: *m2 },
            m,
        ),
        CouplingSpec::Hostile { j0, jbar } => {
            build_coupling(CouplingFamily::Hostile { j0: *j0, jbar: *jbar }, m)
        }
        CouplingSpec::Block { blocks } => {
            let built: Result<Vec<CouplingMatrix>> = blocks
                .iter()
                .map(|b| coupling_from_spec(&b.coupling, b.m))
                .collect();
            build_coupling(CouplingFamily::Block { blocks: built? }, m)
        }
        CouplingSpec::General { entries } => {
            if entries.len() != m || entries.iter().any(|r| r.len() != m) {
                return Err(Error::Dimension(format!(
                    "general coupling entries must form an {m}x{m} matrix"
                )));
            }
            let flat: Vec<f64> = entries.iter().flatten().copied().collect();
            CouplingMatrix::general(SymmetricMatrix::from_rows(m, flat)?)
        }
    }
}

impl SpecFile {
    pub fn into_model(self) -> Result<ModelSpec> {
        if self.alphas.len() != self.m {
            return Err(Error::Dimension(format!(
                "{} alphas for M = {}",
                self.alphas.len(),
                self.m
            )));
        }
        let sizes = GroupSizes::new(self.alphas, self.finite_sizes)?;
        let coupling = coupling_from_spec(&self.coupling, self.m)?;
        validate_model(ModelSpec { sizes, coupling })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Reads and validates a model spec from a JSON file.
pub fn load_model(path: &std::path::Path) -> Result<ModelSpec> {
    let text = std::fs::read_to_string(path)?;
    SpecFile::from_json(&text)?.into_model()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn homogeneous_fill() {
        let j = build_coupling(CouplingFamily::Homogeneous { beta: 0.25 }, 2).unwrap();
        for i in 0..2 {
            for k in 0..2 {
                assert_eq!(j.entries().get(i, k), 0.25);
            }
        }
    }

    #[test]
    fn hostile_accepts_within_pd_bound() {
        // jbar = 0.2 < j0/(M-1) = 0.3
        let j = build_coupling(CouplingFamily::Hostile { j0: 0.6, jbar: 0.2 }, 3).unwrap();
        assert_eq!(j.entries().get(0, 0), 0.6);
        assert_eq!(j.entries().get(0, 1), -0.2);
    }

    #[test]
    fn two_cluster_rejects_jbar_at_least_j0() {
        let err = build_coupling(
            CouplingFamily::TwoCluster { j0: 0.5, jbar: 0.6, m1: 1, m2: 1 },
            2,
        )
        .unwrap_err();
        assert!(err.to_string().contains("j0 > jbar"), "{err}");
    }

    #[test]
    fn regime_homogeneous() {
        let j = build_coupling(CouplingFamily::Homogeneous { beta: 0.2 }, 3).unwrap();
        assert_eq!(classify_regime(&j).tag, Regime::Weak);
        let j = build_coupling(CouplingFamily::Homogeneous { beta: 0.5 }, 3).unwrap();
        assert_eq!(classify_regime(&j).tag, Regime::Strong);
        let j = build_coupling(CouplingFamily::Homogeneous { beta: 1.0 / 3.0 }, 3).unwrap();
        assert_eq!(classify_regime(&j).tag, Regime::Critical);
    }

    #[test]
    fn regime_hostile_weak() {
        // I - J has eigenvalues 0.2 and 0.8 (x2)
        let j = build_coupling(CouplingFamily::Hostile { j0: 0.6, jbar: 0.2 }, 3).unwrap();
        assert_eq!(classify_regime(&j).tag, Regime::Weak);
    }

    #[test]
    fn regime_uniform_strong() {
        let j = build_coupling(CouplingFamily::Uniform { j0: 1.2, jbar: 0.1 }, 2).unwrap();
        assert_eq!(classify_regime(&j).tag, Regime::Strong);
    }

    #[test]
    fn regime_switches_at_one_over_m() {
        for m in 1..=6usize {
            let crit = 1.0 / m as f64;
            for &delta in &[1e-6, 1e-3, 0.05] {
                let below =
                    build_coupling(CouplingFamily::Homogeneous { beta: crit - delta }, m).unwrap();
                assert_eq!(classify_regime(&below).tag, Regime::Weak, "m={m} delta={delta}");
                let above =
                    build_coupling(CouplingFamily::Homogeneous { beta: crit + delta }, m).unwrap();
                assert_eq!(classify_regime(&above).tag, Regime::Strong, "m={m} delta={delta}");
            }
        }
    }

    #[test]
    fn regime_agrees_with_explicit_inequalities() {
        // uniform family: weak iff j0 < 1 and jbar < min(j0, (1-j0)/(M-1))
        for m in 2..=5usize {
            for i in 1..10 {
                for k in 0..10 {
                    let j0 = i as f64 * 0.15;
                    let jbar = k as f64 * 0.05;
                    if !(j0 > jbar) {
                        continue;
                    }
                    // eigenvalues of I - J; skip grid points on the
                    // critical boundary, where the tolerance band rules
                    let e1 = 1.0 - j0 + jbar;
                    let e2 = 1.0 - j0 - (m as f64 - 1.0) * jbar;
                    if e1.abs() < 1e-8 || e2.abs() < 1e-8 {
                        continue;
                    }
                    let expect_weak = e1 > 0.0 && e2 > 0.0;
                    let j = build_coupling(CouplingFamily::Uniform { j0, jbar }, m).unwrap();
                    let tag = classify_regime(&j).tag;
                    if expect_weak {
                        assert_eq!(tag, Regime::Weak, "j0={j0} jbar={jbar} m={m}");
                    } else {
                        assert_ne!(tag, Regime::Weak, "j0={j0} jbar={jbar} m={m}");
                    }
                }
            }
        }
        // hostile family: weak iff j0 < 1 and jbar < min(j0, 1 - j0)
        for m in 2..=5usize {
            for i in 1..10 {
                for k in 0..10 {
                    let j0 = i as f64 * 0.12;
                    let jbar = k as f64 * 0.03;
                    if !(jbar < j0 / (m as f64 - 1.0)) {
                        continue;
                    }
                    let e1 = 1.0 - j0 - jbar;
                    let e2 = 1.0 - j0 + (m as f64 - 1.0) * jbar;
                    if e1.abs() < 1e-8 || e2.abs() < 1e-8 {
                        continue;
                    }
                    let expect_weak = e1 > 0.0 && e2 > 0.0;
                    let j = build_coupling(CouplingFamily::Hostile { j0, jbar }, m).unwrap();
                    let tag = classify_regime(&j).tag;
                    if expect_weak {
                        assert_eq!(tag, Regime::Weak, "hostile j0={j0} jbar={jbar} m={m}");
                    } else {
                        assert_ne!(tag, Regime::Weak, "hostile j0={j0} jbar={jbar} m={m}");
                    }
                }
            }
        }
    }

    #[test]
    fn group_sizes_validation() {
        assert!(GroupSizes::new(vec![0.5, 0.5], None).is_ok());
        let err = GroupSizes::new(vec![0.7, 0.4], None).unwrap_err();
        assert!(err.to_string().contains("sum"), "{err}");
        // off by less than 1e-9: renormalised
        let g = GroupSizes::new(vec![0.25, 0.25, 0.5 + 4e-10], None).unwrap();
        assert_abs_diff_eq!(g.alphas().iter().sum::<f64>(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn spec_file_round_trip() {
        let text = r#"{
            "M": 2,
            "alphas": [0.5, 0.5],
            "finite_sizes": [9, 9],
            "coupling": {"family": "homogeneous", "beta": 0.2}
        }"#;
        let model = SpecFile::from_json(text).unwrap().into_model().unwrap();
        assert_eq!(model.m(), 2);
        assert_eq!(model.sizes.finite_sizes(), Some(&[9u64, 9][..]));
        assert_eq!(model.coupling.entries().get(0, 1), 0.2);
    }

    #[test]
    fn spec_file_block() {
        let text = r#"{
            "M": 3,
            "alphas": [0.4, 0.3, 0.3],
            "coupling": {"family": "block", "blocks": [
                {"M": 1, "family": "homogeneous", "beta": 0.2},
                {"M": 2, "family": "uniform", "j0": 1.2, "jbar": 0.1}
            ]}
        }"#;
        let model = SpecFile::from_json(text).unwrap().into_model().unwrap();
        let rc = classify_regime(&model.coupling);
        assert_eq!(rc.tag, Regime::Strong);
        let per = rc.per_cluster.unwrap();
        assert_eq!(per[0].tag, Regime::Weak);
        assert_eq!(per[1].tag, Regime::Strong);
        // off-block entries are zero
        assert_eq!(model.coupling.entries().get(0, 2), 0.0);
    }

    #[test]
    fn spec_file_rejects_unknown_fields() {
        let text = r#"{"M": 1, "alphas": [1.0], "quota": 0.6,
                       "coupling": {"family": "homogeneous", "beta": 0.0}}"#;
        assert!(SpecFile::from_json(text).is_err());
    }
}
