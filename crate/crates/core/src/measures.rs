//! Photon-number correlation measures on joint distributions.
//!
//! All measures normalize the input by its total mass first, so truncated
//! distributions (entries summing to `1 - leakage`) are handled as the
//! conditional distribution on the represented photon numbers.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::distribution::{JointDistribution, Provenance};
use crate::error::{Error, Result};

/// Slack above `g² = 2` still treated as a single thermal mode.
pub const G2_UPPER_SLACK: f64 = 1e-9;

/// The three correlation measures of one joint distribution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    /// Pearson correlation of `n_A` and `n_B`, in `[-1, 1]`.
    pub corr: f64,
    /// Schmidt number of the probability matrix, `>= 1`.
    pub schmidt_k: f64,
    /// Mutual information in base 10, `>= 0`.
    pub mutual_information: f64,
    /// Set when a marginal has zero variance and `corr` was reported as 0.
    pub degenerate_marginal: bool,
}

/// Post-selection applied before analysis.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditioningSpec {
    /// Drop `P(0, 0)`: condition on at least one detected photon.
    #[serde(default)]
    pub remove_vacuum: bool,
    /// Drop outcomes with more photons than this in either arm.
    #[serde(default)]
    pub max_photons_per_mode: Option<usize>,
}

impl ConditioningSpec {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn vacuum_removed() -> Self {
        ConditioningSpec {
            remove_vacuum: true,
            max_photons_per_mode: None,
        }
    }

    pub fn truncated(max_photons_per_mode: usize) -> Self {
        ConditioningSpec {
            remove_vacuum: false,
            max_photons_per_mode: Some(max_photons_per_mode),
        }
    }

    /// Two-photon subspace with vacuum removed.
    pub fn two_photon_no_vacuum() -> Self {
        ConditioningSpec {
            remove_vacuum: true,
            max_photons_per_mode: Some(2),
        }
    }

    pub fn is_identity(&self) -> bool {
        !self.remove_vacuum && self.max_photons_per_mode.is_none()
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_photons_per_mode == Some(0) {
            return Err(Error::invalid("max_photons_per_mode must be at least 1"));
        }
        Ok(())
    }

    /// Short label used in tables, e.g. `full`, `novac`, `le2`, `le2-novac`.
    pub fn label(&self) -> String {
        match (self.max_photons_per_mode, self.remove_vacuum) {
            (None, false) => "full".to_string(),
            (None, true) => "novac".to_string(),
            (Some(m), false) => format!("le{m}"),
            (Some(m), true) => format!("le{m}-novac"),
        }
    }
}

fn normalized_matrix(dist: &JointDistribution) -> (usize, usize, Vec<f64>) {
    let total = dist.total();
    let scale = if total > 0.0 { 1.0 / total } else { 0.0 };
    (
        dist.rows(),
        dist.cols(),
        dist.as_slice().iter().map(|p| p * scale).collect(),
    )
}

/// Normalized marginals `(P(n_A), P(n_B))`.
pub fn marginals(dist: &JointDistribution) -> (Vec<f64>, Vec<f64>) {
    let (rows, cols, p) = normalized_matrix(dist);
    let mut pa = vec![0.0; rows];
    let mut pb = vec![0.0; cols];
    for a in 0..rows {
        for b in 0..cols {
            let v = p[a * cols + b];
            pa[a] += v;
            pb[b] += v;
        }
    }
    (pa, pb)
}

fn mean(p: &[f64]) -> f64 {
    p.iter().enumerate().map(|(n, &w)| n as f64 * w).sum()
}

/// Mean photon numbers `(⟨n_A⟩, ⟨n_B⟩)`.
pub fn mean_photon_numbers(dist: &JointDistribution) -> (f64, f64) {
    let (pa, pb) = marginals(dist);
    (mean(&pa), mean(&pb))
}

/// Correlation coefficient with its degeneracy flag.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Correlation {
    pub value: f64,
    pub degenerate: bool,
}

/// `cov(n_A, n_B) / (σ_A σ_B)`. A marginal with zero variance gives `0` with
/// `degenerate` set.
pub fn correlation_coefficient(dist: &JointDistribution) -> Correlation {
    let (rows, cols, p) = normalized_matrix(dist);
    let (pa, pb) = marginals(dist);
    let (ma, mb) = (mean(&pa), mean(&pb));
    let var_a: f64 = pa.iter().enumerate().map(|(n, &w)| w * (n as f64 - ma).powi(2)).sum();
    let var_b: f64 = pb.iter().enumerate().map(|(n, &w)| w * (n as f64 - mb).powi(2)).sum();
    if var_a <= 0.0 || var_b <= 0.0 {
        return Correlation {
            value: 0.0,
            degenerate: true,
        };
    }
    let mut cov = 0.0;
    for a in 0..rows {
        let da = a as f64 - ma;
        for b in 0..cols {
            cov += p[a * cols + b] * da * (b as f64 - mb);
        }
    }
    Correlation {
        value: (cov / (var_a * var_b).sqrt()).clamp(-1.0, 1.0),
        degenerate: false,
    }
}

/// Which matrix the Schmidt decomposition acts on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchmidtInput {
    /// The probability matrix `P(n_A, n_B)` itself.
    #[default]
    Intensities,
    /// The entrywise square root `√P`.
    Amplitudes,
}

/// `K = 1 / Σ λ_i²` with `λ_i = s_i / Σ_j s_j` the normalized singular values
/// of `P`.
pub fn schmidt_number(dist: &JointDistribution) -> f64 {
    schmidt_number_of(dist, SchmidtInput::Intensities)
}

pub fn schmidt_number_of(dist: &JointDistribution, input: SchmidtInput) -> f64 {
    let (rows, cols, p) = normalized_matrix(dist);
    let m = DMatrix::from_row_slice(rows, cols, &p);
    let m = match input {
        SchmidtInput::Intensities => m,
        SchmidtInput::Amplitudes => m.map(f64::sqrt),
    };
    let s = m.singular_values();
    let sum: f64 = s.iter().sum();
    if sum <= 0.0 {
        return 1.0;
    }
    let purity: f64 = s.iter().map(|v| (v / sum).powi(2)).sum();
    1.0 / purity
}

/// `I = Σ P log₁₀(P / (P_A P_B))`, with `0 log 0 = 0`; tiny negative round-off
/// is clamped to zero.
pub fn mutual_information(dist: &JointDistribution) -> f64 {
    let (rows, cols, p) = normalized_matrix(dist);
    let (pa, pb) = marginals(dist);
    let mut mi = 0.0;
    for a in 0..rows {
        for b in 0..cols {
            let v = p[a * cols + b];
            if v > 0.0 {
                mi += v * (v / (pa[a] * pb[b])).log10();
            }
        }
    }
    mi.max(0.0)
}

/// Base-10 Shannon entropy of a (possibly unnormalized) distribution.
pub fn shannon_entropy10(p: &[f64]) -> f64 {
    let total: f64 = p.iter().sum();
    -p.iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| {
            let q = v / total;
            q * q.log10()
        })
        .sum::<f64>()
}

/// `g²(0) = ⟨n(n−1)⟩ / ⟨n⟩²` of a photon-number distribution.
pub fn g2_zero(marginal: &[f64]) -> Result<f64> {
    let total: f64 = marginal.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroMean);
    }
    let mean: f64 = marginal.iter().enumerate().map(|(n, &w)| n as f64 * w).sum::<f64>() / total;
    if !(mean > 0.0) {
        return Err(Error::ZeroMean);
    }
    let fact2: f64 = marginal
        .iter()
        .enumerate()
        .map(|(n, &w)| (n as f64) * (n as f64 - 1.0) * w)
        .sum::<f64>()
        / total;
    Ok(fact2 / (mean * mean))
}

/// `K_eff = 1 / (g² − 1)` for a mixture of equally populated thermal modes.
pub fn effective_mode_number(g2: f64) -> Result<f64> {
    if !(g2 > 1.0 && g2 <= 2.0 + G2_UPPER_SLACK) {
        return Err(Error::OutOfModel(g2));
    }
    Ok(1.0 / (g2.min(2.0) - 1.0))
}

/// Applies per-mode truncation and/or vacuum removal, then renormalizes.
/// Truncation shrinks the grid to `max_photons_per_mode + 1` per side.
pub fn condition_distribution(dist: &JointDistribution, spec: &ConditioningSpec) -> Result<JointDistribution> {
    spec.validate()?;
    if spec.is_identity() {
        return Ok(dist.clone());
    }
    let (rows, cols) = match spec.max_photons_per_mode {
        Some(m) => ((m + 1).min(dist.rows()), (m + 1).min(dist.cols())),
        None => (dist.rows(), dist.cols()),
    };
    let mut out = dist.resized(rows, cols);
    let mut probs = out.as_slice().to_vec();
    if spec.remove_vacuum {
        probs[0] = 0.0;
    }
    let total: f64 = probs.iter().sum();
    if !(total > 0.0) {
        return Err(Error::AllMassRemoved);
    }
    probs.iter_mut().for_each(|p| *p /= total);
    out = JointDistribution::from_parts_unchecked(rows, cols, probs, Provenance::Conditioned, 0.0);
    Ok(out)
}

/// Computes all three measures on the same distribution.
pub fn correlation_report(dist: &JointDistribution) -> CorrelationReport {
    let corr = correlation_coefficient(dist);
    CorrelationReport {
        corr: corr.value,
        schmidt_k: schmidt_number(dist),
        mutual_information: mutual_information(dist),
        degenerate_marginal: corr.degenerate,
    }
}
