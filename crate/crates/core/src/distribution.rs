//! Joint photon-number (or click-number) distributions over two detectors.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `1 - leakage - sum(P)` accepted by [`JointDistribution::validate`].
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Where a distribution came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// Closed-form reference distribution.
    Reference,
    /// Ideal (lossless) simulation output.
    Ideal,
    /// After binomial loss.
    Lossy,
    /// Click-number distribution of a time-multiplexed detector pair.
    Clicks,
    /// Empirical frequencies from a click histogram.
    Sampled,
    /// Photon-number estimate recovered from clicks.
    Deconvolved,
    /// Conditioned or truncated for analysis.
    Conditioned,
    /// Read from an external file.
    External,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Provenance::Reference => "reference",
            Provenance::Ideal => "ideal",
            Provenance::Lossy => "lossy",
            Provenance::Clicks => "clicks",
            Provenance::Sampled => "sampled",
            Provenance::Deconvolved => "deconvolved",
            Provenance::Conditioned => "conditioned",
            Provenance::External => "external",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "reference" => Provenance::Reference,
            "ideal" => Provenance::Ideal,
            "lossy" => Provenance::Lossy,
            "clicks" => Provenance::Clicks,
            "sampled" => Provenance::Sampled,
            "deconvolved" => Provenance::Deconvolved,
            "conditioned" => Provenance::Conditioned,
            "external" => Provenance::External,
            other => return Err(Error::invalid(format!("unknown provenance '{other}'"))),
        })
    }
}

/// Matrix `P(n_A, n_B)` with `n_A` indexing rows.
///
/// Truncated simulations carry the probability mass that fell outside the
/// simulated photon-number range in `leakage`; the entries then sum to
/// `1 - leakage`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    rows: usize,
    cols: usize,
    probabilities: Vec<f64>,
    provenance: Provenance,
    #[serde(default)]
    leakage: f64,
}

impl JointDistribution {
    /// Builds a distribution from row-major entries. Entries must be finite
    /// and nonnegative; normalization is not checked here (see
    /// [`validate`](Self::validate)).
    pub fn new(rows: usize, cols: usize, probabilities: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("distribution must have at least one row and column"));
        }
        if probabilities.len() != rows * cols {
            return Err(Error::invalid(format!(
                "expected {} entries for a {rows}x{cols} distribution, got {}",
                rows * cols,
                probabilities.len()
            )));
        }
        if let Some((i, p)) = probabilities
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0)
        {
            return Err(Error::invalid(format!(
                "entry ({}, {}) = {p} is not a nonnegative probability",
                i / cols,
                i % cols
            )));
        }
        Ok(JointDistribution {
            rows,
            cols,
            probabilities,
            provenance,
            leakage: 0.0,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], provenance: Provenance) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::invalid("ragged distribution rows"));
        }
        Self::new(rows.len(), cols, rows.concat(), provenance)
    }

    /// `P(n_A, n_B) = f(n_A, n_B)` over the given shape.
    pub fn from_fn(rows: usize, cols: usize, provenance: Provenance, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let probabilities = (0..rows)
            .flat_map(|a| (0..cols).map(move |b| (a, b)))
            .map(|(a, b)| f(a, b))
            .collect();
        Self::new(rows, cols, probabilities, provenance)
    }

    /// Outer product `p_A ⊗ p_B`.
    pub fn outer(p_a: &[f64], p_b: &[f64], provenance: Provenance) -> Result<Self> {
        Self::from_fn(p_a.len(), p_b.len(), provenance, |a, b| p_a[a] * p_b[b])
    }

    /// All mass on `(n_a, n_b)`.
    pub fn point_mass(rows: usize, cols: usize, n_a: usize, n_b: usize, provenance: Provenance) -> Result<Self> {
        if n_a >= rows || n_b >= cols {
            return Err(Error::invalid(format!(
                "point ({n_a}, {n_b}) outside a {rows}x{cols} grid"
            )));
        }
        Self::from_fn(
            rows,
            cols,
            provenance,
            |a, b| if a == n_a && b == n_b { 1.0 } else { 0.0 },
        )
    }

    pub(crate) fn from_parts_unchecked(
        rows: usize,
        cols: usize,
        probabilities: Vec<f64>,
        provenance: Provenance,
        leakage: f64,
    ) -> Self {
        debug_assert_eq!(probabilities.len(), rows * cols);
        JointDistribution {
            rows,
            cols,
            probabilities,
            provenance,
            leakage,
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Largest representable `n_A`.
    pub fn max_n_a(&self) -> usize {
        self.rows - 1
    }

    /// Largest representable `n_B`.
    pub fn max_n_b(&self) -> usize {
        self.cols - 1
    }

    /// `P(n_a, n_b)`, zero outside the stored grid.
    #[inline]
    pub fn get(&self, n_a: usize, n_b: usize) -> f64 {
        if n_a < self.rows && n_b < self.cols {
            self.probabilities[n_a * self.cols + n_b]
        } else {
            0.0
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn row(&self, n_a: usize) -> &[f64] {
        &self.probabilities[n_a * self.cols..(n_a + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|a| self.row(a).to_vec()).collect()
    }

    /// Iterates `(n_a, n_b, p)` in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let cols = self.cols;
        self.probabilities
            .iter()
            .enumerate()
            .map(move |(i, &p)| (i / cols, i % cols, p))
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    /// Probability mass lost to truncation upstream of this distribution.
    pub fn leakage(&self) -> f64 {
        self.leakage
    }

    pub fn with_leakage(mut self, leakage: f64) -> Self {
        self.leakage = leakage;
        self
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    /// Copy scaled to unit total. Fails on an all-zero distribution.
    pub fn normalized(&self) -> Result<Self> {
        let total = self.total();
        if !(total > 0.0) {
            return Err(Error::invalid("cannot normalize a distribution with zero mass"));
        }
        let mut out = self.clone();
        out.probabilities.iter_mut().for_each(|p| *p /= total);
        out.leakage = 0.0;
        Ok(out)
    }

    /// Checks nonnegativity and that the entries sum to `1 - leakage`.
    pub fn validate(&self) -> Result<()> {
        if self.probabilities.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::invalid("distribution has a negative or non-finite entry"));
        }
        let expected = 1.0 - self.leakage;
        let total = self.total();
        if (total - expected).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::invalid(format!(
                "distribution sums to {total}, expected {expected} (leakage {:.3e})",
                self.leakage
            )));
        }
        Ok(())
    }

    /// Largest absolute entrywise difference, treating entries outside either
    /// grid as zero.
    pub fn max_abs_diff(&self, other: &JointDistribution) -> f64 {
        let rows = self.rows.max(other.rows);
        let cols = self.cols.max(other.cols);
        let mut worst = 0.0_f64;
        for a in 0..rows {
            for b in 0..cols {
                worst = worst.max((self.get(a, b) - other.get(a, b)).abs());
            }
        }
        worst
    }

    /// Copy restricted (or zero-padded) to the given shape.
    pub fn resized(&self, rows: usize, cols: usize) -> Self {
        let mut probabilities = vec![0.0; rows * cols];
        for a in 0..rows.min(self.rows) {
            for b in 0..cols.min(self.cols) {
                probabilities[a * cols + b] = self.get(a, b);
            }
        }
        JointDistribution {
            rows,
            cols,
            probabilities,
            provenance: self.provenance,
            leakage: self.leakage,
        }
    }
}
