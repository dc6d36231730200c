//! Truncated multimode Fock space.
//!
//! A [`FockBasis`] enumerates every occupation tuple `(n_0, ..., n_{m-1})`
//! with `sum(n_i) <= total_cutoff`, ordered first by total photon number and
//! then lexicographically (ascending) within each total. Because linear optics
//! conserves the total photon number, a beam splitter acts block-diagonally on
//! this basis and never introduces truncation error of its own.
//!
//! # Beam-splitter convention
//!
//! `B_ij(θ) = exp(θ (a_i a_j† − a_i† a_j))` transforms creation operators as
//!
//! ```text
//! B a_i† B† =  cos θ a_i† + sin θ a_j†
//! B a_j† B† = −sin θ a_i† + cos θ a_j†
//! ```
//!
//! so all matrix elements are real. Amplitude signs in tests refer to this
//! convention; probabilities do not depend on it.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::distribution::{JointDistribution, Provenance};
use crate::error::{Error, Result};

/// Default total-photon-number cutoff.
pub const DEFAULT_TOTAL_CUTOFF: usize = 32;

/// Leakage above which constructors flag the state as under-resolved.
pub const LEAKAGE_WARNING_THRESHOLD: f64 = 1e-10;

/// Hard limit on basis size to keep memory bounded.
pub const MAX_BASIS_STATES: usize = 20_000_000;

/// Largest supported total cutoff (occupations are stored as `u16`, and the
/// sector recurrences are only validated this far).
pub const MAX_TOTAL_CUTOFF: usize = 400;

/// Squeezing `ξ = r e^{iφ}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqueezeParams {
    r: f64,
    #[serde(default)]
    phi: f64,
}

impl SqueezeParams {
    pub fn new(r: f64, phi: f64) -> Result<Self> {
        if !(r.is_finite() && r >= 0.0) {
            return Err(Error::invalid(format!(
                "squeezing parameter r = {r} must be finite and >= 0"
            )));
        }
        if !phi.is_finite() {
            return Err(Error::invalid("squeezing angle must be finite"));
        }
        Ok(SqueezeParams { r, phi })
    }

    /// Real squeezing, `φ = 0`.
    pub fn real(r: f64) -> Result<Self> {
        Self::new(r, 0.0)
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Mean photon number per mode of the two-mode squeezed vacuum, `sinh² r`.
    pub fn mean_photon_per_mode(&self) -> f64 {
        self.r.sinh().powi(2)
    }
}

/// A two-mode mixing operation `B_ij(θ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamSplitterSpec {
    mode_i: usize,
    mode_j: usize,
    theta: f64,
}

impl BeamSplitterSpec {
    pub fn new(mode_i: usize, mode_j: usize, theta: f64) -> Result<Self> {
        if mode_i == mode_j {
            return Err(Error::SameMode(mode_i));
        }
        // allow a few ulps of slack so that arccos-derived angles at the ends pass
        let slack = 1e-12;
        if !(theta.is_finite() && theta >= -slack && theta <= FRAC_PI_2 + slack) {
            return Err(Error::invalid(format!("mixing angle {theta} outside [0, π/2]")));
        }
        Ok(BeamSplitterSpec {
            mode_i,
            mode_j,
            theta: theta.clamp(0.0, FRAC_PI_2),
        })
    }

    /// Balanced splitter, `θ = π/4`.
    pub fn balanced(mode_i: usize, mode_j: usize) -> Result<Self> {
        Self::new(mode_i, mode_j, std::f64::consts::FRAC_PI_4)
    }

    pub fn modes(&self) -> (usize, usize) {
        (self.mode_i, self.mode_j)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

/// Occupation-number basis of `num_modes` modes truncated at a total cutoff.
#[derive(Debug)]
pub struct FockBasis {
    num_modes: usize,
    total_cutoff: usize,
    occupations: Vec<u16>,
    sector_offsets: Vec<usize>,
    // below[k][t][v]: number of k-mode tuples of total t whose first entry is < v
    below: Vec<Vec<Vec<usize>>>,
}

/// Number of `k`-mode occupation tuples with total exactly `t`.
fn tuples_with_total(k: usize, t: usize) -> usize {
    if k == 0 {
        return usize::from(t == 0);
    }
    binomial_usize(t + k - 1, k - 1)
}

fn binomial_usize(n: usize, k: usize) -> usize {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    usize::try_from(acc).unwrap_or(usize::MAX)
}

impl FockBasis {
    pub fn new(num_modes: usize, total_cutoff: usize) -> Result<Self> {
        if num_modes == 0 {
            return Err(Error::invalid("need at least one mode"));
        }
        if total_cutoff > MAX_TOTAL_CUTOFF {
            return Err(Error::invalid(format!(
                "total cutoff {total_cutoff} exceeds the supported maximum {MAX_TOTAL_CUTOFF}"
            )));
        }
        let states = binomial_usize(total_cutoff + num_modes, num_modes);
        if states > MAX_BASIS_STATES {
            return Err(Error::BasisTooLarge {
                modes: num_modes,
                cutoff: total_cutoff,
                states,
                limit: MAX_BASIS_STATES,
            });
        }

        let mut below = vec![Vec::new(); num_modes + 1];
        for (k, table) in below.iter_mut().enumerate().skip(1) {
            *table = (0..=total_cutoff)
                .map(|t| {
                    let mut acc = 0;
                    let mut row = Vec::with_capacity(t + 2);
                    row.push(0);
                    for u in 0..=t {
                        acc += tuples_with_total(k - 1, t - u);
                        row.push(acc);
                    }
                    row
                })
                .collect();
        }

        let mut occupations = Vec::with_capacity(states * num_modes);
        let mut sector_offsets = Vec::with_capacity(total_cutoff + 2);
        let mut scratch = vec![0u16; num_modes];
        for total in 0..=total_cutoff {
            sector_offsets.push(occupations.len() / num_modes);
            push_sector(&mut occupations, &mut scratch, 0, total);
        }
        sector_offsets.push(occupations.len() / num_modes);
        debug_assert_eq!(occupations.len(), states * num_modes);

        Ok(FockBasis {
            num_modes,
            total_cutoff,
            occupations,
            sector_offsets,
            below,
        })
    }

    pub fn num_modes(&self) -> usize {
        self.num_modes
    }

    pub fn total_cutoff(&self) -> usize {
        self.total_cutoff
    }

    pub fn len(&self) -> usize {
        self.occupations.len() / self.num_modes
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Occupation tuple of basis state `index`.
    #[inline]
    pub fn occupation(&self, index: usize) -> &[u16] {
        &self.occupations[index * self.num_modes..(index + 1) * self.num_modes]
    }

    /// Basis indices of all states with total photon number `total`.
    pub fn sector(&self, total: usize) -> std::ops::Range<usize> {
        self.sector_offsets[total]..self.sector_offsets[total + 1]
    }

    /// Position of `occupation` in the basis, or `None` if it is not
    /// representable.
    pub fn index_of(&self, occupation: &[u16]) -> Option<usize> {
        if occupation.len() != self.num_modes {
            return None;
        }
        let total: usize = occupation.iter().map(|&n| n as usize).sum();
        if total > self.total_cutoff {
            return None;
        }
        Some(self.index_unchecked(occupation, total))
    }

    #[inline]
    fn index_unchecked(&self, occupation: &[u16], total: usize) -> usize {
        let mut rank = self.sector_offsets[total];
        let mut remaining = total;
        let m = self.num_modes;
        for (p, &n) in occupation[..m - 1].iter().enumerate() {
            let n = n as usize;
            rank += self.below[m - p][remaining][n];
            remaining -= n;
        }
        rank
    }
}

fn push_sector(out: &mut Vec<u16>, scratch: &mut [u16], pos: usize, remaining: usize) {
    if pos + 1 == scratch.len() {
        scratch[pos] = remaining as u16;
        out.extend_from_slice(scratch);
        return;
    }
    for n in 0..=remaining {
        scratch[pos] = n as u16;
        push_sector(out, scratch, pos + 1, remaining - n);
    }
}

/// Pure state in a truncated Fock basis.
#[derive(Clone, Debug)]
pub struct FockVector {
    basis: Arc<FockBasis>,
    amplitudes: Vec<Complex64>,
    leakage: f64,
}

impl FockVector {
    /// All-modes vacuum.
    pub fn vacuum(basis: Arc<FockBasis>) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); basis.len()];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        FockVector {
            basis,
            amplitudes,
            leakage: 0.0,
        }
    }

    /// Builds a state from `(occupation, amplitude)` pairs. Occupations beyond
    /// the cutoff are rejected.
    pub fn from_terms<'a>(
        basis: Arc<FockBasis>,
        terms: impl IntoIterator<Item = (&'a [u16], Complex64)>,
    ) -> Result<Self> {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); basis.len()];
        for (occ, amp) in terms {
            let idx = basis
                .index_of(occ)
                .ok_or_else(|| Error::invalid(format!("occupation {occ:?} not in the basis")))?;
            amplitudes[idx] += amp;
        }
        Ok(FockVector {
            basis,
            amplitudes,
            leakage: 0.0,
        })
    }

    /// Fock state `|occupation⟩`.
    pub fn number_state(basis: Arc<FockBasis>, occupation: &[u16]) -> Result<Self> {
        Self::from_terms(basis, [(occupation, Complex64::new(1.0, 0.0))])
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn num_modes(&self) -> usize {
        self.basis.num_modes
    }

    pub fn total_cutoff(&self) -> usize {
        self.basis.total_cutoff
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// `⟨occupation|ψ⟩`; zero for tuples outside the basis.
    pub fn amplitude(&self, occupation: &[u16]) -> Complex64 {
        self.basis
            .index_of(occupation)
            .map_or(Complex64::new(0.0, 0.0), |i| self.amplitudes[i])
    }

    /// Iterates `(occupation, amplitude)` over every basis state.
    pub fn iter(&self) -> impl Iterator<Item = (&[u16], Complex64)> + '_ {
        self.amplitudes
            .iter()
            .enumerate()
            .map(move |(i, &a)| (self.basis.occupation(i), a))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Probability mass of the untruncated state that lies beyond the cutoff.
    pub fn leakage(&self) -> f64 {
        self.leakage
    }

    /// Whether truncation leakage exceeds [`LEAKAGE_WARNING_THRESHOLD`].
    pub fn truncation_warning(&self) -> bool {
        self.leakage > LEAKAGE_WARNING_THRESHOLD
    }

    /// Mass per total-photon-number sector.
    pub fn sector_weights(&self) -> Vec<f64> {
        (0..=self.basis.total_cutoff)
            .map(|s| self.amplitudes[self.basis.sector(s)].iter().map(|a| a.norm_sqr()).sum())
            .collect()
    }
}

fn check_mode(mode: usize, num_modes: usize) -> Result<()> {
    if mode >= num_modes {
        Err(Error::ModeOutOfRange { mode, num_modes })
    } else {
        Ok(())
    }
}

fn check_squeeze_cutoff(total_cutoff: usize) -> Result<()> {
    if total_cutoff < 2 || !total_cutoff.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "total cutoff {total_cutoff} must be even and at least 2"
        )));
    }
    Ok(())
}

/// `|ψ⟩ = S_ij(ξ)|0⟩ = Σ_n c_n |n⟩_i |n⟩_j` with
/// `c_n = (−1)^n e^{inφ} tanh^n r / cosh r`, built from the closed form and
/// truncated at `2n <= total_cutoff`. The discarded tail mass `tanh^{2(M+1)} r`
/// (with `M = total_cutoff / 2`) is recorded as leakage.
pub fn two_mode_squeezed_vacuum(
    params: SqueezeParams,
    mode_i: usize,
    mode_j: usize,
    num_modes: usize,
    total_cutoff: usize,
) -> Result<FockVector> {
    check_squeeze_cutoff(total_cutoff)?;
    check_mode(mode_i, num_modes)?;
    check_mode(mode_j, num_modes)?;
    if mode_i == mode_j {
        return Err(Error::SameMode(mode_i));
    }
    let basis = Arc::new(FockBasis::new(num_modes, total_cutoff)?);
    two_mode_squeezed_vacuum_in(basis, params, mode_i, mode_j)
}

/// As [`two_mode_squeezed_vacuum`] but reusing an existing basis.
pub fn two_mode_squeezed_vacuum_in(
    basis: Arc<FockBasis>,
    params: SqueezeParams,
    mode_i: usize,
    mode_j: usize,
) -> Result<FockVector> {
    let num_modes = basis.num_modes();
    check_squeeze_cutoff(basis.total_cutoff())?;
    check_mode(mode_i, num_modes)?;
    check_mode(mode_j, num_modes)?;
    if mode_i == mode_j {
        return Err(Error::SameMode(mode_i));
    }
    let max_pairs = basis.total_cutoff() / 2;
    let t = params.r.tanh();
    let norm = 1.0 / params.r.cosh();
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); basis.len()];
    let mut occ = vec![0u16; num_modes];
    for n in 0..=max_pairs {
        occ[mode_i] = n as u16;
        occ[mode_j] = n as u16;
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let mag = sign * norm * t.powi(n as i32);
        let amp = Complex64::from_polar(1.0, n as f64 * params.phi) * mag;
        let idx = basis.index_unchecked(&occ, 2 * n);
        amplitudes[idx] = amp;
    }
    let leakage = (t * t).powi(max_pairs as i32 + 1);
    Ok(FockVector {
        basis,
        amplitudes,
        leakage,
    })
}

/// `|ψ⟩ = Σ_n (−1)^n e^{inφ} √((2n)!)/(2^n n!) tanh^n r / √(cosh r) |2n⟩`
/// in `mode_i`, all other modes in vacuum.
pub fn single_mode_squeezed_vacuum(
    params: SqueezeParams,
    mode_i: usize,
    num_modes: usize,
    total_cutoff: usize,
) -> Result<FockVector> {
    check_squeeze_cutoff(total_cutoff)?;
    check_mode(mode_i, num_modes)?;
    let basis = Arc::new(FockBasis::new(num_modes, total_cutoff)?);
    let max_n = total_cutoff / 2;
    let t2 = params.r.tanh().powi(2);
    // P(2n) = (2n)!/(2^{2n} (n!)^2) tanh^{2n} r / cosh r, with
    // P(2n+2)/P(2n) = (2n+1)/(2n+2) tanh² r
    let mut weight = 1.0 / params.r.cosh();
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); basis.len()];
    let mut occ = vec![0u16; num_modes];
    for n in 0..=max_n {
        occ[mode_i] = (2 * n) as u16;
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let amp = Complex64::from_polar(1.0, n as f64 * params.phi) * (sign * weight.sqrt());
        let idx = basis.index_unchecked(&occ, 2 * n);
        amplitudes[idx] = amp;
        weight *= (2 * n + 1) as f64 / (2 * n + 2) as f64 * t2;
    }

    let mut leakage = 0.0;
    let mut n = max_n + 1;
    while weight > 0.0 && weight > leakage * 1e-17 {
        leakage += weight;
        weight *= (2 * n + 1) as f64 / (2 * n + 2) as f64 * t2;
        n += 1;
    }

    Ok(FockVector {
        basis,
        amplitudes,
        leakage,
    })
}

/// Real orthogonal blocks of `B(θ)` for every photon-number sector
/// `s = 0..=max_total` of a mode pair.
///
/// `block(s)[m * (s + 1) + p] = ⟨m, s−m| B(θ) |p, s−p⟩`. Within a sector the
/// generator `G = a_i a_j† − a_i† a_j` is real antisymmetric tridiagonal with
/// off-diagonal `√((k+1)(s−k))`; conjugating by `diag(i^k)` turns it into
/// `i T` with `T` real symmetric, whose spectrum is `{s, s−2, …, −s}`. The
/// block is then `diag(i^k) V e^{iθΛ} Vᵀ diag(i^{−k})`, which stays accurate
/// at photon numbers where the alternating binomial expansion of the
/// transformed creation operators cancels catastrophically.
#[derive(Clone, Debug)]
pub struct BeamSplitterBlocks {
    blocks: Vec<Vec<f64>>,
}

impl BeamSplitterBlocks {
    pub fn new(theta: f64, max_total: usize) -> Self {
        let blocks = (0..=max_total).map(|s| sector_block(theta, s)).collect();
        BeamSplitterBlocks { blocks }
    }

    /// Row-major `(s+1) x (s+1)` block for total photon number `s` in the pair.
    pub fn block(&self, s: usize) -> &[f64] {
        &self.blocks[s]
    }

    pub fn max_total(&self) -> usize {
        self.blocks.len() - 1
    }
}

fn sector_block(theta: f64, s: usize) -> Vec<f64> {
    let dim = s + 1;
    if s == 0 {
        return vec![1.0];
    }
    let t = nalgebra::DMatrix::<f64>::from_fn(dim, dim, |a, b| {
        if b == a + 1 {
            (((a + 1) * (s - a)) as f64).sqrt()
        } else if a == b + 1 {
            (((b + 1) * (s - b)) as f64).sqrt()
        } else {
            0.0
        }
    });
    let eig = nalgebra::SymmetricEigen::new(t);
    let v = &eig.eigenvectors;
    // the spectrum is exactly the even-spaced ladder; snap to it
    let phases: Vec<(f64, f64)> = eig
        .eigenvalues
        .iter()
        .map(|&l| {
            let l = l.round();
            (theta * l).sin_cos()
        })
        .collect();
    let mut out = vec![0.0; dim * dim];
    for m in 0..dim {
        for p in 0..dim {
            let (mut re, mut im) = (0.0, 0.0);
            for (l, &(sin, cos)) in phases.iter().enumerate() {
                let w = v[(m, l)] * v[(p, l)];
                re += w * cos;
                im += w * sin;
            }
            // multiply by i^{m−p}; the result is real
            let d = m as isize - p as isize;
            out[m * dim + p] = match d.rem_euclid(4) {
                0 => re,
                1 => -im,
                2 => -re,
                _ => im,
            };
        }
    }
    out
}

/// `B_ij(θ)|ψ⟩`.
pub fn apply_beam_splitter(state: &FockVector, spec: &BeamSplitterSpec) -> Result<FockVector> {
    let mut out = state.clone();
    apply_beam_splitter_in_place(&mut out, spec)?;
    Ok(out)
}

/// In-place variant of [`apply_beam_splitter`].
pub fn apply_beam_splitter_in_place(state: &mut FockVector, spec: &BeamSplitterSpec) -> Result<()> {
    let basis = Arc::clone(&state.basis);
    let m = basis.num_modes();
    check_mode(spec.mode_i, m)?;
    check_mode(spec.mode_j, m)?;
    if spec.theta == 0.0 {
        return Ok(());
    }
    let (i, j) = (spec.mode_i, spec.mode_j);
    let blocks = BeamSplitterBlocks::new(spec.theta, basis.total_cutoff());
    let zero = Complex64::new(0.0, 0.0);
    let mut occ = vec![0u16; m];
    let mut idx = Vec::with_capacity(basis.total_cutoff() + 1);
    let mut gathered = Vec::with_capacity(basis.total_cutoff() + 1);

    // each block has a unique representative with n_i = 0
    for rep in 0..basis.len() {
        let rep_occ = basis.occupation(rep);
        if rep_occ[i] != 0 || rep_occ[j] == 0 {
            continue;
        }
        let s = rep_occ[j] as usize;
        let total: usize = rep_occ.iter().map(|&n| n as usize).sum();
        occ.copy_from_slice(rep_occ);
        idx.clear();
        gathered.clear();
        for k in 0..=s {
            occ[i] = k as u16;
            occ[j] = (s - k) as u16;
            let x = basis.index_unchecked(&occ, total);
            idx.push(x);
            gathered.push(state.amplitudes[x]);
        }
        if gathered.iter().all(|a| *a == zero) {
            continue;
        }
        let block = blocks.block(s);
        let dim = s + 1;
        for (row, &x) in idx.iter().enumerate() {
            let coeffs = &block[row * dim..(row + 1) * dim];
            let mut acc = zero;
            for (c, a) in coeffs.iter().zip(&gathered) {
                acc += a * *c;
            }
            state.amplitudes[x] = acc;
        }
    }
    Ok(())
}

/// `P(n_A, n_B) = Σ |⟨n|ψ⟩|²` over basis tuples whose photon numbers summed
/// over `group_a` and `group_b` equal `n_A` and `n_B`.
pub fn joint_number_distribution(
    state: &FockVector,
    group_a: &[usize],
    group_b: &[usize],
) -> Result<JointDistribution> {
    let m = state.num_modes();
    let mut seen = vec![false; m];
    for &mode in group_a.iter().chain(group_b) {
        check_mode(mode, m)?;
        if seen[mode] {
            return Err(Error::InvalidGrouping {
                num_modes: m,
                reason: format!("mode {mode} listed twice"),
            });
        }
        seen[mode] = true;
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::InvalidGrouping {
            num_modes: m,
            reason: format!("mode {missing} is not assigned to a detector"),
        });
    }

    let n = state.total_cutoff();
    let dim = n + 1;
    let mut probs = vec![0.0; dim * dim];
    for (occ, amp) in state.iter() {
        let w = amp.norm_sqr();
        if w == 0.0 {
            continue;
        }
        let na: usize = group_a.iter().map(|&k| occ[k] as usize).sum();
        let nb: usize = group_b.iter().map(|&k| occ[k] as usize).sum();
        probs[na * dim + nb] += w;
    }
    Ok(JointDistribution::from_parts_unchecked(
        dim,
        dim,
        probs,
        Provenance::Ideal,
        state.leakage,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_4;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn basis_ranking_matches_enumeration() {
        for &(m, n) in &[(1, 5), (2, 7), (4, 8), (5, 4)] {
            let b = FockBasis::new(m, n).unwrap();
            assert_eq!(b.len(), binomial_usize(n + m, m));
            for i in 0..b.len() {
                assert_eq!(b.index_of(b.occupation(i)), Some(i));
            }
        }
    }

    #[test]
    fn basis_is_graded() {
        let b = FockBasis::new(3, 4).unwrap();
        let totals: Vec<usize> = (0..b.len())
            .map(|i| b.occupation(i).iter().map(|&x| x as usize).sum())
            .collect();
        assert!(totals.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(b.occupation(0), &[0, 0, 0]);
        assert_eq!(b.index_of(&[3, 2, 0]), None);
    }

    #[test]
    fn rejects_bad_cutoffs_and_modes() {
        let p = SqueezeParams::real(0.5).unwrap();
        assert!(two_mode_squeezed_vacuum(p, 0, 1, 2, 7).is_err());
        assert!(two_mode_squeezed_vacuum(p, 0, 1, 2, 0).is_err());
        assert!(matches!(
            two_mode_squeezed_vacuum(p, 0, 2, 2, 8),
            Err(Error::ModeOutOfRange { .. })
        ));
        assert!(matches!(
            two_mode_squeezed_vacuum(p, 1, 1, 2, 8),
            Err(Error::SameMode(1))
        ));
        assert!(SqueezeParams::real(-0.1).is_err());
        assert!(BeamSplitterSpec::new(0, 0, 0.1).is_err());
        assert!(BeamSplitterSpec::new(0, 1, 2.0).is_err());
    }

    #[test]
    fn tmsvs_at_zero_squeezing_is_vacuum() {
        let psi = two_mode_squeezed_vacuum(SqueezeParams::real(0.0).unwrap(), 0, 1, 2, 8).unwrap();
        assert_eq!(psi.amplitude(&[0, 0]), c(1.0));
        assert_abs_diff_eq!(psi.norm_sqr(), 1.0, epsilon = 1e-15);
        assert_eq!(psi.leakage(), 0.0);
    }

    #[test]
    fn tmsvs_closed_form_values() {
        let psi = two_mode_squeezed_vacuum(SqueezeParams::real(0.5).unwrap(), 0, 1, 2, DEFAULT_TOTAL_CUTOFF).unwrap();
        assert_abs_diff_eq!(
            psi.amplitude(&[0, 0]).norm_sqr(),
            0.786_447_732_965_927_4,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            psi.amplitude(&[1, 1]).norm_sqr(),
            0.167_947_696_278_680_74,
            epsilon = 1e-14
        );
        assert_eq!(psi.amplitude(&[1, 0]), c(0.0));
        // sign convention (−1)^n
        assert!(psi.amplitude(&[1, 1]).re < 0.0);
        assert!(psi.leakage() < LEAKAGE_WARNING_THRESHOLD);
        assert!(!psi.truncation_warning());
    }

    #[test]
    fn tmsvs_leakage_equals_missing_norm() {
        let r = 0.9;
        let psi = two_mode_squeezed_vacuum(SqueezeParams::real(r).unwrap(), 0, 1, 3, 10).unwrap();
        assert_abs_diff_eq!(psi.norm_sqr() + psi.leakage(), 1.0, epsilon = 1e-14);
        assert!(psi.truncation_warning());
    }

    #[test]
    fn smsvs_closed_form_values() {
        let psi = single_mode_squeezed_vacuum(SqueezeParams::real(0.5).unwrap(), 0, 1, DEFAULT_TOTAL_CUTOFF).unwrap();
        assert_abs_diff_eq!(psi.amplitude(&[0]).norm_sqr(), 0.886_818_883_970_073_9, epsilon = 1e-14);
        assert_abs_diff_eq!(
            psi.amplitude(&[2]).norm_sqr(),
            0.094_691_091_560_217_73,
            epsilon = 1e-14
        );
        assert_eq!(psi.amplitude(&[1]), c(0.0));
        assert_eq!(psi.amplitude(&[3]), c(0.0));
        assert_abs_diff_eq!(psi.norm_sqr() + psi.leakage(), 1.0, epsilon = 1e-13);
    }

    #[test]
    fn smsvs_zero_squeezing() {
        let psi = single_mode_squeezed_vacuum(SqueezeParams::real(0.0).unwrap(), 1, 2, 4).unwrap();
        assert_eq!(psi.amplitude(&[0, 0]), c(1.0));
        assert_eq!(psi.leakage(), 0.0);
    }

    #[test]
    fn beam_splitter_identity_at_zero_angle() {
        let psi = two_mode_squeezed_vacuum(SqueezeParams::real(0.4).unwrap(), 0, 1, 2, 10).unwrap();
        let out = apply_beam_splitter(&psi, &BeamSplitterSpec::new(0, 1, 0.0).unwrap()).unwrap();
        assert_eq!(out.amplitudes(), psi.amplitudes());
    }

    #[test]
    fn hong_ou_mandel_bunching() {
        let basis = Arc::new(FockBasis::new(2, 4).unwrap());
        let psi = FockVector::number_state(basis, &[1, 1]).unwrap();
        let out = apply_beam_splitter(&psi, &BeamSplitterSpec::balanced(0, 1).unwrap()).unwrap();
        assert_abs_diff_eq!(out.amplitude(&[1, 1]).norm(), 0.0, epsilon = 1e-15);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        // convention-fixed signs: (−|2,0⟩ + |0,2⟩)/√2
        assert_abs_diff_eq!(out.amplitude(&[2, 0]).re, -h, epsilon = 1e-15);
        assert_abs_diff_eq!(out.amplitude(&[0, 2]).re, h, epsilon = 1e-15);
    }

    #[test]
    fn single_photon_transforms_like_creation_operator() {
        let basis = Arc::new(FockBasis::new(2, 2).unwrap());
        let psi = FockVector::number_state(basis, &[1, 0]).unwrap();
        let theta = 0.3;
        let out = apply_beam_splitter(&psi, &BeamSplitterSpec::new(0, 1, theta).unwrap()).unwrap();
        assert_abs_diff_eq!(out.amplitude(&[1, 0]).re, theta.cos(), epsilon = 1e-15);
        assert_abs_diff_eq!(out.amplitude(&[0, 1]).re, theta.sin(), epsilon = 1e-15);
    }

    #[test]
    fn blocks_are_orthogonal_at_large_photon_number() {
        for &theta in &[FRAC_PI_4, 0.123, 1.5] {
            let blocks = BeamSplitterBlocks::new(theta, 120);
            for s in [0, 1, 7, 16, 60, 120] {
                let b = blocks.block(s);
                let d = s + 1;
                let mut worst = 0.0_f64;
                for r1 in 0..d {
                    for r2 in 0..d {
                        let dot: f64 = (0..d).map(|k| b[r1 * d + k] * b[r2 * d + k]).sum();
                        let target = if r1 == r2 { 1.0 } else { 0.0 };
                        worst = worst.max((dot - target).abs());
                    }
                }
                assert!(worst < 1e-12, "θ = {theta}, s = {s}: {worst:e}");
            }
        }
    }

    #[test]
    fn grouping_sums_photons() {
        let basis = Arc::new(FockBasis::new(4, 4).unwrap());
        let psi = FockVector::number_state(basis, &[1, 1, 0, 0]).unwrap();
        let d = joint_number_distribution(&psi, &[0, 1], &[2, 3]).unwrap();
        assert_eq!(d.get(2, 0), 1.0);
        let vac = FockVector::vacuum(Arc::clone(psi.basis()));
        let d = joint_number_distribution(&vac, &[2, 3], &[0, 1]).unwrap();
        assert_eq!(d.get(0, 0), 1.0);
    }

    #[test]
    fn grouping_must_partition_modes() {
        let basis = Arc::new(FockBasis::new(3, 2).unwrap());
        let psi = FockVector::vacuum(basis);
        assert!(matches!(
            joint_number_distribution(&psi, &[0, 1], &[1, 2]),
            Err(Error::InvalidGrouping { .. })
        ));
        assert!(matches!(
            joint_number_distribution(&psi, &[0], &[1]),
            Err(Error::InvalidGrouping { .. })
        ));
        assert!(matches!(
            joint_number_distribution(&psi, &[0, 5], &[1, 2]),
            Err(Error::ModeOutOfRange { .. })
        ));
    }
}
