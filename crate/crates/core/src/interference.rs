//! Four-mode distinguishability model of two-mode squeezed vacuum
//! interfering on a balanced beam splitter.
//!
//! Signal and idler start in modes 0 and 2. A first splitter of angle
//! `θ_dis` moves the part of mode 0 that does not overlap in time with the
//! idler into mode 1; modes 0 and 2 then interfere on a balanced splitter,
//! while the non-interfering part is split evenly into modes 1 and 3.
//! Detector B sees modes {0, 1} and detector A sees modes {2, 3}:
//!
//! ```text
//! |Ψ⟩ = B₁₃(π/4) B₀₂(π/4) B₀₁(θ_dis) S₀₂(r) |0⟩
//! ```

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::distribution::{JointDistribution, Provenance};
use crate::error::{Error, Result};
use crate::fock::{
    apply_beam_splitter_in_place, joint_number_distribution, two_mode_squeezed_vacuum_in, BeamSplitterSpec, FockBasis,
    FockVector, SqueezeParams, DEFAULT_TOTAL_CUTOFF,
};

/// Largest truncation leakage [`simulate_hom`] accepts.
pub const MAX_SIMULATION_LEAKAGE: f64 = 1e-6;

/// Modes summed by detector A.
pub const DETECTOR_A_MODES: [usize; 2] = [2, 3];
/// Modes summed by detector B.
pub const DETECTOR_B_MODES: [usize; 2] = [0, 1];

/// Gaussian pulse envelope described by its intensity FWHM.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseModel {
    duration_fwhm_ps: f64,
}

impl PulseModel {
    pub fn gaussian(duration_fwhm_ps: f64) -> Result<Self> {
        if !(duration_fwhm_ps.is_finite() && duration_fwhm_ps > 0.0) {
            return Err(Error::invalid(format!(
                "pulse FWHM {duration_fwhm_ps} ps must be positive"
            )));
        }
        Ok(PulseModel { duration_fwhm_ps })
    }

    pub fn duration_fwhm_ps(&self) -> f64 {
        self.duration_fwhm_ps
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomConfig {
    pub squeeze: SqueezeParams,
    pub pulse: PulseModel,
    pub delay_ps: f64,
    pub total_cutoff: usize,
}

impl HomConfig {
    pub fn new(squeeze: SqueezeParams, pulse: PulseModel, delay_ps: f64) -> Self {
        HomConfig {
            squeeze,
            pulse,
            delay_ps,
            total_cutoff: DEFAULT_TOTAL_CUTOFF,
        }
    }

    pub fn with_cutoff(mut self, total_cutoff: usize) -> Self {
        self.total_cutoff = total_cutoff;
        self
    }
}

/// Overlap `∫ f(t) f(t − τ) dt` of two unit-norm Gaussian amplitude envelopes
/// whose intensity FWHM is `T`: `2^{−τ²/T²}`.
pub fn overlap_from_delay(delay_ps: f64, pulse: &PulseModel) -> f64 {
    let x = delay_ps / pulse.duration_fwhm_ps;
    (-(x * x) * std::f64::consts::LN_2).exp()
}

/// `θ_dis = arccos(O)`: the interfering amplitude fraction `cos θ_dis` equals
/// the temporal mode overlap.
pub fn theta_dis_from_overlap(overlap: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&overlap) {
        return Err(Error::invalid(format!("overlap {overlap} outside [0, 1]")));
    }
    Ok(overlap.acos())
}

/// `r = arsinh(√(n̄/η))`: squeezing that yields mean photon number `n̄` per arm
/// after transmission `η`.
pub fn squeeze_from_mean_photon(mean_photon: f64, efficiency: f64) -> Result<SqueezeParams> {
    if !(efficiency > 0.0 && efficiency <= 1.0) {
        return Err(Error::invalid(format!("efficiency {efficiency} must lie in (0, 1]")));
    }
    if !(mean_photon.is_finite() && mean_photon >= 0.0) {
        return Err(Error::invalid(format!("mean photon number {mean_photon} must be >= 0")));
    }
    SqueezeParams::real((mean_photon / efficiency).sqrt().asinh())
}

/// Truncation leakage `tanh^{2(N/2 + 1)} r` of a two-mode squeezed vacuum held
/// at total cutoff `N`.
pub fn tmsvs_leakage(r: f64, total_cutoff: usize) -> f64 {
    r.tanh().powi(2).powi((total_cutoff / 2) as i32 + 1)
}

/// Smallest even total cutoff whose two-mode squeezed vacuum leakage is at
/// most `bound`.
pub fn required_cutoff(r: f64, bound: f64) -> usize {
    let t2 = r.tanh().powi(2);
    if t2 == 0.0 {
        return 2;
    }
    // pairs M with t2^(M+1) <= bound
    let m = ((bound.ln() / t2.ln()).ceil() as usize).saturating_sub(1);
    let mut cutoff = (2 * m).max(2);
    while tmsvs_leakage(r, cutoff) > bound {
        cutoff += 2;
    }
    while cutoff > 2 && tmsvs_leakage(r, cutoff - 2) <= bound {
        cutoff -= 2;
    }
    cutoff
}

/// Output state of the four-mode model at a given distinguishability angle.
pub fn hom_state(squeeze: SqueezeParams, theta_dis: f64, total_cutoff: usize) -> Result<FockVector> {
    if total_cutoff < 4 || !total_cutoff.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "total cutoff {total_cutoff} must be even and >= 4"
        )));
    }
    let basis = Arc::new(FockBasis::new(4, total_cutoff)?);
    let mut psi = two_mode_squeezed_vacuum_in(basis, squeeze, 0, 2)?;
    apply_beam_splitter_in_place(&mut psi, &BeamSplitterSpec::new(0, 1, theta_dis)?)?;
    apply_beam_splitter_in_place(&mut psi, &BeamSplitterSpec::balanced(0, 2)?)?;
    apply_beam_splitter_in_place(&mut psi, &BeamSplitterSpec::balanced(1, 3)?)?;
    Ok(psi)
}

/// Ideal `P(n_A, n_B)` at a given distinguishability angle.
pub fn simulate_hom_at_angle(squeeze: SqueezeParams, theta_dis: f64, total_cutoff: usize) -> Result<JointDistribution> {
    let leakage = tmsvs_leakage(squeeze.r(), total_cutoff);
    if leakage > MAX_SIMULATION_LEAKAGE {
        return Err(Error::CutoffTooSmall {
            cutoff: total_cutoff,
            leakage,
            bound: MAX_SIMULATION_LEAKAGE,
            required: required_cutoff(squeeze.r(), MAX_SIMULATION_LEAKAGE),
        });
    }
    let psi = hom_state(squeeze, theta_dis, total_cutoff)?;
    joint_number_distribution(&psi, &DETECTOR_A_MODES, &DETECTOR_B_MODES)
}

/// Ideal joint photon-number distribution at the configured delay.
pub fn simulate_hom(config: &HomConfig) -> Result<JointDistribution> {
    let overlap = overlap_from_delay(config.delay_ps, &config.pulse);
    let theta = theta_dis_from_overlap(overlap)?;
    simulate_hom_at_angle(config.squeeze, theta, config.total_cutoff)
}

/// `P(n, n) = tanh^{2n} r / cosh² r`, zero off the diagonal, for
/// `n <= max_n`.
pub fn tmsvs_reference_distribution(squeeze: SqueezeParams, max_n: usize) -> JointDistribution {
    let t2 = squeeze.r().tanh().powi(2);
    let c2 = squeeze.r().cosh().powi(-2);
    let dim = max_n + 1;
    let mut probs = vec![0.0; dim * dim];
    for n in 0..dim {
        probs[n * dim + n] = c2 * t2.powi(n as i32);
    }
    let leakage = t2.powi(dim as i32);
    JointDistribution::from_parts_unchecked(dim, dim, probs, Provenance::Reference, leakage)
}

/// Photon-number distribution of a single-mode squeezed vacuum up to `max_n`,
/// and the mass beyond it.
pub fn smsvs_photon_distribution(squeeze: SqueezeParams, max_n: usize) -> (Vec<f64>, f64) {
    let t2 = squeeze.r().tanh().powi(2);
    let mut out = vec![0.0; max_n + 1];
    let mut weight = 1.0 / squeeze.r().cosh();
    let mut k = 0;
    while 2 * k <= max_n {
        out[2 * k] = weight;
        weight *= (2 * k + 1) as f64 / (2 * k + 2) as f64 * t2;
        k += 1;
    }
    let mut tail = 0.0;
    while weight > 0.0 && weight > tail * 1e-17 {
        tail += weight;
        weight *= (2 * k + 1) as f64 / (2 * k + 2) as f64 * t2;
        k += 1;
    }
    (out, tail)
}

/// `P_C(n_1) P_D(n_2)` for two identical single-mode squeezed vacua.
pub fn smsvs_product_distribution(squeeze: SqueezeParams, max_n: usize) -> JointDistribution {
    let (p, tail) = smsvs_photon_distribution(squeeze, max_n);
    let dim = max_n + 1;
    let probs = p.iter().flat_map(|&pa| p.iter().map(move |&pb| pa * pb)).collect();
    JointDistribution::from_parts_unchecked(dim, dim, probs, Provenance::Reference, tail * (2.0 - tail))
}

/// Symmetric delay grid of `points` values over `[-half_range, half_range]`.
pub fn delay_grid(half_range_ps: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..points)
            .map(|i| -half_range_ps + 2.0 * half_range_ps * i as f64 / (points - 1) as f64)
            .collect(),
    }
}
