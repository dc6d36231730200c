//! Delay scans: simulate, apply the detector chain, optionally emulate the
//! shot-by-shot acquisition, and evaluate the correlation measures.
//!
//! The analytic path reports measures on the lossy photon-number
//! distribution. The click distribution and its deconvolution are stored
//! alongside; photon numbers above the bin count cannot be recovered from
//! clicks, so the deconvolved analytic distribution differs from the lossy
//! one by the folded high-photon-number mass. In Monte Carlo mode, clicks
//! are sampled, deconvolved, and analysed like experimental data.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detection::{
    apply_loss, clicks_from_photons, deconvolve_clicks, deconvolve_histogram, multinomial, sample_clicks,
    ClickHistogram, DetectionChain,
};
use crate::distribution::JointDistribution;
use crate::error::{Error, Result};
use crate::fock::{SqueezeParams, DEFAULT_TOTAL_CUTOFF};
use crate::interference::{
    delay_grid, overlap_from_delay, required_cutoff, simulate_hom, squeeze_from_mean_photon,
    tmsvs_reference_distribution, HomConfig, PulseModel,
};
use crate::measures::{
    condition_distribution, correlation_report, effective_mode_number, g2_zero, marginals, ConditioningSpec,
    CorrelationReport,
};

/// Version of the structured result layout written by [`crate::io::export_results`].
pub const SCAN_SCHEMA_VERSION: u32 = 1;

/// Leakage targeted when the scan picks its own cutoff.
pub const AUTO_CUTOFF_LEAKAGE: f64 = 1e-12;

pub const DEFAULT_PULSE_FWHM_PS: f64 = 3.0;
pub const DEFAULT_SCAN_HALF_RANGE_PS: f64 = 10.0;
pub const DEFAULT_SCAN_POINTS: usize = 41;
pub const DEFAULT_BOOTSTRAP_RESAMPLES: usize = 200;

/// Measured operating point.
pub const OPERATING_MEAN_PHOTON: f64 = 0.060;
pub const OPERATING_MEAN_PHOTON_SIGMA: f64 = 0.008;
pub const OPERATING_ETA_A: f64 = 0.20;
pub const OPERATING_ETA_B: f64 = 0.14;
pub const OPERATING_BINS: usize = 8;

/// How the squeezing strength is specified.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Source {
    /// Squeezing parameter directly.
    Squeezing { r: f64 },
    /// Back-calculated from a measured mean photon number in arm A and that
    /// arm's total transmission.
    MeanPhoton { mean_photon: f64, efficiency: f64 },
}

impl Source {
    pub fn squeeze(&self) -> Result<SqueezeParams> {
        match *self {
            Source::Squeezing { r } => SqueezeParams::real(r),
            Source::MeanPhoton {
                mean_photon,
                efficiency,
            } => squeeze_from_mean_photon(mean_photon, efficiency),
        }
    }
}

fn default_pulse() -> f64 {
    DEFAULT_PULSE_FWHM_PS
}

fn default_delays() -> Vec<f64> {
    delay_grid(DEFAULT_SCAN_HALF_RANGE_PS, DEFAULT_SCAN_POINTS)
}

fn default_resamples() -> usize {
    DEFAULT_BOOTSTRAP_RESAMPLES
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub source: Source,
    #[serde(default = "default_pulse")]
    pub pulse_fwhm_ps: f64,
    #[serde(default = "default_delays")]
    pub delays_ps: Vec<f64>,
    pub chain: DetectionChain,
    /// Total photon-number cutoff; picked from the squeezing when absent.
    #[serde(default)]
    pub cutoff: Option<usize>,
    /// Shots per delay in Monte Carlo mode.
    #[serde(default)]
    pub shots: Option<u64>,
    #[serde(default)]
    pub seed: u64,
    /// Extra analysis variants; the unconditioned variant is always included.
    #[serde(default)]
    pub conditioning: Vec<ConditioningSpec>,
    /// Standard deviation of the mean photon number; when set together with a
    /// mean-photon source, each analytic measure gets a band from `n̄ ± σ`.
    #[serde(default)]
    pub mean_photon_sigma: Option<f64>,
    #[serde(default = "default_resamples")]
    pub bootstrap_resamples: usize,
}

impl ScanConfig {
    /// Operating point of the experiment over the default delay grid.
    pub fn operating_point() -> Self {
        ScanConfig {
            source: Source::MeanPhoton {
                mean_photon: OPERATING_MEAN_PHOTON,
                efficiency: OPERATING_ETA_A,
            },
            pulse_fwhm_ps: DEFAULT_PULSE_FWHM_PS,
            delays_ps: default_delays(),
            chain: DetectionChain {
                eta_a: OPERATING_ETA_A,
                eta_b: OPERATING_ETA_B,
                bins_a: OPERATING_BINS,
                bins_b: OPERATING_BINS,
            },
            cutoff: None,
            shots: None,
            seed: 0,
            conditioning: Vec::new(),
            mean_photon_sigma: None,
            bootstrap_resamples: DEFAULT_BOOTSTRAP_RESAMPLES,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.delays_ps.is_empty() {
            return Err(Error::invalid("scan needs at least one delay"));
        }
        if let Some(d) = self.delays_ps.iter().find(|d| !d.is_finite()) {
            return Err(Error::invalid(format!("delay {d} is not finite")));
        }
        if self.shots == Some(0) {
            return Err(Error::invalid("shots must be at least 1"));
        }
        if self.shots.is_some() && self.bootstrap_resamples < 2 {
            return Err(Error::invalid("bootstrap needs at least 2 resamples"));
        }
        if let Some(s) = self.mean_photon_sigma {
            if !(s.is_finite() && s >= 0.0) {
                return Err(Error::invalid(format!("mean_photon_sigma {s} must be >= 0")));
            }
        }
        self.chain.validate()?;
        PulseModel::gaussian(self.pulse_fwhm_ps)?;
        self.source.squeeze()?;
        for c in &self.conditioning {
            c.validate()?;
        }
        Ok(())
    }

    /// The analysis variants, unconditioned first, duplicates removed.
    pub fn variants(&self) -> Vec<ConditioningSpec> {
        let mut out = vec![ConditioningSpec::none()];
        for c in &self.conditioning {
            if !out.contains(c) {
                out.push(*c);
            }
        }
        out
    }

    fn resolve_cutoff(&self, squeeze: SqueezeParams) -> usize {
        self.cutoff
            .unwrap_or_else(|| required_cutoff(squeeze.r(), AUTO_CUTOFF_LEAKAGE).max(DEFAULT_TOTAL_CUTOFF))
    }
}

/// Selected photon-number components.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Components {
    pub p11: f64,
    pub p22: f64,
    pub p20: f64,
    pub p02: f64,
}

impl Components {
    pub fn of(dist: &JointDistribution) -> Self {
        Components {
            p11: dist.get(1, 1),
            p22: dist.get(2, 2),
            p20: dist.get(2, 0),
            p02: dist.get(0, 2),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub low: f64,
    pub high: f64,
}

impl Band {
    fn of(values: &[f64]) -> Self {
        Band {
            low: values.iter().copied().fold(f64::INFINITY, f64::min),
            high: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// Analytic band of each measure from the `n̄ ± σ` re-evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureBands {
    pub corr: Band,
    pub schmidt_k: Band,
    pub mutual_information: Band,
}

/// Bootstrap summary of one measure.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
    pub std: f64,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.high - self.low
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureIntervals {
    pub corr: Interval,
    pub schmidt_k: Interval,
    pub mutual_information: Interval,
}

/// Measures of one analysis variant at one delay.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantRecord {
    pub label: String,
    pub conditioning: ConditioningSpec,
    pub analytic: CorrelationReport,
    pub band: Option<MeasureBands>,
    pub sampled: Option<CorrelationReport>,
    pub intervals: Option<MeasureIntervals>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledRecord {
    pub histogram: ClickHistogram,
    pub deconvolved: JointDistribution,
    pub negative_mass: f64,
    pub components: Components,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DelayRecord {
    pub delay_ps: f64,
    pub overlap: f64,
    pub theta_dis: f64,
    pub ideal: JointDistribution,
    pub lossy: JointDistribution,
    pub clicks: JointDistribution,
    pub deconvolved: JointDistribution,
    /// Components of the lossy analytic distribution.
    pub components: Components,
    pub component_bands: Option<[Band; 4]>,
    pub variants: Vec<VariantRecord>,
    pub sampled: Option<SampledRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub schema_version: u32,
    pub squeeze_r: f64,
    pub total_cutoff: usize,
    pub config: Option<ScanConfig>,
    pub notes: Vec<String>,
    pub records: Vec<DelayRecord>,
}

impl ScanResult {
    pub fn empty() -> Self {
        ScanResult {
            schema_version: SCAN_SCHEMA_VERSION,
            squeeze_r: 0.0,
            total_cutoff: 0,
            config: None,
            notes: Vec::new(),
            records: Vec::new(),
        }
    }
}

struct AnalyticPoint {
    ideal: JointDistribution,
    lossy: JointDistribution,
}

fn analytic_point(
    squeeze: SqueezeParams,
    pulse: PulseModel,
    delay_ps: f64,
    chain: &DetectionChain,
    cutoff: usize,
) -> Result<AnalyticPoint> {
    let ideal = simulate_hom(&HomConfig::new(squeeze, pulse, delay_ps).with_cutoff(cutoff))?;
    let lossy = apply_loss(&ideal, chain.eta_a, chain.eta_b)?;
    Ok(AnalyticPoint { ideal, lossy })
}

fn reports(dist: &JointDistribution, variants: &[ConditioningSpec]) -> Result<Vec<CorrelationReport>> {
    variants
        .iter()
        .map(|spec| Ok(correlation_report(&condition_distribution(dist, spec)?)))
        .collect()
}

/// SplitMix64 step, used to derive independent seeds per delay.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const BOOTSTRAP_STREAM: u64 = 0xB007_5742;

/// Runs the configured scan. Delays are evaluated in parallel; records are
/// returned in the configured delay order and are identical for any thread
/// count.
pub fn run_scan(config: &ScanConfig) -> Result<ScanResult> {
    config.validate()?;
    let squeeze = config.source.squeeze()?;
    let pulse = PulseModel::gaussian(config.pulse_fwhm_ps)?;
    let cutoff = config.resolve_cutoff(squeeze);
    let variants = config.variants();

    let band_sources: Option<[SqueezeParams; 2]> = match (config.source, config.mean_photon_sigma) {
        (
            Source::MeanPhoton {
                mean_photon,
                efficiency,
            },
            Some(sigma),
        ) => Some([
            squeeze_from_mean_photon((mean_photon - sigma).max(0.0), efficiency)?,
            squeeze_from_mean_photon(mean_photon + sigma, efficiency)?,
        ]),
        _ => None,
    };
    let band_cutoff = band_sources
        .map(|[_, hi]| config.resolve_cutoff(hi).max(cutoff))
        .unwrap_or(cutoff);

    let records: Vec<DelayRecord> = config
        .delays_ps
        .par_iter()
        .enumerate()
        .map(|(idx, &delay_ps)| {
            scan_point(
                config,
                squeeze,
                pulse,
                cutoff,
                &variants,
                band_sources,
                band_cutoff,
                idx,
                delay_ps,
            )
            .map_err(|e| Error::AtDelay {
                delay_ps,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;

    let mut notes = vec![
        "analytic measures are evaluated on the lossy photon-number distribution".to_string(),
        format!("total photon-number cutoff {cutoff}"),
    ];
    if config.shots.is_some() {
        notes.push(format!(
            "Monte Carlo: {} shots per delay, seeds derived from {} per delay index",
            config.shots.unwrap_or(0),
            config.seed
        ));
    }

    Ok(ScanResult {
        schema_version: SCAN_SCHEMA_VERSION,
        squeeze_r: squeeze.r(),
        total_cutoff: cutoff,
        config: Some(config.clone()),
        notes,
        records,
    })
}

#[allow(clippy::too_many_arguments)]
fn scan_point(
    config: &ScanConfig,
    squeeze: SqueezeParams,
    pulse: PulseModel,
    cutoff: usize,
    variants: &[ConditioningSpec],
    band_sources: Option<[SqueezeParams; 2]>,
    band_cutoff: usize,
    idx: usize,
    delay_ps: f64,
) -> Result<DelayRecord> {
    let chain = &config.chain;
    let overlap = overlap_from_delay(delay_ps, &pulse);
    let theta_dis = overlap.acos();
    let AnalyticPoint { ideal, lossy } = analytic_point(squeeze, pulse, delay_ps, chain, cutoff)?;
    let clicks = clicks_from_photons(&lossy, chain)?;
    let deconvolved = deconvolve_clicks(&clicks, chain)?.distribution;
    let analytic = reports(&lossy, variants)?;
    let components = Components::of(&lossy);

    let (bands, component_bands) = match band_sources {
        Some(sources) => {
            let mut per_variant: Vec<Vec<CorrelationReport>> = analytic.iter().map(|r| vec![*r]).collect();
            let mut comps = vec![components];
            for s in sources {
                let p = analytic_point(s, pulse, delay_ps, chain, band_cutoff)?;
                for (acc, r) in per_variant.iter_mut().zip(reports(&p.lossy, variants)?) {
                    acc.push(r);
                }
                comps.push(Components::of(&p.lossy));
            }
            let bands = per_variant
                .iter()
                .map(|rs| MeasureBands {
                    corr: Band::of(&rs.iter().map(|r| r.corr).collect::<Vec<_>>()),
                    schmidt_k: Band::of(&rs.iter().map(|r| r.schmidt_k).collect::<Vec<_>>()),
                    mutual_information: Band::of(&rs.iter().map(|r| r.mutual_information).collect::<Vec<_>>()),
                })
                .collect::<Vec<_>>();
            let cb = [
                Band::of(&comps.iter().map(|c| c.p11).collect::<Vec<_>>()),
                Band::of(&comps.iter().map(|c| c.p22).collect::<Vec<_>>()),
                Band::of(&comps.iter().map(|c| c.p20).collect::<Vec<_>>()),
                Band::of(&comps.iter().map(|c| c.p02).collect::<Vec<_>>()),
            ];
            (Some(bands), Some(cb))
        }
        None => (None, None),
    };

    let (sampled, sampled_reports, intervals) = match config.shots {
        Some(shots) => {
            let histogram = sample_clicks(&clicks, shots, derive_seed(config.seed, idx as u64))?;
            let dec = deconvolve_histogram(&histogram, chain)?;
            let sampled_reports = reports(&dec.distribution, variants)?;
            let intervals = bootstrap_uncertainty(
                &histogram,
                chain,
                variants,
                &BootstrapOptions::new(
                    config.bootstrap_resamples,
                    derive_seed(config.seed ^ BOOTSTRAP_STREAM, idx as u64),
                ),
            )?;
            let record = SampledRecord {
                components: Components::of(&dec.distribution),
                histogram,
                deconvolved: dec.distribution,
                negative_mass: dec.negative_mass,
            };
            (Some(record), Some(sampled_reports), Some(intervals))
        }
        None => (None, None, None),
    };

    let variants = variants
        .iter()
        .enumerate()
        .map(|(v, spec)| VariantRecord {
            label: spec.label(),
            conditioning: *spec,
            analytic: analytic[v],
            band: bands.as_ref().map(|b| b[v]),
            sampled: sampled_reports.as_ref().map(|r| r[v]),
            intervals: intervals.as_ref().map(|i| i[v]),
        })
        .collect();

    Ok(DelayRecord {
        delay_ps,
        overlap,
        theta_dis,
        ideal,
        lossy,
        clicks,
        deconvolved,
        components,
        component_bands,
        variants,
        sampled,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BootstrapOptions {
    pub resamples: usize,
    pub seed: u64,
    /// Percentiles (0–100) of the reported interval.
    pub lower_percentile: f64,
    pub upper_percentile: f64,
}

impl BootstrapOptions {
    pub fn new(resamples: usize, seed: u64) -> Self {
        BootstrapOptions {
            resamples,
            seed,
            lower_percentile: 16.0,
            upper_percentile: 84.0,
        }
    }
}

/// Multinomial bootstrap of a click histogram: each resample redraws
/// `total_shots` outcomes from the observed frequencies, deconvolves them, and
/// evaluates the measures for every conditioning variant. Returns one
/// interval set per variant.
pub fn bootstrap_uncertainty(
    hist: &ClickHistogram,
    chain: &DetectionChain,
    variants: &[ConditioningSpec],
    options: &BootstrapOptions,
) -> Result<Vec<MeasureIntervals>> {
    if hist.total_shots() == 0 {
        return Err(Error::EmptyHistogram);
    }
    if options.resamples < 2 {
        return Err(Error::invalid("bootstrap needs at least 2 resamples"));
    }
    let lo = options.lower_percentile;
    let hi = options.upper_percentile;
    if !(0.0..=100.0).contains(&lo) || !(0.0..=100.0).contains(&hi) || lo > hi {
        return Err(Error::invalid(format!("invalid percentile range {lo}..{hi}")));
    }
    let freqs = hist.frequencies()?;
    let probs = freqs.as_slice().to_vec();
    let shots = hist.total_shots();

    let samples: Vec<Vec<CorrelationReport>> = (0..options.resamples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
            rng.set_stream(i as u64);
            let counts = multinomial(&mut rng, shots, &probs);
            let resampled = ClickHistogram::new(hist.bins_a(), hist.bins_b(), counts)?;
            let dec = deconvolve_histogram(&resampled, chain)?;
            reports(&dec.distribution, variants)
        })
        .collect::<Result<_>>()?;

    Ok((0..variants.len())
        .map(|v| {
            let pick = |f: fn(&CorrelationReport) -> f64| {
                let mut xs: Vec<f64> = samples.iter().map(|s| f(&s[v])).collect();
                summarize(&mut xs, lo, hi)
            };
            MeasureIntervals {
                corr: pick(|r| r.corr),
                schmidt_k: pick(|r| r.schmidt_k),
                mutual_information: pick(|r| r.mutual_information),
            }
        })
        .collect())
}

fn summarize(xs: &mut [f64], lo: f64, hi: f64) -> Interval {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Interval {
        low: percentile(xs, lo),
        high: percentile(xs, hi),
        std: var.sqrt(),
    }
}

// linear interpolation between closest ranks
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q / 100.0 * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

/// Named reproductions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Fig3,
    Fig4,
    Fig5a,
    Fig5b,
    OperatingPoint,
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "fig3" => Preset::Fig3,
            "fig4" => Preset::Fig4,
            "fig5a" => Preset::Fig5a,
            "fig5b" => Preset::Fig5b,
            "operating-point" => Preset::OperatingPoint,
            other => {
                return Err(Error::invalid(format!(
                    "unknown preset '{other}' (expected fig3, fig4, fig5a, fig5b, operating-point)"
                )))
            }
        })
    }
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::Fig3 => "fig3",
            Preset::Fig4 => "fig4",
            Preset::Fig5a => "fig5a",
            Preset::Fig5b => "fig5b",
            Preset::OperatingPoint => "operating-point",
        }
    }

    /// Scan configuration of a scan preset; `None` for the operating-point
    /// summary, which is not a scan.
    pub fn scan_config(&self) -> Option<ScanConfig> {
        let mut cfg = ScanConfig::operating_point();
        cfg.mean_photon_sigma = Some(OPERATING_MEAN_PHOTON_SIGMA);
        match self {
            Preset::Fig3 | Preset::Fig4 => {}
            Preset::Fig5a => cfg.conditioning = vec![ConditioningSpec::two_photon_no_vacuum()],
            Preset::Fig5b => cfg.conditioning = vec![ConditioningSpec::vacuum_removed()],
            Preset::OperatingPoint => return None,
        }
        Some(cfg)
    }

    /// Runs a scan preset. The delay grid and shot allocation are this
    /// tool's defaults and are recorded in the result notes.
    pub fn run(&self, shots: Option<u64>, seed: u64) -> Result<Option<ScanResult>> {
        let Some(mut cfg) = self.scan_config() else {
            return Ok(None);
        };
        cfg.shots = shots;
        cfg.seed = seed;
        let mut result = run_scan(&cfg)?;
        result.notes.push(format!(
            "preset {}: default grid of {} delays over ±{} ps",
            self.name(),
            DEFAULT_SCAN_POINTS,
            DEFAULT_SCAN_HALF_RANGE_PS
        ));
        Ok(Some(result))
    }
}

/// Summary numbers of the experimental operating point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatingPointSummary {
    pub mean_photon: f64,
    pub eta_a: f64,
    pub eta_b: f64,
    pub squeeze_r: f64,
    /// Lossy two-mode squeezed vacuum components before interference.
    pub p11: f64,
    pub p22: f64,
    pub p33: f64,
    /// `g²(0)` of the lossy arm-A marginal.
    pub g2_lossy_marginal: f64,
    /// Transmission budget: free space × TMD × detector.
    pub transmission_a: f64,
    pub transmission_b: f64,
}

pub const FREE_SPACE_TRANSMISSION: f64 = 0.35;
pub const TMD_TRANSMISSION: f64 = 0.60;
pub const DETECTOR_EFFICIENCY_A: f64 = 0.94;
pub const DETECTOR_EFFICIENCY_B: f64 = 0.70;

pub fn operating_point_summary() -> Result<OperatingPointSummary> {
    let squeeze = squeeze_from_mean_photon(OPERATING_MEAN_PHOTON, OPERATING_ETA_A)?;
    let cutoff = required_cutoff(squeeze.r(), AUTO_CUTOFF_LEAKAGE);
    let reference = tmsvs_reference_distribution(squeeze, cutoff);
    let lossy = apply_loss(&reference, OPERATING_ETA_A, OPERATING_ETA_B)?;
    let (pa, _) = marginals(&lossy);
    Ok(OperatingPointSummary {
        mean_photon: OPERATING_MEAN_PHOTON,
        eta_a: OPERATING_ETA_A,
        eta_b: OPERATING_ETA_B,
        squeeze_r: squeeze.r(),
        p11: lossy.get(1, 1),
        p22: lossy.get(2, 2),
        p33: lossy.get(3, 3),
        g2_lossy_marginal: g2_zero(&pa)?,
        transmission_a: FREE_SPACE_TRANSMISSION * TMD_TRANSMISSION * DETECTOR_EFFICIENCY_A,
        transmission_b: FREE_SPACE_TRANSMISSION * TMD_TRANSMISSION * DETECTOR_EFFICIENCY_B,
    })
}

/// Measured `g²(0)` of the source and the effective mode number it implies.
pub const MEASURED_G2: f64 = 1.75;

pub fn measured_effective_mode_number() -> Result<f64> {
    effective_mode_number(MEASURED_G2)
}
