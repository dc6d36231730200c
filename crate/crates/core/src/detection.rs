//! Measurement chain: binomial loss, time-multiplexed click detection, shot
//! sampling, and click-to-photon deconvolution.
//!
//! Loss is applied per arm to the ideal joint distribution. The
//! pre-interference transmission is the same in both input arms, so it
//! commutes with every beam splitter of the interference model and can be
//! folded into the per-arm totals together with the post-interference losses.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combinatorics::binomial_loss_matrix;
use crate::distribution::{JointDistribution, Provenance};
use crate::error::{Error, Result};

/// Shots per independently seeded sampling chunk.
pub const SAMPLE_CHUNK_SHOTS: u64 = 1 << 20;

/// Per-arm transmission and time-multiplexed-detector bin counts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionChain {
    pub eta_a: f64,
    pub eta_b: f64,
    pub bins_a: usize,
    pub bins_b: usize,
}

impl DetectionChain {
    pub fn new(eta_a: f64, eta_b: f64, bins_a: usize, bins_b: usize) -> Result<Self> {
        let chain = DetectionChain {
            eta_a,
            eta_b,
            bins_a,
            bins_b,
        };
        chain.validate()?;
        Ok(chain)
    }

    /// Unit transmission with the given bin counts.
    pub fn lossless(bins_a: usize, bins_b: usize) -> Result<Self> {
        Self::new(1.0, 1.0, bins_a, bins_b)
    }

    pub fn validate(&self) -> Result<()> {
        check_eta(self.eta_a)?;
        check_eta(self.eta_b)?;
        if self.bins_a == 0 || self.bins_b == 0 {
            return Err(Error::invalid("detectors need at least one time bin"));
        }
        Ok(())
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("transmission {eta} must lie in (0, 1]")))
    }
}

/// Shot counts per joint click outcome `(k_A, k_B)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClickHistogram {
    bins_a: usize,
    bins_b: usize,
    counts: Vec<u64>,
    total_shots: u64,
}

impl ClickHistogram {
    /// `counts` is row-major over `(bins_a + 1) x (bins_b + 1)` outcomes.
    pub fn new(bins_a: usize, bins_b: usize, counts: Vec<u64>) -> Result<Self> {
        if bins_a == 0 || bins_b == 0 {
            return Err(Error::invalid("detectors need at least one time bin"));
        }
        let cells = (bins_a + 1) * (bins_b + 1);
        if counts.len() != cells {
            return Err(Error::invalid(format!(
                "expected {cells} click cells, got {}",
                counts.len()
            )));
        }
        let total_shots = counts
            .iter()
            .try_fold(0u64, |acc, &c| acc.checked_add(c))
            .ok_or_else(|| Error::invalid("total shot count overflows u64"))?;
        Ok(ClickHistogram {
            bins_a,
            bins_b,
            counts,
            total_shots,
        })
    }

    pub fn bins_a(&self) -> usize {
        self.bins_a
    }

    pub fn bins_b(&self) -> usize {
        self.bins_b
    }

    pub fn total_shots(&self) -> u64 {
        self.total_shots
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn get(&self, k_a: usize, k_b: usize) -> u64 {
        if k_a > self.bins_a || k_b > self.bins_b {
            return 0;
        }
        self.counts[k_a * (self.bins_b + 1) + k_b]
    }

    /// Relative frequencies as a click distribution.
    pub fn frequencies(&self) -> Result<JointDistribution> {
        if self.total_shots == 0 {
            return Err(Error::EmptyHistogram);
        }
        let n = self.total_shots as f64;
        JointDistribution::new(
            self.bins_a + 1,
            self.bins_b + 1,
            self.counts.iter().map(|&c| c as f64 / n).collect(),
            Provenance::Sampled,
        )
    }
}

/// `P'(m_A, m_B) = Σ P(n_A, n_B) Bin(m_A; n_A, η_A) Bin(m_B; n_B, η_B)`.
pub fn apply_loss(dist: &JointDistribution, eta_a: f64, eta_b: f64) -> Result<JointDistribution> {
    check_eta(eta_a)?;
    check_eta(eta_b)?;
    let (rows, cols) = (dist.rows(), dist.cols());
    let la = binomial_loss_matrix(eta_a, rows - 1);
    let lb = binomial_loss_matrix(eta_b, cols - 1);
    let p = dist.as_slice();

    // tmp = P L_Bᵀ, then out = L_A tmp
    let mut tmp = vec![0.0; rows * cols];
    for a in 0..rows {
        let prow = &p[a * cols..(a + 1) * cols];
        for mb in 0..cols {
            let lrow = &lb[mb * cols..(mb + 1) * cols];
            tmp[a * cols + mb] = (mb..cols).map(|nb| prow[nb] * lrow[nb]).sum();
        }
    }
    let mut out = vec![0.0; rows * cols];
    for ma in 0..rows {
        for na in ma..rows {
            let w = la[ma * rows + na];
            if w == 0.0 {
                continue;
            }
            for b in 0..cols {
                out[ma * cols + b] += w * tmp[na * cols + b];
            }
        }
    }
    Ok(JointDistribution::from_parts_unchecked(
        rows,
        cols,
        out,
        Provenance::Lossy,
        dist.leakage(),
    ))
}

/// Click-number response of a balanced time-multiplexed detector:
/// `C[k][n]` is the probability that `n` photons spread uniformly over `bins`
/// bins light up exactly `k` of them.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvolutionMatrix {
    bins: usize,
    max_n: usize,
    data: Vec<f64>,
}

impl ConvolutionMatrix {
    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn max_n(&self) -> usize {
        self.max_n
    }

    /// `C[k][n]`, zero for `k > bins` or `k > n`.
    #[inline]
    pub fn get(&self, k: usize, n: usize) -> f64 {
        if k > self.bins || n > self.max_n {
            0.0
        } else {
            self.data[k * (self.max_n + 1) + n]
        }
    }

    /// Column `n` as a vector over `k = 0..=bins`.
    pub fn column(&self, n: usize) -> Vec<f64> {
        (0..=self.bins).map(|k| self.get(k, n)).collect()
    }
}

/// Builds `C[k][n]` for `k = 0..=bins`, `n = 0..=max_n` via the occupancy
/// recurrence `C[k][n] = C[k][n−1] k/B + C[k−1][n−1] (B−k+1)/B`.
pub fn tmd_convolution_matrix(bins: usize, max_n: usize) -> Result<ConvolutionMatrix> {
    if bins == 0 {
        return Err(Error::invalid("detectors need at least one time bin"));
    }
    let width = max_n + 1;
    let mut data = vec![0.0; (bins + 1) * width];
    data[0] = 1.0;
    let b = bins as f64;
    for n in 1..=max_n {
        for k in 1..=bins.min(n) {
            let stay = data[k * width + n - 1] * k as f64 / b;
            let new = data[(k - 1) * width + n - 1] * (bins - k + 1) as f64 / b;
            data[k * width + n] = stay + new;
        }
    }
    Ok(ConvolutionMatrix { bins, max_n, data })
}

/// `Q(k_A, k_B) = Σ C_A[k_A][n_A] C_B[k_B][n_B] P(n_A, n_B)`.
pub fn clicks_from_photons(dist: &JointDistribution, chain: &DetectionChain) -> Result<JointDistribution> {
    chain.validate()?;
    let (rows, cols) = (dist.rows(), dist.cols());
    let ca = tmd_convolution_matrix(chain.bins_a, rows - 1)?;
    let cb = tmd_convolution_matrix(chain.bins_b, cols - 1)?;
    let (ka_dim, kb_dim) = (chain.bins_a + 1, chain.bins_b + 1);
    let p = dist.as_slice();

    let mut tmp = vec![0.0; rows * kb_dim];
    for a in 0..rows {
        for kb in 0..kb_dim {
            tmp[a * kb_dim + kb] = (kb..cols).map(|nb| p[a * cols + nb] * cb.get(kb, nb)).sum();
        }
    }
    let mut out = vec![0.0; ka_dim * kb_dim];
    for ka in 0..ka_dim {
        for na in ka..rows {
            let w = ca.get(ka, na);
            if w == 0.0 {
                continue;
            }
            for kb in 0..kb_dim {
                out[ka * kb_dim + kb] += w * tmp[na * kb_dim + kb];
            }
        }
    }
    Ok(JointDistribution::from_parts_unchecked(
        ka_dim,
        kb_dim,
        out,
        Provenance::Clicks,
        dist.leakage(),
    ))
}

/// Result of inverting the click response.
#[derive(Clone, Debug, PartialEq)]
pub struct Deconvolution {
    /// Clamped and renormalized photon-number estimate on `n <= bins`.
    pub distribution: JointDistribution,
    /// Total magnitude of negative entries removed by clamping.
    pub negative_mass: f64,
    /// Sum of the raw (unclamped) inverse.
    pub raw_total: f64,
}

/// Inverts the square `(bins+1) x (bins+1)` response on both arms.
///
/// Photon numbers above the bin count cannot be recovered; any such mass in
/// the true distribution is folded into lower photon numbers. Negative
/// entries from statistical noise are clamped to zero before renormalizing.
pub fn deconvolve_clicks(clicks: &JointDistribution, chain: &DetectionChain) -> Result<Deconvolution> {
    chain.validate()?;
    let (ka_dim, kb_dim) = (chain.bins_a + 1, chain.bins_b + 1);
    for (ka, kb, q) in clicks.iter() {
        if q != 0.0 && (ka >= ka_dim || kb >= kb_dim) {
            return Err(Error::ClicksExceedBins {
                k_a: ka,
                k_b: kb,
                bins_a: chain.bins_a,
                bins_b: chain.bins_b,
            });
        }
    }
    let ca = tmd_convolution_matrix(chain.bins_a, chain.bins_a)?;
    let cb = tmd_convolution_matrix(chain.bins_b, chain.bins_b)?;

    let q = clicks.resized(ka_dim, kb_dim);
    // solve C_A X = Q column by column, then C_B Yᵀ = Xᵀ row by row
    let mut x = q.as_slice().to_vec();
    for kb in 0..kb_dim {
        let mut col: Vec<f64> = (0..ka_dim).map(|ka| x[ka * kb_dim + kb]).collect();
        back_substitute(&ca, &mut col);
        for (ka, v) in col.into_iter().enumerate() {
            x[ka * kb_dim + kb] = v;
        }
    }
    for na in 0..ka_dim {
        back_substitute(&cb, &mut x[na * kb_dim..(na + 1) * kb_dim]);
    }

    let raw_total: f64 = x.iter().sum();
    let mut negative_mass = 0.0;
    for v in x.iter_mut() {
        if *v < 0.0 {
            negative_mass -= *v;
            *v = 0.0;
        }
    }
    let total: f64 = x.iter().sum();
    if !(total > 0.0) {
        return Err(Error::invalid("deconvolution left no nonnegative mass"));
    }
    x.iter_mut().for_each(|v| *v /= total);
    Ok(Deconvolution {
        distribution: JointDistribution::from_parts_unchecked(ka_dim, kb_dim, x, Provenance::Deconvolved, 0.0),
        negative_mass,
        raw_total,
    })
}

/// Deconvolves the relative frequencies of a click histogram.
pub fn deconvolve_histogram(hist: &ClickHistogram, chain: &DetectionChain) -> Result<Deconvolution> {
    if hist.bins_a > chain.bins_a || hist.bins_b > chain.bins_b {
        return Err(Error::invalid(format!(
            "histogram has {}x{} bins but the detection chain only {}x{}",
            hist.bins_a, hist.bins_b, chain.bins_a, chain.bins_b
        )));
    }
    deconvolve_clicks(&hist.frequencies()?, chain)
}

// upper triangular: C[k][n] = 0 for k > n
fn back_substitute(c: &ConvolutionMatrix, v: &mut [f64]) {
    let dim = v.len();
    for n in (0..dim).rev() {
        let mut acc = v[n];
        for (m, &vm) in v.iter().enumerate().skip(n + 1) {
            acc -= c.get(n, m) * vm;
        }
        v[n] = acc / c.get(n, n);
    }
}

/// Draws a multinomial histogram of `shots` joint outcomes from `dist`.
///
/// Shots are split into chunks of [`SAMPLE_CHUNK_SHOTS`]; chunk `c` draws
/// from a ChaCha8 stream `c` keyed by `seed`, so the result depends only on
/// `(dist, shots, seed)` and not on how many threads run the chunks.
pub fn sample_clicks(dist: &JointDistribution, shots: u64, seed: u64) -> Result<ClickHistogram> {
    if shots == 0 {
        return Err(Error::invalid("need at least one shot"));
    }
    if dist.rows() < 2 || dist.cols() < 2 {
        return Err(Error::invalid("click distribution needs at least one bin per detector"));
    }
    let total = dist.total();
    if !(total > 0.0) {
        return Err(Error::invalid("cannot sample from a distribution with zero mass"));
    }
    let probs: Vec<f64> = dist.as_slice().iter().map(|p| p / total).collect();
    let chunks = shots.div_ceil(SAMPLE_CHUNK_SHOTS);
    let partial: Vec<Vec<u64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let n = SAMPLE_CHUNK_SHOTS.min(shots - c * SAMPLE_CHUNK_SHOTS);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            multinomial(&mut rng, n, &probs)
        })
        .collect();
    let mut counts = vec![0u64; probs.len()];
    for part in partial {
        for (acc, x) in counts.iter_mut().zip(part) {
            *acc += x;
        }
    }
    ClickHistogram::new(dist.rows() - 1, dist.cols() - 1, counts)
}

/// Multinomial draw by sequential conditional binomials.
pub(crate) fn multinomial<R: rand::Rng>(rng: &mut R, shots: u64, probs: &[f64]) -> Vec<u64> {
    let mut counts = vec![0u64; probs.len()];
    let last = match probs.iter().rposition(|&p| p > 0.0) {
        Some(i) => i,
        None => return counts,
    };
    let mut remaining = shots;
    let mut remaining_p: f64 = probs.iter().sum();
    for (i, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i == last {
            counts[i] = remaining;
            break;
        }
        if p <= 0.0 {
            continue;
        }
        let q = (p / remaining_p).clamp(0.0, 1.0);
        let x = Binomial::new(remaining, q).expect("valid binomial").sample(rng);
        counts[i] = x;
        remaining -= x;
        remaining_p -= p;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn dist(rows: &[Vec<f64>]) -> JointDistribution {
        JointDistribution::from_rows(rows, Provenance::External).unwrap()
    }

    #[test]
    fn lossless_is_identity() {
        let p = dist(&[vec![0.1, 0.2], vec![0.3, 0.4]]);
        let q = apply_loss(&p, 1.0, 1.0).unwrap();
        assert_eq!(q.as_slice(), p.as_slice());
        assert_eq!(q.provenance(), Provenance::Lossy);
    }

    #[test]
    fn single_photon_loss() {
        let p = dist(&[vec![0.0], vec![1.0]]);
        let q = apply_loss(&p, 0.2, 0.5).unwrap();
        assert_abs_diff_eq!(q.get(1, 0), 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(q.get(0, 0), 0.8, epsilon = 1e-15);
    }

    #[test]
    fn loss_rejects_bad_eta() {
        let p = dist(&[vec![1.0]]);
        assert!(apply_loss(&p, 0.0, 1.0).is_err());
        assert!(apply_loss(&p, 1.0, 1.2).is_err());
    }

    #[test]
    fn convolution_small_cases() {
        let c = tmd_convolution_matrix(8, 4).unwrap();
        assert_eq!(c.get(0, 0), 1.0);
        assert_eq!(c.get(1, 1), 1.0);
        assert_abs_diff_eq!(c.get(1, 2), 1.0 / 8.0, epsilon = 1e-16);
        assert_abs_diff_eq!(c.get(2, 2), 7.0 / 8.0, epsilon = 1e-16);
        assert_eq!(c.get(3, 2), 0.0);
        assert!(tmd_convolution_matrix(0, 3).is_err());
    }

    #[test]
    fn two_photons_into_clicks_and_back() {
        let chain = DetectionChain::lossless(8, 8).unwrap();
        let p = JointDistribution::point_mass(3, 1, 2, 0, Provenance::Ideal).unwrap();
        let q = clicks_from_photons(&p, &chain).unwrap();
        assert_abs_diff_eq!(q.get(1, 0), 1.0 / 8.0, epsilon = 1e-16);
        assert_abs_diff_eq!(q.get(2, 0), 7.0 / 8.0, epsilon = 1e-16);

        let d = deconvolve_clicks(&q, &chain).unwrap();
        assert_abs_diff_eq!(d.distribution.get(2, 0), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.negative_mass, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn vacuum_and_single_pairs() {
        let chain = DetectionChain::lossless(8, 8).unwrap();
        let vac = JointDistribution::point_mass(1, 1, 0, 0, Provenance::Ideal).unwrap();
        let q = clicks_from_photons(&vac, &chain).unwrap();
        assert_eq!(q.get(0, 0), 1.0);
        assert_eq!(deconvolve_clicks(&q, &chain).unwrap().distribution.get(0, 0), 1.0);

        let one = JointDistribution::point_mass(2, 2, 1, 1, Provenance::Ideal).unwrap();
        assert_eq!(clicks_from_photons(&one, &chain).unwrap().get(1, 1), 1.0);
    }

    #[test]
    fn deconvolution_rejects_out_of_range_clicks() {
        let chain = DetectionChain::lossless(2, 2).unwrap();
        let q = JointDistribution::point_mass(4, 3, 3, 0, Provenance::Clicks).unwrap();
        assert!(matches!(
            deconvolve_clicks(&q, &chain),
            Err(Error::ClicksExceedBins { k_a: 3, .. })
        ));
    }

    #[test]
    fn deconvolution_clamps_noise() {
        let chain = DetectionChain::lossless(2, 2).unwrap();
        // two clicks in A with no single-click events implies negative P(1, 0)
        let q = dist(&[vec![0.5, 0.0, 0.0], vec![0.0, 0.0, 0.0], vec![0.5, 0.0, 0.0]]);
        let d = deconvolve_clicks(&q, &chain).unwrap();
        assert!(d.negative_mass > 0.0);
        assert!(d.distribution.as_slice().iter().all(|&p| p >= 0.0));
        assert_abs_diff_eq!(d.distribution.total(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn point_mass_sampling() {
        let p = JointDistribution::point_mass(9, 9, 0, 0, Provenance::Clicks).unwrap();
        let h = sample_clicks(&p, 1000, 7).unwrap();
        assert_eq!(h.get(0, 0), 1000);
        assert_eq!(h.total_shots(), 1000);
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let p = dist(&[vec![0.5, 0.1], vec![0.1, 0.3]]);
        let a = sample_clicks(&p, 3 * SAMPLE_CHUNK_SHOTS + 17, 42).unwrap();
        let b = sample_clicks(&p, 3 * SAMPLE_CHUNK_SHOTS + 17, 42).unwrap();
        let c = sample_clicks(&p, 3 * SAMPLE_CHUNK_SHOTS + 17, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.total_shots(), 3 * SAMPLE_CHUNK_SHOTS + 17);
    }

    #[test]
    fn histogram_validation() {
        assert!(ClickHistogram::new(1, 1, vec![1, 0, 0]).is_err());
        assert!(ClickHistogram::new(1, 1, vec![u64::MAX, 1, 0, 0]).is_err());
        let h = ClickHistogram::new(1, 1, vec![0, 0, 0, 0]).unwrap();
        assert!(matches!(h.frequencies(), Err(Error::EmptyHistogram)));
    }
}
