//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use hompnr::distribution::Provenance;
use hompnr::fock::{BeamSplitterSpec, FockVector};
use hompnr::JointDistribution;

pub fn binom_half_pmf(n: usize, k: usize) -> f64 {
    let c: f64 = (0..k).map(|i| (n - i) as f64 / (i + 1) as f64).product();
    c * 0.5f64.powi(n as i32)
}

/// Fully distinguishable limit: signal and idler photons split independently
/// at their own 50:50 splitters.
pub fn split_tmsvs_oracle(r: f64, max_pairs: usize) -> Vec<Vec<f64>> {
    let dim = 2 * max_pairs + 1;
    let t2 = r.tanh().powi(2);
    let mut out = vec![vec![0.0; dim]; dim];
    for n in 0..=max_pairs {
        let pn = t2.powi(n as i32) / r.cosh().powi(2);
        for k in 0..=n {
            for l in 0..=n {
                let na = k + l;
                out[na][2 * n - na] += pn * binom_half_pmf(n, k) * binom_half_pmf(n, l);
            }
        }
    }
    out
}

/// Photon-number distribution of chosen mode groups, tracing out all other modes.
pub fn grouped(state: &FockVector, group_a: &[usize], group_b: &[usize], dim: usize) -> JointDistribution {
    let mut acc: HashMap<(usize, usize), f64> = HashMap::new();
    for (occ, amp) in state.iter() {
        let na: usize = group_a.iter().map(|&m| occ[m] as usize).sum();
        let nb: usize = group_b.iter().map(|&m| occ[m] as usize).sum();
        *acc.entry((na, nb)).or_default() += amp.norm_sqr();
    }
    JointDistribution::from_fn(dim, dim, Provenance::External, |a, b| {
        acc.get(&(a, b)).copied().unwrap_or(0.0)
    })
    .unwrap()
}

/// Beam splitter coupling `mode` to a vacuum ancilla with transmission `eta`.
pub fn loss_splitter(mode: usize, ancilla: usize, eta: f64) -> BeamSplitterSpec {
    BeamSplitterSpec::new(mode, ancilla, eta.sqrt().acos()).unwrap()
}
