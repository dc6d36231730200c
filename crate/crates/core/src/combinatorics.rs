//! Small combinatorial helpers shared by the state constructors and the
//! detector models.

/// Table of `ln(n!)` for `n = 0..=max`.
#[derive(Clone, Debug)]
pub struct LnFactorials(Vec<f64>);

impl LnFactorials {
    pub fn new(max: usize) -> Self {
        let mut table = Vec::with_capacity(max + 1);
        let mut acc = 0.0_f64;
        table.push(0.0);
        for n in 1..=max {
            acc += (n as f64).ln();
            table.push(acc);
        }
        LnFactorials(table)
    }

    #[cfg(test)]
    pub fn get(&self, n: usize) -> f64 {
        self.0[n]
    }

    #[inline]
    pub fn ln_binomial(&self, n: usize, k: usize) -> f64 {
        debug_assert!(k <= n);
        self.0[n] - self.0[k] - self.0[n - k]
    }
}

/// Binomial survival matrix `L[m][n] = C(n, m) eta^m (1 - eta)^(n - m)`,
/// returned row-major with `max_n + 1` rows and columns.
pub fn binomial_loss_matrix(eta: f64, max_n: usize) -> Vec<f64> {
    let dim = max_n + 1;
    let mut out = vec![0.0; dim * dim];
    let lf = LnFactorials::new(max_n);
    for n in 0..dim {
        for m in 0..=n {
            out[m * dim + n] = binomial_pmf(&lf, n, m, eta);
        }
    }
    out
}

/// `C(n, k) p^k (1-p)^(n-k)` with the edge cases `p = 0` and `p = 1` exact.
pub fn binomial_pmf(lf: &LnFactorials, n: usize, k: usize, p: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    if p <= 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if p >= 1.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    let ln = lf.ln_binomial(n, k) + k as f64 * p.ln() + (n - k) as f64 * (-p).ln_1p();
    ln.exp()
}
