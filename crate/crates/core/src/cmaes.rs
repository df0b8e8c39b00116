//! CMA-ES under a maximisation convention.
//!
//! Small problems adapt a full covariance matrix; large ones (policy weight
//! vectors) use the separable diagonal variant with its enlarged learning
//! rates. Sampling for generation `g` is seeded from `(seed, g)`, so a run is
//! reproducible from its seed alone.

use alloc::vec;
use alloc::vec::Vec;

use rand_distr::{Distribution, StandardNormal};

use crate::math::{exp, ln, sqrt};
use crate::par;
use crate::rng::{self, Rng};

const EIG_MIN: f64 = 1e-12;
const EIG_MAX: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CmaesError {
    #[error("fitness {index} is not finite")]
    NonFiniteFitness { index: usize },
    #[error("expected {expected} candidates/fitnesses, got {got}")]
    Count { expected: usize, got: usize },
    #[error("invalid configuration: {0}")]
    Config(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceMode {
    Full,
    Separable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CmaesConfig {
    pub sigma0: f64,
    /// Population size; `None` gives `4 + ⌊3 ln d⌋`.
    pub lambda: Option<usize>,
    /// `None` picks full covariance up to [`CmaesConfig::FULL_MAX_DIM`].
    pub mode: Option<CovarianceMode>,
    /// Optional box; candidates are clamped into it.
    pub bounds: Option<(Vec<f64>, Vec<f64>)>,
    pub seed: u64,
}

impl CmaesConfig {
    pub const FULL_MAX_DIM: usize = 100;

    pub fn new(sigma0: f64, seed: u64) -> Self {
        CmaesConfig { sigma0, lambda: None, mode: None, bounds: None, seed }
    }
}

pub fn default_lambda(dim: usize) -> usize {
    4 + libm::floor(3.0 * ln(dim as f64)) as usize
}

#[derive(Debug, Clone)]
pub struct Cmaes {
    dim: usize,
    mode: CovarianceMode,
    lambda: usize,
    weights: Vec<f64>,
    mueff: f64,
    cc: f64,
    cs: f64,
    c1: f64,
    cmu: f64,
    damps: f64,
    chi_n: f64,
    mean: Vec<f64>,
    sigma: f64,
    ps: Vec<f64>,
    pc: Vec<f64>,
    /// Full: row-major `d × d` covariance. Separable: its diagonal.
    cov: Vec<f64>,
    /// Full mode eigenbasis (columns) and eigenvalue square roots.
    basis: Vec<f64>,
    scales: Vec<f64>,
    bounds: Option<(Vec<f64>, Vec<f64>)>,
    seed: u64,
    generation: u64,
    best: Option<(Vec<f64>, f64)>,
}

impl Cmaes {
    pub fn new(mean: Vec<f64>, config: &CmaesConfig) -> Result<Self, CmaesError> {
        let n = mean.len();
        if n == 0 {
            return Err(CmaesError::Config("dimension must be positive"));
        }
        if !(config.sigma0 > 0.0 && config.sigma0.is_finite()) {
            return Err(CmaesError::Config("sigma0 must be positive"));
        }
        if let Some((lo, hi)) = &config.bounds {
            if lo.len() != n || hi.len() != n || lo.iter().zip(hi).any(|(a, b)| !(a <= b)) {
                return Err(CmaesError::Config("bounds must match the dimension with lo <= hi"));
            }
        }
        let lambda = config.lambda.unwrap_or_else(|| default_lambda(n));
        if lambda < 2 {
            return Err(CmaesError::Config("lambda must be at least 2"));
        }
        let mode = config
            .mode
            .unwrap_or(if n <= CmaesConfig::FULL_MAX_DIM { CovarianceMode::Full } else { CovarianceMode::Separable });
        let mu = lambda / 2;
        let raw: Vec<f64> = (0..mu).map(|i| ln(mu as f64 + 0.5) - ln(i as f64 + 1.0)).collect();
        let sum: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / sum).collect();
        let mueff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
        let nf = n as f64;
        let cc = (4.0 + mueff / nf) / (nf + 4.0 + 2.0 * mueff / nf);
        let cs = (mueff + 2.0) / (nf + mueff + 5.0);
        let mut c1 = 2.0 / ((nf + 1.3) * (nf + 1.3) + mueff);
        let mut cmu = 2.0 * (mueff - 2.0 + 1.0 / mueff) / ((nf + 2.0) * (nf + 2.0) + mueff);
        if mode == CovarianceMode::Separable {
            c1 *= (nf + 2.0) / 3.0;
            cmu *= (nf + 2.0) / 3.0;
        }
        c1 = c1.min(1.0);
        cmu = cmu.min(1.0 - c1);
        let damps = 1.0 + 2.0 * (sqrt((mueff - 1.0) / (nf + 1.0)) - 1.0).max(0.0) + cs;
        let chi_n = sqrt(nf) * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));
        let (cov, basis) = match mode {
            CovarianceMode::Full => (identity(n), identity(n)),
            CovarianceMode::Separable => (vec![1.0; n], Vec::new()),
        };
        let mut es = Cmaes {
            dim: n,
            mode,
            lambda,
            weights,
            mueff,
            cc,
            cs,
            c1,
            cmu,
            damps,
            chi_n,
            mean,
            sigma: config.sigma0,
            ps: vec![0.0; n],
            pc: vec![0.0; n],
            cov,
            basis,
            scales: vec![1.0; n],
            bounds: config.bounds.clone(),
            seed: config.seed,
            generation: 0,
            best: None,
        };
        es.clamp_mean();
        Ok(es)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn lambda(&self) -> usize {
        self.lambda
    }
    pub fn mode(&self) -> CovarianceMode {
        self.mode
    }
    pub fn mean(&self) -> &[f64] {
        &self.mean
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn generation(&self) -> u64 {
        self.generation
    }
    /// Best candidate seen so far and its fitness.
    pub fn best(&self) -> Option<(&[f64], f64)> {
        self.best.as_ref().map(|(x, f)| (x.as_slice(), *f))
    }

    /// Covariance matrix `C` (without `σ²`) as a dense row-major matrix.
    pub fn covariance(&self) -> Vec<f64> {
        match self.mode {
            CovarianceMode::Full => self.cov.clone(),
            CovarianceMode::Separable => {
                let mut c = vec![0.0; self.dim * self.dim];
                for i in 0..self.dim {
                    c[i * self.dim + i] = self.cov[i];
                }
                c
            }
        }
    }

    /// Eigenvalues of `C` (full mode: from the last decomposition).
    pub fn eigenvalues(&self) -> Vec<f64> {
        match self.mode {
            CovarianceMode::Full => self.scales.iter().map(|s| s * s).collect(),
            CovarianceMode::Separable => self.cov.clone(),
        }
    }

    fn generation_rng(&self) -> Rng {
        rng::derived(self.seed, &[0xc3a, self.generation])
    }

    /// `λ` candidates from `N(m, σ²C)`, clamped into the box if one is set.
    pub fn ask(&self) -> Vec<Vec<f64>> {
        let mut r = self.generation_rng();
        (0..self.lambda)
            .map(|_| {
                let z: Vec<f64> = (0..self.dim).map(|_| StandardNormal.sample(&mut r)).collect();
                let y = self.transform(&z);
                let mut x: Vec<f64> = self.mean.iter().zip(&y).map(|(m, y)| m + self.sigma * y).collect();
                self.clamp(&mut x);
                x
            })
            .collect()
    }

    /// `B D z` (full) or `√diag(C) ⊙ z` (separable).
    fn transform(&self, z: &[f64]) -> Vec<f64> {
        match self.mode {
            CovarianceMode::Separable => z.iter().zip(&self.cov).map(|(z, c)| z * sqrt(*c)).collect(),
            CovarianceMode::Full => {
                let n = self.dim;
                let dz: Vec<f64> = z.iter().zip(&self.scales).map(|(z, d)| z * d).collect();
                (0..n).map(|i| (0..n).map(|j| self.basis[i * n + j] * dz[j]).sum()).collect()
            }
        }
    }

    /// `C^{-1/2} y`.
    fn whiten(&self, y: &[f64]) -> Vec<f64> {
        match self.mode {
            CovarianceMode::Separable => y.iter().zip(&self.cov).map(|(y, c)| y / sqrt(*c)).collect(),
            CovarianceMode::Full => {
                let n = self.dim;
                let bt: Vec<f64> =
                    (0..n).map(|j| (0..n).map(|i| self.basis[i * n + j] * y[i]).sum::<f64>() / self.scales[j]).collect();
                (0..n).map(|i| (0..n).map(|j| self.basis[i * n + j] * bt[j]).sum()).collect()
            }
        }
    }

    fn clamp(&self, x: &mut [f64]) {
        if let Some((lo, hi)) = &self.bounds {
            for i in 0..x.len() {
                x[i] = x[i].clamp(lo[i], hi[i]);
            }
        }
    }

    fn clamp_mean(&mut self) {
        let mut m = core::mem::take(&mut self.mean);
        self.clamp(&mut m);
        self.mean = m;
    }

    /// Updates the distribution from evaluated candidates (higher is better).
    /// Ties are ranked by candidate index; if every fitness is equal the
    /// distribution is left unchanged.
    pub fn tell(&mut self, candidates: &[Vec<f64>], fitness: &[f64]) -> Result<(), CmaesError> {
        if candidates.len() != self.lambda || fitness.len() != self.lambda {
            return Err(CmaesError::Count { expected: self.lambda, got: candidates.len().min(fitness.len()) });
        }
        if let Some(index) = fitness.iter().position(|f| !f.is_finite()) {
            return Err(CmaesError::NonFiniteFitness { index });
        }
        for (x, f) in candidates.iter().zip(fitness) {
            if x.len() != self.dim {
                return Err(CmaesError::Count { expected: self.dim, got: x.len() });
            }
            if self.best.as_ref().is_none_or(|(_, b)| f > b) {
                self.best = Some((x.clone(), *f));
            }
        }
        self.generation += 1;
        if fitness.iter().all(|f| *f == fitness[0]) {
            return Ok(());
        }
        let mut order: Vec<usize> = (0..self.lambda).collect();
        order.sort_by(|a, b| fitness[*b].total_cmp(&fitness[*a]));
        let n = self.dim;
        let ys: Vec<Vec<f64>> = order[..self.weights.len()]
            .iter()
            .map(|&k| candidates[k].iter().zip(&self.mean).map(|(x, m)| (x - m) / self.sigma).collect())
            .collect();
        let mut yw = vec![0.0; n];
        for (w, y) in self.weights.iter().zip(&ys) {
            for (a, b) in yw.iter_mut().zip(y) {
                *a += w * b;
            }
        }
        for (m, v) in self.mean.iter_mut().zip(&yw) {
            *m += self.sigma * v;
        }
        self.clamp_mean();

        let cy = self.whiten(&yw);
        let ks = sqrt(self.cs * (2.0 - self.cs) * self.mueff);
        for (p, c) in self.ps.iter_mut().zip(&cy) {
            *p = (1.0 - self.cs) * *p + ks * c;
        }
        let ps_norm = sqrt(self.ps.iter().map(|v| v * v).sum());
        let g = self.generation as f64;
        let denom = sqrt(1.0 - libm::pow(1.0 - self.cs, 2.0 * g));
        let hsig = ps_norm / denom / self.chi_n < 1.4 + 2.0 / (n as f64 + 1.0);
        let kc = sqrt(self.cc * (2.0 - self.cc) * self.mueff);
        for (p, y) in self.pc.iter_mut().zip(&yw) {
            *p = (1.0 - self.cc) * *p + if hsig { kc * y } else { 0.0 };
        }
        let decay = 1.0 - self.c1 - self.cmu + if hsig { 0.0 } else { self.c1 * self.cc * (2.0 - self.cc) };
        match self.mode {
            CovarianceMode::Separable => {
                for i in 0..n {
                    let rank_mu: f64 = self.weights.iter().zip(&ys).map(|(w, y)| w * y[i] * y[i]).sum();
                    let c = decay * self.cov[i] + self.c1 * self.pc[i] * self.pc[i] + self.cmu * rank_mu;
                    self.cov[i] = c.clamp(EIG_MIN, EIG_MAX);
                }
            }
            CovarianceMode::Full => {
                for i in 0..n {
                    for j in 0..=i {
                        let rank_mu: f64 = self.weights.iter().zip(&ys).map(|(w, y)| w * y[i] * y[j]).sum();
                        let c = decay * self.cov[i * n + j] + self.c1 * self.pc[i] * self.pc[j] + self.cmu * rank_mu;
                        self.cov[i * n + j] = c;
                        self.cov[j * n + i] = c;
                    }
                }
                self.decompose();
            }
        }
        self.sigma *= exp((self.cs / self.damps) * (ps_norm / self.chi_n - 1.0)).min(1e3);
        if !self.sigma.is_finite() || self.sigma <= 0.0 {
            self.sigma = f64::MIN_POSITIVE.max(1e-300);
        }
        Ok(())
    }

    /// Refreshes the eigenbasis, clamping eigenvalues and rebuilding `C` from them.
    fn decompose(&mut self) {
        let n = self.dim;
        let (vals, vecs) = sym_eigen(&self.cov, n);
        let vals: Vec<f64> = vals.iter().map(|v| v.clamp(EIG_MIN, EIG_MAX)).collect();
        for i in 0..n {
            for j in 0..n {
                self.cov[i * n + j] = (0..n).map(|k| vecs[i * n + k] * vals[k] * vecs[j * n + k]).sum();
            }
        }
        self.scales = vals.iter().map(|v| sqrt(*v)).collect();
        self.basis = vecs;
    }

    /// Runs `generations` ask/evaluate/tell rounds, evaluating candidates in parallel.
    pub fn optimize<F>(&mut self, generations: usize, f: F) -> Result<(), CmaesError>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        for _ in 0..generations {
            let xs = self.ask();
            let fs = par::map_indexed(xs.len(), |k| f(&xs[k]));
            self.tell(&xs, &fs)?;
        }
        Ok(())
    }
}

fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

/// Cyclic Jacobi eigendecomposition of a symmetric row-major matrix.
/// Returns eigenvalues and the eigenvectors as columns.
pub fn sym_eigen(a: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut a = a.to_vec();
    let mut v = identity(n);
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |j| *j != i).map(move |j| (i, j))).map(|(i, j)| a[i * n + j] * a[i * n + j]).sum();
        let diag: f64 = (0..n).map(|i| a[i * n + i] * a[i * n + i]).sum();
        if off <= 1e-30 * diag.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i * n + i]).collect(), v)
}
