//! Heavy-tail models for collaboration counts and weights.
//!
//! Two models are fitted to integer-valued histograms:
//!
//! * truncated power law, `P(k) = A k^-alpha exp(-k / beta)`
//! * power law, `P(w) = B w^-lambda`
//!
//! The histogram is log-binned with geometric edges. Each bin covers a run of
//! integers `a..=b` and its density is the bin's probability mass divided by
//! the number of integers in it. Parameters minimise the count-weighted sum
//! of squared differences between the log density of each bin and the log of
//! the model averaged over the same integers. Weighting by bin count makes
//! the residuals roughly homoscedastic (the variance of a log count is about
//! `1 / count`), and averaging the model over the bin removes the
//! discretisation bias of evaluating it at a single representative point.
//!
//! The module also carries a rejection sampler for both models and a discrete
//! maximum-likelihood estimator of the power-law exponent used as a
//! cross-check.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use thiserror::Error;

use crate::format::round6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("need at least {needed} non-empty log bins, found {found}")]
    InsufficientPoints { needed: usize, found: usize },
    #[error("no convergence after {} iterations", .last.iterations)]
    NonConvergence { last: Box<FitResult> },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Counts of positive integer observations.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Histogram {
    counts: BTreeMap<u64, u64>,
}

impl Histogram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_values(values: impl IntoIterator<Item = u64>) -> Self {
        let mut h = Histogram::new();
        for v in values {
            h.add(v, 1);
        }
        h
    }

    pub fn add(&mut self, value: u64, count: u64) {
        if count > 0 {
            *self.counts.entry(value).or_insert(0) += count;
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn max_value(&self) -> Option<u64> {
        self.counts.keys().next_back().copied()
    }

    /// `(value, count)` in increasing value order.
    pub fn counts(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.counts.iter().map(|(&v, &c)| (v, c))
    }

    /// `(value, probability)` in increasing value order.
    pub fn probabilities(&self) -> Vec<(u64, f64)> {
        let total = self.total() as f64;
        self.counts().map(|(v, c)| (v, c as f64 / total)).collect()
    }

    pub fn mean(&self) -> Option<f64> {
        let total = self.total();
        (total > 0).then(|| self.counts().map(|(v, c)| v as f64 * c as f64).sum::<f64>() / total as f64)
    }
}

/// One geometric bin holding the integers `lo..=hi`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogBin {
    pub lo: u64,
    pub hi: u64,
    /// Geometric mean of the bin's integer edges.
    pub x: f64,
    /// Probability mass divided by the number of integers in the bin.
    pub density: f64,
    /// Raw observations in the bin.
    pub count: u64,
}

impl LogBin {
    pub fn width(&self) -> u64 {
        self.hi - self.lo + 1
    }
}

/// Log-bins a histogram with edges `1, ratio, ratio^2, ...`.
pub fn log_bin(hist: &Histogram, ratio: f64) -> Result<Vec<LogBin>, FitError> {
    log_bin_from(hist, ratio, 1)
}

/// Log-bins the part of `hist` at or above `start`, with edges
/// `start * ratio^i`. Probabilities are relative to the whole histogram. The
/// last bin stops at the largest observed value. Empty bins are dropped.
pub fn log_bin_from(hist: &Histogram, ratio: f64, start: u64) -> Result<Vec<LogBin>, FitError> {
    if !(ratio > 1.0) || !ratio.is_finite() {
        return Err(FitError::InvalidParameter(format!("bin ratio must exceed 1, got {ratio}")));
    }
    if start == 0 {
        return Err(FitError::InvalidParameter("bins start at 1 or above".into()));
    }
    if hist.counts.contains_key(&0) {
        return Err(FitError::InvalidParameter("histogram holds the value 0".into()));
    }
    let Some(max) = hist.max_value() else {
        return Ok(Vec::new());
    };
    let total = hist.total() as f64;
    let mut bins = Vec::new();
    let mut edge = start as f64;
    while edge <= max as f64 {
        let next = edge * ratio;
        let lo = edge.ceil() as u64;
        let hi = ((next.ceil() as u64).saturating_sub(1)).min(max);
        edge = next;
        if lo > hi {
            continue;
        }
        let count: u64 = hist.counts.range(lo..=hi).map(|(_, &c)| c).sum();
        if count == 0 {
            continue;
        }
        let width = (hi - lo + 1) as f64;
        bins.push(LogBin {
            lo,
            hi,
            x: ((lo as f64) * (hi as f64)).sqrt(),
            density: count as f64 / total / width,
            count,
        });
    }
    Ok(bins)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    TruncatedPowerLaw,
    PowerLaw,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::TruncatedPowerLaw => "truncated_power_law",
            Model::PowerLaw => "power_law",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: Model,
    /// Parameters in fit space: `[ln A, alpha, 1/beta]` or `[ln B, lambda]`.
    pub theta: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    /// Unweighted residual sum of squares in log space.
    pub rss: f64,
    /// Count-weighted residual sum of squares (the minimised objective).
    pub weighted_rss: f64,
    pub range_min: u64,
    pub range_max: u64,
    pub points: usize,
    pub iterations: usize,
}

impl FitResult {
    fn stderr(&self, i: usize) -> f64 {
        self.covariance[i][i].max(0.0).sqrt()
    }

    pub fn amplitude(&self) -> Estimate {
        let a = self.theta[0].exp();
        Estimate {
            value: a,
            stderr: a * self.stderr(0),
        }
    }

    /// Exponent `alpha` or `lambda`.
    pub fn exponent(&self) -> Estimate {
        Estimate {
            value: self.theta[1],
            stderr: self.stderr(1),
        }
    }

    /// `1/beta` for the truncated model, 0 for the pure power law.
    pub fn cutoff_rate(&self) -> Estimate {
        match self.model {
            Model::TruncatedPowerLaw => Estimate {
                value: self.theta[2],
                stderr: self.stderr(2),
            },
            Model::PowerLaw => Estimate { value: 0.0, stderr: 0.0 },
        }
    }

    /// Cutoff scale `beta`; infinite when the fitted rate is not positive.
    pub fn beta(&self) -> Estimate {
        let rate = self.cutoff_rate();
        if rate.value > 0.0 {
            Estimate {
                value: 1.0 / rate.value,
                stderr: rate.stderr / (rate.value * rate.value),
            }
        } else {
            Estimate {
                value: f64::INFINITY,
                stderr: f64::INFINITY,
            }
        }
    }

    /// Model probability density at integer `k`.
    pub fn density_at(&self, k: f64) -> f64 {
        let log = self.theta[0] - self.theta[1] * k.ln()
            - if self.model == Model::TruncatedPowerLaw { self.theta[2] * k } else { 0.0 };
        log.exp()
    }

    /// JSON with fields `model`, `params`, `stderr`, `rss`, `range`; floats at
    /// six significant digits, an infinite `beta` as `null`.
    pub fn to_json(&self) -> Value {
        let num = |x: f64| if x.is_finite() { json!(round6(x)) } else { Value::Null };
        let (params, stderr) = match self.model {
            Model::TruncatedPowerLaw => {
                let (a, al, b, r) = (self.amplitude(), self.exponent(), self.beta(), self.cutoff_rate());
                (
                    json!({"alpha": num(al.value), "beta": num(b.value), "rate": num(r.value), "amplitude": num(a.value)}),
                    json!({"alpha": num(al.stderr), "beta": num(b.stderr), "rate": num(r.stderr), "amplitude": num(a.stderr)}),
                )
            }
            Model::PowerLaw => {
                let (a, l) = (self.amplitude(), self.exponent());
                (
                    json!({"lambda": num(l.value), "amplitude": num(a.value)}),
                    json!({"lambda": num(l.stderr), "amplitude": num(a.stderr)}),
                )
            }
        };
        json!({
            "model": self.model.name(),
            "params": params,
            "stderr": stderr,
            "rss": num(self.rss),
            "weighted_rss": num(self.weighted_rss),
            "range": {"min": self.range_min, "max": self.range_max},
            "points": self.points,
            "iterations": self.iterations,
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub bin_ratio: f64,
    pub max_iterations: usize,
    /// Relative parameter change that counts as converged.
    pub tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            bin_ratio: 2.0,
            max_iterations: 200,
            tolerance: 1e-8,
        }
    }
}

// Bins narrower than this are summed exactly; wider tails use quadrature.
const DIRECT_SUM_LIMIT: u64 = 2048;

// 8-point Gauss-Legendre nodes and weights on [-1, 1].
const GL_NODES: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329_0,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362_0,
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Running log-sum-exp of terms `exp(t)` together with the `t`-weighted
/// averages of `ln k` and `k`.
#[derive(Default)]
struct Accumulator {
    max: f64,
    sum: f64,
    sum_ln: f64,
    sum_k: f64,
    started: bool,
}

impl Accumulator {
    fn push(&mut self, log_term: f64, ln_k: f64, k: f64) {
        if !self.started {
            self.max = log_term;
            self.started = true;
        } else if log_term > self.max {
            let scale = (self.max - log_term).exp();
            self.sum *= scale;
            self.sum_ln *= scale;
            self.sum_k *= scale;
            self.max = log_term;
        }
        let e = (log_term - self.max).exp();
        self.sum += e;
        self.sum_ln += e * ln_k;
        self.sum_k += e * k;
    }
}

/// `ln` of the mean of `k^-alpha exp(-rate k)` over `lo..=hi`, with its
/// partial derivatives in `alpha` and `rate`.
fn bin_log_mean(lo: u64, hi: u64, alpha: f64, rate: f64) -> (f64, f64, f64) {
    let mut acc = Accumulator::default();
    let direct_end = hi.min(lo.saturating_add(DIRECT_SUM_LIMIT - 1));
    for k in lo..=direct_end {
        let kf = k as f64;
        let ln_k = kf.ln();
        acc.push(-alpha * ln_k - rate * kf, ln_k, kf);
    }
    if direct_end < hi {
        // Midpoint-rule continuation: sum_{k=m}^{hi} f(k) ~ int_{m-1/2}^{hi+1/2} f,
        // integrated in u = ln x, where the relative error is O(k^-2).
        let (u0, u1) = (((direct_end + 1) as f64 - 0.5).ln(), (hi as f64 + 0.5).ln());
        let x_span = (hi - direct_end) as f64;
        let panels = ((u1 - u0) / 0.05).ceil().max((rate.abs() * x_span).ceil()).clamp(1.0, 1e5) as usize;
        let h = (u1 - u0) / panels as f64;
        for p in 0..panels {
            let mid = u0 + (p as f64 + 0.5) * h;
            for (node, weight) in GL_NODES.iter().zip(GL_WEIGHTS) {
                let u = mid + 0.5 * h * node;
                let x = u.exp();
                // dx = x du
                let log_term = -alpha * u - rate * x + u + (0.5 * h * weight).ln();
                acc.push(log_term, u, x);
            }
        }
    }
    let width = (hi - lo + 1) as f64;
    let log_mean = acc.max + acc.sum.ln() - width.ln();
    (log_mean, -acc.sum_ln / acc.sum, -acc.sum_k / acc.sum)
}

fn evaluate(model: Model, theta: &[f64], bin: &LogBin) -> (f64, [f64; 3]) {
    let (alpha, rate) = match model {
        Model::TruncatedPowerLaw => (theta[1], theta[2]),
        Model::PowerLaw => (theta[1], 0.0),
    };
    let (log_mean, d_alpha, d_rate) = bin_log_mean(bin.lo, bin.hi, alpha, rate);
    (theta[0] + log_mean, [1.0, d_alpha, d_rate])
}

/// Ordinary least-squares slope, intercept, and slope standard error.
fn ols(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let se = if xs.len() > 2 { (rss / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    (slope, intercept, se)
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

fn invert(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut cols = Vec::with_capacity(n);
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        cols.push(solve(a.to_vec(), e)?);
    }
    Some((0..n).map(|r| (0..n).map(|c| cols[c][r]).collect()).collect())
}

struct Objective {
    residuals: Vec<f64>,
    jacobian: Vec<Vec<f64>>,
    cost: f64,
    rss: f64,
}

fn objective(model: Model, theta: &[f64], bins: &[LogBin]) -> Objective {
    let p = theta.len();
    let mut residuals = Vec::with_capacity(bins.len());
    let mut jacobian = Vec::with_capacity(bins.len());
    let mut rss = 0.0;
    for bin in bins {
        let (m, grad) = evaluate(model, theta, bin);
        let sw = (bin.count as f64).sqrt();
        let r = m - bin.density.ln();
        rss += r * r;
        residuals.push(sw * r);
        jacobian.push(grad[..p].iter().map(|g| sw * g).collect());
    }
    let cost = residuals.iter().map(|r| r * r).sum();
    Objective {
        residuals,
        jacobian,
        cost,
        rss,
    }
}

/// Closed-form best `ln A` for fixed shape parameters.
fn best_log_amplitude(model: Model, theta: &[f64], bins: &[LogBin]) -> f64 {
    let mut t = theta.to_vec();
    t[0] = 0.0;
    let (mut num, mut den) = (0.0, 0.0);
    for bin in bins {
        let w = bin.count as f64;
        num += w * (bin.density.ln() - evaluate(model, &t, bin).0);
        den += w;
    }
    num / den
}

fn levenberg_marquardt(
    model: Model,
    mut theta: Vec<f64>,
    scales: &[f64],
    bins: &[LogBin],
    range: (u64, u64),
    opts: &FitOptions,
) -> Result<FitResult, FitError> {
    let p = theta.len();
    let mut current = objective(model, &theta, bins);
    let mut mu = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        iterations += 1;
        let mut jtj = vec![vec![0.0; p]; p];
        let mut jtr = vec![0.0; p];
        for (row, r) in current.jacobian.iter().zip(&current.residuals) {
            for a in 0..p {
                jtr[a] += row[a] * r;
                for b in 0..p {
                    jtj[a][b] += row[a] * row[b];
                }
            }
        }
        let mut stepped = false;
        while mu < 1e20 {
            let mut damped = jtj.clone();
            for (a, row) in damped.iter_mut().enumerate() {
                row[a] += mu * jtj[a][a].max(1e-300);
            }
            let Some(delta) = solve(damped, jtr.iter().map(|g| -g).collect()) else {
                mu *= 10.0;
                continue;
            };
            let trial: Vec<f64> = theta.iter().zip(&delta).map(|(t, d)| t + d).collect();
            let next = objective(model, &trial, bins);
            if next.cost.is_finite() && next.cost <= current.cost {
                let small = delta
                    .iter()
                    .zip(&theta)
                    .zip(scales)
                    .all(|((d, t), s)| d.abs() <= opts.tolerance * t.abs().max(*s));
                theta = trial;
                current = next;
                mu = (mu / 3.0).max(1e-12);
                stepped = true;
                converged = small;
                break;
            }
            mu *= 4.0;
        }
        if !stepped {
            // No descent direction left at machine precision: a stationary point.
            converged = true;
        }
        if converged {
            break;
        }
    }

    let mut jtj = vec![vec![0.0; p]; p];
    for row in &current.jacobian {
        for a in 0..p {
            for b in 0..p {
                jtj[a][b] += row[a] * row[b];
            }
        }
    }
    let dof = bins.len().saturating_sub(p).max(1) as f64;
    let s2 = current.cost / dof;
    let covariance = invert(&jtj)
        .map(|inv| inv.into_iter().map(|row| row.into_iter().map(|v| v * s2).collect()).collect())
        .unwrap_or_else(|| vec![vec![f64::INFINITY; p]; p]);
    let result = FitResult {
        model,
        theta,
        covariance,
        rss: current.rss,
        weighted_rss: current.cost,
        range_min: range.0,
        range_max: range.1,
        points: bins.len(),
        iterations,
    };
    if converged {
        Ok(result)
    } else {
        Err(FitError::NonConvergence {
            last: Box::new(result),
        })
    }
}

fn check_points(bins: &[LogBin], needed: usize) -> Result<(), FitError> {
    if bins.len() < needed {
        return Err(FitError::InsufficientPoints {
            needed,
            found: bins.len(),
        });
    }
    Ok(())
}

fn bins_range(bins: &[LogBin]) -> (u64, u64) {
    (bins.first().map_or(0, |b| b.lo), bins.last().map_or(0, |b| b.hi))
}

/// Fits `B w^-lambda` to already binned points (at least 3).
pub fn fit_power_law_bins(bins: &[LogBin], opts: &FitOptions) -> Result<FitResult, FitError> {
    check_points(bins, 3)?;
    let xs: Vec<f64> = bins.iter().map(|b| b.x.ln()).collect();
    let ys: Vec<f64> = bins.iter().map(|b| b.density.ln()).collect();
    let (slope, _, _) = ols(&xs, &ys);
    let mut theta = vec![0.0, -slope];
    theta[0] = best_log_amplitude(Model::PowerLaw, &theta, bins);
    levenberg_marquardt(Model::PowerLaw, theta, &[1.0, 1.0], bins, bins_range(bins), opts)
}

/// Fits `A k^-alpha exp(-k/beta)` to already binned points (at least 4).
pub fn fit_truncated_power_law_bins(bins: &[LogBin], opts: &FitOptions) -> Result<FitResult, FitError> {
    check_points(bins, 4)?;
    // alpha from a straight-line fit over the lower third; beta from the largest value
    let lower = bins.len().div_ceil(3).max(2);
    let xs: Vec<f64> = bins[..lower].iter().map(|b| b.x.ln()).collect();
    let ys: Vec<f64> = bins[..lower].iter().map(|b| b.density.ln()).collect();
    let (slope, _, _) = ols(&xs, &ys);
    let k_max = bins.last().unwrap().hi as f64;
    let mut theta = vec![0.0, -slope, 1.0 / k_max];
    theta[0] = best_log_amplitude(Model::TruncatedPowerLaw, &theta, bins);
    let scales = [1.0, 1.0, 1.0 / k_max];
    levenberg_marquardt(Model::TruncatedPowerLaw, theta, &scales, bins, bins_range(bins), opts)
}

pub fn fit_power_law(hist: &Histogram, w_min: u64, opts: &FitOptions) -> Result<FitResult, FitError> {
    let bins = log_bin_from(hist, opts.bin_ratio, w_min.max(1))?;
    fit_power_law_bins(&bins, opts)
}

pub fn fit_truncated_power_law(
    hist: &Histogram,
    k_min: u64,
    opts: &FitOptions,
) -> Result<FitResult, FitError> {
    let bins = log_bin_from(hist, opts.bin_ratio, k_min.max(1))?;
    fit_truncated_power_law_bins(&bins, opts)
}

/// Hurwitz zeta `sum_{k >= q} k^-s` for `s > 1`.
pub fn hurwitz_zeta(s: f64, q: u64) -> f64 {
    const TERMS: u64 = 1000;
    let direct: f64 = (q..q + TERMS).map(|k| (k as f64).powf(-s)).sum();
    // Euler-Maclaurin tail from K = q + TERMS
    let k = (q + TERMS) as f64;
    let tail = k.powf(1.0 - s) / (s - 1.0) + 0.5 * k.powf(-s) + s * k.powf(-s - 1.0) / 12.0
        - s * (s + 1.0) * (s + 2.0) * k.powf(-s - 3.0) / 720.0;
    direct + tail
}

/// Discrete maximum-likelihood exponent of a power law on `w >= w_min`,
/// with the standard error from the observed information.
pub fn mle_power_law(hist: &Histogram, w_min: u64) -> Result<Estimate, FitError> {
    let w_min = w_min.max(1);
    let (mut n, mut sum_ln) = (0.0, 0.0);
    for (v, c) in hist.counts().filter(|&(v, _)| v >= w_min) {
        n += c as f64;
        sum_ln += c as f64 * (v as f64).ln();
    }
    if n == 0.0 {
        return Err(FitError::InsufficientPoints { needed: 1, found: 0 });
    }
    let log_lik = |s: f64| -s * sum_ln - n * hurwitz_zeta(s, w_min).ln();
    let (mut a, mut b) = (1.0 + 1e-6, 20.0);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut c, mut d) = (b - g * (b - a), a + g * (b - a));
    let (mut fc, mut fd) = (log_lik(c), log_lik(d));
    for _ in 0..200 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = log_lik(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = log_lik(d);
        }
    }
    let s = 0.5 * (a + b);
    let h = 1e-4;
    let curvature = (log_lik(s + h) - 2.0 * log_lik(s) + log_lik(s - h)) / (h * h);
    Ok(Estimate {
        value: s,
        stderr: if curvature < 0.0 { (-1.0 / curvature).sqrt() } else { f64::INFINITY },
    })
}

/// Discrete distribution proportional to `k^-alpha exp(-k/beta)` on
/// `k >= k_min`. `beta` may be infinite (pure power law, needs `alpha > 1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedPowerLaw {
    alpha: f64,
    beta: f64,
    k_min: u64,
}

// Proposal draws beyond this are rejected; their target mass is negligible.
const PROPOSAL_CAP: f64 = 1e15;

impl TruncatedPowerLaw {
    pub fn new(alpha: f64, beta: f64, k_min: u64) -> Result<Self, FitError> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(FitError::InvalidParameter(format!("alpha must be positive, got {alpha}")));
        }
        if !(beta > 0.0) {
            return Err(FitError::InvalidParameter(format!("beta must be positive, got {beta}")));
        }
        if k_min < 1 {
            return Err(FitError::InvalidParameter("k_min must be at least 1".into()));
        }
        if beta.is_infinite() && alpha <= 1.0 {
            return Err(FitError::InvalidParameter(
                "a pure power law needs an exponent above 1".into(),
            ));
        }
        Ok(TruncatedPowerLaw { alpha, beta, k_min })
    }

    pub fn power_law(lambda: f64, k_min: u64) -> Result<Self, FitError> {
        Self::new(lambda, f64::INFINITY, k_min)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn k_min(&self) -> u64 {
        self.k_min
    }

    /// Unnormalised mass `k^-alpha exp(-k/beta)`.
    pub fn weight(&self, k: u64) -> f64 {
        if k < self.k_min {
            return 0.0;
        }
        let kf = k as f64;
        (-self.alpha * kf.ln() - kf / self.beta).exp()
    }

    /// Ratio of the target mass to the Pareto proposal mass on `[k, k+1)`,
    /// both without normalisation; decreasing in `k`.
    fn pareto_ratio(&self, k: f64) -> f64 {
        let a1 = self.alpha - 1.0;
        a1 / (k * -((-a1) * (1.0 / k).ln_1p()).exp_m1())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let k_min = self.k_min as f64;
        if self.alpha > 1.0 {
            let bound = self.pareto_ratio(k_min);
            loop {
                let u = 1.0 - rng.random::<f64>();
                let x = k_min * u.powf(-1.0 / (self.alpha - 1.0));
                if x >= PROPOSAL_CAP {
                    continue;
                }
                let k = x.floor();
                let accept = (-(k - k_min) / self.beta).exp() * self.pareto_ratio(k) / bound;
                if rng.random::<f64>() < accept {
                    return k as u64;
                }
            }
        } else {
            // Geometric proposal with mass proportional to exp(-(k - k_min)/beta).
            loop {
                let u = 1.0 - rng.random::<f64>();
                let g = (-self.beta * u.ln()).floor();
                let k = k_min + g;
                if k >= PROPOSAL_CAP {
                    continue;
                }
                let accept = (k / k_min).powf(-self.alpha);
                if rng.random::<f64>() < accept {
                    return k as u64;
                }
            }
        }
    }

    pub fn sample_n(&self, n: usize, seed: u64) -> Vec<u64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| self.sample(&mut rng)).collect()
    }
}

/// `n` i.i.d. draws from the truncated power law, reproducible per seed.
pub fn sample_truncated_power_law(
    alpha: f64,
    beta: f64,
    k_min: u64,
    n: usize,
    seed: u64,
) -> Result<Vec<u64>, FitError> {
    if n == 0 {
        return Err(FitError::InvalidParameter("sample size must be at least 1".into()));
    }
    Ok(TruncatedPowerLaw::new(alpha, beta, k_min)?.sample_n(n, seed))
}

/// `n` i.i.d. draws from the pure power law `w^-lambda`, `w >= w_min`.
pub fn sample_power_law(lambda: f64, w_min: u64, n: usize, seed: u64) -> Result<Vec<u64>, FitError> {
    sample_truncated_power_law(lambda, f64::INFINITY, w_min, n, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact_histogram(max: u64, scale: f64, f: impl Fn(f64) -> f64) -> Histogram {
        let mut h = Histogram::new();
        for k in 1..=max {
            h.add(k, (scale * f(k as f64)).round() as u64);
        }
        h
    }

    #[test]
    fn log_bin_point_mass() {
        let h = Histogram::from_values([1, 1, 1]);
        let bins = log_bin(&h, 2.0).unwrap();
        assert_eq!(bins.len(), 1);
        assert_eq!((bins[0].lo, bins[0].hi), (1, 1));
        assert_eq!(bins[0].density, 1.0);
    }

    #[test]
    fn log_bin_uniform_mass_gives_equal_densities() {
        // bins {1}, {2,3}, {4..7}, {8}: masses 1/8, 2/8, 4/8, 1/8 over widths 1, 2, 4, 1
        let h = Histogram::from_values(1..=8);
        let bins = log_bin(&h, 2.0).unwrap();
        let widths: Vec<u64> = bins.iter().map(LogBin::width).collect();
        assert_eq!(widths, vec![1, 2, 4, 1]);
        for b in &bins {
            assert_eq!(b.density, 0.125);
        }
        assert_eq!(bins[1].x, 6f64.sqrt());
    }

    #[test]
    fn log_bin_edge_cases() {
        assert!(log_bin(&Histogram::new(), 2.0).unwrap().is_empty());
        assert!(log_bin(&Histogram::from_values([3]), 1.0).is_err());
        assert!(log_bin(&Histogram::from_values([0, 3]), 2.0).is_err());
        // fractional ratios can leave integer-free bins; those are skipped
        let bins = log_bin(&Histogram::from_values(1..=20), 1.2).unwrap();
        assert!(bins.windows(2).all(|w| w[0].hi < w[1].lo));
        assert_eq!(bins.iter().map(|b| b.count).sum::<u64>(), 20);
    }

    #[test]
    fn noiseless_power_law_is_exact() {
        let h = exact_histogram(4096, 1e12, |k| k.powf(-2.0));
        let fit = fit_power_law(&h, 1, &FitOptions::default()).unwrap();
        assert!((fit.exponent().value - 2.0).abs() < 1e-6, "{fit:?}");
        assert!(fit.rss < 1e-10);
    }

    #[test]
    fn noiseless_truncated_power_law_is_exact() {
        let h = exact_histogram(3000, 1e15, |k| k.powf(-1.53) * (-k / 85.4).exp());
        let fit = fit_truncated_power_law(&h, 1, &FitOptions::default()).unwrap();
        assert!((fit.exponent().value - 1.53).abs() < 1e-4, "{fit:?}");
        assert!((fit.beta().value - 85.4).abs() < 0.05, "{fit:?}");
    }

    #[test]
    fn infinite_cutoff_limit() {
        let h = exact_histogram(5000, 1e12, |k| k.powf(-2.0));
        let fit = fit_truncated_power_law(&h, 1, &FitOptions::default()).unwrap();
        assert!((fit.exponent().value - 2.0).abs() < 1e-3, "{fit:?}");
        assert!(fit.cutoff_rate().value.abs() < 1e-6, "{fit:?}");
    }

    #[test]
    fn too_few_bins() {
        let h = Histogram::from_values([1, 2, 2]);
        assert_eq!(
            fit_power_law(&h, 1, &FitOptions::default()).unwrap_err(),
            FitError::InsufficientPoints { needed: 3, found: 2 }
        );
        let h = Histogram::from_values([1, 2, 4]);
        assert!(matches!(
            fit_truncated_power_law(&h, 1, &FitOptions::default()),
            Err(FitError::InsufficientPoints { needed: 4, found: 3 })
        ));
    }

    #[test]
    fn iteration_cap_reports_last_iterate() {
        let h = exact_histogram(3000, 1e12, |k| k.powf(-1.53) * (-k / 85.4).exp());
        let opts = FitOptions {
            max_iterations: 1,
            ..FitOptions::default()
        };
        match fit_truncated_power_law(&h, 1, &opts) {
            Err(FitError::NonConvergence { last }) => assert_eq!(last.iterations, 1),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn scaling_densities_moves_only_the_amplitude() {
        let h = Histogram::from_values(sample_truncated_power_law(1.53, 49.5, 1, 20_000, 3).unwrap());
        let bins = log_bin(&h, 2.0).unwrap();
        let scaled: Vec<LogBin> = bins
            .iter()
            .map(|b| LogBin {
                density: b.density * 7.5,
                ..b.clone()
            })
            .collect();
        let opts = FitOptions::default();
        let (a, b) = (
            fit_truncated_power_law_bins(&bins, &opts).unwrap(),
            fit_truncated_power_law_bins(&scaled, &opts).unwrap(),
        );
        assert!((a.exponent().value - b.exponent().value).abs() < 1e-6);
        assert!((a.beta().value - b.beta().value).abs() / a.beta().value < 1e-6);
        assert!((b.amplitude().value / a.amplitude().value - 7.5).abs() < 1e-6);

        let (a, b) = (
            fit_power_law_bins(&bins, &opts).unwrap(),
            fit_power_law_bins(&scaled, &opts).unwrap(),
        );
        assert!((a.exponent().value - b.exponent().value).abs() < 1e-9);
    }

    #[test]
    fn sampler_rejects_bad_parameters() {
        assert!(sample_truncated_power_law(1.5, 10.0, 1, 0, 1).is_err());
        assert!(sample_truncated_power_law(0.0, 10.0, 1, 5, 1).is_err());
        assert!(sample_truncated_power_law(1.5, -1.0, 1, 5, 1).is_err());
        assert!(sample_truncated_power_law(1.5, 10.0, 0, 5, 1).is_err());
        assert!(sample_power_law(0.9, 1, 5, 1).is_err());
    }

    #[test]
    fn sampler_is_deterministic() {
        let a = sample_truncated_power_law(1.53, 85.4, 1, 1000, 42).unwrap();
        let b = sample_truncated_power_law(1.53, 85.4, 1, 1000, 42).unwrap();
        let c = sample_truncated_power_law(1.53, 85.4, 1, 1000, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.iter().all(|&k| k >= 1));
    }

    #[test]
    fn small_alpha_uses_geometric_proposal() {
        let d = TruncatedPowerLaw::new(0.5, 20.0, 3).unwrap();
        let xs = d.sample_n(200_000, 9);
        assert!(xs.iter().all(|&k| k >= 3));
        let z: f64 = (3..5000).map(|k| d.weight(k)).sum();
        let mean: f64 = (3..5000).map(|k| k as f64 * d.weight(k)).sum::<f64>() / z;
        let emp = xs.iter().sum::<u64>() as f64 / xs.len() as f64;
        assert!((emp / mean - 1.0).abs() < 0.02, "{emp} vs {mean}");
    }

    #[test]
    fn hurwitz_zeta_known_values() {
        assert!((hurwitz_zeta(2.0, 1) - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-12);
        assert!((hurwitz_zeta(4.0, 1) - std::f64::consts::PI.powi(4) / 90.0).abs() < 1e-12);
        assert!((hurwitz_zeta(2.0, 2) - (std::f64::consts::PI.powi(2) / 6.0 - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn json_shape() {
        let h = exact_histogram(3000, 1e12, |k| k.powf(-1.53) * (-k / 85.4).exp());
        let fit = fit_truncated_power_law(&h, 1, &FitOptions::default()).unwrap();
        let v = fit.to_json();
        for key in ["model", "params", "stderr", "rss", "range"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["model"], "truncated_power_law");
        assert!(v["params"]["alpha"].as_f64().unwrap() > 1.5);
    }
}
