//! Trajectory-level Monte Carlo for the same quantities the spectral code
//! computes in closed form.
//!
//! `X_0 ~ pi`, then the jump chain: hold an `Exp(-q_ww)` time at `w` and jump
//! to `j` with probability `q_wj / -q_ww`. Trial `i` of a run with seed `s`
//! draws from ChaCha8 stream `i` under key `s`, so results do not depend on
//! how trials are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chain::Chain;
use crate::error::{Error, Result};
use crate::par;

/// Trials per block; each block is summed sequentially, blocks pairwise.
const BLOCK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Covariance,
    FlipProbability,
    ReturnProbability,
}

impl Quantity {
    pub fn as_str(&self) -> &'static str {
        match self {
            Quantity::Covariance => "covariance",
            Quantity::FlipProbability => "flip_probability",
            Quantity::ReturnProbability => "return_probability",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryEstimate {
    pub quantity: Quantity,
    pub t: f64,
    pub point_estimate: f64,
    /// Sample standard deviation over `sqrt(trials)`.
    pub std_error: f64,
    pub trials: usize,
    pub seed: u64,
}

impl TrajectoryEstimate {
    /// `(estimate - exact) / std_error`; 0 when both the error and the
    /// difference vanish.
    pub fn z_score(&self, exact: f64) -> f64 {
        let diff = self.point_estimate - exact;
        if self.std_error > 0.0 {
            diff / self.std_error
        } else if diff.abs() <= 1e-12 {
            0.0
        } else {
            f64::INFINITY * diff.signum()
        }
    }
}

/// Precomputed inverse-CDF tables for a chain.
pub struct Sampler<'a> {
    chain: &'a Chain,
    cum_pi: Vec<f64>,
    exit: Vec<f64>,
    targets: Vec<Vec<usize>>,
    cum_jump: Vec<Vec<f64>>,
}

impl<'a> Sampler<'a> {
    pub fn new(chain: &'a Chain) -> Sampler<'a> {
        let n = chain.len();
        let mut cum_pi = Vec::with_capacity(n);
        let mut acc = 0.0;
        for p in chain.pi() {
            acc += p;
            cum_pi.push(acc);
        }
        let exit = chain.exit_rates();
        let mut targets = Vec::with_capacity(n);
        let mut cum_jump = Vec::with_capacity(n);
        for w in 0..n {
            let (mut ts, mut cs) = (Vec::new(), Vec::new());
            let mut acc = 0.0;
            for j in 0..n {
                let r = chain.rate(w, j);
                if j != w && r > 0.0 {
                    acc += r;
                    ts.push(j);
                    cs.push(acc);
                }
            }
            targets.push(ts);
            cum_jump.push(cs);
        }
        Sampler { chain, cum_pi, exit, targets, cum_jump }
    }

    fn pick(cum: &[f64], u: f64) -> usize {
        let total = *cum.last().unwrap();
        cum.partition_point(|&c| c <= u * total).min(cum.len() - 1)
    }

    /// One draw of `(X_0, X_t)`.
    pub fn endpoint<R: Rng>(&self, t: f64, rng: &mut R) -> (usize, usize) {
        let start = Self::pick(&self.cum_pi, rng.random::<f64>());
        let mut state = start;
        let mut clock = 0.0;
        loop {
            let rate = self.exit[state];
            if rate <= 0.0 {
                break;
            }
            // 1 - U lies in (0, 1], so the log is finite.
            clock += -(1.0 - rng.random::<f64>()).ln() / rate;
            if clock > t {
                break;
            }
            let k = Self::pick(&self.cum_jump[state], rng.random::<f64>());
            state = self.targets[state][k];
        }
        (start, state)
    }

    pub fn chain(&self) -> &Chain {
        self.chain
    }
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Exact-distribution sample of `(X_0, X_t)`.
pub fn sample_endpoint(chain: &Chain, t: f64, seed: u64) -> Result<(usize, usize)> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    Ok(Sampler::new(chain).endpoint(t, &mut trial_rng(seed, 0)))
}

fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n => pairwise_sum(&v[..n / 2]) + pairwise_sum(&v[n / 2..]),
    }
}

/// Mean and standard error of `score(X_0, X_t)` over independent trials.
fn run<F>(chain: &Chain, t: f64, trials: usize, seed: u64, score: F) -> Result<(f64, f64)>
where
    F: Fn(usize, usize) -> f64 + Sync + Send,
{
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    if trials == 0 {
        return Err(Error::InvalidParams("trials must be at least 1".into()));
    }
    let sampler = Sampler::new(chain);
    let blocks = trials.div_ceil(BLOCK);
    let sums = par::map_range(blocks, |b| {
        let (mut s, mut s2) = (0.0, 0.0);
        for trial in b * BLOCK..((b + 1) * BLOCK).min(trials) {
            let (x0, xt) = sampler.endpoint(t, &mut trial_rng(seed, trial));
            let y = score(x0, xt);
            s += y;
            s2 += y * y;
        }
        (s, s2)
    });
    let s: Vec<f64> = sums.iter().map(|p| p.0).collect();
    let s2: Vec<f64> = sums.iter().map(|p| p.1).collect();
    let n = trials as f64;
    let mean = pairwise_sum(&s) / n;
    let var = if trials > 1 { ((pairwise_sum(&s2) - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
    Ok((mean, (var / n).sqrt()))
}

/// Covariance estimate `E[(f(X_0) - m)(f(X_t) - m)]` with the exact mean
/// `m = E_pi[f]`, which has the same expectation as the plug-in
/// `E[f(X_0) f(X_t)] - m^2` under stationarity and a smaller variance.
pub fn estimate_cov(chain: &Chain, f: &[f64], t: f64, trials: usize, seed: u64) -> Result<TrajectoryEstimate> {
    if f.len() != chain.len() {
        return Err(Error::DimensionMismatch { expected: chain.len(), got: f.len() });
    }
    let constant = f.iter().all(|&v| v == f[0]);
    let (point_estimate, std_error) = if constant {
        (0.0, 0.0)
    } else {
        let mean: f64 = chain.pi().iter().zip(f).map(|(p, v)| p * v).sum();
        run(chain, t, trials, seed, |a, b| (f[a] - mean) * (f[b] - mean))?
    };
    Ok(TrajectoryEstimate { quantity: Quantity::Covariance, t, point_estimate, std_error, trials, seed })
}

/// Estimate of `E[(f(X_0) - f(X_t))^2]`, the flip probability for Boolean `f`.
pub fn estimate_flip(chain: &Chain, f: &[f64], t: f64, trials: usize, seed: u64) -> Result<TrajectoryEstimate> {
    if f.len() != chain.len() {
        return Err(Error::DimensionMismatch { expected: chain.len(), got: f.len() });
    }
    let (point_estimate, std_error) = run(chain, t, trials, seed, |a, b| (f[a] - f[b]).powi(2))?;
    Ok(TrajectoryEstimate { quantity: Quantity::FlipProbability, t, point_estimate, std_error, trials, seed })
}

/// Empirical `P(X_0 = X_t)`.
pub fn estimate_return_prob(chain: &Chain, t: f64, trials: usize, seed: u64) -> Result<TrajectoryEstimate> {
    let (point_estimate, std_error) = run(chain, t, trials, seed, |a, b| if a == b { 1.0 } else { 0.0 })?;
    Ok(TrajectoryEstimate { quantity: Quantity::ReturnProbability, t, point_estimate, std_error, trials, seed })
}

/// Empirical law of `X_t`.
pub fn endpoint_occupancy(chain: &Chain, t: f64, trials: usize, seed: u64) -> Result<Vec<f64>> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    let sampler = Sampler::new(chain);
    let n = chain.len();
    let blocks = trials.div_ceil(BLOCK);
    let counts = par::map_range(blocks, |b| {
        let mut c = vec![0usize; n];
        for trial in b * BLOCK..((b + 1) * BLOCK).min(trials) {
            c[sampler.endpoint(t, &mut trial_rng(seed, trial)).1] += 1;
        }
        c
    });
    let mut total = vec![0usize; n];
    for c in counts {
        for (t, v) in total.iter_mut().zip(c) {
            *t += v;
        }
    }
    Ok(total.into_iter().map(|c| c as f64 / trials as f64).collect())
}
