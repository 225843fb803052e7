//! Fourier profiles of observables and the noise sensitivity / stability
//! diagnostics built from them.
//!
//! Everything here is a function of the coefficients `fhat(i) = <f, psi_i>_pi`
//! and the spectrum. Curves are evaluated per eigenvalue band, so two
//! profiles with the same band masses give identical curves.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chain::Chain;
use crate::error::{Error, Result};
use crate::spectral::{SpectralDecomposition, BAND_TOL};

/// A real-valued function on the states.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Observable {
    values: Vec<f64>,
    is_boolean: bool,
}

impl Observable {
    /// Wrap arbitrary values; flagged Boolean if every value is 0 or 1.
    pub fn new(values: Vec<f64>) -> Observable {
        let is_boolean = values.iter().all(|&v| v == 0.0 || v == 1.0);
        Observable { values, is_boolean }
    }

    /// Indicator of the given state indices.
    pub fn indicator(size: usize, set: &[usize]) -> Observable {
        let mut values = vec![0.0; size];
        for &i in set {
            values[i] = 1.0;
        }
        Observable { values, is_boolean: true }
    }

    /// `f(w) = w[coordinate]` on a chain whose labels are bit strings.
    pub fn dictator(chain: &Chain, coordinate: usize) -> Result<Observable> {
        let values = (0..chain.len())
            .map(|s| {
                let bits = chain
                    .bits(s)
                    .ok_or_else(|| Error::BadSpec(format!("state {:?} is not a bit string", chain.states()[s])))?;
                bits.get(coordinate)
                    .map(|&b| b as f64)
                    .ok_or_else(|| Error::BadSpec(format!("coordinate {coordinate} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Observable { values, is_boolean: true })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_boolean(&self) -> bool {
        self.is_boolean
    }

    /// States where a Boolean observable equals 1.
    pub fn support(&self) -> Vec<usize> {
        (0..self.values.len()).filter(|&i| self.values[i] != 0.0).collect()
    }
}

/// Variance mass carried by one eigenvalue band.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandMass {
    pub lambda: f64,
    pub first_index: usize,
    pub dim: usize,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralProfile {
    pub fhat: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
    /// `E_pi[f^2] = sum_i fhat(i)^2`.
    pub second_moment: f64,
    /// Per band, including the zero band (which carries `mean^2`).
    pub band_masses: Vec<BandMass>,
    /// `fhat(i)^2 / sum_j fhat(j)^2`, undefined for `f = 0`.
    pub spectral_measure: Option<Vec<f64>>,
    /// `E_f[lambda]` under `spectral_measure`.
    pub mean_lambda: Option<f64>,
    pub eigenvalues: Vec<f64>,
    pub spectral_gap: f64,
    pub is_boolean: bool,
}

impl SpectralProfile {
    fn nonzero_bands(&self) -> impl Iterator<Item = &BandMass> {
        self.band_masses.iter().filter(|b| b.first_index > 0)
    }

    /// `Cov(f(X_0), f(X_{alpha t_rel}))` at a single alpha.
    pub fn covariance_at(&self, alpha: f64) -> f64 {
        self.nonzero_bands().map(|b| (-alpha * b.lambda / self.spectral_gap).exp() * b.mass).sum()
    }

    /// `E[(f(X_0) - f(X_{alpha t_rel}))^2]`, the flip probability for Boolean `f`.
    pub fn flip_at(&self, alpha: f64) -> f64 {
        2.0 * self.nonzero_bands().map(|b| -(-alpha * b.lambda / self.spectral_gap).exp_m1() * b.mass).sum::<f64>()
    }

    /// Covariance at absolute time `t`.
    pub fn covariance_at_time(&self, t: f64) -> f64 {
        self.covariance_at(t * self.spectral_gap)
    }
}

/// Coefficients of `f` in the eigenbasis and the quantities derived from them.
pub fn fourier_profile(dec: &SpectralDecomposition, f: &Observable) -> Result<SpectralProfile> {
    let n = dec.len();
    if f.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: f.len() });
    }
    let weighted: Vec<f64> = dec.pi().iter().zip(f.values()).map(|(p, v)| p * v).collect();
    let fhat: Vec<f64> = (0..n)
        .map(|i| dec.eigenvector(i).iter().zip(&weighted).map(|(a, b)| a * b).sum())
        .collect();
    let variance: f64 = fhat[1..].iter().map(|c| c * c).sum();
    let second_moment = fhat[0] * fhat[0] + variance;
    let band_masses = dec
        .bands()
        .iter()
        .map(|b| BandMass {
            lambda: b.lambda,
            first_index: b.indices.start,
            dim: b.dim(),
            mass: fhat[b.indices.clone()].iter().map(|c| c * c).sum(),
        })
        .collect();
    let (spectral_measure, mean_lambda) = if second_moment > 0.0 {
        let measure: Vec<f64> = fhat.iter().map(|c| c * c / second_moment).collect();
        let mean_lambda = measure.iter().zip(dec.eigenvalues()).map(|(p, l)| p * l).sum();
        (Some(measure), Some(mean_lambda))
    } else {
        (None, None)
    };
    Ok(SpectralProfile {
        mean: fhat[0],
        fhat,
        variance,
        second_moment,
        band_masses,
        spectral_measure,
        mean_lambda,
        eigenvalues: dec.eigenvalues().to_vec(),
        spectral_gap: dec.spectral_gap(),
        is_boolean: f.is_boolean(),
    })
}

/// Log-spaced alpha grid from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..points).map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp()).collect()
}

/// The default grid: 25 log-spaced points on `[1e-3, 1e1]`.
pub fn default_alpha_grid() -> Vec<f64> {
    log_grid(1e-3, 1e1, 25)
}

fn check_alphas(alphas: &[f64]) -> Result<()> {
    match alphas.iter().find(|a| !(**a > 0.0)) {
        Some(&a) => Err(Error::NonpositiveAlpha(a)),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub alpha: f64,
    pub value: f64,
}

/// `Cov(f(X_0), f(X_{alpha t_rel})) = sum_{i>=1} exp(-alpha lambda_i / lambda_1) fhat(i)^2`.
pub fn covariance_curve(profile: &SpectralProfile, alphas: &[f64]) -> Result<Vec<CurvePoint>> {
    check_alphas(alphas)?;
    Ok(alphas
        .iter()
        .map(|&alpha| CurvePoint { alpha, value: profile.covariance_at(alpha).clamp(0.0, profile.variance) })
        .collect())
}

/// `P(f(X_0) != f(X_{alpha t_rel})) = 2 sum_i (1 - exp(-alpha lambda_i / lambda_1)) fhat(i)^2`.
pub fn flip_curve(profile: &SpectralProfile, alphas: &[f64]) -> Result<Vec<CurvePoint>> {
    if !profile.is_boolean {
        return Err(Error::NotBoolean);
    }
    check_alphas(alphas)?;
    alphas
        .iter()
        .map(|&alpha| {
            let flip = profile.flip_at(alpha);
            let via_cov = 2.0 * (profile.variance - profile.covariance_at(alpha));
            if (flip - via_cov).abs() > 1e-10 {
                return Err(Error::NumericalFailure(format!("flip identity off by {:e}", flip - via_cov)));
            }
            Ok(CurvePoint { alpha, value: flip.clamp(0.0, 1.0) })
        })
        .collect()
}

/// One row of the curve CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveRow {
    pub alpha: f64,
    pub covariance: f64,
    pub flip_probability: Option<f64>,
}

/// Covariance and (for Boolean `f`) flip probability side by side.
pub fn curve_table(profile: &SpectralProfile, alphas: &[f64]) -> Result<Vec<CurveRow>> {
    let cov = covariance_curve(profile, alphas)?;
    let flip = if profile.is_boolean { Some(flip_curve(profile, alphas)?) } else { None };
    Ok(cov
        .iter()
        .enumerate()
        .map(|(i, c)| CurveRow {
            alpha: c.alpha,
            covariance: c.value,
            flip_probability: flip.as_ref().map(|f| f[i].value),
        })
        .collect())
}

fn in_tail(lambda: f64, gap: f64, k: f64) -> bool {
    lambda >= k * gap * (1.0 - BAND_TOL)
}

/// Mass of `fhat^2` on eigenvalues `lambda_i >= k lambda_1`.
pub fn stability_tail_mass(profile: &SpectralProfile, k: f64) -> f64 {
    profile
        .nonzero_bands()
        .filter(|b| in_tail(b.lambda, profile.spectral_gap, k))
        .map(|b| b.mass)
        .sum()
}

/// Mass of `fhat^2` on eigenvalues `lambda_1 <= lambda_i < k lambda_1`.
pub fn sensitivity_band_mass(profile: &SpectralProfile, k: f64) -> f64 {
    profile
        .nonzero_bands()
        .filter(|b| !in_tail(b.lambda, profile.spectral_gap, k))
        .map(|b| b.mass)
        .sum()
}

/// `P(X_0 = X_{t_rel})` against `sum_i pi(i)^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExistenceGap {
    pub return_probability: f64,
    pub collision_probability: f64,
    /// `return_probability - collision_probability`.
    pub gap: f64,
}

/// Return probability at the relaxation time minus the collision probability
/// of `pi`; equivalently the summed covariances of all point indicators.
pub fn sensitive_existence_gap(dec: &SpectralDecomposition) -> ExistenceGap {
    return_gap_at(dec, dec.relaxation_time())
}

pub(crate) fn return_gap_at(dec: &SpectralDecomposition, t: f64) -> ExistenceGap {
    let pi = dec.pi();
    let collision: f64 = pi.iter().map(|p| p * p).sum();
    // [H_t]_ww = sum_i exp(-lambda_i t) psi_i(w)^2 pi(w); the i = 0 term is the collision mass.
    let gap: f64 = (1..dec.len())
        .map(|i| {
            let weight: f64 = dec.eigenvector(i).iter().zip(pi).map(|(v, p)| p * p * v * v).sum();
            (-dec.eigenvalue(i) * t).exp() * weight
        })
        .sum();
    ExistenceGap { return_probability: collision + gap, collision_probability: collision, gap }
}

/// Indicator of a uniformly random `m`-subset of the states.
pub fn random_subset_indicator(chain: &Chain, m: usize, seed: u64) -> Result<Observable> {
    let n = chain.len();
    if m == 0 || m >= n {
        return Err(Error::BadSubsetSize { m, size: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = sample(&mut rng, n, m).into_vec();
    chosen.sort_unstable();
    Ok(Observable::indicator(n, &chosen))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubsetCovExpectation {
    pub value: f64,
    /// Whether `pi` is uniform. The subset average itself holds for any
    /// `pi`; the reading `m(N-m)/N^2 = Var` needs uniform `pi`.
    pub uniform_pi: bool,
}

/// Expected `Cov(f(X_0), f(X_{t_rel}))` for `f` the indicator of a uniform
/// random `m`-subset: `(N/(N-1)) (m(N-m)/N^2) (P(X_0 = X_{t_rel}) - sum pi^2)`.
pub fn expected_random_subset_cov(dec: &SpectralDecomposition, m: usize) -> Result<SubsetCovExpectation> {
    let n = dec.len();
    if m == 0 || m >= n {
        return Err(Error::BadSubsetSize { m, size: n });
    }
    let size = n as f64;
    let m = m as f64;
    let gap = sensitive_existence_gap(dec).gap;
    let value = size / (size - 1.0) * (m * (size - m) / (size * size)) * gap;
    let uniform = 1.0 / size;
    let uniform_pi = dec.pi().iter().all(|p| (p - uniform).abs() <= 1e-12);
    Ok(SubsetCovExpectation { value, uniform_pi })
}

/// Exact values at time `alpha T` next to the bounds that hold for every
/// finite chain: `Cov <= exp(-alpha lambda_1 T)` and
/// `flip >= 2 (1 - exp(-alpha lambda_1 T)) Var`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SharpnessReport {
    pub cov_upper: f64,
    pub covariance: f64,
    pub cov_holds: bool,
    pub flip_lower: Option<f64>,
    pub flip: Option<f64>,
    pub flip_holds: Option<bool>,
}

pub const SHARPNESS_SLACK: f64 = 1e-12;

pub fn sharpness_bounds(profile: &SpectralProfile, horizon: f64, alpha: f64) -> SharpnessReport {
    let x = alpha * profile.spectral_gap * horizon;
    let cov_upper = (-x).exp();
    let covariance = profile.covariance_at_time(alpha * horizon);
    let (flip_lower, flip) = if profile.is_boolean {
        let lower = -2.0 * (-x).exp_m1() * profile.variance;
        (Some(lower), Some(profile.flip_at(alpha * horizon * profile.spectral_gap)))
    } else {
        (None, None)
    };
    SharpnessReport {
        cov_upper,
        covariance,
        cov_holds: covariance <= cov_upper + SHARPNESS_SLACK,
        flip_lower,
        flip,
        flip_holds: flip.zip(flip_lower).map(|(f, l)| f >= l - SHARPNESS_SLACK),
    }
}

/// Function spec file contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FunctionSpec {
    Indicator {
        states: Vec<String>,
    },
    Dictator {
        coordinate: usize,
    },
    /// `1{psi >= c}` for a unit vector `psi` in `Psi_k`; `psi_1` unless
    /// coefficients over the band indices are given.
    Threshold {
        band_k: f64,
        c: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        coefficients: Option<Vec<f64>>,
    },
    Values {
        values: Vec<f64>,
    },
}

impl FunctionSpec {
    pub fn resolve(&self, chain: &Chain, dec: &SpectralDecomposition) -> Result<Observable> {
        match self {
            FunctionSpec::Indicator { states } => Ok(Observable::indicator(chain.len(), &chain.indices_of(states)?)),
            FunctionSpec::Dictator { coordinate } => Observable::dictator(chain, *coordinate),
            FunctionSpec::Threshold { band_k, c, coefficients } => {
                let dim = crate::spectral::band_subspace(dec, *band_k).len();
                let coeffs = coefficients.clone().unwrap_or_else(|| {
                    let mut e = vec![0.0; dim];
                    if dim > 0 {
                        e[0] = 1.0;
                    }
                    e
                });
                Ok(crate::stability::make_threshold_function(dec, *band_k, &coeffs, *c)?.indicator)
            }
            FunctionSpec::Values { values } => {
                if values.len() != chain.len() {
                    return Err(Error::DimensionMismatch { expected: chain.len(), got: values.len() });
                }
                Ok(Observable::new(values.clone()))
            }
        }
    }
}
