//! Low-frequency constructions: eigenvector truncations, probes of the
//! low band `Psi_k`, localization metrics and amplitude maxima.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::chain::Chain;
use crate::error::{Error, Result};
use crate::noise::Observable;
use crate::par;
use crate::spectral::{band_subspace, inner_pi, SpectralDecomposition};

/// `1{psi >= c}` for a unit vector `psi` in `Psi_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdFunction {
    pub band_k: f64,
    /// Eigenvector indices spanning `Psi_k`.
    pub band: Vec<usize>,
    pub coefficients: Vec<f64>,
    pub psi: Vec<f64>,
    pub c: f64,
    #[serde(skip)]
    pub indicator: Observable,
}

fn combine(dec: &SpectralDecomposition, band: &[usize], coefficients: &[f64]) -> Vec<f64> {
    let mut psi = vec![0.0; dec.len()];
    for (&i, &a) in band.iter().zip(coefficients) {
        for (p, v) in psi.iter_mut().zip(dec.eigenvector(i)) {
            *p += a * v;
        }
    }
    psi
}

fn normalized(dec: &SpectralDecomposition, mut psi: Vec<f64>) -> Vec<f64> {
    let norm = dec.inner(&psi, &psi).sqrt();
    psi.iter_mut().for_each(|v| *v /= norm);
    psi
}

/// Build `1{psi >= c}` from coefficients over [`band_subspace`]`(dec, band_k)`.
pub fn make_threshold_function(
    dec: &SpectralDecomposition,
    band_k: f64,
    coefficients: &[f64],
    c: f64,
) -> Result<ThresholdFunction> {
    let band = band_subspace(dec, band_k);
    if band.is_empty() {
        return Err(Error::EmptySubspace);
    }
    if coefficients.len() != band.len() {
        return Err(Error::DimensionMismatch { expected: band.len(), got: coefficients.len() });
    }
    if coefficients.iter().all(|&a| a == 0.0) {
        return Err(Error::ZeroCoefficients);
    }
    let psi = normalized(dec, combine(dec, &band, coefficients));
    let indicator = Observable::new(psi.iter().map(|&v| if v >= c { 1.0 } else { 0.0 }).collect());
    Ok(ThresholdFunction { band_k, band, coefficients: coefficients.to_vec(), psi, c, indicator })
}

/// Parameters of [`threshold_sweep`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub band_k: f64,
    /// Both sides of the cut must carry more than this mass; in `(0, 1/2)`.
    pub delta: f64,
    /// `g(eps) = eps^g_exponent`, in `(0, 1/2)`.
    pub g_exponent: f64,
    /// Ascending grid used both for `eps` and for the flip criterion.
    pub alphas: Vec<f64>,
    /// Extra random unit vectors from `Psi_k` besides `psi_1`.
    pub samples: usize,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            band_k: 1.0,
            delta: 0.2,
            g_exponent: 1.0 / 3.0,
            alphas: crate::noise::default_alpha_grid(),
            samples: 0,
            seed: 0,
        }
    }
}

/// One cut `{psi >= c}` examined by the sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdCandidate {
    /// 0 for `psi_1`, `j` for the `j`-th random sample.
    pub source: usize,
    pub c: f64,
    pub mass_above: f64,
    pub mass_below: f64,
    pub admissible: bool,
    /// `P(|psi - c| <= g(eps))` at the smallest grid `eps`.
    pub interval_mass_min_eps: f64,
    /// Supremum of the interval mass over the grid.
    pub interval_mass_sup: f64,
    /// Flip probability of the indicator at the smallest grid alpha.
    pub flip_min_alpha: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdSweepReport {
    pub config: SweepConfig,
    pub best: ThresholdFunction,
    pub best_candidate: ThresholdCandidate,
    /// Interval masses of the winner, aligned with `config.alphas`.
    pub best_interval_masses: Vec<f64>,
    pub candidates: Vec<ThresholdCandidate>,
}

struct SortedPsi {
    values: Vec<f64>,
    order: Vec<usize>,
    /// `cum_mass[j]` is the pi-mass of the `j` smallest values.
    cum_mass: Vec<f64>,
}

impl SortedPsi {
    fn new(psi: &[f64], pi: &[f64]) -> SortedPsi {
        let mut order: Vec<usize> = (0..psi.len()).collect();
        order.sort_by(|&a, &b| psi[a].total_cmp(&psi[b]));
        let values: Vec<f64> = order.iter().map(|&i| psi[i]).collect();
        let mut cum_mass = Vec::with_capacity(psi.len() + 1);
        cum_mass.push(0.0);
        for &i in &order {
            cum_mass.push(cum_mass.last().unwrap() + pi[i]);
        }
        SortedPsi { values, order, cum_mass }
    }

    /// pi-mass of `{lo <= psi <= hi}`.
    fn mass_between(&self, lo: f64, hi: f64) -> f64 {
        let a = self.values.partition_point(|&v| v < lo);
        let b = self.values.partition_point(|&v| v <= hi);
        if b > a {
            self.cum_mass[b] - self.cum_mass[a]
        } else {
            0.0
        }
    }
}

fn flip_from_fhat(dec: &SpectralDecomposition, fhat: &[f64], alpha: f64) -> f64 {
    let gap = dec.spectral_gap();
    2.0 * (1..fhat.len())
        .map(|i| -(-alpha * dec.eigenvalue(i) / gap).exp_m1() * fhat[i] * fhat[i])
        .sum::<f64>()
}

fn sweep_one(dec: &SpectralDecomposition, source: usize, psi: &[f64], cfg: &SweepConfig) -> Vec<ThresholdCandidate> {
    let n = dec.len();
    let pi = dec.pi();
    let sorted = SortedPsi::new(psi, pi);
    let alpha_min = cfg.alphas[0];
    let widths: Vec<f64> = cfg.alphas.iter().map(|e| e.powf(cfg.g_exponent)).collect();
    let mut fhat = vec![0.0; n];
    let mut out = Vec::with_capacity(n + 1);
    let max = sorted.values[n - 1];
    let mut push = |c: f64, mass_above: f64, fhat: &[f64]| {
        let mass_below = (1.0 - mass_above).max(0.0);
        let masses: Vec<f64> = widths.iter().map(|w| sorted.mass_between(c - w, c + w)).collect();
        out.push(ThresholdCandidate {
            source,
            c,
            mass_above,
            mass_below,
            admissible: mass_above > cfg.delta && mass_below > cfg.delta,
            interval_mass_min_eps: masses[0],
            interval_mass_sup: masses.iter().copied().fold(0.0, f64::max),
            flip_min_alpha: flip_from_fhat(dec, fhat, alpha_min),
        });
    };
    // Empty superlevel set first, then grow it one distinct value at a time.
    push(max + 1.0, 0.0, &fhat);
    let mut j = n;
    while j > 0 {
        let c = sorted.values[j - 1];
        while j > 0 && sorted.values[j - 1] == c {
            let w = sorted.order[j - 1];
            for (i, f) in fhat.iter_mut().enumerate() {
                *f += pi[w] * dec.eigenvector(i)[w];
            }
            j -= 1;
        }
        push(c, 1.0 - sorted.cum_mass[j], &fhat);
    }
    out
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn substream(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Sweep every threshold of `psi_1` (and optionally of random vectors in
/// `Psi_k`), returning the admissible cut with the smallest flip
/// probability at the smallest grid alpha.
pub fn threshold_sweep(dec: &SpectralDecomposition, cfg: &SweepConfig) -> Result<ThresholdSweepReport> {
    if !(cfg.delta > 0.0 && cfg.delta < 0.5) {
        return Err(Error::InvalidParams(format!("delta {} not in (0, 1/2)", cfg.delta)));
    }
    if !(cfg.g_exponent > 0.0 && cfg.g_exponent < 0.5) {
        return Err(Error::InvalidParams(format!("g exponent {} not in (0, 1/2)", cfg.g_exponent)));
    }
    if cfg.alphas.is_empty() {
        return Err(Error::InvalidParams("empty alpha grid".into()));
    }
    if let Some(&a) = cfg.alphas.iter().find(|a| !(**a > 0.0)) {
        return Err(Error::NonpositiveAlpha(a));
    }
    if cfg.alphas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParams("alpha grid must be strictly ascending".into()));
    }
    let band = band_subspace(dec, cfg.band_k);
    let mut sources: Vec<Vec<f64>> = vec![{
        let mut e = vec![0.0; band.len()];
        e[0] = 1.0;
        e
    }];
    for j in 1..=cfg.samples {
        sources.push(random_unit(&mut substream(cfg.seed, j), band.len()));
    }
    let psis: Vec<Vec<f64>> = sources.iter().map(|a| normalized(dec, combine(dec, &band, a))).collect();
    let per_source = par::map_range(psis.len(), |s| sweep_one(dec, s, &psis[s], cfg));
    let candidates: Vec<ThresholdCandidate> = per_source.into_iter().flatten().collect();

    let best = candidates
        .iter()
        .filter(|c| c.admissible)
        .fold(None::<&ThresholdCandidate>, |best, c| match best {
            Some(b) if b.flip_min_alpha <= c.flip_min_alpha => Some(b),
            _ => Some(c),
        })
        .ok_or(Error::NoAdmissibleThreshold)?
        .clone();
    let function = make_threshold_function(dec, cfg.band_k, &sources[best.source], best.c)?;
    let sorted = SortedPsi::new(&function.psi, dec.pi());
    let best_interval_masses = cfg
        .alphas
        .iter()
        .map(|e| {
            let w = e.powf(cfg.g_exponent);
            sorted.mass_between(best.c - w, best.c + w)
        })
        .collect();
    Ok(ThresholdSweepReport {
        config: cfg.clone(),
        best: function,
        best_candidate: best,
        best_interval_masses,
        candidates,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMode {
    /// Mass `pi(w) psi(w)^2`.
    PiWeighted,
    /// Mass `psi(w)^2`.
    Counting,
}

/// What to measure localization of.
#[derive(Debug, Clone, PartialEq)]
pub enum LocalizationTarget {
    Vector(Vec<f64>),
    /// Eigenvector indices; per-state mass summed over the band.
    Band(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalizationLevel {
    pub delta: f64,
    pub min_l: usize,
    pub achieving_set: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalizationReport {
    pub norm_mode: NormMode,
    pub mass: Vec<f64>,
    pub total: f64,
    pub levels: Vec<LocalizationLevel>,
    /// `M_w`, present for band targets.
    pub amplitude_max: Option<Vec<f64>>,
}

/// Smallest `L` such that some `L` states carry at least `(1 - delta)` of the
/// total mass, with the achieving set. A descending-mass prefix is optimal.
pub fn localization_from_masses(mass: &[f64], deltas: &[f64]) -> Result<Vec<LocalizationLevel>> {
    let total: f64 = mass.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroVector);
    }
    let mut order: Vec<usize> = (0..mass.len()).collect();
    order.sort_by(|&a, &b| mass[b].total_cmp(&mass[a]).then(a.cmp(&b)));
    let mut prefix = Vec::with_capacity(mass.len());
    let mut acc = 0.0;
    for &i in &order {
        acc += mass[i];
        prefix.push(acc);
    }
    deltas
        .iter()
        .map(|&delta| {
            if !(delta > 0.0 && delta < 1.0) {
                return Err(Error::InvalidParams(format!("delta {delta} not in (0, 1)")));
            }
            let target = (1.0 - delta) * total - 1e-12 * total;
            let min_l = prefix.iter().position(|&p| p >= target).map_or(mass.len(), |p| p + 1);
            let mut achieving_set = order[..min_l].to_vec();
            achieving_set.sort_unstable();
            Ok(LocalizationLevel { delta, min_l, achieving_set })
        })
        .collect()
}

pub fn localization_report(
    dec: &SpectralDecomposition,
    target: &LocalizationTarget,
    norm_mode: NormMode,
    deltas: &[f64],
) -> Result<LocalizationReport> {
    let pi = dec.pi();
    let weight = |w: usize| match norm_mode {
        NormMode::PiWeighted => pi[w],
        NormMode::Counting => 1.0,
    };
    let (mass, amplitude_max): (Vec<f64>, _) = match target {
        LocalizationTarget::Vector(v) => {
            if v.len() != dec.len() {
                return Err(Error::DimensionMismatch { expected: dec.len(), got: v.len() });
            }
            ((0..v.len()).map(|w| weight(w) * v[w] * v[w]).collect(), None)
        }
        LocalizationTarget::Band(band) => {
            let m = band_amplitude_max(dec, band)?;
            ((0..m.len()).map(|w| weight(w) * m[w]).collect(), Some(m))
        }
    };
    let levels = localization_from_masses(&mass, deltas)?;
    let total = mass.iter().sum();
    Ok(LocalizationReport { norm_mode, mass, total, levels, amplitude_max })
}

/// `M_w = sum_{i in band} psi_i(w)^2`, the largest value of `psi(w)^2` over
/// unit vectors `psi` in the band; independent of the basis chosen.
pub fn band_amplitude_max(dec: &SpectralDecomposition, band: &[usize]) -> Result<Vec<f64>> {
    if band.is_empty() {
        return Err(Error::EmptyBand);
    }
    let mut m = vec![0.0; dec.len()];
    for &i in band {
        for (acc, v) in m.iter_mut().zip(dec.eigenvector(i)) {
            *acc += v * v;
        }
    }
    Ok(m)
}

/// `sum_w pi(w) M_w`, which equals the band dimension.
pub fn amplitude_weighted_sum(dec: &SpectralDecomposition, amplitude: &[f64]) -> f64 {
    dec.pi().iter().zip(amplitude).map(|(p, m)| p * m).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeMethod {
    Exact,
    AngleGrid,
    RandomAscent,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub k: f64,
    pub epsilon: f64,
    pub band: Vec<usize>,
    pub method: ProbeMethod,
    /// Achieved `P_pi(psi^2 >= epsilon)`; a lower bound on the supremum.
    pub best_probability: f64,
    pub witness_coefficients: Vec<f64>,
    pub witness: Vec<f64>,
    pub evaluations: usize,
}

fn prob_above(pi: &[f64], psi: &[f64], eps: f64) -> f64 {
    let cut = eps * (1.0 - 1e-12);
    psi.iter().zip(pi).filter(|(v, _)| *v * *v >= cut).map(|(_, p)| p).sum()
}

/// Search unit `psi` in `Psi_k` maximizing `P_pi(psi(w)^2 >= epsilon)`.
///
/// Exact for a one-dimensional band, a `budget`-point angle grid for two
/// dimensions, and `budget` seeded random starts with coordinate ascent
/// otherwise.
pub fn condition_b_probe(
    dec: &SpectralDecomposition,
    k: f64,
    epsilon: f64,
    budget: usize,
    seed: u64,
) -> Result<ProbeReport> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParams(format!("epsilon {epsilon} must be positive")));
    }
    let budget = budget.max(1);
    let band = band_subspace(dec, k);
    let pi = dec.pi();
    let eval = |a: &[f64]| {
        let psi = normalized(dec, combine(dec, &band, a));
        (prob_above(pi, &psi, epsilon), psi)
    };
    let (method, coeffs, evaluations) = match band.len() {
        1 => (ProbeMethod::Exact, vec![1.0], 1),
        2 => {
            let scored = par::map_range(budget, |j| {
                let theta = std::f64::consts::PI * j as f64 / budget as f64;
                let a = vec![theta.cos(), theta.sin()];
                (eval(&a).0, a)
            });
            let best = pick_best(scored);
            (ProbeMethod::AngleGrid, best, budget)
        }
        dim => {
            let steps = [0.5, -0.5, 0.25, -0.25, 0.1, -0.1];
            let scored = par::map_range(budget, |j| {
                let mut a = random_unit(&mut substream(seed, j), dim);
                let mut score = eval(&a).0;
                for _ in 0..3 {
                    let mut improved = false;
                    for i in 0..dim {
                        for s in steps {
                            let mut b = a.clone();
                            b[i] += s;
                            let norm = b.iter().map(|x| x * x).sum::<f64>().sqrt();
                            if norm < 1e-12 {
                                continue;
                            }
                            b.iter_mut().for_each(|x| *x /= norm);
                            let trial = eval(&b).0;
                            if trial > score {
                                score = trial;
                                a = b;
                                improved = true;
                            }
                        }
                    }
                    if !improved {
                        break;
                    }
                }
                (score, a)
            });
            (ProbeMethod::RandomAscent, pick_best(scored), budget)
        }
    };
    let (best_probability, witness) = eval(&coeffs);
    Ok(ProbeReport {
        k,
        epsilon,
        band,
        method,
        best_probability,
        witness_coefficients: coeffs,
        witness,
        evaluations,
    })
}

fn pick_best(scored: Vec<(f64, Vec<f64>)>) -> Vec<f64> {
    scored
        .into_iter()
        .fold(None::<(f64, Vec<f64>)>, |best, (s, a)| match best {
            Some((bs, ba)) if bs >= s => Some((bs, ba)),
            _ => Some((s, a)),
        })
        .map(|(_, a)| a)
        .expect("budget >= 1")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DelocalizationCheck {
    /// `E[psi | A]^2`.
    pub lhs: f64,
    /// `pi(A^c) / pi(A)^2`.
    pub rhs: f64,
    pub holds: bool,
}

/// For centered unit `psi`: `E[psi | A]^2 <= pi(A^c) / pi(A)^2`.
pub fn delocalization_bound_check(pi: &[f64], psi: &[f64], set: &[usize]) -> Result<DelocalizationCheck> {
    if psi.len() != pi.len() {
        return Err(Error::DimensionMismatch { expected: pi.len(), got: psi.len() });
    }
    let norm = inner_pi(pi, psi, psi);
    let mean: f64 = pi.iter().zip(psi).map(|(p, v)| p * v).sum();
    if (norm - 1.0).abs() > 1e-9 || mean.abs() > 1e-9 {
        return Err(Error::BadNormalization(format!("norm {norm}, mean {mean:e}")));
    }
    let mut member = vec![false; pi.len()];
    for &w in set {
        member[w] = true;
    }
    let count = member.iter().filter(|&&m| m).count();
    if count == 0 || count == pi.len() {
        return Err(Error::TrivialSet);
    }
    let (mut mass, mut mass_out, mut partial) = (0.0, 0.0, 0.0);
    for w in 0..pi.len() {
        if member[w] {
            mass += pi[w];
            partial += pi[w] * psi[w];
        } else {
            mass_out += pi[w];
        }
    }
    let lhs = (partial / mass).powi(2);
    let rhs = mass_out / (mass * mass);
    Ok(DelocalizationCheck { lhs, rhs, holds: lhs <= rhs + 1e-10 })
}

/// All proper nonempty sets `{v >= c}` for distinct values `c` of `v`.
pub fn superlevel_sets(v: &[f64]) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[b].total_cmp(&v[a]));
    let mut sets = Vec::new();
    let mut j = 0;
    while j < order.len() {
        let c = v[order[j]];
        while j < order.len() && v[order[j]] == c {
            j += 1;
        }
        if j < order.len() {
            let mut s = order[..j].to_vec();
            s.sort_unstable();
            sets.push(s);
        }
    }
    sets
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AutomorphismReport {
    pub generator_error: f64,
    pub pi_error: f64,
    /// pi-norm of the part of `psi_i o phi` outside the band of `lambda_i`.
    pub out_of_band: Vec<f64>,
    pub worst_out_of_band: f64,
    pub passed: bool,
}

/// Check that a generator-preserving permutation maps every eigenvector into
/// its own eigenspace.
pub fn automorphism_invariance_check(
    chain: &Chain,
    dec: &SpectralDecomposition,
    perm: &[usize],
) -> Result<AutomorphismReport> {
    let n = chain.len();
    let mut seen = vec![false; n];
    if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
        return Err(Error::NotAnAutomorphism("not a permutation of the states".into()));
    }
    let mut generator_error = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            generator_error = generator_error.max((chain.rate(perm[i], perm[j]) - chain.rate(i, j)).abs());
        }
    }
    if generator_error > 1e-10 {
        return Err(Error::NotAnAutomorphism(format!("generator changes by {generator_error:e}")));
    }
    let pi = dec.pi();
    let pi_error = (0..n).map(|i| (pi[perm[i]] - pi[i]).abs()).fold(0.0, f64::max);
    let out_of_band = par::map_range(n, |i| {
        let psi = dec.eigenvector(i);
        let moved: Vec<f64> = (0..n).map(|w| psi[perm[w]]).collect();
        let mut residual = moved.clone();
        for j in dec.bands()[dec.band_of(i)].indices.clone() {
            let coef = dec.inner(&moved, dec.eigenvector(j));
            for (r, v) in residual.iter_mut().zip(dec.eigenvector(j)) {
                *r -= coef * v;
            }
        }
        dec.inner(&residual, &residual).sqrt()
    });
    let worst_out_of_band = out_of_band.iter().copied().fold(0.0, f64::max);
    Ok(AutomorphismReport {
        generator_error,
        pi_error,
        out_of_band,
        worst_out_of_band,
        passed: worst_out_of_band <= 1e-8 && pi_error <= 1e-10,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{make_family, FamilySpec};
    use crate::noise::{fourier_profile, flip_curve};
    use crate::spectral::decompose;
    use nalgebra::DMatrix;

    fn setup(spec: FamilySpec) -> (Chain, SpectralDecomposition) {
        let c = make_family(&spec).unwrap();
        let d = decompose(&c).unwrap();
        (c, d)
    }

    fn is_cyclic_arc(members: &[bool]) -> bool {
        let n = members.len();
        let starts = (0..n).filter(|&i| members[i] && !members[(i + n - 1) % n]).count();
        starts <= 1
    }

    #[test]
    fn threshold_two_state() {
        let (_, d) = setup(FamilySpec::HypercubeRerandomize { n: 1 });
        let t = make_threshold_function(&d, 1.0, &[1.0], 0.0).unwrap();
        assert_eq!(t.indicator.support().len(), 1);
        assert!((d.inner(&t.psi, &t.psi) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn threshold_cycle_is_arc() {
        let (_, d) = setup(FamilySpec::Cycle { n: 4 });
        for coeffs in [[1.0, 0.0], [0.0, 1.0], [0.3, -0.7]] {
            let t = make_threshold_function(&d, 1.0, &coeffs, 0.0).unwrap();
            let members: Vec<bool> = t.indicator.values().iter().map(|&v| v == 1.0).collect();
            assert!(is_cyclic_arc(&members), "{members:?}");
            let count = members.iter().filter(|&&m| m).count();
            assert!((3..=5).contains(&count), "{count}");
        }
    }

    #[test]
    fn threshold_errors_and_empty() {
        let (_, d) = setup(FamilySpec::Cycle { n: 4 });
        let t = make_threshold_function(&d, 1.0, &[1.0, 0.0], 100.0).unwrap();
        assert!(t.indicator.values().iter().all(|&v| v == 0.0));
        assert_eq!(make_threshold_function(&d, 1.0, &[0.0, 0.0], 0.0).unwrap_err(), Error::ZeroCoefficients);
        assert!(matches!(make_threshold_function(&d, 1.0, &[1.0], 0.0), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn sweep_cycle_finds_arc() {
        let (_, d) = setup(FamilySpec::Cycle { n: 8 });
        let r = threshold_sweep(&d, &SweepConfig::default()).unwrap();
        let members: Vec<bool> = r.best.indicator.values().iter().map(|&v| v == 1.0).collect();
        assert!(is_cyclic_arc(&members));
        let p = fourier_profile(&d, &r.best.indicator).unwrap();
        let flips = flip_curve(&p, &[1e-6, 1e-3]).unwrap();
        assert!(flips[0].value < 1e-5);
        assert!(flips[0].value < flips[1].value);
    }

    #[test]
    fn sweep_complete_graph() {
        let (_, d) = setup(FamilySpec::Complete { n: 3 });
        let r = threshold_sweep(&d, &SweepConfig::default()).unwrap();
        let p = fourier_profile(&d, &r.best.indicator).unwrap();
        for pt in flip_curve(&p, &[0.1, 1.0]).unwrap() {
            assert!(pt.value <= 2.0 * (1.0 - (-pt.alpha).exp()) * p.variance + 1e-12);
        }
    }

    #[test]
    fn sweep_no_admissible() {
        let q = DMatrix::from_row_slice(2, 2, &[-0.7, 0.7, 0.3, -0.3]);
        let c = Chain::new(vec!["a".into(), "b".into()], q, None).unwrap();
        let d = decompose(&c).unwrap();
        let cfg = SweepConfig { delta: 0.49, ..SweepConfig::default() };
        assert_eq!(threshold_sweep(&d, &cfg).unwrap_err(), Error::NoAdmissibleThreshold);
    }

    #[test]
    fn sweep_with_samples_is_deterministic() {
        let (_, d) = setup(FamilySpec::HypercubeWalk { n: 3 });
        let cfg = SweepConfig { samples: 4, seed: 9, ..SweepConfig::default() };
        let a = threshold_sweep(&d, &cfg).unwrap();
        let b = threshold_sweep(&d, &cfg).unwrap();
        assert_eq!(a.best_candidate, b.best_candidate);
        assert_eq!(a.candidates.len(), 5 * 9);
    }

    #[test]
    fn localization_examples() {
        let masses = [0.9, 0.05, 0.03, 0.02];
        let l = localization_from_masses(&masses, &[0.1]).unwrap();
        assert_eq!(l[0].min_l, 1);
        assert_eq!(l[0].achieving_set, vec![0]);
        let l = localization_from_masses(&[0.1; 10], &[0.1]).unwrap();
        assert_eq!(l[0].min_l, 9);
        assert_eq!(localization_from_masses(&[0.0; 3], &[0.1]).unwrap_err(), Error::ZeroVector);
    }

    #[test]
    fn localization_glued_cliques() {
        let (c, d) = setup(FamilySpec::GluedCliques { n: 3 });
        let r = localization_report(
            &d,
            &LocalizationTarget::Vector(d.eigenvector(1).to_vec()),
            NormMode::PiWeighted,
            &[0.1],
        )
        .unwrap();
        assert!(r.levels[0].min_l < c.len() / 2, "{:?}", r.levels);
        let small: Vec<usize> = (9..12).collect();
        assert!(small.iter().all(|s| r.levels[0].achieving_set.contains(s)));
    }

    #[test]
    fn amplitude_examples() {
        let (_, d) = setup(FamilySpec::Cycle { n: 2 });
        let m = band_amplitude_max(&d, &[1, 2]).unwrap();
        assert!(m.iter().all(|v| (v - 2.0).abs() < 1e-10));
        let (_, d) = setup(FamilySpec::Complete { n: 5 });
        let m = band_amplitude_max(&d, &[1, 2, 3, 4]).unwrap();
        assert!(m.iter().all(|v| (v - 4.0).abs() < 1e-10));
        let (_, d) = setup(FamilySpec::Star { n: 4 });
        let band: Vec<usize> = d.bands()[1].indices.clone().collect();
        let m = band_amplitude_max(&d, &band).unwrap();
        let spread = m.iter().copied().fold(f64::MIN, f64::max) - m.iter().copied().fold(f64::MAX, f64::min);
        assert!(spread > 0.1);
        assert!((amplitude_weighted_sum(&d, &m) - band.len() as f64).abs() < 1e-8);
        assert_eq!(band_amplitude_max(&d, &[]).unwrap_err(), Error::EmptyBand);
    }

    #[test]
    fn probe_examples() {
        let (_, d) = setup(FamilySpec::HypercubeRerandomize { n: 1 });
        let r = condition_b_probe(&d, 1.0, 0.5, 10, 0).unwrap();
        assert_eq!(r.method, ProbeMethod::Exact);
        assert!((r.best_probability - 1.0).abs() < 1e-12);

        let (_, d) = setup(FamilySpec::Cycle { n: 2 });
        let r = condition_b_probe(&d, 1.0, 0.5, 360, 0).unwrap();
        assert_eq!(r.method, ProbeMethod::AngleGrid);
        assert!(r.best_probability >= 0.5);

        let (_, d) = setup(FamilySpec::Complete { n: 3 });
        let r = condition_b_probe(&d, 1.0, 3.0, 64, 0).unwrap();
        assert_eq!(r.best_probability, 0.0);

        let (_, d) = setup(FamilySpec::HypercubeWalk { n: 3 });
        let r = condition_b_probe(&d, 1.0, 0.5, 16, 3).unwrap();
        assert_eq!(r.method, ProbeMethod::RandomAscent);
        let again = condition_b_probe(&d, 1.0, 0.5, 16, 3).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn delocalization_examples() {
        let pi = [0.25; 4];
        let r = delocalization_bound_check(&pi, &[1.0, 1.0, -1.0, -1.0], &[0, 1]).unwrap();
        assert!((r.lhs - 1.0).abs() < 1e-15 && (r.rhs - 2.0).abs() < 1e-15 && r.holds);
        assert_eq!(delocalization_bound_check(&pi, &[1.0, 1.0, -1.0, -1.0], &[0, 1, 2, 3]).unwrap_err(), Error::TrivialSet);
        assert!(matches!(
            delocalization_bound_check(&pi, &[1.0, 1.0, 1.0, -1.0], &[0]),
            Err(Error::BadNormalization(_))
        ));
        let (_, d) = setup(FamilySpec::Star { n: 5 });
        let psi = d.eigenvector(1);
        for set in superlevel_sets(psi) {
            assert!(delocalization_bound_check(d.pi(), psi, &set).unwrap().holds);
        }
    }

    #[test]
    fn automorphism_examples() {
        let (c, d) = setup(FamilySpec::Cycle { n: 2 });
        assert!(automorphism_invariance_check(&c, &d, &[1, 2, 3, 0]).unwrap().passed);
        let (c, d) = setup(FamilySpec::Complete { n: 4 });
        assert!(automorphism_invariance_check(&c, &d, &[1, 0, 2, 3]).unwrap().passed);
        let (c, d) = setup(FamilySpec::Star { n: 3 });
        assert!(matches!(
            automorphism_invariance_check(&c, &d, &[1, 0, 2, 3]),
            Err(Error::NotAnAutomorphism(_))
        ));
    }
}
