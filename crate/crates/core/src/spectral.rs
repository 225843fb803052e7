//! Eigendecomposition of `-Q` in the `pi`-weighted inner product.
//!
//! Reversibility makes `M = D^{1/2} (-Q) D^{-1/2}` symmetric for
//! `D = diag(pi)`. Its orthonormal eigenvectors `u_i` map back to
//! `pi`-orthonormal eigenvectors `psi_i = D^{-1/2} u_i` of `-Q`.

use std::ops::Range;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::chain::{validate, Chain};
use crate::error::{Error, Result};

/// Default cap on the number of states handed to the dense eigensolver.
pub const DEFAULT_STATE_CAP: usize = 5000;
/// Relative tolerance used both for band grouping and for locating `lambda_1`.
pub const BAND_TOL: f64 = 1e-9;

/// A maximal run of (numerically) equal eigenvalues.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Band {
    /// Indices into the sorted spectrum.
    pub indices: Range<usize>,
    /// Mean eigenvalue over the band.
    pub lambda: f64,
}

impl Band {
    pub fn dim(&self) -> usize {
        self.indices.len()
    }
}

#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    /// Column `i` holds `psi_i`.
    eigenvectors: DMatrix<f64>,
    bands: Vec<Band>,
    pi: Vec<f64>,
}

impl SpectralDecomposition {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Ascending eigenvalues of `-Q`; the first is exactly 0.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvalue(&self, i: usize) -> f64 {
        self.eigenvalues[i]
    }

    /// `psi_i` as a vector over states.
    pub fn eigenvector(&self, i: usize) -> &[f64] {
        let n = self.len();
        &self.eigenvectors.as_slice()[i * n..(i + 1) * n]
    }

    /// Matrix whose columns are the eigenvectors.
    pub fn eigenvector_matrix(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    /// Position in [`bands`](Self::bands) of the band holding index `i`.
    pub fn band_of(&self, i: usize) -> usize {
        self.bands.iter().position(|b| b.indices.contains(&i)).expect("index in range")
    }

    /// `lambda_1`, the smallest nonzero eigenvalue.
    pub fn spectral_gap(&self) -> f64 {
        self.eigenvalues[1]
    }

    pub fn relaxation_time(&self) -> f64 {
        1.0 / self.spectral_gap()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }

    /// `<f, g>_pi`.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        inner_pi(&self.pi, f, g)
    }
}

pub(crate) fn inner_pi(pi: &[f64], f: &[f64], g: &[f64]) -> f64 {
    pi.iter().zip(f).zip(g).map(|((p, a), b)| p * a * b).sum()
}

/// Decompose with the default state cap.
pub fn decompose(chain: &Chain) -> Result<SpectralDecomposition> {
    decompose_with_cap(chain, DEFAULT_STATE_CAP)
}

pub fn decompose_with_cap(chain: &Chain, cap: usize) -> Result<SpectralDecomposition> {
    let n = chain.len();
    if n > cap {
        return Err(Error::StateSpaceTooLarge { size: n, cap });
    }
    let report = validate(chain);
    if !report.all_passed() {
        return Err(Error::ValidationFailed(report.failures().join(", ")));
    }
    let pi = chain.pi();
    let q = chain.generator();
    let sqrt_pi: Vec<f64> = pi.iter().map(|p| p.sqrt()).collect();
    let m = DMatrix::from_fn(n, n, |i, j| {
        let a = -q[(i, j)] * sqrt_pi[i] / sqrt_pi[j];
        let b = -q[(j, i)] * sqrt_pi[j] / sqrt_pi[i];
        0.5 * (a + b)
    });
    let eig = SymmetricEigen::try_new(m, f64::EPSILON, 0)
        .ok_or_else(|| Error::EigensolverFailure("symmetric eigensolver did not converge".into()))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let u = eig.eigenvectors.column(k);
        let mut psi: Vec<f64> = (0..n).map(|w| u[w] / sqrt_pi[w]).collect();
        let norm = inner_pi(pi, &psi, &psi).sqrt();
        psi.iter_mut().for_each(|v| *v /= norm);
        fix_sign(&mut psi);
        vectors.column_mut(col).copy_from_slice(&psi);
    }

    let scale = eigenvalues.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if eigenvalues[0].abs() > BAND_TOL * scale {
        return Err(Error::EigensolverFailure(format!("lowest eigenvalue {:e} is not zero", eigenvalues[0])));
    }
    if n > 1 && eigenvalues[1] <= BAND_TOL * scale {
        return Err(Error::EigensolverFailure("zero eigenvalue is not simple".into()));
    }
    eigenvalues[0] = 0.0;
    vectors.column_mut(0).fill(1.0);

    let bands = group_bands(&eigenvalues);
    Ok(SpectralDecomposition { eigenvalues, eigenvectors: vectors, bands, pi: pi.to_vec() })
}

/// Largest-magnitude entry made positive; the first such entry wins ties.
fn fix_sign(psi: &mut [f64]) {
    let max = psi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if let Some(lead) = psi.iter().find(|v| v.abs() >= max * (1.0 - 1e-9)) {
        if *lead < 0.0 {
            psi.iter_mut().for_each(|v| *v = -*v);
        }
    }
}

fn group_bands(eigenvalues: &[f64]) -> Vec<Band> {
    let mut bands = Vec::new();
    let mut start = 0;
    for i in 1..=eigenvalues.len() {
        let split = i == eigenvalues.len() || {
            let (prev, cur) = (eigenvalues[i - 1], eigenvalues[i]);
            (cur - prev).abs() > BAND_TOL * cur.abs().max(1.0)
        };
        if split {
            let lambda = eigenvalues[start..i].iter().sum::<f64>() / (i - start) as f64;
            bands.push(Band { indices: start..i, lambda });
            start = i;
        }
    }
    bands
}

/// `<-Q f, f>_pi / <f, f>_pi` for a centered, nonzero `f`.
pub fn rayleigh_quotient(chain: &Chain, f: &[f64]) -> Result<f64> {
    let n = chain.len();
    if f.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: f.len() });
    }
    let pi = chain.pi();
    let norm2 = inner_pi(pi, f, f);
    if norm2 == 0.0 {
        return Err(Error::ZeroFunction);
    }
    let mean: f64 = pi.iter().zip(f).map(|(p, v)| p * v).sum();
    if mean.abs() > 1e-10 * norm2.sqrt().max(1.0) {
        return Err(Error::NotCentered(mean));
    }
    // Dirichlet form: (1/2) sum_ij pi_i q_ij (f_i - f_j)^2, which equals <-Qf, f>.
    let q = chain.generator();
    let mut energy = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let d = f[i] - f[j];
            energy += 0.5 * (pi[i] * q[(i, j)] + pi[j] * q[(j, i)]) * d * d;
        }
    }
    Ok(energy / norm2)
}

/// `H_t = exp(tQ)` assembled from the eigenpairs.
pub fn transition_kernel(dec: &SpectralDecomposition, t: f64) -> Result<DMatrix<f64>> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    let n = dec.len();
    if t == 0.0 {
        return Ok(DMatrix::identity(n, n));
    }
    let psi = dec.eigenvector_matrix();
    let mut scaled = psi.clone();
    for (i, lambda) in dec.eigenvalues().iter().enumerate() {
        scaled.column_mut(i).scale_mut((-lambda * t).exp());
    }
    let mut h = scaled * psi.transpose();
    for (w, p) in dec.pi().iter().enumerate() {
        h.column_mut(w).scale_mut(*p);
    }
    h.iter_mut().for_each(|v| {
        if *v < 0.0 && *v >= -1e-12 {
            *v = 0.0;
        }
    });
    Ok(h)
}

/// Indices `i` with `lambda_1 <= lambda_i <= k lambda_1`, i.e. the
/// low-frequency subspace `Psi_k`.
pub fn band_subspace(dec: &SpectralDecomposition, k: f64) -> Vec<usize> {
    let limit = k * dec.spectral_gap() * (1.0 + BAND_TOL);
    (1..dec.len()).take_while(|&i| dec.eigenvalue(i) <= limit).collect()
}
