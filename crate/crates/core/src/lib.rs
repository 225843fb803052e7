//! Spectral diagnostics of noise sensitivity and noise stability for finite
//! reversible continuous-time Markov chains.
//!
//! The pipeline is: build a [`Chain`] ([`chain`]), decompose `-Q` in the
//! `pi`-weighted inner product ([`spectral`]), expand observables in that
//! eigenbasis ([`noise`]), and read off covariance and flip curves, band
//! masses, bottleneck ratios ([`bottleneck`]) and low-band constructions
//! ([`stability`]). [`simulate`] estimates the same quantities from sampled
//! trajectories.
//!
//! ```
//! use markov_noise::{chain, noise, spectral};
//!
//! let c = chain::make_family(&chain::FamilySpec::HypercubeRerandomize { n: 4 }).unwrap();
//! let dec = spectral::decompose(&c).unwrap();
//! let f = noise::Observable::dictator(&c, 0).unwrap();
//! let profile = noise::fourier_profile(&dec, &f).unwrap();
//! let flip = noise::flip_curve(&profile, &[1.0]).unwrap();
//! assert!((flip[0].value - (1.0 - (-1.0f64).exp()) / 2.0).abs() < 1e-12);
//! ```

pub mod bottleneck;
pub mod chain;
pub mod error;
pub mod noise;
pub mod par;
pub mod simulate;
pub mod spec;
pub mod spectral;
pub mod stability;

pub use chain::{Chain, FamilySpec};
pub use error::{Error, Result};
pub use noise::{Observable, SpectralProfile};
pub use spectral::SpectralDecomposition;
