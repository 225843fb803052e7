//! Bottleneck ratios `Phi(A) = (sum_{i in A, j not in A} pi_i q_ij) / pi(A)`
//! and the checks that tie them to the spectrum.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::chain::Chain;
use crate::error::{Error, Result};
use crate::noise::{fourier_profile, Observable};
use crate::par;
use crate::spectral::SpectralDecomposition;

/// Default cap for exhaustive subset enumeration.
pub const DEFAULT_ENUMERATION_CAP: usize = 24;
/// Slack on the `pi(A) <= 1/2` constraint.
pub const HALF_MASS_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMethod {
    Enumeration,
    Sweep,
    Restricted,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutReport {
    pub subset: Vec<usize>,
    pub labels: Vec<String>,
    pub pi_mass: f64,
    pub boundary_flow: f64,
    pub phi: f64,
    pub is_exact_minimum: bool,
    pub search_method: SearchMethod,
}

struct Cut {
    mass: f64,
    flow: f64,
}

fn cut_of(chain: &Chain, member: &[bool]) -> Result<Cut> {
    let n = chain.len();
    if member.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: member.len() });
    }
    let count = member.iter().filter(|&&m| m).count();
    if count == 0 || count == n {
        return Err(Error::EmptyOrFullSet);
    }
    let pi = chain.pi();
    let mut mass = 0.0;
    let mut flow = 0.0;
    for i in (0..n).filter(|&i| member[i]) {
        mass += pi[i];
        for j in (0..n).filter(|&j| !member[j]) {
            flow += pi[i] * chain.rate(i, j);
        }
    }
    Ok(Cut { mass, flow })
}

fn membership(n: usize, set: &[usize]) -> Result<Vec<bool>> {
    let mut member = vec![false; n];
    for &i in set {
        if i >= n {
            return Err(Error::DimensionMismatch { expected: n, got: i + 1 });
        }
        member[i] = true;
    }
    Ok(member)
}

/// `Phi(A)` for a proper nonempty subset of state indices.
pub fn phi(chain: &Chain, set: &[usize]) -> Result<f64> {
    let cut = cut_of(chain, &membership(chain.len(), set)?)?;
    Ok(cut.flow / cut.mass)
}

fn report(chain: &Chain, set: Vec<usize>, exact: bool, method: SearchMethod) -> CutReport {
    let cut = cut_of(chain, &membership(chain.len(), &set).unwrap()).unwrap();
    CutReport {
        labels: set.iter().map(|&i| chain.states()[i].clone()).collect(),
        subset: set,
        pi_mass: cut.mass,
        boundary_flow: cut.flow,
        phi: cut.flow / cut.mass,
        is_exact_minimum: exact,
        search_method: method,
    }
}

fn tie_tol(phi: f64) -> f64 {
    1e-12 * phi.abs().max(1.0)
}

/// Lower phi wins; within tolerance, smaller set, then lexicographically
/// smaller sorted index list.
fn better(a: (f64, u64), b: (f64, u64)) -> bool {
    let tol = tie_tol(a.0.min(b.0));
    if a.0 < b.0 - tol {
        return true;
    }
    if a.0 > b.0 + tol {
        return false;
    }
    match a.1.count_ones().cmp(&b.1.count_ones()) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => {
            let diff = a.1 ^ b.1;
            diff != 0 && a.1 & (diff & diff.wrapping_neg()) != 0
        }
    }
}

fn set_from_mask(mask: u64, n: usize) -> Vec<usize> {
    (0..n).filter(|&i| mask >> i & 1 == 1).collect()
}

fn exact_phi(chain: &Chain, mask: u64) -> f64 {
    let member: Vec<bool> = (0..chain.len()).map(|i| mask >> i & 1 == 1).collect();
    let cut = cut_of(chain, &member).unwrap();
    cut.flow / cut.mass
}

/// Minimize `Phi` over all nonempty `A` with `lower < pi(A) <= 1/2`.
fn enumerate_min(chain: &Chain, lower: f64, cap: usize) -> Result<Option<(f64, u64)>> {
    let n = chain.len();
    let cap = cap.min(63);
    if n > cap {
        return Err(Error::StateSpaceTooLarge { size: n, cap });
    }
    let pi = chain.pi().to_vec();
    let flux: Vec<f64> = (0..n * n)
        .map(|k| {
            let (i, j) = (k / n, k % n);
            if i == j {
                0.0
            } else {
                pi[i] * chain.rate(i, j)
            }
        })
        .collect();
    let out: Vec<f64> = (0..n).map(|i| flux[i * n..(i + 1) * n].iter().sum()).collect();
    let upper = 0.5 + HALF_MASS_SLACK;
    let top = n.min(8);
    let low = n - top;

    let chunk = |prefix: usize| -> Option<(f64, u64)> {
        let mut mask = (prefix as u64) << low;
        // to_a[v] = flux from A into v; from_a[v] = flux from v into A.
        let mut to_a = vec![0.0; n];
        let mut from_a = vec![0.0; n];
        let mut mass = 0.0;
        let mut flow = 0.0;
        for i in (0..n).filter(|&i| mask >> i & 1 == 1) {
            mass += pi[i];
            for v in 0..n {
                to_a[v] += flux[i * n + v];
                from_a[v] += flux[v * n + i];
            }
        }
        for i in (0..n).filter(|&i| mask >> i & 1 == 1) {
            flow += out[i] - from_a[i];
        }
        let mut best: Option<(f64, u64)> = None;
        let consider = |mask: u64, mass: f64, flow: f64, best: &mut Option<(f64, u64)>| {
            if mask == 0 || mass <= lower || mass > upper {
                return;
            }
            let approx = flow / mass;
            let promising = match *best {
                None => true,
                Some(b) => approx < b.0 + 1e-9 * b.0.abs().max(1.0) && better((approx.min(b.0), mask), b),
            };
            if promising {
                let cand = (exact_phi(chain, mask), mask);
                if best.is_none_or(|b| better(cand, b)) {
                    *best = Some(cand);
                }
            }
        };
        consider(mask, mass, flow, &mut best);
        for step in 1u64..(1u64 << low) {
            let v = step.trailing_zeros() as usize;
            let bit = 1u64 << v;
            if mask & bit == 0 {
                flow += out[v] - from_a[v] - to_a[v];
                mass += pi[v];
                mask |= bit;
                for u in 0..n {
                    to_a[u] += flux[v * n + u];
                    from_a[u] += flux[u * n + v];
                }
            } else {
                mask &= !bit;
                for u in 0..n {
                    to_a[u] -= flux[v * n + u];
                    from_a[u] -= flux[u * n + v];
                }
                flow -= out[v] - from_a[v] - to_a[v];
                mass -= pi[v];
            }
            consider(mask, mass, flow, &mut best);
        }
        best
    };

    let partial = par::map_range(1 << top, chunk);
    Ok(partial.into_iter().flatten().fold(None, |acc: Option<(f64, u64)>, c| match acc {
        Some(a) if !better(c, a) => Some(a),
        _ => Some(c),
    }))
}

/// Global minimizer of `Phi` over `pi(A) <= 1/2` by exhaustive enumeration.
pub fn exact_bottleneck(chain: &Chain) -> Result<CutReport> {
    exact_bottleneck_with_cap(chain, DEFAULT_ENUMERATION_CAP)
}

pub fn exact_bottleneck_with_cap(chain: &Chain, cap: usize) -> Result<CutReport> {
    let (_, mask) = enumerate_min(chain, 0.0, cap)?.ok_or(Error::EmptyOrFullSet)?;
    Ok(report(chain, set_from_mask(mask, chain.len()), true, SearchMethod::Enumeration))
}

/// Best superlevel (or sublevel) set of `psi_1` with `pi(A) <= 1/2`.
pub fn sweep_cut(dec: &SpectralDecomposition, chain: &Chain) -> Result<CutReport> {
    let n = chain.len();
    let psi = dec.eigenvector(1);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| psi[b].total_cmp(&psi[a]).then(a.cmp(&b)));
    let pi = chain.pi();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for orientation in [false, true] {
        let mut member = vec![false; n];
        let mut mass = 0.0;
        for len in 1..n {
            let w = if orientation { order[n - len] } else { order[len - 1] };
            member[w] = true;
            mass += pi[w];
            if mass > 0.5 + HALF_MASS_SLACK {
                break;
            }
            let cut = cut_of(chain, &member)?;
            let value = cut.flow / cut.mass;
            let set: Vec<usize> = (0..n).filter(|&i| member[i]).collect();
            let wins = match &best {
                None => true,
                Some((b, bset)) => {
                    value < b - tie_tol(*b)
                        || (value <= b + tie_tol(*b) && (set.len(), &set) < (bset.len(), bset))
                }
            };
            if wins {
                best = Some((value, set));
            }
        }
    }
    let (_, set) = best.ok_or(Error::EmptyOrFullSet)?;
    Ok(report(chain, set, false, SearchMethod::Sweep))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheegerReport {
    pub phi_star: f64,
    pub lambda1: f64,
    /// `Phi*^2 <= 2 lambda_1`.
    pub lower_holds: bool,
    /// `2 lambda_1 <= 4 Phi*`.
    pub upper_holds: bool,
    pub holds: bool,
}

/// `Phi*^2 <= 2 lambda_1 <= 4 Phi*` with `1e-9` slack on each side.
pub fn cheeger_check(chain: &Chain, dec: &SpectralDecomposition) -> Result<CheegerReport> {
    let phi_star = exact_bottleneck(chain)?.phi;
    let lambda1 = dec.spectral_gap();
    let lower_holds = phi_star * phi_star <= 2.0 * lambda1 + 1e-9;
    let upper_holds = 2.0 * lambda1 <= 4.0 * phi_star + 1e-9;
    Ok(CheegerReport { phi_star, lambda1, lower_holds, upper_holds, holds: lower_holds && upper_holds })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralIdentity {
    pub phi: f64,
    pub mean_lambda: f64,
    pub matches: bool,
}

/// `Phi(A)` against `E_f[lambda]` for `f = 1_A`.
pub fn spectral_identity_check(chain: &Chain, dec: &SpectralDecomposition, set: &[usize]) -> Result<SpectralIdentity> {
    let phi = phi(chain, set)?;
    let profile = fourier_profile(dec, &Observable::indicator(chain.len(), set))?;
    let mean_lambda = profile.mean_lambda.ok_or(Error::EmptyOrFullSet)?;
    Ok(SpectralIdentity { phi, mean_lambda, matches: (phi - mean_lambda).abs() <= 1e-9 * phi.max(1.0) })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NondegenerateReport {
    pub cut: CutReport,
    pub phi_star: f64,
    /// Restricted minimum minus `Phi*`.
    pub gap_to_phi_star: f64,
    pub declared_transitive: bool,
}

/// Best `Phi` over subsets with `pi(A)` in `(1/4, 1/2]`, next to `Phi*`.
pub fn nondegenerate_minimizer(chain: &Chain) -> Result<NondegenerateReport> {
    let phi_star = exact_bottleneck(chain)?.phi;
    let (_, mask) =
        enumerate_min(chain, 0.25 + HALF_MASS_SLACK, DEFAULT_ENUMERATION_CAP)?.ok_or(Error::NoSubsetInMassWindow)?;
    let cut = report(chain, set_from_mask(mask, chain.len()), false, SearchMethod::Restricted);
    let gap = cut.phi - phi_star;
    let cut = CutReport { is_exact_minimum: gap.abs() <= 1e-10, ..cut };
    Ok(NondegenerateReport {
        cut,
        phi_star,
        gap_to_phi_star: gap,
        declared_transitive: chain.is_declared_transitive(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlipBoundRow {
    pub alpha: f64,
    pub flip: f64,
    /// `2 alpha t_rel pi(A) Phi(A)`, the bound the argument actually proves.
    pub bound: f64,
    /// `alpha t_rel pi(A) Phi(A)`, without the reversibility doubling.
    pub bound_without_doubling: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlipBoundReport {
    pub pi_mass: f64,
    pub phi: f64,
    pub relaxation_time: f64,
    pub rows: Vec<FlipBoundRow>,
    pub all_hold: bool,
}

/// `P(1_A(X_0) != 1_A(X_{alpha t_rel})) <= 2 alpha t_rel pi(A) Phi(A)` per alpha.
pub fn flip_bound_check(
    chain: &Chain,
    dec: &SpectralDecomposition,
    set: &[usize],
    alphas: &[f64],
) -> Result<FlipBoundReport> {
    let member = membership(chain.len(), set)?;
    let cut = cut_of(chain, &member)?;
    if let Some(&a) = alphas.iter().find(|a| !(**a > 0.0)) {
        return Err(Error::NonpositiveAlpha(a));
    }
    let profile = fourier_profile(dec, &Observable::indicator(chain.len(), set))?;
    let t_rel = dec.relaxation_time();
    let rows: Vec<FlipBoundRow> = alphas
        .iter()
        .map(|&alpha| {
            let flip = profile.flip_at(alpha);
            let half = alpha * t_rel * cut.flow;
            FlipBoundRow { alpha, flip, bound: 2.0 * half, bound_without_doubling: half, holds: flip <= 2.0 * half + 1e-12 }
        })
        .collect();
    Ok(FlipBoundReport {
        pi_mass: cut.mass,
        phi: cut.flow / cut.mass,
        relaxation_time: t_rel,
        all_hold: rows.iter().all(|r| r.holds),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{make_family, FamilySpec};
    use crate::spectral::decompose;

    fn family(spec: FamilySpec) -> Chain {
        make_family(&spec).unwrap()
    }

    /// Plain enumeration over all subsets; slow but independent of the Gray code.
    fn brute_min(chain: &Chain, lower: f64) -> f64 {
        let n = chain.len();
        let mut best = f64::INFINITY;
        for mask in 1u64..(1 << n) - 1 {
            let set = set_from_mask(mask, n);
            let mass: f64 = set.iter().map(|&i| chain.pi()[i]).sum();
            if mass > lower && mass <= 0.5 + HALF_MASS_SLACK {
                best = best.min(phi(chain, &set).unwrap());
            }
        }
        best
    }

    #[test]
    fn phi_examples() {
        let c = family(FamilySpec::Cycle { n: 4 });
        assert!((phi(&c, &[0, 1, 2, 3]).unwrap() - 0.25).abs() < 1e-15);
        let c = family(FamilySpec::GluedCliques { n: 3 });
        assert!((phi(&c, &[9, 10, 11]).unwrap() - 1.0 / 7.0).abs() < 1e-15);
        let c = family(FamilySpec::Complete { n: 3 });
        assert!((phi(&c, &[1]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(phi(&c, &[]).unwrap_err(), Error::EmptyOrFullSet);
        assert_eq!(phi(&c, &[0, 1, 2]).unwrap_err(), Error::EmptyOrFullSet);
    }

    #[test]
    fn exact_examples() {
        let c = family(FamilySpec::Cycle { n: 4 });
        let r = exact_bottleneck(&c).unwrap();
        assert!((r.phi - 0.25).abs() < 1e-12);
        assert_eq!(r.subset, vec![0, 1, 2, 3]);
        let c = family(FamilySpec::GluedCliques { n: 3 });
        let r = exact_bottleneck(&c).unwrap();
        assert!((r.phi - 1.0 / 7.0).abs() < 1e-12);
        assert_eq!(r.subset, vec![9, 10, 11]);
        let c = family(FamilySpec::Complete { n: 4 });
        let r = exact_bottleneck(&c).unwrap();
        assert!((r.phi - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.subset, vec![0, 1]);
    }

    #[test]
    fn enumeration_matches_brute_force() {
        for seed in 0..6 {
            let c = crate::chain::random_reversible(9 + seed as usize % 3, 0.3, seed).unwrap();
            let fast = exact_bottleneck(&c).unwrap().phi;
            assert!((fast - brute_min(&c, 0.0)).abs() < 1e-12);
            if let Ok(r) = nondegenerate_minimizer(&c) {
                assert!((r.cut.phi - brute_min(&c, 0.25 + HALF_MASS_SLACK)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cap_enforced() {
        let c = family(FamilySpec::Complete { n: 30 });
        assert!(matches!(exact_bottleneck(&c), Err(Error::StateSpaceTooLarge { .. })));
    }

    #[test]
    fn sweep_examples() {
        let c = family(FamilySpec::Cycle { n: 8 });
        let d = decompose(&c).unwrap();
        let r = sweep_cut(&d, &c).unwrap();
        assert!((r.phi - 1.0 / 8.0).abs() < 1e-12);
        let c = family(FamilySpec::GluedCliques { n: 3 });
        let d = decompose(&c).unwrap();
        assert!((sweep_cut(&d, &c).unwrap().phi - 1.0 / 7.0).abs() < 1e-12);
        let c = family(FamilySpec::Complete { n: 5 });
        let d = decompose(&c).unwrap();
        let sweep = sweep_cut(&d, &c).unwrap().phi;
        let exact = exact_bottleneck(&c).unwrap().phi;
        assert!(sweep >= exact - 1e-12);
        assert!((sweep - exact).abs() < 1e-12);
    }

    #[test]
    fn cheeger_examples() {
        let c = family(FamilySpec::Cycle { n: 2 });
        let r = cheeger_check(&c, &decompose(&c).unwrap()).unwrap();
        assert!((r.phi_star - 0.5).abs() < 1e-12 && (r.lambda1 - 1.0).abs() < 1e-12 && r.holds);
        for spec in [FamilySpec::HypercubeWalk { n: 3 }, FamilySpec::GluedCliques { n: 3 }] {
            let c = family(spec);
            assert!(cheeger_check(&c, &decompose(&c).unwrap()).unwrap().holds);
        }
    }

    #[test]
    fn identity_examples() {
        let c = family(FamilySpec::Complete { n: 3 });
        let d = decompose(&c).unwrap();
        let r = spectral_identity_check(&c, &d, &[2]).unwrap();
        assert!((r.phi - 1.0).abs() < 1e-12 && r.matches);
        let c = family(FamilySpec::Cycle { n: 4 });
        let d = decompose(&c).unwrap();
        let r = spectral_identity_check(&c, &d, &[0, 1, 2, 3]).unwrap();
        assert!((r.mean_lambda - 0.25).abs() < 1e-12 && r.matches);
    }

    #[test]
    fn nondegenerate_examples() {
        let c = family(FamilySpec::Cycle { n: 4 });
        let r = nondegenerate_minimizer(&c).unwrap();
        assert!((r.cut.phi - 0.25).abs() < 1e-12 && r.gap_to_phi_star.abs() < 1e-10);
        let c = family(FamilySpec::Complete { n: 6 });
        let r = nondegenerate_minimizer(&c).unwrap();
        assert!(r.gap_to_phi_star.abs() < 1e-10);
        let c = family(FamilySpec::GluedCliques { n: 3 });
        let r = nondegenerate_minimizer(&c).unwrap();
        assert!(r.cut.phi > r.phi_star + 1e-6);
        assert!(!r.declared_transitive);
    }

    #[test]
    fn flip_bound_examples() {
        let c = family(FamilySpec::HypercubeRerandomize { n: 4 });
        let d = decompose(&c).unwrap();
        let set: Vec<usize> = (0..16).filter(|w| w & 1 == 1).collect();
        let r = flip_bound_check(&c, &d, &set, &[0.1, 1.0, 5.0]).unwrap();
        assert!((r.phi - 0.5).abs() < 1e-12 && r.all_hold);
        for row in &r.rows {
            assert!((row.flip - (1.0 - (-row.alpha).exp()) / 2.0).abs() < 1e-12);
            assert!((row.bound - row.alpha / 2.0).abs() < 1e-12);
        }
        let c = family(FamilySpec::Cycle { n: 4 });
        let d = decompose(&c).unwrap();
        let r = flip_bound_check(&c, &d, &[0, 1, 2, 3], &[0.1]).unwrap();
        assert!((r.rows[0].bound - 2.0 * 0.1 * d.relaxation_time() * 0.5 * 0.25).abs() < 1e-12);
        assert!(r.all_hold);
        let c = family(FamilySpec::Complete { n: 3 });
        let d = decompose(&c).unwrap();
        assert!(flip_bound_check(&c, &d, &[0, 1], &[1.0]).unwrap().all_hold);
    }
}
