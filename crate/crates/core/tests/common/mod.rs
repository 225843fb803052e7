#![allow(dead_code)]

use markov_noise::Chain;
use nalgebra::DMatrix;

/// `exp(tQ)` by Taylor series with scaling and squaring; no eigenvectors.
pub fn expm_series(q: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    let n = q.nrows();
    let a = q * t;
    let norm = a.row_iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
    let mut squarings = 0;
    let mut scale = 1.0;
    while norm * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    let a = a * scale;
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..30 {
        term = &term * &a / k as f64;
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// `Cov(1_A(X_0), 1_A(X_t))` straight from a transition matrix.
pub fn indicator_cov(pi: &[f64], kernel: &DMatrix<f64>, set: &[usize]) -> f64 {
    let mass: f64 = set.iter().map(|&i| pi[i]).sum();
    let mut both = 0.0;
    for &i in set {
        for &j in set {
            both += pi[i] * kernel[(i, j)];
        }
    }
    both - mass * mass
}

/// Average of [`indicator_cov`] over every `m`-subset.
pub fn subset_average_cov(chain: &Chain, t: f64, m: usize) -> f64 {
    let n = chain.len();
    let kernel = expm_series(chain.generator(), t);
    let (mut total, mut count) = (0.0, 0usize);
    for mask in 0u64..1 << n {
        if mask.count_ones() as usize != m {
            continue;
        }
        let set: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        total += indicator_cov(chain.pi(), &kernel, &set);
        count += 1;
    }
    total / count as f64
}

/// `Phi(A)` from the definition, summing over ordered pairs.
pub fn phi_direct(chain: &Chain, set: &[usize]) -> f64 {
    let n = chain.len();
    let inside: Vec<bool> = (0..n).map(|i| set.contains(&i)).collect();
    let mut flow = 0.0;
    let mut mass = 0.0;
    for i in 0..n {
        if inside[i] {
            mass += chain.pi()[i];
            for j in 0..n {
                if !inside[j] {
                    flow += chain.pi()[i] * chain.generator()[(i, j)];
                }
            }
        }
    }
    flow / mass
}

/// Minimum of `Phi` over all subsets with `lower < pi(A) <= 1/2`.
pub fn brute_min_phi(chain: &Chain, lower: f64) -> Option<f64> {
    let n = chain.len();
    let mut best: Option<f64> = None;
    for mask in 1u64..(1 << n) - 1 {
        let set: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        let mass: f64 = set.iter().map(|&i| chain.pi()[i]).sum();
        if mass > lower && mass <= 0.5 + 1e-12 {
            let v = phi_direct(chain, &set);
            best = Some(best.map_or(v, |b: f64| b.min(v)));
        }
    }
    best
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Every family member with at most `max_states` states.
pub fn families_up_to(max_states: usize) -> Vec<markov_noise::FamilySpec> {
    use markov_noise::FamilySpec as F;
    let mut out = Vec::new();
    let mut push = |spec: F| {
        if spec.state_count().is_some_and(|s| s <= max_states) && markov_noise::chain::make_family(&spec).is_ok() {
            out.push(spec);
        }
    };
    for n in 1..=64 {
        push(F::Complete { n });
        push(F::Cycle { n });
        push(F::Star { n });
        push(F::GluedCliques { n });
        push(F::StarJoin { n, stars: None, leaves: None });
    }
    for n in 1..=6 {
        push(F::HypercubeWalk { n });
        push(F::HypercubeRerandomize { n });
        push(F::RegularGlue { n });
    }
    for n in 2..=12 {
        for k in 1..n {
            push(F::SliceExclusion { n, k });
        }
    }
    out
}
