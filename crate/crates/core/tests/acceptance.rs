//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::time::Instant;

use markov_noise::bottleneck::{
    cheeger_check, exact_bottleneck, flip_bound_check, nondegenerate_minimizer, spectral_identity_check,
};
use markov_noise::chain::{make_family, random_reversible};
use markov_noise::noise::{
    default_alpha_grid, expected_random_subset_cov, flip_curve, fourier_profile, sensitive_existence_gap,
    sensitivity_band_mass, sharpness_bounds, stability_tail_mass,
};
use markov_noise::simulate::{estimate_cov, estimate_return_prob};
use markov_noise::spectral::{decompose, transition_kernel, SpectralDecomposition};
use markov_noise::stability::{amplitude_weighted_sum, band_amplitude_max, delocalization_bound_check, superlevel_sets};
use markov_noise::{par, Chain, FamilySpec, Observable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = (bool, String);

fn build(spec: &FamilySpec) -> (Chain, SpectralDecomposition) {
    let c = make_family(spec).unwrap();
    let d = decompose(&c).unwrap();
    (c, d)
}

fn random_set(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    loop {
        let set: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.5)).collect();
        if !set.is_empty() && set.len() < n {
            return set;
        }
    }
}

fn spectral_reconstruction() -> Outcome {
    let mut worst = 0.0f64;
    let specs = common::families_up_to(64);
    for spec in &specs {
        let (c, d) = build(spec);
        for t in [0.1, d.relaxation_time(), 10.0 * d.relaxation_time()] {
            let k = transition_kernel(&d, t).unwrap();
            worst = worst.max(common::max_abs_diff(&k, &common::expm_series(c.generator(), t)));
        }
    }
    (worst <= 1e-8, format!("{} chains, max entry error {worst:.2e}", specs.len()))
}

fn rerandomize_closed_forms() -> Outcome {
    let grid = default_alpha_grid();
    let (mut t_err, mut flip_err) = (0.0f64, 0.0f64);
    for n in 2..=10 {
        let (c, d) = build(&FamilySpec::HypercubeRerandomize { n });
        t_err = t_err.max((d.relaxation_time() - 1.0).abs());
        let p = fourier_profile(&d, &Observable::dictator(&c, 0).unwrap()).unwrap();
        for pt in flip_curve(&p, &grid).unwrap() {
            flip_err = flip_err.max((pt.value - (1.0 - (-pt.alpha).exp()) / 2.0).abs());
        }
    }
    (t_err <= 1e-9 && flip_err <= 1e-9, format!("t_rel error {t_err:.2e}, flip error {flip_err:.2e}"))
}

/// 200 random Boolean functions on random reversible chains of up to 30 states.
fn boolean_corpus() -> Vec<(Chain, SpectralDecomposition, Observable)> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..200)
        .map(|i| {
            let n = rng.random_range(2..=30);
            let density = rng.random_range(0.0..0.6);
            let c = random_reversible(n, density, 1000 + i).unwrap();
            let d = decompose(&c).unwrap();
            let f = Observable::indicator(n, &random_set(&mut rng, n));
            (c, d, f)
        })
        .collect()
}

fn fourier_identities(corpus: &[(Chain, SpectralDecomposition, Observable)]) -> Outcome {
    let grid = default_alpha_grid();
    let (mut flip_err, mut split_err) = (0.0f64, 0.0f64);
    for (_, d, f) in corpus {
        let p = fourier_profile(d, f).unwrap();
        for &a in &grid {
            flip_err = flip_err.max((p.flip_at(a) - 2.0 * (p.variance - p.covariance_at(a))).abs());
        }
        for k in [1.5, 2.0, 4.0, 8.0] {
            split_err = split_err.max((sensitivity_band_mass(&p, k) + stability_tail_mass(&p, k) - p.variance).abs());
        }
    }
    (
        flip_err <= 1e-10 && split_err <= 1e-10,
        format!("flip identity error {flip_err:.2e}, band split error {split_err:.2e}"),
    )
}

fn sharpness(corpus: &[(Chain, SpectralDecomposition, Observable)]) -> Outcome {
    let grid = default_alpha_grid();
    let mut violations = 0;
    let mut checks = 0;
    for (_, d, f) in corpus {
        let p = fourier_profile(d, f).unwrap();
        for horizon in [0.5, d.relaxation_time(), 3.0 * d.relaxation_time()] {
            for &a in &grid {
                let r = sharpness_bounds(&p, horizon, a);
                checks += 2;
                violations += usize::from(!r.cov_holds) + usize::from(r.flip_holds != Some(true));
            }
        }
    }
    (violations == 0, format!("{checks} bound checks, {violations} violations"))
}

fn subset_formula() -> Outcome {
    let mut worst = 0.0f64;
    let specs = [
        FamilySpec::Complete { n: 4 },
        FamilySpec::Complete { n: 5 },
        FamilySpec::Cycle { n: 3 },
        FamilySpec::HypercubeWalk { n: 3 },
    ];
    for spec in &specs {
        let (c, d) = build(spec);
        for m in 1..c.len() {
            let e = expected_random_subset_cov(&d, m).unwrap();
            assert!(e.uniform_pi);
            worst = worst.max((e.value - common::subset_average_cov(&c, d.relaxation_time(), m)).abs());
        }
    }
    (worst <= 1e-10, format!("max error {worst:.2e}"))
}

fn closed_form_gaps() -> Outcome {
    let mut worst = 0.0f64;
    for n in 2..=30 {
        let (_, d) = build(&FamilySpec::Complete { n });
        let exact = (1.0 - 1.0 / n as f64) * (-1.0f64).exp();
        worst = worst.max((sensitive_existence_gap(&d).gap - exact).abs());
    }
    for n in 1..=12 {
        let (_, d) = build(&FamilySpec::HypercubeRerandomize { n });
        let exact = ((1.0 + (-1.0f64).exp()) / 2.0).powi(n as i32) - 0.5f64.powi(n as i32);
        worst = worst.max((sensitive_existence_gap(&d).gap - exact).abs());
    }
    (worst <= 1e-9, format!("max error {worst:.2e}"))
}

fn bottleneck_exactness() -> Outcome {
    let mut cycle_err = 0.0f64;
    for n in 2..=12 {
        let c = make_family(&FamilySpec::Cycle { n }).unwrap();
        cycle_err = cycle_err.max((exact_bottleneck(&c).unwrap().phi - 1.0 / n as f64).abs());
    }
    let glued = make_family(&FamilySpec::GluedCliques { n: 3 }).unwrap();
    let glued_err = (exact_bottleneck(&glued).unwrap().phi - 1.0 / 7.0).abs();
    let specs = common::families_up_to(24);
    let failures: Vec<String> = specs
        .iter()
        .filter(|spec| {
            let (c, d) = build(spec);
            !cheeger_check(&c, &d).unwrap().holds
        })
        .map(|s| format!("{s:?}"))
        .collect();
    (
        cycle_err <= 1e-12 && glued_err <= 1e-12 && failures.is_empty(),
        format!(
            "cycle error {cycle_err:.2e}, glued error {glued_err:.2e}, Cheeger on {} chains, failures {failures:?}",
            specs.len()
        ),
    )
}

fn cycle_order() -> Outcome {
    let hi = std::f64::consts::PI.powi(2) / 2.0 + 0.01;
    let mut range = (f64::INFINITY, 0.0f64);
    let mut exact_err = 0.0f64;
    for n in 2..=12 {
        let (_, d) = build(&FamilySpec::Cycle { n });
        let x = d.spectral_gap() * (n * n) as f64;
        range = (range.0.min(x), range.1.max(x));
        exact_err = exact_err.max((d.spectral_gap() - (1.0 - (std::f64::consts::PI / n as f64).cos())).abs());
    }
    (
        range.0 >= 1.0 && range.1 <= hi && exact_err <= 1e-12,
        format!("lambda_1 n^2 in [{:.4}, {:.4}], closed form error {exact_err:.2e}", range.0, range.1),
    )
}

fn spectral_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst = 0.0f64;
    let mut misses = 0;
    for i in 0..1000 {
        let n = rng.random_range(2..=50);
        let c = random_reversible(n, rng.random_range(0.0..0.5), 5000 + i).unwrap();
        let d = decompose(&c).unwrap();
        let r = spectral_identity_check(&c, &d, &random_set(&mut rng, n)).unwrap();
        worst = worst.max((r.phi - r.mean_lambda).abs() / r.phi.max(1.0));
        misses += usize::from(!r.matches);
    }
    (misses == 0, format!("1000 pairs, max relative error {worst:.2e}"))
}

fn flip_bound() -> Outcome {
    let grid = default_alpha_grid();
    let specs = common::families_up_to(16);
    let mut subsets = 0usize;
    let mut violations = 0usize;
    for spec in &specs {
        let (c, d) = build(spec);
        let n = c.len();
        let counts = par::map_range((1usize << n) - 2, |k| {
            let mask = k + 1;
            let set: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
            let r = flip_bound_check(&c, &d, &set, &grid).unwrap();
            r.rows.iter().filter(|row| !row.holds).count()
        });
        subsets += counts.len();
        violations += counts.iter().sum::<usize>();
    }
    (violations == 0, format!("{} chains, {subsets} subsets, {violations} violations", specs.len()))
}

fn transitive_amplitude() -> Outcome {
    let mut transitive = Vec::new();
    for n in 2..=10 {
        transitive.push(FamilySpec::Complete { n });
    }
    for n in 2..=10 {
        transitive.push(FamilySpec::Cycle { n });
    }
    for n in 1..=5 {
        transitive.push(FamilySpec::HypercubeWalk { n });
        transitive.push(FamilySpec::HypercubeRerandomize { n });
    }
    let mut flat_err = 0.0f64;
    for spec in &transitive {
        let (_, d) = build(spec);
        for band in d.bands() {
            let idx: Vec<usize> = band.indices.clone().collect();
            for m in band_amplitude_max(&d, &idx).unwrap() {
                flat_err = flat_err.max((m - band.dim() as f64).abs());
            }
        }
    }
    let mut sum_err = 0.0f64;
    let all = common::families_up_to(64);
    for spec in &all {
        let (_, d) = build(spec);
        for band in d.bands() {
            let idx: Vec<usize> = band.indices.clone().collect();
            let m = band_amplitude_max(&d, &idx).unwrap();
            sum_err = sum_err.max((amplitude_weighted_sum(&d, &m) - band.dim() as f64).abs());
        }
    }
    (
        flat_err <= 1e-7 && sum_err <= 1e-8,
        format!("transitive M_w error {flat_err:.2e}, weighted sum error {sum_err:.2e} over {} chains", all.len()),
    )
}

fn nondegenerate() -> Outcome {
    let specs: Vec<FamilySpec> = common::families_up_to(24)
        .into_iter()
        .filter(|s| make_family(s).unwrap().is_declared_transitive())
        .collect();
    let mut worst = 0.0f64;
    let mut missing = Vec::new();
    for spec in &specs {
        let c = make_family(spec).unwrap();
        match nondegenerate_minimizer(&c) {
            Ok(r) => worst = worst.max(r.gap_to_phi_star.abs()),
            Err(_) => missing.push(format!("{spec:?}")),
        }
    }
    let glued = nondegenerate_minimizer(&make_family(&FamilySpec::GluedCliques { n: 3 }).unwrap()).unwrap();
    (
        worst <= 1e-10 && missing.is_empty() && glued.gap_to_phi_star > 1e-10,
        format!(
            "{} transitive chains, max gap {worst:.2e}, no window subset {missing:?}; glued restricted {:.6} vs {:.6}",
            specs.len(),
            glued.cut.phi,
            glued.phi_star
        ),
    )
}

fn delocalization() -> Outcome {
    let specs = common::families_up_to(64);
    let mut checks = 0usize;
    let mut violations = 0usize;
    for spec in &specs {
        let (c, d) = build(spec);
        for i in 1..c.len() {
            let psi = d.eigenvector(i);
            for set in superlevel_sets(psi) {
                checks += 1;
                let r = delocalization_bound_check(c.pi(), psi, &set).unwrap();
                violations += usize::from(r.lhs > r.rhs + 1e-10);
            }
        }
    }
    (violations == 0, format!("{} chains, {checks} sets, {violations} violations", specs.len()))
}

fn monte_carlo() -> Outcome {
    const TRIALS: usize = 100_000;
    let specs = [
        FamilySpec::Cycle { n: 4 },
        FamilySpec::Complete { n: 5 },
        FamilySpec::HypercubeRerandomize { n: 4 },
        FamilySpec::SliceExclusion { n: 5, k: 2 },
    ];
    let mut total = 0usize;
    let mut inside = 0usize;
    let mut worst = 0.0f64;
    for spec in &specs {
        let (c, d) = build(spec);
        let n = c.len();
        let set: Vec<usize> = (0..n / 2).collect();
        let f = Observable::indicator(n, &set);
        let profile = fourier_profile(&d, &f).unwrap();
        for t in [d.relaxation_time(), 0.1 * d.relaxation_time()] {
            let kernel = transition_kernel(&d, t).unwrap();
            let ret: f64 = (0..n).map(|i| c.pi()[i] * kernel[(i, i)]).sum();
            let cov = profile.covariance_at_time(t);
            for seed in 0..30u64 {
                let zs = [
                    estimate_cov(&c, f.values(), t, TRIALS, seed).unwrap().z_score(cov),
                    estimate_return_prob(&c, t, TRIALS, seed).unwrap().z_score(ret),
                ];
                for z in zs {
                    total += 1;
                    inside += usize::from(z.abs() <= 4.0);
                    worst = worst.max(z.abs());
                }
            }
        }
    }
    let share = inside as f64 / total as f64;
    (share >= 0.99, format!("{inside}/{total} within 4 sigma, max |z| {worst:.2}"))
}

fn slice_sanity() -> Outcome {
    let mut uniform = true;
    let mut t_rel = Vec::new();
    for n in 4..=9 {
        let (c, d) = build(&FamilySpec::SliceExclusion { n, k: 2 });
        uniform &= c.pi().iter().all(|&p| p == c.pi()[0]);
        t_rel.push(d.relaxation_time());
    }
    let max = t_rel.iter().cloned().fold(0.0, f64::max);
    let min = t_rel.iter().cloned().fold(f64::INFINITY, f64::min);
    (
        uniform && max / min <= 2.0,
        format!("uniform pi {uniform}, t_rel for n = 4..9 {t_rel:.4?}, max/min {:.4}", max / min),
    )
}

fn main() {
    let start = Instant::now();
    let corpus = boolean_corpus();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("kernel reconstruction", Box::new(spectral_reconstruction)),
        ("rerandomize closed forms", Box::new(rerandomize_closed_forms)),
        ("Fourier identities", Box::new(|| fourier_identities(&corpus))),
        ("sharpness bounds", Box::new(|| sharpness(&corpus))),
        ("random subset formula", Box::new(subset_formula)),
        ("closed-form existence gaps", Box::new(closed_form_gaps)),
        ("bottleneck exactness and Cheeger", Box::new(bottleneck_exactness)),
        ("cycle gap order", Box::new(cycle_order)),
        ("bottleneck spectral identity", Box::new(spectral_identity)),
        ("flip bound over all subsets", Box::new(flip_bound)),
        ("band amplitude", Box::new(transitive_amplitude)),
        ("nondegenerate minimizer", Box::new(nondegenerate)),
        ("delocalization bound", Box::new(delocalization)),
        ("Monte Carlo consistency", Box::new(monte_carlo)),
        ("slice exclusion sanity", Box::new(slice_sanity)),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (ok, detail) = run();
        let tag = if ok { "PASS" } else { "FAIL" };
        println!("[{tag}] {:>2} {name}: {detail} ({:.1}s)", i + 1, t.elapsed().as_secs_f64());
        if !ok {
            failed.push(i + 1);
        }
    }
    println!(
        "acceptance: {}/{} passed in {:.1}s",
        criteria.len() - failed.len(),
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
