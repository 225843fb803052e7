use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Args;
use markov_noise::bottleneck::{
    cheeger_check, exact_bottleneck, flip_bound_check, nondegenerate_minimizer, sweep_cut, CheegerReport, CutReport,
    FlipBoundReport, NondegenerateReport, DEFAULT_ENUMERATION_CAP,
};
use markov_noise::chain::{make_family, Chain, FamilySpec};
use markov_noise::noise::{
    curve_table, default_alpha_grid, fourier_profile, sensitive_existence_gap, sensitivity_band_mass,
    stability_tail_mass, BandMass, CurveRow, ExistenceGap,
};
use markov_noise::simulate::{estimate_cov, estimate_flip, estimate_return_prob, Quantity, TrajectoryEstimate};
use markov_noise::spec::{export_chain, ChainSpec};
use markov_noise::spectral::{band_subspace, decompose, transition_kernel, SpectralDecomposition};
use markov_noise::stability::{
    amplitude_weighted_sum, band_amplitude_max, condition_b_probe, localization_report, threshold_sweep,
    LocalizationReport, LocalizationTarget, NormMode, ProbeReport, SweepConfig, ThresholdSweepReport,
};
use markov_noise::Observable;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};
use crate::io::{load_chain, load_function, num, opt, write_csv, write_json};
use crate::{ChainArg, Format, Norm};

const DEFAULT_KS: &str = "1.5,2,4,8";

fn parse_list(text: &str, flag: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| CliError::new("InvalidParams", format!("bad number {s:?}")).with("flag", flag))
        })
        .collect()
}

/// Strictly positive, strictly ascending alpha grid.
fn alpha_grid(text: Option<&str>) -> CliResult<Vec<f64>> {
    let Some(text) = text else {
        return Ok(default_alpha_grid());
    };
    let grid = parse_list(text, "--alphas")?;
    if grid.is_empty() || grid.iter().any(|&a| a <= 0.0) || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::new("InvalidParams", "alpha grid must be positive and strictly ascending")
            .with("alphas", &grid));
    }
    Ok(grid)
}

fn k_list(text: &str) -> CliResult<Vec<f64>> {
    let ks = parse_list(text, "--k")?;
    if ks.iter().any(|&k| k < 1.0) {
        return Err(CliError::new("InvalidParams", "band multipliers must be at least 1").with("k", &ks));
    }
    Ok(ks)
}

fn error_value(e: &markov_noise::Error) -> Value {
    json!({ "code": e.code(), "message": e.to_string() })
}

#[derive(Serialize)]
struct ChainSummary {
    states: usize,
    declared_transitive: bool,
}

#[derive(Serialize)]
struct EigenSummary {
    count: usize,
    lambda1: f64,
    t_rel: f64,
    lambda_max: f64,
    bands: usize,
    /// Smallest eigenvalues, up to 32.
    lowest: Vec<f64>,
}

fn eigen_summary(dec: &SpectralDecomposition) -> EigenSummary {
    EigenSummary {
        count: dec.len(),
        lambda1: dec.spectral_gap(),
        t_rel: dec.relaxation_time(),
        lambda_max: dec.max_eigenvalue(),
        bands: dec.bands().len(),
        lowest: dec.eigenvalues().iter().take(32).copied().collect(),
    }
}

#[derive(Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    chain: ChainArg,
    /// Function spec file.
    #[arg(long)]
    function: PathBuf,
    /// Comma-separated alpha grid; default 25 log-spaced points on [1e-3, 10].
    #[arg(long)]
    alphas: Option<String>,
    /// Comma-separated band multipliers.
    #[arg(long, default_value = DEFAULT_KS)]
    k: String,
    /// Output directory for report.json and curves.csv; stdout otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Stdout format when --out is absent: the JSON report or the curves CSV.
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Serialize)]
struct ProfileSummary {
    mean: f64,
    variance: f64,
    second_moment: f64,
    is_boolean: bool,
    mean_lambda: Option<f64>,
    band_masses: Vec<BandMass>,
}

#[derive(Serialize)]
struct KMasses {
    k: f64,
    sensitivity_band_mass: f64,
    stability_tail_mass: f64,
}

#[derive(Serialize)]
struct BottleneckSection {
    support: Vec<String>,
    pi_mass: f64,
    boundary_flow: f64,
    phi: f64,
    flip_bound: FlipBoundReport,
    /// Global minimizer when the state space is small enough to enumerate.
    phi_star: Option<CutReport>,
}

#[derive(Serialize)]
struct AnalyzeReport {
    chain: ChainSummary,
    eigen: EigenSummary,
    profile: ProfileSummary,
    band_masses: Vec<KMasses>,
    existence_gap: ExistenceGap,
    curves: Vec<CurveRow>,
    bottleneck: Option<BottleneckSection>,
}

fn curve_rows(curves: &[CurveRow]) -> (Vec<String>, Vec<Vec<String>>) {
    let header = ["alpha", "covariance", "flip_probability"].map(String::from).to_vec();
    let rows = curves.iter().map(|r| vec![num(r.alpha), num(r.covariance), opt(r.flip_probability)]).collect();
    (header, rows)
}

pub fn analyze(a: &AnalyzeArgs) -> CliResult<ExitCode> {
    let chain = load_chain(&a.chain.chain)?;
    let spec = load_function(&a.function)?;
    let alphas = alpha_grid(a.alphas.as_deref())?;
    let ks = k_list(&a.k)?;
    let dec = decompose(&chain)?;
    let f = spec.resolve(&chain, &dec).map_err(|e| CliError::from(e).with("path", &a.function))?;
    let profile = fourier_profile(&dec, &f)?;
    let curves = curve_table(&profile, &alphas)?;
    let support = f.support();
    let bottleneck = if f.is_boolean() && !support.is_empty() && support.len() < chain.len() {
        let flip_bound = flip_bound_check(&chain, &dec, &support, &alphas)?;
        let phi_star = (chain.len() <= DEFAULT_ENUMERATION_CAP).then(|| exact_bottleneck(&chain)).transpose()?;
        Some(BottleneckSection {
            support: support.iter().map(|&i| chain.states()[i].clone()).collect(),
            pi_mass: flip_bound.pi_mass,
            boundary_flow: flip_bound.phi * flip_bound.pi_mass,
            phi: flip_bound.phi,
            flip_bound,
            phi_star,
        })
    } else {
        None
    };
    let report = AnalyzeReport {
        chain: ChainSummary { states: chain.len(), declared_transitive: chain.is_declared_transitive() },
        eigen: eigen_summary(&dec),
        band_masses: ks
            .iter()
            .map(|&k| KMasses {
                k,
                sensitivity_band_mass: sensitivity_band_mass(&profile, k),
                stability_tail_mass: stability_tail_mass(&profile, k),
            })
            .collect(),
        profile: ProfileSummary {
            mean: profile.mean,
            variance: profile.variance,
            second_moment: profile.second_moment,
            is_boolean: profile.is_boolean,
            mean_lambda: profile.mean_lambda,
            band_masses: profile.band_masses.clone(),
        },
        existence_gap: sensitive_existence_gap(&dec),
        curves,
        bottleneck,
    };
    let (header, rows) = curve_rows(&report.curves);
    match &a.out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| CliError::from(e).with("path", dir))?;
            write_json(&report, Some(&dir.join("report.json")))?;
            write_csv(&header, &rows, Some(&dir.join("curves.csv")))?;
        }
        None => match a.format {
            Format::Json => write_json(&report, None)?,
            Format::Csv => write_csv(&header, &rows, None)?,
        },
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Args)]
pub struct SweepArgs {
    /// Family name, e.g. cycle, complete, hypercube_rerandomize.
    #[arg(long)]
    family: String,
    #[arg(long)]
    n_min: usize,
    #[arg(long)]
    n_max: usize,
    /// Hamming weight for slice_exclusion.
    #[arg(long, default_value_t = 2)]
    slice_k: usize,
    /// Function spec files; band masses are reported for each.
    #[arg(long)]
    function: Vec<PathBuf>,
    #[arg(long, default_value = DEFAULT_KS)]
    k: String,
    /// Require exhaustive enumeration for Phi*.
    #[arg(long, conflicts_with = "sweep")]
    exact: bool,
    /// Use the eigenvector sweep bound for Phi*.
    #[arg(long)]
    sweep: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

fn family_spec(name: &str, n: usize, slice_k: usize) -> CliResult<FamilySpec> {
    let params = if name == "slice_exclusion" { json!({ "n": n, "k": slice_k }) } else { json!({ "n": n }) };
    serde_json::from_value(json!({ "family": name, "params": params }))
        .map_err(|e| CliError::new("BadSpec", e.to_string()).with("family", name))
}

#[derive(Serialize)]
struct SweepRow {
    n: usize,
    states: usize,
    lambda1: f64,
    t_rel: f64,
    lambda1_n2: f64,
    phi_star: f64,
    phi_method: &'static str,
    phi_n: f64,
    ratio_phi_lambda: f64,
    restricted_min: Option<f64>,
    existence_gap: f64,
    functions: Vec<FunctionMasses>,
}

#[derive(Serialize)]
struct FunctionMasses {
    variance: f64,
    sensitivity_band_mass: Vec<f64>,
    stability_tail_mass: Vec<f64>,
}

pub fn sweep(a: &SweepArgs) -> CliResult<ExitCode> {
    if a.n_min > a.n_max {
        return Err(CliError::new("InvalidParams", "n-min exceeds n-max").with("n_min", a.n_min).with("n_max", a.n_max));
    }
    let ks = k_list(&a.k)?;
    let functions = a.function.iter().map(|p| load_function(p)).collect::<CliResult<Vec<_>>>()?;
    let mut rows = Vec::new();
    for n in a.n_min..=a.n_max {
        let spec = family_spec(&a.family, n, a.slice_k)?;
        let chain = make_family(&spec).map_err(|e| CliError::from(e).with("n", n))?;
        let dec = decompose(&chain).map_err(|e| CliError::from(e).with("n", n))?;
        let enumerate = a.exact || (!a.sweep && chain.len() <= DEFAULT_ENUMERATION_CAP);
        let (phi_star, restricted_min, phi_method) = if enumerate {
            match nondegenerate_minimizer(&chain) {
                Ok(r) => (r.phi_star, Some(r.cut.phi), "enumeration"),
                Err(markov_noise::Error::NoSubsetInMassWindow) => (exact_bottleneck(&chain)?.phi, None, "enumeration"),
                Err(e) => return Err(CliError::from(e).with("n", n)),
            }
        } else {
            (sweep_cut(&dec, &chain)?.phi, None, "sweep")
        };
        let mut masses = Vec::new();
        for (spec, path) in functions.iter().zip(&a.function) {
            let f = spec.resolve(&chain, &dec).map_err(|e| CliError::from(e).with("path", path).with("n", n))?;
            let p = fourier_profile(&dec, &f)?;
            masses.push(FunctionMasses {
                variance: p.variance,
                sensitivity_band_mass: ks.iter().map(|&k| sensitivity_band_mass(&p, k)).collect(),
                stability_tail_mass: ks.iter().map(|&k| stability_tail_mass(&p, k)).collect(),
            });
        }
        let lambda1 = dec.spectral_gap();
        rows.push(SweepRow {
            n,
            states: chain.len(),
            lambda1,
            t_rel: dec.relaxation_time(),
            lambda1_n2: lambda1 * (n * n) as f64,
            phi_star,
            phi_method,
            phi_n: phi_star * n as f64,
            ratio_phi_lambda: phi_star / lambda1,
            restricted_min,
            existence_gap: sensitive_existence_gap(&dec).gap,
            functions: masses,
        });
    }
    if a.format == Format::Json {
        return write_json(&json!({ "family": a.family, "k": ks, "rows": rows }), a.out.as_deref())
            .map(|_| ExitCode::SUCCESS);
    }
    let mut header: Vec<String> = [
        "n",
        "states",
        "lambda1",
        "t_rel",
        "lambda1_n2",
        "phi_star",
        "phi_method",
        "phi_n",
        "ratio_phi_lambda",
        "restricted_min",
        "existence_gap",
    ]
    .map(String::from)
    .to_vec();
    for i in 0..functions.len() {
        header.push(format!("f{i}_variance"));
        for k in &ks {
            header.push(format!("f{i}_sens_k{k}"));
            header.push(format!("f{i}_tail_k{k}"));
        }
    }
    let cells = rows
        .iter()
        .map(|r| {
            let mut row = vec![
                r.n.to_string(),
                r.states.to_string(),
                num(r.lambda1),
                num(r.t_rel),
                num(r.lambda1_n2),
                num(r.phi_star),
                r.phi_method.to_string(),
                num(r.phi_n),
                num(r.ratio_phi_lambda),
                opt(r.restricted_min),
                num(r.existence_gap),
            ];
            for m in &r.functions {
                row.push(num(m.variance));
                for (s, t) in m.sensitivity_band_mass.iter().zip(&m.stability_tail_mass) {
                    row.push(num(*s));
                    row.push(num(*t));
                }
            }
            row
        })
        .collect::<Vec<_>>();
    write_csv(&header, &cells, a.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Args)]
pub struct BottleneckArgs {
    #[command(flatten)]
    chain: ChainArg,
    /// Exhaustive enumeration (default when the chain has at most 24 states).
    #[arg(long, conflicts_with = "sweep")]
    exact: bool,
    /// Eigenvector sweep cut, an upper bound on Phi*.
    #[arg(long)]
    sweep: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Serialize)]
struct BottleneckReport {
    lambda1: f64,
    cut: CutReport,
    cheeger: Option<CheegerReport>,
    nondegenerate: Option<Value>,
}

pub fn bottleneck(a: &BottleneckArgs) -> CliResult<ExitCode> {
    let chain = load_chain(&a.chain.chain)?;
    let dec = decompose(&chain)?;
    let enumerate = a.exact || (!a.sweep && chain.len() <= DEFAULT_ENUMERATION_CAP);
    let report = if enumerate {
        let cut = exact_bottleneck(&chain)?;
        let nondegenerate = match nondegenerate_minimizer(&chain) {
            Ok(r) => serde_json::to_value::<NondegenerateReport>(r)?,
            Err(e) => json!({ "error": error_value(&e) }),
        };
        BottleneckReport {
            lambda1: dec.spectral_gap(),
            cheeger: Some(cheeger_check(&chain, &dec)?),
            cut,
            nondegenerate: Some(nondegenerate),
        }
    } else {
        BottleneckReport { lambda1: dec.spectral_gap(), cut: sweep_cut(&dec, &chain)?, cheeger: None, nondegenerate: None }
    };
    match a.format {
        Format::Json => write_json(&report, a.out.as_deref())?,
        Format::Csv => {
            let c = &report.cut;
            let header = ["search_method", "phi", "pi_mass", "boundary_flow", "size", "is_exact_minimum", "labels"]
                .map(String::from)
                .to_vec();
            let method = serde_json::to_value(c.search_method)?.as_str().unwrap_or_default().to_string();
            let row = vec![
                method,
                num(c.phi),
                num(c.pi_mass),
                num(c.boundary_flow),
                c.subset.len().to_string(),
                c.is_exact_minimum.to_string(),
                c.labels.join(" "),
            ];
            write_csv(&header, &[row], a.out.as_deref())?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Args)]
pub struct StabilityArgs {
    #[command(flatten)]
    chain: ChainArg,
    /// Band multiplier: Psi_k spans eigenvalues in [lambda_1, k lambda_1].
    #[arg(long, default_value_t = 1.0)]
    k: f64,
    /// Both sides of a threshold cut must carry more than this mass.
    #[arg(long, default_value_t = 0.2)]
    delta: f64,
    /// Exponent of g(eps) = eps^g.
    #[arg(long, default_value_t = 1.0 / 3.0)]
    g_exponent: f64,
    #[arg(long)]
    alphas: Option<String>,
    /// Random unit vectors in Psi_k tried besides psi_1.
    #[arg(long, default_value_t = 16)]
    samples: usize,
    /// Threshold for the low-band probe P(psi^2 >= epsilon).
    #[arg(long, default_value_t = 0.05)]
    epsilon: f64,
    /// Probe evaluations.
    #[arg(long, default_value_t = 256)]
    budget: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Serialize)]
struct AmplitudeSummary {
    band: Vec<usize>,
    max: f64,
    min: f64,
    weighted_sum: f64,
}

#[derive(Serialize)]
struct StabilityReport {
    lambda1: f64,
    amplitude: AmplitudeSummary,
    probe: ProbeReport,
    threshold: Value,
}

pub fn stability(a: &StabilityArgs) -> CliResult<ExitCode> {
    let chain = load_chain(&a.chain.chain)?;
    let alphas = alpha_grid(a.alphas.as_deref())?;
    let dec = decompose(&chain)?;
    let band = band_subspace(&dec, a.k);
    let m = band_amplitude_max(&dec, &band)?;
    let amplitude = AmplitudeSummary {
        max: m.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        min: m.iter().cloned().fold(f64::INFINITY, f64::min),
        weighted_sum: amplitude_weighted_sum(&dec, &m),
        band,
    };
    let probe = condition_b_probe(&dec, a.k, a.epsilon, a.budget, a.seed)?;
    let cfg = SweepConfig {
        band_k: a.k,
        delta: a.delta,
        g_exponent: a.g_exponent,
        alphas,
        samples: a.samples,
        seed: a.seed,
    };
    let sweep = match threshold_sweep(&dec, &cfg) {
        Ok(r) => Ok(r),
        Err(e @ markov_noise::Error::NoAdmissibleThreshold) => Err(e),
        Err(e) => return Err(e.into()),
    };
    match a.format {
        Format::Json => {
            let threshold = match &sweep {
                Ok(r) => serde_json::to_value::<&ThresholdSweepReport>(r)?,
                Err(e) => json!({ "error": error_value(e) }),
            };
            let report = StabilityReport { lambda1: dec.spectral_gap(), amplitude, probe, threshold };
            write_json(&report, a.out.as_deref())?;
        }
        Format::Csv => {
            let header = [
                "source",
                "c",
                "mass_above",
                "mass_below",
                "admissible",
                "interval_mass_min_eps",
                "interval_mass_sup",
                "flip_min_alpha",
            ]
            .map(String::from)
            .to_vec();
            let rows: Vec<Vec<String>> = match &sweep {
                Ok(r) => r
                    .candidates
                    .iter()
                    .map(|c| {
                        vec![
                            c.source.to_string(),
                            num(c.c),
                            num(c.mass_above),
                            num(c.mass_below),
                            c.admissible.to_string(),
                            num(c.interval_mass_min_eps),
                            num(c.interval_mass_sup),
                            num(c.flip_min_alpha),
                        ]
                    })
                    .collect(),
                Err(_) => Vec::new(),
            };
            write_csv(&header, &rows, a.out.as_deref())?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Args)]
pub struct LocalizeArgs {
    #[command(flatten)]
    chain: ChainArg,
    /// Localize the values of this function.
    #[arg(long, conflicts_with_all = ["eigen", "k"])]
    function: Option<PathBuf>,
    /// Localize eigenvector `i` (default 1).
    #[arg(long, conflicts_with = "k")]
    eigen: Option<usize>,
    /// Localize the band amplitude of Psi_k.
    #[arg(long)]
    k: Option<f64>,
    /// Comma-separated delta values in (0, 1).
    #[arg(long, default_value = "0.5,0.2,0.1,0.05")]
    delta: String,
    #[arg(long, value_enum, default_value = "pi")]
    norm: Norm,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Serialize)]
struct LocalizeOutput {
    target: String,
    states: usize,
    #[serde(flatten)]
    report: LocalizationReport,
}

pub fn localize(a: &LocalizeArgs) -> CliResult<ExitCode> {
    let chain = load_chain(&a.chain.chain)?;
    let deltas = parse_list(&a.delta, "--delta")?;
    let dec = decompose(&chain)?;
    let (name, target) = if let Some(path) = &a.function {
        let f = load_function(path)?.resolve(&chain, &dec).map_err(|e| CliError::from(e).with("path", path))?;
        ("function".to_string(), LocalizationTarget::Vector(f.values().to_vec()))
    } else if let Some(k) = a.k {
        (format!("band k={k}"), LocalizationTarget::Band(band_subspace(&dec, k)))
    } else {
        let i = a.eigen.unwrap_or(1);
        if i >= chain.len() {
            return Err(CliError::new("InvalidParams", "eigenvector index out of range").with("eigen", i));
        }
        (format!("eigenvector {i}"), LocalizationTarget::Vector(dec.eigenvector(i).to_vec()))
    };
    let mode = match a.norm {
        Norm::Pi => NormMode::PiWeighted,
        Norm::Counting => NormMode::Counting,
    };
    let report = localization_report(&dec, &target, mode, &deltas)?;
    match a.format {
        Format::Json => write_json(&LocalizeOutput { target: name, states: chain.len(), report }, a.out.as_deref())?,
        Format::Csv => {
            let header = ["delta", "min_l", "fraction", "achieving_set"].map(String::from).to_vec();
            let rows: Vec<Vec<String>> = report
                .levels
                .iter()
                .map(|l| {
                    vec![
                        num(l.delta),
                        l.min_l.to_string(),
                        num(l.min_l as f64 / chain.len() as f64),
                        l.achieving_set.iter().map(|&i| chain.states()[i].as_str()).collect::<Vec<_>>().join(" "),
                    ]
                })
                .collect();
            write_csv(&header, &rows, a.out.as_deref())?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    chain: ChainArg,
    /// Function spec file; adds covariance (and flip for Boolean f) rows.
    #[arg(long)]
    function: Option<PathBuf>,
    /// Times as multiples of t_rel.
    #[arg(long, conflicts_with = "times")]
    alphas: Option<String>,
    /// Absolute times, comma-separated, nonnegative.
    #[arg(long)]
    times: Option<String>,
    #[arg(long, default_value_t = 100_000)]
    trials: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

/// |z| above this flags the run as inconsistent (exit 3).
const Z_TRIPWIRE: f64 = 5.0;

#[derive(Serialize)]
struct SimulateRow {
    #[serde(flatten)]
    estimate: TrajectoryEstimate,
    spectral: f64,
    z_score: f64,
}

fn return_probability(chain: &Chain, dec: &SpectralDecomposition, t: f64) -> CliResult<f64> {
    let k = transition_kernel(dec, t)?;
    Ok((0..chain.len()).map(|i| chain.pi()[i] * k[(i, i)]).sum())
}

pub fn simulate(a: &SimulateArgs) -> CliResult<ExitCode> {
    let chain = load_chain(&a.chain.chain)?;
    let dec = decompose(&chain)?;
    let times: Vec<f64> = match &a.times {
        Some(text) => {
            let ts = parse_list(text, "--times")?;
            if ts.is_empty() || ts.iter().any(|&t| t < 0.0) {
                return Err(CliError::new("NegativeTime", "times must be nonnegative").with("times", &ts));
            }
            ts
        }
        None => alpha_grid(Some(a.alphas.as_deref().unwrap_or("0.1,1")))?
            .into_iter()
            .map(|x| x * dec.relaxation_time())
            .collect(),
    };
    let f: Option<Observable> = match &a.function {
        Some(path) => {
            Some(load_function(path)?.resolve(&chain, &dec).map_err(|e| CliError::from(e).with("path", path))?)
        }
        None => None,
    };
    let profile = f.as_ref().map(|f| fourier_profile(&dec, f)).transpose()?;
    let mut rows = Vec::new();
    for &t in &times {
        let mut push = |estimate: TrajectoryEstimate, spectral: f64| {
            rows.push(SimulateRow { z_score: estimate.z_score(spectral), estimate, spectral });
        };
        push(estimate_return_prob(&chain, t, a.trials, a.seed)?, return_probability(&chain, &dec, t)?);
        if let (Some(f), Some(p)) = (&f, &profile) {
            push(estimate_cov(&chain, f.values(), t, a.trials, a.seed)?, p.covariance_at_time(t));
            if f.is_boolean() {
                push(estimate_flip(&chain, f.values(), t, a.trials, a.seed)?, p.flip_at(t * dec.spectral_gap()));
            }
        }
    }
    match a.format {
        Format::Json => write_json(&rows, a.out.as_deref())?,
        Format::Csv => {
            let header = ["quantity", "t", "estimate", "std_error", "trials", "seed", "spectral", "z_score"]
                .map(String::from)
                .to_vec();
            let cells: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    let e = &r.estimate;
                    vec![
                        e.quantity.as_str().to_string(),
                        num(e.t),
                        num(e.point_estimate),
                        num(e.std_error),
                        e.trials.to_string(),
                        e.seed.to_string(),
                        num(r.spectral),
                        num(r.z_score),
                    ]
                })
                .collect();
            write_csv(&header, &cells, a.out.as_deref())?;
        }
    }
    let worst = rows.iter().map(|r| r.z_score.abs()).fold(0.0, f64::max);
    if worst > Z_TRIPWIRE {
        let flagged: Vec<(Quantity, f64, f64)> = rows
            .iter()
            .filter(|r| r.z_score.abs() > Z_TRIPWIRE)
            .map(|r| (r.estimate.quantity, r.estimate.t, r.z_score))
            .collect();
        let e = CliError::new("SelfConsistency", format!("|z| = {worst:.2} exceeds {Z_TRIPWIRE}")).with("rows", flagged);
        eprintln!("{}", serde_json::to_string(&e)?);
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Args)]
pub struct ExportArgs {
    #[command(flatten)]
    chain: ChainArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn export(a: &ExportArgs) -> CliResult<ExitCode> {
    let chain = load_chain(&a.chain.chain)?;
    write_json(&ChainSpec::Explicit(export_chain(&chain)), a.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}
