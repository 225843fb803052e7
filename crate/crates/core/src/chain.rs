//! Finite reversible continuous-time Markov chains.
//!
//! A [`Chain`] bundles state labels, a generator matrix and its stationary
//! distribution. Chains come from three places: unit-rate random walks on
//! graphs ([`build_graph_walk`]), the built-in example families
//! ([`make_family`]), or user-supplied generators ([`Chain::new`]).
//!
//! Construction does not enforce reversibility; [`validate`] checks the
//! standing assumptions and the spectral code refuses chains that fail it.

use std::collections::{HashMap, HashSet, VecDeque};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative row-sum tolerance.
pub const ROW_SUM_TOL: f64 = 1e-12;
/// Relative detailed-balance tolerance.
pub const DETAILED_BALANCE_TOL: f64 = 1e-10;
/// Tolerance on `|sum(pi) - 1|`.
pub const PI_SUM_TOL: f64 = 1e-12;
/// Agreement required between a supplied and a computed stationary law.
pub const PI_AGREEMENT_TOL: f64 = 1e-9;
/// Residual bound for [`stationary_from_generator`].
pub const STATIONARY_RESIDUAL_TOL: f64 = 1e-10;

/// The built-in chain families and their integer parameters.
///
/// Serialized with adjacent tagging so that a spec file reads
/// `{"family": "slice_exclusion", "params": {"n": 5, "k": 2}}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum FamilySpec {
    /// Random walk on the complete graph `K_n`.
    Complete { n: usize },
    /// Random walk on the cycle with `2n` vertices.
    Cycle { n: usize },
    /// Random walk on the hypercube `Z_2^n`.
    HypercubeWalk { n: usize },
    /// Each coordinate of `{0,1}^n` is resampled uniformly at rate 1.
    HypercubeRerandomize { n: usize },
    /// Random walk on a star with `n` leaves.
    Star { n: usize },
    /// `K_{n^2}` and `K_n` joined by a single edge.
    GluedCliques { n: usize },
    /// `stars` stars (default `2n`) with `leaves` leaves each (default `n^2`),
    /// centers joined into a complete graph.
    StarJoin {
        n: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        stars: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        leaves: Option<usize>,
    },
    /// `K_{n+1}` and `Z_2^n` with one edge removed from each and two
    /// degree-preserving cross edges added.
    RegularGlue { n: usize },
    /// Interchange process on `{0,1}^n` strings of Hamming weight `k`.
    SliceExclusion { n: usize, k: usize },
}

impl FamilySpec {
    pub fn name(&self) -> &'static str {
        match self {
            FamilySpec::Complete { .. } => "complete",
            FamilySpec::Cycle { .. } => "cycle",
            FamilySpec::HypercubeWalk { .. } => "hypercube_walk",
            FamilySpec::HypercubeRerandomize { .. } => "hypercube_rerandomize",
            FamilySpec::Star { .. } => "star",
            FamilySpec::GluedCliques { .. } => "glued_cliques",
            FamilySpec::StarJoin { .. } => "star_join",
            FamilySpec::RegularGlue { .. } => "regular_glue",
            FamilySpec::SliceExclusion { .. } => "slice_exclusion",
        }
    }

    /// Build the family member for size parameter `n`, keeping any other
    /// parameters (`k` for the slice, star counts for star_join).
    pub fn with_n(&self, n: usize) -> FamilySpec {
        let mut out = self.clone();
        match &mut out {
            FamilySpec::Complete { n: m }
            | FamilySpec::Cycle { n: m }
            | FamilySpec::HypercubeWalk { n: m }
            | FamilySpec::HypercubeRerandomize { n: m }
            | FamilySpec::Star { n: m }
            | FamilySpec::GluedCliques { n: m }
            | FamilySpec::StarJoin { n: m, .. }
            | FamilySpec::RegularGlue { n: m }
            | FamilySpec::SliceExclusion { n: m, .. } => *m = n,
        }
        out
    }

    /// Number of states the family member will have, or `None` on overflow.
    pub fn state_count(&self) -> Option<usize> {
        match *self {
            FamilySpec::Complete { n } => Some(n),
            FamilySpec::Cycle { n } => n.checked_mul(2),
            FamilySpec::HypercubeWalk { n } | FamilySpec::HypercubeRerandomize { n } => {
                1usize.checked_shl(n as u32).filter(|_| n < usize::BITS as usize)
            }
            FamilySpec::Star { n } => n.checked_add(1),
            FamilySpec::GluedCliques { n } => n.checked_mul(n)?.checked_add(n),
            FamilySpec::StarJoin { n, stars, leaves } => {
                let s = stars.unwrap_or(2 * n);
                let l = leaves.unwrap_or(n * n);
                s.checked_mul(l.checked_add(1)?)
            }
            FamilySpec::RegularGlue { n } => {
                if n >= usize::BITS as usize {
                    return None;
                }
                (1usize << n).checked_add(n + 1)
            }
            FamilySpec::SliceExclusion { n, k } => {
                if k > n {
                    return Some(0);
                }
                let mut c: u128 = 1;
                for i in 0..k as u128 {
                    c = c * (n as u128 - i) / (i + 1);
                    if c > usize::MAX as u128 {
                        return None;
                    }
                }
                Some(c as usize)
            }
        }
    }
}

/// A finite continuous-time Markov chain with its stationary distribution.
///
/// Immutable once built.
#[derive(Debug, Clone)]
pub struct Chain {
    states: Vec<String>,
    generator: DMatrix<f64>,
    pi: Vec<f64>,
    family: Option<FamilySpec>,
    automorphisms: Vec<Vec<usize>>,
    transitive: bool,
}

impl Chain {
    /// Build a chain from a user-supplied generator.
    ///
    /// When `pi` is given it must agree with the solved stationary law within
    /// [`PI_AGREEMENT_TOL`]; the supplied values are kept.
    pub fn new(states: Vec<String>, generator: DMatrix<f64>, pi: Option<Vec<f64>>) -> Result<Chain> {
        check_shape(&states, &generator)?;
        let solved = stationary_from_generator(&generator)?;
        let pi = match pi {
            None => solved,
            Some(given) => {
                if given.len() != states.len() {
                    return Err(Error::DimensionMismatch { expected: states.len(), got: given.len() });
                }
                let worst = given
                    .iter()
                    .zip(&solved)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                if worst > PI_AGREEMENT_TOL {
                    return Err(Error::BadSpec(format!(
                        "supplied pi differs from stationary law by {worst:e}"
                    )));
                }
                given
            }
        };
        Ok(Chain { states, generator, pi, family: None, automorphisms: Vec::new(), transitive: false })
    }

    /// Assemble a chain without any checks. Intended for feeding
    /// possibly-broken input to [`validate`].
    pub fn from_raw(states: Vec<String>, generator: DMatrix<f64>, pi: Vec<f64>) -> Chain {
        Chain { states, generator, pi, family: None, automorphisms: Vec::new(), transitive: false }
    }

    /// Reversible chain from stationary weights and symmetric conductances:
    /// `q_ij = c_ij / pi_i`, so `pi_i q_ij = c_ij` holds by construction.
    pub fn from_conductances(states: Vec<String>, pi: Vec<f64>, conductance: &DMatrix<f64>) -> Result<Chain> {
        let n = states.len();
        if pi.len() != n || conductance.nrows() != n || conductance.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: pi.len() });
        }
        let total: f64 = pi.iter().sum();
        let pi: Vec<f64> = pi.iter().map(|p| p / total).collect();
        let mut q = DMatrix::zeros(n, n);
        for i in 0..n {
            let mut out = 0.0;
            for j in 0..n {
                if i != j {
                    let c = 0.5 * (conductance[(i, j)] + conductance[(j, i)]);
                    q[(i, j)] = c / pi[i];
                    out += q[(i, j)];
                }
            }
            q[(i, i)] = -out;
        }
        if !is_irreducible(&q) {
            return Err(Error::Reducible);
        }
        Ok(Chain::from_raw(states, q, pi))
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn generator(&self) -> &DMatrix<f64> {
        &self.generator
    }

    /// Off-diagonal rate `q_ij`.
    pub fn rate(&self, i: usize, j: usize) -> f64 {
        self.generator[(i, j)]
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn family(&self) -> Option<&FamilySpec> {
        self.family.as_ref()
    }

    pub fn automorphisms(&self) -> &[Vec<usize>] {
        &self.automorphisms
    }

    /// Transitivity as declared by the constructor; never inferred.
    pub fn is_declared_transitive(&self) -> bool {
        self.transitive
    }

    pub fn with_declared_transitive(mut self, transitive: bool) -> Chain {
        self.transitive = transitive;
        self
    }

    pub fn with_automorphisms(mut self, perms: Vec<Vec<usize>>) -> Chain {
        self.automorphisms = perms;
        self
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.states.iter().position(|s| s == label)
    }

    /// Indices of the given labels.
    pub fn indices_of<S: AsRef<str>>(&self, labels: &[S]) -> Result<Vec<usize>> {
        let lookup: HashMap<&str, usize> =
            self.states.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        labels
            .iter()
            .map(|l| lookup.get(l.as_ref()).copied().ok_or_else(|| Error::UnknownState(l.as_ref().to_string())))
            .collect()
    }

    /// The bits of a state whose label is a `0`/`1` string, coordinate 0 first.
    pub fn bits(&self, state: usize) -> Option<Vec<u8>> {
        let label = &self.states[state];
        if label.is_empty() || !label.bytes().all(|b| b == b'0' || b == b'1') {
            return None;
        }
        Some(label.bytes().map(|b| b - b'0').collect())
    }

    /// Total exit rate `-q_ii` of each state.
    pub fn exit_rates(&self) -> Vec<f64> {
        (0..self.len()).map(|i| -self.generator[(i, i)]).collect()
    }

    /// Same chain with states reordered so that new state `k` is old state
    /// `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> Chain {
        let n = self.len();
        let states = order.iter().map(|&o| self.states[o].clone()).collect();
        let generator = DMatrix::from_fn(n, n, |a, b| self.generator[(order[a], order[b])]);
        let pi = order.iter().map(|&o| self.pi[o]).collect();
        let mut inverse = vec![0; n];
        for (k, &o) in order.iter().enumerate() {
            inverse[o] = k;
        }
        let automorphisms = self
            .automorphisms
            .iter()
            .map(|perm| order.iter().map(|&o| inverse[perm[o]]).collect())
            .collect();
        Chain {
            states,
            generator,
            pi,
            family: self.family.clone(),
            automorphisms,
            transitive: self.transitive,
        }
    }
}

fn check_shape(states: &[String], generator: &DMatrix<f64>) -> Result<()> {
    let n = states.len();
    if n < 2 {
        return Err(Error::InvalidParams(format!("need at least 2 states, got {n}")));
    }
    if generator.nrows() != n || generator.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: generator.nrows() });
    }
    let unique: HashSet<&String> = states.iter().collect();
    if unique.len() != n {
        return Err(Error::BadSpec("duplicate state labels".into()));
    }
    if generator.iter().any(|x| !x.is_finite()) {
        return Err(Error::BadSpec("generator has non-finite entries".into()));
    }
    Ok(())
}

/// Strong connectivity of the directed graph `i -> j` where `q_ij > 0`.
pub fn is_irreducible(generator: &DMatrix<f64>) -> bool {
    let n = generator.nrows();
    if n == 0 {
        return false;
    }
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for w in 0..n {
                let rate = if forward { generator[(v, w)] } else { generator[(w, v)] };
                if w != v && rate > 0.0 && !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach(true) && reach(false)
}

/// Solve `pi Q = 0`, `sum(pi) = 1` for an irreducible generator.
pub fn stationary_from_generator(generator: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = generator.nrows();
    if n == 0 || generator.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: generator.ncols() });
    }
    if !is_irreducible(generator) {
        return Err(Error::Reducible);
    }
    // Q^T pi = 0 with the last equation swapped for the normalization.
    let mut a = generator.transpose();
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let lu = a.clone().lu();
    let mut x = lu
        .solve(&b)
        .ok_or_else(|| Error::NumericalFailure("singular stationary system".into()))?;
    // One round of iterative refinement.
    let r = &b - &a * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    let total: f64 = x.iter().sum();
    let pi: Vec<f64> = x.iter().map(|v| v / total).collect();
    if pi.iter().any(|&p| !(p > 0.0)) {
        return Err(Error::NumericalFailure("stationary vector not positive".into()));
    }
    let scale = generator.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let residual = (0..n)
        .map(|j| (0..n).map(|i| pi[i] * generator[(i, j)]).sum::<f64>().abs())
        .fold(0.0, f64::max);
    if residual > STATIONARY_RESIDUAL_TOL * scale {
        return Err(Error::NumericalFailure(format!("stationary residual {residual:e}")));
    }
    Ok(pi)
}

/// Unit-rate random walk on an undirected simple graph given by labeled edges.
/// Vertices are ordered by first appearance.
pub fn build_graph_walk<S: AsRef<str>>(edges: &[(S, S)]) -> Result<Chain> {
    let mut labels: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut pairs = Vec::with_capacity(edges.len());
    for (a, b) in edges {
        let mut id = |l: &str| {
            *index.entry(l.to_string()).or_insert_with(|| {
                labels.push(l.to_string());
                labels.len() - 1
            })
        };
        let (i, j) = (id(a.as_ref()), id(b.as_ref()));
        pairs.push((i, j));
    }
    graph_walk(labels, &pairs)
}

/// Graph walk over fixed vertex labels and index edges.
pub(crate) fn graph_walk(labels: Vec<String>, edges: &[(usize, usize)]) -> Result<Chain> {
    let n = labels.len();
    if edges.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let mut adj = vec![Vec::new(); n];
    let mut seen = HashSet::new();
    for &(a, b) in edges {
        if a == b || !seen.insert((a.min(b), a.max(b))) {
            return Err(Error::SelfLoopOrMultiEdge(format!("{}-{}", labels[a], labels[b])));
        }
        adj[a].push(b);
        adj[b].push(a);
    }
    if n < 2 {
        return Err(Error::EmptyGraph);
    }
    if adj.iter().any(Vec::is_empty) {
        return Err(Error::DisconnectedGraph);
    }
    let mut q = DMatrix::zeros(n, n);
    for (v, nbrs) in adj.iter().enumerate() {
        let rate = 1.0 / nbrs.len() as f64;
        for &w in nbrs {
            q[(v, w)] = rate;
        }
        q[(v, v)] = -1.0;
    }
    if !is_irreducible(&q) {
        return Err(Error::DisconnectedGraph);
    }
    let vol = 2.0 * edges.len() as f64;
    let pi = adj.iter().map(|nb| nb.len() as f64 / vol).collect();
    Ok(Chain::from_raw(labels, q, pi))
}

fn bit_label(word: usize, n: usize) -> String {
    (0..n).map(|i| if word >> i & 1 == 1 { '1' } else { '0' }).collect()
}

fn cycle_perm(len: usize) -> Vec<usize> {
    (0..len).map(|i| (i + 1) % len).collect()
}

/// Construct a member of one of the built-in families.
pub fn make_family(spec: &FamilySpec) -> Result<Chain> {
    let bad = |msg: &str| Err(Error::InvalidParams(format!("{}: {msg}", spec.name())));
    let chain = match *spec {
        FamilySpec::Complete { n } => {
            if n < 2 {
                return bad("n must be at least 2");
            }
            let labels = (0..n).map(|i| i.to_string()).collect();
            let edges: Vec<_> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
            let mut swap: Vec<usize> = (0..n).collect();
            swap.swap(0, 1);
            graph_walk(labels, &edges)?
                .with_declared_transitive(true)
                .with_automorphisms(vec![cycle_perm(n), swap])
        }
        FamilySpec::Cycle { n } => {
            if n < 2 {
                return bad("n must be at least 2");
            }
            let m = 2 * n;
            let labels = (0..m).map(|i| i.to_string()).collect();
            let edges: Vec<_> = (0..m).map(|i| (i, (i + 1) % m)).collect();
            let reflect = (0..m).map(|i| (m - i) % m).collect();
            graph_walk(labels, &edges)?
                .with_declared_transitive(true)
                .with_automorphisms(vec![cycle_perm(m), reflect])
        }
        FamilySpec::HypercubeWalk { n } => {
            if n == 0 || n > 20 {
                return bad("n must be in 1..=20");
            }
            let size = 1usize << n;
            let labels = (0..size).map(|w| bit_label(w, n)).collect();
            let edges: Vec<_> = (0..size)
                .flat_map(|w| (0..n).map(move |i| (w, w ^ (1 << i))).filter(|&(a, b)| a < b))
                .collect();
            let flips = (0..n).map(|i| (0..size).map(|w| w ^ (1 << i)).collect()).collect();
            graph_walk(labels, &edges)?.with_declared_transitive(true).with_automorphisms(flips)
        }
        FamilySpec::HypercubeRerandomize { n } => {
            if n == 0 || n > 20 {
                return bad("n must be in 1..=20");
            }
            let size = 1usize << n;
            let mut q = DMatrix::zeros(size, size);
            for w in 0..size {
                for i in 0..n {
                    q[(w, w ^ (1 << i))] = 0.5;
                }
                q[(w, w)] = -(n as f64) / 2.0;
            }
            let labels = (0..size).map(|w| bit_label(w, n)).collect();
            let flips = (0..n).map(|i| (0..size).map(|w| w ^ (1 << i)).collect()).collect();
            Chain::from_raw(labels, q, vec![1.0 / size as f64; size])
                .with_declared_transitive(true)
                .with_automorphisms(flips)
        }
        FamilySpec::Star { n } => {
            if n == 0 {
                return bad("n must be at least 1");
            }
            let labels = std::iter::once("c".to_string()).chain((0..n).map(|i| format!("l{i}"))).collect();
            let edges: Vec<_> = (1..=n).map(|i| (0, i)).collect();
            graph_walk(labels, &edges)?
        }
        FamilySpec::GluedCliques { n } => {
            if n == 0 {
                return bad("n must be at least 1");
            }
            let big = n * n;
            let labels = (0..big)
                .map(|i| format!("big{i}"))
                .chain((0..n).map(|i| format!("small{i}")))
                .collect();
            let mut edges: Vec<_> = (0..big).flat_map(|i| (i + 1..big).map(move |j| (i, j))).collect();
            edges.extend((0..n).flat_map(|i| (i + 1..n).map(move |j| (big + i, big + j))));
            edges.push((0, big));
            graph_walk(labels, &edges)?
        }
        FamilySpec::StarJoin { n, stars, leaves } => {
            let s = stars.unwrap_or(2 * n);
            let l = leaves.unwrap_or(n * n);
            if s == 0 || l == 0 || s * (l + 1) < 2 {
                return bad("need at least one star with one leaf");
            }
            let mut labels = Vec::with_capacity(s * (l + 1));
            let mut edges = Vec::new();
            for star in 0..s {
                let center = labels.len();
                labels.push(format!("s{star}c"));
                for leaf in 0..l {
                    edges.push((center, labels.len()));
                    labels.push(format!("s{star}l{leaf}"));
                }
            }
            let centers: Vec<usize> = (0..s).map(|i| i * (l + 1)).collect();
            for a in 0..s {
                for b in a + 1..s {
                    edges.push((centers[a], centers[b]));
                }
            }
            graph_walk(labels, &edges)?
        }
        FamilySpec::RegularGlue { n } => {
            if !(2..=20).contains(&n) {
                return bad("n must be in 2..=20");
            }
            let k = n + 1;
            let cube = 1usize << n;
            let labels = (0..k)
                .map(|i| format!("k{i}"))
                .chain((0..cube).map(|w| format!("h{}", bit_label(w, n))))
                .collect();
            // Drop k0-k1 and h(0)-h(e_0); add k0-h(0) and k1-h(e_0).
            let mut edges: Vec<_> = (0..k)
                .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
                .filter(|&e| e != (0, 1))
                .collect();
            edges.extend(
                (0..cube)
                    .flat_map(|w| (0..n).map(move |i| (w, w ^ (1 << i))))
                    .filter(|&(a, b)| a < b && (a, b) != (0, 1))
                    .map(|(a, b)| (k + a, k + b)),
            );
            edges.push((0, k));
            edges.push((1, k + 1));
            graph_walk(labels, &edges)?
        }
        FamilySpec::SliceExclusion { n, k } => {
            if n < 2 || k == 0 || k >= n || n > 24 {
                return bad("need 0 < k < n <= 24");
            }
            let words: Vec<usize> = (0..1usize << n).filter(|w| w.count_ones() as usize == k).collect();
            let index: HashMap<usize, usize> = words.iter().enumerate().map(|(i, &w)| (w, i)).collect();
            let size = words.len();
            let rate = 2.0 / (n * n) as f64;
            let mut q = DMatrix::zeros(size, size);
            for (a, &w) in words.iter().enumerate() {
                let mut out = 0.0;
                for i in 0..n {
                    for j in i + 1..n {
                        if (w >> i & 1) != (w >> j & 1) {
                            let b = index[&(w ^ (1 << i) ^ (1 << j))];
                            q[(a, b)] = rate;
                            out += rate;
                        }
                    }
                }
                q[(a, a)] = -out;
            }
            let labels = words.iter().map(|&w| bit_label(w, n)).collect();
            let relabel = |f: &dyn Fn(usize) -> usize| -> Vec<usize> {
                words
                    .iter()
                    .map(|&w| {
                        let img = (0..n).filter(|&i| w >> i & 1 == 1).fold(0, |acc, i| acc | 1 << f(i));
                        index[&img]
                    })
                    .collect()
            };
            let shift = relabel(&|i| (i + 1) % n);
            let swap = relabel(&|i| match i {
                0 => 1,
                1 => 0,
                _ => i,
            });
            Chain::from_raw(labels, q, vec![1.0 / size as f64; size])
                .with_declared_transitive(true)
                .with_automorphisms(vec![shift, swap])
        }
    };
    Ok(Chain { family: Some(spec.clone()), ..chain })
}

/// Random irreducible reversible chain: a random spanning tree plus extra
/// edges with probability `density`, random conductances and random
/// stationary weights.
pub fn random_reversible(size: usize, density: f64, seed: u64) -> Result<Chain> {
    if size < 2 {
        return Err(Error::InvalidParams("need at least 2 states".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pi: Vec<f64> = (0..size).map(|_| rng.random_range(0.2..2.0)).collect();
    let mut c = DMatrix::zeros(size, size);
    for v in 1..size {
        let u = rng.random_range(0..v);
        let w = rng.random_range(0.1..1.0);
        c[(u, v)] = w;
        c[(v, u)] = w;
    }
    for u in 0..size {
        for v in u + 1..size {
            if c[(u, v)] == 0.0 && rng.random::<f64>() < density {
                let w = rng.random_range(0.1..1.0);
                c[(u, v)] = w;
                c[(v, u)] = w;
            }
        }
    }
    let states = (0..size).map(|i| format!("s{i}")).collect();
    Chain::from_conductances(states, pi, &c)
}

/// Outcome of one standing-assumption check.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Worst violation, relative to the tolerance scale of the check.
    pub worst_residual: f64,
}

/// Per-invariant pass/fail record produced by [`validate`].
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> Vec<&'static str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect()
    }
}

/// Check every chain invariant and report worst-case residuals.
pub fn validate(chain: &Chain) -> ValidationReport {
    let q = &chain.generator;
    let pi = &chain.pi;
    let n = chain.states.len();
    let mut checks = Vec::new();

    let shape_ok = n >= 2 && q.nrows() == n && q.ncols() == n && pi.len() == n;
    checks.push(Check { name: "shape", passed: shape_ok, worst_residual: if shape_ok { 0.0 } else { 1.0 } });
    if !shape_ok {
        return ValidationReport { checks };
    }

    let mut worst_offdiag = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            if i != j && q[(i, j)] < 0.0 {
                worst_offdiag = worst_offdiag.max(-q[(i, j)]);
            }
        }
    }
    checks.push(Check { name: "off_diagonal_nonnegative", passed: worst_offdiag == 0.0, worst_residual: worst_offdiag });

    let mut worst_row = 0.0f64;
    let mut row_ok = true;
    for i in 0..n {
        let row = q.row(i);
        let sum: f64 = row.iter().sum();
        let scale: f64 = row.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
        worst_row = worst_row.max(sum.abs());
        row_ok &= sum.abs() <= ROW_SUM_TOL * scale;
    }
    checks.push(Check { name: "row_sums", passed: row_ok, worst_residual: worst_row });

    let mut worst_db = 0.0f64;
    let mut db_ok = true;
    for i in 0..n {
        for j in i + 1..n {
            let a = pi[i] * q[(i, j)];
            let b = pi[j] * q[(j, i)];
            let diff = (a - b).abs();
            let scale = a.abs().max(b.abs()).max(1e-300);
            worst_db = worst_db.max(diff / scale);
            db_ok &= diff <= DETAILED_BALANCE_TOL * scale;
        }
    }
    checks.push(Check { name: "detailed_balance", passed: db_ok, worst_residual: worst_db });

    let irreducible = is_irreducible(q);
    checks.push(Check { name: "irreducible", passed: irreducible, worst_residual: if irreducible { 0.0 } else { 1.0 } });

    let min_pi = pi.iter().copied().fold(f64::INFINITY, f64::min);
    checks.push(Check { name: "pi_positive", passed: min_pi > 0.0, worst_residual: (-min_pi).max(0.0) });

    let sum_err = (pi.iter().sum::<f64>() - 1.0).abs();
    checks.push(Check { name: "pi_normalized", passed: sum_err <= PI_SUM_TOL, worst_residual: sum_err });

    ValidationReport { checks }
}
