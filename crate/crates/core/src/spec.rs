//! JSON chain spec files.
//!
//! A chain file is either a family reference,
//! `{"family": "cycle", "params": {"n": 4}}`, or an explicit generator,
//! `{"states": [...], "generator": [[...]], "pi": [...]}` with `pi` optional.
//! Matrix rows follow the order of `states`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::chain::{make_family, Chain, FamilySpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplicitChain {
    pub states: Vec<String>,
    pub generator: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pi: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub declared_transitive: Option<bool>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub automorphisms: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChainSpec {
    Family(FamilySpec),
    Explicit(ExplicitChain),
}

impl ChainSpec {
    pub fn from_json(text: &str) -> Result<ChainSpec> {
        serde_json::from_str(text).map_err(|e| Error::BadSpec(e.to_string()))
    }

    pub fn build(&self) -> Result<Chain> {
        match self {
            ChainSpec::Family(f) => make_family(f),
            ChainSpec::Explicit(e) => {
                let n = e.states.len();
                if e.generator.len() != n || e.generator.iter().any(|row| row.len() != n) {
                    return Err(Error::BadSpec(format!("generator must be {n} x {n}")));
                }
                let q = DMatrix::from_fn(n, n, |i, j| e.generator[i][j]);
                let chain = Chain::new(e.states.clone(), q, e.pi.clone())?;
                Ok(chain
                    .with_declared_transitive(e.declared_transitive.unwrap_or(false))
                    .with_automorphisms(e.automorphisms.clone()))
            }
        }
    }
}

/// Explicit form of a chain, suitable for writing back to a spec file.
pub fn export_chain(chain: &Chain) -> ExplicitChain {
    let n = chain.len();
    ExplicitChain {
        states: chain.states().to_vec(),
        generator: (0..n).map(|i| (0..n).map(|j| chain.rate(i, j)).collect()).collect(),
        pi: Some(chain.pi().to_vec()),
        declared_transitive: chain.is_declared_transitive().then_some(true),
        automorphisms: chain.automorphisms().to_vec(),
    }
}
