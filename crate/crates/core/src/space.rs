//! Finite sets of zero-mean proper jointly Gaussian complex variables,
//! represented by labeled Gram matrices. The Gram matrix fully determines
//! the joint statistics, so everything here is second-order algebra:
//! innovations, differential entropy, permutation and restriction.

use std::collections::HashSet;
use std::f64::consts::{E, PI};

use crate::error::{Error, Result};
use crate::kernel::{CMatrix, HermitianGram, InnovationsForm};

/// ln(pi * e), the differential entropy in nats of a unit-variance proper
/// complex Gaussian.
pub fn ln_pi_e() -> f64 {
    (PI * E).ln()
}

/// Labeled set of jointly Gaussian variables. Labels are opaque strings;
/// ordering semantics live entirely in list position.
#[derive(Debug, Clone)]
pub struct GaussianSet {
    labels: Vec<String>,
    gram: HermitianGram,
}

impl GaussianSet {
    pub fn new(labels: Vec<String>, gram: HermitianGram) -> Result<Self> {
        if labels.len() != gram.dim() {
            return Err(Error::dims(
                "GaussianSet::new",
                format!("{} labels vs gram dimension {}", labels.len(), gram.dim()),
            ));
        }
        let mut seen = HashSet::new();
        for label in &labels {
            if !seen.insert(label.as_str()) {
                return Err(Error::DuplicateLabel {
                    label: label.clone(),
                });
            }
        }
        Ok(GaussianSet { labels, gram })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn gram(&self) -> &HermitianGram {
        &self.gram
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    /// Innovations representation of the set in label order: the pivots are
    /// the innovations variances.
    pub fn innovations(&self) -> Result<InnovationsForm> {
        self.gram.ldl_semidefinite()
    }

    /// Differential entropy. Singular sets yield a -inf value rather than an
    /// error: a degenerate set is a meaningful limit, not a caller mistake.
    pub fn differential_entropy(&self) -> Result<EntropyValue> {
        let form = self.innovations()?;
        if !form.is_full_rank() {
            return Ok(EntropyValue {
                nats: f64::NEG_INFINITY,
            });
        }
        let nats = form.d2().iter().map(|&d| (PI * E * d).ln()).sum();
        Ok(EntropyValue { nats })
    }

    /// Entropy per complex dimension, ln(pi e |R|^(1/N)). Requires full rank.
    pub fn entropy_rate_per_dim(&self) -> Result<f64> {
        let form = self.innovations()?;
        if !form.is_full_rank() {
            return Err(Error::singular(
                "entropy_rate_per_dim",
                form.rank(),
                form.dim(),
            ));
        }
        let mean_log: f64 =
            form.d2().iter().map(|&d| d.ln()).sum::<f64>() / self.dim() as f64;
        Ok(ln_pi_e() + mean_log)
    }

    /// Reorder the set so its labels appear in `order`, which must be a
    /// permutation of the current labels.
    pub fn permute<S: AsRef<str>>(&self, order: &[S]) -> Result<GaussianSet> {
        if order.len() != self.labels.len() {
            return Err(Error::InvalidPermutation {
                detail: format!("{} labels given, set has {}", order.len(), self.labels.len()),
            });
        }
        self.restrict(order).map_err(|e| match e {
            Error::UnknownLabel { label } => Error::InvalidPermutation {
                detail: format!("label {label:?} is not in the set"),
            },
            Error::DuplicateLabel { label } => Error::InvalidPermutation {
                detail: format!("label {label:?} repeated"),
            },
            other => other,
        })
    }

    /// Principal submatrix over `subset`, in subset order.
    pub fn restrict<S: AsRef<str>>(&self, subset: &[S]) -> Result<GaussianSet> {
        let mut idx = Vec::with_capacity(subset.len());
        let mut seen = HashSet::new();
        for s in subset {
            let name = s.as_ref();
            if !seen.insert(name.to_string()) {
                return Err(Error::DuplicateLabel {
                    label: name.to_string(),
                });
            }
            let pos = self
                .labels
                .iter()
                .position(|l| l == name)
                .ok_or_else(|| Error::UnknownLabel {
                    label: name.to_string(),
                })?;
            idx.push(pos);
        }
        let sub = self.gram.matrix().submatrix(&idx, &idx);
        let gram = HermitianGram::new(sub)?;
        GaussianSet::new(subset.iter().map(|s| s.as_ref().to_string()).collect(), gram)
    }
}

/// Differential entropy value; `nats` is finite for full-rank sets and
/// `f64::NEG_INFINITY` for singular ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyValue {
    pub nats: f64,
}

impl EntropyValue {
    pub fn bits(&self) -> f64 {
        self.nats / std::f64::consts::LN_2
    }

    pub fn is_finite(&self) -> bool {
        self.nats.is_finite()
    }
}

/// Build a [`GaussianSet`] from real row data, for tests and examples.
pub fn real_gaussian_set(labels: &[&str], rows: &[Vec<f64>]) -> Result<GaussianSet> {
    let gram = HermitianGram::new(CMatrix::from_real_rows(rows)?)?;
    GaussianSet::new(labels.iter().map(|s| s.to_string()).collect(), gram)
}
