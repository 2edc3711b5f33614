//! Scenario configuration: a single JSON document that validates to exactly
//! one channel scenario plus a decoding order and run parameters. Unknown
//! keys are rejected; semantic errors cite the failing key.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use gramdfe_core::{
    isi_channel_matrix, mac_channel_matrix, CMatrix, ChannelScenario, Complex64,
    Error as CoreError, HermitianGram, ScenarioKind,
};

use crate::CliError;

/// Complex numbers are [re, im] pairs throughout the config.
pub type ComplexPair = [f64; 2];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// "isi" | "mimo" | "mac"
    pub kind: String,
    /// ISI only: channel taps h0..hL.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub taps: Option<Vec<ComplexPair>>,
    /// MIMO only: full channel matrix, rows of [re, im] pairs.
    #[serde(default, alias = "H", skip_serializing_if = "Option::is_none")]
    pub h: Option<Vec<Vec<ComplexPair>>>,
    /// MAC only: per-user gains.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gains: Option<Vec<ComplexPair>>,
    /// ISI only: symbols per block.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_length: Option<usize>,
    /// Diagonal input gram: one power per symbol, or a single broadcast value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub powers: Option<Vec<f64>>,
    /// Full input gram, mutually exclusive with `powers`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_gram: Option<Vec<Vec<ComplexPair>>>,
    /// White noise variance, or a full noise gram.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_variance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_gram: Option<Vec<Vec<ComplexPair>>>,
    /// Decoding stages: each entry is a label list (a singleton group is
    /// named after its label) or an explicit { name, labels } object.
    pub groups: Vec<GroupSpec>,
    /// Decoding order: the group names, each exactly once.
    pub order: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    /// "bits" (default) or "nats": the unit emphasized in the summary.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_base: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<OutputsSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GroupSpec {
    Labels(Vec<String>),
    Named(NamedGroup),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedGroup {
    pub name: String,
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogBase {
    Bits,
    Nats,
}

/// A parsed and semantically validated configuration.
#[derive(Debug)]
pub struct ValidatedConfig {
    pub scenario: ChannelScenario,
    pub order: Vec<String>,
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub log_base: LogBase,
    pub out_dir: Option<PathBuf>,
    /// Canonical JSON form of the config, echoed into reports.
    pub canonical: serde_json::Value,
}

fn complex(p: ComplexPair) -> Complex64 {
    Complex64::new(p[0], p[1])
}

fn matrix_from_pairs(key: &str, rows: &[Vec<ComplexPair>]) -> Result<CMatrix, CliError> {
    let r = rows.len();
    let c = rows.first().map(Vec::len).unwrap_or(0);
    if r == 0 || c == 0 {
        return Err(CliError::input(format!("{key}: matrix must be nonempty")));
    }
    if rows.iter().any(|row| row.len() != c) {
        return Err(CliError::input(format!("{key}: rows have unequal lengths")));
    }
    let entries = rows.iter().flatten().map(|&p| complex(p)).collect();
    CMatrix::new(r, c, entries).map_err(|e| CliError::input(format!("{key}: {e}")))
}

fn hermitian_from_pairs(
    key: &str,
    rows: &[Vec<ComplexPair>],
    dim: usize,
) -> Result<HermitianGram, CliError> {
    let m = matrix_from_pairs(key, rows)?;
    if m.rows() != dim || m.cols() != dim {
        return Err(CliError::input(format!(
            "{key}: expected a {dim}x{dim} matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let g = HermitianGram::new(m).map_err(|e| CliError::input(format!("{key}: {e}")))?;
    // Establish positive semidefiniteness up front so config errors point at
    // the key rather than surfacing later inside an operation.
    if let Err(e @ CoreError::NotPositiveSemidefinite { .. }) = g.ldl_semidefinite() {
        return Err(CliError::input(format!(
            "{key}: failed the positive semidefinite check ({e})"
        )));
    }
    Ok(g)
}

fn forbid<T>(value: &Option<T>, key: &str, kind: &str) -> Result<(), CliError> {
    if value.is_some() {
        return Err(CliError::input(format!(
            "{key}: not applicable for kind {kind:?}"
        )));
    }
    Ok(())
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text)
            .map_err(|e| CliError::input(format!("config parse error: {e}")))
    }

    /// Canonical JSON form; parsing the canonical form of a config yields
    /// the same canonical form again.
    pub fn canonical_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<ValidatedConfig, CliError> {
        let groups: Vec<(String, Vec<String>)> = self
            .groups
            .iter()
            .enumerate()
            .map(|(i, g)| match g {
                GroupSpec::Named(n) => (n.name.clone(), n.labels.clone()),
                GroupSpec::Labels(labels) => {
                    if labels.len() == 1 {
                        (labels[0].clone(), labels.clone())
                    } else {
                        (format!("g{}", i + 1), labels.clone())
                    }
                }
            })
            .collect();
        if groups.iter().any(|(_, l)| l.is_empty()) {
            return Err(CliError::input("groups: empty group".to_string()));
        }
        let input_dim: usize = groups.iter().map(|(_, l)| l.len()).sum();

        let (kind, channel) = match self.kind.as_str() {
            "mac" => {
                forbid(&self.taps, "taps", "mac")?;
                forbid(&self.h, "h", "mac")?;
                forbid(&self.block_length, "block_length", "mac")?;
                let gains = self
                    .gains
                    .as_ref()
                    .ok_or_else(|| CliError::input("gains: required for kind \"mac\"".to_string()))?;
                if gains.len() != input_dim {
                    return Err(CliError::input(format!(
                        "gains: {} entries but groups cover {input_dim} labels",
                        gains.len()
                    )));
                }
                let g: Vec<Complex64> = gains.iter().map(|&p| complex(p)).collect();
                (ScenarioKind::Mac, mac_channel_matrix(&g))
            }
            "isi" => {
                forbid(&self.gains, "gains", "isi")?;
                forbid(&self.h, "h", "isi")?;
                let taps = self
                    .taps
                    .as_ref()
                    .ok_or_else(|| CliError::input("taps: required for kind \"isi\"".to_string()))?;
                if taps.is_empty() {
                    return Err(CliError::input("taps: must be nonempty".to_string()));
                }
                let n = self.block_length.ok_or_else(|| {
                    CliError::input("block_length: required for kind \"isi\"".to_string())
                })?;
                if n == 0 {
                    return Err(CliError::input("block_length: must be positive".to_string()));
                }
                if n != input_dim {
                    return Err(CliError::input(format!(
                        "block_length: {n} but groups cover {input_dim} labels"
                    )));
                }
                let t: Vec<Complex64> = taps.iter().map(|&p| complex(p)).collect();
                (ScenarioKind::Isi, isi_channel_matrix(&t, n))
            }
            "mimo" => {
                forbid(&self.taps, "taps", "mimo")?;
                forbid(&self.gains, "gains", "mimo")?;
                forbid(&self.block_length, "block_length", "mimo")?;
                let rows = self
                    .h
                    .as_ref()
                    .ok_or_else(|| CliError::input("h: required for kind \"mimo\"".to_string()))?;
                let h = matrix_from_pairs("h", rows)?;
                if h.cols() != input_dim {
                    return Err(CliError::input(format!(
                        "h: {} columns but groups cover {input_dim} labels",
                        h.cols()
                    )));
                }
                (ScenarioKind::Mimo, h)
            }
            other => {
                return Err(CliError::input(format!(
                    "kind: expected \"isi\", \"mimo\" or \"mac\", got {other:?}"
                )));
            }
        };
        let output_dim = channel.rows();

        let input_gram = match (&self.powers, &self.input_gram) {
            (Some(_), Some(_)) => {
                return Err(CliError::input(
                    "powers/input_gram: give exactly one".to_string(),
                ));
            }
            (None, None) => {
                return Err(CliError::input(
                    "powers/input_gram: one is required".to_string(),
                ));
            }
            (Some(powers), None) => {
                if powers.iter().any(|p| !p.is_finite() || *p < 0.0) {
                    return Err(CliError::input(
                        "powers: entries must be finite and nonnegative".to_string(),
                    ));
                }
                let diag: Vec<f64> = match powers.len() {
                    1 => vec![powers[0]; input_dim],
                    n if n == input_dim => powers.clone(),
                    n => {
                        return Err(CliError::input(format!(
                            "powers: {n} entries, expected 1 or {input_dim}"
                        )));
                    }
                };
                HermitianGram::from_real_diagonal(&diag)
                    .map_err(|e| CliError::input(format!("powers: {e}")))?
            }
            (None, Some(rows)) => hermitian_from_pairs("input_gram", rows, input_dim)?,
        };

        let noise_gram = match (&self.noise_variance, &self.noise_gram) {
            (Some(_), Some(_)) => {
                return Err(CliError::input(
                    "noise_variance/noise_gram: give exactly one".to_string(),
                ));
            }
            (None, None) => {
                return Err(CliError::input(
                    "noise_variance/noise_gram: one is required".to_string(),
                ));
            }
            (Some(v), None) => {
                if !v.is_finite() || *v <= 0.0 {
                    return Err(CliError::input(
                        "noise_variance: must be finite and positive".to_string(),
                    ));
                }
                HermitianGram::from_real_diagonal(&vec![*v; output_dim])
                    .map_err(|e| CliError::input(format!("noise_variance: {e}")))?
            }
            (None, Some(rows)) => {
                let g = hermitian_from_pairs("noise_gram", rows, output_dim)?;
                let full = g
                    .rank()
                    .map_err(|e| CliError::input(format!("noise_gram: {e}")))?
                    == output_dim;
                if !full {
                    return Err(CliError::input(
                        "noise_gram: must be full rank (nonsingular noise)".to_string(),
                    ));
                }
                g
            }
        };

        // The order lists every group name exactly once.
        let names: Vec<&str> = groups.iter().map(|(n, _)| n.as_str()).collect();
        if self.order.len() != names.len() {
            return Err(CliError::input(format!(
                "order: lists {} groups, config defines {}",
                self.order.len(),
                names.len()
            )));
        }
        for o in &self.order {
            if !names.contains(&o.as_str()) {
                return Err(CliError::input(format!("order: unknown group {o:?}")));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for o in &self.order {
            if !seen.insert(o.as_str()) {
                return Err(CliError::input(format!("order: group {o:?} repeated")));
            }
        }

        let log_base = match self.log_base.as_deref() {
            None | Some("bits") => LogBase::Bits,
            Some("nats") => LogBase::Nats,
            Some(other) => {
                return Err(CliError::input(format!(
                    "log_base: expected \"bits\" or \"nats\", got {other:?}"
                )));
            }
        };

        let scenario = ChannelScenario::new(kind, channel, input_gram, noise_gram, groups)
            .map_err(|e| CliError::input(format!("config: {e}")))?;

        Ok(ValidatedConfig {
            scenario,
            order: self.order.clone(),
            seed: self.seed,
            trials: self.trials,
            log_base,
            out_dir: self.outputs.as_ref().and_then(|o| o.dir.clone()),
            canonical: self.canonical_json(),
        })
    }
}
