//! Concrete linear Gaussian channels (ISI block, MIMO, multi-access) as
//! joint Gram matrices, per-stage incremental rates under a decoding order,
//! and both decision-feedback filter forms.

use num_complex::Complex64;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::estimation::{mmse_project, mutual_information, JointGram};
use crate::kernel::{solve_unit_lower, CMatrix, HermitianGram};

/// Name of the observation group added by [`ChannelScenario::build_joint_gram`].
pub const OBSERVATION_GROUP: &str = "y";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    Isi,
    Mimo,
    Mac,
}

impl ScenarioKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioKind::Isi => "isi",
            ScenarioKind::Mimo => "mimo",
            ScenarioKind::Mac => "mac",
        }
    }
}

/// Lower-triangular banded Toeplitz matrix of a causal convolution with the
/// given taps, truncated to one block of `block_len` symbols. No cyclic
/// extension: `H[t][s] = taps[t-s]` for `0 <= t-s < taps.len()`.
pub fn isi_channel_matrix(taps: &[Complex64], block_len: usize) -> CMatrix {
    let mut h = CMatrix::zeros(block_len, block_len);
    for t in 0..block_len {
        for (lag, &tap) in taps.iter().enumerate() {
            if lag > t {
                break;
            }
            h.set(t, t - lag, tap);
        }
    }
    h
}

/// 1 x K row of per-user gains for a scalar multi-access channel.
pub fn mac_channel_matrix(gains: &[Complex64]) -> CMatrix {
    let mut h = CMatrix::zeros(1, gains.len());
    for (k, &g) in gains.iter().enumerate() {
        h.set(0, k, g);
    }
    h
}

/// A linear Gaussian channel Y = H X + N with X independent of N, plus a
/// partition of the input labels into decoding stages.
#[derive(Debug, Clone)]
pub struct ChannelScenario {
    pub kind: ScenarioKind,
    h: CMatrix,
    input_gram: HermitianGram,
    noise_gram: HermitianGram,
    groups: Vec<(String, Vec<String>)>,
}

impl ChannelScenario {
    pub fn new(
        kind: ScenarioKind,
        h: CMatrix,
        input_gram: HermitianGram,
        noise_gram: HermitianGram,
        groups: Vec<(String, Vec<String>)>,
    ) -> Result<Self> {
        if h.cols() != input_gram.dim() {
            return Err(Error::dims(
                "ChannelScenario::new",
                format!(
                    "channel has {} columns but input gram dimension is {}",
                    h.cols(),
                    input_gram.dim()
                ),
            ));
        }
        if h.rows() != noise_gram.dim() {
            return Err(Error::dims(
                "ChannelScenario::new",
                format!(
                    "channel has {} rows but noise gram dimension is {}",
                    h.rows(),
                    noise_gram.dim()
                ),
            ));
        }
        let total: usize = groups.iter().map(|(_, l)| l.len()).sum();
        if total != input_gram.dim() {
            return Err(Error::dims(
                "ChannelScenario::new",
                format!("groups cover {total} labels, input dimension is {}", input_gram.dim()),
            ));
        }
        if groups.iter().any(|(name, _)| name == OBSERVATION_GROUP) {
            return Err(Error::InvalidScenario(format!(
                "group name {OBSERVATION_GROUP:?} is reserved for the observation"
            )));
        }
        Ok(ChannelScenario {
            kind,
            h,
            input_gram,
            noise_gram,
            groups,
        })
    }

    pub fn channel(&self) -> &CMatrix {
        &self.h
    }

    pub fn input_gram(&self) -> &HermitianGram {
        &self.input_gram
    }

    pub fn noise_gram(&self) -> &HermitianGram {
        &self.noise_gram
    }

    pub fn groups(&self) -> &[(String, Vec<String>)] {
        &self.groups
    }

    pub fn input_dim(&self) -> usize {
        self.input_gram.dim()
    }

    pub fn output_dim(&self) -> usize {
        self.noise_gram.dim()
    }

    /// Input labels in scenario (group declaration) order.
    pub fn input_labels(&self) -> Vec<String> {
        self.groups.iter().flat_map(|(_, l)| l.iter().cloned()).collect()
    }

    fn observation_labels(&self) -> Vec<String> {
        (0..self.output_dim()).map(|i| format!("y{i}")).collect()
    }

    /// Joint Gram over (input groups..., observation group) with
    /// R_yy = H R_xx H* + R_nn and R_xy = R_xx H*.
    pub fn build_joint_gram(&self) -> Result<JointGram> {
        let noise_form = self.noise_gram.ldl_semidefinite()?;
        if !noise_form.is_full_rank() {
            return Err(Error::singular(
                "noise gram R_nn",
                noise_form.rank(),
                noise_form.dim(),
            ));
        }
        let obs_labels = self.observation_labels();
        for (_, labels) in &self.groups {
            for l in labels {
                if obs_labels.iter().any(|o| o == l) {
                    return Err(Error::InvalidScenario(format!(
                        "input label {l:?} collides with an observation label"
                    )));
                }
            }
        }

        let h_star = self.h.conj_transpose();
        let r_xy = self.input_gram.matrix().matmul(&h_star)?;
        let r_yy = self
            .h
            .matmul(self.input_gram.matrix())?
            .matmul(&h_star)?
            .add(self.noise_gram.matrix())?;

        let nx = self.input_dim();
        let ny = self.output_dim();
        let mut big = CMatrix::zeros(nx + ny, nx + ny);
        for i in 0..nx {
            for j in 0..nx {
                big.set(i, j, self.input_gram.at(i, j));
            }
            for j in 0..ny {
                big.set(i, nx + j, r_xy.at(i, j));
                big.set(nx + j, i, r_xy.at(i, j).conj());
            }
        }
        for i in 0..ny {
            for j in 0..ny {
                big.set(nx + i, nx + j, r_yy.at(i, j));
            }
        }

        let mut groups = self.groups.clone();
        groups.push((OBSERVATION_GROUP.to_string(), obs_labels));
        JointGram::new(groups, HermitianGram::new(big)?)
    }
}

/// Per-stage rate of one group under a decoding order.
#[derive(Debug, Clone)]
pub struct StageRate {
    pub group: String,
    pub nats: f64,
    pub bits: f64,
}

/// Incremental rates R_i of the groups in decoding order, their sum, and the
/// reference mutual information I(X;Y) computed by an independent route
/// (original group order). The sum equals the reference up to round-off.
#[derive(Debug, Clone)]
pub struct RateProfile {
    pub order: Vec<String>,
    pub stages: Vec<StageRate>,
    pub total_nats: f64,
    pub total_bits: f64,
    pub reference_mi_nats: f64,
    pub reference_mi_bits: f64,
}

impl RateProfile {
    /// |sum of stage rates - reference MI| in nats; the rate-sum self-check.
    pub fn rate_sum_residual(&self) -> f64 {
        (self.total_nats - self.reference_mi_nats).abs()
    }
}

/// Stage index spans of the given groups within their concatenation.
fn stage_spans(joint: &JointGram, order: &[&str]) -> Result<Vec<Range<usize>>> {
    let mut spans = Vec::with_capacity(order.len());
    let mut start = 0usize;
    for g in order {
        let len = joint.group_labels(g)?.len();
        spans.push(start..start + len);
        start += len;
    }
    Ok(spans)
}

/// The one group of `joint` that `order` leaves out: the observation set.
fn observation_group<'a>(joint: &'a JointGram, order: &[&str]) -> Result<&'a str> {
    let mut missing = Vec::new();
    for (name, _) in joint.groups() {
        if !order.contains(&name.as_str()) {
            missing.push(name.as_str());
        }
    }
    match missing.as_slice() {
        [only] => Ok(only),
        _ => Err(Error::InvalidPermutation {
            detail: format!(
                "order must list all groups except the observation set; unlisted: {missing:?}"
            ),
        }),
    }
}

/// Incremental rates in the given decoding order. For each stage,
/// R_i = h(X_i | X_1..i-1) - h(E_i | E_1..i-1), computed from the
/// innovations pivots of the reordered input and error Grams. The reference
/// MI is evaluated in the original group order, so the rate-sum identity is
/// a genuine two-route check.
pub fn incremental_rates(joint: &JointGram, order: &[&str]) -> Result<RateProfile> {
    let y = observation_group(joint, order)?;
    let spans = stage_spans(joint, order)?;

    let f_xx = joint
        .principal(order)?
        .ldl_semidefinite()
        .map_err(|e| e.named("input gram R_xx"))?;
    if !f_xx.is_full_rank() {
        return Err(Error::singular("input gram R_xx", f_xx.rank(), f_xx.dim()));
    }
    let p = mmse_project(joint, order, &[y])?;
    let f_ee = p
        .error_gram
        .ldl_semidefinite()
        .map_err(|e| e.named("error gram R_ee"))?;
    if !f_ee.is_full_rank() {
        return Err(Error::singular("error gram R_ee", f_ee.rank(), f_ee.dim()));
    }

    let mut stages = Vec::with_capacity(order.len());
    let mut total_nats = 0.0;
    for (g, span) in order.iter().zip(&spans) {
        let nats: f64 = span
            .clone()
            .map(|i| f_xx.d2()[i].ln() - f_ee.d2()[i].ln())
            .sum();
        total_nats += nats;
        stages.push(StageRate {
            group: g.to_string(),
            nats,
            bits: nats / std::f64::consts::LN_2,
        });
    }

    let original_order: Vec<&str> = joint
        .group_names()
        .into_iter()
        .filter(|n| *n != y)
        .collect();
    let reference = mutual_information(joint, &original_order, &[y])?;

    Ok(RateProfile {
        order: order.iter().map(|s| s.to_string()).collect(),
        stages,
        total_nats,
        total_bits: total_nats / std::f64::consts::LN_2,
        reference_mi_nats: reference.nats,
        reference_mi_bits: reference.bits(),
    })
}

/// Both decision-feedback filter forms for a scenario and decoding order.
///
/// `forward` is the MMSE estimator of the full (reordered) input from the
/// observation. `predictor` is the strictly block-lower-triangular MMSE
/// predictor B of each stage error from the previous stage errors. The
/// standard form uses feedforward (I - B) composed with the forward path and
/// feedback A_b = B; the noise-predictive and standard decoder inputs agree
/// identically.
#[derive(Debug, Clone)]
pub struct DfeFilters {
    pub forward: CMatrix,
    pub predictor: CMatrix,
    pub feedforward_std: CMatrix,
    pub feedback_std: CMatrix,
    pub order: Vec<String>,
    pub labels: Vec<String>,
    pub stage_spans: Vec<Range<usize>>,
}

pub fn dfe_filters(joint: &JointGram, order: &[&str]) -> Result<DfeFilters> {
    let y = observation_group(joint, order)?;
    let spans = stage_spans(joint, order)?;
    let labels = joint.labels_of(order)?;
    let n = labels.len();

    let p = mmse_project(joint, order, &[y])?;
    let f_ee = p
        .error_gram
        .ldl_semidefinite()
        .map_err(|e| e.named("error gram R_ee"))?;
    if !f_ee.is_full_rank() {
        return Err(Error::singular("error gram R_ee", f_ee.rank(), f_ee.dim()));
    }

    // Scalar LDL gives a monic factor L_s; regroup it into the block-monic
    // factor L_b = L_s * Lambda^{-1}, where Lambda is the block diagonal of
    // L_s. The block predictor is B = I - L_b^{-1} = I - Lambda L_s^{-1}.
    let l_s = f_ee.l();
    let mut lambda = CMatrix::identity(n);
    for span in &spans {
        for i in span.clone() {
            for j in span.start..i {
                lambda.set(i, j, l_s.at(i, j));
            }
        }
    }
    let l_s_inv = solve_unit_lower(l_s, &CMatrix::identity(n))?;
    let lb_inv = lambda.matmul(&l_s_inv)?;
    let mut predictor = CMatrix::identity(n).sub(&lb_inv)?;
    // Entries on and above the block diagonal are structural zeros; round-off
    // there is forced to exact zero.
    let stage_of: Vec<usize> = spans
        .iter()
        .enumerate()
        .flat_map(|(s, span)| span.clone().map(move |_| s))
        .collect();
    for i in 0..n {
        for j in 0..n {
            if stage_of[j] >= stage_of[i] {
                predictor.set(i, j, Complex64::ZERO);
            }
        }
    }

    let feedforward_std = CMatrix::identity(n).sub(&predictor)?.matmul(&p.coefficients)?;

    Ok(DfeFilters {
        forward: p.coefficients,
        feedback_std: predictor.clone(),
        predictor,
        feedforward_std,
        order: order.iter().map(|s| s.to_string()).collect(),
        labels,
        stage_spans: spans,
    })
}

/// Drop observation variables whose innovations pivot is zero (in label
/// order), so the observation block becomes full rank. Other groups are
/// untouched. The span of the observation set, and hence every projection
/// onto it, is unchanged.
pub fn reduce_observations(joint: &JointGram, y: &str) -> Result<JointGram> {
    let f_yy = joint.principal(&[y])?.ldl_semidefinite()?;
    let y_labels = joint.group_labels(y)?;
    let kept: Vec<String> = y_labels
        .iter()
        .zip(f_yy.d2())
        .filter(|(_, &d)| d > 0.0)
        .map(|(l, _)| l.clone())
        .collect();
    if kept.len() == y_labels.len() {
        return Ok(joint.clone());
    }

    let mut groups = Vec::new();
    let mut keep_labels: Vec<String> = Vec::new();
    for (name, labels) in joint.groups() {
        let new_labels = if name == y { kept.clone() } else { labels.clone() };
        keep_labels.extend(new_labels.iter().cloned());
        groups.push((name.clone(), new_labels));
    }
    let keep_refs: Vec<&str> = keep_labels.iter().map(|s| s.as_str()).collect();
    let idx: Vec<usize> = {
        // Indices of the kept labels in the existing gram.
        let all: Vec<String> = joint
            .groups()
            .iter()
            .flat_map(|(_, l)| l.iter().cloned())
            .collect();
        keep_refs
            .iter()
            .map(|l| all.iter().position(|a| a == l).expect("label exists"))
            .collect()
    };
    let sub = joint.gram().matrix().submatrix(&idx, &idx);
    JointGram::new(groups, HermitianGram::new(sub)?)
}
