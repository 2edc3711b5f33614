//! Seeded sampling of jointly Gaussian sets through the innovations
//! representation, genie-aided (ideal decision feedback) successive
//! decoding runs, and a desk-scale random-codebook decoding experiment.
//!
//! Reproducibility contract: every randomized routine takes a [`SeedSpec`];
//! trial `t` draws from a dedicated substream keyed by `(master_seed, t)`,
//! and aggregation is a sequential reduction in trial-index order, so
//! results are bit-identical for a given seed and do not depend on how
//! trials would be scheduled.

use num_complex::Complex64;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::estimation::mmse_project;
use crate::kernel::{CMatrix, HermitianGram, InnovationsForm};
use crate::scenario::{dfe_filters, incremental_rates, ChannelScenario, DfeFilters, OBSERVATION_GROUP};
use crate::space::GaussianSet;

/// Master seed for a simulation; trial `t` uses the substream keyed by
/// `(master_seed, t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedSpec {
    pub master_seed: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64) -> Self {
        SeedSpec { master_seed }
    }
}

/// SplitMix64 finalizer, used to key substreams.
fn splitmix_mix(mut x: u64) -> u64 {
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Deterministic per-trial generator: xoshiro256** state expanded by a
/// SplitMix64 chain from the key `mix(master_seed) ^ (trial+1) * GOLDEN`.
/// Proper complex Gaussians come from Box-Muller pairs, so each complex
/// sample consumes exactly two uniforms.
#[derive(Debug, Clone)]
pub struct TrialRng {
    s: [u64; 4],
}

impl TrialRng {
    pub fn for_trial(master_seed: u64, trial: u64) -> Self {
        let key = splitmix_mix(master_seed)
            ^ trial.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let mut z = key;
        let mut s = [0u64; 4];
        for slot in &mut s {
            z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
            *slot = splitmix_mix(z);
        }
        TrialRng { s }
    }

    pub fn next_u64(&mut self) -> u64 {
        let result = (self.s[1].wrapping_mul(5)).rotate_left(7).wrapping_mul(9);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        result
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Standard normal pair via Box-Muller.
    pub fn next_normal_pair(&mut self) -> (f64, f64) {
        loop {
            let u1 = self.next_f64();
            let u2 = self.next_f64();
            if u1 > 0.0 {
                let r = (-2.0 * u1.ln()).sqrt();
                let theta = 2.0 * std::f64::consts::PI * u2;
                return (r * theta.cos(), r * theta.sin());
            }
        }
    }

    /// Proper complex Gaussian with the given variance: real and imaginary
    /// parts are independent normals with variance `variance / 2`.
    pub fn next_proper_complex(&mut self, variance: f64) -> Complex64 {
        let (g1, g2) = self.next_normal_pair();
        Complex64::new(g1, g2) * (variance * 0.5).sqrt()
    }
}

/// Batch of samples: one row per trial, columns in the label order of the
/// sampled set.
#[derive(Debug, Clone)]
pub struct SampleBatch {
    pub labels: Vec<String>,
    pub values: CMatrix,
}

impl SampleBatch {
    pub fn n_trials(&self) -> usize {
        self.values.rows()
    }
}

/// Draw `n_trials` realizations of the set as X = L E with independent
/// proper complex innovations E of variances d2.
pub fn sample_gaussian(
    set: &GaussianSet,
    seed: &SeedSpec,
    n_trials: usize,
) -> Result<SampleBatch> {
    let form = set.innovations()?;
    let dim = set.dim();
    let mut values = CMatrix::zeros(n_trials, dim);
    let mut e = vec![Complex64::ZERO; dim];
    for t in 0..n_trials {
        let mut rng = TrialRng::for_trial(seed.master_seed, t as u64);
        draw_innovations(&mut rng, form.d2(), &mut e);
        for i in 0..dim {
            let mut acc = Complex64::ZERO;
            for k in 0..=i {
                acc += form.l().at(i, k) * e[k];
            }
            values.set(t, i, acc);
        }
    }
    Ok(SampleBatch {
        labels: set.labels().to_vec(),
        values,
    })
}

fn draw_innovations(rng: &mut TrialRng, d2: &[f64], out: &mut [Complex64]) {
    for (e, &v) in out.iter_mut().zip(d2) {
        *e = rng.next_proper_complex(v);
    }
}

/// Empirical Gram (1/n) sum of x x*, symmetrized. Needs at least two trials.
pub fn empirical_gram(batch: &SampleBatch) -> Result<HermitianGram> {
    let n = batch.n_trials();
    if n < 2 {
        return Err(Error::TooFewTrials { n, min: 2 });
    }
    let dim = batch.values.cols();
    let mut acc = CMatrix::zeros(dim, dim);
    for t in 0..n {
        for i in 0..dim {
            let xi = batch.values.at(t, i);
            for j in 0..dim {
                let v = acc.at(i, j) + xi * batch.values.at(t, j).conj();
                acc.set(i, j, v);
            }
        }
    }
    HermitianGram::new(acc.scale(1.0 / n as f64))
}

/// Per-stage comparison of the genie-aided decision-point error statistics
/// against theory.
#[derive(Debug, Clone)]
pub struct StageErrorReport {
    pub group: String,
    /// Innovations pivots of the theoretical stage error Gram (the slice of
    /// the global R_ee Cholesky factors belonging to this stage).
    pub theory_pivots: Vec<f64>,
    /// Innovations pivots of the empirical stage error Gram.
    pub empirical_pivots: Vec<f64>,
    /// Diagonal of the theoretical stage error Gram.
    pub theory_variances: Vec<f64>,
    /// Diagonal of the empirical stage error Gram.
    pub empirical_variances: Vec<f64>,
}

/// Outcome of a genie-aided successive decoding run.
#[derive(Debug, Clone)]
pub struct GenieRunReport {
    pub n_trials: usize,
    pub stages: Vec<StageErrorReport>,
    /// Theoretical Gram of the forward errors X - A Y (the Schur complement
    /// R_ee), in decode order.
    pub theory_error_gram: HermitianGram,
    /// Empirical Gram of the forward errors over all trials.
    pub empirical_error_gram: HermitianGram,
    /// Empirical <error_i, y_k>, rows in decode-order label order.
    pub cross_correlation: CMatrix,
    /// Standard error sqrt(var(err_i) var(y_k) / n) of each entry.
    pub cross_se: Vec<Vec<f64>>,
    /// |cross_correlation| over its standard error, same shape.
    pub cross_zscores: Vec<Vec<f64>>,
    pub max_cross_zscore: f64,
}

impl GenieRunReport {
    /// Largest entrywise deviation of the empirical forward-error Gram from
    /// theory, measured in standard errors sqrt(var_i var_j / n).
    pub fn forward_error_gram_max_zscore(&self) -> f64 {
        let n = self.n_trials as f64;
        let th = &self.theory_error_gram;
        let mut max_z: f64 = 0.0;
        for i in 0..th.dim() {
            for j in 0..th.dim() {
                let se = (th.at(i, i).re.max(0.0) * th.at(j, j).re.max(0.0) / n).sqrt();
                let dev = (self.empirical_error_gram.at(i, j) - th.at(i, j)).norm();
                let z = if se > 0.0 {
                    dev / se
                } else if dev == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                };
                max_z = max_z.max(z);
            }
        }
        max_z
    }
}

/// Theoretical Gram of the stage error: the Schur complement of the stage
/// block given all previous stages, read off the global LDL factors.
fn stage_gram(form: &InnovationsForm, span: &Range<usize>) -> CMatrix {
    let s = span.len();
    let mut out = CMatrix::zeros(s, s);
    for (oi, i) in span.clone().enumerate() {
        for (oj, j) in span.clone().enumerate() {
            let mut acc = Complex64::ZERO;
            for k in span.start..=(i.min(j)) {
                acc += form.l().at(i, k) * form.l().at(j, k).conj() * form.d2()[k];
            }
            out.set(oi, oj, acc);
        }
    }
    out
}

/// Shared per-trial machinery for the simulators: sample a channel use and
/// produce the ordered input, observation, forward estimate and error.
struct ChannelDraw {
    l_x: CMatrix,
    d2_x: Vec<f64>,
    l_n: CMatrix,
    d2_n: Vec<f64>,
    h: CMatrix,
    /// scenario index of each decode-ordered label
    ord_to_scn: Vec<usize>,
}

impl ChannelDraw {
    fn new(scenario: &ChannelScenario, ordered_labels: &[String]) -> Result<Self> {
        let input_set = GaussianSet::new(scenario.input_labels(), scenario.input_gram().clone())?;
        // Input innovations are taken in decode order so that stage spans of
        // the drawn innovations line up with the filter spans.
        let ordered_set = input_set.permute(ordered_labels)?;
        let f_x = ordered_set.innovations()?;
        let f_n = scenario.noise_gram().ldl_semidefinite()?;
        let scn_labels = scenario.input_labels();
        let ord_to_scn = ordered_labels
            .iter()
            .map(|l| scn_labels.iter().position(|s| s == l).expect("label exists"))
            .collect();
        Ok(ChannelDraw {
            l_x: f_x.l().clone(),
            d2_x: f_x.d2().to_vec(),
            l_n: f_n.l().clone(),
            d2_n: f_n.d2().to_vec(),
            h: scenario.channel().clone(),
            ord_to_scn,
        })
    }

    fn dim_x(&self) -> usize {
        self.d2_x.len()
    }

    fn dim_y(&self) -> usize {
        self.d2_n.len()
    }

    /// One channel use from already-drawn input innovations: returns
    /// (x_ordered, y).
    fn realize(&self, e_x: &[Complex64], rng: &mut TrialRng) -> (Vec<Complex64>, Vec<Complex64>) {
        let nx = self.dim_x();
        let ny = self.dim_y();
        let mut x_ord = vec![Complex64::ZERO; nx];
        for i in 0..nx {
            let mut acc = Complex64::ZERO;
            for k in 0..=i {
                acc += self.l_x.at(i, k) * e_x[k];
            }
            x_ord[i] = acc;
        }
        let mut x_scn = vec![Complex64::ZERO; nx];
        for (i, &si) in self.ord_to_scn.iter().enumerate() {
            x_scn[si] = x_ord[i];
        }
        let mut e_n = vec![Complex64::ZERO; ny];
        draw_innovations(rng, &self.d2_n, &mut e_n);
        let mut y = vec![Complex64::ZERO; ny];
        for i in 0..ny {
            let mut acc = Complex64::ZERO;
            for k in 0..=i {
                acc += self.l_n.at(i, k) * e_n[k];
            }
            for (k, &xv) in x_scn.iter().enumerate() {
                acc += self.h.at(i, k) * xv;
            }
            y[i] = acc;
        }
        (x_ord, y)
    }
}

/// Forward errors e = x - A y and decision-point errors
/// err = x - (x_hat + B e) of one channel use under ideal decision feedback,
/// with the true x supplied by the genie.
fn forward_and_decision_errors(
    filters: &DfeFilters,
    x_ord: &[Complex64],
    y: &[Complex64],
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let x_hat = filters.forward.matvec(y)?;
    let e: Vec<Complex64> = x_ord.iter().zip(&x_hat).map(|(a, b)| a - b).collect();
    let pred = filters.predictor.matvec(&e)?;
    let err = e.iter().zip(&pred).map(|(a, b)| a - b).collect();
    Ok((e, err))
}

fn decision_point_errors(
    filters: &DfeFilters,
    x_ord: &[Complex64],
    y: &[Complex64],
) -> Result<Vec<Complex64>> {
    Ok(forward_and_decision_errors(filters, x_ord, y)?.1)
}

/// Run a genie-aided successive decoding simulation: per trial, sample
/// (X, N), form Y = H X + N, compute the forward estimates and the
/// stage-by-stage decision-point errors using the true previous inputs, and
/// compare the per-stage error statistics against the Cholesky pivots of
/// R_ee. Draw order within a trial: input innovations first, then noise.
pub fn run_genie_dfe(
    scenario: &ChannelScenario,
    order: &[&str],
    filters: &DfeFilters,
    seed: &SeedSpec,
    n_trials: usize,
) -> Result<GenieRunReport> {
    if n_trials == 0 {
        return Err(Error::TooFewTrials { n: 0, min: 1 });
    }
    if filters.order != order {
        return Err(Error::InvalidScenario(format!(
            "filters were built for order {:?}, not {:?}",
            filters.order, order
        )));
    }
    let joint = scenario.build_joint_gram()?;
    let labels = joint.labels_of(order)?;
    if labels != filters.labels {
        return Err(Error::InvalidScenario(
            "filters were built for a different scenario".to_string(),
        ));
    }

    let p = mmse_project(&joint, order, &[OBSERVATION_GROUP])?;
    let f_ee = p.error_gram.ldl_semidefinite()?;
    let r_yy = joint.principal(&[OBSERVATION_GROUP])?;
    let draw = ChannelDraw::new(scenario, &labels)?;
    let nx = draw.dim_x();
    let ny = draw.dim_y();

    let mut stage_acc: Vec<CMatrix> = filters
        .stage_spans
        .iter()
        .map(|s| CMatrix::zeros(s.len(), s.len()))
        .collect();
    let mut forward_acc = CMatrix::zeros(nx, nx);
    let mut cross_acc = CMatrix::zeros(nx, ny);
    let mut e_x = vec![Complex64::ZERO; nx];

    for t in 0..n_trials {
        let mut rng = TrialRng::for_trial(seed.master_seed, t as u64);
        draw_innovations(&mut rng, &draw.d2_x, &mut e_x);
        let (x_ord, y) = draw.realize(&e_x, &mut rng);
        let (fwd, err) = forward_and_decision_errors(filters, &x_ord, &y)?;

        for (span, acc) in filters.stage_spans.iter().zip(&mut stage_acc) {
            for (oi, i) in span.clone().enumerate() {
                for (oj, j) in span.clone().enumerate() {
                    let v = acc.at(oi, oj) + err[i] * err[j].conj();
                    acc.set(oi, oj, v);
                }
            }
        }
        for i in 0..nx {
            for j in 0..nx {
                let v = forward_acc.at(i, j) + fwd[i] * fwd[j].conj();
                forward_acc.set(i, j, v);
            }
            for k in 0..ny {
                let v = cross_acc.at(i, k) + err[i] * y[k].conj();
                cross_acc.set(i, k, v);
            }
        }
    }

    let inv_n = 1.0 / n_trials as f64;
    let mut stages = Vec::with_capacity(order.len());
    let mut theory_var_flat = vec![0.0; nx];
    for ((g, span), acc) in order.iter().zip(&filters.stage_spans).zip(stage_acc) {
        let theory = stage_gram(&f_ee, span);
        let empirical = HermitianGram::new(acc.scale(inv_n))?;
        let emp_form = empirical.ldl_semidefinite()?;
        let theory_variances: Vec<f64> = (0..span.len()).map(|i| theory.at(i, i).re).collect();
        for (k, i) in span.clone().enumerate() {
            theory_var_flat[i] = theory_variances[k];
        }
        stages.push(StageErrorReport {
            group: g.to_string(),
            theory_pivots: f_ee.d2()[span.clone()].to_vec(),
            empirical_pivots: emp_form.d2().to_vec(),
            theory_variances,
            empirical_variances: (0..span.len()).map(|i| empirical.at(i, i).re).collect(),
        });
    }

    let cross = cross_acc.scale(inv_n);
    let mut ses = vec![vec![0.0; ny]; nx];
    let mut zscores = vec![vec![0.0; ny]; nx];
    let mut max_z: f64 = 0.0;
    for i in 0..nx {
        for k in 0..ny {
            let se = (theory_var_flat[i].max(0.0) * r_yy.at(k, k).re.max(0.0) * inv_n).sqrt();
            let z = if se > 0.0 {
                cross.at(i, k).norm() / se
            } else if cross.at(i, k).norm() == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            ses[i][k] = se;
            zscores[i][k] = z;
            max_z = max_z.max(z);
        }
    }

    Ok(GenieRunReport {
        n_trials,
        stages,
        theory_error_gram: p.error_gram,
        empirical_error_gram: HermitianGram::new(forward_acc.scale(inv_n))?,
        cross_correlation: cross,
        cross_se: ses,
        cross_zscores: zscores,
        max_cross_zscore: max_z,
    })
}

/// Hard cap on n*R for the random-codebook experiment: the codebook has
/// ceil(2^(n R)) words and is redrawn every trial, so this is a desk-scale
/// experiment by construction.
pub const CODEBOOK_RATE_CAP_BITS: f64 = 14.0;

/// Outcome of the random-codebook decoding trend experiment for one stage.
#[derive(Debug, Clone)]
pub struct CodebookExperiment {
    pub stage_index: usize,
    pub group: String,
    pub block_length: usize,
    pub rate_bits: f64,
    pub codebook_size: usize,
    pub trials: usize,
    pub word_errors: usize,
    pub wer: f64,
    pub incremental_rate_bits: f64,
}

/// Random-codebook experiment at one decoding stage.
///
/// Per trial: draw a fresh codebook of ceil(2^(n R)) words i.i.d. from the
/// stage's conditional Gaussian law across `n` independent channel uses,
/// transmit a uniformly chosen word, run the genie-aided decision-feedback
/// front end, and decode by minimum Euclidean distance weighted by the
/// inverse stage error covariance (maximum likelihood for the Gaussian
/// decision-point error). Draw order within a trial: codebook innovations
/// (word-major, then use), the transmitted index, then per use the non-stage
/// input innovations followed by the noise innovations.
pub fn run_codebook_experiment(
    scenario: &ChannelScenario,
    order: &[&str],
    stage_index: usize,
    block_length: usize,
    rate_bits: f64,
    seed: &SeedSpec,
    trials: usize,
) -> Result<CodebookExperiment> {
    if stage_index >= order.len() {
        return Err(Error::UnknownGroup {
            group: format!("stage {stage_index} of {} stages", order.len()),
        });
    }
    if block_length == 0 || trials == 0 {
        return Err(Error::TooFewTrials {
            n: block_length.min(trials),
            min: 1,
        });
    }
    if !(rate_bits >= 0.0) {
        return Err(Error::InvalidScenario(format!(
            "rate must be nonnegative, got {rate_bits}"
        )));
    }
    let nr = block_length as f64 * rate_bits;
    if nr > CODEBOOK_RATE_CAP_BITS + 1e-9 {
        return Err(Error::CodebookCapExceeded {
            nr,
            cap: CODEBOOK_RATE_CAP_BITS,
        });
    }
    let codebook_size = (2f64.powf(nr).ceil() as usize).max(1);

    let joint = scenario.build_joint_gram()?;
    let profile = incremental_rates(&joint, order)?;
    let filters = dfe_filters(&joint, order)?;
    let labels = joint.labels_of(order)?;
    let draw = ChannelDraw::new(scenario, &labels)?;

    let f_xx = joint.principal(order)?.ldl_semidefinite()?;
    let p = mmse_project(&joint, order, &[OBSERVATION_GROUP])?;
    let f_ee = p.error_gram.ldl_semidefinite()?;

    let span = filters.stage_spans[stage_index].clone();
    let s_dim = span.len();
    // Conditional innovations of the stage inputs given previous stages.
    let l_cond: Vec<Vec<Complex64>> = span
        .clone()
        .map(|i| span.clone().map(|k| f_xx.l().at(i, k)).collect())
        .collect();
    let d2_cond: Vec<f64> = f_xx.d2()[span.clone()].to_vec();
    // Stage error covariance and its inverse (the decoder metric weight).
    let s_err = HermitianGram::new(stage_gram(&f_ee, &span))?;
    let weight = s_err
        .solve_psd(&CMatrix::identity(s_dim))
        .map_err(|e| e.named("stage error gram"))?;

    let nx = draw.dim_x();
    let mut word_errors = 0usize;
    let mut e_x = vec![Complex64::ZERO; nx];
    let mut cw_innov = vec![Complex64::ZERO; s_dim];

    // Codeword storage is flat [word][use][coordinate] and reused across
    // trials; only the contents are redrawn.
    let word_len = block_length * s_dim;
    let mut codewords = vec![Complex64::ZERO; codebook_size * word_len];
    let mut innovations = vec![Complex64::ZERO; codebook_size * word_len];
    let mut v = vec![Complex64::ZERO; word_len];
    let w00 = weight.at(0, 0).re;

    for t in 0..trials {
        let mut rng = TrialRng::for_trial(seed.master_seed, t as u64);

        // Fresh codebook each trial.
        for k in 0..codebook_size {
            for u in 0..block_length {
                draw_innovations(&mut rng, &d2_cond, &mut cw_innov);
                let base = k * word_len + u * s_dim;
                for i in 0..s_dim {
                    let mut acc = Complex64::ZERO;
                    for kk in 0..=i {
                        acc += l_cond[i][kk] * cw_innov[kk];
                    }
                    codewords[base + i] = acc;
                    innovations[base + i] = cw_innov[i];
                }
            }
        }
        let sent = (rng.next_u64() % codebook_size as u64) as usize;

        // Genie-aided decision-point values, reduced to v = dp - conditional
        // mean, so that v = codeword symbol + stage error.
        for u in 0..block_length {
            let base = sent * word_len + u * s_dim;
            for i in 0..nx {
                if span.contains(&i) {
                    e_x[i] = innovations[base + i - span.start];
                } else {
                    e_x[i] = rng.next_proper_complex(draw.d2_x[i]);
                }
            }
            let (x_ord, y) = draw.realize(&e_x, &mut rng);
            let err = decision_point_errors(&filters, &x_ord, &y)?;
            for (i, gi) in span.clone().enumerate() {
                // dp - mean = (x - err) - (x - codeword) = codeword - err.
                v[u * s_dim + i] = codewords[base + i] - err[gi];
            }
        }

        // Minimum weighted Euclidean distance decoding; ties break to the
        // lowest index.
        let mut best_k = 0usize;
        let mut best_metric = f64::INFINITY;
        for k in 0..codebook_size {
            let word = &codewords[k * word_len..(k + 1) * word_len];
            let mut metric = 0.0;
            if s_dim == 1 {
                for (vu, cu) in v.iter().zip(word) {
                    metric += (vu - cu).norm_sqr() * w00;
                    if metric >= best_metric {
                        break;
                    }
                }
            } else {
                'uses: for u in 0..block_length {
                    for i in 0..s_dim {
                        let di = v[u * s_dim + i] - word[u * s_dim + i];
                        for jj in 0..s_dim {
                            let dj = v[u * s_dim + jj] - word[u * s_dim + jj];
                            metric += (di.conj() * weight.at(i, jj) * dj).re;
                        }
                    }
                    if metric >= best_metric {
                        break 'uses;
                    }
                }
            }
            if metric < best_metric {
                best_metric = metric;
                best_k = k;
            }
        }
        if best_k != sent {
            word_errors += 1;
        }
    }

    Ok(CodebookExperiment {
        stage_index,
        group: order[stage_index].to_string(),
        block_length,
        rate_bits,
        codebook_size,
        trials,
        word_errors,
        wer: word_errors as f64 / trials as f64,
        incremental_rate_bits: profile.stages[stage_index].bits,
    })
}
