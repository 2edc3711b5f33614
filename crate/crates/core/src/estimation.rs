//! MMSE projection machinery on partitioned Gram matrices: estimator
//! coefficients, error covariance, orthogonality checks, mutual information,
//! the chain rule of MMSE estimation, and the sufficiency (information
//! losslessness) check.
//!
//! Everything is computed by Gram algebra alone; no samples are involved.
//! Monte Carlo validation of these identities lives in [`crate::montecarlo`].

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::kernel::{CMatrix, HermitianGram};

/// Partitioned Gram matrix over named, disjoint groups of labels. The gram
/// covers the concatenation of all group label lists.
#[derive(Debug, Clone)]
pub struct JointGram {
    groups: Vec<(String, Vec<String>)>,
    gram: HermitianGram,
    index: HashMap<String, usize>,
}

impl JointGram {
    pub fn new(groups: Vec<(String, Vec<String>)>, gram: HermitianGram) -> Result<Self> {
        let mut index = HashMap::new();
        let mut names = std::collections::HashSet::new();
        let mut pos = 0usize;
        for (name, labels) in &groups {
            if !names.insert(name.as_str()) {
                return Err(Error::DuplicateLabel {
                    label: name.clone(),
                });
            }
            for label in labels {
                if index.insert(label.clone(), pos).is_some() {
                    return Err(Error::DuplicateLabel {
                        label: label.clone(),
                    });
                }
                pos += 1;
            }
        }
        if pos != gram.dim() {
            return Err(Error::dims(
                "JointGram::new",
                format!("{pos} labels vs gram dimension {}", gram.dim()),
            ));
        }
        Ok(JointGram { groups, gram, index })
    }

    pub fn groups(&self) -> &[(String, Vec<String>)] {
        &self.groups
    }

    pub fn gram(&self) -> &HermitianGram {
        &self.gram
    }

    pub fn group_names(&self) -> Vec<&str> {
        self.groups.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn group_labels(&self, name: &str) -> Result<&[String]> {
        self.groups
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, l)| l.as_slice())
            .ok_or_else(|| Error::UnknownGroup {
                group: name.to_string(),
            })
    }

    /// Concatenated labels of the given groups, in the given group order.
    pub fn labels_of(&self, groups: &[&str]) -> Result<Vec<String>> {
        let mut out = Vec::new();
        for g in groups {
            out.extend(self.group_labels(g)?.iter().cloned());
        }
        Ok(out)
    }

    /// Flat gram indices of the given groups, concatenated in group order.
    pub fn indices_of(&self, groups: &[&str]) -> Result<Vec<usize>> {
        let labels = self.labels_of(groups)?;
        Ok(labels.iter().map(|l| self.index[l]).collect())
    }

    /// Cross block R_ab for row groups `a` and column groups `b`.
    pub fn block(&self, row_groups: &[&str], col_groups: &[&str]) -> Result<CMatrix> {
        let r = self.indices_of(row_groups)?;
        let c = self.indices_of(col_groups)?;
        Ok(self.gram.matrix().submatrix(&r, &c))
    }

    /// Principal Hermitian block over the given groups.
    pub fn principal(&self, groups: &[&str]) -> Result<HermitianGram> {
        HermitianGram::new(self.block(groups, groups)?)
    }

    /// Scale used by the tolerance contracts: 1 + max diagonal entry.
    pub fn scale(&self) -> f64 {
        1.0 + self.gram.max_diagonal()
    }
}

/// Output of an MMSE projection: coefficient matrix A with `estimate = A y`,
/// the Gram of the estimate, and the Gram of the error (the Schur
/// complement). Estimate and error Grams sum to the target Gram.
#[derive(Debug, Clone)]
pub struct ProjectionResult {
    pub coefficients: CMatrix,
    pub estimate_gram: HermitianGram,
    pub error_gram: HermitianGram,
}

/// Mutual information value; `nats` is `f64::INFINITY` when the error Gram
/// is singular while the target Gram is not.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MutualInfo {
    pub nats: f64,
}

impl MutualInfo {
    pub fn bits(&self) -> f64 {
        self.nats / std::f64::consts::LN_2
    }

    pub fn is_infinite(&self) -> bool {
        self.nats.is_infinite()
    }
}

/// Coefficients solving `A R_yy = R_xy` through the Hermitian solve
/// `R_yy A* = R_xy*`.
fn projection_coefficients(r_yy: &HermitianGram, r_xy: &CMatrix) -> Result<CMatrix> {
    Ok(r_yy.solve_psd(&r_xy.conj_transpose())?.conj_transpose())
}

/// Projection pieces computed directly from Gram blocks, shared by the
/// public entry points.
fn project_blocks(
    r_xx: &HermitianGram,
    r_xy: &CMatrix,
    r_yy: &HermitianGram,
) -> Result<ProjectionResult> {
    let a = projection_coefficients(r_yy, r_xy)?;
    let r_yx = r_xy.conj_transpose();
    let estimate = a.matmul(&r_yx)?;
    let error = r_xx.matrix().sub(&estimate)?;
    // Re-symmetrize both pieces to suppress round-off asymmetry.
    Ok(ProjectionResult {
        coefficients: a,
        estimate_gram: HermitianGram::new(estimate)?,
        error_gram: HermitianGram::new(error)?,
    })
}

/// Project the `targets` groups onto the span of the `observed` groups.
/// The observed groups must be jointly full rank; rank-deficient observation
/// sets are rejected rather than silently reduced (see
/// [`crate::scenario::reduce_observations`]).
pub fn mmse_project(
    joint: &JointGram,
    targets: &[&str],
    observed: &[&str],
) -> Result<ProjectionResult> {
    let r_xx = joint.principal(targets)?;
    let r_xy = joint.block(targets, observed)?;
    let r_yy = joint.principal(observed)?;
    let form = r_yy.ldl_semidefinite().map_err(|e| e.named("R_yy"))?;
    if !form.is_full_rank() {
        return Err(Error::singular("observed gram R_yy", form.rank(), form.dim()));
    }
    project_blocks(&r_xx, &r_xy, &r_yy)
}

/// Largest magnitude among the entries of `<X - A Y, Y> = R_xy - A R_yy`.
/// Zero, up to round-off, exactly when `p` solves the normal equations.
pub fn orthogonality_residual(
    joint: &JointGram,
    p: &ProjectionResult,
    targets: &[&str],
    observed: &[&str],
) -> Result<f64> {
    let r_xy = joint.block(targets, observed)?;
    let r_yy = joint.principal(observed)?;
    let a_ryy = p.coefficients.matmul(r_yy.matrix())?;
    Ok(r_xy.max_abs_diff(&a_ryy))
}

/// I(X;Y) = ln |R_xx| - ln |R_ee|, evaluated through innovations pivots.
/// Returns +inf when the error Gram is singular while R_xx is not; errors
/// with `SingularGram` when R_xx itself is singular.
pub fn mutual_information(joint: &JointGram, x: &[&str], y: &[&str]) -> Result<MutualInfo> {
    let f_xx = joint.principal(x)?.ldl_semidefinite().map_err(|e| e.named("R_xx"))?;
    let Some(log_det_xx) = f_xx.log_determinant() else {
        return Err(Error::singular("target gram R_xx", f_xx.rank(), f_xx.dim()));
    };
    let p = mmse_project(joint, x, y)?;
    let f_ee = p
        .error_gram
        .ldl_semidefinite()
        .map_err(|e| e.named("R_ee"))?;
    match f_ee.log_determinant() {
        Some(log_det_ee) => Ok(MutualInfo {
            nats: log_det_xx - log_det_ee,
        }),
        None => Ok(MutualInfo { nats: f64::INFINITY }),
    }
}

/// Two-stage projection of `x` onto `{y, z}`: first onto `y`, then the
/// residual onto the innovations of `z` given `y`. All of it is Schur
/// complement algebra; the result agrees entrywise with the direct joint
/// projection `mmse_project(joint, x, y ++ z)`.
pub fn chain_rule_project(
    joint: &JointGram,
    x: &[&str],
    y: &[&str],
    z: &[&str],
) -> Result<ProjectionResult> {
    let stage1 = mmse_project(joint, x, y)?;

    // Innovations of Z given Y and the cross gram <X_perp_y, Z_perp_y>.
    let r_zy = joint.block(z, y)?;
    let r_yy = joint.principal(y)?;
    let a_zy = projection_coefficients(&r_yy, &r_zy)?;
    let r_zz = joint.principal(z)?;
    let s_z = HermitianGram::new(r_zz.matrix().sub(&a_zy.matmul(&r_zy.conj_transpose())?)?)?;

    let r_xz = joint.block(x, z)?;
    let r_yz = joint.block(y, z)?;
    let cross = r_xz.sub(&stage1.coefficients.matmul(&r_yz)?)?;

    let f_sz = s_z.ldl_semidefinite().map_err(|e| e.named("Z innovations gram"))?;
    if !f_sz.is_full_rank() {
        return Err(Error::singular(
            "innovations gram of Z given Y",
            f_sz.rank(),
            f_sz.dim(),
        ));
    }
    let a2 = projection_coefficients(&s_z, &cross)?;
    let second_estimate = a2.matmul(&cross.conj_transpose())?;

    let estimate = stage1.estimate_gram.matrix().add(&second_estimate)?;
    let error = stage1.error_gram.matrix().sub(&second_estimate)?;

    // Coefficients on the joint observation (y, z):
    // x_hat = (A1 - A2 A_zy) y + A2 z.
    let on_y = stage1.coefficients.sub(&a2.matmul(&a_zy)?)?;
    let coefficients = on_y.hconcat(&a2)?;

    Ok(ProjectionResult {
        coefficients,
        estimate_gram: HermitianGram::new(estimate)?,
        error_gram: HermitianGram::new(error)?,
    })
}

/// |I(X;Y) - I(X; X_hat)| in nats, where X_hat is the MMSE estimate of X
/// from Y. The reduction of Y to X_hat is information-lossless, so the
/// difference vanishes up to round-off on nondegenerate instances.
pub fn sufficiency_check(joint: &JointGram, x: &[&str], y: &[&str]) -> Result<f64> {
    let mi_direct = mutual_information(joint, x, y)?;
    if mi_direct.is_infinite() {
        return Err(Error::singular("error gram R_ee", 0, 0));
    }
    let p = mmse_project(joint, x, y)?;
    let est = &p.estimate_gram;
    let f_est = est.ldl_semidefinite().map_err(|e| e.named("estimate gram"))?;
    if !f_est.is_full_rank() {
        return Err(Error::singular(
            "estimate gram of X given Y",
            f_est.rank(),
            f_est.dim(),
        ));
    }

    // Joint Gram of (X, X_hat). The cross block <X, X_hat> equals the
    // estimate Gram itself, by orthogonality of the error.
    let n = est.dim();
    let r_xx = joint.principal(x)?;
    let mut big = CMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            big.set(i, j, r_xx.at(i, j));
            big.set(i, n + j, est.at(i, j));
            big.set(n + i, j, est.at(i, j));
            big.set(n + i, n + j, est.at(i, j));
        }
    }
    let groups = vec![
        ("x".to_string(), (0..n).map(|i| format!("x{i}")).collect()),
        ("v".to_string(), (0..n).map(|i| format!("v{i}")).collect()),
    ];
    let joint2 = JointGram::new(groups, HermitianGram::new(big)?)?;
    let mi_reduced = mutual_information(&joint2, &["x"], &["v"])?;
    Ok((mi_direct.nats - mi_reduced.nats).abs())
}
