use super::gmm::{gmm_fit, GaussianMixture};
use super::hog::augment;
use super::CascadeError;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// One cascade stage: a fuzzy mixture plus one regression matrix per
/// cluster. Each matrix is (d+1) x 2N so that `W^T x'` is a shape update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureStage {
    pub gmm: GaussianMixture,
    pub regressors: Vec<DMatrix<f64>>,
}

impl MixtureStage {
    pub fn n_clusters(&self) -> usize {
        self.regressors.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.regressors.first().map_or(0, |w| w.nrows().saturating_sub(1))
    }

    pub fn target_dim(&self) -> usize {
        self.regressors.first().map_or(0, |w| w.ncols())
    }
}

/// Membership-weighted mixture prediction: `sum_i psi_i * W_i^T x'`.
pub fn predict_update(stage: &MixtureStage, x: &[f64]) -> Result<Vec<f64>, CascadeError> {
    if x.len() != stage.feature_dim() {
        return Err(CascadeError::DimensionMismatch(format!(
            "feature dim {} vs stage dim {}",
            x.len(),
            stage.feature_dim()
        )));
    }
    let psi = stage.gmm.membership(x)?;
    let xa = augment(x);
    let mut out = vec![0.0; stage.target_dim()];
    for (w, &p) in stage.regressors.iter().zip(&psi) {
        if p == 0.0 {
            continue;
        }
        for col in 0..w.ncols() {
            let mut acc = 0.0;
            for row in 0..w.nrows() {
                acc += w[(row, col)] * xa[row];
            }
            out[col] += p * acc;
        }
    }
    Ok(out)
}

/// Fits a GMM over the features, then solves a membership-weighted ridge
/// least-squares problem per cluster:
/// `min_W sum_n psi_i(x_n) ||W^T x'_n - dS_n||^2 + lambda ||W||_F^2`.
pub fn train_stage(
    features: &[Vec<f64>],
    targets: &[Vec<f64>],
    c: usize,
    lambda: f64,
    seed: u64,
) -> Result<MixtureStage, CascadeError> {
    if features.is_empty() {
        return Err(CascadeError::EmptyInput);
    }
    if features.len() != targets.len() {
        return Err(CascadeError::DimensionMismatch(format!(
            "{} features vs {} targets",
            features.len(),
            targets.len()
        )));
    }
    let d = features[0].len();
    let out_dim = targets[0].len();
    if features.iter().any(|f| f.len() != d) || targets.iter().any(|t| t.len() != out_dim) {
        return Err(CascadeError::DimensionMismatch(
            "inconsistent sample dimensions".into(),
        ));
    }
    let fit = gmm_fit(features, c, seed)?;
    let gmm = fit.mixture;
    let n = features.len();

    let mut regressors = Vec::with_capacity(c);
    let memberships: Vec<Vec<f64>> = features
        .iter()
        .map(|f| gmm.membership(f))
        .collect::<Result<_, _>>()?;
    for i in 0..gmm.n_components() {
        let mut a = DMatrix::<f64>::zeros(d + 1, d + 1);
        let mut b = DMatrix::<f64>::zeros(d + 1, out_dim);
        for s in 0..n {
            let w = memberships[s][i];
            if w == 0.0 {
                continue;
            }
            let xa = augment(&features[s]);
            for r in 0..=d {
                let wxr = w * xa[r];
                for col in 0..=d {
                    a[(r, col)] += wxr * xa[col];
                }
                for col in 0..out_dim {
                    b[(r, col)] += wxr * targets[s][col];
                }
            }
        }
        for r in 0..=d {
            a[(r, r)] += lambda;
        }
        // Cholesky for the regularized case; minimum-norm pseudo-inverse
        // solve when lambda = 0 leaves the system rank-deficient.
        let solved = match a.clone().cholesky() {
            Some(chol) => chol.solve(&b),
            None => {
                let pinv = a
                    .svd(true, true)
                    .pseudo_inverse(1e-12)
                    .map_err(|_| CascadeError::SolveFailed(i))?;
                pinv * b
            }
        };
        regressors.push(solved);
    }
    Ok(MixtureStage { gmm, regressors })
}
