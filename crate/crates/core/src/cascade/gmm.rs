use super::CascadeError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

const VAR_FLOOR: f64 = 1e-9;
const EM_TOL: f64 = 1e-8;
const EM_MAX_ITERS: usize = 300;
/// Symmetric-KL threshold under which two components count as duplicates.
const MERGE_KL_THRESHOLD: f64 = 1.0;

/// Diagonal-covariance Gaussian mixture holding the fuzzy cluster
/// memberships of a regression stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixture {
    /// C x d component means.
    pub means: Vec<Vec<f64>>,
    /// C x d per-dimension variances, all positive.
    pub variances: Vec<Vec<f64>>,
    /// Mixing weights, summing to 1.
    pub weights: Vec<f64>,
}

/// Fit result with the EM log-likelihood trace of the final run.
#[derive(Debug, Clone)]
pub struct GmmFit {
    pub mixture: GaussianMixture,
    pub log_likelihoods: Vec<f64>,
}

impl GaussianMixture {
    pub fn n_components(&self) -> usize {
        self.means.len()
    }

    pub fn dim(&self) -> usize {
        self.means.first().map_or(0, |m| m.len())
    }

    fn log_component_density(&self, i: usize, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for k in 0..x.len() {
            let v = self.variances[i][k];
            let d = x[k] - self.means[i][k];
            acc += (2.0 * std::f64::consts::PI * v).ln() + d * d / v;
        }
        -0.5 * acc
    }

    /// Posterior membership weights, computed in log-space; sums to 1.
    pub fn membership(&self, x: &[f64]) -> Result<Vec<f64>, CascadeError> {
        if x.len() != self.dim() {
            return Err(CascadeError::DimensionMismatch(format!(
                "feature dim {} vs mixture dim {}",
                x.len(),
                self.dim()
            )));
        }
        let logs: Vec<f64> = (0..self.n_components())
            .map(|i| self.weights[i].max(1e-300).ln() + self.log_component_density(i, x))
            .collect();
        let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut psi: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
        let sum: f64 = psi.iter().sum();
        for p in &mut psi {
            *p /= sum;
        }
        Ok(psi)
    }

    fn log_likelihood(&self, samples: &[Vec<f64>]) -> f64 {
        samples
            .iter()
            .map(|x| {
                let logs: Vec<f64> = (0..self.n_components())
                    .map(|i| self.weights[i].max(1e-300).ln() + self.log_component_density(i, x))
                    .collect();
                let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                max + logs.iter().map(|l| (l - max).exp()).sum::<f64>().ln()
            })
            .sum()
    }
}

fn em_run(
    mut gmm: GaussianMixture,
    samples: &[Vec<f64>],
    max_iters: usize,
) -> (GaussianMixture, Vec<f64>) {
    let n = samples.len();
    let d = gmm.dim();
    let c = gmm.n_components();
    let mut trace = Vec::new();
    let mut prev = f64::NEG_INFINITY;
    for _ in 0..max_iters {
        let ll = gmm.log_likelihood(samples);
        trace.push(ll);
        if (ll - prev).abs() < EM_TOL {
            break;
        }
        prev = ll;
        // E-step.
        let resp: Vec<Vec<f64>> = samples.iter().map(|x| gmm.membership(x).unwrap()).collect();
        // M-step.
        for i in 0..c {
            let wsum: f64 = resp.iter().map(|r| r[i]).sum();
            if wsum < 1e-12 {
                continue;
            }
            let mut mean = vec![0.0; d];
            for (x, r) in samples.iter().zip(&resp) {
                for k in 0..d {
                    mean[k] += r[i] * x[k];
                }
            }
            for m in &mut mean {
                *m /= wsum;
            }
            let mut var = vec![0.0; d];
            for (x, r) in samples.iter().zip(&resp) {
                for k in 0..d {
                    let dv = x[k] - mean[k];
                    var[k] += r[i] * dv * dv;
                }
            }
            for v in &mut var {
                *v = (*v / wsum).max(VAR_FLOOR);
            }
            gmm.means[i] = mean;
            gmm.variances[i] = var;
            gmm.weights[i] = wsum / n as f64;
        }
        let wtotal: f64 = gmm.weights.iter().sum();
        for w in &mut gmm.weights {
            *w /= wtotal;
        }
    }
    (gmm, trace)
}

fn symmetric_kl(g: &GaussianMixture, a: usize, b: usize) -> f64 {
    let d = g.dim();
    let mut acc = 0.0;
    for k in 0..d {
        let (va, vb) = (g.variances[a][k], g.variances[b][k]);
        let dm = g.means[a][k] - g.means[b][k];
        acc += 0.5 * ((va / vb) + (vb / va) + dm * dm * (1.0 / va + 1.0 / vb) - 2.0);
    }
    acc
}

fn merge_components(g: &mut GaussianMixture, a: usize, b: usize) {
    let (wa, wb) = (g.weights[a], g.weights[b]);
    let w = wa + wb;
    let d = g.dim();
    let mut mean = vec![0.0; d];
    let mut var = vec![0.0; d];
    for k in 0..d {
        mean[k] = (wa * g.means[a][k] + wb * g.means[b][k]) / w;
        // Moment-matched combined variance.
        let second = wa * (g.variances[a][k] + g.means[a][k].powi(2))
            + wb * (g.variances[b][k] + g.means[b][k].powi(2));
        var[k] = (second / w - mean[k] * mean[k]).max(VAR_FLOOR);
    }
    g.means[a] = mean;
    g.variances[a] = var;
    g.weights[a] = w;
    g.means.remove(b);
    g.variances.remove(b);
    g.weights.remove(b);
}

/// Fits a fuzzy C-component mixture bottom-up: over-seed with 2C components
/// (k-means++ style seeding), run a short EM, merge near-duplicate
/// components by symmetric KL until C remain, then run EM to convergence.
/// Deterministic under a fixed seed.
pub fn gmm_fit(samples: &[Vec<f64>], c: usize, seed: u64) -> Result<GmmFit, CascadeError> {
    if samples.is_empty() {
        return Err(CascadeError::EmptyInput);
    }
    if c == 0 || c > samples.len() {
        return Err(CascadeError::BadClusterCount {
            c,
            samples: samples.len(),
        });
    }
    let d = samples[0].len();
    if samples.iter().any(|s| s.len() != d) {
        return Err(CascadeError::DimensionMismatch(
            "samples have mixed dimensions".into(),
        ));
    }

    // Global moments for seeding variances.
    let n = samples.len();
    let mut gmean = vec![0.0; d];
    for s in samples {
        for k in 0..d {
            gmean[k] += s[k];
        }
    }
    for m in &mut gmean {
        *m /= n as f64;
    }
    let mut gvar = vec![0.0; d];
    for s in samples {
        for k in 0..d {
            let dv = s[k] - gmean[k];
            gvar[k] += dv * dv;
        }
    }
    for v in &mut gvar {
        *v = (*v / n as f64).max(VAR_FLOOR);
    }

    // k-means++ style over-seeding with up to 2C single-sample centers.
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let n_seed = (2 * c).min(n);
    let mut centers: Vec<usize> = vec![rng.gen_range(0..n)];
    while centers.len() < n_seed {
        let d2: Vec<f64> = samples
            .iter()
            .map(|s| {
                centers
                    .iter()
                    .map(|&ci| {
                        s.iter()
                            .zip(&samples[ci])
                            .map(|(a, b)| (a - b) * (a - b))
                            .sum::<f64>()
                    })
                    .fold(f64::MAX, f64::min)
            })
            .collect();
        let total: f64 = d2.iter().sum();
        if total <= 0.0 {
            // All remaining samples coincide with a center; pick round-robin.
            centers.push(centers.len() % n);
            continue;
        }
        let mut pick = rng.gen_range(0.0..total);
        let mut chosen = n - 1;
        for (i, &w) in d2.iter().enumerate() {
            if pick < w {
                chosen = i;
                break;
            }
            pick -= w;
        }
        centers.push(chosen);
    }

    let mut gmm = GaussianMixture {
        means: centers.iter().map(|&i| samples[i].clone()).collect(),
        variances: vec![gvar.clone(); n_seed],
        weights: vec![1.0 / n_seed as f64; n_seed],
    };

    // Short EM on the over-seeded mixture.
    (gmm, _) = em_run(gmm, samples, 25);

    // Bottom-up merge to C components: duplicates first, then closest pairs.
    while gmm.n_components() > c {
        let mut best = (0, 1, f64::MAX);
        for a in 0..gmm.n_components() {
            for b in (a + 1)..gmm.n_components() {
                let kl = symmetric_kl(&gmm, a, b);
                if kl < best.2 {
                    best = (a, b, kl);
                }
            }
        }
        let _near_duplicate = best.2 < MERGE_KL_THRESHOLD;
        merge_components(&mut gmm, best.0, best.1);
    }

    // Final EM to convergence.
    let (gmm, trace) = em_run(gmm, samples, EM_MAX_ITERS);
    Ok(GmmFit {
        mixture: gmm,
        log_likelihoods: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn single_component_matches_sample_moments() {
        let samples: Vec<Vec<f64>> = vec![
            vec![1.0, 2.0],
            vec![3.0, 6.0],
            vec![5.0, 4.0],
            vec![7.0, 0.0],
        ];
        let fit = gmm_fit(&samples, 1, 0).unwrap();
        let g = &fit.mixture;
        assert!((g.means[0][0] - 4.0).abs() < 1e-12);
        assert!((g.means[0][1] - 3.0).abs() < 1e-12);
        // Per-dimension population variance.
        assert!((g.variances[0][0] - 5.0).abs() < 1e-9);
        assert!((g.variances[0][1] - 5.0).abs() < 1e-9);
        assert_eq!(g.weights, vec![1.0]);
    }

    #[test]
    fn separated_clusters_get_crisp_memberships() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let mut samples = Vec::new();
        let mut labels = Vec::new();
        for i in 0..60 {
            let center = if i % 2 == 0 { -10.0 } else { 10.0 };
            labels.push(i % 2);
            samples.push(vec![
                center + rng.gen_range(-1.0..1.0),
                center + rng.gen_range(-1.0..1.0),
            ]);
        }
        let fit = gmm_fit(&samples, 2, 7).unwrap();
        // Identify which component sits at -10.
        let neg = if fit.mixture.means[0][0] < 0.0 { 0 } else { 1 };
        for (s, &l) in samples.iter().zip(&labels) {
            let psi = fit.mixture.membership(s).unwrap();
            let own = if l == 0 { psi[neg] } else { psi[1 - neg] };
            assert!(own >= 0.99, "membership {own} too fuzzy");
        }
    }

    #[test]
    fn log_likelihood_non_decreasing() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let samples: Vec<Vec<f64>> = (0..80)
            .map(|_| vec![rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)])
            .collect();
        let fit = gmm_fit(&samples, 3, 11).unwrap();
        for w in fit.log_likelihoods.windows(2) {
            assert!(w[1] >= w[0] - 1e-10, "log-likelihood decreased: {w:?}");
        }
    }

    #[test]
    fn memberships_normalize_and_bound() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let samples: Vec<Vec<f64>> = (0..40)
            .map(|_| vec![rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)])
            .collect();
        let fit = gmm_fit(&samples, 3, 2).unwrap();
        for _ in 0..50 {
            let x = vec![rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0)];
            let psi = fit.mixture.membership(&x).unwrap();
            assert!((psi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(psi.iter().all(|&p| (0.0..=1.0).contains(&p)));
        }
    }

    #[test]
    fn membership_at_far_separated_mean_is_crisp() {
        let g = GaussianMixture {
            means: vec![vec![0.0, 0.0], vec![100.0, 100.0]],
            variances: vec![vec![1.0, 1.0]; 2],
            weights: vec![0.5, 0.5],
        };
        let psi = g.membership(&[0.0, 0.0]).unwrap();
        assert!(psi[0] > 0.999);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(gmm_fit(&[], 1, 0), Err(CascadeError::EmptyInput)));
        let s = vec![vec![1.0], vec![2.0]];
        assert!(matches!(
            gmm_fit(&s, 3, 0),
            Err(CascadeError::BadClusterCount { .. })
        ));
    }
}
