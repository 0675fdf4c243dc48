use super::hog::{extract_features, FeatureConfig};
use super::shape::{BoundingBox, Shape2D};
use super::stage::{predict_update, train_stage, MixtureStage};
use super::CascadeError;
use crate::geometry::GrayImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Trained cascade: T mixture-regression stages plus the mean initial shape
/// in a normalized reference frame (centroid at the origin, unit RMS size).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeModel {
    pub stages: Vec<MixtureStage>,
    pub mean_shape: Shape2D,
    pub feature_config: FeatureConfig,
}

/// One training example: image, ground-truth landmarks and the
/// initialization box.
#[derive(Debug, Clone)]
pub struct TrainingSample {
    pub image: GrayImage,
    pub shape: Shape2D,
    pub bbox: BoundingBox,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrainParams {
    pub stages: usize,
    pub clusters: usize,
    pub lambda: f64,
    /// Extra randomly perturbed initializations per sample (the unperturbed
    /// initialization is always included).
    pub perturbations: usize,
    pub seed: u64,
    pub feature_config: FeatureConfig,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            stages: 5,
            clusters: 3,
            lambda: 1e-3,
            perturbations: 10,
            seed: 0,
            feature_config: FeatureConfig::default(),
        }
    }
}

/// Training summary: the model plus the mean normalized landmark error on
/// the training instances at initialization and after each stage.
#[derive(Debug, Clone)]
pub struct TrainedCascade {
    pub model: CascadeModel,
    pub stage_errors: Vec<f64>,
}

impl CascadeModel {
    pub fn n_landmarks(&self) -> usize {
        self.mean_shape.n_landmarks()
    }

    /// Mean shape scaled and translated into the initialization box.
    pub fn initial_shape(&self, bbox: &BoundingBox) -> Shape2D {
        place_in_box(&self.mean_shape, bbox)
    }
}

fn place_in_box(mean_shape: &Shape2D, bbox: &BoundingBox) -> Shape2D {
    let mb = mean_shape.bbox();
    let s = (bbox.width / mb.width).min(bbox.height / mb.height);
    let center = bbox.center();
    let mc = mean_shape.centroid();
    let mut out = mean_shape.clone();
    for i in 0..out.n_landmarks() {
        let p = out.point(i);
        out.set_point(
            i,
            crate::geometry::Point2::new(
                center.x + s * (p.x - mc.x),
                center.y + s * (p.y - mc.y),
            ),
        );
    }
    out
}

/// Runs the trained cascade: initialize from the mean shape, then iterate
/// feature extraction and mixture-regression updates.
pub fn run_cascade(
    model: &CascadeModel,
    image: &GrayImage,
    init_box: &BoundingBox,
) -> Result<Shape2D, CascadeError> {
    run_cascade_with_quality(model, image, init_box).map(|(s, _)| s)
}

/// As [`run_cascade`], additionally returning a per-landmark quality score
/// in (0, 1]: landmarks whose final-stage update was small relative to the
/// box size score high.
pub fn run_cascade_with_quality(
    model: &CascadeModel,
    image: &GrayImage,
    init_box: &BoundingBox,
) -> Result<(Shape2D, Vec<f64>), CascadeError> {
    let img_box = BoundingBox {
        x: 0.0,
        y: 0.0,
        width: image.width() as f64,
        height: image.height() as f64,
    };
    if !img_box.contains(crate::geometry::Point2::new(init_box.x, init_box.y))
        || !img_box.contains(crate::geometry::Point2::new(
            init_box.x + init_box.width,
            init_box.y + init_box.height,
        ))
    {
        return Err(CascadeError::BoxOutsideImage);
    }
    let mut shape = model.initial_shape(init_box);
    let n = shape.n_landmarks();
    let mut last_update = vec![0.0_f64; n];
    for stage in &model.stages {
        let x = extract_features(image, &shape, &model.feature_config)?;
        let delta = predict_update(stage, &x)?;
        if delta.len() != 2 * n {
            return Err(CascadeError::DimensionMismatch(format!(
                "stage predicts {} coordinates for {} landmarks",
                delta.len(),
                n
            )));
        }
        for i in 0..n {
            last_update[i] = delta[2 * i].hypot(delta[2 * i + 1]);
        }
        shape = shape.add(&delta);
    }
    let scale = init_box.diagonal().max(1.0) * 0.01;
    let quality: Vec<f64> = last_update.iter().map(|u| 1.0 / (1.0 + u / scale)).collect();
    Ok((shape, quality))
}

/// Generalized Procrustes mean of a set of shapes, in a normalized frame:
/// centroid at the origin, unit RMS radius.
pub fn procrustes_mean(shapes: &[Shape2D]) -> Result<Shape2D, CascadeError> {
    if shapes.is_empty() {
        return Err(CascadeError::EmptyInput);
    }
    let n = shapes[0].n_landmarks();
    if shapes.iter().any(|s| s.n_landmarks() != n) {
        return Err(CascadeError::DimensionMismatch(
            "shapes have different landmark counts".into(),
        ));
    }
    let normalize = |s: &Shape2D| -> Shape2D {
        let c = s.centroid();
        let centered = s.translated(-c.x, -c.y);
        let rms = (centered.coords().iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
        centered.scaled(1.0 / rms.max(1e-12))
    };
    let normed: Vec<Shape2D> = shapes.iter().map(normalize).collect();
    let mut mean = normed[0].clone();
    for _ in 0..10 {
        let mut acc = vec![0.0; 2 * n];
        for s in &normed {
            // Complex-form similarity alignment of s onto the mean.
            let (mut num_re, mut num_im, mut den) = (0.0, 0.0, 0.0);
            for i in 0..n {
                let (sx, sy) = (s.coords()[2 * i], s.coords()[2 * i + 1]);
                let (mx, my) = (mean.coords()[2 * i], mean.coords()[2 * i + 1]);
                num_re += mx * sx + my * sy;
                num_im += my * sx - mx * sy;
                den += sx * sx + sy * sy;
            }
            let (ar, ai) = (num_re / den, num_im / den);
            for i in 0..n {
                let (sx, sy) = (s.coords()[2 * i], s.coords()[2 * i + 1]);
                acc[2 * i] += ar * sx - ai * sy;
                acc[2 * i + 1] += ai * sx + ar * sy;
            }
        }
        for v in &mut acc {
            *v /= normed.len() as f64;
        }
        mean = normalize(&Shape2D::new(acc));
    }
    Ok(mean)
}

/// Trains the full cascade: Procrustes mean shape, perturbed
/// initializations, then stages fitted sequentially on the residuals left
/// by the previous stages. Deterministic under a fixed seed.
pub fn train_cascade(
    samples: &[TrainingSample],
    params: &TrainParams,
) -> Result<TrainedCascade, CascadeError> {
    if samples.is_empty() {
        return Err(CascadeError::EmptyInput);
    }
    if params.stages == 0 || params.clusters == 0 {
        return Err(CascadeError::DimensionMismatch(
            "stage and cluster counts must be at least 1".into(),
        ));
    }
    let shapes: Vec<Shape2D> = samples.iter().map(|s| s.shape.clone()).collect();
    let mean_shape = procrustes_mean(&shapes)?;

    // Instances: per sample the clean initialization plus random
    // scale/translation perturbations of the box.
    let mut rng = ChaCha20Rng::seed_from_u64(params.seed);
    struct Instance {
        sample_idx: usize,
        current: Shape2D,
    }
    let mut instances = Vec::new();
    for (si, sample) in samples.iter().enumerate() {
        instances.push(Instance {
            sample_idx: si,
            current: place_in_box(&mean_shape, &sample.bbox),
        });
        for _ in 0..params.perturbations {
            let ds = rng.gen_range(-0.05..0.05);
            let dx = rng.gen_range(-0.05..0.05) * sample.bbox.width;
            let dy = rng.gen_range(-0.05..0.05) * sample.bbox.height;
            let b = BoundingBox {
                x: sample.bbox.x + dx,
                y: sample.bbox.y + dy,
                width: sample.bbox.width * (1.0 + ds),
                height: sample.bbox.height * (1.0 + ds),
            };
            instances.push(Instance {
                sample_idx: si,
                current: place_in_box(&mean_shape, &b),
            });
        }
    }

    let mean_error = |insts: &[Instance]| -> f64 {
        insts
            .iter()
            .map(|inst| {
                let gt = &samples[inst.sample_idx].shape;
                inst.current.mean_landmark_error(gt) / gt.bbox().diagonal().max(1e-12)
            })
            .sum::<f64>()
            / insts.len() as f64
    };

    let mut stage_errors = vec![mean_error(&instances)];
    let mut stages = Vec::with_capacity(params.stages);
    for t in 0..params.stages {
        let features: Vec<Vec<f64>> = instances
            .par_iter()
            .map(|inst| {
                extract_features(
                    &samples[inst.sample_idx].image,
                    &inst.current,
                    &params.feature_config,
                )
            })
            .collect::<Result<_, _>>()?;
        let targets: Vec<Vec<f64>> = instances
            .iter()
            .map(|inst| {
                let gt = &samples[inst.sample_idx].shape;
                gt.coords()
                    .iter()
                    .zip(inst.current.coords())
                    .map(|(g, c)| g - c)
                    .collect()
            })
            .collect();
        let stage = train_stage(
            &features,
            &targets,
            params.clusters,
            params.lambda,
            params.seed.wrapping_add(t as u64 + 1),
        )?;
        for (inst, x) in instances.iter_mut().zip(&features) {
            let delta = predict_update(&stage, x)?;
            inst.current = inst.current.add(&delta);
        }
        stages.push(stage);
        stage_errors.push(mean_error(&instances));
    }

    Ok(TrainedCascade {
        model: CascadeModel {
            stages,
            mean_shape,
            feature_config: params.feature_config,
        },
        stage_errors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cascade::gmm::GaussianMixture;
    use nalgebra::DMatrix;

    fn blob_image(shape: &Shape2D, w: usize, h: usize) -> GrayImage {
        // Smooth bumps anchored at the landmarks give the regressor a
        // localizable appearance signal.
        GrayImage::from_fn(w, h, |x, y| {
            let mut v = 0.0;
            for (i, p) in shape.points().iter().enumerate() {
                let dx = x as f64 - p.x;
                let dy = y as f64 - p.y;
                let sigma = 2.0 + (i % 3) as f64;
                v += 100.0 * (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp();
            }
            v
        })
    }

    fn base_shape() -> Shape2D {
        Shape2D::new(vec![
            20.0, 20.0, 44.0, 20.0, 32.0, 32.0, 22.0, 44.0, 42.0, 44.0, 32.0, 24.0, 26.0, 30.0,
            38.0, 30.0,
        ])
    }

    fn small_config() -> FeatureConfig {
        FeatureConfig {
            patch_size: 12,
            cells: 2,
            bins: 6,
        }
    }

    #[test]
    fn zero_model_returns_initial_shape() {
        let shape = base_shape();
        let cfg = small_config();
        let d = cfg.dims(shape.n_landmarks());
        let gmm = GaussianMixture {
            means: vec![vec![0.0; d]],
            variances: vec![vec![1.0; d]],
            weights: vec![1.0],
        };
        let model = CascadeModel {
            stages: vec![
                MixtureStage {
                    gmm: gmm.clone(),
                    regressors: vec![DMatrix::zeros(d + 1, 2 * shape.n_landmarks())],
                };
                3
            ],
            mean_shape: procrustes_mean(&[shape.clone()]).unwrap(),
            feature_config: cfg,
        };
        let img = blob_image(&shape, 64, 64);
        let bbox = shape.bbox();
        let out = run_cascade(&model, &img, &bbox).unwrap();
        let init = model.initial_shape(&bbox);
        assert_eq!(out, init);
    }

    #[test]
    fn single_sample_interpolates() {
        let shape = base_shape();
        let img = blob_image(&shape, 64, 64);
        let sample = TrainingSample {
            image: img.clone(),
            shape: shape.clone(),
            bbox: shape.bbox(),
        };
        let params = TrainParams {
            stages: 1,
            clusters: 1,
            lambda: 0.0,
            perturbations: 0,
            seed: 1,
            feature_config: small_config(),
        };
        let trained = train_cascade(&[sample], &params).unwrap();
        let out = run_cascade(&trained.model, &img, &shape.bbox()).unwrap();
        assert!(out.mean_landmark_error(&shape) < 1e-6);
        assert!(trained.stage_errors[1] < 1e-9);
    }

    #[test]
    fn retraining_is_bit_identical() {
        let shape = base_shape();
        let mut samples = Vec::new();
        for k in 0..4 {
            let s = shape.translated(k as f64, 2.0 * k as f64);
            samples.push(TrainingSample {
                image: blob_image(&s, 72, 72),
                bbox: s.bbox(),
                shape: s,
            });
        }
        let params = TrainParams {
            stages: 2,
            clusters: 2,
            lambda: 1e-3,
            perturbations: 2,
            seed: 42,
            feature_config: small_config(),
        };
        let a = train_cascade(&samples, &params).unwrap();
        let b = train_cascade(&samples, &params).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.stage_errors, b.stage_errors);
    }

    #[test]
    fn cascade_rejects_out_of_image_box() {
        let shape = base_shape();
        let img = blob_image(&shape, 64, 64);
        let trained = train_cascade(
            &[TrainingSample {
                image: img.clone(),
                shape: shape.clone(),
                bbox: shape.bbox(),
            }],
            &TrainParams {
                stages: 1,
                clusters: 1,
                lambda: 1e-3,
                perturbations: 0,
                seed: 0,
                feature_config: small_config(),
            },
        )
        .unwrap();
        let bad = BoundingBox {
            x: 40.0,
            y: 40.0,
            width: 40.0,
            height: 40.0,
        };
        assert!(matches!(
            run_cascade(&trained.model, &img, &bad),
            Err(CascadeError::BoxOutsideImage)
        ));
    }

    #[test]
    fn empty_training_set_rejected() {
        assert!(matches!(
            train_cascade(&[], &TrainParams::default()),
            Err(CascadeError::EmptyInput)
        ));
    }

    #[test]
    fn procrustes_mean_is_normalized() {
        let shapes = vec![
            base_shape(),
            base_shape().scaled(2.0).translated(10.0, -5.0),
            base_shape().translated(-3.0, 7.0),
        ];
        let mean = procrustes_mean(&shapes).unwrap();
        let c = mean.centroid();
        assert!(c.x.abs() < 1e-9 && c.y.abs() < 1e-9);
        let rms = (mean.coords().iter().map(|v| v * v).sum::<f64>()
            / mean.n_landmarks() as f64)
            .sqrt();
        assert!((rms - 1.0).abs() < 1e-9);
    }
}
