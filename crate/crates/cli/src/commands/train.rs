use crate::config::PipelineConfig;
use crate::imageio::read_gray;
use anyhow::{bail, Context, Result};
use facefront::cascade::{io, train_cascade, BoundingBox, TrainingSample};
use std::path::Path;

/// Initialization boxes are the annotation bounding box expanded by this
/// fraction per side.
const BOX_MARGIN: f64 = 0.08;

pub fn run(config: &PipelineConfig, train_dir: &Path, model_out: &Path) -> Result<()> {
    let mut entries: Vec<_> = std::fs::read_dir(train_dir)
        .with_context(|| format!("reading {}", train_dir.display()))?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|e| e == "png"))
        .collect();
    entries.sort();

    let mut samples = Vec::new();
    let mut skipped = Vec::new();
    for image_path in &entries {
        let lm_path = image_path.with_extension("lm");
        let load = || -> Result<TrainingSample> {
            let image = read_gray(image_path)?;
            let shape = io::load_landmarks(&lm_path)
                .with_context(|| format!("reading {}", lm_path.display()))?;
            let mut bbox = shape.bbox();
            bbox.x -= BOX_MARGIN * bbox.width;
            bbox.y -= BOX_MARGIN * bbox.height;
            bbox.width *= 1.0 + 2.0 * BOX_MARGIN;
            bbox.height *= 1.0 + 2.0 * BOX_MARGIN;
            let img_box = BoundingBox {
                x: 0.0,
                y: 0.0,
                width: image.width() as f64 - 1.0,
                height: image.height() as f64 - 1.0,
            };
            if bbox.x < 0.0
                || bbox.y < 0.0
                || bbox.x + bbox.width > img_box.width
                || bbox.y + bbox.height > img_box.height
            {
                bail!("annotation box leaves the image");
            }
            Ok(TrainingSample { image, shape, bbox })
        };
        match load() {
            Ok(s) => samples.push(s),
            Err(e) => skipped.push(format!("{}: {e:#}", image_path.display())),
        }
    }
    for line in &skipped {
        eprintln!("skipped {line}");
    }
    if samples.is_empty() {
        bail!(
            "no usable training pairs in {} ({} skipped)",
            train_dir.display(),
            skipped.len()
        );
    }

    let trained = train_cascade(&samples, &config.train_params())?;
    println!("trained on {} samples ({} skipped)", samples.len(), skipped.len());
    println!("stage  mean normalized error");
    for (t, err) in trained.stage_errors.iter().enumerate() {
        if t == 0 {
            println!("init   {err:.6}");
        } else {
            println!("{t:<5}  {err:.6}");
        }
    }
    io::save_model(&trained.model, model_out)?;
    println!("model written to {}", model_out.display());
    Ok(())
}
