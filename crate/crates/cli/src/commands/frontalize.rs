use crate::config::PipelineConfig;
use crate::imageio::{read_gray, write_gray};
use crate::manifest::{write_timings, RunManifest};
use anyhow::{Context, Result};
use facefront::cascade::{io as model_io, run_cascade_with_quality, BoundingBox, CascadeModel};
use facefront::frontal::{frontalize, DepthTemplate};
use rayon::prelude::*;
use std::path::{Path, PathBuf};
use std::time::Instant;

struct ItemOutcome {
    input: String,
    result: std::result::Result<(), (String, String)>, // (stage, detail)
}

fn process(
    image_path: &Path,
    template: &DepthTemplate,
    model: Option<&CascadeModel>,
    config: &PipelineConfig,
    out_dir: &Path,
) -> std::result::Result<(), (String, String)> {
    let fail = |stage: &str, detail: String| Err((stage.to_string(), detail));
    let image = match read_gray(image_path) {
        Ok(i) => i,
        Err(e) => return fail("read", format!("{e:#}")),
    };
    let lm_path = image_path.with_extension("lm");
    let (landmarks, quality) = if lm_path.exists() {
        match model_io::load_landmarks(&lm_path) {
            Ok(s) => (s, None),
            Err(e) => return fail("landmarks", e.to_string()),
        }
    } else if let Some(model) = model {
        let bbox = BoundingBox {
            x: 0.0,
            y: 0.0,
            width: image.width() as f64 - 1.0,
            height: image.height() as f64 - 1.0,
        };
        match run_cascade_with_quality(model, &image, &bbox) {
            Ok((s, q)) => (s, Some(q)),
            Err(e) => return fail("landmarks", e.to_string()),
        }
    } else {
        return fail(
            "landmarks",
            "no sidecar landmark file and no model given".to_string(),
        );
    };
    let out = match frontalize(
        &image,
        &landmarks,
        quality.as_deref(),
        template,
        &config.frontalize_config(),
    ) {
        Ok(o) => o,
        Err(e) => return fail(e.stage(), e.to_string()),
    };
    let stem = image_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let write = || -> Result<()> {
        write_gray(&out_dir.join(format!("{stem}_asym.png")), &out.final_asymmetric)?;
        write_gray(&out_dir.join(format!("{stem}_sym.png")), &out.final_symmetric)?;
        let diag = serde_json::to_string_pretty(&out.diagnostics)?;
        std::fs::write(out_dir.join(format!("{stem}_diag.json")), diag + "\n")?;
        Ok(())
    };
    match write() {
        Ok(()) => Ok(()),
        Err(e) => fail("write", format!("{e:#}")),
    }
}

pub fn run(
    config: &PipelineConfig,
    model_path: Option<&Path>,
    template_depth: &Path,
    template_landmarks: &Path,
    input_dir: &Path,
    out_dir: &Path,
) -> Result<()> {
    let started = Instant::now();
    let template = DepthTemplate::load(template_depth, template_landmarks)?;
    let model = model_path.map(model_io::load_model).transpose()?;
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;

    let mut inputs: Vec<PathBuf> = std::fs::read_dir(input_dir)
        .with_context(|| format!("reading {}", input_dir.display()))?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|e| e == "png"))
        .collect();
    inputs.sort();

    // Items are independent; outcomes are collected in input order so the
    // manifest is deterministic.
    let outcomes: Vec<ItemOutcome> = inputs
        .par_iter()
        .map(|path| ItemOutcome {
            input: path
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
            result: process(path, &template, model.as_ref(), config, out_dir),
        })
        .collect();

    let mut manifest = RunManifest::new("frontalize", config);
    for o in &outcomes {
        match &o.result {
            Ok(()) => manifest.record_success(&o.input),
            Err((stage, detail)) => manifest.record_failure(&o.input, stage, detail),
        }
    }
    manifest.write(&out_dir.join("manifest.json"))?;
    write_timings(&out_dir.join("timings.json"), started)?;
    println!(
        "{} of {} inputs frontalized",
        manifest.succeeded, manifest.attempted
    );
    Ok(())
}
