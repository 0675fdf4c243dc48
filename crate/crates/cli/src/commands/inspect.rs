use anyhow::{Context, Result};
use facefront::cascade::io;
use sha2::{Digest, Sha256};
use std::path::Path;

pub fn run(model_path: &Path, json_out: Option<&Path>) -> Result<()> {
    let bytes = std::fs::read(model_path)
        .with_context(|| format!("reading {}", model_path.display()))?;
    let digest = Sha256::digest(&bytes);
    let model = io::read_model(bytes.as_slice())?;
    println!("model:      {}", model_path.display());
    println!("sha256:     {digest:x}");
    println!("landmarks:  {}", model.n_landmarks());
    println!("stages:     {}", model.stages.len());
    let f = &model.feature_config;
    println!(
        "features:   patch {} px, {}x{} cells, {} bins ({} dims)",
        f.patch_size,
        f.cells,
        f.cells,
        f.bins,
        f.dims(model.n_landmarks())
    );
    for (t, stage) in model.stages.iter().enumerate() {
        println!(
            "stage {t}:    {} clusters, regressors {}x{}",
            stage.n_clusters(),
            stage.feature_dim() + 1,
            stage.target_dim()
        );
    }
    let b = model.mean_shape.bbox();
    println!(
        "mean shape: bbox ({:.3}, {:.3}) {:.3}x{:.3}",
        b.x, b.y, b.width, b.height
    );
    if let Some(path) = json_out {
        std::fs::write(path, io::export_model_json(&model)?)
            .with_context(|| format!("writing {}", path.display()))?;
        println!("json model written to {}", path.display());
    }
    Ok(())
}
