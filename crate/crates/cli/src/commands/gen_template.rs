use crate::imageio::write_gray;
use anyhow::{Context, Result};
use facefront::frontal::synthetic_template;
use std::path::Path;

pub fn run(out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    let (template, texture) = synthetic_template();
    let depth_path = out_dir.join("template_depth.png");
    let lm_path = out_dir.join("template_landmarks.txt");
    template.save(&depth_path, &lm_path)?;
    write_gray(&out_dir.join("template_texture.png"), &texture)?;
    println!(
        "template: {}x{} depth, 68 landmarks",
        template.depth.width(),
        template.depth.height()
    );
    Ok(())
}
