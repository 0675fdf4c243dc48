use crate::imageio::read_gray;
use crate::UsageError;
use anyhow::Result;
use facefront::cascade::{io, run_cascade_with_quality, BoundingBox};
use std::path::Path;

fn parse_box(text: &str) -> Result<BoundingBox> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| UsageError(format!("bad --init-box value {text:?}")))?;
    if parts.len() != 4 || parts[2] <= 0.0 || parts[3] <= 0.0 {
        return Err(UsageError("--init-box wants x,y,width,height".into()).into());
    }
    Ok(BoundingBox {
        x: parts[0],
        y: parts[1],
        width: parts[2],
        height: parts[3],
    })
}

pub fn run(model: &Path, image: &Path, out: &Path, init_box: Option<&str>) -> Result<()> {
    let model = io::load_model(model)?;
    let img = read_gray(image)?;
    let bbox = match init_box {
        Some(text) => parse_box(text)?,
        None => BoundingBox {
            x: 0.0,
            y: 0.0,
            width: img.width() as f64 - 1.0,
            height: img.height() as f64 - 1.0,
        },
    };
    let (shape, quality) = run_cascade_with_quality(&model, &img, &bbox)?;
    io::save_landmarks(&shape, out)?;
    let mean_q = quality.iter().sum::<f64>() / quality.len() as f64;
    println!(
        "{} landmarks written to {} (mean quality {mean_q:.3})",
        shape.n_landmarks(),
        out.display()
    );
    Ok(())
}
