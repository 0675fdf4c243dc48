use anyhow::{Context, Result};
use facefront::geometry::GrayImage;
use std::path::Path;

/// Reads any supported image as 8-bit grayscale intensities in 0..=255.
pub fn read_gray(path: &Path) -> Result<GrayImage> {
    let img = image::open(path)
        .with_context(|| format!("reading image {}", path.display()))?
        .into_luma8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    Ok(GrayImage::from_fn(w, h, |x, y| {
        img.get_pixel(x as u32, y as u32).0[0] as f64
    }))
}

/// Writes an 8-bit grayscale PNG; invalid pixels become black.
pub fn write_gray(path: &Path, img: &GrayImage) -> Result<()> {
    let (w, h) = (img.width(), img.height());
    let mut buf = image::GrayImage::new(w as u32, h as u32);
    for y in 0..h {
        for x in 0..w {
            let v = if img.valid(x, y) {
                img.get(x, y).round().clamp(0.0, 255.0) as u8
            } else {
                0
            };
            buf.put_pixel(x as u32, y as u32, image::Luma([v]));
        }
    }
    buf.save(path)
        .with_context(|| format!("writing image {}", path.display()))
}
