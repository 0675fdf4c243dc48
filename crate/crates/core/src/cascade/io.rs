use super::gmm::GaussianMixture;
use super::hog::FeatureConfig;
use super::model::CascadeModel;
use super::shape::Shape2D;
use super::stage::MixtureStage;
use super::CascadeError;
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use nalgebra::DMatrix;
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"CMR1";
const FORMAT_VERSION: u32 = 1;

/// Writes the model in the versioned binary container: magic "CMR1",
/// little-endian dimension header, raw f64 matrix payloads.
pub fn write_model<W: Write>(model: &CascadeModel, mut w: W) -> Result<(), CascadeError> {
    let n = model.n_landmarks() as u32;
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(FORMAT_VERSION)?;
    w.write_u32::<LittleEndian>(n)?;
    w.write_u32::<LittleEndian>(model.feature_config.patch_size as u32)?;
    w.write_u32::<LittleEndian>(model.feature_config.cells as u32)?;
    w.write_u32::<LittleEndian>(model.feature_config.bins as u32)?;
    w.write_u32::<LittleEndian>(model.stages.len() as u32)?;
    for v in model.mean_shape.coords() {
        w.write_f64::<LittleEndian>(*v)?;
    }
    for stage in &model.stages {
        let c = stage.gmm.n_components() as u32;
        let d = stage.gmm.dim() as u32;
        w.write_u32::<LittleEndian>(c)?;
        w.write_u32::<LittleEndian>(d)?;
        for weight in &stage.gmm.weights {
            w.write_f64::<LittleEndian>(*weight)?;
        }
        for mean in &stage.gmm.means {
            for v in mean {
                w.write_f64::<LittleEndian>(*v)?;
            }
        }
        for var in &stage.gmm.variances {
            for v in var {
                w.write_f64::<LittleEndian>(*v)?;
            }
        }
        for reg in &stage.regressors {
            for r in 0..reg.nrows() {
                for col in 0..reg.ncols() {
                    w.write_f64::<LittleEndian>(reg[(r, col)])?;
                }
            }
        }
    }
    Ok(())
}

pub fn read_model<R: Read>(mut r: R) -> Result<CascadeModel, CascadeError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(CascadeError::BadModelFile("bad magic bytes".into()));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != FORMAT_VERSION {
        return Err(CascadeError::BadModelFile(format!(
            "unsupported format version {version}"
        )));
    }
    let n = r.read_u32::<LittleEndian>()? as usize;
    let feature_config = FeatureConfig {
        patch_size: r.read_u32::<LittleEndian>()? as usize,
        cells: r.read_u32::<LittleEndian>()? as usize,
        bins: r.read_u32::<LittleEndian>()? as usize,
    };
    let n_stages = r.read_u32::<LittleEndian>()? as usize;
    if n == 0 || n_stages == 0 || n > 10_000 || n_stages > 10_000 {
        return Err(CascadeError::BadModelFile("implausible header".into()));
    }
    let mut coords = vec![0.0; 2 * n];
    for v in &mut coords {
        *v = r.read_f64::<LittleEndian>()?;
    }
    let mean_shape = Shape2D::new(coords);
    let mut stages = Vec::with_capacity(n_stages);
    for _ in 0..n_stages {
        let c = r.read_u32::<LittleEndian>()? as usize;
        let d = r.read_u32::<LittleEndian>()? as usize;
        if c == 0 || d == 0 {
            return Err(CascadeError::BadModelFile("empty stage".into()));
        }
        let mut weights = vec![0.0; c];
        for v in &mut weights {
            *v = r.read_f64::<LittleEndian>()?;
        }
        let mut read_rows = |rows: usize, cols: usize| -> Result<Vec<Vec<f64>>, CascadeError> {
            let mut out = Vec::with_capacity(rows);
            for _ in 0..rows {
                let mut row = vec![0.0; cols];
                for v in &mut row {
                    *v = r.read_f64::<LittleEndian>()?;
                }
                out.push(row);
            }
            Ok(out)
        };
        let means = read_rows(c, d)?;
        let variances = read_rows(c, d)?;
        let mut regressors = Vec::with_capacity(c);
        for _ in 0..c {
            let rows = read_rows(d + 1, 2 * n)?;
            regressors.push(DMatrix::from_fn(d + 1, 2 * n, |rr, cc| rows[rr][cc]));
        }
        stages.push(MixtureStage {
            gmm: GaussianMixture {
                means,
                variances,
                weights,
            },
            regressors,
        });
    }
    Ok(CascadeModel {
        stages,
        mean_shape,
        feature_config,
    })
}

pub fn save_model(model: &CascadeModel, path: &Path) -> Result<(), CascadeError> {
    let f = std::fs::File::create(path)?;
    write_model(model, std::io::BufWriter::new(f))
}

pub fn load_model(path: &Path) -> Result<CascadeModel, CascadeError> {
    let f = std::fs::File::open(path)?;
    read_model(std::io::BufReader::new(f))
}

/// Lossless structured-text export for inspection (JSON; f64 values
/// round-trip exactly through serde_json's shortest representation).
pub fn export_model_json(model: &CascadeModel) -> Result<String, CascadeError> {
    serde_json::to_string_pretty(model)
        .map_err(|e| CascadeError::BadModelFile(format!("json export failed: {e}")))
}

pub fn import_model_json(text: &str) -> Result<CascadeModel, CascadeError> {
    serde_json::from_str(text).map_err(|e| CascadeError::BadModelFile(format!("json import failed: {e}")))
}

/// Writes the 68-point landmark text format: a point-count header line,
/// then one "x y" pair per line.
pub fn write_landmarks<W: Write>(shape: &Shape2D, mut w: W) -> Result<(), CascadeError> {
    writeln!(w, "{}", shape.n_landmarks())?;
    for i in 0..shape.n_landmarks() {
        let p = shape.point(i);
        writeln!(w, "{} {}", p.x, p.y)?;
    }
    Ok(())
}

pub fn read_landmarks<R: Read>(mut r: R) -> Result<Shape2D, CascadeError> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let count: usize = lines
        .next()
        .ok_or_else(|| CascadeError::BadLandmarkFile("empty file".into()))?
        .trim()
        .parse()
        .map_err(|_| CascadeError::BadLandmarkFile("bad point-count header".into()))?;
    let mut coords = Vec::with_capacity(2 * count);
    for line in lines {
        let mut it = line.split_whitespace();
        let x: f64 = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| CascadeError::BadLandmarkFile(format!("bad line: {line:?}")))?;
        let y: f64 = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| CascadeError::BadLandmarkFile(format!("bad line: {line:?}")))?;
        coords.push(x);
        coords.push(y);
    }
    if coords.len() != 2 * count {
        return Err(CascadeError::BadLandmarkFile(format!(
            "header says {} points, file has {}",
            count,
            coords.len() / 2
        )));
    }
    Ok(Shape2D::new(coords))
}

pub fn save_landmarks(shape: &Shape2D, path: &Path) -> Result<(), CascadeError> {
    let f = std::fs::File::create(path)?;
    write_landmarks(shape, std::io::BufWriter::new(f))
}

pub fn load_landmarks(path: &Path) -> Result<Shape2D, CascadeError> {
    let f = std::fs::File::open(path)?;
    read_landmarks(std::io::BufReader::new(f))
}
