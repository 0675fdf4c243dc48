use super::EvalError;
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

/// Feature vector extracted from one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameDescriptor {
    pub frame: u32,
    pub vector: Vec<f64>,
}

/// Per-video descriptor: feature-wise mean over the surviving frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoDescriptor {
    pub vector: Vec<f64>,
    pub frames: u32,
}

/// Identity attached to a video descriptor for scoring.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VideoLabel {
    pub subject: String,
    pub video: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PairKind {
    Genuine,
    Impostor,
    /// Same source video; excluded from curve statistics.
    Excluded,
}

/// Dense probe x gallery cosine score matrix with per-pair kinds.
#[derive(Debug, Clone)]
pub struct ScoreMatrix {
    pub gallery: Vec<VideoLabel>,
    pub probes: Vec<VideoLabel>,
    /// Row-major, rows = probes, columns = gallery.
    pub scores: Vec<f64>,
    pub kinds: Vec<PairKind>,
}

impl ScoreMatrix {
    pub fn score(&self, probe: usize, gallery: usize) -> f64 {
        self.scores[probe * self.gallery.len() + gallery]
    }

    pub fn kind(&self, probe: usize, gallery: usize) -> PairKind {
        self.kinds[probe * self.gallery.len() + gallery]
    }
}

/// Feature-wise mean over frames. Frames are first sorted by frame index
/// so the summation order (and hence the exact floating-point result) does
/// not depend on input order.
pub fn accumulate(frames: &[FrameDescriptor]) -> Result<VideoDescriptor, EvalError> {
    let first = frames.first().ok_or(EvalError::EmptyInput)?;
    let d = first.vector.len();
    let mut order: Vec<usize> = (0..frames.len()).collect();
    order.sort_by_key(|&i| (frames[i].frame, i));
    let mut sum = vec![0.0_f64; d];
    for &i in &order {
        let f = &frames[i];
        if f.vector.len() != d {
            return Err(EvalError::DimensionMismatch {
                expected: d,
                got: f.vector.len(),
            });
        }
        for (s, v) in sum.iter_mut().zip(&f.vector) {
            if !v.is_finite() {
                return Err(EvalError::NonFinite);
            }
            *s += v;
        }
    }
    let n = frames.len() as f64;
    for s in &mut sum {
        *s /= n;
    }
    Ok(VideoDescriptor {
        vector: sum,
        frames: frames.len() as u32,
    })
}

/// Cosine similarity, clamped to [-1, 1] against rounding. All-zero
/// descriptors are rejected rather than scored.
pub fn cosine_score(a: &VideoDescriptor, b: &VideoDescriptor) -> Result<f64, EvalError> {
    if a.vector.len() != b.vector.len() {
        return Err(EvalError::DimensionMismatch {
            expected: a.vector.len(),
            got: b.vector.len(),
        });
    }
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.vector.iter().zip(&b.vector) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(EvalError::ZeroNorm);
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

/// Scores every probe against every gallery descriptor. Pairs sharing a
/// subject are genuine; with `exclude_same_video` set, pairs from one and
/// the same video are excluded from curve statistics instead.
pub fn score_all(
    gallery: &[(VideoDescriptor, VideoLabel)],
    probes: &[(VideoDescriptor, VideoLabel)],
    exclude_same_video: bool,
) -> Result<ScoreMatrix, EvalError> {
    if gallery.is_empty() || probes.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let g = gallery.len();
    let rows: Vec<Result<Vec<(f64, PairKind)>, EvalError>> = probes
        .par_iter()
        .map(|(pd, pl)| {
            gallery
                .iter()
                .map(|(gd, gl)| {
                    let s = cosine_score(pd, gd)?;
                    let kind = if exclude_same_video && pl.video == gl.video {
                        PairKind::Excluded
                    } else if pl.subject == gl.subject {
                        PairKind::Genuine
                    } else {
                        PairKind::Impostor
                    };
                    Ok((s, kind))
                })
                .collect()
        })
        .collect();
    let mut scores = Vec::with_capacity(probes.len() * g);
    let mut kinds = Vec::with_capacity(probes.len() * g);
    for row in rows {
        for (s, k) in row? {
            scores.push(s);
            kinds.push(k);
        }
    }
    Ok(ScoreMatrix {
        gallery: gallery.iter().map(|(_, l)| l.clone()).collect(),
        probes: probes.iter().map(|(_, l)| l.clone()).collect(),
        scores,
        kinds,
    })
}

const FVEC_MAGIC: &[u8; 4] = b"FVEC";

/// Writes a descriptor as magic, dimension, frame count (both little-endian
/// u32) followed by the vector as little-endian f32.
pub fn write_descriptor(w: &mut impl Write, d: &VideoDescriptor) -> Result<(), EvalError> {
    w.write_all(FVEC_MAGIC)?;
    w.write_u32::<LittleEndian>(d.vector.len() as u32)?;
    w.write_u32::<LittleEndian>(d.frames)?;
    for &v in &d.vector {
        w.write_f32::<LittleEndian>(v as f32)?;
    }
    Ok(())
}

pub fn read_descriptor(r: &mut impl Read) -> Result<VideoDescriptor, EvalError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != FVEC_MAGIC {
        return Err(EvalError::BadFile("bad magic".into()));
    }
    let dim = r.read_u32::<LittleEndian>()? as usize;
    let frames = r.read_u32::<LittleEndian>()?;
    let mut vector = Vec::with_capacity(dim);
    for _ in 0..dim {
        let v = r.read_f32::<LittleEndian>()? as f64;
        if !v.is_finite() {
            return Err(EvalError::NonFinite);
        }
        vector.push(v);
    }
    Ok(VideoDescriptor { vector, frames })
}

/// Reads frame descriptors from CSV: one row per frame, the frame index in
/// the first column followed by the feature values.
pub fn read_frames_csv(path: &Path) -> Result<Vec<FrameDescriptor>, EvalError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| EvalError::BadFile(e.to_string()))?;
    let mut frames = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| EvalError::BadFile(e.to_string()))?;
        let mut it = record.iter();
        let frame: u32 = it
            .next()
            .ok_or_else(|| EvalError::BadFile("empty row".into()))?
            .trim()
            .parse()
            .map_err(|_| EvalError::BadFile("bad frame index".into()))?;
        let vector: Vec<f64> = it
            .map(|t| t.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| EvalError::BadFile("bad feature value".into()))?;
        frames.push(FrameDescriptor { frame, vector });
    }
    Ok(frames)
}

/// Writes the score matrix as CSV: header row of gallery ids, then one row
/// per probe with its id and scores.
pub fn write_scores_csv(w: &mut impl Write, m: &ScoreMatrix) -> Result<(), EvalError> {
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec!["probe".to_string()];
    header.extend(m.gallery.iter().map(|l| format!("{}/{}", l.subject, l.video)));
    wtr.write_record(&header)
        .map_err(|e| EvalError::BadFile(e.to_string()))?;
    for (pi, pl) in m.probes.iter().enumerate() {
        let mut row = vec![format!("{}/{}", pl.subject, pl.video)];
        row.extend((0..m.gallery.len()).map(|gi| format!("{:.9}", m.score(pi, gi))));
        wtr.write_record(&row)
            .map_err(|e| EvalError::BadFile(e.to_string()))?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vd(v: &[f64]) -> VideoDescriptor {
        VideoDescriptor {
            vector: v.to_vec(),
            frames: 1,
        }
    }

    #[test]
    fn single_frame_mean_is_identity() {
        let f = FrameDescriptor {
            frame: 0,
            vector: vec![1.5, -2.0, 0.25],
        };
        let v = accumulate(std::slice::from_ref(&f)).unwrap();
        assert_eq!(v.vector, f.vector);
        assert_eq!(v.frames, 1);
    }

    #[test]
    fn two_frame_mean() {
        let frames = vec![
            FrameDescriptor { frame: 0, vector: vec![1.0] },
            FrameDescriptor { frame: 1, vector: vec![3.0] },
        ];
        assert_eq!(accumulate(&frames).unwrap().vector, vec![2.0]);
    }

    #[test]
    fn mean_matches_compensated_summation() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(9);
        let frames: Vec<FrameDescriptor> = (0..100)
            .map(|i| FrameDescriptor {
                frame: i,
                vector: (0..32).map(|_| rng.gen_range(-1e6..1e6)).collect(),
            })
            .collect();
        let v = accumulate(&frames).unwrap();
        for k in 0..32 {
            // Kahan compensated summation as the high-precision oracle.
            let (mut s, mut c) = (0.0_f64, 0.0_f64);
            for f in &frames {
                let y = f.vector[k] - c;
                let t = s + y;
                c = (t - s) - y;
                s = t;
            }
            let want = s / 100.0;
            assert!((v.vector[k] - want).abs() <= 1e-9 * want.abs().max(1.0));
        }
    }

    #[test]
    fn accumulation_is_permutation_invariant() {
        let frames: Vec<FrameDescriptor> = (0..10)
            .map(|i| FrameDescriptor {
                frame: i,
                vector: vec![0.1 * i as f64 + 0.3, 1.0 / (i + 1) as f64],
            })
            .collect();
        let mut shuffled = frames.clone();
        shuffled.reverse();
        shuffled.swap(0, 4);
        assert_eq!(accumulate(&frames).unwrap(), accumulate(&shuffled).unwrap());
    }

    #[test]
    fn cosine_basics() {
        let a = vd(&[1.0, 2.0, 2.0]);
        assert_eq!(cosine_score(&a, &a).unwrap(), 1.0);
        let e1 = vd(&[1.0, 0.0]);
        let e2 = vd(&[0.0, 3.0]);
        assert_eq!(cosine_score(&e1, &e2).unwrap(), 0.0);
        let b = vd(&[2.0, 2.0, 1.0]);
        assert!((cosine_score(&a, &b).unwrap() - 8.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn cosine_is_symmetric_and_scale_invariant() {
        let a = vd(&[0.3, -1.2, 4.0]);
        let b = vd(&[2.0, 0.7, -0.1]);
        let ab = cosine_score(&a, &b).unwrap();
        assert_eq!(ab, cosine_score(&b, &a).unwrap());
        let a3 = vd(&[0.9, -3.6, 12.0]);
        assert!((cosine_score(&a3, &b).unwrap() - ab).abs() < 1e-12);
        assert!(matches!(
            cosine_score(&vd(&[0.0, 0.0, 0.0]), &b),
            Err(EvalError::ZeroNorm)
        ));
    }

    fn label(s: &str, v: &str) -> VideoLabel {
        VideoLabel {
            subject: s.into(),
            video: v.into(),
        }
    }

    #[test]
    fn score_matrix_matches_elementwise_oracle() {
        let gallery = vec![
            (vd(&[1.0, 0.0]), label("a", "g0")),
            (vd(&[0.0, 1.0]), label("b", "g1")),
            (vd(&[1.0, 1.0]), label("c", "g2")),
        ];
        let probes = vec![
            (vd(&[1.0, 0.2]), label("a", "p0")),
            (vd(&[0.5, 1.0]), label("b", "p1")),
            (vd(&[-1.0, 1.0]), label("c", "p2")),
        ];
        let m = score_all(&gallery, &probes, true).unwrap();
        for pi in 0..3 {
            for gi in 0..3 {
                let want = cosine_score(&probes[pi].0, &gallery[gi].0).unwrap();
                assert_eq!(m.score(pi, gi), want);
                let same = probes[pi].1.subject == gallery[gi].1.subject;
                assert_eq!(
                    m.kind(pi, gi),
                    if same { PairKind::Genuine } else { PairKind::Impostor }
                );
            }
        }
    }

    #[test]
    fn permuting_probes_permutes_rows() {
        let gallery = vec![
            (vd(&[1.0, 0.0]), label("a", "g0")),
            (vd(&[0.3, 1.0]), label("b", "g1")),
        ];
        let probes = vec![
            (vd(&[1.0, 0.2]), label("a", "p0")),
            (vd(&[0.5, 1.0]), label("b", "p1")),
        ];
        let swapped = vec![probes[1].clone(), probes[0].clone()];
        let m1 = score_all(&gallery, &probes, false).unwrap();
        let m2 = score_all(&gallery, &swapped, false).unwrap();
        for gi in 0..2 {
            assert_eq!(m1.score(0, gi), m2.score(1, gi));
            assert_eq!(m1.score(1, gi), m2.score(0, gi));
        }
    }

    #[test]
    fn same_video_pairs_are_excluded() {
        let gallery = vec![(vd(&[1.0]), label("a", "v1"))];
        let probes = vec![(vd(&[2.0]), label("a", "v1"))];
        let m = score_all(&gallery, &probes, true).unwrap();
        assert_eq!(m.kind(0, 0), PairKind::Excluded);
        let m = score_all(&gallery, &probes, false).unwrap();
        assert_eq!(m.kind(0, 0), PairKind::Genuine);
    }

    #[test]
    fn descriptor_round_trip() {
        let d = VideoDescriptor {
            vector: vec![0.5, -1.25, 3.0, 0.0625],
            frames: 7,
        };
        let mut buf = Vec::new();
        write_descriptor(&mut buf, &d).unwrap();
        let back = read_descriptor(&mut buf.as_slice()).unwrap();
        // Values chosen representable in f32, so the trip is exact.
        assert_eq!(back, d);
        buf[0] = b'X';
        assert!(read_descriptor(&mut buf.as_slice()).is_err());
    }

    #[test]
    fn frames_csv_import() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("frames.csv");
        std::fs::write(&p, "0,1.5,2.5\n2,-1.0,0.25\n").unwrap();
        let frames = read_frames_csv(&p).unwrap();
        assert_eq!(frames.len(), 2);
        assert_eq!(frames[0].frame, 0);
        assert_eq!(frames[1].vector, vec![-1.0, 0.25]);
    }
}
