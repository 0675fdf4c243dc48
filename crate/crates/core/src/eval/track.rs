use super::EvalError;
use serde::{Deserialize, Serialize};

/// One face detection inside a video track.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub frame: u32,
    pub x: f64,
    pub y: f64,
}

/// Ordered per-frame detections of one subject in one video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub subject: String,
    pub video: String,
    detections: Vec<Detection>,
}

impl Track {
    /// Frame indices must be strictly increasing.
    pub fn new(
        subject: impl Into<String>,
        video: impl Into<String>,
        detections: Vec<Detection>,
    ) -> Result<Self, EvalError> {
        for w in detections.windows(2) {
            if w[1].frame <= w[0].frame {
                return Err(EvalError::BadTrack(format!(
                    "frame {} follows frame {}",
                    w[1].frame, w[0].frame
                )));
            }
        }
        if detections.iter().any(|d| !(d.x.is_finite() && d.y.is_finite())) {
            return Err(EvalError::NonFinite);
        }
        Ok(Track {
            subject: subject.into(),
            video: video.into(),
            detections,
        })
    }

    pub fn detections(&self) -> &[Detection] {
        &self.detections
    }

    pub fn len(&self) -> usize {
        self.detections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detections.is_empty()
    }
}

/// Removes spatial outliers from a detection track in a single pass. Each
/// detection's expected location is the mean of its temporal neighbors
/// within `window` positions (self excluded); detections whose deviation
/// from that estimate exceeds `k` standard deviations of the deviation
/// distribution are dropped. Tracks with 2 or fewer detections come back
/// unchanged. Removing more than half the track is treated as a filter
/// collapse and reported as an error.
pub fn filter_track(track: &Track, k: f64, window: usize) -> Result<Track, EvalError> {
    if track.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let n = track.len();
    if n <= 2 {
        return Ok(track.clone());
    }
    let dets = track.detections();
    let mut deviations = Vec::with_capacity(n);
    for i in 0..n {
        let lo = i.saturating_sub(window);
        let hi = (i + window).min(n - 1);
        let (mut sx, mut sy, mut c) = (0.0, 0.0, 0.0);
        for j in lo..=hi {
            if j == i {
                continue;
            }
            sx += dets[j].x;
            sy += dets[j].y;
            c += 1.0;
        }
        let (ex, ey) = (sx / c, sy / c);
        deviations.push(((dets[i].x - ex).powi(2) + (dets[i].y - ey).powi(2)).sqrt());
    }
    let mean = deviations.iter().sum::<f64>() / n as f64;
    let var = deviations.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n as f64;
    let sigma = var.sqrt();
    let keep: Vec<Detection> = dets
        .iter()
        .zip(&deviations)
        .filter(|(_, &d)| d <= k * sigma || sigma == 0.0)
        .map(|(det, _)| *det)
        .collect();
    let removed = n - keep.len();
    if removed > n.div_ceil(2) {
        return Err(EvalError::FilterCollapse { removed, total: n });
    }
    Track::new(track.subject.clone(), track.video.clone(), keep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn track_of(points: &[(f64, f64)]) -> Track {
        let dets = points
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| Detection {
                frame: i as u32,
                x,
                y,
            })
            .collect();
        Track::new("s", "v", dets).unwrap()
    }

    #[test]
    fn identical_coordinates_survive() {
        let t = track_of(&[(5.0, 5.0); 8]);
        let f = filter_track(&t, 2.5, 5).unwrap();
        assert_eq!(f, t);
    }

    #[test]
    fn short_tracks_are_untouched() {
        let t = track_of(&[(0.0, 0.0), (100.0, 100.0)]);
        let f = filter_track(&t, 2.5, 5).unwrap();
        assert_eq!(f, t);
    }

    #[test]
    fn displaced_detection_is_removed() {
        // Linear trajectory with unit spacing, detection 5 displaced by 50.
        let mut pts: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 0.0)).collect();
        pts[5].1 = 50.0;
        let t = track_of(&pts);
        let f = filter_track(&t, 2.5, 5).unwrap();
        // Independent deviation/sigma computation straight from the
        // definition, on this concrete 10-point instance.
        let n = 10usize;
        let mut devs = vec![0.0; n];
        for i in 0..n {
            let lo = i.saturating_sub(5);
            let hi = (i + 5).min(n - 1);
            let neigh: Vec<(f64, f64)> =
                (lo..=hi).filter(|&j| j != i).map(|j| pts[j]).collect();
            let ex = neigh.iter().map(|p| p.0).sum::<f64>() / neigh.len() as f64;
            let ey = neigh.iter().map(|p| p.1).sum::<f64>() / neigh.len() as f64;
            devs[i] = ((pts[i].0 - ex).powi(2) + (pts[i].1 - ey).powi(2)).sqrt();
        }
        let mean = devs.iter().sum::<f64>() / n as f64;
        let sigma =
            (devs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n as f64).sqrt();
        let expect: Vec<usize> = (0..n).filter(|&i| devs[i] <= 2.5 * sigma).collect();
        assert_eq!(expect, vec![0, 1, 2, 3, 4, 6, 7, 8, 9]);
        let kept: Vec<u32> = f.detections().iter().map(|d| d.frame).collect();
        assert_eq!(kept, vec![0, 1, 2, 3, 4, 6, 7, 8, 9]);
    }

    #[test]
    fn collapse_is_reported() {
        // Alternating far-apart clusters make most deviations huge; with a
        // tiny k nearly everything is "outlying".
        let pts: Vec<(f64, f64)> = (0..10)
            .map(|i| if i % 2 == 0 { (0.0, 0.0) } else { (100.0, 0.0) })
            .collect();
        let t = track_of(&pts);
        assert!(matches!(
            filter_track(&t, 1e-6, 5),
            Err(EvalError::FilterCollapse { .. })
        ));
    }

    #[test]
    fn decreasing_frames_are_rejected() {
        let dets = vec![
            Detection { frame: 3, x: 0.0, y: 0.0 },
            Detection { frame: 2, x: 0.0, y: 0.0 },
        ];
        assert!(matches!(
            Track::new("s", "v", dets),
            Err(EvalError::BadTrack(_))
        ));
    }
}
