//! Video-matching evaluation harness: detection-track filtering, per-video
//! descriptor accumulation, cosine score matrices, ROC and CMC curves and
//! per-pose-bin yield reports.

mod curves;
mod descriptor;
mod track;
mod yields;

pub use curves::{cmc_curve, roc_curve, write_cmc_csv, write_roc_csv};
pub use descriptor::{
    accumulate, cosine_score, read_descriptor, read_frames_csv, score_all, write_descriptor,
    write_scores_csv, FrameDescriptor, PairKind, ScoreMatrix, VideoDescriptor, VideoLabel,
};
pub use track::{filter_track, Detection, Track};
pub use yields::{
    write_yield_bins_csv, write_yield_summary_csv, yield_report, YieldCell, YieldReport,
    POSE_BINS,
};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("empty input")]
    EmptyInput,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value encountered")]
    NonFinite,
    #[error("zero-norm descriptor")]
    ZeroNorm,
    #[error("track filter would remove {removed} of {total} detections")]
    FilterCollapse { removed: usize, total: usize },
    #[error("bad track: {0}")]
    BadTrack(String),
    #[error("score matrix has no genuine pairs")]
    MissingGenuine,
    #[error("score matrix has no impostor pairs")]
    MissingImpostor,
    #[error("probe {0} has no genuine gallery entry")]
    ProbeWithoutMate(usize),
    #[error("unknown pose bin {0}")]
    UnknownBin(u32),
    #[error("bad descriptor file: {0}")]
    BadFile(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
