//! Facial pre-processing toolkit: a cascaded mixture-of-regressors
//! landmarker, generic-template face frontalization with density-based
//! symmetry correction, and a video-matching evaluation harness
//! (track filtering, descriptor accumulation, cosine scoring, ROC/CMC
//! curves and yield reports).

pub mod cascade;
pub mod eval;
pub mod frontal;
pub mod geometry;
