use super::descriptor::{PairKind, ScoreMatrix};
use super::EvalError;
use std::io::Write;

fn split_scores(m: &ScoreMatrix) -> (Vec<f64>, Vec<f64>) {
    let mut genuine = Vec::new();
    let mut impostor = Vec::new();
    for (s, k) in m.scores.iter().zip(&m.kinds) {
        match k {
            PairKind::Genuine => genuine.push(*s),
            PairKind::Impostor => impostor.push(*s),
            PairKind::Excluded => {}
        }
    }
    (genuine, impostor)
}

/// ROC points (false-accept rate, verification rate) swept over every
/// distinct score threshold, descending; acceptance is score >= threshold.
/// Starts at (0, 0) and ends at (1, 1).
pub fn roc_curve(m: &ScoreMatrix) -> Result<Vec<(f64, f64)>, EvalError> {
    let (genuine, impostor) = split_scores(m);
    if genuine.is_empty() {
        return Err(EvalError::MissingGenuine);
    }
    if impostor.is_empty() {
        return Err(EvalError::MissingImpostor);
    }
    let mut thresholds: Vec<f64> = genuine.iter().chain(&impostor).copied().collect();
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    thresholds.dedup();
    let (ng, ni) = (genuine.len() as f64, impostor.len() as f64);
    let mut points = vec![(0.0, 0.0)];
    for t in thresholds {
        let far = impostor.iter().filter(|&&s| s >= t).count() as f64 / ni;
        let vr = genuine.iter().filter(|&&s| s >= t).count() as f64 / ng;
        points.push((far, vr));
    }
    Ok(points)
}

/// Rank-r identification rates for r = 1..=gallery size. A probe's rank is
/// that of its best genuine gallery score, with ties broken pessimistically
/// (equal-scored impostors rank ahead of the genuine entry).
pub fn cmc_curve(m: &ScoreMatrix) -> Result<Vec<f64>, EvalError> {
    let g = m.gallery.len();
    let mut rank_hits = vec![0usize; g];
    for pi in 0..m.probes.len() {
        let mut best_genuine = f64::NEG_INFINITY;
        let mut has_genuine = false;
        for gi in 0..g {
            if m.kind(pi, gi) == PairKind::Genuine {
                has_genuine = true;
                best_genuine = best_genuine.max(m.score(pi, gi));
            }
        }
        if !has_genuine {
            return Err(EvalError::ProbeWithoutMate(pi));
        }
        let rank = 1 + (0..g)
            .filter(|&gi| m.kind(pi, gi) == PairKind::Impostor && m.score(pi, gi) >= best_genuine)
            .count();
        rank_hits[rank - 1] += 1;
    }
    let n = m.probes.len() as f64;
    let mut curve = Vec::with_capacity(g);
    let mut cum = 0usize;
    for hits in rank_hits {
        cum += hits;
        curve.push(cum as f64 / n);
    }
    Ok(curve)
}

pub fn write_roc_csv(w: &mut impl Write, points: &[(f64, f64)]) -> Result<(), EvalError> {
    writeln!(w, "false_accept_rate,verification_rate")?;
    for (far, vr) in points {
        writeln!(w, "{far:.9},{vr:.9}")?;
    }
    Ok(())
}

pub fn write_cmc_csv(w: &mut impl Write, curve: &[f64]) -> Result<(), EvalError> {
    writeln!(w, "rank,identification_rate")?;
    for (i, rate) in curve.iter().enumerate() {
        writeln!(w, "{},{rate:.9}", i + 1)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::descriptor::VideoLabel;

    fn label(s: &str, v: &str) -> VideoLabel {
        VideoLabel {
            subject: s.into(),
            video: v.into(),
        }
    }

    /// Builds a matrix directly from rows of (score, kind).
    fn matrix(rows: &[Vec<(f64, PairKind)>]) -> ScoreMatrix {
        let g = rows[0].len();
        ScoreMatrix {
            gallery: (0..g).map(|i| label(&format!("g{i}"), &format!("gv{i}"))).collect(),
            probes: (0..rows.len())
                .map(|i| label(&format!("p{i}"), &format!("pv{i}")))
                .collect(),
            scores: rows.iter().flatten().map(|(s, _)| *s).collect(),
            kinds: rows.iter().flatten().map(|(_, k)| *k).collect(),
        }
    }

    #[test]
    fn separated_scores_reach_full_verification_at_zero_far() {
        use PairKind::*;
        let m = matrix(&[
            vec![(0.9, Genuine), (0.2, Impostor)],
            vec![(0.1, Impostor), (0.8, Genuine)],
        ]);
        let roc = roc_curve(&m).unwrap();
        assert!(roc.contains(&(0.0, 1.0)));
        assert_eq!(*roc.first().unwrap(), (0.0, 0.0));
        assert_eq!(*roc.last().unwrap(), (1.0, 1.0));
        for w in roc.windows(2) {
            assert!(w[1].0 >= w[0].0 && w[1].1 >= w[0].1);
        }
    }

    #[test]
    fn identical_scores_jump_straight_to_one() {
        use PairKind::*;
        let m = matrix(&[vec![(0.5, Genuine), (0.5, Impostor)]]);
        assert_eq!(roc_curve(&m).unwrap(), vec![(0.0, 0.0), (1.0, 1.0)]);
    }

    #[test]
    fn roc_matches_brute_force_enumeration() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(77);
        let rows: Vec<Vec<(f64, PairKind)>> = (0..6)
            .map(|pi| {
                (0..6)
                    .map(|gi| {
                        let kind = if pi == gi {
                            PairKind::Genuine
                        } else {
                            PairKind::Impostor
                        };
                        (rng.gen_range(-1.0..1.0), kind)
                    })
                    .collect()
            })
            .collect();
        let m = matrix(&rows);
        let roc = roc_curve(&m).unwrap();
        // Brute force: for every distinct threshold count acceptances.
        let genuine: Vec<f64> = rows.iter().flatten().filter(|(_, k)| *k == PairKind::Genuine).map(|(s, _)| *s).collect();
        let impostor: Vec<f64> = rows.iter().flatten().filter(|(_, k)| *k == PairKind::Impostor).map(|(s, _)| *s).collect();
        let mut all: Vec<f64> = genuine.iter().chain(&impostor).copied().collect();
        all.sort_by(|a, b| b.partial_cmp(a).unwrap());
        all.dedup();
        let mut want = vec![(0.0, 0.0)];
        for t in all {
            want.push((
                impostor.iter().filter(|&&s| s >= t).count() as f64 / impostor.len() as f64,
                genuine.iter().filter(|&&s| s >= t).count() as f64 / genuine.len() as f64,
            ));
        }
        assert_eq!(roc, want);
    }

    #[test]
    fn cmc_rank_one_when_genuine_dominates() {
        use PairKind::*;
        let m = matrix(&[
            vec![(0.9, Genuine), (0.2, Impostor)],
            vec![(0.1, Impostor), (0.8, Genuine)],
        ]);
        assert_eq!(cmc_curve(&m).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn cmc_two_probe_hand_case() {
        use PairKind::*;
        let m = matrix(&[
            vec![(0.9, Genuine), (0.2, Impostor)],
            vec![(0.7, Impostor), (0.5, Genuine)],
        ]);
        assert_eq!(cmc_curve(&m).unwrap(), vec![0.5, 1.0]);
    }

    #[test]
    fn cmc_ties_are_pessimistic() {
        use PairKind::*;
        let m = matrix(&[vec![(0.5, Genuine), (0.5, Impostor)]]);
        assert_eq!(cmc_curve(&m).unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn probe_without_mate_is_an_error() {
        use PairKind::*;
        let m = matrix(&[vec![(0.5, Impostor), (0.1, Impostor)]]);
        assert!(matches!(cmc_curve(&m), Err(EvalError::ProbeWithoutMate(0))));
    }
}
