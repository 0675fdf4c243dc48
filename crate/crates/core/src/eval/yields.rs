use super::EvalError;
use serde::Serialize;
use std::collections::BTreeMap;
use std::io::Write;

/// Absolute yaw bins used for yield accounting; negative angles are merged
/// into their positive bin.
pub const POSE_BINS: [u32; 7] = [0, 15, 30, 40, 60, 70, 90];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct YieldCell {
    pub attempted: u64,
    pub succeeded: u64,
}

impl YieldCell {
    pub fn rate(&self) -> Option<f64> {
        (self.attempted > 0).then(|| self.succeeded as f64 / self.attempted as f64)
    }
}

/// Per-method, per-pose-bin success accounting.
#[derive(Debug, Clone, Default, Serialize)]
pub struct YieldReport {
    /// method -> bin -> counts; deterministic iteration order.
    pub cells: BTreeMap<String, BTreeMap<u32, YieldCell>>,
}

impl YieldReport {
    pub fn methods(&self) -> Vec<&str> {
        self.cells.keys().map(String::as_str).collect()
    }

    pub fn overall(&self, method: &str) -> YieldCell {
        let mut total = YieldCell::default();
        if let Some(bins) = self.cells.get(method) {
            for cell in bins.values() {
                total.attempted += cell.attempted;
                total.succeeded += cell.succeeded;
            }
        }
        total
    }

    pub fn cell(&self, method: &str, bin: u32) -> YieldCell {
        self.cells
            .get(method)
            .and_then(|bins| bins.get(&bin))
            .copied()
            .unwrap_or_default()
    }
}

/// Tallies (method, pose bin, success) outcomes. Bins must come from
/// `POSE_BINS`.
pub fn yield_report(outcomes: &[(String, u32, bool)]) -> Result<YieldReport, EvalError> {
    let mut report = YieldReport::default();
    for (method, bin, success) in outcomes {
        if !POSE_BINS.contains(bin) {
            return Err(EvalError::UnknownBin(*bin));
        }
        let cell = report
            .cells
            .entry(method.clone())
            .or_default()
            .entry(*bin)
            .or_default();
        cell.attempted += 1;
        if *success {
            cell.succeeded += 1;
        }
    }
    Ok(report)
}

fn fmt_rate(cell: YieldCell) -> String {
    match cell.rate() {
        Some(r) => format!("{:.1}", 100.0 * r),
        None => String::new(),
    }
}

/// Summary layout: one column per method, rows for attempted and succeeded
/// counts and the overall yield percentage.
pub fn write_yield_summary_csv(w: &mut impl Write, report: &YieldReport) -> Result<(), EvalError> {
    let methods = report.methods();
    writeln!(w, "row,{}", methods.join(","))?;
    let row = |f: &dyn Fn(YieldCell) -> String| -> String {
        methods
            .iter()
            .map(|m| f(report.overall(m)))
            .collect::<Vec<_>>()
            .join(",")
    };
    writeln!(w, "attempted,{}", row(&|c| c.attempted.to_string()))?;
    writeln!(w, "succeeded,{}", row(&|c| c.succeeded.to_string()))?;
    writeln!(w, "yield_percent,{}", row(&fmt_rate))?;
    Ok(())
}

/// Per-bin series layout: one row per method and pose bin.
pub fn write_yield_bins_csv(w: &mut impl Write, report: &YieldReport) -> Result<(), EvalError> {
    writeln!(w, "method,pose_bin,attempted,succeeded,yield_percent")?;
    for method in report.methods() {
        for bin in POSE_BINS {
            let cell = report.cell(method, bin);
            if cell.attempted == 0 {
                continue;
            }
            writeln!(
                w,
                "{method},{bin},{},{},{}",
                cell.attempted,
                cell.succeeded,
                fmt_rate(cell)
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_bin_rate() {
        let outcomes: Vec<(String, u32, bool)> = (0..10)
            .map(|i| ("warp".to_string(), 30, i < 9))
            .collect();
        let r = yield_report(&outcomes).unwrap();
        let cell = r.cell("warp", 30);
        assert_eq!((cell.attempted, cell.succeeded), (10, 9));
        assert_eq!(cell.rate(), Some(0.9));
    }

    #[test]
    fn empty_outcomes_empty_report() {
        let r = yield_report(&[]).unwrap();
        assert!(r.cells.is_empty());
        assert_eq!(r.cell("x", 0).rate(), None);
        let mut buf = Vec::new();
        write_yield_summary_csv(&mut buf, &r).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("row,"));
    }

    #[test]
    fn unknown_bin_is_rejected() {
        let outcomes = vec![("m".to_string(), 45, true)];
        assert!(matches!(
            yield_report(&outcomes),
            Err(EvalError::UnknownBin(45))
        ));
    }

    #[test]
    fn mixed_ledger_matches_brute_force_tally() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(5);
        let methods = ["plain", "warp", "mirror"];
        let outcomes: Vec<(String, u32, bool)> = (0..500)
            .map(|_| {
                (
                    methods[rng.gen_range(0..3)].to_string(),
                    POSE_BINS[rng.gen_range(0..POSE_BINS.len())],
                    rng.gen_bool(0.7),
                )
            })
            .collect();
        let r = yield_report(&outcomes).unwrap();
        for m in methods {
            for bin in POSE_BINS {
                let attempted = outcomes
                    .iter()
                    .filter(|(om, ob, _)| om == m && *ob == bin)
                    .count() as u64;
                let succeeded = outcomes
                    .iter()
                    .filter(|(om, ob, s)| om == m && *ob == bin && *s)
                    .count() as u64;
                let cell = r.cell(m, bin);
                assert_eq!((cell.attempted, cell.succeeded), (attempted, succeeded));
            }
            let overall = r.overall(m);
            assert_eq!(
                overall.attempted,
                outcomes.iter().filter(|(om, _, _)| om == m).count() as u64
            );
        }
    }
}
