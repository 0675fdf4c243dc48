use crate::config::PipelineConfig;
use anyhow::{bail, Context, Result};
use facefront::eval::{
    accumulate, cmc_curve, read_descriptor, read_frames_csv, roc_curve, score_all, write_cmc_csv,
    write_roc_csv, write_scores_csv, VideoDescriptor, VideoLabel,
};
use std::path::Path;

/// Labels CSV row: descriptor file name, subject id, video id. `.fvec`
/// files hold accumulated descriptors; `.csv` files hold per-frame vectors
/// that are accumulated here.
fn read_labeled_descriptors(
    descriptor_dir: &Path,
    labels: &Path,
) -> Result<Vec<(VideoDescriptor, VideoLabel)>> {
    let mut rdr = csv::Reader::from_path(labels)
        .with_context(|| format!("reading {}", labels.display()))?;
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record?;
        if record.len() != 3 {
            bail!("labels row needs file,subject,video, got {record:?}");
        }
        let path = descriptor_dir.join(record[0].trim());
        let descriptor = if path.extension().is_some_and(|e| e == "csv") {
            let frames = read_frames_csv(&path)
                .with_context(|| format!("reading {}", path.display()))?;
            accumulate(&frames)?
        } else {
            let mut f = std::fs::File::open(&path)
                .with_context(|| format!("opening {}", path.display()))?;
            read_descriptor(&mut f).with_context(|| format!("reading {}", path.display()))?
        };
        out.push((
            descriptor,
            VideoLabel {
                subject: record[1].trim().to_string(),
                video: record[2].trim().to_string(),
            },
        ));
    }
    Ok(out)
}

pub fn run(
    config: &PipelineConfig,
    descriptor_dir: &Path,
    labels: &Path,
    out_dir: &Path,
) -> Result<()> {
    let videos = read_labeled_descriptors(descriptor_dir, labels)?;
    if videos.len() < 2 {
        bail!("need at least 2 videos to score, got {}", videos.len());
    }
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    let matrix = score_all(&videos, &videos, config.evaluation.exclude_same_video)?;
    let roc = roc_curve(&matrix)?;
    let cmc = cmc_curve(&matrix)?;
    let mut f = std::fs::File::create(out_dir.join("scores.csv"))?;
    write_scores_csv(&mut f, &matrix)?;
    let mut f = std::fs::File::create(out_dir.join("roc.csv"))?;
    write_roc_csv(&mut f, &roc)?;
    let mut f = std::fs::File::create(out_dir.join("cmc.csv"))?;
    write_cmc_csv(&mut f, &cmc)?;
    println!(
        "scored {} videos; rank-1 identification rate {:.3}",
        videos.len(),
        cmc[0]
    );
    Ok(())
}
