use std::fmt::Write as _;

use serde::Serialize;

use super::dataset_miou;
use crate::backends::Backend;
use crate::dataio::DatasetIndex;
use crate::error::Result;
use crate::pipeline::{PipelineConfig, PseudoLabeler, Source};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AblationRow {
    pub labels_source: Source,
    pub boxes_source: Source,
    pub pseudo_miou: f64,
    pub config_fingerprint: String,
}

fn row_rank(labels: Source, boxes: Source) -> u8 {
    match (labels, boxes) {
        (Source::Predicted, Source::Predicted) => 0,
        (Source::GroundTruth, Source::Predicted) => 1,
        (Source::GroundTruth, Source::GroundTruth) => 2,
        (Source::Predicted, Source::GroundTruth) => 3,
    }
}

/// `base` with labels and boxes taken from (predicted, predicted),
/// (ground truth, predicted) and (ground truth, ground truth).
pub fn supervision_configs(base: &PipelineConfig) -> Vec<PipelineConfig> {
    [
        (Source::Predicted, Source::Predicted),
        (Source::GroundTruth, Source::Predicted),
        (Source::GroundTruth, Source::GroundTruth),
    ]
    .into_iter()
    .map(|(labels_source, boxes_source)| PipelineConfig {
        labels_source,
        boxes_source,
        ..base.clone()
    })
    .collect()
}

/// One generate and mIoU run per config against the same backend and
/// dataset. Rows come out as pred/pred, GT/pred, GT/GT, then pred/GT;
/// configs sharing a row keep their input order.
pub fn ablation_report<B: Backend + ?Sized>(
    backend: &B,
    dataset: &DatasetIndex,
    cfgs: &[PipelineConfig],
    jobs: Option<usize>,
) -> Result<Vec<AblationRow>> {
    let mut ordered: Vec<&PipelineConfig> = cfgs.iter().collect();
    ordered.sort_by_key(|c| row_rank(c.labels_source, c.boxes_source));
    let mut rows = Vec::with_capacity(cfgs.len());
    for cfg in ordered {
        let generated = PseudoLabeler::new(backend, dataset, cfg.clone())?.generate_all(jobs)?;
        let report = dataset_miou::<f64>(dataset, generated.iter().map(|g| (g.image_id.as_str(), &g.raster)))?;
        rows.push(AblationRow {
            labels_source: cfg.labels_source,
            boxes_source: cfg.boxes_source,
            pseudo_miou: report.miou,
            config_fingerprint: cfg.fingerprint(),
        });
    }
    Ok(rows)
}

pub fn render_ablation(rows: &[AblationRow]) -> String {
    let name = |s: Source| match s {
        Source::Predicted => "predicted",
        Source::GroundTruth => "ground truth",
    };
    let mut out = String::new();
    let _ = writeln!(out, "{:<14} {:<14} {:>10}", "labels", "boxes", "mIoU (%)");
    for r in rows {
        let _ = writeln!(
            out,
            "{:<14} {:<14} {:>10.2}",
            name(r.labels_source),
            name(r.boxes_source),
            100.0 * r.pseudo_miou
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_follow_supervision_order() {
        let base = PipelineConfig::default();
        let mut cfgs = supervision_configs(&base);
        cfgs.push(PipelineConfig {
            boxes_source: Source::GroundTruth,
            ..base
        });
        cfgs.reverse();
        cfgs.sort_by_key(|c| row_rank(c.labels_source, c.boxes_source));
        let order: Vec<(Source, Source)> = cfgs.iter().map(|c| (c.labels_source, c.boxes_source)).collect();
        use Source::*;
        assert_eq!(
            order,
            vec![
                (Predicted, Predicted),
                (GroundTruth, Predicted),
                (GroundTruth, GroundTruth),
                (Predicted, GroundTruth)
            ]
        );
    }
}
