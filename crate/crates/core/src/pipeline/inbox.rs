//! Selection of the mask for one detection box from the segmenter's
//! proposals.
//!
//! Proposals for a box mix whole objects, parts and subparts. Candidates that
//! spill out of the box are dropped (containment gate), the rest are ranked by
//! how much of the box they explain (coverage), and a single high-coverage
//! mask wins outright. Otherwise parts are unioned greedily while they keep
//! adding enough new in-box pixels.

use serde::Serialize;

use super::PipelineConfig;
use crate::backends::MaskCandidate;
use crate::error::{Error, Result};
use crate::maskgeom::{clip_mask, containment, coverage, rle_decode, BBox, BitMask, ClassId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Chosen,
    EmptyMask,
    LeaksOutsideBox,
    /// The top-ranked candidate covered enough of the box to stand alone.
    WholeMaskChosen,
    InsufficientGain,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CandidateRecord {
    pub index: usize,
    pub proposal_score: f64,
    pub coverage: f64,
    /// `None` for an empty mask.
    pub containment: Option<f64>,
    /// Position among the candidates that passed the containment gate.
    pub rank: Option<usize>,
    /// In-box pixels this candidate would add to the union, when evaluated.
    pub new_pixels: Option<u64>,
    pub verdict: Verdict,
}

/// Full account of one box's selection: every candidate appears exactly once.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelectionTrace {
    #[serde(rename = "box")]
    pub bbox: [u32; 4],
    pub class_id: ClassId,
    pub score: f64,
    pub candidates: Vec<CandidateRecord>,
    /// Chosen candidate indices, in the order they were taken.
    pub chosen: Vec<usize>,
    pub selected_pixels: u64,
}

impl SelectionTrace {
    /// Whether some candidate that passed the gate reached
    /// `whole_coverage_min`.
    pub fn has_whole_candidate(&self, cfg: &PipelineConfig) -> bool {
        self.candidates
            .iter()
            .any(|c| c.rank.is_some() && c.coverage >= cfg.whole_coverage_min)
    }
}

/// Selects the mask for `bbox` among `cands` (all `dims`-sized) and clips it
/// to the box. No surviving candidate yields an empty mask.
pub fn select_in_box(
    cands: &[MaskCandidate],
    bbox: &BBox,
    dims: (u32, u32),
    cfg: &PipelineConfig,
) -> Result<(BitMask, SelectionTrace)> {
    let mut records = Vec::with_capacity(cands.len());
    let mut masks = Vec::with_capacity(cands.len());
    for (index, c) in cands.iter().enumerate() {
        let m = rle_decode(&c.mask)?;
        if m.dims() != dims {
            return Err(Error::DimensionMismatch {
                expected: dims,
                found: m.dims(),
            });
        }
        let contained = containment::<f64>(&m, bbox).ok();
        let verdict = match contained {
            None => Verdict::EmptyMask,
            Some(r) if r < cfg.containment_min => Verdict::LeaksOutsideBox,
            Some(_) => Verdict::Chosen, // provisional
        };
        records.push(CandidateRecord {
            index,
            proposal_score: c.proposal_score,
            coverage: coverage::<f64>(&m, bbox),
            containment: contained,
            rank: None,
            new_pixels: None,
            verdict,
        });
        masks.push(m);
    }

    // Coverage shares the box area as denominator, so in-box pixel counts
    // rank exactly.
    let in_box: Vec<u64> = masks.iter().map(|m| m.count_in_box(bbox)).collect();
    let mut survivors: Vec<usize> = (0..cands.len())
        .filter(|&i| records[i].verdict == Verdict::Chosen)
        .collect();
    survivors.sort_by(|&a, &b| {
        in_box[b]
            .cmp(&in_box[a])
            .then(cands[b].proposal_score.total_cmp(&cands[a].proposal_score))
            .then(a.cmp(&b))
    });
    for (rank, &i) in survivors.iter().enumerate() {
        records[i].rank = Some(rank);
    }

    let mut union = BitMask::new(dims.0, dims.1)?;
    let mut chosen = Vec::new();
    if let Some((&top, rest)) = survivors.split_first() {
        union = clip_mask(&masks[top], bbox);
        chosen.push(top);
        records[top].new_pixels = Some(union.count_ones());
        if records[top].coverage >= cfg.whole_coverage_min {
            for &i in rest {
                records[i].verdict = Verdict::WholeMaskChosen;
            }
        } else {
            let min_gain = cfg.union_gain_min * bbox.area() as f64;
            for &i in rest {
                let clipped = clip_mask(&masks[i], bbox);
                let gain = clipped.difference_count(&union)?;
                records[i].new_pixels = Some(gain);
                if gain > 0 && gain as f64 >= min_gain {
                    union.union_with(&clipped)?;
                    chosen.push(i);
                } else {
                    records[i].verdict = Verdict::InsufficientGain;
                }
            }
        }
    }

    let trace = SelectionTrace {
        bbox: bbox.coords(),
        class_id: bbox.class_id(),
        score: bbox.score(),
        candidates: records,
        chosen,
        selected_pixels: union.count_ones(),
    };
    Ok((union, trace))
}
