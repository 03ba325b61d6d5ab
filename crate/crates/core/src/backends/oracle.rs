use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Backend, ClassPrediction, Classifier, Detection, Detector, MaskCandidate, Segmenter};
use crate::dataio::{encode_label_png, ClassTable, DatasetIndex, Instance};
use crate::error::{Error, Result};
use crate::maskgeom::{morph4, rle_encode, BBox, BitMask, ClassId};

/// Proposal score of each half when the oracle splits an object in two.
pub const PART_SCORE: f64 = 0.9;

/// Noise model of the oracle backend. Deterministic given `seed`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleNoise {
    pub seed: u64,
    /// Chance that a present class is dropped from the classifier output and
    /// replaced by a uniformly chosen other class.
    pub label_flip_prob: f64,
    /// Each box side moves by `uniform(-f, f)` times the box side length.
    pub box_jitter_frac: f64,
    /// 4-neighborhood steps: negative erodes, positive dilates.
    pub mask_morph_radius: i32,
    /// Chance that an object is proposed as two halves instead of one mask.
    pub part_split_prob: f64,
}

impl OracleNoise {
    pub fn none(seed: u64) -> Self {
        OracleNoise {
            seed,
            label_flip_prob: 0.0,
            box_jitter_frac: 0.0,
            mask_morph_radius: 0,
            part_split_prob: 0.0,
        }
    }

    /// Named presets: `none`, `preset-mild`, `preset-parts`.
    pub fn preset(name: &str, seed: u64) -> Result<Self> {
        let base = Self::none(seed);
        match name.strip_prefix("preset-").unwrap_or(name) {
            "none" => Ok(base),
            "mild" => Ok(OracleNoise {
                label_flip_prob: 0.1,
                box_jitter_frac: 0.1,
                mask_morph_radius: 1,
                ..base
            }),
            "parts" => Ok(OracleNoise {
                part_split_prob: 1.0,
                ..base
            }),
            _ => Err(Error::Config(format!(
                "unknown noise preset {name:?} (expected none, preset-mild, preset-parts)"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("label_flip_prob", self.label_flip_prob),
            ("part_split_prob", self.part_split_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} = {p} outside [0,1]")));
            }
        }
        if !(self.box_jitter_frac >= 0.0 && self.box_jitter_frac.is_finite()) {
            return Err(Error::Config(format!(
                "box_jitter_frac = {} must be >= 0",
                self.box_jitter_frac
            )));
        }
        Ok(())
    }
}

/// Random stream for one noise decision, derived from the seed, a stream
/// name, the image and an index. Independent of call order.
pub fn noise_rng(seed: u64, stream: &str, image_id: &str, index: u64) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    for part in [stream, image_id] {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part.as_bytes());
    }
    h.update(index.to_le_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

/// Synthesizes model outputs from ground truth. With zero noise it
/// reproduces the ground truth exactly.
#[derive(Clone, Debug)]
pub struct OracleBackend {
    dataset: Arc<DatasetIndex>,
    noise: OracleNoise,
}

impl OracleBackend {
    pub fn new(dataset: Arc<DatasetIndex>, noise: OracleNoise) -> Result<Self> {
        noise.validate()?;
        Ok(OracleBackend { dataset, noise })
    }

    pub fn noise(&self) -> &OracleNoise {
        &self.noise
    }

    fn instances(&self, image_id: &str) -> Result<&[Instance]> {
        Ok(&self.dataset.ground_truth(image_id)?.instances)
    }

    fn rng(&self, stream: &str, image_id: &str, index: u64) -> ChaCha8Rng {
        noise_rng(self.noise.seed, stream, image_id, index)
    }

    fn jitter(&self, image_id: &str, index: usize, b: &BBox, width: u32, height: u32) -> Result<BBox> {
        let f = self.noise.box_jitter_frac;
        if f == 0.0 {
            return Ok(*b);
        }
        let mut rng = self.rng("jitter", image_id, index as u64);
        let mut shift = |side: u32| (rng.gen::<f64>() * 2.0 - 1.0) * f * side as f64;
        // Draw order: x0, y0, x1, y1.
        let x0 = b.x0() as f64 + shift(b.width());
        let y0 = b.y0() as f64 + shift(b.height());
        let x1 = b.x1() as f64 + shift(b.width());
        let y1 = b.y1() as f64 + shift(b.height());
        BBox::from_corners_clamped([x0, y0, x1, y1], (width, height), b.class_id(), b.score())
    }
}

/// Splits `m` through its centroid across its longer extent. `None` when one
/// side would be empty.
pub(crate) fn split_at_centroid(m: &BitMask) -> Option<(BitMask, BitMask)> {
    let [x0, y0, x1, y1] = m.extent()?;
    let along_x = x1 - x0 >= y1 - y0;
    let coord = |(x, y): (u32, u32)| if along_x { x } else { y } as f64;
    let n = m.count_ones() as f64;
    let centroid = m.iter_ones().map(coord).sum::<f64>() / n;
    let mut low = m.empty_like();
    let mut high = m.empty_like();
    for p in m.iter_ones() {
        let side = if coord(p) < centroid { &mut low } else { &mut high };
        side.set(p.0, p.1, true);
    }
    (!low.is_empty() && !high.is_empty()).then_some((low, high))
}

impl Classifier for OracleBackend {
    fn classify(&self, image_id: &str, classes: &ClassTable) -> Result<Vec<ClassPrediction>> {
        let present = self.dataset.ground_truth(image_id)?.image_labels();
        let foreground: Vec<ClassId> = classes.foreground().collect();
        let mut positive: Vec<ClassId> = Vec::new();
        for &c in &present {
            let mut rng = self.rng("flip", image_id, c.0 as u64);
            if rng.gen::<f64>() < self.noise.label_flip_prob {
                let others: Vec<ClassId> = foreground.iter().copied().filter(|&o| o != c).collect();
                if !others.is_empty() {
                    positive.push(others[rng.gen_range(0..others.len())]);
                }
            } else {
                positive.push(c);
            }
        }
        Ok(foreground
            .into_iter()
            .map(|class_id| ClassPrediction {
                class_id,
                score: if positive.contains(&class_id) { 1.0 } else { 0.0 },
            })
            .collect())
    }
}

impl Detector for OracleBackend {
    fn detect(
        &self,
        image_id: &str,
        labels: &[ClassId],
        box_threshold: f64,
        text_threshold: f64,
    ) -> Result<Vec<Detection>> {
        let rec = self.dataset.get(image_id)?;
        let classes = self.dataset.classes();
        let mut out = Vec::new();
        // Oracle boxes score 1.0, which passes any threshold in [0,1].
        if box_threshold > 1.0 || text_threshold > 1.0 {
            return Ok(out);
        }
        for (i, inst) in self.instances(image_id)?.iter().enumerate() {
            if !labels.contains(&inst.class_id) {
                continue;
            }
            out.push(Detection {
                id: i,
                bbox: self.jitter(image_id, i, &inst.bbox, rec.width, rec.height)?,
                label_text: classes.name(inst.class_id).unwrap_or_default().to_string(),
                text_score: 1.0,
            });
        }
        Ok(out)
    }
}

impl Segmenter for OracleBackend {
    fn segment_in_box(&self, image_id: &str, det: &Detection) -> Result<Vec<MaskCandidate>> {
        let instances = self.instances(image_id)?;
        // The instance of the detected class with the most pixels in the box.
        let target = instances
            .iter()
            .enumerate()
            .filter(|(_, inst)| inst.class_id == det.bbox.class_id())
            .map(|(i, inst)| (inst.mask.count_in_box(&det.bbox), i))
            .filter(|&(n, _)| n > 0)
            .max_by_key(|&(n, i)| (n, std::cmp::Reverse(i)));
        let Some((_, index)) = target else {
            return Ok(Vec::new());
        };
        let whole = &instances[index].mask;
        let mut rng = self.rng("segment", image_id, index as u64);
        let split = if rng.gen::<f64>() < self.noise.part_split_prob {
            split_at_centroid(whole)
        } else {
            None
        };
        let proposals = match split {
            Some((a, b)) => vec![(a, PART_SCORE), (b, PART_SCORE)],
            None => vec![(whole.clone(), 1.0)],
        };
        Ok(proposals
            .into_iter()
            .map(|(m, score)| (morph4(&m, self.noise.mask_morph_radius), score))
            .filter(|(m, _)| !m.is_empty())
            .map(|(m, proposal_score)| MaskCandidate {
                mask: rle_encode(&m),
                proposal_score,
                box_id: det.id,
            })
            .collect())
    }
}

impl Backend for OracleBackend {
    fn describe(&self) -> String {
        let n = &self.noise;
        format!(
            "oracle:seed={};flip={:?};jitter={:?};morph={};split={:?}",
            n.seed, n.label_flip_prob, n.box_jitter_frac, n.mask_morph_radius, n.part_split_prob
        )
    }

    fn image_hash(&self, image_id: &str) -> Result<String> {
        let gt = self.dataset.ground_truth(image_id)?;
        let mut h = Sha256::new();
        h.update(encode_label_png(&gt.raster));
        h.update(encode_label_png(&gt.object_raster()?));
        Ok(format!("sha256:{}", hex::encode(h.finalize())))
    }
}
