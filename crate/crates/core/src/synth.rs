//! Seeded synthetic datasets: filled ellipses on a background, one object
//! raster per image, for end-to-end runs without real data.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::backends::noise_rng;
use crate::dataio::{ClassTable, DatasetIndex, GroundTruth, ImageRecord, Instance};
use crate::error::{Error, Result};
use crate::maskgeom::{BitMask, ClassId, LabelRaster};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub seed: u64,
    pub images: usize,
    pub width: u32,
    pub height: u32,
    /// Foreground classes; the table also holds background.
    pub classes: usize,
    pub min_objects: usize,
    pub max_objects: usize,
    /// Distinct classes per image are capped at this.
    pub max_classes_per_image: usize,
    /// Minimum gap in pixels between the tight boxes of two objects.
    pub margin: u32,
    /// Semi-axis range in pixels.
    pub min_radius: u32,
    pub max_radius: u32,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            seed: 0,
            images: 50,
            width: 128,
            height: 128,
            classes: 5,
            min_objects: 2,
            max_objects: 5,
            max_classes_per_image: 3,
            margin: 2,
            min_radius: 6,
            max_radius: 18,
        }
    }
}

const MAX_ATTEMPTS: usize = 500;

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("synthetic dataset: {m}")));
        if self.images == 0 || self.width == 0 || self.height == 0 {
            return bad("images, width and height must be positive");
        }
        if !(1..=254).contains(&self.classes) {
            return bad("classes must be in 1..=254");
        }
        if self.min_objects == 0 || self.min_objects > self.max_objects || self.max_objects > 254 {
            return bad("need 1 <= min_objects <= max_objects <= 254");
        }
        if self.max_classes_per_image == 0 {
            return bad("max_classes_per_image must be positive");
        }
        if self.min_radius == 0 || self.min_radius > self.max_radius {
            return bad("need 1 <= min_radius <= max_radius");
        }
        if 2 * self.max_radius + 1 > self.width.min(self.height) {
            return bad("objects do not fit in the image");
        }
        Ok(())
    }

    /// PASCAL VOC names for up to 20 classes, `class<i>` beyond.
    pub fn class_table(&self) -> ClassTable {
        let voc = ClassTable::pascal_voc();
        if self.classes < voc.len() {
            let entries = &voc.entries()[..=self.classes];
            ClassTable::new(entries.iter().map(|e| (e.name.clone(), e.aliases.clone())))
                .expect("prefix of a valid table")
        } else {
            let names =
                std::iter::once("background".to_string()).chain((1..=self.classes).map(|i| format!("class{i}")));
            ClassTable::from_names(names).expect("generated names are distinct")
        }
    }

    pub fn generate(&self) -> Result<DatasetIndex> {
        self.validate()?;
        let width = (self.images - 1).to_string().len();
        let images = (0..self.images)
            .map(|i| self.image(&format!("synth_{i:0width$}")))
            .collect::<Result<Vec<_>>>()?;
        DatasetIndex::new("train", self.class_table(), images)
    }

    fn image(&self, id: &str) -> Result<ImageRecord> {
        let mut rng = noise_rng(self.seed, "synth", id, 0);
        let n = rng.gen_range(self.min_objects..=self.max_objects);
        let foreground: Vec<u8> = (1..=self.classes as u8).collect();
        let k = rng.gen_range(1..=self.max_classes_per_image.min(n).min(self.classes));
        let palette: Vec<u8> = foreground.choose_multiple(&mut rng, k).copied().collect();
        // Every palette class appears at least once.
        let mut classes: Vec<u8> = palette.clone();
        classes.extend((k..n).map(|_| *palette.choose(&mut rng).expect("nonempty palette")));
        classes.shuffle(&mut rng);

        let mut placed: Vec<[u32; 4]> = Vec::new();
        let mut raster = LabelRaster::background(self.width, self.height)?;
        let mut instances = Vec::new();
        for &c in &classes {
            let mask = (0..MAX_ATTEMPTS)
                .find_map(|_| {
                    let m = self.ellipse(&mut rng)?;
                    let e = m.extent()?;
                    let clear = placed.iter().all(|p| self.separated(p, &e));
                    clear.then_some((m, e))
                })
                .ok_or_else(|| Error::Config(format!("synthetic image {id}: cannot place {n} objects")))?;
            placed.push(mask.1);
            raster.paint(&mask.0, ClassId(c))?;
            instances.push(Instance::new(ClassId(c), mask.0).expect("ellipse is nonempty"));
        }
        Ok(ImageRecord {
            id: id.to_string(),
            width: self.width,
            height: self.height,
            image_path: None,
            gt_raster_path: None,
            gt: Some(GroundTruth { raster, instances }),
        })
    }

    fn ellipse(&self, rng: &mut impl Rng) -> Option<BitMask> {
        let a = rng.gen_range(self.min_radius..=self.max_radius) as f64;
        let b = rng.gen_range(self.min_radius..=self.max_radius) as f64;
        let cx = rng.gen_range(a..=self.width as f64 - a);
        let cy = rng.gen_range(b..=self.height as f64 - b);
        let m = BitMask::from_fn(self.width, self.height, |x, y| {
            let dx = (x as f64 + 0.5 - cx) / a;
            let dy = (y as f64 + 0.5 - cy) / b;
            dx * dx + dy * dy <= 1.0
        })
        .ok()?;
        (!m.is_empty()).then_some(m)
    }

    fn separated(&self, a: &[u32; 4], b: &[u32; 4]) -> bool {
        let g = self.margin;
        a[2] + g <= b[0] || b[2] + g <= a[0] || a[3] + g <= b[1] || b[3] + g <= a[1]
    }
}
