use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::pngio::{read_label_png, write_label_png};
use super::{write_atomic, ClassTable};
use crate::error::{Error, Result};
use crate::maskgeom::{components4, rle_decode, BBox, BitMask, ClassId, LabelRaster, RleMask};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetFormat {
    /// `ImageSets/Segmentation/<split>.txt`, `SegmentationClass/<id>.png`,
    /// optional `SegmentationObject/<id>.png` and `JPEGImages/<id>.jpg`.
    VocLike,
    /// `annotations/instances_<split>.json` in COCO instance format.
    CocoLike,
}

impl FromStr for DatasetFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "voc_like" | "voc" => Ok(DatasetFormat::VocLike),
            "coco_like" | "coco" => Ok(DatasetFormat::CocoLike),
            _ => Err(Error::Config(format!("unknown dataset format {s:?}"))),
        }
    }
}

impl fmt::Display for DatasetFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DatasetFormat::VocLike => "voc_like",
            DatasetFormat::CocoLike => "coco_like",
        })
    }
}

/// One ground-truth object.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub class_id: ClassId,
    pub mask: BitMask,
    /// Tight box of `mask`, score 1.
    pub bbox: BBox,
}

impl Instance {
    /// `None` for an empty mask.
    pub fn new(class_id: ClassId, mask: BitMask) -> Option<Self> {
        let [x0, y0, x1, y1] = mask.extent()?;
        let bbox = BBox::new(x0, y0, x1, y1, class_id, 1.0).expect("extent of a nonempty mask");
        Some(Instance { class_id, mask, bbox })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub raster: LabelRaster,
    pub instances: Vec<Instance>,
}

impl GroundTruth {
    /// Instances recovered as 4-connected components of each class, ordered
    /// by class id and then by first pixel in row-major order.
    pub fn from_semantic(raster: LabelRaster) -> Self {
        let instances = raster
            .classes_present()
            .into_iter()
            .flat_map(|c| {
                components4(&raster.mask_of(c))
                    .into_iter()
                    .filter_map(move |m| Instance::new(c, m))
            })
            .collect();
        GroundTruth { raster, instances }
    }

    /// Instances from an object-index raster (1..=254 instance ids, 0
    /// background, 255 ignored), each labeled with its majority class.
    pub fn from_object_raster(raster: LabelRaster, objects: &LabelRaster) -> Result<Self> {
        if raster.dims() != objects.dims() {
            return Err(Error::DimensionMismatch {
                expected: raster.dims(),
                found: objects.dims(),
            });
        }
        let mut instances = Vec::new();
        for obj in objects.classes_present() {
            let mask = objects.mask_of(obj);
            let mut votes = [0u64; 256];
            for (x, y) in mask.iter_ones() {
                votes[raster.get(x, y).0 as usize] += 1;
            }
            let class = (1..255usize)
                .filter(|&c| votes[c] > 0)
                .max_by_key(|&c| (votes[c], std::cmp::Reverse(c)))
                .ok_or_else(|| Error::Dataset(format!("object {obj} covers no labeled pixel")))?;
            instances.push(Instance::new(ClassId(class as u8), mask).expect("present object is nonempty"));
        }
        Ok(GroundTruth { raster, instances })
    }

    /// Image-level label set.
    pub fn image_labels(&self) -> BTreeSet<ClassId> {
        self.instances.iter().map(|i| i.class_id).collect()
    }

    /// Object-index raster with instance `i` written as `i + 1`.
    pub fn object_raster(&self) -> Result<LabelRaster> {
        let (w, h) = self.raster.dims();
        let mut out = LabelRaster::background(w, h)?;
        if self.instances.len() > 254 {
            return Err(Error::Dataset("more than 254 instances in one image".into()));
        }
        for (i, inst) in self.instances.iter().enumerate() {
            out.paint(&inst.mask, ClassId(i as u8 + 1))?;
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImageRecord {
    pub id: String,
    pub width: u32,
    pub height: u32,
    pub image_path: Option<PathBuf>,
    pub gt_raster_path: Option<PathBuf>,
    pub gt: Option<GroundTruth>,
}

/// Validated, id-sorted set of images.
#[derive(Clone, Debug)]
pub struct DatasetIndex {
    split: String,
    classes: ClassTable,
    images: Vec<ImageRecord>,
    by_id: HashMap<String, usize>,
}

fn check_image_id(id: &str) -> Result<()> {
    let bad = id.is_empty() || id.starts_with('.') || id.contains(['/', '\\', '\0']);
    if bad {
        return Err(Error::Dataset(format!("image id {id:?} is not usable as a file name")));
    }
    Ok(())
}

impl DatasetIndex {
    pub fn new(split: impl Into<String>, classes: ClassTable, mut images: Vec<ImageRecord>) -> Result<Self> {
        images.sort_by(|a, b| a.id.cmp(&b.id));
        let mut by_id = HashMap::new();
        for (i, rec) in images.iter().enumerate() {
            check_image_id(&rec.id)?;
            if by_id.insert(rec.id.clone(), i).is_some() {
                return Err(Error::Dataset(format!("duplicate image id {:?}", rec.id)));
            }
            if rec.width == 0 || rec.height == 0 {
                return Err(Error::Dataset(format!("image {:?} has zero size", rec.id)));
            }
            if let Some(gt) = &rec.gt {
                if gt.raster.dims() != (rec.width, rec.height) {
                    return Err(Error::Dataset(format!(
                        "image {:?}: ground truth is {:?}, declared {}x{}",
                        rec.id,
                        gt.raster.dims(),
                        rec.width,
                        rec.height
                    )));
                }
                for v in gt.raster.values_present() {
                    if v != ClassId::IGNORE.0 && !classes.contains(ClassId(v)) {
                        return Err(Error::InvalidLabel {
                            value: v,
                            context: format!("image {:?} ground truth; not in class table", rec.id),
                        });
                    }
                }
                for inst in &gt.instances {
                    if !inst.class_id.is_foreground() || !classes.contains(inst.class_id) {
                        return Err(Error::InvalidLabel {
                            value: inst.class_id.0,
                            context: format!("image {:?} instance class", rec.id),
                        });
                    }
                }
            }
        }
        Ok(DatasetIndex {
            split: split.into(),
            classes,
            images,
            by_id,
        })
    }

    pub fn split(&self) -> &str {
        &self.split
    }

    pub fn classes(&self) -> &ClassTable {
        &self.classes
    }

    pub fn images(&self) -> &[ImageRecord] {
        &self.images
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.images.iter().map(|r| r.id.as_str())
    }

    pub fn get(&self, id: &str) -> Result<&ImageRecord> {
        self.by_id
            .get(id)
            .map(|&i| &self.images[i])
            .ok_or_else(|| Error::MissingImage(id.to_string()))
    }

    pub fn ground_truth(&self, id: &str) -> Result<&GroundTruth> {
        self.get(id)?
            .gt
            .as_ref()
            .ok_or_else(|| Error::MissingGroundTruth(id.to_string()))
    }
}

pub const CLASSES_FILE: &str = "classes.txt";

fn voc_split_file(root: &Path, split: &str) -> PathBuf {
    root.join("ImageSets").join("Segmentation").join(format!("{split}.txt"))
}

fn coco_annotation_file(root: &Path, split: &str) -> PathBuf {
    root.join("annotations").join(format!("instances_{split}.json"))
}

/// Loads and validates a dataset rooted at `root`.
pub fn load_dataset(root: &Path, format: DatasetFormat, classes: &ClassTable, split: &str) -> Result<DatasetIndex> {
    if !root.is_dir() {
        return Err(Error::io(
            root,
            std::io::Error::new(std::io::ErrorKind::NotFound, "dataset root is not a directory"),
        ));
    }
    match format {
        DatasetFormat::VocLike => load_voc_like(root, classes, split),
        DatasetFormat::CocoLike => load_coco_like(root, classes, split),
    }
}

fn load_voc_like(root: &Path, classes: &ClassTable, split: &str) -> Result<DatasetIndex> {
    let list = voc_split_file(root, split);
    let text = std::fs::read_to_string(&list).map_err(|e| Error::io(&list, e))?;
    let mut images = Vec::new();
    for id in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        check_image_id(id)?;
        let class_path = root.join("SegmentationClass").join(format!("{id}.png"));
        let raster = read_label_png(&class_path)?;
        let object_path = root.join("SegmentationObject").join(format!("{id}.png"));
        let gt = if object_path.is_file() {
            let objects = read_label_png(&object_path)?;
            GroundTruth::from_object_raster(raster, &objects)
                .map_err(|e| Error::Dataset(format!("image {id:?}: {e}")))?
        } else {
            GroundTruth::from_semantic(raster)
        };
        let image_path = root.join("JPEGImages").join(format!("{id}.jpg"));
        images.push(ImageRecord {
            id: id.to_string(),
            width: gt.raster.width(),
            height: gt.raster.height(),
            image_path: image_path.is_file().then_some(image_path),
            gt_raster_path: Some(class_path),
            gt: Some(gt),
        });
    }
    DatasetIndex::new(split, classes.clone(), images)
}

/// Writes `ds` in the voc-like layout, including object rasters so that
/// instances reload exactly.
pub fn write_voc_like(ds: &DatasetIndex, root: &Path) -> Result<()> {
    write_atomic(&root.join(CLASSES_FILE), ds.classes().to_text().as_bytes())?;
    let ids: String = ds.ids().map(|id| format!("{id}\n")).collect();
    write_atomic(&voc_split_file(root, ds.split()), ids.as_bytes())?;
    for rec in ds.images() {
        let gt = rec
            .gt
            .as_ref()
            .ok_or_else(|| Error::MissingGroundTruth(rec.id.clone()))?;
        write_label_png(
            &gt.raster,
            &root.join("SegmentationClass").join(format!("{}.png", rec.id)),
        )?;
        write_label_png(
            &gt.object_raster()?,
            &root.join("SegmentationObject").join(format!("{}.png", rec.id)),
        )?;
    }
    Ok(())
}

#[derive(Deserialize)]
struct CocoFile {
    images: Vec<CocoImage>,
    categories: Vec<CocoCategory>,
    #[serde(default)]
    annotations: Option<Vec<CocoAnnotation>>,
}

#[derive(Deserialize)]
struct CocoImage {
    id: u64,
    #[serde(default)]
    file_name: Option<String>,
    width: u32,
    height: u32,
}

#[derive(Deserialize)]
struct CocoCategory {
    id: u64,
    name: String,
}

#[derive(Deserialize)]
struct CocoAnnotation {
    #[serde(default)]
    id: Option<u64>,
    image_id: u64,
    category_id: u64,
    segmentation: CocoSegmentation,
    #[serde(default)]
    iscrowd: u8,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CocoSegmentation {
    Polygons(Vec<Vec<f64>>),
    Rle { size: [u32; 2], counts: CocoCounts },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CocoCounts {
    Raw(Vec<u32>),
    Compressed(#[allow(dead_code)] String),
}

/// Union of the even-odd fills of each polygon ring, sampling each pixel at
/// its center.
pub fn rasterize_polygons(rings: &[Vec<f64>], width: u32, height: u32) -> Result<BitMask> {
    let mut out = BitMask::new(width, height)?;
    for ring in rings {
        let mut m = out.empty_like();
        if ring.len() < 6 || ring.len() % 2 != 0 {
            return Err(Error::Dataset(format!("polygon with {} coordinates", ring.len())));
        }
        let pts: Vec<(f64, f64)> = ring.chunks(2).map(|p| (p[0], p[1])).collect();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &(_, y) in &pts {
            lo = lo.min(y);
            hi = hi.max(y);
        }
        let y_start = (lo - 0.5).ceil().max(0.0) as u32;
        let y_end = ((hi - 0.5).floor() + 1.0).clamp(0.0, height as f64) as u32;
        for y in y_start..y_end {
            let cy = y as f64 + 0.5;
            let mut xs: Vec<f64> = Vec::new();
            for i in 0..pts.len() {
                let (ax, ay) = pts[i];
                let (bx, by) = pts[(i + 1) % pts.len()];
                if (ay <= cy) != (by <= cy) {
                    xs.push(ax + (cy - ay) * (bx - ax) / (by - ay));
                }
            }
            xs.sort_by(|a, b| a.total_cmp(b));
            for span in xs.chunks(2) {
                let [a, b] = span else { continue };
                let x_start = (a - 0.5).ceil().max(0.0) as u32;
                let x_end = ((b - 0.5).ceil()).clamp(0.0, width as f64) as u32;
                for x in x_start..x_end {
                    let cur = m.get(x, y);
                    m.set(x, y, !cur);
                }
            }
        }
        out.union_with(&m)?;
    }
    Ok(out)
}

fn load_coco_like(root: &Path, classes: &ClassTable, split: &str) -> Result<DatasetIndex> {
    let path = coco_annotation_file(root, split);
    let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let coco: CocoFile =
        serde_json::from_slice(&bytes).map_err(|e| Error::Dataset(format!("{}: {e}", path.display())))?;

    let ids = classes.resolve_all(coco.categories.iter().map(|c| c.name.as_str()))?;
    let category: HashMap<u64, ClassId> = coco.categories.iter().map(|c| c.id).zip(ids).collect();

    struct Pending {
        rec: ImageRecord,
        instances: Vec<Instance>,
        crowd: BitMask,
    }
    let mut pending: Vec<Pending> = Vec::new();
    let mut by_coco_id = HashMap::new();
    for img in &coco.images {
        let id = match &img.file_name {
            Some(f) => Path::new(f)
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or_default()
                .to_string(),
            None => img.id.to_string(),
        };
        let image_path = img.file_name.as_ref().map(|f| root.join("images").join(f));
        by_coco_id.insert(img.id, pending.len());
        pending.push(Pending {
            rec: ImageRecord {
                id,
                width: img.width,
                height: img.height,
                image_path,
                gt_raster_path: None,
                gt: None,
            },
            instances: Vec::new(),
            crowd: BitMask::new(img.width, img.height)
                .map_err(|_| Error::Dataset(format!("image {} has zero size", img.id)))?,
        });
    }

    let has_gt = coco.annotations.is_some();
    for (ai, ann) in coco.annotations.into_iter().flatten().enumerate() {
        let name = format!("annotation {}", ann.id.unwrap_or(ai as u64));
        let &pi = by_coco_id
            .get(&ann.image_id)
            .ok_or_else(|| Error::Dataset(format!("{name}: unknown image id {}", ann.image_id)))?;
        let &class_id = category
            .get(&ann.category_id)
            .ok_or_else(|| Error::Dataset(format!("{name}: unknown category id {}", ann.category_id)))?;
        let p = &mut pending[pi];
        let (w, h) = (p.rec.width, p.rec.height);
        let mask = match ann.segmentation {
            CocoSegmentation::Polygons(rings) => rasterize_polygons(&rings, w, h)?,
            CocoSegmentation::Rle { size, counts } => {
                if size != [h, w] {
                    return Err(Error::Dataset(format!(
                        "{name}: RLE size {size:?} but image is {h}x{w}"
                    )));
                }
                let CocoCounts::Raw(counts) = counts else {
                    return Err(Error::Dataset(format!(
                        "{name}: compressed RLE strings are not supported"
                    )));
                };
                rle_decode(&RleMask::new(w, h, counts).map_err(|e| Error::Dataset(format!("{name}: {e}")))?)?
            }
        };
        if ann.iscrowd != 0 {
            p.crowd.union_with(&mask)?;
        } else if let Some(inst) = Instance::new(class_id, mask) {
            p.instances.push(inst);
        }
    }

    let mut images = Vec::with_capacity(pending.len());
    for p in pending {
        let mut rec = p.rec;
        if has_gt {
            let mut raster = LabelRaster::background(rec.width, rec.height)?;
            for inst in &p.instances {
                raster.paint(&inst.mask, inst.class_id)?;
            }
            raster.paint(&p.crowd, ClassId::IGNORE)?;
            rec.gt = Some(GroundTruth {
                raster,
                instances: p.instances,
            });
        }
        images.push(rec);
    }
    DatasetIndex::new(split, classes.clone(), images)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn semantic_instances_follow_components() {
        let mut r = LabelRaster::background(6, 4).unwrap();
        for (x, y, c) in [(0, 0, 2), (1, 0, 2), (4, 0, 2), (2, 3, 1)] {
            r.set(x, y, ClassId(c));
        }
        let gt = GroundTruth::from_semantic(r);
        let summary: Vec<_> = gt.instances.iter().map(|i| (i.class_id.0, i.bbox.coords())).collect();
        assert_eq!(summary, vec![(1, [2, 3, 3, 4]), (2, [0, 0, 2, 1]), (2, [4, 0, 5, 1])]);
        let objects = gt.object_raster().unwrap();
        let again = GroundTruth::from_object_raster(gt.raster.clone(), &objects).unwrap();
        assert_eq!(again, gt);
    }

    #[test]
    fn polygon_square_covers_pixel_centers() {
        let m = rasterize_polygons(&[vec![1.0, 1.0, 4.0, 1.0, 4.0, 3.0, 1.0, 3.0]], 6, 5).unwrap();
        let on: Vec<_> = m.iter_ones().collect();
        assert_eq!(on, vec![(1, 1), (2, 1), (3, 1), (1, 2), (2, 2), (3, 2)]);
    }

    #[test]
    fn index_rejects_unknown_label_and_duplicates() {
        let classes = ClassTable::from_names(["background", "a", "b"]).unwrap();
        let mut r = LabelRaster::background(2, 2).unwrap();
        r.set(0, 0, ClassId(254));
        let rec = |id: &str, r: LabelRaster| ImageRecord {
            id: id.into(),
            width: 2,
            height: 2,
            image_path: None,
            gt_raster_path: None,
            gt: Some(GroundTruth::from_semantic(r)),
        };
        let err = DatasetIndex::new("t", classes.clone(), vec![rec("x", r)]).unwrap_err();
        assert!(matches!(err, Error::InvalidLabel { value: 254, .. }), "{err}");

        let ok = LabelRaster::background(2, 2).unwrap();
        let err = DatasetIndex::new("t", classes.clone(), vec![rec("x", ok.clone()), rec("x", ok.clone())]);
        assert!(err.is_err());
        assert!(DatasetIndex::new("t", classes, vec![rec("../x", ok)]).is_err());
    }
}
