use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde_json::{Map, Value};

use super::{ApSummary, ClassCounts, Confusion};
use crate::dataio::ClassTable;
use crate::error::{Error, Result};
use crate::maskgeom::ClassId;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport<T: Scalar = f64> {
    /// Classes with a nonempty union only.
    pub per_class_iou: BTreeMap<ClassId, T>,
    pub miou: T,
    pub per_class_ap: BTreeMap<ClassId, T>,
    pub map: Option<T>,
    pub confusion: BTreeMap<ClassId, ClassCounts>,
    pub config_fingerprint: String,
    pub image_count: usize,
}

impl<T: Scalar> EvalReport<T> {
    pub fn from_confusion(acc: &Confusion, image_count: usize) -> Result<Self> {
        let miou = acc
            .miou::<T>()
            .ok_or_else(|| Error::Config("no evaluated pixels: every ground-truth pixel is ignore".into()))?;
        Ok(EvalReport {
            per_class_iou: acc.per_class_iou(),
            miou,
            per_class_ap: BTreeMap::new(),
            map: None,
            confusion: acc.counts(),
            config_fingerprint: String::new(),
            image_count,
        })
    }

    pub fn with_ap(mut self, ap: ApSummary<T>) -> Self {
        self.per_class_ap = ap.per_class;
        self.map = ap.map;
        self
    }

    pub fn with_fingerprint(mut self, fingerprint: impl Into<String>) -> Self {
        self.config_fingerprint = fingerprint.into();
        self
    }

    pub fn to_json_value(&self) -> Value {
        let reals = |m: &BTreeMap<ClassId, T>| {
            Value::Object(m.iter().map(|(c, v)| (c.0.to_string(), real(v.to_f64()))).collect())
        };
        let confusion = self
            .confusion
            .iter()
            .map(|(c, k)| (c.0.to_string(), serde_json::to_value(k).expect("plain counts")))
            .collect::<Map<_, _>>();
        let mut o = Map::new();
        o.insert("per_class_iou".into(), reals(&self.per_class_iou));
        o.insert("miou".into(), real(self.miou.to_f64()));
        o.insert("per_class_ap".into(), reals(&self.per_class_ap));
        o.insert("map".into(), self.map.map_or(Value::Null, |m| real(m.to_f64())));
        o.insert("confusion".into(), Value::Object(confusion));
        o.insert("config_fingerprint".into(), self.config_fingerprint.clone().into());
        o.insert("image_count".into(), self.image_count.into());
        Value::Object(o)
    }

    /// Sorted keys, reals rounded to 9 significant digits, trailing newline.
    pub fn to_canonical_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json_value()).expect("json values serialize");
        s.push('\n');
        s
    }

    /// Plain-text table of per-class IoU, named through `classes` when given.
    pub fn render_table(&self, classes: Option<&ClassTable>) -> String {
        let name = |c: ClassId| {
            classes
                .and_then(|t| t.name(c))
                .map(str::to_string)
                .unwrap_or_else(|| c.0.to_string())
        };
        let mut out = String::new();
        let _ = writeln!(out, "{:>4}  {:<16} {:>8}  {:>8}", "id", "class", "IoU", "AP");
        let ids: std::collections::BTreeSet<ClassId> = self
            .per_class_iou
            .keys()
            .chain(self.per_class_ap.keys())
            .copied()
            .collect();
        for c in ids {
            let cell = |v: Option<&T>| v.map_or("-".to_string(), |v| format!("{:.4}", v.to_f64()));
            let _ = writeln!(
                out,
                "{:>4}  {:<16} {:>8}  {:>8}",
                c.0,
                name(c),
                cell(self.per_class_iou.get(&c)),
                cell(self.per_class_ap.get(&c))
            );
        }
        let _ = writeln!(out, "mIoU {:.4} over {} images", self.miou.to_f64(), self.image_count);
        if let Some(m) = self.map {
            let _ = writeln!(out, "mAP  {:.4}", m.to_f64());
        }
        out
    }
}

/// Rounds to 9 significant digits.
pub fn round_sig9(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

fn real(x: f64) -> Value {
    serde_json::Number::from_f64(round_sig9(x)).map_or(Value::Null, Value::Number)
}
