//! Brute-force reference implementations and random case generators shared
//! by the property tests and the acceptance run. Everything here counts
//! pixels or enumerates orders directly, without the crate's fast paths.
#![allow(dead_code)]

use boxlabel::backends::Detection;
use boxlabel::{BBox, BitMask, ClassId, Exact};
use rand::Rng;

pub fn random_mask(rng: &mut impl Rng, w: u32, h: u32) -> BitMask {
    let density = rng.gen_range(0.0..=1.0);
    // Some masks are blobs rather than noise.
    if rng.gen_bool(0.3) {
        let (cx, cy) = (rng.gen_range(0..w) as i64, rng.gen_range(0..h) as i64);
        let r = rng.gen_range(1..=w.max(h)) as i64;
        return BitMask::from_fn(w, h, |x, y| {
            let (dx, dy) = (x as i64 - cx, y as i64 - cy);
            dx * dx + dy * dy <= r * r
        })
        .unwrap();
    }
    BitMask::from_fn(w, h, |_, _| rng.gen_bool(density)).unwrap()
}

pub fn random_box(rng: &mut impl Rng, w: u32, h: u32) -> BBox {
    let x0 = rng.gen_range(0..w);
    let y0 = rng.gen_range(0..h);
    let x1 = rng.gen_range(x0 + 1..=w);
    let y1 = rng.gen_range(y0 + 1..=h);
    BBox::new(x0, y0, x1, y1, ClassId(1), 1.0).unwrap()
}

pub fn ratio(n: u64, d: u64) -> Exact {
    Exact::new(n as i128, d as i128)
}

pub fn in_box(b: &BBox, x: u32, y: u32) -> bool {
    x >= b.x0() && x < b.x1() && y >= b.y0() && y < b.y1()
}

/// Pixel cells of a box, enumerated.
pub fn box_cells(b: &BBox) -> Vec<(u32, u32)> {
    (b.y0()..b.y1())
        .flat_map(|y| (b.x0()..b.x1()).map(move |x| (x, y)))
        .collect()
}

pub fn bf_box_counts(a: &BBox, b: &BBox) -> (u64, u64) {
    let ca = box_cells(a);
    let cb = box_cells(b);
    let inter = ca.iter().filter(|&&(x, y)| in_box(b, x, y)).count() as u64;
    (inter, ca.len() as u64 + cb.len() as u64 - inter)
}

pub fn bf_box_iou(a: &BBox, b: &BBox) -> Exact {
    let (i, u) = bf_box_counts(a, b);
    ratio(i, u)
}

fn pixels(m: &BitMask) -> impl Iterator<Item = (u32, u32, bool)> + '_ {
    (0..m.height()).flat_map(move |y| (0..m.width()).map(move |x| (x, y, m.get(x, y))))
}

pub fn bf_mask_iou(a: &BitMask, b: &BitMask) -> Exact {
    let (mut i, mut u) = (0u64, 0u64);
    for (x, y, pa) in pixels(a) {
        let pb = b.get(x, y);
        i += (pa && pb) as u64;
        u += (pa || pb) as u64;
    }
    if u == 0 {
        Exact::new(1, 1)
    } else {
        ratio(i, u)
    }
}

pub fn bf_in_box(m: &BitMask, b: &BBox) -> u64 {
    pixels(m).filter(|&(x, y, p)| p && in_box(b, x, y)).count() as u64
}

pub fn bf_count(m: &BitMask) -> u64 {
    pixels(m).filter(|p| p.2).count() as u64
}

pub fn bf_coverage(m: &BitMask, b: &BBox) -> Exact {
    ratio(bf_in_box(m, b), ((b.x1() - b.x0()) * (b.y1() - b.y0())) as u64)
}

pub fn bf_containment(m: &BitMask, b: &BBox) -> Option<Exact> {
    let n = bf_count(m);
    (n > 0).then(|| ratio(bf_in_box(m, b), n))
}

pub fn bf_clip(m: &BitMask, b: &BBox) -> Vec<bool> {
    pixels(m).map(|(x, y, p)| p && in_box(b, x, y)).collect()
}

pub fn mask_bits(m: &BitMask) -> Vec<bool> {
    pixels(m).map(|p| p.2).collect()
}

/// Column-major run lengths starting with a (possibly empty) zero run.
pub fn bf_rle_counts(m: &BitMask) -> Vec<u32> {
    let mut seq = Vec::new();
    for x in 0..m.width() {
        for y in 0..m.height() {
            seq.push(m.get(x, y));
        }
    }
    let mut counts = vec![0u32];
    let mut current = false;
    for bit in seq {
        if bit != current {
            counts.push(0);
            current = bit;
        }
        *counts.last_mut().unwrap() += 1;
    }
    counts
}

pub fn random_detections(rng: &mut impl Rng, n: usize, w: u32, h: u32, classes: u8) -> Vec<Detection> {
    // Coarse scores make ties common.
    (0..n)
        .map(|id| {
            let b = random_box(rng, w, h);
            let score = rng.gen_range(0..=4) as f64 / 4.0;
            let class = ClassId(rng.gen_range(1..=classes));
            Detection {
                id,
                bbox: BBox::new(b.x0(), b.y0(), b.x1(), b.y1(), class, score).unwrap(),
                label_text: String::new(),
                text_score: score,
            }
        })
        .collect()
}

/// Exhaustive NMS reference: a detection survives when no surviving
/// detection of its class ranked before it overlaps it by more than `thr`.
/// Rank: score descending, area ascending, coordinates, class, id. IoU from
/// enumerated pixel cells.
pub fn nms_reference(dets: &[Detection], thr: f64) -> Vec<Detection> {
    let n = dets.len();
    let before = |a: &Detection, b: &Detection| {
        let ka = (
            std::cmp::Reverse(ordered(a.bbox.score())),
            box_cells(&a.bbox).len(),
            a.bbox.coords(),
            a.bbox.class_id(),
            a.id,
        );
        let kb = (
            std::cmp::Reverse(ordered(b.bbox.score())),
            box_cells(&b.bbox).len(),
            b.bbox.coords(),
            b.bbox.class_id(),
            b.id,
        );
        ka < kb
    };
    // rank[i] = number of detections ranked ahead of i
    let mut order: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in 0..n - 1 - i {
            if before(&dets[order[j + 1]], &dets[order[j]]) {
                order.swap(j, j + 1);
            }
        }
    }
    let mut kept: Vec<usize> = Vec::new();
    for &i in &order {
        let suppressed = kept.iter().any(|&k| {
            let (inter, union) = bf_box_counts(&dets[k].bbox, &dets[i].bbox);
            dets[k].bbox.class_id() == dets[i].bbox.class_id() && inter as f64 / union as f64 > thr
        });
        if !suppressed {
            kept.push(i);
        }
    }
    kept.into_iter().map(|i| dets[i].clone()).collect()
}

fn ordered(x: f64) -> u64 {
    // Scores are in [0,1]; the bit pattern of a non-negative f64 orders like
    // the value.
    x.to_bits()
}

/// AP by explicit precision-recall integration: Σ (R_i − R_{i−1})·P_i.
pub fn bf_average_precision(hits: &[bool], positives: u64) -> Exact {
    if positives == 0 {
        return Exact::new(0, 1);
    }
    let mut ap = Exact::new(0, 1);
    let mut prev_recall = Exact::new(0, 1);
    let mut tp = 0u64;
    for (i, &hit) in hits.iter().enumerate() {
        tp += hit as u64;
        let precision = ratio(tp, i as u64 + 1);
        let recall = ratio(tp, positives);
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    ap
}
