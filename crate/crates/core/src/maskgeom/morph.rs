use super::BitMask;

/// One dilation step with the 4-neighborhood cross.
pub fn dilate4(m: &BitMask) -> BitMask {
    let (w, h) = m.dims();
    let mut out = m.clone();
    for (x, y) in m.iter_ones() {
        if x > 0 {
            out.set(x - 1, y, true);
        }
        if x + 1 < w {
            out.set(x + 1, y, true);
        }
        if y > 0 {
            out.set(x, y - 1, true);
        }
        if y + 1 < h {
            out.set(x, y + 1, true);
        }
    }
    out
}

/// One erosion step with the 4-neighborhood cross. Pixels outside the image
/// count as unset.
pub fn erode4(m: &BitMask) -> BitMask {
    let (w, h) = m.dims();
    let mut out = m.empty_like();
    for (x, y) in m.iter_ones() {
        let keep = x > 0
            && m.get(x - 1, y)
            && x + 1 < w
            && m.get(x + 1, y)
            && y > 0
            && m.get(x, y - 1)
            && y + 1 < h
            && m.get(x, y + 1);
        if keep {
            out.set(x, y, true);
        }
    }
    out
}

/// `radius` steps of dilation (positive) or erosion (negative).
pub fn morph4(m: &BitMask, radius: i32) -> BitMask {
    let step: fn(&BitMask) -> BitMask = if radius >= 0 { dilate4 } else { erode4 };
    let mut out = m.clone();
    for _ in 0..radius.unsigned_abs() {
        out = step(&out);
    }
    out
}

/// 4-connected components, ordered by their first pixel in row-major order.
pub fn components4(m: &BitMask) -> Vec<BitMask> {
    let (w, h) = m.dims();
    let mut seen = m.empty_like();
    let mut out = Vec::new();
    let mut stack = Vec::new();
    for (sx, sy) in m.iter_ones() {
        if seen.get(sx, sy) {
            continue;
        }
        let mut comp = m.empty_like();
        seen.set(sx, sy, true);
        stack.push((sx, sy));
        while let Some((x, y)) = stack.pop() {
            comp.set(x, y, true);
            let neighbors = [(x.wrapping_sub(1), y), (x + 1, y), (x, y.wrapping_sub(1)), (x, y + 1)];
            for (nx, ny) in neighbors {
                if nx < w && ny < h && m.get(nx, ny) && !seen.get(nx, ny) {
                    seen.set(nx, ny, true);
                    stack.push((nx, ny));
                }
            }
        }
        out.push(comp);
    }
    out
}
