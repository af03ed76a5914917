//! Contour tracing, Douglas-Peucker simplification and re-rasterization.

use super::BinaryImage;

pub type Pixel = (i64, i64);

/// Clockwise 8-neighbourhood in image coordinates (y grows downward),
/// starting east.
const DIRS: [Pixel; 8] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
];

fn dir_index(from: Pixel, to: Pixel) -> usize {
    let d = (to.0 - from.0, to.1 - from.1);
    DIRS.iter()
        .position(|&x| x == d)
        .expect("pixels are 8-adjacent")
}

fn is_border(img: &BinaryImage, (x, y): Pixel) -> bool {
    img.get_signed(x, y)
        && [(-1, 0), (0, -1), (1, 0), (0, 1)]
            .iter()
            .any(|(dx, dy)| !img.get_signed(x + dx, y + dy))
}

/// Traces every 8-connected border of the set pixels (outer boundaries and
/// hole boundaries) with Moore-neighbour tracing. Each contour is a closed
/// pixel chain, successive entries 8-adjacent, start not repeated at the end.
pub fn trace_contours(img: &BinaryImage) -> Vec<Vec<Pixel>> {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let mut visited = vec![false; img.pixels().len()];
    let mut contours = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if visited[(y * w + x) as usize] || !is_border(img, (x, y)) {
                continue;
            }
            let back = [(-1, 0), (0, -1), (1, 0), (0, 1)]
                .iter()
                .map(|(dx, dy)| (x + dx, y + dy))
                .find(|&(bx, by)| !img.get_signed(bx, by))
                .expect("border pixel has a background neighbour");
            let contour = trace_from(img, (x, y), back);
            for &(cx, cy) in &contour {
                visited[(cy * w + cx) as usize] = true;
            }
            contours.push(contour);
        }
    }
    contours
}

/// Next contour pixel after `p`, scanning clockwise from the background
/// pixel `back`. Returns the new pixel and its new backtrack.
fn moore_step(img: &BinaryImage, p: Pixel, back: Pixel) -> Option<(Pixel, Pixel)> {
    let start = dir_index(p, back);
    let mut prev = back;
    for k in 1..=8 {
        let d = DIRS[(start + k) % 8];
        let q = (p.0 + d.0, p.1 + d.1);
        if img.get_signed(q.0, q.1) {
            return Some((q, prev));
        }
        prev = q;
    }
    None
}

fn trace_from(img: &BinaryImage, start: Pixel, back: Pixel) -> Vec<Pixel> {
    let mut contour = vec![start];
    let Some((first, mut b)) = moore_step(img, start, back) else {
        return contour; // isolated pixel
    };
    let mut p = first;
    let limit = 4 * img.pixels().len() + 16;
    for _ in 0..limit {
        let (next, nb) = moore_step(img, p, b).expect("p has at least one set neighbour");
        if p == start && next == first {
            break;
        }
        contour.push(p);
        p = next;
        b = nb;
    }
    contour
}

fn segment_distance(p: Pixel, a: Pixel, b: Pixel) -> f64 {
    let (px, py) = (p.0 as f64, p.1 as f64);
    let (ax, ay) = (a.0 as f64, a.1 as f64);
    let (dx, dy) = (b.0 as f64 - ax, b.1 as f64 - ay);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((px - ax) * dx + (py - ay) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    ((px - ax - t * dx).powi(2) + (py - ay - t * dy).powi(2)).sqrt()
}

/// Douglas-Peucker on an open polyline. Returns the kept indices in order;
/// both endpoints are always kept. Deviation is measured to the segment,
/// so every dropped point lies within `epsilon` of the simplified line.
pub fn douglas_peucker(points: &[Pixel], epsilon: f64) -> Vec<usize> {
    if points.len() <= 2 {
        return (0..points.len()).collect();
    }
    let mut keep = vec![false; points.len()];
    keep[0] = true;
    keep[points.len() - 1] = true;
    let mut stack = vec![(0usize, points.len() - 1)];
    while let Some((lo, hi)) = stack.pop() {
        if hi <= lo + 1 {
            continue;
        }
        let (mut best, mut best_d) = (lo, -1.0);
        for i in lo + 1..hi {
            let d = segment_distance(points[i], points[lo], points[hi]);
            if d > best_d {
                best = i;
                best_d = d;
            }
        }
        if best_d > epsilon {
            keep[best] = true;
            stack.push((lo, best));
            stack.push((best, hi));
        }
    }
    (0..points.len()).filter(|&i| keep[i]).collect()
}

/// Douglas-Peucker on a closed chain: split at the first point and the point
/// farthest from it, simplify both halves.
pub fn douglas_peucker_closed(points: &[Pixel], epsilon: f64) -> Vec<usize> {
    let n = points.len();
    if n <= 3 {
        return (0..n).collect();
    }
    let far = (1..n)
        .max_by(|&a, &b| {
            let da = segment_distance(points[a], points[0], points[0]);
            let db = segment_distance(points[b], points[0], points[0]);
            da.total_cmp(&db).then(b.cmp(&a))
        })
        .expect("n > 3");
    let first: Vec<usize> = douglas_peucker(&points[..=far], epsilon);
    let mut wrap: Vec<Pixel> = points[far..].to_vec();
    wrap.push(points[0]);
    let second = douglas_peucker(&wrap, epsilon);
    let mut out = first;
    out.extend(
        second
            .into_iter()
            .map(|i| far + i)
            .filter(|&i| i > far && i < n),
    );
    out
}

/// Bresenham line between two pixels, inclusive.
pub fn line_pixels(a: Pixel, b: Pixel) -> Vec<Pixel> {
    let (mut x, mut y) = a;
    let dx = (b.0 - a.0).abs();
    let dy = -(b.1 - a.1).abs();
    let (sx, sy) = ((b.0 - a.0).signum(), (b.1 - a.1).signum());
    let mut err = dx + dy;
    let mut out = Vec::with_capacity((dx - dy + 1) as usize);
    loop {
        out.push((x, y));
        if (x, y) == b {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
    out
}

/// Simplified closed polylines (vertex lists) for every contour of `img`.
pub fn simplified_polylines(img: &BinaryImage, epsilon: f64) -> Vec<Vec<Pixel>> {
    trace_contours(img)
        .into_iter()
        .map(|c| {
            douglas_peucker_closed(&c, epsilon)
                .into_iter()
                .map(|i| c[i])
                .collect()
        })
        .collect()
}

/// Traces contours, simplifies each with Douglas-Peucker and draws the
/// resulting closed polylines.
pub fn simplify_contours(img: &BinaryImage, epsilon: f64) -> BinaryImage {
    let mut out = BinaryImage::new(img.width(), img.height());
    out.pixel_size = img.pixel_size;
    for poly in simplified_polylines(img, epsilon) {
        for k in 0..poly.len() {
            let a = poly[k];
            let b = poly[(k + 1) % poly.len()];
            for (x, y) in line_pixels(a, b) {
                out.set(x as usize, y as usize, true);
            }
        }
    }
    out
}
