//! Procedural window models: a framed outline with depth and a glass pane.
//!
//! Coordinates are meters, x across, y up, z into the wall. Frames carry
//! the material `frame`, panes `Glass`.

use crate::cloud::Point;
use crate::error::Result;
use crate::model_ingest::TriangleMesh;

pub const FRAME_MATERIAL: &str = "frame";
pub const GLASS_MATERIAL: &str = "Glass";

const WIDTH: f64 = 1.2;
const HEIGHT: f64 = 1.5;
const FRAME: f64 = 0.08;
const DEPTH: f64 = 0.12;
const BAR: f64 = 0.05;
const ARC_SEGMENTS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowShape {
    Rectangle,
    RectangleWithBars,
    Arched,
    Octagon,
}

impl WindowShape {
    pub const ALL: [WindowShape; 4] = [
        WindowShape::Rectangle,
        WindowShape::RectangleWithBars,
        WindowShape::Arched,
        WindowShape::Octagon,
    ];

    pub fn name(self) -> &'static str {
        match self {
            WindowShape::Rectangle => "rectangle",
            WindowShape::RectangleWithBars => "rectangle_bars",
            WindowShape::Arched => "arched",
            WindowShape::Octagon => "octagon",
        }
    }

    pub fn mesh(self) -> Result<TriangleMesh> {
        let mut b = Builder::default();
        match self {
            WindowShape::Rectangle => {
                let (outer, inner) = rectangle_ring();
                b.ring(&outer, &inner);
                b.pane(&inner);
            }
            WindowShape::RectangleWithBars => {
                let (outer, inner) = rectangle_ring();
                b.ring(&outer, &inner);
                b.pane(&inner);
                let (hw, top) = (WIDTH / 2.0 - FRAME, HEIGHT - FRAME);
                let mid = HEIGHT * 0.6;
                b.bar([-BAR / 2.0, FRAME], [BAR / 2.0, top]);
                b.bar([-hw, mid - BAR / 2.0], [hw, mid + BAR / 2.0]);
            }
            WindowShape::Arched => {
                let (outer, inner) = arched_ring();
                b.ring(&outer, &inner);
                b.pane(&inner);
            }
            WindowShape::Octagon => {
                let (outer, inner) = octagon_ring();
                b.ring(&outer, &inner);
                b.pane(&inner);
            }
        }
        b.finish()
    }
}

type Outline = Vec<[f64; 2]>;

fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Outline {
    vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]]
}

fn rectangle_ring() -> (Outline, Outline) {
    let hw = WIDTH / 2.0;
    (
        rect(-hw, 0.0, hw, HEIGHT),
        rect(-hw + FRAME, FRAME, hw - FRAME, HEIGHT - FRAME),
    )
}

/// Rectangle of height `HEIGHT - WIDTH / 2` topped by a half circle.
fn arched_ring() -> (Outline, Outline) {
    let spring = HEIGHT - WIDTH / 2.0;
    let outline = |r: f64, bottom: f64| {
        let mut pts = vec![[-r, bottom], [r, bottom]];
        for k in 0..=ARC_SEGMENTS {
            let a = std::f64::consts::PI * k as f64 / ARC_SEGMENTS as f64;
            pts.push([r * a.cos(), spring + r * a.sin()]);
        }
        pts
    };
    (
        outline(WIDTH / 2.0, 0.0),
        outline(WIDTH / 2.0 - FRAME, FRAME),
    )
}

fn octagon_ring() -> (Outline, Outline) {
    let step = std::f64::consts::PI / 4.0;
    let outline = |r: f64| -> Outline {
        (0..8)
            .map(|k| {
                let a = step / 2.0 + step * k as f64;
                [r * a.cos(), HEIGHT / 2.0 + r * a.sin()]
            })
            .collect()
    };
    let r = HEIGHT / 2.0;
    // inset the edges by the frame width
    (outline(r), outline(r - FRAME / (step / 2.0).cos()))
}

#[derive(Default)]
struct Builder {
    vertices: Vec<Point>,
    faces: Vec<[usize; 3]>,
    materials: Vec<String>,
}

impl Builder {
    fn vertex(&mut self, p: [f64; 2], z: f64) -> usize {
        self.vertices.push(Point::new(p[0], p[1], z));
        self.vertices.len() - 1
    }

    fn quad(&mut self, a: usize, b: usize, c: usize, d: usize, material: &str) {
        self.faces.push([a, b, c]);
        self.faces.push([a, c, d]);
        self.materials
            .extend([material.to_string(), material.to_string()]);
    }

    /// Frame between two outlines with equal vertex counts: front and back
    /// faces plus outer and inner reveals.
    fn ring(&mut self, outer: &[[f64; 2]], inner: &[[f64; 2]]) {
        debug_assert_eq!(outer.len(), inner.len());
        let n = outer.len();
        let layer = |b: &mut Builder, pts: &[[f64; 2]], z: f64| -> Vec<usize> {
            pts.iter().map(|&p| b.vertex(p, z)).collect()
        };
        let of = layer(self, outer, 0.0);
        let ob = layer(self, outer, DEPTH);
        let inf = layer(self, inner, 0.0);
        let inb = layer(self, inner, DEPTH);
        for i in 0..n {
            let j = (i + 1) % n;
            self.quad(of[i], of[j], inf[j], inf[i], FRAME_MATERIAL);
            self.quad(ob[i], inb[i], inb[j], ob[j], FRAME_MATERIAL);
            self.quad(of[i], ob[i], ob[j], of[j], FRAME_MATERIAL);
            self.quad(inf[i], inf[j], inb[j], inb[i], FRAME_MATERIAL);
        }
    }

    /// Fan-triangulated pane across a convex opening, halfway into the frame.
    fn pane(&mut self, outline: &[[f64; 2]]) {
        let ids: Vec<usize> = outline
            .iter()
            .map(|&p| self.vertex(p, DEPTH / 2.0))
            .collect();
        for k in 1..ids.len() - 1 {
            self.faces.push([ids[0], ids[k], ids[k + 1]]);
            self.materials.push(GLASS_MATERIAL.to_string());
        }
    }

    /// Axis-aligned bar spanning the full frame depth.
    fn bar(&mut self, lo: [f64; 2], hi: [f64; 2]) {
        let corners = rect(lo[0], lo[1], hi[0], hi[1]);
        let front: Vec<usize> = corners.iter().map(|&p| self.vertex(p, 0.0)).collect();
        let back: Vec<usize> = corners.iter().map(|&p| self.vertex(p, DEPTH)).collect();
        self.quad(front[0], front[1], front[2], front[3], FRAME_MATERIAL);
        self.quad(back[0], back[3], back[2], back[1], FRAME_MATERIAL);
        for i in 0..4 {
            let j = (i + 1) % 4;
            self.quad(front[i], back[i], back[j], front[j], FRAME_MATERIAL);
        }
    }

    fn finish(self) -> Result<TriangleMesh> {
        TriangleMesh::new(self.vertices, self.faces, self.materials)
    }
}

/// The four reference windows as (name, mesh).
pub fn window_library() -> Result<Vec<(String, TriangleMesh)>> {
    WindowShape::ALL
        .iter()
        .map(|s| Ok((s.name().to_string(), s.mesh()?)))
        .collect()
}
