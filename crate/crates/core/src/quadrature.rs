//! Numerical integration on rectangles.
//!
//! The bound integrals use fixed tensor grids (deterministic cost, easy to
//! refine uniformly); the adaptive Simpson rule is the slow accurate
//! reference used for validation.

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn centered(center: [f64; 2], half_x: f64, half_y: f64) -> Self {
        Rect {
            x0: center[0] - half_x,
            x1: center[0] + half_x,
            y0: center[1] - half_y,
            y1: center[1] + half_y,
        }
    }

    pub fn shifted(&self, d: [f64; 2]) -> Self {
        Rect {
            x0: self.x0 + d[0],
            x1: self.x1 + d[0],
            y0: self.y0 + d[1],
            y1: self.y1 + d[1],
        }
    }

    pub fn intersect(&self, other: &Rect) -> Option<Rect> {
        let r = Rect {
            x0: self.x0.max(other.x0),
            x1: self.x1.min(other.x1),
            y0: self.y0.max(other.y0),
            y1: self.y1.min(other.y1),
        };
        (r.x1 > r.x0 && r.y1 > r.y0).then_some(r)
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.x0 && p[0] <= self.x1 && p[1] >= self.y0 && p[1] <= self.y1
    }
}

/// Cell centers of an `n × n` midpoint grid and the common cell area.
pub fn midpoint_grid(r: &Rect, n: usize) -> (Vec<[f64; 2]>, f64) {
    let hx = (r.x1 - r.x0) / n as f64;
    let hy = (r.y1 - r.y0) / n as f64;
    let mut pts = Vec::with_capacity(n * n);
    for i in 0..n {
        let x = r.x0 + (i as f64 + 0.5) * hx;
        for j in 0..n {
            pts.push([x, r.y0 + (j as f64 + 0.5) * hy]);
        }
    }
    (pts, hx * hy)
}

/// Tensor midpoint rule.
pub fn midpoint_2d<F: FnMut([f64; 2]) -> f64>(mut f: F, r: &Rect, n: usize) -> f64 {
    let (pts, w) = midpoint_grid(r, n);
    pts.into_iter().map(&mut f).sum::<f64>() * w
}

fn simpson_step<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
pub fn adaptive_simpson<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> f64 {
    // seed with a few panels so narrow peaks are not missed
    const PANELS: usize = 8;
    let h = (b - a) / PANELS as f64;
    (0..PANELS)
        .map(|k| {
            let (lo, hi) = (a + k as f64 * h, a + (k + 1) as f64 * h);
            let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
            simpson_step(&mut f, lo, hi, fa, fm, fb, whole, tol / PANELS as f64, 40)
        })
        .sum()
}

/// Iterated adaptive Simpson over a rectangle.
pub fn adaptive_simpson_2d<F: FnMut(f64, f64) -> f64>(mut f: F, r: &Rect, tol: f64) -> f64 {
    let width = r.y1 - r.y0;
    adaptive_simpson(
        |x| adaptive_simpson(|y| f(x, y), r.y0, r.y1, tol / width.max(1.0)),
        r.x0,
        r.x1,
        tol,
    )
}
