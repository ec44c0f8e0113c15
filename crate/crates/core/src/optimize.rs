//! Scalar maximization: coarse grid scan followed by golden-section
//! refinement of the best bracket.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Maximizes `f` on `[lo, hi]`. A `coarse`-point grid picks the bracket
/// around the best node, golden-section search narrows it to `tol`. Returns
/// the best `(t, f(t))` seen, so the result is never worse than the grid.
pub fn maximize_scalar<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, coarse: usize, tol: f64) -> (f64, f64) {
    let coarse = coarse.max(3);
    let h = (hi - lo) / (coarse - 1) as f64;
    let grid: Vec<(f64, f64)> = (0..coarse)
        .map(|i| {
            let t = lo + i as f64 * h;
            (t, f(t))
        })
        .collect();
    let (best_i, &(mut best_t, mut best_f)) = grid
        .iter()
        .enumerate()
        .fold(None, |acc: Option<(usize, &(f64, f64))>, (i, g)| match acc {
            Some((_, b)) if b.1 >= g.1 => acc,
            _ => Some((i, g)),
        })
        .expect("non-empty grid");
    // flat zero objective: nothing to refine
    if best_f == 0.0 {
        return (best_t, best_f);
    }
    let mut a = grid[best_i.saturating_sub(1)].0;
    let mut b = grid[(best_i + 1).min(coarse - 1)].0;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    for (t, v) in [(c, fc), (d, fd)] {
        if v > best_f {
            best_t = t;
            best_f = v;
        }
    }
    (best_t, best_f)
}
