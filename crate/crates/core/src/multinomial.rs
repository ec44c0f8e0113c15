//! Sums over multinomial count vectors of three outcomes.
//!
//! For `N` independent probes the outcome string enters any symmetric
//! functional only through its counts `(n₀, n₁, n₂)`, so sums over the `3^N`
//! strings collapse onto `(N+1)(N+2)/2` count vectors. The routines here walk
//! that triangle in log space and stop as soon as the remaining terms are
//! provably below a floor: the log of each term is concave in the counts, so
//! a walk away from the peak that drops below the floor never comes back.

/// Stand-in for `ln 0` that keeps `0·ln 0 = 0` free of NaNs.
const LN_ZERO: f64 = -1e300;

#[inline]
fn safe_ln(p: f64) -> f64 {
    if p > 0.0 {
        p.ln()
    } else {
        LN_ZERO
    }
}

/// Log-factorial table for a fixed probe count.
#[derive(Debug, Clone)]
pub struct MultinomialTable {
    n: usize,
    lgf: Vec<f64>,
    inv: Vec<f64>,
}

impl MultinomialTable {
    pub fn new(n: usize) -> Self {
        let mut lgf = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        lgf.push(0.0);
        for k in 1..=n {
            acc += (k as f64).ln();
            lgf.push(acc);
        }
        let inv = (0..=n).map(|k| if k == 0 { 0.0 } else { 1.0 / k as f64 }).collect();
        MultinomialTable { n, lgf, inv }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `ln` of the multinomial coefficient `N!/(n₀! n₁! n₂!)`.
    #[inline]
    pub fn ln_coefficient(&self, n0: usize, n1: usize, n2: usize) -> f64 {
        self.lgf[self.n] - self.lgf[n0] - self.lgf[n1] - self.lgf[n2]
    }

    /// `Σ_counts min(e^{la}·M(n; p0), e^{lb}·M(n; p1))`, where `M` is the
    /// multinomial pmf. Terms whose log falls below `log_floor` are dropped.
    pub fn min_sum(&self, la: f64, p0: &[f64; 3], lb: f64, p1: &[f64; 3], log_floor: f64) -> f64 {
        let n = self.n;
        // Bhattacharyya: Σ min(aM₀, bM₁) ≤ √(ab)·(Σ√(p₀p₁))^N
        let bc: f64 = (0..3).map(|x| (p0[x] * p1[x]).sqrt()).sum();
        let slack = 2.0 * ((n + 1) as f64).ln();
        if 0.5 * (la + lb) + n as f64 * safe_ln(bc) < log_floor - slack {
            return 0.0;
        }
        let q0 = p0.map(safe_ln);
        let q1 = p1.map(safe_ln);
        let base0 = la + self.lgf[n];
        let base1 = lb + self.lgf[n];
        let lgf = &self.lgf;
        let pair = |n0: usize, n1: usize| -> (f64, f64) {
            let n2 = n - n0 - n1;
            let (f0, f1, f2) = (n0 as f64, n1 as f64, n2 as f64);
            let c = lgf[n0] + lgf[n1] + lgf[n2];
            (
                base0 + f0 * q0[0] + f1 * q0[1] + f2 * q0[2] - c,
                base1 + f0 * q1[0] + f1 * q1[1] + f2 * q1[2] - c,
            )
        };
        let term = |n0: usize, n1: usize| {
            let (l0, l1) = pair(n0, n1);
            l0.min(l1)
        };
        // along a row both pmfs obey T(n₁+1) = T(n₁)·n₂/(n₁+1)·p₁/p₂, which
        // replaces an exp per term by a few multiplications
        let fast = p0[1] > 0.0 && p0[2] > 0.0 && p1[1] > 0.0 && p1[2] > 0.0;
        let row = |n0: usize, hint: usize| -> (f64, usize, f64) {
            let r = n - n0;
            let (peak, k) = row_peak(&term, n0, r, hint);
            if peak < log_floor {
                return (peak, k, 0.0);
            }
            let sum = if fast {
                let ratio = [p0[1] / p0[2], p1[1] / p1[2]];
                let (l0, l1) = pair(n0, k);
                self.row_walk(r, k, [l0.exp(), l1.exp()], ratio, log_floor.exp())
            } else {
                row_walk_log(&term, n0, r, k, log_floor)
            };
            (peak, k, sum)
        };

        let mut total = 0.0;
        let start = ((0.5 * (p0[0] + p1[0]) * n as f64).round() as usize).min(n);
        let first_hint = ((0.5 * (p0[1] + p1[1]) * n as f64).round() as usize).min(n - start);

        let mut hint = first_hint;
        let mut prev = f64::NEG_INFINITY;
        for n0 in start..=n {
            let (peak, argmax, sum) = row(n0, hint);
            total += sum;
            hint = argmax;
            if peak < log_floor && peak <= prev && n0 > start {
                break;
            }
            prev = peak;
        }
        let mut prev = f64::NEG_INFINITY;
        hint = first_hint;
        for n0 in (0..start).rev() {
            let (peak, argmax, sum) = row(n0, hint);
            total += sum;
            hint = argmax;
            if peak < log_floor && peak <= prev {
                break;
            }
            prev = peak;
        }
        total
    }

    /// Sums `min(T₀, T₁)` outward from the row peak `k` using the
    /// multiplicative recurrence of the two pmfs along the row.
    #[inline]
    fn row_walk(&self, r: usize, k: usize, at_peak: [f64; 2], ratio: [f64; 2], floor: f64) -> f64 {
        let inv = &self.inv;
        let mut sum = at_peak[0].min(at_peak[1]);
        let [mut t0, mut t1] = at_peak;
        for j in k..r {
            // (n₁, n₂) = (j, r−j) → (j+1, r−j−1)
            let step = (r - j) as f64 * inv[j + 1];
            t0 *= step * ratio[0];
            t1 *= step * ratio[1];
            let t = t0.min(t1);
            if t < floor {
                break;
            }
            sum += t;
        }
        let [mut t0, mut t1] = at_peak;
        for j in (1..=k).rev() {
            // (j, r−j) → (j−1, r−j+1)
            let step = j as f64 * inv[r - j + 1];
            t0 *= step / ratio[0];
            t1 *= step / ratio[1];
            let t = t0.min(t1);
            if t < floor {
                break;
            }
            sum += t;
        }
        sum
    }

    /// Same sum by visiting every count vector; reference for `min_sum`.
    pub fn min_sum_exhaustive(&self, la: f64, p0: &[f64; 3], lb: f64, p1: &[f64; 3]) -> f64 {
        let n = self.n;
        let q0 = p0.map(safe_ln);
        let q1 = p1.map(safe_ln);
        let mut total = 0.0;
        for n0 in 0..=n {
            for n1 in 0..=(n - n0) {
                let n2 = n - n0 - n1;
                let c = self.ln_coefficient(n0, n1, n2);
                let f = [n0 as f64, n1 as f64, n2 as f64];
                let l0 = la + c + f[0] * q0[0] + f[1] * q0[1] + f[2] * q0[2];
                let l1 = lb + c + f[0] * q1[0] + f[1] * q1[1] + f[2] * q1[2];
                total += l0.min(l1).exp();
            }
        }
        total
    }

    /// `Σ_strings (a·P₀(x) − b·P₁(x))²` over all `3^N` outcome strings,
    /// collapsed onto count vectors.
    pub fn squared_difference_sum(&self, a: f64, p0: &[f64; 3], b: f64, p1: &[f64; 3]) -> f64 {
        let n = self.n;
        let q0 = p0.map(safe_ln);
        let q1 = p1.map(safe_ln);
        let mut total = 0.0;
        for n0 in 0..=n {
            for n1 in 0..=(n - n0) {
                let n2 = n - n0 - n1;
                let f = [n0 as f64, n1 as f64, n2 as f64];
                let s0 = (f[0] * q0[0] + f[1] * q0[1] + f[2] * q0[2]).exp();
                let s1 = (f[0] * q1[0] + f[1] * q1[1] + f[2] * q1[2]).exp();
                let d = a * s0 - b * s1;
                total += self.ln_coefficient(n0, n1, n2).exp() * d * d;
            }
        }
        total
    }
}

/// Climbs from `hint` to the maximum of a log-concave row (fixed `n₀`,
/// `n₁ ∈ [0, r]`). Returns `(peak log value, argmax)`.
#[inline]
fn row_peak<T: Fn(usize, usize) -> f64>(term: &T, n0: usize, r: usize, hint: usize) -> (f64, usize) {
    let start = hint.min(r);
    let mut k = start;
    let mut best = term(n0, k);
    while k < r {
        let next = term(n0, k + 1);
        if next > best {
            best = next;
            k += 1;
        } else {
            break;
        }
    }
    if k == start {
        while k > 0 {
            let next = term(n0, k - 1);
            if next > best {
                best = next;
                k -= 1;
            } else {
                break;
            }
        }
    }
    (best, k)
}

/// Log-space row sum outward from the peak `k`; used when a probability is
/// zero and the recurrence is undefined.
fn row_walk_log<T: Fn(usize, usize) -> f64>(term: &T, n0: usize, r: usize, k: usize, log_floor: f64) -> f64 {
    let mut sum = term(n0, k).exp();
    for j in (k + 1)..=r {
        let l = term(n0, j);
        if l < log_floor {
            break;
        }
        sum += l.exp();
    }
    for j in (0..k).rev() {
        let l = term(n0, j);
        if l < log_floor {
            break;
        }
        sum += l.exp();
    }
    sum
}
