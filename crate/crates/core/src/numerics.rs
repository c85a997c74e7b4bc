//! Small numerical kernels shared by the solvers: bracketed root finding,
//! 2×2 linear solves and monotone cubic (PCHIP) interpolation.

/// Solves `[[a11, a12], [a21, a22]]·x = [b1, b2]` by Cramer's rule.
///
/// Returns `None` when the determinant is zero or not finite relative to the
/// matrix scale.
pub fn solve2(a11: f64, a12: f64, a21: f64, a22: f64, b1: f64, b2: f64) -> Option<(f64, f64)> {
    let det = a11 * a22 - a12 * a21;
    let scale = (a11.abs() + a12.abs()) * (a21.abs() + a22.abs());
    if !det.is_finite() || det == 0.0 || det.abs() <= 1e-300 * scale.max(1e-300) {
        return None;
    }
    Some(((b1 * a22 - a12 * b2) / det, (a11 * b2 - b1 * a21) / det))
}

/// Bisection on a bracket `[a, b]` with `f(a)·f(b) ≤ 0`, continued until the
/// bracket width is below `xtol` or the midpoint no longer moves.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, xtol: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..2000 {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= xtol || m == a || m == b {
            return m;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Illinois-modified regula falsi on a sign-changing bracket. Converges
/// superlinearly like the secant method while keeping the bracket.
pub fn illinois<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, xtol: f64, max_iter: usize) -> f64 {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    let mut side = 0i8;
    for _ in 0..max_iter {
        let x = (a * fb - b * fa) / (fb - fa);
        let x = if x.is_finite() && x > a.min(b) && x < a.max(b) { x } else { 0.5 * (a + b) };
        let fx = f(x);
        if fx == 0.0 {
            return x;
        }
        if (fx < 0.0) == (fb < 0.0) {
            b = x;
            fb = fx;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = x;
            fa = fx;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        if (b - a).abs() <= xtol {
            break;
        }
    }
    if fa.abs() < fb.abs() {
        a
    } else {
        b
    }
}

/// Monotone piecewise cubic Hermite interpolant (Fritsch–Carlson slopes) of a
/// vector-valued sequence on strictly increasing nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Pchip<const N: usize> {
    x: Vec<f64>,
    y: Vec<[f64; N]>,
    d: Vec<[f64; N]>,
}

impl<const N: usize> Pchip<N> {
    /// Builds the interpolant; `x` must be strictly increasing with at least
    /// two nodes.
    pub fn new(x: Vec<f64>, y: Vec<[f64; N]>) -> Self {
        assert!(x.len() >= 2 && x.len() == y.len(), "pchip needs matching node arrays");
        let n = x.len();
        let mut d = vec![[0.0; N]; n];
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        for comp in 0..N {
            let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1][comp] - y[i][comp]) / h[i]).collect();
            if n == 2 {
                d[0][comp] = delta[0];
                d[1][comp] = delta[0];
                continue;
            }
            for i in 1..n - 1 {
                let (a, b) = (delta[i - 1], delta[i]);
                d[i][comp] = if a * b <= 0.0 {
                    0.0
                } else {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    (w1 + w2) / (w1 / a + w2 / b)
                };
            }
            d[0][comp] = end_slope(h[0], h[1], delta[0], delta[1]);
            d[n - 1][comp] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        Self { x, y, d }
    }

    /// Interpolation nodes.
    pub fn nodes(&self) -> &[f64] {
        &self.x
    }

    /// Values at the nodes.
    pub fn values(&self) -> &[[f64; N]] {
        &self.y
    }

    /// Evaluates the interpolant; arguments outside the node range are
    /// clamped to the end values.
    pub fn eval(&self, t: f64) -> [f64; N] {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.y[0];
        }
        if t >= self.x[n - 1] {
            return self.y[n - 1];
        }
        let i = match self.x.binary_search_by(|p| p.partial_cmp(&t).expect("finite nodes")) {
            Ok(i) => return self.y[i],
            Err(i) => i - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        let mut out = [0.0; N];
        for (c, o) in out.iter_mut().enumerate() {
            *o = h00 * self.y[i][c] + h10 * h * self.d[i][c] + h01 * self.y[i + 1][c] + h11 * h * self.d[i + 1][c];
        }
        out
    }
}

fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d * d0 <= 0.0 {
        0.0
    } else if d0 * d1 <= 0.0 && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

/// Base-2 radical inverse of `n` (van der Corput sequence) in `[0, 1)`.
pub fn van_der_corput(mut n: u64) -> f64 {
    let mut q = 0.0;
    let mut bk = 0.5;
    while n > 0 {
        if n & 1 == 1 {
            q += bk;
        }
        n >>= 1;
        bk *= 0.5;
    }
    q
}
