//! Small numerical helpers: Gauss-Legendre panels and monotone cubic
//! (Fritsch-Carlson) interpolation.

/// 5-point Gauss-Legendre nodes and weights on [-1, 1].
const GL_X: [f64; 5] = [
    -0.906179845938664,
    -0.5384693101056831,
    0.0,
    0.5384693101056831,
    0.906179845938664,
];
const GL_W: [f64; 5] = [
    0.23692688505618908,
    0.47862867049936647,
    0.5688888888888889,
    0.47862867049936647,
    0.23692688505618908,
];

/// Integral of `f` over `[a, b]` by one 5-point Gauss-Legendre panel.
pub fn gl_panel(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = 0.0;
    for (x, w) in GL_X.iter().zip(GL_W.iter()) {
        s += w * f(c + h * x);
    }
    s * h
}

/// Composite Gauss-Legendre integral over the panels of `grid`.
pub fn gl_composite(f: &dyn Fn(f64) -> f64, grid: &[f64]) -> f64 {
    grid.windows(2).map(|w| gl_panel(f, w[0], w[1])).sum()
}

/// Monotone cubic interpolant (Fritsch-Carlson). Does not overshoot the
/// data, so non-negative samples interpolate to non-negative values.
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    slope: Vec<f64>,
}

impl MonotoneCubic {
    /// `x` must be strictly increasing with at least two nodes.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        assert_eq!(x.len(), y.len());
        assert!(x.len() >= 2);
        let n = x.len();
        let mut delta = vec![0.0; n - 1];
        for i in 0..n - 1 {
            delta[i] = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
        }
        let mut slope = vec![0.0; n];
        slope[0] = delta[0];
        slope[n - 1] = delta[n - 2];
        for i in 1..n - 1 {
            slope[i] = if delta[i - 1] * delta[i] <= 0.0 {
                0.0
            } else {
                // harmonic mean weighted by interval lengths
                let w1 = 2.0 * (x[i + 1] - x[i]) + (x[i] - x[i - 1]);
                let w2 = (x[i + 1] - x[i]) + 2.0 * (x[i] - x[i - 1]);
                (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i])
            };
        }
        // clamp endpoint slopes (Fritsch-Carlson condition)
        for (i, d) in [(0usize, 0usize), (n - 1, n - 2)] {
            if slope[i] * delta[d] <= 0.0 {
                slope[i] = 0.0;
            } else if slope[i].abs() > 3.0 * delta[d].abs() {
                slope[i] = 3.0 * delta[d];
            }
        }
        MonotoneCubic { x, y, slope }
    }

    pub fn eval(&self, xq: f64) -> f64 {
        let n = self.x.len();
        if xq <= self.x[0] {
            return self.y[0];
        }
        if xq >= self.x[n - 1] {
            return self.y[n - 1];
        }
        let i = self.x.partition_point(|&v| v <= xq).saturating_sub(1);
        let h = self.x[i + 1] - self.x[i];
        let t = (xq - self.x[i]) / h;
        let (y0, y1) = (self.y[i], self.y[i + 1]);
        let (m0, m1) = (self.slope[i] * h, self.slope[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        y0 * (2.0 * t3 - 3.0 * t2 + 1.0)
            + m0 * (t3 - 2.0 * t2 + t)
            + y1 * (-2.0 * t3 + 3.0 * t2)
            + m1 * (t3 - t2)
    }
}
