/// Shape-preserving (Fritsch–Carlson / Fritsch–Butland) cubic interpolant.
/// Outside the knot range it continues linearly with the end slopes.
#[derive(Debug, Clone)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    /// `x` strictly increasing, `y` nondecreasing, at least two knots. End slopes
    /// default to the secants of the end intervals.
    pub fn new(x: Vec<f64>, y: Vec<f64>, end_slopes: Option<(f64, f64)>) -> Self {
        let n = x.len();
        assert!(n >= 2 && y.len() == n, "pchip needs matching knot vectors");
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
        let mut d = vec![0.0; n];
        for k in 1..n - 1 {
            let (a, b) = (delta[k - 1], delta[k]);
            if a * b > 0.0 {
                let w1 = 2.0 * h[k] + h[k - 1];
                let w2 = h[k] + 2.0 * h[k - 1];
                d[k] = (w1 + w2) / (w1 / a + w2 / b);
            }
        }
        let (d0, dn) = end_slopes.unwrap_or((delta[0], delta[n - 2]));
        d[0] = d0;
        d[n - 1] = dn;
        Self { x, y, d }
    }

    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.x, &self.y)
    }

    pub fn end_slopes(&self) -> (f64, f64) {
        (self.d[0], self.d[self.d.len() - 1])
    }

    /// Value and first derivative.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let n = self.x.len();
        if t <= self.x[0] {
            return (self.y[0] + self.d[0] * (t - self.x[0]), self.d[0]);
        }
        if t >= self.x[n - 1] {
            return (self.y[n - 1] + self.d[n - 1] * (t - self.x[n - 1]), self.d[n - 1]);
        }
        let k = self.x.partition_point(|&v| v <= t) - 1;
        hermite(
            self.x[k],
            self.x[k + 1] - self.x[k],
            (self.y[k], self.y[k + 1]),
            (self.d[k], self.d[k + 1]),
            t,
        )
    }
}

fn hermite(x0: f64, h: f64, y: (f64, f64), d: (f64, f64), t: f64) -> (f64, f64) {
    let s = (t - x0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    let v = h00 * y.0 + h10 * h * d.0 + h01 * y.1 + h11 * h * d.1;
    let dh00 = (6.0 * s2 - 6.0 * s) / h;
    let dh10 = 3.0 * s2 - 4.0 * s + 1.0;
    let dh01 = (-6.0 * s2 + 6.0 * s) / h;
    let dh11 = 3.0 * s2 - 2.0 * s;
    let dv = dh00 * y.0 + dh10 * d.0 + dh01 * y.1 + dh11 * d.1;
    (v, dv)
}

/// Cubic Hermite interpolation of a positive function on a uniform grid, done in
/// log space with exact derivatives at the nodes. Exponentials are reproduced
/// exactly, which is what the heat-equation solutions in this crate look like.
#[derive(Debug, Clone)]
pub struct LogHermiteGrid {
    start: f64,
    step: f64,
    log_value: Vec<f64>,
    log_slope: Vec<f64>,
}

impl LogHermiteGrid {
    /// Returns `None` when some node value is not strictly positive and finite.
    pub fn new(start: f64, step: f64, values: &[f64], derivatives: &[f64]) -> Option<Self> {
        if values.len() < 2 || values.len() != derivatives.len() {
            return None;
        }
        let mut log_value = Vec::with_capacity(values.len());
        let mut log_slope = Vec::with_capacity(values.len());
        for (&v, &dv) in values.iter().zip(derivatives) {
            if !(v > 0.0 && v.is_finite() && dv.is_finite()) {
                return None;
            }
            log_value.push(v.ln());
            log_slope.push(dv / v);
        }
        Some(Self { start, step, log_value, log_slope })
    }

    pub fn end(&self) -> f64 {
        self.start + self.step * (self.log_value.len() - 1) as f64
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.start && x <= self.end()
    }

    /// Value and derivative; `None` outside the grid.
    pub fn eval(&self, x: f64) -> Option<(f64, f64)> {
        if !self.contains(x) {
            return None;
        }
        let n = self.log_value.len();
        let k = (((x - self.start) / self.step).floor() as usize).min(n - 2);
        let x0 = self.start + k as f64 * self.step;
        let (lv, ls) = hermite(
            x0,
            self.step,
            (self.log_value[k], self.log_value[k + 1]),
            (self.log_slope[k], self.log_slope[k + 1]),
            x,
        );
        let v = lv.exp();
        Some((v, v * ls))
    }
}
