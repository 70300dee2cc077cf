//! Interpolation of sampled data.
//!
//! Two interpolants with different contracts:
//!
//! * [`Pchip`], shape-preserving (Fritsch-Carlson) monotone cubic. Tabulated
//!   equilibria go through this one because the load-bearing quantity
//!   downstream is the *count* of critical points: an overshooting spline
//!   can invent sign changes of f0' that the data does not support. Accuracy
//!   O(h^3).
//! * [`CubicSpline`], C^2 natural cubic. Used for generic sampled functions
//!   (transform intermediates, evolved states) where smooth-data accuracy
//!   O(h^4) matters and monotonicity does not.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Endpoint-clamped Fritsch-Carlson slopes at the nodes.
    d: Vec<f64>,
}

impl Pchip {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::InvalidInput(format!(
                "grid/value length mismatch: {} vs {}",
                x.len(),
                y.len()
            )));
        }
        if x.len() < 2 {
            return Err(Error::InvalidInput("need at least 2 points".into()));
        }
        if x.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidInput("grid not strictly increasing".into()));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite sample value".into()));
        }
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut d = vec![0.0; n];
        for i in 1..n - 1 {
            if delta[i - 1] * delta[i] > 0.0 {
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
        d[0] = edge_slope(h[0], h.get(1).copied().unwrap_or(h[0]), delta[0], *delta.get(1).unwrap_or(&delta[0]));
        d[n - 1] = edge_slope(
            h[n - 2],
            if n >= 3 { h[n - 3] } else { h[n - 2] },
            delta[n - 2],
            if n >= 3 { delta[n - 3] } else { delta[n - 2] },
        );
        Ok(Self { x, y, d })
    }

    pub fn grid(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    fn cell(&self, p: f64) -> usize {
        match self
            .x
            .binary_search_by(|v| v.partial_cmp(&p).unwrap())
        {
            Ok(i) => i.min(self.x.len() - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(self.x.len() - 2),
        }
    }

    /// Hermite evaluation; constant extrapolation of the edge value outside.
    pub fn eval(&self, p: f64) -> f64 {
        self.eval_order(p, 0)
    }

    pub fn deriv(&self, p: f64) -> f64 {
        self.eval_order(p, 1)
    }

    pub fn deriv2(&self, p: f64) -> f64 {
        self.eval_order(p, 2)
    }

    fn eval_order(&self, p: f64, order: u8) -> f64 {
        let n = self.x.len();
        if p <= self.x[0] {
            return match order {
                0 => self.y[0],
                _ => 0.0,
            };
        }
        if p >= self.x[n - 1] {
            return match order {
                0 => self.y[n - 1],
                _ => 0.0,
            };
        }
        let i = self.cell(p);
        let h = self.x[i + 1] - self.x[i];
        let t = (p - self.x[i]) / h;
        let (y0, y1, d0, d1) = (self.y[i], self.y[i + 1], self.d[i], self.d[i + 1]);
        match order {
            0 => {
                let h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
                let h10 = t * (1.0 - t) * (1.0 - t);
                let h01 = t * t * (3.0 - 2.0 * t);
                let h11 = t * t * (t - 1.0);
                h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
            }
            1 => {
                let g00 = 6.0 * t * (t - 1.0);
                let g10 = (1.0 - t) * (1.0 - 3.0 * t);
                let g01 = -g00;
                let g11 = t * (3.0 * t - 2.0);
                (g00 * y0 + g01 * y1) / h + g10 * d0 + g11 * d1
            }
            _ => {
                let k00 = 12.0 * t - 6.0;
                let k10 = 6.0 * t - 4.0;
                let k01 = -k00;
                let k11 = 6.0 * t - 2.0;
                (k00 * y0 + k01 * y1) / (h * h) + (k10 * d0 + k11 * d1) / h
            }
        }
    }
}

/// C^2 natural cubic spline (second derivative zero at the ends).
#[derive(Debug, Clone)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Second derivatives at the nodes.
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::InvalidInput(format!(
                "grid/value length mismatch: {} vs {}",
                x.len(),
                y.len()
            )));
        }
        if x.len() < 3 {
            return Err(Error::InvalidInput("need at least 3 points".into()));
        }
        if x.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidInput("grid not strictly increasing".into()));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite sample value".into()));
        }
        let n = x.len();
        // Thomas solve of the tridiagonal system for the second derivatives.
        let mut m = vec![0.0; n];
        let mut c_prime = vec![0.0; n];
        let mut d_prime = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = x[i] - x[i - 1];
            let h1 = x[i + 1] - x[i];
            let a = h0 / 6.0;
            let b = (h0 + h1) / 3.0;
            let c = h1 / 6.0;
            let rhs = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
            let denom = b - a * c_prime[i - 1];
            c_prime[i] = c / denom;
            d_prime[i] = (rhs - a * d_prime[i - 1]) / denom;
        }
        for i in (1..n - 1).rev() {
            m[i] = d_prime[i] - c_prime[i] * m[i + 1];
        }
        Ok(Self { x, y, m })
    }

    pub fn grid(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    fn cell(&self, p: f64) -> usize {
        match self.x.binary_search_by(|v| v.partial_cmp(&p).unwrap()) {
            Ok(i) => i.min(self.x.len() - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(self.x.len() - 2),
        }
    }

    pub fn eval(&self, p: f64) -> f64 {
        let n = self.x.len();
        if p <= self.x[0] {
            return self.y[0];
        }
        if p >= self.x[n - 1] {
            return self.y[n - 1];
        }
        let i = self.cell(p);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - p) / h;
        let b = (p - self.x[i]) / h;
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }

    pub fn deriv(&self, p: f64) -> f64 {
        let n = self.x.len();
        if p <= self.x[0] || p >= self.x[n - 1] {
            return 0.0;
        }
        let i = self.cell(p);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - p) / h;
        let b = (p - self.x[i]) / h;
        (self.y[i + 1] - self.y[i]) / h
            + ((3.0 * b * b - 1.0) * self.m[i + 1] - (3.0 * a * a - 1.0) * self.m[i]) * h / 6.0
    }
}

/// One-sided three-point endpoint slope with the Fritsch-Carlson clamps.
fn edge_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let mut s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if s * d0 <= 0.0 {
        s = 0.0;
    } else if d0 * d1 < 0.0 && s.abs() > 3.0 * d0.abs() {
        s = 3.0 * d0;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, a: f64, b: f64) -> Vec<f64> {
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn reproduces_smooth_function() {
        let x = grid(200, -4.0, 4.0);
        let y: Vec<f64> = x.iter().map(|&p| (-p * p).exp()).collect();
        let s = Pchip::new(x, y).unwrap();
        // Fritsch-Carlson slopes are O(h^2) accurate, values O(h^3); the
        // shape-preservation guarantee costs one order versus free splines.
        for &p in &[-3.3, -1.5, -0.2, 0.0, 0.7, 2.9] {
            assert!((s.eval(p) - (-p * p).exp()).abs() < 5e-4, "at {p}");
            assert!((s.deriv(p) + 2.0 * p * (-p * p).exp()).abs() < 5e-3, "deriv at {p}");
        }
    }

    #[test]
    fn monotone_data_stays_monotone() {
        // Step-like data: a classic overshoot trap for natural cubic splines.
        let x: Vec<f64> = (0..11).map(|i| i as f64).collect();
        let y = vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.5, 1.0, 1.0, 1.0, 1.0, 1.0];
        let s = Pchip::new(x, y).unwrap();
        let mut prev = -1.0;
        for i in 0..=1000 {
            let p = 10.0 * i as f64 / 1000.0;
            let v = s.eval(p);
            assert!(v >= prev - 1e-12, "overshoot at {p}");
            assert!((-1e-12..=1.0 + 1e-12).contains(&v));
            prev = v;
        }
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Pchip::new(vec![0.0, 0.0, 1.0], vec![1.0, 2.0, 3.0]).is_err());
        assert!(Pchip::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(Pchip::new(vec![0.0, 1.0], vec![1.0, f64::NAN]).is_err());
        assert!(CubicSpline::new(vec![0.0, 0.0, 1.0], vec![1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn spline_fourth_order_on_smooth_data() {
        let x = grid(400, -4.0, 4.0);
        let y: Vec<f64> = x.iter().map(|&p| (-p * p).exp()).collect();
        let s = CubicSpline::new(x, y).unwrap();
        for &p in &[-2.1, -0.6, 0.0, 0.33, 1.9] {
            assert!((s.eval(p) - (-p * p).exp()).abs() < 2e-8, "at {p}");
            assert!(
                (s.deriv(p) + 2.0 * p * (-p * p).exp()).abs() < 2e-6,
                "deriv at {p}"
            );
        }
    }

    #[test]
    fn spline_interpolates_nodes() {
        let x = vec![0.0, 0.7, 1.1, 2.0, 3.5];
        let y = vec![1.0, -0.3, 0.2, 0.9, -2.0];
        let s = CubicSpline::new(x.clone(), y.clone()).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            // Interior nodes are reproduced exactly; evaluate just inside.
            assert!((s.eval(*xi) - yi).abs() < 1e-12);
        }
    }
}
