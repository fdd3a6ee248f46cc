//! Natural cubic interpolating spline with linear extrapolation.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl CubicSpline {
    /// Interpolates `(x, y)` pairs; `x` must be strictly increasing.
    pub fn natural(points: &[[f64; 2]]) -> Result<Self> {
        let n = points.len();
        if n < 2 {
            return Err(Error::InvalidInput("a spline needs at least two knots".into()));
        }
        let x: Vec<f64> = points.iter().map(|p| p[0]).collect();
        let y: Vec<f64> = points.iter().map(|p| p[1]).collect();
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("spline table must be finite".into()));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("spline abscissae must be strictly increasing".into()));
        }
        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm on the interior knots
            let k = n - 2;
            let mut diag = vec![0.0; k];
            let mut upper = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            for i in 0..k {
                let h0 = x[i + 1] - x[i];
                let h1 = x[i + 2] - x[i + 1];
                diag[i] = 2.0 * (h0 + h1);
                upper[i] = h1;
                rhs[i] = 6.0 * ((y[i + 2] - y[i + 1]) / h1 - (y[i + 1] - y[i]) / h0);
            }
            for i in 1..k {
                let lower = x[i + 1] - x[i];
                let w = lower / diag[i - 1];
                diag[i] -= w * upper[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for i in (0..k - 1).rev() {
                m[i + 1] = (rhs[i] - upper[i] * m[i + 2]) / diag[i];
            }
        }
        Ok(CubicSpline { x, y, m })
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    fn segment(&self, t: f64) -> usize {
        let n = self.x.len();
        match self.x.partition_point(|&k| k <= t) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        }
    }

    /// Value and the first three derivatives at `t`.
    pub fn derivatives(&self, t: f64) -> [f64; 4] {
        let n = self.x.len();
        let (x0, xn) = (self.x[0], self.x[n - 1]);
        if t < x0 || t > xn {
            let (k, edge) = if t < x0 { (0, x0) } else { (n - 2, xn) };
            let [v, d, _, _] = self.inside(k, edge);
            return [v + d * (t - edge), d, 0.0, 0.0];
        }
        self.inside(self.segment(t), t)
    }

    fn inside(&self, i: usize, t: f64) -> [f64; 4] {
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let (y0, y1) = (self.y[i], self.y[i + 1]);
        let value = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let d1 = (y1 - y0) / h - (3.0 * a * a - 1.0) / 6.0 * h * m0 + (3.0 * b * b - 1.0) / 6.0 * h * m1;
        let d2 = a * m0 + b * m1;
        let d3 = (m1 - m0) / h;
        [value, d1, d2, d3]
    }

    /// Third derivative averaged over the two adjacent segments at a knot.
    pub fn third_derivative_symmetric(&self, t: f64) -> f64 {
        let n = self.x.len();
        if let Ok(k) = self.x.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            if k > 0 && k < n - 1 {
                let left = (self.m[k] - self.m[k - 1]) / (self.x[k] - self.x[k - 1]);
                let right = (self.m[k + 1] - self.m[k]) / (self.x[k + 1] - self.x[k]);
                return 0.5 * (left + right);
            }
        }
        self.derivatives(t)[3]
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.derivatives(t)[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn interpolates_knots_with_natural_ends() {
        let pts: Vec<[f64; 2]> = (0..9).map(|i| {
            let x = -2.0 + 0.5 * i as f64;
            [x, (x * 0.7).sin()]
        }).collect();
        let s = CubicSpline::natural(&pts).unwrap();
        for p in &pts {
            assert_relative_eq!(s.eval(p[0]), p[1], epsilon = 1e-14);
        }
        assert!(s.derivatives(-2.0)[2].abs() < 1e-12);
        assert!(s.derivatives(2.0)[2].abs() < 1e-12);
    }

    #[test]
    fn reproduces_straight_lines_everywhere() {
        let pts = [[0.0, 1.0], [1.0, 3.0], [2.5, 6.0], [4.0, 9.0]];
        let s = CubicSpline::natural(&pts).unwrap();
        for t in [-3.0, 0.3, 1.7, 3.9, 7.0] {
            assert_relative_eq!(s.eval(t), 1.0 + 2.0 * t, epsilon = 1e-12);
            assert_relative_eq!(s.derivatives(t)[1], 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn close_to_smooth_function_on_fine_grid() {
        let f = |x: f64| (0.01 + x * x / 3.0).sqrt();
        let pts: Vec<[f64; 2]> = (0..=400).map(|i| {
            let x = -4.0 + 0.02 * i as f64;
            [x, f(x)]
        }).collect();
        let s = CubicSpline::natural(&pts).unwrap();
        assert_relative_eq!(s.eval(1.234), f(1.234), epsilon = 1e-7);
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(CubicSpline::natural(&[[0.0, 1.0]]).is_err());
        assert!(CubicSpline::natural(&[[0.0, 1.0], [0.0, 2.0]]).is_err());
        assert!(CubicSpline::natural(&[[0.0, 1.0], [1.0, f64::NAN]]).is_err());
    }
}
