//! Small fixed-size linear algebra for 2×2 real matrices.

use std::ops::Mul;

/// A 2×2 real matrix stored row-major: `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2::new(1.0, 0.0, 0.0, 1.0);

    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2 { a, b, c, d }
    }

    pub fn diag(x: f64, y: f64) -> Self {
        Mat2::new(x, 0.0, 0.0, y)
    }

    pub fn rotation(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Mat2::new(c, -s, s, c)
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn transpose(&self) -> Self {
        Mat2::new(self.a, self.c, self.b, self.d)
    }

    /// Inverse via the adjugate. Returns `None` for a singular matrix.
    pub fn inverse(&self) -> Option<Self> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        Some(Mat2::new(self.d / det, -self.b / det, -self.c / det, self.a / det))
    }

    /// Adjugate; equals the inverse for unimodular matrices.
    pub fn adjugate(&self) -> Self {
        Mat2::new(self.d, -self.b, -self.c, self.a)
    }

    pub fn scale(&self, s: f64) -> Self {
        Mat2::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    pub fn sub(&self, o: &Mat2) -> Self {
        Mat2::new(self.a - o.a, self.b - o.b, self.c - o.c, self.d - o.d)
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [self.a * v[0] + self.b * v[1], self.c * v[0] + self.d * v[1]]
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d
    }

    pub fn max_abs(&self) -> f64 {
        self.a.abs().max(self.b.abs()).max(self.c.abs()).max(self.d.abs())
    }

    /// Both singular values `(s_max, s_min)` from
    /// `s_max = (‖(a+d, c−b)‖ + ‖(a−d, c+b)‖) / 2` and `s_min = |det| / s_max`,
    /// which avoids cancellation both near equal singular values and for
    /// strongly hyperbolic matrices.
    pub fn singular_values(&self) -> (f64, f64) {
        let p = (self.a + self.d).hypot(self.c - self.b);
        let q = (self.a - self.d).hypot(self.c + self.b);
        let big = (p + q) / 2.0;
        let small = if big > 0.0 { (self.det().abs() / big).min(big) } else { 0.0 };
        (big, small)
    }

    /// Operator 2-norm (largest singular value).
    pub fn norm(&self) -> f64 {
        self.singular_values().0
    }

    /// Unit right-singular vector for the largest singular value, i.e. the
    /// most expanded input direction, as an angle in `[0, π)`.
    pub fn top_right_singular_angle(&self) -> f64 {
        let mtm = self.transpose() * *self;
        top_eigen_angle_symmetric(&mtm)
    }

    /// Unit left-singular vector for the largest singular value (direction of
    /// the most expanded output), as an angle in `[0, π)`.
    pub fn top_left_singular_angle(&self) -> f64 {
        let mmt = *self * self.transpose();
        top_eigen_angle_symmetric(&mmt)
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.c.is_finite() && self.d.is_finite()
    }
}

/// Angle in `[0, π)` of the eigenvector of the larger eigenvalue of a
/// symmetric 2×2 matrix.
fn top_eigen_angle_symmetric(s: &Mat2) -> f64 {
    // For [[p, q], [q, r]] the principal axis angle is atan2(2q, p − r) / 2.
    let theta = 0.5 * (2.0 * s.b).atan2(s.a - s.d);
    normalize_angle(theta)
}

/// Reduce an angle modulo π into `[0, π)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let pi = std::f64::consts::PI;
    let mut t = theta.rem_euclid(pi);
    if t >= pi {
        t -= pi;
    }
    t
}

impl Mul for Mat2 {
    type Output = Mat2;

    fn mul(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }
}
