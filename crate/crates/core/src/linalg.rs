//! 2×2 matrix helpers.

use serde::{Deserialize, Serialize};

/// Symmetric 2×2 matrix `[[xx, xy], [xy, yy]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Sym2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

/// General 2×2 matrix, row major.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Sym2 {
    pub fn new(xx: f64, xy: f64, yy: f64) -> Self {
        Self { xx, xy, yy }
    }

    pub fn scaled_identity(s: f64) -> Self {
        Self::new(s, 0.0, s)
    }

    pub fn to_array(&self) -> [[f64; 2]; 2] {
        [[self.xx, self.xy], [self.xy, self.yy]]
    }

    pub fn det(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.xx * s, self.xy * s, self.yy * s)
    }

    pub fn sub(&self, other: &Sym2) -> Self {
        Self::new(self.xx - other.xx, self.xy - other.xy, self.yy - other.yy)
    }

    pub fn frobenius(&self) -> f64 {
        (self.xx * self.xx + 2.0 * self.xy * self.xy + self.yy * self.yy).sqrt()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let mean = 0.5 * self.trace();
        let r = (0.5 * (self.xx - self.yy)).hypot(self.xy);
        [mean - r, mean + r]
    }

    /// Eigenpairs `(value, unit vector)` in ascending order of value.
    pub fn eigen(&self) -> [(f64, [f64; 2]); 2] {
        let [lo, hi] = self.eigenvalues();
        let vec_for = |l: f64| {
            let (a, b) = (self.xx - l, self.xy);
            let (c, d) = (self.xy, self.yy - l);
            // null vector of [[a, b], [c, d]]: pick the better-conditioned row
            let v = if a.abs() + b.abs() >= c.abs() + d.abs() { [-b, a] } else { [-d, c] };
            let n = v[0].hypot(v[1]);
            if n == 0.0 {
                [1.0, 0.0]
            } else {
                [v[0] / n, v[1] / n]
            }
        };
        if hi - lo <= 1e-300 {
            return [(lo, [1.0, 0.0]), (hi, [0.0, 1.0])];
        }
        let v_hi = vec_for(hi);
        let v_lo = [-v_hi[1], v_hi[0]];
        [(lo, v_lo), (hi, v_hi)]
    }

    /// Whether the matrix is invertible up to a relative tolerance on its eigenvalues.
    pub fn is_invertible(&self) -> bool {
        let [lo, hi] = self.eigenvalues();
        hi.abs() > 0.0 && lo.abs() > 1e-12 * hi.abs()
    }

    pub fn inverse(&self) -> Option<Sym2> {
        if !self.is_invertible() {
            return None;
        }
        let d = self.det();
        Some(Sym2::new(self.yy / d, -self.xy / d, self.xx / d))
    }

    /// Moore–Penrose pseudo-inverse, dropping eigenvalues below `1e-12 · max`.
    pub fn pseudo_inverse(&self) -> Sym2 {
        let pairs = self.eigen();
        let top = pairs[1].0.abs();
        let mut out = Sym2::default();
        for (l, v) in pairs {
            if top > 0.0 && l.abs() > 1e-12 * top {
                out.xx += v[0] * v[0] / l;
                out.xy += v[0] * v[1] / l;
                out.yy += v[1] * v[1] / l;
            }
        }
        out
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [self.xx * v[0] + self.xy * v[1], self.xy * v[0] + self.yy * v[1]]
    }

    /// `vᵀ A v`.
    pub fn quadratic_form(&self, v: [f64; 2]) -> f64 {
        let w = self.apply(v);
        v[0] * w[0] + v[1] * w[1]
    }

    /// Solves `A x = b`; `None` when singular.
    pub fn solve(&self, b: [f64; 2]) -> Option<[f64; 2]> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        Some([(self.yy * b[0] - self.xy * b[1]) / d, (self.xx * b[1] - self.xy * b[0]) / d])
    }

    /// Lower-triangular `D` with `Dᵀ D = A`, for positive definite `A`.
    pub fn lower_factor(&self) -> Option<Mat2> {
        if !(self.yy > 0.0) {
            return None;
        }
        let d22 = self.yy.sqrt();
        let d21 = self.xy / d22;
        let rest = self.xx - d21 * d21;
        if !(rest > 1e-12 * self.trace()) {
            return None;
        }
        Some(Mat2([[rest.sqrt(), 0.0], [d21, d22]]))
    }

    /// Symmetric square root, for positive semidefinite `A`.
    pub fn sqrt_psd(&self) -> Mat2 {
        let mut m = [[0.0; 2]; 2];
        for (l, v) in self.eigen() {
            let s = l.max(0.0).sqrt();
            for (r, row) in m.iter_mut().enumerate() {
                for (c, cell) in row.iter_mut().enumerate() {
                    *cell += s * v[r] * v[c];
                }
            }
        }
        Mat2(m)
    }
}

impl Mat2 {
    pub fn transpose(&self) -> Mat2 {
        let m = self.0;
        Mat2([[m[0][0], m[1][0]], [m[0][1], m[1][1]]])
    }

    pub fn mul(&self, other: &Mat2) -> Mat2 {
        let (a, b) = (self.0, other.0);
        let mut out = [[0.0; 2]; 2];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        Mat2(out)
    }

    pub fn inverse(&self) -> Option<Mat2> {
        let m = self.0;
        let d = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        Some(Mat2([[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]]))
    }

    /// Row vector times matrix, `v M`.
    pub fn left_apply(&self, v: [f64; 2]) -> [f64; 2] {
        let m = self.0;
        [v[0] * m[0][0] + v[1] * m[1][0], v[0] * m[0][1] + v[1] * m[1][1]]
    }

    pub fn as_sym(&self) -> Sym2 {
        Sym2::new(self.0[0][0], 0.5 * (self.0[0][1] + self.0[1][0]), self.0[1][1])
    }
}
