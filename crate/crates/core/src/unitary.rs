//! 2x2 unitaries and the handful of constructors the protocols need.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;
use std::ops::Mul;

use crate::error::{Error, Result};

const UNITARY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Unitary1 {
    pub m: [[C64; 2]; 2],
}

#[inline]
fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

impl Unitary1 {
    /// Checked constructor from explicit entries.
    pub fn from_rows(m: [[C64; 2]; 2]) -> Result<Self> {
        let u = Unitary1 { m };
        if !u.is_unitary(UNITARY_TOL) {
            return Err(Error::NonUnitary);
        }
        Ok(u)
    }

    /// Rotation `exp(-i angle/2 n.sigma)`; `axis` is normalised here.
    pub fn axis_angle(axis: [f64; 3], angle: f64) -> Result<Self> {
        let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        if !(norm > 0.0) || !angle.is_finite() {
            return Err(Error::InvalidArgument("axis must be a non-zero finite vector".into()));
        }
        let [x, y, z] = [axis[0] / norm, axis[1] / norm, axis[2] / norm];
        let (s, co) = (angle / 2.0).sin_cos();
        Ok(Unitary1 {
            m: [
                [c(co, -s * z), c(-s * y, -s * x)],
                [c(s * y, -s * x), c(co, s * z)],
            ],
        })
    }

    /// `exp(-i t n.sigma)`.
    pub fn exp_pauli(axis: [f64; 3], t: f64) -> Result<Self> {
        Self::axis_angle(axis, 2.0 * t)
    }

    pub fn identity() -> Self {
        Unitary1 { m: [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]] }
    }
    pub fn x() -> Self {
        Unitary1 { m: [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]] }
    }
    pub fn y() -> Self {
        Unitary1 { m: [[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]] }
    }
    pub fn z() -> Self {
        Unitary1 { m: [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]] }
    }
    pub fn h() -> Self {
        let r = FRAC_1_SQRT_2;
        Unitary1 { m: [[c(r, 0.0), c(r, 0.0)], [c(r, 0.0), c(-r, 0.0)]] }
    }
    /// diag(1, e^{i phi})
    pub fn phase(phi: f64) -> Self {
        Unitary1 { m: [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), C64::from_polar(1.0, phi)]] }
    }

    pub fn dagger(&self) -> Self {
        let m = &self.m;
        Unitary1 { m: [[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]] }
    }

    pub fn scale(&self, k: C64) -> Self {
        let m = &self.m;
        Unitary1 { m: [[m[0][0] * k, m[0][1] * k], [m[1][0] * k, m[1][1] * k]] }
    }

    pub fn det(&self) -> C64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn trace(&self) -> C64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn apply(&self, v: [C64; 2]) -> [C64; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        let p = *self * self.dagger();
        p.max_abs_diff(&Self::identity()) <= tol && self.m.iter().flatten().all(|z| z.is_finite())
    }

    pub fn max_abs_diff(&self, o: &Self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                d = d.max((self.m[i][j] - o.m[i][j]).norm());
            }
        }
        d
    }

    /// `1 - |tr(U^dag V)|/2`: zero iff equal up to global phase.
    pub fn phase_distance(&self, o: &Self) -> f64 {
        (1.0 - (self.dagger() * *o).trace().norm() / 2.0).max(0.0)
    }

    /// Elementwise distance after removing the best global phase.
    pub fn phase_quotient_diff(&self, o: &Self) -> f64 {
        let ip = (o.dagger() * *self).trace();
        let ph = if ip.norm() > 0.0 { ip / ip.norm() } else { c(1.0, 0.0) };
        self.max_abs_diff(&o.scale(ph))
    }

    /// If `self` maps each basis state to a basis state (times a phase),
    /// returns `(image of 0, image of 1, phase on 0, phase on 1)`.
    pub fn as_permutation(&self, tol: f64) -> Option<([u8; 2], [C64; 2])> {
        let m = &self.m;
        if m[1][0].norm() <= tol && m[0][1].norm() <= tol {
            Some(([0, 1], [m[0][0], m[1][1]]))
        } else if m[0][0].norm() <= tol && m[1][1].norm() <= tol {
            Some(([1, 0], [m[1][0], m[0][1]]))
        } else {
            None
        }
    }

    /// Phase-diagonal within `tol`?
    pub fn is_diagonal(&self, tol: f64) -> bool {
        self.m[0][1].norm() <= tol && self.m[1][0].norm() <= tol
    }

    /// ZYZ form `U = e^{i alpha} Rz(beta) Ry(gamma) Rz(delta)` with `R*(t) = exp(-i t/2 sigma)`.
    pub fn zyz(&self) -> (f64, f64, f64, f64) {
        let alpha = self.det().arg() / 2.0;
        let v = self.scale(C64::from_polar(1.0, -alpha));
        // v = [[a, -b*], [b, a*]], a = e^{-i(beta+delta)/2} cos(g/2), b = e^{i(beta-delta)/2} sin(g/2)
        let a = v.m[0][0];
        let b = v.m[1][0];
        let gamma = 2.0 * b.norm().atan2(a.norm());
        let (pa, pb) = (a.arg(), b.arg());
        let (beta, delta) = if b.norm() < 1e-14 {
            (-2.0 * pa, 0.0)
        } else if a.norm() < 1e-14 {
            (2.0 * pb, 0.0)
        } else {
            (pb - pa, -pa - pb)
        };
        (alpha, beta, gamma, delta)
    }

    pub fn rz(t: f64) -> Self {
        Unitary1 {
            m: [[C64::from_polar(1.0, -t / 2.0), c(0.0, 0.0)], [c(0.0, 0.0), C64::from_polar(1.0, t / 2.0)]],
        }
    }

    pub fn ry(t: f64) -> Self {
        let (s, co) = (t / 2.0).sin_cos();
        Unitary1 { m: [[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]] }
    }

    /// Euler-angle parametrisation used by the solver.
    pub fn euler(a: f64, b: f64, g: f64) -> Self {
        Self::rz(a) * Self::ry(b) * Self::rz(g)
    }
}

impl Mul for Unitary1 {
    type Output = Unitary1;
    fn mul(self, o: Unitary1) -> Unitary1 {
        let (a, b) = (&self.m, &o.m);
        let mut m = [[c(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Unitary1 { m }
    }
}
