//! Exact solutions used for boundary data and error measurement: the 1D
//! two-sided plane wave and the 2D radial Bessel field `J_0(kr)`, plus the
//! `J_0`/`J_1` evaluator they need.
//!
//! All data satisfy the homogeneous equation, so `f` vanishes and the
//! solver reconstructs the field purely from the impedance datum
//! `g = du/dn + i k u`.

use crate::error::{Error, Result};
use num_complex::Complex64 as C64;

/// Seam between the power series and the Hankel asymptotic expansion.
const BESSEL_SERIES_LIMIT: f64 = 12.0;

/// Bessel function of the first kind, order 0 or 1.
///
/// Power series with compensated summation for `|z| <= 12`, Hankel
/// asymptotic expansion beyond; absolute error stays below 1e-12 for
/// `|z| <= 1000`. Negative arguments go through parity (`J0` even, `J1`
/// odd).
pub fn bessel_j(order: u8, z: f64) -> f64 {
    assert!(order <= 1, "only orders 0 and 1 are provided");
    let az = z.abs();
    let val = if az <= BESSEL_SERIES_LIMIT {
        bessel_series(order, az)
    } else {
        bessel_asymptotic(order, az)
    };
    if z < 0.0 && order == 1 {
        -val
    } else {
        val
    }
}

pub fn bessel_j0(z: f64) -> f64 {
    bessel_j(0, z)
}

pub fn bessel_j1(z: f64) -> f64 {
    bessel_j(1, z)
}

fn bessel_series(order: u8, z: f64) -> f64 {
    let half = 0.5 * z;
    let zz = half * half;
    let mut term = if order == 0 { 1.0 } else { half };
    // Kahan compensation keeps the cancellation floor near one ulp of the
    // largest partial sum (the terms reach ~4e3 for z = 12).
    let mut sum = term;
    let mut comp = 0.0;
    let nu = order as f64;
    let mut m = 1.0;
    while m < 200.0 {
        term = -term * zz / (m * (m + nu));
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        if term.abs() < 1e-17 * sum.abs().max(1.0) {
            break;
        }
        m += 1.0;
    }
    sum
}

fn bessel_asymptotic(order: u8, z: f64) -> f64 {
    let mu = 4.0 * (order as f64) * (order as f64);
    // a_j = prod_{m=1..j} (mu - (2m-1)^2) / (j! 8^j); P sums even j, Q odd j
    let mut a = Vec::with_capacity(40);
    let mut acc = 1.0;
    for j in 1..=40usize {
        acc *= (mu - (2.0 * j as f64 - 1.0).powi(2)) / (j as f64 * 8.0);
        a.push(acc);
    }
    let mut p = 1.0;
    let mut prev = 1.0_f64;
    let mut m = 1;
    while 2 * m <= 40 {
        let t = if m % 2 == 0 { 1.0 } else { -1.0 } * a[2 * m - 2 + 1] / z.powi(2 * m as i32);
        if t.abs() > prev.abs() {
            break; // divergent tail of the asymptotic series
        }
        p += t;
        prev = t;
        m += 1;
    }
    let mut q = a[0] / z;
    prev = q;
    m = 1;
    while 2 * m < 40 {
        let t = if m % 2 == 0 { 1.0 } else { -1.0 } * a[2 * m] / z.powi(2 * m as i32 + 1);
        if t.abs() > prev.abs() {
            break;
        }
        q += t;
        prev = t;
        m += 1;
    }
    let chi = z - (0.5 * order as f64 + 0.25) * std::f64::consts::PI;
    (2.0 / (std::f64::consts::PI * z)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// 1D exact solution on `(0, 1)` with callable data.
pub trait Solution1d: Sync {
    fn k(&self) -> f64;
    fn u(&self, x: f64) -> C64;
    /// `u'(x)`
    fn du(&self, x: f64) -> C64;
    /// `q = -u'`
    fn q(&self, x: f64) -> C64 {
        -self.du(x)
    }
    fn f(&self, _x: f64) -> C64 {
        C64::new(0.0, 0.0)
    }
    /// Impedance datum `g = u' n + i k u` at a boundary point with outward
    /// normal `n` (+1 or -1).
    fn g(&self, x: f64, n: f64) -> C64 {
        self.du(x) * n + C64::new(0.0, self.k()) * self.u(x)
    }
}

/// 2D exact solution with callable data.
pub trait Solution2d: Sync {
    fn k(&self) -> f64;
    fn u(&self, p: [f64; 2]) -> C64;
    fn grad_u(&self, p: [f64; 2]) -> [C64; 2];
    fn q(&self, p: [f64; 2]) -> [C64; 2] {
        let g = self.grad_u(p);
        [-g[0], -g[1]]
    }
    fn f(&self, _p: [f64; 2]) -> C64 {
        C64::new(0.0, 0.0)
    }
    fn g(&self, p: [f64; 2], n: [f64; 2]) -> C64 {
        let gr = self.grad_u(p);
        gr[0] * n[0] + gr[1] * n[1] + C64::new(0.0, self.k()) * self.u(p)
    }
}

/// `u = (e^{-ikx} + e^{ik(x-1)}) / (2ik)`, the solution with `f = 0` and
/// `g(0) = g(1) = 1`.
#[derive(Debug, Clone, Copy)]
pub struct PlaneWave1d {
    pub k: f64,
}

pub fn plane_wave_1d(k: f64) -> Result<PlaneWave1d> {
    if !(k > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "wave number must be positive, got {k}"
        )));
    }
    Ok(PlaneWave1d { k })
}

impl Solution1d for PlaneWave1d {
    fn k(&self) -> f64 {
        self.k
    }

    fn u(&self, x: f64) -> C64 {
        let ik = C64::new(0.0, self.k);
        ((-ik * x).exp() + (ik * (x - 1.0)).exp()) / (2.0 * ik)
    }

    fn du(&self, x: f64) -> C64 {
        let ik = C64::new(0.0, self.k);
        (-(-ik * x).exp() + (ik * (x - 1.0)).exp()) / 2.0
    }
}

/// `u = J_0(kr)` on the unit hexagon.
#[derive(Debug, Clone, Copy)]
pub struct BesselSolution2d {
    pub k: f64,
}

pub fn bessel_solution_2d(k: f64) -> Result<BesselSolution2d> {
    if !(k > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "wave number must be positive, got {k}"
        )));
    }
    Ok(BesselSolution2d { k })
}

impl Solution2d for BesselSolution2d {
    fn k(&self) -> f64 {
        self.k
    }

    fn u(&self, p: [f64; 2]) -> C64 {
        let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
        C64::new(bessel_j0(self.k * r), 0.0)
    }

    fn grad_u(&self, p: [f64; 2]) -> [C64; 2] {
        let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
        if r < 1e-14 {
            // removable singularity: J1(kr)/r -> k/2 but the direction x/r
            // cancels it to zero at the origin
            return [C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
        }
        let fac = -self.k * bessel_j1(self.k * r) / r;
        [C64::new(fac * p[0], 0.0), C64::new(fac * p[1], 0.0)]
    }
}
