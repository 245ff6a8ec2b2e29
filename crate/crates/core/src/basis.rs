//! Reference-element bases and quadrature.
//!
//! P1 trial spaces drive the solver; P2 appears in postprocessing and in the
//! richer boundary-datum projection. Quadrature is Gauss-Legendre on
//! intervals and edges, and a collapsed (Duffy) product rule on the
//! reference triangle `{(0,0), (1,0), (0,1)}`.

use crate::error::{Error, Result};

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre_01(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // initial guess on [-1, 1] (Chebyshev-like), then Newton on P_n
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..60 {
            let (p, dp) = legendre_pair(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_pair(n, x);
        nodes[n - 1 - i] = 0.5 * (x + 1.0);
        weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Legendre polynomial `P_n(x)` and its derivative.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Quadrature on the reference interval `[0, 1]`.
#[derive(Debug, Clone)]
pub struct QuadInterval {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub exactness: usize,
}

/// Quadrature on the reference triangle `{(0,0), (1,0), (0,1)}`.
#[derive(Debug, Clone)]
pub struct QuadTriangle {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub exactness: usize,
}

pub const MAX_QUADRATURE_DEGREE: usize = 30;

pub fn quad_interval(exactness: usize) -> Result<QuadInterval> {
    if exactness > MAX_QUADRATURE_DEGREE {
        return Err(Error::InvalidArgument(format!(
            "unsupported interval quadrature degree {exactness}"
        )));
    }
    let n = exactness / 2 + 1; // n-point Gauss is exact to degree 2n-1
    let (nodes, weights) = gauss_legendre_01(n);
    Ok(QuadInterval {
        nodes,
        weights,
        exactness,
    })
}

pub fn quad_triangle(exactness: usize) -> Result<QuadTriangle> {
    if exactness > MAX_QUADRATURE_DEGREE {
        return Err(Error::InvalidArgument(format!(
            "unsupported triangle quadrature degree {exactness}"
        )));
    }
    // Duffy map x = xi (1 - eta), y = eta with Jacobian (1 - eta):
    // a degree-d integrand is degree <= d in xi and <= d + 1 in eta.
    let nx = exactness / 2 + 1;
    let ny = exactness.div_ceil(2) + 1;
    let (xs, wxs) = gauss_legendre_01(nx);
    let (ys, wys) = gauss_legendre_01(ny);
    let mut points = Vec::with_capacity(nx * ny);
    let mut weights = Vec::with_capacity(nx * ny);
    for (y, wy) in ys.iter().zip(&wys) {
        for (x, wx) in xs.iter().zip(&wxs) {
            points.push([x * (1.0 - y), *y]);
            weights.push(wx * wy * (1.0 - y));
        }
    }
    Ok(QuadTriangle {
        points,
        weights,
        exactness,
    })
}

/// Element kind for [`BasisSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementKind {
    Interval,
    Triangle,
    Edge,
}

/// Nodal Lagrange shape functions on the reference element.
#[derive(Debug, Clone)]
pub struct BasisSet {
    pub kind: ElementKind,
    pub degree: usize,
}

impl BasisSet {
    pub fn new(kind: ElementKind, degree: usize) -> Result<Self> {
        if degree == 0 || degree > 2 {
            return Err(Error::InvalidArgument(format!(
                "basis degree must be 1 or 2, got {degree}"
            )));
        }
        Ok(Self { kind, degree })
    }

    pub fn len(&self) -> usize {
        match (self.kind, self.degree) {
            (ElementKind::Triangle, 1) => 3,
            (ElementKind::Triangle, 2) => 6,
            (_, 1) => 2,
            (_, 2) => 3,
            _ => unreachable!(),
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Shape function `i` at a reference point (`[xi, 0]` for 1D kinds).
    pub fn eval(&self, i: usize, p: [f64; 2]) -> f64 {
        match self.kind {
            ElementKind::Interval | ElementKind::Edge => {
                let x = p[0];
                match (self.degree, i) {
                    (1, 0) => 1.0 - x,
                    (1, 1) => x,
                    // nodes at 0, 1/2, 1
                    (2, 0) => 2.0 * (x - 0.5) * (x - 1.0),
                    (2, 1) => 4.0 * x * (1.0 - x),
                    (2, 2) => 2.0 * x * (x - 0.5),
                    _ => panic!("basis index out of range"),
                }
            }
            ElementKind::Triangle => {
                let l = [1.0 - p[0] - p[1], p[0], p[1]];
                match (self.degree, i) {
                    (1, _) => l[i],
                    // vertices then midpoints (01, 12, 20)
                    (2, 0..=2) => l[i] * (2.0 * l[i] - 1.0),
                    (2, 3) => 4.0 * l[0] * l[1],
                    (2, 4) => 4.0 * l[1] * l[2],
                    (2, 5) => 4.0 * l[2] * l[0],
                    _ => panic!("basis index out of range"),
                }
            }
        }
    }

    /// Reference gradient of shape function `i`.
    pub fn grad(&self, i: usize, p: [f64; 2]) -> [f64; 2] {
        match self.kind {
            ElementKind::Interval | ElementKind::Edge => {
                let x = p[0];
                let d = match (self.degree, i) {
                    (1, 0) => -1.0,
                    (1, 1) => 1.0,
                    (2, 0) => 4.0 * x - 3.0,
                    (2, 1) => 4.0 - 8.0 * x,
                    (2, 2) => 4.0 * x - 1.0,
                    _ => panic!("basis index out of range"),
                };
                [d, 0.0]
            }
            ElementKind::Triangle => {
                let l = [1.0 - p[0] - p[1], p[0], p[1]];
                let dl = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
                match (self.degree, i) {
                    (1, _) => dl[i],
                    (2, 0..=2) => {
                        let f = 4.0 * l[i] - 1.0;
                        [f * dl[i][0], f * dl[i][1]]
                    }
                    (2, 3) => [
                        4.0 * (l[0] * dl[1][0] + l[1] * dl[0][0]),
                        4.0 * (l[0] * dl[1][1] + l[1] * dl[0][1]),
                    ],
                    (2, 4) => [
                        4.0 * (l[1] * dl[2][0] + l[2] * dl[1][0]),
                        4.0 * (l[1] * dl[2][1] + l[2] * dl[1][1]),
                    ],
                    (2, 5) => [
                        4.0 * (l[2] * dl[0][0] + l[0] * dl[2][0]),
                        4.0 * (l[2] * dl[0][1] + l[0] * dl[2][1]),
                    ],
                    _ => panic!("basis index out of range"),
                }
            }
        }
    }
}

/// Geometry and the P1 element matrices of a physical triangle.
#[derive(Debug, Clone)]
pub struct TriGeometry {
    pub verts: [[f64; 2]; 3],
    pub area: f64,
    /// Constant gradients of the three P1 hat functions.
    pub grads: [[f64; 2]; 3],
    /// Per local edge: length and outward unit normal.
    pub edge_len: [f64; 3],
    pub edge_normal: [[f64; 2]; 3],
}

impl TriGeometry {
    pub fn new(verts: [[f64; 2]; 3]) -> Result<Self> {
        let [p0, p1, p2] = verts;
        let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
        let area = 0.5 * det;
        if !(area > 1e-300) {
            return Err(Error::InvalidArgument(format!(
                "degenerate triangle, signed area {area}"
            )));
        }
        let grads = [
            [(p1[1] - p2[1]) / det, (p2[0] - p1[0]) / det],
            [(p2[1] - p0[1]) / det, (p0[0] - p2[0]) / det],
            [(p0[1] - p1[1]) / det, (p1[0] - p0[0]) / det],
        ];
        let mut edge_len = [0.0; 3];
        let mut edge_normal = [[0.0; 2]; 3];
        for l in 0..3 {
            let a = verts[l];
            let b = verts[(l + 1) % 3];
            let tx = b[0] - a[0];
            let ty = b[1] - a[1];
            let len = (tx * tx + ty * ty).sqrt();
            edge_len[l] = len;
            edge_normal[l] = [ty / len, -tx / len];
        }
        Ok(Self {
            verts,
            area,
            grads,
            edge_len,
            edge_normal,
        })
    }

    /// `(lambda_j, lambda_i)_K`
    pub fn p1_mass(&self) -> [[f64; 3]; 3] {
        let a = self.area / 12.0;
        let mut m = [[a; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 2.0 * a;
        }
        m
    }

    /// `(grad lambda_j, grad lambda_i)_K`
    pub fn p1_stiffness(&self) -> [[f64; 3]; 3] {
        let mut s = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                s[i][j] = self.area
                    * (self.grads[i][0] * self.grads[j][0] + self.grads[i][1] * self.grads[j][1]);
            }
        }
        s
    }

    /// `(lambda_j, d_c lambda_i)_K = grads[i][c] * area / 3`
    pub fn p1_div_coupling(&self, i: usize, c: usize) -> f64 {
        self.grads[i][c] * self.area / 3.0
    }

    /// Edge P1 mass matrix `<mu_j, mu_i>_e` on local edge `l`, in the
    /// element's own traversal orientation.
    pub fn edge_p1_mass(&self, l: usize) -> [[f64; 2]; 2] {
        let s = self.edge_len[l] / 6.0;
        [[2.0 * s, s], [s, 2.0 * s]]
    }

    pub fn map_ref(&self, p: [f64; 2]) -> [f64; 2] {
        let [p0, p1, p2] = self.verts;
        [
            p0[0] + (p1[0] - p0[0]) * p[0] + (p2[0] - p0[0]) * p[1],
            p0[1] + (p1[1] - p0[1]) * p[0] + (p2[1] - p0[1]) * p[1],
        ]
    }

    pub fn centroid(&self) -> [f64; 2] {
        let [p0, p1, p2] = self.verts;
        [(p0[0] + p1[0] + p2[0]) / 3.0, (p0[1] + p1[1] + p2[1]) / 3.0]
    }

    pub fn diameter(&self) -> f64 {
        self.edge_len.iter().cloned().fold(0.0, f64::max)
    }
}

/// P1 element matrices for the interval `[0, h]`: mass `h/6 [[2,1],[1,2]]`
/// and the coupling `(lambda_j, lambda_i')`.
#[derive(Debug, Clone)]
pub struct IntervalGeometry {
    pub h: f64,
}

impl IntervalGeometry {
    pub fn new(h: f64) -> Result<Self> {
        if !(h > 1e-300) {
            return Err(Error::InvalidArgument(format!(
                "degenerate interval, length {h}"
            )));
        }
        Ok(Self { h })
    }

    pub fn p1_mass(&self) -> [[f64; 2]; 2] {
        let s = self.h / 6.0;
        [[2.0 * s, s], [s, 2.0 * s]]
    }

    /// `(lambda_j, lambda_i')`: derivative on the test index.
    pub fn p1_div_coupling(&self, i: usize, _j: usize) -> f64 {
        // lambda_0' = -1/h, lambda_1' = 1/h; integral of lambda_j is h/2
        let d = if i == 0 { -1.0 } else { 1.0 };
        d * 0.5
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_quadrature_exactness() {
        for deg in 0..=10 {
            let q = quad_interval(deg).unwrap();
            for p in 0..=deg {
                let val: f64 = q
                    .nodes
                    .iter()
                    .zip(&q.weights)
                    .map(|(x, w)| w * x.powi(p as i32))
                    .sum();
                let exact = 1.0 / (p as f64 + 1.0);
                assert!(
                    (val - exact).abs() < 1e-14,
                    "deg {deg} monomial {p}: {val} vs {exact}"
                );
            }
        }
        // a degree-4 rule integrates x^4 over [0,1] exactly
        let q = quad_interval(4).unwrap();
        let v: f64 = q
            .nodes
            .iter()
            .zip(&q.weights)
            .map(|(x, w)| w * x.powi(4))
            .sum();
        assert!((v - 0.2).abs() < 1e-15);
    }

    #[test]
    fn triangle_quadrature_exactness() {
        // exact integrals over the reference triangle: x^a y^b -> a! b! / (a+b+2)!
        let fact = |n: usize| -> f64 { (1..=n).map(|v| v as f64).product::<f64>().max(1.0) };
        for deg in 0..=10 {
            let q = quad_triangle(deg).unwrap();
            for a in 0..=deg {
                for b in 0..=(deg - a) {
                    let val: f64 = q
                        .points
                        .iter()
                        .zip(&q.weights)
                        .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
                        .sum();
                    let exact = fact(a) * fact(b) / fact(a + b + 2);
                    assert!(
                        (val - exact).abs() < 1e-14,
                        "deg {deg} x^{a} y^{b}: {val} vs {exact}"
                    );
                }
            }
        }
        // degree-2 rule on the pure quadratics
        let q = quad_triangle(2).unwrap();
        let vx2: f64 = q
            .points
            .iter()
            .zip(&q.weights)
            .map(|(p, w)| w * p[0] * p[0])
            .sum();
        assert!((vx2 - 1.0 / 12.0).abs() < 1e-15);
        let vxy: f64 = q
            .points
            .iter()
            .zip(&q.weights)
            .map(|(p, w)| w * p[0] * p[1])
            .sum();
        assert!((vxy - 1.0 / 24.0).abs() < 1e-15);
    }

    #[test]
    fn quadrature_rejects_unsupported_degree() {
        assert!(quad_interval(MAX_QUADRATURE_DEGREE + 1).is_err());
        assert!(quad_triangle(MAX_QUADRATURE_DEGREE + 1).is_err());
    }

    #[test]
    fn edge_rule_maps_with_length_jacobian() {
        // integral of 1 over an edge of length h is h: rule weights sum to 1
        let q = quad_interval(3).unwrap();
        let s: f64 = q.weights.iter().sum();
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn partition_of_unity() {
        let q = quad_triangle(4).unwrap();
        for (kind, deg) in [
            (ElementKind::Interval, 1),
            (ElementKind::Interval, 2),
            (ElementKind::Triangle, 1),
            (ElementKind::Triangle, 2),
            (ElementKind::Edge, 1),
        ] {
            let b = BasisSet::new(kind, deg).unwrap();
            let pts: Vec<[f64; 2]> = match kind {
                ElementKind::Triangle => q.points.clone(),
                _ => quad_interval(4)
                    .unwrap()
                    .nodes
                    .iter()
                    .map(|&x| [x, 0.0])
                    .collect(),
            };
            for p in pts {
                let s: f64 = (0..b.len()).map(|i| b.eval(i, p)).sum();
                assert!((s - 1.0).abs() < 1e-14, "{kind:?} deg {deg}");
            }
        }
    }

    #[test]
    fn p1_mass_1d_textbook() {
        let g = IntervalGeometry::new(0.5).unwrap();
        let m = g.p1_mass();
        assert!((m[0][0] - 2.0 * 0.5 / 6.0).abs() < 1e-16);
        assert!((m[0][1] - 0.5 / 6.0).abs() < 1e-16);
    }

    #[test]
    fn p1_stiffness_rows_sum_zero() {
        let g = TriGeometry::new([[0.2, 0.1], [1.3, 0.4], [0.5, 1.7]]).unwrap();
        let s = g.p1_stiffness();
        for row in s {
            let sum: f64 = row.iter().sum();
            assert!(sum.abs() < 1e-14);
        }
    }

    #[test]
    fn mass_spd_and_affine_scaling() {
        let g1 = TriGeometry::new([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let c = 3.7;
        let g2 = TriGeometry::new([[0.0, 0.0], [c, 0.0], [0.0, c]]).unwrap();
        let m1 = g1.p1_mass();
        let m2 = g2.p1_mass();
        for i in 0..3 {
            for j in 0..3 {
                // mass scales with area = c^2
                assert!((m2[i][j] - c * c * m1[i][j]).abs() < 1e-13);
            }
        }
        let s1 = g1.p1_stiffness();
        let s2 = g2.p1_stiffness();
        for i in 0..3 {
            for j in 0..3 {
                // stiffness is scale-invariant in 2D
                assert!((s2[i][j] - s1[i][j]).abs() < 1e-13);
            }
        }
        // diagonal dominance of the P1 mass gives positive definiteness here
        for i in 0..3 {
            assert!(m1[i][i] > 0.0);
        }
    }

    #[test]
    fn degenerate_triangle_rejected() {
        assert!(TriGeometry::new([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]).is_err());
    }
}
