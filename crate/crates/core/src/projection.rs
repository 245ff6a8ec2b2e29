//! The HDG projection, nodal interpolation helpers, elementwise means, and
//! edgewise L2 projection.
//!
//! The projection `(Pi_1 u, Pi_2 q)` is defined elementwise by matching
//! means of `u` and `q` against constants and matching `q . n + beta u`
//! against P1 on every edge; it reproduces compatible P1 pairs exactly and
//! is the workhorse oracle for the error analysis.

use crate::basis::{quad_interval, quad_triangle, TriGeometry};
use crate::error::{Error, Result};
use crate::hdg::EdgePoly;
use crate::linalg::DenseComplexMatrix;
use crate::mesh::{Mesh1D, TriMesh};
use num_complex::Complex64 as C64;

fn czero() -> C64 {
    C64::new(0.0, 0.0)
}

/// Per-element coefficients of the projected pair.
#[derive(Debug, Clone)]
pub struct ProjectionPair1d {
    pub beta: C64,
    /// endpoint values of `Pi_1 u` per element
    pub u: Vec<[C64; 2]>,
    /// endpoint values of `Pi_2 q` per element
    pub q: Vec<[C64; 2]>,
}

#[derive(Debug, Clone)]
pub struct ProjectionPair2d {
    pub beta: C64,
    /// vertex values of `Pi_1 u` per element
    pub u: Vec<[C64; 3]>,
    /// vertex values of `Pi_2 q` per element, `[qx0..2, qy0..2]`
    pub q: Vec<[C64; 6]>,
}

/// Quadrature exactness used to integrate the (possibly oscillatory)
/// projected fields.
const PROJ_QUAD_DEGREE: usize = 12;

/// 1D HDG projection of callable fields.
pub fn hdg_projection_1d(
    beta: C64,
    u: &dyn Fn(f64) -> C64,
    q: &dyn Fn(f64) -> C64,
    mesh: &Mesh1D,
) -> Result<ProjectionPair1d> {
    if beta.norm() == 0.0 {
        return Err(Error::InvalidArgument("projection needs beta != 0".into()));
    }
    let quad = quad_interval(PROJ_QUAD_DEGREE)?;
    let mut pu = Vec::with_capacity(mesh.n);
    let mut pq = Vec::with_capacity(mesh.n);
    for e in 0..mesh.n {
        let (x0, x1) = mesh.element(e);
        let h = x1 - x0;
        let mut int_u = czero();
        let mut int_q = czero();
        for (xi, w) in quad.nodes.iter().zip(&quad.weights) {
            let x = x0 + xi * h;
            int_u += u(x) * (w * h);
            int_q += q(x) * (w * h);
        }
        // unknowns [u0, u1, q0, q1]
        let mut a = DenseComplexMatrix::zeros(4);
        let mut rhs = vec![czero(); 4];
        // (Pi_1 u, 1) = (u, 1)
        a.set(0, 0, C64::new(h / 2.0, 0.0));
        a.set(0, 1, C64::new(h / 2.0, 0.0));
        rhs[0] = int_u;
        // (Pi_2 q, 1) = (q, 1)
        a.set(1, 2, C64::new(h / 2.0, 0.0));
        a.set(1, 3, C64::new(h / 2.0, 0.0));
        rhs[1] = int_q;
        // left endpoint, n = -1: -q0 + beta u0 = -q(x0) + beta u(x0)
        a.set(2, 0, beta);
        a.set(2, 2, C64::new(-1.0, 0.0));
        rhs[2] = -q(x0) + beta * u(x0);
        // right endpoint, n = +1
        a.set(3, 1, beta);
        a.set(3, 3, C64::new(1.0, 0.0));
        rhs[3] = q(x1) + beta * u(x1);
        let x = a
            .solve(&rhs)
            .map_err(|_| Error::ProjectionSingular { element: e })?;
        pu.push([x[0], x[1]]);
        pq.push([x[2], x[3]]);
    }
    Ok(ProjectionPair1d { beta, u: pu, q: pq })
}

/// 2D HDG projection of callable fields (`u` scalar, `q` vector).
pub fn hdg_projection_2d(
    beta: C64,
    u: &dyn Fn([f64; 2]) -> C64,
    q: &dyn Fn([f64; 2]) -> [C64; 2],
    mesh: &TriMesh,
) -> Result<ProjectionPair2d> {
    if beta.norm() == 0.0 {
        return Err(Error::InvalidArgument("projection needs beta != 0".into()));
    }
    let tquad = quad_triangle(PROJ_QUAD_DEGREE)?;
    let equad = quad_interval(PROJ_QUAD_DEGREE)?;
    let mut pu = Vec::with_capacity(mesh.n_elems());
    let mut pq = Vec::with_capacity(mesh.n_elems());
    for t in 0..mesh.n_elems() {
        let geom = TriGeometry::new(mesh.tri_vertices(t))?;
        // element means of the exact fields
        let mut int_u = czero();
        let mut int_q = [czero(); 2];
        for (rp, w) in tquad.points.iter().zip(&tquad.weights) {
            let phys = geom.map_ref(*rp);
            let wgt = w * 2.0 * geom.area;
            int_u += u(phys) * wgt;
            let qv = q(phys);
            int_q[0] += qv[0] * wgt;
            int_q[1] += qv[1] * wgt;
        }
        // unknowns [u0..2, qx0..2, qy0..2]
        let mut a = DenseComplexMatrix::zeros(9);
        let mut rhs = vec![czero(); 9];
        let third = geom.area / 3.0;
        for j in 0..3 {
            a.set(0, j, C64::new(third, 0.0));
            a.set(1, 3 + j, C64::new(third, 0.0));
            a.set(2, 6 + j, C64::new(third, 0.0));
        }
        rhs[0] = int_u;
        rhs[1] = int_q[0];
        rhs[2] = int_q[1];
        // edge rows: <Pi_2 q . n + beta Pi_1 u, mu>_e = <q . n + beta u, mu>_e
        for l in 0..3 {
            let (va, vb) = (l, (l + 1) % 3);
            let n = geom.edge_normal[l];
            let len = geom.edge_len[l];
            let me = geom.edge_p1_mass(l);
            let pa = geom.verts[va];
            let pb = geom.verts[vb];
            for m in 0..2 {
                let row = 3 + 2 * l + m;
                // lhs coefficients
                let (wa, wb) = (me[m][0], me[m][1]);
                a.add(row, va, beta * wa);
                a.add(row, vb, beta * wb);
                for c in 0..2 {
                    a.add(row, 3 + 3 * c + va, C64::new(n[c] * wa, 0.0));
                    a.add(row, 3 + 3 * c + vb, C64::new(n[c] * wb, 0.0));
                }
                // rhs by quadrature
                let mut acc = czero();
                for (s, w) in equad.nodes.iter().zip(&equad.weights) {
                    let p = [pa[0] + (pb[0] - pa[0]) * s, pa[1] + (pb[1] - pa[1]) * s];
                    let mu = if m == 0 { 1.0 - s } else { *s };
                    let qv = q(p);
                    acc += (qv[0] * n[0] + qv[1] * n[1] + beta * u(p)) * (w * len * mu);
                }
                rhs[row] = acc;
            }
        }
        let x = a
            .solve(&rhs)
            .map_err(|_| Error::ProjectionSingular { element: t })?;
        pu.push([x[0], x[1], x[2]]);
        pq.push([x[3], x[4], x[5], x[6], x[7], x[8]]);
    }
    Ok(ProjectionPair2d { beta, u: pu, q: pq })
}

/// Maximum relative residual of the three defining equation groups of a 2D
/// projection against the original fields.
pub fn projection_residuals_2d(
    pair: &ProjectionPair2d,
    u: &dyn Fn([f64; 2]) -> C64,
    q: &dyn Fn([f64; 2]) -> [C64; 2],
    mesh: &TriMesh,
) -> Result<f64> {
    let tquad = quad_triangle(PROJ_QUAD_DEGREE)?;
    let equad = quad_interval(PROJ_QUAD_DEGREE)?;
    let mut worst: f64 = 0.0;
    for t in 0..mesh.n_elems() {
        let geom = TriGeometry::new(mesh.tri_vertices(t))?;
        let mut int_u = czero();
        let mut int_q = [czero(); 2];
        let mut int_pu = czero();
        let mut int_pq = [czero(); 2];
        for (rp, w) in tquad.points.iter().zip(&tquad.weights) {
            let phys = geom.map_ref(*rp);
            let wgt = w * 2.0 * geom.area;
            let lam = [1.0 - rp[0] - rp[1], rp[0], rp[1]];
            int_u += u(phys) * wgt;
            let qv = q(phys);
            int_q[0] += qv[0] * wgt;
            int_q[1] += qv[1] * wgt;
            for i in 0..3 {
                int_pu += pair.u[t][i] * (lam[i] * wgt);
                int_pq[0] += pair.q[t][i] * (lam[i] * wgt);
                int_pq[1] += pair.q[t][3 + i] * (lam[i] * wgt);
            }
        }
        let scale = int_u
            .norm()
            .max(int_q[0].norm())
            .max(int_q[1].norm())
            .max(1e-300);
        worst = worst.max((int_pu - int_u).norm() / scale);
        worst = worst.max((int_pq[0] - int_q[0]).norm() / scale);
        worst = worst.max((int_pq[1] - int_q[1]).norm() / scale);
        for l in 0..3 {
            let (va, vb) = (l, (l + 1) % 3);
            let n = geom.edge_normal[l];
            let len = geom.edge_len[l];
            let pa = geom.verts[va];
            let pb = geom.verts[vb];
            for m in 0..2 {
                let mut lhs = czero();
                let mut rhs = czero();
                let mut scale_e = 0.0_f64;
                for (s, w) in equad.nodes.iter().zip(&equad.weights) {
                    let p = [pa[0] + (pb[0] - pa[0]) * s, pa[1] + (pb[1] - pa[1]) * s];
                    let mu = if m == 0 { 1.0 - s } else { *s };
                    let wgt = w * len * mu;
                    let lam_a = 1.0 - s;
                    let lam_b = *s;
                    let pu_v = pair.u[t][va] * lam_a + pair.u[t][vb] * lam_b;
                    let pq_v = [
                        pair.q[t][va] * lam_a + pair.q[t][vb] * lam_b,
                        pair.q[t][3 + va] * lam_a + pair.q[t][3 + vb] * lam_b,
                    ];
                    lhs += (pq_v[0] * n[0] + pq_v[1] * n[1] + pair.beta * pu_v) * wgt;
                    let qv = q(p);
                    let rv = qv[0] * n[0] + qv[1] * n[1] + pair.beta * u(p);
                    rhs += rv * wgt;
                    scale_e += rv.norm() * wgt.abs();
                }
                worst = worst.max((lhs - rhs).norm() / scale_e.max(1e-300));
            }
        }
    }
    Ok(worst)
}

/// Elementwise mean `m_K v = (1/|K|) int_K v`.
pub fn element_mean_1d(mesh: &Mesh1D, e: usize, v: &dyn Fn(f64) -> C64) -> Result<C64> {
    let (x0, x1) = mesh.element(e);
    let h = x1 - x0;
    let quad = quad_interval(PROJ_QUAD_DEGREE)?;
    let mut acc = czero();
    for (xi, w) in quad.nodes.iter().zip(&quad.weights) {
        acc += v(x0 + xi * h) * *w;
    }
    Ok(acc)
}

/// L2 projection of a scalar function given in edge arc parameter onto
/// polynomials of degree 1 or 2, in the orthogonal basis of [`EdgePoly`].
pub fn edge_l2_projection(g: &dyn Fn(f64) -> C64, degree: usize) -> Result<EdgePoly> {
    if degree < 1 || degree > 2 {
        return Err(Error::InvalidArgument(format!(
            "edge projection degree must be 1 or 2, got {degree}"
        )));
    }
    let quad = quad_interval(16)?;
    let mut c = [czero(); 3];
    let mut norms = [0.0_f64; 3];
    for (s, w) in quad.nodes.iter().zip(&quad.weights) {
        let t = s - 0.5;
        let basis = [1.0, t, t * t - 1.0 / 12.0];
        let gv = g(*s);
        for m in 0..3 {
            c[m] += gv * (w * basis[m]);
            norms[m] += w * basis[m] * basis[m];
        }
    }
    for m in 0..3 {
        c[m] /= norms[m];
    }
    if degree == 1 {
        c[2] = czero();
    }
    Ok(EdgePoly { c })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{plane_wave_1d, Solution1d};
    use crate::mesh::{build_hexagon_equilateral, build_uniform_1d};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn projection_rejects_zero_beta() {
        let mesh = build_uniform_1d(0.0, 1.0, 4).unwrap();
        let u = |_x: f64| czero();
        let q = |_x: f64| czero();
        assert!(hdg_projection_1d(czero(), &u, &q, &mesh).is_err());
    }

    #[test]
    fn projection_reproduces_compatible_p1_pairs() {
        // global P1 u with constant q satisfies the trace condition exactly
        let mesh = build_hexagon_equilateral(2).unwrap();
        let u = |p: [f64; 2]| c(1.0, 0.5) + c(2.0, -1.0) * p[0] + c(-0.7, 0.3) * p[1];
        let q = |_p: [f64; 2]| [c(0.4, 0.2), c(-1.1, 0.9)];
        let pair = hdg_projection_2d(c(3.0, 1.0), &u, &q, &mesh).unwrap();
        for t in 0..mesh.n_elems() {
            let verts = mesh.tri_vertices(t);
            for (i, v) in verts.iter().enumerate() {
                assert!((pair.u[t][i] - u(*v)).norm() < 1e-12);
                assert!((pair.q[t][i] - q(*v)[0]).norm() < 1e-12);
                assert!((pair.q[t][3 + i] - q(*v)[1]).norm() < 1e-12);
            }
        }
        let res = projection_residuals_2d(&pair, &u, &q, &mesh).unwrap();
        assert!(res < 1e-11, "residual {res}");
    }

    #[test]
    fn projection_rate_second_order() {
        // |Pi_1 u - u| = O(h^2) for the plane-wave u at fixed k = 5, beta = k
        let k = 5.0;
        let sol = plane_wave_1d(k).unwrap();
        let u = |x: f64| sol.u(x);
        let q = |x: f64| sol.q(x);
        let mut errs = Vec::new();
        let mut hs = Vec::new();
        for n in [8usize, 16, 32, 64] {
            let mesh = build_uniform_1d(0.0, 1.0, n).unwrap();
            let pair = hdg_projection_1d(c(k, 0.0), &u, &q, &mesh).unwrap();
            // L2 error of Pi_1 u by quadrature
            let quad = quad_interval(10).unwrap();
            let mut num = 0.0;
            let mut den = 0.0;
            for e in 0..n {
                let (x0, x1) = mesh.element(e);
                let h = x1 - x0;
                for (xi, w) in quad.nodes.iter().zip(&quad.weights) {
                    let x = x0 + xi * h;
                    let pv = pair.u[e][0] * (1.0 - xi) + pair.u[e][1] * *xi;
                    num += w * h * (pv - u(x)).norm_sqr();
                    den += w * h * u(x).norm_sqr();
                }
            }
            errs.push((num / den).sqrt());
            hs.push(mesh.h());
        }
        let slope = crate::dispersion::fit_loglog_slope(&hs, &errs);
        assert!((slope - 2.0).abs() < 0.1, "slope {slope}");
    }

    #[test]
    fn beta_scaling_reduces_divergence_term() {
        // first bound's beta^{-1} term: for u with large div q variation the
        // error at beta = 100 is smaller than at beta = 1
        let mesh = build_uniform_1d(0.0, 1.0, 6).unwrap();
        // u with strong curvature => div q = -u'' large and varying
        let u = |x: f64| c((8.0 * x).sin(), 0.0);
        let q = |x: f64| c(-8.0 * (8.0 * x).cos(), 0.0);
        let quad = quad_interval(12).unwrap();
        let err_for = |beta: f64| -> f64 {
            let pair = hdg_projection_1d(c(beta, 0.0), &u, &q, &mesh).unwrap();
            let mut num = 0.0;
            for e in 0..mesh.n {
                let (x0, x1) = mesh.element(e);
                let h = x1 - x0;
                for (xi, w) in quad.nodes.iter().zip(&quad.weights) {
                    let x = x0 + xi * h;
                    let pv = pair.u[e][0] * (1.0 - xi) + pair.u[e][1] * *xi;
                    num += w * h * (pv - u(x)).norm_sqr();
                }
            }
            num.sqrt()
        };
        assert!(err_for(100.0) < err_for(1.0));
    }

    #[test]
    fn edge_projection_exact_on_polynomials() {
        let g_const = |_s: f64| c(3.3, -1.2);
        let p = edge_l2_projection(&g_const, 1).unwrap();
        assert!((p.eval(0.3) - c(3.3, -1.2)).norm() < 1e-13);
        let g_lin = |s: f64| c(s, 0.0);
        let p = edge_l2_projection(&g_lin, 1).unwrap();
        for s in [0.0, 0.4, 1.0] {
            assert!((p.eval(s) - c(s, 0.0)).norm() < 1e-13);
        }
        let g_quad = |s: f64| c(s * s - 0.2 * s + 1.0, 0.5 * s);
        let p = edge_l2_projection(&g_quad, 2).unwrap();
        for s in [0.1, 0.5, 0.9] {
            assert!((p.eval(s) - g_quad(s)).norm() < 1e-13);
        }
    }

    #[test]
    fn edge_projection_degree2_beats_degree1_on_oscillatory_data() {
        // k = 50 on an edge of length 1/100
        let k = 50.0;
        let len = 0.01;
        let g = |s: f64| (C64::new(0.0, k * len) * s).exp();
        let p1 = edge_l2_projection(&g, 1).unwrap();
        let p2 = edge_l2_projection(&g, 2).unwrap();
        let quad = quad_interval(16).unwrap();
        let mut r1 = 0.0;
        let mut r2 = 0.0;
        for (s, w) in quad.nodes.iter().zip(&quad.weights) {
            r1 += w * (g(*s) - p1.eval(*s)).norm_sqr();
            r2 += w * (g(*s) - p2.eval(*s)).norm_sqr();
        }
        assert!(r2 < r1, "degree-2 residual {r2} vs degree-1 {r1}");
    }

    #[test]
    fn element_mean_is_constant_projection() {
        let mesh = build_uniform_1d(0.0, 1.0, 3).unwrap();
        let v = |x: f64| c(x * x, -x);
        // Q0 commutes with m_K: both are the integral average
        let m = element_mean_1d(&mesh, 1, &v).unwrap();
        // element 1 is [1/3, 2/3]: mean of x^2 is 7/27, mean of -x is -1/2
        assert!((m - c(7.0 / 27.0, -0.5)).norm() < 1e-14);
    }
}
