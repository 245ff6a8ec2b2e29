//! Element-local P2 postprocessing of `u_h` driven by the numerical flux.
//!
//! On each element the postprocessed field solves
//! `(grad u*, grad v)_K - k^2 (u*, v)_K = (f, v)_K - <qhat . n, v>_dK`
//! for all zero-mean P2 test functions, plus the mean constraint
//! `m_K u* = m_K u_h`. The zero-mean test space is realized as
//! `{ m_i - m_K m_i }` over the non-constant centered monomials, and the
//! mean constraint is appended as a final row, giving a square local system.

use crate::basis::{quad_interval, quad_triangle, TriGeometry};
use crate::error::{Error, Result};
use crate::hdg::{numerical_flux_2d, GhDegree, HdgSolution1d, HdgSolution2d};
use crate::linalg::DenseComplexMatrix;
use num_complex::Complex64 as C64;

fn czero() -> C64 {
    C64::new(0.0, 0.0)
}

/// Relative pivot threshold for the local P2 operator; `k^2` near a
/// Neumann-type element eigenvalue makes it singular.
const POST_PIVOT_TOL: f64 = 1e-10;

/// Per-element P2 coefficients of the postprocessed scalar in centered
/// scaled monomials `{1, X, X^2}` with `X = (x - x_c)/h`.
#[derive(Debug, Clone)]
pub struct PostprocessedField1d {
    pub coeffs: Vec<[C64; 3]>,
    pub mesh_h: f64,
}

impl PostprocessedField1d {
    pub fn eval(&self, mesh: &crate::mesh::Mesh1D, e: usize, x: f64) -> C64 {
        let (x0, x1) = mesh.element(e);
        let xc = 0.5 * (x0 + x1);
        let xs = (x - xc) / (x1 - x0);
        let c = &self.coeffs[e];
        c[0] + c[1] * xs + c[2] * (xs * xs)
    }
}

/// Per-element P2 coefficients in centered scaled monomials
/// `{1, X, Y, X^2, XY, Y^2}` with `(X, Y) = (p - centroid)/h_K`.
#[derive(Debug, Clone)]
pub struct PostprocessedField2d {
    pub coeffs: Vec<[C64; 6]>,
}

impl PostprocessedField2d {
    pub fn eval(&self, mesh: &crate::mesh::TriMesh, t: usize, rp: [f64; 2]) -> C64 {
        let geom = TriGeometry::new(mesh.tri_vertices(t)).expect("valid element");
        let phys = geom.map_ref(rp);
        self.eval_phys(&geom, t, phys)
    }

    pub fn eval_phys(&self, geom: &TriGeometry, t: usize, p: [f64; 2]) -> C64 {
        let cen = geom.centroid();
        let hk = geom.diameter();
        let xs = (p[0] - cen[0]) / hk;
        let ys = (p[1] - cen[1]) / hk;
        let c = &self.coeffs[t];
        c[0] + c[1] * xs + c[2] * ys + c[3] * (xs * xs) + c[4] * (xs * ys) + c[5] * (ys * ys)
    }
}

/// Postprocess one 1D element given its mean value, the single-valued
/// endpoint fluxes (values of the scalar flux field), and the source.
pub fn postprocess_element_1d(
    x0: f64,
    h: f64,
    k: f64,
    u_mean: C64,
    flux_left: C64,
    flux_right: C64,
    f: Option<&dyn Fn(f64) -> C64>,
    elem: usize,
) -> Result<[C64; 3]> {
    let quad = quad_interval(8)?;
    let xc = x0 + 0.5 * h;
    // basis {1, X, X^2}; means over the element: [1, 0, 1/12]
    let mono = |x: f64, m: usize| -> f64 {
        let xs = (x - xc) / h;
        match m {
            0 => 1.0,
            1 => xs,
            _ => xs * xs,
        }
    };
    let dmono = |x: f64, m: usize| -> f64 {
        let xs = (x - xc) / h;
        match m {
            0 => 0.0,
            1 => 1.0 / h,
            _ => 2.0 * xs / h,
        }
    };
    let means = [1.0, 0.0, 1.0 / 12.0];
    let mut a = DenseComplexMatrix::zeros(3);
    let mut rhs = vec![czero(); 3];
    for (ti, tm) in [1usize, 2].iter().enumerate() {
        // test function w = mono_tm - mean(mono_tm)
        for jm in 0..3 {
            let mut acc = czero();
            for (xi, w) in quad.nodes.iter().zip(&quad.weights) {
                let x = x0 + xi * h;
                let wgt = w * h;
                let wv = mono(x, *tm) - means[*tm];
                let dwv = dmono(x, *tm);
                acc += C64::new(wgt * (dmono(x, jm) * dwv - k * k * mono(x, jm) * wv), 0.0);
            }
            a.set(ti, jm, acc);
        }
        let mut load = czero();
        if let Some(f) = f {
            for (xi, w) in quad.nodes.iter().zip(&quad.weights) {
                let x = x0 + xi * h;
                load += f(x) * (w * h * (mono(x, *tm) - means[*tm]));
            }
        }
        // -<qhat n, w>_dK = -(flux_right * w(x1) - flux_left * w(x0))
        let w1 = mono(x0 + h, *tm) - means[*tm];
        let w0 = mono(x0, *tm) - means[*tm];
        load -= flux_right * w1 - flux_left * w0;
        rhs[ti] = load;
    }
    // mean row
    for jm in 0..3 {
        a.set(2, jm, C64::new(means[jm], 0.0));
    }
    rhs[2] = u_mean;
    let x = a.lu_with_tol(POST_PIVOT_TOL).map_err(|e| match e {
        Error::SingularMatrix { .. } => Error::PostprocessSingular {
            element: elem,
            kh: k * h,
        },
        other => other,
    })?;
    let sol = x.solve(&rhs);
    Ok([sol[0], sol[1], sol[2]])
}

/// Postprocess every element of a solved 1D problem.
pub fn postprocess_all_1d(
    sol: &HdgSolution1d,
    f: Option<&dyn Fn(f64) -> C64>,
) -> Result<PostprocessedField1d> {
    let mut coeffs = Vec::with_capacity(sol.mesh.n);
    for e in 0..sol.mesh.n {
        let (x0, x1) = sol.mesh.element(e);
        let u_mean = 0.5 * (sol.u[e][0] + sol.u[e][1]);
        let c = postprocess_element_1d(
            x0,
            x1 - x0,
            sol.k,
            u_mean,
            sol.flux_at_node(e),
            sol.flux_at_node(e + 1),
            f,
            e,
        )?;
        coeffs.push(c);
    }
    Ok(PostprocessedField1d {
        coeffs,
        mesh_h: sol.mesh.h(),
    })
}

/// Postprocess one triangle given the flux polynomials on its three local
/// edges (`qhat . n_K` in the element's outward normal, canonical edge
/// parametrization).
pub fn postprocess_element_2d(
    geom: &TriGeometry,
    k: f64,
    u_mean: C64,
    edge_flux: [&crate::hdg::EdgePoly; 3],
    edge_reversed: [bool; 3],
    f: Option<&dyn Fn([f64; 2]) -> C64>,
    elem: usize,
) -> Result<[C64; 6]> {
    let tquad = quad_triangle(8)?;
    let equad = quad_interval(10)?;
    let cen = geom.centroid();
    let hk = geom.diameter();
    let mono = |p: [f64; 2], m: usize| -> f64 {
        let xs = (p[0] - cen[0]) / hk;
        let ys = (p[1] - cen[1]) / hk;
        match m {
            0 => 1.0,
            1 => xs,
            2 => ys,
            3 => xs * xs,
            4 => xs * ys,
            _ => ys * ys,
        }
    };
    let dmono = |p: [f64; 2], m: usize| -> [f64; 2] {
        let xs = (p[0] - cen[0]) / hk;
        let ys = (p[1] - cen[1]) / hk;
        match m {
            0 => [0.0, 0.0],
            1 => [1.0 / hk, 0.0],
            2 => [0.0, 1.0 / hk],
            3 => [2.0 * xs / hk, 0.0],
            4 => [ys / hk, xs / hk],
            _ => [0.0, 2.0 * ys / hk],
        }
    };
    // means of the monomials over this element
    let mut means = [0.0_f64; 6];
    for (rp, w) in tquad.points.iter().zip(&tquad.weights) {
        let phys = geom.map_ref(*rp);
        for m in 0..6 {
            means[m] += w * 2.0 * mono(phys, m);
        }
    }
    let mut a = DenseComplexMatrix::zeros(6);
    let mut rhs = vec![czero(); 6];
    for ti in 0..5 {
        let tm = ti + 1;
        for jm in 0..6 {
            let mut acc = czero();
            for (rp, w) in tquad.points.iter().zip(&tquad.weights) {
                let phys = geom.map_ref(*rp);
                let wgt = w * 2.0 * geom.area;
                let wv = mono(phys, tm) - means[tm];
                let dw = dmono(phys, tm);
                let dj = dmono(phys, jm);
                acc += C64::new(
                    wgt * (dj[0] * dw[0] + dj[1] * dw[1] - k * k * mono(phys, jm) * wv),
                    0.0,
                );
            }
            a.set(ti, jm, acc);
        }
        let mut load = czero();
        if let Some(f) = f {
            for (rp, w) in tquad.points.iter().zip(&tquad.weights) {
                let phys = geom.map_ref(*rp);
                load += f(phys) * (w * 2.0 * geom.area * (mono(phys, tm) - means[tm]));
            }
        }
        // -<qhat . n, w>_dK edge by edge; the flux polynomial lives in the
        // canonical edge parameter, the element may traverse it reversed
        for l in 0..3 {
            let (va, vb) = (l, (l + 1) % 3);
            let pa = geom.verts[va];
            let pb = geom.verts[vb];
            let len = geom.edge_len[l];
            for (s, w) in equad.nodes.iter().zip(&equad.weights) {
                let p = [pa[0] + (pb[0] - pa[0]) * s, pa[1] + (pb[1] - pa[1]) * s];
                let s_canon = if edge_reversed[l] { 1.0 - s } else { *s };
                let flux = edge_flux[l].eval(s_canon);
                load -= flux * (w * len * (mono(p, tm) - means[tm]));
            }
        }
        rhs[ti] = load;
    }
    for jm in 0..6 {
        a.set(5, jm, C64::new(means[jm], 0.0));
    }
    rhs[5] = u_mean;
    let lu = a.lu_with_tol(POST_PIVOT_TOL).map_err(|e| match e {
        Error::SingularMatrix { .. } => Error::PostprocessSingular {
            element: elem,
            kh: k * geom.diameter(),
        },
        other => other,
    })?;
    let sol = lu.solve(&rhs);
    Ok([sol[0], sol[1], sol[2], sol[3], sol[4], sol[5]])
}

/// Postprocess every element of a solved 2D problem.
///
/// Requires the solve to have been run with the degree-2 boundary datum;
/// the richer projection is exactly what feeds the boundary numerical flux
/// here.
pub fn postprocess_all_2d(
    sol: &HdgSolution2d,
    f: Option<&dyn Fn([f64; 2]) -> C64>,
) -> Result<PostprocessedField2d> {
    if sol.gh_degree != GhDegree::P2 {
        return Err(Error::InvalidArgument(
            "postprocessing requires the solve to use the degree-2 boundary datum".into(),
        ));
    }
    let mesh = &sol.mesh;
    let mut coeffs = Vec::with_capacity(mesh.n_elems());
    for t in 0..mesh.n_elems() {
        let geom = TriGeometry::new(mesh.tri_vertices(t))?;
        // mean of u_h on K: P1 vertex average
        let u_mean = (sol.u[t][0] + sol.u[t][1] + sol.u[t][2]) / 3.0;
        let mut fluxes = Vec::with_capacity(3);
        let mut reversed = [false; 3];
        for l in 0..3 {
            let e = mesh.tri_edges[t][l];
            let edge = &mesh.edges[e];
            let side = edge.elems.iter().position(|&x| x == t).unwrap();
            // evaluate the single-valued flux from side 0 and flip the sign
            // when this element is on the other side (opposite normal)
            let mut poly = numerical_flux_2d(sol, e, 0);
            if side == 1 {
                for c in poly.c.iter_mut() {
                    *c = -*c;
                }
            }
            let (va, vb) = mesh.local_edge_vertices(t, l);
            reversed[l] = va > vb;
            fluxes.push(poly);
        }
        let c = postprocess_element_2d(
            &geom,
            sol.k,
            u_mean,
            [&fluxes[0], &fluxes[1], &fluxes[2]],
            reversed,
            f,
            t,
        )?;
        coeffs.push(c);
    }
    Ok(PostprocessedField2d { coeffs })
}

/// Residual of the defining identity on one 1D element, relative to the
/// load norm: plugging the computed coefficients back into the bilinear
/// rows must reproduce the right-hand side.
pub fn postprocess_residual_1d(
    field: &PostprocessedField1d,
    sol: &HdgSolution1d,
    f: Option<&dyn Fn(f64) -> C64>,
    e: usize,
) -> Result<f64> {
    let (x0, x1) = sol.mesh.element(e);
    let h = x1 - x0;
    let k = sol.k;
    let quad = quad_interval(10)?;
    let xc = x0 + 0.5 * h;
    let mono = |x: f64, m: usize| -> f64 {
        let xs = (x - xc) / h;
        [1.0, xs, xs * xs][m]
    };
    let dmono = |x: f64, m: usize| -> f64 {
        let xs = (x - xc) / h;
        [0.0, 1.0 / h, 2.0 * xs / h][m]
    };
    let means = [1.0, 0.0, 1.0 / 12.0];
    let c = &field.coeffs[e];
    let mut defect_sq = 0.0_f64;
    let mut scale_sq = 0.0_f64;
    for tm in [1usize, 2] {
        let mut lhs = czero();
        let mut load = czero();
        for (xi, w) in quad.nodes.iter().zip(&quad.weights) {
            let x = x0 + xi * h;
            let wgt = w * h;
            let wv = mono(x, tm) - means[tm];
            let dwv = dmono(x, tm);
            let du: C64 = (0..3).map(|m| c[m] * dmono(x, m)).sum();
            let uv: C64 = (0..3).map(|m| c[m] * mono(x, m)).sum();
            lhs += (du * dwv - k * k * uv * wv) * wgt;
            if let Some(f) = f {
                load += f(x) * (wgt * wv);
            }
        }
        let w1 = mono(x1, tm) - means[tm];
        let w0 = mono(x0, tm) - means[tm];
        load -= sol.flux_at_node(e + 1) * w1 - sol.flux_at_node(e) * w0;
        defect_sq += (lhs - load).norm_sqr();
        scale_sq += load.norm_sqr().max(lhs.norm_sqr());
    }
    Ok(defect_sq.sqrt() / scale_sq.sqrt().max(1e-300))
}

/// Residual of the defining identity on one 2D element, relative to the
/// load scale, together with the mean-constraint defect.
pub fn postprocess_residual_2d(
    field: &PostprocessedField2d,
    sol: &HdgSolution2d,
    f: Option<&dyn Fn([f64; 2]) -> C64>,
    t: usize,
) -> Result<(f64, f64)> {
    let mesh = &sol.mesh;
    let geom = TriGeometry::new(mesh.tri_vertices(t))?;
    let k = sol.k;
    let tquad = quad_triangle(10)?;
    let equad = quad_interval(10)?;
    let cen = geom.centroid();
    let hk = geom.diameter();
    let mono = |p: [f64; 2], m: usize| -> f64 {
        let xs = (p[0] - cen[0]) / hk;
        let ys = (p[1] - cen[1]) / hk;
        [1.0, xs, ys, xs * xs, xs * ys, ys * ys][m]
    };
    let dmono = |p: [f64; 2], m: usize| -> [f64; 2] {
        let xs = (p[0] - cen[0]) / hk;
        let ys = (p[1] - cen[1]) / hk;
        match m {
            0 => [0.0, 0.0],
            1 => [1.0 / hk, 0.0],
            2 => [0.0, 1.0 / hk],
            3 => [2.0 * xs / hk, 0.0],
            4 => [ys / hk, xs / hk],
            _ => [0.0, 2.0 * ys / hk],
        }
    };
    let mut means = [0.0_f64; 6];
    for (rp, w) in tquad.points.iter().zip(&tquad.weights) {
        let phys = geom.map_ref(*rp);
        for m in 0..6 {
            means[m] += w * 2.0 * mono(phys, m);
        }
    }
    let c = &field.coeffs[t];
    let mut defect_sq = 0.0_f64;
    let mut scale_sq = 0.0_f64;
    for tm in 1..6 {
        let mut lhs = czero();
        let mut load = czero();
        for (rp, w) in tquad.points.iter().zip(&tquad.weights) {
            let phys = geom.map_ref(*rp);
            let wgt = w * 2.0 * geom.area;
            let wv = mono(phys, tm) - means[tm];
            let dw = dmono(phys, tm);
            let mut du = [czero(); 2];
            let mut uv = czero();
            for m in 0..6 {
                let dm = dmono(phys, m);
                du[0] += c[m] * dm[0];
                du[1] += c[m] * dm[1];
                uv += c[m] * mono(phys, m);
            }
            lhs += (du[0] * dw[0] + du[1] * dw[1] - k * k * uv * wv) * wgt;
            if let Some(f) = f {
                load += f(phys) * (wgt * wv);
            }
        }
        for l in 0..3 {
            let e = mesh.tri_edges[t][l];
            let edge = &mesh.edges[e];
            let side = edge.elems.iter().position(|&x| x == t).unwrap();
            let mut poly = numerical_flux_2d(sol, e, 0);
            if side == 1 {
                for cc in poly.c.iter_mut() {
                    *cc = -*cc;
                }
            }
            let (va, vb) = mesh.local_edge_vertices(t, l);
            let rev = va > vb;
            let pa = geom.verts[l];
            let pb = geom.verts[(l + 1) % 3];
            let len = geom.edge_len[l];
            for (s, w) in equad.nodes.iter().zip(&equad.weights) {
                let p = [pa[0] + (pb[0] - pa[0]) * s, pa[1] + (pb[1] - pa[1]) * s];
                let s_canon = if rev { 1.0 - s } else { *s };
                load -= poly.eval(s_canon) * (w * len * (mono(p, tm) - means[tm]));
            }
        }
        defect_sq += (lhs - load).norm_sqr();
        scale_sq += load.norm_sqr().max(lhs.norm_sqr());
    }
    // defect of the whole row vector relative to the load-vector norm;
    // individual rows can vanish by symmetry
    let worst = defect_sq.sqrt() / scale_sq.sqrt().max(1e-300);
    // mean-constraint defect
    let u_mean = (sol.u[t][0] + sol.u[t][1] + sol.u[t][2]) / 3.0;
    let mut star_mean = czero();
    for m in 0..6 {
        star_mean += c[m] * means[m];
    }
    let mean_defect = (star_mean - u_mean).norm() / u_mean.norm().max(1e-300);
    Ok((worst, mean_defect))
}
