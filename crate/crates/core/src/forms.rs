//! The sesquilinear form of the trace-eliminated HDG formulation, its two
//! algebraically equivalent rewritings, the load functional, the associated
//! energy norm, and the element-boundary summation identity that connects
//! them.
//!
//! All pairings conjugate the second slot. Fields enter as per-element
//! callables so the same code path evaluates discrete piecewise polynomials
//! and globally smooth exact solutions (whose jumps vanish).

use crate::basis::{quad_interval, quad_triangle, TriGeometry};
use crate::error::Result;
use crate::mesh::{EdgeClass, Mesh1D, TriMesh};
use num_complex::Complex64 as C64;

fn czero() -> C64 {
    C64::new(0.0, 0.0)
}

fn ik(k: f64) -> C64 {
    C64::new(0.0, k)
}

/// Which algebraic form of the sesquilinear functional to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormVariant {
    /// volume divergence form
    A,
    /// integrated-by-parts form with explicit interior jump pairings
    A2,
    /// adjoint-weighted form with conjugated penalty coefficients
    A3,
}

/// A scalar/vector field pair evaluated per element: `u`, `grad u`, `q`,
/// `div q` at physical points.
pub struct Fields2d<'a> {
    pub u: &'a dyn Fn(usize, [f64; 2]) -> C64,
    pub grad_u: &'a dyn Fn(usize, [f64; 2]) -> [C64; 2],
    pub q: &'a dyn Fn(usize, [f64; 2]) -> [C64; 2],
    pub div_q: &'a dyn Fn(usize, [f64; 2]) -> C64,
}

/// 1D analogue of [`Fields2d`].
pub struct Fields1d<'a> {
    pub u: &'a dyn Fn(usize, f64) -> C64,
    pub du: &'a dyn Fn(usize, f64) -> C64,
    pub q: &'a dyn Fn(usize, f64) -> C64,
    pub dq: &'a dyn Fn(usize, f64) -> C64,
}

struct EdgeContext {
    /// physical quadrature points and weights on the edge
    points: Vec<([f64; 2], f64)>,
    /// adjacent elements (one for boundary edges)
    elems: Vec<usize>,
    /// outward normals per adjacent element
    normals: Vec<[f64; 2]>,
    boundary: bool,
    tau: C64,
}

fn edge_contexts(mesh: &TriMesh, tau: &[C64], degree: usize) -> Result<Vec<EdgeContext>> {
    let quad = quad_interval(degree)?;
    let mut out = Vec::with_capacity(mesh.n_edges());
    for (e, edge) in mesh.edges.iter().enumerate() {
        let pa = mesh.vertices[edge.v[0]];
        let pb = mesh.vertices[edge.v[1]];
        let len = mesh.edge_length(e);
        let points: Vec<([f64; 2], f64)> = quad
            .nodes
            .iter()
            .zip(&quad.weights)
            .map(|(s, w)| {
                (
                    [pa[0] + (pb[0] - pa[0]) * s, pa[1] + (pb[1] - pa[1]) * s],
                    w * len,
                )
            })
            .collect();
        let mut normals = Vec::new();
        for &t in &edge.elems {
            let l = (0..3)
                .find(|&l| mesh.tri_edges[t][l] == e)
                .expect("edge adjacency");
            normals.push(mesh.outward_normal(t, l));
        }
        out.push(EdgeContext {
            points,
            elems: edge.elems.clone(),
            normals,
            boundary: edge.class == EdgeClass::Boundary,
            tau: tau[e],
        });
    }
    Ok(out)
}

/// Evaluate the chosen variant of the sesquilinear form on a triangle mesh.
pub fn evaluate_a_2d(
    variant: FormVariant,
    mesh: &TriMesh,
    k: f64,
    tau: &[C64],
    lhs: &Fields2d,
    rhs: &Fields2d,
    degree: usize,
) -> Result<C64> {
    let tquad = quad_triangle(degree)?;
    let mut total = czero();
    // volume terms
    for t in 0..mesh.n_elems() {
        let geom = TriGeometry::new(mesh.tri_vertices(t))?;
        for (rp, w) in tquad.points.iter().zip(&tquad.weights) {
            let p = geom.map_ref(*rp);
            let wgt = w * 2.0 * geom.area;
            let (qu, qv) = ((lhs.q)(t, p), (rhs.q)(t, p));
            let (uu, vv) = ((lhs.u)(t, p), (rhs.u)(t, p));
            let mut acc = qu[0] * qv[0].conj() + qu[1] * qv[1].conj();
            acc -= k * k * uu * vv.conj();
            match variant {
                FormVariant::A => {
                    let dv = (rhs.div_q)(t, p);
                    let gv = (rhs.grad_u)(t, p);
                    acc -= uu * dv.conj();
                    acc -= qu[0] * gv[0].conj() + qu[1] * gv[1].conj();
                }
                FormVariant::A2 => {
                    let gu = (lhs.grad_u)(t, p);
                    let gv = (rhs.grad_u)(t, p);
                    acc += gu[0] * qv[0].conj() + gu[1] * qv[1].conj();
                    acc -= qu[0] * gv[0].conj() + qu[1] * gv[1].conj();
                }
                FormVariant::A3 => {
                    let gu = (lhs.grad_u)(t, p);
                    let du = (lhs.div_q)(t, p);
                    acc += gu[0] * qv[0].conj() + gu[1] * qv[1].conj();
                    acc += du * vv.conj();
                }
            }
            total += acc * wgt;
        }
    }
    // edge terms
    let edges = edge_contexts(mesh, tau, degree)?;
    for ec in &edges {
        let tau_e = ec.tau;
        for (p, w) in &ec.points {
            if !ec.boundary {
                let (t1, t2) = (ec.elems[0], ec.elems[1]);
                let (n1, n2) = (ec.normals[0], ec.normals[1]);
                // jumps and averages of both pairs
                let u1 = (lhs.u)(t1, *p);
                let u2 = (lhs.u)(t2, *p);
                let q1 = (lhs.q)(t1, *p);
                let q2 = (lhs.q)(t2, *p);
                let v1 = (rhs.u)(t1, *p);
                let v2 = (rhs.u)(t2, *p);
                let r1 = (rhs.q)(t1, *p);
                let r2 = (rhs.q)(t2, *p);
                let jump_u = [u1 * n1[0] + u2 * n2[0], u1 * n1[1] + u2 * n2[1]];
                let avg_u = 0.5 * (u1 + u2);
                let jump_q = q1[0] * n1[0] + q1[1] * n1[1] + q2[0] * n2[0] + q2[1] * n2[1];
                let avg_q = [0.5 * (q1[0] + q2[0]), 0.5 * (q1[1] + q2[1])];
                let jump_v = [v1 * n1[0] + v2 * n2[0], v1 * n1[1] + v2 * n2[1]];
                let avg_v = 0.5 * (v1 + v2);
                let jump_r = r1[0] * n1[0] + r1[1] * n1[1] + r2[0] * n2[0] + r2[1] * n2[1];
                let avg_r = [0.5 * (r1[0] + r2[0]), 0.5 * (r1[1] + r2[1])];
                let acc = match variant {
                    FormVariant::A => {
                        // <(1/2tau)[q] + {u}, [r]> + <{q} + (tau/2)[u], [v]>
                        (jump_q / (2.0 * tau_e) + avg_u) * jump_r.conj()
                            + (avg_q[0] + 0.5 * tau_e * jump_u[0]) * jump_v[0].conj()
                            + (avg_q[1] + 0.5 * tau_e * jump_u[1]) * jump_v[1].conj()
                    }
                    FormVariant::A2 => {
                        // <{q},[v]> - <[u],{r}> + <(1/2tau)[q],[r]> + <(tau/2)[u],[v]>
                        avg_q[0] * jump_v[0].conj() + avg_q[1] * jump_v[1].conj()
                            - (jump_u[0] * avg_r[0].conj() + jump_u[1] * avg_r[1].conj())
                            + jump_q / (2.0 * tau_e) * jump_r.conj()
                            + 0.5
                                * tau_e
                                * (jump_u[0] * jump_v[0].conj() + jump_u[1] * jump_v[1].conj())
                    }
                    FormVariant::A3 => {
                        // <[q], (1/2 conj(tau))[r] - {v}> + <[u], (conj(tau)/2)[v] - {r}>
                        jump_q * (jump_r / (2.0 * tau_e.conj()) - avg_v).conj()
                            + jump_u[0] * (0.5 * tau_e.conj() * jump_v[0] - avg_r[0]).conj()
                            + jump_u[1] * (0.5 * tau_e.conj() * jump_v[1] - avg_r[1]).conj()
                    }
                };
                total += acc * *w;
            } else {
                let t1 = ec.elems[0];
                let n = ec.normals[0];
                let uu = (lhs.u)(t1, *p);
                let qu = (lhs.q)(t1, *p);
                let vv = (rhs.u)(t1, *p);
                let rv = (rhs.q)(t1, *p);
                let qn_u = qu[0] * n[0] + qu[1] * n[1];
                let qn_v = rv[0] * n[0] + rv[1] * n[1];
                let acc = match variant {
                    FormVariant::A => {
                        // <(1/(tau+ik))(q.n + tau u), r.n - ik v>
                        (qn_u + tau_e * uu) / (tau_e + ik(k)) * (qn_v - ik(k) * vv).conj()
                    }
                    FormVariant::A2 => {
                        // ik <{u},{v}> + <(1/(tau+ik))(q.n - ik u), r.n - ik v>
                        ik(k) * uu * vv.conj()
                            + (qn_u - ik(k) * uu) / (tau_e + ik(k)) * (qn_v - ik(k) * vv).conj()
                    }
                    FormVariant::A3 => {
                        // <q.n - ik u, (1/(conj(tau) - ik))(r.n - conj(tau) v)>
                        (qn_u - ik(k) * uu)
                            * ((qn_v - tau_e.conj() * vv) / (tau_e.conj() - ik(k))).conj()
                    }
                };
                total += acc * *w;
            }
        }
    }
    Ok(total)
}

/// The load functional `F(v, r) = (f, v) - <(1/(tau+ik)) g, r.n - conj(tau) v>`.
pub fn evaluate_f_2d(
    mesh: &TriMesh,
    k: f64,
    tau: &[C64],
    f: &dyn Fn([f64; 2]) -> C64,
    g: &dyn Fn([f64; 2], [f64; 2]) -> C64,
    test: &Fields2d,
    degree: usize,
) -> Result<C64> {
    let tquad = quad_triangle(degree)?;
    let mut total = czero();
    for t in 0..mesh.n_elems() {
        let geom = TriGeometry::new(mesh.tri_vertices(t))?;
        for (rp, w) in tquad.points.iter().zip(&tquad.weights) {
            let p = geom.map_ref(*rp);
            total += f(p) * (test.u)(t, p).conj() * (w * 2.0 * geom.area);
        }
    }
    let edges = edge_contexts(mesh, tau, degree)?;
    for ec in &edges {
        if !ec.boundary {
            continue;
        }
        let t1 = ec.elems[0];
        let n = ec.normals[0];
        for (p, w) in &ec.points {
            let rv = (test.q)(t1, *p);
            let vv = (test.u)(t1, *p);
            let qn_v = rv[0] * n[0] + rv[1] * n[1];
            // conj(r.n - conj(tau) v) = conj(r.n) - tau conj(v)
            total -= g(*p, n) / (ec.tau + ik(k)) * (qn_v.conj() - ec.tau * vv.conj()) * *w;
        }
    }
    Ok(total)
}

/// The squared energy norm: `||r||^2 + (1/2tau)||[r]||^2_I +
/// (tau/2)||[v]||^2_I + tau/(tau^2+k^2)||r.n - ikv||^2_N` for real `tau`.
pub fn energy_norm_sq_2d(
    mesh: &TriMesh,
    k: f64,
    tau: &[C64],
    fields: &Fields2d,
    degree: usize,
) -> Result<f64> {
    let tquad = quad_triangle(degree)?;
    let mut total = 0.0;
    for t in 0..mesh.n_elems() {
        let geom = TriGeometry::new(mesh.tri_vertices(t))?;
        for (rp, w) in tquad.points.iter().zip(&tquad.weights) {
            let p = geom.map_ref(*rp);
            let r = (fields.q)(t, p);
            total += (r[0].norm_sqr() + r[1].norm_sqr()) * w * 2.0 * geom.area;
        }
    }
    let edges = edge_contexts(mesh, tau, degree)?;
    for ec in &edges {
        let tau_e = ec.tau.re;
        for (p, w) in &ec.points {
            if !ec.boundary {
                let (t1, t2) = (ec.elems[0], ec.elems[1]);
                let (n1, n2) = (ec.normals[0], ec.normals[1]);
                let v1 = (fields.u)(t1, *p);
                let v2 = (fields.u)(t2, *p);
                let r1 = (fields.q)(t1, *p);
                let r2 = (fields.q)(t2, *p);
                let jump_v = [v1 * n1[0] + v2 * n2[0], v1 * n1[1] + v2 * n2[1]];
                let jump_r = r1[0] * n1[0] + r1[1] * n1[1] + r2[0] * n2[0] + r2[1] * n2[1];
                total += w / (2.0 * tau_e) * jump_r.norm_sqr();
                total += w * 0.5 * tau_e * (jump_v[0].norm_sqr() + jump_v[1].norm_sqr());
            } else {
                let t1 = ec.elems[0];
                let n = ec.normals[0];
                let v = (fields.u)(t1, *p);
                let r = (fields.q)(t1, *p);
                let rn = r[0] * n[0] + r[1] * n[1];
                total += w * tau_e / (tau_e * tau_e + k * k) * (rn - ik(k) * v).norm_sqr();
            }
        }
    }
    Ok(total)
}

/// Squared L2 norm of the scalar component.
pub fn l2_norm_sq_scalar_2d(mesh: &TriMesh, fields: &Fields2d, degree: usize) -> Result<f64> {
    let tquad = quad_triangle(degree)?;
    let mut total = 0.0;
    for t in 0..mesh.n_elems() {
        let geom = TriGeometry::new(mesh.tri_vertices(t))?;
        for (rp, w) in tquad.points.iter().zip(&tquad.weights) {
            let p = geom.map_ref(*rp);
            total += (fields.u)(t, p).norm_sqr() * w * 2.0 * geom.area;
        }
    }
    Ok(total)
}

/// Both sides of the element-boundary summation identity
/// `sum_K <v, r.n_K>_dK = <[v], {r}>_I + <{v}, [r]>_(all edges)` for
/// per-element fields `v` (scalar) and `r` (vector).
pub fn magic_formula_sides_2d(
    mesh: &TriMesh,
    v: &dyn Fn(usize, [f64; 2]) -> C64,
    r: &dyn Fn(usize, [f64; 2]) -> [C64; 2],
    degree: usize,
) -> Result<(C64, C64)> {
    let quad = quad_interval(degree)?;
    let mut lhs = czero();
    for t in 0..mesh.n_elems() {
        let geom = TriGeometry::new(mesh.tri_vertices(t))?;
        for l in 0..3 {
            let (va, vb) = (l, (l + 1) % 3);
            let pa = geom.verts[va];
            let pb = geom.verts[vb];
            let n = geom.edge_normal[l];
            let len = geom.edge_len[l];
            for (s, w) in quad.nodes.iter().zip(&quad.weights) {
                let p = [pa[0] + (pb[0] - pa[0]) * s, pa[1] + (pb[1] - pa[1]) * s];
                let rv = r(t, p);
                lhs += v(t, p) * (rv[0] * n[0] + rv[1] * n[1]).conj() * (w * len);
            }
        }
    }
    let mut rhs = czero();
    for (e, edge) in mesh.edges.iter().enumerate() {
        let pa = mesh.vertices[edge.v[0]];
        let pb = mesh.vertices[edge.v[1]];
        let len = mesh.edge_length(e);
        for (s, w) in quad.nodes.iter().zip(&quad.weights) {
            let p = [pa[0] + (pb[0] - pa[0]) * s, pa[1] + (pb[1] - pa[1]) * s];
            if edge.class == EdgeClass::Interior {
                let (t1, t2) = (edge.elems[0], edge.elems[1]);
                let find_n = |t: usize| {
                    let l = (0..3).find(|&l| mesh.tri_edges[t][l] == e).unwrap();
                    mesh.outward_normal(t, l)
                };
                let (n1, n2) = (find_n(t1), find_n(t2));
                let (v1, v2) = (v(t1, p), v(t2, p));
                let (r1, r2) = (r(t1, p), r(t2, p));
                let jump_v = [v1 * n1[0] + v2 * n2[0], v1 * n1[1] + v2 * n2[1]];
                let avg_r = [0.5 * (r1[0] + r2[0]), 0.5 * (r1[1] + r2[1])];
                let avg_v = 0.5 * (v1 + v2);
                let jump_r = r1[0] * n1[0] + r1[1] * n1[1] + r2[0] * n2[0] + r2[1] * n2[1];
                rhs += (jump_v[0] * avg_r[0].conj() + jump_v[1] * avg_r[1].conj()) * *w * len;
                rhs += avg_v * jump_r.conj() * *w * len;
            } else {
                let t1 = edge.elems[0];
                let l = (0..3).find(|&l| mesh.tri_edges[t1][l] == e).unwrap();
                let n = mesh.outward_normal(t1, l);
                let rv = r(t1, p);
                // on the boundary {v} = v and [r] = r.n
                rhs += v(t1, p) * (rv[0] * n[0] + rv[1] * n[1]).conj() * *w * len;
            }
        }
    }
    Ok((lhs, rhs))
}

/// 1D variant of the sesquilinear form; point edges make the pairings plain
/// products.
pub fn evaluate_a_1d(
    variant: FormVariant,
    mesh: &Mesh1D,
    k: f64,
    tau: &[C64],
    lhs: &Fields1d,
    rhs: &Fields1d,
    degree: usize,
) -> Result<C64> {
    let quad = quad_interval(degree)?;
    let mut total = czero();
    let n = mesh.n;
    for e in 0..n {
        let (x0, x1) = mesh.element(e);
        let h = x1 - x0;
        for (xi, w) in quad.nodes.iter().zip(&quad.weights) {
            let x = x0 + xi * h;
            let wgt = w * h;
            let qu = (lhs.q)(e, x);
            let qv = (rhs.q)(e, x);
            let uu = (lhs.u)(e, x);
            let vv = (rhs.u)(e, x);
            let mut acc = qu * qv.conj() - k * k * uu * vv.conj();
            match variant {
                FormVariant::A => {
                    acc -= uu * (rhs.dq)(e, x).conj();
                    acc -= qu * (rhs.du)(e, x).conj();
                }
                FormVariant::A2 => {
                    acc += (lhs.du)(e, x) * qv.conj();
                    acc -= qu * (rhs.du)(e, x).conj();
                }
                FormVariant::A3 => {
                    acc += (lhs.du)(e, x) * qv.conj();
                    acc += (lhs.dq)(e, x) * vv.conj();
                }
            }
            total += acc * wgt;
        }
    }
    // interior nodes
    for i in 1..n {
        let x = mesh.nodes[i];
        let tau_e = tau[i];
        // left element e = i-1 has n = +1 here, right element has n = -1
        let u1 = (lhs.u)(i - 1, x);
        let u2 = (lhs.u)(i, x);
        let q1 = (lhs.q)(i - 1, x);
        let q2 = (lhs.q)(i, x);
        let v1 = (rhs.u)(i - 1, x);
        let v2 = (rhs.u)(i, x);
        let r1 = (rhs.q)(i - 1, x);
        let r2 = (rhs.q)(i, x);
        let jump_u = u1 - u2;
        let avg_u = 0.5 * (u1 + u2);
        let jump_q = q1 - q2;
        let avg_q = 0.5 * (q1 + q2);
        let jump_v = v1 - v2;
        let avg_v = 0.5 * (v1 + v2);
        let jump_r = r1 - r2;
        let avg_r = 0.5 * (r1 + r2);
        total += match variant {
            FormVariant::A => {
                (jump_q / (2.0 * tau_e) + avg_u) * jump_r.conj()
                    + (avg_q + 0.5 * tau_e * jump_u) * jump_v.conj()
            }
            FormVariant::A2 => {
                avg_q * jump_v.conj() - jump_u * avg_r.conj()
                    + jump_q / (2.0 * tau_e) * jump_r.conj()
                    + 0.5 * tau_e * jump_u * jump_v.conj()
            }
            FormVariant::A3 => {
                jump_q * (jump_r / (2.0 * tau_e.conj()) - avg_v).conj()
                    + jump_u * (0.5 * tau_e.conj() * jump_v - avg_r).conj()
            }
        };
    }
    // boundary nodes: (x = a, n = -1, element 0) and (x = b, n = +1, element n-1)
    for (x, nrm, e, tau_e) in [(mesh.a, -1.0, 0usize, tau[0]), (mesh.b, 1.0, n - 1, tau[n])] {
        let uu = (lhs.u)(e, x);
        let qu = (lhs.q)(e, x);
        let vv = (rhs.u)(e, x);
        let rv = (rhs.q)(e, x);
        let qn_u = qu * nrm;
        let qn_v = rv * nrm;
        total += match variant {
            FormVariant::A => (qn_u + tau_e * uu) / (tau_e + ik(k)) * (qn_v - ik(k) * vv).conj(),
            FormVariant::A2 => {
                ik(k) * uu * vv.conj()
                    + (qn_u - ik(k) * uu) / (tau_e + ik(k)) * (qn_v - ik(k) * vv).conj()
            }
            FormVariant::A3 => {
                (qn_u - ik(k) * uu) * ((qn_v - tau_e.conj() * vv) / (tau_e.conj() - ik(k))).conj()
            }
        };
    }
    Ok(total)
}

/// 1D load functional.
pub fn evaluate_f_1d(
    mesh: &Mesh1D,
    k: f64,
    tau: &[C64],
    f: &dyn Fn(f64) -> C64,
    g: &dyn Fn(f64, f64) -> C64,
    test: &Fields1d,
    degree: usize,
) -> Result<C64> {
    let quad = quad_interval(degree)?;
    let mut total = czero();
    for e in 0..mesh.n {
        let (x0, x1) = mesh.element(e);
        let h = x1 - x0;
        for (xi, w) in quad.nodes.iter().zip(&quad.weights) {
            let x = x0 + xi * h;
            total += f(x) * (test.u)(e, x).conj() * (w * h);
        }
    }
    for (x, nrm, e, tau_e) in [
        (mesh.a, -1.0, 0usize, tau[0]),
        (mesh.b, 1.0, mesh.n - 1, tau[mesh.n]),
    ] {
        let rv = (test.q)(e, x) * nrm;
        let vv = (test.u)(e, x);
        total -= g(x, nrm) / (tau_e + ik(k)) * (rv.conj() - tau_e * vv.conj());
    }
    Ok(total)
}

/// Wrap a discrete 2D HDG solution as form fields.
pub fn solution_fields_2d(sol: &crate::hdg::HdgSolution2d) -> SolutionFields2d<'_> {
    SolutionFields2d { sol }
}

/// Borrowing adapter exposing per-element evaluation of a discrete solution
/// at physical points.
pub struct SolutionFields2d<'a> {
    sol: &'a crate::hdg::HdgSolution2d,
}

impl SolutionFields2d<'_> {
    pub fn u(&self, t: usize, p: [f64; 2]) -> C64 {
        let geom = TriGeometry::new(self.sol.mesh.tri_vertices(t)).expect("valid element");
        let lam = barycentric(&geom, p);
        (0..3).map(|i| self.sol.u[t][i] * lam[i]).sum()
    }

    pub fn q(&self, t: usize, p: [f64; 2]) -> [C64; 2] {
        let geom = TriGeometry::new(self.sol.mesh.tri_vertices(t)).expect("valid element");
        let lam = barycentric(&geom, p);
        [
            (0..3).map(|i| self.sol.q[t][i] * lam[i]).sum(),
            (0..3).map(|i| self.sol.q[t][3 + i] * lam[i]).sum(),
        ]
    }

    pub fn grad_u(&self, t: usize) -> [C64; 2] {
        let geom = TriGeometry::new(self.sol.mesh.tri_vertices(t)).expect("valid element");
        let mut g = [czero(); 2];
        for i in 0..3 {
            g[0] += self.sol.u[t][i] * geom.grads[i][0];
            g[1] += self.sol.u[t][i] * geom.grads[i][1];
        }
        g
    }

    pub fn div_q(&self, t: usize) -> C64 {
        let geom = TriGeometry::new(self.sol.mesh.tri_vertices(t)).expect("valid element");
        let mut d = czero();
        for i in 0..3 {
            d += self.sol.q[t][i] * geom.grads[i][0] + self.sol.q[t][3 + i] * geom.grads[i][1];
        }
        d
    }
}

pub(crate) fn barycentric(geom: &TriGeometry, p: [f64; 2]) -> [f64; 3] {
    // lambda_i(p) = lambda_i(v_i-affine): use the P1 gradients
    let [p0, _, _] = geom.verts;
    let l1 = geom.grads[1][0] * (p[0] - p0[0]) + geom.grads[1][1] * (p[1] - p0[1]);
    let l2 = geom.grads[2][0] * (p[0] - p0[0]) + geom.grads[2][1] * (p[1] - p0[1]);
    [1.0 - l1 - l2, l1, l2]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_hexagon_equilateral;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    type Coef = [C64; 6];

    fn random_coeffs(n: usize, rng: &mut impl Rng) -> (Vec<Coef>, Vec<[Coef; 2]>) {
        let mut su = Vec::with_capacity(n);
        let mut sq = Vec::with_capacity(n);
        for _ in 0..n {
            su.push(std::array::from_fn(|_| {
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            }));
            sq.push([
                std::array::from_fn(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))),
                std::array::from_fn(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))),
            ]);
        }
        (su, sq)
    }

    fn eval(coef: &Coef, p: [f64; 2]) -> C64 {
        coef[0]
            + coef[1] * p[0]
            + coef[2] * p[1]
            + coef[3] * p[0] * p[0]
            + coef[4] * p[0] * p[1]
            + coef[5] * p[1] * p[1]
    }

    fn eval_grad(coef: &Coef, p: [f64; 2]) -> [C64; 2] {
        [
            coef[1] + 2.0 * coef[3] * p[0] + coef[4] * p[1],
            coef[2] + coef[4] * p[0] + 2.0 * coef[5] * p[1],
        ]
    }

    // builds the four field closures over (su, sq); macro keeps borrows local
    macro_rules! fields {
        ($su:expr, $sq:expr) => {{
            let su = &$su;
            let sq = &$sq;
            (
                move |t: usize, p: [f64; 2]| eval(&su[t], p),
                move |t: usize, p: [f64; 2]| eval_grad(&su[t], p),
                move |t: usize, p: [f64; 2]| [eval(&sq[t][0], p), eval(&sq[t][1], p)],
                move |t: usize, p: [f64; 2]| {
                    let gx = eval_grad(&sq[t][0], p);
                    let gy = eval_grad(&sq[t][1], p);
                    gx[0] + gy[1]
                },
            )
        }};
    }

    #[test]
    fn magic_formula_identity() {
        let mesh = build_hexagon_equilateral(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (su, sq) = random_coeffs(mesh.n_elems(), &mut rng);
        let v = |t: usize, p: [f64; 2]| eval(&su[t], p);
        let r = |t: usize, p: [f64; 2]| [eval(&sq[t][0], p), eval(&sq[t][1], p)];
        let (lhs, rhs) = magic_formula_sides_2d(&mesh, &v, &r, 10).unwrap();
        assert!(
            (lhs - rhs).norm() <= 1e-12 * lhs.norm().max(rhs.norm()),
            "lhs {lhs} rhs {rhs}"
        );
    }

    #[test]
    fn form_variants_agree_on_random_pieces() {
        let mesh = build_hexagon_equilateral(2).unwrap();
        let k = 2.5;
        let tau: Vec<C64> = (0..mesh.n_edges()).map(|_| c(1.3, 0.6)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..20 {
            let (su_a, sq_a) = random_coeffs(mesh.n_elems(), &mut rng);
            let (su_b, sq_b) = random_coeffs(mesh.n_elems(), &mut rng);
            let (ua, ga, qa, da) = fields!(su_a, sq_a);
            let (ub, gb, qb, db) = fields!(su_b, sq_b);
            let lhs = Fields2d {
                u: &ua,
                grad_u: &ga,
                q: &qa,
                div_q: &da,
            };
            let rhs = Fields2d {
                u: &ub,
                grad_u: &gb,
                q: &qb,
                div_q: &db,
            };
            let v_a = evaluate_a_2d(FormVariant::A, &mesh, k, &tau, &lhs, &rhs, 10).unwrap();
            let v_a2 = evaluate_a_2d(FormVariant::A2, &mesh, k, &tau, &lhs, &rhs, 10).unwrap();
            let v_a3 = evaluate_a_2d(FormVariant::A3, &mesh, k, &tau, &lhs, &rhs, 10).unwrap();
            let scale = v_a.norm();
            assert!(
                (v_a - v_a2).norm() <= 1e-11 * scale,
                "A vs A2: {v_a} {v_a2}"
            );
            assert!(
                (v_a - v_a3).norm() <= 1e-11 * scale,
                "A vs A3: {v_a} {v_a3}"
            );
        }
    }

    #[test]
    fn solved_solution_satisfies_variational_problem_1d() {
        // A(u_h, q_h; v, r) = F(v, r) for discrete test pairs
        use crate::exact::plane_wave_1d;
        use crate::hdg::{penalty_field_1d, solve_hdg_1d, GhDegree, PenaltyRule};
        use crate::mesh::build_uniform_1d;
        let k = 5.0;
        let n = 10;
        let mesh = build_uniform_1d(0.0, 1.0, n).unwrap();
        let pw = plane_wave_1d(k).unwrap();
        let sol = solve_hdg_1d(&mesh, k, PenaltyRule::RealK, &pw, GhDegree::P1).unwrap();
        let tau = penalty_field_1d(&mesh, k, PenaltyRule::RealK).unwrap();
        let h = mesh.h();
        let uh = |e: usize, x: f64| sol.eval_u(e, x);
        let duh = |e: usize, _x: f64| (sol.u[e][1] - sol.u[e][0]) / h;
        let qh = |e: usize, x: f64| sol.eval_q(e, x);
        let dqh = |e: usize, _x: f64| (sol.q[e][1] - sol.q[e][0]) / h;
        let lhs = Fields1d {
            u: &uh,
            du: &duh,
            q: &qh,
            dq: &dqh,
        };
        let fz = |_x: f64| czero();
        let g = |x: f64, nn: f64| crate::exact::Solution1d::g(&pw, x, nn);
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for _ in 0..10 {
            // random discrete test pair
            let vc: Vec<[C64; 2]> = (0..n)
                .map(|_| {
                    [
                        c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                        c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                    ]
                })
                .collect();
            let rc: Vec<[C64; 2]> = (0..n)
                .map(|_| {
                    [
                        c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                        c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                    ]
                })
                .collect();
            let ev = |coef: &Vec<[C64; 2]>, e: usize, x: f64| {
                let (x0, x1) = mesh.element(e);
                let s = (x - x0) / (x1 - x0);
                coef[e][0] * (1.0 - s) + coef[e][1] * s
            };
            let v = |e: usize, x: f64| ev(&vc, e, x);
            let dv = |e: usize, _x: f64| (vc[e][1] - vc[e][0]) / h;
            let r = |e: usize, x: f64| ev(&rc, e, x);
            let dr = |e: usize, _x: f64| (rc[e][1] - rc[e][0]) / h;
            let test = Fields1d {
                u: &v,
                du: &dv,
                q: &r,
                dq: &dr,
            };
            let a = evaluate_a_1d(FormVariant::A, &mesh, k, &tau, &lhs, &test, 12).unwrap();
            let f = evaluate_f_1d(&mesh, k, &tau, &fz, &g, &test, 12).unwrap();
            let scale = a.norm().max(f.norm()).max(1e-12);
            assert!((a - f).norm() <= 1e-9 * scale, "{a} vs {f}");
        }
    }

    #[test]
    fn energy_norm_identity_real_tau() {
        // Re A(v,r; v,r) + k^2 ||v||^2 equals the energy norm for tau = k
        let mesh = build_hexagon_equilateral(2).unwrap();
        let k = 3.0;
        let tau: Vec<C64> = (0..mesh.n_edges()).map(|_| c(k, 0.0)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (su, sq) = random_coeffs(mesh.n_elems(), &mut rng);
        let (u, g, q, d) = fields!(su, sq);
        let lhs = Fields2d {
            u: &u,
            grad_u: &g,
            q: &q,
            div_q: &d,
        };
        let a_vv = evaluate_a_2d(FormVariant::A2, &mesh, k, &tau, &lhs, &lhs, 10).unwrap();
        let l2 = l2_norm_sq_scalar_2d(&mesh, &lhs, 10).unwrap();
        let left = a_vv.re + k * k * l2;
        let right = energy_norm_sq_2d(&mesh, k, &tau, &lhs, 10).unwrap();
        assert!(
            (left - right).abs() <= 1e-11 * right.abs().max(1.0),
            "{left} vs {right}"
        );
    }
}
