//! The linear HDG method: per-element local operators, static condensation
//! to the trace space, global trace solve, and local recovery of
//! `(u_h, q_h)` and the numerical flux `q_hat`.
//!
//! Local systems keep the sign convention `q = -grad u`; flipping it flips
//! the sign of the optimal real penalty parameter, so it is fixed here once
//! and for all.
//!
//! Interior unknowns per element: 4 in 1D (`u`, `q` at the two endpoints)
//! and 9 on a triangle (3 for `u_h`, 6 for `q_h`). Trace unknowns: one per
//! node in 1D, two per edge in 2D (P1 on the edge, canonical low-to-high
//! vertex orientation).

use crate::basis::{quad_interval, IntervalGeometry, TriGeometry};
use crate::error::{Error, Result};
use crate::exact::{Solution1d, Solution2d};
use crate::linalg::{
    solve_tridiagonal, DenseComplexMatrix, DenseLu, SparseBuilder, SparseComplexMatrix,
};
use crate::mesh::{EdgeClass, Mesh1D, TriMesh};
use num_complex::Complex64 as C64;
use std::sync::Arc;

/// Relative pivot threshold for element interior blocks. The 1D stencil
/// denominators vanish at discrete resonances; fail loudly instead of
/// producing garbage.
const ELEMENT_PIVOT_TOL: f64 = 1e-12;

/// Quadrature exactness for interior load integrals.
const LOAD_QUAD_DEGREE: usize = 10;

fn czero() -> C64 {
    C64::new(0.0, 0.0)
}

fn ik(k: f64) -> C64 {
    C64::new(0.0, k)
}

/// Per-edge penalty parameter selection.
///
/// Rules referencing `h` are evaluated with that edge's diameter (the
/// element length in 1D).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PenaltyRule {
    /// `tau = i / h`
    ImagOverH,
    /// `tau = i k`
    ImagK,
    /// `tau = k`
    RealK,
    /// `tau = k (1 + kh/15)`, the expansion of the pollution-free 1D choice
    Corrected1d,
    /// The exact pollution-free 1D parameter from the dispersion analysis
    TauOpt1d,
    /// `tau = (sqrt(2)/2) k (1 + (sqrt(6)/64) kh)`, the corrected rule on
    /// equilateral triangulations
    Corrected2d,
    UserConstant(C64),
}

impl PenaltyRule {
    pub fn tag(&self) -> String {
        match self {
            PenaltyRule::ImagOverH => "imag-over-h".into(),
            PenaltyRule::ImagK => "imag-k".into(),
            PenaltyRule::RealK => "k".into(),
            PenaltyRule::Corrected1d => "k-corr-1d".into(),
            PenaltyRule::TauOpt1d => "tau-opt-1d".into(),
            PenaltyRule::Corrected2d => "k-corr-2d".into(),
            PenaltyRule::UserConstant(c) => format!("const:{},{}", c.re, c.im),
        }
    }
}

/// Evaluate a penalty rule on one edge. Rejects values violating
/// `tau != 0` or `tau + ik != 0` (denominators of the trace elimination).
pub fn eval_penalty(rule: PenaltyRule, k: f64, h_edge: f64) -> Result<C64> {
    if !(k > 0.0) || !(h_edge > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "penalty evaluation needs k > 0, h > 0; got k = {k}, h = {h_edge}"
        )));
    }
    let t = k * h_edge;
    let tau = match rule {
        PenaltyRule::ImagOverH => C64::new(0.0, 1.0 / h_edge),
        PenaltyRule::ImagK => C64::new(0.0, k),
        PenaltyRule::RealK => C64::new(k, 0.0),
        PenaltyRule::Corrected1d => C64::new(k * (1.0 + t / 15.0), 0.0),
        PenaltyRule::TauOpt1d => C64::new(crate::dispersion::tau_opt_1d(k, h_edge)?, 0.0),
        PenaltyRule::Corrected2d => C64::new(
            std::f64::consts::FRAC_1_SQRT_2 * k * (1.0 + 6.0_f64.sqrt() / 64.0 * t),
            0.0,
        ),
        PenaltyRule::UserConstant(c) => c,
    };
    if tau.norm() < 1e-300 {
        return Err(Error::InvalidPenalty("tau must be nonzero".into()));
    }
    let denom = tau + ik(k);
    if denom.norm() <= 1e-12 * (tau.norm() + k) {
        return Err(Error::InvalidPenalty(format!(
            "tau + ik ~ 0 (tau = {tau}, k = {k})"
        )));
    }
    Ok(tau)
}

/// Boundary-datum projection degree. The richer degree-2 projection enters
/// only the boundary numerical flux consumed by postprocessing; the trace
/// system always couples to the P1 component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GhDegree {
    P1,
    P2,
}

/// Statically condensed element: the interior block factorization, the
/// interior-trace coupling, the trace-trace Schur contribution, and the
/// load maps.
pub struct CondensedElement {
    pub n_interior: usize,
    pub n_trace: usize,
    lu: DenseLu,
    /// `x = x_map * uhat + lu.solve(b)`, row-major `n_interior x n_trace`
    x_map: Vec<C64>,
    /// Schur contribution `C_tt + C_tI * x_map`, row-major square `n_trace`
    pub schur: Vec<C64>,
    c_ti: Vec<C64>,
    c_tt: Vec<C64>,
    /// interior load (from `f`)
    pub b_interior: Vec<C64>,
    /// `C_tI A_II^{-1} b`
    pub trace_load: Vec<C64>,
}

impl CondensedElement {
    fn build(
        a_ii: &DenseComplexMatrix,
        a_it: &[C64],
        c_ti: &[C64],
        c_tt: &[C64],
        b: &[C64],
        elem: usize,
        kh: f64,
    ) -> Result<Self> {
        let ni = a_ii.dim();
        let n_trace = a_it.len() / ni;
        let lu = a_ii.lu_with_tol(ELEMENT_PIVOT_TOL).map_err(|e| match e {
            Error::SingularMatrix { .. } => Error::SingularElement { element: elem, kh },
            other => other,
        })?;
        // x_map = -A_II^{-1} A_It, column by column
        let mut x_map = vec![czero(); ni * n_trace];
        let mut col = vec![czero(); ni];
        for j in 0..n_trace {
            for i in 0..ni {
                col[i] = -a_it[i * n_trace + j];
            }
            let x = lu.solve(&col);
            for i in 0..ni {
                x_map[i * n_trace + j] = x[i];
            }
        }
        // schur = C_tt + C_tI x_map
        let mut schur = c_tt.to_vec();
        for r in 0..n_trace {
            for j in 0..n_trace {
                let mut acc = czero();
                for i in 0..ni {
                    acc += c_ti[r * ni + i] * x_map[i * n_trace + j];
                }
                schur[r * n_trace + j] += acc;
            }
        }
        // trace load = C_tI A^{-1} b
        let xb = lu.solve(b);
        let mut trace_load = vec![czero(); n_trace];
        for r in 0..n_trace {
            let mut acc = czero();
            for i in 0..ni {
                acc += c_ti[r * ni + i] * xb[i];
            }
            trace_load[r] = acc;
        }
        Ok(Self {
            n_interior: ni,
            n_trace,
            lu,
            x_map,
            schur,
            c_ti: c_ti.to_vec(),
            c_tt: c_tt.to_vec(),
            b_interior: b.to_vec(),
            trace_load,
        })
    }

    /// Recover the interior unknowns from the solved traces.
    pub fn recover(&self, uhat: &[C64]) -> Vec<C64> {
        let mut x = self.lu.solve(&self.b_interior);
        for i in 0..self.n_interior {
            let mut acc = czero();
            for j in 0..self.n_trace {
                acc += self.x_map[i * self.n_trace + j] * uhat[j];
            }
            x[i] += acc;
        }
        x
    }

    /// Trace-row values `C_tI x + C_tt uhat` for a given interior vector;
    /// at the recovered interior this equals `schur * uhat + trace_load`.
    pub fn trace_row_values(&self, x: &[C64], uhat: &[C64]) -> Vec<C64> {
        let mut out = vec![czero(); self.n_trace];
        for r in 0..self.n_trace {
            let mut acc = czero();
            for i in 0..self.n_interior {
                acc += self.c_ti[r * self.n_interior + i] * x[i];
            }
            for j in 0..self.n_trace {
                acc += self.c_tt[r * self.n_trace + j] * uhat[j];
            }
            out[r] = acc;
        }
        out
    }
}

/// Assemble and condense a 1D element of length `h` at offset `x0`.
///
/// Interior ordering: `[u_left, u_right, q_left, q_right]`; traces:
/// `[uhat_left, uhat_right]`. The four interior rows are the per-interval
/// equations of the 1D analysis, written as `A x + A_It uhat = b`.
pub fn assemble_element_1d(
    x0: f64,
    h: f64,
    k: f64,
    tau: [C64; 2],
    f: Option<&dyn Fn(f64) -> C64>,
    elem: usize,
) -> Result<CondensedElement> {
    let geom = IntervalGeometry::new(h)?;
    let m = geom.p1_mass();
    let k2 = k * k;
    let mut a = DenseComplexMatrix::zeros(4);
    // flux eq, r = lambda_left:  1/2 u1 + 1/2 u2 + (h/3) q1 + (h/6) q2 = uhat_0
    a.set(0, 0, C64::new(0.5, 0.0));
    a.set(0, 1, C64::new(0.5, 0.0));
    a.set(0, 2, C64::new(m[0][0], 0.0));
    a.set(0, 3, C64::new(m[0][1], 0.0));
    // flux eq, r = lambda_right: -1/2 u1 - 1/2 u2 + (h/6) q1 + (h/3) q2 = -uhat_1
    a.set(1, 0, C64::new(-0.5, 0.0));
    a.set(1, 1, C64::new(-0.5, 0.0));
    a.set(1, 2, C64::new(m[1][0], 0.0));
    a.set(1, 3, C64::new(m[1][1], 0.0));
    // balance eq, v = lambda_left:
    //   (k^2 h/3 - tau_0) u1 + k^2 h/6 u2 + 1/2 q1 - 1/2 q2 + tau_0 uhat_0 = -(f, v)
    a.set(2, 0, C64::new(k2 * m[0][0], 0.0) - tau[0]);
    a.set(2, 1, C64::new(k2 * m[0][1], 0.0));
    a.set(2, 2, C64::new(0.5, 0.0));
    a.set(2, 3, C64::new(-0.5, 0.0));
    // balance eq, v = lambda_right:
    a.set(3, 0, C64::new(k2 * m[1][0], 0.0));
    a.set(3, 1, C64::new(k2 * m[1][1], 0.0) - tau[1]);
    a.set(3, 2, C64::new(0.5, 0.0));
    a.set(3, 3, C64::new(-0.5, 0.0));

    let mut a_it = vec![czero(); 4 * 2];
    a_it[0] = C64::new(-1.0, 0.0);
    a_it[1 * 2 + 1] = C64::new(1.0, 0.0);
    a_it[2 * 2] = tau[0];
    a_it[3 * 2 + 1] = tau[1];

    let mut b = vec![czero(); 4];
    if let Some(f) = f {
        let q = quad_interval(LOAD_QUAD_DEGREE)?;
        let mut f0 = czero();
        let mut f1 = czero();
        for (xi, w) in q.nodes.iter().zip(&q.weights) {
            let x = x0 + xi * h;
            let fv = f(x) * (w * h);
            f0 += fv * (1.0 - xi);
            f1 += fv * xi;
        }
        b[2] = -f0;
        b[3] = -f1;
    }

    // numerical flux rows: qhat . n at each endpoint
    let mut c_ti = vec![czero(); 2 * 4];
    let mut c_tt = vec![czero(); 2 * 2];
    // left (n = -1): -q1 + tau_0 (u1 - uhat_0)
    c_ti[0] = tau[0];
    c_ti[2] = C64::new(-1.0, 0.0);
    c_tt[0] = -tau[0];
    // right (n = +1): q2 + tau_1 (u2 - uhat_1)
    c_ti[1 * 4 + 1] = tau[1];
    c_ti[1 * 4 + 3] = C64::new(1.0, 0.0);
    c_tt[1 * 2 + 1] = -tau[1];

    CondensedElement::build(&a, &a_it, &c_ti, &c_tt, &b, elem, k * h)
}

/// Assemble and condense a triangle.
///
/// Interior ordering: `[u0, u1, u2, qx0, qx1, qx2, qy0, qy1, qy2]`; trace
/// ordering: local edges 0..3 in traversal orientation, two P1 values each.
pub fn assemble_element_2d(
    geom: &TriGeometry,
    k: f64,
    tau: [C64; 3],
    f: Option<&dyn Fn([f64; 2]) -> C64>,
    elem: usize,
) -> Result<CondensedElement> {
    let m = geom.p1_mass();
    let intlam = geom.area / 3.0;
    let k2 = k * k;
    let mut a = DenseComplexMatrix::zeros(9);
    let mut a_it = vec![czero(); 9 * 6];
    let mut c_ti = vec![czero(); 6 * 9];
    let mut c_tt = vec![czero(); 6 * 6];

    // flux equations: (q, r)_K - (u, div r)_K + <uhat, r.n>_dK = 0
    for c in 0..2 {
        for i in 0..3 {
            let row = 3 * c + i;
            for j in 0..3 {
                a.add(row, 3 + 3 * c + j, C64::new(m[i][j], 0.0));
                a.add(row, j, C64::new(-geom.grads[i][c] * intlam, 0.0));
            }
            for l in 0..3 {
                let (va, vb) = (l, (l + 1) % 3);
                let me = geom.edge_p1_mass(l);
                let n = geom.edge_normal[l];
                let lrow = if i == va {
                    me[0]
                } else if i == vb {
                    me[1]
                } else {
                    continue;
                };
                a_it[row * 6 + 2 * l] += C64::new(n[c] * lrow[0], 0.0);
                a_it[row * 6 + 2 * l + 1] += C64::new(n[c] * lrow[1], 0.0);
            }
        }
    }
    // balance equations:
    //   -(q, grad v)_K - k^2 (u, v)_K + <q.n + tau (u - uhat), v>_dK = (f, v)_K
    for i in 0..3 {
        let row = 6 + i;
        for c in 0..2 {
            for j in 0..3 {
                a.add(
                    row,
                    3 + 3 * c + j,
                    C64::new(-geom.grads[i][c] * intlam, 0.0),
                );
            }
        }
        for j in 0..3 {
            a.add(row, j, C64::new(-k2 * m[i][j], 0.0));
        }
        for l in 0..3 {
            let (va, vb) = (l, (l + 1) % 3);
            let me = geom.edge_p1_mass(l);
            let n = geom.edge_normal[l];
            let lrow = if i == va {
                me[0]
            } else if i == vb {
                me[1]
            } else {
                continue;
            };
            for c in 0..2 {
                a.add(row, 3 + 3 * c + va, C64::new(n[c] * lrow[0], 0.0));
                a.add(row, 3 + 3 * c + vb, C64::new(n[c] * lrow[1], 0.0));
            }
            a.add(row, va, tau[l] * lrow[0]);
            a.add(row, vb, tau[l] * lrow[1]);
            a_it[row * 6 + 2 * l] -= tau[l] * lrow[0];
            a_it[row * 6 + 2 * l + 1] -= tau[l] * lrow[1];
        }
    }
    // trace rows: <qhat.n, mu>_e per local edge
    for l in 0..3 {
        let (va, vb) = (l, (l + 1) % 3);
        let me = geom.edge_p1_mass(l);
        let n = geom.edge_normal[l];
        for mm in 0..2 {
            let rr = 2 * l + mm;
            for c in 0..2 {
                c_ti[rr * 9 + 3 + 3 * c + va] += C64::new(n[c] * me[mm][0], 0.0);
                c_ti[rr * 9 + 3 + 3 * c + vb] += C64::new(n[c] * me[mm][1], 0.0);
            }
            c_ti[rr * 9 + va] += tau[l] * me[mm][0];
            c_ti[rr * 9 + vb] += tau[l] * me[mm][1];
            c_tt[rr * 6 + 2 * l] -= tau[l] * me[mm][0];
            c_tt[rr * 6 + 2 * l + 1] -= tau[l] * me[mm][1];
        }
    }

    let mut b = vec![czero(); 9];
    if let Some(f) = f {
        let q = crate::basis::quad_triangle(LOAD_QUAD_DEGREE)?;
        for (p, w) in q.points.iter().zip(&q.weights) {
            let phys = geom.map_ref(*p);
            let fv = f(phys) * (w * 2.0 * geom.area);
            let lam = [1.0 - p[0] - p[1], p[0], p[1]];
            for i in 0..3 {
                b[6 + i] += fv * lam[i];
            }
        }
    }

    CondensedElement::build(&a, &a_it, &c_ti, &c_tt, &b, elem, k * geom.diameter())
}

/// Condensed global system over the trace unknowns.
pub enum TraceSystem {
    /// Tridiagonal system over the `n + 1` nodes of a 1D mesh.
    Tridiagonal {
        sub: Vec<C64>,
        diag: Vec<C64>,
        sup: Vec<C64>,
        rhs: Vec<C64>,
    },
    /// Sparse system over `2 * n_edges` DOFs of a triangle mesh.
    Sparse {
        matrix: SparseComplexMatrix,
        rhs: Vec<C64>,
    },
}

impl TraceSystem {
    pub fn n_dofs(&self) -> usize {
        match self {
            TraceSystem::Tridiagonal { diag, .. } => diag.len(),
            TraceSystem::Sparse { rhs, .. } => rhs.len(),
        }
    }
}

/// Polynomial on an edge in the canonical arc parameter `s in [0, 1]`,
/// in the orthogonal basis `{1, s - 1/2, (s - 1/2)^2 - 1/12}`.
#[derive(Debug, Clone, Copy)]
pub struct EdgePoly {
    pub c: [C64; 3],
}

impl EdgePoly {
    pub fn eval(&self, s: f64) -> C64 {
        let t = s - 0.5;
        self.c[0] + self.c[1] * t + self.c[2] * (t * t - 1.0 / 12.0)
    }
}

/// 1D HDG solution: P1 endpoint coefficients per element plus nodal traces.
pub struct HdgSolution1d {
    pub mesh: Mesh1D,
    pub k: f64,
    pub rule: PenaltyRule,
    /// Penalty value per node (the 1D edge set).
    pub tau: Vec<C64>,
    pub u: Vec<[C64; 2]>,
    pub q: Vec<[C64; 2]>,
    pub uhat: Vec<C64>,
    pub gh_degree: GhDegree,
    /// boundary data values at `a` and `b`.
    pub g_bnd: [C64; 2],
    pub trace_residual: f64,
}

impl HdgSolution1d {
    pub fn n_trace_dofs(&self) -> usize {
        self.uhat.len()
    }

    pub fn eval_u(&self, e: usize, x: f64) -> C64 {
        let (x0, x1) = self.mesh.element(e);
        let s = (x - x0) / (x1 - x0);
        self.u[e][0] * (1.0 - s) + self.u[e][1] * s
    }

    pub fn eval_q(&self, e: usize, x: f64) -> C64 {
        let (x0, x1) = self.mesh.element(e);
        let s = (x - x0) / (x1 - x0);
        self.q[e][0] * (1.0 - s) + self.q[e][1] * s
    }

    /// Single-valued scalar numerical flux at node `i` (the value of the
    /// flux field, so that the outflux of element `K` is `qhat * n_K`).
    ///
    /// Interior nodes use the penalized formula from the adjacent element;
    /// boundary nodes use the eliminated boundary expression with the
    /// configured boundary datum.
    pub fn flux_at_node(&self, i: usize) -> C64 {
        let n = self.mesh.n;
        let k = self.k;
        if i == 0 {
            let tau = self.tau[0];
            let qn = -self.q[0][0] + tau * self.u[0][0];
            let v = ik(k) / (tau + ik(k)) * qn - tau / (tau + ik(k)) * self.g_bnd[0];
            -v // n = -1 at the left boundary
        } else if i == n {
            let tau = self.tau[n];
            let qn = self.q[n - 1][1] + tau * self.u[n - 1][1];
            ik(k) / (tau + ik(k)) * qn - tau / (tau + ik(k)) * self.g_bnd[1]
        } else {
            let tau = self.tau[i];
            self.q[i - 1][1] + tau * (self.u[i - 1][1] - self.uhat[i])
        }
    }
}

/// 2D HDG solution over a triangle mesh.
pub struct HdgSolution2d {
    pub mesh: Arc<TriMesh>,
    pub k: f64,
    pub rule: PenaltyRule,
    /// Penalty value per edge.
    pub tau: Vec<C64>,
    pub u: Vec<[C64; 3]>,
    /// `[qx0, qx1, qx2, qy0, qy1, qy2]` per element.
    pub q: Vec<[C64; 6]>,
    /// trace per edge in canonical (low vertex first) orientation.
    pub uhat: Vec<[C64; 2]>,
    pub gh_degree: GhDegree,
    /// boundary-datum projection per edge (boundary edges only).
    pub gh: Vec<Option<EdgePoly>>,
    pub trace_residual: f64,
}

impl HdgSolution2d {
    pub fn n_trace_dofs(&self) -> usize {
        2 * self.uhat.len()
    }

    /// `u_h` at a reference point of element `t`.
    pub fn eval_u(&self, t: usize, p: [f64; 2]) -> C64 {
        let lam = [1.0 - p[0] - p[1], p[0], p[1]];
        (0..3).map(|i| self.u[t][i] * lam[i]).sum()
    }

    pub fn eval_q(&self, t: usize, p: [f64; 2]) -> [C64; 2] {
        let lam = [1.0 - p[0] - p[1], p[0], p[1]];
        let qx = (0..3).map(|i| self.q[t][i] * lam[i]).sum();
        let qy = (0..3).map(|i| self.q[t][3 + i] * lam[i]).sum();
        [qx, qy]
    }

    /// Trace value on edge `e` at canonical arc parameter `s`.
    pub fn eval_uhat(&self, e: usize, s: f64) -> C64 {
        self.uhat[e][0] * (1.0 - s) + self.uhat[e][1] * s
    }
}

/// Map a local edge of a triangle to its global trace DOFs, respecting the
/// canonical orientation.
pub fn local_edge_dofs(mesh: &TriMesh, t: usize, l: usize) -> [usize; 2] {
    let e = mesh.tri_edges[t][l];
    let (va, vb) = mesh.local_edge_vertices(t, l);
    if va < vb {
        [2 * e, 2 * e + 1]
    } else {
        [2 * e + 1, 2 * e]
    }
}

/// Problem data for the 1D solver.
pub trait Problem1d: Sync {
    fn f(&self, x: f64) -> C64;
    fn g(&self, x: f64, n: f64) -> C64;
    /// Whether `f` is structurally nonzero (skips load quadrature when not).
    fn has_source(&self) -> bool {
        true
    }
}

impl<T: Solution1d> Problem1d for T {
    fn f(&self, x: f64) -> C64 {
        Solution1d::f(self, x)
    }
    fn g(&self, x: f64, n: f64) -> C64 {
        Solution1d::g(self, x, n)
    }
    fn has_source(&self) -> bool {
        false
    }
}

/// Problem data for the 2D solver.
pub trait Problem2d: Sync {
    fn f(&self, p: [f64; 2]) -> C64;
    fn g(&self, p: [f64; 2], n: [f64; 2]) -> C64;
    fn has_source(&self) -> bool {
        true
    }
}

impl<T: Solution2d> Problem2d for T {
    fn f(&self, p: [f64; 2]) -> C64 {
        Solution2d::f(self, p)
    }
    fn g(&self, p: [f64; 2], n: [f64; 2]) -> C64 {
        Solution2d::g(self, p, n)
    }
    fn has_source(&self) -> bool {
        false
    }
}

/// Penalty values for every edge of a 1D mesh (one per node).
pub fn penalty_field_1d(mesh: &Mesh1D, k: f64, rule: PenaltyRule) -> Result<Vec<C64>> {
    let tau = eval_penalty(rule, k, mesh.h())?;
    Ok(vec![tau; mesh.n + 1])
}

/// Penalty values for every edge of a triangle mesh.
pub fn penalty_field_2d(mesh: &TriMesh, k: f64, rule: PenaltyRule) -> Result<Vec<C64>> {
    (0..mesh.n_edges())
        .map(|e| eval_penalty(rule, k, mesh.edge_length(e)))
        .collect()
}

/// Assemble the condensed trace system of the 1D problem.
pub fn assemble_trace_system_1d(
    mesh: &Mesh1D,
    k: f64,
    tau: &[C64],
    data: &dyn Problem1d,
) -> Result<(TraceSystem, Vec<CondensedElement>)> {
    let n = mesh.n;
    let h = mesh.h();
    let mut sub = vec![czero(); n];
    let mut diag = vec![czero(); n + 1];
    let mut sup = vec![czero(); n];
    let mut rhs = vec![czero(); n + 1];
    let mut elems = Vec::with_capacity(n);
    let fsrc = |x: f64| data.f(x);
    for e in 0..n {
        let (x0, _) = mesh.element(e);
        let f_opt: Option<&dyn Fn(f64) -> C64> = if data.has_source() { Some(&fsrc) } else { None };
        let ce = assemble_element_1d(x0, h, k, [tau[e], tau[e + 1]], f_opt, e)?;
        diag[e] += ce.schur[0];
        sup[e] += ce.schur[1];
        sub[e] += ce.schur[2];
        diag[e + 1] += ce.schur[3];
        rhs[e] -= ce.trace_load[0];
        rhs[e + 1] -= ce.trace_load[1];
        elems.push(ce);
    }
    // boundary rows: qhat.n - ik uhat = -g
    diag[0] -= ik(k);
    rhs[0] -= data.g(mesh.a, -1.0);
    diag[n] -= ik(k);
    rhs[n] -= data.g(mesh.b, 1.0);
    Ok((
        TraceSystem::Tridiagonal {
            sub,
            diag,
            sup,
            rhs,
        },
        elems,
    ))
}

/// Solve the 1D problem end to end.
pub fn solve_hdg_1d(
    mesh: &Mesh1D,
    k: f64,
    rule: PenaltyRule,
    data: &dyn Problem1d,
    gh_degree: GhDegree,
) -> Result<HdgSolution1d> {
    let tau = penalty_field_1d(mesh, k, rule)?;
    let (system, elems) = assemble_trace_system_1d(mesh, k, &tau, data)?;
    let (sub, diag, sup, rhs) = match &system {
        TraceSystem::Tridiagonal {
            sub,
            diag,
            sup,
            rhs,
        } => (sub, diag, sup, rhs),
        _ => unreachable!(),
    };
    let uhat = solve_tridiagonal(sub, diag, sup, rhs)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..diag.len() {
        let mut ax = diag[i] * uhat[i];
        if i > 0 {
            ax += sub[i - 1] * uhat[i - 1];
        }
        if i + 1 < diag.len() {
            ax += sup[i] * uhat[i + 1];
        }
        num += (ax - rhs[i]).norm_sqr();
        den += rhs[i].norm_sqr();
    }
    let trace_residual = if den > 0.0 {
        (num / den).sqrt()
    } else {
        num.sqrt()
    };
    let mut u = Vec::with_capacity(mesh.n);
    let mut q = Vec::with_capacity(mesh.n);
    for (e, ce) in elems.iter().enumerate() {
        let x = ce.recover(&[uhat[e], uhat[e + 1]]);
        u.push([x[0], x[1]]);
        q.push([x[2], x[3]]);
    }
    Ok(HdgSolution1d {
        mesh: mesh.clone(),
        k,
        rule,
        tau,
        u,
        q,
        uhat,
        gh_degree,
        g_bnd: [data.g(mesh.a, -1.0), data.g(mesh.b, 1.0)],
        trace_residual,
    })
}

/// L2-project the boundary datum onto P1 or P2 of one boundary edge.
pub fn project_g_on_edge(
    mesh: &TriMesh,
    e: usize,
    g: &dyn Fn([f64; 2], [f64; 2]) -> C64,
    degree: GhDegree,
) -> Result<EdgePoly> {
    let edge = &mesh.edges[e];
    let t = edge.elems[0];
    let l = (0..3)
        .find(|&l| mesh.tri_edges[t][l] == e)
        .expect("edge not found in its adjacent element");
    let n = mesh.outward_normal(t, l);
    let pa = mesh.vertices[edge.v[0]];
    let pb = mesh.vertices[edge.v[1]];
    let quad = quad_interval(12)?;
    let mut c = [czero(); 3];
    let mut norms = [0.0_f64; 3];
    for (s, w) in quad.nodes.iter().zip(&quad.weights) {
        let p = [pa[0] + (pb[0] - pa[0]) * s, pa[1] + (pb[1] - pa[1]) * s];
        let gv = g(p, n);
        let t1 = s - 0.5;
        let basis = [1.0, t1, t1 * t1 - 1.0 / 12.0];
        for m in 0..3 {
            c[m] += gv * (w * basis[m]);
            norms[m] += w * basis[m] * basis[m];
        }
    }
    for m in 0..3 {
        c[m] /= norms[m];
    }
    if degree == GhDegree::P1 {
        c[2] = czero();
    }
    Ok(EdgePoly { c })
}

/// Assemble the condensed trace system of the 2D problem.
pub fn assemble_trace_system_2d(
    mesh: &TriMesh,
    k: f64,
    tau: &[C64],
    data: &dyn Problem2d,
) -> Result<(TraceSystem, Vec<CondensedElement>)> {
    let ndof = 2 * mesh.n_edges();
    let mut builder = SparseBuilder::new(ndof);
    let mut rhs = vec![czero(); ndof];
    let mut elems = Vec::with_capacity(mesh.n_elems());
    let fsrc = |p: [f64; 2]| data.f(p);
    for t in 0..mesh.n_elems() {
        let geom = TriGeometry::new(mesh.tri_vertices(t))?;
        let tl = [
            tau[mesh.tri_edges[t][0]],
            tau[mesh.tri_edges[t][1]],
            tau[mesh.tri_edges[t][2]],
        ];
        let f_opt: Option<&dyn Fn([f64; 2]) -> C64> =
            if data.has_source() { Some(&fsrc) } else { None };
        let ce = assemble_element_2d(&geom, k, tl, f_opt, t)?;
        let mut gdof = [0usize; 6];
        for l in 0..3 {
            let d = local_edge_dofs(mesh, t, l);
            gdof[2 * l] = d[0];
            gdof[2 * l + 1] = d[1];
        }
        for r in 0..6 {
            for cc in 0..6 {
                builder.add(gdof[r], gdof[cc], ce.schur[r * 6 + cc]);
            }
            rhs[gdof[r]] -= ce.trace_load[r];
        }
        elems.push(ce);
    }
    // boundary rows: qhat.n - ik uhat = -g, tested with the canonical P1
    // basis of each boundary edge
    let quad = quad_interval(12)?;
    for (e, edge) in mesh.edges.iter().enumerate() {
        if edge.class != EdgeClass::Boundary {
            continue;
        }
        let t = edge.elems[0];
        let l = (0..3)
            .find(|&l| mesh.tri_edges[t][l] == e)
            .expect("boundary edge missing from element");
        let n = mesh.outward_normal(t, l);
        let pa = mesh.vertices[edge.v[0]];
        let pb = mesh.vertices[edge.v[1]];
        let len = mesh.edge_length(e);
        let me = [[2.0 * len / 6.0, len / 6.0], [len / 6.0, 2.0 * len / 6.0]];
        for r in 0..2 {
            for cc in 0..2 {
                builder.add(2 * e + r, 2 * e + cc, -ik(k) * me[r][cc]);
            }
        }
        // load: -<g, mu>_e; with the projection property this equals
        // -<g_h, mu>_e for the P1 datum
        for (s, w) in quad.nodes.iter().zip(&quad.weights) {
            let p = [pa[0] + (pb[0] - pa[0]) * s, pa[1] + (pb[1] - pa[1]) * s];
            let gv = data.g(p, n) * (w * len);
            rhs[2 * e] -= gv * (1.0 - s);
            rhs[2 * e + 1] -= gv * s;
        }
    }
    Ok((
        TraceSystem::Sparse {
            matrix: builder.finalize(),
            rhs,
        },
        elems,
    ))
}

/// Solve the 2D problem end to end.
pub fn solve_hdg_2d(
    mesh: &Arc<TriMesh>,
    k: f64,
    rule: PenaltyRule,
    data: &dyn Problem2d,
    gh_degree: GhDegree,
) -> Result<HdgSolution2d> {
    let tau = penalty_field_2d(mesh, k, rule)?;
    let (system, elems) = assemble_trace_system_2d(mesh, k, &tau, data)?;
    let (matrix, rhs) = match &system {
        TraceSystem::Sparse { matrix, rhs } => (matrix, rhs),
        _ => unreachable!(),
    };
    let x = matrix.solve(rhs)?;
    let trace_residual = matrix.relative_residual(&x, rhs);
    let mut u = Vec::with_capacity(mesh.n_elems());
    let mut q = Vec::with_capacity(mesh.n_elems());
    for (t, ce) in elems.iter().enumerate() {
        let mut loc = [czero(); 6];
        for l in 0..3 {
            let d = local_edge_dofs(mesh, t, l);
            loc[2 * l] = x[d[0]];
            loc[2 * l + 1] = x[d[1]];
        }
        let xi = ce.recover(&loc);
        u.push([xi[0], xi[1], xi[2]]);
        q.push([xi[3], xi[4], xi[5], xi[6], xi[7], xi[8]]);
    }
    let mut uhat = Vec::with_capacity(mesh.n_edges());
    for e in 0..mesh.n_edges() {
        uhat.push([x[2 * e], x[2 * e + 1]]);
    }
    let gfun = |p: [f64; 2], n: [f64; 2]| data.g(p, n);
    let mut gh = Vec::with_capacity(mesh.n_edges());
    for (e, edge) in mesh.edges.iter().enumerate() {
        if edge.class == EdgeClass::Boundary {
            gh.push(Some(project_g_on_edge(mesh, e, &gfun, gh_degree)?));
        } else {
            gh.push(None);
        }
    }
    Ok(HdgSolution2d {
        mesh: Arc::clone(mesh),
        k,
        rule,
        tau,
        u,
        q,
        uhat,
        gh_degree,
        gh,
        trace_residual,
    })
}

/// Coefficients of the numerical flux `qhat . n` on edge `e` in the
/// canonical edge parametrization, with `n` the outward normal of the
/// adjacent element `edge.elems[side]`.
///
/// Interior edges evaluate the penalized one-sided formula; boundary edges
/// evaluate the eliminated expression containing the projected datum, which
/// has degree 2 when the solve was configured that way.
pub fn numerical_flux_2d(sol: &HdgSolution2d, e: usize, side: usize) -> EdgePoly {
    let mesh = &sol.mesh;
    let edge = &sol.mesh.edges[e];
    let t = edge.elems[side];
    let l = (0..3)
        .find(|&l| mesh.tri_edges[t][l] == e)
        .expect("edge not adjacent to element");
    let n = mesh.outward_normal(t, l);
    let (va, vb) = mesh.local_edge_vertices(t, l);
    let tri = mesh.triangles[t];
    let lva = tri.iter().position(|&v| v == va).unwrap();
    let lvb = tri.iter().position(|&v| v == vb).unwrap();
    // endpoint indices along the canonical orientation
    let canon_first = mesh.edges[e].v[0];
    let (i0, i1) = if va == canon_first {
        (lva, lvb)
    } else {
        (lvb, lva)
    };
    let qn = |i: usize| sol.q[t][i] * n[0] + sol.q[t][3 + i] * n[1];
    let tau = sol.tau[e];
    if edge.class == EdgeClass::Interior {
        let f0 = qn(i0) + tau * (sol.u[t][i0] - sol.uhat[e][0]);
        let f1 = qn(i1) + tau * (sol.u[t][i1] - sol.uhat[e][1]);
        EdgePoly {
            c: [(f0 + f1) / 2.0, f1 - f0, czero()],
        }
    } else {
        // qhat.n = ik/(tau+ik) (q.n + tau u) - tau/(tau+ik) g_h
        let k = sol.k;
        let a = ik(k) / (tau + ik(k));
        let b = tau / (tau + ik(k));
        let w0 = a * (qn(i0) + tau * sol.u[t][i0]);
        let w1 = a * (qn(i1) + tau * sol.u[t][i1]);
        let gh = sol.gh[e].expect("boundary edge carries a projected datum");
        EdgePoly {
            c: [
                (w0 + w1) / 2.0 - b * gh.c[0],
                (w1 - w0) - b * gh.c[1],
                -b * gh.c[2],
            ],
        }
    }
}
