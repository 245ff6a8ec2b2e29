//! Batch study drivers: convergence sweeps (error vs 1/h at fixed k),
//! pollution sweeps (fixed kh, k sweep), critical-mesh-size scaling,
//! postprocessing sweeps, and dispersion curves, with CSV/SVG emission.
//!
//! Cells of a sweep are independent and run on a rayon pool; records are
//! ordered by specification order, never completion order, so reruns emit
//! byte-identical CSV except for the wall-time column. Per-cell failures
//! are captured in the record's reason column and never abort a sweep.

use crate::dispersion::{fit_loglog_slope, phase_error_curve_1d, phase_error_curve_2d};
use crate::error::{Error, Result};
use crate::exact::{bessel_solution_2d, plane_wave_1d};
use crate::hdg::{eval_penalty, solve_hdg_1d, solve_hdg_2d, GhDegree, PenaltyRule};
use crate::io::{emit_csv, emit_svg, fmt_g17, CsvRow, LineStyle, PlotSpec, Series, SlopeGuide};
use crate::mesh::{build_hexagon_equilateral, build_uniform_1d, dump_mesh};
use crate::norms::{relative_errors_1d, relative_errors_2d, NormConfig};
use crate::postprocess::{postprocess_all_1d, postprocess_all_2d};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use std::sync::Arc;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyKind {
    Convergence,
    Pollution,
    CriticalH,
    Dispersion,
    Postprocess,
}

/// Declarative description of one batch study.
#[derive(Debug, Clone)]
pub struct StudySpec {
    pub kind: StudyKind,
    pub dim: u8,
    pub ks: Vec<f64>,
    /// target mesh sizes; ignored when `kh` pins h = kh / k
    pub hs: Vec<f64>,
    pub kh: Option<f64>,
    pub rules: Vec<PenaltyRule>,
    /// tolerance for critical-mesh-size searches
    pub eps: f64,
    pub gh_degree: GhDegree,
    pub out_csv: Option<String>,
    pub out_svg: Option<String>,
    pub dump_mesh: Option<String>,
    pub threads: Option<usize>,
    /// error-norm quadrature override (base exactness degree)
    pub norm_degree: Option<usize>,
}

impl StudySpec {
    pub fn validate(&self) -> Result<()> {
        if self.dim != 1 && self.dim != 2 {
            return Err(Error::InvalidArgument(format!(
                "dimension must be 1 or 2, got {}",
                self.dim
            )));
        }
        if self.ks.is_empty() {
            return Err(Error::InvalidArgument("empty wave-number list".into()));
        }
        if self.kind != StudyKind::Pollution
            && self.kind != StudyKind::CriticalH
            && self.hs.is_empty()
            && self.kh.is_none()
        {
            return Err(Error::InvalidArgument("empty mesh-size list".into()));
        }
        if self.rules.is_empty() {
            return Err(Error::InvalidArgument("empty penalty-rule list".into()));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "tolerance must lie in (0, 1), got {}",
                self.eps
            )));
        }
        Ok(())
    }
}

/// One sweep cell result; failed cells carry the reason and NaN errors.
#[derive(Debug, Clone)]
pub struct SweepRecord {
    pub k: f64,
    pub h: f64,
    /// elements (1D) or subdivisions per hexagon side (2D)
    pub n: usize,
    pub rule_tag: String,
    pub tau: C64,
    pub e_u: f64,
    pub e_q: f64,
    pub e_u_interp: f64,
    pub e_q_interp: f64,
    pub e_u_star: Option<f64>,
    pub trace_dofs: usize,
    pub wall_time_s: f64,
    pub reason: Option<String>,
}

impl CsvRow for SweepRecord {
    fn header() -> String {
        "k,h,n,rule,tau_re,tau_im,e_u,e_q,e_u_interp,e_q_interp,e_u_star,trace_dofs,wall_time_s,reason"
            .into()
    }
    fn row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            fmt_g17(self.k),
            fmt_g17(self.h),
            self.n,
            self.rule_tag,
            fmt_g17(self.tau.re),
            fmt_g17(self.tau.im),
            fmt_g17(self.e_u),
            fmt_g17(self.e_q),
            fmt_g17(self.e_u_interp),
            fmt_g17(self.e_q_interp),
            self.e_u_star.map(fmt_g17).unwrap_or_default(),
            self.trace_dofs,
            fmt_g17(self.wall_time_s),
            self.reason.clone().unwrap_or_default()
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    U,
    Q,
}

impl Quantity {
    pub fn tag(&self) -> &'static str {
        match self {
            Quantity::U => "u",
            Quantity::Q => "q",
        }
    }
}

/// Critical mesh size for one `(k, rule, quantity)`.
#[derive(Debug, Clone)]
pub struct CriticalMeshResult {
    pub k: f64,
    pub eps: f64,
    pub quantity: Quantity,
    pub rule_tag: String,
    pub h: f64,
    pub n: usize,
}

impl CsvRow for CriticalMeshResult {
    fn header() -> String {
        "k,eps,quantity,rule,h,n".into()
    }
    fn row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            fmt_g17(self.k),
            fmt_g17(self.eps),
            self.quantity.tag(),
            self.rule_tag,
            fmt_g17(self.h),
            self.n
        )
    }
}

/// One dispersion-sweep cell.
#[derive(Debug, Clone)]
pub struct DispersionRecord {
    pub k: f64,
    pub h: f64,
    pub rule_tag: String,
    pub abs_phase_error: f64,
    pub reason: Option<String>,
}

impl CsvRow for DispersionRecord {
    fn header() -> String {
        "k,h,rule,abs_phase_error,reason".into()
    }
    fn row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            fmt_g17(self.k),
            fmt_g17(self.h),
            self.rule_tag,
            fmt_g17(self.abs_phase_error),
            self.reason.clone().unwrap_or_default()
        )
    }
}

fn failed_record(k: f64, h: f64, n: usize, rule: PenaltyRule, why: String) -> SweepRecord {
    SweepRecord {
        k,
        h,
        n,
        rule_tag: rule.tag(),
        tau: C64::new(f64::NAN, f64::NAN),
        e_u: f64::NAN,
        e_q: f64::NAN,
        e_u_interp: f64::NAN,
        e_q_interp: f64::NAN,
        e_u_star: None,
        trace_dofs: 0,
        wall_time_s: 0.0,
        reason: Some(why),
    }
}

/// Solve one 1D cell and measure its errors.
pub fn run_cell_1d(
    k: f64,
    n: usize,
    rule: PenaltyRule,
    gh_degree: GhDegree,
    with_postprocess: bool,
) -> SweepRecord {
    run_cell_1d_cfg(k, n, rule, gh_degree, with_postprocess, NormConfig::default())
}

/// [`run_cell_1d`] with an explicit error-norm configuration.
pub fn run_cell_1d_cfg(
    k: f64,
    n: usize,
    rule: PenaltyRule,
    gh_degree: GhDegree,
    with_postprocess: bool,
    norms: NormConfig,
) -> SweepRecord {
    let t0 = Instant::now();
    let h = 1.0 / n as f64;
    let inner = || -> Result<SweepRecord> {
        let mesh = build_uniform_1d(0.0, 1.0, n)?;
        let data = plane_wave_1d(k)?;
        let sol = solve_hdg_1d(&mesh, k, rule, &data, gh_degree)?;
        let field = if with_postprocess {
            Some(postprocess_all_1d(&sol, None)?)
        } else {
            None
        };
        let mesh_for_star = sol.mesh.clone();
        let star_eval = field
            .as_ref()
            .map(|f| move |e: usize, x: f64| f.eval(&mesh_for_star, e, x));
        let rep = match &star_eval {
            Some(se) => relative_errors_1d(&sol, &data, Some(se), norms)?,
            None => relative_errors_1d(&sol, &data, None, norms)?,
        };
        Ok(SweepRecord {
            k,
            h,
            n,
            rule_tag: rule.tag(),
            tau: sol.tau[0],
            e_u: rep.e_u,
            e_q: rep.e_q,
            e_u_interp: rep.e_u_interp,
            e_q_interp: rep.e_q_interp,
            e_u_star: rep.e_u_star,
            trace_dofs: sol.n_trace_dofs(),
            wall_time_s: 0.0,
            reason: None,
        })
    };
    let mut rec = inner().unwrap_or_else(|e| failed_record(k, h, n, rule, e.to_string()));
    rec.wall_time_s = t0.elapsed().as_secs_f64();
    rec
}

/// Solve one 2D hexagon cell (side subdivisions `m`, so `h = 1/m`).
pub fn run_cell_2d(
    k: f64,
    m: usize,
    rule: PenaltyRule,
    gh_degree: GhDegree,
    with_postprocess: bool,
) -> SweepRecord {
    run_cell_2d_cfg(k, m, rule, gh_degree, with_postprocess, NormConfig::default())
}

/// [`run_cell_2d`] with an explicit error-norm configuration.
pub fn run_cell_2d_cfg(
    k: f64,
    m: usize,
    rule: PenaltyRule,
    gh_degree: GhDegree,
    with_postprocess: bool,
    norms: NormConfig,
) -> SweepRecord {
    let t0 = Instant::now();
    let h = 1.0 / m as f64;
    let inner = || -> Result<SweepRecord> {
        let mesh = Arc::new(build_hexagon_equilateral(m)?);
        let data = bessel_solution_2d(k)?;
        let sol = solve_hdg_2d(&mesh, k, rule, &data, gh_degree)?;
        let field = if with_postprocess {
            Some(postprocess_all_2d(&sol, None)?)
        } else {
            None
        };
        let mesh_for_star = Arc::clone(&sol.mesh);
        let star_eval = field
            .as_ref()
            .map(|f| move |t: usize, rp: [f64; 2]| f.eval(&mesh_for_star, t, rp));
        let rep = match &star_eval {
            Some(se) => relative_errors_2d(&sol, &data, Some(se), norms)?,
            None => relative_errors_2d(&sol, &data, None, norms)?,
        };
        Ok(SweepRecord {
            k,
            h,
            n: m,
            rule_tag: rule.tag(),
            tau: sol.tau[0],
            e_u: rep.e_u,
            e_q: rep.e_q,
            e_u_interp: rep.e_u_interp,
            e_q_interp: rep.e_q_interp,
            e_u_star: rep.e_u_star,
            trace_dofs: sol.n_trace_dofs(),
            wall_time_s: 0.0,
            reason: None,
        })
    };
    let mut rec = inner().unwrap_or_else(|e| failed_record(k, h, m, rule, e.to_string()));
    rec.wall_time_s = t0.elapsed().as_secs_f64();
    rec
}

fn run_cells(
    spec: &StudySpec,
    cells: Vec<(f64, usize, PenaltyRule)>,
    post: bool,
) -> Vec<SweepRecord> {
    let dim = spec.dim;
    let gh = spec.gh_degree;
    let norms = match spec.norm_degree {
        Some(degree) => NormConfig {
            degree,
            ..NormConfig::default()
        },
        None => NormConfig::default(),
    };
    let run = |&(k, n, rule): &(f64, usize, PenaltyRule)| -> SweepRecord {
        if dim == 1 {
            run_cell_1d_cfg(k, n, rule, gh, post, norms)
        } else {
            run_cell_2d_cfg(k, n, rule, gh, post, norms)
        }
    };
    match spec.threads {
        Some(1) => cells.iter().map(run).collect(),
        _ => cells.par_iter().map(run).collect(),
    }
}

fn element_counts(spec: &StudySpec, k: f64) -> Vec<usize> {
    match spec.kh {
        Some(kh) => vec![(k / kh).round().max(1.0) as usize],
        None => spec
            .hs
            .iter()
            .map(|h| (1.0 / h).round().max(1.0) as usize)
            .collect(),
    }
}

/// Error-vs-mesh-size sweep at fixed wave numbers.
pub fn run_convergence_study(spec: &StudySpec) -> Result<Vec<SweepRecord>> {
    spec.validate()?;
    let mut cells = Vec::new();
    for &rule in &spec.rules {
        for &k in &spec.ks {
            for n in element_counts(spec, k) {
                cells.push((k, n, rule));
            }
        }
    }
    let records = run_cells(spec, cells, spec.kind == StudyKind::Postprocess);
    maybe_dump_mesh(spec)?;
    if let Some(path) = &spec.out_csv {
        emit_csv(&records, path)?;
    }
    if let Some(path) = &spec.out_svg {
        if records.iter().any(|r| r.reason.is_none()) {
            emit_svg(&convergence_plot(spec, &records), path)?;
        }
    }
    Ok(records)
}

/// Fixed-`kh` pollution sweep over wave numbers.
pub fn run_pollution_study(spec: &StudySpec) -> Result<Vec<SweepRecord>> {
    spec.validate()?;
    let kh = spec.kh.unwrap_or(1.0);
    let mut cells = Vec::new();
    for &rule in &spec.rules {
        for &k in &spec.ks {
            let n = (k / kh).round().max(2.0) as usize;
            cells.push((k, n, rule));
        }
    }
    let records = run_cells(spec, cells, false);
    maybe_dump_mesh(spec)?;
    if let Some(path) = &spec.out_csv {
        emit_csv(&records, path)?;
    }
    if let Some(path) = &spec.out_svg {
        if records.iter().any(|r| r.reason.is_none()) {
            emit_svg(&pollution_plot(&records), path)?;
        }
    }
    Ok(records)
}

/// Postprocessing sweep: like convergence but with `e_u*` filled in.
pub fn run_postprocess_study(spec: &StudySpec) -> Result<Vec<SweepRecord>> {
    let mut spec2 = spec.clone();
    spec2.kind = StudyKind::Postprocess;
    if spec2.gh_degree != GhDegree::P2 {
        spec2.gh_degree = GhDegree::P2;
    }
    run_convergence_study(&spec2)
}

/// Find the coarsest stable mesh achieving `e <= eps` for one quantity.
///
/// Exponential bracketing on the element count, then integer bisection;
/// because pre-asymptotic plateaus make the error mildly nonmonotone, the
/// accepted count must also satisfy the tolerance at `n + 1`.
pub fn critical_mesh_size(
    k: f64,
    eps: f64,
    quantity: Quantity,
    rule: PenaltyRule,
    gh_degree: GhDegree,
) -> Result<CriticalMeshResult> {
    const BUDGET: usize = 1_000_000;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must lie in (0,1), got {eps}"
        )));
    }
    let err_at = |n: usize| -> Result<f64> {
        let rec = run_cell_1d(k, n, rule, gh_degree, false);
        if let Some(reason) = rec.reason {
            return Err(Error::InvalidArgument(format!(
                "cell failure at n = {n}: {reason}"
            )));
        }
        Ok(match quantity {
            Quantity::U => rec.e_u,
            Quantity::Q => rec.e_q,
        })
    };
    // exponential bracketing from the coarse end
    let mut n = (k.ceil() as usize / 3).max(2);
    while err_at(n)? > eps {
        n *= 2;
        if n > BUDGET {
            return Err(Error::BudgetExceeded(BUDGET));
        }
    }
    let mut hi = n;
    let mut lo = (n / 2).max(1);
    // a loose tolerance can be met by the initial probe already; extend the
    // bracket downward so the returned mesh is really the coarsest
    while lo >= 2 && err_at(lo)? <= eps {
        hi = lo;
        lo /= 2;
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if err_at(mid)? <= eps {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    // stability against plateau noise: both n and n + 1 must satisfy eps
    let mut n_star = hi;
    loop {
        if err_at(n_star)? <= eps && err_at(n_star + 1)? <= eps {
            break;
        }
        n_star += 1;
        if n_star > BUDGET {
            return Err(Error::BudgetExceeded(BUDGET));
        }
    }
    Ok(CriticalMeshResult {
        k,
        eps,
        quantity,
        rule_tag: rule.tag(),
        h: 1.0 / n_star as f64,
        n: n_star,
    })
}

/// Critical-mesh-size study over `(k, rule, quantity)` cells.
pub fn run_critical_study(spec: &StudySpec) -> Result<Vec<CriticalMeshResult>> {
    spec.validate()?;
    if spec.dim != 1 {
        return Err(Error::InvalidArgument(
            "critical-mesh-size study is defined for the 1D example".into(),
        ));
    }
    let mut cells = Vec::new();
    for &rule in &spec.rules {
        for qty in [Quantity::U, Quantity::Q] {
            for &k in &spec.ks {
                cells.push((k, qty, rule));
            }
        }
    }
    let eps = spec.eps;
    let gh = spec.gh_degree;
    let run =
        |&(k, qty, rule): &(f64, Quantity, PenaltyRule)| critical_mesh_size(k, eps, qty, rule, gh);
    let results: Vec<Result<CriticalMeshResult>> = match spec.threads {
        Some(1) => cells.iter().map(run).collect(),
        _ => cells.par_iter().map(run).collect(),
    };
    let mut out = Vec::with_capacity(results.len());
    for r in results {
        out.push(r?);
    }
    if let Some(path) = &spec.out_csv {
        emit_csv(&out, path)?;
    }
    if let Some(path) = &spec.out_svg {
        emit_svg(&critical_plot(&out), path)?;
    }
    Ok(out)
}

/// Fitted `log h(k, eps)` vs `log k` slope of a critical study subset.
pub fn critical_slope(results: &[CriticalMeshResult], rule_tag: &str, quantity: Quantity) -> f64 {
    let pts: Vec<(f64, f64)> = results
        .iter()
        .filter(|r| r.rule_tag == rule_tag && r.quantity == quantity)
        .map(|r| (r.k, r.h))
        .collect();
    let ks: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let hs: Vec<f64> = pts.iter().map(|p| p.1).collect();
    fit_loglog_slope(&ks, &hs)
}

/// Dispersion sweep: worst-direction phase error over mesh sizes per rule
/// and wave number.
pub fn run_dispersion_study(spec: &StudySpec) -> Result<Vec<DispersionRecord>> {
    spec.validate()?;
    let mut records = Vec::new();
    for &rule in &spec.rules {
        for &k in &spec.ks {
            let curve = if spec.dim == 1 {
                phase_error_curve_1d(k, rule, &spec.hs)
            } else {
                phase_error_curve_2d(k, rule, &spec.hs)
            };
            match curve {
                Ok(c) => {
                    for p in &c.points {
                        records.push(DispersionRecord {
                            k,
                            h: p.h,
                            rule_tag: rule.tag(),
                            abs_phase_error: p.abs_error,
                            reason: None,
                        });
                    }
                }
                Err(e) => {
                    for &h in &spec.hs {
                        records.push(DispersionRecord {
                            k,
                            h,
                            rule_tag: rule.tag(),
                            abs_phase_error: f64::NAN,
                            reason: Some(e.to_string()),
                        });
                    }
                }
            }
        }
    }
    if let Some(path) = &spec.out_csv {
        emit_csv(&records, path)?;
    }
    if let Some(path) = &spec.out_svg {
        if records.iter().any(|r| r.reason.is_none()) {
            emit_svg(&dispersion_plot(&records), path)?;
        }
    }
    Ok(records)
}

fn maybe_dump_mesh(spec: &StudySpec) -> Result<()> {
    if let Some(path) = &spec.dump_mesh {
        if spec.dim == 2 {
            let k = spec.ks[0];
            let m = element_counts(spec, k)[0];
            let mesh = build_hexagon_equilateral(m)?;
            dump_mesh(&mesh, path)?;
        }
    }
    Ok(())
}

fn group_tags(records: &[SweepRecord]) -> Vec<(String, f64)> {
    let mut tags = Vec::new();
    for r in records {
        let key = (r.rule_tag.clone(), r.k);
        if !tags.contains(&key) {
            tags.push(key);
        }
    }
    tags
}

fn convergence_plot(spec: &StudySpec, records: &[SweepRecord]) -> PlotSpec {
    let mut series = Vec::new();
    for (tag, k) in group_tags(records) {
        let sel: Vec<&SweepRecord> = records
            .iter()
            .filter(|r| r.rule_tag == tag && r.k == k && r.reason.is_none())
            .collect();
        if sel.is_empty() {
            continue;
        }
        let x: Vec<f64> = sel.iter().map(|r| 1.0 / r.h).collect();
        series.push(Series {
            label: format!("e_u k={k} tau={tag}"),
            x: x.clone(),
            y: sel.iter().map(|r| r.e_u).collect(),
            style: LineStyle::Solid,
        });
        series.push(Series {
            label: format!("e_q k={k} tau={tag}"),
            x: x.clone(),
            y: sel.iter().map(|r| r.e_q).collect(),
            style: LineStyle::Solid,
        });
        if sel.iter().any(|r| r.e_u_star.is_some()) {
            series.push(Series {
                label: format!("e_u* k={k} tau={tag}"),
                x: x.clone(),
                y: sel.iter().map(|r| r.e_u_star.unwrap_or(f64::NAN)).collect(),
                style: LineStyle::Solid,
            });
        }
        series.push(Series {
            label: format!("e_u^I k={k}"),
            x: x.clone(),
            y: sel.iter().map(|r| r.e_u_interp).collect(),
            style: LineStyle::Dashed,
        });
        series.push(Series {
            label: format!("e_q^I k={k}"),
            x,
            y: sel.iter().map(|r| r.e_q_interp).collect(),
            style: LineStyle::Dashed,
        });
    }
    let anchor = records
        .iter()
        .filter(|r| r.reason.is_none())
        .map(|r| (1.0 / r.h, r.e_u))
        .next()
        .unwrap_or((10.0, 1.0));
    let guides = vec![
        SlopeGuide {
            slope: -1.0,
            x0: anchor.0,
            y0: anchor.1,
            decades: 0.6,
            label: "slope 1".into(),
        },
        SlopeGuide {
            slope: -2.0,
            x0: anchor.0,
            y0: anchor.1,
            decades: 0.6,
            label: "slope 2".into(),
        },
        SlopeGuide {
            slope: -3.0,
            x0: anchor.0,
            y0: anchor.1,
            decades: 0.6,
            label: "slope 3".into(),
        },
    ];
    PlotSpec {
        title: format!("relative L2 errors vs 1/h ({}D)", spec.dim),
        x_label: "1/h".into(),
        y_label: "relative L2 error".into(),
        series,
        guides,
    }
}

fn pollution_plot(records: &[SweepRecord]) -> PlotSpec {
    let mut tags = Vec::new();
    for r in records {
        if !tags.contains(&r.rule_tag) {
            tags.push(r.rule_tag.clone());
        }
    }
    let mut series = Vec::new();
    for tag in &tags {
        let sel: Vec<&SweepRecord> = records
            .iter()
            .filter(|r| &r.rule_tag == tag && r.reason.is_none())
            .collect();
        series.push(Series {
            label: format!("e_u tau={tag}"),
            x: sel.iter().map(|r| r.k).collect(),
            y: sel.iter().map(|r| r.e_u).collect(),
            style: LineStyle::Solid,
        });
        series.push(Series {
            label: format!("e_q tau={tag}"),
            x: sel.iter().map(|r| r.k).collect(),
            y: sel.iter().map(|r| r.e_q).collect(),
            style: LineStyle::Solid,
        });
    }
    if let Some(tag) = tags.first() {
        let sel: Vec<&SweepRecord> = records
            .iter()
            .filter(|r| &r.rule_tag == tag && r.reason.is_none())
            .collect();
        series.push(Series {
            label: "e_u^I".into(),
            x: sel.iter().map(|r| r.k).collect(),
            y: sel.iter().map(|r| r.e_u_interp).collect(),
            style: LineStyle::Dashed,
        });
        series.push(Series {
            label: "e_q^I".into(),
            x: sel.iter().map(|r| r.k).collect(),
            y: sel.iter().map(|r| r.e_q_interp).collect(),
            style: LineStyle::Dashed,
        });
    }
    PlotSpec {
        title: "pollution sweep at fixed kh".into(),
        x_label: "k".into(),
        y_label: "relative L2 error".into(),
        series,
        guides: Vec::new(),
    }
}

fn critical_plot(results: &[CriticalMeshResult]) -> PlotSpec {
    let mut tags = Vec::new();
    for r in results {
        if !tags.contains(&r.rule_tag) {
            tags.push(r.rule_tag.clone());
        }
    }
    let mut series = Vec::new();
    for tag in &tags {
        for qty in [Quantity::U, Quantity::Q] {
            let sel: Vec<&CriticalMeshResult> = results
                .iter()
                .filter(|r| &r.rule_tag == tag && r.quantity == qty)
                .collect();
            if sel.is_empty() {
                continue;
            }
            series.push(Series {
                label: format!("h(k) {} tau={tag}", qty.tag()),
                x: sel.iter().map(|r| r.k).collect(),
                y: sel.iter().map(|r| r.h).collect(),
                style: if qty == Quantity::U {
                    LineStyle::Solid
                } else {
                    LineStyle::Dashed
                },
            });
        }
    }
    let anchor = results.first().map(|r| (r.k, r.h)).unwrap_or((50.0, 0.01));
    let guides = [-1.5, -4.0 / 3.0, -1.25, -1.2]
        .iter()
        .map(|&s| SlopeGuide {
            slope: s,
            x0: anchor.0,
            y0: anchor.1,
            decades: 0.7,
            label: format!("slope {s:.3}"),
        })
        .collect();
    PlotSpec {
        title: "critical mesh size h(k, eps)".into(),
        x_label: "k".into(),
        y_label: "h".into(),
        series,
        guides,
    }
}

fn dispersion_plot(records: &[DispersionRecord]) -> PlotSpec {
    let mut tags = Vec::new();
    for r in records {
        if !tags.contains(&r.rule_tag) {
            tags.push(r.rule_tag.clone());
        }
    }
    let mut series = Vec::new();
    for tag in &tags {
        let sel: Vec<&DispersionRecord> = records
            .iter()
            .filter(|r| &r.rule_tag == tag && r.reason.is_none())
            .collect();
        series.push(Series {
            label: format!("|k_h - k| tau={tag}"),
            x: sel.iter().map(|r| 1.0 / r.h).collect(),
            y: sel.iter().map(|r| r.abs_phase_error).collect(),
            style: LineStyle::Solid,
        });
    }
    PlotSpec {
        title: "phase error vs 1/h".into(),
        x_label: "1/h".into(),
        y_label: "|k_h - k|".into(),
        series,
        guides: Vec::new(),
    }
}

/// Evaluate the penalty value a study cell would use; convenience for
/// reporting.
pub fn cell_tau(rule: PenaltyRule, k: f64, h: f64) -> Result<C64> {
    eval_penalty(rule, k, h)
}
