//! Batch study driver for the HDG Helmholtz solver.
//!
//! Subcommands map one-to-one onto the library's study drivers; every run
//! emits CSV (and optionally an SVG plot). Exit status: 0 on full success,
//! 2 when any sweep cell failed (failed cells are recorded in the CSV with
//! a reason), 1 on specification or I/O errors.

use clap::{Args, Parser, Subcommand};
use hdg_helmholtz::hdg::{GhDegree, PenaltyRule};
use hdg_helmholtz::study::{
    run_convergence_study, run_critical_study, run_dispersion_study, run_pollution_study,
    run_postprocess_study, StudyKind, StudySpec,
};
use num_complex::Complex64;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "hdg",
    about = "HDG studies for the Helmholtz equation: convergence, pollution, critical mesh size, dispersion, postprocessing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Error-vs-mesh-size sweep at fixed wave numbers
    Convergence(CommonArgs),
    /// Fixed-kh sweep over wave numbers
    Pollution(CommonArgs),
    /// Critical mesh size h(k, eps) scaling
    CriticalH(CommonArgs),
    /// Discrete-wavenumber phase-error curves
    Dispersion(CommonArgs),
    /// Convergence sweep including the postprocessed error
    Postprocess(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Problem dimension (1: interval example, 2: hexagon example)
    #[arg(long, default_value_t = 1)]
    dim: u8,

    /// Wave numbers (comma separated)
    #[arg(long, value_delimiter = ',')]
    k: Vec<f64>,

    /// Wave-number range a:b:step (inclusive)
    #[arg(long)]
    k_range: Option<String>,

    /// Mesh sizes (comma separated)
    #[arg(long, value_delimiter = ',')]
    h_list: Vec<f64>,

    /// Fix kh; mesh sizes derive from the wave numbers
    #[arg(long)]
    kh: Option<f64>,

    /// Penalty rules: imag-over-h, imag-k, k, k-corr-1d, tau-opt-1d,
    /// k-corr-2d, const:<re>,<im>
    #[arg(long, value_delimiter = ' ', num_args = 1..)]
    tau: Vec<String>,

    /// Boundary-datum projection degree
    #[arg(long, default_value_t = 1)]
    gh_degree: u8,

    /// Tolerance for critical-mesh-size searches
    #[arg(long, default_value_t = 0.1)]
    eps: f64,

    #[arg(long)]
    out_csv: Option<String>,

    #[arg(long)]
    out_svg: Option<String>,

    /// Write the (2D) mesh as plain text: header `V E T`, vertices, triangles
    #[arg(long)]
    dump_mesh: Option<String>,

    /// Worker threads for independent sweep cells (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
}

fn parse_tau(s: &str) -> Result<PenaltyRule, String> {
    match s {
        "imag-over-h" => Ok(PenaltyRule::ImagOverH),
        "imag-k" => Ok(PenaltyRule::ImagK),
        "k" => Ok(PenaltyRule::RealK),
        "k-corr-1d" => Ok(PenaltyRule::Corrected1d),
        "tau-opt-1d" => Ok(PenaltyRule::TauOpt1d),
        "k-corr-2d" => Ok(PenaltyRule::Corrected2d),
        other => {
            if let Some(rest) = other.strip_prefix("const:") {
                let parts: Vec<&str> = rest.split(',').collect();
                if parts.len() != 2 {
                    return Err(format!("expected const:<re>,<im>, got {other}"));
                }
                let re: f64 = parts[0]
                    .parse()
                    .map_err(|e| format!("bad real part in {other}: {e}"))?;
                let im: f64 = parts[1]
                    .parse()
                    .map_err(|e| format!("bad imaginary part in {other}: {e}"))?;
                Ok(PenaltyRule::UserConstant(Complex64::new(re, im)))
            } else {
                Err(format!("unknown penalty rule: {other}"))
            }
        }
    }
}

fn parse_k_range(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected a:b:step, got {s}"));
    }
    let a: f64 = parts[0]
        .parse()
        .map_err(|e| format!("bad range start: {e}"))?;
    let b: f64 = parts[1]
        .parse()
        .map_err(|e| format!("bad range end: {e}"))?;
    let step: f64 = parts[2]
        .parse()
        .map_err(|e| format!("bad range step: {e}"))?;
    if step <= 0.0 || b < a {
        return Err(format!("range {s} is empty or descending"));
    }
    let mut out = Vec::new();
    let mut k = a;
    while k <= b * (1.0 + 1e-12) {
        out.push(k);
        k += step;
    }
    Ok(out)
}

fn build_spec(kind: StudyKind, args: &CommonArgs) -> Result<StudySpec, String> {
    let mut ks = args.k.clone();
    if let Some(range) = &args.k_range {
        ks.extend(parse_k_range(range)?);
    }
    if ks.is_empty() {
        return Err("no wave numbers given (use --k or --k-range)".into());
    }
    let mut rules = Vec::new();
    for t in &args.tau {
        rules.push(parse_tau(t)?);
    }
    if rules.is_empty() {
        rules.push(if args.dim == 1 {
            PenaltyRule::Corrected1d
        } else {
            PenaltyRule::Corrected2d
        });
    }
    let gh_degree = match args.gh_degree {
        1 => GhDegree::P1,
        2 => GhDegree::P2,
        other => return Err(format!("gh-degree must be 1 or 2, got {other}")),
    };
    Ok(StudySpec {
        kind,
        dim: args.dim,
        ks,
        hs: args.h_list.clone(),
        kh: args.kh,
        rules,
        eps: args.eps,
        gh_degree,
        out_csv: args.out_csv.clone(),
        out_svg: args.out_svg.clone(),
        dump_mesh: args.dump_mesh.clone(),
        threads: args.threads,
        norm_degree: None,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match &cli.command {
        Command::Convergence(a) => (StudyKind::Convergence, a),
        Command::Pollution(a) => (StudyKind::Pollution, a),
        Command::CriticalH(a) => (StudyKind::CriticalH, a),
        Command::Dispersion(a) => (StudyKind::Dispersion, a),
        Command::Postprocess(a) => (StudyKind::Postprocess, a),
    };
    let spec = match build_spec(kind, args) {
        Ok(s) => s,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
    };
    if let Some(n) = spec.threads {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
    }
    let outcome = match kind {
        StudyKind::Convergence => run_convergence_study(&spec).map(report_sweep),
        StudyKind::Postprocess => run_postprocess_study(&spec).map(report_sweep),
        StudyKind::Pollution => run_pollution_study(&spec).map(report_sweep),
        StudyKind::CriticalH => run_critical_study(&spec).map(|results| {
            for r in &results {
                println!(
                    "k = {:>8.1}  eps = {:.3}  {}  tau = {:<12} h = {:.6e} (n = {})",
                    r.k,
                    r.eps,
                    r.quantity.tag(),
                    r.rule_tag,
                    r.h,
                    r.n
                );
            }
            false
        }),
        StudyKind::Dispersion => run_dispersion_study(&spec).map(|records| {
            let mut any_failed = false;
            for r in &records {
                match &r.reason {
                    None => println!(
                        "k = {:>8.1}  h = {:.6e}  tau = {:<12} |k_h - k| = {:.6e}",
                        r.k, r.h, r.rule_tag, r.abs_phase_error
                    ),
                    Some(reason) => {
                        any_failed = true;
                        println!(
                            "k = {:>8.1}  h = {:.6e}  tau = {:<12} FAILED: {reason}",
                            r.k, r.h, r.rule_tag
                        );
                    }
                }
            }
            any_failed
        }),
    };
    match outcome {
        Ok(any_failed) => {
            if any_failed {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn report_sweep(records: Vec<hdg_helmholtz::study::SweepRecord>) -> bool {
    let mut any_failed = false;
    for r in &records {
        match &r.reason {
            None => {
                let star = r
                    .e_u_star
                    .map(|v| format!("  e_u* = {v:.6e}"))
                    .unwrap_or_default();
                println!(
                    "k = {:>8.1}  n = {:>6}  tau = {:<12} e_u = {:.6e}  e_q = {:.6e}  e_u^I = {:.6e}{star}",
                    r.k, r.n, r.rule_tag, r.e_u, r.e_q, r.e_u_interp
                );
            }
            Some(reason) => {
                any_failed = true;
                println!(
                    "k = {:>8.1}  n = {:>6}  tau = {:<12} FAILED: {reason}",
                    r.k, r.n, r.rule_tag
                );
            }
        }
    }
    any_failed
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tau_parsing() {
        assert_eq!(parse_tau("imag-k").unwrap(), PenaltyRule::ImagK);
        assert_eq!(parse_tau("k").unwrap(), PenaltyRule::RealK);
        assert_eq!(parse_tau("tau-opt-1d").unwrap(), PenaltyRule::TauOpt1d);
        match parse_tau("const:2.5,-1.25").unwrap() {
            PenaltyRule::UserConstant(v) => {
                assert_eq!(v, Complex64::new(2.5, -1.25));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_tau("bogus").is_err());
        assert!(parse_tau("const:1").is_err());
    }

    #[test]
    fn k_range_parsing() {
        assert_eq!(parse_k_range("1:5:2").unwrap(), vec![1.0, 3.0, 5.0]);
        let r = parse_k_range("50:400:50").unwrap();
        assert_eq!(r.len(), 8);
        assert!(parse_k_range("5:1:1").is_err());
        assert!(parse_k_range("1:5:0").is_err());
        assert!(parse_k_range("1:5").is_err());
    }

    #[test]
    fn spec_building_defaults() {
        let args = CommonArgs {
            dim: 2,
            k: vec![6.0],
            k_range: None,
            h_list: vec![],
            kh: Some(1.0),
            tau: vec![],
            gh_degree: 1,
            eps: 0.1,
            out_csv: None,
            out_svg: None,
            dump_mesh: None,
            threads: None,
        };
        let spec = build_spec(StudyKind::Pollution, &args).unwrap();
        assert_eq!(spec.rules, vec![PenaltyRule::Corrected2d]);
        assert_eq!(spec.kh, Some(1.0));
    }
}
