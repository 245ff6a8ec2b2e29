//! Reruns of a solve must be bitwise identical, including under concurrent
//! sweep-cell scheduling on a shared thread pool.

use hdg_helmholtz::exact::bessel_solution_2d;
use hdg_helmholtz::hdg::{solve_hdg_2d, GhDegree, PenaltyRule};
use hdg_helmholtz::mesh::build_hexagon_equilateral;
use rayon::prelude::*;
use std::sync::Arc;

#[test]
fn sparse_solve_bitwise_deterministic_under_concurrency() {
    let k = 6.0;
    let data = bessel_solution_2d(k).unwrap();
    let mesh = Arc::new(build_hexagon_equilateral(12).unwrap());
    let reference = solve_hdg_2d(&mesh, k, PenaltyRule::ImagK, &data, GhDegree::P1).unwrap();
    // provoke scheduling sensitivity: many concurrent solves of the same
    // and different problems sharing the pool
    let sols: Vec<_> = (0..8usize)
        .into_par_iter()
        .map(|i| {
            if i % 2 == 0 {
                solve_hdg_2d(&mesh, k, PenaltyRule::ImagK, &data, GhDegree::P1).unwrap()
            } else {
                // interleave unrelated work
                let other = Arc::new(build_hexagon_equilateral(7).unwrap());
                let _ = solve_hdg_2d(&other, k, PenaltyRule::RealK, &data, GhDegree::P1).unwrap();
                solve_hdg_2d(&mesh, k, PenaltyRule::ImagK, &data, GhDegree::P1).unwrap()
            }
        })
        .collect();
    for b in &sols {
        for (x, y) in reference.uhat.iter().zip(&b.uhat) {
            assert_eq!(x[0].re.to_bits(), y[0].re.to_bits());
            assert_eq!(x[0].im.to_bits(), y[0].im.to_bits());
            assert_eq!(x[1].re.to_bits(), y[1].re.to_bits());
            assert_eq!(x[1].im.to_bits(), y[1].im.to_bits());
        }
        for (x, y) in reference.u.iter().zip(&b.u) {
            for i in 0..3 {
                assert_eq!(x[i].re.to_bits(), y[i].re.to_bits());
            }
        }
    }
}
