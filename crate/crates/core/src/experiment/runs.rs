use std::f64::consts::PI;
use std::time::Instant;

use super::report::{fitted_order, pair_order};
use super::{Environment, ExperimentConfig, ExperimentKind, ExperimentReport, RateFit, RunRecord};
use crate::cell::{CellOptions, DofBasis};
use crate::error::{Result, VemError};
use crate::linalg::NULLSPACE_RTOL;
use crate::mesh::{
    generate_mesh, hexagon_hi, quasi_regular_hexagon, square_with_hanging_nodes, MeshFamily, MeshParams, Point2,
    PolygonalMesh,
};
use crate::par::Execution;
use crate::poly::dim;
use crate::system::{
    assemble_global, compute_errors, extreme_eigenvalues_spd, solve_system, spectrum_stats,
    spectrum_stats_known_kernel, Discretization, DiscretizationOptions, SolverOptions,
};
use crate::vem::{Family, Method};

/// Collapsing hexagons run over `H_0..=H_LAST_HEXAGON`.
const LAST_HEXAGON: usize = 12;
/// Power and inverse iteration steps for global condition estimates.
const EIGEN_ITERATIONS: usize = 300;
/// Fixed degree of the mesh-size sweeps of the patch test.
const PATCH_SWEEP_DEGREE: usize = 3;

/// DoF count of `family` at degree `k` on `mesh`, boundary included.
pub fn estimated_dofs(mesh: &PolygonalMesh, family: Family, k: usize) -> usize {
    let interior = mesh.num_cells() * if k >= 2 { dim(k - 2) } else { 0 };
    match family {
        Family::Nc => mesh.num_edges() * k + interior,
        Family::C => mesh.num_vertices() + mesh.num_edges() * (k - 1) + interior,
    }
}

fn refuse_if_large(cfg: &ExperimentConfig, estimate: usize, what: &str) -> Result<()> {
    if estimate > cfg.max_dofs {
        return Err(VemError::Refused(format!(
            "{what} needs an estimated {estimate} DoFs, above the cap of {}",
            cfg.max_dofs
        )));
    }
    Ok(())
}

fn execution(cfg: &ExperimentConfig) -> Execution {
    if cfg.threads == Some(1) {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn options(cfg: &ExperimentConfig, dof_basis: DofBasis) -> DiscretizationOptions {
    DiscretizationOptions {
        cell: CellOptions {
            exactness: cfg.quad_exactness,
            dof_basis,
            ..CellOptions::default()
        },
        execution: execution(cfg),
        ..DiscretizationOptions::default()
    }
}

fn solver(cfg: &ExperimentConfig) -> SolverOptions {
    SolverOptions {
        execution: execution(cfg),
        ..SolverOptions::default()
    }
}

fn dof_basis_for(kind: ExperimentKind) -> DofBasis {
    match kind {
        // Monomial interior moments exceed double precision on the flat
        // hexagons long before i = 12.
        ExperimentKind::CollapsingHexagons => DofBasis::Orthonormal,
        _ => DofBasis::default(),
    }
}

fn environment(cfg: &ExperimentConfig) -> Environment {
    let basis = serde_json::to_value(dof_basis_for(cfg.experiment))
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default();
    let cell = CellOptions::default();
    let solver = SolverOptions::default();
    let parallel = execution(cfg).is_parallel();
    #[cfg(feature = "parallel")]
    let threads = if parallel { rayon::current_num_threads() } else { 1 };
    #[cfg(not(feature = "parallel"))]
    let threads = 1;
    Environment {
        version: env!("CARGO_PKG_VERSION").to_string(),
        quad_exactness: cfg.quad_exactness.map_or("2k+4".to_string(), |m| m.to_string()),
        zero_threshold: cfg.zero_threshold,
        nullspace_rtol: NULLSPACE_RTOL,
        dof_basis: basis,
        subtriangulation: format!("{:?}, min angle {:.4} rad", cell.strategy, cell.min_angle),
        solver: format!(
            "dense Cholesky up to {} DoFs, sparse LDLT above",
            solver.dense_threshold
        ),
        cg_tolerance: solver.cg_tolerance,
        dense_threshold: solver.dense_threshold,
        parallel,
        threads,
    }
}

/// Run the configured experiment. Runs execute one after another; element
/// loops inside a run may be parallel.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let mut report = ExperimentReport {
        experiment: cfg.experiment,
        config: cfg.clone(),
        environment: environment(cfg),
        records: Vec::new(),
        fits: Vec::new(),
        notes: Vec::new(),
    };
    match cfg.experiment {
        ExperimentKind::Convergence => convergence(cfg, &mut report)?,
        ExperimentKind::LocalSpectrum => local_spectrum(cfg, &mut report)?,
        ExperimentKind::CollapsingHexagons => collapsing_hexagons(cfg, &mut report)?,
        ExperimentKind::PatchTest => patch_test(cfg, &mut report)?,
        ExperimentKind::Timing => timing(cfg, &mut report)?,
    }
    Ok(report)
}

/// Level meshes after checking the finest level against the DoF cap. Counts
/// grow by 4 per level, so the coarsest mesh gives the estimate.
fn level_meshes(cfg: &ExperimentConfig) -> Result<Vec<PolygonalMesh>> {
    let coarse = generate_mesh(cfg.mesh, cfg.level_params(0))?;
    let kmax = *cfg.k.iter().max().unwrap_or(&1);
    for &method in &cfg.method {
        let base = estimated_dofs(&coarse, method.family(), kmax);
        let finest = base.saturating_mul(1usize.checked_shl(2 * (cfg.levels as u32 - 1)).unwrap_or(usize::MAX));
        refuse_if_large(cfg, finest, &format!("{method} at k={kmax} on level {}", cfg.levels - 1))?;
    }
    let mut meshes = vec![coarse];
    for l in 1..cfg.levels {
        meshes.push(generate_mesh(cfg.mesh, cfg.level_params(l))?);
    }
    Ok(meshes)
}

fn convergence(cfg: &ExperimentConfig, report: &mut ExperimentReport) -> Result<()> {
    let alpha = cfg.alpha;
    let u = |p: Point2| (PI * p.x).sin() * (PI * p.y).sin();
    let grad = |p: Point2| {
        Point2::new(
            PI * (PI * p.x).cos() * (PI * p.y).sin(),
            PI * (PI * p.x).sin() * (PI * p.y).cos(),
        )
    };
    let f = move |p: Point2| (2.0 * PI * PI + alpha) * u(p);
    let zero = |_: Point2| 0.0;
    let meshes = level_meshes(cfg)?;
    for &method in &cfg.method {
        for &k in &cfg.k {
            let mut series: Vec<RunRecord> = Vec::new();
            for (l, mesh) in meshes.iter().enumerate() {
                let start = Instant::now();
                let (disc, sys) = assemble_global(mesh, method, k, alpha, &f, &zero, options(cfg, DofBasis::default()))?;
                let uh = solve_system(&sys, &solver(cfg))?;
                let err = compute_errors(&disc, &uh, &u, &grad)?;
                let mut r = RunRecord::new(method, k, format!("{}-level-{l}", cfg.mesh));
                r.h = mesh.h();
                r.dofs = disc.num_dofs();
                r.err_l2 = Some(err.l2);
                r.err_grad = Some(err.grad);
                if let Some(prev) = series.last() {
                    r.order_l2 = pair_order(prev.err_l2.unwrap_or(0.0), err.l2, prev.h, r.h);
                    r.order_grad = pair_order(prev.err_grad.unwrap_or(0.0), err.grad, prev.h, r.h);
                }
                r.seconds = start.elapsed().as_secs_f64();
                series.push(r);
            }
            let h: Vec<f64> = series.iter().map(|r| r.h).collect();
            let e_l2: Vec<f64> = series.iter().filter_map(|r| r.err_l2).collect();
            let e_grad: Vec<f64> = series.iter().filter_map(|r| r.err_grad).collect();
            report.fits.push(RateFit {
                method,
                k,
                order_l2: fitted_order(&h, &e_l2),
                order_grad: fitted_order(&h, &e_grad),
                levels: series.len(),
            });
            report.records.extend(series);
        }
    }
    Ok(())
}

/// Local stiffness `a_K(·,·)` of a single cell (no reaction term).
fn local_stiffness(
    points: &[Point2],
    method: Method,
    k: usize,
    opts: DiscretizationOptions,
) -> Result<(nalgebra::DMatrix<f64>, f64)> {
    let cell = PolygonalMesh::single_cell(points)?;
    let disc = Discretization::new(&cell, method, k, opts)?;
    Ok((disc.local_matrices(0, 0.0, &|_| 0.0)?.a, cell.h()))
}

/// The three reference cells of the local spectrum experiment.
pub(crate) fn spectrum_cells() -> [(&'static str, Vec<Point2>); 3] {
    [
        ("regular-hexagon", hexagon_hi(0)),
        ("quasi-regular-hexagon", quasi_regular_hexagon()),
        ("square-hanging-nodes", square_with_hanging_nodes()),
    ]
}

fn local_spectrum(cfg: &ExperimentConfig, report: &mut ExperimentReport) -> Result<()> {
    let opts = DiscretizationOptions {
        gradient_projection: false,
        ..options(cfg, DofBasis::default())
    };
    for (name, points) in spectrum_cells() {
        for &method in &cfg.method {
            for &k in &cfg.k {
                let start = Instant::now();
                let (a, h) = local_stiffness(&points, method, k, opts)?;
                let s = spectrum_stats(&a, cfg.zero_threshold)?;
                let mut r = RunRecord::new(method, k, name);
                r.h = h;
                r.dofs = a.nrows();
                r.lam_max = Some(s.lam_max);
                r.lam_min_nz = Some(s.lam_min_nz);
                r.n_zero = Some(s.n_zero);
                r.cond = Some(s.cond);
                r.seconds = start.elapsed().as_secs_f64();
                report.records.push(r);
            }
        }
    }
    report.notes.push(format!(
        "local stiffness without reaction term; eigenvalues at or below {:e} lambda_max count as zero",
        cfg.zero_threshold
    ));
    Ok(())
}

fn collapsing_hexagons(cfg: &ExperimentConfig, report: &mut ExperimentReport) -> Result<()> {
    let opts = DiscretizationOptions {
        gradient_projection: false,
        ..options(cfg, dof_basis_for(ExperimentKind::CollapsingHexagons))
    };
    for &method in &cfg.method {
        for &k in &cfg.k {
            for i in 0..=LAST_HEXAGON {
                let start = Instant::now();
                let (a, h) = local_stiffness(&hexagon_hi(i), method, k, opts)?;
                // The kernel is exactly the constants, so λ_2 is the smallest
                // nonzero eigenvalue even when it falls under the threshold.
                let s = spectrum_stats_known_kernel(&a, 1, cfg.zero_threshold)?;
                let mut r = RunRecord::new(method, k, format!("H_{i}"));
                r.h = h;
                r.dofs = a.nrows();
                r.lam_max = Some(s.lam_max);
                r.lam_min_nz = Some(s.lam_min_nz);
                r.n_zero = Some(s.n_zero);
                r.cond = Some(s.cond);
                r.seconds = start.elapsed().as_secs_f64();
                report.records.push(r);
            }
        }
    }
    report.notes.push(
        "interior DoFs against the L2-orthonormal basis; cond = lambda_max / lambda_2 with the constant kernel known"
            .into(),
    );
    Ok(())
}

/// The patch-test meshes: a fixed convex-poly mesh swept over the configured
/// degrees, convex-poly refinement and anisotropic refinement at degree 3.
fn patch_cases(cfg: &ExperimentConfig) -> Result<Vec<(String, PolygonalMesh, Vec<usize>)>> {
    let mut cases = vec![(
        "case1".to_string(),
        generate_mesh(MeshFamily::ConvexPoly, MeshParams::divisions(5))?,
        cfg.k.clone(),
    )];
    for i in 1..=5 {
        let mesh = generate_mesh(MeshFamily::ConvexPoly, MeshParams::divisions(1 << i))?;
        cases.push((format!("case2-h=2^-{i}"), mesh, vec![PATCH_SWEEP_DEGREE]));
    }
    for i in 1..=8 {
        let mesh = generate_mesh(MeshFamily::AnisotropicQuads, MeshParams::spacing(0.2, 0.5f64.powi(i)))?;
        cases.push((format!("case3-hy=2^-{i}"), mesh, vec![PATCH_SWEEP_DEGREE]));
    }
    Ok(cases)
}

fn patch_test(cfg: &ExperimentConfig, report: &mut ExperimentReport) -> Result<()> {
    let u = |p: Point2| 1.0 + p.x + p.y;
    let grad = |_: Point2| Point2::new(1.0, 1.0);
    let zero = |_: Point2| 0.0;
    let cases = patch_cases(cfg)?;
    for &method in &cfg.method {
        for (name, mesh, ks) in &cases {
            for &k in ks {
                refuse_if_large(cfg, estimated_dofs(mesh, method.family(), k), &format!("{method} {name} k={k}"))?;
            }
        }
    }
    for &method in &cfg.method {
        for (name, mesh, ks) in &cases {
            for &k in ks {
                let start = Instant::now();
                let (disc, sys) = assemble_global(mesh, method, k, 0.0, &zero, &u, options(cfg, DofBasis::default()))?;
                let uh = solve_system(&sys, &solver(cfg))?;
                let err = compute_errors(&disc, &uh, &u, &grad)?;
                let seconds = start.elapsed().as_secs_f64();
                let (lam_max, lam_min) = extreme_eigenvalues_spd(&sys.matrix, EIGEN_ITERATIONS)?;
                let mut r = RunRecord::new(method, k, name.as_str());
                r.h = mesh.h();
                r.dofs = disc.num_dofs();
                r.err_l2 = Some(err.l2);
                r.err_grad = Some(err.grad);
                r.lam_max = Some(lam_max);
                r.lam_min_nz = Some(lam_min);
                r.n_zero = Some(0);
                r.cond = Some(lam_max / lam_min);
                r.seconds = seconds;
                report.records.push(r);
            }
        }
    }
    report.notes.push(format!(
        "global condition numbers of the Dirichlet-reduced matrix from {EIGEN_ITERATIONS} power and inverse iterations"
    ));
    Ok(())
}

/// Repetitions per timing run; the fastest one is reported.
const TIMING_REPEATS: usize = 2;

fn timing(cfg: &ExperimentConfig, report: &mut ExperimentReport) -> Result<()> {
    let meshes = level_meshes(cfg)?;
    let f = |p: Point2| (PI * p.x).sin() * (PI * p.y).sin();
    let zero = |_: Point2| 0.0;
    let opts = DiscretizationOptions {
        gradient_projection: false,
        ..options(cfg, DofBasis::default())
    };
    for &k in &cfg.k {
        for (l, mesh) in meshes.iter().enumerate() {
            let first = report.records.len();
            for &method in &cfg.method {
                let mut best = f64::INFINITY;
                let mut dofs = 0;
                for _ in 0..TIMING_REPEATS {
                    let start = Instant::now();
                    let disc = Discretization::new(mesh, method, k, opts)?;
                    disc.assemble(cfg.alpha, &f, &zero)?;
                    best = best.min(start.elapsed().as_secs_f64());
                    dofs = disc.num_dofs();
                }
                let mut r = RunRecord::new(method, k, format!("{}-level-{l}", cfg.mesh));
                r.h = mesh.h();
                r.dofs = dofs;
                r.seconds = best;
                report.records.push(r);
            }
            let group = &mut report.records[first..];
            let fastest = group.iter().map(|r| r.seconds).fold(f64::INFINITY, f64::min);
            for r in group.iter_mut() {
                r.ratio = Some(r.seconds / fastest);
            }
            if let Some(slowest) = group.iter().max_by(|a, b| a.seconds.total_cmp(&b.seconds)) {
                report.notes.push(format!("k={k} level {l}: slowest {}", slowest.method));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dof_estimate_matches_the_dof_map() {
        let m = generate_mesh(MeshFamily::ConvexPoly, MeshParams::divisions(3)).unwrap();
        for family in [Family::Nc, Family::C] {
            for k in 1..=4 {
                let map = crate::system::GlobalDofMap::new(&m, family, k);
                assert_eq!(estimated_dofs(&m, family, k), map.num_dofs);
            }
        }
    }

    #[test]
    fn oversized_runs_are_refused_with_the_estimate() {
        let cfg = ExperimentConfig {
            levels: 9,
            ..ExperimentConfig::default()
        };
        match run_experiment(&cfg) {
            Err(VemError::Refused(msg)) => assert!(msg.contains("estimated"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn convergence_report_has_one_record_per_level() {
        let cfg = ExperimentConfig {
            k: vec![1],
            levels: 3,
            base_divisions: 2,
            threads: Some(1),
            ..ExperimentConfig::default()
        };
        let report = run_experiment(&cfg).unwrap();
        assert_eq!(report.records.len(), 3);
        assert!(report.records[0].order_l2.is_none());
        assert!(report.records[2].order_l2.unwrap() > 1.5);
        assert_eq!(report.fits.len(), 1);
        assert_eq!(report.environment.quad_exactness, "2k+4");
    }
}
