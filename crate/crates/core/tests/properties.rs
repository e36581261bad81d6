use proptest::prelude::*;
use vemsf::cell::{CellContext, CellOptions};
use vemsf::experiment::{Environment, ExperimentConfig, ExperimentKind, ExperimentReport, RunRecord};
use vemsf::linalg::sym_eigen;
use vemsf::macrodiv::{build_macro_div_space, MacroMode, MacroOptions};
use vemsf::mesh::{generate_mesh, hexagon_hi, MeshFamily, MeshFile, MeshParams, Point2, PolygonalMesh};
use vemsf::system::{Discretization, DiscretizationOptions};
use vemsf::Method;

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![any::<f64>().prop_filter("finite", |v| v.is_finite()), -1e3..1e3f64]
}

fn record() -> impl Strategy<Value = RunRecord> {
    (
        finite(),
        proptest::option::of(finite()),
        proptest::option::of(finite()),
        proptest::option::of(finite()),
        proptest::option::of(0usize..5),
        0.0..1e4f64,
    )
        .prop_map(|(h, e, o, c, z, s)| {
            let mut r = RunRecord::new(Method::Sfcvem, 3, "case");
            r.h = h;
            r.dofs = 17;
            r.err_l2 = e;
            r.err_grad = e.map(|v| v * 0.1);
            r.order_l2 = o;
            r.cond = c;
            r.lam_max = c;
            r.n_zero = z;
            r.seconds = s;
            r
        })
}

/// A convex hexagon: the regular one with bounded radial perturbations.
fn hexagon() -> impl Strategy<Value = Vec<Point2>> {
    proptest::collection::vec(0.8..1.2f64, 6).prop_map(|r| {
        (0..6)
            .map(|j| {
                let t = std::f64::consts::PI / 3.0 * j as f64;
                Point2::new(r[j] * t.cos(), r[j] * t.sin())
            })
            .collect()
    })
}

fn stiffness(points: &[Point2], method: Method, k: usize) -> nalgebra::DMatrix<f64> {
    let m = PolygonalMesh::single_cell(points).unwrap();
    let opts = DiscretizationOptions {
        gradient_projection: false,
        ..DiscretizationOptions::default()
    };
    Discretization::new(&m, method, k, opts).unwrap().local_matrices(0, 0.0, &|_| 0.0).unwrap().a
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn report_json_round_trip_is_bit_exact(records in proptest::collection::vec(record(), 0..6), zt in 1e-12..1e-4f64) {
        let report = ExperimentReport {
            experiment: ExperimentKind::PatchTest,
            config: ExperimentConfig { zero_threshold: zt, ..ExperimentConfig::new(ExperimentKind::PatchTest) },
            environment: Environment {
                version: "x".into(),
                quad_exactness: "2k+4".into(),
                zero_threshold: zt,
                nullspace_rtol: 1e-10,
                dof_basis: "orthonormal".into(),
                subtriangulation: "fan".into(),
                solver: "dense".into(),
                cg_tolerance: 1e-12,
                dense_threshold: 2000,
                parallel: true,
                threads: 4,
            },
            records,
            fits: vec![],
            notes: vec!["n".into()],
        };
        let back = ExperimentReport::from_json(&report.to_json().unwrap()).unwrap();
        for (a, b) in report.records.iter().zip(&back.records) {
            prop_assert_eq!(a.h.to_bits(), b.h.to_bits());
            prop_assert_eq!(a.err_l2.map(f64::to_bits), b.err_l2.map(f64::to_bits));
            prop_assert_eq!(a.cond.map(f64::to_bits), b.cond.map(f64::to_bits));
            prop_assert_eq!(a.seconds.to_bits(), b.seconds.to_bits());
        }
        prop_assert_eq!(back, report);
    }

    #[test]
    fn mesh_file_round_trip(n in 1usize..6, family in prop_oneof![
        Just(MeshFamily::ConvexPoly), Just(MeshFamily::NonconvexPoly), Just(MeshFamily::UniformQuads)
    ]) {
        let m = generate_mesh(family, MeshParams::divisions(n)).unwrap();
        let json = serde_json::to_string(&MeshFile::from(&m)).unwrap();
        let back = serde_json::from_str::<MeshFile>(&json).unwrap().into_mesh().unwrap();
        prop_assert_eq!(back.vertices(), m.vertices());
        prop_assert_eq!(back.cells(), m.cells());
        prop_assert_eq!(back.num_edges(), m.num_edges());
    }

    #[test]
    fn macro_projection_is_orthogonal(points in hexagon(), k in 1usize..4, c in proptest::collection::vec(-1.0..1.0f64, 6)) {
        // ‖g‖² = ‖Pg‖² + ‖g − Pg‖² for a smooth non-polynomial field.
        let ctx = CellContext::new(&points, k + 1, &CellOptions::default()).unwrap();
        let space = build_macro_div_space(&ctx, k, MacroMode::Nc, &MacroOptions::default()).unwrap();
        let g = |p: Point2| Point2::new((c[0] * p.x + c[1] * p.y).sin() + c[2], (c[3] * p.x * p.y).cos() * c[4] + c[5] * p.x);
        let coef = space.project_field(&ctx, g).unwrap();
        let (mut full, mut proj, mut rest) = (0.0, 0.0, 0.0);
        for ((&p, &w), &t) in ctx.quad.points.iter().zip(&ctx.quad.weights).zip(&ctx.quad.triangle) {
            let v = g(p);
            let pv = space.field(t, &coef, p);
            full += w * v.dot(v);
            proj += w * pv.dot(pv);
            rest += w * (v - pv).dot(v - pv);
        }
        prop_assert!((full - proj - rest).abs() <= 1e-10 * full.max(1e-300), "{} vs {}", full, proj + rest);
    }

    #[test]
    fn sf_kernel_is_the_constants(points in hexagon(), k in 1usize..4, conforming in any::<bool>()) {
        let method = if conforming { Method::Sfcvem } else { Method::Sfncvem };
        let a = stiffness(&points, method, k);
        let (ev, _) = sym_eigen(&a);
        let lam_max = ev.iter().cloned().fold(0.0, f64::max);
        let zeros = ev.iter().filter(|&&l| l.abs() <= 1e-10 * lam_max).count();
        prop_assert_eq!(zeros, 1);
        prop_assert!(ev.iter().all(|&l| l >= -1e-10 * lam_max));
    }

    #[test]
    fn stiffness_is_invariant_under_similarity(t in 0.05..20.0f64, dx in -5.0..5.0f64, dy in -5.0..5.0f64, k in 1usize..4) {
        let base = hexagon_hi(1);
        let moved: Vec<Point2> = base.iter().map(|&p| p * t + Point2::new(dx, dy)).collect();
        for method in [Method::Sfncvem, Method::Sfcvem] {
            let a = stiffness(&base, method, k);
            let b = stiffness(&moved, method, k);
            prop_assert!((&a - &b).amax() <= 1e-8 * a.amax(), "{:?}: {}", method, (&a - &b).amax());
        }
    }
}
