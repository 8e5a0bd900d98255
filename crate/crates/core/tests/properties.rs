//! Property tests for the structural invariants.

use macrostokes::constraints::{build_constraint_transform, build_theta_functionals};
use macrostokes::dofs::DofMap;
use macrostokes::experiment::{emit_csv_string, parse_csv, ReportRow};
use macrostokes::mesh::{build_structured_square, parse_mesh, format_mesh, Triangulation};
use macrostokes::split::powell_sabin_split;
use proptest::prelude::*;

/// Structured meshes with interior vertices jittered; stays a valid
/// triangulation for small jitter.
fn jittered_square(n: usize, seed: u64) -> Triangulation {
    let base = build_structured_square(n).unwrap();
    let mut rng_state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
    let mut next = move || {
        rng_state ^= rng_state << 13;
        rng_state ^= rng_state >> 7;
        rng_state ^= rng_state << 17;
        (rng_state as f64 / u64::MAX as f64) - 0.5
    };
    let mut vertices = base.vertices.clone();
    let jitter = 0.15 / n as f64;
    for (v, p) in vertices.iter_mut().enumerate() {
        if !base.boundary_vertex[v] {
            p.0[0] += jitter * next();
            p.0[1] += jitter * next();
        }
    }
    let cells: Vec<usize> = (0..base.n_cells()).flat_map(|c| base.cell(c).to_vec()).collect();
    Triangulation::from_cells(2, vertices, cells).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mesh_io_roundtrips_exactly(n in 1usize..5, seed in 0u64..1000) {
        let mesh = jittered_square(n, seed);
        let read = parse_mesh(&format_mesh(&mesh)).unwrap();
        prop_assert_eq!(&mesh, &read);
    }

    #[test]
    fn split_constraints_annihilate_transform_range(
        n in 1usize..4,
        seed in 0u64..500,
        coeffs_seed in 0u64..1000,
    ) {
        let mesh = jittered_square(n, seed);
        let sm = powell_sabin_split(&mesh).unwrap();
        let dofs = DofMap::new(&sm);
        let ct = build_constraint_transform(&sm, &dofs);
        let thetas = build_theta_functionals(&sm, &dofs).unwrap();
        let mut state = coeffs_seed.wrapping_mul(0x2545f4914f6cdd1d).wrapping_add(3);
        let c: Vec<f64> = (0..ct.n_reduced())
            .map(|_| {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state as f64 / u64::MAX as f64) - 0.5
            })
            .collect();
        let raw = ct.expand(&c);
        for th in &thetas {
            prop_assert!(th.apply(&raw).abs() <= 1e-12);
        }
        // children partition parents on jittered meshes too
        let mut child_measure = vec![0.0; mesh.n_cells()];
        for cell in 0..sm.mesh.n_cells() {
            child_measure[sm.parent[cell]] += sm.mesh.measure(cell);
        }
        for cell in 0..mesh.n_cells() {
            let parent = mesh.measure(cell);
            prop_assert!((child_measure[cell] - parent).abs() <= 1e-12 * parent);
        }
    }

    #[test]
    fn csv_roundtrips_to_printed_precision(
        errs in proptest::collection::vec((1e-8f64..1e2, 1e-8f64..1e2, 1e-8f64..1e2), 1..6),
    ) {
        let rows: Vec<ReportRow> = errs
            .iter()
            .enumerate()
            .map(|(i, &(a, b, c))| ReportRow {
                n: i + 1,
                h: 1.0 / (i + 1) as f64,
                err_u_l2: a,
                err_u_h1: b,
                err_p_l2: c,
                div_norm: 1e-13,
                beta: if i % 2 == 0 { Some(0.3) } else { None },
                ..ReportRow::default()
            })
            .collect();
        let text = emit_csv_string(&rows);
        let parsed = parse_csv(&text).unwrap();
        prop_assert_eq!(emit_csv_string(&parsed), text);
    }
}
