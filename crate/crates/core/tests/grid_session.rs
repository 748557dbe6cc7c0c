mod common;

use std::collections::HashSet;

use common::pv;
use proptest::prelude::*;
use seqplane_core::{
    reachable_set_size, simulate_line_session, simulate_plane_continuous, simulate_plane_session, BoundaryMode,
    Error, GridSpec, Line, ParamVector, Plane, PlaneLocalCoord, PlaneSession,
};

fn small_plane(mode: BoundaryMode) -> Plane {
    Plane::new(pv(&[0.5, 0.5, 0.5]), vec![0.1, 0.0, 0.0], vec![0.0, 0.1, 0.0], mode).unwrap()
}

#[test]
fn zooming_into_the_center_quarters_the_area() {
    let mut s = PlaneSession::new(small_plane(BoundaryMode::ScaleHalfDiagonal), GridSpec::default()).unwrap();
    s.choose(0, 0).unwrap();
    let cells = s.grid_cells().unwrap();
    assert_eq!(s.spacing(), 0.25);
    let (lo, hi) = (cells.first().unwrap().coord, cells.last().unwrap().coord);
    assert_eq!((lo.s, lo.t, hi.s, hi.t), (-0.5, -0.5, 0.5, 0.5));
}

#[test]
fn edge_clicks_extrapolate_beyond_the_previous_extent() {
    let mut s = PlaneSession::new(small_plane(BoundaryMode::MaskOutside), GridSpec::default()).unwrap();
    s.choose(2, 0).unwrap();
    assert_eq!(s.grid_center().s, 1.0);
    let max_s = s.grid_cells().unwrap().iter().map(|c| c.coord.s).fold(f64::MIN, f64::max);
    assert_eq!(max_s, 1.5);
    s.choose(2, 0).unwrap();
    assert_eq!(s.grid_center().s, 1.5);
    s.choose(0, 0).unwrap();
    s.choose(0, 0).unwrap();
    assert!(s.completed());
    let chosen = s.chosen_point().unwrap();
    assert!((chosen[0] - 0.65).abs() < 1e-15);
}

#[test]
fn all_center_clicks_choose_the_plane_center() {
    let plane = small_plane(BoundaryMode::ScaleHalfDiagonal);
    let mut s = PlaneSession::new(plane.clone(), GridSpec::default()).unwrap();
    for level in 0..4 {
        assert!(!s.completed());
        assert_eq!(s.level(), level);
        s.choose(0, 0).unwrap();
    }
    assert!(s.completed());
    assert_eq!(s.chosen_point(), Some(plane.center()));
    let intent = s.finalize_preference().unwrap();
    assert_eq!(intent.losers.len(), 4);
    assert_eq!(intent.losers, plane.vertices().to_vec());
}

#[test]
fn off_center_choice_beats_all_five_representatives() {
    let plane = small_plane(BoundaryMode::ScaleHalfDiagonal);
    let mut s = PlaneSession::new(plane.clone(), GridSpec::default()).unwrap();
    for _ in 0..4 {
        s.choose(1, -1).unwrap();
    }
    let intent = s.finalize_preference().unwrap();
    assert_eq!(intent.losers, plane.representatives());
}

#[test]
fn clipped_vertex_is_used_as_loser() {
    let plane = Plane::from_parts(
        pv(&[0.1, 0.5]),
        vec![0.3, 0.0],
        vec![0.0, 0.2],
        1.0 / 3.0,
        1.0,
        BoundaryMode::ScaleHalfDiagonal,
    )
    .unwrap();
    let mut s = PlaneSession::new(plane, GridSpec::new(3, 1, 2.0).unwrap()).unwrap();
    s.choose(1, 1).unwrap();
    let intent = s.finalize_preference().unwrap();
    assert_eq!(intent.losers.len(), 5);
    assert!(intent.losers.iter().any(|l| l[0].abs() < 1e-15 && l[1] == 0.5));
}

#[test]
fn reachable_set_sizes() {
    assert_eq!(reachable_set_size(&GridSpec::new(3, 1, 2.0).unwrap()).unwrap(), 9);
    assert_eq!(reachable_set_size(&GridSpec::new(5, 1, 2.0).unwrap()).unwrap(), 25);

    // brute force in integer units of the level-1 spacing (0.25)
    let mut oracle = HashSet::new();
    for i0 in -2i64..=2 {
        for j0 in -2i64..=2 {
            for i1 in -2..=2 {
                for j1 in -2..=2 {
                    oracle.insert((2 * i0 + i1, 2 * j0 + j1));
                }
            }
        }
    }
    let two = reachable_set_size(&GridSpec::new(5, 2, 2.0).unwrap()).unwrap();
    assert_eq!(two, oracle.len());
    assert!(two > 25);
    assert!(reachable_set_size(&GridSpec::default()).unwrap() > two);
}

#[test]
fn greedy_user_finds_center_optimum() {
    let plane = small_plane(BoundaryMode::ScaleHalfDiagonal);
    let c = plane.center().clone();
    let (chosen, intent) =
        simulate_plane_session(&plane, &GridSpec::default(), |x| -x.iter().zip(c.iter()).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
            .unwrap();
    assert_eq!(chosen, c);
    assert_eq!(intent.losers.len(), 4);
}

#[test]
fn greedy_user_follows_linear_oracle_to_the_reachable_edge() {
    // resolution 3: h0 = 1, h1 = 0.5, so the greedy path is s = 0 -> 1 -> 1.5;
    // t is a tie at every level and the lowest row-major index (j = -1) wins
    let plane = small_plane(BoundaryMode::MaskOutside);
    let (chosen, _) = simulate_plane_session(&plane, &GridSpec::new(3, 2, 2.0).unwrap(), |x| x[0]).unwrap();
    assert_eq!(chosen, plane.point(PlaneLocalCoord::new(1.5, -1.5)));
    assert!((chosen[0] - 0.65).abs() < 1e-15);
}

#[test]
fn greedy_user_ignores_cells_outside_the_box() {
    let plane = Plane::new(pv(&[0.9, 0.5]), vec![0.4, 0.0], vec![0.0, 0.1], BoundaryMode::MaskOutside).unwrap();
    let (chosen, intent) = simulate_plane_session(&plane, &GridSpec::default(), |x| x[0]).unwrap();
    assert!(chosen[0] <= 1.0);
    assert!(intent.losers.iter().all(|l| l.iter().all(|v| (0.0..=1.0).contains(v))));
    assert_eq!(intent.losers.len(), 4);
}

#[test]
fn continuous_user_reaches_finer_optimum() {
    let plane = small_plane(BoundaryMode::ScaleHalfDiagonal);
    let target = 0.5 + 0.1 * 0.3;
    let oracle = |x: &[f64]| -(x[0] - target).powi(2) - (x[1] - 0.5).powi(2);
    let (chosen, intent) = simulate_plane_continuous(&plane, 129, oracle).unwrap();
    assert!((chosen[0] - target).abs() <= 0.1 / 128.0 + 1e-15);
    assert_eq!(intent.losers.len(), 5);
}

#[test]
fn line_session_examples() {
    let line = Line { start: pv(&[0.2, 0.2]), end: pv(&[0.8, 0.6]) };
    let (chosen, intent) = simulate_line_session(&line, 1000, |x| -x[0]).unwrap();
    assert_eq!(chosen, line.start);
    assert_eq!(intent.losers, vec![line.end.clone()]);

    let (chosen, intent) = simulate_line_session(&line, 1000, |_| 1.0).unwrap();
    assert_eq!(chosen, line.start);
    assert_eq!(intent.losers.len(), 1);

    let (chosen, intent) = simulate_line_session(&line, 1000, |x| -(x[0] - (0.2 + 0.6 * 0.3)).powi(2)).unwrap();
    let t = (chosen[0] - 0.2) / 0.6;
    assert!((t - 0.3).abs() <= 1.0 / 999.0);
    assert_eq!(intent.losers, vec![line.start.clone(), line.end.clone()]);

    let (chosen, _) = simulate_line_session(&line, 1000, |x| x[0]).unwrap();
    assert_eq!(chosen, line.end);
    assert!(simulate_line_session(&line, 1, |x| x[0]).is_err());
}

#[test]
fn snapshot_layout_and_mid_zoom_restore() {
    let mut s = PlaneSession::new(small_plane(BoundaryMode::ScaleHalfDiagonal), GridSpec::default()).unwrap();
    s.choose(1, 2).unwrap();
    s.choose(-2, 0).unwrap();
    let json = s.to_json();
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    for key in ["c", "u", "v", "alpha_u", "alpha_v", "mode", "level", "grid_center", "choices", "grid"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["choices"], serde_json::json!([[0, 1, 2], [1, -2, 0]]));
    assert_eq!(v["level"], 2);
    let restored = PlaneSession::from_json(&json).unwrap();
    assert_eq!(restored, s);
    assert_eq!(restored.to_json(), json);
    assert_eq!(restored.grid_cells().unwrap(), s.grid_cells().unwrap());

    let mut tampered = v.clone();
    tampered["grid_center"] = serde_json::json!([0.0, 0.0]);
    assert!(PlaneSession::from_json(&tampered.to_string()).is_err());
}

#[test]
fn rejected_click_leaves_session_untouched() {
    let plane = Plane::new(pv(&[0.95, 0.5]), vec![0.4, 0.0], vec![0.0, 0.1], BoundaryMode::MaskOutside).unwrap();
    let mut s = PlaneSession::new(plane, GridSpec::default()).unwrap();
    let before = s.clone();
    assert_eq!(s.choose(1, 0), Err(Error::RejectedChoice { i: 1, j: 0 }));
    assert_eq!(s, before);
}

fn arb_plane() -> impl Strategy<Value = Plane> {
    (
        prop::collection::vec(0.0..=1.0f64, 3),
        prop::collection::vec(-0.6..0.6f64, 3),
        prop::collection::vec(-0.6..0.6f64, 3),
        prop::bool::ANY,
    )
        .prop_map(|(c, u, v, mask)| {
            let mode = if mask { BoundaryMode::MaskOutside } else { BoundaryMode::ScaleHalfDiagonal };
            Plane::new(ParamVector::new(c).unwrap(), u, v, mode).unwrap()
        })
}

fn exact_point(plane: &Plane, coord: PlaneLocalCoord) -> Vec<f64> {
    let (a, b) = plane.warped(coord);
    (0..plane.dim()).map(|k| plane.center()[k] + a * plane.u()[k] + b * plane.v()[k]).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn zoom_invariants_hold_along_random_click_paths(
        plane in arb_plane(),
        clicks in prop::collection::vec((-2i32..=2, -2i32..=2), 4),
    ) {
        let spec = GridSpec::default();
        let mut s = PlaneSession::new(plane.clone(), spec).unwrap();
        let mut previous: Option<ParamVector> = None;
        for (level, (i, j)) in clicks.into_iter().enumerate() {
            prop_assert_eq!(s.spacing(), 0.5 / f64::powi(2.0, level as i32));
            let cells = s.grid_cells().unwrap();
            prop_assert_eq!(cells.len(), 25);
            let center = &cells[12];
            if let Some(p) = &previous {
                prop_assert_eq!(&center.point, p);
            }
            for cell in &cells {
                let expected = PlaneLocalCoord::new(s.grid_center().s + cell.i as f64 * s.spacing(),
                                                    s.grid_center().t + cell.j as f64 * s.spacing());
                prop_assert_eq!(cell.coord, expected);
                let exact = exact_point(&plane, cell.coord);
                for (a, b) in cell.point.iter().zip(&exact) {
                    prop_assert!((a - b).abs() <= 1e-12);
                }
                prop_assert_eq!(cell.valid, cell.point.iter().all(|x| (0.0..=1.0).contains(x)));
            }
            let target = cells.iter().find(|c| c.i == i && c.j == j).unwrap();
            let valid = target.valid;
            let picked = if valid { target.clone() } else { center.clone() };
            if !valid && !center.valid {
                break;
            }
            s.choose(picked.i, picked.j).unwrap();
            previous = Some(picked.point.clone());
            let restored = PlaneSession::from_json(&s.to_json()).unwrap();
            prop_assert_eq!(&restored, &s);
        }
    }

    #[test]
    fn greedy_choice_dominates_representatives(
        plane in arb_plane(),
        target in prop::collection::vec(0.0..=1.0f64, 3),
    ) {
        let oracle = |x: &[f64]| (-x.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum::<f64>()).exp();
        let plane = seqplane_core::clip_negative_vertices(&plane, &seqplane_core::SearchSpace::new(3).unwrap()).unwrap();
        prop_assume!(plane.center().iter().all(|x| (0.0..=1.0).contains(x)));
        let (chosen, intent) = simulate_plane_session(&plane, &GridSpec::default(), oracle).unwrap();
        for loser in &intent.losers {
            prop_assert!(oracle(&chosen) >= oracle(loser));
        }
    }
}
