mod common;

use common::{bfs_component_count, run_count};
use nonconvex_minimax::mesh::{
    build_box_grid, build_box_grid_with, build_circle, build_product, components, is_connected, run_components,
    BoxGridOptions, Grid1D, Space,
};
use proptest::prelude::*;

fn random_grid() -> impl Strategy<Value = (Space, Vec<bool>)> {
    (prop::collection::vec(2usize..7, 1..4), any::<bool>())
        .prop_flat_map(|(res, diagonal)| {
            let bounds: Vec<(f64, f64)> = res.iter().map(|_| (0.0, 1.0)).collect();
            let opts = BoxGridOptions {
                diagonal,
                ..Default::default()
            };
            let space = build_box_grid_with(&bounds, &res, &opts).unwrap();
            let n = space.len();
            (Just(space), prop::collection::vec(any::<bool>(), n))
        })
}

fn random_circle() -> impl Strategy<Value = (Space, Vec<bool>)> {
    (3usize..40).prop_flat_map(|n| (Just(build_circle(n).unwrap()), prop::collection::vec(any::<bool>(), n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn components_match_bfs_on_grids((space, flags) in random_grid()) {
        let c = components(&space, &flags);
        prop_assert_eq!(c.component_count, bfs_component_count(&space, &flags));
        prop_assert_eq!(is_connected(&space, &flags), c.component_count <= 1);
    }
}

proptest! {
    #[test]
    fn components_match_bfs_on_circles((space, flags) in random_circle()) {
        prop_assert_eq!(components(&space, &flags).component_count, bfs_component_count(&space, &flags));
    }

    #[test]
    fn labels_partition_members_and_respect_edges((space, flags) in random_grid()) {
        let c = components(&space, &flags);
        for i in 0..space.len() {
            prop_assert_eq!(c.labels[i].is_some(), flags[i]);
            if let Some(l) = c.labels[i] {
                prop_assert!(l < c.component_count);
                for &k in space.neighbors(i) {
                    if flags[k] {
                        prop_assert_eq!(c.labels[k], Some(l));
                    }
                }
            }
        }
        // Every label class is connected on its own.
        for l in 0..c.component_count {
            let class: Vec<bool> = c.labels.iter().map(|&x| x == Some(l)).collect();
            prop_assert_eq!(bfs_component_count(&space, &class), 1);
        }
        prop_assert_eq!(c.member_count(), flags.iter().filter(|&&f| f).count());
    }

    #[test]
    fn labeling_is_idempotent((space, flags) in random_grid()) {
        let a = components(&space, &flags);
        let b = components(&space, &flags);
        prop_assert_eq!(a.labels, b.labels);
        prop_assert_eq!(a.representatives, b.representatives);
    }

    #[test]
    fn adding_an_adjacent_point_adds_at_most_one((space, flags) in random_grid(), pick in any::<prop::sample::Index>()) {
        let members: Vec<usize> = (0..space.len()).filter(|&i| flags[i]).collect();
        prop_assume!(!members.is_empty());
        let i = members[pick.index(members.len())];
        let outside: Vec<usize> = space.neighbors(i).iter().copied().filter(|&k| !flags[k]).collect();
        prop_assume!(!outside.is_empty());
        let mut bigger = flags.clone();
        bigger[outside[0]] = true;
        let before = components(&space, &flags).component_count;
        prop_assert!(components(&space, &bigger).component_count <= before + 1);
    }

    #[test]
    fn run_components_match_run_count(flags in prop::collection::vec(any::<bool>(), 0..60)) {
        prop_assert_eq!(run_components(&flags).component_count, run_count(&flags));
    }

    #[test]
    fn adjacency_is_symmetric((space, _) in random_grid()) {
        prop_assert!(space.check_invariants().is_ok());
        for i in 0..space.len() {
            prop_assert!(!space.neighbors(i).contains(&i));
            for &k in space.neighbors(i) {
                prop_assert!(space.neighbors(k).contains(&i));
            }
        }
    }
}

#[test]
fn box_grid_examples() {
    let s = build_box_grid(&[(0.0, 1.0)], &[3]).unwrap();
    assert_eq!(s.points().map(|p| p[0]).collect::<Vec<_>>(), vec![0.0, 0.5, 1.0]);
    assert_eq!(s.neighbors(1).len(), 2);
    let s = build_box_grid(&[(0.0, 1.0), (0.0, 1.0)], &[3, 3]).unwrap();
    assert_eq!(s.len(), 9);
    assert_eq!(s.neighbors(4).len(), 4);
    for corner in [0, 2, 6, 8] {
        assert_eq!(s.neighbors(corner).len(), 2);
    }
    let s = build_box_grid(&[(-1.0, 1.0)], &[201]).unwrap();
    assert!((s.spacing() - 0.01).abs() < 1e-15);
    let flagged: Vec<usize> = (0..201).filter(|&i| s.is_boundary(i)).collect();
    assert_eq!(flagged, vec![0, 200]);
}

#[test]
fn size_cap_and_degenerate_bounds() {
    let opts = BoxGridOptions {
        cap: 100,
        ..Default::default()
    };
    assert!(build_box_grid_with(&[(0.0, 1.0), (0.0, 1.0)], &[11, 11], &opts).is_err());
    assert!(build_box_grid(&[(1.0, 1.0)], &[3]).is_err());
    assert!(build_box_grid(&[(0.0, 1.0)], &[1]).is_err());
}

#[test]
fn circle_examples() {
    let s = build_circle(4).unwrap();
    let pts: Vec<Vec<f64>> = s.points().map(|p| p.to_vec()).collect();
    assert_eq!(pts, vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]]);
    let s = build_circle(360).unwrap();
    for p in s.points() {
        assert!(s.find_point(&[-p[0], -p[1]]).is_some());
    }
    assert!(is_connected(&build_circle(3).unwrap(), &[true; 3]));
    assert!(build_circle(2).is_err());

    let c8 = build_circle(8).unwrap();
    let mut cut_twice = vec![true; 8];
    cut_twice[0] = false;
    cut_twice[4] = false;
    assert_eq!(components(&c8, &cut_twice).component_count, 2);
    let mut cut_once = vec![true; 8];
    cut_once[3] = false;
    assert!(is_connected(&c8, &cut_once));
}

#[test]
fn empty_set_and_line_gap() {
    let s = build_box_grid(&[(0.0, 1.0)], &[3]).unwrap();
    assert_eq!(components(&s, &[false; 3]).component_count, 0);
    assert!(is_connected(&s, &[false; 3]));
    assert!(!is_connected(&s, &[true, false, true]));
    let full = build_box_grid(&[(0.0, 1.0), (0.0, 2.0)], &[4, 5]).unwrap();
    assert_eq!(components(&full, &vec![true; 20]).component_count, 1);
}

#[test]
fn grid_values_and_invariants() {
    let g = Grid1D::new(-1.0, 1.0, 201).unwrap();
    assert_eq!(g.value(100), 0.0);
    assert_eq!(g.value(200), 1.0);
    assert!(g.values().windows(2).all(|w| w[0] < w[1]));
    assert!(Grid1D::new(0.0, 1.0, 1).is_err());
    assert!(Grid1D::new(1.0, 0.0, 5).is_err());
}

#[test]
fn product_mesh_is_decomposable() {
    // Swapping one coordinate between two product points lands on a point.
    let states = vec![vec![0.0, 1.0, 2.0], vec![-1.0, 1.0], vec![0.0, 0.5, 1.0]];
    let s = build_product(&states, 1000).unwrap();
    assert_eq!(s.len(), 18);
    for a in s.points() {
        for b in s.points() {
            for t in 0..3 {
                let mut swapped = a.to_vec();
                swapped[t] = b[t];
                assert!(s.find_point(&swapped).is_some());
            }
        }
    }
    for i in 0..s.len() {
        for &k in s.neighbors(i) {
            let diff = (0..3).filter(|&t| s.point(i)[t] != s.point(k)[t]).count();
            assert_eq!(diff, 1);
        }
    }
}
