mod common;

use common::{bfs_component_count, brute_gap, exact_argmax, run_count};
use nonconvex_minimax::analysis::{
    argmax_set, argmin_set, check_argmin_usc, check_hypotheses, duality_gap, evaluate_table, exhaustion_from_table,
    exhaustion_gap, locate_saddle, sublevel_set, ArgTolerance, Clause, HypothesisOptions, Mode, ValueTable,
};
use nonconvex_minimax::instances::{build_instance, builtin_spec, Objective};
use nonconvex_minimax::mesh::{build_box_grid, Grid1D};
use proptest::prelude::*;

/// Tables with values from a small integer alphabet, so ties and saddles
/// are common.
fn small_table() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..12, 1usize..12).prop_flat_map(|(r, c)| {
        prop::collection::vec(prop::collection::vec((-3i32..4).prop_map(f64::from), c), r)
    })
}

fn real_table() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..20, 1usize..20)
        .prop_flat_map(|(r, c)| prop::collection::vec(prop::collection::vec(-1e3f64..1e3, c), r))
}

proptest! {
    #[test]
    fn weak_duality_is_exact(rows in prop_oneof![small_table(), real_table()]) {
        let t = ValueTable::from_rows(rows.clone()).unwrap();
        let g = duality_gap(&t);
        let (si, is) = brute_gap(&rows);
        prop_assert_eq!(g.sup_inf, si);
        prop_assert_eq!(g.inf_sup, is);
        prop_assert!(g.gap >= 0.0);
        let wl = g.witness_lambda;
        prop_assert_eq!(rows.iter().map(|r| r[wl]).fold(f64::INFINITY, f64::min), si);
        prop_assert_eq!(rows[g.witness_x].iter().copied().fold(f64::NEG_INFINITY, f64::max), is);
    }

    #[test]
    fn saddle_exists_iff_zero_gap(rows in small_table()) {
        let t = ValueTable::from_rows(rows).unwrap();
        let g = duality_gap(&t);
        match locate_saddle(&t, ArgTolerance::EXACT) {
            Some(s) => {
                prop_assert_eq!(g.gap, 0.0);
                prop_assert_eq!(s.value, g.sup_inf);
                prop_assert_eq!(s.value, g.inf_sup);
                prop_assert_eq!(s.residual_min, 0.0);
                prop_assert_eq!(s.residual_max, 0.0);
            }
            None => prop_assert!(g.gap > 0.0),
        }
    }

    #[test]
    fn certificates_respect_epsilon(rows in real_table(), eps in 0.0f64..500.0) {
        let t = ValueTable::from_rows(rows).unwrap();
        if let Some(s) = locate_saddle(&t, ArgTolerance::absolute(eps)) {
            prop_assert!(s.residual_min >= 0.0 && s.residual_min <= eps);
            prop_assert!(s.residual_max >= 0.0 && s.residual_max <= eps);
            prop_assert!(duality_gap(&t).gap <= 2.0 * eps);
        }
    }

    #[test]
    fn arg_sets_grow_with_epsilon(rows in real_table(), e1 in 0.0f64..100.0, e2 in 0.0f64..100.0) {
        let t = ValueTable::from_rows(rows).unwrap();
        let (lo, hi) = (e1.min(e2), e1.max(e2));
        for j in 0..t.cols() {
            let a = argmin_set(&t, j, ArgTolerance::absolute(lo));
            let b = argmin_set(&t, j, ArgTolerance::absolute(hi));
            prop_assert!(a.members.iter().all(|m| b.members.contains(m)));
            prop_assert!(!a.members.is_empty());
        }
        for i in 0..t.rows() {
            let a = argmax_set(&t, i, ArgTolerance::absolute(lo));
            let b = argmax_set(&t, i, ArgTolerance::absolute(hi));
            prop_assert!(a.members.iter().all(|m| b.members.contains(m)));
        }
    }

    #[test]
    fn sublevels_grow_with_level(rows in real_table(), r1 in -1e3f64..1e3, r2 in -1e3f64..1e3) {
        let t = ValueTable::from_rows(rows).unwrap();
        let (lo, hi) = (r1.min(r2), r1.max(r2));
        for j in 0..t.cols() {
            let a = sublevel_set(&t, j, lo);
            let b = sublevel_set(&t, j, hi);
            prop_assert!(a.iter().zip(&b).all(|(x, y)| !x || *y));
        }
    }

    #[test]
    fn exhaustion_sup_inf_never_decreases(rows in real_table(), cuts in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..5)) {
        let t = ValueTable::from_rows(rows.clone()).unwrap();
        let cols = t.cols();
        let grid = Grid1D::new(0.0, 1.0, cols.max(2)).unwrap();
        prop_assume!(cols >= 2);
        // Nested ranges grown from a centre column.
        let centre = cols / 2;
        let mut ranges = Vec::new();
        let (mut lo, mut hi) = (centre, centre + 1);
        for (a, b) in cuts {
            lo = lo.saturating_sub((a * cols as f64) as usize);
            hi = (hi + (b * cols as f64) as usize).min(cols);
            ranges.push(lo..hi);
        }
        let rep = exhaustion_from_table(&t, &grid, &ranges, ArgTolerance::EXACT).unwrap();
        prop_assert!(rep.sup_inf_nondecreasing);
        for (step, r) in rep.steps.iter().zip(&ranges) {
            let sub: Vec<Vec<f64>> = rows.iter().map(|row| row[r.clone()].to_vec()).collect();
            let (si, is) = brute_gap(&sub);
            prop_assert_eq!(step.gap.sup_inf, si);
            prop_assert_eq!(step.gap.inf_sup, is);
            prop_assert_eq!(step.saddle.is_some(), si == is);
        }
    }

    #[test]
    fn hypothesis_component_counts_match_oracles(rows in small_table()) {
        let t = ValueTable::from_rows(rows.clone()).unwrap();
        let n = t.rows();
        let space = build_box_grid(&[(0.0, 1.0)], &[n.max(2)]).unwrap();
        prop_assume!(n >= 2 && t.cols() >= 2);
        let grid = Grid1D::new(0.0, 1.0, t.cols()).unwrap();
        let mut opts = HypothesisOptions::new(Mode::Theorem2);
        opts.tolerance = ArgTolerance::EXACT;
        let rep = check_hypotheses(&t, &space, &grid, &opts);
        for j in 0..t.cols() {
            let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            let m = col.iter().copied().fold(f64::INFINITY, f64::min);
            let flags: Vec<bool> = col.iter().map(|&v| v == m).collect();
            prop_assert_eq!(rep.argmin_components[j], bfs_component_count(&space, &flags));
        }
        for (i, row) in rows.iter().enumerate() {
            let mut flags = vec![false; row.len()];
            for j in exact_argmax(row) {
                flags[j] = true;
            }
            prop_assert_eq!(rep.argmax_components[i], run_count(&flags));
        }
        let argmax_ok = rep.argmax_components.iter().all(|&c| c <= 1);
        prop_assert_eq!(rep.clause(Clause::ArgmaxConnected).unwrap().holds, argmax_ok);
        // Sublevel verdict against a direct scan of every attained level and
        // midpoint (columns have at most 7 distinct values here).
        let mut sub_ok = true;
        for j in 0..t.cols() {
            let mut vals: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            let mut levels = vals.clone();
            levels.extend(vals.windows(2).map(|w| 0.5 * (w[0] + w[1])));
            for r in levels {
                let flags: Vec<bool> = rows.iter().map(|row| row[j] < r).collect();
                if bfs_component_count(&space, &flags) > 1 {
                    sub_ok = false;
                }
            }
        }
        prop_assert_eq!(rep.clause(Clause::SublevelConnected).unwrap().holds, sub_ok);
    }
}

fn quadratic_ok_3x3() -> ValueTable {
    let obj = Objective::new("q", None, |x, l| x[0] * x[0] + l * x[0]);
    let space = build_box_grid(&[(-1.0, 1.0)], &[3]).unwrap();
    let grid = Grid1D::new(0.0, 1.0, 3).unwrap();
    evaluate_table(&obj, &space, &grid).unwrap()
}

#[test]
fn table_examples() {
    let t = quadratic_ok_3x3();
    assert_eq!(t.get(0, 2), 0.0);
    let obj = Objective::new("const", None, |_, _| 1.5);
    let space = build_box_grid(&[(0.0, 1.0), (0.0, 1.0)], &[4, 3]).unwrap();
    let grid = Grid1D::new(0.0, 1.0, 5).unwrap();
    let c = evaluate_table(&obj, &space, &grid).unwrap();
    assert!(c.as_slice().iter().all(|&v| v == 1.5));
    assert_eq!(duality_gap(&c).gap, 0.0);

    let circle = build_instance(&{
        let mut s = builtin_spec("circle").unwrap();
        s.parameters.insert("n".into(), toml::Value::Integer(4));
        s
    })
    .unwrap();
    let ct = circle.table().unwrap();
    for k in 0..4 {
        assert_eq!(ct.get(k, k), 1.0);
    }
}

#[test]
fn argset_examples() {
    let t = ValueTable::from_rows(vec![vec![3.0], vec![1.0], vec![2.0]]).unwrap();
    assert_eq!(argmin_set(&t, 0, ArgTolerance::EXACT).members, vec![1]);
    assert_eq!(argmin_set(&t, 0, ArgTolerance::absolute(2.0)).members, vec![0, 1, 2]);

    let gap = build_instance(&builtin_spec("gapcase").unwrap()).unwrap();
    let gt = gap.table().unwrap();
    let half = gap.space.find_point(&[0.5]).unwrap();
    let set = argmax_set(&gt, half, ArgTolerance::EXACT);
    assert_eq!(set.members, vec![0, 100]);
    assert_eq!(set.level, 0.25);
}

#[test]
fn sublevel_examples() {
    let ok = build_instance(&builtin_spec("okcase").unwrap()).unwrap();
    let t = ok.table().unwrap();
    let j = ok.grid.locate(1.0, 0.0).unwrap();
    let col_min = t.column(j).fold(f64::INFINITY, f64::min);
    let col_max = t.column(j).fold(f64::NEG_INFINITY, f64::max);
    assert!(sublevel_set(&t, j, col_min).iter().all(|&f| !f));
    assert!(sublevel_set(&t, j, col_max + 1.0).iter().all(|&f| f));
    let s = sublevel_set(&t, j, 0.0);
    for (i, x) in ok.space.points().enumerate() {
        assert_eq!(s[i], x[0] > -1.0 && x[0] < 0.0, "x = {}", x[0]);
    }
}

#[test]
fn control_verdicts() {
    let ok = build_instance(&builtin_spec("okcase").unwrap()).unwrap();
    let t = ok.table().unwrap();
    let mut opts = HypothesisOptions::new(Mode::Theorem2);
    opts.tolerance = ArgTolerance::EXACT;
    assert!(check_hypotheses(&t, &ok.space, &ok.grid, &opts).holds);

    let gap = build_instance(&builtin_spec("gapcase").unwrap()).unwrap();
    let gt = gap.table().unwrap();
    let rep = check_hypotheses(&gt, &gap.space, &gap.grid, &opts);
    let v = rep.clause(Clause::ArgmaxConnected).unwrap();
    assert!(!v.holds);
    let w = v.witness.as_ref().unwrap();
    assert_eq!(w.x.as_deref(), Some(&[0.5][..]));
    assert_eq!(w.components.len(), 2);
    // The failure and the gap of about 1/4 occur together.
    assert!((duality_gap(&gt).gap - 0.25).abs() <= 0.02);

    let nq = build_instance(&builtin_spec("nonqc").unwrap()).unwrap();
    let nt = nq.table().unwrap();
    assert!(check_hypotheses(&nt, &nq.space, &nq.grid, &opts).holds);
}

#[test]
fn positive_controls_have_small_gap() {
    for name in ["okcase", "nonqc"] {
        let inst = build_instance(&builtin_spec(name).unwrap()).unwrap();
        let t = inst.table().unwrap();
        let l = inst.objective.lipschitz().unwrap();
        let bound = 2.0 * l * (inst.space.spacing() + inst.grid.spacing());
        assert!(duality_gap(&t).gap <= bound, "{name}");
    }
}

#[test]
fn saddle_examples() {
    let ok = build_instance(&builtin_spec("okcase").unwrap()).unwrap();
    let s = locate_saddle(&ok.table().unwrap(), ArgTolerance::EXACT).unwrap();
    assert_eq!(ok.space.point(s.x_index), &[0.0]);
    assert_eq!(s.lambda_index, 0);
    assert_eq!(s.value, 0.0);

    let circle = build_instance(&builtin_spec("circle").unwrap()).unwrap();
    assert!(locate_saddle(&circle.table().unwrap(), ArgTolerance::EXACT).is_none());

    // A strict saddle entry at (1, 1).
    let t = ValueTable::from_rows(vec![
        vec![5.0, 4.0, 9.0],
        vec![1.0, 3.0, 2.0],
        vec![0.0, 6.0, -1.0],
    ])
    .unwrap();
    let s = locate_saddle(&t, ArgTolerance::EXACT).unwrap();
    assert_eq!((s.x_index, s.lambda_index, s.value), (1, 1, 3.0));
}

#[test]
fn exhaustion_examples() {
    let ok = build_instance(&builtin_spec("okcase").unwrap()).unwrap();
    let ranges = vec![ok.grid.index_range(0.0, 0.5).unwrap(), ok.grid.index_range(0.0, 1.0).unwrap()];
    let rep = exhaustion_gap(&ok.objective, &ok.space, &ok.grid, &ranges, ArgTolerance::default()).unwrap();
    assert!(rep.steps.iter().all(|s| s.gap.gap == 0.0));
    assert!(rep.limit_equal);

    let single = vec![0..ok.grid.len()];
    let rep = exhaustion_gap(&ok.objective, &ok.space, &ok.grid, &single, ArgTolerance::default()).unwrap();
    assert_eq!(rep.steps[0].gap, duality_gap(&ok.table().unwrap()));

    let bad = vec![0..50, 10..60];
    assert!(exhaustion_gap(&ok.objective, &ok.space, &ok.grid, &bad, ArgTolerance::default()).is_err());
}

#[test]
fn usc_examples() {
    let ok = build_instance(&builtin_spec("okcase").unwrap()).unwrap();
    for threshold in [1, 2, 5] {
        let rep = check_argmin_usc(&ok.objective, &ok.space, &ok.grid, 2, threshold).unwrap();
        assert!(rep.suspects.is_empty());
    }
    let c = Objective::new("c", None, |_, _| 0.0);
    let rep = check_argmin_usc(&c, &ok.space, &ok.grid, 3, 0).unwrap();
    assert!(rep.suspects.is_empty());
    assert!(rep.pairs.iter().all(|p| p.coarse_hop == Some(0)));
    assert!(check_argmin_usc(&c, &ok.space, &ok.grid, 1, 0).is_err());
}

#[test]
fn non_finite_values_are_named() {
    let obj = Objective::new("bad", None, |x, l| if x[0] == 0.5 && l == 1.0 { f64::INFINITY } else { 0.0 });
    let space = build_box_grid(&[(0.0, 1.0)], &[3]).unwrap();
    let grid = Grid1D::new(0.0, 1.0, 2).unwrap();
    let err = evaluate_table(&obj, &space, &grid).unwrap_err();
    assert!(matches!(err, nonconvex_minimax::Error::NonFinite { row: 1, col: 1, .. }));
}
