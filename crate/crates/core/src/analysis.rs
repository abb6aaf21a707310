//! Value tables over `X-mesh x I-grid` and everything computed from them:
//! arg-sets, sublevel sets, hypothesis reports, the duality gap, saddle
//! certificates, interval exhaustion and the argmin-continuity diagnostic.
//!
//! Rows index mesh points `x_i`, columns index grid points `lambda_j`.

use std::ops::Range;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instances::Objective;
use crate::mesh::{self, Grid1D, Space, SubsetComponents};
use crate::par;

/// Matrix `v[i][j] = f(x_i, lambda_j)`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl ValueTable {
    /// Wraps row-major values; every entry must be finite.
    pub fn from_row_major(rows: usize, cols: usize, values: Vec<f64>) -> Result<ValueTable> {
        if rows == 0 || cols == 0 || values.len() != rows * cols {
            return Err(Error::validation(format!(
                "table shape {rows}x{cols} does not match {} values",
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: k / cols,
                col: k % cols,
                value: values[k],
            });
        }
        Ok(ValueTable { rows, cols, values })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<ValueTable> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::validation("ragged table rows"));
        }
        ValueTable::from_row_major(r, c, rows.into_iter().flatten().collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.rows).map(move |i| self.get(i, j))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    fn full_range(&self) -> Range<usize> {
        0..self.cols
    }

    fn column_min(&self, j: usize) -> f64 {
        self.column(j).fold(f64::INFINITY, f64::min)
    }

    fn row_max_in(&self, i: usize, cols: &Range<usize>) -> f64 {
        self.row(i)[cols.clone()]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Evaluates the objective on every (mesh point, grid point) pair.
pub fn evaluate_table(objective: &Objective, space: &Space, grid: &Grid1D) -> Result<ValueTable> {
    let rows = space.len();
    let cols = grid.len();
    let lambdas = grid.values();
    let mut values = vec![0.0; rows * cols];
    par::fill_chunks(&mut values, cols, |i, out| {
        let x = space.point(i);
        for (o, &l) in out.iter_mut().zip(&lambdas) {
            *o = objective.eval(x, l);
        }
    });
    ValueTable::from_row_major(rows, cols, values)
}

/// Tolerance for arg-sets: a value is optimal when it lies within
/// `absolute + relative * |optimum|` of the slice optimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArgTolerance {
    pub absolute: f64,
    pub relative: f64,
}

impl ArgTolerance {
    pub const EXACT: ArgTolerance = ArgTolerance {
        absolute: 0.0,
        relative: 0.0,
    };

    pub fn absolute(eps: f64) -> ArgTolerance {
        ArgTolerance {
            absolute: eps,
            relative: 0.0,
        }
    }

    pub fn width(&self, level: f64) -> f64 {
        self.absolute + self.relative * level.abs()
    }
}

impl Default for ArgTolerance {
    fn default() -> Self {
        ArgTolerance {
            absolute: 1e-9,
            relative: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Min,
    Max,
}

/// Which slice an arg-set lives on: a column (subset of X) or a row
/// (subset of I).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SliceAxis {
    PerLambda,
    PerX,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArgSet {
    pub direction: Direction,
    pub axis: SliceAxis,
    pub slice: usize,
    /// Exact optimum of the slice.
    pub level: f64,
    /// Effective width used for membership.
    pub epsilon: f64,
    pub members: Vec<usize>,
}

impl ArgSet {
    /// Member flags over a slice of length `len`.
    pub fn flags(&self, len: usize) -> Vec<bool> {
        let mut f = vec![false; len];
        for &m in &self.members {
            f[m] = true;
        }
        f
    }
}

/// Points of the mesh minimizing `f(., lambda_j)` up to `tol`.
pub fn argmin_set(table: &ValueTable, j: usize, tol: ArgTolerance) -> ArgSet {
    let level = table.column_min(j);
    let eps = tol.width(level);
    let members = (0..table.rows)
        .filter(|&i| table.get(i, j) <= level + eps)
        .collect();
    ArgSet {
        direction: Direction::Min,
        axis: SliceAxis::PerLambda,
        slice: j,
        level,
        epsilon: eps,
        members,
    }
}

/// Grid points maximizing `f(x_i, .)` over the whole grid.
pub fn argmax_set(table: &ValueTable, i: usize, tol: ArgTolerance) -> ArgSet {
    argmax_set_in(table, i, table.full_range(), tol)
}

/// Grid points maximizing `f(x_i, .)` restricted to the column range
/// `cols`. Members are global column indices.
pub fn argmax_set_in(table: &ValueTable, i: usize, cols: Range<usize>, tol: ArgTolerance) -> ArgSet {
    let level = table.row_max_in(i, &cols);
    let eps = tol.width(level);
    let row = table.row(i);
    let members = cols.filter(|&j| row[j] >= level - eps).collect();
    ArgSet {
        direction: Direction::Max,
        axis: SliceAxis::PerX,
        slice: i,
        level,
        epsilon: eps,
        members,
    }
}

/// Strict sublevel set `{x_i : v[i][j] < r}`.
pub fn sublevel_set(table: &ValueTable, j: usize, r: f64) -> Vec<bool> {
    table.column(j).map(|v| v < r).collect()
}

/// Which family of hypotheses to certify.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Connected argmin sets, bounded sublevels, connected argmax sets on
    /// every exhaustion subgrid.
    Theorem1,
    /// Connected strict sublevel sets on a dense set of parameters,
    /// connected argmax sets.
    Theorem2,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "theorem1" => Ok(Mode::Theorem1),
            "theorem2" => Ok(Mode::Theorem2),
            other => Err(format!("unknown mode `{other}` (expected theorem1 or theorem2)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct HypothesisOptions {
    pub mode: Mode,
    pub tolerance: ArgTolerance,
    pub level_samples: usize,
    /// Nested column ranges checked in addition to the full grid (theorem1).
    pub exhaustion: Vec<Range<usize>>,
    /// Column indices of the dense parameter subset (theorem2); `None` means
    /// every grid point.
    pub dense: Option<Vec<usize>>,
    /// Added to the largest column minimum to pick the sublevel tested for
    /// boundary contact. `None` uses `1e-6 * (1 + |sup inf|)`.
    pub compactness_margin: Option<f64>,
}

impl HypothesisOptions {
    pub fn new(mode: Mode) -> Self {
        HypothesisOptions {
            mode,
            tolerance: ArgTolerance::default(),
            level_samples: 16,
            exhaustion: Vec::new(),
            dense: None,
            compactness_margin: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Clause {
    /// Every argmin set `F(lambda)` is connected.
    ArgminConnected,
    /// Sublevels below `sup inf + margin` avoid the mesh boundary.
    SublevelBounded,
    /// Every argmax set `Phi(x)` is connected (on every checked subgrid).
    ArgmaxConnected,
    /// Every sampled strict sublevel set is connected.
    SublevelConnected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ComponentSummary {
    pub representative: usize,
    pub size: usize,
}

pub(crate) fn summarize(c: &SubsetComponents) -> Vec<ComponentSummary> {
    c.representatives
        .iter()
        .zip(&c.sizes)
        .map(|(&representative, &size)| ComponentSummary {
            representative,
            size,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub x_index: Option<usize>,
    pub x: Option<Vec<f64>>,
    pub lambda_index: Option<usize>,
    pub lambda: Option<f64>,
    /// Sublevel threshold `r` or optimum level, depending on the clause.
    pub level: Option<f64>,
    /// Index into the exhaustion list; `None` for the full grid.
    pub subgrid: Option<usize>,
    /// Components found (empty for boundary-contact failures).
    pub components: Vec<ComponentSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClauseVerdict {
    pub clause: Clause,
    pub holds: bool,
    pub checked: usize,
    pub failed: usize,
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub mode: Mode,
    pub tolerance: ArgTolerance,
    pub level_samples: usize,
    pub holds: bool,
    pub clauses: Vec<ClauseVerdict>,
    /// Component count of each argmin set, per lambda.
    pub argmin_components: Vec<usize>,
    /// Component count of each argmax set over the full grid, per x.
    pub argmax_components: Vec<usize>,
}

impl HypothesisReport {
    pub fn clause(&self, c: Clause) -> Option<&ClauseVerdict> {
        self.clauses.iter().find(|v| v.clause == c)
    }
}

/// Thresholds at which the sublevel sets of one column are sampled.
///
/// `samples` evenly spaced values spanning `[min, max]`, plus midpoints
/// between consecutive distinct values when there are at most 64 of them.
pub fn sublevel_levels(column: &[f64], samples: usize) -> Vec<f64> {
    let lo = column.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = column.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut levels: Vec<f64> = if samples <= 1 {
        vec![lo]
    } else {
        (0..samples)
            .map(|k| mesh::axis_value(lo, hi, samples, k))
            .collect()
    };
    let mut distinct = column.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() <= 64 {
        levels.extend(distinct.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    }
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    levels
}

/// Certifies the mesh-level hypotheses of the chosen mode.
pub fn check_hypotheses(
    table: &ValueTable,
    space: &Space,
    grid: &Grid1D,
    opts: &HypothesisOptions,
) -> HypothesisReport {
    assert_eq!(table.rows(), space.len(), "table rows must match the mesh");
    assert_eq!(table.cols(), grid.len(), "table columns must match the grid");
    let tol = opts.tolerance;
    let lambda_of = |j: usize| grid.value(j);
    let x_of = |i: usize| space.point(i).to_vec();

    let argmin_comp: Vec<SubsetComponents> = par::map_indices(table.cols(), |j| {
        let set = argmin_set(table, j, tol);
        mesh::components(space, &set.flags(table.rows()))
    });
    let argmin_components: Vec<usize> = argmin_comp.iter().map(|c| c.component_count).collect();

    let argmax_comp: Vec<SubsetComponents> = par::map_indices(table.rows(), |i| {
        grid_components(&argmax_set(table, i, tol), table.cols())
    });
    let argmax_components: Vec<usize> = argmax_comp.iter().map(|c| c.component_count).collect();

    let mut clauses = Vec::new();

    // Argmax connectivity, on the full grid and (theorem1) every subgrid.
    let mut ranges: Vec<(Option<usize>, Range<usize>)> = vec![(None, 0..table.cols())];
    if opts.mode == Mode::Theorem1 {
        ranges.extend(opts.exhaustion.iter().cloned().enumerate().map(|(k, r)| (Some(k), r)));
    }
    let mut argmax_verdict = ClauseVerdict {
        clause: Clause::ArgmaxConnected,
        holds: true,
        checked: 0,
        failed: 0,
        witness: None,
    };
    for (sub, range) in &ranges {
        let comps: Vec<SubsetComponents> = match sub {
            None => argmax_comp.clone(),
            Some(_) => par::map_indices(table.rows(), |i| {
                grid_components(&argmax_set_in(table, i, range.clone(), tol), table.cols())
            }),
        };
        for (i, c) in comps.iter().enumerate() {
            argmax_verdict.checked += 1;
            if !c.is_connected() {
                argmax_verdict.failed += 1;
                if argmax_verdict.witness.is_none() {
                    argmax_verdict.witness = Some(Witness {
                        x_index: Some(i),
                        x: Some(x_of(i)),
                        lambda_index: None,
                        lambda: None,
                        level: Some(table.row_max_in(i, range)),
                        subgrid: *sub,
                        components: summarize(c),
                    });
                }
            }
        }
    }
    argmax_verdict.holds = argmax_verdict.failed == 0;

    match opts.mode {
        Mode::Theorem1 => {
            let mut v = ClauseVerdict {
                clause: Clause::ArgminConnected,
                holds: true,
                checked: table.cols(),
                failed: 0,
                witness: None,
            };
            for (j, c) in argmin_comp.iter().enumerate() {
                if !c.is_connected() {
                    v.failed += 1;
                    if v.witness.is_none() {
                        v.witness = Some(Witness {
                            x_index: None,
                            x: None,
                            lambda_index: Some(j),
                            lambda: Some(lambda_of(j)),
                            level: Some(table.column_min(j)),
                            subgrid: None,
                            components: summarize(c),
                        });
                    }
                }
            }
            v.holds = v.failed == 0;
            clauses.push(v);

            let sup_inf = (0..table.cols())
                .map(|j| table.column_min(j))
                .fold(f64::NEG_INFINITY, f64::max);
            let margin = opts
                .compactness_margin
                .unwrap_or(1e-6 * (1.0 + sup_inf.abs()));
            let r = sup_inf + margin;
            let touches: Vec<Option<usize>> = par::map_indices(table.cols(), |j| {
                (0..table.rows()).find(|&i| space.is_boundary(i) && table.get(i, j) < r)
            });
            let mut v = ClauseVerdict {
                clause: Clause::SublevelBounded,
                holds: true,
                checked: table.cols(),
                failed: 0,
                witness: None,
            };
            for (j, t) in touches.iter().enumerate() {
                if let Some(i) = *t {
                    v.failed += 1;
                    if v.witness.is_none() {
                        v.witness = Some(Witness {
                            x_index: Some(i),
                            x: Some(x_of(i)),
                            lambda_index: Some(j),
                            lambda: Some(lambda_of(j)),
                            level: Some(r),
                            subgrid: None,
                            components: Vec::new(),
                        });
                    }
                }
            }
            v.holds = v.failed == 0;
            clauses.push(v);
            clauses.push(argmax_verdict);
        }
        Mode::Theorem2 => {
            let dense: Vec<usize> = match &opts.dense {
                Some(d) => d.clone(),
                None => (0..table.cols()).collect(),
            };
            let per_col: Vec<(usize, Option<(f64, SubsetComponents)>)> =
                par::map_indices(dense.len(), |k| {
                    let j = dense[k];
                    let col: Vec<f64> = table.column(j).collect();
                    let levels = sublevel_levels(&col, opts.level_samples);
                    let mut first = None;
                    for &r in &levels {
                        let flags: Vec<bool> = col.iter().map(|&v| v < r).collect();
                        let c = mesh::components(space, &flags);
                        if !c.is_connected() {
                            first = Some((r, c));
                            break;
                        }
                    }
                    (levels.len(), first)
                });
            let mut v = ClauseVerdict {
                clause: Clause::SublevelConnected,
                holds: true,
                checked: 0,
                failed: 0,
                witness: None,
            };
            for (k, (count, fail)) in per_col.iter().enumerate() {
                v.checked += count;
                if let Some((r, c)) = fail {
                    v.failed += 1;
                    if v.witness.is_none() {
                        let j = dense[k];
                        v.witness = Some(Witness {
                            x_index: None,
                            x: None,
                            lambda_index: Some(j),
                            lambda: Some(lambda_of(j)),
                            level: Some(*r),
                            subgrid: None,
                            components: summarize(c),
                        });
                    }
                }
            }
            v.holds = v.failed == 0;
            clauses.push(v);
            clauses.push(argmax_verdict);
        }
    }

    HypothesisReport {
        mode: opts.mode,
        tolerance: tol,
        level_samples: opts.level_samples,
        holds: clauses.iter().all(|c| c.holds),
        clauses,
        argmin_components,
        argmax_components,
    }
}

fn grid_components(set: &ArgSet, cols: usize) -> SubsetComponents {
    mesh::run_components(&set.flags(cols))
}

/// Weak-duality report: `gap = inf_sup - sup_inf >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapReport {
    /// `max_j min_i v[i][j]`.
    pub sup_inf: f64,
    /// `min_i max_j v[i][j]`.
    pub inf_sup: f64,
    pub gap: f64,
    pub witness_lambda: usize,
    pub witness_x: usize,
}

pub fn duality_gap(table: &ValueTable) -> GapReport {
    duality_gap_on(table, table.full_range())
}

/// Duality gap with the parameter restricted to the column range `cols`.
/// Witness indices are global.
pub fn duality_gap_on(table: &ValueTable, cols: Range<usize>) -> GapReport {
    assert!(!cols.is_empty() && cols.end <= table.cols(), "bad column range");
    let col_min = par::map_indices(cols.len(), |k| table.column_min(cols.start + k));
    let row_max = par::map_indices(table.rows(), |i| table.row_max_in(i, &cols));
    let (mut witness_lambda, mut sup_inf) = (cols.start, col_min[0]);
    for (k, &v) in col_min.iter().enumerate() {
        if v > sup_inf {
            sup_inf = v;
            witness_lambda = cols.start + k;
        }
    }
    let (mut witness_x, mut inf_sup) = (0, row_max[0]);
    for (i, &v) in row_max.iter().enumerate() {
        if v < inf_sup {
            inf_sup = v;
            witness_x = i;
        }
    }
    GapReport {
        sup_inf,
        inf_sup,
        gap: inf_sup - sup_inf,
        witness_lambda,
        witness_x,
    }
}

/// A cell that is simultaneously (approximately) a column minimum and a row
/// maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SaddleCertificate {
    pub x_index: usize,
    pub lambda_index: usize,
    pub value: f64,
    /// `value - min_i v[i][lambda_index] >= 0`.
    pub residual_min: f64,
    /// `max_j v[x_index][j] - value >= 0`.
    pub residual_max: f64,
    pub epsilon_min: f64,
    pub epsilon_max: f64,
}

pub fn locate_saddle(table: &ValueTable, tol: ArgTolerance) -> Option<SaddleCertificate> {
    locate_saddle_on(table, table.full_range(), tol)
}

/// Scans the graph of the argmin multifunction (ascending lambda, then
/// ascending x) for the first pair whose lambda also maximizes the row.
pub fn locate_saddle_on(
    table: &ValueTable,
    cols: Range<usize>,
    tol: ArgTolerance,
) -> Option<SaddleCertificate> {
    assert!(!cols.is_empty() && cols.end <= table.cols(), "bad column range");
    let row_max = par::map_indices(table.rows(), |i| table.row_max_in(i, &cols));
    let hits = par::map_indices(cols.len(), |k| {
        let j = cols.start + k;
        let col_min = table.column_min(j);
        let eps_min = tol.width(col_min);
        (0..table.rows()).find_map(|i| {
            let v = table.get(i, j);
            let eps_max = tol.width(row_max[i]);
            (v <= col_min + eps_min && v >= row_max[i] - eps_max).then_some(SaddleCertificate {
                x_index: i,
                lambda_index: j,
                value: v,
                residual_min: v - col_min,
                residual_max: row_max[i] - v,
                epsilon_min: eps_min,
                epsilon_max: eps_max,
            })
        })
    });
    hits.into_iter().flatten().next()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExhaustionStep {
    pub start: usize,
    pub end: usize,
    pub lo: f64,
    pub hi: f64,
    pub gap: GapReport,
    pub saddle: Option<SaddleCertificate>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExhaustionReport {
    pub steps: Vec<ExhaustionStep>,
    /// `sup_{I_n} inf_X f` never decreases along the sequence.
    pub sup_inf_nondecreasing: bool,
    /// `sup inf` over the union of the subgrids.
    pub union_sup_inf: f64,
    /// `inf sup` over the full grid.
    pub full_inf_sup: f64,
    pub limit_tolerance: f64,
    pub limit_equal: bool,
}

/// Checks that column ranges are nested and inside `0..cols`.
pub fn validate_nested(subgrids: &[Range<usize>], cols: usize) -> Result<()> {
    if subgrids.is_empty() {
        return Err(Error::validation("exhaustion needs at least one subgrid"));
    }
    for (k, r) in subgrids.iter().enumerate() {
        if r.is_empty() || r.end > cols {
            return Err(Error::validation(format!("subgrid {k} is empty or outside the grid")));
        }
        if k > 0 {
            let p = &subgrids[k - 1];
            if r.start > p.start || r.end < p.end {
                return Err(Error::validation(format!(
                    "subgrid {k} does not contain subgrid {}",
                    k - 1
                )));
            }
        }
    }
    Ok(())
}

/// Per-subgrid gaps and saddles plus the limit comparison.
pub fn exhaustion_gap(
    objective: &Objective,
    space: &Space,
    full_grid: &Grid1D,
    subgrids: &[Range<usize>],
    tol: ArgTolerance,
) -> Result<ExhaustionReport> {
    validate_nested(subgrids, full_grid.len())?;
    let table = evaluate_table(objective, space, full_grid)?;
    exhaustion_from_table(&table, full_grid, subgrids, tol)
}

pub fn exhaustion_from_table(
    table: &ValueTable,
    full_grid: &Grid1D,
    subgrids: &[Range<usize>],
    tol: ArgTolerance,
) -> Result<ExhaustionReport> {
    validate_nested(subgrids, table.cols())?;
    let steps: Vec<ExhaustionStep> = subgrids
        .iter()
        .map(|r| ExhaustionStep {
            start: r.start,
            end: r.end,
            lo: full_grid.value(r.start),
            hi: full_grid.value(r.end - 1),
            gap: duality_gap_on(table, r.clone()),
            saddle: locate_saddle_on(table, r.clone(), ArgTolerance::EXACT),
        })
        .collect();
    let sup_inf_nondecreasing = steps
        .windows(2)
        .all(|w| w[0].gap.sup_inf <= w[1].gap.sup_inf);
    let union_sup_inf = steps.last().map_or(f64::NAN, |s| s.gap.sup_inf);
    let full_inf_sup = duality_gap(table).inf_sup;
    let limit_tolerance = tol.width(full_inf_sup);
    Ok(ExhaustionReport {
        limit_equal: (full_inf_sup - union_sup_inf).abs() <= limit_tolerance,
        steps,
        sup_inf_nondecreasing,
        union_sup_inf,
        full_inf_sup,
        limit_tolerance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UscPair {
    pub lambda_index: usize,
    pub lambda: f64,
    /// Largest hop distance from a point of `F(lambda_{j+1})` to `F(lambda_j)`.
    /// `None` when some point cannot reach the earlier argmin set.
    pub coarse_hop: Option<u32>,
    /// Same measure, maximised over consecutive refined steps inside the
    /// coarse interval.
    pub refined_hop: Option<u32>,
    pub suspect: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UscReport {
    pub refinement_factor: usize,
    pub hop_threshold: u32,
    pub pairs: Vec<UscPair>,
    pub suspects: Vec<usize>,
}

fn directed_hop(space: &Space, from: &[bool], to: &[bool]) -> Option<u32> {
    let dist = space.hop_distances(to);
    let mut worst = 0;
    for (i, &f) in from.iter().enumerate() {
        if f {
            worst = worst.max(dist[i]?);
        }
    }
    Some(worst)
}

/// Diagnostic for jumps of the argmin multifunction between neighbouring
/// parameters. A pair is suspect when the jump persists on the refined grid.
pub fn check_argmin_usc(
    objective: &Objective,
    space: &Space,
    grid: &Grid1D,
    refinement_factor: usize,
    hop_threshold: u32,
) -> Result<UscReport> {
    if refinement_factor < 2 {
        return Err(Error::validation("refinement factor must be >= 2"));
    }
    let fine = Grid1D::new(grid.a(), grid.b(), (grid.len() - 1) * refinement_factor + 1)?;
    let coarse_table = evaluate_table(objective, space, grid)?;
    let fine_table = evaluate_table(objective, space, &fine)?;
    let tol = ArgTolerance::default();
    let coarse_sets: Vec<Vec<bool>> = par::map_indices(grid.len(), |j| {
        argmin_set(&coarse_table, j, tol).flags(space.len())
    });
    let fine_sets: Vec<Vec<bool>> = par::map_indices(fine.len(), |j| {
        argmin_set(&fine_table, j, tol).flags(space.len())
    });
    let pairs: Vec<UscPair> = par::map_indices(grid.len() - 1, |j| {
        let coarse_hop = directed_hop(space, &coarse_sets[j + 1], &coarse_sets[j]);
        let base = j * refinement_factor;
        let mut refined_hop = Some(0);
        for k in base..base + refinement_factor {
            refined_hop = match (refined_hop, directed_hop(space, &fine_sets[k + 1], &fine_sets[k])) {
                (Some(a), Some(b)) => Some(a.max(b)),
                _ => None,
            };
        }
        let suspect = refined_hop.is_none_or(|h| h > hop_threshold);
        UscPair {
            lambda_index: j,
            lambda: grid.value(j),
            coarse_hop,
            refined_hop,
            suspect,
        }
    });
    let suspects = pairs
        .iter()
        .filter(|p| p.suspect)
        .map(|p| p.lambda_index)
        .collect();
    Ok(UscReport {
        refinement_factor,
        hop_threshold,
        pairs,
        suspects,
    })
}

/// An upper-level set of `f(x_i, .)` on the grid with several components,
/// proving the row is not quasi-concave.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuasiconcavityWitness {
    pub x_index: usize,
    pub level: f64,
    pub components: Vec<ComponentSummary>,
}

/// Brute force over every attained level of row `i`: returns the first level
/// whose upper-level set `{j : v[i][j] >= level}` is disconnected.
pub fn quasiconcavity_violation(table: &ValueTable, i: usize) -> Option<QuasiconcavityWitness> {
    let row = table.row(i);
    let mut levels = row.to_vec();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    levels.into_iter().find_map(|r| {
        let flags: Vec<bool> = row.iter().map(|&v| v >= r).collect();
        let c = mesh::run_components(&flags);
        (c.component_count >= 2).then(|| QuasiconcavityWitness {
            x_index: i,
            level: r,
            components: summarize(&c),
        })
    })
}
