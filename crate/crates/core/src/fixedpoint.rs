//! Parametric fixed points `x = lambda f(x)` through the penalty function
//!
//! ```text
//! phi(x, lambda) = |x - lambda f(x)|^2 - c^2 lambda^2 + 2 alpha lambda
//! ```
//!
//! The solutions of `x = lambda f(x)` are exactly the points where
//! `phi(., lambda)` reaches the parabola `-c^2 lambda^2 + 2 alpha lambda`, so a
//! disconnected solution set shows up as a disconnected argmin set of `phi`.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::analysis::{self, summarize, ArgTolerance, ComponentSummary};
use crate::error::{Error, Result};
use crate::instances::Objective;
use crate::mesh::{self, Grid1D, Space, SubsetComponents};
use crate::par;

type FieldFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

/// A continuous map `f : X -> R^d` together with the constants `alpha`, `c`.
#[derive(Clone)]
pub struct VectorFieldMap {
    name: String,
    dim: usize,
    field: Arc<FieldFn>,
    alpha: f64,
    c: f64,
    lipschitz: f64,
}

impl fmt::Debug for VectorFieldMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorFieldMap")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("alpha", &self.alpha)
            .field("c", &self.c)
            .field("lipschitz", &self.lipschitz)
            .finish()
    }
}

impl VectorFieldMap {
    /// `field(x, out)` must write `f(x)` into `out` (length `dim`).
    pub fn new<F>(name: impl Into<String>, dim: usize, alpha: f64, c: f64, lipschitz: f64, field: F) -> Result<Self>
    where
        F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::validation(format!("c must be positive, got {c}")));
        }
        if !alpha.is_finite() || !(lipschitz >= 0.0) {
            return Err(Error::validation("alpha must be finite and lipschitz >= 0"));
        }
        Ok(VectorFieldMap {
            name: name.into(),
            dim,
            field: Arc::new(field),
            alpha,
            c,
            lipschitz,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        (self.field)(x, out)
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(x, &mut out);
        out
    }

    /// `-c^2 lambda^2 + 2 alpha lambda`, the value of `phi` at a fixed point.
    pub fn parabola(&self, lambda: f64) -> f64 {
        -self.c * self.c * lambda * lambda + 2.0 * self.alpha * lambda
    }

    /// Vertex `alpha / c^2` of the parabola.
    pub fn vertex(&self) -> f64 {
        self.alpha / (self.c * self.c)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

/// `phi` from its definition.
pub fn phi_direct(map: &VectorFieldMap, x: &[f64], lambda: f64) -> f64 {
    let fx = map.eval(x);
    let r: f64 = x
        .iter()
        .zip(&fx)
        .map(|(xi, fi)| (xi - lambda * fi).powi(2))
        .sum();
    r + map.parabola(lambda)
}

/// `phi` through its expansion
/// `|x|^2 + (|f(x)|^2 - c^2) lambda^2 - 2 (<x, f(x)> - alpha) lambda`.
pub fn phi_expanded(map: &VectorFieldMap, x: &[f64], lambda: f64) -> f64 {
    let fx = map.eval(x);
    let c2 = map.c * map.c;
    norm_sq(x) + (norm_sq(&fx) - c2) * lambda * lambda - 2.0 * (dot(x, &fx) - map.alpha) * lambda
}

/// Scale of the terms of the expansion, used for relative comparisons.
pub fn phi_term_scale(map: &VectorFieldMap, x: &[f64], lambda: f64) -> f64 {
    let fx = map.eval(x);
    let c2 = map.c * map.c;
    norm_sq(x) + (norm_sq(&fx) + c2) * lambda * lambda + 2.0 * (dot(x, &fx).abs() + map.alpha.abs()) * lambda.abs()
}

/// The penalty function as an [`Objective`] over `(x, lambda)`.
pub fn build_phi(map: &VectorFieldMap) -> Objective {
    let m = map.clone();
    let lipschitz = None;
    Objective::new(format!("phi[{}]", map.name), lipschitz, move |x, l| phi_direct(&m, x, l))
}

/// `sup_lambda phi(x, lambda)` in closed form for a point with
/// `|f(x)| < c`: `|x|^2 + (<x, f(x)> - alpha)^2 / (c^2 - |f(x)|^2)`.
/// `None` when `|f(x)| >= c` (the supremum is infinite, or `phi(x, .)` is
/// affine).
pub fn phi_sup_closed_form(x: &[f64], fx: &[f64], alpha: f64, c: f64) -> Option<f64> {
    let denom = c * c - norm_sq(fx);
    (denom > 0.0).then(|| norm_sq(x) + (dot(x, fx) - alpha).powi(2) / denom)
}

/// `rhs - lhs` of the inequality
/// `(2 alpha t - t^2 - alpha^2 |y|^2 / c^2) / (c^2 - |y|^2) < t^2 / |y|^2`,
/// evaluated term by term. Positive iff the strict inequality holds.
pub fn hyperplane_inequality_gap(y_norm_sq: f64, t: f64, alpha: f64, c: f64) -> f64 {
    let c2 = c * c;
    let lhs = (2.0 * alpha * t - t * t - alpha * alpha * y_norm_sq / c2) / (c2 - y_norm_sq);
    let rhs = t * t / y_norm_sq;
    rhs - lhs
}

/// The same gap in factored form,
/// `(alpha |y|^2 - t c^2)^2 / (c^2 |y|^2 (c^2 - |y|^2))`, which is positive
/// exactly when `alpha |y|^2 != t c^2`.
pub fn hyperplane_inequality_factored(y_norm_sq: f64, t: f64, alpha: f64, c: f64) -> f64 {
    let c2 = c * c;
    (alpha * y_norm_sq - t * c2).powi(2) / (c2 * y_norm_sq * (c2 - y_norm_sq))
}

/// Norm statistics of `f` over the mesh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RangeNormBounds {
    pub min_norm: f64,
    pub min_index: usize,
    pub max_norm: f64,
    /// `|f(0)|` when the origin is a mesh point.
    pub norm_at_origin: Option<f64>,
    /// `min |f| < c < |f(0)|` on the mesh.
    pub standing_holds: bool,
    /// Largest `|x|` over the mesh: the truncation radius.
    pub truncation_radius: f64,
}

pub fn range_norm_bounds(map: &VectorFieldMap, space: &Space) -> RangeNormBounds {
    let norms = par::map_indices(space.len(), |i| norm_sq(&map.eval(space.point(i))).sqrt());
    let (mut min_index, mut min_norm) = (0, f64::INFINITY);
    for (i, &n) in norms.iter().enumerate() {
        if n < min_norm {
            min_norm = n;
            min_index = i;
        }
    }
    let max_norm = norms.iter().copied().fold(0.0, f64::max);
    let origin = vec![0.0; space.dim()];
    let norm_at_origin = space.find_point(&origin).map(|i| norms[i]);
    let truncation_radius = space.points().map(|p| norm_sq(p).sqrt()).fold(0.0, f64::max);
    RangeNormBounds {
        min_norm,
        min_index,
        max_norm,
        norm_at_origin,
        standing_holds: norm_at_origin.is_some_and(|n0| min_norm < map.c && map.c < n0),
        truncation_radius,
    }
}

/// Fails unless `min |f| < c < |f(0)|` holds on the mesh (which must contain
/// the origin).
pub fn validate_standing(map: &VectorFieldMap, space: &Space) -> Result<RangeNormBounds> {
    let b = range_norm_bounds(map, space);
    match b.norm_at_origin {
        None => Err(Error::validation("the origin must be a mesh point")),
        Some(n0) if !b.standing_holds => Err(Error::validation(format!(
            "need min |f| < c < |f(0)|, got min |f| = {}, c = {}, |f(0)| = {n0}",
            b.min_norm, map.c
        ))),
        Some(_) => Ok(b),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbMode {
    /// `f` maps into a compact convex set avoiding the origin; every point is
    /// tested.
    Theorem3,
    /// Finite-dimensional case; points with `f(x) = 0` are exempt from the
    /// weighted-level clause.
    Theorem4,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbWitness {
    pub index: usize,
    pub x: Vec<f64>,
    pub inner: f64,
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbClause {
    pub holds: bool,
    /// Mesh points inside the tolerance band of the level set.
    pub checked: usize,
    pub failed: usize,
    pub witness: Option<AbWitness>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbReport {
    pub mode: AbMode,
    pub tol: f64,
    /// Near `<x, f(x)> = alpha` the norm stays below `c`.
    pub level_clause: AbClause,
    /// Near `c^2 <x, f(x)> = alpha |f(x)|^2` the norm is at least `c`.
    pub weighted_clause: AbClause,
    pub holds: bool,
}

/// Largest change of `<x, f(x)>` and of `alpha |f(x)|^2 / c^2` between
/// adjacent mesh points, from the declared Lipschitz bound.
pub fn default_ab_tol(map: &VectorFieldMap, space: &Space) -> f64 {
    let b = range_norm_bounds(map, space);
    let h = space.spacing();
    let l = map.lipschitz;
    h * (b.max_norm + b.truncation_radius * l + 2.0 * map.alpha.abs() * b.max_norm * l / (map.c * map.c))
}

/// Scans the mesh for points near the two level sets and checks the norm
/// condition attached to each.
pub fn check_ab(map: &VectorFieldMap, space: &Space, mode: AbMode, tol: f64) -> Result<AbReport> {
    if !(tol >= 0.0) {
        return Err(Error::validation("tol must be >= 0"));
    }
    let c = map.c;
    let stats = par::map_indices(space.len(), |i| {
        let x = space.point(i);
        let fx = map.eval(x);
        (dot(x, &fx), norm_sq(&fx).sqrt())
    });
    let mut level = AbClause {
        holds: true,
        checked: 0,
        failed: 0,
        witness: None,
    };
    let mut weighted = level.clone();
    for (i, &(s, n)) in stats.iter().enumerate() {
        let witness = || AbWitness {
            index: i,
            x: space.point(i).to_vec(),
            inner: s,
            norm: n,
        };
        if (s - map.alpha).abs() <= tol {
            level.checked += 1;
            if n >= c {
                level.failed += 1;
                level.witness.get_or_insert_with(witness);
            }
        }
        let exempt = mode == AbMode::Theorem4 && n == 0.0;
        if !exempt && (s - map.alpha * n * n / (c * c)).abs() <= tol {
            weighted.checked += 1;
            if n < c {
                weighted.failed += 1;
                weighted.witness.get_or_insert_with(witness);
            }
        }
    }
    level.holds = level.failed == 0;
    weighted.holds = weighted.failed == 0;
    Ok(AbReport {
        mode,
        tol,
        holds: level.holds && weighted.holds,
        level_clause: level,
        weighted_clause: weighted,
    })
}

/// `|x - lambda f(x)|`.
pub fn residual(map: &VectorFieldMap, x: &[f64], lambda: f64) -> f64 {
    let fx = map.eval(x);
    x.iter()
        .zip(&fx)
        .map(|(xi, fi)| (xi - lambda * fi).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Threshold below which a mesh point counts as a solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaRule {
    Fixed(f64),
    /// `2 h_X (1 + |lambda| L_f)`.
    MeshDefault,
}

impl DeltaRule {
    pub fn delta(&self, map: &VectorFieldMap, space: &Space, lambda: f64) -> f64 {
        match *self {
            DeltaRule::Fixed(d) => d,
            DeltaRule::MeshDefault => 2.0 * space.spacing() * (1.0 + lambda.abs() * map.lipschitz),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSlice {
    pub lambda_index: usize,
    pub lambda: f64,
    pub delta: f64,
    pub solution_count: usize,
    pub component_count: usize,
    pub min_residual: f64,
    pub components: Vec<ComponentSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionSweep {
    pub delta_rule: DeltaRule,
    pub slices: Vec<SweepSlice>,
    /// Lambda indices whose solution set has at least two components.
    pub disconnected: Vec<usize>,
}

/// Solution flags `residual <= delta` and the smallest residual.
pub fn solution_set(map: &VectorFieldMap, space: &Space, lambda: f64, delta: f64) -> (SubsetComponents, f64) {
    let res: Vec<f64> = (0..space.len())
        .map(|i| residual(map, space.point(i), lambda))
        .collect();
    let min_residual = res.iter().copied().fold(f64::INFINITY, f64::min);
    let flags: Vec<bool> = res.iter().map(|&r| r <= delta).collect();
    (mesh::components(space, &flags), min_residual)
}

pub fn sweep_solutions(
    map: &VectorFieldMap,
    grid: &Grid1D,
    delta: DeltaRule,
    space: &Space,
) -> Result<SolutionSweep> {
    if let DeltaRule::Fixed(d) = delta {
        if !(d > 0.0) {
            return Err(Error::validation("delta must be positive"));
        }
    }
    let slices: Vec<SweepSlice> = par::map_indices(grid.len(), |j| {
        let lambda = grid.value(j);
        let d = delta.delta(map, space, lambda);
        let (comp, min_residual) = solution_set(map, space, lambda, d);
        SweepSlice {
            lambda_index: j,
            lambda,
            delta: d,
            solution_count: comp.member_count(),
            component_count: comp.component_count,
            min_residual,
            components: summarize(&comp),
        }
    });
    let disconnected = slices
        .iter()
        .filter(|s| s.component_count >= 2)
        .map(|s| s.lambda_index)
        .collect();
    Ok(SolutionSweep {
        delta_rule: delta,
        slices,
        disconnected,
    })
}

/// Components of the argmin set of `phi(., lambda)` on the mesh, computed
/// through the analysis engine with absolute tolerance `eps`.
pub fn phi_argmin_components(map: &VectorFieldMap, space: &Space, lambda: f64, eps: f64) -> Result<SubsetComponents> {
    let step = 1e-6 * (1.0 + lambda.abs());
    let grid = Grid1D::new(lambda, lambda + step, 2)?;
    let table = analysis::evaluate_table(&build_phi(map), space, &grid)?;
    let set = analysis::argmin_set(&table, 0, ArgTolerance::absolute(eps));
    Ok(mesh::components(space, &set.flags(space.len())))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainSlice {
    pub lambda_index: usize,
    pub lambda: f64,
    pub inf_phi: f64,
    pub parabola: f64,
    pub min_residual: f64,
    pub slack: f64,
    /// `inf_x phi(x, lambda) <= parabola + slack`.
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainReport {
    pub vertex_lambda: f64,
    pub vertex_index: usize,
    /// `max_j (-c^2 lambda_j^2 + 2 alpha lambda_j)`.
    pub parabola_sup: f64,
    /// `alpha^2 / c^2`.
    pub closed_form_sup: f64,
    pub parabola_matches: bool,
    pub slices: Vec<ChainSlice>,
    pub near_fixed_points_everywhere: bool,
    /// `min_x max_j phi(x, lambda_j)`.
    pub grid_inf_sup: f64,
    pub grid_inf_sup_witness: usize,
    pub exceeds_vertex_value: bool,
    pub margin: f64,
    /// `min` over mesh points with `|f| < c` of the closed-form supremum
    /// minus `alpha^2 / c^2`.
    pub closed_form_margin: Option<f64>,
    pub closed_form_witness: Option<usize>,
}

/// Checks the sup-inf / inf-sup chain of the penalty function on a mesh.
/// The grid must contain the vertex `alpha / c^2`.
pub fn supinf_chain_check(
    map: &VectorFieldMap,
    lambda_grid: &Grid1D,
    x_space: &Space,
    slack: Option<f64>,
) -> Result<ChainReport> {
    let vertex_lambda = map.vertex();
    let vertex_index = lambda_grid.locate(vertex_lambda, 1e-12).ok_or_else(|| {
        Error::validation(format!(
            "lambda grid [{}, {}] with {} points does not contain the vertex alpha/c^2 = {vertex_lambda}",
            lambda_grid.a(),
            lambda_grid.b(),
            lambda_grid.len()
        ))
    })?;
    let closed_form_sup = map.alpha * map.alpha / (map.c * map.c);
    let parabola_sup = (0..lambda_grid.len())
        .map(|j| map.parabola(lambda_grid.value(j)))
        .fold(f64::NEG_INFINITY, f64::max);
    let parabola_matches = (parabola_sup - closed_form_sup).abs() <= 1e-12 * (1.0 + closed_form_sup.abs());

    let h = x_space.spacing();
    let slices: Vec<ChainSlice> = par::map_indices(lambda_grid.len(), |j| {
        let lambda = lambda_grid.value(j);
        let (mut inf_phi, mut min_residual) = (f64::INFINITY, f64::INFINITY);
        for x in x_space.points() {
            inf_phi = inf_phi.min(phi_direct(map, x, lambda));
            min_residual = min_residual.min(residual(map, x, lambda));
        }
        let parabola = map.parabola(lambda);
        let slack = slack.unwrap_or_else(|| (2.0 * h * (1.0 + lambda.abs() * map.lipschitz)).powi(2));
        ChainSlice {
            lambda_index: j,
            lambda,
            inf_phi,
            parabola,
            min_residual,
            slack,
            holds: inf_phi <= parabola + slack,
        }
    });

    let lambdas = lambda_grid.values();
    let row_sup = par::map_indices(x_space.len(), |i| {
        let x = x_space.point(i);
        let sup = lambdas
            .iter()
            .map(|&l| phi_direct(map, x, l))
            .fold(f64::NEG_INFINITY, f64::max);
        let fx = map.eval(x);
        (sup, phi_sup_closed_form(x, &fx, map.alpha, map.c))
    });
    let (mut grid_inf_sup_witness, mut grid_inf_sup) = (0, f64::INFINITY);
    let mut closed: Option<(usize, f64)> = None;
    for (i, &(sup, cf)) in row_sup.iter().enumerate() {
        if sup < grid_inf_sup {
            grid_inf_sup = sup;
            grid_inf_sup_witness = i;
        }
        if let Some(v) = cf {
            if closed.is_none_or(|(_, best)| v < best) {
                closed = Some((i, v));
            }
        }
    }
    Ok(ChainReport {
        vertex_lambda,
        vertex_index,
        parabola_sup,
        closed_form_sup,
        parabola_matches,
        near_fixed_points_everywhere: slices.iter().all(|s| s.holds),
        slices,
        grid_inf_sup,
        grid_inf_sup_witness,
        exceeds_vertex_value: grid_inf_sup > closed_form_sup,
        margin: grid_inf_sup - closed_form_sup,
        closed_form_margin: closed.map(|(_, v)| v - closed_form_sup),
        closed_form_witness: closed.map(|(i, _)| i),
    })
}

/// Membership in the double cone `{lambda k : lambda in R, k in [p, q]}`
/// spanned by a planar segment avoiding the origin.
pub fn in_segment_cone(x: [f64; 2], p: [f64; 2], q: [f64; 2]) -> bool {
    let cross = |a: [f64; 2], b: [f64; 2]| a[0] * b[1] - a[1] * b[0];
    let scale = (x[0].abs() + x[1].abs()) * (p[0].abs() + p[1].abs() + q[0].abs() + q[1].abs());
    let tol = 1e-12 * scale;
    if scale == 0.0 {
        return true;
    }
    let one_sided = |x: [f64; 2]| {
        let s = cross(p, q);
        if s.abs() <= tol {
            // Degenerate segment along one ray.
            cross(p, x).abs() <= tol && p[0] * x[0] + p[1] * x[1] >= 0.0
        } else {
            cross(p, x) * s.signum() >= -tol && cross(x, q) * s.signum() >= -tol
        }
    };
    one_sided(x) || one_sided([-x[0], -x[1]])
}

/// Restricts a planar mesh to the double cone over the segment `[p, q]`.
pub fn clip_to_cone(space: &Space, p: [f64; 2], q: [f64; 2]) -> Result<(Space, Vec<usize>)> {
    if space.dim() != 2 {
        return Err(Error::validation("cone clipping needs a planar mesh"));
    }
    let keep: Vec<bool> = space
        .points()
        .map(|x| in_segment_cone([x[0], x[1]], p, q))
        .collect();
    space.restrict(&keep)
}
