//! Objective families and the instance config format.
//!
//! An instance config is a TOML document with the top-level keys `family`,
//! `parameters`, `mesh`, `grid` and `exhaustion`. Unknown keys are rejected
//! at every level. See the README for the per-family parameter tables.

use std::fmt;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::analysis::{self, ValueTable};
use crate::error::{Error, Result};
use crate::fixedpoint::{self, AbMode, VectorFieldMap};
use crate::mesh::{self, BoxGridOptions, Grid1D, Space, DEFAULT_POINT_CAP};

type Evaluator = dyn Fn(&[f64], f64) -> f64 + Send + Sync;

/// A deterministic real function of a mesh point and a parameter value.
#[derive(Clone)]
pub struct Objective {
    name: String,
    lipschitz: Option<f64>,
    eval: Arc<Evaluator>,
}

impl fmt::Debug for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Objective")
            .field("name", &self.name)
            .field("lipschitz", &self.lipschitz)
            .finish()
    }
}

impl Objective {
    pub fn new<F>(name: impl Into<String>, lipschitz: Option<f64>, f: F) -> Self
    where
        F: Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
    {
        Objective {
            name: name.into(),
            lipschitz,
            eval: Arc::new(f),
        }
    }

    #[inline]
    pub fn eval(&self, x: &[f64], lambda: f64) -> f64 {
        (self.eval)(x, lambda)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Bound on the Lipschitz constant in each argument separately.
    pub fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    BilinearCircle,
    AffineGamma,
    FixedpointPhi,
    IntegralFinite,
    QuadraticGap,
    QuadraticOk,
    NonquasiconcaveOk,
    CustomTable,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Family::BilinearCircle => "bilinear_circle",
            Family::AffineGamma => "affine_gamma",
            Family::FixedpointPhi => "fixedpoint_phi",
            Family::IntegralFinite => "integral_finite",
            Family::QuadraticGap => "quadratic_gap",
            Family::QuadraticOk => "quadratic_ok",
            Family::NonquasiconcaveOk => "nonquasiconcave_ok",
            Family::CustomTable => "custom_table",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSpec {
    /// `[lo, hi]` per axis.
    pub bounds: Vec<[f64; 2]>,
    /// Points per axis.
    pub resolution: Vec<usize>,
    #[serde(default)]
    pub diagonal: bool,
    /// Keep boundary flags: the box is a truncation of an unbounded domain.
    /// Defaults to true for `affine_gamma` and `fixedpoint_phi`.
    #[serde(default)]
    pub unbounded: Option<bool>,
    #[serde(default)]
    pub cap: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub a: f64,
    pub b: f64,
    pub n: usize,
    /// Column indices of the dense parameter subset used by theorem2 checks.
    #[serde(default)]
    pub dense: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub family: Family,
    #[serde(default)]
    pub parameters: toml::Table,
    #[serde(default)]
    pub mesh: Option<MeshSpec>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    /// Nested parameter intervals `[a_n, b_n]`.
    #[serde(default)]
    pub exhaustion: Vec<[f64; 2]>,
    /// Directory that relative file parameters are resolved against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

/// Pulls the backticked key out of a serde "unknown field" or
/// "missing field" message.
fn offending_key(message: &str) -> Option<String> {
    for marker in ["unknown field `", "missing field `", "unknown variant `"] {
        if let Some(pos) = message.find(marker) {
            let rest = &message[pos + marker.len()..];
            if let Some(end) = rest.find('`') {
                return Some(rest[..end].to_string());
            }
        }
    }
    None
}

impl InstanceSpec {
    /// Parses a config document. `origin` is only used in error messages.
    pub fn from_toml_str(text: &str, origin: &Path) -> Result<InstanceSpec> {
        let spec: InstanceSpec = toml::from_str(text).map_err(|e| {
            let message = e.to_string().trim_end().to_string();
            match offending_key(&message) {
                Some(key) => Error::Schema { key, message },
                None => Error::Parse {
                    path: origin.to_path_buf(),
                    message,
                },
            }
        })?;
        spec.validate()?;
        Ok(spec)
    }

    /// Schema and range checks that do not need to build the mesh.
    pub fn validate(&self) -> Result<()> {
        match self.family {
            Family::BilinearCircle => {
                params::<CircleParams>(&self.parameters)?;
                self.forbid_mesh()?;
                if self.grid.is_some() {
                    return Err(Error::schema("grid", "bilinear_circle derives its grid from `n`"));
                }
            }
            Family::AffineGamma => {
                params::<AffineGammaParams>(&self.parameters)?;
                self.require_mesh()?;
                self.require_grid()?;
            }
            Family::FixedpointPhi => {
                params::<FixedPointParams>(&self.parameters)?;
                self.require_mesh()?;
                self.require_grid()?;
            }
            Family::IntegralFinite => {
                params::<IntegralParams>(&self.parameters)?;
                self.forbid_mesh()?;
                self.require_grid()?;
            }
            Family::QuadraticGap | Family::QuadraticOk | Family::NonquasiconcaveOk => {
                params::<NoParams>(&self.parameters)?;
            }
            Family::CustomTable => {
                params::<CustomParams>(&self.parameters)?;
                self.require_grid()?;
            }
        }
        if let Some(g) = &self.grid {
            Grid1D::new(g.a, g.b, g.n)?;
        }
        if let Some(m) = &self.mesh {
            if m.bounds.len() != m.resolution.len() || m.bounds.is_empty() {
                return Err(Error::schema("mesh.resolution", "needs one entry per axis of `mesh.bounds`"));
            }
        }
        Ok(())
    }

    fn forbid_mesh(&self) -> Result<()> {
        match self.mesh {
            Some(_) => Err(Error::schema("mesh", format!("{} builds its own mesh", self.family))),
            None => Ok(()),
        }
    }

    fn require_mesh(&self) -> Result<&MeshSpec> {
        self.mesh
            .as_ref()
            .ok_or_else(|| Error::schema("mesh", format!("{} needs a mesh table", self.family)))
    }

    fn require_grid(&self) -> Result<&GridSpec> {
        self.grid
            .as_ref()
            .ok_or_else(|| Error::schema("grid", format!("{} needs a grid table", self.family)))
    }
}

/// Reads and validates an instance config.
pub fn load_spec(path: impl AsRef<Path>) -> Result<InstanceSpec> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut spec = InstanceSpec::from_toml_str(&text, path)?;
    spec.base_dir = path.parent().map(Path::to_path_buf);
    Ok(spec)
}

fn params<T: DeserializeOwned>(table: &toml::Table) -> Result<T> {
    toml::Value::Table(table.clone()).try_into().map_err(|e: toml::de::Error| {
        let message = e.to_string().trim_end().to_string();
        let key = offending_key(&message).unwrap_or_else(|| "parameters".to_string());
        Error::Schema { key, message }
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoParams {}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CircleParams {
    n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Curvature {
    Convex,
    Concave,
}

/// Catalog of the parameter weight `gamma : [a, b] -> [-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum GammaSpec {
    /// `+-(2u^2 - 1)` with `u` the position rescaled to `[-1, 1]`.
    Quadratic { curvature: Curvature },
    /// `+-(2|u| - 1)`.
    AbsoluteValue { curvature: Curvature },
    /// Linear interpolation of `[lambda, value]` knots covering the grid.
    PiecewiseLinear { curvature: Curvature, knots: Vec<[f64; 2]> },
}

/// A weight function bound to its interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gamma {
    pub spec: GammaSpec,
    pub a: f64,
    pub b: f64,
}

impl Gamma {
    pub fn new(spec: GammaSpec, a: f64, b: f64) -> Result<Gamma> {
        if let GammaSpec::PiecewiseLinear { knots, .. } = &spec {
            if knots.len() < 2 || knots.windows(2).any(|w| !(w[0][0] < w[1][0])) {
                return Err(Error::schema("knots", "need at least two knots with increasing positions"));
            }
            if knots.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::schema("knots", "knots must be finite"));
            }
            if knots[0][0] > a || knots[knots.len() - 1][0] < b {
                return Err(Error::schema("knots", format!("knots must cover [{a}, {b}]")));
            }
        }
        Ok(Gamma { spec, a, b })
    }

    pub fn curvature(&self) -> Curvature {
        match &self.spec {
            GammaSpec::Quadratic { curvature }
            | GammaSpec::AbsoluteValue { curvature }
            | GammaSpec::PiecewiseLinear { curvature, .. } => *curvature,
        }
    }

    pub fn eval(&self, lambda: f64) -> f64 {
        let sign = match self.curvature() {
            Curvature::Convex => 1.0,
            Curvature::Concave => -1.0,
        };
        let mid = 0.5 * (self.a + self.b);
        let half = 0.5 * (self.b - self.a);
        let u = (lambda - mid) / half;
        match &self.spec {
            GammaSpec::Quadratic { .. } => sign * (2.0 * u * u - 1.0),
            GammaSpec::AbsoluteValue { .. } => sign * (2.0 * u.abs() - 1.0),
            GammaSpec::PiecewiseLinear { knots, .. } => {
                let k = knots.partition_point(|p| p[0] <= lambda).clamp(1, knots.len() - 1);
                let ([l0, v0], [l1, v1]) = (knots[k - 1], knots[k]);
                v0 + (v1 - v0) * (lambda - l0) / (l1 - l0)
            }
        }
    }
}

/// `psi` with Lipschitz constant equal to `|phi|` by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PsiSpec {
    /// `|phi| (|x - center| - offset)`.
    ShiftedNorm { center: Vec<f64>, offset: f64 },
    /// `|phi| (<direction, x> / |direction| - offset)`.
    Linear { direction: Vec<f64>, offset: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct AffineGammaParams {
    phi: Vec<f64>,
    psi: PsiSpec,
    gamma: GammaSpec,
    c: f64,
}

fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn make_psi(spec: &PsiSpec, weight: f64, dim: usize) -> Result<Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>> {
    match spec.clone() {
        PsiSpec::ShiftedNorm { center, offset } => {
            if center.len() != dim {
                return Err(Error::schema("center", format!("expected {dim} coordinates")));
            }
            Ok(Arc::new(move |x: &[f64]| {
                let d: f64 = x.iter().zip(&center).map(|(a, b)| (a - b).powi(2)).sum();
                weight * (d.sqrt() - offset)
            }))
        }
        PsiSpec::Linear { direction, offset } => {
            if direction.len() != dim {
                return Err(Error::schema("direction", format!("expected {dim} coordinates")));
            }
            let n = euclid(&direction);
            if n == 0.0 {
                return Err(Error::schema("direction", "must be nonzero"));
            }
            Ok(Arc::new(move |x: &[f64]| {
                let s: f64 = x.iter().zip(&direction).map(|(a, b)| a * b).sum();
                weight * (s / n - offset)
            }))
        }
    }
}

/// The map catalog for `fixedpoint_phi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapSpec {
    /// `m(x2) (1 + amplitude sin(frequency x1), height)` where `m` is 1 above
    /// `taper_start`, `floor` below `taper_end` and linear in between.
    TaperedShear {
        amplitude: f64,
        frequency: f64,
        height: f64,
        floor: f64,
        taper_start: f64,
        taper_end: f64,
    },
    /// `offset + matrix x`.
    Affine { offset: Vec<f64>, matrix: Vec<Vec<f64>> },
    /// `start + s(<weights, x> + bias) (end - start)` with the logistic `s`;
    /// the range lies on the segment `[start, end]`.
    SegmentBlend {
        start: [f64; 2],
        end: [f64; 2],
        weights: [f64; 2],
        bias: f64,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct FixedPointParams {
    alpha: f64,
    c: f64,
    lipschitz: f64,
    map: MapSpec,
    /// Clip the mesh to the double cone over the `segment_blend` range.
    #[serde(default)]
    cone: bool,
    #[serde(default)]
    mode: Option<AbMode>,
}

pub fn build_map(spec: &MapSpec, dim: usize, alpha: f64, c: f64, lipschitz: f64) -> Result<VectorFieldMap> {
    let need_planar = |name: &str| {
        if dim == 2 {
            Ok(())
        } else {
            Err(Error::schema("map", format!("{name} needs a planar mesh")))
        }
    };
    match spec.clone() {
        MapSpec::TaperedShear {
            amplitude,
            frequency,
            height,
            floor,
            taper_start,
            taper_end,
        } => {
            need_planar("tapered_shear")?;
            if !(taper_end < taper_start) {
                return Err(Error::schema("taper_end", "must lie below taper_start"));
            }
            VectorFieldMap::new("tapered_shear", 2, alpha, c, lipschitz, move |x, out| {
                let m = if x[1] >= taper_start {
                    1.0
                } else if x[1] <= taper_end {
                    floor
                } else {
                    floor + (1.0 - floor) * (x[1] - taper_end) / (taper_start - taper_end)
                };
                out[0] = m * (1.0 + amplitude * (frequency * x[0]).sin());
                out[1] = m * height;
            })
        }
        MapSpec::Affine { offset, matrix } => {
            if offset.len() != dim || matrix.len() != dim || matrix.iter().any(|r| r.len() != dim) {
                return Err(Error::schema("matrix", format!("expected a {dim}x{dim} matrix and {dim} offsets")));
            }
            VectorFieldMap::new("affine", dim, alpha, c, lipschitz, move |x, out| {
                for (k, o) in out.iter_mut().enumerate() {
                    *o = offset[k] + matrix[k].iter().zip(x).map(|(m, xi)| m * xi).sum::<f64>();
                }
            })
        }
        MapSpec::SegmentBlend {
            start,
            end,
            weights,
            bias,
        } => {
            need_planar("segment_blend")?;
            VectorFieldMap::new("segment_blend", 2, alpha, c, lipschitz, move |x, out| {
                let s = 1.0 / (1.0 + (-(weights[0] * x[0] + weights[1] * x[1] + bias)).exp());
                out[0] = start[0] + s * (end[0] - start[0]);
                out[1] = start[1] + s * (end[1] - start[1]);
            })
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct IntegralParams {
    states: Vec<Vec<f64>>,
    phi: Vec<Vec<f64>>,
    psi: Vec<Vec<f64>>,
    omega: Vec<Vec<f64>>,
    gamma: GammaSpec,
    #[serde(default = "default_max_states")]
    max_states: usize,
}

fn default_max_states() -> usize {
    8
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct CustomParams {
    /// CSV file, one row per mesh point, one column per grid point.
    path: PathBuf,
}

/// A check performed while building an instance. Failures are data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BuildCheck {
    pub name: String,
    pub holds: bool,
    pub detail: String,
}

/// The map and mode of a `fixedpoint_phi` instance.
#[derive(Debug, Clone)]
pub struct FieldSetup {
    pub map: VectorFieldMap,
    pub mode: AbMode,
    pub bounds: fixedpoint::RangeNormBounds,
}

/// A built instance: mesh, grid, objective and side information.
#[derive(Debug, Clone)]
pub struct Instance {
    pub family: Family,
    pub space: Space,
    pub grid: Grid1D,
    pub objective: Objective,
    pub exhaustion: Vec<Range<usize>>,
    pub dense: Option<Vec<usize>>,
    pub checks: Vec<BuildCheck>,
    pub field: Option<FieldSetup>,
    /// `psi` per mesh point for `affine_gamma`.
    pub psi: Option<Vec<f64>>,
    pub gamma: Option<Gamma>,
    table: Option<ValueTable>,
}

impl Instance {
    /// The value table over the instance's mesh and grid.
    pub fn table(&self) -> Result<ValueTable> {
        match &self.table {
            Some(t) => Ok(t.clone()),
            None => analysis::evaluate_table(&self.objective, &self.space, &self.grid),
        }
    }
}

fn build_mesh(m: &MeshSpec, unbounded_default: bool) -> Result<Space> {
    let bounds: Vec<(f64, f64)> = m.bounds.iter().map(|b| (b[0], b[1])).collect();
    let opts = BoxGridOptions {
        diagonal: m.diagonal,
        cap: m.cap.unwrap_or(DEFAULT_POINT_CAP),
    };
    let space = mesh::build_box_grid_with(&bounds, &m.resolution, &opts)?;
    Ok(if m.unbounded.unwrap_or(unbounded_default) {
        space
    } else {
        space.without_boundary()
    })
}

fn mesh_or(spec: &InstanceSpec, bounds: (f64, f64), n: usize, unbounded_default: bool) -> Result<Space> {
    match &spec.mesh {
        Some(m) => build_mesh(m, unbounded_default),
        None => Ok(mesh::build_box_grid(&[bounds], &[n])?.without_boundary()),
    }
}

fn grid_or(spec: &InstanceSpec, a: f64, b: f64, n: usize) -> Result<Grid1D> {
    match &spec.grid {
        Some(g) => Grid1D::new(g.a, g.b, g.n),
        None => Grid1D::new(a, b, n),
    }
}

/// `-(lambda^2 - 1)^2 + lambda`.
pub fn nonquasiconcave_weight(lambda: f64) -> f64 {
    -(lambda * lambda - 1.0).powi(2) + lambda
}

fn gamma_checks(gamma: &Gamma, grid: &Grid1D, affine: bool) -> Vec<BuildCheck> {
    let vals: Vec<f64> = grid.values().iter().map(|&l| gamma.eval(l)).collect();
    let scale = vals.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let sign = match gamma.curvature() {
        Curvature::Convex => 1.0,
        Curvature::Concave => -1.0,
    };
    let bad_curvature = vals
        .windows(3)
        .position(|w| sign * (w[0] - 2.0 * w[1] + w[2]) < -1e-12 * scale);
    let mut checks = vec![BuildCheck {
        name: "gamma_curvature".into(),
        holds: bad_curvature.is_none(),
        detail: match bad_curvature {
            None => format!("second differences agree with the declared {:?} flag", gamma.curvature()),
            Some(j) => format!("second difference has the wrong sign at grid index {}", j + 1),
        },
    }];
    if affine {
        let out = vals.iter().position(|v| v.abs() > 1.0 + 1e-12);
        checks.push(BuildCheck {
            name: "gamma_range".into(),
            holds: out.is_none(),
            detail: match out {
                None => "gamma stays in [-1, 1] on the grid".into(),
                Some(j) => format!("gamma leaves [-1, 1] at grid index {j}"),
            },
        });
        let extreme = |v: f64| (v.abs() - 1.0).abs() <= 1e-12;
        let pair = vals.windows(2).position(|w| extreme(w[0]) && extreme(w[1]));
        checks.push(BuildCheck {
            name: "gamma_extremes_isolated".into(),
            holds: pair.is_none(),
            detail: match pair {
                None => "no two consecutive grid points both map to +-1".into(),
                Some(j) => format!("grid indices {j} and {} both map to +-1", j + 1),
            },
        });
    }
    checks
}

/// Builds the mesh, grid and objective of a validated spec.
pub fn build_instance(spec: &InstanceSpec) -> Result<Instance> {
    spec.validate()?;
    let mut inst = match spec.family {
        Family::BilinearCircle => build_circle_instance(spec)?,
        Family::QuadraticGap => {
            let space = mesh_or(spec, (0.0, 1.0), 201, false)?;
            let grid = grid_or(spec, 0.0, 1.0, 101)?;
            let obj = Objective::new("quadratic_gap", Some(2.0), |x, l| (x[0] - l).powi(2));
            plain(spec.family, space, grid, obj)
        }
        Family::QuadraticOk => {
            let space = mesh_or(spec, (-1.0, 1.0), 201, false)?;
            let grid = grid_or(spec, 0.0, 1.0, 101)?;
            let obj = Objective::new("quadratic_ok", Some(3.0), |x, l| x[0] * x[0] + l * x[0]);
            plain(spec.family, space, grid, obj)
        }
        Family::NonquasiconcaveOk => {
            let space = mesh_or(spec, (-1.0, 1.0), 201, false)?;
            let grid = grid_or(spec, -2.0, 2.0, 101)?;
            // |d/dx| <= 2 + 11 and |d/dlambda| <= 23 on [-1, 1] x [-2, 2].
            let obj = Objective::new("nonquasiconcave_ok", Some(23.0), |x, l| {
                x[0] * x[0] + nonquasiconcave_weight(l) * x[0]
            });
            plain(spec.family, space, grid, obj)
        }
        Family::AffineGamma => build_affine_gamma(spec)?,
        Family::FixedpointPhi => build_fixedpoint(spec)?,
        Family::IntegralFinite => build_integral(spec)?,
        Family::CustomTable => build_custom(spec)?,
    };
    if !spec.exhaustion.is_empty() {
        let ranges = spec
            .exhaustion
            .iter()
            .map(|[lo, hi]| inst.grid.index_range(*lo, *hi))
            .collect::<Result<Vec<_>>>()?;
        analysis::validate_nested(&ranges, inst.grid.len())?;
        inst.exhaustion = ranges;
    }
    if let Some(dense) = spec.grid.as_ref().and_then(|g| g.dense.clone()) {
        if let Some(&bad) = dense.iter().find(|&&j| j >= inst.grid.len()) {
            return Err(Error::schema("grid.dense", format!("index {bad} is outside the grid")));
        }
        inst.dense = Some(dense);
    }
    Ok(inst)
}

fn plain(family: Family, space: Space, grid: Grid1D, objective: Objective) -> Instance {
    Instance {
        family,
        space,
        grid,
        objective,
        exhaustion: Vec::new(),
        dense: None,
        checks: Vec::new(),
        field: None,
        psi: None,
        gamma: None,
        table: None,
    }
}

/// The circle is parametrized by angle: grid value `t` stands for the
/// circle point at angle `t`, snapped to the exact mesh point.
fn build_circle_instance(spec: &InstanceSpec) -> Result<Instance> {
    let p: CircleParams = params(&spec.parameters)?;
    let space = mesh::build_circle(p.n)?;
    let n = p.n;
    let step = std::f64::consts::TAU / n as f64;
    let grid = Grid1D::new(0.0, step * (n - 1) as f64, n)?;
    let obj = Objective::new("bilinear_circle", Some(1.0), move |x, t| {
        let k = (t / step).round() as usize;
        let [u, v] = mesh::circle_point(k, n);
        x[0] * u + x[1] * v
    });
    Ok(plain(spec.family, space, grid, obj))
}

fn build_affine_gamma(spec: &InstanceSpec) -> Result<Instance> {
    let p: AffineGammaParams = params(&spec.parameters)?;
    let space = build_mesh(spec.require_mesh()?, true)?;
    let grid = grid_or(spec, 0.0, 1.0, 2)?;
    let dim = space.dim();
    if p.phi.len() != dim {
        return Err(Error::schema("phi", format!("expected {dim} coefficients")));
    }
    let weight = euclid(&p.phi);
    let psi = make_psi(&p.psi, weight, dim)?;
    let gamma = Gamma::new(p.gamma, grid.a(), grid.b())?;
    let psi_values: Vec<f64> = space.points().map(|x| psi(x)).collect();

    let mut checks = gamma_checks(&gamma, &grid, true);
    let (ga, gb) = (gamma.eval(grid.a()), gamma.eval(grid.b()));
    let relevant = |s: f64| match gamma.curvature() {
        Curvature::Convex => s > 0.0,
        Curvature::Concave => s < 0.0,
    };
    let tie = psi_values.iter().position(|&s| {
        let (ea, eb) = (ga * s + p.c * grid.a(), gb * s + p.c * grid.b());
        relevant(s) && (ea - eb).abs() <= 1e-12 * (1.0 + ea.abs().max(eb.abs()))
    });
    checks.push(BuildCheck {
        name: "endpoint_separation".into(),
        holds: tie.is_none(),
        detail: match tie {
            None => "endpoint values differ at every relevant mesh point".into(),
            Some(i) => format!("endpoint values coincide at mesh point {i}"),
        },
    });

    let (phi, c, g) = (p.phi.clone(), p.c, gamma.clone());
    let obj = Objective::new("affine_gamma", None, move |x, l| {
        let lin: f64 = phi.iter().zip(x).map(|(w, xi)| w * xi).sum();
        lin + g.eval(l) * psi(x) + c * l
    });
    let mut inst = plain(spec.family, space, grid, obj);
    inst.checks = checks;
    inst.psi = Some(psi_values);
    inst.gamma = Some(gamma);
    Ok(inst)
}

fn build_fixedpoint(spec: &InstanceSpec) -> Result<Instance> {
    let p: FixedPointParams = params(&spec.parameters)?;
    let mut space = build_mesh(spec.require_mesh()?, true)?;
    let grid = grid_or(spec, 0.0, 1.0, 2)?;
    let map = build_map(&p.map, space.dim(), p.alpha, p.c, p.lipschitz)?;
    if p.cone {
        let MapSpec::SegmentBlend { start, end, .. } = p.map else {
            return Err(Error::schema("cone", "cone clipping needs a segment_blend map"));
        };
        space = fixedpoint::clip_to_cone(&space, start, end)?.0;
    }
    let bounds = fixedpoint::validate_standing(&map, &space)?;
    let mode = p.mode.unwrap_or(if p.cone { AbMode::Theorem3 } else { AbMode::Theorem4 });
    let obj = fixedpoint::build_phi(&map);
    let mut inst = plain(spec.family, space, grid, obj);
    inst.checks.push(BuildCheck {
        name: "range_norm_bounds".into(),
        holds: bounds.standing_holds,
        detail: format!(
            "min |f| = {}, c = {}, |f(0)| = {}, truncation radius {}",
            bounds.min_norm,
            map.c(),
            bounds.norm_at_origin.unwrap_or(f64::NAN),
            bounds.truncation_radius
        ),
    });
    inst.field = Some(FieldSetup { map, mode, bounds });
    Ok(inst)
}

fn build_integral(spec: &InstanceSpec) -> Result<Instance> {
    let p: IntegralParams = params(&spec.parameters)?;
    let m = p.states.len();
    for (key, table) in [("phi", &p.phi), ("psi", &p.psi), ("omega", &p.omega)] {
        if table.len() != m || table.iter().zip(&p.states).any(|(v, s)| v.len() != s.len()) {
            return Err(Error::schema(key, "needs one value per state of every coordinate"));
        }
    }
    if let Some(t) = p.states.iter().position(|s| s.len() > p.max_states) {
        return Err(Error::schema("states", format!("coordinate {t} has more than {} states", p.max_states)));
    }
    let space = mesh::build_product(&p.states, DEFAULT_POINT_CAP)?;
    let grid = grid_or(spec, 0.0, 1.0, 2)?;
    let gamma = Gamma::new(p.gamma, grid.a(), grid.b())?;
    let checks = gamma_checks(&gamma, &grid, false);
    let (states, phi, psi, omega, g) = (p.states, p.phi, p.psi, p.omega, gamma.clone());
    let obj = Objective::new("integral_finite", None, move |u, l| {
        let gl = g.eval(l);
        let mut total = 0.0;
        for t in 0..states.len() {
            let k = states[t].partition_point(|&s| s < u[t]).min(states[t].len() - 1);
            total += phi[t][k] + gl * psi[t][k] + l * omega[t][k];
        }
        total
    });
    let mut inst = plain(spec.family, space, grid, obj);
    inst.checks = checks;
    inst.gamma = Some(gamma);
    Ok(inst)
}

fn build_custom(spec: &InstanceSpec) -> Result<Instance> {
    let p: CustomParams = params(&spec.parameters)?;
    let path = match &spec.base_dir {
        Some(dir) if p.path.is_relative() => dir.join(&p.path),
        _ => p.path.clone(),
    };
    let rows = read_table_csv(&path)?;
    let table = ValueTable::from_rows(rows)?;
    let grid = grid_or(spec, 0.0, 1.0, 2)?;
    if grid.len() != table.cols() {
        return Err(Error::schema(
            "grid.n",
            format!("table has {} columns, grid has {} points", table.cols(), grid.len()),
        ));
    }
    let space = match &spec.mesh {
        Some(m) => build_mesh(m, false)?,
        None => mesh::build_box_grid(&[(0.0, (table.rows() - 1).max(1) as f64)], &[table.rows().max(2)])?
            .without_boundary(),
    };
    if space.len() != table.rows() {
        return Err(Error::schema(
            "mesh.resolution",
            format!("table has {} rows, mesh has {} points", table.rows(), space.len()),
        ));
    }
    let lookup_space = space.clone();
    let lookup_grid = grid.clone();
    let lookup_table = table.clone();
    let obj = Objective::new("custom_table", None, move |x, l| {
        let i = lookup_space.nearest_point(x);
        let j = lookup_grid.locate(l, 1e-9).unwrap_or(0);
        lookup_table.get(i, j)
    });
    let mut inst = plain(spec.family, space, grid, obj);
    inst.table = Some(table);
    Ok(inst)
}

/// Reads a header-less CSV of reals, one row per line.
pub fn read_table_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let row = record
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                message: format!("line {}: {e}", line + 1),
            })?;
        rows.push(row);
    }
    Ok(rows)
}

/// Configs shipped with the crate, by demo name.
pub fn builtin_config(name: &str) -> Option<&'static str> {
    Some(match name {
        "circle" => include_str!("../../../instances/circle.toml"),
        "gapcase" => include_str!("../../../instances/quadratic_gap.toml"),
        "okcase" => include_str!("../../../instances/quadratic_ok.toml"),
        "nonqc" => include_str!("../../../instances/nonquasiconcave.toml"),
        "shear" => include_str!("../../../instances/tapered_shear.toml"),
        "affine" => include_str!("../../../instances/affine_gamma.toml"),
        "integral" => include_str!("../../../instances/integral_finite.toml"),
        _ => return None,
    })
}

pub const BUILTIN_NAMES: [&str; 7] = ["circle", "gapcase", "okcase", "nonqc", "shear", "affine", "integral"];

pub fn builtin_spec(name: &str) -> Option<InstanceSpec> {
    let text = builtin_config(name)?;
    Some(InstanceSpec::from_toml_str(text, Path::new(name)).expect("shipped configs are valid"))
}
