//! Finite meshes standing in for topological spaces.
//!
//! A [`Space`] is a point cloud with a symmetric adjacency relation. A subset
//! of a space is "connected" when the subgraph it induces is connected; every
//! connectedness verdict in the crate is a mesh-level verdict in this sense.

use std::collections::VecDeque;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of points a constructor may allocate.
pub const DEFAULT_POINT_CAP: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceKind {
    LineGrid,
    BoxGrid,
    Circle,
    Product,
    Custom,
}

/// Options for [`build_box_grid_with`].
#[derive(Debug, Clone, Copy)]
pub struct BoxGridOptions {
    /// Also connect points that differ by one step in several axes.
    pub diagonal: bool,
    pub cap: usize,
}

impl Default for BoxGridOptions {
    fn default() -> Self {
        BoxGridOptions {
            diagonal: false,
            cap: DEFAULT_POINT_CAP,
        }
    }
}

/// A finite mesh: coordinates, adjacency and boundary flags.
#[derive(Debug, Clone)]
pub struct Space {
    dim: usize,
    coords: Vec<f64>,
    neighbors: Vec<Vec<usize>>,
    kind: SpaceKind,
    boundary: Vec<bool>,
    spacing: f64,
}

impl Space {
    /// Builds a space from explicit data, checking the adjacency invariants.
    pub fn custom(
        points: Vec<Vec<f64>>,
        neighbors: Vec<Vec<usize>>,
        boundary: Vec<bool>,
    ) -> Result<Space> {
        let n = points.len();
        if n == 0 {
            return Err(Error::validation("custom space needs at least one point"));
        }
        let dim = points[0].len();
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::validation("custom space points have mixed dimensions"));
        }
        if neighbors.len() != n || boundary.len() != n {
            return Err(Error::validation(
                "custom space: neighbors and boundary flags must match the point count",
            ));
        }
        let mut spacing: f64 = 0.0;
        for (i, nb) in neighbors.iter().enumerate() {
            for &j in nb {
                if j >= n || j == i {
                    return Err(Error::validation(format!("bad neighbor {j} of point {i}")));
                }
                if !neighbors[j].contains(&i) {
                    return Err(Error::validation(format!("adjacency {i}->{j} is not symmetric")));
                }
                spacing = spacing.max(dist(&points[i], &points[j]));
            }
        }
        let coords = points.into_iter().flatten().collect();
        Ok(Space {
            dim,
            coords,
            neighbors,
            kind: SpaceKind::Custom,
            boundary,
            spacing,
        })
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim.max(1))
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.boundary[i]
    }

    /// Largest distance between adjacent points (the mesh width h_X).
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Drops all boundary flags, declaring the mesh to cover a compact space.
    pub fn without_boundary(mut self) -> Space {
        self.boundary.iter_mut().for_each(|b| *b = false);
        self
    }

    /// Index of the point whose coordinates equal `p` exactly.
    pub fn find_point(&self, p: &[f64]) -> Option<usize> {
        self.points().position(|q| q == p)
    }

    /// Index of the point nearest to `p` (smallest index on ties).
    pub fn nearest_point(&self, p: &[f64]) -> usize {
        let mut best = (f64::INFINITY, 0);
        for (i, q) in self.points().enumerate() {
            let d = dist(p, q);
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }

    /// Induced sub-mesh on the flagged points. Returns the new space and, for
    /// each new index, the index it had in `self`.
    pub fn restrict(&self, keep: &[bool]) -> Result<(Space, Vec<usize>)> {
        if keep.len() != self.len() {
            return Err(Error::validation("restrict: flag length differs from point count"));
        }
        let old: Vec<usize> = (0..self.len()).filter(|&i| keep[i]).collect();
        if old.is_empty() {
            return Err(Error::validation("restrict: no points kept"));
        }
        let mut new_index = vec![usize::MAX; self.len()];
        for (k, &i) in old.iter().enumerate() {
            new_index[i] = k;
        }
        let neighbors = old
            .iter()
            .map(|&i| {
                self.neighbors[i]
                    .iter()
                    .filter(|&&j| keep[j])
                    .map(|&j| new_index[j])
                    .collect()
            })
            .collect();
        let coords = old.iter().flat_map(|&i| self.point(i).iter().copied()).collect();
        let boundary = old.iter().map(|&i| self.boundary[i]).collect();
        Ok((
            Space {
                dim: self.dim,
                coords,
                neighbors,
                kind: SpaceKind::Custom,
                boundary,
                spacing: self.spacing,
            },
            old,
        ))
    }

    /// Breadth-first hop distance from the nearest flagged source; `None`
    /// for unreachable points.
    pub fn hop_distances(&self, sources: &[bool]) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.len()];
        let mut queue = VecDeque::new();
        for (i, &s) in sources.iter().enumerate() {
            if s {
                dist[i] = Some(0);
                queue.push_back(i);
            }
        }
        while let Some(i) = queue.pop_front() {
            let d = dist[i].unwrap_or(0) + 1;
            for &j in &self.neighbors[i] {
                if dist[j].is_none() {
                    dist[j] = Some(d);
                    queue.push_back(j);
                }
            }
        }
        dist
    }

    /// Checks the structural invariants: symmetric adjacency, no self loops,
    /// indices in range.
    pub fn check_invariants(&self) -> Result<()> {
        let n = self.len();
        for (i, nb) in self.neighbors.iter().enumerate() {
            for &j in nb {
                if j >= n || j == i || !self.neighbors[j].contains(&i) {
                    return Err(Error::validation(format!("adjacency invariant broken at {i}->{j}")));
                }
            }
        }
        Ok(())
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Uniform grid on a compact interval `[a, b]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    a: f64,
    b: f64,
    n: usize,
}

impl Grid1D {
    pub fn new(a: f64, b: f64, n: usize) -> Result<Grid1D> {
        if !(a.is_finite() && b.is_finite()) || a >= b {
            return Err(Error::validation(format!("grid needs finite a < b, got [{a}, {b}]")));
        }
        if n < 2 {
            return Err(Error::validation(format!("grid needs n >= 2 points, got {n}")));
        }
        Ok(Grid1D { a, b, n })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        (self.b - self.a) / (self.n - 1) as f64
    }

    /// `a + (b - a) j / (n - 1)`, with the last point pinned to `b`.
    pub fn value(&self, j: usize) -> f64 {
        axis_value(self.a, self.b, self.n, j)
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.value(j)).collect()
    }

    /// Index range of the grid points inside `[lo, hi]`, up to a relative
    /// slack of 1e-9 grid steps.
    pub fn index_range(&self, lo: f64, hi: f64) -> Result<Range<usize>> {
        if lo > hi {
            return Err(Error::validation(format!("empty interval [{lo}, {hi}]")));
        }
        let slack = 1e-9 * self.spacing();
        let start = (0..self.n).find(|&j| self.value(j) >= lo - slack);
        let end = (0..self.n).rev().find(|&j| self.value(j) <= hi + slack);
        match (start, end) {
            (Some(s), Some(e)) if s <= e => Ok(s..e + 1),
            _ => Err(Error::validation(format!(
                "interval [{lo}, {hi}] contains no point of the grid [{}, {}]",
                self.a, self.b
            ))),
        }
    }

    /// Index of a grid point equal to `v` within `rel` relative tolerance.
    pub fn locate(&self, v: f64, rel: f64) -> Option<usize> {
        let j = ((v - self.a) / self.spacing()).round();
        if j < 0.0 || j >= self.n as f64 {
            return None;
        }
        let j = j as usize;
        let tol = rel * (1.0 + v.abs());
        ((self.value(j) - v).abs() <= tol).then_some(j)
    }

    /// Components of a subset of grid indices under consecutive-index
    /// adjacency.
    pub fn components(&self, members: &[bool]) -> SubsetComponents {
        run_components(members)
    }
}

pub(crate) fn axis_value(a: f64, b: f64, n: usize, j: usize) -> f64 {
    if j + 1 == n {
        b
    } else {
        a + (b - a) * j as f64 / (n - 1) as f64
    }
}

/// Axis-aligned box grid with `resolution[k]` points along axis `k`.
pub fn build_box_grid(bounds: &[(f64, f64)], resolution: &[usize]) -> Result<Space> {
    build_box_grid_with(bounds, resolution, &BoxGridOptions::default())
}

pub fn build_box_grid_with(
    bounds: &[(f64, f64)],
    resolution: &[usize],
    opts: &BoxGridOptions,
) -> Result<Space> {
    if bounds.is_empty() || bounds.len() != resolution.len() {
        return Err(Error::validation(
            "box grid: bounds and resolution must be non-empty and of equal length",
        ));
    }
    for (k, (&(lo, hi), &r)) in bounds.iter().zip(resolution).enumerate() {
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            return Err(Error::validation(format!("axis {k}: need lo < hi, got ({lo}, {hi})")));
        }
        if r < 2 {
            return Err(Error::validation(format!("axis {k}: resolution must be >= 2, got {r}")));
        }
    }
    let total: u128 = resolution.iter().map(|&r| r as u128).product();
    if total > opts.cap as u128 {
        return Err(Error::Size {
            what: "box grid",
            requested: total,
            cap: opts.cap,
        });
    }
    let total = total as usize;
    let dim = bounds.len();
    // Row-major strides: the last axis varies fastest.
    let mut strides = vec![1usize; dim];
    for k in (0..dim.saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * resolution[k + 1];
    }
    let offsets = neighbor_offsets(dim, opts.diagonal);

    let mut coords = Vec::with_capacity(total * dim);
    let mut neighbors = Vec::with_capacity(total);
    let mut boundary = Vec::with_capacity(total);
    let mut idx = vec![0usize; dim];
    for flat in 0..total {
        let mut rem = flat;
        for k in 0..dim {
            idx[k] = rem / strides[k];
            rem %= strides[k];
        }
        for k in 0..dim {
            coords.push(axis_value(bounds[k].0, bounds[k].1, resolution[k], idx[k]));
        }
        boundary.push((0..dim).any(|k| idx[k] == 0 || idx[k] + 1 == resolution[k]));
        let mut nb = Vec::with_capacity(offsets.len());
        'offsets: for off in &offsets {
            let mut j = 0usize;
            for k in 0..dim {
                let v = idx[k] as isize + off[k];
                if v < 0 || v >= resolution[k] as isize {
                    continue 'offsets;
                }
                j += v as usize * strides[k];
            }
            nb.push(j);
        }
        nb.sort_unstable();
        neighbors.push(nb);
    }

    let spacing = bounds
        .iter()
        .zip(resolution)
        .map(|(&(lo, hi), &r)| (hi - lo) / (r - 1) as f64)
        .fold(0.0, f64::max);
    let spacing = if opts.diagonal {
        spacing * (dim as f64).sqrt()
    } else {
        spacing
    };
    Ok(Space {
        dim,
        coords,
        neighbors,
        kind: if dim == 1 {
            SpaceKind::LineGrid
        } else {
            SpaceKind::BoxGrid
        },
        boundary,
        spacing,
    })
}

fn neighbor_offsets(dim: usize, diagonal: bool) -> Vec<Vec<isize>> {
    if !diagonal {
        let mut out = Vec::with_capacity(2 * dim);
        for k in 0..dim {
            for s in [-1isize, 1] {
                let mut o = vec![0; dim];
                o[k] = s;
                out.push(o);
            }
        }
        return out;
    }
    let mut out = vec![vec![]];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|o: Vec<isize>| {
                [-1isize, 0, 1].into_iter().map(move |s| {
                    let mut o = o.clone();
                    o.push(s);
                    o
                })
            })
            .collect();
    }
    out.retain(|o| o.iter().any(|&s| s != 0));
    out
}

/// Point `k` of the `n`-point unit circle mesh.
///
/// Quarter-turn points are exact, and for even `n` the second half of the
/// circle is the exact negation of the first half.
pub fn circle_point(k: usize, n: usize) -> [f64; 2] {
    let k = k % n;
    if n % 2 == 0 && k >= n / 2 {
        let [x, y] = circle_point(k - n / 2, n);
        return [-x, -y];
    }
    if (4 * k) % n == 0 {
        return match 4 * k / n {
            0 => [1.0, 0.0],
            1 => [0.0, 1.0],
            2 => [-1.0, 0.0],
            _ => [0.0, -1.0],
        };
    }
    let t = std::f64::consts::TAU * k as f64 / n as f64;
    [t.cos(), t.sin()]
}

/// Cyclic mesh of `n` equally spaced points on the unit circle.
pub fn build_circle(n: usize) -> Result<Space> {
    if n < 3 {
        return Err(Error::validation(format!("circle needs n >= 3 points, got {n}")));
    }
    if n > DEFAULT_POINT_CAP {
        return Err(Error::Size {
            what: "circle",
            requested: n as u128,
            cap: DEFAULT_POINT_CAP,
        });
    }
    let coords = (0..n).flat_map(|k| circle_point(k, n)).collect();
    let neighbors = (0..n)
        .map(|k| {
            let mut nb = vec![(k + n - 1) % n, (k + 1) % n];
            nb.sort_unstable();
            nb
        })
        .collect();
    Ok(Space {
        dim: 2,
        coords,
        neighbors,
        kind: SpaceKind::Circle,
        boundary: vec![false; n],
        spacing: 2.0 * (std::f64::consts::PI / n as f64).sin(),
    })
}

/// Product of finite state lists. Two points are adjacent when they differ
/// in exactly one coordinate, by one step along that coordinate's list.
pub fn build_product(states: &[Vec<f64>], cap: usize) -> Result<Space> {
    if states.is_empty() {
        return Err(Error::validation("product mesh needs at least one coordinate"));
    }
    for (t, s) in states.iter().enumerate() {
        if s.is_empty() {
            return Err(Error::validation(format!("state list {t} is empty")));
        }
        if s.windows(2).any(|w| !(w[0] < w[1])) || s.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation(format!(
                "state list {t} must be finite and strictly increasing"
            )));
        }
    }
    let total: u128 = states.iter().map(|s| s.len() as u128).product();
    if total > cap as u128 {
        return Err(Error::Size {
            what: "product mesh",
            requested: total,
            cap,
        });
    }
    let total = total as usize;
    let dim = states.len();
    let sizes: Vec<usize> = states.iter().map(Vec::len).collect();
    let mut strides = vec![1usize; dim];
    for k in (0..dim.saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * sizes[k + 1];
    }
    let mut coords = Vec::with_capacity(total * dim);
    let mut neighbors = Vec::with_capacity(total);
    for flat in 0..total {
        let mut nb = Vec::new();
        for k in 0..dim {
            let ik = (flat / strides[k]) % sizes[k];
            coords.push(states[k][ik]);
            if ik > 0 {
                nb.push(flat - strides[k]);
            }
            if ik + 1 < sizes[k] {
                nb.push(flat + strides[k]);
            }
        }
        nb.sort_unstable();
        neighbors.push(nb);
    }
    let spacing = states
        .iter()
        .flat_map(|s| s.windows(2).map(|w| w[1] - w[0]))
        .fold(0.0, f64::max);
    Ok(Space {
        dim,
        coords,
        neighbors,
        kind: SpaceKind::Product,
        boundary: vec![false; total],
        spacing,
    })
}

/// Connected components of a member subset.
///
/// Components are numbered in increasing order of their smallest member
/// index, which is also the component's representative.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetComponents {
    pub member_flags: Vec<bool>,
    /// Component id per point; `None` for non-members.
    pub labels: Vec<Option<usize>>,
    pub component_count: usize,
    pub representatives: Vec<usize>,
    pub sizes: Vec<usize>,
}

impl SubsetComponents {
    pub fn is_connected(&self) -> bool {
        self.component_count <= 1
    }

    pub fn member_count(&self) -> usize {
        self.sizes.iter().sum()
    }

    fn from_roots(member_flags: Vec<bool>, mut root: impl FnMut(usize) -> usize) -> SubsetComponents {
        let n = member_flags.len();
        let mut labels = vec![None; n];
        let mut id_of_root: Vec<Option<usize>> = vec![None; n];
        let mut representatives = Vec::new();
        let mut sizes = Vec::new();
        for i in 0..n {
            if !member_flags[i] {
                continue;
            }
            let r = root(i);
            let id = *id_of_root[r].get_or_insert_with(|| {
                representatives.push(i);
                sizes.push(0);
                representatives.len() - 1
            });
            sizes[id] += 1;
            labels[i] = Some(id);
        }
        SubsetComponents {
            member_flags,
            labels,
            component_count: representatives.len(),
            representatives,
            sizes,
        }
    }
}

/// Disjoint-set forest with path halving and union by size.
struct DisjointSets {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
    }
}

/// Union-find over the edges internal to the member set.
///
/// # Panics
///
/// Panics if `member_flags.len()` differs from the number of points.
pub fn components(space: &Space, member_flags: &[bool]) -> SubsetComponents {
    assert_eq!(
        member_flags.len(),
        space.len(),
        "member flags must cover every mesh point"
    );
    let mut sets = DisjointSets::new(space.len());
    for i in 0..space.len() {
        if !member_flags[i] {
            continue;
        }
        for &j in space.neighbors(i) {
            if j > i && member_flags[j] {
                sets.union(i, j);
            }
        }
    }
    SubsetComponents::from_roots(member_flags.to_vec(), |i| sets.find(i))
}

/// True iff the member set has at most one component (the empty set counts
/// as connected).
pub fn is_connected(space: &Space, member_flags: &[bool]) -> bool {
    components(space, member_flags).is_connected()
}

/// Components of a subset of a path graph `0 - 1 - ... - n-1`: maximal runs
/// of consecutive members.
pub fn run_components(member_flags: &[bool]) -> SubsetComponents {
    let mut run_start = vec![0usize; member_flags.len()];
    for i in 0..member_flags.len() {
        run_start[i] = if i > 0 && member_flags[i] && member_flags[i - 1] {
            run_start[i - 1]
        } else {
            i
        };
    }
    SubsetComponents::from_roots(member_flags.to_vec(), |i| run_start[i])
}
