//! Uniform tensor grids on intervals and axis-aligned rectangles.
//!
//! Nodes are numbered lexicographically by axis: node `(i, j)` of a 2-D grid
//! with `ny` nodes along the second axis has index `i * ny + j`, so the last
//! axis varies fastest. Cells follow the same rule with `nx - 1` and `ny - 1`.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundaryMode {
    /// Zero trace; boundary nodes are pinned to 0.
    Dirichlet,
    /// Zero flux; every node is free.
    Neumann,
}

impl BoundaryMode {
    pub fn tag(self) -> char {
        match self {
            BoundaryMode::Dirichlet => 'D',
            BoundaryMode::Neumann => 'N',
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Axis<T> {
    pub lo: T,
    pub hi: T,
    pub nodes: usize,
    pub spacing: T,
}

impl<T: Scalar> Axis<T> {
    pub fn coord(&self, i: usize) -> T {
        self.lo + self.spacing * T::from_usize_lossy(i)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid<T> {
    axes: Vec<Axis<T>>,
    boundary: BoundaryMode,
}

/// Node values on a grid (a state `u`, a weight `a`, an eigenfunction, ...).
#[derive(Clone, Debug, PartialEq)]
pub struct Field<T> {
    values: Vec<T>,
}

/// One `dim`-vector per cell: the cell gradient of a field.
#[derive(Clone, Debug, PartialEq)]
pub struct CellVectorField<T> {
    dim: usize,
    comps: Vec<T>,
}

/// Gradient samples used by the kinetic quadrature.
///
/// 1-D: one sample per cell. 2-D: four samples per cell, one per corner, each
/// pairing one x-edge difference with one y-edge difference. All samples carry
/// the same weight, so `sum(weight * |g|^p)` integrates `|grad u|^p`.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientSamples<T> {
    dim: usize,
    per_cell: usize,
    weight: T,
    comps: Vec<T>,
}

impl<T: Scalar> Grid<T> {
    /// Builds a grid from per-axis extents and node counts.
    pub fn new(extents: &[(T, T)], nodes: &[usize], boundary: BoundaryMode) -> Result<Self> {
        let dim = extents.len();
        if dim == 0 || dim > 2 {
            return Err(Error::UnsupportedDimension(dim));
        }
        if nodes.len() != dim {
            return Err(Error::LengthMismatch {
                expected: dim,
                got: nodes.len(),
            });
        }
        let mut axes = Vec::with_capacity(dim);
        for (axis, (&(lo, hi), &n)) in extents.iter().zip(nodes).enumerate() {
            if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
                return Err(Error::DegenerateExtents {
                    axis,
                    lo: lo.to_f64_lossy(),
                    hi: hi.to_f64_lossy(),
                });
            }
            if n < 3 {
                return Err(Error::TooFewNodes { axis, nodes: n });
            }
            let spacing = (hi - lo) / T::from_usize_lossy(n - 1);
            axes.push(Axis {
                lo,
                hi,
                nodes: n,
                spacing,
            });
        }
        Ok(Grid { axes, boundary })
    }

    pub fn interval(lo: T, hi: T, nodes: usize, boundary: BoundaryMode) -> Result<Self> {
        Self::new(&[(lo, hi)], &[nodes], boundary)
    }

    pub fn rectangle(
        x: (T, T),
        y: (T, T),
        nodes: (usize, usize),
        boundary: BoundaryMode,
    ) -> Result<Self> {
        Self::new(&[x, y], &[nodes.0, nodes.1], boundary)
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis<T>] {
        &self.axes
    }

    pub fn boundary(&self) -> BoundaryMode {
        self.boundary
    }

    /// Same nodes and extents under a different boundary operator.
    pub fn with_boundary(&self, boundary: BoundaryMode) -> Self {
        Grid {
            axes: self.axes.clone(),
            boundary,
        }
    }

    pub fn node_count(&self) -> usize {
        self.axes.iter().map(|a| a.nodes).product()
    }

    pub fn cell_count(&self) -> usize {
        self.axes.iter().map(|a| a.nodes - 1).product()
    }

    pub fn spacing(&self) -> Vec<T> {
        self.axes.iter().map(|a| a.spacing).collect()
    }

    pub fn cell_volume(&self) -> T {
        self.axes.iter().fold(T::one(), |acc, a| acc * a.spacing)
    }

    pub fn volume(&self) -> T {
        self.axes
            .iter()
            .fold(T::one(), |acc, a| acc * (a.hi - a.lo))
    }

    fn last_nodes(&self) -> usize {
        self.axes.last().map(|a| a.nodes).unwrap_or(1)
    }

    /// Multi-index of a node; the second entry is 0 on 1-D grids.
    pub fn node_multi(&self, idx: usize) -> [usize; 2] {
        match self.dim() {
            1 => [idx, 0],
            _ => {
                let ny = self.last_nodes();
                [idx / ny, idx % ny]
            }
        }
    }

    pub fn node_index(&self, multi: [usize; 2]) -> usize {
        match self.dim() {
            1 => multi[0],
            _ => multi[0] * self.last_nodes() + multi[1],
        }
    }

    /// Coordinates of a node; the second entry is 0 on 1-D grids.
    pub fn coords(&self, idx: usize) -> [T; 2] {
        let m = self.node_multi(idx);
        let x = self.axes[0].coord(m[0]);
        let y = if self.dim() == 2 {
            self.axes[1].coord(m[1])
        } else {
            T::zero()
        };
        [x, y]
    }

    /// Number of boundary faces the node lies on (0 for interior nodes).
    pub fn boundary_faces(&self, idx: usize) -> usize {
        let m = self.node_multi(idx);
        self.axes
            .iter()
            .enumerate()
            .filter(|(k, a)| m[*k] == 0 || m[*k] == a.nodes - 1)
            .count()
    }

    pub fn is_boundary_node(&self, idx: usize) -> bool {
        self.boundary_faces(idx) > 0
    }

    /// Nodes whose value is a degree of freedom: all nodes in Neumann mode,
    /// interior nodes in Dirichlet mode.
    pub fn free_mask(&self) -> Vec<bool> {
        (0..self.node_count())
            .map(|i| self.boundary == BoundaryMode::Neumann || !self.is_boundary_node(i))
            .collect()
    }

    /// Nodes that belong to the open domain: interior nodes in Dirichlet mode,
    /// every node in Neumann mode (where the closure is the relevant set).
    pub fn domain_mask(&self) -> Vec<bool> {
        self.free_mask()
    }

    /// Adjacent nodes: left/right in 1-D, 4-neighborhood in 2-D.
    pub fn neighbors(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        let m = self.node_multi(idx);
        let dim = self.dim();
        let mut out = [usize::MAX; 4];
        let mut k = 0;
        for axis in 0..dim {
            let n = self.axes[axis].nodes;
            if m[axis] > 0 {
                let mut mm = m;
                mm[axis] -= 1;
                out[k] = self.node_index(mm);
                k += 1;
            }
            if m[axis] + 1 < n {
                let mut mm = m;
                mm[axis] += 1;
                out[k] = self.node_index(mm);
                k += 1;
            }
        }
        out.into_iter().take(k)
    }

    /// Trapezoidal (tensor-product in 2-D) node weights.
    pub fn quadrature_weights(&self) -> Vec<T> {
        let per_axis: Vec<Vec<T>> = self
            .axes
            .iter()
            .map(|a| {
                let half = a.spacing * T::c(0.5);
                (0..a.nodes)
                    .map(|i| {
                        if i == 0 || i == a.nodes - 1 {
                            half
                        } else {
                            a.spacing
                        }
                    })
                    .collect()
            })
            .collect();
        match self.dim() {
            1 => per_axis[0].clone(),
            _ => {
                let mut w = Vec::with_capacity(self.node_count());
                for &wx in &per_axis[0] {
                    for &wy in &per_axis[1] {
                        w.push(wx * wy);
                    }
                }
                w
            }
        }
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.node_count() {
            return Err(Error::LengthMismatch {
                expected: self.node_count(),
                got: len,
            });
        }
        Ok(())
    }

    /// Trapezoidal quadrature of nodal data.
    pub fn integrate_nodes(&self, f: &Field<T>) -> T {
        self.integrate_slice(f.values())
    }

    pub(crate) fn integrate_slice(&self, f: &[T]) -> T {
        debug_assert_eq!(f.len(), self.node_count());
        self.quadrature_weights()
            .iter()
            .zip(f)
            .map(|(&w, &v)| w * v)
            .sum()
    }

    /// Sum of cellwise values times the cell volume.
    pub fn integrate_cells(&self, f: &[T]) -> Result<T> {
        if f.len() != self.cell_count() {
            return Err(Error::LengthMismatch {
                expected: self.cell_count(),
                got: f.len(),
            });
        }
        Ok(f.iter().copied().sum::<T>() * self.cell_volume())
    }

    /// Dirichlet: boundary nodes set to 0. Neumann: identity.
    pub fn enforce_boundary(&self, u: &Field<T>) -> Field<T> {
        let mut out = u.clone();
        self.enforce_boundary_in_place(out.values_mut());
        out
    }

    pub(crate) fn enforce_boundary_in_place(&self, u: &mut [T]) {
        if self.boundary == BoundaryMode::Dirichlet {
            for (i, v) in u.iter_mut().enumerate() {
                if self.is_boundary_node(i) {
                    *v = T::zero();
                }
            }
        }
    }

    /// Cell gradient: forward difference in 1-D, cell-averaged forward
    /// differences in 2-D.
    pub fn gradient(&self, u: &Field<T>) -> CellVectorField<T> {
        self.gradient_of(u.values())
    }

    pub(crate) fn gradient_of(&self, u: &[T]) -> CellVectorField<T> {
        debug_assert_eq!(u.len(), self.node_count());
        match self.dim() {
            1 => {
                let h = self.axes[0].spacing;
                let comps = u.windows(2).map(|w| (w[1] - w[0]) / h).collect();
                CellVectorField { dim: 1, comps }
            }
            _ => {
                let (nx, ny) = (self.axes[0].nodes, self.axes[1].nodes);
                let (hx, hy) = (self.axes[0].spacing, self.axes[1].spacing);
                let two = T::c(2.0);
                let mut comps = Vec::with_capacity(2 * (nx - 1) * (ny - 1));
                for i in 0..nx - 1 {
                    for j in 0..ny - 1 {
                        let u00 = u[i * ny + j];
                        let u01 = u[i * ny + j + 1];
                        let u10 = u[(i + 1) * ny + j];
                        let u11 = u[(i + 1) * ny + j + 1];
                        comps.push(((u10 - u00) + (u11 - u01)) / (two * hx));
                        comps.push(((u01 - u00) + (u11 - u10)) / (two * hy));
                    }
                }
                CellVectorField { dim: 2, comps }
            }
        }
    }

    /// Per-sample gradients for the kinetic quadrature.
    pub fn gradient_samples(&self, u: &[T]) -> GradientSamples<T> {
        debug_assert_eq!(u.len(), self.node_count());
        match self.dim() {
            1 => {
                let h = self.axes[0].spacing;
                GradientSamples {
                    dim: 1,
                    per_cell: 1,
                    weight: h,
                    comps: u.windows(2).map(|w| (w[1] - w[0]) / h).collect(),
                }
            }
            _ => {
                let (nx, ny) = (self.axes[0].nodes, self.axes[1].nodes);
                let (hx, hy) = (self.axes[0].spacing, self.axes[1].spacing);
                let mut comps = Vec::with_capacity(8 * (nx - 1) * (ny - 1));
                for i in 0..nx - 1 {
                    for j in 0..ny - 1 {
                        let u00 = u[i * ny + j];
                        let u01 = u[i * ny + j + 1];
                        let u10 = u[(i + 1) * ny + j];
                        let u11 = u[(i + 1) * ny + j + 1];
                        let dx = [(u10 - u00) / hx, (u11 - u01) / hx];
                        let dy = [(u01 - u00) / hy, (u11 - u10) / hy];
                        for gx in dx {
                            for gy in dy {
                                comps.push(gx);
                                comps.push(gy);
                            }
                        }
                    }
                }
                GradientSamples {
                    dim: 2,
                    per_cell: 4,
                    weight: hx * hy * T::c(0.25),
                    comps,
                }
            }
        }
    }

    /// Adjoint of [`Grid::gradient_samples`]: given one coefficient vector per
    /// sample (same layout), returns `sum_s c_s . d g_s / d u` per node.
    pub fn gradient_samples_adjoint(&self, coeffs: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.node_count()];
        match self.dim() {
            1 => {
                let h = self.axes[0].spacing;
                for (c, &v) in coeffs.iter().enumerate() {
                    let t = v / h;
                    out[c + 1] += t;
                    out[c] -= t;
                }
            }
            _ => {
                let (nx, ny) = (self.axes[0].nodes, self.axes[1].nodes);
                let (hx, hy) = (self.axes[0].spacing, self.axes[1].spacing);
                let mut k = 0;
                for i in 0..nx - 1 {
                    for j in 0..ny - 1 {
                        for a in 0..2 {
                            for b in 0..2 {
                                let cx = coeffs[k] / hx;
                                let cy = coeffs[k + 1] / hy;
                                k += 2;
                                // x-edge at row j + a, y-edge at column i + b
                                out[(i + 1) * ny + j + a] += cx;
                                out[i * ny + j + a] -= cx;
                                out[(i + b) * ny + j + 1] += cy;
                                out[(i + b) * ny + j] -= cy;
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Cell index that owns a sample.
    pub fn sample_cell(&self, sample: usize) -> usize {
        if self.dim() == 1 {
            sample
        } else {
            sample / 4
        }
    }
}

impl<T: Scalar> GradientSamples<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.comps.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.comps.is_empty()
    }

    pub fn weight(&self) -> T {
        self.weight
    }

    pub fn per_cell(&self) -> usize {
        self.per_cell
    }

    pub fn comps(&self) -> &[T] {
        &self.comps
    }

    pub fn get(&self, s: usize) -> &[T] {
        &self.comps[s * self.dim..(s + 1) * self.dim]
    }

    pub fn norm_sq(&self, s: usize) -> T {
        self.get(s).iter().map(|&g| g * g).sum()
    }

    /// `sum_s weight * f(|g_s|)`.
    pub fn integrate_norm<F: Fn(T) -> T>(&self, f: F) -> T {
        (0..self.len())
            .map(|s| f(self.norm_sq(s).sqrt()))
            .sum::<T>()
            * self.weight
    }

    /// Cellwise mean of `f(|g_s|)` over each cell's samples.
    pub fn cell_means<F: Fn(T) -> T>(&self, f: F) -> Vec<T> {
        let inv = T::one() / T::from_usize_lossy(self.per_cell);
        (0..self.len() / self.per_cell)
            .map(|c| {
                (c * self.per_cell..(c + 1) * self.per_cell)
                    .map(|s| f(self.norm_sq(s).sqrt()))
                    .sum::<T>()
                    * inv
            })
            .collect()
    }
}

impl<T: Scalar> CellVectorField<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.comps.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.comps.is_empty()
    }

    pub fn get(&self, cell: usize) -> &[T] {
        &self.comps[cell * self.dim..(cell + 1) * self.dim]
    }

    pub fn comps(&self) -> &[T] {
        &self.comps
    }

    pub fn norm(&self, cell: usize) -> T {
        self.get(cell).iter().map(|&g| g * g).sum::<T>().sqrt()
    }

    pub fn dot(&self, other: &Self, cell: usize) -> T {
        self.get(cell)
            .iter()
            .zip(other.get(cell))
            .map(|(&a, &b)| a * b)
            .sum()
    }
}

impl<T: Scalar> Field<T> {
    /// Wraps node values; rejects wrong lengths and non-finite entries.
    pub fn new(grid: &Grid<T>, values: Vec<T>) -> Result<Self> {
        grid.check_len(values.len())?;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Field { values })
    }

    pub(crate) fn from_vec_unchecked(values: Vec<T>) -> Self {
        Field { values }
    }

    pub fn zeros(grid: &Grid<T>) -> Self {
        Field {
            values: vec![T::zero(); grid.node_count()],
        }
    }

    pub fn constant(grid: &Grid<T>, c: T) -> Self {
        Field {
            values: vec![c; grid.node_count()],
        }
    }

    /// Samples `f(x, y)` at every node (`y = 0` on 1-D grids).
    pub fn from_fn<F: FnMut(T, T) -> T>(grid: &Grid<T>, mut f: F) -> Self {
        let values = (0..grid.node_count())
            .map(|i| {
                let [x, y] = grid.coords(i);
                f(x, y)
            })
            .collect();
        Field { values }
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map<F: Fn(T) -> T>(&self, f: F) -> Self {
        Field {
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, t: T) -> Self {
        self.map(|v| v * t)
    }

    pub fn abs(&self) -> Self {
        self.map(|v| v.abs())
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// `alpha * self + beta * other`.
    pub fn combine(&self, alpha: T, other: &Self, beta: T) -> Self {
        Field {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| alpha * a + beta * b)
                .collect(),
        }
    }

    /// Max-norm distance.
    pub fn distance_inf(&self, other: &Self) -> T {
        self.values
            .iter()
            .zip(&other.values)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }
}

/// Renders a field in the plain-text dump format.
///
/// ```text
/// # grid dim=1 nodes=5 extents=0:1 bc=D
/// 0
/// 0.25
/// ...
/// ```
pub fn write_dump<T: Scalar>(grid: &Grid<T>, field: &Field<T>) -> String {
    let nodes: Vec<String> = grid.axes().iter().map(|a| a.nodes.to_string()).collect();
    let extents: Vec<String> = grid
        .axes()
        .iter()
        .map(|a| format!("{}:{}", a.lo, a.hi))
        .collect();
    let mut out = format!(
        "# grid dim={} nodes={} extents={} bc={}\n",
        grid.dim(),
        nodes.join(","),
        extents.join(","),
        grid.boundary().tag()
    );
    for v in field.values() {
        let _ = writeln!(out, "{v}");
    }
    out
}

/// Parses the dump format back into a grid and a field.
pub fn parse_dump<T: Scalar + std::str::FromStr>(text: &str) -> Result<(Grid<T>, Field<T>)> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Dump("empty input".into()))?;
    let rest = header
        .strip_prefix("# grid ")
        .ok_or_else(|| Error::Dump(format!("bad header line: {header}")))?;
    let (mut dim, mut nodes, mut extents, mut bc) = (None, None, None, None);
    for tok in rest.split_whitespace() {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| Error::Dump(format!("bad token {tok}")))?;
        match k {
            "dim" => dim = v.parse::<usize>().ok(),
            "nodes" => {
                nodes = v
                    .split(',')
                    .map(|s| s.parse::<usize>().ok())
                    .collect::<Option<Vec<_>>>()
            }
            "extents" => {
                extents = v
                    .split(',')
                    .map(|s| {
                        let (lo, hi) = s.split_once(':')?;
                        Some((lo.parse::<T>().ok()?, hi.parse::<T>().ok()?))
                    })
                    .collect::<Option<Vec<_>>>()
            }
            "bc" => {
                bc = match v {
                    "D" => Some(BoundaryMode::Dirichlet),
                    "N" => Some(BoundaryMode::Neumann),
                    _ => None,
                }
            }
            _ => return Err(Error::Dump(format!("unknown header key {k}"))),
        }
    }
    let dim = dim.ok_or_else(|| Error::Dump("missing dim".into()))?;
    let nodes = nodes.ok_or_else(|| Error::Dump("missing nodes".into()))?;
    let extents = extents.ok_or_else(|| Error::Dump("missing extents".into()))?;
    let bc = bc.ok_or_else(|| Error::Dump("missing bc".into()))?;
    if nodes.len() != dim || extents.len() != dim {
        return Err(Error::Dump("dim does not match nodes/extents".into()));
    }
    let grid = Grid::new(&extents, &nodes, bc)?;
    let values = lines
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            l.trim()
                .parse::<T>()
                .map_err(|_| Error::Dump(format!("bad value on data line {}", i + 1)))
        })
        .collect::<Result<Vec<T>>>()?;
    let field = Field::new(&grid, values)?;
    Ok((grid, field))
}
