//! C¹ piecewise-cubic profiles on uniform grids.
//!
//! A [`HermiteProfile`] stores the value and first derivative of a function at
//! every node of a uniform [`Grid`]; on each cell the function is the unique
//! cubic matching those four numbers. The second derivative is piecewise
//! linear and may jump at nodes, so the represented function is in W^{2,∞}.
//!
//! Degrees of freedom are laid out interleaved: `[u_0, u'_0, u_1, u'_1, ...]`.

use std::io::Write;

use crate::error::{Error, Result};

/// Uniform partition of `[x_lo, x_hi]` into `n_cells` cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    x_lo: f64,
    x_hi: f64,
    n_cells: usize,
}

impl Grid {
    pub fn new(x_lo: f64, x_hi: f64, n_cells: usize) -> Result<Self> {
        if !(x_lo.is_finite() && x_hi.is_finite()) || x_hi <= x_lo {
            return Err(Error::arg(format!("degenerate interval ({x_lo}, {x_hi})")));
        }
        if n_cells == 0 {
            return Err(Error::arg("a grid needs at least one cell"));
        }
        Ok(Grid { x_lo, x_hi, n_cells })
    }

    /// The unit interval with `n_cells` cells.
    pub fn unit(n_cells: usize) -> Result<Self> {
        Grid::new(0.0, 1.0, n_cells)
    }

    pub fn x_lo(&self) -> f64 {
        self.x_lo
    }

    pub fn x_hi(&self) -> f64 {
        self.x_hi
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn n_nodes(&self) -> usize {
        self.n_cells + 1
    }

    pub fn len(&self) -> f64 {
        self.x_hi - self.x_lo
    }

    /// Cell width.
    pub fn h(&self) -> f64 {
        self.len() / self.n_cells as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.n_cells {
            self.x_hi
        } else {
            self.x_lo + i as f64 * self.h()
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_nodes()).map(move |i| self.node(i))
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.x_lo && x <= self.x_hi
    }

    /// Cell index and local coordinate in [0, 1]. Interior nodes belong to the
    /// cell on their right; the right endpoint belongs to the last cell.
    pub fn locate(&self, x: f64) -> Result<(usize, f64)> {
        if !self.contains(x) {
            return Err(Error::OutOfDomain {
                x,
                lo: self.x_lo,
                hi: self.x_hi,
            });
        }
        let s = (x - self.x_lo) / self.h();
        let cell = (s.floor() as usize).min(self.n_cells - 1);
        Ok((cell, (s - cell as f64).clamp(0.0, 1.0)))
    }

    /// Whether `other` describes the same domain, ignoring roundoff.
    pub fn same_domain(&self, lo: f64, hi: f64) -> bool {
        let tol = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
        (self.x_lo - lo).abs() <= tol && (self.x_hi - hi).abs() <= tol
    }
}

/// Cubic Hermite shape functions on [0, 1] and their derivatives in the local
/// coordinate, ordered as (value at 0, slope at 0, value at 1, slope at 1).
pub(crate) fn hermite_basis(t: f64) -> [[f64; 4]; 3] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        [
            2.0 * t3 - 3.0 * t2 + 1.0,
            t3 - 2.0 * t2 + t,
            -2.0 * t3 + 3.0 * t2,
            t3 - t2,
        ],
        [
            6.0 * t2 - 6.0 * t,
            3.0 * t2 - 4.0 * t + 1.0,
            -6.0 * t2 + 6.0 * t,
            3.0 * t2 - 2.0 * t,
        ],
        [12.0 * t - 6.0, 6.0 * t - 4.0, -12.0 * t + 6.0, 6.0 * t - 2.0],
    ]
}

/// A C¹ piecewise cubic given by nodal values and nodal derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteProfile {
    grid: Grid,
    values: Vec<f64>,
    derivs: Vec<f64>,
}

impl HermiteProfile {
    pub fn new(grid: Grid, values: Vec<f64>, derivs: Vec<f64>) -> Result<Self> {
        let n = grid.n_nodes();
        if values.len() != n || derivs.len() != n {
            return Err(Error::arg(format!(
                "expected {n} nodal values and derivatives, got {} and {}",
                values.len(),
                derivs.len()
            )));
        }
        if values.iter().chain(&derivs).any(|v| !v.is_finite()) {
            return Err(Error::arg("profile data must be finite"));
        }
        Ok(HermiteProfile {
            grid,
            values,
            derivs,
        })
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        HermiteProfile {
            grid,
            values: vec![c; grid.n_nodes()],
            derivs: vec![0.0; grid.n_nodes()],
        }
    }

    /// Samples a function and its exact derivative at the nodes.
    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().map(&f).collect();
        let derivs = grid.nodes().map(&df).collect();
        HermiteProfile::new(grid, values, derivs)
    }

    /// Rebuilds a profile from an interleaved degree-of-freedom vector.
    pub fn from_dofs(grid: Grid, dofs: &[f64]) -> Result<Self> {
        if dofs.len() != 2 * grid.n_nodes() {
            return Err(Error::arg(format!(
                "expected {} degrees of freedom, got {}",
                2 * grid.n_nodes(),
                dofs.len()
            )));
        }
        let values = dofs.iter().step_by(2).copied().collect();
        let derivs = dofs.iter().skip(1).step_by(2).copied().collect();
        HermiteProfile::new(grid, values, derivs)
    }

    pub fn dofs(&self) -> Vec<f64> {
        self.values
            .iter()
            .zip(&self.derivs)
            .flat_map(|(&u, &d)| [u, d])
            .collect()
    }

    pub fn n_dofs(&self) -> usize {
        2 * self.grid.n_nodes()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn derivs(&self) -> &[f64] {
        &self.derivs
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn derivs_mut(&mut self) -> &mut [f64] {
        &mut self.derivs
    }

    pub fn left_value(&self) -> f64 {
        self.values[0]
    }

    pub fn right_value(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// Local cubic coefficients of cell `i` in Hermite form, with slopes
    /// already multiplied by the cell width.
    #[inline]
    pub(crate) fn cell_coeffs(&self, i: usize) -> [f64; 4] {
        let h = self.grid.h();
        [
            self.values[i],
            h * self.derivs[i],
            self.values[i + 1],
            h * self.derivs[i + 1],
        ]
    }

    /// Value (order 0), first derivative (1) or second derivative (2) at `x`.
    /// Second derivatives at interior nodes are right limits.
    pub fn eval(&self, x: f64, order: usize) -> Result<f64> {
        if order > 2 {
            return Err(Error::arg(format!("derivative order {order} not in {{0, 1, 2}}")));
        }
        let (cell, t) = self.grid.locate(x)?;
        Ok(self.eval_local(cell, t, order))
    }

    #[inline]
    pub(crate) fn eval_local(&self, cell: usize, t: f64, order: usize) -> f64 {
        let c = self.cell_coeffs(cell);
        let b = hermite_basis(t)[order];
        let s = c[0] * b[0] + c[1] * b[1] + c[2] * b[2] + c[3] * b[3];
        s / self.grid.h().powi(order as i32)
    }

    /// The same function reparametrised affinely onto `(new_lo, new_hi)`:
    /// `w(y) = u(x_lo + (y - new_lo) * (x_hi - x_lo) / (new_hi - new_lo))`.
    pub fn rescale(&self, new_lo: f64, new_hi: f64) -> Result<Self> {
        let grid = Grid::new(new_lo, new_hi, self.grid.n_cells)?;
        let stretch = grid.len() / self.grid.len();
        Ok(HermiteProfile {
            grid,
            values: self.values.clone(),
            derivs: self.derivs.iter().map(|d| d / stretch).collect(),
        })
    }

    /// Pointwise negation, `u ↦ -u`.
    pub fn negated(&self) -> Self {
        HermiteProfile {
            grid: self.grid,
            values: self.values.iter().map(|v| -v).collect(),
            derivs: self.derivs.iter().map(|d| -d).collect(),
        }
    }

    /// Mirror image `w(x) = u(x_lo + x_hi - x)` on the same grid.
    pub fn reflected(&self) -> Self {
        HermiteProfile {
            grid: self.grid,
            values: self.values.iter().rev().copied().collect(),
            derivs: self.derivs.iter().rev().map(|d| -d).collect(),
        }
    }

    /// Interpolates this profile onto another grid covering a subset of its domain.
    pub fn resample(&self, grid: Grid) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.n_nodes());
        let mut derivs = Vec::with_capacity(grid.n_nodes());
        for x in grid.nodes() {
            values.push(self.eval(x, 0)?);
            derivs.push(self.eval(x, 1)?);
        }
        HermiteProfile::new(grid, values, derivs)
    }

    /// Writes the nodal data as CSV with header `x,u,du`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "x,u,du")?;
        for (i, x) in self.grid.nodes().enumerate() {
            writeln!(out, "{x},{},{}", self.values[i], self.derivs[i])?;
        }
        Ok(())
    }
}

/// Endpoint data frozen during optimization. A present field pins the
/// corresponding nodal degree of freedom.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BoundarySpec {
    pub left_value: Option<f64>,
    pub left_deriv: Option<f64>,
    pub right_value: Option<f64>,
    pub right_deriv: Option<f64>,
}

impl BoundarySpec {
    pub fn free() -> Self {
        BoundarySpec::default()
    }

    /// Both endpoints clamped: value and derivative pinned.
    pub fn clamped(left: f64, right: f64) -> Self {
        BoundarySpec {
            left_value: Some(left),
            left_deriv: Some(0.0),
            right_value: Some(right),
            right_deriv: Some(0.0),
        }
    }

    /// Endpoint values pinned, derivatives free.
    pub fn values(left: f64, right: f64) -> Self {
        BoundarySpec {
            left_value: Some(left),
            right_value: Some(right),
            ..Default::default()
        }
    }

    /// Left end clamped, right value pinned, right derivative free.
    pub fn left_clamped(left: f64, right: f64) -> Self {
        BoundarySpec {
            left_value: Some(left),
            left_deriv: Some(0.0),
            right_value: Some(right),
            right_deriv: None,
        }
    }

    /// `true` for every free degree of freedom in interleaved layout.
    pub fn free_mask(&self, n_nodes: usize) -> Vec<bool> {
        let mut mask = vec![true; 2 * n_nodes];
        let last = 2 * (n_nodes - 1);
        mask[0] = self.left_value.is_none();
        mask[1] = self.left_deriv.is_none();
        mask[last] = self.right_value.is_none();
        mask[last + 1] = self.right_deriv.is_none();
        mask
    }

    /// Overwrites the pinned degrees of freedom of `p`.
    pub fn apply(&self, p: &mut HermiteProfile) {
        let n = p.values.len() - 1;
        if let Some(v) = self.left_value {
            p.values[0] = v;
        }
        if let Some(v) = self.left_deriv {
            p.derivs[0] = v;
        }
        if let Some(v) = self.right_value {
            p.values[n] = v;
        }
        if let Some(v) = self.right_deriv {
            p.derivs[n] = v;
        }
    }

    /// Exact (bitwise) satisfaction of every pinned value.
    pub fn is_satisfied_by(&self, p: &HermiteProfile) -> bool {
        let n = p.values.len() - 1;
        let ok = |pin: Option<f64>, v: f64| pin.is_none_or(|x| x == v);
        ok(self.left_value, p.values[0])
            && ok(self.left_deriv, p.derivs[0])
            && ok(self.right_value, p.values[n])
            && ok(self.right_deriv, p.derivs[n])
    }

    /// The same constraints with every pinned value negated.
    pub fn negated(&self) -> Self {
        BoundarySpec {
            left_value: self.left_value.map(|v| -v),
            left_deriv: self.left_deriv.map(|v| -v),
            right_value: self.right_value.map(|v| -v),
            right_deriv: self.right_deriv.map(|v| -v),
        }
    }
}
