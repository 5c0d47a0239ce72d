//! Uniform rectangular grids in ℝⁿ (n ∈ {1, 2}) carrying extended-real
//! function values, with trapezoidal quadrature and finite differences.
//!
//! A value is either a finite `f64` or `+∞` (`f64::INFINITY`); `NaN` and
//! `−∞` never enter a validated [`ExtendedGridFunction`]. The finite
//! region must be contiguous along every axis-parallel grid line, so the
//! finite domain is a sensible discrete stand-in for a convex set.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Extended-real helpers. `+∞` is the one sentinel; these rules are the
/// only place its arithmetic is spelled out.
pub mod ext {
    /// `∞ + x = ∞`, finite + finite as usual.
    #[inline]
    pub fn add(a: f64, b: f64) -> f64 {
        if a == f64::INFINITY || b == f64::INFINITY {
            f64::INFINITY
        } else {
            a + b
        }
    }

    /// `min(∞, x) = x`.
    #[inline]
    pub fn min(a: f64, b: f64) -> f64 {
        if a == f64::INFINITY {
            b
        } else if b == f64::INFINITY {
            a
        } else {
            a.min(b)
        }
    }

    /// True for finite values, false for the `+∞` sentinel.
    #[inline]
    pub fn is_finite(a: f64) -> bool {
        a != f64::INFINITY
    }

    /// Validates a raw extended value: finite or `+∞`, never `NaN`/`−∞`.
    #[inline]
    pub fn is_valid(a: f64) -> bool {
        !a.is_nan() && a != f64::NEG_INFINITY
    }
}

/// One grid axis: `count` equispaced nodes on `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, count: usize) -> Result<Self> {
        if count < 2 {
            return Err(Error::InvalidGrid(format!("axis needs >= 2 nodes, got {count}")));
        }
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(Error::InvalidGrid(format!("axis bounds invalid: [{min}, {max}]")));
        }
        Ok(Axis { min, max, count })
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        (self.max - self.min) / (self.count - 1) as f64
    }

    /// Node coordinate; always `min + i*spacing` so coordinates are
    /// bit-reproducible from `(min, spacing, index)`.
    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        self.min + i as f64 * self.spacing()
    }
}

/// Uniform rectangular grid, one or two axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    axes: Vec<Axis>,
}

impl Grid {
    /// Builds a grid from per-axis bounds. Rejects dim ∉ {1, 2},
    /// `count < 2` and `min >= max`.
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(Error::InvalidGrid(format!("dim must be 1 or 2, got {}", axes.len())));
        }
        for a in &axes {
            // Re-validate: Axis values may come straight from deserialization.
            Axis::new(a.min, a.max, a.count)?;
        }
        Ok(Grid { axes })
    }

    pub fn line(min: f64, max: f64, count: usize) -> Result<Self> {
        Grid::new(vec![Axis::new(min, max, count)?])
    }

    pub fn rect(x: (f64, f64, usize), y: (f64, f64, usize)) -> Result<Self> {
        Grid::new(vec![Axis::new(x.0, x.1, x.2)?, Axis::new(y.0, y.1, y.2)?])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    #[inline]
    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    #[inline]
    pub fn axis(&self, k: usize) -> &Axis {
        &self.axes[k]
    }

    /// Total node count.
    #[inline]
    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.count).product()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Row-major linear index, axis 0 slowest.
    #[inline]
    pub fn index(&self, multi: [usize; 2]) -> usize {
        match self.dim() {
            1 => multi[0],
            _ => multi[0] * self.axes[1].count + multi[1],
        }
    }

    /// Inverse of [`Grid::index`].
    #[inline]
    pub fn multi_index(&self, idx: usize) -> [usize; 2] {
        match self.dim() {
            1 => [idx, 0],
            _ => [idx / self.axes[1].count, idx % self.axes[1].count],
        }
    }

    /// Node coordinates; 1-D nodes keep the second coordinate at 0.
    #[inline]
    pub fn node(&self, idx: usize) -> [f64; 2] {
        let m = self.multi_index(idx);
        match self.dim() {
            1 => [self.axes[0].node(m[0]), 0.0],
            _ => [self.axes[0].node(m[0]), self.axes[1].node(m[1])],
        }
    }

    /// Volume of one grid cell (spacing product).
    #[inline]
    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(|a| a.spacing()).product()
    }

    /// True when the node lies on the outer ring of the grid.
    pub fn on_outer_ring(&self, idx: usize) -> bool {
        let m = self.multi_index(idx);
        (0..self.dim()).any(|k| m[k] == 0 || m[k] == self.axes[k].count - 1)
    }
}

/// Quadrature value plus a cheap error estimate.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QuadratureReport {
    pub value: f64,
    pub estimated_error: f64,
    pub cell_count: usize,
}

/// Extended-real function values on a [`Grid`].
#[derive(Debug, Clone)]
pub struct ExtendedGridFunction {
    grid: Grid,
    values: Vec<f64>,
    claimed_convex: bool,
    claimed_coercive: bool,
}

/// Relative tolerance for the discrete midpoint-convexity check.
pub const CONVEXITY_TOL: f64 = 1e-9;

impl ExtendedGridFunction {
    /// Validates and wraps raw values. See the module docs for the value
    /// conventions; `claimed_convex`/`claimed_coercive` trigger the
    /// corresponding structural checks.
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        Self::with_claims(grid, values, false, false)
    }

    pub fn with_claims(
        grid: Grid,
        values: Vec<f64>,
        claimed_convex: bool,
        claimed_coercive: bool,
    ) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidValues(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        for (i, &v) in values.iter().enumerate() {
            if !ext::is_valid(v) {
                return Err(Error::InvalidValues(format!("value at node {i} is {v}")));
            }
        }
        let f = ExtendedGridFunction { grid, values, claimed_convex, claimed_coercive };
        f.check_contiguous_domain()?;
        if claimed_convex {
            f.check_discrete_convexity()?;
        }
        if claimed_coercive {
            f.check_coercivity()?;
        }
        Ok(f)
    }

    /// Samples a closure at the grid nodes.
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(grid.node(i))).collect();
        Self::new(grid, values)
    }

    pub fn from_fn_with_claims(
        grid: Grid,
        f: impl Fn([f64; 2]) -> f64,
        convex: bool,
        coercive: bool,
    ) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(grid.node(i))).collect();
        Self::with_claims(grid, values, convex, coercive)
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn value(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    #[inline]
    pub fn claimed_convex(&self) -> bool {
        self.claimed_convex
    }

    #[inline]
    pub fn claimed_coercive(&self) -> bool {
        self.claimed_coercive
    }

    /// Indices of nodes with finite value.
    pub fn finite_nodes(&self) -> Vec<usize> {
        (0..self.values.len()).filter(|&i| ext::is_finite(self.values[i])).collect()
    }

    pub fn is_proper(&self) -> bool {
        self.values.iter().any(|&v| ext::is_finite(v))
    }

    /// Multilinear interpolation at an arbitrary point. Returns `+∞`
    /// outside the grid box or when any stencil corner is `+∞`.
    pub fn interpolate(&self, p: [f64; 2]) -> f64 {
        let mut idx = [0usize; 2];
        let mut frac = [0.0f64; 2];
        for k in 0..self.grid.dim() {
            let a = self.grid.axis(k);
            let t = (p[k] - a.min) / a.spacing();
            if t < -1e-12 || t > (a.count - 1) as f64 + 1e-12 {
                return f64::INFINITY;
            }
            let i = (t.floor().max(0.0) as usize).min(a.count - 2);
            idx[k] = i;
            frac[k] = (t - i as f64).clamp(0.0, 1.0);
        }
        match self.grid.dim() {
            1 => {
                let v0 = self.values[idx[0]];
                let v1 = self.values[idx[0] + 1];
                if !ext::is_finite(v0) || !ext::is_finite(v1) {
                    return f64::INFINITY;
                }
                v0 + frac[0] * (v1 - v0)
            }
            _ => {
                let g = &self.grid;
                let c = [
                    self.values[g.index([idx[0], idx[1]])],
                    self.values[g.index([idx[0], idx[1] + 1])],
                    self.values[g.index([idx[0] + 1, idx[1]])],
                    self.values[g.index([idx[0] + 1, idx[1] + 1])],
                ];
                if c.iter().any(|v| !ext::is_finite(*v)) {
                    return f64::INFINITY;
                }
                let (s, t) = (frac[0], frac[1]);
                (1.0 - s) * ((1.0 - t) * c[0] + t * c[1]) + s * ((1.0 - t) * c[2] + t * c[3])
            }
        }
    }

    fn check_contiguous_domain(&self) -> Result<()> {
        // Finite nodes on every axis-parallel line must form one run.
        let check_line = |vals: &mut dyn Iterator<Item = f64>| -> bool {
            let mut runs = 0;
            let mut prev_finite = false;
            for v in vals {
                let fin = ext::is_finite(v);
                if fin && !prev_finite {
                    runs += 1;
                }
                prev_finite = fin;
            }
            runs <= 1
        };
        match self.grid.dim() {
            1 => {
                if !check_line(&mut self.values.iter().copied()) {
                    return Err(Error::InvalidValues("finite domain not contiguous".into()));
                }
            }
            _ => {
                let (n0, n1) = (self.grid.axis(0).count, self.grid.axis(1).count);
                for i0 in 0..n0 {
                    let mut line = (0..n1).map(|i1| self.values[self.grid.index([i0, i1])]);
                    if !check_line(&mut line) {
                        return Err(Error::InvalidValues(format!(
                            "finite domain not contiguous along row {i0}"
                        )));
                    }
                }
                for i1 in 0..n1 {
                    let mut line = (0..n0).map(|i0| self.values[self.grid.index([i0, i1])]);
                    if !check_line(&mut line) {
                        return Err(Error::InvalidValues(format!(
                            "finite domain not contiguous along column {i1}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Midpoint convexity `v(i−1) + v(i+1) >= 2 v(i)` along axes and both
    /// diagonals, with `∞ + x = ∞` and tolerance `1e−9·(1+|v(i)|)`.
    fn check_discrete_convexity(&self) -> Result<()> {
        let test = |a: f64, mid: f64, b: f64| -> bool {
            if !ext::is_finite(mid) {
                return true; // ∞ center never violates
            }
            let lhs = ext::add(a, b);
            if !ext::is_finite(lhs) {
                // A finite value between two infinities breaks domain
                // contiguity, caught elsewhere; one-sided ∞ is fine.
                return true;
            }
            lhs >= 2.0 * mid - CONVEXITY_TOL * (1.0 + mid.abs())
        };
        let dirs: &[[isize; 2]] = match self.grid.dim() {
            1 => &[[1, 0]],
            _ => &[[1, 0], [0, 1], [1, 1], [1, -1]],
        };
        let (n0, n1) = (
            self.grid.axis(0).count as isize,
            if self.grid.dim() == 2 { self.grid.axis(1).count as isize } else { 1 },
        );
        for idx in 0..self.values.len() {
            let m = self.grid.multi_index(idx);
            let (i0, i1) = (m[0] as isize, m[1] as isize);
            for d in dirs {
                let (a0, a1) = (i0 - d[0], i1 - d[1]);
                let (b0, b1) = (i0 + d[0], i1 + d[1]);
                if a0 < 0 || a1 < 0 || b0 < 0 || b1 < 0 || a0 >= n0 || a1 >= n1 || b0 >= n0 || b1 >= n1
                {
                    continue;
                }
                let va = self.values[self.grid.index([a0 as usize, a1 as usize])];
                let vb = self.values[self.grid.index([b0 as usize, b1 as usize])];
                if !test(va, self.values[idx], vb) {
                    return Err(Error::InvalidValues(format!(
                        "convexity claim fails at node {idx} along ({}, {})",
                        d[0], d[1]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Coercivity on the grid: boundary-ring values must admit a linear
    /// minorant `a|x| + b` with `a > 0`, anchored at the global minimum.
    fn check_coercivity(&self) -> Result<()> {
        let finite_min = self
            .values
            .iter()
            .copied()
            .filter(|v| ext::is_finite(*v))
            .fold(f64::INFINITY, f64::min);
        if !ext::is_finite(finite_min) {
            return Err(Error::Improper);
        }
        let b = finite_min;
        let mut a = f64::INFINITY;
        for i in 0..self.values.len() {
            if !self.grid.on_outer_ring(i) || !ext::is_finite(self.values[i]) {
                continue;
            }
            let r = crate::norm(self.grid.node(i));
            if r > 1e-12 {
                a = a.min((self.values[i] - b) / r);
            }
        }
        // All-infinite ring means compact support: coercive trivially.
        if ext::is_finite(a) && a <= 0.0 {
            return Err(Error::InvalidValues(format!(
                "coercivity claim fails: best linear slope on the boundary ring is {a:.3e}"
            )));
        }
        Ok(())
    }

    // ---- file format ----------------------------------------------------

    /// Serializes to the grid-function JSON schema
    /// `{dim, axes: [{min, max, count}], values: [...]}` with `+∞` as
    /// `null`, values row-major with axis 0 slowest. Claim flags ride
    /// along as optional fields.
    pub fn to_json(&self) -> serde_json::Value {
        let values: Vec<Option<f64>> = self
            .values
            .iter()
            .map(|&v| if ext::is_finite(v) { Some(v) } else { None })
            .collect();
        serde_json::json!({
            "dim": self.grid.dim(),
            "axes": self.grid.axes(),
            "values": values,
            "claimedConvex": self.claimed_convex,
            "claimedCoercive": self.claimed_coercive,
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let dim = v
            .get("dim")
            .and_then(|d| d.as_u64())
            .ok_or_else(|| Error::Format("grid function JSON: missing dim".into()))?
            as usize;
        let axes: Vec<Axis> = serde_json::from_value(
            v.get("axes").cloned().ok_or_else(|| Error::Format("missing axes".into()))?,
        )?;
        if axes.len() != dim {
            return Err(Error::Format(format!("dim {} does not match {} axes", dim, axes.len())));
        }
        let raw: Vec<Option<f64>> = serde_json::from_value(
            v.get("values").cloned().ok_or_else(|| Error::Format("missing values".into()))?,
        )?;
        let values = raw.into_iter().map(|o| o.unwrap_or(f64::INFINITY)).collect();
        let convex = v.get("claimedConvex").and_then(|b| b.as_bool()).unwrap_or(false);
        let coercive = v.get("claimedCoercive").and_then(|b| b.as_bool()).unwrap_or(false);
        Self::with_claims(Grid::new(axes)?, values, convex, coercive)
    }

    pub fn write_json(&self, path: &std::path::Path) -> Result<()> {
        let mut s = serde_json::to_string_pretty(&self.to_json())?;
        s.push('\n');
        std::fs::write(path, s)?;
        Ok(())
    }

    pub fn read_json(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&serde_json::from_str(&text)?)
    }
}

/// Builds a validated grid; the public face of grid construction.
pub fn make_grid(axes: Vec<Axis>) -> Result<Grid> {
    Grid::new(axes)
}

/// Trapezoidal (1-D) / tensor-trapezoidal (2-D) quadrature of `g`,
/// optionally against a nodewise `weight`. Nodes with zero weight do not
/// contribute and may hold `+∞`; a `+∞` value at a contributing node is
/// an error.
pub fn integrate(g: &ExtendedGridFunction, weight: Option<&[f64]>) -> Result<QuadratureReport> {
    if let Some(w) = weight {
        if w.len() != g.values().len() {
            return Err(Error::InvalidValues(format!(
                "weight has {} entries, expected {}",
                w.len(),
                g.values().len()
            )));
        }
    }
    let grid = g.grid();
    let integrand = |i: usize| -> Result<f64> {
        let w = weight.map_or(1.0, |w| w[i]);
        if w == 0.0 {
            return Ok(0.0);
        }
        let v = g.value(i);
        if !ext::is_finite(v) || !w.is_finite() {
            return Err(Error::NonFiniteIntegrand { index: i });
        }
        Ok(v * w)
    };

    let trap_coeff = |m: [usize; 2]| -> f64 {
        let mut c = 1.0;
        for k in 0..grid.dim() {
            if m[k] == 0 || m[k] == grid.axis(k).count - 1 {
                c *= 0.5;
            }
        }
        c
    };

    let vol = grid.cell_volume();
    let mut fine = 0.0;
    for i in 0..grid.len() {
        fine += trap_coeff(grid.multi_index(i)) * integrand(i)?;
    }
    fine *= vol;

    // One-level Richardson when every axis count is odd (the halved grid
    // is then nested); otherwise fall back to a second-difference bound.
    let halvable = (0..grid.dim()).all(|k| grid.axis(k).count % 2 == 1 && grid.axis(k).count >= 3);
    let est = if halvable {
        let mut coarse = 0.0;
        let counts = [
            (grid.axis(0).count + 1) / 2,
            if grid.dim() == 2 { (grid.axis(1).count + 1) / 2 } else { 1 },
        ];
        for c0 in 0..counts[0] {
            for c1 in 0..counts[1] {
                let m = [c0 * 2, c1 * 2];
                let mut coeff = 1.0;
                for k in 0..grid.dim() {
                    if m[k] == 0 || m[k] == grid.axis(k).count - 1 {
                        coeff *= 0.5;
                    }
                }
                coarse += coeff * integrand(grid.index(m))?;
            }
        }
        coarse *= vol * (1 << grid.dim()) as f64;
        (fine - coarse).abs() / 3.0
    } else {
        second_difference_bound(g, weight)
    };

    let cells = (0..grid.dim()).map(|k| grid.axis(k).count - 1).product();
    Ok(QuadratureReport { value: fine, estimated_error: est, cell_count: cells })
}

fn second_difference_bound(g: &ExtendedGridFunction, weight: Option<&[f64]>) -> f64 {
    let grid = g.grid();
    let val = |i: usize| {
        let w = weight.map_or(1.0, |w| w[i]);
        if w == 0.0 {
            0.0
        } else {
            g.value(i) * w
        }
    };
    let mut total = 0.0;
    for k in 0..grid.dim() {
        let h = grid.axis(k).spacing();
        let mut sum = 0.0;
        for i in 0..grid.len() {
            let m = grid.multi_index(i);
            if m[k] == 0 || m[k] == grid.axis(k).count - 1 {
                continue;
            }
            let mut lo = m;
            let mut hi = m;
            lo[k] -= 1;
            hi[k] += 1;
            let d2 = val(grid.index(lo)) - 2.0 * val(i) + val(grid.index(hi));
            if d2.is_finite() {
                sum += d2.abs();
            }
        }
        total += sum * h * grid.cell_volume() / 12.0;
    }
    total
}

/// Outcome of a finite-difference gradient query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeGradient {
    Differentiable([f64; 2]),
    Nondifferentiable,
}

/// Default kink tolerance: forward/backward slope mismatch above `10·h`
/// flags a nondifferentiable node. The bound vanishes under refinement
/// for C² functions.
pub fn default_kink_tol(grid: &Grid) -> f64 {
    10.0 * (0..grid.dim()).map(|k| grid.axis(k).spacing()).fold(f64::MIN, f64::max)
}

/// Central-difference gradient at a node interior to the finite domain.
/// Slope mismatch beyond `kink_tol` (default [`default_kink_tol`])
/// reports [`NodeGradient::Nondifferentiable`]; a node whose stencil
/// leaves the finite domain is an error.
pub fn finite_gradient(
    g: &ExtendedGridFunction,
    node: usize,
    kink_tol: Option<f64>,
) -> Result<NodeGradient> {
    let grid = g.grid();
    let tol = kink_tol.unwrap_or_else(|| default_kink_tol(grid));
    let m = grid.multi_index(node);
    if !ext::is_finite(g.value(node)) {
        return Err(Error::BoundaryNode { index: node });
    }
    let mut grad = [0.0f64; 2];
    for k in 0..grid.dim() {
        if m[k] == 0 || m[k] == grid.axis(k).count - 1 {
            return Err(Error::BoundaryNode { index: node });
        }
        let mut lo = m;
        let mut hi = m;
        lo[k] -= 1;
        hi[k] += 1;
        let (vl, vc, vh) = (g.value(grid.index(lo)), g.value(node), g.value(grid.index(hi)));
        if !ext::is_finite(vl) || !ext::is_finite(vh) {
            return Err(Error::BoundaryNode { index: node });
        }
        let h = grid.axis(k).spacing();
        let fwd = (vh - vc) / h;
        let bwd = (vc - vl) / h;
        if (fwd - bwd).abs() > tol {
            return Ok(NodeGradient::Nondifferentiable);
        }
        grad[k] = 0.5 * (fwd + bwd);
    }
    Ok(NodeGradient::Differentiable(grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn make_grid_spacing() {
        let g = Grid::line(-5.0, 5.0, 11).unwrap();
        assert_eq!(g.axis(0).spacing(), 1.0);
    }

    #[test]
    fn make_grid_2d_nodes() {
        let g = Grid::rect((-1.0, 1.0, 3), (-1.0, 1.0, 3)).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g.node(0), [-1.0, -1.0]);
        assert_eq!(g.node(4), [0.0, 0.0]);
        assert_eq!(g.node(8), [1.0, 1.0]);
        // row-major, axis 0 slowest
        assert_eq!(g.node(1), [-1.0, 0.0]);
    }

    #[test]
    fn make_grid_rejects_degenerate() {
        assert!(Grid::line(2.0, 2.0, 5).is_err());
        assert!(Grid::line(0.0, 1.0, 1).is_err());
        assert!(Grid::new(vec![]).is_err());
    }

    #[test]
    fn integrate_constant_exact() {
        let g = Grid::line(0.0, 1.0, 101).unwrap();
        let f = ExtendedGridFunction::from_fn(g, |_| 1.0).unwrap();
        let r = integrate(&f, None).unwrap();
        assert!((r.value - 1.0).abs() < 1e-14);
        assert_eq!(r.cell_count, 100);
    }

    #[test]
    fn integrate_quadratic() {
        let g = Grid::line(-1.0, 1.0, 201).unwrap();
        let f = ExtendedGridFunction::from_fn(g, |p| p[0] * p[0]).unwrap();
        let r = integrate(&f, None).unwrap();
        assert!((r.value - 2.0 / 3.0).abs() < 1e-4);
        assert!(r.estimated_error >= 0.0);
        assert!((r.value - 2.0 / 3.0).abs() <= 3.0 * r.estimated_error + 1e-12);
    }

    #[test]
    fn integrate_decaying_tail() {
        // (1+|x|/2)^{-2} on [-60, 60]; antiderivative -4/(2+|x|) gives
        // 4 - 4/31 on this window.
        let g = Grid::line(-60.0, 60.0, 12001).unwrap();
        let f = ExtendedGridFunction::from_fn(g, |p| (1.0 + p[0].abs() / 2.0).powi(-2)).unwrap();
        let r = integrate(&f, None).unwrap();
        let exact = 4.0 - 4.0 / 31.0;
        assert!((r.value - exact).abs() < 5e-3, "got {}, want {}", r.value, exact);
    }

    #[test]
    fn integrate_rejects_contributing_infinity() {
        let g = Grid::line(0.0, 1.0, 3).unwrap();
        let f = ExtendedGridFunction::new(g.clone(), vec![f64::INFINITY, 1.0, 1.0]).unwrap();
        assert!(matches!(integrate(&f, None), Err(Error::NonFiniteIntegrand { index: 0 })));
        // zero weight masks the infinity
        let r = integrate(&f, Some(&[0.0, 1.0, 1.0])).unwrap();
        assert!((r.value - 0.75).abs() < 1e-14);
    }

    #[test]
    fn integrate_2d_constant() {
        let g = Grid::rect((0.0, 2.0, 21), (0.0, 3.0, 31)).unwrap();
        let f = ExtendedGridFunction::from_fn(g, |_| 1.0).unwrap();
        let r = integrate(&f, None).unwrap();
        assert!((r.value - 6.0).abs() < 1e-12);
    }

    #[test]
    fn gradient_quadratic() {
        let g = Grid::line(-5.0, 5.0, 101).unwrap();
        let h = g.axis(0).spacing();
        let f = ExtendedGridFunction::from_fn(g.clone(), |p| 0.5 * p[0] * p[0]).unwrap();
        let node = (0..g.len()).find(|&i| (g.node(i)[0] - 2.0).abs() < 1e-9).unwrap();
        match finite_gradient(&f, node, None).unwrap() {
            NodeGradient::Differentiable(gr) => assert!((gr[0] - 2.0).abs() <= h * h + 1e-12),
            _ => panic!("expected differentiable"),
        }
    }

    #[test]
    fn gradient_kink_and_linear() {
        let g = Grid::line(-1.0, 1.0, 21).unwrap();
        let f = ExtendedGridFunction::from_fn(g.clone(), |p| p[0].abs()).unwrap();
        let zero = (0..g.len()).find(|&i| g.node(i)[0].abs() < 1e-12).unwrap();
        assert_eq!(finite_gradient(&f, zero, None).unwrap(), NodeGradient::Nondifferentiable);

        let g2 = Grid::rect((-1.0, 1.0, 11), (-1.0, 1.0, 11)).unwrap();
        let f2 = ExtendedGridFunction::from_fn(g2.clone(), |p| p[0] + p[1]).unwrap();
        let mid = g2.index([5, 5]);
        match finite_gradient(&f2, mid, None).unwrap() {
            NodeGradient::Differentiable(gr) => {
                assert!((gr[0] - 1.0).abs() < 1e-12 && (gr[1] - 1.0).abs() < 1e-12)
            }
            _ => panic!("expected differentiable"),
        }
    }

    #[test]
    fn gradient_boundary_errors() {
        let g = Grid::line(-1.0, 1.0, 5).unwrap();
        let f = ExtendedGridFunction::from_fn(g, |p| p[0] * p[0]).unwrap();
        assert!(matches!(finite_gradient(&f, 0, None), Err(Error::BoundaryNode { .. })));
    }

    #[test]
    fn rejects_nan_and_gaps() {
        let g = Grid::line(0.0, 1.0, 3).unwrap();
        assert!(ExtendedGridFunction::new(g.clone(), vec![0.0, f64::NAN, 0.0]).is_err());
        assert!(ExtendedGridFunction::new(g.clone(), vec![0.0, f64::NEG_INFINITY, 0.0]).is_err());
        // finite, infinite, finite: domain gap
        assert!(ExtendedGridFunction::new(g, vec![0.0, f64::INFINITY, 0.0]).is_err());
    }

    #[test]
    fn convexity_claim_checked() {
        let g = Grid::line(-2.0, 2.0, 5).unwrap();
        let vals: Vec<f64> = (0..5).map(|i| { let x = -2.0 + i as f64; x * x }).collect();
        assert!(ExtendedGridFunction::with_claims(g.clone(), vals, true, false).is_ok());
        let bad: Vec<f64> = (0..5).map(|i| { let x: f64 = -2.0 + i as f64; -(x * x) }).collect();
        assert!(ExtendedGridFunction::with_claims(g, bad, true, false).is_err());
    }

    #[test]
    fn coercive_claim_checked() {
        let g = Grid::line(-5.0, 5.0, 11).unwrap();
        let ok = ExtendedGridFunction::from_fn_with_claims(g.clone(), |p| p[0].abs(), true, true);
        assert!(ok.is_ok());
        let flat = ExtendedGridFunction::from_fn_with_claims(g, |_| 1.0, true, true);
        assert!(flat.is_err());
    }

    #[test]
    fn json_round_trip() {
        let g = Grid::line(-1.0, 1.0, 5).unwrap();
        let f = ExtendedGridFunction::from_fn(g, |p| {
            if p[0].abs() <= 0.5 { p[0] * 0.12345678901234567 } else { f64::INFINITY }
        })
        .unwrap();
        let back = ExtendedGridFunction::from_json(&f.to_json()).unwrap();
        assert_eq!(f.values(), back.values());
        assert_eq!(f.grid(), back.grid());
    }

    #[test]
    fn interpolation_matches_linear() {
        let g = Grid::rect((0.0, 1.0, 11), (0.0, 1.0, 11)).unwrap();
        let f = ExtendedGridFunction::from_fn(g, |p| 2.0 * p[0] - 3.0 * p[1] + 1.0).unwrap();
        assert!((f.interpolate([0.337, 0.551]) - (2.0 * 0.337 - 3.0 * 0.551 + 1.0)).abs() < 1e-12);
        assert_eq!(f.interpolate([2.0, 0.0]), f64::INFINITY);
    }
}
