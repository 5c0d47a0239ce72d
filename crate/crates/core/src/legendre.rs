//! Discrete Legendre–Fenchel transform on grid functions.
//!
//! The conjugate of an [`ExtendedGridFunction`] is the exact discrete sup
//! `φ*(y) = max_i ⟨x_i, y⟩ − φ(x_i)` over the finite nodes, computed with
//! the factorized per-axis sweep (one-dimensional conjugates applied per
//! axis). Biconjugation goes through the exact piecewise-linear
//! representation of the transform — the lower hull of the graph — so a
//! convex grid function is reproduced to rounding error.

use crate::extgrid::{ext, finite_gradient, ExtendedGridFunction, Grid, NodeGradient};
use crate::hull::{
    convex_hull_2d, eval_facets, eval_hull_1d, inside_polygon, lower_facets_3d, lower_hull_1d,
    LowerFacet,
};
use crate::{dot, Error, Result};

/// Conjugate values on the dual grid plus, per dual node, one argmax
/// primal node — a subgradient selection for `∇φ*`.
#[derive(Debug, Clone)]
pub struct ConjugateResult {
    pub function: ExtendedGridFunction,
    pub argmax: Vec<usize>,
}

/// Observed per-axis slope range of the finite part of `phi`, from
/// consecutive-node differences.
pub fn observed_slope_range(phi: &ExtendedGridFunction) -> Vec<(f64, f64)> {
    let grid = phi.grid();
    let mut ranges = Vec::new();
    for k in 0..grid.dim() {
        let h = grid.axis(k).spacing();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..grid.len() {
            let m = grid.multi_index(i);
            if m[k] + 1 >= grid.axis(k).count {
                continue;
            }
            let mut up = m;
            up[k] += 1;
            let (a, b) = (phi.value(i), phi.value(grid.index(up)));
            if ext::is_finite(a) && ext::is_finite(b) {
                let s = (b - a) / h;
                lo = lo.min(s);
                hi = hi.max(s);
            }
        }
        if lo > hi {
            // single finite node along this axis: any slope will do
            lo = -1.0;
            hi = 1.0;
        }
        ranges.push((lo, hi));
    }
    ranges
}

/// Default dual grid: the observed slope range per axis, padded by 10%,
/// with the primal node counts. The conjugate is affine outside the slope
/// range, so nothing is lost there.
pub fn default_dual_grid(phi: &ExtendedGridFunction, counts: Option<Vec<usize>>) -> Result<Grid> {
    let grid = phi.grid();
    let ranges = observed_slope_range(phi);
    let mut axes = Vec::new();
    for (k, &(lo, hi)) in ranges.iter().enumerate() {
        let pad = 0.1 * (hi - lo).max(1.0);
        let count = counts.as_ref().map_or(grid.axis(k).count, |c| c[k]);
        axes.push(crate::extgrid::Axis::new(lo - pad, hi + pad, count)?);
    }
    Grid::new(axes)
}

/// One-dimensional conjugate sweep: for ascending dual values `ys`,
/// returns `max_i (xs[i]·y − vs[i])` and the smallest argmax position.
/// Linear in `xs.len() + ys.len()` after the hull pass.
fn sweep_1d(xs: &[f64], vs: &[f64], ys: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let hull = lower_hull_1d(xs, vs, true);
    let mut out = Vec::with_capacity(ys.len());
    let mut arg = Vec::with_capacity(ys.len());
    let mut j = 0usize;
    for &y in ys {
        while j + 1 < hull.len() {
            let cur = xs[hull[j]] * y - vs[hull[j]];
            let nxt = xs[hull[j + 1]] * y - vs[hull[j + 1]];
            if nxt > cur {
                j += 1;
            } else {
                break;
            }
        }
        out.push(xs[hull[j]] * y - vs[hull[j]]);
        arg.push(hull[j]);
    }
    (out, arg)
}

/// Legendre transform of `phi` onto `dual`: exact discrete sup over the
/// grid nodes, argmax ties resolved to the smallest node index. The
/// output is finite everywhere and claimed convex.
pub fn conjugate(phi: &ExtendedGridFunction, dual: &Grid) -> Result<ConjugateResult> {
    if !phi.is_proper() {
        return Err(Error::Improper);
    }
    let grid = phi.grid();
    if dual.dim() != grid.dim() {
        return Err(Error::InvalidGrid(format!(
            "dual grid dim {} != primal dim {}",
            dual.dim(),
            grid.dim()
        )));
    }
    match grid.dim() {
        1 => {
            let finite: Vec<usize> = phi.finite_nodes();
            let xs: Vec<f64> = finite.iter().map(|&i| grid.node(i)[0]).collect();
            let vs: Vec<f64> = finite.iter().map(|&i| phi.value(i)).collect();
            let ys: Vec<f64> = (0..dual.len()).map(|j| dual.node(j)[0]).collect();
            let (vals, arg) = sweep_1d(&xs, &vs, &ys);
            let function = ExtendedGridFunction::with_claims(dual.clone(), vals, true, false)?;
            Ok(ConjugateResult { function, argmax: arg.iter().map(|&p| finite[p]).collect() })
        }
        _ => {
            let (n0, n1) = (grid.axis(0).count, grid.axis(1).count);
            let (m0, m1) = (dual.axis(0).count, dual.axis(1).count);
            let y1s: Vec<f64> = (0..m1).map(|j| dual.axis(1).node(j)).collect();
            // Pass 1: per row (fixed x0), conjugate along axis 1.
            // g[i0][j1] = max_{x1} (x1·y1 − φ), −∞ on rows without domain.
            let mut g = vec![f64::NEG_INFINITY; n0 * m1];
            let mut a1 = vec![usize::MAX; n0 * m1];
            for i0 in 0..n0 {
                let mut xs = Vec::new();
                let mut vs = Vec::new();
                let mut ids = Vec::new();
                for i1 in 0..n1 {
                    let v = phi.value(grid.index([i0, i1]));
                    if ext::is_finite(v) {
                        xs.push(grid.axis(1).node(i1));
                        vs.push(v);
                        ids.push(i1);
                    }
                }
                if xs.is_empty() {
                    continue;
                }
                let (vals, arg) = sweep_1d(&xs, &vs, &y1s);
                for j1 in 0..m1 {
                    g[i0 * m1 + j1] = vals[j1];
                    a1[i0 * m1 + j1] = ids[arg[j1]];
                }
            }
            // Pass 2: per dual column (fixed y1), conjugate −g along axis 0.
            let y0s: Vec<f64> = (0..m0).map(|j| dual.axis(0).node(j)).collect();
            let mut values = vec![0.0f64; m0 * m1];
            let mut argmax = vec![0usize; m0 * m1];
            for j1 in 0..m1 {
                let mut xs = Vec::new();
                let mut vs = Vec::new();
                let mut ids = Vec::new();
                for i0 in 0..n0 {
                    let gv = g[i0 * m1 + j1];
                    if gv > f64::NEG_INFINITY {
                        xs.push(grid.axis(0).node(i0));
                        vs.push(-gv);
                        ids.push(i0);
                    }
                }
                let (vals, arg) = sweep_1d(&xs, &vs, &y0s);
                for j0 in 0..m0 {
                    values[j0 * m1 + j1] = vals[j0];
                    let i0 = ids[arg[j0]];
                    argmax[j0 * m1 + j1] = grid.index([i0, a1[i0 * m1 + j1]]);
                }
            }
            let function = ExtendedGridFunction::with_claims(dual.clone(), values, true, false)?;
            Ok(ConjugateResult { function, argmax })
        }
    }
}

// ---------------------------------------------------------------------------
// Exact piecewise-linear representation of the transform
// ---------------------------------------------------------------------------

/// Exact hull representation of a grid function's convex envelope, i.e.
/// of its double Legendre transform. Evaluating the conjugate or the
/// envelope through this struct involves no dual-grid discretization.
pub enum Envelope {
    /// One finite node only.
    Point { p: [f64; 2], v: f64 },
    /// 1-D data, or 2-D data whose finite nodes lie on one grid line.
    Interval {
        dir: [f64; 2],
        origin: [f64; 2],
        ts: Vec<f64>,
        vs: Vec<f64>,
        pts: Vec<[f64; 2]>,
        hull: Vec<usize>,
    },
    /// Full-rank 2-D data.
    Planar { pts: Vec<[f64; 2]>, vs: Vec<f64>, facets: Vec<LowerFacet>, domain: Vec<[f64; 2]> },
}

impl Envelope {
    pub fn build(phi: &ExtendedGridFunction) -> Result<Envelope> {
        let grid = phi.grid();
        let finite = phi.finite_nodes();
        if finite.is_empty() {
            return Err(Error::Improper);
        }
        let pts: Vec<[f64; 2]> = finite.iter().map(|&i| grid.node(i)).collect();
        let vs: Vec<f64> = finite.iter().map(|&i| phi.value(i)).collect();
        if pts.len() == 1 {
            return Ok(Envelope::Point { p: pts[0], v: vs[0] });
        }
        if grid.dim() == 1 {
            let ts: Vec<f64> = pts.iter().map(|p| p[0]).collect();
            let hull = lower_hull_1d(&ts, &vs, false);
            return Ok(Envelope::Interval { dir: [1.0, 0.0], origin: [0.0, 0.0], ts, vs, pts, hull });
        }
        // 2-D: detect rank-1 supports (all finite nodes on one line)
        let spread = |k: usize| -> f64 {
            let lo = pts.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min);
            let hi = pts.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max);
            hi - lo
        };
        let (s0, s1) = (spread(0), spread(1));
        let hull_xy = convex_hull_2d(&pts);
        if hull_xy.len() <= 2 || s0 == 0.0 || s1 == 0.0 {
            let origin = pts[0];
            let dirv = if hull_xy.len() == 2 {
                let a = pts[hull_xy[0]];
                let b = pts[hull_xy[1]];
                let n = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
                [(b[0] - a[0]) / n, (b[1] - a[1]) / n]
            } else if s0 >= s1 {
                [1.0, 0.0]
            } else {
                [0.0, 1.0]
            };
            let t_of = |p: [f64; 2]| (p[0] - origin[0]) * dirv[0] + (p[1] - origin[1]) * dirv[1];
            let mut order: Vec<usize> = (0..pts.len()).collect();
            order.sort_by(|&a, &b| t_of(pts[a]).total_cmp(&t_of(pts[b])));
            let ts: Vec<f64> = order.iter().map(|&i| t_of(pts[i])).collect();
            let vs2: Vec<f64> = order.iter().map(|&i| vs[i]).collect();
            let pp: Vec<[f64; 2]> = order.iter().map(|&i| pts[i]).collect();
            let hull = lower_hull_1d(&ts, &vs2, false);
            return Ok(Envelope::Interval { dir: dirv, origin, ts, vs: vs2, pts: pp, hull });
        }
        let lifted: Vec<[f64; 3]> = pts.iter().zip(&vs).map(|(p, &v)| [p[0], p[1], v]).collect();
        let facets = lower_facets_3d(&lifted)?;
        let domain: Vec<[f64; 2]> = hull_xy.iter().map(|&i| pts[i]).collect();
        Ok(Envelope::Planar { pts, vs, facets, domain })
    }

    /// Convex envelope (double transform) at `x`; `+∞` outside the
    /// finite-domain hull.
    pub fn eval(&self, x: [f64; 2]) -> f64 {
        match self {
            Envelope::Point { p, v } => {
                let tol = 1e-9 * (1.0 + p[0].abs() + p[1].abs());
                if (x[0] - p[0]).abs() <= tol && (x[1] - p[1]).abs() <= tol {
                    *v
                } else {
                    f64::INFINITY
                }
            }
            Envelope::Interval { dir, origin, ts, vs, hull, .. } => {
                let t = (x[0] - origin[0]) * dir[0] + (x[1] - origin[1]) * dir[1];
                let proj = [origin[0] + t * dir[0], origin[1] + t * dir[1]];
                let span = ts.last().unwrap() - ts[0];
                let tol = 1e-9 * (1.0 + span.abs());
                if (x[0] - proj[0]).abs() > tol || (x[1] - proj[1]).abs() > tol {
                    return f64::INFINITY;
                }
                eval_hull_1d(ts, vs, hull, t)
            }
            Envelope::Planar { facets, domain, pts, .. } => {
                let scale = pts.iter().map(|p| p[0].abs().max(p[1].abs())).fold(1.0, f64::max);
                if !inside_polygon(domain, x, 1e-9 * scale) {
                    return f64::INFINITY;
                }
                eval_facets(facets, x)
            }
        }
    }

    /// Exact conjugate value `max_i ⟨p_i, y⟩ − v_i`.
    pub fn conj(&self, y: [f64; 2]) -> f64 {
        match self {
            Envelope::Point { p, v } => dot(*p, y) - v,
            Envelope::Interval { pts, vs, hull, .. } => {
                hull.iter().map(|&i| dot(pts[i], y) - vs[i]).fold(f64::NEG_INFINITY, f64::max)
            }
            Envelope::Planar { pts, vs, facets, .. } => {
                // hull vertices suffice for the max
                let mut best = f64::NEG_INFINITY;
                let mut seen = std::collections::HashSet::new();
                for f in facets {
                    for &v in &f.verts {
                        if seen.insert(v) {
                            best = best.max(dot(pts[v], y) - vs[v]);
                        }
                    }
                }
                best
            }
        }
    }

    /// Dual points carrying the transform's subdifferential structure:
    /// breakpoint slopes in 1-D, facet gradients in 2-D. Conjugating back
    /// over these points reproduces the envelope exactly at every node.
    pub fn dual_points(&self) -> Vec<[f64; 2]> {
        match self {
            Envelope::Point { .. } => vec![[0.0, 0.0]],
            Envelope::Interval { dir, ts, vs, hull, .. } => {
                let mut out = Vec::new();
                if hull.len() == 1 {
                    out.push([0.0, 0.0]);
                }
                for w in hull.windows(2) {
                    let s = (vs[w[1]] - vs[w[0]]) / (ts[w[1]] - ts[w[0]]);
                    out.push([s * dir[0], s * dir[1]]);
                }
                out
            }
            Envelope::Planar { facets, .. } => facets.iter().map(|f| f.grad).collect(),
        }
    }

    /// Support points of the finite domain (hull polygon, segment
    /// endpoints, or the single point).
    pub fn support_points(&self) -> Vec<[f64; 2]> {
        match self {
            Envelope::Point { p, .. } => vec![*p],
            Envelope::Interval { pts, .. } => {
                vec![pts[0], *pts.last().unwrap()]
            }
            Envelope::Planar { domain, .. } => domain.clone(),
        }
    }
}

/// Biconjugate `(φ*)*` sampled on `primal`, evaluated exactly through the
/// hull representation of the transform. Equals `φ` at the nodes whenever
/// `φ` is convex grid data; in general it is the convex envelope.
pub fn biconjugate(phi: &ExtendedGridFunction, primal: &Grid) -> Result<ExtendedGridFunction> {
    let env = Envelope::build(phi)?;
    let values: Vec<f64> = (0..primal.len()).map(|i| env.eval(primal.node(i))).collect();
    ExtendedGridFunction::with_claims(primal.clone(), values, true, phi.claimed_coercive())
}

/// Residual of the Fenchel–Young identity
/// `φ*(∇φ(x)) + φ(x) = ⟨x, ∇φ(x)⟩` at a differentiability node, with
/// `φ*` looked up by multilinear interpolation.
pub fn fenchel_young_residual(
    phi: &ExtendedGridFunction,
    phi_star: &ExtendedGridFunction,
    node: usize,
) -> Result<f64> {
    let g = match finite_gradient(phi, node, None)? {
        NodeGradient::Differentiable(g) => g,
        NodeGradient::Nondifferentiable => return Err(Error::Nondifferentiable { index: node }),
    };
    let x = phi.grid().node(node);
    let star = phi_star.interpolate(g);
    if !ext::is_finite(star) {
        return Err(Error::NonFiniteIntegrand { index: node });
    }
    Ok((star + phi.value(node) - dot(x, g)).abs())
}

/// Affine-minorant test for `y ∈ ∂φ(x₀)`: checks
/// `φ(x) ≥ φ(x₀) + ⟨y, x − x₀⟩` at every grid node within
/// `tol·(1 + |φ(x)|)`.
pub fn subgradient_contains(
    phi: &ExtendedGridFunction,
    x0_node: usize,
    y: [f64; 2],
    tol: f64,
) -> Result<bool> {
    let v0 = phi.value(x0_node);
    if !ext::is_finite(v0) {
        return Err(Error::BoundaryNode { index: x0_node });
    }
    let grid = phi.grid();
    let x0 = grid.node(x0_node);
    for i in 0..grid.len() {
        let v = phi.value(i);
        if !ext::is_finite(v) {
            continue;
        }
        let x = grid.node(i);
        let minorant = v0 + y[0] * (x[0] - x0[0]) + y[1] * (x[1] - x0[1]);
        if v < minorant - tol * (1.0 + v.abs()) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `(φ* + t·ψ*)*` sampled on `primal`: the base of the α-combination.
///
/// The dual evaluation set is the union of both transforms' breakpoint
/// structures (exact in 1-D; facet gradients in 2-D) plus, in 2-D, a
/// uniform filler of `filler²` points covering the padded joint gradient
/// range. Outside the Minkowski sum `K_φ ⊕ t·K_ψ` the result is `+∞`,
/// decided by support-function tests over the exact edge normals.
pub fn combined_conjugate(
    phi: &ExtendedGridFunction,
    psi: &ExtendedGridFunction,
    t: f64,
    primal: &Grid,
    filler: usize,
) -> Result<ExtendedGridFunction> {
    if t < 0.0 || !t.is_finite() {
        return Err(Error::InvalidValues(format!("combination weight t = {t} must be >= 0")));
    }
    let env_f = Envelope::build(phi)?;
    let env_g = Envelope::build(psi)?;

    // Dual evaluation set.
    let mut duals: Vec<[f64; 2]> = env_f.dual_points();
    duals.extend(env_g.dual_points());
    if primal.dim() == 2 && filler > 1 {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for d in &duals {
            for k in 0..2 {
                lo[k] = lo[k].min(d[k]);
                hi[k] = hi[k].max(d[k]);
            }
        }
        for k in 0..2 {
            let pad = 0.1 * (hi[k] - lo[k]).max(1.0);
            lo[k] -= pad;
            hi[k] += pad;
        }
        for a in 0..filler {
            for b in 0..filler {
                duals.push([
                    lo[0] + (hi[0] - lo[0]) * a as f64 / (filler - 1) as f64,
                    lo[1] + (hi[1] - lo[1]) * b as f64 / (filler - 1) as f64,
                ]);
            }
        }
    }
    let m_vals: Vec<f64> = duals.iter().map(|&y| env_f.conj(y) + t * env_g.conj(y)).collect();

    // Domain membership: x ∈ K_φ ⊕ t·K_ψ iff ⟨x, u⟩ ≤ h_φ(u) + t·h_ψ(u)
    // for u among the edge normals of both supports.
    let sup_f = env_f.support_points();
    let sup_g = env_g.support_points();
    let mut normals: Vec<[f64; 2]> = Vec::new();
    if primal.dim() == 1 {
        normals.push([1.0, 0.0]);
        normals.push([-1.0, 0.0]);
    } else {
        for poly in [&sup_f, &sup_g] {
            match poly.len() {
                0 | 1 => {}
                2 => {
                    let d = [poly[1][0] - poly[0][0], poly[1][1] - poly[0][1]];
                    let n = (d[0] * d[0] + d[1] * d[1]).sqrt();
                    if n > 0.0 {
                        normals.push([d[1] / n, -d[0] / n]);
                        normals.push([-d[1] / n, d[0] / n]);
                        normals.push([d[0] / n, d[1] / n]);
                        normals.push([-d[0] / n, -d[1] / n]);
                    }
                }
                _ => {
                    for i in 0..poly.len() {
                        let a = poly[i];
                        let b = poly[(i + 1) % poly.len()];
                        let d = [b[0] - a[0], b[1] - a[1]];
                        let n = (d[0] * d[0] + d[1] * d[1]).sqrt();
                        if n > 0.0 {
                            normals.push([d[1] / n, -d[0] / n]);
                        }
                    }
                }
            }
        }
        if normals.is_empty() {
            normals = vec![[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]];
        }
    }
    let h_of = |pts: &[[f64; 2]], u: [f64; 2]| -> f64 {
        pts.iter().map(|&p| dot(p, u)).fold(f64::NEG_INFINITY, f64::max)
    };
    let scale =
        sup_f.iter().chain(sup_g.iter()).map(|p| p[0].abs().max(p[1].abs())).fold(1.0, f64::max);
    let inside = |x: [f64; 2]| -> bool {
        normals.iter().all(|&u| dot(x, u) <= h_of(&sup_f, u) + t * h_of(&sup_g, u) + 1e-9 * scale)
    };

    let values: Vec<f64> = (0..primal.len())
        .map(|i| {
            let x = primal.node(i);
            if !inside(x) {
                return f64::INFINITY;
            }
            duals
                .iter()
                .zip(&m_vals)
                .map(|(&y, &m)| dot(x, y) - m)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    ExtendedGridFunction::with_claims(primal.clone(), values, true, false)
}
