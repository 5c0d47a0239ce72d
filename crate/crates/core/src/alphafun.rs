//! The α-concave calculus: generator function, α-combinations, total
//! mass, first variations, and the two surface-area measures.
//!
//! An α-concave function with −1/n < α < 0 is `f = Ψ_α(φ)` for a convex
//! base `φ > 1/α`, with generator `Ψ_α(t) = (1 − αt)^{1/α}` and
//! `Ψ_α(+∞) = 0`. Bases live on grids as [`ExtendedGridFunction`]s;
//! densities and their powers are derived nodewise.

use serde::{Deserialize, Serialize};

use crate::extgrid::{ext, integrate, ExtendedGridFunction, Grid, QuadratureReport};
use crate::hull::convex_hull_2d;
use crate::legendre::{combined_conjugate, conjugate};
use crate::{dot, norm, Error, Result};

/// Admissible α for dimension `dim`: strictly inside (−1/dim, 0).
pub fn alpha_admissible(alpha: f64, dim: usize) -> bool {
    alpha.is_finite() && alpha < 0.0 && alpha > -1.0 / dim as f64
}

/// Generator `Ψ_α(t) = (1 − αt)^{1/α}` for α < 0, extended by
/// `Ψ_α(+∞) = 0`. Arguments at or below `1/α` are outside the domain.
pub fn psi_alpha(t: f64, alpha: f64) -> Result<f64> {
    if !(alpha < 0.0 && alpha.is_finite()) {
        return Err(Error::AlphaOutOfRange { alpha, dim: 1 });
    }
    if t == f64::INFINITY {
        return Ok(0.0);
    }
    if t <= 1.0 / alpha {
        return Err(Error::BaseBelowBound { value: t, bound: 1.0 / alpha });
    }
    Ok((1.0 - alpha * t).powf(1.0 / alpha))
}

// ---------------------------------------------------------------------------
// Discrete measures
// ---------------------------------------------------------------------------

/// Weighted point cloud in ℝⁿ, or on the unit sphere when `spherical`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    dim: usize,
    points: Vec<[f64; 2]>,
    weights: Vec<f64>,
    total: f64,
    spherical: bool,
}

impl DiscreteMeasure {
    pub fn new(
        dim: usize,
        points: Vec<[f64; 2]>,
        weights: Vec<f64>,
        spherical: bool,
    ) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidGrid(format!("measure dim must be 1 or 2, got {dim}")));
        }
        if points.len() != weights.len() {
            return Err(Error::InvalidValues(format!(
                "{} points vs {} weights",
                points.len(),
                weights.len()
            )));
        }
        for (i, &w) in weights.iter().enumerate() {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::InvalidValues(format!("weight {i} is {w}")));
            }
        }
        for (i, p) in points.iter().enumerate() {
            if !p[0].is_finite() || !p[1].is_finite() {
                return Err(Error::InvalidValues(format!("point {i} has non-finite coordinate")));
            }
            if dim == 1 && p[1] != 0.0 {
                return Err(Error::InvalidValues(format!("1-D point {i} has nonzero y")));
            }
            if spherical && (norm(*p) - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidValues(format!(
                    "spherical point {i} has norm {}",
                    norm(*p)
                )));
            }
        }
        let total = weights.iter().sum();
        Ok(DiscreteMeasure { dim, points, weights, total, spherical })
    }

    pub fn dirac(dim: usize, p: [f64; 2]) -> Result<Self> {
        DiscreteMeasure::new(dim, vec![p], vec![1.0], false)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    #[inline]
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.total
    }

    #[inline]
    pub fn spherical(&self) -> bool {
        self.spherical
    }

    pub fn barycenter(&self) -> [f64; 2] {
        let mut b = [0.0; 2];
        if self.total <= 0.0 {
            return b;
        }
        for (p, &w) in self.points.iter().zip(&self.weights) {
            b[0] += w * p[0];
            b[1] += w * p[1];
        }
        [b[0] / self.total, b[1] / self.total]
    }

    pub fn first_moment(&self) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, &w)| w * norm(*p)).sum()
    }

    pub fn diameter(&self) -> f64 {
        let mut d = 0.0f64;
        for i in 0..self.points.len() {
            for j in (i + 1)..self.points.len() {
                let p = self.points[i];
                let q = self.points[j];
                d = d.max(((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt());
            }
        }
        d
    }

    pub fn translated(&self, z: [f64; 2]) -> Self {
        let points = self.points.iter().map(|p| [p[0] + z[0], p[1] + z[1]]).collect();
        DiscreteMeasure {
            dim: self.dim,
            points,
            weights: self.weights.clone(),
            total: self.total,
            spherical: self.spherical,
        }
    }

    pub fn normalized(&self) -> Result<Self> {
        if self.total <= 0.0 {
            return Err(Error::EmptySupport);
        }
        let weights = self.weights.iter().map(|w| w / self.total).collect();
        DiscreteMeasure::new(self.dim, self.points.clone(), weights, self.spherical)
    }

    /// Drops zero-weight atoms and merges exactly coincident points.
    pub fn compacted(&self) -> Self {
        let mut idx: Vec<usize> = (0..self.points.len()).filter(|&i| self.weights[i] > 0.0).collect();
        idx.sort_by(|&a, &b| {
            self.points[a][0]
                .total_cmp(&self.points[b][0])
                .then(self.points[a][1].total_cmp(&self.points[b][1]))
        });
        let mut points: Vec<[f64; 2]> = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        for i in idx {
            if let Some(last) = points.last() {
                if *last == self.points[i] {
                    *weights.last_mut().unwrap() += self.weights[i];
                    continue;
                }
            }
            points.push(self.points[i]);
            weights.push(self.weights[i]);
        }
        let total = weights.iter().sum();
        DiscreteMeasure { dim: self.dim, points, weights, total, spherical: self.spherical }
    }

    // ---- file format: CSV with header x1[,x2],weight -------------------

    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        if self.dim == 1 {
            w.write_record(["x1", "weight"])?;
            for (p, &wt) in self.points.iter().zip(&self.weights) {
                w.write_record(&[format!("{}", p[0]), format!("{wt}")])?;
            }
        } else {
            w.write_record(["x1", "x2", "weight"])?;
            for (p, &wt) in self.points.iter().zip(&self.weights) {
                w.write_record(&[format!("{}", p[0]), format!("{}", p[1]), format!("{wt}")])?;
            }
        }
        w.flush()?;
        // Spherical measures carry a JSON sidecar with unit=true.
        if self.spherical {
            let side = sidecar_path(path);
            std::fs::write(side, "{\n  \"unit\": true\n}\n")?;
        }
        Ok(())
    }

    pub fn read_csv(path: &std::path::Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let headers = r.headers()?.clone();
        let dim = match headers.len() {
            2 => 1,
            3 => 2,
            n => return Err(Error::Format(format!("measure CSV must have 2 or 3 columns, got {n}"))),
        };
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let parse = |s: &str| -> Result<f64> {
                s.trim().parse::<f64>().map_err(|e| Error::Format(format!("bad number {s:?}: {e}")))
            };
            if dim == 1 {
                points.push([parse(&rec[0])?, 0.0]);
                weights.push(parse(&rec[1])?);
            } else {
                points.push([parse(&rec[0])?, parse(&rec[1])?]);
                weights.push(parse(&rec[2])?);
            }
        }
        let spherical = std::fs::read_to_string(sidecar_path(path))
            .ok()
            .and_then(|s| serde_json::from_str::<serde_json::Value>(&s).ok())
            .and_then(|v| v.get("unit").and_then(|u| u.as_bool()))
            .unwrap_or(false);
        DiscreteMeasure::new(dim, points, weights, spherical)
    }
}

fn sidecar_path(path: &std::path::Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    std::path::PathBuf::from(s)
}

// ---------------------------------------------------------------------------
// α-concave functions
// ---------------------------------------------------------------------------

/// Cached description of the support `K_f` (closure of the finite domain
/// of the base).
#[derive(Debug, Clone)]
pub struct SupportInfo {
    pub bounds: [(f64, f64); 2],
    /// Convex polygon of the finite nodes (ccw); a segment in 1-D.
    pub polygon: Vec<[f64; 2]>,
    /// Finite nodes adjacent to `+∞` or to the grid edge.
    pub boundary_nodes: Vec<usize>,
    pub touches_grid_edge: bool,
}

/// `f = Ψ_α(φ)` with convex coercive base `φ ≥ 1/α` on a grid.
#[derive(Debug, Clone)]
pub struct AlphaConcaveFunction {
    alpha: f64,
    base: ExtendedGridFunction,
    support: SupportInfo,
}

/// Safety margin above `1/α` required of every finite base value.
pub const BASE_MARGIN: f64 = 1e-12;

impl AlphaConcaveFunction {
    pub fn new(alpha: f64, base: ExtendedGridFunction) -> Result<Self> {
        let dim = base.grid().dim();
        if !alpha_admissible(alpha, dim) {
            return Err(Error::AlphaOutOfRange { alpha, dim });
        }
        if !base.is_proper() {
            return Err(Error::Improper);
        }
        let bound = 1.0 / alpha;
        let min_base =
            base.values().iter().copied().filter(|v| ext::is_finite(*v)).fold(f64::INFINITY, f64::min);
        if min_base < bound + BASE_MARGIN {
            return Err(Error::BaseBelowBound { value: min_base, bound });
        }
        let support = compute_support(&base);
        Ok(AlphaConcaveFunction { alpha, base, support })
    }

    /// Samples a base closure with convex+coercive claims and wraps it.
    pub fn from_base_fn(
        alpha: f64,
        grid: Grid,
        base: impl Fn([f64; 2]) -> f64,
    ) -> Result<Self> {
        let egf = ExtendedGridFunction::from_fn_with_claims(grid, base, true, true)?;
        AlphaConcaveFunction::new(alpha, egf)
    }

    #[inline]
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    #[inline]
    pub fn base(&self) -> &ExtendedGridFunction {
        &self.base
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        self.base.grid()
    }

    #[inline]
    pub fn support(&self) -> &SupportInfo {
        &self.support
    }

    /// Class membership `f ∈ C⁺_α`: nonnegative base.
    pub fn in_class_cplus(&self) -> bool {
        self.base
            .values()
            .iter()
            .all(|&v| !ext::is_finite(v) || v >= -1e-9)
    }

    /// True when the finite domain has empty interior (a point in 1-D, a
    /// point or segment in 2-D), so `f` vanishes off a Lebesgue-null set.
    pub fn support_is_null(&self) -> bool {
        match self.grid().dim() {
            1 => self.support.bounds[0].0 >= self.support.bounds[0].1,
            _ => self.support.polygon.len() < 3,
        }
    }

    /// `f = Ψ_α(φ)` nodewise (0 where the base is `+∞`).
    pub fn density_values(&self) -> Vec<f64> {
        self.lifted_power(0.0)
    }

    /// `(1 − α φ)^{1/α − l}` nodewise, with value 0 at `+∞` nodes.
    pub fn lifted_power(&self, l: f64) -> Vec<f64> {
        let e = 1.0 / self.alpha - l;
        self.base
            .values()
            .iter()
            .map(|&v| if ext::is_finite(v) { (1.0 - self.alpha * v).powf(e) } else { 0.0 })
            .collect()
    }

    /// Density as a grid function (always finite).
    pub fn density_function(&self) -> ExtendedGridFunction {
        ExtendedGridFunction::new(self.grid().clone(), self.density_values())
            .expect("density values are finite")
    }

    /// Support function `h_{K_f}(u)` of the support polygon.
    pub fn support_function(&self, u: [f64; 2]) -> f64 {
        self.support.polygon.iter().map(|&p| dot(p, u)).fold(f64::NEG_INFINITY, f64::max)
    }
}

fn compute_support(base: &ExtendedGridFunction) -> SupportInfo {
    let grid = base.grid();
    let finite = base.finite_nodes();
    let mut bounds = [(f64::INFINITY, f64::NEG_INFINITY); 2];
    let mut touches = false;
    let mut boundary_nodes = Vec::new();
    for &i in &finite {
        let p = grid.node(i);
        for k in 0..grid.dim() {
            bounds[k].0 = bounds[k].0.min(p[k]);
            bounds[k].1 = bounds[k].1.max(p[k]);
        }
        let m = grid.multi_index(i);
        let mut on_boundary = false;
        for k in 0..grid.dim() {
            if m[k] == 0 || m[k] == grid.axis(k).count - 1 {
                on_boundary = true;
                touches = true;
            } else {
                let mut lo = m;
                let mut hi = m;
                lo[k] -= 1;
                hi[k] += 1;
                if !ext::is_finite(base.value(grid.index(lo)))
                    || !ext::is_finite(base.value(grid.index(hi)))
                {
                    on_boundary = true;
                }
            }
        }
        if on_boundary {
            boundary_nodes.push(i);
        }
    }
    if grid.dim() == 1 {
        bounds[1] = (0.0, 0.0);
    }
    let pts: Vec<[f64; 2]> = finite.iter().map(|&i| grid.node(i)).collect();
    let polygon: Vec<[f64; 2]> = if grid.dim() == 1 {
        if pts.is_empty() {
            vec![]
        } else {
            vec![[bounds[0].0, 0.0], [bounds[0].1, 0.0]]
        }
    } else {
        convex_hull_2d(&pts).into_iter().map(|i| pts[i]).collect()
    };
    SupportInfo { bounds, polygon, boundary_nodes, touches_grid_edge: touches }
}

// ---------------------------------------------------------------------------
// Combinations and masses
// ---------------------------------------------------------------------------

/// Options for the α-combination's conjugation back to a grid.
#[derive(Debug, Clone, Copy)]
pub struct CombineOpts {
    /// Uniform filler resolution per axis added to the exact dual points
    /// in 2-D (ignored in 1-D, where the dual set is already exact).
    pub filler: usize,
}

impl Default for CombineOpts {
    fn default() -> Self {
        CombineOpts { filler: 64 }
    }
}

/// `f ⊕_α t ·_α g`: base `(φ* + tψ*)*` on a grid covering `K_f ⊕ t·K_g`,
/// aligned with (and containing) the grid of `f`.
pub fn alpha_combination(
    f: &AlphaConcaveFunction,
    g: &AlphaConcaveFunction,
    t: f64,
    opts: CombineOpts,
) -> Result<AlphaConcaveFunction> {
    if f.alpha() != g.alpha() {
        return Err(Error::AlphaMismatch(f.alpha(), g.alpha()));
    }
    let grid = f.grid();
    if grid.dim() != g.grid().dim() {
        return Err(Error::InvalidGrid("dimension mismatch".into()));
    }
    let mut axes = Vec::new();
    for k in 0..grid.dim() {
        let a = grid.axis(k);
        let h = a.spacing();
        let lo_t = f.support().bounds[k].0 + t * g.support().bounds[k].0 - 2.0 * h;
        let hi_t = f.support().bounds[k].1 + t * g.support().bounds[k].1 + 2.0 * h;
        // extend by whole steps so the new grid stays node-aligned with f's
        let ext_lo = ((a.min - lo_t) / h).ceil().max(0.0);
        let ext_hi = ((hi_t - a.max) / h).ceil().max(0.0);
        let min = a.min - ext_lo * h;
        let count = a.count + ext_lo as usize + ext_hi as usize;
        let max = min + (count - 1) as f64 * h;
        axes.push(crate::extgrid::Axis::new(min, max, count)?);
    }
    let primal = Grid::new(axes)?;
    let base = combined_conjugate(f.base(), g.base(), t, &primal, opts.filler)?;
    let coercive = f.base().claimed_coercive() && g.base().claimed_coercive();
    let base = ExtendedGridFunction::with_claims(
        primal,
        base.values().to_vec(),
        true,
        coercive,
    )?;
    AlphaConcaveFunction::new(f.alpha(), base)
}

/// `β ·_α f`: base `(βφ*)* = βφ(·/β)`, which on a grid is exact — the
/// axes scale by β and the values by β.
pub fn alpha_scale(f: &AlphaConcaveFunction, beta: f64) -> Result<AlphaConcaveFunction> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidValues(format!("scale beta = {beta} must be positive")));
    }
    let grid = f.grid();
    let mut axes = Vec::new();
    for k in 0..grid.dim() {
        let a = grid.axis(k);
        axes.push(crate::extgrid::Axis::new(a.min * beta, a.max * beta, a.count)?);
    }
    let values: Vec<f64> = f
        .base()
        .values()
        .iter()
        .map(|&v| if ext::is_finite(v) { beta * v } else { f64::INFINITY })
        .collect();
    let base = ExtendedGridFunction::with_claims(
        Grid::new(axes)?,
        values,
        f.base().claimed_convex(),
        f.base().claimed_coercive(),
    )?;
    AlphaConcaveFunction::new(f.alpha(), base)
}

/// Total mass `J(f) = ∫ f dx`. A base finite only on a Lebesgue-null set
/// carries no mass.
pub fn total_mass(f: &AlphaConcaveFunction) -> Result<QuadratureReport> {
    if f.support_is_null() {
        return Ok(QuadratureReport { value: 0.0, estimated_error: 0.0, cell_count: 0 });
    }
    let density = f.density_function();
    integrate(&density, None)
}

/// `∫ |x|^p (1 − αφ)^{1/α − l} dx`. The integrability hypothesis
/// `n + p + 1/α − l < 0` is enforced, not silently ignored.
pub fn weighted_moment(f: &AlphaConcaveFunction, p: f64, l: usize) -> Result<QuadratureReport> {
    let n = f.grid().dim();
    if p < 0.0 || l > 2 {
        return Err(Error::MomentHypothesis { n, l, p, alpha: f.alpha() });
    }
    if n as f64 + p + 1.0 / f.alpha() - l as f64 >= 0.0 {
        return Err(Error::MomentHypothesis { n, l, p, alpha: f.alpha() });
    }
    if f.support_is_null() {
        return Ok(QuadratureReport { value: 0.0, estimated_error: 0.0, cell_count: 0 });
    }
    let grid = f.grid().clone();
    let vals = f.lifted_power(l as f64);
    let g = ExtendedGridFunction::new(grid.clone(), vals)?;
    let weight: Vec<f64> = (0..grid.len()).map(|i| norm(grid.node(i)).powf(p)).collect();
    integrate(&g, Some(&weight))
}

// ---------------------------------------------------------------------------
// First variations
// ---------------------------------------------------------------------------

/// Difference quotients of `t ↦ J(f ⊕_α t·_α g)` and their Richardson
/// extrapolation to `t → 0⁺`.
#[derive(Debug, Clone, Serialize)]
pub struct NumericVariation {
    pub quotients: Vec<(f64, f64)>,
    pub extrapolated: f64,
}

/// First variation `δJ_α(f, g)` by difference quotients over a positive
/// decreasing `ts` sequence, extrapolated from the last two entries.
pub fn first_variation_numeric(
    f: &AlphaConcaveFunction,
    g: &AlphaConcaveFunction,
    ts: &[f64],
    opts: CombineOpts,
) -> Result<NumericVariation> {
    if ts.is_empty() || ts.iter().any(|&t| t <= 0.0) || ts.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidValues("t-sequence must be positive decreasing".into()));
    }
    let j0 = total_mass(f)?.value;
    let mut quotients = Vec::with_capacity(ts.len());
    for &t in ts {
        let ft = alpha_combination(f, g, t, opts)?;
        let jt = total_mass(&ft)?.value;
        quotients.push((t, (jt - j0) / t));
    }
    let extrapolated = match quotients.len() {
        1 => quotients[0].1,
        _ => {
            let (t1, q1) = quotients[quotients.len() - 2];
            let (t2, q2) = quotients[quotients.len() - 1];
            // linear model q(t) = A + Bt through the last two entries
            (t1 * q2 - t2 * q1) / (t1 - t2)
        }
    };
    Ok(NumericVariation { quotients, extrapolated })
}

/// Closed form for the self-variation:
/// `δJ_α(f, f) = n·J(f) − ∫ φ f^{1−α} dx`, with the convention that the
/// integrand vanishes where the base is `+∞`.
pub fn self_variation_formula(f: &AlphaConcaveFunction) -> Result<f64> {
    if !f.in_class_cplus() {
        return Err(Error::Precondition("self variation needs a nonnegative base".into()));
    }
    let n = f.grid().dim() as f64;
    let j = total_mass(f)?.value;
    let pw = f.lifted_power(1.0);
    let vals: Vec<f64> = f
        .base()
        .values()
        .iter()
        .zip(&pw)
        .map(|(&b, &w)| if ext::is_finite(b) { b * w } else { 0.0 })
        .collect();
    let g = ExtendedGridFunction::new(f.grid().clone(), vals)?;
    let int = integrate(&g, None)?;
    Ok(n * j - int.value)
}

/// Both terms of the general variational formula
/// `δJ_α(f, g) = ∫ ψ*(∇φ) f^{1−α} dx + ∮ h_{K_g}(ν) f dH^{n−1}`.
#[derive(Debug, Clone, Serialize)]
pub struct VariationFormula {
    pub interior: f64,
    pub boundary: f64,
    /// Certifying pair for the compatibility condition.
    pub beta1: f64,
    pub beta2: f64,
    /// Fraction of finite interior nodes skipped as nondifferentiable.
    pub kink_fraction: f64,
}

impl VariationFormula {
    pub fn value(&self) -> f64 {
        self.interior + self.boundary
    }
}

/// Maximum tolerated fraction of nondifferentiable interior nodes.
pub const MAX_KINK_FRACTION: f64 = 0.2;

/// Variational formula for `δJ_α(f, g)`. The compatibility condition
/// `(dom ψ) ∩ int(β₁ dom φ) ≠ ∅ and ψ* ≤ β₁φ* + β₂` is certified by
/// searching β₁ over powers of two and taking β₂ as the maximal nodewise
/// gap; rejection means no pair certifies.
pub fn first_variation_formula(
    f: &AlphaConcaveFunction,
    g: &AlphaConcaveFunction,
) -> Result<VariationFormula> {
    if f.alpha() != g.alpha() {
        return Err(Error::AlphaMismatch(f.alpha(), g.alpha()));
    }
    if !f.in_class_cplus() {
        return Err(Error::Precondition("variation formula needs a nonnegative base".into()));
    }
    let grid = f.grid();
    let n = grid.dim();

    // Shared dual grid covering both slope ranges.
    let dual = {
        let rf = crate::legendre::observed_slope_range(f.base());
        let rg = crate::legendre::observed_slope_range(g.base());
        let mut axes = Vec::new();
        for k in 0..n {
            let lo = rf[k].0.min(rg[k].0);
            let hi = rf[k].1.max(rg[k].1);
            let pad = 0.1 * (hi - lo).max(1.0);
            let count = 2 * grid.axis(k).count + 1;
            axes.push(crate::extgrid::Axis::new(lo - pad, hi + pad, count)?);
        }
        Grid::new(axes)?
    };
    let phi_star = conjugate(f.base(), &dual)?.function;
    let psi_star = conjugate(g.base(), &dual)?.function;

    // Certification search.
    let mut cert: Option<(f64, f64)> = None;
    'outer: for k in -6..=6 {
        let beta1 = 2f64.powi(k);
        // (dom ψ) ∩ int(β₁ dom φ) ≠ ∅: some finite node of ψ scaled by
        // 1/β₁ strictly inside the support polygon of φ.
        let poly = &f.support().polygon;
        let margin = grid.axes().iter().map(|a| a.spacing()).fold(f64::INFINITY, f64::min);
        let found = g.base().finite_nodes().iter().any(|&i| {
            let x = g.grid().node(i);
            let scaled = [x[0] / beta1, x[1] / beta1];
            strictly_inside(poly, scaled, 0.5 * margin, n)
        });
        if !found {
            continue;
        }
        let mut beta2 = f64::NEG_INFINITY;
        for j in 0..dual.len() {
            let gap = psi_star.value(j) - beta1 * phi_star.value(j);
            if !gap.is_finite() {
                continue 'outer;
            }
            beta2 = beta2.max(gap);
        }
        cert = Some((beta1, beta2));
        break;
    }
    let (beta1, beta2) = cert.ok_or(Error::CertificationFailed)?;

    // Interior term: nodewise ψ*(∇φ) f^{1−α}, central differences inside,
    // one-sided at the finite-domain boundary.
    let pw = f.lifted_power(1.0);
    let mut vals = vec![0.0f64; grid.len()];
    let mut kinks = 0usize;
    let mut finite_count = 0usize;
    for i in 0..grid.len() {
        if !ext::is_finite(f.base().value(i)) {
            continue;
        }
        finite_count += 1;
        match node_gradient_onesided(f.base(), i) {
            Some(gr) => {
                let s = psi_star.interpolate(gr);
                if ext::is_finite(s) {
                    vals[i] = s * pw[i];
                } else {
                    kinks += 1; // gradient escaped the dual window
                }
            }
            None => kinks += 1,
        }
    }
    let kink_fraction = if finite_count == 0 { 0.0 } else { kinks as f64 / finite_count as f64 };
    if kink_fraction > MAX_KINK_FRACTION {
        return Err(Error::TooManyKinks { frac: kink_fraction, max: MAX_KINK_FRACTION });
    }
    let interior = integrate(&ExtendedGridFunction::new(grid.clone(), vals)?, None)?.value;

    // Boundary term: ∮ h_{K_g}(ν) f dH^{n−1} over the support polygon.
    let boundary = boundary_flux(f)?
        .iter()
        .map(|&(nu, mass)| g.support_function(nu) * mass)
        .sum();

    Ok(VariationFormula { interior, boundary, beta1, beta2, kink_fraction })
}

fn strictly_inside(poly: &[[f64; 2]], p: [f64; 2], margin: f64, dim: usize) -> bool {
    if dim == 1 {
        if poly.len() < 2 {
            return false;
        }
        return p[0] > poly[0][0] + margin && p[0] < poly[1][0] - margin;
    }
    if poly.len() < 3 {
        return false;
    }
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let d = [b[0] - a[0], b[1] - a[1]];
        let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
        if len == 0.0 {
            continue;
        }
        let cross = (d[0] * (p[1] - a[1]) - d[1] * (p[0] - a[0])) / len;
        if cross < margin {
            return false;
        }
    }
    true
}

/// Central differences where both neighbors are finite, one-sided at the
/// finite-domain edge; `None` only when no finite neighbor exists along
/// some axis.
fn node_gradient_onesided(base: &ExtendedGridFunction, i: usize) -> Option<[f64; 2]> {
    let grid = base.grid();
    let m = grid.multi_index(i);
    let mut gr = [0.0f64; 2];
    for k in 0..grid.dim() {
        let h = grid.axis(k).spacing();
        let lo = if m[k] > 0 {
            let mut l = m;
            l[k] -= 1;
            Some(base.value(grid.index(l))).filter(|v| ext::is_finite(*v))
        } else {
            None
        };
        let hi = if m[k] + 1 < grid.axis(k).count {
            let mut u = m;
            u[k] += 1;
            Some(base.value(grid.index(u))).filter(|v| ext::is_finite(*v))
        } else {
            None
        };
        let c = base.value(i);
        gr[k] = match (lo, hi) {
            (Some(l), Some(u)) => (u - l) / (2.0 * h),
            (Some(l), None) => (c - l) / h,
            (None, Some(u)) => (u - c) / h,
            (None, None) => return None,
        };
    }
    Some(gr)
}

// ---------------------------------------------------------------------------
// Surface-area measures
// ---------------------------------------------------------------------------

/// Binning specification for the Euclidean surface-area measure.
#[derive(Debug, Clone)]
pub enum SamBinning {
    /// One atom per gradient value (exact duplicates merged).
    Raw,
    /// Snap atoms to the nearest node of this grid.
    Grid(Grid),
    /// Snap atoms to the nearest point of this cloud.
    Points(Vec<[f64; 2]>),
}

/// Euclidean surface-area measure `μ_α(f, ·)`: the pushforward of
/// `f^{1−α} dx` under the cellwise gradient of the base. Mass is
/// assembled per cell (corner-mean × cell volume), so the total exactly
/// matches the tensor-trapezoid value of `∫ f^{1−α}`.
///
/// One-dimensional cells sitting across a slope jump split their mass
/// between the two neighboring slopes in proportion to the implied
/// subcell widths; 2-D cells use the averaged forward/backward gradient.
/// This choice on the gradient's null set is a discretization decision,
/// observable only through total-mass and barycenter invariants.
pub fn euclidean_sam(f: &AlphaConcaveFunction, binning: &SamBinning) -> Result<DiscreteMeasure> {
    pushforward_cells(f.base(), &f.lifted_power(1.0), binning)
}

/// Cellwise-gradient pushforward of `node_weights · dx` under the
/// gradient field of `base`; the engine behind [`euclidean_sam`], also
/// used to push solver densities. Weights must vanish where the base is
/// `+∞`.
pub fn pushforward_cells(
    base: &ExtendedGridFunction,
    node_weights: &[f64],
    binning: &SamBinning,
) -> Result<DiscreteMeasure> {
    let grid = base.grid();
    if node_weights.len() != grid.len() {
        return Err(Error::InvalidValues("weight array length mismatch".into()));
    }
    let pw = node_weights;
    let n = grid.dim();
    let vol = grid.cell_volume();
    let mut atoms: Vec<([f64; 2], f64)> = Vec::new();

    if n == 1 {
        let count = grid.axis(0).count;
        let h = grid.axis(0).spacing();
        // cell slopes, −∞ marking cells with an infinite corner
        let mut slopes = vec![f64::NEG_INFINITY; count - 1];
        let mut masses = vec![0.0f64; count - 1];
        for c in 0..count - 1 {
            let (b0, b1) = (base.value(c), base.value(c + 1));
            masses[c] = 0.5 * (pw[c] + pw[c + 1]) * vol;
            if ext::is_finite(b0) && ext::is_finite(b1) {
                slopes[c] = (b1 - b0) / h;
            }
        }
        // cells missing a slope inherit the nearest finite one
        let filled: Vec<f64> = (0..count - 1)
            .map(|c| {
                if slopes[c] > f64::NEG_INFINITY {
                    return slopes[c];
                }
                let mut d = 1usize;
                loop {
                    if c >= d && slopes[c - d] > f64::NEG_INFINITY {
                        return slopes[c - d];
                    }
                    if c + d < count - 1 && slopes[c + d] > f64::NEG_INFINITY {
                        return slopes[c + d];
                    }
                    d += 1;
                    if d > count {
                        return 0.0;
                    }
                }
            })
            .collect();
        let kink_tol = 10.0 * h;
        for c in 0..count - 1 {
            if masses[c] == 0.0 {
                continue;
            }
            let s = filled[c];
            let (sl, sr) = (
                if c > 0 { filled[c - 1] } else { s },
                if c + 2 < count { filled[c + 1] } else { s },
            );
            if sr - sl > kink_tol && sl < s && s < sr {
                // a slope jump happens inside this cell: split the mass in
                // proportion to the implied subcell widths
                let theta = ((sr - s) / (sr - sl)).clamp(0.0, 1.0);
                atoms.push(([sl, 0.0], theta * masses[c]));
                atoms.push(([sr, 0.0], (1.0 - theta) * masses[c]));
            } else {
                atoms.push(([s, 0.0], masses[c]));
            }
        }
    } else {
        let (n0, n1) = (grid.axis(0).count, grid.axis(1).count);
        let (h0, h1) = (grid.axis(0).spacing(), grid.axis(1).spacing());
        let mut cell_grad = vec![None::<[f64; 2]>; (n0 - 1) * (n1 - 1)];
        let mut cell_mass = vec![0.0f64; (n0 - 1) * (n1 - 1)];
        for c0 in 0..n0 - 1 {
            for c1 in 0..n1 - 1 {
                let idx = [
                    grid.index([c0, c1]),
                    grid.index([c0, c1 + 1]),
                    grid.index([c0 + 1, c1]),
                    grid.index([c0 + 1, c1 + 1]),
                ];
                let w = 0.25 * (pw[idx[0]] + pw[idx[1]] + pw[idx[2]] + pw[idx[3]]) * vol;
                cell_mass[c0 * (n1 - 1) + c1] = w;
                let b: Vec<f64> = idx.iter().map(|&i| base.value(i)).collect();
                if b.iter().all(|v| ext::is_finite(*v)) {
                    // averaged forward/backward differences across the cell
                    let g0 = 0.5 * ((b[2] - b[0]) + (b[3] - b[1])) / h0;
                    let g1 = 0.5 * ((b[1] - b[0]) + (b[3] - b[2])) / h1;
                    cell_grad[c0 * (n1 - 1) + c1] = Some([g0, g1]);
                }
            }
        }
        for c0 in 0..n0 - 1 {
            for c1 in 0..n1 - 1 {
                let ci = c0 * (n1 - 1) + c1;
                if cell_mass[ci] == 0.0 {
                    continue;
                }
                let grad = cell_grad[ci].unwrap_or_else(|| {
                    // partial boundary cell: nearest full cell's gradient
                    let mut best = [0.0, 0.0];
                    let mut bd = usize::MAX;
                    for d0 in 0..n0 - 1 {
                        for d1 in 0..n1 - 1 {
                            if let Some(g) = cell_grad[d0 * (n1 - 1) + d1] {
                                let dist = c0.abs_diff(d0) + c1.abs_diff(d1);
                                if dist < bd {
                                    bd = dist;
                                    best = g;
                                }
                            }
                        }
                    }
                    best
                });
                atoms.push((grad, cell_mass[ci]));
            }
        }
    }

    bin_atoms(grid.dim(), atoms, binning)
}

fn bin_atoms(
    dim: usize,
    atoms: Vec<([f64; 2], f64)>,
    binning: &SamBinning,
) -> Result<DiscreteMeasure> {
    match binning {
        SamBinning::Raw => {
            let points: Vec<[f64; 2]> = atoms.iter().map(|a| a.0).collect();
            let weights: Vec<f64> = atoms.iter().map(|a| a.1).collect();
            Ok(DiscreteMeasure::new(dim, points, weights, false)?.compacted())
        }
        SamBinning::Grid(g) => {
            if g.dim() != dim {
                return Err(Error::InvalidGrid("binning grid dimension mismatch".into()));
            }
            let mut acc = vec![0.0f64; g.len()];
            for (p, w) in atoms {
                let mut multi = [0usize; 2];
                for k in 0..dim {
                    let a = g.axis(k);
                    let t = ((p[k] - a.min) / a.spacing()).round();
                    multi[k] = (t.max(0.0) as usize).min(a.count - 1);
                }
                acc[g.index(multi)] += w;
            }
            let mut points = Vec::new();
            let mut weights = Vec::new();
            for i in 0..g.len() {
                if acc[i] > 0.0 {
                    points.push(g.node(i));
                    weights.push(acc[i]);
                }
            }
            DiscreteMeasure::new(dim, points, weights, false)
        }
        SamBinning::Points(cloud) => {
            if cloud.is_empty() {
                return Err(Error::EmptySupport);
            }
            let mut acc = vec![0.0f64; cloud.len()];
            for (p, w) in atoms {
                let mut best = 0usize;
                let mut bd = f64::INFINITY;
                for (j, q) in cloud.iter().enumerate() {
                    let d = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
                    if d < bd {
                        bd = d;
                        best = j;
                    }
                }
                acc[best] += w;
            }
            let mut points = Vec::new();
            let mut weights = Vec::new();
            for (j, &w) in acc.iter().enumerate() {
                if w > 0.0 {
                    points.push(cloud[j]);
                    weights.push(w);
                }
            }
            DiscreteMeasure::new(dim, points, weights, false)
        }
    }
}

/// Outward-normal flux pairs `(ν, ∫_facet f dH^{n−1})` along the support
/// boundary: two endpoint terms in 1-D, a polygon walk in 2-D.
pub fn boundary_flux(f: &AlphaConcaveFunction) -> Result<Vec<([f64; 2], f64)>> {
    let grid = f.grid();
    let density = f.density_values();
    if grid.dim() == 1 {
        let finite = f.base().finite_nodes();
        if finite.is_empty() {
            return Err(Error::Improper);
        }
        let lo = *finite.first().unwrap();
        let hi = *finite.last().unwrap();
        return Ok(vec![([-1.0, 0.0], density[lo]), ([1.0, 0.0], density[hi])]);
    }
    let poly = &f.support().polygon;
    if poly.len() < 3 {
        return Err(Error::InvalidValues("support polygon is degenerate".into()));
    }
    let h = grid.axes().iter().map(|a| a.spacing()).fold(f64::INFINITY, f64::min);
    let mut out = Vec::new();
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let d = [b[0] - a[0], b[1] - a[1]];
        let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
        if len == 0.0 {
            continue;
        }
        // ccw polygon: outward normal is the right-hand rotation
        let nu = [d[1] / len, -d[0] / len];
        // trapezoid over samples snapped to the nearest finite corner node
        let segments = (len / h).round().max(1.0) as usize;
        let mut mass = 0.0;
        for s in 0..=segments {
            let t = s as f64 / segments as f64;
            let p = [a[0] + t * d[0], a[1] + t * d[1]];
            let fv = nearest_finite_density(f, &density, p);
            let coeff = if s == 0 || s == segments { 0.5 } else { 1.0 };
            mass += coeff * fv;
        }
        mass *= len / segments as f64;
        out.push((nu, mass));
    }
    Ok(out)
}

fn nearest_finite_density(f: &AlphaConcaveFunction, density: &[f64], p: [f64; 2]) -> f64 {
    let grid = f.grid();
    let mut best = 0.0;
    let mut bd = f64::INFINITY;
    // search the 4 surrounding nodes, falling back to 0 outside the domain
    let mut cand = Vec::with_capacity(4);
    for k in 0..2usize {
        let a = grid.axis(k.min(grid.dim() - 1));
        let t = (p[k] - a.min) / a.spacing();
        let i = (t.floor().max(0.0) as usize).min(a.count - 2);
        cand.push([i, i + 1]);
    }
    for &i0 in &cand[0] {
        for &i1 in &cand[1] {
            let idx = grid.index([i0, i1]);
            if ext::is_finite(f.base().value(idx)) {
                let q = grid.node(idx);
                let d = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
                if d < bd {
                    bd = d;
                    best = density[idx];
                }
            }
        }
    }
    best
}

/// Spherical surface-area measure `ν_α(f, ·)`: the boundary integral of
/// `f` binned by outward normal direction. A support truncated by the
/// grid with boundary-ring density above `decay_tol · max f` is flagged
/// rather than silently zeroed (pass `None` for the default `1e−3`).
pub fn spherical_sam(
    f: &AlphaConcaveFunction,
    decay_tol: Option<f64>,
) -> Result<DiscreteMeasure> {
    let tol = decay_tol.unwrap_or(1e-3);
    let grid = f.grid();
    let density = f.density_values();
    if f.support().touches_grid_edge {
        let fmax = density.iter().copied().fold(0.0f64, f64::max);
        let mut ring_max = 0.0f64;
        for i in 0..grid.len() {
            if grid.on_outer_ring(i) {
                ring_max = ring_max.max(density[i]);
            }
        }
        if ring_max > tol * fmax.max(1e-300) {
            return Err(Error::TruncatedSupport { max_boundary: ring_max });
        }
    }
    let flux = boundary_flux(f)?;
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for (nu, mass) in flux {
        let n = norm(nu);
        if n == 0.0 {
            continue;
        }
        points.push([nu[0] / n, nu[1] / n]);
        weights.push(mass);
    }
    Ok(DiscreteMeasure::new(grid.dim(), points, weights, true)?.compacted())
}
