//! Solver for the extended Minkowski problem: minimize
//! `(1−α)·F_α(ϱ) − α·T(ϱ, μ)` over probability measures, where
//! `F_α(ϱ) = −∫ ρ^{1/(1−α)}` and `T` is the maximal correlation.
//!
//! The minimizer has the structure `(1 − αφ₀)^{1/α−1} dx + ϱ^s` with a
//! convex base `φ₀ ≥ 1/α` and the singular part supported on
//! `{φ₀ = 1/α}`. The iteration alternates an optimal-transport solve
//! (giving a potential `φ₁` with `inf φ₁ = 0`), the first-order density
//! update `ρ(c) = (−c − αφ₁)^{(1−α)/α}` with `c ≤ 0` bisected for unit
//! mass (deficit mass becomes an atom at `argmin φ₁`), and a damped,
//! backtracked mixing step that keeps the objective trace nonincreasing.

use serde::{Deserialize, Serialize};

use crate::alphafun::{alpha_admissible, pushforward_cells, DiscreteMeasure, SamBinning};
use crate::extgrid::{ext, integrate, Axis, ExtendedGridFunction, Grid};
use crate::transport::{
    knott_smith_check, max_correlation_entropic_with_duals, max_correlation_exact, w1_distance,
    DualCertificate, PotentialPair, TransportPlan,
};
use crate::verify::check_necessary_conditions;
use crate::{dot, Error, Result};

/// Density nodes below this implied-argument cutoff carry no mass.
pub const CUT_TOL: f64 = 1e-12;

/// Bisection target on the candidate mass.
pub const MASS_TOL: f64 = 1e-8;

/// An α-concave measure: density part `(1 − α·base)^{1/α − 1} dx` plus
/// singular atoms supported where the base touches `1/α`. Instances of
/// the minimizer class are probability-normalized.
#[derive(Debug, Clone)]
pub struct AlphaConcaveMeasure {
    pub alpha: f64,
    pub base: ExtendedGridFunction,
    pub density: Vec<f64>,
    pub atoms: DiscreteMeasure,
}

impl AlphaConcaveMeasure {
    /// Singular-atom location tolerance: `10⁻⁶·|1/α|`.
    pub fn atom_tol(alpha: f64) -> f64 {
        1e-6 * (1.0 / alpha).abs()
    }

    pub fn new(
        alpha: f64,
        base: ExtendedGridFunction,
        atoms: DiscreteMeasure,
    ) -> Result<Self> {
        let dim = base.grid().dim();
        if !alpha_admissible(alpha, dim) {
            return Err(Error::AlphaOutOfRange { alpha, dim });
        }
        let bound = 1.0 / alpha;
        let e = 1.0 / alpha - 1.0;
        let mut density = Vec::with_capacity(base.grid().len());
        for &v in base.values() {
            if !ext::is_finite(v) {
                density.push(0.0);
                continue;
            }
            if v < bound - 1e-9 {
                return Err(Error::BaseBelowBound { value: v, bound });
            }
            let arg = 1.0 - alpha * v;
            density.push(if arg > CUT_TOL { arg.powf(e) } else { 0.0 });
        }
        // atoms may only sit where the base touches 1/α
        let tol = Self::atom_tol(alpha);
        let grid = base.grid();
        for p in atoms.points() {
            let mut multi = [0usize; 2];
            for k in 0..dim {
                let a = grid.axis(k);
                let t = ((p[k] - a.min) / a.spacing()).round();
                multi[k] = (t.max(0.0) as usize).min(a.count - 1);
            }
            let v = base.value(grid.index(multi));
            if !ext::is_finite(v) || v > bound + tol {
                return Err(Error::InvalidValues(format!(
                    "singular atom at ({}, {}) where base = {v}, not at 1/α = {bound}",
                    p[0], p[1]
                )));
            }
        }
        let m = AlphaConcaveMeasure { alpha, base, density, atoms };
        let total = m.density_total()? + m.atoms.total();
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidValues(format!(
                "measure total {total} is not probability-normalized"
            )));
        }
        Ok(m)
    }

    pub fn density_total(&self) -> Result<f64> {
        let g = ExtendedGridFunction::new(self.base.grid().clone(), self.density.clone())?;
        Ok(integrate(&g, None)?.value)
    }

    pub fn grid(&self) -> &Grid {
        self.base.grid()
    }

    /// Euclidean surface-area measure of the α-concave measure: the
    /// density pushed forward by the base gradient, atoms mapped to the
    /// origin (the subgradient at the minimum of the base).
    pub fn euclidean_sam(&self, binning: &SamBinning) -> Result<DiscreteMeasure> {
        let push = pushforward_cells(&self.base, &self.density, binning)?;
        if self.atoms.total() == 0.0 {
            return Ok(push);
        }
        let mut pts = push.points().to_vec();
        let mut ws = push.weights().to_vec();
        pts.push([0.0, 0.0]);
        ws.push(self.atoms.total());
        Ok(DiscreteMeasure::new(self.grid().dim(), pts, ws, false)?.compacted())
    }
}

/// `F_α(ϱ) = −∫ ρ^{1/(1−α)} dx` of a nonnegative density grid; singular
/// atoms never contribute.
pub fn f_alpha(density: &ExtendedGridFunction, alpha: f64) -> Result<f64> {
    if !(alpha < 0.0) {
        return Err(Error::AlphaOutOfRange { alpha, dim: density.grid().dim() });
    }
    let e = 1.0 / (1.0 - alpha);
    let vals: Vec<f64> = density
        .values()
        .iter()
        .map(|&v| {
            if !ext::is_finite(v) || v <= 0.0 {
                0.0
            } else {
                v.powf(e)
            }
        })
        .collect();
    let g = ExtendedGridFunction::new(density.grid().clone(), vals)?;
    Ok(-integrate(&g, None)?.value)
}

/// Backend selection for the transport subproblem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OtBackend {
    Exact,
    Entropic,
}

/// Solver configuration; the JSON form uses camelCase field names.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SolveConfig {
    pub alpha: f64,
    #[serde(default)]
    pub grid: Option<Vec<Axis>>,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_backend")]
    pub ot_backend: OtBackend,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub seed: u64,
    /// Cap on source atoms per transport solve (largest cells kept).
    #[serde(default = "default_max_cells")]
    pub max_cells: usize,
}

fn default_theta() -> f64 {
    0.5
}
fn default_tol() -> f64 {
    1e-7
}
fn default_max_iter() -> usize {
    60
}
fn default_backend() -> OtBackend {
    OtBackend::Exact
}
fn default_epsilon() -> f64 {
    1e-2
}
fn default_max_cells() -> usize {
    1600
}

impl SolveConfig {
    pub fn new(alpha: f64) -> Self {
        SolveConfig {
            alpha,
            grid: None,
            theta: default_theta(),
            tol: default_tol(),
            max_iter: default_max_iter(),
            ot_backend: default_backend(),
            epsilon: default_epsilon(),
            seed: 0,
            max_cells: default_max_cells(),
        }
    }

    pub fn with_grid(mut self, grid: &Grid) -> Self {
        self.grid = Some(grid.axes().to_vec());
        self
    }
}

/// Solve trace and certificates.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SolveReport {
    pub objective_trace: Vec<f64>,
    pub c0_trace: Vec<f64>,
    pub sam_residual_w1: f64,
    pub knott_smith_violations: usize,
    pub singular_mass: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// A density iterate plus singular atoms on a fixed grid.
#[derive(Clone)]
struct Candidate {
    density: Vec<f64>,
    atoms: Vec<([f64; 2], f64)>,
}

fn discretize(
    grid: &Grid,
    cand: &Candidate,
    max_cells: usize,
) -> Result<DiscreteMeasure> {
    let dim = grid.dim();
    let vol = grid.cell_volume();
    let mut cells: Vec<([f64; 2], f64)> = Vec::new();
    match dim {
        1 => {
            let n0 = grid.axis(0).count;
            for c in 0..n0 - 1 {
                let m = 0.5 * (cand.density[c] + cand.density[c + 1]) * vol;
                if m > 0.0 {
                    let x = 0.5 * (grid.axis(0).node(c) + grid.axis(0).node(c + 1));
                    cells.push(([x, 0.0], m));
                }
            }
        }
        _ => {
            let (n0, n1) = (grid.axis(0).count, grid.axis(1).count);
            for c0 in 0..n0 - 1 {
                for c1 in 0..n1 - 1 {
                    let m = 0.25
                        * (cand.density[grid.index([c0, c1])]
                            + cand.density[grid.index([c0, c1 + 1])]
                            + cand.density[grid.index([c0 + 1, c1])]
                            + cand.density[grid.index([c0 + 1, c1 + 1])])
                        * vol;
                    if m > 0.0 {
                        let x = 0.5 * (grid.axis(0).node(c0) + grid.axis(0).node(c0 + 1));
                        let y = 0.5 * (grid.axis(1).node(c1) + grid.axis(1).node(c1 + 1));
                        cells.push(([x, y], m));
                    }
                }
            }
        }
    }
    // keep the heaviest cells up to the cap, deterministically
    if cells.len() > max_cells {
        let mut order: Vec<usize> = (0..cells.len()).collect();
        order.sort_by(|&a, &b| cells[b].1.total_cmp(&cells[a].1).then(a.cmp(&b)));
        order.truncate(max_cells);
        order.sort();
        cells = order.into_iter().map(|i| cells[i]).collect();
    }
    let target: f64 = cand.density_mass(grid)? + cand.atoms.iter().map(|a| a.1).sum::<f64>();
    let kept: f64 =
        cells.iter().map(|c| c.1).sum::<f64>() + cand.atoms.iter().map(|a| a.1).sum::<f64>();
    let scale = if kept > 0.0 { target / kept } else { 1.0 };
    let mut pts: Vec<[f64; 2]> = cells.iter().map(|c| c.0).collect();
    let mut ws: Vec<f64> = cells.iter().map(|c| c.1 * scale).collect();
    for &(p, w) in &cand.atoms {
        pts.push(p);
        ws.push(w * scale);
    }
    if pts.is_empty() {
        return Err(Error::EmptySupport);
    }
    DiscreteMeasure::new(dim, pts, ws, false)
}

impl Candidate {
    fn density_mass(&self, grid: &Grid) -> Result<f64> {
        let g = ExtendedGridFunction::new(grid.clone(), self.density.clone())?;
        Ok(integrate(&g, None)?.value)
    }
}

/// Objective `(1−α)·F_α(ϱ) − α·T(ϱ, μ)` of an α-concave measure against
/// the prescribed `μ`, with the density discretized to weighted cell
/// centers for the transport term.
pub fn objective(
    measure: &AlphaConcaveMeasure,
    mu: &DiscreteMeasure,
    config: &SolveConfig,
) -> Result<f64> {
    let cand = Candidate {
        density: measure.density.clone(),
        atoms: measure
            .atoms
            .points()
            .iter()
            .zip(measure.atoms.weights())
            .map(|(p, &w)| (*p, w))
            .collect(),
    };
    let dens = ExtendedGridFunction::new(measure.grid().clone(), measure.density.clone())?;
    let fa = f_alpha(&dens, measure.alpha)?;
    let rho = discretize(measure.grid(), &cand, config.max_cells)?.normalized()?;
    let t = solve_ot(&rho, &mu.normalized()?, config)?.0;
    Ok((1.0 - measure.alpha) * fa - measure.alpha * t)
}

fn solve_ot(
    rho: &DiscreteMeasure,
    mu: &DiscreteMeasure,
    config: &SolveConfig,
) -> Result<(f64, TransportPlan, PotentialPair)> {
    match config.ot_backend {
        OtBackend::Exact => max_correlation_exact(rho, mu),
        OtBackend::Entropic => {
            max_correlation_entropic_with_duals(rho, mu, config.epsilon, 100_000)
        }
    }
}

/// The c-transform extension of the μ-side potential: a finite max-affine
/// convex function defined on all of ℝⁿ.
fn c_transform<'a>(
    mu: &'a DiscreteMeasure,
    phi_star: &'a [f64],
) -> impl Fn([f64; 2]) -> f64 + 'a {
    move |x: [f64; 2]| {
        mu.points()
            .iter()
            .zip(phi_star)
            .map(|(y, &s)| dot(x, *y) - s)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

struct CandidateUpdate {
    candidate: Candidate,
    c0: f64,
    phi1: Vec<f64>,
}

/// First-order update: given the normalized potential `φ₁ ≥ 0` on the
/// grid, bisect `c ∈ (−∞, 0]` so that `∫(−c − αφ₁)^{(1−α)/α} = 1`; a
/// mass deficit at `c = 0` becomes an atom at `argmin φ₁` (ties split
/// evenly).
fn candidate_from_potential(
    grid: &Grid,
    phi1: Vec<f64>,
    alpha: f64,
) -> Result<CandidateUpdate> {
    let e = (1.0 - alpha) / alpha;
    let density_at = |c: f64| -> Vec<f64> {
        phi1.iter()
            .map(|&v| {
                let arg = -c - alpha * v;
                if arg > CUT_TOL {
                    arg.powf(e)
                } else {
                    0.0
                }
            })
            .collect()
    };
    let mass_of = |vals: Vec<f64>| -> Result<f64> {
        let g = ExtendedGridFunction::new(grid.clone(), vals)?;
        Ok(integrate(&g, None)?.value)
    };

    let m0 = mass_of(density_at(0.0))?;
    let (c0, density, deficit) = if m0 < 1.0 {
        (0.0, density_at(0.0), 1.0 - m0)
    } else {
        // bracket [c_lo, 0] with m(c_lo) < 1, then bisect on mass
        let mut c_lo = -1.0;
        while mass_of(density_at(c_lo))? >= 1.0 {
            c_lo *= 2.0;
            if c_lo < -1e12 {
                return Err(Error::Precondition("mass bisection bracket diverged".into()));
            }
        }
        let mut lo = c_lo;
        let mut hi = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let m = mass_of(density_at(mid))?;
            if (m - 1.0).abs() <= MASS_TOL {
                lo = mid;
                break;
            }
            if m >= 1.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        (lo, density_at(lo), 0.0)
    };

    let mut atoms = Vec::new();
    if deficit > 0.0 {
        let min_v = phi1.iter().copied().fold(f64::INFINITY, f64::min);
        let ties: Vec<usize> = (0..phi1.len())
            .filter(|&i| phi1[i] <= min_v + 1e-12 * (1.0 + min_v.abs()))
            .collect();
        let share = deficit / ties.len() as f64;
        for i in ties {
            atoms.push((grid.node(i), share));
        }
    }
    Ok(CandidateUpdate { candidate: Candidate { density, atoms }, c0, phi1 })
}

fn mix(grid: &Grid, old: &Candidate, new: &Candidate, theta: f64) -> Candidate {
    let _ = grid;
    let density: Vec<f64> = old
        .density
        .iter()
        .zip(&new.density)
        .map(|(&a, &b)| (1.0 - theta) * a + theta * b)
        .collect();
    let mut atoms: Vec<([f64; 2], f64)> =
        old.atoms.iter().map(|&(p, w)| (p, (1.0 - theta) * w)).collect();
    for &(p, w) in &new.atoms {
        if let Some(slot) = atoms.iter_mut().find(|(q, _)| *q == p) {
            slot.1 += theta * w;
        } else {
            atoms.push((p, theta * w));
        }
    }
    atoms.retain(|&(_, w)| w > 1e-300);
    Candidate { density, atoms }
}

/// Solves the extended Minkowski problem for the prescribed Euclidean
/// surface-area measure `μ` (a centered probability measure not
/// supported in a hyperplane). Returns the recovered α-concave measure
/// and a certificate report; non-convergence is reported, not an error.
pub fn solve(
    mu: &DiscreteMeasure,
    config: &SolveConfig,
) -> Result<(AlphaConcaveMeasure, SolveReport)> {
    let alpha = config.alpha;
    let n = mu.dim();
    if !alpha_admissible(alpha, n) {
        return Err(Error::AlphaOutOfRange { alpha, dim: n });
    }
    let nec = check_necessary_conditions(mu, Some(1e-6))?;
    if !nec.pass {
        return Err(Error::Precondition(format!(
            "surface-area measure fails necessary conditions: barycenter norm {:.3e}, affine hull dim {} of {}",
            nec.barycenter_norm, nec.affine_hull_dim, n
        )));
    }
    let mu = mu.normalized()?;

    // τ prescription keeping the uniform-ball starting objective negative
    let pow = 1.0 + alpha * n as f64 / (1.0 - alpha);
    let omega_n = if n == 1 { 2.0 } else { std::f64::consts::PI };
    let rhs = (1.0 - alpha) * omega_n.powf(-alpha / (1.0 - alpha))
        / (-alpha * mu.first_moment().max(1e-12));
    let tau = (0.75 * rhs).powf(1.0 / pow);

    let grid = match &config.grid {
        Some(axes) => Grid::new(axes.clone())?,
        None => {
            let r = (4.0 * tau).max(1.0);
            let count = if n == 1 { 2001 } else { 129 };
            let axes = (0..n).map(|_| Axis::new(-r, r, count)).collect::<Result<Vec<_>>>()?;
            Grid::new(axes)?
        }
    };

    // initial iterate: uniform density on the τ-ball (clipped to the grid)
    let mut init = vec![0.0f64; grid.len()];
    for i in 0..grid.len() {
        let p = grid.node(i);
        if crate::norm(p) <= tau {
            init[i] = 1.0;
        }
    }
    let m_init = {
        let g = ExtendedGridFunction::new(grid.clone(), init.clone())?;
        integrate(&g, None)?.value
    };
    if m_init <= 0.0 {
        return Err(Error::Precondition(format!(
            "initializer ball of radius {tau:.3e} misses the grid"
        )));
    }
    for v in init.iter_mut() {
        *v /= m_init;
    }
    let mut iterate = Candidate { density: init, atoms: vec![] };

    let theta0 = config.theta.clamp(1e-3, 1.0);
    let mut theta = theta0;
    let mut trace: Vec<f64> = Vec::new();
    let mut c0_trace: Vec<f64> = Vec::new();
    let mut prev: Option<(Candidate, CandidateUpdate, f64)> = None;
    let mut last_update: Option<CandidateUpdate> = None;
    let mut last_pair: Option<(PotentialPair, TransportPlan, DiscreteMeasure)> = None;
    let mut converged = false;
    let mut iterations = 0usize;

    for _iter in 0..config.max_iter {
        iterations += 1;
        // mixing and bisection leave sub-1e−8 mass drift: renormalize so
        // the transport marginals match exactly
        let rho = discretize(&grid, &iterate, config.max_cells)?.normalized()?;
        let (t_val, plan, pair) = solve_ot(&rho, &mu, config)?;
        let dens = ExtendedGridFunction::new(grid.clone(), iterate.density.clone())?;
        let obj = (1.0 - alpha) * f_alpha(&dens, alpha)? - alpha * t_val;

        if let Some((ref prev_it, ref prev_up, prev_obj)) = prev {
            if obj > prev_obj - 1e-12 {
                // reject the step: back off the damping and retry from the
                // previous iterate and its candidate
                theta *= 0.5;
                if theta < 1e-3 {
                    converged = (prev_obj - obj).abs() <= config.tol.max(1e-9);
                    break;
                }
                iterate = mix(&grid, prev_it, &prev_up.candidate, theta);
                continue;
            }
        }

        // accepted
        trace.push(obj);
        let phi1 = {
            // c-transform extension normalized to inf = 0 on the grid
            let ct = c_transform(&mu, &pair.phi_star);
            let mut vals: Vec<f64> = (0..grid.len()).map(|i| ct(grid.node(i))).collect();
            let min_v = vals.iter().copied().fold(f64::INFINITY, f64::min);
            for v in vals.iter_mut() {
                *v -= min_v;
            }
            vals
        };
        let update = candidate_from_potential(&grid, phi1, alpha)?;
        c0_trace.push(update.c0);
        last_pair = Some((pair, plan, rho));

        let stop = if let Some((_, _, prev_obj)) = prev {
            (prev_obj - obj).abs() <= config.tol
        } else {
            false
        };
        prev = Some((iterate.clone(), update_clone(&update), obj));
        last_update = Some(update);
        if stop {
            converged = true;
            break;
        }
        let up_ref = last_update.as_ref().unwrap();
        iterate = mix(&grid, &prev.as_ref().unwrap().0, &up_ref.candidate, theta);
        theta = theta0;
    }

    let update = last_update.ok_or(Error::Precondition("no iteration completed".into()))?;
    let (pair, plan, rho) = last_pair.unwrap();

    // output: base φ₀ = φ₁ + (c+1)/α, density (1 − αφ₀)^{1/α−1}, atoms
    let shift = (update.c0 + 1.0) / alpha;
    let base_vals: Vec<f64> = update.phi1.iter().map(|&v| v + shift).collect();
    let base = ExtendedGridFunction::with_claims(grid.clone(), base_vals, true, true)?;
    let atoms = DiscreteMeasure::new(
        n,
        update.candidate.atoms.iter().map(|a| a.0).collect(),
        update.candidate.atoms.iter().map(|a| a.1).collect(),
        false,
    )?;
    let singular_mass = atoms.total();
    let out = AlphaConcaveMeasure::new(alpha, base, atoms)?;

    // certificates
    let sam = out.euclidean_sam(&SamBinning::Raw)?;
    let sam_residual_w1 = {
        let s = sam.normalized()?;
        let target = mu.normalized()?;
        w1_distance(&s, &target)?
    };
    let violations =
        knott_smith_check(&plan, &rho, &mu, &DualCertificate::Potentials(&pair), 1e-4)?;

    let report = SolveReport {
        objective_trace: trace,
        c0_trace,
        sam_residual_w1,
        knott_smith_violations: violations.len(),
        singular_mass,
        iterations,
        converged,
    };
    Ok((out, report))
}

fn update_clone(u: &CandidateUpdate) -> CandidateUpdate {
    CandidateUpdate {
        candidate: u.candidate.clone(),
        c0: u.c0,
        phi1: u.phi1.clone(),
    }
}

/// Pointwise residual of the Monge–Ampère form
/// `h(∇φ)·det(D²φ) = (1 − αφ)^{(1−α)/α}` with central second
/// differences; summarized by max and mean over the covered region.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ResidualField {
    pub max: f64,
    pub mean: f64,
    pub count: usize,
    #[serde(skip)]
    pub values: Vec<Option<f64>>,
}

pub fn monge_ampere_residual(
    phi: &ExtendedGridFunction,
    h: &ExtendedGridFunction,
    alpha: f64,
) -> Result<ResidualField> {
    let grid = phi.grid();
    if !(alpha < 0.0) {
        return Err(Error::AlphaOutOfRange { alpha, dim: grid.dim() });
    }
    let n = grid.dim();
    let mut values = vec![None::<f64>; grid.len()];
    let mut max = 0.0f64;
    let mut sum = 0.0f64;
    let mut count = 0usize;
    let e = (1.0 - alpha) / alpha;
    for i in 0..grid.len() {
        let m = grid.multi_index(i);
        if !ext::is_finite(phi.value(i)) {
            continue;
        }
        // full interior stencil inside the finite domain
        let mut ok = true;
        for k in 0..n {
            if m[k] == 0 || m[k] + 1 >= grid.axis(k).count {
                ok = false;
                break;
            }
        }
        if !ok {
            continue;
        }
        let at = |d0: isize, d1: isize| -> f64 {
            let mm = [(m[0] as isize + d0) as usize, (m[1] as isize + d1) as usize];
            phi.value(grid.index(mm))
        };
        let h0 = grid.axis(0).spacing();
        let stencil_finite = if n == 1 {
            ext::is_finite(at(-1, 0)) && ext::is_finite(at(1, 0))
        } else {
            [-1, 0, 1].iter().all(|&a| {
                [-1, 0, 1].iter().all(|&b| ext::is_finite(at(a, b)))
            })
        };
        if !stencil_finite {
            continue;
        }
        let (grad, det) = if n == 1 {
            let g = (at(1, 0) - at(-1, 0)) / (2.0 * h0);
            let d2 = (at(1, 0) - 2.0 * at(0, 0) + at(-1, 0)) / (h0 * h0);
            ([g, 0.0], d2)
        } else {
            let h1 = grid.axis(1).spacing();
            let g = [
                (at(1, 0) - at(-1, 0)) / (2.0 * h0),
                (at(0, 1) - at(0, -1)) / (2.0 * h1),
            ];
            let dxx = (at(1, 0) - 2.0 * at(0, 0) + at(-1, 0)) / (h0 * h0);
            let dyy = (at(0, 1) - 2.0 * at(0, 0) + at(0, -1)) / (h1 * h1);
            let dxy = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * h0 * h1);
            (g, dxx * dyy - dxy * dxy)
        };
        let hval = h.interpolate(grad);
        if !ext::is_finite(hval) {
            continue;
        }
        let rhs = (1.0 - alpha * phi.value(i)).powf(e);
        let r = (hval * det - rhs).abs();
        values[i] = Some(r);
        max = max.max(r);
        sum += r;
        count += 1;
    }
    if count == 0 {
        return Err(Error::Precondition(
            "no interior node carries a full Hessian stencil".into(),
        ));
    }
    Ok(ResidualField { max, mean: sum / count as f64, count, values })
}
