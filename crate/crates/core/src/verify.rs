//! Report-producing diagnostics: necessary conditions on a prescribed
//! surface-area measure, integrability trends, and the gradient/boundary
//! balance identity. All reports are deterministic for a fixed seed.

use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::alphafun::{boundary_flux, euclidean_sam, AlphaConcaveFunction, DiscreteMeasure, SamBinning};
use crate::{dot, norm, Error, Result};

/// Outcome of the necessary-condition check on a candidate measure:
/// finite first moment, barycenter at the origin, support not contained
/// in a hyperplane.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct NecessaryReport {
    pub first_moment_finite: bool,
    pub first_moment: f64,
    pub barycenter_norm: f64,
    pub affine_hull_dim: usize,
    pub pass: bool,
}

/// Relative barycenter tolerance used when none is supplied.
pub const BARYCENTER_TOL: f64 = 1e-8;

pub fn check_necessary_conditions(
    mu: &DiscreteMeasure,
    tol: Option<f64>,
) -> Result<NecessaryReport> {
    if mu.is_empty() || mu.total() <= 0.0 {
        return Err(Error::EmptySupport);
    }
    let tol = tol.unwrap_or(BARYCENTER_TOL);
    let n = mu.dim();
    let first_moment = mu.first_moment() / mu.total();
    let b = mu.barycenter();
    let barycenter_norm = norm(b);

    // affine-hull dimension from the rank of the centered second-moment
    // matrix (robust across weight magnitudes)
    let mut m = [[0.0f64; 2]; 2];
    for (p, &w) in mu.points().iter().zip(mu.weights()) {
        let d = [p[0] - b[0], p[1] - b[1]];
        for r in 0..2 {
            for c in 0..2 {
                m[r][c] += w * d[r] * d[c] / mu.total();
            }
        }
    }
    let affine_hull_dim = if n == 1 {
        usize::from(m[0][0] > 1e-10 * m[0][0].max(1e-300))
            * usize::from(m[0][0] > 0.0)
    } else {
        // eigenvalues of the symmetric 2×2 matrix
        let tr = m[0][0] + m[1][1];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
        let l1 = tr / 2.0 + disc;
        let l2 = tr / 2.0 - disc;
        usize::from(l1 > 1e-10 * l1.max(1e-300)) + usize::from(l2 > 1e-10 * l1)
    };

    let diameter = mu.diameter();
    let pass = first_moment.is_finite()
        && barycenter_norm <= tol * diameter.max(1e-300)
        && affine_hull_dim == n;
    Ok(NecessaryReport {
        first_moment_finite: first_moment.is_finite(),
        first_moment,
        barycenter_norm,
        affine_hull_dim,
        pass,
    })
}

/// Partial integrals of `|x|^p (1 − αφ)^{1/α − l}` over dyadically
/// expanding boxes and their increment ratios; geometric decay of the
/// increments is the computable signature of convergence.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct IntegrabilityReport {
    pub partials: Vec<f64>,
    pub increments: Vec<f64>,
    pub ratios: Vec<f64>,
    pub pass: bool,
}

pub fn check_integrability_trend(
    f: &AlphaConcaveFunction,
    p: f64,
    l: usize,
    levels: usize,
) -> Result<IntegrabilityReport> {
    let n = f.grid().dim();
    if p < 0.0 || l > 2 || n as f64 + p + 1.0 / f.alpha() - l as f64 >= 0.0 {
        return Err(Error::MomentHypothesis { n, l, p, alpha: f.alpha() });
    }
    let levels = levels.max(3);
    let grid = f.grid();
    let pw = f.lifted_power(l as f64);
    let rmax = (0..n)
        .map(|k| grid.axis(k).min.abs().max(grid.axis(k).max.abs()))
        .fold(f64::INFINITY, f64::min);

    let mut partials = Vec::with_capacity(levels);
    for j in 0..levels {
        let r = rmax / 2f64.powi((levels - 1 - j) as i32);
        // masked tensor-trapezoid over the box [−r, r]ⁿ
        let weight: Vec<f64> = (0..grid.len())
            .map(|i| {
                let q = grid.node(i);
                let inside = (0..n).all(|k| q[k].abs() <= r + 1e-12);
                if inside {
                    norm(q).powf(p)
                } else {
                    0.0
                }
            })
            .collect();
        let g = crate::extgrid::ExtendedGridFunction::new(grid.clone(), pw.clone())?;
        partials.push(crate::extgrid::integrate(&g, Some(&weight))?.value);
    }
    let increments: Vec<f64> = partials.windows(2).map(|w| w[1] - w[0]).collect();
    let ratios: Vec<f64> = increments
        .windows(2)
        .map(|w| if w[0].abs() > 1e-300 { w[1] / w[0] } else { 0.0 })
        .collect();
    // sustained decay: every ratio beyond the first strictly below 1
    let pass = !ratios.is_empty() && ratios.iter().skip(1).all(|&r| r < 0.999) && ratios.len() >= 2;
    Ok(IntegrabilityReport { partials, increments, ratios, pass })
}

/// Directional residuals of the balance identity
/// `∫⟨u, ∇φ⟩ f^{1−α} dx + ∮ ⟨u, ν⟩ f dH^{n−1} = 0`.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BalanceReport {
    pub directions: Vec<[f64; 2]>,
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    pub mass_scale: f64,
    pub pass: bool,
}

/// Checks the balance identity over the axis directions and 8 seeded
/// random directions, at the `1e−3`-of-mass-scale threshold.
pub fn check_gradient_balance(f: &AlphaConcaveFunction, seed: u64) -> Result<BalanceReport> {
    let n = f.grid().dim();
    let sam = euclidean_sam(f, &SamBinning::Raw)?;
    let flux = boundary_flux(f)?;
    let mass_scale =
        sam.total() + flux.iter().map(|&(_, m)| m.abs()).sum::<f64>().max(1e-300);

    let mut dirs: Vec<[f64; 2]> = Vec::new();
    for k in 0..n {
        let mut u = [0.0; 2];
        u[k] = 1.0;
        dirs.push(u);
        u[k] = -1.0;
        dirs.push(u);
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..8 {
        if n == 1 {
            let s: f64 = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            dirs.push([s, 0.0]);
        } else {
            let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            dirs.push([th.cos(), th.sin()]);
        }
    }

    let mut residuals = Vec::with_capacity(dirs.len());
    for &u in &dirs {
        let interior: f64 =
            sam.points().iter().zip(sam.weights()).map(|(g, &w)| w * dot(*g, u)).sum();
        let boundary: f64 = flux.iter().map(|&(nu, m)| m * dot(nu, u)).sum();
        residuals.push((interior + boundary).abs());
    }
    let max_residual = residuals.iter().copied().fold(0.0f64, f64::max);
    let pass = max_residual <= 1e-3 * mass_scale;
    Ok(BalanceReport { directions: dirs, residuals, max_residual, mass_scale, pass })
}
