//! Discrete optimal transport for the maximal-correlation functional
//! `T(ϱ, μ) = sup { Σ π_ij ⟨x_i, y_j⟩ }` over couplings of two finite
//! measures with equal totals.
//!
//! The exact backend is a transportation simplex on the dense bipartite
//! graph; its dual variables give the Kantorovich pair `(φ, φ*)` with
//! `φ(x_i) + φ*(y_j) ≥ ⟨x_i, y_j⟩` everywhere and equality on the plan
//! support. The entropic backend is matrix scaling on
//! `exp(⟨x, y⟩/ε)` with a feasibility rounding pass.

use serde::Serialize;

use crate::alphafun::DiscreteMeasure;
use crate::extgrid::{ext, ExtendedGridFunction};
use crate::legendre;
use crate::{dot, Error, Result};

/// Tolerance on marginal agreement of a valid plan.
pub const MARGINAL_TOL: f64 = 1e-9;

/// Sparse coupling between the supports of two measures.
#[derive(Debug, Clone, Serialize)]
pub struct TransportPlan {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub weights: Vec<f64>,
    pub n_rows: usize,
    pub n_cols: usize,
}

impl TransportPlan {
    pub fn new(
        rows: Vec<usize>,
        cols: Vec<usize>,
        weights: Vec<f64>,
        row_marginal: &[f64],
        col_marginal: &[f64],
    ) -> Result<Self> {
        let plan = TransportPlan {
            rows,
            cols,
            weights,
            n_rows: row_marginal.len(),
            n_cols: col_marginal.len(),
        };
        plan.validate(row_marginal, col_marginal)?;
        Ok(plan)
    }

    pub fn validate(&self, row_marginal: &[f64], col_marginal: &[f64]) -> Result<()> {
        let mut rs = vec![0.0f64; self.n_rows];
        let mut cs = vec![0.0f64; self.n_cols];
        for k in 0..self.weights.len() {
            if self.weights[k] < -MARGINAL_TOL {
                return Err(Error::InvalidValues(format!(
                    "negative plan entry {} at ({}, {})",
                    self.weights[k], self.rows[k], self.cols[k]
                )));
            }
            rs[self.rows[k]] += self.weights[k];
            cs[self.cols[k]] += self.weights[k];
        }
        let scale = row_marginal.iter().sum::<f64>().max(1.0);
        for i in 0..self.n_rows {
            if (rs[i] - row_marginal[i]).abs() > MARGINAL_TOL * scale {
                return Err(Error::InvalidValues(format!(
                    "row {} marginal {} != {}",
                    i, rs[i], row_marginal[i]
                )));
            }
        }
        for j in 0..self.n_cols {
            if (cs[j] - col_marginal[j]).abs() > MARGINAL_TOL * scale {
                return Err(Error::InvalidValues(format!(
                    "col {} marginal {} != {}",
                    j, cs[j], col_marginal[j]
                )));
            }
        }
        Ok(())
    }

    /// Writes the plan as a sparse triplet CSV `i,j,weight`.
    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["i", "j", "weight"])?;
        for k in 0..self.weights.len() {
            w.write_record(&[
                self.rows[k].to_string(),
                self.cols[k].to_string(),
                format!("{}", self.weights[k]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Kantorovich dual pair on the two supports, normalized so that the
/// potential vanishes at the lexicographically smallest source point.
#[derive(Debug, Clone, Serialize)]
pub struct PotentialPair {
    pub phi: Vec<f64>,
    pub phi_star: Vec<f64>,
    pub duality_gap: f64,
}

fn check_pair(rho: &DiscreteMeasure, mu: &DiscreteMeasure) -> Result<()> {
    if rho.is_empty() || mu.is_empty() || rho.total() <= 0.0 || mu.total() <= 0.0 {
        return Err(Error::EmptySupport);
    }
    let scale = rho.total().max(mu.total());
    if (rho.total() - mu.total()).abs() > 1e-9 * scale {
        return Err(Error::UnequalTotals(rho.total(), mu.total()));
    }
    Ok(())
}

/// Exact maximal correlation: value, optimal plan, and dual potentials.
/// Solves the balanced transportation problem to optimality; the duality
/// gap of the returned pair is rounding-level.
pub fn max_correlation_exact(
    rho: &DiscreteMeasure,
    mu: &DiscreteMeasure,
) -> Result<(f64, TransportPlan, PotentialPair)> {
    check_pair(rho, mu)?;
    // strip zero-weight atoms, remembering original indices
    let ridx: Vec<usize> = (0..rho.len()).filter(|&i| rho.weights()[i] > 0.0).collect();
    let cidx: Vec<usize> = (0..mu.len()).filter(|&j| mu.weights()[j] > 0.0).collect();
    let a: Vec<f64> = ridx.iter().map(|&i| rho.weights()[i]).collect();
    let b: Vec<f64> = cidx.iter().map(|&j| mu.weights()[j]).collect();
    let xs: Vec<[f64; 2]> = ridx.iter().map(|&i| rho.points()[i]).collect();
    let ys: Vec<[f64; 2]> = cidx.iter().map(|&j| mu.points()[j]).collect();

    let sol = transportation_simplex(&|i, j| dot(xs[i], ys[j]), xs.len(), ys.len(), &a, &b)?;

    // map back to original indices, sorted for deterministic output
    let mut triplets: Vec<(usize, usize, f64)> = sol
        .basis
        .iter()
        .filter(|&&(_, _, f)| f > 0.0)
        .map(|&(i, j, f)| (ridx[i], cidx[j], f))
        .collect();
    triplets.sort_by(|p, q| p.0.cmp(&q.0).then(p.1.cmp(&q.1)));
    let plan = TransportPlan::new(
        triplets.iter().map(|t| t.0).collect(),
        triplets.iter().map(|t| t.1).collect(),
        triplets.iter().map(|t| t.2).collect(),
        rho.weights(),
        mu.weights(),
    )?;

    // potentials on the full supports; zero-weight atoms get the
    // c-transform closure of the reduced duals
    let mut phi = vec![0.0f64; rho.len()];
    let mut phi_star = vec![0.0f64; mu.len()];
    for (k, &i) in ridx.iter().enumerate() {
        phi[i] = sol.phi[k];
    }
    for (k, &j) in cidx.iter().enumerate() {
        phi_star[j] = sol.psi[k];
    }
    for i in 0..rho.len() {
        if rho.weights()[i] == 0.0 {
            phi[i] = cidx
                .iter()
                .enumerate()
                .map(|(k, _)| dot(rho.points()[i], ys[k]) - sol.psi[k])
                .fold(f64::NEG_INFINITY, f64::max);
        }
    }
    for j in 0..mu.len() {
        if mu.weights()[j] == 0.0 {
            phi_star[j] = ridx
                .iter()
                .enumerate()
                .map(|(k, _)| dot(mu.points()[j], xs[k]) - sol.phi[k])
                .fold(f64::NEG_INFINITY, f64::max);
        }
    }
    // normalize: φ = 0 at the lexicographically smallest source point
    let i0 = (0..rho.len())
        .min_by(|&p, &q| {
            rho.points()[p][0]
                .total_cmp(&rho.points()[q][0])
                .then(rho.points()[p][1].total_cmp(&rho.points()[q][1]))
        })
        .unwrap();
    let shift = phi[i0];
    for v in phi.iter_mut() {
        *v -= shift;
    }
    for v in phi_star.iter_mut() {
        *v += shift;
    }

    let primal = sol.value;
    let dual: f64 = rho.weights().iter().zip(&phi).map(|(w, p)| w * p).sum::<f64>()
        + mu.weights().iter().zip(&phi_star).map(|(w, p)| w * p).sum::<f64>();
    let pair = PotentialPair { phi, phi_star, duality_gap: (primal - dual).abs() };
    Ok((primal, plan, pair))
}

struct SimplexSolution {
    basis: Vec<(usize, usize, f64)>,
    phi: Vec<f64>,
    psi: Vec<f64>,
    value: f64,
}

/// Transportation simplex maximizing `Σ π_ij · score(i, j)` with
/// supplies `a` and demands `b` (balanced). Dual variables satisfy
/// `φ_i + ψ_j ≥ score(i, j)` with equality on the basis.
fn transportation_simplex(
    score: &dyn Fn(usize, usize) -> f64,
    n: usize,
    m: usize,
    a: &[f64],
    b: &[f64],
) -> Result<SimplexSolution> {
    let mut scale = 1.0f64;
    for i in 0..n {
        for j in 0..m {
            scale = scale.max(score(i, j).abs());
        }
    }
    let tol = 1e-12 * scale;

    // Northwest-corner initial basis: exactly n + m − 1 cells.
    let mut flow: Vec<f64> = Vec::with_capacity(n + m - 1);
    let mut brow: Vec<usize> = Vec::new();
    let mut bcol: Vec<usize> = Vec::new();
    {
        let mut ar = a.to_vec();
        let mut bc = b.to_vec();
        let (mut i, mut j) = (0usize, 0usize);
        loop {
            let f = ar[i].min(bc[j]);
            brow.push(i);
            bcol.push(j);
            flow.push(f);
            ar[i] -= f;
            bc[j] -= f;
            if i == n - 1 && j == m - 1 {
                break;
            }
            if ar[i] <= bc[j] && i < n - 1 {
                i += 1;
            } else if j < m - 1 {
                j += 1;
            } else {
                i += 1;
            }
        }
    }

    // Tree adjacency: node r in 0..n are rows, n + c are columns.
    let nodes = n + m;
    let rebuild_adjacency = |brow: &[usize], bcol: &[usize]| -> Vec<Vec<(usize, usize)>> {
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nodes];
        for (k, (&i, &j)) in brow.iter().zip(bcol.iter()).enumerate() {
            adj[i].push((n + j, k));
            adj[n + j].push((i, k));
        }
        adj
    };

    let compute_duals = |adj: &[Vec<(usize, usize)>]| -> (Vec<f64>, Vec<f64>) {
        let mut phi = vec![f64::NAN; n];
        let mut psi = vec![f64::NAN; m];
        phi[0] = 0.0;
        let mut stack = vec![0usize];
        let mut seen = vec![false; nodes];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &(v, _k) in &adj[u] {
                if seen[v] {
                    continue;
                }
                seen[v] = true;
                if v >= n {
                    psi[v - n] = score(u, v - n) - phi[u];
                } else {
                    phi[v] = score(v, u - n) - psi[u - n];
                }
                stack.push(v);
            }
        }
        (phi, psi)
    };

    let mut adj = rebuild_adjacency(&brow, &bcol);
    let (mut phi, mut psi) = compute_duals(&adj);

    let max_pivots = 400 * (n + m) + 20_000;
    let mut degenerate_streak = 0usize;
    let mut bland = false;
    for _pivot in 0..max_pivots {
        // entering cell: max positive score excess ⟨x,y⟩ − φ − ψ
        let mut enter: Option<(usize, usize)> = None;
        let mut best = tol;
        'scan: for i in 0..n {
            for j in 0..m {
                let excess = score(i, j) - phi[i] - psi[j];
                if excess > best {
                    best = excess;
                    enter = Some((i, j));
                    if bland {
                        break 'scan;
                    }
                }
            }
        }
        let Some((ei, ej)) = enter else {
            // optimal
            let value: f64 =
                flow.iter().zip(brow.iter().zip(&bcol)).map(|(f, (&i, &j))| f * score(i, j)).sum();
            let basis: Vec<(usize, usize, f64)> =
                brow.iter().zip(&bcol).zip(&flow).map(|((&i, &j), &f)| (i, j, f)).collect();
            return Ok(SimplexSolution { basis, phi, psi, value });
        };

        // unique tree path from row node ei to col node n + ej
        let mut parent = vec![usize::MAX; nodes];
        let mut parent_arc = vec![usize::MAX; nodes];
        let mut stack = vec![ei];
        let mut seen = vec![false; nodes];
        seen[ei] = true;
        while let Some(u) = stack.pop() {
            if u == n + ej {
                break;
            }
            for &(v, k) in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    parent[v] = u;
                    parent_arc[v] = k;
                    stack.push(v);
                }
            }
        }
        // walk back from n+ej to ei, collecting arcs; entering arc is +δ,
        // path arcs alternate starting with −δ at the μ end
        let mut path_arcs: Vec<usize> = Vec::new();
        let mut u = n + ej;
        while u != ei {
            path_arcs.push(parent_arc[u]);
            u = parent[u];
        }
        let mut delta = f64::INFINITY;
        let mut leave_pos = usize::MAX;
        for (pos, &k) in path_arcs.iter().enumerate() {
            if pos % 2 == 0 {
                // decreased arcs
                if flow[k] < delta {
                    delta = flow[k];
                    leave_pos = pos;
                }
            }
        }
        if leave_pos == usize::MAX {
            return Err(Error::ScalingNotConverged(max_pivots));
        }
        for (pos, &k) in path_arcs.iter().enumerate() {
            if pos % 2 == 0 {
                flow[k] -= delta;
            } else {
                flow[k] += delta;
            }
        }
        let leave_arc = path_arcs[leave_pos];
        brow[leave_arc] = ei;
        bcol[leave_arc] = ej;
        flow[leave_arc] = delta;
        adj = rebuild_adjacency(&brow, &bcol);
        let duals = compute_duals(&adj);
        phi = duals.0;
        psi = duals.1;

        if delta <= tol {
            degenerate_streak += 1;
            if degenerate_streak > n + m {
                bland = true;
            }
        } else {
            degenerate_streak = 0;
            bland = false;
        }
    }
    Err(Error::ScalingNotConverged(max_pivots))
}

/// Exact 1-Wasserstein distance between two measures of equal total:
/// the minimal transport cost under the Euclidean ground distance.
pub fn w1_distance(rho: &DiscreteMeasure, mu: &DiscreteMeasure) -> Result<f64> {
    check_pair(rho, mu)?;
    let ridx: Vec<usize> = (0..rho.len()).filter(|&i| rho.weights()[i] > 0.0).collect();
    let cidx: Vec<usize> = (0..mu.len()).filter(|&j| mu.weights()[j] > 0.0).collect();
    let a: Vec<f64> = ridx.iter().map(|&i| rho.weights()[i]).collect();
    let b: Vec<f64> = cidx.iter().map(|&j| mu.weights()[j]).collect();
    let dist = |i: usize, j: usize| -> f64 {
        let p = rho.points()[ridx[i]];
        let q = mu.points()[cidx[j]];
        -(((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt())
    };
    let sol = transportation_simplex(&dist, ridx.len(), cidx.len(), &a, &b)?;
    Ok(-sol.value)
}

/// Entropic (matrix-scaling) approximation of the maximal correlation at
/// regularization `eps`, with a rounding pass that restores the marginals
/// exactly. Returns the value together with the rounded plan.
pub fn max_correlation_entropic(
    rho: &DiscreteMeasure,
    mu: &DiscreteMeasure,
    eps: f64,
    max_iter: usize,
) -> Result<(f64, TransportPlan)> {
    let (value, plan, _) = max_correlation_entropic_with_duals(rho, mu, eps, max_iter)?;
    Ok((value, plan))
}

/// Entropic solve that also returns the scaling potentials. They are
/// feasible for the dual (`φ + φ* ≥ ⟨x, y⟩`) but their gap reflects the
/// regularization, not rounding.
pub fn max_correlation_entropic_with_duals(
    rho: &DiscreteMeasure,
    mu: &DiscreteMeasure,
    eps: f64,
    max_iter: usize,
) -> Result<(f64, TransportPlan, PotentialPair)> {
    check_pair(rho, mu)?;
    if !(eps > 0.0) {
        return Err(Error::InvalidValues(format!("epsilon = {eps} must be positive")));
    }
    let ridx: Vec<usize> = (0..rho.len()).filter(|&i| rho.weights()[i] > 0.0).collect();
    let cidx: Vec<usize> = (0..mu.len()).filter(|&j| mu.weights()[j] > 0.0).collect();
    let n = ridx.len();
    let m = cidx.len();
    let a: Vec<f64> = ridx.iter().map(|&i| rho.weights()[i]).collect();
    let b: Vec<f64> = cidx.iter().map(|&j| mu.weights()[j]).collect();
    let s: Vec<f64> = ridx
        .iter()
        .flat_map(|&i| cidx.iter().map(move |&j| dot(rho.points()[i], mu.points()[j])))
        .collect();

    let lse = |it: &mut dyn Iterator<Item = f64>| -> f64 {
        let vals: Vec<f64> = it.collect();
        let mx = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !mx.is_finite() {
            return mx;
        }
        mx + vals.iter().map(|v| (v - mx).exp()).sum::<f64>().ln()
    };

    let mut lam = vec![0.0f64; n];
    let mut muv = vec![0.0f64; m];
    let mut converged = false;
    for _ in 0..max_iter {
        for i in 0..n {
            lam[i] = eps
                * (lse(&mut (0..m).map(|j| (s[i * m + j] - muv[j]) / eps)) - a[i].ln());
        }
        for j in 0..m {
            muv[j] = eps * (lse(&mut (0..n).map(|i| (s[i * m + j] - lam[i]) / eps)) - b[j].ln());
        }
        // marginal violation of the implied plan
        let mut viol = 0.0f64;
        for i in 0..n {
            let row: f64 = (0..m).map(|j| ((s[i * m + j] - lam[i] - muv[j]) / eps).exp()).sum();
            viol = viol.max((row - a[i]).abs());
        }
        if viol <= 1e-9 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::ScalingNotConverged(max_iter));
    }

    // plan and rounding to the exact marginals
    let mut p: Vec<f64> =
        (0..n * m).map(|k| ((s[k] - lam[k / m] - muv[k % m]) / eps).exp()).collect();
    for i in 0..n {
        let row: f64 = (0..m).map(|j| p[i * m + j]).sum();
        let r = if row > 0.0 { (a[i] / row).min(1.0) } else { 0.0 };
        for j in 0..m {
            p[i * m + j] *= r;
        }
    }
    for j in 0..m {
        let col: f64 = (0..n).map(|i| p[i * m + j]).sum();
        let c = if col > 0.0 { (b[j] / col).min(1.0) } else { 0.0 };
        for i in 0..n {
            p[i * m + j] *= c;
        }
    }
    let err_a: Vec<f64> =
        (0..n).map(|i| a[i] - (0..m).map(|j| p[i * m + j]).sum::<f64>()).collect();
    let err_b: Vec<f64> =
        (0..m).map(|j| b[j] - (0..n).map(|i| p[i * m + j]).sum::<f64>()).collect();
    let ea: f64 = err_a.iter().sum();
    if ea > 0.0 {
        for i in 0..n {
            for j in 0..m {
                p[i * m + j] += err_a[i] * err_b[j] / ea;
            }
        }
    }

    let value: f64 = (0..n * m).map(|k| p[k] * s[k]).sum();
    let mut rows = Vec::new();
    let mut cols = Vec::new();
    let mut weights = Vec::new();
    for i in 0..n {
        for j in 0..m {
            if p[i * m + j] > 0.0 {
                rows.push(ridx[i]);
                cols.push(cidx[j]);
                weights.push(p[i * m + j]);
            }
        }
    }
    let plan = TransportPlan::new(rows, cols, weights, rho.weights(), mu.weights())?;

    // scaling duals on the full supports (c-transform closure off-support)
    let mut phi = vec![0.0f64; rho.len()];
    let mut phi_star = vec![0.0f64; mu.len()];
    for (k, &i) in ridx.iter().enumerate() {
        phi[i] = lam[k];
    }
    for (k, &j) in cidx.iter().enumerate() {
        phi_star[j] = muv[k];
    }
    for i in 0..rho.len() {
        if rho.weights()[i] == 0.0 {
            phi[i] = cidx
                .iter()
                .enumerate()
                .map(|(k, &j)| dot(rho.points()[i], mu.points()[j]) - muv[k])
                .fold(f64::NEG_INFINITY, f64::max);
        }
    }
    for j in 0..mu.len() {
        if mu.weights()[j] == 0.0 {
            phi_star[j] = ridx
                .iter()
                .enumerate()
                .map(|(k, &i)| dot(mu.points()[j], rho.points()[i]) - lam[k])
                .fold(f64::NEG_INFINITY, f64::max);
        }
    }
    let dual: f64 = rho.weights().iter().zip(&phi).map(|(w, p)| w * p).sum::<f64>()
        + mu.weights().iter().zip(&phi_star).map(|(w, p)| w * p).sum::<f64>();
    let pair = PotentialPair { phi, phi_star, duality_gap: (dual - value).abs() };
    Ok((value, plan, pair))
}

/// The dual object a Knott–Smith check runs against.
pub enum DualCertificate<'a> {
    Potentials(&'a PotentialPair),
    /// A convex base on a grid; plan sources are snapped to grid nodes.
    GridFunction(&'a ExtendedGridFunction),
}

/// One violating pair with its slack.
#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub row: usize,
    pub col: usize,
    pub slack: f64,
}

/// Optimality certification: every positive plan entry `(i, j)` must have
/// `y_j ∈ ∂φ(x_i)`, tested through Fenchel equality for potential pairs
/// or through the affine-minorant test for grid functions.
pub fn knott_smith_check(
    plan: &TransportPlan,
    rho: &DiscreteMeasure,
    mu: &DiscreteMeasure,
    cert: &DualCertificate,
    tol: f64,
) -> Result<Vec<Violation>> {
    let mut out = Vec::new();
    for k in 0..plan.weights.len() {
        if plan.weights[k] <= 0.0 {
            continue;
        }
        let (i, j) = (plan.rows[k], plan.cols[k]);
        let x = rho.points()[i];
        let y = mu.points()[j];
        match cert {
            DualCertificate::Potentials(pair) => {
                let slack = pair.phi[i] + pair.phi_star[j] - dot(x, y);
                if slack > tol {
                    out.push(Violation { row: i, col: j, slack });
                }
            }
            DualCertificate::GridFunction(phi) => {
                let grid = phi.grid();
                // snap the source to its nearest node
                let mut multi = [0usize; 2];
                for kk in 0..grid.dim() {
                    let ax = grid.axis(kk);
                    let t = ((x[kk] - ax.min) / ax.spacing()).round();
                    multi[kk] = (t.max(0.0) as usize).min(ax.count - 1);
                }
                let node = grid.index(multi);
                if !ext::is_finite(phi.value(node)) {
                    return Err(Error::BoundaryNode { index: node });
                }
                if !legendre::subgradient_contains(phi, node, y, tol)? {
                    // slack: worst affine-minorant violation
                    let x0 = grid.node(node);
                    let v0 = phi.value(node);
                    let mut slack = 0.0f64;
                    for q in 0..grid.len() {
                        let v = phi.value(q);
                        if !ext::is_finite(v) {
                            continue;
                        }
                        let xq = grid.node(q);
                        let gap =
                            v0 + y[0] * (xq[0] - x0[0]) + y[1] * (xq[1] - x0[1]) - v;
                        slack = slack.max(gap);
                    }
                    out.push(Violation { row: i, col: j, slack });
                }
            }
        }
    }
    Ok(out)
}

/// The first-moment bound constant
/// `c_μ = (1/2n) · inf { ∫ |⟨y, e⟩ − l| dμ : e ∈ S^{n−1}, l ∈ ℝ }`,
/// approximated over `directions` spread unit vectors (the axis
/// directions are always included) with `l` the exact weighted median.
/// Direction sampling can only overestimate the infimum, so the result
/// is an upper bound on the true constant.
pub fn first_moment_bound_constant(mu: &DiscreteMeasure, directions: usize) -> Result<f64> {
    if mu.is_empty() || mu.total() <= 0.0 {
        return Err(Error::EmptySupport);
    }
    let distinct = {
        let p0 = mu.points()[0];
        mu.points().iter().any(|p| (p[0] - p0[0]).abs() > 1e-15 || (p[1] - p0[1]).abs() > 1e-15)
    };
    if !distinct {
        return Err(Error::DegenerateMeasure("single-point support".into()));
    }
    let n = mu.dim();
    let mut dirs: Vec<[f64; 2]> = Vec::new();
    if n == 1 {
        dirs.push([1.0, 0.0]);
        dirs.push([-1.0, 0.0]);
    } else {
        dirs.extend_from_slice(&[[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]);
        // golden-angle circle lattice
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        for k in 0..directions.max(4) {
            let theta = 2.0 * std::f64::consts::PI * ((k as f64 * golden) % 1.0);
            dirs.push([theta.cos(), theta.sin()]);
        }
    }
    let total = mu.total();
    let mut best = f64::INFINITY;
    for e in dirs {
        // weighted median of ⟨y, e⟩ minimizes the L¹ deviation exactly
        let mut ts: Vec<(f64, f64)> =
            mu.points().iter().zip(mu.weights()).map(|(p, &w)| (dot(*p, e), w)).collect();
        ts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut acc = 0.0;
        let mut median = ts[ts.len() - 1].0;
        for &(t, w) in &ts {
            acc += w;
            if acc >= 0.5 * total {
                median = t;
                break;
            }
        }
        let dev: f64 = ts.iter().map(|&(t, w)| w * (t - median).abs()).sum::<f64>() / total;
        best = best.min(dev);
    }
    Ok(best / (2.0 * n as f64))
}

/// Difference-quotient check of the conjugate's first variation
/// `d/dt (φ + t g)*(y) |_{t=0⁺} = −g(∇φ*(y))`.
#[derive(Debug, Clone, Serialize)]
pub struct BermanReport {
    pub quotients: Vec<(f64, f64)>,
    pub extrapolated: f64,
    pub expected: f64,
    pub residual: f64,
    /// Node realizing `∇φ*(y)`.
    pub grad_node: usize,
}

/// Evaluates the quotient `((φ+tg)*(y) − φ*(y))/t` over a decreasing `ts`
/// sequence against `−g(∇φ*(y))`. The conjugates are exact discrete sups
/// at the single point `y`; `∇φ*(y)` is the argmax node, and a distant
/// near-tie means `φ*` is not differentiable there.
pub fn berman_derivative_check(
    phi: &ExtendedGridFunction,
    g: &ExtendedGridFunction,
    y: [f64; 2],
    ts: &[f64],
) -> Result<BermanReport> {
    let grid = phi.grid();
    if g.grid() != grid {
        return Err(Error::InvalidGrid("φ and g must share a grid".into()));
    }
    if ts.is_empty() || ts.iter().any(|&t| t <= 0.0) || ts.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidValues("t-sequence must be positive decreasing".into()));
    }
    // lemma hypotheses: g bounded below holds on a validated grid; φ(o)
    // and g(o) finite
    let origin_inside = (0..grid.dim()).all(|k| grid.axis(k).min <= 0.0 && grid.axis(k).max >= 0.0);
    if !origin_inside
        || !ext::is_finite(phi.interpolate([0.0, 0.0]))
        || !ext::is_finite(g.interpolate([0.0, 0.0]))
    {
        return Err(Error::Precondition("φ(o) and g(o) must be finite".into()));
    }

    let sup_at = |t: f64| -> (f64, usize) {
        let mut best = f64::NEG_INFINITY;
        let mut arg = usize::MAX;
        for i in 0..grid.len() {
            let (pv, gv) = (phi.value(i), g.value(i));
            if !ext::is_finite(pv) || !ext::is_finite(gv) {
                continue;
            }
            let v = dot(grid.node(i), y) - pv - t * gv;
            if v > best {
                best = v;
                arg = i;
            }
        }
        (best, arg)
    };
    let (base_val, grad_node) = sup_at(0.0);
    if grad_node == usize::MAX {
        return Err(Error::Improper);
    }
    // differentiability of φ* at y: no distant near-maximizer
    let scale = base_val.abs().max(1.0);
    let spacing = (0..grid.dim()).map(|k| grid.axis(k).spacing()).fold(0.0f64, f64::max);
    let x0 = grid.node(grad_node);
    for i in 0..grid.len() {
        let pv = phi.value(i);
        if !ext::is_finite(pv) {
            continue;
        }
        let v = dot(grid.node(i), y) - pv;
        let p = grid.node(i);
        let dist = ((p[0] - x0[0]).powi(2) + (p[1] - x0[1]).powi(2)).sqrt();
        if v >= base_val - 1e-9 * scale && dist > 2.5 * spacing {
            return Err(Error::Nondifferentiable { index: i });
        }
    }

    let mut quotients = Vec::with_capacity(ts.len());
    for &t in ts {
        let (vt, _) = sup_at(t);
        quotients.push((t, (vt - base_val) / t));
    }
    let extrapolated = match quotients.len() {
        1 => quotients[0].1,
        _ => {
            let (t1, q1) = quotients[quotients.len() - 2];
            let (t2, q2) = quotients[quotients.len() - 1];
            (t1 * q2 - t2 * q1) / (t1 - t2)
        }
    };
    let expected = -g.value(grad_node);
    Ok(BermanReport {
        quotients,
        extrapolated,
        expected,
        residual: (extrapolated - expected).abs(),
        grad_node,
    })
}
