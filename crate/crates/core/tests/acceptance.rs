//! Acceptance suite: one test per criterion, each printing a pass line.
//! Run with `cargo test --test acceptance -- --nocapture` to see them.

use alphamink::alphafun::{
    alpha_scale, euclidean_sam, first_variation_formula,
    first_variation_numeric, pushforward_cells, self_variation_formula, total_mass,
    weighted_moment, AlphaConcaveFunction, CombineOpts, DiscreteMeasure, SamBinning,
};
use alphamink::extgrid::{ext, integrate, ExtendedGridFunction, Grid};
use alphamink::legendre::{biconjugate, conjugate, default_dual_grid, fenchel_young_residual};
use alphamink::minkowski::{monge_ampere_residual, solve, SolveConfig};
use alphamink::transport::{
    berman_derivative_check, first_moment_bound_constant, knott_smith_check,
    max_correlation_entropic, max_correlation_exact, DualCertificate,
};
use alphamink::verify::check_necessary_conditions;
use alphamink::dot;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random convex piecewise-linear grid data: a max of affine functions,
/// optionally restricted to a window.
fn random_convex_pl_1d(rng: &mut ChaCha8Rng) -> ExtendedGridFunction {
    let count = rng.gen_range(41..141);
    let half = rng.gen_range(1.5..4.0);
    let g = Grid::line(-half, half, count).unwrap();
    let pieces: Vec<(f64, f64)> =
        (0..rng.gen_range(3..9)).map(|_| (rng.gen_range(-3.0..3.0), rng.gen_range(-2.0..2.0))).collect();
    let window = if rng.gen_bool(0.3) { Some(rng.gen_range(0.5..half)) } else { None };
    ExtendedGridFunction::from_fn(g, |p| {
        if let Some(w) = window {
            if p[0].abs() > w {
                return f64::INFINITY;
            }
        }
        pieces.iter().map(|&(a, b)| a * p[0] + b).fold(f64::NEG_INFINITY, f64::max)
    })
    .unwrap()
}

fn random_convex_pl_2d(rng: &mut ChaCha8Rng) -> ExtendedGridFunction {
    let count = rng.gen_range(17..33);
    let half = rng.gen_range(1.0..3.0);
    let g = Grid::rect((-half, half, count), (-half, half, count)).unwrap();
    let pieces: Vec<([f64; 2], f64)> = (0..rng.gen_range(3..8))
        .map(|_| ([rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)], rng.gen_range(-2.0..2.0)))
        .collect();
    ExtendedGridFunction::from_fn(g, |p| {
        pieces.iter().map(|&(a, b)| dot(a, p) + b).fold(f64::NEG_INFINITY, f64::max)
    })
    .unwrap()
}

#[test]
fn c01_conjugate_involution() {
    let start = std::time::Instant::now();
    let mut r = rng(101);
    for trial in 0..120 {
        let phi = random_convex_pl_1d(&mut r);
        let b = biconjugate(&phi, phi.grid()).unwrap();
        for i in 0..phi.grid().len() {
            if ext::is_finite(phi.value(i)) {
                assert!(
                    (b.value(i) - phi.value(i)).abs() <= 1e-12,
                    "1-D trial {trial} node {i}: {} vs {}",
                    b.value(i),
                    phi.value(i)
                );
            }
        }
    }
    for trial in 0..80 {
        let phi = random_convex_pl_2d(&mut r);
        let b = biconjugate(&phi, phi.grid()).unwrap();
        for i in 0..phi.grid().len() {
            if ext::is_finite(phi.value(i)) {
                assert!(
                    (b.value(i) - phi.value(i)).abs() <= 1e-12,
                    "2-D trial {trial} node {i}: {} vs {}",
                    b.value(i),
                    phi.value(i)
                );
            }
        }
    }
    let dt = start.elapsed();
    assert!(dt.as_secs_f64() < 10.0, "took {dt:?}");
    println!("criterion 1 (conjugate involution, 200 fixtures): pass in {dt:?}");
}

#[test]
fn c02_conjugate_identities() {
    let g1 = Grid::line(-5.0, 5.0, 201).unwrap();
    let base_1d = ExtendedGridFunction::from_fn(g1.clone(), |p| {
        0.5 * p[0] * p[0] + 0.3 * p[0].abs()
    })
    .unwrap();
    let g2 = Grid::rect((-2.0, 2.0, 41), (-2.0, 2.0, 41)).unwrap();
    let base_2d = ExtendedGridFunction::from_fn(g2.clone(), |p| {
        0.4 * (p[0] * p[0] + p[1] * p[1]) + (p[0] - 0.5 * p[1]).abs()
    })
    .unwrap();

    let mut worst = 0.0f64;
    for base in [&base_1d, &base_2d] {
        let dual = default_dual_grid(base, None).unwrap();
        let star = conjugate(base, &dual).unwrap().function;
        for &lam in &[0.5, 2.0, 7.0] {
            // (λφ)*(y) = λ·φ*(y/λ): evaluate φ* on the scaled dual grid
            let scaled_vals: Vec<f64> =
                base.values().iter().map(|&v| if ext::is_finite(v) { lam * v } else { v }).collect();
            let scaled =
                ExtendedGridFunction::new(base.grid().clone(), scaled_vals).unwrap();
            let left = conjugate(&scaled, &dual).unwrap().function;
            let mut axes = Vec::new();
            for a in dual.axes() {
                axes.push(alphamink::extgrid::Axis::new(a.min / lam, a.max / lam, a.count).unwrap());
            }
            let dual_over = Grid::new(axes).unwrap();
            let right = conjugate(base, &dual_over).unwrap().function;
            for j in 0..dual.len() {
                worst = worst.max((left.value(j) - lam * right.value(j)).abs());
            }
        }
        for &beta in &[-3.0, 0.0, 5.0] {
            // (φ − β)*(y) = φ*(y) + β
            let shifted_vals: Vec<f64> = base
                .values()
                .iter()
                .map(|&v| if ext::is_finite(v) { v - beta } else { v })
                .collect();
            let shifted =
                ExtendedGridFunction::new(base.grid().clone(), shifted_vals).unwrap();
            let left = conjugate(&shifted, &dual).unwrap().function;
            for j in 0..dual.len() {
                worst = worst.max((left.value(j) - (star.value(j) + beta)).abs());
            }
        }
    }
    assert!(worst <= 1e-10, "worst identity residual {worst}");
    println!("criterion 2 (scaling/shift conjugate identities): pass, worst residual {worst:.3e}");
}

#[test]
fn c03_fenchel_young() {
    let mut total_nodes = 0usize;
    let mut coarse_max = 0.0f64;
    let mut fine_max = 0.0f64;
    let mut r = rng(303);
    // 1-D and 2-D fixtures at two resolutions
    for refine in [1usize, 2] {
        let mut worst = 0.0f64;
        let g1 = Grid::line(-4.0, 4.0, 200 * refine + 1).unwrap();
        let h1 = g1.axis(0).spacing();
        let f1 = ExtendedGridFunction::from_fn(g1.clone(), |p| {
            0.5 * p[0] * p[0] + 0.2 * p[0].abs()
        })
        .unwrap();
        let d1 = default_dual_grid(&f1, Some(vec![400 * refine + 1])).unwrap();
        let s1 = conjugate(&f1, &d1).unwrap().function;
        let mut checked = 0;
        while checked < 350 {
            let i = r.gen_range(1..g1.len() - 1);
            match fenchel_young_residual(&f1, &s1, i) {
                Ok(res) => {
                    assert!(res <= 5.0 * h1, "1-D node {i}: residual {res} vs 5h = {}", 5.0 * h1);
                    worst = worst.max(res);
                    checked += 1;
                }
                Err(_) => continue, // kink or boundary: resample
            }
        }
        total_nodes += checked;

        let g2 = Grid::rect((-2.0, 2.0, 40 * refine + 1), (-2.0, 2.0, 40 * refine + 1)).unwrap();
        let h2 = g2.axis(0).spacing();
        let f2 = ExtendedGridFunction::from_fn(g2.clone(), |p| {
            0.6 * p[0] * p[0] + 0.4 * p[1] * p[1] + 0.1 * p[0] * p[1]
        })
        .unwrap();
        let d2 = default_dual_grid(&f2, Some(vec![80 * refine + 1, 80 * refine + 1])).unwrap();
        let s2 = conjugate(&f2, &d2).unwrap().function;
        let mut checked2 = 0;
        while checked2 < 150 {
            let i0 = r.gen_range(1..g2.axis(0).count - 1);
            let i1 = r.gen_range(1..g2.axis(1).count - 1);
            let i = g2.index([i0, i1]);
            match fenchel_young_residual(&f2, &s2, i) {
                Ok(res) => {
                    assert!(res <= 5.0 * h2, "2-D node {i}: residual {res}");
                    worst = worst.max(res);
                    checked2 += 1;
                }
                Err(_) => continue,
            }
        }
        total_nodes += checked2;
        if refine == 1 {
            coarse_max = worst;
        } else {
            fine_max = worst;
        }
    }
    assert!(total_nodes == 1000);
    assert!(
        fine_max <= 0.5 * coarse_max,
        "refinement did not halve the residual: {coarse_max} → {fine_max}"
    );
    println!(
        "criterion 3 (Fenchel-Young at 1000 nodes): pass, max {coarse_max:.3e} → {fine_max:.3e} under refinement"
    );
}

#[test]
fn c04_self_variation_closed_forms() {
    let start = std::time::Instant::now();
    // φ = |x|, α = −1/2
    let g = Grid::line(-2000.0, 2000.0, 80001).unwrap();
    let f_abs = AlphaConcaveFunction::from_base_fn(-0.5, g, |p| p[0].abs()).unwrap();
    let j_abs = total_mass(&f_abs).unwrap().value;
    let dv_abs = self_variation_formula(&f_abs).unwrap();
    assert!((j_abs - 4.0).abs() <= 5e-3, "J(|x|) = {j_abs}");
    assert!(dv_abs.abs() <= 5e-3, "δJ(|x|) = {dv_abs}");

    // φ = x², α = −1/2
    let g2 = Grid::line(-60.0, 60.0, 24001).unwrap();
    let f_quad = AlphaConcaveFunction::from_base_fn(-0.5, g2, |p| p[0] * p[0]).unwrap();
    let j_quad = total_mass(&f_quad).unwrap().value;
    let dv_quad = self_variation_formula(&f_quad).unwrap();
    let pi = std::f64::consts::PI;
    assert!((j_quad - pi / 2f64.sqrt()).abs() <= 5e-3, "J(x²) = {j_quad}");
    assert!((dv_quad - pi / (2.0 * 2f64.sqrt())).abs() <= 5e-3, "δJ(x²) = {dv_quad}");
    let dt = start.elapsed();
    assert!(dt.as_secs_f64() < 5.0, "took {dt:?}");
    println!(
        "criterion 4 (closed forms): pass, J values {j_abs:.4}, {j_quad:.4} in {dt:?}"
    );
}

#[test]
fn c05_variational_formula_agreement() {
    let start = std::time::Instant::now();
    let ts = [0.2, 0.1, 0.05];

    // five 1-D pairs at two resolutions
    let pairs_1d: Vec<(fn(f64) -> f64, fn(f64) -> f64)> = vec![
        (|x| x * x, |x| 0.5 * x * x + x.abs()),
        (|x| x * x, |x| x * x),
        (|x| x.abs() + 0.25 * x * x, |x| x * x),
        (|x| 0.5 * x * x + 0.2 * x.abs(), |x| x.abs() + 0.1 * x * x),
        (|x| x * x + 0.5 * x.abs(), |x| 0.7 * x * x),
    ];
    let mut report: Vec<(f64, f64)> = Vec::new();
    for (pf, pg) in &pairs_1d {
        let mut errs = [0.0f64; 2];
        for (k, count) in [3001usize, 6001].into_iter().enumerate() {
            let g = Grid::line(-60.0, 60.0, count).unwrap();
            let f = AlphaConcaveFunction::from_base_fn(-0.5, g.clone(), |p| pf(p[0])).unwrap();
            let gg = AlphaConcaveFunction::from_base_fn(-0.5, g, |p| pg(p[0])).unwrap();
            let nv = first_variation_numeric(&f, &gg, &ts, CombineOpts::default()).unwrap();
            let vf = first_variation_formula(&f, &gg).unwrap();
            errs[k] = (nv.extrapolated - vf.value()).abs() / (1.0 + vf.value().abs());
        }
        assert!(errs[0] <= 0.02, "1-D pair base error {}", errs[0]);
        assert!(errs[1] <= errs[0] + 1e-12, "no improvement: {} → {}", errs[0], errs[1]);
        report.push((errs[0], errs[1]));
    }

    // three 2-D pairs (α inside (−1/2, 0))
    let pairs_2d: Vec<(fn([f64; 2]) -> f64, fn([f64; 2]) -> f64)> = vec![
        (|p| 0.5 * (p[0] * p[0] + p[1] * p[1]), |p| 0.25 * (p[0] * p[0] + p[1] * p[1])),
        (
            |p| 0.5 * (p[0] * p[0] + p[1] * p[1]),
            |p| 0.3 * (p[0] * p[0] + p[1] * p[1]) + 0.2 * (p[0].abs() + p[1].abs()),
        ),
        (
            |p| 0.6 * p[0] * p[0] + 0.4 * p[1] * p[1],
            |p| 0.5 * (p[0] * p[0] + p[1] * p[1]),
        ),
    ];
    for (pf, pg) in &pairs_2d {
        let mut errs = [0.0f64; 2];
        for (k, count) in [41usize, 81].into_iter().enumerate() {
            let g = Grid::rect((-12.0, 12.0, count), (-12.0, 12.0, count)).unwrap();
            let f = AlphaConcaveFunction::from_base_fn(-0.4, g.clone(), |p| pf(p)).unwrap();
            let gg = AlphaConcaveFunction::from_base_fn(-0.4, g, |p| pg(p)).unwrap();
            let nv = first_variation_numeric(&f, &gg, &ts, CombineOpts::default()).unwrap();
            let vf = first_variation_formula(&f, &gg).unwrap();
            errs[k] = (nv.extrapolated - vf.value()).abs() / (1.0 + vf.value().abs());
        }
        assert!(errs[0] <= 0.02, "2-D pair base error {}", errs[0]);
        assert!(errs[1] <= errs[0] + 1e-12, "no improvement: {} → {}", errs[0], errs[1]);
        report.push((errs[0], errs[1]));
    }
    let dt = start.elapsed();
    assert!(dt.as_secs_f64() < 120.0, "took {dt:?}");
    println!("criterion 5 (variational agreement on 8 pairs): pass, rel errors {report:?} in {dt:?}");
}

#[test]
fn c06_scaling_law() {
    let g = Grid::line(-30.0, 30.0, 6001).unwrap();
    let f = AlphaConcaveFunction::from_base_fn(-0.5, g, |p| p[0] * p[0]).unwrap();
    let ts = [0.1, 0.05];
    let base = first_variation_numeric(&f, &f, &ts, CombineOpts::default()).unwrap();
    for &beta in &[0.5, 2.0] {
        let scaled = alpha_scale(&f, beta).unwrap();
        let up = first_variation_numeric(&f, &scaled, &ts, CombineOpts::default()).unwrap();
        let ratio = up.extrapolated / base.extrapolated;
        assert!((ratio - beta).abs() <= 0.01 * beta, "β = {beta}: ratio {ratio}");
    }
    println!("criterion 6 (scaling law at β = 0.5, 2): pass");
}

#[test]
fn c07_berman_derivative() {
    let g = Grid::line(-6.0, 6.0, 601).unwrap();
    let h = g.axis(0).spacing();
    let phi = ExtendedGridFunction::from_fn(g.clone(), |p| 0.5 * p[0] * p[0]).unwrap();
    let ts = [0.1, 0.05, 0.025];
    let tol = 5.0 * (h + ts[ts.len() - 1]);
    let fixtures: Vec<(ExtendedGridFunction, [f64; 2])> = vec![
        (ExtendedGridFunction::from_fn(g.clone(), |_| 1.0).unwrap(), [1.5, 0.0]),
        (ExtendedGridFunction::from_fn(g.clone(), |p| 0.5 * p[0] * p[0]).unwrap(), [1.5, 0.0]),
        (ExtendedGridFunction::from_fn(g.clone(), |p| 0.8 * p[0]).unwrap(), [-0.75, 0.0]),
    ];
    let mut worst = 0.0f64;
    for (gfun, y) in &fixtures {
        let r = berman_derivative_check(&phi, gfun, *y, &ts).unwrap();
        assert!(r.residual <= tol, "residual {} vs {tol}", r.residual);
        worst = worst.max(r.residual);
    }
    println!("criterion 7 (conjugate first variation): pass, worst residual {worst:.3e} <= {tol:.3e}");
}

#[test]
fn c08_sam_conservation() {
    // corpus: essentially continuous, reflection-symmetric fixtures with
    // 0 < J < ∞, in both dimensions
    struct Fixture {
        f: AlphaConcaveFunction,
        name: &'static str,
    }
    let mut corpus = Vec::new();
    let g1 = Grid::line(-200.0, 200.0, 20001).unwrap();
    corpus.push(Fixture {
        f: AlphaConcaveFunction::from_base_fn(-0.5, g1.clone(), |p| p[0] * p[0]).unwrap(),
        name: "quadratic-1d",
    });
    corpus.push(Fixture {
        f: AlphaConcaveFunction::from_base_fn(-0.5, g1.clone(), |p| {
            p[0].abs() + 0.3 * p[0] * p[0]
        })
        .unwrap(),
        name: "abs-plus-quad-1d",
    });
    corpus.push(Fixture {
        f: AlphaConcaveFunction::from_base_fn(-0.45, g1, |p| 0.5 * p[0] * p[0] + p[0].abs())
            .unwrap(),
        name: "mixed-1d",
    });
    let g2 = Grid::rect((-15.0, 15.0, 151), (-15.0, 15.0, 151)).unwrap();
    corpus.push(Fixture {
        f: AlphaConcaveFunction::from_base_fn(-0.4, g2.clone(), |p| {
            0.5 * (p[0] * p[0] + p[1] * p[1])
        })
        .unwrap(),
        name: "radial-2d",
    });
    corpus.push(Fixture {
        f: AlphaConcaveFunction::from_base_fn(-0.3, g2, |p| {
            0.7 * p[0] * p[0] + 0.4 * p[1] * p[1]
        })
        .unwrap(),
        name: "anisotropic-2d",
    });

    for fx in &corpus {
        let f = &fx.f;
        let j = total_mass(f).unwrap().value;
        assert!(j > 0.0 && j.is_finite());
        let sam = euclidean_sam(f, &SamBinning::Raw).unwrap();
        let target = weighted_moment(f, 0.0, 1).unwrap();
        assert!(
            (sam.total() - target.value).abs() <= 1e-10 + target.estimated_error,
            "{}: total {} vs ∫f^(1-α) {}",
            fx.name,
            sam.total(),
            target.value
        );
        let b = sam.barycenter();
        let bn = (b[0] * b[0] + b[1] * b[1]).sqrt();
        assert!(
            bn <= 1e-6 * sam.diameter(),
            "{}: barycenter {bn} vs diameter {}",
            fx.name,
            sam.diameter()
        );
        let nec = check_necessary_conditions(&sam, Some(1e-6)).unwrap();
        assert_eq!(nec.affine_hull_dim, f.grid().dim(), "{}: rank", fx.name);
        assert!(nec.pass, "{}: necessary conditions", fx.name);
    }
    println!("criterion 8 (SAM conservation/barycenter/rank on {} fixtures): pass", 5);
}

#[test]
fn c09_two_atom_sam() {
    let g = Grid::line(-40.0, 40.0, 8001).unwrap();
    let f = AlphaConcaveFunction::from_base_fn(-0.5, g, |p| p[0].abs()).unwrap();
    let bins = Grid::line(-1.5, 1.5, 61).unwrap();
    let sam = euclidean_sam(&f, &SamBinning::Grid(bins)).unwrap();
    let mut at = [0.0f64; 2];
    let mut stray = 0.0f64;
    for (p, &w) in sam.points().iter().zip(sam.weights()) {
        if (p[0] - 1.0).abs() < 1e-9 {
            at[1] += w;
        } else if (p[0] + 1.0).abs() < 1e-9 {
            at[0] += w;
        } else {
            stray += w;
        }
    }
    assert!((at[0] - 1.0).abs() <= 1e-2 && (at[1] - 1.0).abs() <= 1e-2, "masses {at:?}");
    let cell = 2.0 * f.grid().axis(0).spacing();
    assert!(stray <= cell, "stray mass {stray}");
    println!("criterion 9 (two-atom SAM): pass, masses {:.4}/{:.4}, stray {stray:.2e}", at[0], at[1]);
}

fn random_measure(r: &mut ChaCha8Rng, dim: usize, n: usize, range: f64) -> DiscreteMeasure {
    let pts: Vec<[f64; 2]> = (0..n)
        .map(|_| {
            [
                r.gen_range(-range..range),
                if dim == 2 { r.gen_range(-range..range) } else { 0.0 },
            ]
        })
        .collect();
    let mut ws: Vec<f64> = (0..n).map(|_| r.gen_range(0.05..1.0)).collect();
    let total: f64 = ws.iter().sum();
    for w in ws.iter_mut() {
        *w /= total;
    }
    DiscreteMeasure::new(dim, pts, ws, false).unwrap()
}

fn centered(m: &DiscreteMeasure) -> DiscreteMeasure {
    let b = m.barycenter();
    m.translated([-b[0], -b[1]])
}

#[test]
fn c10_ot_exactness() {
    let start = std::time::Instant::now();
    let mut r = rng(1010);
    let mut worst_gap = 0.0f64;
    for trial in 0..100 {
        let dim = if trial % 2 == 0 { 1 } else { 2 };
        let n = r.gen_range(5..=200);
        let m = r.gen_range(5..=200);
        let rho = random_measure(&mut r, dim, n, 3.0);
        let mu = random_measure(&mut r, dim, m, 3.0);
        let (t, plan, pair) = max_correlation_exact(&rho, &mu).unwrap();
        assert!(
            pair.duality_gap <= 1e-8 * (1.0 + t.abs()),
            "trial {trial} ({n}x{m}): gap {}",
            pair.duality_gap
        );
        worst_gap = worst_gap.max(pair.duality_gap / (1.0 + t.abs()));
        let viol =
            knott_smith_check(&plan, &rho, &mu, &DualCertificate::Potentials(&pair), 1e-6)
                .unwrap();
        assert!(viol.is_empty(), "trial {trial}: {} violations", viol.len());
    }
    let exact_dt = start.elapsed();

    // entropic backend within ε·log(NM) of exact on 50 instances
    let mut worst_margin = f64::NEG_INFINITY;
    for trial in 0..50 {
        let dim = if trial % 2 == 0 { 1 } else { 2 };
        let n = r.gen_range(5..=25);
        let m = r.gen_range(5..=25);
        let rho = random_measure(&mut r, dim, n, 1.5);
        let mu = random_measure(&mut r, dim, m, 1.5);
        let (exact, _, _) = max_correlation_exact(&rho, &mu).unwrap();
        let eps = 0.05;
        let (approx, _) = max_correlation_entropic(&rho, &mu, eps, 200_000).unwrap();
        let bound = eps * ((n * m) as f64).ln();
        let slack = exact - approx;
        assert!(slack <= bound + 1e-9, "trial {trial}: slack {slack} vs bound {bound}");
        assert!(approx <= exact + 1e-9);
        worst_margin = worst_margin.max(slack / bound);
    }
    let dt = start.elapsed();
    println!(
        "criterion 10 (OT exactness): pass, worst relative gap {worst_gap:.2e}, entropic worst margin {:.0}% of bound, exact part {exact_dt:?}, total {dt:?}",
        100.0 * worst_margin
    );
}

#[test]
fn c11_first_moment_bound() {
    let mut r = rng(1111);
    let mus = vec![
        centered(&DiscreteMeasure::new(
            2,
            vec![[1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, -1.0]],
            vec![0.25; 4],
            false,
        )
        .unwrap()),
        centered(&random_measure(&mut r, 2, 9, 2.0)),
        centered(&random_measure(&mut r, 2, 17, 1.0)),
    ];
    let mut checked = 0;
    for (k, mu) in mus.iter().enumerate() {
        let c = first_moment_bound_constant(mu, 256).unwrap();
        assert!(c > 0.0, "fixture {k}: constant {c}");
        for _ in 0..100 {
            let natoms = r.gen_range(2..12);
            let rho = centered(&random_measure(&mut r, 2, natoms, 3.0));
            let (t, _, _) = max_correlation_exact(&rho, mu).unwrap();
            assert!(
                t >= c * rho.first_moment() - 1e-9,
                "fixture {k}: T = {t} < {}",
                c * rho.first_moment()
            );
            checked += 1;
        }
    }
    println!("criterion 11 (first-moment bound, {checked} instances, zero violations): pass");
}

/// Builds a normalized synthetic target: base φ = shape + c with c chosen
/// so that ∫(1−αφ)^{1/α−1} = 1, its binned surface-area measure, and the
/// grid.
fn synthetic_target(
    alpha: f64,
    grid: &Grid,
    shape: impl Fn([f64; 2]) -> f64,
    bin_count: usize,
) -> (AlphaConcaveFunction, DiscreteMeasure) {
    let mass_with = |c: f64| -> f64 {
        let vals: Vec<f64> = (0..grid.len())
            .map(|i| (1.0 - alpha * (shape(grid.node(i)) + c)).powf(1.0 / alpha - 1.0))
            .collect();
        let g = ExtendedGridFunction::new(grid.clone(), vals).unwrap();
        integrate(&g, None).unwrap().value
    };
    // mass decreases in c; bracket and bisect
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    while mass_with(lo) < 1.0 {
        lo -= 1.0;
    }
    while mass_with(hi) > 1.0 {
        hi += 1.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass_with(mid) >= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let c = 0.5 * (lo + hi);
    let f = AlphaConcaveFunction::from_base_fn(alpha, grid.clone(), |p| shape(p) + c).unwrap();
    // μ = pushforward of the normalized density under ∇φ, binned
    let weights = f.lifted_power(1.0);
    let raw = pushforward_cells(f.base(), &weights, &SamBinning::Raw).unwrap();
    let mut lohi = [(f64::INFINITY, f64::NEG_INFINITY); 2];
    for p in raw.points() {
        for k in 0..grid.dim() {
            lohi[k].0 = lohi[k].0.min(p[k]);
            lohi[k].1 = lohi[k].1.max(p[k]);
        }
    }
    let mut axes = Vec::new();
    for k in 0..grid.dim() {
        let pad = 0.05 * (lohi[k].1 - lohi[k].0).max(0.1);
        axes.push(
            alphamink::extgrid::Axis::new(lohi[k].0 - pad, lohi[k].1 + pad, bin_count).unwrap(),
        );
    }
    let bins = Grid::new(axes).unwrap();
    let mu = pushforward_cells(f.base(), &weights, &SamBinning::Grid(bins)).unwrap();
    let mu = centered(&mu.normalized().unwrap());
    (f, mu)
}

#[test]
fn c12_minkowski_round_trips() {
    let start = std::time::Instant::now();
    struct Instance {
        name: &'static str,
        alpha: f64,
        grid: Grid,
        mu: DiscreteMeasure,
    }
    let mut instances = Vec::new();
    {
        let grid = Grid::line(-30.0, 30.0, 3001).unwrap();
        let (_, mu) = synthetic_target(-0.5, &grid, |p| 0.5 * p[0] * p[0], 121);
        instances.push(Instance { name: "1d-quadratic", alpha: -0.5, grid, mu });
    }
    {
        let grid = Grid::line(-40.0, 40.0, 3201).unwrap();
        let (_, mu) = synthetic_target(-0.4, &grid, |p| p[0].abs() + 0.3 * p[0] * p[0], 121);
        instances.push(Instance { name: "1d-abs-quad", alpha: -0.4, grid, mu });
    }
    {
        let grid = Grid::line(-12.0, 12.0, 2401).unwrap();
        let (_, mu) = synthetic_target(-0.5, &grid, |p| p[0].cosh() - 1.0, 121);
        instances.push(Instance { name: "1d-cosh", alpha: -0.5, grid, mu });
    }
    {
        let grid = Grid::rect((-8.0, 8.0, 97), (-8.0, 8.0, 97)).unwrap();
        let (_, mu) = synthetic_target(-0.4, &grid, |p| 0.5 * (p[0] * p[0] + p[1] * p[1]), 17);
        instances.push(Instance { name: "2d-radial", alpha: -0.4, grid, mu });
    }
    {
        let grid = Grid::rect((-8.0, 8.0, 97), (-8.0, 8.0, 97)).unwrap();
        let (_, mu) =
            synthetic_target(-0.3, &grid, |p| 0.6 * p[0] * p[0] + 0.45 * p[1] * p[1], 17);
        instances.push(Instance { name: "2d-anisotropic", alpha: -0.3, grid, mu });
    }

    for inst in &instances {
        let cfg = SolveConfig::new(inst.alpha).with_grid(&inst.grid);
        let (out, report) = solve(&inst.mu, &cfg).unwrap();
        // objective trace nonincreasing with 1e−9 slack
        for w in report.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "{}: trace rises", inst.name);
        }
        assert_eq!(report.knott_smith_violations, 0, "{}", inst.name);
        let diam = inst.mu.diameter();
        assert!(
            report.sam_residual_w1 <= 0.05 * diam,
            "{}: W1 {} vs 5% of {diam}",
            inst.name,
            report.sam_residual_w1
        );
        // essential-continuity consequence: the reconstructed density
        // vanishes at the grid boundary relative to the interior peak
        let g = out.grid();
        let mut ring_max = 0.0f64;
        let mut peak = 0.0f64;
        let e_dens = 1.0 / inst.alpha; // ρ̄ = (1 − αφ₀)^{1/α}
        for i in 0..g.len() {
            let v = out.base.value(i);
            let rho = (1.0 - inst.alpha * v).powf(e_dens);
            if g.on_outer_ring(i) {
                ring_max = ring_max.max(rho);
            }
            peak = peak.max(rho);
        }
        assert!(
            ring_max <= 1e-3 * peak,
            "{}: boundary density {ring_max} vs peak {peak}",
            inst.name
        );
        println!(
            "criterion 12: {} ok (W1 {:.4} <= {:.4}, {} iterations, singular mass {:.2e})",
            inst.name,
            report.sam_residual_w1,
            0.05 * diam,
            report.iterations,
            report.singular_mass
        );
    }
    let dt = start.elapsed();
    assert!(dt.as_secs_f64() < 300.0, "took {dt:?}");
    println!("criterion 12 (round trips on 5 instances): pass in {dt:?}");
}

#[test]
fn c13_two_atom_inverse() {
    let mu =
        DiscreteMeasure::new(1, vec![[-1.0, 0.0], [1.0, 0.0]], vec![0.5, 0.5], false).unwrap();
    let grid = Grid::line(-100.0, 100.0, 4000).unwrap();
    let cfg = SolveConfig::new(-0.5).with_grid(&grid);
    let (out, report) = solve(&mu, &cfg).unwrap();
    assert!(report.converged);

    // even base
    let g = out.grid().clone();
    let mut asym = 0.0f64;
    for i in 0..g.len() {
        let x = g.node(i)[0];
        let j = ((g.axis(0).count - 1) as f64 - (x - g.axis(0).min) / g.axis(0).spacing())
            .round() as usize;
        asym = asym.max((out.base.value(i) - out.base.value(j)).abs());
    }
    assert!(asym <= 1e-3, "asymmetry {asym}");

    // sign-correct subgradient mapping: cells left of 0 have slope near
    // −1, right of 0 near +1
    let sam = out.euclidean_sam(&SamBinning::Raw).unwrap();
    let mut neg = 0.0;
    let mut pos = 0.0;
    for (p, &w) in sam.points().iter().zip(sam.weights()) {
        if (p[0] + 1.0).abs() < 0.05 {
            neg += w;
        } else if (p[0] - 1.0).abs() < 0.05 {
            pos += w;
        }
    }
    assert!(neg >= 0.49 && pos >= 0.49, "gradient masses {neg}/{pos}");
    assert_eq!(report.knott_smith_violations, 0);
    println!("criterion 13 (two-atom inverse): pass, asymmetry {asym:.2e}");
}

#[test]
fn c14_monge_ampere_residual() {
    // rounding-level residual for the quadratic fixture
    let alpha = -0.5;
    let g = Grid::line(-3.0, 3.0, 101).unwrap();
    let phi = ExtendedGridFunction::from_fn(g, |p| 0.5 * p[0] * p[0]).unwrap();
    let dual = Grid::line(-4.0, 4.0, 801).unwrap();
    let h = ExtendedGridFunction::from_fn(dual, |y| {
        (1.0 - alpha * 0.5 * y[0] * y[0]).powf((1.0 - alpha) / alpha)
    })
    .unwrap();
    let r = monge_ampere_residual(&phi, &h, alpha).unwrap();
    let spacing = 6.0 / 100.0;
    assert!(r.max <= 4.0 * spacing * spacing, "quadratic max residual {}", r.max);

    // smooth curved solution: at least 3× reduction per halving
    let mut prev = f64::INFINITY;
    let mut ratios = Vec::new();
    for count in [101usize, 201, 401] {
        let g = Grid::line(-2.0, 2.0, count).unwrap();
        let phi = ExtendedGridFunction::from_fn(g, |p| p[0].cosh() - 1.0).unwrap();
        let dual = Grid::line(-4.0, 4.0, 8 * count).unwrap();
        let h = ExtendedGridFunction::from_fn(dual, |y| {
            let s = (1.0 + y[0] * y[0]).sqrt();
            (1.0 - alpha * (s - 1.0)).powf((1.0 - alpha) / alpha) / s
        })
        .unwrap();
        let r = monge_ampere_residual(&phi, &h, alpha).unwrap();
        if prev.is_finite() {
            ratios.push(prev / r.max);
            assert!(prev / r.max >= 3.0, "reduction {} at count {count}", prev / r.max);
        }
        prev = r.max;
    }
    println!("criterion 14 (Monge-Ampere residual): pass, refinement gains {ratios:?}");
}

#[test]
fn c15_cli_determinism() {
    use std::process::Command;
    let bin = env!("CARGO_BIN_EXE_alphamink");
    let dir = std::env::temp_dir().join("alphamink-acceptance-cli");
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();

    // fixtures
    let base_path = dir.join("base.json");
    {
        let g = Grid::line(-30.0, 30.0, 1201).unwrap();
        let f = ExtendedGridFunction::from_fn_with_claims(g, |p| p[0].abs(), true, true).unwrap();
        f.write_json(&base_path).unwrap();
    }
    let mu_path = dir.join("mu.csv");
    std::fs::write(&mu_path, "x1,weight\n-1,0.5\n1,0.5\n").unwrap();
    let cfg_path = dir.join("cfg.json");
    std::fs::write(
        &cfg_path,
        "{\"alpha\": -0.5, \"grid\": [{\"min\": -50.0, \"max\": 50.0, \"count\": 2000}], \"theta\": 0.5, \"tol\": 1e-7, \"maxIter\": 40, \"otBackend\": \"exact\", \"epsilon\": 0.01, \"seed\": 7}\n",
    )
    .unwrap();

    let cases: Vec<(&str, Vec<String>, Vec<std::path::PathBuf>)> = vec![
        (
            "mass",
            vec!["mass".into(), base_path.display().to_string(), "--alpha".into(), "-0.5".into()],
            vec![],
        ),
        (
            "legendre",
            vec![
                "legendre".into(),
                base_path.display().to_string(),
                "-o".into(),
                dir.join("conj.json").display().to_string(),
            ],
            vec![dir.join("conj.json")],
        ),
        (
            "variation",
            vec![
                "variation".into(),
                base_path.display().to_string(),
                base_path.display().to_string(),
                "--alpha".into(),
                "-0.5".into(),
                "--t-seq".into(),
                "0.2,0.1".into(),
            ],
            vec![],
        ),
        (
            "sam",
            vec![
                "sam".into(),
                base_path.display().to_string(),
                "--alpha".into(),
                "-0.5".into(),
                "-o".into(),
                dir.join("sam.csv").display().to_string(),
            ],
            vec![dir.join("sam.csv")],
        ),
        (
            "ot",
            vec![
                "ot".into(),
                mu_path.display().to_string(),
                mu_path.display().to_string(),
                "--plan".into(),
                dir.join("plan.csv").display().to_string(),
            ],
            vec![dir.join("plan.csv")],
        ),
        (
            "solve",
            vec![
                "solve".into(),
                mu_path.display().to_string(),
                "--alpha".into(),
                "-0.5".into(),
                "--config".into(),
                cfg_path.display().to_string(),
                "-o".into(),
                dir.join("sol").display().to_string(),
                "--seed".into(),
                "7".into(),
            ],
            vec![
                dir.join("sol/base.json"),
                dir.join("sol/density.json"),
                dir.join("sol/atoms.csv"),
                dir.join("sol/report.json"),
            ],
        ),
        (
            "verify",
            vec![
                "verify".into(),
                mu_path.display().to_string(),
                "--check".into(),
                "necessary".into(),
                "--seed".into(),
                "3".into(),
            ],
            vec![],
        ),
    ];

    for (name, args, artifacts) in &cases {
        let mut outputs = Vec::new();
        for _ in 0..2 {
            let out = Command::new(bin).args(args).output().unwrap();
            assert!(
                out.status.success(),
                "{name} failed: {}",
                String::from_utf8_lossy(&out.stderr)
            );
            let mut blob = out.stdout.clone();
            for art in artifacts {
                blob.extend_from_slice(&std::fs::read(art).unwrap());
            }
            outputs.push(blob);
        }
        assert_eq!(outputs[0], outputs[1], "{name}: outputs differ between runs");
    }
    println!("criterion 15 (CLI determinism on {} subcommands): pass", cases.len());
}
