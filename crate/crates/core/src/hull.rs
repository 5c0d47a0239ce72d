//! Lower convex hulls in one, two, and three dimensions.
//!
//! These are the geometric engine behind the discrete Legendre transform:
//! the lower hull of a function graph is the exact piecewise-linear
//! representation of its double conjugate, and the facet gradients are
//! the breakpoints of the conjugate itself.

use crate::{Error, Result};

// ---------------------------------------------------------------------------
// 1-D: lower hull of a graph {(x_i, v_i)} with x strictly increasing
// ---------------------------------------------------------------------------

/// Indices of the lower-hull vertices of `(xs[i], vs[i])`, left to right.
/// With `keep_collinear`, points lying exactly on a hull edge stay in the
/// vertex list (needed for smallest-index argmax tie-breaking).
pub fn lower_hull_1d(xs: &[f64], vs: &[f64], keep_collinear: bool) -> Vec<usize> {
    assert_eq!(xs.len(), vs.len());
    let n = xs.len();
    let mut hull: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            // cross < 0 ⇔ (b) strictly above segment (a)-(i)
            let cross = (xs[b] - xs[a]) * (vs[i] - vs[a]) - (xs[i] - xs[a]) * (vs[b] - vs[a]);
            let drop_b = if keep_collinear { cross < 0.0 } else { cross <= 0.0 };
            if drop_b {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    hull
}

/// Piecewise-linear evaluation of the lower hull at `x`; `+∞` outside
/// `[xs.first(), xs.last()]`.
pub fn eval_hull_1d(xs: &[f64], vs: &[f64], hull: &[usize], x: f64) -> f64 {
    if hull.is_empty() {
        return f64::INFINITY;
    }
    let (x0, x1) = (xs[hull[0]], xs[*hull.last().unwrap()]);
    if x < x0 - 1e-12 * (1.0 + x0.abs()) || x > x1 + 1e-12 * (1.0 + x1.abs()) {
        return f64::INFINITY;
    }
    if hull.len() == 1 {
        return vs[hull[0]];
    }
    // binary search for the bracketing edge
    let mut lo = 0usize;
    let mut hi = hull.len() - 1;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if xs[hull[mid]] <= x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (a, b) = (hull[lo], hull[hi]);
    if xs[b] == xs[a] {
        return vs[a].min(vs[b]);
    }
    let t = ((x - xs[a]) / (xs[b] - xs[a])).clamp(0.0, 1.0);
    vs[a] + t * (vs[b] - vs[a])
}

// ---------------------------------------------------------------------------
// 2-D: planar convex hull (Andrew monotone chain)
// ---------------------------------------------------------------------------

/// Indices of the convex hull of a planar point set, counterclockwise,
/// starting from the lexicographically smallest point. Collinear interior
/// points are dropped. Degenerate inputs return what is spanned: a single
/// point or the two extreme points of a segment.
pub fn convex_hull_2d(pts: &[[f64; 2]]) -> Vec<usize> {
    let n = pts.len();
    if n == 0 {
        return vec![];
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        pts[a][0].partial_cmp(&pts[b][0]).unwrap().then(pts[a][1].partial_cmp(&pts[b][1]).unwrap())
    });
    order.dedup_by(|&mut a, &mut b| pts[a] == pts[b]);
    if order.len() == 1 {
        return order;
    }
    let cross = |o: usize, a: usize, b: usize| -> f64 {
        (pts[a][0] - pts[o][0]) * (pts[b][1] - pts[o][1])
            - (pts[a][1] - pts[o][1]) * (pts[b][0] - pts[o][0])
    };
    let mut lower: Vec<usize> = Vec::new();
    for &i in &order {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], i) <= 0.0 {
            lower.pop();
        }
        lower.push(i);
    }
    let mut upper: Vec<usize> = Vec::new();
    for &i in order.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], i) <= 0.0 {
            upper.pop();
        }
        upper.push(i);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    if lower.is_empty() {
        // all collinear: keep the two extremes
        vec![order[0], *order.last().unwrap()]
    } else {
        lower
    }
}

/// Signed test that `p` lies inside (or within `tol` of) the ccw polygon.
pub fn inside_polygon(poly: &[[f64; 2]], p: [f64; 2], tol: f64) -> bool {
    match poly.len() {
        0 => false,
        1 => (p[0] - poly[0][0]).abs() <= tol && (p[1] - poly[0][1]).abs() <= tol,
        2 => {
            // segment: distance to it
            let (a, b) = (poly[0], poly[1]);
            let d = [b[0] - a[0], b[1] - a[1]];
            let len2 = d[0] * d[0] + d[1] * d[1];
            let t = if len2 == 0.0 {
                0.0
            } else {
                (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
            };
            let q = [a[0] + t * d[0], a[1] + t * d[1]];
            ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt() <= tol
        }
        _ => {
            for i in 0..poly.len() {
                let a = poly[i];
                let b = poly[(i + 1) % poly.len()];
                let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
                let edge = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
                if cross < -tol * (1.0 + edge) {
                    return false;
                }
            }
            true
        }
    }
}

// ---------------------------------------------------------------------------
// 3-D: lower convex hull (quickhull), for 2-D function graphs
// ---------------------------------------------------------------------------

/// One affine piece of a lower hull: the plane `z = ⟨grad, (x, y)⟩ + offset`.
#[derive(Debug, Clone, Copy)]
pub struct LowerFacet {
    pub grad: [f64; 2],
    pub offset: f64,
    /// Indices (into the input point set) of the triangle that spans it.
    pub verts: [usize; 3],
}

#[derive(Debug, Clone)]
struct Face {
    v: [usize; 3],
    n: [f64; 3], // outward, unnormalized
    d: f64,      // plane ⟨n, x⟩ = d
    adj: [usize; 3],
    outside: Vec<u32>,
    alive: bool,
}

#[inline]
fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

#[inline]
fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
fn norm3(a: [f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

/// Downward-facing facets of the convex hull of `pts`, i.e. the graph of
/// the convex envelope of the point set seen as a function of `(x, y)`.
///
/// Degenerate configurations are handled before the quickhull loop: a
/// coplanar cloud with a non-vertical common plane yields that single
/// facet; a cloud whose `(x, y)` projection is a point or a line cannot
/// carry a 2-D envelope and is an error here (callers special-case it).
pub fn lower_facets_3d(pts: &[[f64; 3]]) -> Result<Vec<LowerFacet>> {
    let n = pts.len();
    if n < 3 {
        return Err(Error::InvalidValues(format!("need >= 3 points for a 2-D envelope, got {n}")));
    }
    let mut scale = 0.0f64;
    for p in pts {
        for c in p {
            scale = scale.max(c.abs());
        }
    }
    let eps = 1e-12 * scale.max(1.0);

    for attempt in 0..4 {
        match quickhull(pts, eps * 10f64.powi(attempt)) {
            Ok(faces) => {
                let mut out = Vec::new();
                for f in &faces {
                    if !f.alive {
                        continue;
                    }
                    let nn = norm3(f.n);
                    if f.n[2] < -1e-9 * nn {
                        out.push(facet_from_plane(f));
                    }
                }
                if out.is_empty() {
                    return Err(Error::InvalidValues("hull has no downward facet".into()));
                }
                return Ok(out);
            }
            Err(HullDegeneracy::Coplanar(plane)) => {
                if plane.n[2].abs() <= 1e-9 * norm3(plane.n) {
                    return Err(Error::InvalidValues(
                        "point cloud is vertical-planar; no 2-D envelope".into(),
                    ));
                }
                let mut nrm = plane.n;
                let mut d = plane.d;
                if nrm[2] > 0.0 {
                    nrm = [-nrm[0], -nrm[1], -nrm[2]];
                    d = -d;
                }
                let f = Face { v: plane.verts, n: nrm, d, adj: [0; 3], outside: vec![], alive: true };
                return Ok(vec![facet_from_plane(&f)]);
            }
            Err(HullDegeneracy::Collinear) => {
                return Err(Error::InvalidValues(
                    "point cloud is collinear; no 2-D envelope".into(),
                ));
            }
            Err(HullDegeneracy::Numerical) => continue,
        }
    }
    Err(Error::InvalidValues("convex hull did not stabilize".into()))
}

fn facet_from_plane(f: &Face) -> LowerFacet {
    // ⟨n, (x,y,z)⟩ = d with n_z < 0  →  z = (d − n_x x − n_y y)/n_z
    LowerFacet {
        grad: [-f.n[0] / f.n[2], -f.n[1] / f.n[2]],
        offset: f.d / f.n[2],
        verts: f.v,
    }
}

struct PlaneInfo {
    n: [f64; 3],
    d: f64,
    verts: [usize; 3],
}

enum HullDegeneracy {
    Collinear,
    Coplanar(PlaneInfo),
    Numerical,
}

fn quickhull(pts: &[[f64; 3]], eps: f64) -> std::result::Result<Vec<Face>, HullDegeneracy> {
    let n = pts.len();

    // Initial simplex from extreme points.
    let mut i0 = 0;
    let mut i1 = 0;
    for axis in 0..3 {
        let lo = (0..n).min_by(|&a, &b| pts[a][axis].total_cmp(&pts[b][axis])).unwrap();
        let hi = (0..n).max_by(|&a, &b| pts[a][axis].total_cmp(&pts[b][axis])).unwrap();
        if (pts[hi][axis] - pts[lo][axis]).abs()
            > (pts[i1][0] - pts[i0][0]).abs().max((pts[i1][1] - pts[i0][1]).abs()).max((pts[i1][2] - pts[i0][2]).abs())
        {
            i0 = lo;
            i1 = hi;
        }
    }
    if norm3(sub3(pts[i1], pts[i0])) <= eps {
        return Err(HullDegeneracy::Collinear);
    }
    let dir = sub3(pts[i1], pts[i0]);
    let mut i2 = usize::MAX;
    let mut best = eps;
    for j in 0..n {
        let c = cross3(dir, sub3(pts[j], pts[i0]));
        let dist = norm3(c) / norm3(dir);
        if dist > best {
            best = dist;
            i2 = j;
        }
    }
    if i2 == usize::MAX {
        return Err(HullDegeneracy::Collinear);
    }
    let nrm = cross3(sub3(pts[i1], pts[i0]), sub3(pts[i2], pts[i0]));
    let nn = norm3(nrm);
    let d = dot3(nrm, pts[i0]);
    let mut i3 = usize::MAX;
    let mut best = eps * nn;
    for j in 0..n {
        let s = (dot3(nrm, pts[j]) - d).abs();
        if s > best {
            best = s;
            i3 = j;
        }
    }
    if i3 == usize::MAX {
        return Err(HullDegeneracy::Coplanar(PlaneInfo { n: nrm, d, verts: [i0, i1, i2] }));
    }
    // Orient so that i3 is below the (i0,i1,i2) plane; the face planes
    // themselves are rebuilt from scratch just below.
    if dot3(nrm, pts[i3]) > d {
        std::mem::swap(&mut i1, &mut i2);
    }

    let mk_face = |v: [usize; 3], adj: [usize; 3]| -> Face {
        let nr = cross3(sub3(pts[v[1]], pts[v[0]]), sub3(pts[v[2]], pts[v[0]]));
        Face { v, n: nr, d: dot3(nr, pts[v[0]]), adj, outside: vec![], alive: true }
    };
    // Tetrahedron (i0,i1,i2,i3); faces oriented outward.
    let mut faces = vec![
        mk_face([i0, i1, i2], [1, 2, 3]), // opposite i3
        mk_face([i1, i0, i3], [0, 3, 2]), // opposite i2
        mk_face([i0, i2, i3], [0, 1, 3]), // wait: fixed below
        mk_face([i2, i1, i3], [0, 0, 0]),
    ];
    // Rebuild adjacency from scratch: cheap and safe for 4 faces.
    faces[2] = mk_face([i2, i0, i3], [0, 0, 0]);
    rebuild_adjacency(&mut faces);
    // Verify orientation: all four remaining points below each plane.
    let centroid = {
        let mut c = [0.0; 3];
        for &i in &[i0, i1, i2, i3] {
            for k in 0..3 {
                c[k] += pts[i][k] / 4.0;
            }
        }
        c
    };
    for f in &mut faces {
        if dot3(f.n, centroid) > f.d {
            f.v.swap(1, 2);
            f.n = cross3(sub3(pts[f.v[1]], pts[f.v[0]]), sub3(pts[f.v[2]], pts[f.v[0]]));
            f.d = dot3(f.n, pts[f.v[0]]);
        }
    }
    rebuild_adjacency(&mut faces);

    // Conflict assignment.
    let above = |f: &Face, j: usize| -> f64 { dot3(f.n, pts[j]) - f.d - eps * norm3(f.n) };
    for j in 0..n {
        if j == i0 || j == i1 || j == i2 || j == i3 {
            continue;
        }
        for fi in 0..faces.len() {
            if above(&faces[fi], j) > 0.0 {
                faces[fi].outside.push(j as u32);
                break;
            }
        }
    }

    let mut queue: Vec<usize> = (0..faces.len()).collect();
    let mut guard = 0usize;
    while let Some(fi) = queue.pop() {
        if !faces[fi].alive || faces[fi].outside.is_empty() {
            continue;
        }
        guard += 1;
        if guard > 20 * n + 100 {
            return Err(HullDegeneracy::Numerical);
        }
        // Farthest conflict point of this face.
        let apex = *faces[fi]
            .outside
            .iter()
            .max_by(|&&a, &&b| {
                let da = dot3(faces[fi].n, pts[a as usize]);
                let db = dot3(faces[fi].n, pts[b as usize]);
                da.total_cmp(&db)
            })
            .unwrap() as usize;

        // Visible set (BFS over adjacency).
        let mut visible = vec![fi];
        let mut seen = std::collections::HashSet::new();
        seen.insert(fi);
        let mut stack = vec![fi];
        while let Some(f) = stack.pop() {
            for k in 0..3 {
                let g = faces[f].adj[k];
                if faces[g].alive && !seen.contains(&g) && above(&faces[g], apex) > 0.0 {
                    seen.insert(g);
                    visible.push(g);
                    stack.push(g);
                }
            }
        }
        // Horizon edges: (a, b, outer_face, outer_slot).
        let mut horizon: Vec<(usize, usize, usize)> = Vec::new();
        for &f in &visible {
            for k in 0..3 {
                let g = faces[f].adj[k];
                if !seen.contains(&g) {
                    horizon.push((faces[f].v[k], faces[f].v[(k + 1) % 3], g));
                }
            }
        }
        if horizon.is_empty() {
            return Err(HullDegeneracy::Numerical);
        }
        // Orphans.
        let mut orphans: Vec<u32> = Vec::new();
        for &f in &visible {
            orphans.append(&mut faces[f].outside);
            faces[f].alive = false;
        }
        // New faces, one per horizon edge.
        let mut edge_map: std::collections::HashMap<(usize, usize), (usize, usize)> =
            std::collections::HashMap::new();
        let mut new_ids = Vec::with_capacity(horizon.len());
        for &(a, b, outer) in &horizon {
            let id = faces.len();
            let mut f = mk_face([a, b, apex], [outer, usize::MAX, usize::MAX]);
            if norm3(f.n) <= eps * eps {
                // Degenerate sliver; keep going — its plane coincides with a
                // neighbor and the guard counter bounds the loop.
                f.n = faces[outer].n;
                f.d = faces[outer].d;
            }
            faces.push(f);
            // Stitch the outer neighbor's slot for edge (b, a).
            let of = outer;
            for k in 0..3 {
                let (x, y) = (faces[of].v[k], faces[of].v[(k + 1) % 3]);
                if x == b && y == a {
                    faces[of].adj[k] = id;
                }
            }
            edge_map.insert((b, apex), (id, 1));
            edge_map.insert((apex, a), (id, 2));
            new_ids.push(id);
        }
        // Stitch apex edges between new faces.
        for &id in &new_ids {
            let (a, b) = (faces[id].v[0], faces[id].v[1]);
            if let Some(&(g, _)) = edge_map.get(&(apex, b)) {
                faces[id].adj[1] = g;
            }
            if let Some(&(g, _)) = edge_map.get(&(a, apex)) {
                faces[id].adj[2] = g;
            }
            if faces[id].adj[1] == usize::MAX || faces[id].adj[2] == usize::MAX {
                return Err(HullDegeneracy::Numerical);
            }
        }
        // Reassign orphans.
        for j in orphans {
            if j as usize == apex {
                continue;
            }
            for &id in &new_ids {
                if above(&faces[id], j as usize) > 0.0 {
                    faces[id].outside.push(j);
                    break;
                }
            }
        }
        queue.extend(new_ids);
    }
    Ok(faces)
}

fn rebuild_adjacency(faces: &mut [Face]) {
    let mut map: std::collections::HashMap<(usize, usize), (usize, usize)> =
        std::collections::HashMap::new();
    for (fi, f) in faces.iter().enumerate() {
        for k in 0..3 {
            map.insert((f.v[k], f.v[(k + 1) % 3]), (fi, k));
        }
    }
    for fi in 0..faces.len() {
        for k in 0..3 {
            let key = (faces[fi].v[(k + 1) % 3], faces[fi].v[k]);
            if let Some(&(g, _)) = map.get(&key) {
                faces[fi].adj[k] = g;
            }
        }
    }
}

/// Max over facet planes: the convex envelope of the lifted point set,
/// valid inside the domain hull (masking is the caller's business).
pub fn eval_facets(facets: &[LowerFacet], p: [f64; 2]) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for f in facets {
        let v = f.grad[0] * p[0] + f.grad[1] * p[1] + f.offset;
        if v > best {
            best = v;
        }
    }
    best
}
