//! Incremental Bowyer-Watson Delaunay triangulation with a super-triangle.
//! Co-circular ambiguities are resolved by a post-pass that flips each
//! ambiguous quad onto its lexicographically smallest diagonal.

use super::GraphError;

/// Relative margin on the squared circumradius used when classifying a point
/// as strictly inside a circumcircle.
const COCIRCULAR_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
struct Circumcircle {
    cx: f64,
    cy: f64,
    r2: f64,
}

fn circumcircle(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> Option<Circumcircle> {
    let bx = b[0] - a[0];
    let by = b[1] - a[1];
    let cx = c[0] - a[0];
    let cy = c[1] - a[1];
    let d = 2.0 * (bx * cy - by * cx);
    if d.abs() < 1e-12 {
        return None; // collinear
    }
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    let ux = (cy * b2 - by * c2) / d;
    let uy = (bx * c2 - cx * b2) / d;
    Some(Circumcircle {
        cx: a[0] + ux,
        cy: a[1] + uy,
        r2: ux * ux + uy * uy,
    })
}

fn dist2(p: [f64; 2], cc: &Circumcircle) -> f64 {
    let dx = p[0] - cc.cx;
    let dy = p[1] - cc.cy;
    dx * dx + dy * dy
}

/// Delaunay triangles over `points` (indices into the input).
pub fn delaunay_triangles(points: &[[f64; 2]]) -> Result<Vec<[usize; 3]>, GraphError> {
    let n = points.len();
    if n < 3 {
        return Err(GraphError::TooFewPoints(n));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if points[i] == points[j] {
                return Err(GraphError::DuplicatePoints(i, j));
            }
        }
    }

    // super-triangle well outside the data
    let (mut min_x, mut min_y, mut max_x, mut max_y) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for p in points {
        min_x = min_x.min(p[0]);
        min_y = min_y.min(p[1]);
        max_x = max_x.max(p[0]);
        max_y = max_y.max(p[1]);
    }
    let span = (max_x - min_x).max(max_y - min_y).max(1.0);
    let mid_x = (min_x + max_x) / 2.0;
    let mid_y = (min_y + max_y) / 2.0;
    let big = 64.0 * span;
    let mut verts: Vec<[f64; 2]> = points.to_vec();
    verts.push([mid_x - 2.0 * big, mid_y - big]);
    verts.push([mid_x + 2.0 * big, mid_y - big]);
    verts.push([mid_x, mid_y + 2.0 * big]);
    let (s0, s1, s2) = (n, n + 1, n + 2);

    let mut tris: Vec<[usize; 3]> = vec![[s0, s1, s2]];
    for p_idx in 0..n {
        let p = verts[p_idx];
        let mut bad = Vec::new();
        for (t_idx, t) in tris.iter().enumerate() {
            let cc = match circumcircle(verts[t[0]], verts[t[1]], verts[t[2]]) {
                Some(cc) => cc,
                None => continue,
            };
            if dist2(p, &cc) < cc.r2 {
                bad.push(t_idx);
            }
        }
        // cavity boundary = edges not shared between two bad triangles
        let mut boundary: Vec<(usize, usize)> = Vec::new();
        for &t_idx in &bad {
            let t = tris[t_idx];
            for e in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                let key = (e.0.min(e.1), e.0.max(e.1));
                if let Some(pos) = boundary.iter().position(|&b| b == key) {
                    boundary.remove(pos);
                } else {
                    boundary.push(key);
                }
            }
        }
        for &t_idx in bad.iter().rev() {
            tris.swap_remove(t_idx);
        }
        for (a, b) in boundary {
            tris.push([a, b, p_idx]);
        }
    }

    tris.retain(|t| t.iter().all(|&v| v < n));
    if tris.is_empty() {
        return Err(GraphError::DegeneratePointSet(
            "no triangles after removing the bounding triangle".into(),
        ));
    }
    let mut covered = vec![false; n];
    for t in &tris {
        for &v in t {
            covered[v] = true;
        }
    }
    if covered.iter().any(|c| !c) {
        return Err(GraphError::DegeneratePointSet(
            "point not covered by any triangle".into(),
        ));
    }

    legalize(points, &mut tris);
    for t in &mut tris {
        t.sort_unstable();
    }
    tris.sort_unstable();
    Ok(tris)
}

/// Flip pass: restore the empty-circumcircle property where the incremental
/// pass left it violated, and pin co-circular quads to the lexicographically
/// smallest diagonal.
fn legalize(points: &[[f64; 2]], tris: &mut Vec<[usize; 3]>) {
    let max_rounds = 4 * tris.len().max(4);
    for _ in 0..max_rounds {
        let mut flipped = false;
        'scan: for a_idx in 0..tris.len() {
            for b_idx in (a_idx + 1)..tris.len() {
                let (ta, tb) = (tris[a_idx], tris[b_idx]);
                let shared: Vec<usize> =
                    ta.iter().copied().filter(|v| tb.contains(v)).collect();
                if shared.len() != 2 {
                    continue;
                }
                let opp_a = *ta.iter().find(|v| !shared.contains(v)).unwrap();
                let opp_b = *tb.iter().find(|v| !shared.contains(v)).unwrap();
                let cc = match circumcircle(points[ta[0]], points[ta[1]], points[ta[2]]) {
                    Some(cc) => cc,
                    None => continue,
                };
                let rel = (dist2(points[opp_b], &cc) - cc.r2) / cc.r2;
                let cur = (shared[0].min(shared[1]), shared[0].max(shared[1]));
                let alt = (opp_a.min(opp_b), opp_a.max(opp_b));
                let should_flip = if rel < -COCIRCULAR_MARGIN {
                    true
                } else {
                    rel <= COCIRCULAR_MARGIN && alt < cur && flip_is_valid(points, cur, alt)
                };
                if should_flip {
                    tris[a_idx] = [alt.0, alt.1, cur.0];
                    tris[b_idx] = [alt.0, alt.1, cur.1];
                    flipped = true;
                    break 'scan;
                }
            }
        }
        if !flipped {
            break;
        }
    }
}

/// The alternative diagonal is only usable when the quad is convex, i.e. the
/// two diagonals actually cross.
fn flip_is_valid(points: &[[f64; 2]], cur: (usize, usize), alt: (usize, usize)) -> bool {
    let orient = |a: [f64; 2], b: [f64; 2], c: [f64; 2]| {
        (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    };
    let (p, q) = (points[cur.0], points[cur.1]);
    let (r, s) = (points[alt.0], points[alt.1]);
    orient(r, s, p) * orient(r, s, q) < 0.0 && orient(p, q, r) * orient(p, q, s) < 0.0
}

/// Delaunay edge set over `points`.
pub fn delaunay_triangulation(points: &[[f64; 2]]) -> Result<Vec<(usize, usize)>, GraphError> {
    let tris = delaunay_triangles(points)?;
    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(tris.len() * 3);
    for t in &tris {
        for e in [(t[0], t[1]), (t[0], t[2]), (t[1], t[2])] {
            edges.push(e);
        }
    }
    edges.sort_unstable();
    edges.dedup();
    Ok(edges)
}

/// Check the empty-circumcircle property of a triangle set at a relative
/// margin; used by tests and the dataset validator.
pub fn empty_circumcircle_holds(points: &[[f64; 2]], tris: &[[usize; 3]], margin: f64) -> bool {
    for t in tris {
        let cc = match circumcircle(points[t[0]], points[t[1]], points[t[2]]) {
            Some(cc) => cc,
            None => return false,
        };
        for (i, p) in points.iter().enumerate() {
            if t.contains(&i) {
                continue;
            }
            if dist2(*p, &cc) < cc.r2 * (1.0 - margin) {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    #[test]
    fn triangle_of_three_points() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let edges = delaunay_triangulation(&pts).unwrap();
        assert_eq!(edges, vec![(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn square_gets_lexicographically_smallest_diagonal() {
        let pts = [[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]];
        let edges = delaunay_triangulation(&pts).unwrap();
        assert_eq!(edges.len(), 5);
        // diagonals are (0,3) and (1,2); the smaller one must win
        assert!(edges.contains(&(0, 3)));
        assert!(!edges.contains(&(1, 2)));
    }

    #[test]
    fn random_points_satisfy_empty_circumcircle() {
        let mut rng = rng::derive(4, &[20]);
        let pts: Vec<[f64; 2]> = (0..20)
            .map(|_| [rng.random::<f64>() * 10.0, rng.random::<f64>() * 10.0])
            .collect();
        let tris = delaunay_triangles(&pts).unwrap();
        assert!(empty_circumcircle_holds(&pts, &tris, 1e-9));
    }

    #[test]
    fn rejects_degenerate_inputs() {
        assert!(matches!(
            delaunay_triangulation(&[[0.0, 0.0], [1.0, 1.0]]),
            Err(GraphError::TooFewPoints(2))
        ));
        assert!(matches!(
            delaunay_triangulation(&[[0.0, 0.0], [0.0, 0.0], [1.0, 1.0]]),
            Err(GraphError::DuplicatePoints(0, 1))
        ));
        assert!(matches!(
            delaunay_triangulation(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]]),
            Err(GraphError::DegeneratePointSet(_))
        ));
    }
}
