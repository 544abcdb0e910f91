//! Convex hulls in the plane and in space.
//!
//! The 3-D hull is a quickhull with outside sets and a distance tolerance
//! relative to the point cloud's extent. Coplanar triangles are merged into
//! facets afterwards, so a cube comes back with six facets.

use std::collections::{HashMap, VecDeque};

use super::polytope::{Facet, Polytope};
use crate::error::{Error, Result};
use crate::geom::{check_dim, Vec3};

const REL_EPS: f64 = 1e-10;
const MERGE_COS: f64 = 1.0 - 1e-9;

/// Convex hull of `points` in dimension `dim` (2 or 3).
pub fn hull(points: &[Vec3], dim: usize) -> Result<Polytope> {
    check_dim(dim)?;
    if points.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
        return Err(Error::Rank("non-finite point".into()));
    }
    if dim == 2 {
        hull2(points)
    } else {
        hull3(points)
    }
}

fn scale_of(points: &[Vec3]) -> f64 {
    let c = points.iter().sum::<Vec3>() / points.len().max(1) as f64;
    points.iter().map(|p| (p - c).norm()).fold(0.0, f64::max)
}

fn hull2(points: &[Vec3]) -> Result<Polytope> {
    if points.len() < 3 {
        return Err(Error::Rank(format!("{} points cannot span the plane", points.len())));
    }
    let scale = scale_of(points);
    let eps = REL_EPS * scale * scale;
    let mut pts: Vec<Vec3> = points.iter().map(|p| Vec3::new(p.x, p.y, 0.0)).collect();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    let cross = |o: &Vec3, a: &Vec3, b: &Vec3| (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
    let mut lower: Vec<Vec3> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= eps {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<Vec3> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= eps {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    let verts = lower;
    if verts.len() < 3 {
        return Err(Error::Rank("points are collinear".into()));
    }
    let m = verts.len();
    let mut facets = Vec::with_capacity(m);
    let mut edges = Vec::with_capacity(m);
    for i in 0..m {
        let (a, b) = (verts[i], verts[(i + 1) % m]);
        let d = b - a;
        let len = d.norm();
        let normal = Vec3::new(d.y, -d.x, 0.0) / len;
        facets.push(Facet {
            normal,
            area: len,
            offset: normal.dot(&a),
        });
        edges.push((i, (i + 1) % m));
    }
    Ok(Polytope::from_parts(2, verts, facets, edges))
}

#[derive(Debug, Clone)]
struct Face {
    v: [usize; 3],
    normal: Vec3,
    offset: f64,
    outside: Vec<usize>,
    alive: bool,
}

impl Face {
    fn new(pts: &[Vec3], v: [usize; 3]) -> Face {
        let n = (pts[v[1]] - pts[v[0]]).cross(&(pts[v[2]] - pts[v[0]]));
        let len = n.norm();
        let normal = if len > 0.0 { n / len } else { n };
        Face {
            v,
            normal,
            offset: normal.dot(&pts[v[0]]),
            outside: Vec::new(),
            alive: true,
        }
    }

    fn dist(&self, p: &Vec3) -> f64 {
        self.normal.dot(p) - self.offset
    }

    fn edges(&self) -> [(usize, usize); 3] {
        let [a, b, c] = self.v;
        [(a, b), (b, c), (c, a)]
    }
}

fn hull3(points: &[Vec3]) -> Result<Polytope> {
    if points.len() < 4 {
        return Err(Error::Rank(format!("{} points cannot span space", points.len())));
    }
    let scale = scale_of(points);
    if !(scale > 0.0) {
        return Err(Error::Rank("all points coincide".into()));
    }
    let eps = REL_EPS * scale;
    let pts = points;

    // initial simplex from extreme points
    let i0 = (0..pts.len()).min_by(|&a, &b| pts[a].x.total_cmp(&pts[b].x)).unwrap();
    let i1 = (0..pts.len())
        .max_by(|&a, &b| (pts[a] - pts[i0]).norm().total_cmp(&(pts[b] - pts[i0]).norm()))
        .unwrap();
    let dir = (pts[i1] - pts[i0]).normalize();
    let line_dist = |p: &Vec3| {
        let d = p - pts[i0];
        (d - d.dot(&dir) * dir).norm()
    };
    let i2 = (0..pts.len())
        .max_by(|&a, &b| line_dist(&pts[a]).total_cmp(&line_dist(&pts[b])))
        .unwrap();
    if line_dist(&pts[i2]) <= eps || (pts[i1] - pts[i0]).norm() <= eps {
        return Err(Error::Rank("points are collinear".into()));
    }
    let pn = (pts[i1] - pts[i0]).cross(&(pts[i2] - pts[i0])).normalize();
    let plane_dist = |p: &Vec3| (p - pts[i0]).dot(&pn);
    let i3 = (0..pts.len())
        .max_by(|&a, &b| plane_dist(&pts[a]).abs().total_cmp(&plane_dist(&pts[b]).abs()))
        .unwrap();
    if plane_dist(&pts[i3]).abs() <= eps {
        return Err(Error::Rank("points are coplanar".into()));
    }

    let interior = (pts[i0] + pts[i1] + pts[i2] + pts[i3]) / 4.0;
    let mut faces: Vec<Face> = Vec::new();
    let mut edge_face: HashMap<(usize, usize), usize> = HashMap::new();
    let add_face = |faces: &mut Vec<Face>, edge_face: &mut HashMap<(usize, usize), usize>, mut v: [usize; 3]| {
        let mut f = Face::new(pts, v);
        if f.dist(&interior) > 0.0 {
            v.swap(1, 2);
            f = Face::new(pts, v);
        }
        let id = faces.len();
        for e in f.edges() {
            edge_face.insert(e, id);
        }
        faces.push(f);
        id
    };
    for v in [[i0, i1, i2], [i0, i1, i3], [i0, i2, i3], [i1, i2, i3]] {
        add_face(&mut faces, &mut edge_face, v);
    }
    let simplex = [i0, i1, i2, i3];
    for (i, p) in pts.iter().enumerate() {
        if simplex.contains(&i) {
            continue;
        }
        if let Some(f) = faces.iter_mut().find(|f| f.dist(p) > eps) {
            f.outside.push(i);
        }
    }

    let mut cursor = 0;
    while cursor < faces.len() {
        if !faces[cursor].alive || faces[cursor].outside.is_empty() {
            cursor += 1;
            continue;
        }
        let start = cursor;
        let apex = *faces[start]
            .outside
            .iter()
            .max_by(|&&a, &&b| faces[start].dist(&pts[a]).total_cmp(&faces[start].dist(&pts[b])))
            .unwrap();
        let p = pts[apex];

        // connected visible region and its horizon
        let mut visible = vec![start];
        let mut seen = std::collections::HashSet::from([start]);
        let mut horizon = Vec::new();
        let mut queue = VecDeque::from([start]);
        while let Some(fi) = queue.pop_front() {
            for (a, b) in faces[fi].edges() {
                let nb = edge_face[&(b, a)];
                if seen.contains(&nb) {
                    continue;
                }
                if faces[nb].dist(&p) > eps {
                    seen.insert(nb);
                    visible.push(nb);
                    queue.push_back(nb);
                } else {
                    horizon.push((a, b));
                }
            }
        }
        // horizon edges of faces already marked visible are not horizon
        horizon.retain(|&(a, b)| !seen.contains(&edge_face[&(b, a)]));

        let mut orphans = Vec::new();
        for &fi in &visible {
            faces[fi].alive = false;
            for e in faces[fi].edges() {
                if edge_face.get(&e) == Some(&fi) {
                    edge_face.remove(&e);
                }
            }
            orphans.append(&mut faces[fi].outside);
        }
        let mut fresh = Vec::with_capacity(horizon.len());
        for (a, b) in horizon {
            let f = Face::new(pts, [a, b, apex]);
            let id = faces.len();
            for e in f.edges() {
                edge_face.insert(e, id);
            }
            faces.push(f);
            fresh.push(id);
        }
        for i in orphans {
            if i == apex {
                continue;
            }
            if let Some(&fi) = fresh.iter().find(|&&fi| faces[fi].dist(&pts[i]) > eps) {
                faces[fi].outside.push(i);
            }
        }
        cursor = 0;
    }

    // merge coplanar triangles into facets
    let live: Vec<&Face> = faces.iter().filter(|f| f.alive).collect();
    let mut facet_of = Vec::with_capacity(live.len());
    let mut groups: Vec<(Vec3, f64, f64)> = Vec::new(); // area-weighted normal sum, area, offset
    for f in &live {
        let [a, b, c] = f.v;
        let area = 0.5 * (pts[b] - pts[a]).cross(&(pts[c] - pts[a])).norm();
        let found = groups
            .iter()
            .position(|(n, _, off)| n.normalize().dot(&f.normal) > MERGE_COS && (off - f.offset).abs() <= 10.0 * eps);
        let gi = match found {
            Some(gi) => {
                groups[gi].0 += area * f.normal;
                groups[gi].1 += area;
                gi
            }
            None => {
                groups.push((area * f.normal, area, f.offset));
                groups.len() - 1
            }
        };
        facet_of.push(gi);
    }

    let mut index = HashMap::new();
    let mut verts = Vec::new();
    let mut remap = |i: usize, verts: &mut Vec<Vec3>| {
        *index.entry(i).or_insert_with(|| {
            verts.push(pts[i]);
            verts.len() - 1
        })
    };
    let mut tri_of_edge: HashMap<(usize, usize), usize> = HashMap::new();
    for (ti, f) in live.iter().enumerate() {
        for e in f.edges() {
            tri_of_edge.insert(e, ti);
        }
    }
    let mut edges = Vec::new();
    for (ti, f) in live.iter().enumerate() {
        for (a, b) in f.edges() {
            if a > b {
                continue;
            }
            let other = tri_of_edge[&(b, a)];
            if facet_of[ti] != facet_of[other] {
                edges.push((a, b));
            }
        }
    }
    let mut used: Vec<usize> = live.iter().flat_map(|f| f.v).collect();
    used.sort_unstable();
    used.dedup();
    for &i in &used {
        remap(i, &mut verts);
    }
    let edges = edges.into_iter().map(|(a, b)| (index[&a], index[&b])).collect();

    let facets = groups
        .into_iter()
        .map(|(nsum, area, _)| {
            let normal = nsum.normalize();
            // offset from the group's own vertices
            let offset = live
                .iter()
                .zip(&facet_of)
                .filter(|(f, _)| f.normal.dot(&normal) > MERGE_COS)
                .flat_map(|(f, _)| f.v)
                .map(|i| normal.dot(&pts[i]))
                .fold(f64::NEG_INFINITY, f64::max);
            Facet { normal, area, offset }
        })
        .collect();
    Ok(Polytope::from_parts(3, verts, facets, edges))
}
