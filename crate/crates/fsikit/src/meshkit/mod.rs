//! 2D triangular mesh with tagged boundary polylines.
//!
//! Meshes are immutable after load/validation. Triangles are
//! counter-clockwise; each boundary edge is listed in the direction that
//! keeps the domain on its left, so the outward normal is the edge direction
//! rotated by -90 degrees.

mod io;
mod vtk;

pub use io::{load_mesh, parse_mesh, write_mesh};
pub use vtk::{export_vtk, FieldData};

use crate::error::{FsiError, Result};
use std::collections::{BTreeMap, BTreeSet, HashMap};

pub type Point = [f64; 2];

/// Boundary edge from node `a` to node `b` (domain on the left) carrying a tag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub a: usize,
    pub b: usize,
    pub tag: String,
}

/// Triangular mesh in the undeformed configuration.
#[derive(Debug, Clone)]
pub struct Mesh2D {
    nodes: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<BoundaryEdge>,
    tag_edges: BTreeMap<String, Vec<usize>>,
    tag_nodes: BTreeMap<String, Vec<usize>>,
    node_elems: Vec<Vec<usize>>,
}

/// Deformed nodal coordinates, `x = X + u` nodewise.
#[derive(Debug, Clone)]
pub struct DeformedCoords(pub Vec<Point>);

impl DeformedCoords {
    pub fn from_displacement(mesh: &Mesh2D, u: &[[f64; 2]]) -> Self {
        let x = mesh
            .nodes()
            .iter()
            .zip(u)
            .map(|(p, d)| [p[0] + d[0], p[1] + d[1]])
            .collect();
        DeformedCoords(x)
    }

    pub fn undeformed(mesh: &Mesh2D) -> Self {
        DeformedCoords(mesh.nodes().to_vec())
    }
}

pub fn triangle_area(p0: Point, p1: Point, p2: Point) -> f64 {
    0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]))
}

impl Mesh2D {
    /// Builds and validates a mesh. Fails on inverted elements, dangling or
    /// misoriented boundary edges, and out-of-range indices.
    pub fn new(
        nodes: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        boundary: Vec<BoundaryEdge>,
    ) -> Result<Self> {
        let n = nodes.len();
        for (e, t) in triangles.iter().enumerate() {
            for &v in t {
                if v >= n {
                    return Err(FsiError::MeshInvalid(format!(
                        "triangle {e} references node {v} out of {n}"
                    )));
                }
            }
            let area = triangle_area(nodes[t[0]], nodes[t[1]], nodes[t[2]]);
            if area <= 0.0 {
                return Err(FsiError::MeshInvalid(format!(
                    "triangle {e} ({}, {}, {}) has non-positive area {area:.3e}",
                    t[0], t[1], t[2]
                )));
            }
        }
        // directed edges of all triangles; an edge with no twin is on the boundary
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for (e, t) in triangles.iter().enumerate() {
            for k in 0..3 {
                let a = t[k];
                let b = t[(k + 1) % 3];
                if directed.insert((a, b), e).is_some() {
                    return Err(FsiError::MeshInvalid(format!(
                        "directed edge ({a}, {b}) shared by two triangles with the same orientation"
                    )));
                }
            }
        }
        let mut free_edges: BTreeSet<(usize, usize)> = BTreeSet::new();
        for &(a, b) in directed.keys() {
            if !directed.contains_key(&(b, a)) {
                free_edges.insert((a, b));
            }
        }
        let mut seen: BTreeSet<(usize, usize)> = BTreeSet::new();
        for (i, be) in boundary.iter().enumerate() {
            if be.a >= n || be.b >= n {
                return Err(FsiError::MeshInvalid(format!(
                    "boundary edge {i} references node out of range"
                )));
            }
            if !free_edges.contains(&(be.a, be.b)) {
                let msg = if free_edges.contains(&(be.b, be.a)) {
                    format!(
                        "boundary edge {i} ({}, {}) is oriented against its triangle; domain must lie on the left",
                        be.a, be.b
                    )
                } else {
                    format!(
                        "boundary edge {i} ({}, {}) does not lie on the mesh boundary",
                        be.a, be.b
                    )
                };
                return Err(FsiError::MeshInvalid(msg));
            }
            if !seen.insert((be.a, be.b)) {
                return Err(FsiError::MeshInvalid(format!(
                    "boundary edge ({}, {}) listed twice",
                    be.a, be.b
                )));
            }
        }
        for &(a, b) in &free_edges {
            if !seen.contains(&(a, b)) {
                return Err(FsiError::MeshInvalid(format!(
                    "dangling boundary: mesh edge ({a}, {b}) is on the boundary but untagged"
                )));
            }
        }

        let mut tag_edges: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        let mut tag_node_sets: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
        for (i, be) in boundary.iter().enumerate() {
            tag_edges.entry(be.tag.clone()).or_default().push(i);
            let s = tag_node_sets.entry(be.tag.clone()).or_default();
            s.insert(be.a);
            s.insert(be.b);
        }
        let tag_nodes = tag_node_sets
            .into_iter()
            .map(|(k, v)| (k, v.into_iter().collect()))
            .collect();

        let mut node_elems = vec![Vec::new(); n];
        for (e, t) in triangles.iter().enumerate() {
            for &v in t {
                node_elems[v].push(e);
            }
        }

        Ok(Self {
            nodes,
            triangles,
            boundary,
            tag_edges,
            tag_nodes,
            node_elems,
        })
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary(&self) -> &[BoundaryEdge] {
        &self.boundary
    }

    /// Elements incident to a node.
    pub fn elements_of_node(&self, node: usize) -> &[usize] {
        &self.node_elems[node]
    }

    pub fn tags(&self) -> impl Iterator<Item = &str> {
        self.tag_edges.keys().map(|s| s.as_str())
    }

    pub fn has_tag(&self, tag: &str) -> bool {
        self.tag_edges.contains_key(tag)
    }

    /// Indices into `boundary()` carrying the tag.
    pub fn tag_edge_indices(&self, tag: &str) -> Result<&[usize]> {
        self.tag_edges
            .get(tag)
            .map(|v| v.as_slice())
            .ok_or_else(|| FsiError::UnknownTag(tag.to_string()))
    }

    /// Sorted node indices touched by the tag.
    pub fn tag_nodes(&self, tag: &str) -> Result<&[usize]> {
        self.tag_nodes
            .get(tag)
            .map(|v| v.as_slice())
            .ok_or_else(|| FsiError::UnknownTag(tag.to_string()))
    }

    /// Sorted union of nodes over several tags.
    pub fn tags_nodes(&self, tags: &[String]) -> Result<Vec<usize>> {
        let mut s = BTreeSet::new();
        for t in tags {
            for &n in self.tag_nodes(t)? {
                s.insert(n);
            }
        }
        Ok(s.into_iter().collect())
    }

    pub fn bbox_diagonal(&self) -> f64 {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.nodes {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        ((hi[0] - lo[0]).powi(2) + (hi[1] - lo[1]).powi(2)).sqrt()
    }

    /// Average length of undeformed edges incident to a node; the local
    /// length scale used for semi-analytic perturbation steps.
    pub fn local_edge_length(&self, node: usize) -> f64 {
        let mut total = 0.0;
        let mut count = 0usize;
        for &e in &self.node_elems[node] {
            let t = self.triangles[e];
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                if a == node || b == node {
                    let d = [
                        self.nodes[b][0] - self.nodes[a][0],
                        self.nodes[b][1] - self.nodes[a][1],
                    ];
                    total += (d[0] * d[0] + d[1] * d[1]).sqrt();
                    count += 1;
                }
            }
        }
        if count == 0 {
            self.bbox_diagonal()
        } else {
            total / count as f64
        }
    }
}

fn edge_outward_normal(pa: Point, pb: Point) -> ([f64; 2], f64) {
    let d = [pb[0] - pa[0], pb[1] - pa[1]];
    let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
    ([d[1] / len, -d[0] / len], len)
}

/// Per-node outward unit normals on a tagged boundary, evaluated on the given
/// coordinates. Node normal = normalized average of the adjacent unit edge
/// normals, which stays well defined at fillets and mild kinks.
pub fn boundary_normals(
    mesh: &Mesh2D,
    coords: &DeformedCoords,
    tag: &str,
) -> Result<Vec<(usize, [f64; 2])>> {
    let edges = mesh.tag_edge_indices(tag)?;
    let mut acc: BTreeMap<usize, [f64; 2]> = BTreeMap::new();
    for &ei in edges {
        let be = &mesh.boundary()[ei];
        let (n, _) = edge_outward_normal(coords.0[be.a], coords.0[be.b]);
        for &v in &[be.a, be.b] {
            let e = acc.entry(v).or_insert([0.0, 0.0]);
            e[0] += n[0];
            e[1] += n[1];
        }
    }
    Ok(acc
        .into_iter()
        .map(|(v, n)| {
            let len = (n[0] * n[0] + n[1] * n[1]).sqrt();
            (v, [n[0] / len, n[1] / len])
        })
        .collect())
}

/// Edge-length-weighted nodal area normals: A_i = sum over adjacent tagged
/// edges of (edge length / 2) * outward unit normal. Discrete counterpart of
/// the boundary area vector; magnitudes carry the nodal boundary measure.
pub fn area_normals(
    mesh: &Mesh2D,
    coords: &DeformedCoords,
    tags: &[String],
) -> Result<Vec<(usize, [f64; 2])>> {
    let mut acc: BTreeMap<usize, [f64; 2]> = BTreeMap::new();
    for tag in tags {
        for &ei in mesh.tag_edge_indices(tag)? {
            let be = &mesh.boundary()[ei];
            let (n, len) = edge_outward_normal(coords.0[be.a], coords.0[be.b]);
            for &v in &[be.a, be.b] {
                let e = acc.entry(v).or_insert([0.0, 0.0]);
                e[0] += 0.5 * len * n[0];
                e[1] += 0.5 * len * n[1];
            }
        }
    }
    Ok(acc.into_iter().collect())
}

/// Walks the tagged edges into an ordered node chain. Open chains start at
/// the endpoint with the lowest node index; closed loops start at the lowest
/// node index and keep the stored edge orientation.
pub fn tag_polyline(mesh: &Mesh2D, tag: &str) -> Result<Vec<usize>> {
    let edges = mesh.tag_edge_indices(tag)?;
    if edges.is_empty() {
        return Err(FsiError::MeshInvalid(format!("tag '{tag}' has no edges")));
    }
    let mut next: BTreeMap<usize, usize> = BTreeMap::new();
    let mut has_pred: BTreeSet<usize> = BTreeSet::new();
    for &ei in edges {
        let be = &mesh.boundary()[ei];
        if next.insert(be.a, be.b).is_some() {
            return Err(FsiError::MeshInvalid(format!(
                "tag '{tag}' edges do not form a simple polyline at node {}",
                be.a
            )));
        }
        has_pred.insert(be.b);
    }
    let start = next
        .keys()
        .copied()
        .filter(|a| !has_pred.contains(a))
        .min()
        .or_else(|| next.keys().copied().min())
        .unwrap();
    let mut chain = vec![start];
    let mut cur = start;
    for _ in 0..edges.len() {
        let nxt = *next.get(&cur).ok_or_else(|| {
            FsiError::MeshInvalid(format!("tag '{tag}' polyline breaks at node {cur}"))
        })?;
        chain.push(nxt);
        cur = nxt;
    }
    if chain[0] == *chain.last().unwrap() {
        chain.pop(); // closed loop
        if chain.len() != edges.len() {
            return Err(FsiError::MeshInvalid(format!(
                "tag '{tag}' edges form more than one loop"
            )));
        }
    } else if chain.len() != edges.len() + 1 {
        return Err(FsiError::MeshInvalid(format!(
            "tag '{tag}' edges form more than one chain"
        )));
    }
    Ok(chain)
}
