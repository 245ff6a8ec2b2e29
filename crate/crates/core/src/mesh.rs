//! 1D equidistant grids and 2D conforming triangulations, including the
//! equilateral triangulation of the unit hexagon, with edge topology,
//! boundary classification, and per-element outward normals.
//!
//! Meshes are immutable after construction and safe to share across threads.

use crate::error::{Error, Result};

/// Uniform grid on `[a, b]` with `n` elements.
#[derive(Debug, Clone)]
pub struct Mesh1D {
    pub a: f64,
    pub b: f64,
    pub n: usize,
    pub nodes: Vec<f64>,
}

impl Mesh1D {
    pub fn h(&self) -> f64 {
        (self.b - self.a) / self.n as f64
    }

    pub fn element(&self, e: usize) -> (f64, f64) {
        (self.nodes[e], self.nodes[e + 1])
    }
}

pub fn build_uniform_1d(a: f64, b: f64, n: usize) -> Result<Mesh1D> {
    if !(b > a) {
        return Err(Error::InvalidArgument(format!(
            "interval endpoints must satisfy b > a, got [{a}, {b}]"
        )));
    }
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "element count must be at least 2, got {n}"
        )));
    }
    let h = (b - a) / n as f64;
    let mut nodes: Vec<f64> = (0..=n).map(|i| a + i as f64 * h).collect();
    nodes[n] = b; // pin the right endpoint exactly
    Ok(Mesh1D { a, b, n, nodes })
}

/// Edge classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeClass {
    Interior,
    Boundary,
}

/// An undirected edge in canonical orientation (lower vertex index first).
#[derive(Debug, Clone)]
pub struct Edge {
    /// Vertex indices, `v[0] < v[1]`.
    pub v: [usize; 2],
    /// Adjacent element indices (one for boundary edges).
    pub elems: Vec<usize>,
    pub class: EdgeClass,
}

/// Conforming triangle mesh with edge topology.
#[derive(Debug, Clone)]
pub struct TriMesh {
    pub vertices: Vec<[f64; 2]>,
    /// Vertex index triples, counterclockwise.
    pub triangles: Vec<[usize; 3]>,
    pub edges: Vec<Edge>,
    /// For each (element, local edge) the global edge index. Local edge `l`
    /// of triangle `(v0, v1, v2)` connects vertices `l` and `(l+1) % 3`.
    pub tri_edges: Vec<[usize; 3]>,
}

impl TriMesh {
    pub fn n_elems(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn tri_vertices(&self, t: usize) -> [[f64; 2]; 3] {
        let [i, j, k] = self.triangles[t];
        [self.vertices[i], self.vertices[j], self.vertices[k]]
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [p0, p1, p2] = self.tri_vertices(t);
        0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]))
    }

    /// Local edge endpoints of triangle `t`, in the element's own traversal
    /// order.
    pub fn local_edge_vertices(&self, t: usize, l: usize) -> (usize, usize) {
        let tri = self.triangles[t];
        (tri[l], tri[(l + 1) % 3])
    }

    /// Outward unit normal of local edge `l` of triangle `t`.
    pub fn outward_normal(&self, t: usize, l: usize) -> [f64; 2] {
        let (a, b) = self.local_edge_vertices(t, l);
        let pa = self.vertices[a];
        let pb = self.vertices[b];
        let tx = pb[0] - pa[0];
        let ty = pb[1] - pa[1];
        let len = (tx * tx + ty * ty).sqrt();
        // CCW traversal puts the interior on the left; rotate -90 degrees
        [ty / len, -tx / len]
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e].v;
        let pa = self.vertices[a];
        let pb = self.vertices[b];
        ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt()
    }

    /// Largest element diameter.
    pub fn mesh_size(&self) -> f64 {
        (0..self.n_elems())
            .map(|t| {
                (0..3)
                    .map(|l| {
                        let (a, b) = self.local_edge_vertices(t, l);
                        let pa = self.vertices[a];
                        let pb = self.vertices[b];
                        ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt()
                    })
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    pub fn n_boundary_edges(&self) -> usize {
        self.edges
            .iter()
            .filter(|e| e.class == EdgeClass::Boundary)
            .count()
    }
}

/// Build edge topology and classification from a raw vertex/triangle list.
///
/// Fails on non-conforming input (an edge shared by more than two
/// triangles) and on non-positive triangle orientation.
pub fn extract_edges(vertices: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>) -> Result<TriMesh> {
    use std::collections::HashMap;
    for (t, tri) in triangles.iter().enumerate() {
        for &v in tri {
            if v >= vertices.len() {
                return Err(Error::Topology(format!(
                    "triangle {t} references vertex {v} out of range"
                )));
            }
        }
    }
    let mut mesh = TriMesh {
        vertices,
        triangles,
        edges: Vec::new(),
        tri_edges: Vec::new(),
    };
    for t in 0..mesh.n_elems() {
        let area = mesh.signed_area(t);
        if area <= 0.0 {
            return Err(Error::Topology(format!(
                "triangle {t} has non-positive signed area {area}"
            )));
        }
    }
    let mut emap: HashMap<(usize, usize), usize> = HashMap::new();
    let mut tri_edges = vec![[usize::MAX; 3]; mesh.n_elems()];
    for t in 0..mesh.n_elems() {
        for l in 0..3 {
            let (a, b) = mesh.local_edge_vertices(t, l);
            let key = (a.min(b), a.max(b));
            let e = *emap.entry(key).or_insert_with(|| {
                mesh.edges.push(Edge {
                    v: [key.0, key.1],
                    elems: Vec::new(),
                    class: EdgeClass::Boundary,
                });
                mesh.edges.len() - 1
            });
            if mesh.edges[e].elems.len() >= 2 {
                return Err(Error::Topology(format!(
                    "edge ({}, {}) adjacent to more than two triangles",
                    key.0, key.1
                )));
            }
            mesh.edges[e].elems.push(t);
            tri_edges[t][l] = e;
        }
    }
    for e in &mut mesh.edges {
        e.class = if e.elems.len() == 2 {
            EdgeClass::Interior
        } else {
            EdgeClass::Boundary
        };
    }
    mesh.tri_edges = tri_edges;
    Ok(mesh)
}

/// Equilateral triangulation of the unit hexagon centered at the origin
/// (vertices at angles 0, 60, ..., 300 degrees), `m` subdivisions per side,
/// element edge length `1/m`.
pub fn build_hexagon_equilateral(m: usize) -> Result<TriMesh> {
    if m < 1 {
        return Err(Error::InvalidArgument(
            "hexagon subdivision count must be at least 1".into(),
        ));
    }
    let mi = m as i64;
    let h = 1.0 / m as f64;
    let s3 = 3.0_f64.sqrt();
    use std::collections::HashMap;
    let mut idx: HashMap<(i64, i64), usize> = HashMap::new();
    let mut vertices = Vec::new();
    let inside = |a: i64, b: i64| a.abs() <= mi && b.abs() <= mi && (a + b).abs() <= mi;
    for a in -mi..=mi {
        for b in -mi..=mi {
            if inside(a, b) {
                idx.insert((a, b), vertices.len());
                vertices.push([h * (a as f64 + b as f64 / 2.0), h * b as f64 * s3 / 2.0]);
            }
        }
    }
    let mut triangles = Vec::new();
    for a in -mi..=mi {
        for b in -mi..=mi {
            if inside(a, b) && inside(a + 1, b) && inside(a, b + 1) {
                triangles.push([idx[&(a, b)], idx[&(a + 1, b)], idx[&(a, b + 1)]]);
            }
            if inside(a + 1, b) && inside(a + 1, b + 1) && inside(a, b + 1) {
                triangles.push([idx[&(a + 1, b)], idx[&(a + 1, b + 1)], idx[&(a, b + 1)]]);
            }
        }
    }
    extract_edges(vertices, triangles)
}

/// Plain-text mesh dump: header `V E T`, vertex coordinates, triangle index
/// triples (0-based).
pub fn dump_mesh(mesh: &TriMesh, path: &str) -> Result<()> {
    use std::fmt::Write as _;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} {} {}",
        mesh.vertices.len(),
        mesh.edges.len(),
        mesh.triangles.len()
    );
    for v in &mesh.vertices {
        let _ = writeln!(out, "{:.17e} {:.17e}", v[0], v[1]);
    }
    for t in &mesh.triangles {
        let _ = writeln!(out, "{} {} {}", t[0], t[1], t[2]);
    }
    std::fs::write(path, out).map_err(|source| Error::Io {
        path: path.to_string(),
        source,
    })
}

/// Load a mesh previously written by [`dump_mesh`]; edges are rebuilt.
pub fn load_mesh(path: &str) -> Result<TriMesh> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_string(),
        source,
    })?;
    let mut it = text.split_whitespace();
    let mut next_usize = |what: &str| -> Result<usize> {
        it.next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::InvalidArgument(format!("mesh file: bad {what}")))
    };
    let nv = next_usize("vertex count")?;
    let _ne = next_usize("edge count")?;
    let nt = next_usize("triangle count")?;
    let mut it = text.split_whitespace().skip(3);
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let x: f64 = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::InvalidArgument("mesh file: bad vertex".into()))?;
        let y: f64 = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::InvalidArgument("mesh file: bad vertex".into()))?;
        vertices.push([x, y]);
    }
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let mut tri = [0usize; 3];
        for slot in &mut tri {
            *slot = it
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::InvalidArgument("mesh file: bad triangle".into()))?;
        }
        triangles.push(tri);
    }
    extract_edges(vertices, triangles)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_1d_basic() {
        let m = build_uniform_1d(0.0, 1.0, 4).unwrap();
        assert_eq!(m.nodes, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let m2 = build_uniform_1d(0.0, 1.0, 2).unwrap();
        assert_eq!(m2.n, 2);
        assert_eq!(m2.nodes[0], 0.0);
        assert_eq!(m2.nodes[2], 1.0);
    }

    #[test]
    fn uniform_1d_fine() {
        let m = build_uniform_1d(0.0, 1.0, 10000).unwrap();
        assert_eq!(m.nodes.len(), 10001);
        assert!((m.h() - 1e-4).abs() < 1e-18);
        // node spacing uniform to 1e-14*(b-a)
        for i in 0..m.n {
            assert!((m.nodes[i + 1] - m.nodes[i] - m.h()).abs() <= 1e-14);
            assert!(m.nodes[i + 1] > m.nodes[i]);
        }
    }

    #[test]
    fn uniform_1d_rejects_bad_input() {
        assert!(build_uniform_1d(0.0, 1.0, 1).is_err());
        assert!(build_uniform_1d(1.0, 0.0, 4).is_err());
        assert!(build_uniform_1d(0.0, 0.0, 4).is_err());
    }

    #[test]
    fn hexagon_m1_counts() {
        let mesh = build_hexagon_equilateral(1).unwrap();
        assert_eq!(mesh.vertices.len(), 7);
        assert_eq!(mesh.n_elems(), 6);
        assert_eq!(mesh.n_edges(), 12);
        assert_eq!(mesh.n_boundary_edges(), 6);
    }

    #[test]
    fn hexagon_m2_euler() {
        let mesh = build_hexagon_equilateral(2).unwrap();
        assert_eq!(mesh.n_elems(), 24);
        assert_eq!(mesh.vertices.len(), 19);
        // Euler formula with the outer face: V - E + (T + 1) = 2
        assert_eq!(
            mesh.vertices.len() as i64 - mesh.n_edges() as i64 + mesh.n_elems() as i64 + 1,
            2
        );
        // brute-force adjacency recount agrees with the stored classification
        let boundary = mesh.edges.iter().filter(|e| e.elems.len() == 1).count();
        assert_eq!(boundary, mesh.n_boundary_edges());
        assert_eq!(boundary, 12);
    }

    #[test]
    fn hexagon_m3_equilateral() {
        let mesh = build_hexagon_equilateral(3).unwrap();
        for t in 0..mesh.n_elems() {
            for l in 0..3 {
                let (a, b) = mesh.local_edge_vertices(t, l);
                let pa = mesh.vertices[a];
                let pb = mesh.vertices[b];
                let len = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
                assert!((len - 1.0 / 3.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hexagon_counts_general() {
        for m in 1..=5 {
            let mesh = build_hexagon_equilateral(m).unwrap();
            assert_eq!(mesh.n_elems(), 6 * m * m);
            assert_eq!(mesh.vertices.len(), 1 + 3 * m * (m + 1));
            assert_eq!(mesh.n_boundary_edges(), 6 * m);
        }
    }

    #[test]
    fn hexagon_area() {
        let mesh = build_hexagon_equilateral(4).unwrap();
        let total: f64 = (0..mesh.n_elems()).map(|t| mesh.signed_area(t)).sum();
        assert!((total - 1.5 * 3.0_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn normals_unit_and_opposite() {
        let mesh = build_hexagon_equilateral(3).unwrap();
        for t in 0..mesh.n_elems() {
            for l in 0..3 {
                let n = mesh.outward_normal(t, l);
                assert!((n[0] * n[0] + n[1] * n[1] - 1.0).abs() < 1e-14);
                // outwardness: normal points away from the centroid
                let [p0, p1, p2] = mesh.tri_vertices(t);
                let c = [(p0[0] + p1[0] + p2[0]) / 3.0, (p0[1] + p1[1] + p2[1]) / 3.0];
                let (a, b) = mesh.local_edge_vertices(t, l);
                let mid = [
                    0.5 * (mesh.vertices[a][0] + mesh.vertices[b][0]),
                    0.5 * (mesh.vertices[a][1] + mesh.vertices[b][1]),
                ];
                assert!((mid[0] - c[0]) * n[0] + (mid[1] - c[1]) * n[1] > 0.0);
            }
        }
        // interior edges: the two adjacent normals are exact negations
        for (e, edge) in mesh.edges.iter().enumerate() {
            if edge.class != EdgeClass::Interior {
                continue;
            }
            let mut normals = Vec::new();
            for &t in &edge.elems {
                for l in 0..3 {
                    if mesh.tri_edges[t][l] == e {
                        normals.push(mesh.outward_normal(t, l));
                    }
                }
            }
            assert_eq!(normals.len(), 2);
            assert!((normals[0][0] + normals[1][0]).abs() < 1e-14);
            assert!((normals[0][1] + normals[1][1]).abs() < 1e-14);
        }
    }

    #[test]
    fn extract_edges_simple() {
        let mesh =
            extract_edges(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]]).unwrap();
        assert_eq!(mesh.n_edges(), 3);
        assert_eq!(mesh.n_boundary_edges(), 3);

        let mesh2 = extract_edges(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap();
        assert_eq!(mesh2.n_edges(), 5);
        assert_eq!(mesh2.n_boundary_edges(), 4);
        assert_eq!(mesh2.n_edges() - mesh2.n_boundary_edges(), 1);
    }

    #[test]
    fn extract_edges_rejects_nonconforming() {
        // three triangles sharing the same edge (0, 1)
        let r = extract_edges(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.5, 2.0], [0.3, 3.0]],
            vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]],
        );
        assert!(matches!(r, Err(Error::Topology(_))));
    }

    #[test]
    fn edge_classification_stable_under_vertex_permutation() {
        let mesh = build_hexagon_equilateral(2).unwrap();
        // apply a vertex permutation and rebuild
        let nv = mesh.vertices.len();
        let perm: Vec<usize> = (0..nv).map(|i| (i * 7 + 3) % nv).collect();
        {
            // check it is a permutation
            let mut seen = vec![false; nv];
            for &p in &perm {
                assert!(!seen[p]);
                seen[p] = true;
            }
        }
        let mut verts2 = vec![[0.0; 2]; nv];
        for (i, &p) in perm.iter().enumerate() {
            verts2[p] = mesh.vertices[i];
        }
        let tris2: Vec<[usize; 3]> = mesh
            .triangles
            .iter()
            .map(|t| [perm[t[0]], perm[t[1]], perm[t[2]]])
            .collect();
        let mesh2 = extract_edges(verts2, tris2).unwrap();
        use std::collections::HashSet;
        let to_set =
            |m: &TriMesh, class: EdgeClass, p: Option<&Vec<usize>>| -> HashSet<(usize, usize)> {
                m.edges
                    .iter()
                    .filter(|e| e.class == class)
                    .map(|e| {
                        let (a, b) = match p {
                            Some(perm) => (perm[e.v[0]], perm[e.v[1]]),
                            None => (e.v[0], e.v[1]),
                        };
                        (a.min(b), a.max(b))
                    })
                    .collect()
            };
        assert_eq!(
            to_set(&mesh, EdgeClass::Boundary, Some(&perm)),
            to_set(&mesh2, EdgeClass::Boundary, None)
        );
        assert_eq!(
            to_set(&mesh, EdgeClass::Interior, Some(&perm)),
            to_set(&mesh2, EdgeClass::Interior, None)
        );
    }

    #[test]
    fn dump_load_roundtrip() {
        let mesh = build_hexagon_equilateral(2).unwrap();
        let path = std::env::temp_dir().join("hdg_mesh_roundtrip.txt");
        let path = path.to_str().unwrap();
        dump_mesh(&mesh, path).unwrap();
        let back = load_mesh(path).unwrap();
        assert_eq!(back.vertices.len(), mesh.vertices.len());
        assert_eq!(back.triangles, mesh.triangles);
        assert_eq!(back.n_edges(), mesh.n_edges());
        for (a, b) in back.vertices.iter().zip(&mesh.vertices) {
            assert_eq!(a, b); // full-precision round trip
        }
        let _ = std::fs::remove_file(path);
    }
}
