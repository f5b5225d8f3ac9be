//! Polygonal partitions of the unit square.
//!
//! Elements are counterclockwise vertex cycles. Each edge stores its vertex
//! pair in ascending index order; that order fixes the edge's parametrization
//! and therefore the meaning of its degrees of freedom, so edge data is
//! single valued no matter which incident element reads it.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::field::Point;

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    /// Canonical vertex pair, `vertices[0] < vertices[1]`.
    pub vertices: [usize; 2],
    pub left: usize,
    pub right: Option<usize>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.right.is_none()
    }
}

/// Local side of an element: global edge index plus `+1` when the
/// counterclockwise traversal agrees with the edge's canonical direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Side {
    pub edge: usize,
    pub sign: i8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshKind {
    Triangular,
    Rectangular,
    General,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    pub elements: Vec<Vec<usize>>,
    pub edges: Vec<Edge>,
    /// Side `i` of element `e` runs from vertex `i` to vertex `i + 1`.
    pub element_edges: Vec<Vec<Side>>,
    pub kind: MeshKind,
    /// The nominal `1/h` used to label table rows.
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElementGeometry {
    pub centroid: Point,
    pub diameter: f64,
    pub area: f64,
    /// Outward unit normal per local side.
    pub normals: Vec<[f64; 2]>,
    pub lengths: Vec<f64>,
}

fn signed_area(pts: &[Point]) -> f64 {
    let n = pts.len();
    (0..n)
        .map(|i| {
            let p = pts[i];
            let q = pts[(i + 1) % n];
            p[0] * q[1] - q[0] * p[1]
        })
        .sum::<f64>()
        * 0.5
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

impl Mesh {
    /// Builds a mesh from vertex coordinates and counterclockwise cells,
    /// deriving the edge table.
    pub fn from_cells(vertices: Vec<Point>, elements: Vec<Vec<usize>>, kind: MeshKind, label: usize) -> Result<Mesh> {
        let mut edges: Vec<Edge> = Vec::new();
        let mut lookup: HashMap<[usize; 2], usize> = HashMap::new();
        let mut element_edges = Vec::with_capacity(elements.len());

        for (e, cell) in elements.iter().enumerate() {
            if cell.len() < 3 {
                return Err(Error::InvalidMesh(format!("element {e} has fewer than 3 vertices")));
            }
            if let Some(&v) = cell.iter().find(|&&v| v >= vertices.len()) {
                return Err(Error::InvalidMesh(format!("element {e} references missing vertex {v}")));
            }
            let pts: Vec<Point> = cell.iter().map(|&v| vertices[v]).collect();
            if signed_area(&pts) <= 0.0 {
                return Err(Error::InvalidMesh(format!("element {e} is not counterclockwise")));
            }
            let mut sides = Vec::with_capacity(cell.len());
            for i in 0..cell.len() {
                let a = cell[i];
                let b = cell[(i + 1) % cell.len()];
                let key = [a.min(b), a.max(b)];
                let sign = if a < b { 1 } else { -1 };
                let edge = match lookup.get(&key) {
                    Some(&idx) => {
                        let edge = &mut edges[idx];
                        if edge.right.is_some() {
                            return Err(Error::InvalidMesh(format!("edge {key:?} shared by more than two elements")));
                        }
                        edge.right = Some(e);
                        idx
                    }
                    None => {
                        edges.push(Edge {
                            vertices: key,
                            left: e,
                            right: None,
                        });
                        lookup.insert(key, edges.len() - 1);
                        edges.len() - 1
                    }
                };
                sides.push(Side { edge, sign });
            }
            element_edges.push(sides);
        }

        Ok(Mesh {
            vertices,
            elements,
            edges,
            element_edges,
            kind,
            label,
        })
    }

    /// Uniform triangulation: `n x n` squares, each cut along its
    /// lower-left to upper-right diagonal.
    pub fn uniform_triangular(n: usize) -> Result<Mesh> {
        if n == 0 {
            return Err(Error::InvalidMesh("triangular subdivision count must be at least 1".into()));
        }
        let h = 1.0 / n as f64;
        let vid = |i: usize, j: usize| j * (n + 1) + i;
        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                vertices.push([i as f64 * h, j as f64 * h]);
            }
        }
        let mut elements = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let (v00, v10, v11, v01) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
                elements.push(vec![v00, v10, v11]);
                elements.push(vec![v00, v11, v01]);
            }
        }
        Mesh::from_cells(vertices, elements, MeshKind::Triangular, n)
    }

    /// Axis-aligned rectangles: a `3 x 2` grid at level 0, every rectangle
    /// quartered at each further level. The label `1/h` is the row count,
    /// `2 * 2^level`.
    pub fn uniform_rectangular(level: u32) -> Result<Mesh> {
        if level > 12 {
            return Err(Error::InvalidMesh(format!("rectangular level {level} is too large")));
        }
        let scale = 1usize << level;
        let (nx, ny) = (3 * scale, 2 * scale);
        let vid = |i: usize, j: usize| j * (nx + 1) + i;
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push([i as f64 / nx as f64, j as f64 / ny as f64]);
            }
        }
        let mut elements = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                elements.push(vec![vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)]);
            }
        }
        Mesh::from_cells(vertices, elements, MeshKind::Rectangular, 2 * scale)
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_boundary_edges(&self) -> usize {
        self.edges.iter().filter(|e| e.is_boundary()).count()
    }

    pub fn element_vertices(&self, element: usize) -> Vec<Point> {
        self.elements[element].iter().map(|&v| self.vertices[v]).collect()
    }

    /// Endpoints of an edge in canonical order.
    pub fn edge_endpoints(&self, edge: usize) -> [Point; 2] {
        let [a, b] = self.edges[edge].vertices;
        [self.vertices[a], self.vertices[b]]
    }

    pub fn edge_length(&self, edge: usize) -> f64 {
        let [a, b] = self.edge_endpoints(edge);
        dist(a, b)
    }

    pub fn geometry(&self, element: usize) -> Result<ElementGeometry> {
        if element >= self.elements.len() {
            return Err(Error::ElementOutOfRange {
                index: element,
                count: self.elements.len(),
            });
        }
        let pts = self.element_vertices(element);
        let n = pts.len();
        let area = signed_area(&pts);

        // Area centroid of the polygon.
        let mut c = [0.0, 0.0];
        for i in 0..n {
            let p = pts[i];
            let q = pts[(i + 1) % n];
            let cross = p[0] * q[1] - q[0] * p[1];
            c[0] += (p[0] + q[0]) * cross;
            c[1] += (p[1] + q[1]) * cross;
        }
        let centroid = [c[0] / (6.0 * area), c[1] / (6.0 * area)];

        let mut diameter: f64 = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                diameter = diameter.max(dist(pts[i], pts[j]));
            }
        }

        let mut normals = Vec::with_capacity(n);
        let mut lengths = Vec::with_capacity(n);
        for i in 0..n {
            let p = pts[i];
            let q = pts[(i + 1) % n];
            let len = dist(p, q);
            normals.push([(q[1] - p[1]) / len, -(q[0] - p[0]) / len]);
            lengths.push(len);
        }

        Ok(ElementGeometry {
            centroid,
            diameter,
            area,
            normals,
            lengths,
        })
    }

    /// Largest element diameter.
    pub fn h_max(&self) -> f64 {
        (0..self.num_elements())
            .map(|e| {
                let pts = self.element_vertices(e);
                let mut d: f64 = 0.0;
                for i in 0..pts.len() {
                    for j in i + 1..pts.len() {
                        d = d.max(dist(pts[i], pts[j]));
                    }
                }
                d
            })
            .fold(0.0, f64::max)
    }

    /// Checks the structural invariants every builder must satisfy.
    pub fn validate(&self) -> Result<()> {
        let mut total_area = 0.0;
        for e in 0..self.num_elements() {
            let g = self.geometry(e)?;
            if g.area <= 0.0 {
                return Err(Error::InvalidMesh(format!("element {e} has non-positive area")));
            }
            total_area += g.area;
            let cell = &self.elements[e];
            for (i, side) in self.element_edges[e].iter().enumerate() {
                let a = cell[i];
                let b = cell[(i + 1) % cell.len()];
                let edge = &self.edges[side.edge];
                let expected = if side.sign > 0 { [a, b] } else { [b, a] };
                if edge.vertices != expected {
                    return Err(Error::InvalidMesh(format!("element {e} side {i} does not match its edge")));
                }
                if edge.left != e && edge.right != Some(e) {
                    return Err(Error::InvalidMesh(format!("edge {} does not list element {e}", side.edge)));
                }
            }
        }
        if (total_area - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMesh(format!("total area {total_area} differs from 1")));
        }
        let euler = self.vertices.len() as i64 - self.edges.len() as i64 + self.elements.len() as i64;
        if euler != 1 {
            return Err(Error::InvalidMesh(format!("Euler characteristic {euler} != 1")));
        }
        Ok(())
    }

    /// Line-oriented text dump: `v x y`, `t i j k` / `q i j k l` / `p n ...`,
    /// `e a b left right|-1`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for v in &self.vertices {
            let _ = writeln!(out, "v {:.17e} {:.17e}", v[0], v[1]);
        }
        for cell in &self.elements {
            let tag = match cell.len() {
                3 => "t".to_string(),
                4 => "q".to_string(),
                n => format!("p {n}"),
            };
            let ids: Vec<String> = cell.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{tag} {}", ids.join(" "));
        }
        for e in &self.edges {
            let right = e.right.map_or(-1, |r| r as i64);
            let _ = writeln!(out, "e {} {} {} {}", e.vertices[0], e.vertices[1], e.left, right);
        }
        out
    }

    /// Rebuilds a mesh from [`Mesh::dump`] output. Edge records are
    /// recomputed from the cells and checked against the file.
    pub fn parse_dump(text: &str, label: usize) -> Result<Mesh> {
        let bad = |line: usize, msg: &str| Error::InvalidMesh(format!("line {}: {msg}", line + 1));
        let mut vertices = Vec::new();
        let mut elements = Vec::new();
        let mut edges = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let mut tok = line.split_whitespace();
            let Some(tag) = tok.next() else { continue };
            let rest: Vec<&str> = tok.collect();
            match tag {
                "v" => {
                    let xy: Vec<f64> = rest
                        .iter()
                        .map(|s| s.parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| bad(ln, "bad vertex coordinate"))?;
                    if xy.len() != 2 {
                        return Err(bad(ln, "vertex needs two coordinates"));
                    }
                    vertices.push([xy[0], xy[1]]);
                }
                "t" | "q" | "p" => {
                    let ids: Vec<usize> = rest
                        .iter()
                        .map(|s| s.parse::<usize>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| bad(ln, "bad vertex index"))?;
                    let ids = match tag {
                        "t" if ids.len() == 3 => ids,
                        "q" if ids.len() == 4 => ids,
                        "p" if !ids.is_empty() && ids[0] == ids.len() - 1 => ids[1..].to_vec(),
                        _ => return Err(bad(ln, "wrong vertex count for cell")),
                    };
                    elements.push(ids);
                }
                "e" => {
                    let nums: Vec<i64> = rest
                        .iter()
                        .map(|s| s.parse::<i64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| bad(ln, "bad edge record"))?;
                    if nums.len() != 4 {
                        return Err(bad(ln, "edge record needs four fields"));
                    }
                    edges.push(nums);
                }
                _ => return Err(bad(ln, "unknown record tag")),
            }
        }
        let kind = if elements.iter().all(|c| c.len() == 3) {
            MeshKind::Triangular
        } else if elements.iter().all(|c| c.len() == 4) {
            MeshKind::Rectangular
        } else {
            MeshKind::General
        };
        let mesh = Mesh::from_cells(vertices, elements, kind, label)?;
        if !edges.is_empty() {
            let derived: Vec<Vec<i64>> = mesh
                .edges
                .iter()
                .map(|e| {
                    vec![
                        e.vertices[0] as i64,
                        e.vertices[1] as i64,
                        e.left as i64,
                        e.right.map_or(-1, |r| r as i64),
                    ]
                })
                .collect();
            if derived != edges {
                return Err(Error::InvalidMesh("edge records disagree with cells".into()));
            }
        }
        Ok(mesh)
    }
}
