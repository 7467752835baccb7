//! Triangulations of the body and the marked contact line.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spatial dimension of the body.
pub const DIM: usize = 2;

pub type Point = [f64; DIM];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Marker {
    /// Clamped part: displacement vanishes.
    Gamma1,
    /// Traction part.
    Gamma2,
    /// Contact with the rigid support through the adhesive.
    GammaC,
}

impl Marker {
    pub fn name(self) -> &'static str {
        match self {
            Marker::Gamma1 => "gamma1",
            Marker::Gamma2 => "gamma2",
            Marker::GammaC => "gammac",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gamma1" => Some(Marker::Gamma1),
            "gamma2" => Some(Marker::Gamma2),
            "gammac" => Some(Marker::GammaC),
            _ => None,
        }
    }
}

/// Axis-aligned rectangle `[x_min, x_max] × [y_min, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn unit() -> Self {
        Self {
            x_min: 0.0,
            y_min: 0.0,
            x_max: 1.0,
            y_max: 1.0,
        }
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }
}

/// Signed area of the triangle `(a, b, c)`; positive when counterclockwise.
pub fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

/// An unmarked triangulation. Cells are counterclockwise and boundary facets
/// are oriented with the body on their left.
#[derive(Debug, Clone, PartialEq)]
pub struct Triangulation {
    vertices: Vec<Point>,
    cells: Vec<[usize; 3]>,
    boundary_facets: Vec<[usize; 2]>,
}

impl Triangulation {
    pub fn new(vertices: Vec<Point>, cells: Vec<[usize; 3]>) -> Result<Self> {
        if vertices.is_empty() || cells.is_empty() {
            return Err(Error::InvalidMesh("mesh needs vertices and cells".into()));
        }
        if let Some(p) = vertices.iter().find(|p| !(p[0].is_finite() && p[1].is_finite())) {
            return Err(Error::InvalidMesh(format!("non-finite vertex {p:?}")));
        }
        let mut used = vec![false; vertices.len()];
        for (k, cell) in cells.iter().enumerate() {
            for &v in cell {
                if v >= vertices.len() {
                    return Err(Error::InvalidMesh(format!(
                        "cell {k} references vertex {v} out of range"
                    )));
                }
                used[v] = true;
            }
            let area = signed_area(vertices[cell[0]], vertices[cell[1]], vertices[cell[2]]);
            if !(area > 0.0) {
                return Err(Error::DegenerateCell { cell: k, measure: area });
            }
        }
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(Error::InvalidMesh(format!("vertex {v} belongs to no cell")));
        }

        let mut edges: BTreeMap<(usize, usize), ([usize; 2], usize)> = BTreeMap::new();
        for cell in &cells {
            for l in 0..3 {
                let (a, b) = (cell[l], cell[(l + 1) % 3]);
                let key = (a.min(b), a.max(b));
                edges.entry(key).or_insert(([a, b], 0)).1 += 1;
            }
        }
        let mut boundary_facets = Vec::new();
        for (key, (oriented, count)) in edges {
            match count {
                1 => boundary_facets.push(oriented),
                2 => {}
                _ => return Err(Error::InvalidMesh(format!("edge {key:?} is shared by {count} cells"))),
            }
        }
        Ok(Self {
            vertices,
            cells,
            boundary_facets,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }

    pub fn boundary_facets(&self) -> &[[usize; 2]] {
        &self.boundary_facets
    }

    fn facet_midpoint(&self, f: [usize; 2]) -> Point {
        let (a, b) = (self.vertices[f[0]], self.vertices[f[1]]);
        [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
    }
}

/// Uniform triangulation of a rectangle with `nx × ny` squares, each split
/// along its rising diagonal.
pub fn build_structured_rect(nx: usize, ny: usize, extents: Rect) -> Result<Triangulation> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidExtents(format!(
            "subdivision counts must be positive, got {nx}×{ny}"
        )));
    }
    let finite = [extents.x_min, extents.x_max, extents.y_min, extents.y_max]
        .iter()
        .all(|v| v.is_finite());
    if !finite || !(extents.width() > 0.0) || !(extents.height() > 0.0) {
        return Err(Error::InvalidExtents(format!("{extents:?}")));
    }
    let hx = extents.width() / nx as f64;
    let hy = extents.height() / ny as f64;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            let x = if i == nx {
                extents.x_max
            } else {
                extents.x_min + i as f64 * hx
            };
            let y = if j == ny {
                extents.y_max
            } else {
                extents.y_min + j as f64 * hy
            };
            vertices.push([x, y]);
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut cells = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            cells.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            cells.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    Triangulation::new(vertices, cells)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryFacet {
    pub nodes: [usize; 2],
    pub marker: Marker,
}

/// A triangulation with marked boundary and the contact line structure.
/// Immutable; refinement builds a new mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Point>,
    cells: Vec<[usize; 3]>,
    boundary_facets: Vec<BoundaryFacet>,
    contact_nodes: Vec<usize>,
    contact_cells: Vec<[usize; 2]>,
    contact_of_vertex: Vec<Option<usize>>,
    normal: Point,
    gamma1_vertices: Vec<usize>,
}

/// Marks every boundary facet by evaluating `rule` at its midpoint.
pub fn mark_boundary(tri: &Triangulation, rule: impl Fn(Point) -> Marker) -> Result<Mesh> {
    let facets = tri
        .boundary_facets
        .iter()
        .map(|&f| BoundaryFacet {
            nodes: f,
            marker: rule(tri.facet_midpoint(f)),
        })
        .collect();
    Mesh::from_parts(tri, facets)
}

impl Mesh {
    fn from_parts(tri: &Triangulation, boundary_facets: Vec<BoundaryFacet>) -> Result<Self> {
        let vertices = tri.vertices.clone();
        let has = |m| boundary_facets.iter().any(|f| f.marker == m);
        if !has(Marker::Gamma1) {
            return Err(Error::EmptyRequiredPart("gamma1"));
        }
        if !has(Marker::GammaC) {
            return Err(Error::EmptyRequiredPart("gammac"));
        }

        let contact: Vec<[usize; 2]> = boundary_facets
            .iter()
            .filter(|f| f.marker == Marker::GammaC)
            .map(|f| f.nodes)
            .collect();
        let outward = |f: [usize; 2]| {
            let (a, b) = (vertices[f[0]], vertices[f[1]]);
            let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
            let len = dx.hypot(dy);
            [dy / len, -dx / len]
        };
        let normal = outward(contact[0]);
        let origin = vertices[contact[0][0]];
        let tangent = [-normal[1], normal[0]];
        let scale = vertices
            .iter()
            .fold(0.0f64, |m, p| m.max(p[0].abs()).max(p[1].abs()))
            .max(1.0);
        for &f in &contact {
            let n = outward(f);
            if (n[0] - normal[0]).abs() > 1e-12 || (n[1] - normal[1]).abs() > 1e-12 {
                return Err(Error::NonFlatContact);
            }
            for &v in &f {
                let p = vertices[v];
                let offset = (p[0] - origin[0]) * normal[0] + (p[1] - origin[1]) * normal[1];
                if offset.abs() > 1e-12 * scale {
                    return Err(Error::NonFlatContact);
                }
            }
        }

        let along = |v: usize| {
            let p = vertices[v];
            (p[0] - origin[0]) * tangent[0] + (p[1] - origin[1]) * tangent[1]
        };
        let mut contact_nodes: Vec<usize> = contact.iter().flatten().copied().collect();
        contact_nodes.sort_unstable();
        contact_nodes.dedup();
        contact_nodes.sort_by(|&a, &b| along(a).total_cmp(&along(b)).then(a.cmp(&b)));
        let mut contact_of_vertex = vec![None; vertices.len()];
        for (k, &v) in contact_nodes.iter().enumerate() {
            contact_of_vertex[v] = Some(k);
        }
        let mut contact_cells: Vec<[usize; 2]> = contact
            .iter()
            .map(|f| {
                let (a, b) = (contact_of_vertex[f[0]].unwrap(), contact_of_vertex[f[1]].unwrap());
                [a.min(b), a.max(b)]
            })
            .collect();
        contact_cells.sort_unstable();

        let mut gamma1_vertices: Vec<usize> = boundary_facets
            .iter()
            .filter(|f| f.marker == Marker::Gamma1)
            .flat_map(|f| f.nodes)
            .collect();
        gamma1_vertices.sort_unstable();
        gamma1_vertices.dedup();

        Ok(Self {
            vertices,
            cells: tri.cells.clone(),
            boundary_facets,
            contact_nodes,
            contact_cells,
            contact_of_vertex,
            normal,
            gamma1_vertices,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }

    pub fn boundary_facets(&self) -> &[BoundaryFacet] {
        &self.boundary_facets
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_contact_nodes(&self) -> usize {
        self.contact_nodes.len()
    }

    /// Bulk vertex index of every contact node, ordered along the contact line.
    pub fn contact_nodes(&self) -> &[usize] {
        &self.contact_nodes
    }

    /// Contact segments as pairs of contact-node indices.
    pub fn contact_cells(&self) -> &[[usize; 2]] {
        &self.contact_cells
    }

    /// Association contact node → bulk vertex.
    pub fn trace_map(&self) -> &[usize] {
        &self.contact_nodes
    }

    /// Contact-node index of a bulk vertex, if it lies on the contact line.
    pub fn contact_index(&self, vertex: usize) -> Option<usize> {
        self.contact_of_vertex.get(vertex).copied().flatten()
    }

    /// Outward unit normal of the (flat) contact line.
    pub fn contact_normal(&self) -> Point {
        self.normal
    }

    /// Outward unit normal at contact node `k`.
    pub fn outward_normal(&self, _k: usize) -> Point {
        self.normal
    }

    /// Vertices on clamped facets, sorted.
    pub fn gamma1_vertices(&self) -> &[usize] {
        &self.gamma1_vertices
    }

    pub fn contact_position(&self, k: usize) -> Point {
        self.vertices[self.contact_nodes[k]]
    }

    pub fn contact_cell_length(&self, c: usize) -> f64 {
        let [a, b] = self.contact_cells[c];
        let (p, q) = (self.contact_position(a), self.contact_position(b));
        (q[0] - p[0]).hypot(q[1] - p[1])
    }

    pub fn contact_length(&self) -> f64 {
        (0..self.contact_cells.len()).map(|c| self.contact_cell_length(c)).sum()
    }

    pub fn cell_area(&self, c: usize) -> f64 {
        let [a, b, d] = self.cells[c];
        signed_area(self.vertices[a], self.vertices[b], self.vertices[d])
    }

    pub fn area(&self) -> f64 {
        (0..self.cells.len()).map(|c| self.cell_area(c)).sum()
    }

    /// Longest edge over all cells.
    pub fn max_edge_length(&self) -> f64 {
        let mut h = 0.0f64;
        for cell in &self.cells {
            for l in 0..3 {
                let (p, q) = (self.vertices[cell[l]], self.vertices[cell[(l + 1) % 3]]);
                h = h.max((q[0] - p[0]).hypot(q[1] - p[1]));
            }
        }
        h
    }

    /// Reads the plain-text mesh format written by [`Mesh::to_ascii`]:
    ///
    /// ```text
    /// vertices <n>
    /// <x> <y>          (n lines)
    /// cells <m>
    /// <a> <b> <c>      (m lines, 0-based, counterclockwise)
    /// facets <k>
    /// <a> <b> <marker> (k lines; marker is gamma1, gamma2 or gammac)
    /// ```
    ///
    /// Blank lines and lines starting with `#` are ignored. The facet list must
    /// cover the boundary exactly.
    pub fn from_ascii(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let mut take = |count: usize, width: usize| -> Result<Vec<(usize, Vec<String>)>> {
            (0..count)
                .map(|_| {
                    let (no, line) = lines
                        .next()
                        .ok_or_else(|| Error::Parse("unexpected end of mesh file".into()))?;
                    let fields: Vec<String> = line.split_whitespace().map(String::from).collect();
                    if fields.len() != width {
                        return Err(Error::Parse(format!(
                            "line {no}: expected {width} fields, found {}",
                            fields.len()
                        )));
                    }
                    Ok((no, fields))
                })
                .collect()
        };
        let num = |no: usize, s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::Parse(format!("line {no}: bad number '{s}'")))
        };
        let idx = |no: usize, s: &str| -> Result<usize> {
            s.parse::<usize>()
                .map_err(|_| Error::Parse(format!("line {no}: bad index '{s}'")))
        };

        let nv = section_count(&mut take, "vertices")?;
        let vertices = take(nv, 2)?
            .iter()
            .map(|(no, f)| Ok([num(*no, &f[0])?, num(*no, &f[1])?]))
            .collect::<Result<Vec<_>>>()?;
        let nc = section_count(&mut take, "cells")?;
        let cells = take(nc, 3)?
            .iter()
            .map(|(no, f)| Ok([idx(*no, &f[0])?, idx(*no, &f[1])?, idx(*no, &f[2])?]))
            .collect::<Result<Vec<_>>>()?;
        let nf = section_count(&mut take, "facets")?;
        let facet_lines = take(nf, 3)?;

        let tri = Triangulation::new(vertices, cells)?;
        let mut markers = BTreeMap::new();
        for (no, f) in &facet_lines {
            let (a, b) = (idx(*no, &f[0])?, idx(*no, &f[1])?);
            let marker =
                Marker::parse(&f[2]).ok_or_else(|| Error::Parse(format!("line {no}: unknown marker '{}'", f[2])))?;
            if markers.insert((a.min(b), a.max(b)), marker).is_some() {
                return Err(Error::Parse(format!("line {no}: facet listed twice")));
            }
        }
        let mut facets = Vec::with_capacity(tri.boundary_facets.len());
        for &f in &tri.boundary_facets {
            let marker = markers
                .remove(&(f[0].min(f[1]), f[0].max(f[1])))
                .ok_or_else(|| Error::InvalidMesh(format!("boundary facet {f:?} has no marker")))?;
            facets.push(BoundaryFacet { nodes: f, marker });
        }
        if let Some((key, _)) = markers.into_iter().next() {
            return Err(Error::InvalidMesh(format!(
                "marked facet {key:?} is not a boundary facet"
            )));
        }
        Mesh::from_parts(&tri, facets)
    }

    pub fn to_ascii(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "vertices {}", self.vertices.len());
        for p in &self.vertices {
            let _ = writeln!(out, "{:e} {:e}", p[0], p[1]);
        }
        let _ = writeln!(out, "cells {}", self.cells.len());
        for c in &self.cells {
            let _ = writeln!(out, "{} {} {}", c[0], c[1], c[2]);
        }
        let _ = writeln!(out, "facets {}", self.boundary_facets.len());
        for f in &self.boundary_facets {
            let _ = writeln!(out, "{} {} {}", f.nodes[0], f.nodes[1], f.marker.name());
        }
        out
    }
}

fn section_count(
    take: &mut impl FnMut(usize, usize) -> Result<Vec<(usize, Vec<String>)>>,
    name: &str,
) -> Result<usize> {
    let (no, fields) = take(1, 2)?.remove(0);
    if fields[0] != name {
        return Err(Error::Parse(format!("line {no}: expected '{name} <count>'")));
    }
    fields[1]
        .parse()
        .map_err(|_| Error::Parse(format!("line {no}: bad count '{}'", fields[1])))
}

/// Marker rule for a rectangle: one marker per side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SideMarkers {
    pub bottom: Marker,
    pub top: Marker,
    pub left: Marker,
    pub right: Marker,
}

impl Default for SideMarkers {
    fn default() -> Self {
        Self {
            bottom: Marker::GammaC,
            top: Marker::Gamma1,
            left: Marker::Gamma2,
            right: Marker::Gamma2,
        }
    }
}

impl SideMarkers {
    /// Rule assigning the marker of the nearest side to a facet midpoint.
    pub fn rule(self, rect: Rect) -> impl Fn(Point) -> Marker {
        move |p| {
            let d = [
                (p[1] - rect.y_min).abs(),
                (rect.y_max - p[1]).abs(),
                (p[0] - rect.x_min).abs(),
                (rect.x_max - p[0]).abs(),
            ];
            let sides = [self.bottom, self.top, self.left, self.right];
            let mut best = 0;
            for k in 1..4 {
                if d[k] < d[best] {
                    best = k;
                }
            }
            sides[best]
        }
    }
}

/// Structured rectangle mesh with one marker per side.
pub fn rect_mesh(nx: usize, ny: usize, rect: Rect, sides: SideMarkers) -> Result<Mesh> {
    let tri = build_structured_rect(nx, ny, rect)?;
    mark_boundary(&tri, sides.rule(rect))
}
