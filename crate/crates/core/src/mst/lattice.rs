use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};

/// Largest supported lattice dimension.
pub const MAX_DIMENSION: usize = 4;

type Point = [i32; MAX_DIMENSION];

/// Nearest-neighbor edge identified by its lexicographically smaller
/// endpoint and the axis it points along. Coordinates past `dim` are zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    dim: u8,
    origin: Point,
    axis: u8,
}

impl Edge {
    pub fn new(origin: &[i32], axis: usize) -> Result<Self> {
        let d = origin.len();
        if !(2..=MAX_DIMENSION).contains(&d) {
            return Err(invalid(format!("edge dimension must lie in 2..={MAX_DIMENSION}, got {d}")));
        }
        if axis >= d {
            return Err(invalid(format!("axis {axis} out of range for dimension {d}")));
        }
        let mut p = [0; MAX_DIMENSION];
        p[..d].copy_from_slice(origin);
        Ok(Self {
            dim: d as u8,
            origin: p,
            axis: axis as u8,
        })
    }

    /// The edge from the origin to `(1, 0, ..., 0)`.
    pub fn distinguished(d: usize) -> Result<Self> {
        Self::new(&vec![0; d], 0)
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn axis(&self) -> usize {
        self.axis as usize
    }

    pub fn origin(&self) -> &[i32] {
        &self.origin[..self.dim()]
    }

    pub fn endpoint(&self) -> Vec<i32> {
        let mut p = self.origin().to_vec();
        p[self.axis()] += 1;
        p
    }

    /// Bytes fed to the weight hash.
    pub fn key(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + 4 * MAX_DIMENSION);
        out.extend_from_slice(b"edge");
        out.push(self.dim);
        out.push(self.axis);
        for c in self.origin() {
            out.extend_from_slice(&c.to_le_bytes());
        }
        out
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let coords: Vec<String> = self.origin().iter().map(|c| c.to_string()).collect();
        write!(f, "{}/{}", coords.join(","), self.axis)
    }
}

impl FromStr for Edge {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (coords, axis) = s
            .split_once('/')
            .ok_or_else(|| invalid(format!("edge id {s:?} is not of the form x1,..,xd/axis")))?;
        let origin = coords
            .split(',')
            .map(|c| c.trim().parse::<i32>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| invalid(format!("edge id {s:?}: {e}")))?;
        let axis = axis
            .trim()
            .parse::<usize>()
            .map_err(|e| invalid(format!("edge id {s:?}: {e}")))?;
        Edge::new(&origin, axis)
    }
}

/// The box `center + [-radius, radius]^d` of `Z^d` with its nearest-neighbor
/// edges.
#[derive(Debug, Clone)]
pub struct LatticeBox {
    d: usize,
    radius: usize,
    center: Point,
    side: usize,
    edges: Vec<Edge>,
    // vertex * d + axis -> edge index, u32::MAX when the edge leaves the box.
    slots: Vec<u32>,
}

impl PartialEq for LatticeBox {
    fn eq(&self, other: &Self) -> bool {
        self.d == other.d && self.radius == other.radius && self.center == other.center
    }
}

impl LatticeBox {
    /// `V_n = [-n, n]^d`.
    pub fn new(d: usize, n: usize) -> Result<Self> {
        Self::centered(&vec![0; d], n)
    }

    pub fn centered(center: &[i32], radius: usize) -> Result<Self> {
        let d = center.len();
        if !(2..=MAX_DIMENSION).contains(&d) {
            return Err(invalid(format!("lattice dimension must lie in 2..={MAX_DIMENSION}, got {d}")));
        }
        if radius == 0 || radius > 1 << 12 {
            return Err(invalid(format!("lattice radius must lie in 1..=4096, got {radius}")));
        }
        let side = 2 * radius + 1;
        let vertices = side
            .checked_pow(d as u32)
            .filter(|&v| v < u32::MAX as usize / MAX_DIMENSION)
            .ok_or_else(|| invalid("lattice box too large"))?;
        let mut c = [0; MAX_DIMENSION];
        c[..d].copy_from_slice(center);
        let mut b = Self {
            d,
            radius,
            center: c,
            side,
            edges: Vec::with_capacity(d * vertices),
            slots: vec![u32::MAX; d * vertices],
        };
        for v in 0..vertices {
            let p = b.point(v);
            for axis in 0..d {
                if (p[axis] - b.center[axis]) < radius as i32 {
                    b.slots[v * d + axis] = b.edges.len() as u32;
                    b.edges.push(Edge::new(&p[..d], axis)?);
                }
            }
        }
        Ok(b)
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn center(&self) -> &[i32] {
        &self.center[..self.d]
    }

    pub fn vertex_count(&self) -> usize {
        self.side.pow(self.d as u32)
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, index: usize) -> Edge {
        self.edges[index]
    }

    fn point(&self, mut v: usize) -> Point {
        let mut p = [0; MAX_DIMENSION];
        for (j, c) in p.iter_mut().enumerate().take(self.d) {
            *c = (v % self.side) as i32 - self.radius as i32 + self.center[j];
            v /= self.side;
        }
        p
    }

    pub fn contains_point(&self, p: &[i32]) -> bool {
        p.len() == self.d
            && p.iter()
                .zip(self.center())
                .all(|(&x, &c)| (x - c).unsigned_abs() as usize <= self.radius)
    }

    pub fn vertex_index(&self, p: &[i32]) -> Option<usize> {
        if !self.contains_point(p) {
            return None;
        }
        let mut v = 0;
        for j in (0..self.d).rev() {
            v = v * self.side + (p[j] - self.center[j] + self.radius as i32) as usize;
        }
        Some(v)
    }

    pub fn contains_edge(&self, e: &Edge) -> bool {
        self.edge_index(e).is_some()
    }

    pub fn edge_index(&self, e: &Edge) -> Option<usize> {
        if e.dim() != self.d {
            return None;
        }
        let v = self.vertex_index(e.origin())?;
        let slot = self.slots[v * self.d + e.axis()];
        (slot != u32::MAX).then_some(slot as usize)
    }

    /// Vertex indices of both endpoints.
    pub fn endpoints(&self, index: usize) -> (usize, usize) {
        let e = &self.edges[index];
        let u = self.vertex_index(e.origin()).expect("edge lies in its box");
        let stride = self.side.pow(e.axis() as u32);
        (u, u + stride)
    }

    /// Whether `other` is a sub-box of `self`.
    pub fn contains_box(&self, other: &LatticeBox) -> bool {
        other.d == self.d
            && (0..self.d).all(|j| {
                let lo = other.center[j] - other.radius as i32;
                let hi = other.center[j] + other.radius as i32;
                lo >= self.center[j] - self.radius as i32 && hi <= self.center[j] + self.radius as i32
            })
    }

    /// The translate `e + V_k`, centered at the origin of `e`.
    pub fn translated(e: &Edge, k: usize) -> Result<Self> {
        Self::centered(e.origin(), k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        for (d, n) in [(2, 1), (2, 3), (3, 2), (4, 1)] {
            let b = LatticeBox::new(d, n).unwrap();
            let side = 2 * n + 1;
            assert_eq!(b.vertex_count(), side.pow(d as u32));
            assert_eq!(b.edge_count(), d * (side - 1) * side.pow(d as u32 - 1));
        }
        assert!(LatticeBox::new(1, 3).is_err());
        assert!(LatticeBox::new(2, 0).is_err());
    }

    #[test]
    fn edges_join_neighbors() {
        let b = LatticeBox::centered(&[3, -2, 1], 2).unwrap();
        for (i, e) in b.edges().iter().enumerate() {
            assert_eq!(b.edge_index(e), Some(i));
            let (u, v) = b.endpoints(i);
            assert_eq!(Some(u), b.vertex_index(e.origin()));
            assert_eq!(Some(v), b.vertex_index(&e.endpoint()));
            let dist: i32 = e.origin().iter().zip(e.endpoint()).map(|(a, b)| (a - b).abs()).sum();
            assert_eq!(dist, 1);
            assert!(e.origin() < e.endpoint().as_slice());
        }
    }

    #[test]
    fn edge_ids_round_trip() {
        let b = LatticeBox::new(3, 1).unwrap();
        for e in b.edges() {
            assert_eq!(e.to_string().parse::<Edge>().unwrap(), *e);
        }
        assert!("1,2".parse::<Edge>().is_err());
        assert!("1,2/2".parse::<Edge>().is_err());
    }

    #[test]
    fn translated_box_containment() {
        let full = LatticeBox::new(2, 5).unwrap();
        let e = Edge::new(&[1, -2], 1).unwrap();
        assert!(full.contains_box(&LatticeBox::translated(&e, 3).unwrap()));
        assert!(!full.contains_box(&LatticeBox::translated(&e, 4).unwrap()));
        let sub = LatticeBox::translated(&e, 2).unwrap();
        assert!(sub.contains_edge(&e));
        assert_eq!(sub.center(), &[1, -2]);
    }
}
