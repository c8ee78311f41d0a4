//! Lattice approximation of a domain: interior lattice vertices plus one
//! boundary vertex per lattice edge that leaves the domain.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;

use crate::domain::{BoundaryPart, Domain, Target};
use crate::error::{Error, Result};
use crate::geom::{c, C64};

const DIRS: [(i32, i32); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum VertexKind {
    Interior { i: i32, j: i32 },
    /// `⟨z1, z2⟩`: `anchor` is the interior vertex `z1`, the vertex position is `z2`.
    Boundary { anchor: usize, part: BoundaryPart },
}

#[derive(Clone, Debug)]
pub struct GridGraph {
    pub mesh: f64,
    /// Physical position of lattice index (0, 0).
    pub origin: C64,
    pos: Vec<C64>,
    kind: Vec<VertexKind>,
    offsets: Vec<usize>,
    adj: Vec<usize>,
    n_interior: usize,
    lattice: HashMap<(i32, i32), usize>,
    pub start: usize,
    /// Boundary vertex `⟨start + iδ, start⟩`, the anchor `q(−1)`.
    pub start_anchor: usize,
    pub target: Vec<usize>,
    pub forbidden: Vec<usize>,
    /// The vertex `w_e^δ` for interior and prime-end targets.
    pub target_point: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct GridStats {
    pub interior: usize,
    pub boundary: usize,
    pub edges: usize,
    pub target_size: usize,
}

/// Lattice point nearest `p`, ties broken towards larger `Re z + π Im z`.
pub fn nearest_lattice_point(origin: C64, mesh: f64, p: C64) -> (i32, i32) {
    let x = (p.re - origin.re) / mesh;
    let y = (p.im - origin.im) / mesh;
    let mut best: Option<((i32, i32), f64, f64)> = None;
    for i in [x.floor(), x.ceil()] {
        for j in [y.floor(), y.ceil()] {
            let d = (i - x).powi(2) + (j - y).powi(2);
            let score = i + std::f64::consts::PI * j;
            let key = (i as i32, j as i32);
            best = match best {
                None => Some((key, d, score)),
                Some((_, bd, bs)) if d < bd - 1e-12 || ((d - bd).abs() <= 1e-12 && score > bs) => {
                    Some((key, d, score))
                }
                b => b,
            };
        }
    }
    best.unwrap().0
}

impl GridGraph {
    pub fn build(domain: &Domain, target: &Target, mesh: f64) -> Result<Self> {
        if !(mesh > 0.0) {
            return Err(Error::invariant("mesh", "mesh must be positive"));
        }
        let origin = domain.start();
        let at = |i: i32, j: i32| origin + c(i as f64 * mesh, j as f64 * mesh);
        if !domain.contains(at(0, 1)) {
            return Err(Error::Grid(format!(
                "start vertex {} is not inside the domain (mesh {mesh} too coarse)",
                at(0, 1)
            )));
        }

        let mut pos = Vec::new();
        let mut ij = Vec::new();
        let mut lattice = HashMap::new();
        lattice.insert((0, 1), 0usize);
        pos.push(at(0, 1));
        ij.push((0, 1));
        // per interior vertex, per direction: Ok(interior index) or Err((z2, part))
        let mut links: Vec<[std::result::Result<usize, (C64, BoundaryPart)>; 4]> = Vec::new();
        let mut queue = VecDeque::from([0usize]);
        while let Some(v) = queue.pop_front() {
            let (i, j) = ij[v];
            let z1 = pos[v];
            let mut row: [std::result::Result<usize, (C64, BoundaryPart)>; 4] = [Ok(0); 4];
            for (d, &(di, dj)) in DIRS.iter().enumerate() {
                let z3 = at(i + di, j + dj);
                row[d] = match domain.first_boundary_hit(z1, z3) {
                    Some((s, part)) => Err((z1 + (z3 - z1) * s, part)),
                    None => {
                        let key = (i + di, j + dj);
                        let w = *lattice.entry(key).or_insert_with(|| {
                            pos.push(z3);
                            ij.push(key);
                            queue.push_back(pos.len() - 1);
                            pos.len() - 1
                        });
                        Ok(w)
                    }
                };
            }
            debug_assert_eq!(links.len(), v);
            links.push(row);
        }
        let n_interior = pos.len();

        let mut kind: Vec<VertexKind> = ij.iter().map(|&(i, j)| VertexKind::Interior { i, j }).collect();
        let mut offsets = Vec::with_capacity(n_interior + 1);
        let mut adj = Vec::with_capacity(4 * n_interior);
        let mut boundary_anchor = Vec::new();
        offsets.push(0);
        for (v, row) in links.iter().enumerate() {
            for link in row {
                match *link {
                    Ok(w) => adj.push(w),
                    Err((z2, part)) => {
                        let b = pos.len();
                        pos.push(z2);
                        kind.push(VertexKind::Boundary { anchor: v, part });
                        boundary_anchor.push(v);
                        adj.push(b);
                    }
                }
            }
            offsets.push(adj.len());
        }
        for &a in &boundary_anchor {
            adj.push(a);
            offsets.push(adj.len());
        }

        let mut g = GridGraph {
            mesh,
            origin,
            pos,
            kind,
            offsets,
            adj,
            n_interior,
            lattice,
            start: 0,
            start_anchor: 0,
            target: Vec::new(),
            forbidden: Vec::new(),
            target_point: None,
        };
        g.start_anchor = g
            .boundary_neighbor(0, 3)
            .ok_or_else(|| Error::Grid("start vertex has no boundary vertex below it".into()))?;

        match target {
            Target::InteriorPoint(p) => {
                let key = nearest_lattice_point(origin, mesh, *p);
                let w = g.lattice.get(&key).copied().ok_or_else(|| {
                    Error::Grid(format!("target vertex {} is not reachable from the start", at(key.0, key.1)))
                })?;
                g.target = vec![w];
                g.target_point = Some(w);
                g.forbidden = (n_interior..g.len()).collect();
            }
            Target::PrimeEnd(x) => {
                let k = ((x - origin.re) / mesh).round() as i32;
                let w = g
                    .lattice
                    .get(&(k, 1))
                    .and_then(|&a| g.boundary_neighbor(a, 3).map(|b| (a, b)))
                    .filter(|&(_, b)| (g.pos[b] - c(*x, 0.0)).norm() <= 1e-9 * (1.0 + x.abs()))
                    .ok_or_else(|| Error::Grid(format!("prime end {x} is not reachable from the start")))?;
                g.target = vec![w.1];
                g.target_point = Some(w.0);
                g.forbidden = (n_interior..g.len()).filter(|&b| b != w.1).collect();
            }
            Target::SideArc(arc) => {
                let (f, e): (Vec<usize>, Vec<usize>) = (n_interior..g.len()).partition(|&b| match g.kind[b] {
                    VertexKind::Boundary { part, .. } => arc.contains(domain, part, g.pos[b]),
                    _ => false,
                });
                if f.is_empty() {
                    return Err(Error::Grid("target arc is not reachable from the start".into()));
                }
                g.target = f;
                g.forbidden = e;
            }
        }
        Ok(g)
    }

    /// The boundary vertex hanging off interior vertex `v` in direction `d`
    /// (0 = east, 1 = north, 2 = west, 3 = south), if that edge leaves the domain.
    pub fn boundary_neighbor(&self, v: usize, d: usize) -> Option<usize> {
        if v >= self.n_interior {
            return None;
        }
        let w = self.adj[self.offsets[v] + d];
        (w >= self.n_interior).then_some(w)
    }

    pub fn len(&self) -> usize {
        self.pos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pos.is_empty()
    }

    pub fn n_interior(&self) -> usize {
        self.n_interior
    }

    pub fn is_interior(&self, v: usize) -> bool {
        v < self.n_interior
    }

    pub fn pos(&self, v: usize) -> C64 {
        self.pos[v]
    }

    pub fn positions(&self) -> &[C64] {
        &self.pos
    }

    pub fn kind(&self, v: usize) -> VertexKind {
        self.kind[v]
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[self.offsets[v]..self.offsets[v + 1]]
    }

    /// Interior vertex at lattice index `(i, j)`.
    pub fn vertex_at(&self, i: i32, j: i32) -> Option<usize> {
        self.lattice.get(&(i, j)).copied()
    }

    /// Interior vertex nearest to the physical point `z`, if it is in the graph.
    pub fn vertex_near(&self, z: C64) -> Option<usize> {
        let (i, j) = nearest_lattice_point(self.origin, self.mesh, z);
        self.vertex_at(i, j)
    }

    pub fn lattice_index(&self, v: usize) -> Option<(i32, i32)> {
        match self.kind[v] {
            VertexKind::Interior { i, j } => Some((i, j)),
            _ => None,
        }
    }

    pub fn stats(&self) -> GridStats {
        GridStats {
            interior: self.n_interior,
            boundary: self.len() - self.n_interior,
            edges: self.adj.len() / 2,
            target_size: self.target.len(),
        }
    }

    /// CSV dump: `vertex_id,kind,x,y,neighbor_ids` (neighbours space separated).
    pub fn to_csv(&self) -> String {
        let mut s = String::from("vertex_id,kind,x,y,neighbor_ids\n");
        for v in 0..self.len() {
            let kind = if self.is_interior(v) { "interior" } else { "boundary" };
            let nb: Vec<String> = self.neighbors(v).iter().map(|w| w.to_string()).collect();
            let z = self.pos[v];
            let _ = writeln!(s, "{v},{kind},{},{},{}", z.re, z.im, nb.join(" "));
        }
        s
    }
}
