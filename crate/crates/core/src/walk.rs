//! Loop erasure, h-transformed walks and the discrete LERW sampler.

use std::collections::HashMap;
use std::hash::Hash;

use rand::Rng;

use crate::domain::Setup;
use crate::error::{Error, Result};
use crate::geom::C64;
use crate::grid::GridGraph;
use crate::harmonic::{hit_field, Adjacency, GraphField, SolveOptions};

/// Abort a single walk after this many steps.
pub const MAX_WALK_STEPS: u64 = 1_000_000_000;

/// Loop erasure by the last-visit recursion: `n₀ = max{m : v(m) = v(0)}`,
/// `n_{j+1} = max{m : v(m) = v(n_j + 1)}`.
pub fn loop_erase<T: Copy + Eq + Hash>(path: &[T]) -> Vec<T> {
    let mut last = HashMap::with_capacity(path.len());
    for (m, v) in path.iter().enumerate() {
        last.insert(*v, m);
    }
    erase_with(path, |v| last[v])
}

/// Same as [`loop_erase`] for vertex ids below `n_vertices`, without hashing.
pub fn loop_erase_indices(path: &[usize], n_vertices: usize) -> Vec<usize> {
    let mut last = vec![usize::MAX; n_vertices];
    for (m, &v) in path.iter().enumerate() {
        last[v] = m;
    }
    erase_with(path, |&v| last[v])
}

fn erase_with<T: Copy>(path: &[T], last: impl Fn(&T) -> usize) -> Vec<T> {
    let mut out = Vec::new();
    if path.is_empty() {
        return out;
    }
    let mut n = last(&path[0]);
    out.push(path[n]);
    while n + 1 < path.len() {
        n = last(&path[n + 1]);
        out.push(path[n]);
    }
    out
}

/// Conditioned walk: from `w` step to neighbour `w'` with probability
/// `Q(w')/Σ Q`, stopping on an absorbing vertex.
pub fn sample_conditioned_walk<G: Adjacency + ?Sized, R: Rng + ?Sized>(
    g: &G,
    start: usize,
    q: &[f64],
    absorbing: &[bool],
    rng: &mut R,
) -> Result<Vec<usize>> {
    if !(q[start] > 0.0) {
        return Err(Error::Disconnected("start disconnected from target".into()));
    }
    let mut path = vec![start];
    let mut v = start;
    let mut steps = 0u64;
    while !absorbing[v] {
        let nb = g.neighbors(v);
        let total: f64 = nb.iter().map(|&w| q[w].max(0.0)).sum();
        let mut u = rng.random::<f64>() * total;
        let mut next = nb[nb.len() - 1];
        for &w in nb {
            let p = q[w].max(0.0);
            if u < p {
                next = w;
                break;
            }
            u -= p;
        }
        v = next;
        path.push(v);
        steps += 1;
        if steps >= MAX_WALK_STEPS {
            return Err(Error::Walk(format!("walk exceeded {MAX_WALK_STEPS} steps at vertex {v}")));
        }
    }
    Ok(path)
}

/// Transition row of the h-transformed chain at `v`.
pub fn transition_row<G: Adjacency + ?Sized>(g: &G, q: &[f64], v: usize) -> Vec<(usize, f64)> {
    let nb = g.neighbors(v);
    let total: f64 = nb.iter().map(|&w| q[w].max(0.0)).sum();
    nb.iter().map(|&w| (w, q[w].max(0.0) / total)).collect()
}

/// A sampled discrete LERW: `vertices[0]` is the start vertex, the last
/// vertex lies in the target set.
#[derive(Clone, Debug, PartialEq)]
pub struct LerwSample {
    pub vertices: Vec<usize>,
    /// `q(−1), q(0), …, q(χ)` as physical points.
    pub points: Vec<C64>,
    pub walk_length: usize,
}

impl LerwSample {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn end(&self) -> usize {
        *self.vertices.last().expect("nonempty")
    }
}

/// Grid plus cached hit field; samples independent LERWs.
#[derive(Clone, Debug)]
pub struct LerwSampler {
    pub grid: GridGraph,
    pub q: GraphField,
    absorbing: Vec<bool>,
    /// Per interior vertex: 4 neighbours and cumulative probabilities.
    table: Vec<([usize; 4], [f64; 4])>,
}

impl LerwSampler {
    pub fn new(grid: GridGraph, opts: &SolveOptions) -> Result<Self> {
        let q = hit_field(&grid, &grid.target, &grid.forbidden, opts)?;
        if !(q.values[grid.start] > 0.0) {
            return Err(Error::Disconnected("start disconnected from target".into()));
        }
        let mut absorbing = vec![false; grid.len()];
        for &v in grid.target.iter().chain(&grid.forbidden) {
            absorbing[v] = true;
        }
        let table = (0..grid.n_interior())
            .map(|v| {
                let nb: [usize; 4] = grid.neighbors(v).try_into().expect("interior degree 4");
                let mut cum = [0.0; 4];
                let total: f64 = nb.iter().map(|&w| q.values[w].max(0.0)).sum();
                let mut acc = 0.0;
                for k in 0..4 {
                    acc += q.values[nb[k]].max(0.0) / total;
                    cum[k] = acc;
                }
                (nb, cum)
            })
            .collect();
        Ok(LerwSampler {
            grid,
            q,
            absorbing,
            table,
        })
    }

    pub fn from_setup(setup: &Setup) -> Result<Self> {
        let grid = GridGraph::build(&setup.domain, &setup.target, setup.mesh.mesh)?;
        LerwSampler::new(grid, &SolveOptions::default())
    }

    /// The conditioned walk from `start` until absorption.
    pub fn walk<R: Rng + ?Sized>(&self, start: usize, rng: &mut R) -> Result<Vec<usize>> {
        if !(self.q.values[start] > 0.0) {
            return Err(Error::Disconnected("start disconnected from target".into()));
        }
        let mut path = vec![start];
        let mut v = start;
        while !self.absorbing[v] {
            let (nb, cum) = &self.table[v];
            let u = rng.random::<f64>();
            let k = if u < cum[0] {
                0
            } else if u < cum[1] {
                1
            } else if u < cum[2] {
                2
            } else {
                3
            };
            // cum[3] may be 1 − ε; never select a zero-weight neighbour
            let k = (0..=k).rev().find(|&k| self.q.values[nb[k]] > 0.0).unwrap_or(k);
            v = nb[k];
            path.push(v);
            if path.len() as u64 >= MAX_WALK_STEPS {
                return Err(Error::Walk(format!("walk exceeded {MAX_WALK_STEPS} steps")));
            }
        }
        Ok(path)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<LerwSample> {
        let walk = self.walk(self.grid.start, rng)?;
        let vertices = loop_erase_indices(&walk, self.grid.len());
        let mut points = Vec::with_capacity(vertices.len() + 1);
        points.push(self.grid.pos(self.grid.start_anchor));
        points.extend(vertices.iter().map(|&v| self.grid.pos(v)));
        Ok(LerwSample {
            vertices,
            points,
            walk_length: walk.len(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Domain, Target, Truncation};
    use crate::geom::c;
    use crate::harmonic::Graph;
    use crate::rng::rng_stream;
    use proptest::prelude::*;

    /// Chronological erasure: walk forward, cutting each loop when it closes.
    fn chronological(path: &[u32]) -> Vec<u32> {
        let mut out: Vec<u32> = Vec::new();
        for &v in path {
            if let Some(k) = out.iter().position(|&w| w == v) {
                out.truncate(k + 1);
            } else {
                out.push(v);
            }
        }
        out
    }

    #[test]
    fn spec_examples() {
        assert_eq!(loop_erase(&['a']), vec!['a']);
        assert_eq!(loop_erase(&['a', 'b', 'a', 'c']), vec!['a', 'c']);
        let p = [(0, 0), (1, 0), (1, 1), (0, 1), (0, 0), (-1, 0)];
        assert_eq!(loop_erase(&p), vec![(0, 0), (-1, 0)]);
        assert_eq!(loop_erase(&[1, 2, 3, 4]), vec![1, 2, 3, 4]);
    }

    #[test]
    fn path_graph_walk_is_deterministic() {
        let g = Graph::path(3);
        let q = [0.0, 0.5, 1.0];
        let absorbing = [true, false, true];
        let mut rng = rng_stream(1, 0);
        for _ in 0..10 {
            let p = sample_conditioned_walk(&g, 1, &q, &absorbing, &mut rng).unwrap();
            assert_eq!(p, vec![1, 2]);
        }
        let row = transition_row(&g, &q, 1);
        assert_eq!(row, vec![(0, 0.0), (2, 1.0)]);
        assert!(sample_conditioned_walk(&g, 0, &q, &absorbing, &mut rng).is_err());
    }

    #[test]
    fn rows_sum_to_one() {
        let d = Domain::half_plane(3.0);
        let s = LerwSampler::new(
            GridGraph::build(&d, &Target::InteriorPoint(c(0.5, 1.0)), 0.25).unwrap(),
            &SolveOptions::default(),
        )
        .unwrap();
        for v in 0..s.grid.n_interior() {
            if s.q.values[v] > 0.0 {
                let sum: f64 = transition_row(&s.grid, &s.q.values, v).iter().map(|r| r.1).sum();
                assert!((sum - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn corridor_lerw_is_the_corridor() {
        // a width-one vertical corridor: only the column above the start
        let d = Domain {
            holes: vec![],
            start_x: 0.0,
            truncation: Truncation::Box {
                half_width: 0.5,
                height: 4.0,
            },
        };
        let s = LerwSampler::new(
            GridGraph::build(&d, &Target::InteriorPoint(c(0.0, 3.0)), 0.5).unwrap(),
            &SolveOptions::default(),
        )
        .unwrap();
        let mut rng = rng_stream(5, 0);
        for _ in 0..20 {
            let q = s.sample(&mut rng).unwrap();
            let ys: Vec<f64> = q.points.iter().map(|z| z.im).collect();
            assert_eq!(ys, vec![0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0]);
        }
    }

    #[test]
    fn lerw_samples_are_simple() {
        let d = Domain::half_plane(4.0);
        let s = LerwSampler::new(
            GridGraph::build(&d, &Target::PrimeEnd(0.5), 0.125).unwrap(),
            &SolveOptions::default(),
        )
        .unwrap();
        let mut rng = rng_stream(9, 0);
        for _ in 0..10_000 {
            let q = s.sample(&mut rng).unwrap();
            let mut seen = std::collections::HashSet::new();
            assert!(q.vertices.iter().all(|v| seen.insert(*v)));
            assert_eq!(q.vertices[0], s.grid.start);
            assert_eq!(q.end(), s.grid.target[0]);
        }
    }

    #[test]
    fn exhaustive_block_paths() {
        // every lattice path of length ≤ 8 in a 3×3 block
        let nb = |v: u32| {
            let (x, y) = (v % 3, v / 3);
            let mut out = vec![];
            if x > 0 {
                out.push(v - 1);
            }
            if x < 2 {
                out.push(v + 1);
            }
            if y > 0 {
                out.push(v - 3);
            }
            if y < 2 {
                out.push(v + 3);
            }
            out
        };
        let mut count = 0usize;
        let mut stack: Vec<Vec<u32>> = (0..9).map(|v| vec![v]).collect();
        while let Some(p) = stack.pop() {
            let le = loop_erase(&p);
            assert_eq!(le, chronological(&p));
            assert_eq!(loop_erase(&le), le);
            assert_eq!(le[0], p[0]);
            assert_eq!(le.last(), p.last());
            count += 1;
            if p.len() <= 8 {
                for w in nb(*p.last().unwrap()) {
                    let mut q = p.clone();
                    q.push(w);
                    stack.push(q);
                }
            }
        }
        assert!(count > 10_000, "{count}");
    }

    proptest! {
        #[test]
        fn loop_erase_properties(steps in prop::collection::vec(0u8..4, 0..200)) {
            let mut p = vec![(0i32, 0i32)];
            for s in steps {
                let (x, y) = *p.last().unwrap();
                p.push(match s { 0 => (x + 1, y), 1 => (x, y + 1), 2 => (x - 1, y), _ => (x, y - 1) });
            }
            let le = loop_erase(&p);
            let mut seen = std::collections::HashSet::new();
            prop_assert!(le.iter().all(|v| seen.insert(*v)));
            prop_assert_eq!(le[0], p[0]);
            prop_assert_eq!(le.last(), p.last());
            for w in le.windows(2) {
                prop_assert_eq!((w[0].0 - w[1].0).abs() + (w[0].1 - w[1].1).abs(), 1);
            }
            prop_assert_eq!(loop_erase(&le), le);
        }
    }
}
