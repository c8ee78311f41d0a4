//! Discrete Dirichlet problems on graphs, the conditioned-walk hit field,
//! and the prefix observables `g` and `h`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grid::GridGraph;
use crate::linalg::{conjugate_gradient, dense_solve, Csr};

/// Anything with a vertex count and adjacency lists.
pub trait Adjacency {
    fn n_vertices(&self) -> usize;
    fn neighbors(&self, v: usize) -> &[usize];
}

impl Adjacency for GridGraph {
    fn n_vertices(&self) -> usize {
        self.len()
    }
    fn neighbors(&self, v: usize) -> &[usize] {
        GridGraph::neighbors(self, v)
    }
}

/// A plain undirected graph, used for small test configurations.
#[derive(Clone, Debug)]
pub struct Graph {
    offsets: Vec<usize>,
    adj: Vec<usize>,
}

impl Graph {
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut lists = vec![Vec::new(); n];
        for &(a, b) in edges {
            lists[a].push(b);
            lists[b].push(a);
        }
        let mut offsets = vec![0];
        let mut adj = Vec::new();
        for l in lists {
            adj.extend(l);
            offsets.push(adj.len());
        }
        Graph { offsets, adj }
    }

    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Graph::from_edges(n, &edges)
    }

    /// `w × h` block of the square lattice, vertex `x + w·y`.
    pub fn lattice(w: usize, h: usize) -> Self {
        let mut edges = Vec::new();
        for y in 0..h {
            for x in 0..w {
                let v = x + w * y;
                if x + 1 < w {
                    edges.push((v, v + 1));
                }
                if y + 1 < h {
                    edges.push((v, v + w));
                }
            }
        }
        Graph::from_edges(w * h, &edges)
    }
}

impl Adjacency for Graph {
    fn n_vertices(&self) -> usize {
        self.offsets.len() - 1
    }
    fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[self.offsets[v]..self.offsets[v + 1]]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveMethod {
    /// Dense below 400 unknowns, conjugate gradients above.
    Auto,
    Dense,
    Iterative,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub method: SolveMethod,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-10,
            max_iter: 200_000,
            method: SolveMethod::Auto,
        }
    }
}

impl SolveOptions {
    pub fn dense() -> Self {
        SolveOptions {
            method: SolveMethod::Dense,
            ..Default::default()
        }
    }
}

pub const DENSE_LIMIT: usize = 400;

/// A solved discrete Dirichlet problem.
#[derive(Clone, Debug)]
pub struct GraphField {
    pub values: Vec<f64>,
    /// ∞-norm of `Δu` over the free vertices.
    pub residual: f64,
    pub iterations: usize,
    pub tolerance: f64,
    pub method: SolveMethod,
}

impl GraphField {
    pub fn scaled(mut self, c: f64) -> Self {
        for v in &mut self.values {
            *v *= c;
        }
        self.residual *= c.abs();
        self
    }
}

/// `Δ_G f(v) = Σ_{w∼v} (f(w) − f(v))`.
pub fn laplacian<G: Adjacency + ?Sized>(g: &G, f: &[f64], v: usize) -> f64 {
    g.neighbors(v).iter().map(|&w| f[w] - f[v]).sum()
}

pub fn flux_sum<G: Adjacency + ?Sized>(g: &G, f: &[f64], set: &[usize]) -> f64 {
    set.iter().map(|&v| laplacian(g, f, v)).sum()
}

/// Solve `Δu = 0` at every vertex with `fixed[v] == None`, with the given
/// values elsewhere. `guess` warm-starts the iterative path.
pub fn solve_dirichlet<G: Adjacency + ?Sized>(
    g: &G,
    fixed: &[Option<f64>],
    guess: Option<&[f64]>,
    opts: &SolveOptions,
) -> Result<GraphField> {
    let n = g.n_vertices();
    assert_eq!(fixed.len(), n);
    if !(opts.tol > 0.0) {
        return Err(Error::invariant("tol", "tolerance must be positive"));
    }
    if fixed.iter().all(|f| f.is_none()) {
        return Err(Error::Singular("no absorbing vertex".into()));
    }
    check_anchored(g, fixed)?;
    let mut index = vec![usize::MAX; n];
    let mut free = Vec::new();
    for v in 0..n {
        if fixed[v].is_none() {
            index[v] = free.len();
            free.push(v);
        }
    }
    let mut a = Csr::with_capacity(free.len(), 5 * free.len());
    let mut b = vec![0.0; free.len()];
    for (k, &v) in free.iter().enumerate() {
        let nb = g.neighbors(v);
        let mut row = Vec::with_capacity(nb.len() + 1);
        let mut deg = 0.0;
        for &w in nb {
            if w == v {
                continue;
            }
            deg += 1.0;
            match fixed[w] {
                Some(val) => b[k] += val,
                None => row.push((index[w], -1.0)),
            }
        }
        row.push((k, deg));
        a.push_row(row);
    }
    let method = match opts.method {
        SolveMethod::Auto if free.len() < DENSE_LIMIT => SolveMethod::Dense,
        SolveMethod::Auto => SolveMethod::Iterative,
        m => m,
    };
    let (x, iterations) = match method {
        SolveMethod::Dense => (dense_solve(&a, &b)?, 0),
        _ => {
            let mut x: Vec<f64> = match guess {
                Some(gs) => free.iter().map(|&v| gs[v]).collect(),
                None => vec![0.0; free.len()],
            };
            let rep = conjugate_gradient(&a, &b, &mut x, opts.tol, opts.max_iter)?;
            (x, rep.iterations)
        }
    };
    let mut values: Vec<f64> = fixed.iter().map(|f| f.unwrap_or(0.0)).collect();
    for (k, &v) in free.iter().enumerate() {
        values[v] = x[k];
    }
    let residual = free.iter().map(|&v| laplacian(g, &values, v).abs()).fold(0.0, f64::max);
    Ok(GraphField {
        values,
        residual,
        iterations,
        tolerance: opts.tol,
        method,
    })
}

/// Every free vertex must be connected to some fixed vertex through free ones.
fn check_anchored<G: Adjacency + ?Sized>(g: &G, fixed: &[Option<f64>]) -> Result<()> {
    let n = g.n_vertices();
    let mut seen = vec![false; n];
    let mut stack: Vec<usize> = (0..n).filter(|&v| fixed[v].is_some()).collect();
    for &v in &stack {
        seen[v] = true;
    }
    while let Some(v) = stack.pop() {
        for &w in g.neighbors(v) {
            if !seen[w] && fixed[w].is_none() {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    match (0..n).find(|&v| !seen[v]) {
        Some(v) => Err(Error::Singular(format!(
            "vertex {v} lies in a component without absorbing vertices"
        ))),
        None => Ok(()),
    }
}

/// Probability `Q` that the walk hits `target` before `forbidden`.
pub fn hit_field<G: Adjacency + ?Sized>(
    g: &G,
    target: &[usize],
    forbidden: &[usize],
    opts: &SolveOptions,
) -> Result<GraphField> {
    let mut fixed = vec![None; g.n_vertices()];
    for &v in forbidden {
        fixed[v] = Some(0.0);
    }
    for &v in target {
        if fixed[v].is_some() {
            return Err(Error::invariant("target", "target and forbidden sets overlap"));
        }
        fixed[v] = Some(1.0);
    }
    solve_dirichlet(g, &fixed, None, opts)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObservableKind {
    /// `g ≡ 1` on `A`, zero flux into `A`.
    G,
    /// `h ≡ 0` on `A`, unit flux into `A`.
    H,
}

/// The functions `h` and `g` for sets `A`, `B` and pole vertex `x`:
/// both vanish on `B` and are harmonic off `A ∪ B ∪ {x}`; `h` vanishes on `A`
/// with `Σ_A Δh = 1`, `g ≡ 1` on `A` with `Σ_A Δg = 0`.
pub fn pole_observable<G: Adjacency + ?Sized>(
    g: &G,
    a: &[usize],
    b: &[usize],
    x: usize,
    kind: ObservableKind,
    opts: &SolveOptions,
) -> Result<GraphField> {
    let n = g.n_vertices();
    let mut base = vec![None; n];
    for &v in b {
        base[v] = Some(0.0);
    }
    if base[x].is_some() || a.contains(&x) {
        return Err(Error::invariant("x", "pole must lie outside A ∪ B"));
    }
    // u: zero on A ∪ B, one at x
    let mut fixed = base.clone();
    for &v in a {
        fixed[v] = Some(0.0);
    }
    fixed[x] = Some(1.0);
    let u = solve_dirichlet(g, &fixed, None, opts)?;
    let flux_u = flux_sum(g, &u.values, a);
    if !(flux_u > 0.0) {
        return Err(Error::Disconnected("the pole cannot reach the target set".into()));
    }
    match kind {
        ObservableKind::H => Ok(u.scaled(1.0 / flux_u)),
        ObservableKind::G => {
            if let [w] = a {
                if base[*w].is_none() && !is_absorbing_leaf(g, *w) {
                    // single interior target: harmonic at w as well
                    let mut fixed = base;
                    fixed[x] = Some(1.0);
                    let v = solve_dirichlet(g, &fixed, None, opts)?;
                    let vw = v.values[*w];
                    if !(vw > 0.0) {
                        return Err(Error::Disconnected("the pole cannot reach the target".into()));
                    }
                    return Ok(v.scaled(1.0 / vw));
                }
            }
            // g = φ + c u with φ = 1 on A, 0 on B ∪ {x}
            let mut fixed = base;
            for &v in a {
                fixed[v] = Some(1.0);
            }
            fixed[x] = Some(0.0);
            let phi = solve_dirichlet(g, &fixed, None, opts)?;
            let cst = -flux_sum(g, &phi.values, a) / flux_u;
            let values: Vec<f64> = phi.values.iter().zip(&u.values).map(|(p, q)| p + cst * q).collect();
            let free_res = (0..n)
                .filter(|&v| fixed[v].is_none())
                .map(|v| laplacian(g, &values, v).abs())
                .fold(0.0, f64::max);
            Ok(GraphField {
                values,
                residual: free_res,
                iterations: phi.iterations + u.iterations,
                tolerance: opts.tol,
                method: phi.method,
            })
        }
    }
}

fn is_absorbing_leaf<G: Adjacency + ?Sized>(g: &G, v: usize) -> bool {
    g.neighbors(v).len() <= 1
}

/// Observable of a LERW prefix `q(0..=k)` on a grid: `A` is the grid's
/// target set, `B = E_{k−1}` and the pole is `q(k)`.
pub fn observable(grid: &GridGraph, prefix: &[usize], kind: ObservableKind, opts: &SolveOptions) -> Result<GraphField> {
    let (&x, rest) = prefix
        .split_last()
        .ok_or_else(|| Error::invariant("prefix", "prefix must be nonempty"))?;
    if grid.target.contains(&x) {
        return Err(Error::invariant("prefix", "prefix already reached the target"));
    }
    let mut b = grid.forbidden.clone();
    b.extend_from_slice(rest);
    pole_observable(grid, &grid.target, &b, x, kind, opts)
}

/// Green matrix of the grid with every boundary vertex absorbing; prefix
/// observables then reduce to small capacitance systems.
pub struct GreenCache {
    /// Dense inverse of the interior Laplacian, indexed by interior vertex.
    inverse: DMatrix<f64>,
    n_interior: usize,
}

impl GreenCache {
    pub fn new(grid: &GridGraph) -> Result<Self> {
        let n = grid.n_interior();
        let mut m = DMatrix::zeros(n, n);
        for v in 0..n {
            m[(v, v)] = 4.0;
            for &w in grid.neighbors(v) {
                if grid.is_interior(w) {
                    m[(v, w)] -= 1.0;
                }
            }
        }
        let inverse = m
            .cholesky()
            .ok_or_else(|| Error::Singular("interior Laplacian is singular".into()))?
            .inverse();
        Ok(GreenCache { inverse, n_interior: n })
    }

    /// Values at `probes` of `u` with `u = 0` on all boundary vertices and on
    /// `zeros`, `u(x) = 1`, harmonic elsewhere. All vertices must be interior.
    pub fn pole_values(&self, zeros: &[usize], x: usize, probes: &[usize]) -> Result<Vec<f64>> {
        let nodes: Vec<usize> = zeros.iter().copied().chain(std::iter::once(x)).collect();
        if nodes.iter().chain(probes).any(|&v| v >= self.n_interior) {
            return Err(Error::invariant("vertex", "capacitance solve needs interior vertices"));
        }
        let k = nodes.len();
        let m = DMatrix::from_fn(k, k, |i, j| self.inverse[(nodes[i], nodes[j])]);
        let mut rhs = DVector::zeros(k);
        rhs[k - 1] = 1.0;
        let coef = m
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Singular("capacitance system is singular".into()))?;
        Ok(probes
            .iter()
            .map(|&p| (0..k).map(|i| coef[i] * self.inverse[(p, nodes[i])]).sum())
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Domain, Target, Truncation};
    use crate::geom::c;
    use rand::{Rng, SeedableRng};

    #[test]
    fn path_graph_middle_is_half() {
        let g = Graph::path(3);
        let f = solve_dirichlet(&g, &[Some(0.0), None, Some(1.0)], None, &SolveOptions::default()).unwrap();
        assert!((f.values[1] - 0.5).abs() < 1e-14);
        let q = hit_field(&g, &[2], &[0], &SolveOptions::default()).unwrap();
        assert_eq!(q.values[2], 1.0);
        assert_eq!(q.values[0], 0.0);
        assert!((q.values[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn constant_data_gives_constant_field() {
        let g = Graph::lattice(12, 12);
        let fixed: Vec<Option<f64>> = (0..144)
            .map(|v| {
                let (x, y) = (v % 12, v / 12);
                (x == 0 || y == 0 || x == 11 || y == 11).then_some(2.5)
            })
            .collect();
        for method in [SolveMethod::Dense, SolveMethod::Iterative] {
            let f = solve_dirichlet(
                &g,
                &fixed,
                None,
                &SolveOptions {
                    method,
                    ..Default::default()
                },
            )
            .unwrap();
            assert!(f.values.iter().all(|v| (v - 2.5).abs() < 1e-9));
        }
    }

    #[test]
    fn linear_data_is_reproduced() {
        // Re z is exactly discrete harmonic on the square lattice
        let g = Graph::lattice(20, 20);
        let fixed: Vec<Option<f64>> = (0..400)
            .map(|v| {
                let (x, y) = (v % 20, v / 20);
                (x == 0 || y == 0 || x == 19 || y == 19).then_some(x as f64)
            })
            .collect();
        let f = solve_dirichlet(
            &g,
            &fixed,
            None,
            &SolveOptions {
                method: SolveMethod::Iterative,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(f.residual <= 1e-10);
        for v in 0..400 {
            assert!((f.values[v] - (v % 20) as f64).abs() < 1e-8);
        }
    }

    #[test]
    fn unanchored_component_is_singular() {
        let g = Graph::from_edges(4, &[(0, 1), (2, 3)]);
        let err = solve_dirichlet(&g, &[Some(0.0), None, None, None], None, &SolveOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Singular(_)));
    }

    #[test]
    fn dense_oracle_on_small_grid() {
        let d = Domain {
            holes: vec![],
            start_x: 0.0,
            truncation: Truncation::Box {
                half_width: 1.0,
                height: 2.0,
            },
        };
        let grid = GridGraph::build(&d, &Target::PrimeEnd(0.5), 0.5).unwrap();
        let q_it = hit_field(
            &grid,
            &grid.target,
            &grid.forbidden,
            &SolveOptions {
                method: SolveMethod::Iterative,
                tol: 1e-13,
                ..Default::default()
            },
        )
        .unwrap();
        let q_dense = hit_field(&grid, &grid.target, &grid.forbidden, &SolveOptions::dense()).unwrap();
        for (a, b) in q_it.values.iter().zip(&q_dense.values) {
            assert!((a - b).abs() < 1e-11);
        }
        // an independent Gaussian elimination on the same system
        let centre = grid.vertex_near(c(0.0, 1.0)).unwrap();
        let n = grid.n_interior();
        let mut m = DMatrix::<f64>::zeros(n, n);
        let mut rhs = DVector::<f64>::zeros(n);
        for v in 0..n {
            m[(v, v)] = 4.0;
            for &w in grid.neighbors(v) {
                if grid.is_interior(w) {
                    m[(v, w)] = -1.0;
                } else if grid.target.contains(&w) {
                    rhs[v] += 1.0;
                }
            }
        }
        let sol = m.full_piv_lu().solve(&rhs).unwrap();
        assert!((sol[centre] - q_dense.values[centre]).abs() < 1e-12);
    }

    #[test]
    fn h_has_unit_flux_and_g_is_one_on_target() {
        let d = Domain::half_plane(3.0);
        let grid = GridGraph::build(&d, &Target::PrimeEnd(1.0), 0.25).unwrap();
        let prefix = [grid.start, grid.vertex_at(0, 2).unwrap()];
        let h = observable(&grid, &prefix, ObservableKind::H, &SolveOptions::default()).unwrap();
        assert!((flux_sum(&grid, &h.values, &grid.target) - 1.0).abs() < 1e-9);
        assert_eq!(h.values[grid.start], 0.0);
        let g = observable(&grid, &prefix, ObservableKind::G, &SolveOptions::default()).unwrap();
        assert!(grid.target.iter().all(|&v| g.values[v] == 1.0));
        assert!(flux_sum(&grid, &g.values, &grid.target).abs() < 1e-9);
    }

    #[test]
    fn g_multi_vertex_target() {
        let g = Graph::lattice(6, 6);
        let a = [5, 11];
        let b = [0, 6, 12, 30];
        let f = pole_observable(&g, &a, &b, 20, ObservableKind::G, &SolveOptions::dense()).unwrap();
        assert!(a.iter().all(|&v| (f.values[v] - 1.0).abs() < 1e-12));
        assert!(flux_sum(&g, &f.values, &a).abs() < 1e-9);
        for v in 0..36 {
            if !a.contains(&v) && !b.contains(&v) && v != 20 {
                assert!(laplacian(&g, &f.values, v).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn green_cache_matches_direct_solve() {
        let d = Domain::half_plane(2.0);
        let grid = GridGraph::build(&d, &Target::InteriorPoint(c(0.0, 1.0)), 0.125).unwrap();
        let cache = GreenCache::new(&grid).unwrap();
        let prefix: Vec<usize> = (1..5).map(|j| grid.vertex_at(0, j).unwrap()).collect();
        let probes = [grid.vertex_at(3, 3).unwrap(), grid.target[0]];
        let fast = cache.pole_values(&prefix[..3], prefix[3], &probes).unwrap();
        let mut fixed = vec![None; grid.len()];
        for v in grid.n_interior()..grid.len() {
            fixed[v] = Some(0.0);
        }
        for &v in &prefix[..3] {
            fixed[v] = Some(0.0);
        }
        fixed[prefix[3]] = Some(1.0);
        let slow = solve_dirichlet(&grid, &fixed, None, &SolveOptions::default()).unwrap();
        for (k, &p) in probes.iter().enumerate() {
            assert!((fast[k] - slow.values[p]).abs() < 1e-9);
        }
    }

    #[test]
    fn flux_identity_random_graphs() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let (w, h) = (rng.random_range(4..15), rng.random_range(4..15));
            let g = Graph::lattice(w, h);
            let n = w * h;
            let mut roles = vec![0u8; n];
            for r in roles.iter_mut() {
                *r = match rng.random_range(0..10) {
                    0 => 1,
                    1 => 2,
                    _ => 0,
                };
            }
            roles[0] = 1;
            roles[n - 1] = 2;
            let a: Vec<usize> = (0..n).filter(|&v| roles[v] == 1).collect();
            let b: Vec<usize> = (0..n).filter(|&v| roles[v] == 2).collect();
            let fixed: Vec<Option<f64>> = (0..n)
                .map(|v| match roles[v] {
                    1 => Some(0.0),
                    2 => Some(rng.random_range(0.0..1.0)),
                    _ => None,
                })
                .collect();
            let f = solve_dirichlet(&g, &fixed, None, &SolveOptions::dense()).unwrap();
            let s = flux_sum(&g, &f.values, &a) + flux_sum(&g, &f.values, &b);
            assert!(s.abs() <= 1e-9, "{s}");
        }
    }
}
