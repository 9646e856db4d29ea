//! Graphs, the stability number, and the `theta^(r)` hierarchy.

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};
use crate::gram::{Blocking, EncodingKind, GramEncoding, MonomialBasis};
use crate::poly::power_sum_squares;
use crate::rational::int;
use crate::sdp::{self, Residuals, SolverOptions, Status};
use crate::symmat::SymmetricMatrix;
use crate::{ExactMatrix, ExactPolynomial, Rational};

/// Simple undirected graph on vertices `0..n` (written 1-based in files).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Graph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl Graph {
    pub fn new(n: usize) -> Self {
        Graph {
            n,
            edges: BTreeSet::new(),
        }
    }

    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut g = Graph::new(n);
        for (i, j) in edges {
            g.add_edge(i, j)?;
        }
        Ok(g)
    }

    /// Adds `{i, j}`; repeated edges are merged, loops rejected.
    pub fn add_edge(&mut self, i: usize, j: usize) -> Result<()> {
        if i == j {
            return Err(Error::InvalidArgument(format!("loop at vertex {}", i + 1)));
        }
        if i >= self.n || j >= self.n {
            return Err(Error::InvalidArgument(format!(
                "edge {{{}, {}}} outside vertex range 1..{}",
                i + 1,
                j + 1,
                self.n
            )));
        }
        self.edges.insert((i.min(j), i.max(j)));
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Edges `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i.min(j), i.max(j)))
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(i, j)| i == v || j == v).count()
    }

    pub fn adjacency(&self) -> ExactMatrix {
        SymmetricMatrix::from_fn(self.n, |i, j| int(self.has_edge(i, j) as i64))
    }

    /// DIMACS-like text: `p edge n m`, then `e i j` per edge (1-based,
    /// lexicographic).
    pub fn to_dimacs(&self) -> String {
        let mut s = format!("p edge {} {}\n", self.n, self.edges.len());
        for &(i, j) in &self.edges {
            let _ = writeln!(s, "e {} {}", i + 1, j + 1);
        }
        s
    }

    /// Parses the DIMACS-like format; `c` lines are comments.
    pub fn parse_dimacs(text: &str) -> Result<Self> {
        let mut graph: Option<(Graph, usize, usize)> = None;
        for (k, raw) in text.lines().enumerate() {
            let ln = k + 1;
            let l = raw.trim();
            if l.is_empty() || l.starts_with('c') {
                continue;
            }
            let fields: Vec<&str> = l.split_whitespace().collect();
            match fields[0] {
                "p" => {
                    if graph.is_some() {
                        return Err(Error::parse(ln, "duplicate problem line"));
                    }
                    if fields.len() != 4 || fields[1] != "edge" {
                        return Err(Error::parse(ln, "expected 'p edge <n> <m>'"));
                    }
                    let n = fields[2]
                        .parse()
                        .map_err(|_| Error::parse(ln, format!("bad vertex count '{}'", fields[2])))?;
                    let m = fields[3]
                        .parse()
                        .map_err(|_| Error::parse(ln, format!("bad edge count '{}'", fields[3])))?;
                    graph = Some((Graph::new(n), m, ln));
                }
                "e" => {
                    let Some((g, _, _)) = graph.as_mut() else {
                        return Err(Error::parse(ln, "edge before problem line"));
                    };
                    if fields.len() != 3 {
                        return Err(Error::parse(ln, "expected 'e <i> <j>'"));
                    }
                    let idx = |s: &str| -> Result<usize> {
                        s.parse::<usize>()
                            .ok()
                            .filter(|&v| v >= 1)
                            .map(|v| v - 1)
                            .ok_or_else(|| Error::parse(ln, format!("bad vertex '{s}'")))
                    };
                    let (i, j) = (idx(fields[1])?, idx(fields[2])?);
                    if i == j {
                        return Err(Error::parse(ln, format!("loop at vertex {}", i + 1)));
                    }
                    if g.has_edge(i, j) {
                        return Err(Error::parse(ln, format!("duplicate edge {} {}", i + 1, j + 1)));
                    }
                    g.add_edge(i, j).map_err(|e| Error::parse(ln, e.to_string()))?;
                }
                other => return Err(Error::parse(ln, format!("unknown record '{other}'"))),
            }
        }
        let (g, m, ln) = graph.ok_or_else(|| Error::parse(1, "missing problem line"))?;
        if g.num_edges() != m {
            return Err(Error::parse(ln, format!("declared {m} edges, found {}", g.num_edges())));
        }
        Ok(g)
    }

    pub fn read_file(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::parse_dimacs(&std::fs::read_to_string(path)?)
    }
}

pub fn cycle(n: usize) -> Graph {
    let mut g = Graph::new(n);
    if n >= 3 {
        for i in 0..n {
            g.add_edge(i, (i + 1) % n).expect("valid edge");
        }
    } else if n == 2 {
        g.add_edge(0, 1).expect("valid edge");
    }
    g
}

pub fn complete(n: usize) -> Graph {
    Graph::from_edges(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)))).expect("valid edges")
}

pub fn empty(n: usize) -> Graph {
    Graph::new(n)
}

pub fn petersen() -> Graph {
    let mut edges = Vec::new();
    for i in 0..5 {
        edges.push((i, (i + 1) % 5));
        edges.push((i, i + 5));
        edges.push((i + 5, (i + 2) % 5 + 5));
    }
    Graph::from_edges(10, edges).expect("valid edges")
}

/// Erdős–Rényi `G(n, p)`.
pub fn random_graph(n: usize, p: f64, rng: &mut impl Rng) -> Graph {
    let mut g = Graph::new(n);
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(p) {
                g.add_edge(i, j).expect("valid edge");
            }
        }
    }
    g
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// One representative per isomorphism class of graphs on exactly `n`
/// vertices (`n <= 6`), smallest canonical edge mask first.
pub fn nonisomorphic_graphs(n: usize) -> Result<Vec<Graph>> {
    if n > 6 {
        return Err(Error::InvalidArgument("exhaustive generation is limited to n <= 6".into()));
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let index = |i: usize, j: usize| pairs.iter().position(|&p| p == (i.min(j), i.max(j))).expect("pair");
    let maps: Vec<Vec<usize>> = permutations(n)
        .iter()
        .map(|perm| pairs.iter().map(|&(i, j)| index(perm[i], perm[j])).collect())
        .collect();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for mask in 0u32..(1u32 << pairs.len()) {
        let canon = maps
            .iter()
            .map(|map| {
                let mut m = 0u32;
                for (k, &t) in map.iter().enumerate() {
                    if mask >> k & 1 == 1 {
                        m |= 1 << t;
                    }
                }
                m
            })
            .min()
            .unwrap_or(0);
        if canon == mask && seen.insert(canon) {
            let edges = pairs.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &e)| e);
            out.push(Graph::from_edges(n, edges)?);
        }
    }
    Ok(out)
}

/// Every isomorphism class on `1..=max_n` vertices.
pub fn all_graphs_up_to(max_n: usize) -> Result<Vec<Graph>> {
    let mut out = Vec::new();
    for n in 1..=max_n {
        out.extend(nonisomorphic_graphs(n)?);
    }
    Ok(out)
}

/// Stability number by branch and bound with a greedy clique-cover bound.
///
/// Vertices are processed in ascending degree order (ties by index).
/// Supports up to 128 vertices.
pub fn alpha(g: &Graph) -> usize {
    let n = g.n;
    if n == 0 {
        return 0;
    }
    assert!(n <= 128, "alpha supports at most 128 vertices");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| (g.degree(v), v));
    // Relabel so bit k is the k-th vertex in the processing order.
    let pos: Vec<usize> = {
        let mut p = vec![0; n];
        for (k, &v) in order.iter().enumerate() {
            p[v] = k;
        }
        p
    };
    let mut adj = vec![0u128; n];
    for (i, j) in g.edges() {
        adj[pos[i]] |= 1 << pos[j];
        adj[pos[j]] |= 1 << pos[i];
    }
    let all = if n == 128 { u128::MAX } else { (1u128 << n) - 1 };
    let mut best = 0;
    branch(&adj, all, 0, &mut best);
    best
}

/// Number of cliques in a greedy cover of `p`: an upper bound on the
/// stability number of the induced subgraph.
fn clique_cover_bound(adj: &[u128], mut p: u128) -> usize {
    let mut count = 0;
    while p != 0 {
        let mut candidates = p;
        while candidates != 0 {
            let v = candidates.trailing_zeros() as usize;
            p &= !(1 << v);
            candidates &= adj[v] & !(1 << v);
        }
        count += 1;
    }
    count
}

fn branch(adj: &[u128], p: u128, size: usize, best: &mut usize) {
    if p == 0 {
        *best = (*best).max(size);
        return;
    }
    if size + clique_cover_bound(adj, p) <= *best {
        return;
    }
    let v = p.trailing_zeros() as usize;
    branch(adj, p & !adj[v] & !(1 << v), size + 1, best);
    branch(adj, p & !(1 << v), size, best);
}

/// `M_G = alpha(G) (A_G + I) - J`.
pub fn graph_matrix(g: &Graph) -> ExactMatrix {
    let a = int(alpha(g) as i64);
    SymmetricMatrix::from_fn(g.n, |i, j| {
        let e = if i == j || g.has_edge(i, j) { a.clone() } else { int(0) };
        e - int(1)
    })
}

/// `f_G = (x∘x)^T M_G (x∘x)`.
pub fn graph_poly(g: &Graph) -> ExactPolynomial {
    graph_matrix(g).quartic_form()
}

/// `G ⊕ (n+1)`: one extra isolated vertex.
pub fn add_isolated(g: &Graph) -> Graph {
    Graph {
        n: g.n + 1,
        edges: g.edges.clone(),
    }
}

/// Checks `alpha f_{G+} = (alpha x_{n+1}^2 - (x1^2 + ... + xn^2))^2 + (alpha + 1) f_G`
/// exactly, with `G+` the graph with an added isolated vertex.
pub fn verify_isolated_identity(g: &Graph) -> Result<bool> {
    let n = g.n;
    if n == 0 {
        return Err(Error::InvalidArgument("graph has no vertices".into()));
    }
    let a = Rational::from_integer(alpha(g).into());
    let lhs = graph_poly(&add_isolated(g)).scale(&a);
    let mut e = vec![0; n + 1];
    e[n] = 2;
    let g_poly = &ExactPolynomial::term(crate::poly::Monomial::new(e), a.clone())
        - &power_sum_squares::<Rational>(n, 1).embed(n + 1)?;
    let rhs = &g_poly.square() + &graph_poly(g).embed(n + 1)?.scale(&(a + int(1)));
    Ok((&lhs - &rhs).is_zero())
}

/// Result of a `theta^(r)` solve.
#[derive(Clone, Debug)]
pub struct ThetaResult {
    pub value: f64,
    pub status: Status,
    pub residuals: Residuals,
    pub iterations: usize,
}

/// Accuracy accepted from a solve that stopped short of the solver
/// tolerance.
pub const THETA_ACCEPT: f64 = 1e-6;

/// Encoding of `min t` subject to `(sum x_i^2)^r (x∘x)^T (t (A+I) - J) (x∘x)`
/// being a sum of squares; free variable 0 is `t`.
pub fn theta_encoding(g: &Graph, r: u32) -> Result<GramEncoding> {
    let n = g.n;
    if n == 0 {
        return Err(Error::InvalidArgument("theta is undefined for the empty vertex set".into()));
    }
    let mult = power_sum_squares::<Rational>(n, r);
    let a_plus_i = SymmetricMatrix::from_fn(n, |i, j| int((i == j || g.has_edge(i, j)) as i64));
    let p1 = &mult * &a_plus_i.quartic_form();
    let p0 = &mult * &SymmetricMatrix::<Rational>::ones(n).quartic_form();
    GramEncoding::assemble(
        EncodingKind::Custom,
        MonomialBasis::homogeneous(n, r + 2, Blocking::Parity),
        -p0,
        vec![-p1],
        vec![(0, 1.0)],
    )
}

/// `theta^(r)(G) = min { t : t (A_G + I) - J in K_n^(r) }`.
///
/// A solve that ends indeterminate is accepted when its residuals are
/// below [`THETA_ACCEPT`]; otherwise it is an error.
pub fn theta_r(g: &Graph, r: u32, options: &SolverOptions) -> Result<ThetaResult> {
    let enc = theta_encoding(g, r)?;
    let sol = sdp::solve(&enc.problem, options)?;
    let res = sol.residuals;
    let close = res.primal <= THETA_ACCEPT && res.dual <= THETA_ACCEPT && res.gap <= THETA_ACCEPT;
    match sol.status {
        Status::Optimal => {}
        Status::Indeterminate if close => {}
        other => {
            return Err(Error::Indeterminate(format!(
                "theta^({r}) solve ended {other:?} (residuals {:.1e}/{:.1e}/{:.1e})",
                res.primal, res.dual, res.gap
            )))
        }
    }
    Ok(ThetaResult {
        value: sol.free[0],
        status: sol.status,
        residuals: res,
        iterations: sol.iterations,
    })
}
