//! Graph families and the factor-graph objects derived from them.
//!
//! Every graph keeps its edges as `(i, j)` pairs with `i < j`, sorted
//! lexicographically. The extended edge set `Ê` lists, for edge `e = (i, j)`,
//! the copy `(e, i)` at index `2e` and the copy `(e, j)` at index `2e + 1`.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Display;
use std::path::PathBuf;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Undirected connected graph with a positive weight `q_e` per edge.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph<T> {
    n: usize,
    edges: Vec<(usize, usize)>,
    weights: Vec<T>,
}

impl<T: Scalar> Graph<T> {
    /// Validates and canonicalizes a weighted edge list.
    ///
    /// Pairs may be given in either orientation and in any order; they are
    /// stored as `(min, max)` sorted lexicographically, carrying the weights.
    pub fn new(n: usize, edges: Vec<(usize, usize)>, weights: Vec<T>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSize(format!("graph needs at least 2 vertices, got {n}")));
        }
        if edges.len() != weights.len() {
            return Err(Error::InvalidInput(format!(
                "{} edges but {} weights",
                edges.len(),
                weights.len()
            )));
        }
        let mut tagged = Vec::with_capacity(edges.len());
        for ((i, j), q) in edges.into_iter().zip(weights) {
            if i >= n || j >= n {
                return Err(Error::InvalidInput(format!("edge ({i},{j}) out of range for n={n}")));
            }
            if i == j {
                return Err(Error::InvalidInput(format!("self-loop at vertex {i}")));
            }
            if q <= T::zero() {
                return Err(Error::InvalidParameter(format!("edge ({i},{j}) has non-positive weight")));
            }
            tagged.push(((i.min(j), i.max(j)), q));
        }
        tagged.sort_by_key(|t| t.0);
        if let Some(w) = tagged.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidInput(format!("duplicate edge {:?}", w[0].0)));
        }
        let (edges, weights): (Vec<_>, Vec<_>) = tagged.into_iter().unzip();
        let g = Graph { n, edges, weights };
        if !g.is_connected() {
            return Err(Error::InvalidInput("graph is not connected".into()));
        }
        Ok(g)
    }

    /// All weights equal to one.
    pub fn unweighted(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let m = edges.len();
        Self::new(n, edges, vec![T::one(); m])
    }

    /// Same structure with replacement weights (indexed like [`Graph::edges`]).
    pub fn with_weights(&self, weights: Vec<T>) -> Result<Self> {
        Self::new(self.n, self.edges.clone(), weights)
    }

    /// Graph with vertex `v` renamed to `perm[v]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        let seen: BTreeSet<_> = perm.iter().copied().collect();
        if perm.len() != self.n || seen.len() != self.n || seen.iter().any(|&v| v >= self.n) {
            return Err(Error::InvalidInput("relabeling is not a permutation".into()));
        }
        let edges = self.edges.iter().map(|&(i, j)| (perm[i], perm[j])).collect();
        Self::new(self.n, edges, self.weights.clone())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(i, j) in &self.edges {
            deg[i] += 1;
            deg[j] += 1;
        }
        deg
    }

    pub fn is_connected(&self) -> bool {
        let mut adj = vec![Vec::new(); self.n];
        for &(i, j) in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count == self.n
    }

    /// Weighted Laplacian `D_q − A_q` assembled from the adjacency structure.
    pub fn laplacian(&self) -> DMatrix<T> {
        let mut l = DMatrix::zeros(self.n, self.n);
        for (&(i, j), q) in self.edges.iter().zip(&self.weights) {
            l[(i, j)] -= q.clone();
            l[(j, i)] -= q.clone();
            l[(i, i)] += q.clone();
            l[(j, j)] += q.clone();
        }
        l
    }

    /// Edge-list text: header `n m`, then `i j q` per edge.
    pub fn to_edge_list(&self) -> String
    where
        T: Display,
    {
        let mut out = format!("{} {}\n", self.n, self.edges.len());
        for (&(i, j), q) in self.edges.iter().zip(&self.weights) {
            out.push_str(&format!("{i} {j} {q}\n"));
        }
        out
    }

    pub fn from_edge_list(text: &str) -> Result<Self>
    where
        T: FromStr,
    {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty edge list".into()))?;
        let mut head = header.split_whitespace();
        let n = parse_usize(head.next(), "vertex count")?;
        let m = parse_usize(head.next(), "edge count")?;
        let mut edges = Vec::with_capacity(m);
        let mut weights = Vec::with_capacity(m);
        for line in lines {
            let mut parts = line.split_whitespace();
            let i = parse_usize(parts.next(), "edge endpoint")?;
            let j = parse_usize(parts.next(), "edge endpoint")?;
            let q = parts
                .next()
                .ok_or_else(|| Error::Parse(format!("missing weight in line `{line}`")))?
                .parse::<T>()
                .map_err(|_| Error::Parse(format!("bad weight in line `{line}`")))?;
            edges.push((i, j));
            weights.push(q);
        }
        if edges.len() != m {
            return Err(Error::Parse(format!("header announces {m} edges, found {}", edges.len())));
        }
        Self::new(n, edges, weights)
    }
}

fn parse_usize(tok: Option<&str>, what: &str) -> Result<usize> {
    tok.ok_or_else(|| Error::Parse(format!("missing {what}")))?
        .parse()
        .map_err(|_| Error::Parse(format!("bad {what}")))
}

/// Cycle `C_n` with edges `(i, i+1 mod n)`.
pub fn build_cycle<T: Scalar>(n: usize) -> Result<Graph<T>> {
    if n < 3 {
        return Err(Error::InvalidSize(format!("cycle needs n >= 3, got {n}")));
    }
    Graph::unweighted(n, (0..n).map(|i| (i, (i + 1) % n)).collect())
}

/// Periodic grid `C_k × C_k`; vertex `(r, c)` has index `r·k + c`.
pub fn build_torus<T: Scalar>(k: usize) -> Result<Graph<T>> {
    if k < 3 {
        return Err(Error::InvalidSize(format!("torus needs k >= 3, got {k}")));
    }
    let mut edges = Vec::with_capacity(2 * k * k);
    for r in 0..k {
        for c in 0..k {
            let v = r * k + c;
            edges.push((v, r * k + (c + 1) % k));
            edges.push((v, ((r + 1) % k) * k + c));
        }
    }
    Graph::unweighted(k * k, edges)
}

/// Two copies of `K_k` joined by a bridge between vertex `0` and vertex `k`.
pub fn build_barbell<T: Scalar>(k: usize) -> Result<Graph<T>> {
    if k < 3 {
        return Err(Error::InvalidSize(format!("barbell needs clique size k >= 3, got {k}")));
    }
    let mut edges = Vec::with_capacity(k * (k - 1) + 1);
    for offset in [0, k] {
        for i in 0..k {
            for j in i + 1..k {
                edges.push((offset + i, offset + j));
            }
        }
    }
    edges.push((0, k));
    Graph::unweighted(2 * k, edges)
}

/// `K_n` with its lexicographically last edge `(n−2, n−1)` removed.
pub fn build_complete_minus_edge<T: Scalar>(n: usize) -> Result<Graph<T>> {
    if n < 4 {
        return Err(Error::InvalidSize(format!("complete-minus-edge needs n >= 4, got {n}")));
    }
    let mut edges = complete_edges(n);
    edges.pop();
    Graph::unweighted(n, edges)
}

pub fn build_complete<T: Scalar>(n: usize) -> Result<Graph<T>> {
    if n < 2 {
        return Err(Error::InvalidSize(format!("complete graph needs n >= 2, got {n}")));
    }
    Graph::unweighted(n, complete_edges(n))
}

/// Two vertices joined by one edge of weight `q`.
pub fn build_single_edge<T: Scalar>(q: T) -> Result<Graph<T>> {
    Graph::new(2, vec![(0, 1)], vec![q])
}

fn complete_edges(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

/// Bipartite edge/vertex incidence structure of a graph.
#[derive(Clone, Debug)]
pub struct FactorGraph<T> {
    base: Graph<T>,
    ehat: Vec<(usize, usize)>,
    selection: DMatrix<T>,
    deg: Vec<usize>,
    copies: Vec<Vec<usize>>,
}

pub fn factor_graph<T: Scalar>(g: &Graph<T>) -> FactorGraph<T> {
    let m = g.num_edges();
    let mut ehat = Vec::with_capacity(2 * m);
    let mut copies = vec![Vec::new(); g.n()];
    for (e, &(i, j)) in g.edges().iter().enumerate() {
        for v in [i, j] {
            copies[v].push(ehat.len());
            ehat.push((e, v));
        }
    }
    let mut selection = DMatrix::zeros(2 * m, g.n());
    for (row, &(_, v)) in ehat.iter().enumerate() {
        selection[(row, v)] = T::one();
    }
    FactorGraph { deg: g.degrees(), base: g.clone(), ehat, selection, copies }
}

impl<T: Scalar> FactorGraph<T> {
    pub fn base(&self) -> &Graph<T> {
        &self.base
    }

    pub fn weights(&self) -> &[T] {
        self.base.weights()
    }

    pub fn n(&self) -> usize {
        self.base.n()
    }

    /// `|Ê| = 2|E|`.
    pub fn num_ehat(&self) -> usize {
        self.ehat.len()
    }

    /// `(edge index, vertex)` for each entry of `Ê`.
    pub fn ehat(&self) -> &[(usize, usize)] {
        &self.ehat
    }

    /// `S`, with `S[(e,i), i] = 1`.
    pub fn selection(&self) -> &DMatrix<T> {
        &self.selection
    }

    pub fn degrees(&self) -> &[usize] {
        &self.deg
    }

    /// Indices in `Ê` of the copies of vertex `v`, ascending.
    pub fn copies(&self, v: usize) -> &[usize] {
        &self.copies[v]
    }

    pub fn vertex_of(&self, idx: usize) -> usize {
        self.ehat[idx].1
    }

    pub fn edge_of(&self, idx: usize) -> usize {
        self.ehat[idx].0
    }

    /// The other copy belonging to the same edge.
    pub fn partner(&self, idx: usize) -> usize {
        idx ^ 1
    }
}

/// Graph selector used on the command line: `cycle:N`, `torus:K`,
/// `barbell:K`, `k4minus`, `complete-minus:N` or `file:PATH`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GraphSpec {
    Cycle(usize),
    Torus(usize),
    Barbell(usize),
    K4Minus,
    CompleteMinus(usize),
    File(PathBuf),
}

impl FromStr for GraphSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (s, None),
        };
        let size = || -> Result<usize> {
            arg.ok_or_else(|| Error::Parse(format!("`{s}` needs a size, e.g. {kind}:8")))?
                .parse()
                .map_err(|_| Error::Parse(format!("bad size in `{s}`")))
        };
        match kind {
            "cycle" => Ok(GraphSpec::Cycle(size()?)),
            "torus" => Ok(GraphSpec::Torus(size()?)),
            "barbell" => Ok(GraphSpec::Barbell(size()?)),
            "complete-minus" => Ok(GraphSpec::CompleteMinus(size()?)),
            "k4minus" if arg.is_none() => Ok(GraphSpec::K4Minus),
            "file" => arg
                .filter(|p| !p.is_empty())
                .map(|p| GraphSpec::File(PathBuf::from(p)))
                .ok_or_else(|| Error::Parse("file: needs a path".into())),
            _ => Err(Error::Parse(format!("unknown graph spec `{s}`"))),
        }
    }
}

impl Display for GraphSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GraphSpec::Cycle(n) => write!(f, "cycle:{n}"),
            GraphSpec::Torus(k) => write!(f, "torus:{k}"),
            GraphSpec::Barbell(k) => write!(f, "barbell:{k}"),
            GraphSpec::K4Minus => write!(f, "k4minus"),
            GraphSpec::CompleteMinus(n) => write!(f, "complete-minus:{n}"),
            GraphSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl GraphSpec {
    pub fn build<T: Scalar + FromStr>(&self) -> Result<Graph<T>> {
        match self {
            GraphSpec::Cycle(n) => build_cycle(*n),
            GraphSpec::Torus(k) => build_torus(*k),
            GraphSpec::Barbell(k) => build_barbell(*k),
            GraphSpec::K4Minus => build_complete_minus_edge(4),
            GraphSpec::CompleteMinus(n) => build_complete_minus_edge(*n),
            GraphSpec::File(path) => Graph::from_edge_list(&std::fs::read_to_string(path)?),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::max_abs;

    #[test]
    fn cycle_four_matches_definition() {
        let g = build_cycle::<f64>(4).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (0, 3), (1, 2), (2, 3)]);
        assert!(g.degrees().iter().all(|&d| d == 2));
        assert_eq!(build_cycle::<f64>(3).unwrap().num_edges(), 3);
        assert!(matches!(build_cycle::<f64>(2), Err(Error::InvalidSize(_))));
    }

    #[test]
    fn torus_sizes() {
        let g = build_torus::<f64>(3).unwrap();
        assert_eq!((g.n(), g.num_edges()), (9, 18));
        assert!(g.degrees().iter().all(|&d| d == 4));
        let g = build_torus::<f64>(4).unwrap();
        assert_eq!((g.n(), g.num_edges()), (16, 32));
        assert!(matches!(build_torus::<f64>(2), Err(Error::InvalidSize(_))));
    }

    #[test]
    fn barbell_sizes() {
        let g = build_barbell::<f64>(3).unwrap();
        assert_eq!((g.n(), g.num_edges()), (6, 7));
        let g = build_barbell::<f64>(5).unwrap();
        assert_eq!((g.n(), g.num_edges()), (10, 21));
        assert!(g.is_connected());
        assert!(build_barbell::<f64>(2).is_err());
    }

    #[test]
    fn complete_minus_edge_degrees() {
        let g = build_complete_minus_edge::<f64>(4).unwrap();
        assert_eq!(g.num_edges(), 5);
        let mut deg = g.degrees();
        deg.sort();
        assert_eq!(deg, vec![2, 2, 3, 3]);
        assert_eq!(build_complete_minus_edge::<f64>(5).unwrap().num_edges(), 9);
        assert!(build_complete_minus_edge::<f64>(3).is_err());
    }

    #[test]
    fn rejects_bad_graphs() {
        assert!(Graph::<f64>::unweighted(3, vec![(0, 1)]).is_err());
        assert!(Graph::<f64>::unweighted(3, vec![(0, 1), (1, 1), (1, 2)]).is_err());
        assert!(Graph::<f64>::unweighted(3, vec![(0, 1), (1, 0), (1, 2)]).is_err());
        assert!(Graph::new(2, vec![(0, 1)], vec![0.0]).is_err());
        assert!(Graph::new(2, vec![(0, 1)], vec![-1.0]).is_err());
    }

    #[test]
    fn factor_graph_of_cycle_four() {
        let fg = factor_graph(&build_cycle::<f64>(4).unwrap());
        assert_eq!(fg.num_ehat(), 8);
        let s = fg.selection();
        let sts = s.transpose() * s;
        assert_eq!(sts, DMatrix::from_diagonal_element(4, 4, 2.0));
        for idx in 0..8 {
            assert_eq!(fg.edge_of(fg.partner(idx)), fg.edge_of(idx));
            assert_ne!(fg.vertex_of(fg.partner(idx)), fg.vertex_of(idx));
        }
    }

    #[test]
    fn single_edge_selection_is_identity() {
        let fg = factor_graph(&build_single_edge(1.0).unwrap());
        assert_eq!(fg.selection(), &DMatrix::<f64>::identity(2, 2));
    }

    #[test]
    fn laplacian_rows_sum_to_zero() {
        let g = build_barbell::<f64>(4).unwrap();
        let l = g.laplacian();
        assert_eq!(max_abs(&(l * nalgebra::DVector::from_element(8, 1.0))), 0.0);
    }

    #[test]
    fn edge_list_round_trip() {
        let g = build_torus::<f64>(3).unwrap().with_weights((1..=18).map(|v| v as f64 / 7.0).collect()).unwrap();
        let back = Graph::<f64>::from_edge_list(&g.to_edge_list()).unwrap();
        assert_eq!(g, back);
        assert!(Graph::<f64>::from_edge_list("3 2\n0 1 1\n").is_err());
        assert!(Graph::<f64>::from_edge_list("").is_err());
    }

    #[test]
    fn graph_spec_parsing() {
        assert_eq!("cycle:8".parse::<GraphSpec>().unwrap(), GraphSpec::Cycle(8));
        assert_eq!("k4minus".parse::<GraphSpec>().unwrap(), GraphSpec::K4Minus);
        assert!("cycle".parse::<GraphSpec>().is_err());
        assert!("hypercube:3".parse::<GraphSpec>().is_err());
        assert!(GraphSpec::Cycle(2).build::<f64>().is_err());
        let spec = GraphSpec::Torus(4);
        assert_eq!(spec.to_string().parse::<GraphSpec>().unwrap(), spec);
    }
}
