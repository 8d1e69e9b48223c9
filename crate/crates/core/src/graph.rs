//! Connection graphs: weighted undirected graphs whose directed edges carry
//! orthogonal matrices with `σ_vu = σ_uvᵀ`.
//!
//! A [`ConnectionGraph`] can hold invalid data (non-orthogonal matrices,
//! mismatched inverse pairs, non-positive weights) so that [`validate`] can
//! report every problem at once. Operations that require a valid graph
//! call [`ConnectionGraph::ensure_valid`] first.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::blockmat::{kron_all, max_abs_diff};
use crate::error::{Error, Result};

/// Tolerance on `‖QᵀQ − I‖_max` for a matrix to count as orthogonal.
pub const ORTHO_TOL: f64 = 1e-12;

/// Tolerance on `‖σ_P − I‖_max` for a cycle to count as balanced.
pub const CONSISTENCY_TOL: f64 = 1e-10;

fn orthogonality_defect(q: &DMatrix<f64>) -> f64 {
    let n = q.ncols();
    max_abs_diff(&(q.transpose() * q), &DMatrix::identity(n, n))
}

/// A square orthogonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthoMatrix(DMatrix<f64>);

impl OrthoMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        let defect = orthogonality_defect(&m);
        if defect > ORTHO_TOL {
            return Err(Error::NotOrthogonal { defect });
        }
        Ok(Self(m))
    }

    /// Skips the orthogonality check. Used for products of checked matrices,
    /// whose roundoff may drift slightly past [`ORTHO_TOL`].
    pub fn new_unchecked(m: DMatrix<f64>) -> Self {
        Self(m)
    }

    pub fn identity(d: usize) -> Self {
        Self(DMatrix::identity(d, d))
    }

    /// `[[cos θ, −sin θ], [sin θ, cos θ]]`.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self(DMatrix::from_row_slice(2, 2, &[c, -s, s, c]))
    }

    pub fn diagonal_signs(signs: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(
            signs,
        )))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self(&self.0 * &other.0)
    }

    /// `Qᵏ` for any integer `k`; negative powers use `Qᵀ`.
    pub fn pow(&self, k: i64) -> Self {
        let base = if k < 0 { self.0.transpose() } else { self.0.clone() };
        let mut acc = DMatrix::identity(self.dim(), self.dim());
        for _ in 0..k.unsigned_abs() {
            acc = &acc * &base;
        }
        Self(acc)
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self(self.0.kronecker(&other.0))
    }

    pub fn orthogonality_defect(&self) -> f64 {
        orthogonality_defect(&self.0)
    }
}

impl AsRef<DMatrix<f64>> for OrthoMatrix {
    fn as_ref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// One undirected edge with both orientations of its connection.
#[derive(Debug, Clone)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
    pub sigma_uv: DMatrix<f64>,
    pub sigma_vu: DMatrix<f64>,
}

impl Edge {
    /// Connection matrix for the traversal `from → other endpoint`.
    pub fn sigma_from(&self, from: usize) -> &DMatrix<f64> {
        if from == self.u {
            &self.sigma_uv
        } else {
            &self.sigma_vu
        }
    }

    pub fn other(&self, from: usize) -> usize {
        if from == self.u {
            self.v
        } else {
            self.u
        }
    }
}

/// Weighted undirected graph with an orthogonal matrix on every directed edge.
///
/// Vertices are addressed by dense indices `0..n` in insertion order; their
/// opaque ids are kept for I/O and diagnostics.
#[derive(Debug, Clone)]
pub struct ConnectionGraph {
    dim: usize,
    ids: Vec<String>,
    index: HashMap<String, usize>,
    edges: Vec<Edge>,
    // (neighbour, edge index), in edge insertion order
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl ConnectionGraph {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            ids: Vec::new(),
            index: HashMap::new(),
            edges: Vec::new(),
            adjacency: Vec::new(),
        }
    }

    /// `n` vertices with ids `"0"`, …, `"n-1"`.
    pub fn with_vertices(dim: usize, n: usize) -> Self {
        let mut g = Self::new(dim);
        for i in 0..n {
            g.add_vertex(i.to_string()).expect("fresh ids are unique");
        }
        g
    }

    /// Cycle `0 ∼ 1 ∼ ⋯ ∼ n−1 ∼ 0` with unit weights and `σ_{i,i+1} = sigma`.
    pub fn cycle(n: usize, sigma: &OrthoMatrix) -> Result<Self> {
        let mut g = Self::with_vertices(sigma.dim(), n);
        for i in 0..n {
            g.add_edge(i, (i + 1) % n, 1.0, sigma.matrix().clone())?;
        }
        Ok(g)
    }

    /// Path `0 ∼ 1 ∼ ⋯ ∼ n−1` with unit weights and `σ_{i,i+1} = sigma`.
    pub fn path(n: usize, sigma: &OrthoMatrix) -> Result<Self> {
        let mut g = Self::with_vertices(sigma.dim(), n);
        for i in 1..n {
            g.add_edge(i - 1, i, 1.0, sigma.matrix().clone())?;
        }
        Ok(g)
    }

    pub fn add_vertex(&mut self, id: impl Into<String>) -> Result<usize> {
        let id = id.into();
        if self.index.contains_key(&id) {
            return Err(Error::Schema(format!("duplicate vertex id `{id}`")));
        }
        let ix = self.ids.len();
        self.index.insert(id.clone(), ix);
        self.ids.push(id);
        self.adjacency.push(Vec::new());
        Ok(ix)
    }

    /// Adds `u ∼ v` with `σ_vu = σ_uvᵀ`.
    pub fn add_edge(&mut self, u: usize, v: usize, weight: f64, sigma_uv: DMatrix<f64>) -> Result<()> {
        let sigma_vu = sigma_uv.transpose();
        self.add_edge_pair(u, v, weight, sigma_uv, sigma_vu)
    }

    /// Adds `u ∼ v` with both orientations given explicitly (not checked here;
    /// see [`validate`]).
    pub fn add_edge_pair(
        &mut self,
        u: usize,
        v: usize,
        weight: f64,
        sigma_uv: DMatrix<f64>,
        sigma_vu: DMatrix<f64>,
    ) -> Result<()> {
        let n = self.ids.len();
        for x in [u, v] {
            if x >= n {
                return Err(Error::UnknownVertex(x.to_string()));
            }
        }
        if u == v {
            return Err(Error::SelfLoop(self.ids[u].clone()));
        }
        if self.edge_between(u, v).is_some() {
            return Err(Error::DuplicateEdge(self.ids[u].clone(), self.ids[v].clone()));
        }
        let e = self.edges.len();
        self.edges.push(Edge {
            u,
            v,
            weight,
            sigma_uv,
            sigma_vu,
        });
        self.adjacency[u].push((v, e));
        self.adjacency[v].push((u, e));
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_vertices(&self) -> usize {
        self.ids.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, v: usize) -> &str {
        &self.ids[v]
    }

    pub fn vertex(&self, id: &str) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownVertex(id.to_string()))
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// `(neighbour, edge index)` pairs of `v`.
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adjacency[v]
    }

    pub fn edge_between(&self, u: usize, v: usize) -> Option<&Edge> {
        self.adjacency[u]
            .iter()
            .find(|&&(w, _)| w == v)
            .map(|&(_, e)| &self.edges[e])
    }

    pub fn weight(&self, u: usize, v: usize) -> Option<f64> {
        self.edge_between(u, v).map(|e| e.weight)
    }

    /// `σ_uv`, if `u ∼ v`.
    pub fn sigma(&self, u: usize, v: usize) -> Option<&DMatrix<f64>> {
        self.edge_between(u, v).map(|e| e.sigma_from(u))
    }

    pub fn degree(&self, v: usize) -> f64 {
        self.adjacency[v]
            .iter()
            .map(|&(_, e)| self.edges[e].weight)
            .sum()
    }

    pub fn degrees(&self) -> Vec<f64> {
        (0..self.n_vertices()).map(|v| self.degree(v)).collect()
    }

    /// Same vertices, edges and weights with the trivial 1-dimensional
    /// connection.
    pub fn underlying(&self) -> ConnectionGraph {
        let one = DMatrix::identity(1, 1);
        let mut g = ConnectionGraph::new(1);
        for id in &self.ids {
            g.add_vertex(id.clone()).expect("ids already unique");
        }
        for e in &self.edges {
            g.add_edge(e.u, e.v, e.weight, one.clone())
                .expect("edges already simple");
        }
        g
    }

    /// Connected component label per vertex, labels in order of first vertex.
    pub fn components(&self) -> Vec<usize> {
        let n = self.n_vertices();
        let mut label = vec![usize::MAX; n];
        let mut next = 0;
        for root in 0..n {
            if label[root] != usize::MAX {
                continue;
            }
            label[root] = next;
            let mut queue = VecDeque::from([root]);
            while let Some(u) = queue.pop_front() {
                for &(w, _) in &self.adjacency[u] {
                    if label[w] == usize::MAX {
                        label[w] = next;
                        queue.push_back(w);
                    }
                }
            }
            next += 1;
        }
        label
    }

    /// Shortest (fewest edges) path from `x` to `y`, if any.
    pub fn find_path(&self, x: usize, y: usize) -> Option<Vec<usize>> {
        let n = self.n_vertices();
        let mut parent = vec![usize::MAX; n];
        parent[x] = x;
        let mut queue = VecDeque::from([x]);
        while let Some(u) = queue.pop_front() {
            if u == y {
                break;
            }
            for &(w, _) in &self.adjacency[u] {
                if parent[w] == usize::MAX {
                    parent[w] = u;
                    queue.push_back(w);
                }
            }
        }
        if parent[y] == usize::MAX {
            return None;
        }
        let mut path = vec![y];
        let mut cur = y;
        while cur != x {
            cur = parent[cur];
            path.push(cur);
        }
        path.reverse();
        Some(path)
    }

    /// `Some(R)` if every vertex has degree `R`.
    pub fn regular_degree(&self) -> Option<f64> {
        let degs = self.degrees();
        let first = *degs.first()?;
        degs.iter().all(|&d| d == first).then_some(first)
    }

    pub fn has_unit_weights(&self) -> bool {
        self.edges.iter().all(|e| e.weight == 1.0)
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let report = validate(self);
        if report.is_valid() {
            Ok(())
        } else {
            Err(Error::InvalidGraph(report))
        }
    }
}

/// One violated connection-graph invariant.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NonPositiveWeight { u: String, v: String, weight: f64 },
    DimensionMismatch { u: String, v: String, rows: usize, cols: usize },
    NotOrthogonal { u: String, v: String, defect: f64 },
    NotInversePair { u: String, v: String, defect: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonPositiveWeight { u, v, weight } => {
                write!(f, "edge {u} -- {v}: weight {weight} is not positive")
            }
            Violation::DimensionMismatch { u, v, rows, cols } => {
                write!(f, "edge {u} -> {v}: connection is {rows}x{cols}")
            }
            Violation::NotOrthogonal { u, v, defect } => {
                write!(f, "edge {u} -> {v}: not orthogonal (defect {defect:e})")
            }
            Violation::NotInversePair { u, v, defect } => {
                write!(f, "edge {u} -- {v}: sigma_uv sigma_vu != I (defect {defect:e})")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msgs: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", msgs.join("; "))
    }
}

/// Lists every violated invariant. Never fails.
pub fn validate(graph: &ConnectionGraph) -> ValidationReport {
    let d = graph.dim();
    let mut violations = Vec::new();
    for e in graph.edges() {
        let (u, v) = (graph.id(e.u).to_string(), graph.id(e.v).to_string());
        // NaN fails this comparison too
        if !(e.weight > 0.0) {
            violations.push(Violation::NonPositiveWeight {
                u: u.clone(),
                v: v.clone(),
                weight: e.weight,
            });
        }
        let mut shapes_ok = true;
        for (a, b, m) in [(&u, &v, &e.sigma_uv), (&v, &u, &e.sigma_vu)] {
            if m.shape() != (d, d) {
                shapes_ok = false;
                violations.push(Violation::DimensionMismatch {
                    u: a.clone(),
                    v: b.clone(),
                    rows: m.nrows(),
                    cols: m.ncols(),
                });
            }
        }
        if !shapes_ok {
            continue;
        }
        for (a, b, m) in [(&u, &v, &e.sigma_uv), (&v, &u, &e.sigma_vu)] {
            let defect = orthogonality_defect(m);
            if !(defect <= ORTHO_TOL) {
                violations.push(Violation::NotOrthogonal {
                    u: a.clone(),
                    v: b.clone(),
                    defect,
                });
            }
        }
        let defect = max_abs_diff(&(&e.sigma_uv * &e.sigma_vu), &DMatrix::identity(d, d));
        if !(defect <= ORTHO_TOL) {
            violations.push(Violation::NotInversePair { u, v, defect });
        }
    }
    ValidationReport { violations }
}

/// Ordered product `σ_{x₀x₁} σ_{x₁x₂} ⋯ σ_{x_{k−1}x_k}` along a vertex path.
pub fn path_signature(graph: &ConnectionGraph, path: &[usize]) -> Result<OrthoMatrix> {
    let first = *path.first().ok_or(Error::EmptyPath)?;
    if first >= graph.n_vertices() {
        return Err(Error::UnknownVertex(first.to_string()));
    }
    let mut acc = DMatrix::identity(graph.dim(), graph.dim());
    for w in path.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b >= graph.n_vertices() {
            return Err(Error::UnknownVertex(b.to_string()));
        }
        let sigma = graph
            .sigma(a, b)
            .ok_or_else(|| Error::NotAdjacent(graph.id(a).into(), graph.id(b).into()))?;
        acc *= sigma;
    }
    Ok(OrthoMatrix::new_unchecked(acc))
}

/// Outcome of [`is_consistent`].
#[derive(Debug, Clone)]
pub struct Consistency {
    pub consistent: bool,
    /// A closed walk `c₀ ∼ c₁ ∼ ⋯ ∼ c₀` whose signature is not `I`.
    pub witness: Option<Vec<usize>>,
    /// Potentials `P_v = σ_{P root→v}` from a BFS spanning forest.
    pub potentials: Vec<DMatrix<f64>>,
}

/// Checks whether every cycle has signature `I` (to [`CONSISTENCY_TOL`]).
///
/// Roots each component at its first vertex with `P_root = I`, propagates
/// `P_v = P_u σ_uv` along a BFS tree, then checks `P_u σ_uv = P_v` on every
/// non-tree edge.
pub fn is_consistent(graph: &ConnectionGraph) -> Consistency {
    let n = graph.n_vertices();
    let d = graph.dim();
    let mut potentials: Vec<Option<DMatrix<f64>>> = vec![None; n];
    let mut parent = vec![usize::MAX; n];
    let mut tree_edge = vec![usize::MAX; n];
    let mut witness = None;

    for root in 0..n {
        if potentials[root].is_some() {
            continue;
        }
        potentials[root] = Some(DMatrix::identity(d, d));
        parent[root] = root;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            let pu = potentials[u].clone().expect("visited");
            for &(w, e) in graph.neighbors(u) {
                if potentials[w].is_none() {
                    potentials[w] = Some(&pu * graph.edges()[e].sigma_from(u));
                    parent[w] = u;
                    tree_edge[w] = e;
                    queue.push_back(w);
                }
            }
        }
    }
    let potentials: Vec<DMatrix<f64>> = potentials.into_iter().map(|p| p.expect("all visited")).collect();

    for (e_ix, e) in graph.edges().iter().enumerate() {
        if tree_edge[e.v] == e_ix || tree_edge[e.u] == e_ix {
            continue;
        }
        let lhs = &potentials[e.u] * &e.sigma_uv;
        if max_abs_diff(&lhs, &potentials[e.v]) > CONSISTENCY_TOL {
            witness = Some(tree_cycle(&parent, e.u, e.v));
            break;
        }
    }

    Consistency {
        consistent: witness.is_none(),
        witness,
        potentials,
    }
}

// Closed walk lca → … → u → v → … → lca through the BFS tree.
fn tree_cycle(parent: &[usize], u: usize, v: usize) -> Vec<usize> {
    let to_root = |mut x: usize| {
        let mut chain = vec![x];
        while parent[x] != x {
            x = parent[x];
            chain.push(x);
        }
        chain
    };
    let mut up_u = to_root(u);
    let mut up_v = to_root(v);
    // strip the common suffix (shared ancestors), keeping the LCA once
    let mut lca = *up_u.last().expect("non-empty");
    while let (Some(&a), Some(&b)) = (up_u.last(), up_v.last()) {
        if a != b {
            break;
        }
        lca = a;
        up_u.pop();
        up_v.pop();
    }
    let mut cycle = vec![lca];
    cycle.extend(up_u.iter().rev());
    cycle.extend(up_v.iter());
    cycle.push(lca);
    cycle
}

fn tuple_id(ids: &[&str]) -> String {
    format!("({})", ids.join(","))
}

/// Cartesian product `Γ₁ □ ⋯ □ Γ_m` with the product connection.
///
/// Vertices are tuples in lexicographic order (first factor most
/// significant), matching the Kronecker index convention. An edge changing
/// coordinate `i` carries `I ⊗ ⋯ ⊗ σ^{(i)} ⊗ ⋯ ⊗ I` and the weight of the
/// factor edge it moves along.
pub fn cartesian_product(graphs: &[ConnectionGraph]) -> Result<ConnectionGraph> {
    if graphs.is_empty() {
        return Err(Error::EmptyProduct);
    }
    if graphs.len() == 1 {
        return Ok(graphs[0].clone());
    }
    for g in graphs {
        g.ensure_valid()?;
    }
    let sizes: Vec<usize> = graphs.iter().map(|g| g.n_vertices()).collect();
    let dims: Vec<usize> = graphs.iter().map(|g| g.dim()).collect();
    let total: usize = sizes.iter().product();
    let dim: usize = dims.iter().product();

    // stride of factor i in the flat lexicographic index
    let mut strides = vec![1usize; graphs.len()];
    for i in (0..graphs.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * sizes[i + 1];
    }
    let decode = |mut flat: usize| -> Vec<usize> {
        strides
            .iter()
            .zip(&sizes)
            .map(|(&s, &n)| {
                let c = flat / s;
                flat %= s;
                debug_assert!(c < n);
                c
            })
            .collect()
    };

    let mut product = ConnectionGraph::new(dim);
    for flat in 0..total {
        let coords = decode(flat);
        let parts: Vec<&str> = coords
            .iter()
            .zip(graphs)
            .map(|(&c, g)| g.id(c))
            .collect();
        product.add_vertex(tuple_id(&parts))?;
    }

    let identities: Vec<DMatrix<f64>> = dims.iter().map(|&d| DMatrix::identity(d, d)).collect();
    for flat in 0..total {
        let coords = decode(flat);
        for (i, g) in graphs.iter().enumerate() {
            for e in g.edges() {
                if e.u != coords[i] {
                    continue;
                }
                let other = flat - e.u * strides[i] + e.v * strides[i];
                let mut factors: Vec<&DMatrix<f64>> = identities.iter().collect();
                factors[i] = &e.sigma_uv;
                let sigma_uv = kron_all(factors.iter().copied());
                factors[i] = &e.sigma_vu;
                let sigma_vu = kron_all(factors.iter().copied());
                product.add_edge_pair(flat, other, e.weight, sigma_uv, sigma_vu)?;
            }
        }
    }
    Ok(product)
}

/// A finite group of vertex permutations, stored by its full element list.
#[derive(Debug, Clone)]
pub struct GroupAction {
    n: usize,
    elements: Vec<Vec<usize>>,
}

impl GroupAction {
    /// Group generated by the given permutations of `0..n`.
    pub fn from_generators(n: usize, generators: &[Vec<usize>]) -> Result<Self> {
        for g in generators {
            let mut seen = vec![false; n];
            if g.len() != n || g.iter().any(|&x| x >= n || std::mem::replace(&mut seen[x], true)) {
                return Err(Error::Schema("generator is not a permutation".into()));
            }
        }
        let identity: Vec<usize> = (0..n).collect();
        let mut elements = vec![identity.clone()];
        let mut known: std::collections::HashSet<Vec<usize>> = [identity].into_iter().collect();
        let mut frontier = 0;
        while frontier < elements.len() {
            let h = elements[frontier].clone();
            frontier += 1;
            for g in generators {
                let gh: Vec<usize> = h.iter().map(|&x| g[x]).collect();
                if known.insert(gh.clone()) {
                    elements.push(gh);
                }
            }
        }
        Ok(Self { n, elements })
    }

    pub fn trivial(n: usize) -> Self {
        Self {
            n,
            elements: vec![(0..n).collect()],
        }
    }

    /// Rotations `i ↦ i + k·j (mod n)` of an `n`-cycle, generated by `+k`.
    pub fn cyclic_rotation(n: usize, k: usize) -> Self {
        let gen: Vec<usize> = (0..n).map(|i| (i + k) % n).collect();
        Self::from_generators(n, &[gen]).expect("rotation is a permutation")
    }

    pub fn n_points(&self) -> usize {
        self.n
    }

    pub fn elements(&self) -> &[Vec<usize>] {
        &self.elements
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    /// Orbit label per vertex; orbits numbered by their minimal vertex.
    pub fn orbits(&self) -> Vec<usize> {
        let mut label = vec![usize::MAX; self.n];
        let mut next = 0;
        for x in 0..self.n {
            if label[x] != usize::MAX {
                continue;
            }
            for g in &self.elements {
                label[g[x]] = next;
            }
            next += 1;
        }
        label
    }

    /// Checks that every element preserves adjacency, weights and connection.
    pub fn check_automorphisms(&self, graph: &ConnectionGraph) -> Result<()> {
        if self.n != graph.n_vertices() {
            return Err(Error::DimensionMismatch {
                expected: graph.n_vertices(),
                found: self.n,
            });
        }
        for (ix, g) in self.elements.iter().enumerate() {
            for e in graph.edges() {
                let (gu, gv) = (g[e.u], g[e.v]);
                let reason = match graph.edge_between(gu, gv) {
                    None => Some(format!(
                        "maps edge {} -- {} to a non-edge",
                        graph.id(e.u),
                        graph.id(e.v)
                    )),
                    Some(image) if (image.weight - e.weight).abs() > ORTHO_TOL => Some(format!(
                        "changes the weight of {} -- {}",
                        graph.id(e.u),
                        graph.id(e.v)
                    )),
                    Some(image) if max_abs_diff(image.sigma_from(gu), &e.sigma_uv) > ORTHO_TOL => {
                        Some(format!(
                            "changes the connection on {} -> {}",
                            graph.id(e.u),
                            graph.id(e.v)
                        ))
                    }
                    Some(_) => None,
                };
                if let Some(reason) = reason {
                    return Err(Error::NotAutomorphism { element: ix, reason });
                }
            }
        }
        Ok(())
    }
}

/// Quotient connection graph plus the vertex → class map.
#[derive(Debug, Clone)]
pub struct Quotient {
    pub graph: ConnectionGraph,
    /// Class index of every upstream vertex.
    pub class_of: Vec<usize>,
    /// Minimal upstream vertex of every class.
    pub representatives: Vec<usize>,
}

/// Quotient `(Γ/G, w̃, σ^{Q_G})`.
///
/// Classes are ordered by minimal representative. `[x] ∼ [y]` iff some
/// members are adjacent and the classes differ; `w̃_{[x][y]}` sums
/// `w_{x,z}` over `z ∈ [y]` (equal to `Σ_g w_{x,gy}` for free actions), and
/// the connection is the common value of `σ_vw` over adjacent cross-class
/// pairs, which must agree to [`ORTHO_TOL`].
pub fn quotient(graph: &ConnectionGraph, action: &GroupAction) -> Result<Quotient> {
    graph.ensure_valid()?;
    action.check_automorphisms(graph)?;
    let class_of = action.orbits();
    let n_classes = class_of.iter().copied().max().map_or(0, |m| m + 1);
    let mut representatives = vec![usize::MAX; n_classes];
    for (v, &c) in class_of.iter().enumerate() {
        representatives[c] = representatives[c].min(v);
    }

    // reference connection per ordered class pair
    let mut reference: HashMap<(usize, usize), DMatrix<f64>> = HashMap::new();
    for e in graph.edges() {
        let (cu, cv) = (class_of[e.u], class_of[e.v]);
        if cu == cv {
            continue;
        }
        for (from, to, c_from, c_to) in [(e.u, e.v, cu, cv), (e.v, e.u, cv, cu)] {
            let sigma = e.sigma_from(from);
            match reference.get(&(c_from, c_to)) {
                Some(r) if max_abs_diff(r, sigma) > ORTHO_TOL => {
                    return Err(Error::NotProper(graph.id(from).into(), graph.id(to).into()));
                }
                Some(_) => {}
                None => {
                    reference.insert((c_from, c_to), sigma.clone());
                }
            }
        }
    }

    let mut q = ConnectionGraph::new(graph.dim());
    for &rep in &representatives {
        q.add_vertex(graph.id(rep).to_string())?;
    }
    let mut pairs: Vec<(usize, usize)> = reference.keys().copied().filter(|(a, b)| a < b).collect();
    pairs.sort_unstable();
    for (cx, cy) in pairs {
        let x = representatives[cx];
        let weight: f64 = graph
            .neighbors(x)
            .iter()
            .filter(|&&(z, _)| class_of[z] == cy)
            .map(|&(_, e)| graph.edges()[e].weight)
            .sum();
        q.add_edge_pair(
            cx,
            cy,
            weight,
            reference[&(cx, cy)].clone(),
            reference[&(cy, cx)].clone(),
        )?;
    }
    Ok(Quotient {
        graph: q,
        class_of,
        representatives,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
enum RawId {
    Int(i64),
    Str(String),
}

impl RawId {
    fn into_string(self) -> String {
        match self {
            RawId::Int(i) => i.to_string(),
            RawId::Str(s) => s,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEdge {
    u: RawId,
    v: RawId,
    w: f64,
    sigma_uv: Vec<Vec<f64>>,
    #[serde(default)]
    sigma_vu: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGraph {
    dim: usize,
    vertices: Vec<RawId>,
    edges: Vec<RawEdge>,
}

fn rows_to_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return Err(Error::Schema("ragged matrix rows".into()));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

impl ConnectionGraph {
    /// Parses the JSON graph format:
    /// `{"dim": d, "vertices": [..], "edges": [{"u", "v", "w", "sigma_uv"}]}`.
    ///
    /// `sigma_vu` defaults to the transpose of `sigma_uv`; an explicit
    /// `"sigma_vu"` is accepted so broken pairings can be represented and
    /// reported by [`validate`].
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawGraph = serde_json::from_str(text)?;
        if raw.dim == 0 {
            return Err(Error::Schema("dim must be positive".into()));
        }
        let mut g = ConnectionGraph::new(raw.dim);
        for id in raw.vertices {
            g.add_vertex(id.into_string())?;
        }
        for e in raw.edges {
            let u = g.vertex(&e.u.into_string())?;
            let v = g.vertex(&e.v.into_string())?;
            let sigma_uv = rows_to_matrix(&e.sigma_uv)?;
            let sigma_vu = match e.sigma_vu {
                Some(rows) => rows_to_matrix(&rows)?,
                None => sigma_uv.transpose(),
            };
            g.add_edge_pair(u, v, e.w, sigma_uv, sigma_vu)?;
        }
        Ok(g)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let matrix = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
                .collect()
        };
        serde_json::json!({
            "dim": self.dim,
            "vertices": self.ids,
            "edges": self.edges.iter().map(|e| serde_json::json!({
                "u": self.ids[e.u],
                "v": self.ids[e.v],
                "w": e.weight,
                "sigma_uv": matrix(&e.sigma_uv),
            })).collect::<Vec<_>>(),
        })
    }
}
