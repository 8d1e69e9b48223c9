//! Connection degree, adjacency and Laplacian matrices.

use nalgebra::{DMatrix, DVector};

use crate::blockmat::{kron_sum_all, BlockMatrix};
use crate::error::{Error, Result};
use crate::graph::{cartesian_product, ConnectionGraph};

/// A function `V → ℝ^d`, stacked vertex by vertex into a vector of length `n·d`.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexFunction {
    d: usize,
    values: DVector<f64>,
}

impl VertexFunction {
    pub fn new(graph: &ConnectionGraph, values: DVector<f64>) -> Result<Self> {
        let expected = graph.n_vertices() * graph.dim();
        if values.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: values.len(),
            });
        }
        Ok(Self {
            d: graph.dim(),
            values,
        })
    }

    pub fn at(&self, v: usize) -> DVector<f64> {
        self.values.rows(v * self.d, self.d).into_owned()
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }
}

/// `A^σ`: block `(u, v)` is `w_uv σ_uv` when `u ∼ v`.
pub fn adjacency(graph: &ConnectionGraph) -> BlockMatrix {
    let mut a = BlockMatrix::zeros(graph.n_vertices(), graph.dim());
    for e in graph.edges() {
        a.set_block(e.u, e.v, &(&e.sigma_uv * e.weight));
        a.set_block(e.v, e.u, &(&e.sigma_vu * e.weight));
    }
    a
}

/// `D^σ`: block-diagonal with `d(u) I`.
pub fn degree_matrix(graph: &ConnectionGraph) -> BlockMatrix {
    let d = graph.dim();
    let mut m = BlockMatrix::zeros(graph.n_vertices(), d);
    for (v, deg) in graph.degrees().into_iter().enumerate() {
        m.set_block(v, v, &(DMatrix::identity(d, d) * deg));
    }
    m
}

/// `L^σ = D^σ − A^σ`.
pub fn laplacian(graph: &ConnectionGraph) -> BlockMatrix {
    let d = graph.dim();
    let l = degree_matrix(graph).into_matrix() - adjacency(graph).into_matrix();
    BlockMatrix::from_matrix(l, d).expect("square by construction")
}

/// `𝓛^σ = I − (D^σ)^{-1/2} A^σ (D^σ)^{-1/2}`. Every degree must be positive.
pub fn normalized_laplacian(graph: &ConnectionGraph) -> Result<BlockMatrix> {
    let degs = graph.degrees();
    if let Some(v) = degs.iter().position(|&x| !(x > 0.0)) {
        return Err(Error::ZeroDegree(graph.id(v).to_string()));
    }
    let d = graph.dim();
    let scale: Vec<f64> = degs.iter().map(|x| x.sqrt().recip()).collect();
    let mut l = BlockMatrix::identity(graph.n_vertices(), d);
    for e in graph.edges() {
        let s = -e.weight * scale[e.u] * scale[e.v];
        l.set_block(e.u, e.v, &(&e.sigma_uv * s));
        l.set_block(e.v, e.u, &(&e.sigma_vu * s));
    }
    Ok(l)
}

/// `fᵀ𝓛^σ f / fᵀf`.
pub fn rayleigh(graph: &ConnectionGraph, f: &VertexFunction) -> Result<f64> {
    let norm2 = f.values().norm_squared();
    if norm2 == 0.0 {
        return Err(Error::ZeroFunction);
    }
    let l = normalized_laplacian(graph)?;
    let lf = l.matrix() * f.values();
    Ok(f.values().dot(&lf) / norm2)
}

/// Max-abs residual between the normalized Laplacian of the Cartesian
/// product (with product connection) and the weighted Kronecker sum
/// `⊕ᵢ (Rᵢ/ΣR) 𝓛^{σ(i)}`.
///
/// The Kronecker side is indexed factor-major, `(x₁, c₁, x₂, c₂, …)`, while
/// the product graph stacks blocks as `((x₁, x₂, …), (c₁, c₂, …))`; the two
/// are compared through that index permutation, which is the identity when
/// every `dᵢ = 1`.
///
/// Every factor must be regular with unit weights.
pub fn check_product_factorization(factors: &[ConnectionGraph]) -> Result<f64> {
    if factors.is_empty() {
        return Err(Error::EmptyProduct);
    }
    let mut degrees = Vec::with_capacity(factors.len());
    for (index, g) in factors.iter().enumerate() {
        if !g.has_unit_weights() {
            return Err(Error::ProductPrecondition {
                index,
                reason: "weights are not all 1".into(),
            });
        }
        match g.regular_degree() {
            Some(r) if r > 0.0 => degrees.push(r),
            _ => {
                return Err(Error::ProductPrecondition {
                    index,
                    reason: "graph is not regular".into(),
                })
            }
        }
    }
    let total: f64 = degrees.iter().sum();
    let terms = factors
        .iter()
        .zip(&degrees)
        .map(|(g, &r)| Ok(normalized_laplacian(g)?.into_matrix() * (r / total)))
        .collect::<Result<Vec<_>>>()?;
    let expected = kron_sum_all(&terms)?;
    let product = cartesian_product(factors)?;
    let assembled = normalized_laplacian(&product)?;
    let perm = kronecker_to_block_index(
        &factors.iter().map(|g| g.n_vertices()).collect::<Vec<_>>(),
        &factors.iter().map(|g| g.dim()).collect::<Vec<_>>(),
    );
    let a = assembled.matrix();
    let mut worst = 0.0f64;
    for (r, &pr) in perm.iter().enumerate() {
        for (c, &pc) in perm.iter().enumerate() {
            worst = worst.max((a[(pr, pc)] - expected[(r, c)]).abs());
        }
    }
    Ok(worst)
}

/// For each factor-major index `(x₁, c₁, …, x_m, c_m)`, the row of the same
/// entry in the product graph's block layout.
pub fn kronecker_to_block_index(sizes: &[usize], dims: &[usize]) -> Vec<usize> {
    let total_d: usize = dims.iter().product();
    let total: usize = sizes.iter().zip(dims).map(|(n, d)| n * d).product();
    (0..total)
        .map(|mut flat| {
            // peel digits from the least significant factor
            let mut vertex = 0;
            let mut comp = 0;
            let (mut v_scale, mut c_scale) = (1, 1);
            for (&n, &d) in sizes.iter().zip(dims).rev() {
                let c = flat % d;
                flat /= d;
                let x = flat % n;
                flat /= n;
                vertex += x * v_scale;
                comp += c * c_scale;
                v_scale *= n;
                c_scale *= d;
            }
            vertex * total_d + comp
        })
        .collect()
}
