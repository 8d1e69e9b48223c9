//! Vector diffusion maps on finite connection graphs.
//!
//! With `(λ_n, X_n)` the eigenpairs of `𝓛^σ` and `X_n(x)` the `d`-block of
//! `X_n` at vertex `x`, the embedding
//! `V_t(x) = (e^{−t(λ_m+λ_n)/2}⟨X_n(x), X_m(x)⟩)_{m,n}` satisfies
//! `⟨V_t(x), V_t(y)⟩ = ‖H_t(x, y)‖²_HS` when every eigenpair is kept.

use nalgebra::DMatrix;

use crate::blockmat::{heat_from_spectrum, sym_eig, BlockMatrix, Spectrum};
use crate::error::{Error, Result};
use crate::graph::ConnectionGraph;
use crate::laplacian::normalized_laplacian;

/// Radicands in `(−CLAMP, 0)` are treated as roundoff and clamped to zero.
pub const CLAMP: f64 = 1e-12;

/// `V_t(x)` for every vertex, truncated to the `K` smallest eigenpairs.
#[derive(Debug, Clone)]
pub struct VdmEmbedding {
    pub t: f64,
    pub k: usize,
    /// `coords[x][m·K + n]`.
    pub coords: Vec<Vec<f64>>,
}

impl VdmEmbedding {
    pub fn inner(&self, x: usize, y: usize) -> f64 {
        self.coords[x].iter().zip(&self.coords[y]).map(|(a, b)| a * b).sum()
    }

    /// `‖V_t(x) − V_t(y)‖`.
    pub fn distance(&self, x: usize, y: usize) -> f64 {
        self.coords[x]
            .iter()
            .zip(&self.coords[y])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

fn spectrum(graph: &ConnectionGraph) -> Result<Spectrum> {
    sym_eig(normalized_laplacian(graph)?.matrix())
}

fn check_rank(graph: &ConnectionGraph, k: usize) -> Result<()> {
    let max = graph.n_vertices() * graph.dim();
    if k == 0 || k > max {
        return Err(Error::RankOutOfRange { k, max });
    }
    Ok(())
}

fn embed_from(spec: &Spectrum, d: usize, n: usize, t: f64, k: usize) -> VdmEmbedding {
    let decay: Vec<f64> = (0..k).map(|i| (-0.5 * t * spec.values[i]).exp()).collect();
    let coords = (0..n)
        .map(|x| {
            let blocks = spec.vectors.view((x * d, 0), (d, k));
            // Gram matrix of the vertex blocks ⟨X_n(x), X_m(x)⟩
            let gram = blocks.transpose() * blocks;
            let mut v = Vec::with_capacity(k * k);
            for m in 0..k {
                for nn in 0..k {
                    v.push(decay[m] * decay[nn] * gram[(nn, m)]);
                }
            }
            v
        })
        .collect();
    VdmEmbedding { t, k, coords }
}

/// Embedding built from the `k` smallest eigenpairs of `𝓛^σ`.
pub fn vdm_embed(graph: &ConnectionGraph, t: f64, k: usize) -> Result<VdmEmbedding> {
    check_rank(graph, k)?;
    let spec = spectrum(graph)?;
    Ok(embed_from(&spec, graph.dim(), graph.n_vertices(), t, k))
}

/// `sqrt(‖H(x,x)‖²_HS + ‖H(y,y)‖²_HS − 2‖H(x,y)‖²_HS)` from a kernel.
pub fn hs_distance(kernel: &BlockMatrix, x: usize, y: usize) -> f64 {
    let hs = |a: usize, b: usize| kernel.block(a, b).norm_squared();
    let r = hs(x, x) + hs(y, y) - 2.0 * hs(x, y);
    if r < 0.0 && r > -CLAMP {
        0.0
    } else {
        r.sqrt()
    }
}

/// Vector diffusion distance. With `k = n·d` this is [`hs_distance`] of the
/// heat kernel; with fewer eigenpairs it is the truncated embedding distance.
pub fn vdm_distance(graph: &ConnectionGraph, t: f64, x: usize, y: usize, k: usize) -> Result<f64> {
    check_rank(graph, k)?;
    let n = graph.n_vertices();
    for v in [x, y] {
        if v >= n {
            return Err(Error::UnknownVertex(v.to_string()));
        }
    }
    let spec = spectrum(graph)?;
    if k == n * graph.dim() {
        let h = BlockMatrix::from_matrix(heat_from_spectrum(&spec, t), graph.dim())?;
        Ok(hs_distance(&h, x, y))
    } else {
        Ok(embed_from(&spec, graph.dim(), n, t, k).distance(x, y))
    }
}

/// Pairwise [`vdm_distance`] for all vertex pairs, sharing one
/// eigendecomposition.
pub fn vdm_distance_matrix(graph: &ConnectionGraph, t: f64, k: usize) -> Result<DMatrix<f64>> {
    check_rank(graph, k)?;
    let n = graph.n_vertices();
    let spec = spectrum(graph)?;
    if k == n * graph.dim() {
        let h = BlockMatrix::from_matrix(heat_from_spectrum(&spec, t), graph.dim())?;
        Ok(DMatrix::from_fn(n, n, |x, y| hs_distance(&h, x, y)))
    } else {
        let e = embed_from(&spec, graph.dim(), n, t, k);
        Ok(DMatrix::from_fn(n, n, |x, y| e.distance(x, y)))
    }
}
