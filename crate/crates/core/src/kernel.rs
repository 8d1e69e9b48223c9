//! Heat kernels of finite connection graphs.

use nalgebra::{DMatrix, DVector};

use crate::blockmat::{heat_from_spectrum, sym_eig, BlockMatrix};
use crate::error::{Error, Result};
use crate::graph::{is_consistent, path_signature, ConnectionGraph};
use crate::laplacian::normalized_laplacian;

/// One `d×d` block `H_t(x, y)` of a heat kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelBlock {
    pub block: DMatrix<f64>,
    /// `false` when `x` and `y` lie in different components (the block is
    /// then zero).
    pub connected: bool,
}

impl KernelBlock {
    pub fn connected(block: DMatrix<f64>) -> Self {
        Self {
            block,
            connected: true,
        }
    }
}

/// `e^{−t𝓛^σ}` from the eigendecomposition of the normalized connection
/// Laplacian.
pub fn dense_kernel(graph: &ConnectionGraph, t: f64) -> Result<BlockMatrix> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    let lap = normalized_laplacian(graph)?;
    let spec = sym_eig(lap.matrix())?;
    BlockMatrix::from_matrix(heat_from_spectrum(&spec, t), graph.dim())
}

/// Scalar kernel of the underlying graph times the signature of a path from
/// `x` to `y`.
///
/// Requires a consistent connection; otherwise the error carries the ids of
/// a cycle with non-identity signature.
pub fn consistent_kernel_block(graph: &ConnectionGraph, x: usize, y: usize, t: f64) -> Result<KernelBlock> {
    ConsistentKernel::new(graph, t)?.block(x, y)
}

/// [`consistent_kernel_block`] with the scalar kernel computed once, for
/// evaluating many pairs.
#[derive(Debug, Clone)]
pub struct ConsistentKernel<'g> {
    graph: &'g ConnectionGraph,
    scalar: BlockMatrix,
}

impl<'g> ConsistentKernel<'g> {
    pub fn new(graph: &'g ConnectionGraph, t: f64) -> Result<Self> {
        let c = is_consistent(graph);
        if let Some(cycle) = c.witness {
            return Err(Error::Inconsistent {
                witness: cycle.iter().map(|&v| graph.id(v).to_string()).collect(),
            });
        }
        let scalar = dense_kernel(&graph.underlying(), t)?;
        Ok(Self { graph, scalar })
    }

    pub fn block(&self, x: usize, y: usize) -> Result<KernelBlock> {
        let n = self.graph.n_vertices();
        for v in [x, y] {
            if v >= n {
                return Err(Error::UnknownVertex(v.to_string()));
            }
        }
        let d = self.graph.dim();
        match self.graph.find_path(x, y) {
            None => Ok(KernelBlock {
                block: DMatrix::zeros(d, d),
                connected: false,
            }),
            Some(path) => {
                let sig = path_signature(self.graph, &path)?;
                let h = self.scalar.matrix()[(x, y)];
                Ok(KernelBlock::connected(sig.into_matrix() * h))
            }
        }
    }
}

/// Eigenvectors `Φ_{i,j}(x) = f_i(x)·P_xᵀe_j` of a consistent connection
/// Laplacian, built from the scalar eigenvectors `f_i` and the connection
/// potentials `P_x`. Returned as `(μ_i, Φ_{i,j})` pairs in the order
/// `i`-major, `j`-minor.
pub fn consistent_eigensystem(graph: &ConnectionGraph) -> Result<Vec<(f64, DVector<f64>)>> {
    let c = is_consistent(graph);
    if let Some(cycle) = c.witness {
        return Err(Error::Inconsistent {
            witness: cycle.iter().map(|&v| graph.id(v).to_string()).collect(),
        });
    }
    let scalar = sym_eig(normalized_laplacian(&graph.underlying())?.matrix())?;
    let (n, d) = (graph.n_vertices(), graph.dim());
    let mut out = Vec::with_capacity(n * d);
    for i in 0..n {
        let f = scalar.vectors.column(i);
        for j in 0..d {
            let mut phi = DVector::zeros(n * d);
            for x in 0..n {
                // column j of P_xᵀ is row j of P_x
                let g = c.potentials[x].row(j).transpose();
                phi.rows_mut(x * d, d).copy_from(&(g * f[x]));
            }
            out.push((scalar.values[i], phi));
        }
    }
    Ok(out)
}

/// `Σ e^{−tμ}ΦΦᵀ` over [`consistent_eigensystem`].
pub fn eigensystem_kernel(graph: &ConnectionGraph, t: f64) -> Result<BlockMatrix> {
    let pairs = consistent_eigensystem(graph)?;
    let nd = graph.n_vertices() * graph.dim();
    let mut h = DMatrix::zeros(nd, nd);
    for (mu, phi) in &pairs {
        h.ger((-t * mu).exp(), phi, phi, 1.0);
    }
    BlockMatrix::from_matrix(h, graph.dim())
}
