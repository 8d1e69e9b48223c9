//! Heat kernels of the integer lattice `ℤ` and its products `ℤⁿ`, all edges
//! of unit weight.
//!
//! On `ℤ` the kernel block is a scalar series times the signature of the
//! straight path, `H_t(x, x+a) = c_a(t)·σ_{x,x+1}⋯σ_{x+a−1,x+a}`, where
//! `c_a(t) = e^{−t}I_a(t)` is [`z_series_coeff`]. On `ℤⁿ` with the product
//! connection every vertex has degree `2n`, the normalized Laplacian is the
//! average of the axis Laplacians, and the kernel factors as a Kronecker
//! product of one-dimensional kernels at time `t/n`.

use nalgebra::DMatrix;

use crate::bessel::{z_series_coeff, SeriesControl};
use crate::blockmat::kron_all;
use crate::error::{Error, Result};
use crate::graph::{ConnectionGraph, OrthoMatrix};
use crate::kernel::KernelBlock;

/// Connection on `ℤ` given by the matrices `σ_{x,x+1}`.
#[derive(Debug, Clone, PartialEq)]
pub enum LatticeConnection1D {
    /// `σ_{x,x+1} = σ` for every `x`.
    Constant(OrthoMatrix),
    /// `σ_{x,x+1} = steps[x − lo]`, defined on the window `[lo, lo + steps.len()]`.
    Windowed { lo: i64, steps: Vec<OrthoMatrix> },
}

impl LatticeConnection1D {
    pub fn constant(sigma: OrthoMatrix) -> Self {
        Self::Constant(sigma)
    }

    pub fn windowed(lo: i64, steps: Vec<OrthoMatrix>) -> Result<Self> {
        let d = steps.first().ok_or_else(|| Error::Schema("empty connection window".into()))?.dim();
        if let Some(bad) = steps.iter().find(|s| s.dim() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: bad.dim(),
            });
        }
        Ok(Self::Windowed { lo, steps })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Constant(s) => s.dim(),
            Self::Windowed { steps, .. } => steps[0].dim(),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Self::Constant(_))
    }

    /// Vertex window `[lo, hi]` on which the connection is defined, or `None`
    /// for a constant connection.
    pub fn window(&self) -> Option<(i64, i64)> {
        match self {
            Self::Constant(_) => None,
            Self::Windowed { lo, steps } => Some((*lo, lo + steps.len() as i64)),
        }
    }

    /// `σ_{x,x+1}`.
    pub fn step(&self, x: i64) -> Result<&OrthoMatrix> {
        match self {
            Self::Constant(s) => Ok(s),
            Self::Windowed { lo, steps } => {
                let hi = lo + steps.len() as i64;
                if x < *lo || x >= hi {
                    return Err(Error::WindowExceeded {
                        lo: *lo,
                        hi,
                        from: x,
                        to: x + 1,
                    });
                }
                Ok(&steps[(x - lo) as usize])
            }
        }
    }

    /// Signature of the straight path `x → x+a`: `σ_{x,x+1}⋯σ_{x+a−1,x+a}`
    /// for `a ≥ 0`, and `σ_{x,x−1}⋯σ_{x+a+1,x+a}` with `σ_{y+1,y} = σ_{y,y+1}ᵀ`
    /// for `a < 0`.
    pub fn signature(&self, x: i64, a: i64) -> Result<DMatrix<f64>> {
        if let Self::Windowed { lo, steps } = self {
            let hi = lo + steps.len() as i64;
            let (from, to) = (x, x + a);
            if from.min(to) < *lo || from.max(to) > hi {
                return Err(Error::WindowExceeded { lo: *lo, hi, from, to });
            }
        }
        match self {
            Self::Constant(s) => Ok(s.pow(a).into_matrix()),
            Self::Windowed { .. } => {
                let d = self.dim();
                let mut acc = DMatrix::identity(d, d);
                if a >= 0 {
                    for y in x..x + a {
                        acc *= self.step(y)?.matrix();
                    }
                } else {
                    for y in (x + a..x).rev() {
                        acc *= self.step(y)?.matrix().transpose();
                    }
                }
                Ok(acc)
            }
        }
    }

    /// The path graph on `lo..=hi` (ids are the integers) carrying this
    /// connection, i.e. `ℤ` truncated to a segment.
    pub fn segment_graph(&self, lo: i64, hi: i64) -> Result<ConnectionGraph> {
        let mut g = ConnectionGraph::new(self.dim());
        for x in lo..=hi {
            g.add_vertex(x.to_string())?;
        }
        for x in lo..hi {
            let i = (x - lo) as usize;
            g.add_edge(i, i + 1, 1.0, self.step(x)?.matrix().clone())?;
        }
        Ok(g)
    }
}

/// `H_t(x, x+a)` on `(ℤ, σ)`.
pub fn z_kernel_block(
    conn: &LatticeConnection1D,
    x: i64,
    a: i64,
    t: f64,
    ctl: &SeriesControl,
) -> Result<KernelBlock> {
    let sig = conn.signature(x, a)?;
    let c = z_series_coeff(a, t, ctl)?;
    Ok(KernelBlock::connected(sig * c))
}

/// `H_t(x, x+a)` on `ℤⁿ` with the product connection: the Kronecker product
/// of the axis blocks at time `t/n`.
pub fn zn_kernel_block(
    conns: &[LatticeConnection1D],
    x: &[i64],
    a: &[i64],
    t: f64,
    ctl: &SeriesControl,
) -> Result<KernelBlock> {
    let n = conns.len();
    if n == 0 {
        return Err(Error::EmptyProduct);
    }
    for len in [x.len(), a.len()] {
        if len != n {
            return Err(Error::DimensionMismatch { expected: n, found: len });
        }
    }
    let tau = t / n as f64;
    let mut scalar = 1.0;
    let mut sigs = Vec::with_capacity(n);
    for i in 0..n {
        scalar *= z_series_coeff(a[i], tau, ctl)?;
        sigs.push(conns[i].signature(x[i], a[i])?);
    }
    Ok(KernelBlock::connected(kron_all(sigs.iter()) * scalar))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bessel::bessel_i_scaled;
    use crate::blockmat::{kron_product, max_abs_diff};
    use crate::graph::cartesian_product;
    use crate::kernel::dense_kernel;

    fn ctl() -> SeriesControl {
        SeriesControl::default()
    }

    #[test]
    fn zero_offset_is_scalar() {
        let conn = LatticeConnection1D::constant(OrthoMatrix::rotation(0.7));
        let b = z_kernel_block(&conn, 3, 0, 1.5, &ctl()).unwrap();
        let c = z_series_coeff(0, 1.5, &ctl()).unwrap();
        assert!(max_abs_diff(&b.block, &(DMatrix::identity(2, 2) * c)) < 1e-15);
        let b0 = z_kernel_block(&conn, 3, 0, 0.0, &ctl()).unwrap();
        assert_eq!(b0.block, DMatrix::identity(2, 2));
    }

    #[test]
    fn constant_rotation_two_steps() {
        let conn = LatticeConnection1D::constant(OrthoMatrix::rotation(0.4));
        let b = z_kernel_block(&conn, -1, 2, 0.8, &ctl()).unwrap();
        let want = OrthoMatrix::rotation(0.8).into_matrix() * z_series_coeff(2, 0.8, &ctl()).unwrap();
        assert!(max_abs_diff(&b.block, &want) < 1e-15);
        let back = z_kernel_block(&conn, 1, -2, 0.8, &ctl()).unwrap();
        assert!(max_abs_diff(&back.block, &want.transpose()) < 1e-15);
    }

    #[test]
    fn windowed_signature_and_bounds() {
        let steps: Vec<_> = (0..4).map(|i| OrthoMatrix::rotation(0.1 * (i + 1) as f64)).collect();
        let conn = LatticeConnection1D::windowed(-2, steps).unwrap();
        assert_eq!(conn.window(), Some((-2, 2)));
        // rotations commute, so the signature from -2 to 1 is R(0.1+0.2+0.3)
        let s = conn.signature(-2, 3).unwrap();
        assert!(max_abs_diff(&s, OrthoMatrix::rotation(0.6).matrix()) < 1e-15);
        let s = conn.signature(1, -3).unwrap();
        assert!(max_abs_diff(&s, OrthoMatrix::rotation(-0.6).matrix()) < 1e-15);
        assert!(matches!(conn.signature(0, 3), Err(Error::WindowExceeded { .. })));
        assert!(matches!(
            z_kernel_block(&conn, -3, 1, 1.0, &ctl()),
            Err(Error::WindowExceeded { .. })
        ));
    }

    #[test]
    fn matches_truncated_dense_kernel() {
        let conn = LatticeConnection1D::constant(OrthoMatrix::rotation(1.3));
        let n = 40;
        let g = conn.segment_graph(-n, n).unwrap();
        let t = 1.0;
        let h = dense_kernel(&g, t).unwrap();
        for x in -3..=3i64 {
            for a in -3..=3i64 {
                let b = z_kernel_block(&conn, x, a, t, &ctl()).unwrap();
                let dense = h.block((x + n) as usize, (x + a + n) as usize);
                assert!(max_abs_diff(&b.block, &dense) < 1e-8);
            }
        }
    }

    #[test]
    fn one_axis_reduces_to_line() {
        let conn = LatticeConnection1D::constant(OrthoMatrix::rotation(0.3));
        let a = z_kernel_block(&conn, 2, -3, 1.1, &ctl()).unwrap();
        let b = zn_kernel_block(&[conn], &[2], &[-3], 1.1, &ctl()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_offset_bessel_power() {
        let conns = vec![
            LatticeConnection1D::constant(OrthoMatrix::rotation(0.3)),
            LatticeConnection1D::constant(OrthoMatrix::identity(1)),
            LatticeConnection1D::constant(OrthoMatrix::rotation(2.0)),
        ];
        let t = 2.4;
        let b = zn_kernel_block(&conns, &[0, 5, -1], &[0, 0, 0], t, &ctl()).unwrap();
        let want = bessel_i_scaled(0, t / 3.0).powi(3);
        assert!(max_abs_diff(&b.block, &(DMatrix::identity(4, 4) * want)) < 1e-14);
    }

    #[test]
    fn axis_factorization() {
        let c1 = LatticeConnection1D::constant(OrthoMatrix::rotation(0.3));
        let c2 = LatticeConnection1D::constant(OrthoMatrix::rotation(-1.2));
        let t = 1.6;
        let b = zn_kernel_block(&[c1.clone(), c2.clone()], &[0, 1], &[2, -1], t, &ctl()).unwrap();
        let b1 = z_kernel_block(&c1, 0, 2, t / 2.0, &ctl()).unwrap();
        let b2 = z_kernel_block(&c2, 1, -1, t / 2.0, &ctl()).unwrap();
        assert!(max_abs_diff(&b.block, &kron_product(&b1.block, &b2.block)) < 1e-15);
    }

    #[test]
    fn plane_matches_truncated_grid() {
        let id = LatticeConnection1D::constant(OrthoMatrix::identity(1));
        let n = 12;
        let seg = id.segment_graph(-n, n).unwrap();
        let grid = cartesian_product(&[seg.clone(), seg]).unwrap();
        let t = 1.0;
        let h = dense_kernel(&grid, t).unwrap();
        let side = (2 * n + 1) as usize;
        let ix = |p: [i64; 2]| (p[0] + n) as usize * side + (p[1] + n) as usize;
        for x in [[0, 0], [1, -2]] {
            for a in [[0, 0], [1, 0], [2, -1], [-3, 3]] {
                let y = [x[0] + a[0], x[1] + a[1]];
                let b = zn_kernel_block(&[id.clone(), id.clone()], &x, &a, t, &ctl()).unwrap();
                assert!((b.block[(0, 0)] - h.matrix()[(ix(x), ix(y))]).abs() < 1e-8);
            }
        }
    }
}
