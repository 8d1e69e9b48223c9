//! Dense block matrices and the linear-algebra kernel shared by every heat
//! kernel route: Kronecker products and sums, symmetric eigendecomposition
//! and matrix exponentials.
//!
//! Everything here is dense. The intended scale is a few thousand scalar
//! rows at most.

use nalgebra::{ComplexField, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Largest absolute entry, `‖A‖_max`.
pub fn max_abs<T: ComplexField>(a: &DMatrix<T>) -> f64
where
    T::RealField: Into<f64>,
{
    a.iter().map(|x| x.clone().abs().into()).fold(0.0, f64::max)
}

/// Max-abs distance between two matrices of equal shape.
pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Square matrix partitioned into `d × d` blocks indexed by vertex pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix {
    n_blocks: usize,
    d: usize,
    data: DMatrix<f64>,
}

impl BlockMatrix {
    pub fn zeros(n_blocks: usize, d: usize) -> Self {
        Self {
            n_blocks,
            d,
            data: DMatrix::zeros(n_blocks * d, n_blocks * d),
        }
    }

    pub fn identity(n_blocks: usize, d: usize) -> Self {
        Self {
            n_blocks,
            d,
            data: DMatrix::identity(n_blocks * d, n_blocks * d),
        }
    }

    /// Wraps a dense matrix; fails unless it is square with side divisible by `d`.
    pub fn from_matrix(data: DMatrix<f64>, d: usize) -> Result<Self> {
        let (rows, cols) = data.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        if d == 0 || rows % d != 0 {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: rows,
            });
        }
        Ok(Self {
            n_blocks: rows / d,
            d,
            data,
        })
    }

    pub fn n_blocks(&self) -> usize {
        self.n_blocks
    }

    pub fn block_dim(&self) -> usize {
        self.d
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }

    pub fn block(&self, i: usize, j: usize) -> DMatrix<f64> {
        let d = self.d;
        self.data.view((i * d, j * d), (d, d)).into_owned()
    }

    pub fn set_block(&mut self, i: usize, j: usize, block: &DMatrix<f64>) {
        let d = self.d;
        assert_eq!(block.shape(), (d, d), "block shape mismatch");
        self.data.view_mut((i * d, j * d), (d, d)).copy_from(block);
    }

    pub fn add_to_block(&mut self, i: usize, j: usize, block: &DMatrix<f64>) {
        let d = self.d;
        let mut view = self.data.view_mut((i * d, j * d), (d, d));
        view += block;
    }
}

/// Eigen-pairs of a real symmetric matrix, eigenvalues ascending and
/// eigenvectors as orthonormal columns in matching order.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `V f(Λ) Vᵀ`.
    pub fn apply_fn(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let scaled = DMatrix::from_fn(self.vectors.nrows(), self.vectors.ncols(), |i, j| {
            self.vectors[(i, j)] * f(self.values[j])
        });
        &scaled * self.vectors.transpose()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.apply_fn(|x| x)
    }
}

/// Kronecker product `A ⊗ B`: the `(mp) × (nq)` matrix with blocks `a_ij B`.
pub fn kron_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// Kronecker product of a list, left to right. The empty list gives `[1]`.
pub fn kron_all<'a, T, I>(factors: I) -> DMatrix<T>
where
    T: ComplexField,
    I: IntoIterator<Item = &'a DMatrix<T>>,
{
    factors
        .into_iter()
        .fold(DMatrix::identity(1, 1), |acc, f| acc.kronecker(f))
}

/// Kronecker sum `A ⊕ B = A ⊗ I_n + I_m ⊗ B`.
pub fn kron_sum(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    ensure_square(a)?;
    ensure_square(b)?;
    let (m, n) = (a.nrows(), b.nrows());
    Ok(a.kronecker(&DMatrix::identity(n, n)) + DMatrix::identity(m, m).kronecker(b))
}

/// `A₁ ⊕ A₂ ⊕ ⋯ ⊕ A_k`, associating left to right.
pub fn kron_sum_all(terms: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
    let mut acc = DMatrix::zeros(1, 1);
    for t in terms {
        acc = kron_sum(&acc, t)?;
    }
    Ok(acc)
}

fn ensure_square<T: nalgebra::Scalar>(a: &DMatrix<T>) -> Result<()> {
    if a.is_square() {
        Ok(())
    } else {
        Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        })
    }
}

fn asymmetry(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

/// Symmetric eigendecomposition with eigenvalues sorted ascending.
///
/// Input must be symmetric to `1e-10 · ‖A‖_max`.
pub fn sym_eig(a: &DMatrix<f64>) -> Result<Spectrum> {
    ensure_square(a)?;
    let scale = max_abs(a);
    let asym = asymmetry(a);
    if asym > 1e-10 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::Asymmetric { asymmetry: asym });
    }
    let n = a.nrows();
    if n == 0 {
        return Ok(Spectrum {
            values: DVector::zeros(0),
            vectors: DMatrix::zeros(0, 0),
        });
    }
    // Exact symmetrization keeps the solver's symmetric assumptions honest.
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(Spectrum { values, vectors })
}

const TAYLOR_DEGREE: usize = 18;

fn norm_one<T: ComplexField>(a: &DMatrix<T>) -> f64
where
    T::RealField: Into<f64>,
{
    (0..a.ncols())
        .map(|j| {
            a.column(j)
                .iter()
                .map(|x| x.clone().abs().into())
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

/// General matrix exponential by scaling and squaring with a degree-18
/// Taylor polynomial, scaled so that `‖A / 2^s‖₁ ≤ 1/2`.
pub fn expm_taylor<T>(a: &DMatrix<T>) -> DMatrix<T>
where
    T: ComplexField,
    T::RealField: Into<f64>,
{
    assert!(a.is_square(), "matrix exponential of a non-square matrix");
    let n = a.nrows();
    let norm = norm_one(a);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let scale = T::from_f64(0.5f64.powi(squarings)).expect("representable scale");
    let b = a * scale;

    // Horner: I + B/1 (I + B/2 (I + ... (I + B/18)))
    let id = DMatrix::<T>::identity(n, n);
    let mut acc = id.clone();
    for k in (1..=TAYLOR_DEGREE).rev() {
        let inv_k = T::from_f64(1.0 / k as f64).expect("representable");
        acc = &id + (&b * acc) * inv_k;
    }
    for _ in 0..squarings {
        acc = &acc * &acc;
    }
    acc
}

/// `e^A`. Symmetric input goes through [`sym_eig`]; anything else through
/// [`expm_taylor`].
pub fn matrix_exp(a: &DMatrix<f64>) -> DMatrix<f64> {
    assert!(a.is_square(), "matrix exponential of a non-square matrix");
    let scale = max_abs(a);
    if asymmetry(a) <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
        match sym_eig(a) {
            Ok(spec) => spec.apply_fn(f64::exp),
            Err(_) => expm_taylor(a),
        }
    } else {
        expm_taylor(a)
    }
}

/// `e^{-tA}` for symmetric `A` given its spectrum.
pub fn heat_from_spectrum(spec: &Spectrum, t: f64) -> DMatrix<f64> {
    spec.apply_fn(|mu| (-t * mu).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn rot(theta: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()])
    }

    #[test]
    fn kron_identities() {
        let i6 = kron_product(&DMatrix::identity(2, 2), &DMatrix::identity(3, 3));
        assert_eq!(i6, DMatrix::identity(6, 6));

        let b = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let two = DMatrix::from_element(1, 1, 2.0);
        assert_eq!(kron_product(&two, &b), &b * 2.0);
    }

    #[test]
    fn kron_mixed_product_on_vectors() {
        let (alpha, beta) = (0.37, -1.2);
        let v = DMatrix::from_column_slice(2, 1, &[0.3, -0.8]);
        let w = DMatrix::from_column_slice(2, 1, &[1.1, 0.4]);
        let lhs = kron_product(&rot(alpha), &rot(beta)) * kron_product(&v, &w);
        let rhs = kron_product(&(rot(alpha) * &v), &(rot(beta) * &w));
        assert!(max_abs_diff(&lhs, &rhs) < 1e-15);
    }

    #[test]
    fn kron_sum_small_cases() {
        let a = DMatrix::from_element(1, 1, 2.5);
        let b = DMatrix::from_element(1, 1, -0.5);
        assert_eq!(kron_sum(&a, &b).unwrap()[(0, 0)], 2.0);

        let bm = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let s = kron_sum(&DMatrix::zeros(3, 3), &bm).unwrap();
        assert_eq!(s, DMatrix::identity(3, 3).kronecker(&bm));

        assert!(matches!(
            kron_sum(&DMatrix::zeros(2, 3), &bm),
            Err(Error::NotSquare { rows: 2, cols: 3 })
        ));
    }

    #[test]
    fn sym_eig_examples() {
        let spec = sym_eig(&DMatrix::identity(4, 4)).unwrap();
        assert!(spec.values.iter().all(|&x| close(x, 1.0, 1e-15)));

        let spec = sym_eig(&DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0, 2.0])))
            .unwrap();
        assert_eq!(spec.values.as_slice(), &[1.0, 2.0, 3.0]);

        // normalized Laplacian of the unweighted 3-cycle: I - A/2
        let l = DMatrix::from_row_slice(
            3,
            3,
            &[1.0, -0.5, -0.5, -0.5, 1.0, -0.5, -0.5, -0.5, 1.0],
        );
        let spec = sym_eig(&l).unwrap();
        let expected = [0.0, 1.5, 1.5];
        for (got, want) in spec.values.iter().zip(expected) {
            assert!(close(*got, want, 1e-14), "{got} vs {want}");
        }
        assert!(max_abs_diff(&spec.reconstruct(), &l) < 1e-14);
    }

    #[test]
    fn sym_eig_rejects_asymmetric() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(sym_eig(&a), Err(Error::Asymmetric { .. })));
    }

    #[test]
    fn exp_trivial_cases() {
        assert_eq!(matrix_exp(&DMatrix::zeros(3, 3)), DMatrix::identity(3, 3));
        let e = matrix_exp(&DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, -2.0])));
        assert!(close(e[(0, 0)], 0.5f64.exp(), 1e-15));
        assert!(close(e[(1, 1)], (-2.0f64).exp(), 1e-16));
        assert_eq!(e[(0, 1)], 0.0);
    }

    #[test]
    fn exp_of_scaled_quarter_turn_matches_power_series() {
        // R(pi/2)^k cycles with period 4, so the oracle sums cos/sin-like
        // scalar series entrywise.
        let c: f64 = 0.7;
        let q = rot(std::f64::consts::FRAC_PI_2);
        let mut oracle = DMatrix::<f64>::zeros(2, 2);
        let mut power = DMatrix::<f64>::identity(2, 2);
        let mut coeff = 1.0;
        for k in 0..40 {
            if k > 0 {
                coeff *= c / k as f64;
                power = &power * &q;
            }
            oracle += &power * coeff;
        }
        let got = matrix_exp(&(&q * c));
        let rel = (&got - &oracle).norm() / oracle.norm();
        assert!(rel < 1e-13, "relative error {rel:e}");
        // closed form too: exp(cJ) = R(c)
        assert!(max_abs_diff(&got, &rot(c)) < 1e-15);
    }

    #[test]
    fn exp_of_large_norm_uses_squaring() {
        let s = DMatrix::from_row_slice(2, 2, &[0.0, -30.0, 30.0, 0.0]);
        let e = expm_taylor(&s);
        assert!(max_abs_diff(&e, &rot(30.0)) < 1e-12);
    }

    #[test]
    fn block_accessors() {
        let mut b = BlockMatrix::zeros(3, 2);
        let r = rot(0.3);
        b.set_block(2, 1, &r);
        assert_eq!(b.block(2, 1), r);
        b.add_to_block(2, 1, &r);
        assert_eq!(b.block(2, 1), &r * 2.0);
        assert_eq!(b.block(0, 0), DMatrix::zeros(2, 2));
        assert!(BlockMatrix::from_matrix(DMatrix::zeros(5, 5), 2).is_err());
    }
}
