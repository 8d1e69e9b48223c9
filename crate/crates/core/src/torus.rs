//! The connection discrete torus `ℤⁿ/Mℤⁿ` with constant axis connections.
//!
//! Every lattice edge `x ∼ x+e_i` carries `σ_i` (and `σ_iᵀ` backwards),
//! padded to `I ⊗ ⋯ ⊗ σ_i ⊗ ⋯ ⊗ I`. Translations by `Mℤⁿ` are automorphisms,
//! so the kernel of the quotient can be computed either by folding the
//! lattice kernel over translates ([`kernel_lattice_sum`]) or by summing over
//! the `|det M|` characters of the quotient group ([`kernel_spectral`]).

use std::collections::HashMap;

use nalgebra::{Complex, DMatrix};

use crate::bessel::{bessel_i_scaled, z_series_coeff, SeriesControl};
use crate::blockmat::{expm_taylor, kron_all, max_abs, max_abs_diff};
use crate::error::{Error, Result};
use crate::graph::{quotient, ConnectionGraph, GroupAction, OrthoMatrix, ORTHO_TOL};
use crate::intmat::{adjugate, column_hnf, det, invariant_factors, reduce_mod_hnf};
use crate::kernel::{dense_kernel, KernelBlock};

type C64 = Complex<f64>;

/// Lattice matrix `M` plus one constant connection per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusSpec {
    m: DMatrix<i64>,
    sigmas: Vec<OrthoMatrix>,
    det: i128,
}

impl TorusSpec {
    /// Requires `M` square with `|det M| > 1` and one connection per axis.
    pub fn new(m: DMatrix<i64>, sigmas: Vec<OrthoMatrix>) -> Result<Self> {
        let det = det(&m)?;
        if det == 0 {
            return Err(Error::Singular);
        }
        if det.abs() < 2 {
            return Err(Error::DegenerateTorus(format!("|det M| = {} must exceed 1", det.abs())));
        }
        if sigmas.len() != m.nrows() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: sigmas.len(),
            });
        }
        Ok(Self { m, sigmas, det })
    }

    /// `M = (m)` on the cycle, connection `sigma`.
    pub fn cycle(m: i64, sigma: OrthoMatrix) -> Result<Self> {
        Self::new(DMatrix::from_element(1, 1, m), vec![sigma])
    }

    pub fn n(&self) -> usize {
        self.m.nrows()
    }

    pub fn m(&self) -> &DMatrix<i64> {
        &self.m
    }

    pub fn sigmas(&self) -> &[OrthoMatrix] {
        &self.sigmas
    }

    /// `|det M|`, the number of vertices of the torus.
    pub fn order(&self) -> usize {
        self.det.unsigned_abs() as usize
    }

    /// `∏ d_i`, the block size of the product connection.
    pub fn block_dim(&self) -> usize {
        self.sigmas.iter().map(OrthoMatrix::dim).product()
    }

    /// Axis connection `σ_i` padded to the full block size.
    pub fn padded_sigma(&self, axis: usize) -> DMatrix<f64> {
        let factors: Vec<DMatrix<f64>> = self
            .sigmas
            .iter()
            .enumerate()
            .map(|(j, s)| {
                if j == axis {
                    s.matrix().clone()
                } else {
                    DMatrix::identity(s.dim(), s.dim())
                }
            })
            .collect();
        kron_all(factors.iter())
    }

    /// Smith invariant factors of `M`: `ℤⁿ/Mℤⁿ ≅ ⊕ ℤ/s_iℤ`.
    pub fn invariant_factors(&self) -> Vec<i128> {
        invariant_factors(&self.m).expect("square and nonsingular")
    }
}

/// One representative per class of `ℤⁿ/Mℤⁿ`: the box `∏[0, h_ii)` of the
/// Hermite normal form `H` of `M`, in lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct CosetSet {
    hnf: DMatrix<i128>,
    representatives: Vec<Vec<i64>>,
}

impl CosetSet {
    pub fn representatives(&self) -> &[Vec<i64>] {
        &self.representatives
    }

    pub fn len(&self) -> usize {
        self.representatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.representatives.is_empty()
    }

    pub fn hnf(&self) -> &DMatrix<i128> {
        &self.hnf
    }

    /// Canonical representative of `x + Mℤⁿ`.
    pub fn reduce(&self, x: &[i64]) -> Vec<i64> {
        reduce_mod_hnf(&self.hnf, x)
    }

    /// Position of the class of `x` in [`representatives`](Self::representatives).
    pub fn index_of(&self, x: &[i64]) -> usize {
        let r = self.reduce(x);
        let n = r.len();
        let mut ix = 0usize;
        for i in 0..n {
            ix = ix * self.hnf[(i, i)] as usize + r[i] as usize;
        }
        ix
    }
}

/// The `|det M|` characters `z ↦ e^{2πi⟨w, z⟩}` of `ℤⁿ/Mℤⁿ`, with
/// `w ∈ (Mᵀ)⁻¹ℤⁿ/ℤⁿ` stored exactly as `numerators / denominator`.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacterSet {
    denominator: i128,
    numerators: Vec<Vec<i128>>,
}

impl CharacterSet {
    pub fn len(&self) -> usize {
        self.numerators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.numerators.is_empty()
    }

    pub fn denominator(&self) -> i128 {
        self.denominator
    }

    pub fn numerators(&self) -> &[Vec<i128>] {
        &self.numerators
    }

    /// Frequencies `w ∈ [0, 1)ⁿ`.
    pub fn frequencies(&self) -> Vec<Vec<f64>> {
        let d = self.denominator as f64;
        self.numerators
            .iter()
            .map(|w| w.iter().map(|&k| k as f64 / d).collect())
            .collect()
    }

    /// `⟨w_k, z⟩ mod 1`, reduced exactly before converting to a float.
    pub fn phase(&self, k: usize, z: &[i64]) -> f64 {
        let s: i128 = self.numerators[k].iter().zip(z).map(|(&a, &b)| a * b as i128).sum();
        s.rem_euclid(self.denominator) as f64 / self.denominator as f64
    }

    /// `e^{2πi⟨w_k, z⟩}`.
    pub fn character(&self, k: usize, z: &[i64]) -> C64 {
        C64::from_polar(1.0, std::f64::consts::TAU * self.phase(k, z))
    }
}

fn box_points(sides: &[i64]) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for &s in sides {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..s).map(move |v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    out
}

/// Coset representatives of `ℤⁿ/Mℤⁿ`.
pub fn enumerate_cosets(m: &DMatrix<i64>) -> Result<CosetSet> {
    let hnf = column_hnf(m)?;
    let sides: Vec<i64> = (0..hnf.nrows()).map(|i| hnf[(i, i)] as i64).collect();
    Ok(CosetSet {
        representatives: box_points(&sides),
        hnf,
    })
}

/// Frequencies `w = (Mᵀ)⁻¹k mod ℤⁿ` for `k` over representatives of
/// `ℤⁿ/Mᵀℤⁿ`, so that `e^{2πi⟨w, Mz⟩} = 1` for every `z ∈ ℤⁿ`.
pub fn enumerate_characters(m: &DMatrix<i64>) -> Result<CharacterSet> {
    let mt = m.transpose();
    let d = det(&mt)?;
    if d == 0 {
        return Err(Error::Singular);
    }
    // (Mᵀ)⁻¹ = adj(Mᵀ)/det; fold the sign of det into the numerator
    let adj = adjugate(&mt)?;
    let sign = d.signum();
    let denominator = d.abs();
    let reps = enumerate_cosets(&mt)?;
    let n = m.nrows();
    let numerators = reps
        .representatives()
        .iter()
        .map(|k| {
            (0..n)
                .map(|i| {
                    let s: i128 = (0..n).map(|j| adj[(i, j)] * k[j] as i128).sum();
                    (sign * s).rem_euclid(denominator)
                })
                .collect()
        })
        .collect();
    Ok(CharacterSet {
        denominator,
        numerators,
    })
}

/// Quotient graph of the connection lattice plus its coset labelling.
#[derive(Debug, Clone)]
pub struct TorusGraph {
    pub graph: ConnectionGraph,
    pub cosets: CosetSet,
}

fn point_id(p: &[i64]) -> String {
    match p {
        [x] => x.to_string(),
        _ => format!("({})", p.iter().map(i64::to_string).collect::<Vec<_>>().join(",")),
    }
}

/// Builds `ℤⁿ/Mℤⁿ` as a connection graph on the coset representatives.
///
/// The `2n` lattice directions out of `[x]` are grouped by target class;
/// the edge weight is the number of directions in the group, and all of
/// them must carry the same matrix (otherwise the connection is not proper
/// for `Mℤⁿ` and [`Error::NotProper`] is returned). A direction landing back
/// in `[x]` makes the spec degenerate.
pub fn build_torus_graph(spec: &TorusSpec) -> Result<TorusGraph> {
    let cosets = enumerate_cosets(&spec.m)?;
    let n = spec.n();
    let padded: Vec<DMatrix<f64>> = (0..n).map(|i| spec.padded_sigma(i)).collect();
    let mut g = ConnectionGraph::new(spec.block_dim());
    for r in cosets.representatives() {
        g.add_vertex(point_id(r))?;
    }
    for (ix, x) in cosets.representatives().iter().enumerate() {
        // target class → (count, matrix)
        let mut groups: Vec<(usize, usize, DMatrix<f64>)> = Vec::new();
        for axis in 0..n {
            for step in [1i64, -1] {
                let mut y = x.clone();
                y[axis] += step;
                let iy = cosets.index_of(&y);
                if iy == ix {
                    return Err(Error::DegenerateTorus(format!(
                        "e_{} lies in Mℤⁿ, so {} is its own neighbour",
                        axis + 1,
                        point_id(x)
                    )));
                }
                let sigma = if step > 0 {
                    padded[axis].clone()
                } else {
                    padded[axis].transpose()
                };
                match groups.iter_mut().find(|(c, _, _)| *c == iy) {
                    Some((_, count, s)) => {
                        if max_abs_diff(s, &sigma) > ORTHO_TOL {
                            return Err(Error::NotProper(point_id(x), point_id(&cosets.representatives()[iy])));
                        }
                        *count += 1;
                    }
                    None => groups.push((iy, 1, sigma)),
                }
            }
        }
        for (iy, count, sigma) in groups {
            if ix < iy {
                g.add_edge(ix, iy, count as f64, sigma)?;
            }
        }
    }
    Ok(TorusGraph { graph: g, cosets })
}

/// Truncation control for [`kernel_lattice_sum`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeSumControl {
    /// Bound on the discarded Bessel mass, split evenly across axes.
    pub tail_tol: f64,
    /// Largest admissible per-axis radius.
    pub radius_cap: i64,
    pub series: SeriesControl,
}

impl Default for LatticeSumControl {
    fn default() -> Self {
        Self {
            tail_tol: 1e-12,
            radius_cap: 200,
            series: SeriesControl::default(),
        }
    }
}

// Smallest R with 2·Σ_{k>R} e^{−τ}I_k(τ) < target, or None past `cap`.
fn radius_for(tau: f64, target: f64, cap: i64) -> Option<i64> {
    // c_k is decreasing in |k|, so the mass inside the cap is at most (2cap+1)c_0
    if 1.0 - (2 * cap + 1) as f64 * bessel_i_scaled(0, tau) >= target {
        return None;
    }
    let mut c = Vec::new();
    for k in 0..=(cap + 64) {
        let v = bessel_i_scaled(k, tau);
        c.push(v);
        if k as f64 > tau && v < 1e-300 {
            break;
        }
    }
    let mut tail = 0.0;
    let mut tails = vec![0.0; c.len()];
    for k in (0..c.len()).rev() {
        tails[k] = tail; // Σ_{j>k}
        tail += c[k];
    }
    (0..tails.len())
        .find(|&r| 2.0 * tails[r] < target)
        .map(|r| r as i64)
        .filter(|&r| r <= cap)
}

/// Per-axis radius used by [`kernel_lattice_sum`] at time `t`.
pub fn lattice_radius(n: usize, t: f64, ctl: &LatticeSumControl) -> Result<i64> {
    let target = ctl.tail_tol / n as f64;
    let tau = t / n as f64;
    if let Some(r) = radius_for(tau, target, ctl.radius_cap) {
        return Ok(r);
    }
    // largest time that still fits, by bisection
    let (mut lo, mut hi) = (0.0, t);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if radius_for(mid / n as f64, target, ctl.radius_cap).is_some() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::RadiusOverflow {
        t,
        radius: ctl.radius_cap as usize + 1,
        cap: ctl.radius_cap as usize,
        suggested_t: lo,
    })
}

fn check_point(spec: &TorusSpec, p: &[i64]) -> Result<()> {
    if p.len() != spec.n() {
        return Err(Error::DimensionMismatch {
            expected: spec.n(),
            found: p.len(),
        });
    }
    Ok(())
}

// Σ_{z ∈ (y−x)+Mℤⁿ, ‖z‖∞ ≤ R} ∏_i c(z_i) ⊗_i σ_i^{z_i}
fn fold_translates(
    spec: &TorusSpec,
    x: &[i64],
    y: &[i64],
    t: f64,
    ctl: &LatticeSumControl,
    coeff: impl Fn(i64, f64) -> Result<f64>,
) -> Result<DMatrix<f64>> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    check_point(spec, x)?;
    check_point(spec, y)?;
    let n = spec.n();
    let tau = t / n as f64;
    let r = lattice_radius(n, t, ctl)?;
    let cosets = enumerate_cosets(&spec.m)?;
    let v: Vec<i64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
    let target = cosets.reduce(&v);

    let mut coeffs: HashMap<i64, f64> = HashMap::new();
    let mut powers: Vec<HashMap<i64, DMatrix<f64>>> = vec![HashMap::new(); n];
    let dim = spec.block_dim();
    let mut acc = DMatrix::zeros(dim, dim);
    let side = 2 * r + 1;
    for offset in box_points(&vec![side; n]) {
        let z: Vec<i64> = offset.iter().map(|o| o - r).collect();
        if cosets.reduce(&z) != target {
            continue;
        }
        let mut scalar = 1.0;
        for &zi in &z {
            let c = match coeffs.get(&zi.abs()) {
                Some(&c) => c,
                None => {
                    let c = coeff(zi.abs(), tau)?;
                    coeffs.insert(zi.abs(), c);
                    c
                }
            };
            scalar *= c;
        }
        if scalar == 0.0 {
            continue;
        }
        let factors: Vec<DMatrix<f64>> = z
            .iter()
            .enumerate()
            .map(|(i, &zi)| {
                powers[i]
                    .entry(zi)
                    .or_insert_with(|| spec.sigmas[i].pow(zi).into_matrix())
                    .clone()
            })
            .collect();
        acc += kron_all(factors.iter()) * scalar;
    }
    Ok(acc)
}

/// `H_t([x], [y])` as a sum of lattice kernel blocks over the translates
/// `z ∈ (y − x) + Mℤⁿ` with `‖z‖∞ ≤ R`, `R` from [`lattice_radius`].
pub fn kernel_lattice_sum(
    spec: &TorusSpec,
    x: &[i64],
    y: &[i64],
    t: f64,
    ctl: &LatticeSumControl,
) -> Result<KernelBlock> {
    let series = ctl.series;
    let block = fold_translates(spec, x, y, t, ctl, |a, tau| z_series_coeff(a, tau, &series))?;
    Ok(KernelBlock::connected(block))
}

/// Axis generator used by [`kernel_spectral`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpectralForm {
    /// `exp(τ(e^{2πiw}σ + e^{−2πiw}σᵀ)/2)`, the Fourier symbol of the axis
    /// adjacency. Exact for every orthogonal `σ`.
    #[default]
    Hermitian,
    /// `exp(τ cos(2πw)·σ)`. Agrees with [`Hermitian`](Self::Hermitian) only
    /// when `σ` is symmetric; kept for comparison.
    Cosine,
}

fn axis_factor(sigma: &OrthoMatrix, w: f64, tau: f64, form: SpectralForm) -> DMatrix<C64> {
    let s = sigma.matrix().map(|v| C64::new(v, 0.0));
    let phase = C64::from_polar(1.0, std::f64::consts::TAU * w);
    let gen = match form {
        SpectralForm::Hermitian => (&s * phase + s.transpose() * phase.conj()) * C64::new(0.5, 0.0),
        SpectralForm::Cosine => &s * C64::new((std::f64::consts::TAU * w).cos(), 0.0),
    };
    let d = sigma.dim();
    let shifted = (gen - DMatrix::<C64>::identity(d, d)) * C64::new(tau, 0.0);
    expm_taylor(&shifted)
}

/// `H_t([x], [y]) = (1/|det M|) Σ_w e^{2πi⟨w, x−y⟩} ⊗_j e^{−τ}exp(τB_j(w))`,
/// `τ = t/n`, summed in complex arithmetic.
///
/// Fails with [`Error::ImaginaryResidue`] if the imaginary part does not
/// cancel to `1e−10·(1 + ‖Re‖)`.
pub fn kernel_spectral(spec: &TorusSpec, x: &[i64], y: &[i64], t: f64, form: SpectralForm) -> Result<KernelBlock> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    check_point(spec, x)?;
    check_point(spec, y)?;
    let chars = enumerate_characters(&spec.m)?;
    let n = spec.n();
    let tau = t / n as f64;
    let diff: Vec<i64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let dim = spec.block_dim();
    let mut acc = DMatrix::<C64>::zeros(dim, dim);
    for (k, w) in chars.frequencies().iter().enumerate() {
        let factors: Vec<DMatrix<C64>> = (0..n).map(|j| axis_factor(&spec.sigmas[j], w[j], tau, form)).collect();
        acc += kron_all(factors.iter()) * chars.character(k, &diff);
    }
    acc /= C64::new(chars.len() as f64, 0.0);
    let real = acc.map(|c| c.re);
    let imag = max_abs(&acc.map(|c| c.im));
    let real_norm = real.norm();
    if imag >= 1e-10 * (1.0 + real_norm) {
        return Err(Error::ImaginaryResidue { imag, real: real_norm });
    }
    Ok(KernelBlock::connected(real))
}

/// Frobenius norm of [`kernel_lattice_sum`] minus [`kernel_spectral`].
pub fn trace_formula_residual(spec: &TorusSpec, x: &[i64], y: &[i64], t: f64) -> Result<f64> {
    let a = kernel_lattice_sum(spec, x, y, t, &LatticeSumControl::default())?;
    let b = kernel_spectral(spec, x, y, t, SpectralForm::Hermitian)?;
    Ok((a.block - b.block).norm())
}

/// Frobenius norm of
/// `Σ_{a ∈ Mℤⁿ} ∏_i e^{−τ}I_{a_i}(τ) ⊗_i σ_i^{a_i} − (1/|det M|) Σ_w ⊗_j e^{−τ}exp(τB_j(w))`,
/// with the left side built from [`bessel_i_scaled`] rather than the series.
pub fn theta_relation_residual(spec: &TorusSpec, t: f64) -> Result<f64> {
    let origin = vec![0; spec.n()];
    let lhs = fold_translates(spec, &origin, &origin, t, &LatticeSumControl::default(), |a, tau| {
        Ok(bessel_i_scaled(a, tau))
    })?;
    let rhs = kernel_spectral(spec, &origin, &origin, t, SpectralForm::Hermitian)?;
    Ok((lhs - rhs.block).norm())
}

/// `max ‖H^{Q}([x],[y]) − Σ_g H(x, gy)‖∞` over class pairs, with `x`, `y`
/// the class representatives.
pub fn quotient_kernel_sum_check(graph: &ConnectionGraph, action: &GroupAction, t: f64) -> Result<f64> {
    let q = quotient(graph, action)?;
    let hq = dense_kernel(&q.graph, t)?;
    let h = dense_kernel(graph, t)?;
    let mut worst: f64 = 0.0;
    for (cx, &x) in q.representatives.iter().enumerate() {
        for (cy, &y) in q.representatives.iter().enumerate() {
            let mut sum = DMatrix::zeros(graph.dim(), graph.dim());
            for g in action.elements() {
                sum += h.block(x, g[y]);
            }
            worst = worst.max(max_abs_diff(&hq.block(cx, cy), &sum));
        }
    }
    Ok(worst)
}

/// Eigenvalues of the torus Laplacian predicted from the characters:
/// `(1/n) Σ_j (1 − Re(λ_j e^{2πiw_j}))` over every `w` and every choice of
/// eigenvalues `λ_j` of `σ_j`, sorted ascending.
pub fn predicted_spectrum(spec: &TorusSpec) -> Result<Vec<f64>> {
    let chars = enumerate_characters(&spec.m)?;
    let n = spec.n();
    let axis_eigs: Vec<Vec<C64>> = spec
        .sigmas
        .iter()
        .map(|s| s.matrix().complex_eigenvalues().iter().copied().collect())
        .collect();
    let mut out = Vec::with_capacity(chars.len() * spec.block_dim());
    for w in chars.frequencies() {
        let per_axis: Vec<Vec<f64>> = (0..n)
            .map(|j| {
                let phase = C64::from_polar(1.0, std::f64::consts::TAU * w[j]);
                axis_eigs[j].iter().map(|l| 1.0 - (l * phase).re).collect()
            })
            .collect();
        let sides: Vec<i64> = per_axis.iter().map(|v| v.len() as i64).collect();
        for pick in box_points(&sides) {
            let s: f64 = pick.iter().enumerate().map(|(j, &k)| per_axis[j][k as usize]).sum();
            out.push(s / n as f64);
        }
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}
