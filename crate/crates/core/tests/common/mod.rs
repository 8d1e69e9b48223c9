#![allow(dead_code)]

use ckern::{ConnectionGraph, OrthoMatrix};
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Q factor of a uniform random matrix, with column signs fixed by R's diagonal.
pub fn random_orthogonal(d: usize, rng: &mut impl Rng) -> OrthoMatrix {
    let a = DMatrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
    let qr = a.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    OrthoMatrix::new(q).expect("QR factor is orthogonal")
}

/// Random spanning tree plus extra edges, weights in (0, 2], random σ.
pub fn random_graph(n: usize, d: usize, rng: &mut impl Rng) -> ConnectionGraph {
    let mut g = ConnectionGraph::with_vertices(d, n);
    for v in 1..n {
        let u = rng.gen_range(0..v);
        g.add_edge(u, v, weight(rng), random_orthogonal(d, rng).into_matrix()).unwrap();
    }
    let extra = rng.gen_range(0..=n);
    for _ in 0..extra {
        let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if u != v && g.edge_between(u, v).is_none() {
            g.add_edge(u, v, weight(rng), random_orthogonal(d, rng).into_matrix()).unwrap();
        }
    }
    g
}

fn weight(rng: &mut impl Rng) -> f64 {
    // (0, 2]
    2.0 - rng.gen_range(0.0..2.0)
}

/// Balanced connection from vertex frames: σ_uv = O_u O_vᵀ.
pub fn balanced_graph(n: usize, d: usize, rng: &mut impl Rng) -> ConnectionGraph {
    let frames: Vec<DMatrix<f64>> = (0..n).map(|_| random_orthogonal(d, rng).into_matrix()).collect();
    let base = random_graph(n, d, rng);
    let mut g = ConnectionGraph::with_vertices(d, n);
    for e in base.edges() {
        let sigma = &frames[e.u] * frames[e.v].transpose();
        g.add_edge(e.u, e.v, e.weight, sigma).unwrap();
    }
    g
}

/// Unit-weight regular graph: a cycle, or a complete graph on four vertices,
/// with a random connection on every edge.
pub fn random_regular(d: usize, rng: &mut impl Rng) -> ConnectionGraph {
    if rng.gen_bool(0.3) {
        let mut g = ConnectionGraph::with_vertices(d, 4);
        for u in 0..4 {
            for v in u + 1..4 {
                g.add_edge(u, v, 1.0, random_orthogonal(d, rng).into_matrix()).unwrap();
            }
        }
        g
    } else {
        let n = rng.gen_range(3..=5);
        let mut g = ConnectionGraph::with_vertices(d, n);
        for i in 0..n {
            g.add_edge(i, (i + 1) % n, 1.0, random_orthogonal(d, rng).into_matrix()).unwrap();
        }
        g
    }
}

/// Trapezoid rule for e^{−t}I_x(t) = (1/π)∫₀^π e^{t(cos θ−1)}cos(xθ)dθ.
/// The integrand is smooth and periodic, so the rule converges geometrically.
pub fn bessel_oracle(x: i64, t: f64) -> f64 {
    let n = 2000;
    let h = std::f64::consts::PI / n as f64;
    let f = |th: f64| (t * (th.cos() - 1.0)).exp() * (x as f64 * th).cos();
    let mut s = 0.5 * (f(0.0) + f(std::f64::consts::PI));
    for i in 1..n {
        s += f(i as f64 * h);
    }
    s * h / std::f64::consts::PI
}
