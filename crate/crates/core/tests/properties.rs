mod common;

use ckern::blockmat::{kron_product, kron_sum, matrix_exp, max_abs_diff, sym_eig};
use ckern::intmat::{column_hnf, det, in_lattice, reduce_mod_hnf};
use ckern::kernel::dense_kernel;
use ckern::laplacian::{laplacian, normalized_laplacian, rayleigh, VertexFunction};
use ckern::torus::{build_torus_graph, enumerate_characters, predicted_spectrum, TorusSpec};
use ckern::vdm::{vdm_distance_matrix, vdm_embed};
use ckern::{ConnectionGraph, OrthoMatrix};
use common::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

fn graph_from(seed: u64, n: usize, d: usize) -> ConnectionGraph {
    random_graph(n, d, &mut rng(seed))
}

fn random_vector(len: usize, seed: u64) -> DVector<f64> {
    let mut r = rng(seed);
    DVector::from_fn(len, |_, _| r.gen_range(-1.0..1.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn laplacian_is_psd(seed in any::<u64>(), n in 2usize..10, d in 1usize..4) {
        let g = graph_from(seed, n, d);
        let spec = sym_eig(laplacian(&g).matrix()).unwrap();
        prop_assert!(spec.values.iter().all(|&l| l > -1e-10));
        let spec = sym_eig(normalized_laplacian(&g).unwrap().matrix()).unwrap();
        prop_assert!(spec.values.iter().all(|&l| (-1e-10..=2.0 + 1e-10).contains(&l)));
    }

    #[test]
    fn dirichlet_form(seed in any::<u64>(), n in 2usize..10, d in 1usize..4) {
        let g = graph_from(seed, n, d);
        let f = random_vector(n * d, seed ^ 0xf00d);
        let lhs = f.dot(&(laplacian(&g).matrix() * &f));
        let mut rhs = 0.0;
        for e in g.edges() {
            let fu = f.rows(e.u * d, d);
            let fv = f.rows(e.v * d, d);
            rhs += e.weight * (fu - &e.sigma_uv * fv).norm_squared();
        }
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
        let q = rayleigh(&g, &VertexFunction::new(&g, f).unwrap()).unwrap();
        prop_assert!((-1e-12..=2.0 + 1e-12).contains(&q));
    }

    #[test]
    fn balanced_spectrum_repeats_scalar_spectrum(seed in any::<u64>(), n in 2usize..10, d in 1usize..4) {
        let g = balanced_graph(n, d, &mut rng(seed));
        let conn = sym_eig(normalized_laplacian(&g).unwrap().matrix()).unwrap().values;
        let scalar = sym_eig(normalized_laplacian(&g.underlying()).unwrap().matrix()).unwrap().values;
        let mut want: Vec<f64> = scalar.iter().flat_map(|&l| std::iter::repeat_n(l, d)).collect();
        want.sort_by(f64::total_cmp);
        for (a, b) in conn.iter().zip(&want) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn kernel_semigroup_and_symmetry(seed in any::<u64>(), n in 2usize..9, d in 1usize..3, t in 0.05f64..3.0, s in 0.05f64..3.0) {
        let g = graph_from(seed, n, d);
        let ht = dense_kernel(&g, t).unwrap();
        let hs = dense_kernel(&g, s).unwrap();
        let hts = dense_kernel(&g, t + s).unwrap();
        let prod = ht.matrix() * hs.matrix();
        prop_assert!(max_abs_diff(&prod, hts.matrix()) <= 1e-9 * hts.matrix().amax().max(1.0));
        for x in 0..n {
            for y in 0..n {
                prop_assert!(max_abs_diff(&ht.block(x, y), &ht.block(y, x).transpose()) <= 1e-12);
            }
        }
    }

    #[test]
    fn regular_scalar_kernel_is_stochastic(len in 3usize..12, t in 0.0f64..4.0) {
        let g = ConnectionGraph::cycle(len, &OrthoMatrix::identity(1)).unwrap();
        let h = dense_kernel(&g, t).unwrap();
        for r in 0..len {
            prop_assert!((h.matrix().row(r).sum() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn exp_of_kronecker_sum(seed in any::<u64>(), m in 1usize..4, k in 1usize..4) {
        let mut r = rng(seed);
        let sym = |n: usize, r: &mut rand_chacha::ChaCha8Rng| {
            let a = DMatrix::from_fn(n, n, |_, _| r.gen_range(-1.0..1.0));
            (&a + a.transpose()) * 0.5
        };
        let a = sym(m, &mut r);
        let b = sym(k, &mut r);
        let lhs = matrix_exp(&kron_sum(&a, &b).unwrap());
        let rhs = kron_product(&matrix_exp(&a), &matrix_exp(&b));
        prop_assert!(max_abs_diff(&lhs, &rhs) < 1e-12 * rhs.amax().max(1.0));
    }

    #[test]
    fn characters_detect_the_lattice(a in 1i64..6, b in -4i64..5, c in -4i64..5, e in 1i64..6, z0 in -6i64..7, z1 in -6i64..7) {
        let m = DMatrix::from_row_slice(2, 2, &[a, b, c, e]);
        let d = det(&m).unwrap();
        prop_assume!(d.abs() > 1);
        let chars = enumerate_characters(&m).unwrap();
        prop_assert_eq!(chars.len() as i128, d.abs());
        let z = [z0, z1];
        let (mut re, mut im) = (0.0, 0.0);
        for k in 0..chars.len() {
            let ch = chars.character(k, &z);
            re += ch.re;
            im += ch.im;
        }
        let want = if in_lattice(&m, &z).unwrap() { 1.0 } else { 0.0 };
        prop_assert!((re / chars.len() as f64 - want).abs() < 1e-10);
        prop_assert!((im / chars.len() as f64).abs() < 1e-10);
    }

    #[test]
    fn hnf_reduction_is_a_class_function(a in 1i64..6, b in -4i64..5, c in -4i64..5, e in 1i64..6, x0 in -9i64..9, x1 in -9i64..9, k0 in -3i64..4, k1 in -3i64..4) {
        let m = DMatrix::from_row_slice(2, 2, &[a, b, c, e]);
        prop_assume!(det(&m).unwrap() != 0);
        let h = column_hnf(&m).unwrap();
        let shift = &m * nalgebra::Vector2::new(k0, k1);
        let x = [x0, x1];
        let y = [x0 + shift[0], x1 + shift[1]];
        prop_assert_eq!(reduce_mod_hnf(&h, &x), reduce_mod_hnf(&h, &y));
    }

    #[test]
    fn torus_kernel_is_translation_invariant(m0 in 3i64..6, m1 in 3i64..6, th0 in -3.0f64..3.0, th1 in -3.0f64..3.0, t in 0.1f64..3.0, c0 in 0i64..6, c1 in 0i64..6) {
        let spec = TorusSpec::new(
            DMatrix::from_row_slice(2, 2, &[m0, 0, 0, m1]),
            vec![OrthoMatrix::rotation(th0), OrthoMatrix::rotation(th1)],
        ).unwrap();
        let tg = build_torus_graph(&spec).unwrap();
        let h = dense_kernel(&tg.graph, t).unwrap();
        let reps = tg.cosets.representatives();
        for (i, x) in reps.iter().enumerate() {
            for (j, y) in reps.iter().enumerate() {
                let xi = tg.cosets.index_of(&[x[0] + c0, x[1] + c1]);
                let yj = tg.cosets.index_of(&[y[0] + c0, y[1] + c1]);
                prop_assert!(max_abs_diff(&h.block(i, j), &h.block(xi, yj)) < 1e-10);
            }
        }
    }

    #[test]
    fn torus_spectrum_matches_characters(m0 in 3i64..6, off in 0i64..3, m1 in 3i64..6, seed in any::<u64>()) {
        let mut r = rng(seed);
        let spec = TorusSpec::new(
            DMatrix::from_row_slice(2, 2, &[m0, off, 0, m1]),
            vec![random_orthogonal(2, &mut r), OrthoMatrix::rotation(r.gen_range(-3.0..3.0))],
        ).unwrap();
        // skew M can make ±e₁ collide; such specs are rejected rather than built
        let Ok(tg) = build_torus_graph(&spec) else { return Ok(()); };
        let got = sym_eig(normalized_laplacian(&tg.graph).unwrap().matrix()).unwrap().values;
        let want = predicted_spectrum(&spec).unwrap();
        prop_assert_eq!(got.len(), want.len());
        for (a, b) in got.iter().zip(&want) {
            prop_assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn vdm_triangle_and_monotone_rank(seed in any::<u64>(), n in 2usize..8, d in 1usize..3, t in 0.1f64..2.0) {
        let g = graph_from(seed, n, d);
        let full = n * d;
        let dist = vdm_distance_matrix(&g, t, full).unwrap();
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    prop_assert!(dist[(x, z)] <= dist[(x, y)] + dist[(y, z)] + 1e-10);
                }
            }
        }
        let mut prev = vec![0.0; n];
        for k in 1..=full {
            let e = vdm_embed(&g, t, k).unwrap();
            for x in 0..n {
                let v = e.inner(x, x);
                prop_assert!(v >= prev[x] - 1e-12);
                prev[x] = v;
            }
        }
    }
}
