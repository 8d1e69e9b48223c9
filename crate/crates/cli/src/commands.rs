use std::path::Path;

use ckern::bessel::{bessel_i_scaled, z_series_coeff, SeriesControl};
use ckern::blockmat::{max_abs_diff, sym_eig};
use ckern::graph::{is_consistent, validate, CONSISTENCY_TOL};
use ckern::intmat::parse_square;
use ckern::kernel::{dense_kernel, ConsistentKernel, KernelBlock};
use ckern::laplacian::{laplacian, normalized_laplacian};
use ckern::lattice::{z_kernel_block, LatticeConnection1D};
use ckern::torus::{
    enumerate_cosets, kernel_lattice_sum, kernel_spectral, theta_relation_residual, LatticeSumControl, SpectralForm,
    TorusSpec,
};
use ckern::vdm::{vdm_distance_matrix, vdm_embed};
use ckern::{ConnectionGraph, OrthoMatrix};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::error::{CliError, Result};
use crate::parse::{axis_sigmas, load_graph, parse_point_pair, parse_sigma, parse_vertex_pairs};
use crate::report::{matrix_json, num, Check, Inputs, Outcome, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum KernelRoute {
    Dense,
    Consistent,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum TorusRoute {
    Lattice,
    Spectral,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Form {
    Hermitian,
    Cosine,
}

impl From<Form> for SpectralForm {
    fn from(f: Form) -> Self {
        match f {
            Form::Hermitian => SpectralForm::Hermitian,
            Form::Cosine => SpectralForm::Cosine,
        }
    }
}

fn valid_graph(inputs: &mut Inputs, path: &Path) -> Result<ConnectionGraph> {
    let g = load_graph(inputs, path)?;
    g.ensure_valid()?;
    Ok(g)
}

fn push_block(table: &mut Table, prefix: &[String], m: &DMatrix<f64>) {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let mut row = prefix.to_vec();
            row.extend([i.to_string(), j.to_string(), num(m[(i, j)])]);
            table.push(row);
        }
    }
}

fn point_label(p: &[i64]) -> String {
    p.iter().map(i64::to_string).collect::<Vec<_>>().join(",")
}

pub fn validate_cmd(inputs: &mut Inputs, file: &Path) -> Result<Outcome> {
    let g = load_graph(inputs, file)?;
    let report = validate(&g);
    let mut table = Table::with_header(&["kind", "message"]);
    let violations: Vec<Value> = report
        .violations
        .iter()
        .map(|v| serde_json::to_value(v).map_err(ckern::Error::from))
        .collect::<std::result::Result<_, _>>()?;
    for (v, raw) in report.violations.iter().zip(&violations) {
        table.push(vec![raw["kind"].as_str().unwrap_or_default().to_string(), v.to_string()]);
    }
    Ok(Outcome {
        checks: vec![Check::new("violations", report.violations.len() as f64, 0.0)],
        data: json!({
            "dim": g.dim(),
            "vertices": g.n_vertices(),
            "edges": g.n_edges(),
            "valid": report.is_valid(),
            "violations": violations,
        }),
        table,
    })
}

pub fn consistent_cmd(inputs: &mut Inputs, file: &Path) -> Result<Outcome> {
    let g = valid_graph(inputs, file)?;
    let c = is_consistent(&g);
    // how far the BFS potentials are from trivializing every edge
    let defect = g
        .edges()
        .iter()
        .map(|e| max_abs_diff(&(&c.potentials[e.u] * &e.sigma_uv), &c.potentials[e.v]))
        .fold(0.0, f64::max);
    let components = g.components().iter().max().map_or(0, |&m| m + 1);
    let witness: Option<Vec<&str>> = c.witness.as_ref().map(|w| w.iter().map(|&v| g.id(v)).collect());
    let mut table = Table::with_header(&["consistent", "components", "witness"]);
    table.push(vec![
        c.consistent.to_string(),
        components.to_string(),
        witness.as_ref().map(|w| w.join(" ")).unwrap_or_default(),
    ]);
    Ok(Outcome {
        checks: vec![Check::new("potential_defect", defect, CONSISTENCY_TOL)],
        data: json!({
            "consistent": c.consistent,
            "components": components,
            "witness": witness,
        }),
        table,
    })
}

pub fn laplacian_cmd(inputs: &mut Inputs, file: &Path, normalized: bool) -> Result<Outcome> {
    let g = valid_graph(inputs, file)?;
    let lap = if normalized { normalized_laplacian(&g)? } else { laplacian(&g) };
    let m = lap.matrix();
    let scale = m.amax().max(1.0);
    let asym = max_abs_diff(m, &m.transpose());
    let values = sym_eig(m)?.values;
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut checks = vec![Check::new("symmetry", asym, 1e-12 * scale)];
    if normalized {
        checks.push(Check::new("spectrum_in_0_2", (-lo).max(hi - 2.0).max(0.0), 1e-10));
    } else {
        checks.push(Check::new("positive_semidefinite", (-lo).max(0.0), 1e-10 * scale));
    }
    let table = Table {
        header: None,
        rows: (0..m.nrows()).map(|i| m.row(i).iter().map(|&v| num(v)).collect()).collect(),
    };
    Ok(Outcome {
        checks,
        data: json!({
            "normalized": normalized,
            "dim": g.dim(),
            "vertices": g.ids(),
            "matrix": matrix_json(m),
        }),
        table,
    })
}

pub fn kernel_cmd(inputs: &mut Inputs, file: &Path, t: f64, pairs: &str, route: KernelRoute, tol: f64) -> Result<Outcome> {
    let g = valid_graph(inputs, file)?;
    let pairs = parse_vertex_pairs(&g, pairs)?;
    let dense = match route {
        KernelRoute::Consistent => None,
        _ => Some(dense_kernel(&g, t)?),
    };
    let shortcut = match route {
        KernelRoute::Dense => None,
        _ => Some(ConsistentKernel::new(&g, t)?),
    };
    let block = |x: usize, y: usize| -> Result<KernelBlock> {
        match (&dense, &shortcut) {
            (Some(h), _) => Ok(KernelBlock::connected(h.block(x, y))),
            (None, Some(c)) => Ok(c.block(x, y)?),
            (None, None) => unreachable!("at least one route is selected"),
        }
    };
    let mut table = Table::with_header(&["x", "y", "i", "j", "value"]);
    let mut blocks = Vec::new();
    let mut asym: f64 = 0.0;
    let mut route_gap: f64 = 0.0;
    for &(x, y) in &pairs {
        let b = block(x, y)?;
        asym = asym.max(max_abs_diff(&b.block, &block(y, x)?.block.transpose()));
        if let (Some(_), Some(c)) = (&dense, &shortcut) {
            route_gap = route_gap.max(max_abs_diff(&b.block, &c.block(x, y)?.block));
        }
        push_block(&mut table, &[g.id(x).to_string(), g.id(y).to_string()], &b.block);
        blocks.push(json!({"x": g.id(x), "y": g.id(y), "block": matrix_json(&b.block)}));
    }
    let mut checks = vec![Check::new("symmetry", asym, 1e-12)];
    if route == KernelRoute::Both {
        checks.push(Check::new("consistent_shortcut", route_gap, tol));
    }
    Ok(Outcome {
        checks,
        data: json!({"t": t, "dim": g.dim(), "blocks": blocks}),
        table,
    })
}

pub struct ZKernelArgs<'a> {
    pub dims: Option<usize>,
    pub sigma: Option<&'a str>,
    pub x: i64,
    pub a: i64,
    pub t: f64,
}

pub fn zkernel_cmd(inputs: &mut Inputs, args: &ZKernelArgs, tol: f64) -> Result<Outcome> {
    let sigma = match (args.sigma, args.dims) {
        (Some(s), _) => parse_sigma(inputs, s)?,
        (None, Some(d)) if d > 0 => OrthoMatrix::identity(d),
        (None, _) => return Err(CliError::Usage("give --sigma or a positive --dims".into())),
    };
    if let Some(d) = args.dims {
        if d != sigma.dim() {
            return Err(ckern::Error::DimensionMismatch {
                expected: d,
                found: sigma.dim(),
            }
            .into());
        }
    }
    let ctl = SeriesControl::default();
    let conn = LatticeConnection1D::constant(sigma);
    let b = z_kernel_block(&conn, args.x, args.a, args.t, &ctl)?;
    let coeff = z_series_coeff(args.a, args.t, &ctl)?;
    let bessel = bessel_i_scaled(args.a, args.t);
    let mut table = Table::with_header(&["i", "j", "value"]);
    push_block(&mut table, &[], &b.block);
    Ok(Outcome {
        checks: vec![Check::new("bessel_coefficient", (coeff - bessel).abs(), tol)],
        data: json!({
            "x": args.x,
            "a": args.a,
            "t": args.t,
            "coefficient": coeff,
            "block": matrix_json(&b.block),
        }),
        table,
    })
}

pub fn torus_spec(inputs: &mut Inputs, m: &str, sigmas: &[String]) -> Result<TorusSpec> {
    let m = parse_square(m)?;
    let sigmas = axis_sigmas(inputs, m.nrows(), sigmas)?;
    Ok(TorusSpec::new(m, sigmas)?)
}

pub struct TorusArgs<'a> {
    pub m: &'a str,
    pub sigma: &'a [String],
    pub t: f64,
    pub route: TorusRoute,
    pub form: Form,
    pub pairs: &'a [String],
}

pub fn torus_cmd(inputs: &mut Inputs, args: &TorusArgs, tol: f64) -> Result<Outcome> {
    let spec = torus_spec(inputs, args.m, args.sigma)?;
    let n = spec.n();
    let pairs = if args.pairs.is_empty() {
        vec![(vec![0; n], vec![0; n])]
    } else {
        args.pairs.iter().map(|p| parse_point_pair(p, n)).collect::<Result<_>>()?
    };
    let ctl = LatticeSumControl::default();
    let mut table = Table::with_header(&["x", "y", "route", "i", "j", "value"]);
    let mut checks = Vec::new();
    let mut out = Vec::new();
    for (x, y) in &pairs {
        let (xl, yl) = (point_label(x), point_label(y));
        let mut entry = json!({"x": x, "y": y});
        let lattice = match args.route {
            TorusRoute::Spectral => None,
            _ => Some(kernel_lattice_sum(&spec, x, y, args.t, &ctl)?.block),
        };
        let spectral = match args.route {
            TorusRoute::Lattice => None,
            _ => Some(kernel_spectral(&spec, x, y, args.t, args.form.into())?.block),
        };
        for (name, b) in [("lattice", &lattice), ("spectral", &spectral)] {
            if let Some(b) = b {
                push_block(&mut table, &[xl.clone(), yl.clone(), name.to_string()], b);
                entry[name] = matrix_json(b);
            }
        }
        if let (Some(a), Some(b)) = (&lattice, &spectral) {
            checks.push(Check::new(format!("trace_formula {xl}:{yl}"), (a - b).norm(), tol));
        }
        out.push(entry);
    }
    Ok(Outcome {
        checks,
        data: json!({
            "t": args.t,
            "order": spec.order(),
            "block_dim": spec.block_dim(),
            "invariant_factors": spec.invariant_factors().iter().map(|&f| f as i64).collect::<Vec<_>>(),
            "pairs": out,
        }),
        table,
    })
}

pub fn trace_check_cmd(inputs: &mut Inputs, m: &str, sigma: &[String], grid: &[f64], tol: f64) -> Result<Outcome> {
    let spec = torus_spec(inputs, m, sigma)?;
    let cosets = enumerate_cosets(spec.m())?;
    let origin = vec![0; spec.n()];
    let ctl = LatticeSumControl::default();
    let mut table = Table::with_header(&["t", "trace_residual", "theta_residual"]);
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    for &t in grid {
        let mut trace: f64 = 0.0;
        for x in cosets.representatives() {
            let a = kernel_lattice_sum(&spec, x, &origin, t, &ctl)?.block;
            let b = kernel_spectral(&spec, x, &origin, t, SpectralForm::Hermitian)?.block;
            trace = trace.max((a - b).norm());
        }
        let theta = theta_relation_residual(&spec, t)?;
        checks.push(Check::new(format!("trace_formula t={t}"), trace, tol));
        checks.push(Check::new(format!("theta_relation t={t}"), theta, tol));
        table.push(vec![num(t), num(trace), num(theta)]);
        rows.push(json!({"t": t, "trace_residual": trace, "theta_residual": theta}));
    }
    Ok(Outcome {
        checks,
        data: json!({"order": spec.order(), "grid": rows}),
        table,
    })
}

pub fn vdm_cmd(inputs: &mut Inputs, file: &Path, t: f64, k: Option<usize>, pairs: &str, tol: f64) -> Result<Outcome> {
    let g = valid_graph(inputs, file)?;
    let n = g.n_vertices();
    let full = n * g.dim();
    let k = k.unwrap_or(full);
    let pairs = parse_vertex_pairs(&g, pairs)?;
    let dist = vdm_distance_matrix(&g, t, k)?;
    let mut triangle: f64 = 0.0;
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                triangle = triangle.max(dist[(x, z)] - dist[(x, y)] - dist[(y, z)]);
            }
        }
    }
    let mut checks = vec![Check::new("triangle_inequality", triangle, 1e-10)];
    if k == full {
        let e = vdm_embed(&g, t, k)?;
        let gap = pairs
            .iter()
            .map(|&(x, y)| (e.distance(x, y) - dist[(x, y)]).abs())
            .fold(0.0, f64::max);
        checks.push(Check::new("hs_identity", gap, tol));
    }
    let mut table = Table::with_header(&["x", "y", "distance"]);
    let mut out = Vec::new();
    for &(x, y) in &pairs {
        table.push(vec![g.id(x).to_string(), g.id(y).to_string(), num(dist[(x, y)])]);
        out.push(json!({"x": g.id(x), "y": g.id(y), "distance": dist[(x, y)]}));
    }
    Ok(Outcome {
        checks,
        data: json!({"t": t, "k": k, "distances": out}),
        table,
    })
}

fn random_orthogonal(d: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
    let qr = a.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

pub struct RandomGraphArgs {
    pub vertices: usize,
    pub dim: usize,
    pub extra_edges: usize,
    pub consistent: bool,
}

/// Random spanning tree plus extra edges, weights in `[0.5, 2)`.
pub fn random_graph_cmd(args: &RandomGraphArgs, seed: u64) -> Result<Outcome> {
    let (n, d) = (args.vertices, args.dim);
    if n < 2 || d == 0 {
        return Err(CliError::Usage("need at least 2 vertices and a positive dimension".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frames: Vec<DMatrix<f64>> = (0..n).map(|_| random_orthogonal(d, &mut rng)).collect();
    let mut g = ConnectionGraph::with_vertices(d, n);
    let edge = |g: &mut ConnectionGraph, u: usize, v: usize, rng: &mut ChaCha8Rng| -> Result<()> {
        let w = rng.gen_range(0.5..2.0);
        let sigma = if args.consistent {
            &frames[u].transpose() * &frames[v]
        } else {
            random_orthogonal(d, rng)
        };
        Ok(g.add_edge(u, v, w, sigma)?)
    };
    for v in 1..n {
        let u = rng.gen_range(0..v);
        edge(&mut g, u, v, &mut rng)?;
    }
    let max_extra = n * (n - 1) / 2 - (n - 1);
    for _ in 0..args.extra_edges.min(max_extra) {
        loop {
            let u = rng.gen_range(0..n);
            let v = rng.gen_range(0..n);
            if u != v && g.edge_between(u, v).is_none() {
                edge(&mut g, u, v, &mut rng)?;
                break;
            }
        }
    }
    let mut table = Table::with_header(&["u", "v", "w", "sigma_uv"]);
    for e in g.edges() {
        let mut row = vec![g.id(e.u).to_string(), g.id(e.v).to_string(), num(e.weight)];
        row.extend(e.sigma_uv.transpose().iter().map(|&v| num(v)));
        table.push(row);
    }
    Ok(Outcome {
        checks: Vec::new(),
        data: g.to_json(),
        table,
    })
}
