use std::path::Path;

use ckern::{ConnectionGraph, OrthoMatrix};
use nalgebra::DMatrix;

use crate::error::{CliError, Result};
use crate::report::Inputs;

pub fn load_graph(inputs: &mut Inputs, path: &Path) -> Result<ConnectionGraph> {
    let text = inputs.read(path)?;
    Ok(ConnectionGraph::from_json(&text)?)
}

/// Row-major CSV matrix; blank lines and `#` comments are skipped.
pub fn parse_matrix_csv(text: &str) -> Result<DMatrix<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let row = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|_| CliError::Schema(format!("not a number: `{s}`"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let n = rows.len();
    if n == 0 {
        return Err(CliError::Schema("empty matrix".into()));
    }
    if rows.iter().any(|r| r.len() != n) {
        return Err(CliError::Schema(format!("matrix with {n} rows is not square")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// `rotation:θ`, `identity:d`, or a path to a CSV matrix file.
pub fn parse_sigma(inputs: &mut Inputs, spec: &str) -> Result<OrthoMatrix> {
    if let Some(theta) = spec.strip_prefix("rotation:") {
        let theta: f64 = theta
            .parse()
            .map_err(|_| CliError::Usage(format!("bad rotation angle `{theta}`")))?;
        return Ok(OrthoMatrix::rotation(theta));
    }
    if let Some(d) = spec.strip_prefix("identity:") {
        let d: usize = d
            .parse()
            .ok()
            .filter(|&d| d > 0)
            .ok_or_else(|| CliError::Usage(format!("bad identity dimension `{d}`")))?;
        return Ok(OrthoMatrix::identity(d));
    }
    let m = parse_matrix_csv(&inputs.read(Path::new(spec))?)?;
    Ok(OrthoMatrix::new(m)?)
}

/// `i:<sigma>` with a 1-based axis index.
pub fn parse_axis_sigma(inputs: &mut Inputs, spec: &str) -> Result<(usize, OrthoMatrix)> {
    let (axis, rest) = spec
        .split_once(':')
        .ok_or_else(|| CliError::Usage(format!("expected AXIS:SIGMA, got `{spec}`")))?;
    let axis: usize = axis
        .parse()
        .ok()
        .filter(|&a| a > 0)
        .ok_or_else(|| CliError::Usage(format!("bad axis index `{axis}` (axes count from 1)")))?;
    Ok((axis - 1, parse_sigma(inputs, rest)?))
}

/// One sigma per axis; axes without a `--sigma` get the 1×1 identity.
pub fn axis_sigmas(inputs: &mut Inputs, n: usize, specs: &[String]) -> Result<Vec<OrthoMatrix>> {
    let mut out: Vec<Option<OrthoMatrix>> = vec![None; n];
    for spec in specs {
        let (axis, sigma) = parse_axis_sigma(inputs, spec)?;
        if axis >= n {
            return Err(CliError::Usage(format!("axis {} out of range 1..={n}", axis + 1)));
        }
        if out[axis].replace(sigma).is_some() {
            return Err(CliError::Usage(format!("axis {} given twice", axis + 1)));
        }
    }
    Ok(out.into_iter().map(|s| s.unwrap_or_else(|| OrthoMatrix::identity(1))).collect())
}

pub fn parse_point(text: &str, n: usize) -> Result<Vec<i64>> {
    let p = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<i64>()
                .map_err(|_| CliError::Usage(format!("not an integer: `{s}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    if p.len() != n {
        return Err(CliError::Usage(format!("point `{text}` has {} coordinates, expected {n}", p.len())));
    }
    Ok(p)
}

/// `x1,x2:y1,y2`.
pub fn parse_point_pair(text: &str, n: usize) -> Result<(Vec<i64>, Vec<i64>)> {
    let (x, y) = text
        .split_once(':')
        .ok_or_else(|| CliError::Usage(format!("expected X:Y, got `{text}`")))?;
    Ok((parse_point(x, n)?, parse_point(y, n)?))
}

/// `all`, or `u:v,u:v,...` with vertex ids.
pub fn parse_vertex_pairs(graph: &ConnectionGraph, text: &str) -> Result<Vec<(usize, usize)>> {
    let n = graph.n_vertices();
    if text == "all" {
        return Ok((0..n).flat_map(|x| (0..n).map(move |y| (x, y))).collect());
    }
    let lookup = |id: &str| {
        graph
            .vertex(id.trim())
            .map_err(|_| CliError::Usage(format!("unknown vertex `{}`", id.trim())))
    };
    text.split(',')
        .map(|pair| {
            let (u, v) = pair
                .split_once(':')
                .ok_or_else(|| CliError::Usage(format!("expected U:V, got `{pair}`")))?;
            Ok((lookup(u)?, lookup(v)?))
        })
        .collect()
}
