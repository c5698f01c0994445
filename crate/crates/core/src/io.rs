//! CSV readers and writers for graphs, point sets, sources and node values.
//!
//! A graph saved as `g.csv` is an edge list `i,j,w` (self loops included,
//! each unordered pair once) with a sidecar `g.meta` of `key=value` lines
//! and, when coordinates are known, `g.points.csv`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{invalid, Error, Result};
use crate::geometry::{make_kernel, KernelKind, PointSet};
use crate::graph::Graph;
use crate::solver::SourceSpec;

/// Metadata stored next to an edge list.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GraphMeta {
    pub n: usize,
    pub d: Option<usize>,
    pub eps: Option<f64>,
    pub kernel: Option<String>,
    pub sigma_eta: Option<f64>,
    pub seed: Option<u64>,
}

pub fn meta_path(edges: &Path) -> PathBuf {
    edges.with_extension("meta")
}

pub fn points_path(edges: &Path) -> PathBuf {
    edges.with_extension("points.csv")
}

pub fn write_graph(path: &Path, g: &Graph, seed: Option<u64>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["i", "j", "w"])?;
    let mut rows: Vec<(usize, usize, f64)> = g.self_weights().iter().enumerate().filter(|(_, w)| **w != 0.0).map(|(i, w)| (i, i, *w)).collect();
    rows.extend(g.edges());
    rows.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    for (i, j, wt) in rows {
        w.write_record([i.to_string(), j.to_string(), format!("{wt:e}")])?;
    }
    w.flush()?;
    let scale = g.scale();
    let meta = GraphMeta {
        n: g.len(),
        d: g.points().map(|p| p.dim()),
        eps: scale.map(|s| s.eps),
        kernel: scale.and_then(|s| s.kernel).map(|k| k.kind().name().to_string()),
        sigma_eta: scale.map(|s| s.sigma_eta),
        seed,
    };
    write_meta(&meta_path(path), &meta)?;
    if let Some(p) = g.points() {
        write_points(&points_path(path), p)?;
    }
    Ok(())
}

fn write_meta(path: &Path, m: &GraphMeta) -> Result<()> {
    let mut s = format!("n={}\n", m.n);
    if let Some(d) = m.d {
        s += &format!("d={d}\n");
    }
    if let Some(e) = m.eps {
        s += &format!("eps={e:e}\n");
    }
    if let Some(k) = &m.kernel {
        s += &format!("kernel={k}\n");
    }
    if let Some(v) = m.sigma_eta {
        s += &format!("sigma_eta={v:e}\n");
    }
    if let Some(v) = m.seed {
        s += &format!("seed={v}\n");
    }
    std::fs::write(path, s)?;
    Ok(())
}

pub fn read_meta(path: &Path) -> Result<GraphMeta> {
    let text = std::fs::read_to_string(path)?;
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse(format!("line {}: expected key=value", lineno + 1)))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    fn num<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>> {
        map.get(key).map(|v| v.parse::<T>().map_err(|_| Error::Parse(format!("bad value for {key}: {v}")))).transpose()
    }
    Ok(GraphMeta {
        n: num(&map, "n")?.ok_or_else(|| Error::Parse("metadata lacks n".into()))?,
        d: num(&map, "d")?,
        eps: num(&map, "eps")?,
        kernel: map.get("kernel").cloned(),
        sigma_eta: num(&map, "sigma_eta")?,
        seed: num(&map, "seed")?,
    })
}

/// Reads an edge list with its sidecar files.
pub fn read_graph(path: &Path) -> Result<(Graph, GraphMeta)> {
    let meta = read_meta(&meta_path(path))?;
    let mut r = csv::Reader::from_path(path)?;
    check_header(r.headers()?, &["i", "j", "w"])?;
    let mut edges = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let i: usize = parse_field(&rec, 0)?;
        let j: usize = parse_field(&rec, 1)?;
        let w: f64 = parse_field(&rec, 2)?;
        edges.push((i, j, w));
    }
    let mut g = Graph::from_edges(meta.n, &edges)?;
    if let Some(eps) = meta.eps {
        let kernel = match (&meta.kernel, meta.d) {
            (Some(name), Some(d)) => Some(make_kernel(name.parse::<KernelKind>()?, d)?),
            _ => None,
        };
        g = match kernel {
            Some(k) => g.with_kernel(eps, k)?,
            None => match meta.sigma_eta {
                Some(s) => g.with_scale(eps, s)?,
                None => g,
            },
        };
    }
    let pp = points_path(path);
    if pp.exists() {
        g = g.with_points(read_points(&pp)?)?;
    }
    Ok((g, meta))
}

fn check_header(h: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    if h.len() != expected.len() || h.iter().zip(expected).any(|(a, b)| a.trim() != *b) {
        return Err(Error::Parse(format!("expected header {}", expected.join(","))));
    }
    Ok(())
}

fn parse_field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> Result<T> {
    let s = rec.get(i).ok_or_else(|| Error::Parse(format!("missing column {i}")))?;
    s.trim().parse().map_err(|_| Error::Parse(format!("cannot parse `{s}`")))
}

/// Points as `x0,...,x{d-1}`.
pub fn write_points(path: &Path, p: &PointSet) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record((0..p.dim()).map(|a| format!("x{a}")))?;
    for x in p.iter() {
        w.write_record(x.iter().map(|v| format!("{v:e}")))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_points(path: &Path) -> Result<PointSet> {
    let mut r = csv::Reader::from_path(path)?;
    let d = r.headers()?.len();
    if d == 0 {
        return Err(Error::Parse("points file has no columns".into()));
    }
    let mut coords = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        for a in 0..d {
            coords.push(parse_field(&rec, a)?);
        }
    }
    PointSet::new(d, coords)
}

/// Sources as `x0,...,x{d-1},a`.
pub fn read_sources(path: &Path) -> Result<SourceSpec> {
    let mut r = csv::Reader::from_path(path)?;
    let cols = r.headers()?.len();
    if cols < 2 {
        return Err(Error::Parse("sources need at least one coordinate and a coefficient".into()));
    }
    let (mut anchors, mut coeffs) = (Vec::new(), Vec::new());
    for rec in r.records() {
        let rec = rec?;
        let x: Vec<f64> = (0..cols - 1).map(|a| parse_field(&rec, a)).collect::<Result<_>>()?;
        anchors.push(x);
        coeffs.push(parse_field(&rec, cols - 1)?);
    }
    SourceSpec::new(anchors, coeffs)
}

pub fn write_sources(path: &Path, s: &SourceSpec) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = (0..s.dim()).map(|a| format!("x{a}")).collect();
    header.push("a".into());
    w.write_record(&header)?;
    for (x, a) in s.anchors().iter().zip(s.coefficients()) {
        let mut row: Vec<String> = x.iter().map(|v| format!("{v:e}")).collect();
        row.push(format!("{a:e}"));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Node values as `node,value`.
pub fn write_node_values(path: &Path, values: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["node", "value"])?;
    for (i, v) in values.iter().enumerate() {
        w.write_record([i.to_string(), format!("{v:e}")])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_node_values(path: &Path) -> Result<Vec<f64>> {
    let mut r = csv::Reader::from_path(path)?;
    check_header(r.headers()?, &["node", "value"])?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let i: usize = parse_field(&rec, 0)?;
        if i != out.len() {
            return Err(Error::Parse(format!("node {i} out of order")));
        }
        out.push(parse_field(&rec, 1)?);
    }
    Ok(out)
}

/// Radial table as `r,psi`.
pub fn write_radial(path: &Path, r: &[f64], values: &[f64]) -> Result<()> {
    if r.len() != values.len() {
        return Err(invalid("radius and value columns differ in length"));
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["r", "psi"])?;
    for (a, b) in r.iter().zip(values) {
        w.write_record([format!("{a:e}"), format!("{b:e}")])?;
    }
    w.flush()?;
    Ok(())
}

/// Grid solution as `i0,...,i{d-1},x0,...,x{d-1},u`.
pub fn write_grid(path: &Path, u: &crate::continuum::GridFunction) -> Result<()> {
    let shape = u.shape().to_vec();
    let d = shape.len();
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = (0..d).map(|a| format!("i{a}")).collect();
    header.extend((0..d).map(|a| format!("x{a}")));
    header.push("u".into());
    w.write_record(&header)?;
    for (idx, v) in u.values().iter().enumerate() {
        let mut rem = idx;
        let mut multi = vec![0usize; d];
        for a in (0..d).rev() {
            multi[a] = rem % shape[a];
            rem /= shape[a];
        }
        let mut row: Vec<String> = multi.iter().map(|i| i.to_string()).collect();
        row.extend(u.center(idx).iter().map(|x| format!("{x:e}")));
        row.push(format!("{v:e}"));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_graph, sample_points, Density, Domain};

    #[test]
    fn graph_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let dom = Domain::unit_box(2);
        let pts = sample_points(&dom, &Density::constant(&dom).unwrap(), 200, 4).unwrap();
        let g = build_graph(&pts, 0.2, &make_kernel(KernelKind::Cone, 2).unwrap()).unwrap();
        let path = dir.path().join("g.csv");
        write_graph(&path, &g, Some(4)).unwrap();
        let (h, meta) = read_graph(&path).unwrap();
        assert_eq!(meta.seed, Some(4));
        assert_eq!(meta.kernel.as_deref(), Some("cone"));
        assert_eq!(h.len(), g.len());
        assert_eq!(h.edge_count(), g.edge_count());
        for (a, b) in g.degrees().iter().zip(h.degrees()) {
            assert!((a - b).abs() <= 1e-14 * a);
        }
        assert_eq!(h.points().unwrap(), g.points().unwrap());
        assert_eq!(h.eps(), g.eps());
    }

    #[test]
    fn sources_and_values_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let s = SourceSpec::new(vec![vec![0.25, 0.5], vec![0.75, 0.5]], vec![1.0, -1.0]).unwrap();
        let p = dir.path().join("s.csv");
        write_sources(&p, &s).unwrap();
        let t = read_sources(&p).unwrap();
        assert_eq!(t.anchors(), s.anchors());
        let q = dir.path().join("u.csv");
        write_node_values(&q, &[1.5, -2.0, 0.1]).unwrap();
        assert_eq!(read_node_values(&q).unwrap(), vec![1.5, -2.0, 0.1]);
    }

    #[test]
    fn malformed_meta_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.meta");
        std::fs::write(&p, "n=abc\n").unwrap();
        assert!(read_meta(&p).is_err());
        std::fs::write(&p, "eps=0.1\n").unwrap();
        assert!(read_meta(&p).is_err());
    }
}
