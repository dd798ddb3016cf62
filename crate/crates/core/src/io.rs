//! File formats and run configuration.
//!
//! All node indices in files are 0-based. Numbers are written with 17
//! significant digits so that a save/load round trip is exact.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{BrainGraph, ShiftVariant, SystemId};
use crate::pipeline::{Norm, SubjectRecord, ThresholdPooling};
use crate::slepian::{DEFAULT_BANDWIDTH, DEFAULT_EPSILON, DEFAULT_GATE_SIZE};
use crate::temporal::GraphSignalMatrix;

/// Environment variable naming the default config file.
pub const CONFIG_ENV: &str = "GSPKIT_CONFIG";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    /// `i<TAB>j<TAB>weight` per line with an optional `# n=<N>` header.
    EdgeList,
    /// N rows of N comma-separated weights.
    DenseCsv,
}

impl GraphFormat {
    /// `.csv` files are dense; anything else is an edge list.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => GraphFormat::DenseCsv,
            _ => GraphFormat::EdgeList,
        }
    }
}

impl std::str::FromStr for GraphFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "edge-list" | "edges" | "tsv" => Ok(GraphFormat::EdgeList),
            "dense-csv" | "dense" | "csv" => Ok(GraphFormat::DenseCsv),
            other => Err(Error::InvalidParameter(format!("unknown graph format `{other}`"))),
        }
    }
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    tok.trim()
        .parse::<f64>()
        .map_err(|e| Error::ParseError { line, msg: format!("`{}`: {e}", tok.trim()) })
}

fn parse_usize(tok: &str, line: usize) -> Result<usize> {
    tok.trim()
        .parse::<usize>()
        .map_err(|e| Error::ParseError { line, msg: format!("`{}`: {e}", tok.trim()) })
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let f = fs::File::open(path)?;
    Ok(BufReader::new(f).lines().collect::<std::io::Result<Vec<_>>>()?)
}

/// Value of a `# key=value` comment line, if the line is one.
fn header_value<'a>(line: &'a str, key: &str) -> Option<&'a str> {
    let rest = line.trim().strip_prefix('#')?.trim();
    let (k, v) = rest.split_once('=')?;
    (k.trim().eq_ignore_ascii_case(key)).then(|| v.trim())
}

pub fn parse_edge_list(text: &str) -> Result<BrainGraph> {
    let mut n_header = None;
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed.starts_with('#') {
            if let Some(v) = header_value(trimmed, "n") {
                n_header = Some(parse_usize(v, line)?);
            }
            continue;
        }
        let toks: Vec<&str> = trimmed.split(|c: char| c == '\t' || c.is_whitespace()).filter(|t| !t.is_empty()).collect();
        if toks.len() != 3 {
            return Err(Error::ParseError { line, msg: format!("expected `i j weight`, got {} fields", toks.len()) });
        }
        edges.push((parse_usize(toks[0], line)?, parse_usize(toks[1], line)?, parse_f64(toks[2], line)?));
    }
    let n = match n_header {
        Some(n) => n,
        None => edges
            .iter()
            .map(|&(i, j, _)| i.max(j) + 1)
            .max()
            .ok_or_else(|| Error::ParseError { line: 1, msg: "empty edge list without `# n=` header".into() })?,
    };
    if edges.is_empty() {
        log::warn!("edge list is empty; the {n}-node graph has no edges");
    }
    BrainGraph::from_edges(&edges, n, None, None)
}

/// Rows of comma-separated reals; `#` lines and blank lines are skipped.
/// Returns the row-major values, the column count and the 1-based line of each row.
fn parse_csv_rows(lines: &[String], first_line: usize) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
    let body: String = lines.iter().map(|l| format!("{l}\n")).collect();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let mut rows = Vec::new();
    let mut line_no = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::ParseError {
            line: e.position().map_or(0, |p| p.line() as usize) + first_line - 1,
            msg: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize) + first_line - 1;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        rows.push(rec.iter().map(|f| parse_f64(f, line)).collect::<Result<Vec<_>>>()?);
        line_no.push(line);
    }
    Ok((rows, line_no))
}

fn rows_to_matrix(rows: Vec<Vec<f64>>) -> Result<DMatrix<f64>> {
    let expected = rows.first().map_or(0, Vec::len);
    for (row, r) in rows.iter().enumerate() {
        if r.len() != expected {
            return Err(Error::RaggedRows { row, got: r.len(), expected });
        }
    }
    let n = rows.len();
    Ok(DMatrix::from_fn(n, expected, |i, j| rows[i][j]))
}

pub fn parse_dense_csv(text: &str) -> Result<BrainGraph> {
    let lines: Vec<String> = text.lines().map(str::to_owned).collect();
    let (rows, _) = parse_csv_rows(&lines, 1)?;
    BrainGraph::from_dense(rows_to_matrix(rows)?, None, None)
}

pub fn load_graph(path: &Path, format: GraphFormat) -> Result<BrainGraph> {
    let text = fs::read_to_string(path)?;
    match format {
        GraphFormat::EdgeList => parse_edge_list(&text),
        GraphFormat::DenseCsv => parse_dense_csv(&text),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut f = fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

/// Shortest-exact formatting is not stable across tools; fix 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn format_edge_list(g: &BrainGraph) -> String {
    let mut s = format!("# n={}\n# 0-based node indices: i<TAB>j<TAB>weight\n", g.n_nodes());
    for (i, j, w) in g.edges() {
        s.push_str(&format!("{i}\t{j}\t{}\n", fmt_f64(w)));
    }
    s
}

pub fn save_graph(path: &Path, g: &BrainGraph) -> Result<()> {
    write_text(path, &format_edge_list(g))
}

/// `node<TAB>system` per line.
pub fn parse_systems(text: &str) -> Result<BTreeMap<usize, SystemId>> {
    let mut out = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let t = raw.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = t.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(Error::ParseError { line, msg: "expected `node system`".into() });
        }
        let node = parse_usize(toks[0], line)?;
        let sys = toks[1]
            .parse::<SystemId>()
            .map_err(|e| Error::ParseError { line, msg: format!("`{}`: {e}", toks[1]) })?;
        if out.insert(node, sys).is_some() {
            return Err(Error::ParseError { line, msg: format!("node {node} listed twice") });
        }
    }
    Ok(out)
}

pub fn load_systems(path: &Path) -> Result<BTreeMap<usize, SystemId>> {
    parse_systems(&fs::read_to_string(path)?)
}

pub fn save_systems(path: &Path, systems: &BTreeMap<usize, SystemId>) -> Result<()> {
    let mut s = String::from("# 0-based node<TAB>system\n");
    for (node, sys) in systems {
        s.push_str(&format!("{node}\t{sys}\n"));
    }
    write_text(path, &s)
}

/// Signal CSV: first line `# TR=<seconds>`, then N rows of T values.
pub fn parse_signals(text: &str) -> Result<GraphSignalMatrix> {
    let lines: Vec<String> = text.lines().map(str::to_owned).collect();
    let first = lines.first().ok_or(Error::MissingTRHeader)?;
    let tr_text = header_value(first, "TR").ok_or(Error::MissingTRHeader)?;
    let tr = parse_f64(tr_text, 1)?;
    let (rows, _) = parse_csv_rows(&lines[1..], 2)?;
    GraphSignalMatrix::new(rows_to_matrix(rows)?, tr)
}

pub fn load_signals(path: &Path) -> Result<GraphSignalMatrix> {
    parse_signals(&fs::read_to_string(path)?)
}

pub fn format_matrix(m: &DMatrix<f64>) -> String {
    let mut s = String::with_capacity(m.len() * 24);
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

pub fn format_signals(x: &GraphSignalMatrix) -> String {
    format!(
        "# TR={}\n# rows: 0-based nodes, columns: time samples\n{}",
        fmt_f64(x.sampling_period()),
        format_matrix(x.values())
    )
}

pub fn save_signals(path: &Path, x: &GraphSignalMatrix) -> Result<()> {
    write_text(path, &format_signals(x))
}

/// A real matrix with free-form `#` header lines.
pub fn save_matrix(path: &Path, header: &[&str], m: &DMatrix<f64>) -> Result<()> {
    let mut s: String = header.iter().map(|h| format!("# {h}\n")).collect();
    s.push_str(&format_matrix(m));
    write_text(path, &s)
}

pub fn load_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let lines = read_lines(path)?;
    let (rows, _) = parse_csv_rows(&lines, 1)?;
    rows_to_matrix(rows)
}

/// Pretty JSON with a trailing newline.
pub fn report_json<T: Serialize>(report: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

pub fn save_report<T: Serialize>(path: &Path, report: &T) -> Result<()> {
    write_text(path, &report_json(report)?)
}

pub fn save_text(path: &Path, text: &str) -> Result<()> {
    write_text(path, text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SlepianConfig {
    pub bandwidth: usize,
    pub epsilon: f64,
    pub gate_size: usize,
}

impl Default for SlepianConfig {
    fn default() -> Self {
        Self { bandwidth: DEFAULT_BANDWIDTH, epsilon: DEFAULT_EPSILON, gate_size: DEFAULT_GATE_SIZE }
    }
}

/// Settings shared by the CLI subcommands; command-line flags override them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub shift: ShiftVariant,
    /// Size of the aligned and liberal bands.
    pub k: usize,
    pub alpha: f64,
    /// Surrogate count; when unset each command uses its own default.
    pub n_surrogates: Option<usize>,
    pub slepian: SlepianConfig,
    /// Lower band edges in Hz; the last band runs up to Nyquist.
    pub band_edges: Vec<f64>,
    pub seed: Option<u64>,
    pub norm: Norm,
    pub pooling: ThresholdPooling,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            shift: ShiftVariant::Adjacency,
            k: crate::filters::DEFAULT_SPLIT_K,
            alpha: 0.05,
            n_surrogates: None,
            slepian: SlepianConfig::default(),
            band_edges: vec![0.0, 0.05, 0.1, 0.15, 0.2],
            seed: None,
            norm: Norm::L2,
            pooling: ThresholdPooling::PerNode,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.n_surrogates == Some(0) {
            return Err(Error::Config("n_surrogates must be at least 1".into()));
        }
        let s = &self.slepian;
        if s.bandwidth == 0 || !(s.epsilon > 0.0 && s.epsilon < 1.0) {
            return Err(Error::Config("slepian bandwidth must be >= 1 and epsilon in (0, 1)".into()));
        }
        if self.band_edges.first() != Some(&0.0) || self.band_edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("band_edges must start at 0 and increase strictly".into()));
        }
        Ok(())
    }

    /// `[f_lo, f_hi)` pairs; the last band is closed at Nyquist.
    pub fn bands(&self, sampling_period: f64) -> Result<Vec<(f64, f64)>> {
        let nyquist = 0.5 / sampling_period;
        let mut edges = self.band_edges.clone();
        if let Some(&last) = edges.last() {
            if last >= nyquist {
                return Err(Error::BandsNotPartition(format!(
                    "band edge {last} Hz is not below Nyquist {nyquist} Hz"
                )));
            }
        }
        edges.push(nyquist);
        Ok(edges.windows(2).map(|w| (w[0], w[1])).collect())
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Config from `explicit`, else from `$GSPKIT_CONFIG`, else the defaults.
pub fn load_config(explicit: Option<&Path>) -> Result<RunConfig> {
    let path: Option<PathBuf> = match explicit {
        Some(p) => Some(p.to_path_buf()),
        None => std::env::var_os(CONFIG_ENV).filter(|v| !v.is_empty()).map(PathBuf::from),
    };
    match path {
        Some(p) => {
            let text = fs::read_to_string(&p)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
            parse_config(&text)
        }
        None => Ok(RunConfig::default()),
    }
}

/// One cohort row: subject id, graph and signal paths, then named numeric columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CohortEntry {
    pub subject: String,
    pub graph: PathBuf,
    pub signals: PathBuf,
    pub values: BTreeMap<String, f64>,
}

const COHORT_FIXED: [&str; 3] = ["subject", "graph", "signals"];

/// Cohort table: CSV with header `subject,graph,signals,<name>,...`.
/// Relative paths resolve against `base`.
pub fn parse_cohort(text: &str, base: &Path) -> Result<Vec<CohortEntry>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::ParseError { line: 1, msg: e.to_string() })?
        .clone();
    if headers.len() < 3 || headers.iter().take(3).ne(COHORT_FIXED) {
        return Err(Error::ParseError { line: 1, msg: "cohort header must start with subject,graph,signals".into() });
    }
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::ParseError {
            line: e.position().map_or(0, |p| p.line() as usize),
            msg: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let mut values = BTreeMap::new();
        for (name, v) in headers.iter().zip(rec.iter()).skip(3) {
            values.insert(name.to_string(), parse_f64(v, line)?);
        }
        out.push(CohortEntry {
            subject: rec[0].to_string(),
            graph: base.join(&rec[1]),
            signals: base.join(&rec[2]),
            values,
        });
    }
    Ok(out)
}

/// Load every subject in a cohort table. Values named in `behavior` go to the
/// behavior map, all other numeric columns become covariates.
pub fn load_cohort(path: &Path, behavior: &[String]) -> Result<Vec<SubjectRecord>> {
    let base = path.parent().unwrap_or(Path::new("."));
    let entries = parse_cohort(&fs::read_to_string(path)?, base)?;
    entries
        .into_iter()
        .map(|e| {
            let graph = load_graph(&e.graph, GraphFormat::from_path(&e.graph))?;
            let signals = load_signals(&e.signals)?;
            let (b, c): (BTreeMap<_, _>, BTreeMap<_, _>) =
                e.values.into_iter().partition(|(k, _)| behavior.contains(k));
            SubjectRecord::new(signals, graph, b, c)
        })
        .collect()
}

/// Write a cohort table plus one graph and one signal file per subject into `dir`.
pub fn save_cohort(dir: &Path, subjects: &[SubjectRecord]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut names: Vec<String> = Vec::new();
    if let Some(first) = subjects.first() {
        names.extend(first.behavior.keys().cloned());
        names.extend(first.covariates.keys().cloned());
    }
    let mut table = String::from("subject,graph,signals");
    for n in &names {
        table.push(',');
        table.push_str(n);
    }
    table.push('\n');
    for (s, rec) in subjects.iter().enumerate() {
        let id = format!("sub{s:03}");
        let (g, x) = (format!("{id}_graph.tsv"), format!("{id}_signals.csv"));
        save_graph(&dir.join(&g), &rec.graph)?;
        save_signals(&dir.join(&x), &rec.signals)?;
        table.push_str(&format!("{id},{g},{x}"));
        for n in &names {
            let v = rec.behavior.get(n).or_else(|| rec.covariates.get(n)).copied().unwrap_or(f64::NAN);
            table.push(',');
            table.push_str(&fmt_f64(v));
        }
        table.push('\n');
    }
    write_text(&dir.join("cohort.csv"), &table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_list_with_header() {
        let g = parse_edge_list("# n=2\n0\t1\t1.0\n").unwrap();
        assert_eq!(g.n_nodes(), 2);
        assert_eq!(g.weights()[(0, 1)], 1.0);
        let empty = parse_edge_list("# n=3\n").unwrap();
        assert_eq!(empty.n_nodes(), 3);
        assert_eq!(empty.n_edges(), 0);
        assert!(matches!(parse_edge_list("0 1\n"), Err(Error::ParseError { line: 1, .. })));
        assert!(matches!(parse_edge_list("# n=2\n0\t1\tx\n"), Err(Error::ParseError { line: 2, .. })));
        assert!(matches!(parse_edge_list("0\t1\t-1\n"), Err(Error::NegativeWeight { .. })));
    }

    #[test]
    fn dense_csv_checks_symmetry() {
        let g = parse_dense_csv("0,2\n2,0\n").unwrap();
        assert_eq!(g.weights()[(1, 0)], 2.0);
        assert!(matches!(parse_dense_csv("0,1\n2,0\n"), Err(Error::AsymmetricMatrix(d)) if d == 1.0));
        assert!(matches!(parse_dense_csv("0,1\n1\n"), Err(Error::RaggedRows { row: 1, .. })));
    }

    #[test]
    fn signals_round_trip_exactly() {
        let x = DMatrix::from_fn(5, 7, |r, c| ((r * 7 + c) as f64 * 0.731).sin() * 1e3 / 3.0);
        let sig = GraphSignalMatrix::new(x, 0.72).unwrap();
        let back = parse_signals(&format_signals(&sig)).unwrap();
        assert_eq!(back.values(), sig.values());
        assert_eq!(back.sampling_period(), 0.72);
    }

    #[test]
    fn signal_errors() {
        assert!(matches!(parse_signals("1,2\n3,4\n"), Err(Error::MissingTRHeader)));
        assert!(matches!(parse_signals(""), Err(Error::MissingTRHeader)));
        assert!(matches!(
            parse_signals("# TR=2\n1,2,3\n4,5\n"),
            Err(Error::RaggedRows { row: 1, got: 2, expected: 3 })
        ));
    }

    #[test]
    fn systems_file() {
        let s = parse_systems("# header\n0\t1\n1\t1\n2 4\n").unwrap();
        assert_eq!(s[&2], 4);
        assert!(parse_systems("0\t1\n0\t2\n").is_err());
    }

    #[test]
    fn config_defaults_and_bands() {
        let cfg = parse_config("alpha = 0.01\n[slepian]\nbandwidth = 40\n").unwrap();
        assert_eq!(cfg.alpha, 0.01);
        assert_eq!(cfg.slepian.bandwidth, 40);
        assert_eq!(cfg.slepian.epsilon, 0.5);
        assert_eq!(cfg.k, 10);
        let b = cfg.bands(2.0).unwrap();
        assert_eq!(b.len(), 5);
        assert_eq!(b[4], (0.2, 0.25));
        assert!(parse_config("alpha = 2.0").is_err());
        assert!(parse_config("unknown = 1").is_err());
        assert!(cfg.bands(2.5).is_err());
    }

    #[test]
    fn cohort_table() {
        let rows = parse_cohort("subject,graph,signals,switch_cost,age\ns1,g.tsv,x.csv,512.5,33\n", Path::new("/d"))
            .unwrap();
        assert_eq!(rows[0].graph, Path::new("/d/g.tsv"));
        assert_eq!(rows[0].values["age"], 33.0);
        assert!(parse_cohort("id,graph,signals\n", Path::new(".")).is_err());
    }
}
