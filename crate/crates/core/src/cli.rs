//! Command-line driver.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 numerical failure.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::filters::{apply_spectral_filter, polynomial_filter_apply, SpectralFilter};
use crate::graph::{BrainGraph, ShiftOperator, ShiftVariant, SystemId};
use crate::io::{self, GraphFormat, RunConfig};
use crate::pipeline::{
    band_excursion_profile, box_summaries, cohort_design, component_filter, excursion_detect,
    null_correlation_test, permutation_p_value, slepian_excursion_profile, Component, ExcursionOptions,
    Norm, NullTestConfig, ThresholdPooling, REPORT_SCHEMA_VERSION,
};
use crate::slepian::{slepian_basis, NodeSelector, SlepianCriterion, SlepianGate};
use crate::spectral::{eigendecompose, SpectralBasis};
use crate::surrogate::{
    SurrogateEnsemble, SurrogateMode, SurrogateSpec, DEFAULT_CORRELATION_SURROGATES,
    DEFAULT_EXCURSION_SURROGATES, RNG_ALGORITHM,
};
use crate::synth::{
    synth_cohort, synth_graph, synth_signals, CohortEffect, EffectCalibration, GraphModel, SignalModel,
    SynthSpec, BEHAVIOR_KEY,
};
use crate::temporal::GraphSignalMatrix;

#[derive(Parser, Debug)]
#[command(name = "gspkit", version, about = "Graph signal processing on structural brain graphs")]
struct Cli {
    /// TOML run configuration (default: $GSPKIT_CONFIG, else built-in defaults).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads; results do not depend on this value.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the shift operator matrix and its spectrum.
    Shift(ShiftCmd),
    /// Graph Fourier coefficients of a signal matrix.
    Gft(GftCmd),
    /// Filter signals in the graph spectral or vertex domain.
    Filter(FilterCmd),
    /// Write surrogate realizations.
    Surrogate(SurrogateCmd),
    /// Slepian basis on a node subset.
    Slepian(SlepianCmd),
    /// Excursion percentages against a surrogate null.
    Excursion(ExcursionCmd),
    /// Partial correlation of component concentration with behavior across a cohort.
    Correlate(CorrelateCmd),
    /// Excursion percentages per system and temporal band.
    Bands(BandsCmd),
    /// Generate synthetic graphs, signals or cohorts.
    Synth(SynthCmd),
}

#[derive(Args, Debug)]
struct GraphArgs {
    /// Graph file: edge list (`i<TAB>j<TAB>w`) or dense CSV.
    #[arg(long)]
    graph: PathBuf,
    /// Graph file format; inferred from the extension when omitted.
    #[arg(long, value_name = "edge-list|dense-csv")]
    graph_format: Option<GraphFormat>,
    /// Shift operator variant (default from config).
    #[arg(long)]
    shift: Option<ShiftVariant>,
}

impl GraphArgs {
    fn load(&self) -> Result<BrainGraph> {
        let fmt = self.graph_format.unwrap_or_else(|| GraphFormat::from_path(&self.graph));
        io::load_graph(&self.graph, fmt)
    }

    fn variant(&self, cfg: &RunConfig) -> ShiftVariant {
        self.shift.unwrap_or(cfg.shift)
    }

    fn basis(&self, cfg: &RunConfig) -> Result<(BrainGraph, SpectralBasis)> {
        let g = self.load()?;
        let b = eigendecompose(&ShiftOperator::new(&g, self.variant(cfg))?)?;
        Ok((g, b))
    }
}

#[derive(Args, Debug)]
struct NullArgs {
    /// Null model: graph, temporal or combined.
    #[arg(long, default_value = "graph")]
    mode: SurrogateMode,
    /// Ensemble size (default from config, else the command default).
    #[arg(long)]
    n_surrogates: Option<usize>,
    /// RNG seed; required here or in the config.
    #[arg(long)]
    seed: Option<u64>,
}

impl NullArgs {
    fn seed(&self, cfg: &RunConfig) -> Result<u64> {
        self.seed
            .or(cfg.seed)
            .ok_or_else(|| Error::Config("this command is stochastic: pass --seed".into()))
    }

    fn count(&self, cfg: &RunConfig, default: usize) -> usize {
        self.n_surrogates.or(cfg.n_surrogates).unwrap_or(default)
    }
}

#[derive(Args, Debug)]
struct ShiftCmd {
    #[command(flatten)]
    graph: GraphArgs,
    /// Output CSV for the shift matrix.
    #[arg(long)]
    out: PathBuf,
    /// Optional JSON with eigenvalues in frequency order.
    #[arg(long)]
    spectrum: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GftCmd {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long)]
    signals: PathBuf,
    /// Coefficient CSV; rows follow graph frequency rank.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FilterKind {
    Low,
    High,
    Band,
    Diffusion,
    Polynomial,
}

#[derive(Args, Debug)]
struct FilterCmd {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long)]
    signals: PathBuf,
    #[arg(long, value_enum)]
    kind: FilterKind,
    /// Band size for `low` and `high` (default from config).
    #[arg(long)]
    k: Option<usize>,
    /// Frequency ranks passed by `band`.
    #[arg(long, value_delimiter = ',')]
    ranks: Vec<usize>,
    /// Diffusion time.
    #[arg(long)]
    tau: Option<f64>,
    /// Polynomial coefficients `c_0, c_1, ...` in powers of the shift.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    coeffs: Vec<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SurrogateCmd {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long)]
    signals: PathBuf,
    #[command(flatten)]
    null: NullArgs,
    /// Restrict the nulls to one graph-frequency component.
    #[arg(long)]
    component: Option<Component>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct SlepianCmd {
    #[command(flatten)]
    graph: GraphArgs,
    /// Node-to-system file; with --system selects that system's nodes.
    #[arg(long)]
    systems: Option<PathBuf>,
    #[arg(long)]
    system: Option<SystemId>,
    /// Explicit 0-based node list.
    #[arg(long, value_delimiter = ',')]
    nodes: Vec<usize>,
    /// Number of trimmed eigenvectors (default from config).
    #[arg(long)]
    bandwidth: Option<usize>,
    #[arg(long, default_value = "modified")]
    criterion: SlepianCriterion,
    /// JSON report.
    #[arg(long)]
    out: PathBuf,
    /// Optional CSV of the Slepian vectors (columns).
    #[arg(long)]
    vectors: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExcursionCmd {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long)]
    signals: PathBuf,
    #[arg(long, default_value = "aligned")]
    component: Component,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[command(flatten)]
    null: NullArgs,
    #[arg(long)]
    pooling: Option<ThresholdPooling>,
    /// Node-to-system file (required for the slepian component).
    #[arg(long)]
    systems: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Box-plot quantiles per system as CSV.
    #[arg(long)]
    plot_data: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CorrelateCmd {
    /// Cohort table: `subject,graph,signals,<values>...`.
    #[arg(long)]
    cohort: PathBuf,
    #[arg(long, default_value = BEHAVIOR_KEY)]
    behavior: String,
    #[arg(long, value_delimiter = ',')]
    covariates: Vec<String>,
    #[arg(long, default_value = "liberal")]
    component: Component,
    #[arg(long)]
    shift: Option<ShiftVariant>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    norm: Option<Norm>,
    #[command(flatten)]
    null: NullArgs,
    /// Also report a permutation p-value with this many shuffles.
    #[arg(long)]
    permutations: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct BandsCmd {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long)]
    signals: PathBuf,
    #[arg(long)]
    systems: PathBuf,
    #[arg(long, default_value = "aligned")]
    component: Component,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[command(flatten)]
    null: NullArgs,
    /// Lower band edges in Hz; the last band runs to Nyquist.
    #[arg(long, value_delimiter = ',')]
    band_edges: Vec<f64>,
    #[arg(long)]
    out: PathBuf,
    /// Long-format CSV `system,f_lo,f_hi,pct`.
    #[arg(long)]
    plot_data: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GraphKind {
    Block,
    Ring,
    Cycle,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SignalKind {
    White,
    BandLimited,
    Burst,
    Oscillation,
}

#[derive(Args, Debug)]
struct SynthCmd {
    #[arg(long, value_enum, default_value = "block")]
    model: GraphKind,
    #[arg(long, default_value_t = 4)]
    blocks: usize,
    #[arg(long, default_value_t = 0.5)]
    p_in: f64,
    #[arg(long, default_value_t = 0.05)]
    p_out: f64,
    #[arg(long, default_value_t = 0.5)]
    w_min: f64,
    #[arg(long, default_value_t = 1.5)]
    w_max: f64,
    #[arg(long, default_value_t = 2)]
    radius: usize,
    #[arg(long)]
    nodes: usize,
    #[arg(long)]
    t: usize,
    #[arg(long, default_value_t = 2.0)]
    tr: f64,
    #[arg(long, value_enum, default_value = "white")]
    signal: SignalKind,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Frequency ranks for band-limited signals.
    #[arg(long, value_delimiter = ',')]
    modes: Vec<usize>,
    /// Burst node, or the oscillating nodes.
    #[arg(long, value_delimiter = ',')]
    at_nodes: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    start: usize,
    #[arg(long)]
    end: Option<usize>,
    #[arg(long, default_value_t = 5.0)]
    amplitude: f64,
    #[arg(long, default_value_t = 0.17)]
    freq: f64,
    #[arg(long)]
    seed: u64,
    /// Generate a cohort of this many subjects instead of a single subject.
    #[arg(long)]
    subjects: Option<usize>,
    #[arg(long, default_value_t = 0.59)]
    target_rho: f64,
    #[arg(long)]
    shift: Option<ShiftVariant>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Serialize)]
struct SpectrumReport {
    schema_version: u32,
    kind: &'static str,
    variant: ShiftVariant,
    n_nodes: usize,
    /// Eigenvalues in graph frequency order.
    eigenvalues: Vec<f64>,
}

#[derive(Serialize)]
struct SlepianReport {
    schema_version: u32,
    kind: &'static str,
    criterion: SlepianCriterion,
    bandwidth: usize,
    nodes: Vec<usize>,
    concentration: Vec<f64>,
    localized_freq: Option<Vec<f64>>,
    embedded_distance: Vec<f64>,
    /// Vectors passing the default gate (modified criterion only).
    gated: Option<Vec<usize>>,
}

#[derive(Serialize)]
struct CorrelationReport {
    schema_version: u32,
    kind: &'static str,
    component: Component,
    norm: Norm,
    shift: ShiftVariant,
    k: usize,
    behavior: String,
    covariates: Vec<String>,
    n_subjects: usize,
    rho: f64,
    p_value: f64,
    null_mode: SurrogateMode,
    n_surrogates: usize,
    rng: &'static str,
    seed: u64,
    null_p_value: f64,
    null_rhos: Vec<f64>,
    concentrations: Vec<f64>,
    permutation_p_value: Option<f64>,
}

/// Parse `argv` (including the program name), run, and return the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli) -> Result<String> {
    let cfg = io::load_config(cli.config.as_deref())?;
    match cli.jobs {
        Some(j) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(j.max(1))
                .build()
                .map_err(|e| Error::Config(e.to_string()))?;
            pool.install(|| dispatch(cli.command, &cfg))
        }
        None => dispatch(cli.command, &cfg),
    }
}

fn dispatch(cmd: Command, cfg: &RunConfig) -> Result<String> {
    match cmd {
        Command::Shift(c) => cmd_shift(c, cfg),
        Command::Gft(c) => cmd_gft(c, cfg),
        Command::Filter(c) => cmd_filter(c, cfg),
        Command::Surrogate(c) => cmd_surrogate(c, cfg),
        Command::Slepian(c) => cmd_slepian(c, cfg),
        Command::Excursion(c) => cmd_excursion(c, cfg),
        Command::Correlate(c) => cmd_correlate(c, cfg),
        Command::Bands(c) => cmd_bands(c, cfg),
        Command::Synth(c) => cmd_synth(c),
    }
}

fn cmd_shift(c: ShiftCmd, cfg: &RunConfig) -> Result<String> {
    let g = c.graph.load()?;
    let variant = c.graph.variant(cfg);
    let op = ShiftOperator::new(&g, variant)?;
    io::save_matrix(&c.out, &[&format!("{variant} shift operator, 0-based node rows and columns")], op.matrix())?;
    let mut msg = format!("shift: {variant} operator on {} nodes -> {}", g.n_nodes(), c.out.display());
    if let Some(path) = c.spectrum {
        let b = eigendecompose(&op)?;
        let eigenvalues = b.ordering().iter().map(|&k| b.eigenvalues()[k]).collect();
        let rep = SpectrumReport {
            schema_version: REPORT_SCHEMA_VERSION,
            kind: "spectrum",
            variant,
            n_nodes: g.n_nodes(),
            eigenvalues,
        };
        io::save_report(&path, &rep)?;
        msg.push_str(&format!(", spectrum -> {}", path.display()));
    }
    Ok(msg)
}

fn load_signals_for(path: &Path, g: &BrainGraph) -> Result<GraphSignalMatrix> {
    let x = io::load_signals(path)?;
    if x.node_count() != g.n_nodes() {
        return Err(Error::DimensionMismatch { expected: g.n_nodes(), got: x.node_count() });
    }
    Ok(x)
}

fn cmd_gft(c: GftCmd, cfg: &RunConfig) -> Result<String> {
    let (g, b) = c.graph.basis(cfg)?;
    let x = load_signals_for(&c.signals, &g)?;
    let coeffs = b.gft(x.values())?.select_rows(b.ordering());
    io::save_matrix(
        &c.out,
        &[&format!("{} GFT coefficients", b.variant()), "rows: 0-based graph frequency rank, columns: time samples"],
        &coeffs,
    )?;
    Ok(format!("gft: {}x{} coefficients -> {}", coeffs.nrows(), coeffs.ncols(), c.out.display()))
}

fn cmd_filter(c: FilterCmd, cfg: &RunConfig) -> Result<String> {
    let g = c.graph.load()?;
    let x = load_signals_for(&c.signals, &g)?;
    let op = ShiftOperator::new(&g, c.graph.variant(cfg))?;
    let k = c.k.unwrap_or(cfg.k);
    let y = if let FilterKind::Polynomial = c.kind {
        polynomial_filter_apply(&op, &c.coeffs, x.values())?
    } else {
        let b = eigendecompose(&op)?;
        let f = match c.kind {
            FilterKind::Low => SpectralFilter::ideal_low(&b, k)?,
            FilterKind::High => SpectralFilter::ideal_high(&b, k)?,
            FilterKind::Band => SpectralFilter::ideal_band(&b, &c.ranks)?,
            FilterKind::Diffusion => SpectralFilter::diffusion(
                &b,
                c.tau.ok_or_else(|| Error::Config("diffusion needs --tau".into()))?,
            )?,
            FilterKind::Polynomial => unreachable!(),
        };
        apply_spectral_filter(&b, &f, x.values())?
    };
    io::save_signals(&c.out, &x.with_values(y)?)?;
    Ok(format!("filter: {:?} -> {}", c.kind, c.out.display()).to_lowercase())
}

fn cmd_surrogate(c: SurrogateCmd, cfg: &RunConfig) -> Result<String> {
    let (g, b) = c.graph.basis(cfg)?;
    let x = load_signals_for(&c.signals, &g)?;
    let count = c.null.count(cfg, DEFAULT_CORRELATION_SURROGATES);
    let mut spec = SurrogateSpec::new(c.null.mode, count, c.null.seed(cfg)?)?;
    if let Some(comp) = c.component {
        spec = spec.with_filter(component_filter(&b, comp, cfg.k)?);
    }
    let ens = SurrogateEnsemble::new(&spec, &b, x.values())?;
    let mut err = None;
    ens.for_each_batched(16, |i, m| {
        if err.is_some() {
            return;
        }
        let path = c.out_dir.join(format!("surrogate_{i:04}.csv"));
        if let Err(e) = x.with_values(m.clone()).and_then(|s| io::save_signals(&path, &s)) {
            err = Some(e);
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    Ok(format!("surrogate: {count} realizations -> {}", c.out_dir.display()))
}

fn cmd_slepian(c: SlepianCmd, cfg: &RunConfig) -> Result<String> {
    let g = c.graph.load()?;
    let variant = c.graph.shift.unwrap_or(ShiftVariant::Laplacian);
    let b = eigendecompose(&ShiftOperator::new(&g, variant)?)?;
    let n = g.n_nodes();
    let nodes = match (&c.systems, c.system) {
        (Some(path), Some(sys)) => {
            let map = io::load_systems(path)?;
            map.iter().filter(|(_, &s)| s == sys).map(|(&i, _)| i).collect()
        }
        (None, None) => c.nodes.clone(),
        _ => return Err(Error::Config("--systems and --system go together".into())),
    };
    let sel = NodeSelector::from_nodes(n, &nodes)?;
    let m = c.bandwidth.unwrap_or(cfg.slepian.bandwidth).min(n);
    let s = slepian_basis(&b, &sel, m, c.criterion)?;
    let gated = match c.criterion {
        SlepianCriterion::ModifiedEmbeddedDistance => Some(s.gate_indices(&SlepianGate::LowestConcentrated {
            count: cfg.slepian.gate_size,
            epsilon: cfg.slepian.epsilon,
        })?),
        SlepianCriterion::EnergyConcentration => None,
    };
    let rep = SlepianReport {
        schema_version: REPORT_SCHEMA_VERSION,
        kind: "slepian-basis",
        criterion: c.criterion,
        bandwidth: m,
        nodes: sel.members(),
        concentration: s.concentration.iter().copied().collect(),
        localized_freq: s.localized_freq.as_ref().map(|v| v.iter().copied().collect()),
        embedded_distance: s.embedded_distance.iter().copied().collect(),
        gated,
    };
    io::save_report(&c.out, &rep)?;
    if let Some(path) = &c.vectors {
        io::save_matrix(path, &["slepian vectors as columns, rows: 0-based nodes"], &s.vectors)?;
    }
    Ok(format!("slepian: {m} vectors on {} nodes -> {}", nodes.len(), c.out.display()))
}

fn cmd_excursion(c: ExcursionCmd, cfg: &RunConfig) -> Result<String> {
    let (g, b) = c.graph.basis(cfg)?;
    let x = load_signals_for(&c.signals, &g)?;
    let count = c.null.count(cfg, DEFAULT_EXCURSION_SURROGATES);
    let spec = SurrogateSpec::new(c.null.mode, count, c.null.seed(cfg)?)?;
    let mut opts = ExcursionOptions::new(c.alpha.unwrap_or(cfg.alpha), c.component);
    opts.pooling = c.pooling.unwrap_or(cfg.pooling);
    let systems = match &c.systems {
        Some(p) => Some(io::load_systems(p)?),
        None => g.systems().cloned(),
    };
    if c.plot_data.is_some() && systems.is_none() {
        return Err(Error::Config("--plot-data needs --systems".into()));
    }
    let report = match c.component {
        Component::SlepianLocal => {
            let systems = systems
                .as_ref()
                .ok_or_else(|| Error::Config("the slepian component needs --systems".into()))?;
            let gate = SlepianGate::LowestConcentrated {
                count: cfg.slepian.gate_size,
                epsilon: cfg.slepian.epsilon,
            };
            let m = cfg.slepian.bandwidth.min(g.n_nodes());
            slepian_excursion_profile(&x, &b, systems, m, &gate, &spec, &opts)?
        }
        comp => {
            let f = component_filter(&b, comp, c.k.unwrap_or(cfg.k))?;
            let y = apply_spectral_filter(&b, &f, x.values())?;
            let r = excursion_detect(&y, &b, x.values(), &spec.with_filter(f), &opts)?;
            match &systems {
                Some(s) => r.with_systems(s)?,
                None => r,
            }
        }
    };
    io::save_report(&c.out, &report)?;
    if let Some(path) = &c.plot_data {
        let systems = systems.as_ref().expect("checked above");
        let mut csv = String::from("system,min,q1,median,q3,max\n");
        for bx in box_summaries(&report.per_node_pct, systems)? {
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                bx.system,
                io::fmt_f64(bx.min),
                io::fmt_f64(bx.q1),
                io::fmt_f64(bx.median),
                io::fmt_f64(bx.q3),
                io::fmt_f64(bx.max)
            ));
        }
        io::save_text(path, &csv)?;
    }
    let mean = report.per_node_pct.iter().sum::<f64>() / report.per_node_pct.len() as f64;
    Ok(format!(
        "excursion: mean {mean:.2}% of time points above threshold over {} nodes -> {}",
        report.per_node_pct.len(),
        c.out.display()
    ))
}

fn cmd_correlate(c: CorrelateCmd, cfg: &RunConfig) -> Result<String> {
    let subjects = io::load_cohort(&c.cohort, std::slice::from_ref(&c.behavior))?;
    let count = c.null.count(cfg, DEFAULT_CORRELATION_SURROGATES);
    let seed = c.null.seed(cfg)?;
    let nc = NullTestConfig {
        shift: c.shift.unwrap_or(cfg.shift),
        component: c.component,
        k: c.k.unwrap_or(cfg.k),
        norm: c.norm.unwrap_or(cfg.norm),
        mode: c.null.mode,
        count,
        seed,
        behavior: c.behavior.clone(),
        covariates: c.covariates.clone(),
    };
    let res = null_correlation_test(&subjects, &nc)?;
    let permutation_p_value = match c.permutations {
        Some(np) => {
            let (b, z) = cohort_design(&subjects, &c.behavior, &c.covariates)?;
            let a = DVector::from_vec(res.concentrations.clone());
            Some(permutation_p_value(&a, &b, &z, np, seed)?)
        }
        None => None,
    };
    let rep = CorrelationReport {
        schema_version: REPORT_SCHEMA_VERSION,
        kind: "correlation-report",
        component: nc.component,
        norm: nc.norm,
        shift: nc.shift,
        k: nc.k,
        behavior: c.behavior,
        covariates: c.covariates,
        n_subjects: subjects.len(),
        rho: res.observed.rho,
        p_value: res.observed.p_value,
        null_mode: res.mode,
        n_surrogates: count,
        rng: RNG_ALGORITHM,
        seed,
        null_p_value: res.p_value,
        null_rhos: res.null_rhos,
        concentrations: res.concentrations,
        permutation_p_value,
    };
    io::save_report(&c.out, &rep)?;
    Ok(format!(
        "correlate: rho = {:.4}, p = {:.4}, null p = {:.4} ({} subjects) -> {}",
        rep.rho,
        rep.p_value,
        rep.null_p_value,
        rep.n_subjects,
        c.out.display()
    ))
}

fn cmd_bands(c: BandsCmd, cfg: &RunConfig) -> Result<String> {
    let (g, b) = c.graph.basis(cfg)?;
    let x = load_signals_for(&c.signals, &g)?;
    let systems: BTreeMap<usize, SystemId> = io::load_systems(&c.systems)?;
    let mut band_cfg = cfg.clone();
    if !c.band_edges.is_empty() {
        band_cfg.band_edges = c.band_edges.clone();
        band_cfg.validate()?;
    }
    let bands = band_cfg.bands(x.sampling_period())?;
    let count = c.null.count(cfg, DEFAULT_EXCURSION_SURROGATES);
    let f = component_filter(&b, c.component, c.k.unwrap_or(cfg.k))?;
    let spec = SurrogateSpec::new(c.null.mode, count, c.null.seed(cfg)?)?.with_filter(f);
    let mut opts = ExcursionOptions::new(c.alpha.unwrap_or(cfg.alpha), c.component);
    opts.pooling = cfg.pooling;
    let prof = band_excursion_profile(&x, &b, &bands, &systems, &spec, &opts)?;
    io::save_report(&c.out, &prof)?;
    if let Some(path) = &c.plot_data {
        let mut csv = String::from("system,f_lo,f_hi,pct\n");
        for (row, sys) in prof.systems.iter().enumerate() {
            for (col, band) in prof.bands.iter().enumerate() {
                csv.push_str(&format!(
                    "{sys},{},{},{}\n",
                    io::fmt_f64(band[0]),
                    io::fmt_f64(band[1]),
                    io::fmt_f64(prof.pct[row][col])
                ));
            }
        }
        io::save_text(path, &csv)?;
    }
    let (r, col) = prof.argmax();
    Ok(format!(
        "bands: {} systems x {} bands, max {:.2}% at system {} band [{}, {}) Hz -> {}",
        prof.systems.len(),
        prof.bands.len(),
        prof.pct[r][col],
        prof.systems[r],
        prof.bands[col][0],
        prof.bands[col][1],
        c.out.display()
    ))
}

fn cmd_synth(c: SynthCmd) -> Result<String> {
    let graph_model = match c.model {
        GraphKind::Block => GraphModel::BlockModel {
            blocks: c.blocks,
            p_in: c.p_in,
            p_out: c.p_out,
            weight_range: (c.w_min, c.w_max),
        },
        GraphKind::Ring => GraphModel::RingLattice { radius: c.radius },
        GraphKind::Cycle => GraphModel::CycleGraph,
    };
    let first_node = || {
        c.at_nodes
            .first()
            .copied()
            .ok_or_else(|| Error::Config("--at-nodes is required for this signal".into()))
    };
    let signal_model = match c.signal {
        SignalKind::White => SignalModel::WhiteNoise { sigma: c.sigma },
        SignalKind::BandLimited => SignalModel::BandLimited { modes: c.modes.clone(), sigma: c.sigma },
        SignalKind::Burst => SignalModel::PlantedBurst {
            node: first_node()?,
            start: c.start,
            end: c.end.unwrap_or(c.t),
            amplitude: c.amplitude,
            sigma: c.sigma,
        },
        SignalKind::Oscillation => {
            first_node()?;
            SignalModel::Oscillation {
                nodes: c.at_nodes.clone(),
                freq_hz: c.freq,
                amplitude: c.amplitude,
                sigma: c.sigma,
            }
        }
    };
    let spec = SynthSpec { graph_model, signal_model, n_nodes: c.nodes, t_points: c.t, tr: c.tr, seed: c.seed };
    if let Some(n) = c.subjects {
        let mut effect = CohortEffect::new(c.target_rho);
        effect.calibration = EffectCalibration::Exact;
        if let Some(s) = c.shift {
            effect.shift = s;
        }
        let cohort = synth_cohort(n, &spec, &effect)?;
        io::save_cohort(&c.out_dir, &cohort)?;
        return Ok(format!("synth: cohort of {n} subjects -> {}", c.out_dir.join("cohort.csv").display()));
    }
    let g = synth_graph(&spec)?;
    let b = eigendecompose(&ShiftOperator::new(&g, c.shift.unwrap_or(ShiftVariant::Laplacian))?)?;
    let x = synth_signals(&spec, &b)?;
    io::save_graph(&c.out_dir.join("graph.tsv"), &g)?;
    io::save_signals(&c.out_dir.join("signals.csv"), &x)?;
    if let Some(s) = g.systems() {
        io::save_systems(&c.out_dir.join("systems.tsv"), s)?;
    }
    io::save_text(&c.out_dir.join("synth.json"), &io::report_json(&spec)?)?;
    Ok(format!(
        "synth: {} nodes, {} edges, {} samples -> {}",
        g.n_nodes(),
        g.n_edges(),
        c.t,
        c.out_dir.display()
    ))
}
