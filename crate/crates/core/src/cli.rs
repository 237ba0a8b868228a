//! Command-line front end.
//!
//! Subcommands: `generate`, `mask`, `solve` (one grid cell), `embed` (full
//! pipeline) and `eval`. Any long flag may also be given in a `key=value`
//! file passed with `--config`; flags on the command line take precedence.
//! Exit codes are 0 on success, 1 for invalid input and 2 for numerical or
//! runtime failures.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use crate::datasets::{generate, LinkageSpec, Variant};
use crate::embedding::{DiffusionEmbedding, DEFAULT_DIMENSION};
use crate::error::{Error, Result};
use crate::evaluation::{adjusted_rand_index, kmeans, mean_ari, Labeling, ScoreLine, DEFAULT_RESTARTS};
use crate::graph::{default_k, knn_graph};
use crate::incomplete::{apply_mask, MaskSpec, ObservedMatrix};
use crate::io::{format_number, read_dense, read_edges, read_observed, write_dense, write_edges, write_key_values, write_observed, write_text_lines};
use crate::metric::DEFAULT_ALPHA;
use crate::penalty::{Penalty, DEFAULT_EPSILON};
use crate::pipeline::{baseline_diffusion, run_pipeline, PipelineConfig};
use crate::solver::{co_cluster_missing, FusionGraphs, Gammas, SolverConfig};
use crate::sweep::{ScaleGrid, SweepOptions};
use crate::Mode;

pub const OUT_DIR_ENV: &str = "COMANIFOLD_OUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

/// File names written by `embed`.
pub mod files {
    pub const MANIFEST: &str = "manifest.csv";
    pub const ROW_DISTANCES: &str = "row_distances.csv";
    pub const COL_DISTANCES: &str = "col_distances.csv";
    pub const ROW_EMBEDDING: &str = "row_embedding.csv";
    pub const COL_EMBEDDING: &str = "col_embedding.csv";
    pub const ROW_BASELINE: &str = "row_embedding_baseline.csv";
    pub const COL_BASELINE: &str = "col_embedding_baseline.csv";
    pub const ROW_GRAPH: &str = "row_graph.csv";
    pub const COL_GRAPH: &str = "col_graph.csv";
    pub const OBSERVED: &str = "observed.csv";
    pub const SUMMARY: &str = "summary.txt";
    /// Suffix of the one-line eigenvalue sidecar next to an embedding file.
    pub const EIGENVALUE_SUFFIX: &str = ".eigenvalues";
}

#[derive(Debug, Parser)]
#[command(name = "comanifold", version, about = "Co-manifold learning with missing data", args_override_self = true)]
pub struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// `key=value` file supplying defaults for the subcommand's flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset and its metadata sidecar.
    Generate(GenerateArgs),
    /// Hide a random fraction of a complete matrix.
    Mask(MaskArgs),
    /// Solve the co-clustering problem at one scale.
    Solve(SolveArgs),
    /// Run the full pipeline and write embeddings of rows and columns.
    Embed(EmbedArgs),
    /// Score k-means clusterings of an embedding against ground truth.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum VariantArg {
    Linkage,
    Linkage2,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Linkage => Variant::Linkage,
            VariantArg::Linkage2 => Variant::Linkage2,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PenaltyArg {
    Snowflake,
    Linear,
}

#[derive(Debug, Clone, Args)]
pub struct OutDir {
    /// Output directory; must exist.
    #[arg(long, env = OUT_DIR_ENV, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct GeneratorArgs {
    #[arg(long, value_enum)]
    pub variant: Option<VariantArg>,
    #[arg(long, default_value_t = 100)]
    pub rows: usize,
    #[arg(long, default_value_t = 150)]
    pub cols: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Row-point noise (default: 0 for linkage, 1 for linkage2).
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub offset: Option<f64>,
}

impl GeneratorArgs {
    fn spec(&self) -> Option<LinkageSpec> {
        let variant = Variant::from(self.variant?);
        let mut s = LinkageSpec::new(variant, self.rows, self.cols, self.seed);
        if let Some(n) = self.noise {
            s.noise = n;
        }
        if let Some(o) = self.offset {
            s.offset = o;
        }
        Some(s)
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub generator: GeneratorArgs,
    /// Base name of the written files (default: the variant name).
    #[arg(long)]
    pub name: Option<String>,
    #[command(flatten)]
    pub out: OutDir,
}

#[derive(Debug, Args)]
pub struct MaskArgs {
    /// Complete input matrix.
    #[arg(long)]
    pub input: PathBuf,
    /// Input starts with a header line.
    #[arg(long)]
    pub header: bool,
    #[arg(long)]
    pub fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "observed")]
    pub name: String,
    #[command(flatten)]
    pub out: OutDir,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Row graph neighbors (default: round(log2 m), at least 2).
    #[arg(long)]
    pub k_rows: Option<usize>,
    #[arg(long)]
    pub k_cols: Option<usize>,
    /// Row graph as a file of 1-based `i,j` edges, replacing kNN.
    #[arg(long)]
    pub row_edges: Option<PathBuf>,
    #[arg(long)]
    pub col_edges: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "snowflake")]
    pub penalty: PenaltyArg,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol_outer: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub tol_inner: f64,
    #[arg(long, default_value_t = 100)]
    pub max_outer: usize,
    #[arg(long, default_value_t = 2000)]
    pub max_inner: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub fuse_tol: f64,
}

impl ModelArgs {
    fn penalty(&self) -> Result<Penalty> {
        match self.penalty {
            PenaltyArg::Snowflake => Penalty::snowflake(self.epsilon),
            PenaltyArg::Linear => Ok(Penalty::Linear),
        }
    }

    fn solver(&self) -> Result<SolverConfig> {
        let cfg = SolverConfig {
            tol_outer: self.tol_outer,
            tol_inner: self.tol_inner,
            max_outer: self.max_outer,
            max_inner: self.max_inner,
            tol_step: None,
            fuse_tol: self.fuse_tol,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn graph(&self, x: &ObservedMatrix, mode: Mode) -> Result<crate::graph::NeighborGraph> {
        let (file, k) = match mode {
            Mode::Rows => (&self.row_edges, self.k_rows),
            Mode::Columns => (&self.col_edges, self.k_cols),
        };
        match file {
            Some(p) => read_edges(p, x.node_count(mode)),
            None => knn_graph(x, mode, k.unwrap_or_else(|| default_k(x.node_count(mode)))),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Matrix file with `NA` for missing entries. Alternatively use the
    /// generator flags.
    #[arg(long, conflicts_with = "variant")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub header: bool,
    #[command(flatten)]
    pub generator: GeneratorArgs,
    /// Additionally hide this fraction of the entries.
    #[arg(long)]
    pub fraction: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub mask_seed: u64,
}

impl InputArgs {
    fn load(&self) -> Result<ObservedMatrix> {
        let x = match (&self.input, self.generator.spec()) {
            (Some(p), _) => read_observed(p, self.header)?,
            (None, Some(spec)) => ObservedMatrix::fully_observed(generate(&spec)?.x)?,
            (None, None) => return Err(Error::InvalidArgument("either --input or --variant is required".into())),
        };
        match self.fraction {
            None => Ok(x),
            Some(f) => {
                if !x.is_complete() {
                    return Err(Error::InvalidArgument("--fraction requires a complete input matrix".into()));
                }
                apply_mask(x.values(), &MaskSpec::new(f, self.mask_seed)?)
            }
        }
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Row scale exponent: `γ_r = 2^l`.
    #[arg(long, allow_hyphen_values = true)]
    pub l: i32,
    /// Column scale exponent: `γ_c = 2^k`.
    #[arg(long, allow_hyphen_values = true)]
    pub k: i32,
    #[command(flatten)]
    pub out: OutDir,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = -4, allow_hyphen_values = true)]
    pub l0: i32,
    #[arg(long, default_value_t = -4, allow_hyphen_values = true)]
    pub k0: i32,
    #[arg(long, default_value_t = 20, allow_hyphen_values = true)]
    pub l_max: i32,
    #[arg(long, default_value_t = 20, allow_hyphen_values = true)]
    pub k_max: i32,
    #[arg(long, default_value_t = DEFAULT_ALPHA, allow_hyphen_values = true)]
    pub alpha: f64,
    /// Embedding dimension.
    #[arg(long, default_value_t = DEFAULT_DIMENSION)]
    pub dim: usize,
    /// Solve every grid cell from scratch.
    #[arg(long)]
    pub no_warm_start: bool,
    /// Also write diffusion maps of the masked-distance matrices.
    #[arg(long)]
    pub baseline: bool,
    #[command(flatten)]
    pub out: OutDir,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Embedding matrix, one row per node.
    #[arg(long)]
    pub embedding: PathBuf,
    /// Ground truth: a dataset metadata sidecar, or one label per line.
    #[arg(long)]
    pub truth: PathBuf,
    /// Which nodes of a metadata sidecar to score.
    #[arg(long, value_enum, default_value = "rows")]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 3)]
    pub clusters: usize,
    /// Comma-separated k-means seeds.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub seeds: Vec<u64>,
    #[arg(long, default_value_t = DEFAULT_RESTARTS)]
    pub restarts: usize,
    #[arg(long, default_value = "comanifold")]
    pub method: String,
    #[arg(long, default_value_t = 0.0)]
    pub missing_fraction: f64,
    /// Report file; stdout if omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Rows,
    Columns,
}

fn is_validation(e: &Error) -> bool {
    matches!(
        e.root(),
        Error::DimensionMismatch { .. }
            | Error::EmptyMask
            | Error::InvalidArgument(_)
            | Error::InfeasibleMask { .. }
            | Error::IsolatedNode(_)
            | Error::Disconnected { .. }
            | Error::Parse { .. }
    )
}

pub fn exit_code(e: &Error) -> i32 {
    if is_validation(e) {
        EXIT_INVALID
    } else {
        EXIT_RUNTIME
    }
}

const SUBCOMMANDS: [&str; 5] = ["generate", "mask", "solve", "embed", "eval"];

/// Splices `--key value` pairs from the config file right after the
/// subcommand name, so that later command-line flags override them.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let pos = args.iter().position(|a| a == "--config");
    let inline = args.iter().position(|a| a.to_str().is_some_and(|s| s.starts_with("--config=")));
    let path = match (pos, inline) {
        (Some(p), _) => match args.get(p + 1) {
            Some(v) => PathBuf::from(v),
            None => return Ok(args),
        },
        (None, Some(p)) => PathBuf::from(&args[p].to_str().expect("checked above")["--config=".len()..]),
        (None, None) => return Ok(args),
    };
    let entries = crate::io::read_key_values(&path)?;
    let Some(sub) = args.iter().position(|a| a.to_str().is_some_and(|s| SUBCOMMANDS.contains(&s))) else {
        return Ok(args);
    };
    let mut extra = Vec::new();
    for (k, v) in entries {
        let flag = format!("--{}", k.replace('_', "-"));
        match v.as_str() {
            "true" => extra.push(OsString::from(flag)),
            "false" => {}
            _ => {
                extra.push(OsString::from(flag));
                extra.push(OsString::from(v));
            }
        }
    }
    let mut out = args[..=sub].to_vec();
    out.extend(extra);
    out.extend_from_slice(&args[sub + 1..]);
    Ok(out)
}

fn check_out_dir(dir: &Path) -> Result<()> {
    if dir.is_dir() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("output directory {} does not exist", dir.display())))
    }
}

fn check_input(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("input file {} does not exist", path.display())))
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INVALID;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if cli.verbose {
        let _ = env_logger::Builder::new().filter_level(log::LevelFilter::Info).is_test(false).try_init();
    }
    if let Some(t) = cli.threads {
        if t < 1 {
            eprintln!("error: --threads must be at least 1");
            return EXIT_INVALID;
        }
        // a pool may already exist when called repeatedly in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    match execute(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn execute(cmd: &Command) -> Result<()> {
    match cmd {
        Command::Generate(a) => cmd_generate(a),
        Command::Mask(a) => cmd_mask(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Embed(a) => cmd_embed(a),
        Command::Eval(a) => cmd_eval(a),
    }
}

fn cmd_generate(a: &GenerateArgs) -> Result<()> {
    check_out_dir(&a.out.out_dir)?;
    let spec = a
        .generator
        .spec()
        .ok_or_else(|| Error::InvalidArgument("--variant is required".into()))?;
    let data = generate(&spec)?;
    let name = a.name.clone().unwrap_or_else(|| spec.variant.to_string());
    let dir = &a.out.out_dir;
    write_dense(&dir.join(format!("{name}.csv")), &data.x, None)?;
    write_text_lines(&dir.join(format!("{name}_meta.csv")), &data.metadata_lines())?;
    info!("wrote {name}.csv and {name}_meta.csv to {}", dir.display());
    Ok(())
}

fn cmd_mask(a: &MaskArgs) -> Result<()> {
    check_input(&a.input)?;
    check_out_dir(&a.out.out_dir)?;
    let values = read_dense(&a.input, a.header)?;
    let x = apply_mask(&values, &MaskSpec::new(a.fraction, a.seed)?)?;
    write_observed(&a.out.out_dir.join(format!("{}.csv", a.name)), &x, None)
}

fn validate_input(input: &InputArgs, model: &ModelArgs, out: &OutDir) -> Result<()> {
    check_out_dir(&out.out_dir)?;
    for p in [&input.input, &model.row_edges, &model.col_edges].into_iter().flatten() {
        check_input(p)?;
    }
    Ok(())
}

fn cmd_solve(a: &SolveArgs) -> Result<()> {
    validate_input(&a.input, &a.model, &a.out)?;
    let x = a.input.load()?;
    let penalty = a.model.penalty()?;
    let cfg = a.model.solver()?;
    let graphs = FusionGraphs::new(a.model.graph(&x, Mode::Rows)?, a.model.graph(&x, Mode::Columns)?)?;
    let res = co_cluster_missing(&x, Gammas::dyadic(a.l, a.k), &graphs, &penalty, &cfg, None)?;
    let dir = &a.out.out_dir;
    write_dense(&dir.join("estimate.csv"), &res.u, None)?;
    write_dense(&dir.join("filled.csv"), &res.x_filled, None)?;
    let mut trace = vec!["iter,objective,n_r,n_c".to_string()];
    trace.extend(res.trace_lines());
    write_text_lines(&dir.join("trace.csv"), &trace)?;
    let labels = |l: &[usize]| l.iter().map(|v| v.to_string()).collect::<Vec<_>>();
    write_text_lines(&dir.join("row_clusters.txt"), &labels(&res.row_labels))?;
    write_text_lines(&dir.join("col_clusters.txt"), &labels(&res.col_labels))?;
    write_key_values(
        &dir.join("solve_summary.txt"),
        &[
            kv("l", a.l),
            kv("k", a.k),
            kv("n_r", res.n_r),
            kv("n_c", res.n_c),
            kv("objective", format_number(res.objective())),
            kv("outer_iterations", res.outer_iters),
            kv("inner_iterations", res.inner_iters),
            kv("converged", res.converged),
        ],
    )
}

fn kv(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

fn write_embedding(dir: &Path, name: &str, e: &DiffusionEmbedding) -> Result<()> {
    write_dense(&dir.join(name), &e.coordinates, None)?;
    let eig: Vec<String> = e.eigenvalues.iter().map(|&v| format_number(v)).collect();
    write_text_lines(&dir.join(format!("{name}{}", files::EIGENVALUE_SUFFIX)), &[eig.join(",")])
}

fn cmd_embed(a: &EmbedArgs) -> Result<()> {
    validate_input(&a.input, &a.model, &a.out)?;
    let x = a.input.load()?;
    let grid = ScaleGrid { l0: a.l0, k0: a.k0, l_max: a.l_max, k_max: a.k_max };
    grid.validate()?;
    let cfg = PipelineConfig {
        k_rows: a.model.k_rows,
        k_cols: a.model.k_cols,
        row_graph: a.model.row_edges.as_ref().map(|p| read_edges(p, x.nrows())).transpose()?,
        col_graph: a.model.col_edges.as_ref().map(|p| read_edges(p, x.ncols())).transpose()?,
        penalty: a.model.penalty()?,
        grid,
        solver: a.model.solver()?,
        sweep: SweepOptions { warm_start: !a.no_warm_start },
        alpha: a.alpha,
        dim: a.dim,
    };
    let out = run_pipeline(&x, &cfg)?;
    let dir = &a.out.out_dir;

    write_observed(&dir.join(files::OBSERVED), &x, None)?;
    write_edges(&dir.join(files::ROW_GRAPH), &out.row_graph)?;
    write_edges(&dir.join(files::COL_GRAPH), &out.col_graph)?;
    write_text_lines(&dir.join(files::MANIFEST), &out.sweep.manifest_lines())?;
    write_dense(&dir.join(files::ROW_DISTANCES), &out.distances.row_dist, None)?;
    write_dense(&dir.join(files::COL_DISTANCES), &out.distances.col_dist, None)?;
    write_embedding(dir, files::ROW_EMBEDDING, &out.row_embedding)?;
    write_embedding(dir, files::COL_EMBEDDING, &out.col_embedding)?;
    if a.baseline {
        let rb = baseline_diffusion(&x, Mode::Rows, a.dim).map_err(|e| stage("baseline", e))?;
        let cb = baseline_diffusion(&x, Mode::Columns, a.dim).map_err(|e| stage("baseline", e))?;
        write_embedding(dir, files::ROW_BASELINE, &rb)?;
        write_embedding(dir, files::COL_BASELINE, &cb)?;
    }

    let last = out.sweep.cells.last().expect("a sweep runs at least one cell");
    let eig = |e: &DiffusionEmbedding| e.eigenvalues.iter().map(|&v| format_number(v)).collect::<Vec<_>>().join(",");
    let sigma = |e: &DiffusionEmbedding| format_number(e.sigma.expect("embedded from distances"));
    write_key_values(
        &dir.join(files::SUMMARY),
        &[
            kv("rows", x.nrows()),
            kv("cols", x.ncols()),
            kv("missing_fraction", format_number(x.missing_fraction())),
            kv("row_edges", out.row_graph.edge_count()),
            kv("col_edges", out.col_graph.edge_count()),
            kv("cells", out.sweep.cells.len()),
            kv("outer_iterations", out.sweep.total_outer_iters()),
            kv("inner_iterations", out.sweep.total_inner_iters()),
            kv("cap_reached", out.sweep.cap_reached),
            kv("final_l", last.l),
            kv("final_k", last.k),
            kv("final_n_r", last.n_r),
            kv("final_n_c", last.n_c),
            kv("final_objective", format_number(last.objective)),
            kv("alpha", format_number(a.alpha)),
            kv("dim", a.dim),
            kv("row_sigma", sigma(&out.row_embedding)),
            kv("col_sigma", sigma(&out.col_embedding)),
            kv("row_eigenvalues", eig(&out.row_embedding)),
            kv("col_eigenvalues", eig(&out.col_embedding)),
        ],
    )
}

fn stage(name: &'static str, e: Error) -> Error {
    Error::Stage { stage: name, source: Box::new(e) }
}

/// Reads labels from a metadata sidecar (`mode,index,label,...` header) or
/// from a file with one integer label per line.
pub fn read_truth(path: &Path, mode: Mode) -> Result<Labeling> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parse = |line: usize, tok: &str| {
        tok.trim().parse::<usize>().map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg: format!("label {tok:?}: {e}"),
        })
    };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()).peekable();
    let mut labels = Vec::new();
    if lines.peek().is_some_and(|(_, l)| l.starts_with("mode,")) {
        lines.next();
        let want = match mode {
            Mode::Rows => "row",
            Mode::Columns => "column",
        };
        for (i, l) in lines {
            let mut f = l.split(',');
            if f.next() == Some(want) {
                let label = f.nth(1).unwrap_or("");
                labels.push(parse(i + 1, label)?);
            }
        }
        if labels.is_empty() {
            return Err(Error::InvalidArgument(format!("no {want} labels in {}", path.display())));
        }
    } else {
        for (i, l) in lines {
            labels.push(parse(i + 1, l)?);
        }
    }
    Ok(Labeling::new(&labels))
}

/// k-means (one run per seed) on `points`, scored against `truth`.
pub fn score_embedding(
    points: &nalgebra::DMatrix<f64>,
    truth: &Labeling,
    clusters: usize,
    seeds: &[u64],
    restarts: usize,
    method: &str,
    missing_fraction: f64,
) -> Result<Vec<ScoreLine>> {
    if points.nrows() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} nodes", truth.len()),
            got: format!("{} nodes", points.nrows()),
        });
    }
    seeds
        .iter()
        .map(|&seed| {
            let labels = kmeans(points, clusters, seed, restarts)?;
            Ok(ScoreLine {
                method: method.to_string(),
                missing_fraction,
                seed,
                ari: adjusted_rand_index(&labels, truth)?,
            })
        })
        .collect()
}

/// Report lines: header, one line per seed, then the mean with seed `mean`.
pub fn report_lines(scores: &[ScoreLine]) -> Vec<String> {
    let mut out = vec![ScoreLine::HEADER.to_string()];
    out.extend(scores.iter().map(ScoreLine::to_line));
    if let (Some(mean), Some(first)) = (mean_ari(scores), scores.first()) {
        out.push(format!("{},{},mean,{}", first.method, format_number(first.missing_fraction), format_number(mean)));
    }
    out
}

fn cmd_eval(a: &EvalArgs) -> Result<()> {
    check_input(&a.embedding)?;
    check_input(&a.truth)?;
    let mode = match a.mode {
        ModeArg::Rows => Mode::Rows,
        ModeArg::Columns => Mode::Columns,
    };
    let points = read_dense(&a.embedding, false)?;
    let truth = read_truth(&a.truth, mode)?;
    let scores = score_embedding(&points, &truth, a.clusters, &a.seeds, a.restarts, &a.method, a.missing_fraction)?;
    let lines = report_lines(&scores);
    match &a.output {
        Some(p) => write_text_lines(p, &lines),
        None => {
            for l in lines {
                println!("{l}");
            }
            Ok(())
        }
    }
}
