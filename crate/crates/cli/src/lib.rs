//! Command-line front end: reads a system from a JSON config, runs one
//! command and writes CSV or JSON to `--out` (standard output by default).
//!
//! Exit codes: 0 success, 2 bad arguments or config, 3 a numeric certificate
//! or invariant failed, 4 a resource cap was hit.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Value};

use minkowski_core::conformal::{
    build_partition, conformal_factor, counterexample_report, eps0, image_avg_content, image_cesaro_mc,
    image_tube_volume, EngineParams,
};
use minkowski_core::content::{
    cesaro_report, default_nodes, dim_regression, gatzouras_avg_content, log_spaced, DEFAULT_T,
};
use minkowski_core::fmt::g12;
use minkowski_core::ifs::{moran_dimension, IfsSpec, MapDocument, Word};
use minkowski_core::lattice::{classify_lattice, DEFAULT_DEPTH, DEFAULT_TOL};
use minkowski_core::local::CylinderMeasureTable;
use minkowski_core::map_expr::ConformalMap;
use minkowski_core::tube_exact::{tube_profile, LineIfs, Provenance, TubeProfile};
use minkowski_core::tube_numeric::{
    grid_estimate, mc_estimate, LineGeometry, Method, SetGeometry, TubeEstimate, DEFAULT_CELL_CAP,
};
use minkowski_core::{BoxNd, Error};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CERTIFICATE: i32 = 3;
pub const EXIT_RESOURCE: i32 = 4;

/// Bundled example systems.
pub const EXAMPLES: [(&str, &str); 6] = [
    ("cantor3", include_str!("../configs/cantor3.json")),
    ("c1", include_str!("../configs/c1.json")),
    ("c2", include_str!("../configs/c2.json")),
    ("nonlattice_2_5", include_str!("../configs/nonlattice_2_5.json")),
    ("triangle_quarter", include_str!("../configs/triangle_quarter.json")),
    ("devil", include_str!("../configs/devil.json")),
];

#[derive(Parser, Debug)]
#[command(name = "minkowski", version, about = "Minkowski contents of self-similar sets and their conformal images")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON config with `dim`, `maps` and optionally `map`, `alpha`, `holder`.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Bundled config: cantor3, c1, c2, nonlattice_2_5, triangle_quarter, devil.
    #[arg(long, global = true)]
    pub example: Option<String>,
    /// Map text, overriding the config's `map`.
    #[arg(long, global = true)]
    pub map: Option<String>,
    /// Output file, written atomically (default: standard output).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Tube-volume engine; exact on the line, grid elsewhere by default.
    #[arg(long, global = true, value_enum)]
    pub engine: Option<Engine>,
    /// Grid cells per axis.
    #[arg(long, global = true, default_value_t = 4096)]
    pub resolution: usize,
    /// Monte-Carlo samples per tube volume.
    #[arg(long, global = true, default_value_t = 100_000)]
    pub samples: u64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Engine {
    Exact,
    Grid,
    Mc,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Moran dimension and a log-log regression estimate.
    Dim {
        #[arg(long)]
        eps_min: Option<f64>,
        #[arg(long)]
        eps_max: Option<f64>,
        #[arg(long, default_value_t = 100)]
        points: usize,
    },
    /// Lattice or nonlattice verdict for the ratios.
    Classify {
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_DEPTH)]
        depth: usize,
    },
    /// Tube volume at one ε.
    Tube {
        #[arg(long)]
        eps: f64,
    },
    /// ψ-profile CSV over `[t_min, t_max]`, `t = −ln ε`.
    Scan {
        #[arg(long)]
        t_min: f64,
        #[arg(long)]
        t_max: f64,
        #[arg(long, default_value_t = 201)]
        points: usize,
    },
    /// Average Minkowski content by the Gatzouras formula and by Cesàro averaging.
    Content {
        /// Cesàro cutoff (default 1e-8 on the line, 1e-2 in the plane).
        #[arg(long)]
        t: Option<f64>,
        /// Quadrature nodes (default: 128 per decade of the cutoff).
        #[arg(long)]
        nodes: Option<usize>,
    },
    /// Cylinder measure table.
    Local {
        /// Comma-separated words, default all words of length 1 and 2.
        #[arg(long)]
        words: Option<String>,
        #[arg(long, default_value_t = DEFAULT_T)]
        t: f64,
        #[arg(long, default_value_t = 0.02)]
        delta_dist: f64,
    },
    /// Enclosure of the conformal factor.
    Factor {
        #[arg(long, default_value_t = 0.02)]
        delta_dist: f64,
    },
    /// Image content with a Monte-Carlo Cesàro cross-check.
    ImageContent {
        #[arg(long, default_value_t = 0.02)]
        delta_dist: f64,
        #[arg(long, default_value_t = DEFAULT_T)]
        t: f64,
        #[arg(long, default_value_t = 40)]
        nodes: usize,
        #[arg(long)]
        no_check: bool,
    },
    /// Paired ψ-profiles of the Cantor set and its devil's staircase image.
    Counterexample {
        #[arg(long)]
        t_min: Option<f64>,
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long, default_value_t = 2001)]
        points: usize,
    },
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    dim: usize,
    maps: Vec<MapDocument>,
    #[serde(default)]
    map: Option<String>,
    /// Hölder exponent of `|g'|` (default 1).
    #[serde(default)]
    alpha: Option<f64>,
    /// Hölder constant of `|g'|`; estimated from samples when absent.
    #[serde(default)]
    holder: Option<f64>,
}

struct MapSettings {
    text: Option<String>,
    alpha: Option<f64>,
    holder: Option<f64>,
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn config(msg: impl Into<String>) -> Self {
        CliError { code: EXIT_CONFIG, message: msg.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidInput(_) | Error::Syntax { .. } | Error::Domain(_) => EXIT_CONFIG,
            Error::ResourceLimit { .. } => EXIT_RESOURCE,
            Error::NumericFailure(_)
            | Error::SscViolation(_)
            | Error::WindowViolation { .. }
            | Error::Certificate(_) => EXIT_CERTIFICATE,
        };
        CliError { code, message: e.to_string() }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

struct Setup {
    ifs: IfsSpec,
    map: Option<ConformalMap>,
    engine: Method,
    params: EngineParams,
}

fn load_config(cli: &Cli) -> CliResult<(IfsSpec, MapSettings)> {
    let text = match (&cli.config, &cli.example) {
        (Some(_), Some(_)) => return Err(CliError::config("give either --config or --example, not both")),
        (Some(p), None) => {
            fs::read_to_string(p).map_err(|e| CliError::config(format!("cannot read {}: {e}", p.display())))?
        }
        (None, Some(name)) => EXAMPLES
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t.to_string())
            .ok_or_else(|| CliError::config(format!("unknown example '{name}'")))?,
        (None, None) => return Err(CliError::config("a system is required: --config PATH or --example NAME")),
    };
    let cfg: RunConfig = serde_json::from_str(&text).map_err(|e| CliError::config(format!("config: {e}")))?;
    let ifs = IfsSpec::from_documents(cfg.dim, &cfg.maps)?;
    let settings = MapSettings { text: cli.map.clone().or(cfg.map), alpha: cfg.alpha, holder: cfg.holder };
    Ok((ifs, settings))
}

fn setup(cli: &Cli) -> CliResult<Setup> {
    let (ifs, settings) = load_config(cli)?;
    let map = match settings.text {
        Some(t) => {
            let mut g = ConformalMap::parse(&t, ifs.hull().inflate(1.0))?;
            if let Some(a) = settings.alpha {
                g = g.with_alpha(a)?;
            }
            if let Some(l) = settings.holder {
                g = g.with_holder(l)?;
            }
            Some(g)
        }
        None => None,
    };
    let engine = match cli.engine {
        Some(Engine::Exact) => Method::Exact,
        Some(Engine::Grid) => Method::Grid,
        Some(Engine::Mc) => Method::Mc,
        None if ifs.dim() == 1 => Method::Exact,
        None => Method::Grid,
    };
    if engine == Method::Exact && ifs.dim() != 1 {
        return Err(CliError::config("the exact engine is one-dimensional; use --engine grid or mc"));
    }
    if cli.resolution < 2 {
        return Err(CliError::config("--resolution must be at least 2"));
    }
    if cli.samples < 100 {
        return Err(CliError::config("--samples must be at least 100"));
    }
    if cli.threads == Some(0) {
        return Err(CliError::config("--threads must be positive"));
    }
    let params = EngineParams { resolution: cli.resolution, samples: cli.samples, seed: cli.seed };
    Ok(Setup { ifs, map, engine, params })
}

impl Setup {
    /// `λ` of `K_ε`, or of `g(K)_ε` when a map is set.
    fn tube(&self, eps: f64, seed: u64) -> minkowski_core::Result<TubeEstimate> {
        let params = EngineParams { seed, ..self.params };
        if let Some(g) = &self.map {
            return image_tube_volume(&self.ifs, g, eps, self.engine, &params);
        }
        let region = |b: BoxNd| b.inflate(eps);
        match (self.engine, self.ifs.dim()) {
            (Method::Exact, _) => Ok(TubeEstimate::exact(eps, LineIfs::new(&self.ifs)?.tube_volume(eps)?)),
            (Method::Grid, 1) => {
                let g = LineGeometry::new(&self.ifs)?;
                grid_estimate(&g, eps, params.resolution, &region(self.ifs.hull().clone()), DEFAULT_CELL_CAP)
            }
            (Method::Grid, _) => {
                let g = SetGeometry::new(&self.ifs);
                grid_estimate(&g, eps, params.resolution, &region(self.ifs.hull().clone()), DEFAULT_CELL_CAP)
            }
            (Method::Mc, 1) => mc_estimate(&LineGeometry::new(&self.ifs)?, eps, params.samples, seed),
            (Method::Mc, _) => mc_estimate(&SetGeometry::new(&self.ifs), eps, params.samples, seed),
        }
    }

    fn tube_value(&self, eps: f64) -> minkowski_core::Result<f64> {
        let seed = minkowski_core::conformal::node_seed(self.params.seed, eps);
        Ok(self.tube(eps, seed)?.value)
    }

    fn delta(&self) -> minkowski_core::Result<f64> {
        moran_dimension(&self.ifs.ratios())
    }

    fn provenance(&self) -> Provenance {
        match self.engine {
            Method::Exact => Provenance::Exact,
            Method::Grid => Provenance::Grid,
            Method::Mc => Provenance::MonteCarlo,
        }
    }

    fn need_map(&self) -> CliResult<&ConformalMap> {
        self.map.as_ref().ok_or_else(|| CliError::config("this command needs a map (config \"map\" or --map)"))
    }

    fn line(&self) -> CliResult<LineIfs> {
        if self.ifs.dim() != 1 {
            return Err(CliError::config("this command needs a one-dimensional system"));
        }
        Ok(LineIfs::new(&self.ifs)?)
    }
}

/// Rounds every float to 12 significant digits.
fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(f64::NAN);
            g12(x).parse::<f64>().ok().and_then(serde_json::Number::from_f64).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

fn json_text(v: Value) -> String {
    let mut s = serde_json::to_string_pretty(&round_json(v)).expect("JSON serialization");
    s.push('\n');
    s
}

fn check_positive(name: &str, x: f64) -> CliResult<()> {
    if x.is_nan() || x <= 0.0 || !x.is_finite() {
        return Err(CliError::config(format!("--{name} must be positive and finite, got {x}")));
    }
    Ok(())
}

fn check_cutoff(t: f64) -> CliResult<()> {
    if !(t > 0.0 && t < 1.0) {
        return Err(CliError::config(format!("--t must lie in (0,1), got {t}")));
    }
    Ok(())
}

fn parse_words(text: Option<&str>, n: usize) -> CliResult<Vec<Word>> {
    match text {
        Some(t) => t.split(',').map(|w| Word::parse(w.trim(), n).map_err(CliError::from)).collect(),
        None => {
            let mut out: Vec<Word> = (0..n).map(Word::letter).collect();
            for i in 0..n {
                for j in 0..n {
                    out.push(Word::letter(i).child(j));
                }
            }
            Ok(out)
        }
    }
}

/// Output text of the command, plus a summary line for standard error.
fn execute(cli: &Cli, s: &Setup) -> CliResult<(String, Option<String>)> {
    match &cli.command {
        Command::Dim { eps_min, eps_max, points } => {
            let ratios = s.ifs.ratios();
            let delta = s.delta()?;
            let residual = ratios.iter().map(|r| r.powf(delta)).sum::<f64>() - 1.0;
            let (lo, hi) = if s.engine == Method::Exact { (1e-12, 1e-3) } else { (1e-2, 1e-1) };
            let (lo, hi) = (eps_min.unwrap_or(lo), eps_max.unwrap_or(hi));
            check_positive("eps-min", lo)?;
            if hi.is_nan() || hi <= lo || *points < 10 {
                return Err(CliError::config("regression needs eps-min < eps-max and at least 10 points"));
            }
            let eps = log_spaced(lo, hi, *points);
            let regression = dim_regression(&|e| s.tube_value(e), s.ifs.dim(), &eps)?;
            let out = json!({
                "delta": delta,
                "residual": residual,
                "regression": regression,
                "engine": s.engine.name(),
                "eps_min": lo,
                "eps_max": hi,
                "points": points,
            });
            Ok((json_text(out), None))
        }
        Command::Classify { tol, depth } => {
            check_positive("tol", *tol)?;
            let verdict = classify_lattice(&s.ifs.ratios(), *tol, *depth);
            Ok((json_text(serde_json::to_value(verdict).expect("lattice verdict")), None))
        }
        Command::Tube { eps } => {
            check_positive("eps", *eps)?;
            let est = s.tube(*eps, s.params.seed)?;
            Ok((format!("{}\n{}\n", TubeEstimate::csv_header(), est.csv_row()), None))
        }
        Command::Scan { t_min, t_max, points } => {
            let profile = if s.engine == Method::Exact && s.map.is_none() {
                tube_profile(&s.line()?, *t_min, *t_max, *points)?
            } else {
                let tube = |e: f64| s.tube_value(e);
                TubeProfile::from_fn(&tube, s.delta()?, s.ifs.dim(), *t_min, *t_max, *points, s.provenance())?
            };
            let mut buf = Vec::new();
            profile.write_csv(&mut buf).expect("write to memory");
            Ok((String::from_utf8(buf).expect("utf-8"), None))
        }
        Command::Content { t, nodes } => {
            let t = t.unwrap_or(if s.ifs.dim() == 1 { DEFAULT_T } else { 1e-2 });
            check_cutoff(t)?;
            let nodes = nodes.unwrap_or_else(|| default_nodes(t));
            let gatzouras = if s.ifs.dim() == 1 && s.map.is_none() {
                serde_json::to_value(gatzouras_avg_content(&s.line()?)?).expect("report")
            } else {
                Value::Null
            };
            let tube = |e: f64| s.tube_value(e);
            let cesaro = cesaro_report(&tube, s.delta()?, s.ifs.dim(), t, nodes)?;
            let out = json!({
                "gatzouras_exact": gatzouras,
                "cesaro_numeric": serde_json::to_value(cesaro).expect("report"),
                "cesaro_t": t,
                "cesaro_nodes": nodes,
                "engine": s.engine.name(),
            });
            Ok((json_text(out), None))
        }
        Command::Local { words, t, delta_dist } => {
            check_cutoff(*t)?;
            check_positive("delta-dist", *delta_dist)?;
            let line = s.line()?;
            let content = gatzouras_avg_content(&line)?.avg_content;
            let words = parse_words(words.as_deref(), s.ifs.len())?;
            let table = CylinderMeasureTable::build(&line, content, &words, s.map.as_ref(), *delta_dist, *t)?;
            let mut buf = Vec::new();
            table.write_csv(&mut buf).expect("write to memory");
            Ok((String::from_utf8(buf).expect("utf-8"), None))
        }
        Command::Factor { delta_dist } => {
            check_positive("delta-dist", *delta_dist)?;
            let g = s.need_map()?;
            let f = conformal_factor(&s.ifs, g, *delta_dist)?;
            let part = build_partition(&s.ifs, g, *delta_dist, 0.0)?;
            let e0 = match eps0(&s.ifs, g, *delta_dist) {
                Ok(v) => Value::from(v),
                Err(Error::SscViolation(_)) => Value::Null,
                Err(e) => return Err(e.into()),
            };
            let out = json!({
                "lo": f.lo,
                "hi": f.hi,
                "mid": f.mid(),
                "width": f.width(),
                "delta_dist": delta_dist,
                "words": part.words.len(),
                "b": part.b,
                "s_g": part.s_g,
                "holder_l": part.holder_l,
                "alpha": part.alpha,
                "max_ratio": part.max_ratio,
                "eps0": e0,
            });
            Ok((json_text(out), None))
        }
        Command::ImageContent { delta_dist, t, nodes, no_check } => {
            check_positive("delta-dist", *delta_dist)?;
            check_cutoff(*t)?;
            let g = s.need_map()?;
            let r = image_avg_content(&s.line()?, g, *delta_dist)?;
            let mut out = json!({
                "avg_content": r.avg_content,
                "half_width": r.half_width,
                "factor_lo": r.factor_lo,
                "factor_hi": r.factor_hi,
                "certified": r.certified,
                "base_content": r.base.avg_content,
                "delta": r.base.delta,
            });
            let mut summary = None;
            if !no_check {
                let mc = image_cesaro_mc(&s.ifs, g, *t, *nodes, s.params.samples, s.params.seed)?;
                let rel = mc / r.avg_content - 1.0;
                out["cesaro_mc"] = Value::from(mc);
                out["cesaro_t"] = Value::from(*t);
                out["cesaro_nodes"] = Value::from(*nodes);
                out["mc_samples"] = Value::from(s.params.samples);
                out["rel_diff"] = Value::from(rel);
                summary = Some(format!(
                    "image content {} vs Monte-Carlo Cesàro {} (relative {})",
                    g12(r.avg_content),
                    g12(mc),
                    g12(rel)
                ));
            }
            Ok((json_text(out), summary))
        }
        Command::Counterexample { .. } => counterexample(cli),
    }
}

/// The Cantor set and its Devil's-staircase image; needs no config.
fn counterexample(cli: &Cli) -> CliResult<(String, Option<String>)> {
    let Command::Counterexample { t_min, t_max, points } = &cli.command else {
        unreachable!("counterexample called for another command")
    };
    let t_min = t_min.unwrap_or(6f64.ln());
    let t_max = t_max.unwrap_or(t_min + 5.0 * 3f64.ln());
    let r = counterexample_report(t_min, t_max, *points)?;
    let mut buf = Vec::new();
    r.write_csv(&mut buf).expect("write to memory");
    let summary = format!(
        "amplitude psi_K = {}, amplitude psi_F = {}, ratio = {}",
        g12(r.amplitude_k),
        g12(r.amplitude_f),
        g12(r.ratio())
    );
    Ok((String::from_utf8(buf).expect("utf-8"), Some(summary)))
}

/// Writes `text` to `path` through a temporary file, so a failed run never
/// leaves a partial artifact.
fn write_atomic(path: &Path, text: &str) -> std::io::Result<()> {
    let tmp = path.with_extension("partial");
    fs::write(&tmp, text)?;
    fs::rename(&tmp, path)
}

/// Runs the command line `args` (including the program name).
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = if code == 0 { write!(stdout, "{e}") } else { write!(stderr, "{e}") };
            return code;
        }
    };
    match run_cli(&cli) {
        Ok((text, summary)) => {
            if let Some(s) = summary {
                let _ = writeln!(stderr, "{s}");
            }
            match &cli.out {
                Some(p) => {
                    if let Err(e) = write_atomic(p, &text) {
                        let _ = writeln!(stderr, "error: cannot write {}: {e}", p.display());
                        return EXIT_CONFIG;
                    }
                }
                None => {
                    let _ = stdout.write_all(text.as_bytes());
                }
            }
            0
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message);
            e.code
        }
    }
}

/// Executes a parsed command, returning its artifact text and summary.
pub fn run_cli(cli: &Cli) -> CliResult<(String, Option<String>)> {
    let go = || match cli.command {
        Command::Counterexample { .. } => counterexample(cli),
        _ => execute(cli, &setup(cli)?),
    };
    match cli.threads {
        Some(0) => Err(CliError::config("--threads must be positive")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::config(format!("thread pool: {e}")))?
            .install(go),
        None => go(),
    }
}
