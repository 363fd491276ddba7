//! `earthquake-lab`: infinitesimal earthquake extensions of circle fields.

mod descriptor;
mod output;
mod verify;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use earthquake_core::earthquake::{EarthquakeField, EdgePolicy, QuakeSide};
use earthquake_core::envelope::{BuildOptions, EnvelopeError, EnvelopePair};
use earthquake_core::field::{CircleField, FieldError};
use earthquake_core::lamination::MeasuredLamination;
use earthquake_core::mink::KleinPoint;
use earthquake_core::norms::{verify_th2_side, width, NormError, NormParams, NormReport};
use serde::Serialize;
use thiserror::Error;

use descriptor::{DescriptorError, FieldSpecDocument};
use output::side_name;

const EXIT_OK: u8 = 0;
const EXIT_VERIFY_FAIL: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_DEGENERATE: u8 = 3;
const EXIT_INEQUALITY: u8 = 4;

const EXIT_CODES_HELP: &str = "\
Exit codes:
  0  success
  1  verify: at least one suite failed
  2  parse error (arguments, unreadable or invalid field descriptor, output not writable)
  3  degenerate input (no bending with --require-bending, discontinuous field for norms, ...)
  4  norms: a comparison inequality is violated beyond the slack

Environment:
  EARTHQUAKE_LAB_THREADS  caps the number of worker threads";

#[derive(Parser, Debug)]
#[command(name = "earthquake-lab", version, about = "Earthquake extensions of vector fields on the circle", after_help = EXIT_CODES_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate the earthquake extension on a polar grid (CSV).
    Extend { spec: PathBuf },
    /// Bending lamination of the envelope (JSON).
    Lamination { spec: PathBuf },
    /// Width, cross-ratio and Thurston norm estimates with inequality verdicts (JSON).
    Norms { spec: PathBuf },
    /// Lamination, earthquake arrows and width argmax (SVG).
    Render { spec: PathBuf },
    /// Run the invariant suites and print a pass/fail table.
    Verify {
        /// Flip the sign of every Killing evaluation (mutation smoke test).
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
}

#[derive(Args, Debug, Clone)]
struct RunArgs {
    /// Number of uniform envelope nodes [default: 4096, quick: 1024].
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = SideArg::Left)]
    side: SideArg,
    /// Angular resolution of the evaluation and width grids [default: 256, quick: 64].
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Cross-ratio candidates [default: 20000, quick: 2000].
    #[arg(long, global = true)]
    cr_samples: Option<usize>,
    /// Local refinement rounds [default: 5].
    #[arg(long, global = true)]
    refine_iters: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Relative slack of the inequality verdicts.
    #[arg(long, global = true, default_value_t = 0.05)]
    slack: f64,
    /// Reduced sample counts.
    #[arg(long, global = true)]
    quick: bool,
    /// Support plane on bending chords: medial, first, second or blend=S.
    #[arg(long, global = true, default_value = "medial")]
    policy: PolicyArg,
    /// Fail with exit code 3 when the envelope has no bending.
    #[arg(long, global = true)]
    require_bending: bool,
    /// Output file [default: stdout].
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SideArg {
    Left,
    Right,
    Both,
}

impl SideArg {
    fn sides(self) -> &'static [QuakeSide] {
        match self {
            SideArg::Left => &[QuakeSide::Left],
            SideArg::Right => &[QuakeSide::Right],
            SideArg::Both => &[QuakeSide::Left, QuakeSide::Right],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct PolicyArg(EdgePolicy);

impl FromStr for PolicyArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let policy = match s {
            "medial" => EdgePolicy::Medial,
            "first" => EdgePolicy::ExtremeFirst,
            "second" => EdgePolicy::ExtremeSecond,
            _ => {
                let t = s.strip_prefix("blend=").ok_or_else(|| format!("unknown policy '{s}'"))?;
                let t: f64 = t.parse().map_err(|_| format!("bad blend parameter '{t}'"))?;
                if !(0.0..=1.0).contains(&t) {
                    return Err(format!("blend parameter {t} outside [0, 1]"));
                }
                EdgePolicy::Blend(t)
            }
        };
        Ok(PolicyArg(policy))
    }
}

/// Resolved run configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub n: usize,
    pub grid_n: usize,
    pub cr_samples: usize,
    pub th_samples: usize,
    pub refine_iters: usize,
    pub seed: u64,
    pub delta: f64,
    pub quick: bool,
    pub policy: EdgePolicy,
    pub require_bending: bool,
    sides: &'static [QuakeSide],
}

impl RunConfig {
    fn resolve(a: &RunArgs) -> Result<Self, CliError> {
        let pick = |v: Option<usize>, full: usize, quick: usize| v.unwrap_or(if a.quick { quick } else { full });
        let cfg = RunConfig {
            n: pick(a.n, 4096, 1024),
            grid_n: pick(a.grid, 256, 64),
            cr_samples: pick(a.cr_samples, 20_000, 2_000),
            th_samples: if a.quick { 1024 } else { 4096 },
            refine_iters: pick(a.refine_iters, 5, 3),
            seed: a.seed,
            delta: a.slack,
            quick: a.quick,
            policy: a.policy.0,
            require_bending: a.require_bending,
            sides: a.side.sides(),
        };
        if cfg.n == 0 || cfg.grid_n == 0 || cfg.cr_samples == 0 {
            return Err(CliError::Parse("sizes must be positive".into()));
        }
        if !(cfg.delta.is_finite() && cfg.delta >= 0.0) {
            return Err(CliError::Parse("slack must be a non-negative number".into()));
        }
        Ok(cfg)
    }

    fn norm_params(&self) -> NormParams {
        NormParams {
            n: self.n,
            grid_n: self.grid_n,
            refine_iters: self.refine_iters,
            cr_samples: self.cr_samples,
            th_samples: self.th_samples,
            seed: self.seed,
            delta: self.delta,
        }
    }
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) => EXIT_PARSE,
            CliError::Degenerate(_) => EXIT_DEGENERATE,
        }
    }
}

impl From<DescriptorError> for CliError {
    fn from(e: DescriptorError) -> Self {
        CliError::Parse(e.to_string())
    }
}

impl From<EnvelopeError> for CliError {
    fn from(e: EnvelopeError) -> Self {
        match e {
            EnvelopeError::Field(FieldError::Invalid(_)) => CliError::Parse(e.to_string()),
            _ => CliError::Degenerate(e.to_string()),
        }
    }
}

impl From<NormError> for CliError {
    fn from(e: NormError) -> Self {
        match e {
            NormError::Envelope(e) => e.into(),
            other => CliError::Degenerate(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    let result = RunConfig::resolve(&cli.run).and_then(|cfg| run(&cli.command, &cfg, cli.run.out.as_deref()));
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("earthquake-lab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn configure_threads() {
    let Ok(v) = std::env::var("EARTHQUAKE_LAB_THREADS") else { return };
    match v.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            // only fails if a global pool already exists
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        _ => eprintln!("earthquake-lab: ignoring EARTHQUAKE_LAB_THREADS={v:?}"),
    }
}

fn run(cmd: &Command, cfg: &RunConfig, out: Option<&Path>) -> Result<u8, CliError> {
    match cmd {
        Command::Extend { spec } => cmd_extend(spec, cfg, out),
        Command::Lamination { spec } => cmd_lamination(spec, cfg, out),
        Command::Norms { spec } => cmd_norms(spec, cfg, out),
        Command::Render { spec } => cmd_render(spec, cfg, out),
        Command::Verify { inject_fault } => {
            let passed = verify::run_all(cfg, *inject_fault);
            Ok(if passed { EXIT_OK } else { EXIT_VERIFY_FAIL })
        }
    }
}

fn load_field(spec: &Path) -> Result<CircleField, CliError> {
    Ok(FieldSpecDocument::load(spec)?.to_field()?)
}

fn build_envelope(f: &CircleField, cfg: &RunConfig) -> Result<EnvelopePair, CliError> {
    let opts = BuildOptions { n: cfg.n, extra_nodes: Vec::new(), require_bending: cfg.require_bending };
    Ok(EnvelopePair::build_with(f, &opts)?)
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    let res = match out {
        Some(path) => std::fs::write(path, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    };
    res.map_err(|e| CliError::Parse(format!("cannot write output: {e}")))
}

fn cmd_extend(spec: &Path, cfg: &RunConfig, out: Option<&Path>) -> Result<u8, CliError> {
    let f = load_field(spec)?;
    let e = build_envelope(&f, cfg)?;
    let grid = output::polar_grid(cfg.grid_n);
    let policy = output::policy_name(cfg.policy);
    let mut csv = String::from("eta1,eta2,E1,E2,side,policy\n");
    for &side in cfg.sides {
        let quake = EarthquakeField::new(&e, side, cfg.policy);
        for &p in &grid {
            let v = quake.eval(p)?;
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                output::num(p.e1),
                output::num(p.e2),
                output::num(v[0]),
                output::num(v[1]),
                side_name(side),
                policy
            ));
        }
    }
    write_output(out, &csv)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct LeafDoc {
    a_theta: f64,
    b_theta: f64,
    weight: f64,
}

#[derive(Serialize)]
struct LaminationDoc {
    leaves: Vec<LeafDoc>,
    side: &'static str,
    #[serde(rename = "N")]
    n: usize,
}

fn lamination_doc(lam: &MeasuredLamination, side: QuakeSide, n: usize) -> LaminationDoc {
    let leaves = lam
        .leaves()
        .iter()
        .map(|l| LeafDoc { a_theta: l.geodesic.a.theta, b_theta: l.geodesic.b.theta, weight: l.weight })
        .collect();
    LaminationDoc { leaves, side: side_name(side), n }
}

#[derive(Serialize)]
struct BothSides<T> {
    left: T,
    right: T,
}

/// One document for a single side; `{"left": .., "right": ..}` for both.
fn per_side_json<T: Serialize>(mut docs: Vec<T>) -> String {
    let mut text = if docs.len() == 2 {
        let right = docs.pop().expect("two documents");
        let left = docs.pop().expect("two documents");
        serde_json::to_string_pretty(&BothSides { left, right })
    } else {
        serde_json::to_string_pretty(&docs[0])
    }
    .expect("serializable");
    text.push('\n');
    text
}

fn cmd_lamination(spec: &Path, cfg: &RunConfig, out: Option<&Path>) -> Result<u8, CliError> {
    let f = load_field(spec)?;
    let e = build_envelope(&f, cfg)?;
    let docs = cfg
        .sides
        .iter()
        .map(|&s| lamination_doc(&MeasuredLamination::from_envelope(&e, s.envelope_side()), s, e.n()))
        .collect();
    write_output(out, &per_side_json(docs))?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct NormsDoc {
    side: &'static str,
    #[serde(rename = "N")]
    n: usize,
    seed: u64,
    #[serde(flatten)]
    report: NormReport,
}

fn cmd_norms(spec: &Path, cfg: &RunConfig, out: Option<&Path>) -> Result<u8, CliError> {
    let f = load_field(spec)?;
    if !f.is_continuous() {
        return Err(CliError::Degenerate("norms need a continuous field".into()));
    }
    let e = build_envelope(&f, cfg)?;
    let params = cfg.norm_params();
    let w = width(&e, params.grid_n, params.refine_iters);
    let mut docs = Vec::new();
    let mut ok = true;
    for &side in cfg.sides {
        let report = verify_th2_side(&f, &e, &w, side.envelope_side(), &params)?;
        ok &= report.all_ok();
        docs.push(NormsDoc { side: side_name(side), n: e.n(), seed: cfg.seed, report });
    }
    write_output(out, &per_side_json(docs))?;
    Ok(if ok { EXIT_OK } else { EXIT_INEQUALITY })
}

fn cmd_render(spec: &Path, cfg: &RunConfig, out: Option<&Path>) -> Result<u8, CliError> {
    let f = load_field(spec)?;
    let e = build_envelope(&f, cfg)?;
    let w = width(&e, cfg.grid_n, cfg.refine_iters);
    let argmax: Option<KleinPoint> = (w.value > 0.0).then_some(w.argmax);
    let svg = output::render_svg(&e, cfg.sides, cfg.policy, argmax)?;
    write_output(out, &svg)?;
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policy_parsing() {
        assert_eq!("medial".parse::<PolicyArg>().unwrap().0, EdgePolicy::Medial);
        assert_eq!("second".parse::<PolicyArg>().unwrap().0, EdgePolicy::ExtremeSecond);
        assert_eq!("blend=0.25".parse::<PolicyArg>().unwrap().0, EdgePolicy::Blend(0.25));
        assert!("blend=2".parse::<PolicyArg>().is_err());
        assert!("middle".parse::<PolicyArg>().is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn quick_lowers_defaults_but_not_explicit_sizes() {
        let cli = Cli::parse_from(["earthquake-lab", "verify", "--quick", "--n", "512"]);
        let cfg = RunConfig::resolve(&cli.run).unwrap();
        assert_eq!((cfg.n, cfg.grid_n, cfg.cr_samples), (512, 64, 2000));
        let cli = Cli::parse_from(["earthquake-lab", "verify", "--n", "0"]);
        assert!(matches!(RunConfig::resolve(&cli.run), Err(CliError::Parse(_))));
    }
}
