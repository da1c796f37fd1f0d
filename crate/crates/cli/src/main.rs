//! `srwlab`: constants, exact-law tables, rate-set boundaries and Monte Carlo
//! verification suites for simple random walks on Z^d, d >= 3.
//!
//! Exit status: 0 on success, 1 when a suite has a hard-fail verdict, 2 on
//! invalid flags or I/O errors. Diagnostic verdicts never affect it.

use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use srwlab_core::constants::DimensionConstants;
use srwlab_core::distributions::{PmfKind, PmfSpec};
use srwlab_core::mclab::{
    fill_in_table, run_containment_check, run_distribution_checks, run_fillin_check,
    run_level_count_check, run_newpoint_check, ExperimentPlan,
};
use srwlab_core::rate::{extremal_points, solve_boundary, RateSet, RateSetDescriptor};
use srwlab_core::report::{csv_field, fmt_sig, round_sig, ExperimentReport, Provenance};
use srwlab_core::tally::{BoardSummary, TallyBoard};
use srwlab_core::WalkConfig;

/// Overrides the default output directory.
const OUTPUT_DIR_ENV: &str = "SRWLAB_OUTPUT_DIR";
const DEFAULT_OUTPUT_DIR: &str = "srwlab-output";

#[derive(Parser, Debug)]
#[command(
    name = "srwlab",
    version,
    about = "Local and occupation times of simple random walks on Z^d"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Escape probability and every derived constant, with error budget.
    Constants {
        #[command(flatten)]
        dim: Dimension,
        #[command(flatten)]
        out: Output,
    },
    /// Tabulate one exact occupation law (columns k, l, probability).
    Pmf {
        /// geometric_site, joint_two_point, ball_occupation or joint_point_ball.
        #[arg(long, value_parser = parse_law)]
        law: PmfKind,
        /// Largest order tabulated: k (marginals) or k + l / l (joints).
        #[arg(long, default_value_t = 20)]
        order: u64,
        #[command(flatten)]
        dim: Dimension,
        #[command(flatten)]
        out: Output,
    },
    /// Boundary of a rate set on a uniform x-grid (columns x, y_low, y_high).
    Boundary {
        /// B or D.
        #[arg(long, value_parser = parse_set)]
        set: RateSet,
        /// Number of grid rows over [0, lambda].
        #[arg(long, default_value_t = 200)]
        grid: usize,
        #[command(flatten)]
        dim: Dimension,
        #[command(flatten)]
        out: Output,
    },
    /// Simulate walks and report level counts and new-point densities.
    Simulate {
        #[command(flatten)]
        run: Run,
        /// Also write the board of replication 0 as JSON to this path.
        #[arg(long)]
        snapshot: Option<PathBuf>,
        #[command(flatten)]
        out: Output,
    },
    /// Run a verification suite against exact laws and limit constants.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
        #[command(flatten)]
        run: Run,
        /// Truncation cap standing in for the infinite horizon (default: horizon).
        #[arg(long)]
        cap: Option<u64>,
        /// Scale slack for containment and fill-in.
        #[arg(long, default_value_t = 0.5)]
        epsilon: f64,
        /// Level of the chi-square tests.
        #[arg(long, default_value_t = 0.01)]
        significance: f64,
        /// Relative tolerance of the density checks (suite default when unset).
        #[arg(long)]
        tolerance: Option<f64>,
        /// Laws of the distributions suite; repeat for several (default: all).
        #[arg(long, value_parser = parse_law)]
        law: Vec<PmfKind>,
        #[command(flatten)]
        out: Output,
    },
    /// Lattice points of the fill-in sets and whether one walk realized them.
    Fillin {
        #[command(flatten)]
        run: Run,
        #[arg(long, default_value_t = 0.5)]
        epsilon: f64,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Args, Debug)]
struct Dimension {
    /// Lattice dimension (>= 3).
    #[arg(long = "d", default_value_t = 3)]
    d: usize,
}

#[derive(Args, Debug)]
struct Run {
    #[command(flatten)]
    dim: Dimension,
    /// Horizon n.
    #[arg(long, default_value_t = 1_000_000)]
    horizon: u64,
    #[arg(long, default_value_t = 20)]
    replications: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct Output {
    /// Output file, or `-` for stdout. Default: `<dir>/<name>.<format>` with
    /// `<dir>` from SRWLAB_OUTPUT_DIR or `srwlab-output`.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

impl Format {
    fn ext(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Suite {
    Distributions,
    Levels,
    Newpoints,
    Containment,
    Fillin,
}

fn parse_law(s: &str) -> std::result::Result<PmfKind, String> {
    s.parse().map_err(|e: srwlab_core::Error| e.to_string())
}

fn parse_set(s: &str) -> std::result::Result<RateSet, String> {
    s.parse().map_err(|e: srwlab_core::Error| e.to_string())
}

/// What a subcommand produced.
enum Outcome {
    Written,
    HardFail,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let name = subcommand_name(&cli.command);
    let result = dispatch(cli.command);
    let elapsed = start.elapsed().as_secs_f64();
    match result {
        Ok(Outcome::Written) => {
            eprintln!("srwlab {name}: done in {elapsed:.2} s");
            ExitCode::SUCCESS
        }
        Ok(Outcome::HardFail) => {
            eprintln!("srwlab {name}: hard-fail verdicts, see report ({elapsed:.2} s)");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("srwlab {name}: error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn subcommand_name(c: &Command) -> &'static str {
    match c {
        Command::Constants { .. } => "constants",
        Command::Pmf { .. } => "pmf",
        Command::Boundary { .. } => "boundary",
        Command::Simulate { .. } => "simulate",
        Command::Verify { .. } => "verify",
        Command::Fillin { .. } => "fillin",
    }
}

fn dispatch(command: Command) -> Result<Outcome> {
    match command {
        Command::Constants { dim, out } => {
            let format = out.format.unwrap_or(Format::Json);
            let target = out.resolve("constants", format)?;
            let c = DimensionConstants::compute(dim.d)?;
            let body = match format {
                Format::Json => rounded_json(&c)?,
                Format::Csv => constants_csv(&c),
            };
            target.write(&body)?;
        }
        Command::Pmf {
            law,
            order,
            dim,
            out,
        } => {
            let format = out.format.unwrap_or(Format::Csv);
            let target = out.resolve(&format!("pmf-{}", law.name()), format)?;
            let spec = PmfSpec::new(law, DimensionConstants::compute(dim.d)?);
            let rows = pmf_rows(&spec, order)?;
            let body = match format {
                Format::Csv => {
                    let mut s = String::from("k,l,probability\n");
                    for r in &rows {
                        let l = r.l.map(|l| l.to_string()).unwrap_or_default();
                        s += &format!("{},{},{}\n", r.k, l, fmt_sig(r.probability));
                    }
                    s
                }
                Format::Json => rounded_json(&rows)?,
            };
            target.write(&body)?;
        }
        Command::Boundary {
            set,
            grid,
            dim,
            out,
        } => {
            if grid < 2 {
                bail!("--grid must be at least 2, got {grid}");
            }
            let format = out.format.unwrap_or(Format::Csv);
            let target = out.resolve(&format!("boundary-{set}"), format)?;
            let desc = RateSetDescriptor::new(set, DimensionConstants::compute(dim.d)?);
            write_boundary(&desc, grid, format, &target)?;
        }
        Command::Simulate { run, snapshot, out } => {
            let format = out.format.unwrap_or(Format::Json);
            let target = out.resolve("simulate", format)?;
            let plan = ExperimentPlan::new(
                "simulate",
                run.dim.d,
                run.horizon,
                run.replications,
                run.seed,
            );
            plan.validate()?;
            let report = simulate(&plan, snapshot.as_deref())?;
            target.write(&report_body(&report, format))?;
        }
        Command::Verify {
            suite,
            run,
            cap,
            epsilon,
            significance,
            tolerance,
            law,
            out,
        } => {
            if !law.is_empty() && suite != Suite::Distributions {
                bail!("--law only applies to --suite distributions");
            }
            if tolerance.is_some() && !matches!(suite, Suite::Levels | Suite::Newpoints) {
                bail!("--tolerance only applies to --suite levels and newpoints");
            }
            if cap.is_some() && !matches!(suite, Suite::Distributions | Suite::Containment) {
                bail!("--cap only applies to --suite distributions and containment");
            }
            let format = out.format.unwrap_or(Format::Json);
            let name = suite_name(suite);
            let target = out.resolve(&format!("verify-{name}"), format)?;
            let mut plan =
                ExperimentPlan::new(name, run.dim.d, run.horizon, run.replications, run.seed)
                    .with_cap(cap.unwrap_or(run.horizon))
                    .with_epsilon(epsilon)
                    .with_significance(significance);
            if let Some(t) = tolerance {
                plan = plan.with_relative_tolerance(t);
            }
            plan.validate()?;
            if suite == Suite::Fillin && epsilon >= 1.0 {
                bail!("--suite fillin needs --epsilon in (0, 1)");
            }
            let report = match suite {
                Suite::Distributions => {
                    let laws = if law.is_empty() {
                        PmfKind::ALL.to_vec()
                    } else {
                        law
                    };
                    let c = DimensionConstants::compute(plan.dimension)?;
                    run_distribution_checks(&plan, &c, &laws)?
                }
                Suite::Levels => run_level_count_check(&plan)?,
                Suite::Newpoints => run_newpoint_check(&plan)?,
                Suite::Containment => run_containment_check(&plan)?,
                Suite::Fillin => run_fillin_check(&plan)?,
            };
            target.write(&report_body(&report, format))?;
            if !report.passed() {
                return Ok(Outcome::HardFail);
            }
        }
        Command::Fillin { run, epsilon, out } => {
            let format = out.format.unwrap_or(Format::Csv);
            let target = out.resolve("fillin", format)?;
            let plan =
                ExperimentPlan::new("fillin", run.dim.d, run.horizon, run.replications, run.seed)
                    .with_epsilon(epsilon);
            plan.validate()?;
            if epsilon >= 1.0 {
                bail!("fillin needs --epsilon in (0, 1)");
            }
            let rows = fill_in_table(&plan)?;
            let body = match format {
                Format::Csv => {
                    let mut s = String::from("set,k,l,realized\n");
                    for r in &rows {
                        s += &format!("{},{},{},{}\n", r.set, r.k, r.l, u8::from(r.realized));
                    }
                    s
                }
                Format::Json => rounded_json(&rows)?,
            };
            target.write(&body)?;
        }
    }
    Ok(Outcome::Written)
}

fn suite_name(s: Suite) -> &'static str {
    match s {
        Suite::Distributions => "distributions",
        Suite::Levels => "levels",
        Suite::Newpoints => "newpoints",
        Suite::Containment => "containment",
        Suite::Fillin => "fillin",
    }
}

/// Where a subcommand's main output goes.
enum Target {
    Stdout,
    File(PathBuf),
}

impl Output {
    /// Resolves and prepares the destination before any computation, so an
    /// unwritable path fails fast.
    fn resolve(&self, name: &str, format: Format) -> Result<Target> {
        let path = match &self.output {
            Some(p) if p.as_os_str() == "-" => return Ok(Target::Stdout),
            Some(p) => p.clone(),
            None => {
                let dir = std::env::var_os(OUTPUT_DIR_ENV)
                    .map(PathBuf::from)
                    .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
                dir.join(format!("{name}.{}", format.ext()))
            }
        };
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent)
                .with_context(|| format!("cannot create output directory {}", parent.display()))?;
        }
        fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .with_context(|| format!("cannot write {}", path.display()))?;
        Ok(Target::File(path))
    }
}

impl Target {
    fn write(&self, body: &str) -> Result<()> {
        match self {
            Target::Stdout => {
                let mut out = std::io::stdout().lock();
                out.write_all(body.as_bytes())?;
                out.flush()?;
            }
            Target::File(path) => {
                fs::write(path, body)
                    .with_context(|| format!("cannot write {}", path.display()))?;
                eprintln!("wrote {}", path.display());
            }
        }
        Ok(())
    }

    /// A file next to the main one, e.g. `boundary-B.landmarks.csv`.
    fn sibling(&self, suffix: &str) -> Option<PathBuf> {
        match self {
            Target::Stdout => None,
            Target::File(path) => {
                let stem = path.file_stem()?.to_string_lossy().into_owned();
                Some(path.with_file_name(format!("{stem}.{suffix}")))
            }
        }
    }
}

/// Pretty JSON with every float rounded to the report precision.
fn rounded_json<T: Serialize>(value: &T) -> Result<String> {
    fn round(v: Value) -> Value {
        match v {
            Value::Number(n) if n.is_f64() => {
                let x = round_sig(n.as_f64().expect("f64"));
                serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
            }
            Value::Array(a) => Value::Array(a.into_iter().map(round).collect()),
            Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round(v))).collect()),
            other => other,
        }
    }
    let mut s = serde_json::to_string_pretty(&round(serde_json::to_value(value)?))?;
    s.push('\n');
    Ok(s)
}

fn report_body(report: &ExperimentReport, format: Format) -> String {
    match format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
    }
}

fn constants_csv(c: &DimensionConstants) -> String {
    let mut s = String::from("name,value,abs_error\n");
    let fields = [
        ("gamma", c.gamma),
        ("alpha", c.alpha),
        ("lambda", c.lambda),
        ("p", c.p),
        ("kappa", c.kappa),
        ("x0_b", c.x0_b),
        ("sum_max", c.sum_max),
        ("diff_max", c.diff_max),
        ("weight_c", c.weight_c),
        ("weight_a", c.weight_a),
    ];
    s += &format!("d,{},0\n", c.d);
    for (name, v) in fields {
        let err = c
            .error_budget
            .get(name)
            .map(|e| fmt_sig(*e))
            .unwrap_or_default();
        s += &format!("{name},{},{err}\n", fmt_sig(v));
    }
    s
}

#[derive(Serialize)]
struct PmfRow {
    k: u64,
    l: Option<u64>,
    probability: f64,
}

fn pmf_rows(spec: &PmfSpec, order: u64) -> Result<Vec<PmfRow>> {
    let mut rows = Vec::new();
    match spec.kind {
        PmfKind::GeometricSite => {
            for k in 0..=order {
                rows.push(PmfRow {
                    k,
                    l: None,
                    probability: spec.probability(&[k])?,
                });
            }
        }
        PmfKind::BallOccupation => {
            for k in 1..=order.max(1) {
                rows.push(PmfRow {
                    k,
                    l: None,
                    probability: spec.probability(&[k])?,
                });
            }
        }
        PmfKind::JointTwoPoint => {
            for m in 0..=order {
                for k in 0..=m {
                    let l = m - k;
                    rows.push(PmfRow {
                        k,
                        l: Some(l),
                        probability: spec.probability(&[k, l])?,
                    });
                }
            }
        }
        PmfKind::JointPointBall => {
            for l in 0..=order {
                for k in 0..=l {
                    rows.push(PmfRow {
                        k,
                        l: Some(l),
                        probability: spec.probability(&[k, l])?,
                    });
                }
            }
        }
    }
    Ok(rows)
}

#[derive(Serialize)]
struct BoundaryTable {
    set: RateSet,
    curve: Vec<srwlab_core::BoundaryPoint>,
    landmarks: Vec<srwlab_core::rate::Landmark>,
}

fn write_boundary(
    desc: &RateSetDescriptor,
    grid: usize,
    format: Format,
    target: &Target,
) -> Result<()> {
    let x_max = desc.x_max();
    let curve = (0..grid)
        .map(|i| {
            let x = x_max * i as f64 / (grid - 1) as f64;
            solve_boundary(desc, x, 1e-12)
        })
        .collect::<srwlab_core::Result<Vec<_>>>()?;
    let landmarks = extremal_points(desc);
    match format {
        Format::Json => target.write(&rounded_json(&BoundaryTable {
            set: desc.which,
            curve,
            landmarks,
        })?),
        Format::Csv => {
            let mut s = String::from("x,y_low,y_high\n");
            for p in &curve {
                s += &format!(
                    "{},{},{}\n",
                    fmt_sig(p.x),
                    fmt_sig(p.y_low),
                    fmt_sig(p.y_high)
                );
            }
            target.write(&s)?;
            let mut lm = String::from("label,x,y\n");
            for p in &landmarks {
                lm += &format!("{},{},{}\n", csv_field(p.label), fmt_sig(p.x), fmt_sig(p.y));
            }
            match target.sibling("landmarks.csv") {
                Some(path) => {
                    fs::write(&path, lm)
                        .with_context(|| format!("cannot write {}", path.display()))?;
                    eprintln!("wrote {}", path.display());
                }
                None => eprintln!(
                    "landmarks are written only alongside a file; use --format json for stdout"
                ),
            }
            Ok(())
        }
    }
}

/// Per-replication summaries merged in replication order; estimates only.
fn simulate(plan: &ExperimentPlan, snapshot: Option<&std::path::Path>) -> Result<ExperimentReport> {
    let mut merged = BoardSummary::default();
    for r in 0..plan.replications {
        let board = TallyBoard::from_walk(&WalkConfig::new(
            plan.dimension,
            plan.horizon,
            plan.seed,
            r,
        )?)?;
        if r == 0 {
            if let Some(path) = snapshot {
                fs::write(path, rounded_json(&board.snapshot())?)
                    .with_context(|| format!("cannot write {}", path.display()))?;
                eprintln!("wrote {}", path.display());
            }
        }
        merged = merged.merge(&board.summary());
    }
    let total = merged.steps as f64;
    let mut metadata = plan.metadata();
    metadata.insert("check".into(), "simulate".into());
    let mut report = ExperimentReport::new(plan.name.clone(), metadata);
    let c = DimensionConstants::compute(plan.dimension)?;
    report.estimate(
        "distinct_sites_over_n",
        merged.distinct_sites as f64 / total,
        None,
    );
    report.reference(
        "distinct_sites_over_n",
        c.gamma,
        Provenance::ConstantsOracle,
    );
    report.estimate("max_local_time", merged.max_local_time as f64, None);
    for (&k, &count) in merged.q.iter().take(10) {
        let label = format!("q_over_n[{k}]");
        report.estimate(&label, count as f64 / total, None);
        report.reference(
            &label,
            c.gamma * c.gamma * (1.0 - c.gamma).powi(k as i32 - 1),
            Provenance::ConstantsOracle,
        );
    }
    report.estimate("zeta_over_n", merged.zeta as f64 / total, None);
    report.reference(
        "zeta_over_n",
        1.0 - 2.0 * c.alpha,
        Provenance::ConstantsOracle,
    );
    report.estimate("nu_over_n", merged.nu as f64 / total, None);
    report.reference(
        "nu_over_n",
        1.0 - c.p - 1.0 / (2.0 * c.d as f64),
        Provenance::ConstantsOracle,
    );
    Ok(report)
}
