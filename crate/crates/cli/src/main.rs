use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;

use iafeas::geometry::{mixed_volume, select_square_subsystem, SubsetStrategy};
use iafeas::leakage::{beam_sweep, MinimizeOptions, SweepOptions};
use iafeas::linalg::random_channels;
use iafeas::polysys::{build_supports, supports_from_json, SupportSet};
use iafeas::report::{analyze, AnalyzeOptions, FeasibilityReport, SCHEMA_VERSION};
use iafeas::solvers::{solve_by_shape, verify_alignment};
use iafeas::{parse_system, Error};

const EXIT_OK: u8 = 0;
const EXIT_UNDETERMINED: u8 = 2;
const EXIT_USAGE: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "iafeas", version, about = "Feasibility analysis for linear interference alignment")]
struct Cli {
    /// Seed for every randomized stage.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Print machine-readable JSON.
    #[arg(long, global = true)]
    json: bool,
    /// Write the main output to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Count, classify and (optionally) bound, mixed-volume and probe a system.
    Analyze {
        /// System such as "(2x3,1)^4".
        spec: String,
        #[arg(long)]
        bounds: bool,
        #[arg(long)]
        mixedvol: bool,
        #[arg(long)]
        numeric: bool,
        /// Run every optional stage.
        #[arg(long)]
        all: bool,
        #[arg(long, default_value_t = 5000)]
        max_iters: usize,
    },
    /// Mixed volume of a system's supports or of a JSON list of supports.
    Mixedvol {
        /// A system spec, a path to a JSON file, or inline JSON.
        input: String,
        /// Pick a random square subsystem with this seed instead of the prefix.
        #[arg(long)]
        random_subset: Option<u64>,
    },
    /// Run the constructive solver for a supported system shape.
    Solve { spec: String },
    /// Leakage minimization over increasing beam counts, as CSV.
    Sweep {
        spec: String,
        #[arg(long, default_value_t = 5)]
        trials: usize,
        /// CSV destination (defaults to --out, then stdout).
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, default_value_t = 5000)]
        max_iters: usize,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Syntax { .. }
            | Error::InvalidUser { .. }
            | Error::TooFewUsers(_)
            | Error::UnsupportedShape(_)
            | Error::Json(_)
            | Error::Dimension(_) => EXIT_USAGE,
            _ => EXIT_UNDETERMINED,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn render_report(r: &FeasibilityReport) -> String {
    let mut s = format!(
        "system      {}\nequations   {}\nvariables   {}\nproper      {}\n",
        r.system,
        r.counts.equations,
        r.counts.variables,
        if r.proper.is_proper() { "yes" } else { "no" }
    );
    if let Some(cert) = &r.proper.certificate {
        s += &format!(
            "certificate {} equations over {} variables\n",
            cert.equations.len(),
            cert.variable_count
        );
    }
    if let Some(b) = &r.bounds {
        s += &format!(
            "bounds      {} (single-user {}, {} pairwise and {} cooperative violations)\n",
            if b.passes() { "pass" } else { "violated" },
            if b.single_user_ok { "ok" } else { "violated" },
            b.pairwise_violations.len(),
            b.cooperative_violations.len()
        );
        if let Some(v) = b.cooperative_violations.first() {
            s += &format!(
                "            {}: ({}x{},{}) vs ({}x{},{}) bound {}\n",
                v.describe(),
                v.merged.0.tx_antennas,
                v.merged.0.rx_antennas,
                v.merged.0.dof,
                v.merged.1.tx_antennas,
                v.merged.1.rx_antennas,
                v.merged.1.dof,
                v.bound
            );
        }
    }
    if let Some(m) = &r.mixed_volume {
        s += &format!("mixed vol   {} ({} cells)\n", m.value, m.cells);
    }
    if let Some(n) = &r.numeric {
        s += &format!("leakage     max p = {:.3e} after {} iterations\n", n.max_p, n.iterations);
    }
    for note in &r.notes {
        s += &format!("note        {note}\n");
    }
    s += &format!("verdict     {}\n", serde_json::to_value(r.verdict).unwrap().as_str().unwrap());
    s
}

#[derive(Serialize)]
struct MixedVolumeOutput {
    schema_version: u32,
    mixed_volume: u64,
    cells: usize,
    lifting_seed: u64,
    runtime_ms: u64,
}

fn read_supports(input: &str) -> Result<Vec<SupportSet>, Failure> {
    let trimmed = input.trim_start();
    if trimmed.starts_with('[') {
        return Ok(supports_from_json(trimmed)?);
    }
    let path = Path::new(input);
    if path.is_file() {
        let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read {input}: {e}")))?;
        return Ok(supports_from_json(&text)?);
    }
    Err(usage(format!("{input} is neither a system spec nor a supports file")))
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let out = cli.out.as_deref();
    match cli.command {
        Command::Analyze {
            spec,
            bounds,
            mixedvol,
            numeric,
            all,
            max_iters,
        } => {
            let sys = parse_system(&spec)?;
            let opts = AnalyzeOptions {
                bounds: bounds || all,
                mixed_volume: mixedvol || all,
                numeric: numeric || all,
                seed: cli.seed,
                max_iters,
            };
            let report = analyze(&sys, &opts);
            let text = if cli.json {
                report.to_json()? + "\n"
            } else {
                render_report(&report)
            };
            emit(out, &text)?;
            Ok(report.verdict.exit_code() as u8)
        }
        Command::Mixedvol { input, random_subset } => {
            let start = Instant::now();
            let supports = match parse_system(&input) {
                Ok(sys) => {
                    let strategy = random_subset.map_or(SubsetStrategy::CanonicalPrefix, SubsetStrategy::Random);
                    select_square_subsystem(&build_supports(&sys), strategy)?.supports
                }
                Err(_) => read_supports(&input)?,
            };
            let r = mixed_volume(&supports, cli.seed)?;
            let result = MixedVolumeOutput {
                schema_version: SCHEMA_VERSION,
                mixed_volume: r.mixed_volume,
                cells: r.cells.len(),
                lifting_seed: r.lifting_seed,
                runtime_ms: start.elapsed().as_millis() as u64,
            };
            let text = if cli.json {
                serde_json::to_string_pretty(&result).expect("plain struct") + "\n"
            } else {
                format!(
                    "mixed volume {}\ncells        {}\nruntime      {} ms\n",
                    result.mixed_volume, result.cells, result.runtime_ms
                )
            };
            emit(out, &text)?;
            Ok(EXIT_OK)
        }
        Command::Solve { spec } => {
            let sys = parse_system(&spec)?;
            let ch = random_channels(&sys, cli.seed);
            let bf = solve_by_shape(&sys, &ch, cli.seed)?;
            let check = verify_alignment(&sys, &ch, &bf)?;
            let summary = format!(
                "residual {:.3e}\nmin gain {:.3e}\n",
                check.max_cross_residual, check.min_desired_gain
            );
            match out {
                Some(path) => {
                    emit(Some(path), &(bf.to_json()? + "\n"))?;
                    print!("{summary}");
                }
                None if cli.json => {
                    let doc = serde_json::json!({
                        "schema_version": SCHEMA_VERSION,
                        "system": sys,
                        "seed": cli.seed,
                        "beamformers": bf,
                        "max_cross_residual": check.max_cross_residual,
                        "min_desired_gain": check.min_desired_gain,
                    });
                    println!("{}", serde_json::to_string_pretty(&doc).expect("json value"));
                }
                None => print!("{summary}"),
            }
            Ok(if check.passes(1e-8, 1e-6) { EXIT_OK } else { EXIT_UNDETERMINED })
        }
        Command::Sweep {
            spec,
            trials,
            csv,
            max_iters,
        } => {
            let sys = parse_system(&spec)?;
            if !sys.single_beam() {
                return Err(usage("sweeps start from a single-beam system"));
            }
            if trials == 0 {
                return Err(usage("--trials must be positive"));
            }
            let opts = SweepOptions {
                trials,
                seed: cli.seed,
                minimize: MinimizeOptions {
                    max_iters,
                    ..Default::default()
                },
                ..Default::default()
            };
            let result = beam_sweep(&sys, &opts)?;
            emit(csv.as_deref().or(out), &result.to_csv()?)?;
            for p in &result.points {
                eprintln!(
                    "{:>3} beams  {:<24} median max p {:.3e}",
                    p.total_beams, p.system, p.max_p
                );
            }
            Ok(EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
