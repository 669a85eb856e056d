use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use zeno_core::calibrate::{tune_transfer, CalibrationSearch};
use zeno_core::error::{Error, Result};
use zeno_core::evolve::{trajectory, write_trajectory_csv, IntegratorConfig, Method, StateVector};
use zeno_core::gate::{input_state, simulate, HeraldMode};
use zeno_core::hamiltonian::{HamiltonianModel, PhysicsParams};
use zeno_core::hilbert::build_basis;
use zeno_core::sweeps::{apply_overrides, emit, render, run_sweep, OutputFormat, Preset, SweepConfig};

#[derive(Parser)]
#[command(name = "zeno", version, about = "Heralded quantum Zeno gate simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the gate at one parameter point and print its metrics as JSON.
    Simulate {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long, value_enum, default_value_t = Herald::AtomsGround)]
        herald: Herald,
        /// Calibrate T_C first (default search) instead of using the given T_C.
        #[arg(long)]
        calibrate: bool,
    },
    /// Tune T_C for complete single-photon transfer and print the result as JSON.
    Calibrate {
        #[command(flatten)]
        point: PointArgs,
        /// Search interval for T_C.
        #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
        range: Option<Vec<f64>>,
        #[arg(long)]
        scan_points: Option<usize>,
        #[arg(long)]
        tolerance: Option<f64>,
        #[arg(long)]
        floor: Option<f64>,
        #[arg(long)]
        margin: Option<f64>,
    },
    /// Run a sweep described by a TOML config file.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Output file; overrides the config's [output] section. Without
        /// either, rows go to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Run a figure preset (fig4, fig5, fig7, fig8).
    Preset {
        name: String,
        /// Directory for `<name>.<format>`; without it rows go to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Calibration cache file shared across runs.
        #[arg(long)]
        cache: Option<PathBuf>,
        /// Print the preset's sweep config as TOML instead of running it.
        #[arg(long)]
        print_config: bool,
    },
    /// Print sampled pulse envelopes as two-column `t value` blocks.
    DumpEnvelopes {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long, value_enum, default_value_t = Pulse::All)]
        pulse: Pulse,
        #[arg(long, default_value_t = 2001)]
        samples: usize,
    },
    /// Print the basis enumeration (index, occupations, N).
    DumpBasis {
        #[arg(long, default_value_t = 2)]
        n_max: u32,
    },
    /// Print the nonzero pattern of H(t) per excitation block.
    DumpPattern {
        #[command(flatten)]
        point: PointArgs,
        /// Time at which H is assembled; defaults to the middle of the C window.
        #[arg(long)]
        t: Option<f64>,
    },
    /// Write sampled populations of every basis state along one evolution as CSV.
    Trajectory {
        #[command(flatten)]
        point: PointArgs,
        /// Logical input as `q1,q2`.
        #[arg(long, default_value = "1,1", value_parser = parse_logical)]
        input: (u32, u32),
        #[arg(long, default_value_t = 201)]
        samples: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Parameter point shared by the single-point subcommands.
#[derive(Args)]
struct PointArgs {
    /// TOML file with PhysicsParams fields; omitted fields keep their defaults.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Override one parameter, e.g. `--set m_max=0.5 --set shape=linear`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    rtol: Option<f64>,
    #[arg(long)]
    atol: Option<f64>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// Intervals per smooth schedule segment for the expm oracle.
    #[arg(long)]
    oracle_steps: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Herald {
    AtomsGround,
    Paths,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    AdaptiveRk,
    ExpmOracle,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Pulse {
    All,
    C,
    M,
    Mprime,
}

impl From<Herald> for HeraldMode {
    fn from(h: Herald) -> Self {
        match h {
            Herald::AtomsGround => HeraldMode::AtomsGround,
            Herald::Paths => HeraldMode::Paths,
        }
    }
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

fn parse_logical(s: &str) -> std::result::Result<(u32, u32), String> {
    let bad = || format!("expected `q1,q2` with q in {{0,1}}, got `{s}`");
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    let q1: u32 = a.trim().parse().map_err(|_| bad())?;
    let q2: u32 = b.trim().parse().map_err(|_| bad())?;
    if q1 > 1 || q2 > 1 {
        return Err(bad());
    }
    Ok((q1, q2))
}

impl PointArgs {
    fn params(&self) -> Result<PhysicsParams> {
        let base = match &self.params {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
                    path: path.clone(),
                    source: e,
                })?;
                let p: PhysicsParams = toml::from_str(&text)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                p
            }
            None => PhysicsParams::default(),
        };
        let mut overrides = toml::Table::new();
        for item in &self.set {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got `{item}`")))?;
            let (key, value) = (key.trim(), value.trim());
            // Bare words such as `linear` are taken as strings.
            let parsed = toml::from_str::<toml::Table>(&format!("v = {value}"))
                .ok()
                .and_then(|mut t| t.remove("v"))
                .unwrap_or_else(|| toml::Value::String(value.to_string()));
            overrides.insert(key.to_string(), parsed);
        }
        let p = apply_overrides(&base, &overrides)?;
        p.validate()?;
        Ok(p)
    }

    fn integrator(&self) -> Result<IntegratorConfig> {
        let mut cfg = IntegratorConfig::default();
        if let Some(x) = self.rtol {
            cfg.rtol = x;
        }
        if let Some(x) = self.atol {
            cfg.atol = x;
        }
        if let Some(m) = self.method {
            cfg.method = match m {
                MethodArg::AdaptiveRk => Method::AdaptiveRk,
                MethodArg::ExpmOracle => Method::ExpmOracle,
            };
        }
        if let Some(n) = self.oracle_steps {
            cfg.oracle_steps = n;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable output")
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            point,
            herald,
            calibrate,
        } => {
            let mut params = point.params()?;
            let cfg = point.integrator()?;
            let mut calibration = None;
            if calibrate {
                let c = tune_transfer(&params, &CalibrationSearch::default(), &cfg)?;
                params = c.apply(&params);
                calibration = Some(c);
            }
            let (run, metrics) = simulate(&params, &cfg, herald.into())?;
            println!(
                "{}",
                to_json(&json!({
                    "params": params,
                    "calibration": calibration,
                    "total_time": run.total_time,
                    "metrics": metrics,
                }))
            );
        }
        Command::Calibrate {
            point,
            range,
            scan_points,
            tolerance,
            floor,
            margin,
        } => {
            let params = point.params()?;
            let cfg = point.integrator()?;
            let d = CalibrationSearch::default();
            let search = CalibrationSearch {
                range: range.map(|r| (r[0], r[1])),
                scan_points: scan_points.unwrap_or(d.scan_points),
                tolerance: tolerance.unwrap_or(d.tolerance),
                floor: floor.unwrap_or(d.floor),
                margin: margin.unwrap_or(d.margin),
            };
            let c = tune_transfer(&params, &search, &cfg)?;
            if let Some(w) = &c.warning {
                eprintln!("warning: {w}");
            }
            println!("{}", to_json(&c));
        }
        Command::Sweep { config, out, format } => {
            let cfg = SweepConfig::from_file(&config)?;
            let rows = run_sweep(&cfg)?;
            let spec_format = cfg.output.as_ref().map(|o| o.format);
            let format = format.map(OutputFormat::from).or(spec_format).unwrap_or_default();
            let path = out.or_else(|| cfg.output.as_ref().map(|o| o.path.clone()));
            match path {
                Some(p) => emit(&rows, format, &p)?,
                None => print!("{}", render(&rows, format)),
            }
            report_failures(&rows);
        }
        Command::Preset {
            name,
            out,
            format,
            cache,
            print_config,
        } => {
            let preset = Preset::parse(&name)?;
            let mut cfg = preset.config();
            cfg.calibration_cache = cache;
            if print_config {
                print!("{}", cfg.to_toml_string());
                return Ok(());
            }
            let rows = run_sweep(&cfg)?;
            let format = OutputFormat::from(format);
            match out {
                Some(dir) => emit(&rows, format, &dir.join(format!("{}.{}", preset.as_str(), format.extension())))?,
                None => print!("{}", render(&rows, format)),
            }
            report_failures(&rows);
        }
        Command::DumpEnvelopes {
            point,
            pulse,
            samples,
        } => {
            let params = point.params()?;
            let model = HamiltonianModel::new(&params)?;
            let s = model.schedule();
            let mut out = String::new();
            let profiles = [(Pulse::C, "C", &s.c), (Pulse::M, "M", &s.m), (Pulse::Mprime, "Mprime", &s.m_prime)];
            for (which, label, profile) in profiles {
                if pulse != Pulse::All && pulse != which {
                    continue;
                }
                if pulse == Pulse::All {
                    let _ = writeln!(out, "# {label}");
                }
                for (t, v) in profile.sample(0.0, s.total_time, samples) {
                    let _ = writeln!(out, "{t:.11e} {v:.11e}");
                }
                if pulse == Pulse::All {
                    out.push_str("\n\n");
                }
            }
            print!("{out}");
        }
        Command::DumpBasis { n_max } => print!("{}", build_basis(n_max).dump()),
        Command::DumpPattern { point, t } => {
            let params = point.params()?;
            let model = HamiltonianModel::new(&params)?;
            let c = &model.schedule().c;
            let t = t.unwrap_or(0.5 * (c.t_start + c.end()));
            print!("{}", model.pattern_dump(t));
        }
        Command::Trajectory {
            point,
            input,
            samples,
            out,
        } => {
            let params = point.params()?;
            let cfg = point.integrator()?;
            let model = HamiltonianModel::new(&params)?;
            let idx = model
                .basis()
                .index_of(&input_state(input))
                .expect("logical inputs lie in the basis");
            let psi0 = StateVector::basis(model.dim(), idx, 0.0);
            let rows = trajectory(&model, &psi0, 0.0, model.schedule().total_time, samples, &cfg)?;
            write_trajectory_csv(&out, &rows)?;
        }
    }
    Ok(())
}

fn report_failures(rows: &[zeno_core::SweepRow]) {
    for r in rows.iter().filter(|r| !r.is_ok()) {
        eprintln!("point {:e}: {}", r.axis_value, r.status);
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                e.exit();
            }
            eprintln!("{}", json!({"error": {"kind": "usage", "message": e.to_string().trim()}}));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({"error": {"kind": e.kind(), "message": e.to_string()}}));
            ExitCode::FAILURE
        }
    }
}
