use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mdmlink::sim::{
    export_plotdata, preset, preset_names, run_experiment, validate_spec, write_results, ExperimentSpec,
    Figure, ResultSet, RunOptions,
};

const CONFIG_ERROR: u8 = 1;
const RUNTIME_FAILURE: u8 = 2;

#[derive(Parser)]
#[command(name = "mdmsim", version, about = "Mode-division-multiplexed link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep described by a TOML config (or a preset name).
    Run {
        config: String,
        /// Override the base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
        /// Also write the channel realization and every tap tensor.
        #[arg(long)]
        dump_matrices: bool,
        /// Output directory (default: the config's output_dir, else ./results).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write plot data for one figure from a finished run.
    Export {
        /// Results directory or results.json file.
        results: PathBuf,
        #[arg(long)]
        figure: String,
        /// Output directory (default: the results directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a config and print the resolved spec or every problem found.
    Validate { config: String },
    /// List the built-in presets.
    Presets,
}

fn load_spec(config: &str) -> Result<ExperimentSpec, Vec<String>> {
    let path = Path::new(config);
    let text = if path.exists() {
        fs::read_to_string(path).map_err(|e| vec![format!("{config}: {e}")])?
    } else if preset(config).is_some() {
        format!("preset = {config:?}\n")
    } else {
        return Err(vec![format!("{config}: no such file or preset")]);
    };
    validate_spec(&text).map_err(|issues| issues.iter().map(|i| format!("{config}: {i}")).collect())
}

fn report_config_errors(errors: &[String]) -> ExitCode {
    for e in errors {
        eprintln!("error: {e}");
    }
    ExitCode::from(CONFIG_ERROR)
}

fn run(config: &str, seed: Option<u64>, jobs: Option<usize>, dump: bool, out: Option<PathBuf>) -> ExitCode {
    let mut spec = match load_spec(config) {
        Ok(s) => s,
        Err(e) => return report_config_errors(&e),
    };
    if let Some(s) = seed {
        spec.seed = s;
    }
    let jobs = jobs
        .or_else(|| std::thread::available_parallelism().ok().map(|n| n.get()))
        .unwrap_or(1);
    if jobs == 0 {
        return report_config_errors(&["--jobs must be at least 1".into()]);
    }
    let dir = out
        .or_else(|| spec.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("results"));
    let opts = RunOptions {
        jobs,
        keep_taps: dump,
    };
    let rs = match run_experiment(&spec, &opts) {
        Ok(rs) => rs,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(RUNTIME_FAILURE);
        }
    };
    if let Err(e) = write_results(&rs, &dir, dump) {
        eprintln!("error: writing {}: {e}", dir.display());
        return ExitCode::from(RUNTIME_FAILURE);
    }
    let failures: Vec<_> = rs.failures().collect();
    println!(
        "{}: {} points, {} failed, results in {}",
        spec.name,
        rs.points.len(),
        failures.len(),
        dir.display()
    );
    for f in &failures {
        eprintln!(
            "failed: power {} dBm, k {}, capture {}: {}",
            f.power_dbm,
            f.k_rx,
            f.capture,
            f.error.as_deref().unwrap_or("unknown")
        );
    }
    if failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(RUNTIME_FAILURE)
    }
}

fn export(results: &Path, figure: &str, out: Option<PathBuf>) -> ExitCode {
    let figure: Figure = match figure.parse() {
        Ok(f) => f,
        Err(e) => return report_config_errors(&[e.to_string()]),
    };
    let rs = match ResultSet::load(results) {
        Ok(rs) => rs,
        Err(e) => return report_config_errors(&[format!("{}: {e}", results.display())]),
    };
    let dir = out.unwrap_or_else(|| {
        if results.is_dir() {
            results.to_path_buf()
        } else {
            results.parent().map(Path::to_path_buf).unwrap_or_default()
        }
    });
    match export_plotdata(&rs, figure, &dir) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(RUNTIME_FAILURE)
        }
    }
}

fn validate(config: &str) -> ExitCode {
    match load_spec(config) {
        Ok(spec) => match toml::to_string(&spec) {
            Ok(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            Err(e) => report_config_errors(&[e.to_string()]),
        },
        Err(e) => report_config_errors(&e),
    }
}

fn presets() -> ExitCode {
    for name in preset_names() {
        let s = preset(name).expect("listed preset exists");
        println!(
            "{name:<18} {} tx modes, rx subsets {:?}, MDL {} dB, sweep {}..{} dBm, {} captures",
            s.transmitted_modes(),
            s.subsets(),
            s.link.target_mdl_db,
            s.sweep.first().copied().unwrap_or(f64::NAN),
            s.sweep.last().copied().unwrap_or(f64::NAN),
            s.n_captures
        );
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(CONFIG_ERROR)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match cli.command {
        Command::Run {
            config,
            seed,
            jobs,
            dump_matrices,
            out,
        } => run(&config, seed, jobs, dump_matrices, out),
        Command::Export { results, figure, out } => export(&results, &figure, out),
        Command::Validate { config } => validate(&config),
        Command::Presets => presets(),
    }
}
