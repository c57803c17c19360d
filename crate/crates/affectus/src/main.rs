//! Command-line front end for the affect pipeline: corpus synthesis,
//! feature extraction, descriptor exploration, the full sweep, and report
//! summaries. All heavy lifting lives in the library; this binary only
//! parses arguments, wires paths, and prints.

use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use affectus::experiment::{
    explore_lld, run_experiment, ExperimentConfig, ReportRow, RunOptions, REPORT_HEADER,
};
use affectus::functionals::{extract_features, WindowPlan};
use affectus::ingest::{Dimension, Partition};
use affectus::synth::{generate_corpus, SynthSpec};
use affectus::wavelet::WaveletConfig;

#[derive(Parser)]
#[command(
    name = "affectus",
    version,
    about = "Continuous affect prediction from head and eye tracker streams"
)]
struct Cli {
    /// Experiment configuration file (TOML).
    #[arg(long, global = true, value_name = "path")]
    config: Option<PathBuf>,
    /// Assert byte-identical artifacts across reruns of the same config.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Worker thread cap (defaults to the number of cores).
    #[arg(long, global = true, value_name = "n")]
    jobs: Option<usize>,
    /// Output directory (overrides the config's [output] dir).
    #[arg(long, global = true, value_name = "dir")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus with a known annotation lag.
    Synth {
        /// Random seed for the corpus.
        #[arg(long)]
        seed: Option<u64>,
        /// True annotation lag in seconds.
        #[arg(long, value_name = "seconds")]
        lag: Option<f64>,
        /// Frames per recording.
        #[arg(long)]
        frames: Option<usize>,
    },
    /// Extract windowed features for every configured subject.
    Extract,
    /// Rank windowed-average descriptors by correlation with the targets.
    Explore,
    /// Run the full sweep: train, validate, and test-pass the winners.
    Run,
    /// Summarize an existing report.csv.
    Report,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("warning: could not size the worker pool: {e}");
        }
    }
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), Box<dyn std::error::Error>> {
    match &cli.command {
        Command::Synth { seed, lag, frames } => synth(cli, *seed, *lag, *frames),
        Command::Extract => extract(cli),
        Command::Explore => explore(cli),
        Command::Run => run(cli),
        Command::Report => report(cli),
    }
}

/// The loaded config with the --out override applied.
fn load_config(cli: &Cli) -> Result<ExperimentConfig, Box<dyn std::error::Error>> {
    let path = cli
        .config
        .as_ref()
        .ok_or("this subcommand needs --config <path>")?;
    let mut config = ExperimentConfig::load(path)?;
    if let Some(out) = &cli.out {
        config.output.dir = out.clone();
    }
    Ok(config)
}

fn synth(
    cli: &Cli,
    seed: Option<u64>,
    lag: Option<f64>,
    frames: Option<usize>,
) -> Result<(), Box<dyn std::error::Error>> {
    let out = cli.out.as_ref().ok_or("synth needs --out <dir>")?;
    let mut spec = SynthSpec::default();
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    if let Some(lag) = lag {
        spec.lag_seconds = lag;
    }
    if let Some(frames) = frames {
        spec.n_frames = frames;
    }
    let paths = generate_corpus(&spec, out)?;
    println!(
        "wrote {} recordings ({} frames each, lag {} s, seed {}) under {}",
        spec.n_subjects(),
        spec.n_frames,
        spec.lag_seconds,
        spec.seed,
        paths.root.display()
    );
    println!("metadata: {}", paths.metadata_path.display());
    Ok(())
}

fn extract(cli: &Cli) -> Result<(), Box<dyn std::error::Error>> {
    let config = load_config(cli)?;
    let corpus = affectus::experiment::load_corpus(&config)?;
    let window_s = config.sweep.window_seconds[0];
    let plan = WindowPlan::new(window_s, config.data.frame_rate);
    let wavelet = config.channels.wavelet.then(WaveletConfig::default);
    std::fs::create_dir_all(&config.output.dir)?;
    for subject in &corpus.subjects {
        let matrix = extract_features(&subject.series, &plan, wavelet.as_ref())?;
        let path = config
            .output
            .dir
            .join(format!("{}_features_w{}.csv", subject.subject_id, window_s));
        matrix.write_csv(&path)?;
        println!(
            "{}: {} windows x {} features -> {}",
            subject.subject_id,
            matrix.n_rows(),
            matrix.n_cols(),
            path.display()
        );
    }
    Ok(())
}

fn explore(cli: &Cli) -> Result<(), Box<dyn std::error::Error>> {
    let config = load_config(cli)?;
    let report = explore_lld(&config)?;
    println!("top descriptor correlations (up to 10 per dimension):");
    for row in report.rows.iter().filter(|r| r.rank <= 10) {
        println!("  {:>8}  #{:<3} {:<40} r = {:+.4}", row.dimension, row.rank, row.feature, row.pearson_r);
    }
    println!("full ranking: {}", report.path.display());
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Box<dyn std::error::Error>> {
    let config = load_config(cli)?;
    let options = RunOptions { deterministic: cli.deterministic, jobs: cli.jobs };
    let report = run_experiment(&config, &options)?;
    summarize(&report.rows);
    for failure in &report.failures {
        eprintln!("warning: {failure}");
    }
    println!("report: {}", report.report_path.display());
    Ok(())
}

fn report(cli: &Cli) -> Result<(), Box<dyn std::error::Error>> {
    let path = match (&cli.out, &cli.config) {
        (Some(out), _) => out.join("report.csv"),
        (None, Some(_)) => load_config(cli)?.output.dir.join("report.csv"),
        (None, None) => return Err("report needs --out <dir> or --config <path>".into()),
    };
    let rows = read_report(&path)?;
    summarize(&rows);
    Ok(())
}

fn summarize(rows: &[ReportRow]) {
    let validation: Vec<&ReportRow> =
        rows.iter().filter(|r| r.partition == Partition::Validation).collect();
    let tests: Vec<&ReportRow> = rows.iter().filter(|r| r.partition == Partition::Test).collect();
    println!("{} validation tuples, {} test passes", validation.len(), tests.len());
    for dimension in [Dimension::Arousal, Dimension::Valence] {
        let mut best: Vec<&&ReportRow> =
            validation.iter().filter(|r| r.dimension == dimension).collect();
        best.sort_by(|a, b| b.ccc.partial_cmp(&a.ccc).expect("finite ccc"));
        if let Some(top) = best.first() {
            println!(
                "best {dimension} (validation): {} W={} s D={} s theta={} -> CCC {:.4} ({} features)",
                top.system, top.window_s, top.delay_s, top.mi_threshold, top.ccc, top.n_features
            );
        }
        for row in tests.iter().filter(|r| r.dimension == dimension) {
            println!(
                "test {dimension}: {} W={} s D={} s theta={} -> CCC {:.4}, SSE {:.3}",
                row.system, row.window_s, row.delay_s, row.mi_threshold, row.ccc, row.sse
            );
        }
    }
}

fn read_report(path: &Path) -> Result<Vec<ReportRow>, Box<dyn std::error::Error>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("could not read {}: {e}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty report")?;
    if header != REPORT_HEADER {
        return Err(format!("unexpected report header {header:?}").into());
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        let [system, dimension, partition, window_s, delay_s, mi_threshold, n_features, sse, ccc] =
            fields.as_slice()
        else {
            return Err(format!("report line {} has {} fields", i + 2, fields.len()).into());
        };
        let dimension = match *dimension {
            "arousal" => Dimension::Arousal,
            "valence" => Dimension::Valence,
            other => return Err(format!("unknown dimension {other:?}").into()),
        };
        let partition = match *partition {
            "train" => Partition::Train,
            "validation" => Partition::Validation,
            "test" => Partition::Test,
            other => return Err(format!("unknown partition {other:?}").into()),
        };
        rows.push(ReportRow {
            system: system.to_string(),
            dimension,
            partition,
            window_s: window_s.parse()?,
            delay_s: delay_s.parse()?,
            mi_threshold: mi_threshold.parse()?,
            n_features: n_features.parse()?,
            sse: sse.parse()?,
            ccc: ccc.parse()?,
        });
    }
    Ok(rows)
}
