use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qsync::config::parse_window;
use qsync::scenario::{analyze_file, run_scenario, write_run, CatalogSpec, REPORT_FILE};
use qsync::sweep::{run_sweep, SweepSpec, SUMMARY_FILE};
use qsync::{CliError, Result, Scenario};
use qsync_core::models::{preset, PRESET_NAMES};
use qsync_core::syncmeter::Thresholds;

#[derive(Parser)]
#[command(
    name = "qsync",
    version,
    about = "Simulate open quantum systems and measure the quantumness of their synchronization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a preset or scenario file and analyse it.
    Run {
        /// Preset name or scenario file.
        target: Option<String>,
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "qsync-out")]
        out: PathBuf,
        #[command(flatten)]
        analysis: AnalysisFlags,
    },
    /// Re-analyse a trajectory.csv.
    Analyze {
        trajectory: PathBuf,
        /// `pauli` or `moments:N`; inferred from the columns when omitted.
        #[arg(long)]
        catalog: Option<String>,
        /// Directory for report.json; printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        analysis: AnalysisFlags,
    },
    /// Run a parameter grid.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "qsync-sweep")]
        out: PathBuf,
    },
    /// List presets, or print one as a scenario file.
    Presets { name: Option<String> },
}

#[derive(Args)]
struct AnalysisFlags {
    /// Analysis window `T0:T1`.
    #[arg(long)]
    window: Option<String>,
    #[arg(long)]
    tol_freq: Option<f64>,
    #[arg(long)]
    tol_phase: Option<f64>,
}

impl AnalysisFlags {
    fn apply(&self, thr: &mut Thresholds) {
        if let Some(v) = self.tol_freq {
            thr.tol_freq = v;
        }
        if let Some(v) = self.tol_phase {
            thr.tol_phase = v;
        }
    }

    fn window(&self) -> Result<Option<(f64, f64)>> {
        self.window.as_deref().map(parse_window).transpose()
    }
}

fn load_scenario(target: Option<String>, preset_name: Option<String>, config: Option<PathBuf>) -> Result<Scenario> {
    let read = |p: &Path| -> Result<Scenario> {
        let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
        Scenario::parse_toml(&text)
    };
    match (target, preset_name, config) {
        (Some(t), None, None) => {
            if PRESET_NAMES.contains(&t.as_str()) {
                Scenario::from_preset(&t)
            } else {
                read(Path::new(&t))
            }
        }
        (None, Some(p), None) => Scenario::from_preset(&p),
        (None, None, Some(c)) => read(&c),
        _ => Err(CliError::Config("give exactly one of a preset name, --preset or --config".into())),
    }
}

/// Stdout writes ignore a closed pipe (`qsync analyze ... | head`).
fn emit(text: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { target, preset, config, out, analysis } => {
            let mut sc = load_scenario(target, preset, config)?;
            analysis.apply(&mut sc.analysis.thresholds);
            if let Some((a, b)) = analysis.window()? {
                sc.analysis.window = Some([a, b]);
            }
            let run = run_scenario(&sc)?;
            write_run(&out, &run)?;
            let a = &run.report.analysis;
            emit(&format!(
                "chi = {}, c = {}, xi = {}, S = [{}]; wrote {}",
                a.chi,
                a.c,
                a.xi,
                a.s.join(", "),
                out.display()
            ));
            Ok(())
        }
        Command::Analyze { trajectory, catalog, out, analysis } => {
            let mut thr = Thresholds::default();
            analysis.apply(&mut thr);
            thr.validate()?;
            let catalog = catalog.as_deref().map(CatalogSpec::parse).transpose()?;
            let report = analyze_file(&trajectory, catalog, analysis.window()?, &thr)?;
            match out {
                Some(dir) => {
                    qsync::io::ensure_dir(&dir)?;
                    qsync::io::write_json(&dir.join(REPORT_FILE), &report)?;
                    let a = &report.analysis;
                    emit(&format!(
                        "chi = {}, c = {}, xi = {}; wrote {}",
                        a.chi,
                        a.c,
                        a.xi,
                        dir.join(REPORT_FILE).display()
                    ));
                }
                None => emit(&serde_json::to_string_pretty(&report).expect("report serializes")),
            }
            Ok(())
        }
        Command::Sweep { config, out } => {
            let text = std::fs::read_to_string(&config).map_err(|e| CliError::io(&config, e))?;
            let spec = SweepSpec::parse_toml(&text)?;
            let rows = run_sweep(&spec, &out)?;
            let ok = rows.iter().filter(|r| r.status == "ok").count();
            emit(&format!("{ok}/{} points succeeded; wrote {}", rows.len(), out.join(SUMMARY_FILE).display()));
            Ok(())
        }
        Command::Presets { name } => {
            match name {
                None => {
                    for n in PRESET_NAMES {
                        let p = preset(n)?;
                        emit(&format!("{n}\t{}\tt_end = {}\tsample_dt = {}", p.params.kind(), p.t_end, p.sample_dt));
                    }
                }
                Some(n) => emit(Scenario::from_preset(&n)?.to_toml().trim_end()),
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qsync: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
