use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use hompnr::detection::{deconvolve_histogram, DetectionChain};
use hompnr::io::{self, AnalysisInput, OutputFormat};
use hompnr::measures::{
    condition_distribution, correlation_report, mean_photon_numbers, schmidt_number_of, ConditioningSpec, SchmidtInput,
};
use hompnr::pipeline::{
    bootstrap_uncertainty, measured_effective_mode_number, operating_point_summary, run_scan, BootstrapOptions, Preset,
    ScanConfig,
};

#[derive(Parser)]
#[command(
    name = "hompnr",
    version,
    about = "Photon-number correlations of Hong-Ou-Mandel interference with squeezed vacuum"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutputArgs {
    /// Output directory (scans) or file (single documents).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "table", value_parser = parse_format)]
    format: OutputFormat,
}

#[derive(Subcommand)]
enum Command {
    /// Analytic delay scan from a configuration file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Delay scan with Monte Carlo click sampling and bootstrap intervals.
    Sample {
        #[arg(long)]
        config: PathBuf,
        /// Shots per delay; overrides the configuration.
        #[arg(long)]
        shots: Option<u64>,
        /// Overrides the configuration seed.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Click histogram file to photon-number distribution file.
    Deconvolve {
        input: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Correlation measures of a distribution or click-histogram file.
    Analyze {
        input: PathBuf,
        /// Condition on at least one detected photon.
        #[arg(long)]
        remove_vacuum: bool,
        /// Drop entries with more photons than this in either arm.
        #[arg(long)]
        max_photons: Option<usize>,
        /// Decompose the entrywise square root instead of the probabilities.
        #[arg(long)]
        schmidt_amplitudes: bool,
        /// Bootstrap resamples for histogram input (0 disables).
        #[arg(long, default_value_t = 0)]
        resamples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Named reproductions: fig3, fig4, fig5a, fig5b, operating-point.
    Reproduce {
        #[arg(value_parser = parse_preset)]
        preset: Preset,
        /// Enables Monte Carlo mode with this many shots per delay.
        #[arg(long)]
        shots: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
}

fn parse_format(s: &str) -> Result<OutputFormat, String> {
    s.parse().map_err(|e: hompnr::Error| e.to_string())
}

fn parse_preset(s: &str) -> Result<Preset, String> {
    s.parse().map_err(|e: hompnr::Error| e.to_string())
}

fn load_config(path: &Path) -> Result<ScanConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let cfg: ScanConfig = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    cfg.validate()
        .with_context(|| format!("validating {}", path.display()))?;
    Ok(cfg)
}

fn scan_dir(output: &OutputArgs) -> PathBuf {
    output.out.clone().unwrap_or_else(|| PathBuf::from("hompnr-out"))
}

fn export(result: &hompnr::pipeline::ScanResult, output: &OutputArgs) -> Result<()> {
    let dir = scan_dir(output);
    let files = io::export_results(result, &dir, output.format)?;
    eprintln!("wrote {} files to {}", files.len(), dir.display());
    Ok(())
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> std::process::ExitCode {
    match run(Cli::parse()) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { config, output } => {
            let mut cfg = load_config(&config)?;
            cfg.shots = None;
            export(&run_scan(&cfg)?, &output)
        }
        Command::Sample {
            config,
            shots,
            seed,
            output,
        } => {
            let mut cfg = load_config(&config)?;
            cfg.shots = shots.or(cfg.shots);
            if cfg.shots.is_none() {
                bail!("sample needs a shot count (--shots or `shots` in the configuration)");
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            export(&run_scan(&cfg)?, &output)
        }
        Command::Deconvolve { input, output } => {
            let hist = io::ingest_click_records(&input)?;
            let chain = DetectionChain::lossless(hist.bins_a(), hist.bins_b())?;
            let dec = deconvolve_histogram(&hist, &chain)?;
            if dec.negative_mass > 0.0 {
                eprintln!("clamped negative mass {:e}", dec.negative_mass);
            }
            let text = match output.format {
                OutputFormat::Table => io::distribution_to_text(&dec.distribution),
                OutputFormat::Structured => io::distribution_to_json(&dec.distribution),
            };
            emit(&text, output.out.as_deref())
        }
        Command::Analyze {
            input,
            remove_vacuum,
            max_photons,
            schmidt_amplitudes,
            resamples,
            seed,
            output,
        } => {
            let spec = ConditioningSpec {
                remove_vacuum,
                max_photons_per_mode: max_photons,
            };
            spec.validate()?;
            let schmidt = if schmidt_amplitudes {
                SchmidtInput::Amplitudes
            } else {
                SchmidtInput::Intensities
            };
            analyze(&input, spec, schmidt, resamples, seed, &output)
        }
        Command::Reproduce {
            preset,
            shots,
            seed,
            output,
        } => match preset.run(shots, seed)? {
            Some(result) => export(&result, &output),
            None => {
                let dir = scan_dir(&output);
                fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
                let summary = operating_point_summary()?;
                let k_eff = measured_effective_mode_number()?;
                let (name, text) = match output.format {
                    OutputFormat::Structured => (
                        "operating_point.json",
                        serde_json::to_string_pretty(&serde_json::json!({
                            "summary": summary,
                            "effective_mode_number_at_g2_1_75": k_eff,
                        }))? + "\n",
                    ),
                    OutputFormat::Table => {
                        let mut t = String::from("quantity\tvalue\n");
                        for (k, v) in [
                            ("mean_photon", summary.mean_photon),
                            ("eta_a", summary.eta_a),
                            ("eta_b", summary.eta_b),
                            ("squeeze_r", summary.squeeze_r),
                            ("p11", summary.p11),
                            ("p22", summary.p22),
                            ("p33", summary.p33),
                            ("g2_lossy_marginal", summary.g2_lossy_marginal),
                            ("transmission_a", summary.transmission_a),
                            ("transmission_b", summary.transmission_b),
                            ("effective_mode_number_at_g2_1_75", k_eff),
                        ] {
                            let _ = writeln!(t, "{k}\t{v:e}");
                        }
                        ("operating_point.tsv", t)
                    }
                };
                let path = dir.join(name);
                fs::write(&path, &text).with_context(|| format!("writing {}", path.display()))?;
                print!("{text}");
                Ok(())
            }
        },
    }
}

fn analyze(
    input: &Path,
    spec: ConditioningSpec,
    schmidt: SchmidtInput,
    resamples: usize,
    seed: u64,
    output: &OutputArgs,
) -> Result<()> {
    let (dist, hist) = match io::read_analysis_input(input)? {
        AnalysisInput::Distribution(d) => (d, None),
        AnalysisInput::Histogram(h) => {
            let chain = DetectionChain::lossless(h.bins_a(), h.bins_b())?;
            (deconvolve_histogram(&h, &chain)?.distribution, Some((h, chain)))
        }
    };
    let dist = dist.normalized()?;
    let conditioned = condition_distribution(&dist, &spec)?;
    let mut report = correlation_report(&conditioned);
    report.schmidt_k = schmidt_number_of(&conditioned, schmidt);
    let (mean_a, mean_b) = mean_photon_numbers(&conditioned);

    let intervals = match (&hist, resamples) {
        (_, 0) => None,
        (Some((h, chain)), n) => Some(bootstrap_uncertainty(h, chain, &[spec], &BootstrapOptions::new(n, seed))?[0]),
        (None, _) => bail!("bootstrap intervals need a click histogram input"),
    };

    let text = match output.format {
        OutputFormat::Structured => {
            serde_json::to_string_pretty(&serde_json::json!({
                "variant": spec.label(),
                "report": report,
                "mean_photon_a": mean_a,
                "mean_photon_b": mean_b,
                "intervals": intervals,
            }))? + "\n"
        }
        OutputFormat::Table => {
            let mut t = String::from(
                "variant\tcorr\tschmidt_k\tmutual_information\tdegenerate_marginal\tmean_photon_a\tmean_photon_b",
            );
            if intervals.is_some() {
                t.push_str("\tcorr_low\tcorr_high\tschmidt_k_low\tschmidt_k_high\tmi_low\tmi_high");
            }
            let _ = write!(
                t,
                "\n{}\t{:e}\t{:e}\t{:e}\t{}\t{:e}\t{:e}",
                spec.label(),
                report.corr,
                report.schmidt_k,
                report.mutual_information,
                u8::from(report.degenerate_marginal),
                mean_a,
                mean_b
            );
            if let Some(i) = intervals {
                let _ = write!(
                    t,
                    "\t{:e}\t{:e}\t{:e}\t{:e}\t{:e}\t{:e}",
                    i.corr.low,
                    i.corr.high,
                    i.schmidt_k.low,
                    i.schmidt_k.high,
                    i.mutual_information.low,
                    i.mutual_information.high
                );
            }
            t.push('\n');
            t
        }
    };
    emit(&text, output.out.as_deref())
}
