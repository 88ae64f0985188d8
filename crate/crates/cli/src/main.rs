mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use lfiguard::encoder::Encoding;
use lfiguard::floorplan::Placement;
use lfiguard::fsm::{parse_fsm_spec, FsmSpec};
use lfiguard::metrics::{compute_tvm, compute_vm, metric_json};
use lfiguard::pipeline::{self, encoding_lp, placement_lp, Verdict, Verification};
use serde_json::json;

use config::{CommonArgs, Settings};

/// Secure FSM encoding, flip-flop placement and laser-fault analysis.
///
/// Exit status: 0 secure, 2 vulnerable (report still written), 1 error.
#[derive(Parser)]
#[command(name = "lfiguard", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a state encoding
    Encode {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Place the flip-flops of an encoding
    Place {
        /// Encoding document from `encode`
        #[arg(long, value_name = "FILE")]
        encoding: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Sweep a placement and report every metric
    Analyze {
        #[arg(long, value_name = "FILE")]
        encoding: PathBuf,
        #[arg(long, value_name = "FILE")]
        placement: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Encode, place and verify
    Pipeline {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Layout-free VM and TVM of an encoding
    Metrics {
        #[arg(long, value_name = "FILE")]
        encoding: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    let mut text = text.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn load_fsm(settings: &Settings) -> Result<FsmSpec> {
    let path = settings.fsm_path()?;
    parse_fsm_spec(&read(path)?).with_context(|| format!("in {}", path.display()))
}

fn load_encoding(fsm: &FsmSpec, path: &Path) -> Result<Encoding> {
    Encoding::from_json(fsm, &read(path)?).with_context(|| format!("in {}", path.display()))
}

fn summarize(fsm: &FsmSpec, encoding: &Encoding, v: &Verification) {
    let r = &v.report;
    println!(
        "{} {} x={} D={} step={}: VM={} SVM={} TVM={} STVM={}",
        fsm.name(),
        r.variant,
        r.attacker.x,
        r.attacker.diameter,
        r.attacker.sweep_step,
        r.vm,
        r.svm,
        r.tvm,
        r.stvm
    );
    for e in &r.svt {
        let (au, p) = fsm.authorized()[e.at];
        println!(
            "  {} {} -> {} via {} at {:?} (guards {} -> {})",
            fsm.state_name(e.source),
            encoding.codes[e.source],
            e.result,
            e.atoms,
            e.lasers,
            fsm.state_name(au),
            fsm.state_name(p)
        );
    }
    for violation in &v.encoding_violations {
        println!("  encoding audit: {violation:?}");
    }
    for violation in &v.placement_violations {
        println!("  placement audit: {violation:?}");
    }
    let verdict = match v.verdict() {
        Verdict::Secure => "secure",
        Verdict::Vulnerable => "vulnerable",
        Verdict::Invalid => "audit failed",
    };
    println!("verdict: {verdict}");
}

fn run(cli: Cli) -> Result<Verdict> {
    match cli.command {
        Command::Encode { common } => {
            let settings = Settings::resolve(&common)?;
            let fsm = load_fsm(&settings)?;
            let config = settings.synthesis_config()?;
            let encoding = pipeline::encode(&fsm, &config)?;
            write(
                &settings.out_dir,
                "encoding.json",
                &encoding.to_json_string(&fsm),
            )?;
            if settings.dump_lp {
                write(
                    &settings.out_dir,
                    "encoding.lp",
                    &encoding_lp(&fsm, &encoding)?,
                )?;
            }
            Ok(Verdict::Secure)
        }
        Command::Place { encoding, common } => {
            let settings = Settings::resolve(&common)?;
            let fsm = load_fsm(&settings)?;
            let encoding = load_encoding(&fsm, &encoding)?;
            let config = settings
                .pipeline_config(encoding.variant, settings.lasers.unwrap_or(encoding.x))?;
            let placement = pipeline::place(&encoding, &config)?;
            write(
                &settings.out_dir,
                "placement.json",
                &placement.to_json_string(),
            )?;
            if settings.dump_lp {
                write(
                    &settings.out_dir,
                    "placement.lp",
                    &placement_lp(&encoding, &placement, &config)?,
                )?;
            }
            Ok(Verdict::Secure)
        }
        Command::Analyze {
            encoding,
            placement,
            common,
        } => {
            let settings = Settings::resolve(&common)?;
            let fsm = load_fsm(&settings)?;
            let encoding = load_encoding(&fsm, &encoding)?;
            if let Some(v) = settings.variant {
                if v != encoding.variant {
                    bail!(
                        "--variant {v} does not match the encoding's {}",
                        encoding.variant
                    );
                }
            }
            let placement = Placement::from_json(&read(&placement)?)
                .with_context(|| format!("in {}", placement.display()))?;
            let attacker = settings.attacker(settings.lasers.unwrap_or(encoding.x))?;
            let v = pipeline::verify(
                &fsm,
                &encoding,
                &placement,
                &attacker,
                settings.pipeline.partitions,
            )?;
            write(
                &settings.out_dir,
                "report.json",
                &v.report.to_json_string(&fsm, &encoding),
            )?;
            summarize(&fsm, &encoding, &v);
            Ok(v.verdict())
        }
        Command::Pipeline { common } => {
            let settings = Settings::resolve(&common)?;
            let fsm = load_fsm(&settings)?;
            let config = settings.synthesis_config()?;
            let out = pipeline::run_pipeline(&fsm, &config)?;
            let dir = &settings.out_dir;
            write(dir, "encoding.json", &out.encoding.to_json_string(&fsm))?;
            write(dir, "placement.json", &out.placement.to_json_string())?;
            write(
                dir,
                "report.json",
                &out.verification.report.to_json_string(&fsm, &out.encoding),
            )?;
            if settings.dump_lp {
                write(dir, "encoding.lp", &encoding_lp(&fsm, &out.encoding)?)?;
                write(
                    dir,
                    "placement.lp",
                    &placement_lp(&out.encoding, &out.placement, &config)?,
                )?;
            }
            summarize(&fsm, &out.encoding, &out.verification);
            Ok(out.verdict())
        }
        Command::Metrics { encoding, common } => {
            let settings = Settings::resolve(&common)?;
            let fsm = load_fsm(&settings)?;
            let encoding = load_encoding(&fsm, &encoding)?;
            let x = settings.lasers.unwrap_or(encoding.x);
            let vm = compute_vm(&encoding, &fsm.classify(), x);
            let tvm = compute_tvm(&encoding, &fsm, x)?;
            let doc = json!({
                "fsm": fsm.name(),
                "variant": encoding.variant.as_str(),
                "lasers": x,
                "vm": metric_json(&vm),
                "tvm": metric_json(&tvm),
            });
            write(
                &settings.out_dir,
                "metrics.json",
                &serde_json::to_string_pretty(&doc)?,
            )?;
            println!(
                "{} {} x={x}: VM={vm} TVM={tvm}",
                fsm.name(),
                encoding.variant
            );
            Ok(Verdict::Secure)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(verdict) => ExitCode::from(verdict.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
