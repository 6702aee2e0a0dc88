//! Experiment harness CLI: dataset generation, training, evaluation,
//! ablation sweeps, verification suites, and embedding export.
//!
//! Configuration is a single JSON file (all fields optional, defaults
//! apply) plus repeated `--set dotted.path=value` overrides.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use loopsign::checks::{all_passed, geometry_suite, gradcheck_suite, frechet_suite, render_table};
use loopsign::data::{generate_synthetic, Dataset, Split, SyntheticTaskSpec};
use loopsign::error::{Error, Result};
use loopsign::harness::{
    ablate, evaluate, export_embeddings, load_checkpoint, train, write_rows_csv, AblationAxis,
    RunConfig,
};

#[derive(Parser)]
#[command(name = "loopsign", version, about = "Looped-transformer sign recognition with hyperbolic alignment")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic skeleton dataset.
    GenData {
        /// Output directory for JSONL splits and manifest.json.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        classes: usize,
        #[arg(long, default_value_t = 16)]
        frames: usize,
        #[arg(long, default_value_t = 200)]
        samples_per_class: usize,
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 0.8)]
        train_fraction: f64,
    },
    /// Train a model and write metrics.jsonl plus checkpoint.json.
    Train {
        /// Dataset directory (manifest.json plus JSONL splits).
        #[arg(long)]
        data: PathBuf,
        /// Output directory for this run.
        #[arg(long)]
        out: PathBuf,
        /// JSON config file; missing fields take defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Dotted-path overrides, e.g. --set model.d_model=32.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
    },
    /// Evaluate a checkpoint on a dataset split.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "test")]
        split: String,
        /// Optional directory for eval.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an ablation sweep and write results.csv.
    Ablate {
        /// One of: loop, design, manifold, curvature, scale, injection,
        /// extra-feature.
        #[arg(long)]
        axis: String,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
    },
    /// Finite-difference gradient verification of the full objective
    /// (64-bit, all loop variants × all manifolds).
    Gradcheck,
    /// Geometry property suite (64-bit).
    Geomtest,
    /// Export tangent-space embeddings for external projection tools.
    ExportEmbeddings {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_split(s: &str) -> Result<Split> {
    match s {
        "train" => Ok(Split::Train),
        "val" => Ok(Split::Val),
        "test" => Ok(Split::Test),
        other => Err(Error::Config(format!("unknown split '{other}'"))),
    }
}

/// Apply `key=value` onto a JSON tree at the dotted path, creating objects
/// along the way. Values parse as JSON when possible, else as strings.
fn apply_override(root: &mut serde_json::Value, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override '{spec}' is not KEY=VALUE")))?;
    let value: serde_json::Value = serde_json::from_str(raw)
        .unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
    let mut node = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if i + 1 == parts.len() {
            node[part] = value;
            return Ok(());
        }
        if !node[part].is_object() {
            node[part] = serde_json::json!({});
        }
        node = &mut node[part];
    }
    Ok(())
}

fn load_config(file: Option<&Path>, sets: &[String]) -> Result<RunConfig> {
    let mut tree = match file {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Io { path: p.display().to_string(), source: e })?;
            serde_json::from_str(&text)?
        }
        None => serde_json::json!({}),
    };
    for s in sets {
        apply_override(&mut tree, s)?;
    }
    let cfg: RunConfig = serde_json::from_value(tree)?;
    cfg.validate()?;
    Ok(cfg)
}

fn run() -> Result<bool> {
    let cli = Cli::parse();
    match cli.command {
        Command::GenData {
            out,
            classes,
            frames,
            samples_per_class,
            noise,
            seed,
            train_fraction,
        } => {
            let spec = SyntheticTaskSpec {
                classes,
                frames,
                samples_per_class,
                noise,
                seed,
                train_fraction,
            };
            let manifest = generate_synthetic(&spec, &out)?;
            println!(
                "wrote {} records over {} classes to {}",
                manifest.records.len(),
                classes,
                out.display()
            );
            Ok(true)
        }
        Command::Train { data, out, config, sets } => {
            let cfg = load_config(config.as_deref(), &sets)?;
            let dataset = Dataset::open_dir(&data)?;
            let outcome = train(&cfg, &dataset, Some(&out))?;
            let last = outcome.losses.last();
            println!(
                "trained {} steps; final joint loss {:.4}",
                outcome.losses.len(),
                last.map(|l| l.joint).unwrap_or(f64::NAN)
            );
            if let Some(report) = &outcome.final_eval {
                println!("val P-I {:.4}  P-C {:.4}", report.p_i, report.p_c);
            }
            println!("metrics: {}", out.join("metrics.jsonl").display());
            println!("checkpoint: {}", out.join("checkpoint.json").display());
            Ok(true)
        }
        Command::Eval { checkpoint, data, split, out } => {
            let (state, cfg, _vocab) = load_checkpoint(&checkpoint)?;
            let dataset = Dataset::open_dir(&data)?;
            let report = evaluate(
                &state,
                &dataset,
                parse_split(&split)?,
                cfg.pad_to,
                cfg.batch_size,
            )?;
            let json = serde_json::to_string_pretty(&report)?;
            println!("{json}");
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)
                    .map_err(|e| Error::Io { path: dir.display().to_string(), source: e })?;
                let p = dir.join("eval.json");
                std::fs::write(&p, json)
                    .map_err(|e| Error::Io { path: p.display().to_string(), source: e })?;
            }
            Ok(true)
        }
        Command::Ablate { axis, data, out, config, sets } => {
            let axis = AblationAxis::parse(&axis)?;
            let cfg = load_config(config.as_deref(), &sets)?;
            let dataset = Dataset::open_dir(&data)?;
            let rows = ablate(axis, &cfg, &dataset)?;
            std::fs::create_dir_all(&out)
                .map_err(|e| Error::Io { path: out.display().to_string(), source: e })?;
            let csv = out.join("results.csv");
            write_rows_csv(&rows, &csv)?;
            for r in &rows {
                println!(
                    "{:<24} depth {:>2}  params {:>8}  P-I {:.4}  P-C {:.4}",
                    r.method, r.effective_depth, r.param_count, r.p_i, r.p_c
                );
            }
            println!("results: {}", csv.display());
            Ok(true)
        }
        Command::Gradcheck => {
            let results = gradcheck_suite()?;
            print!("{}", render_table(&results));
            Ok(all_passed(&results))
        }
        Command::Geomtest => {
            let mut results = geometry_suite();
            results.extend(frechet_suite());
            print!("{}", render_table(&results));
            Ok(all_passed(&results))
        }
        Command::ExportEmbeddings { checkpoint, data, out } => {
            let (state, cfg, _vocab) = load_checkpoint(&checkpoint)?;
            let dataset = Dataset::open_dir(&data)?;
            std::fs::create_dir_all(&out)
                .map_err(|e| Error::Io { path: out.display().to_string(), source: e })?;
            let path = out.join("embeddings.csv");
            let rows = export_embeddings(&state, &dataset, cfg.pad_to, cfg.batch_size, &path)?;
            println!("wrote {rows} embeddings to {}", path.display());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
