//! Command-line frontend.
//!
//! Exit codes: 0 = sufficient / equality, 1 = not sufficient / strict
//! inequality, 2 = invalid input, 3 = numerical breakdown. Reports go to
//! standard output unless `--out` redirects them (for `gen`, `--out` is the
//! filename prefix of the emitted documents).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use petz::entropy::{build_markov_state, MarkovSpec};
use petz::io::{self, Document, GeneratorSpec};
use petz::report::{render_json, ssa_report, structure_report, CheckReport, GenReport, TOOL_VERSION};
use petz::sufficiency::{
    check_sufficiency, synthesize_sufficient_instance, SufficiencyConfig, SyntheticSpec,
};
use petz::{Error, Result, DEFAULT_T_GRID};

#[derive(Parser)]
#[command(name = "petz", version, about = "Sufficiency of quantum coarse-grainings: \
Petz recovery, block decompositions, and strong-subadditivity equality structure")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Verdict tolerance.
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol: f64,

    /// Comma-separated t values for the cocycle grid.
    #[arg(
        long = "t-grid",
        global = true,
        value_delimiter = ',',
        allow_negative_numbers = true
    )]
    t_grid: Option<Vec<f64>>,

    /// Seed for generators; echoed into reports.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Display entropies in bits instead of nats (display-only conversion).
    #[arg(long, global = true)]
    bits: bool,

    /// Report destination (default: standard output). For gen: file prefix.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Emit the machine-readable JSON form of the report.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether a channel is sufficient for a pair of states.
    Check {
        channel: PathBuf,
        state1: PathBuf,
        state2: PathBuf,
    },
    /// Extract the block decomposition of a sufficient instance and pull it
    /// back through the recovery map.
    Structure {
        channel: PathBuf,
        state1: PathBuf,
        state2: PathBuf,
        /// Embed the per-block S/R factor matrices in the report.
        #[arg(long)]
        emit_factors: bool,
    },
    /// Strong-subadditivity gap of a tripartite state; with --structure,
    /// the Markov decomposition when the gap vanishes.
    Ssa {
        #[arg(required_unless_present = "batch", conflicts_with = "batch")]
        tripartite: Option<PathBuf>,
        #[arg(long)]
        structure: bool,
        /// Process every .json document in a directory, writing one report
        /// file next to each input.
        #[arg(long, value_name = "DIR")]
        batch: Option<PathBuf>,
    },
    /// Generate instances with known ground truth.
    Gen {
        #[command(subcommand)]
        family: GenCommand,
    },
}

#[derive(Subcommand)]
enum GenCommand {
    /// Markov tripartite state; blocks are LxR:weight, comma-separated.
    Markov {
        #[arg(long = "dA", required_unless_present = "spec")]
        dim_a: Option<usize>,
        #[arg(long = "dC", required_unless_present = "spec")]
        dim_c: Option<usize>,
        #[arg(long, required_unless_present = "spec")]
        blocks: Option<String>,
        /// Load the blueprint from an instance_spec document instead.
        #[arg(long, conflicts_with_all = ["dim_a", "dim_c", "blocks"])]
        spec: Option<PathBuf>,
    },
    /// Sufficient channel/state pair; blocks are d,m pairs separated by
    /// colons, weights one list per state.
    Sufficient {
        #[arg(long, required_unless_present = "spec")]
        blocks: Option<String>,
        #[arg(long, required_unless_present = "spec")]
        l1: Option<String>,
        #[arg(long, required_unless_present = "spec")]
        l2: Option<String>,
        #[arg(long = "env-dim")]
        env_dim: Option<usize>,
        /// Load the blueprint from an instance_spec document instead.
        #[arg(long, conflicts_with_all = ["blocks", "l1", "l2", "env_dim"])]
        spec: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: &Cli) -> Result<u8> {
    if !(cli.tol > 0.0) || !cli.tol.is_finite() {
        return Err(Error::InvalidSpec(format!(
            "tolerance must be a positive finite number, got {}",
            cli.tol
        )));
    }
    match &cli.command {
        Command::Check { channel, state1, state2 } => cmd_check(cli, channel, state1, state2),
        Command::Structure { channel, state1, state2, emit_factors } => {
            cmd_structure(cli, channel, state1, state2, *emit_factors)
        }
        Command::Ssa { tripartite, structure, batch } => match (tripartite, batch) {
            (_, Some(dir)) => cmd_ssa_batch(cli, dir, *structure),
            (Some(path), None) => {
                let (text, code) = analyze_ssa(cli, path, *structure)?;
                emit(cli, text)?;
                Ok(code)
            }
            (None, None) => unreachable!("clap enforces tripartite xor batch"),
        },
        Command::Gen { family } => cmd_gen(cli, family),
    }
}

fn config(cli: &Cli) -> SufficiencyConfig {
    SufficiencyConfig {
        tol: cli.tol,
        t_grid: cli.t_grid.clone().unwrap_or_else(|| DEFAULT_T_GRID.to_vec()),
    }
}

fn emit(cli: &Cli, text: String) -> Result<()> {
    match &cli.out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

struct Instance {
    channel: petz::channels::KrausChannel,
    d1: petz::linalg::DensityMatrix,
    d2: petz::linalg::DensityMatrix,
}

fn load_instance(channel: &Path, state1: &Path, state2: &Path) -> Result<Instance> {
    Ok(Instance {
        channel: io::read_document(channel)?.into_channel()?,
        d1: io::read_document(state1)?.into_state()?,
        d2: io::read_document(state2)?.into_state()?,
    })
}

fn cmd_check(cli: &Cli, channel: &Path, state1: &Path, state2: &Path) -> Result<u8> {
    let inst = load_instance(channel, state1, state2)?;
    let rep = check_sufficiency(&inst.channel, &inst.d1, &inst.d2, &config(cli))?;
    let report = CheckReport::from_run("check", &inst.channel, &rep, cli.seed);
    let text = if cli.json { render_json(&report)? } else { report.render_text() };
    emit(cli, text)?;
    Ok(if rep.verdict { 0 } else { 1 })
}

fn cmd_structure(
    cli: &Cli,
    channel: &Path,
    state1: &Path,
    state2: &Path,
    emit_factors: bool,
) -> Result<u8> {
    let inst = load_instance(channel, state1, state2)?;
    let cfg = config(cli);
    let rep = check_sufficiency(&inst.channel, &inst.d1, &inst.d2, &cfg)?;
    if !rep.verdict {
        // Structure is undefined; report the failed check instead.
        let report = CheckReport::from_run("structure", &inst.channel, &rep, cli.seed);
        let text = if cli.json { render_json(&report)? } else { report.render_text() };
        emit(cli, text)?;
        return Ok(1);
    }
    let report =
        structure_report(&inst.channel, &inst.d1, &inst.d2, &cfg, &rep, emit_factors, cli.seed)?;
    let text = if cli.json { render_json(&report)? } else { report.render_text() };
    emit(cli, text)?;
    Ok(0)
}

fn analyze_ssa(cli: &Cli, path: &Path, with_structure: bool) -> Result<(String, u8)> {
    let state = io::read_document(path)?.into_tripartite()?;
    let report = ssa_report(&state, cli.tol, with_structure, cli.bits, cli.seed)?;
    let code = if report.equality { 0 } else { 1 };
    let text = if cli.json { render_json(&report)? } else { report.render_text() };
    Ok((text, code))
}

fn cmd_ssa_batch(cli: &Cli, dir: &Path, with_structure: bool) -> Result<u8> {
    if cli.out.is_some() {
        return Err(Error::InvalidSpec(
            "--batch writes one report next to each input; --out does not apply".into(),
        ));
    }
    let mut inputs: Vec<PathBuf> = fs::read_dir(dir)?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .filter(|p| !p.to_string_lossy().ends_with(".report.json"))
        .collect();
    inputs.sort();
    if inputs.is_empty() {
        return Err(Error::InvalidDocument(format!(
            "batch directory {} contains no .json documents",
            dir.display()
        )));
    }
    let mut worst = 0u8;
    for path in &inputs {
        let name = path.file_name().unwrap_or_default().to_string_lossy().into_owned();
        let (text, code, extension) = match analyze_ssa(cli, path, with_structure) {
            Ok((text, code)) => {
                let ext = if cli.json { "report.json" } else { "report.txt" };
                (text, code, ext)
            }
            Err(e) => {
                let code = e.exit_code() as u8;
                (format!("error: {e}\n"), code, "report.txt")
            }
        };
        fs::write(path.with_extension(extension), text)?;
        println!("{name}: exit {code}");
        worst = worst.max(code);
    }
    Ok(worst)
}

fn gen_prefix(cli: &Cli, family: &str) -> String {
    match &cli.out {
        Some(path) => path.display().to_string(),
        None => family.to_string(),
    }
}

fn write_gen_outputs(
    cli: &Cli,
    family: &str,
    seed: u64,
    documents: &[(String, Document)],
) -> Result<u8> {
    let mut files = Vec::with_capacity(documents.len());
    for (path, document) in documents {
        io::write_document(Path::new(path), document)?;
        files.push(path.clone());
    }
    let report = GenReport {
        version: TOOL_VERSION.into(),
        command: "gen".into(),
        family: family.into(),
        seed,
        files,
    };
    let text = if cli.json { render_json(&report)? } else { report.render_text() };
    print!("{text}");
    Ok(0)
}

fn cmd_gen(cli: &Cli, family: &GenCommand) -> Result<u8> {
    match family {
        GenCommand::Markov { dim_a, dim_c, blocks, spec } => {
            let spec = if let Some(path) = spec {
                match io::read_document(path)?.into_spec()? {
                    GeneratorSpec::Markov(mut m) => {
                        if let Some(seed) = cli.seed {
                            m.seed = seed;
                        }
                        m
                    }
                    GeneratorSpec::Sufficient(_) => {
                        return Err(Error::InvalidSpec(
                            "spec family mismatch: expected markov, got sufficient".into(),
                        ))
                    }
                }
            } else {
                MarkovSpec {
                    dim_a: dim_a.ok_or_else(|| Error::InvalidSpec("--dA is required".into()))?,
                    dim_c: dim_c.ok_or_else(|| Error::InvalidSpec("--dC is required".into()))?,
                    blocks: io::parse_markov_blocks(
                        blocks.as_deref().ok_or_else(|| {
                            Error::InvalidSpec("--blocks is required".into())
                        })?,
                    )?,
                    seed: cli.seed.unwrap_or(0),
                }
            };
            let built = build_markov_state(&spec)?;
            let prefix = gen_prefix(cli, "markov");
            write_gen_outputs(
                cli,
                "markov",
                spec.seed,
                &[
                    (
                        format!("{prefix}.state.json"),
                        Document::tripartite(&built.state),
                    ),
                    (
                        format!("{prefix}.spec.json"),
                        Document::spec(&GeneratorSpec::Markov(spec.clone())),
                    ),
                ],
            )
        }
        GenCommand::Sufficient { blocks, l1, l2, env_dim, spec } => {
            let spec = if let Some(path) = spec {
                match io::read_document(path)?.into_spec()? {
                    GeneratorSpec::Sufficient(mut s) => {
                        if let Some(seed) = cli.seed {
                            s.seed = seed;
                        }
                        s
                    }
                    GeneratorSpec::Markov(_) => {
                        return Err(Error::InvalidSpec(
                            "spec family mismatch: expected sufficient, got markov".into(),
                        ))
                    }
                }
            } else {
                let weights = vec![
                    io::parse_weight_list(
                        l1.as_deref()
                            .ok_or_else(|| Error::InvalidSpec("--l1 is required".into()))?,
                        "state-1 weight",
                    )?,
                    io::parse_weight_list(
                        l2.as_deref()
                            .ok_or_else(|| Error::InvalidSpec("--l2 is required".into()))?,
                        "state-2 weight",
                    )?,
                ];
                SyntheticSpec {
                    blocks: io::parse_shape_blocks(
                        blocks.as_deref().ok_or_else(|| {
                            Error::InvalidSpec("--blocks is required".into())
                        })?,
                    )?,
                    weights,
                    env_dim: env_dim.unwrap_or(2),
                    seed: cli.seed.unwrap_or(0),
                    mismatched_r: false,
                }
            };
            let instance = synthesize_sufficient_instance(&spec)?;
            let prefix = gen_prefix(cli, "sufficient");
            write_gen_outputs(
                cli,
                "sufficient",
                spec.seed,
                &[
                    (
                        format!("{prefix}.channel.json"),
                        Document::channel(&instance.channel),
                    ),
                    (
                        format!("{prefix}.state1.json"),
                        Document::state(&instance.states[0]),
                    ),
                    (
                        format!("{prefix}.state2.json"),
                        Document::state(&instance.states[1]),
                    ),
                    (
                        format!("{prefix}.spec.json"),
                        Document::spec(&GeneratorSpec::Sufficient(spec.clone())),
                    ),
                ],
            )
        }
    }
}
