use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use banzkp::adversary::{run_attack, AttackKind};
use banzkp::costmodel::{compare, AccountingMode, RadioModel, TinyZkpBaseline, CSV_HEADER};
use banzkp::crypto::{ProtocolParams, DEFAULT_MODULUS_BITS, MIN_MODULUS_BITS};
use banzkp::netsim::{run, Scenario, Trace, PRESETS};
use banzkp::protocol::SINK_ID;
use banzkp::selftest;
use clap::{Parser, Subcommand, ValueEnum};

/// Zero-knowledge mutual authentication for body area networks: simulate,
/// attack, and price the handshake.
#[derive(Parser, Debug)]
#[command(name = "banzkp", version)]
struct Cli {
    /// Write results here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    /// Directory for results when --output is not given.
    #[arg(long, env = "BANZKP_OUT_DIR", global = true, hide_env_values = true)]
    out_dir: Option<PathBuf>,

    /// Worker threads for batches of independent runs.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one scenario and report its trace summary and cost ledger.
    Run {
        /// Preset name or path to a scenario file.
        #[arg(long, default_value = "honest7")]
        scenario: String,
        #[arg(long)]
        seed: u64,
        /// Overrides the scenario's modulus width.
        #[arg(long, value_parser = modulus_bits)]
        modulus_bits: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Run seeded attack trials and print one PASS/FAIL line per attack.
    Attack {
        #[arg(long, default_value = "all")]
        kind: String,
        #[arg(long)]
        seed: u64,
        /// Trials per attack. Defaults depend on the attack.
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, value_parser = modulus_bits, default_value_t = DEFAULT_MODULUS_BITS)]
        modulus_bits: usize,
    },
    /// Compare BANZKP with the TinyZKP baseline.
    Cost {
        #[arg(long, value_enum, default_value_t = Mode::Paper)]
        mode: Mode,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        #[arg(long, value_parser = modulus_bits, default_value_t = DEFAULT_MODULUS_BITS)]
        modulus_bits: usize,
        /// Sensor nodes in the network.
        #[arg(long, default_value_t = 6)]
        nodes: u64,
    },
    /// Run the invariant checks.
    Selftest {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_parser = modulus_bits, default_value_t = MIN_MODULUS_BITS)]
        modulus_bits: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Csv,
    Lines,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Paper,
    Wire,
}

fn modulus_bits(s: &str) -> Result<usize, String> {
    let bits: usize = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if bits < MIN_MODULUS_BITS {
        return Err(format!("must be at least {MIN_MODULUS_BITS}"));
    }
    if !bits.is_multiple_of(8) {
        return Err("must be a multiple of 8".into());
    }
    Ok(bits)
}

/// Result of a subcommand: text to emit and whether everything passed.
struct Outcome {
    text: String,
    ok: bool,
    default_name: String,
}

fn load_scenario(spec: &str, seed: u64) -> Result<Scenario> {
    if let Some(s) = Scenario::preset(spec, seed) {
        return Ok(s);
    }
    let path = Path::new(spec);
    if !path.exists() {
        bail!(
            "no preset or file named {spec:?}; presets: {}",
            PRESETS.join(", ")
        );
    }
    let mut s = Scenario::from_path(path)?;
    s.seed = seed;
    Ok(s)
}

fn run_table(trace: &Trace) -> String {
    let mut out = String::new();
    let s = trace.summary();
    writeln!(out, "scenario: {}", trace.scenario).unwrap();
    writeln!(out, "seed: {}", trace.seed).unwrap();
    writeln!(out, "modulus_bits: {}", trace.modulus_bits).unwrap();
    writeln!(out, "end_ms: {}", trace.end_ms).unwrap();
    writeln!(out, "digest: {}", trace.digest()).unwrap();
    writeln!(
        out,
        "frames: {} sent, {} delivered, {} dropped, {} bytes",
        s.frames_sent, s.frames_delivered, s.frames_dropped, s.bytes_sent
    )
    .unwrap();
    writeln!(out, "deliveries: {}", s.deliveries).unwrap();
    writeln!(out).unwrap();
    writeln!(
        out,
        "{:<6} {:>6} {:>5} {:<14} {:<14}",
        "node", "parent", "hops", "node_state", "sink_state"
    )
    .unwrap();
    for (id, state) in &trace.node_states {
        let route = trace.routes.route(*id);
        writeln!(
            out,
            "{:<6} {:>6} {:>5} {:<14} {:<14}",
            id,
            route.map_or("-".into(), |r| r.parent.to_string()),
            route.map_or("-".into(), |r| r.hops.to_string()),
            state.to_string(),
            trace.sink_state(*id).map_or("-".into(), |s| s.to_string()),
        )
        .unwrap();
    }
    writeln!(out).unwrap();
    out.push_str(&ledger_csv(trace));
    out
}

fn ledger_csv(trace: &Trace) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for (id, c) in &trace.ledger.entries {
        let role = if *id == SINK_ID {
            "sink".to_string()
        } else {
            format!("node{id}")
        };
        writeln!(
            out,
            "{role},{},{},{},{},{:.6},wire",
            c.bits_tx, c.bits_rx, c.modmuls, c.mem_bytes, c.energy_mj
        )
        .unwrap();
    }
    out
}

fn execute(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Run {
            scenario,
            seed,
            modulus_bits,
            format,
        } => {
            let mut s = load_scenario(scenario, *seed)?;
            if let Some(bits) = modulus_bits {
                s.params.modulus_bits = *bits;
            }
            let trace = run(&s)?;
            let (text, ext) = match format {
                Format::Table => (run_table(&trace), "txt"),
                Format::Csv => (ledger_csv(&trace), "csv"),
                Format::Lines => (trace.to_lines(), "jsonl"),
            };
            Ok(Outcome {
                text,
                ok: true,
                default_name: format!("run-{}-{seed}.{ext}", s.name),
            })
        }
        Command::Attack {
            kind,
            seed,
            trials,
            modulus_bits,
        } => {
            let kinds: Vec<AttackKind> = if kind == "all" {
                AttackKind::ALL.to_vec()
            } else {
                vec![kind.parse().map_err(anyhow::Error::msg)?]
            };
            let mut text = String::new();
            let mut ok = true;
            for k in kinds {
                let n = trials.unwrap_or_else(|| k.default_trials());
                let report = run_attack(k, *seed, n, *modulus_bits)?;
                ok &= report.pass();
                writeln!(text, "{}", report.line()).unwrap();
                for note in &report.notes {
                    writeln!(text, "  {note}").unwrap();
                }
            }
            Ok(Outcome {
                text,
                ok,
                default_name: format!("attack-{kind}-{seed}.txt"),
            })
        }
        Command::Cost {
            mode,
            format,
            modulus_bits,
            nodes,
        } => {
            let params = ProtocolParams::with_modulus_bits(*modulus_bits)?;
            let mode = match mode {
                Mode::Paper => AccountingMode::paper(),
                Mode::Wire => AccountingMode::Wire,
            };
            let report = compare(
                &params,
                mode,
                &RadioModel::default(),
                &TinyZkpBaseline::default(),
                *nodes,
            );
            let text = match format {
                Format::Table => report.to_table(),
                Format::Csv => report.to_csv(),
                Format::Lines => {
                    let mut s = serde_json::to_string(&report)?;
                    s.push('\n');
                    s
                }
            };
            Ok(Outcome {
                text,
                ok: true,
                default_name: format!(
                    "cost-{}.{}",
                    report.mode,
                    if *format == Format::Csv { "csv" } else { "txt" }
                ),
            })
        }
        Command::Selftest { seed, modulus_bits } => {
            let checks = selftest::run_all(*seed, *modulus_bits);
            let mut text = String::new();
            for c in &checks {
                let status = if c.pass { "PASS" } else { "FAIL" };
                writeln!(text, "{}: {status} ({})", c.name, c.detail).unwrap();
            }
            Ok(Outcome {
                text,
                ok: checks.iter().all(|c| c.pass),
                default_name: format!("selftest-{seed}.txt"),
            })
        }
    }
}

fn emit(cli: &Cli, outcome: &Outcome) -> Result<()> {
    let path = match (&cli.output, &cli.out_dir) {
        (Some(p), _) => Some(p.clone()),
        (None, Some(dir)) => {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            Some(dir.join(&outcome.default_name))
        }
        (None, None) => None,
    };
    match path {
        Some(p) => {
            std::fs::write(&p, &outcome.text)
                .with_context(|| format!("writing {}", p.display()))?;
            eprintln!("wrote {}", p.display());
        }
        None => print!("{}", outcome.text),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    #[cfg(feature = "parallel")]
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = execute(&cli).and_then(|outcome| {
        emit(&cli, &outcome)?;
        Ok(outcome.ok)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
