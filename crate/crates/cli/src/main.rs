//! Command-line driver: replay disruption scenarios, export the event DAG,
//! emit the consensus recovery-plan report, run the membership scaling
//! experiment, and train machine models.
//!
//! Exit codes: 0 success, 1 input error, 2 runtime error, 64 usage error.
//! `DLT_RECOVERY_LOG={error|info|debug}` controls diagnostic verbosity on
//! stderr; data outputs go only to the paths given by flags.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dlt_recovery_core::scenario::load_scenario;
use dlt_recovery_core::sim::{build_params, run_params, scaling_experiment, SimConfig, SimError};
use dlt_recovery_core::utfm::{
    parse_model, render_model, train_baum_welch, ActionSymbol, Phase, PseudocountConfig, StateId,
    TrainingCorpus, UtfmBuilder,
};

const EXIT_INPUT: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "dlt-recovery", version, about = "Decentralized disruption-recovery consensus simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay a scenario and write the consensus recovery-plan report.
    Run(RunArgs),
    /// Measure time to first consensus while growing the membership.
    Scaling(ScalingArgs),
    /// Fit a model to an observation corpus with pseudocount smoothing.
    Train(TrainArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file.
    #[arg(long)]
    scenario: PathBuf,
    /// Override the scenario's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Recovery-plan report output (CSV).
    #[arg(long)]
    report: PathBuf,
    /// DAG export output.
    #[arg(long)]
    export_graph: PathBuf,
    /// Optional sync transcript output.
    #[arg(long)]
    transcript: Option<PathBuf>,
}

#[derive(Args)]
struct ScalingArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, default_value_t = 4)]
    min_roles: usize,
    #[arg(long, default_value_t = 11)]
    max_roles: usize,
    /// Output table (CSV).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Corpus file: one `alphabet` line, then `seq` lines.
    #[arg(long)]
    corpus: PathBuf,
    /// Prior-count file: `tactical/operational/strategic = N` and
    /// `feature <symbol> = N` lines.
    #[arg(long)]
    priors: PathBuf,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
    /// Trained model output; the iteration log lands next to it in
    /// `<out>.log`.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(
        env_logger::Env::new().filter_or("DLT_RECOVERY_LOG", "info"),
    )
    .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap's own help/version output is a success, anything else is
            // a usage error.
            if e.use_stderr() {
                eprintln!("{e}");
                return ExitCode::from(EXIT_USAGE);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };

    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Scaling(args) => cmd_scaling(args),
        Command::Train(args) => cmd_train(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => ExitCode::from(code),
    }
}

fn input_error(msg: impl std::fmt::Display) -> u8 {
    log::error!("{msg}");
    EXIT_INPUT
}

fn runtime_error(msg: impl std::fmt::Display) -> u8 {
    log::error!("{msg}");
    EXIT_RUNTIME
}

fn usage_error(msg: impl std::fmt::Display) -> u8 {
    log::error!("{msg}");
    EXIT_USAGE
}

fn write_file(path: &Path, contents: &str) -> Result<(), u8> {
    std::fs::write(path, contents).map_err(|e| runtime_error(format!("writing {}: {e}", path.display())))
}

fn cmd_run(args: RunArgs) -> Result<(), u8> {
    let scenario = load_scenario(&args.scenario).map_err(input_error)?;
    let mut config = SimConfig::from_scenario(&scenario);
    if let Some(seed) = args.seed {
        config.seed = seed;
    }

    let (mut params, stake_records) = build_params(&config).map_err(sim_error_code)?;
    params.keep_transcript = args.transcript.is_some();
    let out = run_params(&params).map_err(sim_error_code)?;

    for r in &stake_records {
        log::info!(
            "stake {}: weight_sum={} transitions={} ice={:.3} stake={}",
            r.role,
            r.weight_sum,
            r.transitions,
            r.ice,
            r.stake
        );
    }
    log::info!(
        "run complete: {} events, {} transactions ordered, {} rounds decided, first consensus {:?} ms",
        out.report.events_created,
        out.report.transactions_ordered,
        out.report.rounds_decided,
        out.report.time_to_first_consensus_ms
    );

    let mut report = String::from(
        "consensus_position,famous_witness,flight_id,role,tactical_delay_min,turnaround_min,block_time_min,strategic_delay_min,stake,consensus_timestamp_ms\n",
    );
    for ot in out.stores[0].consensus_order() {
        let role_idx = ot.transaction.role.0 as usize;
        let impact = ot.transaction.impact;
        report.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            ot.rank,
            if ot.famous_witness { "yes" } else { "no" },
            ot.transaction.flight_id,
            out.report.agents[role_idx],
            impact.tactical_delay_min,
            impact.turnaround_min,
            impact.block_time_min,
            impact.strategic_delay_min,
            out.report.stakes[role_idx],
            ot.consensus_timestamp,
        ));
    }
    write_file(&args.report, &report)?;
    write_file(&args.export_graph, &out.stores[0].export_graph())?;
    if let Some(path) = &args.transcript {
        let mut text = out.transcript.join("\n");
        if !text.is_empty() {
            text.push('\n');
        }
        write_file(path, &text)?;
    }
    Ok(())
}

fn sim_error_code(e: SimError) -> u8 {
    match e {
        SimError::InvalidConfig(_) | SimError::AdversaryNotMember(_) => input_error(e),
        _ => runtime_error(e),
    }
}

fn cmd_scaling(args: ScalingArgs) -> Result<(), u8> {
    if args.min_roles > args.max_roles || args.min_roles < 2 {
        return Err(usage_error(format!(
            "invalid role range {}..{}",
            args.min_roles, args.max_roles
        )));
    }
    let scenario = load_scenario(&args.scenario).map_err(input_error)?;
    if scenario.agents.len() < args.max_roles {
        return Err(input_error(format!(
            "scenario defines {} roles but --max-roles is {}",
            scenario.agents.len(),
            args.max_roles
        )));
    }
    let config = SimConfig::from_scenario(&scenario);
    let table = scaling_experiment(&config, args.min_roles, args.max_roles).map_err(sim_error_code)?;

    let mut out = String::from("n_roles,time_to_first_consensus_ms\n");
    for (n, ttfc) in &table {
        let cell = ttfc.map(|v| v.to_string()).unwrap_or_else(|| "-".into());
        out.push_str(&format!("{n},{cell}\n"));
        log::info!("{n} roles: first consensus at {cell} ms");
    }
    write_file(&args.out, &out)
}

struct CorpusFile {
    alphabet: Vec<ActionSymbol>,
    sequences: Vec<Vec<ActionSymbol>>,
}

fn parse_corpus(text: &str) -> Result<CorpusFile, String> {
    let mut alphabet: Option<Vec<ActionSymbol>> = None;
    let mut sequences = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        match fields.next() {
            Some("alphabet") => {
                let mut syms: Vec<ActionSymbol> = fields.map(ActionSymbol::new).collect();
                if syms.is_empty() {
                    return Err(format!("line {}: empty alphabet", idx + 1));
                }
                syms.sort();
                syms.dedup();
                alphabet = Some(syms);
            }
            Some("seq") => {
                let seq: Vec<ActionSymbol> = fields.map(ActionSymbol::new).collect();
                if seq.is_empty() {
                    return Err(format!("line {}: empty sequence", idx + 1));
                }
                sequences.push(seq);
            }
            Some(other) => return Err(format!("line {}: unknown directive `{other}`", idx + 1)),
            None => unreachable!(),
        }
    }
    let alphabet = alphabet.ok_or("corpus must declare an `alphabet` line")?;
    if sequences.is_empty() {
        return Err("corpus has no `seq` lines".into());
    }
    for seq in &sequences {
        for sym in seq {
            if !alphabet.contains(sym) {
                return Err(format!("sequence symbol `{sym}` is not in the alphabet"));
            }
        }
    }
    Ok(CorpusFile { alphabet, sequences })
}

fn parse_priors(text: &str) -> Result<PseudocountConfig, String> {
    let mut config = PseudocountConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected `key = count`", idx + 1))?;
        let count: u64 = value
            .trim()
            .parse()
            .map_err(|_| format!("line {}: bad count `{}`", idx + 1, value.trim()))?;
        let key = key.trim();
        if let Some(phase) = Phase::parse(key) {
            config.per_phase.insert(phase, count);
        } else if let Some(feature) = key.strip_prefix("feature ") {
            config.per_feature.insert(feature.trim().to_string(), count);
        } else {
            return Err(format!("line {}: unknown key `{key}`", idx + 1));
        }
    }
    Ok(config)
}

/// Fresh full-support twelve-state model over the corpus alphabet:
/// uniform rows perturbed by small seeded noise to break symmetry.
fn initial_model(alphabet: &[ActionSymbol]) -> dlt_recovery_core::utfm::Utfm {
    use rand_seed::SplitMix;
    let mut noise = SplitMix::new(0x5eed_cafe);
    let states = StateId::ALL;
    let n = states.len() as f64;
    let m = alphabet.len() as f64;
    let mut b = UtfmBuilder::new().states(states).alphabet(alphabet.iter().cloned());
    let init: Vec<f64> = states.iter().map(|_| 1.0 + noise.unit() * 1e-3).collect();
    let total: f64 = init.iter().sum();
    for (i, &s) in states.iter().enumerate() {
        b = b.initial(s, init[i] / total);
        if s.phase() == Phase::Strategic {
            b = b.accept(s);
        }
    }
    for &s in &states {
        for a in alphabet {
            let mut row: Vec<f64> = states.iter().map(|_| 1.0 / n + noise.unit() * 1e-3).collect();
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= total);
            for (t, w) in states.iter().zip(&row) {
                b = b.transition(s, a.clone(), *t, *w);
            }
        }
        let mut row: Vec<f64> = alphabet.iter().map(|_| 1.0 / m + noise.unit() * 1e-3).collect();
        let total: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= total);
        for (a, w) in alphabet.iter().zip(&row) {
            b = b.emission(s, a.clone(), *w);
        }
    }
    b.build().expect("fresh model is well-formed")
}

/// Tiny deterministic noise source for symmetry breaking.
mod rand_seed {
    pub struct SplitMix(u64);

    impl SplitMix {
        pub fn new(seed: u64) -> Self {
            SplitMix(seed)
        }

        fn next(&mut self) -> u64 {
            self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
            let mut z = self.0;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
            z ^ (z >> 31)
        }

        /// Uniform in [-1, 1).
        pub fn unit(&mut self) -> f64 {
            (self.next() >> 11) as f64 / (1u64 << 52) as f64 - 1.0
        }
    }
}

fn cmd_train(args: TrainArgs) -> Result<(), u8> {
    let corpus_text = std::fs::read_to_string(&args.corpus)
        .map_err(|e| input_error(format!("{}: {e}", args.corpus.display())))?;
    let corpus_file = parse_corpus(&corpus_text).map_err(input_error)?;
    let priors_text = std::fs::read_to_string(&args.priors)
        .map_err(|e| input_error(format!("{}: {e}", args.priors.display())))?;
    let priors = parse_priors(&priors_text).map_err(input_error)?;
    if args.max_iter == 0 {
        return Err(usage_error("--max-iter must be at least 1"));
    }
    if args.tol.is_nan() || args.tol <= 0.0 {
        return Err(usage_error("--tol must be positive"));
    }

    if priors.is_zero() {
        let mut seen: Vec<&ActionSymbol> = Vec::new();
        for seq in &corpus_file.sequences {
            for sym in seq {
                if !seen.contains(&sym) {
                    seen.push(sym);
                }
            }
        }
        for sym in &corpus_file.alphabet {
            if !seen.contains(&sym) {
                log::warn!(
                    "symbol `{sym}` never occurs in the corpus and all priors are zero: \
                     its trained probabilities will hit the zero-probability problem"
                );
            }
        }
    }

    let model = initial_model(&corpus_file.alphabet);
    let corpus = TrainingCorpus::from_sequences(corpus_file.sequences);
    let outcome = train_baum_welch(&model, &corpus, &priors, args.tol, args.max_iter)
        .map_err(runtime_error)?;

    let rendered = render_model(&outcome.model);
    // The serialized form must load back cleanly.
    parse_model(&rendered).map_err(|e| runtime_error(format!("trained model failed reload: {e}")))?;
    write_file(&args.out, &rendered)?;

    let mut log_text = String::new();
    for (i, ll) in outcome.log2_likelihoods.iter().enumerate() {
        log_text.push_str(&format!("{} {ll:.6}\n", i + 1));
    }
    let log_path = args.out.with_extension(
        args.out
            .extension()
            .map(|e| format!("{}.log", e.to_string_lossy()))
            .unwrap_or_else(|| "log".into()),
    );
    write_file(&log_path, &log_text)?;
    log::info!(
        "trained in {} iterations, final log2-likelihood {:.3}; model at {}, log at {}",
        outcome.log2_likelihoods.len(),
        outcome.log2_likelihoods.last().unwrap(),
        args.out.display(),
        log_path.display()
    );
    Ok(())
}
