use std::fmt::Write as _;
use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Context};
use cliquetree::generate::{random_network, sampled_evidence, GeneratorConfig};
use cliquetree::oracle::{joint_with_cap, oracle_posteriors};
use cliquetree::{
    compile, parse_network, query_with_mode, serialize_network, AbsorptionMode, BeliefNetwork, Error, EvidenceSet,
    InferenceSession, PosteriorReport,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Command, Format};

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_INVALID: u8 = 2;
pub const EXIT_IMPOSSIBLE: u8 = 3;
pub const EXIT_CAP: u8 = 4;
pub const EXIT_DEVIATION: u8 = 5;

/// Largest engine/oracle disagreement `verify` accepts.
pub const VERIFY_TOLERANCE: f64 = 1e-9;

/// Raised for input that parses but cannot be used as given.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Syntax { .. } | Error::Invalid(_) | Error::Cycle(_)) => EXIT_INVALID,
        Some(Error::ImpossibleEvidence) => EXIT_IMPOSSIBLE,
        Some(Error::StateSpaceTooLarge { .. }) => EXIT_CAP,
        Some(_) => EXIT_USAGE,
        None if err.downcast_ref::<Usage>().is_some() => EXIT_USAGE,
        None if err.downcast_ref::<std::io::Error>().is_some() => EXIT_USAGE,
        None => EXIT_INVALID,
    }
}

fn load(path: &Path) -> anyhow::Result<BeliefNetwork> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(parse_network(&text)?)
}

fn evidence(net: &BeliefNetwork, bindings: &[(String, String)]) -> anyhow::Result<EvidenceSet> {
    Ok(EvidenceSet::from_labels(net, bindings.iter().map(|(k, v)| (k.as_str(), v.as_str())))?)
}

fn print_json(value: &impl serde::Serialize) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

pub fn run(command: Command) -> anyhow::Result<ExitCode> {
    match command {
        Command::Compile { network } => {
            let net = load(&network)?;
            print_json(&compile(&net)?.stats())?;
        }
        Command::Infer { network, evidence: ev, format, mode } => {
            let net = load(&network)?;
            let ev = evidence(&net, &ev.set)?;
            let template = Arc::new(compile(&net)?);
            let report = query_with_mode(&template, &ev, mode.into())?;
            match format {
                Format::Json => print_json(&report)?,
                Format::Table => print!("{}", report_table(&net, &report)),
            }
        }
        Command::Verify { network, evidence: ev, trials, seed, max_observed, cap } => {
            let net = load(&network)?;
            let sets = match trials {
                Some(n) => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    (0..n)
                        .map(|_| {
                            let count = rng.gen_range(0..=max_observed.min(net.len()));
                            sampled_evidence(&mut rng, &net, count)
                        })
                        .collect()
                }
                None => vec![evidence(&net, &ev.set)?],
            };
            let deviation = verify(&net, &sets, cap)?;
            let pass = deviation <= VERIFY_TOLERANCE;
            print_json(&serde_json::json!({
                "trials": sets.len(),
                "max_deviation": deviation,
                "tolerance": VERIFY_TOLERANCE,
                "pass": pass,
            }))?;
            if !pass {
                return Ok(ExitCode::from(EXIT_DEVIATION));
            }
        }
        Command::Bench { network, evidence_sweep, repeat, seed, max_observed } => {
            let net = load(&network)?;
            if repeat == 0 {
                bail!(Usage("--repeat must be at least 1".into()));
            }
            print!("{}", bench(&net, evidence_sweep, repeat, seed, max_observed)?);
        }
        Command::Gen { nodes, arcs, max_card, seed } => {
            if max_card < 2 {
                bail!(Usage("--max-card must be at least 2".into()));
            }
            print!("{}", serialize_network(&random_network(GeneratorConfig { nodes, arcs, max_card, seed })));
        }
        Command::ExportDot { network, forest } => {
            let net = load(&network)?;
            if forest {
                print!("{}", compile(&net)?.forest.to_dot(&net));
            } else {
                print!("{}", net.to_dot());
            }
        }
        Command::Serve { port, host, snapshot } => serve(&host, port, snapshot)?,
    }
    Ok(ExitCode::SUCCESS)
}

/// Largest absolute difference between engine and oracle over every
/// posterior and P(e). Evidence both sides reject as impossible counts as
/// agreement.
pub fn verify(net: &BeliefNetwork, sets: &[EvidenceSet], cap: u128) -> anyhow::Result<f64> {
    let table = joint_with_cap(net, cap)?;
    let template = Arc::new(compile(net)?);
    let mut worst: f64 = 0.0;
    for ev in sets {
        let engine = query_with_mode(&template, ev, AbsorptionMode::Removal);
        let oracle = oracle_posteriors(net, &table, ev);
        match (engine, oracle) {
            (Ok(report), Ok((expected, p))) => {
                worst = worst.max((report.p_evidence - p).abs());
                for (v, dist) in expected.iter().enumerate() {
                    let got = &report.posteriors[net.variable(v).id.as_str()];
                    for (a, b) in got.iter().zip(dist) {
                        worst = worst.max((a - b).abs());
                    }
                }
            }
            (Err(Error::ImpossibleEvidence), Err(Error::ImpossibleEvidence)) => {}
            (Err(Error::ImpossibleEvidence), Ok(_)) | (Ok(_), Err(Error::ImpossibleEvidence)) => {
                worst = f64::INFINITY;
            }
            (Err(e), _) | (_, Err(e)) => return Err(e.into()),
        }
    }
    Ok(worst)
}

pub fn report_table(net: &BeliefNetwork, report: &PosteriorReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "P(e) = {:.6e}", report.p_evidence);
    let width = net.variables().iter().map(|v| v.id.len()).max().unwrap_or(0);
    for v in net.variables() {
        let dist = &report.posteriors[v.id.as_str()];
        let cells: Vec<String> = v.values.iter().zip(dist).map(|(l, p)| format!("{l}={p:.6}")).collect();
        let mark = if report.evidence.contains_key(&v.id) { "*" } else { " " };
        let _ = writeln!(out, "{mark} {:width$}  {}", v.id, cells.join("  "));
    }
    out
}

fn bench(
    net: &BeliefNetwork,
    sweep: bool,
    repeat: usize,
    seed: u64,
    max_observed: Option<usize>,
) -> anyhow::Result<String> {
    let start = Instant::now();
    let template = Arc::new(compile(net)?);
    let compile_us = start.elapsed().as_secs_f64() * 1e6;
    let stats = template.stats();

    // One sampled assignment; the sweep observes its values on a growing
    // prefix of a shuffled variable list, so every set is possible and
    // each contains the previous one.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let full = sampled_evidence(&mut rng, net, net.len());
    let order: Vec<(String, usize)> = {
        let mut ids: Vec<(String, usize)> = full.iter().map(|(k, v)| (k.to_string(), v)).collect();
        for i in (1..ids.len()).rev() {
            ids.swap(i, rng.gen_range(0..=i));
        }
        ids
    };
    let last = if sweep { max_observed.unwrap_or(net.len()).min(net.len()) } else { 0 };

    let mut out = String::new();
    let _ = writeln!(
        out,
        "# {}: {} variables, {} cliques, {} clique cells, compiled in {compile_us:.0} us",
        net.name(),
        net.len(),
        stats.cliques,
        stats.clique_cells
    );
    let _ = writeln!(
        out,
        "{:>8} {:>8} {:>12} {:>10} {:>12} {:>14}",
        "observed", "mode", "mean_us", "checks", "cells_sent", "working_cells"
    );
    for size in 0..=last {
        let ev = order[..size].iter().fold(EvidenceSet::new(), |ev, (k, v)| ev.with(k.clone(), *v));
        for mode in [AbsorptionMode::Removal, AbsorptionMode::Zeroing] {
            let begin = Instant::now();
            let mut session = InferenceSession::with_mode(Arc::clone(&template), mode);
            for i in 0..repeat {
                if i > 0 {
                    session = InferenceSession::with_mode(Arc::clone(&template), mode);
                }
                session.absorb_evidence(&ev)?;
                session.propagate()?;
                session.report(begin.elapsed())?;
            }
            let mean = begin.elapsed().as_secs_f64() * 1e6 / repeat as f64;
            let c = session.counters();
            let label = match mode {
                AbsorptionMode::Removal => "removal",
                AbsorptionMode::Zeroing => "zeroing",
            };
            let _ = writeln!(
                out,
                "{size:>8} {label:>8} {mean:>12.1} {:>10} {:>12} {:>14}",
                c.checks,
                c.cells_sent,
                session.working_cells()
            );
        }
    }
    Ok(out)
}

fn serve(host: &str, port: u16, snapshot: Option<std::path::PathBuf>) -> anyhow::Result<()> {
    tracing_subscriber::fmt().with_writer(std::io::stderr).init();
    let store = match &snapshot {
        Some(path) if path.exists() => cliquetree_service::Store::load_snapshot(path)
            .map_err(|e| anyhow::anyhow!("cannot load snapshot {}: {e}", path.display()))?,
        _ => cliquetree_service::Store::new(),
    };
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind((host, port)).await?;
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        cliquetree_service::serve(listener, store, snapshot, shutdown).await
    })?;
    Ok(())
}
