//! `lrswap`: reproducible experiments on the long-range swap process.
//!
//! Subcommands wire the engines together: `verify` runs the algebraic
//! identity and Yang-Baxter suites, `prob` cross-validates Bethe quadrature
//! against the series oracle and Monte Carlo, `generator` diffs extracted
//! rates against the interaction algebra, `simulate` runs trajectory
//! ensembles, and `table` emits Bethe probability tables.
//!
//! Every flag can also come from a flat `key=value` config file (flags win);
//! every output embeds the resolved configuration, seed, and tool version,
//! so a rerun with the same inputs is byte-identical. Exit codes: 0 success,
//! 1 check or tolerance failure, 2 invalid input or resource cap.

mod resolver;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use lrswap_core::bethe::{
    probability_table, tail_rule_window, QuadratureConfig,
};
use lrswap_core::dynamics::{
    generator_cross_check, series_distribution, simulate_ensemble, Configuration,
};
use lrswap_core::pairalg::verify_identities;
use lrswap_core::report::{
    generator_slice_json, probability_csv, wrap_report, CheckRecord, ProbabilityRow,
    VerificationReport,
};
use lrswap_core::rules::RuleType;
use lrswap_core::scalar::rat;
use lrswap_core::scatter::{seeded_rational_triples, verify_bc_sum, verify_ybe, SpectralPoint};
use lrswap_core::word::parse_word;
use lrswap_core::Error as CoreError;

use resolver::Resolver;

#[derive(Parser)]
#[command(name = "lrswap", version, about = "multispecies TASEP with long-range swap")]
struct Cli {
    /// Flat key=value config file; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: $LRSWAP_OUT_DIR or the working directory).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the identity suite, Yang-Baxter, and boundary-sum checks.
    Verify(VerifyArgs),
    /// Per-state probabilities by the requested methods, with discrepancies.
    Prob(ProbArgs),
    /// Diff extracted dynamics rates against the interaction algebra.
    Generator(GeneratorArgs),
    /// Trajectory ensemble frequencies.
    Simulate(SimulateArgs),
    /// Bethe probability table over an enumeration window.
    Table(TableArgs),
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    rule: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long = "N")]
    species: Option<usize>,
    /// Seed for the random rational spectral triples.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of Yang-Baxter triples.
    #[arg(long)]
    triples: Option<usize>,
    /// Write the JSON report here (defaults to stdout only).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ProbArgs {
    #[arg(long)]
    rule: Option<String>,
    /// Initial species word, e.g. 21.
    #[arg(long)]
    nu: Option<String>,
    /// Initial positions as a comma list (default 0,1,..,n-1).
    #[arg(long)]
    y: Option<String>,
    #[arg(long)]
    t: Option<f64>,
    /// Enumeration window beyond the initial front (default: Poisson tail rule).
    #[arg(long)]
    window: Option<usize>,
    /// bethe, series, mc, or all.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    nodes: Option<usize>,
    /// Re-evaluate at doubled node count and report per-row deltas.
    #[arg(long)]
    convergence: bool,
    #[arg(long)]
    tail_tol: Option<f64>,
    /// Tolerance on |p_bethe - p_series|.
    #[arg(long)]
    tol: Option<f64>,
    /// Monte Carlo agreement band in standard errors.
    #[arg(long)]
    mc_sigma: Option<f64>,
    /// Basename for the CSV/JSON outputs.
    #[arg(long)]
    prefix: Option<String>,
}

#[derive(Args)]
struct GeneratorArgs {
    #[arg(long)]
    rule: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long = "N")]
    species: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    rule: Option<String>,
    #[arg(long)]
    nu: Option<String>,
    #[arg(long)]
    y: Option<String>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    prefix: Option<String>,
}

#[derive(Args)]
struct TableArgs {
    #[arg(long)]
    rule: Option<String>,
    #[arg(long)]
    nu: Option<String>,
    #[arg(long)]
    y: Option<String>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    convergence: bool,
    #[arg(long)]
    prefix: Option<String>,
}

/// Failure of a run: carries the exit code and a message.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn invalid(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }

    fn check(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<CoreError> for Failure {
    fn from(err: CoreError) -> Self {
        Failure::invalid(err.to_string())
    }
}

impl From<String> for Failure {
    fn from(message: String) -> Self {
        Failure::invalid(message)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(cli);
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut resolver = Resolver::load(cli.config.as_deref())?;
    let out_dir = cli
        .out_dir
        .or_else(|| resolver.file_value("out-dir").map(PathBuf::from))
        .or_else(|| std::env::var_os("LRSWAP_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    match cli.command {
        Command::Verify(args) => cmd_verify(args, &mut resolver),
        Command::Prob(args) => cmd_prob(args, &mut resolver, &out_dir),
        Command::Generator(args) => cmd_generator(args, &mut resolver),
        Command::Simulate(args) => cmd_simulate(args, &mut resolver, &out_dir),
        Command::Table(args) => cmd_table(args, &mut resolver, &out_dir),
    }
}

fn parse_rule(value: &str) -> Result<RuleType, Failure> {
    RuleType::parse(value)
        .ok_or_else(|| Failure::invalid(format!("unknown rule {value:?} (drop-push, tasep, non-integrable)")))
}

fn parse_positions(value: &str) -> Result<Vec<i64>, Failure> {
    value
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<i64>()
                .map_err(|_| Failure::invalid(format!("bad position {p:?}")))
        })
        .collect()
}

fn initial_configuration(
    nu: &str,
    y: Option<String>,
) -> Result<Configuration, Failure> {
    let word = parse_word(nu)?;
    let positions = match y {
        Some(ref csv) => parse_positions(csv)?,
        None => (0..word.len() as i64).collect(),
    };
    Ok(Configuration::new(positions, word)?)
}

fn write_output(path: &std::path::Path, content: &str) -> Result<(), Failure> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| Failure::invalid(format!("cannot create {parent:?}: {e}")))?;
        }
    }
    std::fs::write(path, content)
        .map_err(|e| Failure::invalid(format!("cannot write {path:?}: {e}")))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_verify(args: VerifyArgs, resolver: &mut Resolver) -> Result<(), Failure> {
    let rule = parse_rule(&resolver.get("rule", args.rule, "drop-push".to_string())?)?;
    let n = resolver.get("n", args.n, 3usize)?;
    let species = resolver.get("N", args.species, 2usize)?;
    let seed = resolver.get("seed", args.seed, 0x5eed_0001u64)?;
    let triples = resolver.get("triples", args.triples, 20usize)?;

    let identities = verify_identities(n, species, rule)?;
    let mut report = VerificationReport::from_identities(&identities, seed);

    let mut ybe_pass = true;
    let mut ybe_max = 0.0f64;
    for [a, b, c] in seeded_rational_triples(triples, seed) {
        let out = verify_ybe(&a, &b, &c, species, rule)?;
        ybe_pass &= out.pass;
        ybe_max = ybe_max.max(out.max_discrepancy);
    }
    report.push(
        CheckRecord::new(format!("yang_baxter[{triples} seeded triples]"), ybe_pass)
            .with_discrepancy(ybe_max),
    );

    // Boundary-condition sum at a fixed regular rational point, all sites.
    let values: Vec<_> = [rat(1, 2), rat(3, 1), rat(7, 4), rat(-2, 5), rat(5, 3)]
        .into_iter()
        .take(n)
        .collect();
    if values.len() == n && n >= 2 {
        let xi = SpectralPoint::new(values)?;
        for site in 1..n {
            let out = verify_bc_sum(site, &xi, species, rule)?;
            report.push(
                CheckRecord::new(format!("boundary_sum[site={site}]"), out.pass)
                    .with_discrepancy(out.max_discrepancy),
            );
        }
    }

    let payload = serde_json::to_value(&report).expect("report serializes");
    let wrapped = wrap_report(payload, resolver.resolved());
    let rendered = serde_json::to_string_pretty(&wrapped).expect("json renders");
    if let Some(path) = args.out {
        write_output(&path, &rendered)?;
    } else {
        println!("{rendered}");
    }

    let identity_failures: Vec<_> = identities.failed().collect();
    let expectation_met = if rule.is_integrable() {
        report.all_pass()
    } else {
        ybe_pass && !identity_failures.is_empty()
    };
    if expectation_met {
        Ok(())
    } else {
        Err(Failure::check(format!(
            "unexpected identity outcome for {rule}: {} failures, yang_baxter pass = {ybe_pass}",
            identity_failures.len()
        )))
    }
}

fn cmd_prob(args: ProbArgs, resolver: &mut Resolver, out_dir: &std::path::Path) -> Result<(), Failure> {
    let rule = parse_rule(&resolver.get("rule", args.rule, "drop-push".to_string())?)?;
    let nu = resolver.require("nu", args.nu)?;
    let y = resolver.optional("y", args.y)?;
    let t = resolver.get("t", args.t, 1.0f64)?;
    let method = resolver.get("method", args.method, "all".to_string())?;
    let initial = initial_configuration(&nu, y)?;
    let n = initial.n();
    let window = resolver.get("window", args.window, tail_rule_window(n, t))?;
    let trials = resolver.get("trials", args.trials, 100_000u64)?;
    let seed = resolver.get("seed", args.seed, 0u64)?;
    let radius = resolver.get("radius", args.radius, QuadratureConfig::for_particle_count(n).radius)?;
    let nodes = resolver.get("nodes", args.nodes, QuadratureConfig::for_particle_count(n).nodes)?;
    let convergence = resolver.get("convergence", args.convergence.then_some(true), false)?;
    let tail_tol = resolver.get("tail-tol", args.tail_tol, 1e-12f64)?;
    let default_tol = if n <= 2 { 1e-8 } else { 1e-6 };
    let tol = resolver.get("tol", args.tol, default_tol)?;
    let mc_sigma = resolver.get("mc-sigma", args.mc_sigma, 4.0f64)?;
    let prefix = resolver.get("prefix", args.prefix, "prob".to_string())?;

    let (want_bethe, want_series, want_mc) = match method.as_str() {
        "bethe" => (true, false, false),
        "series" => (false, true, false),
        "mc" => (false, false, true),
        "all" => (true, true, true),
        other => return Err(Failure::invalid(format!("unknown method {other:?}"))),
    };

    let cfg = QuadratureConfig::new(radius, nodes, convergence)?;
    let bethe = if want_bethe {
        Some(probability_table(&initial, t, window, rule, &cfg)?)
    } else {
        None
    };
    let series = if want_series {
        Some(series_distribution(&initial, t, rule, tail_tol)?)
    } else {
        None
    };
    let mc = if want_mc {
        Some(simulate_ensemble(&initial, t, trials, seed, rule)?)
    } else {
        None
    };

    // Enumerate the same states for every requested method: the quadrature
    // window when present, otherwise the series support restricted to the
    // window, otherwise the Monte Carlo support.
    let states: Vec<Configuration> = if let Some(table) = &bethe {
        table
            .rows
            .iter()
            .map(|row| Configuration::new(row.positions.clone(), row.word.clone()))
            .collect::<Result<_, _>>()?
    } else if let Some(dist) = &series {
        let hi = initial.positions()[n - 1] + window as i64;
        dist.mass
            .keys()
            .filter(|c| *c.positions().last().unwrap() <= hi)
            .cloned()
            .collect()
    } else {
        mc.as_ref()
            .map(|counts| counts.keys().cloned().collect())
            .unwrap_or_default()
    };

    let mut rows = Vec::with_capacity(states.len());
    let mut max_diff = 0.0f64;
    let mut mc_breaches = 0usize;
    for (idx, state) in states.iter().enumerate() {
        let p_bethe = bethe.as_ref().map(|t| t.rows[idx].probability);
        let p_series = series.as_ref().map(|d| d.probability(state));
        let p_mc = mc
            .as_ref()
            .map(|counts| counts.get(state).copied().unwrap_or(0) as f64 / trials as f64);
        if let (Some(b), Some(s)) = (p_bethe, p_series) {
            max_diff = max_diff.max((b - s).abs());
        }
        if let (Some(m), Some(s)) = (p_mc, p_series) {
            if s > 1e-3 {
                let sigma = (s * (1.0 - s) / trials as f64).sqrt();
                if (m - s).abs() > mc_sigma * sigma {
                    mc_breaches += 1;
                }
            }
        }
        let abs_diff = match (p_bethe, p_series, p_mc) {
            (Some(b), Some(s), _) => Some((b - s).abs()),
            (Some(b), None, Some(m)) => Some((b - m).abs()),
            (None, Some(s), Some(m)) => Some((s - m).abs()),
            _ => None,
        };
        rows.push(ProbabilityRow {
            positions: state.positions().to_vec(),
            word: state.word().to_vec(),
            p_bethe,
            p_series,
            p_mc,
            abs_diff,
            imag_residual: bethe.as_ref().map(|t| t.rows[idx].imag_residual),
            conv_delta: bethe.as_ref().and_then(|t| t.rows[idx].convergence_delta),
        });
    }

    let csv = probability_csv(n, &rows, resolver.resolved());
    write_output(&out_dir.join(format!("{prefix}.csv")), &csv)?;

    let summary = json!({
        "query": {
            "initial": initial,
            "rule_type": rule,
            "t": t,
            "window": window,
        },
        "cfg": { "r": radius, "M": nodes },
        "methods": method,
        "states": rows.len(),
        "max_abs_diff_bethe_series": if want_bethe && want_series { Some(max_diff) } else { None },
        "mc_band_breaches": if want_mc && want_series { Some(mc_breaches) } else { None },
        "total_mass": bethe.as_ref().map(|t| t.total_mass),
        "deficit": bethe.as_ref().map(|t| t.deficit),
        "max_imag": bethe.as_ref().map(|t| t.max_imag),
        "seed": seed,
    });
    let wrapped = wrap_report(summary, resolver.resolved());
    let rendered = serde_json::to_string_pretty(&wrapped).expect("json renders");
    write_output(&out_dir.join(format!("{prefix}.json")), &rendered)?;
    println!("{rendered}");

    if want_bethe && want_series && max_diff > tol {
        return Err(Failure::check(format!(
            "|p_bethe - p_series| = {max_diff:e} exceeds tolerance {tol:e}"
        )));
    }
    if want_mc && want_series && mc_breaches > 0 {
        return Err(Failure::check(format!(
            "{mc_breaches} states outside the {mc_sigma} sigma Monte Carlo band"
        )));
    }
    Ok(())
}

fn cmd_generator(args: GeneratorArgs, resolver: &mut Resolver) -> Result<(), Failure> {
    let rule = parse_rule(&resolver.get("rule", args.rule, "drop-push".to_string())?)?;
    let n = resolver.get("n", args.n, 3usize)?;
    let species = resolver.get("N", args.species, 3usize)?;
    let report = generator_cross_check(n, species, rule)?;

    let slices: Vec<_> = report
        .checks
        .iter()
        .map(|check| {
            lrswap_core::dynamics::extract_generator(&check.source, species, rule)
                .map(|slice| generator_slice_json(&slice))
        })
        .collect::<Result<_, _>>()?;
    let payload = json!({
        "cross_check": report,
        "slices": slices,
    });
    let wrapped = wrap_report(payload, resolver.resolved());
    let rendered = serde_json::to_string_pretty(&wrapped).expect("json renders");
    if let Some(path) = args.out {
        write_output(&path, &rendered)?;
    } else {
        println!("{rendered}");
    }

    if report.all_pass() {
        Ok(())
    } else {
        let failing: Vec<_> = report
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| format!("{} ({} entries differ)", c.name, c.diffs.len()))
            .collect();
        Err(Failure::check(format!(
            "extracted rates disagree with the algebra: {}",
            failing.join(", ")
        )))
    }
}

fn cmd_simulate(
    args: SimulateArgs,
    resolver: &mut Resolver,
    out_dir: &std::path::Path,
) -> Result<(), Failure> {
    let rule = parse_rule(&resolver.get("rule", args.rule, "drop-push".to_string())?)?;
    let nu = resolver.require("nu", args.nu)?;
    let y = resolver.optional("y", args.y)?;
    let t = resolver.get("t", args.t, 1.0f64)?;
    let trials = resolver.get("trials", args.trials, 100_000u64)?;
    let seed = resolver.get("seed", args.seed, 0u64)?;
    let prefix = resolver.get("prefix", args.prefix, "simulate".to_string())?;

    let initial = initial_configuration(&nu, y)?;
    let counts = simulate_ensemble(&initial, t, trials, seed, rule)?;
    let rows: Vec<ProbabilityRow> = counts
        .iter()
        .map(|(state, &count)| ProbabilityRow {
            positions: state.positions().to_vec(),
            word: state.word().to_vec(),
            p_mc: Some(count as f64 / trials as f64),
            ..Default::default()
        })
        .collect();
    let csv = probability_csv(initial.n(), &rows, resolver.resolved());
    write_output(&out_dir.join(format!("{prefix}.csv")), &csv)?;

    let summary = json!({
        "initial": initial,
        "rule_type": rule,
        "t": t,
        "trials": trials,
        "seed": seed,
        "distinct_states": counts.len(),
    });
    let wrapped = wrap_report(summary, resolver.resolved());
    write_output(
        &out_dir.join(format!("{prefix}.json")),
        &serde_json::to_string_pretty(&wrapped).expect("json renders"),
    )?;
    Ok(())
}

fn cmd_table(args: TableArgs, resolver: &mut Resolver, out_dir: &std::path::Path) -> Result<(), Failure> {
    let rule = parse_rule(&resolver.get("rule", args.rule, "drop-push".to_string())?)?;
    let nu = resolver.require("nu", args.nu)?;
    let y = resolver.optional("y", args.y)?;
    let t = resolver.get("t", args.t, 1.0f64)?;
    let initial = initial_configuration(&nu, y)?;
    let n = initial.n();
    let window = resolver.get("window", args.window, tail_rule_window(n, t))?;
    let defaults = QuadratureConfig::for_particle_count(n);
    let radius = resolver.get("radius", args.radius, defaults.radius)?;
    let nodes = resolver.get("nodes", args.nodes, defaults.nodes)?;
    let convergence = resolver.get("convergence", args.convergence.then_some(true), false)?;
    let prefix = resolver.get("prefix", args.prefix, "table".to_string())?;

    let cfg = QuadratureConfig::new(radius, nodes, convergence)?;
    let table = probability_table(&initial, t, window, rule, &cfg)?;
    let rows: Vec<ProbabilityRow> = table
        .rows
        .iter()
        .map(|row| ProbabilityRow {
            positions: row.positions.clone(),
            word: row.word.clone(),
            p_bethe: Some(row.probability),
            imag_residual: Some(row.imag_residual),
            conv_delta: row.convergence_delta,
            ..Default::default()
        })
        .collect();
    let csv = probability_csv(n, &rows, resolver.resolved());
    write_output(&out_dir.join(format!("{prefix}.csv")), &csv)?;

    let summary = json!({
        "query": { "initial": initial, "rule_type": rule, "t": t, "window": window },
        "cfg": { "r": radius, "M": nodes },
        "total_mass": table.total_mass,
        "deficit": table.deficit,
        "max_imag": table.max_imag,
        "range_violations": table.range_violations,
    });
    let wrapped = wrap_report(summary, resolver.resolved());
    let rendered = serde_json::to_string_pretty(&wrapped).expect("json renders");
    write_output(&out_dir.join(format!("{prefix}.json")), &rendered)?;
    println!("{rendered}");
    Ok(())
}
