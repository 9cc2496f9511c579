//! `s3t` command line. Exit codes: 0 success, 1 usage error, 2 data or
//! verification error.

mod report;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use s3t_core::analytics;
use s3t_core::engine::{self, DeletionTarget, FailurePredicate, InitConfig, Mode, PlanSource, SystemState};
use s3t_core::montecarlo::{Granularity, PriorSpec, TrialConfig, DEFAULT_TRIALS};
use s3t_core::partition::{partition, PartitionPolicy};
use s3t_core::selection::{self, SelectionMethod, DEFAULT_HORIZON};
use s3t_core::{Budget, DeletionPrior, Permutation, ShardIndex, SliceIndex};

use crate::registry;
use crate::runner;
pub use report::{Format, Report};
use report::{num, opt_num, seq};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "s3t", version, about = "Sequence-aware sharded unlearning: selection, bounds, simulation, replay")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write to this file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Select B slice orderings for one shard.
    ///
    /// CSV columns: seq_index,sequence,score (sequence is space-separated
    /// 0-based slice indices; scores use the uniform prior when none is given).
    Select {
        #[arg(long = "L")]
        slices: usize,
        #[arg(long = "B")]
        budget: usize,
        #[arg(long, default_value = "cyclic")]
        method: SelectionMethod,
        /// JSON prior: an array of probabilities, or one array per shard.
        #[arg(long)]
        prior: Option<PathBuf>,
        /// Which shard's prior to use from a per-shard prior file.
        #[arg(long, default_value_t = 0)]
        shard: usize,
        #[arg(long, default_value_t = DEFAULT_HORIZON)]
        t: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Score slice orderings under a prior.
    ///
    /// CSV columns: seq_index,sequence,score.
    Score {
        #[arg(long)]
        prior: PathBuf,
        #[arg(long, default_value_t = 0)]
        shard: usize,
        /// Plan JSON ({method, sequences}) or the JSON output of `select`.
        #[arg(long, conflicts_with = "seqs")]
        plan: Option<PathBuf>,
        /// Comma-separated slice order; repeat for several sequences.
        #[arg(long = "seq", required_unless_present = "plan")]
        seqs: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_HORIZON)]
        t: u32,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Expected deletion requests until retraining, per configuration.
    ///
    /// CSV columns: m,L,B,b_prime,sisa_bound,s3t_bound.
    Bounds {
        #[arg(long, value_delimiter = ',', required = true)]
        m: Vec<usize>,
        #[arg(long = "L", value_delimiter = ',', required = true)]
        slices: Vec<usize>,
        #[arg(long = "B", value_delimiter = ',', default_value = "1")]
        budget: Vec<usize>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Closed-form probability that a shard keeps a prefix of k slices after r
    /// deletions.
    ///
    /// CSV columns: k,r,B,b_eff,p_sisa,p_s3t,gap.
    Retention {
        #[arg(long = "L")]
        slices: usize,
        #[arg(long = "B", value_delimiter = ',', default_value = "1")]
        budget: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        k: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        r: Vec<u64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Monte Carlo deletion rate (and optionally retention) per configuration.
    ///
    /// CSV columns: mode,plan,m,L,B,trials,mean,ci95_halfwidth,ci_low,ci_high,bound.
    /// With --k/--r: mode,plan,B,k,r,b_eff,p_sisa,p_s3t,analytic,empirical,std_error,trials.
    Simulate {
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Side-by-side deletion rates; ratios are relative to the first row.
    ///
    /// Without --config the rows are SISA at (m, L) followed by s3t for each B.
    /// CSV columns: mode,plan,m,L,B,trials,mean,ci95_halfwidth,bound,ratio.
    Compare {
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Replay a deletion log onto a snapshot and optionally verify against a
    /// reference snapshot.
    ///
    /// CSV columns: field,value.
    Replay {
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Save the replayed state as a snapshot.
        #[arg(long)]
        save: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Initialize a system and write its snapshot.
    Init {
        #[arg(long)]
        m: usize,
        #[arg(long = "L")]
        slices: usize,
        #[arg(long = "B", default_value_t = 1)]
        budget: usize,
        #[arg(long, default_value = "s3t")]
        mode: ModeArg,
        #[arg(long, default_value = "cyclic")]
        plan: SelectionMethod,
        #[arg(long)]
        prior: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_HORIZON)]
        t: u32,
        #[arg(long, default_value = "all-shards")]
        failure: FailureArg,
        /// Partition this many items so deletions can target items.
        #[arg(long)]
        items: Option<usize>,
        #[arg(long, default_value = "seeded-uniform")]
        policy: PolicyArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        snapshot: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Apply one deletion to snapshot + log and append the event to the log.
    ///
    /// CSV columns: request_id,target,newly_dead_variants,system_alive_after.
    Delete {
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long)]
        log: PathBuf,
        #[arg(long, requires = "slice", conflicts_with = "item")]
        shard: Option<usize>,
        #[arg(long, requires = "shard")]
        slice: Option<usize>,
        #[arg(long, required_unless_present = "shard")]
        item: Option<usize>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Assign items to (shard, slice) cells and print the manifest as JSON.
    Partition {
        #[arg(long)]
        n_items: usize,
        #[arg(long)]
        m: usize,
        #[arg(long = "L")]
        slices: usize,
        #[arg(long, default_value = "seeded-uniform")]
        policy: PolicyArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

macro_rules! value_enum_wrapper {
    ($name:ident, $inner:ty, $($text:literal => $val:expr),+) => {
        #[derive(Debug, Clone, Copy)]
        struct $name($inner);
        impl std::str::FromStr for $name {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                match s {
                    $($text => Ok(Self($val)),)+
                    _ => Err(format!("expected one of: {}", [$($text),+].join(", "))),
                }
            }
        }
    };
}

value_enum_wrapper!(ModeArg, Mode, "s3t" => Mode::S3t, "sisa" => Mode::Sisa);
value_enum_wrapper!(FailureArg, FailurePredicate,
    "all-shards" => FailurePredicate::AllShards, "any-shard" => FailurePredicate::AnyShard);
value_enum_wrapper!(PolicyArg, PartitionPolicy,
    "round-robin" => PartitionPolicy::RoundRobin, "seeded-uniform" => PartitionPolicy::SeededUniform);

#[derive(Debug, Clone, Args)]
struct SimArgs {
    /// TrialConfig JSON (one object or an array); replaces the config flags.
    #[arg(long, conflicts_with_all = ["m", "slices"])]
    config: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    m: Option<usize>,
    #[arg(long = "L", required_unless_present = "config")]
    slices: Option<usize>,
    /// Budgets to sweep.
    #[arg(long = "B", value_delimiter = ',', default_value = "1")]
    budget: Vec<usize>,
    #[arg(long, default_value = "s3t")]
    mode: ModeArg,
    #[arg(long, default_value = "cyclic")]
    plan: SelectionMethod,
    /// `uniform`, `dirichlet:ALPHA`, or a JSON prior file.
    #[arg(long, default_value = "uniform")]
    prior: String,
    /// `slice` (with replacement) or `item:N`.
    #[arg(long, default_value = "slice")]
    granularity: String,
    #[arg(long, default_value = "all-shards")]
    failure: FailureArg,
    #[arg(long, default_value_t = DEFAULT_HORIZON)]
    t: u32,
    /// Defaults to 10^4, or the config file's value.
    #[arg(long)]
    trials: Option<u64>,
    /// Defaults to 0, or the config file's value.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core. Results do not depend on it.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Prefix lengths for an empirical retention curve.
    #[arg(long, value_delimiter = ',', requires = "r")]
    k: Vec<usize>,
    /// Request counts for an empirical retention curve.
    #[arg(long, value_delimiter = ',', requires = "k")]
    r: Vec<u64>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) => f.write_str(m),
        }
    }
}

impl From<s3t_core::Error> for CliError {
    fn from(e: s3t_core::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<registry::RegistryError> for CliError {
    fn from(e: registry::RegistryError) -> Self {
        CliError::Data(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn data(msg: impl Into<String>) -> CliError {
    CliError::Data(msg.into())
}

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = stderr.write_all(text.as_bytes());
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(cli, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn emit(report: &Report, output: &OutputArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let text = report.render(output.format);
    match &output.out {
        Some(path) => fs::write(path, text).map_err(|e| data(format!("{}: {e}", path.display()))),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| data(format!("stdout: {e}"))),
    }
}

fn read_json(path: &Path) -> CliResult<Value> {
    let text = fs::read_to_string(path).map_err(|e| data(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| data(format!("{}: {e}", path.display())))
}

/// A prior file holds one probability vector or one vector per shard.
fn load_priors(path: &Path) -> CliResult<Vec<DeletionPrior>> {
    let v = read_json(path)?;
    let parsed = if v.as_array().is_some_and(|a| a.iter().all(Value::is_array)) {
        serde_json::from_value::<Vec<DeletionPrior>>(v)
    } else {
        serde_json::from_value::<DeletionPrior>(v).map(|p| vec![p])
    };
    let priors = parsed.map_err(|e| data(format!("{}: invalid prior: {e}", path.display())))?;
    if priors.is_empty() {
        return Err(data(format!("{}: no prior given", path.display())));
    }
    Ok(priors)
}

fn pick_prior(priors: Vec<DeletionPrior>, shard: usize) -> CliResult<DeletionPrior> {
    let n = priors.len();
    priors
        .into_iter()
        .nth(if n == 1 { 0 } else { shard })
        .ok_or_else(|| usage(format!("--shard {shard} but the prior file has {n} priors")))
}

fn plan_rows(report: &mut Report, seqs: &[Permutation], scores: &[f64]) {
    report.columns = vec!["seq_index", "sequence", "score"];
    report.rows = seqs
        .iter()
        .zip(scores)
        .enumerate()
        .map(|(i, (s, sc))| vec![i.to_string(), seq(&s.to_indices()), num(*sc)])
        .collect();
}

fn diversity_value(seqs: &[Permutation]) -> Option<f64> {
    selection::avg_pairwise_diversity(seqs).ok()
}

fn execute(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult<i32> {
    match cli.command {
        Command::Select {
            slices,
            budget,
            method,
            prior,
            shard,
            t,
            seed,
            output,
        } => {
            if method == SelectionMethod::Explicit {
                return Err(usage("explicit plans are read by `score --plan`, not selected"));
            }
            let prior = match &prior {
                Some(p) => Some(pick_prior(load_priors(p)?, shard)?),
                None if method.needs_prior() => {
                    return Err(usage(format!("--method {method} requires --prior")));
                }
                None => None,
            };
            if let Some(p) = &prior {
                if p.len() != slices {
                    return Err(data(format!("prior has {} entries, expected L={slices}", p.len())));
                }
            }
            let budget = Budget::new(budget)?;
            let plan = selection::select(method, slices, budget, prior.as_ref(), t, seed)?;
            let scoring = prior.clone().unwrap_or_else(|| DeletionPrior::uniform(slices));
            let scores = plan.scores(&scoring, t);
            let diversity = diversity_value(plan.sequences());
            let mut report = Report::new(
                "select",
                Some(seed),
                json!({"L": slices, "B": budget.get(), "method": method, "prior": prior, "t": t, "seed": seed}),
            );
            report.summary("avg_pairwise_diversity", opt_num(diversity));
            report.summary("total_score", num(scores.iter().sum()));
            plan_rows(&mut report, plan.sequences(), &scores);
            report.result = json!({
                "method": method,
                "t": t,
                "sequences": plan.sequences(),
                "scores": scores,
                "avg_pairwise_diversity": diversity,
            });
            emit(&report, &output, stdout)?;
        }
        Command::Score {
            prior,
            shard,
            plan,
            seqs,
            t,
            output,
        } => {
            let prior = pick_prior(load_priors(&prior)?, shard)?;
            let sequences: Vec<Permutation> = match &plan {
                Some(path) => {
                    let v = read_json(path)?;
                    let inner = v.get("result").cloned().unwrap_or(v);
                    let seqs = inner
                        .get("sequences")
                        .cloned()
                        .ok_or_else(|| data(format!("{}: no sequences", path.display())))?;
                    serde_json::from_value(seqs).map_err(|e| data(format!("{}: {e}", path.display())))?
                }
                None => seqs
                    .iter()
                    .map(|s| {
                        let order = s
                            .split(',')
                            .map(|x| x.trim().parse::<usize>())
                            .collect::<Result<Vec<_>, _>>()
                            .map_err(|e| usage(format!("--seq {s}: {e}")))?;
                        Permutation::new(order).map_err(CliError::from)
                    })
                    .collect::<CliResult<_>>()?,
            };
            if let Some(bad) = sequences.iter().find(|s| s.len() != prior.len()) {
                return Err(data(format!("sequence {bad} has length {}, prior has {}", bad.len(), prior.len())));
            }
            let scores: Vec<f64> = sequences
                .iter()
                .map(|s| selection::sequence_score(s, &prior, t))
                .collect();
            let diversity = diversity_value(&sequences);
            let mut report = Report::new("score", None, json!({"prior": prior, "t": t}));
            report.summary("avg_pairwise_diversity", opt_num(diversity));
            report.summary("total_score", num(scores.iter().sum()));
            plan_rows(&mut report, &sequences, &scores);
            report.result = json!({
                "t": t,
                "sequences": sequences,
                "scores": scores,
                "avg_pairwise_diversity": diversity,
            });
            emit(&report, &output, stdout)?;
        }
        Command::Bounds {
            m,
            slices,
            budget,
            output,
        } => {
            let mut report = Report::new("bounds", None, json!({"m": m, "L": slices, "B": budget}));
            report.columns = vec!["m", "L", "B", "b_prime", "sisa_bound", "s3t_bound"];
            let mut results = Vec::new();
            for &mm in &m {
                for &l in &slices {
                    for &b in &budget {
                        if mm == 0 || l == 0 || b == 0 {
                            return Err(usage("m, L and B must be at least 1"));
                        }
                        let r = analytics::bound_report(mm, l, b)?;
                        report.rows.push(vec![
                            mm.to_string(),
                            l.to_string(),
                            b.to_string(),
                            r.b_prime.to_string(),
                            num(r.sisa_bound),
                            num(r.s3t_bound),
                        ]);
                        results.push(r);
                    }
                }
            }
            report.result = json!(results);
            emit(&report, &output, stdout)?;
        }
        Command::Retention {
            slices,
            budget,
            k,
            r,
            output,
        } => {
            let mut report = Report::new("retention", None, json!({"L": slices, "B": budget, "k": k, "r": r}));
            report.columns = vec!["k", "r", "B", "b_eff", "p_sisa", "p_s3t", "gap"];
            let mut results = Vec::new();
            for &b in &budget {
                if b == 0 {
                    return Err(usage("B must be at least 1"));
                }
                for &kk in &k {
                    if kk == 0 || kk > slices {
                        return Err(usage(format!("k={kk} outside 1..=L")));
                    }
                    for &rr in &r {
                        let p = analytics::retention_point(kk, slices, rr, b)?;
                        report.rows.push(vec![
                            kk.to_string(),
                            rr.to_string(),
                            b.to_string(),
                            p.b_eff.to_string(),
                            num(p.p_sisa),
                            num(p.p_s3t),
                            num(p.gap),
                        ]);
                        results.push(json!({"B": b, "point": p}));
                    }
                }
            }
            report.result = json!(results);
            emit(&report, &output, stdout)?;
        }
        Command::Simulate { sim, output } => {
            let configs = trial_configs(&sim, false)?;
            let seed = configs[0].seed;
            let mut report = Report::new("simulate", Some(seed), json!(configs));
            let mut results = Vec::new();
            if sim.k.is_empty() {
                report.columns = vec![
                    "mode", "plan", "m", "L", "B", "trials", "mean", "ci95_halfwidth", "ci_low", "ci_high", "bound",
                ];
                for c in &configs {
                    let res = runner::estimate_deletion_rate(c, sim.jobs)?;
                    let bound = s3t_core::montecarlo::analytic_bound(c)?;
                    let (lo, hi) = res.ci95();
                    let mut row = config_cells(c);
                    row.extend([
                        c.trials.to_string(),
                        num(res.mean),
                        opt_num(res.ci95_halfwidth),
                        num(lo),
                        num(hi),
                        num(bound),
                    ]);
                    report.rows.push(row);
                    results.push(json!({"config": c, "result": res, "bound": bound}));
                }
            } else {
                report.columns = vec![
                    "mode", "plan", "B", "k", "r", "b_eff", "p_sisa", "p_s3t", "analytic", "empirical", "std_error",
                    "trials",
                ];
                for c in &configs {
                    let rows = runner::retention_curve(c, &sim.k, &sim.r, sim.jobs)?;
                    for row in &rows {
                        report.rows.push(vec![
                            mode_name(c.mode).into(),
                            config_plan_name(c),
                            c.budget.get().to_string(),
                            row.k.to_string(),
                            row.r.to_string(),
                            row.b_eff.to_string(),
                            num(row.p_sisa),
                            num(row.p_s3t),
                            num(row.analytic),
                            num(row.empirical),
                            num(row.std_error),
                            row.trials.to_string(),
                        ]);
                    }
                    results.push(json!({"config": c, "retention": rows}));
                }
            }
            report.result = json!(results);
            emit(&report, &output, stdout)?;
        }
        Command::Compare { sim, output } => {
            let configs = trial_configs(&sim, true)?;
            let rows = runner::compare(&configs, sim.jobs)?;
            let mut report = Report::new("compare", Some(configs[0].seed), json!(configs));
            report.columns = vec![
                "mode", "plan", "m", "L", "B", "trials", "mean", "ci95_halfwidth", "bound", "ratio",
            ];
            for r in &rows {
                let mut cells = config_cells(&r.config);
                cells.extend([
                    r.config.trials.to_string(),
                    num(r.mean),
                    opt_num(r.ci95),
                    num(r.bound),
                    num(r.ratio),
                ]);
                report.rows.push(cells);
            }
            report.result = json!(rows);
            emit(&report, &output, stdout)?;
        }
        Command::Replay {
            snapshot,
            log,
            reference,
            save,
            output,
        } => {
            let snap = registry::load_snapshot(&snapshot)?;
            let outcome = registry::replay(&snap, &log)?;
            if outcome.torn_tail {
                let _ = writeln!(stderr, "warning: {} ends with a torn line; it was ignored", log.display());
            }
            let verdict = match &reference {
                Some(path) => {
                    let expected = registry::load_snapshot(path)?;
                    let same = crate::canonical::to_canonical_bytes(&expected).map_err(|e| data(e.to_string()))?
                        == crate::canonical::to_canonical_bytes(&outcome.state).map_err(|e| data(e.to_string()))?;
                    Some(same)
                }
                None => None,
            };
            if let Some(path) = &save {
                registry::save_snapshot(&outcome.state, path)?;
            }
            let st = &outcome.state;
            let checksum = registry::state_checksum(st)?;
            let mut report = Report::new(
                "replay",
                None,
                json!({"snapshot": snapshot, "log": log, "reference": reference}),
            );
            let verdict_text = match verdict {
                Some(true) => "PASS",
                Some(false) => "FAIL",
                None => "n/a",
            };
            let fields: Vec<(&str, String)> = vec![
                ("events_applied", outcome.applied.to_string()),
                ("request_count", st.request_count().to_string()),
                ("alive_shards", st.alive_shards().to_string()),
                ("system_alive", st.system_alive().to_string()),
                ("best_prefixes", seq(&st.best_prefixes())),
                ("torn_tail", outcome.torn_tail.to_string()),
                ("checksum", checksum.clone()),
                ("verdict", verdict_text.to_string()),
            ];
            report.columns = vec!["field", "value"];
            report.rows = fields.iter().map(|(k, v)| vec![k.to_string(), v.clone()]).collect();
            report.result = json!({
                "events_applied": outcome.applied,
                "request_count": st.request_count(),
                "alive_shards": st.alive_shards(),
                "system_alive": st.system_alive(),
                "best_prefixes": st.best_prefixes(),
                "torn_tail": outcome.torn_tail,
                "checksum": checksum,
                "verdict": verdict_text,
            });
            emit(&report, &output, stdout)?;
            if verdict == Some(false) {
                let _ = writeln!(stderr, "FAIL: replayed state differs from {}", reference.unwrap().display());
                return Ok(EXIT_DATA);
            }
        }
        Command::Init {
            m,
            slices,
            budget,
            mode,
            plan,
            prior,
            t,
            failure,
            items,
            policy,
            seed,
            snapshot,
            output,
        } => {
            let priors = prior.as_deref().map(load_priors).transpose()?;
            if plan.needs_prior() && priors.is_none() && mode.0 == Mode::S3t {
                return Err(usage(format!("--plan {plan} requires --prior")));
            }
            let manifest = items
                .map(|n| partition(n, m, slices, policy.0, seed))
                .transpose()?;
            let mut cfg = InitConfig::new(m, slices, Budget::new(budget)?, mode.0, plan.into());
            cfg.priors = priors.clone();
            cfg.horizon = t;
            cfg.failure = failure.0;
            cfg.manifest = manifest;
            cfg.seed = seed;
            let state = engine::initialize(&cfg)?;
            let checksum = registry::save_snapshot(&state, &snapshot)?;
            let mut report = Report::new(
                "init",
                Some(seed),
                json!({"m": m, "L": slices, "B": budget, "mode": mode.0, "plan": plan, "prior": priors,
                       "t": t, "failure": failure.0, "items": items, "policy": policy.0, "seed": seed}),
            );
            report.summary("snapshot", snapshot.display());
            report.summary("checksum", &checksum);
            report.columns = vec!["shard", "variant", "sequence"];
            for sh in state.shards() {
                for (i, v) in sh.variants().iter().enumerate() {
                    report
                        .rows
                        .push(vec![sh.shard().to_string(), i.to_string(), seq(&v.perm().to_indices())]);
                }
            }
            report.result = json!({"snapshot": snapshot, "checksum": checksum, "state": state});
            emit(&report, &output, stdout)?;
        }
        Command::Delete {
            snapshot,
            log,
            shard,
            slice,
            item,
            output,
        } => {
            let snap = registry::load_snapshot(&snapshot)?;
            let outcome = registry::replay(&snap, &log)?;
            if outcome.torn_tail {
                registry::truncate_torn_tail(&log)?;
                let _ = writeln!(stderr, "warning: dropped a torn final line from {}", log.display());
            }
            let mut state: SystemState = outcome.state;
            let target = match (shard, slice, item) {
                (Some(sh), Some(sl), None) => DeletionTarget::Slice {
                    shard: ShardIndex(sh),
                    slice: SliceIndex(sl),
                },
                (None, None, Some(it)) => DeletionTarget::Item(it),
                _ => return Err(usage("give either --shard and --slice, or --item")),
            };
            let event = state.apply_deletion(target)?;
            registry::append_event(&log, &event)?;
            let mut report = Report::new("delete", None, json!({"snapshot": snapshot, "log": log}));
            report.summary("best_prefixes", seq(&state.best_prefixes()));
            report.columns = vec!["request_id", "target", "newly_dead_variants", "system_alive_after"];
            let target_text = match &event.target {
                DeletionTarget::Item(i) => format!("item {i}"),
                DeletionTarget::Slice { shard, slice } => format!("shard {shard} slice {slice}"),
            };
            report.rows.push(vec![
                event.request_id.to_string(),
                target_text,
                event.newly_dead_variants.to_string(),
                event.system_alive_after.to_string(),
            ]);
            report.result = json!({"event": event, "best_prefixes": state.best_prefixes()});
            emit(&report, &output, stdout)?;
        }
        Command::Partition {
            n_items,
            m,
            slices,
            policy,
            seed,
            out,
        } => {
            let manifest = partition(n_items, m, slices, policy.0, seed)?;
            let mut report = Report::new(
                "partition",
                Some(seed),
                json!({"n_items": n_items, "m": m, "L": slices, "policy": policy.0, "seed": seed}),
            );
            report.result = serde_json::to_value(&manifest).map_err(|e| data(e.to_string()))?;
            emit(&report, &OutputArgs { format: Format::Json, out }, stdout)?;
        }
    }
    Ok(EXIT_OK)
}

fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::S3t => "s3t",
        Mode::Sisa => "sisa",
    }
}

fn plan_name(p: &PlanSource) -> String {
    match p {
        PlanSource::Select(m) => m.name().to_string(),
        PlanSource::Explicit(_) => "explicit".into(),
    }
}

fn config_plan_name(c: &TrialConfig) -> String {
    match c.mode {
        Mode::Sisa => "identity".into(),
        Mode::S3t => plan_name(&c.plan_source),
    }
}

fn config_cells(c: &TrialConfig) -> Vec<String> {
    vec![
        mode_name(c.mode).into(),
        config_plan_name(c),
        c.shards.to_string(),
        c.slices.to_string(),
        c.budget.get().to_string(),
    ]
}

fn parse_prior_spec(text: &str) -> CliResult<PriorSpec> {
    if text == "uniform" {
        return Ok(PriorSpec::Uniform);
    }
    if let Some(a) = text.strip_prefix("dirichlet:") {
        let alpha: f64 = a.parse().map_err(|_| usage(format!("--prior {text}: bad alpha")))?;
        return Ok(PriorSpec::Dirichlet { alpha });
    }
    Ok(PriorSpec::Explicit(load_priors(Path::new(text))?))
}

fn parse_granularity(text: &str) -> CliResult<Granularity> {
    if text == "slice" || text == "slice-with-replacement" {
        return Ok(Granularity::SliceWithReplacement);
    }
    text.strip_prefix("item:")
        .and_then(|n| n.parse().ok())
        .map(|n_items| Granularity::Item { n_items })
        .ok_or_else(|| usage(format!("--granularity {text}: expected `slice` or `item:N`")))
}

/// Resolves config-file or flag input into concrete trial configs.
fn trial_configs(sim: &SimArgs, with_baseline: bool) -> CliResult<Vec<TrialConfig>> {
    let mut configs: Vec<TrialConfig> = match &sim.config {
        Some(path) => {
            let v = read_json(path)?;
            let list = if v.is_array() { v } else { Value::Array(vec![v]) };
            serde_json::from_value(list).map_err(|e| data(format!("{}: {e}", path.display())))?
        }
        None => {
            let (m, l) = (sim.m.unwrap_or(0), sim.slices.unwrap_or(0));
            let prior_spec = parse_prior_spec(&sim.prior)?;
            let granularity = parse_granularity(&sim.granularity)?;
            let make = |mode: Mode, b: usize| -> CliResult<TrialConfig> {
                let mut c = TrialConfig::new(m, l, b, mode)?.with_plan(sim.plan);
                c.prior_spec = prior_spec.clone();
                c.granularity = granularity;
                c.failure = sim.failure.0;
                c.horizon = sim.t;
                c.trials = DEFAULT_TRIALS;
                Ok(c)
            };
            let mut out = Vec::new();
            if with_baseline {
                out.push(make(Mode::Sisa, 1)?);
            }
            for &b in &sim.budget {
                if sim.mode.0 == Mode::Sisa && b != 1 {
                    return Err(usage("sisa mode requires B=1"));
                }
                out.push(make(sim.mode.0, b)?);
            }
            out
        }
    };
    if configs.is_empty() {
        return Err(data("no configurations given"));
    }
    for c in &mut configs {
        if let Some(t) = sim.trials {
            c.trials = t;
        }
        if let Some(s) = sim.seed {
            c.seed = s;
        }
        c.validate()?;
    }
    Ok(configs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn argument_definitions_are_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn prior_and_granularity_specs() {
        assert_eq!(parse_prior_spec("uniform").unwrap(), PriorSpec::Uniform);
        assert_eq!(parse_prior_spec("dirichlet:0.5").unwrap(), PriorSpec::Dirichlet { alpha: 0.5 });
        assert!(matches!(parse_prior_spec("dirichlet:x"), Err(CliError::Usage(_))));
        assert!(matches!(parse_prior_spec("/nonexistent/prior.json"), Err(CliError::Data(_))));
        assert_eq!(parse_granularity("item:40").unwrap(), Granularity::Item { n_items: 40 });
        assert!(parse_granularity("item:").is_err());
    }
}
