//! Command implementations for the `afpm` binary.
//!
//! Every command writes its result to the supplied writer so the commands
//! can be driven from tests without spawning a process.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use afpm_core::oracle;
use afpm_core::search::{run_batch, SearchConfig, SearchResult};
use afpm_core::{
    abb_topk, generate_synthetic, load_categorical_csv, load_fimi, Exec, ItemId,
    TransactionDatabase, VerticalIndex,
};

pub mod report;

pub use report::{table1, CoverageSummary, DatasetSummary, PatternReport, RunReport};

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_GUARD: i32 = 3;

/// A failed command together with its process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn usage(error: anyhow::Error) -> Self {
        Failure {
            code: EXIT_USAGE,
            error,
        }
    }

    pub fn data(error: anyhow::Error) -> Self {
        Failure {
            code: EXIT_DATA,
            error,
        }
    }
}

impl From<afpm_core::Error> for Failure {
    fn from(e: afpm_core::Error) -> Self {
        let code = match e {
            afpm_core::Error::Guard(_) => EXIT_GUARD,
            afpm_core::Error::Param(_) => EXIT_USAGE,
            _ => EXIT_DATA,
        };
        Failure {
            code,
            error: e.into(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::data(e.into())
    }
}

type CmdResult = Result<(), Failure>;

#[derive(Debug, Parser)]
#[command(
    name = "afpm",
    version,
    about = "Mine top-k approximate frequent patterns"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the approximate branch-and-bound search and print a JSON report
    Mine(MineArgs),
    /// Compute the coverage of given patterns
    Eval(EvalArgs),
    /// Run a brute-force reference computation
    Oracle(OracleArgs),
    /// Write a synthetic FIMI dataset
    Gen(GenArgs),
    /// Repeat mining over a grid of epoch or delta values and print CSV
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Fimi,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Transaction file
    #[arg(long)]
    pub input: PathBuf,

    #[arg(long, value_enum, default_value_t = Format::Fimi)]
    pub format: Format,

    /// First CSV row is a header
    #[arg(long)]
    pub header: bool,

    /// CSV cell value meaning "missing"
    #[arg(long, default_value = "?")]
    pub missing: String,
}

#[derive(Debug, Clone, Args)]
pub struct SearchArgs {
    /// Number of patterns to return
    #[arg(long, default_value_t = 1)]
    pub k: usize,

    /// Initial approximation ratio
    #[arg(long, default_value_t = 1.0)]
    pub ar: f64,

    /// Explored nodes between approximation-ratio increases
    #[arg(long, default_value_t = 1000)]
    pub epoch: u64,

    /// Increase of the approximation ratio per epoch
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,

    /// Longest pattern to consider (0 = no cap)
    #[arg(long, default_value_t = 0)]
    pub max_len: usize,
}

impl SearchArgs {
    pub fn config(&self) -> SearchConfig {
        SearchConfig {
            ar0: self.ar,
            epoch: self.epoch,
            delta: self.delta,
            k: self.k,
            max_len: self.max_len,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct MineArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[command(flatten)]
    pub search: SearchArgs,

    /// Attach a coverage report to every returned pattern
    #[arg(long)]
    pub coverage: bool,

    /// Include internal positions in the report
    #[arg(long)]
    pub verbose: bool,

    /// Print a summary table instead of JSON (implies --coverage)
    #[arg(long)]
    pub table: bool,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub input: InputArgs,

    /// Comma-separated external item ids
    #[arg(long, conflicts_with = "report", required_unless_present = "report")]
    pub pattern: Option<String>,

    /// Report produced by `mine`; every pattern in it is evaluated
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleKind {
    /// Exhaustive objective maximization
    Best,
    /// Most frequent itemsets
    TopN,
    /// Sum of supports over all nonempty subsets of --pattern
    PowersetSum,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[arg(value_enum)]
    pub kind: OracleKind,

    #[command(flatten)]
    pub input: InputArgs,

    /// Longest itemset enumerated by `best` (0 = no cap)
    #[arg(long, default_value_t = 0)]
    pub max_len: usize,

    /// Number of itemsets returned by `top-n`
    #[arg(long, default_value_t = 10)]
    pub top_n: usize,

    /// Comma-separated external item ids
    #[arg(long)]
    pub pattern: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    /// Number of transactions
    #[arg(long)]
    pub n: usize,

    /// Number of items
    #[arg(long)]
    pub m: usize,

    /// Probability that a transaction contains a given item, in (0, 1]
    #[arg(long)]
    pub density: f64,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// FIMI file to write
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepParam {
    Epoch,
    Delta,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[command(flatten)]
    pub search: SearchArgs,

    #[arg(long, value_enum, default_value_t = SweepParam::Epoch)]
    pub param: SweepParam,

    #[arg(long, default_value_t = 200.0)]
    pub from: f64,

    #[arg(long, default_value_t = 1000.0)]
    pub to: f64,

    #[arg(long, default_value_t = 200.0)]
    pub step: f64,

    /// Write the CSV here instead of standard output
    #[arg(long)]
    pub output: Option<PathBuf>,

    /// Run grid points one after another
    #[arg(long)]
    pub sequential: bool,
}

/// A loaded database plus labels for CSV-derived items.
pub struct Loaded {
    pub db: TransactionDatabase,
    pub index: VerticalIndex,
    pub labels: Option<Vec<String>>,
}

impl Loaded {
    pub fn label_of(&self, id: ItemId) -> Option<String> {
        self.labels
            .as_ref()
            .and_then(|l| l.get(id.0 as usize).cloned())
    }
}

pub fn load(input: &InputArgs) -> Result<Loaded, Failure> {
    let file = File::open(&input.input)
        .with_context(|| format!("cannot open {}", input.input.display()))
        .map_err(Failure::data)?;
    let reader = BufReader::new(file);
    let (db, labels) = match input.format {
        Format::Fimi => (load_fimi(reader)?, None),
        Format::Csv => {
            let c = load_categorical_csv(reader, input.header, &input.missing)?;
            let labels = c.labels.iter().map(|(a, v)| format!("{a}={v}")).collect();
            (c.db, Some(labels))
        }
    };
    let index = VerticalIndex::build(&db);
    Ok(Loaded { db, index, labels })
}

fn parse_ids(text: &str) -> Result<Vec<ItemId>, Failure> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<u64>()
                .map(ItemId)
                .map_err(|_| Failure::usage(anyhow!("bad item id `{s}` in --pattern")))
        })
        .collect()
}

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> CmdResult {
    serde_json::to_writer_pretty(&mut *out, value).map_err(std::io::Error::from)?;
    writeln!(out)?;
    Ok(())
}

pub fn run(cli: Cli, out: &mut dyn Write) -> CmdResult {
    match cli.command {
        Command::Mine(a) => cmd_mine(&a, out),
        Command::Eval(a) => cmd_eval(&a, out),
        Command::Oracle(a) => cmd_oracle(&a, out),
        Command::Gen(a) => cmd_gen(&a, out),
        Command::Sweep(a) => cmd_sweep(&a, out),
    }
}

/// Runs the search and assembles the report.
pub fn mine_report(args: &MineArgs) -> Result<RunReport, Failure> {
    let cfg = args.search.config();
    cfg.validate()?;
    let loaded = load(&args.input)?;
    let start = Instant::now();
    let result = abb_topk(&loaded.db, &loaded.index, &cfg)?;
    let with_coverage = args.coverage || args.table;
    let patterns = result
        .patterns
        .iter()
        .map(|p| {
            let coverage = if with_coverage {
                Some(oracle::coverage(
                    &loaded.db,
                    &loaded.index,
                    p.pattern.positions(),
                )?)
            } else {
                None
            };
            Ok(PatternReport::new(&loaded, p, coverage, args.verbose))
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    Ok(RunReport::new(
        cfg,
        DatasetSummary::new(&args.input, &loaded.db),
        &result,
        patterns,
        start.elapsed().as_secs_f64(),
    ))
}

pub fn cmd_mine(args: &MineArgs, out: &mut dyn Write) -> CmdResult {
    let report = mine_report(args)?;
    if args.table {
        let name = args
            .input
            .input
            .file_stem()
            .map_or_else(|| "input".to_string(), |s| s.to_string_lossy().into_owned());
        write!(out, "{}", table1(&[(name, &report)]))?;
        Ok(())
    } else {
        write_json(out, &report)
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EvalEntry {
    pub items: Vec<ItemId>,
    #[serde(flatten)]
    pub report: CoverageSummary,
}

pub fn cmd_eval(args: &EvalArgs, out: &mut dyn Write) -> CmdResult {
    let loaded = load(&args.input)?;
    let patterns: Vec<Vec<ItemId>> = match (&args.pattern, &args.report) {
        (Some(p), _) => vec![parse_ids(p)?],
        (None, Some(path)) => {
            let file = File::open(path)
                .with_context(|| format!("cannot open {}", path.display()))
                .map_err(Failure::data)?;
            let report: RunReport = serde_json::from_reader(BufReader::new(file))
                .with_context(|| format!("{} is not a mine report", path.display()))
                .map_err(Failure::data)?;
            report.patterns.into_iter().map(|p| p.items).collect()
        }
        (None, None) => {
            return Err(Failure::usage(anyhow!(
                "one of --pattern or --report is required"
            )))
        }
    };
    let entries = patterns
        .into_iter()
        .map(|ids| {
            let positions = loaded.db.positions_of(&ids)?;
            let report = oracle::coverage(&loaded.db, &loaded.index, &positions)?;
            Ok(EvalEntry {
                items: ids,
                report: report.into(),
            })
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    write_json(out, &entries)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct OracleItemset {
    pub items: Vec<ItemId>,
    pub support: u64,
}

#[derive(Debug, Serialize)]
pub struct PowersetSum {
    pub items: Vec<ItemId>,
    pub powerset_support_sum: u128,
}

pub fn cmd_oracle(args: &OracleArgs, out: &mut dyn Write) -> CmdResult {
    let loaded = load(&args.input)?;
    let db = &loaded.db;
    match args.kind {
        OracleKind::Best => {
            let best = oracle::exhaustive_best(db, args.max_len)?;
            let value = best.map(|b| {
                serde_json::json!({
                    "items": db.ids_of(b.pattern.positions()),
                    "objective": b.objective,
                })
            });
            write_json(out, &value)
        }
        OracleKind::TopN => {
            let top: Vec<OracleItemset> = oracle::top_n_frequent(db, &loaded.index, args.top_n)
                .into_iter()
                .map(|f| OracleItemset {
                    items: db.ids_of(f.items.positions()),
                    support: f.support,
                })
                .collect();
            write_json(out, &top)
        }
        OracleKind::PowersetSum => {
            let text = args
                .pattern
                .as_deref()
                .ok_or_else(|| Failure::usage(anyhow!("powerset-sum needs --pattern")))?;
            let ids = parse_ids(text)?;
            let positions = db.positions_of(&ids)?;
            let sum = oracle::powerset_support_sum(db, &positions)?;
            write_json(
                out,
                &PowersetSum {
                    items: ids,
                    powerset_support_sum: sum,
                },
            )
        }
    }
}

pub fn cmd_gen(args: &GenArgs, out: &mut dyn Write) -> CmdResult {
    let db = generate_synthetic(args.n, args.m, args.density, args.seed)?;
    write_fimi_file(&db, &args.output)?;
    writeln!(
        out,
        "wrote {} transactions over {} items to {}",
        db.n(),
        db.m(),
        args.output.display()
    )?;
    Ok(())
}

fn write_fimi_file(db: &TransactionDatabase, path: &Path) -> CmdResult {
    let file = File::create(path)
        .with_context(|| format!("cannot create {}", path.display()))
        .map_err(Failure::data)?;
    let mut w = BufWriter::new(file);
    db.write_fimi(&mut w)?;
    w.flush()?;
    Ok(())
}

/// Grid values `from, from + step, ...` up to `to` inclusive.
pub fn sweep_values(from: f64, to: f64, step: f64) -> Result<Vec<f64>, Failure> {
    if !(step.is_finite() && step > 0.0 && from.is_finite() && to.is_finite() && to >= from) {
        return Err(Failure::usage(anyhow!("need step > 0 and to >= from")));
    }
    let count = ((to - from) / step + 1e-9).floor() as usize + 1;
    // grid points carry at most 12 decimals
    Ok((0..count)
        .map(|i| ((from + step * i as f64) * 1e12).round() / 1e12)
        .collect())
}

pub fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write) -> CmdResult {
    let base = args.search.config();
    base.validate()?;
    let values = sweep_values(args.from, args.to, args.step)?;
    let configs = values
        .iter()
        .map(|&v| {
            let cfg = match args.param {
                SweepParam::Epoch => SearchConfig {
                    epoch: v.round() as u64,
                    ..base
                },
                SweepParam::Delta => SearchConfig { delta: v, ..base },
            };
            cfg.validate()?;
            Ok(cfg)
        })
        .collect::<Result<Vec<_>, Failure>>()?;

    let loaded = load(&args.input)?;
    let exec = if args.sequential {
        Exec::Sequential
    } else {
        Exec::default()
    };
    let results = run_batch(&loaded.db, &loaded.index, &configs, exec)?;

    let mut csv = String::new();
    csv.push_str(&sweep_csv(args.param, &configs, &results));
    match &args.output {
        Some(path) => {
            std::fs::write(path, csv)
                .with_context(|| format!("cannot write {}", path.display()))
                .map_err(Failure::data)?;
        }
        None => out.write_all(csv.as_bytes())?,
    }
    Ok(())
}

pub fn sweep_csv(param: SweepParam, configs: &[SearchConfig], results: &[SearchResult]) -> String {
    let name = match param {
        SweepParam::Epoch => "epoch",
        SweepParam::Delta => "delta",
    };
    let mut s = format!("{name},objective,ar_final,nodes_visited,elapsed_sec\n");
    for (cfg, r) in configs.iter().zip(results) {
        let value = match param {
            SweepParam::Epoch => cfg.epoch.to_string(),
            SweepParam::Delta => cfg.delta.to_string(),
        };
        s.push_str(&format!(
            "{value},{},{},{},{:.6}\n",
            r.best_objective(),
            r.ar_final,
            r.nodes_visited,
            r.elapsed.as_secs_f64()
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_grid_is_inclusive() {
        assert_eq!(
            sweep_values(200.0, 1000.0, 200.0).unwrap(),
            vec![200.0, 400.0, 600.0, 800.0, 1000.0]
        );
        assert_eq!(sweep_values(0.1, 0.3, 0.1).unwrap(), vec![0.1, 0.2, 0.3]);
        assert_eq!(sweep_values(5.0, 5.0, 1.0).unwrap(), vec![5.0]);
    }

    #[test]
    fn sweep_grid_rejects_bad_ranges() {
        for (from, to, step) in [(1.0, 0.0, 1.0), (0.0, 1.0, 0.0), (0.0, 1.0, f64::NAN)] {
            assert_eq!(sweep_values(from, to, step).unwrap_err().code, EXIT_USAGE);
        }
    }

    #[test]
    fn ids_parse_with_spaces_and_trailing_comma() {
        assert_eq!(
            parse_ids(" 3, 1,7,").unwrap(),
            vec![ItemId(3), ItemId(1), ItemId(7)]
        );
        assert_eq!(parse_ids("1,x").unwrap_err().code, EXIT_USAGE);
    }

    #[test]
    fn core_errors_map_to_exit_codes() {
        use afpm_core::Error;
        assert_eq!(Failure::from(Error::Guard("g".into())).code, EXIT_GUARD);
        assert_eq!(Failure::from(Error::Param("p".into())).code, EXIT_USAGE);
        assert_eq!(Failure::from(Error::UnknownItem(9)).code, EXIT_DATA);
    }

    #[test]
    fn sweep_csv_has_one_row_per_config() {
        let db = afpm_core::load_fimi_str("1 2\n1 2\n1\n").unwrap();
        let index = afpm_core::VerticalIndex::build(&db);
        let configs: Vec<SearchConfig> = [1, 2]
            .iter()
            .map(|&epoch| SearchConfig {
                epoch,
                ..SearchConfig::default()
            })
            .collect();
        let results: Vec<_> = configs
            .iter()
            .map(|c| abb_topk(&db, &index, c).unwrap())
            .collect();
        let csv = sweep_csv(SweepParam::Epoch, &configs, &results);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(
            lines[0],
            "epoch,objective,ar_final,nodes_visited,elapsed_sec"
        );
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("1,4.666666666666667,"));
    }
}
