use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use mib_cli::{
    emit_csv, emit_gnuplot, metadata, parse_fractions, radius_for, run_bench, to_csv, BagFilter,
    BenchConfig, BenchError,
};
use mib_core::{
    build_index, load_dataset, Dataset, DistanceCounter, IndexConfig, MvpParams, RangeQuery,
    Structure,
};

#[derive(Parser)]
#[command(
    name = "mib",
    version,
    about = "Range search over strings under edit distance"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the selected structures and report their construction cost.
    Build(Common),
    /// Run one range query.
    Query(QueryArgs),
    /// Sweep search radii over sampled queries and write a CSV report.
    Bench(BenchArgs),
    /// Check every structure against a linear scan on sampled queries.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct Common {
    /// Newline-separated strings, one record per line.
    #[arg(long)]
    dataset: PathBuf,
    /// Keep only the first N distinct records.
    #[arg(long)]
    max_records: Option<usize>,
    /// Comma-separated structure names, or `all`.
    #[arg(long, default_value = "all")]
    structure: String,
    #[arg(long, env = "MIB_SEED", default_value_t = 0)]
    seed: u64,
    /// BK/FQ/FH bucket capacity.
    #[arg(long, default_value_t = 512)]
    bucket_size: usize,
    /// FH height (default: depth of the deepest FQ bucket).
    #[arg(long)]
    fh_height: Option<usize>,
    /// M tree and MTB internal fan-out.
    #[arg(long, default_value_t = 5)]
    fanout: usize,
    /// Leaf capacity of the covering-radius trees.
    #[arg(long, default_value_t = 256)]
    leaf_capacity: usize,
    /// MTB leaf-radius bound and BUBBLE admission threshold.
    #[arg(long, default_value_t = 5)]
    threshold: u32,
    /// MVP shape as vantage points, partitions, path length, leaf capacity.
    #[arg(long, default_value = "2,2,10,110", value_parser = parse_mvp)]
    mvp: MvpParams,
}

impl Common {
    fn structures(&self) -> Result<Vec<Structure>, BenchError> {
        let mut out: Vec<Structure> = Vec::new();
        for s in parse_structures(&self.structure).map_err(BenchError::Config)? {
            if !out.contains(&s) {
                out.push(s);
            }
        }
        Ok(out)
    }

    fn index_config(&self) -> IndexConfig {
        IndexConfig {
            seed: self.seed,
            bucket_size: self.bucket_size,
            fh_height: self.fh_height,
            mvp: self.mvp,
            fanout: self.fanout,
            ball_leaf_capacity: self.leaf_capacity,
            threshold: self.threshold,
            ..IndexConfig::default()
        }
    }

    fn load(&self) -> Result<Dataset, BenchError> {
        Ok(load_dataset(&self.dataset, self.max_records)?)
    }
}

#[derive(Args)]
struct QueryArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    query: String,
    /// Absolute search radius.
    #[arg(
        long,
        conflicts_with = "fraction",
        required_unless_present = "fraction"
    )]
    radius: Option<u32>,
    /// Search radius as a fraction of the query length, rounded up.
    #[arg(long)]
    fraction: Option<f64>,
    #[arg(long, default_value = "off", value_parser = parse_bag_filter)]
    bag_filter: BagFilter,
}

#[derive(Args)]
struct Sampling {
    /// `start:end:step` or a single fraction of the query length.
    #[arg(long, default_value = "0.1:1.0:0.1")]
    fractions: String,
    #[arg(long, default_value_t = 6)]
    query_sets: usize,
    #[arg(long, default_value_t = 500)]
    query_size: usize,
    #[arg(long, default_value = "off", value_parser = parse_bag_filter)]
    bag_filter: BagFilter,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    sampling: Sampling,
    /// Also check every result against a linear scan.
    #[arg(long)]
    verify: bool,
    /// CSV output path; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a gnuplot script next to the CSV.
    #[arg(long, requires = "out")]
    plot: bool,
    /// Report zero wall time so that repeated runs are byte-identical.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    sampling: Sampling,
}

fn parse_structures(s: &str) -> Result<Vec<Structure>, String> {
    if s == "all" {
        return Ok(Structure::ALL.to_vec());
    }
    s.split(',')
        .map(|name| name.trim().parse::<Structure>().map_err(|e| e.to_string()))
        .collect()
}

fn parse_mvp(s: &str) -> Result<MvpParams, String> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| format!("expected four integers v,m,p,leaf: {e}"))?;
    let [vantage_points, partitions, path_len, leaf_capacity] = parts[..] else {
        return Err("expected four integers v,m,p,leaf".into());
    };
    Ok(MvpParams {
        vantage_points,
        partitions,
        path_len,
        leaf_capacity,
        ..MvpParams::default()
    })
}

fn parse_bag_filter(s: &str) -> Result<BagFilter, String> {
    s.parse().map_err(|e: BenchError| e.to_string())
}

fn bench_config(common: &Common, sampling: &Sampling) -> Result<BenchConfig, BenchError> {
    Ok(BenchConfig {
        structures: common.structures()?,
        fractions: parse_fractions(&sampling.fractions)?,
        query_sets: sampling.query_sets,
        query_size: sampling.query_size,
        bag_filter: sampling.bag_filter,
        seed: common.seed,
        index: common.index_config(),
        verify: false,
        timing: true,
    })
}

fn build(common: &Common) -> Result<(), BenchError> {
    let dataset = common.load()?;
    let config = common.index_config();
    println!("structure,records,build_ms");
    for s in common.structures()? {
        let start = Instant::now();
        build_index(s, &dataset, &config)?;
        let ms = start.elapsed().as_secs_f64() * 1e3;
        println!("{s},{},{ms:.3}", dataset.len());
    }
    Ok(())
}

fn query(args: &QueryArgs) -> Result<(), BenchError> {
    let dataset = args.common.load()?;
    let radius = match (args.radius, args.fraction) {
        (Some(r), _) => r,
        (None, Some(f)) if f >= 0.0 => radius_for(f, args.query.chars().count()),
        _ => {
            return Err(BenchError::Config(
                "radius or fraction must be non-negative".into(),
            ))
        }
    };
    let q = RangeQuery::new(args.query.clone(), radius);
    let config = args.common.index_config();
    for &filter_on in args.bag_filter.modes() {
        for s in args.common.structures()? {
            let index = build_index(s, &dataset, &config)?;
            let mut counter = DistanceCounter::new().with_bag_filter(filter_on);
            let result = index.range_search(&q, &mut counter);
            let label = if filter_on {
                format!("{s}+bag")
            } else {
                s.to_string()
            };
            let matches: Vec<&str> = result
                .match_ids
                .iter()
                .map(|&id| dataset.text(id))
                .collect();
            println!(
                "{label}\tradius={radius}\tpct_scanned={:.4}\tfilter_evals={}\tmatches={}\t{}",
                result.percent_scanned(dataset.len()),
                result.filter_evals,
                matches.len(),
                matches.join(" "),
            );
        }
    }
    Ok(())
}

fn bench(args: &BenchArgs) -> Result<(), BenchError> {
    let dataset = args.common.load()?;
    let config = BenchConfig {
        verify: args.verify,
        timing: !args.no_timing,
        ..bench_config(&args.common, &args.sampling)?
    };
    let report = run_bench(&dataset, &config)?;
    match &args.out {
        Some(path) => {
            emit_csv(&report, path)?;
            let meta = path.with_extension("meta.txt");
            std::fs::write(&meta, metadata(&report, &config))
                .map_err(|source| BenchError::Io { path: meta, source })?;
            if args.plot {
                emit_gnuplot(&report, path)?;
            }
        }
        None => print!("{}", to_csv(&report)),
    }
    Ok(())
}

fn verify(args: &VerifyArgs) -> Result<(), BenchError> {
    let dataset = args.common.load()?;
    let config = BenchConfig {
        verify: true,
        timing: false,
        ..bench_config(&args.common, &args.sampling)?
    };
    let report = run_bench(&dataset, &config)?;
    println!(
        "ok: {} structures, {} queries, {} radii",
        config.structures.len() * config.bag_filter.modes().len(),
        report.queries,
        config.fractions.len()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match &cli.command {
        Command::Build(c) => build(c),
        Command::Query(a) => query(a),
        Command::Bench(a) => bench(a),
        Command::Verify(a) => verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mib: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
