//! Radius sweeps over seeded query sets, reporting the share of the
//! collection each structure had to compare against the query.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use mib_core::rng::{self, Stream};
use mib_core::{
    build_index, linear_scan, Dataset, DistanceCounter, IndexConfig, RangeQuery, RecordId,
    Structure,
};
use rand::seq::index::sample;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{structure} returned a wrong result for query {query:?} at radius {radius}")]
    Verification {
        structure: String,
        query: String,
        radius: u32,
    },
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Core(#[from] mib_core::Error),
}

impl BenchError {
    /// Process exit status: 1 configuration, 2 verification, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) => 1,
            BenchError::Core(mib_core::Error::InvalidParameter(_)) => 1,
            BenchError::Verification { .. } => 2,
            BenchError::Io { .. } => 3,
            BenchError::Core(_) => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BagFilter {
    On,
    Off,
    Both,
}

impl BagFilter {
    /// Filter settings to run, plain first.
    pub fn modes(self) -> &'static [bool] {
        match self {
            BagFilter::On => &[true],
            BagFilter::Off => &[false],
            BagFilter::Both => &[false, true],
        }
    }
}

impl FromStr for BagFilter {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, BenchError> {
        match s {
            "on" => Ok(BagFilter::On),
            "off" => Ok(BagFilter::Off),
            "both" => Ok(BagFilter::Both),
            _ => Err(BenchError::Config(format!(
                "bag filter must be on, off or both, got `{s}`"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub structures: Vec<Structure>,
    pub fractions: Vec<f64>,
    pub query_sets: usize,
    pub query_size: usize,
    pub bag_filter: BagFilter,
    pub seed: u64,
    pub index: IndexConfig,
    /// Check every result against a linear scan.
    pub verify: bool,
    /// Measure wall time; when off, `time_ms` is reported as zero so that
    /// reports are byte-for-byte reproducible.
    pub timing: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            structures: Structure::ALL.to_vec(),
            fractions: parse_fractions("0.1:1.0:0.1").expect("valid default"),
            query_sets: 6,
            query_size: 500,
            bag_filter: BagFilter::Off,
            seed: 0,
            index: IndexConfig::default(),
            verify: false,
            timing: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    /// Structure name, suffixed `+bag` when the bag filter was on.
    pub structure: String,
    pub fraction: f64,
    /// Mean radius over the queries.
    pub radius: f64,
    pub pct_scanned: f64,
    pub filter_evals: f64,
    pub time_ms: f64,
    pub matches: f64,
    /// Edit-distance evaluations summed over all queries.
    pub primary_total: u64,
    /// Bag-distance evaluations summed over all queries.
    pub filter_total: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub dataset_len: usize,
    pub queries: usize,
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn row(&self, structure: &str, fraction: f64) -> Option<&BenchRow> {
        self.rows
            .iter()
            .find(|r| r.structure == structure && (r.fraction - fraction).abs() < 1e-9)
    }

    /// Rows of one structure in fraction order.
    pub fn series(&self, structure: &str) -> Vec<&BenchRow> {
        self.rows
            .iter()
            .filter(|r| r.structure == structure)
            .collect()
    }
}

/// Parses `start:end:step` or a single fraction. Values are rounded to nine
/// decimals so that `0.1:1.0:0.1` yields exactly ten points.
pub fn parse_fractions(list: &str) -> Result<Vec<f64>, BenchError> {
    let bad = || BenchError::Config(format!("invalid fraction list `{list}`"));
    let parts: Vec<f64> = list
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_, _>>()?;
    let round = |x: f64| (x * 1e9).round() / 1e9;
    let out = match parts.as_slice() {
        [single] => vec![*single],
        [start, end, step] if *step > 0.0 && start <= end => {
            let steps = ((end - start) / step + 1e-9).floor() as usize;
            (0..=steps)
                .map(|k| round(start + k as f64 * step))
                .collect()
        }
        _ => return Err(bad()),
    };
    if out.iter().any(|&f| !(f > 0.0 && f <= 1.0)) {
        return Err(BenchError::Config(format!(
            "fractions must lie in (0, 1], got `{list}`"
        )));
    }
    Ok(out)
}

/// Search radius for a query of `query_len` characters at `fraction` of its
/// length, rounded up.
pub fn radius_for(fraction: f64, query_len: usize) -> u32 {
    (fraction * query_len as f64 - 1e-9).ceil().max(0.0) as u32
}

/// `sets` independent uniform samples of `count` distinct records each.
pub fn sample_queries(
    dataset: &Dataset,
    count: usize,
    sets: usize,
    seed: u64,
) -> Result<Vec<Vec<RecordId>>, BenchError> {
    if count > dataset.len() {
        return Err(BenchError::Config(format!(
            "query size {count} exceeds the dataset size {}",
            dataset.len()
        )));
    }
    let mut rng = rng::stream(seed, Stream::Queries);
    Ok((0..sets)
        .map(|_| {
            sample(&mut rng, dataset.len(), count)
                .into_iter()
                .map(|i| i as RecordId)
                .collect()
        })
        .collect())
}

struct QueryOutcome {
    radius: u32,
    primary_evals: u64,
    filter_evals: u64,
    nanos: u128,
    matches: usize,
}

pub fn run_bench(dataset: &Dataset, config: &BenchConfig) -> Result<BenchReport, BenchError> {
    if config.structures.is_empty() || config.fractions.is_empty() {
        return Err(BenchError::Config("nothing to run".into()));
    }
    if let Some(f) = config.fractions.iter().find(|&&f| !(f > 0.0 && f <= 1.0)) {
        return Err(BenchError::Config(format!("fraction {f} outside (0, 1]")));
    }
    let queries: Vec<RecordId> =
        sample_queries(dataset, config.query_size, config.query_sets, config.seed)?
            .into_iter()
            .flatten()
            .collect();
    if queries.is_empty() {
        return Err(BenchError::Config("no queries to run".into()));
    }
    let query_at = |q: RecordId, f: f64| {
        let text = dataset.text(q);
        RangeQuery::new(text, radius_for(f, dataset.chars(q).len()))
    };

    let truth: Option<Vec<Vec<Vec<RecordId>>>> = config.verify.then(|| {
        queries
            .par_iter()
            .map(|&q| {
                let mut counter = DistanceCounter::new();
                config
                    .fractions
                    .iter()
                    .map(|&f| linear_scan(dataset, &query_at(q, f), &mut counter).match_ids)
                    .collect()
            })
            .collect()
    });

    let index_config = IndexConfig {
        seed: config.seed,
        ..config.index.clone()
    };
    let mut rows = Vec::new();
    for &structure in &config.structures {
        let index = build_index(structure, dataset, &index_config)?;
        for &filter_on in config.bag_filter.modes() {
            let label = if filter_on {
                format!("{structure}+bag")
            } else {
                structure.to_string()
            };
            let per_query: Vec<Result<Vec<QueryOutcome>, BenchError>> = queries
                .par_iter()
                .enumerate()
                .map(|(qi, &q)| {
                    let mut counter = DistanceCounter::new().with_bag_filter(filter_on);
                    config
                        .fractions
                        .iter()
                        .enumerate()
                        .map(|(fi, &f)| {
                            let query = query_at(q, f);
                            let start = config.timing.then(Instant::now);
                            let result = index.range_search(&query, &mut counter);
                            let nanos = start.map_or(0, |s| s.elapsed().as_nanos());
                            if let Some(truth) = &truth {
                                if result.match_ids != truth[qi][fi] {
                                    return Err(BenchError::Verification {
                                        structure: label.clone(),
                                        query: query.text.clone(),
                                        radius: query.radius,
                                    });
                                }
                            }
                            Ok(QueryOutcome {
                                radius: query.radius,
                                primary_evals: result.primary_evals,
                                filter_evals: result.filter_evals,
                                nanos,
                                matches: result.match_ids.len(),
                            })
                        })
                        .collect()
                })
                .collect();
            let per_query: Vec<Vec<QueryOutcome>> =
                per_query.into_iter().collect::<Result<_, _>>()?;
            rows.extend(aggregate(
                &label,
                &config.fractions,
                &per_query,
                dataset.len(),
            ));
        }
    }
    rows.sort_by(|a, b| {
        a.structure
            .cmp(&b.structure)
            .then(a.fraction.total_cmp(&b.fraction))
    });
    Ok(BenchReport {
        dataset_len: dataset.len(),
        queries: queries.len(),
        rows,
    })
}

fn aggregate(
    label: &str,
    fractions: &[f64],
    per_query: &[Vec<QueryOutcome>],
    dataset_len: usize,
) -> Vec<BenchRow> {
    let n = per_query.len() as f64;
    fractions
        .iter()
        .enumerate()
        .map(|(fi, &fraction)| {
            let mean = |f: &dyn Fn(&QueryOutcome) -> f64| {
                per_query.iter().map(|q| f(&q[fi])).sum::<f64>() / n
            };
            BenchRow {
                structure: label.to_owned(),
                fraction,
                radius: mean(&|o| f64::from(o.radius)),
                pct_scanned: mean(&|o| o.primary_evals as f64 * 100.0 / dataset_len as f64),
                filter_evals: mean(&|o| o.filter_evals as f64),
                time_ms: mean(&|o| o.nanos as f64 / 1e6),
                matches: mean(&|o| o.matches as f64),
                primary_total: per_query.iter().map(|q| q[fi].primary_evals).sum(),
                filter_total: per_query.iter().map(|q| q[fi].filter_evals).sum(),
            }
        })
        .collect()
}

pub const CSV_HEADER: &str = "structure,fraction,radius,pct_scanned,filter_evals,time_ms,matches";

pub fn to_csv(report: &BenchReport) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &report.rows {
        writeln!(
            out,
            "{},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4}",
            r.structure, r.fraction, r.radius, r.pct_scanned, r.filter_evals, r.time_ms, r.matches
        )
        .expect("writing to a String cannot fail");
    }
    out
}

fn write(path: &Path, contents: &str) -> Result<(), BenchError> {
    fs::write(path, contents).map_err(|source| BenchError::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn emit_csv(report: &BenchReport, path: &Path) -> Result<(), BenchError> {
    if report.rows.is_empty() {
        return Err(BenchError::Config("empty report".into()));
    }
    write(path, &to_csv(report))
}

/// Key/value description of how the numbers were produced, written next to
/// the CSV.
pub fn metadata(report: &BenchReport, config: &BenchConfig) -> String {
    format!(
        "dataset_records: {}\nqueries: {} ({} sets x {})\nseed: {}\nradius: ceil(fraction * query length in characters)\n\
         pct_scanned: edit-distance evaluations / dataset records * 100, memoized per query, pivot comparisons included\n\
         filter_evals: bag-distance evaluations per query (not part of pct_scanned)\ntime_ms: {}\n",
        report.dataset_len,
        report.queries,
        config.query_sets,
        config.query_size,
        config.seed,
        if config.timing {
            "mean wall time of the search call per query"
        } else {
            "not measured"
        },
    )
}

/// A gnuplot script plotting percent scanned against fraction, one line per
/// structure, reading `csv`.
pub fn gnuplot_script(report: &BenchReport, csv: &Path) -> String {
    let mut labels: Vec<&str> = report.rows.iter().map(|r| r.structure.as_str()).collect();
    labels.dedup();
    let csv = csv.display();
    let mut out = format!(
        "set datafile separator ','\nset key outside right\nset xlabel 'search distance (fraction of query length)'\n\
         set ylabel 'percentage of database scanned'\nset xrange [0:1.05]\nset yrange [0:105]\n\
         set terminal pngcairo size 900,600\nset output '{csv}.png'\nplot \\\n"
    );
    let lines: Vec<String> = labels
        .iter()
        .map(|l| {
            format!(
                "  '{csv}' skip 1 using 2:(strcol(1) eq '{l}' ? $4 : 1/0) with linespoints title '{l}'"
            )
        })
        .collect();
    out.push_str(&lines.join(", \\\n"));
    out.push('\n');
    out
}

pub fn emit_gnuplot(report: &BenchReport, csv: &Path) -> Result<PathBuf, BenchError> {
    let path = csv.with_extension("gp");
    write(&path, &gnuplot_script(report, csv))?;
    Ok(path)
}
