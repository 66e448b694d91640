use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use bneb::dirichlet::{count_statistics, posterior, uniform_prior, DirichletCpt};
use bneb::errorbars::{delta_variance_with, CredibleInterval};
use bneb::experiments::{
    format_significant, run_diamond, run_experiment, run_random, ExperimentConfig, StructureSource,
};
use bneb::inference::{forward_sample, Engine};
use bneb::model::{table_from_named_rows, Dataset, Network, NetworkFile, PriorFile, Query};
use bneb::montecarlo::{gold_standard as exact_gold_standard, validate_query};
use bneb::seed::SeedStream;
use bneb::{Error, Result};

use crate::manifest::RunManifest;
use crate::{
    ExperimentArgs, Format, GoldArgs, Kind, Output, PosteriorArgs, QueryArgs, SimulateArgs,
    ValidateArgs,
};

fn sig(x: f64) -> String {
    format_significant(x, 6)
}

/// Left-aligned columns separated by two spaces.
fn align(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.get(c))
                .map(|s| s.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for row in rows {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(s, &w)| format!("{s:<w$}"))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

fn emit(output: &Output, body: &str) -> Result<()> {
    match &output.out {
        Some(path) => fs::write(path, body)?,
        None => io::stdout().lock().write_all(body.as_bytes())?,
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

struct Loaded {
    net: Network,
    posterior: DirichletCpt,
    records: usize,
    query: Query,
}

fn load(args: &PosteriorArgs) -> Result<Loaded> {
    let (net, _) = NetworkFile::read(&args.network)?.load()?;
    let prior = match &args.prior {
        Some(path) => DirichletCpt::for_network(
            &net,
            table_from_named_rows(&net, &PriorFile::read(path)?.pseudocounts)?,
        )?,
        None => uniform_prior(&net),
    };
    let (posterior, records) = match &args.data {
        Some(path) => {
            let data = Dataset::read_csv(&net, File::open(path)?)?;
            (
                posterior(&prior, &count_statistics(&net, &data)?)?,
                data.len(),
            )
        }
        None => (prior, 0),
    };
    let query = Query::parse(&net, &args.target, &args.evidence)?;
    Ok(Loaded {
        net,
        posterior,
        records,
        query,
    })
}

/// Parent states of row `f` of node `v`, e.g. "X2=1,X3=0", or "<>" for roots.
fn config_label(net: &Network, v: usize, f: usize) -> String {
    let parents = net.parents(v);
    if parents.is_empty() {
        return "<>".into();
    }
    parents
        .iter()
        .zip(net.config_states(v, f))
        .map(|(&p, s)| format!("{}={}", net.name(p), net.variable(p).states[s]))
        .collect::<Vec<_>>()
        .join(",")
}

#[derive(Serialize)]
struct ContributionRow {
    node: String,
    parents: String,
    a: f64,
    b: f64,
    alpha_total: f64,
    value: f64,
}

#[derive(Serialize)]
struct QueryReport {
    query: String,
    records: usize,
    mean: f64,
    variance: f64,
    std: f64,
    clamped_contributions: usize,
    intervals: Vec<CredibleInterval>,
    contributions: Vec<ContributionRow>,
}

const INTERVAL_HEADER: [&str; 6] = [
    "delta",
    "z",
    "lower",
    "upper",
    "clamped_lower",
    "clamped_upper",
];

fn interval_cells(i: &CredibleInterval, fmt: fn(f64) -> String) -> Vec<String> {
    [
        i.delta,
        i.z,
        i.lower,
        i.upper,
        i.clamped_lower,
        i.clamped_upper,
    ]
    .into_iter()
    .map(fmt)
    .collect()
}

fn full(x: f64) -> String {
    format!("{x:?}")
}

pub fn query(args: &QueryArgs) -> Result<()> {
    let l = load(&args.posterior)?;
    let engine = Engine::new(&l.net);
    let est = delta_variance_with(&engine, &l.posterior, &l.query)?
        .with_intervals(&args.posterior.delta)?;
    let report = QueryReport {
        query: l.query.to_text(&l.net),
        records: l.records,
        mean: est.mean,
        variance: est.variance,
        std: est.std,
        clamped_contributions: est.clamped,
        intervals: est.intervals.clone(),
        contributions: est
            .contributions
            .iter()
            .map(|c| ContributionRow {
                node: l.net.name(c.node).to_string(),
                parents: config_label(&l.net, c.node, c.config),
                a: c.a,
                b: c.b,
                alpha_total: c.alpha_total,
                value: c.value,
            })
            .collect(),
    };
    let body = match args.output.format {
        Format::Json => to_json(&report)?,
        Format::Csv => {
            let mut header = INTERVAL_HEADER.to_vec();
            header.extend(["mean", "std"]);
            csv_string(
                &header,
                report.intervals.iter().map(|i| {
                    let mut row = interval_cells(i, full);
                    row.extend([full(report.mean), full(report.std)]);
                    row
                }),
            )?
        }
        Format::Text => {
            let mut out = align(&[
                vec!["query".into(), report.query.clone()],
                vec!["records".into(), report.records.to_string()],
                vec!["mean".into(), sig(report.mean)],
                vec!["variance".into(), sig(report.variance)],
                vec!["std".into(), sig(report.std)],
            ]);
            out.push('\n');
            let mut rows = vec![INTERVAL_HEADER.iter().map(|s| s.to_string()).collect()];
            rows.extend(report.intervals.iter().map(|i| interval_cells(i, sig)));
            out.push_str(&align(&rows));
            out.push('\n');
            let mut rows = vec![["node", "parents", "A", "B", "alpha_total", "contribution"]
                .iter()
                .map(|s| s.to_string())
                .collect()];
            rows.extend(report.contributions.iter().map(|c| {
                vec![
                    c.node.clone(),
                    c.parents.clone(),
                    sig(c.a),
                    sig(c.b),
                    sig(c.alpha_total),
                    sig(c.value),
                ]
            }));
            out.push_str(&align(&rows));
            if report.clamped_contributions > 0 {
                out.push_str(&format!(
                    "\n{} contributions clamped from rounding noise to 0\n",
                    report.clamped_contributions
                ));
            }
            out
        }
    };
    emit(&args.output, &body)
}

#[derive(Serialize)]
struct CoverageRow {
    delta: f64,
    delta_hat: f64,
}

#[derive(Serialize)]
struct ValidateReport {
    query: String,
    records: usize,
    replicates: usize,
    seed: u64,
    mean: f64,
    std: f64,
    zero_evidence_replicates: usize,
    qq_correlation: Option<f64>,
    coverage: Vec<CoverageRow>,
}

pub fn validate(args: &ValidateArgs) -> Result<()> {
    let l = load(&args.posterior)?;
    let engine = Engine::new(&l.net);
    let v = validate_query(
        &engine,
        &l.posterior,
        &l.query,
        args.replicates,
        SeedStream::new(args.seed),
        &args.posterior.delta,
    )?;
    if let Some(path) = &args.qq_out {
        let points = v.qq.as_ref().map_or(&[][..], |q| &q.points[..]);
        let body = csv_string(
            &["theoretical", "sample"],
            points.iter().map(|&(t, s)| vec![full(t), full(s)]),
        )?;
        fs::write(path, body)?;
    }
    let report = ValidateReport {
        query: l.query.to_text(&l.net),
        records: l.records,
        replicates: v.samples.values.len(),
        seed: args.seed,
        mean: v.estimate.mean,
        std: v.estimate.std,
        zero_evidence_replicates: v.samples.zero_evidence,
        qq_correlation: v.qq.as_ref().map(|q| q.correlation),
        coverage: v
            .coverage
            .iter()
            .map(|c| CoverageRow {
                delta: c.delta,
                delta_hat: c.delta_hat,
            })
            .collect(),
    };
    let body = match args.output.format {
        Format::Json => to_json(&report)?,
        Format::Csv => csv_string(
            &["delta", "delta_hat", "replicates", "mean", "std"],
            report.coverage.iter().map(|c| {
                vec![
                    full(c.delta),
                    full(c.delta_hat),
                    report.replicates.to_string(),
                    full(report.mean),
                    full(report.std),
                ]
            }),
        )?,
        Format::Text => {
            let mut out = align(&[
                vec!["query".into(), report.query.clone()],
                vec!["records".into(), report.records.to_string()],
                vec!["replicates".into(), report.replicates.to_string()],
                vec!["seed".into(), report.seed.to_string()],
                vec!["mean".into(), sig(report.mean)],
                vec!["std".into(), sig(report.std)],
                vec![
                    "qq correlation".into(),
                    report.qq_correlation.map_or("undefined".into(), sig),
                ],
                vec![
                    "zero-evidence replicates".into(),
                    report.zero_evidence_replicates.to_string(),
                ],
            ]);
            out.push('\n');
            let mut rows = vec![vec!["delta".to_string(), "observed".to_string()]];
            rows.extend(
                report
                    .coverage
                    .iter()
                    .map(|c| vec![sig(c.delta), sig(c.delta_hat)]),
            );
            out.push_str(&align(&rows));
            out
        }
    };
    emit(&args.output, &body)
}

pub fn simulate(args: &SimulateArgs) -> Result<()> {
    let (net, cpt) = NetworkFile::read(&args.network)?.load()?;
    let cpt = cpt.ok_or_else(|| Error::Config("network file has no cpt".into()))?;
    let data = forward_sample(
        &net,
        &cpt,
        args.records,
        &mut SeedStream::new(args.seed).rng(),
    )?;
    match &args.out {
        Some(path) => data.write_csv(&net, BufWriter::new(File::create(path)?)),
        None => data.write_csv(&net, io::stdout().lock()),
    }
}

fn experiment_config(args: &ExperimentArgs) -> Result<ExperimentConfig> {
    let mut config = match (&args.config, args.kind) {
        (Some(path), _) => {
            let mut c = ExperimentConfig::read(path)?;
            if let StructureSource::File { path: net } = &mut c.structure {
                if net.is_relative() {
                    *net = path.parent().unwrap_or(Path::new(".")).join(&*net);
                }
            }
            c
        }
        (None, Kind::Diamond) => ExperimentConfig::diamond_default(),
        (None, Kind::Random) => ExperimentConfig::random_default(),
        (None, Kind::File) => return Err(Error::Config("`file` experiments need --config".into())),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    Ok(config)
}

pub fn experiment(args: &ExperimentArgs) -> Result<()> {
    let config = experiment_config(args)?;
    let started = RunManifest::now();
    let clock = Instant::now();
    let grid = match args.kind {
        Kind::Diamond => run_diamond(&config)?,
        Kind::Random => run_random(&config)?,
        Kind::File => {
            if !matches!(config.structure, StructureSource::File { .. }) {
                return Err(Error::Config(
                    "`file` experiments need a file structure".into(),
                ));
            }
            run_experiment(&config)?
        }
    };
    let manifest = RunManifest::new(&config, started, clock.elapsed(), grid.skipped.clone())?;

    fs::create_dir_all(&args.out_dir)?;
    grid.write_csv(BufWriter::new(File::create(args.out_dir.join("grid.csv"))?))?;
    let text = grid.to_text();
    fs::write(args.out_dir.join("grid.txt"), &text)?;
    fs::write(args.out_dir.join("manifest.json"), to_json(&manifest)?)?;

    let mut stdout = io::stdout().lock();
    match args.format {
        Format::Text => {
            stdout.write_all(text.as_bytes())?;
            let s = &grid.skipped;
            writeln!(
                stdout,
                "grand mean {}; skipped queries {}; zero-evidence replicates {}",
                sig(grid.grand_mean()),
                s.zero_evidence_queries,
                s.zero_evidence_replicates
            )?;
        }
        Format::Json => stdout.write_all(to_json(&grid)?.as_bytes())?,
        Format::Csv => grid.write_csv(stdout)?,
    }
    Ok(())
}

#[derive(Serialize)]
struct GoldRow {
    delta: f64,
    mean: f64,
    std: f64,
}

pub fn gold_standard(args: &GoldArgs) -> Result<()> {
    let rows = args
        .delta
        .iter()
        .map(|&d| {
            let g = exact_gold_standard(d, args.replicates)?;
            Ok(GoldRow {
                delta: d,
                mean: g.mean,
                std: g.std,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let body = match args.output.format {
        Format::Json => to_json(&rows)?,
        Format::Csv => csv_string(
            &["delta", "mean", "std"],
            rows.iter()
                .map(|r| vec![full(r.delta), full(r.mean), full(r.std)]),
        )?,
        Format::Text => {
            let mut table = vec![vec!["delta".to_string(), "mean".into(), "std".into()]];
            table.extend(
                rows.iter()
                    .map(|r| vec![sig(r.delta), sig(r.mean), sig(r.std)]),
            );
            align(&table)
        }
    };
    emit(&args.output, &body)
}
