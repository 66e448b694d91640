//! Study designs: the diamond graph, random networks and user-supplied
//! networks, each reduced to a grid of validity scores.

use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dirichlet::{count_statistics, posterior, sample_cpts, uniform_prior, DirichletCpt};
use crate::error::{Error, Result};
use crate::errorbars::delta_variance_with;
use crate::inference::{forward_sample, Engine};
use crate::model::{
    validate_params, Assignment, CptParams, Dataset, Network, NetworkFile, Query, VariableSpec,
};
use crate::montecarlo::{
    coverage_deviation, posterior_replicates, validity, ValidityCell, DEFAULT_REPLICATES,
};
use crate::seed::SeedStream;

pub const DEFAULT_DELTAS: [f64; 4] = [0.10, 0.20, 0.30, 0.40];

const DIAMOND_QUERIES: [(&str, &str); 6] = [
    ("X1=1", ""),
    ("X1=1", "X2=1"),
    ("X1=1", "X2=1,X3=1"),
    ("X2=1,X3=1", "X1=1"),
    ("X1=1", "X4=1"),
    ("X4=1", "X1=1"),
];

/// X1 → X2, X1 → X3, X2 → X4, X3 → X4 over binary variables.
pub fn diamond_network() -> Network {
    let vars = (1..=4)
        .map(|i| VariableSpec::binary(format!("X{i}")))
        .collect();
    Network::new(
        vars,
        &[("X1", "X2"), ("X1", "X3"), ("X2", "X4"), ("X3", "X4")],
    )
    .expect("diamond is acyclic")
}

/// Q1..Q6 on the diamond, in order.
///
/// Panics if `net` lacks binary X1..X4.
pub fn diamond_queries(net: &Network) -> Vec<Query> {
    try_diamond_queries(net).expect("network has binary X1..X4")
}

fn try_diamond_queries(net: &Network) -> Result<Vec<Query>> {
    DIAMOND_QUERIES
        .iter()
        .map(|(h, e)| Query::parse(net, h, e))
        .collect()
}

/// Q1..Q6 evaluated directly from their algebraic expressions.
pub fn diamond_closed_forms(params: &CptParams) -> Result<[f64; 6]> {
    validate_params(&diamond_network(), params)?;
    let t1 = |a: usize| params.get(0, 0, a);
    let t2 = |b: usize, a: usize| params.get(1, a, b);
    let t3 = |c: usize, a: usize| params.get(2, a, c);
    let t4 = |d: usize, b: usize, c: usize| params.get(3, 2 * b + c, d);
    let ratio = |num: f64, den: f64| {
        if den > 0.0 {
            Ok(num / den)
        } else {
            Err(Error::DivisionByZero("diamond closed form"))
        }
    };
    // Pr{X4 = 1 | X1 = a}
    let x4 = |a: usize| -> f64 {
        (0..2)
            .flat_map(|b| (0..2).map(move |c| (b, c)))
            .map(|(b, c)| t2(b, a) * t3(c, a) * t4(1, b, c))
            .sum()
    };
    let q2 = ratio(t1(1) * t2(1, 1), (0..2).map(|a| t1(a) * t2(1, a)).sum())?;
    let q3 = ratio(
        t1(1) * t2(1, 1) * t3(1, 1),
        (0..2).map(|a| t1(a) * t2(1, a) * t3(1, a)).sum(),
    )?;
    let q5 = ratio(t1(1) * x4(1), t1(0) * x4(0) + t1(1) * x4(1))?;
    Ok([t1(1), q2, q3, t2(1, 1) * t3(1, 1), q5, x4(1)])
}

/// Uniformly random total order, then `links` distinct forward pairs.
pub fn random_dag<R: Rng + ?Sized>(n: usize, links: usize, rng: &mut R) -> Result<Network> {
    let max = n * n.saturating_sub(1) / 2;
    if links > max {
        return Err(Error::TooManyLinks { links, max });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let mut chosen = sample(rng, max, links).into_vec();
    chosen.sort_unstable();
    let arcs: Vec<(usize, usize)> = chosen
        .into_iter()
        .map(|k| (order[pairs[k].0], order[pairs[k].1]))
        .collect();
    let vars = (1..=n)
        .map(|i| VariableSpec::binary(format!("X{i}")))
        .collect();
    Network::from_indices(vars, &arcs)
}

/// `num_h + num_e` distinct variables with uniform states; the first
/// `num_h` form the hypothesis.
pub fn random_query<R: Rng + ?Sized>(
    net: &Network,
    num_h: usize,
    num_e: usize,
    rng: &mut R,
) -> Result<Query> {
    let requested = num_h + num_e;
    if requested > net.len() {
        return Err(Error::TooManyVariables {
            requested,
            available: net.len(),
        });
    }
    let mut h = Assignment::new();
    let mut e = Assignment::new();
    for (i, v) in sample(rng, net.len(), requested).into_iter().enumerate() {
        let s = rng.random_range(0..net.card(v));
        if i < num_h {
            h.bind(net, v, s)?;
        } else {
            e.bind(net, v, s)?;
        }
    }
    Query::new(h, e)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StructureSource {
    Diamond,
    Random {
        n: usize,
        links: usize,
    },
    /// A network file; its `cpt`, if present, is the fixed ground truth.
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryText {
    pub target: String,
    #[serde(default)]
    pub evidence: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QuerySource {
    Diamond,
    Random {
        num_h: Vec<usize>,
        num_e: Vec<usize>,
        per_network: usize,
    },
    Fixed {
        queries: Vec<QueryText>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub structure: StructureSource,
    pub sample_sizes: Vec<usize>,
    /// Trials per cell. With random query sets this counts networks.
    pub trials: usize,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    pub queries: QuerySource,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub signed: bool,
}

fn default_replicates() -> usize {
    DEFAULT_REPLICATES
}

fn default_deltas() -> Vec<f64> {
    DEFAULT_DELTAS.to_vec()
}

impl ExperimentConfig {
    /// 30 trials for each m in {10, 20, 30, 40}.
    pub fn diamond_default() -> Self {
        Self {
            structure: StructureSource::Diamond,
            sample_sizes: vec![10, 20, 30, 40],
            trials: 30,
            replicates: DEFAULT_REPLICATES,
            deltas: default_deltas(),
            queries: QuerySource::Diamond,
            seed: 0,
            signed: false,
        }
    }

    /// 10 networks of 10 binary variables and 20 arcs, m = 100, 10 queries
    /// per network for each (#H, #E) in 1..=5 × 1..=5.
    pub fn random_default() -> Self {
        Self {
            structure: StructureSource::Random { n: 10, links: 20 },
            sample_sizes: vec![100],
            trials: 10,
            replicates: DEFAULT_REPLICATES,
            deltas: default_deltas(),
            queries: QuerySource::Random {
                num_h: (1..=5).collect(),
                num_e: (1..=5).collect(),
                per_network: 10,
            },
            seed: 0,
            signed: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.sample_sizes.is_empty() {
            return fail("sample_sizes is empty");
        }
        if self.trials == 0 {
            return fail("trials must be at least 1");
        }
        if self.replicates == 0 {
            return fail("replicates must be at least 1");
        }
        if self.deltas.is_empty() {
            return fail("deltas is empty");
        }
        if let Some(d) = self.deltas.iter().find(|d| !(**d > 0.0 && **d < 1.0)) {
            return Err(Error::Config(format!("delta {d} is outside (0, 1)")));
        }
        if let StructureSource::Random { n, links } = self.structure {
            let max = n * n.saturating_sub(1) / 2;
            if links > max {
                return Err(Error::TooManyLinks { links, max });
            }
        }
        match &self.queries {
            QuerySource::Diamond => {}
            QuerySource::Random {
                num_h,
                num_e,
                per_network,
            } => {
                if num_h.is_empty() || num_e.is_empty() || *per_network == 0 {
                    return fail("random queries need nonempty num_h, num_e and per_network >= 1");
                }
                if num_h.contains(&0) {
                    return fail("num_h values must be at least 1");
                }
            }
            QuerySource::Fixed { queries } => {
                if queries.is_empty() {
                    return fail("fixed query list is empty");
                }
            }
        }
        Ok(())
    }

    fn query_axes(&self, net: Option<&Network>) -> Result<Vec<Axis>> {
        Ok(match &self.queries {
            QuerySource::Diamond => vec![Axis::new(
                "query",
                (1..=DIAMOND_QUERIES.len()).map(|i| format!("Q{i}")),
            )],
            QuerySource::Random { num_h, num_e, .. } => vec![
                Axis::new("#H", num_h.iter().map(usize::to_string)),
                Axis::new("#E", num_e.iter().map(usize::to_string)),
            ],
            QuerySource::Fixed { queries } => {
                let labels = match net {
                    Some(net) => queries
                        .iter()
                        .map(|q| Ok(Query::parse(net, &q.target, &q.evidence)?.to_text(net)))
                        .collect::<Result<Vec<_>>>()?,
                    None => (1..=queries.len()).map(|i| format!("Q{i}")).collect(),
                };
                vec![Axis::new("query", labels)]
            }
        })
    }

    /// Queries tagged with their flat index over the query axes.
    fn queries_for(&self, net: &Network, seed: SeedStream) -> Result<Vec<(usize, Query)>> {
        match &self.queries {
            QuerySource::Diamond => Ok(try_diamond_queries(net)?.into_iter().enumerate().collect()),
            QuerySource::Fixed { queries } => queries
                .iter()
                .enumerate()
                .map(|(i, q)| Ok((i, Query::parse(net, &q.target, &q.evidence)?)))
                .collect(),
            QuerySource::Random {
                num_h,
                num_e,
                per_network,
            } => {
                let mut out = Vec::new();
                for (hi, &h) in num_h.iter().enumerate() {
                    for (ei, &e) in num_e.iter().enumerate() {
                        for k in 0..*per_network {
                            let mut rng = seed.path(&[hi as u64, ei as u64, k as u64]).rng();
                            out.push((hi * num_e.len() + ei, random_query(net, h, e, &mut rng)?));
                        }
                    }
                }
                Ok(out)
            }
        }
    }
}

/// Everything generated for one (sample size, trial) unit.
#[derive(Debug, Clone)]
pub struct Trial {
    pub network: Network,
    pub truth: CptParams,
    pub data: Dataset,
    pub posterior: DirichletCpt,
    seed: SeedStream,
}

struct Study {
    config: ExperimentConfig,
    network: Option<Network>,
    truth: Option<CptParams>,
}

impl Study {
    fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let (network, truth) = match &config.structure {
            StructureSource::Diamond => (Some(diamond_network()), None),
            StructureSource::Random { .. } => (None, None),
            StructureSource::File { path } => {
                let (net, cpt) = NetworkFile::read(path)?.load()?;
                if let Some(cpt) = &cpt {
                    validate_params(&net, cpt)?;
                }
                (Some(net), cpt)
            }
        };
        Ok(Self {
            config: config.clone(),
            network,
            truth,
        })
    }

    fn trial(&self, mi: usize, t: usize) -> Result<Trial> {
        let seed = SeedStream::new(self.config.seed).path(&[mi as u64, t as u64]);
        let network = match (&self.network, &self.config.structure) {
            (Some(net), _) => net.clone(),
            (None, StructureSource::Random { n, links }) => {
                random_dag(*n, *links, &mut seed.child(0).rng())?
            }
            (None, _) => unreachable!("fixed structures are loaded up front"),
        };
        let prior = uniform_prior(&network);
        let truth = match &self.truth {
            Some(cpt) => cpt.clone(),
            None => sample_cpts(&prior, &mut seed.child(1).rng())?,
        };
        let m = self.config.sample_sizes[mi];
        let data = forward_sample(&network, &truth, m, &mut seed.child(2).rng())?;
        let posterior = posterior(&prior, &count_statistics(&network, &data)?)?;
        Ok(Trial {
            network,
            truth,
            data,
            posterior,
            seed,
        })
    }

    fn run_unit(&self, mi: usize, t: usize) -> Result<UnitOutcome> {
        let trial = self.trial(mi, t)?;
        let net = &trial.network;
        let engine = Engine::new(net);
        let mut outcome = UnitOutcome::default();
        let mut kept = Vec::new();
        for (cell, q) in self.config.queries_for(net, trial.seed.child(3))? {
            match delta_variance_with(&engine, &trial.posterior, &q) {
                Ok(est) => kept.push((cell, q, est.mean, est.std)),
                Err(Error::ZeroEvidenceProbability) => outcome.skipped_queries += 1,
                Err(e) => return Err(e),
            }
        }
        let queries: Vec<Query> = kept.iter().map(|k| k.1.clone()).collect();
        let samples = posterior_replicates(
            &engine,
            &trial.posterior,
            &queries,
            self.config.replicates,
            trial.seed.child(4),
        )?;
        for ((cell, _, mean, std), s) in kept.into_iter().zip(samples) {
            outcome.zero_evidence_replicates += s.zero_evidence;
            if s.values.is_empty() {
                outcome.skipped_queries += 1;
                continue;
            }
            let hats = self
                .config
                .deltas
                .iter()
                .map(|&d| coverage_deviation(&s.values, mean, std, d))
                .collect::<Result<Vec<_>>>()?;
            outcome.results.push((cell, hats));
        }
        Ok(outcome)
    }
}

#[derive(Default)]
struct UnitOutcome {
    results: Vec<(usize, Vec<f64>)>,
    skipped_queries: usize,
    zero_evidence_replicates: usize,
}

/// Regenerates the network, ground truth, data and posterior of one unit.
pub fn generate_trial(
    config: &ExperimentConfig,
    sample_index: usize,
    trial: usize,
) -> Result<Trial> {
    let study = Study::new(config)?;
    if sample_index >= config.sample_sizes.len() || trial >= config.trials {
        return Err(Error::Config(format!(
            "unit ({sample_index}, {trial}) is outside the design"
        )));
    }
    study.trial(sample_index, trial)
}

/// Runs any design. Axes are δ, m, then the query axes.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ResultGrid> {
    let study = Study::new(config)?;
    let query_axes = config.query_axes(study.network.as_ref())?;
    let per_query: usize = query_axes.iter().map(|a| a.labels.len()).product();
    let (nd, nm) = (config.deltas.len(), config.sample_sizes.len());

    let units: Vec<(usize, usize)> = (0..nm)
        .flat_map(|mi| (0..config.trials).map(move |t| (mi, t)))
        .collect();
    let outcomes = units
        .par_iter()
        .map(|&(mi, t)| study.run_unit(mi, t))
        .collect::<Result<Vec<_>>>()?;

    let mut buckets = vec![Vec::new(); nd * nm * per_query];
    let mut skipped = SkipCounters::default();
    for (&(mi, _), outcome) in units.iter().zip(outcomes) {
        skipped.zero_evidence_queries += outcome.skipped_queries;
        skipped.zero_evidence_replicates += outcome.zero_evidence_replicates;
        for (cell, hats) in outcome.results {
            for (di, hat) in hats.into_iter().enumerate() {
                buckets[(di * nm + mi) * per_query + cell].push(hat);
            }
        }
    }

    let mut axes = vec![
        Axis::new("delta", config.deltas.iter().map(|d| format!("{d}"))),
        Axis::new("m", config.sample_sizes.iter().map(usize::to_string)),
    ];
    axes.extend(query_axes);
    let mut grid = ResultGrid {
        axes,
        cells: Vec::with_capacity(buckets.len()),
        signed: config.signed,
        skipped,
    };
    for (flat, hats) in buckets.into_iter().enumerate() {
        let delta = config.deltas[flat / (nm * per_query)];
        let score = if hats.is_empty() {
            f64::NAN
        } else {
            validity(&hats, delta, config.signed)?
        };
        let levels = grid.levels(flat);
        grid.cells.push(ValidityCell {
            levels,
            score,
            k: hats.len(),
        });
    }
    Ok(grid)
}

/// Diamond-graph design with the m × query × δ layout.
pub fn run_diamond(config: &ExperimentConfig) -> Result<ResultGrid> {
    if config.structure != StructureSource::Diamond {
        return Err(Error::Config(
            "run_diamond needs the diamond structure".into(),
        ));
    }
    run_experiment(config)
}

/// Random-network design with the #H × #E × δ layout.
pub fn run_random(config: &ExperimentConfig) -> Result<ResultGrid> {
    if !matches!(config.structure, StructureSource::Random { .. })
        || !matches!(config.queries, QuerySource::Random { .. })
    {
        return Err(Error::Config(
            "run_random needs a random structure and random queries".into(),
        ));
    }
    run_experiment(config)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Axis {
    pub name: String,
    pub labels: Vec<String>,
}

impl Axis {
    fn new(name: &str, labels: impl IntoIterator<Item = String>) -> Self {
        Self {
            name: name.to_string(),
            labels: labels.into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SkipCounters {
    /// Queries dropped because `Pr{e}` was zero at the posterior mean or in every replicate.
    pub zero_evidence_queries: usize,
    pub zero_evidence_replicates: usize,
}

/// Validity scores over the product of the axes, last axis fastest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultGrid {
    pub axes: Vec<Axis>,
    pub cells: Vec<ValidityCell>,
    pub signed: bool,
    pub skipped: SkipCounters,
}

impl ResultGrid {
    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.labels.len()).collect()
    }

    fn flat_index(&self, index: &[usize]) -> usize {
        assert_eq!(index.len(), self.axes.len(), "index rank");
        index.iter().zip(self.shape()).fold(0, |acc, (&i, n)| {
            assert!(i < n, "index out of range");
            acc * n + i
        })
    }

    fn levels(&self, mut flat: usize) -> Vec<String> {
        let mut out = vec![String::new(); self.axes.len()];
        for (slot, axis) in out.iter_mut().zip(&self.axes).rev() {
            let n = axis.labels.len();
            *slot = axis.labels[flat % n].clone();
            flat /= n;
        }
        out
    }

    pub fn cell(&self, index: &[usize]) -> &ValidityCell {
        &self.cells[self.flat_index(index)]
    }

    /// Mean score over cells that received at least one term.
    pub fn grand_mean(&self) -> f64 {
        let scores: Vec<f64> = self
            .cells
            .iter()
            .filter(|c| c.k > 0)
            .map(|c| c.score)
            .collect();
        scores.iter().sum::<f64>() / scores.len() as f64
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self.axes.iter().map(|a| a.name.as_str()).collect();
        header.extend(["score", "k"]);
        w.write_record(&header)?;
        for cell in &self.cells {
            let mut row = cell.levels.clone();
            row.push(format!("{:?}", cell.score));
            row.push(cell.k.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// One block per combination of the leading axes; the last two axes
    /// form rows and columns.
    pub fn to_text(&self) -> String {
        let shape = self.shape();
        let rank = shape.len();
        let (rows, cols) = match rank {
            0 => return String::new(),
            1 => (1, shape[0]),
            _ => (shape[rank - 2], shape[rank - 1]),
        };
        let col_axis = &self.axes[rank - 1];
        let row_axis = (rank >= 2).then(|| &self.axes[rank - 2]);
        let block = rows * cols;
        let mut out = String::new();
        for (b, chunk) in self.cells.chunks(block).enumerate() {
            if rank > 2 {
                let heading: Vec<String> = self.levels(b * block)[..rank - 2]
                    .iter()
                    .zip(&self.axes)
                    .map(|(l, a)| format!("{} = {l}", a.name))
                    .collect();
                out.push_str(&heading.join(", "));
                out.push('\n');
            }
            let mut table: Vec<Vec<String>> = Vec::with_capacity(rows + 1);
            let mut head = vec![row_axis.map_or(String::new(), |a| a.name.clone())];
            head.extend(col_axis.labels.iter().cloned());
            table.push(head);
            for r in 0..rows {
                let mut line = vec![row_axis.map_or(String::new(), |a| a.labels[r].clone())];
                line.extend(
                    chunk[r * cols..(r + 1) * cols]
                        .iter()
                        .map(|c| format_significant(c.score, 6)),
                );
                table.push(line);
            }
            let widths: Vec<usize> = (0..=cols)
                .map(|c| table.iter().map(|l| l[c].len()).max().unwrap_or(0))
                .collect();
            for line in table {
                let padded: Vec<String> = line
                    .iter()
                    .zip(&widths)
                    .map(|(s, &w)| format!("{s:>w$}"))
                    .collect();
                out.push_str(padded.join("  ").trim_end());
                out.push('\n');
            }
            out.push('\n');
        }
        out
    }
}

/// `%g`-style rendering with `digits` significant digits.
pub fn format_significant(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let digits = digits.max(1);
    let exp = x.abs().log10().floor() as i32;
    if (-4..digits as i32).contains(&exp) {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_string()
    } else {
        let s = format!("{:.*e}", digits - 1, x);
        let (mantissa, exponent) = s.split_once('e').expect("exponent form");
        format!("{}e{exponent}", trim_fraction(mantissa))
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
