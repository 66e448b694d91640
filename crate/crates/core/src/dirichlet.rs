//! Dirichlet bookkeeping for CPT rows: priors, counts, posteriors, moments
//! and posterior draws.

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};
use crate::model::{CptParams, Dataset, FamilyTable, Network};

/// Strictly positive pseudocounts `α_{v,x|f}`, one Dirichlet per CPT row.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletCpt {
    alpha: FamilyTable<f64>,
}

/// Family counts `m_{v,x|f}` over a dataset of `records` complete cases.
#[derive(Debug, Clone, PartialEq)]
pub struct CountTable {
    counts: FamilyTable<u64>,
    records: u64,
}

impl DirichletCpt {
    pub fn new(alpha: FamilyTable<f64>) -> Result<Self> {
        for node in alpha.iter_nodes() {
            if let Some(&a) = node.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
                return Err(Error::NonPositiveAlpha(a));
            }
        }
        Ok(DirichletCpt { alpha })
    }

    /// Checked constructor that also verifies the shape against `net`.
    pub fn for_network(net: &Network, alpha: FamilyTable<f64>) -> Result<Self> {
        if !alpha.matches(net) {
            return Err(Error::ShapeMismatch(
                "pseudocounts not shaped for network".into(),
            ));
        }
        Self::new(alpha)
    }

    pub fn alpha(&self) -> &FamilyTable<f64> {
        &self.alpha
    }

    pub fn row(&self, v: usize, f: usize) -> &[f64] {
        self.alpha.row(v, f)
    }

    /// `α_{v,·|f}`.
    pub fn row_total(&self, v: usize, f: usize) -> f64 {
        self.alpha.row(v, f).iter().sum()
    }

    /// Posterior (or prior) means `μ = E{Θ}`, row by row.
    pub fn mean(&self) -> CptParams {
        let mut out = self.alpha.clone();
        for v in 0..out.node_count() {
            for f in 0..out.config_count(v) {
                let row = out.row_mut(v, f);
                let total: f64 = row.iter().sum();
                row.iter_mut().for_each(|a| *a /= total);
            }
        }
        out
    }

    /// Every pseudocount multiplied by `c`; row means stay fixed.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.alpha.map(|a| a * c))
    }
}

impl CountTable {
    pub fn zeros(net: &Network) -> Self {
        CountTable {
            counts: FamilyTable::filled(net, 0),
            records: 0,
        }
    }

    pub fn counts(&self) -> &FamilyTable<u64> {
        &self.counts
    }

    pub fn records(&self) -> u64 {
        self.records
    }

    pub fn get(&self, v: usize, f: usize, x: usize) -> u64 {
        self.counts.get(v, f, x)
    }

    pub fn add_record(&mut self, net: &Network, record: &[usize]) {
        for v in 0..net.len() {
            let f = net.config_in(v, record);
            let x = record[v];
            let c = self.counts.get(v, f, x);
            self.counts.set(v, f, x, c + 1);
        }
        self.records += 1;
    }
}

/// All pseudocounts equal to 1: a flat prior on every row.
pub fn uniform_prior(net: &Network) -> DirichletCpt {
    DirichletCpt {
        alpha: FamilyTable::filled(net, 1.0),
    }
}

/// Joint family counts of a complete dataset.
pub fn count_statistics(net: &Network, data: &Dataset) -> Result<CountTable> {
    let mut counts = CountTable::zeros(net);
    for (i, rec) in data.records().iter().enumerate() {
        if rec.len() != net.len() || rec.iter().enumerate().any(|(v, &s)| s >= net.card(v)) {
            return Err(Error::IncompleteRecord(i));
        }
        counts.add_record(net, rec);
    }
    Ok(counts)
}

/// Conjugate update `α = α* + m`.
pub fn posterior(prior: &DirichletCpt, counts: &CountTable) -> Result<DirichletCpt> {
    if !prior.alpha.same_shape(&counts.counts) {
        return Err(Error::ShapeMismatch(
            "prior and counts differ in shape".into(),
        ));
    }
    let mut alpha = prior.alpha.clone();
    for v in 0..alpha.node_count() {
        for (a, &m) in alpha.node_mut(v).iter_mut().zip(counts.counts.node(v)) {
            *a += m as f64;
        }
    }
    Ok(DirichletCpt { alpha })
}

fn check_alpha(alpha: &[f64]) -> Result<f64> {
    if let Some(&a) = alpha.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
        return Err(Error::NonPositiveAlpha(a));
    }
    Ok(alpha.iter().sum())
}

/// `μ_x = α_x / α_·`.
pub fn row_mean(alpha: &[f64]) -> Result<Vec<f64>> {
    let total = check_alpha(alpha)?;
    Ok(alpha.iter().map(|a| a / total).collect())
}

/// `Cov(x, y) = μ_x (δ_xy − μ_y) / (α_· + 1)`, as a dense row-major matrix.
pub fn row_covariance(alpha: &[f64]) -> Result<Vec<Vec<f64>>> {
    let total = check_alpha(alpha)?;
    let mu: Vec<f64> = alpha.iter().map(|a| a / total).collect();
    let scale = total + 1.0;
    Ok(mu
        .iter()
        .enumerate()
        .map(|(x, &mx)| {
            mu.iter()
                .enumerate()
                .map(|(y, &my)| mx * (if x == y { 1.0 } else { 0.0 } - my) / scale)
                .collect()
        })
        .collect())
}

/// One Dirichlet(α) draw as normalized independent Gamma(α_x, 1) variates.
pub fn sample_row<R: Rng + ?Sized>(alpha: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    let gammas = alpha
        .iter()
        .map(|&a| Gamma::new(a, 1.0).map_err(|_| Error::NonPositiveAlpha(a)))
        .collect::<Result<Vec<_>>>()?;
    loop {
        let mut draw: Vec<f64> = gammas.iter().map(|g| g.sample(rng)).collect();
        let total: f64 = draw.iter().sum();
        // Only reachable when every shape is tiny and all variates underflow.
        if total > 0.0 && total.is_finite() {
            draw.iter_mut().for_each(|d| *d /= total);
            return Ok(draw);
        }
    }
}

/// Independent draws for every row of `dist`.
pub fn sample_cpts<R: Rng + ?Sized>(dist: &DirichletCpt, rng: &mut R) -> Result<CptParams> {
    let mut out = dist.alpha.clone();
    for v in 0..out.node_count() {
        for f in 0..out.config_count(v) {
            let draw = sample_row(dist.alpha.row(v, f), rng)?;
            out.row_mut(v, f).copy_from_slice(&draw);
        }
    }
    Ok(out)
}
