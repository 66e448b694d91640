//! Exact inference: evidence probabilities, family marginals, query means and
//! query derivatives, plus forward sampling and an enumeration oracle.

mod brute;
mod bucket;
mod factor;

use rand::Rng;

pub use brute::{brute_force_joint, JointTable, MAX_JOINT_CELLS};
pub use bucket::{eliminate, family_marginals as propagate, EliminationTrace, FamilyMarginals};
pub use factor::{multiply_all, Factor};

use crate::error::{Error, Result};
use crate::model::{
    min_fill_order, validate_params, Assignment, CptParams, Dataset, EliminationOrder, FamilyTable,
    Network, Query,
};

/// A network paired with a fixed elimination order.
#[derive(Debug, Clone)]
pub struct Engine<'a> {
    net: &'a Network,
    order: EliminationOrder,
}

impl<'a> Engine<'a> {
    /// Uses the min-fill order.
    pub fn new(net: &'a Network) -> Self {
        Engine {
            net,
            order: min_fill_order(net),
        }
    }

    pub fn with_order(net: &'a Network, order: EliminationOrder) -> Self {
        Engine { net, order }
    }

    pub fn network(&self) -> &'a Network {
        self.net
    }

    pub fn order(&self) -> &EliminationOrder {
        &self.order
    }

    pub fn prob_evidence(&self, params: &CptParams, evidence: &Assignment) -> f64 {
        eliminate(self.net, params, evidence, &self.order).value
    }

    pub fn family_marginals(&self, params: &CptParams, evidence: &Assignment) -> FamilyMarginals {
        bucket::family_marginals(self.net, params, evidence, &self.order)
    }

    /// `Pr{h, e} / Pr{e}` at `params`, taken as-is.
    pub fn query_value(&self, params: &CptParams, q: &Query) -> Result<f64> {
        let pe = self.prob_evidence(params, q.evidence());
        if pe.is_nan() || pe <= 0.0 {
            return Err(Error::ZeroEvidenceProbability);
        }
        let phe = self.prob_evidence(params, &q.joint());
        Ok(phe / pe)
    }

    /// Family marginals under `e` and under `e ∪ h`.
    pub fn query_families(&self, params: &CptParams, q: &Query) -> Result<QueryFamilies> {
        let given_e = self.family_marginals(params, q.evidence());
        if given_e.evidence_prob.is_nan() || given_e.evidence_prob <= 0.0 {
            return Err(Error::ZeroEvidenceProbability);
        }
        let given_he = self.family_marginals(params, &q.joint());
        Ok(QueryFamilies { given_e, given_he })
    }

    pub fn query_derivatives(&self, params: &CptParams, q: &Query) -> Result<FamilyTable<f64>> {
        self.query_families(params, q)?
            .derivatives(self.net, params)
    }
}

/// The two family-marginal passes a query's derivatives and variance need.
#[derive(Debug, Clone)]
pub struct QueryFamilies {
    pub given_e: FamilyMarginals,
    pub given_he: FamilyMarginals,
}

impl QueryFamilies {
    pub fn prob_evidence(&self) -> f64 {
        self.given_e.evidence_prob
    }

    /// `p(h|e)`.
    pub fn query_value(&self) -> f64 {
        self.given_he.evidence_prob / self.given_e.evidence_prob
    }

    /// `p_v(h, x, f | e) − p(h|e) p_v(x, f | e)`, the numerator of the derivative.
    pub fn centered(&self, v: usize, f: usize, x: usize) -> f64 {
        let pe = self.given_e.evidence_prob;
        let phxf = self.given_he.table.get(v, f, x) / pe;
        let pxf = self.given_e.table.get(v, f, x) / pe;
        phxf - self.query_value() * pxf
    }

    /// `q'_{v,x|f} = [p_v(h,x,f|e) − p(h|e) p_v(x,f|e)] / θ_{v,x|f}`.
    pub fn derivatives(&self, net: &Network, params: &CptParams) -> Result<FamilyTable<f64>> {
        let mut out = FamilyTable::filled(net, 0.0);
        for v in 0..net.len() {
            for f in 0..net.config_count(v) {
                for x in 0..net.card(v) {
                    let theta = params.get(v, f, x);
                    if theta == 0.0 {
                        return Err(Error::ZeroParameter {
                            variable: net.name(v).to_string(),
                            config: f,
                            state: x,
                        });
                    }
                    out.set(v, f, x, self.centered(v, f, x) / theta);
                }
            }
        }
        Ok(out)
    }
}

/// Product of the CPT entries selected by a full assignment.
pub fn joint_eval(net: &Network, params: &CptParams, full: &Assignment) -> Result<f64> {
    let states = full.to_full(net)?;
    Ok((0..net.len())
        .map(|v| params.get(v, net.config_in(v, &states), states[v]))
        .product())
}

/// `Pr{e}` under `order`; zero for impossible evidence.
pub fn prob_evidence(
    net: &Network,
    params: &CptParams,
    evidence: &Assignment,
    order: &EliminationOrder,
) -> f64 {
    eliminate(net, params, evidence, order).value
}

/// `Pr{X_v = x, F_v = f, e}` for every node, using the min-fill order.
pub fn family_marginals(
    net: &Network,
    params: &CptParams,
    evidence: &Assignment,
) -> FamilyMarginals {
    Engine::new(net).family_marginals(params, evidence)
}

/// `μ_Q = q(μ)`; the posterior mean of a query equals the query at the mean parameters.
pub fn query_mean(net: &Network, mu: &CptParams, q: &Query) -> Result<f64> {
    Engine::new(net).query_value(mu, q)
}

pub fn query_derivatives(net: &Network, mu: &CptParams, q: &Query) -> Result<FamilyTable<f64>> {
    Engine::new(net).query_derivatives(mu, q)
}

/// Central finite differences of `Pr{h,e}/Pr{e}` under single-entry
/// perturbations, rows left unnormalized.
pub fn fd_query_derivatives(
    engine: &Engine<'_>,
    params: &CptParams,
    q: &Query,
    eps: f64,
) -> Result<FamilyTable<f64>> {
    let net = engine.network();
    let mut work = params.clone();
    let mut out = FamilyTable::filled(net, 0.0);
    for v in 0..net.len() {
        for f in 0..net.config_count(v) {
            for x in 0..net.card(v) {
                let theta = params.get(v, f, x);
                work.set(v, f, x, theta + eps);
                let up = engine.query_value(&work, q)?;
                work.set(v, f, x, theta - eps);
                let down = engine.query_value(&work, q)?;
                work.set(v, f, x, theta);
                out.set(v, f, x, (up - down) / (2.0 * eps));
            }
        }
    }
    Ok(out)
}

/// Ancestral sampling of `m` complete records.
pub fn forward_sample<R: Rng + ?Sized>(
    net: &Network,
    params: &CptParams,
    m: usize,
    rng: &mut R,
) -> Result<Dataset> {
    validate_params(net, params)?;
    let mut records = Vec::with_capacity(m);
    for _ in 0..m {
        let mut rec = vec![0; net.len()];
        for &v in net.topo_order() {
            let row = params.row(v, net.config_in(v, &rec));
            rec[v] = sample_index(row, rng);
        }
        records.push(rec);
    }
    Ok(Dataset::from_trusted(records))
}

fn sample_index<R: Rng + ?Sized>(row: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (x, &p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return x;
        }
    }
    // Rounding left `acc` a hair under 1: take the last state with mass.
    row.iter().rposition(|&p| p > 0.0).unwrap_or(row.len() - 1)
}
