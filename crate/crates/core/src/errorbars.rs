//! Delta-method error-bars for belief-net queries.
//!
//! The posterior variance of `Q = Pr{h | e, Θ}` is approximated by
//!
//! ```text
//! σ̄²_Q = Σ_v Σ_f (A_vf − B_vf) / (α_{v,·|f} + 1)
//! A_vf = Σ_x {p_v(h,x,f|e) − p(h|e) p_v(x,f|e)}² / μ_{v,x|f}
//! B_vf = {p_v(h,f|e) − p(h|e) p_v(f|e)}²
//! ```
//!
//! with every probability evaluated at the posterior mean `μ`. Two
//! family-marginal passes (under `e` and under `e ∪ h`) supply all of them.

use serde::Serialize;

use crate::dirichlet::{row_covariance, CountTable, DirichletCpt};
use crate::error::{Error, Result};
use crate::inference::{fd_query_derivatives, Engine, QueryFamilies};
use crate::model::{CptParams, Dataset, Network, Query};

/// Step used for the finite-difference variance oracle.
pub const ORACLE_STEP: f64 = 1e-6;

/// Variance contribution of one CPT row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Contribution {
    pub node: usize,
    pub config: usize,
    pub a: f64,
    pub b: f64,
    pub alpha_total: f64,
    /// `(A − B) / (α_· + 1)`, after clamping rounding noise to zero.
    pub value: f64,
}

/// `μ_Q ± z_{δ/2} σ̄_Q`, raw and intersected with `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CredibleInterval {
    pub delta: f64,
    pub z: f64,
    pub lower: f64,
    pub upper: f64,
    pub clamped_lower: f64,
    pub clamped_upper: f64,
}

impl CredibleInterval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryEstimate {
    pub mean: f64,
    pub variance: f64,
    pub std: f64,
    pub contributions: Vec<Contribution>,
    /// Number of contributions that came out slightly negative and were set to 0.
    pub clamped: usize,
    pub intervals: Vec<CredibleInterval>,
}

impl QueryEstimate {
    /// Adds one credible interval per `δ`.
    pub fn with_intervals(mut self, deltas: &[f64]) -> Result<Self> {
        self.intervals = deltas
            .iter()
            .map(|&d| credible_interval(self.mean, self.std, d))
            .collect::<Result<_>>()?;
        Ok(self)
    }
}

/// Mean, delta-method variance and per-row contributions, using the min-fill order.
pub fn delta_variance(net: &Network, posterior: &DirichletCpt, q: &Query) -> Result<QueryEstimate> {
    delta_variance_with(&Engine::new(net), posterior, q)
}

pub fn delta_variance_with(
    engine: &Engine<'_>,
    posterior: &DirichletCpt,
    q: &Query,
) -> Result<QueryEstimate> {
    let net = engine.network();
    if !posterior.alpha().matches(net) {
        return Err(Error::ShapeMismatch(
            "posterior not shaped for network".into(),
        ));
    }
    let mu = posterior.mean();
    let fam = engine.query_families(&mu, q)?;
    estimate_from_families(net, posterior, &mu, &fam)
}

/// Mean and variance from already-computed family marginals at `mu`.
pub fn estimate_from_families(
    net: &Network,
    posterior: &DirichletCpt,
    mu: &CptParams,
    fam: &QueryFamilies,
) -> Result<QueryEstimate> {
    let mut contributions = Vec::with_capacity(mu.row_count());
    let mut clamped = 0;
    let mut variance = 0.0;
    for v in 0..net.len() {
        for f in 0..net.config_count(v) {
            let mut a = 0.0;
            let mut centered_sum = 0.0;
            for x in 0..net.card(v) {
                let c = fam.centered(v, f, x);
                a += c * c / mu.get(v, f, x);
                centered_sum += c;
            }
            // p_v(h,f|e) − p(h|e) p_v(f|e) is the row sum of the centered terms.
            let b = centered_sum * centered_sum;
            let mut diff = a - b;
            if diff < 0.0 {
                let tol = 1e-15_f64.max(64.0 * f64::EPSILON * a);
                if diff < -tol {
                    return Err(Error::NegativeContribution {
                        variable: net.name(v).to_string(),
                        config: f,
                        value: diff,
                    });
                }
                diff = 0.0;
                clamped += 1;
            }
            let alpha_total = posterior.row_total(v, f);
            let value = diff / (alpha_total + 1.0);
            variance += value;
            contributions.push(Contribution {
                node: v,
                config: f,
                a,
                b,
                alpha_total,
                value,
            });
        }
    }
    Ok(QueryEstimate {
        mean: fam.query_value(),
        variance,
        std: variance.sqrt(),
        contributions,
        clamped,
        intervals: Vec::new(),
    })
}

/// `Var(D)` for the linear term `D = Σ q'_{v,x|f} (Θ_{v,x|f} − μ_{v,x|f})`,
/// with finite-difference derivatives and the full per-row covariance.
pub fn delta_variance_oracle(net: &Network, posterior: &DirichletCpt, q: &Query) -> Result<f64> {
    let engine = Engine::new(net);
    let mu = posterior.mean();
    let deriv = fd_query_derivatives(&engine, &mu, q, ORACLE_STEP)?;
    let mut total = 0.0;
    for v in 0..net.len() {
        for f in 0..net.config_count(v) {
            let cov = row_covariance(posterior.row(v, f))?;
            let d = deriv.row(v, f);
            for (x, cov_row) in cov.iter().enumerate() {
                for (y, c) in cov_row.iter().enumerate() {
                    total += d[x] * d[y] * c;
                }
            }
        }
    }
    Ok(total)
}

/// Inverse standard normal CDF (Wichura's AS 241, about 1e-16 relative accuracy).
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::OutOfDomain {
            what: "normal_quantile",
            value: p,
        });
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        let num = (((((((2.509_080_928_730_122_7e3 * r + 3.343_057_558_358_813e4) * r
            + 6.726_577_092_700_87e4)
            * r
            + 4.592_195_393_154_987e4)
            * r
            + 1.373_169_376_550_946e4)
            * r
            + 1.971_590_950_306_551_3e3)
            * r
            + 1.331_416_678_917_843_8e2)
            * r
            + 3.387_132_872_796_366_5)
            * q;
        let den = ((((((5.226_495_278_852_545e3 * r + 2.872_908_573_572_194_3e4) * r
            + 3.930_789_580_009_271e4)
            * r
            + 2.121_379_430_158_659_7e4)
            * r
            + 5.394_196_021_424_751e3)
            * r
            + 6.871_870_074_920_579e2)
            * r
            + 4.231_333_070_160_091e1)
            * r
            + 1.0;
        return Ok(num / den);
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-tail.ln()).sqrt();
    let value = if r <= 5.0 {
        r -= 1.6;
        let num = ((((((7.745_450_142_783_414e-4 * r + 2.272_384_498_926_918_4e-2) * r
            + 2.417_807_251_774_506e-1)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_545)
            * r
            + 1.423_437_110_749_683_5;
        let den = ((((((1.050_750_071_644_416_8e-9 * r + 5.475_938_084_995_345e-4) * r
            + 1.519_866_656_361_645_7e-2)
            * r
            + 1.481_039_764_274_800_8e-1)
            * r
            + 6.897_673_349_851e-1)
            * r
            + 1.676_384_830_183_803_8)
            * r
            + 2.053_191_626_637_759)
            * r
            + 1.0;
        num / den
    } else {
        r -= 5.0;
        let num = ((((((2.010_334_399_292_288_1e-7 * r + 2.711_555_568_743_487_6e-5) * r
            + 1.242_660_947_388_078_4e-3)
            * r
            + 2.653_218_952_657_612_4e-2)
            * r
            + 2.965_605_718_285_048_7e-1)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r
            + 6.657_904_643_501_103;
        let den = ((((((2.044_263_103_389_939_7e-15 * r + 1.421_511_758_316_446e-7) * r
            + 1.846_318_317_510_054_8e-5)
            * r
            + 7.868_691_311_456_133e-4)
            * r
            + 1.487_536_129_085_061_5e-2)
            * r
            + 1.369_298_809_227_358e-1)
            * r
            + 5.998_322_065_558_88e-1)
            * r
            + 1.0;
        num / den
    };
    Ok(if q < 0.0 { -value } else { value })
}

/// `z_{δ/2} = Φ⁻¹(1 − δ/2)`.
pub fn critical_value(delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::OutOfDomain {
            what: "delta",
            value: delta,
        });
    }
    normal_quantile(1.0 - delta / 2.0)
}

pub fn credible_interval(mean: f64, std: f64, delta: f64) -> Result<CredibleInterval> {
    let z = critical_value(delta)?;
    let lower = mean - z * std;
    let upper = mean + z * std;
    Ok(CredibleInterval {
        delta,
        z,
        lower,
        upper,
        clamped_lower: lower.clamp(0.0, 1.0),
        clamped_upper: upper.clamp(0.0, 1.0),
    })
}

/// Beta parameters of a query under a single Dirichlet over joint cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaParams {
    pub a: f64,
    pub b: f64,
}

impl BetaParams {
    pub fn mean(&self) -> f64 {
        self.a / (self.a + self.b)
    }

    pub fn variance(&self) -> f64 {
        let s = self.a + self.b;
        self.a * self.b / (s * s * (s + 1.0))
    }
}

/// Counts of every full assignment, indexed with variable 0 most significant.
pub fn joint_counts(net: &Network, data: &Dataset) -> Result<Vec<u64>> {
    let size = net.state_space_size();
    if size > crate::inference::MAX_JOINT_CELLS {
        return Err(Error::StateSpaceTooLarge(size));
    }
    let mut counts = vec![0u64; size as usize];
    for rec in data.records() {
        let idx = rec
            .iter()
            .enumerate()
            .fold(0, |acc, (v, &s)| acc * net.card(v) + s);
        counts[idx] += 1;
    }
    Ok(counts)
}

/// Aggregates a joint Dirichlet: `Q ~ Beta(α(h ∧ e), α(e ∧ ¬h))`.
pub fn exact_beta_aggregation(net: &Network, joint_alpha: &[f64], q: &Query) -> Result<BetaParams> {
    let size = net.state_space_size();
    if joint_alpha.len() as u128 != size {
        return Err(Error::ShapeMismatch(format!(
            "{} joint pseudocounts for {} cells",
            joint_alpha.len(),
            size
        )));
    }
    if let Some(&bad) = joint_alpha.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
        return Err(Error::NonPositiveAlpha(bad));
    }
    let cards = net.cards();
    let mut full = vec![0; net.len()];
    let (mut a, mut b) = (0.0, 0.0);
    for &alpha in joint_alpha {
        if q.evidence().consistent_with(&full) {
            if q.hypothesis().consistent_with(&full) {
                a += alpha;
            } else {
                b += alpha;
            }
        }
        for v in (0..full.len()).rev() {
            full[v] += 1;
            if full[v] < cards[v] {
                break;
            }
            full[v] = 0;
        }
    }
    if a <= 0.0 || b <= 0.0 {
        return Err(Error::EmptyEvidenceSupport);
    }
    Ok(BetaParams { a, b })
}

/// `P̂{H|E} (1 − P̂{H|E}) / (m P̂{E} + 3)` for a complete structure under the
/// flat prior, with `P̂` evaluated at the posterior mean of the network.
pub fn exact_complete_graph_variance(
    net: &Network,
    prior: &DirichletCpt,
    counts: &CountTable,
    q: &Query,
) -> Result<f64> {
    if !net.is_complete() {
        return Err(Error::PreconditionViolation(
            "structure is not complete".into(),
        ));
    }
    if prior.alpha().iter_nodes().flatten().any(|&a| a != 1.0) {
        return Err(Error::PreconditionViolation("prior is not uniform".into()));
    }
    let post = crate::dirichlet::posterior(prior, counts)?;
    let mu = post.mean();
    let engine = Engine::new(net);
    let p_e = engine.prob_evidence(&mu, q.evidence());
    let p_h = engine.query_value(&mu, q)?;
    Ok(p_h * (1.0 - p_h) / (counts.records() as f64 * p_e + 3.0))
}
