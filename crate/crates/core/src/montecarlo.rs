//! Monte Carlo checks of the error-bars: posterior replicates of a query,
//! observed miss rates, validity scores, QQ data and the binomial gold
//! standard for validity scores.

use rayon::prelude::*;
use serde::Serialize;

use crate::dirichlet::{sample_cpts, DirichletCpt};
use crate::error::{Error, Result};
use crate::errorbars::{critical_value, delta_variance_with, normal_quantile, QueryEstimate};
use crate::inference::Engine;
use crate::model::Query;
use crate::seed::SeedStream;

/// Replicate count used throughout the published protocol.
pub const DEFAULT_REPLICATES: usize = 100;

/// `Q_i = q(Θ_i)` for posterior draws `Θ_i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuerySamples {
    pub values: Vec<f64>,
    /// Replicates dropped because `Pr{e}` evaluated to zero.
    pub zero_evidence: usize,
}

/// Draws `r` parameter sets and evaluates every query on each of them.
///
/// Replicate `i` uses the stream `seed.child(i)`, so the output does not
/// depend on how rayon schedules the work.
pub fn posterior_replicates(
    engine: &Engine<'_>,
    posterior: &DirichletCpt,
    queries: &[Query],
    r: usize,
    seed: SeedStream,
) -> Result<Vec<QuerySamples>> {
    if r == 0 {
        return Err(Error::OutOfDomain {
            what: "replicate count",
            value: 0.0,
        });
    }
    let rows: Vec<Vec<Option<f64>>> = (0..r)
        .into_par_iter()
        .map(|i| {
            let theta = sample_cpts(posterior, &mut seed.child(i as u64).rng())?;
            queries
                .iter()
                .map(|q| match engine.query_value(&theta, q) {
                    Ok(v) => Ok(Some(v)),
                    Err(Error::ZeroEvidenceProbability) => Ok(None),
                    Err(e) => Err(e),
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut out = vec![
        QuerySamples {
            values: Vec::with_capacity(r),
            zero_evidence: 0
        };
        queries.len()
    ];
    for row in rows {
        for (slot, value) in out.iter_mut().zip(row) {
            match value {
                Some(v) => slot.values.push(v),
                None => slot.zero_evidence += 1,
            }
        }
    }
    Ok(out)
}

pub fn posterior_query_samples(
    engine: &Engine<'_>,
    posterior: &DirichletCpt,
    q: &Query,
    r: usize,
    seed: SeedStream,
) -> Result<QuerySamples> {
    let mut all = posterior_replicates(engine, posterior, std::slice::from_ref(q), r, seed)?;
    Ok(all.remove(0))
}

/// Proportion of samples with `|Q_i − μ_Q| > z_{δ/2} σ̄_Q` (raw interval).
pub fn coverage_deviation(samples: &[f64], mean: f64, std: f64, delta: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::OutOfDomain {
            what: "sample count",
            value: 0.0,
        });
    }
    let half_width = critical_value(delta)? * std;
    let misses = samples
        .iter()
        .filter(|&&q| (q - mean).abs() > half_width)
        .count();
    Ok(misses as f64 / samples.len() as f64)
}

/// `100 · mean |Δ̂ − δ|`, or the signed `100 · mean (Δ̂ − δ)`.
pub fn validity(deltas_hat: &[f64], delta: f64, signed: bool) -> Result<f64> {
    if deltas_hat.is_empty() {
        return Err(Error::OutOfDomain {
            what: "validity term count",
            value: 0.0,
        });
    }
    let sum: f64 = deltas_hat
        .iter()
        .map(|d| if signed { d - delta } else { (d - delta).abs() })
        .sum();
    Ok(100.0 * sum / deltas_hat.len() as f64)
}

/// Mean and standard deviation (percent) of `100 |Δ̂ − δ|` when `r Δ̂ ~ Binomial(r, δ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GoldStandard {
    pub delta: f64,
    pub replicates: usize,
    pub mean: f64,
    pub std: f64,
}

fn ln_choose(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k)
        .map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln())
        .sum()
}

/// Exact enumeration over the binomial pmf.
pub fn gold_standard(delta: f64, r: usize) -> Result<GoldStandard> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::OutOfDomain {
            what: "delta",
            value: delta,
        });
    }
    if r == 0 {
        return Err(Error::OutOfDomain {
            what: "replicate count",
            value: 0.0,
        });
    }
    let pmf: Vec<f64> = (0..=r)
        .map(|k| {
            if delta == 0.0 {
                f64::from(u8::from(k == 0))
            } else if delta == 1.0 {
                f64::from(u8::from(k == r))
            } else {
                (ln_choose(r, k) + k as f64 * delta.ln() + (r - k) as f64 * (-delta).ln_1p()).exp()
            }
        })
        .collect();
    let score = |k: usize| 100.0 * (k as f64 / r as f64 - delta).abs();
    let mean: f64 = pmf.iter().enumerate().map(|(k, p)| p * score(k)).sum();
    let var: f64 = pmf
        .iter()
        .enumerate()
        .map(|(k, p)| p * (score(k) - mean).powi(2))
        .sum();
    Ok(GoldStandard {
        delta,
        replicates: r,
        mean,
        std: var.sqrt(),
    })
}

/// Standardized order statistics against normal plotting positions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QqPlot {
    /// `(Φ⁻¹((i − 0.5)/r), z_(i))` pairs.
    pub points: Vec<(f64, f64)>,
    pub correlation: f64,
}

pub fn qq_points(samples: &[f64]) -> Result<QqPlot> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::DegenerateSample);
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let sd = (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
    if sd.is_nan() || sd <= 0.0 {
        return Err(Error::DegenerateSample);
    }
    let mut z: Vec<f64> = samples.iter().map(|x| (x - mean) / sd).collect();
    z.sort_by(f64::total_cmp);
    let points = z
        .into_iter()
        .enumerate()
        .map(|(i, zi)| Ok((normal_quantile((i as f64 + 0.5) / n as f64)?, zi)))
        .collect::<Result<Vec<_>>>()?;
    Ok(QqPlot {
        correlation: pearson(&points),
        points,
    })
}

fn pearson(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in points {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

/// One aggregated validity score with its factor levels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidityCell {
    pub levels: Vec<String>,
    pub score: f64,
    /// Number of `Δ̂` values averaged.
    pub k: usize,
}

/// Observed miss rate of one query's interval at one `δ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub query: String,
    pub delta: f64,
    pub replicates: usize,
    pub delta_hat: f64,
    pub mean: f64,
    pub std: f64,
    pub seed: u64,
}

/// Error-bars for one query checked against posterior replicates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Validation {
    pub estimate: QueryEstimate,
    pub coverage: Vec<CoverageReport>,
    pub samples: QuerySamples,
    pub qq: Option<QqPlot>,
}

pub fn validate_query(
    engine: &Engine<'_>,
    posterior: &DirichletCpt,
    q: &Query,
    r: usize,
    seed: SeedStream,
    deltas: &[f64],
) -> Result<Validation> {
    let estimate = delta_variance_with(engine, posterior, q)?.with_intervals(deltas)?;
    let samples = posterior_query_samples(engine, posterior, q, r, seed)?;
    let label = q.to_text(engine.network());
    let coverage = deltas
        .iter()
        .map(|&d| {
            Ok(CoverageReport {
                query: label.clone(),
                delta: d,
                replicates: samples.values.len(),
                delta_hat: coverage_deviation(&samples.values, estimate.mean, estimate.std, d)?,
                mean: estimate.mean,
                std: estimate.std,
                seed: seed.key(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let qq = qq_points(&samples.values).ok();
    Ok(Validation {
        estimate,
        coverage,
        samples,
        qq,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dirichlet::uniform_prior;
    use crate::experiments::{diamond_network, diamond_queries};
    use proptest::prelude::*;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn coverage_counts() {
        assert_eq!(coverage_deviation(&[0.3; 10], 0.3, 0.1, 0.1).unwrap(), 0.0);
        let mut s = vec![0.5; 88];
        s.extend(vec![0.99; 12]);
        assert!((coverage_deviation(&s, 0.5, 0.1, 0.1).unwrap() - 0.12).abs() < 1e-15);
        assert!(coverage_deviation(&[], 0.5, 0.1, 0.1).is_err());
    }

    #[test]
    fn coverage_of_normal_samples() {
        let mut rng = SeedStream::new(1).rng();
        let (mu, sd) = (0.3, 0.05);
        let s: Vec<f64> = (0..100_000)
            .map(|_| {
                mu + sd * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
            })
            .collect();
        let d = coverage_deviation(&s, mu, sd, 0.10).unwrap();
        assert!((d - 0.10).abs() < 0.005, "{d}");
    }

    #[test]
    fn validity_scores() {
        assert!((validity(&[0.12, 0.08], 0.10, false).unwrap() - 2.0).abs() < 1e-12);
        assert!(validity(&[0.12, 0.08], 0.10, true).unwrap().abs() < 1e-12);
        assert_eq!(validity(&[0.3, 0.3], 0.3, false).unwrap(), 0.0);
        assert!(validity(&[], 0.3, false).is_err());
    }

    #[test]
    fn gold_standard_edges() {
        let g = gold_standard(0.0, 100).unwrap();
        assert_eq!((g.mean, g.std), (0.0, 0.0));
        let g = gold_standard(1e-12, 100).unwrap();
        assert!(g.mean < 1e-6 && g.std < 1e-3);
        // r = 1: |B − δ| is 1 − δ w.p. δ and δ w.p. 1 − δ.
        let g = gold_standard(0.3, 1).unwrap();
        let mean = 100.0 * (0.3 * 0.7 + 0.7 * 0.3);
        assert!((g.mean - mean).abs() < 1e-9);
        let second = 1e4 * (0.3 * 0.49 + 0.7 * 0.09);
        assert!((g.std - (second - mean * mean).sqrt()).abs() < 1e-9);
        assert!(gold_standard(1.5, 100).is_err());
        assert!(gold_standard(0.1, 0).is_err());
    }

    #[test]
    fn gold_standard_normal_sanity() {
        for delta in [0.1, 0.2, 0.3, 0.4] {
            let r = 100;
            let g = gold_standard(delta, r).unwrap();
            let sigma = (r as f64 * delta * (1.0 - delta)).sqrt();
            let approx = 100.0 * sigma * (2.0 / std::f64::consts::PI).sqrt() / r as f64;
            assert!(
                (g.mean - approx).abs() < 0.15,
                "{delta}: {} vs {approx}",
                g.mean
            );
        }
    }

    #[test]
    fn qq_on_exact_quantiles() {
        let n = 50;
        let s: Vec<f64> = (0..n)
            .map(|i| normal_quantile((i as f64 + 0.5) / n as f64).unwrap() * 3.0 + 1.0)
            .collect();
        let qq = qq_points(&s).unwrap();
        assert!((qq.correlation - 1.0).abs() < 1e-12);
        assert_eq!(qq.points.len(), n);
    }

    #[test]
    fn qq_normal_and_bimodal() {
        let mut rng = SeedStream::new(2).rng();
        let s: Vec<f64> = (0..10_000)
            .map(|_| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
            .collect();
        assert!(qq_points(&s).unwrap().correlation >= 0.999);
        let mut b = vec![0.0; 50];
        b.extend(vec![1.0; 50]);
        assert!(qq_points(&b).unwrap().correlation < 0.99);
        assert!(matches!(
            qq_points(&[1.0, 1.0]),
            Err(Error::DegenerateSample)
        ));
        assert!(matches!(qq_points(&[1.0]), Err(Error::DegenerateSample)));
    }

    #[test]
    fn replicates_are_seeded_and_thread_independent() {
        let net = diamond_network();
        let engine = Engine::new(&net);
        let prior = uniform_prior(&net);
        let q = &diamond_queries(&net)[4];
        let a = posterior_query_samples(&engine, &prior, q, 200, SeedStream::new(3)).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = pool
            .install(|| posterior_query_samples(&engine, &prior, q, 200, SeedStream::new(3)))
            .unwrap();
        assert_eq!(a, b);
        assert!(a.values.iter().all(|v| (0.0..=1.0).contains(v)));
        let one = posterior_query_samples(&engine, &prior, q, 1, SeedStream::new(3)).unwrap();
        assert_eq!(one.values.len(), 1);
        assert!(posterior_query_samples(&engine, &prior, q, 0, SeedStream::new(3)).is_err());
    }

    #[test]
    fn sample_mean_matches_posterior_mean() {
        let net = diamond_network();
        let engine = Engine::new(&net);
        let prior = uniform_prior(&net).scaled(4.0).unwrap();
        for q in diamond_queries(&net) {
            let mean = engine.query_value(&prior.mean(), &q).unwrap();
            let s =
                posterior_query_samples(&engine, &prior, &q, 10_000, SeedStream::new(8)).unwrap();
            let n = s.values.len() as f64;
            let m = s.values.iter().sum::<f64>() / n;
            let sd = (s.values.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
            assert!((m - mean).abs() < 5.0 * sd / n.sqrt(), "{m} vs {mean}");
        }
    }

    proptest! {
        #[test]
        fn coverage_affine_invariance(xs in prop::collection::vec(-5.0f64..5.0, 1..60),
                                      mean in -1.0f64..1.0, std in 0.01f64..3.0,
                                      scale in 0.1f64..10.0, shift in -10.0f64..10.0,
                                      delta in 0.05f64..0.95) {
            let a = coverage_deviation(&xs, mean, std, delta).unwrap();
            let moved: Vec<f64> = xs.iter().map(|x| x * scale + shift).collect();
            let b = coverage_deviation(&moved, mean * scale + shift, std * scale, delta).unwrap();
            // Points sitting on the boundary can flip under rounding.
            let z = critical_value(delta).unwrap();
            let near = xs.iter().filter(|&&x| ((x - mean).abs() - z * std).abs() < 1e-9).count();
            prop_assert!((a - b).abs() <= near as f64 / xs.len() as f64 + 1e-15);
        }
    }
}
