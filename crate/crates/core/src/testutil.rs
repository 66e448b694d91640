//! Random networks and parameters for unit tests.

use rand::seq::index::sample;
use rand::Rng;

use crate::model::{Assignment, CptParams, Network, VariableSpec};

/// Random DAG over `n` variables with 2..=max_card states and up to `max_parents` parents.
pub fn random_network<R: Rng>(
    rng: &mut R,
    n: usize,
    max_card: usize,
    max_parents: usize,
) -> Network {
    let vars = (0..n)
        .map(|i| {
            let card = rng.random_range(2..=max_card);
            VariableSpec::new(format!("V{i}"), (0..card).map(|s| format!("s{s}")))
        })
        .collect();
    let mut arcs = Vec::new();
    for child in 1..n {
        let k = rng.random_range(0..=max_parents.min(child));
        for p in sample(rng, child, k).into_iter() {
            arcs.push((p, child));
        }
    }
    Network::from_indices(vars, &arcs).unwrap()
}

/// Normalized rows with entries bounded away from zero.
pub fn random_params<R: Rng>(rng: &mut R, net: &Network) -> CptParams {
    let mut params = CptParams::filled(net, 0.0);
    for v in 0..net.len() {
        for f in 0..net.config_count(v) {
            let row = params.row_mut(v, f);
            for p in row.iter_mut() {
                *p = rng.random_range(0.05..1.0);
            }
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= total);
        }
    }
    params
}

/// Random partial assignment binding each variable with probability `p`.
pub fn random_evidence<R: Rng>(rng: &mut R, net: &Network, p: f64) -> Assignment {
    let mut e = Assignment::new();
    for v in 0..net.len() {
        if rng.random_bool(p) {
            let s = rng.random_range(0..net.card(v));
            e.bind(net, v, s).unwrap();
        }
    }
    e
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
