//! Bucket elimination and its two-pass extension over the bucket tree.
//!
//! Evidence is applied by slicing every CPT factor before elimination, so the
//! network polynomial is evaluated at whatever (possibly unnormalized)
//! parameters are supplied.

use super::factor::{multiply_all, Factor};
use crate::model::{Assignment, CptParams, EliminationOrder, FamilyTable, Network};

/// Result of one elimination run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EliminationTrace {
    pub value: f64,
    /// Largest scope formed by a bucket product.
    pub max_scope: usize,
    /// Largest table formed by a bucket product.
    pub max_table: usize,
}

struct Layout {
    /// Unobserved variables in elimination order.
    vars: Vec<usize>,
    /// Bucket index of every variable (usize::MAX for evidence).
    pos: Vec<usize>,
}

impl Layout {
    fn new(net: &Network, order: &EliminationOrder, evidence: &Assignment) -> Self {
        let vars: Vec<usize> = order
            .order
            .iter()
            .copied()
            .filter(|&v| evidence.get(v).is_none())
            .collect();
        let mut pos = vec![usize::MAX; net.len()];
        for (i, &v) in vars.iter().enumerate() {
            pos[v] = i;
        }
        Layout { vars, pos }
    }

    /// Bucket that receives a factor: its earliest-eliminated variable.
    fn home(&self, scope: &[usize]) -> Option<usize> {
        scope.iter().map(|&v| self.pos[v]).min()
    }
}

fn sliced_cpts(net: &Network, params: &CptParams, evidence: &Assignment) -> Vec<Factor> {
    (0..net.len())
        .map(|v| Factor::from_cpt(net, params, v).restrict(evidence))
        .collect()
}

/// Pr{e} by bucket elimination.
pub fn eliminate(
    net: &Network,
    params: &CptParams,
    evidence: &Assignment,
    order: &EliminationOrder,
) -> EliminationTrace {
    let layout = Layout::new(net, order, evidence);
    let mut buckets: Vec<Vec<Factor>> = vec![Vec::new(); layout.vars.len()];
    let mut scalar = 1.0;
    for factor in sliced_cpts(net, params, evidence) {
        match layout.home(factor.scope()) {
            Some(b) => buckets[b].push(factor),
            None => scalar *= factor.table()[0],
        }
    }
    let mut max_scope = 0;
    let mut max_table = 1;
    for i in 0..layout.vars.len() {
        let contents = std::mem::take(&mut buckets[i]);
        if contents.is_empty() {
            // An unobserved variable with no factors cannot occur: its own CPT
            // always mentions it.
            continue;
        }
        let product = multiply_all(&contents);
        max_scope = max_scope.max(product.scope().len());
        max_table = max_table.max(product.len());
        let message = product.sum_out(layout.vars[i]);
        match layout.home(message.scope()) {
            Some(b) => buckets[b].push(message),
            None => scalar *= message.table()[0],
        }
    }
    EliminationTrace {
        value: scalar,
        max_scope,
        max_table,
    }
}

/// Unnormalized family marginals `Pr{X_v = x, F_v = f, e}` for every node,
/// together with `Pr{e}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyMarginals {
    pub table: FamilyTable<f64>,
    pub evidence_prob: f64,
}

/// Shenoy–Shafer propagation over the bucket tree induced by `order`.
pub fn family_marginals(
    net: &Network,
    params: &CptParams,
    evidence: &Assignment,
    order: &EliminationOrder,
) -> FamilyMarginals {
    let layout = Layout::new(net, order, evidence);
    let k = layout.vars.len();
    let cpts = sliced_cpts(net, params, evidence);

    let mut table = FamilyTable::filled(net, 0.0);

    if k == 0 {
        // Everything observed: one consistent cell per family.
        let p: f64 = cpts.iter().map(|f| f.table()[0]).product();
        for v in 0..net.len() {
            let f = net
                .parents(v)
                .iter()
                .fold(0, |acc, &u| acc * net.card(u) + evidence.get(u).unwrap());
            table.set(v, f, evidence.get(v).unwrap(), p);
        }
        return FamilyMarginals {
            table,
            evidence_prob: p,
        };
    }

    // Assign CPTs to buckets; scalars join the last bucket.
    let mut home_of = vec![k - 1; net.len()];
    let mut local_parts: Vec<Vec<&Factor>> = vec![Vec::new(); k];
    for (v, factor) in cpts.iter().enumerate() {
        let b = layout.home(factor.scope()).unwrap_or(k - 1);
        home_of[v] = b;
        local_parts[b].push(factor);
    }
    let local: Vec<Factor> = local_parts
        .iter()
        .map(|p| multiply_all(p.iter().copied()))
        .collect();

    // Upward pass.
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut up: Vec<Option<Factor>> = vec![None; k];
    for i in 0..k - 1 {
        let incoming = children[i].iter().map(|&c| up[c].as_ref().unwrap());
        let product = multiply_all(std::iter::once(&local[i]).chain(incoming));
        let message = product.sum_out(layout.vars[i]);
        let p = layout.home(message.scope()).unwrap_or(k - 1);
        debug_assert!(p > i);
        children[p].push(i);
        up[i] = Some(message);
    }

    // Downward pass, root first. `down[i]` is consumed once bucket i is done.
    let mut down: Vec<Option<Factor>> = vec![None; k];
    let mut beliefs: Vec<Option<Factor>> = vec![None; k];
    for i in (0..k).rev() {
        let from_parent = down[i].take();
        let mut parts: Vec<&Factor> = vec![&local[i]];
        if let Some(m) = &from_parent {
            parts.push(m);
        }
        for &c in &children[i] {
            parts.push(up[c].as_ref().unwrap());
        }
        for (skip, &c) in children[i].iter().enumerate() {
            let others = parts
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != skip + 1 + usize::from(from_parent.is_some()))
                .map(|(_, f)| *f);
            let product = multiply_all(others);
            let sep = up[c].as_ref().unwrap().scope().to_vec();
            down[c] = Some(product.project(&sep));
        }
        beliefs[i] = Some(multiply_all(parts.iter().copied()));
    }

    let evidence_prob = beliefs[k - 1].as_ref().unwrap().total();

    for v in 0..net.len() {
        let family: Vec<usize> = net.parents(v).iter().copied().chain([v]).collect();
        let free: Vec<usize> = family
            .iter()
            .copied()
            .filter(|&u| evidence.get(u).is_none())
            .collect();
        let marginal = beliefs[home_of[v]].as_ref().unwrap().project(&free);
        debug_assert_eq!(marginal.scope(), free.as_slice());
        // Walk every free-variable configuration and write the matching cell.
        let mut states: Vec<usize> = family
            .iter()
            .map(|&u| evidence.get(u).unwrap_or(0))
            .collect();
        let free_slots: Vec<usize> = (0..family.len())
            .filter(|&i| evidence.get(family[i]).is_none())
            .collect();
        for &value in marginal.table() {
            let (f_states, x) = states.split_at(states.len() - 1);
            let f = f_states
                .iter()
                .zip(net.parents(v))
                .fold(0, |acc, (&s, &u)| acc * net.card(u) + s);
            table.set(v, f, x[0], value);
            for &slot in free_slots.iter().rev() {
                states[slot] += 1;
                if states[slot] < net.card(family[slot]) {
                    break;
                }
                states[slot] = 0;
            }
        }
    }

    FamilyMarginals {
        table,
        evidence_prob,
    }
}
