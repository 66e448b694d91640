use crate::error::{Error, Result};
use crate::model::{Assignment, CptParams, FamilyTable, Network};

/// Largest joint state space the enumeration oracle will build.
pub const MAX_JOINT_CELLS: u128 = 1 << 20;

/// Full joint table by enumeration, variable 0 most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    cards: Vec<usize>,
    probs: Vec<f64>,
}

impl JointTable {
    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Decodes a cell index into per-variable states.
    pub fn states(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.cards.len()];
        for (slot, &c) in out.iter_mut().zip(&self.cards).rev() {
            *slot = index % c;
            index /= c;
        }
        out
    }

    pub fn index_of(&self, full: &[usize]) -> usize {
        full.iter()
            .zip(&self.cards)
            .fold(0, |acc, (&s, &c)| acc * c + s)
    }

    /// Sum of cells consistent with `partial`.
    pub fn prob(&self, partial: &Assignment) -> f64 {
        (0..self.probs.len())
            .filter(|&i| partial.consistent_with(&self.states(i)))
            .map(|i| self.probs[i])
            .sum()
    }

    /// `Pr{X_v = x, F_v = f, e}` for every node by summing cells.
    pub fn family_marginals(&self, net: &Network, evidence: &Assignment) -> FamilyTable<f64> {
        let mut out = FamilyTable::filled(net, 0.0);
        for (i, &p) in self.probs.iter().enumerate() {
            let full = self.states(i);
            if !evidence.consistent_with(&full) {
                continue;
            }
            for v in 0..net.len() {
                let f = net.config_in(v, &full);
                let cur = out.get(v, f, full[v]);
                out.set(v, f, full[v], cur + p);
            }
        }
        out
    }
}

/// Enumerates every full assignment and multiplies the selected CPT entries.
pub fn brute_force_joint(net: &Network, params: &CptParams) -> Result<JointTable> {
    let size = net.state_space_size();
    if size > MAX_JOINT_CELLS {
        return Err(Error::StateSpaceTooLarge(size));
    }
    let cards = net.cards();
    let size = size as usize;
    let mut probs = Vec::with_capacity(size);
    let mut full = vec![0; net.len()];
    for _ in 0..size {
        probs.push(
            (0..net.len())
                .map(|v| params.get(v, net.config_in(v, &full), full[v]))
                .product(),
        );
        for v in (0..full.len()).rev() {
            full[v] += 1;
            if full[v] < cards[v] {
                break;
            }
            full[v] = 0;
        }
    }
    Ok(JointTable { cards, probs })
}
