use serde::{Deserialize, Serialize};

use super::network::Network;
use crate::error::{Error, Result};

/// Row sums of normalized CPT rows must match 1 within this tolerance.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

/// One value per `(node, parent configuration, state)`.
///
/// Node `v` is stored as a flat row-major block of `config_count(v)` rows,
/// each of length `card(v)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyTable<T> {
    cards: Vec<usize>,
    data: Vec<Vec<T>>,
}

/// Concrete CPT entries. Rows may be deliberately left unnormalized when
/// the network polynomial is probed away from the simplex.
pub type CptParams = FamilyTable<f64>;

impl<T: Clone> FamilyTable<T> {
    pub fn filled(net: &Network, value: T) -> Self {
        let cards = net.cards();
        let data = (0..net.len())
            .map(|v| vec![value.clone(); net.config_count(v) * cards[v]])
            .collect();
        FamilyTable { cards, data }
    }

    /// Builds a table from nested rows: `rows[v][f][x]`.
    pub fn from_rows(net: &Network, rows: Vec<Vec<Vec<T>>>) -> Result<Self> {
        if rows.len() != net.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} nodes given, network has {}",
                rows.len(),
                net.len()
            )));
        }
        let cards = net.cards();
        let mut data = Vec::with_capacity(rows.len());
        for (v, node_rows) in rows.into_iter().enumerate() {
            if node_rows.len() != net.config_count(v) {
                return Err(Error::ShapeMismatch(format!(
                    "`{}` has {} rows, expected {}",
                    net.name(v),
                    node_rows.len(),
                    net.config_count(v)
                )));
            }
            let mut flat = Vec::with_capacity(node_rows.len() * cards[v]);
            for (f, row) in node_rows.into_iter().enumerate() {
                if row.len() != cards[v] {
                    return Err(Error::ShapeMismatch(format!(
                        "`{}` row {f} has {} entries, expected {}",
                        net.name(v),
                        row.len(),
                        cards[v]
                    )));
                }
                flat.extend(row);
            }
            data.push(flat);
        }
        Ok(FamilyTable { cards, data })
    }

    pub fn map<U, F: FnMut(&T) -> U>(&self, f: F) -> FamilyTable<U> {
        let mut f = f;
        FamilyTable {
            cards: self.cards.clone(),
            data: self
                .data
                .iter()
                .map(|node| node.iter().map(&mut f).collect())
                .collect(),
        }
    }

    pub fn to_rows(&self) -> Vec<Vec<Vec<T>>> {
        (0..self.node_count())
            .map(|v| self.rows(v).map(<[T]>::to_vec).collect())
            .collect()
    }
}

impl<T> FamilyTable<T> {
    pub fn node_count(&self) -> usize {
        self.data.len()
    }

    pub fn card(&self, v: usize) -> usize {
        self.cards[v]
    }

    pub fn config_count(&self, v: usize) -> usize {
        self.data[v].len() / self.cards[v]
    }

    pub fn row(&self, v: usize, f: usize) -> &[T] {
        let k = self.cards[v];
        &self.data[v][f * k..(f + 1) * k]
    }

    pub fn row_mut(&mut self, v: usize, f: usize) -> &mut [T] {
        let k = self.cards[v];
        &mut self.data[v][f * k..(f + 1) * k]
    }

    pub fn rows(&self, v: usize) -> std::slice::Chunks<'_, T> {
        self.data[v].chunks(self.cards[v])
    }

    /// Flat block of node `v`, indexed `f * card + x`.
    pub fn node(&self, v: usize) -> &[T] {
        &self.data[v]
    }

    pub fn node_mut(&mut self, v: usize) -> &mut [T] {
        &mut self.data[v]
    }

    /// Total number of rows across all nodes.
    pub fn row_count(&self) -> usize {
        (0..self.node_count()).map(|v| self.config_count(v)).sum()
    }

    pub fn matches(&self, net: &Network) -> bool {
        self.node_count() == net.len()
            && (0..net.len()).all(|v| {
                self.cards[v] == net.card(v)
                    && self.data[v].len() == net.card(v) * net.config_count(v)
            })
    }

    pub fn same_shape<U>(&self, other: &FamilyTable<U>) -> bool {
        self.cards == other.cards
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.len() == b.len())
    }

    pub fn iter_nodes(&self) -> impl Iterator<Item = &[T]> {
        self.data.iter().map(Vec::as_slice)
    }
}

impl<T: Copy> FamilyTable<T> {
    pub fn get(&self, v: usize, f: usize, x: usize) -> T {
        self.data[v][f * self.cards[v] + x]
    }

    pub fn set(&mut self, v: usize, f: usize, x: usize, value: T) {
        let k = self.cards[v];
        self.data[v][f * k + x] = value;
    }
}

/// Checks that `params` is shaped for `net` and every row is a probability vector.
pub fn validate_params(net: &Network, params: &CptParams) -> Result<()> {
    if !params.matches(net) {
        return Err(Error::ShapeMismatch(
            "parameters not shaped for network".into(),
        ));
    }
    for v in 0..net.len() {
        for (f, row) in params.rows(v).enumerate() {
            if let Some(&bad) = row.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
                return Err(Error::NegativeEntry {
                    variable: net.name(v).to_string(),
                    config: f,
                    value: bad,
                });
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
                return Err(Error::RowNotNormalized {
                    variable: net.name(v).to_string(),
                    config: f,
                    sum,
                });
            }
        }
    }
    Ok(())
}
