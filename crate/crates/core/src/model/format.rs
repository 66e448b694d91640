//! JSON network and pseudocount files.

use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::network::{Network, VariableSpec};
use super::table::FamilyTable;
use crate::error::{Error, Result};

/// Rows per variable, keyed by name: `{"X2": [[0.5, 0.5], [0.1, 0.9]]}`.
pub type NamedRows = IndexMap<String, Vec<Vec<f64>>>;

/// `{"variables": [...], "arcs": [[parent, child], ...], "cpt": {...}}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkFile {
    pub variables: Vec<VariableSpec>,
    pub arcs: Vec<[String; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cpt: Option<NamedRows>,
}

/// `{"pseudocounts": {...}}`, laid out like the `cpt` key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorFile {
    pub pseudocounts: NamedRows,
}

impl NetworkFile {
    pub fn from_network(net: &Network, cpt: Option<&FamilyTable<f64>>) -> Self {
        NetworkFile {
            variables: net.variables().to_vec(),
            arcs: net
                .arcs()
                .iter()
                .map(|&(p, c)| [net.name(p).to_string(), net.name(c).to_string()])
                .collect(),
            cpt: cpt.map(|t| named_rows(net, t)),
        }
    }

    pub fn network(&self) -> Result<Network> {
        let arcs: Vec<(&str, &str)> = self
            .arcs
            .iter()
            .map(|[p, c]| (p.as_str(), c.as_str()))
            .collect();
        Network::new(self.variables.clone(), &arcs)
    }

    /// Builds the network and, when present, its CPT (not validated here).
    pub fn load(&self) -> Result<(Network, Option<FamilyTable<f64>>)> {
        let net = self.network()?;
        let cpt = match &self.cpt {
            Some(rows) => Some(table_from_named_rows(&net, rows)?),
            None => None,
        };
        Ok((net, cpt))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

impl PriorFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Converts named rows into a table; every variable must be present.
pub fn table_from_named_rows(net: &Network, rows: &NamedRows) -> Result<FamilyTable<f64>> {
    for name in rows.keys() {
        net.var_index(name)?;
    }
    let nested = net
        .variables()
        .iter()
        .map(|var| {
            rows.get(&var.name)
                .cloned()
                .ok_or_else(|| Error::ShapeMismatch(format!("no rows for `{}`", var.name)))
        })
        .collect::<Result<Vec<_>>>()?;
    FamilyTable::from_rows(net, nested)
}

pub fn named_rows(net: &Network, table: &FamilyTable<f64>) -> NamedRows {
    table
        .to_rows()
        .into_iter()
        .enumerate()
        .map(|(v, rows)| (net.name(v).to_string(), rows))
        .collect()
}
