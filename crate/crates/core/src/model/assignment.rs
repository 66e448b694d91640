use std::collections::BTreeMap;
use std::io::{Read, Write};

use super::network::Network;
use crate::error::{Error, Result};

/// A partial assignment of state codes to variables.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Assignment {
    bindings: BTreeMap<usize, usize>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds an assignment from `(variable name, state label)` pairs.
    pub fn from_labels<A: AsRef<str>, B: AsRef<str>>(
        net: &Network,
        pairs: &[(A, B)],
    ) -> Result<Self> {
        let mut out = Assignment::new();
        for (name, state) in pairs {
            let v = net.var_index(name.as_ref())?;
            let s = net.state_index(v, state.as_ref())?;
            out.bind(net, v, s)?;
        }
        Ok(out)
    }

    /// Parses `"Var=state,Var=state"`. An empty or blank string is the empty assignment.
    pub fn parse(net: &Network, text: &str) -> Result<Self> {
        let mut out = Assignment::new();
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, state) = part
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected `Var=state`, got `{part}`")))?;
            let v = net.var_index(name.trim())?;
            let s = net.state_index(v, state.trim())?;
            out.bind(net, v, s)?;
        }
        Ok(out)
    }

    /// Binds `v` to state code `s`. Rebinding to a different state is an error.
    pub fn bind(&mut self, net: &Network, v: usize, s: usize) -> Result<()> {
        if v >= net.len() {
            return Err(Error::UnknownVariable(format!("#{v}")));
        }
        if s >= net.card(v) {
            return Err(Error::UnknownState {
                variable: net.name(v).to_string(),
                state: s.to_string(),
            });
        }
        match self.bindings.insert(v, s) {
            Some(prev) if prev != s => Err(Error::InvalidQuery(format!(
                "`{}` bound to two different states",
                net.name(v)
            ))),
            _ => Ok(()),
        }
    }

    pub fn get(&self, v: usize) -> Option<usize> {
        self.bindings.get(&v).copied()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.bindings.iter().map(|(&v, &s)| (v, s))
    }

    pub fn vars(&self) -> impl Iterator<Item = usize> + '_ {
        self.bindings.keys().copied()
    }

    /// Union of two assignments; they must agree on shared variables.
    pub fn union(&self, other: &Assignment) -> Option<Assignment> {
        let mut out = self.clone();
        for (v, s) in other.iter() {
            if let Some(prev) = out.bindings.insert(v, s) {
                if prev != s {
                    return None;
                }
            }
        }
        Some(out)
    }

    pub fn consistent_with(&self, full: &[usize]) -> bool {
        self.iter().all(|(v, s)| full[v] == s)
    }

    pub fn is_full(&self, net: &Network) -> bool {
        self.len() == net.len()
    }

    /// Dense state vector for a full assignment.
    pub fn to_full(&self, net: &Network) -> Result<Vec<usize>> {
        if !self.is_full(net) {
            return Err(Error::IncompleteAssignment);
        }
        Ok(self.bindings.values().copied().collect())
    }

    pub fn from_full(full: &[usize]) -> Self {
        Assignment {
            bindings: full.iter().copied().enumerate().collect(),
        }
    }

    pub fn to_text(&self, net: &Network) -> String {
        self.iter()
            .map(|(v, s)| format!("{}={}", net.name(v), net.variable(v).states[s]))
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// `Pr{H = h | E = e}` with disjoint, nonempty hypothesis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    hypothesis: Assignment,
    evidence: Assignment,
}

impl Query {
    pub fn new(hypothesis: Assignment, evidence: Assignment) -> Result<Self> {
        if hypothesis.is_empty() {
            return Err(Error::InvalidQuery("hypothesis binds no variables".into()));
        }
        if let Some(v) = hypothesis.vars().find(|&v| evidence.get(v).is_some()) {
            return Err(Error::InvalidQuery(format!(
                "variable #{v} appears in both hypothesis and evidence"
            )));
        }
        Ok(Query {
            hypothesis,
            evidence,
        })
    }

    /// Parses the text forms used on the command line.
    pub fn parse(net: &Network, target: &str, evidence: &str) -> Result<Self> {
        let h = Assignment::parse(net, target)?;
        let e = Assignment::parse(net, evidence)?;
        if let Some(v) = h.vars().find(|&v| e.get(v).is_some()) {
            return Err(Error::InvalidQuery(format!(
                "`{}` appears in both target and evidence",
                net.name(v)
            )));
        }
        Query::new(h, e)
    }

    pub fn hypothesis(&self) -> &Assignment {
        &self.hypothesis
    }

    pub fn evidence(&self) -> &Assignment {
        &self.evidence
    }

    /// `h ∪ e`; disjointness makes the union always defined.
    pub fn joint(&self) -> Assignment {
        self.hypothesis
            .union(&self.evidence)
            .expect("hypothesis and evidence are disjoint")
    }

    pub fn to_text(&self, net: &Network) -> String {
        if self.evidence.is_empty() {
            format!("Pr{{{}}}", self.hypothesis.to_text(net))
        } else {
            format!(
                "Pr{{{} | {}}}",
                self.hypothesis.to_text(net),
                self.evidence.to_text(net)
            )
        }
    }
}

/// Complete training records as dense state-code vectors.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dataset {
    records: Vec<Vec<usize>>,
}

impl Dataset {
    pub fn new(net: &Network, records: Vec<Vec<usize>>) -> Result<Self> {
        for (i, rec) in records.iter().enumerate() {
            if rec.len() != net.len() || rec.iter().enumerate().any(|(v, &s)| s >= net.card(v)) {
                return Err(Error::IncompleteRecord(i));
            }
        }
        Ok(Dataset { records })
    }

    pub(crate) fn from_trusted(records: Vec<Vec<usize>>) -> Self {
        Dataset { records }
    }

    pub fn records(&self) -> &[Vec<usize>] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Reads CSV whose header names every variable (any column order).
    pub fn read_csv<R: Read>(net: &Network, reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(reader);
        let header = rdr.headers()?.clone();
        let mut columns = Vec::with_capacity(header.len());
        let mut seen = vec![false; net.len()];
        for name in header.iter() {
            let v = net.var_index(name.trim())?;
            if std::mem::replace(&mut seen[v], true) {
                return Err(Error::DuplicateVariable(name.to_string()));
            }
            columns.push(v);
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::Parse(format!(
                "dataset has no column for `{}`",
                net.name(missing)
            )));
        }
        let mut records = Vec::new();
        for (i, row) in rdr.records().enumerate() {
            let row = row?;
            if row.len() != columns.len() {
                return Err(Error::IncompleteRecord(i));
            }
            let mut rec = vec![0; net.len()];
            for (&v, label) in columns.iter().zip(row.iter()) {
                rec[v] = net.state_index(v, label.trim())?;
            }
            records.push(rec);
        }
        Ok(Dataset { records })
    }

    pub fn write_csv<W: Write>(&self, net: &Network, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(net.variables().iter().map(|v| v.name.as_str()))?;
        for rec in &self.records {
            wtr.write_record(
                rec.iter()
                    .enumerate()
                    .map(|(v, &s)| net.variable(v).states[s].as_str()),
            )?;
        }
        wtr.flush()?;
        Ok(())
    }
}
