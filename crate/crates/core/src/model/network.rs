use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finitely-valued variable and its ordered state labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableSpec {
    pub name: String,
    pub states: Vec<String>,
}

impl VariableSpec {
    pub fn new<S: Into<String>>(
        name: S,
        states: impl IntoIterator<Item = impl Into<String>>,
    ) -> Self {
        VariableSpec {
            name: name.into(),
            states: states.into_iter().map(Into::into).collect(),
        }
    }

    /// A variable with states `"0"` and `"1"`.
    pub fn binary<S: Into<String>>(name: S) -> Self {
        Self::new(name, ["0", "1"])
    }

    pub fn card(&self) -> usize {
        self.states.len()
    }

    pub fn state_index(&self, label: &str) -> Option<usize> {
        self.states.iter().position(|s| s == label)
    }
}

/// A validated DAG over discrete variables.
///
/// Variables are addressed by their declaration index. Parent lists keep the
/// order in which arcs were declared, and that order fixes the mixed-radix
/// layout of every parent configuration (first parent most significant).
#[derive(Debug, Clone)]
pub struct Network {
    variables: Vec<VariableSpec>,
    index: HashMap<String, usize>,
    arcs: Vec<(usize, usize)>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    topo_order: Vec<usize>,
    config_counts: Vec<usize>,
}

impl Network {
    /// Builds a network from named arcs `(parent, child)`.
    pub fn new<S: AsRef<str>>(variables: Vec<VariableSpec>, arcs: &[(S, S)]) -> Result<Self> {
        let index = Self::index_variables(&variables)?;
        let lookup = |name: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| Error::UnknownVariable(name.to_string()))
        };
        let arcs = arcs
            .iter()
            .map(|(p, c)| Ok((lookup(p.as_ref())?, lookup(c.as_ref())?)))
            .collect::<Result<Vec<_>>>()?;
        Self::assemble(variables, index, arcs)
    }

    /// Builds a network from arcs given as declaration indices.
    pub fn from_indices(variables: Vec<VariableSpec>, arcs: &[(usize, usize)]) -> Result<Self> {
        let index = Self::index_variables(&variables)?;
        let n = variables.len();
        for &(p, c) in arcs {
            for v in [p, c] {
                if v >= n {
                    return Err(Error::UnknownVariable(format!("#{v}")));
                }
            }
        }
        Self::assemble(variables, index, arcs.to_vec())
    }

    fn index_variables(variables: &[VariableSpec]) -> Result<HashMap<String, usize>> {
        let mut index = HashMap::with_capacity(variables.len());
        for (i, var) in variables.iter().enumerate() {
            if var.name.is_empty() {
                return Err(Error::InvalidDomain {
                    variable: var.name.clone(),
                    reason: "empty name".into(),
                });
            }
            if var.states.len() < 2 {
                return Err(Error::InvalidDomain {
                    variable: var.name.clone(),
                    reason: format!("needs at least 2 states, has {}", var.states.len()),
                });
            }
            let mut seen = HashSet::new();
            for s in &var.states {
                if !seen.insert(s.as_str()) {
                    return Err(Error::InvalidDomain {
                        variable: var.name.clone(),
                        reason: format!("duplicate state `{s}`"),
                    });
                }
            }
            if index.insert(var.name.clone(), i).is_some() {
                return Err(Error::DuplicateVariable(var.name.clone()));
            }
        }
        Ok(index)
    }

    fn assemble(
        variables: Vec<VariableSpec>,
        index: HashMap<String, usize>,
        arcs: Vec<(usize, usize)>,
    ) -> Result<Self> {
        let n = variables.len();
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        let mut seen = HashSet::new();
        for &(p, c) in &arcs {
            if p == c {
                return Err(Error::Cycle(variables[p].name.clone()));
            }
            if !seen.insert((p, c)) {
                return Err(Error::DuplicateArc(
                    variables[p].name.clone(),
                    variables[c].name.clone(),
                ));
            }
            parents[c].push(p);
            children[p].push(c);
        }

        // Kahn's algorithm, smallest declaration index first.
        let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
        let mut ready: BinaryHeap<Reverse<usize>> =
            (0..n).filter(|&v| indegree[v] == 0).map(Reverse).collect();
        let mut topo_order = Vec::with_capacity(n);
        while let Some(Reverse(v)) = ready.pop() {
            topo_order.push(v);
            for &c in &children[v] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.push(Reverse(c));
                }
            }
        }
        if topo_order.len() != n {
            let stuck = (0..n).find(|&v| indegree[v] > 0).unwrap_or(0);
            return Err(Error::Cycle(variables[stuck].name.clone()));
        }

        let config_counts = parents
            .iter()
            .map(|ps| ps.iter().map(|&p| variables[p].card()).product())
            .collect();

        Ok(Network {
            variables,
            index,
            arcs,
            parents,
            children,
            topo_order,
            config_counts,
        })
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn variables(&self) -> &[VariableSpec] {
        &self.variables
    }

    pub fn variable(&self, v: usize) -> &VariableSpec {
        &self.variables[v]
    }

    pub fn name(&self, v: usize) -> &str {
        &self.variables[v].name
    }

    pub fn card(&self, v: usize) -> usize {
        self.variables[v].card()
    }

    pub fn cards(&self) -> Vec<usize> {
        self.variables.iter().map(VariableSpec::card).collect()
    }

    pub fn var_index(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn state_index(&self, v: usize, label: &str) -> Result<usize> {
        self.variables[v]
            .state_index(label)
            .ok_or_else(|| Error::UnknownState {
                variable: self.variables[v].name.clone(),
                state: label.to_string(),
            })
    }

    pub fn arcs(&self) -> &[(usize, usize)] {
        &self.arcs
    }

    pub fn parents(&self, v: usize) -> &[usize] {
        &self.parents[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn topo_order(&self) -> &[usize] {
        &self.topo_order
    }

    /// Number of parent configurations `|F_v|`.
    pub fn config_count(&self, v: usize) -> usize {
        self.config_counts[v]
    }

    /// Product of all domain sizes, saturating at `u128::MAX`.
    pub fn state_space_size(&self) -> u128 {
        self.variables
            .iter()
            .fold(1u128, |acc, var| acc.saturating_mul(var.card() as u128))
    }

    /// True when every pair of variables is joined by an arc.
    pub fn is_complete(&self) -> bool {
        let n = self.len();
        self.arcs.len() == n * n.saturating_sub(1) / 2
    }

    /// Mixed-radix index of the parent configuration `f` of `v`.
    pub fn family_config_index(&self, v: usize, f: &[usize]) -> Result<usize> {
        let parents = &self.parents[v];
        if f.len() != parents.len() {
            return Err(Error::ArityMismatch {
                variable: self.variables[v].name.clone(),
                expected: parents.len(),
                got: f.len(),
            });
        }
        let mut idx = 0;
        for (&p, &s) in parents.iter().zip(f) {
            let card = self.card(p);
            if s >= card {
                return Err(Error::UnknownState {
                    variable: self.variables[p].name.clone(),
                    state: s.to_string(),
                });
            }
            idx = idx * card + s;
        }
        Ok(idx)
    }

    /// Inverse of [`Network::family_config_index`].
    pub fn config_states(&self, v: usize, mut index: usize) -> Vec<usize> {
        let parents = &self.parents[v];
        let mut states = vec![0; parents.len()];
        for (slot, &p) in states.iter_mut().zip(parents).rev() {
            let card = self.card(p);
            *slot = index % card;
            index /= card;
        }
        states
    }

    /// Parent configuration index of `v` read off a full joint state.
    pub fn config_in(&self, v: usize, full: &[usize]) -> usize {
        self.parents[v]
            .iter()
            .fold(0, |acc, &p| acc * self.card(p) + full[p])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diamond() -> Network {
        let vars = (1..=4)
            .map(|i| VariableSpec::binary(format!("X{i}")))
            .collect();
        Network::new(
            vars,
            &[("X1", "X2"), ("X1", "X3"), ("X2", "X4"), ("X3", "X4")],
        )
        .unwrap()
    }

    #[test]
    fn diamond_parents() {
        let net = diamond();
        assert_eq!(net.parents(3), &[1, 2]);
        assert!(net.parents(0).is_empty());
        assert_eq!(net.config_count(3), 4);
        assert_eq!(net.config_count(0), 1);
    }

    #[test]
    fn isolated_nodes() {
        let vars = vec![
            VariableSpec::binary("A"),
            VariableSpec::binary("B"),
            VariableSpec::binary("C"),
        ];
        let net = Network::new::<&str>(vars, &[]).unwrap();
        assert_eq!(net.topo_order(), &[0, 1, 2]);
    }

    #[test]
    fn rejects_two_cycle() {
        let vars = vec![VariableSpec::binary("A"), VariableSpec::binary("B")];
        let err = Network::new(vars, &[("A", "B"), ("B", "A")]).unwrap_err();
        assert!(matches!(err, Error::Cycle(_)));
    }

    #[test]
    fn rejects_self_loop_and_bad_names() {
        let vars = vec![VariableSpec::binary("A")];
        assert!(matches!(
            Network::new(vars.clone(), &[("A", "A")]),
            Err(Error::Cycle(_))
        ));
        assert!(matches!(
            Network::new(vars, &[("A", "Z")]),
            Err(Error::UnknownVariable(_))
        ));
        let dup = vec![VariableSpec::binary("A"), VariableSpec::binary("A")];
        assert!(matches!(
            Network::new::<&str>(dup, &[]),
            Err(Error::DuplicateVariable(_))
        ));
        let unary = vec![VariableSpec::new("A", ["x"])];
        assert!(matches!(
            Network::new::<&str>(unary, &[]),
            Err(Error::InvalidDomain { .. })
        ));
        let dup_state = vec![VariableSpec::new("A", ["x", "x"])];
        assert!(matches!(
            Network::new::<&str>(dup_state, &[]),
            Err(Error::InvalidDomain { .. })
        ));
    }

    #[test]
    fn config_index_examples() {
        let net = diamond();
        assert_eq!(net.family_config_index(0, &[]).unwrap(), 0);
        assert_eq!(net.family_config_index(3, &[1, 0]).unwrap(), 2);

        let vars = vec![
            VariableSpec::new("A", ["a0", "a1", "a2"]),
            VariableSpec::binary("B"),
            VariableSpec::binary("C"),
        ];
        let net = Network::new(vars, &[("A", "C"), ("B", "C")]).unwrap();
        assert_eq!(net.family_config_index(2, &[2, 1]).unwrap(), 5);
        assert_eq!(net.config_states(2, 5), vec![2, 1]);
        assert!(matches!(
            net.family_config_index(2, &[1]),
            Err(Error::ArityMismatch { .. })
        ));
    }

    #[test]
    fn parent_order_follows_arc_declaration() {
        let vars = vec![
            VariableSpec::binary("A"),
            VariableSpec::binary("B"),
            VariableSpec::binary("C"),
        ];
        let net = Network::new(vars, &[("B", "C"), ("A", "C")]).unwrap();
        assert_eq!(net.parents(2), &[1, 0]);
        assert_eq!(net.family_config_index(2, &[1, 0]).unwrap(), 2);
    }
}
