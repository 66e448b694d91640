use crate::model::{Assignment, CptParams, Network};

/// Dense nonnegative table over an ordered scope, row-major (last variable fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    scope: Vec<usize>,
    cards: Vec<usize>,
    table: Vec<f64>,
}

fn strides(cards: &[usize]) -> Vec<usize> {
    let mut out = vec![1; cards.len()];
    for i in (0..cards.len().saturating_sub(1)).rev() {
        out[i] = out[i + 1] * cards[i + 1];
    }
    out
}

impl Factor {
    pub fn new(scope: Vec<usize>, cards: Vec<usize>, table: Vec<f64>) -> Self {
        assert_eq!(scope.len(), cards.len());
        assert_eq!(table.len(), cards.iter().product::<usize>());
        Factor {
            scope,
            cards,
            table,
        }
    }

    pub fn scalar(value: f64) -> Self {
        Factor {
            scope: Vec::new(),
            cards: Vec::new(),
            table: vec![value],
        }
    }

    /// The CPT of `v` as a factor over `Pa(v) ++ [v]`; its table is the
    /// node block of `params` verbatim.
    pub fn from_cpt(net: &Network, params: &CptParams, v: usize) -> Self {
        let scope: Vec<usize> = net.parents(v).iter().copied().chain([v]).collect();
        let cards = scope.iter().map(|&u| net.card(u)).collect();
        Factor::new(scope, cards, params.node(v).to_vec())
    }

    pub fn scope(&self) -> &[usize] {
        &self.scope
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.table.iter().sum()
    }

    pub fn contains(&self, var: usize) -> bool {
        self.scope.contains(&var)
    }

    /// Value at the given states, listed in scope order.
    pub fn value(&self, states: &[usize]) -> f64 {
        let idx = states
            .iter()
            .zip(&self.cards)
            .fold(0, |acc, (&s, &c)| acc * c + s);
        self.table[idx]
    }

    /// Fixes every evidence variable in scope, dropping it from the scope.
    pub fn restrict(&self, evidence: &Assignment) -> Factor {
        if self.scope.iter().all(|&v| evidence.get(v).is_none()) {
            return self.clone();
        }
        let st = strides(&self.cards);
        let mut base = 0;
        let mut scope = Vec::new();
        let mut cards = Vec::new();
        let mut kept_strides = Vec::new();
        for (i, &v) in self.scope.iter().enumerate() {
            match evidence.get(v) {
                Some(s) => base += s * st[i],
                None => {
                    scope.push(v);
                    cards.push(self.cards[i]);
                    kept_strides.push(st[i]);
                }
            }
        }
        let len: usize = cards.iter().product();
        let mut table = Vec::with_capacity(len);
        let mut counter = vec![0; cards.len()];
        let mut offset = base;
        for _ in 0..len {
            table.push(self.table[offset]);
            for k in (0..counter.len()).rev() {
                counter[k] += 1;
                offset += kept_strides[k];
                if counter[k] < cards[k] {
                    break;
                }
                offset -= kept_strides[k] * cards[k];
                counter[k] = 0;
            }
        }
        Factor {
            scope,
            cards,
            table,
        }
    }

    /// Pointwise product over the union scope (this scope first).
    pub fn product(&self, other: &Factor) -> Factor {
        if other.scope.is_empty() {
            let k = other.table[0];
            return Factor {
                scope: self.scope.clone(),
                cards: self.cards.clone(),
                table: self.table.iter().map(|a| a * k).collect(),
            };
        }
        let mut scope = self.scope.clone();
        let mut cards = self.cards.clone();
        for (i, &v) in other.scope.iter().enumerate() {
            if !scope.contains(&v) {
                scope.push(v);
                cards.push(other.cards[i]);
            }
        }
        let sa = strides(&self.cards);
        let sb = strides(&other.cards);
        // Stride of each output variable within each operand (0 if absent).
        let step_a: Vec<usize> = scope
            .iter()
            .map(|v| self.scope.iter().position(|u| u == v).map_or(0, |i| sa[i]))
            .collect();
        let step_b: Vec<usize> = scope
            .iter()
            .map(|v| other.scope.iter().position(|u| u == v).map_or(0, |i| sb[i]))
            .collect();
        let len: usize = cards.iter().product();
        let mut table = Vec::with_capacity(len);
        let mut counter = vec![0; scope.len()];
        let (mut ia, mut ib) = (0, 0);
        for _ in 0..len {
            table.push(self.table[ia] * other.table[ib]);
            for k in (0..counter.len()).rev() {
                counter[k] += 1;
                ia += step_a[k];
                ib += step_b[k];
                if counter[k] < cards[k] {
                    break;
                }
                ia -= step_a[k] * cards[k];
                ib -= step_b[k] * cards[k];
                counter[k] = 0;
            }
        }
        Factor {
            scope,
            cards,
            table,
        }
    }

    /// Sums out every variable not in `keep`; the result follows `keep`'s order,
    /// skipping entries absent from this scope.
    pub fn project(&self, keep: &[usize]) -> Factor {
        let scope: Vec<usize> = keep
            .iter()
            .copied()
            .filter(|v| self.scope.contains(v))
            .collect();
        if scope == self.scope {
            return self.clone();
        }
        let cards: Vec<usize> = scope
            .iter()
            .map(|v| self.cards[self.scope.iter().position(|u| u == v).unwrap()])
            .collect();
        let out_strides = strides(&cards);
        let step: Vec<usize> = self
            .scope
            .iter()
            .map(|v| {
                scope
                    .iter()
                    .position(|u| u == v)
                    .map_or(0, |i| out_strides[i])
            })
            .collect();
        let mut table = vec![0.0; cards.iter().product()];
        let mut counter = vec![0; self.scope.len()];
        let mut out = 0;
        for &value in &self.table {
            table[out] += value;
            for k in (0..counter.len()).rev() {
                counter[k] += 1;
                out += step[k];
                if counter[k] < self.cards[k] {
                    break;
                }
                out -= step[k] * self.cards[k];
                counter[k] = 0;
            }
        }
        Factor {
            scope,
            cards,
            table,
        }
    }

    pub fn sum_out(&self, var: usize) -> Factor {
        let keep: Vec<usize> = self.scope.iter().copied().filter(|&v| v != var).collect();
        self.project(&keep)
    }
}

/// Product of a list of factors (the scalar 1 when empty).
pub fn multiply_all<'a>(factors: impl IntoIterator<Item = &'a Factor>) -> Factor {
    let mut iter = factors.into_iter();
    match iter.next() {
        None => Factor::scalar(1.0),
        Some(first) => iter.fold(first.clone(), |acc, f| acc.product(f)),
    }
}
