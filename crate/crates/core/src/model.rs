//! Causal Bayesian network domain types.
//!
//! A [`NetworkStructure`] is a DAG over discrete [`Variable`]s; a
//! [`CausalNetwork`] adds one conditional probability table per node.
//!
//! Parent joint states are indexed mixed-radix with the **first listed parent
//! varying slowest**. For a node with parents `(A, B)` where `A` has 3 states
//! and `B` has 2, the rows are ordered `(a0,b0), (a0,b1), (a1,b0), ...`.
//! Indices are zero-based throughout the API.

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::error::{Error, Result};

/// Index of a variable within its network or dataset schema.
pub type VarId = usize;

/// Absolute tolerance applied to CPT row sums.
pub const ROW_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Variable {
    name: String,
    states: Vec<String>,
}

impl Variable {
    pub fn new<S: Into<String>>(
        name: impl Into<String>,
        states: impl IntoIterator<Item = S>,
    ) -> Result<Self> {
        let name = name.into();
        let states: Vec<String> = states.into_iter().map(Into::into).collect();
        if name.is_empty() {
            return Err(Error::InvalidVariable {
                name,
                reason: "empty name".into(),
            });
        }
        if states.len() < 2 {
            return Err(Error::InvalidVariable {
                name,
                reason: format!("needs at least 2 states, got {}", states.len()),
            });
        }
        let mut seen = HashSet::new();
        for s in &states {
            if !seen.insert(s.as_str()) {
                return Err(Error::InvalidVariable {
                    name,
                    reason: format!("duplicate state `{s}`"),
                });
            }
        }
        Ok(Self { name, states })
    }

    /// Binary variable with states `F`, `T` (in that order).
    pub fn binary(name: impl Into<String>) -> Self {
        Self::new(name, ["F", "T"]).expect("binary variable is well-formed")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn cardinality(&self) -> usize {
        self.states.len()
    }

    pub fn state_index(&self, label: &str) -> Option<usize> {
        self.states.iter().position(|s| s == label)
    }

    pub fn state_index_or_err(&self, label: &str) -> Result<usize> {
        self.state_index(label).ok_or_else(|| Error::UnknownState {
            variable: self.name.clone(),
            state: label.to_string(),
        })
    }
}

/// Which notion of "common ancestor" decides whether a pair is confounded.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConfounderRule {
    /// Some third node `z` reaches `x` by a directed path avoiding `y` and
    /// reaches `y` by a directed path avoiding `x`.
    #[default]
    ExclusivePaths,
    /// Some third node `z` is an ancestor of both `x` and `y`, through any
    /// paths (which may pass through `x` or `y`).
    SharedAncestor,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PairClass {
    pub causally_related: bool,
    pub confounded: bool,
}

#[derive(Clone, Debug)]
pub struct NetworkStructure {
    variables: Vec<Variable>,
    parents: Vec<Vec<VarId>>,
    children: Vec<Vec<VarId>>,
    index: HashMap<String, VarId>,
    topo: Vec<VarId>,
}

impl PartialEq for NetworkStructure {
    fn eq(&self, other: &Self) -> bool {
        self.variables == other.variables && self.parents == other.parents
    }
}

impl NetworkStructure {
    pub fn new(variables: Vec<Variable>, parents: Vec<Vec<VarId>>) -> Result<Self> {
        validate_structure(&variables, &parents)?;
        let index = variables
            .iter()
            .enumerate()
            .map(|(i, v)| (v.name.clone(), i))
            .collect();
        let mut children = vec![Vec::new(); variables.len()];
        for (child, ps) in parents.iter().enumerate() {
            for &p in ps {
                children[p].push(child);
            }
        }
        let topo = topological_order(&parents).expect("acyclicity checked above");
        Ok(Self {
            variables,
            parents,
            children,
            index,
            topo,
        })
    }

    /// Structure without any arcs.
    pub fn empty(variables: Vec<Variable>) -> Result<Self> {
        let n = variables.len();
        Self::new(variables, vec![Vec::new(); n])
    }

    /// Build from `(parent, child)` name pairs.
    pub fn from_arcs(variables: Vec<Variable>, arcs: &[(&str, &str)]) -> Result<Self> {
        let lookup = |name: &str| {
            variables
                .iter()
                .position(|v| v.name == name)
                .ok_or_else(|| Error::UnknownVariable(name.to_string()))
        };
        let mut parents = vec![Vec::new(); variables.len()];
        for &(from, to) in arcs {
            let (p, c) = (lookup(from)?, lookup(to)?);
            parents[c].push(p);
        }
        Self::new(variables, parents)
    }

    /// Parses a comma-separated arc list such as `A->B, B->C`, or `none`
    /// for the empty graph.
    pub fn parse_arcs(variables: Vec<Variable>, spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if spec.eq_ignore_ascii_case("none") {
            return Self::empty(variables);
        }
        let mut arcs = Vec::new();
        for part in spec.split(',') {
            let arc = part
                .split_once("->")
                .map(|(f, t)| (f.trim(), t.trim()))
                .filter(|(f, t)| !f.is_empty() && !t.is_empty() && !t.contains("->"));
            match arc {
                Some(arc) => arcs.push(arc),
                None => {
                    return Err(Error::InvalidArgument(format!(
                        "malformed arc `{}`; expected FROM->TO",
                        part.trim()
                    )))
                }
            }
        }
        Self::from_arcs(variables, &arcs)
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, id: VarId) -> &Variable {
        &self.variables[id]
    }

    pub fn id(&self, name: &str) -> Result<VarId> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn check_id(&self, id: VarId) -> Result<()> {
        if id < self.len() {
            Ok(())
        } else {
            Err(Error::UnknownVariable(format!("#{id}")))
        }
    }

    pub fn parents(&self, id: VarId) -> &[VarId] {
        &self.parents[id]
    }

    pub fn children(&self, id: VarId) -> &[VarId] {
        &self.children[id]
    }

    pub fn cardinality(&self, id: VarId) -> usize {
        self.variables[id].cardinality()
    }

    /// Number of parent joint states `q_i`; 1 for a root.
    pub fn parent_configs(&self, id: VarId) -> usize {
        self.parents[id]
            .iter()
            .map(|&p| self.cardinality(p))
            .product()
    }

    pub fn topological_order(&self) -> &[VarId] {
        &self.topo
    }

    pub fn has_arc(&self, from: VarId, to: VarId) -> bool {
        self.parents[to].contains(&from)
    }

    pub fn arc_count(&self) -> usize {
        self.parents.iter().map(Vec::len).sum()
    }

    /// All arcs as `(parent, child)`, grouped by child.
    pub fn arcs(&self) -> impl Iterator<Item = (VarId, VarId)> + '_ {
        self.parents
            .iter()
            .enumerate()
            .flat_map(|(c, ps)| ps.iter().map(move |&p| (p, c)))
    }

    /// Mixed-radix index of a parent joint state, first parent slowest.
    pub fn joint_state_index(&self, node: VarId, parent_states: &[usize]) -> Result<usize> {
        self.check_id(node)?;
        let ps = &self.parents[node];
        if ps.len() != parent_states.len() {
            return Err(Error::Arity {
                node: self.variables[node].name.clone(),
                expected: ps.len(),
                got: parent_states.len(),
            });
        }
        let mut j = 0;
        for (&p, &s) in ps.iter().zip(parent_states) {
            let r = self.cardinality(p);
            if s >= r {
                return Err(Error::StateOutOfRange {
                    variable: self.variables[p].name.clone(),
                    state: s,
                    cardinality: r,
                });
            }
            j = j * r + s;
        }
        Ok(j)
    }

    /// Inverse of [`joint_state_index`](Self::joint_state_index).
    pub fn parent_states(&self, node: VarId, mut j: usize) -> Vec<usize> {
        let ps = &self.parents[node];
        let mut out = vec![0; ps.len()];
        for (slot, &p) in out.iter_mut().zip(ps).rev() {
            let r = self.cardinality(p);
            *slot = j % r;
            j /= r;
        }
        out
    }

    /// Parent joint-state index of `node` read off a full assignment.
    pub(crate) fn row_of(&self, node: VarId, values: &[usize]) -> usize {
        self.parents[node]
            .iter()
            .fold(0, |j, &p| j * self.cardinality(p) + values[p])
    }

    /// Proper ancestors of `node`.
    pub fn ancestors(&self, node: VarId) -> Result<BTreeSet<VarId>> {
        self.check_id(node)?;
        Ok(self.ancestors_avoiding(node, None))
    }

    pub fn descendants(&self, node: VarId) -> Result<BTreeSet<VarId>> {
        self.check_id(node)?;
        let mut seen = BTreeSet::new();
        let mut stack: Vec<VarId> = self.children[node].clone();
        while let Some(c) = stack.pop() {
            if seen.insert(c) {
                stack.extend_from_slice(&self.children[c]);
            }
        }
        Ok(seen)
    }

    /// Ancestors of `node` reachable by directed paths that never enter `avoid`.
    fn ancestors_avoiding(&self, node: VarId, avoid: Option<VarId>) -> BTreeSet<VarId> {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<VarId> = self.parents[node].clone();
        while let Some(p) = stack.pop() {
            if Some(p) == avoid || !seen.insert(p) {
                continue;
            }
            stack.extend_from_slice(&self.parents[p]);
        }
        seen
    }

    pub fn classify_pair(&self, x: VarId, y: VarId, rule: ConfounderRule) -> Result<PairClass> {
        self.check_id(x)?;
        self.check_id(y)?;
        if x == y {
            return Err(Error::InvalidArgument(format!(
                "cannot classify `{}` against itself",
                self.variables[x].name
            )));
        }
        let ax = self.ancestors_avoiding(x, None);
        let ay = self.ancestors_avoiding(y, None);
        let causally_related = ax.contains(&y) || ay.contains(&x);
        let confounded = match rule {
            ConfounderRule::SharedAncestor => ax.intersection(&ay).any(|&z| z != x && z != y),
            ConfounderRule::ExclusivePaths => {
                let ax = self.ancestors_avoiding(x, Some(y));
                let ay = self.ancestors_avoiding(y, Some(x));
                ax.intersection(&ay).next().is_some()
            }
        };
        Ok(PairClass {
            causally_related,
            confounded,
        })
    }

    /// Same variables, with `node`'s parent list replaced.
    pub fn with_parents(&self, node: VarId, parents: Vec<VarId>) -> Result<Self> {
        self.check_id(node)?;
        let mut all = self.parents.clone();
        all[node] = parents;
        Self::new(self.variables.clone(), all)
    }
}

fn validate_structure(variables: &[Variable], parents: &[Vec<VarId>]) -> Result<()> {
    if variables.len() != parents.len() {
        return Err(Error::InvalidStructure(format!(
            "{} variables but {} parent lists",
            variables.len(),
            parents.len()
        )));
    }
    let mut names = HashSet::new();
    for v in variables {
        if !names.insert(v.name.as_str()) {
            return Err(Error::InvalidStructure(format!(
                "duplicate variable `{}`",
                v.name
            )));
        }
    }
    for (child, ps) in parents.iter().enumerate() {
        let mut seen = HashSet::new();
        for &p in ps {
            if p >= variables.len() {
                return Err(Error::UnknownVariable(format!("#{p}")));
            }
            if p == child {
                return Err(Error::InvalidStructure(format!(
                    "`{}` is its own parent",
                    variables[child].name
                )));
            }
            if !seen.insert(p) {
                return Err(Error::InvalidStructure(format!(
                    "`{}` lists parent `{}` twice",
                    variables[child].name, variables[p].name
                )));
            }
        }
    }
    if let Err(cycle) = topological_order(parents) {
        return Err(Error::Cycle(
            cycle.into_iter().map(|i| variables[i].name.clone()).collect(),
        ));
    }
    Ok(())
}

/// Parents-first order, or the node sequence of one cycle (first node repeated at the end).
fn topological_order(parents: &[Vec<VarId>]) -> std::result::Result<Vec<VarId>, Vec<VarId>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let n = parents.len();
    let mut mark = vec![Mark::New; n];
    let mut order = Vec::with_capacity(n);
    // Iterative DFS along parent edges; a back edge to an Active node closes a cycle.
    for root in 0..n {
        if mark[root] != Mark::New {
            continue;
        }
        let mut stack: Vec<(VarId, usize)> = vec![(root, 0)];
        mark[root] = Mark::Active;
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            if let Some(&p) = parents[node].get(*next) {
                *next += 1;
                match mark[p] {
                    Mark::New => {
                        mark[p] = Mark::Active;
                        stack.push((p, 0));
                    }
                    Mark::Active => {
                        // stack holds child -> parent links; report in arc direction.
                        let start = stack.iter().position(|&(v, _)| v == p).unwrap();
                        let mut cycle: Vec<VarId> = stack[start..].iter().map(|&(v, _)| v).collect();
                        cycle.reverse();
                        cycle.push(cycle[0]);
                        return Err(cycle);
                    }
                    Mark::Done => {}
                }
            } else {
                mark[node] = Mark::Done;
                order.push(node);
                stack.pop();
            }
        }
    }
    Ok(order)
}

/// Conditional probability table: one row of length `r` per parent joint state.
#[derive(Clone, Debug, PartialEq)]
pub struct Cpt {
    cardinality: usize,
    values: Vec<f64>,
}

impl Cpt {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let cardinality = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cardinality) {
            return Err(Error::InvalidArgument("ragged CPT rows".into()));
        }
        Ok(Self {
            cardinality,
            values: rows.into_iter().flatten().collect(),
        })
    }

    pub(crate) fn from_flat(cardinality: usize, values: Vec<f64>) -> Self {
        debug_assert!(cardinality > 0 && values.len().is_multiple_of(cardinality));
        Self {
            cardinality,
            values,
        }
    }

    pub fn point_mass(cardinality: usize, state: usize) -> Self {
        let mut values = vec![0.0; cardinality];
        values[state] = 1.0;
        Self {
            cardinality,
            values,
        }
    }

    pub fn cardinality(&self) -> usize {
        self.cardinality
    }

    pub fn num_rows(&self) -> usize {
        if self.cardinality == 0 {
            0
        } else {
            self.values.len() / self.cardinality
        }
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j * self.cardinality..(j + 1) * self.cardinality]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.cardinality.max(1))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Check acyclicity, CPT dimensions (`q_i` rows by `r_i` columns), entry
/// range and row normalization.
pub fn validate_network(
    variables: &[Variable],
    parents: &[Vec<VarId>],
    cpts: &[Vec<Vec<f64>>],
) -> Result<()> {
    let structure = NetworkStructure::new(variables.to_vec(), parents.to_vec())?;
    if cpts.len() != structure.len() {
        return Err(Error::InvalidStructure(format!(
            "{} variables but {} CPTs",
            structure.len(),
            cpts.len()
        )));
    }
    for (i, rows) in cpts.iter().enumerate() {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidArgument(format!(
                "ragged CPT rows for `{}`",
                structure.variable(i).name()
            )));
        }
        check_cpt(&structure, i, rows.len(), cols, rows.iter().map(Vec::as_slice))?;
    }
    Ok(())
}

fn check_cpt<'a>(
    s: &NetworkStructure,
    node: VarId,
    rows: usize,
    cols: usize,
    row_iter: impl Iterator<Item = &'a [f64]>,
) -> Result<()> {
    let name = s.variable(node).name();
    let (q, r) = (s.parent_configs(node), s.cardinality(node));
    if rows != q || cols != r {
        return Err(Error::DimensionMismatch {
            node: name.to_string(),
            rows,
            cols,
            expected_rows: q,
            expected_cols: r,
        });
    }
    for (j, row) in row_iter.enumerate() {
        if let Some(&value) = row.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidProbability {
                node: name.to_string(),
                row: j,
                value,
            });
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(Error::RowSum {
                node: name.to_string(),
                row: j,
                sum,
            });
        }
    }
    Ok(())
}

/// A DAG with one validated CPT per node.
#[derive(Clone, Debug, PartialEq)]
pub struct CausalNetwork {
    structure: NetworkStructure,
    cpts: Vec<Cpt>,
}

impl CausalNetwork {
    pub fn new(structure: NetworkStructure, cpts: Vec<Cpt>) -> Result<Self> {
        if cpts.len() != structure.len() {
            return Err(Error::InvalidStructure(format!(
                "{} variables but {} CPTs",
                structure.len(),
                cpts.len()
            )));
        }
        for (i, cpt) in cpts.iter().enumerate() {
            check_cpt(&structure, i, cpt.num_rows(), cpt.cardinality(), cpt.rows())?;
        }
        Ok(Self { structure, cpts })
    }

    pub fn from_rows(
        variables: Vec<Variable>,
        parents: Vec<Vec<VarId>>,
        cpts: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        validate_network(&variables, &parents, &cpts)?;
        let structure = NetworkStructure::new(variables, parents)?;
        let cpts = cpts.into_iter().map(Cpt::from_rows).collect::<Result<_>>()?;
        Ok(Self { structure, cpts })
    }

    pub fn structure(&self) -> &NetworkStructure {
        &self.structure
    }

    pub fn cpts(&self) -> &[Cpt] {
        &self.cpts
    }

    pub fn cpt(&self, node: VarId) -> &Cpt {
        &self.cpts[node]
    }

    pub fn len(&self) -> usize {
        self.structure.len()
    }

    pub fn is_empty(&self) -> bool {
        self.structure.is_empty()
    }

    /// `P(node = state | parents in joint state j)`.
    pub fn prob(&self, node: VarId, j: usize, state: usize) -> f64 {
        self.cpts[node].row(j)[state]
    }

    /// Probability of a full assignment under the factored joint.
    pub fn joint_probability(&self, values: &[usize]) -> f64 {
        (0..self.len())
            .map(|i| self.prob(i, self.structure.row_of(i, values), values[i]))
            .product()
    }

    /// Copy with every CPT row divided by its sum.
    pub fn renormalized(&self) -> Self {
        let cpts = self
            .cpts
            .iter()
            .map(|cpt| {
                let mut values = cpt.values.clone();
                for row in values.chunks_mut(cpt.cardinality) {
                    let sum: f64 = row.iter().sum();
                    row.iter_mut().for_each(|v| *v /= sum);
                }
                Cpt::from_flat(cpt.cardinality, values)
            })
            .collect();
        Self {
            structure: self.structure.clone(),
            cpts,
        }
    }

    /// Intervention graph surgery: arcs into each manipulated variable are
    /// removed and its CPT becomes a point mass on the manipulated state.
    /// Every other CPT is untouched.
    pub fn surgery(&self, manipulated: &[(VarId, usize)]) -> Result<Self> {
        let mut parents: Vec<Vec<VarId>> = (0..self.len())
            .map(|i| self.structure.parents(i).to_vec())
            .collect();
        let mut cpts = self.cpts.clone();
        for &(var, state) in manipulated {
            self.structure.check_id(var)?;
            let r = self.structure.cardinality(var);
            if state >= r {
                return Err(Error::StateOutOfRange {
                    variable: self.structure.variable(var).name().to_string(),
                    state,
                    cardinality: r,
                });
            }
            parents[var].clear();
            cpts[var] = Cpt::point_mass(r, state);
        }
        let structure = NetworkStructure::new(self.structure.variables.clone(), parents)?;
        Ok(Self { structure, cpts })
    }
}
