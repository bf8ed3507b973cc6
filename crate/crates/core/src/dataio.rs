//! Complete-case datasets with per-cell manipulation flags, and the `.cmx`
//! text format.
//!
//! ```text
//! # two binary variables
//! vars: X1{F,T}, X2{F,T}
//! !T,T
//! T,F
//! ```
//!
//! The header declares the schema. Each following line is one case with one
//! state label per variable; a leading `!` marks a cell whose value was set
//! by manipulation rather than observed. Missing cells are rejected.

use std::collections::HashSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{VarId, Variable};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CaseRecord {
    pub values: Vec<usize>,
    pub manipulated: Vec<bool>,
}

impl CaseRecord {
    pub fn observed(values: Vec<usize>) -> Self {
        let manipulated = vec![false; values.len()];
        Self {
            values,
            manipulated,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    variables: Vec<Variable>,
    cases: Vec<CaseRecord>,
}

impl Dataset {
    pub fn new(variables: Vec<Variable>, cases: Vec<CaseRecord>) -> Result<Self> {
        let mut names = HashSet::new();
        for v in &variables {
            if !names.insert(v.name()) {
                return Err(Error::Schema(format!("duplicate variable `{}`", v.name())));
            }
        }
        let mut d = Self {
            variables,
            cases: Vec::with_capacity(cases.len()),
        };
        for c in cases {
            d.push(c)?;
        }
        Ok(d)
    }

    pub fn empty(variables: Vec<Variable>) -> Result<Self> {
        Self::new(variables, Vec::new())
    }

    pub fn push(&mut self, case: CaseRecord) -> Result<()> {
        let n = self.variables.len();
        if case.values.len() != n || case.manipulated.len() != n {
            return Err(Error::Schema(format!(
                "case has {} cells, schema has {n} variables",
                case.values.len()
            )));
        }
        for (v, &k) in self.variables.iter().zip(&case.values) {
            if k >= v.cardinality() {
                return Err(Error::StateOutOfRange {
                    variable: v.name().to_string(),
                    state: k,
                    cardinality: v.cardinality(),
                });
            }
        }
        self.cases.push(case);
        Ok(())
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn cases(&self) -> &[CaseRecord] {
        &self.cases
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    pub fn column(&self, name: &str) -> Result<VarId> {
        self.variables
            .iter()
            .position(|v| v.name() == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    /// Keep only the given columns, in the given order.
    pub fn project(&self, columns: &[VarId]) -> Result<Self> {
        for &c in columns {
            if c >= self.variables.len() {
                return Err(Error::UnknownVariable(format!("#{c}")));
            }
        }
        let variables = columns.iter().map(|&c| self.variables[c].clone()).collect();
        let cases = self
            .cases
            .iter()
            .map(|case| CaseRecord {
                values: columns.iter().map(|&c| case.values[c]).collect(),
                manipulated: columns.iter().map(|&c| case.manipulated[c]).collect(),
            })
            .collect();
        Self::new(variables, cases)
    }

    /// Same data with columns `a` and `b` exchanged.
    pub fn with_columns_swapped(&self, a: VarId, b: VarId) -> Self {
        let mut out = self.clone();
        out.variables.swap(a, b);
        for c in &mut out.cases {
            c.values.swap(a, b);
            c.manipulated.swap(a, b);
        }
        out
    }
}

fn syntax(line: usize, col: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        col,
        message: message.into(),
    }
}

fn parse_header(line_no: usize, body: &str) -> Result<Vec<Variable>> {
    let mut vars = Vec::new();
    let mut rest = body;
    let offset = |rest: &str| body.len() - rest.len() + 6;
    loop {
        rest = rest.trim_start();
        if rest.is_empty() {
            break;
        }
        let open = rest
            .find('{')
            .ok_or_else(|| syntax(line_no, offset(rest), "expected `name{states}`"))?;
        let close = rest
            .find('}')
            .ok_or_else(|| syntax(line_no, offset(rest), "unclosed `{`"))?;
        if close < open {
            return Err(syntax(line_no, offset(rest), "unexpected `}`"));
        }
        let name = rest[..open].trim();
        if name.is_empty() || name.contains(',') {
            return Err(syntax(line_no, offset(rest), "missing variable name"));
        }
        let states: Vec<&str> = rest[open + 1..close].split(',').map(str::trim).collect();
        if states.iter().any(|s| s.is_empty()) {
            return Err(syntax(line_no, offset(rest), format!("empty state label in `{name}`")));
        }
        vars.push(Variable::new(name, states)?);
        rest = rest[close + 1..].trim_start();
        if let Some(r) = rest.strip_prefix(',') {
            rest = r;
            if rest.trim().is_empty() {
                return Err(syntax(line_no, offset(rest), "trailing `,`"));
            }
        } else if !rest.is_empty() {
            return Err(syntax(line_no, offset(rest), "expected `,`"));
        }
    }
    Ok(vars)
}

pub fn parse_dataset(text: &str) -> Result<Dataset> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (hline, header) = lines
        .next()
        .ok_or_else(|| syntax(1, 1, "missing `vars:` header"))?;
    let body = header
        .strip_prefix("vars:")
        .ok_or_else(|| syntax(hline, 1, "expected `vars:` header"))?;
    let variables = parse_header(hline, body)?;
    let mut names = HashSet::new();
    for v in &variables {
        if !names.insert(v.name()) {
            return Err(Error::Schema(format!("duplicate variable `{}`", v.name())));
        }
    }

    let mut d = Dataset::empty(variables)?;
    for (line_no, line) in lines {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != d.variables.len() {
            return Err(Error::Schema(format!(
                "line {line_no}: {} cells, expected {}",
                cells.len(),
                d.variables.len()
            )));
        }
        let mut case = CaseRecord {
            values: Vec::with_capacity(cells.len()),
            manipulated: Vec::with_capacity(cells.len()),
        };
        for (cell, var) in cells.iter().zip(&d.variables) {
            let (flag, label) = match cell.strip_prefix('!') {
                Some(l) => (true, l.trim()),
                None => (false, *cell),
            };
            if label.is_empty() {
                return Err(Error::Schema(format!(
                    "line {line_no}: missing value for `{}`",
                    var.name()
                )));
            }
            case.values.push(var.state_index_or_err(label)?);
            case.manipulated.push(flag);
        }
        d.cases.push(case);
    }
    Ok(d)
}

pub fn write_dataset(d: &Dataset) -> String {
    let mut out = String::from("vars:");
    let header: Vec<String> = d
        .variables
        .iter()
        .map(|v| format!("{}{{{}}}", v.name(), v.states().join(",")))
        .collect();
    if !header.is_empty() {
        out.push(' ');
        out.push_str(&header.join(", "));
    }
    out.push('\n');
    for case in &d.cases {
        let cells: Vec<String> = case
            .values
            .iter()
            .zip(&case.manipulated)
            .zip(&d.variables)
            .map(|((&k, &m), v)| format!("{}{}", if m { "!" } else { "" }, v.states()[k]))
            .collect();
        writeln!(out, "{}", cells.join(",")).unwrap();
    }
    out
}

pub fn read_dataset_file(path: impl AsRef<std::path::Path>) -> Result<Dataset> {
    parse_dataset(&std::fs::read_to_string(path)?)
}
