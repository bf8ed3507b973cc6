//! Line-oriented `.cbn` network format.
//!
//! ```text
//! # comment
//! network sprinkler
//! variable Rain { states: F, T }
//! variable Wet { states: F, T }
//! probability ( Rain ) { 0.8, 0.2; }
//! probability ( Wet | Rain ) {
//!   [F]: 0.9, 0.1;
//!   [T]: 0.2, 0.8;
//! }
//! ```
//!
//! Whitespace is insignificant. The parent list of a `probability` block
//! fixes the parent order of the child. Rows carry their parent states
//! explicitly, may come in any order, and must cover every parent joint
//! state exactly once. A parentless node may omit the `[]:` prefix.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{CausalNetwork, Cpt, NetworkStructure, VarId, Variable};

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkDocument {
    pub name: String,
    pub network: CausalNetwork,
}

pub fn parse_network(text: &str) -> Result<CausalNetwork> {
    parse_document(text).map(|d| d.network)
}

pub fn write_network(net: &CausalNetwork) -> String {
    write_document(&NetworkDocument {
        name: "network".into(),
        network: net.clone(),
    })
}

pub fn read_network_file(path: impl AsRef<std::path::Path>) -> Result<CausalNetwork> {
    parse_network(&std::fs::read_to_string(path)?)
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Word(String),
    Sym(char),
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '.' | '-' | '+')
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let mut chars = line.char_indices().peekable();
        while let Some((i, c)) = chars.next() {
            let col = line[..i].chars().count() + 1;
            match c {
                '#' => break,
                c if c.is_whitespace() => {}
                '{' | '}' | '(' | ')' | '[' | ']' | '|' | ',' | ';' | ':' => out.push(Token {
                    tok: Tok::Sym(c),
                    line: ln + 1,
                    col,
                }),
                c if is_word_char(c) => {
                    let mut end = i + c.len_utf8();
                    while let Some(&(j, d)) = chars.peek() {
                        if !is_word_char(d) {
                            break;
                        }
                        end = j + d.len_utf8();
                        chars.next();
                    }
                    out.push(Token {
                        tok: Tok::Word(line[i..end].to_string()),
                        line: ln + 1,
                        col,
                    });
                }
                c => {
                    return Err(Error::Syntax {
                        line: ln + 1,
                        col,
                        message: format!("unexpected character `{c}`"),
                    })
                }
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    end: (usize, usize),
}

impl Parser {
    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        let (line, col) = self
            .toks
            .get(self.pos)
            .map_or(self.end, |t| (t.line, t.col));
        Err(Error::Syntax {
            line,
            col,
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek_sym(&self, c: char) -> bool {
        self.peek() == Some(&Tok::Sym(c))
    }

    fn expect_sym(&mut self, c: char) -> Result<()> {
        if self.peek_sym(c) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected `{c}`"))
        }
    }

    fn word(&mut self, what: &str) -> Result<String> {
        match self.peek() {
            Some(Tok::Word(w)) => {
                let w = w.clone();
                self.pos += 1;
                Ok(w)
            }
            _ => self.err(format!("expected {what}")),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<()> {
        match self.peek() {
            Some(Tok::Word(w)) if w == kw => {
                self.pos += 1;
                Ok(())
            }
            _ => self.err(format!("expected `{kw}`")),
        }
    }

    fn number(&mut self) -> Result<f64> {
        let save = self.pos;
        let w = self.word("a probability value")?;
        match w.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => {
                self.pos = save;
                self.err(format!("`{w}` is not a decimal number"))
            }
        }
    }

    /// `item (, item)*` terminated by `close` (not consumed).
    fn list<T>(&mut self, close: char, mut item: impl FnMut(&mut Self) -> Result<T>) -> Result<Vec<T>> {
        let mut out = Vec::new();
        if self.peek_sym(close) {
            return Ok(out);
        }
        loop {
            out.push(item(self)?);
            if self.peek_sym(',') {
                self.pos += 1;
            } else {
                return Ok(out);
            }
        }
    }
}

struct ProbBlock {
    child: VarId,
    parents: Vec<VarId>,
    rows: Vec<(Option<Vec<String>>, Vec<f64>, (usize, usize))>,
}

pub fn parse_document(text: &str) -> Result<NetworkDocument> {
    let toks = tokenize(text)?;
    let end = toks.last().map_or((1, 1), |t| (t.line, t.col + 1));
    let mut p = Parser { toks, pos: 0, end };

    p.keyword("network")?;
    let name = p.word("a network name")?;

    let mut variables: Vec<Variable> = Vec::new();
    let mut index: HashMap<String, VarId> = HashMap::new();
    let mut blocks: Vec<Option<ProbBlock>> = Vec::new();

    while let Some(tok) = p.peek() {
        match tok {
            Tok::Word(w) if w == "variable" => {
                p.pos += 1;
                let vname = p.word("a variable name")?;
                if index.contains_key(&vname) {
                    p.pos -= 1;
                    return p.err(format!("variable `{vname}` declared twice"));
                }
                p.expect_sym('{')?;
                p.keyword("states")?;
                p.expect_sym(':')?;
                let states = p.list('}', |p| p.word("a state label"))?;
                p.expect_sym('}')?;
                let var = Variable::new(vname.clone(), states)?;
                index.insert(vname, variables.len());
                variables.push(var);
                blocks.push(None);
            }
            Tok::Word(w) if w == "probability" => {
                p.pos += 1;
                p.expect_sym('(')?;
                let lookup = |p: &mut Parser| -> Result<VarId> {
                    let n = p.word("a variable name")?;
                    match index.get(&n) {
                        Some(&i) => Ok(i),
                        None => {
                            p.pos -= 1;
                            p.err(format!("undeclared variable `{n}`"))
                        }
                    }
                };
                let child = lookup(&mut p)?;
                let parents = if p.peek_sym('|') {
                    p.pos += 1;
                    p.list(')', lookup)?
                } else {
                    Vec::new()
                };
                p.expect_sym(')')?;
                p.expect_sym('{')?;
                let mut rows = Vec::new();
                while !p.peek_sym('}') {
                    let at = p.toks.get(p.pos).map_or(p.end, |t| (t.line, t.col));
                    let key = if p.peek_sym('[') {
                        p.pos += 1;
                        let key = p.list(']', |p| p.word("a parent state"))?;
                        p.expect_sym(']')?;
                        p.expect_sym(':')?;
                        Some(key)
                    } else {
                        None
                    };
                    let values = p.list(';', Parser::number)?;
                    p.expect_sym(';')?;
                    rows.push((key, values, at));
                }
                p.expect_sym('}')?;
                if blocks[child].is_some() {
                    return Err(Error::Syntax {
                        line: rows.first().map_or(end.0, |r| r.2 .0),
                        col: 1,
                        message: format!(
                            "second probability block for `{}`",
                            variables[child].name()
                        ),
                    });
                }
                blocks[child] = Some(ProbBlock {
                    child,
                    parents,
                    rows,
                });
            }
            _ => return p.err("expected `variable` or `probability`"),
        }
    }

    let mut parents = vec![Vec::new(); variables.len()];
    for (i, b) in blocks.iter().enumerate() {
        match b {
            Some(b) => parents[i] = b.parents.clone(),
            None => {
                return Err(Error::Syntax {
                    line: end.0,
                    col: end.1,
                    message: format!("no probability block for `{}`", variables[i].name()),
                })
            }
        }
    }
    let structure = NetworkStructure::new(variables, parents)?;
    let cpts = blocks
        .into_iter()
        .map(|b| assemble_cpt(&structure, b.expect("checked above")))
        .collect::<Result<Vec<_>>>()?;
    Ok(NetworkDocument {
        name,
        network: CausalNetwork::new(structure, cpts)?,
    })
}

fn assemble_cpt(s: &NetworkStructure, block: ProbBlock) -> Result<Cpt> {
    let child = block.child;
    let child_name = s.variable(child).name().to_string();
    let (q, r) = (s.parent_configs(child), s.cardinality(child));
    let mut table: Vec<Option<Vec<f64>>> = vec![None; q];
    for (key, values, (line, col)) in block.rows {
        let key = key.unwrap_or_default();
        if key.len() != block.parents.len() {
            return Err(Error::Syntax {
                line,
                col,
                message: format!(
                    "row for `{child_name}` names {} parent states, expected {}",
                    key.len(),
                    block.parents.len()
                ),
            });
        }
        let states = key
            .iter()
            .zip(s.parents(child))
            .map(|(label, &p)| s.variable(p).state_index_or_err(label))
            .collect::<Result<Vec<_>>>()?;
        if values.len() != r {
            return Err(Error::DimensionMismatch {
                node: child_name,
                rows: q,
                cols: values.len(),
                expected_rows: q,
                expected_cols: r,
            });
        }
        let j = s.joint_state_index(child, &states)?;
        if table[j].replace(values).is_some() {
            return Err(Error::DuplicateRow {
                child: child_name,
                parent_states: key,
            });
        }
    }
    let mut flat = Vec::with_capacity(q * r);
    for (j, row) in table.into_iter().enumerate() {
        match row {
            Some(row) => flat.extend(row),
            None => {
                let parent_states = s
                    .parent_states(child, j)
                    .iter()
                    .zip(s.parents(child))
                    .map(|(&k, &p)| s.variable(p).states()[k].clone())
                    .collect();
                return Err(Error::MissingRow {
                    child: child_name,
                    parent_states,
                });
            }
        }
    }
    Ok(Cpt::from_flat(r, flat))
}

pub fn write_document(doc: &NetworkDocument) -> String {
    let net = &doc.network;
    let s = net.structure();
    let mut out = String::new();
    writeln!(out, "network {}", doc.name).unwrap();
    out.push('\n');
    for v in s.variables() {
        writeln!(out, "variable {} {{ states: {} }}", v.name(), v.states().join(", ")).unwrap();
    }
    for i in 0..s.len() {
        out.push('\n');
        let name = s.variable(i).name();
        let parents = s.parents(i);
        let cpt = net.cpt(i);
        if parents.is_empty() {
            writeln!(out, "probability ( {name} ) {{").unwrap();
            writeln!(out, "  {};", fmt_row(cpt.row(0))).unwrap();
        } else {
            let pnames: Vec<&str> = parents.iter().map(|&p| s.variable(p).name()).collect();
            writeln!(out, "probability ( {name} | {} ) {{", pnames.join(", ")).unwrap();
            for j in 0..cpt.num_rows() {
                let labels: Vec<&str> = s
                    .parent_states(i, j)
                    .iter()
                    .zip(parents)
                    .map(|(&k, &p)| s.variable(p).states()[k].as_str())
                    .collect();
                writeln!(out, "  [{}]: {};", labels.join(", "), fmt_row(cpt.row(j))).unwrap();
            }
        }
        out.push_str("}\n");
    }
    out
}

// Shortest representation that parses back to the identical f64.
fn fmt_row(row: &[f64]) -> String {
    row.iter()
        .map(|v| format!("{v:?}"))
        .collect::<Vec<_>>()
        .join(", ")
}
