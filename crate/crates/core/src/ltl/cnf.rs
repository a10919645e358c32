//! Clause sets and DIMACS I/O.

use super::LtlError;

/// A signed variable index, `v` or `-v` with `v >= 1`.
pub type Lit = i32;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Cnf {
    num_vars: usize,
    clauses: Vec<Vec<Lit>>,
}

impl Cnf {
    pub fn new(num_vars: usize) -> Self {
        Self { num_vars, clauses: Vec::new() }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Vec<Lit>] {
        &self.clauses
    }

    pub fn new_var(&mut self) -> Lit {
        self.num_vars += 1;
        self.num_vars as Lit
    }

    /// # Panics
    /// On an empty clause or a literal outside `1..=num_vars`.
    pub fn add_clause(&mut self, clause: Vec<Lit>) {
        assert!(!clause.is_empty(), "empty clause");
        for &l in &clause {
            assert!(l != 0 && l.unsigned_abs() as usize <= self.num_vars, "literal {l} out of range");
        }
        self.clauses.push(clause);
    }

    /// `assignment[v - 1]` is the value of variable `v`.
    pub fn is_satisfied_by(&self, assignment: &[bool]) -> bool {
        assignment.len() >= self.num_vars
            && self.clauses.iter().all(|c| c.iter().any(|&l| lit_value(assignment, l)))
    }

    /// Standard DIMACS. The only comment is the first line, which records
    /// `digest` (the encoder's variable-map digest) when given.
    pub fn to_dimacs(&self, digest: Option<&str>) -> String {
        let mut out = String::new();
        if let Some(d) = digest {
            out.push_str(&format!("c varmap {d}\n"));
        }
        out.push_str(&format!("p cnf {} {}\n", self.num_vars, self.clauses.len()));
        for c in &self.clauses {
            for l in c {
                out.push_str(&l.to_string());
                out.push(' ');
            }
            out.push_str("0\n");
        }
        out
    }

    pub fn from_dimacs(text: &str) -> Result<Self, LtlError> {
        let bad = |line: usize, message: String| LtlError::Dimacs { line, message };
        let mut header: Option<(usize, usize)> = None;
        let mut clauses = Vec::new();
        let mut current = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let t = raw.trim();
            if t.is_empty() || t.starts_with('c') || t.starts_with('%') {
                continue;
            }
            if t.starts_with('p') {
                let parts: Vec<&str> = t.split_whitespace().collect();
                if header.is_some() || parts.len() != 4 || parts[1] != "cnf" {
                    return Err(bad(line, "malformed problem line".into()));
                }
                let v = parts[2].parse().map_err(|_| bad(line, "bad variable count".into()))?;
                let c = parts[3].parse().map_err(|_| bad(line, "bad clause count".into()))?;
                header = Some((v, c));
                continue;
            }
            let (nv, _) = header.ok_or_else(|| bad(line, "clause before problem line".into()))?;
            for tok in t.split_whitespace() {
                let l: Lit = tok.parse().map_err(|_| bad(line, format!("bad literal `{tok}`")))?;
                if l == 0 {
                    if current.is_empty() {
                        return Err(bad(line, "empty clause".into()));
                    }
                    clauses.push(std::mem::take(&mut current));
                } else if l.unsigned_abs() as usize > nv {
                    return Err(bad(line, format!("literal {l} exceeds declared {nv} variables")));
                } else {
                    current.push(l);
                }
            }
        }
        let (num_vars, count) = header.ok_or_else(|| bad(0, "missing problem line".into()))?;
        if !current.is_empty() {
            return Err(bad(0, "last clause is not zero-terminated".into()));
        }
        if clauses.len() != count {
            return Err(bad(0, format!("header declares {count} clauses, found {}", clauses.len())));
        }
        Ok(Self { num_vars, clauses })
    }
}

pub fn lit_value(assignment: &[bool], l: Lit) -> bool {
    let v = assignment[l.unsigned_abs() as usize - 1];
    if l > 0 { v } else { !v }
}
