//! Core data model for k-ary CSP instances over the alphabet {0..r-1}:
//! construction, the CCSP text format, validation, and residual instances.
//!
//! Predicates are stored by their *unsatisfying* tuples. Completeness demands
//! at least one UNSAT tuple per clause, so that invariant is directly
//! checkable, and typical tables are small. Variables are 0-indexed in memory
//! and 1-indexed in the text format.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::util::binomial;

/// A single label (alphabet letter). The text format writes labels as single
/// digits, so r <= 10 everywhere.
pub type Label = u8;

/// Largest representable alphabet; bounded by the single-digit file format.
pub const MAX_ALPHABET: usize = 10;

/// A set of labels for one variable, stored as a bitmask over {0..r-1}.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LabelSet(u16);

impl LabelSet {
    pub fn empty() -> Self {
        LabelSet(0)
    }

    /// The full alphabet {0..r-1}.
    pub fn full(r: usize) -> Self {
        debug_assert!(r <= MAX_ALPHABET);
        LabelSet(((1u32 << r) - 1) as u16)
    }

    pub fn singleton(label: Label) -> Self {
        LabelSet(1 << label)
    }

    pub fn contains(&self, label: Label) -> bool {
        self.0 >> label & 1 == 1
    }

    pub fn insert(&mut self, label: Label) {
        self.0 |= 1 << label;
    }

    pub fn remove(&mut self, label: Label) {
        self.0 &= !(1 << label);
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    /// Labels in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = Label> + '_ {
        (0..16u8).filter(|&l| self.contains(l))
    }

    pub fn min_label(&self) -> Option<Label> {
        if self.0 == 0 {
            None
        } else {
            Some(self.0.trailing_zeros() as Label)
        }
    }
}

impl fmt::Debug for LabelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl FromIterator<Label> for LabelSet {
    fn from_iter<T: IntoIterator<Item = Label>>(iter: T) -> Self {
        let mut s = LabelSet::empty();
        for l in iter {
            s.insert(l);
        }
        s
    }
}

/// The unsatisfying tuples of one predicate, kept sorted and deduplicated in
/// the clause's ascending-variable order.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct UnsatTable {
    tuples: Vec<Vec<Label>>,
}

impl UnsatTable {
    pub fn new(mut tuples: Vec<Vec<Label>>) -> Self {
        tuples.sort();
        tuples.dedup();
        UnsatTable { tuples }
    }

    pub fn insert(&mut self, tuple: Vec<Label>) {
        if let Err(pos) = self.tuples.binary_search(&tuple) {
            self.tuples.insert(pos, tuple);
        }
    }

    pub fn contains(&self, tuple: &[Label]) -> bool {
        self.tuples.iter().any(|t| t == tuple)
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[Label]> {
        self.tuples.iter().map(|t| t.as_slice())
    }

    /// Tuples whose every component lies in the corresponding current label
    /// set. Predicates are always evaluated under this restriction.
    pub fn restricted<'a>(
        &'a self,
        vars: &'a [usize],
        domains: &'a [LabelSet],
    ) -> impl Iterator<Item = &'a [Label]> + 'a {
        self.iter()
            .filter(move |t| t.iter().zip(vars).all(|(&l, &v)| domains[v].contains(l)))
    }
}

/// A lower-arity constraint kept alongside the primary clauses, produced when
/// residual construction substitutes fixed values into a clause.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SideConstraint {
    pub vars: Vec<usize>,
    pub table: UnsatTable,
}

/// A k-ary CSP instance over per-variable label sets.
///
/// Instances are immutable after construction; every transformation
/// (restriction, generation) builds a new value, so instances can be shared
/// freely across threads.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Instance {
    k: usize,
    r: usize,
    n: usize,
    label_sets: Vec<LabelSet>,
    clauses: BTreeMap<Vec<usize>, UnsatTable>,
    side: Vec<SideConstraint>,
}

#[derive(Error, Debug, PartialEq, Eq)]
pub enum BuildError {
    #[error("arity must be at least 2, got {0}")]
    BadArity(usize),
    #[error("alphabet size must be in 2..={MAX_ALPHABET}, got {0}")]
    BadAlphabet(usize),
    #[error("clause on {0:?}: expected {1} distinct variables")]
    BadClauseVars(Vec<usize>, usize),
    #[error("variable index {0} out of range (n = {1})")]
    IndexOutOfRange(usize, usize),
    #[error("label {0} out of range (r = {1})")]
    LabelOutOfRange(Label, usize),
    #[error("duplicate clause on variables {0:?}")]
    DuplicateClause(Vec<usize>),
}

impl Instance {
    /// Empty instance skeleton with full label sets.
    pub fn new(k: usize, r: usize, n: usize) -> Result<Self, BuildError> {
        if k < 2 {
            return Err(BuildError::BadArity(k));
        }
        if !(2..=MAX_ALPHABET).contains(&r) {
            return Err(BuildError::BadAlphabet(r));
        }
        Ok(Instance {
            k,
            r,
            n,
            label_sets: vec![LabelSet::full(r); n],
            clauses: BTreeMap::new(),
            side: Vec::new(),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn label_set(&self, var: usize) -> LabelSet {
        self.label_sets[var]
    }

    pub fn label_sets(&self) -> &[LabelSet] {
        &self.label_sets
    }

    pub fn set_label_set(&mut self, var: usize, set: LabelSet) {
        self.label_sets[var] = set;
    }

    /// Clauses in ascending variable-subset order; the position of a clause in
    /// this iteration is its stable clause id.
    pub fn clauses(&self) -> impl Iterator<Item = (&[usize], &UnsatTable)> {
        self.clauses.iter().map(|(v, t)| (v.as_slice(), t))
    }

    pub fn clause_count(&self) -> usize {
        self.clauses.len()
    }

    pub fn table(&self, vars: &[usize]) -> Option<&UnsatTable> {
        self.clauses.get(vars)
    }

    pub fn side_constraints(&self) -> &[SideConstraint] {
        &self.side
    }

    /// Adds a clause given variables in any order with tuples aligned to that
    /// order; stores both normalized to ascending variable order.
    pub fn add_clause(
        &mut self,
        vars: &[usize],
        tuples: Vec<Vec<Label>>,
    ) -> Result<(), BuildError> {
        let (key, table) = self.normalize(vars, tuples, self.k)?;
        if self.clauses.contains_key(&key) {
            return Err(BuildError::DuplicateClause(
                key.iter().map(|v| v + 1).collect(),
            ));
        }
        self.clauses.insert(key, table);
        Ok(())
    }

    /// Adds a lower-arity side constraint (arity 1..k-1).
    pub fn add_side_constraint(
        &mut self,
        vars: &[usize],
        tuples: Vec<Vec<Label>>,
    ) -> Result<(), BuildError> {
        if vars.is_empty() || vars.len() >= self.k {
            return Err(BuildError::BadClauseVars(vars.to_vec(), self.k));
        }
        let (key, table) = self.normalize(vars, tuples, vars.len())?;
        self.side.push(SideConstraint { vars: key, table });
        Ok(())
    }

    fn normalize(
        &self,
        vars: &[usize],
        tuples: Vec<Vec<Label>>,
        arity: usize,
    ) -> Result<(Vec<usize>, UnsatTable), BuildError> {
        if vars.len() != arity {
            return Err(BuildError::BadClauseVars(vars.to_vec(), arity));
        }
        for &v in vars {
            if v >= self.n {
                return Err(BuildError::IndexOutOfRange(v, self.n));
            }
        }
        let mut order: Vec<usize> = (0..arity).collect();
        order.sort_by_key(|&i| vars[i]);
        let key: Vec<usize> = order.iter().map(|&i| vars[i]).collect();
        if key.windows(2).any(|w| w[0] == w[1]) {
            return Err(BuildError::BadClauseVars(vars.to_vec(), arity));
        }
        let mut normalized = Vec::with_capacity(tuples.len());
        for t in tuples {
            if t.len() != arity {
                return Err(BuildError::BadClauseVars(vars.to_vec(), arity));
            }
            for &l in &t {
                if l as usize >= self.r {
                    return Err(BuildError::LabelOutOfRange(l, self.r));
                }
            }
            normalized.push(order.iter().map(|&i| t[i]).collect());
        }
        Ok((key, UnsatTable::new(normalized)))
    }

    /// True iff the full assignment violates no clause and no side constraint.
    pub fn satisfied_by(&self, assignment: &[Label]) -> bool {
        self.first_violation(assignment).is_none()
    }

    fn first_violation(&self, assignment: &[Label]) -> Option<usize> {
        let mut buf = Vec::with_capacity(self.k);
        for (id, (vars, table)) in self
            .clauses()
            .map(|(v, t)| (v, t))
            .chain(self.side.iter().map(|s| (s.vars.as_slice(), &s.table)))
            .enumerate()
        {
            buf.clear();
            buf.extend(vars.iter().map(|&v| assignment[v]));
            if table.contains(&buf) {
                return Some(id);
            }
        }
        None
    }

    /// Number of violated constraints (clauses plus side constraints).
    pub fn violated_count(&self, assignment: &[Label]) -> usize {
        let mut buf = Vec::with_capacity(self.k);
        let mut count = 0;
        for (vars, table) in self
            .clauses()
            .chain(self.side.iter().map(|s| (s.vars.as_slice(), &s.table)))
        {
            buf.clear();
            buf.extend(vars.iter().map(|&v| assignment[v]));
            if table.contains(&buf) {
                count += 1;
            }
        }
        count
    }

    /// A short content digest of the canonical serialization.
    pub fn digest(&self) -> String {
        format!("{:016x}", crate::util::fnv1a(serialize_instance(self).as_bytes()))
    }
}

/// Per-variable value-or-unfixed map driving branching recursions.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PartialAssignment {
    values: Vec<Option<Label>>,
}

impl PartialAssignment {
    pub fn unfixed(n: usize) -> Self {
        PartialAssignment {
            values: vec![None; n],
        }
    }

    pub fn get(&self, var: usize) -> Option<Label> {
        self.values[var]
    }

    pub fn fix(&mut self, var: usize, label: Label) {
        self.values[var] = Some(label);
    }

    pub fn unfix(&mut self, var: usize) {
        self.values[var] = None;
    }

    pub fn is_fixed(&self, var: usize) -> bool {
        self.values[var].is_some()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn unfixed_vars(&self) -> Vec<usize> {
        (0..self.values.len())
            .filter(|&v| self.values[v].is_none())
            .collect()
    }

    pub fn fixed_vars(&self) -> Vec<usize> {
        (0..self.values.len())
            .filter(|&v| self.values[v].is_some())
            .collect()
    }

    /// Completes this partial assignment with values for the unfixed variables
    /// in ascending variable order.
    pub fn complete_with(&self, rest: &[Label]) -> Vec<Label> {
        let mut out = Vec::with_capacity(self.values.len());
        let mut it = rest.iter();
        for v in &self.values {
            match v {
                Some(l) => out.push(*l),
                None => out.push(*it.next().expect("completion too short")),
            }
        }
        debug_assert!(it.next().is_none(), "completion too long");
        out
    }
}

/// Issue codes reported by validation routines.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum IssueCode {
    IncompleteInstance,
    TrivialPredicate,
    ExtraClause,
    ArityMismatch,
    EmptyLabelSet,
    NotAMatching,
    SizeViolation,
    MissingPair,
}

impl fmt::Display for IssueCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self)
    }
}

#[derive(Clone, Debug)]
pub struct Issue {
    pub code: IssueCode,
    /// Clause or variable locus, 1-indexed like the file format.
    pub locus: String,
    pub message: String,
}

/// Outcome of a structural validation; `ok` iff `issues` is empty.
#[derive(Clone, Debug, Default)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn push(&mut self, code: IssueCode, locus: String, message: String) {
        self.issues.push(Issue {
            code,
            locus,
            message,
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok() {
            writeln!(f, "ok")
        } else {
            for issue in &self.issues {
                writeln!(f, "{} at {}: {}", issue.code, issue.locus, issue.message)?;
            }
            Ok(())
        }
    }
}

/// Checks that the instance is a complete k-CSP: n >= k, exactly one clause
/// per k-subset, and every predicate nontrivial under the current label sets.
pub fn validate_complete(inst: &Instance) -> ValidationReport {
    let mut report = ValidationReport::default();
    if inst.n < inst.k {
        report.push(
            IssueCode::IncompleteInstance,
            "header".into(),
            format!("n = {} below arity k = {}", inst.n, inst.k),
        );
        return report;
    }
    for (var, set) in inst.label_sets.iter().enumerate() {
        if set.is_empty() {
            report.push(
                IssueCode::EmptyLabelSet,
                format!("variable {}", var + 1),
                "variable has no allowed labels".into(),
            );
        }
    }
    let expected = binomial(inst.n, inst.k);
    if (inst.clauses.len() as u64) < expected {
        // name one missing subset to make the report actionable
        let missing = crate::util::k_subsets(&(0..inst.n).collect::<Vec<_>>(), inst.k)
            .into_iter()
            .find(|s| !inst.clauses.contains_key(s));
        let locus = missing
            .map(|s| format!("{:?}", s.iter().map(|v| v + 1).collect::<Vec<_>>()))
            .unwrap_or_else(|| "?".into());
        report.push(
            IssueCode::IncompleteInstance,
            locus,
            format!(
                "instance has {} clauses, completeness needs {}",
                inst.clauses.len(),
                expected
            ),
        );
    }
    for (vars, table) in inst.clauses() {
        if table.restricted(vars, &inst.label_sets).next().is_none() {
            report.push(
                IssueCode::TrivialPredicate,
                format!("{:?}", vars.iter().map(|v| v + 1).collect::<Vec<_>>()),
                "no UNSAT tuple survives the current label sets".into(),
            );
        }
    }
    if !inst.side.is_empty() {
        report.push(
            IssueCode::ExtraClause,
            format!("{} side constraints", inst.side.len()),
            "lower-arity constraints present; instance is not a plain complete k-CSP".into(),
        );
    }
    report
}

#[derive(Error, Debug, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: duplicate clause on variables {vars:?}")]
    DuplicateClause { line: usize, vars: Vec<usize> },
    #[error("line {line}: variable index {var} out of range 1..={n}")]
    IndexOutOfRange { line: usize, var: usize, n: usize },
    #[error("line {line}: label {label} out of range 0..{r}")]
    LabelOutOfRange { line: usize, label: usize, r: usize },
}

fn syntax(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        message: message.into(),
    }
}

/// Parses the CCSP text format:
///
/// ```text
/// c comment
/// p ccsp <k> <r> <n>
/// d <var> <label>...                      narrow the variable's label set
/// <v1> ... <vj> u <m> <t1> ... <tm>       clause (j = k) or side constraint (j < k)
/// ```
///
/// Variables are 1-indexed; each tuple is a j-character digit string in
/// ascending-variable order of the listed variables.
pub fn parse_instance(text: &str) -> Result<Instance, ParseError> {
    let mut inst: Option<Instance> = None;
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('p') {
            if inst.is_some() {
                return Err(syntax(lineno, "duplicate problem line"));
            }
            let fields: Vec<&str> = rest.split_whitespace().collect();
            if fields.len() != 4 || fields[0] != "ccsp" {
                return Err(syntax(lineno, "expected `p ccsp <k> <r> <n>`"));
            }
            let nums: Vec<usize> = fields[1..]
                .iter()
                .map(|f| f.parse::<usize>())
                .collect::<Result<_, _>>()
                .map_err(|_| syntax(lineno, "non-numeric problem parameters"))?;
            let (k, r, n) = (nums[0], nums[1], nums[2]);
            inst = Some(Instance::new(k, r, n).map_err(|e| syntax(lineno, e.to_string()))?);
            continue;
        }
        let inst = inst
            .as_mut()
            .ok_or_else(|| syntax(lineno, "clause before problem line"))?;
        if let Some(rest) = line.strip_prefix('d') {
            let fields: Vec<&str> = rest.split_whitespace().collect();
            if fields.len() < 2 {
                return Err(syntax(lineno, "expected `d <var> <label>...`"));
            }
            let var: usize = fields[0]
                .parse()
                .map_err(|_| syntax(lineno, "non-numeric variable"))?;
            if var == 0 || var > inst.n() {
                return Err(ParseError::IndexOutOfRange {
                    line: lineno,
                    var,
                    n: inst.n(),
                });
            }
            let mut set = LabelSet::empty();
            for f in &fields[1..] {
                let label: usize = f
                    .parse()
                    .map_err(|_| syntax(lineno, "non-numeric label"))?;
                if label >= inst.r() {
                    return Err(ParseError::LabelOutOfRange {
                        line: lineno,
                        label,
                        r: inst.r(),
                    });
                }
                set.insert(label as Label);
            }
            inst.set_label_set(var - 1, set);
            continue;
        }
        // clause line: <vars...> u <m> <tuples...>
        let fields: Vec<&str> = line.split_whitespace().collect();
        let upos = fields
            .iter()
            .position(|&f| f == "u")
            .ok_or_else(|| syntax(lineno, "clause line missing `u` separator"))?;
        if upos == 0 || upos > inst.k() {
            return Err(syntax(
                lineno,
                format!("clause lists {} variables, arity is {}", upos, inst.k()),
            ));
        }
        let mut vars = Vec::with_capacity(upos);
        for f in &fields[..upos] {
            let v: usize = f
                .parse()
                .map_err(|_| syntax(lineno, "non-numeric variable"))?;
            if v == 0 || v > inst.n() {
                return Err(ParseError::IndexOutOfRange {
                    line: lineno,
                    var: v,
                    n: inst.n(),
                });
            }
            vars.push(v - 1);
        }
        let count: usize = fields
            .get(upos + 1)
            .ok_or_else(|| syntax(lineno, "missing tuple count"))?
            .parse()
            .map_err(|_| syntax(lineno, "non-numeric tuple count"))?;
        let tuple_fields = &fields[upos + 2..];
        if tuple_fields.len() != count {
            return Err(syntax(
                lineno,
                format!("expected {} tuples, found {}", count, tuple_fields.len()),
            ));
        }
        let mut tuples = Vec::with_capacity(count);
        for tf in tuple_fields {
            if tf.len() != vars.len() {
                return Err(syntax(
                    lineno,
                    format!("tuple `{}` is not {} characters", tf, vars.len()),
                ));
            }
            let mut tuple = Vec::with_capacity(vars.len());
            for ch in tf.chars() {
                let label = ch
                    .to_digit(10)
                    .ok_or_else(|| syntax(lineno, format!("non-digit label in `{}`", tf)))?
                    as usize;
                if label >= inst.r() {
                    return Err(ParseError::LabelOutOfRange {
                        line: lineno,
                        label,
                        r: inst.r(),
                    });
                }
                tuple.push(label as Label);
            }
            tuples.push(tuple);
        }
        let result = if vars.len() == inst.k() {
            inst.add_clause(&vars, tuples)
        } else {
            inst.add_side_constraint(&vars, tuples)
        };
        match result {
            Ok(()) => {}
            Err(BuildError::DuplicateClause(vs)) => {
                return Err(ParseError::DuplicateClause {
                    line: lineno,
                    vars: vs,
                })
            }
            Err(e) => return Err(syntax(lineno, e.to_string())),
        }
    }
    inst.ok_or_else(|| syntax(0, "missing problem line"))
}

/// Canonical serialization; `parse_instance(serialize_instance(x))` is
/// structurally identical to `x`.
pub fn serialize_instance(inst: &Instance) -> String {
    let mut out = String::new();
    out.push_str(&format!("p ccsp {} {} {}\n", inst.k(), inst.r(), inst.n()));
    for (var, set) in inst.label_sets.iter().enumerate() {
        if *set != LabelSet::full(inst.r()) {
            out.push_str(&format!("d {}", var + 1));
            for l in set.iter() {
                out.push_str(&format!(" {}", l));
            }
            out.push('\n');
        }
    }
    let mut emit = |vars: &[usize], table: &UnsatTable| {
        for v in vars {
            out.push_str(&format!("{} ", v + 1));
        }
        out.push_str(&format!("u {}", table.len()));
        for t in table.iter() {
            out.push(' ');
            for &l in t {
                out.push(char::from_digit(l as u32, 10).unwrap());
            }
        }
        out.push('\n');
    };
    for (vars, table) in inst.clauses() {
        emit(vars, table);
    }
    let mut side: Vec<&SideConstraint> = inst.side.iter().collect();
    side.sort_by(|a, b| a.vars.cmp(&b.vars));
    for s in side {
        emit(&s.vars, &s.table);
    }
    out
}

#[derive(Error, Debug, PartialEq, Eq)]
pub enum RestrictError {
    #[error("contradiction: constraint on {vars:?} rejects every completion of the fixed prefix")]
    ContradictionDetected { vars: Vec<usize> },
}

/// A residual instance over the unfixed variables, with the mapping from its
/// variable indices back to the original ones (ascending original order).
#[derive(Clone, Debug)]
pub struct Restriction {
    pub instance: Instance,
    /// `vars[new_index] = old_index`.
    pub vars: Vec<usize>,
}

impl Restriction {
    /// Maps a residual assignment back to a full original-instance assignment.
    pub fn lift(&self, pa: &PartialAssignment, residual: &[Label]) -> Vec<Label> {
        let mut out = vec![0; pa.len()];
        for v in 0..pa.len() {
            if let Some(l) = pa.get(v) {
                out[v] = l;
            }
        }
        for (new, &old) in self.vars.iter().enumerate() {
            out[old] = residual[new];
        }
        out
    }
}

/// Builds the residual instance on the unfixed variables of `pa`.
///
/// Clauses fully inside the unfixed set are kept. Clauses touching fixed
/// variables have the fixed values substituted; the surviving tuples become a
/// lower-arity side constraint (dropped when empty, i.e. always satisfied).
/// A constraint rejecting every completion of the prefix is a contradiction.
pub fn restrict(inst: &Instance, pa: &PartialAssignment) -> Result<Restriction, RestrictError> {
    assert_eq!(pa.len(), inst.n());
    let unfixed = pa.unfixed_vars();
    let mut new_index = vec![usize::MAX; inst.n()];
    for (i, &v) in unfixed.iter().enumerate() {
        new_index[v] = i;
    }
    let mut out = Instance::new(inst.k(), inst.r(), unfixed.len()).expect("valid arity");
    for (i, &v) in unfixed.iter().enumerate() {
        out.set_label_set(i, inst.label_set(v));
    }

    let mut handle = |vars: &[usize], table: &UnsatTable| -> Result<(), RestrictError> {
        let free: Vec<usize> = vars.iter().copied().filter(|&v| !pa.is_fixed(v)).collect();
        let mut residual = UnsatTable::default();
        'tuples: for t in table.iter() {
            let mut reduced = Vec::with_capacity(free.len());
            for (&v, &l) in vars.iter().zip(t) {
                match pa.get(v) {
                    Some(fixed) if fixed != l => continue 'tuples,
                    Some(_) => {}
                    None => reduced.push(l),
                }
            }
            residual.insert(reduced);
        }
        if free.is_empty() {
            if !residual.is_empty() {
                return Err(RestrictError::ContradictionDetected {
                    vars: vars.to_vec(),
                });
            }
            return Ok(());
        }
        // contradiction when every completion over the current label sets is rejected
        let capacity: usize = free
            .iter()
            .map(|&v| inst.label_set(v).len())
            .product();
        let surviving = residual
            .restricted(&free, inst.label_sets())
            .count();
        if surviving >= capacity && capacity > 0 {
            return Err(RestrictError::ContradictionDetected {
                vars: vars.to_vec(),
            });
        }
        if residual.is_empty() {
            return Ok(()); // always satisfied
        }
        let mapped: Vec<usize> = free.iter().map(|&v| new_index[v]).collect();
        let tuples: Vec<Vec<Label>> = residual.iter().map(|t| t.to_vec()).collect();
        if mapped.len() == inst.k() {
            out.add_clause(&mapped, tuples).expect("normalized clause");
        } else {
            out.add_side_constraint(&mapped, tuples)
                .expect("normalized side constraint");
        }
        Ok(())
    };

    for (vars, table) in inst.clauses() {
        handle(vars, table)?;
    }
    for s in inst.side_constraints() {
        handle(&s.vars, &s.table)?;
    }
    Ok(Restriction {
        instance: out,
        vars: unfixed,
    })
}

/// Complete all-positive k-SAT: every k-subset forbids exactly the all-zeros
/// tuple. Satisfying assignments are those with fewer than k zeros.
pub fn all_positive_ksat(k: usize, n: usize) -> Instance {
    let mut inst = Instance::new(k, 2, n).expect("valid arity");
    for vars in crate::util::k_subsets(&(0..n).collect::<Vec<_>>(), k) {
        inst.add_clause(&vars, vec![vec![0; k]]).expect("fresh clause");
    }
    inst
}

/// Random complete instance: every k-subset receives between one and
/// `max_tuples` distinct UNSAT tuples drawn uniformly from the full alphabet
/// product. Deterministic per seed.
pub fn random_complete(k: usize, r: usize, n: usize, max_tuples: usize, seed: u64) -> Instance {
    use rand::prelude::*;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut inst = Instance::new(k, r, n).expect("valid shape");
    let space = (r as u64).pow(k as u32);
    let max_tuples = max_tuples.clamp(1, space as usize);
    for vars in crate::util::k_subsets(&(0..n).collect::<Vec<_>>(), k) {
        let want = rng.random_range(1..=max_tuples);
        let mut table = UnsatTable::default();
        while table.len() < want {
            let mut code = rng.random_range(0..space);
            let mut tuple = vec![0 as Label; k];
            for slot in tuple.iter_mut() {
                *slot = (code % r as u64) as Label;
                code /= r as u64;
            }
            table.insert(tuple);
        }
        inst.add_clause(&vars, table.iter().map(|t| t.to_vec()).collect())
            .expect("fresh clause");
    }
    inst
}

/// Renders an assignment as an n-character label string.
pub fn assignment_string(assignment: &[Label]) -> String {
    assignment
        .iter()
        .map(|&l| char::from_digit(l as u32, 10).unwrap())
        .collect()
}

/// Parses an n-character label string.
pub fn assignment_from_str(s: &str) -> Option<Vec<Label>> {
    s.chars()
        .map(|c| c.to_digit(10).map(|d| d as Label))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Complete all-positive 2-SAT on n variables: every pair forbids (0,0).
    pub fn all_positive_2sat(n: usize) -> Instance {
        let mut inst = Instance::new(2, 2, n).unwrap();
        for i in 0..n {
            for j in i + 1..n {
                inst.add_clause(&[i, j], vec![vec![0, 0]]).unwrap();
            }
        }
        inst
    }

    #[test]
    fn parse_smallest_complete_2csp() {
        let text = "c smallest complete 2-CSP\np ccsp 2 2 3\n1 2 u 1 00\n1 3 u 1 00\n2 3 u 1 00\n";
        let inst = parse_instance(text).unwrap();
        assert_eq!((inst.k(), inst.r(), inst.n()), (2, 2, 3));
        assert_eq!(inst.clause_count(), 3);
        assert!(validate_complete(&inst).ok());
    }

    #[test]
    fn parse_rejects_duplicate_clause() {
        let text = "p ccsp 2 2 3\n1 2 u 1 00\n1 2 u 1 01\n";
        match parse_instance(text) {
            Err(ParseError::DuplicateClause { line, vars }) => {
                assert_eq!(line, 3);
                assert_eq!(vars, vec![1, 2]);
            }
            other => panic!("expected duplicate clause error, got {:?}", other),
        }
    }

    #[test]
    fn parsing_does_not_check_completeness() {
        let text = "p ccsp 2 2 3\n1 2 u 1 00\n1 3 u 1 00\n";
        let inst = parse_instance(text).unwrap();
        let report = validate_complete(&inst);
        assert!(!report.ok());
        assert!(report
            .issues
            .iter()
            .any(|i| i.code == IssueCode::IncompleteInstance));
    }

    #[test]
    fn parse_normalizes_unsorted_variable_lists() {
        let a = parse_instance("p ccsp 2 2 3\n2 1 u 1 01\n1 3 u 1 00\n2 3 u 1 00\n").unwrap();
        let b = parse_instance("p ccsp 2 2 3\n1 2 u 1 10\n1 3 u 1 00\n2 3 u 1 00\n").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn parse_error_carries_line_numbers() {
        assert_eq!(
            parse_instance("p ccsp 2 2 3\n1 4 u 1 00\n"),
            Err(ParseError::IndexOutOfRange {
                line: 2,
                var: 4,
                n: 3
            })
        );
        assert_eq!(
            parse_instance("p ccsp 2 2 3\n1 2 u 1 02\n"),
            Err(ParseError::LabelOutOfRange {
                line: 2,
                label: 2,
                r: 2
            })
        );
        assert!(matches!(
            parse_instance("p ccsp 2 2 3\n1 2 1 00\n"),
            Err(ParseError::Syntax { line: 2, .. })
        ));
    }

    #[test]
    fn serialize_round_trips_simple_instance() {
        let inst = all_positive_2sat(3);
        let text = serialize_instance(&inst);
        assert_eq!(parse_instance(&text).unwrap(), inst);
    }

    #[test]
    fn serialize_emits_narrowed_label_sets() {
        let mut inst = all_positive_2sat(3);
        inst.set_label_set(0, [0u8].into_iter().collect());
        let text = serialize_instance(&inst);
        assert!(text.contains("d 1 0\n"), "got: {text}");
        assert_eq!(parse_instance(&text).unwrap(), inst);
    }

    #[test]
    fn validate_flags_trivial_predicate_under_restriction() {
        let mut inst = Instance::new(2, 3, 3).unwrap();
        inst.add_clause(&[0, 1], vec![vec![2, 2]]).unwrap();
        inst.add_clause(&[0, 2], vec![vec![0, 0]]).unwrap();
        inst.add_clause(&[1, 2], vec![vec![0, 0]]).unwrap();
        assert!(validate_complete(&inst).ok());
        inst.set_label_set(0, [0u8, 1].into_iter().collect());
        let report = validate_complete(&inst);
        assert!(report
            .issues
            .iter()
            .any(|i| i.code == IssueCode::TrivialPredicate));
    }

    #[test]
    fn validate_rejects_n_below_k() {
        let inst = Instance::new(3, 2, 2).unwrap();
        assert!(!validate_complete(&inst).ok());
    }

    #[test]
    fn restrict_keeps_free_pairs_and_drops_satisfied_residues() {
        let inst = all_positive_2sat(3);
        let mut pa = PartialAssignment::unfixed(3);
        pa.fix(0, 1);
        let res = restrict(&inst, &pa).unwrap();
        assert_eq!(res.instance.n(), 2);
        assert_eq!(res.instance.clause_count(), 1);
        assert!(res.instance.side_constraints().is_empty());
    }

    #[test]
    fn restrict_produces_forcing_unary_residues() {
        let inst = all_positive_2sat(3);
        let mut pa = PartialAssignment::unfixed(3);
        pa.fix(0, 0);
        let res = restrict(&inst, &pa).unwrap();
        assert_eq!(res.instance.side_constraints().len(), 2);
        for s in res.instance.side_constraints() {
            assert_eq!(s.table.iter().collect::<Vec<_>>(), vec![&[0u8][..]]);
        }
    }

    #[test]
    fn restrict_detects_contradiction() {
        let mut inst = Instance::new(2, 2, 2).unwrap();
        inst.add_clause(&[0, 1], vec![vec![1, 0], vec![1, 1]])
            .unwrap();
        let mut pa = PartialAssignment::unfixed(2);
        pa.fix(0, 1);
        assert!(matches!(
            restrict(&inst, &pa),
            Err(RestrictError::ContradictionDetected { .. })
        ));
    }

    #[test]
    fn assignment_round_trip() {
        let a = vec![0u8, 1, 2];
        assert_eq!(assignment_string(&a), "012");
        assert_eq!(assignment_from_str("012"), Some(a));
    }
}
