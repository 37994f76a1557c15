//! Instance generators built from constructive reductions: dense embeddings
//! that pad a general formula with dummy variables while preserving the
//! optimum, the product construction that blows variables up into index
//! blocks with sampled dummy predicates, randomized gadget search with
//! exhaustive property verification, and a CNF-to-complete converter for
//! test corpora.

use std::collections::{BTreeMap, BTreeSet};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::instance::{validate_complete, Instance, Label};
use crate::pac::{PacInstance, PacMode};
use crate::util::k_subsets;

/// A literal of a general CNF formula.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct CnfLit {
    pub var: usize,
    pub negated: bool,
}

impl CnfLit {
    pub fn positive(var: usize) -> Self {
        CnfLit {
            var,
            negated: false,
        }
    }

    pub fn negative(var: usize) -> Self {
        CnfLit { var, negated: true }
    }

    pub fn satisfied_by(&self, value: bool) -> bool {
        value != self.negated
    }
}

/// General (not complete) k-SAT formula: every clause is a disjunction of
/// k literals over distinct variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneralCnf {
    pub n: usize,
    pub k: usize,
    pub clauses: Vec<Vec<CnfLit>>,
}

#[derive(Error, Debug, PartialEq)]
pub enum ReductionError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("clause {0} has {1} literals; formula arity is {2}")]
    NonUniformArity(usize, usize, usize),
    #[error("clause {0} is tautological or repeats a variable")]
    BadClause(usize),
    #[error("two clauses share the variable set {0:?}; the product construction needs one constraint per set")]
    DuplicateClauseSet(Vec<usize>),
    #[error("distribution is not balanced: tuple {0:?} is rejected with weight {1}, expected {2}")]
    DistributionNotBalanced(Vec<Label>, u64, u64),
    #[error("expected arity {expected}, formula has {actual}")]
    WrongArity { expected: usize, actual: usize },
    #[error("epsilon must lie strictly between 0 and 1, got {0}")]
    BadEpsilon(f64),
}

impl GeneralCnf {
    pub fn new(n: usize, k: usize) -> Self {
        GeneralCnf {
            n,
            k,
            clauses: Vec::new(),
        }
    }

    pub fn add_clause(&mut self, lits: Vec<CnfLit>) -> Result<(), ReductionError> {
        let id = self.clauses.len();
        if lits.len() != self.k {
            return Err(ReductionError::NonUniformArity(id, lits.len(), self.k));
        }
        let mut vars: Vec<usize> = lits.iter().map(|l| l.var).collect();
        vars.sort_unstable();
        if vars.windows(2).any(|w| w[0] == w[1]) || vars.iter().any(|&v| v >= self.n) {
            return Err(ReductionError::BadClause(id));
        }
        self.clauses.push(lits);
        Ok(())
    }

    /// The number of clauses an assignment leaves unsatisfied.
    pub fn unsat_count(&self, assignment: &[bool]) -> usize {
        self.clauses
            .iter()
            .filter(|c| c.iter().all(|l| !l.satisfied_by(assignment[l.var])))
            .count()
    }

    /// Exact minimum over all assignments; exponential, test scale only.
    pub fn min_unsat_exhaustive(&self) -> usize {
        assert!(self.n < 26, "exhaustive search cap");
        (0..1u64 << self.n)
            .map(|code| {
                let assignment: Vec<bool> = (0..self.n).map(|v| code >> v & 1 == 1).collect();
                self.unsat_count(&assignment)
            })
            .min()
            .unwrap_or(0)
    }

    /// The assignment falsifying the clause, in ascending variable order.
    fn falsifying_tuple(clause: &[CnfLit]) -> (Vec<usize>, Vec<Label>) {
        let mut pairs: Vec<(usize, Label)> = clause
            .iter()
            .map(|l| (l.var, if l.negated { 1 } else { 0 }))
            .collect();
        pairs.sort_unstable();
        (
            pairs.iter().map(|&(v, _)| v).collect(),
            pairs.iter().map(|&(_, t)| t).collect(),
        )
    }
}

/// Parses DIMACS CNF (`p cnf <n> <m>`, comment lines starting with `c`,
/// clauses as 0-terminated literal runs). The formula must be k-uniform.
pub fn parse_dimacs(text: &str) -> Result<GeneralCnf, ReductionError> {
    let syntax = |line: usize, message: &str| ReductionError::Syntax {
        line,
        message: message.into(),
    };
    let mut header: Option<(usize, usize)> = None;
    let mut clauses: Vec<Vec<CnfLit>> = Vec::new();
    let mut current: Vec<CnfLit> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('p') {
            let fields: Vec<&str> = rest.split_whitespace().collect();
            if fields.len() != 3 || fields[0] != "cnf" || header.is_some() {
                return Err(syntax(lineno, "expected a single `p cnf <n> <m>` line"));
            }
            let n = fields[1]
                .parse()
                .map_err(|_| syntax(lineno, "non-numeric variable count"))?;
            let m = fields[2]
                .parse()
                .map_err(|_| syntax(lineno, "non-numeric clause count"))?;
            header = Some((n, m));
            continue;
        }
        let (n, _) = header.ok_or_else(|| syntax(lineno, "clause before the problem line"))?;
        for tok in line.split_whitespace() {
            let lit: i64 = tok
                .parse()
                .map_err(|_| syntax(lineno, "non-numeric literal"))?;
            if lit == 0 {
                clauses.push(std::mem::take(&mut current));
            } else {
                let var = lit.unsigned_abs() as usize - 1;
                if var >= n {
                    return Err(syntax(lineno, "literal out of range"));
                }
                current.push(CnfLit {
                    var,
                    negated: lit < 0,
                });
            }
        }
    }
    let (n, m) = header.ok_or_else(|| syntax(0, "missing problem line"))?;
    if !current.is_empty() {
        return Err(syntax(0, "unterminated clause at end of input"));
    }
    if clauses.len() != m {
        return Err(syntax(
            0,
            &format!("expected {m} clauses, found {}", clauses.len()),
        ));
    }
    let k = clauses.first().map_or(2, |c| c.len());
    let mut cnf = GeneralCnf::new(n, k);
    for c in clauses {
        cnf.add_clause(c)?;
    }
    Ok(cnf)
}

pub fn serialize_dimacs(cnf: &GeneralCnf) -> String {
    let mut out = format!("p cnf {} {}\n", cnf.n, cnf.clauses.len());
    for clause in &cnf.clauses {
        for lit in clause {
            let v = (lit.var + 1) as i64;
            out.push_str(&format!("{} ", if lit.negated { -v } else { v }));
        }
        out.push_str("0\n");
    }
    out
}

/// Pads a general formula to near-complete density: adds ceil(n/epsilon)
/// dummy variables and the all-positive clause on every k-set touching a
/// dummy. Setting the dummies true satisfies every added clause, so the
/// optimum is unchanged.
pub fn densify(cnf: &GeneralCnf, epsilon: f64) -> Result<GeneralCnf, ReductionError> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(ReductionError::BadEpsilon(epsilon));
    }
    let extra = (cnf.n as f64 / epsilon).ceil() as usize;
    let total = cnf.n + extra;
    let mut out = GeneralCnf::new(total, cnf.k);
    out.clauses = cnf.clauses.clone();
    for vars in k_subsets(&(0..total).collect::<Vec<_>>(), cnf.k) {
        if vars.iter().any(|&v| v >= cnf.n) {
            out.clauses
                .push(vars.iter().map(|&v| CnfLit::positive(v)).collect());
        }
    }
    Ok(out)
}

/// A weighted predicate family over tuples of an r-letter alphabet; the
/// product construction requires every tuple to be rejected with the same
/// total weight.
#[derive(Clone, Debug)]
pub struct PredicateDistribution {
    pub k: usize,
    pub r: usize,
    /// (UNSAT tuple set, weight) per predicate.
    pub predicates: Vec<(Vec<Vec<Label>>, u64)>,
}

impl PredicateDistribution {
    /// Uniform over the r^k single-UNSAT-tuple predicates; balanced by
    /// symmetry.
    pub fn uniform_single_tuple(k: usize, r: usize) -> Self {
        let mut predicates = Vec::new();
        let space = (r as u64).pow(k as u32);
        for mut code in 0..space {
            let mut tuple = vec![0 as Label; k];
            for slot in tuple.iter_mut() {
                *slot = (code % r as u64) as Label;
                code /= r as u64;
            }
            predicates.push((vec![tuple], 1));
        }
        PredicateDistribution { k, r, predicates }
    }

    /// Checks the exact balance property with integer arithmetic.
    pub fn check_balanced(&self) -> Result<(), ReductionError> {
        let space = (self.r as u64).pow(self.k as u32);
        let mut expected: Option<u64> = None;
        for code in 0..space {
            let mut c = code;
            let mut tuple = vec![0 as Label; self.k];
            for slot in tuple.iter_mut() {
                *slot = (c % self.r as u64) as Label;
                c /= self.r as u64;
            }
            let weight: u64 = self
                .predicates
                .iter()
                .filter(|(unsat, _)| unsat.iter().any(|t| *t == tuple))
                .map(|&(_, w)| w)
                .sum();
            match expected {
                None => expected = Some(weight),
                Some(e) if e != weight => {
                    return Err(ReductionError::DistributionNotBalanced(tuple, weight, e))
                }
                _ => {}
            }
        }
        let total: u64 = self.predicates.iter().map(|&(_, w)| w).sum();
        let w = expected.unwrap_or(0);
        if w == 0 || w >= total {
            return Err(ReductionError::DistributionNotBalanced(
                Vec::new(),
                w,
                total,
            ));
        }
        Ok(())
    }

    /// Rejection probability p shared by all tuples.
    pub fn rejection_probability(&self) -> f64 {
        let total: u64 = self.predicates.iter().map(|&(_, w)| w).sum();
        let space = (self.r as u64).pow(self.k as u32);
        let rejected: u64 = self
            .predicates
            .iter()
            .map(|(unsat, w)| unsat.len() as u64 * w)
            .sum();
        rejected as f64 / (total as f64 * space as f64)
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> &Vec<Vec<Label>> {
        let total: u64 = self.predicates.iter().map(|&(_, w)| w).sum();
        let mut pick = rng.random_range(0..total);
        for (unsat, w) in &self.predicates {
            if pick < *w {
                return unsat;
            }
            pick -= w;
        }
        unreachable!("weights sum to total")
    }
}

/// A complete instance produced by the product construction, with the lifted
/// real constraints marked.
#[derive(Clone, Debug)]
pub struct ProductInstance {
    pub instance: Instance,
    pub real: BTreeSet<Vec<usize>>,
    pub t: usize,
    pub original_n: usize,
}

impl ProductInstance {
    /// Blockwise lift of an assignment on the original variables.
    pub fn lift_blockwise(&self, alpha: &[Label]) -> Vec<Label> {
        let mut out = vec![0; self.original_n * self.t];
        for v in 0..self.original_n {
            for i in 0..self.t {
                out[v * self.t + i] = alpha[v];
            }
        }
        out
    }

    /// Number of real constraints the lifted assignment violates.
    pub fn real_violations(&self, assignment: &[Label]) -> usize {
        let mut buf = Vec::new();
        self.real
            .iter()
            .filter(|vars| {
                let table = self.instance.table(vars).expect("real constraint");
                buf.clear();
                buf.extend(vars.iter().map(|&v| assignment[v]));
                table.contains(&buf)
            })
            .count()
    }

    /// Number of dummy constraints the assignment violates.
    pub fn dummy_violations(&self, assignment: &[Label]) -> usize {
        self.instance.violated_count(assignment) - self.real_violations(assignment)
    }

    pub fn dummy_count(&self) -> usize {
        self.instance.clause_count() - self.real.len()
    }
}

/// Blows each variable into t copies: real constraints are replicated across
/// every index combination, and every other k-set samples a dummy predicate
/// from the balanced family. The output is always a validated complete
/// instance.
pub fn product_reduction(
    cnf: &GeneralCnf,
    dist: &PredicateDistribution,
    t: usize,
    seed: u64,
) -> Result<ProductInstance, ReductionError> {
    if dist.k != cnf.k || dist.r != 2 {
        return Err(ReductionError::WrongArity {
            expected: cnf.k,
            actual: dist.k,
        });
    }
    dist.check_balanced()?;
    let mut seen_sets = BTreeSet::new();
    for clause in &cnf.clauses {
        let mut vars: Vec<usize> = clause.iter().map(|l| l.var).collect();
        vars.sort_unstable();
        if !seen_sets.insert(vars.clone()) {
            return Err(ReductionError::DuplicateClauseSet(
                vars.iter().map(|v| v + 1).collect(),
            ));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lifted_n = cnf.n * t;
    let mut inst = Instance::new(cnf.k, 2, lifted_n).expect("valid shape");
    let mut real = BTreeSet::new();

    // real constraints: one per clause per index combination
    let advance = |indices: &mut [usize]| -> bool {
        for pos in (0..indices.len()).rev() {
            if indices[pos] + 1 < t {
                indices[pos] += 1;
                indices[pos + 1..].iter_mut().for_each(|i| *i = 0);
                return true;
            }
        }
        false
    };
    for clause in &cnf.clauses {
        let (base_vars, tuple) = GeneralCnf::falsifying_tuple(clause);
        let mut indices = vec![0usize; cnf.k];
        loop {
            let vars: Vec<usize> = base_vars
                .iter()
                .zip(&indices)
                .map(|(&v, &i)| v * t + i)
                .collect();
            inst.add_clause(&vars, vec![tuple.clone()])
                .expect("distinct lifted sets");
            real.insert({
                let mut s = vars.clone();
                s.sort_unstable();
                s
            });
            if !advance(&mut indices) {
                break;
            }
        }
    }

    // dummy constraints everywhere else, sampled in deterministic key order
    for vars in k_subsets(&(0..lifted_n).collect::<Vec<_>>(), cnf.k) {
        if real.contains(&vars) {
            continue;
        }
        let unsat = dist.sample(&mut rng).clone();
        inst.add_clause(&vars, unsat).expect("fresh dummy clause");
    }

    debug_assert!(validate_complete(&inst).ok());
    Ok(ProductInstance {
        instance: inst,
        real,
        t,
        original_n: cnf.n,
    })
}

/// Completes a 3-uniform formula into a complete Boolean 3-ary instance:
/// triples carrying clauses keep their falsifying tuples, every other triple
/// forbids the all-zeros tuple. Satisfiability is preserved only up to the
/// extra all-zeros exclusions: a corpus generator, not a faithful reduction.
pub fn cnf_to_complete3sat(cnf: &GeneralCnf) -> Result<Instance, ReductionError> {
    if cnf.k != 3 {
        return Err(ReductionError::WrongArity {
            expected: 3,
            actual: cnf.k,
        });
    }
    let mut tables: BTreeMap<Vec<usize>, Vec<Vec<Label>>> = BTreeMap::new();
    for clause in &cnf.clauses {
        let (vars, tuple) = GeneralCnf::falsifying_tuple(clause);
        tables.entry(vars).or_default().push(tuple);
    }
    let mut inst = Instance::new(3, 2, cnf.n).expect("valid shape");
    for vars in k_subsets(&(0..cnf.n).collect::<Vec<_>>(), 3) {
        let tuples = tables
            .remove(&vars)
            .unwrap_or_else(|| vec![vec![0, 0, 0]]);
        inst.add_clause(&vars, tuples).expect("fresh clause");
    }
    Ok(inst)
}

/// The gadget families with randomized constructions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GadgetKind {
    /// Four colors, single-pair matchings; encodes a coloring edge.
    Pac41,
    /// Six colors, full matchings; encodes a coloring edge.
    SixPac,
    /// Ternary alphabet, arity 3; encodes a forbidden Boolean triple.
    Csp33,
}

impl GadgetKind {
    fn blocks(&self) -> usize {
        match self {
            GadgetKind::Pac41 | GadgetKind::SixPac => 2,
            GadgetKind::Csp33 => 3,
        }
    }

    fn alphabet(&self) -> usize {
        match self {
            GadgetKind::Pac41 => 4,
            GadgetKind::SixPac => 6,
            GadgetKind::Csp33 => 3,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PropertyCheck {
    pub name: &'static str,
    pub holds: bool,
    /// A satisfying assignment breaching the property, when one exists.
    pub counterexample: Option<Vec<Label>>,
}

#[derive(Clone, Debug)]
pub struct GadgetReport {
    pub properties: Vec<PropertyCheck>,
    pub satisfying_count: usize,
    pub verified: bool,
}

/// A sampled gadget with its blocks and exhaustively verified properties.
#[derive(Clone, Debug)]
pub struct Gadget {
    pub kind: GadgetKind,
    pub t: usize,
    pub blocks: Vec<Vec<usize>>,
    pub pac: Option<PacInstance>,
    pub csp: Option<Instance>,
    /// Forbidden dominant triple for the ternary gadget.
    pub forbidden: Option<Vec<Label>>,
    pub report: GadgetReport,
    pub tries: usize,
}

#[derive(Error, Debug)]
pub enum GadgetSearchError {
    #[error("no gadget passed verification within {tries} tries; the construction needs a larger block size than is exhaustively checkable")]
    NotFound { tries: usize, last: GadgetReport },
    #[error("verification space {space} exceeds the exhaustive cap 2^26")]
    TooLarge { space: u128 },
}

/// Samples gadgets from the randomized construction until one passes the
/// exhaustive property verification.
pub fn gadget_search(
    kind: GadgetKind,
    t: usize,
    seed: u64,
    max_tries: usize,
) -> Result<Gadget, GadgetSearchError> {
    let space = (kind.alphabet() as u128).pow((kind.blocks() * t) as u32);
    if space > 1 << 26 {
        return Err(GadgetSearchError::TooLarge { space });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut last: Option<GadgetReport> = None;
    for tries in 1..=max_tries.max(1) {
        let mut gadget = sample_gadget(kind, t, &mut rng);
        let report = verify_gadget(&gadget);
        let verified = report.verified;
        gadget.report = report;
        gadget.tries = tries;
        if verified {
            return Ok(gadget);
        }
        last = Some(gadget.report);
    }
    Err(GadgetSearchError::NotFound {
        tries: max_tries.max(1),
        last: last.expect("at least one try"),
    })
}

fn sample_gadget(kind: GadgetKind, t: usize, rng: &mut ChaCha8Rng) -> Gadget {
    let blocks: Vec<Vec<usize>> = (0..kind.blocks())
        .map(|b| (b * t..(b + 1) * t).collect())
        .collect();
    let mut gadget = Gadget {
        kind,
        t,
        blocks: blocks.clone(),
        pac: None,
        csp: None,
        forbidden: None,
        report: GadgetReport {
            properties: Vec::new(),
            satisfying_count: 0,
            verified: false,
        },
        tries: 0,
    };
    match kind {
        GadgetKind::Pac41 => {
            let mut pac = PacInstance::new(2 * t, 4, 1);
            for &u in &blocks[0] {
                for &v in &blocks[1] {
                    let p = rng.random_range(0..4) as Label;
                    pac.set_matching(u, v, vec![(p, p)]);
                }
            }
            for i in 0..t {
                for j in i + 1..t {
                    let pair = if rng.random_bool(0.5) {
                        let p = rng.random_range(0..3) as Label;
                        let q = loop {
                            let q = rng.random_range(0..3) as Label;
                            if q != p {
                                break q;
                            }
                        };
                        (p, q)
                    } else {
                        (3, 3)
                    };
                    pac.set_matching(blocks[0][i], blocks[0][j], vec![pair]);
                    pac.set_matching(blocks[1][i], blocks[1][j], vec![pair]);
                }
            }
            debug_assert!(crate::pac::validate_pac(&pac, PacMode::Complete).ok());
            gadget.pac = Some(pac);
        }
        GadgetKind::SixPac => {
            let mut pac = PacInstance::new(2 * t, 6, 6);
            let identity: Vec<(Label, Label)> = (0..6).map(|c| (c, c)).collect();
            for &u in &blocks[0] {
                for &v in &blocks[1] {
                    pac.set_matching(u, v, identity.clone());
                }
            }
            // the two derangements of (0,1,2)
            let derangements = [[1u8, 2, 0], [2u8, 0, 1]];
            for i in 0..t {
                for j in i + 1..t {
                    let d = derangements[rng.random_range(0..2)];
                    let pairs: Vec<(Label, Label)> = (0..3u8)
                        .map(|c| (c, d[c as usize]))
                        .chain((3..6).map(|c| (c, c)))
                        .collect();
                    pac.set_matching(blocks[0][i], blocks[0][j], pairs.clone());
                    pac.set_matching(blocks[1][i], blocks[1][j], pairs);
                }
            }
            debug_assert!(crate::pac::validate_pac(&pac, PacMode::Complete).ok());
            gadget.pac = Some(pac);
        }
        GadgetKind::Csp33 => {
            let sigma: Vec<Label> = (0..3).map(|_| rng.random_range(0..2) as Label).collect();
            let mut inst = Instance::new(3, 3, 3 * t).expect("valid shape");
            for &u in &blocks[0] {
                for &v in &blocks[1] {
                    for &w in &blocks[2] {
                        inst.add_clause(&[u, v, w], vec![sigma.clone()])
                            .expect("fresh cross clause");
                    }
                }
            }
            for i1 in 0..t {
                for i2 in i1 + 1..t {
                    for i3 in i2 + 1..t {
                        let tuple = if rng.random_bool(0.5) {
                            let p = rng.random_range(0..3);
                            let q = rng.random_range(0..2) as Label;
                            let mut tup = vec![1 - q; 3];
                            tup[p] = q;
                            tup
                        } else {
                            vec![2, 2, 2]
                        };
                        for block in &blocks {
                            inst.add_clause(
                                &[block[i1], block[i2], block[i3]],
                                vec![tuple.clone()],
                            )
                            .expect("fresh intra clause");
                        }
                    }
                }
            }
            gadget.forbidden = Some(sigma);
            gadget.csp = Some(inst);
        }
    }
    gadget
}

/// Exhaustively checks the gadget's numbered properties over every
/// assignment of its variables: no property relies on sampling.
pub fn verify_gadget(gadget: &Gadget) -> GadgetReport {
    let r = gadget.kind.alphabet();
    let var_count = gadget.kind.blocks() * gadget.t;
    let t = gadget.t as f64;
    let csp = gadget
        .csp
        .clone()
        .unwrap_or_else(|| crate::pac::pac_to_csp(gadget.pac.as_ref().expect("pac payload")));

    // per-block color counts of an assignment
    let counts = |assignment: &[Label]| -> Vec<Vec<usize>> {
        gadget
            .blocks
            .iter()
            .map(|block| {
                let mut c = vec![0usize; r];
                for &v in block {
                    c[assignment[v] as usize] += 1;
                }
                c
            })
            .collect()
    };
    let dummy_labels: std::ops::Range<usize> = match gadget.kind {
        GadgetKind::Pac41 => 3..4,
        GadgetKind::SixPac => 3..6,
        GadgetKind::Csp33 => 2..3,
    };
    let dominance = match gadget.kind {
        GadgetKind::Csp33 => 0.9,
        _ => 0.7,
    };

    let mut properties = vec![
        PropertyCheck {
            name: "dummy-labels-rare",
            holds: true,
            counterexample: None,
        },
        PropertyCheck {
            name: "single-heavy-label",
            holds: true,
            counterexample: None,
        },
        PropertyCheck {
            name: "dominant-combination-forbidden",
            holds: true,
            counterexample: None,
        },
    ];
    let mut satisfying_count = 0usize;

    let mut assignment = vec![0 as Label; var_count];
    'sweep: loop {
        if csp.satisfied_by(&assignment) {
            satisfying_count += 1;
            let per_block = counts(&assignment);
            // property 1: dummy labels must stay below the rarity threshold
            // (strictly: two appearances for the six-color construction)
            let p1 = per_block.iter().all(|c| {
                dummy_labels.clone().all(|l| match gadget.kind {
                    GadgetKind::SixPac => c[l] < 2,
                    _ => (c[l] as f64) < 0.1 * t,
                })
            });
            // property 2: no block carries two different heavy labels
            let p2 = per_block.iter().all(|c| {
                let heavy = c.iter().filter(|&&x| (x as f64) >= 0.1 * t).count();
                heavy <= 1
            });
            // property 3: dominant real labels must not form the forbidden
            // combination (equal colors, or the parameterizing triple)
            let dominant: Vec<Option<usize>> = per_block
                .iter()
                .map(|c| {
                    (0..dummy_labels.start)
                        .find(|&l| (c[l] as f64) >= dominance * t)
                })
                .collect();
            let p3 = if dominant.iter().any(|d| d.is_none()) {
                true
            } else {
                let labels: Vec<usize> = dominant.iter().map(|d| d.unwrap()).collect();
                match gadget.kind {
                    GadgetKind::Pac41 | GadgetKind::SixPac => labels[0] != labels[1],
                    GadgetKind::Csp33 => {
                        let forbidden = gadget.forbidden.as_ref().expect("sigma");
                        labels.iter().zip(forbidden).any(|(&l, &f)| l != f as usize)
                    }
                }
            };
            for (idx, ok) in [p1, p2, p3].into_iter().enumerate() {
                if !ok && properties[idx].holds {
                    properties[idx].holds = false;
                    properties[idx].counterexample = Some(assignment.clone());
                }
            }
        }
        // odometer
        let mut pos = var_count;
        loop {
            if pos == 0 {
                break 'sweep;
            }
            pos -= 1;
            if (assignment[pos] as usize) + 1 < r {
                assignment[pos] += 1;
                assignment[pos + 1..].iter_mut().for_each(|x| *x = 0);
                break;
            }
        }
    }

    let verified = properties.iter().all(|p| p.holds);
    GadgetReport {
        properties,
        satisfying_count,
        verified,
    }
}
