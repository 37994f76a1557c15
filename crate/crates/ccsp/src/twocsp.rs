//! 2-SAT machinery shared by the enumeration and rounding pipelines: a
//! relabeled Boolean view of binary instances whose variables carry at most
//! two labels, the literal implication graph, SCC-based decision, and
//! all-solutions enumeration for complete instances.

use thiserror::Error;

use crate::instance::{restrict, Instance, Label, LabelSet, PartialAssignment};
use crate::oracle::SolutionSet;

/// A literal: variable index with polarity, packed as `2*var + negated`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lit(pub u32);

impl Lit {
    pub fn positive(var: usize) -> Self {
        Lit((var as u32) << 1)
    }

    pub fn negative(var: usize) -> Self {
        Lit(((var as u32) << 1) | 1)
    }

    pub fn with_sign(var: usize, negated: bool) -> Self {
        Lit(((var as u32) << 1) | negated as u32)
    }

    pub fn var(self) -> usize {
        (self.0 >> 1) as usize
    }

    pub fn is_negated(self) -> bool {
        self.0 & 1 == 1
    }

    pub fn negate(self) -> Self {
        Lit(self.0 ^ 1)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl std::fmt::Debug for Lit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_negated() {
            write!(f, "!x{}", self.var())
        } else {
            write!(f, "x{}", self.var())
        }
    }
}

/// Directed graph on 2n literals; each clause (l ∨ l') contributes the two
/// implication edges (¬l → l') and (¬l' → l).
#[derive(Clone, Debug)]
pub struct ImplicationGraph {
    literal_count: usize,
    edges: Vec<(Lit, Lit)>,
    /// Clause id that created each edge; unary constraints have none.
    origins: Vec<Option<usize>>,
}

impl ImplicationGraph {
    pub fn new(var_count: usize) -> Self {
        ImplicationGraph {
            literal_count: 2 * var_count,
            edges: Vec::new(),
            origins: Vec::new(),
        }
    }

    pub fn literal_count(&self) -> usize {
        self.literal_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(Lit, Lit)] {
        &self.edges
    }

    pub fn origin(&self, edge: usize) -> Option<usize> {
        self.origins[edge]
    }

    fn push_edge(&mut self, from: Lit, to: Lit, origin: Option<usize>) {
        self.edges.push((from, to));
        self.origins.push(origin);
    }

    /// Adds both implication edges of the clause (a ∨ b).
    pub fn add_clause_edges(&mut self, a: Lit, b: Lit, origin: Option<usize>) {
        self.push_edge(a.negate(), b, origin);
        self.push_edge(b.negate(), a, origin);
    }

    /// Adds the forcing edge of the unary clause (a): ¬a → a.
    pub fn add_unit_edge(&mut self, a: Lit, origin: Option<usize>) {
        self.push_edge(a.negate(), a, origin);
    }

    /// Strongly connected components over the edges accepted by `alive`,
    /// numbered in reverse topological order (sinks first). Iterative
    /// Tarjan-style traversal; no recursion, so large literal counts are fine.
    pub fn components(&self, alive: impl Fn(usize) -> bool) -> Vec<usize> {
        let n = self.literal_count;
        let mut adj_heads = vec![Vec::new(); n];
        for (i, &(from, to)) in self.edges.iter().enumerate() {
            if alive(i) {
                adj_heads[from.index()].push(to.index());
            }
        }
        const UNSET: usize = usize::MAX;
        let mut index = vec![UNSET; n];
        let mut low = vec![0usize; n];
        let mut comp = vec![UNSET; n];
        let mut on_stack = vec![false; n];
        let mut stack: Vec<usize> = Vec::new();
        let mut next_index = 0;
        let mut comp_count = 0;
        // explicit DFS stack of (vertex, next edge position)
        let mut work: Vec<(usize, usize)> = Vec::new();
        for start in 0..n {
            if index[start] != UNSET {
                continue;
            }
            work.push((start, 0));
            while let Some(&mut (v, ref mut pos)) = work.last_mut() {
                if *pos == 0 {
                    index[v] = next_index;
                    low[v] = next_index;
                    next_index += 1;
                    stack.push(v);
                    on_stack[v] = true;
                }
                if let Some(&w) = adj_heads[v].get(*pos) {
                    *pos += 1;
                    if index[w] == UNSET {
                        work.push((w, 0));
                    } else if on_stack[w] {
                        low[v] = low[v].min(index[w]);
                    }
                } else {
                    if low[v] == index[v] {
                        loop {
                            let w = stack.pop().expect("tarjan stack");
                            on_stack[w] = false;
                            comp[w] = comp_count;
                            if w == v {
                                break;
                            }
                        }
                        comp_count += 1;
                    }
                    work.pop();
                    if let Some(&mut (parent, _)) = work.last_mut() {
                        low[parent] = low[parent].min(low[v]);
                    }
                }
            }
        }
        comp
    }

    /// The consistency property: no variable has both of its literals inside
    /// one strongly connected component.
    pub fn consistent(&self, alive: impl Fn(usize) -> bool) -> bool {
        let comp = self.components(alive);
        (0..self.literal_count / 2).all(|v| comp[2 * v] != comp[2 * v + 1])
    }
}

/// How one original variable shows up in the Boolean view.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum VarKind {
    /// Two allowed labels; false maps to the smaller, true to the larger.
    Bool { slot: usize, labels: [Label; 2] },
    /// Single allowed label.
    Forced(Label),
}

/// A binary clause or unit over Boolean view literals.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ViewClause {
    Unit(Lit),
    Bin(Lit, Lit),
}

#[derive(Error, Debug, PartialEq, Eq)]
pub enum TwoCspError {
    #[error("expected a binary instance, arity is {0}")]
    NotBinary(usize),
    #[error("variable {0} carries {1} labels; the Boolean view needs at most 2")]
    TooManyLabels(usize, usize),
}

/// Boolean 2-SAT view of a binary instance whose variables carry at most two
/// labels each. Constraints with an empty label set, or a pair of forced
/// values matching an UNSAT tuple, make the view immediately infeasible.
#[derive(Clone, Debug)]
pub struct TwoCspView {
    n: usize,
    kinds: Vec<VarKind>,
    /// Boolean slot -> original variable.
    slots: Vec<usize>,
    clauses: Vec<ViewClause>,
    infeasible: bool,
}

impl TwoCspView {
    /// Builds the view using the instance's own label sets.
    pub fn from_instance(inst: &Instance) -> Result<Self, TwoCspError> {
        Self::with_domains(inst, inst.label_sets())
    }

    /// Builds the view with externally narrowed label sets (branch ledgers).
    pub fn with_domains(inst: &Instance, domains: &[LabelSet]) -> Result<Self, TwoCspError> {
        if inst.k() != 2 {
            return Err(TwoCspError::NotBinary(inst.k()));
        }
        let mut infeasible = false;
        let mut kinds = Vec::with_capacity(inst.n());
        let mut slots = Vec::new();
        for var in 0..inst.n() {
            let labels: Vec<Label> = domains[var].iter().collect();
            match labels.len() {
                0 => {
                    // no allowed labels: record an arbitrary forced value and
                    // mark the view unsatisfiable
                    infeasible = true;
                    kinds.push(VarKind::Forced(0));
                }
                1 => kinds.push(VarKind::Forced(labels[0])),
                2 => {
                    kinds.push(VarKind::Bool {
                        slot: slots.len(),
                        labels: [labels[0], labels[1]],
                    });
                    slots.push(var);
                }
                m => return Err(TwoCspError::TooManyLabels(var, m)),
            }
        }

        let mut clauses = Vec::new();
        {
            // literal for "variable != label", when the variable is Boolean
            let lit_ne = |kind: &VarKind, label: Label| -> Option<Lit> {
                match kind {
                    VarKind::Bool { slot, labels } => {
                        if labels[0] == label {
                            Some(Lit::positive(*slot)) // true picks labels[1]
                        } else {
                            debug_assert_eq!(labels[1], label);
                            Some(Lit::negative(*slot))
                        }
                    }
                    VarKind::Forced(_) => None,
                }
            };
            let mut add_tuple = |vars: &[usize], tuple: &[Label]| {
                let mut lits = Vec::with_capacity(2);
                for (&v, &l) in vars.iter().zip(tuple) {
                    match kinds[v] {
                        VarKind::Forced(f) => {
                            if f != l {
                                return; // tuple can never match
                            }
                        }
                        ref kind @ VarKind::Bool { .. } => {
                            lits.push(lit_ne(kind, l).expect("boolean kind"));
                        }
                    }
                }
                match lits.as_slice() {
                    [] => infeasible = true, // all components forced to the tuple
                    [a] => clauses.push(ViewClause::Unit(*a)),
                    [a, b] => clauses.push(ViewClause::Bin(*a, *b)),
                    _ => unreachable!("binary constraint"),
                }
            };
            for (vars, table) in inst.clauses() {
                for tuple in table.restricted(vars, domains) {
                    add_tuple(vars, tuple);
                }
            }
            for s in inst.side_constraints() {
                for tuple in s.table.restricted(&s.vars, domains) {
                    add_tuple(&s.vars, tuple);
                }
            }
        }

        Ok(TwoCspView {
            n: inst.n(),
            kinds,
            slots,
            clauses,
            infeasible,
        })
    }

    pub fn bool_count(&self) -> usize {
        self.slots.len()
    }

    /// Original label of a variable under a Boolean witness over the view.
    fn label_of(&self, var: usize, booleans: &[bool]) -> Label {
        match self.kinds[var] {
            VarKind::Forced(l) => l,
            VarKind::Bool { slot, labels } => labels[booleans[slot] as usize],
        }
    }
}

/// Decision outcome with an optional full witness over the original labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decision {
    pub sat: bool,
    pub witness: Option<Vec<Label>>,
}

impl Decision {
    pub fn unsat() -> Self {
        Decision {
            sat: false,
            witness: None,
        }
    }
}

/// Builds the implication graph of the view: two edges per binary clause, one
/// forcing edge per unit.
pub fn build_implication_graph(view: &TwoCspView) -> ImplicationGraph {
    let mut graph = ImplicationGraph::new(view.bool_count());
    for (id, clause) in view.clauses.iter().enumerate() {
        match *clause {
            ViewClause::Bin(a, b) => graph.add_clause_edges(a, b, Some(id)),
            ViewClause::Unit(a) => graph.add_unit_edge(a, Some(id)),
        }
    }
    graph
}

/// Decides the view via the consistency property and extracts a witness from
/// the SCC condensation order: a literal is true iff its component precedes
/// its negation's (components are numbered sinks-first).
pub fn decide_2csp(view: &TwoCspView) -> Decision {
    if view.infeasible {
        return Decision::unsat();
    }
    let graph = build_implication_graph(view);
    let comp = graph.components(|_| true);
    let mut booleans = vec![false; view.bool_count()];
    for slot in 0..view.bool_count() {
        let pos = comp[Lit::positive(slot).index()];
        let neg = comp[Lit::negative(slot).index()];
        if pos == neg {
            return Decision::unsat();
        }
        booleans[slot] = pos < neg;
    }
    let witness: Vec<Label> = (0..view.n).map(|v| view.label_of(v, &booleans)).collect();
    Decision {
        sat: true,
        witness: Some(witness),
    }
}

/// Result of an all-solutions run, with the pruning-call counter used by the
/// polynomial-delay accounting.
#[derive(Clone, Debug)]
pub struct Enumeration {
    pub solutions: SolutionSet,
    pub decide_calls: usize,
}

/// Enumerates every satisfying assignment of a binary instance whose
/// variables carry at most two labels: backtracking on the first unfixed
/// variable, pruning each branch with an SCC feasibility decision on the
/// residual. On complete instances the solution count is at most n+1, so the
/// backtracking tree stays linear in n.
pub fn enumerate_complete_2csp(inst: &Instance) -> Result<Enumeration, TwoCspError> {
    if inst.k() != 2 {
        return Err(TwoCspError::NotBinary(inst.k()));
    }
    for var in 0..inst.n() {
        let len = inst.label_set(var).len();
        if len > 2 {
            return Err(TwoCspError::TooManyLabels(var, len));
        }
    }
    let mut found: Vec<Vec<Label>> = Vec::new();
    let mut decide_calls = 0usize;
    let mut pa = PartialAssignment::unfixed(inst.n());
    enumerate_rec(inst, &mut pa, &mut found, &mut decide_calls)?;
    Ok(Enumeration {
        solutions: SolutionSet::from_assignments(found),
        decide_calls,
    })
}

fn enumerate_rec(
    inst: &Instance,
    pa: &mut PartialAssignment,
    found: &mut Vec<Vec<Label>>,
    decide_calls: &mut usize,
) -> Result<(), TwoCspError> {
    let residual = match restrict(inst, pa) {
        Ok(r) => r,
        Err(_) => return Ok(()), // contradiction: dead branch
    };
    *decide_calls += 1;
    let view = TwoCspView::from_instance(&residual.instance)?;
    if !decide_2csp(&view).sat {
        return Ok(());
    }
    let next = (0..inst.n()).find(|&v| !pa.is_fixed(v));
    match next {
        None => {
            let full: Vec<Label> = (0..inst.n()).map(|v| pa.get(v).unwrap()).collect();
            debug_assert!(inst.satisfied_by(&full));
            found.push(full);
        }
        Some(var) => {
            for label in inst.label_set(var).iter() {
                pa.fix(var, label);
                enumerate_rec(inst, pa, found, decide_calls)?;
            }
            pa.unfix(var);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{all_positive_ksat, random_complete, Instance};
    use crate::oracle::enumerate_bruteforce;

    fn view(inst: &Instance) -> TwoCspView {
        TwoCspView::from_instance(inst).unwrap()
    }

    #[test]
    fn single_clause_creates_two_edges() {
        // (x or y): edges !x -> y and !y -> x
        let mut inst = Instance::new(2, 2, 2).unwrap();
        inst.add_clause(&[0, 1], vec![vec![0, 0]]).unwrap();
        let graph = build_implication_graph(&view(&inst));
        assert_eq!(graph.edge_count(), 2);
        let edges = graph.edges();
        assert!(edges.contains(&(Lit::negative(0), Lit::positive(1))));
        assert!(edges.contains(&(Lit::negative(1), Lit::positive(0))));
    }

    #[test]
    fn empty_constraint_set_gives_edgeless_graph() {
        let inst = Instance::new(2, 2, 3).unwrap();
        let graph = build_implication_graph(&view(&inst));
        assert_eq!(graph.literal_count(), 6);
        assert_eq!(graph.edge_count(), 0);
    }

    #[test]
    fn unsat_tuple_expands_by_de_morgan() {
        // forbidding (1,1) on (x,y) is the clause (!x or !y): edges x -> !y, y -> !x
        let mut inst = Instance::new(2, 2, 2).unwrap();
        inst.add_clause(&[0, 1], vec![vec![1, 1]]).unwrap();
        let graph = build_implication_graph(&view(&inst));
        let edges = graph.edges();
        assert!(edges.contains(&(Lit::positive(0), Lit::negative(1))));
        assert!(edges.contains(&(Lit::positive(1), Lit::negative(0))));
    }

    #[test]
    fn decide_all_positive_gives_all_true_witness() {
        let inst = all_positive_ksat(2, 4);
        let d = decide_2csp(&view(&inst));
        assert!(d.sat);
        assert_eq!(d.witness.unwrap(), vec![1, 1, 1, 1]);
    }

    #[test]
    fn decide_detects_four_tuple_contradiction() {
        let mut inst = Instance::new(2, 2, 2).unwrap();
        inst.add_clause(
            &[0, 1],
            vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]],
        )
        .unwrap();
        assert!(!decide_2csp(&view(&inst)).sat);
    }

    #[test]
    fn odd_parity_cycle_is_unsat() {
        // equality chain 0=1, 1=2, plus inequality 2 != 0
        let mut inst = Instance::new(2, 2, 3).unwrap();
        inst.add_clause(&[0, 1], vec![vec![0, 1], vec![1, 0]]).unwrap();
        inst.add_clause(&[1, 2], vec![vec![0, 1], vec![1, 0]]).unwrap();
        inst.add_clause(&[0, 2], vec![vec![0, 0], vec![1, 1]]).unwrap();
        assert!(!decide_2csp(&view(&inst)).sat);
        let sols = enumerate_bruteforce(&inst).unwrap();
        assert!(sols.is_empty());
    }

    #[test]
    fn forced_variables_flow_into_witness() {
        let mut inst = Instance::new(2, 2, 3).unwrap();
        inst.add_clause(&[0, 1], vec![vec![0, 0]]).unwrap();
        inst.add_clause(&[0, 2], vec![vec![0, 0]]).unwrap();
        inst.add_clause(&[1, 2], vec![vec![0, 0]]).unwrap();
        inst.set_label_set(0, LabelSet::singleton(0));
        let d = decide_2csp(&view(&inst));
        assert!(d.sat);
        let w = d.witness.unwrap();
        assert_eq!(w[0], 0);
        assert_eq!(&w[1..], &[1, 1]);
    }

    #[test]
    fn decide_agrees_with_oracle_on_random_views() {
        for seed in 0..500 {
            let n = 3 + (seed as usize % 8);
            let inst = random_complete(2, 2, n, 3, seed);
            let d = decide_2csp(&view(&inst));
            let sols = enumerate_bruteforce(&inst).unwrap();
            assert_eq!(d.sat, !sols.is_empty(), "seed {seed}");
            if let Some(w) = d.witness {
                assert!(inst.satisfied_by(&w), "seed {seed}");
            }
        }
    }

    #[test]
    fn decide_handles_two_label_non_boolean_alphabets() {
        // labels {0,2} on one side, {1,2} on the other
        let mut inst = Instance::new(2, 3, 2).unwrap();
        inst.add_clause(&[0, 1], vec![vec![0, 1], vec![2, 2]]).unwrap();
        inst.set_label_set(0, [0u8, 2].into_iter().collect());
        inst.set_label_set(1, [1u8, 2].into_iter().collect());
        let d = decide_2csp(&view(&inst));
        assert!(d.sat);
        let w = d.witness.unwrap();
        assert!(inst.satisfied_by(&w));
    }

    #[test]
    fn enumerate_all_positive_n4() {
        let inst = all_positive_ksat(2, 4);
        let e = enumerate_complete_2csp(&inst).unwrap();
        assert_eq!(
            e.solutions.lines(),
            vec!["0111", "1011", "1101", "1110", "1111"]
        );
    }

    #[test]
    fn enumerate_pairwise_unequal() {
        // every pair forbids (0,0) and (1,1): proper 2-coloring of a clique
        let build = |n: usize| {
            let mut inst = Instance::new(2, 2, n).unwrap();
            for vars in crate::util::k_subsets(&(0..n).collect::<Vec<_>>(), 2) {
                inst.add_clause(&vars, vec![vec![0, 0], vec![1, 1]]).unwrap();
            }
            inst
        };
        let two = enumerate_complete_2csp(&build(2)).unwrap();
        assert_eq!(two.solutions.lines(), vec!["01", "10"]);
        let three = enumerate_complete_2csp(&build(3)).unwrap();
        assert!(three.solutions.is_empty());
    }

    #[test]
    fn enumerate_forbid_one_one_meets_count_bound() {
        for n in 2..=8usize {
            let mut inst = Instance::new(2, 2, n).unwrap();
            for vars in crate::util::k_subsets(&(0..n).collect::<Vec<_>>(), 2) {
                inst.add_clause(&vars, vec![vec![1, 1]]).unwrap();
            }
            let e = enumerate_complete_2csp(&inst).unwrap();
            let oracle = enumerate_bruteforce(&inst).unwrap();
            assert_eq!(e.solutions, oracle);
            assert_eq!(e.solutions.len(), n + 1);
        }
    }

    #[test]
    fn enumerate_matches_oracle_on_random_complete_instances() {
        for seed in 0..200 {
            let n = 3 + (seed as usize % 8);
            let inst = random_complete(2, 2, n, 3, seed);
            let e = enumerate_complete_2csp(&inst).unwrap();
            let oracle = enumerate_bruteforce(&inst).unwrap();
            assert_eq!(e.solutions, oracle, "seed {seed}");
        }
    }

    #[test]
    fn enumeration_makes_linearly_many_pruning_calls() {
        for seed in 0..50 {
            let n = 4 + (seed as usize % 7);
            let inst = random_complete(2, 2, n, 2, seed);
            let e = enumerate_complete_2csp(&inst).unwrap();
            let t = e.solutions.len();
            // each solution contributes a root-to-leaf path of <= n live nodes,
            // each with <= 2 children; the unsat root costs one call
            let cap = 2 * n * (t + 1) + 1;
            assert!(
                e.decide_calls <= cap,
                "seed {seed}: {} calls > cap {cap}",
                e.decide_calls
            );
        }
    }

    #[test]
    fn complete_instances_respect_solution_count_bound() {
        for seed in 200..400 {
            let n = 3 + (seed as usize % 8);
            let inst = random_complete(2, 2, n, 3, seed);
            let e = enumerate_complete_2csp(&inst).unwrap();
            assert!(e.solutions.len() <= n + 1, "seed {seed}");
        }
    }
}
