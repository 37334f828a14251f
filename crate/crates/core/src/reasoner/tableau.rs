//! Satisfiability for ALC with role inclusions.
//!
//! GCIs with a named left side are unfolded lazily; all others are
//! internalised and added to every node. Successors are explored depth-first
//! and a node whose initial label is contained in the label of an ancestor is
//! blocked.

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::syntax::{Axiom, Concept};

type Cid = u32;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Nnf {
    Top,
    Bottom,
    Atom(u32),
    NegAtom(u32),
    And(Cid, Cid),
    Or(Cid, Cid),
    Exists(u32, Cid),
    Forall(u32, Cid),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Unsat,
    /// Satisfiable; `dep` is the shallowest ancestor a blocked node relied on.
    Sat { dep: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeLimitExceeded;

pub(crate) struct Tableau {
    nodes: Vec<Nnf>,
    index: HashMap<Nnf, Cid>,
    atoms: HashMap<String, u32>,
    roles: HashMap<String, u32>,
    role_sups: Vec<Vec<u32>>,
    unfold: HashMap<u32, Vec<Cid>>,
    universal: Vec<Cid>,
    neg_cache: HashMap<Cid, Cid>,
    unsat_cache: HashSet<Vec<Cid>>,
    sat_cache: HashSet<Vec<Cid>>,
    node_limit: usize,
    query_nodes: usize,
    pub nodes_created: usize,
}

impl Tableau {
    pub fn new<'a>(axioms: impl IntoIterator<Item = &'a Axiom>, node_limit: usize) -> Self {
        let mut tab = Tableau {
            nodes: Vec::new(),
            index: HashMap::new(),
            atoms: HashMap::new(),
            roles: HashMap::new(),
            role_sups: Vec::new(),
            unfold: HashMap::new(),
            universal: Vec::new(),
            neg_cache: HashMap::new(),
            unsat_cache: HashSet::new(),
            sat_cache: HashSet::new(),
            node_limit,
            query_nodes: 0,
            nodes_created: 0,
        };
        let mut edges = Vec::new();
        for ax in axioms {
            match ax {
                Axiom::Gci { lhs: Concept::Atomic(a), rhs } => {
                    let atom = tab.atom(a);
                    let d = tab.nnf(rhs, false);
                    tab.unfold.entry(atom).or_default().push(d);
                }
                Axiom::Gci { lhs, rhs } => {
                    let nl = tab.nnf(lhs, true);
                    let r = tab.nnf(rhs, false);
                    let c = tab.intern(Nnf::Or(nl, r));
                    if !tab.universal.contains(&c) {
                        tab.universal.push(c);
                    }
                }
                Axiom::RoleInclusion { sub, sup } => {
                    let (a, b) = (tab.role(sub), tab.role(sup));
                    edges.push((a, b));
                }
            }
        }
        let n = tab.role_sups.len();
        for r in 0..n {
            let mut seen = vec![false; n];
            seen[r] = true;
            let mut stack = vec![r as u32];
            while let Some(x) = stack.pop() {
                for &(a, b) in &edges {
                    if a == x && !seen[b as usize] {
                        seen[b as usize] = true;
                        stack.push(b);
                    }
                }
            }
            tab.role_sups[r] = (0..n as u32).filter(|&s| seen[s as usize]).collect();
        }
        tab
    }

    fn intern(&mut self, n: Nnf) -> Cid {
        if let Some(&c) = self.index.get(&n) {
            return c;
        }
        let c = self.nodes.len() as Cid;
        self.nodes.push(n.clone());
        self.index.insert(n, c);
        c
    }

    fn atom(&mut self, a: &str) -> u32 {
        let next = self.atoms.len() as u32;
        *self.atoms.entry(a.to_string()).or_insert(next)
    }

    fn role(&mut self, r: &str) -> u32 {
        if let Some(&i) = self.roles.get(r) {
            return i;
        }
        let i = self.role_sups.len() as u32;
        self.roles.insert(r.to_string(), i);
        self.role_sups.push(vec![i]);
        i
    }

    fn nnf(&mut self, c: &Concept, negated: bool) -> Cid {
        let node = match (c, negated) {
            (Concept::Top, false) | (Concept::Bottom, true) => Nnf::Top,
            (Concept::Top, true) | (Concept::Bottom, false) => Nnf::Bottom,
            (Concept::Atomic(a), false) => Nnf::Atom(self.atom(a)),
            (Concept::Atomic(a), true) => Nnf::NegAtom(self.atom(a)),
            (Concept::Not(x), neg) => return self.nnf(x, !neg),
            (Concept::And(a, b), false) => Nnf::And(self.nnf(a, false), self.nnf(b, false)),
            (Concept::And(a, b), true) => Nnf::Or(self.nnf(a, true), self.nnf(b, true)),
            (Concept::Or(a, b), false) => Nnf::Or(self.nnf(a, false), self.nnf(b, false)),
            (Concept::Or(a, b), true) => Nnf::And(self.nnf(a, true), self.nnf(b, true)),
            (Concept::Exists(r, x), false) => Nnf::Exists(self.role(r), self.nnf(x, false)),
            (Concept::Exists(r, x), true) => Nnf::Forall(self.role(r), self.nnf(x, true)),
            (Concept::Forall(r, x), false) => Nnf::Forall(self.role(r), self.nnf(x, false)),
            (Concept::Forall(r, x), true) => Nnf::Exists(self.role(r), self.nnf(x, true)),
        };
        self.intern(node)
    }

    fn negate(&mut self, c: Cid) -> Cid {
        if let Some(&n) = self.neg_cache.get(&c) {
            return n;
        }
        let node = match self.nodes[c as usize].clone() {
            Nnf::Top => Nnf::Bottom,
            Nnf::Bottom => Nnf::Top,
            Nnf::Atom(a) => Nnf::NegAtom(a),
            Nnf::NegAtom(a) => Nnf::Atom(a),
            Nnf::And(a, b) => Nnf::Or(self.negate(a), self.negate(b)),
            Nnf::Or(a, b) => Nnf::And(self.negate(a), self.negate(b)),
            Nnf::Exists(r, x) => Nnf::Forall(r, self.negate(x)),
            Nnf::Forall(r, x) => Nnf::Exists(r, self.negate(x)),
        };
        let n = self.intern(node);
        self.neg_cache.insert(c, n);
        self.neg_cache.insert(n, c);
        n
    }

    /// Satisfiability of `c` with respect to the TBox.
    pub fn satisfiable(&mut self, c: &Concept) -> Result<bool, NodeLimitExceeded> {
        let root = self.nnf(c, false);
        let mut init = vec![root];
        init.extend(self.universal.iter().copied());
        let mut ancestors = Vec::new();
        self.query_nodes = 0;
        Ok(matches!(self.sat(init, &mut ancestors)?, Outcome::Sat { .. }))
    }

    fn sat(&mut self, init: Vec<Cid>, ancestors: &mut Vec<BTreeSet<Cid>>) -> Result<Outcome, NodeLimitExceeded> {
        let mut key = init;
        key.sort_unstable();
        key.dedup();
        if self.unsat_cache.contains(&key) {
            return Ok(Outcome::Unsat);
        }
        if self.sat_cache.contains(&key) {
            return Ok(Outcome::Sat { dep: usize::MAX });
        }
        for (i, label) in ancestors.iter().enumerate() {
            if key.iter().all(|c| label.contains(c)) {
                return Ok(Outcome::Sat { dep: i });
            }
        }
        self.nodes_created += 1;
        self.query_nodes += 1;
        if self.query_nodes > self.node_limit {
            return Err(NodeLimitExceeded);
        }
        let depth = ancestors.len();
        let out = self.expand(BTreeSet::new(), key.clone(), ancestors)?;
        match out {
            Outcome::Unsat => {
                self.unsat_cache.insert(key);
            }
            Outcome::Sat { dep } if dep >= depth => {
                self.sat_cache.insert(key);
            }
            Outcome::Sat { .. } => {}
        }
        Ok(out)
    }

    fn expand(
        &mut self,
        mut label: BTreeSet<Cid>,
        mut todo: Vec<Cid>,
        ancestors: &mut Vec<BTreeSet<Cid>>,
    ) -> Result<Outcome, NodeLimitExceeded> {
        while let Some(c) = todo.pop() {
            if !label.insert(c) {
                continue;
            }
            match self.nodes[c as usize] {
                Nnf::Bottom => return Ok(Outcome::Unsat),
                Nnf::Atom(a) => {
                    if self.index.get(&Nnf::NegAtom(a)).is_some_and(|n| label.contains(n)) {
                        return Ok(Outcome::Unsat);
                    }
                    if let Some(ds) = self.unfold.get(&a) {
                        todo.extend(ds.iter().copied());
                    }
                }
                Nnf::NegAtom(a) => {
                    if self.index.get(&Nnf::Atom(a)).is_some_and(|n| label.contains(n)) {
                        return Ok(Outcome::Unsat);
                    }
                }
                Nnf::And(x, y) => {
                    todo.push(y);
                    todo.push(x);
                }
                _ => {}
            }
        }
        let open_or = label.iter().copied().find_map(|c| match self.nodes[c as usize] {
            Nnf::Or(x, y) if !label.contains(&x) && !label.contains(&y) => Some((x, y)),
            _ => None,
        });
        if let Some((x, y)) = open_or {
            let left = self.expand(label.clone(), vec![x], ancestors)?;
            if let Outcome::Sat { .. } = left {
                return Ok(left);
            }
            let not_x = self.negate(x);
            return self.expand(label, vec![not_x, y], ancestors);
        }
        let mut successors = Vec::new();
        for &c in &label {
            if let Nnf::Exists(r, filler) = self.nodes[c as usize] {
                let mut child = vec![filler];
                for &d in &label {
                    if let Nnf::Forall(s, g) = self.nodes[d as usize] {
                        if self.role_sups[r as usize].contains(&s) {
                            child.push(g);
                        }
                    }
                }
                child.extend(self.universal.iter().copied());
                successors.push(child);
            }
        }
        ancestors.push(label);
        let mut dep = usize::MAX;
        for child in successors {
            match self.sat(child, ancestors) {
                Ok(Outcome::Unsat) => {
                    ancestors.pop();
                    return Ok(Outcome::Unsat);
                }
                Ok(Outcome::Sat { dep: d }) => dep = dep.min(d),
                Err(e) => {
                    ancestors.pop();
                    return Err(e);
                }
            }
        }
        ancestors.pop();
        Ok(Outcome::Sat { dep })
    }
}
