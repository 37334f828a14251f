//! Completion-rule saturation for EL TBoxes with role inclusions.

use std::collections::{HashMap, HashSet, VecDeque};

use crate::syntax::{Axiom, Concept, RESERVED_PREFIX};

pub(crate) const TOP: u32 = 0;

#[derive(Default)]
struct Rules {
    /// A ⊑ B, indexed by A
    sub: HashMap<u32, Vec<u32>>,
    /// A1 ⊓ A2 ⊑ B, indexed by both operands
    conj: HashMap<u32, Vec<(u32, u32)>>,
    /// A ⊑ ∃r.B, indexed by A
    ex_right: HashMap<u32, Vec<(u32, u32)>>,
    /// ∃r.A ⊑ B, indexed by (r, A)
    ex_left: HashMap<(u32, u32), Vec<u32>>,
}

/// Normalised EL TBox together with its saturation.
pub(crate) struct ElSaturation {
    names: HashMap<String, u32>,
    name_list: Vec<String>,
    roles: HashMap<String, u32>,
    role_sups: Vec<Vec<u32>>,
    axioms: Vec<(Concept, Concept)>,
    definitions: HashMap<Concept, u32>,
    /// names below this index survive re-normalisation
    persistent: usize,
    fresh: u32,
    subsumers: Vec<HashSet<u32>>,
    dirty: bool,
}

impl ElSaturation {
    pub fn new<'a>(axioms: impl IntoIterator<Item = &'a Axiom>) -> Self {
        let mut gcis = Vec::new();
        let mut ris = Vec::new();
        for ax in axioms {
            match ax {
                Axiom::Gci { lhs, rhs } => gcis.push((lhs.clone(), rhs.clone())),
                Axiom::RoleInclusion { sub, sup } => ris.push((sub.clone(), sup.clone())),
            }
        }
        let mut sat = ElSaturation {
            names: HashMap::from([("top".to_string(), TOP)]),
            name_list: vec!["top".to_string()],
            roles: HashMap::new(),
            role_sups: Vec::new(),
            axioms: gcis,
            definitions: HashMap::new(),
            persistent: 1,
            fresh: 0,
            subsumers: Vec::new(),
            dirty: true,
        };
        for (lhs, rhs) in sat.axioms.clone() {
            let mut concepts = std::collections::BTreeSet::new();
            let mut roles = std::collections::BTreeSet::new();
            lhs.collect_names(&mut concepts, &mut roles);
            rhs.collect_names(&mut concepts, &mut roles);
            for c in concepts {
                sat.persist_name(&c);
            }
            for r in roles {
                sat.role(&r);
            }
        }
        let mut edges: Vec<(u32, u32)> = Vec::new();
        for (a, b) in &ris {
            let (a, b) = (sat.role(a), sat.role(b));
            edges.push((a, b));
        }
        let n = sat.role_sups.len();
        for r in 0..n {
            let mut seen = vec![false; n];
            let mut stack = vec![r as u32];
            seen[r] = true;
            while let Some(x) = stack.pop() {
                for &(a, b) in &edges {
                    if a == x && !seen[b as usize] {
                        seen[b as usize] = true;
                        stack.push(b);
                    }
                }
            }
            sat.role_sups[r] = (0..n as u32).filter(|&s| seen[s as usize]).collect();
        }
        sat
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

    fn name(&mut self, n: &str) -> u32 {
        if let Some(&i) = self.names.get(n) {
            return i;
        }
        let i = self.name_list.len() as u32;
        self.names.insert(n.to_string(), i);
        self.name_list.push(n.to_string());
        i
    }

    fn forget_scratch_names(&mut self) {
        for n in self.name_list.drain(self.persistent..) {
            self.names.remove(&n);
        }
        self.fresh = 0;
    }

    fn persist_name(&mut self, n: &str) -> u32 {
        if let Some(&i) = self.names.get(n) {
            if (i as usize) < self.persistent {
                return i;
            }
        }
        self.forget_scratch_names();
        self.dirty = true;
        let i = self.name(n);
        self.persistent = self.name_list.len();
        i
    }

    fn fresh_name(&mut self) -> u32 {
        self.fresh += 1;
        let n = format!("{RESERVED_PREFIX}{}", self.fresh);
        self.name(&n)
    }

    /// Makes `c` answerable: basic concepts map to their name, complex ones
    /// receive a fresh name defined as equivalent to them.
    fn handle(&mut self, c: &Concept) -> u32 {
        match c {
            Concept::Top => TOP,
            Concept::Atomic(n) => self.persist_name(n),
            other => {
                if let Some(&x) = self.definitions.get(other) {
                    return x;
                }
                let x = self.persist_name(&format!("{RESERVED_PREFIX}d{}", self.definitions.len()));
                self.definitions.insert(other.clone(), x);
                x
            }
        }
    }

    /// Registers several concepts at once so one saturation answers all of them.
    pub fn prepare<'a>(&mut self, concepts: impl IntoIterator<Item = &'a Concept>) {
        for c in concepts {
            self.handle(c);
        }
    }

    pub fn subsumes(&mut self, lhs: &Concept, rhs: &Concept) -> bool {
        let a = self.handle(lhs);
        let b = self.handle(rhs);
        self.saturate();
        b == TOP || self.subsumers[a as usize].contains(&b)
    }

    /// Named subsumers of each user name, including `top`.
    pub fn taxonomy(&mut self) -> Vec<(String, Vec<String>)> {
        self.saturate();
        let mut out = Vec::new();
        for (i, n) in self.name_list.iter().enumerate() {
            if i as u32 == TOP || n.starts_with(RESERVED_PREFIX) {
                continue;
            }
            let mut sups: Vec<String> = self.subsumers[i]
                .iter()
                .map(|&j| self.name_list[j as usize].clone())
                .filter(|s| !s.starts_with(RESERVED_PREFIX))
                .collect();
            sups.sort();
            out.push((n.clone(), sups));
        }
        out.sort();
        out
    }

    fn saturate(&mut self) {
        if !self.dirty {
            return;
        }
        let mut rules = Rules::default();
        let mut pending: Vec<(Concept, Concept)> = self.axioms.clone();
        let defs: Vec<(Concept, u32)> = self.definitions.iter().map(|(c, &x)| (c.clone(), x)).collect();
        for (c, x) in defs {
            let xn = Concept::Atomic(self.name_list[x as usize].clone());
            pending.push((xn.clone(), c.clone()));
            pending.push((c, xn));
        }
        self.forget_scratch_names();
        while let Some((lhs, rhs)) = pending.pop() {
            self.normalise(lhs, rhs, &mut rules, &mut pending);
        }
        self.run(&rules);
        self.dirty = false;
    }

    fn basic(&mut self, c: &Concept) -> Option<u32> {
        match c {
            Concept::Top => Some(TOP),
            Concept::Atomic(n) => Some(self.name(n)),
            _ => None,
        }
    }

    fn normalise(&mut self, lhs: Concept, rhs: Concept, rules: &mut Rules, pending: &mut Vec<(Concept, Concept)>) {
        let fresh_atom = |s: &mut Self| {
            let x = s.fresh_name();
            Concept::Atomic(s.name_list[x as usize].clone())
        };
        // right-hand decomposition
        match rhs {
            Concept::Top => return,
            Concept::And(a, b) => {
                pending.push((lhs.clone(), *a));
                pending.push((lhs, *b));
                return;
            }
            Concept::Exists(ref r, ref f) if self.basic(&lhs).is_some() => {
                let a = self.basic(&lhs).unwrap();
                let role = self.role(r);
                let b = match self.basic(f) {
                    Some(b) => b,
                    None => {
                        let x = fresh_atom(self);
                        pending.push((x.clone(), (**f).clone()));
                        self.basic(&x).unwrap()
                    }
                };
                rules.ex_right.entry(a).or_default().push((role, b));
                return;
            }
            Concept::Exists(..) => {
                let x = fresh_atom(self);
                pending.push((lhs, x.clone()));
                pending.push((x, rhs));
                return;
            }
            Concept::Atomic(_) => {}
            _ => unreachable!("non-EL concept reached EL normalisation"),
        }
        let b = self.basic(&rhs).unwrap();
        match lhs {
            Concept::Top | Concept::Atomic(_) => {
                let a = self.basic(&lhs).unwrap();
                rules.sub.entry(a).or_default().push(b);
            }
            Concept::And(x, y) => {
                let p = self.basic(&x).unwrap_or_else(|| {
                    let f = fresh_atom(self);
                    pending.push((*x.clone(), f.clone()));
                    self.basic(&f).unwrap()
                });
                let q = self.basic(&y).unwrap_or_else(|| {
                    let f = fresh_atom(self);
                    pending.push((*y.clone(), f.clone()));
                    self.basic(&f).unwrap()
                });
                rules.conj.entry(p).or_default().push((q, b));
                rules.conj.entry(q).or_default().push((p, b));
            }
            Concept::Exists(r, f) => {
                let role = self.role(&r);
                let a = self.basic(&f).unwrap_or_else(|| {
                    let x = fresh_atom(self);
                    pending.push((*f.clone(), x.clone()));
                    self.basic(&x).unwrap()
                });
                rules.ex_left.entry((role, a)).or_default().push(b);
            }
            _ => unreachable!("non-EL concept reached EL normalisation"),
        }
    }

    fn run(&mut self, rules: &Rules) {
        let n = self.name_list.len();
        let mut subsumers: Vec<HashSet<u32>> = vec![HashSet::new(); n];
        // predecessors[y] = (x, r) with (x, y) in R(r)
        let mut preds: Vec<Vec<(u32, u32)>> = vec![Vec::new(); n];
        let mut links: HashSet<(u32, u32, u32)> = HashSet::new();
        let mut queue: VecDeque<(u32, u32)> = VecDeque::new();
        for x in 0..n as u32 {
            queue.push_back((x, x));
            queue.push_back((x, TOP));
        }
        while let Some((x, a)) = queue.pop_front() {
            if !subsumers[x as usize].insert(a) {
                continue;
            }
            if let Some(bs) = rules.sub.get(&a) {
                for &b in bs {
                    queue.push_back((x, b));
                }
            }
            if let Some(cs) = rules.conj.get(&a) {
                for &(other, b) in cs {
                    if subsumers[x as usize].contains(&other) {
                        queue.push_back((x, b));
                    }
                }
            }
            for &(z, r) in &preds[x as usize] {
                if let Some(bs) = rules.ex_left.get(&(r, a)) {
                    for &b in bs {
                        queue.push_back((z, b));
                    }
                }
            }
            if let Some(es) = rules.ex_right.get(&a) {
                for &(r, y) in es {
                    for &s in &self.role_sups[r as usize] {
                        if links.insert((x, s, y)) {
                            preds[y as usize].push((x, s));
                            for &c in &subsumers[y as usize] {
                                if let Some(bs) = rules.ex_left.get(&(s, c)) {
                                    for &b in bs {
                                        queue.push_back((x, b));
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        self.subsumers = subsumers;
    }
}
