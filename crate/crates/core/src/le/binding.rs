//! Atom binding search.
//!
//! The original search walks every maximal injective matching between the
//! two atom sets, trying reference candidates in ascending edit-distance
//! order. The optimized search only permutes within connected components of
//! the similarity candidate graph.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::truth_table::{Prop, TruthTable};
use super::{LeError, Limits};
use crate::similarity::{levenshtein, SimilarityBackend};
use crate::syntax::{AtomicUnit, FolExpr};

/// Injective mapping from prediction atoms to reference atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BindingMap {
    pub pairs: Vec<(AtomicUnit, AtomicUnit)>,
    pub unbound_pred: Vec<AtomicUnit>,
    pub unbound_ref: Vec<AtomicUnit>,
}

impl BindingMap {
    /// Builds a binding from `(pred_index, ref_index)` pairs, checking
    /// injectivity and index ranges.
    pub fn from_pairs(pred: &[AtomicUnit], reference: &[AtomicUnit], pairs: &[(usize, usize)]) -> Result<Self, LeError> {
        let mut assign = vec![None; pred.len()];
        let mut used = vec![false; reference.len()];
        for &(p, r) in pairs {
            if p >= pred.len() || r >= reference.len() {
                return Err(LeError::InvalidBinding(format!("pair ({p}, {r}) out of range")));
            }
            if assign[p].is_some() {
                return Err(LeError::InvalidBinding(format!("prediction atom {p} bound twice")));
            }
            if used[r] {
                return Err(LeError::InvalidBinding(format!("reference atom {r} bound twice")));
            }
            assign[p] = Some(r);
            used[r] = true;
        }
        Ok(Self::from_assignment(pred, reference, &assign))
    }

    /// Binds atoms with identical canonical text.
    pub fn identity(pred: &[AtomicUnit], reference: &[AtomicUnit]) -> Self {
        let assign: Vec<Option<usize>> = pred.iter().map(|p| reference.iter().position(|r| r == p)).collect();
        Self::from_assignment(pred, reference, &assign)
    }

    pub fn empty(pred: &[AtomicUnit], reference: &[AtomicUnit]) -> Self {
        Self::from_assignment(pred, reference, &vec![None; pred.len()])
    }

    pub(crate) fn from_assignment(pred: &[AtomicUnit], reference: &[AtomicUnit], assign: &[Option<usize>]) -> Self {
        let mut used = vec![false; reference.len()];
        let mut pairs = Vec::new();
        let mut unbound_pred = Vec::new();
        for (p, a) in pred.iter().zip(assign) {
            match a {
                Some(r) => {
                    used[*r] = true;
                    pairs.push((p.clone(), reference[*r].clone()));
                }
                None => unbound_pred.push(p.clone()),
            }
        }
        let unbound_ref = reference.iter().zip(&used).filter(|(_, u)| !**u).map(|(r, _)| r.clone()).collect();
        BindingMap { pairs, unbound_pred, unbound_ref }
    }

    /// Prediction-index to reference-index assignment.
    pub(crate) fn assignment(&self, pred: &[AtomicUnit], reference: &[AtomicUnit]) -> Result<Vec<Option<usize>>, LeError> {
        let mut assign = vec![None; pred.len()];
        let mut used = vec![false; reference.len()];
        for (p, r) in &self.pairs {
            let pi = pred
                .iter()
                .position(|a| a == p)
                .ok_or_else(|| LeError::InvalidBinding(format!("{} is not a prediction atom", p.canonical_text)))?;
            let ri = reference
                .iter()
                .position(|a| a == r)
                .ok_or_else(|| LeError::InvalidBinding(format!("{} is not a reference atom", r.canonical_text)))?;
            if assign[pi].is_some() || used[ri] {
                return Err(LeError::InvalidBinding("binding is not injective".into()));
            }
            assign[pi] = Some(ri);
            used[ri] = true;
        }
        Ok(assign)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Result of one binding search over a single prediction tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BindingOutcome {
    pub binding: BindingMap,
    pub score: f64,
    /// Truth-table size under the chosen binding.
    pub atom_count: usize,
    pub bindings_explored: u64,
    pub assignments_evaluated: u64,
    pub truncated: bool,
}

/// Scores assignments of one (prediction, reference) pair.
pub(crate) struct Scorer {
    pub(crate) pred_atoms: Vec<AtomicUnit>,
    pub(crate) ref_atoms: Vec<AtomicUnit>,
    pred: Prop,
    reference: Prop,
    max_atoms: usize,
    tables: HashMap<usize, TruthTable>,
    pub(crate) assignments_evaluated: u64,
}

impl Scorer {
    pub(crate) fn new(pred: &FolExpr, reference: &FolExpr, max_atoms: usize) -> Self {
        let pred_atoms = pred.atoms();
        let ref_atoms = reference.atoms();
        Scorer {
            pred: Prop::compile(pred, &pred_atoms),
            reference: Prop::compile(reference, &ref_atoms),
            pred_atoms,
            ref_atoms,
            max_atoms,
            tables: HashMap::new(),
            assignments_evaluated: 0,
        }
    }

    /// Number of propositional variables an assignment produces.
    pub(crate) fn atom_count(&self, assign: &[Option<usize>]) -> usize {
        self.ref_atoms.len() + assign.iter().filter(|a| a.is_none()).count()
    }

    /// Fraction of rows on which both skeletons agree. Unbound prediction
    /// atoms become fresh variables after the reference ones.
    pub(crate) fn score(&mut self, assign: &[Option<usize>]) -> Result<f64, LeError> {
        let nvars = self.atom_count(assign);
        if nvars > self.max_atoms {
            return Err(LeError::AtomCapExceeded { atoms: nvars, cap: self.max_atoms });
        }
        let mut fresh = self.ref_atoms.len();
        let pred_vars: Vec<usize> = assign
            .iter()
            .map(|a| {
                a.unwrap_or_else(|| {
                    fresh += 1;
                    fresh - 1
                })
            })
            .collect();
        let ref_vars: Vec<usize> = (0..self.ref_atoms.len()).collect();
        let table = self.tables.entry(nvars).or_insert_with(|| TruthTable::new(nvars));
        let agree = table.agreements(&self.pred, &pred_vars, &self.reference, &ref_vars);
        self.assignments_evaluated += table.rows();
        Ok(agree as f64 / table.rows() as f64)
    }
}

/// Running best with the tie-break rule: higher score, then smaller summed
/// edit distance, then earliest enumerated.
struct Best {
    assign: Vec<Option<usize>>,
    score: f64,
    /// Filled in only once a tie needs it.
    distance: Option<usize>,
}

impl Best {
    fn offer(
        slot: &mut Option<Best>,
        assign: &[Option<usize>],
        score: f64,
        mut distance: impl FnMut(&[Option<usize>]) -> usize,
    ) {
        let better = match slot {
            None => true,
            Some(b) if score > b.score => true,
            Some(b) if score == b.score => {
                let held = *b.distance.get_or_insert_with(|| distance(&b.assign));
                distance(assign) < held
            }
            Some(_) => false,
        };
        if better {
            *slot = Some(Best { assign: assign.to_vec(), score, distance: None });
        }
    }
}

/// Edit distances between atom texts, computed on first use.
struct LazyDistances<'a> {
    pred: &'a [AtomicUnit],
    reference: &'a [AtomicUnit],
    cache: Vec<Option<usize>>,
}

impl<'a> LazyDistances<'a> {
    fn new(pred: &'a [AtomicUnit], reference: &'a [AtomicUnit]) -> Self {
        LazyDistances { pred, reference, cache: vec![None; pred.len() * reference.len()] }
    }

    fn get(&mut self, p: usize, r: usize) -> usize {
        let k = p * self.reference.len() + r;
        *self.cache[k].get_or_insert_with(|| levenshtein(&self.pred[p].canonical_text, &self.reference[r].canonical_text))
    }

    fn summed(&mut self, assign: &[Option<usize>]) -> usize {
        assign.iter().enumerate().filter_map(|(p, a)| a.map(|r| self.get(p, r))).sum()
    }
}

fn distances(pred: &[AtomicUnit], reference: &[AtomicUnit]) -> Vec<Vec<usize>> {
    pred.iter()
        .map(|p| reference.iter().map(|r| levenshtein(&p.canonical_text, &r.canonical_text)).collect())
        .collect()
}

fn summed_distance(dist: &[Vec<usize>], assign: &[Option<usize>]) -> usize {
    assign.iter().enumerate().filter_map(|(p, a)| a.map(|r| dist[p][r])).sum()
}

/// Exhaustive search over maximal injective matchings (n! for equal sizes).
pub fn bind_original(pred: &FolExpr, reference: &FolExpr, limits: &Limits) -> Result<BindingOutcome, LeError> {
    let mut scorer = Scorer::new(pred, reference, limits.max_atoms);
    bind_original_with(&mut scorer, limits)
}

pub(crate) fn bind_original_with(scorer: &mut Scorer, limits: &Limits) -> Result<BindingOutcome, LeError> {
    let (np, nr) = (scorer.pred_atoms.len(), scorer.ref_atoms.len());
    if np > limits.max_factorial_atoms || nr > limits.max_factorial_atoms {
        return Err(LeError::FactorialCapExceeded { pred: np, reference: nr, cap: limits.max_factorial_atoms });
    }
    let dist = distances(&scorer.pred_atoms, &scorer.ref_atoms);

    // Walk the smaller side, choosing partners from the larger side in
    // ascending edit distance.
    let pred_major = np <= nr;
    let (n_walk, n_pick) = if pred_major { (np, nr) } else { (nr, np) };
    let order: Vec<Vec<usize>> = (0..n_walk)
        .map(|w| {
            let mut cands: Vec<usize> = (0..n_pick).collect();
            cands.sort_by_key(|&c| if pred_major { dist[w][c] } else { dist[c][w] });
            cands
        })
        .collect();

    let mut best: Option<Best> = None;
    let mut explored = 0u64;
    let mut picked = vec![usize::MAX; n_walk];
    let mut used = vec![false; n_pick];
    let mut failure = None;

    fn walk(
        w: usize,
        order: &[Vec<usize>],
        picked: &mut [usize],
        used: &mut [bool],
        visit: &mut dyn FnMut(&[usize]) -> bool,
    ) -> bool {
        if w == order.len() {
            return visit(picked);
        }
        for &c in &order[w] {
            if used[c] {
                continue;
            }
            used[c] = true;
            picked[w] = c;
            let keep_going = walk(w + 1, order, picked, used, visit);
            used[c] = false;
            if !keep_going {
                return false;
            }
        }
        true
    }

    let mut visit = |picked: &[usize]| -> bool {
        let mut assign = vec![None; np];
        if pred_major {
            for (p, &r) in picked.iter().enumerate() {
                assign[p] = Some(r);
            }
        } else {
            for (r, &p) in picked.iter().enumerate() {
                assign[p] = Some(r);
            }
        }
        explored += 1;
        match scorer.score(&assign) {
            Ok(s) => {
                Best::offer(&mut best, &assign, s, |a| summed_distance(&dist, a));
                true
            }
            Err(e) => {
                failure = Some(e);
                false
            }
        }
    };
    walk(0, &order, &mut picked, &mut used, &mut visit);
    if let Some(e) = failure {
        return Err(e);
    }

    let best = best.expect("at least one matching");
    Ok(BindingOutcome {
        binding: BindingMap::from_assignment(&scorer.pred_atoms, &scorer.ref_atoms, &best.assign),
        score: best.score,
        atom_count: scorer.atom_count(&best.assign),
        bindings_explored: explored,
        assignments_evaluated: scorer.assignments_evaluated,
        truncated: false,
    })
}

/// Similarity edges between prediction and reference atoms, with connected
/// components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateGraph {
    /// `(pred_index, ref_index, similarity)`, every similarity `>=` threshold.
    pub edges: Vec<(usize, usize, f64)>,
    /// Each component as (prediction indices, reference indices); only
    /// components with at least one edge are listed.
    pub components: Vec<(Vec<usize>, Vec<usize>)>,
}

impl CandidateGraph {
    pub fn build(
        pred: &[AtomicUnit],
        reference: &[AtomicUnit],
        backend: &dyn SimilarityBackend,
        threshold: f64,
    ) -> Self {
        let (np, nr) = (pred.len(), reference.len());
        let left: Vec<&str> = pred.iter().map(|a| a.canonical_text.as_str()).collect();
        let right: Vec<&str> = reference.iter().map(|a| a.canonical_text.as_str()).collect();
        let sims = backend.similarity_matrix(&left, &right);
        let mut edges = Vec::new();
        for (i, row) in sims.iter().enumerate() {
            for (j, &s) in row.iter().enumerate() {
                if s >= threshold {
                    edges.push((i, j, s));
                }
            }
        }
        // union-find over pred nodes 0..np and ref nodes np..np+nr
        let mut parent: Vec<usize> = (0..np + nr).collect();
        fn find(parent: &mut [usize], x: usize) -> usize {
            let mut root = x;
            while parent[root] != root {
                root = parent[root];
            }
            let mut cur = x;
            while parent[cur] != root {
                let next = parent[cur];
                parent[cur] = root;
                cur = next;
            }
            root
        }
        for &(i, j, _) in &edges {
            let (a, b) = (find(&mut parent, i), find(&mut parent, np + j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut by_root: Vec<(usize, Vec<usize>, Vec<usize>)> = Vec::new();
        for &(i, j, _) in &edges {
            let root = find(&mut parent, i);
            let slot = match by_root.iter().position(|(r, ..)| *r == root) {
                Some(k) => k,
                None => {
                    by_root.push((root, Vec::new(), Vec::new()));
                    by_root.len() - 1
                }
            };
            let (_, ps, rs) = &mut by_root[slot];
            if !ps.contains(&i) {
                ps.push(i);
            }
            if !rs.contains(&j) {
                rs.push(j);
            }
        }
        let components = by_root
            .into_iter()
            .map(|(_, mut ps, mut rs)| {
                ps.sort_unstable();
                rs.sort_unstable();
                (ps, rs)
            })
            .collect();
        CandidateGraph { edges, components }
    }
}

/// Maximum-cardinality matchings of one component using candidate edges
/// only, as `(pred, ref)` pair lists. Stops after `cap` matchings.
fn component_matchings(preds: &[usize], cands: &HashMap<usize, Vec<usize>>, cap: usize) -> (Vec<Vec<(usize, usize)>>, bool) {
    let mut all: Vec<Vec<(usize, usize)>> = Vec::new();
    let mut best_size = 0;
    let mut current = Vec::new();
    let mut used: Vec<usize> = Vec::new();
    let mut truncated = false;

    #[allow(clippy::too_many_arguments)]
    fn go(
        k: usize,
        preds: &[usize],
        cands: &HashMap<usize, Vec<usize>>,
        current: &mut Vec<(usize, usize)>,
        used: &mut Vec<usize>,
        all: &mut Vec<Vec<(usize, usize)>>,
        best_size: &mut usize,
        cap: usize,
        truncated: &mut bool,
    ) {
        if *truncated {
            return;
        }
        // cannot reach the best size any more
        if current.len() + (preds.len() - k) < *best_size {
            return;
        }
        if k == preds.len() {
            if current.len() > *best_size {
                *best_size = current.len();
                all.clear();
            }
            if all.len() >= cap {
                *truncated = true;
                return;
            }
            all.push(current.clone());
            return;
        }
        let p = preds[k];
        for &r in &cands[&p] {
            if used.contains(&r) {
                continue;
            }
            used.push(r);
            current.push((p, r));
            go(k + 1, preds, cands, current, used, all, best_size, cap, truncated);
            current.pop();
            used.pop();
        }
        go(k + 1, preds, cands, current, used, all, best_size, cap, truncated);
    }

    go(0, preds, cands, &mut current, &mut used, &mut all, &mut best_size, cap, &mut truncated);
    (all, truncated)
}

/// Candidate-restricted search: atoms with no candidate above the threshold
/// stay unbound, and only the injective assignments inside each connected
/// component of the candidate graph are enumerated (jointly across
/// components, up to `limits.component_cap`).
pub fn bind_optimized(
    pred: &FolExpr,
    reference: &FolExpr,
    backend: &dyn SimilarityBackend,
    threshold: f64,
    limits: &Limits,
) -> Result<BindingOutcome, LeError> {
    let mut scorer = Scorer::new(pred, reference, limits.max_atoms);
    bind_optimized_with(&mut scorer, backend, threshold, limits)
}

pub(crate) fn bind_optimized_with(
    scorer: &mut Scorer,
    backend: &dyn SimilarityBackend,
    threshold: f64,
    limits: &Limits,
) -> Result<BindingOutcome, LeError> {
    let np = scorer.pred_atoms.len();
    let graph = CandidateGraph::build(&scorer.pred_atoms, &scorer.ref_atoms, backend, threshold);
    let mut cands: HashMap<usize, Vec<(usize, f64)>> = HashMap::new();
    for &(i, j, s) in &graph.edges {
        cands.entry(i).or_default().push((j, s));
    }
    // most similar candidates first
    let cands: HashMap<usize, Vec<usize>> = cands
        .into_iter()
        .map(|(i, mut v)| {
            v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            (i, v.into_iter().map(|(j, _)| j).collect())
        })
        .collect();

    let mut truncated = false;
    let mut per_component = Vec::with_capacity(graph.components.len());
    for (preds, _) in &graph.components {
        let (ms, t) = component_matchings(preds, &cands, limits.component_cap);
        truncated |= t;
        per_component.push(ms);
    }

    let (pred_atoms, ref_atoms) = (scorer.pred_atoms.clone(), scorer.ref_atoms.clone());
    let mut dist = LazyDistances::new(&pred_atoms, &ref_atoms);
    let mut best: Option<Best> = None;
    let mut explored = 0u64;
    let mut odometer = vec![0usize; per_component.len()];
    loop {
        let mut assign = vec![None; np];
        for (c, &k) in odometer.iter().enumerate() {
            for &(p, r) in &per_component[c][k] {
                assign[p] = Some(r);
            }
        }
        let s = scorer.score(&assign)?;
        explored += 1;
        Best::offer(&mut best, &assign, s, |a| dist.summed(a));
        if explored as usize >= limits.component_cap {
            // more combinations remain unless the odometer is at its end
            truncated |= odometer.iter().zip(&per_component).any(|(&k, ms)| k + 1 < ms.len());
            break;
        }
        let mut c = 0;
        while c < odometer.len() {
            odometer[c] += 1;
            if odometer[c] < per_component[c].len() {
                break;
            }
            odometer[c] = 0;
            c += 1;
        }
        if c == odometer.len() {
            break;
        }
    }

    let best = best.expect("at least one assignment");
    Ok(BindingOutcome {
        binding: BindingMap::from_assignment(&scorer.pred_atoms, &scorer.ref_atoms, &best.assign),
        score: best.score,
        atom_count: scorer.atom_count(&best.assign),
        bindings_explored: explored,
        assignments_evaluated: scorer.assignments_evaluated,
        truncated,
    })
}
