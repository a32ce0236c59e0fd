//! Stack decoding over a recombined search graph with lazy k-best extraction.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rustc_hash::{FxHashMap, FxHashSet};

use super::{
    add, can_extend, collect_options, end_features, extension_features, initial_state, Coverage,
    DecodeResult, DecoderParams, FeatureVector, Hypothesis, ModelWeights, NUM_FEATURES,
};
use crate::corpus::TokenId;
use crate::lm::LanguageModel;
use crate::num::Scalar;
use crate::phrase::PhraseTable;

struct Arc<'a, S> {
    prev: usize,
    clean: &'a [TokenId],
    delta: FeatureVector<S>,
    score: S,
}

struct Node<'a, S> {
    coverage: Coverage,
    next_start: usize,
    state: Vec<TokenId>,
    best: S,
    arcs: Vec<Arc<'a, S>>,
}

type StateKey = (Coverage, usize, Vec<TokenId>);

/// Finds the best clean rewrite of `noisy` and up to `nbest_size` distinct
/// alternatives.
pub fn decode<S: Scalar, L: LanguageModel<S> + ?Sized>(
    noisy: &[TokenId],
    table: &PhraseTable<S>,
    lm: &L,
    weights: &ModelWeights<S>,
    params: &DecoderParams,
) -> DecodeResult<S> {
    let graph = build_graph(noisy, table, lm, weights, params)
        .or_else(|| {
            let monotone = DecoderParams { monotone: true, ..*params };
            build_graph(noisy, table, lm, weights, &monotone)
        })
        .expect("monotone search always completes");
    extract(&graph, weights, params.nbest_size.max(1))
}

/// Search nodes; the last one is the virtual goal reached after `</s>`.
struct Graph<'a, S> {
    nodes: Vec<Node<'a, S>>,
}

fn build_graph<'a, S: Scalar, L: LanguageModel<S> + ?Sized>(
    noisy: &'a [TokenId],
    table: &'a PhraseTable<S>,
    lm: &L,
    weights: &ModelWeights<S>,
    params: &DecoderParams,
) -> Option<Graph<'a, S>> {
    let len = noisy.len();
    let options = collect_options(noisy, table, params);
    let keep = lm.context_len();
    let mut nodes = vec![Node {
        coverage: Coverage::new(len),
        next_start: 0,
        state: initial_state(keep),
        best: S::zero(),
        arcs: Vec::new(),
    }];
    let mut stacks: Vec<Vec<usize>> = vec![Vec::new(); len + 1];
    let mut index: Vec<FxHashMap<StateKey, usize>> = vec![FxHashMap::default(); len + 1];
    stacks[0].push(0);

    for covered in 0..len {
        let mut stack = std::mem::take(&mut stacks[covered]);
        prune(&mut stack, &nodes, params.beam_size.max(1));
        for &id in &stack {
            let (coverage, next_start, state, base) = {
                let n = &nodes[id];
                (n.coverage.clone(), n.next_start, n.state.clone(), n.best)
            };
            for start in 0..len {
                if coverage.is_set(start) {
                    continue;
                }
                for opt in &options[start] {
                    if !can_extend(&coverage, next_start, opt.start, opt.end, len, params) {
                        continue;
                    }
                    let mut history = state.clone();
                    let delta = extension_features(opt, next_start, &mut history, noisy, lm);
                    let score = weights.score(&delta);
                    let total = base + score;
                    let target = covered + opt.end - opt.start;
                    let key = (coverage.with_span(opt.start, opt.end), opt.end, history);
                    let arc = Arc { prev: id, clean: opt.clean, delta, score };
                    match index[target].get(&key) {
                        Some(&existing) => {
                            let node = &mut nodes[existing];
                            if total > node.best {
                                node.best = total;
                            }
                            node.arcs.push(arc);
                        }
                        None => {
                            let new_id = nodes.len();
                            nodes.push(Node {
                                coverage: key.0.clone(),
                                next_start: key.1,
                                state: key.2.clone(),
                                best: total,
                                arcs: vec![arc],
                            });
                            index[target].insert(key, new_id);
                            stacks[target].push(new_id);
                        }
                    }
                }
            }
        }
        stacks[covered] = stack;
    }

    let mut last = std::mem::take(&mut stacks[len]);
    if last.is_empty() {
        return None;
    }
    prune(&mut last, &nodes, params.beam_size.max(1));
    let mut goal_arcs = Vec::with_capacity(last.len());
    let mut goal_best = S::neg_infinity();
    for &id in &last {
        let delta = end_features(&nodes[id].state, noisy, lm);
        let score = weights.score(&delta);
        goal_best = goal_best.max(nodes[id].best + score);
        goal_arcs.push(Arc { prev: id, clean: &[], delta, score });
    }
    nodes.push(Node {
        coverage: Coverage::new(len),
        next_start: len,
        state: Vec::new(),
        best: goal_best,
        arcs: goal_arcs,
    });
    Some(Graph { nodes })
}

/// Histogram pruning: keep the `beam` best, ties by creation order.
fn prune<S: Scalar>(stack: &mut Vec<usize>, nodes: &[Node<'_, S>], beam: usize) {
    stack.sort_by(|&a, &b| {
        nodes[b].best.partial_cmp(&nodes[a].best).unwrap_or(Ordering::Equal).then(a.cmp(&b))
    });
    stack.truncate(beam);
}

#[derive(Clone, Copy)]
struct Candidate<S> {
    score: S,
    arc: usize,
    rank: usize,
}

impl<S: Scalar> PartialEq for Candidate<S> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<S: Scalar> Eq for Candidate<S> {}

impl<S: Scalar> PartialOrd for Candidate<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<S: Scalar> Ord for Candidate<S> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.score
            .partial_cmp(&other.score)
            .unwrap_or(Ordering::Equal)
            .then(other.arc.cmp(&self.arc))
            .then(other.rank.cmp(&self.rank))
    }
}

struct KBest<S> {
    started: bool,
    /// (score, arc, rank in the tail node's list)
    found: Vec<Candidate<S>>,
    heap: BinaryHeap<Candidate<S>>,
}

/// Lazy enumeration of derivations in score order (each arc has one tail,
/// so this is the path case of the hypergraph algorithm).
struct Enumerator<'g, 'a, S> {
    nodes: &'g [Node<'a, S>],
    lists: Vec<KBest<S>>,
}

impl<'g, 'a, S: Scalar> Enumerator<'g, 'a, S> {
    fn new(nodes: &'g [Node<'a, S>]) -> Self {
        let lists = (0..nodes.len())
            .map(|_| KBest { started: false, found: Vec::new(), heap: BinaryHeap::new() })
            .collect();
        Enumerator { nodes, lists }
    }

    /// Score of the k-th best derivation ending at `v`.
    fn kth(&mut self, v: usize, k: usize) -> Option<S> {
        if v == 0 {
            return (k == 0).then(S::zero);
        }
        let nodes = self.nodes;
        if !self.lists[v].started {
            self.lists[v].started = true;
            for (a, arc) in nodes[v].arcs.iter().enumerate() {
                if let Some(s) = self.kth(arc.prev, 0) {
                    self.lists[v].heap.push(Candidate { score: s + arc.score, arc: a, rank: 0 });
                }
            }
        }
        while self.lists[v].found.len() <= k {
            if let Some(&last) = self.lists[v].found.last() {
                let arc = &nodes[v].arcs[last.arc];
                if let Some(s) = self.kth(arc.prev, last.rank + 1) {
                    let next = Candidate { score: s + arc.score, arc: last.arc, rank: last.rank + 1 };
                    self.lists[v].heap.push(next);
                }
            }
            let top = self.lists[v].heap.pop()?;
            self.lists[v].found.push(top);
        }
        Some(self.lists[v].found[k].score)
    }

    fn path(&self, v: usize, k: usize) -> (Vec<TokenId>, FeatureVector<S>) {
        let mut arcs = Vec::new();
        let (mut v, mut k) = (v, k);
        while v != 0 {
            let c = self.lists[v].found[k];
            let arc = &self.nodes[v].arcs[c.arc];
            arcs.push(arc);
            v = arc.prev;
            k = c.rank;
        }
        let mut clean = Vec::new();
        let mut features = [S::zero(); NUM_FEATURES];
        for arc in arcs.iter().rev() {
            clean.extend_from_slice(arc.clean);
            add(&mut features, &arc.delta);
        }
        (clean, features)
    }
}

fn extract<S: Scalar>(graph: &Graph<'_, S>, weights: &ModelWeights<S>, nbest: usize) -> DecodeResult<S> {
    let goal = graph.nodes.len() - 1;
    let mut enumerator = Enumerator::new(&graph.nodes);
    let budget = (20 * nbest).max(100);
    let mut seen: FxHashSet<Vec<TokenId>> = FxHashSet::default();
    let mut hyps: Vec<Hypothesis<S>> = Vec::new();
    let mut k = 0;
    while k < budget && enumerator.kth(goal, k).is_some() {
        let (clean, features) = enumerator.path(goal, k);
        let score = weights.score(&features);
        if seen.insert(clean.clone()) {
            hyps.push(Hypothesis { clean, features, score });
        } else if let Some(h) = hyps.iter_mut().find(|h| h.clean == clean) {
            if score > h.score {
                h.features = features;
                h.score = score;
            }
        }
        k += 1;
    }
    sort_hypotheses(&mut hyps);
    hyps.truncate(nbest);
    DecodeResult { best: hyps.first().map(|h| h.clean.clone()).unwrap_or_default(), nbest: hyps }
}

pub(crate) fn sort_hypotheses<S: Scalar>(hyps: &mut [Hypothesis<S>]) {
    hyps.sort_by(|a, b| {
        b.score.partial_cmp(&a.score).unwrap_or(Ordering::Equal).then_with(|| a.clean.cmp(&b.clean))
    });
}
