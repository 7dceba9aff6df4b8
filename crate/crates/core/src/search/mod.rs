//! Dynamic decomposition as a node-expansion operator inside tree search.
//!
//! A [`SearchTree`] holds two kinds of nodes. Internal nodes carry a base
//! prefix and the sampling round drawn from it; their children are first
//! created as rollout leaves (one per sample, `n = 1`, `Q̂ = reward`). Expanding
//! a leaf runs the step search of [`expand_node`] on the leaf's suffix and
//! turns the leaf into an internal node at the accepted candidate prefix.

mod beam;
mod mcts;

pub use beam::beam_disc;
pub use mcts::{mcts_disc, mcts_tree};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{AlphaProposer, EngineConfig, Sampler, StepProposer};
use crate::error::{DiscError, Result};
use crate::record::{SampleRecord, StepKind, StepRecord};
use crate::seq::TextSeq;
use crate::stats::{accept, SampleSource, sample_until_threshold, zscore, RewardStats, Round, RoundStatus, StoppingRule, ZScore};

/// Step size `α_n` of the max-backup as a function of prior visits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LearningRate {
    /// `1 / (visits + 1)`.
    VisitAverage,
    Constant { rate: f64 },
}

impl Default for LearningRate {
    fn default() -> Self {
        LearningRate::VisitAverage
    }
}

impl LearningRate {
    pub fn rate(self, visits: usize) -> f64 {
        match self {
            LearningRate::VisitAverage => 1.0 / (visits as f64 + 1.0),
            LearningRate::Constant { rate } => rate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub exploration_c: f64,
    pub beam_width: usize,
    /// Leaves expanded per frontier node and round in beam search.
    pub expansions_per_node: usize,
    pub learning_rate: LearningRate,
    pub engine: EngineConfig,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            exploration_c: std::f64::consts::SQRT_2,
            beam_width: 2,
            expansions_per_node: 1,
            learning_rate: LearningRate::VisitAverage,
            engine: EngineConfig::default(),
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.exploration_c >= 0.0) {
            return Err(DiscError::Config(format!("exploration_c must be >= 0, got {}", self.exploration_c)));
        }
        if self.beam_width == 0 || self.expansions_per_node == 0 {
            return Err(DiscError::Config("beam_width and expansions_per_node must be >= 1".into()));
        }
        if let LearningRate::Constant { rate } = self.learning_rate {
            if !(rate > 0.0 && rate <= 1.0) {
                return Err(DiscError::Config(format!("learning rate must lie in (0, 1], got {rate}")));
            }
        }
        self.engine.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Root,
    /// A rollout not yet expanded.
    Leaf,
    /// Expanded and committed by the acceptance criterion.
    Accepted,
    /// The suffix could not be split; the node is a complete solution.
    Terminal,
    /// The expansion drew a correct sample.
    Solved,
    /// The budget ran out before the expansion reached a decision.
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchNode {
    pub parent: Option<usize>,
    /// Base prefix of the node's children. For leaves and terminal nodes it
    /// is the complete solution.
    pub prefix: TextSeq,
    /// Text committed from the parent's prefix; for solved nodes the whole
    /// solving remainder.
    pub step: TextSeq,
    pub kind: NodeKind,
    pub q_hat: f64,
    pub visits: usize,
    pub children: Vec<usize>,
    pub best_reward: f64,
    pub z: ZScore,
    #[serde(skip)]
    pub stats: Option<RewardStats>,
    /// The rollout a leaf stands for.
    pub rollout: Option<SampleRecord>,
    pub depth: usize,
    /// Global draw count when the node was created or expanded.
    pub created_at: usize,
    /// No selectable descendants remain.
    pub exhausted: bool,
}

impl SearchNode {
    fn new(parent: Option<usize>, prefix: TextSeq, kind: NodeKind, depth: usize, created_at: usize) -> Self {
        SearchNode {
            parent,
            step: TextSeq::empty(prefix.scheme),
            prefix,
            kind,
            q_hat: 0.0,
            visits: 0,
            children: Vec::new(),
            best_reward: f64::NEG_INFINITY,
            z: ZScore::SENTINEL,
            stats: None,
            rollout: None,
            depth,
            created_at,
            exhausted: false,
        }
    }
}

/// Arena of search nodes; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchTree {
    pub nodes: Vec<SearchNode>,
    /// The first round at the prompt drew a correct sample.
    pub solved_at_root: bool,
}

impl SearchTree {
    pub fn new(prompt: TextSeq) -> Self {
        SearchTree { nodes: vec![SearchNode::new(None, prompt, NodeKind::Root, 0, 0)], solved_at_root: false }
    }

    pub fn node(&self, id: usize) -> &SearchNode {
        &self.nodes[id]
    }

    /// Root-to-`id` node ids.
    pub fn path(&self, id: usize) -> Vec<usize> {
        let mut path = vec![id];
        let mut cur = id;
        while let Some(p) = self.nodes[cur].parent {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }

    /// Attaches a round to internal node `id`: node statistics are set and
    /// one leaf is added per sample. Returns the ids of leaves for samples
    /// drawn in this round (seeded samples are already counted above).
    pub fn attach_round(&mut self, id: usize, round: &Round) -> Vec<usize> {
        let stats = round.stats();
        let depth = self.nodes[id].depth + 1;
        let node = &mut self.nodes[id];
        node.z = zscore(&stats);
        node.best_reward = stats.max;
        node.stats = Some(stats);
        let mut fresh = Vec::new();
        for (i, s) in round.samples.iter().enumerate() {
            let mut leaf = SearchNode::new(Some(id), s.solution(), NodeKind::Leaf, depth, s.index + 1);
            leaf.step = s.suffix.clone();
            leaf.best_reward = s.reward;
            leaf.rollout = Some(s.clone());
            if i < round.seeded {
                leaf.q_hat = s.reward;
                leaf.visits = 1;
            }
            let leaf_id = self.nodes.len();
            self.nodes.push(leaf);
            self.nodes[id].children.push(leaf_id);
            if i >= round.seeded {
                fresh.push(leaf_id);
            }
        }
        fresh
    }

    /// Max-backup from `leaf` to the root; see [`backprop_step`].
    pub fn backpropagate(&mut self, leaf: usize, value: f64, schedule: LearningRate) {
        let mut v = value;
        let mut cur = Some(leaf);
        while let Some(id) = cur {
            let node = &mut self.nodes[id];
            node.q_hat = backprop_step(node.q_hat, node.visits, v, schedule);
            node.visits += 1;
            v = node.q_hat;
            cur = node.parent;
        }
    }

    /// Recomputes `exhausted` for `id` and its ancestors.
    pub fn refresh_exhausted(&mut self, id: usize) {
        let mut cur = Some(id);
        while let Some(i) = cur {
            let n = &self.nodes[i];
            let done = match n.kind {
                NodeKind::Leaf => n.exhausted,
                NodeKind::Terminal => true,
                _ => n.children.iter().all(|&c| self.nodes[c].exhausted),
            };
            if !done {
                break;
            }
            self.nodes[i].exhausted = true;
            cur = self.nodes[i].parent;
        }
    }

    /// Committed steps along the path to `id`, stopping before the first
    /// undecided node.
    pub fn steps_to(&self, id: usize) -> Vec<StepRecord> {
        let mut steps = Vec::new();
        let mut prev_at = 0;
        for &nid in &self.path(id) {
            let n = &self.nodes[nid];
            let parent_z = n.parent.map(|p| self.nodes[p].z).unwrap_or(ZScore::SENTINEL);
            let (kind, metric) = match n.kind {
                NodeKind::Root | NodeKind::Leaf => continue,
                NodeKind::Undecided => break,
                NodeKind::Accepted => (StepKind::Accepted, n.z),
                NodeKind::Terminal => (StepKind::Terminal, parent_z),
                NodeKind::Solved => (StepKind::Solved, parent_z),
            };
            steps.push(StepRecord {
                step_str: n.step.clone(),
                metric,
                samples_spent: n.created_at - prev_at,
                committed_at: n.created_at,
                kind,
            });
            prev_at = n.created_at;
        }
        steps
    }
}

/// One edge of the max-backup: a fresh node takes `value`; otherwise
/// `Q̂ ← (1 − α_n) Q̂ + α_n max(Q̂, value)`.
pub fn backprop_step(q_hat: f64, visits: usize, value: f64, schedule: LearningRate) -> f64 {
    if visits == 0 {
        return value;
    }
    // same as (1 - a) q + a max(q, v), without rounding below q
    let a = schedule.rate(visits);
    q_hat + a * (q_hat.max(value) - q_hat)
}

/// `Q̂ + c sqrt(ln N / n)` with `N` the parent's total child visits.
pub fn uct_score(q_hat: f64, visits: usize, total_visits: usize, c: f64) -> f64 {
    if c == 0.0 {
        return q_hat;
    }
    q_hat + c * ((total_visits as f64).ln() / visits as f64).sqrt()
}

/// Index of the child to descend into, given `(Q̂, n)` per child. Unvisited
/// children come first in order; ties go to the lowest index.
pub fn uct_select(children: &[(f64, usize)], c: f64) -> usize {
    assert!(!children.is_empty(), "uct_select needs at least one child");
    if let Some(i) = children.iter().position(|&(_, n)| n == 0) {
        return i;
    }
    let total: usize = children.iter().map(|&(_, n)| n).sum();
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (i, &(q, n)) in children.iter().enumerate() {
        let s = uct_score(q, n, total, c);
        if s > best_score {
            best = i;
            best_score = s;
        }
    }
    best
}

/// Samples from `prefix` under the engine's stopping rule; the returned
/// round is flagged when the budget ran out first.
pub fn make_children(
    sampler: &mut Sampler<'_>,
    prefix: &TextSeq,
    rule: &StoppingRule,
    seeds: Vec<SampleRecord>,
) -> Result<Round> {
    sample_until_threshold(sampler, prefix, rule, seeds)
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExpansionOutcome {
    Accepted,
    Terminal,
    Solved,
    /// Budget ran out; the last evaluated candidate is returned.
    Undecided,
}

#[derive(Debug, Clone)]
pub struct Expansion {
    pub outcome: ExpansionOutcome,
    /// Base prefix of the new node.
    pub prefix: TextSeq,
    /// Text committed from the parent's prefix.
    pub step: TextSeq,
    /// Samples of the final candidate, seed first. `None` for terminal.
    pub round: Option<Round>,
}

/// Step search from a node: proposes heads of `suffix` (the rollout being
/// expanded), contracting `alpha` on rejection, until a candidate is
/// accepted against `parent_stats`, a sample solves, the suffix cannot be
/// split, or the budget runs out. Only the final candidate's samples are
/// returned. Samples are tagged with `depth`, the committed steps in
/// `parent_prefix`.
#[allow(clippy::too_many_arguments)]
pub fn expand_node<R: Rng + ?Sized>(
    sampler: &mut Sampler<'_>,
    parent_prefix: &TextSeq,
    parent_stats: &RewardStats,
    rollout: &SampleRecord,
    depth: usize,
    cfg: &EngineConfig,
    rng: &mut R,
) -> Result<Expansion> {
    let rule = cfg.stopping_rule();
    let suffix = rollout
        .solution()
        .strip_prefix(parent_prefix)
        .ok_or_else(|| DiscError::InvalidTrajectory("rollout does not extend the node prefix".into()))?;
    let mut proposer = AlphaProposer::new(cfg.alpha0);
    let mut last: Option<(TextSeq, TextSeq, Round)> = None;
    while sampler.remaining() > 0 {
        let Some((head, tail)) = proposer.propose(&suffix) else {
            return Ok(Expansion {
                outcome: ExpansionOutcome::Terminal,
                prefix: parent_prefix.concat(&suffix),
                step: suffix,
                round: None,
            });
        };
        let cand = parent_prefix.concat(&head);
        let seed = SampleRecord { prefix: cand.clone(), suffix: tail, ..rollout.clone() };
        sampler.depth = depth;
        let round = make_children(sampler, &cand, &rule, vec![seed])?;
        match round.status {
            RoundStatus::Solved => {
                let solving = round.samples.last().expect("solved round has a sample");
                let step = solving.solution().strip_prefix(parent_prefix).expect("extends the parent prefix");
                return Ok(Expansion { outcome: ExpansionOutcome::Solved, prefix: cand, step, round: Some(round) });
            }
            RoundStatus::BudgetExhausted => {
                return Ok(Expansion { outcome: ExpansionOutcome::Undecided, prefix: cand, step: head, round: Some(round) });
            }
            RoundStatus::Complete => {}
        }
        if accept(cfg.criterion, parent_stats, &round.stats(), rng, Some(cfg.guard)) {
            return Ok(Expansion { outcome: ExpansionOutcome::Accepted, prefix: cand, step: head, round: Some(round) });
        }
        proposer.on_reject();
        last = Some((cand, head, round));
    }
    let (prefix, step, round) = last.ok_or_else(|| DiscError::Config("expansion started with no budget".into()))?;
    Ok(Expansion { outcome: ExpansionOutcome::Undecided, prefix, step, round: Some(round) })
}

impl SearchTree {
    /// Replaces leaf `leaf` by the node described by `exp`, attaches its
    /// samples, and backs up every newly drawn reward. Returns the new
    /// leaves.
    pub fn apply_expansion(&mut self, leaf: usize, exp: Expansion, created_at: usize, schedule: LearningRate) -> Vec<usize> {
        {
            let n = &mut self.nodes[leaf];
            n.prefix = exp.prefix;
            n.step = exp.step;
            n.created_at = created_at;
            n.kind = match exp.outcome {
                ExpansionOutcome::Accepted => NodeKind::Accepted,
                ExpansionOutcome::Terminal => NodeKind::Terminal,
                ExpansionOutcome::Solved => NodeKind::Solved,
                ExpansionOutcome::Undecided => NodeKind::Undecided,
            };
            if n.kind == NodeKind::Terminal {
                let parent_z = n.parent.map(|p| self.nodes[p].z).unwrap_or(ZScore::SENTINEL);
                let n = &mut self.nodes[leaf];
                n.z = parent_z;
                n.exhausted = true;
            }
        }
        let Some(round) = exp.round else {
            self.refresh_exhausted(leaf);
            return Vec::new();
        };
        let fresh = self.attach_round(leaf, &round);
        for &c in &fresh {
            let r = self.nodes[c].best_reward;
            self.backpropagate(c, r, schedule);
        }
        fresh
    }

    /// Marks a leaf that cannot be expanded any further.
    pub fn mark_leaf_exhausted(&mut self, leaf: usize) {
        self.nodes[leaf].exhausted = true;
        self.refresh_exhausted(leaf);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn uct_examples() {
        assert_eq!(uct_select(&[(0.3, 4)], 1.0), 0);
        assert_eq!(uct_select(&[(0.9, 3), (0.1, 3)], 0.0), 0);
        assert_eq!(uct_select(&[(0.9, 3), (0.1, 0)], 0.0), 1);
        assert_eq!(uct_select(&[(0.5, 2), (0.5, 2)], 1.0), 0);
        assert_abs_diff_eq!(uct_score(0.25, 2, 8, 1.0), 0.25 + (8f64.ln() / 2.0).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(uct_score(0.25, 2, 8, 1.0), 1.2697, epsilon = 1e-4);
    }

    #[test]
    fn backprop_examples() {
        assert_abs_diff_eq!(backprop_step(0.4, 1, 0.7, LearningRate::Constant { rate: 0.5 }), 0.55, epsilon = 1e-15);
        assert_eq!(backprop_step(0.4, 3, 0.1, LearningRate::Constant { rate: 0.7 }), 0.4);
        assert_eq!(backprop_step(0.0, 0, 0.3, LearningRate::Constant { rate: 0.1 }), 0.3);
        assert_eq!(LearningRate::VisitAverage.rate(3), 0.25);
    }

    #[test]
    fn tree_backprop_passes_updated_values_up() {
        let mut t = SearchTree::new(TextSeq::chars("Q"));
        let mut child = SearchNode::new(Some(0), TextSeq::chars("Qa"), NodeKind::Accepted, 1, 0);
        child.q_hat = 0.2;
        child.visits = 1;
        t.nodes.push(child);
        t.nodes[0].children.push(1);
        t.nodes[0].q_hat = 0.1;
        t.nodes[0].visits = 1;
        t.backpropagate(1, 0.6, LearningRate::VisitAverage);
        // child: 0.5*0.2 + 0.5*0.6 = 0.4; root: 0.5*0.1 + 0.5*0.4 = 0.25
        assert_abs_diff_eq!(t.nodes[1].q_hat, 0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(t.nodes[0].q_hat, 0.25, epsilon = 1e-15);
        assert_eq!((t.nodes[0].visits, t.nodes[1].visits), (2, 2));
    }

    proptest! {
        #[test]
        fn uct_with_zero_c_is_argmax(qs in prop::collection::vec((0.0f64..1.0, 1usize..20), 1..12)) {
            let i = uct_select(&qs, 0.0);
            let max = qs.iter().map(|q| q.0).fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(qs[i].0, max);
            prop_assert!(qs[..i].iter().all(|q| q.0 < max));
        }

        #[test]
        fn backprop_never_decreases(q in -5.0f64..5.0, n in 1usize..50, v in -5.0f64..5.0, rate in 0.01f64..1.0) {
            let lr = LearningRate::Constant { rate };
            prop_assert!(backprop_step(q, n, v, lr) >= q);
            prop_assert!(backprop_step(q, n, v, LearningRate::VisitAverage) >= q);
        }
    }
}
