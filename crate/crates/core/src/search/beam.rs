use std::cmp::Ordering;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{expand_node, make_children, ExpansionOutcome, NodeKind, SearchConfig, SearchTree};
use crate::engine::{finish, Sampler, ACCEPT_RNG_SALT};
use crate::error::Result;
use crate::policy::{GenerationPolicy, RewardModel};
use crate::problem::Problem;
use crate::record::{Decomposition, StepKind, StepRecord};
use crate::stats::{RoundStatus, SampleSource, ZScore};

/// Beam search over dynamic-decomposition expansions.
///
/// Each round expands the best unexpanded rollout(s) of every frontier node,
/// ranks the resulting nodes by best sampled reward, then lower z, then
/// creation order, and keeps the top `beam_width`. With width 1 and one
/// expansion per node this is the greedy step search.
pub fn beam_disc(
    problem: &Problem,
    policy: &dyn GenerationPolicy,
    reward: &dyn RewardModel,
    cfg: &SearchConfig,
) -> Result<Decomposition> {
    cfg.validate()?;
    let ecfg = &cfg.engine;
    let rule = ecfg.stopping_rule();
    let mut rng = ChaCha8Rng::seed_from_u64(ecfg.rng_seed ^ ACCEPT_RNG_SALT);
    let mut sampler = Sampler::new(problem, policy, reward, ecfg);
    let mut tree = SearchTree::new(problem.prompt.clone());

    let root_round = make_children(&mut sampler, &problem.prompt, &rule, Vec::new())?;
    if root_round.is_empty() {
        return Ok(into_decomposition(&tree, 0, sampler));
    }
    for leaf in tree.attach_round(0, &root_round) {
        let r = tree.nodes[leaf].best_reward;
        tree.backpropagate(leaf, r, cfg.learning_rate);
    }
    if root_round.status != RoundStatus::Complete {
        tree.solved_at_root = root_round.status == RoundStatus::Solved;
        return Ok(into_decomposition(&tree, 0, sampler));
    }

    let mut frontier = vec![0usize];
    let mut solved = None;
    'search: loop {
        let mut created = Vec::new();
        for &f in &frontier {
            for leaf in expandable_leaves(&tree, f, cfg.expansions_per_node) {
                if sampler.remaining() == 0 {
                    break 'search;
                }
                let parent_prefix = tree.nodes[f].prefix.clone();
                let parent_stats = tree.nodes[f].stats.clone().expect("frontier nodes hold a round");
                let rollout = tree.nodes[leaf].rollout.clone().expect("leaves hold a rollout");
                let depth = tree.nodes[f].depth;
                let exp = expand_node(&mut sampler, &parent_prefix, &parent_stats, &rollout, depth, ecfg, &mut rng)?;
                let outcome = exp.outcome.clone();
                tree.apply_expansion(leaf, exp, sampler.drawn(), cfg.learning_rate);
                match outcome {
                    ExpansionOutcome::Solved => {
                        solved = Some(leaf);
                        break 'search;
                    }
                    ExpansionOutcome::Undecided => break 'search,
                    _ => created.push(leaf),
                }
            }
        }
        if created.is_empty() {
            break;
        }
        created.sort_by(|&a, &b| rank(&tree, a, b));
        created.truncate(cfg.beam_width);
        frontier = created;
    }
    let target = solved.unwrap_or(frontier[0]);
    Ok(into_decomposition(&tree, target, sampler))
}

/// Up to `m` unexpanded leaves of `node`, best reward first, earliest on ties.
fn expandable_leaves(tree: &SearchTree, node: usize, m: usize) -> Vec<usize> {
    let n = &tree.nodes[node];
    if matches!(n.kind, NodeKind::Terminal | NodeKind::Leaf) {
        return Vec::new();
    }
    let mut leaves: Vec<usize> = n.children.iter().copied().filter(|&c| tree.nodes[c].kind == NodeKind::Leaf).collect();
    // stable: creation order breaks ties
    leaves.sort_by(|&a, &b| tree.nodes[b].best_reward.total_cmp(&tree.nodes[a].best_reward));
    leaves.truncate(m);
    leaves
}

/// Beam order: higher best reward, then lower z, then creation order.
fn rank(tree: &SearchTree, a: usize, b: usize) -> Ordering {
    let (na, nb) = (&tree.nodes[a], &tree.nodes[b]);
    nb.best_reward
        .total_cmp(&na.best_reward)
        .then(na.z.0.total_cmp(&nb.z.0))
}

/// Decomposition along the path to `target`. A solve in the root round is a
/// single solved step.
pub(super) fn into_decomposition(tree: &SearchTree, target: usize, sampler: Sampler<'_>) -> Decomposition {
    let prompt = tree.nodes[0].prefix.clone();
    let mut decomp = Decomposition::new(prompt.clone());
    if tree.solved_at_root {
        if let Some(s) = sampler.generated().last() {
            decomp.steps.push(StepRecord {
                step_str: s.solution().strip_prefix(&prompt).expect("extends the prompt"),
                metric: ZScore::SENTINEL,
                samples_spent: sampler.drawn(),
                committed_at: sampler.drawn(),
                kind: StepKind::Solved,
            });
        }
    } else {
        decomp.steps = tree.steps_to(target);
    }
    finish(decomp, sampler)
}
