use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{expand_node, make_children, uct_select, ExpansionOutcome, NodeKind, SearchConfig, SearchTree};
use crate::engine::{Sampler, ACCEPT_RNG_SALT};
use crate::error::Result;
use crate::policy::{GenerationPolicy, RewardModel};
use crate::problem::Problem;
use crate::record::{argmax_earliest, Decomposition};
use crate::stats::{RoundStatus, SampleSource};

/// Monte Carlo tree search with dynamic-decomposition expansions.
///
/// Selection descends by UCT from the root to a rollout leaf; the leaf is
/// expanded by [`expand_node`], whose sampled completions double as the
/// simulations, and every new reward is backed up along the path. Runs until
/// the budget is spent, the tree is exhausted, or (in inference mode) a
/// sample solves the problem. The decomposition returned is the path to the
/// node that drew the best rollout.
pub fn mcts_disc(
    problem: &Problem,
    policy: &dyn GenerationPolicy,
    reward: &dyn RewardModel,
    cfg: &SearchConfig,
) -> Result<Decomposition> {
    let (tree, target, sampler) = mcts_tree(problem, policy, reward, cfg)?;
    Ok(super::beam::into_decomposition(&tree, target, sampler))
}

/// Runs the search and returns the tree, the node the decomposition ends at,
/// and the sampler holding every draw.
pub fn mcts_tree<'a>(
    problem: &'a Problem,
    policy: &'a dyn GenerationPolicy,
    reward: &'a dyn RewardModel,
    cfg: &SearchConfig,
) -> Result<(SearchTree, usize, Sampler<'a>)> {
    cfg.validate()?;
    let ecfg = &cfg.engine;
    let rule = ecfg.stopping_rule();
    let mut rng = ChaCha8Rng::seed_from_u64(ecfg.rng_seed ^ ACCEPT_RNG_SALT);
    let mut sampler = Sampler::new(problem, policy, reward, ecfg);
    let mut tree = SearchTree::new(problem.prompt.clone());

    let root_round = make_children(&mut sampler, &problem.prompt, &rule, Vec::new())?;
    if root_round.is_empty() {
        return Ok((tree, 0, sampler));
    }
    for leaf in tree.attach_round(0, &root_round) {
        let r = tree.nodes[leaf].best_reward;
        tree.backpropagate(leaf, r, cfg.learning_rate);
    }
    if root_round.status == RoundStatus::Solved {
        tree.solved_at_root = true;
        return Ok((tree, 0, sampler));
    }

    let mut solved = None;
    while solved.is_none() && sampler.remaining() > 0 && !tree.nodes[0].exhausted {
        let mut cur = 0;
        while tree.nodes[cur].kind != NodeKind::Leaf {
            let open: Vec<usize> =
                tree.nodes[cur].children.iter().copied().filter(|&c| !tree.nodes[c].exhausted).collect();
            let scores: Vec<(f64, usize)> = open.iter().map(|&c| (tree.nodes[c].q_hat, tree.nodes[c].visits)).collect();
            cur = open[uct_select(&scores, cfg.exploration_c)];
        }
        let parent = tree.nodes[cur].parent.expect("leaves have parents");
        let parent_prefix = tree.nodes[parent].prefix.clone();
        let parent_stats = tree.nodes[parent].stats.clone().expect("internal nodes hold a round");
        let rollout = tree.nodes[cur].rollout.clone().expect("leaves hold a rollout");
        let depth = tree.nodes[parent].depth;
        let exp = expand_node(&mut sampler, &parent_prefix, &parent_stats, &rollout, depth, ecfg, &mut rng)?;
        if exp.outcome == ExpansionOutcome::Solved {
            solved = Some(cur);
        }
        tree.apply_expansion(cur, exp, sampler.drawn(), cfg.learning_rate);
    }

    let target = match solved {
        Some(id) => id,
        None => best_rollout_node(&tree, &sampler),
    };
    Ok((tree, target, sampler))
}

/// Deepest internal node whose round contains the best drawn sample.
fn best_rollout_node(tree: &SearchTree, sampler: &Sampler<'_>) -> usize {
    let Some(best) = argmax_earliest(sampler.generated()) else { return 0 };
    tree.nodes
        .iter()
        .filter(|n| n.kind == NodeKind::Leaf && n.rollout.as_ref().is_some_and(|r| r.index == best.index))
        .filter_map(|n| n.parent)
        .max_by_key(|&p| (tree.nodes[p].depth, std::cmp::Reverse(p)))
        .unwrap_or(0)
}
