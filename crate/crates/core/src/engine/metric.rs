use super::greedy::finish;
use super::{EngineConfig, Sampler};
use crate::error::Result;
use crate::policy::{GenerationPolicy, RewardModel};
use crate::problem::Problem;
use crate::record::{Decomposition, StepKind, StepRecord};
use crate::seq::split;
use crate::stats::{sample_until_threshold, RoundStatus, SampleSource};

/// Dynamic decomposition driven by a priority metric `h` (`cfg.metric`).
///
/// Every round samples from `prompt · steps`. If there is no committed step
/// yet, or the new round's metric is at least the last step's metric, the
/// best new completion is split and its head committed as a new step;
/// otherwise the last step is split again and replaced by its head. The run
/// ends when the split target is atomic, when a new step's metric falls
/// below `cfg.theta`, or when the budget is spent.
pub fn metric_split_decomposition(
    problem: &Problem,
    policy: &dyn GenerationPolicy,
    reward: &dyn RewardModel,
    cfg: &EngineConfig,
) -> Result<Decomposition> {
    cfg.validate()?;
    let rule = cfg.stopping_rule();
    let theta = cfg.theta.unwrap_or(f64::NEG_INFINITY);
    let mut sampler = Sampler::new(problem, policy, reward, cfg);
    let mut decomp = Decomposition::new(problem.prompt.clone());
    let mut step_start = 0usize;

    while sampler.remaining() > 0 {
        let intermediate = decomp.committed_prefix();
        sampler.depth = decomp.steps.len();
        let round = sample_until_threshold(&mut sampler, &intermediate, &rule, Vec::new())?;
        let spent = sampler.drawn() - step_start;
        match round.status {
            RoundStatus::Solved => {
                let solving = round.samples.last().expect("solved round has a sample");
                let metric = decomp.steps.last().map(|s| s.metric).unwrap_or(crate::stats::ZScore::SENTINEL);
                decomp.steps.push(StepRecord {
                    step_str: solving.suffix.clone(),
                    metric,
                    samples_spent: spent,
                    committed_at: sampler.drawn(),
                    kind: StepKind::Solved,
                });
                break;
            }
            RoundStatus::BudgetExhausted => break,
            RoundStatus::Complete => {}
        }

        let rewards: Vec<f64> = round.samples.iter().map(|s| s.reward).collect();
        let new_metric = cfg.metric.evaluate(&rewards);
        let best_completion = round.best().suffix.clone();
        let last_metric = decomp.steps.last().map(|s| s.metric);
        let split_new = last_metric.is_none_or(|last| new_metric.0 >= last.0);
        let target = if split_new {
            best_completion.clone()
        } else {
            decomp.steps.last().expect("checked above").step_str.clone()
        };

        let Some((head, tail)) = split(&target, cfg.alpha0).into_parts() else {
            decomp.steps.push(StepRecord {
                step_str: best_completion,
                metric: new_metric,
                samples_spent: spent,
                committed_at: sampler.drawn(),
                kind: StepKind::Terminal,
            });
            break;
        };

        if split_new {
            decomp.steps.push(StepRecord {
                step_str: head,
                metric: new_metric,
                samples_spent: spent,
                committed_at: sampler.drawn(),
                kind: StepKind::Accepted,
            });
            step_start = sampler.drawn();
            if new_metric.0 < theta {
                decomp.steps.push(StepRecord {
                    step_str: tail,
                    metric: new_metric,
                    samples_spent: 0,
                    committed_at: sampler.drawn(),
                    kind: StepKind::Terminal,
                });
                break;
            }
        } else {
            let last = decomp.steps.last_mut().expect("checked above");
            last.step_str = head;
            last.samples_spent += spent;
            last.committed_at = sampler.drawn();
            step_start = sampler.drawn();
        }
    }
    Ok(finish(decomp, sampler))
}
