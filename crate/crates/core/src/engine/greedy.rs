use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{EngineConfig, Sampler};
use crate::error::Result;
use crate::policy::{GenerationPolicy, RewardModel};
use crate::problem::Problem;
use crate::record::{argmax_earliest, Decomposition, RoundTrace, SampleRecord, StepKind, StepRecord};
use crate::seq::{split, TextSeq};
use crate::stats::{accept, sample_until_threshold, zscore, RoundStatus, ZScore};

/// Chooses the next candidate step from the current best suffix.
pub trait StepProposer {
    /// `(head, tail)` of the proposal, or `None` when the suffix is atomic
    /// and must be committed whole.
    fn propose(&mut self, suffix: &TextSeq) -> Option<(TextSeq, TextSeq)>;
    /// Partition fraction in effect, for traces.
    fn alpha(&self) -> f64;
    fn on_accept(&mut self);
    fn on_reject(&mut self);
}

/// Proposes the first `alpha` fraction of the best suffix; resets `alpha` to
/// `alpha0` on accept and contracts it by `alpha0` on reject.
#[derive(Debug, Clone)]
pub struct AlphaProposer {
    alpha0: f64,
    alpha: f64,
}

impl AlphaProposer {
    pub fn new(alpha0: f64) -> Self {
        AlphaProposer { alpha0, alpha: alpha0 }
    }
}

impl StepProposer for AlphaProposer {
    fn propose(&mut self, suffix: &TextSeq) -> Option<(TextSeq, TextSeq)> {
        split(suffix, self.alpha).into_parts()
    }

    fn alpha(&self) -> f64 {
        self.alpha
    }

    fn on_accept(&mut self) {
        self.alpha = self.alpha0;
    }

    fn on_reject(&mut self) {
        // once the proposal is a single unit further contraction changes nothing
        self.alpha = (self.alpha * self.alpha0).max(f64::MIN_POSITIVE);
    }
}

/// Greedy dynamic decomposition.
pub fn greedy_disc(
    problem: &Problem,
    policy: &dyn GenerationPolicy,
    reward: &dyn RewardModel,
    cfg: &EngineConfig,
) -> Result<Decomposition> {
    step_search(problem, policy, reward, cfg, &mut AlphaProposer::new(cfg.alpha0))
}

/// The greedy accept/commit loop shared by dynamic and static step sizing.
///
/// The best base sample is seeded into every candidate round, so the
/// candidate maximum never falls below the base maximum.
pub fn step_search(
    problem: &Problem,
    policy: &dyn GenerationPolicy,
    reward: &dyn RewardModel,
    cfg: &EngineConfig,
    proposer: &mut dyn StepProposer,
) -> Result<Decomposition> {
    cfg.validate()?;
    let rule = cfg.stopping_rule();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed ^ super::ACCEPT_RNG_SALT);
    let mut sampler = Sampler::new(problem, policy, reward, cfg);
    let mut decomp = Decomposition::new(problem.prompt.clone());
    let mut base_prefix = problem.prompt.clone();

    let base_round = sample_until_threshold(&mut sampler, &base_prefix, &rule, Vec::new())?;
    match base_round.status {
        RoundStatus::Solved => {
            let solving = base_round.samples.last().expect("solved round has a sample");
            commit_solved(&mut decomp, &sampler, &base_prefix, solving, ZScore::SENTINEL, 0);
            return Ok(finish(decomp, sampler));
        }
        RoundStatus::BudgetExhausted => return Ok(finish(decomp, sampler)),
        RoundStatus::Complete => {}
    }
    let mut base_stats = base_round.stats();
    let mut base_z = zscore(&base_stats);
    let mut best_base = base_round.best().clone();
    let mut step_start = 0usize;

    while sampler.remaining_draws() > 0 {
        let Some((head, tail)) = proposer.propose(&best_base.suffix) else {
            decomp.steps.push(StepRecord {
                step_str: best_base.suffix.clone(),
                metric: base_z,
                samples_spent: sampler.drawn() - step_start,
                committed_at: sampler.drawn(),
                kind: StepKind::Terminal,
            });
            break;
        };
        let cand_prefix = base_prefix.concat(&head);
        let seed = SampleRecord { prefix: cand_prefix.clone(), suffix: tail, ..best_base.clone() };
        sampler.depth = decomp.steps.len();
        let round = sample_until_threshold(&mut sampler, &cand_prefix, &rule, vec![seed])?;
        match round.status {
            RoundStatus::Solved => {
                let solving = round.samples.last().expect("solved round has a sample");
                commit_solved(&mut decomp, &sampler, &base_prefix, solving, base_z, step_start);
                break;
            }
            // no decision on an incomplete round
            RoundStatus::BudgetExhausted => break,
            RoundStatus::Complete => {}
        }
        let cand_stats = round.stats();
        let cand_z = zscore(&cand_stats);
        let accepted = accept(cfg.criterion, &base_stats, &cand_stats, &mut rng, Some(cfg.guard));
        decomp.rounds.push(RoundTrace {
            base_units: best_base.suffix.unit_count(),
            proposal_units: head.unit_count(),
            alpha: proposer.alpha(),
            base_max: base_stats.max,
            cand_max: cand_stats.max,
            base_z,
            cand_z,
            accepted,
            drawn: round.drawn().len(),
        });
        if accepted {
            decomp.steps.push(StepRecord {
                step_str: head,
                metric: cand_z,
                samples_spent: sampler.drawn() - step_start,
                committed_at: sampler.drawn(),
                kind: StepKind::Accepted,
            });
            step_start = sampler.drawn();
            base_prefix = cand_prefix;
            best_base = round.best().clone();
            base_stats = cand_stats;
            base_z = cand_z;
            proposer.on_accept();
        } else {
            proposer.on_reject();
        }
    }
    Ok(finish(decomp, sampler))
}

fn commit_solved(
    decomp: &mut Decomposition,
    sampler: &Sampler<'_>,
    base_prefix: &TextSeq,
    solving: &SampleRecord,
    metric: ZScore,
    step_start: usize,
) {
    let step_str = solving
        .solution()
        .strip_prefix(base_prefix)
        .expect("samples extend the base prefix");
    decomp.steps.push(StepRecord {
        step_str,
        metric,
        samples_spent: sampler.drawn() - step_start,
        committed_at: sampler.drawn(),
        kind: StepKind::Solved,
    });
}

/// Fills in the generated samples, the returned solution (best drawn sample
/// that extends the committed prefix) and the solved flag.
pub(crate) fn finish(mut decomp: Decomposition, sampler: Sampler<'_>) -> Decomposition {
    decomp.generated_solutions = sampler.into_generated();
    let committed = decomp.committed_prefix();
    let extending: Vec<SampleRecord> = decomp
        .generated_solutions
        .iter()
        .filter(|s| s.solution().starts_with(&committed))
        .cloned()
        .collect();
    decomp.best = argmax_earliest(&extending)
        .or_else(|| decomp.best_generated())
        .cloned();
    decomp.solved = decomp.generated_solutions.iter().any(SampleRecord::is_correct);
    decomp
}

impl Sampler<'_> {
    pub(crate) fn remaining_draws(&self) -> usize {
        crate::stats::SampleSource::remaining(self)
    }
}
