//! The two generic reductions: an improper metalearner built from a
//! multitask learner, and a multitask learner built from a metalearner with
//! balls-and-bins budgeting of the per-task samples.

use std::ops::Range;

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{Label, LinearRep, TaskDataset};
use crate::learners::{multitask_erm, specialize, MultitaskModel, SearchConfig};
use crate::realizability::Family;
use crate::rng::{self, tags};
use crate::task_model::MetaSample;

/// The stored training tasks of the metalearner built from multitask ERM.
#[derive(Clone, Debug)]
pub struct StoredSpecializer {
    stored: Vec<TaskDataset>,
    k: usize,
    family: Family,
    search: SearchConfig,
    seed: u64,
}

impl StoredSpecializer {
    pub fn new(
        stored: Vec<TaskDataset>,
        k: usize,
        family: Family,
        search: SearchConfig,
        seed: u64,
    ) -> Result<Self> {
        let first = stored.first().ok_or_else(|| Error::invalid("need at least one stored task"))?;
        let (d, n) = (first.dim(), first.len());
        if stored.iter().any(|t| t.dim() != d || t.len() != n) {
            return Err(Error::invalid("stored tasks must share dimension and size"));
        }
        if n == 0 {
            return Err(Error::invalid("stored tasks must be nonempty"));
        }
        search.validate()?;
        Ok(StoredSpecializer { stored, k, family, search, seed })
    }

    pub fn t(&self) -> usize {
        self.stored.len()
    }

    pub fn n(&self) -> usize {
        self.stored[0].len()
    }

    pub fn d(&self) -> usize {
        self.stored[0].dim()
    }
}

/// Slot in `0..=t` at which the new task is inserted.
pub fn insertion_slot(seed: u64, t: usize) -> usize {
    rng::stream(seed, tags::REDUCTION, 0).gen_range(0..=t)
}

/// The classifier returned for a new task. It wraps a joint model over all
/// `t + 1` tasks and exposes only its prediction on the new one.
///
/// ```compile_fail
/// fn rep_of(c: &replearn::reductions::ImproperClassifier) {
///     let _ = c.rep();
/// }
/// ```
#[derive(Clone, Debug)]
pub struct ImproperClassifier {
    model: MultitaskModel,
    slot: usize,
}

impl ImproperClassifier {
    pub fn classify(&self, x: &[f64]) -> Label {
        self.model.classify(self.slot, x)
    }

    /// Where the new task sat among the `t + 1` tasks.
    pub fn slot(&self) -> usize {
        self.slot
    }

    pub fn error_on(&self, data: &TaskDataset) -> f64 {
        self.model.error_on(self.slot, data)
    }
}

/// Inserts `new_data` among the stored tasks at a uniform slot, runs
/// multitask ERM on all `t + 1` tasks and keeps the new task's classifier.
pub fn meta_from_multitask(
    stored: &StoredSpecializer,
    new_data: &TaskDataset,
) -> Result<ImproperClassifier> {
    if new_data.len() != stored.n() || new_data.dim() != stored.d() {
        return Err(Error::invalid(format!(
            "new task has {} points in dimension {}, stored tasks have {} in dimension {}",
            new_data.len(),
            new_data.dim(),
            stored.n(),
            stored.d()
        )));
    }
    let slot = insertion_slot(stored.seed, stored.t());
    let mut tasks = stored.stored.clone();
    tasks.insert(slot, new_data.clone());
    let model = multitask_erm(&tasks, stored.k, stored.family, &stored.search)?;
    Ok(ImproperClassifier { model, slot })
}

/// `⌈2 ln(c t)⌉`: draws of each task the multitask-from-meta reduction can
/// serve before it fails.
pub fn resampling_budget(c: f64, t: usize) -> Result<usize> {
    if !(c > 0.0 && c.is_finite()) || t == 0 {
        return Err(Error::invalid("need c > 0 and t >= 1"));
    }
    Ok((2.0 * (c * t as f64).ln()).ceil().max(1.0) as usize)
}

/// `ln((t/δ)²) / ln ln((t/δ)²)`: with probability at least `1 − δ`, no bin
/// receives more than this many of `t` uniform balls over `t` bins.
pub fn balls_and_bins_cap(t: usize, delta: f64) -> Result<f64> {
    if t == 0 || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid("need t >= 1 and delta in (0, 1)"));
    }
    let l = (2.0 * (t as f64 / delta).ln()).max(std::f64::consts::E);
    Ok(l / l.ln())
}

/// Where every point consumed by the reduction came from.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleLedger {
    /// For each constructed metalearning dataset: source task and range.
    pub draws: Vec<(usize, Range<usize>)>,
    /// For each original task: the range reserved for specialization.
    pub spec: Vec<Range<usize>>,
}

impl SampleLedger {
    /// No point appears in two draws, or in a draw and a specialization set.
    pub fn is_disjoint(&self) -> bool {
        let mut used: Vec<Vec<Range<usize>>> = vec![Vec::new(); self.spec.len()];
        let all = self
            .draws
            .iter()
            .cloned()
            .chain(self.spec.iter().cloned().enumerate());
        for (task, r) in all {
            if used[task].iter().any(|u| u.start < r.end && r.start < u.end) {
                return false;
            }
            used[task].push(r);
        }
        true
    }
}

/// Outcome of carving a metalearning sample out of the task pools.
#[derive(Clone, Debug)]
pub enum Carving {
    Ready { sample: MetaSample, spec_sets: Vec<TaskDataset>, ledger: SampleLedger },
    /// Some task was drawn more often than its pool allows.
    Bot,
}

/// Draws `t` task indices uniformly with replacement and gives each draw the
/// next `n` unused points of its task. Each task's last `n_spec` points are
/// reserved for specialization and the `per_task_draws · n` points before
/// them form its pool.
pub fn carve_meta_sample(
    tasks: &[TaskDataset],
    n: usize,
    n_spec: usize,
    per_task_draws: usize,
    seed: u64,
) -> Result<Carving> {
    if tasks.is_empty() || n == 0 || n_spec == 0 || per_task_draws == 0 {
        return Err(Error::invalid("need t, n, n_spec and the draw budget all at least 1"));
    }
    let need = n * per_task_draws + n_spec;
    if let Some((j, task)) = tasks.iter().enumerate().find(|(_, t)| t.len() < need) {
        return Err(Error::invalid(format!(
            "task {j} has {} points; the budget needs {need}",
            task.len()
        )));
    }
    let t = tasks.len();
    let mut rng = rng::stream(seed, tags::REDUCTION, 1);
    let mut cursor = vec![0usize; t];
    let mut draws = Vec::with_capacity(t);
    for _ in 0..t {
        let j = rng.gen_range(0..t);
        if cursor[j] + n > n * per_task_draws {
            return Ok(Carving::Bot);
        }
        draws.push((j, cursor[j]..cursor[j] + n));
        cursor[j] += n;
    }
    let spec: Vec<Range<usize>> = tasks.iter().map(|t| t.len() - n_spec..t.len()).collect();
    let sample = MetaSample::from_tasks(
        draws.iter().map(|(j, r)| tasks[*j].slice(r.start, r.len())).collect(),
    )?;
    let spec_sets = tasks.iter().zip(&spec).map(|(t, r)| t.slice(r.start, r.len())).collect();
    Ok(Carving::Ready { sample, spec_sets, ledger: SampleLedger { draws, spec } })
}

/// Result of the multitask-from-meta reduction.
#[derive(Clone, Debug)]
pub enum MultitaskOutcome {
    Classifiers(MultitaskModel),
    Bot,
}

/// Multitask learning from a metalearner: carve a metalearning sample with
/// the `⌈2 ln(c t)⌉` draw budget, learn a representation from it, then
/// specialize every original task on its reserved points. The model's
/// training error is measured on those reserved points.
pub fn multitask_from_meta<M>(
    tasks: &[TaskDataset],
    c: f64,
    n: usize,
    n_spec: usize,
    family: Family,
    seed: u64,
    metalearner: M,
) -> Result<MultitaskOutcome>
where
    M: FnOnce(&MetaSample) -> Result<LinearRep>,
{
    let budget = resampling_budget(c, tasks.len())?;
    let (sample, spec_sets) = match carve_meta_sample(tasks, n, n_spec, budget, seed)? {
        Carving::Bot => return Ok(MultitaskOutcome::Bot),
        Carving::Ready { sample, spec_sets, .. } => (sample, spec_sets),
    };
    let rep = metalearner(&sample)?;
    let specialists = spec_sets
        .iter()
        .map(|s| specialize(&rep, s, family))
        .collect::<Result<Vec<_>>>()?;
    let provisional = MultitaskModel::new(rep.clone(), specialists.clone(), 0.0)?;
    let err = spec_sets
        .iter()
        .enumerate()
        .map(|(j, s)| provisional.error_on(j, s))
        .sum::<f64>()
        / spec_sets.len() as f64;
    Ok(MultitaskOutcome::Classifiers(MultitaskModel::new(rep, specialists, err)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Dataset;
    use crate::learners::metalearn_realizable;
    use crate::task_model::{Stream, SyntheticMeta};
    use Label::{Neg, Pos};

    fn search() -> SearchConfig {
        SearchConfig { restarts: 2, iters: 30, ..SearchConfig::default() }
    }

    #[test]
    fn budget_arithmetic() {
        assert_eq!(resampling_budget(8.0, 4).unwrap(), 7);
        assert_eq!(resampling_budget(8.0, 1).unwrap(), 5);
        assert!(resampling_budget(0.0, 4).is_err());
        assert!(resampling_budget(8.0, 0).is_err());
        assert!((balls_and_bins_cap(32, 0.1).unwrap() - 4.7183).abs() < 1e-3);
        assert!(balls_and_bins_cap(32, 0.0).is_err());
    }

    #[test]
    fn duplicated_task_is_fit_exactly() {
        let task = Dataset::from_pairs(vec![
            (vec![0.0, 1.0], Pos),
            (vec![1.0, 1.5], Pos),
            (vec![0.0, -1.0], Neg),
            (vec![-1.0, -0.5], Neg),
        ])
        .unwrap();
        let stored = StoredSpecializer::new(vec![task.clone()], 1, Family::Halfspace, search(), 3)
            .unwrap();
        let clf = meta_from_multitask(&stored, &task).unwrap();
        assert_eq!(clf.error_on(&task), 0.0);
        assert!(clf.slot() <= 1);
    }

    #[test]
    fn mismatched_new_task_is_rejected() {
        let task = Dataset::from_scalars(&[(0.0, Pos), (1.0, Neg)]).unwrap();
        let stored = StoredSpecializer::new(vec![task], 1, Family::Halfspace, search(), 0).unwrap();
        let short = Dataset::from_scalars(&[(0.0, Pos)]).unwrap();
        assert!(matches!(meta_from_multitask(&stored, &short), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn insertion_slots_are_uniform() {
        let calls = 10_000;
        let mut counts = [0usize; 4];
        for seed in 0..calls {
            counts[insertion_slot(seed, 3)] += 1;
        }
        let p = 0.25;
        let sigma = (calls as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - calls as f64 * p).abs() <= 3.0 * sigma, "{counts:?}");
        }
    }

    fn pool(t: usize, size: usize, seed: u64) -> Vec<TaskDataset> {
        let meta = SyntheticMeta::standard(3, 1, Family::Halfspace, 0.0, seed).unwrap();
        (0..t as u64).map(|j| meta.task(Stream::Train, j).draw(0, size)).collect()
    }

    #[test]
    fn single_task_is_never_bot() {
        let tasks = pool(1, 5 * 2 + 4, 1);
        for seed in 0..50 {
            let out = carve_meta_sample(&tasks, 2, 4, resampling_budget(8.0, 1).unwrap(), seed);
            assert!(matches!(out.unwrap(), Carving::Ready { .. }));
        }
    }

    #[test]
    fn short_pools_are_rejected() {
        let tasks = pool(4, 7 * 2 + 3, 2);
        let budget = resampling_budget(8.0, 4).unwrap();
        assert!(carve_meta_sample(&tasks, 2, 4, budget, 0).is_err());
        assert!(carve_meta_sample(&tasks, 2, 3, budget, 0).is_ok());
    }

    #[test]
    fn carved_samples_are_disjoint() {
        let tasks = pool(6, 5 * 3 + 4, 3);
        let mut ready = 0;
        for seed in 0..200 {
            if let Carving::Ready { sample, spec_sets, ledger } =
                carve_meta_sample(&tasks, 3, 4, 5, seed).unwrap()
            {
                ready += 1;
                assert!(ledger.is_disjoint());
                assert_eq!(sample.t(), 6);
                assert_eq!(sample.n(), 3);
                for (i, (j, r)) in ledger.draws.iter().enumerate() {
                    assert_eq!(sample.tasks()[i], tasks[*j].slice(r.start, r.len()));
                }
                assert!(spec_sets.iter().all(|s| s.len() == 4));
            }
        }
        assert!(ready > 0);
        let overlap = SampleLedger { draws: vec![(0, 0..3), (0, 2..5)], spec: std::iter::once(6..8).collect() };
        assert!(!overlap.is_disjoint());
    }

    #[test]
    fn bot_rate_respects_balls_and_bins() {
        let t = 32;
        let runs = 1000;
        let tasks: Vec<TaskDataset> = (0..t)
            .map(|j| Dataset::from_scalars(&vec![(j as f64, Pos); 16]).unwrap())
            .collect();
        for delta in [0.05, 0.1] {
            let cap = balls_and_bins_cap(t, delta).unwrap().floor() as usize;
            let bots = (0..runs)
                .filter(|&s| {
                    matches!(carve_meta_sample(&tasks, 1, 1, cap, s as u64).unwrap(), Carving::Bot)
                })
                .count();
            let rate = bots as f64 / runs as f64;
            let sigma = (delta * (1.0 - delta) / runs as f64).sqrt();
            assert!(rate <= delta + 3.0 * sigma, "delta {delta}: rate {rate}");
        }
    }

    #[test]
    fn multitask_from_meta_end_to_end() {
        let n = 3;
        let n_spec = 20;
        let t = 60;
        let budget = resampling_budget(8.0, t).unwrap();
        let tasks = pool(t, n * budget + n_spec, 4);
        let cfg = SearchConfig { restarts: 8, iters: 200, ..SearchConfig::default() };
        let out = multitask_from_meta(&tasks, 8.0, n, n_spec, Family::Halfspace, 1, |s| {
            Ok(metalearn_realizable(s, Family::Halfspace, 1, &cfg)?.rep)
        })
        .unwrap();
        match out {
            MultitaskOutcome::Classifiers(model) => {
                assert_eq!(model.specialists().len(), t);
                assert!(model.training_error() <= 0.2, "{}", model.training_error());
            }
            MultitaskOutcome::Bot => panic!("unexpected Bot"),
        }
    }
}
