//! Learning algorithms over `H_{d,k}`: the monotone-threshold metalearner
//! for two samples per task, the nonrealizable-count metalearner, the
//! agnostic mean-`q_h` metalearner, multitask ERM and per-task
//! specialization.
//!
//! The outer minimization over representations is a restarted local search
//! over maps with orthonormal rows. The inner minimization over specialists
//! is exact.

use std::sync::atomic::{AtomicUsize, Ordering};

use itertools::Itertools;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{
    apply_rep, dot, Halfspace, Label, LinearRep, Matrix, TaskDataset, TightSystem,
};
use crate::realizability::{
    best_fit, line_mistakes, monotone_scalars, realizable, separable_scalars, Family, MARGIN_TOL,
};
use crate::rng::{self, tags};
use crate::task_model::{random_orthonormal_rep, MetaSample};

/// Parameters of the restarted local search.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchConfig {
    pub restarts: usize,
    pub iters: usize,
    /// Initial perturbation scale.
    pub step0: f64,
    /// Multiplicative step decay per iteration.
    pub decay: f64,
    /// Random initial candidates per restart; the best one is refined.
    pub pool: usize,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { restarts: 32, iters: 400, step0: 0.5, decay: 0.95, pool: 8, seed: 0 }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.iters == 0 || self.pool == 0 {
            return Err(Error::invalid("restarts, iters and pool must be at least 1"));
        }
        if !(self.step0 > 0.0 && self.step0.is_finite()) {
            return Err(Error::invalid("initial step must be positive"));
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(Error::invalid("step decay must lie in (0, 1]"));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        SearchConfig { seed, ..self.clone() }
    }
}

/// Best representation found by a search, its objective, and the accepted
/// objective after every iteration of the winning restart.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchOutcome {
    pub rep: LinearRep,
    pub objective: f64,
    pub restart: usize,
    pub trace: Vec<f64>,
}

/// Restarted local search minimizing a nonnegative `objective` over `k×d`
/// representations with orthonormal rows.
///
/// Each restart starts from the best of `cfg.pool` random candidates, then
/// repeatedly perturbs one entry by `step · N(0,1)` and keeps the move iff the
/// objective does not increase. The result is the argmin over restarts with
/// ties going to the lowest restart index; restarts above the first one that
/// reaches zero are skipped, which does not change that argmin.
pub fn local_search<F>(k: usize, d: usize, cfg: &SearchConfig, objective: F) -> Result<SearchOutcome>
where
    F: Fn(&LinearRep) -> f64 + Sync,
{
    cfg.validate()?;
    if k == 0 || d == 0 || k > d {
        return Err(Error::invalid(format!("need 1 <= k <= d, got k={k}, d={d}")));
    }
    let first_zero = AtomicUsize::new(usize::MAX);
    let runs: Vec<Option<SearchOutcome>> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            if first_zero.load(Ordering::Relaxed) < r {
                return None;
            }
            let out = run_restart(k, d, cfg, r, &objective, &first_zero)?;
            if out.objective <= 0.0 {
                first_zero.fetch_min(r, Ordering::Relaxed);
            }
            Some(out)
        })
        .collect();
    let best = runs
        .into_iter()
        .flatten()
        .reduce(|best, cand| if cand.objective < best.objective { cand } else { best })
        .expect("restart 0 always runs");
    Ok(best)
}

fn run_restart<F>(
    k: usize,
    d: usize,
    cfg: &SearchConfig,
    r: usize,
    objective: &F,
    first_zero: &AtomicUsize,
) -> Option<SearchOutcome>
where
    F: Fn(&LinearRep) -> f64,
{
    let mut rng = rng::stream(cfg.seed, tags::RESTART, r as u64);
    let mut current = random_orthonormal_rep(k, d, &mut rng);
    let mut value = objective(&current);
    for _ in 1..cfg.pool {
        let cand = random_orthonormal_rep(k, d, &mut rng);
        let v = objective(&cand);
        if v < value {
            current = cand;
            value = v;
        }
    }
    let mut trace = Vec::with_capacity(cfg.iters + 1);
    trace.push(value);
    let mut step = cfg.step0;
    for it in 0..cfg.iters {
        if value <= 0.0 {
            break;
        }
        if it % 16 == 0 && first_zero.load(Ordering::Relaxed) < r {
            return None;
        }
        let mut data = current.as_slice().to_vec();
        let entry = rng.gen_range(0..k * d);
        let z: f64 = StandardNormal.sample(&mut rng);
        data[entry] += step * z;
        let cand = LinearRep::new(k, d, data).ok().and_then(|c| c.orthonormalized());
        if let Some(cand) = cand {
            let v = objective(&cand);
            if v <= value {
                current = cand;
                value = v;
            }
        }
        trace.push(value);
        step *= cfg.decay;
    }
    Some(SearchOutcome { rep: current, objective: value, restart: r, trace })
}

/// All task points in one contiguous buffer, for allocation-free
/// projections onto a single direction.
struct FlatTasks {
    d: usize,
    offsets: Vec<usize>,
    xs: Vec<f64>,
    ys: Vec<Label>,
}

impl FlatTasks {
    fn new(tasks: &[TaskDataset]) -> Result<Self> {
        let d = tasks.first().ok_or_else(|| Error::invalid("no tasks"))?.dim();
        let mut offsets = vec![0];
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for t in tasks {
            if t.dim() != d {
                return Err(Error::invalid("tasks must share a dimension"));
            }
            if t.is_empty() {
                return Err(Error::invalid("tasks must be nonempty"));
            }
            for p in t.iter() {
                xs.extend_from_slice(p.x());
                ys.push(p.y());
            }
            offsets.push(ys.len());
        }
        Ok(FlatTasks { d, offsets, xs, ys })
    }

    fn tasks(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Calls `f(z, y)` with each task projected onto `b`.
    fn for_each_projected<G: FnMut(&[f64], &[Label])>(&self, b: &[f64], mut f: G) {
        let mut z = Vec::new();
        for (lo, hi) in self.offsets.iter().tuple_windows() {
            z.clear();
            z.extend((*lo..*hi).map(|i| dot(&self.xs[i * self.d..(i + 1) * self.d], b)));
            f(&z, &self.ys[*lo..*hi]);
        }
    }
}

/// Counts tasks whose image under `rep` is not realizable by `family`.
pub struct NonrealizableCount<'a> {
    tasks: &'a [TaskDataset],
    flat: FlatTasks,
    family: Family,
}

impl<'a> NonrealizableCount<'a> {
    pub fn new(tasks: &'a [TaskDataset], family: Family) -> Result<Self> {
        Ok(NonrealizableCount { tasks, flat: FlatTasks::new(tasks)?, family })
    }

    pub fn eval(&self, rep: &LinearRep) -> Result<usize> {
        if rep.d() != self.flat.d {
            return Err(Error::invalid("representation dimension mismatch"));
        }
        if rep.k() == 1 {
            let mut bad = 0;
            let b = rep.row(0);
            self.flat.for_each_projected(b, |z, y| {
                let ok = match self.family {
                    Family::Monotone => monotone_scalars(z, y),
                    Family::Halfspace => separable_scalars(z, y),
                };
                if !ok {
                    bad += 1;
                }
            });
            return Ok(bad);
        }
        let mut bad = 0;
        for t in self.tasks {
            if !realizable(&apply_rep(rep, t)?, self.family)? {
                bad += 1;
            }
        }
        Ok(bad)
    }
}

/// Mean over tasks of the exact empirical error `q_h`.
pub struct MeanEmpiricalError<'a> {
    tasks: &'a [TaskDataset],
    flat: FlatTasks,
    family: Family,
}

impl<'a> MeanEmpiricalError<'a> {
    pub fn new(tasks: &'a [TaskDataset], family: Family) -> Result<Self> {
        Ok(MeanEmpiricalError { tasks, flat: FlatTasks::new(tasks)?, family })
    }

    pub fn eval(&self, rep: &LinearRep) -> Result<f64> {
        if rep.d() != self.flat.d {
            return Err(Error::invalid("representation dimension mismatch"));
        }
        let t = self.flat.tasks() as f64;
        if rep.k() == 1 {
            let mut total = 0.0;
            self.flat.for_each_projected(rep.row(0), |z, y| {
                total += line_mistakes(z, y, self.family) as f64 / z.len() as f64;
            });
            return Ok(total / t);
        }
        let mut total = 0.0;
        for task in self.tasks {
            let fit = best_fit(&apply_rep(rep, task)?, self.family)?;
            total += fit.loss / task.len() as f64;
        }
        Ok(total / t)
    }
}

/// Result of the two-sample monotone metalearner.
#[derive(Clone, Debug, PartialEq)]
pub struct MonotoneFit {
    pub rep: LinearRep,
    /// Tasks whose pair `h` orders incorrectly.
    pub violations: usize,
    /// Whether zero violations was certified by the exact subset search or
    /// reached by the iterative fallback.
    pub exact: bool,
}

/// Subset enumeration is used only while `Σ_{s≤d} C(m, s)` stays below this.
pub const MONOTONE_ENUMERATION_CAP: u64 = 200_000;
/// Dimension above which the exact enumeration is never attempted.
pub const MONOTONE_ENUMERATION_MAX_DIM: usize = 8;
const PERCEPTRON_EPOCHS: usize = 20_000;

fn subset_count(m: usize, d: usize, cap: u64) -> u64 {
    let mut total = 0u64;
    let mut binom = 1u64;
    for s in 1..=d.min(m) {
        binom = binom.saturating_mul((m - s + 1) as u64) / s as u64;
        total = total.saturating_add(binom);
        if total > cap {
            return total;
        }
    }
    total
}

/// Difference vectors `x_+ − x_−` of the opposite-label tasks.
fn difference_vectors(sample: &MetaSample) -> Result<Vec<Vec<f64>>> {
    let mut diffs = Vec::new();
    for (j, task) in sample.tasks().iter().enumerate() {
        if task.len() != 2 {
            return Err(Error::invalid(format!(
                "task {j} has {} points; the monotone learner needs exactly 2",
                task.len()
            )));
        }
        let (p, q) = (task.point(0), task.point(1));
        if p.y() == q.y() {
            continue;
        }
        let (pos, neg) = if p.y() == Label::Pos { (p, q) } else { (q, p) };
        diffs.push(pos.x().iter().zip(neg.x()).map(|(a, b)| a - b).collect());
    }
    Ok(diffs)
}

fn violated(b: &[f64], diffs: &[Vec<f64>]) -> usize {
    diffs.iter().filter(|u| dot(b, u) <= 0.0).count()
}

fn homogeneous_by_enumeration(diffs: &[Vec<f64>], d: usize) -> Option<Vec<f64>> {
    let m = diffs.len();
    for size in 1..=d.min(m) {
        for subset in (0..m).combinations(size) {
            let rows: Vec<Vec<f64>> = subset.iter().map(|&i| diffs[i].clone()).collect();
            let u = Matrix::from_rows(&rows).ok()?;
            let Ok(sys) = TightSystem::factor(&u) else { continue };
            let Ok(b) = sys.solve(&vec![1.0; size]) else { continue };
            if diffs.iter().all(|v| dot(v, &b) >= 1.0 - MARGIN_TOL) && violated(&b, diffs) == 0 {
                return Some(b);
            }
        }
    }
    None
}

/// Pocket perceptron on the normalized constraints `b·u_j > 0`.
fn homogeneous_by_perceptron(diffs: &[Vec<f64>], d: usize) -> Vec<f64> {
    let units: Vec<Vec<f64>> = diffs
        .iter()
        .map(|u| {
            let n = dot(u, u).sqrt();
            u.iter().map(|v| v / n).collect()
        })
        .collect();
    let mut b: Vec<f64> = vec![0.0; d];
    for u in &units {
        for (bi, ui) in b.iter_mut().zip(u) {
            *bi += ui;
        }
    }
    let mut pocket = b.clone();
    let mut pocket_bad = violated(&pocket, diffs);
    for _ in 0..PERCEPTRON_EPOCHS {
        if pocket_bad == 0 {
            break;
        }
        let mut updates = 0;
        for u in &units {
            if dot(&b, u) <= 0.0 {
                for (bi, ui) in b.iter_mut().zip(u) {
                    *bi += ui;
                }
                updates += 1;
            }
        }
        let bad = violated(&b, diffs);
        if bad < pocket_bad {
            pocket = b.clone();
            pocket_bad = bad;
        }
        if updates == 0 {
            break;
        }
    }
    pocket
}

/// Two samples per task, monotone thresholds over `x ↦ b·x`: find `b` with
/// `b·(x_+ − x_−) > 0` on every opposite-label task.
pub fn metalearn_monotone(sample: &MetaSample) -> Result<MonotoneFit> {
    let d = sample.d();
    let diffs = difference_vectors(sample)?;
    let unit = |mut b: Vec<f64>| -> Result<LinearRep> {
        let n = dot(&b, &b).sqrt();
        if n.is_nan() || n <= 0.0 {
            b = vec![0.0; d];
            b[0] = 1.0;
        } else {
            b.iter_mut().for_each(|v| *v /= n);
        }
        LinearRep::new(1, d, b)
    };
    if diffs.is_empty() {
        let mut e1 = vec![0.0; d];
        e1[0] = 1.0;
        return Ok(MonotoneFit { rep: unit(e1)?, violations: 0, exact: true });
    }
    let enumerable = d <= MONOTONE_ENUMERATION_MAX_DIM
        && subset_count(diffs.len(), d, MONOTONE_ENUMERATION_CAP) <= MONOTONE_ENUMERATION_CAP;
    if enumerable {
        if let Some(b) = homogeneous_by_enumeration(&diffs, d) {
            return Ok(MonotoneFit { rep: unit(b)?, violations: 0, exact: true });
        }
    }
    let b = homogeneous_by_perceptron(&diffs, d);
    let rep = unit(b)?;
    let violations = violated(rep.row(0), &diffs);
    Ok(MonotoneFit { rep, violations, exact: false })
}

/// Minimizes the number of tasks that are not realizable after mapping
/// through the candidate representation.
pub fn metalearn_realizable(
    sample: &MetaSample,
    family: Family,
    k: usize,
    cfg: &SearchConfig,
) -> Result<SearchOutcome> {
    if family == Family::Monotone && k != 1 {
        return Err(Error::invalid("monotone thresholds need k = 1"));
    }
    if family == Family::Monotone && sample.n() == 2 {
        let fit = metalearn_monotone(sample)?;
        let v = fit.violations as f64;
        return Ok(SearchOutcome { rep: fit.rep, objective: v, restart: 0, trace: vec![v] });
    }
    let count = NonrealizableCount::new(sample.tasks(), family)?;
    local_search(k, sample.d(), cfg, |rep| {
        count.eval(rep).map_or(f64::INFINITY, |c| c as f64)
    })
}

/// Minimizes the mean exact empirical error across tasks.
pub fn metalearn_agnostic(
    sample: &MetaSample,
    family: Family,
    k: usize,
    cfg: &SearchConfig,
) -> Result<SearchOutcome> {
    if family == Family::Monotone && k != 1 {
        return Err(Error::invalid("monotone thresholds need k = 1"));
    }
    let mean = MeanEmpiricalError::new(sample.tasks(), family)?;
    local_search(k, sample.d(), cfg, |rep| mean.eval(rep).unwrap_or(f64::INFINITY))
}

/// A shared representation plus one specialist per task.
#[derive(Clone, Debug, PartialEq)]
pub struct MultitaskModel {
    rep: LinearRep,
    specialists: Vec<Halfspace>,
    training_error: f64,
}

impl MultitaskModel {
    pub fn new(rep: LinearRep, specialists: Vec<Halfspace>, training_error: f64) -> Result<Self> {
        if specialists.is_empty() {
            return Err(Error::invalid("a multitask model needs at least one specialist"));
        }
        if specialists.iter().any(|h| h.k() != rep.k()) {
            return Err(Error::invalid("specialist dimension differs from representation"));
        }
        Ok(MultitaskModel { rep, specialists, training_error })
    }

    pub fn rep(&self) -> &LinearRep {
        &self.rep
    }

    pub fn specialists(&self) -> &[Halfspace] {
        &self.specialists
    }

    /// `(1/t) Σ_j err(S_j, f_j ∘ h)` on the training data.
    pub fn training_error(&self) -> f64 {
        self.training_error
    }

    /// `g(j, x) = f_j(B x)`.
    pub fn classify(&self, task: usize, x: &[f64]) -> Label {
        self.specialists[task].classify(&self.rep.apply(x))
    }

    pub fn error_on(&self, task: usize, data: &TaskDataset) -> f64 {
        if data.is_empty() {
            return 0.0;
        }
        let wrong = data.iter().filter(|p| self.classify(task, p.x()) != p.y()).count();
        wrong as f64 / data.len() as f64
    }
}

/// ERM over `F^{⊗t} ∘ H_{d,k}`: search over the shared map with the
/// per-task specialists fitted exactly.
pub fn multitask_erm(
    tasks: &[TaskDataset],
    k: usize,
    family: Family,
    cfg: &SearchConfig,
) -> Result<MultitaskModel> {
    if tasks.is_empty() {
        return Err(Error::invalid("multitask ERM needs at least one task"));
    }
    let mean = MeanEmpiricalError::new(tasks, family)?;
    let d = tasks[0].dim();
    let out = local_search(k, d, cfg, |rep| mean.eval(rep).unwrap_or(f64::INFINITY))?;
    let specialists = tasks
        .iter()
        .map(|t| specialize(&out.rep, t, family))
        .collect::<Result<Vec<_>>>()?;
    MultitaskModel::new(out.rep, specialists, out.objective)
}

/// Exact ERM over the family on a task mapped through `rep`.
pub fn specialize(rep: &LinearRep, data: &TaskDataset, family: Family) -> Result<Halfspace> {
    if data.is_empty() {
        return Err(Error::invalid("cannot specialize on an empty dataset"));
    }
    Ok(best_fit(&apply_rep(rep, data)?, family)?.halfspace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Dataset;
    use crate::realizability::empirical_error;
    use crate::task_model::{general_position, random_rep, sample_meta, Stream, SyntheticMeta};
    use Label::{Neg, Pos};

    fn pair(a: Vec<f64>, ya: Label, b: Vec<f64>, yb: Label) -> TaskDataset {
        Dataset::from_pairs(vec![(a, ya), (b, yb)]).unwrap()
    }

    #[test]
    fn monotone_same_label_pairs_are_unconstrained() {
        let tasks = vec![
            pair(vec![1.0, 2.0], Pos, vec![0.0, 1.0], Pos),
            pair(vec![3.0, 2.0], Neg, vec![0.0, -1.0], Neg),
        ];
        let fit = metalearn_monotone(&MetaSample::from_tasks(tasks).unwrap()).unwrap();
        assert_eq!(fit.violations, 0);
        assert!((dot(fit.rep.row(0), fit.rep.row(0)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn monotone_positive_quadrant() {
        let tasks = vec![
            pair(vec![1.0, 0.0], Pos, vec![0.0, 0.0], Neg),
            pair(vec![0.0, 0.0], Neg, vec![0.0, 1.0], Pos),
        ];
        let fit = metalearn_monotone(&MetaSample::from_tasks(tasks).unwrap()).unwrap();
        let b = fit.rep.row(0);
        assert!(b[0] > 0.0 && b[1] > 0.0, "{b:?}");
        assert_eq!(fit.violations, 0);
        assert!(fit.exact);
    }

    #[test]
    fn monotone_rejects_wrong_sample_size() {
        let tasks = vec![Dataset::from_scalars(&[(0.0, Pos), (1.0, Neg), (2.0, Pos)]).unwrap()];
        let s = MetaSample::from_tasks(tasks).unwrap();
        assert!(matches!(metalearn_monotone(&s), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn monotone_realizable_meta_has_no_violations() {
        for d in [3, 10] {
            let meta = SyntheticMeta::standard(d, 1, Family::Monotone, 0.0, 4).unwrap();
            let s = sample_meta(&meta, 400, 2, Stream::Train).unwrap();
            let fit = metalearn_monotone(&s).unwrap();
            assert_eq!(fit.violations, 0, "d = {d}");
            let count = NonrealizableCount::new(s.tasks(), Family::Monotone).unwrap();
            assert_eq!(count.eval(&fit.rep).unwrap(), 0);
        }
    }

    #[test]
    fn realizable_learner_delegates_for_monotone_pairs() {
        let meta = SyntheticMeta::standard(4, 1, Family::Monotone, 0.0, 9).unwrap();
        let s = sample_meta(&meta, 100, 2, Stream::Train).unwrap();
        let out = metalearn_realizable(&s, Family::Monotone, 1, &SearchConfig::default()).unwrap();
        assert_eq!(out.rep, metalearn_monotone(&s).unwrap().rep);
    }

    #[test]
    fn ground_truth_attains_zero_objectives() {
        let meta = SyntheticMeta::standard(6, 2, Family::Halfspace, 0.0, 2).unwrap();
        let s = sample_meta(&meta, 40, 4, Stream::Train).unwrap();
        let count = NonrealizableCount::new(s.tasks(), Family::Halfspace).unwrap();
        assert_eq!(count.eval(meta.b_star()).unwrap(), 0);
        let mean = MeanEmpiricalError::new(s.tasks(), Family::Halfspace).unwrap();
        assert_eq!(mean.eval(meta.b_star()).unwrap(), 0.0);
    }

    #[test]
    fn k_plus_one_samples_give_no_signal() {
        let meta = SyntheticMeta::standard(4, 2, Family::Halfspace, 0.0, 5).unwrap();
        let s = sample_meta(&meta, 200, 3, Stream::Train).unwrap();
        let mut rng = rng::stream(1, tags::CUSTOM, 0);
        for _ in 0..25 {
            let b = random_rep(2, 4, &mut rng);
            for task in s.tasks() {
                let mapped = apply_rep(&b, task).unwrap();
                if general_position(&mapped) {
                    assert!(realizable(&mapped, Family::Halfspace).unwrap());
                }
            }
        }
    }

    #[test]
    fn conflicts_bound_the_agnostic_objective() {
        let x = vec![0.3, -0.2];
        let tasks = vec![
            Dataset::from_pairs(vec![
                (x.clone(), Pos),
                (x.clone(), Neg),
                (vec![1.0, 1.0], Pos),
                (vec![-1.0, 0.5], Neg),
            ])
            .unwrap(),
            Dataset::from_pairs(vec![
                (vec![2.0, 0.0], Pos),
                (vec![2.0, 0.0], Neg),
                (vec![0.0, 1.0], Neg),
                (vec![0.5, 0.5], Pos),
            ])
            .unwrap(),
        ];
        let s = MetaSample::from_tasks(tasks).unwrap();
        let cfg = SearchConfig { restarts: 3, iters: 50, ..SearchConfig::default() };
        let out = metalearn_agnostic(&s, Family::Halfspace, 1, &cfg).unwrap();
        assert!(out.objective >= 2.0 / 8.0 - 1e-12);
    }

    #[test]
    fn single_square_task_matches_direct_erm() {
        let meta = SyntheticMeta::standard(2, 2, Family::Halfspace, 0.3, 12).unwrap();
        let s = sample_meta(&meta, 1, 12, Stream::Train).unwrap();
        let direct = empirical_error(&LinearRep::identity(2), &s.tasks()[0], Family::Halfspace).unwrap();
        let cfg = SearchConfig { restarts: 2, iters: 10, ..SearchConfig::default() };
        let out = metalearn_agnostic(&s, Family::Halfspace, 2, &cfg).unwrap();
        assert_eq!(out.objective, direct);
    }

    #[test]
    fn search_trace_never_increases() {
        let meta = SyntheticMeta::standard(5, 1, Family::Halfspace, 0.1, 31).unwrap();
        let s = sample_meta(&meta, 40, 6, Stream::Train).unwrap();
        let mean = MeanEmpiricalError::new(s.tasks(), Family::Halfspace).unwrap();
        let cfg = SearchConfig { restarts: 4, iters: 120, ..SearchConfig::default() };
        let out = local_search(1, 5, &cfg, |r| mean.eval(r).unwrap()).unwrap();
        assert!(out.trace.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(*out.trace.last().unwrap(), out.objective);
        assert_eq!(out.objective, mean.eval(&out.rep).unwrap());
    }

    #[test]
    fn search_is_deterministic() {
        let meta = SyntheticMeta::standard(5, 1, Family::Halfspace, 0.1, 32).unwrap();
        let s = sample_meta(&meta, 30, 5, Stream::Train).unwrap();
        let cfg = SearchConfig { restarts: 5, iters: 60, seed: 3, ..SearchConfig::default() };
        let a = metalearn_agnostic(&s, Family::Halfspace, 1, &cfg).unwrap();
        let b = metalearn_agnostic(&s, Family::Halfspace, 1, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn objectives_are_gl_invariant() {
        let meta = SyntheticMeta::standard(4, 2, Family::Halfspace, 0.2, 40).unwrap();
        let s = sample_meta(&meta, 15, 6, Stream::Train).unwrap();
        let count = NonrealizableCount::new(s.tasks(), Family::Halfspace).unwrap();
        let mean = MeanEmpiricalError::new(s.tasks(), Family::Halfspace).unwrap();
        let mut rng = rng::stream(2, tags::CUSTOM, 1);
        for _ in 0..5 {
            let b = random_rep(2, 4, &mut rng);
            let m = Matrix::from_rows(&[vec![2.0, 0.5], vec![-1.0, 3.0]]).unwrap();
            let mb = b.left_multiply(&m).unwrap();
            assert_eq!(count.eval(&b).unwrap(), count.eval(&mb).unwrap());
            assert!((mean.eval(&b).unwrap() - mean.eval(&mb).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn multitask_identical_separable_tasks() {
        let task = Dataset::from_pairs(vec![
            (vec![0.0, 0.0], Neg),
            (vec![1.0, 0.2], Neg),
            (vec![0.0, 2.0], Pos),
            (vec![1.5, 1.8], Pos),
        ])
        .unwrap();
        let tasks = vec![task.clone(), task.clone(), task];
        let cfg = SearchConfig { restarts: 2, iters: 20, ..SearchConfig::default() };
        let model = multitask_erm(&tasks, 2, Family::Halfspace, &cfg).unwrap();
        assert_eq!(model.training_error(), 0.0);
        assert_eq!(model.specialists().len(), 3);
        for (j, t) in tasks.iter().enumerate() {
            assert_eq!(model.error_on(j, t), 0.0);
        }
    }

    #[test]
    fn multitask_few_tasks_realized_by_stacked_separators() {
        // t = 2 <= k = 2, each task separable in R^3 with its own normal
        let meta_a = SyntheticMeta::standard(3, 3, Family::Halfspace, 0.0, 50).unwrap();
        let meta_b = SyntheticMeta::standard(3, 3, Family::Halfspace, 0.0, 51).unwrap();
        let tasks = vec![
            meta_a.task(Stream::Train, 0).draw(0, 10),
            meta_b.task(Stream::Train, 0).draw(0, 10),
        ];
        let seps: Vec<Halfspace> = tasks
            .iter()
            .map(|t| specialize(&LinearRep::identity(3), t, Family::Halfspace).unwrap())
            .collect();
        let b = LinearRep::from_rows(&[seps[0].a().to_vec(), seps[1].a().to_vec()]).unwrap();
        let mean = MeanEmpiricalError::new(&tasks, Family::Halfspace).unwrap();
        assert_eq!(mean.eval(&b).unwrap(), 0.0);
    }

    #[test]
    fn specialize_examples() {
        let id = LinearRep::identity(1);
        let pmp = Dataset::from_scalars(&[(0.0, Pos), (1.0, Neg), (2.0, Pos)]).unwrap();
        let h = specialize(&id, &pmp, Family::Halfspace).unwrap();
        let mapped = apply_rep(&id, &pmp).unwrap();
        assert_eq!(h.mistakes(&mapped), 1);
        let single = Dataset::from_scalars(&[(3.0, Pos)]).unwrap();
        assert_eq!(specialize(&id, &single, Family::Halfspace).unwrap().classify(&[3.0]), Pos);
        assert!(specialize(&id, &Dataset::empty(1).unwrap(), Family::Halfspace).is_err());
    }

    #[test]
    fn multitask_model_contract() {
        let rep = LinearRep::identity(2);
        assert!(MultitaskModel::new(rep.clone(), vec![], 0.0).is_err());
        let h = Halfspace::new(vec![1.0], 0.0).unwrap();
        assert!(MultitaskModel::new(rep, vec![h], 0.0).is_err());
    }
}
