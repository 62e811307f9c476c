//! Synthetic metadistributions over tasks that share a ground-truth linear
//! representation.
//!
//! A task is a halfspace `f_P` drawn from the specializer law; its points are
//! `x` from the feature law labeled `f_P(B* x)`, each label flipped
//! independently with probability `η`. Every task and every point has its own
//! counter-derived random stream, so datasets are a pure function of
//! `(seed, stream, task index, point index)`.

use itertools::Itertools;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{
    augment, Dataset, Halfspace, Label, LabeledPoint, LinearRep, RepDataset, TaskDataset,
    TightSystem,
};
use crate::realizability::Family;
use crate::rng::{self, tags};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FeatureLaw {
    /// Standard Gaussian in `R^d`.
    Gaussian,
    /// Uniform on `[−1, 1]^d`.
    UniformCube,
}

impl FeatureLaw {
    fn draw<R: Rng>(self, d: usize, rng: &mut R) -> Vec<f64> {
        match self {
            FeatureLaw::Gaussian => (0..d).map(|_| StandardNormal.sample(rng)).collect(),
            FeatureLaw::UniformCube => (0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect(),
        }
    }
}

impl std::str::FromStr for FeatureLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(FeatureLaw::Gaussian),
            "uniform" | "uniform_cube" => Ok(FeatureLaw::UniformCube),
            other => Err(Error::invalid(format!("unknown feature law `{other}`"))),
        }
    }
}

impl std::fmt::Display for FeatureLaw {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FeatureLaw::Gaussian => "gaussian",
            FeatureLaw::UniformCube => "uniform",
        })
    }
}

/// Law of the per-task specialist: `a` uniform on the unit sphere of `R^k`
/// (fixed to `+1` for monotone thresholds) and `w` uniform on
/// `[−offset_range, offset_range]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpecializerLaw {
    pub family: Family,
    pub offset_range: f64,
}

impl SpecializerLaw {
    fn draw<R: Rng>(&self, k: usize, rng: &mut R) -> Halfspace {
        let a = match self.family {
            Family::Monotone => vec![1.0],
            Family::Halfspace => loop {
                let g: Vec<f64> = (0..k).map(|_| StandardNormal.sample(rng)).collect();
                let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > 1e-12 {
                    break g.into_iter().map(|v| v / norm).collect();
                }
            },
        };
        let w = if self.offset_range > 0.0 {
            rng.gen_range(-self.offset_range..=self.offset_range)
        } else {
            0.0
        };
        Halfspace::new(a, w).expect("unit normal is nonzero")
    }
}

/// Which family of seed streams a task index is drawn from. Training and
/// evaluation never share a stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Train,
    Eval,
    Custom(u64),
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::Train => tags::TRAIN_TASK,
            Stream::Eval => tags::EVAL_TASK,
            Stream::Custom(t) => tags::CUSTOM.wrapping_add(t),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticMeta {
    b_star: LinearRep,
    features: FeatureLaw,
    specializer: SpecializerLaw,
    noise: f64,
    seed: u64,
}

impl SyntheticMeta {
    pub fn new(
        b_star: LinearRep,
        features: FeatureLaw,
        specializer: SpecializerLaw,
        noise: f64,
        seed: u64,
    ) -> Result<Self> {
        if !(0.0..0.5).contains(&noise) {
            return Err(Error::invalid(format!("noise rate {noise} outside [0, 0.5)")));
        }
        if specializer.family == Family::Monotone && b_star.k() != 1 {
            return Err(Error::invalid("monotone specialists need k = 1"));
        }
        if !(specializer.offset_range.is_finite() && specializer.offset_range >= 0.0) {
            return Err(Error::invalid("offset range must be finite and nonnegative"));
        }
        Ok(SyntheticMeta { b_star, features, specializer, noise, seed })
    }

    /// Gaussian features over a random orthonormal `B*`, with specialist
    /// offsets uniform on `[−1, 1]`.
    pub fn standard(d: usize, k: usize, family: Family, noise: f64, seed: u64) -> Result<Self> {
        if k == 0 || d == 0 || k > d {
            return Err(Error::invalid(format!("need 1 <= k <= d, got k={k}, d={d}")));
        }
        let b_star = random_orthonormal_rep(k, d, &mut rng::stream(seed, tags::REP, 0));
        SyntheticMeta::new(
            b_star,
            FeatureLaw::Gaussian,
            SpecializerLaw { family, offset_range: 1.0 },
            noise,
            seed,
        )
    }

    pub fn b_star(&self) -> &LinearRep {
        &self.b_star
    }

    pub fn family(&self) -> Family {
        self.specializer.family
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn d(&self) -> usize {
        self.b_star.d()
    }

    pub fn k(&self) -> usize {
        self.b_star.k()
    }

    pub fn features(&self) -> FeatureLaw {
        self.features
    }

    /// Task `index` of `stream`.
    pub fn task(&self, stream: Stream, index: u64) -> TaskSampler<'_> {
        let task_seed = rng::derive_seed(self.seed, stream.tag(), index);
        let truth = self
            .specializer
            .draw(self.k(), &mut rng::stream(task_seed, tags::REP, 0));
        TaskSampler { meta: self, truth, seed: task_seed }
    }

    /// Draws a task with a seed taken from `rng`.
    pub fn sample_task<R: Rng>(&self, rng: &mut R) -> TaskSampler<'_> {
        self.task(Stream::Custom(0), rng.gen())
    }
}

/// A drawn task: its hidden specialist and a point sampler.
#[derive(Clone, Debug)]
pub struct TaskSampler<'a> {
    meta: &'a SyntheticMeta,
    truth: Halfspace,
    seed: u64,
}

impl TaskSampler<'_> {
    pub fn truth(&self) -> &Halfspace {
        &self.truth
    }

    /// Noise-free label `f_P(B* x)`.
    pub fn clean_label(&self, x: &[f64]) -> Label {
        self.truth.classify(&self.meta.b_star.apply(x))
    }

    /// Point `i` of this task's i.i.d. stream.
    pub fn point(&self, i: u64) -> LabeledPoint {
        let mut r = rng::stream(self.seed, tags::POINT, i);
        let x = self.meta.features.draw(self.meta.d(), &mut r);
        let mut y = self.clean_label(&x);
        if self.meta.noise > 0.0 && r.gen::<f64>() < self.meta.noise {
            y = y.flip();
        }
        LabeledPoint::new(x, y).expect("sampled features are finite")
    }

    /// Points `start..start+n`.
    pub fn draw(&self, start: u64, n: usize) -> TaskDataset {
        let pts = (start..start + n as u64).map(|i| self.point(i)).collect();
        Dataset::new(self.meta.d(), pts).expect("uniform dimension")
    }
}

/// Where a meta-sample came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Provenance {
    pub seed: u64,
    pub t: usize,
    pub n: usize,
}

/// `t` task datasets of `n` points each: the metalearner's input.
#[derive(Clone, Debug, PartialEq)]
pub struct MetaSample {
    tasks: Vec<TaskDataset>,
    provenance: Option<Provenance>,
}

impl MetaSample {
    /// Wraps existing datasets; all must share size and dimension.
    pub fn from_tasks(tasks: Vec<TaskDataset>) -> Result<Self> {
        let first = tasks.first().ok_or_else(|| Error::invalid("meta-sample needs a task"))?;
        let (n, d) = (first.len(), first.dim());
        if tasks.iter().any(|t| t.len() != n || t.dim() != d) {
            return Err(Error::invalid("tasks in a meta-sample must share size and dimension"));
        }
        Ok(MetaSample { tasks, provenance: None })
    }

    pub fn tasks(&self) -> &[TaskDataset] {
        &self.tasks
    }

    pub fn t(&self) -> usize {
        self.tasks.len()
    }

    pub fn n(&self) -> usize {
        self.tasks[0].len()
    }

    pub fn d(&self) -> usize {
        self.tasks[0].dim()
    }

    pub fn provenance(&self) -> Option<Provenance> {
        self.provenance
    }
}

/// `t` independent tasks from `stream`, `n` i.i.d. points each.
pub fn sample_meta(meta: &SyntheticMeta, t: usize, n: usize, stream: Stream) -> Result<MetaSample> {
    if t == 0 || n == 0 {
        return Err(Error::invalid("meta-sample needs t >= 1 and n >= 1"));
    }
    let tasks = (0..t as u64)
        .into_par_iter()
        .map(|j| meta.task(stream, j).draw(0, n))
        .collect();
    Ok(MetaSample {
        tasks,
        provenance: Some(Provenance { seed: meta.seed, t, n }),
    })
}

/// A `k×d` map with orthonormal rows drawn from the Gaussian ensemble.
pub fn random_orthonormal_rep<R: Rng>(k: usize, d: usize, rng: &mut R) -> LinearRep {
    loop {
        if let Some(rep) = random_rep(k, d, rng).orthonormalized() {
            return rep;
        }
    }
}

/// A `k×d` map with i.i.d. standard Gaussian entries.
pub fn random_rep<R: Rng>(k: usize, d: usize, rng: &mut R) -> LinearRep {
    loop {
        let data: Vec<f64> = (0..k * d).map(|_| StandardNormal.sample(rng)).collect();
        if let Ok(rep) = LinearRep::new(k, d, data) {
            return rep;
        }
    }
}

/// Whether every `min(n, k+1)`-subset of the augmented rows `(z_i ‖ 1)` of a
/// representation-space dataset is linearly independent.
pub fn general_position(data: &RepDataset) -> bool {
    if data.is_empty() {
        return true;
    }
    let z = match augment(data) {
        Ok(z) => z,
        Err(_) => return false,
    };
    let size = data.len().min(data.dim() + 1);
    (0..data.len())
        .combinations(size)
        .all(|s| TightSystem::factor(&z.restrict_rows(&s)).is_ok())
}

/// General position of a task under `B = [I_k | 0]` (zero-padded when
/// `k > d`).
pub fn general_position_check(task: &TaskDataset, k: usize) -> bool {
    if k == 0 {
        return false;
    }
    let pts = task
        .iter()
        .map(|p| {
            let mut z = vec![0.0; k];
            for (zi, xi) in z.iter_mut().zip(p.x()) {
                *zi = *xi;
            }
            LabeledPoint::new(z, p.y()).expect("finite")
        })
        .collect();
    match Dataset::new(k, pts) {
        Ok(d) => general_position(&d),
        Err(_) => false,
    }
}
