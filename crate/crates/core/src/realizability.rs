//! Exact realizability oracles for halfspaces `F_k` and monotone thresholds
//! `F_mon`, certificate extraction, and exact empirical-risk minimization.
//!
//! Separability in `R^k` is decided by enumerating index subsets `I` with
//! `|I| ≤ k+1` of the augmented matrix and testing the minimum-norm solution
//! of `Z_I a = 1` against every row. The same enumeration with signed targets
//! `σ_I` yields every candidate separator needed for exact ERM.

use std::fmt;
use std::str::FromStr;

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::geometry::{
    apply_rep, augment, dot, Halfspace, Label, LinearRep, RepDataset, TaskDataset, TightSystem,
};

/// Accept `z'_i·â ≥ 1 − MARGIN_TOL` as satisfying a unit-margin constraint.
pub const MARGIN_TOL: f64 = 1e-7;

/// The class of specialized classifiers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    /// `F_k`: `sign(a·z − w)` on `R^k`.
    Halfspace,
    /// `F_mon`: `sign(z − w)` on `R`.
    Monotone,
}

impl Family {
    /// Non-realizability-certificate complexity of the family on `R^k`.
    pub fn nrc(self, k: usize) -> usize {
        match self {
            Family::Halfspace => k + 2,
            Family::Monotone => 2,
        }
    }

    pub fn vc(self, k: usize) -> usize {
        match self {
            Family::Halfspace => k + 1,
            Family::Monotone => 1,
        }
    }

    fn check_dim(self, k: usize) -> Result<()> {
        match self {
            Family::Monotone if k != 1 => Err(Error::invalid(format!(
                "monotone thresholds live on R, got dimension {k}"
            ))),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Halfspace => "halfspace",
            Family::Monotone => "monotone",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "halfspace" => Ok(Family::Halfspace),
            "monotone" => Ok(Family::Monotone),
            other => Err(Error::invalid(format!("unknown family `{other}`"))),
        }
    }
}

/// `+1` (realizable) or `−1` (not realizable).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Realizable,
    NotRealizable,
}

impl Verdict {
    pub fn from_bool(realizable: bool) -> Self {
        if realizable {
            Verdict::Realizable
        } else {
            Verdict::NotRealizable
        }
    }

    pub fn value(self) -> i8 {
        match self {
            Verdict::Realizable => 1,
            Verdict::NotRealizable => -1,
        }
    }

    pub fn is_realizable(self) -> bool {
        self == Verdict::Realizable
    }
}

/// Per-point correctness pattern of a classifier: `σ_i = +1` iff point `i`
/// is classified correctly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlipVector {
    sigma: Vec<Label>,
}

impl FlipVector {
    pub fn of(h: &Halfspace, data: &RepDataset) -> Self {
        let sigma = data
            .iter()
            .map(|p| if h.classify(p.x()) == p.y() { Label::Pos } else { Label::Neg })
            .collect();
        FlipVector { sigma }
    }

    pub fn sigma(&self) -> &[Label] {
        &self.sigma
    }

    pub fn correct_fraction(&self) -> f64 {
        if self.sigma.is_empty() {
            return 1.0;
        }
        self.sigma.iter().filter(|&&s| s == Label::Pos).count() as f64 / self.sigma.len() as f64
    }
}

fn require_nonempty(data: &RepDataset) -> Result<()> {
    if data.is_empty() {
        Err(Error::invalid("oracle needs a nonempty dataset"))
    } else {
        Ok(())
    }
}

/// A strict separator of `data` (every point has `y_i(a·z_i − w) ≥ 1`
/// up to `MARGIN_TOL`), or `None` if the data is not linearly separable.
pub fn find_separator(data: &RepDataset) -> Result<Option<Halfspace>> {
    require_nonempty(data)?;
    let z = augment(data)?;
    let n = z.rows();
    let max = n.min(z.cols());
    for size in 1..=max {
        for subset in (0..n).combinations(size) {
            let sys = match TightSystem::factor(&z.restrict_rows(&subset)) {
                Ok(sys) => sys,
                Err(Error::Singular) => continue,
                Err(e) => return Err(e),
            };
            let a = sys.solve(&vec![1.0; size])?;
            if (0..n).all(|i| dot(z.row(i), &a) >= 1.0 - MARGIN_TOL) {
                return Ok(Some(Halfspace::from_augmented(&a)?));
            }
        }
    }
    Ok(None)
}

/// Whether some halfspace in `R^k` classifies every point of `data`
/// correctly.
pub fn is_separable(data: &RepDataset) -> Result<bool> {
    Ok(find_separator(data)?.is_some())
}

fn extremes(z: &[f64], y: &[Label]) -> (f64, f64, f64, f64) {
    let mut min_pos = f64::INFINITY;
    let mut max_pos = f64::NEG_INFINITY;
    let mut min_neg = f64::INFINITY;
    let mut max_neg = f64::NEG_INFINITY;
    for (&v, &l) in z.iter().zip(y) {
        match l {
            Label::Pos => {
                min_pos = min_pos.min(v);
                max_pos = max_pos.max(v);
            }
            Label::Neg => {
                min_neg = min_neg.min(v);
                max_neg = max_neg.max(v);
            }
        }
    }
    (min_pos, max_pos, min_neg, max_neg)
}

pub(crate) fn monotone_scalars(z: &[f64], y: &[Label]) -> bool {
    let (min_pos, _, _, max_neg) = extremes(z, y);
    min_pos > max_neg
}

pub(crate) fn separable_scalars(z: &[f64], y: &[Label]) -> bool {
    let (min_pos, max_pos, min_neg, max_neg) = extremes(z, y);
    min_pos > max_neg || max_pos < min_neg
}

fn scalars(data: &RepDataset) -> Result<(Vec<f64>, Vec<Label>)> {
    if data.dim() != 1 {
        return Err(Error::invalid(format!(
            "one-dimensional oracle got dimension {}",
            data.dim()
        )));
    }
    Ok(data.iter().map(|p| (p.x()[0], p.y())).unzip())
}

/// Sort-based separability test on the line: either every positive lies
/// strictly above every negative, or strictly below.
pub fn is_separable_1d(data: &RepDataset) -> Result<bool> {
    let (z, y) = scalars(data)?;
    Ok(separable_scalars(&z, &y))
}

/// `+1` iff the smallest positive strictly exceeds the largest negative.
pub fn monotone_realizable(data: &RepDataset) -> Result<Verdict> {
    require_nonempty(data)?;
    let (z, y) = scalars(data)?;
    Ok(Verdict::from_bool(monotone_scalars(&z, &y)))
}

/// Realizability of `data` by `family`, using the sort-based path on the line.
pub fn realizable(data: &RepDataset, family: Family) -> Result<bool> {
    require_nonempty(data)?;
    family.check_dim(data.dim())?;
    match family {
        Family::Monotone => Ok(monotone_realizable(data)?.is_realizable()),
        Family::Halfspace if data.dim() == 1 => is_separable_1d(data),
        Family::Halfspace => is_separable(data),
    }
}

/// A nonrealizable subset of a dataset, as sorted indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    indices: Vec<usize>,
    size_bound: usize,
}

impl Certificate {
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn size_bound(&self) -> usize {
        self.size_bound
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn is_within_bound(&self) -> bool {
        self.indices.len() <= self.size_bound
    }
}

/// Greedy deletion: drop any point whose removal keeps the remainder
/// nonrealizable, until no such point is left. `realizable` is the oracle.
pub fn extract_certificate<F>(data: &RepDataset, size_bound: usize, realizable: F) -> Result<Certificate>
where
    F: Fn(&RepDataset) -> bool,
{
    if realizable(data) {
        return Err(Error::PreconditionViolated(
            "certificate requested for a realizable dataset".into(),
        ));
    }
    let mut active: Vec<usize> = (0..data.len()).collect();
    loop {
        let mut removed = false;
        let mut pos = 0;
        while pos < active.len() {
            let mut trial = active.clone();
            trial.remove(pos);
            if !trial.is_empty() && !realizable(&data.subset(&trial)) {
                active = trial;
                removed = true;
            } else {
                pos += 1;
            }
        }
        if !removed {
            break;
        }
    }
    Ok(Certificate { indices: active, size_bound })
}

/// Certificate extraction with the family's own oracle and bound.
pub fn certificate(data: &RepDataset, family: Family) -> Result<Certificate> {
    require_nonempty(data)?;
    family.check_dim(data.dim())?;
    let bound = family.nrc(data.dim());
    extract_certificate(data, bound, |d| realizable(d, family).unwrap_or(true))
}

/// `r_h`: whether the task, mapped through `rep`, is realizable by `family`.
pub fn realizability_predicate(rep: &LinearRep, task: &TaskDataset, family: Family) -> Result<Verdict> {
    let mapped = apply_rep(rep, task)?;
    Ok(Verdict::from_bool(realizable(&mapped, family)?))
}

/// An exact empirical risk minimizer and its training error count.
#[derive(Clone, Debug, PartialEq)]
pub struct Fit {
    pub halfspace: Halfspace,
    /// Total weight of misclassified points (a count under unit weights).
    pub loss: f64,
}

fn fit_line(z: &[f64], y: &[Label], weights: &[f64], family: Family) -> Fit {
    let mut order: Vec<usize> = (0..z.len()).collect();
    order.sort_by(|&a, &b| z[a].total_cmp(&z[b]));
    // groups of equal coordinate: (value, positive weight, negative weight)
    let mut groups: Vec<(f64, f64, f64)> = Vec::new();
    for &i in &order {
        let (wp, wn) = match y[i] {
            Label::Pos => (weights[i], 0.0),
            Label::Neg => (0.0, weights[i]),
        };
        match groups.last_mut() {
            Some(g) if g.0 == z[i] => {
                g.1 += wp;
                g.2 += wn;
            }
            _ => groups.push((z[i], wp, wn)),
        }
    }
    let total_pos: f64 = groups.iter().map(|g| g.1).sum();
    let total_neg: f64 = groups.iter().map(|g| g.2).sum();
    let m = groups.len();

    // Increasing orientation, positives on groups g.. (g = m: none).
    let mut best = (total_neg, Orientation::Up, 0usize);
    let mut pos_below = 0.0;
    let mut neg_below = 0.0;
    for g in 0..=m {
        let loss = pos_below + (total_neg - neg_below);
        if loss < best.0 {
            best = (loss, Orientation::Up, g);
        }
        if g < m {
            pos_below += groups[g].1;
            neg_below += groups[g].2;
        }
    }
    if family == Family::Halfspace {
        // Decreasing orientation, positives on groups ..=g.
        let mut pos_upto = 0.0;
        let mut neg_upto = 0.0;
        for (g, grp) in groups.iter().enumerate() {
            pos_upto += grp.1;
            neg_upto += grp.2;
            let loss = neg_upto + (total_pos - pos_upto);
            if loss < best.0 {
                best = (loss, Orientation::Down, g);
            }
        }
    }
    let (loss, orientation, g) = best;
    let halfspace = match orientation {
        Orientation::Up => {
            let w = if g == 0 {
                groups[0].0 - 1.0
            } else if g == m {
                groups[m - 1].0 + 1.0
            } else {
                let (lo, hi) = (groups[g - 1].0, groups[g].0);
                let mid = 0.5 * (lo + hi);
                if mid > lo { mid } else { hi }
            };
            Halfspace::new(vec![1.0], w).expect("finite threshold")
        }
        Orientation::Down => {
            let theta = if g + 1 == m {
                groups[g].0 + 1.0
            } else {
                let (lo, hi) = (groups[g].0, groups[g + 1].0);
                let mid = 0.5 * (lo + hi);
                if mid < hi { mid } else { lo }
            };
            Halfspace::new(vec![-1.0], -theta).expect("finite threshold")
        }
    };
    Fit { halfspace, loss }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Orientation {
    Up,
    Down,
}

fn weighted_loss(h: &Halfspace, data: &RepDataset, weights: &[f64], bound: f64) -> f64 {
    let mut loss = 0.0;
    for (p, w) in data.iter().zip(weights) {
        if h.classify(p.x()) != p.y() {
            loss += w;
            if loss >= bound {
                break;
            }
        }
    }
    loss
}

fn fit_enumerate(data: &RepDataset, weights: &[f64]) -> Result<Fit> {
    let k = data.dim();
    let mut best: Option<Fit> = None;
    let consider = |h: Halfspace, best: &mut Option<Fit>| {
        let bound = best.as_ref().map_or(f64::INFINITY, |b| b.loss);
        let loss = weighted_loss(&h, data, weights, bound);
        if loss < bound {
            *best = Some(Fit { halfspace: h, loss });
        }
    };
    consider(Halfspace::constant(k, Label::Pos), &mut best);
    consider(Halfspace::constant(k, Label::Neg), &mut best);
    let z = augment(data)?;
    let n = z.rows();
    'outer: for size in 1..=n.min(k + 1) {
        for subset in (0..n).combinations(size) {
            let sys = match TightSystem::factor(&z.restrict_rows(&subset)) {
                Ok(sys) => sys,
                Err(Error::Singular) => continue,
                Err(e) => return Err(e),
            };
            for mask in 0..(1u32 << size) {
                let target: Vec<f64> = (0..size)
                    .map(|b| if mask >> b & 1 == 1 { -1.0 } else { 1.0 })
                    .collect();
                let a = sys.solve(&target)?;
                if let Ok(h) = Halfspace::from_augmented(&a) {
                    consider(h, &mut best);
                }
                if best.as_ref().is_some_and(|b| b.loss == 0.0) {
                    break 'outer;
                }
            }
        }
    }
    Ok(best.expect("constant candidates always present"))
}

/// Exact minimum of the weighted training error over `family`.
pub fn best_weighted_fit(data: &RepDataset, weights: &[f64], family: Family) -> Result<Fit> {
    require_nonempty(data)?;
    family.check_dim(data.dim())?;
    if weights.len() != data.len() {
        return Err(Error::invalid("one weight per point required"));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::invalid("weights must be finite and nonnegative"));
    }
    if data.dim() == 1 {
        let (z, y) = scalars(data)?;
        return Ok(fit_line(&z, &y, weights, family));
    }
    fit_enumerate(data, weights)
}

/// Exact empirical risk minimizer under unit weights; `loss` is the number
/// of mistakes.
pub fn best_fit(data: &RepDataset, family: Family) -> Result<Fit> {
    best_weighted_fit(data, &vec![1.0; data.len()], family)
}

/// Mistake count of the best classifier on a line, without building the
/// dataset. Used by the search objectives.
pub(crate) fn line_mistakes(z: &[f64], y: &[Label], family: Family) -> usize {
    let ones = vec![1.0; z.len()];
    fit_line(z, y, &ones, family).loss as usize
}

/// `q_h`: the minimum training-error fraction of `family` on `task` mapped
/// through `rep`.
pub fn empirical_error(rep: &LinearRep, task: &TaskDataset, family: Family) -> Result<f64> {
    let mapped = apply_rep(rep, task)?;
    let fit = best_fit(&mapped, family)?;
    Ok(fit.loss / mapped.len() as f64)
}
