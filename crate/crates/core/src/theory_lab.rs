//! Numerical checks of the quantitative statements: exact and Monte-Carlo
//! probabilities of non-realizability, the lower bound relating them to the
//! test error, the monotone bound, VC witnesses for `F^{⊗t} ∘ H_{d,k}`, and
//! NRC/VC of small finite classes.

use rand::distributions::WeightedIndex;
use rand::Rng;
use rand_distr::{Dirichlet, Distribution};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{apply_rep, Dataset, Label, LabeledPoint, LinearRep, RepDataset, TaskDataset};
use crate::learners::specialize;
use crate::realizability::{
    best_weighted_fit, monotone_scalars, realizable, separable_scalars, Family,
};
use crate::rng::{self, tags};

/// Probabilities must sum to one within this.
pub const PROB_TOL: f64 = 1e-12;

/// A finitely supported distribution over `R^k × {±1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteDist {
    k: usize,
    atoms: Vec<(Vec<f64>, Label, f64)>,
}

impl DiscreteDist {
    pub fn new(atoms: Vec<(Vec<f64>, Label, f64)>) -> Result<Self> {
        let k = atoms.first().ok_or_else(|| Error::invalid("need at least one atom"))?.0.len();
        if k == 0 {
            return Err(Error::invalid("atoms need dimension at least 1"));
        }
        for (z, _, p) in &atoms {
            if z.len() != k || z.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid("atoms must be finite points of one dimension"));
            }
            if !(*p >= 0.0 && p.is_finite()) {
                return Err(Error::invalid(format!("invalid probability {p}")));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.2).sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::invalid(format!("probabilities sum to {total}")));
        }
        Ok(DiscreteDist { k, atoms })
    }

    /// Scalar atoms `(z, y, prob)`.
    pub fn on_line(atoms: &[(f64, Label, f64)]) -> Result<Self> {
        DiscreteDist::new(atoms.iter().map(|&(z, y, p)| (vec![z], y, p)).collect())
    }

    /// Random atoms on the integer grid `{0, …, grid−1}^k` with uniform
    /// labels and Dirichlet(1) weights. Coincident atoms are likely for small
    /// grids, which is what makes the error positive.
    pub fn random<R: Rng>(atoms: usize, k: usize, grid: u32, rng: &mut R) -> Result<Self> {
        if atoms == 0 || k == 0 || grid == 0 {
            return Err(Error::invalid("need atoms, k and grid at least 1"));
        }
        let weights: Vec<f64> = if atoms == 1 {
            vec![1.0]
        } else {
            Dirichlet::new_with_size(1.0, atoms)
                .map_err(|e| Error::invalid(e.to_string()))?
                .sample(rng)
        };
        let total: f64 = weights.iter().sum();
        let list = weights
            .into_iter()
            .map(|w| {
                let z = (0..k).map(|_| rng.gen_range(0..grid) as f64).collect();
                let y = if rng.gen_bool(0.5) { Label::Pos } else { Label::Neg };
                (z, y, w / total)
            })
            .collect();
        DiscreteDist::new(list)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn atoms(&self) -> &[(Vec<f64>, Label, f64)] {
        &self.atoms
    }

    /// Positive-label mass.
    pub fn rho(&self) -> f64 {
        self.atoms.iter().filter(|a| a.1 == Label::Pos).map(|a| a.2).sum()
    }

    fn support(&self) -> Result<RepDataset> {
        Dataset::new(
            self.k,
            self.atoms
                .iter()
                .map(|(z, y, _)| LabeledPoint::new(z.clone(), *y))
                .collect::<Result<Vec<_>>>()?,
        )
    }
}

/// `err(B, F)`: the minimum over `F` of the misclassified mass.
pub fn exact_err(dist: &DiscreteDist, family: Family) -> Result<f64> {
    let weights: Vec<f64> = dist.atoms.iter().map(|a| a.2).collect();
    let fit = best_weighted_fit(&dist.support()?, &weights, family)?;
    Ok(fit.loss.clamp(0.0, 1.0))
}

/// Switchover and sampling parameters for `exact_pnr`.
#[derive(Clone, Debug, PartialEq)]
pub struct PnrOptions {
    pub enumeration_cap: u64,
    pub mc_draws: u64,
    pub seed: u64,
}

impl Default for PnrOptions {
    fn default() -> Self {
        PnrOptions { enumeration_cap: 1_000_000, mc_draws: 100_000, seed: 0 }
    }
}

/// A value of `p_nr`, exact or estimated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PnrEstimate {
    pub value: f64,
    /// Zero on the exact path.
    pub stderr: f64,
    pub exact: bool,
}

fn tuple_nonrealizable(dist: &DiscreteDist, idx: &[usize], family: Family) -> Result<bool> {
    if dist.k == 1 {
        let z: Vec<f64> = idx.iter().map(|&i| dist.atoms[i].0[0]).collect();
        let y: Vec<Label> = idx.iter().map(|&i| dist.atoms[i].1).collect();
        return Ok(match family {
            Family::Monotone => !monotone_scalars(&z, &y),
            Family::Halfspace => !separable_scalars(&z, &y),
        });
    }
    if family == Family::Monotone {
        return Err(Error::invalid("monotone thresholds need k = 1"));
    }
    let data = Dataset::new(
        dist.k,
        idx.iter()
            .map(|&i| LabeledPoint::new(dist.atoms[i].0.clone(), dist.atoms[i].1))
            .collect::<Result<Vec<_>>>()?,
    )?;
    Ok(!realizable(&data, family)?)
}

fn decode(mut code: u64, base: usize, m: usize, out: &mut [usize]) {
    for slot in out.iter_mut().take(m) {
        *slot = (code % base as u64) as usize;
        code /= base as u64;
    }
}

const BLOCK: u64 = 4096;

/// Exact `p_nr(B, F, m)` by enumerating all ordered `m`-tuples of atoms.
pub fn pnr_enumerate(dist: &DiscreteDist, family: Family, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::invalid("m must be at least 1"));
    }
    let a = dist.atoms.len();
    let total = (a as u64)
        .checked_pow(m as u32)
        .ok_or_else(|| Error::invalid("tuple count overflows"))?;
    let blocks = total.div_ceil(BLOCK);
    let partial: Vec<f64> = (0..blocks)
        .into_par_iter()
        .map(|b| -> Result<f64> {
            let mut idx = vec![0usize; m];
            let mut sum = 0.0;
            for code in b * BLOCK..((b + 1) * BLOCK).min(total) {
                decode(code, a, m, &mut idx);
                let p: f64 = idx.iter().map(|&i| dist.atoms[i].2).product();
                if p > 0.0 && tuple_nonrealizable(dist, &idx, family)? {
                    sum += p;
                }
            }
            Ok(sum)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(partial.iter().sum::<f64>().clamp(0.0, 1.0))
}

/// Monte-Carlo estimate of `p_nr(B, F, m)` with a Wilson-score standard
/// error.
pub fn pnr_monte_carlo(
    dist: &DiscreteDist,
    family: Family,
    m: usize,
    draws: u64,
    seed: u64,
) -> Result<PnrEstimate> {
    if m == 0 || draws == 0 {
        return Err(Error::invalid("m and draws must be at least 1"));
    }
    let index = WeightedIndex::new(dist.atoms.iter().map(|a| a.2))
        .map_err(|e| Error::invalid(e.to_string()))?;
    let blocks = draws.div_ceil(BLOCK);
    let hits: Vec<u64> = (0..blocks)
        .into_par_iter()
        .map(|b| -> Result<u64> {
            let mut rng = rng::stream(seed, tags::PNR_MC, b);
            let mut idx = vec![0usize; m];
            let mut count = 0;
            for _ in b * BLOCK..((b + 1) * BLOCK).min(draws) {
                idx.iter_mut().for_each(|i| *i = index.sample(&mut rng));
                if tuple_nonrealizable(dist, &idx, family)? {
                    count += 1;
                }
            }
            Ok(count)
        })
        .collect::<Result<Vec<_>>>()?;
    let x = hits.iter().sum::<u64>() as f64;
    let n = draws as f64;
    let centre = (x + 0.5) / (n + 1.0);
    Ok(PnrEstimate {
        value: x / n,
        stderr: (centre * (1.0 - centre) / (n + 1.0)).sqrt(),
        exact: false,
    })
}

/// `p_nr(B, F, m)`: exact when `atoms^m` is within the enumeration cap,
/// Monte-Carlo otherwise.
pub fn exact_pnr(dist: &DiscreteDist, family: Family, m: usize, opts: &PnrOptions) -> Result<PnrEstimate> {
    if m == 0 {
        return Err(Error::invalid("m must be at least 1"));
    }
    let tuples = (dist.atoms.len() as u64).checked_pow(m as u32);
    match tuples {
        Some(n) if n <= opts.enumeration_cap => Ok(PnrEstimate {
            value: pnr_enumerate(dist, family, m)?,
            stderr: 0.0,
            exact: true,
        }),
        _ => pnr_monte_carlo(dist, family, m, opts.mc_draws, opts.seed),
    }
}

/// `½ · (m·err / (16e · v · ln(16/err)))^m` with `v = max(vc, m)`.
pub fn pnr_lower_bound(err: f64, m: usize, vc: usize) -> Result<f64> {
    if !(err > 0.0 && err <= 1.0) {
        return Err(Error::invalid(format!("err must lie in (0, 1], got {err}")));
    }
    if m == 0 {
        return Err(Error::invalid("m must be at least 1"));
    }
    let v = vc.max(m) as f64;
    let base = m as f64 * err / (16.0 * std::f64::consts::E * v * (16.0 / err).ln());
    Ok(0.5 * base.powi(m as i32))
}

/// Outcome of checking `err(B, F_mon)² ≤ p_nr(B, F_mon, 2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonBoundReport {
    pub err_sq: f64,
    pub pnr: f64,
    pub stderr: f64,
    pub exact: bool,
    pub pass: bool,
}

pub fn check_mon_bound(dist: &DiscreteDist, opts: &PnrOptions) -> Result<MonBoundReport> {
    if dist.k != 1 {
        return Err(Error::invalid("the monotone bound needs a distribution on the line"));
    }
    let err = exact_err(dist, Family::Monotone)?;
    let pnr = exact_pnr(dist, Family::Monotone, 2, opts)?;
    let slack = if pnr.exact { PROB_TOL } else { 3.0 * pnr.stderr };
    Ok(MonBoundReport {
        err_sq: err * err,
        pnr: pnr.value,
        stderr: pnr.stderr,
        exact: pnr.exact,
        pass: err * err <= pnr.value + slack,
    })
}

/// Largest witness whose labelings are checked exhaustively.
pub const WITNESS_CAP: usize = 16;

/// A shattered set for `F_k^{⊗t} ∘ H_{d,k}` and the result of checking it.
#[derive(Clone, Debug, PartialEq)]
pub struct VcWitness {
    pub t: usize,
    pub d: usize,
    pub k: usize,
    /// Points of each task.
    pub tasks: Vec<TaskDataset>,
    pub labelings_checked: u64,
    /// First labeling (bit `i` set means point `i` is negative) that no
    /// representation and specialists fit.
    pub counterexample: Option<u64>,
}

impl VcWitness {
    pub fn size(&self) -> usize {
        self.tasks.iter().map(|t| t.len()).sum()
    }

    pub fn verified(&self) -> bool {
        self.counterexample.is_none()
    }

    /// `t(d+1)` when `t ≤ k`, else `t(k+1)`.
    pub fn expected_size(&self) -> usize {
        if self.t <= self.k {
            self.t * (self.d + 1)
        } else {
            self.t * (self.k + 1)
        }
    }
}

fn origin_and_basis(dim: usize, span: usize) -> Vec<Vec<f64>> {
    let mut pts = vec![vec![0.0; dim]];
    for i in 0..span {
        let mut e = vec![0.0; dim];
        e[i] = 1.0;
        pts.push(e);
    }
    pts
}

fn labeled(points: &[Vec<f64>], labels: &[Label]) -> Result<TaskDataset> {
    Dataset::from_pairs(points.iter().cloned().zip(labels.iter().copied()))
}

/// For `t ≤ k`: each task gets `{0, e_1, …, e_d} ⊂ R^d`, and a labeling is
/// fitted by stacking one separator normal per task as the rows of `B`.
/// For `t > k`: each task gets `{0, e_1, …, e_k}` and `B = [I_k | 0]`.
/// Every labeling is then confirmed by exact specialization.
pub fn vc_witness(t: usize, d: usize, k: usize) -> Result<VcWitness> {
    let few = t <= k;
    if t == 0 || d == 0 || k == 0 || (!few && k > d) {
        return Err(Error::invalid(format!(
            "need t, d, k >= 1, and k <= d when t > k; got ({t}, {d}, {k})"
        )));
    }
    let per_task = if few { d + 1 } else { k + 1 };
    let size = t * per_task;
    if size > WITNESS_CAP {
        return Err(Error::invalid(format!("witness of {size} points exceeds the cap {WITNESS_CAP}")));
    }
    let points = origin_and_basis(d, if few { d } else { k });
    let labels_of = |code: u64| -> Vec<Vec<Label>> {
        (0..t)
            .map(|j| {
                (0..per_task)
                    .map(|i| {
                        if code >> (j * per_task + i) & 1 == 1 { Label::Neg } else { Label::Pos }
                    })
                    .collect()
            })
            .collect()
    };
    let fits = |code: u64| -> Result<bool> {
        let labels = labels_of(code);
        let rep = if few {
            let mut rows = Vec::with_capacity(k);
            for lab in &labels {
                // sign(a·0 − w) = y_0 and a_i − w = y_i
                let w = -0.5 * lab[0].value();
                rows.push((1..per_task).map(|i| w + lab[i].value()).collect::<Vec<f64>>());
            }
            for r in t..k {
                let mut e = vec![0.0; d];
                e[r % d] = 1.0;
                rows.push(e);
            }
            LinearRep::from_rows(&rows)?
        } else {
            LinearRep::coordinate_projection(k, d)?
        };
        for lab in &labels {
            let task = labeled(&points, lab)?;
            let h = specialize(&rep, &task, Family::Halfspace)?;
            if h.mistakes(&apply_rep(&rep, &task)?) != 0 {
                return Ok(false);
            }
        }
        Ok(true)
    };
    let total = 1u64 << size;
    let failures: Vec<u64> = (0..total)
        .into_par_iter()
        .map(|c| fits(c).map(|ok| (!ok).then_some(c)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let tasks = (0..t)
        .map(|_| labeled(&points, &vec![Label::Pos; per_task]))
        .collect::<Result<Vec<_>>>()?;
    Ok(VcWitness { t, d, k, tasks, labelings_checked: total, counterexample: failures.first().copied() })
}

/// Largest domain handled by the exhaustive finite-class tools.
pub const FINITE_DOMAIN_CAP: usize = 12;

/// A finite class of `±1` functions on the domain `{0, …, size−1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteClass {
    size: usize,
    functions: Vec<Vec<Label>>,
}

impl FiniteClass {
    pub fn new(size: usize, functions: Vec<Vec<Label>>) -> Result<Self> {
        if functions.iter().any(|f| f.len() != size) {
            return Err(Error::invalid("every function needs one label per domain point"));
        }
        Ok(FiniteClass { size, functions })
    }

    /// `f_i(x) = +1` iff `x = i`, on `{0, …, ℓ−1}`.
    pub fn point_functions(l: usize) -> Self {
        let functions = (0..l)
            .map(|i| (0..l).map(|x| if x == i { Label::Pos } else { Label::Neg }).collect())
            .collect();
        FiniteClass { size: l, functions }
    }

    /// Point functions plus the constant `−1`.
    pub fn point_functions_with_negative(l: usize) -> Self {
        let mut c = FiniteClass::point_functions(l);
        c.functions.push(vec![Label::Neg; l]);
        c
    }

    /// All functions on `{0, 1, …, ℓ}` with `f(0) = +1`.
    pub fn forced_origin(l: usize) -> Self {
        let functions = (0..1u64 << l)
            .map(|bits| {
                std::iter::once(Label::Pos)
                    .chain((0..l).map(|i| if bits >> i & 1 == 1 { Label::Pos } else { Label::Neg }))
                    .collect()
            })
            .collect();
        FiniteClass { size: l + 1, functions }
    }

    /// Every labeling of `n` points.
    pub fn all_functions(n: usize) -> Self {
        let functions = (0..1u64 << n)
            .map(|bits| (0..n).map(|i| if bits >> i & 1 == 1 { Label::Pos } else { Label::Neg }).collect())
            .collect();
        FiniteClass { size: n, functions }
    }

    pub fn domain_size(&self) -> usize {
        self.size
    }

    pub fn functions(&self) -> &[Vec<Label>] {
        &self.functions
    }

    fn check_cap(&self) -> Result<()> {
        if self.size > FINITE_DOMAIN_CAP {
            return Err(Error::invalid(format!(
                "domain of {} points exceeds the cap {FINITE_DOMAIN_CAP}",
                self.size
            )));
        }
        Ok(())
    }

    fn positive_masks(&self) -> Vec<usize> {
        self.functions
            .iter()
            .map(|f| f.iter().enumerate().filter(|(_, &y)| y == Label::Pos).map(|(i, _)| 1 << i).sum())
            .collect()
    }
}

/// Non-realizability-certificate complexity: the largest, over
/// nonrealizable labeled sets, of the smallest nonrealizable subset.
pub fn finite_nrc(class: &FiniteClass) -> Result<usize> {
    class.check_cap()?;
    let l = class.size;
    let pow3: Vec<usize> = (0..=l).map(|i| 3usize.pow(i as u32)).collect();
    let states = pow3[l];
    // base-3 code per point: 0 when absent, else 1 for positive and 2 for negative
    let mut realizable = vec![false; states];
    for p in class.positive_masks() {
        for present in 0..1usize << l {
            let code: usize = (0..l)
                .filter(|i| present >> i & 1 == 1)
                .map(|i| pow3[i] * if p >> i & 1 == 1 { 1 } else { 2 })
                .sum();
            realizable[code] = true;
        }
    }
    const NONE: usize = usize::MAX;
    let mut smallest = vec![NONE; states];
    let mut best = 0;
    let mut digits = vec![0usize; l];
    for code in 0..states {
        let mut c = code;
        let mut len = 0;
        for dgt in digits.iter_mut() {
            *dgt = c % 3;
            c /= 3;
            len += (*dgt != 0) as usize;
        }
        let mut g = if realizable[code] { NONE } else { len };
        for (i, &dgt) in digits.iter().enumerate() {
            if dgt != 0 {
                g = g.min(smallest[code - dgt * pow3[i]]);
            }
        }
        smallest[code] = g;
        if g != NONE {
            best = best.max(g);
        }
    }
    for i in 0..l {
        let single = |dgt: usize| !realizable[dgt * pow3[i]];
        best = best.max(if single(1) || single(2) { 1 } else { 2 });
    }
    Ok(best)
}

/// VC dimension by exhaustive shattering.
pub fn finite_vc(class: &FiniteClass) -> Result<usize> {
    class.check_cap()?;
    let masks = class.positive_masks();
    let l = class.size;
    let mut seen = vec![u32::MAX; 1 << l];
    let mut best = 0;
    for (stamp, set) in (0..1usize << l).enumerate() {
        let size = set.count_ones() as usize;
        if size <= best {
            continue;
        }
        let mut distinct = 0;
        for p in &masks {
            let pattern = p & set;
            if seen[pattern] != stamp as u32 {
                seen[pattern] = stamp as u32;
                distinct += 1;
            }
        }
        if distinct == 1usize << size {
            best = size;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use Label::{Neg, Pos};

    fn coin_flip() -> DiscreteDist {
        DiscreteDist::on_line(&[(0.0, Pos, 0.5), (0.0, Neg, 0.5)]).unwrap()
    }

    #[test]
    fn distribution_contract() {
        assert!(DiscreteDist::on_line(&[(0.0, Pos, 0.5), (1.0, Neg, 0.4)]).is_err());
        assert!(DiscreteDist::on_line(&[(0.0, Pos, -0.5), (1.0, Neg, 1.5)]).is_err());
        assert!(DiscreteDist::new(vec![(vec![0.0], Pos, 0.5), (vec![0.0, 1.0], Neg, 0.5)]).is_err());
        let d = DiscreteDist::on_line(&[(0.0, Pos, 0.25), (1.0, Neg, 0.75)]).unwrap();
        assert_eq!(d.rho(), 0.25);
    }

    #[test]
    fn exact_err_examples() {
        let wrong = DiscreteDist::on_line(&[(0.0, Pos, 0.5), (1.0, Neg, 0.5)]).unwrap();
        assert_eq!(exact_err(&wrong, Family::Monotone).unwrap(), 0.5);
        assert_eq!(exact_err(&wrong, Family::Halfspace).unwrap(), 0.0);
        let right = DiscreteDist::on_line(&[(0.0, Neg, 0.5), (1.0, Pos, 0.5)]).unwrap();
        assert_eq!(exact_err(&right, Family::Monotone).unwrap(), 0.0);
        let single = DiscreteDist::on_line(&[(3.0, Neg, 1.0)]).unwrap();
        assert_eq!(exact_err(&single, Family::Monotone).unwrap(), 0.0);
    }

    #[test]
    fn pnr_examples() {
        let opts = PnrOptions::default();
        let p = exact_pnr(&coin_flip(), Family::Monotone, 2, &opts).unwrap();
        assert!(p.exact);
        assert!((p.value - 0.5).abs() < 1e-15);
        let right = DiscreteDist::on_line(&[(0.0, Neg, 0.3), (1.0, Pos, 0.7)]).unwrap();
        for m in 1..5 {
            assert_eq!(exact_pnr(&right, Family::Monotone, m, &opts).unwrap().value, 0.0);
        }
        let mut rng = stream(3, tags::CUSTOM, 0);
        for _ in 0..10 {
            let d = DiscreteDist::random(5, 1, 3, &mut rng).unwrap();
            assert_eq!(exact_pnr(&d, Family::Monotone, 1, &opts).unwrap().value, 0.0);
            assert_eq!(exact_pnr(&d, Family::Halfspace, 1, &opts).unwrap().value, 0.0);
        }
        assert!(exact_pnr(&right, Family::Monotone, 0, &opts).is_err());
    }

    #[test]
    fn pnr_two_dimensional_xor() {
        // the four xor corners at 1/4 each: a 4-tuple is nonrealizable iff
        // it contains all four corners
        let d = DiscreteDist::new(vec![
            (vec![0.0, 0.0], Pos, 0.25),
            (vec![1.0, 1.0], Pos, 0.25),
            (vec![0.0, 1.0], Neg, 0.25),
            (vec![1.0, 0.0], Neg, 0.25),
        ])
        .unwrap();
        let p = exact_pnr(&d, Family::Halfspace, 4, &PnrOptions::default()).unwrap();
        assert!((p.value - 24.0 / 256.0).abs() < 1e-12);
    }

    #[test]
    fn lower_bound_formula() {
        let expected = 0.5 * (2.0 * 0.5 / (16.0 * std::f64::consts::E * 2.0 * 32f64.ln())).powi(2);
        assert!((pnr_lower_bound(0.5, 2, 1).unwrap() - expected).abs() < 1e-18);
        assert!(pnr_lower_bound(0.0, 2, 1).is_err());
        let mut last = f64::INFINITY;
        for i in (1..=50).rev() {
            let v = pnr_lower_bound(i as f64 / 100.0, 3, 2).unwrap();
            assert!(v < last);
            last = v;
        }
    }

    #[test]
    fn mon_bound_examples() {
        let opts = PnrOptions::default();
        let r = check_mon_bound(&coin_flip(), &opts).unwrap();
        assert_eq!(r.err_sq, 0.25);
        assert_eq!(r.pnr, 0.5);
        assert!(r.pass);
        let right = DiscreteDist::on_line(&[(0.0, Neg, 0.5), (1.0, Pos, 0.5)]).unwrap();
        let r = check_mon_bound(&right, &opts).unwrap();
        assert_eq!((r.err_sq, r.pnr, r.pass), (0.0, 0.0, true));
    }

    #[test]
    fn enumeration_matches_monte_carlo() {
        let mut rng = stream(5, tags::CUSTOM, 0);
        for i in 0..6 {
            let d = DiscreteDist::random(6, 1, 4, &mut rng).unwrap();
            for (family, m) in [(Family::Monotone, 2), (Family::Halfspace, 3)] {
                let exact = pnr_enumerate(&d, family, m).unwrap();
                let mc = pnr_monte_carlo(&d, family, m, 20_000, i).unwrap();
                assert!((exact - mc.value).abs() <= 4.0 * mc.stderr, "{exact} vs {mc:?}");
            }
        }
    }

    #[test]
    fn large_supports_switch_to_sampling() {
        let mut rng = stream(6, tags::CUSTOM, 0);
        let d = DiscreteDist::random(40, 1, 5, &mut rng).unwrap();
        let opts = PnrOptions { mc_draws: 5_000, ..PnrOptions::default() };
        let p = exact_pnr(&d, Family::Halfspace, 4, &opts).unwrap();
        assert!(!p.exact && p.stderr > 0.0);
    }

    #[test]
    fn vc_witness_small_triples() {
        for (t, d, k) in [(1, 1, 1), (2, 1, 2), (1, 2, 2), (2, 1, 1)] {
            let w = vc_witness(t, d, k).unwrap_or_else(|e| panic!("({t},{d},{k}): {e}"));
            assert!(w.verified(), "({t},{d},{k})");
            assert_eq!(w.size(), w.expected_size());
            assert_eq!(w.labelings_checked, 1 << w.size());
        }
        assert_eq!(vc_witness(2, 1, 2).unwrap().size(), 4);
        assert!(vc_witness(4, 4, 4).is_err());
        assert!(vc_witness(3, 1, 2).is_err());
    }

    #[test]
    fn finite_class_examples() {
        assert_eq!(finite_nrc(&FiniteClass::point_functions(4)).unwrap(), 4);
        assert_eq!(finite_vc(&FiniteClass::point_functions(4)).unwrap(), 1);
        assert_eq!(finite_nrc(&FiniteClass::point_functions_with_negative(4)).unwrap(), 2);
        assert_eq!(finite_vc(&FiniteClass::forced_origin(3)).unwrap(), 3);
        assert_eq!(finite_nrc(&FiniteClass::forced_origin(3)).unwrap(), 2);
        assert_eq!(finite_vc(&FiniteClass::all_functions(3)).unwrap(), 3);
        assert_eq!(finite_nrc(&FiniteClass::all_functions(3)).unwrap(), 2);
        for l in 3..=5 {
            assert_eq!(finite_nrc(&FiniteClass::point_functions(l)).unwrap(), l);
            assert_eq!(finite_nrc(&FiniteClass::point_functions_with_negative(l)).unwrap(), 2);
        }
        assert!(finite_vc(&FiniteClass::all_functions(13)).is_err());
        assert!(FiniteClass::new(2, vec![vec![Pos]]).is_err());
    }

    #[test]
    fn empty_class_certificates() {
        // no functions: every singleton is already nonrealizable
        let c = FiniteClass::new(3, vec![]).unwrap();
        assert_eq!(finite_nrc(&c).unwrap(), 1);
        assert_eq!(finite_vc(&c).unwrap(), 0);
    }
}
