//! Vectors, labeled datasets, linear representations, halfspaces and the
//! small dense kernel (Gram-matrix LU with partial pivoting) that the exact
//! oracles are built on.

use std::fmt;

use crate::error::{Error, Result};

/// Relative singularity threshold for `det(Z_I Z_I^T)`, scaled by the
/// product of squared row norms.
pub const RANK_TOL: f64 = 1e-9;

/// A binary label. `sign(0)` maps to `Pos` everywhere in the crate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Neg,
    Pos,
}

impl Label {
    #[inline]
    pub fn value(self) -> f64 {
        match self {
            Label::Pos => 1.0,
            Label::Neg => -1.0,
        }
    }

    #[inline]
    pub fn sign_of(v: f64) -> Label {
        if v >= 0.0 {
            Label::Pos
        } else {
            Label::Neg
        }
    }

    #[inline]
    pub fn flip(self) -> Label {
        match self {
            Label::Pos => Label::Neg,
            Label::Neg => Label::Pos,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Label::Pos => 1,
            Label::Neg => -1,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Pos => "+1",
            Label::Neg => "-1",
        })
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_finite(v: &[f64], what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{what} has non-finite entries")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledPoint {
    x: Vec<f64>,
    y: Label,
}

impl LabeledPoint {
    pub fn new(x: Vec<f64>, y: Label) -> Result<Self> {
        check_finite(&x, "point")?;
        Ok(LabeledPoint { x, y })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> Label {
        self.y
    }

    pub fn with_label(&self, y: Label) -> LabeledPoint {
        LabeledPoint { x: self.x.clone(), y }
    }
}

/// An ordered list of labeled points of a common dimension. Duplicates are
/// allowed, including duplicates with conflicting labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    dim: usize,
    points: Vec<LabeledPoint>,
}

/// A task's sample in feature space `R^d`.
pub type TaskDataset = Dataset;
/// A dataset in representation space `R^k`.
pub type RepDataset = Dataset;

impl Dataset {
    pub fn new(dim: usize, points: Vec<LabeledPoint>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dataset dimension must be positive"));
        }
        if let Some(p) = points.iter().find(|p| p.x.len() != dim) {
            return Err(Error::invalid(format!(
                "point of length {} in dataset of dimension {dim}",
                p.x.len()
            )));
        }
        Ok(Dataset { dim, points })
    }

    /// Builds a dataset from `(coordinates, label)` pairs, inferring the dimension
    /// from the first pair.
    pub fn from_pairs<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<f64>, Label)>,
    {
        let points = pairs
            .into_iter()
            .map(|(x, y)| LabeledPoint::new(x, y))
            .collect::<Result<Vec<_>>>()?;
        let dim = points
            .first()
            .map(|p| p.x.len())
            .ok_or_else(|| Error::invalid("cannot infer dimension of an empty dataset"))?;
        Dataset::new(dim, points)
    }

    /// One-dimensional convenience constructor.
    pub fn from_scalars(pairs: &[(f64, Label)]) -> Result<Self> {
        Dataset::from_pairs(pairs.iter().map(|&(z, y)| (vec![z], y)))
    }

    pub fn empty(dim: usize) -> Result<Self> {
        Dataset::new(dim, Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[LabeledPoint] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &LabeledPoint {
        &self.points[i]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, LabeledPoint> {
        self.points.iter()
    }

    pub fn labels(&self) -> impl Iterator<Item = Label> + '_ {
        self.points.iter().map(|p| p.y)
    }

    pub fn push(&mut self, p: LabeledPoint) -> Result<()> {
        if p.x.len() != self.dim {
            return Err(Error::invalid("point dimension mismatch"));
        }
        self.points.push(p);
        Ok(())
    }

    /// The sub-dataset at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            dim: self.dim,
            points: indices.iter().map(|&i| self.points[i].clone()).collect(),
        }
    }

    /// Points `start..start+len`.
    pub fn slice(&self, start: usize, len: usize) -> Dataset {
        Dataset {
            dim: self.dim,
            points: self.points[start..start + len].to_vec(),
        }
    }

    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        if self.dim != other.dim {
            return Err(Error::invalid("cannot concatenate datasets of different dimension"));
        }
        let mut points = self.points.clone();
        points.extend(other.points.iter().cloned());
        Ok(Dataset { dim: self.dim, points })
    }

    pub fn negate_labels(&self) -> Dataset {
        Dataset {
            dim: self.dim,
            points: self.points.iter().map(|p| p.with_label(p.y.flip())).collect(),
        }
    }

    /// Replaces every label by `flips[i] * y_i`.
    pub fn with_flips(&self, flips: &[Label]) -> Dataset {
        Dataset {
            dim: self.dim,
            points: self
                .points
                .iter()
                .zip(flips)
                .map(|(p, s)| {
                    let y = if *s == Label::Pos { p.y } else { p.y.flip() };
                    p.with_label(y)
                })
                .collect(),
        }
    }
}

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// The augmented matrix whose row `i` is `y_i (z_i ‖ 1)`.
pub type AugMatrix = Matrix;

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::invalid("ragged matrix rows"));
        }
        Matrix::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn restrict_rows(&self, indices: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Matrix { rows: indices.len(), cols: self.cols, data }
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    pub fn negated(&self) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| -x).collect(),
        }
    }
}

/// Builds the augmented matrix of a representation-space dataset.
pub fn augment(dataset: &RepDataset) -> Result<AugMatrix> {
    if dataset.is_empty() {
        return Err(Error::invalid("augment needs a nonempty dataset"));
    }
    let k = dataset.dim();
    let mut data = Vec::with_capacity(dataset.len() * (k + 1));
    for p in dataset.iter() {
        let s = p.y.value();
        data.extend(p.x.iter().map(|v| s * v));
        data.push(s);
    }
    Matrix::new(dataset.len(), k + 1, data)
}

/// An LU factorization of `Z_I Z_I^T` ready to produce minimum-norm
/// solutions of `Z_I a = target` for several targets.
#[derive(Clone, Debug)]
pub struct TightSystem {
    zi: Matrix,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl TightSystem {
    /// Factors the Gram matrix of `zi`, or reports `Singular` when the rows
    /// are (numerically) linearly dependent.
    pub fn factor(zi: &Matrix) -> Result<Self> {
        let m = zi.rows;
        if m == 0 {
            return Err(Error::invalid("tight system needs at least one row"));
        }
        if m > zi.cols {
            return Err(Error::invalid(format!(
                "{m} rows exceed the {} columns of the system",
                zi.cols
            )));
        }
        let mut g = vec![0.0; m * m];
        let mut scale = 1.0;
        for i in 0..m {
            for j in i..m {
                let v = dot(zi.row(i), zi.row(j));
                g[i * m + j] = v;
                g[j * m + i] = v;
            }
            scale *= g[i * m + i];
        }
        if scale == 0.0 {
            return Err(Error::Singular);
        }
        let mut perm: Vec<usize> = (0..m).collect();
        let mut det = 1.0;
        for c in 0..m {
            let p = (c..m)
                .max_by(|&a, &b| g[a * m + c].abs().total_cmp(&g[b * m + c].abs()))
                .unwrap_or(c);
            if p != c {
                for j in 0..m {
                    g.swap(c * m + j, p * m + j);
                }
                perm.swap(c, p);
                det = -det;
            }
            let pivot = g[c * m + c];
            det *= pivot;
            if pivot == 0.0 {
                return Err(Error::Singular);
            }
            for r in c + 1..m {
                let f = g[r * m + c] / pivot;
                g[r * m + c] = f;
                for j in c + 1..m {
                    g[r * m + j] -= f * g[c * m + j];
                }
            }
        }
        if det.abs() <= RANK_TOL * scale {
            return Err(Error::Singular);
        }
        Ok(TightSystem { zi: zi.clone(), lu: g, perm })
    }

    /// `Z_I^T (Z_I Z_I^T)^{-1} target`.
    pub fn solve(&self, target: &[f64]) -> Result<Vec<f64>> {
        let m = self.zi.rows;
        if target.len() != m {
            return Err(Error::invalid(format!(
                "target of length {} for {m} tight rows",
                target.len()
            )));
        }
        let mut y: Vec<f64> = self.perm.iter().map(|&p| target[p]).collect();
        for r in 0..m {
            for c in 0..r {
                y[r] -= self.lu[r * m + c] * y[c];
            }
        }
        for r in (0..m).rev() {
            for c in r + 1..m {
                y[r] -= self.lu[r * m + c] * y[c];
            }
            y[r] /= self.lu[r * m + r];
        }
        let mut a = vec![0.0; self.zi.cols];
        for (i, yi) in y.iter().enumerate() {
            for (aj, zij) in a.iter_mut().zip(self.zi.row(i)) {
                *aj += yi * zij;
            }
        }
        Ok(a)
    }
}

/// Minimum-norm solution `â = Z_I^+ target`, or `Error::Singular`.
pub fn solve_tight(zi: &Matrix, target: &[f64]) -> Result<Vec<f64>> {
    TightSystem::factor(zi)?.solve(target)
}

/// A linear map `x ↦ Bx` from `R^d` to `R^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearRep {
    k: usize,
    d: usize,
    data: Vec<f64>,
}

impl LinearRep {
    pub fn new(k: usize, d: usize, data: Vec<f64>) -> Result<Self> {
        if k == 0 || d == 0 {
            return Err(Error::invalid("representation dimensions must be positive"));
        }
        if data.len() != k * d {
            return Err(Error::invalid(format!("{} entries for a {k}x{d} map", data.len())));
        }
        check_finite(&data, "representation")?;
        if data.iter().all(|&v| v == 0.0) {
            return Err(Error::invalid("the zero map is not a valid representation"));
        }
        Ok(LinearRep { k, d, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = Matrix::from_rows(rows)?;
        LinearRep::new(m.rows, m.cols, m.data)
    }

    pub fn identity(d: usize) -> Self {
        let mut data = vec![0.0; d * d];
        for i in 0..d {
            data[i * d + i] = 1.0;
        }
        LinearRep { k: d, d, data }
    }

    /// `[I_k | 0]`: keeps the first `k` coordinates.
    pub fn coordinate_projection(k: usize, d: usize) -> Result<Self> {
        if k > d {
            return Err(Error::invalid("projection needs k <= d"));
        }
        let mut data = vec![0.0; k * d];
        for i in 0..k {
            data[i * d + i] = 1.0;
        }
        LinearRep::new(k, d, data)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.k).map(|i| dot(self.row(i), x)).collect()
    }

    /// `M · B` for a `k×k` matrix `M`.
    pub fn left_multiply(&self, m: &Matrix) -> Result<LinearRep> {
        if m.rows != self.k || m.cols != self.k {
            return Err(Error::invalid("left factor must be k x k"));
        }
        let mut data = vec![0.0; self.k * self.d];
        for i in 0..self.k {
            for l in 0..self.k {
                let f = m.get(i, l);
                for j in 0..self.d {
                    data[i * self.d + j] += f * self.data[l * self.d + j];
                }
            }
        }
        LinearRep::new(self.k, self.d, data)
    }

    /// Modified Gram-Schmidt on the rows; `None` when they are dependent.
    pub fn orthonormalized(&self) -> Option<LinearRep> {
        let mut data = self.data.clone();
        let d = self.d;
        for i in 0..self.k {
            for j in 0..i {
                let proj = dot(&data[i * d..(i + 1) * d], &data[j * d..(j + 1) * d]);
                for c in 0..d {
                    data[i * d + c] -= proj * data[j * d + c];
                }
            }
            let norm = dot(&data[i * d..(i + 1) * d], &data[i * d..(i + 1) * d]).sqrt();
            if norm.is_nan() || norm <= 1e-12 {
                return None;
            }
            for c in 0..d {
                data[i * d + c] /= norm;
            }
        }
        Some(LinearRep { k: self.k, d, data })
    }
}

/// Maps every point of `dataset` through `rep`, keeping labels and order.
pub fn apply_rep(rep: &LinearRep, dataset: &TaskDataset) -> Result<RepDataset> {
    if rep.d != dataset.dim() {
        return Err(Error::invalid(format!(
            "representation expects dimension {}, dataset has {}",
            rep.d,
            dataset.dim()
        )));
    }
    let points = dataset
        .iter()
        .map(|p| LabeledPoint { x: rep.apply(&p.x), y: p.y })
        .collect();
    Ok(Dataset { dim: rep.k, points })
}

/// The classifier `z ↦ sign(a·z − w)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Halfspace {
    a: Vec<f64>,
    w: f64,
}

impl Halfspace {
    pub fn new(a: Vec<f64>, w: f64) -> Result<Self> {
        check_finite(&a, "halfspace normal")?;
        if !w.is_finite() {
            return Err(Error::invalid("halfspace offset is not finite"));
        }
        if a.is_empty() {
            return Err(Error::invalid("halfspace normal must be nonempty"));
        }
        if w == 0.0 && a.iter().all(|&v| v == 0.0) {
            return Err(Error::invalid("halfspace with a = 0 and w = 0"));
        }
        Ok(Halfspace { a, w })
    }

    /// The constant classifier with value `label` on `R^k`.
    pub fn constant(k: usize, label: Label) -> Self {
        Halfspace { a: vec![0.0; k.max(1)], w: -label.value() }
    }

    /// Interprets `v = (a, c)` in augmented coordinates, so that
    /// `z'·v = y (a·z + c)` and `w = −c`.
    pub fn from_augmented(v: &[f64]) -> Result<Self> {
        let (a, c) = v
            .split_last()
            .map(|(c, a)| (a.to_vec(), *c))
            .ok_or_else(|| Error::invalid("empty augmented vector"))?;
        Halfspace::new(a, -c)
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn k(&self) -> usize {
        self.a.len()
    }

    #[inline]
    pub fn score(&self, z: &[f64]) -> f64 {
        dot(&self.a, z) - self.w
    }

    #[inline]
    pub fn classify(&self, z: &[f64]) -> Label {
        Label::sign_of(self.score(z))
    }

    /// Number of misclassified points.
    pub fn mistakes(&self, data: &RepDataset) -> usize {
        data.iter().filter(|p| self.classify(&p.x) != p.y).count()
    }

    pub fn error_rate(&self, data: &RepDataset) -> f64 {
        if data.is_empty() {
            0.0
        } else {
            self.mistakes(data) as f64 / data.len() as f64
        }
    }
}
