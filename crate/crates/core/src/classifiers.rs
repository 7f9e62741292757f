//! Binary classifiers and the voting ensemble behind agreement maps.
//!
//! Three deliberately different members ship built in: k-nearest neighbors
//! (instance based), logistic regression (linear) and Gaussian naive Bayes
//! (generative). Anything implementing [`Classifier`] can join an ensemble.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::{par, Error, Result};

pub trait Classifier: Send + Sync {
    fn name(&self) -> &str;

    /// Input width the classifier was fitted on.
    fn dim(&self) -> usize;

    /// The two labels, smaller first.
    fn classes(&self) -> [u32; 2];

    fn predict_one(&self, x: ArrayView1<'_, f64>) -> u32;

    fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Vec<u32>> {
        if x.ncols() != self.dim() {
            return Err(Error::shape(format!(
                "{} was fitted on {} features, got {}",
                self.name(),
                self.dim(),
                x.ncols()
            )));
        }
        Ok(x.rows().into_iter().map(|r| self.predict_one(r)).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClassifierKind {
    Knn { k: usize },
    LogisticRegression,
    GaussianNb,
}

impl ClassifierKind {
    pub const DEFAULT_ENSEMBLE: [ClassifierKind; 3] = [
        ClassifierKind::Knn { k: 5 },
        ClassifierKind::LogisticRegression,
        ClassifierKind::GaussianNb,
    ];
}

/// Validates binary labels; returns the sorted class pair.
fn binary_classes(x: ArrayView2<'_, f64>, labels: &[u32]) -> Result<[u32; 2]> {
    if x.nrows() != labels.len() {
        return Err(Error::shape(format!(
            "{} rows but {} labels",
            x.nrows(),
            labels.len()
        )));
    }
    let mut distinct: Vec<u32> = labels.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() != 2 {
        return Err(Error::invalid(format!(
            "binary classification needs exactly two classes, found {}",
            distinct.len()
        )));
    }
    let classes = [distinct[0], distinct[1]];
    for c in classes {
        if labels.iter().filter(|&&l| l == c).count() < 2 {
            return Err(Error::invalid(format!(
                "class {c} needs at least two samples"
            )));
        }
    }
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::invalid("training features must be finite"));
    }
    Ok(classes)
}

pub fn fit_classifier(
    kind: ClassifierKind,
    x: ArrayView2<'_, f64>,
    labels: &[u32],
) -> Result<Box<dyn Classifier>> {
    Ok(match kind {
        ClassifierKind::Knn { k } => Box::new(Knn::fit(x, labels, k)?),
        ClassifierKind::LogisticRegression => Box::new(LogisticRegression::fit(x, labels)?),
        ClassifierKind::GaussianNb => Box::new(GaussianNb::fit(x, labels)?),
    })
}

/// k-nearest neighbors, Euclidean distance, majority vote; ties go to the
/// smaller label.
#[derive(Clone, Debug)]
pub struct Knn {
    k: usize,
    points: Array2<f64>,
    labels: Vec<u32>,
    classes: [u32; 2],
}

impl Knn {
    pub fn fit(x: ArrayView2<'_, f64>, labels: &[u32], k: usize) -> Result<Self> {
        let classes = binary_classes(x, labels)?;
        if k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        Ok(Self {
            k: k.min(labels.len()),
            points: x.to_owned(),
            labels: labels.to_vec(),
            classes,
        })
    }
}

impl Classifier for Knn {
    fn name(&self) -> &str {
        "knn"
    }

    fn dim(&self) -> usize {
        self.points.ncols()
    }

    fn classes(&self) -> [u32; 2] {
        self.classes
    }

    fn predict_one(&self, x: ArrayView1<'_, f64>) -> u32 {
        // (distance, index) of the k best so far, kept sorted
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(self.k + 1);
        for (i, p) in self.points.rows().into_iter().enumerate() {
            let d: f64 = p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
            if best.len() < self.k || d < best[best.len() - 1].0 {
                let pos = best.partition_point(|&(bd, _)| bd <= d);
                best.insert(pos, (d, i));
                best.truncate(self.k);
            }
        }
        let first = best
            .iter()
            .filter(|&&(_, i)| self.labels[i] == self.classes[0])
            .count();
        if 2 * first >= best.len() {
            self.classes[0]
        } else {
            self.classes[1]
        }
    }
}

/// Logistic regression by full-batch gradient descent on the mean
/// log-loss: zero init, 500 iterations, step 0.1, no regularization.
#[derive(Clone, Debug)]
pub struct LogisticRegression {
    weights: Array1<f64>,
    bias: f64,
    classes: [u32; 2],
}

impl LogisticRegression {
    pub const ITERATIONS: usize = 500;
    pub const LEARNING_RATE: f64 = 0.1;

    pub fn fit(x: ArrayView2<'_, f64>, labels: &[u32]) -> Result<Self> {
        let classes = binary_classes(x, labels)?;
        let n = x.nrows() as f64;
        let y: Array1<f64> = labels
            .iter()
            .map(|&l| if l == classes[1] { 1.0 } else { 0.0 })
            .collect();
        let mut w = Array1::zeros(x.ncols());
        let mut b = 0.0;
        for _ in 0..Self::ITERATIONS {
            let z = x.dot(&w) + b;
            let residual = z.mapv(sigmoid) - &y;
            let gw = x.t().dot(&residual) / n;
            let gb = residual.sum() / n;
            w.scaled_add(-Self::LEARNING_RATE, &gw);
            b -= Self::LEARNING_RATE * gb;
        }
        Ok(Self {
            weights: w,
            bias: b,
            classes,
        })
    }

    /// Probability of the larger label.
    pub fn probability(&self, x: ArrayView1<'_, f64>) -> f64 {
        sigmoid(x.dot(&self.weights) + self.bias)
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl Classifier for LogisticRegression {
    fn name(&self) -> &str {
        "logistic_regression"
    }

    fn dim(&self) -> usize {
        self.weights.len()
    }

    fn classes(&self) -> [u32; 2] {
        self.classes
    }

    fn predict_one(&self, x: ArrayView1<'_, f64>) -> u32 {
        if self.probability(x) > 0.5 {
            self.classes[1]
        } else {
            self.classes[0]
        }
    }
}

/// Gaussian naive Bayes with class priors from counts. Variances get
/// `1e-9 * max feature variance` added for stability.
#[derive(Clone, Debug)]
pub struct GaussianNb {
    means: [Array1<f64>; 2],
    variances: [Array1<f64>; 2],
    log_priors: [f64; 2],
    classes: [u32; 2],
}

impl GaussianNb {
    pub fn fit(x: ArrayView2<'_, f64>, labels: &[u32]) -> Result<Self> {
        let classes = binary_classes(x, labels)?;
        let smoothing = 1e-9
            * x.var_axis(Axis(0), 0.0)
                .iter()
                .copied()
                .fold(0.0_f64, f64::max)
                .max(1e-300);
        let stats = |c: u32| {
            let idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
            let rows = x.select(Axis(0), &idx);
            let mean = rows.mean_axis(Axis(0)).expect("non-empty");
            let var = rows.var_axis(Axis(0), 0.0) + smoothing;
            (mean, var, idx.len() as f64)
        };
        let (m0, v0, n0) = stats(classes[0]);
        let (m1, v1, n1) = stats(classes[1]);
        let total = n0 + n1;
        Ok(Self {
            means: [m0, m1],
            variances: [v0, v1],
            log_priors: [(n0 / total).ln(), (n1 / total).ln()],
            classes,
        })
    }

    pub fn log_joint(&self, x: ArrayView1<'_, f64>) -> [f64; 2] {
        let lj = |c: usize| {
            let mut s = self.log_priors[c];
            for ((xi, m), v) in x.iter().zip(&self.means[c]).zip(&self.variances[c]) {
                s -= 0.5 * ((2.0 * std::f64::consts::PI * v).ln() + (xi - m) * (xi - m) / v);
            }
            s
        };
        [lj(0), lj(1)]
    }
}

impl Classifier for GaussianNb {
    fn name(&self) -> &str {
        "gaussian_nb"
    }

    fn dim(&self) -> usize {
        self.means[0].len()
    }

    fn classes(&self) -> [u32; 2] {
        self.classes
    }

    fn predict_one(&self, x: ArrayView1<'_, f64>) -> u32 {
        let [a, b] = self.log_joint(x);
        if b > a {
            self.classes[1]
        } else {
            self.classes[0]
        }
    }
}

/// An ordered set of binary classifiers sharing one label pair.
pub struct Ensemble {
    members: Vec<Box<dyn Classifier>>,
    classes: [u32; 2],
}

impl Ensemble {
    pub fn new(members: Vec<Box<dyn Classifier>>) -> Result<Self> {
        if members.len() < 2 {
            return Err(Error::invalid(format!(
                "an ensemble needs at least two members, got {}",
                members.len()
            )));
        }
        let classes = members[0].classes();
        let dim = members[0].dim();
        for m in &members[1..] {
            if m.classes() != classes || m.dim() != dim {
                return Err(Error::invalid(format!(
                    "member {} disagrees on classes or dimension",
                    m.name()
                )));
            }
        }
        Ok(Self { members, classes })
    }

    /// Fits one member per kind on the same data.
    pub fn fit(kinds: &[ClassifierKind], x: ArrayView2<'_, f64>, labels: &[u32]) -> Result<Self> {
        let members = kinds
            .iter()
            .map(|&k| fit_classifier(k, x, labels))
            .collect::<Result<Vec<_>>>()?;
        Self::new(members)
    }

    pub fn fit_default(x: ArrayView2<'_, f64>, labels: &[u32]) -> Result<Self> {
        Self::fit(&ClassifierKind::DEFAULT_ENSEMBLE, x, labels)
    }

    pub fn register(&mut self, member: Box<dyn Classifier>) -> Result<()> {
        if member.classes() != self.classes || member.dim() != self.dim() {
            return Err(Error::invalid(format!(
                "member {} disagrees on classes or dimension",
                member.name()
            )));
        }
        self.members.push(member);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.members[0].dim()
    }

    pub fn classes(&self) -> [u32; 2] {
        self.classes
    }

    pub fn members(&self) -> &[Box<dyn Classifier>] {
        &self.members
    }

    pub fn vote_one(&self, x: ArrayView1<'_, f64>) -> usize {
        self.members
            .iter()
            .filter(|m| m.predict_one(x) == self.classes[0])
            .count()
    }

    /// Per row: how many members predict `classes()[0]`.
    pub fn vote(&self, x: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
        if x.ncols() != self.dim() {
            return Err(Error::shape(format!(
                "ensemble was fitted on {} features, got {}",
                self.dim(),
                x.ncols()
            )));
        }
        Ok(par::map_indexed(x.nrows(), |i| self.vote_one(x.row(i))))
    }
}

/// Keeps only rows labelled `a` or `b`, returning their features and labels.
pub fn select_classes(x: ArrayView2<'_, f64>, labels: &[u32], a: u32, b: u32) -> (Array2<f64>, Vec<u32>) {
    let idx: Vec<usize> = (0..labels.len())
        .filter(|&i| labels[i] == a || labels[i] == b)
        .collect();
    (x.select(Axis(0), &idx), idx.iter().map(|&i| labels[i]).collect())
}
