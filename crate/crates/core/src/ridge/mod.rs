//! Closed-form multiclass ridge regression on one-hot targets.
//!
//! The model scores a sample `x` as `[x 1] · β` and predicts the arg-max
//! class. The constant column carries an intercept that is never penalized.
//!
//! Two algebraically equivalent solvers are provided:
//!
//! * **primal**: `(HᵀH + λ·diag(1,…,1,0)) β = HᵀY` with `H = [X 1]`,
//!   a `(D+1)²` system;
//! * **dual**: `A = XXᵀ + λI`, `A [Z z] = [Y 1]`, `b = 1ᵀZ / 1ᵀz`,
//!   `α = Z − z bᵀ`, `W = Xᵀα`, an `S²` system.
//!
//! [`SolverForm::auto`] picks whichever system is smaller. Both are solved by
//! Cholesky factorization with a spectral pseudo-inverse fallback when the
//! penalty is positive but the factorization still breaks down.
//!
//! All reductions run in a fixed order on one thread per product, so fitting
//! is bit-reproducible for a given row order. Prediction is parallel over
//! samples but each score is a fixed-order dot product, so results do not
//! depend on how a batch is partitioned.

mod format;
mod solve;

use faer::{Mat, MatRef};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use format::{load_model, read_model, save_model, write_model};

use crate::error::{Error, Result};
use crate::features::{Element, FeatureMatrix};
use solve::{dual_kernel, dual_weights, primal_gram, primal_rhs, solve_spd, Design};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverForm {
    Primal,
    Dual,
}

impl SolverForm {
    /// Primal when the `(D+1)²` system is no larger than the `S²` one.
    pub fn auto(dim: usize, samples: usize) -> Self {
        if dim < samples {
            SolverForm::Primal
        } else {
            SolverForm::Dual
        }
    }

    pub fn code(self) -> u8 {
        match self {
            SolverForm::Primal => 0,
            SolverForm::Dual => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(SolverForm::Primal),
            1 => Some(SolverForm::Dual),
            _ => None,
        }
    }
}

/// How the linear system was actually solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    Cholesky,
    Spectral,
}

/// Ordered, unique class names; class `i` is `names()[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSet {
    names: Vec<String>,
}

impl LabelSet {
    pub fn new(names: Vec<String>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::invalid("label set is empty"));
        }
        let mut sorted: Vec<&String> = names.iter().collect();
        sorted.sort();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::invalid(format!("duplicate class name {:?}", w[0])));
        }
        Ok(Self { names })
    }

    /// Classes named `"0"`, `"1"`, … `"k-1"`.
    pub fn numbered(k: usize) -> Self {
        Self {
            names: (0..k).map(|i| i.to_string()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, class: usize) -> Option<&str> {
        self.names.get(class).map(String::as_str)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Forces a solver; `None` selects with [`SolverForm::auto`].
    #[serde(default)]
    pub solver_form: Option<SolverForm>,
    /// z-score each feature before fitting. The transform is folded back into
    /// `β`, so the resulting model still takes raw features.
    #[serde(default)]
    pub standardize: bool,
}

/// Trained output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeModel {
    dim: usize,
    beta: Vec<f64>,
    lambda: f64,
    label_set: LabelSet,
    solver_form: SolverForm,
}

impl RidgeModel {
    /// `beta` is `(dim + 1) × classes` row-major; the last row is the bias.
    pub fn from_parts(dim: usize, beta: Vec<f64>, lambda: f64, label_set: LabelSet, solver_form: SolverForm) -> Result<Self> {
        let k = label_set.len();
        if dim == 0 {
            return Err(Error::invalid("model feature dimension is zero"));
        }
        if beta.len() != (dim + 1) * k {
            return Err(Error::invalid(format!(
                "beta holds {} values, expected {}×{k}",
                beta.len(),
                dim + 1
            )));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda must be finite and nonnegative, got {lambda}")));
        }
        if let Some(p) = beta.iter().position(|v| !v.is_finite()) {
            return Err(Error::validation(format!("non-finite beta at row {}, class {}", p / k, p % k)));
        }
        Ok(Self {
            dim,
            beta,
            lambda,
            label_set,
            solver_form,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn classes(&self) -> usize {
        self.label_set.len()
    }

    /// Row-major `(dim + 1) × classes`, bias last.
    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn weight(&self, feature: usize, class: usize) -> f64 {
        self.beta[feature * self.classes() + class]
    }

    pub fn bias(&self) -> &[f64] {
        &self.beta[self.dim * self.classes()..]
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn label_set(&self) -> &LabelSet {
        &self.label_set
    }

    pub fn solver_form(&self) -> SolverForm {
        self.solver_form
    }

    /// Frobenius norm of the weights, bias excluded.
    pub fn weight_norm(&self) -> f64 {
        self.beta[..self.dim * self.classes()].iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    fn score_row<T: Element>(&self, row: &[T], out: &mut [f64]) {
        let k = self.classes();
        out.copy_from_slice(self.bias());
        for (j, v) in row.iter().enumerate() {
            let v = v.to_f64();
            for (o, b) in out.iter_mut().zip(&self.beta[j * k..(j + 1) * k]) {
                *o += v * b;
            }
        }
    }

    fn check_width<T: Element>(&self, x: &FeatureMatrix<T>) -> Result<()> {
        if x.cols() != self.dim {
            return Err(Error::validation(format!(
                "feature width {} does not match model width {}",
                x.cols(),
                self.dim
            )));
        }
        Ok(())
    }
}

/// Index of the largest score; ties go to the lowest index.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Power-of-ten penalties from 1e-4 to 1e4.
pub fn default_lambda_grid() -> Vec<f64> {
    (-4..=4).map(|e| 10f64.powi(e)).collect()
}

/// Fits on every row of `x`.
pub fn fit<T: Element>(x: &FeatureMatrix<T>, labels: &[usize], lambda: f64, label_set: LabelSet, options: FitOptions) -> Result<RidgeModel> {
    fit_detailed(x, labels, lambda, label_set, options).map(|(m, _)| m)
}

/// As [`fit`], also reporting whether the spectral fallback was needed.
pub fn fit_detailed<T: Element>(
    x: &FeatureMatrix<T>,
    labels: &[usize],
    lambda: f64,
    label_set: LabelSet,
    options: FitOptions,
) -> Result<(RidgeModel, SolveMethod)> {
    check_inputs(x, labels, &label_set)?;
    check_lambda(lambda)?;
    let s = x.rows();
    let k = label_set.len();
    let design = design(x, options, s);
    let form = options.solver_form.unwrap_or_else(|| SolverForm::auto(x.cols(), s));
    let (w, method) = match form {
        SolverForm::Primal => {
            let g = primal_gram(&design, 0..s);
            let r = primal_rhs(&design, labels, 0..s, k);
            solve_primal(g.as_ref(), &r, lambda)?
        }
        SolverForm::Dual => {
            let kern = dual_kernel(&design, 0..s);
            solve_dual(&design, kern.as_ref(), labels, s, k, lambda)?
        }
    };
    if method == SolveMethod::Spectral {
        log::warn!("ridge fit at lambda {lambda} fell back to the spectral solver");
    }
    let beta = fold(&design, w.as_ref());
    Ok((RidgeModel::from_parts(x.cols(), beta, lambda, label_set, form)?, method))
}

/// Validation accuracy of one penalty in a [`LambdaSearch`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaScore {
    pub lambda: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaSearch {
    pub scores: Vec<LambdaScore>,
    pub chosen: f64,
}

/// Selects λ from `grid` on a validation slice, then refits on all rows.
///
/// The last `n_val` rows of `x` are held out while each candidate is fitted
/// on the rest. The most accurate candidate wins; equal accuracies prefer the
/// larger penalty. Gram or kernel matrices are computed once and shared by
/// every candidate and the final refit.
pub fn fit_with_validation<T: Element>(
    x: &FeatureMatrix<T>,
    labels: &[usize],
    n_val: usize,
    grid: &[f64],
    label_set: LabelSet,
    options: FitOptions,
) -> Result<(RidgeModel, LambdaSearch)> {
    check_inputs(x, labels, &label_set)?;
    if grid.is_empty() {
        return Err(Error::invalid("lambda grid is empty"));
    }
    for &l in grid {
        check_lambda(l)?;
    }
    let s = x.rows();
    if n_val == 0 || n_val >= s {
        return Err(Error::invalid(format!("validation slice of {n_val} rows leaves no fit or no validation data out of {s}")));
    }
    let n_fit = s - n_val;
    let k = label_set.len();
    let design = design(x, options, s);
    let form = options.solver_form.unwrap_or_else(|| SolverForm::auto(x.cols(), s));

    let mut scores = Vec::with_capacity(grid.len());
    let val_x = x.select_rows(&(n_fit..s).collect::<Vec<_>>())?;
    let val_y = &labels[n_fit..];
    let mut score = |w: Mat<f64>, lambda: f64| -> Result<()> {
        let model = RidgeModel::from_parts(x.cols(), fold(&design, w.as_ref()), lambda, label_set.clone(), form)?;
        let pred = predict(&model, &val_x)?;
        let hits = pred.iter().zip(val_y).filter(|(p, y)| p == y).count();
        scores.push(LambdaScore {
            lambda,
            accuracy: hits as f64 / n_val as f64,
        });
        Ok(())
    };

    let w = match form {
        SolverForm::Primal => {
            let mut g = primal_gram(&design, 0..n_fit);
            let mut r = primal_rhs(&design, labels, 0..n_fit, k);
            for &l in grid {
                score(solve_primal(g.as_ref(), &r, l)?.0, l)?;
            }
            let chosen = choose(&scores);
            g += primal_gram(&design, n_fit..s);
            r += primal_rhs(&design, labels, n_fit..s, k);
            solve_primal(g.as_ref(), &r, chosen)?.0
        }
        SolverForm::Dual => {
            let kern = dual_kernel(&design, 0..s);
            for &l in grid {
                let sub = kern.as_ref().submatrix(0, 0, n_fit, n_fit);
                score(solve_dual(&design, sub, labels, n_fit, k, l)?.0, l)?;
            }
            solve_dual(&design, kern.as_ref(), labels, s, k, choose(&scores))?.0
        }
    };
    let chosen = choose(&scores);
    let model = RidgeModel::from_parts(x.cols(), fold(&design, w.as_ref()), chosen, label_set, form)?;
    Ok((model, LambdaSearch { scores, chosen }))
}

fn choose(scores: &[LambdaScore]) -> f64 {
    let mut best = scores[0];
    for s in &scores[1..] {
        if s.accuracy > best.accuracy || (s.accuracy == best.accuracy && s.lambda > best.lambda) {
            best = *s;
        }
    }
    best.lambda
}

/// Row-major `S × K` scores.
pub fn predict_scores<T: Element>(model: &RidgeModel, x: &FeatureMatrix<T>) -> Result<FeatureMatrix<f64>> {
    model.check_width(x)?;
    let k = model.classes();
    let mut out = vec![0.0; x.rows() * k];
    out.par_chunks_mut(k.max(1))
        .enumerate()
        .for_each(|(i, o)| model.score_row(x.row(i), o));
    FeatureMatrix::new(x.rows(), k, out)
}

pub fn predict<T: Element>(model: &RidgeModel, x: &FeatureMatrix<T>) -> Result<Vec<usize>> {
    model.check_width(x)?;
    let k = model.classes();
    Ok((0..x.rows())
        .into_par_iter()
        .map_init(
            || vec![0.0; k],
            |buf, i| {
                model.score_row(x.row(i), buf);
                argmax(buf)
            },
        )
        .collect())
}

/// Accuracy and confusion matrix of `model` on labelled samples.
pub fn evaluate<T: Element>(model: &RidgeModel, x: &FeatureMatrix<T>, labels: &[usize]) -> Result<(f64, ConfusionMatrix)> {
    if x.rows() == 0 {
        return Err(Error::validation("evaluation set is empty"));
    }
    if labels.len() != x.rows() {
        return Err(Error::validation(format!("{} labels for {} samples", labels.len(), x.rows())));
    }
    let pred = predict(model, x)?;
    let cm = ConfusionMatrix::from_predictions(labels, &pred, model.classes())?;
    Ok((cm.accuracy(), cm))
}

/// `counts[t][p]`: samples of true class `t` predicted as `p`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        Self {
            counts: vec![vec![0; classes]; classes],
        }
    }

    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let k = counts.len();
        if counts.iter().any(|r| r.len() != k) {
            return Err(Error::invalid("confusion matrix must be square"));
        }
        Ok(Self { counts })
    }

    pub fn from_predictions(truth: &[usize], predicted: &[usize], classes: usize) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::validation(format!(
                "{} true labels but {} predictions",
                truth.len(),
                predicted.len()
            )));
        }
        let mut cm = Self::new(classes);
        for (&t, &p) in truth.iter().zip(predicted) {
            cm.record(t, p)?;
        }
        Ok(cm)
    }

    pub fn record(&mut self, truth: usize, predicted: usize) -> Result<()> {
        let k = self.classes();
        if truth >= k || predicted >= k {
            return Err(Error::validation(format!("class pair ({truth}, {predicted}) out of range for {k} classes")));
        }
        self.counts[truth][predicted] += 1;
        Ok(())
    }

    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth][predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes()).map(|i| self.counts[i][i]).sum()
    }

    /// `trace / total`, or 0 for an empty matrix.
    pub fn accuracy(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            t => self.trace() as f64 / t as f64,
        }
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }
}

fn check_inputs<T: Element>(x: &FeatureMatrix<T>, labels: &[usize], label_set: &LabelSet) -> Result<()> {
    if x.rows() == 0 {
        return Err(Error::invalid("cannot fit on zero samples"));
    }
    if x.cols() == 0 {
        return Err(Error::invalid("cannot fit on zero features"));
    }
    if labels.len() != x.rows() {
        return Err(Error::invalid(format!("{} labels for {} samples", labels.len(), x.rows())));
    }
    let k = label_set.len();
    if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
        return Err(Error::invalid(format!("label {bad} out of range for {k} classes")));
    }
    x.ensure_finite()
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda >= 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("lambda must be finite and nonnegative, got {lambda}")))
    }
}

fn design<T: Element>(x: &FeatureMatrix<T>, options: FitOptions, rows: usize) -> Design<'_, T> {
    if options.standardize {
        Design::standardized(x, 0..rows)
    } else {
        Design::raw(x)
    }
}

fn solve_primal(gram: MatRef<'_, f64>, rhs: &Mat<f64>, lambda: f64) -> Result<(Mat<f64>, SolveMethod)> {
    let d = gram.nrows() - 1;
    solve_spd(
        || {
            let mut a = gram.to_owned();
            for i in 0..d {
                a[(i, i)] += lambda;
            }
            a
        },
        rhs.clone(),
        lambda == 0.0,
    )
}

/// Solves the bordered dual system on the first `n` rows; returns `(D+1) × K`.
fn solve_dual<T: Element>(
    design: &Design<'_, T>,
    kernel: MatRef<'_, f64>,
    labels: &[usize],
    n: usize,
    k: usize,
    lambda: f64,
) -> Result<(Mat<f64>, SolveMethod)> {
    let mut rhs = Mat::<f64>::zeros(n, k + 1);
    for (i, &c) in labels[..n].iter().enumerate() {
        rhs[(i, c)] = 1.0;
        rhs[(i, k)] = 1.0;
    }
    let (sol, method) = solve_spd(
        || {
            let mut a = kernel.to_owned();
            for i in 0..n {
                a[(i, i)] += lambda;
            }
            a
        },
        rhs,
        lambda == 0.0,
    )?;
    let denom: f64 = (0..n).map(|i| sol[(i, k)]).sum();
    if !(denom.abs() > 0.0) {
        return Err(Error::validation("dual system does not determine the intercept"));
    }
    let bias: Vec<f64> = (0..k).map(|c| (0..n).map(|i| sol[(i, c)]).sum::<f64>() / denom).collect();
    let alpha = Mat::<f64>::from_fn(n, k, |i, c| sol[(i, c)] - sol[(i, k)] * bias[c]);
    drop(sol);
    let w = dual_weights(design, 0..n, alpha.as_ref());
    let d = design.dim();
    Ok((Mat::from_fn(d + 1, k, |j, c| if j < d { w[(j, c)] } else { bias[c] }), method))
}

/// Maps standardized-space weights back onto raw features, row-major.
fn fold<T: Element>(design: &Design<'_, T>, w: MatRef<'_, f64>) -> Vec<f64> {
    let d = design.dim();
    let k = w.ncols();
    let mut beta = vec![0.0; (d + 1) * k];
    for j in 0..=d {
        for c in 0..k {
            beta[j * k + c] = w[(j, c)];
        }
    }
    if let Some((shift, scale)) = design.affine() {
        for j in 0..d {
            for c in 0..k {
                let v = w[(j, c)] * scale[j];
                beta[j * k + c] = v;
                beta[d * k + c] -= shift[j] * v;
            }
        }
    }
    beta
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity(k: usize) -> FeatureMatrix<f64> {
        FeatureMatrix::new(k, k, (0..k * k).map(|i| if i % (k + 1) == 0 { 1.0 } else { 0.0 }).collect()).unwrap()
    }

    #[test]
    fn interpolates_one_hot_square_system() {
        let x = identity(4);
        let labels = [0, 1, 2, 3];
        let model = fit(&x, &labels, 0.0, LabelSet::numbered(4), FitOptions::default()).unwrap();
        assert_eq!(model.solver_form(), SolverForm::Dual);
        assert_eq!(predict(&model, &x).unwrap(), labels);
        let (acc, cm) = evaluate(&model, &x, &labels).unwrap();
        assert_eq!(acc, 1.0);
        assert_eq!(cm.trace(), 4);
    }

    #[test]
    fn huge_penalty_collapses_to_majority() {
        let x = FeatureMatrix::<f64>::from_rows(&[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [0.5, -0.5], [-1.0, 0.3]]).unwrap();
        let labels = [0, 1, 1, 1, 0];
        for form in [SolverForm::Primal, SolverForm::Dual] {
            let opts = FitOptions {
                solver_form: Some(form),
                ..Default::default()
            };
            let model = fit(&x, &labels, 1e12, LabelSet::numbered(2), opts).unwrap();
            assert!(model.weight_norm() < 1e-10, "{form:?}: {}", model.weight_norm());
            assert!((model.bias()[1] - 0.6).abs() < 1e-9);
            assert_eq!(predict(&model, &x).unwrap(), vec![1; 5]);
        }
    }

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax(&[0.9, 0.1, 0.0]), 0);
        assert_eq!(argmax(&[0.5, 0.5, 0.0]), 0);
        assert_eq!(argmax(&[0.0, 0.2, 0.2]), 1);
    }

    #[test]
    fn confusion_matches_hand_tally() {
        let truth = [0, 0, 1, 1, 1, 2, 2, 2, 2];
        let pred = [0, 1, 1, 1, 2, 2, 0, 2, 2];
        let cm = ConfusionMatrix::from_predictions(&truth, &pred, 3).unwrap();
        assert_eq!(cm.counts(), &[vec![1, 1, 0], vec![0, 2, 1], vec![1, 0, 3]]);
        assert_eq!(cm.row_sums(), vec![2, 3, 4]);
        assert!((cm.accuracy() - 6.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn singular_primal_at_zero_penalty() {
        let x = FeatureMatrix::<f64>::from_rows(&[[1.0, 2.0], [2.0, 4.0], [3.0, 6.0], [4.0, 8.0]]).unwrap();
        let err = fit(&x, &[0, 1, 0, 1], 0.0, LabelSet::numbered(2), FitOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Singular { rank: 2, dim: 3 }), "{err}");
    }

    #[test]
    fn standardized_fit_accepts_raw_features() {
        let x = FeatureMatrix::<f64>::from_rows(&[[10.0, 200.0], [12.0, 180.0], [30.0, 20.0], [33.0, 10.0], [31.0, 40.0]]).unwrap();
        let labels = [0, 0, 1, 1, 1];
        let opts = FitOptions {
            standardize: true,
            ..Default::default()
        };
        let model = fit(&x, &labels, 1e-3, LabelSet::numbered(2), opts).unwrap();
        assert_eq!(predict(&model, &x).unwrap(), labels);
    }

    #[test]
    fn grid_prefers_larger_penalty_on_ties() {
        let x = identity(6);
        let labels = [0, 1, 0, 1, 0, 1];
        let (_, search) = fit_with_validation(&x, &labels, 2, &[1e-3, 1e-2], LabelSet::numbered(2), FitOptions::default()).unwrap();
        assert_eq!(search.scores[0].accuracy, search.scores[1].accuracy);
        assert_eq!(search.chosen, 1e-2);
    }

    #[test]
    fn rejects_bad_inputs() {
        let x = identity(2);
        assert!(fit(&x, &[0, 2], 1.0, LabelSet::numbered(2), FitOptions::default()).is_err());
        assert!(fit(&x, &[0, 1], -1.0, LabelSet::numbered(2), FitOptions::default()).is_err());
        let nan = FeatureMatrix::<f64>::from_rows(&[[f64::NAN, 0.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(fit(&nan, &[0, 1], 1.0, LabelSet::numbered(2), FitOptions::default()), Err(Error::Validation(_))));
        let model = fit(&x, &[0, 1], 1.0, LabelSet::numbered(2), FitOptions::default()).unwrap();
        assert!(predict(&model, &identity(3)).is_err());
        assert!(LabelSet::new(vec!["a".into(), "a".into()]).is_err());
    }
}
