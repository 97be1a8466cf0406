//! Dense numeric kernels shared by both networks.
//!
//! Everything here is plain `f64` with explicit loops and a fixed
//! accumulation order, so results are identical across runs and platforms.
//! The module also supplies the independent checkers the test suites lean
//! on: central finite differences, Spearman rank correlation, and a
//! chi-square tail probability.

pub mod checkpoint;
pub mod rng;

pub use rng::Rng;

use crate::error::{Error, Result};

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length must be rows*cols");
        DenseMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Sum of squared entries.
    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|w| w * w).sum()
    }

    /// `Wᵀ y`, used by the hand-derived backward passes.
    pub fn transpose_matvec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows, "transpose_matvec: rank mismatch");
        let mut out = vec![0.0; self.cols];
        for (r, &yr) in y.iter().enumerate() {
            if yr == 0.0 {
                continue;
            }
            let row = self.row(r);
            for (o, &w) in out.iter_mut().zip(row) {
                *o += w * yr;
            }
        }
        out
    }

    /// `self += scale · d xᵀ` (rank-one update for weight gradients).
    pub fn add_outer(&mut self, d: &[f64], x: &[f64], scale: f64) {
        assert_eq!(d.len(), self.rows);
        assert_eq!(x.len(), self.cols);
        for (r, &dr) in d.iter().enumerate() {
            if dr == 0.0 {
                continue;
            }
            let row = &mut self.data[r * self.cols..(r + 1) * self.cols];
            let f = dr * scale;
            for (slot, &xv) in row.iter_mut().zip(x) {
                *slot += f * xv;
            }
        }
    }
}

/// `W x + b`, accumulated left-to-right in `f64`.
pub fn affine(w: &DenseMatrix, x: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if x.len() != w.cols {
        return Err(Error::DimensionMismatch {
            op: "affine",
            expected: w.cols,
            got: x.len(),
        });
    }
    if b.len() != w.rows {
        return Err(Error::DimensionMismatch {
            op: "affine",
            expected: w.rows,
            got: b.len(),
        });
    }
    let mut out = Vec::with_capacity(w.rows);
    for r in 0..w.rows {
        let mut acc = 0.0;
        for (wv, xv) in w.row(r).iter().zip(x) {
            acc += wv * xv;
        }
        out.push(acc + b[r]);
    }
    Ok(out)
}

pub fn relu(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect()
}

/// Exponent arguments are clamped to ±[`SIGMOID_CLAMP`] so the output stays
/// strictly inside (0, 1) in `f64`.
pub const SIGMOID_CLAMP: f64 = 36.0;

#[inline]
pub fn sigmoid_scalar(x: f64) -> f64 {
    let x = x.clamp(-SIGMOID_CLAMP, SIGMOID_CLAMP);
    1.0 / (1.0 + (-x).exp())
}

pub fn sigmoid(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| sigmoid_scalar(v)).collect()
}

/// Xavier/Glorot uniform initialization: entries i.i.d. U[−b, b] with
/// b = sqrt(6 / (rows + cols)), drawn in row-major order.
pub fn xavier_init(rows: usize, cols: usize, rng: &mut Rng) -> DenseMatrix {
    assert!(rows >= 1 && cols >= 1);
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols)
        .map(|_| rng.uniform(-bound, bound))
        .collect();
    DenseMatrix::from_vec(rows, cols, data)
}

/// Adam accumulators for one parameter block.
#[derive(Debug, Clone)]
pub struct AdamState {
    label: String,
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    /// Defaults: β1 = 0.9, β2 = 0.999, ε = 1e-8.
    pub fn new(label: impl Into<String>, len: usize, learning_rate: f64) -> Self {
        AdamState {
            label: label.into(),
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One Adam update with bias correction. Errors on a non-finite gradient,
/// naming the parameter block.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState) -> Result<()> {
    assert_eq!(params.len(), state.m.len(), "adam_step: shape mismatch");
    assert_eq!(grads.len(), state.m.len(), "adam_step: shape mismatch");
    if grads.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFiniteGradient {
            block: state.label.clone(),
        });
    }
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        params[i] -= state.learning_rate * m_hat / (v_hat.sqrt() + state.epsilon);
    }
    Ok(())
}

/// Central finite-difference gradient of `f` at `point`.
///
/// This is the independent oracle every backward pass in the crate is
/// checked against; keep it free of any model code.
pub fn central_difference(mut f: impl FnMut(&[f64]) -> f64, point: &[f64], h: f64) -> Vec<f64> {
    let mut x = point.to_vec();
    let mut grad = Vec::with_capacity(point.len());
    for i in 0..point.len() {
        let orig = x[i];
        x[i] = orig + h;
        let up = f(&x);
        x[i] = orig - h;
        let down = f(&x);
        x[i] = orig;
        grad.push((up - down) / (2.0 * h));
    }
    grad
}

/// Largest per-coordinate relative difference between two gradients.
pub fn max_relative_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-6))
        .fold(0.0, f64::max)
}

fn ranks_with_ties(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).expect("non-finite rank input"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties.
///
/// Returns 0 when either input is constant (correlation undefined).
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    if xs.len() < 2 {
        return 0.0;
    }
    let rx = ranks_with_ties(xs);
    let ry = ranks_with_ties(ys);
    pearson(&rx, &ry)
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        cov += (x - mx) * (y - my);
        vx += (x - mx) * (x - mx);
        vy += (y - my) * (y - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return 0.0;
    }
    cov / (vx * vy).sqrt()
}

// Lanczos approximation, g = 7, n = 9 (standard coefficient table).
#[allow(clippy::excessive_precision)]
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

fn ln_gamma(z: f64) -> f64 {
    assert!(z > 0.0);
    if z < 0.5 {
        // reflection, not needed for chi-square but kept for completeness
        return std::f64::consts::PI.ln()
            - (std::f64::consts::PI * z).sin().ln()
            - ln_gamma(1.0 - z);
    }
    let z = z - 1.0;
    let mut acc = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized lower incomplete gamma P(a, x) by series expansion.
fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..500 {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * 1e-15 {
            break;
        }
    }
    sum * (a * x.ln() - x - ln_gamma(a)).exp()
}

/// Regularized upper incomplete gamma Q(a, x) by Lentz continued fraction.
fn gamma_q_cf(a: f64, x: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-15 {
            break;
        }
    }
    (a * x.ln() - x - ln_gamma(a)).exp() * h
}

/// Upper-tail probability of a chi-square statistic with `df` degrees of
/// freedom: P(X ≥ stat).
pub fn chi_square_p_value(stat: f64, df: usize) -> f64 {
    assert!(df >= 1);
    if stat <= 0.0 {
        return 1.0;
    }
    let a = df as f64 / 2.0;
    let x = stat / 2.0;
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_cf(a, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_identity() {
        let w = DenseMatrix::from_vec(2, 2, vec![1.0, 0.0, 0.0, 1.0]);
        let out = affine(&w, &[1.0, 2.0], &[0.0, 0.0]).unwrap();
        assert_eq!(out, vec![1.0, 2.0]);
    }

    #[test]
    fn affine_zero_weights_returns_bias() {
        let w = DenseMatrix::zeros(2, 3);
        let out = affine(&w, &[5.0, 6.0, 7.0], &[3.0, 4.0]).unwrap();
        assert_eq!(out, vec![3.0, 4.0]);
    }

    #[test]
    fn affine_matches_hand_computation() {
        // hand-multiplied 3x3 case
        let w = DenseMatrix::from_vec(3, 3, vec![2.0, -1.0, 0.5, 0.0, 3.0, 1.0, -2.0, 0.25, 4.0]);
        let x = [1.0, 2.0, -1.0];
        let b = [0.5, -0.5, 1.0];
        // row0: 2*1 + (-1)*2 + 0.5*(-1) + 0.5  = -0.5 + 0.5 = 0.0
        // row1: 0*1 + 3*2 + 1*(-1) - 0.5       = 5 - 0.5    = 4.5
        // row2: -2*1 + 0.25*2 + 4*(-1) + 1     = -5.5 + 1   = -4.5
        let out = affine(&w, &x, &b).unwrap();
        assert_eq!(out, vec![0.0, 4.5, -4.5]);
    }

    #[test]
    fn affine_dimension_mismatch() {
        let w = DenseMatrix::zeros(2, 3);
        assert!(affine(&w, &[1.0, 2.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn affine_is_linear() {
        let mut rng = Rng::new(17);
        for _ in 0..20 {
            let w = xavier_init(4, 5, &mut rng);
            let x: Vec<f64> = (0..5).map(|_| rng.uniform(-2.0, 2.0)).collect();
            let y: Vec<f64> = (0..5).map(|_| rng.uniform(-2.0, 2.0)).collect();
            let (alpha, beta) = (rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0));
            let zero = vec![0.0; 4];
            let combo: Vec<f64> = x
                .iter()
                .zip(&y)
                .map(|(&xv, &yv)| alpha * xv + beta * yv)
                .collect();
            let lhs = affine(&w, &combo, &zero).unwrap();
            let fx = affine(&w, &x, &zero).unwrap();
            let fy = affine(&w, &y, &zero).unwrap();
            for i in 0..4 {
                assert!((lhs[i] - (alpha * fx[i] + beta * fy[i])).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn relu_clamps_negatives() {
        assert_eq!(relu(&[-1.0, 0.0, 2.0]), vec![0.0, 0.0, 2.0]);
    }

    #[test]
    fn sigmoid_midpoint_and_saturation() {
        assert_eq!(sigmoid_scalar(0.0), 0.5);
        let hi = sigmoid_scalar(1e9);
        let lo = sigmoid_scalar(-1e9);
        assert!(hi < 1.0 && hi > 0.99);
        assert!(lo > 0.0 && lo < 0.01);
        assert!(sigmoid_scalar(3.0) > sigmoid_scalar(2.0));
    }

    #[test]
    fn xavier_respects_bound() {
        let mut rng = Rng::new(5);
        let m = xavier_init(50, 100, &mut rng);
        let bound = (6.0f64 / 150.0).sqrt();
        assert!(m.data().iter().all(|&w| w.abs() <= bound));
        // bound itself is ~0.2
        assert!((bound - 0.2).abs() < 0.001);
    }

    #[test]
    fn xavier_deterministic() {
        let a = xavier_init(3, 4, &mut Rng::new(9));
        let b = xavier_init(3, 4, &mut Rng::new(9));
        assert_eq!(a, b);
    }

    #[test]
    fn xavier_single_entry() {
        let m = xavier_init(1, 1, &mut Rng::new(1));
        assert!(m.get(0, 0).abs() <= 3.0f64.sqrt());
    }

    #[test]
    fn adam_zero_gradient_no_motion() {
        let mut params = vec![1.0, -2.0];
        let mut st = AdamState::new("p", 2, 0.01);
        adam_step(&mut params, &[0.0, 0.0], &mut st).unwrap();
        assert_eq!(params, vec![1.0, -2.0]);
        assert_eq!(st.step_count(), 1);
    }

    #[test]
    fn adam_step_counter_increments() {
        let mut params = vec![0.0];
        let mut st = AdamState::new("p", 1, 0.01);
        for expected in 1..=5 {
            adam_step(&mut params, &[0.5], &mut st).unwrap();
            assert_eq!(st.step_count(), expected);
        }
    }

    #[test]
    fn adam_unit_step_property() {
        // with a constant gradient the update magnitude approaches lr
        let mut param = vec![10.0];
        let mut st = AdamState::new("p", 1, 0.001);
        let mut last = param[0];
        let mut step_size = 0.0;
        for _ in 0..500 {
            adam_step(&mut param, &[3.7], &mut st).unwrap();
            step_size = (last - param[0]).abs();
            last = param[0];
        }
        assert!((step_size - 0.001).abs() < 1e-4, "step {step_size}");
    }

    #[test]
    fn adam_rejects_non_finite() {
        let mut params = vec![0.0];
        let mut st = AdamState::new("w1", 1, 0.01);
        let err = adam_step(&mut params, &[f64::NAN], &mut st).unwrap_err();
        assert!(err.to_string().contains("w1"));
    }

    #[test]
    fn finite_difference_on_quadratic() {
        // f(x) = Σ i · x_i², grad = 2 i x_i
        let f = |x: &[f64]| -> f64 { x.iter().enumerate().map(|(i, &v)| i as f64 * v * v).sum() };
        let point = [1.0, -2.0, 0.5];
        let num = central_difference(f, &point, 1e-5);
        let analytic = [0.0, -4.0, 2.0];
        assert!(max_relative_error(&analytic, &num) < 1e-4);
    }

    #[test]
    fn spearman_perfect_and_reversed() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let up = [10.0, 20.0, 30.0, 40.0];
        let down = [4.0, 3.0, 2.0, 1.0];
        assert!((spearman(&xs, &up) - 1.0).abs() < 1e-12);
        assert!((spearman(&xs, &down) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn spearman_handles_ties() {
        let xs = [1.0, 1.0, 2.0, 3.0];
        let ys = [5.0, 5.0, 6.0, 7.0];
        assert!((spearman(&xs, &ys) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chi_square_tail_known_values() {
        // classic table entries
        assert!((chi_square_p_value(3.841, 1) - 0.05).abs() < 1e-3);
        assert!((chi_square_p_value(18.307, 10) - 0.05).abs() < 1e-3);
        // median of chi-square(2) is 2 ln 2
        assert!((chi_square_p_value(2.0 * std::f64::consts::LN_2, 2) - 0.5).abs() < 1e-10);
        assert_eq!(chi_square_p_value(0.0, 5), 1.0);
    }
}
