//! Feed-forward and LSTM networks with hand-written backpropagation.
//!
//! Parameters of a network live in one flat vector so that the optimizer,
//! gradient clipping and checkpointing can treat them uniformly. Batches are
//! column-major: an input batch is a `features x batch` matrix.

use nalgebra::{DMatrix, DMatrixView};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Tanh,
}

/// Orthogonal `rows x cols` matrix scaled by `gain`.
pub fn orthogonal<R: Rng + ?Sized>(rows: usize, cols: usize, gain: f64, rng: &mut R) -> Mat {
    let (big, small) = (rows.max(cols), rows.min(cols));
    let a = Mat::from_fn(big, small, |_, _| rng.sample(StandardNormal));
    let qr = a.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..small {
        if r[(k, k)] < 0.0 {
            q.column_mut(k).neg_mut();
        }
    }
    let q = if rows >= cols { q } else { q.transpose() };
    q * gain
}

fn view(params: &[f64], offset: usize, rows: usize, cols: usize) -> DMatrixView<'_, f64> {
    DMatrixView::from_slice(&params[offset..offset + rows * cols], rows, cols)
}

fn add_to(grads: &mut [f64], offset: usize, m: &Mat) {
    for (g, v) in grads[offset..offset + m.len()].iter_mut().zip(m.iter()) {
        *g += v;
    }
}

/// `y = W x + b` for every column of `x`.
fn affine(w: DMatrixView<'_, f64>, b: &[f64], x: &Mat) -> Mat {
    let mut y = w * x;
    for mut col in y.column_iter_mut() {
        for (v, bi) in col.iter_mut().zip(b) {
            *v += bi;
        }
    }
    y
}

fn row_sums(m: &Mat) -> Mat {
    let mut out = Mat::zeros(m.nrows(), 1);
    for col in m.column_iter() {
        out += col;
    }
    out
}

/// Fully connected network. Hidden layers use `tanh`; the last layer uses
/// `output`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    sizes: Vec<usize>,
    output: Activation,
    params: Vec<f64>,
}

/// Activations recorded by [`Mlp::forward`] for the backward pass.
#[derive(Clone, Debug)]
pub struct MlpCache {
    /// `layers[0]` is the input, `layers[k]` the output of layer `k`.
    layers: Vec<Mat>,
}

impl Mlp {
    /// Zero-initialized network with layer widths `sizes` (input first).
    pub fn zeros(sizes: &[usize], output: Activation) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs input and output widths");
        let n = sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        Mlp { sizes: sizes.to_vec(), output, params: vec![0.0; n] }
    }

    /// Orthogonal weights with gain `sqrt(2)` on hidden layers and
    /// `head_gain` on the last layer; zero biases.
    pub fn orthogonal<R: Rng + ?Sized>(sizes: &[usize], output: Activation, head_gain: f64, rng: &mut R) -> Self {
        let mut net = Self::zeros(sizes, output);
        let layers = sizes.len() - 1;
        let mut offset = 0;
        for l in 0..layers {
            let (i, o) = (sizes[l], sizes[l + 1]);
            let gain = if l + 1 == layers { head_gain } else { std::f64::consts::SQRT_2 };
            let w = orthogonal(o, i, gain, rng);
            net.params[offset..offset + o * i].copy_from_slice(w.as_slice());
            offset += o * i + o;
        }
        net
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("non-empty")
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    /// Offsets of the weight matrix (`out x in`, column-major) and bias of layer `l`.
    fn layout(&self, l: usize) -> (usize, usize) {
        let mut offset = 0;
        for k in 0..l {
            offset += self.sizes[k] * self.sizes[k + 1] + self.sizes[k + 1];
        }
        (offset, offset + self.sizes[l] * self.sizes[l + 1])
    }

    fn activation(&self, l: usize) -> Activation {
        if l + 2 == self.sizes.len() {
            self.output
        } else {
            Activation::Tanh
        }
    }

    fn check_input(&self, x: &Mat) -> Result<()> {
        if x.nrows() != self.input_dim() {
            return Err(Error::DimensionMismatch { expected: self.input_dim(), got: x.nrows() });
        }
        Ok(())
    }

    pub fn forward(&self, x: &Mat) -> Result<(Mat, MlpCache)> {
        self.check_input(x)?;
        let mut layers = Vec::with_capacity(self.sizes.len());
        layers.push(x.clone());
        for l in 0..self.sizes.len() - 1 {
            let (wo, bo) = self.layout(l);
            let (i, o) = (self.sizes[l], self.sizes[l + 1]);
            let mut y = affine(view(&self.params, wo, o, i), &self.params[bo..bo + o], layers.last().expect("input"));
            if self.activation(l) == Activation::Tanh {
                y.apply(|v| *v = v.tanh());
            }
            layers.push(y);
        }
        Ok((layers.last().expect("output").clone(), MlpCache { layers }))
    }

    /// Forward pass without recording activations.
    pub fn predict(&self, x: &Mat) -> Result<Mat> {
        self.check_input(x)?;
        let mut h = x.clone();
        for l in 0..self.sizes.len() - 1 {
            let (wo, bo) = self.layout(l);
            let (i, o) = (self.sizes[l], self.sizes[l + 1]);
            h = affine(view(&self.params, wo, o, i), &self.params[bo..bo + o], &h);
            if self.activation(l) == Activation::Tanh {
                h.apply(|v| *v = v.tanh());
            }
        }
        Ok(h)
    }

    /// Accumulates parameter gradients into `grads` and returns the
    /// gradient with respect to the input.
    pub fn backward(&self, cache: &MlpCache, grad_out: &Mat, grads: &mut [f64]) -> Mat {
        let mut delta = grad_out.clone();
        for l in (0..self.sizes.len() - 1).rev() {
            let out = &cache.layers[l + 1];
            if self.activation(l) == Activation::Tanh {
                delta.zip_apply(out, |d, y| *d *= 1.0 - y * y);
            }
            let (wo, bo) = self.layout(l);
            let (i, o) = (self.sizes[l], self.sizes[l + 1]);
            let input = &cache.layers[l];
            add_to(grads, wo, &(&delta * input.transpose()));
            add_to(grads, bo, &row_sums(&delta));
            delta = view(&self.params, wo, o, i).transpose() * &delta;
        }
        delta
    }
}

/// Hidden and cell state of an LSTM for a batch, `hidden x batch` each.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LstmState {
    pub h: Mat,
    pub c: Mat,
}

impl LstmState {
    pub fn zeros(hidden: usize, batch: usize) -> Self {
        LstmState { h: Mat::zeros(hidden, batch), c: Mat::zeros(hidden, batch) }
    }

    /// Column `k` as a single-sequence state.
    pub fn column(&self, k: usize) -> LstmState {
        LstmState { h: self.h.columns(k, 1).into_owned(), c: self.c.columns(k, 1).into_owned() }
    }

    /// Concatenates single- or multi-column states side by side.
    pub fn stack(states: &[&LstmState]) -> LstmState {
        let cols: usize = states.iter().map(|s| s.h.ncols()).sum();
        let hidden = states.first().map_or(0, |s| s.h.nrows());
        let mut out = LstmState::zeros(hidden, cols);
        let mut k = 0;
        for s in states {
            let n = s.h.ncols();
            out.h.columns_mut(k, n).copy_from(&s.h);
            out.c.columns_mut(k, n).copy_from(&s.c);
            k += n;
        }
        out
    }
}

/// Single LSTM layer, gate order `[input, forget, cell, output]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lstm {
    input: usize,
    hidden: usize,
    params: Vec<f64>,
}

#[derive(Clone, Debug)]
struct LstmStepCache {
    x: Mat,
    h_prev: Mat,
    c_prev: Mat,
    gates: Mat,
    tanh_c: Mat,
}

#[derive(Clone, Debug)]
pub struct LstmCache {
    steps: Vec<LstmStepCache>,
}

fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

impl Lstm {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        Lstm { input, hidden, params: vec![0.0; 4 * hidden * (input + hidden + 1)] }
    }

    /// Orthogonal input and recurrent weights, zero biases.
    pub fn orthogonal<R: Rng + ?Sized>(input: usize, hidden: usize, rng: &mut R) -> Self {
        let mut net = Self::zeros(input, hidden);
        let w = orthogonal(4 * hidden, input, 1.0, rng);
        let u = orthogonal(4 * hidden, hidden, 1.0, rng);
        let (wo, uo, _) = net.layout();
        net.params[wo..wo + w.len()].copy_from_slice(w.as_slice());
        net.params[uo..uo + u.len()].copy_from_slice(u.as_slice());
        net
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn input_dim(&self) -> usize {
        self.input
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn layout(&self) -> (usize, usize, usize) {
        let w = 0;
        let u = 4 * self.hidden * self.input;
        let b = u + 4 * self.hidden * self.hidden;
        (w, u, b)
    }

    fn step_raw(&self, x: &Mat, state: &LstmState) -> (Mat, LstmState, Mat) {
        let hd = self.hidden;
        let (wo, uo, bo) = self.layout();
        let mut z = affine(view(&self.params, wo, 4 * hd, self.input), &self.params[bo..bo + 4 * hd], x);
        z += view(&self.params, uo, 4 * hd, hd) * &state.h;
        for mut col in z.column_iter_mut() {
            for (r, v) in col.iter_mut().enumerate() {
                *v = if (2 * hd..3 * hd).contains(&r) { v.tanh() } else { sigmoid(*v) };
            }
        }
        let b = x.ncols();
        let mut c = Mat::zeros(hd, b);
        let mut tanh_c = Mat::zeros(hd, b);
        let mut h = Mat::zeros(hd, b);
        for k in 0..b {
            for r in 0..hd {
                let (i, f, g, o) = (z[(r, k)], z[(hd + r, k)], z[(2 * hd + r, k)], z[(3 * hd + r, k)]);
                let cn = f * state.c[(r, k)] + i * g;
                c[(r, k)] = cn;
                tanh_c[(r, k)] = cn.tanh();
                h[(r, k)] = o * tanh_c[(r, k)];
            }
        }
        (z, LstmState { h, c }, tanh_c)
    }

    /// One step without caching.
    pub fn step(&self, x: &Mat, state: &LstmState) -> Result<LstmState> {
        if x.nrows() != self.input {
            return Err(Error::DimensionMismatch { expected: self.input, got: x.nrows() });
        }
        Ok(self.step_raw(x, state).1)
    }

    /// Runs a sequence, returning hidden outputs per step and the final state.
    pub fn forward(&self, xs: &[Mat], init: &LstmState) -> Result<(Vec<Mat>, LstmState, LstmCache)> {
        let mut state = init.clone();
        let mut outs = Vec::with_capacity(xs.len());
        let mut steps = Vec::with_capacity(xs.len());
        for x in xs {
            if x.nrows() != self.input {
                return Err(Error::DimensionMismatch { expected: self.input, got: x.nrows() });
            }
            let (gates, next, tanh_c) = self.step_raw(x, &state);
            steps.push(LstmStepCache { x: x.clone(), h_prev: state.h.clone(), c_prev: state.c.clone(), gates, tanh_c });
            outs.push(next.h.clone());
            state = next;
        }
        Ok((outs, state, LstmCache { steps }))
    }

    /// Backpropagation through time. `grad_h[t]` is the loss gradient with
    /// respect to the hidden output at step `t`; the initial state is treated
    /// as a constant. Returns the gradients with respect to the inputs.
    pub fn backward(&self, cache: &LstmCache, grad_h: &[Mat], grads: &mut [f64]) -> Vec<Mat> {
        let hd = self.hidden;
        let (wo, uo, bo) = self.layout();
        let w = view(&self.params, wo, 4 * hd, self.input);
        let u = view(&self.params, uo, 4 * hd, hd);
        let t_len = cache.steps.len();
        let batch = grad_h.first().map_or(0, |g| g.ncols());
        let mut dh_next = Mat::zeros(hd, batch);
        let mut dc_next = Mat::zeros(hd, batch);
        let mut dxs = vec![Mat::zeros(0, 0); t_len];
        let mut dw = Mat::zeros(4 * hd, self.input);
        let mut du = Mat::zeros(4 * hd, hd);
        let mut db = Mat::zeros(4 * hd, 1);
        for t in (0..t_len).rev() {
            let s = &cache.steps[t];
            let dh = &grad_h[t] + &dh_next;
            let mut dz = Mat::zeros(4 * hd, batch);
            let mut dc_prev = Mat::zeros(hd, batch);
            for k in 0..batch {
                for r in 0..hd {
                    let (i, f, g, o) = (s.gates[(r, k)], s.gates[(hd + r, k)], s.gates[(2 * hd + r, k)], s.gates[(3 * hd + r, k)]);
                    let tc = s.tanh_c[(r, k)];
                    let dc = dc_next[(r, k)] + dh[(r, k)] * o * (1.0 - tc * tc);
                    dz[(r, k)] = dc * g * i * (1.0 - i);
                    dz[(hd + r, k)] = dc * s.c_prev[(r, k)] * f * (1.0 - f);
                    dz[(2 * hd + r, k)] = dc * i * (1.0 - g * g);
                    dz[(3 * hd + r, k)] = dh[(r, k)] * tc * o * (1.0 - o);
                    dc_prev[(r, k)] = dc * f;
                }
            }
            dw += &dz * s.x.transpose();
            du += &dz * s.h_prev.transpose();
            db += row_sums(&dz);
            dxs[t] = w.transpose() * &dz;
            dh_next = u.transpose() * &dz;
            dc_next = dc_prev;
        }
        add_to(grads, wo, &dw);
        add_to(grads, uo, &du);
        add_to(grads, bo, &db);
        dxs
    }
}

/// Feature trunk, one LSTM layer and a linear head.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecurrentNet {
    trunk: Mlp,
    lstm: Lstm,
    head: Mlp,
}

pub struct RecurrentCache {
    trunk: Vec<MlpCache>,
    lstm: LstmCache,
    head: Vec<MlpCache>,
}

impl RecurrentNet {
    /// `trunk_sizes` runs from the input width to the feature width.
    pub fn orthogonal<R: Rng + ?Sized>(trunk_sizes: &[usize], hidden: usize, out: usize, head_gain: f64, rng: &mut R) -> Self {
        let trunk = Mlp::orthogonal(trunk_sizes, Activation::Tanh, std::f64::consts::SQRT_2, rng);
        let lstm = Lstm::orthogonal(trunk.output_dim(), hidden, rng);
        let head = Mlp::orthogonal(&[hidden, out], Activation::Identity, head_gain, rng);
        RecurrentNet { trunk, lstm, head }
    }

    pub fn zeros(trunk_sizes: &[usize], hidden: usize, out: usize) -> Self {
        RecurrentNet {
            trunk: Mlp::zeros(trunk_sizes, Activation::Tanh),
            lstm: Lstm::zeros(*trunk_sizes.last().expect("non-empty"), hidden),
            head: Mlp::zeros(&[hidden, out], Activation::Identity),
        }
    }

    pub fn hidden(&self) -> usize {
        self.lstm.hidden()
    }

    pub fn input_dim(&self) -> usize {
        self.trunk.input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.head.output_dim()
    }

    pub fn n_params(&self) -> usize {
        self.trunk.params.len() + self.lstm.params.len() + self.head.params.len()
    }

    pub fn params(&self) -> Vec<f64> {
        [self.trunk.params(), self.lstm.params(), self.head.params()].concat()
    }

    pub fn set_params(&mut self, flat: &[f64]) {
        let (a, rest) = flat.split_at(self.trunk.params.len());
        let (b, c) = rest.split_at(self.lstm.params.len());
        self.trunk.params.copy_from_slice(a);
        self.lstm.params.copy_from_slice(b);
        self.head.params.copy_from_slice(c);
    }

    pub fn step(&self, x: &Mat, state: &LstmState) -> Result<(Mat, LstmState)> {
        let feat = self.trunk.predict(x)?;
        let next = self.lstm.step(&feat, state)?;
        Ok((self.head.predict(&next.h)?, next))
    }

    pub fn forward(&self, xs: &[Mat], init: &LstmState) -> Result<(Vec<Mat>, RecurrentCache)> {
        let mut feats = Vec::with_capacity(xs.len());
        let mut trunk = Vec::with_capacity(xs.len());
        for x in xs {
            let (f, c) = self.trunk.forward(x)?;
            feats.push(f);
            trunk.push(c);
        }
        let (hs, _, lstm) = self.lstm.forward(&feats, init)?;
        let mut outs = Vec::with_capacity(xs.len());
        let mut head = Vec::with_capacity(xs.len());
        for h in &hs {
            let (y, c) = self.head.forward(h)?;
            outs.push(y);
            head.push(c);
        }
        Ok((outs, RecurrentCache { trunk, lstm, head }))
    }

    /// Accumulates gradients into `grads` (layout of [`RecurrentNet::params`]).
    pub fn backward(&self, cache: &RecurrentCache, grad_out: &[Mat], grads: &mut [f64]) {
        let nt = self.trunk.params.len();
        let nl = self.lstm.params.len();
        let (gt, rest) = grads.split_at_mut(nt);
        let (gl, gh) = rest.split_at_mut(nl);
        let grad_h: Vec<Mat> = cache.head.iter().zip(grad_out).map(|(c, g)| self.head.backward(c, g, gh)).collect();
        let grad_feat = self.lstm.backward(&cache.lstm, &grad_h, gl);
        for (c, g) in cache.trunk.iter().zip(&grad_feat) {
            self.trunk.backward(c, g, gt);
        }
    }
}

/// A column vector as a `n x 1` matrix.
pub fn column(v: &[f64]) -> Mat {
    Mat::from_column_slice(v.len(), 1, v)
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_params<R: Rng>(p: &mut [f64], scale: f64, rng: &mut R) {
        for v in p {
            *v = scale * rng.sample::<f64, _>(StandardNormal);
        }
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / (a.abs() + b.abs()).max(1e-8)
    }

    #[test]
    fn zero_weights_give_zero_output() {
        let net = Mlp::zeros(&[3, 5, 2], Activation::Identity);
        let y = net.predict(&Mat::from_element(3, 4, 0.7)).unwrap();
        assert!(y.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn single_tanh_layer_by_hand() {
        let mut net = Mlp::zeros(&[2, 1], Activation::Tanh);
        // column-major W (1 x 2) = [0.5, -1.0], b = 0.25
        net.params_mut().copy_from_slice(&[0.5, -1.0, 0.25]);
        let y = net.predict(&column(&[2.0, 0.5])).unwrap();
        assert!((y[(0, 0)] - (0.5f64 * 2.0 - 0.5 + 0.25).tanh()).abs() < 1e-12);
    }

    #[test]
    fn parameter_count_matches_architecture() {
        let net = Mlp::zeros(&[1, 256, 128, 64, 2], Activation::Identity);
        assert_eq!(net.n_params(), 256 + 256 + 256 * 128 + 128 + 128 * 64 + 64 + 64 * 2 + 2);
        assert_eq!(Lstm::zeros(64, 256).params().len(), 4 * 256 * (64 + 256 + 1));
    }

    #[test]
    fn orthogonal_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = orthogonal(6, 4, 1.0, &mut rng);
        let g = w.transpose() * &w;
        assert!((g - Mat::identity(4, 4)).amax() < 1e-12);
        let w = orthogonal(3, 7, 2.0, &mut rng);
        let g = &w * w.transpose();
        assert!((g - Mat::identity(3, 3) * 4.0).amax() < 1e-12);
    }

    #[test]
    fn linear_net_squared_loss_gradient() {
        // loss = (w.x + b - y)^2, dL/dw = 2 (yhat - y) x
        let mut net = Mlp::zeros(&[3, 1], Activation::Identity);
        net.params_mut().copy_from_slice(&[0.1, -0.2, 0.3, 0.05]);
        let x = column(&[1.0, 2.0, -1.0]);
        let (yhat, cache) = net.forward(&x).unwrap();
        let err = yhat[(0, 0)] - 0.7;
        let mut g = vec![0.0; 4];
        net.backward(&cache, &Mat::from_element(1, 1, 2.0 * err), &mut g);
        for k in 0..3 {
            assert!((g[k] - 2.0 * err * x[(k, 0)]).abs() < 1e-14);
        }
        assert!((g[3] - 2.0 * err).abs() < 1e-14);
    }

    #[test]
    fn lstm_zero_input_zero_state_stays_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut lstm = Lstm::orthogonal(3, 4, &mut rng);
        // zero biases keep the cell candidate at tanh(0) = 0
        let (_, _, bo) = lstm.layout();
        lstm.params_mut()[bo..].iter_mut().for_each(|v| *v = 0.0);
        let s = lstm.step(&Mat::zeros(3, 2), &LstmState::zeros(4, 2)).unwrap();
        assert!(s.h.iter().chain(s.c.iter()).all(|v| *v == 0.0));
    }

    #[test]
    fn dimension_mismatch() {
        let net = Mlp::zeros(&[3, 2], Activation::Identity);
        assert!(net.predict(&Mat::zeros(2, 1)).is_err());
    }

    #[test]
    fn mlp_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut net = Mlp::orthogonal(&[3, 6, 5, 2], Activation::Identity, 1.0, &mut rng);
        random_params(net.params_mut(), 0.5, &mut rng);
        let x = Mat::from_fn(3, 4, |_, _| rng.sample(StandardNormal));
        let c = Mat::from_fn(2, 4, |_, _| rng.sample(StandardNormal));
        let loss = |n: &Mlp| n.predict(&x).unwrap().component_mul(&c).sum();
        let (_, cache) = net.forward(&x).unwrap();
        let mut g = vec![0.0; net.n_params()];
        net.backward(&cache, &c, &mut g);
        let eps = 1e-5;
        for k in 0..net.n_params() {
            let mut p = net.clone();
            p.params_mut()[k] += eps;
            let mut m = net.clone();
            m.params_mut()[k] -= eps;
            let fd = (loss(&p) - loss(&m)) / (2.0 * eps);
            assert!(rel_err(fd, g[k]) < 1e-4 || (fd - g[k]).abs() < 1e-9, "param {k}: {fd} vs {}", g[k]);
        }
    }

    fn random_mat<R: Rng>(r: usize, c: usize, rng: &mut R) -> Mat {
        Mat::from_fn(r, c, |_, _| rng.sample(StandardNormal))
    }

    #[test]
    fn lstm_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut lstm = Lstm::orthogonal(3, 4, &mut rng);
        random_params(lstm.params_mut(), 0.5, &mut rng);
        let xs: Vec<Mat> = (0..5).map(|_| random_mat(3, 2, &mut rng)).collect();
        let init = LstmState { h: random_mat(4, 2, &mut rng) * 0.3, c: random_mat(4, 2, &mut rng) * 0.3 };
        let cs: Vec<Mat> = (0..5).map(|_| random_mat(4, 2, &mut rng)).collect();
        let loss = |l: &Lstm, xs: &[Mat]| {
            let (hs, _, _) = l.forward(xs, &init).unwrap();
            hs.iter().zip(&cs).map(|(h, c)| h.component_mul(c).sum()).sum::<f64>()
        };
        let (_, _, cache) = lstm.forward(&xs, &init).unwrap();
        let mut g = vec![0.0; lstm.params().len()];
        let dxs = lstm.backward(&cache, &cs, &mut g);
        let eps = 1e-5;
        for k in 0..g.len() {
            let mut p = lstm.clone();
            p.params_mut()[k] += eps;
            let mut m = lstm.clone();
            m.params_mut()[k] -= eps;
            let fd = (loss(&p, &xs) - loss(&m, &xs)) / (2.0 * eps);
            assert!(rel_err(fd, g[k]) < 1e-4 || (fd - g[k]).abs() < 1e-9, "param {k}: {fd} vs {}", g[k]);
        }
        for t in 0..xs.len() {
            for idx in 0..xs[t].len() {
                let mut xp = xs.clone();
                xp[t][idx] += eps;
                let mut xm = xs.clone();
                xm[t][idx] -= eps;
                let fd = (loss(&lstm, &xp) - loss(&lstm, &xm)) / (2.0 * eps);
                assert!(rel_err(fd, dxs[t][idx]) < 1e-4 || (fd - dxs[t][idx]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn recurrent_net_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut net = RecurrentNet::orthogonal(&[2, 5, 3], 4, 2, 1.0, &mut rng);
        let mut flat = net.params();
        random_params(&mut flat, 0.5, &mut rng);
        net.set_params(&flat);
        let xs: Vec<Mat> = (0..4).map(|_| random_mat(2, 3, &mut rng)).collect();
        let cs: Vec<Mat> = (0..4).map(|_| random_mat(2, 3, &mut rng)).collect();
        let init = LstmState::zeros(4, 3);
        let loss = |n: &RecurrentNet| {
            let (ys, _) = n.forward(&xs, &init).unwrap();
            ys.iter().zip(&cs).map(|(y, c)| y.component_mul(c).sum()).sum::<f64>()
        };
        let (_, cache) = net.forward(&xs, &init).unwrap();
        let mut g = vec![0.0; net.n_params()];
        net.backward(&cache, &cs, &mut g);
        let eps = 1e-5;
        for k in 0..g.len() {
            let mut p = flat.clone();
            p[k] += eps;
            let mut plus = net.clone();
            plus.set_params(&p);
            p[k] -= 2.0 * eps;
            let mut minus = net.clone();
            minus.set_params(&p);
            let fd = (loss(&plus) - loss(&minus)) / (2.0 * eps);
            assert!(rel_err(fd, g[k]) < 1e-4 || (fd - g[k]).abs() < 1e-9, "param {k}: {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn recurrent_step_matches_sequence_forward() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let net = RecurrentNet::orthogonal(&[1, 8, 4], 6, 2, 1.0, &mut rng);
        let xs: Vec<Mat> = (0..6).map(|_| random_mat(1, 1, &mut rng)).collect();
        let (ys, _) = net.forward(&xs, &LstmState::zeros(6, 1)).unwrap();
        let mut state = LstmState::zeros(6, 1);
        for (x, y) in xs.iter().zip(&ys) {
            let (out, next) = net.step(x, &state).unwrap();
            assert!((out - y).amax() < 1e-14);
            state = next;
        }
    }
}
