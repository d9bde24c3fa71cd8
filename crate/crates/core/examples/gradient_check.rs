//! Backpropagation against central finite differences for the network
//! blocks used by the agents.
//!
//! cargo run --example gradient_check

#![allow(clippy::needless_range_loop)]

use optomech::agents::nn::{Activation, Lstm, LstmState, Mat, Mlp, RecurrentNet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EPS: f64 = 1e-5;

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / (a.abs() + b.abs()).max(1e-8)
}

/// Loss `sum(w .* y)` for a fixed random weighting `w`.
fn dot(y: &Mat, w: &Mat) -> f64 {
    y.component_mul(w).sum()
}

fn main() -> optomech::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let rand_mat = |r: usize, c: usize, rng: &mut ChaCha8Rng| Mat::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0));

    let mut mlp = Mlp::orthogonal(&[3, 5, 4, 2], Activation::Identity, 1.0, &mut rng);
    let x = rand_mat(3, 4, &mut rng);
    let w = rand_mat(2, 4, &mut rng);
    let (y, cache) = mlp.forward(&x)?;
    let mut grads = vec![0.0; mlp.n_params()];
    mlp.backward(&cache, &w, &mut grads);
    let _ = y;
    let mut worst: f64 = 0.0;
    for i in 0..mlp.n_params() {
        let orig = mlp.params()[i];
        mlp.params_mut()[i] = orig + EPS;
        let up = dot(&mlp.predict(&x)?, &w);
        mlp.params_mut()[i] = orig - EPS;
        let down = dot(&mlp.predict(&x)?, &w);
        mlp.params_mut()[i] = orig;
        worst = worst.max(rel_err(grads[i], (up - down) / (2.0 * EPS)));
    }
    println!("MLP 3-5-4-2, {} parameters: max relative error {worst:.2e}", mlp.n_params());

    let mut lstm = Lstm::orthogonal(2, 3, &mut rng);
    let xs: Vec<Mat> = (0..5).map(|_| rand_mat(2, 2, &mut rng)).collect();
    let ws: Vec<Mat> = (0..5).map(|_| rand_mat(3, 2, &mut rng)).collect();
    let init = LstmState::zeros(3, 2);
    let loss = |l: &Lstm| -> optomech::Result<f64> {
        let (hs, _, _) = l.forward(&xs, &init)?;
        Ok(hs.iter().zip(&ws).map(|(h, w)| dot(h, w)).sum())
    };
    let (_, _, cache) = lstm.forward(&xs, &init)?;
    let mut grads = vec![0.0; lstm.params().len()];
    lstm.backward(&cache, &ws, &mut grads);
    let mut worst: f64 = 0.0;
    for i in 0..grads.len() {
        let orig = lstm.params()[i];
        lstm.params_mut()[i] = orig + EPS;
        let up = loss(&lstm)?;
        lstm.params_mut()[i] = orig - EPS;
        let down = loss(&lstm)?;
        lstm.params_mut()[i] = orig;
        worst = worst.max(rel_err(grads[i], (up - down) / (2.0 * EPS)));
    }
    println!("LSTM 2->3 over 5 steps, {} parameters: max relative error {worst:.2e}", grads.len());

    let mut net = RecurrentNet::orthogonal(&[1, 4], 3, 2, 1.0, &mut rng);
    let xs: Vec<Mat> = (0..4).map(|_| rand_mat(1, 1, &mut rng)).collect();
    let ws: Vec<Mat> = (0..4).map(|_| rand_mat(2, 1, &mut rng)).collect();
    let init = LstmState::zeros(3, 1);
    let (_, cache) = net.forward(&xs, &init)?;
    let mut grads = vec![0.0; net.n_params()];
    net.backward(&cache, &ws, &mut grads);
    let mut params = net.params();
    let mut worst: f64 = 0.0;
    for i in 0..params.len() {
        let orig = params[i];
        let mut eval = |v: f64, params: &mut Vec<f64>| -> optomech::Result<f64> {
            params[i] = v;
            net.set_params(params);
            let (ys, _) = net.forward(&xs, &init)?;
            Ok(ys.iter().zip(&ws).map(|(y, w)| dot(y, w)).sum())
        };
        let up = eval(orig + EPS, &mut params)?;
        let down = eval(orig - EPS, &mut params)?;
        params[i] = orig;
        worst = worst.max(rel_err(grads[i], (up - down) / (2.0 * EPS)));
    }
    net.set_params(&params);
    println!("MLP trunk + LSTM + head, {} parameters: max relative error {worst:.2e}", grads.len());
    Ok(())
}
