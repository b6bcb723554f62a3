//! Finite-difference gradient checks; each case returns the worst relative
//! error for one seed and panics past the tolerance.

use std::sync::Arc;

use guard_can::detector::{DetectorModel, Heads};
use guard_can::encoder::EncoderModel;
use guard_can::graph::NODE_FEATURES;
use guard_can::nn::{GcnConv, GruCell, Linear, ParamId, ParamSet, SparseMatrix, Tape, Tensor, Var};
use guard_can::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const H: f64 = 1e-5;
pub const TOL: f64 = 1e-4;
pub const SEEDS: u64 = 10;

fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-6)
}

fn rand_tensor(rng: &mut ChaCha8Rng, shape: &[usize], lo: f64, hi: f64) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.random_range(lo..hi)).collect()).unwrap()
}

/// Worst relative error over the checked coordinates. `sample` caps the
/// number of coordinates per tensor; `None` checks all of them.
fn check<F>(params: &mut ParamSet, loss: F, sample: Option<(usize, u64)>) -> f64
where
    F: Fn(&mut Tape) -> Result<Var>,
{
    let analytic: Vec<(ParamId, Vec<f64>)> = {
        let mut tape = Tape::new(params);
        let l = loss(&mut tape).unwrap();
        let g = tape.backward(l).unwrap();
        params.ids().map(|id| (id, g.param(id).expect("gradient for every parameter").to_vec())).collect()
    };
    let eval = |p: &ParamSet| {
        let mut tape = Tape::new(p);
        let l = loss(&mut tape).unwrap();
        tape.value(l).data()[0]
    };
    let mut worst = 0.0f64;
    for (id, grad) in analytic {
        let coords: Vec<usize> = match sample {
            Some((k, seed)) if grad.len() > k => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ id.index() as u64);
                rand::seq::index::sample(&mut rng, grad.len(), k).into_vec()
            }
            _ => (0..grad.len()).collect(),
        };
        for i in coords {
            let orig = params.get(id).value.data()[i];
            params.get_mut(id).value.data_mut()[i] = orig + H;
            let up = eval(params);
            params.get_mut(id).value.data_mut()[i] = orig - H;
            let down = eval(params);
            params.get_mut(id).value.data_mut()[i] = orig;
            let numeric = (up - down) / (2.0 * H);
            let e = rel_err(grad[i], numeric);
            assert!(
                e <= TOL,
                "{}[{i}]: analytic {} numeric {numeric} rel err {e:e}",
                params.get(id).name,
                grad[i]
            );
            worst = worst.max(e);
        }
    }
    worst
}

/// Scalar reduction `Σ y ⊙ r` with a fixed random `r`, so every output
/// element gets a distinct upstream gradient.
fn project(tape: &mut Tape, y: Var, r: &Tensor) -> Result<Var> {
    let r = tape.input(r.clone());
    let p = tape.mul(y, r)?;
    Ok(tape.sum(p))
}

fn path_adjacency(n: usize) -> Arc<SparseMatrix> {
    let deg = |i: usize| if i == 0 || i == n - 1 { 2.0 } else { 3.0 };
    let mut entries = Vec::new();
    for i in 0..n {
        for j in i.saturating_sub(1)..(i + 2).min(n) {
            entries.push((i, j, 1.0 / (deg(i) * deg(j) as f64).sqrt()));
        }
    }
    Arc::new(SparseMatrix::from_triplets(n, entries).unwrap())
}

pub fn linear(s: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(s);
    let mut p = ParamSet::new();
    let x = p.add("x", rand_tensor(&mut rng, &[4, 5], -1.0, 1.0));
    let layer = Linear::new(&mut p, "fc", 5, 3, &mut rng);
    let r = rand_tensor(&mut rng, &[4, 3], -1.0, 1.0);
    check(
        &mut p,
        |t| {
            let xv = t.param(x);
            let y = layer.forward(t, xv)?;
            project(t, y, &r)
        },
        None,
    )
}

fn unary(s: u64, op: impl Fn(&mut Tape, Var) -> Var, lo: f64, hi: f64, out_rows: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(s);
    let mut p = ParamSet::new();
    let mut xt = rand_tensor(&mut rng, &[6, 4], lo, hi);
    // keep relu inputs away from the kink
    for v in xt.data_mut() {
        if v.abs() < 1e-2 {
            *v += 0.05;
        }
    }
    let x = p.add("x", xt);
    let r = rand_tensor(&mut rng, &[out_rows, 4], -1.0, 1.0);
    check(
        &mut p,
        |t| {
            let xv = t.param(x);
            let y = op(t, xv);
            project(t, y, &r)
        },
        None,
    )
}

pub fn relu(s: u64) -> f64 {
    unary(s, |t, x| t.relu(x), -2.0, 2.0, 6)
}

pub fn sigmoid(s: u64) -> f64 {
    unary(s, |t, x| t.sigmoid(x), -4.0, 4.0, 6)
}

pub fn tanh(s: u64) -> f64 {
    unary(s, |t, x| t.tanh(x), -3.0, 3.0, 6)
}

pub fn global_mean_pool(s: u64) -> f64 {
    unary(s, |t, x| t.mean_rows(x), -2.0, 2.0, 1)
}

pub fn gcn_conv(s: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(s);
    let n = 3 + (s as usize % 5);
    let adj = path_adjacency(n);
    let mut p = ParamSet::new();
    let x = p.add("x", rand_tensor(&mut rng, &[n, 4], -1.0, 1.0));
    let conv = GcnConv::new(&mut p, "gcn", 4, 6, &mut rng);
    let r = rand_tensor(&mut rng, &[n, 6], -1.0, 1.0);
    check(
        &mut p,
        |t| {
            let xv = t.param(x);
            let y = conv.forward(t, xv, &adj)?;
            project(t, y, &r)
        },
        None,
    )
}

pub fn gru_cell(s: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(s);
    let mut p = ParamSet::new();
    let x = p.add("x", rand_tensor(&mut rng, &[3, 4], -1.0, 1.0));
    let h = p.add("h", rand_tensor(&mut rng, &[3, 5], -1.0, 1.0));
    let cell = GruCell::new(&mut p, "gru", 4, 5, &mut rng);
    let r = rand_tensor(&mut rng, &[3, 5], -1.0, 1.0);
    check(
        &mut p,
        |t| {
            let (xv, hv) = (t.param(x), t.param(h));
            // two steps so the hidden-state path is exercised too
            let h1 = cell.step(t, xv, hv)?;
            let h2 = cell.step(t, xv, h1)?;
            project(t, h2, &r)
        },
        None,
    )
}

pub fn mse(s: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(s);
    let mut p = ParamSet::new();
    let a = p.add("pred", rand_tensor(&mut rng, &[5, 3], -2.0, 2.0));
    let b = p.add("target", rand_tensor(&mut rng, &[5, 3], -2.0, 2.0));
    check(
        &mut p,
        |t| {
            let (av, bv) = (t.param(a), t.param(b));
            t.mse(av, bv)
        },
        None,
    )
}

pub fn bce(s: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(s);
    let mut p = ParamSet::new();
    let q = p.add("prob", rand_tensor(&mut rng, &[8, 1], 0.05, 0.95));
    let labels: Vec<f64> = (0..8).map(|_| f64::from(rng.random_range(0..2u8))).collect();
    check(
        &mut p,
        |t| {
            let qv = t.param(q);
            t.bce(qv, &labels)
        },
        None,
    )
}

pub fn encoder_loss(s: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(s);
    let mut model = EncoderModel::new(s);
    let n = 6 + (s as usize % 4);
    let adj = path_adjacency(n);
    let x = rand_tensor(&mut rng, &[n, NODE_FEATURES], 0.0, 1.0);
    let enc = model.clone();
    check(
        &mut model.params,
        |t| {
            let xv = t.input(x.clone());
            let z = enc.encode(t, xv, &adj)?;
            let r = enc.decode(t, z)?;
            t.mse(r, xv)
        },
        Some((48, s)),
    )
}

pub fn detector_loss(s: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(s);
    let mut model = DetectorModel::new(s);
    let steps: Vec<Tensor> = (0..4).map(|_| rand_tensor(&mut rng, &[3, 32], -1.0, 1.0)).collect();
    let labels = [0.0, 1.0, f64::from(s as u8 % 2)];
    let det = model.clone();
    check(
        &mut model.params,
        |t| {
            let xs: Vec<Var> = steps.iter().map(|x| t.input(x.clone())).collect();
            // dropout active, same mask on every evaluation
            let mut drop_rng = ChaCha8Rng::seed_from_u64(s ^ 0xD0);
            let out = det.forward(t, &xs, Heads::Last, true, &mut drop_rng)?;
            t.bce(out[0], &labels)
        },
        Some((48, s)),
    )
}

pub const CASES: &[(&str, fn(u64) -> f64)] = &[
    ("linear", linear),
    ("relu", relu),
    ("sigmoid", sigmoid),
    ("tanh", tanh),
    ("gcn_conv", gcn_conv),
    ("gru_cell", gru_cell),
    ("global_mean_pool", global_mean_pool),
    ("mse", mse),
    ("bce", bce),
    ("encoder loss", encoder_loss),
    ("detector loss", detector_loss),
];
