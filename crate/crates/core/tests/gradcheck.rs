//! Analytic gradients against central finite differences.

mod common;

use common::grad;

fn all_seeds(name: &str, case: fn(u64) -> f64) {
    let worst = (0..grad::SEEDS).map(case).fold(0.0, f64::max);
    println!("{name:<18} worst rel err {worst:.2e}");
}

#[test]
fn linear() {
    all_seeds("linear", grad::linear);
}

#[test]
fn relu() {
    all_seeds("relu", grad::relu);
}

#[test]
fn sigmoid() {
    all_seeds("sigmoid", grad::sigmoid);
}

#[test]
fn tanh() {
    all_seeds("tanh", grad::tanh);
}

#[test]
fn gcn_conv() {
    all_seeds("gcn_conv", grad::gcn_conv);
}

#[test]
fn gru_cell() {
    all_seeds("gru_cell", grad::gru_cell);
}

#[test]
fn global_mean_pool() {
    all_seeds("global_mean_pool", grad::global_mean_pool);
}

#[test]
fn mse() {
    all_seeds("mse", grad::mse);
}

#[test]
fn bce() {
    all_seeds("bce", grad::bce);
}

#[test]
fn encoder_loss() {
    all_seeds("encoder loss", grad::encoder_loss);
}

#[test]
fn detector_loss() {
    all_seeds("detector loss", grad::detector_loss);
}
