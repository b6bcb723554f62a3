use rand::Rng;

use super::tensor::Tensor;

/// Uniform fan-in initialization on `[-1/√fan_in, 1/√fan_in]`.
pub fn seeded_init<R: Rng + ?Sized>(shape: &[usize], fan_in: usize, rng: &mut R) -> Tensor {
    assert!(fan_in >= 1, "fan_in must be at least 1");
    let bound = 1.0 / (fan_in as f64).sqrt();
    let mut t = Tensor::zeros(shape);
    for v in t.data_mut() {
        *v = rng.random_range(-bound..=bound);
    }
    t
}
