use super::tape::Gradients;
use super::tensor::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

/// A named trainable tensor with its gradient buffer and optimizer moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameter {
    pub name: String,
    pub value: Tensor,
    pub grad: Option<Tensor>,
    pub adam: AdamState,
}

impl Parameter {
    pub fn new(name: impl Into<String>, value: Tensor) -> Self {
        let n = value.len();
        Self {
            name: name.into(),
            value,
            grad: None,
            adam: AdamState {
                m: vec![0.0; n],
                v: vec![0.0; n],
                step: 0,
            },
        }
    }
}

/// Ordered parameter collection owned by a model.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamSet {
    params: Vec<Parameter>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor) -> ParamId {
        self.params.push(Parameter::new(name, value));
        ParamId(self.params.len() - 1)
    }

    pub fn get(&self, id: ParamId) -> &Parameter {
        &self.params[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Parameter {
        &mut self.params[id.0]
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Parameter> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Parameter> {
        self.params.iter_mut()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.params.len()).map(ParamId)
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name).map(ParamId)
    }

    pub fn num_scalars(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    /// Adds the parameter gradients recorded by a backward pass.
    pub fn accumulate(&mut self, grads: &Gradients) {
        for (id, g) in grads.param_grads() {
            let p = &mut self.params[id.0];
            match &mut p.grad {
                Some(existing) => {
                    for (e, v) in existing.data_mut().iter_mut().zip(g) {
                        *e += v;
                    }
                }
                None => {
                    let t = Tensor::new(p.value.shape().to_vec(), g.to_vec())
                        .expect("gradient matches parameter shape");
                    p.grad = Some(t);
                }
            }
        }
    }

    pub fn zero_grads(&mut self) {
        for p in &mut self.params {
            p.grad = None;
        }
    }

    pub fn grad_norm(&self) -> f64 {
        self.params
            .iter()
            .filter_map(|p| p.grad.as_ref())
            .flat_map(|g| g.data().iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// Rescales all gradients so their global L2 norm is at most `max_norm`.
    /// Returns the norm before clipping.
    pub fn clip_grad_norm(&mut self, max_norm: f64) -> f64 {
        let norm = self.grad_norm();
        if max_norm > 0.0 && norm > max_norm {
            let scale = max_norm / norm;
            for g in self.params.iter_mut().filter_map(|p| p.grad.as_mut()) {
                g.data_mut().iter_mut().for_each(|v| *v *= scale);
            }
        }
        norm
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            ..Self::default()
        }
    }
}

/// One bias-corrected Adam update over every parameter, then clears gradients.
pub fn adam_step(params: &mut ParamSet, cfg: &AdamConfig) -> Result<()> {
    if let Some(p) = params.iter().find(|p| p.grad.is_none()) {
        return Err(Error::invalid(format!(
            "parameter `{}` has no gradient; run backward first",
            p.name
        )));
    }
    for p in params.iter_mut() {
        let grad = p.grad.take().expect("checked above");
        let st = &mut p.adam;
        st.step += 1;
        let t = st.step as i32;
        let bc1 = 1.0 - cfg.beta1.powi(t);
        let bc2 = 1.0 - cfg.beta2.powi(t);
        for (((w, &g), m), v) in p
            .value
            .data_mut()
            .iter_mut()
            .zip(grad.data())
            .zip(st.m.iter_mut())
            .zip(st.v.iter_mut())
        {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *w -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_set(v: f64) -> (ParamSet, ParamId) {
        let mut ps = ParamSet::new();
        let id = ps.add("w", Tensor::scalar(v));
        (ps, id)
    }

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let (mut ps, id) = scalar_set(0.7);
        ps.get_mut(id).grad = Some(Tensor::scalar(0.0));
        adam_step(&mut ps, &AdamConfig::with_lr(0.1)).unwrap();
        assert_eq!(ps.get(id).value.data()[0], 0.7);
        assert_eq!(ps.get(id).adam.step, 1);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let (mut ps, id) = scalar_set(0.0);
        ps.get_mut(id).grad = Some(Tensor::scalar(1.0));
        adam_step(&mut ps, &AdamConfig::with_lr(0.1)).unwrap();
        let w = ps.get(id).value.data()[0];
        assert!((w + 0.1).abs() < 1e-7, "{w}");
        assert!(ps.get(id).grad.is_none());
    }

    #[test]
    fn missing_gradient_is_an_error() {
        let (mut ps, _) = scalar_set(1.0);
        assert!(adam_step(&mut ps, &AdamConfig::default()).is_err());
    }

    #[test]
    fn quadratic_bowl_converges() {
        let mut ps = ParamSet::new();
        let w0 = [0.6, -0.8];
        let id = ps.add("w", Tensor::vector(w0.to_vec()).unwrap());
        let cfg = AdamConfig::with_lr(0.05);
        for _ in 0..200 {
            let g: Vec<f64> = ps.get(id).value.data().iter().map(|w| 2.0 * w).collect();
            ps.get_mut(id).grad = Some(Tensor::vector(g).unwrap());
            adam_step(&mut ps, &cfg).unwrap();
        }
        let norm = ps.get(id).value.data().iter().map(|w| w * w).sum::<f64>().sqrt();
        assert!(norm < 1e-2, "‖w‖ = {norm}");
    }

    #[test]
    fn clipping_caps_global_norm() {
        let mut ps = ParamSet::new();
        let a = ps.add("a", Tensor::vector(vec![0.0, 0.0]).unwrap());
        ps.get_mut(a).grad = Some(Tensor::vector(vec![30.0, 40.0]).unwrap());
        let before = ps.clip_grad_norm(5.0);
        assert_eq!(before, 50.0);
        assert!((ps.grad_norm() - 5.0).abs() < 1e-12);
    }
}
