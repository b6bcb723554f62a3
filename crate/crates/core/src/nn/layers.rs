//! Parameterized layers built on the tape: dense, graph convolution and GRU.

use std::sync::Arc;

use rand::Rng;

use super::init::seeded_init;
use super::param::{ParamId, ParamSet};
use super::sparse::SparseMatrix;
use super::tape::{Tape, Var};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: ParamId,
    pub d_in: usize,
    pub d_out: usize,
}

impl Linear {
    pub fn new<R: Rng + ?Sized>(
        params: &mut ParamSet,
        name: &str,
        d_in: usize,
        d_out: usize,
        rng: &mut R,
    ) -> Self {
        let weight = params.add(format!("{name}.weight"), seeded_init(&[d_in, d_out], d_in, rng));
        let bias = params.add(format!("{name}.bias"), seeded_init(&[d_out], d_in, rng));
        Self {
            weight,
            bias,
            d_in,
            d_out,
        }
    }

    pub fn forward(&self, tape: &mut Tape, x: Var) -> Result<Var> {
        let (w, b) = (tape.param(self.weight), tape.param(self.bias));
        tape.linear(x, w, b)
    }
}

/// `adj · x · W + b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GcnConv {
    pub weight: ParamId,
    pub bias: ParamId,
    pub d_in: usize,
    pub d_out: usize,
}

impl GcnConv {
    pub fn new<R: Rng + ?Sized>(
        params: &mut ParamSet,
        name: &str,
        d_in: usize,
        d_out: usize,
        rng: &mut R,
    ) -> Self {
        let weight = params.add(format!("{name}.weight"), seeded_init(&[d_in, d_out], d_in, rng));
        let bias = params.add(format!("{name}.bias"), seeded_init(&[d_out], d_in, rng));
        Self {
            weight,
            bias,
            d_in,
            d_out,
        }
    }

    pub fn forward(&self, tape: &mut Tape, x: Var, adj: &Arc<SparseMatrix>) -> Result<Var> {
        let (w, b) = (tape.param(self.weight), tape.param(self.bias));
        tape.gcn_conv(x, adj, w, b)
    }
}

/// GRU weight set. Gate blocks are laid out `[z | r | n]` along the column axis:
///
/// ```text
/// z  = σ(x·W_z + h·U_z + b_z)
/// r  = σ(x·W_r + h·U_r + b_r)
/// n  = tanh(x·W_n + b_in + r ⊙ (h·U_n + b_hn))
/// h' = (1 − z) ⊙ n + z ⊙ h
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GruCell {
    /// `d_in × 3h`
    pub w_input: ParamId,
    /// `h × 3h`
    pub w_hidden: ParamId,
    /// `3h`: `[b_z | b_r | b_in]`
    pub bias: ParamId,
    /// `h`
    pub bias_hn: ParamId,
    pub d_in: usize,
    pub d_hidden: usize,
}

impl GruCell {
    pub fn new<R: Rng + ?Sized>(
        params: &mut ParamSet,
        name: &str,
        d_in: usize,
        d_hidden: usize,
        rng: &mut R,
    ) -> Self {
        let h3 = 3 * d_hidden;
        let w_input = params.add(format!("{name}.w_input"), seeded_init(&[d_in, h3], d_hidden, rng));
        let w_hidden = params.add(
            format!("{name}.w_hidden"),
            seeded_init(&[d_hidden, h3], d_hidden, rng),
        );
        let bias = params.add(format!("{name}.bias"), seeded_init(&[h3], d_hidden, rng));
        let bias_hn = params.add(format!("{name}.bias_hn"), seeded_init(&[d_hidden], d_hidden, rng));
        Self {
            w_input,
            w_hidden,
            bias,
            bias_hn,
            d_in,
            d_hidden,
        }
    }

    /// One step: `x: n×d_in`, `h: n×d_hidden` → `n×d_hidden`.
    pub fn step(&self, tape: &mut Tape, x: Var, h: Var) -> Result<Var> {
        let hd = self.d_hidden;
        let (wi, wh) = (tape.param(self.w_input), tape.param(self.w_hidden));
        let (b, bhn) = (tape.param(self.bias), tape.param(self.bias_hn));

        let gx = tape.linear(x, wi, b)?;
        let gh = tape.matmul(h, wh)?;

        let xz = tape.slice_cols(gx, 0, hd)?;
        let hz = tape.slice_cols(gh, 0, hd)?;
        let z = tape.add(xz, hz)?;
        let z = tape.sigmoid(z);

        let xr = tape.slice_cols(gx, hd, hd)?;
        let hr = tape.slice_cols(gh, hd, hd)?;
        let r = tape.add(xr, hr)?;
        let r = tape.sigmoid(r);

        let xn = tape.slice_cols(gx, 2 * hd, hd)?;
        let hn = tape.slice_cols(gh, 2 * hd, hd)?;
        let hn = tape.add_bias(hn, bhn)?;
        let rhn = tape.mul(r, hn)?;
        let n = tape.add(xn, rhn)?;
        let n = tape.tanh(n);

        // (1 − z)·n + z·h  ==  n + z·(h − n)
        let diff = tape.sub(h, n)?;
        let zd = tape.mul(z, diff)?;
        tape.add(n, zd)
    }
}
