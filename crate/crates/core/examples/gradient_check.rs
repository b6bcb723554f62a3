//! The autodiff tape on a small GCN + GRU model: forward, backward and a
//! finite-difference check of every parameter.

use std::sync::Arc;

use guard_can::nn::{GcnConv, GruCell, Linear, ParamSet, SparseMatrix, Tape, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Model {
    gcn: GcnConv,
    gru: GruCell,
    head: Linear,
}

impl Model {
    fn loss(&self, t: &mut Tape, x: &Tensor, adj: &Arc<SparseMatrix>) -> guard_can::Result<Var> {
        let x = t.input(x.clone());
        let h = self.gcn.forward(t, x, adj)?;
        let h = t.relu(h);
        let pooled = t.mean_rows(h);
        let mut state = t.input(Tensor::zeros(&[1, 6]));
        for _ in 0..3 {
            state = self.gru.step(t, pooled, state)?;
        }
        let logit = self.head.forward(t, state)?;
        let p = t.sigmoid(logit);
        t.bce(p, &[1.0])
    }
}

fn main() -> guard_can::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut params = ParamSet::new();
    let model = Model {
        gcn: GcnConv::new(&mut params, "gcn", 3, 4, &mut rng),
        gru: GruCell::new(&mut params, "gru", 4, 6, &mut rng),
        head: Linear::new(&mut params, "head", 6, 1, &mut rng),
    };
    // path graph on 4 nodes with self-loops, symmetric normalization
    let deg = [2.0, 3.0, 3.0, 2.0];
    let mut entries = Vec::new();
    for i in 0..4usize {
        for j in i.saturating_sub(1)..(i + 2).min(4) {
            entries.push((i, j, 1.0 / f64::sqrt(deg[i] * deg[j])));
        }
    }
    let adj = Arc::new(SparseMatrix::from_triplets(4, entries)?);
    let x = Tensor::matrix(4, 3, (0..12).map(|_| rng.random_range(-1.0..1.0)).collect())?;

    let (loss, grads) = {
        let mut tape = Tape::new(&params);
        let l = model.loss(&mut tape, &x, &adj)?;
        (tape.value(l).data()[0], tape.backward(l)?)
    };
    println!("loss {loss:.6}, {} parameters in {} tensors", params.num_scalars(), params.len());

    let h = 1e-5;
    let ids: Vec<_> = params.ids().collect();
    for id in ids {
        let analytic = grads.param(id).expect("every parameter is used").to_vec();
        let mut worst = 0.0f64;
        for (i, &a) in analytic.iter().enumerate() {
            let orig = params.get(id).value.data()[i];
            let mut eval = |v: f64| {
                params.get_mut(id).value.data_mut()[i] = v;
                let mut tape = Tape::new(&params);
                let l = model.loss(&mut tape, &x, &adj).unwrap();
                tape.value(l).data()[0]
            };
            let numeric = (eval(orig + h) - eval(orig - h)) / (2.0 * h);
            params.get_mut(id).value.data_mut()[i] = orig;
            worst = worst.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6));
        }
        println!("{:<14} {:>3} values  worst rel err {worst:.2e}", params.get(id).name, analytic.len());
    }
    Ok(())
}
