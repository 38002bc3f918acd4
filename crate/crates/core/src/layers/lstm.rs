use super::{add_into, mat_vec_acc, outer_acc, sigmoid, vec_mat_acc};
use crate::error::{Error, Result};
use crate::tensor::{seeded_init, InitKind, Real, RngState, Tensor};

/// Gate blocks inside the stacked LSTM weights, in storage order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gate {
    Input = 0,
    Forget = 1,
    Cell = 2,
    Output = 3,
}

/// LSTM cell with optional diagonal peephole connections.
///
/// Weights for the four gates are stored side by side: `w_x` is `b × 4u`,
/// `w_h` is `u × 4u`, `bias` has `4u` entries, each split into blocks in
/// [`Gate`] order. `peephole` holds the input, forget and output peephole
/// vectors (`3u` entries) and is `None` when peepholes are disabled, in which
/// case it contributes no trainable parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmCell<T: Real = f32> {
    pub w_x: Tensor<T>,
    pub w_h: Tensor<T>,
    pub bias: Tensor<T>,
    pub peephole: Option<Tensor<T>>,
}

/// Activations of one time step.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmStep<T: Real = f32> {
    pub input: Vec<T>,
    pub forget: Vec<T>,
    pub candidate: Vec<T>,
    pub output: Vec<T>,
    pub c: Vec<T>,
    pub tanh_c: Vec<T>,
    /// Short-term state; also the cell output `y`.
    pub h: Vec<T>,
}

/// Everything the backward pass needs from a sequence forward pass.
#[derive(Clone, Debug)]
pub struct LstmCache<T: Real = f32> {
    pub x: Tensor<T>,
    pub steps: Vec<LstmStep<T>>,
}

impl<T: Real> LstmCell<T> {
    pub fn zeros(bands: usize, units: usize, peepholes: bool) -> Self {
        LstmCell {
            w_x: Tensor::zeros(&[bands, 4 * units]),
            w_h: Tensor::zeros(&[units, 4 * units]),
            bias: Tensor::zeros(&[4 * units]),
            peephole: peepholes.then(|| Tensor::zeros(&[3 * units])),
        }
    }

    /// Glorot-uniform input weights, orthogonal recurrent blocks, zero biases
    /// except the forget gate (1.0), zero peepholes.
    pub fn init(rng: &mut RngState, bands: usize, units: usize, peepholes: bool) -> Result<Self> {
        let mut cell = Self::zeros(bands, units, peepholes);
        cell.w_x = seeded_init(rng, InitKind::glorot(bands, 4 * units), &[bands, 4 * units])?;
        for gate in 0..4 {
            let block: Tensor<T> = seeded_init(rng, InitKind::Orthogonal, &[units, units])?;
            for r in 0..units {
                cell.w_h.row_mut(r)[gate * units..(gate + 1) * units].copy_from_slice(block.row(r));
            }
        }
        cell.gate_bias_mut(Gate::Forget).fill(T::one());
        Ok(cell)
    }

    pub fn units(&self) -> usize {
        self.w_h.rows()
    }

    pub fn bands(&self) -> usize {
        self.w_x.rows()
    }

    pub fn gate_bias_mut(&mut self, gate: Gate) -> &mut [T] {
        let u = self.units();
        let g = gate as usize;
        &mut self.bias.data_mut()[g * u..(g + 1) * u]
    }

    pub fn tensors(&self) -> Vec<(&'static str, &Tensor<T>)> {
        let mut out = vec![("w_x", &self.w_x), ("w_h", &self.w_h), ("bias", &self.bias)];
        if let Some(p) = &self.peephole {
            out.push(("peephole", p));
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut out = vec![&mut self.w_x, &mut self.w_h, &mut self.bias];
        if let Some(p) = &mut self.peephole {
            out.push(p);
        }
        out
    }

    /// One time step.
    ///
    /// Gates are evaluated input, forget, candidate, then the new cell state,
    /// then the output gate, whose peephole reads the *new* cell state.
    pub fn step(&self, x: &[T], h_prev: &[T], c_prev: &[T]) -> Result<LstmStep<T>> {
        let u = self.units();
        if x.len() != self.bands() || h_prev.len() != u || c_prev.len() != u {
            return Err(Error::shape(format!(
                "lstm step expects x:{} h:{u} c:{u}, got x:{} h:{} c:{}",
                self.bands(),
                x.len(),
                h_prev.len(),
                c_prev.len()
            )));
        }
        let mut z = self.bias.data().to_vec();
        vec_mat_acc(x, &self.w_x, &mut z);
        vec_mat_acc(h_prev, &self.w_h, &mut z);

        let peep = self.peephole.as_ref().map(|p| p.data());
        let mut step = LstmStep {
            input: vec![T::zero(); u],
            forget: vec![T::zero(); u],
            candidate: vec![T::zero(); u],
            output: vec![T::zero(); u],
            c: vec![T::zero(); u],
            tanh_c: vec![T::zero(); u],
            h: vec![T::zero(); u],
        };
        for j in 0..u {
            let (mut zi, mut zf) = (z[j], z[u + j]);
            if let Some(p) = peep {
                zi = zi + p[j] * c_prev[j];
                zf = zf + p[u + j] * c_prev[j];
            }
            let i = sigmoid(zi);
            let f = sigmoid(zf);
            let g = z[2 * u + j].tanh();
            let c = f * c_prev[j] + i * g;
            let mut zo = z[3 * u + j];
            if let Some(p) = peep {
                zo = zo + p[2 * u + j] * c;
            }
            let o = sigmoid(zo);
            let tc = c.tanh();
            step.input[j] = i;
            step.forget[j] = f;
            step.candidate[j] = g;
            step.output[j] = o;
            step.c[j] = c;
            step.tanh_c[j] = tc;
            step.h[j] = o * tc;
        }
        Ok(step)
    }

    /// Runs the cell over a `t × b` sequence from zero state, returning the
    /// stacked outputs `t × u`.
    pub fn forward_sequence(&self, x: &Tensor<T>) -> Result<(Tensor<T>, LstmCache<T>)> {
        if x.rank() != 2 || x.cols() != self.bands() {
            return Err(Error::shape(format!(
                "lstm expects a t × {} sequence, got {:?}",
                self.bands(),
                x.shape()
            )));
        }
        let t = x.rows();
        if t == 0 {
            return Err(Error::EmptySequence);
        }
        let u = self.units();
        let mut steps: Vec<LstmStep<T>> = Vec::with_capacity(t);
        let zero = vec![T::zero(); u];
        for r in 0..t {
            let (h_prev, c_prev) = match steps.last() {
                Some(s) => (&s.h[..], &s.c[..]),
                None => (&zero[..], &zero[..]),
            };
            let s = self.step(x.row(r), h_prev, c_prev)?;
            steps.push(s);
        }
        let y = Tensor::from_fn(&[t, u], |k| steps[k / u].h[k % u]);
        Ok((y, LstmCache { x: x.clone(), steps }))
    }

    /// Backpropagation through time. `d_y` is the loss gradient with respect
    /// to every row of the sequence output. Returns parameter gradients and
    /// the gradient with respect to the input sequence.
    pub fn backward_sequence(&self, cache: &LstmCache<T>, d_y: &Tensor<T>) -> Result<(LstmCell<T>, Tensor<T>)> {
        let u = self.units();
        let t = cache.steps.len();
        if d_y.shape() != [t, u] {
            return Err(Error::shape(format!("lstm backward expects {t} × {u} gradient, got {:?}", d_y.shape())));
        }
        let mut grads = LstmCell::zeros(self.bands(), u, self.peephole.is_some());
        let mut d_x = Tensor::zeros(cache.x.shape());
        let peep = self.peephole.as_ref().map(|p| p.data());

        let zero = vec![T::zero(); u];
        let mut dh_next = vec![T::zero(); u];
        let mut dc_next = vec![T::zero(); u];
        let mut dz = vec![T::zero(); 4 * u];
        let one = T::one();

        for r in (0..t).rev() {
            let s = &cache.steps[r];
            let (h_prev, c_prev) = if r == 0 {
                (&zero[..], &zero[..])
            } else {
                (&cache.steps[r - 1].h[..], &cache.steps[r - 1].c[..])
            };
            let dy = d_y.row(r);
            for j in 0..u {
                let dh = dy[j] + dh_next[j];
                let (i, f, g, o, tc) = (s.input[j], s.forget[j], s.candidate[j], s.output[j], s.tanh_c[j]);
                let dzo = dh * tc * o * (one - o);
                let mut dc = dc_next[j] + dh * o * (one - tc * tc);
                if let Some(p) = peep {
                    dc = dc + dzo * p[2 * u + j];
                }
                let dzi = dc * g * i * (one - i);
                let dzf = dc * c_prev[j] * f * (one - f);
                let dzg = dc * i * (one - g * g);
                let mut dcp = dc * f;
                if let Some(p) = peep {
                    dcp = dcp + dzi * p[j] + dzf * p[u + j];
                    let gp = grads.peephole.as_mut().unwrap().data_mut();
                    gp[j] = gp[j] + dzi * c_prev[j];
                    gp[u + j] = gp[u + j] + dzf * c_prev[j];
                    gp[2 * u + j] = gp[2 * u + j] + dzo * s.c[j];
                }
                dz[j] = dzi;
                dz[u + j] = dzf;
                dz[2 * u + j] = dzg;
                dz[3 * u + j] = dzo;
                dc_next[j] = dcp;
            }
            outer_acc(&mut grads.w_x, cache.x.row(r), &dz);
            outer_acc(&mut grads.w_h, h_prev, &dz);
            add_into(grads.bias.data_mut(), &dz);
            dh_next.iter_mut().for_each(|v| *v = T::zero());
            mat_vec_acc(&self.w_h, &dz, &mut dh_next);
            mat_vec_acc(&self.w_x, &dz, d_x.row_mut(r));
        }
        Ok((grads, d_x))
    }
}
