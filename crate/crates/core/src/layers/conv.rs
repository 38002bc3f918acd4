use super::relu;
use crate::error::{Error, Result};
use crate::tensor::{seeded_init, InitKind, Real, RngState, Tensor};

/// Valid, stride-1 2-D cross-correlation followed by ReLU.
///
/// Inputs are `h × w × c_in` (channels last), filters `f × f × c_in × n`,
/// outputs `(h − f + 1) × (w − f + 1) × n`.
#[derive(Clone, Debug, PartialEq)]
pub struct Conv2d<T: Real = f32> {
    pub filters: Tensor<T>,
    pub bias: Tensor<T>,
}

/// Forward input and rectified output of a convolution.
#[derive(Clone, Debug)]
pub struct ConvCache<T: Real = f32> {
    pub input: Tensor<T>,
    pub output: Tensor<T>,
}

impl<T: Real> Conv2d<T> {
    pub fn zeros(size: usize, in_channels: usize, filters: usize) -> Self {
        Conv2d {
            filters: Tensor::zeros(&[size, size, in_channels, filters]),
            bias: Tensor::zeros(&[filters]),
        }
    }

    pub fn init(rng: &mut RngState, size: usize, in_channels: usize, filters: usize) -> Result<Self> {
        let fan_in = size * size * in_channels;
        let fan_out = size * size * filters;
        Ok(Conv2d {
            filters: seeded_init(rng, InitKind::glorot(fan_in, fan_out), &[size, size, in_channels, filters])?,
            bias: Tensor::zeros(&[filters]),
        })
    }

    pub fn size(&self) -> usize {
        self.filters.shape()[0]
    }

    pub fn in_channels(&self) -> usize {
        self.filters.shape()[2]
    }

    pub fn out_channels(&self) -> usize {
        self.filters.shape()[3]
    }

    /// Output spatial dims for an `h × w` input.
    pub fn output_dims(&self, h: usize, w: usize) -> Result<(usize, usize)> {
        let f = self.size();
        if h < f || w < f {
            return Err(Error::shape(format!("{h} × {w} input is smaller than the {f} × {f} filter")));
        }
        Ok((h - f + 1, w - f + 1))
    }

    pub fn forward(&self, input: &Tensor<T>) -> Result<Tensor<T>> {
        let [h, w, c] = input.shape()[..] else {
            return Err(Error::shape(format!("conv expects h × w × c input, got {:?}", input.shape())));
        };
        if c != self.in_channels() {
            return Err(Error::shape(format!("conv expects {} channels, got {c}", self.in_channels())));
        }
        let (oh, ow) = self.output_dims(h, w)?;
        let (f, n) = (self.size(), self.out_channels());
        let x = input.data();
        let wt = self.filters.data();
        let mut out = Tensor::zeros(&[oh, ow, n]);
        let od = out.data_mut();
        for oy in 0..oh {
            for ox in 0..ow {
                let o = &mut od[(oy * ow + ox) * n..(oy * ow + ox + 1) * n];
                o.copy_from_slice(self.bias.data());
                for dy in 0..f {
                    for dx in 0..f {
                        for ci in 0..c {
                            let v = x[((oy + dy) * w + ox + dx) * c + ci];
                            let k = ((dy * f + dx) * c + ci) * n;
                            for (ov, &wv) in o.iter_mut().zip(&wt[k..k + n]) {
                                *ov = *ov + v * wv;
                            }
                        }
                    }
                }
                o.iter_mut().for_each(|v| *v = relu(*v));
            }
        }
        Ok(out)
    }

    /// Parameter and input gradients given the cached forward pass and the
    /// gradient of the rectified output.
    pub fn backward(&self, cache: &ConvCache<T>, d_out: &Tensor<T>) -> Result<(Self, Tensor<T>)> {
        cache.output.check_same_shape(d_out)?;
        let [h, w, c] = cache.input.shape()[..] else {
            return Err(Error::shape("conv cache input is not h × w × c"));
        };
        let [oh, ow, n] = cache.output.shape()[..] else {
            return Err(Error::shape("conv cache output is not h × w × n"));
        };
        let f = self.size();
        let x = cache.input.data();
        let wt = self.filters.data();
        let mut grads = Self::zeros(f, c, n);
        let mut d_in = Tensor::zeros(&[h, w, c]);
        let mut dz = vec![T::zero(); n];
        for oy in 0..oh {
            for ox in 0..ow {
                let base = (oy * ow + ox) * n;
                let mut any = false;
                for k in 0..n {
                    dz[k] = if cache.output.data()[base + k] > T::zero() { d_out.data()[base + k] } else { T::zero() };
                    any |= dz[k] != T::zero();
                }
                if !any {
                    continue;
                }
                for (b, &g) in grads.bias.data_mut().iter_mut().zip(&dz) {
                    *b = *b + g;
                }
                for dy in 0..f {
                    for dx in 0..f {
                        for ci in 0..c {
                            let xi = ((oy + dy) * w + ox + dx) * c + ci;
                            let k = ((dy * f + dx) * c + ci) * n;
                            let v = x[xi];
                            let gw = &mut grads.filters.data_mut()[k..k + n];
                            let mut acc = T::zero();
                            for ((g, &d), &wv) in gw.iter_mut().zip(&dz).zip(&wt[k..k + n]) {
                                *g = *g + v * d;
                                acc = acc + wv * d;
                            }
                            let di = &mut d_in.data_mut()[xi];
                            *di = *di + acc;
                        }
                    }
                }
            }
        }
        Ok((grads, d_in))
    }
}
