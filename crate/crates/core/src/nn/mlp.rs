use rand::Rng;
use rand_distr::{Distribution, Uniform};

use super::matrix::{matmul_a_b, matmul_a_bt, matmul_at_b, Matrix};
use crate::error::{ensure, Error, Result};

/// Fully connected network with `tanh` hidden layers and a linear output.
///
/// All weights and biases live in one flat vector. Layer `l` stores its
/// `h_{l+1} × h_l` weight matrix row-major, followed by its `h_{l+1}` biases.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    dims: Vec<usize>,
    params: Vec<f64>,
}

/// Number of weights and biases for a layer-width list:
/// `Σ_l (h_l h_{l+1} + h_{l+1})`.
pub fn param_count(dims: &[usize]) -> usize {
    dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

/// The multiply count `Σ_l h_l h_{l+1}` of one forward pass.
pub fn weight_count(dims: &[usize]) -> usize {
    dims.windows(2).map(|w| w[0] * w[1]).sum()
}

/// Activations recorded during a forward pass and consumed by
/// [`Mlp::backward`].
#[derive(Debug, Clone)]
pub struct Tape {
    dims: Vec<usize>,
    batch: usize,
    /// Input to each layer; `activations[0]` is the network input.
    activations: Vec<Vec<f64>>,
}

impl Tape {
    pub fn batch(&self) -> usize {
        self.batch
    }
}

impl Mlp {
    /// Fan-in uniform initialisation `U(-1/√h_l, 1/√h_l)`.
    pub fn new<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(dims)?;
        let mut offset = 0;
        for w in dims.windows(2) {
            let bound = 1.0 / (w[0] as f64).sqrt();
            let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
            let n = w[0] * w[1] + w[1];
            for p in &mut net.params[offset..offset + n] {
                *p = dist.sample(rng);
            }
            offset += n;
        }
        Ok(net)
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        ensure!(dims.len() >= 2, InvalidArgument, "need input and output widths, got {dims:?}");
        ensure!(dims.iter().all(|&d| d > 0), InvalidArgument, "layer widths must be positive: {dims:?}");
        Ok(Self { dims: dims.to_vec(), params: vec![0.0; param_count(dims)] })
    }

    pub fn from_params(dims: &[usize], params: Vec<f64>) -> Result<Self> {
        let mut net = Self::zeros(dims)?;
        ensure!(
            params.len() == net.params.len(),
            DimensionMismatch,
            "{} parameters for layout {dims:?} which needs {}",
            params.len(),
            net.params.len()
        );
        net.params = params;
        Ok(net)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().expect("at least two layers")
    }

    pub fn num_layers(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    /// Offset of layer `l`'s weights, and of its biases.
    fn layer_offsets(&self, l: usize) -> (usize, usize) {
        let w_off: usize = self.dims[..=l].windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        (w_off, w_off + self.dims[l] * self.dims[l + 1])
    }

    /// Weights of layer `l` as a row-major `h_{l+1} × h_l` slice.
    pub fn weights(&self, l: usize) -> &[f64] {
        let (w, b) = self.layer_offsets(l);
        &self.params[w..b]
    }

    pub fn weights_mut(&mut self, l: usize) -> &mut [f64] {
        let (w, b) = self.layer_offsets(l);
        &mut self.params[w..b]
    }

    pub fn biases(&self, l: usize) -> &[f64] {
        let (_, b) = self.layer_offsets(l);
        &self.params[b..b + self.dims[l + 1]]
    }

    pub fn biases_mut(&mut self, l: usize) -> &mut [f64] {
        let (_, b) = self.layer_offsets(l);
        let n = self.dims[l + 1];
        &mut self.params[b..b + n]
    }

    fn check_input(&self, x: &Matrix) -> Result<()> {
        ensure!(
            x.cols() == self.input_dim(),
            DimensionMismatch,
            "network expects {} inputs, got {}",
            self.input_dim(),
            x.cols()
        );
        Ok(())
    }

    fn affine(&self, l: usize, input: &[f64], batch: usize) -> Vec<f64> {
        let (n_in, n_out) = (self.dims[l], self.dims[l + 1]);
        let mut z = vec![0.0; batch * n_out];
        matmul_a_bt(input, self.weights(l), batch, n_in, n_out, &mut z);
        let b = self.biases(l);
        for row in z.chunks_exact_mut(n_out) {
            row.iter_mut().zip(b).for_each(|(v, bi)| *v += bi);
        }
        z
    }

    /// Batched forward pass, one sample per row.
    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        self.check_input(x)?;
        let batch = x.rows();
        let mut h = x.as_slice().to_vec();
        for l in 0..self.num_layers() {
            h = self.affine(l, &h, batch);
            if l + 1 < self.num_layers() {
                h.iter_mut().for_each(|v| *v = v.tanh());
            }
        }
        Matrix::from_vec(batch, self.output_dim(), h)
    }

    pub fn forward_one(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(&Matrix::row_vector(x))?.into_vec())
    }

    /// Forward pass that also records what [`Mlp::backward`] needs.
    pub fn forward_tape(&self, x: &Matrix) -> Result<(Matrix, Tape)> {
        self.check_input(x)?;
        let batch = x.rows();
        let mut activations = Vec::with_capacity(self.num_layers());
        let mut h = x.as_slice().to_vec();
        for l in 0..self.num_layers() {
            let mut z = self.affine(l, &h, batch);
            if l + 1 < self.num_layers() {
                z.iter_mut().for_each(|v| *v = v.tanh());
            }
            activations.push(std::mem::replace(&mut h, z));
        }
        let out = Matrix::from_vec(batch, self.output_dim(), h)?;
        Ok((out, Tape { dims: self.dims.clone(), batch, activations }))
    }

    /// Reverse-mode pass. Returns the gradient of the loss with respect to
    /// every parameter (same layout as [`Mlp::params`]) and with respect to
    /// the network input.
    pub fn backward(&self, tape: &Tape, grad_out: &Matrix) -> Result<(Vec<f64>, Matrix)> {
        if tape.dims != self.dims || tape.activations.len() != self.num_layers() {
            return Err(Error::InvalidState("tape was not recorded by a forward pass of this network".into()));
        }
        ensure!(
            grad_out.shape() == (tape.batch, self.output_dim()),
            DimensionMismatch,
            "output gradient is {:?}, expected ({}, {})",
            grad_out.shape(),
            tape.batch,
            self.output_dim()
        );
        let batch = tape.batch;
        let mut grads = vec![0.0; self.params.len()];
        let mut delta = grad_out.as_slice().to_vec();
        for l in (0..self.num_layers()).rev() {
            let (n_in, n_out) = (self.dims[l], self.dims[l + 1]);
            let input = &tape.activations[l];
            let (w_off, b_off) = self.layer_offsets(l);
            matmul_at_b(&delta, input, batch, n_out, n_in, &mut grads[w_off..b_off]);
            let gb = &mut grads[b_off..b_off + n_out];
            for row in delta.chunks_exact(n_out) {
                gb.iter_mut().zip(row).for_each(|(g, d)| *g += d);
            }
            let mut upstream = vec![0.0; batch * n_in];
            matmul_a_b(&delta, self.weights(l), batch, n_out, n_in, &mut upstream);
            if l > 0 {
                // input to layer l is tanh of the previous pre-activation
                upstream.iter_mut().zip(input).for_each(|(u, a)| *u *= 1.0 - a * a);
            }
            delta = upstream;
        }
        Ok((grads, Matrix::from_vec(batch, self.input_dim(), delta)?))
    }

    /// Copies parameters from a structurally identical network.
    pub fn copy_from(&mut self, other: &Mlp) -> Result<()> {
        ensure!(self.dims == other.dims, DimensionMismatch, "layouts {:?} and {:?} differ", self.dims, other.dims);
        self.params.copy_from_slice(&other.params);
        Ok(())
    }
}
