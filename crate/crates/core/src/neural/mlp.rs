use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use super::store::{Gradients, ParamId, ParamStore};
use crate::error::{Error, Result};

/// One tanh hidden layer followed by a linear output layer.
#[derive(Clone, Debug)]
pub struct Mlp {
    pub hidden_weight: ParamId,
    pub hidden_bias: ParamId,
    pub output_weight: ParamId,
    pub output_bias: ParamId,
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub output_dim: usize,
}

#[derive(Clone, Debug)]
pub struct MlpTrace {
    pub input: Array2<f64>,
    pub hidden: Array2<f64>,
    pub output: Array2<f64>,
}

impl Mlp {
    pub fn new(
        store: &mut ParamStore,
        prefix: &str,
        input_dim: usize,
        hidden_dim: usize,
        output_dim: usize,
    ) -> Self {
        Mlp {
            hidden_weight: store.add_xavier(format!("{prefix}/w_hidden"), hidden_dim, input_dim),
            hidden_bias: store.add_zeros(format!("{prefix}/b_hidden"), &[hidden_dim]),
            output_weight: store.add_xavier(format!("{prefix}/w_out"), output_dim, hidden_dim),
            output_bias: store.add_zeros(format!("{prefix}/b_out"), &[output_dim]),
            input_dim,
            hidden_dim,
            output_dim,
        }
    }

    /// Forward pass over a batch of row vectors.
    pub fn forward(&self, store: &ParamStore, input: ArrayView2<f64>) -> Result<MlpTrace> {
        if input.ncols() != self.input_dim {
            return Err(Error::Dimension {
                op: "mlp",
                expected: self.input_dim,
                found: input.ncols(),
            });
        }
        let hidden = (input.dot(&store.matrix(self.hidden_weight).t())
            + store.vector(self.hidden_bias))
            .mapv_into(f64::tanh);
        let output = hidden.dot(&store.matrix(self.output_weight).t()) + store.vector(self.output_bias);
        Ok(MlpTrace {
            input: input.to_owned(),
            hidden,
            output,
        })
    }

    pub fn forward_one(&self, store: &ParamStore, input: ArrayView1<f64>) -> Result<Array1<f64>> {
        if input.len() != self.input_dim {
            return Err(Error::Dimension {
                op: "mlp",
                expected: self.input_dim,
                found: input.len(),
            });
        }
        // matrix-vector products avoid the packing cost of a one-row gemm
        let hidden = (store.matrix(self.hidden_weight).dot(&input) + store.vector(self.hidden_bias))
            .mapv_into(f64::tanh);
        Ok(store.matrix(self.output_weight).dot(&hidden) + store.vector(self.output_bias))
    }

    /// Accumulate parameter gradients; returns the input gradient.
    pub fn backward(
        &self,
        store: &ParamStore,
        trace: &MlpTrace,
        d_output: ArrayView2<f64>,
        grads: &mut Gradients,
    ) -> Array2<f64> {
        general_mat_mul(
            1.0,
            &d_output.t(),
            &trace.hidden,
            1.0,
            &mut grads.matrix_mut(self.output_weight),
        );
        *grads.get_mut(self.output_bias) += &d_output.sum_axis(Axis(0)).into_dyn();

        let mut d_pre = d_output.dot(&store.matrix(self.output_weight));
        d_pre.zip_mut_with(&trace.hidden, |d, &h| *d *= 1.0 - h * h);

        general_mat_mul(
            1.0,
            &d_pre.t(),
            &trace.input,
            1.0,
            &mut grads.matrix_mut(self.hidden_weight),
        );
        *grads.get_mut(self.hidden_bias) += &d_pre.sum_axis(Axis(0)).into_dyn();

        d_pre.dot(&store.matrix(self.hidden_weight))
    }
}
