use ndarray::{Array1, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::neural::ops::softmax;
use crate::neural::{Gradients, ParamId, ParamStore};

/// `gamma * sum_j softmax(s_raw)_j * layers[j]`.
pub fn scalar_mix(layers: &[ArrayView1<f64>], s_raw: ArrayView1<f64>, gamma: f64) -> Result<Array1<f64>> {
    let first = layers.first().ok_or(Error::Empty("scalar mix layers"))?;
    if s_raw.len() != layers.len() {
        return Err(Error::Dimension {
            op: "scalar_mix weights",
            expected: layers.len(),
            found: s_raw.len(),
        });
    }
    let weights = softmax(s_raw);
    let mut out = Array1::zeros(first.len());
    for (layer, w) in layers.iter().zip(&weights) {
        if layer.len() != first.len() {
            return Err(Error::Dimension {
                op: "scalar_mix layer",
                expected: first.len(),
                found: layer.len(),
            });
        }
        out.scaled_add(*w, layer);
    }
    Ok(out * gamma)
}

/// Trainable mixing weights and scale.
#[derive(Clone, Debug)]
pub struct ScalarMix {
    pub weights: ParamId,
    pub gamma: ParamId,
    pub num_layers: usize,
}

impl ScalarMix {
    /// Uniform weights, gamma 1.
    pub fn new(store: &mut ParamStore, prefix: &str, num_layers: usize) -> Self {
        let weights = store.add_zeros(format!("{prefix}/s_raw"), &[num_layers]);
        let gamma = store.add(format!("{prefix}/gamma"), ndarray::arr1(&[1.0]).into_dyn());
        ScalarMix {
            weights,
            gamma,
            num_layers,
        }
    }

    pub fn probabilities(&self, store: &ParamStore) -> Array1<f64> {
        softmax(store.vector(self.weights))
    }

    pub fn gamma(&self, store: &ParamStore) -> f64 {
        store.vector(self.gamma)[0]
    }

    /// Mix the rows of an `L × D` matrix.
    pub fn forward(&self, store: &ParamStore, layers: ArrayView2<f64>) -> Result<Array1<f64>> {
        if layers.nrows() != self.num_layers {
            return Err(Error::Dimension {
                op: "scalar_mix layers",
                expected: self.num_layers,
                found: layers.nrows(),
            });
        }
        let rows: Vec<_> = layers.rows().into_iter().collect();
        scalar_mix(&rows, store.vector(self.weights), self.gamma(store))
    }

    /// Accumulate gradients of the weights and gamma. The layers themselves
    /// are fixed inputs.
    pub fn backward(&self, store: &ParamStore, layers: ArrayView2<f64>, d_out: ArrayView1<f64>, grads: &mut Gradients) {
        let p = self.probabilities(store);
        let gamma = self.gamma(store);
        // d_out . layer_j for every layer
        let proj = layers.dot(&d_out);
        let mixed: f64 = p.dot(&proj);
        grads.vector_mut(self.gamma)[0] += mixed;
        let mut d_s = grads.vector_mut(self.weights);
        for j in 0..self.num_layers {
            d_s[j] += gamma * p[j] * (proj[j] - mixed);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr1;

    #[test]
    fn uniform_weights_then_scale() {
        let a = arr1(&[1.0, 2.0]);
        let b = arr1(&[3.0, 4.0]);
        let out = scalar_mix(&[a.view(), b.view()], arr1(&[0.3, 0.3]).view(), 2.0).unwrap();
        assert!((out[0] - 4.0).abs() < 1e-12 && (out[1] - 6.0).abs() < 1e-12);
        let zero = scalar_mix(&[a.view(), b.view()], arr1(&[0.3, 0.3]).view(), 0.0).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn saturated_softmax_selects_a_layer() {
        let a = arr1(&[1.0, 2.0]);
        let b = arr1(&[3.0, 4.0]);
        let out = scalar_mix(&[a.view(), b.view()], arr1(&[1000.0, 0.0]).view(), 1.0).unwrap();
        assert!((&out - &a).iter().all(|v| v.abs() < 1e-6));
    }

    #[test]
    fn inconsistent_dims() {
        let a = arr1(&[1.0, 2.0]);
        let b = arr1(&[3.0]);
        assert!(scalar_mix(&[a.view(), b.view()], arr1(&[0.0, 0.0]).view(), 1.0).is_err());
        assert!(scalar_mix(&[], arr1(&[]).view(), 1.0).is_err());
    }
}
