//! LSTM cells and stacked bidirectional LSTMs with explicit backward passes.

use ndarray::linalg::general_mat_mul;
use ndarray::{concatenate, s, Array1, Array2, ArrayView1, ArrayView2, Axis};

use super::ops::{dropout_mask, sigmoid};
use super::store::{Gradients, ParamId, ParamStore};
use crate::error::{Error, Result};
use crate::Rng64;

const GATE_NAMES: [&str; 4] = ["input", "forget", "output", "candidate"];
const INPUT: usize = 0;
const FORGET: usize = 1;
const OUTPUT: usize = 2;
const CANDIDATE: usize = 3;

/// Weights of one LSTM direction. Each gate matrix is
/// `hidden_dim × (input_dim + hidden_dim)`, applied to `[x; h_prev]`.
#[derive(Clone, Debug)]
pub struct LstmParams {
    pub weights: [ParamId; 4],
    pub biases: [ParamId; 4],
    pub input_dim: usize,
    pub hidden_dim: usize,
}

/// Activations recorded by [`LstmParams::forward`], indexed by sequence position.
#[derive(Clone, Debug)]
pub struct LstmTrace {
    reverse: bool,
    inputs: Array2<f64>,
    gates: [Array2<f64>; 4],
    cells: Array2<f64>,
    tanh_cells: Array2<f64>,
    pub hidden: Array2<f64>,
}

impl LstmParams {
    pub fn new(store: &mut ParamStore, prefix: &str, input_dim: usize, hidden_dim: usize) -> Self {
        let weights = GATE_NAMES.map(|gate| {
            store.add_xavier(format!("{prefix}/w_{gate}"), hidden_dim, input_dim + hidden_dim)
        });
        let biases = GATE_NAMES.map(|gate| store.add_zeros(format!("{prefix}/b_{gate}"), &[hidden_dim]));
        LstmParams {
            weights,
            biases,
            input_dim,
            hidden_dim,
        }
    }

    /// A single cell update.
    pub fn step(
        &self,
        store: &ParamStore,
        x: ArrayView1<f64>,
        h_prev: ArrayView1<f64>,
        c_prev: ArrayView1<f64>,
    ) -> Result<(Array1<f64>, Array1<f64>)> {
        check_dim("lstm_step", self.input_dim, x.len())?;
        check_dim("lstm_step", self.hidden_dim, h_prev.len())?;
        check_dim("lstm_step", self.hidden_dim, c_prev.len())?;
        let joined = concatenate![Axis(0), x, h_prev];
        let pre: Vec<Array1<f64>> = (0..4)
            .map(|k| store.matrix(self.weights[k]).dot(&joined) + store.vector(self.biases[k]))
            .collect();
        let i = pre[INPUT].mapv(sigmoid);
        let f = pre[FORGET].mapv(sigmoid);
        let o = pre[OUTPUT].mapv(sigmoid);
        let g = pre[CANDIDATE].mapv(f64::tanh);
        let c = &f * &c_prev + &i * &g;
        let h = &o * &c.mapv(f64::tanh);
        Ok((h, c))
    }

    /// Run over a `T × input_dim` sequence, right to left when `reverse`.
    pub fn forward(&self, store: &ParamStore, xs: ArrayView2<f64>, reverse: bool) -> Result<LstmTrace> {
        check_dim("lstm", self.input_dim, xs.ncols())?;
        let steps = xs.nrows();
        let dh = self.hidden_dim;
        let din = self.input_dim;

        let w_in = self.stacked(store, 0..din);
        let w_rec = self.stacked(store, din..din + dh);
        let bias = concatenate(Axis(0), &self.biases.map(|b| store.vector(b))).expect("equal bias shapes");
        let projected = xs.dot(&w_in.t()) + &bias;

        let mut gates = [
            Array2::zeros((steps, dh)),
            Array2::zeros((steps, dh)),
            Array2::zeros((steps, dh)),
            Array2::zeros((steps, dh)),
        ];
        let mut cells = Array2::zeros((steps, dh));
        let mut tanh_cells = Array2::zeros((steps, dh));
        let mut hidden = Array2::zeros((steps, dh));

        let mut h = Array1::<f64>::zeros(dh);
        let mut c = Array1::<f64>::zeros(dh);
        let mut pre = Array1::<f64>::zeros(4 * dh);
        for t in order(steps, reverse) {
            pre.assign(&projected.row(t));
            mat_vec_add(&w_rec, h.as_slice().expect("contiguous"), pre.as_slice_mut().expect("contiguous"));
            let gate = |k: usize| pre.slice(s![k * dh..(k + 1) * dh]);
            let i = gate(INPUT).mapv(sigmoid);
            let f = gate(FORGET).mapv(sigmoid);
            let o = gate(OUTPUT).mapv(sigmoid);
            let g = gate(CANDIDATE).mapv(f64::tanh);
            c = &f * &c + &i * &g;
            let tc = c.mapv(f64::tanh);
            h = &o * &tc;
            for (k, v) in [(INPUT, i), (FORGET, f), (OUTPUT, o), (CANDIDATE, g)] {
                gates[k].row_mut(t).assign(&v);
            }
            cells.row_mut(t).assign(&c);
            tanh_cells.row_mut(t).assign(&tc);
            hidden.row_mut(t).assign(&h);
        }

        Ok(LstmTrace {
            reverse,
            inputs: xs.to_owned(),
            gates,
            cells,
            tanh_cells,
            hidden,
        })
    }

    /// Backpropagate `d_hidden` (`T × hidden_dim`); returns the input gradient.
    pub fn backward(
        &self,
        store: &ParamStore,
        trace: &LstmTrace,
        d_hidden: ArrayView2<f64>,
        grads: &mut Gradients,
    ) -> Array2<f64> {
        let steps = trace.hidden.nrows();
        let dh = self.hidden_dim;
        let din = self.input_dim;
        let w_rec = self.stacked(store, din..din + dh);

        let mut dz = [
            Array2::<f64>::zeros((steps, dh)),
            Array2::zeros((steps, dh)),
            Array2::zeros((steps, dh)),
            Array2::zeros((steps, dh)),
        ];
        let mut prev_hidden = Array2::<f64>::zeros((steps, dh));
        let mut dh_next = Array1::<f64>::zeros(dh);
        let mut dc_next = Array1::<f64>::zeros(dh);

        let positions: Vec<usize> = order(steps, trace.reverse).collect();
        for (n, &t) in positions.iter().enumerate().rev() {
            let prev = if n == 0 { None } else { Some(positions[n - 1]) };
            let i = trace.gates[INPUT].row(t);
            let f = trace.gates[FORGET].row(t);
            let o = trace.gates[OUTPUT].row(t);
            let g = trace.gates[CANDIDATE].row(t);
            let tc = trace.tanh_cells.row(t);

            let d_h = &d_hidden.row(t) + &dh_next;
            let d_o = &d_h * &tc;
            let d_c = &d_h * &o * &tc.mapv(|v| 1.0 - v * v) + &dc_next;
            let d_i = &d_c * &g;
            let d_g = &d_c * &i;
            let d_f = match prev {
                Some(p) => &d_c * &trace.cells.row(p),
                None => Array1::zeros(dh),
            };
            dc_next = &d_c * &f;

            dz[INPUT].row_mut(t).assign(&(&d_i * &i.mapv(|v| v * (1.0 - v))));
            dz[FORGET].row_mut(t).assign(&(&d_f * &f.mapv(|v| v * (1.0 - v))));
            dz[OUTPUT].row_mut(t).assign(&(&d_o * &o.mapv(|v| v * (1.0 - v))));
            dz[CANDIDATE].row_mut(t).assign(&(&d_g * &g.mapv(|v| 1.0 - v * v)));

            let mut next = vec![0.0; dh];
            for (k, dzk) in dz.iter().enumerate() {
                let rows = w_rec.slice(s![k * dh..(k + 1) * dh, ..]);
                vec_mat_add(dzk.row(t), rows, &mut next);
            }
            dh_next = Array1::from(next);
            if let Some(p) = prev {
                prev_hidden.row_mut(t).assign(&trace.hidden.row(p));
            }
        }

        let mut d_inputs = Array2::<f64>::zeros((steps, din));
        for (k, dzk) in dz.iter().enumerate() {
            let w = store.matrix(self.weights[k]);
            {
                let mut gw = grads.matrix_mut(self.weights[k]);
                general_mat_mul(1.0, &dzk.t(), &trace.inputs, 1.0, &mut gw.slice_mut(s![.., ..din]));
                general_mat_mul(1.0, &dzk.t(), &prev_hidden, 1.0, &mut gw.slice_mut(s![.., din..]));
            }
            let mut gb = grads.vector_mut(self.biases[k]);
            gb += &dzk.sum_axis(Axis(0));
            general_mat_mul(1.0, dzk, &w.slice(s![.., ..din]), 1.0, &mut d_inputs);
        }
        d_inputs
    }
}

impl LstmParams {
    /// The four gate matrices restricted to `cols`, stacked row-wise into
    /// one contiguous `4·hidden × cols` matrix.
    fn stacked(&self, store: &ParamStore, cols: std::ops::Range<usize>) -> Array2<f64> {
        let parts = self.weights.map(|w| store.matrix(w).slice_move(s![.., cols.clone()]));
        concatenate(Axis(0), &parts).expect("equal gate shapes")
    }
}

/// `out += w x` for a row-major `w`.
fn mat_vec_add(w: &Array2<f64>, x: &[f64], out: &mut [f64]) {
    for (row, o) in w.rows().into_iter().zip(out.iter_mut()) {
        *o += dot(row.to_slice().expect("row-major"), x);
    }
}

/// Dot product with four independent accumulators so the loop vectorises.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    acc.iter().sum::<f64>() + tail
}

/// `out += vᵀ w` for a row-major `w`.
fn vec_mat_add(v: ArrayView1<f64>, w: ArrayView2<f64>, out: &mut [f64]) {
    for (&a, row) in v.iter().zip(w.rows()) {
        if a == 0.0 {
            continue;
        }
        let row = row.to_slice().expect("row-major");
        for (o, &b) in out.iter_mut().zip(row) {
            *o += a * b;
        }
    }
}

fn order(steps: usize, reverse: bool) -> Box<dyn DoubleEndedIterator<Item = usize>> {
    if reverse {
        Box::new((0..steps).rev())
    } else {
        Box::new(0..steps)
    }
}

fn check_dim(op: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::Dimension { op, expected, found });
    }
    Ok(())
}

/// Training-time dropout applied to every BiLSTM layer output.
pub struct Dropout<'a> {
    pub rate: f64,
    pub rng: &'a mut Rng64,
}

/// Stacked bidirectional LSTM. Each layer's output is the concatenation of
/// its forward and backward states and feeds the next layer.
#[derive(Clone, Debug)]
pub struct BiLstm {
    layers: Vec<[LstmParams; 2]>,
    hidden_dim: usize,
    input_dim: usize,
}

#[derive(Clone, Debug)]
struct LayerTrace {
    forward: LstmTrace,
    backward: LstmTrace,
    mask: Option<Array2<f64>>,
}

#[derive(Clone, Debug)]
pub struct BiLstmTrace {
    layers: Vec<LayerTrace>,
    /// `T × 2·hidden_dim` outputs of the last layer.
    pub output: Array2<f64>,
}

impl BiLstm {
    pub fn new(
        store: &mut ParamStore,
        prefix: &str,
        input_dim: usize,
        hidden_dim: usize,
        num_layers: usize,
    ) -> Self {
        let layers = (0..num_layers)
            .map(|l| {
                let din = if l == 0 { input_dim } else { 2 * hidden_dim };
                [
                    LstmParams::new(store, &format!("{prefix}/l{l}/fwd"), din, hidden_dim),
                    LstmParams::new(store, &format!("{prefix}/l{l}/bwd"), din, hidden_dim),
                ]
            })
            .collect();
        BiLstm {
            layers,
            hidden_dim,
            input_dim,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        2 * self.hidden_dim
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn forward(
        &self,
        store: &ParamStore,
        xs: ArrayView2<f64>,
        mut dropout: Option<Dropout<'_>>,
    ) -> Result<BiLstmTrace> {
        if xs.nrows() == 0 {
            return Err(Error::Empty("bilstm input sequence"));
        }
        let mut input = xs.to_owned();
        let mut traces = Vec::with_capacity(self.layers.len());
        for [fwd, bwd] in &self.layers {
            let f = fwd.forward(store, input.view(), false)?;
            let b = bwd.forward(store, input.view(), true)?;
            let mut out = concatenate![Axis(1), f.hidden, b.hidden];
            let mask = dropout
                .as_mut()
                .map(|d| dropout_mask(out.nrows(), out.ncols(), d.rate, d.rng));
            if let Some(m) = &mask {
                out *= m;
            }
            traces.push(LayerTrace {
                forward: f,
                backward: b,
                mask,
            });
            input = out;
        }
        Ok(BiLstmTrace {
            layers: traces,
            output: input,
        })
    }

    pub fn backward(
        &self,
        store: &ParamStore,
        trace: &BiLstmTrace,
        d_output: ArrayView2<f64>,
        grads: &mut Gradients,
    ) -> Array2<f64> {
        let h = self.hidden_dim;
        let mut d = d_output.to_owned();
        for ([fwd, bwd], layer) in self.layers.iter().zip(&trace.layers).rev() {
            if let Some(m) = &layer.mask {
                d *= m;
            }
            let mut dx = fwd.backward(store, &layer.forward, d.slice(s![.., ..h]), grads);
            dx += &bwd.backward(store, &layer.backward, d.slice(s![.., h..]), grads);
            d = dx;
        }
        d
    }
}
