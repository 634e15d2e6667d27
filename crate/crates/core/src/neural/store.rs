//! Named parameter tensors, their gradients, and the checkpoint format.
//!
//! Checkpoint layout (little-endian):
//!
//! ```text
//! magic "TWNP" | version u32
//! then, until end of file, per tensor: name_len u32 | name (UTF-8) | rank u32 | dims u32[rank] | data f64[prod(dims)]
//! ```

use std::collections::HashMap;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{ArrayD, ArrayView1, ArrayView2, ArrayViewMut1, ArrayViewMut2, IxDyn, Ix1, Ix2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"TWNP";
const VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
struct Param {
    name: String,
    value: ArrayD<f64>,
    first_moment: ArrayD<f64>,
    second_moment: ArrayD<f64>,
}

/// Trainable tensors plus Adam state.
#[derive(Clone, Debug)]
pub struct ParamStore {
    params: Vec<Param>,
    by_name: HashMap<String, ParamId>,
    step: u64,
    seed: u64,
    rng: ChaCha8Rng,
}

impl ParamStore {
    pub fn new(seed: u64) -> Self {
        ParamStore {
            params: Vec::new(),
            by_name: HashMap::new(),
            step: 0,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of optimizer steps taken.
    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn num_scalars(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.params.len()).map(ParamId)
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.by_name.get(name).copied()
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.params[id.0].name
    }

    /// Register a tensor. Panics on duplicate names.
    pub fn add(&mut self, name: impl Into<String>, value: ArrayD<f64>) -> ParamId {
        let name = name.into();
        assert!(
            !self.by_name.contains_key(&name),
            "duplicate parameter name {name}"
        );
        let id = ParamId(self.params.len());
        let zeros = ArrayD::zeros(value.raw_dim());
        self.params.push(Param {
            name: name.clone(),
            first_moment: zeros.clone(),
            second_moment: zeros,
            value,
        });
        self.by_name.insert(name, id);
        id
    }

    pub fn add_zeros(&mut self, name: impl Into<String>, shape: &[usize]) -> ParamId {
        self.add(name, ArrayD::zeros(IxDyn(shape)))
    }

    pub fn add_uniform(&mut self, name: impl Into<String>, shape: &[usize], bound: f64) -> ParamId {
        let rng = &mut self.rng;
        let value = ArrayD::from_shape_simple_fn(IxDyn(shape), || rng.gen_range(-bound..=bound));
        self.add(name, value)
    }

    /// Glorot-uniform initialisation for a `fan_out × fan_in` matrix.
    pub fn add_xavier(&mut self, name: impl Into<String>, rows: usize, cols: usize) -> ParamId {
        let bound = (6.0 / (rows + cols) as f64).sqrt();
        self.add_uniform(name, &[rows, cols], bound)
    }

    pub fn value(&self, id: ParamId) -> &ArrayD<f64> {
        &self.params[id.0].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut ArrayD<f64> {
        &mut self.params[id.0].value
    }

    pub fn matrix(&self, id: ParamId) -> ArrayView2<'_, f64> {
        self.params[id.0]
            .value
            .view()
            .into_dimensionality::<Ix2>()
            .expect("parameter is not a matrix")
    }

    pub fn vector(&self, id: ParamId) -> ArrayView1<'_, f64> {
        self.params[id.0]
            .value
            .view()
            .into_dimensionality::<Ix1>()
            .expect("parameter is not a vector")
    }

    /// Row `row` of a matrix parameter (embedding lookup).
    pub fn row(&self, id: ParamId, row: usize) -> ArrayView1<'_, f64> {
        self.matrix(id).index_axis_move(ndarray::Axis(0), row)
    }

    /// A zero gradient buffer shaped like this store.
    pub fn zero_grads(&self) -> Gradients {
        Gradients {
            grads: self
                .params
                .iter()
                .map(|p| ArrayD::zeros(p.value.raw_dim()))
                .collect(),
        }
    }

    /// One bias-corrected Adam update.
    pub fn adam_step(&mut self, grads: &Gradients, adam: &Adam) -> Result<()> {
        if grads.grads.len() != self.params.len() {
            return Err(Error::Dimension {
                op: "adam_step",
                expected: self.params.len(),
                found: grads.grads.len(),
            });
        }
        for (p, g) in self.params.iter().zip(&grads.grads) {
            if p.value.shape() != g.shape() {
                return Err(Error::Dimension {
                    op: "adam_step",
                    expected: p.value.len(),
                    found: g.len(),
                });
            }
        }

        self.step += 1;
        let t = self.step as i32;
        let correction1 = 1.0 - adam.beta1.powi(t);
        let correction2 = 1.0 - adam.beta2.powi(t);
        for (p, g) in self.params.iter_mut().zip(&grads.grads) {
            ndarray::Zip::from(&mut p.value)
                .and(&mut p.first_moment)
                .and(&mut p.second_moment)
                .and(g)
                .for_each(|w, m, v, &g| {
                    *m = adam.beta1 * *m + (1.0 - adam.beta1) * g;
                    *v = adam.beta2 * *v + (1.0 - adam.beta2) * g * g;
                    let m_hat = *m / correction1;
                    let v_hat = *v / correction2;
                    *w -= adam.lr * m_hat / (v_hat.sqrt() + adam.eps);
                });
        }
        Ok(())
    }

    /// Serialize all tensor values in checkpoint layout.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        for p in &self.params {
            out.extend_from_slice(&(p.name.len() as u32).to_le_bytes());
            out.extend_from_slice(p.name.as_bytes());
            out.extend_from_slice(&(p.value.ndim() as u32).to_le_bytes());
            for &d in p.value.shape() {
                out.extend_from_slice(&(d as u32).to_le_bytes());
            }
            for &x in p.value.iter() {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    /// Read a checkpoint. Optimizer moments start at zero.
    pub fn from_bytes(bytes: &[u8], seed: u64) -> Result<Self> {
        let mut reader = bytes;
        let mut magic = [0u8; 4];
        read_exact(&mut reader, &mut magic)?;
        if &magic != MAGIC {
            return Err(container("bad magic"));
        }
        let version = read_u32(&mut reader)?;
        if version != VERSION {
            return Err(container(format!("unsupported version {version}")));
        }
        let mut store = ParamStore::new(seed);
        while !reader.is_empty() {
            let name_len = read_u32(&mut reader)? as usize;
            let mut name = vec![0u8; name_len];
            read_exact(&mut reader, &mut name)?;
            let name = String::from_utf8(name).map_err(|_| container("tensor name is not UTF-8"))?;
            let rank = read_u32(&mut reader)? as usize;
            let mut dims = Vec::with_capacity(rank);
            for _ in 0..rank {
                dims.push(read_u32(&mut reader)? as usize);
            }
            let len: usize = dims.iter().product();
            let mut data = Vec::with_capacity(len);
            for _ in 0..len {
                let mut buf = [0u8; 8];
                read_exact(&mut reader, &mut buf)?;
                data.push(f64::from_le_bytes(buf));
            }
            if store.by_name.contains_key(&name) {
                return Err(container(format!("duplicate tensor {name}")));
            }
            let value = ArrayD::from_shape_vec(IxDyn(&dims), data)
                .map_err(|e| container(e.to_string()))?;
            store.add(name, value);
        }
        Ok(store)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = fs::File::create(path)?;
        file.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>, seed: u64) -> Result<Self> {
        let bytes = fs::read(path)?;
        Self::from_bytes(&bytes, seed)
    }

    /// Overwrite values of tensors present in `other` by name; shapes must agree.
    pub fn copy_values_from(&mut self, other: &ParamStore) -> Result<()> {
        for p in &other.params {
            let id = self
                .id(&p.name)
                .ok_or_else(|| container(format!("unexpected tensor {}", p.name)))?;
            let target = &mut self.params[id.0].value;
            if target.shape() != p.value.shape() {
                return Err(container(format!("shape mismatch for tensor {}", p.name)));
            }
            target.assign(&p.value);
        }
        Ok(())
    }
}

fn container(message: impl Into<String>) -> Error {
    Error::Container {
        kind: "checkpoint",
        message: message.into(),
    }
}

fn read_exact(reader: &mut &[u8], buf: &mut [u8]) -> Result<()> {
    reader
        .read_exact(buf)
        .map_err(|_| container("truncated tensor data"))
}

fn read_u32(reader: &mut &[u8]) -> Result<u32> {
    let mut buf = [0u8; 4];
    read_exact(reader, &mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

/// Gradient buffers parallel to a [`ParamStore`].
#[derive(Clone, Debug)]
pub struct Gradients {
    grads: Vec<ArrayD<f64>>,
}

impl Gradients {
    pub fn get(&self, id: ParamId) -> &ArrayD<f64> {
        &self.grads[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut ArrayD<f64> {
        &mut self.grads[id.0]
    }

    pub fn matrix_mut(&mut self, id: ParamId) -> ArrayViewMut2<'_, f64> {
        self.grads[id.0]
            .view_mut()
            .into_dimensionality::<Ix2>()
            .expect("gradient is not a matrix")
    }

    pub fn vector_mut(&mut self, id: ParamId) -> ArrayViewMut1<'_, f64> {
        self.grads[id.0]
            .view_mut()
            .into_dimensionality::<Ix1>()
            .expect("gradient is not a vector")
    }

    pub fn zero(&mut self) {
        for g in &mut self.grads {
            g.fill(0.0);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for g in &mut self.grads {
            g.mapv_inplace(|x| x * factor);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.grads.iter().all(|g| g.iter().all(|x| x.is_finite()))
    }

    pub fn l2_norm(&self) -> f64 {
        self.grads
            .iter()
            .flat_map(|g| g.iter())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }
}

/// Adam hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for Adam {
    fn default() -> Self {
        Adam {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}
