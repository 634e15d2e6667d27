//! Finite-difference check of the BiLSTM encoder's analytic gradients.
//!
//! cargo run --example gradient_check

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use twinparse::encoder::Encoder;
use twinparse::neural::{grad_check, ParamStore};
use twinparse::Rng64;

fn main() -> twinparse::Result<()> {
    let mut rng = Rng64::seed_from_u64(3);
    let mut store = ParamStore::new(3);
    let encoder = Encoder::new(&mut store, "enc", 4, 3, 2);
    let xs = Array2::from_shape_fn((5, 4), |_| rng.gen_range(-1.0..1.0));
    let weights = Array2::from_shape_fn((6, encoder.output_dim()), |_| rng.gen_range(-1.0..1.0));
    let report = grad_check(
        &mut store,
        |s| {
            let (out, trace) = encoder.encode(s, xs.view(), None)?;
            let mut grads = s.zero_grads();
            encoder.backward(s, &trace, weights.view(), None, &mut grads);
            Ok(((&out.vectors * &weights).sum(), grads))
        },
        1e-4,
    )?;
    println!(
        "{} entries checked, max relative error {:.2e}, worst {:?}: {}",
        report.checked,
        report.max_relative_error,
        report.worst,
        if report.passed() { "ok" } else { "FAILED" }
    );
    Ok(())
}
