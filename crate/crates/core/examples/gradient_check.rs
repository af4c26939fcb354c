//! Central-difference check of the full contrastive gradient on a toy
//! instance in f64.

use matchalign::aligner::{contrastive_step, LabelMatrix};
use matchalign::numerics::{grad_check, ProjectionHeads};
use ndarray::Array2;
use rand::{Rng, SeedableRng};

fn main() -> matchalign::Result<()> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let (d, c) = (6, 12);
    let mut heads = ProjectionHeads::<f64>::init(d, 8, 4, 0, &mut rng);
    heads
        .visual
        .b2
        .mapv_inplace(|_| rng.random_range(-0.2..0.2));
    let text = Array2::from_shape_simple_fn((1, d), || rng.random_range(-1.0..1.0));
    let frames = Array2::from_shape_simple_fn((c, d), || rng.random_range(-1.0..1.0));
    let labels = LabelMatrix::one_hot(c, &[4])?;

    let mut probe = heads.clone();
    let report = grad_check(
        |p: &[f64]| {
            probe.set_flat(p).unwrap();
            let (loss, grads) =
                contrastive_step(&probe, text.view(), frames.view(), &labels).unwrap();
            (loss, grads.to_flat())
        },
        &heads.to_flat(),
        1e-4,
    )?;
    println!("{} parameters", heads.num_params());
    println!(
        "max relative error {:.2e} at #{} (analytic {:.6e}, numeric {:.6e})",
        report.max_rel_error, report.worst_index, report.analytic, report.numeric
    );
    Ok(())
}
