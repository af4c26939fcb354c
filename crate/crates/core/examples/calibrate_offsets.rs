//! Fits the width of the truncated-normal offset model to the target mean
//! absolute offset, then samples it.

use matchalign::synth::offsets::{OFFSET_ABSMEAN_S, OFFSET_MEAN_S, OFFSET_RANGE_S};
use matchalign::synth::{calibrate_sigma, TruncatedNormal};
use rand::SeedableRng;

fn main() -> matchalign::Result<()> {
    let (lo, hi) = OFFSET_RANGE_S;
    let sigma = calibrate_sigma(OFFSET_MEAN_S, OFFSET_ABSMEAN_S, lo, hi)?;
    let dist = TruncatedNormal::new(OFFSET_MEAN_S, sigma, lo, hi)?;
    println!("sigma {sigma:.6}");
    println!(
        "analytic  mean {:.3}  abs-mean {:.3}  within 10s {:.2}%",
        dist.mean_value(),
        dist.abs_mean(),
        dist.coverage(10.0)
    );

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    let draws: Vec<f64> = (0..100_000).map(|_| dist.sample(&mut rng)).collect();
    let n = draws.len() as f64;
    let inside = draws.iter().filter(|d| d.abs() <= 10.0).count() as f64;
    println!(
        "sampled   mean {:.3}  abs-mean {:.3}  within 10s {:.2}%",
        draws.iter().sum::<f64>() / n,
        draws.iter().map(|d| d.abs()).sum::<f64>() / n,
        100.0 * inside / n
    );
    Ok(())
}
