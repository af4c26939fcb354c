//! Writes a small synthetic dataset and prints how far the source
//! timestamps sit from the truth.
//!
//! cargo run --release --example synth_dataset -- /tmp/synth

use matchalign::model::compute_offset_stats;
use matchalign::synth::{load_split, write_dataset, Split, SynthConfig};

fn main() -> matchalign::Result<()> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "synth-data".into());
    let cfg = SynthConfig {
        num_matches: 8,
        num_test: 2,
        d: 64,
        noise_sigma: 0.3,
        replay_prob: 0.1,
        seed: 7,
        ..Default::default()
    };
    let manifest = write_dataset(&out, &cfg)?;
    println!(
        "{} train / {} test matches in {out}",
        manifest.train.len(),
        manifest.test.len()
    );

    let (mut t, mut gt) = (Vec::new(), Vec::new());
    for m in load_split(&out, Split::Train)? {
        t.extend(m.commentaries.iter().map(|c| c.t));
        gt.extend(m.ground_truth()?);
    }
    let stats = compute_offset_stats(&t, &gt, &[10.0, 30.0, 60.0])?;
    println!("avg |Δ| {:.2}s", stats.avg_abs_delta);
    for w in &stats.window_coverage {
        println!("  within {:>2}s: {:.1}%", w.window_s, w.percent);
    }
    Ok(())
}
