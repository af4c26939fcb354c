//! Trains projection heads on a fresh noise-free dataset and writes the
//! checkpoint plus loss trace.

use matchalign::aligner::{train, write_loss_trace, TrainConfig};
use matchalign::numerics::write_checkpoint;
use matchalign::synth::{load_split, write_dataset, Split, SynthConfig};

fn main() -> matchalign::Result<()> {
    let dir = tempfile::tempdir().expect("tempdir");
    let cfg = SynthConfig {
        num_matches: 8,
        num_test: 0,
        d: 64,
        ..Default::default()
    };
    write_dataset(dir.path(), &cfg)?;
    let data = load_split(dir.path(), Split::Train)?;

    let outcome = train(
        &data,
        &TrainConfig {
            epochs: 20,
            ..Default::default()
        },
    )?;
    for e in outcome.loss_trace.iter().step_by(5) {
        println!("epoch {:>2}  loss {:.4}", e.epoch, e.mean_loss);
    }
    let out = std::path::Path::new("heads-out");
    std::fs::create_dir_all(out).expect("create output dir");
    write_checkpoint(out.join("heads.mtac"), &outcome.heads)?;
    write_loss_trace(out.join("loss.csv"), &outcome.loss_trace)?;
    println!("wrote {}", out.display());
    Ok(())
}
