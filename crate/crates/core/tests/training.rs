use matchalign::aligner::{train, TrainConfig};
use matchalign::synth::{load_split, write_dataset, Split, SynthConfig};

/// One positive and 112 negatives under the default window.
const CANDIDATES: usize = 113;

fn noise_free_losses(num_matches: usize, epochs: usize) -> (f64, f64) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SynthConfig {
        num_matches,
        num_test: 0,
        d: 64,
        seed: 21,
        ..Default::default()
    };
    write_dataset(dir.path(), &cfg).unwrap();
    let data = load_split(dir.path(), Split::Train).unwrap();
    let outcome = train(
        &data,
        &TrainConfig {
            epochs,
            ..Default::default()
        },
    )
    .unwrap();
    let trace = &outcome.loss_trace;
    (trace[0].mean_loss, trace.last().unwrap().mean_loss)
}

#[test]
fn loss_decreases_and_respects_the_cosine_floor() {
    let (first, last) = noise_free_losses(6, 15);
    // logits are cosines in [-1, 1]
    let floor = (1.0 + (CANDIDATES - 1) as f64 * (-2.0f64).exp()).ln();
    assert!(last < first, "{first} -> {last}");
    assert!(last > floor, "{last} <= {floor}");
}

/// With one positive among ~113 cosine logits the loss cannot fall much
/// below log(1 + 112/e) once negatives become orthogonal, so halving from
/// an initial ~4.1 does not happen. Kept for the record.
#[test]
#[ignore = "unattainable with bounded cosine logits; final loss plateaus near 3.75 from ~4.1"]
fn default_training_halves_the_loss() {
    let (first, last) = noise_free_losses(20, 50);
    assert!(last <= 0.5 * first, "{first} -> {last}");
}
