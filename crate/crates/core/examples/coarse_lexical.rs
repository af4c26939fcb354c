//! Lexical coarse stage on its own: bins the match transcript into 10 s
//! slots and picks, per commentary, the most similar bin nearby.

use matchalign::coarse::{
    bin_transcript, CoarseConfig, CoarseMode, CoarsePredictor, PromptTemplates,
};
use matchalign::synth::{write_transcript, Generator, SynthConfig};

fn main() -> matchalign::Result<()> {
    let gen = Generator::new(SynthConfig {
        d: 8,
        ..Default::default()
    })?;
    let synth = gen.generate_match(gen.match_seed(0));
    let transcript = write_transcript(&synth.record, &synth.truth, 3, 4.0);
    let cfg = CoarseConfig::default();
    let bins = bin_transcript(&transcript.segments, cfg.bin_s, synth.record.duration_s)?;
    let predictor = CoarsePredictor::new(&bins, &cfg, PromptTemplates::default())?;

    let mut hits = 0;
    for c in synth.record.commentaries.iter().take(8) {
        let est = predictor.predict(c, CoarseMode::Lexical, None, &mut Vec::new());
        let t_gt = c.t_gt.unwrap();
        hits += ((est.t / 10.0).floor() == (t_gt / 10.0).floor()) as usize;
        println!(
            "t {:>7.1}  estimate {:>7.1}  truth {:>7.1}  {}",
            c.t, est.t, t_gt, c.text
        );
    }
    println!("{hits}/8 in the right bin");
    Ok(())
}
