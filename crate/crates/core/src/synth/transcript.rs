//! Templated commentary texts and a matching synthetic ASR transcript.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::GroundTruthMap;
use crate::coarse::{AsrSegment, AsrTranscript};
use crate::model::MatchRecord;

pub(crate) const PLAYERS: [&str; 40] = [
    "Okafor",
    "Lindqvist",
    "Moreau",
    "Tanaka",
    "Brennan",
    "Castillo",
    "Novak",
    "Haddad",
    "Fischer",
    "Adeyemi",
    "Kowalski",
    "Ferreira",
    "Dubois",
    "Sorensen",
    "Mensah",
    "Rossi",
    "Petrov",
    "Yilmaz",
    "Gallagher",
    "Costa",
    "Nakamura",
    "Jovanovic",
    "Schmidt",
    "Diallo",
    "Varga",
    "Eriksen",
    "Mbeki",
    "Quinn",
    "Alvarez",
    "Horvat",
    "Bakker",
    "Sato",
    "Murphy",
    "Ivanov",
    "Silva",
    "Keller",
    "Osei",
    "Larsen",
    "Romero",
    "Walsh",
];

pub(crate) const TEAMS: [&str; 10] = [
    "Rovers",
    "Athletic",
    "United",
    "Wanderers",
    "Albion",
    "Rangers",
    "Harriers",
    "Dynamo",
    "Sporting",
    "Olympic",
];

const EVENTS: [&str; 12] = [
    "Corner kick {side} side, {player} swings it in",
    "Yellow card for {player} after a late tackle",
    "{player} shoots from distance but it flies wide",
    "Free kick awarded to {team} after {player} is fouled",
    "Goal! {player} heads home for {team}",
    "Substitution for {team}, {player} comes on",
    "{player} caught offside again",
    "Great save from the {team} keeper to deny {player}",
    "{player} clears the danger with a header",
    "Penalty appeal from {player} waved away by the referee",
    "Throw-in for {team} deep near the {side} corner flag",
    "{player} whips a cross into the box",
];

const INTROS: [&str; 5] = ["oh", "and", "here we go", "look at this", "well"];
const OUTROS: [&str; 5] = [
    "what a moment",
    "that changes things",
    "you have to say",
    "brilliant stuff",
    "",
];

const FILLER: [&str; 10] = [
    "what an atmosphere here tonight",
    "both sides settling into a rhythm",
    "patient possession in the middle of the park",
    "the fans are in good voice",
    "plenty of time left in this one",
    "they will want to keep it tight now",
    "the tempo has dropped a little",
    "an interesting tactical battle developing",
    "the manager is pacing in the technical area",
    "nobody wants to lose this game",
];

/// One templated event description naming a player and/or one of `teams`.
pub(crate) fn commentary_text<R: Rng + ?Sized>(rng: &mut R, teams: &[&str; 2]) -> String {
    let template = EVENTS.choose(rng).expect("non-empty");
    template
        .replace("{player}", PLAYERS.choose(rng).expect("non-empty"))
        .replace("{team}", teams.choose(rng).expect("non-empty"))
        .replace(
            "{side}",
            if rng.random_bool(0.5) {
                "left"
            } else {
                "right"
            },
        )
}

fn overlaps(segments: &[AsrSegment], start: f64, end: f64) -> bool {
    segments.iter().any(|s| start < s.end && s.start < end)
}

/// Narration for `record`: one segment per commentary inside the 10 s bin of
/// its planted frame, repeating the commentary's wording between an intro
/// and an outro, plus non-overlapping filler at `filler_per_minute`.
pub fn write_transcript(
    record: &MatchRecord,
    truth: &GroundTruthMap,
    vocab_seed: u64,
    filler_per_minute: f64,
) -> AsrTranscript {
    let mut rng = ChaCha8Rng::seed_from_u64(vocab_seed);
    let mut segments = Vec::with_capacity(record.commentaries.len());
    for (c, &frame) in record.commentaries.iter().zip(&truth.planted) {
        let anchor = record.frames.timestamps[frame];
        let bin = (anchor / 10.0).floor() * 10.0;
        let len = rng.random_range(1.5..3.0);
        let mut start = anchor + rng.random_range(0.0..1.0);
        if start + len > bin + 10.0 {
            start = (bin + 10.0 - len).max(bin);
        }
        let intro = INTROS.choose(&mut rng).expect("non-empty");
        let outro = OUTROS.choose(&mut rng).expect("non-empty");
        segments.push(AsrSegment {
            start,
            end: start + len,
            text: format!("{intro} {} {outro}", c.text).trim().to_owned(),
        });
    }

    let fillers = (filler_per_minute * record.duration_s / 60.0).round() as usize;
    for _ in 0..fillers {
        for _attempt in 0..20 {
            let len = rng.random_range(2.0..4.0);
            let start = rng.random_range(0.0..(record.duration_s - len).max(0.0));
            if overlaps(&segments, start, start + len) {
                continue;
            }
            let mut text = FILLER.choose(&mut rng).expect("non-empty").to_string();
            if rng.random_bool(0.1) {
                text = format!(
                    "{} looking lively, {text}",
                    PLAYERS.choose(&mut rng).expect("non-empty")
                );
            }
            segments.push(AsrSegment {
                start,
                end: start + len,
                text,
            });
            break;
        }
    }
    segments.sort_by(|a, b| a.start.total_cmp(&b.start));
    AsrTranscript { segments }
}
