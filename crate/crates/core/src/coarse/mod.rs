//! Transcript-driven coarse alignment: bin ASR narration into 10 s event
//! descriptions, then move each commentary to the bin that describes it.

pub mod asr;
pub mod lexical;
pub mod llm;

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

pub use asr::{bin_transcript, read_asr_file, write_asr_file, AsrSegment, AsrTranscript, EventBin};
pub use lexical::{tokenize, TfIdfIndex, STOP_WORDS};
pub use llm::{render, HttpLlmClient, LlmClient, LlmEndpointConfig, PromptTemplates};

use crate::error::{Error, Result};
use crate::model::{CommentaryItem, MatchRecord};

pub const DEFAULT_BIN_S: f64 = 10.0;
/// Bins per summarisation prompt (a 60 s clip at the default width).
pub const BINS_PER_PROMPT: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CoarseMode {
    Llm,
    Lexical,
    Off,
}

impl CoarseMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            CoarseMode::Llm => "llm",
            CoarseMode::Lexical => "lexical",
            CoarseMode::Off => "off",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SummarizeMode {
    Llm,
    Passthrough,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CoarseConfig {
    pub mode: CoarseMode,
    pub bin_s: f64,
    /// Lexical similarity floor below which the original timestamp is kept.
    pub tau: f64,
    /// Bins whose interval meets `[t − span, t + span]` are offered as candidates.
    pub candidate_span_s: f64,
    pub endpoint: Option<LlmEndpointConfig>,
}

impl Default for CoarseConfig {
    fn default() -> Self {
        Self {
            mode: CoarseMode::Lexical,
            bin_s: DEFAULT_BIN_S,
            tau: 0.1,
            candidate_span_s: 90.0,
            endpoint: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EstimateSource {
    Lexical { bin: usize, similarity: f64 },
    Llm,
    Original,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoarseEstimate {
    pub t: f64,
    pub source: EstimateSource,
}

impl CoarseEstimate {
    fn original(t: f64) -> Self {
        Self {
            t,
            source: EstimateSource::Original,
        }
    }
}

fn warn(warnings: &mut Vec<String>, msg: String) {
    log::warn!("{msg}");
    warnings.push(msg);
}

fn bin_label(start: f64, end: f64) -> String {
    format!("{}-{}s", fmt_secs(start), fmt_secs(end))
}

fn fmt_secs(t: f64) -> String {
    if t.fract() == 0.0 {
        format!("{}", t as i64)
    } else {
        format!("{t:.1}")
    }
}

/// Summarisation prompt for one clip of consecutive bins, with bin times
/// relative to the clip start.
pub fn summarize_prompt(templates: &PromptTemplates, chunk: &[EventBin]) -> String {
    let origin = chunk.first().map(|b| b.start_s).unwrap_or(0.0);
    let ranges: Vec<String> = chunk
        .iter()
        .map(|b| bin_label(b.start_s - origin, b.end_s - origin))
        .collect();
    let sentences: Vec<String> = chunk
        .iter()
        .zip(&ranges)
        .map(|(b, r)| format!("{r}: {}", b.summary))
        .collect();
    render(
        &templates.summarize,
        &[
            ("asr_sentences", &sentences.join("\n")),
            ("num_bins", &chunk.len().to_string()),
            ("bin_ranges", &ranges.join(", ")),
        ],
    )
}

fn line_prefix_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"^\s*(?:[-*•]\s*)?(?:\d+\s*[.)]\s+|\d+(?:\.\d+)?\s*-\s*\d+(?:\.\d+)?\s*s?\s*:\s*)?",
        )
        .expect("valid regex")
    })
}

/// One summary per non-empty reply line, with list markers and
/// `"0-10s:"`-style prefixes stripped.
pub fn parse_summaries(reply: &str) -> Vec<String> {
    reply
        .lines()
        .map(|l| line_prefix_regex().replace(l, "").trim().to_owned())
        .filter(|l| !l.is_empty())
        .collect()
}

/// Passthrough copies raw bin text; LLM mode asks the endpoint for one
/// summary per bin, one prompt per clip of [`BINS_PER_PROMPT`] bins. Bins
/// the reply does not cover keep their raw text and produce a warning.
pub fn summarize_bins(
    bins: &[EventBin],
    mode: SummarizeMode,
    client: Option<&dyn LlmClient>,
    templates: &PromptTemplates,
    max_in_flight: usize,
    warnings: &mut Vec<String>,
) -> Result<Vec<EventBin>> {
    let client = match (mode, client) {
        (SummarizeMode::Passthrough, _) => return Ok(bins.to_vec()),
        (SummarizeMode::Llm, None) => {
            return Err(Error::Config(
                "LLM summarisation requires an endpoint".into(),
            ))
        }
        (SummarizeMode::Llm, Some(c)) => c,
    };
    let chunks: Vec<&[EventBin]> = bins.chunks(BINS_PER_PROMPT).collect();
    let mut replies: Vec<Option<Result<String>>> = (0..chunks.len()).map(|_| None).collect();
    for (group_idx, group) in chunks.chunks(max_in_flight.max(1)).enumerate() {
        let base = group_idx * max_in_flight.max(1);
        let results: Vec<Result<String>> = std::thread::scope(|s| {
            let handles: Vec<_> = group
                .iter()
                .map(|chunk| s.spawn(move || client.complete(&summarize_prompt(templates, chunk))))
                .collect();
            handles
                .into_iter()
                .map(|h| {
                    h.join()
                        .unwrap_or_else(|_| Err(Error::Endpoint("worker panicked".into())))
                })
                .collect()
        });
        for (i, r) in results.into_iter().enumerate() {
            replies[base + i] = Some(r);
        }
    }

    let mut out = Vec::with_capacity(bins.len());
    for (chunk, reply) in chunks.iter().zip(replies) {
        let reply = reply.expect("every chunk requested")?;
        let summaries = parse_summaries(&reply);
        if summaries.len() < chunk.len() {
            warn(
                warnings,
                format!(
                    "summary reply for {} covered {} of {} bins; keeping raw text for the rest",
                    bin_label(chunk[0].start_s, chunk[chunk.len() - 1].end_s),
                    summaries.len(),
                    chunk.len()
                ),
            );
        }
        for (i, b) in chunk.iter().enumerate() {
            out.push(EventBin {
                summary: summaries
                    .get(i)
                    .cloned()
                    .unwrap_or_else(|| b.summary.clone()),
                ..b.clone()
            });
        }
    }
    Ok(out)
}

fn timestamp_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?:\b[12]\s*-\s*)?(\d{1,3}):([0-5]\d)|(\d+(?:\.\d+)?)").expect("valid regex")
    })
}

/// First timestamp in free text, as seconds. Accepts `MM:SS`, `H - MM:SS`
/// and bare seconds.
pub fn parse_timestamp(text: &str) -> Option<f64> {
    let caps = timestamp_regex().captures(text)?;
    if let (Some(m), Some(s)) = (caps.get(1), caps.get(2)) {
        let m: f64 = m.as_str().parse().ok()?;
        let s: f64 = s.as_str().parse().ok()?;
        return Some(m * 60.0 + s);
    }
    caps.get(3)?.as_str().parse().ok()
}

/// Holds the TF-IDF index over one match's bins.
pub struct CoarsePredictor<'a> {
    bins: &'a [EventBin],
    index: TfIdfIndex,
    cfg: &'a CoarseConfig,
    templates: PromptTemplates,
}

impl<'a> CoarsePredictor<'a> {
    pub fn new(
        bins: &'a [EventBin],
        cfg: &'a CoarseConfig,
        templates: PromptTemplates,
    ) -> Result<Self> {
        if bins.is_empty() {
            return Err(Error::EmptyInput("no event bins"));
        }
        let docs: Vec<&str> = bins.iter().map(|b| b.summary.as_str()).collect();
        Ok(Self {
            bins,
            index: TfIdfIndex::new(&docs),
            cfg,
            templates,
        })
    }

    pub fn candidates(&self, t: f64) -> Vec<usize> {
        let (lo, hi) = (t - self.cfg.candidate_span_s, t + self.cfg.candidate_span_s);
        (0..self.bins.len())
            .filter(|&i| self.bins[i].end_s > lo && self.bins[i].start_s <= hi)
            .collect()
    }

    pub fn predict_lexical(
        &self,
        commentary: &CommentaryItem,
        warnings: &mut Vec<String>,
    ) -> CoarseEstimate {
        if tokenize(&commentary.text).is_empty() {
            warn(
                warnings,
                format!("commentary at {} s has no usable tokens", commentary.t),
            );
            return CoarseEstimate::original(commentary.t);
        }
        match self
            .index
            .best_match(&commentary.text, &self.candidates(commentary.t))
        {
            Some((bin, similarity)) if similarity >= self.cfg.tau => CoarseEstimate {
                t: self.bins[bin].midpoint(),
                source: EstimateSource::Lexical { bin, similarity },
            },
            _ => CoarseEstimate::original(commentary.t),
        }
    }

    pub fn predict_prompt(&self, commentary: &CommentaryItem) -> String {
        let events: Vec<String> = self
            .candidates(commentary.t)
            .into_iter()
            .map(|i| {
                let b = &self.bins[i];
                format!("{}: {}", bin_label(b.start_s, b.end_s), b.summary)
            })
            .collect();
        render(
            &self.templates.predict,
            &[
                (
                    "original_timestamp",
                    &format!("{}s", fmt_secs(commentary.t.round())),
                ),
                ("commentary", &commentary.text),
                ("candidate_events", &events.join("\n")),
            ],
        )
    }

    pub fn predict_llm(
        &self,
        commentary: &CommentaryItem,
        client: &dyn LlmClient,
        warnings: &mut Vec<String>,
    ) -> CoarseEstimate {
        let reply = match client.complete(&self.predict_prompt(commentary)) {
            Ok(r) => r,
            Err(e) => {
                warn(
                    warnings,
                    format!("timestamp prediction failed ({e}); using lexical matcher"),
                );
                return self.predict_lexical(commentary, warnings);
            }
        };
        let offered = self.candidates(commentary.t);
        match parse_timestamp(&reply) {
            Some(t)
                if offered
                    .iter()
                    .any(|&i| t >= self.bins[i].start_s && t <= self.bins[i].end_s) =>
            {
                CoarseEstimate {
                    t,
                    source: EstimateSource::Llm,
                }
            }
            _ => CoarseEstimate::original(commentary.t),
        }
    }

    pub fn predict(
        &self,
        commentary: &CommentaryItem,
        mode: CoarseMode,
        client: Option<&dyn LlmClient>,
        warnings: &mut Vec<String>,
    ) -> CoarseEstimate {
        match (mode, client) {
            (CoarseMode::Off, _) => CoarseEstimate::original(commentary.t),
            (CoarseMode::Lexical, _) => self.predict_lexical(commentary, warnings),
            (CoarseMode::Llm, Some(c)) => self.predict_llm(commentary, c, warnings),
            (CoarseMode::Llm, None) => {
                warn(
                    warnings,
                    "no endpoint configured; using lexical matcher".into(),
                );
                self.predict_lexical(commentary, warnings)
            }
        }
    }
}

/// Coarse timestamp for a single commentary.
pub fn predict_timestamp(
    commentary: &CommentaryItem,
    bins: &[EventBin],
    mode: CoarseMode,
    client: Option<&dyn LlmClient>,
    cfg: &CoarseConfig,
) -> Result<CoarseEstimate> {
    let predictor = CoarsePredictor::new(bins, cfg, PromptTemplates::default())?;
    Ok(predictor.predict(commentary, mode, client, &mut Vec::new()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoarseOutcome {
    pub estimates: Vec<CoarseEstimate>,
    pub warnings: Vec<String>,
}

/// Runs the coarse stage over a whole match. Returns `None` when the match
/// has no transcript or the stage is off. Endpoint failures degrade to the
/// lexical path and are reported as warnings.
pub fn coarse_align(
    record: &MatchRecord,
    cfg: &CoarseConfig,
    client: Option<&dyn LlmClient>,
) -> Result<Option<CoarseOutcome>> {
    let Some(asr_path) = &record.asr_path else {
        return Ok(None);
    };
    if cfg.mode == CoarseMode::Off {
        return Ok(None);
    }
    let transcript = read_asr_file(asr_path)?;
    let raw_bins = bin_transcript(&transcript.segments, cfg.bin_s, record.duration_s)?;
    let templates = match &cfg.endpoint {
        Some(e) => PromptTemplates::load(&e.prompt_template_paths)?,
        None => PromptTemplates::default(),
    };
    let mut warnings = Vec::new();
    let bins = if cfg.mode == CoarseMode::Llm && client.is_some() {
        let in_flight = cfg.endpoint.as_ref().map(|e| e.max_in_flight).unwrap_or(4);
        match summarize_bins(
            &raw_bins,
            SummarizeMode::Llm,
            client,
            &templates,
            in_flight,
            &mut warnings,
        ) {
            Ok(b) => b,
            Err(e) => {
                warn(
                    &mut warnings,
                    format!("summarisation failed ({e}); using raw transcript bins"),
                );
                raw_bins
            }
        }
    } else {
        raw_bins
    };
    let predictor = CoarsePredictor::new(&bins, cfg, templates)?;
    let estimates = record
        .commentaries
        .iter()
        .map(|c| predictor.predict(c, cfg.mode, client, &mut warnings))
        .collect();
    Ok(Some(CoarseOutcome {
        estimates,
        warnings,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bins(summaries: &[&str]) -> Vec<EventBin> {
        summaries
            .iter()
            .enumerate()
            .map(|(i, s)| EventBin {
                start_s: 10.0 * i as f64,
                end_s: 10.0 * (i + 1) as f64,
                summary: (*s).into(),
            })
            .collect()
    }

    struct Canned(String);
    impl LlmClient for Canned {
        fn complete(&self, _prompt: &str) -> Result<String> {
            Ok(self.0.clone())
        }
    }

    struct Failing;
    impl LlmClient for Failing {
        fn complete(&self, _prompt: &str) -> Result<String> {
            Err(Error::Endpoint("down".into()))
        }
    }

    #[test]
    fn passthrough_copies_text() {
        let b = bins(&["corner kick by Smith", ""]);
        let out = summarize_bins(
            &b,
            SummarizeMode::Passthrough,
            None,
            &PromptTemplates::default(),
            1,
            &mut vec![],
        )
        .unwrap();
        assert_eq!(out, b);
    }

    #[test]
    fn full_clip_prompt_lists_six_ranges() {
        let b = bins(&["a", "b", "c", "d", "e", "f"]);
        let p = summarize_prompt(&PromptTemplates::default(), &b);
        assert!(
            p.contains("for 0-10s, 10-20s, 20-30s, 30-40s, 40-50s, 50-60s"),
            "{p}"
        );
        assert!(p.contains("summarize 6 sentence commentaries"));
        assert!(p.contains("20-30s: c"));
    }

    #[test]
    fn canned_replies_become_summaries() {
        let b = bins(&["x", "y"]);
        let client = Canned("0-10s: first event\n10-20s: second event".into());
        let out = summarize_bins(
            &b,
            SummarizeMode::Llm,
            Some(&client),
            &PromptTemplates::default(),
            2,
            &mut vec![],
        )
        .unwrap();
        assert_eq!(out[0].summary, "first event");
        assert_eq!(out[1].summary, "second event");
    }

    #[test]
    fn short_reply_degrades_per_bin() {
        let b = bins(&["raw one", "raw two", "raw three"]);
        let client = Canned("1. only one".into());
        let mut warnings = vec![];
        let out = summarize_bins(
            &b,
            SummarizeMode::Llm,
            Some(&client),
            &PromptTemplates::default(),
            1,
            &mut warnings,
        )
        .unwrap();
        assert_eq!(out[0].summary, "only one");
        assert_eq!(out[1].summary, "raw two");
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn lexical_finds_matching_bin() {
        let b = bins(&[
            "short pass midfield",
            "long ball played forward pass",
            "yellow card Jones booked",
            "throw in near halfway",
        ]);
        let c = CommentaryItem::new("yellow card for Jones", 5.0);
        let e =
            predict_timestamp(&c, &b, CoarseMode::Lexical, None, &CoarseConfig::default()).unwrap();
        assert_eq!(e.t, 25.0);
    }

    #[test]
    fn no_shared_tokens_keeps_original() {
        let b = bins(&["short pass midfield", "throw in"]);
        let c = CommentaryItem::new("penalty saved", 7.5);
        let e =
            predict_timestamp(&c, &b, CoarseMode::Lexical, None, &CoarseConfig::default()).unwrap();
        assert_eq!(e, CoarseEstimate::original(7.5));
    }

    #[test]
    fn empty_text_keeps_original_with_warning() {
        let b = bins(&["goal"]);
        let cfg = CoarseConfig::default();
        let p = CoarsePredictor::new(&b, &cfg, PromptTemplates::default()).unwrap();
        let mut w = vec![];
        let e = p.predict_lexical(&CommentaryItem::new("the of", 3.0), &mut w);
        assert_eq!(e.t, 3.0);
        assert_eq!(w.len(), 1);
    }

    #[test]
    fn llm_reply_parsed_and_bounded() {
        let b = bins(&["a", "goal scored", "c"]);
        let cfg = CoarseConfig::default();
        let c = CommentaryItem::new("goal", 2.0);
        let ok = predict_timestamp(
            &c,
            &b,
            CoarseMode::Llm,
            Some(&Canned("It happened at 14s".into())),
            &cfg,
        )
        .unwrap();
        assert_eq!(ok.t, 14.0);
        assert_eq!(ok.source, EstimateSource::Llm);
        let out_of_range =
            predict_timestamp(&c, &b, CoarseMode::Llm, Some(&Canned("900".into())), &cfg).unwrap();
        assert_eq!(out_of_range.t, 2.0);
        let garbage = predict_timestamp(
            &c,
            &b,
            CoarseMode::Llm,
            Some(&Canned("no idea".into())),
            &cfg,
        )
        .unwrap();
        assert_eq!(garbage.t, 2.0);
    }

    #[test]
    fn endpoint_failure_falls_back_to_lexical() {
        let b = bins(&["pass", "goal scored Smith", "c"]);
        let c = CommentaryItem::new("goal Smith", 2.0);
        let e = predict_timestamp(
            &c,
            &b,
            CoarseMode::Llm,
            Some(&Failing),
            &CoarseConfig::default(),
        )
        .unwrap();
        assert_eq!(e.t, 15.0);
        assert!(matches!(e.source, EstimateSource::Lexical { bin: 1, .. }));
    }

    #[test]
    fn timestamp_parsing() {
        assert_eq!(parse_timestamp("605"), Some(605.0));
        assert_eq!(parse_timestamp("answer: 10:05"), Some(605.0));
        assert_eq!(parse_timestamp("1 - 10:05"), Some(605.0));
        assert_eq!(parse_timestamp("around 12.5 s"), Some(12.5));
        assert_eq!(parse_timestamp("none"), None);
    }

    #[test]
    fn prediction_is_original_or_inside_a_bin() {
        let b = bins(&["pass", "goal", "corner kick", "card", "throw"]);
        let cfg = CoarseConfig::default();
        for (text, t) in [
            ("goal", 3.0),
            ("corner", 44.0),
            ("offside", 12.0),
            ("card throw", 0.0),
        ] {
            let e = predict_timestamp(
                &CommentaryItem::new(text, t),
                &b,
                CoarseMode::Lexical,
                None,
                &cfg,
            )
            .unwrap();
            assert!(e.t == t || b.iter().any(|x| x.contains(e.t)));
        }
    }

    #[test]
    fn candidate_span_limits_bins() {
        let b: Vec<EventBin> = bins(&vec!["x"; 100]);
        let cfg = CoarseConfig::default();
        let p = CoarsePredictor::new(&b, &cfg, PromptTemplates::default()).unwrap();
        let c = p.candidates(500.0);
        assert_eq!(*c.first().unwrap(), 41);
        assert_eq!(*c.last().unwrap(), 59);
    }
}
