//! Deterministic TF-IDF matcher used when no LLM endpoint is configured.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use regex::Regex;

/// Fixed English stop-word list (50 words).
pub const STOP_WORDS: [&str; 50] = [
    "a", "an", "the", "and", "or", "but", "if", "of", "to", "in", "on", "at", "by", "for", "with",
    "from", "as", "is", "are", "was", "were", "be", "been", "it", "its", "this", "that", "these",
    "those", "he", "she", "they", "his", "her", "their", "him", "them", "we", "you", "i", "there",
    "here", "has", "have", "had", "not", "no", "so", "up", "out",
];

fn token_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\[[A-Za-z_]+\]|[A-Za-z0-9]+").expect("valid regex"))
}

/// Lowercased alphanumeric tokens with stop words removed. Bracketed masks
/// such as `[PLAYER]` survive as single tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    token_regex()
        .find_iter(text)
        .map(|m| m.as_str().to_lowercase())
        .filter(|t| !STOP_WORDS.contains(&t.as_str()))
        .collect()
}

type SparseVec = BTreeMap<String, f64>;

/// Smoothed TF-IDF over a fixed document collection.
#[derive(Clone, Debug)]
pub struct TfIdfIndex {
    num_docs: usize,
    doc_freq: BTreeMap<String, usize>,
    doc_vectors: Vec<SparseVec>,
}

fn term_counts(tokens: &[String]) -> BTreeMap<String, f64> {
    let mut tf = BTreeMap::new();
    for t in tokens {
        *tf.entry(t.clone()).or_insert(0.0) += 1.0;
    }
    tf
}

fn norm(v: &SparseVec) -> f64 {
    v.values().map(|x| x * x).sum::<f64>().sqrt()
}

impl TfIdfIndex {
    pub fn new<S: AsRef<str>>(docs: &[S]) -> Self {
        let tokenized: Vec<Vec<String>> = docs.iter().map(|d| tokenize(d.as_ref())).collect();
        let mut doc_freq = BTreeMap::new();
        for tokens in &tokenized {
            let mut seen: Vec<&String> = tokens.iter().collect();
            seen.sort();
            seen.dedup();
            for t in seen {
                *doc_freq.entry(t.clone()).or_insert(0) += 1;
            }
        }
        let mut index = Self {
            num_docs: docs.len(),
            doc_freq,
            doc_vectors: Vec::new(),
        };
        index.doc_vectors = tokenized.iter().map(|t| index.weigh(t)).collect();
        index
    }

    /// `ln((1 + N) / (1 + df)) + 1`
    pub fn idf(&self, term: &str) -> f64 {
        let df = self.doc_freq.get(term).copied().unwrap_or(0);
        ((1.0 + self.num_docs as f64) / (1.0 + df as f64)).ln() + 1.0
    }

    fn weigh(&self, tokens: &[String]) -> SparseVec {
        term_counts(tokens)
            .into_iter()
            .map(|(t, c)| {
                let w = c * self.idf(&t);
                (t, w)
            })
            .collect()
    }

    /// Cosine similarity between `query` and document `doc`; 0 when either is empty.
    pub fn similarity(&self, query: &str, doc: usize) -> f64 {
        let q = self.weigh(&tokenize(query));
        self.similarity_vec(&q, doc)
    }

    fn similarity_vec(&self, q: &SparseVec, doc: usize) -> f64 {
        let d = &self.doc_vectors[doc];
        let (nq, nd) = (norm(q), norm(d));
        if nq == 0.0 || nd == 0.0 {
            return 0.0;
        }
        let dot: f64 = q.iter().filter_map(|(t, w)| d.get(t).map(|x| w * x)).sum();
        dot / (nq * nd)
    }

    /// Highest-scoring document among `candidates`; ties keep the earliest
    /// candidate. `None` when there are no candidates.
    pub fn best_match(&self, query: &str, candidates: &[usize]) -> Option<(usize, f64)> {
        let q = self.weigh(&tokenize(query));
        let mut best: Option<(usize, f64)> = None;
        for &c in candidates {
            let s = self.similarity_vec(&q, c);
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((c, s));
            }
        }
        best
    }
}
