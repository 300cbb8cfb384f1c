//! Chunk scoring and optimal segmentation.
//!
//! A segmentation's score is the sum over its chunks of
//! `cscore(c_k | c_{k-1}) + dscore(c_k)`, where both scores pass the model
//! probability through the transform `S`: `S(0) = 0`,
//! `S(p) = 1/(1 + |ln p|)` otherwise. `chunk_sentence` maximizes this
//! objective exactly over all segmentations whose chunks fit the length cap;
//! `brute_force_chunk` is the exhaustive oracle used to verify it.
//!
//! Tie-break, applied identically in both: among equal-scoring segmentations,
//! walking chunks from the end, prefer the longer final chunk — except at a
//! position where every candidate chunk scores zero, where the one-token
//! chunk wins so that unseen material is not glued into arbitrary long
//! chunks.

use std::collections::HashMap;

use crate::corpus::TaggedSentence;
use crate::error::{Error, Result};
use crate::grammar::{ChunkLabel, Context, GrammarModel};

/// Eq-style score transform: bounded, positive-oriented, additive-friendly.
/// Natural log; the jump at p = 0 is intended (unseen events score exactly 0).
pub fn s_function(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("probability {p} outside [0, 1]")));
    }
    Ok(s_of(p))
}

#[inline]
fn s_of(p: f64) -> f64 {
    if p == 0.0 {
        0.0
    } else {
        1.0 / (1.0 + p.ln().abs())
    }
}

// ---------------------------------------------------------------------------
// Scorer

/// Scores chunks against a fitted model. With `epsilon == 0` (the default)
/// probabilities are pure maximum likelihood and unseen events score 0;
/// a positive epsilon switches on additive smoothing for experimentation.
pub struct Scorer<'m> {
    model: &'m GrammarModel,
    epsilon: f64,
    tag_ids: HashMap<String, u16>,
    label_ids: HashMap<Vec<u16>, u32>,
    dscore_by_id: Vec<f64>,
    cscore_seen: HashMap<(u32, u32), f64>,
    context_total_by_id: Vec<u64>,
    begin_total: u64,
    vocab: u64,
}

/// Internal id for the sentence-begin context in the interned bigram table.
const BEGIN_ID: u32 = u32::MAX;

impl<'m> Scorer<'m> {
    pub fn new(model: &'m GrammarModel) -> Scorer<'m> {
        Self::build(model, 0.0)
    }

    pub fn with_epsilon(model: &'m GrammarModel, epsilon: f64) -> Result<Scorer<'m>> {
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(Error::Domain(format!("epsilon {epsilon} must be finite and >= 0")));
        }
        Ok(Self::build(model, epsilon))
    }

    fn build(model: &'m GrammarModel, epsilon: f64) -> Scorer<'m> {
        let mut tag_ids: HashMap<String, u16> = HashMap::new();
        let mut label_ids: HashMap<Vec<u16>, u32> = HashMap::new();
        let mut label_texts: Vec<ChunkLabel> = Vec::new();

        let intern_label = |label: &ChunkLabel,
                                tag_ids: &mut HashMap<String, u16>,
                                label_ids: &mut HashMap<Vec<u16>, u32>,
                                label_texts: &mut Vec<ChunkLabel>|
         -> u32 {
            let ids: Vec<u16> = label
                .as_str()
                .split(' ')
                .map(|tag| {
                    let next = tag_ids.len() as u16;
                    *tag_ids.entry(tag.to_string()).or_insert(next)
                })
                .collect();
            *label_ids.entry(ids).or_insert_with(|| {
                label_texts.push(label.clone());
                (label_texts.len() - 1) as u32
            })
        };

        for (label, _) in model.unigram_rules() {
            intern_label(label, &mut tag_ids, &mut label_ids, &mut label_texts);
        }
        for (ctx, label, _) in model.bigram_rules() {
            if let Context::Chunk(c) = ctx {
                intern_label(c, &mut tag_ids, &mut label_ids, &mut label_texts);
            }
            intern_label(label, &mut tag_ids, &mut label_ids, &mut label_texts);
        }

        let vocab = model.rule_count() as u64;
        let total = model.unigram_total();
        let mut dscore_by_id = Vec::with_capacity(label_texts.len());
        let mut context_total_by_id = vec![0u64; label_texts.len()];
        for label in &label_texts {
            let count = model.unigram_count(label);
            dscore_by_id.push(s_of(Self::prob(count, total, epsilon, vocab)));
            let idx = dscore_by_id.len() - 1;
            context_total_by_id[idx] = model.context_total(&Context::Chunk(label.clone()));
        }

        let mut cscore_seen = HashMap::new();
        for (ctx, label, count) in model.bigram_rules() {
            let ctx_id = match ctx {
                Context::Begin => BEGIN_ID,
                Context::Chunk(c) => {
                    let ids: Vec<u16> =
                        c.as_str().split(' ').map(|t| tag_ids[t]).collect();
                    label_ids[&ids]
                }
            };
            let label_id = {
                let ids: Vec<u16> =
                    label.as_str().split(' ').map(|t| tag_ids[t]).collect();
                label_ids[&ids]
            };
            let row = model.context_total(ctx);
            cscore_seen.insert(
                (ctx_id, label_id),
                s_of(Self::prob(count, row, epsilon, vocab)),
            );
        }

        Scorer {
            model,
            epsilon,
            tag_ids,
            label_ids,
            dscore_by_id,
            cscore_seen,
            context_total_by_id,
            begin_total: model.context_total(&Context::Begin),
            vocab,
        }
    }

    #[inline]
    fn prob(count: u64, total: u64, epsilon: f64, vocab: u64) -> f64 {
        if epsilon == 0.0 {
            if total == 0 {
                0.0
            } else {
                count as f64 / total as f64
            }
        } else {
            (count as f64 + epsilon) / (total as f64 + epsilon * (vocab as f64 + 1.0))
        }
    }

    pub fn model(&self) -> &GrammarModel {
        self.model
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    fn tag_id(&self, tag: &str) -> Option<u16> {
        self.tag_ids.get(tag).copied()
    }

    fn label_id(&self, ids: &[u16]) -> Option<u32> {
        self.label_ids.get(ids).copied()
    }

    fn dscore_id(&self, id: Option<u32>) -> f64 {
        match id {
            Some(id) => self.dscore_by_id[id as usize],
            None => s_of(Self::prob(0, self.model.unigram_total(), self.epsilon, self.vocab)),
        }
    }

    fn cscore_id(&self, ctx: Option<u32>, label: Option<u32>) -> f64 {
        let (Some(ctx_id), Some(label_id)) = (ctx, label) else {
            // a pair involving an unseen side has no observations
            return match (self.epsilon, ctx) {
                (e, _) if e == 0.0 => 0.0,
                (e, Some(c)) => {
                    let row = if c == BEGIN_ID {
                        self.begin_total
                    } else {
                        self.context_total_by_id[c as usize]
                    };
                    s_of(Self::prob(0, row, e, self.vocab))
                }
                (e, None) => s_of(Self::prob(0, 0, e, self.vocab)),
            };
        };
        if let Some(&s) = self.cscore_seen.get(&(ctx_id, label_id)) {
            return s;
        }
        if self.epsilon == 0.0 {
            return 0.0;
        }
        let row = if ctx_id == BEGIN_ID {
            self.begin_total
        } else {
            self.context_total_by_id[ctx_id as usize]
        };
        s_of(Self::prob(0, row, self.epsilon, self.vocab))
    }

    /// `S(P(c))` through the string path; the interned path used by the
    /// dynamic program computes the same expression.
    pub fn dscore(&self, label: &ChunkLabel) -> f64 {
        s_of(Self::prob(
            self.model.unigram_count(label),
            self.model.unigram_total(),
            self.epsilon,
            self.vocab,
        ))
    }

    /// `S(P(c | prev))` through the string path.
    pub fn cscore(&self, label: &ChunkLabel, prev: &Context) -> f64 {
        s_of(Self::prob(
            self.model.bigram_count(prev, label),
            self.model.context_total(prev),
            self.epsilon,
            self.vocab,
        ))
    }
}

// ---------------------------------------------------------------------------
// Chunks

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chunk {
    pub start: usize,
    pub end: usize,
    pub label: ChunkLabel,
    pub words: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChunkSequence {
    pub chunks: Vec<Chunk>,
    pub total_score: f64,
}

impl ChunkSequence {
    /// Chunk boundaries `0 = b_0 < b_1 < ... < b_m = n`.
    pub fn boundaries(&self) -> Vec<usize> {
        let mut b = vec![0];
        b.extend(self.chunks.iter().map(|c| c.end));
        b
    }
}

fn chunks_from_boundaries(sentence: &TaggedSentence, bounds: &[usize]) -> Vec<Chunk> {
    bounds
        .windows(2)
        .map(|w| {
            let (s, e) = (w[0], w[1]);
            let tags: Vec<&str> =
                sentence.tokens[s..e].iter().map(|t| t.lob_tag.as_str()).collect();
            Chunk {
                start: s,
                end: e,
                label: ChunkLabel::from_tags(&tags),
                words: sentence.tokens[s..e].iter().map(|t| t.surface.clone()).collect(),
            }
        })
        .collect()
}

/// Degenerate chunking with every token in its own chunk; used when no model
/// is available (NP extraction does not require a trained chunker).
pub fn single_token_chunks(sentence: &TaggedSentence) -> ChunkSequence {
    let bounds: Vec<usize> = (0..=sentence.tokens.len()).collect();
    ChunkSequence { chunks: chunks_from_boundaries(sentence, &bounds), total_score: 0.0 }
}

/// Renders one sentence's chunking as `[ w_T w_T ] [ w_T ] ...`.
pub fn render_chunked_sentence(seq: &ChunkSequence) -> String {
    let mut parts = Vec::new();
    for chunk in &seq.chunks {
        let mut inner = Vec::new();
        for (word, tag) in chunk.words.iter().zip(chunk.label.as_str().split(' ')) {
            inner.push(format!("{word}_{tag}"));
        }
        parts.push(format!("[ {} ]", inner.join(" ")));
    }
    parts.join(" ")
}

/// Parses bracketed chunk output back into sentences and chunkings (the
/// inverse of `render_chunked_sentence`), one sentence per line.
pub fn parse_chunked_text(text: &str) -> Result<Vec<(TaggedSentence, ChunkSequence)>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut tokens: Vec<crate::corpus::Token> = Vec::new();
        let mut bounds = vec![0usize];
        let mut rest = line.trim();
        while !rest.is_empty() {
            let Some(stripped) = rest.strip_prefix('[') else {
                return Err(Error::parse(line_no, "expected '[' at chunk start"));
            };
            let Some(close) = stripped.find(']') else {
                return Err(Error::parse(line_no, "unterminated chunk bracket"));
            };
            let inner = &stripped[..close];
            for item in inner.split_whitespace() {
                let Some((word, tag)) = item.rsplit_once('_') else {
                    return Err(Error::parse(line_no, format!("token {item:?} has no '_'")));
                };
                tokens.push(crate::corpus::Token::new(word, tag));
            }
            if *bounds.last().unwrap() == tokens.len() {
                return Err(Error::parse(line_no, "empty chunk"));
            }
            bounds.push(tokens.len());
            rest = stripped[close + 1..].trim_start();
        }
        if tokens.is_empty() {
            return Err(Error::parse(line_no, "line has no chunks"));
        }
        let sentence = TaggedSentence { tokens, source_id: None };
        let chunks = chunks_from_boundaries(&sentence, &bounds);
        out.push((sentence, ChunkSequence { chunks, total_score: 0.0 }));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Shared candidate view (scores and the zero-tie predicate)

struct SentenceView {
    n: usize,
    /// `label_id[j][l-1]` for the chunk `[j, j+l)`.
    label_id: Vec<Vec<Option<u32>>>,
    /// `dscore[j][l-1]`, same indexing.
    dscore: Vec<Vec<f64>>,
    /// Positions where every candidate chunk ending there scores zero.
    zero_tie: Vec<bool>,
    candidates: usize,
}

impl SentenceView {
    fn build(sentence: &TaggedSentence, scorer: &Scorer, cap: usize) -> SentenceView {
        let n = sentence.tokens.len();
        let ids: Vec<Option<u16>> =
            sentence.tokens.iter().map(|t| scorer.tag_id(&t.lob_tag)).collect();

        let mut label_id = vec![Vec::new(); n];
        let mut dscore = vec![Vec::new(); n];
        let mut candidates = 0usize;
        for j in 0..n {
            let max_l = cap.min(n - j);
            let mut seq: Vec<u16> = Vec::with_capacity(max_l);
            let mut known = true;
            for l in 1..=max_l {
                let tok = ids[j + l - 1];
                match (known, tok) {
                    (true, Some(t)) => seq.push(t),
                    _ => known = false,
                }
                let id = if known { scorer.label_id(&seq) } else { None };
                label_id[j].push(id);
                dscore[j].push(scorer.dscore_id(id));
                candidates += 1;
            }
        }

        // zero_tie[i]: every chunk ending at position i (1-based end) has
        // dscore 0 and cscore 0 against every context realizable at its start.
        let mut zero_tie = vec![false; n + 1];
        for i in 1..=n {
            let lo = i.saturating_sub(cap);
            let mut all_zero = true;
            'cands: for j in lo..i {
                let l = i - j;
                if dscore[j][l - 1] != 0.0 {
                    all_zero = false;
                    break;
                }
                let cur = label_id[j][l - 1];
                if j == 0 {
                    if scorer.cscore_id(Some(BEGIN_ID), cur) != 0.0 {
                        all_zero = false;
                        break 'cands;
                    }
                } else {
                    for k in j.saturating_sub(cap)..j {
                        let prev = label_id[k][j - k - 1];
                        if scorer.cscore_id(prev, cur) != 0.0 {
                            all_zero = false;
                            break 'cands;
                        }
                    }
                }
            }
            zero_tie[i] = all_zero;
        }

        SentenceView { n, label_id, dscore, zero_tie, candidates }
    }

    #[inline]
    fn id(&self, j: usize, i: usize) -> Option<u32> {
        self.label_id[j][i - j - 1]
    }

    #[inline]
    fn d(&self, j: usize, i: usize) -> f64 {
        self.dscore[j][i - j - 1]
    }

    /// At a score tie between chunk starts `a` and `b` for chunks ending at
    /// `pos`, is `a` preferred?
    #[inline]
    fn tie_prefers(&self, pos: usize, a: usize, b: usize) -> bool {
        if self.zero_tie[pos] {
            a > b // shorter chunk: unseen material stays one token per chunk
        } else {
            a < b // longer chunk
        }
    }
}

fn effective_cap(sentence: &TaggedSentence, scorer: &Scorer, cap: Option<usize>) -> Result<usize> {
    if sentence.tokens.is_empty() {
        return Err(Error::Domain("cannot chunk an empty sentence".into()));
    }
    let cap = cap.unwrap_or_else(|| scorer.model().max_chunk_len());
    if cap == 0 {
        return Err(Error::Domain("chunk length cap must be at least 1".into()));
    }
    Ok(cap)
}

// ---------------------------------------------------------------------------
// Dynamic program

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DpStats {
    /// Candidate chunks evaluated; at most `n * cap`.
    pub candidates: usize,
    /// Predecessor combinations examined.
    pub transitions: usize,
}

/// Optimal chunk sequence under the additive score objective.
pub fn chunk_sentence(
    sentence: &TaggedSentence,
    scorer: &Scorer,
    cap: Option<usize>,
) -> Result<ChunkSequence> {
    chunk_sentence_with_stats(sentence, scorer, cap).map(|(seq, _)| seq)
}

pub fn chunk_sentence_with_stats(
    sentence: &TaggedSentence,
    scorer: &Scorer,
    cap: Option<usize>,
) -> Result<(ChunkSequence, DpStats)> {
    let cap = effective_cap(sentence, scorer, cap)?;
    let view = SentenceView::build(sentence, scorer, cap);
    let n = view.n;
    let mut transitions = 0usize;

    // State (j, i): a segmentation of [0, i) whose last chunk is [j, i).
    // Indexed as state[i][i - j - 1].
    let mut score: Vec<Vec<f64>> = vec![Vec::new(); n + 1];
    let mut pred: Vec<Vec<Option<usize>>> = vec![Vec::new(); n + 1];

    for i in 1..=n {
        let lo = i.saturating_sub(cap);
        for j in (lo..i).rev() {
            // store states for end i ordered by j descending: index i - j - 1
            let cur = view.id(j, i);
            let d = view.d(j, i);
            if j == 0 {
                let w = scorer.cscore_id(Some(BEGIN_ID), cur) + d;
                transitions += 1;
                score[i].push(0.0 + w);
                pred[i].push(None);
                continue;
            }
            let mut best: Option<(f64, usize)> = None;
            for k in j.saturating_sub(cap)..j {
                let prev = view.id(k, j);
                let w = scorer.cscore_id(prev, cur) + d;
                let total = score[j][j - k - 1] + w;
                transitions += 1;
                best = match best {
                    None => Some((total, k)),
                    Some((bs, bk)) => {
                        if total > bs || (total == bs && view.tie_prefers(j, k, bk)) {
                            Some((total, k))
                        } else {
                            Some((bs, bk))
                        }
                    }
                };
            }
            let (s, k) = best.expect("at least one predecessor");
            score[i].push(s);
            pred[i].push(Some(k));
        }
    }

    // Best final state.
    let mut best: Option<(f64, usize)> = None;
    for j in n.saturating_sub(cap)..n {
        let total = score[n][n - j - 1];
        best = match best {
            None => Some((total, j)),
            Some((bs, bj)) => {
                if total > bs || (total == bs && view.tie_prefers(n, j, bj)) {
                    Some((total, j))
                } else {
                    Some((bs, bj))
                }
            }
        };
    }
    let (total_score, mut j) = best.expect("n >= 1");

    let mut bounds = vec![n];
    let mut i = n;
    loop {
        bounds.push(j);
        if j == 0 {
            break;
        }
        let k = pred[i][i - j - 1].expect("non-initial state has a predecessor");
        i = j;
        j = k;
    }
    bounds.reverse();

    let chunks = chunks_from_boundaries(sentence, &bounds);
    let stats = DpStats { candidates: view.candidates, transitions };
    Ok((ChunkSequence { chunks, total_score }, stats))
}

// ---------------------------------------------------------------------------
// Brute-force oracle

const BRUTE_FORCE_MAX: usize = 16;

/// Scores every segmentation within the cap and returns the maximum under
/// the same tie-break as `chunk_sentence`. Scoring goes through the
/// string-level path rather than the dynamic program's interned tables.
pub fn brute_force_chunk(
    sentence: &TaggedSentence,
    scorer: &Scorer,
    cap: Option<usize>,
) -> Result<ChunkSequence> {
    let cap = effective_cap(sentence, scorer, cap)?;
    let n = sentence.tokens.len();
    if n > BRUTE_FORCE_MAX {
        return Err(Error::Domain(format!(
            "brute force refuses sentences longer than {BRUTE_FORCE_MAX} tokens (got {n})"
        )));
    }

    let labels: Vec<Vec<ChunkLabel>> = (0..n)
        .map(|j| {
            (1..=cap.min(n - j))
                .map(|l| {
                    let tags: Vec<&str> = sentence.tokens[j..j + l]
                        .iter()
                        .map(|t| t.lob_tag.as_str())
                        .collect();
                    ChunkLabel::from_tags(&tags)
                })
                .collect()
        })
        .collect();

    // Independent zero-tie computation through the string path.
    let mut zero_tie = vec![false; n + 1];
    for i in 1..=n {
        let mut all_zero = true;
        'cands: for j in i.saturating_sub(cap)..i {
            let cur = &labels[j][i - j - 1];
            if scorer.dscore(cur) != 0.0 {
                all_zero = false;
                break;
            }
            if j == 0 {
                if scorer.cscore(cur, &Context::Begin) != 0.0 {
                    all_zero = false;
                    break 'cands;
                }
            } else {
                for k in j.saturating_sub(cap)..j {
                    let prev = Context::Chunk(labels[k][j - k - 1].clone());
                    if scorer.cscore(cur, &prev) != 0.0 {
                        all_zero = false;
                        break 'cands;
                    }
                }
            }
        }
        zero_tie[i] = all_zero;
    }

    let score_of = |bounds: &[usize]| -> f64 {
        let mut total = 0.0;
        let mut prev = Context::Begin;
        for w in bounds.windows(2) {
            let label = &labels[w[0]][w[1] - w[0] - 1];
            total += scorer.cscore(label, &prev) + scorer.dscore(label);
            prev = Context::Chunk(label.clone());
        }
        total
    };

    // Prefer `a` over `b` at equal scores: walk boundaries from the end.
    let prefer_at_tie = |a: &[usize], b: &[usize]| -> bool {
        let mut x = a.len() - 1;
        let mut y = b.len() - 1;
        loop {
            debug_assert_eq!(a[x], b[y]);
            let pos = a[x];
            if pos == 0 {
                return false; // identical segmentations
            }
            let (sa, sb) = (a[x - 1], b[y - 1]);
            if sa != sb {
                return if zero_tie[pos] { sa > sb } else { sa < sb };
            }
            x -= 1;
            y -= 1;
        }
    };

    let mut best: Option<(f64, Vec<usize>)> = None;
    let masks = 1u32 << (n - 1);
    'outer: for mask in 0..masks {
        let mut bounds = Vec::with_capacity(n + 1);
        bounds.push(0);
        let mut last = 0usize;
        for p in 1..n {
            if mask & (1 << (p - 1)) != 0 {
                if p - last > cap {
                    continue 'outer;
                }
                bounds.push(p);
                last = p;
            }
        }
        if n - last > cap {
            continue;
        }
        bounds.push(n);

        let total = score_of(&bounds);
        best = match best {
            None => Some((total, bounds)),
            Some((bs, bb)) => {
                if total > bs || (total == bs && prefer_at_tie(&bounds, &bb)) {
                    Some((total, bounds))
                } else {
                    Some((bs, bb))
                }
            }
        };
    }

    let (total_score, bounds) = best.ok_or_else(|| {
        Error::Domain(format!("no segmentation of {n} tokens fits chunk cap {cap}"))
    })?;
    let chunks = chunks_from_boundaries(sentence, &bounds);
    Ok(ChunkSequence { chunks, total_score })
}

// ---------------------------------------------------------------------------
