//! Chunk-grammar extraction and the probability model behind the chunker.
//!
//! Training walks each sentence's constituent tree twice:
//!
//! * every non-terminal whose leaf span is at most the chunk length cap
//!   contributes its tag sequence to the unigram (chunk grammar) table, so
//!   any constituent-shaped chunk is representable;
//! * a unique cover of the sentence — the lowest non-terminals within the
//!   cap, with single-leaf chunks where no such node exists — supplies the
//!   adjacent pairs for the bigram (context chunk grammar) table, beginning
//!   with the sentence-start mark.

use std::collections::BTreeMap;
use std::fmt;

use sha2::{Digest, Sha256};

use crate::corpus::{validate_lob_tag, Token};
use crate::error::{Error, Result};
use crate::tree::{ParseChild, ParseNode};

/// Default cap on the number of tags in a chunk-grammar rule.
pub const DEFAULT_CHUNK_LEN_CAP: usize = 6;

/// A chunk-grammar rule: a sequence of LOB tags in canonical space-joined
/// form. Comparison is exact string equality.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ChunkLabel {
    text: String,
    tag_count: usize,
}

impl ChunkLabel {
    pub fn from_tags<S: AsRef<str>>(tags: &[S]) -> ChunkLabel {
        assert!(!tags.is_empty(), "a chunk label holds at least one tag");
        let text = tags.iter().map(|t| t.as_ref()).collect::<Vec<_>>().join(" ");
        ChunkLabel { text, tag_count: tags.len() }
    }

    pub fn parse(text: &str) -> Result<ChunkLabel> {
        let tags: Vec<&str> = text.split_whitespace().collect();
        if tags.is_empty() {
            return Err(Error::Validation("empty chunk label".into()));
        }
        for tag in &tags {
            validate_lob_tag(tag)?;
        }
        Ok(ChunkLabel::from_tags(&tags))
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn tag_count(&self) -> usize {
        self.tag_count
    }
}

impl fmt::Display for ChunkLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

/// Left context of a bigram rule: either the sentence-start mark or a chunk.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Context {
    Begin,
    Chunk(ChunkLabel),
}

impl Context {
    const BEGIN_TEXT: &'static str = "<BEGIN>";

    pub fn as_str(&self) -> &str {
        match self {
            Context::Begin => Self::BEGIN_TEXT,
            Context::Chunk(c) => c.as_str(),
        }
    }

    fn parse(text: &str) -> Result<Context> {
        if text == Self::BEGIN_TEXT {
            Ok(Context::Begin)
        } else {
            Ok(Context::Chunk(ChunkLabel::parse(text)?))
        }
    }
}

// ---------------------------------------------------------------------------
// Extraction

/// Cover instances and adjacency pairs extracted from one sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingInstances {
    pub cover: Vec<ChunkLabel>,
    pub pairs: Vec<(Context, ChunkLabel)>,
}

fn label_of_span(tokens: &[Token], start: usize, end: usize) -> ChunkLabel {
    let tags: Vec<&str> = tokens[start..end].iter().map(|t| t.lob_tag.as_str()).collect();
    ChunkLabel::from_tags(&tags)
}

fn check_alignment(tree: &ParseNode, tokens: &[Token]) -> Result<()> {
    if tree.leaf_count() != tokens.len() {
        return Err(Error::structure(
            "training sentence",
            format!("tree has {} leaves but sentence has {} tokens", tree.leaf_count(), tokens.len()),
        ));
    }
    Ok(())
}

/// Spans of the unique sentence cover: the lowest non-terminals whose span
/// fits the cap (nodes with leaf children only), single-leaf chunks elsewhere.
fn cover_spans(node: &ParseNode, cap: usize, out: &mut Vec<(usize, usize)>) {
    let has_node_child = node.children.iter().any(|c| matches!(c, ParseChild::Node(_)));
    if !node.is_root() && !has_node_child && node.leaf_count() <= cap {
        out.push((node.start, node.end));
        return;
    }
    for child in &node.children {
        match child {
            ParseChild::Leaf(i) => out.push((*i, *i + 1)),
            ParseChild::Node(n) => cover_spans(n, cap, out),
        }
    }
}

/// Extracts the cover instances and the (context, chunk) pairs of one
/// sentence, the bigram side of training.
pub fn extract_training_instances(
    tree: &ParseNode,
    tokens: &[Token],
    cap: usize,
) -> Result<TrainingInstances> {
    check_alignment(tree, tokens)?;
    let mut spans = Vec::new();
    cover_spans(tree, cap, &mut spans);

    let cover: Vec<ChunkLabel> = spans.iter().map(|&(s, e)| label_of_span(tokens, s, e)).collect();
    let mut pairs = Vec::with_capacity(cover.len());
    let mut prev = Context::Begin;
    for label in &cover {
        pairs.push((prev, label.clone()));
        prev = Context::Chunk(label.clone());
    }
    Ok(TrainingInstances { cover, pairs })
}

/// Tag sequences of every non-terminal whose span fits the cap, the unigram
/// side of training.
pub fn constituent_labels(tree: &ParseNode, tokens: &[Token], cap: usize) -> Result<Vec<ChunkLabel>> {
    check_alignment(tree, tokens)?;
    Ok(tree
        .non_terminals()
        .iter()
        .filter(|n| n.leaf_count() <= cap && n.leaf_count() > 0)
        .map(|n| label_of_span(tokens, n.start, n.end))
        .collect())
}

// ---------------------------------------------------------------------------
// Counts and the fitted model

/// Accumulated rule counts; merging is commutative addition, so corpora can
/// be counted in any order or in parallel.
#[derive(Debug, Clone, Default)]
pub struct TrainingCounts {
    pub unigram: BTreeMap<ChunkLabel, u64>,
    pub bigram: BTreeMap<(Context, ChunkLabel), u64>,
    pub sentences: u64,
}

impl TrainingCounts {
    pub fn new() -> TrainingCounts {
        TrainingCounts::default()
    }

    /// Counts one sentence: every capped non-terminal into the unigram table,
    /// single-leaf cover fallbacks as well, and the cover adjacencies into
    /// the bigram table.
    pub fn observe_sentence(&mut self, tree: &ParseNode, tokens: &[Token], cap: usize) -> Result<()> {
        let instances = extract_training_instances(tree, tokens, cap)?;
        for label in constituent_labels(tree, tokens, cap)? {
            *self.unigram.entry(label).or_insert(0) += 1;
        }
        // Single-leaf fallbacks are not non-terminals; count them here.
        let mut spans = Vec::new();
        cover_spans(tree, cap, &mut spans);
        let nt_spans: std::collections::BTreeSet<(usize, usize)> = tree
            .non_terminals()
            .iter()
            .map(|n| (n.start, n.end))
            .collect();
        for (&(s, e), label) in spans.iter().zip(&instances.cover) {
            if !nt_spans.contains(&(s, e)) {
                *self.unigram.entry(label.clone()).or_insert(0) += 1;
            }
        }
        for (ctx, label) in instances.pairs {
            *self.bigram.entry((ctx, label)).or_insert(0) += 1;
        }
        self.sentences += 1;
        Ok(())
    }

    pub fn merge(&mut self, other: TrainingCounts) {
        for (k, v) in other.unigram {
            *self.unigram.entry(k).or_insert(0) += v;
        }
        for (k, v) in other.bigram {
            *self.bigram.entry(k).or_insert(0) += v;
        }
        self.sentences += other.sentences;
    }

    pub fn fit(self) -> Result<GrammarModel> {
        GrammarModel::from_counts(self.unigram, self.bigram, Vec::new())
    }
}

/// The fitted chunk model: unigram and bigram rule counts with
/// maximum-likelihood probabilities derived on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct GrammarModel {
    unigram: BTreeMap<ChunkLabel, u64>,
    bigram: BTreeMap<(Context, ChunkLabel), u64>,
    context_totals: BTreeMap<Context, u64>,
    unigram_total: u64,
    max_chunk_len: usize,
    provenance: Vec<(String, String)>,
}

impl GrammarModel {
    pub fn from_counts(
        unigram: BTreeMap<ChunkLabel, u64>,
        bigram: BTreeMap<(Context, ChunkLabel), u64>,
        provenance: Vec<(String, String)>,
    ) -> Result<GrammarModel> {
        if unigram.is_empty() {
            return Err(Error::Domain("cannot fit a model from empty training input".into()));
        }
        for ((ctx, _), _) in bigram.iter() {
            if let Context::Chunk(label) = ctx {
                if label.tag_count() == 0 {
                    return Err(Error::Validation("empty context label".into()));
                }
            }
        }
        let unigram_total = unigram.values().sum();
        let max_chunk_len = unigram.keys().map(|c| c.tag_count()).max().unwrap_or(1);
        let mut context_totals = BTreeMap::new();
        for ((ctx, _), count) in &bigram {
            *context_totals.entry(ctx.clone()).or_insert(0) += count;
        }
        Ok(GrammarModel { unigram, bigram, context_totals, unigram_total, max_chunk_len, provenance })
    }

    /// Convenience constructor from plain instance and pair lists.
    pub fn fit_from_instances(
        instances: &[ChunkLabel],
        pairs: &[(Context, ChunkLabel)],
    ) -> Result<GrammarModel> {
        let mut unigram = BTreeMap::new();
        for label in instances {
            *unigram.entry(label.clone()).or_insert(0) += 1;
        }
        let mut bigram = BTreeMap::new();
        for (ctx, label) in pairs {
            *bigram.entry((ctx.clone(), label.clone())).or_insert(0) += 1;
        }
        GrammarModel::from_counts(unigram, bigram, Vec::new())
    }

    pub fn unigram_count(&self, label: &ChunkLabel) -> u64 {
        self.unigram.get(label).copied().unwrap_or(0)
    }

    pub fn bigram_count(&self, ctx: &Context, label: &ChunkLabel) -> u64 {
        self.bigram.get(&(ctx.clone(), label.clone())).copied().unwrap_or(0)
    }

    pub fn unigram_total(&self) -> u64 {
        self.unigram_total
    }

    pub fn context_total(&self, ctx: &Context) -> u64 {
        self.context_totals.get(ctx).copied().unwrap_or(0)
    }

    pub fn max_chunk_len(&self) -> usize {
        self.max_chunk_len
    }

    pub fn rule_count(&self) -> usize {
        self.unigram.len()
    }

    pub fn context_rule_count(&self) -> usize {
        self.bigram.len()
    }

    pub fn provenance(&self) -> &[(String, String)] {
        &self.provenance
    }

    pub fn set_provenance(&mut self, provenance: Vec<(String, String)>) {
        self.provenance = provenance;
    }

    pub fn unigram_rules(&self) -> impl Iterator<Item = (&ChunkLabel, u64)> {
        self.unigram.iter().map(|(k, v)| (k, *v))
    }

    pub fn bigram_rules(&self) -> impl Iterator<Item = (&Context, &ChunkLabel, u64)> {
        self.bigram.iter().map(|((c, l), v)| (c, l, *v))
    }

    /// Maximum-likelihood P(c).
    pub fn p_unigram(&self, label: &ChunkLabel) -> f64 {
        self.unigram_count(label) as f64 / self.unigram_total as f64
    }

    /// Maximum-likelihood P(c | context); zero when the context is unseen.
    pub fn p_bigram(&self, ctx: &Context, label: &ChunkLabel) -> f64 {
        let total = self.context_total(ctx);
        if total == 0 {
            return 0.0;
        }
        self.bigram_count(ctx, label) as f64 / total as f64
    }

    // -- model file format --------------------------------------------------

    const FORMAT_VERSION: &'static str = "npchunk-model v1";

    /// Serializes to the versioned, sorted, line-oriented text format.
    /// Identical models produce identical bytes.
    pub fn to_text(&self) -> String {
        let mut body = String::new();
        body.push_str(Self::FORMAT_VERSION);
        body.push('\n');
        body.push_str(&format!("maxlen {}\n", self.max_chunk_len));
        body.push_str(&format!("total {}\n", self.unigram_total));
        for (key, value) in &self.provenance {
            body.push_str(&format!("meta {key} {value}\n"));
        }
        for (label, count) in &self.unigram {
            body.push_str(&format!("unigram {count} {label}\n"));
        }
        for ((ctx, label), count) in &self.bigram {
            body.push_str(&format!("bigram {count} {} | {label}\n", ctx.as_str()));
        }
        let digest = Sha256::digest(body.as_bytes());
        body.push_str(&format!("checksum sha256 {digest:x}\n"));
        body
    }

    pub fn from_text(text: &str) -> Result<GrammarModel> {
        let mut lines = text.lines().enumerate();
        let Some((_, header)) = lines.next() else {
            return Err(Error::Validation("model file is empty".into()));
        };
        if header != Self::FORMAT_VERSION {
            return Err(Error::Validation(format!(
                "model file version {header:?} is not {:?}",
                Self::FORMAT_VERSION
            )));
        }

        let mut maxlen: Option<usize> = None;
        let mut total: Option<u64> = None;
        let mut provenance = Vec::new();
        let mut unigram = BTreeMap::new();
        let mut bigram = BTreeMap::new();
        let mut checksum: Option<String> = None;

        for (idx, line) in lines {
            let line_no = idx + 1;
            if checksum.is_some() {
                return Err(Error::parse(line_no, "content after checksum line"));
            }
            let bad = |msg: &str| Error::parse(line_no, msg.to_string());
            let (kind, rest) = line.split_once(' ').ok_or_else(|| bad("malformed line"))?;
            match kind {
                "maxlen" => {
                    maxlen = Some(rest.parse().map_err(|_| bad("bad maxlen"))?);
                }
                "total" => {
                    total = Some(rest.parse().map_err(|_| bad("bad total"))?);
                }
                "meta" => {
                    let (k, v) = rest.split_once(' ').unwrap_or((rest, ""));
                    provenance.push((k.to_string(), v.to_string()));
                }
                "unigram" => {
                    let (count, label) = rest.split_once(' ').ok_or_else(|| bad("bad unigram line"))?;
                    let count: u64 = count.parse().map_err(|_| bad("bad unigram count"))?;
                    let label = ChunkLabel::parse(label)
                        .map_err(|e| bad(&format!("bad unigram label: {e}")))?;
                    if unigram.insert(label, count).is_some() {
                        return Err(bad("duplicate unigram rule"));
                    }
                }
                "bigram" => {
                    let (count, rest) = rest.split_once(' ').ok_or_else(|| bad("bad bigram line"))?;
                    let count: u64 = count.parse().map_err(|_| bad("bad bigram count"))?;
                    let (ctx, label) = rest.split_once(" | ").ok_or_else(|| bad("bad bigram rule"))?;
                    let ctx = Context::parse(ctx).map_err(|e| bad(&format!("bad context: {e}")))?;
                    let label = ChunkLabel::parse(label)
                        .map_err(|e| bad(&format!("bad bigram label: {e}")))?;
                    if bigram.insert((ctx, label), count).is_some() {
                        return Err(bad("duplicate bigram rule"));
                    }
                }
                "checksum" => {
                    let (algo, hex) = rest.split_once(' ').ok_or_else(|| bad("bad checksum line"))?;
                    if algo != "sha256" {
                        return Err(bad("unsupported checksum algorithm"));
                    }
                    checksum = Some(hex.to_string());
                }
                other => return Err(bad(&format!("unknown record kind {other:?}"))),
            }
        }

        let Some(stored) = checksum else {
            return Err(Error::Validation("model file has no checksum (truncated?)".into()));
        };
        let body_len = text
            .rfind("checksum ")
            .ok_or_else(|| Error::Validation("model file has no checksum".into()))?;
        let digest = Sha256::digest(text[..body_len].as_bytes());
        if format!("{digest:x}") != stored {
            return Err(Error::Validation("model file checksum mismatch".into()));
        }

        let model = GrammarModel::from_counts(unigram, bigram, provenance)?;
        if let Some(m) = maxlen {
            if m != model.max_chunk_len {
                return Err(Error::Validation(format!(
                    "stored maxlen {m} disagrees with rules ({})",
                    model.max_chunk_len
                )));
            }
        }
        if let Some(t) = total {
            if t != model.unigram_total {
                return Err(Error::Validation(format!(
                    "stored total {t} disagrees with rules ({})",
                    model.unigram_total
                )));
            }
        }
        Ok(model)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<GrammarModel> {
        let text = std::fs::read_to_string(path)?;
        GrammarModel::from_text(&text)
    }
}
