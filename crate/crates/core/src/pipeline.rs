//! End-to-end wiring: tagged text -> chunker -> heads -> NP extraction ->
//! evaluation, over whole corpora.

use std::collections::BTreeMap;

use crate::chunker::{chunk_sentence, single_token_chunks, ChunkSequence, Scorer};
use crate::corpus::{
    build_parse_tree, records_to_sentence, SusanneRecord, TagMap, TaggedSentence,
};
use crate::error::Result;
use crate::eval::{classify_extracted_nps, CategoryReport, EvalReport, NpPredicate};
use crate::fsm::{extract_noun_phrases, FsmSpec, NounPhrase};
use crate::grammar::{GrammarModel, TrainingCounts, DEFAULT_CHUNK_LEN_CAP};
use crate::heads::{assign_heads_sequence, HeadedChunk, PriorityTable};

/// Knowledge sources for the chunk -> heads -> NP stages.
pub struct Stages<'a> {
    pub scorer: Option<&'a Scorer<'a>>,
    pub cap: Option<usize>,
    pub syntactic: &'a PriorityTable,
    pub semantic: &'a PriorityTable,
    pub fsm: &'a FsmSpec,
}

impl<'a> Stages<'a> {
    /// Chunks one sentence: through the model when present, one token per
    /// chunk otherwise.
    pub fn chunk(&self, sentence: &TaggedSentence) -> Result<ChunkSequence> {
        match self.scorer {
            Some(scorer) => chunk_sentence(sentence, scorer, self.cap),
            None => Ok(single_token_chunks(sentence)),
        }
    }

    /// Chunks, assigns heads, returns the headed chunks and the head
    /// diagnostics (catch-all fallback count).
    pub fn headed_chunks(&self, sentence: &TaggedSentence) -> Result<(Vec<HeadedChunk>, usize)> {
        let seq = self.chunk(sentence)?;
        Ok(assign_heads_sequence(&seq.chunks, self.syntactic, self.semantic))
    }

    /// Full extraction for one sentence.
    pub fn noun_phrases(&self, sentence: &TaggedSentence) -> Result<Vec<NounPhrase>> {
        let (chunks, _) = self.headed_chunks(sentence)?;
        Ok(extract_noun_phrases(&chunks, self.fsm))
    }
}

/// Trains a model over parsed sentence groups.
pub fn train_model(
    groups: &[Vec<SusanneRecord>],
    tag_map: &TagMap,
    cap: Option<usize>,
) -> Result<GrammarModel> {
    let cap = cap.unwrap_or(DEFAULT_CHUNK_LEN_CAP);
    let mut counts = TrainingCounts::new();
    for group in groups {
        let tree = build_parse_tree(group)?;
        let sentence = records_to_sentence(group, tag_map)?;
        counts.observe_sentence(&tree, &sentence.tokens, cap)?;
    }
    counts.fit()
}

/// SUSANNE category of a sentence: the letter of its first ref id
/// (`G01:0010a` -> `G`), or `-` when unknown.
fn category_of(records: &[SusanneRecord]) -> String {
    records
        .first()
        .and_then(|r| r.ref_id.chars().next())
        .map(|c| c.to_string())
        .unwrap_or_else(|| "-".to_string())
}

/// Evaluates the pipeline over gold sentence groups: chunk correctness per
/// the dominated-by-one-node criterion and NP extraction against the trees.
pub fn evaluate_groups(
    groups: &[Vec<SusanneRecord>],
    tag_map: &TagMap,
    stages: &Stages,
    predicate: &NpPredicate,
) -> Result<EvalReport> {
    let mut categories: BTreeMap<String, CategoryReport> = BTreeMap::new();
    let mut head_fallbacks = 0u64;

    for group in groups {
        let tree = build_parse_tree(group)?;
        let sentence = records_to_sentence(group, tag_map)?;
        let report = categories.entry(category_of(group)).or_default();

        let seq = stages.chunk(&sentence)?;
        report.chunks.add_sentence(&tree, &seq);

        let (chunks, fallbacks) =
            assign_heads_sequence(&seq.chunks, stages.syntactic, stages.semantic);
        head_fallbacks += fallbacks as u64;
        let nps = extract_noun_phrases(&chunks, stages.fsm);
        let (counts, table) = classify_extracted_nps(&nps, &tree, &sentence.tokens, predicate);
        report.taxonomy.merge(&counts);
        report.contingency.merge(&table);
    }

    Ok(EvalReport::from_categories(categories, head_fallbacks))
}

/// Gold-side taxonomy statistics only (no system run).
pub fn stats_groups(
    groups: &[Vec<SusanneRecord>],
    tag_map: &TagMap,
    predicate: &NpPredicate,
) -> Result<EvalReport> {
    let mut categories: BTreeMap<String, CategoryReport> = BTreeMap::new();
    for group in groups {
        let tree = build_parse_tree(group)?;
        let sentence = records_to_sentence(group, tag_map)?;
        let report = categories.entry(category_of(group)).or_default();
        let counts = crate::eval::np_taxonomy_counts(&tree, &sentence.tokens, predicate);
        report.taxonomy.merge(&counts);
    }
    Ok(EvalReport::from_categories(categories, 0))
}
