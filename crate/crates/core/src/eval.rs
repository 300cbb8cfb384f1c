//! Automatic evaluation against treebank parse fields: the chunk criterion,
//! the noun-phrase taxonomy, contingency counting and precision/recall.
//!
//! A system chunk is correct when its span is exactly dominated by one
//! non-terminal node (single tokens are always correct). Extracted noun
//! phrases are judged by exact span match against NP-labeled nodes; recall is
//! computed against the applicable noun phrases — maximal NPs that contain no
//! clause and no prepositional phrase whose preposition is not "of".

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::chunker::ChunkSequence;
use crate::corpus::Token;
use crate::error::{Error, Result};
use crate::fsm::NounPhrase;
use crate::pattern::PatternSet;
use crate::tree::ParseNode;

// ---------------------------------------------------------------------------
// Chunk criterion

/// True iff the span is a single token or equals some non-terminal's span.
pub fn check_chunk_criterion(span: (usize, usize), gold: &ParseNode) -> bool {
    let (start, end) = span;
    if end == start + 1 {
        return true;
    }
    gold.non_terminals()
        .iter()
        .any(|n| n.start == start && n.end == end)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ChunkEvalTotals {
    pub chunks_total: u64,
    pub chunks_correct: u64,
    pub sentences_total: u64,
    pub sentences_correct: u64,
}

impl ChunkEvalTotals {
    pub fn add_sentence(&mut self, gold: &ParseNode, system: &ChunkSequence) {
        let mut all_correct = true;
        for chunk in &system.chunks {
            self.chunks_total += 1;
            if check_chunk_criterion((chunk.start, chunk.end), gold) {
                self.chunks_correct += 1;
            } else {
                all_correct = false;
            }
        }
        self.sentences_total += 1;
        if all_correct {
            self.sentences_correct += 1;
        }
    }

    pub fn merge(&mut self, other: &ChunkEvalTotals) {
        self.chunks_total += other.chunks_total;
        self.chunks_correct += other.chunks_correct;
        self.sentences_total += other.sentences_total;
        self.sentences_correct += other.sentences_correct;
    }

    pub fn chunk_rate(&self) -> Option<f64> {
        ratio(self.chunks_correct, self.chunks_total)
    }

    pub fn sentence_rate(&self) -> Option<f64> {
        ratio(self.sentences_correct, self.sentences_total)
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    if den == 0 {
        None
    } else {
        Some(num as f64 / den as f64)
    }
}

/// Correct rates over aligned gold trees and system chunkings.
pub fn chunker_eval(golds: &[ParseNode], systems: &[ChunkSequence]) -> Result<ChunkEvalTotals> {
    if golds.len() != systems.len() {
        return Err(Error::structure(
            "evaluation",
            format!("{} gold sentences vs {} system chunkings", golds.len(), systems.len()),
        ));
    }
    let mut totals = ChunkEvalTotals::default();
    for (gold, system) in golds.iter().zip(systems) {
        let system_len = system.chunks.last().map(|c| c.end).unwrap_or(0);
        if gold.leaf_count() != system_len {
            return Err(Error::structure(
                "evaluation",
                format!("gold has {} tokens, system has {}", gold.leaf_count(), system_len),
            ));
        }
        totals.add_sentence(gold, system);
    }
    Ok(totals)
}

// ---------------------------------------------------------------------------
// NP taxonomy

/// Identifies NP, clause and PP nodes by label prefix (functional suffixes
/// stripped first), and preposition leaves by tag pattern.
#[derive(Debug, Clone)]
pub struct NpPredicate {
    pub np_prefixes: Vec<String>,
    pub clause_prefixes: Vec<String>,
    pub pp_prefixes: Vec<String>,
    pub prep_tags: PatternSet,
}

impl Default for NpPredicate {
    fn default() -> Self {
        NpPredicate {
            np_prefixes: vec!["Np".into()],
            clause_prefixes: vec!["S".into(), "F".into()],
            pp_prefixes: vec!["P".into()],
            prep_tags: PatternSet::parse("I*|TO").unwrap(),
        }
    }
}

impl NpPredicate {
    pub fn with_np_prefixes(prefixes: Vec<String>) -> NpPredicate {
        NpPredicate { np_prefixes: prefixes, ..NpPredicate::default() }
    }

    fn is_np(&self, node: &ParseNode) -> bool {
        let base = node.base_label();
        self.np_prefixes.iter().any(|p| base.starts_with(p.as_str()))
    }

    fn is_clause(&self, node: &ParseNode) -> bool {
        let base = node.base_label();
        self.clause_prefixes.iter().any(|p| base.starts_with(p.as_str()))
    }

    fn is_pp(&self, node: &ParseNode) -> bool {
        let base = node.base_label();
        self.pp_prefixes.iter().any(|p| base.starts_with(p.as_str()))
            && !self.is_np(node)
    }

    /// The PP's preposition word: the first leaf with a preposition tag, or
    /// the first leaf at all when none is tagged as one.
    fn prep_word<'a>(&self, node: &ParseNode, tokens: &'a [Token]) -> Option<&'a str> {
        let leaves = node.leaves();
        for &i in &leaves {
            let tag = tokens[i]
                .susanne_tag
                .as_deref()
                .unwrap_or(tokens[i].lob_tag.as_str());
            if self.prep_tags.matches(tag) || self.prep_tags.matches(&tokens[i].lob_tag) {
                return Some(&tokens[i].surface);
            }
        }
        leaves.first().map(|&i| tokens[i].surface.as_str())
    }
}

fn word_is_of(word: &str) -> bool {
    word.trim_start_matches('+').eq_ignore_ascii_case("of")
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct NpTaxonomyCounts {
    /// Ordinary noun phrases.
    pub np: u64,
    /// Maximal: not contained in another NP.
    pub mnp: u64,
    /// Minimal: containing no other NP.
    pub mnp_min: u64,
    /// Both maximal and minimal.
    pub mmnp: u64,
    /// Applicable: maximal after the clause / non-"of"-PP exclusion.
    pub anp: u64,
    /// Extracted by the system.
    pub enp: u64,
    /// Extracted and span-matching some NP node.
    pub cnp: u64,
    /// Correct, matching a maximal NP.
    pub cmnp: u64,
    /// Correct, matching a minimal NP.
    pub cmnp_min: u64,
    /// Correct, matching an NP that is both.
    pub cmmnp: u64,
}

impl NpTaxonomyCounts {
    pub fn merge(&mut self, other: &NpTaxonomyCounts) {
        self.np += other.np;
        self.mnp += other.mnp;
        self.mnp_min += other.mnp_min;
        self.mmnp += other.mmnp;
        self.anp += other.anp;
        self.enp += other.enp;
        self.cnp += other.cnp;
        self.cmnp += other.cmnp;
        self.cmnp_min += other.cmnp_min;
        self.cmmnp += other.cmmnp;
    }
}

struct GoldNp {
    span: (usize, usize),
    maximal: bool,
    minimal: bool,
    applicable: bool,
}

fn collect_gold_nps(gold: &ParseNode, tokens: &[Token], pred: &NpPredicate) -> Vec<GoldNp> {
    fn walk<'a>(
        node: &'a ParseNode,
        pred: &NpPredicate,
        np_ancestors: usize,
        out: &mut Vec<(&'a ParseNode, bool)>,
    ) {
        let is_np = !node.is_root() && pred.is_np(node);
        if is_np {
            out.push((node, np_ancestors == 0));
        }
        for child in &node.children {
            if let crate::tree::ParseChild::Node(n) = child {
                walk(n, pred, np_ancestors + usize::from(is_np), out);
            }
        }
    }

    fn contains_np(node: &ParseNode, pred: &NpPredicate) -> bool {
        node.children.iter().any(|c| match c {
            crate::tree::ParseChild::Node(n) => pred.is_np(n) || contains_np(n, pred),
            _ => false,
        })
    }

    fn contains_exclusion(node: &ParseNode, tokens: &[Token], pred: &NpPredicate) -> bool {
        node.children.iter().any(|c| match c {
            crate::tree::ParseChild::Node(n) => {
                if pred.is_clause(n) {
                    return true;
                }
                if pred.is_pp(n) {
                    if let Some(word) = pred.prep_word(n, tokens) {
                        if !word_is_of(word) {
                            return true;
                        }
                    }
                }
                contains_exclusion(n, tokens, pred)
            }
            _ => false,
        })
    }

    let mut nps = Vec::new();
    walk(gold, pred, 0, &mut nps);
    nps.into_iter()
        .map(|(node, maximal)| {
            let minimal = !contains_np(node, pred);
            let applicable = maximal && !contains_exclusion(node, tokens, pred);
            GoldNp { span: (node.start, node.end), maximal, minimal, applicable }
        })
        .collect()
}

/// Gold-side taxonomy counts for one sentence (np/mnp/mnp_min/mmnp/anp).
pub fn np_taxonomy_counts(
    gold: &ParseNode,
    tokens: &[Token],
    pred: &NpPredicate,
) -> NpTaxonomyCounts {
    let nps = collect_gold_nps(gold, tokens, pred);
    let mut counts = NpTaxonomyCounts::default();
    for np in &nps {
        counts.np += 1;
        if np.maximal {
            counts.mnp += 1;
        }
        if np.minimal {
            counts.mnp_min += 1;
        }
        if np.maximal && np.minimal {
            counts.mmnp += 1;
        }
        if np.applicable {
            counts.anp += 1;
        }
    }
    counts
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ContingencyTable {
    /// System NP and gold NP.
    pub a: u64,
    /// System NP, not a gold NP.
    pub b: u64,
    /// Applicable gold NP missed by the system.
    pub c: u64,
}

impl ContingencyTable {
    pub fn merge(&mut self, other: &ContingencyTable) {
        self.a += other.a;
        self.b += other.b;
        self.c += other.c;
    }
}

/// Classifies extracted spans against one sentence's gold tree, filling the
/// extraction-side taxonomy counts and the contingency cells.
pub fn classify_extracted_nps(
    extracted: &[NounPhrase],
    gold: &ParseNode,
    tokens: &[Token],
    pred: &NpPredicate,
) -> (NpTaxonomyCounts, ContingencyTable) {
    let nps = collect_gold_nps(gold, tokens, pred);
    let mut by_span: BTreeMap<(usize, usize), (bool, bool)> = BTreeMap::new();
    for np in &nps {
        let entry = by_span.entry(np.span).or_insert((false, false));
        entry.0 |= np.maximal;
        entry.1 |= np.minimal;
    }

    let mut counts = np_taxonomy_counts(gold, tokens, pred);
    let mut table = ContingencyTable::default();
    let mut matched: BTreeSet<(usize, usize)> = BTreeSet::new();

    for np in extracted {
        counts.enp += 1;
        let span = (np.start, np.end);
        match by_span.get(&span) {
            Some(&(maximal, minimal)) => {
                counts.cnp += 1;
                table.a += 1;
                matched.insert(span);
                if maximal {
                    counts.cmnp += 1;
                }
                if minimal {
                    counts.cmnp_min += 1;
                }
                if maximal && minimal {
                    counts.cmmnp += 1;
                }
            }
            None => table.b += 1,
        }
    }
    for np in &nps {
        if np.applicable && !matched.contains(&np.span) {
            table.c += 1;
        }
    }
    (counts, table)
}

// ---------------------------------------------------------------------------
// Metrics

/// Percentages from the contingency cells. `None` marks an undefined metric
/// (zero denominator) rather than reporting 0.
pub fn precision_recall(table: &ContingencyTable) -> (Option<f64>, Option<f64>) {
    let precision = ratio(table.a, table.a + table.b).map(|r| r * 100.0);
    let recall = ratio(table.a, table.a + table.c).map(|r| r * 100.0);
    (precision, recall)
}

/// Round half up to two decimal places (the rounding the summary tables use).
pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

// ---------------------------------------------------------------------------
// Reports

pub const REPORT_SCHEMA: &str = "npchunk-report/v1";

#[derive(Debug, Clone, Default, Serialize)]
pub struct CategoryReport {
    pub chunks: ChunkEvalTotals,
    pub chunk_correct_rate: Option<f64>,
    pub sentence_correct_rate: Option<f64>,
    pub taxonomy: NpTaxonomyCounts,
    pub contingency: ContingencyTable,
    /// a / (a + b), percent.
    pub precision_pct: Option<f64>,
    /// a / (a + c), percent.
    pub recall_pct: Option<f64>,
    /// cnp / anp as a ratio, the recall the summary tables bound.
    pub recall_vs_anp: Option<f64>,
}

impl CategoryReport {
    fn finalize(&mut self) {
        self.chunk_correct_rate = self.chunks.chunk_rate();
        self.sentence_correct_rate = self.chunks.sentence_rate();
        let (p, r) = precision_recall(&self.contingency);
        self.precision_pct = p;
        self.recall_pct = r;
        self.recall_vs_anp = ratio(self.taxonomy.cnp, self.taxonomy.anp);
    }

    fn merge(&mut self, other: &CategoryReport) {
        self.chunks.merge(&other.chunks);
        self.taxonomy.merge(&other.taxonomy);
        self.contingency.merge(&other.contingency);
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub schema: &'static str,
    pub categories: BTreeMap<String, CategoryReport>,
    pub total: CategoryReport,
    /// Mean of the per-category recall_vs_anp ratios (the "Av." row
    /// convention), alongside the micro figures in `total`.
    pub macro_average_recall: Option<f64>,
    pub macro_average_precision: Option<f64>,
    pub head_fallbacks: u64,
    pub warnings: Vec<String>,
}

impl EvalReport {
    pub fn from_categories(per_category: BTreeMap<String, CategoryReport>, head_fallbacks: u64) -> EvalReport {
        let mut categories = per_category;
        let mut total = CategoryReport::default();
        for report in categories.values_mut() {
            report.finalize();
            total.merge(report);
        }
        total.finalize();

        let recalls: Vec<f64> =
            categories.values().filter_map(|c| c.recall_vs_anp).collect();
        let macro_average_recall = if recalls.is_empty() {
            None
        } else {
            Some(recalls.iter().sum::<f64>() / recalls.len() as f64)
        };
        let precisions: Vec<f64> =
            categories.values().filter_map(|c| c.precision_pct).collect();
        let macro_average_precision = if precisions.is_empty() {
            None
        } else {
            Some(precisions.iter().sum::<f64>() / precisions.len() as f64 / 100.0)
        };

        let mut warnings = Vec::new();
        if let (Some(cr), Some(sr)) = (total.chunk_correct_rate, total.sentence_correct_rate) {
            if sr > cr {
                warnings.push("sentence correct rate exceeds chunk correct rate".into());
            }
        }
        let t = &total.taxonomy;
        if t.anp != t.cnp + total.contingency.c {
            warnings.push(format!(
                "ANP - CNP ({}) differs from missed-NP cell c ({}): some correct \
                 extractions match non-applicable NPs",
                t.anp as i64 - t.cnp as i64,
                total.contingency.c
            ));
        }
        if total.precision_pct.is_none() {
            warnings.push("precision undefined: no extracted noun phrases".into());
        }
        if total.recall_pct.is_none() {
            warnings.push("recall undefined: no applicable noun phrases".into());
        }

        EvalReport {
            schema: REPORT_SCHEMA,
            categories,
            total,
            macro_average_recall,
            macro_average_precision,
            head_fallbacks,
            warnings,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Plain-text summary mirroring the experiment-table layout.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let fmt_rate = |r: Option<f64>| match r {
            Some(r) => format!("{:.2}", round2(r)),
            None => "n/a".into(),
        };

        out.push_str("chunking (criterion: span dominated by one non-terminal)\n");
        out.push_str("cat      chunks  correct  rate   sents  correct  rate\n");
        for (name, c) in self.categories.iter() {
            out.push_str(&format!(
                "{:<6} {:>8} {:>8}  {:>5} {:>6} {:>8}  {:>5}\n",
                name,
                c.chunks.chunks_total,
                c.chunks.chunks_correct,
                fmt_rate(c.chunk_correct_rate),
                c.chunks.sentences_total,
                c.chunks.sentences_correct,
                fmt_rate(c.sentence_correct_rate),
            ));
        }
        let t = &self.total;
        out.push_str(&format!(
            "{:<6} {:>8} {:>8}  {:>5} {:>6} {:>8}  {:>5}\n\n",
            "total",
            t.chunks.chunks_total,
            t.chunks.chunks_correct,
            fmt_rate(t.chunk_correct_rate),
            t.chunks.sentences_total,
            t.chunks.sentences_correct,
            fmt_rate(t.sentence_correct_rate),
        ));

        out.push_str("noun phrases in corpus\n");
        out.push_str("cat        NP    MNP    mNP   MmNP    ANP\n");
        for (name, c) in self.categories.iter() {
            let x = &c.taxonomy;
            out.push_str(&format!(
                "{:<6} {:>6} {:>6} {:>6} {:>6} {:>6}\n",
                name, x.np, x.mnp, x.mnp_min, x.mmnp, x.anp
            ));
        }
        let x = &t.taxonomy;
        out.push_str(&format!(
            "{:<6} {:>6} {:>6} {:>6} {:>6} {:>6}\n\n",
            "total", x.np, x.mnp, x.mnp_min, x.mmnp, x.anp
        ));

        out.push_str("extraction\n");
        out.push_str("cat       ENP    CNP   CMNP   CmNP  CMmNP   prec  recall\n");
        for (name, c) in self.categories.iter() {
            let x = &c.taxonomy;
            out.push_str(&format!(
                "{:<6} {:>6} {:>6} {:>6} {:>6} {:>6}  {:>5}  {:>5}\n",
                name,
                x.enp,
                x.cnp,
                x.cmnp,
                x.cmnp_min,
                x.cmmnp,
                fmt_rate(c.precision_pct.map(|p| p / 100.0)),
                fmt_rate(c.recall_vs_anp),
            ));
        }
        out.push_str(&format!(
            "{:<6} {:>6} {:>6} {:>6} {:>6} {:>6}  {:>5}  {:>5}\n",
            "total",
            x.enp,
            x.cnp,
            x.cmnp,
            x.cmnp_min,
            x.cmmnp,
            fmt_rate(t.precision_pct.map(|p| p / 100.0)),
            fmt_rate(t.recall_vs_anp),
        ));
        if let Some(avg) = self.macro_average_recall {
            out.push_str(&format!("average recall over categories: {:.2}\n", round2(avg)));
        }
        for w in &self.warnings {
            out.push_str(&format!("warning: {w}\n"));
        }
        out
    }
}

// ---------------------------------------------------------------------------
