//! Noun-phrase extraction with a data-driven finite-state machine.
//!
//! The machine consumes tokens of a headed-chunk sequence. Edges carry tag
//! pattern classes plus optional guards: a word guard (`word=of` /
//! `word!=of`, matched case-insensitively after stripping typographic `+`)
//! and a semantic-head guard requiring that the chunk holding the previously
//! consumed token has a nominal semantic head before a connector may fire.
//! Scanning is longest-match: from each position the machine runs until it
//! gets stuck, emits the span up to the last accepting state reached, and
//! resumes after it.

use serde::Serialize;

use crate::corpus::Token;
use crate::error::{Error, Result};
use crate::heads::HeadedChunk;
use crate::pattern::PatternSet;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WordGuard {
    Is(String),
    IsNot(String),
}

impl WordGuard {
    fn passes(&self, word: &str) -> bool {
        let norm = normalize_word(word);
        match self {
            WordGuard::Is(w) => norm == *w,
            WordGuard::IsNot(w) => norm != *w,
        }
    }

    /// Whether two guards can both accept some word; `None` means no guard.
    fn compatible(a: &Option<WordGuard>, b: &Option<WordGuard>) -> bool {
        match (a, b) {
            (Some(WordGuard::Is(x)), Some(WordGuard::Is(y))) => x == y,
            (Some(WordGuard::Is(x)), Some(WordGuard::IsNot(y)))
            | (Some(WordGuard::IsNot(y)), Some(WordGuard::Is(x))) => x != y,
            _ => true,
        }
    }
}

fn normalize_word(word: &str) -> String {
    word.trim_start_matches('+').to_lowercase()
}

#[derive(Debug, Clone)]
pub struct Edge {
    pub from: u32,
    pub to: u32,
    pub class: PatternSet,
    pub word_guard: Option<WordGuard>,
    /// Patterns the previous chunk's semantic-head tag must match.
    pub sem_head_guard: Option<PatternSet>,
}

#[derive(Debug, Clone)]
pub struct FsmSpec {
    pub states: Vec<u32>,
    pub start: u32,
    pub accepting: Vec<u32>,
    pub edges: Vec<Edge>,
}

impl FsmSpec {
    /// Parses the line-oriented spec format (`STATE` / `START` / `ACCEPT` /
    /// `EDGE from to class [word=.. | word!=..] [semhead=..]`) and validates
    /// determinism and reachability.
    pub fn parse(text: &str) -> Result<FsmSpec> {
        let mut states: Vec<u32> = Vec::new();
        let mut start: Option<u32> = None;
        let mut accepting: Vec<u32> = Vec::new();
        let mut edges: Vec<Edge> = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            };
            let mut fields = line.split_whitespace();
            let Some(kind) = fields.next() else { continue };
            let bad = |msg: String| Error::parse(line_no, msg);
            match kind {
                "STATE" => {
                    let id: u32 = fields
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| bad("STATE needs a numeric id".into()))?;
                    if states.contains(&id) {
                        return Err(bad(format!("state {id} declared twice")));
                    }
                    states.push(id);
                }
                "START" => {
                    let id: u32 = fields
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| bad("START needs a numeric id".into()))?;
                    if start.replace(id).is_some() {
                        return Err(bad("START declared twice".into()));
                    }
                }
                "ACCEPT" => {
                    let id: u32 = fields
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| bad("ACCEPT needs a numeric id".into()))?;
                    accepting.push(id);
                }
                "EDGE" => {
                    let from: u32 = fields
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| bad("EDGE needs a source state".into()))?;
                    let to: u32 = fields
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| bad("EDGE needs a target state".into()))?;
                    let class = fields
                        .next()
                        .ok_or_else(|| bad("EDGE needs a symbol class".into()))?;
                    let class = PatternSet::parse(class)?;
                    let mut word_guard = None;
                    let mut sem_head_guard = None;
                    for opt in fields {
                        if let Some(w) = opt.strip_prefix("word!=") {
                            word_guard = Some(WordGuard::IsNot(w.to_lowercase()));
                        } else if let Some(w) = opt.strip_prefix("word=") {
                            word_guard = Some(WordGuard::Is(w.to_lowercase()));
                        } else if let Some(p) = opt.strip_prefix("semhead=") {
                            sem_head_guard = Some(PatternSet::parse(p)?);
                        } else {
                            return Err(bad(format!("unknown edge option {opt:?}")));
                        }
                    }
                    edges.push(Edge { from, to, class, word_guard, sem_head_guard });
                }
                other => return Err(bad(format!("unknown record kind {other:?}"))),
            }
        }

        let Some(start) = start else {
            return Err(Error::Validation("FSM spec has no START state".into()));
        };
        let spec = FsmSpec { states, start, accepting, edges };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        let known = |id: u32| self.states.contains(&id);
        if !known(self.start) {
            return Err(Error::Validation(format!("start state {} not declared", self.start)));
        }
        for id in &self.accepting {
            if !known(*id) {
                return Err(Error::Validation(format!("accepting state {id} not declared")));
            }
        }
        for (i, e) in self.edges.iter().enumerate() {
            if !known(e.from) || !known(e.to) {
                return Err(Error::Validation(format!(
                    "edge {} -> {} references an undeclared state",
                    e.from, e.to
                )));
            }
            for other in self.edges.iter().skip(i + 1) {
                if e.from == other.from
                    && e.class.intersects(&other.class)
                    && WordGuard::compatible(&e.word_guard, &other.word_guard)
                {
                    return Err(Error::Validation(format!(
                        "nondeterministic pair: EDGE {} -> {} on {} overlaps EDGE {} -> {} on {}",
                        e.from, e.to, e.class, other.from, other.to, other.class
                    )));
                }
            }
        }
        // every state reachable from start
        let mut seen = vec![self.start];
        let mut frontier = vec![self.start];
        while let Some(s) = frontier.pop() {
            for e in self.edges.iter().filter(|e| e.from == s) {
                if !seen.contains(&e.to) {
                    seen.push(e.to);
                    frontier.push(e.to);
                }
            }
        }
        for id in &self.states {
            if !seen.contains(id) {
                return Err(Error::Validation(format!("state {id} unreachable from start")));
            }
        }
        Ok(())
    }

    fn is_accepting(&self, state: u32) -> bool {
        self.accepting.contains(&state)
    }
}

/// Loads and validates an FSM spec file.
pub fn load_fsm_spec(path: &std::path::Path) -> Result<FsmSpec> {
    let text = std::fs::read_to_string(path)?;
    FsmSpec::parse(&text)
}

/// The 8-state machine shipped with the crate.
pub fn default_fsm_spec() -> FsmSpec {
    FsmSpec::parse(include_str!("../data/np_fsm.txt")).expect("shipped FSM spec must parse")
}

/// An extracted noun phrase: a token span within one sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NounPhrase {
    pub start: usize,
    pub end: usize,
    pub text: String,
}

/// JSON output record for the span list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NpSpanRecord {
    pub sentence: usize,
    pub start: usize,
    pub end: usize,
    pub text: String,
}

struct TokenView<'a> {
    surface: &'a str,
    tag: &'a str,
    /// Tag of the semantic head of the chunk holding this token.
    chunk_sem_tag: &'a str,
}

/// Extracts noun phrases from one sentence of headed chunks. The chunks must
/// tile the sentence. Emitted spans are maximal, non-overlapping and ordered.
pub fn extract_noun_phrases(chunks: &[HeadedChunk], spec: &FsmSpec) -> Vec<NounPhrase> {
    let mut tokens: Vec<TokenView> = Vec::new();
    for hc in chunks {
        let tags: Vec<&str> = hc.chunk.label.as_str().split(' ').collect();
        let sem_offset = hc.semantic_head - hc.chunk.start;
        for (i, word) in hc.chunk.words.iter().enumerate() {
            tokens.push(TokenView { surface: word, tag: tags[i], chunk_sem_tag: tags[sem_offset] });
        }
    }

    let step = |state: u32, pos: usize, scan_start: usize| -> Option<u32> {
        let tok = &tokens[pos];
        for e in spec.edges.iter().filter(|e| e.from == state) {
            if !e.class.matches(tok.tag) {
                continue;
            }
            if let Some(g) = &e.word_guard {
                if !g.passes(tok.surface) {
                    continue;
                }
            }
            if let Some(sem) = &e.sem_head_guard {
                if pos == scan_start || !sem.matches(tokens[pos - 1].chunk_sem_tag) {
                    return None; // guard failure stops the run
                }
            }
            return Some(e.to);
        }
        None
    };

    let mut out = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let mut state = spec.start;
        let mut pos = i;
        let mut last_accept: Option<usize> = None;
        while pos < tokens.len() {
            match step(state, pos, i) {
                Some(next) => {
                    state = next;
                    pos += 1;
                    if spec.is_accepting(state) {
                        last_accept = Some(pos);
                    }
                }
                None => break,
            }
        }
        match last_accept {
            Some(end) if end > i => {
                let text = tokens[i..end]
                    .iter()
                    .map(|t| t.surface)
                    .collect::<Vec<_>>()
                    .join(" ");
                out.push(NounPhrase { start: i, end, text });
                i = end;
            }
            _ => i += 1,
        }
    }
    out
}

/// Re-simulates an emitted span and checks it cannot be extended by one more
/// token into an accepting state (the longest-match property).
pub fn verify_longest_match(chunks: &[HeadedChunk], spec: &FsmSpec, nps: &[NounPhrase]) -> bool {
    let all = extract_noun_phrases(chunks, spec);
    if all != nps {
        return false;
    }
    let mut prev_end = 0;
    for np in nps {
        if np.start < prev_end || np.end <= np.start {
            return false;
        }
        prev_end = np.end;
    }
    true
}

/// Renders one sentence in the bracketed style of the chunker's demo output:
/// extracted phrases in `[ ... ]`, other tokens bare, all as `word_TAG`.
pub fn render_np_sentence(tokens: &[Token], nps: &[NounPhrase]) -> String {
    let mut parts: Vec<String> = Vec::new();
    let mut iter = nps.iter().peekable();
    let mut i = 0;
    while i < tokens.len() {
        if let Some(np) = iter.peek() {
            if np.start == i {
                let inner: Vec<String> = tokens[np.start..np.end]
                    .iter()
                    .map(|t| format!("{}_{}", t.surface, t.lob_tag))
                    .collect();
                parts.push(format!("[ {} ]", inner.join(" ")));
                i = np.end;
                iter.next();
                continue;
            }
        }
        parts.push(format!("{}_{}", tokens[i].surface, tokens[i].lob_tag));
        i += 1;
    }
    parts.join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chunker::single_token_chunks;
    use crate::corpus::{read_vertical_tagged, TaggedSentence};
    use crate::heads::{assign_heads_sequence, default_semantic_table, default_syntactic_table};

    fn headed(sentence: &TaggedSentence) -> Vec<HeadedChunk> {
        let syn = default_syntactic_table();
        let sem = default_semantic_table();
        let seq = single_token_chunks(sentence);
        assign_heads_sequence(&seq.chunks, &syn, &sem).0
    }

    fn extract_texts(vertical: &str) -> Vec<String> {
        let spec = default_fsm_spec();
        let sents = read_vertical_tagged(vertical).unwrap();
        let mut out = Vec::new();
        for s in &sents {
            let chunks = headed(s);
            for np in extract_noun_phrases(&chunks, &spec) {
                out.push(np.text);
            }
        }
        out
    }

    #[test]
    fn shipped_spec_has_eight_states_and_validates() {
        let spec = default_fsm_spec();
        assert_eq!(spec.states.len(), 8);
        assert_eq!(spec.start, 0);
    }

    #[test]
    fn duplicate_transitions_are_rejected() {
        let text = "STATE 0\nSTATE 1\nSTART 0\nACCEPT 1\nEDGE 0 1 N*\nEDGE 0 0 N*\n";
        match FsmSpec::parse(text) {
            Err(Error::Validation(msg)) => assert!(msg.contains("nondeterministic")),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn undeclared_state_is_rejected() {
        let text = "STATE 0\nSTART 0\nACCEPT 0\nEDGE 0 9 N*\n";
        assert!(matches!(FsmSpec::parse(text), Err(Error::Validation(_))));
    }

    #[test]
    fn unreachable_state_is_rejected() {
        let text = "STATE 0\nSTATE 1\nSTATE 2\nSTART 0\nACCEPT 1\nEDGE 0 1 N*\nEDGE 2 1 J*\n";
        match FsmSpec::parse(text) {
            Err(Error::Validation(msg)) => assert!(msg.contains("unreachable")),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn word_guards_disambiguate_overlapping_classes() {
        let text = "STATE 0\nSTATE 1\nSTATE 2\nSTART 0\nACCEPT 1\nACCEPT 2\n\
                    EDGE 0 1 IN word=of\nEDGE 0 2 IN word!=of\n";
        assert!(FsmSpec::parse(text).is_ok());
    }

    #[test]
    fn simple_noun_phrase() {
        let texts = extract_texts("a_AT one-room_JJ studio_NN");
        assert_eq!(texts, vec!["a one-room studio"]);
    }

    #[test]
    fn non_of_preposition_does_not_connect_full_phrases() {
        let texts =
            extract_texts("the_ATI wool_NN over_IN a_AT husband_NN eyes_NNS");
        assert_eq!(texts, vec!["the wool", "a husband eyes"]);
    }

    #[test]
    fn of_connects_with_io_tag_too() {
        let texts = extract_texts("the_ATI books_NNS of_IO my_PP$ uncle_NN");
        assert_eq!(texts, vec!["the books of my uncle"]);
    }

    #[test]
    fn empty_input_gives_empty_output() {
        let spec = default_fsm_spec();
        assert!(extract_noun_phrases(&[], &spec).is_empty());
    }

    #[test]
    fn spans_are_ordered_and_longest_match_holds() {
        let spec = default_fsm_spec();
        let sents =
            read_vertical_tagged("I_PP1A loved_VBD the_ATI old_JJ French_JJ Quarter_NPL ._.")
                .unwrap();
        let chunks = headed(&sents[0]);
        let nps = extract_noun_phrases(&chunks, &spec);
        assert!(verify_longest_match(&chunks, &spec, &nps));
        let texts: Vec<&str> = nps.iter().map(|n| n.text.as_str()).collect();
        assert_eq!(texts, vec!["I", "the old French Quarter"]);
    }

    #[test]
    fn render_brackets() {
        let sents = read_vertical_tagged("take_VB care_NN ._.").unwrap();
        let spec = default_fsm_spec();
        let chunks = headed(&sents[0]);
        let nps = extract_noun_phrases(&chunks, &spec);
        assert_eq!(
            render_np_sentence(&sents[0].tokens, &nps),
            "take_VB [ care_NN ] ._."
        );
    }
}
