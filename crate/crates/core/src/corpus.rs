//! Readers for SUSANNE-format treebank records and vertical tagged text,
//! plus the SUSANNE-to-LOB tag map.
//!
//! A SUSANNE record line has six whitespace-separated fields:
//!
//! ```text
//! G01:0010b - JJ NORTHERN northern [O[S[Np:s.
//! ```
//!
//! The parse field encodes bracket operations around the token position
//! marked by `.`: labels opened before it (`[O[S[Np:s`) and labels closed
//! after it (`.Np:s]`). Typographic `+` prefixes on surface forms are kept
//! verbatim.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::tree::{ParseChild, ParseNode};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SusanneRecord {
    pub ref_id: String,
    pub status: String,
    pub word_tag: String,
    pub surface: String,
    pub lemma: String,
    pub parse_annotation: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub lob_tag: String,
    pub susanne_tag: Option<String>,
}

impl Token {
    pub fn new(surface: impl Into<String>, lob_tag: impl Into<String>) -> Token {
        Token { surface: surface.into(), lob_tag: lob_tag.into(), susanne_tag: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedSentence {
    pub tokens: Vec<Token>,
    pub source_id: Option<String>,
}

/// Validates a LOB tag: non-empty, no whitespace, and none of the characters
/// reserved by the pattern language, the vertical format or the model format.
pub fn validate_lob_tag(tag: &str) -> Result<()> {
    if tag.is_empty() {
        return Err(Error::Validation("empty LOB tag".into()));
    }
    if tag.chars().any(|c| c.is_whitespace() || c == '*' || c == '_' || c == '|') {
        return Err(Error::Validation(format!("invalid LOB tag {tag:?}")));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Parse-field annotations

/// One record's bracket operations: labels opened before the token and labels
/// closed after it.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Annotation {
    pub opens: Vec<String>,
    pub closes: Vec<String>,
}

pub fn parse_annotation(text: &str) -> Result<Annotation> {
    let dot = text
        .find('.')
        .ok_or_else(|| Error::Validation(format!("parse field {text:?} has no token mark '.'")))?;
    if text[dot + 1..].contains('.') {
        return Err(Error::Validation(format!("parse field {text:?} has more than one '.'")));
    }
    let (before, after) = (&text[..dot], &text[dot + 1..]);

    let mut opens = Vec::new();
    let mut rest = before;
    while !rest.is_empty() {
        let Some(stripped) = rest.strip_prefix('[') else {
            return Err(Error::Validation(format!("parse field {text:?}: expected '[' in {rest:?}")));
        };
        let end = stripped.find('[').unwrap_or(stripped.len());
        let label = &stripped[..end];
        if label.is_empty() || label.contains(']') {
            return Err(Error::Validation(format!("parse field {text:?}: bad open label")));
        }
        opens.push(label.to_string());
        rest = &stripped[end..];
    }

    let mut closes = Vec::new();
    let mut rest = after;
    while !rest.is_empty() {
        let Some(end) = rest.find(']') else {
            return Err(Error::Validation(format!("parse field {text:?}: close without ']'")));
        };
        let label = &rest[..end];
        if label.is_empty() || label.contains('[') {
            return Err(Error::Validation(format!("parse field {text:?}: bad close label")));
        }
        closes.push(label.to_string());
        rest = &rest[end + 1..];
    }

    Ok(Annotation { opens, closes })
}

fn base_label(label: &str) -> &str {
    match label.split_once(':') {
        Some((base, _)) => base,
        None => label,
    }
}

/// Text-level wrappers (`O`, `Oh`, ...) may stay open across sentences.
fn is_text_wrapper(label: &str) -> bool {
    base_label(label).starts_with('O')
}

fn is_sentence_open(label: &str) -> bool {
    base_label(label) == "S"
}

// ---------------------------------------------------------------------------
// Stream parsing and sentence grouping

/// Parses a SUSANNE stream and groups the records into sentences.
///
/// A new sentence group starts at a record that opens an `S` constituent once
/// the current group already holds a completed one; headings and trailing
/// punctuation inside text wrappers stay with the group they follow. An open
/// non-wrapper constituent at end of stream is a structural error.
pub fn parse_susanne_stream(input: &str) -> Result<Vec<Vec<SusanneRecord>>> {
    let mut groups: Vec<Vec<SusanneRecord>> = Vec::new();
    let mut current: Vec<SusanneRecord> = Vec::new();
    let mut stack: Vec<String> = Vec::new();
    let mut group_has_sentence = false;

    for (idx, line) in input.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 6 {
            return Err(Error::parse(
                line_no,
                format!("expected 6 fields, found {}", fields.len()),
            ));
        }
        if fields.len() > 6 {
            return Err(Error::parse(
                line_no,
                format!("expected 6 fields, found {}", fields.len()),
            ));
        }
        let record = SusanneRecord {
            ref_id: fields[0].to_string(),
            status: fields[1].to_string(),
            word_tag: fields[2].to_string(),
            surface: fields[3].to_string(),
            lemma: fields[4].to_string(),
            parse_annotation: fields[5].to_string(),
        };
        let ann = parse_annotation(&record.parse_annotation)?;

        if group_has_sentence && ann.opens.iter().any(|l| is_sentence_open(l)) {
            groups.push(std::mem::take(&mut current));
            group_has_sentence = false;
        }

        for label in &ann.opens {
            stack.push(label.clone());
        }
        for label in &ann.closes {
            match stack.last() {
                Some(top) if top == label => {
                    if is_sentence_open(label) {
                        group_has_sentence = true;
                    }
                    stack.pop();
                }
                Some(top) => {
                    return Err(Error::structure(
                        record.ref_id.clone(),
                        format!("close {label:?} does not match open {top:?}"),
                    ));
                }
                None if is_text_wrapper(label) => {} // wrapper opened before this stream slice
                None => {
                    return Err(Error::structure(
                        record.ref_id.clone(),
                        format!("close {label:?} with no open constituent"),
                    ));
                }
            }
        }
        current.push(record);
    }

    if !current.is_empty() {
        groups.push(current);
    }
    if let Some(open) = stack.iter().find(|l| !is_text_wrapper(l)) {
        return Err(Error::structure(
            "end of stream",
            format!("constituent {open:?} still open"),
        ));
    }
    Ok(groups)
}

/// Renders records back to six-column text; `parse(render(r)) == r`.
pub fn render_susanne(records: &[SusanneRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            r.ref_id, r.status, r.word_tag, r.surface, r.lemma, r.parse_annotation
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// Tree building

/// Rebuilds the constituent tree of one sentence group. The returned root is
/// synthetic (empty label); text wrappers left open by the group are closed
/// implicitly, anything else still open is a structural error.
pub fn build_parse_tree(records: &[SusanneRecord]) -> Result<ParseNode> {
    struct Frame {
        label: String,
        start: usize,
        children: Vec<ParseChild>,
    }

    let mut stack: Vec<Frame> = Vec::new();
    let mut top_level: Vec<ParseChild> = Vec::new();

    let attach = |stack: &mut Vec<Frame>, top_level: &mut Vec<ParseChild>, child: ParseChild| {
        match stack.last_mut() {
            Some(frame) => frame.children.push(child),
            None => top_level.push(child),
        }
    };

    for (pos, record) in records.iter().enumerate() {
        let ann = parse_annotation(&record.parse_annotation)?;
        for label in ann.opens {
            stack.push(Frame { label, start: pos, children: Vec::new() });
        }
        attach(&mut stack, &mut top_level, ParseChild::Leaf(pos));
        for label in ann.closes {
            match stack.pop() {
                Some(frame) if frame.label == label => {
                    let node = ParseNode::new(frame.label, frame.start, pos + 1, frame.children);
                    attach(&mut stack, &mut top_level, ParseChild::Node(node));
                }
                Some(frame) => {
                    return Err(Error::structure(
                        record.ref_id.clone(),
                        format!("close {:?} does not match open {:?}", label, frame.label),
                    ));
                }
                None if is_text_wrapper(&label) => {}
                None => {
                    return Err(Error::structure(
                        record.ref_id.clone(),
                        format!("close {label:?} with no open constituent"),
                    ));
                }
            }
        }
    }

    // Implicitly close wrappers that span past this sentence.
    while let Some(frame) = stack.pop() {
        if !is_text_wrapper(&frame.label) {
            let at = records.last().map(|r| r.ref_id.clone()).unwrap_or_default();
            return Err(Error::structure(at, format!("constituent {:?} still open", frame.label)));
        }
        let node = ParseNode::new(frame.label, frame.start, records.len(), frame.children);
        attach(&mut stack, &mut top_level, ParseChild::Node(node));
    }

    let root = ParseNode::new("", 0, records.len(), top_level);
    root.validate()?;
    Ok(root)
}

// ---------------------------------------------------------------------------
// Tag map

/// Many-to-one SUSANNE-to-LOB tag map, loaded from a two-column TSV file.
#[derive(Debug, Clone)]
pub struct TagMap {
    map: HashMap<String, String>,
}

impl TagMap {
    pub fn parse(text: &str) -> Result<TagMap> {
        let mut map = HashMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match line.find('#') {
                Some(i) => &line[..i],
                None => line,
            };
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(from), Some(to), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::parse(line_no, "tag map line must be 'susanne_tag<TAB>lob_tag'"));
            };
            validate_lob_tag(to)?;
            if map.insert(from.to_string(), to.to_string()).is_some() {
                return Err(Error::parse(line_no, format!("duplicate tag map entry for {from:?}")));
            }
        }
        if map.is_empty() {
            return Err(Error::Validation("tag map is empty".into()));
        }
        Ok(TagMap { map })
    }

    pub fn map_tag(&self, susanne_tag: &str) -> Result<&str> {
        self.map
            .get(susanne_tag)
            .map(|s| s.as_str())
            .ok_or_else(|| Error::UnknownTag { tag: susanne_tag.to_string() })
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// The SUSANNE-to-LOB table shipped with the crate.
pub fn default_tag_map() -> TagMap {
    TagMap::parse(include_str!("../data/susanne_to_lob.tsv"))
        .expect("shipped tag map must parse")
}

/// Converts one sentence group into a tagged sentence with LOB tags.
pub fn records_to_sentence(records: &[SusanneRecord], tag_map: &TagMap) -> Result<TaggedSentence> {
    if records.is_empty() {
        return Err(Error::Domain("empty sentence group".into()));
    }
    let tokens: Result<Vec<Token>> = records
        .iter()
        .map(|r| {
            Ok(Token {
                surface: r.surface.clone(),
                lob_tag: tag_map.map_tag(&r.word_tag)?.to_string(),
                susanne_tag: Some(r.word_tag.clone()),
            })
        })
        .collect();
    Ok(TaggedSentence { tokens: tokens?, source_id: Some(records[0].ref_id.clone()) })
}

// ---------------------------------------------------------------------------
// Vertical tagged text

/// Tags ending a sentence in vertical `word_TAG` text.
pub fn is_sentence_terminator(tag: &str) -> bool {
    matches!(tag, "." | "!" | "?")
}

/// Reads `word_TAG` items; a sentence ends at a terminator tag or a blank
/// line. The separator is the last underscore, so underscores inside words
/// are allowed.
pub fn read_vertical_tagged(input: &str) -> Result<Vec<TaggedSentence>> {
    let mut sentences = Vec::new();
    let mut tokens: Vec<Token> = Vec::new();

    let flush = |tokens: &mut Vec<Token>, sentences: &mut Vec<TaggedSentence>| {
        if !tokens.is_empty() {
            sentences.push(TaggedSentence { tokens: std::mem::take(tokens), source_id: None });
        }
    };

    for (idx, line) in input.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            flush(&mut tokens, &mut sentences);
            continue;
        }
        for item in line.split_whitespace() {
            let Some((word, tag)) = item.rsplit_once('_') else {
                return Err(Error::parse(line_no, format!("token {item:?} has no '_' separator")));
            };
            if word.is_empty() || tag.is_empty() {
                return Err(Error::parse(line_no, format!("token {item:?} has an empty word or tag")));
            }
            validate_lob_tag(tag)
                .map_err(|_| Error::parse(line_no, format!("token {item:?} has an invalid tag")))?;
            tokens.push(Token::new(word, tag));
            if is_sentence_terminator(tag) {
                flush(&mut tokens, &mut sentences);
            }
        }
    }
    flush(&mut tokens, &mut sentences);
    Ok(sentences)
}

/// Renders a sentence back to `word_TAG` items.
pub fn render_vertical(sentence: &TaggedSentence) -> String {
    sentence
        .tokens
        .iter()
        .map(|t| format!("{}_{}", t.surface, t.lob_tag))
        .collect::<Vec<_>>()
        .join(" ")
}

// ---------------------------------------------------------------------------
// Input format detection

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Susanne,
    Vertical,
}

/// Best-effort format sniffing for the CLI; `None` means ambiguous.
pub fn detect_format(text: &str) -> Option<InputFormat> {
    let line = text.lines().find(|l| !l.trim().is_empty())?;
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() == 6 && fields[0].contains(':') && fields[5].contains('.') {
        return Some(InputFormat::Susanne);
    }
    if !fields.is_empty() && fields.iter().all(|f| f.contains('_')) {
        return Some(InputFormat::Vertical);
    }
    None
}

// ---------------------------------------------------------------------------

#[cfg(test)]
pub(crate) const SNAPSHOT: &str = "\
G01:0010a - YB <minbrk> - [Oh.Oh]
G01:0010b - JJ NORTHERN northern [O[S[Np:s.
G01:0010c - NN2 liberals liberal .Np:s]
G01:0010d - VBR are be [Vab.Vab]
G01:0010e - AT the the [Np:e.
G01:0010f - JB chief chief .
G01:0010g - NN2 supporters supporter .
G01:0010h - IO of of [Po.
G01:0010i - JJ civil civil [Np.
G01:0010j - NN2 rights right .Np]
G01:0020a - CC and and [Po+.
G01:0020b - IO of of .
G01:0020c - NN1u integration integration .Po+]Po]Np:e]S]
G01:0020d - YF +. - .
";

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_parses_into_one_sentence_group() {
        let groups = parse_susanne_stream(SNAPSHOT).unwrap();
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].len(), 14);
        assert_eq!(groups[0][0].ref_id, "G01:0010a");
        assert_eq!(groups[0][0].surface, "<minbrk>");
        assert_eq!(groups[0][13].surface, "+.");
        assert_eq!(groups[0][13].word_tag, "YF");
    }

    #[test]
    fn empty_stream_is_empty() {
        assert!(parse_susanne_stream("").unwrap().is_empty());
    }

    #[test]
    fn short_line_is_a_parse_error_with_line_number() {
        let err = parse_susanne_stream("G01:0010x - NN\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn two_sentences_split_on_new_s() {
        let text = "\
A01:0010a - AT1 a a [O[S[Ns:s.
A01:0010b - NN1c dog dog .Ns:s]
A01:0010c - VVDv ran run [Vd.Vd]S]
A01:0010d - YF +. - .
A01:0020a - AT1 a a [S[Ns:s.
A01:0020b - NN1c cat cat .Ns:s]
A01:0020c - VVDv sat sit [Vd.Vd]S]
A01:0020d - YF +. - .O]
";
        let groups = parse_susanne_stream(text).unwrap();
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0].len(), 4);
        assert_eq!(groups[1].len(), 4);
        // the trailing period stays with its own sentence
        assert_eq!(groups[0][3].word_tag, "YF");
    }

    #[test]
    fn unbalanced_stream_is_a_structural_error() {
        let text = "A01:0010a - AT1 a a [O[S[Ns:s.\n";
        assert!(matches!(parse_susanne_stream(text), Err(Error::Structure { .. })));
    }

    #[test]
    fn round_trip_records() {
        let groups = parse_susanne_stream(SNAPSHOT).unwrap();
        let rendered = render_susanne(&groups[0]);
        let reparsed = parse_susanne_stream(&rendered).unwrap();
        assert_eq!(reparsed[0], groups[0]);
    }

    #[test]
    fn tree_from_snapshot_has_np_s_over_northern_liberals() {
        let groups = parse_susanne_stream(SNAPSHOT).unwrap();
        let tree = build_parse_tree(&groups[0]).unwrap();
        assert_eq!(tree.leaf_count(), 14);
        let nts = tree.non_terminals();
        let np_s = nts.iter().find(|n| n.label == "Np:s").expect("Np:s node");
        assert_eq!((np_s.start, np_s.end), (1, 3)); // NORTHERN liberals
        // every leaf in order
        assert_eq!(tree.leaves(), (0..14).collect::<Vec<_>>());
        // the unclosed O wrapper is implicitly closed and spans to the end
        let o = nts.iter().find(|n| n.label == "O").expect("O node");
        assert_eq!((o.start, o.end), (1, 14));
    }

    #[test]
    fn single_oh_record_builds_one_child_root() {
        let rec = SusanneRecord {
            ref_id: "G01:0010a".into(),
            status: "-".into(),
            word_tag: "YB".into(),
            surface: "<minbrk>".into(),
            lemma: "-".into(),
            parse_annotation: "[Oh.Oh]".into(),
        };
        let tree = build_parse_tree(&[rec]).unwrap();
        assert_eq!(tree.children.len(), 1);
        match &tree.children[0] {
            ParseChild::Node(n) => {
                assert_eq!(n.label, "Oh");
                assert_eq!((n.start, n.end), (0, 1));
            }
            other => panic!("expected node, got {other:?}"),
        }
    }

    #[test]
    fn mismatched_close_label_names_the_record() {
        let recs = vec![
            SusanneRecord {
                ref_id: "X01:0001a".into(),
                status: "-".into(),
                word_tag: "NN1c".into(),
                surface: "x".into(),
                lemma: "x".into(),
                parse_annotation: "[Np.".into(),
            },
            SusanneRecord {
                ref_id: "X01:0001b".into(),
                status: "-".into(),
                word_tag: "NN1c".into(),
                surface: "y".into(),
                lemma: "y".into(),
                parse_annotation: ".S]".into(),
            },
        ];
        match build_parse_tree(&recs) {
            Err(Error::Structure { context, .. }) => assert_eq!(context, "X01:0001b"),
            other => panic!("expected structural error, got {other:?}"),
        }
    }

    #[test]
    fn tag_map_basics() {
        let map = default_tag_map();
        assert_eq!(map.map_tag("JJ").unwrap(), "JJ");
        assert_eq!(map.map_tag("NN1u").unwrap(), "NN");
        assert_eq!(map.map_tag("VBR").unwrap(), "BER");
        assert_eq!(map.map_tag("AT").unwrap(), "ATI");
        assert!(matches!(
            map.map_tag("NOSUCHTAG"),
            Err(Error::UnknownTag { .. })
        ));
    }

    #[test]
    fn tag_map_is_deterministic() {
        let map = default_tag_map();
        for tag in ["JJ", "NN2", "IO", "YF", "CC"] {
            let a = map.map_tag(tag).unwrap().to_string();
            let b = map.map_tag(tag).unwrap().to_string();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn vertical_reader_appendix_first_line() {
        let sents = read_vertical_tagged("Too_QL many_AP people_NNS").unwrap();
        assert_eq!(sents.len(), 1);
        let tags: Vec<&str> = sents[0].tokens.iter().map(|t| t.lob_tag.as_str()).collect();
        assert_eq!(tags, vec!["QL", "AP", "NNS"]);
    }

    #[test]
    fn vertical_reader_blank_line_splits() {
        let sents = read_vertical_tagged("a_AT dog_NN\n\nthe_ATI cat_NN\n").unwrap();
        assert_eq!(sents.len(), 2);
    }

    #[test]
    fn vertical_reader_terminator_splits() {
        let sents = read_vertical_tagged("It_PP3 ran_VBD ._. Then_RN it_PP3 sat_VBD ._.").unwrap();
        assert_eq!(sents.len(), 2);
        assert_eq!(sents[0].tokens.len(), 3);
    }

    #[test]
    fn vertical_reader_rejects_missing_separator() {
        assert!(matches!(
            read_vertical_tagged("wordwithoutunderscore"),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn vertical_reader_keeps_plus_prefixes() {
        let sents = read_vertical_tagged("+an_AT Uncle_NPT").unwrap();
        assert_eq!(sents[0].tokens[0].surface, "+an");
    }

    #[test]
    fn format_detection() {
        assert_eq!(detect_format(SNAPSHOT), Some(InputFormat::Susanne));
        assert_eq!(
            detect_format("Too_QL many_AP people_NNS"),
            Some(InputFormat::Vertical)
        );
        assert_eq!(detect_format("just some words"), None);
    }
}
