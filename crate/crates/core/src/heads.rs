//! Syntactic and semantic head assignment from POS priority tables.
//!
//! A priority table is an ordered list of coarse POS classes, each holding an
//! ordered list of tag patterns. The head of a chunk is the token whose tag
//! has the best (class, within-class) rank; tags matching no class fall to an
//! implicit catch-all class below everything else. Ties go to the rightmost
//! token. One-word chunks are their own head under any table.

use crate::chunker::Chunk;
use crate::error::{Error, Result};
use crate::pattern::TagPattern;

#[derive(Debug, Clone)]
pub struct PriorityClass {
    pub name: String,
    pub patterns: Vec<TagPattern>,
}

#[derive(Debug, Clone)]
pub struct PriorityTable {
    classes: Vec<PriorityClass>,
}

/// Rank of a tag in a table; smaller is better. The catch-all rank sorts
/// below every declared class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Rank {
    pub class: usize,
    pub within: usize,
}

impl PriorityTable {
    /// Parses the section file format:
    ///
    /// ```text
    /// [V]
    /// VB*
    /// HV*
    /// [N]
    /// NN*
    /// ```
    ///
    /// Sections appear in coarse-priority order, patterns in within-class
    /// order. Only suffix wildcards are allowed here.
    pub fn parse(text: &str) -> Result<PriorityTable> {
        let mut classes: Vec<PriorityClass> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let Some(name) = name.strip_suffix(']') else {
                    return Err(Error::parse(line_no, "unterminated section header"));
                };
                if name.is_empty() {
                    return Err(Error::parse(line_no, "empty section name"));
                }
                classes.push(PriorityClass { name: name.to_string(), patterns: Vec::new() });
            } else {
                let Some(class) = classes.last_mut() else {
                    return Err(Error::parse(line_no, "pattern before any [section] header"));
                };
                let pat = TagPattern::parse_suffix_only(line)?;
                if class.patterns.contains(&pat) {
                    return Err(Error::parse(line_no, format!("duplicate pattern {line:?}")));
                }
                class.patterns.push(pat);
            }
        }
        if classes.is_empty() {
            return Err(Error::Validation("priority table has no sections".into()));
        }
        let table = PriorityTable { classes };
        table.validate()?;
        Ok(table)
    }

    /// Coarse classes must be disjoint: no tag may match patterns in two
    /// different classes.
    fn validate(&self) -> Result<()> {
        for (i, a) in self.classes.iter().enumerate() {
            for b in self.classes.iter().skip(i + 1) {
                for pa in &a.patterns {
                    for pb in &b.patterns {
                        if pa.intersects(pb) {
                            return Err(Error::Validation(format!(
                                "classes [{}] and [{}] overlap on patterns {pa} / {pb}",
                                a.name, b.name
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Rank of a tag; `None` means catch-all fallback.
    pub fn rank(&self, tag: &str) -> Option<Rank> {
        for (ci, class) in self.classes.iter().enumerate() {
            for (pi, pat) in class.patterns.iter().enumerate() {
                if pat.matches(tag) {
                    return Some(Rank { class: ci, within: pi });
                }
            }
        }
        None
    }

    fn rank_or_fallback(&self, tag: &str) -> (Rank, bool) {
        match self.rank(tag) {
            Some(r) => (r, false),
            None => (Rank { class: self.classes.len(), within: 0 }, true),
        }
    }

    pub fn classes(&self) -> &[PriorityClass] {
        &self.classes
    }
}

/// Shipped syntactic priorities: V > P > N > A, verbs ordered
/// VB* > HV* > DO* > BE*.
pub fn default_syntactic_table() -> PriorityTable {
    PriorityTable::parse(include_str!("../data/syntactic_priority.txt"))
        .expect("shipped syntactic table must parse")
}

/// Shipped semantic priorities: N > V > A, pronouns grouped with nouns.
pub fn default_semantic_table() -> PriorityTable {
    PriorityTable::parse(include_str!("../data/semantic_priority.txt"))
        .expect("shipped semantic table must parse")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeadedChunk {
    pub chunk: Chunk,
    /// Absolute token index of the syntactic head.
    pub syntactic_head: usize,
    /// Absolute token index of the semantic head.
    pub semantic_head: usize,
}

fn pick_head(chunk: &Chunk, table: &PriorityTable) -> (usize, usize) {
    let mut fallbacks = 0;
    let mut best: Option<(Rank, usize)> = None;
    for (offset, tag) in chunk.label.as_str().split(' ').enumerate() {
        let (rank, fell) = table.rank_or_fallback(tag);
        if fell {
            fallbacks += 1;
        }
        // `<=` keeps the rightmost among equal ranks
        best = match best {
            None => Some((rank, offset)),
            Some((br, bo)) => {
                if rank <= br {
                    Some((rank, offset))
                } else {
                    Some((br, bo))
                }
            }
        };
    }
    let (_, offset) = best.expect("chunks are non-empty");
    (chunk.start + offset, fallbacks)
}

/// Assigns both heads to a chunk.
pub fn assign_heads(chunk: &Chunk, syn: &PriorityTable, sem: &PriorityTable) -> HeadedChunk {
    assign_heads_counted(chunk, syn, sem).0
}

/// As `assign_heads`, also reporting how many tag lookups fell to the
/// catch-all class (the diagnostics counter).
pub fn assign_heads_counted(
    chunk: &Chunk,
    syn: &PriorityTable,
    sem: &PriorityTable,
) -> (HeadedChunk, usize) {
    let (syn_head, f1) = pick_head(chunk, syn);
    let (sem_head, f2) = pick_head(chunk, sem);
    (
        HeadedChunk { chunk: chunk.clone(), syntactic_head: syn_head, semantic_head: sem_head },
        f1 + f2,
    )
}

/// Pipeline helper: heads for every chunk of a sentence, plus the total
/// fallback count.
pub fn assign_heads_sequence(
    chunks: &[Chunk],
    syn: &PriorityTable,
    sem: &PriorityTable,
) -> (Vec<HeadedChunk>, usize) {
    let mut out = Vec::with_capacity(chunks.len());
    let mut fallbacks = 0;
    for chunk in chunks {
        let (hc, f) = assign_heads_counted(chunk, syn, sem);
        fallbacks += f;
        out.push(hc);
    }
    (out, fallbacks)
}
