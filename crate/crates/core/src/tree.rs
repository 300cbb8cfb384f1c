//! Constituent trees rebuilt from SUSANNE parse-field annotations.

use crate::error::{Error, Result};

/// A labeled constituent node. Leaves are token indices into the sentence.
///
/// The sentence root returned by the tree builder is synthetic (empty label)
/// and wraps whatever top-level constituents the parse field contains; it does
/// not count as a SUSANNE non-terminal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseNode {
    pub label: String,
    /// Token span `[start, end)`.
    pub start: usize,
    pub end: usize,
    pub children: Vec<ParseChild>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseChild {
    Node(ParseNode),
    Leaf(usize),
}

impl ParseNode {
    pub fn new(label: impl Into<String>, start: usize, end: usize, children: Vec<ParseChild>) -> Self {
        ParseNode { label: label.into(), start, end, children }
    }

    pub fn leaf_count(&self) -> usize {
        self.end - self.start
    }

    pub fn is_root(&self) -> bool {
        self.label.is_empty()
    }

    /// Label with the functional suffix (`:s`, `:e`, ...) stripped.
    /// Coordination continuation marks (`Po+`) keep their `+`.
    pub fn base_label(&self) -> &str {
        match self.label.split_once(':') {
            Some((base, _)) => base,
            None => &self.label,
        }
    }

    /// All real (non-synthetic-root) non-terminal nodes, preorder.
    pub fn non_terminals(&self) -> Vec<&ParseNode> {
        let mut out = Vec::new();
        self.collect_non_terminals(&mut out);
        out
    }

    fn collect_non_terminals<'a>(&'a self, out: &mut Vec<&'a ParseNode>) {
        if !self.is_root() {
            out.push(self);
        }
        for child in &self.children {
            if let ParseChild::Node(n) = child {
                n.collect_non_terminals(out);
            }
        }
    }

    /// In-order token indices under this node.
    pub fn leaves(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves(&self, out: &mut Vec<usize>) {
        for child in &self.children {
            match child {
                ParseChild::Leaf(i) => out.push(*i),
                ParseChild::Node(n) => n.collect_leaves(out),
            }
        }
    }

    /// Checks that child spans are contiguous, ordered, and partition the
    /// parent span, at every level.
    pub fn validate(&self) -> Result<()> {
        let mut pos = self.start;
        for child in &self.children {
            let (cs, ce) = match child {
                ParseChild::Leaf(i) => (*i, *i + 1),
                ParseChild::Node(n) => (n.start, n.end),
            };
            if cs != pos {
                return Err(Error::structure(
                    self.label.clone(),
                    format!("child span starts at {cs}, expected {pos}"),
                ));
            }
            pos = ce;
            if let ParseChild::Node(n) = child {
                n.validate()?;
            }
        }
        if pos != self.end {
            return Err(Error::structure(
                self.label.clone(),
                format!("children end at {pos}, node ends at {}", self.end),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
pub(crate) fn node(label: &str, children: Vec<ParseChild>) -> ParseChild {
    let (start, end) = match (children.first(), children.last()) {
        (Some(f), Some(l)) => {
            let s = match f {
                ParseChild::Leaf(i) => *i,
                ParseChild::Node(n) => n.start,
            };
            let e = match l {
                ParseChild::Leaf(i) => *i + 1,
                ParseChild::Node(n) => n.end,
            };
            (s, e)
        }
        _ => (0, 0),
    };
    ParseChild::Node(ParseNode::new(label, start, end, children))
}

#[cfg(test)]
pub(crate) fn root_of(children: Vec<ParseChild>) -> ParseNode {
    match node("", children) {
        ParseChild::Node(mut n) => {
            n.label = String::new();
            n
        }
        _ => unreachable!(),
    }
}
