//! Tag patterns shared by the priority tables and the NP finite-state machine.
//!
//! A pattern is either a literal tag (`IN`), a prefix wildcard (`VB*`), or a
//! prefix-and-suffix form (`P*$`, matching tags that start with `P` and end
//! with `$`). `*` may occur at most once.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagPattern {
    prefix: String,
    /// `None` for literal patterns; `Some(suffix)` when a `*` is present
    /// (suffix is empty for plain prefix wildcards like `VB*`).
    suffix: Option<String>,
}

impl TagPattern {
    pub fn parse(text: &str) -> Result<TagPattern> {
        if text.is_empty() {
            return Err(Error::Validation("empty tag pattern".into()));
        }
        if text.chars().any(|c| c.is_whitespace() || c == '_' || c == '|') {
            return Err(Error::Validation(format!("invalid character in pattern {text:?}")));
        }
        let stars = text.matches('*').count();
        match stars {
            0 => Ok(TagPattern { prefix: text.to_string(), suffix: None }),
            1 => {
                let (p, s) = text.split_once('*').unwrap();
                Ok(TagPattern { prefix: p.to_string(), suffix: Some(s.to_string()) })
            }
            _ => Err(Error::Validation(format!("pattern {text:?} has more than one '*'"))),
        }
    }

    /// Parse a pattern restricted to literal or suffix-wildcard form, the only
    /// forms allowed in priority table files.
    pub fn parse_suffix_only(text: &str) -> Result<TagPattern> {
        let p = Self::parse(text)?;
        match &p.suffix {
            Some(s) if !s.is_empty() => Err(Error::Validation(format!(
                "pattern {text:?}: '*' is a suffix wildcard only in this file"
            ))),
            _ => Ok(p),
        }
    }

    pub fn matches(&self, tag: &str) -> bool {
        match &self.suffix {
            None => tag == self.prefix,
            Some(suffix) => {
                tag.len() >= self.prefix.len() + suffix.len()
                    && tag.starts_with(&self.prefix)
                    && tag.ends_with(suffix.as_str())
            }
        }
    }

    /// Whether some tag string could match both patterns. Exact for the
    /// one-star pattern language: languages `a·Σ*·b` intersect iff one prefix
    /// extends the other and one suffix extends the other.
    pub fn intersects(&self, other: &TagPattern) -> bool {
        match (&self.suffix, &other.suffix) {
            (None, None) => self.prefix == other.prefix,
            (None, Some(_)) => other.matches(&self.prefix),
            (Some(_), None) => self.matches(&other.prefix),
            (Some(s1), Some(s2)) => {
                let prefix_ok = self.prefix.starts_with(&other.prefix)
                    || other.prefix.starts_with(&self.prefix);
                let suffix_ok = s1.ends_with(s2.as_str()) || s2.ends_with(s1.as_str());
                prefix_ok && suffix_ok
            }
        }
    }
}

impl std::fmt::Display for TagPattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.suffix {
            None => write!(f, "{}", self.prefix),
            Some(s) => write!(f, "{}*{}", self.prefix, s),
        }
    }
}

/// An alternation of patterns (`NN*|NP*`), used as an FSM edge symbol class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternSet(Vec<TagPattern>);

impl PatternSet {
    pub fn parse(text: &str) -> Result<PatternSet> {
        let pats: Result<Vec<_>> = text.split('|').map(TagPattern::parse).collect();
        let pats = pats?;
        if pats.is_empty() {
            return Err(Error::Validation("empty pattern set".into()));
        }
        Ok(PatternSet(pats))
    }

    pub fn matches(&self, tag: &str) -> bool {
        self.0.iter().any(|p| p.matches(tag))
    }

    pub fn intersects(&self, other: &PatternSet) -> bool {
        self.0.iter().any(|a| other.0.iter().any(|b| a.intersects(b)))
    }
}

impl std::fmt::Display for PatternSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|p| p.to_string()).collect();
        write!(f, "{}", parts.join("|"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_and_wildcard_matching() {
        let lit = TagPattern::parse("IN").unwrap();
        assert!(lit.matches("IN"));
        assert!(!lit.matches("INO"));

        let wild = TagPattern::parse("VB*").unwrap();
        assert!(wild.matches("VB"));
        assert!(wild.matches("VBN"));
        assert!(!wild.matches("HV"));

        let poss = TagPattern::parse("P*$").unwrap();
        assert!(poss.matches("PP$"));
        assert!(poss.matches("PP$$"));
        assert!(!poss.matches("PP2"));
        assert!(!poss.matches("P")); // too short: needs both prefix and suffix
    }

    #[test]
    fn intersection_is_exact_on_known_cases() {
        let p = |s: &str| TagPattern::parse(s).unwrap();
        assert!(p("P*").intersects(&p("P*$")));
        assert!(p("NN*").intersects(&p("NN*")));
        assert!(!p("NN*").intersects(&p("NP*")));
        assert!(p("N*").intersects(&p("NR*")));
        assert!(p("IN").intersects(&p("I*")));
        assert!(!p("IN").intersects(&p("IO")));
        assert!(!p("P*$").intersects(&p("PP2")));
    }

    #[test]
    fn rejects_bad_patterns() {
        assert!(TagPattern::parse("").is_err());
        assert!(TagPattern::parse("A*B*").is_err());
        assert!(TagPattern::parse("A B").is_err());
        assert!(TagPattern::parse_suffix_only("P*$").is_err());
        assert!(TagPattern::parse_suffix_only("VB*").is_ok());
    }
}
