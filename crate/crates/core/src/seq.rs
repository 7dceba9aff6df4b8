//! Text sequences measured in units, and the fraction-based split used to
//! propose candidate steps.
//!
//! A [`TextSeq`] is a string paired with the scheme that decides what counts
//! as one unit. Under [`UnitScheme::Character`] every Unicode scalar value is a
//! unit. Under [`UnitScheme::WhitespaceToken`] a unit is a maximal run of
//! non-whitespace together with the whitespace that follows it; whitespace
//! before the first run belongs to the first unit.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitScheme {
    #[default]
    Character,
    WhitespaceToken,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct TextSeq {
    pub text: String,
    #[serde(default)]
    pub scheme: UnitScheme,
}

/// Result of [`split`]. `CannotSplit` is a signal, not a failure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Split {
    Parts { head: TextSeq, tail: TextSeq },
    CannotSplit,
}

impl Split {
    pub fn into_parts(self) -> Option<(TextSeq, TextSeq)> {
        match self {
            Split::Parts { head, tail } => Some((head, tail)),
            Split::CannotSplit => None,
        }
    }
}

impl TextSeq {
    pub fn new(text: impl Into<String>, scheme: UnitScheme) -> Self {
        TextSeq { text: text.into(), scheme }
    }

    pub fn chars(text: impl Into<String>) -> Self {
        Self::new(text, UnitScheme::Character)
    }

    pub fn tokens(text: impl Into<String>) -> Self {
        Self::new(text, UnitScheme::WhitespaceToken)
    }

    pub fn empty(scheme: UnitScheme) -> Self {
        Self::new(String::new(), scheme)
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn is_empty(&self) -> bool {
        self.text.is_empty()
    }

    pub fn unit_count(&self) -> usize {
        unit_count(self)
    }

    /// `self · other`, keeping this sequence's scheme.
    pub fn concat(&self, other: &TextSeq) -> TextSeq {
        let mut text = String::with_capacity(self.text.len() + other.text.len());
        text.push_str(&self.text);
        text.push_str(&other.text);
        TextSeq { text, scheme: self.scheme }
    }

    pub fn starts_with(&self, prefix: &TextSeq) -> bool {
        self.text.starts_with(&prefix.text)
    }

    /// The remainder of `self` after `prefix`, if `self` extends it.
    pub fn strip_prefix(&self, prefix: &TextSeq) -> Option<TextSeq> {
        self.text
            .strip_prefix(prefix.text.as_str())
            .map(|rest| TextSeq::new(rest, self.scheme))
    }

    /// Byte offsets at which each unit ends. The last entry is `text.len()`
    /// whenever the sequence has at least one unit.
    fn unit_ends(&self) -> Vec<usize> {
        match self.scheme {
            UnitScheme::Character => self
                .text
                .char_indices()
                .map(|(i, c)| i + c.len_utf8())
                .collect(),
            UnitScheme::WhitespaceToken => {
                let mut ends = Vec::new();
                let mut in_token = false;
                let mut seen_token = false;
                for (i, c) in self.text.char_indices() {
                    let ws = c.is_whitespace();
                    if !ws && !in_token && seen_token {
                        // a new run starts here; the previous unit ends here
                        ends.push(i);
                    }
                    if !ws {
                        seen_token = true;
                    }
                    in_token = !ws;
                }
                if seen_token {
                    ends.push(self.text.len());
                }
                ends
            }
        }
    }
}

impl fmt::Display for TextSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

pub fn unit_count(s: &TextSeq) -> usize {
    match s.scheme {
        UnitScheme::Character => s.text.chars().count(),
        UnitScheme::WhitespaceToken => s.text.split_whitespace().count(),
    }
}

/// Number of head units a split at `alpha` produces for a sequence of
/// `len` units: `clamp(ceil(alpha * len), 1, len - 1)`. `None` when `len <= 1`.
pub fn split_point(len: usize, alpha: f64) -> Option<usize> {
    assert!(alpha > 0.0 && alpha < 1.0, "split fraction must lie in (0, 1), got {alpha}");
    if len <= 1 {
        return None;
    }
    let k = (alpha * len as f64).ceil();
    let k = if k.is_finite() { k as usize } else { 1 };
    Some(k.clamp(1, len - 1))
}

/// Splits off the first `alpha` fraction of `s`'s units.
///
/// Panics if `alpha` is outside `(0, 1)`.
pub fn split(s: &TextSeq, alpha: f64) -> Split {
    let ends = s.unit_ends();
    match split_point(ends.len(), alpha) {
        None => Split::CannotSplit,
        Some(k) => split_at_units(s, &ends, k),
    }
}

/// Splits after the first `k` units; `CannotSplit` unless `1 <= k < len`.
pub fn split_units(s: &TextSeq, k: usize) -> Split {
    let ends = s.unit_ends();
    if k == 0 || k >= ends.len() {
        return Split::CannotSplit;
    }
    split_at_units(s, &ends, k)
}

fn split_at_units(s: &TextSeq, ends: &[usize], k: usize) -> Split {
    let at = ends[k - 1];
    Split::Parts {
        head: TextSeq::new(&s.text[..at], s.scheme),
        tail: TextSeq::new(&s.text[at..], s.scheme),
    }
}
