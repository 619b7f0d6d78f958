use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::sim::TacticLabel;

/// Which heads a model is trained to predict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputKind {
    /// Tactic only (4-way softmax).
    Multiclass,
    /// Attributes only (2 sigmoids).
    Multilabel,
    /// Both heads.
    Multihead,
}

impl OutputKind {
    pub fn has_tactic(self) -> bool {
        matches!(self, OutputKind::Multiclass | OutputKind::Multihead)
    }

    pub fn has_attributes(self) -> bool {
        matches!(self, OutputKind::Multilabel | OutputKind::Multihead)
    }

    pub fn short(self) -> &'static str {
        match self {
            OutputKind::Multiclass => "mc",
            OutputKind::Multilabel => "ml",
            OutputKind::Multihead => "mh",
        }
    }
}

impl fmt::Display for OutputKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short())
    }
}

impl FromStr for OutputKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mc" | "multiclass" => Ok(OutputKind::Multiclass),
            "ml" | "multilabel" => Ok(OutputKind::Multilabel),
            "mh" | "multihead" => Ok(OutputKind::Multihead),
            other => Err(Error::config(format!("unknown output kind '{other}'"))),
        }
    }
}

/// Labels for a set of instances. With `sequence_len = Some(T)` each label
/// is conceptually replicated along `T` time steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSet {
    pub kind: OutputKind,
    /// Tactic id per instance (present for multiclass and multihead).
    pub tactic: Option<Vec<u8>>,
    /// `[comms, pronav]` per instance (present for multilabel and multihead).
    pub attributes: Option<Vec<[u8; 2]>>,
    pub sequence_len: Option<usize>,
}

impl LabelSet {
    pub fn len(&self) -> usize {
        self.tactic
            .as_ref()
            .map(Vec::len)
            .or_else(|| self.attributes.as_ref().map(Vec::len))
            .unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Tactic labels expanded along time: `[instance][time]`.
    pub fn tactic_sequence(&self) -> Option<Vec<Vec<u8>>> {
        let t = self.sequence_len?;
        Some(self.tactic.as_ref()?.iter().map(|&id| vec![id; t]).collect())
    }

    /// Attribute labels expanded along time: `[instance][time]`.
    pub fn attribute_sequence(&self) -> Option<Vec<Vec<[u8; 2]>>> {
        let t = self.sequence_len?;
        Some(self.attributes.as_ref()?.iter().map(|&a| vec![a; t]).collect())
    }
}

/// Builds labels from raw tactic ids.
pub fn make_labels(tactic_ids: &[u8], kind: OutputKind, sequence_len: Option<usize>) -> Result<LabelSet> {
    let tactics = tactic_ids
        .iter()
        .map(|&id| TacticLabel::from_id(id))
        .collect::<Result<Vec<_>>>()?;
    Ok(LabelSet {
        kind,
        tactic: kind.has_tactic().then(|| tactics.iter().map(|t| t.id()).collect()),
        attributes: kind
            .has_attributes()
            .then(|| tactics.iter().map(|t| t.attributes()).collect()),
        sequence_len,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn attribute_bits() {
        let l = make_labels(&[2, 0, 3, 1], OutputKind::Multilabel, None).unwrap();
        assert_eq!(l.attributes.unwrap(), vec![[1, 0], [0, 0], [1, 1], [0, 1]]);
        assert!(l.tactic.is_none());
    }

    #[test]
    fn multihead_has_both() {
        let l = make_labels(&[2], OutputKind::Multihead, None).unwrap();
        assert_eq!(l.tactic.unwrap(), vec![2]);
        assert_eq!(l.attributes.unwrap(), vec![[1, 0]]);
    }

    #[test]
    fn sequence_replication() {
        let l = make_labels(&[3], OutputKind::Multihead, Some(20)).unwrap();
        let t = l.tactic_sequence().unwrap();
        let a = l.attribute_sequence().unwrap();
        assert_eq!(t, vec![vec![3u8; 20]]);
        assert_eq!(a, vec![vec![[1u8, 1]; 20]]);
    }

    #[test]
    fn unknown_id() {
        assert!(make_labels(&[0, 4], OutputKind::Multiclass, None).is_err());
    }
}
