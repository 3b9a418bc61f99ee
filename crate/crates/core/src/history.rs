use alloc::vec::Vec;
use core::ops::Index;

use crate::error::{Error, Result};
use crate::game::{ActionIndex, JointAction};

/// Completed rounds of a play, oldest first.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct History {
    steps: Vec<JointAction>,
}

impl History {
    pub fn new() -> Self {
        History { steps: Vec::new() }
    }

    pub fn from_steps(steps: Vec<JointAction>) -> Self {
        History { steps }
    }

    /// Parses `(row, col)` action pairs, rejecting anything outside `{0, 1}`.
    pub fn from_pairs(pairs: &[(u8, u8)]) -> Result<Self> {
        let steps = pairs
            .iter()
            .enumerate()
            .map(|(t, &(r, c))| match (ActionIndex::new(r), ActionIndex::new(c)) {
                (Some(row), Some(col)) => Ok(JointAction::new(row, col)),
                _ => Err(Error::MalformedHistory(alloc::format!("round {t}: ({r}, {c}) is not a joint action"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(History { steps })
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn push(&mut self, step: JointAction) {
        self.steps.push(step);
    }

    /// A copy of this history with one more round appended.
    pub fn extended(&self, step: JointAction) -> History {
        let mut steps = Vec::with_capacity(self.steps.len() + 1);
        steps.extend_from_slice(&self.steps);
        steps.push(step);
        History { steps }
    }

    pub fn steps(&self) -> &[JointAction] {
        &self.steps
    }

    pub fn last(&self) -> Option<JointAction> {
        self.steps.last().copied()
    }

    pub fn iter(&self) -> core::slice::Iter<'_, JointAction> {
        self.steps.iter()
    }

    /// The prefix of the first `t` rounds.
    pub fn prefix(&self, t: usize) -> History {
        History { steps: self.steps[..t.min(self.steps.len())].to_vec() }
    }
}

impl Index<usize> for History {
    type Output = JointAction;

    fn index(&self, i: usize) -> &JointAction {
        &self.steps[i]
    }
}

impl<'a> IntoIterator for &'a History {
    type Item = &'a JointAction;
    type IntoIter = core::slice::Iter<'a, JointAction>;

    fn into_iter(self) -> Self::IntoIter {
        self.steps.iter()
    }
}

/// All histories of exactly `len` rounds, in lexicographic cell order.
pub fn all_histories(len: usize) -> Vec<History> {
    let mut out = alloc::vec![History::new()];
    for _ in 0..len {
        out = out
            .iter()
            .flat_map(|h| JointAction::ALL.iter().map(move |&j| h.extended(j)))
            .collect();
    }
    out
}
