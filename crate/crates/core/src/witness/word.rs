use serde::Serialize;

use super::WitnessError;
use crate::bits::BitSet;
use crate::model::{StateId, Symbol};

/// Sketch of a leader run: visited states with the value written when
/// leaving each (`None` for reads, ε-moves and stutters), the state reached
/// at the end, and the positions at which first writes become available.
///
/// Positions are 0-based: `sigma[l] = i` makes the `l`-th first write
/// readable from step `i` on.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Witness {
    pub word: Vec<(StateId, Option<Symbol>)>,
    pub target: StateId,
    pub sigma: Vec<usize>,
}

impl Witness {
    pub fn new(
        word: Vec<(StateId, Option<Symbol>)>,
        target: StateId,
        sigma: Vec<usize>,
    ) -> Result<Self, WitnessError> {
        if sigma.windows(2).any(|w| w[0] > w[1]) {
            return Err(WitnessError::Malformed(
                "first-write positions must be non-decreasing".into(),
            ));
        }
        if sigma.last().is_some_and(|&s| s >= word.len()) {
            return Err(WitnessError::Malformed(
                "first-write position past the end of the word".into(),
            ));
        }
        Ok(Witness {
            word,
            target,
            sigma,
        })
    }

    /// The order-0 witness with an empty word at `q`.
    pub fn empty(q: StateId) -> Self {
        Witness {
            word: Vec::new(),
            target: q,
            sigma: Vec::new(),
        }
    }

    pub fn init(&self) -> StateId {
        self.word.first().map_or(self.target, |&(q, _)| q)
    }

    pub fn order(&self) -> usize {
        self.sigma.len()
    }

    pub fn len(&self) -> usize {
        self.word.len()
    }

    pub fn is_empty(&self) -> bool {
        self.word.is_empty()
    }

    /// State after step `i`.
    pub fn state_after(&self, i: usize) -> StateId {
        self.word.get(i + 1).map_or(self.target, |&(q, _)| q)
    }

    /// Word states pairwise distinct.
    pub fn is_short(&self) -> bool {
        self.first_repetition().is_none()
    }

    /// Least `x` whose state recurs, with the least such recurrence `y`.
    fn first_repetition(&self) -> Option<(usize, usize)> {
        self.word.iter().enumerate().find_map(|(x, &(q, _))| {
            self.word[x + 1..]
                .iter()
                .position(|&(r, _)| r == q)
                .map(|off| (x, x + 1 + off))
        })
    }

    /// Remove the loop between the first repeated state and its next
    /// occurrence; identity on short witnesses.
    pub fn shrink(&self) -> Witness {
        let Some((x, y)) = self.first_repetition() else {
            return self.clone();
        };
        let mut word = self.word[..x].to_vec();
        word.extend_from_slice(&self.word[y..]);
        let sigma = self
            .sigma
            .iter()
            .map(|&s| match s {
                s if s < x => s,
                s if s <= y => x,
                s => s - y + x,
            })
            .collect();
        Witness {
            word,
            target: self.target,
            sigma,
        }
    }

    /// [`Witness::shrink`] until the word is repetition-free.
    ///
    /// States before the first repetition never recur, so every cut happens
    /// at or after the previous one and a single forward pass suffices.
    pub fn shrink_star(&self) -> Witness {
        let n = self.word.len();
        let width = self.word.iter().map(|&(q, _)| q + 1).max().unwrap_or(0);
        let mut remaining = vec![0u32; width];
        for &(q, _) in &self.word {
            remaining[q] += 1;
        }
        let mut word = Vec::with_capacity(n);
        let mut sigma = self.sigma.clone();
        // The current word is `word` followed by `self.word[i..]`.
        let mut i = 0;
        while i < n {
            let q = self.word[i].0;
            remaining[q] -= 1;
            if remaining[q] == 0 {
                word.push(self.word[i]);
                i += 1;
                continue;
            }
            let y = i
                + 1
                + self.word[i + 1..]
                    .iter()
                    .position(|&(r, _)| r == q)
                    .expect("a later occurrence exists");
            for &(r, _) in &self.word[i + 1..y] {
                remaining[r] -= 1;
            }
            let x = word.len();
            let cut = y - i;
            for s in &mut sigma {
                *s = match *s {
                    s if s < x => s,
                    s if s <= x + cut => x,
                    s => s - cut,
                };
            }
            i = y;
        }
        Witness {
            word,
            target: self.target,
            sigma,
        }
    }
}

/// `x × y`: append the runs, shifting the first writes of `y`.
pub fn concat(x: &Witness, y: &Witness) -> Result<Witness, WitnessError> {
    if y.init() != x.target {
        return Err(WitnessError::Mismatch {
            target: x.target,
            init: y.init(),
        });
    }
    let mut word = Vec::with_capacity(x.len() + y.len());
    word.extend_from_slice(&x.word);
    word.extend_from_slice(&y.word);
    let mut sigma = Vec::with_capacity(x.order() + y.order());
    sigma.extend_from_slice(&x.sigma);
    sigma.extend(y.sigma.iter().map(|&s| s + x.len()));
    Ok(Witness {
        word,
        target: y.target,
        sigma,
    })
}

/// `x ⊗ y = shrink_star(x × y)`.
pub fn short_concat(x: &Witness, y: &Witness) -> Result<Witness, WitnessError> {
    Ok(concat(x, y)?.shrink_star())
}

/// A sequence of pairwise distinct symbols, the values of successive first
/// writes.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct FirstWriteSeq(Vec<Symbol>);

impl FirstWriteSeq {
    pub fn new(values: Vec<Symbol>) -> Result<Self, WitnessError> {
        let mut seen = BitSet::EMPTY;
        for &v in &values {
            if !seen.insert(v) {
                return Err(WitnessError::Malformed(format!(
                    "symbol {v} repeated in first-write sequence"
                )));
            }
        }
        Ok(FirstWriteSeq(values))
    }

    pub fn values(&self) -> &[Symbol] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_set(&self) -> BitSet {
        self.0.iter().copied().collect()
    }

    /// `self` extended by `b`, if `b` is new.
    pub fn pushed(&self, b: Symbol) -> Option<Self> {
        (!self.0.contains(&b)).then(|| {
            let mut v = self.0.clone();
            v.push(b);
            FirstWriteSeq(v)
        })
    }

    pub fn prefix(&self, k: usize) -> Self {
        FirstWriteSeq(self.0[..k].to_vec())
    }

    /// Values whose first write is available at step `i`:
    /// `{ β_l | σ(l) <= i }`, over the first `min(|β|, |σ|)` entries.
    pub fn available(&self, sigma: &[usize], i: usize) -> BitSet {
        self.0
            .iter()
            .zip(sigma)
            .filter(|&(_, &s)| s <= i)
            .map(|(&b, _)| b)
            .collect()
    }
}
