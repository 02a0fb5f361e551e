use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A node address `(i_1, ..., i_n)` in the subdivision tree; `i_1` is always 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Word(Vec<u64>);

impl Word {
    pub fn root() -> Self {
        Word(vec![1])
    }

    pub fn new(letters: Vec<u64>) -> Result<Self> {
        if letters.is_empty() {
            return Err(Error::InvalidWord { word: "()".into(), reason: "empty word".into() });
        }
        if letters.iter().any(|&l| l == 0) {
            return Err(Error::InvalidWord {
                word: format!("{letters:?}"),
                reason: "letters start at 1".into(),
            });
        }
        Ok(Word(letters))
    }

    pub fn letters(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last(&self) -> u64 {
        *self.0.last().expect("words are nonempty")
    }

    pub fn child(&self, letter: u64) -> Word {
        let mut v = self.0.clone();
        v.push(letter);
        Word(v)
    }

    pub fn parent(&self) -> Option<Word> {
        (self.0.len() > 1).then(|| Word(self.0[..self.0.len() - 1].to_vec()))
    }

    pub fn prefix(&self, len: usize) -> Word {
        Word(self.0[..len].to_vec())
    }

    pub fn is_prefix_of(&self, other: &Word) -> bool {
        other.0.starts_with(&self.0)
    }

    /// Checks `1 ≤ i_j ≤ m_j` for every letter.
    pub fn validate(&self, m: &[u64]) -> Result<()> {
        if self.0.len() > m.len() {
            return Err(Error::InvalidWord {
                word: self.to_string(),
                reason: format!("length exceeds the {} available levels", m.len()),
            });
        }
        for (j, (&l, &mj)) in self.0.iter().zip(m).enumerate() {
            if l < 1 || l > mj {
                return Err(Error::InvalidWord {
                    word: self.to_string(),
                    reason: format!("letter {} is {l}, allowed 1..={mj}", j + 1),
                });
            }
        }
        Ok(())
    }

    /// Parity pattern below the root: `true` where the letter is even, i.e.
    /// where the word took the upper half of a bipartition.
    pub fn pattern(&self) -> Vec<bool> {
        self.0[1..].iter().map(|l| l % 2 == 0).collect()
    }
}

/// `ω⁺`: the last letter incremented.
pub fn successor(w: &Word, m: &[u64]) -> Result<Word> {
    w.validate(m)?;
    let n = w.len();
    if w.last() == m[n - 1] {
        return Err(Error::NoSuccessor(w.to_string()));
    }
    let mut v = w.0.clone();
    v[n - 1] += 1;
    Ok(Word(v))
}

/// `ω ∗ ν`.
pub fn concat(a: &Word, b: &Word) -> Word {
    let mut v = a.0.clone();
    v.extend_from_slice(&b.0);
    Word(v)
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, ")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(v: &[u64]) -> Word {
        Word::new(v.to_vec()).unwrap()
    }

    #[test]
    fn successor_cases() {
        assert_eq!(successor(&w(&[1, 3]), &[1, 6]).unwrap(), w(&[1, 4]));
        assert!(matches!(successor(&w(&[1, 6]), &[1, 6]), Err(Error::NoSuccessor(_))));
        let c = concat(&w(&[1]), &w(&[2, 5]));
        assert_eq!(successor(&c, &[1, 4, 6]).unwrap(), w(&[1, 2, 6]));
        assert!(successor(&w(&[1, 7]), &[1, 6]).is_err());
    }

    #[test]
    fn display_and_pattern() {
        let x = w(&[1, 4, 3]);
        assert_eq!(x.to_string(), "(1,4,3)");
        assert_eq!(x.pattern(), vec![true, false]);
        assert_eq!(x.parent().unwrap(), w(&[1, 4]));
        assert!(Word::new(vec![]).is_err());
    }
}
