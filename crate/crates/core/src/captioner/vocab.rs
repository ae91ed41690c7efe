use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, IoContext, Result};

pub const PAD: usize = 0;
pub const BOS: usize = 1;
pub const EOS: usize = 2;
pub const UNK: usize = 3;

const RESERVED: [&str; 4] = ["<pad>", "<bos>", "<eos>", "<unk>"];

/// Lowercases `text`, turns every ASCII punctuation character into its own
/// token and splits on whitespace.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut spaced = String::with_capacity(text.len() + 8);
    for ch in text.chars().flat_map(char::to_lowercase) {
        if ch.is_ascii_punctuation() {
            spaced.push(' ');
            spaced.push(ch);
            spaced.push(' ');
        } else {
            spaced.push(ch);
        }
    }
    spaced.split_whitespace().map(str::to_string).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

/// Word indices framed by `BOS` and `EOS`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TokenSequence {
    ids: Vec<usize>,
}

impl TokenSequence {
    /// Frames `words` (which must not contain reserved markers) with
    /// `BOS`/`EOS`.
    pub fn from_words(words: &[usize], vocab_size: usize) -> Result<Self> {
        if let Some(&w) = words.iter().find(|&&w| w >= vocab_size || w == BOS || w == EOS || w == PAD) {
            return Err(Error::InvalidArgument(format!(
                "token index {w} is reserved or outside a vocabulary of {vocab_size}"
            )));
        }
        let mut ids = Vec::with_capacity(words.len() + 2);
        ids.push(BOS);
        ids.extend_from_slice(words);
        ids.push(EOS);
        Ok(Self { ids })
    }

    /// All indices including `BOS` and `EOS`.
    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn words(&self) -> &[usize] {
        &self.ids[1..self.ids.len() - 1]
    }

    /// Word count `N`, markers excluded.
    pub fn len(&self) -> usize {
        self.ids.len() - 2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Vocabulary {
    /// Reserved tokens followed by `words` in first-seen order.
    pub fn from_tokens<S: AsRef<str>>(words: impl IntoIterator<Item = S>) -> Result<Self> {
        let mut tokens: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
        let mut index: HashMap<String, usize> = tokens.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();
        for w in words {
            let w = w.as_ref();
            if w.is_empty() || w.chars().any(char::is_whitespace) || w.to_lowercase() != w {
                return Err(Error::InvalidArgument(format!("bad vocabulary token `{w}`")));
            }
            if !index.contains_key(w) {
                index.insert(w.to_string(), tokens.len());
                tokens.push(w.to_string());
            }
        }
        Ok(Self { tokens, index })
    }

    /// Vocabulary over the tokens of `captions`, in first-seen order.
    pub fn build<S: AsRef<str>>(captions: impl IntoIterator<Item = S>) -> Self {
        let words: Vec<String> = captions.into_iter().flat_map(|c| tokenize(c.as_ref())).collect();
        Self::from_tokens(words).expect("tokenizer output is always valid")
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// Tokenizes `text`; unknown words map to `UNK`.
    pub fn encode(&self, text: &str) -> TokenSequence {
        let words: Vec<usize> = tokenize(text).iter().map(|t| self.id(t).unwrap_or(UNK)).collect();
        TokenSequence::from_words(&words, self.len()).expect("ids come from this vocabulary")
    }

    /// Space-joined words of `seq`.
    pub fn decode(&self, seq: &TokenSequence) -> String {
        seq.words()
            .iter()
            .map(|&i| self.token(i).unwrap_or(RESERVED[UNK]))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// One token per line; the first four lines are the reserved markers.
    pub fn to_text(&self) -> String {
        self.tokens.iter().map(|t| format!("{t}\n")).collect()
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let lines: Vec<&str> = text.lines().collect();
        if lines.len() < RESERVED.len() || lines[..RESERVED.len()] != RESERVED {
            return Err(Error::Format(format!(
                "vocabulary must start with the reserved tokens {RESERVED:?}"
            )));
        }
        let rest = &lines[RESERVED.len()..];
        let vocab = Self::from_tokens(rest.iter().copied())?;
        if vocab.len() != lines.len() {
            return Err(Error::Format("vocabulary contains duplicate tokens".into()));
        }
        Ok(vocab)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).at(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path).at(path)?)
    }
}
