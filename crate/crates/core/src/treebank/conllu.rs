//! CoNLL-U reading and writing.
//!
//! Only ID, FORM, UPOS, HEAD and DEPREL are interpreted. The remaining
//! columns are carried through untouched, as are comment lines,
//! multiword-token ranges (`1-2`) and empty nodes (`5.1`), so that a
//! read/write cycle reproduces its input.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Columns that are stored but not interpreted.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExtraColumns {
    pub lemma: String,
    pub xpos: String,
    pub feats: String,
    pub deps: String,
    pub misc: String,
}

impl ExtraColumns {
    /// All-underscore columns, as used for freshly created tokens.
    pub fn empty() -> Self {
        ExtraColumns {
            lemma: "_".into(),
            xpos: "_".into(),
            feats: "_".into(),
            deps: "_".into(),
            misc: "_".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    /// 1-based surface position.
    pub id: usize,
    pub form: String,
    pub upos: String,
    /// Head position, 0 for the root.
    pub head: usize,
    pub deprel: String,
    pub extra: ExtraColumns,
}

impl Token {
    pub fn new(
        id: usize,
        form: impl Into<String>,
        upos: impl Into<String>,
        head: usize,
        deprel: impl Into<String>,
    ) -> Self {
        Token {
            id,
            form: form.into(),
            upos: upos.into(),
            head,
            deprel: deprel.into(),
            extra: ExtraColumns::empty(),
        }
    }
}

/// A raw line kept verbatim (multiword-token range or empty node).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreservedLine {
    /// Number of regular tokens preceding this line in the block.
    pub position: usize,
    pub text: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Sentence {
    pub tokens: Vec<Token>,
    /// Comment lines without their leading `#`.
    pub comments: Vec<String>,
    pub preserved: Vec<PreservedLine>,
    /// Grouping key for per-treebank analysis.
    pub treebank_id: String,
}

impl Sentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn forms(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.form.as_str())
    }

    /// Head array (index i holds the head of token i+1).
    pub fn heads(&self) -> Vec<usize> {
        self.tokens.iter().map(|t| t.head).collect()
    }

    pub fn labels(&self) -> Vec<String> {
        self.tokens.iter().map(|t| t.deprel.clone()).collect()
    }

    /// Copy of this sentence with heads and labels replaced.
    pub fn with_analysis(&self, heads: &[usize], labels: &[String]) -> Sentence {
        let mut out = self.clone();
        for ((token, &head), label) in out.tokens.iter_mut().zip(heads).zip(labels) {
            token.head = head;
            token.deprel = label.clone();
        }
        out
    }
}

/// Parse CoNLL-U text. Sentences get an empty `treebank_id`.
pub fn read_conllu(text: &str) -> Result<Vec<Sentence>> {
    read_conllu_with_id(text, "")
}

/// Parse CoNLL-U text, tagging every sentence with `treebank_id`.
pub fn read_conllu_with_id(text: &str, treebank_id: &str) -> Result<Vec<Sentence>> {
    let mut sentences = Vec::new();
    let mut current = Sentence {
        treebank_id: treebank_id.to_owned(),
        ..Sentence::default()
    };
    let mut in_block = false;

    for (idx, raw) in text.split('\n').enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);

        if line.trim().is_empty() {
            if in_block {
                finish_block(&mut current, line_no)?;
                sentences.push(std::mem::replace(
                    &mut current,
                    Sentence {
                        treebank_id: treebank_id.to_owned(),
                        ..Sentence::default()
                    },
                ));
                in_block = false;
            }
            continue;
        }
        in_block = true;

        if let Some(comment) = line.strip_prefix('#') {
            if current.tokens.is_empty() && current.preserved.is_empty() {
                current.comments.push(comment.to_owned());
            } else {
                current.preserved.push(PreservedLine {
                    position: current.tokens.len(),
                    text: line.to_owned(),
                });
            }
            continue;
        }

        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(Error::Format {
                line: line_no,
                message: format!("expected 10 tab-separated columns, found {}", cols.len()),
            });
        }

        if cols[0].contains('-') || cols[0].contains('.') {
            current.preserved.push(PreservedLine {
                position: current.tokens.len(),
                text: line.to_owned(),
            });
            continue;
        }

        let id: usize = cols[0].parse().map_err(|_| Error::Format {
            line: line_no,
            message: format!("token id {:?} is not an integer", cols[0]),
        })?;
        let expected = current.tokens.len() + 1;
        if id != expected {
            return Err(Error::Format {
                line: line_no,
                message: format!("token id {id} breaks the sequence (expected {expected})"),
            });
        }
        let head: usize = cols[6].parse().map_err(|_| Error::Format {
            line: line_no,
            message: format!("head {:?} is not a non-negative integer", cols[6]),
        })?;
        if head == id {
            return Err(Error::Format {
                line: line_no,
                message: format!("token {id} is its own head"),
            });
        }

        current.tokens.push(Token {
            id,
            form: cols[1].to_owned(),
            upos: cols[3].to_owned(),
            head,
            deprel: cols[7].to_owned(),
            extra: ExtraColumns {
                lemma: cols[2].to_owned(),
                xpos: cols[4].to_owned(),
                feats: cols[5].to_owned(),
                deps: cols[8].to_owned(),
                misc: cols[9].to_owned(),
            },
        });
    }

    if in_block {
        let last_line = text.split('\n').count();
        finish_block(&mut current, last_line)?;
        sentences.push(current);
    }

    Ok(sentences)
}

fn finish_block(sentence: &mut Sentence, line: usize) -> Result<()> {
    if sentence.tokens.is_empty() {
        return Err(Error::Format {
            line,
            message: "sentence block without token lines".into(),
        });
    }
    Ok(())
}

/// Read a CoNLL-U file; `treebank_id` defaults to the file stem.
pub fn read_conllu_file(path: impl AsRef<Path>, treebank_id: Option<&str>) -> Result<Vec<Sentence>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let id = match treebank_id {
        Some(id) => id.to_owned(),
        None => path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
    };
    read_conllu_with_id(&text, &id)
}

/// Serialize sentences; every block is terminated by an empty line.
pub fn write_conllu(sentences: &[Sentence]) -> String {
    let mut out = String::new();
    for sentence in sentences {
        for comment in &sentence.comments {
            out.push('#');
            out.push_str(comment);
            out.push('\n');
        }
        let mut preserved = sentence.preserved.iter().peekable();
        for (i, token) in sentence.tokens.iter().enumerate() {
            while let Some(line) = preserved.next_if(|l| l.position <= i) {
                out.push_str(&line.text);
                out.push('\n');
            }
            let e = &token.extra;
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                token.id, token.form, e.lemma, token.upos, e.xpos, e.feats, token.head,
                token.deprel, e.deps, e.misc
            );
        }
        for line in preserved {
            out.push_str(&line.text);
            out.push('\n');
        }
        out.push('\n');
    }
    out
}
