//! Empty-cell forms.
//!
//! Empty `<td>` cells in the annotations come in a handful of markup variants
//! (nothing at all, a lone space, an empty bold pair, ...). Each variant gets
//! its own symbol so a model can learn to tell them apart. The variants are
//! configuration: a TOML table mapping form id to the exact concatenated
//! markup.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::vocab::EMPTY_FORM_COUNT;

/// Shipped default table.
pub const DEFAULT_FORMS_TOML: &str = include_str!("default_forms.toml");

#[derive(Debug, Error)]
pub enum FormError {
    #[error("empty cell markup {0:?} matches no configured empty form")]
    UnknownEmptyForm(String),
    #[error("empty-form table: {0}")]
    InvalidTable(String),
    #[error("reading empty-form table: {0}")]
    Io(#[from] std::io::Error),
}

/// What a cell's token list encodes to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellClass {
    NonEmpty,
    Empty(u8),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmptyFormTable {
    markups: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct FormFile {
    forms: BTreeMap<String, String>,
}

impl Default for EmptyFormTable {
    fn default() -> Self {
        Self::from_toml(DEFAULT_FORMS_TOML).expect("bundled form table is valid")
    }
}

impl EmptyFormTable {
    /// Builds a table from markups indexed by form id. Forms 0 and 1 must be
    /// the literally empty cell and the single-space cell.
    pub fn new(markups: Vec<String>) -> Result<Self, FormError> {
        if markups.len() != EMPTY_FORM_COUNT as usize {
            return Err(FormError::InvalidTable(format!(
                "expected {} forms, found {}",
                EMPTY_FORM_COUNT,
                markups.len()
            )));
        }
        if !markups[0].is_empty() || markups[1] != " " {
            return Err(FormError::InvalidTable(
                "form 0 must be \"\" and form 1 must be \" \"".into(),
            ));
        }
        for (i, m) in markups.iter().enumerate() {
            if has_visible_text(&split_markup(m)) {
                return Err(FormError::InvalidTable(format!(
                    "form {i} ({m:?}) contains visible text"
                )));
            }
            if markups[..i].contains(m) {
                return Err(FormError::InvalidTable(format!("form {i} duplicates {m:?}")));
            }
        }
        Ok(Self { markups })
    }

    pub fn from_toml(text: &str) -> Result<Self, FormError> {
        let file: FormFile = toml::from_str(text).map_err(|e| FormError::InvalidTable(e.to_string()))?;
        let mut markups = vec![None; EMPTY_FORM_COUNT as usize];
        for (key, markup) in file.forms {
            let id: usize = key
                .parse()
                .ok()
                .filter(|&i| i < EMPTY_FORM_COUNT as usize)
                .ok_or_else(|| FormError::InvalidTable(format!("bad form id {key:?}")))?;
            markups[id] = Some(markup);
        }
        let markups = markups
            .into_iter()
            .enumerate()
            .map(|(i, m)| m.ok_or_else(|| FormError::InvalidTable(format!("form {i} missing"))))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(markups)
    }

    pub fn load(path: &Path) -> Result<Self, FormError> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        let forms = self
            .markups
            .iter()
            .enumerate()
            .map(|(i, m)| (i.to_string(), m.clone()))
            .collect();
        let body = toml::to_string(&FormFile { forms }).expect("string map serializes");
        format!("# empty-cell markup per form id\n{body}")
    }

    pub fn markup(&self, form: u8) -> Option<&str> {
        self.markups.get(form as usize).map(String::as_str)
    }

    pub fn form_of(&self, markup: &str) -> Option<u8> {
        self.markups.iter().position(|m| m == markup).map(|i| i as u8)
    }

    pub fn markups(&self) -> &[String] {
        &self.markups
    }
}

/// `<b>`, `</sup>` and similar. A lone `<` or `>` character token is text.
pub fn is_markup_tag(token: &str) -> bool {
    let Some(inner) = token.strip_prefix('<').and_then(|t| t.strip_suffix('>')) else {
        return false;
    };
    let name = inner.strip_prefix('/').unwrap_or(inner);
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic()) && chars.all(|c| c.is_ascii_alphanumeric())
}

/// True when some non-tag token carries a non-whitespace character.
pub fn has_visible_text<S: AsRef<str>>(tokens: &[S]) -> bool {
    tokens
        .iter()
        .map(AsRef::as_ref)
        .any(|t| !is_markup_tag(t) && t.chars().any(|c| !c.is_whitespace()))
}

/// Splits a markup string into tag and character tokens, the granularity the
/// annotations use.
pub fn split_markup(markup: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut rest = markup;
    while let Some(c) = rest.chars().next() {
        if c == '<' {
            if let Some(end) = rest.find('>') {
                if is_markup_tag(&rest[..=end]) {
                    out.push(rest[..=end].to_string());
                    rest = &rest[end + 1..];
                    continue;
                }
            }
        }
        out.push(c.to_string());
        rest = &rest[c.len_utf8()..];
    }
    out
}

/// Decides whether a cell is non-empty or which empty form it uses.
pub fn classify_empty_cell<S: AsRef<str>>(tokens: &[S], forms: &EmptyFormTable) -> Result<CellClass, FormError> {
    if has_visible_text(tokens) {
        return Ok(CellClass::NonEmpty);
    }
    let markup: String = tokens.iter().map(AsRef::as_ref).collect();
    forms
        .form_of(&markup)
        .map(CellClass::Empty)
        .ok_or(FormError::UnknownEmptyForm(markup))
}
