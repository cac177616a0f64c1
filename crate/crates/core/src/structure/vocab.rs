use std::collections::HashMap;
use std::fmt;
use std::io::{self, Write};

/// Largest colspan/rowspan value the alphabet can express.
pub const MAX_SPAN: u8 = 10;
/// Number of dedicated empty-cell symbols.
pub const EMPTY_FORM_COUNT: u8 = 11;
/// Number of non-control symbols.
pub const ALPHABET_SIZE: usize = 39;
/// Alphabet plus START/END/PAD/UNKNOWN.
pub const VOCAB_SIZE: usize = ALPHABET_SIZE + 4;

const COLSPAN_BASE: usize = 10;
const ROWSPAN_BASE: usize = COLSPAN_BASE + (MAX_SPAN as usize - 1);
const EMPTY_BASE: usize = ROWSPAN_BASE + (MAX_SPAN as usize - 1);

/// One structure symbol.
///
/// `Cell` stands for a whole non-empty `<td>…</td>`; cells with a colspan or
/// rowspan are spelled out as `SpanOpen`, attribute symbols, `SpanEnd`,
/// `CellClose`. Empty plain cells use one of the `Empty` forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Token {
    TheadOpen,
    TheadClose,
    TbodyOpen,
    TbodyClose,
    TrOpen,
    TrClose,
    Cell,
    SpanOpen,
    SpanEnd,
    CellClose,
    /// colspan value in `2..=10`
    Colspan(u8),
    /// rowspan value in `2..=10`
    Rowspan(u8),
    /// empty-form id in `0..=10`
    Empty(u8),
    Start,
    End,
    Pad,
    Unknown,
}

impl Token {
    pub fn id(self) -> usize {
        match self {
            Token::TheadOpen => 0,
            Token::TheadClose => 1,
            Token::TbodyOpen => 2,
            Token::TbodyClose => 3,
            Token::TrOpen => 4,
            Token::TrClose => 5,
            Token::Cell => 6,
            Token::SpanOpen => 7,
            Token::SpanEnd => 8,
            Token::CellClose => 9,
            Token::Colspan(n) => COLSPAN_BASE + n as usize - 2,
            Token::Rowspan(n) => ROWSPAN_BASE + n as usize - 2,
            Token::Empty(k) => EMPTY_BASE + k as usize,
            Token::Start => ALPHABET_SIZE,
            Token::End => ALPHABET_SIZE + 1,
            Token::Pad => ALPHABET_SIZE + 2,
            Token::Unknown => ALPHABET_SIZE + 3,
        }
    }

    pub fn from_id(id: usize) -> Option<Token> {
        Some(match id {
            0 => Token::TheadOpen,
            1 => Token::TheadClose,
            2 => Token::TbodyOpen,
            3 => Token::TbodyClose,
            4 => Token::TrOpen,
            5 => Token::TrClose,
            6 => Token::Cell,
            7 => Token::SpanOpen,
            8 => Token::SpanEnd,
            9 => Token::CellClose,
            i if (COLSPAN_BASE..ROWSPAN_BASE).contains(&i) => Token::Colspan((i - COLSPAN_BASE + 2) as u8),
            i if (ROWSPAN_BASE..EMPTY_BASE).contains(&i) => Token::Rowspan((i - ROWSPAN_BASE + 2) as u8),
            i if (EMPTY_BASE..ALPHABET_SIZE).contains(&i) => Token::Empty((i - EMPTY_BASE) as u8),
            39 => Token::Start,
            40 => Token::End,
            41 => Token::Pad,
            42 => Token::Unknown,
            _ => return None,
        })
    }

    pub fn symbol(self) -> String {
        match self {
            Token::TheadOpen => "<thead>".into(),
            Token::TheadClose => "</thead>".into(),
            Token::TbodyOpen => "<tbody>".into(),
            Token::TbodyClose => "</tbody>".into(),
            Token::TrOpen => "<tr>".into(),
            Token::TrClose => "</tr>".into(),
            Token::Cell => "<td></td>".into(),
            Token::SpanOpen => "<td".into(),
            Token::SpanEnd => ">".into(),
            Token::CellClose => "</td>".into(),
            Token::Colspan(n) => format!("colspan=\"{n}\""),
            Token::Rowspan(n) => format!("rowspan=\"{n}\""),
            Token::Empty(0) => "<eb></eb>".into(),
            Token::Empty(k) => format!("<eb{k}></eb{k}>"),
            Token::Start => "<SOS>".into(),
            Token::End => "<EOS>".into(),
            Token::Pad => "<PAD>".into(),
            Token::Unknown => "<UKN>".into(),
        }
    }

    pub fn is_control(self) -> bool {
        matches!(self, Token::Start | Token::End | Token::Pad | Token::Unknown)
    }

    /// Positions that stand for a table cell and may carry a box.
    pub fn is_anchor(self) -> bool {
        matches!(self, Token::Cell | Token::Empty(_) | Token::SpanOpen)
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.symbol())
    }
}

/// Fixed symbol table: ids `0..39` are the structure alphabet, `39..43` the
/// control symbols.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    symbols: Vec<String>,
    index: HashMap<String, Token>,
}

pub fn build_vocabulary() -> Vocabulary {
    let tokens: Vec<Token> = (0..VOCAB_SIZE).map(|i| Token::from_id(i).expect("dense ids")).collect();
    let symbols: Vec<String> = tokens.iter().map(|t| t.symbol()).collect();
    let index = symbols.iter().cloned().zip(tokens).collect();
    Vocabulary { symbols, index }
}

impl Default for Vocabulary {
    fn default() -> Self {
        build_vocabulary()
    }
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbol(&self, id: usize) -> Option<&str> {
        self.symbols.get(id).map(String::as_str)
    }

    pub fn id(&self, symbol: &str) -> Option<usize> {
        self.token(symbol).map(Token::id)
    }

    /// Looks a symbol up. Attribute symbols are also accepted with the leading
    /// space PubTabNet uses (` colspan="2"`).
    pub fn token(&self, symbol: &str) -> Option<Token> {
        self.index
            .get(symbol)
            .or_else(|| self.index.get(symbol.trim()))
            .copied()
    }

    /// Maps symbols to tokens, using `Token::Unknown` for anything outside the
    /// table.
    pub fn tokenize<S: AsRef<str>>(&self, symbols: &[S]) -> Vec<Token> {
        symbols
            .iter()
            .map(|s| self.token(s.as_ref()).unwrap_or(Token::Unknown))
            .collect()
    }

    pub fn symbols(&self) -> impl Iterator<Item = &str> {
        self.symbols.iter().map(String::as_str)
    }

    /// One symbol per line; the zero-based line number is the id.
    pub fn write_to<W: Write>(&self, mut out: W) -> io::Result<()> {
        for s in &self.symbols {
            writeln!(out, "{s}")?;
        }
        Ok(())
    }
}
