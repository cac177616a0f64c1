//! Table trees and their canonical HTML form.
//!
//! A [`TableTree`] is always `table > [thead, tbody]`, with rows of `td`
//! cells under each section. Cell content is kept as raw text, inline markup
//! included. Serialization is canonical: lowercase tags, double-quoted
//! attributes, no whitespace between structural tags, span attributes only
//! when greater than one, and both sections always present.

use std::fmt::{self, Write};

use thiserror::Error;

use crate::structure::vocab::MAX_SPAN;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tag {
    Table,
    Thead,
    Tbody,
    Tr,
    Td,
}

impl Tag {
    pub fn name(self) -> &'static str {
        match self {
            Tag::Table => "table",
            Tag::Thead => "thead",
            Tag::Tbody => "tbody",
            Tag::Tr => "tr",
            Tag::Td => "td",
        }
    }

    fn from_name(name: &str) -> Option<Tag> {
        Some(match name {
            "table" => Tag::Table,
            "thead" => Tag::Thead,
            "tbody" => Tag::Tbody,
            "tr" => Tag::Tr,
            "td" => Tag::Td,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableTree {
    pub tag: Tag,
    pub colspan: u8,
    pub rowspan: u8,
    /// Cell text, `td` only.
    pub content: String,
    pub children: Vec<TableTree>,
}

impl TableTree {
    pub fn node(tag: Tag, children: Vec<TableTree>) -> Self {
        Self {
            tag,
            colspan: 1,
            rowspan: 1,
            content: String::new(),
            children,
        }
    }

    pub fn table(head_rows: Vec<TableTree>, body_rows: Vec<TableTree>) -> Self {
        Self::node(
            Tag::Table,
            vec![Self::node(Tag::Thead, head_rows), Self::node(Tag::Tbody, body_rows)],
        )
    }

    pub fn row(cells: Vec<TableTree>) -> Self {
        Self::node(Tag::Tr, cells)
    }

    pub fn cell(content: impl Into<String>) -> Self {
        Self {
            content: content.into(),
            ..Self::node(Tag::Td, Vec::new())
        }
    }

    pub fn span_cell(content: impl Into<String>, colspan: u8, rowspan: u8) -> Self {
        Self {
            colspan,
            rowspan,
            ..Self::cell(content)
        }
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(TableTree::node_count).sum::<usize>()
    }

    /// All `td` nodes in document order.
    pub fn cells(&self) -> Vec<&TableTree> {
        let mut out = Vec::new();
        self.visit(&mut |n| {
            if n.tag == Tag::Td {
                out.push(n)
            }
        });
        out
    }

    pub fn cells_mut(&mut self) -> Vec<&mut TableTree> {
        fn walk<'a>(n: &'a mut TableTree, out: &mut Vec<&'a mut TableTree>) {
            if n.tag == Tag::Td {
                out.push(n);
            } else {
                for c in &mut n.children {
                    walk(c, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }

    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a TableTree)) {
        f(self);
        for c in &self.children {
            c.visit(f);
        }
    }

    /// Copy with all cell contents cleared.
    pub fn skeleton(&self) -> TableTree {
        let mut t = self.clone();
        for c in t.cells_mut() {
            c.content.clear();
        }
        t
    }

    /// Checks the table shape: `table > [thead, tbody] > tr* > td*`, spans in
    /// `1..=10`, content only on cells.
    pub fn is_well_formed(&self) -> bool {
        fn cell_ok(c: &TableTree) -> bool {
            c.tag == Tag::Td
                && c.children.is_empty()
                && (1..=MAX_SPAN).contains(&c.colspan)
                && (1..=MAX_SPAN).contains(&c.rowspan)
        }
        fn plain(n: &TableTree) -> bool {
            n.colspan == 1 && n.rowspan == 1 && n.content.is_empty()
        }
        let sections_ok = |n: &TableTree, tag: Tag| {
            n.tag == tag
                && plain(n)
                && n.children
                    .iter()
                    .all(|r| r.tag == Tag::Tr && plain(r) && r.children.iter().all(cell_ok))
        };
        self.tag == Tag::Table
            && plain(self)
            && self.children.len() == 2
            && sections_ok(&self.children[0], Tag::Thead)
            && sections_ok(&self.children[1], Tag::Tbody)
    }

    pub fn head(&self) -> Option<&TableTree> {
        self.children.iter().find(|c| c.tag == Tag::Thead)
    }

    pub fn body(&self) -> Option<&TableTree> {
        self.children.iter().find(|c| c.tag == Tag::Tbody)
    }
}

impl fmt::Display for TableTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = self.tag.name();
        write!(f, "<{name}")?;
        if self.tag == Tag::Td {
            if self.colspan > 1 {
                write!(f, " colspan=\"{}\"", self.colspan)?;
            }
            if self.rowspan > 1 {
                write!(f, " rowspan=\"{}\"", self.rowspan)?;
            }
        }
        f.write_char('>')?;
        f.write_str(&self.content)?;
        for c in &self.children {
            c.fmt(f)?;
        }
        write!(f, "</{name}>")
    }
}

/// Canonical serialization.
pub fn to_html(tree: &TableTree) -> String {
    tree.to_string()
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("HTML parse error at byte {offset}: {message}")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

/// Parses a single `<table>` element.
///
/// Whitespace between structural tags is ignored. Everything between a `<td>`
/// start tag and the next `</td>` is taken verbatim as content. A table
/// without a `thead` or `tbody` gets an empty one.
pub fn parse_table_html(input: &str) -> Result<TableTree, ParseError> {
    let mut p = Parser { src: input, pos: 0 };
    p.skip_ws();
    p.expect_open(Tag::Table)?;
    let mut head = None;
    let mut body = None;
    loop {
        p.skip_ws();
        let at = p.pos;
        match p.next_tag()? {
            TagToken::Close(Tag::Table) => break,
            TagToken::Open(Tag::Thead, _) if head.is_none() && body.is_none() => head = Some(p.section(Tag::Thead)?),
            TagToken::Open(Tag::Tbody, _) if body.is_none() => body = Some(p.section(Tag::Tbody)?),
            other => return Err(p.error_at(at, format!("unexpected {other} inside <table>"))),
        }
    }
    p.skip_ws();
    if p.pos != input.len() {
        return Err(p.error_at(p.pos, "trailing input after </table>".into()));
    }
    Ok(TableTree::table(head.unwrap_or_default(), body.unwrap_or_default()))
}

enum TagToken {
    Open(Tag, Vec<(String, String)>),
    Close(Tag),
}

impl fmt::Display for TagToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TagToken::Open(t, _) => write!(f, "<{}>", t.name()),
            TagToken::Close(t) => write!(f, "</{}>", t.name()),
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error_at(&self, offset: usize, message: String) -> ParseError {
        ParseError { offset, message }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn expect_open(&mut self, tag: Tag) -> Result<(), ParseError> {
        let at = self.pos;
        match self.next_tag()? {
            TagToken::Open(t, attrs) if t == tag && attrs.is_empty() => Ok(()),
            other => Err(self.error_at(at, format!("expected <{}>, found {other}", tag.name()))),
        }
    }

    fn section(&mut self, tag: Tag) -> Result<Vec<TableTree>, ParseError> {
        let mut rows = Vec::new();
        loop {
            self.skip_ws();
            let at = self.pos;
            match self.next_tag()? {
                TagToken::Close(t) if t == tag => return Ok(rows),
                TagToken::Open(Tag::Tr, attrs) if attrs.is_empty() => rows.push(self.row()?),
                other => return Err(self.error_at(at, format!("unexpected {other} inside <{}>", tag.name()))),
            }
        }
    }

    fn row(&mut self) -> Result<TableTree, ParseError> {
        let mut cells = Vec::new();
        loop {
            self.skip_ws();
            let at = self.pos;
            match self.next_tag()? {
                TagToken::Close(Tag::Tr) => return Ok(TableTree::row(cells)),
                TagToken::Open(Tag::Td, attrs) => cells.push(self.cell(at, attrs)?),
                other => return Err(self.error_at(at, format!("unexpected {other} inside <tr>"))),
            }
        }
    }

    fn cell(&mut self, at: usize, attrs: Vec<(String, String)>) -> Result<TableTree, ParseError> {
        let mut node = TableTree::cell("");
        for (name, value) in attrs {
            let span: u8 = value
                .trim()
                .parse()
                .ok()
                .filter(|v| (1..=MAX_SPAN).contains(v))
                .ok_or_else(|| self.error_at(at, format!("{name}={value:?} is not a span in 1..={MAX_SPAN}")))?;
            match name.as_str() {
                "colspan" => node.colspan = span,
                "rowspan" => node.rowspan = span,
                _ => unreachable!("attribute names are filtered by the tag reader"),
            }
        }
        let end = find_ci(self.rest(), "</td>").ok_or_else(|| self.error_at(at, "unterminated <td>".into()))?;
        node.content = self.rest()[..end].to_string();
        self.pos += end + "</td>".len();
        Ok(node)
    }

    /// Reads one start or end tag of the five table tags.
    fn next_tag(&mut self) -> Result<TagToken, ParseError> {
        let start = self.pos;
        let rest = self.rest();
        if rest.is_empty() {
            return Err(self.error_at(start, "unexpected end of input".into()));
        }
        if !rest.starts_with('<') {
            return Err(self.error_at(start, "expected a tag".into()));
        }
        let close = rest
            .find('>')
            .ok_or_else(|| self.error_at(start, "unterminated tag".into()))?;
        let inner = &rest[1..close];
        self.pos += close + 1;
        if let Some(name) = inner.strip_prefix('/') {
            let name = name.trim().to_ascii_lowercase();
            return Tag::from_name(&name)
                .map(TagToken::Close)
                .ok_or_else(|| self.error_at(start, format!("unsupported tag </{name}>")));
        }
        let name_end = inner.find(|c: char| c.is_whitespace()).unwrap_or(inner.len());
        let name = inner[..name_end].to_ascii_lowercase();
        let tag = Tag::from_name(&name).ok_or_else(|| self.error_at(start, format!("unsupported tag <{name}>")))?;
        let attrs = parse_attrs(&inner[name_end..]).map_err(|m| self.error_at(start, m))?;
        if tag != Tag::Td && !attrs.is_empty() {
            return Err(self.error_at(start, format!("<{name}> takes no attributes")));
        }
        Ok(TagToken::Open(tag, attrs))
    }
}

fn parse_attrs(mut s: &str) -> Result<Vec<(String, String)>, String> {
    let mut out: Vec<(String, String)> = Vec::new();
    loop {
        s = s.trim_start();
        if s.is_empty() {
            return Ok(out);
        }
        let eq = s
            .find('=')
            .ok_or_else(|| format!("attribute without value near {s:?}"))?;
        let name = s[..eq].trim().to_ascii_lowercase();
        if name != "colspan" && name != "rowspan" {
            return Err(format!("unsupported attribute {name:?}"));
        }
        if out.iter().any(|(n, _)| *n == name) {
            return Err(format!("duplicate attribute {name:?}"));
        }
        s = s[eq + 1..].trim_start();
        let value;
        match s.chars().next() {
            Some(q @ ('"' | '\'')) => {
                let end = s[1..].find(q).ok_or("unterminated attribute value")?;
                value = s[1..1 + end].to_string();
                s = &s[end + 2..];
            }
            _ => {
                let end = s.find(char::is_whitespace).unwrap_or(s.len());
                value = s[..end].to_string();
                s = &s[end..];
            }
        }
        out.push((name, value));
    }
}

fn find_ci(haystack: &str, needle: &str) -> Option<usize> {
    haystack
        .as_bytes()
        .windows(needle.len())
        .position(|w| w.eq_ignore_ascii_case(needle.as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn minimal_round_trip() {
        let s = "<table><thead></thead><tbody></tbody></table>";
        let t = parse_table_html(s).unwrap();
        assert_eq!(t, TableTree::table(vec![], vec![]));
        assert_eq!(to_html(&t), s);
    }

    #[test]
    fn spans_survive() {
        let s = "<table><thead></thead><tbody><tr><td colspan=\"2\">a</td></tr></tbody></table>";
        let t = parse_table_html(s).unwrap();
        assert_eq!(t.cells()[0].colspan, 2);
        assert_eq!(to_html(&t), s);
    }

    #[test]
    fn malformed_inputs() {
        let err = parse_table_html("<table><tr>").unwrap_err();
        assert_eq!(err.offset, 7);
        assert!(parse_table_html("").is_err());
        assert!(parse_table_html("<table><tbody><tr><td>x</tr></tbody></table>").is_err());
        assert!(parse_table_html("<table><tbody></tbody></table>junk").is_err());
        assert!(parse_table_html("<table><tbody><tr><td colspan=\"11\">x</td></tr></tbody></table>").is_err());
        assert!(parse_table_html("<table><tbody><tr><td class=\"a\">x</td></tr></tbody></table>").is_err());
        assert!(parse_table_html("<table><tbody></tbody><thead></thead></table>").is_err());
    }

    #[test]
    fn lenient_formatting() {
        let s = "<TABLE>\n <tbody>\n  <tr> <td rowspan='3' colspan=2><b>x</b> y</td> </tr>\n </tbody>\n</TABLE>\n";
        let t = parse_table_html(s).unwrap();
        let c = t.cells()[0];
        assert_eq!((c.colspan, c.rowspan), (2, 3));
        assert_eq!(c.content, "<b>x</b> y");
        assert_eq!(
            to_html(&t),
            "<table><thead></thead><tbody><tr><td colspan=\"2\" rowspan=\"3\"><b>x</b> y</td></tr></tbody></table>"
        );
    }

    #[test]
    fn node_counts() {
        let t = TableTree::table(vec![TableTree::row(vec![TableTree::cell("a")])], vec![]);
        assert_eq!(t.node_count(), 5);
        assert!(t.is_well_formed());
    }

    pub(crate) fn arb_tree() -> impl Strategy<Value = TableTree> {
        let cell = ("[a-z <>/.0-9]{0,6}", 1u8..=10, 1u8..=10).prop_map(|(c, cs, rs)| {
            // content must not contain a literal end tag
            TableTree::span_cell(c.replace("</td>", ""), cs, rs)
        });
        let rows = || {
            proptest::collection::vec(
                proptest::collection::vec(cell.clone(), 0..4).prop_map(TableTree::row),
                0..4,
            )
        };
        (rows(), rows()).prop_map(|(h, b)| TableTree::table(h, b))
    }

    proptest! {
        #[test]
        fn parse_inverts_serialize(t in arb_tree()) {
            prop_assert!(t.is_well_formed());
            prop_assert_eq!(parse_table_html(&to_html(&t)).unwrap(), t);
        }
    }
}
