//! Ordered tree edit distance (Zhang-Shasha keyroot dynamic program).

use crate::table::{TableTree, Tag};

/// Edit costs over table nodes. Insert and delete always cost 1.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CostModel {
    /// Ignore cell content when relabeling.
    pub struct_only: bool,
}

impl CostModel {
    pub const INSERT: f64 = 1.0;
    pub const DELETE: f64 = 1.0;

    pub fn relabel(&self, a: &TableTree, b: &TableTree) -> f64 {
        if a.tag != b.tag || a.colspan != b.colspan || a.rowspan != b.rowspan {
            return 1.0;
        }
        if a.tag != Tag::Td || self.struct_only {
            return 0.0;
        }
        normalized_levenshtein(&a.content, &b.content)
    }
}

/// Character-level edit distance divided by the longer length; 0 for two
/// empty strings.
pub fn normalized_levenshtein(a: &str, b: &str) -> f64 {
    if a == b {
        return 0.0;
    }
    let longest = a.chars().count().max(b.chars().count());
    strsim::levenshtein(a, b) as f64 / longest as f64
}

struct Postorder<'a> {
    nodes: Vec<&'a TableTree>,
    /// Leftmost leaf descendant of each node.
    lml: Vec<usize>,
    keyroots: Vec<usize>,
}

impl<'a> Postorder<'a> {
    fn new(root: &'a TableTree) -> Self {
        let mut p = Postorder {
            nodes: Vec::new(),
            lml: Vec::new(),
            keyroots: Vec::new(),
        };
        p.walk(root);
        // a keyroot is the highest node sharing its leftmost leaf
        let mut seen = vec![false; p.nodes.len()];
        for i in (0..p.nodes.len()).rev() {
            if !seen[p.lml[i]] {
                seen[p.lml[i]] = true;
                p.keyroots.push(i);
            }
        }
        p.keyroots.reverse();
        p
    }

    fn walk(&mut self, node: &'a TableTree) -> usize {
        let mut first_leaf = None;
        for child in &node.children {
            let c = self.walk(child);
            first_leaf.get_or_insert(self.lml[c]);
        }
        let id = self.nodes.len();
        self.nodes.push(node);
        self.lml.push(first_leaf.unwrap_or(id));
        id
    }
}

/// Minimum total cost of node deletions, insertions and relabels turning
/// `a` into `b`.
pub fn tree_edit_distance(a: &TableTree, b: &TableTree, costs: &CostModel) -> f64 {
    let a = Postorder::new(a);
    let b = Postorder::new(b);
    let (n, m) = (a.nodes.len(), b.nodes.len());
    let mut td = vec![0.0f64; n * m];
    let mut fd = vec![0.0f64; (n + 1) * (m + 1)];
    let w = m + 1;

    for &i in &a.keyroots {
        for &j in &b.keyroots {
            let (li, lj) = (a.lml[i], b.lml[j]);
            let (rows, cols) = (i - li + 2, j - lj + 2);
            fd[0] = 0.0;
            for di in 1..rows {
                fd[di * w] = fd[(di - 1) * w] + CostModel::DELETE;
            }
            for dj in 1..cols {
                fd[dj] = fd[dj - 1] + CostModel::INSERT;
            }
            for di in 1..rows {
                let x = li + di - 1;
                for dj in 1..cols {
                    let y = lj + dj - 1;
                    let del = fd[(di - 1) * w + dj] + CostModel::DELETE;
                    let ins = fd[di * w + dj - 1] + CostModel::INSERT;
                    let v = if a.lml[x] == li && b.lml[y] == lj {
                        let v = del
                            .min(ins)
                            .min(fd[(di - 1) * w + dj - 1] + costs.relabel(a.nodes[x], b.nodes[y]));
                        td[x * m + y] = v;
                        v
                    } else {
                        let (pi, pj) = (a.lml[x] - li, b.lml[y] - lj);
                        del.min(ins).min(fd[pi * w + pj] + td[x * m + y])
                    };
                    fd[di * w + dj] = v;
                }
            }
        }
    }
    td[(n - 1) * m + (m - 1)]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf(tag: Tag) -> TableTree {
        TableTree::node(tag, vec![])
    }

    #[test]
    fn identical_is_zero() {
        let t = TableTree::table(
            vec![],
            vec![TableTree::row(vec![TableTree::cell("a"), TableTree::cell("b")])],
        );
        assert_eq!(tree_edit_distance(&t, &t, &CostModel::default()), 0.0);
    }

    #[test]
    fn single_relabel() {
        assert_eq!(
            tree_edit_distance(&leaf(Tag::Tr), &leaf(Tag::Td), &CostModel::default()),
            1.0
        );
    }

    #[test]
    fn content_cost() {
        let a = TableTree::cell("abcd");
        let b = TableTree::cell("abce");
        assert_eq!(tree_edit_distance(&a, &b, &CostModel::default()), 0.25);
        assert_eq!(tree_edit_distance(&a, &b, &CostModel { struct_only: true }), 0.0);
        let spanned = TableTree::span_cell("abcd", 2, 1);
        assert_eq!(tree_edit_distance(&a, &spanned, &CostModel::default()), 1.0);
    }

    #[test]
    fn classic_example() {
        // f(d(a, c(b)), e) vs f(c(d(a, b)), e): distance 2 with unit costs
        let n = |t: Tag, c: Vec<TableTree>| TableTree::node(t, c);
        let (f, d, c, a, b, e) = (Tag::Table, Tag::Thead, Tag::Tbody, Tag::Tr, Tag::Td, Tag::Table);
        let t1 = n(f, vec![n(d, vec![leaf(a), n(c, vec![n(b, vec![])])]), leaf(e)]);
        let t2 = n(f, vec![n(c, vec![n(d, vec![leaf(a), leaf(b)])]), leaf(e)]);
        assert_eq!(tree_edit_distance(&t1, &t2, &CostModel::default()), 2.0);
    }

    #[test]
    fn levenshtein_by_chars() {
        assert_eq!(normalized_levenshtein("", ""), 0.0);
        assert_eq!(normalized_levenshtein("", "ab"), 1.0);
        assert_eq!(normalized_levenshtein("é", "e"), 1.0);
        assert_eq!(normalized_levenshtein("kitten", "sitting"), 3.0 / 7.0);
    }
}
