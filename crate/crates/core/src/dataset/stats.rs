//! Corpus statistics: encoded lengths, empty-form usage, long cells.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::BufRead;

use rayon::prelude::*;
use serde::Serialize;

use super::annotation::AnnotationRecord;
use super::reader::{AnnotationReader, ReadMode};
use crate::structure::forms::{has_visible_text, is_markup_tag};
use crate::structure::vocab::EMPTY_FORM_COUNT;
use crate::structure::{encode_tokens, CellKind, EmptyFormTable, EncodeOptions, FormError, DEFAULT_MAX_LEN};

#[derive(Debug, Clone, Copy)]
pub struct StatsOptions {
    /// Sequences strictly shorter than this count as "below the limit".
    pub length_limit: usize,
    /// Histogram bin width, in tokens.
    pub bin_width: usize,
    /// Cells with more visible characters than this count as long.
    pub long_cell_chars: usize,
    /// How many distinct empty-cell markups to report.
    pub top_k: usize,
}

impl Default for StatsOptions {
    fn default() -> Self {
        Self {
            length_limit: DEFAULT_MAX_LEN,
            bin_width: 50,
            long_cell_chars: 100,
            top_k: 20,
        }
    }
}

/// Raw counts for one split. Merging is plain addition, so shards can be
/// combined in any order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SplitCounts {
    pub records: u64,
    pub encode_failures: u64,
    pub lengths: BTreeMap<usize, u64>,
    pub form_counts: [u64; EMPTY_FORM_COUNT as usize],
    pub unknown_empty: u64,
    pub cells: u64,
    pub long_cells: u64,
}

impl SplitCounts {
    fn merge(&mut self, other: &SplitCounts) {
        self.records += other.records;
        self.encode_failures += other.encode_failures;
        for (len, n) in &other.lengths {
            *self.lengths.entry(*len).or_default() += n;
        }
        for (a, b) in self.form_counts.iter_mut().zip(other.form_counts) {
            *a += b;
        }
        self.unknown_empty += other.unknown_empty;
        self.cells += other.cells;
        self.long_cells += other.long_cells;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StatsAccumulator {
    pub splits: BTreeMap<String, SplitCounts>,
    /// Markup of every plain empty cell, with counts.
    pub empty_markups: HashMap<String, u64>,
}

/// Number of characters outside markup tags.
fn text_chars(tokens: &[String]) -> usize {
    tokens
        .iter()
        .filter(|t| !is_markup_tag(t))
        .map(|t| t.chars().count())
        .sum()
}

impl StatsAccumulator {
    pub fn add(&mut self, record: &AnnotationRecord, forms: &EmptyFormTable, opts: &StatsOptions) {
        let split = self.splits.entry(record.split.clone()).or_default();
        split.records += 1;
        split.cells += record.cells().len() as u64;
        split.long_cells += record
            .cells()
            .iter()
            .filter(|c| text_chars(&c.tokens) > opts.long_cell_chars)
            .count() as u64;
        let enc = EncodeOptions {
            max_len: usize::MAX,
            unknown_empty_as_form0: true,
        };
        match encode_tokens(record, forms, &enc) {
            Ok((tokens, anchors, unknown)) => {
                *split.lengths.entry(tokens.len()).or_default() += 1;
                split.unknown_empty += unknown as u64;
                for a in anchors {
                    if let CellKind::EmptyForm(k) = a.kind {
                        split.form_counts[k as usize] += 1;
                    }
                }
            }
            Err(e) => {
                log::debug!("{}: not encodable: {e}", record.filename);
                split.encode_failures += 1;
            }
        }
        // every plain empty cell, recognized or not, feeds form discovery
        let mut plain = record
            .structure_tokens()
            .iter()
            .filter(|t| matches!(t.trim(), "<td>" | "<td"))
            .map(|t| t.trim() == "<td>");
        for cell in record.cells() {
            if plain.next() == Some(true) && !has_visible_text(&cell.tokens) {
                *self.empty_markups.entry(cell.tokens.concat()).or_default() += 1;
            }
        }
    }

    pub fn merge(&mut self, other: &StatsAccumulator) {
        for (name, counts) in &other.splits {
            self.splits.entry(name.clone()).or_default().merge(counts);
        }
        for (m, n) in &other.empty_markups {
            *self.empty_markups.entry(m.clone()).or_default() += n;
        }
    }

    pub fn aggregate(&self) -> SplitCounts {
        let mut all = SplitCounts::default();
        for s in self.splits.values() {
            all.merge(s);
        }
        all
    }

    /// Empty-cell markups by descending count, ties by markup.
    pub fn ranked_markups(&self) -> Vec<(String, u64)> {
        let mut v: Vec<(String, u64)> = self.empty_markups.iter().map(|(m, n)| (m.clone(), *n)).collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        v
    }

    /// A form table of the most frequent empty markups. Forms 0 and 1 stay
    /// the literal empty string and the single space; the other slots take
    /// the most frequent remaining markups, then defaults not already used.
    pub fn discover_forms(&self) -> Result<EmptyFormTable, FormError> {
        let mut markups = vec![String::new(), " ".to_string()];
        let ranked = self.ranked_markups().into_iter().map(|(m, _)| m);
        let fallback = EmptyFormTable::default().markups().to_vec();
        for m in ranked.chain(fallback) {
            if markups.len() == EMPTY_FORM_COUNT as usize {
                break;
            }
            if !markups.contains(&m) {
                markups.push(m);
            }
        }
        EmptyFormTable::new(markups)
    }

    pub fn report(&self, opts: &StatsOptions) -> StatsReport {
        StatsReport {
            splits: self
                .splits
                .iter()
                .map(|(name, c)| (name.clone(), SplitReport::new(c, opts)))
                .collect(),
            aggregate: SplitReport::new(&self.aggregate(), opts),
            top_empty_markups: self
                .ranked_markups()
                .into_iter()
                .take(opts.top_k)
                .map(|(markup, count)| MarkupCount { markup, count })
                .collect(),
            skipped_lines: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramBin {
    pub start: usize,
    pub end: usize,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitReport {
    pub records: u64,
    pub encoded: u64,
    pub encode_failures: u64,
    pub length_histogram: Vec<HistogramBin>,
    pub length_limit: usize,
    pub below_limit: u64,
    pub fraction_below_limit: f64,
    pub form_counts: Vec<u64>,
    pub unknown_empty_markups: u64,
    /// `None` when no cell uses form 1.
    pub form0_form1_ratio: Option<f64>,
    pub cells: u64,
    pub long_cell_chars: usize,
    pub long_cells: u64,
    pub long_cell_fraction: f64,
}

fn fraction(n: u64, d: u64) -> f64 {
    if d == 0 {
        0.0
    } else {
        n as f64 / d as f64
    }
}

impl SplitReport {
    fn new(c: &SplitCounts, opts: &StatsOptions) -> Self {
        let encoded: u64 = c.lengths.values().sum();
        let below_limit = c.lengths.range(..opts.length_limit).map(|(_, n)| n).sum();
        let mut bins: BTreeMap<usize, u64> = BTreeMap::new();
        let w = opts.bin_width.max(1);
        for (len, n) in &c.lengths {
            *bins.entry(len / w * w).or_default() += n;
        }
        SplitReport {
            records: c.records,
            encoded,
            encode_failures: c.encode_failures,
            length_histogram: bins
                .into_iter()
                .map(|(start, count)| HistogramBin {
                    start,
                    end: start + w,
                    count,
                })
                .collect(),
            length_limit: opts.length_limit,
            below_limit,
            fraction_below_limit: fraction(below_limit, encoded),
            form_counts: c.form_counts.to_vec(),
            unknown_empty_markups: c.unknown_empty,
            form0_form1_ratio: (c.form_counts[1] > 0).then(|| c.form_counts[0] as f64 / c.form_counts[1] as f64),
            cells: c.cells,
            long_cell_chars: opts.long_cell_chars,
            long_cells: c.long_cells,
            long_cell_fraction: fraction(c.long_cells, c.cells),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarkupCount {
    pub markup: String,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    pub splits: BTreeMap<String, SplitReport>,
    pub aggregate: SplitReport,
    pub top_empty_markups: Vec<MarkupCount>,
    pub skipped_lines: usize,
}

impl fmt::Display for StatsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<12} {:>9} {:>9} {:>10} {:>10} {:>9} {:>10}",
            "split", "records", "encoded", "<limit", "form0:1", "cells", "long"
        )?;
        let rows = self
            .splits
            .iter()
            .map(|(n, r)| (n.as_str(), r))
            .chain([("(all)", &self.aggregate)]);
        for (name, r) in rows {
            let name = if name.is_empty() { "(none)" } else { name };
            writeln!(
                f,
                "{:<12} {:>9} {:>9} {:>10.4} {:>10} {:>9} {:>10.6}",
                name,
                r.records,
                r.encoded,
                r.fraction_below_limit,
                r.form0_form1_ratio.map_or("-".into(), |x| format!("{x:.3}")),
                r.cells,
                r.long_cell_fraction,
            )?;
        }
        if self.skipped_lines > 0 {
            writeln!(f, "skipped lines: {}", self.skipped_lines)?;
        }
        if !self.top_empty_markups.is_empty() {
            writeln!(f, "\nempty-cell markups:")?;
            for m in &self.top_empty_markups {
                writeln!(f, "{:>10}  {:?}", m.count, m.markup)?;
            }
        }
        Ok(())
    }
}

const CHUNK: usize = 4096;

/// Reads an annotation stream leniently and computes statistics. Records are
/// processed in fixed-size chunks on the current rayon pool; the result does
/// not depend on the number of threads.
pub fn dataset_stats<R: BufRead>(reader: R, forms: &EmptyFormTable, opts: &StatsOptions) -> (StatsAccumulator, usize) {
    let mut reader = AnnotationReader::new(reader, ReadMode::Lenient);
    let mut total = StatsAccumulator::default();
    let mut chunk = Vec::with_capacity(CHUNK);
    loop {
        chunk.clear();
        for item in reader.by_ref() {
            match item {
                Ok(r) => chunk.push(r),
                Err(e) => log::warn!("skipping annotation {e}"),
            }
            if chunk.len() == CHUNK {
                break;
            }
        }
        if chunk.is_empty() {
            break;
        }
        let part = chunk
            .par_iter()
            .fold(StatsAccumulator::default, |mut acc, r| {
                acc.add(r, forms, opts);
                acc
            })
            .reduce(StatsAccumulator::default, |mut a, b| {
                a.merge(&b);
                a
            });
        total.merge(&part);
    }
    (total, reader.skipped().count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::annotation::tests::record;

    fn sample(split: &str, empties: &[&[&str]]) -> AnnotationRecord {
        let mut structure = vec!["<tbody>", "<tr>", "<td>", "</td>"];
        let mut cells = vec![(vec!["x"; 101], Some([0.0, 0.0, 1.0, 1.0]))];
        for e in empties {
            structure.extend(["<td>", "</td>"]);
            cells.push((e.to_vec(), None));
        }
        structure.extend(["</tr>", "</tbody>"]);
        let mut r = record(&structure, cells);
        r.split = split.into();
        r
    }

    #[test]
    fn empty_input_is_all_zero() {
        let (acc, skipped) = dataset_stats("".as_bytes(), &EmptyFormTable::default(), &StatsOptions::default());
        assert_eq!(skipped, 0);
        let rep = acc.report(&StatsOptions::default());
        assert!(rep.splits.is_empty());
        assert_eq!(rep.aggregate.records, 0);
        assert_eq!(rep.aggregate.fraction_below_limit, 0.0);
        assert_eq!(rep.aggregate.form0_form1_ratio, None);
    }

    #[test]
    fn counts_and_ratio() {
        let forms = EmptyFormTable::default();
        let opts = StatsOptions::default();
        let mut acc = StatsAccumulator::default();
        acc.add(&sample("train", &[&[], &[], &[" "]]), &forms, &opts);
        acc.add(&sample("val", &[&[], &[], &["<u>", "</u>"]]), &forms, &opts);
        let rep = acc.report(&opts);
        assert_eq!(rep.splits["train"].form0_form1_ratio, Some(2.0));
        // the unknown markup is counted as form 0
        assert_eq!(rep.aggregate.form_counts[0], 5);
        assert_eq!(rep.aggregate.unknown_empty_markups, 1);
        assert_eq!(rep.aggregate.long_cells, 2);
        assert_eq!(rep.aggregate.cells, 8);
        // <tbody> <tr> 4 anchors </tr> </tbody>
        assert_eq!(rep.splits["train"].length_histogram[0].count, 1);
        assert_eq!(rep.aggregate.below_limit, 2);
        assert_eq!(rep.top_empty_markups[0].markup, "");
        assert_eq!(rep.top_empty_markups[0].count, 4);
    }

    #[test]
    fn merge_is_order_free() {
        let forms = EmptyFormTable::default();
        let opts = StatsOptions::default();
        let recs = [
            sample("a", &[&[]]),
            sample("b", &[&[" "], &["<b>", "</b>"]]),
            sample("a", &[&["<i>", "</i>"]]),
        ];
        let single = |rs: &[&AnnotationRecord]| {
            let mut acc = StatsAccumulator::default();
            for r in rs {
                acc.add(r, &forms, &opts);
            }
            acc
        };
        let mut left = single(&[&recs[0]]);
        left.merge(&single(&[&recs[1], &recs[2]]));
        let mut right = single(&[&recs[2]]);
        right.merge(&single(&[&recs[1]]));
        right.merge(&single(&[&recs[0]]));
        assert_eq!(left, right);
        assert_eq!(left, single(&[&recs[0], &recs[1], &recs[2]]));
    }

    #[test]
    fn form_discovery_keeps_fixed_forms() {
        let mut acc = StatsAccumulator::default();
        acc.empty_markups.insert("<u> </u>".into(), 9);
        acc.empty_markups.insert(" ".into(), 50);
        acc.empty_markups.insert("<i></i>".into(), 3);
        let t = acc.discover_forms().unwrap();
        assert_eq!(t.markup(0), Some(""));
        assert_eq!(t.markup(1), Some(" "));
        assert_eq!(t.markup(2), Some("<u> </u>"));
        assert_eq!(t.markup(3), Some("<i></i>"));
        assert_eq!(t.markups().len(), 11);
    }
}
