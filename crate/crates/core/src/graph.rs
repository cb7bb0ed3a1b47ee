//! Immutable undirected graphs in CSR form, node features, and edge splits.
//!
//! All text formats are line oriented. Edge lists hold one `u v` pair per
//! line with `#` comments; feature files hold one whitespace-separated row
//! per node; negative-set files start with a `SHARED` or `PER_POSITIVE k`
//! header line.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub type NodeId = usize;
pub type Pair = (NodeId, NodeId);

/// Orders a pair as `(min, max)`.
#[inline]
pub fn canonical(pair: Pair) -> Pair {
    if pair.0 <= pair.1 {
        pair
    } else {
        (pair.1, pair.0)
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

/// Yields `(line_no, trimmed_content)` for non-blank, non-comment lines.
fn content_lines<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String)>> {
    reader.lines().enumerate().filter_map(|(idx, line)| match line {
        Err(e) => Some(Err(Error::MalformedLine {
            line: idx + 1,
            reason: e.to_string(),
        })),
        Ok(l) => {
            let t = l.trim();
            if t.is_empty() || t.starts_with('#') {
                None
            } else {
                Some(Ok((idx + 1, t.to_string())))
            }
        }
    })
}

fn parse_node(tok: &str, line: usize) -> Result<NodeId> {
    tok.parse::<NodeId>().map_err(|_| Error::MalformedLine {
        line,
        reason: format!("{tok:?} is not a non-negative integer"),
    })
}

fn parse_pair_tokens(a: &str, b: &str, line: usize) -> Result<Pair> {
    let u = parse_node(a, line)?;
    let v = parse_node(b, line)?;
    if u == v {
        return Err(Error::SelfLoop { line });
    }
    Ok((u, v))
}

/// Parses an edge list, keeping file order, duplicates and orientation.
pub fn parse_edge_list<R: BufRead>(reader: R) -> Result<Vec<Pair>> {
    let mut pairs = Vec::new();
    for item in content_lines(reader) {
        let (line, text) = item?;
        let toks: Vec<&str> = text.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(Error::MalformedLine {
                line,
                reason: format!("expected 2 fields, found {}", toks.len()),
            });
        }
        pairs.push(parse_pair_tokens(toks[0], toks[1], line)?);
    }
    Ok(pairs)
}

pub fn load_edge_list(path: impl AsRef<Path>) -> Result<Vec<Pair>> {
    let path = path.as_ref();
    parse_edge_list(open(path)?).map_err(|e| e.at(path))
}

/// Reads a graph header file holding a single `n=<count>` line.
pub fn load_node_count(path: impl AsRef<Path>) -> Result<usize> {
    let path = path.as_ref();
    let parse = || -> Result<usize> {
        let Some(item) = content_lines(open(path)?).next() else {
            return Err(Error::MalformedLine {
                line: 1,
                reason: "empty graph header".into(),
            });
        };
        let (line, text) = item?;
        let value = text
            .strip_prefix("n=")
            .or_else(|| text.strip_prefix("n ="))
            .ok_or_else(|| Error::MalformedLine {
                line,
                reason: "expected n=<count>".into(),
            })?;
        value.trim().parse().map_err(|_| Error::MalformedLine {
            line,
            reason: format!("{value:?} is not a node count"),
        })
    };
    parse().map_err(|e| e.at(path))
}

/// Undirected simple graph in compressed sparse row layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    offsets: Vec<usize>,
    neighbors: Vec<NodeId>,
}

impl Graph {
    /// Symmetrizes and deduplicates `pairs` into a CSR graph on `n` nodes.
    pub fn from_pairs(pairs: &[Pair], n: usize) -> Result<Graph> {
        let mut counts = vec![0usize; n + 1];
        for &(u, v) in pairs {
            for node in [u, v] {
                if node >= n {
                    return Err(Error::NodeOutOfRange { node, n });
                }
            }
            if u == v {
                return Err(Error::SelfPair(u));
            }
            counts[u + 1] += 1;
            counts[v + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut raw = vec![0; counts[n]];
        for &(u, v) in pairs {
            raw[fill[u]] = v;
            fill[u] += 1;
            raw[fill[v]] = u;
            fill[v] += 1;
        }

        let mut offsets = Vec::with_capacity(n + 1);
        let mut neighbors = Vec::with_capacity(raw.len());
        offsets.push(0);
        for v in 0..n {
            let list = &mut raw[counts[v]..counts[v + 1]];
            list.sort_unstable();
            let start = neighbors.len();
            for &w in list.iter() {
                if neighbors.len() == start || *neighbors.last().unwrap() != w {
                    neighbors.push(w);
                }
            }
            offsets.push(neighbors.len());
        }
        Ok(Graph { n, offsets, neighbors })
    }

    pub fn empty(n: usize) -> Graph {
        Graph {
            n,
            offsets: vec![0; n + 1],
            neighbors: Vec::new(),
        }
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Number of distinct undirected edges.
    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn check_node(&self, v: NodeId) -> Result<()> {
        if v < self.n {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange { node: v, n: self.n })
        }
    }

    pub fn degree(&self, v: NodeId) -> Result<usize> {
        self.check_node(v)?;
        Ok(self.deg(v))
    }

    #[inline]
    pub(crate) fn deg(&self, v: NodeId) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    /// Sorted neighbor list of `v`. Panics if `v` is out of range.
    #[inline]
    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        u < self.n && v < self.n && self.neighbors(u).binary_search(&v).is_ok()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// Each undirected edge once, as `(u, v)` with `u < v`, in CSR order.
    pub fn edges(&self) -> impl Iterator<Item = Pair> + '_ {
        (0..self.n).flat_map(move |u| self.neighbors(u).iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    pub fn write_edge_list<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (u, v) in self.edges() {
            writeln!(w, "{u} {v}")?;
        }
        Ok(())
    }
}

/// Dense row-major node feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    n: usize,
    d: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(n: usize, d: usize, data: Vec<f64>) -> Result<FeatureMatrix> {
        if data.len() != n * d {
            return Err(Error::DimMismatch {
                expected: n * d,
                found: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFiniteValue {
                line: pos / d.max(1) + 1,
            });
        }
        Ok(FeatureMatrix { n, d, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<FeatureMatrix> {
        let d = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * d);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != d {
                return Err(Error::RaggedRow {
                    line: i + 1,
                    expected: d,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        FeatureMatrix::new(rows.len(), d, data)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn check_node(&self, v: NodeId) -> Result<()> {
        if v < self.n {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange { node: v, n: self.n })
        }
    }

    #[inline]
    pub fn row(&self, v: NodeId) -> &[f64] {
        &self.data[v * self.d..(v + 1) * self.d]
    }

    /// One space-separated row per node, shortest round-trip formatting.
    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for v in 0..self.n {
            let row: Vec<String> = self.row(v).iter().map(f64::to_string).collect();
            writeln!(w, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

pub fn parse_features<R: BufRead>(reader: R, n: usize) -> Result<FeatureMatrix> {
    let mut data = Vec::new();
    let mut d = None;
    let mut rows = 0usize;
    for item in content_lines(reader) {
        let (line, text) = item?;
        let start = data.len();
        for tok in text.split_whitespace() {
            let x: f64 = tok.parse().map_err(|_| Error::MalformedLine {
                line,
                reason: format!("{tok:?} is not a real number"),
            })?;
            if !x.is_finite() {
                return Err(Error::NonFiniteValue { line });
            }
            data.push(x);
        }
        let width = data.len() - start;
        match d {
            None => d = Some(width),
            Some(expected) if expected != width => {
                return Err(Error::RaggedRow {
                    line,
                    expected,
                    found: width,
                })
            }
            _ => {}
        }
        rows += 1;
    }
    if rows != n {
        return Err(Error::RowCountMismatch {
            expected: n,
            found: rows,
        });
    }
    FeatureMatrix::new(n, d.unwrap_or(0), data)
}

pub fn load_features(path: impl AsRef<Path>, n: usize) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    parse_features(open(path)?, n).map_err(|e| e.at(path))
}

/// Fixed negatives for one evaluation set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NegativeSet {
    /// One list ranked against every positive.
    Shared(Vec<Pair>),
    /// One list per positive, aligned with the positive list.
    PerPositive(Vec<Vec<Pair>>),
}

impl NegativeSet {
    pub fn is_shared(&self) -> bool {
        matches!(self, NegativeSet::Shared(_))
    }

    /// All negative pairs, flattened in file order.
    pub fn all_pairs(&self) -> Vec<Pair> {
        match self {
            NegativeSet::Shared(p) => p.clone(),
            NegativeSet::PerPositive(lists) => lists.iter().flatten().copied().collect(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            NegativeSet::Shared(p) => p.len(),
            NegativeSet::PerPositive(lists) => lists.iter().map(Vec::len).sum(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        match self {
            NegativeSet::Shared(pairs) => {
                writeln!(w, "SHARED")?;
                for (u, v) in pairs {
                    writeln!(w, "{u} {v}")?;
                }
            }
            NegativeSet::PerPositive(lists) => {
                let k = lists.first().map_or(0, Vec::len);
                writeln!(w, "PER_POSITIVE {k}")?;
                for list in lists {
                    let toks: Vec<String> = list.iter().map(|(u, v)| format!("{u} {v}")).collect();
                    writeln!(w, "{}", toks.join(" "))?;
                }
            }
        }
        Ok(())
    }
}

pub fn parse_negative_set<R: BufRead>(reader: R) -> Result<NegativeSet> {
    let mut lines = content_lines(reader);
    let (hline, header) = match lines.next() {
        Some(item) => item?,
        None => {
            return Err(Error::MalformedLine {
                line: 1,
                reason: "missing SHARED / PER_POSITIVE header".into(),
            })
        }
    };
    let toks: Vec<&str> = header.split_whitespace().collect();
    match toks.as_slice() {
        ["SHARED"] => {
            let mut pairs = Vec::new();
            for item in lines {
                let (line, text) = item?;
                let t: Vec<&str> = text.split_whitespace().collect();
                if t.len() != 2 {
                    return Err(Error::MalformedLine {
                        line,
                        reason: format!("expected 2 fields, found {}", t.len()),
                    });
                }
                pairs.push(parse_pair_tokens(t[0], t[1], line)?);
            }
            Ok(NegativeSet::Shared(pairs))
        }
        ["PER_POSITIVE", k] => {
            let k: usize = k.parse().map_err(|_| Error::MalformedLine {
                line: hline,
                reason: format!("{k:?} is not a count"),
            })?;
            let mut lists = Vec::new();
            for item in lines {
                let (line, text) = item?;
                let t: Vec<&str> = text.split_whitespace().collect();
                if t.len() != 2 * k {
                    return Err(Error::MalformedLine {
                        line,
                        reason: format!("expected {} fields, found {}", 2 * k, t.len()),
                    });
                }
                let list = t
                    .chunks(2)
                    .map(|c| parse_pair_tokens(c[0], c[1], line))
                    .collect::<Result<Vec<_>>>()?;
                lists.push(list);
            }
            Ok(NegativeSet::PerPositive(lists))
        }
        _ => Err(Error::MalformedLine {
            line: hline,
            reason: format!("bad negative-set header {header:?}"),
        }),
    }
}

pub fn load_negative_set(path: impl AsRef<Path>) -> Result<NegativeSet> {
    let path = path.as_ref();
    parse_negative_set(open(path)?).map_err(|e| e.at(path))
}

/// Positives and fixed negatives for train / validation / test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeSplit {
    pub train_pos: Vec<Pair>,
    pub valid_pos: Vec<Pair>,
    pub test_pos: Vec<Pair>,
    pub valid_neg: NegativeSet,
    pub test_neg: NegativeSet,
}

pub const SPLIT_FILES: [&str; 5] = ["train.txt", "valid.txt", "test.txt", "valid_neg.txt", "test_neg.txt"];

/// Loads a split directory; see [`SPLIT_FILES`] for the expected names.
pub fn load_split(dir: impl AsRef<Path>) -> Result<EdgeSplit> {
    let dir = dir.as_ref();
    for name in SPLIT_FILES {
        if !dir.join(name).is_file() {
            return Err(Error::MissingFile(name.to_string()));
        }
    }
    let split = EdgeSplit {
        train_pos: load_edge_list(dir.join("train.txt"))?,
        valid_pos: load_edge_list(dir.join("valid.txt"))?,
        test_pos: load_edge_list(dir.join("test.txt"))?,
        valid_neg: load_negative_set(dir.join("valid_neg.txt"))?,
        test_neg: load_negative_set(dir.join("test_neg.txt"))?,
    };
    split.check_negatives()?;
    Ok(split)
}

fn check_eval_set(name: &str, pos: &[Pair], neg: &NegativeSet) -> Result<()> {
    if let NegativeSet::PerPositive(lists) = neg {
        if lists.len() != pos.len() {
            return Err(Error::NegCountMismatch {
                set: name.to_string(),
                expected: pos.len(),
                found: lists.len(),
            });
        }
    }
    let positives: HashSet<Pair> = pos.iter().map(|&p| canonical(p)).collect();
    for p in neg.all_pairs() {
        if positives.contains(&canonical(p)) {
            return Err(Error::NegativeIsPositive {
                set: name.to_string(),
                pair: p,
            });
        }
    }
    Ok(())
}

impl EdgeSplit {
    fn check_negatives(&self) -> Result<()> {
        check_eval_set("valid", &self.valid_pos, &self.valid_neg)?;
        check_eval_set("test", &self.test_pos, &self.test_neg)
    }

    /// Checks every endpoint against `n` and the negative-set invariants.
    pub fn validate(&self, n: usize) -> Result<()> {
        let all = self
            .train_pos
            .iter()
            .chain(&self.valid_pos)
            .chain(&self.test_pos)
            .copied()
            .chain(self.valid_neg.all_pairs())
            .chain(self.test_neg.all_pairs());
        for (u, v) in all {
            for node in [u, v] {
                if node >= n {
                    return Err(Error::NodeOutOfRange { node, n });
                }
            }
            if u == v {
                return Err(Error::SelfPair(u));
            }
        }
        self.check_negatives()
    }

    /// Graph over which every heuristic is computed. Only training positives
    /// enter the adjacency unless `include_valid` is set.
    pub fn training_graph(&self, n: usize, include_valid: bool) -> Result<Graph> {
        if include_valid {
            let mut pairs = self.train_pos.clone();
            pairs.extend_from_slice(&self.valid_pos);
            Graph::from_pairs(&pairs, n)
        } else {
            Graph::from_pairs(&self.train_pos, n)
        }
    }

    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let write_pairs = |name: &str, pairs: &[Pair]| -> Result<()> {
            let path = dir.join(name);
            let mut f = std::io::BufWriter::new(File::create(&path).map_err(|e| Error::io(&path, e))?);
            for (u, v) in pairs {
                writeln!(f, "{u} {v}").map_err(|e| Error::io(&path, e))?;
            }
            f.flush().map_err(|e| Error::io(&path, e))
        };
        write_pairs("train.txt", &self.train_pos)?;
        write_pairs("valid.txt", &self.valid_pos)?;
        write_pairs("test.txt", &self.test_pos)?;
        for (name, neg) in [("valid_neg.txt", &self.valid_neg), ("test_neg.txt", &self.test_neg)] {
            let path = dir.join(name);
            let mut f = std::io::BufWriter::new(File::create(&path).map_err(|e| Error::io(&path, e))?);
            neg.write(&mut f).map_err(|e| Error::io(&path, e))?;
            f.flush().map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g1() -> Graph {
        Graph::from_pairs(&[(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)], 4).unwrap()
    }

    #[test]
    fn parses_edge_list_in_order() {
        let pairs = parse_edge_list("0 1\n1 2".as_bytes()).unwrap();
        assert_eq!(pairs, vec![(0, 1), (1, 2)]);
        assert!(parse_edge_list("".as_bytes()).unwrap().is_empty());
        let pairs = parse_edge_list("# header\n\n2 0\n2 0\n".as_bytes()).unwrap();
        assert_eq!(pairs, vec![(2, 0), (2, 0)]);
    }

    #[test]
    fn rejects_self_loops_and_garbage() {
        assert!(matches!(
            parse_edge_list("0 0".as_bytes()),
            Err(Error::SelfLoop { line: 1 })
        ));
        assert!(matches!(
            parse_edge_list("0 1\n1 x".as_bytes()),
            Err(Error::MalformedLine { line: 2, .. })
        ));
        assert!(matches!(
            parse_edge_list("0 1 2".as_bytes()),
            Err(Error::MalformedLine { line: 1, .. })
        ));
        assert!(matches!(
            parse_edge_list("-1 2".as_bytes()),
            Err(Error::MalformedLine { .. })
        ));
    }

    #[test]
    fn builds_symmetric_dedup_csr() {
        let g = Graph::from_pairs(&[(0, 1), (1, 0)], 2).unwrap();
        assert_eq!(g.degree(0).unwrap(), 1);
        assert_eq!(g.degree(1).unwrap(), 1);

        let g = g1();
        let degs: Vec<usize> = (0..4).map(|v| g.degree(v).unwrap()).collect();
        assert_eq!(degs, vec![2, 3, 3, 2]);
        assert_eq!(g.neighbors(1), &[0, 2, 3]);

        let g = Graph::from_pairs(&[], 3).unwrap();
        assert!((0..3).all(|v| g.degree(v).unwrap() == 0));
    }

    #[test]
    fn degree_and_range_errors() {
        let g = g1();
        assert_eq!(g.degree(1).unwrap(), 3);
        assert_eq!(g.degree(0).unwrap(), 2);
        assert!(matches!(g.degree(4), Err(Error::NodeOutOfRange { node: 4, n: 4 })));
        assert!(matches!(
            Graph::from_pairs(&[(0, 5)], 3),
            Err(Error::NodeOutOfRange { node: 5, .. })
        ));
    }

    #[test]
    fn parses_features() {
        let f = parse_features("1 0\n0 1".as_bytes(), 2).unwrap();
        assert_eq!(f.dim(), 2);
        assert_eq!(f.row(0), &[1.0, 0.0]);
        assert_eq!(f.row(1), &[0.0, 1.0]);
        assert!(matches!(
            parse_features("1\n2\n3".as_bytes(), 2),
            Err(Error::RowCountMismatch { expected: 2, found: 3 })
        ));
        assert!(matches!(
            parse_features("1 nan".as_bytes(), 1),
            Err(Error::NonFiniteValue { line: 1 })
        ));
        assert!(matches!(
            parse_features("1 2\n3".as_bytes(), 2),
            Err(Error::RaggedRow { line: 2, .. })
        ));
    }

    #[test]
    fn parses_negative_sets() {
        let shared = parse_negative_set("SHARED\n0 2\n1 3\n".as_bytes()).unwrap();
        assert_eq!(shared, NegativeSet::Shared(vec![(0, 2), (1, 3)]));
        let per = parse_negative_set("PER_POSITIVE 2\n0 2 0 3\n1 3 2 3\n".as_bytes()).unwrap();
        assert_eq!(
            per,
            NegativeSet::PerPositive(vec![vec![(0, 2), (0, 3)], vec![(1, 3), (2, 3)]])
        );
        assert!(parse_negative_set("PER_POSITIVE 2\n0 2\n".as_bytes()).is_err());
        assert!(parse_negative_set("WHATEVER\n".as_bytes()).is_err());
    }

    #[test]
    fn node_count_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("graph.txt");
        std::fs::write(&p, "n=17\n").unwrap();
        assert_eq!(load_node_count(&p).unwrap(), 17);
        std::fs::write(&p, "17\n").unwrap();
        assert!(load_node_count(&p).is_err());
    }

    fn write_min_split(dir: &Path) {
        std::fs::write(dir.join("train.txt"), "0 1\n1 2\n").unwrap();
        std::fs::write(dir.join("valid.txt"), "0 2\n").unwrap();
        std::fs::write(dir.join("test.txt"), "1 3\n").unwrap();
        std::fs::write(dir.join("valid_neg.txt"), "SHARED\n0 3\n2 3\n").unwrap();
        std::fs::write(dir.join("test_neg.txt"), "SHARED\n0 3\n2 3\n").unwrap();
    }

    #[test]
    fn loads_split_dirs() {
        let dir = tempfile::tempdir().unwrap();
        write_min_split(dir.path());
        let split = load_split(dir.path()).unwrap();
        assert!(split.valid_neg.is_shared());
        assert_eq!(split.valid_pos, vec![(0, 2)]);
        split.validate(4).unwrap();
        assert!(split.validate(3).is_err());

        std::fs::write(dir.path().join("test_neg.txt"), "PER_POSITIVE 1\n0 3\n2 3\n").unwrap();
        let err = load_split(dir.path()).unwrap_err();
        assert!(matches!(
            err,
            Error::NegCountMismatch {
                expected: 1,
                found: 2,
                ..
            }
        ));

        std::fs::write(dir.path().join("test_neg.txt"), "SHARED\n3 1\n").unwrap();
        assert!(matches!(
            load_split(dir.path()).unwrap_err(),
            Error::NegativeIsPositive { .. }
        ));

        std::fs::remove_file(dir.path().join("valid.txt")).unwrap();
        match load_split(dir.path()).unwrap_err() {
            Error::MissingFile(name) => assert_eq!(name, "valid.txt"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn file_errors_carry_path() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.txt");
        std::fs::write(&p, "0 1\n3 3\n").unwrap();
        let err = load_edge_list(&p).unwrap_err();
        assert!(matches!(err.root(), Error::SelfLoop { line: 2 }));
        assert!(err.to_string().contains("e.txt"));
    }

    #[test]
    fn training_graph_optionally_merges_valid() {
        let dir = tempfile::tempdir().unwrap();
        write_min_split(dir.path());
        let split = load_split(dir.path()).unwrap();
        let g = split.training_graph(4, false).unwrap();
        assert!(!g.has_edge(0, 2));
        let g = split.training_graph(4, true).unwrap();
        assert!(g.has_edge(0, 2));
    }
}
