use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::models::{pair_count, pair_index, pairs};

/// Undirected simple graph on `n` labeled vertices.
///
/// Edge indicators are packed one bit per unordered pair in `pair_index`
/// order, so self-loops cannot be represented.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    n: usize,
    bits: Vec<u64>,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            bits: vec![0; pair_count(n).div_ceil(64)],
        }
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Self::empty(n);
        for e in 0..pair_count(n) {
            g.set_pair(e, true);
        }
        g
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pair_count(&self) -> usize {
        pair_count(self.n)
    }

    pub fn has_pair(&self, e: usize) -> bool {
        (self.bits[e / 64] >> (e % 64)) & 1 == 1
    }

    pub fn set_pair(&mut self, e: usize, present: bool) {
        let mask = 1u64 << (e % 64);
        if present {
            self.bits[e / 64] |= mask;
        } else {
            self.bits[e / 64] &= !mask;
        }
    }

    /// Edge test for `i != j` in either order.
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        a != b && self.has_pair(pair_index(self.n, a, b))
    }

    pub fn set_edge(&mut self, i: usize, j: usize, present: bool) {
        assert!(i != j, "self-loops are not representable");
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.set_pair(pair_index(self.n, a, b), present);
    }

    pub fn edge_count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Edges as `(i, j)`, `i < j`, in `pair_index` order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        pairs(self.n)
            .enumerate()
            .filter(|&(e, _)| self.has_pair(e))
            .map(|(_, ij)| ij)
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.bits
    }

    /// Text form: a line with `n`, then one `i j` line per edge.
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for (i, j) in self.edges() {
            let _ = writeln!(out, "{i} {j}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(no, l)| (no + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (no, first) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing node count".into(),
        })?;
        let n: usize = first.parse().map_err(|_| Error::Parse {
            line: no,
            msg: format!("bad node count {first:?}"),
        })?;
        let mut g = Graph::empty(n);
        let mut last: Option<usize> = None;
        for (no, line) in lines {
            let mut it = line.split_whitespace().map(str::parse::<usize>);
            let (Some(Ok(i)), Some(Ok(j)), None) = (it.next(), it.next(), it.next()) else {
                return Err(Error::Parse {
                    line: no,
                    msg: format!("expected \"i j\", got {line:?}"),
                });
            };
            if !(i < j && j < n) {
                return Err(Error::Parse {
                    line: no,
                    msg: format!("edge ({i}, {j}) needs i < j < {n}"),
                });
            }
            let e = pair_index(n, i, j);
            if last.is_some_and(|prev| prev >= e) {
                return Err(Error::Parse {
                    line: no,
                    msg: "edges must be sorted by pair index without repeats".into(),
                });
            }
            last = Some(e);
            g.set_pair(e, true);
        }
        Ok(g)
    }
}

/// Community labels of the `n` vertices, stored 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabelVector {
    labels: Vec<usize>,
    k: usize,
}

impl LabelVector {
    /// From 0-based labels, each below `k`.
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if let Some(pos) = labels.iter().position(|&l| l >= k) {
            return Err(Error::InvalidParams(format!(
                "label {} of node {pos} is outside [1..{k}]",
                labels[pos] + 1
            )));
        }
        Ok(Self { labels, k })
    }

    /// From 1-based labels as used in files.
    pub fn from_one_based(labels: &[usize], k: usize) -> Result<Self> {
        if let Some(pos) = labels.iter().position(|&l| l == 0 || l > k) {
            return Err(Error::InvalidParams(format!(
                "label {} of node {pos} is outside [1..{k}]",
                labels[pos]
            )));
        }
        Self::new(labels.iter().map(|l| l - 1).collect(), k)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// 0-based label of node `i`.
    pub fn get(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.labels
    }

    /// One 1-based label per line.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.labels.len() * 2);
        for l in &self.labels {
            let _ = writeln!(out, "{}", l + 1);
        }
        out
    }

    pub fn from_text(text: &str, k: usize) -> Result<Self> {
        let labels = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(no, l)| {
                l.trim().parse::<usize>().map_err(|_| Error::Parse {
                    line: no + 1,
                    msg: format!("bad label {l:?}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_one_based(&labels, k)
    }
}
