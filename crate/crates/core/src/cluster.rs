//! Correlation distances and minimax-linkage hierarchical clustering.
//!
//! A cluster's minimax radius is `min_x max_{x'} d(x, x')` over its members;
//! the member achieving it is the prototype. Agglomeration merges the pair of
//! clusters whose union has the smallest radius. Ties are broken by the
//! smaller pair of smallest member indices, and prototype ties by the
//! smaller index, so trees are fully deterministic.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::MeasurePanel;

/// Largest matrix the exhaustive oracle accepts.
pub const ORACLE_LIMIT: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub distance: f64,
    pub support: usize,
}

/// `1 - |pearson(x, y)|` over entries finite in both series, by the two-pass
/// formula. `None` below `min_support` shared entries or when either series
/// is constant on the shared entries.
pub fn correlation_distance(x: &[f64], y: &[f64], min_support: usize) -> Option<Correlation> {
    assert_eq!(x.len(), y.len(), "series lengths differ");
    let pairs = || {
        x.iter()
            .zip(y)
            .filter(|(a, b)| a.is_finite() && b.is_finite())
            .map(|(a, b)| (*a, *b))
    };
    let (mut n, mut sx, mut sy) = (0usize, 0.0, 0.0);
    for (a, b) in pairs() {
        n += 1;
        sx += a;
        sy += b;
    }
    if n < min_support.max(2) {
        return None;
    }
    let (mx, my) = (sx / n as f64, sy / n as f64);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in pairs() {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).abs().min(1.0);
    Some(Correlation {
        distance: 1.0 - r,
        support: n,
    })
}

/// Symmetric measure-by-measure distances. Undefined entries are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    pub ids: Vec<String>,
    d: Vec<f64>,
    /// Pairwise-complete observation counts (summed over symbols for an
    /// averaged matrix).
    support: Vec<usize>,
    /// Number of symbols whose matrices defined each entry.
    contributors: Vec<usize>,
}

impl DistanceMatrix {
    /// Matrix with every off-diagonal entry undefined.
    pub fn undefined(ids: Vec<String>) -> Self {
        let n = ids.len();
        let mut d = vec![f64::NAN; n * n];
        for i in 0..n {
            d[i * n + i] = 0.0;
        }
        DistanceMatrix {
            ids,
            d,
            support: vec![0; n * n],
            contributors: vec![0; n * n],
        }
    }

    /// Builds a matrix from full rows. Non-finite entries are undefined.
    pub fn from_rows(ids: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let n = ids.len();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::Data("distance matrix is not square".into()));
        }
        let mut m = DistanceMatrix::undefined(ids);
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let (a, b) = (rows[i][j], rows[j][i]);
                if a.is_finite() != b.is_finite() || (a.is_finite() && a != b) {
                    return Err(Error::Data(format!(
                        "distance matrix is not symmetric at ({}, {})",
                        m.ids[i], m.ids[j]
                    )));
                }
                if a.is_finite() {
                    if a < 0.0 {
                        return Err(Error::Data("negative distance".into()));
                    }
                    m.set(i, j, a, 0, 1);
                }
            }
        }
        Ok(m)
    }

    fn set(&mut self, i: usize, j: usize, v: f64, support: usize, contributors: usize) {
        let n = self.len();
        for (a, b) in [(i, j), (j, i)] {
            self.d[a * n + b] = v;
            self.support[a * n + b] = support;
            self.contributors[a * n + b] = contributors;
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let v = self.d[i * self.len() + j];
        v.is_finite().then_some(v)
    }

    /// Entry without the definedness check; NaN when undefined.
    pub fn raw(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.len() + j]
    }

    pub fn support(&self, i: usize, j: usize) -> usize {
        self.support[i * self.len() + j]
    }

    pub fn contributors(&self, i: usize, j: usize) -> usize {
        self.contributors[i * self.len() + j]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    pub fn get_by_name(&self, a: &str, b: &str) -> Option<f64> {
        self.get(self.index_of(a)?, self.index_of(b)?)
    }

    pub fn undefined_pairs(&self) -> Vec<(String, String)> {
        let n = self.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if self.get(i, j).is_none() {
                    out.push((self.ids[i].clone(), self.ids[j].clone()));
                }
            }
        }
        out
    }

    pub fn is_complete(&self) -> bool {
        self.d.iter().all(|v| v.is_finite())
    }

    /// Restriction to the given indices, in the given order.
    pub fn submatrix(&self, keep: &[usize]) -> DistanceMatrix {
        let ids = keep.iter().map(|&i| self.ids[i].clone()).collect();
        let mut m = DistanceMatrix::undefined(ids);
        for (a, &i) in keep.iter().enumerate() {
            for (b, &j) in keep.iter().enumerate() {
                if a != b {
                    let n = m.len();
                    m.d[a * n + b] = self.raw(i, j);
                    m.support[a * n + b] = self.support(i, j);
                    m.contributors[a * n + b] = self.contributors(i, j);
                }
            }
        }
        m
    }

    /// Removes measures until the matrix is complete, each time dropping the
    /// measure with the most undefined entries (the later one on ties).
    /// Returns the complete matrix and the dropped ids in drop order.
    pub fn drop_incomplete(&self) -> (DistanceMatrix, Vec<String>) {
        let mut keep: Vec<usize> = (0..self.len()).collect();
        let mut dropped = Vec::new();
        loop {
            let worst = keep
                .iter()
                .enumerate()
                .map(|(pos, &i)| {
                    let missing = keep.iter().filter(|&&j| self.get(i, j).is_none()).count();
                    (missing, pos)
                })
                .max();
            match worst {
                Some((missing, pos)) if missing > 0 => {
                    dropped.push(self.ids[keep.remove(pos)].clone());
                }
                _ => break,
            }
        }
        (self.submatrix(&keep), dropped)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let io = |e| Error::io(path, e);
        let mut w = BufWriter::new(File::create(path).map_err(io)?);
        self.write_csv_to(&mut w).map_err(io)?;
        w.flush().map_err(io)
    }

    /// Square CSV: the header row is an empty cell followed by the ids, and
    /// each row starts with its id. Undefined entries are empty fields.
    pub fn write_csv_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        for id in &self.ids {
            write!(w, ",{id}")?;
        }
        writeln!(w)?;
        for i in 0..self.len() {
            write!(w, "{}", self.ids[i])?;
            for j in 0..self.len() {
                match self.get(i, j) {
                    Some(v) => write!(w, ",{v}")?,
                    None => write!(w, ",")?,
                }
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
        let headers = rdr.headers()?.clone();
        if headers.get(0) != Some("") {
            return Err(Error::Header {
                path: path.to_path_buf(),
                expected: ",<ids>".into(),
                found: headers.iter().collect::<Vec<_>>().join(","),
            });
        }
        let ids: Vec<String> = headers.iter().skip(1).map(str::to_owned).collect();
        let mut rows = Vec::with_capacity(ids.len());
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.get(0) != ids.get(i).map(String::as_str) {
                return Err(Error::Data(format!("{}: row {} id does not match header", path.display(), i + 1)));
            }
            let row = rec
                .iter()
                .skip(1)
                .map(|s| if s.is_empty() { Ok(f64::NAN) } else { s.parse::<f64>() })
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Data(format!("{}: row {}: {e}", path.display(), i + 1)))?;
            rows.push(row);
        }
        DistanceMatrix::from_rows(ids, &rows)
    }
}

/// Options for per-symbol distance computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceOptions {
    pub min_support: usize,
    /// Columns with a smaller fraction of present cells contribute nothing.
    pub min_coverage: f64,
}

impl Default for DistanceOptions {
    fn default() -> Self {
        DistanceOptions {
            min_support: 30,
            min_coverage: 0.5,
        }
    }
}

/// Correlation distances between all pairs of panel columns.
pub fn pairwise_distances(panel: &MeasurePanel, opts: DistanceOptions) -> DistanceMatrix {
    let n = panel.cols();
    let usable: Vec<bool> = (0..n).map(|c| panel.coverage(c) >= opts.min_coverage).collect();
    let rows: Vec<Vec<Option<Correlation>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i + 1..n)
                .map(|j| {
                    if usable[i] && usable[j] {
                        correlation_distance(panel.column(i), panel.column(j), opts.min_support)
                    } else {
                        None
                    }
                })
                .collect()
        })
        .collect();
    let mut m = DistanceMatrix::undefined(panel.names().to_vec());
    for (i, row) in rows.into_iter().enumerate() {
        for (k, c) in row.into_iter().enumerate() {
            if let Some(c) = c {
                m.set(i, i + 1 + k, c.distance, c.support, 1);
            }
        }
    }
    m
}

/// Entrywise mean over the matrices defining each entry, summed in input
/// order.
pub fn average_distances(mats: &[DistanceMatrix]) -> Result<DistanceMatrix> {
    let first = mats.first().ok_or_else(|| Error::Data("no distance matrices to average".into()))?;
    if mats.iter().any(|m| m.ids != first.ids) {
        return Err(Error::MismatchedIds);
    }
    let n = first.len();
    let mut out = DistanceMatrix::undefined(first.ids.clone());
    for i in 0..n {
        for j in i + 1..n {
            let (mut sum, mut count, mut support) = (0.0, 0usize, 0usize);
            for m in mats {
                if let Some(v) = m.get(i, j) {
                    sum += v;
                    count += 1;
                    support += m.support(i, j);
                }
            }
            if count > 0 {
                out.set(i, j, sum / count as f64, support, count);
            }
        }
    }
    Ok(out)
}

/// Minimax radius and prototype of a non-empty member set. Errors if any
/// pair inside the set is undefined.
pub fn minimax_radius(members: &[usize], d: &DistanceMatrix) -> Result<(f64, usize)> {
    assert!(!members.is_empty(), "minimax radius of an empty set");
    let mut sorted = members.to_vec();
    sorted.sort_unstable();
    let mut best: Option<(f64, usize)> = None;
    for &x in &sorted {
        let mut worst = 0.0f64;
        for &y in &sorted {
            if x != y {
                let v = d.get(x, y).ok_or_else(|| {
                    Error::IncompleteMatrix(vec![(d.ids[x].clone(), d.ids[y].clone())])
                })?;
                worst = worst.max(v);
            }
        }
        if best.is_none_or(|(r, _)| worst < r) {
            best = Some((worst, x));
        }
    }
    Ok(best.unwrap())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DendrogramNode {
    /// Member indices, ascending.
    pub members: Vec<usize>,
    pub height: f64,
    pub prototype: usize,
    /// `None` for leaves; children ordered by smallest member.
    pub children: Option<[usize; 2]>,
}

/// Binary merge tree. Nodes `0..n` are the leaves in id order; node `n + k`
/// is the `k`-th merge, so the root is the last node.
#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeDendrogram {
    pub ids: Vec<String>,
    pub nodes: Vec<DendrogramNode>,
}

/// One cluster from a cut.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub node: usize,
    pub members: Vec<usize>,
    pub prototype: usize,
}

impl PrototypeDendrogram {
    fn with_leaves(ids: Vec<String>) -> Self {
        let nodes = (0..ids.len())
            .map(|i| DendrogramNode {
                members: vec![i],
                height: 0.0,
                prototype: i,
                children: None,
            })
            .collect();
        PrototypeDendrogram { ids, nodes }
    }

    fn push_merge(&mut self, a: usize, b: usize, height: f64, prototype: usize) -> usize {
        let (a, b) = if self.nodes[a].members[0] <= self.nodes[b].members[0] {
            (a, b)
        } else {
            (b, a)
        };
        let mut members = [self.nodes[a].members.as_slice(), self.nodes[b].members.as_slice()].concat();
        members.sort_unstable();
        self.nodes.push(DendrogramNode {
            members,
            height,
            prototype,
            children: Some([a, b]),
        });
        self.nodes.len() - 1
    }

    pub fn leaf_count(&self) -> usize {
        self.ids.len()
    }

    pub fn root(&self) -> Option<usize> {
        self.nodes.len().checked_sub(1)
    }

    /// Leaves in drawing order: depth-first, first child first.
    pub fn leaf_order(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.leaf_count());
        let mut stack: Vec<usize> = self.root().into_iter().collect();
        while let Some(i) = stack.pop() {
            match self.nodes[i].children {
                Some([a, b]) => {
                    stack.push(b);
                    stack.push(a);
                }
                None => out.push(i),
            }
        }
        out
    }

    /// Largest merge height inside each node's subtree.
    fn subtree_max_heights(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            out[i] = match node.children {
                Some([a, b]) => node.height.max(out[a]).max(out[b]),
                None => 0.0,
            };
        }
        out
    }

    /// Maximal subtrees whose merge heights are all below `h`; a leaf always
    /// forms a cluster on its own. Clusters are ordered by smallest member.
    pub fn cut_at_height(&self, h: f64) -> Vec<Cluster> {
        let max_h = self.subtree_max_heights();
        let mut out = Vec::new();
        let mut stack: Vec<usize> = self.root().into_iter().collect();
        while let Some(i) = stack.pop() {
            let node = &self.nodes[i];
            match node.children {
                Some([a, b]) if max_h[i] >= h => {
                    stack.push(b);
                    stack.push(a);
                }
                _ => out.push(Cluster {
                    node: i,
                    members: node.members.clone(),
                    prototype: node.prototype,
                }),
            }
        }
        out.sort_by_key(|c| c.members[0]);
        out
    }

    /// Number of parent/child pairs where the parent sits lower.
    pub fn inversions(&self) -> usize {
        self.nodes
            .iter()
            .filter_map(|n| n.children.map(|c| (n.height, c)))
            .map(|(h, [a, b])| (self.nodes[a].height > h) as usize + (self.nodes[b].height > h) as usize)
            .sum()
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = TreeDoc {
            leaves: self.ids.clone(),
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeDoc {
                    members: n.members.iter().map(|&m| self.ids[m].clone()).collect(),
                    height: n.height,
                    prototype: self.ids[n.prototype].clone(),
                    children: n.children,
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: TreeDoc = serde_json::from_str(text)?;
        let index = |name: &str| {
            doc.leaves
                .iter()
                .position(|l| l == name)
                .ok_or_else(|| Error::Data(format!("tree refers to unknown leaf {name:?}")))
        };
        let n = doc.leaves.len();
        if doc.nodes.len() != (2 * n).saturating_sub(1) {
            return Err(Error::Data(format!(
                "tree with {n} leaves must have {} nodes, found {}",
                (2 * n).saturating_sub(1),
                doc.nodes.len()
            )));
        }
        let mut nodes = Vec::with_capacity(doc.nodes.len());
        for (i, nd) in doc.nodes.iter().enumerate() {
            let mut members = nd.members.iter().map(|m| index(m)).collect::<Result<Vec<_>>>()?;
            members.sort_unstable();
            if let Some([a, b]) = nd.children {
                if a >= i || b >= i {
                    return Err(Error::Data(format!("node {i} has a child that is not an earlier node")));
                }
            } else if i >= n {
                return Err(Error::Data(format!("internal node {i} has no children")));
            }
            nodes.push(DendrogramNode {
                members,
                height: nd.height,
                prototype: index(&nd.prototype)?,
                children: nd.children,
            });
        }
        Ok(PrototypeDendrogram {
            ids: doc.leaves,
            nodes,
        })
    }

    /// Newick form. An internal node is written `(left,right)prototype:height`
    /// and a leaf by its name; the root carries its height too.
    pub fn to_newick(&self) -> String {
        fn label(s: &str) -> String {
            if s.chars().any(|c| "()[]:;,' \t".contains(c)) {
                format!("'{}'", s.replace('\'', "''"))
            } else {
                s.to_owned()
            }
        }
        fn walk(t: &PrototypeDendrogram, i: usize, out: &mut String) {
            let node = &t.nodes[i];
            match node.children {
                None => out.push_str(&label(&t.ids[i])),
                Some([a, b]) => {
                    out.push('(');
                    walk(t, a, out);
                    out.push(',');
                    walk(t, b, out);
                    out.push(')');
                    out.push_str(&label(&t.ids[node.prototype]));
                    out.push(':');
                    out.push_str(&node.height.to_string());
                }
            }
        }
        let mut out = String::new();
        if let Some(root) = self.root() {
            walk(self, root, &mut out);
        }
        out.push(';');
        out
    }
}

#[derive(Serialize, Deserialize)]
struct TreeDoc {
    leaves: Vec<String>,
    nodes: Vec<NodeDoc>,
}

#[derive(Serialize, Deserialize)]
struct NodeDoc {
    members: Vec<String>,
    height: f64,
    prototype: String,
    children: Option<[usize; 2]>,
}

fn require_complete(d: &DistanceMatrix) -> Result<()> {
    let missing = d.undefined_pairs();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::IncompleteMatrix(missing))
    }
}

/// Merge key: height first, then the smaller and larger of the two
/// clusters' smallest members.
fn better(a: (f64, usize, usize), b: (f64, usize, usize)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && (a.1, a.2) < (b.1, b.2))
}

/// Minimax-linkage agglomerative clustering.
///
/// `far[x][c]` holds the largest distance from point `x` to cluster `c`, so
/// a union's radius is `min_x max(far[x][g], far[x][h])` without rescanning
/// pairs. Linkages are cached and only those involving the newest cluster
/// are recomputed, giving O(n^3) overall.
pub fn minimax_linkage_cluster(d: &DistanceMatrix) -> Result<PrototypeDendrogram> {
    require_complete(d)?;
    let n = d.len();
    let mut tree = PrototypeDendrogram::with_leaves(d.ids.clone());
    if n < 2 {
        return Ok(tree);
    }
    let total = 2 * n - 1;
    let mut far = vec![vec![f64::NAN; total]; n];
    for (x, row) in far.iter_mut().enumerate() {
        for (y, slot) in row.iter_mut().take(n).enumerate() {
            *slot = d.raw(x, y);
        }
    }
    // linkage[a][b] = (radius, prototype) of the union, for a < b
    let mut linkage = vec![vec![(f64::NAN, 0usize); total]; total];
    let union_radius = |far: &Vec<Vec<f64>>, tree: &PrototypeDendrogram, a: usize, b: usize| {
        let mut best = (f64::INFINITY, usize::MAX);
        let (ma, mb) = (&tree.nodes[a].members, &tree.nodes[b].members);
        // walk both sorted member lists in ascending index order
        let (mut i, mut j) = (0, 0);
        while i < ma.len() || j < mb.len() {
            let x = if j >= mb.len() || (i < ma.len() && ma[i] < mb[j]) {
                i += 1;
                ma[i - 1]
            } else {
                j += 1;
                mb[j - 1]
            };
            let r = far[x][a].max(far[x][b]);
            if r < best.0 {
                best = (r, x);
            }
        }
        best
    };
    let mut active: Vec<usize> = (0..n).collect();
    for a in 0..n {
        for b in a + 1..n {
            linkage[a][b] = union_radius(&far, &tree, a, b);
        }
    }
    while active.len() > 1 {
        let mut pick: Option<((f64, usize, usize), usize, usize)> = None;
        for (p, &a) in active.iter().enumerate() {
            for &b in &active[p + 1..] {
                let (lo, hi) = (a.min(b), a.max(b));
                let (ma, mb) = (tree.nodes[a].members[0], tree.nodes[b].members[0]);
                let key = (linkage[lo][hi].0, ma.min(mb), ma.max(mb));
                if pick.is_none_or(|(k, _, _)| better(key, k)) {
                    pick = Some((key, lo, hi));
                }
            }
        }
        let (_, a, b) = pick.unwrap();
        let (height, proto) = linkage[a][b];
        let new = tree.push_merge(a, b, height, proto);
        for row in far.iter_mut() {
            row[new] = row[a].max(row[b]);
        }
        active.retain(|&c| c != a && c != b);
        for &c in &active {
            linkage[c][new] = union_radius(&far, &tree, c, new);
        }
        active.push(new);
    }
    Ok(tree)
}

/// Exhaustive reference implementation: every step rescans all pairwise
/// distances of every candidate union. For verification only.
pub fn oracle_minimax(d: &DistanceMatrix) -> Result<PrototypeDendrogram> {
    if d.len() > ORACLE_LIMIT {
        return Err(Error::TooLarge {
            n: d.len(),
            limit: ORACLE_LIMIT,
        });
    }
    require_complete(d)?;
    let mut tree = PrototypeDendrogram::with_leaves(d.ids.clone());
    let mut active: Vec<usize> = (0..d.len()).collect();
    while active.len() > 1 {
        let mut pick: Option<((f64, usize, usize), usize, usize, usize)> = None;
        for p in 0..active.len() {
            for q in p + 1..active.len() {
                let (a, b) = (active[p], active[q]);
                let union = [tree.nodes[a].members.as_slice(), tree.nodes[b].members.as_slice()].concat();
                let (r, proto) = minimax_radius(&union, d)?;
                let (ma, mb) = (tree.nodes[a].members[0], tree.nodes[b].members[0]);
                let key = (r, ma.min(mb), ma.max(mb));
                if pick.is_none_or(|(k, ..)| better(key, k)) {
                    pick = Some((key, a, b, proto));
                }
            }
        }
        let ((r, ..), a, b, proto) = pick.unwrap();
        let new = tree.push_merge(a, b, r, proto);
        active.retain(|&c| c != a && c != b);
        active.push(new);
    }
    Ok(tree)
}

/// Repeats cluster-and-cut on the surviving prototypes until no cluster
/// merges more than one of them. Each returned cluster lists every original
/// measure absorbed into it; indices refer to `d`.
pub fn iterative_prototypes(d: &DistanceMatrix, h: f64) -> Result<Vec<Cluster>> {
    let mut current: Vec<(usize, Vec<usize>)> = (0..d.len()).map(|i| (i, vec![i])).collect();
    loop {
        let protos: Vec<usize> = current.iter().map(|(p, _)| *p).collect();
        let sub = d.submatrix(&protos);
        let tree = minimax_linkage_cluster(&sub)?;
        let clusters = tree.cut_at_height(h);
        let done = clusters.iter().all(|c| c.members.len() == 1);
        let next: Vec<(usize, Vec<usize>)> = clusters
            .iter()
            .map(|c| {
                let mut members: Vec<usize> =
                    c.members.iter().flat_map(|&m| current[m].1.iter().copied()).collect();
                members.sort_unstable();
                (protos[c.prototype], members)
            })
            .collect();
        current = next;
        if done {
            break;
        }
    }
    let mut out: Vec<Cluster> = current
        .into_iter()
        .map(|(prototype, members)| Cluster {
            node: prototype,
            members,
            prototype,
        })
        .collect();
    out.sort_by_key(|c| c.members[0]);
    Ok(out)
}
