//! Tab-separated network, label and matrix files.
//!
//! Layer files list each undirected edge once under a `src dst weight`
//! header. Node ids are strings, numbered in first-seen order across every
//! layer file of a run. A line `id id w` sets the diagonal entry and is how
//! written layers declare nodes that have no edges.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use multiplex_nmf::{LayerMatrix, MultiplexNetwork};
use nalgebra::DMatrix;

use crate::error::CliError;

pub const LAYER_HEADER: [&str; 3] = ["src", "dst", "weight"];
pub const TRUTH_HEADER: [&str; 2] = ["node", "label"];
pub const ASSIGNMENT_HEADER: [&str; 2] = ["node", "cluster"];
pub const ANNOTATION_HEADER: [&str; 2] = ["node", "term"];

/// Dense numbering of string ids in first-seen order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NodeIndex {
    ids: Vec<String>,
    positions: HashMap<String, usize>,
}

impl NodeIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_ids(ids: impl IntoIterator<Item = String>) -> Self {
        let mut index = Self::new();
        for id in ids {
            index.intern(&id);
        }
        index
    }

    /// Index of `id`, assigning the next free one if it is new.
    pub fn intern(&mut self, id: &str) -> usize {
        if let Some(&i) = self.positions.get(id) {
            return i;
        }
        let i = self.ids.len();
        self.ids.push(id.to_string());
        self.positions.insert(id.to_string(), i);
        i
    }

    pub fn get(&self, id: &str) -> Option<usize> {
        self.positions.get(id).copied()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Records of a tab-separated file after its header, with line numbers.
fn read_rows(path: &Path, header: &[&str]) -> Result<Vec<(usize, Vec<String>)>, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().delimiter(b'\t').has_headers(true).quoting(false).from_reader(file);
    let found = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(CliError::format(path, 1, format!("expected header `{}`", header.join("\t"))));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        rows.push((line, record.iter().map(str::to_string).collect()));
    }
    Ok(rows)
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => CliError::io(path, source),
        kind => CliError::format(path, line, format!("{kind:?}")),
    }
}

fn tsv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>, CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::WriterBuilder::new()
        .delimiter(b'\t')
        .quote_style(csv::QuoteStyle::Never)
        .from_writer(BufWriter::new(file)))
}

fn finish<W: Write>(path: &Path, writer: csv::Writer<W>) -> Result<(), CliError> {
    let mut inner = writer.into_inner().map_err(|e| CliError::io(path, e.into_error()))?;
    inner.flush().map_err(|e| CliError::io(path, e))
}

fn write_row<W: Write>(path: &Path, writer: &mut csv::Writer<W>, row: &[&str]) -> Result<(), CliError> {
    writer.write_record(row).map_err(|e| csv_error(path, e))
}

fn check_id(path: &Path, line: usize, id: &str) -> Result<(), CliError> {
    if id.is_empty() {
        return Err(CliError::format(path, line, "empty node id"));
    }
    Ok(())
}

struct Edge {
    src: usize,
    dst: usize,
    weight: f64,
    line: usize,
}

/// Loads layer files into a network whose node names are the ids in
/// first-seen order. Nodes absent from a layer are isolated there.
pub fn read_layers<P: AsRef<Path>>(paths: &[P]) -> Result<(MultiplexNetwork, NodeIndex), CliError> {
    if paths.is_empty() {
        return Err(CliError::InvalidArgument("at least one layer file is required".into()));
    }
    let mut index = NodeIndex::new();
    let mut edge_lists = Vec::with_capacity(paths.len());
    for path in paths {
        let path = path.as_ref();
        let mut edges = Vec::new();
        for (line, row) in read_rows(path, &LAYER_HEADER)? {
            check_id(path, line, &row[0])?;
            check_id(path, line, &row[1])?;
            let weight: f64 = row[2]
                .parse()
                .map_err(|_| CliError::format(path, line, format!("weight `{}` is not a number", row[2])))?;
            if !weight.is_finite() || weight < 0.0 {
                return Err(CliError::format(path, line, format!("weight {weight} must be finite and non-negative")));
            }
            let src = index.intern(&row[0]);
            let dst = index.intern(&row[1]);
            edges.push(Edge { src, dst, weight, line });
        }
        edge_lists.push(edges);
    }
    let n = index.len();
    if n == 0 {
        return Err(CliError::InvalidArgument("layer files contain no nodes".into()));
    }
    let mut layers = Vec::with_capacity(paths.len());
    for (path, edges) in paths.iter().zip(edge_lists) {
        let path = path.as_ref();
        let mut a = DMatrix::zeros(n, n);
        let mut seen = HashSet::new();
        for e in edges {
            if !seen.insert((e.src.min(e.dst), e.src.max(e.dst))) {
                return Err(CliError::format(path, e.line, "edge listed more than once"));
            }
            a[(e.src, e.dst)] = e.weight;
            a[(e.dst, e.src)] = e.weight;
        }
        layers.push(LayerMatrix::new(a)?);
    }
    let network = MultiplexNetwork::new(layers)?.with_node_names(index.ids().to_vec())?;
    Ok((network, index))
}

/// Writes one layer: a diagonal line for every node, then each nonzero
/// off-diagonal entry of the upper triangle, row by row.
pub fn write_layer(path: &Path, layer: &LayerMatrix, names: &[String]) -> Result<(), CliError> {
    let a = layer.values();
    if names.len() != a.nrows() {
        return Err(CliError::InvalidArgument(format!("{} names for {} nodes", names.len(), a.nrows())));
    }
    let mut w = tsv_writer(path)?;
    write_row(path, &mut w, &LAYER_HEADER)?;
    for (i, name) in names.iter().enumerate() {
        write_row(path, &mut w, &[name, name, &a[(i, i)].to_string()])?;
    }
    for i in 0..a.nrows() {
        for j in i + 1..a.ncols() {
            if a[(i, j)] != 0.0 {
                write_row(path, &mut w, &[&names[i], &names[j], &a[(i, j)].to_string()])?;
            }
        }
    }
    finish(path, w)
}

/// Reads a two-column `node <value>` file covering exactly the nodes of
/// `index`, numbering distinct values in first-seen order. Returns the
/// per-node value numbers (in index order) and the number of values.
pub fn read_labels(path: &Path, header: &[&str; 2], index: &NodeIndex) -> Result<(Vec<usize>, usize), CliError> {
    let mut values = NodeIndex::new();
    let mut labels = vec![None; index.len()];
    for (line, row) in read_rows(path, header)? {
        check_id(path, line, &row[0])?;
        let node = index.get(&row[0]).ok_or_else(|| CliError::UnknownNode { path: path.into(), node: row[0].clone() })?;
        if labels[node].is_some() {
            return Err(CliError::format(path, line, format!("node `{}` listed more than once", row[0])));
        }
        labels[node] = Some(values.intern(&row[1]));
    }
    let labels = labels
        .into_iter()
        .enumerate()
        .map(|(i, l)| l.ok_or_else(|| CliError::MissingNode { path: path.into(), node: index.ids()[i].clone() }))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((labels, values.len()))
}

/// Reads an assignment file, numbering nodes in file order.
pub fn read_assignment(path: &Path) -> Result<(NodeIndex, Vec<usize>, usize), CliError> {
    let rows = read_rows(path, &ASSIGNMENT_HEADER)?;
    let mut index = NodeIndex::new();
    for (line, row) in &rows {
        check_id(path, *line, &row[0])?;
        index.intern(&row[0]);
    }
    let (labels, k) = read_labels(path, &ASSIGNMENT_HEADER, &index)?;
    Ok((index, labels, k))
}

/// Per-node term lists from `node term` lines, with terms numbered in
/// first-seen order. Nodes without lines get no terms.
pub fn read_annotations(path: &Path, index: &NodeIndex) -> Result<(Vec<Vec<usize>>, usize), CliError> {
    let mut terms = NodeIndex::new();
    let mut per_node = vec![Vec::new(); index.len()];
    for (line, row) in read_rows(path, &ANNOTATION_HEADER)? {
        check_id(path, line, &row[0])?;
        if row[1].is_empty() {
            return Err(CliError::format(path, line, "empty term"));
        }
        let node = index.get(&row[0]).ok_or_else(|| CliError::UnknownNode { path: path.into(), node: row[0].clone() })?;
        per_node[node].push(terms.intern(&row[1]));
    }
    Ok((per_node, terms.len()))
}

/// `node <value>` lines in node order.
pub fn write_labels(path: &Path, header: &[&str; 2], names: &[String], labels: &[usize]) -> Result<(), CliError> {
    let mut w = tsv_writer(path)?;
    write_row(path, &mut w, header)?;
    for (name, label) in names.iter().zip(labels) {
        write_row(path, &mut w, &[name, &label.to_string()])?;
    }
    finish(path, w)
}

/// Dense factor with a `node c0 c1 ...` header.
pub fn write_factor(path: &Path, names: &[String], h: &DMatrix<f64>) -> Result<(), CliError> {
    let mut w = tsv_writer(path)?;
    let mut header = vec!["node".to_string()];
    header.extend((0..h.ncols()).map(|c| format!("c{c}")));
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for (i, name) in names.iter().enumerate() {
        let mut row = vec![name.clone()];
        row.extend(h.row(i).iter().map(f64::to_string));
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    finish(path, w)
}

/// Writes comma-separated rows under a header.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = csv::WriterBuilder::new().from_writer(BufWriter::new(file));
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| csv_error(path, e))?;
    }
    finish(path, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let path = dir.join(name);
        std::fs::write(&path, body).unwrap();
        path
    }

    #[test]
    fn ids_are_numbered_across_files() {
        let dir = tempfile::tempdir().unwrap();
        let l1 = write(dir.path(), "a.tsv", "src\tdst\tweight\nx\ty\t1\n");
        let l2 = write(dir.path(), "b.tsv", "src\tdst\tweight\nz\tx\t2.5\n");
        let (net, index) = read_layers(&[l1, l2]).unwrap();
        assert_eq!(index.ids(), ["x", "y", "z"]);
        assert_eq!(net.layers()[0].values(), &dmatrix![0.0, 1.0, 0.0; 1.0, 0.0, 0.0; 0.0, 0.0, 0.0]);
        assert_eq!(net.layers()[1].values()[(0, 2)], 2.5);
        assert_eq!(net.layers()[1].values()[(2, 0)], 2.5);
    }

    #[test]
    fn malformed_layers_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cases = [
            "from\tto\tweight\na\tb\t1\n",
            "src\tdst\tweight\na\tb\n",
            "src\tdst\tweight\na\tb\tx\n",
            "src\tdst\tweight\na\tb\t-1\n",
            "src\tdst\tweight\na\tb\tNaN\n",
            "src\tdst\tweight\na\tb\t1\nb\ta\t1\n",
            "src\tdst\tweight\n\tb\t1\n",
        ];
        for body in cases {
            let path = write(dir.path(), "bad.tsv", body);
            let err = read_layers(&[path]).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{body:?}");
        }
    }

    #[test]
    fn layer_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let a = LayerMatrix::new(dmatrix![0.0, 0.1, 0.0; 0.1, 0.0, 1.0 / 3.0; 0.0, 1.0 / 3.0, 0.0]).unwrap();
        let names = vec!["p".to_string(), "q".to_string(), "r".to_string()];
        let path = dir.path().join("l.tsv");
        write_layer(&path, &a, &names).unwrap();
        let (net, index) = read_layers(&[&path]).unwrap();
        assert_eq!(index.ids(), names.as_slice());
        assert_eq!(net.layers()[0], a);
    }

    #[test]
    fn isolated_nodes_survive_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let a = LayerMatrix::new(DMatrix::zeros(2, 2)).unwrap();
        let names = vec!["lonely".to_string(), "alone".to_string()];
        let path = dir.path().join("l.tsv");
        write_layer(&path, &a, &names).unwrap();
        let (net, index) = read_layers(&[&path]).unwrap();
        assert_eq!(index.ids(), names.as_slice());
        assert_eq!(net.layers()[0], a);
    }

    #[test]
    fn labels_must_cover_exactly_the_nodes() {
        let dir = tempfile::tempdir().unwrap();
        let index = NodeIndex::from_ids(["a".to_string(), "b".to_string()]);
        let ok = write(dir.path(), "t.tsv", "node\tlabel\nb\tx\na\ty\n");
        assert_eq!(read_labels(&ok, &TRUTH_HEADER, &index).unwrap(), (vec![1, 0], 2));
        let unknown = write(dir.path(), "u.tsv", "node\tlabel\na\t0\nb\t0\nc\t1\n");
        assert!(matches!(read_labels(&unknown, &TRUTH_HEADER, &index), Err(CliError::UnknownNode { .. })));
        let missing = write(dir.path(), "m.tsv", "node\tlabel\na\t0\n");
        assert!(matches!(read_labels(&missing, &TRUTH_HEADER, &index), Err(CliError::MissingNode { .. })));
        let twice = write(dir.path(), "d.tsv", "node\tlabel\na\t0\na\t0\nb\t1\n");
        assert!(matches!(read_labels(&twice, &TRUTH_HEADER, &index), Err(CliError::Format { .. })));
    }

    #[test]
    fn annotations_map_terms() {
        let dir = tempfile::tempdir().unwrap();
        let index = NodeIndex::from_ids(["a".to_string(), "b".to_string(), "c".to_string()]);
        let path = write(dir.path(), "go.tsv", "node\tterm\na\tGO:1\nb\tGO:2\na\tGO:2\n");
        let (terms, vocabulary) = read_annotations(&path, &index).unwrap();
        assert_eq!(terms, vec![vec![0, 1], vec![1], vec![]]);
        assert_eq!(vocabulary, 2);
        let stray = write(dir.path(), "s.tsv", "node\tterm\nzz\tGO:1\n");
        assert!(matches!(read_annotations(&stray, &index), Err(CliError::UnknownNode { .. })));
    }
}
