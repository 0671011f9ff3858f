//! Loader and writer for the standard TUDataset text layout.
//!
//! A dataset `DS` in `dir` consists of:
//!   - `DS_A.txt`               edge lines `i, j` with 1-indexed global ids
//!   - `DS_graph_indicator.txt` one 1-indexed graph id per node line
//!   - `DS_graph_labels.txt`    one integer per graph
//!   - `DS_node_labels.txt`     one integer per node (optional)
//!   - `DS_edge_labels.txt`     parsed-and-ignored (optional)
//!
//! Line terminators may be LF or CRLF; whitespace around commas is fine.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::graph::{Dataset, Graph, LoadNotes};

/// Loads `dir/{name}_A.txt` and friends into a [`Dataset`].
///
/// Edges are deduplicated into undirected pairs; both `(i,j)` and `(j,i)`
/// lines are accepted and a one-directional line still produces the edge
/// (with a warning counted in the load notes). Self-loop lines are dropped.
/// Graph labels are remapped to contiguous `[0, C)` and node labels to
/// indices of the ascending alphabet of raw values. When the node label
/// file is missing, node degrees stand in for labels.
pub fn load_dataset(dir: impl AsRef<Path>, name: &str) -> Result<Dataset> {
    let dir = dir.as_ref();
    let path = |suffix: &str| dir.join(format!("{name}_{suffix}.txt"));

    let indicator_path = path("graph_indicator");
    let indicator = read_int_lines(&indicator_path)?;
    let num_nodes = indicator.len();
    if num_nodes == 0 {
        return Err(Error::EmptyDataset);
    }
    let num_graphs = indicator.iter().copied().max().unwrap_or(0);
    if num_graphs <= 0 {
        return Err(Error::format(
            display_name(&indicator_path),
            1,
            "graph ids must be positive",
        ));
    }
    let num_graphs = num_graphs as usize;
    for (i, &gid) in indicator.iter().enumerate() {
        if gid < 1 {
            return Err(Error::format(
                display_name(&indicator_path),
                i + 1,
                format!("graph id {gid} out of range"),
            ));
        }
    }

    // Global node id -> (graph index, local node index), in file order.
    let mut graph_sizes = vec![0usize; num_graphs];
    let mut local_index = Vec::with_capacity(num_nodes);
    for &gid in &indicator {
        let g = gid as usize - 1;
        local_index.push((g, graph_sizes[g]));
        graph_sizes[g] += 1;
    }

    let label_path = path("graph_labels");
    let raw_graph_labels = read_int_lines(&label_path)?;
    if raw_graph_labels.len() != num_graphs {
        return Err(Error::format(
            display_name(&label_path),
            raw_graph_labels.len(),
            format!(
                "{} graph labels for {num_graphs} graphs",
                raw_graph_labels.len()
            ),
        ));
    }
    let class_alphabet: Vec<i64> = raw_graph_labels
        .iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let graph_labels: Vec<usize> = raw_graph_labels
        .iter()
        .map(|l| class_alphabet.binary_search(l).expect("label in alphabet"))
        .collect();

    let edge_path = path("A");
    let edge_file = display_name(&edge_path);
    let text = fs::read_to_string(&edge_path).map_err(|e| map_missing(&edge_path, e))?;
    let mut directed: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut per_graph_edges: Vec<BTreeSet<(usize, usize)>> =
        vec![BTreeSet::new(); num_graphs];
    let mut self_loops_dropped = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (a, b) = line.split_once(',').ok_or_else(|| {
            Error::format(&edge_file, lineno + 1, "expected 'i, j'")
        })?;
        let parse = |s: &str| -> Result<usize> {
            let id: i64 = s.trim().parse().map_err(|_| {
                Error::format(&edge_file, lineno + 1, format!("bad node id '{}'", s.trim()))
            })?;
            if id < 1 || id as usize > num_nodes {
                return Err(Error::format(
                    &edge_file,
                    lineno + 1,
                    format!("node id {id} out of range 1..={num_nodes}"),
                ));
            }
            Ok(id as usize - 1)
        };
        let u = parse(a)?;
        let v = parse(b)?;
        if u == v {
            self_loops_dropped += 1;
            continue;
        }
        let (gu, lu) = local_index[u];
        let (gv, lv) = local_index[v];
        if gu != gv {
            return Err(Error::format(
                &edge_file,
                lineno + 1,
                format!("edge crosses graphs {} and {}", gu + 1, gv + 1),
            ));
        }
        directed.insert((u, v));
        per_graph_edges[gu].insert((lu.min(lv), lu.max(lv)));
    }
    let mut asymmetric_edges = 0usize;
    for &(u, v) in &directed {
        if !directed.contains(&(v, u)) {
            asymmetric_edges += 1;
        }
    }
    if asymmetric_edges > 0 {
        log::warn!(
            "{name}: {asymmetric_edges} edge line(s) had no reciprocal; symmetrized"
        );
    }
    if self_loops_dropped > 0 {
        log::warn!("{name}: dropped {self_loops_dropped} self-loop line(s)");
    }

    let node_label_path = path("node_labels");
    let (raw_node_labels, degree_proxy) = if node_label_path.exists() {
        let labels = read_int_lines(&node_label_path)?;
        if labels.len() != num_nodes {
            return Err(Error::format(
                display_name(&node_label_path),
                labels.len(),
                format!("{} node labels for {num_nodes} nodes", labels.len()),
            ));
        }
        (labels, false)
    } else {
        // Degree proxy: labels are degrees, counted over undirected edges.
        let undirected: BTreeSet<(usize, usize)> = directed
            .iter()
            .map(|&(u, v)| (u.min(v), u.max(v)))
            .collect();
        let mut degrees = vec![0i64; num_nodes];
        for &(u, v) in &undirected {
            degrees[u] += 1;
            degrees[v] += 1;
        }
        (degrees, true)
    };
    let node_alphabet: Vec<i64> = raw_node_labels
        .iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    // Assemble graphs in indicator order.
    let mut node_labels_per_graph: Vec<Vec<usize>> = graph_sizes
        .iter()
        .map(|&n| Vec::with_capacity(n))
        .collect();
    for (global, &raw) in raw_node_labels.iter().enumerate() {
        let (g, _) = local_index[global];
        let idx = node_alphabet.binary_search(&raw).expect("label in alphabet");
        node_labels_per_graph[g].push(idx);
    }
    let mut graphs = Vec::with_capacity(num_graphs);
    for g in 0..num_graphs {
        let edges: Vec<(usize, usize)> = per_graph_edges[g].iter().copied().collect();
        graphs.push(Graph::new(
            graph_sizes[g],
            std::mem::take(&mut node_labels_per_graph[g]),
            &edges,
        )?);
    }

    Ok(Dataset::from_parts(
        name.to_string(),
        graphs,
        graph_labels,
        class_alphabet.len(),
        node_alphabet,
        degree_proxy,
        LoadNotes {
            self_loops_dropped,
            asymmetric_edges,
        },
    ))
}

/// Structural warnings: dropped self-loops and asymmetric lines recorded at
/// load time, plus isolated nodes and empty graphs found by inspection.
/// Never mutates the dataset.
pub fn validate(d: &Dataset) -> Vec<String> {
    let mut warnings = Vec::new();
    if d.load_notes.self_loops_dropped > 0 {
        warnings.push(format!(
            "dropped {} self-loop edge line(s) at load",
            d.load_notes.self_loops_dropped
        ));
    }
    if d.load_notes.asymmetric_edges > 0 {
        warnings.push(format!(
            "symmetrized {} edge line(s) without a reciprocal",
            d.load_notes.asymmetric_edges
        ));
    }
    for (i, g) in d.graphs().iter().enumerate() {
        if g.num_nodes() == 0 {
            warnings.push(format!("graph {i} has no nodes"));
            continue;
        }
        let isolated = (0..g.num_nodes()).filter(|&v| g.degree(v) == 0).count();
        if isolated > 0 {
            warnings.push(format!("graph {i} has {isolated} isolated node(s)"));
        }
    }
    warnings
}

/// Writes `d` back out in the TUDataset layout so that loading the result
/// reconstructs the same structure. Node labels are written as their raw
/// alphabet symbols; each edge is written in both directions.
pub fn write_fixture(d: &Dataset, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = d.name();
    let open = |suffix: &str| -> Result<(PathBuf, fs::File)> {
        let p = dir.join(format!("{name}_{suffix}.txt"));
        let f = fs::File::create(&p).map_err(|e| Error::io(&p, e))?;
        Ok((p, f))
    };

    // Global ids are assigned in graph order, nodes in local order.
    let mut offsets = Vec::with_capacity(d.len());
    let mut total = 0usize;
    for g in d.graphs() {
        offsets.push(total);
        total += g.num_nodes();
    }

    let (p, mut f) = open("A")?;
    for (gi, g) in d.graphs().iter().enumerate() {
        for &(u, v) in g.edges() {
            let a = offsets[gi] + u + 1;
            let b = offsets[gi] + v + 1;
            writeln!(f, "{a}, {b}").map_err(|e| Error::io(&p, e))?;
            writeln!(f, "{b}, {a}").map_err(|e| Error::io(&p, e))?;
        }
    }

    let (p, mut f) = open("graph_indicator")?;
    for (gi, g) in d.graphs().iter().enumerate() {
        for _ in 0..g.num_nodes() {
            writeln!(f, "{}", gi + 1).map_err(|e| Error::io(&p, e))?;
        }
    }

    let (p, mut f) = open("graph_labels")?;
    for &label in d.graph_labels() {
        writeln!(f, "{label}").map_err(|e| Error::io(&p, e))?;
    }

    if !d.degree_proxy() {
        let (p, mut f) = open("node_labels")?;
        for g in d.graphs() {
            for v in 0..g.num_nodes() {
                writeln!(f, "{}", d.label_alphabet()[g.label(v)]).map_err(|e| Error::io(&p, e))?;
            }
        }
    }
    Ok(())
}

fn read_int_lines(path: &Path) -> Result<Vec<i64>> {
    let text = fs::read_to_string(path).map_err(|e| map_missing(path, e))?;
    let file = display_name(path);
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let value: i64 = line.parse().map_err(|_| {
            Error::format(&file, lineno + 1, format!("expected an integer, found '{line}'"))
        })?;
        out.push(value);
    }
    Ok(out)
}

fn display_name(path: &Path) -> String {
    path.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn map_missing(path: &Path, e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::NotFound {
        Error::MissingFile(path.to_path_buf())
    } else {
        Error::io(path, e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write(dir: &Path, name: &str, contents: &str) {
        fs::write(dir.join(name), contents).unwrap();
    }

    #[test]
    fn reciprocal_lines_collapse_to_one_edge() {
        let tmp = tempfile::tempdir().unwrap();
        write(tmp.path(), "t_A.txt", "1, 2\n2, 1\n");
        write(tmp.path(), "t_graph_indicator.txt", "1\n1\n");
        write(tmp.path(), "t_graph_labels.txt", "1\n");
        write(tmp.path(), "t_node_labels.txt", "0\n1\n");
        let d = load_dataset(tmp.path(), "t").unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.graph(0).num_edges(), 1);
        assert_eq!(d.load_notes.asymmetric_edges, 0);
        assert!(validate(&d).is_empty());
    }

    #[test]
    fn one_directional_line_is_symmetrized_with_warning() {
        let tmp = tempfile::tempdir().unwrap();
        write(tmp.path(), "t_A.txt", "1, 2\n");
        write(tmp.path(), "t_graph_indicator.txt", "1\n1\n");
        write(tmp.path(), "t_graph_labels.txt", "1\n");
        write(tmp.path(), "t_node_labels.txt", "0\n1\n");
        let d = load_dataset(tmp.path(), "t").unwrap();
        assert_eq!(d.graph(0).num_edges(), 1);
        assert_eq!(d.load_notes.asymmetric_edges, 1);
        assert!(validate(&d).iter().any(|w| w.contains("symmetrized")));
    }

    #[test]
    fn out_of_range_node_id_is_a_format_error() {
        let tmp = tempfile::tempdir().unwrap();
        write(tmp.path(), "t_A.txt", "1, 11\n");
        write(tmp.path(), "t_graph_indicator.txt", &"1\n".repeat(10));
        write(tmp.path(), "t_graph_labels.txt", "1\n");
        write(tmp.path(), "t_node_labels.txt", &"0\n".repeat(10));
        match load_dataset(tmp.path(), "t") {
            Err(Error::Format { message, .. }) => assert!(message.contains("out of range")),
            other => panic!("expected a format error, got {other:?}"),
        }
    }

    #[test]
    fn edge_crossing_two_graphs_is_a_format_error() {
        let tmp = tempfile::tempdir().unwrap();
        write(tmp.path(), "t_A.txt", "1, 3\n");
        write(tmp.path(), "t_graph_indicator.txt", "1\n1\n2\n2\n");
        write(tmp.path(), "t_graph_labels.txt", "1\n2\n");
        write(tmp.path(), "t_node_labels.txt", "0\n0\n0\n0\n");
        match load_dataset(tmp.path(), "t") {
            Err(Error::Format { message, .. }) => assert!(message.contains("crosses")),
            other => panic!("expected a format error, got {other:?}"),
        }
    }

    #[test]
    fn missing_file_is_reported_as_such() {
        let tmp = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_dataset(tmp.path(), "absent"),
            Err(Error::MissingFile(_))
        ));
    }

    #[test]
    fn self_loops_are_dropped_with_a_warning() {
        let tmp = tempfile::tempdir().unwrap();
        write(tmp.path(), "t_A.txt", "1, 2\n2, 1\n3, 3\n");
        write(tmp.path(), "t_graph_indicator.txt", "1\n1\n1\n");
        write(tmp.path(), "t_graph_labels.txt", "1\n");
        write(tmp.path(), "t_node_labels.txt", "0\n0\n0\n");
        let d = load_dataset(tmp.path(), "t").unwrap();
        assert_eq!(d.graph(0).num_edges(), 1);
        assert_eq!(d.load_notes.self_loops_dropped, 1);
        let warnings = validate(&d);
        assert!(warnings.iter().any(|w| w.contains("self-loop")));
        assert!(warnings.iter().any(|w| w.contains("isolated")));
    }

    #[test]
    fn crlf_and_spacing_are_tolerated() {
        let tmp = tempfile::tempdir().unwrap();
        write(tmp.path(), "t_A.txt", "1 , 2\r\n2,1\r\n\r\n");
        write(tmp.path(), "t_graph_indicator.txt", "1\r\n1\r\n");
        write(tmp.path(), "t_graph_labels.txt", "5\r\n");
        write(tmp.path(), "t_node_labels.txt", "7\r\n9\r\n");
        let d = load_dataset(tmp.path(), "t").unwrap();
        assert_eq!(d.graph(0).num_edges(), 1);
        assert_eq!(d.label_alphabet(), &[7, 9]);
        assert_eq!(d.graph_label(0), 0);
    }

    #[test]
    fn degree_proxy_applies_without_node_labels() {
        let tmp = tempfile::tempdir().unwrap();
        // Star with center degree 3, leaves degree 1.
        write(tmp.path(), "t_A.txt", "1, 2\n2, 1\n1, 3\n3, 1\n1, 4\n4, 1\n");
        write(tmp.path(), "t_graph_indicator.txt", "1\n1\n1\n1\n");
        write(tmp.path(), "t_graph_labels.txt", "1\n");
        let d = load_dataset(tmp.path(), "t").unwrap();
        assert!(d.degree_proxy());
        assert_eq!(d.label_alphabet(), &[1, 3]);
        assert_eq!(d.graph(0).label(0), 1); // degree 3 -> index 1
        assert_eq!(d.graph(0).label(1), 0); // degree 1 -> index 0
    }

    #[test]
    fn round_trip_preserves_structure_and_stats() {
        let d = crate::fixtures::multiset_dataset(12, 9);
        let tmp = tempfile::tempdir().unwrap();
        write_fixture(&d, tmp.path()).unwrap();
        let back = load_dataset(tmp.path(), d.name()).unwrap();
        assert_eq!(back.len(), d.len());
        assert_eq!(back.graph_labels(), d.graph_labels());
        assert_eq!(back.label_alphabet(), d.label_alphabet());
        for (a, b) in d.graphs().iter().zip(back.graphs()) {
            assert_eq!(a, b);
        }
        let s1 = crate::graph::dataset_stats(&d).unwrap();
        let s2 = crate::graph::dataset_stats(&back).unwrap();
        assert_eq!(s1, s2);
    }

    #[test]
    fn write_to_unwritable_directory_fails() {
        let d = crate::fixtures::multiset_dataset(3, 1);
        let err = write_fixture(&d, "/proc/not-writable/x");
        assert!(err.is_err());
    }
}
