//! Citation datasets, edge lists and synthetic graphs.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::linalg::{CsrMatrix, FeatureMatrix};

/// Which endpoint of a `cites` line becomes the edge source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CitationOrientation {
    /// `cited citing` becomes `citing → cited`.
    #[default]
    CitingToCited,
    /// `cited citing` becomes `cited → citing`.
    CitedToCiting,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadStats {
    pub dangling_edges: usize,
    pub duplicate_edges: usize,
    pub self_loops: usize,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    /// Raw graph, no self-loops.
    pub graph: DirectedGraph,
    pub features: FeatureMatrix,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
    /// Original id of each dense node index.
    pub node_names: Vec<String>,
    pub stats: LoadStats,
}

impl Dataset {
    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    pub fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    /// Same graph with one-hot node features.
    pub fn featureless(&self) -> Dataset {
        Dataset {
            features: FeatureMatrix::identity(self.node_count()),
            ..self.clone()
        }
    }
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

/// Splits the non-empty lines of `text`, returning 1-based line numbers.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
}

/// Reads a `.content` / `.cites` pair.
///
/// Content rows are `id<TAB>f1 … fk<TAB>label` with 0/1 features. Node ids
/// are assigned densely in file order. Edges naming unknown ids are dropped
/// and counted, as are duplicates and self-citations.
pub fn load_citation(
    content_path: &Path,
    cites_path: &Path,
    orientation: CitationOrientation,
) -> Result<Dataset> {
    let content = fs::read_to_string(content_path)?;
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut node_names = Vec::new();
    let mut class_ids: BTreeMap<String, usize> = BTreeMap::new();
    let mut raw_labels = Vec::new();
    let mut triplets = Vec::new();
    let mut width: Option<usize> = None;
    for (ln, line) in lines(&content) {
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if fields.len() < 2 {
            return Err(parse_err(content_path, ln, "expected id, features and label"));
        }
        let k = fields.len() - 2;
        match width {
            None => width = Some(k),
            Some(w) if w != k => {
                return Err(parse_err(content_path, ln, format!("{k} features, expected {w}")))
            }
            _ => {}
        }
        let id = fields[0].to_string();
        if ids.contains_key(&id) {
            return Err(parse_err(content_path, ln, format!("duplicate node id {id}")));
        }
        let row = node_names.len();
        for (c, f) in fields[1..=k].iter().enumerate() {
            let v: f64 = f
                .parse()
                .map_err(|_| parse_err(content_path, ln, format!("bad feature value {f:?}")))?;
            if v != 0.0 && v != 1.0 {
                return Err(parse_err(content_path, ln, format!("feature value {v} is not 0/1")));
            }
            if v != 0.0 {
                triplets.push((row, c, v));
            }
        }
        ids.insert(id.clone(), row);
        node_names.push(id);
        let label = fields[k + 1].to_string();
        let next = class_ids.len();
        class_ids.entry(label.clone()).or_insert(next);
        raw_labels.push(label);
    }
    let n = node_names.len();
    if n == 0 {
        return Err(Error::EmptyInput("content file"));
    }
    // Class ids follow sorted class names so they do not depend on row order.
    let class_names: Vec<String> = class_ids.keys().cloned().collect();
    let rank: HashMap<&str, usize> = class_names
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();
    let labels = raw_labels.iter().map(|l| rank[l.as_str()]).collect();
    let features = CsrMatrix::from_triplets(n, width.unwrap_or(0), triplets)?;

    let cites = fs::read_to_string(cites_path)?;
    let mut stats = LoadStats::default();
    let mut pairs = Vec::new();
    for (ln, line) in lines(&cites) {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(parse_err(cites_path, ln, "expected two ids"));
        }
        let (cited, citing) = (fields[0], fields[1]);
        let (Some(&a), Some(&b)) = (ids.get(cited), ids.get(citing)) else {
            stats.dangling_edges += 1;
            continue;
        };
        if a == b {
            stats.self_loops += 1;
            continue;
        }
        pairs.push(match orientation {
            CitationOrientation::CitingToCited => (b, a, 1.0),
            CitationOrientation::CitedToCiting => (a, b, 1.0),
        });
    }
    let (graph, dups) = DirectedGraph::new_counting_duplicates(n, pairs)?;
    stats.duplicate_edges = dups;
    if stats.dangling_edges > 0 {
        log::warn!(
            "{}: dropped {} edges with unknown endpoints",
            cites_path.display(),
            stats.dangling_edges
        );
    }
    if stats.self_loops > 0 {
        log::warn!("{}: dropped {} self-citations", cites_path.display(), stats.self_loops);
    }
    let name = content_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(Dataset {
        name,
        graph,
        features: FeatureMatrix::sparse(features),
        labels,
        class_names,
        node_names,
        stats,
    })
}

/// `<root>/<name>/<name>.content` and `.cites`.
pub fn citation_paths(root: &Path, name: &str) -> (PathBuf, PathBuf) {
    let dir = root.join(name);
    (
        dir.join(format!("{name}.content")),
        dir.join(format!("{name}.cites")),
    )
}

/// Whitespace-separated `source target` lines; `#` starts a comment.
///
/// Without `n_hint` the node count is one past the largest id.
pub fn load_edgelist(path: &Path, n_hint: Option<usize>) -> Result<Dataset> {
    let text = fs::read_to_string(path)?;
    let mut pairs = Vec::new();
    for (ln, line) in lines(&text) {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 2 {
            return Err(parse_err(path, ln, "expected two node ids"));
        }
        let parse = |s: &str| -> Result<usize> {
            s.parse::<usize>()
                .map_err(|_| parse_err(path, ln, format!("bad node id {s:?}")))
        };
        let (s, t) = (parse(fields[0])?, parse(fields[1])?);
        if let Some(n) = n_hint {
            if s >= n || t >= n {
                return Err(parse_err(path, ln, format!("node id out of range for {n} nodes")));
            }
        }
        pairs.push((s, t));
    }
    let n = n_hint.unwrap_or_else(|| pairs.iter().map(|&(s, t)| s.max(t) + 1).max().unwrap_or(0));
    let self_loops = pairs.iter().filter(|(s, t)| s == t).count();
    let (graph, dups) =
        DirectedGraph::new_counting_duplicates(n, pairs.into_iter().filter(|(s, t)| s != t).map(|(s, t)| (s, t, 1.0)))?;
    if self_loops > 0 {
        log::warn!("{}: dropped {self_loops} self-loops", path.display());
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(Dataset {
        name,
        graph,
        features: FeatureMatrix::identity(n),
        labels: vec![0; n],
        class_names: vec![String::new()],
        node_names: (0..n).map(|i| i.to_string()).collect(),
        stats: LoadStats {
            dangling_edges: 0,
            duplicate_edges: dups,
            self_loops,
        },
    })
}

pub fn write_edgelist(g: &DirectedGraph, mut w: impl Write) -> Result<()> {
    for (s, t) in g.edge_pairs() {
        writeln!(w, "{s} {t}")?;
    }
    Ok(())
}

/// Writes `ds` in the citation format that [`load_citation`] reads back.
pub fn write_citation(ds: &Dataset, content: impl Write, cites: impl Write, orientation: CitationOrientation) -> Result<()> {
    let mut content = std::io::BufWriter::new(content);
    let dense = ds.features.to_dense();
    for i in 0..ds.node_count() {
        write!(content, "{}", ds.node_names[i])?;
        for &v in dense.row(i) {
            write!(content, "\t{}", v as u8)?;
        }
        writeln!(content, "\t{}", ds.class_names[ds.labels[i]])?;
    }
    content.flush()?;
    let mut cites = std::io::BufWriter::new(cites);
    for (s, t) in ds.graph.edge_pairs() {
        let (cited, citing) = match orientation {
            CitationOrientation::CitingToCited => (t, s),
            CitationOrientation::CitedToCiting => (s, t),
        };
        writeln!(cites, "{}\t{}", ds.node_names[cited], ds.node_names[citing])?;
    }
    cites.flush()?;
    Ok(())
}

/// Erdős–Rényi digraph: each ordered pair `i ≠ j` kept with probability `p`.
pub fn random_digraph(n: usize, edge_prob: f64, seed: u64) -> Result<DirectedGraph> {
    if !(0.0..=1.0).contains(&edge_prob) {
        return Err(Error::InvalidConfig(format!("edge probability {edge_prob} outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.random_bool(edge_prob) {
                pairs.push((i, j));
            }
        }
    }
    DirectedGraph::from_pairs(n, pairs)
}

/// Parameters of [`synthetic_citation`].
#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub nodes: usize,
    pub classes: usize,
    pub features: usize,
    /// Mean out-degree.
    pub mean_out_degree: f64,
    /// Probability that a citation stays within the citing node's class.
    pub homophily: f64,
    /// Active words per node.
    pub words_per_node: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            nodes: 600,
            classes: 5,
            features: 300,
            mean_out_degree: 3.0,
            homophily: 0.8,
            words_per_node: 12,
            seed: 0,
        }
    }
}

/// Citation-like graph: nodes arrive in order and cite earlier nodes,
/// preferring popular ones and their own topic. Each class splits into a
/// few topics, and each topic owns a slice of the vocabulary.
pub fn synthetic_citation(spec: &SyntheticSpec) -> Result<Dataset> {
    let SyntheticSpec {
        nodes: n,
        classes,
        features: k,
        mean_out_degree,
        homophily,
        words_per_node,
        seed,
    } = *spec;
    if n < 2 || classes == 0 || k < classes || !(0.0..=1.0).contains(&homophily) {
        return Err(Error::InvalidConfig(format!("bad synthetic spec {spec:?}")));
    }
    const TOPICS_PER_CLASS: usize = 4;
    let topics = classes * TOPICS_PER_CLASS;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let topic: Vec<usize> = (0..n).map(|_| rng.random_range(0..topics)).collect();
    let labels: Vec<usize> = topic.iter().map(|t| t / TOPICS_PER_CLASS).collect();
    let degree_law = Zipf::new(20.0, 1.5).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let zipf_mean = (1..=20).map(|x| x as f64 * (x as f64).powf(-1.5)).sum::<f64>()
        / (1..=20).map(|x| (x as f64).powf(-1.5)).sum::<f64>();

    let mut in_deg = vec![0usize; n];
    let mut max_in = 0usize;
    let mut by_topic: Vec<Vec<usize>> = vec![Vec::new(); topics];
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); classes];
    let mut pairs = Vec::new();
    for i in 0..n {
        let want = ((degree_law.sample(&mut rng) * mean_out_degree / zipf_mean).round() as usize).min(i);
        let mut cited = std::collections::HashSet::new();
        let mut attempts = 0;
        while cited.len() < want && attempts < 50 * want {
            attempts += 1;
            // Own topic, else own class, else anything earlier.
            let pool: &[usize] = if rng.random_bool(homophily) {
                if rng.random_bool(0.7) {
                    &by_topic[topic[i]]
                } else {
                    &by_class[labels[i]]
                }
            } else {
                &[]
            };
            // Preferential attachment by rejection on in-degree + 1.
            let cand = if pool.is_empty() {
                rng.random_range(0..i)
            } else {
                pool[rng.random_range(0..pool.len())]
            };
            if rng.random_range(0..=max_in) > in_deg[cand] || !cited.insert(cand) {
                continue;
            }
            pairs.push((i, cand));
            in_deg[cand] += 1;
            max_in = max_in.max(in_deg[cand]);
        }
        by_topic[topic[i]].push(i);
        by_class[labels[i]].push(i);
    }
    let graph = DirectedGraph::from_pairs(n, pairs)?;

    // Half the words come from the topic's slice of the vocabulary.
    let slice = (k / topics).max(1);
    let mut triplets = Vec::new();
    for (i, &t) in topic.iter().enumerate() {
        let mut words = std::collections::BTreeSet::new();
        while words.len() < words_per_node.min(k) {
            let w = if rng.random_bool(0.5) {
                (t * slice + rng.random_range(0..slice)).min(k - 1)
            } else {
                rng.random_range(0..k)
            };
            words.insert(w);
        }
        triplets.extend(words.into_iter().map(|w| (i, w, 1.0)));
    }
    Ok(Dataset {
        name: format!("synthetic-{n}"),
        graph,
        features: FeatureMatrix::sparse(CsrMatrix::from_triplets(n, k, triplets)?),
        labels,
        class_names: (0..classes).map(|c| format!("class{c}")).collect(),
        node_names: (0..n).map(|i| format!("n{i}")).collect(),
        stats: LoadStats::default(),
    })
}
