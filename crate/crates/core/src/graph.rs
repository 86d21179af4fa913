//! Scientist–paper bipartite network and its weighted projection onto
//! scientists (the total collaboration network).

use std::collections::{HashMap, VecDeque};
use std::io::{Read, Write};

use thiserror::Error;

use crate::dedup::PaperCluster;
use crate::ingest::{Gender, MajorField, ScientistRecord};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("cluster {cluster} references unknown scientist `{scientist}`")]
    UnknownScientist { cluster: usize, scientist: String },
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("duplicate node id `{0}`")]
    DuplicateNode(String),
    #[error("edge ({0}, {1}) is a self-loop or has zero weight")]
    BadEdge(String, String),
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
}

/// Attributes carried by a scientist node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScientistNode {
    pub id: String,
    pub gender: Gender,
    pub field: Option<MajorField>,
    /// Number of distinct paper clusters the scientist is attached to.
    pub papers: usize,
}

impl ScientistNode {
    pub fn from_record(r: &ScientistRecord) -> Self {
        ScientistNode {
            id: r.scientist_id.clone(),
            gender: r.gender,
            field: r.primary_field(),
            papers: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BipartiteNetwork {
    pub scientists: Vec<ScientistNode>,
    /// Sorted cluster indices per scientist.
    pub scientist_papers: Vec<Vec<usize>>,
    /// Sorted scientist indices per cluster.
    pub paper_members: Vec<Vec<usize>>,
}

impl BipartiteNetwork {
    pub fn edge_count(&self) -> usize {
        self.scientist_papers.iter().map(Vec::len).sum()
    }
}

/// Links each scientist to every cluster holding one of their publications.
pub fn build_bipartite(
    records: &[ScientistRecord],
    clusters: &[PaperCluster],
) -> Result<BipartiteNetwork, GraphError> {
    let index: HashMap<&str, usize> = records
        .iter()
        .enumerate()
        .map(|(i, r)| (r.scientist_id.as_str(), i))
        .collect();
    let mut scientist_papers = vec![Vec::new(); records.len()];
    let mut paper_members = Vec::with_capacity(clusters.len());
    for (c, cluster) in clusters.iter().enumerate() {
        let mut members = Vec::with_capacity(cluster.members.len());
        for m in &cluster.members {
            let &i = index.get(m.scientist_id.as_str()).ok_or_else(|| GraphError::UnknownScientist {
                cluster: cluster.cluster_id,
                scientist: m.scientist_id.clone(),
            })?;
            members.push(i);
        }
        members.sort_unstable();
        members.dedup();
        for &i in &members {
            scientist_papers[i].push(c);
        }
        paper_members.push(members);
    }
    let scientists = records
        .iter()
        .zip(&scientist_papers)
        .map(|(r, papers)| ScientistNode {
            papers: papers.len(),
            ..ScientistNode::from_record(r)
        })
        .collect();
    Ok(BipartiteNetwork {
        scientists,
        scientist_papers,
        paper_members,
    })
}

/// Undirected weighted network over scientists. Neighbor lists are sorted
/// by node index; weights are positive.
#[derive(Debug, Clone)]
pub struct CollaborationNetwork {
    nodes: Vec<ScientistNode>,
    adjacency: Vec<Vec<(usize, u64)>>,
    index: HashMap<String, usize>,
}

impl CollaborationNetwork {
    /// Builds a network from nodes and an undirected edge list. Repeated
    /// pairs have their weights summed.
    pub fn from_edges(
        nodes: Vec<ScientistNode>,
        edges: impl IntoIterator<Item = (usize, usize, u64)>,
    ) -> Result<Self, GraphError> {
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if index.insert(n.id.clone(), i).is_some() {
                return Err(GraphError::DuplicateNode(n.id.clone()));
            }
        }
        let mut adjacency: Vec<Vec<(usize, u64)>> = vec![Vec::new(); nodes.len()];
        for (i, j, w) in edges {
            if i >= nodes.len() || j >= nodes.len() {
                return Err(GraphError::UnknownNode(format!("#{}", i.max(j))));
            }
            if i == j || w == 0 {
                return Err(GraphError::BadEdge(nodes[i].id.clone(), nodes[j].id.clone()));
            }
            adjacency[i].push((j, w));
            adjacency[j].push((i, w));
        }
        for list in &mut adjacency {
            list.sort_unstable();
            let mut merged: Vec<(usize, u64)> = Vec::with_capacity(list.len());
            for &(j, w) in list.iter() {
                match merged.last_mut() {
                    Some(last) if last.0 == j => last.1 += w,
                    _ => merged.push((j, w)),
                }
            }
            *list = merged;
        }
        Ok(CollaborationNetwork {
            nodes,
            adjacency,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[ScientistNode] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &ScientistNode {
        &self.nodes[i]
    }

    pub fn index_of(&self, id: &str) -> Result<usize, GraphError> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| GraphError::UnknownNode(id.to_string()))
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, u64)] {
        &self.adjacency[i]
    }

    pub fn degree_of(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn strength_of(&self, i: usize) -> u64 {
        self.adjacency[i].iter().map(|&(_, w)| w).sum()
    }

    pub fn degree(&self, id: &str) -> Result<usize, GraphError> {
        Ok(self.degree_of(self.index_of(id)?))
    }

    pub fn strength(&self, id: &str) -> Result<u64, GraphError> {
        Ok(self.strength_of(self.index_of(id)?))
    }

    /// Each undirected edge once, as `(i, j, w)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(i, list)| {
            list.iter()
                .filter(move |&&(j, _)| j > i)
                .map(move |&(j, w)| (i, j, w))
        })
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn total_weight(&self) -> u64 {
        self.edges().map(|(_, _, w)| w).sum()
    }

    /// Edge list `id_i,id_j,weight` with `id_i < id_j`, rows sorted.
    pub fn write_edge_list<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut rows: Vec<(&str, &str, u64)> = self
            .edges()
            .map(|(i, j, w)| {
                let (a, b) = (self.nodes[i].id.as_str(), self.nodes[j].id.as_str());
                if a < b {
                    (a, b, w)
                } else {
                    (b, a, w)
                }
            })
            .collect();
        rows.sort_unstable();
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["id_i", "id_j", "weight"])?;
        for (a, b, w) in rows {
            wtr.write_record([a, b, w.to_string().as_str()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn parse_error(row: &csv::StringRecord, message: impl Into<String>) -> GraphError {
    GraphError::Parse {
        line: row.position().map_or(0, |p| p.line()),
        message: message.into(),
    }
}

fn csv_error(e: csv::Error) -> GraphError {
    GraphError::Parse {
        line: e.position().map_or(0, |p| p.line()),
        message: e.to_string(),
    }
}

impl CollaborationNetwork {
    /// Node table `id,gender,field,papers`; `field` is empty when unknown.
    pub fn write_node_list<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["id", "gender", "field", "papers"])?;
        for n in &self.nodes {
            wtr.write_record([
                n.id.as_str(),
                n.gender.code(),
                n.field.map_or("", MajorField::code),
                n.papers.to_string().as_str(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Reads back a node table and an edge list written by this type.
    pub fn read<N: Read, E: Read>(nodes: N, edges: E) -> Result<Self, GraphError> {
        let mut list = Vec::new();
        for row in csv::Reader::from_reader(nodes).records() {
            let row = row.map_err(csv_error)?;
            if row.len() != 4 {
                return Err(parse_error(&row, "expected columns id,gender,field,papers"));
            }
            let gender = match &row[1] {
                "F" => Gender::Female,
                "M" => Gender::Male,
                "U" => Gender::Unknown,
                other => return Err(parse_error(&row, format!("bad gender `{other}`"))),
            };
            let field = match &row[2] {
                "" => None,
                code => Some(code.parse().map_err(|_| parse_error(&row, format!("bad field `{code}`")))?),
            };
            let papers = row[3].parse().map_err(|_| parse_error(&row, "bad paper count"))?;
            list.push(ScientistNode {
                id: row[0].to_string(),
                gender,
                field,
                papers,
            });
        }
        let index: HashMap<String, usize> = list.iter().enumerate().map(|(i, n)| (n.id.clone(), i)).collect();
        let mut triples = Vec::new();
        for row in csv::Reader::from_reader(edges).records() {
            let row = row.map_err(csv_error)?;
            if row.len() != 3 {
                return Err(parse_error(&row, "expected columns id_i,id_j,weight"));
            }
            let lookup = |id: &str| index.get(id).copied().ok_or_else(|| GraphError::UnknownNode(id.to_string()));
            let w = row[2].parse().map_err(|_| parse_error(&row, "bad weight"))?;
            triples.push((lookup(&row[0])?, lookup(&row[1])?, w));
        }
        CollaborationNetwork::from_edges(list, triples)
    }
}

/// Projects the bipartite network onto scientists: the weight of `(i, j)` is
/// the number of clusters both are attached to.
pub fn project_tcn(bn: &BipartiteNetwork) -> CollaborationNetwork {
    let n = bn.scientists.len();
    let mut counts = vec![0u64; n];
    let mut touched = Vec::new();
    let mut edges = Vec::new();
    for i in 0..n {
        for &c in &bn.scientist_papers[i] {
            for &j in &bn.paper_members[c] {
                if j > i {
                    if counts[j] == 0 {
                        touched.push(j);
                    }
                    counts[j] += 1;
                }
            }
        }
        for &j in &touched {
            edges.push((i, j, counts[j]));
            counts[j] = 0;
        }
        touched.clear();
    }
    CollaborationNetwork::from_edges(bn.scientists.clone(), edges)
        .expect("projection yields valid edges")
}

#[derive(Debug, Clone, PartialEq)]
pub struct GiantComponent {
    /// Sorted node indices.
    pub nodes: Vec<usize>,
    /// Component size over all nodes, isolated ones included.
    pub fraction: f64,
}

/// Largest connected component; ties go to the component holding the
/// lexicographically smallest scientist id. An empty network gives an empty
/// component with fraction 0.
pub fn giant_component(tcn: &CollaborationNetwork) -> GiantComponent {
    let n = tcn.len();
    let mut seen = vec![false; n];
    let mut best: Option<(Vec<usize>, &str)> = None;
    let mut queue = VecDeque::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut comp = Vec::new();
        while let Some(u) = queue.pop_front() {
            comp.push(u);
            for &(v, _) in tcn.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        let min_id = comp.iter().map(|&u| tcn.node(u).id.as_str()).min().unwrap();
        let better = match &best {
            None => true,
            Some((b, b_id)) => comp.len() > b.len() || (comp.len() == b.len() && min_id < *b_id),
        };
        if better {
            best = Some((comp, min_id));
        }
    }
    match best {
        None => GiantComponent {
            nodes: Vec::new(),
            fraction: 0.0,
        },
        Some((mut nodes, _)) => {
            nodes.sort_unstable();
            let fraction = nodes.len() as f64 / n as f64;
            GiantComponent { nodes, fraction }
        }
    }
}
