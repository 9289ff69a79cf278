//! Long odd cycles in hardware connectivity graphs.
//!
//! A ring with one qubit per spin embeds exactly when the graph contains a
//! cycle of that length, so the search looks for long odd cycles: random
//! paths grown with rotation–extension moves, closed whenever an endpoint
//! sees an earlier path vertex at odd distance, then lengthened by inserting
//! vertex pairs into cycle edges.

use std::collections::{BTreeSet, VecDeque};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Undirected simple graph on vertices `0..V`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HardwareGraph {
    name: String,
    adjacency: Vec<Vec<usize>>,
    edges: usize,
}

impl HardwareGraph {
    pub fn from_edges(name: impl Into<String>, vertices: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); vertices];
        let mut seen = BTreeSet::new();
        for &(u, v) in edges {
            if u == v {
                return Err(Error::InvalidParameter(format!("self-loop on vertex {u}")));
            }
            if u >= vertices || v >= vertices {
                return Err(Error::InvalidParameter(format!("edge {u}-{v} outside {vertices} vertices")));
            }
            if seen.insert((u.min(v), u.max(v))) {
                adjacency[u].push(v);
                adjacency[v].push(u);
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(HardwareGraph {
            name: name.into(),
            adjacency,
            edges: seen.len(),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.adjacency.len() && self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Two-colouring, or an odd cycle witnessing that none exists.
    pub fn two_coloring(&self) -> std::result::Result<Vec<bool>, Vec<usize>> {
        let n = self.vertex_count();
        let mut color: Vec<Option<bool>> = vec![None; n];
        let mut parent = vec![usize::MAX; n];
        let mut depth = vec![0usize; n];
        for root in 0..n {
            if color[root].is_some() {
                continue;
            }
            color[root] = Some(false);
            let mut queue = VecDeque::from([root]);
            while let Some(u) = queue.pop_front() {
                let cu = color[u].unwrap();
                for &v in &self.adjacency[u] {
                    match color[v] {
                        None => {
                            color[v] = Some(!cu);
                            parent[v] = u;
                            depth[v] = depth[u] + 1;
                            queue.push_back(v);
                        }
                        Some(cv) if cv == cu => {
                            return Err(tree_cycle(u, v, &parent, &depth));
                        }
                        Some(_) => {}
                    }
                }
            }
        }
        Ok(color.into_iter().map(|c| c.unwrap_or(false)).collect())
    }

    pub fn is_bipartite(&self) -> bool {
        self.two_coloring().is_ok()
    }
}

/// Closes the BFS-tree paths from `u` and `v` to their common ancestor.
fn tree_cycle(u: usize, v: usize, parent: &[usize], depth: &[usize]) -> Vec<usize> {
    let (mut a, mut b) = (u, v);
    let mut left = vec![a];
    let mut right = vec![b];
    while depth[a] > depth[b] {
        a = parent[a];
        left.push(a);
    }
    while depth[b] > depth[a] {
        b = parent[b];
        right.push(b);
    }
    while a != b {
        a = parent[a];
        b = parent[b];
        left.push(a);
        right.push(b);
    }
    right.pop();
    right.reverse();
    left.extend(right);
    left
}

/// A loaded graph plus any non-fatal remarks about the input.
#[derive(Debug, Clone)]
pub struct GraphLoad {
    pub graph: HardwareGraph,
    pub warnings: Vec<String>,
}

/// Parses an edge list of `u v` lines; `#` starts a comment. Duplicate
/// edges are dropped with a warning.
pub fn load_graph(source: &str, name: &str) -> Result<GraphLoad> {
    let mut edges = Vec::new();
    let mut seen = BTreeSet::new();
    let mut warnings = Vec::new();
    let mut vertices = 0usize;
    for (k, raw) in source.lines().enumerate() {
        let line_no = k + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::GraphLine {
                line: line_no,
                msg: format!("expected `u v`, found `{line}`"),
            });
        }
        let parse = |f: &str| {
            f.parse::<usize>().map_err(|_| Error::GraphLine {
                line: line_no,
                msg: format!("malformed vertex `{f}`"),
            })
        };
        let (u, v) = (parse(fields[0])?, parse(fields[1])?);
        if u == v {
            return Err(Error::GraphLine {
                line: line_no,
                msg: format!("self-loop on vertex {u}"),
            });
        }
        if !seen.insert((u.min(v), u.max(v))) {
            warnings.push(format!("line {line_no}: duplicate edge {u}-{v} ignored"));
            continue;
        }
        vertices = vertices.max(u + 1).max(v + 1);
        edges.push((u, v));
    }
    Ok(GraphLoad {
        graph: HardwareGraph::from_edges(name, vertices, &edges)?,
        warnings,
    })
}

/// An odd cycle, listed in traversal order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CycleEmbedding {
    pub cycle: Vec<usize>,
    pub length: usize,
}

impl CycleEmbedding {
    /// Rotated to start at its smallest vertex, then oriented so the second
    /// vertex is smaller than the last.
    pub fn canonical(cycle: Vec<usize>) -> Self {
        let mut c = cycle;
        if let Some(pos) = c.iter().enumerate().min_by_key(|(_, &v)| v).map(|(i, _)| i) {
            c.rotate_left(pos);
        }
        if c.len() > 2 && c[1] > c[c.len() - 1] {
            c[1..].reverse();
        }
        CycleEmbedding { length: c.len(), cycle: c }
    }

    /// JSON object with the vertices, length and coverage of `graph`.
    pub fn to_json(&self, graph: &HardwareGraph) -> Result<String> {
        #[derive(Serialize)]
        struct Out<'a> {
            graph: &'a str,
            vertices: usize,
            length: usize,
            coverage: f64,
            cycle: &'a [usize],
        }
        let v = graph.vertex_count();
        Ok(serde_json::to_string_pretty(&Out {
            graph: graph.name(),
            vertices: v,
            length: self.length,
            coverage: if v == 0 { 0.0 } else { self.length as f64 / v as f64 },
            cycle: &self.cycle,
        })? + "\n")
    }
}

/// Checks that `cycle` is a simple odd cycle of `graph` with at least 3 vertices.
pub fn validate_embedding(graph: &HardwareGraph, cycle: &[usize]) -> std::result::Result<(), String> {
    if cycle.len() < 3 {
        return Err(format!("too short: {} vertices", cycle.len()));
    }
    if let Some(&v) = cycle.iter().find(|&&v| v >= graph.vertex_count()) {
        return Err(format!("vertex {v} not in graph"));
    }
    let distinct: BTreeSet<usize> = cycle.iter().copied().collect();
    if distinct.len() != cycle.len() {
        return Err("not simple: repeated vertex".into());
    }
    if cycle.len().is_multiple_of(2) {
        return Err(format!("even length {}", cycle.len()));
    }
    for i in 0..cycle.len() {
        let (u, v) = (cycle[i], cycle[(i + 1) % cycle.len()]);
        if !graph.has_edge(u, v) {
            return Err(format!("missing edge {u}-{v}"));
        }
    }
    Ok(())
}

/// Work limit of [`find_odd_cycle`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchBudget {
    /// Path moves; deterministic for a given seed.
    Iterations(u64),
    /// Wall clock; results depend on machine speed.
    Millis(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchOptions {
    pub min_length: usize,
    pub budget: SearchBudget,
    pub seed: u64,
    /// Independent searches with derived seeds; the budget applies to each.
    pub workers: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            min_length: 3,
            budget: SearchBudget::Iterations(200_000),
            seed: 0,
            workers: 1,
        }
    }
}

/// Longest odd cycle found within the budget, or `None` when the graph is
/// bipartite or nothing reaches `min_length`.
pub fn find_odd_cycle(graph: &HardwareGraph, options: &SearchOptions) -> Option<CycleEmbedding> {
    let witness = graph.two_coloring().err()?;
    let workers = options.workers.max(1);
    let results: Vec<Vec<usize>> = if workers == 1 {
        vec![search(graph, options, options.seed, witness)]
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let witness = witness.clone();
                    let seed = crate::harness::point_seed(options.seed, w);
                    scope.spawn(move || search(graph, options, seed, witness))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("search thread")).collect()
        })
    };
    results
        .into_iter()
        .map(CycleEmbedding::canonical)
        .max_by(|a, b| a.length.cmp(&b.length).then_with(|| b.cycle.cmp(&a.cycle)))
        .filter(|c| c.length >= options.min_length.max(3))
}

struct Clock {
    budget: SearchBudget,
    start: Instant,
    used: u64,
}

impl Clock {
    fn tick(&mut self) -> bool {
        self.used += 1;
        match self.budget {
            SearchBudget::Iterations(max) => self.used <= max,
            SearchBudget::Millis(ms) => {
                !self.used.is_multiple_of(256) || self.start.elapsed() < Duration::from_millis(ms)
            }
        }
    }
}

fn search(graph: &HardwareGraph, options: &SearchOptions, seed: u64, witness: Vec<usize>) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut clock = Clock {
        budget: options.budget,
        start: Instant::now(),
        used: 0,
    };
    let n = graph.vertex_count();
    let mut best = improve(graph, witness);
    let starts: Vec<usize> = (0..n).filter(|&v| graph.neighbors(v).len() >= 2).collect();
    let mut pos = vec![usize::MAX; n];
    let longest_possible = n - (1 - n % 2);
    'restarts: while best.len() < longest_possible {
        let Some(&start) = starts.choose(&mut rng) else {
            break;
        };
        let mut path = vec![start];
        pos[start] = 0;
        let mut found: Vec<usize> = Vec::new();
        let mut stall = 0usize;
        let stall_limit = 50 + 2 * (best.len().max(path.len()));
        let mut reversed = false;
        loop {
            if !clock.tick() {
                keep_longer(&mut best, improve(graph, found), graph);
                for &v in &path {
                    pos[v] = usize::MAX;
                }
                break 'restarts;
            }
            let end = *path.last().unwrap();
            let fresh: Vec<usize> = graph.neighbors(end).iter().copied().filter(|&v| pos[v] == usize::MAX).collect();
            if !fresh.is_empty() {
                // fewest onward options first, ties at random
                let score = |v: usize| graph.neighbors(v).iter().filter(|&&w| pos[w] == usize::MAX).count();
                let least = fresh.iter().map(|&v| score(v)).min().unwrap();
                let ties: Vec<usize> = fresh.into_iter().filter(|&v| score(v) == least).collect();
                let next = *ties.choose(&mut rng).unwrap();
                pos[next] = path.len();
                path.push(next);
                stall = 0;
            } else {
                let last = path.len() - 1;
                let pivots: Vec<usize> = graph
                    .neighbors(end)
                    .iter()
                    .map(|&v| pos[v])
                    .filter(|&i| i + 1 < last)
                    .collect();
                stall += 1;
                if pivots.is_empty() || stall > stall_limit {
                    if reversed || pivots.is_empty() && path.len() < 3 {
                        break;
                    }
                    path.reverse();
                    reindex(&path, &mut pos);
                    reversed = true;
                    stall = 0;
                    continue;
                }
                // rotation: end joins pivot i, path[i+1] becomes the new end
                let i = pivots[rng.gen_range(0..pivots.len())];
                path[i + 1..].reverse();
                for (k, &v) in path.iter().enumerate().skip(i + 1) {
                    pos[v] = k;
                }
            }
            record_cycle(graph, &path, &pos, &mut found);
        }
        for &v in &path {
            pos[v] = usize::MAX;
        }
        keep_longer(&mut best, improve(graph, found), graph);
    }
    best
}

fn reindex(path: &[usize], pos: &mut [usize]) {
    for (k, &v) in path.iter().enumerate() {
        pos[v] = k;
    }
}

/// Longest odd cycle closing at the current endpoint.
fn record_cycle(graph: &HardwareGraph, path: &[usize], pos: &[usize], found: &mut Vec<usize>) {
    let last = path.len() - 1;
    let end = path[last];
    let earliest = graph
        .neighbors(end)
        .iter()
        .map(|&v| pos[v])
        .filter(|&i| i != usize::MAX && i + 2 <= last && (last - i + 1) % 2 == 1)
        .min();
    if let Some(i) = earliest {
        if last - i + 1 > found.len() {
            found.clear();
            found.extend_from_slice(&path[i..]);
        }
    }
}

fn keep_longer(best: &mut Vec<usize>, candidate: Vec<usize>, graph: &HardwareGraph) {
    if candidate.len() > best.len() {
        debug_assert!(validate_embedding(graph, &candidate).is_ok());
        *best = candidate;
    }
}

/// Repeatedly replaces a cycle edge `a–b` by a detour `a–x–y–b` through two
/// unused vertices, which keeps the length odd.
fn improve(graph: &HardwareGraph, cycle: Vec<usize>) -> Vec<usize> {
    if cycle.len() < 3 {
        return cycle;
    }
    let mut used = vec![false; graph.vertex_count()];
    for &v in &cycle {
        used[v] = true;
    }
    let mut cycle = cycle;
    let mut changed = true;
    while changed {
        changed = false;
        let mut i = 0;
        while i < cycle.len() {
            let a = cycle[i];
            let b = cycle[(i + 1) % cycle.len()];
            let detour = graph.neighbors(a).iter().filter(|&&x| !used[x]).find_map(|&x| {
                graph
                    .neighbors(x)
                    .iter()
                    .find(|&&y| !used[y] && graph.has_edge(y, b))
                    .map(|&y| (x, y))
            });
            if let Some((x, y)) = detour {
                used[x] = true;
                used[y] = true;
                cycle.splice(i + 1..i + 1, [x, y]);
                changed = true;
            }
            i += 1;
        }
    }
    cycle
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring(n: usize) -> HardwareGraph {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        HardwareGraph::from_edges("ring", n, &edges).unwrap()
    }

    fn grid(w: usize, h: usize) -> HardwareGraph {
        let mut edges = Vec::new();
        for r in 0..h {
            for c in 0..w {
                let v = r * w + c;
                if c + 1 < w {
                    edges.push((v, v + 1));
                }
                if r + 1 < h {
                    edges.push((v, v + w));
                }
            }
        }
        HardwareGraph::from_edges("grid", w * h, &edges).unwrap()
    }

    #[test]
    fn load_examples() {
        let text: String = (0..9).map(|i| format!("{} {}\n", i, (i + 1) % 9)).collect();
        let g = load_graph(&format!("# ring\n{text}"), "c9").unwrap().graph;
        assert_eq!((g.vertex_count(), g.edge_count()), (9, 9));
        assert!(matches!(load_graph("3 3\n", "x"), Err(Error::GraphLine { line: 1, .. })));
        assert!(matches!(load_graph("1 2\n1\n", "x"), Err(Error::GraphLine { line: 2, .. })));
        let empty = load_graph("", "e").unwrap().graph;
        assert_eq!(empty.vertex_count(), 0);
        assert!(find_odd_cycle(&empty, &SearchOptions::default()).is_none());
        let dup = load_graph("0 1\n1 0\n1 2\n2 0\n", "d").unwrap();
        assert_eq!(dup.graph.edge_count(), 3);
        assert_eq!(dup.warnings.len(), 1);
    }

    #[test]
    fn ring_is_found_whole() {
        let g = ring(9);
        let c = find_odd_cycle(&g, &SearchOptions::default()).unwrap();
        assert_eq!(c.cycle, vec![0, 1, 2, 3, 4, 5, 6, 7, 8]);
        assert!(validate_embedding(&g, &c.cycle).is_ok());
    }

    #[test]
    fn bipartite_has_none() {
        let g = grid(4, 4);
        assert!(g.is_bipartite());
        assert!(find_odd_cycle(&g, &SearchOptions::default()).is_none());
    }

    #[test]
    fn validation_reasons() {
        let g = ring(9);
        assert!(validate_embedding(&g, &[0, 1, 2, 3, 4, 5, 6, 7, 8]).is_ok());
        assert!(validate_embedding(&g, &[0, 1, 2, 1, 0]).unwrap_err().contains("not simple"));
        let sq = grid(2, 2);
        assert!(validate_embedding(&sq, &[0, 1, 3, 2]).unwrap_err().contains("even length"));
        assert!(validate_embedding(&g, &[0, 1, 3]).unwrap_err().contains("missing edge"));
    }

    #[test]
    fn witness_is_an_odd_cycle() {
        let mut edges: Vec<_> = (0..20).map(|i| (i, (i + 1) % 21)).collect();
        edges.push((20, 0));
        edges.push((3, 10));
        let g = HardwareGraph::from_edges("t", 21, &edges).unwrap();
        let w = g.two_coloring().unwrap_err();
        assert!(validate_embedding(&g, &w).is_ok(), "{w:?}");
    }

    #[test]
    fn iteration_budget_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut edges = Vec::new();
        for u in 0..80 {
            for _ in 0..3 {
                let v = rng.gen_range(0..80);
                if v != u {
                    edges.push((u, v));
                }
            }
        }
        let g = HardwareGraph::from_edges("r", 80, &edges).unwrap();
        let opts = SearchOptions {
            budget: SearchBudget::Iterations(5000),
            seed: 9,
            ..Default::default()
        };
        let a = find_odd_cycle(&g, &opts).unwrap();
        assert_eq!(Some(a.clone()), find_odd_cycle(&g, &opts));
        assert!(validate_embedding(&g, &a.cycle).is_ok());
        let par = SearchOptions { workers: 3, ..opts };
        let b = find_odd_cycle(&g, &par).unwrap();
        assert_eq!(Some(b.clone()), find_odd_cycle(&g, &par));
        assert!(b.length >= a.length);
    }
}
