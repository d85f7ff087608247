//! Pattern-graph specifications: labelled directed multigraphs learned
//! from symbol sequences, conformance checking, and DOT/JSON export.
//!
//! Sequences are run-length encoded; a transition out of a run of length
//! one is an `F` (immediate succession) edge, out of a longer run a `T`
//! edge. First-run symbols are start nodes, last-run symbols end nodes.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PatternError {
    #[error("no training sequences given")]
    EmptyInput,
    #[error("sequence at line {0} is empty")]
    EmptySequence(usize),
    #[error("graph JSON is malformed: {0}")]
    BadJson(String),
}

/// Edge word: `F` after a single occurrence of the source symbol, `T`
/// after two or more.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Word {
    F,
    T,
}

impl std::fmt::Display for Word {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Word::F => write!(f, "F"),
            Word::T => write!(f, "T"),
        }
    }
}

/// Non-empty sequence of discrete descriptor values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolSequence {
    pub symbols: Vec<String>,
}

impl SymbolSequence {
    pub fn new<I, S>(symbols: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        SymbolSequence {
            symbols: symbols.into_iter().map(Into::into).collect(),
        }
    }

    /// (symbol, run length) pairs.
    fn runs(&self) -> Vec<(&str, usize)> {
        let mut runs: Vec<(&str, usize)> = Vec::new();
        for s in &self.symbols {
            match runs.last_mut() {
                Some((sym, len)) if *sym == s.as_str() => *len += 1,
                _ => runs.push((s.as_str(), 1)),
            }
        }
        runs
    }
}

/// Parses one whitespace-separated phrase per non-blank line.
pub fn parse_sequences(text: &str) -> Result<Vec<SymbolSequence>, PatternError> {
    let mut sequences = Vec::new();
    for line in text.lines() {
        let symbols: Vec<String> = line.split_whitespace().map(str::to_string).collect();
        if !symbols.is_empty() {
            sequences.push(SymbolSequence { symbols });
        }
    }
    Ok(sequences)
}

/// Chord-degree sequence of a note list relative to a root pitch:
/// `pitch - root` per note, in sort order.
pub fn chord_degree_sequence(
    notes: &crate::symbolic::NoteList,
    root: u8,
) -> Result<SymbolSequence, PatternError> {
    if notes.notes.is_empty() {
        return Err(PatternError::EmptyInput);
    }
    Ok(SymbolSequence::new(
        notes
            .notes
            .iter()
            .map(|n| (n.pitch as i32 - root as i32).to_string()),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct NodeFlags {
    pub start: bool,
    pub end: bool,
}

/// Labelled directed multigraph over descriptor values.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PatternGraph {
    /// Symbol -> start/end flags; ordered for deterministic output.
    pub nodes: BTreeMap<String, NodeFlags>,
    /// (src, dst, word) -> occurrence count (>= 1).
    pub edges: BTreeMap<(String, String, Word), u64>,
}

/// Outcome of checking one sequence against a graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "lowercase")]
pub enum ConformanceResult {
    Accepted,
    Rejected { run: usize, reason: RejectReason },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum RejectReason {
    /// First run's symbol is not a start node.
    NotStart,
    /// Last run's symbol is not an end node.
    NotEnd,
    /// No edge with the required word between two consecutive runs.
    MissingEdge(Word),
}

/// Learns a pattern graph from training sequences; counts accumulate
/// across sequences.
pub fn learn_pattern_graph(sequences: &[SymbolSequence]) -> Result<PatternGraph, PatternError> {
    if sequences.is_empty() {
        return Err(PatternError::EmptyInput);
    }
    let mut graph = PatternGraph::default();
    for (i, seq) in sequences.iter().enumerate() {
        let runs = seq.runs();
        if runs.is_empty() {
            return Err(PatternError::EmptySequence(i + 1));
        }
        for (sym, _) in &runs {
            graph.nodes.entry(sym.to_string()).or_default();
        }
        graph.nodes.get_mut(runs[0].0).expect("inserted").start = true;
        graph.nodes.get_mut(runs[runs.len() - 1].0).expect("inserted").end = true;
        for pair in runs.windows(2) {
            let (src, len) = pair[0];
            let (dst, _) = pair[1];
            let word = if len >= 2 { Word::T } else { Word::F };
            *graph
                .edges
                .entry((src.to_string(), dst.to_string(), word))
                .or_insert(0) += 1;
        }
    }
    Ok(graph)
}

/// Checks a sequence against a graph. Unknown symbols surface as
/// `NotStart` or `MissingEdge`, not as hard failures.
pub fn check_sequence(graph: &PatternGraph, seq: &SymbolSequence) -> ConformanceResult {
    let runs = seq.runs();
    if runs.is_empty() {
        return ConformanceResult::Rejected {
            run: 0,
            reason: RejectReason::NotStart,
        };
    }
    if !graph.nodes.get(runs[0].0).is_some_and(|f| f.start) {
        return ConformanceResult::Rejected {
            run: 0,
            reason: RejectReason::NotStart,
        };
    }
    for (i, pair) in runs.windows(2).enumerate() {
        let (src, len) = pair[0];
        let (dst, _) = pair[1];
        let word = if len >= 2 { Word::T } else { Word::F };
        let key = (src.to_string(), dst.to_string(), word);
        if !graph.edges.contains_key(&key) {
            return ConformanceResult::Rejected {
                run: i,
                reason: RejectReason::MissingEdge(word),
            };
        }
    }
    if !graph.nodes.get(runs[runs.len() - 1].0).is_some_and(|f| f.end) {
        return ConformanceResult::Rejected {
            run: runs.len() - 1,
            reason: RejectReason::NotEnd,
        };
    }
    ConformanceResult::Accepted
}

/// A bare DOT identifier needs no quoting: alphanumeric names or numerals.
fn dot_id(symbol: &str) -> String {
    let bare_word = symbol
        .chars()
        .enumerate()
        .all(|(i, c)| c == '_' || c.is_ascii_alphabetic() || (i > 0 && c.is_ascii_digit()))
        && !symbol.is_empty();
    let numeral = !symbol.is_empty()
        && symbol
            .trim_start_matches('-')
            .chars()
            .all(|c| c.is_ascii_digit() || c == '.')
        && symbol.trim_start_matches('-').chars().any(|c| c.is_ascii_digit());
    if bare_word || numeral {
        symbol.to_string()
    } else {
        format!("\"{}\"", symbol.replace('\\', "\\\\").replace('"', "\\\""))
    }
}

/// Renders the graph as DOT: start nodes get an unlabeled arrow from an
/// invisible source, end nodes a double circle, edges a `word, count`
/// label. Output is byte-deterministic.
pub fn export_dot(graph: &PatternGraph) -> String {
    let mut out = String::from("digraph pattern {\n  rankdir=LR;\n  node [shape=circle];\n");
    let mut start_index = 0usize;
    for (symbol, flags) in &graph.nodes {
        if flags.end {
            out.push_str(&format!("  {} [shape=doublecircle];\n", dot_id(symbol)));
        } else {
            out.push_str(&format!("  {};\n", dot_id(symbol)));
        }
        if flags.start {
            out.push_str(&format!(
                "  __start{start_index} [shape=none, label=\"\"];\n"
            ));
            out.push_str(&format!(
                "  __start{start_index} -> {};\n",
                dot_id(symbol)
            ));
            start_index += 1;
        }
    }
    for ((src, dst, word), count) in &graph.edges {
        out.push_str(&format!(
            "  {} -> {} [label=\"{}, {}\"];\n",
            dot_id(src),
            dot_id(dst),
            word,
            count
        ));
    }
    out.push_str("}\n");
    out
}

#[derive(Serialize, Deserialize)]
struct JsonNode {
    symbol: String,
    start: bool,
    end: bool,
}

#[derive(Serialize, Deserialize)]
struct JsonEdge {
    src: String,
    dst: String,
    word: Word,
    count: u64,
}

#[derive(Serialize, Deserialize)]
struct JsonGraph {
    nodes: Vec<JsonNode>,
    edges: Vec<JsonEdge>,
}

impl PatternGraph {
    /// `{nodes: [{symbol, start, end}], edges: [{src, dst, word, count}]}`,
    /// nodes and edges in sorted order.
    pub fn to_json(&self) -> String {
        let doc = JsonGraph {
            nodes: self
                .nodes
                .iter()
                .map(|(symbol, flags)| JsonNode {
                    symbol: symbol.clone(),
                    start: flags.start,
                    end: flags.end,
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|((src, dst, word), count)| JsonEdge {
                    src: src.clone(),
                    dst: dst.clone(),
                    word: *word,
                    count: *count,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("graph serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, PatternError> {
        let doc: JsonGraph =
            serde_json::from_str(text).map_err(|e| PatternError::BadJson(e.to_string()))?;
        let mut graph = PatternGraph::default();
        for n in doc.nodes {
            graph.nodes.insert(
                n.symbol,
                NodeFlags {
                    start: n.start,
                    end: n.end,
                },
            );
        }
        for e in doc.edges {
            if !graph.nodes.contains_key(&e.src) || !graph.nodes.contains_key(&e.dst) {
                return Err(PatternError::BadJson(format!(
                    "edge {} -> {} references a missing node",
                    e.src, e.dst
                )));
            }
            *graph.edges.entry((e.src, e.dst, e.word)).or_insert(0) += e.count;
        }
        Ok(graph)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(symbols: &[&str]) -> SymbolSequence {
        SymbolSequence::new(symbols.iter().copied())
    }

    #[test]
    fn repeated_source_learns_a_t_edge() {
        let graph = learn_pattern_graph(&[seq(&["10", "10", "7"])]).unwrap();
        assert_eq!(graph.nodes.len(), 2);
        assert!(graph.nodes["10"].start && !graph.nodes["10"].end);
        assert!(graph.nodes["7"].end && !graph.nodes["7"].start);
        assert_eq!(graph.edges.len(), 1);
        assert_eq!(
            graph.edges[&("10".to_string(), "7".to_string(), Word::T)],
            1
        );
    }

    #[test]
    fn single_symbol_sequence() {
        let graph = learn_pattern_graph(&[seq(&["a"])]).unwrap();
        assert_eq!(graph.nodes.len(), 1);
        assert!(graph.nodes["a"].start && graph.nodes["a"].end);
        assert!(graph.edges.is_empty());
    }

    #[test]
    fn alternation_learns_f_edges_with_counts() {
        // brute-force adjacent-run pair counting: runs are a,b,a,b ->
        // pairs (a,b) twice and (b,a) once, all after single runs
        let graph = learn_pattern_graph(&[seq(&["a", "b", "a", "b"])]).unwrap();
        assert_eq!(
            graph.edges[&("a".to_string(), "b".to_string(), Word::F)],
            2
        );
        assert_eq!(
            graph.edges[&("b".to_string(), "a".to_string(), Word::F)],
            1
        );
        assert!(graph.nodes["a"].start);
        assert!(graph.nodes["b"].end);
        assert_eq!(graph.edges.len(), 2);
    }

    #[test]
    fn empty_input_errors() {
        assert!(matches!(
            learn_pattern_graph(&[]),
            Err(PatternError::EmptyInput)
        ));
        assert!(matches!(
            learn_pattern_graph(&[SymbolSequence { symbols: vec![] }]),
            Err(PatternError::EmptySequence(1))
        ));
    }

    #[test]
    fn check_accepts_longer_repetition() {
        // "two or several occurrences": length >= 2 satisfies T
        let graph = learn_pattern_graph(&[seq(&["10", "10", "7"])]).unwrap();
        assert_eq!(
            check_sequence(&graph, &seq(&["10", "10", "10", "7"])),
            ConformanceResult::Accepted
        );
        assert_eq!(
            check_sequence(&graph, &seq(&["10", "10", "7"])),
            ConformanceResult::Accepted
        );
    }

    #[test]
    fn check_rejects_single_occurrence_when_only_t_exists() {
        let graph = learn_pattern_graph(&[seq(&["10", "10", "7"])]).unwrap();
        assert_eq!(
            check_sequence(&graph, &seq(&["10", "7"])),
            ConformanceResult::Rejected {
                run: 0,
                reason: RejectReason::MissingEdge(Word::F),
            }
        );
    }

    #[test]
    fn check_rejects_non_start() {
        let graph = learn_pattern_graph(&[seq(&["10", "10", "7"])]).unwrap();
        assert_eq!(
            check_sequence(&graph, &seq(&["7"])),
            ConformanceResult::Rejected {
                run: 0,
                reason: RejectReason::NotStart,
            }
        );
    }

    #[test]
    fn check_rejects_non_end() {
        let graph = learn_pattern_graph(&[seq(&["a", "b", "c"])]).unwrap();
        assert_eq!(
            check_sequence(&graph, &seq(&["a", "b"])),
            ConformanceResult::Rejected {
                run: 1,
                reason: RejectReason::NotEnd,
            }
        );
    }

    #[test]
    fn unknown_symbols_are_soft_failures() {
        let graph = learn_pattern_graph(&[seq(&["a", "b"])]).unwrap();
        assert_eq!(
            check_sequence(&graph, &seq(&["z", "b"])),
            ConformanceResult::Rejected {
                run: 0,
                reason: RejectReason::NotStart,
            }
        );
        assert_eq!(
            check_sequence(&graph, &seq(&["a", "z"])),
            ConformanceResult::Rejected {
                run: 0,
                reason: RejectReason::MissingEdge(Word::F),
            }
        );
    }

    #[test]
    fn dot_export_follows_figure_conventions() {
        let graph = learn_pattern_graph(&[seq(&["10", "10", "7"])]).unwrap();
        let dot = export_dot(&graph);
        assert!(dot.contains("10 -> 7 [label=\"T, 1\"]"), "{dot}");
        assert!(dot.contains("7 [shape=doublecircle]"), "{dot}");
        assert!(dot.contains("__start0 -> 10"), "{dot}");
        assert!(dot.contains("__start0 [shape=none, label=\"\"]"), "{dot}");
    }

    #[test]
    fn dot_single_node_graph() {
        let graph = learn_pattern_graph(&[seq(&["x"])]).unwrap();
        let dot = export_dot(&graph);
        assert!(dot.contains("x [shape=doublecircle]"));
        assert!(dot.contains("__start0 -> x"));
        assert!(!dot.contains("label=\"F") && !dot.contains("label=\"T"));
    }

    #[test]
    fn dot_output_is_deterministic() {
        let train = [seq(&["10", "10", "7"]), seq(&["7", "5", "5", "10"])];
        let a = export_dot(&learn_pattern_graph(&train).unwrap());
        let b = export_dot(&learn_pattern_graph(&train).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn dot_quotes_non_identifier_symbols() {
        let graph = learn_pattern_graph(&[seq(&["c major", "c major", "d-7"])]).unwrap();
        let dot = export_dot(&graph);
        assert!(dot.contains("\"c major\" -> \"d-7\""), "{dot}");
    }

    #[test]
    fn json_round_trip() {
        let graph =
            learn_pattern_graph(&[seq(&["10", "10", "7"]), seq(&["10", "5", "7"])]).unwrap();
        let back = PatternGraph::from_json(&graph.to_json()).unwrap();
        assert_eq!(graph, back);
    }

    #[test]
    fn json_rejects_edges_to_missing_nodes() {
        let text = r#"{"nodes": [{"symbol": "a", "start": true, "end": true}],
                       "edges": [{"src": "a", "dst": "zzz", "word": "F", "count": 1}]}"#;
        assert!(matches!(
            PatternGraph::from_json(text),
            Err(PatternError::BadJson(_))
        ));
    }

    #[test]
    fn parse_sequences_one_phrase_per_line() {
        let seqs = parse_sequences("10 10 7\n\n5 5 3\n").unwrap();
        assert_eq!(seqs.len(), 2);
        assert_eq!(seqs[0].symbols, vec!["10", "10", "7"]);
        assert_eq!(seqs[1].symbols, vec!["5", "5", "3"]);
    }

    #[test]
    fn chord_degrees_from_notes() {
        use crate::symbolic::{NoteEvent, NoteList};
        let notes = NoteList::new(
            [65u8, 65, 62]
                .iter()
                .enumerate()
                .map(|(i, p)| NoteEvent {
                    onset: i as f64,
                    duration: 0.5,
                    pitch: *p,
                    velocity: 64,
                    channel: 0,
                })
                .collect(),
        );
        let seq = chord_degree_sequence(&notes, 55).unwrap();
        assert_eq!(seq.symbols, vec!["10", "10", "7"]);
    }

    fn arbitrary_sequences() -> impl Strategy<Value = Vec<SymbolSequence>> {
        proptest::collection::vec(
            proptest::collection::vec(0u8..4, 1..12).prop_map(|syms| {
                SymbolSequence::new(syms.into_iter().map(|s| s.to_string()))
            }),
            1..6,
        )
    }

    proptest! {
        #[test]
        fn edge_counts_sum_to_run_boundaries(seqs in arbitrary_sequences()) {
            let graph = learn_pattern_graph(&seqs).unwrap();
            let total: u64 = graph.edges.values().sum();
            let boundaries: usize = seqs.iter().map(|s| s.runs().len() - 1).sum();
            prop_assert_eq!(total as usize, boundaries);
        }

        #[test]
        fn learning_is_order_insensitive(seqs in arbitrary_sequences()) {
            let forward = learn_pattern_graph(&seqs).unwrap();
            let mut reversed = seqs.clone();
            reversed.reverse();
            let backward = learn_pattern_graph(&reversed).unwrap();
            prop_assert_eq!(forward, backward);
        }

        #[test]
        fn training_sequences_are_self_consistent(seqs in arbitrary_sequences()) {
            let graph = learn_pattern_graph(&seqs).unwrap();
            for s in &seqs {
                prop_assert_eq!(check_sequence(&graph, s), ConformanceResult::Accepted);
            }
        }
    }
}
