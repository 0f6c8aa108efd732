//! Enumeration of closed diffractive geodesics on a cone graph.
//!
//! A closed chain is a cyclic word of directed segment traversals in which
//! consecutive traversals meet at a cone point. The enumeration is a
//! bounded depth-first search over directed traversals with pruning on the
//! remaining length budget; results are canonicalized (lexicographically
//! minimal rotation over both orientations) and deduplicated.

use crate::geometry::{classify_transition, ConeGraph, TransitionClass, GEOMETRIC_TOL};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

/// Default cap on the number of search nodes visited.
pub const DEFAULT_NODE_BUDGET: u64 = 10_000_000;

/// Absolute tolerance for deduplicating lengths in the length spectrum.
pub const LENGTH_DEDUP_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum EnumError {
    #[error("search frontier exceeded the node budget of {budget} nodes")]
    BudgetExceeded { budget: u64 },
    #[error("segment {0} not found in graph")]
    UnknownSegment(u32),
}

/// A directed traversal of an undirected segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Traversal {
    pub segment: u32,
    /// True for the a->b direction.
    pub forward: bool,
}

/// Entry/exit data at the cone point between two consecutive traversals.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Transition {
    pub cone_point: u32,
    pub theta_in: f64,
    pub theta_out: f64,
    pub class: TransitionClass,
}

/// A closed diffractive geodesic in canonical form.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClosedChain {
    pub traversals: Vec<Traversal>,
    /// `transitions[i]` sits where traversal `i` ends and `i+1` begins.
    pub transitions: Vec<Transition>,
    pub total_length: f64,
    pub diffraction_count: usize,
    pub primitive_length: f64,
    pub multiplicity: usize,
    pub any_geometric: bool,
}

impl ClosedChain {
    /// Traversal word of the primitive chain this one iterates.
    pub fn primitive_word(&self) -> &[Traversal] {
        &self.traversals[..self.traversals.len() / self.multiplicity]
    }
}

/// Lexicographically minimal rotation over both traversal orientations.
pub fn canonicalize(word: &[Traversal]) -> Vec<Traversal> {
    let mut best: Option<Vec<Traversal>> = None;
    let k = word.len();
    let reversed: Vec<Traversal> = word
        .iter()
        .rev()
        .map(|t| Traversal {
            segment: t.segment,
            forward: !t.forward,
        })
        .collect();
    for w in [word, reversed.as_slice()] {
        for r in 0..k {
            let rot: Vec<Traversal> = (0..k).map(|i| w[(r + i) % k]).collect();
            if best.as_ref().map_or(true, |b| rot < *b) {
                best = Some(rot);
            }
        }
    }
    best.unwrap_or_default()
}

/// Smallest cyclic period of the word: returns (primitive length, multiplicity).
pub fn word_period(word: &[Traversal]) -> (usize, usize) {
    let k = word.len();
    for p in 1..=k {
        if k % p == 0 && (0..k).all(|i| word[i] == word[i % p]) {
            return (p, k / p);
        }
    }
    (k, 1)
}

/// Decompose a chain into its primitive and the iteration multiplicity.
pub fn primitive_decompose(graph: &ConeGraph, chain: &ClosedChain) -> (ClosedChain, usize) {
    let (p, m) = word_period(&chain.traversals);
    if m == 1 {
        return (chain.clone(), 1);
    }
    let primitive = chain_from_word(graph, canonicalize(&chain.traversals[..p]));
    (primitive, m)
}

pub fn chain_from_word(graph: &ConeGraph, word: Vec<Traversal>) -> ClosedChain {
    let k = word.len();
    let mut total_length = 0.0;
    let mut transitions = Vec::with_capacity(k);
    let mut any_geometric = false;
    for i in 0..k {
        let seg = graph
            .segment(word[i].segment)
            .expect("word references a graph segment");
        total_length += seg.length;
        let next = &word[(i + 1) % k];
        let nseg = graph
            .segment(next.segment)
            .expect("word references a graph segment");
        let (_, arrive) = seg.end(word[i].forward);
        let (depart, _) = nseg.end(next.forward);
        debug_assert_eq!(arrive.cone_point, depart.cone_point);
        let link = graph
            .cone_point(arrive.cone_point)
            .expect("segment endpoint exists")
            .link;
        let class = classify_transition(&link, arrive.theta, depart.theta, GEOMETRIC_TOL);
        if class == TransitionClass::Geometric {
            any_geometric = true;
        }
        transitions.push(Transition {
            cone_point: arrive.cone_point,
            theta_in: arrive.theta,
            theta_out: depart.theta,
            class,
        });
    }
    let (p, m) = word_period(&word);
    let primitive_length: f64 = word[..p]
        .iter()
        .map(|t| graph.segment(t.segment).unwrap().length)
        .sum();
    ClosedChain {
        diffraction_count: k,
        total_length,
        primitive_length,
        multiplicity: m,
        any_geometric,
        traversals: word,
        transitions,
    }
}

/// Enumerate all canonical closed chains with total length <= `l_max` and
/// at most `k_max` diffractions. Chains containing geometric transitions
/// are included but flagged.
pub fn enumerate_closed_chains(
    graph: &ConeGraph,
    l_max: f64,
    k_max: usize,
    node_budget: u64,
) -> Result<Vec<ClosedChain>, EnumError> {
    // Outgoing directed traversals per cone point.
    let mut outgoing: Vec<(u32, Vec<Traversal>)> = graph
        .cone_points()
        .iter()
        .map(|p| (p.id, Vec::new()))
        .collect();
    let ids: Vec<u32> = outgoing.iter().map(|(pid, _)| *pid).collect();
    let idx_of = move |id: u32| -> usize {
        ids.binary_search(&id).expect("cone point exists")
    };
    for seg in graph.segments() {
        let i = idx_of(seg.a.cone_point);
        outgoing[i].1.push(Traversal {
            segment: seg.id,
            forward: true,
        });
        let i = idx_of(seg.b.cone_point);
        outgoing[i].1.push(Traversal {
            segment: seg.id,
            forward: false,
        });
    }
    for (_, list) in outgoing.iter_mut() {
        list.sort();
    }

    let min_len = graph
        .segments()
        .iter()
        .map(|s| s.length)
        .fold(f64::INFINITY, f64::min);
    let mut seen: BTreeSet<Vec<Traversal>> = BTreeSet::new();
    let mut visited: u64 = 0;

    struct Frame {
        word: Vec<Traversal>,
        length: f64,
        at: u32, // cone point the walk currently sits on
    }

    for seg in graph.segments() {
        for forward in [true, false] {
            let start = Traversal {
                segment: seg.id,
                forward,
            };
            let (from, to) = seg.end(forward);
            if seg.length > l_max {
                continue;
            }
            let origin = from.cone_point;
            let mut stack = vec![Frame {
                word: vec![start],
                length: seg.length,
                at: to.cone_point,
            }];
            while let Some(frame) = stack.pop() {
                visited += 1;
                if visited > node_budget {
                    return Err(EnumError::BudgetExceeded {
                        budget: node_budget,
                    });
                }
                if frame.at == origin {
                    let canon = canonicalize(&frame.word);
                    seen.insert(canon);
                }
                if frame.word.len() >= k_max || frame.length + min_len > l_max {
                    continue;
                }
                let i = idx_of(frame.at);
                for next in &outgoing[i].1 {
                    let nseg = graph.segment(next.segment).unwrap();
                    let new_len = frame.length + nseg.length;
                    if new_len > l_max + LENGTH_DEDUP_TOL {
                        continue;
                    }
                    let (_, to) = nseg.end(next.forward);
                    let mut word = frame.word.clone();
                    word.push(*next);
                    stack.push(Frame {
                        word,
                        length: new_len,
                        at: to.cone_point,
                    });
                }
            }
        }
    }

    let mut chains: Vec<ClosedChain> = seen
        .into_iter()
        .map(|w| chain_from_word(graph, w))
        .collect();
    chains.sort_by(|a, b| {
        a.total_length
            .partial_cmp(&b.total_length)
            .unwrap()
            .then_with(|| a.traversals.cmp(&b.traversals))
    });
    Ok(chains)
}

/// One length in the diffractive length spectrum.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LengthSpectrumEntry {
    pub length: f64,
    /// Indices into the chain list returned alongside the spectrum.
    pub geodesic_ids: Vec<usize>,
    pub any_geometric_transition: bool,
}

/// Sorted, deduplicated lengths of all closed chains up to `l_max`.
pub fn dlspec(
    graph: &ConeGraph,
    l_max: f64,
    k_max: usize,
    node_budget: u64,
) -> Result<(Vec<LengthSpectrumEntry>, Vec<ClosedChain>), EnumError> {
    let chains = enumerate_closed_chains(graph, l_max, k_max, node_budget)?;
    let mut entries: Vec<LengthSpectrumEntry> = Vec::new();
    for (id, chain) in chains.iter().enumerate() {
        match entries.last_mut() {
            Some(e) if (chain.total_length - e.length).abs() <= LENGTH_DEDUP_TOL => {
                e.geodesic_ids.push(id);
                e.any_geometric_transition |= chain.any_geometric;
            }
            _ => entries.push(LengthSpectrumEntry {
                length: chain.total_length,
                geodesic_ids: vec![id],
                any_geometric_transition: chain.any_geometric,
            }),
        }
    }
    Ok((entries, chains))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_doubled_polygon, ConeGraph, ConePoint, GeodesicSegment, LinkCircle, SegmentEnd};
    use approx::assert_relative_eq;

    fn two_point_graph(alpha: f64, length: f64) -> ConeGraph {
        let points = vec![
            ConePoint {
                id: 0,
                link: LinkCircle::new(alpha).unwrap(),
                position: Some([0.0, 0.0]),
            },
            ConePoint {
                id: 1,
                link: LinkCircle::new(alpha).unwrap(),
                position: Some([length, 0.0]),
            },
        ];
        let segments = vec![GeodesicSegment {
            id: 0,
            a: SegmentEnd {
                cone_point: 0,
                theta: 0.0,
            },
            b: SegmentEnd {
                cone_point: 1,
                theta: 0.0,
            },
            length,
        }];
        ConeGraph::new(points, segments).unwrap()
    }

    #[test]
    fn back_and_forth_iterates() {
        let g = two_point_graph(4.0 * std::f64::consts::PI, 1.0);
        let chains = enumerate_closed_chains(&g, 6.5, 8, DEFAULT_NODE_BUDGET).unwrap();
        let lengths: Vec<f64> = chains.iter().map(|c| c.total_length).collect();
        assert_eq!(lengths, vec![2.0, 4.0, 6.0]);
        for c in &chains {
            assert_eq!(c.diffraction_count % 2, 0);
            assert_relative_eq!(c.primitive_length, 2.0);
            assert_eq!(c.multiplicity, c.diffraction_count / 2);
        }
    }

    #[test]
    fn empty_graph() {
        let points = vec![ConePoint {
            id: 0,
            link: LinkCircle::new(3.0).unwrap(),
            position: None,
        }];
        let g = ConeGraph::new(points, vec![]).unwrap();
        assert!(enumerate_closed_chains(&g, 10.0, 5, DEFAULT_NODE_BUDGET)
            .unwrap()
            .is_empty());
        let (spec, _) = dlspec(&g, 10.0, 5, DEFAULT_NODE_BUDGET).unwrap();
        assert!(spec.is_empty());
    }

    #[test]
    fn doubled_square_short_chains() {
        let g =
            build_doubled_polygon(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap();
        let chains = enumerate_closed_chains(&g, 2.1, 2, DEFAULT_NODE_BUDGET).unwrap();
        // Each of the 4 edge segments gives a length-2 back-and-forth chain.
        let bounce: Vec<_> = chains
            .iter()
            .filter(|c| (c.total_length - 2.0).abs() < 1e-12 && c.diffraction_count == 2)
            .collect();
        assert_eq!(bounce.len(), 4);
    }

    #[test]
    fn doubled_square_dlspec() {
        let g =
            build_doubled_polygon(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap();
        let (spec, _) = dlspec(&g, 2.9, 4, DEFAULT_NODE_BUDGET).unwrap();
        let lengths: Vec<f64> = spec.iter().map(|e| e.length).collect();
        assert!(lengths.iter().any(|&l| (l - 2.0).abs() < 1e-9));
        assert!(lengths
            .iter()
            .any(|&l| (l - 2.0 * 2f64.sqrt()).abs() < 1e-9));
    }

    #[test]
    fn primitive_decompose_examples() {
        let g = two_point_graph(4.0 * std::f64::consts::PI, 1.0);
        let chains = enumerate_closed_chains(&g, 6.5, 8, DEFAULT_NODE_BUDGET).unwrap();
        let triple = chains
            .iter()
            .find(|c| (c.total_length - 6.0).abs() < 1e-12)
            .unwrap();
        let (prim, m) = primitive_decompose(&g, triple);
        assert_eq!(m, 3);
        assert_relative_eq!(prim.total_length, 2.0);
        let (_, m1) = primitive_decompose(&g, &prim);
        assert_eq!(m1, 1);
    }

    #[test]
    fn canonicalize_idempotent_and_symmetric() {
        let word = vec![
            Traversal {
                segment: 2,
                forward: true,
            },
            Traversal {
                segment: 0,
                forward: false,
            },
            Traversal {
                segment: 1,
                forward: true,
            },
        ];
        let canon = canonicalize(&word);
        assert_eq!(canonicalize(&canon), canon);
        // Any rotation canonicalizes identically.
        for r in 0..word.len() {
            let rot: Vec<_> = (0..word.len())
                .map(|i| word[(r + i) % word.len()])
                .collect();
            assert_eq!(canonicalize(&rot), canon);
        }
        // Reversal too.
        let rev: Vec<_> = word
            .iter()
            .rev()
            .map(|t| Traversal {
                segment: t.segment,
                forward: !t.forward,
            })
            .collect();
        assert_eq!(canonicalize(&rev), canon);
    }

    #[test]
    fn budget_abort() {
        let g =
            build_doubled_polygon(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap();
        let res = enumerate_closed_chains(&g, 50.0, 40, 1000);
        assert!(matches!(res, Err(EnumError::BudgetExceeded { .. })));
    }

    #[test]
    fn length_additivity() {
        let g =
            build_doubled_polygon(&[[0.0, 0.0], [2.0, 0.0], [1.3, 1.7]]).unwrap();
        let chains = enumerate_closed_chains(&g, 8.0, 4, DEFAULT_NODE_BUDGET).unwrap();
        assert!(!chains.is_empty());
        for c in &chains {
            let recomputed: f64 = c
                .traversals
                .iter()
                .map(|t| g.segment(t.segment).unwrap().length)
                .sum();
            assert!((recomputed - c.total_length).abs() < 1e-12);
        }
    }
}
