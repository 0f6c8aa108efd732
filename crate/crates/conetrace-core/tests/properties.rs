//! Randomized invariant checks over the library's core operations.

use conetrace_core::*;
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn circumference() -> impl Strategy<Value = f64> {
    0.3f64..20.0
}

proptest! {
    #[test]
    fn reduce_lands_in_range(alpha in circumference(), theta in -100.0f64..100.0) {
        let link = LinkCircle::new(alpha).unwrap();
        let r = link.reduce(theta);
        prop_assert!((0.0..alpha).contains(&r));
        // Reduction preserves the point: distance to the original is 0.
        prop_assert!(link.distance(r, theta) < 1e-9 * alpha.max(1.0));
    }

    #[test]
    fn link_distance_is_a_metric(
        alpha in circumference(),
        a in 0.0f64..1.0,
        b in 0.0f64..1.0,
        c in 0.0f64..1.0,
    ) {
        let link = LinkCircle::new(alpha).unwrap();
        let (a, b, c) = (a * alpha, b * alpha, c * alpha);
        let d = |x, y| link_distance(&link, x, y);
        prop_assert!(d(a, b) >= 0.0);
        prop_assert!(d(a, a) < 1e-12);
        prop_assert!((d(a, b) - d(b, a)).abs() < 1e-12);
        prop_assert!(d(a, c) <= d(a, b) + d(b, c) + 1e-9);
        prop_assert!(d(a, b) <= alpha / 2.0 + 1e-12);
    }

    #[test]
    fn classification_symmetric_and_shift_invariant(
        alpha in circumference(),
        tin in 0.0f64..1.0,
        tout in 0.0f64..1.0,
        shift in 0.0f64..1.0,
    ) {
        let link = LinkCircle::new(alpha).unwrap();
        let (tin, tout, shift) = (tin * alpha, tout * alpha, shift * alpha);
        let c1 = classify_transition(&link, tin, tout, GEOMETRIC_TOL);
        let c2 = classify_transition(&link, tout, tin, GEOMETRIC_TOL);
        prop_assert_eq!(c1, c2);
        let c3 = classify_transition(&link, tin + shift, tout + shift, GEOMETRIC_TOL);
        prop_assert_eq!(c1, c3);
    }

    #[test]
    fn coefficient_reciprocity_and_reflection(
        alpha in 6.3f64..20.0,
        tin in 0.0f64..1.0,
        tout in 0.0f64..1.0,
    ) {
        let (tin, tout) = (tin * alpha, tout * alpha);
        if singular_set_distance(alpha, tin - tout) < 1e-3 {
            return Ok(());
        }
        let d = diffraction_coefficient_closed(alpha, tin, tout).unwrap().value;
        // Entry/exit exchange.
        let swapped = diffraction_coefficient_closed(alpha, tout, tin).unwrap().value;
        prop_assert!((d - swapped).norm() <= 1e-10 * d.norm().max(1.0));
        // Simultaneous reflection of both link coordinates.
        let reflected = diffraction_coefficient_closed(alpha, alpha - tin, alpha - tout)
            .unwrap()
            .value;
        prop_assert!((d - reflected).norm() <= 1e-8 * d.norm().max(1.0));
        // Coefficient is purely a function of the difference: joint shift.
        let shifted = diffraction_coefficient_closed(alpha, tin + 1.0, tout + 1.0)
            .unwrap()
            .value;
        prop_assert!((d - shifted).norm() <= 1e-8 * d.norm().max(1.0));
    }

    #[test]
    fn singular_set_distance_period_and_reflection(
        alpha in circumference(),
        delta in -50.0f64..50.0,
    ) {
        let d = singular_set_distance(alpha, delta);
        prop_assert!(d >= 0.0 && d <= alpha / 2.0 + 1e-12);
        let shifted = singular_set_distance(alpha, delta + alpha);
        prop_assert!((d - shifted).abs() < 1e-9);
        let negated = singular_set_distance(alpha, -delta);
        prop_assert!((d - negated).abs() < 1e-9);
    }

    #[test]
    fn extrapolation_exact_on_polynomials(
        c0 in -5.0f64..5.0,
        c1 in -5.0f64..5.0,
        c2 in -5.0f64..5.0,
    ) {
        let eps = [0.4, 0.2, 0.1, 0.05];
        let values: Vec<Complex64> = eps
            .iter()
            .map(|&e| Complex64::new(c0 + c1 * e + c2 * e * e, c1 - c2 * e))
            .collect();
        let (v, _) = extrapolate_to_zero(&eps, &values);
        prop_assert!((v - Complex64::new(c0, c1)).norm() < 1e-9);
    }

    #[test]
    fn cutoff_bounded_and_complementary(x in -1.0f64..2.0) {
        for profile in [TransitionProfile::ExpReciprocal, TransitionProfile::ExpReciprocalSquare] {
            let chi = CutoffSpec { profile };
            let v = chi.eval(x);
            prop_assert!((0.0..=1.0).contains(&v));
            if (0.0..=1.0).contains(&x) {
                // chi(x) + chi(1-x) = 1 on the transition interval.
                prop_assert!((v + chi.eval(1.0 - x) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn segment_amplitude_homogeneity(l in 0.1f64..50.0, n in 2u32..4) {
        let w = segment_amplitude(l, n).w_factor;
        let w2 = segment_amplitude(2.0 * l, n).w_factor;
        let expected = 2f64.powf(-((n as f64 - 1.0) / 2.0));
        prop_assert!((w2 / w - expected).abs() < 1e-12);
    }
}

// Chain-level invariants on a fixed small graph exercised with random words.
fn test_graph() -> ConeGraph {
    ConeGraph::new(
        vec![
            ConePoint {
                id: 0,
                link: LinkCircle::new(3.0 * PI).unwrap(),
                position: None,
            },
            ConePoint {
                id: 1,
                link: LinkCircle::new(5.0).unwrap(),
                position: None,
            },
        ],
        vec![
            GeodesicSegment {
                id: 0,
                a: SegmentEnd {
                    cone_point: 0,
                    theta: 0.2,
                },
                b: SegmentEnd {
                    cone_point: 1,
                    theta: 1.0,
                },
                length: 1.0,
            },
            GeodesicSegment {
                id: 1,
                a: SegmentEnd {
                    cone_point: 0,
                    theta: 4.0,
                },
                b: SegmentEnd {
                    cone_point: 1,
                    theta: 3.3,
                },
                length: 1.7,
            },
        ],
    )
    .unwrap()
}

proptest! {
    #[test]
    fn canonicalization_rotation_reversal_invariant(rot in 0usize..6, seed in 0u64..1000) {
        let graph = test_graph();
        let chains = enumerate_closed_chains(&graph, 7.0, 6, DEFAULT_NODE_BUDGET).unwrap();
        prop_assume!(!chains.is_empty());
        let chain = &chains[seed as usize % chains.len()];
        let word = &chain.traversals;
        let canon = canonicalize(word);
        // Idempotent.
        prop_assert_eq!(&canonicalize(&canon), &canon);
        // Rotation invariant.
        let r = rot % word.len();
        let mut rotated = word[r..].to_vec();
        rotated.extend_from_slice(&word[..r]);
        prop_assert_eq!(&canonicalize(&rotated), &canon);
        // Reversal (with traversal direction flipped) invariant.
        let reversed: Vec<Traversal> = word
            .iter()
            .rev()
            .map(|t| Traversal {
                segment: t.segment,
                forward: !t.forward,
            })
            .collect();
        prop_assert_eq!(&canonicalize(&reversed), &canon);
    }

    #[test]
    fn chain_bookkeeping_consistent(seed in 0u64..1000) {
        let graph = test_graph();
        let chains = enumerate_closed_chains(&graph, 7.0, 6, DEFAULT_NODE_BUDGET).unwrap();
        prop_assume!(!chains.is_empty());
        let chain = &chains[seed as usize % chains.len()];
        // Stored length equals the recomputed sum.
        let recomputed: f64 = chain
            .traversals
            .iter()
            .map(|t| graph.segment(t.segment).unwrap().length)
            .sum();
        prop_assert!((chain.total_length - recomputed).abs() < 1e-12);
        prop_assert_eq!(chain.diffraction_count, chain.traversals.len());
        // L = m * L_0.
        prop_assert!(
            (chain.total_length - chain.multiplicity as f64 * chain.primitive_length).abs()
                < 1e-9
        );
        let (primitive, m) = primitive_decompose(&graph, chain);
        prop_assert_eq!(m, chain.multiplicity);
        prop_assert!((primitive.total_length - chain.primitive_length).abs() < 1e-9);
        // The flag agrees with the per-transition classes.
        prop_assert_eq!(
            chain.any_geometric,
            chain
                .transitions
                .iter()
                .any(|t| t.class == TransitionClass::Geometric)
        );
    }

    #[test]
    fn dlspec_sorted_and_deduplicated(l_max in 2.0f64..7.0) {
        let graph = test_graph();
        let (entries, chains) = dlspec(&graph, l_max, 6, DEFAULT_NODE_BUDGET).unwrap();
        for w in entries.windows(2) {
            prop_assert!(w[1].length > w[0].length + 1e-10);
        }
        // Every chain's length appears in some entry.
        for chain in &chains {
            prop_assert!(entries
                .iter()
                .any(|e| (e.length - chain.total_length).abs() <= 1e-9));
        }
        // Entries only grow with the bound.
        let (fewer, _) = dlspec(&graph, l_max / 2.0, 6, DEFAULT_NODE_BUDGET).unwrap();
        prop_assert!(fewer.len() <= entries.len());
    }
}
