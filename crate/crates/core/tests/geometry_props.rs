use iafeas::geometry::{
    area_2d, convex_hull_2d, mixed_volume, mixed_volume_ie, mixed_volume_with, newton_polygon, volume_3d,
    MixedVolumeOptions,
};
use iafeas::polysys::{bezout_bound, build_supports, literal_support, PolynomialSystem, SupportSet};
use iafeas::parse_system;
use num_rational::Rational64;
use proptest::prelude::*;

fn support(dim: usize, max_coord: u32, max_points: usize) -> impl Strategy<Value = SupportSet> {
    prop::collection::vec(prop::collection::vec(0..=max_coord, dim), 1..=max_points)
        .prop_map(|pts| literal_support(&pts).unwrap())
}

fn system(dim: usize, max_coord: u32, max_points: usize) -> impl Strategy<Value = Vec<SupportSet>> {
    prop::collection::vec(support(dim, max_coord, max_points), dim)
}

fn translate(s: &SupportSet, by: &[u32]) -> SupportSet {
    let pts: Vec<Vec<u32>> = s
        .points()
        .iter()
        .map(|p| p.0.iter().zip(by).map(|(a, b)| a + b).collect())
        .collect();
    literal_support(&pts).unwrap()
}

fn dense(n: usize, deg: u32) -> SupportSet {
    let mut pts = vec![vec![0u32; n]];
    let mut frontier = pts.clone();
    for _ in 0..deg {
        let mut next = Vec::new();
        for p in &frontier {
            for i in 0..n {
                let mut q = p.clone();
                q[i] += 1;
                if !pts.contains(&q) && !next.contains(&q) {
                    next.push(q);
                }
            }
        }
        pts.extend(next.iter().cloned());
        frontier = next;
    }
    literal_support(&pts).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn planar_mv_matches_ie(s in system(2, 4, 5), seed in any::<u64>()) {
        let ie = mixed_volume_ie(&s).unwrap();
        prop_assert_eq!(mixed_volume(&s, seed).unwrap().mixed_volume, ie);
    }

    #[test]
    fn spatial_mv_matches_ie(s in system(3, 2, 4), seed in any::<u64>()) {
        let ie = mixed_volume_ie(&s).unwrap();
        prop_assert_eq!(mixed_volume(&s, seed).unwrap().mixed_volume, ie);
    }

    #[test]
    fn permutation_and_translation(s in system(3, 2, 4), shift in prop::collection::vec(0u32..4, 3), which in 0usize..3) {
        let base = mixed_volume(&s, 1).unwrap().mixed_volume;
        let mut rev = s.clone();
        rev.reverse();
        prop_assert_eq!(mixed_volume(&rev, 2).unwrap().mixed_volume, base);
        let mut moved = s.clone();
        moved[which] = translate(&s[which], &shift);
        prop_assert_eq!(mixed_volume(&moved, 3).unwrap().mixed_volume, base);
    }

    #[test]
    fn diagonal_is_twice_area(p in support(2, 5, 6), seed in any::<u64>()) {
        let area = area_2d(&newton_polygon(&p).unwrap());
        let mv = mixed_volume(&[p.clone(), p], seed).unwrap().mixed_volume;
        prop_assert_eq!(Rational64::from_integer(mv as i64), area * 2);
    }

    #[test]
    fn bounded_by_bezout(s in system(3, 2, 4)) {
        let mv = mixed_volume(&s, 5).unwrap().mixed_volume;
        let ps = PolynomialSystem::from_supports(s).unwrap();
        prop_assert!(u128::from(mv) <= bezout_bound(&ps));
    }

    #[test]
    fn shortcut_agrees_with_full_search(s in system(3, 2, 3), seed in any::<u64>()) {
        let full = mixed_volume_with(&s, MixedVolumeOptions { seed, structural_shortcut: false }).unwrap();
        prop_assert_eq!(mixed_volume(&s, seed).unwrap().mixed_volume, full.mixed_volume);
    }

    #[test]
    fn hull_vertices_are_input_points(pts in prop::collection::vec((0i64..6, 0i64..6), 1..10)) {
        let pts: Vec<[i64; 2]> = pts.into_iter().map(|(a, b)| [a, b]).collect();
        let hull = convex_hull_2d(&pts);
        prop_assert!(hull.vertices.iter().all(|v| pts.contains(v)));
        if !hull.degenerate {
            let n = hull.vertices.len();
            for i in 0..n {
                let (o, a, b) = (hull.vertices[i], hull.vertices[(i + 1) % n], hull.vertices[(i + 2) % n]);
                prop_assert!((a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]) > 0);
            }
        }
    }
}

#[test]
fn dense_supports_reach_bezout() {
    for (n, degs) in [(2, vec![3u32, 4]), (2, vec![2, 5]), (3, vec![2, 2, 3]), (3, vec![1, 2, 2])] {
        let s: Vec<SupportSet> = degs.iter().map(|&d| dense(n, d)).collect();
        let expected: u64 = degs.iter().map(|&d| u64::from(d)).product();
        assert_eq!(mixed_volume(&s, 11).unwrap().mixed_volume, expected, "{degs:?}");
    }
}

#[test]
fn scaled_simplex_volume() {
    let pts = vec![vec![0, 0, 0], vec![2, 0, 0], vec![0, 2, 0], vec![0, 0, 2]];
    assert_eq!(volume_3d(&pts), Rational64::new(8, 6));
}

#[test]
fn alignment_mv_within_bezout() {
    for spec in ["(2x3,1)^4", "(2x2,1)^3", "(2x2,1)^3(3x5,1)"] {
        let ps = build_supports(&parse_system(spec).unwrap());
        let mv = mixed_volume(&ps.supports, 0).unwrap().mixed_volume;
        assert!(u128::from(mv) <= bezout_bound(&ps), "{spec}");
    }
}

#[test]
fn prism_volume() {
    let mut pts = Vec::new();
    for y in 0..4 {
        for [x, z] in [[0, 2], [1, 4], [2, 4]] {
            pts.push(vec![x, y, z]);
        }
    }
    assert_eq!(volume_3d(&pts), Rational64::from_integer(3));
}

#[test]
fn improper_square_system_without_shortcut() {
    let ps = build_supports(&parse_system("(2x2,1)^3(3x5,1)").unwrap());
    let opts = MixedVolumeOptions { seed: 4, structural_shortcut: false };
    assert_eq!(mixed_volume_with(&ps.supports, opts).unwrap().mixed_volume, 0);
}
