use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn geom(w: i64, h: i64) -> FfGeometry {
    FfGeometry::with_default_offsets(w, h).unwrap()
}

fn nff(w: i64, h: i64) -> FfSpec {
    FfSpec {
        geometry: geom(w, h),
        tag: FfTag::Nff,
    }
}

fn sff(w: i64, h: i64) -> FfSpec {
    FfSpec {
        geometry: geom(w, h),
        tag: FfTag::Sff,
    }
}

fn place(
    entries: &[FfSpec],
    req: &SeparationRequirement,
    width: i64,
    height: i64,
) -> Option<Placement> {
    place_with_width(entries, req, width, height, DEFAULT_GRID_UNIT_UM).unwrap()
}

/// Least feasible height by trying every corner position of every cell,
/// checking constraints straight from their geometric meaning.
fn brute_force_height(
    entries: &[FfSpec],
    req: &SeparationRequirement,
    width: i64,
    height: i64,
) -> Option<i64> {
    fn separated(lo_a: i64, len_a: i64, lo_b: i64, len_b: i64, gap: i64) -> bool {
        lo_a + len_a + gap <= lo_b || lo_b + len_b + gap <= lo_a
    }
    fn compatible(
        entries: &[FfSpec],
        req: &SeparationRequirement,
        pos: &[(i64, i64)],
        j: usize,
    ) -> bool {
        let d = req.min_distance;
        let (gj, (yj, zj)) = (&entries[j].geometry, pos[j]);
        for i in 0..j {
            let (gi, (yi, zi)) = (&entries[i].geometry, pos[i]);
            let region = req.region(i, j);
            let gap = if region == Some(SeparationRegion::Body) {
                d
            } else {
                0
            };
            if !separated(yi, gi.w, yj, gj.w, gap) && !separated(zi, gi.h, zj, gj.h, gap) {
                return false;
            }
            let far = |oi: (i64, i64), oj: (i64, i64)| {
                ((yi + oi.0) - (yj + oj.0)).abs() >= d || ((zi + oi.1) - (zj + oj.1)).abs() >= d
            };
            let ok = match region {
                Some(SeparationRegion::Reset) => far(gi.reset_offset, gj.reset_offset),
                Some(SeparationRegion::Set) => far(gi.set_offset, gj.set_offset),
                Some(SeparationRegion::Both) => {
                    far(gi.reset_offset, gj.reset_offset) && far(gi.set_offset, gj.set_offset)
                }
                _ => true,
            };
            if !ok {
                return false;
            }
        }
        true
    }
    fn rec(
        entries: &[FfSpec],
        req: &SeparationRequirement,
        w: i64,
        y_max: i64,
        pos: &mut Vec<(i64, i64)>,
    ) -> bool {
        let j = pos.len();
        if j == entries.len() {
            return true;
        }
        let g = &entries[j].geometry;
        for z in 0..=y_max - g.h {
            for y in 0..=w - g.w {
                pos.push((y, z));
                if compatible(entries, req, pos, j) && rec(entries, req, w, y_max, pos) {
                    return true;
                }
                pos.pop();
            }
        }
        false
    }
    let tallest = entries.iter().map(|e| e.geometry.h).max()?;
    (tallest..=height).find(|&y_max| rec(entries, req, width, y_max, &mut Vec::new()))
}

fn random_instance(rng: &mut ChaCha8Rng) -> (Vec<FfSpec>, SeparationRequirement, i64) {
    let g = rng.gen_range(1..=4);
    let entries: Vec<FfSpec> = (0..g)
        .map(|_| {
            let (w, h) = (2 * rng.gen_range(1..=3), 2 * rng.gen_range(1..=2));
            let geometry = FfGeometry {
                w,
                h,
                reset_offset: (rng.gen_range(0..=w), rng.gen_range(0..=h)),
                set_offset: (rng.gen_range(0..=w), rng.gen_range(0..=h)),
            };
            let tag = if rng.gen_bool(0.6) {
                FfTag::Sff
            } else {
                FfTag::Nff
            };
            FfSpec { geometry, tag }
        })
        .collect();
    let regions = [
        SeparationRegion::Reset,
        SeparationRegion::Set,
        SeparationRegion::Both,
        SeparationRegion::Body,
    ];
    let mut pairs = Vec::new();
    for i in 0..g {
        for j in i + 1..g {
            if entries[i].tag == FfTag::Sff && entries[j].tag == FfTag::Sff && rng.gen_bool(0.7) {
                pairs.push((i, j, regions[rng.gen_range(0..4)]));
            }
        }
    }
    let widest = entries.iter().map(|e| e.geometry.w).max().unwrap();
    let width = rng.gen_range(widest..=12);
    (
        entries,
        SeparationRequirement {
            pairs,
            min_distance: rng.gen_range(1..=5),
        },
        width,
    )
}

#[test]
fn sensitive_point_examples() {
    let ff = |y, z, geometry| PlacedFf {
        index: 0,
        bit_position: 0,
        tag: FfTag::Sff,
        y,
        z,
        geometry,
    };
    let g = FfGeometry::default();
    assert_eq!(sensitive_points(&ff(0, 0, g)), ((0, 5), (10, 0)));
    assert_eq!(sensitive_points(&ff(30, 40, g)), ((30, 45), (40, 40)));
    let custom = FfGeometry {
        w: 20,
        h: 10,
        reset_offset: (2, 3),
        set_offset: (7, 1),
    };
    assert_eq!(sensitive_points(&ff(5, 5, custom)), ((7, 8), (12, 6)));
}

#[test]
fn geometry_validation() {
    assert!(FfGeometry::with_default_offsets(3, 2).is_err());
    assert!(FfGeometry::with_default_offsets(0, 2).is_err());
    let g = FfGeometry {
        w: 4,
        h: 2,
        reset_offset: (5, 0),
        set_offset: (0, 0),
    };
    assert!(g.validate().is_err());
    assert_eq!(
        FfGeometry::with_default_offsets(20, 10).unwrap(),
        FfGeometry::default()
    );
}

#[test]
fn two_small_cells_side_by_side() {
    let p = place(
        &[nff(2, 2), nff(2, 2)],
        &SeparationRequirement::none(1),
        4,
        4,
    )
    .unwrap();
    assert_eq!(p.height, 2);
    assert!(check_placement(&p, &SeparationRequirement::none(1)).is_empty());
}

#[test]
fn both_regions_separated() {
    let req = SeparationRequirement {
        pairs: vec![(0, 1, SeparationRegion::Both)],
        min_distance: 10,
    };
    let p = place(&[sff(20, 10), sff(20, 10)], &req, 40, 40).unwrap();
    assert!(check_placement(&p, &req).is_empty());
    let (a, b) = (&p.ffs[0], &p.ffs[1]);
    for (pa, pb) in [
        (a.reset_point(), b.reset_point()),
        (a.set_point(), b.set_point()),
    ] {
        assert!((pa.0 - pb.0).abs().max((pa.1 - pb.1).abs()) >= 10);
    }
    assert_eq!(p.height, 10);
}

#[test]
fn body_gap_enforced() {
    let req = SeparationRequirement {
        pairs: vec![(0, 1, SeparationRegion::Body)],
        min_distance: 10,
    };
    let p = optimize_floorplan(
        &[sff(20, 10), sff(20, 10)],
        &req,
        &FloorplanOptions::default(),
    )
    .unwrap();
    assert!(check_placement(&p, &req).is_empty());
    // width candidates are 20 and 40; neither fits two cells plus a gap in a row
    assert_eq!((p.width, p.height), (20, 30));
}

#[test]
fn four_identical_cells_area() {
    let entries = vec![nff(2, 2); 4];
    let p = optimize_floorplan(
        &entries,
        &SeparationRequirement::none(1),
        &FloorplanOptions::default(),
    )
    .unwrap();
    assert_eq!(p.area(), 16);
    assert_eq!(p.width, 2);
    let wide = FloorplanOptions {
        widths: Some(vec![8, 4]),
        ..Default::default()
    };
    let p = optimize_floorplan(&entries, &SeparationRequirement::none(1), &wide).unwrap();
    assert_eq!((p.width, p.height), (4, 4));
}

#[test]
fn single_cell() {
    let p = optimize_floorplan(
        &[nff(20, 10)],
        &SeparationRequirement::none(10),
        &FloorplanOptions::default(),
    )
    .unwrap();
    assert_eq!(p.area(), 200);
    assert_eq!((p.ffs[0].y, p.ffs[0].z), (0, 0));
}

#[test]
fn errors() {
    let req = SeparationRequirement::none(0);
    assert_eq!(
        build_placement_problem(&[nff(2, 2)], &req, 4, 4).err(),
        Some(FloorplanError::InvalidDistance)
    );
    let req = SeparationRequirement::none(1);
    assert_eq!(
        build_placement_problem(&[nff(6, 2)], &req, 4, 4).err(),
        Some(FloorplanError::BoundTooSmall {
            bound: 4,
            needed: 6
        })
    );
    let opts = FloorplanOptions {
        widths: Some(vec![2]),
        height_bound: Some(2),
        grid_unit_um: None,
    };
    assert_eq!(
        optimize_floorplan(&[nff(2, 2), nff(2, 2)], &req, &opts).err(),
        Some(FloorplanError::PlacementExhausted)
    );
    let bad = SeparationRequirement {
        pairs: vec![(1, 1, SeparationRegion::Set)],
        min_distance: 1,
    };
    assert_eq!(
        optimize_floorplan(&[nff(2, 2), nff(2, 2)], &bad, &FloorplanOptions::default()).err(),
        Some(FloorplanError::InvalidPair(1, 1))
    );
}

#[test]
fn checker_flags_each_violation() {
    let g = FfGeometry::default();
    let ff = |index, y, z| PlacedFf {
        index,
        bit_position: index,
        tag: FfTag::Sff,
        y,
        z,
        geometry: g,
    };
    let p = Placement {
        ffs: vec![ff(0, 0, 0), ff(1, 10, 0), ff(2, 25, 5)],
        width: 40,
        height: 10,
        grid_unit_um: 0.1,
    };
    let req = SeparationRequirement {
        pairs: vec![
            (0, 2, SeparationRegion::Set),
            (1, 2, SeparationRegion::Body),
        ],
        min_distance: 10,
    };
    let v = check_placement(&p, &req);
    assert!(v.contains(&PlacementViolation::Overlap { a: 0, b: 1 }));
    assert!(v.contains(&PlacementViolation::OutOfBounds { index: 2 }));
    assert!(v.contains(&PlacementViolation::TooClose {
        a: 1,
        b: 2,
        region: SeparationRegion::Body
    }));
    assert!(!v
        .iter()
        .any(|e| matches!(e, PlacementViolation::TooClose { a: 0, .. })));
}

#[test]
fn json_round_trip() {
    let req = SeparationRequirement {
        pairs: vec![(0, 1, SeparationRegion::Reset)],
        min_distance: 10,
    };
    let p = optimize_floorplan(
        &[sff(20, 10), sff(20, 10), nff(20, 10)],
        &req,
        &FloorplanOptions::default(),
    )
    .unwrap();
    let text = p.to_json_string();
    assert_eq!(Placement::from_json(&text).unwrap(), p);
    assert!(text.contains("\"reset_point\""));
    assert!(Placement::from_json("{\"W\": 1}").is_err());
}

#[test]
fn encoding_requirements_follow_variant() {
    use crate::encoder::{Block, Encoding, ModelVariant};
    use num_rational::BigRational;
    let enc = |variant, m_left, m_right, at_blocks| Encoding {
        n: 5,
        codes: Vec::new(),
        m_right,
        m_left,
        variant,
        x: 1,
        objective: BigRational::from_integer(0.into()),
        at_blocks,
    };
    let (ffs, req) = requirement_for_encoding(
        &enc(ModelVariant::ResetModel, 0, 2, vec![Block::Right]),
        FfGeometry::default(),
        10,
    );
    assert_eq!(
        ffs.iter().map(|f| f.tag).collect::<Vec<_>>(),
        [FfTag::Nff, FfTag::Nff, FfTag::Nff, FfTag::Sff, FfTag::Sff]
    );
    assert_eq!(req.pairs, vec![(3, 4, SeparationRegion::Set)]);
    let (_, req) = requirement_for_encoding(
        &enc(ModelVariant::SetModel, 0, 2, vec![Block::Right]),
        FfGeometry::default(),
        10,
    );
    assert_eq!(req.pairs, vec![(3, 4, SeparationRegion::Reset)]);
    let (_, req) = requirement_for_encoding(
        &enc(
            ModelVariant::SetAndReset,
            2,
            2,
            vec![Block::Left, Block::Right],
        ),
        FfGeometry::default(),
        10,
    );
    assert_eq!(
        req.pairs,
        vec![
            (0, 1, SeparationRegion::Reset),
            (3, 4, SeparationRegion::Set)
        ]
    );
    let (_, req) = requirement_for_encoding(
        &enc(ModelVariant::BitFlip, 0, 3, vec![Block::Right]),
        FfGeometry::default(),
        10,
    );
    assert_eq!(req.pairs.len(), 3);
    assert!(req.pairs.iter().all(|p| p.2 == SeparationRegion::Body));
}

#[test]
fn single_width_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..300 {
        let (entries, req, width) = random_instance(&mut rng);
        let got = place(&entries, &req, width, 12);
        let want = brute_force_height(&entries, &req, width, 12);
        assert_eq!(
            got.as_ref().map(|p| p.height),
            want,
            "{entries:?} {req:?} W={width}"
        );
        if let Some(p) = got {
            assert!(check_placement(&p, &req).is_empty());
        }
    }
}

#[test]
fn search_matches_ilp_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..40 {
        let (entries, req, width) = random_instance(&mut rng);
        let model = build_placement_problem(&entries, &req, width, 12).unwrap();
        let solution = crate::ilp::solve(&model.problem).unwrap();
        let want = solution.is_optimal().then(|| solution.value(model.height));
        let got = place(&entries, &req, width, 12).map(|p| p.height);
        assert_eq!(got, want, "{entries:?} {req:?} W={width}");
        if solution.is_optimal() {
            let p = model.decode(&entries, &solution.values, DEFAULT_GRID_UNIT_UM);
            assert!(check_placement(&p, &req).is_empty());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn extra_pair_never_shrinks_area(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut entries, mut req, _) = random_instance(&mut rng);
        if entries.len() < 2 {
            entries.push(sff(2, 2));
        }
        let opts = FloorplanOptions { widths: Some(vec![entries.iter().map(|e| e.geometry.w).max().unwrap(), 12]), height_bound: Some(24), grid_unit_um: None };
        let Ok(base) = optimize_floorplan(&entries, &req, &opts) else { return Ok(()) };
        prop_assert!(check_placement(&base, &req).is_empty());
        let (i, j) = (0, entries.len() - 1);
        req.pairs.retain(|p| (p.0, p.1) != (i, j));
        let before = optimize_floorplan(&entries, &req, &opts).map(|p| p.area()).ok();
        req.pairs.push((i, j, SeparationRegion::Body));
        req.pairs.sort();
        let after = optimize_floorplan(&entries, &req, &opts).map(|p| p.area()).ok();
        if let (Some(b), Some(a)) = (before, after) {
            prop_assert!(a >= b);
        }
    }

    #[test]
    fn grid_unit_is_metadata(seed in any::<u64>(), unit in 1u32..50) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (entries, req, width) = random_instance(&mut rng);
        let a = place_with_width(&entries, &req, width, 12, 0.1).unwrap();
        let b = place_with_width(&entries, &req, width, 12, f64::from(unit) * 0.01).unwrap();
        prop_assert_eq!(a.map(|p| coordinates(&p)), b.map(|p| coordinates(&p)));
    }
}
