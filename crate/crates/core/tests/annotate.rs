mod common;

use common::{is_tight, oracle_boxes, random_grid, rng};
use partcap::annotate::{
    build_geometry_gt, connected_components, extract_part_boxes, map_detections, read_annotations,
    write_annotations, BoxGrouping, BoxStage, PartBox, ViewAnnotation,
};
use partcap::bbox::BBox;
use partcap::render::{default_viewpoints, render_part_highlight, viewpoints, HIGHLIGHT};
use proptest::prelude::*;

fn probs_strategy(c: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, c).prop_map(|v| {
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn boxes_match_flood_fill_oracle(seed in 0u64..10_000, res in 4usize..=16, view in 0usize..12, min_px in 1usize..12) {
        let grid = random_grid(&mut rng(seed), res, 3);
        let cam = viewpoints(12, 30.0, 64).unwrap()[view];
        for k in 0..3 {
            let img = render_part_highlight(&grid, &cam, k).unwrap();
            let mask = img.mask_of(HIGHLIGHT);
            let boxes = extract_part_boxes(&grid, &cam, k, min_px).unwrap();
            let got: Vec<BBox> = boxes.iter().map(|b| b.bbox).collect();
            prop_assert_eq!(&got, &oracle_boxes(&mask, 64, min_px));
            for b in &boxes {
                prop_assert!(is_tight(&b.bbox, &mask, 64));
                prop_assert!(b.is_one_hot());
                prop_assert_eq!(b.class(), k);
                prop_assert!(b.validate(64, 64).is_ok());
            }
        }
    }

    #[test]
    fn transfer_keeps_coordinates(
        dets in prop::collection::vec((0.0f64..50.0, 0.0f64..50.0, 1.0f64..14.0, probs_strategy(4)), 0..30),
        thr in 0.0f64..1.0,
    ) {
        let dets: Vec<PartBox> = dets
            .into_iter()
            .map(|(x, y, s, probs)| PartBox { bbox: BBox::new(x, y, x + s, y + s), probs, stage: BoxStage::Detection })
            .collect();
        let kept = map_detections(&dets, thr);
        let expected: Vec<&PartBox> = dets.iter().filter(|d| d.max_prob() > thr).collect();
        prop_assert_eq!(kept.len(), expected.len());
        for (k, d) in kept.iter().zip(expected) {
            prop_assert_eq!(k.bbox, d.bbox);
            prop_assert_eq!(k.class(), d.class());
            prop_assert!(k.is_one_hot());
            prop_assert_eq!(k.stage, BoxStage::TransferredGt);
        }
    }

    #[test]
    fn components_partition_the_mask(bits in prop::collection::vec(any::<bool>(), 16 * 12)) {
        let comps = connected_components(&bits, 16);
        let total: usize = comps.iter().map(|c| c.pixels).sum();
        prop_assert_eq!(total, bits.iter().filter(|&&b| b).count());
        let oracle = oracle_boxes(&bits, 16, 1);
        prop_assert_eq!(comps.iter().map(|c| c.bbox).collect::<Vec<_>>(), oracle);
    }
}

#[test]
fn geometry_gt_has_no_duplicate_class_boxes() {
    let cams = default_viewpoints(12).unwrap();
    for seed in 0..5 {
        let grid = random_grid(&mut rng(seed), 16, 4);
        for grouping in [BoxGrouping::Component, BoxGrouping::MergedPerClass] {
            let (anns, cov) = build_geometry_gt("s", &grid, &cams, 9, grouping);
            assert_eq!(anns.len(), 12);
            assert_eq!(cov.views, 12);
            for a in &anns {
                assert!(a.is_homogeneous());
                for (i, x) in a.boxes.iter().enumerate() {
                    for y in &a.boxes[i + 1..] {
                        assert!(!(x.class() == y.class() && x.bbox == y.bbox));
                    }
                }
            }
        }
    }
}

#[test]
fn merged_grouping_gives_one_box_per_class() {
    let grid = random_grid(&mut rng(4), 16, 3);
    let cams = default_viewpoints(4).unwrap();
    let (merged, _) = build_geometry_gt("s", &grid, &cams, 1, BoxGrouping::MergedPerClass);
    for a in merged {
        let mut classes: Vec<usize> = a.boxes.iter().map(|b| b.class()).collect();
        let n = classes.len();
        classes.dedup();
        assert_eq!(classes.len(), n);
    }
}

#[test]
fn jsonl_roundtrip_keeps_empty_views() {
    let anns = vec![
        ViewAnnotation { shape_id: "a".into(), view_index: 0, boxes: vec![] },
        ViewAnnotation {
            shape_id: "a".into(),
            view_index: 1,
            boxes: vec![PartBox::one_hot(BBox::new(1.0, 2.0, 5.0, 9.0), 2, 3, BoxStage::GeometryGt)],
        },
    ];
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("a.jsonl");
    write_annotations(&p, &anns, BoxStage::GeometryGt).unwrap();
    assert_eq!(read_annotations(&p).unwrap(), anns);
    let text = std::fs::read_to_string(&p).unwrap();
    assert!(text.lines().next().unwrap().starts_with(r#"{"shape_id":"a","view_index":0,"stage":"geometry_gt""#));
}

#[test]
fn validate_rejects_soft_ground_truth() {
    let b = PartBox { bbox: BBox::new(0.0, 0.0, 4.0, 4.0), probs: vec![0.5, 0.5], stage: BoxStage::GeometryGt };
    assert!(b.validate(16, 16).is_err());
    let b = PartBox { stage: BoxStage::Detection, ..b };
    assert!(b.validate(16, 16).is_ok());
    assert!(b.validate(3, 3).is_err());
}
