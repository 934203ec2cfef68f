use std::path::Path;

use image::GenericImageView;
use pdisc::formats::{parse_points_csv, points_to_csv};
use pdisc::mask::{mask_to_pbm, rasterize_mask, read_mask_pbm, write_mask_pbm, MaskRaster};
use pdisc::sampler::{generate, GenerateOptions, PatternMeta};
use pdisc::{Algorithm, ConflictRule, Domain, ParametricField, PointSet, SamplePattern};
use proptest::prelude::*;

fn meta(n: usize) -> PatternMeta {
    PatternMeta {
        seed: 0,
        gamma: 1.0,
        field: None,
        k: 10,
        algorithm: Algorithm::Fast,
        rule: ConflictRule::Min,
        nu: vec![1.0; n],
        domain: Domain::unit(n),
        generation_domain: Domain::unit(n),
        wall_time: Default::default(),
        grid_build_time: Default::default(),
    }
}

#[test]
fn pbm_matches_reference_reader() {
    let f = ParametricField::new(25.0).unwrap();
    let p = generate(&f, &Domain::unit(2), &GenerateOptions::default(), 6).unwrap();
    let mask = rasterize_mask(&p, &[40, 24], None).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.pbm");
    write_mask_pbm(&mask, &path).unwrap();

    let img = image::open(&path).unwrap();
    assert_eq!(img.dimensions(), (40, 24));
    let gray = img.to_luma8();
    for row in 0..24u32 {
        for col in 0..40u32 {
            // PBM `1` is black; the top row holds the highest axis-1 index
            let sampled = gray.get_pixel(col, row).0[0] == 0;
            assert_eq!(sampled, mask.get(&[col as usize, 23 - row as usize]), "({col},{row})");
        }
    }
    assert_eq!(read_mask_pbm(&path).unwrap().occupancy(), mask.occupancy());
}

#[test]
fn pbm_center_and_full_masks() {
    let mut occ = vec![false; 16];
    occ[2 + 4 * 2] = true;
    let one = MaskRaster::from_occupancy(&[4, 4], occ).unwrap();
    let text = mask_to_pbm(&one).unwrap();
    assert!(text.starts_with("P1\n"));
    let body: String = text.lines().skip(2).collect();
    assert_eq!(body.matches('1').count(), 1);

    let full = MaskRaster::from_occupancy(&[4, 4], vec![true; 16]).unwrap();
    let body: String = mask_to_pbm(&full).unwrap().lines().skip(2).collect();
    assert_eq!(body.matches('1').count(), 16);
    assert_eq!(body.matches('0').count(), 0);
}

fn coords(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop::collection::vec(-0.5f64..0.5, n), 0..40).prop_map(|v| v.concat())
}

proptest! {
    #[test]
    fn csv_round_trip_any_points(c in coords(2), seed in any::<u64>(), gamma in 1e-3f64..1e4) {
        let mut m = meta(2);
        m.seed = seed;
        m.gamma = gamma;
        let p = SamplePattern::new(PointSet::from_flat(2, c).unwrap(), m).unwrap();
        let back = parse_points_csv(&points_to_csv(&p), Path::new("p.csv")).unwrap();
        let bits = |q: &SamplePattern| q.points().as_flat().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&back), bits(&p));
        prop_assert_eq!(back.meta().seed, seed);
        prop_assert_eq!(back.meta().gamma.to_bits(), gamma.to_bits());
    }

    #[test]
    fn csv_round_trip_3d(c in coords(3)) {
        let p = SamplePattern::new(PointSet::from_flat(3, c).unwrap(), meta(3)).unwrap();
        let back = parse_points_csv(&points_to_csv(&p), Path::new("p.csv")).unwrap();
        prop_assert_eq!(back.points(), p.points());
    }

    #[test]
    fn pbm_round_trip_any_mask(w in 1usize..50, h in 1usize..50, seed in any::<u64>()) {
        let mut s = seed;
        let occ: Vec<bool> = (0..w * h)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                s >> 63 == 1
            })
            .collect();
        let mask = MaskRaster::from_occupancy(&[w, h], occ).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.pbm");
        write_mask_pbm(&mask, &path).unwrap();
        let back = read_mask_pbm(&path).unwrap();
        prop_assert_eq!(back.occupancy(), mask.occupancy());
    }
}
