use cordim::baselines::kmeans;
use cordim::dataset::{copy_columns, load_dataset, permute_columns, write_fimi, BinaryDataset, Format};
use cordim::dimension::{cd_a, cd_r};
use cordim::distdist::exact_cdf;
use proptest::prelude::*;

fn dataset() -> impl Strategy<Value = BinaryDataset> {
    (1usize..12, 1usize..25).prop_flat_map(|(k, n)| {
        prop::collection::vec(prop::collection::vec(any::<bool>(), k), n)
            .prop_map(|rows| BinaryDataset::from_dense(&rows).unwrap())
    })
}

proptest! {
    #[test]
    fn fimi_roundtrip(d in dataset()) {
        let mut buf = Vec::new();
        write_fimi(&d, &mut buf).unwrap();
        let back = load_dataset(buf.as_slice(), Format::Fimi).unwrap().with_min_cols(d.n_cols());
        prop_assert_eq!(back, d);
    }

    #[test]
    fn row_order_does_not_matter(d in dataset(), rot in 0usize..25) {
        let n = d.n_rows();
        let idx: Vec<usize> = (0..n).map(|i| (i + rot) % n).collect();
        let shuffled = d.select_rows(&idx);
        let (a, b) = (exact_cdf(&d).unwrap(), exact_cdf(&shuffled).unwrap());
        prop_assert_eq!(a.values(), b.values());
    }

    #[test]
    fn copies_scale_integer_radii(d in dataset(), n in 2usize..5) {
        let base = exact_cdf(&d).unwrap();
        let k = d.n_cols();
        if let Some(r1) = (1..k).find(|&r| base.values()[r] > 0.0) {
            if let Ok(a) = cd_r(&base, r1 as f64, k as f64, k - r1) {
                let c = exact_cdf(&copy_columns(&d, n).unwrap()).unwrap();
                let b = cd_r(&c, (n * r1) as f64, (n * k) as f64, k - r1).unwrap();
                prop_assert!((a.slope - b.slope).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn inverse_is_leftmost_preimage(d in dataset(), a in 0.01f64..=1.0) {
        let cdf = exact_cdf(&d).unwrap();
        let x = cdf.inverse(a).unwrap();
        prop_assert!(cdf.eval(x).unwrap() >= a - 1e-12);
        if x > 1e-9 {
            prop_assert!(cdf.eval((x - 1e-6).max(0.0)).unwrap() < a);
        }
    }

    #[test]
    fn quantile_dimension_is_finite_or_structured_error(d in dataset()) {
        let cdf = exact_cdf(&d).unwrap();
        match cd_a(&cdf, 0.25, 0.75, 50) {
            Ok(e) => prop_assert!(e.slope.is_finite() && e.slope >= 0.0),
            Err(e) => prop_assert!(!e.is_usage()),
        }
    }

    #[test]
    fn permutation_keeps_column_counts(d in dataset(), seed in any::<u64>()) {
        let p = permute_columns(&d, seed).unwrap();
        prop_assert_eq!(p.column_counts(), d.column_counts());
        prop_assert_eq!(p.n_rows(), d.n_rows());
    }

    #[test]
    fn kmeans_objective_matches_assignments(d in dataset(), k in 1usize..4, seed in any::<u64>()) {
        let k = k.min(d.n_rows());
        let c = kmeans(&d, k, seed).unwrap();
        let mut total = 0.0;
        for (i, &a) in c.assignments.iter().enumerate() {
            prop_assert!(a < k);
            for (j, &m) in c.centroids[a].iter().enumerate() {
                let x = if d.get(i, j) { 1.0 } else { 0.0 };
                total += (x - m) * (x - m);
            }
        }
        prop_assert!((total - c.objective).abs() <= 1e-9 * total.max(1.0));
    }
}
