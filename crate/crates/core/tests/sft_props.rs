use gibbs_core::sft::*;
use proptest::prelude::*;

fn primitive_spec() -> impl Strategy<Value = SubshiftSpec> {
    (2usize..=4)
        .prop_flat_map(|l| (Just(l), proptest::collection::vec(0u8..=1, l * l)))
        .prop_filter_map("not primitive", |(l, a)| build_subshift(l, &a).ok())
}

fn word_over(l: u8, max_len: usize) -> impl Strategy<Value = Word> {
    proptest::collection::vec(0..l, 0..=max_len).prop_map(Word::new)
}

proptest! {
    #[test]
    fn metric_is_an_ultrametric(
        a in word_over(3, 6),
        b in word_over(3, 6),
        c in word_over(3, 6),
    ) {
        let d = common_prefix_metric;
        prop_assert!(d(&a, &c) <= d(&a, &b).max(d(&b, &c)));
        prop_assert_eq!(d(&a, &b), d(&b, &a));
        prop_assert!(d(&a, &b) > 0.0 && d(&a, &b) <= 1.0);
    }

    #[test]
    fn word_counts_follow_alpha(spec in primitive_spec()) {
        let mut words = spec.enumerate_cylinders(0);
        for k in 0..=12 {
            let next: u128 = words.iter().map(|w| spec.alpha(w.last()) as u128).sum();
            prop_assert_eq!(spec.count_words(k + 1), next);
            if k < 8 {
                words = spec.enumerate_cylinders(k + 1);
                prop_assert_eq!(words.len() as u128, next);
            } else {
                break;
            }
        }
        for k in 9..=12 {
            let by_row: u128 = spec.count_words(k + 1);
            let direct: u128 = (0..spec.alphabet_size() as u8)
                .map(|a| {
                    let mut v = vec![0u128; spec.alphabet_size()];
                    v[a as usize] = 1;
                    for _ in 0..k {
                        let mut n = vec![0u128; v.len()];
                        for (i, &x) in v.iter().enumerate() {
                            for j in spec.followers(Some(i as u8)) {
                                n[j as usize] += x;
                            }
                        }
                        v = n;
                    }
                    v.iter().sum::<u128>()
                })
                .sum();
            prop_assert_eq!(by_row, direct);
        }
    }

    #[test]
    fn children_stay_admissible(spec in primitive_spec(), k in 0usize..5) {
        for w in spec.enumerate_cylinders(k) {
            let kids = spec.children(&w).unwrap();
            prop_assert_eq!(kids.len(), spec.alpha(w.last()));
            prop_assert!(kids.windows(2).all(|p| p[0] < p[1]));
            for b in kids {
                prop_assert!(spec.check(&w.child(b)).is_ok());
            }
        }
    }
}

#[test]
fn enumeration_is_sorted_and_unique() {
    let spec = build_subshift(3, &[1, 1, 0, 0, 1, 1, 1, 0, 1]).unwrap();
    for k in 1..6 {
        let w = spec.enumerate_cylinders(k);
        assert!(w.windows(2).all(|p| p[0] < p[1]));
        assert!(w.iter().all(|x| x.len() == k && spec.is_admissible(x.symbols())));
    }
}

#[test]
fn inadmissible_children_request() {
    let g = SubshiftSpec::golden_mean();
    assert!(g.children(&Word::new(vec![1, 1])).is_err());
    assert_eq!(g.children(&Word::new(vec![1])).unwrap(), vec![0]);
}
