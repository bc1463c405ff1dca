use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use proptest::prelude::*;

use poplift::analysis::{cohort_report, form_cohorts, genre_frequency, significance_test};
use poplift::dataset::{
    parse_ratings, popularity, split_ratings, DataFormat, ItemCatalog, ItemId, PopularityIndex,
    Rating, RatingScale, RatingsTable, UserId,
};
use poplift::metrics::{
    category_distribution, group_gap, hellinger, mean_popularity, popularity_lift, AuditRecord,
    CategoryDistribution,
};
use poplift::recommenders::{fit, recommend_top_n, Algorithm, ModelConfig};

const GENRES: [&str; 5] = ["Action", "Comedy", "Drama", "Romance", "Sci-Fi"];

fn ratings_strategy(
    max_users: u32,
    max_items: u32,
    max_len: usize,
) -> impl Strategy<Value = Vec<Rating>> {
    prop::collection::btree_map((1..=max_users, 1..=max_items), 1u8..=5, 1..max_len).prop_map(|m| {
        m.into_iter()
            .map(|((u, i), r)| Rating::new(u, i, f64::from(r)))
            .collect()
    })
}

fn table_strategy() -> impl Strategy<Value = RatingsTable> {
    ratings_strategy(8, 12, 60)
        .prop_shuffle()
        .prop_map(|r| RatingsTable::from_ratings(r).unwrap())
}

fn catalog_strategy(items: u32) -> impl Strategy<Value = ItemCatalog> {
    prop::collection::vec(
        prop::collection::btree_set(0..GENRES.len(), 0..3),
        items as usize,
    )
    .prop_map(|sets| {
        ItemCatalog::from_genres(sets.iter().enumerate().map(|(ix, set)| {
            (
                ix as u32 + 1,
                set.iter().map(|&g| GENRES[g]).collect::<Vec<_>>(),
            )
        }))
        .unwrap()
    })
}

fn distribution_strategy(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, n).prop_filter_map("zero mass", |v| {
        let total: f64 = v.iter().sum();
        (total > 1e-6).then(|| v.iter().map(|x| x / total).collect())
    })
}

fn dist(labels: &[&str], mass: Vec<f64>) -> CategoryDistribution {
    // renormalize to absorb rounding before validation
    let total: f64 = mass.iter().sum();
    CategoryDistribution::from_pairs(labels, &mass.iter().map(|m| m / total).collect::<Vec<_>>())
        .unwrap()
}

fn sorted_triples(ratings: &[Rating]) -> Vec<(u32, u32, u64)> {
    let mut v: Vec<_> = ratings
        .iter()
        .map(|r| (r.user.0, r.item.0, r.value.to_bits()))
        .collect();
    v.sort_unstable();
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_halves_reassemble_input(table in table_strategy(), seed in any::<u64>(), fraction in 0.05f64..0.95) {
        let split = split_ratings(&table, fraction, seed).unwrap();
        let mut joined = split.train.ratings().to_vec();
        joined.extend_from_slice(split.test.ratings());
        prop_assert_eq!(sorted_triples(&joined), sorted_triples(table.ratings()));
        prop_assert_eq!(split.train.len(), (fraction * table.len() as f64).round() as usize);
    }

    #[test]
    fn rater_counts_sum_to_ratings(table in table_strategy()) {
        let theta = popularity(&table);
        let raters: f64 = table.items().iter().map(|&i| theta.theta(i) * table.n_users() as f64).sum();
        prop_assert!((raters - table.len() as f64).abs() < 1e-9);
    }

    #[test]
    fn theta_ignores_record_order(ratings in ratings_strategy(8, 12, 60), seed in any::<u64>()) {
        let mut shuffled = ratings.clone();
        poplift::rng::SeededRng::new(seed).shuffle(&mut shuffled);
        let a = popularity(&RatingsTable::from_ratings(ratings).unwrap());
        let b = popularity(&RatingsTable::from_ratings(shuffled).unwrap());
        prop_assert_eq!(a, b);
    }

    #[test]
    fn canonical_csv_round_trip(table in table_strategy()) {
        let bytes = table.to_csv_bytes();
        let back = parse_ratings(&bytes[..], DataFormat::Csv, &RatingScale::default()).unwrap();
        prop_assert_eq!(&back, &table);
        prop_assert_eq!(back.content_hash(), table.content_hash());
    }

    #[test]
    fn category_distribution_sums_to_one(
        catalog in catalog_strategy(10),
        items in prop::collection::vec(1u32..=10, 1..25),
    ) {
        let ids: Vec<ItemId> = items.into_iter().map(ItemId).collect();
        let d = category_distribution(&ids, &catalog).unwrap();
        prop_assert!((d.mass().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(d.mass().iter().all(|&m| m >= 0.0));
    }

    #[test]
    fn hellinger_is_a_bounded_metric(
        p in distribution_strategy(5),
        q in distribution_strategy(5),
        r in distribution_strategy(5),
    ) {
        let (p, q, r) = (dist(&GENRES, p), dist(&GENRES, q), dist(&GENRES, r));
        let pq = hellinger(&p, &q).unwrap();
        prop_assert_eq!(pq, hellinger(&q, &p).unwrap());
        prop_assert!((0.0..=1.0).contains(&pq));
        prop_assert_eq!(hellinger(&p, &p).unwrap(), 0.0);
        let differs = p.mass().iter().zip(q.mass()).any(|(a, b)| (a - b).abs() > 1e-6);
        if differs {
            prop_assert!(pq > 0.0);
        }
        let (qr, pr) = (hellinger(&q, &r).unwrap(), hellinger(&p, &r).unwrap());
        prop_assert!(pr <= pq + qr + 1e-12);
    }

    #[test]
    fn identical_users_gap_is_single_value(
        items in prop::collection::vec(1u32..=12, 1..8),
        copies in 1usize..6,
        table in table_strategy(),
    ) {
        let theta = popularity(&table);
        let list: Vec<ItemId> = items.into_iter().map(ItemId).collect();
        let users: Vec<UserId> = (0..copies as u32).map(UserId).collect();
        let lists: BTreeMap<_, _> = users.iter().map(|&u| (u, list.clone())).collect();
        let single = mean_popularity(&list, &theta).unwrap();
        prop_assert!((group_gap(&users, &lists, &theta).unwrap() - single).abs() < 1e-15);
    }

    #[test]
    fn lift_is_scale_free(
        table in table_strategy(),
        profile in prop::collection::vec(1u32..=12, 1..8),
        recs in prop::collection::vec(1u32..=12, 1..8),
        factor in 0.01f64..100.0,
    ) {
        let theta = popularity(&table);
        let scaled = theta.scaled(factor);
        let (p, q): (Vec<ItemId>, Vec<ItemId>) =
            (profile.into_iter().map(ItemId).collect(), recs.into_iter().map(ItemId).collect());
        let gp = mean_popularity(&p, &theta).unwrap();
        prop_assume!(gp > 0.0);
        let base = popularity_lift(mean_popularity(&q, &theta).unwrap(), gp).unwrap();
        let lifted = popularity_lift(mean_popularity(&q, &scaled).unwrap(), mean_popularity(&p, &scaled).unwrap()).unwrap();
        prop_assert!((base - lifted).abs() < 1e-9 * (1.0 + base.abs()));
    }

    #[test]
    fn fit_is_bit_reproducible(table in table_strategy(), algo in 0usize..5) {
        let mut config = ModelConfig::defaults(Algorithm::ALL[algo]);
        config.factors = 3;
        config.epochs = 4;
        config.neighborhood_size = 3;
        let train = Arc::new(table);
        let a = fit(Arc::clone(&train), &config).unwrap();
        let b = fit(Arc::clone(&train), &config).unwrap();
        for &u in train.users() {
            for i in 1..=13 {
                let (x, y) = (a.score(u, ItemId(i)).unwrap(), b.score(u, ItemId(i)).unwrap());
                prop_assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn lists_exclude_profile_and_unrated_items(table in table_strategy(), algo in 0usize..5, n in 1usize..6, dropped in 1u32..=12) {
        let kept: Vec<Rating> = table.ratings().iter().filter(|r| r.item.0 != dropped).copied().collect();
        prop_assume!(!kept.is_empty());
        let train = Arc::new(RatingsTable::from_ratings(kept).unwrap());
        let mut config = ModelConfig::defaults(Algorithm::ALL[algo]);
        config.factors = 2;
        config.epochs = 2;
        let model = fit(Arc::clone(&train), &config).unwrap();
        let recs = recommend_top_n(&model, n).unwrap();
        for &u in train.users() {
            let profile: BTreeSet<ItemId> = train.profile(u).into_iter().collect();
            let list = recs.items(u);
            prop_assert!(list.len() <= n);
            prop_assert_eq!(list.len(), n.min(train.n_items() - profile.len()));
            prop_assert!(list.iter().all(|i| !profile.contains(i)));
            prop_assert!(!list.contains(&ItemId(dropped)));
        }
    }

    #[test]
    fn most_popular_lists_maximize_mean_popularity(table in table_strategy(), n in 1usize..5, pick_seed in any::<u64>()) {
        let train = Arc::new(table);
        let model = fit(Arc::clone(&train), &ModelConfig::defaults(Algorithm::MostPopular)).unwrap();
        let recs = recommend_top_n(&model, n).unwrap();
        let theta = PopularityIndex::from_table(&train);
        let mut rng = poplift::rng::SeededRng::new(pick_seed);
        for &u in train.users() {
            let list = recs.items(u);
            if list.is_empty() {
                continue;
            }
            let profile = train.profile(u);
            let mut pool: Vec<ItemId> = train.items().iter().copied().filter(|i| !profile.contains(i)).collect();
            let best = mean_popularity(&list, &theta).unwrap();
            for _ in 0..10 {
                rng.shuffle(&mut pool);
                let other = &pool[..list.len()];
                prop_assert!(best >= mean_popularity(other, &theta).unwrap() - 1e-15);
            }
        }
    }

    #[test]
    fn cohorts_partition_users(gaps in prop::collection::btree_map(0u32..500, 0.0f64..1.0, 2..60), k in 2usize..12) {
        let input: Vec<(UserId, f64)> = gaps.iter().map(|(&u, &g)| (UserId(u), g)).collect();
        prop_assume!(k <= input.len());
        let cohorts = form_cohorts(&input, k).unwrap();
        prop_assert_eq!(cohorts.len(), k);
        let mut all: Vec<UserId> = cohorts.iter().flat_map(|c| c.members.clone()).collect();
        prop_assert_eq!(all.len(), input.len());
        all.sort_unstable();
        all.dedup();
        prop_assert_eq!(all.len(), input.len());
        let sizes: Vec<usize> = cohorts.iter().map(|c| c.members.len()).collect();
        prop_assert!(sizes.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(sizes[0] - sizes[k - 1] <= 1);
        prop_assert!(cohorts.windows(2).all(|w| w[0].mean_profile_gap <= w[1].mean_profile_gap));
        // every member of a cohort sits at or below every member of the next
        for w in cohorts.windows(2) {
            let hi = w[0].members.iter().map(|u| gaps[&u.0]).fold(f64::MIN, f64::max);
            let lo = w[1].members.iter().map(|u| gaps[&u.0]).fold(f64::MAX, f64::min);
            prop_assert!(hi <= lo);
        }
    }

    #[test]
    fn group_mc_within_member_range(
        rows in prop::collection::vec((0.01f64..1.0, 0.0f64..1.0, 0.0f64..1.0), 4..40),
        k in 2usize..5,
    ) {
        prop_assume!(k <= rows.len());
        let records: Vec<AuditRecord> = rows
            .iter()
            .enumerate()
            .map(|(ix, &(p, q, mc))| AuditRecord {
                user_id: UserId(ix as u32),
                profile_gap: p,
                rec_gap: q,
                mc,
                precision: None,
                n_profile: 1,
                n_recs: 1,
            })
            .collect();
        let gaps: Vec<_> = records.iter().map(|r| (r.user_id, r.profile_gap)).collect();
        let cohorts = form_cohorts(&gaps, k).unwrap();
        let report = cohort_report(&cohorts, &[("x".to_string(), records.clone())]).unwrap();
        for (row, cohort) in report.rows.iter().zip(&cohorts) {
            let mcs: Vec<f64> = cohort.members.iter().map(|u| records[u.0 as usize].mc).collect();
            let (lo, hi) = mcs.iter().fold((f64::MAX, f64::MIN), |(l, h), &m| (l.min(m), h.max(m)));
            prop_assert!(row.mc_mean >= lo - 1e-15 && row.mc_mean <= hi + 1e-15);
            prop_assert!((row.pl - (row.gap_q - row.gap_p) / row.gap_p).abs() < 1e-12);
        }
        prop_assert_eq!(report.rows.iter().map(|r| r.n).sum::<usize>(), rows.len());
    }

    #[test]
    fn significance_symmetric_and_shift_invariant(
        a in prop::collection::vec(-10.0f64..10.0, 2..30),
        b in prop::collection::vec(-10.0f64..10.0, 2..30),
        shift in -50.0f64..50.0,
    ) {
        let ab = significance_test(&a, &b).unwrap();
        let ba = significance_test(&b, &a).unwrap();
        prop_assert_eq!(ab, ba);
        let a2: Vec<f64> = a.iter().map(|x| x + shift).collect();
        let b2: Vec<f64> = b.iter().map(|x| x + shift).collect();
        let moved = significance_test(&a2, &b2).unwrap();
        prop_assert!((ab.welch_p - moved.welch_p).abs() < 1e-6, "{:?} vs {:?}", ab, moved);
        prop_assert!((0.0..=1.0).contains(&ab.welch_p));
        prop_assert!((0.0..=1.0).contains(&ab.mann_whitney_p));
    }

    #[test]
    fn genre_frequency_is_linear(
        catalog in catalog_strategy(10),
        first in prop::collection::vec(1u32..=10, 1..20),
        second in prop::collection::vec(1u32..=10, 1..20),
    ) {
        let ids = |v: &[u32]| v.iter().map(|&i| ItemId(i)).collect::<Vec<_>>();
        let a = genre_frequency("a", ids(&first), &catalog).unwrap();
        let b = genre_frequency("b", ids(&second), &catalog).unwrap();
        let both = genre_frequency("ab", ids(&first).into_iter().chain(ids(&second)), &catalog).unwrap();
        let (na, nb) = (first.len() as f64, second.len() as f64);
        for ix in 0..catalog.n_categories() {
            let mix = (na * a.proportions()[ix] + nb * b.proportions()[ix]) / (na + nb);
            prop_assert!((both.proportions()[ix] - mix).abs() < 1e-12);
            prop_assert_eq!(both.counts()[ix], a.counts()[ix] + b.counts()[ix]);
        }
    }
}
