use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use coset_chains::chains::{collapse_to_2x2, rt_row, rt_sample_step, table_kernel};
use coset_chains::eigenfunctions::linear_f;
use coset_chains::mixing::{chi2_from_exact, evolve_exact, point_mass, tv_distance_exact};
use coset_chains::rational::{factorial, from_biguint, rat};
use coset_chains::spectral::spectrum;
use coset_chains::stats::chi2_decomposition;
use coset_chains::tables::{
    chi_square_statistic, coset_size, count_tables, enumerate_tables, fisher_yates_pmf, parse_table, write_table,
    TableFormat,
};
use coset_chains::{ContingencyTable, KernelKind, Rational};

/// Tables up to 3×4 with entries below 4 and no empty row or column.
fn small_table() -> impl Strategy<Value = ContingencyTable> {
    (1usize..=3, 1usize..=4)
        .prop_flat_map(|(r, c)| prop::collection::vec(prop::collection::vec(0u32..4, c), r))
        .prop_filter_map("empty row or column", |rows| ContingencyTable::from_rows(rows).ok())
}

fn transition(t: &ContingencyTable, y: &ContingencyTable, kind: KernelKind) -> Rational {
    kind.row(t).into_iter().filter(|(s, _)| s == y).map(|(_, p)| p).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pmf_is_coset_size_over_n_factorial(t in small_table()) {
        prop_assert_eq!(fisher_yates_pmf(&t), from_biguint(coset_size(&t)) / from_biguint(factorial(t.n())));
    }

    #[test]
    fn pmf_sums_to_one(t in small_table().prop_filter("n <= 10", |t| t.n() <= 10)) {
        let tables = enumerate_tables(t.row_sums(), t.col_sums()).unwrap();
        prop_assert!(tables.contains(&t));
        let total: Rational = tables.iter().map(fisher_yates_pmf).sum();
        prop_assert!(total.is_one());
    }

    #[test]
    fn every_kernel_row_is_stochastic_and_keeps_margins(t in small_table()) {
        for kind in KernelKind::ALL {
            let row = kind.row(&t);
            let total: Rational = row.iter().map(|(_, p)| p).sum();
            prop_assert!(total.is_one(), "{} row sums to {}", kind.name(), total);
            for (y, p) in &row {
                prop_assert!(p > &Rational::zero());
                prop_assert!(y.same_margins(&t));
            }
        }
    }

    #[test]
    fn rt_is_reversible_for_fisher_yates(t in small_table()) {
        let pi_t = fisher_yates_pmf(&t);
        for (y, p) in rt_row(&t) {
            let back = transition(&y, &t, KernelKind::RandomTranspositions);
            prop_assert_eq!(&pi_t * p, fisher_yates_pmf(&y) * back);
        }
    }

    #[test]
    fn sampled_steps_stay_on_the_fiber(t in small_table(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = t.clone();
        for _ in 0..20 {
            x = rt_sample_step(&x, &mut rng);
            prop_assert!(x.same_margins(&t));
        }
    }

    #[test]
    fn linear_eigenfunction_at_any_state(t in small_table().prop_filter("n >= 2", |t| t.n() >= 2), cell in (0usize..3, 0usize..4)) {
        let (i, j) = (cell.0 % t.rows(), cell.1 % t.cols());
        let f = linear_f(t.row_sums(), t.col_sums(), i, j).unwrap();
        let mut pf = Rational::zero();
        for (y, p) in rt_row(&t) {
            pf += p * f.evaluate(&y).unwrap();
        }
        let n = i64::from(t.n());
        prop_assert_eq!(pf, (Rational::one() - rat(2, n)) * f.evaluate(&t).unwrap());
    }

    #[test]
    fn chi2_decomposition_is_exact(t in small_table().prop_filter("n >= 3", |t| t.n() >= 3)) {
        prop_assert_eq!(chi2_decomposition(&t).unwrap().total(), chi_square_statistic(&t));
    }

    #[test]
    fn collapse_keeps_corner_and_margins(t in small_table().prop_filter("2x2 or larger", |t| t.rows() >= 2 && t.cols() >= 2)) {
        let c = collapse_to_2x2(&t).unwrap();
        prop_assert_eq!(c.n(), t.n());
        prop_assert_eq!(c.get(0, 0), t.get(0, 0));
        prop_assert_eq!(c.row_sums()[0], t.row_sums()[0]);
        prop_assert_eq!(c.col_sums()[0], t.col_sums()[0]);
    }

    #[test]
    fn multiplicities_count_the_tables(t in small_table().prop_filter("n <= 9", |t| t.n() <= 9)) {
        let s = spectrum(t.row_sums(), t.col_sums()).unwrap();
        prop_assert_eq!(u128::from(s.total_multiplicity()), count_tables(t.row_sums(), t.col_sums()).unwrap());
    }

    #[test]
    fn table_files_round_trip(t in small_table()) {
        for format in [TableFormat::Csv, TableFormat::Json] {
            let text = write_table(&t, format).unwrap();
            prop_assert_eq!(parse_table(&text, format).unwrap(), t.clone());
        }
    }

    #[test]
    fn tv_is_controlled_by_chi2(t in small_table().prop_filter("n <= 7", |t| t.n() <= 7), steps in 0usize..6) {
        let k = table_kernel(KernelKind::RandomTranspositions, t.row_sums(), t.col_sums()).unwrap();
        let x = k.index_of(&t).unwrap();
        let p = evolve_exact(&k, &point_mass(k.len(), x).unwrap(), steps).unwrap();
        let tv = tv_distance_exact(&p, k.stationary());
        let chi2 = chi2_from_exact(&p, k.stationary());
        // Cauchy-Schwarz: (2 TV)² ≤ χ².
        prop_assert!(rat(4, 1) * &tv * &tv <= chi2);
        prop_assert!(tv <= Rational::one());
    }
}
