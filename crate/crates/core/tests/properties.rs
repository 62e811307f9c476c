use proptest::prelude::*;

use replearn::geometry::{apply_rep, Label, LinearRep, Matrix};
use replearn::learners::{local_search, MeanEmpiricalError, NonrealizableCount, SearchConfig};
use replearn::realizability::Family;
use replearn::reductions::{carve_meta_sample, Carving};
use replearn::rng::{stream, tags};
use replearn::task_model::{general_position, random_rep, sample_meta, Stream, SyntheticMeta};
use replearn::theory_lab::{
    check_mon_bound, exact_err, exact_pnr, finite_nrc, finite_vc, pnr_lower_bound, DiscreteDist,
    FiniteClass, PnrOptions,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn carving_never_reuses_a_point(
        t in 1usize..8,
        n in 1usize..4,
        n_spec in 1usize..4,
        draws in 1usize..5,
        extra in 0usize..3,
        seed in any::<u64>(),
    ) {
        let meta = SyntheticMeta::standard(2, 1, Family::Halfspace, 0.0, seed).unwrap();
        let size = n * draws + n_spec + extra;
        let tasks: Vec<_> = (0..t as u64).map(|j| meta.task(Stream::Train, j).draw(0, size)).collect();
        match carve_meta_sample(&tasks, n, n_spec, draws, seed).unwrap() {
            Carving::Bot => {}
            Carving::Ready { sample, spec_sets, ledger } => {
                prop_assert!(ledger.is_disjoint());
                prop_assert_eq!(sample.t(), t);
                for (i, (j, r)) in ledger.draws.iter().enumerate() {
                    prop_assert!(r.end <= n * draws);
                    prop_assert_eq!(&sample.tasks()[i], &tasks[*j].slice(r.start, r.len()));
                }
                for (j, s) in spec_sets.iter().enumerate() {
                    prop_assert_eq!(s, &tasks[j].slice(size - n_spec, n_spec));
                }
            }
        }
    }

    #[test]
    fn objectives_ignore_invertible_reparametrization(
        seed in any::<u64>(),
        m in prop::array::uniform4(-3.0f64..3.0),
    ) {
        let det = m[0] * m[3] - m[1] * m[2];
        prop_assume!(det.abs() > 0.1);
        let meta = SyntheticMeta::standard(4, 2, Family::Halfspace, 0.15, seed).unwrap();
        let s = sample_meta(&meta, 8, 5, Stream::Train).unwrap();
        let b = random_rep(2, 4, &mut stream(seed, tags::CUSTOM, 0));
        let mb = b.left_multiply(&Matrix::from_rows(&[vec![m[0], m[1]], vec![m[2], m[3]]]).unwrap()).unwrap();
        prop_assume!(s.tasks().iter().all(|t| {
            general_position(&apply_rep(&b, t).unwrap()) && general_position(&apply_rep(&mb, t).unwrap())
        }));
        let count = NonrealizableCount::new(s.tasks(), Family::Halfspace).unwrap();
        let mean = MeanEmpiricalError::new(s.tasks(), Family::Halfspace).unwrap();
        prop_assert_eq!(count.eval(&b).unwrap(), count.eval(&mb).unwrap());
        prop_assert!((mean.eval(&b).unwrap() - mean.eval(&mb).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn accepted_objective_never_increases(seed in any::<u64>()) {
        let meta = SyntheticMeta::standard(4, 1, Family::Halfspace, 0.2, seed).unwrap();
        let s = sample_meta(&meta, 20, 4, Stream::Train).unwrap();
        let mean = MeanEmpiricalError::new(s.tasks(), Family::Halfspace).unwrap();
        let cfg = SearchConfig { restarts: 3, iters: 40, seed, ..SearchConfig::default() };
        let out = local_search(1, 4, &cfg, |r: &LinearRep| mean.eval(r).unwrap()).unwrap();
        prop_assert!(out.trace.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(out.trace[0] >= out.objective);
    }

    #[test]
    fn nonrealizability_dominates_lower_bound(atoms in 2usize..7, grid in 2u32..5, seed in any::<u64>()) {
        let dist = DiscreteDist::random(atoms, 1, grid, &mut stream(seed, tags::CUSTOM, 1)).unwrap();
        for family in [Family::Monotone, Family::Halfspace] {
            let err = exact_err(&dist, family).unwrap();
            if err <= 0.0 {
                continue;
            }
            let m = family.nrc(1);
            let p = exact_pnr(&dist, family, m, &PnrOptions::default()).unwrap();
            prop_assert!(p.exact);
            prop_assert!(p.value + 1e-12 >= pnr_lower_bound(err, m, family.vc(1)).unwrap());
        }
    }

    #[test]
    fn monotone_bound_holds(atoms in 1usize..9, grid in 1u32..6, seed in any::<u64>()) {
        let dist = DiscreteDist::random(atoms, 1, grid, &mut stream(seed, tags::CUSTOM, 2)).unwrap();
        let r = check_mon_bound(&dist, &PnrOptions::default()).unwrap();
        prop_assert!(r.pass, "{:?}", r);
        prop_assert!((0.0..=1.0).contains(&r.pnr));
    }

    #[test]
    fn rho_is_the_positive_mass(atoms in 1usize..9, seed in any::<u64>()) {
        let dist = DiscreteDist::random(atoms, 2, 3, &mut stream(seed, tags::CUSTOM, 3)).unwrap();
        let pos: f64 = dist.atoms().iter().filter(|a| a.1 == Label::Pos).map(|a| a.2).sum();
        prop_assert!((dist.rho() - pos).abs() < 1e-15);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&dist.rho()));
    }
}

#[test]
fn adding_a_function_can_lower_nrc() {
    for l in 3..=5 {
        let plain = finite_nrc(&FiniteClass::point_functions(l)).unwrap();
        let bigger = finite_nrc(&FiniteClass::point_functions_with_negative(l)).unwrap();
        assert_eq!((plain, bigger), (l, 2));
    }
}

#[test]
fn full_classes_shatter_everything() {
    for n in 1..=6 {
        let c = FiniteClass::all_functions(n);
        assert_eq!(finite_vc(&c).unwrap(), n);
        assert_eq!(finite_nrc(&c).unwrap(), 2);
    }
}
