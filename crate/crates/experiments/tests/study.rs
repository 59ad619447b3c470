use chronobasis_experiments::config::StoveConfig;
use chronobasis_experiments::manufactured::{observed_orders, temporal_differences};
use chronobasis_experiments::problems::stove_problem;
use chronobasis_experiments::study::{Prepared, SelectionPlan, WindowParams, QUANTILE_LEVELS, STOVE_DATA};

fn small() -> StoveConfig {
    StoveConfig {
        cells: 16,
        ..StoveConfig::default()
    }
}

#[test]
fn realization_counts_and_quantile_order() {
    let p = stove_problem(&small()).unwrap();
    let prep = Prepared::new(&p, &STOVE_DATA).unwrap();
    let w = WindowParams::default();
    let seeds: Vec<u64> = (100..130).collect();

    let deim = prep.run(SelectionPlan::Deim, &w, &seeds).unwrap();
    assert_eq!(deim.realizations.len(), 1);

    let lev = prep.run(SelectionPlan::Leverage { n_rand: 3 }, &w, &seeds).unwrap();
    assert_eq!(lev.realizations.len(), seeds.len());
    assert_eq!(lev.realizations.iter().map(|r| r.seed).collect::<Vec<_>>(), seeds);
    let q = lev.quantiles();
    assert_eq!(q.len(), QUANTILE_LEVELS.len());
    assert!(q.windows(2).all(|w| w[0].1 <= w[1].1));
    assert_eq!(q[0].1, lev.sorted_errors()[0]);
    assert_eq!(q[8].1, *lev.sorted_errors().last().unwrap());
    assert_eq!(lev.mean_curve().len(), 201);
}

#[test]
fn sampling_realizations_depend_only_on_their_seed() {
    let p = stove_problem(&small()).unwrap();
    let prep = Prepared::new(&p, &STOVE_DATA).unwrap();
    let w = WindowParams::default();
    let plan = SelectionPlan::Leverage { n_rand: 5 };
    let a = prep.run(plan, &w, &[1, 2, 3]).unwrap();
    let b = prep.run(plan, &w, &[3, 9, 1]).unwrap();
    assert_eq!(a.realizations[0], b.realizations[2]);
    assert_eq!(a.realizations[2], b.realizations[0]);
}

#[test]
fn manufactured_solution_is_first_order_in_time() {
    let d = temporal_differences(8, 1.0, 10, 2).unwrap();
    for o in observed_orders(&d) {
        assert!((0.9..=1.1).contains(&o), "{o}");
    }
}
