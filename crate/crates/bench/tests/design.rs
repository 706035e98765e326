use tenreg::benchmarks::{synthetic_100, synthetic_100_space};
use tenreg::paramspace::latin_hypercube;
use tenreg::SampleSet;
use tenreg_bench::{cube, labeled_design, random_model, unstratified_columns};

#[test]
fn synthetic_design_is_stratified_in_every_column() {
    for seed in 0..5 {
        let unit = latin_hypercube(200, 100, seed).unwrap();
        assert!(unstratified_columns(&unit).is_empty(), "seed {seed}");
        let data = SampleSet::from_unit(&synthetic_100_space(), unit).unwrap();
        for i in 0..data.len() {
            assert!(synthetic_100(&data.phys_row(i)).is_ok());
        }
    }
}

#[test]
fn plain_monte_carlo_is_not_stratified() {
    let unit = tenreg::paramspace::mc_uniform(200, 100, 0).unwrap();
    assert!(unstratified_columns(&unit).len() > 90);
}

#[test]
fn labeled_design_matches_the_model() {
    let space = cube(5);
    let model = random_model(&space, 2, 2, 4);
    let data = labeled_design(&space, 30, 1, |x| model.evaluate(x));
    assert!(data.is_labeled());
    for i in 0..data.len() {
        assert_eq!(data.outputs()[i], Some(model.evaluate(&data.phys_row(i))));
    }
}
