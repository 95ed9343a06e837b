use proptest::prelude::*;
use rand_distr::{Distribution, StandardNormal};
use stagger::acquisitions::{
    acquisition_value, expected_improvement, propose_arm, propose_batch, ucb, AcqKind, AcqSpec,
};
use stagger::{uniform_point, ArgmaxBudget, Dataset, GpModel, KernelParams, Point, RngStream, SobolSequence};

fn model_from(xs: &[f64], ys: &[f64]) -> GpModel {
    let points = xs.iter().map(|&x| Point::new(vec![x]).unwrap()).collect();
    let data = Dataset::from_parts(1, points, ys.to_vec()).unwrap();
    let params = KernelParams {
        lengthscales: vec![0.2],
        output_scale: 1.0,
        noise_variance: 1e-6,
    };
    GpModel::with_params(&data, params).unwrap()
}

fn five_point_model(offset: f64) -> GpModel {
    let xs = [0.05, 0.3, 0.45, 0.7, 0.95];
    let ys: Vec<f64> = xs.iter().map(|x: &f64| (7.0 * x).sin() + offset).collect();
    model_from(&xs, &ys)
}

#[test]
fn expected_improvement_matches_monte_carlo() {
    let mut rng = RngStream::new(1, 1);
    let n = 1_000_000;
    let sum: f64 = (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z.max(0.0)
        })
        .sum();
    let mc = sum / n as f64;
    assert!((expected_improvement(0.0, 1.0, 0.0) - mc).abs() < 0.005);
}

#[test]
fn simple_regret_with_one_measurement_proposes_it() {
    let model = model_from(&[0.37], &[2.5]);
    let mut rng = RngStream::new(2, 2);
    let sobol = SobolSequence::new(1, &mut rng).unwrap();
    let arm = propose_arm(&AcqSpec::new(AcqKind::Sr), &model, 1, 1, &sobol, &mut rng).unwrap();
    assert!((arm.coords()[0] - 0.37).abs() < 0.05);
}

#[test]
fn ei_proposal_matches_grid_maximum() {
    let model = five_point_model(0.0);
    let spec = AcqSpec::new(AcqKind::Ei);
    let best = model.dataset().best().unwrap().1;
    let grid_max = (0..4096)
        .map(|i| acquisition_value(&spec, &model, best, &[i as f64 / 4095.0]))
        .fold(f64::NEG_INFINITY, f64::max);
    let mut rng = RngStream::new(3, 3);
    let sobol = SobolSequence::new(1, &mut rng).unwrap();
    let arm = propose_arm(&spec, &model, 1, 5, &sobol, &mut rng).unwrap();
    let got = acquisition_value(&spec, &model, best, arm.coords());
    assert!(got >= grid_max - 1e-4, "{got} < {grid_max}");
}

#[test]
fn argmax_location_ignores_constant_offsets() {
    for kind in [AcqKind::Ei, AcqKind::Ucb, AcqKind::Sr] {
        let spec = AcqSpec::new(kind);
        let sobol = SobolSequence::new(1, &mut RngStream::new(0, 0)).unwrap();
        let a = propose_arm(&spec, &five_point_model(0.0), 1, 5, &sobol, &mut RngStream::new(4, 4)).unwrap();
        let b = propose_arm(&spec, &five_point_model(100.0), 1, 5, &sobol, &mut RngStream::new(4, 4)).unwrap();
        assert!(a.linf_distance(&b) < 1e-3, "{kind:?}: {a:?} vs {b:?}");
    }
}

#[test]
fn ucb_without_exploration_is_simple_regret() {
    let model = five_point_model(0.0);
    let ucb0 = AcqSpec {
        kind: AcqKind::Ucb,
        beta: 0.0,
    };
    let sr = AcqSpec::new(AcqKind::Sr);
    let mut rng = RngStream::new(5, 5);
    for _ in 0..200 {
        let x = uniform_point(&mut rng, 1).unwrap();
        assert_eq!(
            acquisition_value(&ucb0, &model, 0.0, x.coords()),
            acquisition_value(&sr, &model, 0.0, x.coords())
        );
    }
}

#[test]
fn batches_have_requested_size_and_stay_in_bounds() {
    let model = five_point_model(0.0);
    let mut rng = RngStream::new(6, 6);
    let sobol = SobolSequence::new(1, &mut rng).unwrap();
    for kind in [AcqKind::Ei, AcqKind::Ucb, AcqKind::Sr, AcqKind::Random, AcqKind::Sobol] {
        let arms = propose_batch(&AcqSpec::new(kind), &model, 1, 4, 2, &sobol, &mut rng).unwrap();
        assert_eq!(arms.len(), 4);
        assert!(arms.iter().all(|a| (0.0..=1.0).contains(&a.coords()[0])));
    }
    let arms = propose_batch(&AcqSpec::new(AcqKind::Sobol), &model, 1, 4, 2, &sobol, &mut rng).unwrap();
    assert_eq!(arms, sobol.points(8, 4).unwrap());
}

#[test]
fn acquisition_maximum_is_no_worse_than_measured_points() {
    let model = five_point_model(0.0);
    let spec = AcqSpec::new(AcqKind::Ucb);
    let (v, _) =
        stagger::acquisitions::maximize_acquisition(&spec, &model, ArgmaxBudget::default(), &mut RngStream::new(7, 7))
            .unwrap();
    for p in model.dataset().points() {
        assert!(v >= acquisition_value(&spec, &model, 0.0, p.coords()));
    }
}

proptest! {
    #[test]
    fn ei_is_nonnegative_and_nondecreasing_in_sigma(mu in -5.0f64..5.0, best in -5.0f64..5.0,
                                                    s1 in 0.0f64..5.0, s2 in 0.0f64..5.0) {
        let (lo, hi) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };
        let a = expected_improvement(mu, lo, best);
        let b = expected_improvement(mu, hi, best);
        prop_assert!(a >= 0.0);
        prop_assert!(b >= a - 1e-12);
        prop_assert!(a >= (mu - best).max(0.0) - 1e-12);
    }

    #[test]
    fn ucb_is_linear_in_sigma(mu in -5.0f64..5.0, sigma in 0.0f64..5.0, beta in 0.0f64..4.0) {
        prop_assert_eq!(ucb(mu, sigma, beta), mu + beta * sigma);
    }
}
