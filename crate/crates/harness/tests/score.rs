use proptest::prelude::*;
use stagger_harness::{rank_scores, run_experiment, ExperimentConfig, HarnessError, RunTrace};

fn trace(method: &str, function: &str, repeat: usize, best: Vec<f64>) -> RunTrace {
    let n = best.len();
    RunTrace {
        method: method.into(),
        function: function.into(),
        repeat,
        best_so_far: best,
        wall_time: vec![0.0; n],
        arms: Vec::new(),
        values: Vec::new(),
        error: None,
    }
}

#[test]
fn constant_order_gives_evenly_spaced_scores() {
    let traces: Vec<RunTrace> = ["sts", "turbo-like", "cma-like", "random"]
        .iter()
        .enumerate()
        .map(|(k, m)| trace(m, "ackley", 0, (0..30).map(|i| (i + 30 * (3 - k)) as f64).collect()))
        .collect();
    let table = rank_scores(&traces).unwrap();
    assert_eq!(table.scores, vec![1.0, 2.0 / 3.0, 1.0 / 3.0, 0.0]);
    for round in &table.cells[0].round_ranks {
        let mut r = round.clone();
        r.sort_by(f64::total_cmp);
        assert_eq!(r, vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0]);
    }
}

#[test]
fn identical_values_all_score_one_half() {
    let traces: Vec<RunTrace> = ["a", "b", "c"]
        .iter()
        .map(|m| trace(m, "f", 0, vec![1.0, 2.0, 2.0]))
        .collect();
    let table = rank_scores(&traces).unwrap();
    assert_eq!(table.scores, vec![0.5; 3]);
    assert_eq!(table.se, vec![0.0; 3]);
}

#[test]
fn cells_are_scored_separately_then_averaged() {
    let traces = vec![
        trace("a", "f", 0, vec![1.0, 1.0]),
        trace("b", "f", 0, vec![0.0, 0.0]),
        trace("a", "f", 1, vec![0.0, 0.0]),
        trace("b", "f", 1, vec![1.0, 1.0]),
        trace("a", "g", 0, vec![1.0, 1.0]),
        trace("b", "g", 0, vec![0.0, 0.0]),
    ];
    let table = rank_scores(&traces).unwrap();
    assert_eq!(table.cells.len(), 3);
    assert_eq!(table.scores, vec![2.0 / 3.0, 1.0 / 3.0]);
    let se = (1.0f64 / 3.0 / 3.0).sqrt();
    assert!((table.se[0] - se).abs() < 1e-15);
}

#[test]
fn malformed_inputs_are_errors() {
    let one = vec![trace("a", "f", 0, vec![1.0])];
    assert!(matches!(rank_scores(&one), Err(HarnessError::Score(_))));
    let mismatched = vec![trace("a", "f", 0, vec![1.0, 2.0]), trace("b", "f", 0, vec![1.0])];
    assert!(rank_scores(&mismatched).is_err());
    let missing = vec![
        trace("a", "f", 0, vec![1.0]),
        trace("b", "f", 0, vec![1.0]),
        trace("a", "f", 1, vec![1.0]),
    ];
    assert!(rank_scores(&missing).is_err());
    let mut failed = vec![trace("a", "f", 0, vec![1.0]), trace("b", "f", 0, vec![1.0])];
    failed[1].error = Some("boom".into());
    assert!(rank_scores(&failed).is_err());
    assert!(rank_scores(&[]).is_err());
}

#[test]
fn exp_transform_leaves_real_scores_unchanged() {
    let mut cfg = ExperimentConfig::new(&["sphere", "rastrigin"], 3, &["random", "sobol", "ts-100"]).unwrap();
    cfg.num_rounds = 8;
    cfg.repeats = 2;
    let traces = run_experiment(&cfg).unwrap();
    let base = rank_scores(&traces).unwrap();
    let mapped: Vec<RunTrace> = traces
        .iter()
        .map(|t| RunTrace {
            best_so_far: t.best_so_far.iter().map(|y| y.exp()).collect(),
            ..t.clone()
        })
        .collect();
    assert_eq!(rank_scores(&mapped).unwrap(), base);
}

proptest! {
    #[test]
    fn scores_lie_in_unit_interval_and_ranks_balance(
        values in proptest::collection::vec(proptest::collection::vec(-3i32..3, 5), 2..6)
    ) {
        let traces: Vec<RunTrace> = values
            .iter()
            .enumerate()
            .map(|(k, v)| {
                let mut best = Vec::new();
                let mut run = f64::NEG_INFINITY;
                for &x in v {
                    run = run.max(x as f64);
                    best.push(run);
                }
                trace(&format!("m{k}"), "f", 0, best)
            })
            .collect();
        let m = traces.len() as f64;
        let table = rank_scores(&traces).unwrap();
        prop_assert!(table.scores.iter().all(|s| (0.0..=1.0).contains(s)));
        for round in &table.cells[0].round_ranks {
            let total: f64 = round.iter().sum();
            prop_assert!((total - m / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn monotone_transforms_preserve_scores(
        values in proptest::collection::vec(proptest::collection::vec(-20.0f64..20.0, 4), 2..5),
        shift in -5.0f64..5.0
    ) {
        let traces: Vec<RunTrace> = values.iter().enumerate().map(|(k, v)| trace(&format!("m{k}"), "f", 0, v.clone())).collect();
        let shifted: Vec<RunTrace> = traces
            .iter()
            .map(|t| RunTrace { best_so_far: t.best_so_far.iter().map(|y| (y - shift).exp()).collect(), ..t.clone() })
            .collect();
        prop_assert_eq!(rank_scores(&traces).unwrap().scores, rank_scores(&shifted).unwrap().scores);
    }
}
