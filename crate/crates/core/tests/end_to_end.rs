use hsara::io::{from_text, generate_case_study, instance_to_text, to_text, ReportDocument, SolutionDocument};
use hsara::model::check_partition;
use hsara::pipeline::{evaluation_seed, solve_detailed};
use hsara::simulation::simulate_solution;
use hsara::{CancellationModel, SolverConfig};

fn config(lambda: CancellationModel, level: usize) -> SolverConfig {
    SolverConfig {
        cancellation_lambda: lambda,
        metaheuristic_level: level,
        mc_replications: 80,
        scheduler_iterations: 4,
        master_seed: 17,
        ..SolverConfig::default()
    }
}

#[test]
fn solve_document_round_trip_and_report_reproduce() {
    let instance = generate_case_study(14, 0.1, 5).unwrap();
    let text = instance_to_text(&instance);
    let reloaded = hsara::io::instance_from_text(&text).unwrap();
    assert_eq!(reloaded, instance);

    for lambda in [CancellationModel::LastMinute, CancellationModel::Notified] {
        let cfg = config(lambda, 2);
        let out = solve_detailed(&reloaded, &cfg).unwrap();
        out.solution.validate(&instance).unwrap();
        check_partition(&out.solution.routes, 14).unwrap();
        assert!(out.report.identity_holds(1e-9));
        assert!(out.report.total <= out.initial_total);
        assert!(out.candidates.iter().all(|c| c.total >= out.initial_total));

        let again = simulate_solution(&out.solution, &instance, lambda, cfg.mc_replications, evaluation_seed(&cfg)).unwrap();
        assert_eq!(again, out.report);

        let doc: SolutionDocument = from_text(&to_text(&SolutionDocument::from(&out.solution))).unwrap();
        assert_eq!(doc.into_solution().unwrap(), out.solution);
        let rep: ReportDocument = from_text(&to_text(&ReportDocument::from(&out.report))).unwrap();
        assert_eq!(rep, ReportDocument::from(&out.report));
    }
}

#[test]
fn more_replications_tighten_the_estimate() {
    let instance = generate_case_study(10, 0.1, 2).unwrap();
    let out = solve_detailed(&instance, &config(CancellationModel::LastMinute, 0)).unwrap();
    let spread = |reps: usize| {
        let totals: Vec<f64> = (0..8)
            .map(|seed| simulate_solution(&out.solution, &instance, CancellationModel::LastMinute, reps, seed).unwrap().total)
            .collect();
        let mean = totals.iter().sum::<f64>() / totals.len() as f64;
        totals.iter().map(|t| (t - mean).powi(2)).sum::<f64>().sqrt()
    };
    assert!(spread(2000) < spread(20));
}
