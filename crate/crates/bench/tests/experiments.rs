use iprox::solvers::{ErrorSchedule, SolverConfig, SolverKind};
use iprox::DenseMatrix;
use iprox_bench::generate::{gen_grouped_regression, gen_signed_lowrank};
use iprox_bench::io::{load_regression_csv, load_sign_triplets, write_regression_csv, write_sign_triplets};
use iprox_bench::{
    build_problem, run_experiment, Application, DataSource, ExperimentSpec, GenParams, ModelParams,
    TraceFile,
};

fn oscar_spec(kinds: &[SolverKind], iters: usize) -> ExperimentSpec {
    let mut spec = ExperimentSpec::new(
        Application::RobustOscar,
        kinds.iter().map(|&k| SolverConfig::new(k, 0.0, iters)).collect(),
    );
    spec.step_fraction = Some(0.9);
    spec
}

#[test]
fn trace_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    let mut spec = oscar_spec(&[SolverKind::Pg, SolverKind::Aipg], 40);
    spec.output = Some(path.clone());
    let out = run_experiment(&spec).unwrap();
    let back = TraceFile::read(&path).unwrap();
    assert_eq!(back.rows.len(), out.trace_file.rows.len());
    assert!(back.same_values(&out.trace_file));
    assert_eq!(back.runs(), vec!["pg", "aipg"]);
}

#[test]
fn generated_datasets_reload_identically() {
    let dir = tempfile::tempdir().unwrap();
    let reg = gen_grouped_regression(60, 12, 3, 0.1, 0.1, 3).unwrap();
    let path = dir.path().join("reg.csv");
    write_regression_csv(&path, &reg.dataset).unwrap();
    assert_eq!(load_regression_csv(&path).unwrap(), reg.dataset);

    let signs = gen_signed_lowrank(15, 2, 0.3, 1.0, 3).unwrap();
    let path = dir.path().join("signs.csv");
    write_sign_triplets(&path, &signs.observed).unwrap();
    assert_eq!(load_sign_triplets(&path).unwrap(), signs.observed);
}

#[test]
fn file_source_matches_generated_source() {
    let dir = tempfile::tempdir().unwrap();
    let params = GenParams::defaults(Application::RobustOscar);
    let reg = gen_grouped_regression(
        params.n,
        params.d,
        params.n_groups,
        params.outlier_frac,
        params.noise_sd,
        params.seed,
    )
    .unwrap();
    let path = dir.path().join("reg.csv");
    write_regression_csv(&path, &reg.dataset).unwrap();
    let mut from_file = oscar_spec(&[SolverKind::Pg], 30);
    from_file.source = DataSource::File(path);
    let a = run_experiment(&from_file).unwrap().trace_file;
    let b = run_experiment(&oscar_spec(&[SolverKind::Pg], 30)).unwrap().trace_file;
    assert!(a.same_values(&b));
}

#[test]
fn runs_share_start_and_repeat_exactly() {
    let spec = oscar_spec(&[SolverKind::Pg, SolverKind::Ipg], 200);
    let first = run_experiment(&spec).unwrap();
    let second = run_experiment(&spec).unwrap();
    assert!(first.trace_file.same_values(&second.trace_file));
    let starts: Vec<f64> = first.runs.iter().map(|r| r.trace.initial_objective).collect();
    assert_eq!(starts[0].to_bits(), starts[1].to_bits());
    let init_rows: Vec<_> = first.trace_file.rows.iter().filter(|r| r.k == 0).collect();
    assert_eq!(init_rows.len(), 2);
    assert_eq!(init_rows[0].objective, init_rows[1].objective);
}

#[test]
fn inexact_polynomial_schedule_tracks_exact() {
    let mut spec = oscar_spec(&[SolverKind::Pg], 500);
    spec.runs.push(
        SolverConfig::new(SolverKind::Ipg, 0.0, 500)
            .with_schedule(ErrorSchedule::Polynomial { c: 1e-2, p: 2.0 }),
    );
    let out = run_experiment(&spec).unwrap();
    assert!(out.failures().is_empty());
    let pg = out.runs[0].trace.final_objective();
    let ipg = out.runs[1].trace.final_objective();
    assert!((pg - ipg).abs() <= 1e-3 * pg.abs(), "pg {pg} ipg {ipg}");
}

#[test]
fn correntropy_oscar_beats_square_loss_under_outliers() {
    let params = GenParams::defaults(Application::RobustOscar);
    assert_eq!((params.n, params.d, params.n_groups, params.outlier_frac), (200, 50, 5, 0.1));
    let error = |app: Application| {
        let mut spec = ExperimentSpec::new(app, vec![SolverConfig::new(SolverKind::Apg, 0.0, 1000)]);
        spec.source = DataSource::Generated(params.clone());
        spec.step_fraction = Some(0.9);
        let out = run_experiment(&spec).unwrap();
        let truth = out.problem.regression_truth.clone().unwrap();
        let x = out.runs[0].trace.final_point.clone();
        x.distance_sq(&truth).sqrt() / truth.norm()
    };
    let robust = error(Application::RobustOscar);
    let square = error(Application::LassoBaseline);
    assert!(robust < square, "robust {robust} square {square}");
    assert!(robust < 0.2, "robust relative error {robust}");
}

#[test]
fn link_prediction_generalizes() {
    let params = GenParams::defaults(Application::LinkPrediction);
    assert_eq!((params.n_users, params.rank, params.obs_frac), (60, 3, 0.3));
    let mut spec = ExperimentSpec::new(
        Application::LinkPrediction,
        vec![SolverConfig::new(SolverKind::Apg, 0.0, 300)],
    );
    spec.step_fraction = Some(0.9);
    let out = run_experiment(&spec).unwrap();
    assert!(out.failures().is_empty());
    let (rows, cols) = out.problem.matrix_shape.unwrap();
    let x = DenseMatrix::from_vector(rows, cols, &out.runs[0].trace.final_point).unwrap();
    let acc = out.problem.sign_instance.as_ref().unwrap().held_out_accuracy(&x);
    assert!(acc > 0.85, "held-out accuracy {acc}");
}

#[test]
fn model_overrides_change_the_problem() {
    let src = DataSource::Generated(GenParams::defaults(Application::LassoBaseline));
    let a = build_problem(Application::LassoBaseline, &src, &ModelParams::default()).unwrap();
    let model = ModelParams { lambda: Some(5.0), ..ModelParams::default() };
    let b = build_problem(Application::LassoBaseline, &src, &model).unwrap();
    let x = a.x0.map(|_| 1.0);
    assert!(b.regularizer.value(&x).unwrap() > a.regularizer.value(&x).unwrap());
}
