//! Experiment orchestration: reproducibility, emission formats, and
//! consistency between the experiment metadata and the theory report.

use mkhbm_core::experiments::{
    emit, preset, run_experiment, theory_report, ExperimentConfig, ProblemSpec, SolverSetup,
    SpectrumFamily,
};
use mkhbm_core::momentum::Method;
use mkhbm_core::sampling::SamplingScheme;
use mkhbm_core::solvers::SolverMethod;

fn small_config(master_seed: u64, trials: usize) -> ExperimentConfig {
    ExperimentConfig {
        name: "small".into(),
        problem: ProblemSpec::SynthSvd {
            n: 300,
            d: 8,
            family: SpectrumFamily::Exponential,
            kappa: 25.0,
            rho: 0.5,
            inconsistent_radius: 0.0,
        },
        solvers: vec![
            SolverSetup {
                label: "hbm_det".into(),
                method: SolverMethod::Hbm,
                batch_size: 0,
                scheme: SamplingScheme::RowNorm,
                iters: 60,
                record_residuals: true,
                gamma: None,
                k_star: None,
                alpha: None,
                beta: None,
                x0: None,
            },
            SolverSetup {
                label: "mb".into(),
                method: SolverMethod::MinibatchHbm,
                batch_size: 32,
                scheme: SamplingScheme::RowNorm,
                iters: 60,
                record_residuals: false,
                gamma: None,
                k_star: None,
                alpha: None,
                beta: None,
                x0: None,
            },
        ],
        trials,
        percentiles: (5.0, 50.0, 95.0),
        master_seed,
    }
}

#[test]
fn same_master_seed_reproduces_all_outputs() {
    let cfg = small_config(31, 7);
    let r1 = run_experiment(&cfg).unwrap();
    let r2 = run_experiment(&cfg).unwrap();
    for (a, b) in r1.curves.iter().zip(&r2.curves) {
        assert_eq!(a.med, b.med);
        assert_eq!(a.lo, b.lo);
        assert_eq!(a.hi, b.hi);
    }
    let dir1 = tempdir("emit1");
    let dir2 = tempdir("emit2");
    emit(&r1, &dir1).unwrap();
    emit(&r2, &dir2).unwrap();
    for name in list_csvs(&dir1) {
        let a = std::fs::read(dir1.join(&name)).unwrap();
        let b = std::fs::read(dir2.join(&name)).unwrap();
        assert_eq!(a, b, "CSV {name} differs between identical runs");
    }
    std::fs::remove_dir_all(dir1).ok();
    std::fs::remove_dir_all(dir2).ok();
}

#[test]
fn emitted_csv_has_header_plus_one_row_per_iteration() {
    let cfg = small_config(5, 3);
    let report = run_experiment(&cfg).unwrap();
    let dir = tempdir("emit_rows");
    emit(&report, &dir).unwrap();
    for name in list_csvs(&dir) {
        if !name.starts_with("curve_") {
            continue;
        }
        let text = std::fs::read_to_string(dir.join(&name)).unwrap();
        let rows = text.lines().count();
        assert_eq!(rows, 60 + 1 + 1, "{name}: {rows} lines");
    }
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn report_json_roundtrips_byte_stably() {
    let cfg = small_config(9, 2);
    let report = run_experiment(&cfg).unwrap();
    let dir = tempdir("emit_json");
    emit(&report, &dir).unwrap();
    let text = std::fs::read_to_string(dir.join("report.json")).unwrap();
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    let again = serde_json::to_string_pretty(&value).unwrap();
    assert_eq!(text, again);
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn experiment_metadata_matches_theory_report() {
    let cfg = small_config(13, 2);
    let report = run_experiment(&cfg).unwrap();
    let problem = cfg.problem.build(cfg.master_seed).unwrap();
    let theory = theory_report(&problem, Method::Hbm, None, None, None).unwrap();
    assert_eq!(report.theory.b_star, theory.b_star);
    assert_eq!(report.theory.kappa, theory.kappa);
    assert_eq!(report.theory.kappa_bar, theory.kappa_bar);
    assert_eq!(report.theory.eta_uniform, theory.eta_uniform);
}

#[test]
fn preset_fig5_is_inconsistent_and_records_residuals() {
    let cfg = preset("fig5", 0, 2).unwrap();
    match cfg.problem {
        ProblemSpec::SynthSvd {
            kappa,
            rho,
            inconsistent_radius,
            ..
        } => {
            assert_eq!(kappa, 50.0);
            assert_eq!(rho, 0.5);
            assert_eq!(inconsistent_radius, 1e-5);
        }
        _ => panic!("fig5 should be a synth problem"),
    }
    assert!(cfg.solvers.iter().all(|s| s.record_residuals));
}

fn tempdir(tag: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("mkhbm_{}_{}", tag, std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn list_csvs(dir: &std::path::Path) -> Vec<String> {
    let mut out: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| {
            let name = e.unwrap().file_name().into_string().unwrap();
            name.ends_with(".csv").then_some(name)
        })
        .collect();
    out.sort();
    out
}
