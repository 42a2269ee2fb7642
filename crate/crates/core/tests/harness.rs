use std::sync::Arc;

use tagscope::aead::{Aead, CipherSpec, Registry};
use tagscope::eacirc::EvolutionConfig;
use tagscope::harness::{
    render_report, run_experiment, run_experiment_with, scale_profile, CellStatus, ExperimentPlan,
    ExperimentReport, ReportFormat, Scale, ScaleProfile, Tool,
};
use tagscope::stats::BatteryConfig;
use tagscope::stream::PmnMode;
use tagscope::Error;

/// Returns a truncated ciphertext, violating the length law.
struct Truncating(CipherSpec);

impl Aead for Truncating {
    fn spec(&self) -> &CipherSpec {
        &self.0
    }
    fn seal(&self, _: &[u8], _: &[u8], _: &[u8], _: &[u8], pt: &[u8]) -> Vec<u8> {
        pt.to_vec()
    }
    fn open(&self, _: &[u8], _: &[u8], _: &[u8], _: &[u8], _: &[u8]) -> Option<Vec<u8>> {
        None
    }
}

fn tiny() -> ScaleProfile {
    ScaleProfile {
        battery: BatteryConfig {
            seq_len: 20_000,
            seq_count: 20,
            ..BatteryConfig::default()
        },
        sac_samples: 1000,
        sac_alpha: 0.01,
        eacirc: EvolutionConfig {
            generations: 20,
            vectors_per_eval: 300,
            ..EvolutionConfig::default()
        },
        eacirc_runs: 3,
    }
}

fn registry_with_broken() -> Registry {
    let mut reg = Registry::with_builtins();
    reg.register(Arc::new(Truncating(
        CipherSpec::new("broken", 16, 12, 0, 16).unwrap(),
    )))
    .unwrap();
    reg
}

#[test]
fn grid_has_one_cell_per_combination_plus_controls() {
    let reg = Registry::with_builtins();
    let plan = ExperimentPlan::new(
        &["aes128gcm"],
        &[PmnMode::Zero, PmnMode::Random],
        &[Tool::Battery, Tool::Sac],
        Scale::Desk,
        5,
    );
    let report = run_experiment_with(&reg, &plan, &tiny()).unwrap();
    assert_eq!(report.rows, ["aes128gcm", "prftag", "xortag"]);
    assert_eq!(report.cells.len(), 3 * 2 * 2);
    assert!(
        !report.calibration_failed,
        "{:?}",
        report.calibration_issues
    );
    let zero = report
        .cell("aes128gcm", PmnMode::Zero, Tool::Battery)
        .unwrap();
    assert_eq!(zero.status, CellStatus::Reject);
    assert!(zero.headline.ends_with("/10"));
}

#[test]
fn failing_cipher_marks_cells_error_without_aborting() {
    let reg = registry_with_broken();
    let plan = ExperimentPlan::new(&["broken"], &[PmnMode::Zero], &Tool::ALL, Scale::Desk, 5);
    let report = run_experiment_with(&reg, &plan, &tiny()).unwrap();
    for tool in Tool::ALL {
        let cell = report.cell("broken", PmnMode::Zero, tool).unwrap();
        assert_eq!(cell.status, CellStatus::Error, "{tool}");
        assert!(cell.error.as_deref().unwrap().contains("length mismatch"));
        assert_eq!(
            report.cell("prftag", PmnMode::Zero, tool).unwrap().status,
            CellStatus::Pass
        );
        assert_eq!(
            report.cell("xortag", PmnMode::Zero, tool).unwrap().status,
            CellStatus::Reject
        );
    }
    assert!(!report.calibration_failed);
    let text = render_report(&report, ReportFormat::Text).unwrap();
    assert!(text.contains("ERROR broken zero battery"));
}

#[test]
fn deterministic_apart_from_timing() {
    let reg = Registry::with_builtins();
    let plan = ExperimentPlan::new(
        &["aes256gcm"],
        &[PmnMode::Counter],
        &Tool::ALL,
        Scale::Desk,
        9,
    );
    let a = run_experiment_with(&reg, &plan, &tiny()).unwrap();
    let mut b = run_experiment_with(&reg, &plan, &tiny()).unwrap();
    b.timing = a.timing.clone();
    assert_eq!(a, b);
    for f in [ReportFormat::Text, ReportFormat::Csv, ReportFormat::Json] {
        assert_eq!(render_report(&a, f).unwrap(), render_report(&b, f).unwrap());
    }
    let json = render_report(&a, ReportFormat::Json).unwrap();
    assert_eq!(ExperimentReport::from_json(&json).unwrap(), a);
    assert_eq!(a.metadata.master_seed, 9);
    assert_eq!(a.metadata.battery_roster, 10);
}

#[test]
fn plan_errors_come_before_any_work() {
    let reg = Registry::with_builtins();
    let plan = ExperimentPlan::new(
        &["aes128gcm", "missing"],
        &PmnMode::ALL,
        &Tool::ALL,
        Scale::Paper,
        1,
    );
    assert!(matches!(
        run_experiment(&reg, &plan),
        Err(Error::PlanInvalid(_))
    ));
    let plan = ExperimentPlan::new(&["aes128gcm"], &[], &Tool::ALL, Scale::Desk, 1);
    assert!(matches!(
        run_experiment(&reg, &plan),
        Err(Error::PlanInvalid(_))
    ));
}

#[test]
fn scale_profiles() {
    let desk = scale_profile(Scale::Desk);
    assert_eq!(
        (desk.battery.seq_count, desk.battery.seq_len),
        (20, 1_000_000)
    );
    assert_eq!((desk.sac_samples, desk.eacirc_runs), (10_000, 100));
    let paper = scale_profile(Scale::Paper);
    assert_eq!((paper.battery.seq_count, paper.eacirc_runs), (100, 1000));
}
