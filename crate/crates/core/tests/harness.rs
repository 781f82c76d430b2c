use std::fs;

use fsi_core::coupler::Termination;
use fsi_core::harness::{
    checkpoint_path, checkpoint_roundtrip, read_csv, resume, run, validate_dataset, Checkpoint, HarnessError,
    RunBook, RunConfig, Scenario, Status, CSV_FILE, CSV_HEADER, DUMP_DIR, SUMMARY_FILE,
};
use fsi_core::harness::output::{read_dump, Summary};

fn small(scenario: Scenario) -> RunConfig {
    let mut c = RunConfig { scenario, ..Default::default() };
    c.geometry.nr = 8;
    c.geometry.nth = 16;
    c.fene.nqr = 6;
    c.fene.nqa = 8;
    c.horizon = 16;
    c.window = 4;
    c
}

fn benign(scenario: Scenario) -> RunConfig {
    let mut c = small(scenario);
    c.forcing.rotation = 4.0;
    c.forcing.shell_mode2 = 0.5;
    c.initial.perturbation = 0.3;
    c
}

#[test]
fn default_config_and_presets_validate() {
    RunConfig::default().validate().unwrap();
    for name in fsi_core::harness::PRESETS {
        RunConfig::preset(name).unwrap().validate().unwrap();
    }
    assert!(matches!(RunConfig::preset("nope"), Err(HarnessError::Config(_))));
}

#[test]
fn invalid_configs_are_rejected() {
    let cases: Vec<fn(&mut RunConfig)> = vec![
        |c| c.geometry.nr = 3,
        |c| c.fene.nqa = 2,
        |c| c.dt = 0.0,
        |c| c.dt = f64::NAN,
        |c| c.fene.b = 2.0,
        |c| c.geometry.alpha = c.geometry.tube,
        |c| c.geometry.alpha = 0.0,
        |c| c.window = 0,
        |c| c.physics.viscosity = -1.0,
    ];
    for edit in cases {
        let mut c = RunConfig::default();
        edit(&mut c);
        assert!(matches!(c.validate(), Err(HarnessError::Config(_))), "{c:?}");
        assert!(matches!(run(&c), Err(HarnessError::Config(_))));
    }
}

#[test]
fn config_json_round_trips_and_rejects_unknown_fields() {
    let c = RunConfig::preset("benign").unwrap();
    assert_eq!(RunConfig::from_json(&c.to_json()).unwrap(), c);
    let partial = RunConfig::from_json(r#"{"scenario": "fp-moving", "dt": 0.002}"#).unwrap();
    assert_eq!(partial.scenario, Scenario::FpMoving);
    assert_eq!(partial.horizon, RunConfig::default().horizon);
    assert!(RunConfig::from_json(r#"{"typo": 1}"#).is_err());
    assert!(RunConfig::from_json(r#"{"scenario": "nope"}"#).is_err());
}

#[test]
fn config_hash_ignores_the_output_directory_only() {
    let a = RunConfig::default();
    let mut b = a.clone();
    b.output.dir = Some("/tmp/elsewhere".into());
    assert_eq!(a.hash(), b.hash());
    b.dt = 2e-3;
    assert_ne!(a.hash(), b.hash());
    let mut s = a.clone();
    s.seed = 1;
    assert_ne!(a.hash(), s.hash());
}

#[test]
fn zero_data_coupled_run_reports_all_zero_fields() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small(Scenario::CoupledGlobal);
    c.initial.density = 0.0;
    c.output.dir = Some(dir.path().into());
    let out = run(&c).unwrap();
    assert_eq!(out.exit_code(), 0);
    assert!(out.summary.all_zero);
    assert_eq!(out.summary.termination, Some(Termination::Horizon));
    let summary = Summary::read(&dir.path().join(SUMMARY_FILE)).unwrap();
    assert_eq!(summary, out.summary);
    let rows = read_csv(&dir.path().join(CSV_FILE)).unwrap();
    assert_eq!(rows.len(), 17);
    assert!(rows.iter().all(|r| r.mass == 0.0 && r.max_f == 0.0 && r.kinetic_fluid == Some(0.0)));
}

#[test]
fn relaxation_keeps_mass_constant() {
    let mut c = small(Scenario::FpFixed);
    c.initial.perturbation = 0.5;
    c.horizon = 60;
    let out = run(&c).unwrap();
    let m0 = out.rows[0].mass;
    assert!(m0 > 0.0);
    for r in &out.rows {
        assert!((r.mass - m0).abs() <= 1e-10 * m0, "step {}: {} vs {m0}", r.step, r.mass);
    }
    // relaxation towards the mean lowers the maximum
    assert!(out.rows.last().unwrap().max_f < out.rows[0].max_f);
}

#[test]
fn prescribed_flow_and_moving_wall_keep_mass_and_sign() {
    for scenario in [Scenario::FpFixed, Scenario::FpMoving] {
        let mut c = small(scenario);
        c.initial.perturbation = 1.0;
        c.prescribed.rotation = 2.0;
        c.prescribed.strain = 2.0;
        c.prescribed.wall_amplitude = 0.15;
        c.prescribed.wall_frequency = 8.0;
        c.horizon = 40;
        let out = run(&c).unwrap();
        assert_eq!(out.exit_code(), 0, "{:?}", out.summary.errors);
        let s = out.summary.stats.unwrap();
        assert!(s.max_mass_drift <= 1e-10, "{scenario}: {}", s.max_mass_drift);
        assert!(s.min_f >= -1e-12, "{scenario}: {}", s.min_f);
        if scenario == Scenario::FpMoving {
            assert!(out.rows.iter().any(|r| r.eta_max > 0.04));
        }
    }
}

#[test]
fn solvent_structure_scenario_keeps_its_constraints() {
    let mut c = small(Scenario::SolventStructure);
    c.forcing.rotation = 4.0;
    c.forcing.shell_mode2 = 2.0;
    c.horizon = 24;
    let out = run(&c).unwrap();
    assert_eq!(out.exit_code(), 0, "{:?}", out.summary.errors);
    let s = out.summary.stats.unwrap();
    assert!(s.max_divergence_residual <= 1e-9 && s.max_trace_residual <= 1e-9, "{s:?}");
    assert!(out.rows[1..].iter().all(|r| r.inner_iterations.is_some() && r.outer_iterations.is_none()));
    assert!(out.rows.last().unwrap().kinetic_fluid.unwrap() > 0.0);
}

#[test]
fn reruns_write_byte_identical_outputs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut c = benign(Scenario::CoupledGlobal);
    c.horizon = 12;
    c.output.dump_every = 6;
    c.seed = 42;
    for d in [&a, &b] {
        c.output.dir = Some(d.path().into());
        assert_eq!(run(&c).unwrap().exit_code(), 0);
    }
    for name in [CSV_FILE, SUMMARY_FILE] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    let text = fs::read_to_string(a.path().join(CSV_FILE)).unwrap();
    assert_eq!(text.lines().next(), Some(CSV_HEADER));
    let mut other = c.clone();
    other.seed = 43;
    other.output.dir = None;
    let diff = run(&other).unwrap();
    assert_ne!(diff.rows[0].max_f, read_csv(&a.path().join(CSV_FILE)).unwrap()[0].max_f);
}

#[test]
fn dumps_hold_the_state_with_sidecars() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = benign(Scenario::CoupledGlobal);
    c.horizon = 8;
    c.output.dump_every = 8;
    c.output.dir = Some(dir.path().into());
    let out = run(&c).unwrap();
    let (meta, f) = read_dump(&dir.path().join(DUMP_DIR).join("f_00000008.bin")).unwrap();
    assert_eq!(meta.field, "f");
    assert_eq!(meta.shape, vec![128, c.fene.nqr * c.fene.nqa]);
    assert_eq!(meta.time, out.final_state.time());
    assert_eq!(f, out.final_state.distribution.values);
    let (meta, eta) = read_dump(&dir.path().join(DUMP_DIR).join("eta_00000000.bin")).unwrap();
    assert_eq!((meta.step, meta.time), (0, 0.0));
    assert!(eta.iter().all(|v| *v == 0.0));
    assert!(!dir.path().join(DUMP_DIR).join("f_00000004.bin").exists());
}

#[test]
fn checkpoints_round_trip_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let c = benign(Scenario::CoupledGlobal);
    let book = RunBook { config: c.clone(), stats: None, windows: Vec::new() };
    let mid = {
        let mut c = c.clone();
        c.horizon = 4;
        run(&c).unwrap().final_state
    };
    let mut zero = mid.clone();
    zero.structure.eta.iter_mut().for_each(|v| *v = 0.0);
    zero.flow.u.iter_mut().for_each(|v| *v = 0.0);
    zero.distribution.values.iter_mut().for_each(|v| *v = 0.0);
    let path = dir.path().join("state.ckpt");
    for state in [&zero, &mid] {
        let back = checkpoint_roundtrip(&path, state, &book).unwrap();
        assert_eq!(&back, state);
        let bits = |s: &fsi_core::coupler::CoupledState| -> Vec<u64> {
            s.flow.u.iter().chain(&s.distribution.values).map(|v| v.to_bits()).collect()
        };
        assert_eq!(bits(&back), bits(state));
    }
    let bytes = fs::read(&path).unwrap();
    assert!(matches!(Checkpoint::from_bytes(&bytes[..bytes.len() - 3]), Err(HarnessError::Checkpoint(_))));
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(matches!(Checkpoint::from_bytes(&bad), Err(HarnessError::Checkpoint(_))));
    let mut wrong_hash = bytes.clone();
    wrong_hash[12] ^= 1;
    assert!(matches!(Checkpoint::from_bytes(&wrong_hash), Err(HarnessError::Checkpoint(_))));
    assert!(matches!(Checkpoint::load(&dir.path().join("missing.ckpt")), Err(HarnessError::Io(_))));
}

#[test]
fn resumed_run_matches_the_unbroken_run() {
    let (full, part, fresh) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut c = benign(Scenario::CoupledGlobal);
    c.output.checkpoint_every = 8;
    c.output.dir = Some(full.path().into());
    let unbroken = run(&c).unwrap();
    assert_eq!(unbroken.checkpoints.len(), 2);

    // interrupted copy: run to the checkpoint, then resume in place
    let mut short = c.clone();
    short.output.dir = Some(part.path().into());
    let first = run(&short).unwrap();
    let ck = checkpoint_path(part.path(), 8);
    assert!(ck.exists());
    let resumed = resume(&ck, None).unwrap();
    assert_eq!(resumed.summary.resumed_from, Some(8));
    assert_eq!(resumed.final_state, unbroken.final_state);
    assert_eq!(
        fs::read(full.path().join(CSV_FILE)).unwrap(),
        fs::read(part.path().join(CSV_FILE)).unwrap()
    );
    assert_eq!(first.rows, unbroken.rows);

    // resume into an empty directory writes only the rows after the checkpoint
    let r = resume(&checkpoint_path(full.path(), 8), Some(fresh.path())).unwrap();
    let rows = read_csv(&fresh.path().join(CSV_FILE)).unwrap();
    let tail: Vec<_> = unbroken.rows.iter().filter(|r| r.step > 8).cloned().collect();
    assert_eq!(rows, tail);
    assert_eq!(r.rows, tail);
    let mut s = r.summary.clone();
    s.resumed_from = None;
    assert_eq!(s, unbroken.summary);
}

#[test]
fn solver_failures_are_recorded_with_a_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = benign(Scenario::CoupledLocal);
    c.tolerances.rho_max = 1e-12;
    c.output.dir = Some(dir.path().into());
    let out = run(&c).unwrap();
    assert_eq!(out.exit_code(), 1);
    assert_eq!(out.summary.status, Status::Error);
    assert!(matches!(out.summary.termination, Some(Termination::Failure { step: 0, .. })));
    assert_eq!(out.summary.errors.len(), 1);
    assert_eq!(out.summary.errors[0].stage, "coupler");
    assert_eq!(Summary::read(&dir.path().join(SUMMARY_FILE)).unwrap().exit_code, 1);
}

#[test]
fn zero_dataset_passes_every_check_with_zero_residuals() {
    let mut c = small(Scenario::CoupledGlobal);
    c.initial.density = 0.0;
    let r = validate_dataset(&c).unwrap();
    assert!(r.passed, "{r:?}");
    for name in ["trace", "divergence", "displacement", "initial-rate", "compatibility"] {
        let chk = r.check(name).unwrap();
        assert!(chk.passed && chk.residual == 0.0, "{chk:?}");
    }
}

#[test]
fn strain_start_velocity_is_admissible_and_trace_offsets_are_measured() {
    let mut c = small(Scenario::CoupledGlobal);
    c.initial.strain = 0.7;
    let r = validate_dataset(&c).unwrap();
    assert!(r.check("trace").unwrap().residual == 0.0);
    assert!(r.check("divergence").unwrap().residual < 1e-13, "{r:?}");
    for delta in [1e-3, 1e-2, 1e-1] {
        c.initial.trace_offset = delta;
        let r = validate_dataset(&c).unwrap();
        let t = r.check("trace").unwrap();
        assert!((t.residual - delta).abs() <= 1e-12, "{t:?}");
        assert!(!t.passed && !r.passed);
    }
}

#[test]
fn displacement_check_rejects_data_outside_the_tube() {
    let mut c = small(Scenario::CoupledGlobal);
    c.initial.eta_mode2 = 0.1;
    let ok = validate_dataset(&c).unwrap();
    assert!(ok.check("displacement").unwrap().passed);
    c.initial.eta_mode2 = 0.6;
    let bad = validate_dataset(&c).unwrap();
    assert!(!bad.check("displacement").unwrap().passed && !bad.passed);
}

#[test]
fn back_substituted_dataset_is_compatible_and_shell_loads_are_linear() {
    let mut c = small(Scenario::CoupledGlobal);
    c.geometry.nr = 16;
    c.geometry.nth = 32;
    c.initial.density = 0.0;
    c.forcing.back_substituted = true;
    let r = validate_dataset(&c).unwrap();
    let compat = r.check("compatibility").unwrap();
    assert!(compat.passed, "{compat:?}");
    c.forcing.back_substituted = false;
    let slopes: Vec<f64> = [1e-3, 1e-2, 1e-1]
        .iter()
        .map(|d| {
            c.forcing.shell_mode2 = *d;
            validate_dataset(&c).unwrap().check("compatibility").unwrap().residual / d
        })
        .collect();
    for s in &slopes {
        assert!((s - slopes[0]).abs() <= 1e-6 * slopes[0], "{slopes:?}");
    }
}
