use std::fs;
use std::path::Path;
use std::process::Command;

use jointrom_cli::artifacts::file_hash;
use jointrom_cli::config::PipelineConfig;
use jointrom_cli::{default_config_text, CliError, Outcome, Pipeline, Stage, StageRecord, Unit};

fn toy() -> PipelineConfig {
    let mut c = PipelineConfig::default();
    c.mesh.nx_free = 4;
    c.mesh.nx_clamp = 1;
    c.mesh.nz_block = 1;
    c.reduction.thin_modes = 1;
    c.reduction.support_modes = 1;
    c.qsma.amplitudes = vec![0.01, 0.03];
    c.qsma.steps_per_cycle = 40;
    c.qsma.max_cycles = 4;
    c.qsma.trace_nodes = vec![0, 1];
    c.pulse.truncate(1);
    c.pulse[0].steps_per_duration = 50;
    c.pulse[0].fundamental_periods = 1.0;
    c.output.workers = 1;
    c
}

fn pipeline(cfg: &PipelineConfig, out: &Path) -> Pipeline {
    Pipeline::new(cfg.clone(), out.to_path_buf(), 1)
}

const BUILD: [Stage; 6] = [
    Stage::Mesh,
    Stage::Cms,
    Stage::Scale,
    Stage::Campaign,
    Stage::Regress,
    Stage::Assemble,
];

#[test]
fn default_config_file_matches_defaults() {
    let parsed: PipelineConfig = toml::from_str(default_config_text()).unwrap();
    assert_eq!(parsed, PipelineConfig::default());
    assert!(parsed.validate().is_ok());
}

#[test]
fn validation_lists_every_violation() {
    let mut c = PipelineConfig::default();
    c.geometry.thickness = -1.0;
    c.material.poisson_ratio = 0.6;
    c.mesh.ny = 3;
    c.qsma.amplitudes.clear();
    let errs = c.validate().unwrap_err();
    assert_eq!(errs.len(), 4, "{errs:?}");
    assert!(errs.iter().any(|e| e.contains("geometry.thickness")));
    assert!(errs.iter().any(|e| e.contains("poisson_ratio")));
    assert!(errs.iter().any(|e| e.contains("mesh.ny")));
    assert!(errs.iter().any(|e| e.contains("qsma.amplitudes")));
    assert_eq!(CliError::Config(errs).exit_code(), 2);
}

#[test]
fn missing_profile_file_is_a_config_error() {
    let mut c = PipelineConfig::default();
    c.contact.profile = jointrom_cli::config::ProfileKind::File;
    c.contact.profile_file = Some("/nonexistent/chi.txt".into());
    let errs = c.validate().unwrap_err();
    assert!(errs.iter().any(|e| e.contains("profile_file")), "{errs:?}");
}

#[test]
fn mesh_and_cms_rerun_is_a_no_op() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy();
    let first = pipeline(&cfg, dir.path()).run(&[Stage::Mesh, Stage::Cms]).unwrap();
    assert_eq!(first.outcome(Unit::Thin), Some(Outcome::Built));
    assert_eq!(first.outcome(Unit::Support), Some(Outcome::Built));
    for f in ["metadata.toml", "t.mtx", "gamma.mtx", "mass.mtx", "stiffness.mtx"] {
        assert!(dir.path().join("thin").join(f).is_file(), "{f}");
        assert!(dir.path().join("support").join(f).is_file(), "{f}");
    }
    assert!(dir.path().join("support/contact.toml").is_file());
    let before = file_hash(&dir.path().join("thin/stage.toml")).unwrap();
    let second = pipeline(&cfg, dir.path()).run(&[Stage::Mesh, Stage::Cms]).unwrap();
    for u in [Unit::Mesh, Unit::Thin, Unit::Support] {
        assert_eq!(second.outcome(u), Some(Outcome::UpToDate), "{u:?}");
    }
    assert_eq!(file_hash(&dir.path().join("thin/stage.toml")).unwrap(), before);
}

#[test]
fn unselected_stale_dependency_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let err = pipeline(&toy(), dir.path()).run(&[Stage::Qsma]).unwrap_err();
    assert!(matches!(err, CliError::Stale(_)), "{err}");
    assert_eq!(err.exit_code(), 4);
}

#[test]
fn tampered_artifact_invalidates_only_dependents() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy();
    pipeline(&cfg, dir.path()).run(&BUILD).unwrap();
    let support = dir.path().join("support/mass.mtx");
    let thin_before = file_hash(&dir.path().join("thin/t.mtx")).unwrap();
    fs::remove_file(&support).unwrap();
    // assemble needs the support container, which is no longer intact
    let err = pipeline(&cfg, dir.path()).run(&[Stage::Assemble]).unwrap_err();
    assert_eq!(err.exit_code(), 4);
    let run = pipeline(&cfg, dir.path()).run(&BUILD).unwrap();
    assert_eq!(run.outcome(Unit::Support), Some(Outcome::Built));
    // the rebuilt container is identical, so the assembly stays valid
    assert_eq!(run.outcome(Unit::Assemble), Some(Outcome::UpToDate));
    for u in [Unit::Mesh, Unit::Thin, Unit::Scale, Unit::Campaign, Unit::Regress] {
        assert_eq!(run.outcome(u), Some(Outcome::UpToDate), "{u:?}");
    }
    assert_eq!(file_hash(&dir.path().join("thin/t.mtx")).unwrap(), thin_before);
}

#[test]
fn support_swap_leaves_thin_container_untouched() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = toy();
    pipeline(&cfg, dir.path()).run(&BUILD).unwrap();
    let thin = dir.path().join("thin");
    let snapshot: Vec<(String, Vec<u8>)> = fs::read_dir(&thin)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    cfg.contact.mean_pressure = 0.8;
    cfg.contact.profile = jointrom_cli::config::ProfileKind::Smooth;
    cfg.contact.profile_sx = 0.7;
    let run = pipeline(&cfg, dir.path()).run(&BUILD).unwrap();
    assert_eq!(run.outcome(Unit::Support), Some(Outcome::Built));
    assert_eq!(run.outcome(Unit::Assemble), Some(Outcome::Built));
    for u in [Unit::Mesh, Unit::Thin, Unit::Scale, Unit::Campaign, Unit::Regress] {
        assert_eq!(run.outcome(u), Some(Outcome::UpToDate), "{u:?}");
    }
    for (name, bytes) in snapshot {
        assert_eq!(fs::read(thin.join(&name)).unwrap(), bytes, "{name}");
    }
}

#[test]
fn studies_are_deterministic() {
    let cfg = toy();
    let stages = [&BUILD[..], &[Stage::Qsma, Stage::Transient, Stage::Report]].concat();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    pipeline(&cfg, a.path()).run(&stages).unwrap();
    pipeline(&cfg, b.path()).run(&stages).unwrap();
    for unit in [Unit::Thin, Unit::Support, Unit::Regress, Unit::Assemble, Unit::Qsma, Unit::Transient] {
        let ra = StageRecord::load(&unit.dir(a.path())).unwrap();
        let rb = StageRecord::load(&unit.dir(b.path())).unwrap();
        assert_eq!(ra.outputs, rb.outputs, "{unit:?}");
    }
    let backbone = fs::read_to_string(a.path().join("qsma/backbone.csv")).unwrap();
    let header = backbone.lines().next().unwrap();
    assert!(header.starts_with("level,eta_hat,center_amplitude_mm,omega_ratio,damping"));
    assert_eq!(backbone.lines().count(), 1 + cfg.qsma.amplitudes.len());
    let trace = fs::read_to_string(a.path().join("qsma/trace-01.csv")).unwrap();
    assert!(trace.lines().next().unwrap().ends_with("p_t_x_1,p_t_y_1,g_t_x_1,g_t_y_1"));
    assert!(a.path().join("transient/low.csv").is_file());
    assert!(fs::read_to_string(a.path().join("report/summary.txt")).unwrap().contains("[qsma] fresh"));
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[geometry]\nthickness = -2.0\n[mesh]\nny = 3\n").unwrap();
    let exe = env!("CARGO_BIN_EXE_jointrom");
    let out = Command::new(exe).args(["--config", bad.to_str().unwrap(), "mesh"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("geometry.thickness") && msg.contains("mesh.ny"), "{msg}");

    let unknown = dir.path().join("unknown.toml");
    fs::write(&unknown, "[geometry]\nthicknes = 2.0\n").unwrap();
    let out = Command::new(exe).args(["--config", unknown.to_str().unwrap(), "mesh"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out_dir = dir.path().join("o");
    let out = Command::new(exe).args(["--out", out_dir.to_str().unwrap(), "qsma"]).output().unwrap();
    assert_eq!(out.status.code(), Some(4));

    let good = dir.path().join("good.toml");
    fs::write(&good, "[mesh]\nnx_free = 4\nnx_clamp = 1\nnz_block = 1\n").unwrap();
    let out = Command::new(exe)
        .args(["--config", good.to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "--stages", "mesh,cms", "run"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("thin/stage.toml").is_file());
}
