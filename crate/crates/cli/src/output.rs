//! CSV result files.

use std::path::Path;

use jointrom::solvers::{LinearMode, QsmaLevel, TracePoint, TransientResult};

fn num(v: f64) -> String {
    format!("{v:.10e}")
}

fn writer(path: &Path) -> csv::Result<csv::Writer<std::fs::File>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)
}

pub const BACKBONE_HEADER: [&str; 13] = [
    "level",
    "eta_hat",
    "center_amplitude_mm",
    "omega_ratio",
    "damping",
    "amplitude_ratio",
    "alpha_hat",
    "frequency_hz",
    "dissipation_nmm",
    "cycles",
    "closure",
    "converged",
    "masing",
];

/// Backbone: level, η̂, centre amplitude, ω/ω_lin and D first, diagnostics after.
pub fn write_backbone(path: &Path, mode: &LinearMode, ratios: &[f64], levels: &[QsmaLevel]) -> csv::Result<()> {
    let mut w = writer(path)?;
    w.write_record(BACKBONE_HEADER)?;
    for (k, (l, r)) in levels.iter().zip(ratios).enumerate() {
        w.write_record([
            (k + 1).to_string(),
            num(l.eta),
            num(l.probe_amplitude),
            num(l.omega / mode.omega),
            num(l.damping),
            num(*r),
            num(l.alpha),
            num(l.frequency_hz()),
            num(l.dissipation),
            l.cycles.to_string(),
            num(l.closure),
            l.converged.to_string(),
            l.masing.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Hysteresis trace with per-node tangential traction (MPa) and gap (mm).
pub fn write_trace(path: &Path, trace: &[TracePoint]) -> csv::Result<()> {
    let mut w = writer(path)?;
    let mut header: Vec<String> = ["tau", "alpha", "eta", "probe_mm", "work_nmm"].map(String::from).to_vec();
    if let Some(p) = trace.first() {
        for n in &p.nodes {
            for c in ["p_t_x", "p_t_y", "g_t_x", "g_t_y"] {
                header.push(format!("{c}_{}", n.node));
            }
        }
    }
    w.write_record(&header)?;
    for p in trace {
        let mut row = vec![num(p.tau), num(p.alpha), num(p.eta), num(p.probe), num(p.dissipation)];
        for n in &p.nodes {
            row.extend([num(n.p_t[0]), num(n.p_t[1]), num(n.g_t[0]), num(n.g_t[1])]);
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Time history every `stride` steps (energies in N·mm).
pub fn write_history(path: &Path, res: &TransientResult, stride: usize) -> csv::Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "time_s",
        "probe_mm",
        "kinetic",
        "potential",
        "friction_work",
        "external_work",
        "balance",
    ])?;
    let last = res.time.len().saturating_sub(1);
    for k in (0..res.time.len()).filter(|k| k % stride.max(1) == 0 || *k == last) {
        let e = &res.energy[k];
        w.write_record([
            num(res.time[k]),
            num(res.probe[k]),
            num(e.kinetic),
            num(e.potential),
            num(e.friction_work),
            num(e.external_work),
            num(e.balance()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Linear modes: index, ω (rad/s), frequency (Hz), eigen residual.
pub fn write_modes(path: &Path, modes: &[LinearMode]) -> csv::Result<()> {
    let mut w = writer(path)?;
    w.write_record(["mode", "omega_rad_s", "frequency_hz", "residual"])?;
    for (k, m) in modes.iter().enumerate() {
        w.write_record([(k + 1).to_string(), num(m.omega), num(m.frequency_hz()), num(m.residual)])?;
    }
    w.flush()?;
    Ok(())
}

/// `(ω/ω_lin, D)` per row of a backbone file.
pub fn read_backbone(path: &Path) -> csv::Result<Vec<(f64, f64)>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let get = |i: usize| rec.get(i).and_then(|s| s.parse::<f64>().ok()).unwrap_or(f64::NAN);
        rows.push((get(3), get(4)));
    }
    Ok(rows)
}
