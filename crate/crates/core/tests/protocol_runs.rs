//! End-to-end protocol behaviour on a coarse grid.

use std::sync::OnceLock;

use stoplight_core::config::{RunConfig, DEFAULT_CONFIG};
use stoplight_core::grid::ComplexField;
use stoplight_core::io;
use stoplight_core::protocol::{
    argmax_tau, control_without_psi1, fit_exponential_decay, run_protocol, run_storage_series, sweep_bias_field,
    Reservoir,
};
use stoplight_core::Error;

fn small_config() -> RunConfig {
    let text = DEFAULT_CONFIG
        .replace("points = [128, 128]", "points = [64, 64]")
        .replace("ground_tolerance = 1e-10", "ground_tolerance = 1e-8")
        .replace("storage = \"1.5 s\"", "storage = \"60 ms\"")
        .replace("decay_window = \"600 ms\"", "decay_window = \"60 ms\"");
    RunConfig::parse(&text).unwrap()
}

fn prepared() -> &'static (RunConfig, ComplexField) {
    static CELL: OnceLock<(RunConfig, ComplexField)> = OnceLock::new();
    CELL.get_or_init(|| {
        let mut cfg = small_config();
        let gs = cfg.setup.prepare_ground_state().unwrap();
        cfg.setup.calibrate_attenuation(&gs.psi, cfg.transmission).unwrap();
        (cfg, gs.psi)
    })
}

#[test]
fn identical_runs_give_identical_csv_bytes() {
    let (cfg, ground) = prepared();
    let a = run_protocol(&cfg.setup, &cfg.timeline, ground).unwrap();
    let b = run_protocol(&cfg.setup, &cfg.timeline, ground).unwrap();
    let render = |r: &stoplight_core::protocol::ProtocolRun| {
        io::observables_table(cfg.hash, &r.observables).render()
    };
    assert_eq!(render(&a), render(&b));
    assert_eq!(a.revival().fidelity.to_bits(), b.revival().fidelity.to_bits());
}

#[test]
fn storage_series_agrees_with_separate_runs() {
    let (cfg, ground) = prepared();
    let times = [0.02, 0.06, 0.02];
    let series = run_storage_series(&cfg.setup, &cfg.timeline, ground, &times).unwrap();
    assert_eq!(series.revivals[0], series.revivals[2]);
    for (t, r) in times.iter().zip(&series.revivals) {
        let single = run_protocol(&cfg.setup, &cfg.timeline.with_storage(*t), ground).unwrap();
        let f = single.revival().fidelity;
        assert!((r.fidelity / f - 1.0).abs() < 1e-9, "t = {t}: {} vs {f}", r.fidelity);
    }
}

#[test]
fn reservoir_flags_control_the_revival() {
    let (cfg, ground) = prepared();
    let tl = cfg.timeline.with_storage(0.03);
    let base = run_protocol(&cfg.setup, &tl, ground).unwrap().revival().clone();
    assert!(base.fidelity > 0.0);
    let away = control_without_psi1(&cfg.setup, &tl, ground, Reservoir::Away).unwrap();
    assert_eq!(away.fidelity, 0.0);
    assert_eq!(away.regenerated, 0.0);
    let restored = control_without_psi1(&cfg.setup, &tl, ground, Reservoir::Restored).unwrap();
    assert_eq!(restored, base);
    let half = control_without_psi1(&cfg.setup, &tl, ground, Reservoir::Partial(0.5)).unwrap();
    assert!((half.fidelity / base.fidelity - 0.5).abs() < 1e-12);
}

#[test]
fn gradient_sign_sets_the_drift_direction() {
    let (cfg, ground) = prepared();
    let drift = |gradient: f64| {
        let tl = cfg.timeline.with_storage(0.05).with_gradient(gradient);
        let r = run_protocol(&cfg.setup, &tl, ground).unwrap();
        let s = &r.observables.samples;
        s.last().unwrap().com_z - s[0].com_z
    };
    let up = drift(20.0);
    let down = drift(-20.0);
    assert!(up > 10e-6, "{up:e}");
    assert!(down < 0.0, "{down:e}");
    assert!(up.signum() == cfg.setup.trap.moment2.signum());
}

#[test]
fn loss_vanishes_at_the_zero_crossing() {
    let (cfg, ground) = prepared();
    let tl = cfg.timeline.with_storage(0.03).with_bias_field(cfg.setup.scattering.zero_crossing);
    let r = run_protocol(&cfg.setup, &tl, ground).unwrap();
    let s = &r.observables.samples;
    let n2 = (s[0].n2, s.last().unwrap().n2);
    assert!((n2.1 / n2.0 - 1.0).abs() < 1e-10);
    let fit = fit_exponential_decay(&r.observables.n2_series(), 0.0).unwrap();
    assert!(fit.tau.abs() > 1e3);
}

#[test]
fn sweep_validates_fields_and_sorts_its_table() {
    let (cfg, ground) = prepared();
    let tl = cfg.timeline.with_storage(0.03);
    assert!(sweep_bias_field(&cfg.setup, &tl, ground, &[132.4], 0.0, 1).is_err());
    assert!(matches!(
        sweep_bias_field(&cfg.setup, &tl, ground, &[132.4, 140.0], 0.0, 1),
        Err(Error::FieldOutOfWindow { .. })
    ));
    let table = sweep_bias_field(&cfg.setup, &tl, ground, &[133.0, 132.36, 131.8], 0.0, 2).unwrap();
    let fields: Vec<f64> = table.iter().map(|p| p.bias_field).collect();
    assert_eq!(fields, vec![131.8, 132.36, 133.0]);
    assert_eq!(argmax_tau(&table), Some(132.36));
    assert!(table[2].fit.tau < table[0].fit.tau);
}
