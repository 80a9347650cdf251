use dlra_core::Parity;
use dlra_quantum::{ground_state_drive, laser_drive, GroundStateConfig, LaserConfig};

#[test]
fn bosons_settle_below_fermions() {
    let bosons = ground_state_drive(&GroundStateConfig::desk(Parity::Symmetric)).unwrap();
    let fermions = ground_state_drive(&GroundStateConfig::desk(Parity::Anti)).unwrap();
    assert!(bosons.failure.is_none() && fermions.failure.is_none());
    assert_eq!(fermions.records.len(), 501);
    assert!(fermions.final_energy() - bosons.final_energy() > 0.0);
    for run in [&bosons, &fermions] {
        for pair in run.records[50..].windows(2) {
            assert!(pair[1].energy <= pair[0].energy + 1e-6, "step {}", pair[1].step);
        }
        assert!(run.records[1..].iter().all(|r| r.parity_defect == 0.0));
    }
}

#[test]
fn scrub_interval_is_honored() {
    let mut cfg = GroundStateConfig::desk(Parity::Anti);
    cfg.t_final = 0.1;
    cfg.scrub_every = 3;
    let run = ground_state_drive(&cfg).unwrap();
    for r in &run.records[1..] {
        if r.step % 3 == 0 {
            assert_eq!(r.parity_defect, 0.0);
        } else {
            assert!(r.parity_defect <= 1e-10);
        }
    }
    assert!(run.records[1..].iter().any(|r| r.step % 3 != 0 && r.parity_defect > 0.0));
}

#[test]
fn drive_is_deterministic() {
    let mut cfg = GroundStateConfig::desk(Parity::Anti);
    cfg.t_final = 0.2;
    let a = ground_state_drive(&cfg).unwrap();
    let b = ground_state_drive(&cfg).unwrap();
    assert_eq!(a.records, b.records);
}

#[test]
fn overflowing_step_stops_the_drive() {
    let mut cfg = GroundStateConfig::desk(Parity::Anti);
    cfg.h = 2000.0;
    cfg.t_final = 4000.0;
    let run = ground_state_drive(&cfg).unwrap();
    assert!(run.failure.is_some());
    assert_eq!(run.records.len(), 1);
}

#[test]
fn invalid_configs_are_rejected() {
    let mut cfg = GroundStateConfig::desk(Parity::Anti);
    cfg.h = 0.03;
    assert!(ground_state_drive(&cfg).is_err());
    let mut cfg = GroundStateConfig::desk(Parity::Anti);
    cfg.r = 2;
    assert!(ground_state_drive(&cfg).is_err());
    let mut cfg = GroundStateConfig::desk(Parity::Anti);
    cfg.k = 24;
    assert!(ground_state_drive(&cfg).is_err());
}

#[test]
fn laser_pulse_does_work() {
    let ground = ground_state_drive(&GroundStateConfig::desk(Parity::Anti)).unwrap();
    let drift = |a0: f64| {
        let mut cfg = LaserConfig::reference();
        cfg.pulse.a0 = a0;
        let run = laser_drive(&cfg, &ground.state).unwrap();
        assert!(run.failure.is_none());
        assert_eq!(run.records.len(), 201);
        let e0 = run.records[0].energy;
        run.records.iter().map(|r| (r.energy - e0).abs()).fold(0.0, f64::max)
    };
    let undriven = drift(0.0);
    let driven = drift(100.0);
    assert!(undriven <= 1e-4, "undriven drift {undriven:e}");
    assert!(driven > 10.0 * undriven, "driven {driven:e}, undriven {undriven:e}");
}
