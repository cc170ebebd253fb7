//! The write → store → steer → read experiment.
//!
//! A run starts from a ψ₁ ground state, imprints the stopped probe onto ψ₂,
//! evolves both components through the storage segments (bias field and
//! gradient held constant within each) and finally applies the read-out
//! accounting of [`readout`]. Storage series reuse one evolution and read out
//! at every requested time; they agree with separate runs to rounding.

pub mod fit;
pub mod readout;
pub mod timeline;

use std::sync::Arc;

pub use fit::{fit_exponential_decay, DecayFit};
pub use readout::{read_out, ReadoutGeometry, RevivalResult};
pub use timeline::{ProtocolTimeline, Reservoir, Segment};

use crate::eit::{write_imprint, DarkStateGeometry, Placement, PulseSpec};
use crate::error::{Error, Result};
use crate::gpe::observables::{center_of_mass_z, overlap};
use crate::gpe::{ground_state, GroundState, GroundStateOptions, Propagator, TrapConfig};
use crate::grid::{ComplexField, Grid};
use crate::scattering::{scattering_at_field, CouplingCoefficients, ScatteringModel};
use crate::units::PhysicalConstants;
use timeline::segment_steps;

/// Everything a run needs besides its timeline.
#[derive(Debug, Clone)]
pub struct Setup {
    pub consts: PhysicalConstants,
    pub grid: Arc<Grid>,
    pub scattering: ScatteringModel,
    /// Dimensional-reduction factor applied to the 3D couplings.
    pub reduction: f64,
    pub atoms: f64,
    /// Trap without gradient; the timeline supplies dB/dz.
    pub trap: TrapConfig,
    pub ground: GroundStateOptions,
    /// Field at which the ground state is prepared, G.
    pub preparation_field: f64,
    pub probe: PulseSpec,
    pub write_coupling: PulseSpec,
    pub read_coupling: PulseSpec,
    pub dark_state: DarkStateGeometry,
    pub placement: Placement,
    pub group_velocity: f64,
    pub readout: ReadoutGeometry,
    /// Real-time step, s.
    pub dt: f64,
}

impl Setup {
    pub fn couplings_at(&self, field: f64) -> Result<CouplingCoefficients> {
        let p = scattering_at_field(&self.scattering, field)?;
        Ok(CouplingCoefficients::from_params(&p, &self.consts, self.reduction))
    }

    pub fn prepare_ground_state(&self) -> Result<GroundState> {
        let c = self.couplings_at(self.preparation_field)?;
        ground_state(self.grid.clone(), &self.trap, &c, &self.consts, self.atoms, &self.ground)
    }

    /// Writes the probe into `ground`, returning (ψ₁, ψ₂, input proxy).
    pub fn write(&self, ground: &ComplexField) -> Result<(ComplexField, ComplexField, f64)> {
        let (psi1, psi2) = write_imprint(
            ground,
            &self.probe,
            &self.write_coupling,
            &self.dark_state,
            &self.placement,
            self.group_velocity,
        )?;
        let input = readout::input_proxy(ground, &psi2, self.readout.attenuation);
        Ok((psi1, psi2, input))
    }

    /// Sets the attenuation coefficient so that the full central column of
    /// `ground` transmits `transmission`.
    pub fn calibrate_attenuation(&mut self, ground: &ComplexField, transmission: f64) -> Result<f64> {
        let alpha = crate::eit::calibrate_attenuation(readout::central_column(ground), transmission)?;
        self.readout.attenuation = alpha;
        Ok(alpha)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservableSample {
    pub t: f64,
    pub n1: f64,
    pub n2: f64,
    /// z centre of mass of ψ₂ (NaN once ψ₂ is empty).
    pub com_z: f64,
    pub overlap: f64,
}

impl ObservableSample {
    pub fn measure(t: f64, psi1: &ComplexField, psi2: &ComplexField) -> Self {
        Self {
            t,
            n1: psi1.norm(),
            n2: psi2.norm(),
            com_z: center_of_mass_z(psi2).unwrap_or(f64::NAN),
            overlap: overlap(psi1, psi2),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimObservables {
    pub samples: Vec<ObservableSample>,
}

impl SimObservables {
    pub fn n2_series(&self) -> Vec<(f64, f64)> {
        self.samples.iter().map(|s| (s.t, s.n2)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub time: f64,
    pub psi1: ComplexField,
    pub psi2: ComplexField,
}

#[derive(Debug, Clone)]
pub struct ProtocolRun {
    pub observables: SimObservables,
    /// One read-out per requested storage time, in the requested order.
    pub revivals: Vec<RevivalResult>,
    pub snapshots: Vec<Snapshot>,
}

impl ProtocolRun {
    pub fn revival(&self) -> &RevivalResult {
        self.revivals.last().expect("at least one read-out")
    }
}

/// Step index (from the start of storage) closest to time `t`.
fn step_at(segments: &[Segment], steps: &[u64], dt: f64, t: f64) -> u64 {
    let mut start = 0.0;
    let mut offset = 0;
    for (s, &n) in segments.iter().zip(steps) {
        let end = start + s.duration;
        if t <= end {
            return offset + ((t - start) / dt).round().min(n as f64) as u64;
        }
        start = end;
        offset += n;
    }
    offset
}

/// Runs one storage evolution and reads out at each of `read_times`.
pub fn run_storage_series(
    setup: &Setup,
    timeline: &ProtocolTimeline,
    ground: &ComplexField,
    read_times: &[f64],
) -> Result<ProtocolRun> {
    timeline.validate()?;
    setup.readout.validate()?;
    let end = timeline.storage_duration();
    if read_times.is_empty() {
        return Err(Error::Timeline("no read-out times".into()));
    }
    for &t in read_times {
        if !(0.0..=end * (1.0 + 1e-12)).contains(&t) {
            return Err(Error::Timeline(format!("read-out at {t} s outside storage [0, {end}] s")));
        }
    }
    let dt = setup.dt;
    let segments = &timeline.segments;
    let steps = segment_steps(segments, dt);
    let total: u64 = steps.iter().sum();
    let mark = |t: f64| step_at(segments, &steps, dt, t);
    let reads: Vec<u64> = read_times.iter().map(|&t| mark(t)).collect();
    let snaps: Vec<u64> = timeline.snapshot_times.iter().map(|&t| mark(t)).collect();
    let sample_every = ((timeline.sample_interval / dt).round() as u64).max(1);

    let (mut psi1, mut psi2, input) = setup.write(ground)?;
    let fraction = timeline.reservoir.fraction();
    let mut revivals: Vec<Option<RevivalResult>> = vec![None; reads.len()];
    let mut snapshots = Vec::new();
    let mut observables = SimObservables::default();

    let first = &segments[0];
    let mut prop = Propagator::new(
        setup.grid.clone(),
        setup.consts,
        &crate::gpe::add_gradient(&setup.trap, first.gradient),
        setup.couplings_at(first.bias_field)?,
        dt,
    )?;
    let mut seg = 0;
    let mut seg_end = steps[0];
    let mut current = *first;
    let mut step = 0u64;
    loop {
        let t = step as f64 * dt;
        if step.is_multiple_of(sample_every) || step == total {
            observables.samples.push(ObservableSample::measure(t, &psi1, &psi2));
        }
        for (k, &r) in reads.iter().enumerate() {
            if r == step {
                revivals[k] =
                    Some(read_out(&psi1, &psi2, &setup.read_coupling, &setup.readout, input, fraction)?);
            }
        }
        if snaps.contains(&step) {
            snapshots.push(Snapshot { time: t, psi1: psi1.clone(), psi2: psi2.clone() });
        }
        if step == total {
            break;
        }
        while step == seg_end && seg + 1 < segments.len() {
            seg += 1;
            seg_end += steps[seg];
            let next = segments[seg];
            if next.bias_field != current.bias_field {
                prop.set_couplings(setup.couplings_at(next.bias_field)?);
            }
            if next.gradient != current.gradient {
                prop.set_trap(&crate::gpe::add_gradient(&setup.trap, next.gradient));
            }
            current = next;
        }
        let next_sample = (step / sample_every + 1) * sample_every;
        let next = reads
            .iter()
            .chain(&snaps)
            .copied()
            .filter(|&r| r > step)
            .chain([next_sample, seg_end.max(step + 1), total])
            .min()
            .expect("total bounds the next event");
        prop.run(&mut psi1, &mut psi2, next - step)?;
        step = next;
    }
    Ok(ProtocolRun {
        observables,
        revivals: revivals.into_iter().map(|r| r.expect("every read step is visited")).collect(),
        snapshots,
    })
}

/// Full protocol with a single read-out at the end of storage.
pub fn run_protocol(setup: &Setup, timeline: &ProtocolTimeline, ground: &ComplexField) -> Result<ProtocolRun> {
    run_storage_series(setup, timeline, ground, &[timeline.storage_duration()])
}

/// Read-out with the |1⟩ reservoir transferred away (or otherwise flagged).
pub fn control_without_psi1(
    setup: &Setup,
    timeline: &ProtocolTimeline,
    ground: &ComplexField,
    reservoir: Reservoir,
) -> Result<RevivalResult> {
    let t = ProtocolTimeline { reservoir, ..timeline.clone() };
    Ok(run_protocol(setup, &t, ground)?.revival().clone())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub bias_field: f64,
    pub fit: DecayFit,
}

/// Decay time of N₂ versus bias field. Runs are independent and spread over
/// `jobs` threads; the table is sorted by field.
pub fn sweep_bias_field(
    setup: &Setup,
    timeline: &ProtocolTimeline,
    ground: &ComplexField,
    fields: &[f64],
    skip_before: f64,
    jobs: usize,
) -> Result<Vec<SweepPoint>> {
    if fields.len() < 2 {
        return Err(Error::Config(format!("a sweep needs at least 2 field values, got {}", fields.len())));
    }
    for &b in fields {
        let (lo, hi) = setup.scattering.window;
        if !(b >= lo && b <= hi) {
            return Err(Error::FieldOutOfWindow { field: b, lo, hi });
        }
    }
    let run = |b: f64| -> Result<SweepPoint> {
        let r = run_protocol(setup, &timeline.with_bias_field(b), ground)?;
        let fit = fit_exponential_decay(&r.observables.n2_series(), skip_before)?;
        log::info!("B = {b} G: tau = {:.4} s", fit.tau);
        Ok(SweepPoint { bias_field: b, fit })
    };
    let jobs = jobs.clamp(1, fields.len());
    let mut results: Vec<Option<Result<SweepPoint>>> = (0..fields.len()).map(|_| None).collect();
    if jobs == 1 {
        for (slot, &b) in results.iter_mut().zip(fields) {
            *slot = Some(run(b));
        }
    } else {
        let chunk = fields.len().div_ceil(jobs);
        std::thread::scope(|s| {
            for (slots, bs) in results.chunks_mut(chunk).zip(fields.chunks(chunk)) {
                let run = &run;
                s.spawn(move || {
                    for (slot, &b) in slots.iter_mut().zip(bs) {
                        *slot = Some(run(b));
                    }
                });
            }
        });
    }
    let mut table = results.into_iter().map(|r| r.expect("all sweep points run")).collect::<Result<Vec<_>>>()?;
    table.sort_by(|a, b| a.bias_field.total_cmp(&b.bias_field));
    Ok(table)
}

/// Field in `table` with the largest decay time.
pub fn argmax_tau(table: &[SweepPoint]) -> Option<f64> {
    table.iter().max_by(|a, b| a.fit.tau.total_cmp(&b.fit.tau)).map(|p| p.bias_field)
}

/// Finds the loss slope for which the N₂ decay of `timeline` fits to
/// `target_tau`. τ scales close to 1/slope, so a few secant steps on
/// (ln slope, ln τ) suffice. Returns the slope and the fit it produced.
pub fn calibrate_loss_slope(
    setup: &Setup,
    timeline: &ProtocolTimeline,
    ground: &ComplexField,
    target_tau: f64,
    tolerance: f64,
    max_iterations: usize,
) -> Result<(f64, DecayFit)> {
    let tau_for = |slope: f64| -> Result<DecayFit> {
        let mut s = setup.clone();
        s.scattering.slope = slope;
        let r = run_protocol(&s, timeline, ground)?;
        fit_exponential_decay(&r.observables.n2_series(), 0.0)
    };
    let mut x0 = setup.scattering.slope.ln();
    let mut f0 = tau_for(x0.exp())?;
    if (f0.tau / target_tau - 1.0).abs() < tolerance {
        return Ok((x0.exp(), f0));
    }
    let mut x1 = x0 + (f0.tau / target_tau).ln();
    for _ in 0..max_iterations {
        let f1 = tau_for(x1.exp())?;
        log::info!("loss slope {:e} m/G: tau = {:.4} s", x1.exp(), f1.tau);
        if (f1.tau / target_tau - 1.0).abs() < tolerance {
            return Ok((x1.exp(), f1));
        }
        let (y0, y1) = (f0.tau.ln() - target_tau.ln(), f1.tau.ln() - target_tau.ln());
        let x2 = if y1 != y0 { x1 - y1 * (x1 - x0) / (y1 - y0) } else { x1 + y1 };
        x0 = x1;
        f0 = f1;
        x1 = x2;
    }
    Err(Error::Fit(format!("loss slope calibration did not reach tau = {target_tau} s")))
}
