//! Classical Monte Carlo of a trapped atom in the square-wave-chopped
//! Gaussian dipole potential: survival curves, lifetime vs chopping
//! frequency, and secular-frequency analysis of the time-averaged trap.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use rustfft::{num_complex::Complex64, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::constants::KB;
use crate::error::{Error, Result};
use crate::species::AtomSpecies;
use crate::trap::{self, BeamGeometry};

/// Square-wave modulation of the trap light.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChopWaveform {
    /// Chopping frequency, Hz.
    pub frequency: f64,
    /// On fraction of each period, in (0, 1).
    pub duty_cycle: f64,
    /// Time offset of the first on-phase edge, s.
    pub phase_offset: f64,
}

impl ChopWaveform {
    pub fn new(frequency: f64, duty_cycle: f64, phase_offset: f64) -> Result<Self> {
        if !(frequency > 0.0) {
            return Err(Error::Domain(format!(
                "chop frequency must be positive, got {frequency}"
            )));
        }
        if !(duty_cycle > 0.0 && duty_cycle < 1.0) {
            return Err(Error::Domain(format!(
                "duty cycle must lie in (0, 1), got {duty_cycle}"
            )));
        }
        Ok(Self {
            frequency,
            duty_cycle,
            phase_offset,
        })
    }

    /// A waveform that is on (almost) always; used for static-trap checks.
    pub fn static_trap() -> Self {
        Self {
            frequency: 1.0,
            duty_cycle: 1.0 - 1e-12,
            phase_offset: 0.0,
        }
    }

    pub fn period(&self) -> f64 {
        1.0 / self.frequency
    }
}

/// Square-wave state: 1 during the on fraction of each period, 0 otherwise.
/// Each period starts with the on phase at `phase_offset`.
pub fn chop_state(waveform: &ChopWaveform, t: f64) -> u8 {
    let phase = ((t - waveform.phase_offset) * waveform.frequency).rem_euclid(1.0);
    u8::from(phase < waveform.duty_cycle)
}

/// Settings for classical trajectory integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryConfig {
    /// Integrator step, s.
    pub time_step: f64,
    /// Integration horizon, s.
    pub max_time: f64,
    /// Loss radius in multiples of (w0 radially, zR axially). Must be >= 3.
    pub loss_radius_factor: f64,
    /// Background-gas collision rate, 1/s.
    pub background_gas_rate: f64,
    /// Optional viscous friction -beta*v, 1/s. Default 0 (no cooling model).
    pub friction_coefficient: f64,
    /// Master seed for stochastic channels.
    pub rng_seed: u64,
}

impl TrajectoryConfig {
    pub fn new(time_step: f64, max_time: f64, rng_seed: u64) -> Result<Self> {
        if !(time_step > 0.0) || !(max_time > 0.0) {
            return Err(Error::Config(format!(
                "time_step and max_time must be positive, got {time_step}, {max_time}"
            )));
        }
        Ok(Self {
            time_step,
            max_time,
            loss_radius_factor: 5.0,
            background_gas_rate: 0.0,
            friction_coefficient: 0.0,
            rng_seed,
        })
    }

    /// Checks the step-size invariant against the waveform and the radial
    /// trap frequency: dt <= min(1/(50 f_chop), 1/(100 f_r)).
    pub fn validate_step(&self, waveform: &ChopWaveform, radial_frequency: f64) -> Result<()> {
        let limit = (1.0 / (50.0 * waveform.frequency)).min(1.0 / (100.0 * radial_frequency));
        if self.time_step > limit {
            return Err(Error::Config(format!(
                "time_step {:.3e} s exceeds stability limit {:.3e} s",
                self.time_step, limit
            )));
        }
        if self.loss_radius_factor < 3.0 {
            return Err(Error::Config(format!(
                "loss_radius_factor must be >= 3, got {}",
                self.loss_radius_factor
            )));
        }
        Ok(())
    }

    /// Largest step satisfying the invariant for the given waveform/trap.
    pub fn recommended_step(waveform: &ChopWaveform, radial_frequency: f64) -> f64 {
        (1.0 / (50.0 * waveform.frequency)).min(1.0 / (100.0 * radial_frequency))
    }
}

/// Instantaneous state of one atom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomState {
    /// Position, m.
    pub position: [f64; 3],
    /// Velocity, m/s.
    pub velocity: [f64; 3],
    pub alive: bool,
    /// Set iff `alive` is false.
    pub loss_time: Option<f64>,
}

impl AtomState {
    pub fn at_rest() -> Self {
        Self {
            position: [0.0; 3],
            velocity: [0.0; 3],
            alive: true,
            loss_time: None,
        }
    }
}

/// Why a trajectory ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrajectoryOutcome {
    /// Alive at `max_time`.
    Survived,
    /// Positive time-averaged energy outside the loss radius.
    Escaped,
    /// Background-gas collision event.
    GasCollision,
}

/// Decimated history of one trajectory.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Time between stored samples, s.
    pub sample_dt: f64,
    pub positions: Vec<[f64; 3]>,
    pub velocities: Vec<[f64; 3]>,
    pub final_state: AtomState,
    pub outcome: TrajectoryOutcome,
}

/// Shared per-run integration context.
struct Force<'a> {
    geometry: &'a BeamGeometry,
    coefficient: f64,
    mass: f64,
    duty: f64,
    loss_r2: f64,
    loss_z: f64,
}

impl<'a> Force<'a> {
    fn new(
        species: &AtomSpecies,
        geometry: &'a BeamGeometry,
        waveform: &ChopWaveform,
        loss_radius_factor: f64,
    ) -> Result<Self> {
        let coefficient = trap::shift_coefficient(species, geometry)?;
        let zr = geometry.rayleigh_range();
        Ok(Self {
            geometry,
            coefficient,
            mass: species.mass,
            duty: waveform.duty_cycle,
            loss_r2: (loss_radius_factor * geometry.waist_w0).powi(2),
            loss_z: loss_radius_factor * zr,
        })
    }

    /// Acceleration from the full-power potential, m/s².
    fn acceleration(&self, p: &[f64; 3]) -> [f64; 3] {
        let g = trap::dipole_force_gradient(self.coefficient, self.geometry, p[0], p[1], p[2]);
        [-g[0] / self.mass, -g[1] / self.mass, -g[2] / self.mass]
    }

    fn potential(&self, p: &[f64; 3]) -> f64 {
        -self.coefficient
            * trap::beam_intensity(self.geometry, (p[0] * p[0] + p[1] * p[1]).sqrt(), p[2])
    }

    /// Total energy in the time-averaged potential (duty-weighted), J.
    fn averaged_energy(&self, state: &AtomState) -> f64 {
        let v2: f64 = state.velocity.iter().map(|v| v * v).sum();
        0.5 * self.mass * v2 + self.duty * self.potential(&state.position)
    }

    fn outside_loss_radius(&self, p: &[f64; 3]) -> bool {
        let dz = p[2] - self.geometry.focus_position;
        p[0] * p[0] + p[1] * p[1] > self.loss_r2 || dz.abs() > self.loss_z
    }
}

/// One velocity-Verlet step with optional viscous friction. The chop state
/// gates the dipole force at the force-evaluation times.
#[allow(clippy::too_many_arguments)]
fn verlet_step(
    force: &Force,
    waveform: &ChopWaveform,
    beta: f64,
    state: &mut AtomState,
    acc: &mut [f64; 3],
    t: f64,
    dt: f64,
) {
    let half = 0.5 * dt;
    let mut v_half = [0.0; 3];
    for i in 0..3 {
        v_half[i] = state.velocity[i] + half * (acc[i] - beta * state.velocity[i]);
        state.position[i] += v_half[i] * dt;
    }
    let s_next = f64::from(chop_state(waveform, t + dt));
    let a_next = if s_next > 0.0 {
        let a = force.acceleration(&state.position);
        [a[0] * s_next, a[1] * s_next, a[2] * s_next]
    } else {
        [0.0; 3]
    };
    let denom = 1.0 + beta * half;
    for i in 0..3 {
        state.velocity[i] = (v_half[i] + half * a_next[i]) / denom;
        acc[i] = a_next[i];
    }
}

/// Runs one atom until loss or the horizon; returns the loss time (None if
/// it survived). Lean path shared by the ensemble drivers.
fn run_to_loss(
    force: &Force,
    waveform: &ChopWaveform,
    config: &TrajectoryConfig,
    state0: &AtomState,
    gas_loss_time: Option<f64>,
) -> (AtomState, TrajectoryOutcome) {
    let dt = config.time_step;
    let beta = config.friction_coefficient;
    let steps = (config.max_time / dt).ceil() as u64;
    let mut state = *state0;
    let mut acc = if chop_state(waveform, 0.0) == 1 {
        force.acceleration(&state.position)
    } else {
        [0.0; 3]
    };
    for n in 0..steps {
        let t = n as f64 * dt;
        if let Some(t_gas) = gas_loss_time {
            if t_gas <= t {
                state.alive = false;
                state.loss_time = Some(t_gas);
                return (state, TrajectoryOutcome::GasCollision);
            }
        }
        verlet_step(force, waveform, beta, &mut state, &mut acc, t, dt);
        if force.outside_loss_radius(&state.position) && force.averaged_energy(&state) > 0.0 {
            state.alive = false;
            state.loss_time = Some(t + dt);
            return (state, TrajectoryOutcome::Escaped);
        }
    }
    (state, TrajectoryOutcome::Survived)
}

/// Integrates one trajectory, recording a decimated history.
///
/// The atom moves in `U(r,z)·s(t)` under velocity-Verlet integration. It is
/// declared lost when its total energy in the time-averaged potential is
/// positive AND it sits outside the loss radius. If
/// `config.background_gas_rate > 0`, an independent exponential collision
/// time is drawn from the trajectory RNG and truncates the trajectory.
pub fn integrate_trajectory(
    state0: &AtomState,
    waveform: &ChopWaveform,
    geometry: &BeamGeometry,
    species: &AtomSpecies,
    config: &TrajectoryConfig,
) -> Result<Trajectory> {
    let (radial_frequency, _) = trap::trap_frequencies(species, geometry)?;
    config.validate_step(waveform, radial_frequency)?;
    self_test_energy_drift(species, geometry, config)?;
    let force = Force::new(species, geometry, waveform, config.loss_radius_factor)?;

    let gas_loss_time = draw_gas_loss_time(config, config.rng_seed, 0);

    let dt = config.time_step;
    let steps = (config.max_time / dt).ceil() as u64;
    // keep histories to ~2^17 samples so long runs stay small
    let decimate = (steps / (1 << 17)).max(1);
    let beta = config.friction_coefficient;

    let mut state = *state0;
    let mut acc = if chop_state(waveform, 0.0) == 1 {
        force.acceleration(&state.position)
    } else {
        [0.0; 3]
    };
    let mut positions = vec![state.position];
    let mut velocities = vec![state.velocity];
    let mut outcome = TrajectoryOutcome::Survived;
    for n in 0..steps {
        let t = n as f64 * dt;
        if let Some(t_gas) = gas_loss_time {
            if t_gas <= t {
                state.alive = false;
                state.loss_time = Some(t_gas);
                outcome = TrajectoryOutcome::GasCollision;
                break;
            }
        }
        verlet_step(&force, waveform, beta, &mut state, &mut acc, t, dt);
        if (n + 1) % decimate == 0 {
            positions.push(state.position);
            velocities.push(state.velocity);
        }
        if force.outside_loss_radius(&state.position) && force.averaged_energy(&state) > 0.0 {
            state.alive = false;
            state.loss_time = Some(t + dt);
            outcome = TrajectoryOutcome::Escaped;
            break;
        }
    }
    Ok(Trajectory {
        sample_dt: dt * decimate as f64,
        positions,
        velocities,
        final_state: state,
        outcome,
    })
}

fn draw_gas_loss_time(config: &TrajectoryConfig, master_seed: u64, index: u64) -> Option<f64> {
    if config.background_gas_rate > 0.0 {
        let mut rng = derived_rng(master_seed, index);
        let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        Some(-u.ln() / config.background_gas_rate)
    } else {
        None
    }
}

/// Deterministic per-trajectory RNG stream; parallel execution over
/// trajectories cannot change results.
pub(crate) fn derived_rng(master_seed: u64, index: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
    rng.set_stream(index.wrapping_add(1));
    rng
}

/// Draws `n` atoms with Maxwell-Boltzmann velocities and positions
/// Boltzmann-distributed in the harmonic approximation of the full-depth
/// trap.
pub fn sample_thermal_ensemble(
    temperature: f64,
    geometry: &BeamGeometry,
    species: &AtomSpecies,
    n: usize,
    seed: u64,
) -> Result<Vec<AtomState>> {
    if temperature < 0.0 {
        return Err(Error::Domain(format!(
            "temperature must be non-negative, got {temperature}"
        )));
    }
    let depth = trap::trap_depth(species, geometry)?;
    if temperature >= depth {
        return Err(Error::Domain(format!(
            "temperature {temperature} K is not below the trap depth {depth} K"
        )));
    }
    if temperature == 0.0 {
        return Ok(vec![AtomState::at_rest(); n]);
    }
    let (fr, fz) = trap::trap_frequencies(species, geometry)?;
    let kt = KB * temperature;
    let sigma_v = (kt / species.mass).sqrt();
    let sigma_r = sigma_v / (TAU * fr);
    let sigma_z = sigma_v / (TAU * fz);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut rng = derived_rng(seed, 0);
    let mut ensemble = Vec::with_capacity(n);
    for _ in 0..n {
        let position = [
            sigma_r * normal.sample(&mut rng),
            sigma_r * normal.sample(&mut rng),
            geometry.focus_position + sigma_z * normal.sample(&mut rng),
        ];
        let velocity = [
            sigma_v * normal.sample(&mut rng),
            sigma_v * normal.sample(&mut rng),
            sigma_v * normal.sample(&mut rng),
        ];
        ensemble.push(AtomState {
            position,
            velocity,
            alive: true,
            loss_time: None,
        });
    }
    Ok(ensemble)
}

/// Survival fraction on a time grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurvivalCurve {
    /// Grid times, s.
    pub times: Vec<f64>,
    /// Surviving fraction at each grid time (gas factor included).
    pub fractions: Vec<f64>,
    /// Mechanical loss times of the lost atoms, s.
    pub loss_times: Vec<f64>,
    pub n_atoms: usize,
}

/// Simulates the ensemble and returns the survival curve on `n_grid`
/// equally spaced times up to `config.max_time`.
///
/// Mechanical (heating) loss comes from the trajectories; background-gas
/// loss is applied analytically as a multiplicative exp(-rate*t) so the
/// statistics stay independent of the step size.
pub fn survival_curve(
    ensemble: &[AtomState],
    waveform: &ChopWaveform,
    geometry: &BeamGeometry,
    species: &AtomSpecies,
    config: &TrajectoryConfig,
    n_grid: usize,
) -> Result<SurvivalCurve> {
    if ensemble.is_empty() {
        return Err(Error::Domain("survival_curve: empty ensemble".into()));
    }
    let (radial_frequency, _) = trap::trap_frequencies(species, geometry)?;
    config.validate_step(waveform, radial_frequency)?;
    self_test_energy_drift(species, geometry, config)?;
    let force = Force::new(species, geometry, waveform, config.loss_radius_factor)?;

    let loss_times: Vec<Option<f64>> = ensemble
        .par_iter()
        .map(|state0| {
            let (state, _) = run_to_loss(&force, waveform, config, state0, None);
            state.loss_time
        })
        .collect();

    let mut lost: Vec<f64> = loss_times.iter().flatten().copied().collect();
    lost.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let n = ensemble.len();
    let times: Vec<f64> = (0..n_grid)
        .map(|i| config.max_time * (i + 1) as f64 / n_grid as f64)
        .collect();
    let fractions = times
        .iter()
        .map(|&t| {
            let lost_by_t = lost.partition_point(|&lt| lt <= t);
            let mechanical = (n - lost_by_t) as f64 / n as f64;
            mechanical * (-config.background_gas_rate * t).exp()
        })
        .collect();
    Ok(SurvivalCurve {
        times,
        fractions,
        loss_times: lost,
        n_atoms: n,
    })
}

/// One fitted point of the lifetime-vs-chopping-frequency curve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LifetimePoint {
    pub frequency: f64,
    /// 1/e lifetime, s; None if the fit failed.
    pub lifetime: Option<f64>,
    /// Standard error of the fitted lifetime, s.
    pub fit_error: Option<f64>,
    /// Survival fraction at the horizon.
    pub final_survival: f64,
}

/// Fits exp(-t/tau) to a survival curve by regressing -ln S on t through
/// the origin. Returns (tau, standard error).
pub fn fit_exponential_lifetime(curve: &SurvivalCurve) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> = curve
        .times
        .iter()
        .zip(&curve.fractions)
        .filter(|(_, &s)| s > 0.0 && s < 1.0 + 1e-12)
        .map(|(&t, &s)| (t, -s.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::Estimation(
            "lifetime fit needs at least two points with 0 < S <= 1".into(),
        ));
    }
    let sxx: f64 = pts.iter().map(|(t, _)| t * t).sum();
    let sxy: f64 = pts.iter().map(|(t, y)| t * y).sum();
    if sxy <= 0.0 {
        return Err(Error::Estimation(
            "lifetime fit: no measurable decay".into(),
        ));
    }
    let slope = sxy / sxx;
    let residual_var: f64 = pts
        .iter()
        .map(|(t, y)| (y - slope * t).powi(2))
        .sum::<f64>()
        / (pts.len() as f64 - 1.0).max(1.0);
    let slope_err = (residual_var / sxx).sqrt();
    let tau = 1.0 / slope;
    Ok((tau, slope_err * tau * tau))
}

/// Runs `survival_curve` at each frequency (with a freshly sampled but
/// seed-identical ensemble) and fits the lifetime per point. Fit failures
/// are reported in the point, not raised.
#[allow(clippy::too_many_arguments)]
pub fn lifetime_vs_chop(
    frequencies: &[f64],
    duty_cycle: f64,
    temperature: f64,
    n_atoms: usize,
    geometry: &BeamGeometry,
    species: &AtomSpecies,
    config: &TrajectoryConfig,
    n_grid: usize,
) -> Result<Vec<(LifetimePoint, SurvivalCurve)>> {
    if frequencies.is_empty() {
        return Err(Error::Domain("lifetime_vs_chop: empty frequency list".into()));
    }
    let ensemble = sample_thermal_ensemble(temperature, geometry, species, n_atoms, config.rng_seed)?;
    let (radial_frequency, _) = trap::trap_frequencies(species, geometry)?;
    let mut out = Vec::with_capacity(frequencies.len());
    for &frequency in frequencies {
        let waveform = ChopWaveform::new(frequency, duty_cycle, 0.0)?;
        let mut cfg = *config;
        cfg.time_step = cfg
            .time_step
            .min(TrajectoryConfig::recommended_step(&waveform, radial_frequency));
        let curve = survival_curve(&ensemble, &waveform, geometry, species, &cfg, n_grid)?;
        let (lifetime, fit_error) = match fit_exponential_lifetime(&curve) {
            Ok((tau, err)) => (Some(tau), Some(err)),
            Err(_) => (None, None),
        };
        out.push((
            LifetimePoint {
                frequency,
                lifetime,
                fit_error,
                final_survival: *curve.fractions.last().unwrap(),
            },
            curve,
        ));
    }
    Ok(out)
}

/// Dominant oscillation frequency of the radial coordinate of a
/// trajectory, from the windowed periodogram with parabolic peak
/// interpolation.
pub fn secular_frequency(trajectory: &Trajectory) -> Result<f64> {
    let samples: Vec<f64> = trajectory.positions.iter().map(|p| p[0]).collect();
    spectral_peak(&samples, trajectory.sample_dt)
}

/// Frequency of the dominant spectral peak of a real-valued series.
pub fn spectral_peak(samples: &[f64], sample_dt: f64) -> Result<f64> {
    let n = samples.len();
    if n < 16 {
        return Err(Error::Estimation(
            "spectral peak needs at least 16 samples".into(),
        ));
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex64> = samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            // Hann window
            let w = 0.5 * (1.0 - (TAU * i as f64 / (n - 1) as f64).cos());
            Complex64::new((x - mean) * w, 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    let mags: Vec<f64> = buf[..half].iter().map(|c| c.norm()).collect();
    let (peak_bin, peak_mag) = mags
        .iter()
        .enumerate()
        .skip(1)
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, &m)| (i, m))
        .ok_or_else(|| Error::Estimation("empty spectrum".into()))?;
    let mut sorted = mags.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = sorted[half / 2];
    if peak_bin == 0 || peak_bin + 1 >= half || peak_mag < 5.0 * median.max(f64::MIN_POSITIVE) {
        return Err(Error::Estimation("no clear spectral peak".into()));
    }
    // parabolic interpolation on log magnitude
    let (a, b, c) = (
        mags[peak_bin - 1].max(1e-300).ln(),
        mags[peak_bin].max(1e-300).ln(),
        mags[peak_bin + 1].max(1e-300).ln(),
    );
    let denom = a - 2.0 * b + c;
    let delta = if denom.abs() > 1e-300 {
        0.5 * (a - c) / denom
    } else {
        0.0
    };
    Ok((peak_bin as f64 + delta) / (n as f64 * sample_dt))
}

/// Integrates a small-amplitude probe atom and returns its secular
/// frequency. The probe starts at `amplitude` along x, at rest.
pub fn probe_secular_frequency(
    waveform: &ChopWaveform,
    geometry: &BeamGeometry,
    species: &AtomSpecies,
    config: &TrajectoryConfig,
    amplitude: f64,
) -> Result<f64> {
    let mut state = AtomState::at_rest();
    state.position = [amplitude, 0.0, geometry.focus_position];
    let trajectory = integrate_trajectory(&state, waveform, geometry, species, config)?;
    secular_frequency(&trajectory)
}

/// Total energy of a state in the full-power static potential, J.
pub fn static_energy(species: &AtomSpecies, geometry: &BeamGeometry, state: &AtomState) -> Result<f64> {
    let coefficient = trap::shift_coefficient(species, geometry)?;
    let v2: f64 = state.velocity.iter().map(|v| v * v).sum();
    let r = (state.position[0].powi(2) + state.position[1].powi(2)).sqrt();
    Ok(0.5 * species.mass * v2
        - coefficient * trap::beam_intensity(geometry, r, state.position[2]))
}

/// Static-potential self-test: integrates a probe for 2000 steps and
/// verifies the energy drift stays below 1e-3 of the trap depth.
fn self_test_energy_drift(
    species: &AtomSpecies,
    geometry: &BeamGeometry,
    config: &TrajectoryConfig,
) -> Result<()> {
    let depth_energy = trap::trap_depth(species, geometry)? * KB;
    let force = Force::new(species, geometry, &ChopWaveform::static_trap(), 5.0)?;
    let mut state = AtomState::at_rest();
    state.position = [0.3 * geometry.waist_w0, 0.0, geometry.focus_position];
    let e0 = static_energy(species, geometry, &state)?;
    let mut acc = force.acceleration(&state.position);
    let waveform = ChopWaveform::static_trap();
    let mut max_drift: f64 = 0.0;
    for n in 0..2000u64 {
        verlet_step(
            &force,
            &waveform,
            0.0,
            &mut state,
            &mut acc,
            n as f64 * config.time_step,
            config.time_step,
        );
        let e = static_energy(species, geometry, &state)?;
        max_drift = max_drift.max((e - e0).abs());
    }
    if max_drift > 1e-3 * depth_energy {
        return Err(Error::Config(format!(
            "unstable time step {:.3e} s: static-trap energy drift {:.2e} of depth",
            config.time_step,
            max_drift / depth_energy
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn rb() -> AtomSpecies {
        AtomSpecies::rb87()
    }

    fn on_beam() -> BeamGeometry {
        BeamGeometry::with_power(13.8e-3).unwrap()
    }

    #[test]
    fn chop_state_square_wave() {
        let wf = ChopWaveform::new(2e6, 0.5, 0.0).unwrap();
        assert_eq!(chop_state(&wf, 100e-9), 1);
        assert_eq!(chop_state(&wf, 300e-9), 0);
        // periodic
        assert_eq!(chop_state(&wf, 100e-9 + 12.0 * 500e-9), 1);
        assert_eq!(chop_state(&wf, -400e-9), 1);
        // duty close to 1: on almost always
        let wide = ChopWaveform::new(1e6, 1.0 - 1e-9, 0.0).unwrap();
        for k in 0..100 {
            assert_eq!(chop_state(&wide, k as f64 * 13e-9), 1);
        }
    }

    #[test]
    fn chop_state_duty_integral() {
        for &duty in &[0.25, 0.5, 0.9] {
            let wf = ChopWaveform::new(1e6, duty, 0.0).unwrap();
            let n = 100_000;
            let on: u64 = (0..n)
                .map(|i| u64::from(chop_state(&wf, i as f64 / n as f64 * wf.period())))
                .sum();
            assert_relative_eq!(on as f64 / n as f64, duty, epsilon = 1e-3);
        }
    }

    #[test]
    fn thermal_ensemble_statistics() {
        let species = rb();
        let beam = on_beam();
        let n = 10_000;
        let t = 100e-6;
        let ensemble = sample_thermal_ensemble(t, &beam, &species, n, 20).unwrap();
        // equipartition oracle: mean kinetic energy per axis = kT/2 +- 2%
        let kt = KB * t;
        for axis in 0..3 {
            let ke: f64 = ensemble
                .iter()
                .map(|s| 0.5 * species.mass * s.velocity[axis].powi(2))
                .sum::<f64>()
                / n as f64;
            assert!(
                (ke / (0.5 * kt) - 1.0).abs() < 0.02,
                "axis {axis}: KE/(kT/2) = {}",
                ke / (0.5 * kt)
            );
        }
        // harmonic Boltzmann oracle: var(x) = kT/(m w_r^2) +- 3%
        let (fr, _) = trap::trap_frequencies(&species, &beam).unwrap();
        let expected = kt / (species.mass * (TAU * fr).powi(2));
        let var: f64 = ensemble.iter().map(|s| s.position[0].powi(2)).sum::<f64>() / n as f64;
        assert!(
            (var / expected - 1.0).abs() < 0.03,
            "var ratio = {}",
            var / expected
        );
    }

    #[test]
    fn thermal_ensemble_zero_temperature() {
        let ensemble = sample_thermal_ensemble(0.0, &on_beam(), &rb(), 5, 1).unwrap();
        for atom in ensemble {
            assert_eq!(atom.position, [0.0; 3]);
            assert_eq!(atom.velocity, [0.0; 3]);
        }
    }

    #[test]
    fn thermal_ensemble_rejects_hot() {
        // depth ~ 5.7 mK
        assert!(sample_thermal_ensemble(6e-3, &on_beam(), &rb(), 5, 1).is_err());
    }

    #[test]
    fn static_energy_conservation() {
        // 1 ms at 2.5 ns steps = 4e5 steps; drift < 1e-6 of total energy
        let species = rb();
        let beam = on_beam();
        let config = TrajectoryConfig::new(2.5e-9, 1e-3, 3).unwrap();
        let wf = ChopWaveform::static_trap();
        let mut state = AtomState::at_rest();
        state.position = [0.4 * beam.waist_w0, 0.1 * beam.waist_w0, 1.0e-6];
        state.velocity = [0.02, -0.01, 0.005];
        let e0 = static_energy(&species, &beam, &state).unwrap();
        let trajectory = integrate_trajectory(&state, &wf, &beam, &species, &config).unwrap();
        assert_eq!(trajectory.outcome, TrajectoryOutcome::Survived);
        let mut worst: f64 = 0.0;
        for (p, v) in trajectory.positions.iter().zip(&trajectory.velocities) {
            let s = AtomState {
                position: *p,
                velocity: *v,
                alive: true,
                loss_time: None,
            };
            let e = static_energy(&species, &beam, &s).unwrap();
            worst = worst.max(((e - e0) / e0).abs());
        }
        assert!(worst < 1e-6, "relative drift {worst}");
    }

    #[test]
    fn bad_time_step_rejected() {
        let config = TrajectoryConfig::new(1e-6, 1e-3, 3).unwrap();
        let wf = ChopWaveform::new(2e6, 0.5, 0.0).unwrap();
        let err = integrate_trajectory(&AtomState::at_rest(), &wf, &on_beam(), &rb(), &config);
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn fast_chop_retains_atoms() {
        // 2 MHz chop, 100 uK ensemble, no gas: survival > 0.95 over 10 ms.
        let species = rb();
        let beam = on_beam();
        let wf = ChopWaveform::new(2e6, 0.5, 0.0).unwrap();
        let config = TrajectoryConfig::new(10e-9, 10e-3, 11).unwrap();
        let ensemble = sample_thermal_ensemble(100e-6, &beam, &species, 200, 11).unwrap();
        let curve = survival_curve(&ensemble, &wf, &beam, &species, &config, 50).unwrap();
        let last = *curve.fractions.last().unwrap();
        assert!(last > 0.95, "survival = {last}");
    }

    #[test]
    fn slow_chop_loses_atoms() {
        // 100 kHz chop (below the radial trap frequency): survival < 0.5.
        let species = rb();
        let beam = on_beam();
        let wf = ChopWaveform::new(100e3, 0.5, 0.0).unwrap();
        let config = TrajectoryConfig::new(50e-9, 10e-3, 11).unwrap();
        let ensemble = sample_thermal_ensemble(100e-6, &beam, &species, 200, 11).unwrap();
        let curve = survival_curve(&ensemble, &wf, &beam, &species, &config, 50).unwrap();
        let last = *curve.fractions.last().unwrap();
        assert!(last < 0.5, "survival = {last}");
    }

    #[test]
    fn static_survival_with_gas_rate() {
        // pure exponential: fitted tau = 400 ms +- 5%
        let species = rb();
        let beam = on_beam();
        let wf = ChopWaveform::static_trap();
        let mut config = TrajectoryConfig::new(50e-9, 50e-3, 5).unwrap();
        config.background_gas_rate = 2.5;
        let ensemble = sample_thermal_ensemble(100e-6, &beam, &species, 100, 5).unwrap();
        let curve = survival_curve(&ensemble, &wf, &beam, &species, &config, 40).unwrap();
        let (tau, _) = fit_exponential_lifetime(&curve).unwrap();
        assert!((tau / 0.400 - 1.0).abs() < 0.05, "tau = {tau}");
        // zero gas rate, static trap: constant 1.0
        config.background_gas_rate = 0.0;
        let flat = survival_curve(&ensemble, &wf, &beam, &species, &config, 10).unwrap();
        assert!(flat.fractions.iter().all(|&f| f == 1.0));
    }

    #[test]
    fn survival_fraction_non_increasing() {
        let species = rb();
        let beam = on_beam();
        let wf = ChopWaveform::new(400e3, 0.5, 0.0).unwrap();
        let config = TrajectoryConfig::new(25e-9, 5e-3, 9).unwrap();
        let ensemble = sample_thermal_ensemble(300e-6, &beam, &species, 100, 9).unwrap();
        let curve = survival_curve(&ensemble, &wf, &beam, &species, &config, 60).unwrap();
        for w in curve.fractions.windows(2) {
            assert!(w[1] <= w[0] + 1e-15);
        }
    }

    #[test]
    fn empty_ensemble_rejected() {
        let config = TrajectoryConfig::new(10e-9, 1e-3, 1).unwrap();
        let wf = ChopWaveform::new(2e6, 0.5, 0.0).unwrap();
        assert!(survival_curve(&[], &wf, &on_beam(), &rb(), &config, 10).is_err());
    }

    #[test]
    fn secular_frequency_static_trap() {
        // duty = 1: the static radial trap frequency (167 kHz scale)
        let species = rb();
        let beam = on_beam();
        let (fr, _) = trap::trap_frequencies(&species, &beam).unwrap();
        let config = TrajectoryConfig::new(10e-9, 2e-3, 2).unwrap();
        let f = probe_secular_frequency(
            &ChopWaveform::static_trap(),
            &beam,
            &species,
            &config,
            beam.waist_w0 / 20.0,
        )
        .unwrap();
        assert!((f / 167e3 - 1.0).abs() < 0.02, "f = {f}");
        assert!((f / fr - 1.0).abs() < 0.01, "f = {f}, fr = {fr}");
    }

    #[test]
    fn secular_frequency_scales_with_sqrt_duty() {
        let species = rb();
        let beam = on_beam();
        let (fr, _) = trap::trap_frequencies(&species, &beam).unwrap();
        let config = TrajectoryConfig::new(5e-9, 2e-3, 2).unwrap();
        // duty 0.5 at 4 MHz -> 118 kHz scale
        let f_half = probe_secular_frequency(
            &ChopWaveform::new(4e6, 0.5, 0.0).unwrap(),
            &beam,
            &species,
            &config,
            beam.waist_w0 / 20.0,
        )
        .unwrap();
        assert!((f_half / 118e3 - 1.0).abs() < 0.03, "f = {f_half}");
        assert!(
            (f_half / (fr * 0.5f64.sqrt()) - 1.0).abs() < 0.03,
            "f = {f_half}"
        );
        // duty 0.25 -> 83.5 kHz scale
        let f_quarter = probe_secular_frequency(
            &ChopWaveform::new(4e6, 0.25, 0.0).unwrap(),
            &beam,
            &species,
            &config,
            beam.waist_w0 / 20.0,
        )
        .unwrap();
        assert!((f_quarter / 83.5e3 - 1.0).abs() < 0.03, "f = {f_quarter}");
    }

    #[test]
    fn no_peak_is_an_error() {
        let traj = Trajectory {
            sample_dt: 1e-8,
            positions: vec![[0.0; 3]; 1024],
            velocities: vec![[0.0; 3]; 1024],
            final_state: AtomState::at_rest(),
            outcome: TrajectoryOutcome::Survived,
        };
        assert!(secular_frequency(&traj).is_err());
    }

    #[test]
    fn identical_seeds_identical_trajectories() {
        let species = rb();
        let beam = on_beam();
        let wf = ChopWaveform::new(1e6, 0.5, 0.0).unwrap();
        let mut config = TrajectoryConfig::new(10e-9, 1e-3, 123).unwrap();
        config.background_gas_rate = 10.0;
        let ensemble = sample_thermal_ensemble(200e-6, &beam, &species, 4, 123).unwrap();
        let a = integrate_trajectory(&ensemble[0], &wf, &beam, &species, &config).unwrap();
        let b = integrate_trajectory(&ensemble[0], &wf, &beam, &species, &config).unwrap();
        assert_eq!(a.positions, b.positions);
        assert_eq!(a.final_state, b.final_state);
        assert_eq!(a.outcome, b.outcome);
        let e2 = sample_thermal_ensemble(200e-6, &beam, &species, 4, 123).unwrap();
        assert_eq!(ensemble, e2);
    }

    #[test]
    fn gas_collision_truncates_trajectory() {
        let species = rb();
        let beam = on_beam();
        let wf = ChopWaveform::static_trap();
        let mut config = TrajectoryConfig::new(50e-9, 50e-3, 77).unwrap();
        config.background_gas_rate = 1000.0; // mean loss at 1 ms
        let traj = integrate_trajectory(&AtomState::at_rest(), &wf, &beam, &species, &config).unwrap();
        assert_eq!(traj.outcome, TrajectoryOutcome::GasCollision);
        assert!(traj.final_state.loss_time.is_some());
        assert!(!traj.final_state.alive);
    }

    #[test]
    fn friction_damps_motion() {
        let species = rb();
        let beam = on_beam();
        let wf = ChopWaveform::static_trap();
        let mut config = TrajectoryConfig::new(10e-9, 1e-3, 1).unwrap();
        config.friction_coefficient = 5e3;
        let mut state = AtomState::at_rest();
        state.position = [0.5 * beam.waist_w0, 0.0, 0.0];
        let traj = integrate_trajectory(&state, &wf, &beam, &species, &config).unwrap();
        let e0 = static_energy(&species, &beam, &state).unwrap();
        let e1 = static_energy(&species, &beam, &traj.final_state).unwrap();
        // energy measured from the trap bottom must shrink
        let depth = trap::trap_depth(&species, &beam).unwrap() * KB;
        assert!(e1 + depth < 0.8 * (e0 + depth), "e0 = {e0:e}, e1 = {e1:e}");
    }
}
