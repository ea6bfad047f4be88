//! Time stepping for the Galerkin system.
//!
//! Two schemes are provided: classical RK4 on the full right-hand side, and a
//! symmetric splitting `L(dt/2) D(dt/2) S(dt) D(dt/2) L(dt/2)` built from the
//! exact wave flow `L`, the exact pointwise damping flow `D`, and an explicit
//! source kick `S`.

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::energy::{velocity_dissipation, EnergyLedger, EnergySample};
use crate::error::{Error, Result};
use crate::fourier::{forward_transform, inverse_transform, wavenumber_sq, SpectralField};
use crate::galerkin::{projected_nonlinear_term, rhs, NonlinearKind, SolverState};
use crate::nonlinearity::{backward_euler_damping, damping_exact_flow, Damping, NonlinearityParams};
use crate::scalar::Real;

pub const DEFAULT_BLOWUP_THRESHOLD: f64 = 1e8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    Rk4,
    Strang,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchemeSpec<T> {
    pub kind: SchemeKind,
    pub dt: T,
    /// RK4 runs need `dt <= cfl_safety / max(1, n)`.
    pub cfl_safety: T,
    /// Halt once the modified energy exceeds this.
    pub blowup_threshold: T,
}

impl<T: Real> SchemeSpec<T> {
    pub fn new(kind: SchemeKind, dt: T) -> Self {
        Self { kind, dt, cfl_safety: T::one(), blowup_threshold: T::lit(DEFAULT_BLOWUP_THRESHOLD) }
    }

    pub fn rk4_dt_cap(&self, cutoff: usize) -> T {
        self.cfl_safety / T::lit(cutoff.max(1) as f64)
    }

    /// All violated constraints for a grid with this cutoff.
    pub fn violations(&self, cutoff: usize) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.dt > T::zero() && self.dt.is_finite()) {
            out.push(format!("scheme.dt must be > 0, got {}", self.dt));
        }
        if !(self.cfl_safety > T::zero() && self.cfl_safety <= T::one()) {
            out.push(format!("scheme.cfl_safety must lie in (0, 1], got {}", self.cfl_safety));
        }
        if !(self.blowup_threshold > T::zero()) {
            out.push(format!("scheme.blowup_threshold must be > 0, got {}", self.blowup_threshold));
        }
        if self.kind == SchemeKind::Rk4 && out.is_empty() && self.dt > self.rk4_dt_cap(cutoff) {
            out.push(format!(
                "scheme.dt = {} exceeds the RK4 cap dt <= cfl_safety / max(1, n) = {} / {} = {}",
                self.dt,
                self.cfl_safety,
                cutoff.max(1),
                self.rk4_dt_cap(cutoff)
            ));
        }
        out
    }

    pub fn validate(&self, cutoff: usize) -> Result<()> {
        let v = self.violations(cutoff);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }
}

/// Exact flow of `u'' = Delta u` for time `tau`, mode by mode.
pub fn linear_flow<T: Real>(state: &SolverState<T>, tau: T) -> SolverState<T> {
    let grid = state.grid();
    let mut out = state.clone();
    for (i, (u, v)) in out.u.coeffs_mut().iter_mut().zip(state.v.coeffs()).enumerate() {
        let k2 = wavenumber_sq(&grid.mode(i));
        let u0 = *u;
        *u = if k2 == 0 {
            u0 + v.scale(tau)
        } else {
            let w = T::lit(k2 as f64).sqrt();
            let (s, c) = (w * tau).sin_cos();
            u0.scale(c) + v.scale(s / w)
        };
    }
    for (i, (v, u0)) in out.v.coeffs_mut().iter_mut().zip(state.u.coeffs()).enumerate() {
        let k2 = wavenumber_sq(&grid.mode(i));
        if k2 != 0 {
            let w = T::lit(k2 as f64).sqrt();
            let (s, c) = (w * tau).sin_cos();
            *v = v.scale(c) - u0.scale(w * s);
        }
    }
    out.t = state.t + tau;
    out
}

/// Exact flow of `v' = -g(v)` applied on the grid, then re-projected. `u` and `t` are untouched.
pub fn damping_flow<T: Real>(
    state: &SolverState<T>,
    tau: T,
    params: &NonlinearityParams<T>,
) -> Result<SolverState<T>> {
    if tau == T::zero() {
        return Ok(state.clone());
    }
    let v = match &params.damping {
        Damping::Disabled => return Ok(state.clone()),
        Damping::PowerLaw if params.m == T::one() => state.v.scale((-tau).exp()),
        Damping::PowerLaw => {
            let m = params.m;
            forward_transform(&inverse_transform(&state.v)?.map(|x| damping_exact_flow(x, m, tau)))?
        }
        Damping::Custom(g) => {
            let g = g.as_ref();
            forward_transform(&inverse_transform(&state.v)?.map(|x| backward_euler_damping(x, tau, g)))?
        }
    };
    Ok(SolverState { t: state.t, u: state.u.clone(), v })
}

/// `v <- v + tau P_n h(u)` with `u` frozen.
pub fn source_kick<T: Real>(
    state: &SolverState<T>,
    tau: T,
    params: &NonlinearityParams<T>,
) -> Result<SolverState<T>> {
    if tau == T::zero() || !params.source_enabled() {
        return Ok(state.clone());
    }
    let mut out = state.clone();
    out.v.axpy(tau, &projected_nonlinear_term(&state.u, NonlinearKind::Source, params)?);
    Ok(out)
}

pub fn step_strang<T: Real>(
    state: &SolverState<T>,
    dt: T,
    params: &NonlinearityParams<T>,
) -> Result<SolverState<T>> {
    if !params.damping_enabled() && !params.source_enabled() {
        return Ok(linear_flow(state, dt));
    }
    let half = dt / T::lit(2.0);
    let s = linear_flow(state, half);
    let s = damping_flow(&s, half, params)?;
    let s = source_kick(&s, dt, params)?;
    let s = damping_flow(&s, half, params)?;
    let mut s = linear_flow(&s, half);
    s.t = state.t + dt;
    Ok(s)
}

pub fn step_rk4<T: Real>(state: &SolverState<T>, dt: T, params: &NonlinearityParams<T>) -> Result<SolverState<T>> {
    Ok(step_rk4_tracked(state, dt, params)?.0)
}

/// RK4 step together with the dissipation `int int g(v) v` over the step, integrated with the
/// same stage weights (i.e. RK4 applied to the system augmented by `q' = int g(v) v`).
pub fn step_rk4_tracked<T: Real>(
    state: &SolverState<T>,
    dt: T,
    params: &NonlinearityParams<T>,
) -> Result<(SolverState<T>, T)> {
    let half = dt / T::lit(2.0);
    let stage = |base: &SolverState<T>, h: T, du: &SpectralField<T>, dv: &SpectralField<T>| {
        let mut s = base.clone();
        s.u.axpy(h, du);
        s.v.axpy(h, dv);
        s.t = base.t + h;
        s
    };
    let y2;
    let y3;
    let y4;
    let (k1u, k1v) = rhs(state, params)?;
    let (k2u, k2v) = {
        y2 = stage(state, half, &k1u, &k1v);
        rhs(&y2, params)?
    };
    let (k3u, k3v) = {
        y3 = stage(state, half, &k2u, &k2v);
        rhs(&y3, params)?
    };
    let (k4u, k4v) = {
        y4 = stage(state, dt, &k3u, &k3v);
        rhs(&y4, params)?
    };
    let sixth = dt / T::lit(6.0);
    let third = dt / T::lit(3.0);
    let mut out = state.clone();
    out.u.axpy(sixth, &k1u);
    out.u.axpy(third, &k2u);
    out.u.axpy(third, &k3u);
    out.u.axpy(sixth, &k4u);
    out.v.axpy(sixth, &k1v);
    out.v.axpy(third, &k2v);
    out.v.axpy(third, &k3v);
    out.v.axpy(sixth, &k4v);
    out.t = state.t + dt;
    let dissipation = if params.damping_enabled() {
        let d = |s: &SolverState<T>| velocity_dissipation(&s.v, params);
        sixth * (d(state)? + d(&y4)?) + third * (d(&y2)? + d(&y3)?)
    } else {
        T::zero()
    };
    Ok((out, dissipation))
}

pub fn step<T: Real>(kind: SchemeKind, state: &SolverState<T>, dt: T, params: &NonlinearityParams<T>) -> Result<SolverState<T>> {
    match kind {
        SchemeKind::Rk4 => step_rk4(state, dt, params),
        SchemeKind::Strang => step_strang(state, dt, params),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BlowUpReason {
    /// Modified energy exceeded the configured threshold.
    Threshold,
    /// A non-finite value appeared in the state or its energies.
    NonFinite,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BlowUp<T> {
    pub t: T,
    pub step: u64,
    pub modified_energy: T,
    pub reason: BlowUpReason,
}

/// Everything a run needs besides its initial state.
#[derive(Clone, Debug)]
pub struct RunPlan<T> {
    pub params: NonlinearityParams<T>,
    pub scheme: SchemeSpec<T>,
    pub horizon: T,
    /// Store a state sample every this many steps (the first and last state are always kept).
    pub output_every: usize,
}

#[derive(Clone, Debug)]
pub struct Trajectory<T> {
    pub samples: Vec<SolverState<T>>,
    /// One sample per step, starting at the initial state.
    pub energy: Vec<EnergySample<T>>,
    pub blowup: Option<BlowUp<T>>,
}

impl<T: Real> Trajectory<T> {
    pub fn final_state(&self) -> Option<&SolverState<T>> {
        self.samples.last()
    }
}

/// Drives one trajectory step by step.
///
/// Time labels are `t = (N0 + i) dt` when the initial time is an exact
/// multiple `N0 dt`, so resumed runs reproduce the labels of uninterrupted ones.
pub struct Integrator<T> {
    state: SolverState<T>,
    params: NonlinearityParams<T>,
    scheme: SchemeSpec<T>,
    origin: T,
    steps: u64,
    ledger: EnergyLedger<T>,
    last_sample: EnergySample<T>,
}

impl<T: Real> Integrator<T> {
    pub fn new(state: SolverState<T>, params: &NonlinearityParams<T>, scheme: &SchemeSpec<T>) -> Result<Self> {
        params.validate()?;
        scheme.validate(state.grid().cutoff())?;
        let (ledger, sample) = EnergyLedger::start(&state, params)?;
        let dt = scheme.dt;
        let n0 = (state.t / dt).round();
        let (origin, steps) = if n0 >= T::zero() && n0 * dt == state.t {
            (T::zero(), n0.to_u64().unwrap_or(0))
        } else {
            (state.t, 0)
        };
        Ok(Self { state, params: params.clone(), scheme: *scheme, origin, steps, ledger, last_sample: sample })
    }

    pub fn state(&self) -> &SolverState<T> {
        &self.state
    }

    pub fn into_state(self) -> SolverState<T> {
        self.state
    }

    pub fn energy(&self) -> &EnergySample<T> {
        &self.last_sample
    }

    /// Global step counter (counts from `t = 0` for resumed runs).
    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Advances one step of length `dt` (the scheme step unless `dt` is given explicitly).
    /// Numerical breakdown is returned as `Ok(Some(BlowUp))` with the state left at the last finite value.
    pub fn advance(&mut self, dt: Option<T>) -> Result<Option<BlowUp<T>>> {
        let h = dt.unwrap_or(self.scheme.dt);
        let label = if dt.is_none() { self.origin + T::lit((self.steps + 1) as f64) * self.scheme.dt } else { self.state.t + h };
        let stepped = match self.scheme.kind {
            SchemeKind::Rk4 => step_rk4_tracked(&self.state, h, &self.params).map(|(s, d)| (s, Some(d))),
            SchemeKind::Strang => step_strang(&self.state, h, &self.params).map(|s| (s, None)),
        };
        let (next, increment) = match stepped {
            Ok(s) => s,
            Err(Error::NonFinite(_)) | Err(Error::HermitianViolation { .. }) => {
                return Ok(Some(self.blowup(label, T::nan(), BlowUpReason::NonFinite)));
            }
            Err(e) => return Err(e),
        };
        let step_no = self.steps + 1;
        let mut next = next;
        next.t = label;
        if !next.is_finite() {
            return Ok(Some(self.blowup(next.t, T::nan(), BlowUpReason::NonFinite)));
        }
        let sample = match self.ledger.record_with(&next, &self.params, increment.filter(|d| d.is_finite())) {
            Ok(s) => s,
            Err(Error::NonFinite(_)) | Err(Error::HermitianViolation { .. }) => {
                return Ok(Some(self.blowup(next.t, T::infinity(), BlowUpReason::NonFinite)));
            }
            Err(e) => return Err(e),
        };
        self.state = next;
        self.steps = step_no;
        self.last_sample = sample;
        if sample.modified_e > self.scheme.blowup_threshold {
            return Ok(Some(BlowUp {
                t: sample.t,
                step: self.steps,
                modified_energy: sample.modified_e,
                reason: BlowUpReason::Threshold,
            }));
        }
        Ok(None)
    }

    fn blowup(&self, t: T, energy: T, reason: BlowUpReason) -> BlowUp<T> {
        BlowUp { t, step: self.steps + 1, modified_energy: energy, reason }
    }
}

/// Integrates from `initial` to `plan.horizon`, calling `observer` after every step.
pub fn integrate_with<T: Real>(
    initial: SolverState<T>,
    plan: &RunPlan<T>,
    mut observer: impl FnMut(&Integrator<T>) -> Result<()>,
) -> Result<Trajectory<T>> {
    if plan.output_every == 0 {
        return Err(Error::Config(vec!["run.output_every must be >= 1".into()]));
    }
    if !(plan.horizon > initial.t) {
        return Err(Error::Config(vec![format!(
            "run.horizon = {} must exceed the initial time {}",
            plan.horizon, initial.t
        )]));
    }
    let mut integ = Integrator::new(initial, &plan.params, &plan.scheme)?;
    let dt = plan.scheme.dt;
    let span = (plan.horizon - integ.state().t) / dt;
    let whole = span.round();
    let (full_steps, tail) = if (span - whole).abs() <= T::lit(1e-9) * T::one().max(span) {
        (whole.to_u64().unwrap_or(0), None)
    } else {
        let f = span.floor();
        (f.to_u64().unwrap_or(0), Some(plan.horizon - (integ.state().t + f * dt)))
    };
    let mut samples = vec![integ.state().clone()];
    let mut energy = vec![*integ.energy()];
    let mut blowup = None;
    let total = full_steps + u64::from(tail.is_some());
    for i in 0..total {
        let h = if i == full_steps { tail } else { None };
        let outcome = integ.advance(h)?;
        if let Some(b) = outcome {
            if b.reason == BlowUpReason::Threshold {
                energy.push(*integ.energy());
            }
            blowup = Some(b);
            break;
        }
        energy.push(*integ.energy());
        observer(&integ)?;
        if (i + 1) % plan.output_every as u64 == 0 {
            samples.push(integ.state().clone());
        }
    }
    if samples.last().map(|s| s.t) != Some(integ.state().t) {
        samples.push(integ.state().clone());
    }
    Ok(Trajectory { samples, energy, blowup })
}

pub fn integrate_state<T: Real>(initial: SolverState<T>, plan: &RunPlan<T>) -> Result<Trajectory<T>> {
    integrate_with(initial, plan, |_| Ok(()))
}

/// Builds the initial state from the configuration and integrates to its horizon.
pub fn integrate<T: Real>(config: &RunConfig<T>) -> Result<Trajectory<T>> {
    integrate_state(config.initial_state()?, &config.plan())
}
