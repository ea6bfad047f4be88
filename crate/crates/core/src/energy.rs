//! Energy functionals and their bookkeeping along trajectories.
//!
//! Quadratic parts use Plancherel on the coefficients; the `L^q` parts and the
//! dissipation rate use grid quadrature on the state's own grid, which is the
//! same quadrature the projected nonlinear terms see. With that pairing the
//! semidiscrete energy identity holds exactly, so the residual measures only
//! the time discretization.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fourier::{h1_seminorm_sq, inverse_transform, l2_norm_sq_spectral, SpectralField};
use crate::galerkin::SolverState;
use crate::integrator::Trajectory;
use crate::nonlinearity::{dissipation_density, source_potential, NonlinearityParams};
use crate::scalar::{pow_abs, Real};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergySample<T> {
    pub t: T,
    /// `E(t)`.
    pub total_e: T,
    /// Modified energy, always `>= 0`.
    pub modified_e: T,
    /// Cumulative `int_0^t int g(u_t) u_t`.
    pub dissipation: T,
    /// `E(t) + dissipation(t) - E(0)`.
    pub identity_residual: T,
    /// `||u||_{p+1}^{p+1}`.
    pub lp_source: T,
    /// `||u||_{m+1}^{m+1}`.
    pub lm_state: T,
}

impl<T: Real> EnergySample<T> {
    pub const CSV_HEADER: [&'static str; 7] =
        ["t", "total_E", "modified_E", "dissipation", "identity_residual", "lp_source", "lm_state"];

    pub fn csv_row(&self) -> [T; 7] {
        [
            self.t,
            self.total_e,
            self.modified_e,
            self.dissipation,
            self.identity_residual,
            self.lp_source,
            self.lm_state,
        ]
    }
}

/// Per-state ingredients of every energy functional.
#[derive(Clone, Copy, Debug)]
pub struct EnergyTerms<T> {
    /// `||grad u||_2^2`.
    pub grad_sq: T,
    /// `||u_t||_2^2`.
    pub vel_sq: T,
    /// `int H(u)`, the source potential.
    pub potential: T,
    pub lp_source: T,
    pub lm_state: T,
    /// `int g(u_t) u_t`.
    pub dissipation_rate: T,
}

impl<T: Real> EnergyTerms<T> {
    pub fn of(state: &SolverState<T>, params: &NonlinearityParams<T>) -> Result<Self> {
        let u = inverse_transform(&state.u)?;
        let v = inverse_transform(&state.v)?;
        let p1 = params.p + T::one();
        let m1 = params.m + T::one();
        let terms = Self {
            grad_sq: h1_seminorm_sq(&state.u),
            vel_sq: l2_norm_sq_spectral(&state.v),
            potential: u.integrate(|x| source_potential(x, params)),
            lp_source: u.integrate(|x| pow_abs(x, p1)),
            lm_state: u.integrate(|x| pow_abs(x, m1)),
            dissipation_rate: v.integrate(|x| dissipation_density(x, params)),
        };
        if terms.values().iter().all(|x| x.is_finite()) {
            Ok(terms)
        } else {
            Err(Error::NonFinite("energy terms"))
        }
    }

    fn values(&self) -> [T; 6] {
        [self.grad_sq, self.vel_sq, self.potential, self.lp_source, self.lm_state, self.dissipation_rate]
    }

    pub fn total(&self) -> T {
        T::lit(0.5) * (self.grad_sq + self.vel_sq) - self.potential
    }

    pub fn modified(&self, m: T) -> T {
        T::lit(0.5) * (self.grad_sq + self.vel_sq) + self.lm_state / (m + T::one())
    }
}

/// `E = (||grad u||^2 + ||u_t||^2)/2 - int H(u)`.
pub fn total_energy<T: Real>(state: &SolverState<T>, params: &NonlinearityParams<T>) -> Result<T> {
    Ok(EnergyTerms::of(state, params)?.total())
}

/// `(||grad u||^2 + ||u_t||^2)/2 + ||u||_{m+1}^{m+1}/(m+1)`.
pub fn modified_energy<T: Real>(state: &SolverState<T>, params: &NonlinearityParams<T>) -> Result<T> {
    Ok(EnergyTerms::of(state, params)?.modified(params.m))
}

/// `int g(u_t) u_t dx` at one instant.
pub fn dissipation_rate<T: Real>(state: &SolverState<T>, params: &NonlinearityParams<T>) -> Result<T> {
    Ok(EnergyTerms::of(state, params)?.dissipation_rate)
}

/// `int g(v) v dx` for a velocity field alone.
pub fn velocity_dissipation<T: Real>(v: &SpectralField<T>, params: &NonlinearityParams<T>) -> Result<T> {
    if !params.damping_enabled() {
        return Ok(T::zero());
    }
    Ok(inverse_transform(v)?.integrate(|x| dissipation_density(x, params)))
}

/// Trapezoidal increment of the dissipation integral between two states.
pub fn dissipation_increment<T: Real>(
    a: &SolverState<T>,
    b: &SolverState<T>,
    params: &NonlinearityParams<T>,
) -> Result<T> {
    if !(b.t > a.t) {
        return Err(Error::InvalidArgument(format!("dissipation needs increasing times, got {} then {}", a.t, b.t)));
    }
    let ra = dissipation_rate(a, params)?;
    let rb = dissipation_rate(b, params)?;
    Ok(T::lit(0.5) * (b.t - a.t) * (ra + rb))
}

/// Running accumulator that turns successive states into [`EnergySample`]s.
#[derive(Clone, Debug)]
pub struct EnergyLedger<T> {
    m: T,
    initial_total: T,
    dissipation: T,
    last_rate: T,
    last_t: T,
}

impl<T: Real> EnergyLedger<T> {
    pub fn start(state: &SolverState<T>, params: &NonlinearityParams<T>) -> Result<(Self, EnergySample<T>)> {
        let terms = EnergyTerms::of(state, params)?;
        let ledger = Self {
            m: params.m,
            initial_total: terms.total(),
            dissipation: T::zero(),
            last_rate: terms.dissipation_rate,
            last_t: state.t,
        };
        let sample = ledger.sample(state.t, &terms);
        Ok((ledger, sample))
    }

    /// Records `state`, integrating the dissipation since the last record by the trapezoid rule.
    pub fn record(&mut self, state: &SolverState<T>, params: &NonlinearityParams<T>) -> Result<EnergySample<T>> {
        self.record_with(state, params, None)
    }

    /// Like [`record`](Self::record) but with the dissipation increment supplied by the caller
    /// (e.g. accumulated by the time stepper at its own order).
    pub fn record_with(
        &mut self,
        state: &SolverState<T>,
        params: &NonlinearityParams<T>,
        increment: Option<T>,
    ) -> Result<EnergySample<T>> {
        let terms = EnergyTerms::of(state, params)?;
        let dt = state.t - self.last_t;
        let inc = increment.unwrap_or_else(|| T::lit(0.5) * dt * (self.last_rate + terms.dissipation_rate));
        self.dissipation = self.dissipation + inc;
        self.last_rate = terms.dissipation_rate;
        self.last_t = state.t;
        Ok(self.sample(state.t, &terms))
    }

    fn sample(&self, t: T, terms: &EnergyTerms<T>) -> EnergySample<T> {
        let total_e = terms.total();
        EnergySample {
            t,
            total_e,
            modified_e: terms.modified(self.m),
            dissipation: self.dissipation,
            identity_residual: (total_e + self.dissipation) - self.initial_total,
            lp_source: terms.lp_source,
            lm_state: terms.lm_state,
        }
    }
}

#[derive(Clone, Debug)]
pub struct IdentityReport<T> {
    pub residuals: Vec<(T, T)>,
    pub max_abs: T,
}

/// Residuals `E(t) + int_0^t int g(u_t)u_t - E(0)` along the trajectory.
pub fn energy_identity_report<T: Real>(trajectory: &Trajectory<T>) -> IdentityReport<T> {
    let residuals: Vec<(T, T)> = trajectory.energy.iter().map(|e| (e.t, e.identity_residual)).collect();
    let max_abs = residuals.iter().fold(T::zero(), |acc, (_, r)| acc.max(r.abs()));
    IdentityReport { residuals, max_abs }
}

/// Least `C >= 0` with `modified(t) + dissipation(t)/2 <= (modified(0) + t) e^{C t}` on every sample.
pub fn gronwall_rate<T: Real>(trajectory: &Trajectory<T>) -> Result<T> {
    let Some(first) = trajectory.energy.first() else {
        return Ok(T::zero());
    };
    let mut rate = T::zero();
    for e in trajectory.energy.iter().skip(1) {
        let t = e.t - first.t;
        if !(t > T::zero()) {
            continue;
        }
        let base = first.modified_e + t;
        let lhs = e.modified_e + T::lit(0.5) * e.dissipation;
        if lhs == T::zero() {
            continue;
        }
        let c = (lhs / base).ln() / t;
        if !c.is_finite() {
            return Err(Error::NonFinite("gronwall rate"));
        }
        rate = rate.max(c);
    }
    Ok(rate)
}
