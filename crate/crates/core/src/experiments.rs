//! Verification studies built on top of the solver.
//!
//! Every study returns a typed result and can be flattened into an
//! [`ExperimentReport`] (a numeric table plus a verdict) for the CLI.

use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::energy::gronwall_rate;
use crate::error::{Error, Result};
use crate::fourier::{
    h1_norm, inverse_transform, l2_norm_spectral, lp_power, projection_convergence_probe, wavenumber_sq, GridField,
    Mode, ProjectionProbe, SpectralField, TorusGrid,
};
use crate::galerkin::{projected_nonlinear_term, NonlinearKind, SolverState};
use crate::integrator::{integrate_state, integrate_with, RunPlan, Trajectory};
use crate::nonlinearity::{Damping, NonlinearityParams, Source};
use crate::regime::Uniqueness;
use crate::scalar::Real;

/// Tabular summary of a study.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub kind: String,
    pub config_sha256: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub pass: bool,
    pub tolerance: f64,
    pub notes: Vec<String>,
}

impl ExperimentReport {
    fn new(kind: &str, header: &[&str], rows: Vec<Vec<f64>>, pass: bool, tolerance: f64) -> Self {
        Self {
            kind: kind.into(),
            config_sha256: String::new(),
            header: header.iter().map(|s| (*s).to_owned()).collect(),
            rows,
            pass,
            tolerance,
            notes: Vec::new(),
        }
    }

    pub fn with_digest(mut self, digest: String) -> Self {
        self.config_sha256 = digest;
        self
    }
}

// ---------------------------------------------------------------- linear oracle

/// Solution `(y(t), y'(t))` of `y'' + c y' + q y = 0` with `y(0) = a0`, `y'(0) = a1`.
pub fn damped_mode<T: Real>(c: T, q: T, a0: T, a1: T, t: T) -> (T, T) {
    let two = T::lit(2.0);
    let disc = c * c - T::lit(4.0) * q;
    let eps = T::lit(1e-12) * (c * c + q.abs()).max(T::one());
    if disc.abs() <= eps {
        let r = -c / two;
        let b = a1 - r * a0;
        let e = (r * t).exp();
        ((a0 + b * t) * e, (b + r * (a0 + b * t)) * e)
    } else if disc > T::zero() {
        let s = disc.sqrt();
        let (r1, r2) = ((-c + s) / two, (-c - s) / two);
        let a = (a1 - r2 * a0) / (r1 - r2);
        let b = a0 - a;
        let (e1, e2) = ((r1 * t).exp(), (r2 * t).exp());
        (a * e1 + b * e2, a * r1 * e1 + b * r2 * e2)
    } else {
        let alpha = -c / two;
        let omega = (-disc).sqrt() / two;
        let b = (a1 - alpha * a0) / omega;
        let e = (alpha * t).exp();
        let (s, co) = (omega * t).sin_cos();
        let y = e * (a0 * co + b * s);
        let dy = e * (alpha * (a0 * co + b * s) + omega * (b * co - a0 * s));
        (y, dy)
    }
}

/// Closed-form coefficient of mode `k` for the linear problem (`m = p = 1`).
/// `damped` and `source` switch the `u_t` and `u` terms; the coefficient obeys
/// `c'' + [damped] c' + (|k|^2 - [source]) c = 0`.
pub fn linear_oracle<T: Real>(k: &Mode, damped: bool, source: bool, u0: T, u1: T, t: T) -> (T, T) {
    let c = if damped { T::one() } else { T::zero() };
    let q = T::lit(wavenumber_sq(k) as f64) - if source { T::one() } else { T::zero() };
    damped_mode(c, q, u0, u1, t)
}

fn linear_switches<T: Real>(params: &NonlinearityParams<T>) -> Result<(bool, bool)> {
    let damped = match params.damping {
        Damping::PowerLaw if params.m == T::one() => true,
        Damping::Disabled => false,
        _ => return Err(Error::InvalidArgument("linear oracle needs m = 1 power-law or disabled damping".into())),
    };
    let source = match params.source {
        Source::PowerLaw if params.p == T::one() => true,
        Source::Disabled => false,
        _ => return Err(Error::InvalidArgument("linear oracle needs p = 1 power-law or disabled source".into())),
    };
    Ok((damped, source))
}

/// Exact linear evolution of every retained mode of `initial` to time `t`.
pub fn linear_oracle_state<T: Real>(
    initial: &SolverState<T>,
    params: &NonlinearityParams<T>,
    t: T,
) -> Result<SolverState<T>> {
    let (damped, source) = linear_switches(params)?;
    let grid = initial.grid();
    let tau = t - initial.t;
    let mut out = initial.clone();
    for i in 0..grid.num_modes() {
        let k = grid.mode(i);
        let (a0, a1) = (initial.u.coeffs()[i], initial.v.coeffs()[i]);
        let (ur, vr) = linear_oracle(&k, damped, source, a0.re, a1.re, tau);
        let (ui, vi) = linear_oracle(&k, damped, source, a0.im, a1.im, tau);
        out.u.coeffs_mut()[i] = num_complex::Complex::new(ur, ui);
        out.v.coeffs_mut()[i] = num_complex::Complex::new(vr, vi);
    }
    out.t = t;
    Ok(out)
}

/// `||u - u_ref||_{H^1} + ||v - v_ref||_{L^2}`.
pub fn state_distance<T: Real>(a: &SolverState<T>, b: &SolverState<T>) -> T {
    h1_norm(&a.u.sub(&b.u)) + l2_norm_spectral(&a.v.sub(&b.v))
}

/// Observed order `log2(e_i / e_{i+1})` for successive halvings.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

// ---------------------------------------------------------------- parallel runs

fn run_all<T: Real>(configs: &[RunConfig<T>]) -> Result<Vec<Trajectory<T>>> {
    configs
        .par_iter()
        .map(|c| integrate_state(c.initial_state()?, &c.plan()))
        .collect()
}

// ---------------------------------------------------------------- convergence

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub n_fine: usize,
    /// `sup_t ||u_n - P_n u_fine||_{H^1}`.
    pub h1: f64,
    /// `sup_t ||v_n - P_n v_fine||_{L^2}`.
    pub l2_velocity: f64,
    /// `sup_t ||u_n - P_n u_fine||_{L^{m+1}}`.
    pub lm: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceStudy {
    pub rows: Vec<ConvergenceRow>,
    /// Every column strictly decreases down the table.
    pub decreasing: bool,
    /// `||u_a - u_c|| <= ||u_a - u_b|| + ||u_b - u_c||` holds on each consecutive triple.
    pub triangle_ok: bool,
}

fn sup_differences<T: Real>(coarse: &Trajectory<T>, fine: &Trajectory<T>, m: T) -> Result<(f64, f64, f64)> {
    if coarse.samples.len() != fine.samples.len() {
        return Err(Error::InvalidArgument("trajectories have different sample counts".into()));
    }
    let mut sup = (0.0f64, 0.0f64, 0.0f64);
    for (a, b) in coarse.samples.iter().zip(&fine.samples) {
        if a.t != b.t {
            return Err(Error::InvalidArgument(format!("sample times differ: {} vs {}", a.t, b.t)));
        }
        let du = a.u.sub(&b.u.transfer(a.grid())?);
        let dv = a.v.sub(&b.v.transfer(a.grid())?);
        let lm = lp_power(&inverse_transform(&du)?, m + T::one())?.powf(T::one() / (m + T::one()));
        sup.0 = sup.0.max(h1_norm(&du).as_f64());
        sup.1 = sup.1.max(l2_norm_spectral(&dv).as_f64());
        sup.2 = sup.2.max(lm.as_f64());
    }
    Ok(sup)
}

/// Runs the configuration at each cutoff (same `dt`) and compares consecutive pairs.
pub fn convergence_study<T: Real>(config: &RunConfig<T>, cutoffs: &[usize]) -> Result<ConvergenceStudy> {
    if cutoffs.len() < 2 || cutoffs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("convergence needs at least two strictly increasing cutoffs".into()));
    }
    let configs = cutoffs.iter().map(|&n| config.with_cutoff(n)).collect::<Result<Vec<_>>>()?;
    for c in &configs {
        c.scheme.validate(c.grid.cutoff())?;
    }
    let trajs = run_all(&configs)?;
    if let Some((n, b)) = cutoffs.iter().zip(&trajs).find_map(|(n, t)| t.blowup.map(|b| (n, b))) {
        return Err(Error::InvalidArgument(format!("run with n = {n} blew up at t = {}", b.t)));
    }
    let m = config.nonlinearity.m;
    let mut rows = Vec::new();
    for i in 0..trajs.len() - 1 {
        let (h1, l2_velocity, lm) = sup_differences(&trajs[i], &trajs[i + 1], m)?;
        rows.push(ConvergenceRow { n: cutoffs[i], n_fine: cutoffs[i + 1], h1, l2_velocity, lm });
    }
    let decreasing = rows
        .windows(2)
        .all(|w| w[1].h1 < w[0].h1 && w[1].l2_velocity < w[0].l2_velocity && w[1].lm < w[0].lm);
    let mut triangle_ok = true;
    for i in 0..trajs.len().saturating_sub(2) {
        let (direct_h1, direct_l2, _) = sup_differences(&trajs[i], &trajs[i + 2], m)?;
        let slack = 1e-12 * (1.0 + rows[i].h1 + rows[i + 1].h1);
        triangle_ok &= direct_h1 <= rows[i].h1 + rows[i + 1].h1 + slack;
        triangle_ok &= direct_l2 <= rows[i].l2_velocity + rows[i + 1].l2_velocity + slack;
    }
    Ok(ConvergenceStudy { rows, decreasing, triangle_ok })
}

impl ConvergenceStudy {
    pub fn report(&self) -> ExperimentReport {
        let rows = self.rows.iter().map(|r| vec![r.n as f64, r.n_fine as f64, r.h1, r.l2_velocity, r.lm]).collect();
        let mut rep = ExperimentReport::new(
            "convergence",
            &["n", "n_fine", "sup_h1_u", "sup_l2_v", "sup_lm_u"],
            rows,
            self.decreasing && self.triangle_ok,
            0.0,
        );
        if !self.triangle_ok {
            rep.notes.push("triangle inequality audit failed".into());
        }
        rep
    }
}

// ---------------------------------------------------------------- continuous dependence

#[derive(Clone, Debug, Serialize)]
pub struct DependenceRow {
    pub delta: f64,
    /// `sup_t (||Δu||_{H^1}^2 + ||Δu||_{m+1}^{m+1} + ||Δu_t||_2^2)`.
    pub distance: f64,
    pub h1_sq: f64,
    pub lm_power: f64,
    pub l2_sq: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DependenceStudy {
    pub rows: Vec<DependenceRow>,
    /// Distance strictly decreases as `delta` decreases and vanishes at `delta = 0`.
    pub monotone: bool,
}

/// Perturbs `u_0` by `delta cos(x_1)` and measures the divergence from the base run.
///
/// Refuses exponents outside the uniqueness region unless `allow_uncovered` is set.
pub fn continuous_dependence<T: Real>(
    config: &RunConfig<T>,
    deltas: &[f64],
    allow_uncovered: bool,
) -> Result<DependenceStudy> {
    if config.regime.uniqueness == Uniqueness::NotCovered && !(allow_uncovered || config.allow_uncovered) {
        return Err(Error::Config(vec![
            "continuous dependence is only established in the uniqueness region, which does not cover these exponents; pass --allow-uncovered to run anyway".into(),
        ]));
    }
    if deltas.is_empty() || deltas.iter().any(|d| !d.is_finite()) {
        return Err(Error::InvalidArgument("deltas must be finite and non-empty".into()));
    }
    let base = config.initial_state()?;
    let plan = config.plan();
    let bump = SpectralField::cosine_mode(base.grid(), [1, 0, 0], T::one())?;
    let m1 = config.nonlinearity.m + T::one();
    let mut all: Vec<f64> = std::iter::once(0.0).chain(deltas.iter().copied()).collect();
    all.sort_by(f64::total_cmp);
    all.dedup();
    let trajs: Vec<Trajectory<T>> = all
        .par_iter()
        .map(|&d| {
            let mut s = base.clone();
            s.u.axpy(T::lit(d), &bump);
            integrate_state(s, &plan)
        })
        .collect::<Result<_>>()?;
    let reference = &trajs[all.iter().position(|&d| d == 0.0).expect("zero inserted")];
    let mut rows = Vec::new();
    for (d, traj) in all.iter().zip(&trajs) {
        if traj.blowup.is_some() || traj.samples.len() != reference.samples.len() {
            return Err(Error::InvalidArgument(format!("perturbed run delta = {d} did not reach the horizon")));
        }
        let mut best = DependenceRow { delta: *d, distance: 0.0, h1_sq: 0.0, lm_power: 0.0, l2_sq: 0.0 };
        for (a, b) in traj.samples.iter().zip(&reference.samples) {
            let du = a.u.sub(&b.u);
            let dv = a.v.sub(&b.v);
            let h1 = h1_norm(&du).powi(2).as_f64();
            let lm = lp_power(&inverse_transform(&du)?, m1)?.as_f64();
            let l2 = l2_norm_spectral(&dv).powi(2).as_f64();
            if h1 + lm + l2 > best.distance {
                best = DependenceRow { delta: *d, distance: h1 + lm + l2, h1_sq: h1, lm_power: lm, l2_sq: l2 };
            }
        }
        rows.push(best);
    }
    let nonneg: Vec<&DependenceRow> = rows.iter().filter(|r| r.delta >= 0.0).collect();
    let monotone = nonneg.first().is_some_and(|r| r.delta == 0.0 && r.distance == 0.0)
        && nonneg.windows(2).all(|w| w[1].distance > w[0].distance);
    Ok(DependenceStudy { rows, monotone })
}

impl DependenceStudy {
    pub fn report(&self) -> ExperimentReport {
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let ratio = if r.delta == 0.0 { 0.0 } else { r.distance / (r.delta * r.delta) };
                vec![r.delta, r.distance, ratio, r.h1_sq, r.lm_power, r.l2_sq]
            })
            .collect();
        ExperimentReport::new(
            "continuous_dependence",
            &["delta", "distance", "distance_over_delta_sq", "h1_sq", "lm_power", "l2_sq"],
            rows,
            self.monotone,
            0.0,
        )
    }
}

// ---------------------------------------------------------------- weak form

#[derive(Clone, Debug, PartialEq)]
pub enum TimeProfile {
    /// `sum_i c_i t^i`.
    Polynomial(Vec<f64>),
    /// `cos(omega t + phase)`.
    Cosine { omega: f64, phase: f64 },
}

impl TimeProfile {
    fn value_and_derivative(&self, t: f64) -> (f64, f64) {
        match self {
            TimeProfile::Polynomial(c) => {
                let v = c.iter().rev().fold(0.0, |acc, &ci| acc * t + ci);
                let d = c.iter().enumerate().skip(1).rev().fold(0.0, |acc, (i, &ci)| acc * t + i as f64 * ci);
                (v, d)
            }
            TimeProfile::Cosine { omega, phase } => {
                let a = omega * t + phase;
                (a.cos(), -omega * a.sin())
            }
        }
    }
}

/// `phi(x, t) = sum_j theta_j(t) cos(k_j . x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TestFunction {
    pub terms: Vec<(Mode, TimeProfile)>,
}

/// Accumulates
/// `R(t) = [int u_t phi]_0^t - int_0^t int u_t phi_t + int_0^t int (grad u . grad phi + g(u_t) phi - h(u) phi)`
/// by trapezoidal quadrature over the states it is fed.
#[derive(Clone, Debug)]
pub struct WeakFormAccumulator {
    test: TestFunction,
    v0_pairing: f64,
    integral: f64,
    last: Option<(f64, f64)>,
    pub residuals: Vec<(f64, f64)>,
}

impl WeakFormAccumulator {
    pub fn new(test: TestFunction) -> Self {
        Self { test, v0_pairing: 0.0, integral: 0.0, last: None, residuals: Vec::new() }
    }

    /// Returns `(int u_t phi, time integrand)` at one state.
    fn pairings<T: Real>(&self, s: &SolverState<T>, params: &NonlinearityParams<T>) -> Result<(f64, f64)> {
        let g = projected_nonlinear_term(&s.v, NonlinearKind::Damping, params)?;
        let h = projected_nonlinear_term(&s.u, NonlinearKind::Source, params)?;
        let vol = s.grid().volume();
        let t = s.t.as_f64();
        let (mut pair, mut integrand) = (0.0, 0.0);
        for (k, prof) in &self.test.terms {
            if s.grid().mode_index(k).is_none() {
                return Err(Error::InvalidCutoff { requested: k.iter().map(|c| c.unsigned_abs() as usize).max().unwrap_or(0), available: s.grid().cutoff() });
            }
            let (th, dth) = prof.value_and_derivative(t);
            let re = |f: &SpectralField<T>| vol * f.coeff(k).re.as_f64();
            let k2 = wavenumber_sq(k) as f64;
            pair += th * re(&s.v);
            integrand += -dth * re(&s.v) + th * (k2 * re(&s.u) + re(&g) - re(&h));
        }
        Ok((pair, integrand))
    }

    pub fn push<T: Real>(&mut self, s: &SolverState<T>, params: &NonlinearityParams<T>) -> Result<f64> {
        let (pair, integrand) = self.pairings(s, params)?;
        let t = s.t.as_f64();
        match self.last {
            None => self.v0_pairing = pair,
            Some((t0, f0)) => self.integral += 0.5 * (t - t0) * (f0 + integrand),
        }
        self.last = Some((t, integrand));
        let r = pair - self.v0_pairing + self.integral;
        self.residuals.push((t, r));
        Ok(r)
    }

    pub fn max_abs(&self) -> f64 {
        self.residuals.iter().fold(0.0, |a, (_, r)| a.max(r.abs()))
    }

    pub fn final_value(&self) -> f64 {
        self.residuals.last().map_or(0.0, |r| r.1)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WeakResidual {
    /// Signed residual at the last time.
    pub final_value: f64,
    /// `max_t |R(t)|`.
    pub max_abs: f64,
    pub series: Vec<(f64, f64)>,
}

/// Evaluates the weak-form residual on the stored samples of a trajectory.
pub fn weak_form_residual<T: Real>(
    trajectory: &Trajectory<T>,
    params: &NonlinearityParams<T>,
    test: &TestFunction,
) -> Result<WeakResidual> {
    let mut acc = WeakFormAccumulator::new(test.clone());
    for s in &trajectory.samples {
        acc.push(s, params)?;
    }
    Ok(WeakResidual { final_value: acc.final_value(), max_abs: acc.max_abs(), series: acc.residuals })
}

/// Integrates and evaluates the residual of each test function at every step.
pub fn weak_form_residuals_run<T: Real>(
    initial: SolverState<T>,
    plan: &RunPlan<T>,
    tests: &[TestFunction],
) -> Result<(Trajectory<T>, Vec<WeakResidual>)> {
    let mut accs: Vec<WeakFormAccumulator> = tests.iter().cloned().map(WeakFormAccumulator::new).collect();
    for a in &mut accs {
        a.push(&initial, &plan.params)?;
    }
    let traj = integrate_with(initial, plan, |integ| {
        for a in accs.iter_mut() {
            a.push(integ.state(), &plan.params)?;
        }
        Ok(())
    })?;
    let out = accs
        .into_iter()
        .map(|a| WeakResidual { final_value: a.final_value(), max_abs: a.max_abs(), series: a.residuals })
        .collect();
    Ok((traj, out))
}

// ---------------------------------------------------------------- blow-up

#[derive(Clone, Debug, Serialize)]
pub struct BlowupRow {
    pub dt: f64,
    /// Threshold crossing time, `None` if the run reached the horizon.
    pub crossing: Option<f64>,
    pub final_modified_energy: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BlowupStudy {
    pub rows: Vec<BlowupRow>,
    /// The last two crossing times differ by at most `tolerance` of their mean.
    pub converged: bool,
    pub tolerance: f64,
}

pub const BLOWUP_TIME_TOLERANCE: f64 = 0.1;

pub fn blowup_probe<T: Real>(config: &RunConfig<T>, dts: &[f64]) -> Result<BlowupStudy> {
    if dts.is_empty() || dts.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::InvalidArgument("dts must be positive and non-empty".into()));
    }
    let configs: Vec<RunConfig<T>> = dts.iter().map(|&d| config.with_dt(T::lit(d))).collect();
    let trajs = run_all(&configs)?;
    let rows: Vec<BlowupRow> = dts
        .iter()
        .zip(&trajs)
        .map(|(&dt, tr)| BlowupRow {
            dt,
            crossing: tr.blowup.map(|b| b.t.as_f64()),
            final_modified_energy: tr.energy.last().map_or(f64::NAN, |e| e.modified_e.as_f64()),
        })
        .collect();
    let converged = match rows.as_slice() {
        [.., a, b] => match (a.crossing, b.crossing) {
            (Some(x), Some(y)) => (x - y).abs() <= BLOWUP_TIME_TOLERANCE * 0.5 * (x + y),
            _ => false,
        },
        [a] => a.crossing.is_some(),
        [] => false,
    };
    Ok(BlowupStudy { rows, converged, tolerance: BLOWUP_TIME_TOLERANCE })
}

impl BlowupStudy {
    pub fn report(&self) -> ExperimentReport {
        let rows = self
            .rows
            .iter()
            .map(|r| vec![r.dt, r.crossing.unwrap_or(f64::NAN), r.final_modified_energy])
            .collect();
        ExperimentReport::new(
            "blowup",
            &["dt", "crossing_time", "final_modified_E"],
            rows,
            self.converged,
            self.tolerance,
        )
    }
}

// ---------------------------------------------------------------- Gronwall constant

#[derive(Clone, Debug, Serialize)]
pub struct GronwallRow {
    pub n: usize,
    pub dt: f64,
    pub rate: f64,
}

/// Empirical Gronwall rate for each `(n, dt)` combination.
pub fn gronwall_study<T: Real>(config: &RunConfig<T>, cutoffs: &[usize], dts: &[f64]) -> Result<Vec<GronwallRow>> {
    let mut configs = Vec::new();
    let mut keys = Vec::new();
    for &n in cutoffs {
        for &dt in dts {
            configs.push(config.with_cutoff(n)?.with_dt(T::lit(dt)));
            keys.push((n, dt));
        }
    }
    let trajs = run_all(&configs)?;
    keys.into_iter()
        .zip(&trajs)
        .map(|((n, dt), tr)| Ok(GronwallRow { n, dt, rate: gronwall_rate(tr)?.as_f64() }))
        .collect()
}

/// Relative spread `(max - min) / max` of a set of positive values.
pub fn relative_spread(values: &[f64]) -> f64 {
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    if hi == 0.0 {
        0.0
    } else {
        (hi - lo) / hi
    }
}

// ---------------------------------------------------------------- projection

/// Named one-dimensional functions used by the projection study.
pub fn builtin_profile(name: &str) -> Result<fn(f64) -> f64> {
    Ok(match name {
        "abs_sin_cubed" => |x: f64| x.sin().abs().powi(3),
        "abs_sin_2_5" => |x: f64| x.sin().abs().powf(2.5),
        "quartic" => |x: f64| (x * x - std::f64::consts::PI.powi(2)).powi(2),
        "cos" => |x: f64| x.cos(),
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown profile {other:?}; choose abs_sin_cubed, abs_sin_2_5, quartic or cos"
            )))
        }
    })
}

/// `||f - P_j f||_s` for each cutoff, sampled on `points` nodes of the circle.
pub fn projection_study(profile: &str, s: f64, cutoffs: &[usize], points: usize) -> Result<ProjectionProbe<f64>> {
    let f = builtin_profile(profile)?;
    let top = cutoffs.iter().copied().max().unwrap_or(0);
    let grid = TorusGrid::with_points(1, top, points)?;
    let field: GridField<f64> = GridField::from_fn(&grid, |x| f(x[0]));
    projection_convergence_probe(&field, s, cutoffs)
}

impl ProjectionProbe<f64> {
    pub fn report(&self) -> ExperimentReport {
        let rows = self.errors.iter().map(|(j, e)| vec![*j as f64, *e]).collect();
        let decreasing = self.errors.windows(2).all(|w| w[1].1 < w[0].1);
        ExperimentReport::new("projection", &["cutoff", "error"], rows, decreasing, 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integrate_ode(c: f64, q: f64, a0: f64, a1: f64, t: f64) -> (f64, f64) {
        let f = |y: f64, v: f64| (v, -c * v - q * y);
        let steps = 20000;
        let h = t / steps as f64;
        let (mut y, mut v) = (a0, a1);
        for _ in 0..steps {
            let (k1y, k1v) = f(y, v);
            let (k2y, k2v) = f(y + 0.5 * h * k1y, v + 0.5 * h * k1v);
            let (k3y, k3v) = f(y + 0.5 * h * k2y, v + 0.5 * h * k2v);
            let (k4y, k4v) = f(y + h * k3y, v + h * k3v);
            y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
            v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        }
        (y, v)
    }

    #[test]
    fn damped_mode_matches_numerical_ode() {
        for (c, q) in [(1.0, 0.0), (1.0, -1.0), (1.0, 0.25), (1.0, 3.0), (0.0, 4.0), (0.0, 0.0), (0.0, -1.0)] {
            let (y, dy) = damped_mode(c, q, 0.7, -0.3, 2.5);
            let (ry, rdy) = integrate_ode(c, q, 0.7, -0.3, 2.5);
            assert!((y - ry).abs() <= 1e-10 && (dy - rdy).abs() <= 1e-10, "c {c} q {q}: {y} vs {ry}");
        }
    }

    #[test]
    fn oracle_rejects_nonlinear_params() {
        let g = TorusGrid::new(1, 2, 2.0).unwrap();
        let s = SolverState::<f64>::zeros(&g);
        assert!(linear_oracle_state(&s, &NonlinearityParams::power_law(3.0, 1.0).unwrap(), 1.0).is_err());
        assert!(linear_oracle_state(&s, &NonlinearityParams::power_law(1.0, 1.0).unwrap(), 1.0).is_ok());
    }

    #[test]
    fn time_profiles() {
        let p = TimeProfile::Polynomial(vec![1.0, 2.0, 3.0]);
        assert_eq!(p.value_and_derivative(2.0), (17.0, 14.0));
        let c = TimeProfile::Cosine { omega: 2.0, phase: 0.0 };
        assert_eq!(c.value_and_derivative(0.0), (1.0, -0.0));
    }

    #[test]
    fn spread() {
        assert_eq!(relative_spread(&[1.0, 0.8, 0.9]), 0.19999999999999996);
        assert_eq!(observed_orders(&[4.0, 1.0]), vec![2.0]);
    }
}
