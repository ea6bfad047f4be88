//! Semidiscrete Galerkin system
//! `u'' - Delta u + P_n g(u') = P_n h(u)` with `u(0) = P_n u_0`, `u'(0) = P_n u_1`.

use crate::error::{Error, Result};
use crate::fourier::{forward_transform, inverse_transform, GridField, SpectralField, TorusGrid};
use crate::nonlinearity::{damping_eval, source_eval, Damping, NonlinearityParams, Source};
use crate::scalar::Real;

/// One trajectory point `(t, u_n, u_n')`.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverState<T> {
    pub t: T,
    pub u: SpectralField<T>,
    pub v: SpectralField<T>,
}

impl<T: Real> SolverState<T> {
    pub fn new(t: T, u: SpectralField<T>, v: SpectralField<T>) -> Result<Self> {
        if u.grid() != v.grid() {
            return Err(Error::InvalidGrid("u and u_t must share one grid".into()));
        }
        Ok(Self { t, u, v })
    }

    pub fn zeros(grid: &TorusGrid) -> Self {
        Self { t: T::zero(), u: SpectralField::zeros(grid), v: SpectralField::zeros(grid) }
    }

    pub fn grid(&self) -> &TorusGrid {
        self.u.grid()
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.u.is_finite() && self.v.is_finite()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NonlinearKind {
    Damping,
    Source,
}

/// `coeff(k) -> -|k|^2 coeff(k)`.
pub fn apply_laplacian<T: Real>(s: &SpectralField<T>) -> SpectralField<T> {
    s.apply_symbol(|k2| -T::lit(k2 as f64))
}

/// `P_n` of the pointwise nonlinearity, evaluated on the field's (oversampled) grid.
pub fn projected_nonlinear_term<T: Real>(
    s: &SpectralField<T>,
    kind: NonlinearKind,
    params: &NonlinearityParams<T>,
) -> Result<SpectralField<T>> {
    match kind {
        NonlinearKind::Damping => match params.damping {
            Damping::Disabled => return Ok(SpectralField::zeros(s.grid())),
            Damping::PowerLaw if params.m == T::one() => return Ok(s.clone()),
            _ => {}
        },
        NonlinearKind::Source => match params.source {
            Source::Disabled => return Ok(SpectralField::zeros(s.grid())),
            Source::PowerLaw if params.p == T::one() => return Ok(s.clone()),
            _ => {}
        },
    }
    let physical = inverse_transform(s)?;
    let mapped = match kind {
        NonlinearKind::Damping => physical.map(|v| damping_eval(v, params)),
        NonlinearKind::Source => physical.map(|u| source_eval(u, params)),
    };
    forward_transform(&mapped)
}

/// Time derivative `(u', v')` of the Galerkin system.
pub fn rhs<T: Real>(
    state: &SolverState<T>,
    params: &NonlinearityParams<T>,
) -> Result<(SpectralField<T>, SpectralField<T>)> {
    let du = state.v.clone();
    let mut dv = apply_laplacian(&state.u);
    dv.axpy(-T::one(), &projected_nonlinear_term(&state.v, NonlinearKind::Damping, params)?);
    dv.axpy(T::one(), &projected_nonlinear_term(&state.u, NonlinearKind::Source, params)?);
    Ok((du, dv))
}

/// Initial-data inputs accepted by [`initial_state`].
pub trait ToSpectral<T> {
    /// Fourier coefficients up to `cutoff`, or an error if the input cannot resolve them.
    fn spectral_up_to(&self, cutoff: usize) -> Result<SpectralField<T>>;
}

impl<T: Real> ToSpectral<T> for SpectralField<T> {
    fn spectral_up_to(&self, _cutoff: usize) -> Result<SpectralField<T>> {
        Ok(self.clone())
    }
}

impl<T: Real> ToSpectral<T> for GridField<T> {
    fn spectral_up_to(&self, cutoff: usize) -> Result<SpectralField<T>> {
        let available = (self.grid().points() - 1) / 2;
        if cutoff > available {
            return Err(Error::InvalidCutoff { requested: cutoff, available });
        }
        forward_transform(&self.with_cutoff(cutoff)?)
    }
}

/// `(0, P_n u_0, P_n u_1)` on `grid`; spectral inputs with a smaller cutoff are zero-padded.
pub fn initial_state<T: Real>(
    u0: &impl ToSpectral<T>,
    u1: &impl ToSpectral<T>,
    grid: &TorusGrid,
) -> Result<SolverState<T>> {
    let u = u0.spectral_up_to(grid.cutoff())?.transfer(grid)?;
    let v = u1.spectral_up_to(grid.cutoff())?.transfer(grid)?;
    Ok(SolverState { t: T::zero(), u, v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::{h1_norm, l2_norm_spectral};
    use num_complex::Complex;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(grid: &TorusGrid, seed: u64) -> SpectralField<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeffs = (0..grid.num_modes())
            .map(|_| Complex::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)))
            .collect();
        let mut s = SpectralField::from_coeffs(grid, coeffs).unwrap();
        s.symmetrize();
        s
    }

    #[test]
    fn laplacian_symbol() {
        let g = TorusGrid::new(3, 2, 2.0).unwrap();
        let c = SpectralField::<f64>::cosine_mode(&g, [0, 0, 0], 3.0).unwrap();
        assert_eq!(apply_laplacian(&c).max_abs(), 0.0);
        let one = Complex::new(1.0, 0.0);
        let s = SpectralField::<f64>::from_modes(&g, &[([1, 0, 0], one), ([1, 2, 2], one)]).unwrap();
        let l = apply_laplacian(&s);
        assert_eq!(l.coeff(&[1, 0, 0]), -one);
        assert_eq!(l.coeff(&[1, 2, 2]), one.scale(-9.0));
    }

    #[test]
    fn cube_of_cosine_matches_trig_identity() {
        let par = NonlinearityParams::power_law(1.0, 3.0).unwrap();
        for n in [3usize, 5] {
            let g = TorusGrid::new(1, n, 2.0).unwrap();
            let u = SpectralField::cosine_mode(&g, [1, 0, 0], 1.0).unwrap();
            let out = projected_nonlinear_term(&u, NonlinearKind::Source, &par).unwrap();
            for (i, c) in out.coeffs().iter().enumerate() {
                let k = g.mode(i)[0].abs();
                let expect = match k {
                    1 => 3.0 / 8.0,
                    3 => 1.0 / 8.0,
                    _ => 0.0,
                };
                assert!((c - Complex::new(expect, 0.0)).norm() <= 1e-10, "n {n} k {k}");
            }
        }
        let g = TorusGrid::new(1, 1, 2.0).unwrap();
        let u = SpectralField::cosine_mode(&g, [1, 0, 0], 1.0).unwrap();
        let out = projected_nonlinear_term(&u, NonlinearKind::Source, &par).unwrap();
        assert!((out.coeff(&[1, 0, 0]).re - 3.0f64 / 8.0).abs() <= 1e-10);
        assert!((out.coeff(&[-1, 0, 0]).re - 3.0f64 / 8.0).abs() <= 1e-10);
        assert!(out.coeff(&[0, 0, 0]).norm() <= 1e-12);
    }

    #[test]
    fn linear_exponents_are_identity() {
        let g = TorusGrid::new(2, 3, 2.0).unwrap();
        let s = random(&g, 1);
        let par = NonlinearityParams::power_law(1.0, 1.0).unwrap();
        assert_eq!(projected_nonlinear_term(&s, NonlinearKind::Damping, &par).unwrap(), s);
        assert_eq!(projected_nonlinear_term(&s, NonlinearKind::Source, &par).unwrap(), s);
        let z = SpectralField::<f64>::zeros(&g);
        let par3 = NonlinearityParams::power_law(3.0, 2.5).unwrap();
        assert_eq!(projected_nonlinear_term(&z, NonlinearKind::Source, &par3).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn linear_rhs_on_single_mode() {
        let g = TorusGrid::new(1, 2, 2.0).unwrap();
        let (alpha, beta) = (0.7f64, -0.3f64);
        let state = SolverState::new(
            0.0,
            SpectralField::cosine_mode(&g, [1, 0, 0], alpha).unwrap(),
            SpectralField::cosine_mode(&g, [1, 0, 0], beta).unwrap(),
        )
        .unwrap();
        let (du, dv) = rhs(&state, &NonlinearityParams::power_law(1.0, 1.0).unwrap()).unwrap();
        assert!((du.coeff(&[1, 0, 0]).re - beta / 2.0).abs() <= 1e-15);
        assert!((dv.coeff(&[1, 0, 0]).re + beta / 2.0).abs() <= 1e-15);
    }

    #[test]
    fn constant_state_feels_only_the_source() {
        let g = TorusGrid::new(2, 2, 2.0).unwrap();
        let c = -1.3f64;
        let state = SolverState::new(0.0, SpectralField::cosine_mode(&g, [0, 0, 0], c).unwrap(), SpectralField::zeros(&g))
            .unwrap();
        let par = NonlinearityParams::power_law(3.0, 2.5).unwrap();
        let (du, dv) = rhs(&state, &par).unwrap();
        assert_eq!(du.max_abs(), 0.0);
        let expect = -(c.abs().powf(2.5));
        for (i, z) in dv.coeffs().iter().enumerate() {
            let target = if g.mode(i) == [0, 0, 0] { expect } else { 0.0 };
            assert!((z - Complex::new(target, 0.0)).norm() <= 1e-12);
        }
        let zero = SolverState::<f64>::zeros(&g);
        let (du, dv) = rhs(&zero, &par).unwrap();
        assert_eq!(du.max_abs() + dv.max_abs(), 0.0);
    }

    #[test]
    fn rhs_preserves_hermitian_symmetry() {
        let g = TorusGrid::new(2, 4, 2.0).unwrap();
        let state = SolverState::new(0.0, random(&g, 2), random(&g, 3)).unwrap();
        let (du, dv) = rhs(&state, &NonlinearityParams::power_law(2.5, 1.5).unwrap()).unwrap();
        assert!(du.hermitian_defect() <= 1e-10);
        assert!(dv.hermitian_defect() <= 1e-10);
    }

    #[test]
    fn linear_rhs_is_linear() {
        let g = TorusGrid::new(1, 6, 2.0).unwrap();
        let par = NonlinearityParams::power_law(1.0, 1.0).unwrap();
        let s1 = SolverState::new(0.0, random(&g, 4), random(&g, 5)).unwrap();
        let s2 = SolverState::new(0.0, random(&g, 6), random(&g, 7)).unwrap();
        let (a, b) = (1.7, -0.4);
        let combo =
            SolverState::new(0.0, s1.u.scale(a).add(&s2.u.scale(b)), s1.v.scale(a).add(&s2.v.scale(b))).unwrap();
        let (_, dv1) = rhs(&s1, &par).unwrap();
        let (_, dv2) = rhs(&s2, &par).unwrap();
        let (_, dvc) = rhs(&combo, &par).unwrap();
        let diff = dvc.sub(&dv1.scale(a).add(&dv2.scale(b)));
        assert!(diff.max_abs() <= 1e-10);
    }

    #[test]
    fn initial_state_truncates() {
        let g = TorusGrid::new(1, 4, 2.0).unwrap();
        let fine = TorusGrid::new(1, 16, 2.0).unwrap();
        let u0 = GridField::<f64>::from_fn(&fine, |x| x[0].cos() + (5.0 * x[0]).cos());
        let u1 = SpectralField::cosine_mode(&TorusGrid::new(1, 2, 2.0).unwrap(), [2, 0, 0], 1.0).unwrap();
        let st = initial_state(&u0, &u1, &g).unwrap();
        assert_eq!(st.t, 0.0);
        assert!((st.u.coeff(&[1, 0, 0]).re - 0.5).abs() <= 1e-12);
        assert_eq!(st.u.coeff(&[5, 0, 0]).norm(), 0.0);
        assert_eq!(st.v.coeff(&[2, 0, 0]).re, 0.5);
        let coarse = GridField::<f64>::zeros(&TorusGrid::with_points(1, 1, 6).unwrap());
        assert!(initial_state(&coarse, &u1, &g).is_err());
    }

    #[test]
    fn initial_state_contracts_norms() {
        let fine = TorusGrid::new(3, 5, 1.0).unwrap();
        let g = TorusGrid::new(3, 2, 2.0).unwrap();
        for seed in 0..5 {
            let u0 = random(&fine, 10 + seed);
            let u1 = random(&fine, 20 + seed);
            let st = initial_state(&u0, &u1, &g).unwrap();
            assert!(h1_norm(&st.u) <= h1_norm(&u0));
            assert!(l2_norm_spectral(&st.v) <= l2_norm_spectral(&u1));
        }
    }
}
