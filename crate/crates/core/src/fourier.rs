//! Fourier machinery on the torus `[-pi, pi)^d`.
//!
//! Spectral fields store the square-truncated coefficient cube `|k_i| <= n`
//! under the normalization `coeff(k) = (1/M^d) sum_x f(x) e^{-i k.x}`, so that
//! `cos(x_1)` has `coeff(+-e_1) = 1/2` and `||f||_2 = (2 pi)^{d/2} |coeff|_2`.
//! Physical grids are uniform with `M >= 2n + 1` points per axis.

use std::f64::consts::PI;

use num_complex::Complex;
use rustfft::FftDirection;

use crate::error::{Error, Result};
use crate::scalar::{pow_abs, Real};

/// Integer wave vector padded to three components (unused axes are 0).
pub type Mode = [i64; 3];

/// Relative tolerance for Hermitian symmetry and the imaginary residue of inverse transforms.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// [`HERMITIAN_TOL`], widened to a few hundred ulps for low-precision scalars.
pub fn hermitian_tolerance<T: Real>() -> T {
    T::lit(HERMITIAN_TOL).max(T::lit(1024.0) * T::epsilon())
}

/// Spectral cutoff plus physical sampling for one torus discretization.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TorusGrid {
    dim: usize,
    cutoff: usize,
    points: usize,
}

impl TorusGrid {
    /// Grid with `M = ceil(oversample * (2n + 1))`, rounded up to an even integer.
    pub fn new(dim: usize, cutoff: usize, oversample: f64) -> Result<Self> {
        if !(oversample.is_finite() && oversample >= 1.0) {
            return Err(Error::InvalidGrid(format!("oversample must be >= 1, got {oversample}")));
        }
        let mut points = (oversample * (2 * cutoff + 1) as f64).ceil() as usize;
        if points % 2 == 1 {
            points += 1;
        }
        Self::with_points(dim, cutoff, points)
    }

    pub fn with_points(dim: usize, cutoff: usize, points: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension must be 1, 2 or 3, got {dim}")));
        }
        if points < 2 * cutoff + 1 {
            return Err(Error::InvalidGrid(format!(
                "{points} points per axis cannot resolve cutoff {cutoff} (need >= {})",
                2 * cutoff + 1
            )));
        }
        Ok(Self { dim, cutoff, points })
    }

    /// Same physical grid, different spectral cutoff.
    pub fn with_cutoff(&self, cutoff: usize) -> Result<Self> {
        Self::with_points(self.dim, cutoff, self.points)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn modes_per_axis(&self) -> usize {
        2 * self.cutoff + 1
    }

    pub fn num_modes(&self) -> usize {
        self.modes_per_axis().pow(self.dim as u32)
    }

    pub fn num_points(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.points as f64
    }

    /// Quadrature weight `(2 pi / M)^d` of a single grid point.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Volume `(2 pi)^d` of the torus.
    pub fn volume(&self) -> f64 {
        (2.0 * PI).powi(self.dim as i32)
    }

    /// Wave vector of the coefficient stored at `idx` (row-major, axis 0 slowest).
    pub fn mode(&self, idx: usize) -> Mode {
        let w = self.modes_per_axis();
        let n = self.cutoff as i64;
        let mut k = [0i64; 3];
        let mut rem = idx;
        for a in (0..self.dim).rev() {
            k[a] = (rem % w) as i64 - n;
            rem /= w;
        }
        k
    }

    pub fn mode_index(&self, k: &Mode) -> Option<usize> {
        let n = self.cutoff as i64;
        let w = self.modes_per_axis();
        if k[self.dim..].iter().any(|&c| c != 0) {
            return None;
        }
        let mut idx = 0usize;
        for &ka in &k[..self.dim] {
            if ka.abs() > n {
                return None;
            }
            idx = idx * w + (ka + n) as usize;
        }
        Some(idx)
    }

    pub fn modes(&self) -> impl Iterator<Item = Mode> + '_ {
        (0..self.num_modes()).map(move |i| self.mode(i))
    }

    /// Physical coordinates of grid point `idx`, in `[-pi, pi)`.
    pub fn coordinate(&self, idx: usize) -> [f64; 3] {
        let mut x = [0.0; 3];
        let mut rem = idx;
        for a in (0..self.dim).rev() {
            let j = rem % self.points;
            rem /= self.points;
            x[a] = -PI + self.spacing() * j as f64;
        }
        x
    }

    /// Offset of mode `k` inside an FFT buffer of `M^d` points.
    fn fft_slot(&self, k: &Mode) -> usize {
        let m = self.points as i64;
        k[..self.dim]
            .iter()
            .fold(0usize, |acc, &ka| acc * self.points + ka.rem_euclid(m) as usize)
    }
}

/// `|k|^2`.
pub fn wavenumber_sq(k: &Mode) -> i64 {
    k.iter().map(|c| c * c).sum()
}

fn negate(k: &Mode) -> Mode {
    [-k[0], -k[1], -k[2]]
}

/// Phase `e^{i k pi} = (-1)^{k_1 + ... + k_d}` from the grid starting at `-pi`.
fn parity_sign<T: Real>(k: &Mode) -> T {
    if k.iter().sum::<i64>().rem_euclid(2) == 0 {
        T::one()
    } else {
        -T::one()
    }
}

/// Square-truncated Fourier coefficients of a (real) field on the torus.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField<T> {
    grid: TorusGrid,
    coeffs: Vec<Complex<T>>,
}

impl<T: Real> SpectralField<T> {
    pub fn zeros(grid: &TorusGrid) -> Self {
        Self { grid: grid.clone(), coeffs: vec![Complex::new(T::zero(), T::zero()); grid.num_modes()] }
    }

    pub fn from_coeffs(grid: &TorusGrid, coeffs: Vec<Complex<T>>) -> Result<Self> {
        if coeffs.len() != grid.num_modes() {
            return Err(Error::DimensionMismatch { expected: grid.num_modes(), got: coeffs.len() });
        }
        Ok(Self { grid: grid.clone(), coeffs })
    }

    /// Builds a field from `(k, coeff)` pairs; modes outside the cutoff are an error.
    pub fn from_modes(grid: &TorusGrid, modes: &[(Mode, Complex<T>)]) -> Result<Self> {
        let mut out = Self::zeros(grid);
        for (k, c) in modes {
            let idx = grid.mode_index(k).ok_or(Error::InvalidCutoff {
                requested: k.iter().map(|c| c.unsigned_abs() as usize).max().unwrap_or(0),
                available: grid.cutoff(),
            })?;
            out.coeffs[idx] = out.coeffs[idx] + *c;
        }
        Ok(out)
    }

    /// `amplitude * cos(k.x)`.
    pub fn cosine_mode(grid: &TorusGrid, k: Mode, amplitude: T) -> Result<Self> {
        let half = Complex::new(amplitude / T::lit(2.0), T::zero());
        if k == [0, 0, 0] {
            return Self::from_modes(grid, &[(k, Complex::new(amplitude, T::zero()))]);
        }
        Self::from_modes(grid, &[(k, half), (negate(&k), half)])
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.coeffs
    }

    /// Coefficient of mode `k`; zero when `k` is outside the truncation.
    pub fn coeff(&self, k: &Mode) -> Complex<T> {
        self.grid
            .mode_index(k)
            .map(|i| self.coeffs[i])
            .unwrap_or_else(|| Complex::new(T::zero(), T::zero()))
    }

    pub fn max_abs(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |acc, c| acc.max(c.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// `max_k |coeff(-k) - conj(coeff(k))|`.
    pub fn hermitian_defect(&self) -> T {
        let mut worst = T::zero();
        for (i, c) in self.coeffs.iter().enumerate() {
            let k = self.grid.mode(i);
            let mirror = self.coeff(&negate(&k));
            let d = (mirror - c.conj()).norm();
            if !(d <= worst) {
                worst = d;
            }
        }
        worst
    }

    pub fn check_hermitian(&self) -> Result<()> {
        let defect = self.hermitian_defect();
        let tol = hermitian_tolerance::<T>() * T::one().max(self.max_abs());
        if defect <= tol {
            Ok(())
        } else {
            Err(Error::HermitianViolation { defect: defect.as_f64(), tolerance: tol.as_f64() })
        }
    }

    /// Replaces each pair by its Hermitian part `(c(k) + conj c(-k)) / 2`.
    pub fn symmetrize(&mut self) {
        let half = T::lit(0.5);
        let old = self.coeffs.clone();
        for (i, c) in self.coeffs.iter_mut().enumerate() {
            let k = self.grid.mode(i);
            let j = self.grid.mode_index(&negate(&k)).expect("square truncation is symmetric");
            *c = (old[i] + old[j].conj()).scale(half);
        }
    }

    /// Copies the common modes onto `grid` (zero-padding or truncating as needed).
    pub fn transfer(&self, grid: &TorusGrid) -> Result<Self> {
        if grid.dim() != self.grid.dim() {
            return Err(Error::InvalidGrid(format!(
                "cannot transfer a {}-d field to a {}-d grid",
                self.grid.dim(),
                grid.dim()
            )));
        }
        let mut out = Self::zeros(grid);
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            *c = self.coeff(&grid.mode(i));
        }
        Ok(out)
    }

    pub fn scale(&self, a: T) -> Self {
        Self { grid: self.grid.clone(), coeffs: self.coeffs.iter().map(|c| c.scale(a)).collect() }
    }

    /// `self += a * x`.
    pub fn axpy(&mut self, a: T, x: &Self) {
        debug_assert_eq!(self.grid, x.grid);
        for (c, xc) in self.coeffs.iter_mut().zip(&x.coeffs) {
            *c = *c + xc.scale(a);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(T::one(), other);
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(-T::one(), other);
        out
    }

    /// Multiplies every coefficient by `symbol(|k|^2)`.
    pub fn apply_symbol(&self, symbol: impl Fn(i64) -> T) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c.scale(symbol(wavenumber_sq(&self.grid.mode(i)))))
            .collect();
        Self { grid: self.grid.clone(), coeffs }
    }
}

/// Real samples on the uniform `M^d` grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField<T> {
    grid: TorusGrid,
    values: Vec<T>,
}

impl<T: Real> GridField<T> {
    pub fn new(grid: &TorusGrid, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.num_points() {
            return Err(Error::DimensionMismatch { expected: grid.num_points(), got: values.len() });
        }
        Ok(Self { grid: grid.clone(), values })
    }

    pub fn zeros(grid: &TorusGrid) -> Self {
        Self { grid: grid.clone(), values: vec![T::zero(); grid.num_points()] }
    }

    /// Samples `f(x)` at every grid point.
    pub fn from_fn(grid: &TorusGrid, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.num_points())
            .map(|i| {
                let x = grid.coordinate(i);
                T::lit(f(&x[..grid.dim()]))
            })
            .collect();
        Self { grid: grid.clone(), values }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// Same samples reinterpreted with another spectral cutoff on the same physical grid.
    pub fn with_cutoff(&self, cutoff: usize) -> Result<Self> {
        Ok(Self { grid: self.grid.with_cutoff(cutoff)?, values: self.values.clone() })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.values.len() != other.values.len() {
            return Err(Error::DimensionMismatch { expected: self.values.len(), got: other.values.len() });
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| *a - *b).collect();
        Ok(Self { grid: self.grid.clone(), values })
    }

    /// Uniform quadrature `sum_x w(x) (2 pi / M)^d` applied to `density(f(x))`.
    pub fn integrate(&self, density: impl Fn(T) -> T) -> T {
        let sum: T = self.values.iter().map(|&v| density(v)).sum();
        sum * T::lit(self.grid.cell_volume())
    }
}

/// In-place unnormalized d-dimensional FFT over a row-major `M^d` buffer.
fn fft_nd<T: Real>(buf: &mut [Complex<T>], dim: usize, points: usize, direction: FftDirection) {
    let fft = T::with_planner(|p| p.plan_fft(points, direction));
    let mut line = vec![Complex::new(T::zero(), T::zero()); points];
    let mut scratch = vec![Complex::new(T::zero(), T::zero()); fft.get_inplace_scratch_len()];
    for axis in 0..dim {
        let stride = points.pow((dim - 1 - axis) as u32);
        if stride == 1 {
            for chunk in buf.chunks_exact_mut(points) {
                fft.process_with_scratch(chunk, &mut scratch);
            }
            continue;
        }
        let blocks = points.pow(axis as u32);
        for block in 0..blocks {
            for inner in 0..stride {
                let base = block * points * stride + inner;
                for (j, slot) in line.iter_mut().enumerate() {
                    *slot = buf[base + j * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (j, slot) in line.iter().enumerate() {
                    buf[base + j * stride] = *slot;
                }
            }
        }
    }
}

/// Discrete Fourier coefficients of `f`, truncated to the grid cutoff.
///
/// The result is exactly Hermitian: each conjugate pair is averaged after the FFT.
pub fn forward_transform<T: Real>(f: &GridField<T>) -> Result<SpectralField<T>> {
    if !f.is_finite() {
        return Err(Error::NonFinite("forward_transform input"));
    }
    let grid = f.grid();
    let mut buf: Vec<Complex<T>> = f.values.iter().map(|&v| Complex::new(v, T::zero())).collect();
    fft_nd(&mut buf, grid.dim(), grid.points(), FftDirection::Forward);
    let norm = T::one() / T::lit(grid.num_points() as f64);
    let coeffs = (0..grid.num_modes())
        .map(|i| {
            let k = grid.mode(i);
            buf[grid.fft_slot(&k)].scale(norm * parity_sign::<T>(&k))
        })
        .collect();
    let mut out = SpectralField { grid: grid.clone(), coeffs };
    out.symmetrize();
    Ok(out)
}

/// Grid samples of `sum_k coeff(k) e^{i k.x}` on the field's physical grid.
pub fn inverse_transform<T: Real>(s: &SpectralField<T>) -> Result<GridField<T>> {
    if !s.is_finite() {
        return Err(Error::NonFinite("inverse_transform input"));
    }
    s.check_hermitian()?;
    let grid = s.grid();
    let mut buf = vec![Complex::new(T::zero(), T::zero()); grid.num_points()];
    for (i, c) in s.coeffs.iter().enumerate() {
        let k = grid.mode(i);
        buf[grid.fft_slot(&k)] = c.scale(parity_sign::<T>(&k));
    }
    fft_nd(&mut buf, grid.dim(), grid.points(), FftDirection::Inverse);
    let (max_re, max_im) = buf
        .iter()
        .fold((T::zero(), T::zero()), |(r, m), c| (r.max(c.re.abs()), m.max(c.im.abs())));
    let tol = hermitian_tolerance::<T>() * T::one().max(max_re);
    if max_im > tol {
        return Err(Error::HermitianViolation { defect: max_im.as_f64(), tolerance: tol.as_f64() });
    }
    Ok(GridField { grid: grid.clone(), values: buf.into_iter().map(|c| c.re).collect() })
}

/// Square partial sum: keeps exactly the modes with `|k_i| <= j`.
pub fn project<T: Real>(s: &SpectralField<T>, j: usize) -> Result<SpectralField<T>> {
    if j > s.grid().cutoff() {
        return Err(Error::InvalidCutoff { requested: j, available: s.grid().cutoff() });
    }
    s.transfer(&s.grid().with_cutoff(j)?)
}

/// `int |f|^s dx` by uniform-grid quadrature.
pub fn lp_power<T: Real>(f: &GridField<T>, s: T) -> Result<T> {
    if !(s >= T::one()) {
        return Err(Error::InvalidExponent(format!("L^s norm needs s >= 1, got {s}")));
    }
    if !f.is_finite() {
        return Err(Error::NonFinite("lp_norm input"));
    }
    Ok(f.integrate(|v| pow_abs(v, s)))
}

/// `||f||_{L^s(T^d)}` by uniform-grid quadrature.
pub fn lp_norm<T: Real>(f: &GridField<T>, s: T) -> Result<T> {
    Ok(lp_power(f, s)?.powf(T::one() / s))
}

/// `||f||_2^2 = (2 pi)^d sum |coeff|^2` (Plancherel).
pub fn l2_norm_sq_spectral<T: Real>(s: &SpectralField<T>) -> T {
    let sum: T = s.coeffs().iter().map(|c| c.norm_sqr()).sum();
    sum * T::lit(s.grid().volume())
}

pub fn l2_norm_spectral<T: Real>(s: &SpectralField<T>) -> T {
    l2_norm_sq_spectral(s).sqrt()
}

/// `||grad f||_2^2 = (2 pi)^d sum |k|^2 |coeff|^2`.
pub fn h1_seminorm_sq<T: Real>(s: &SpectralField<T>) -> T {
    let grid = s.grid();
    let sum: T = s
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| T::lit(wavenumber_sq(&grid.mode(i)) as f64) * c.norm_sqr())
        .sum();
    sum * T::lit(grid.volume())
}

pub fn h1_seminorm<T: Real>(s: &SpectralField<T>) -> T {
    h1_seminorm_sq(s).sqrt()
}

pub fn h1_norm<T: Real>(s: &SpectralField<T>) -> T {
    (h1_seminorm_sq(s) + l2_norm_sq_spectral(s)).sqrt()
}

/// Errors `||P_n f - f||_s` for a list of cutoffs, with the largest observed
/// `||P_n f||_s / ||f||_s` as an empirical witness of the uniform bound.
#[derive(Clone, Debug)]
pub struct ProjectionProbe<T> {
    pub errors: Vec<(usize, T)>,
    pub norm_ratio: T,
}

pub fn projection_convergence_probe<T: Real>(
    f: &GridField<T>,
    s: T,
    cutoffs: &[usize],
) -> Result<ProjectionProbe<T>> {
    if !(s > T::one()) {
        return Err(Error::InvalidExponent(format!("probe needs s in (1, inf), got {s}")));
    }
    if cutoffs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("cutoffs must be strictly increasing".into()));
    }
    let Some(&top) = cutoffs.last() else {
        return Ok(ProjectionProbe { errors: Vec::new(), norm_ratio: T::zero() });
    };
    let reference = f.with_cutoff(top).map_err(|_| Error::InvalidCutoff {
        requested: top,
        available: (f.grid().points() - 1) / 2,
    })?;
    let full = forward_transform(&reference)?;
    let f_norm = lp_norm(f, s)?;
    let mut errors = Vec::with_capacity(cutoffs.len());
    let mut norm_ratio = T::zero();
    for &n in cutoffs {
        let partial = inverse_transform(&project(&full, n)?)?;
        let err = lp_norm(&partial.with_cutoff(top)?.sub(&reference)?, s)?;
        if f_norm > T::zero() {
            norm_ratio = norm_ratio.max(lp_norm(&partial, s)? / f_norm);
        }
        errors.push((n, err));
    }
    Ok(ProjectionProbe { errors, norm_ratio })
}
