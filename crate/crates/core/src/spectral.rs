//! Periodic grid, normalized discrete Fourier transforms and diagonal
//! Fourier multipliers.
//!
//! Spectral coefficients are Fourier-series coefficients: the forward
//! transform divides by `N`, so `u(x_m) = sum_j c_j exp(i k_j x_m)`.
//! Coefficients are stored in FFT order; index `j <= N/2` carries wavenumber
//! `2 pi j / L`, index `j > N/2` carries `2 pi (j - N) / L`. The Nyquist
//! index `N/2` carries the positive wavenumber.
//!
//! Odd functions of the wavenumber (odd derivatives, the Airy phase, the
//! Hilbert sign) are evaluated with the Nyquist wavenumber replaced by zero,
//! which keeps every multiplier real-valued on real fields.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub const MIN_POINTS: usize = 16;

struct GridInner {
    n: usize,
    length: f64,
    dx: f64,
    k: Vec<f64>,
    k_odd: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Uniform periodic grid on `[0, length)`.
///
/// Cheap to clone; the FFT plans and wavenumber tables are shared.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n_points", &self.inner.n)
            .field("length", &self.inner.length)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.n == other.inner.n && self.inner.length == other.inner.length)
    }
}

impl Grid {
    pub fn new(n_points: usize, length: f64) -> Result<Self> {
        if n_points < MIN_POINTS || !n_points.is_power_of_two() {
            return Err(Error::Usage(format!(
                "grid size must be a power of two >= {MIN_POINTS}, got {n_points}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::Usage(format!(
                "domain length must be positive and finite, got {length}"
            )));
        }
        let half = n_points / 2;
        let dk = 2.0 * PI / length;
        let k: Vec<f64> = (0..n_points)
            .map(|j| {
                let m = if j <= half { j as i64 } else { j as i64 - n_points as i64 };
                m as f64 * dk
            })
            .collect();
        let mut k_odd = k.clone();
        k_odd[half] = 0.0;
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n_points);
        let inverse = planner.plan_fft_inverse(n_points);
        Ok(Self {
            inner: Arc::new(GridInner {
                n: n_points,
                length,
                dx: length / n_points as f64,
                k,
                k_odd,
                forward,
                inverse,
            }),
        })
    }

    pub fn n_points(&self) -> usize {
        self.inner.n
    }

    pub fn length(&self) -> f64 {
        self.inner.length
    }

    pub fn dx(&self) -> f64 {
        self.inner.dx
    }

    /// Wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.inner.k
    }

    /// Wavenumbers with the Nyquist entry set to zero, for odd symbols.
    pub fn odd_wavenumbers(&self) -> &[f64] {
        &self.inner.k_odd
    }

    pub fn nyquist_index(&self) -> usize {
        self.inner.n / 2
    }

    /// Largest resolved wavenumber, `pi N / L`.
    pub fn k_max(&self) -> f64 {
        PI * self.inner.n as f64 / self.inner.length
    }

    /// Signed integer mode number of FFT index `j`.
    pub fn mode_number(&self, j: usize) -> i64 {
        let n = self.inner.n;
        if j <= n / 2 {
            j as i64
        } else {
            j as i64 - n as i64
        }
    }

    /// FFT index of signed mode number `m`, if representable.
    pub fn index_of_mode(&self, m: i64) -> Option<usize> {
        let n = self.inner.n as i64;
        if m > n / 2 || m <= -n / 2 {
            return None;
        }
        Some(if m >= 0 { m as usize } else { (m + n) as usize })
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.inner.n).map(|m| m as f64 * self.inner.dx).collect()
    }

    /// Samples `f` at the grid points.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> GridField {
        let values = (0..self.inner.n)
            .map(|m| f(m as f64 * self.inner.dx))
            .collect();
        GridField::physical(self.clone(), values)
    }

    /// Normalized forward transform of real samples, Hermitian-symmetrized.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(values.len(), self.inner.n);
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.inner.forward.process(&mut buf);
        let scale = 1.0 / self.inner.n as f64;
        for c in buf.iter_mut() {
            *c *= scale;
        }
        symmetrize(&mut buf);
        buf
    }

    /// Inverse transform; returns the real part of the synthesized samples.
    pub fn inverse(&self, coeffs: &[Complex64]) -> Vec<f64> {
        debug_assert_eq!(coeffs.len(), self.inner.n);
        let mut buf = coeffs.to_vec();
        self.inner.inverse.process(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }

    /// Index-space dealiasing mask: true where `|j| <= N/3`.
    pub fn dealias_keep(&self, j: usize) -> bool {
        3 * self.mode_number(j).unsigned_abs() as usize <= self.inner.n
    }

    /// `dx * sum(values)`, the periodic rectangle rule.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.inner.dx * values.iter().sum::<f64>()
    }

    /// Discrete `L^2` norm `(dx * sum |u|^2)^(1/2)`.
    pub fn l2_norm(&self, values: &[f64]) -> f64 {
        (self.inner.dx * values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }
}

/// Enforces `c_{-j} = conj(c_j)` and real DC and Nyquist coefficients.
pub fn symmetrize(coeffs: &mut [Complex64]) {
    let n = coeffs.len();
    coeffs[0].im = 0.0;
    coeffs[n / 2].im = 0.0;
    for j in 1..n / 2 {
        let a = coeffs[j];
        let b = coeffs[n - j].conj();
        let avg = (a + b) * 0.5;
        coeffs[j] = avg;
        coeffs[n - j] = avg.conj();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Physical,
    Spectral,
}

#[derive(Debug, Clone, PartialEq)]
enum Data {
    Physical(Vec<f64>),
    Spectral(Vec<Complex64>),
}

/// Real-valued periodic field, held either as samples or as coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    grid: Grid,
    data: Data,
}

impl GridField {
    pub fn physical(grid: Grid, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.n_points(), "sample count must match grid");
        Self { grid, data: Data::Physical(values) }
    }

    /// Wraps spectral coefficients, symmetrizing them so the field is real.
    pub fn spectral(grid: Grid, mut coeffs: Vec<Complex64>) -> Self {
        assert_eq!(coeffs.len(), grid.n_points(), "coefficient count must match grid");
        symmetrize(&mut coeffs);
        Self { grid, data: Data::Spectral(coeffs) }
    }

    pub fn zeros(grid: Grid) -> Self {
        let n = grid.n_points();
        Self::physical(grid, vec![0.0; n])
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        let n = grid.n_points();
        Self::physical(grid, vec![c; n])
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn representation(&self) -> Representation {
        match self.data {
            Data::Physical(_) => Representation::Physical,
            Data::Spectral(_) => Representation::Spectral,
        }
    }

    /// Physical samples; `None` for a spectral field.
    pub fn values(&self) -> Option<&[f64]> {
        match &self.data {
            Data::Physical(v) => Some(v),
            Data::Spectral(_) => None,
        }
    }

    /// Spectral coefficients; `None` for a physical field.
    pub fn coefficients(&self) -> Option<&[Complex64]> {
        match &self.data {
            Data::Spectral(c) => Some(c),
            Data::Physical(_) => None,
        }
    }

    /// Physical samples, transforming if necessary.
    pub fn physical_values(&self) -> Vec<f64> {
        match &self.data {
            Data::Physical(v) => v.clone(),
            Data::Spectral(c) => self.grid.inverse(c),
        }
    }

    /// Spectral coefficients, transforming if necessary.
    pub fn spectral_coefficients(&self) -> Vec<Complex64> {
        match &self.data {
            Data::Spectral(c) => c.clone(),
            Data::Physical(v) => self.grid.forward(v),
        }
    }

    pub fn into_physical(self) -> Self {
        match self.data {
            Data::Physical(_) => self,
            Data::Spectral(ref c) => {
                let v = self.grid.inverse(c);
                Self::physical(self.grid, v)
            }
        }
    }

    pub fn into_spectral(self) -> Self {
        match self.data {
            Data::Spectral(_) => self,
            Data::Physical(ref v) => {
                let c = self.grid.forward(v);
                Self { grid: self.grid, data: Data::Spectral(c) }
            }
        }
    }

    /// Same representation as `self`, built from coefficients.
    fn like(&self, coeffs: Vec<Complex64>) -> Self {
        let out = Self::spectral(self.grid.clone(), coeffs);
        match self.representation() {
            Representation::Spectral => out,
            Representation::Physical => out.into_physical(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let v = self.physical_values().into_iter().map(f).collect();
        Self::physical(self.grid.clone(), v)
    }

    /// Pointwise linear combination `a * self + b * other`, physical.
    pub fn axpby(&self, a: f64, other: &GridField, b: f64) -> Self {
        let x = self.physical_values();
        let y = other.physical_values();
        let v = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        Self::physical(self.grid.clone(), v)
    }

    pub fn scaled(&self, a: f64) -> Self {
        self.map(|v| a * v)
    }

    pub fn sub(&self, other: &GridField) -> Self {
        self.axpby(1.0, other, -1.0)
    }

    pub fn add(&self, other: &GridField) -> Self {
        self.axpby(1.0, other, 1.0)
    }

    pub fn sup_norm(&self) -> f64 {
        self.physical_values().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn l2_norm(&self) -> f64 {
        self.grid.l2_norm(&self.physical_values())
    }

    /// `L^2` norm computed from coefficients: `(L * sum |c_j|^2)^(1/2)`.
    pub fn spectral_l2_norm(&self) -> f64 {
        let c = self.spectral_coefficients();
        (self.grid.length() * c.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn integral(&self) -> f64 {
        self.grid.integrate(&self.physical_values())
    }

    pub fn is_finite(&self) -> bool {
        match &self.data {
            Data::Physical(v) => v.iter().all(|x| x.is_finite()),
            Data::Spectral(c) => c.iter().all(|z| z.re.is_finite() && z.im.is_finite()),
        }
    }
}

/// Forward transform; the input must be physical.
pub fn to_spectral(f: &GridField) -> Result<GridField> {
    match f.representation() {
        Representation::Physical => Ok(f.clone().into_spectral()),
        Representation::Spectral => {
            Err(Error::Usage("to_spectral called on a spectral field".into()))
        }
    }
}

/// Inverse transform; the input must be spectral.
pub fn to_physical(f: &GridField) -> Result<GridField> {
    match f.representation() {
        Representation::Spectral => Ok(f.clone().into_physical()),
        Representation::Physical => {
            Err(Error::Usage("to_physical called on a physical field".into()))
        }
    }
}

/// Diagonal Fourier-space operator, one complex symbol value per FFT index.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMultiplier {
    symbol: Vec<Complex64>,
}

impl SpectralMultiplier {
    pub fn from_symbol(symbol: Vec<Complex64>) -> Self {
        Self { symbol }
    }

    pub fn identity(grid: &Grid) -> Self {
        Self { symbol: vec![Complex64::new(1.0, 0.0); grid.n_points()] }
    }

    /// `(ik)^order`; odd orders annihilate the Nyquist mode.
    pub fn derivative(grid: &Grid, order: u32) -> Self {
        let k = if order % 2 == 1 { grid.odd_wavenumbers() } else { grid.wavenumbers() };
        let symbol = k.iter().map(|&kj| Complex64::new(0.0, kj).powu(order)).collect();
        Self { symbol }
    }

    /// `|k|^sigma` with the mean mode mapped to zero for every `sigma`.
    pub fn fractional(grid: &Grid, sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0) {
            return Err(Error::Domain(format!("fractional order must be >= 0, got {sigma}")));
        }
        let symbol = grid
            .wavenumbers()
            .iter()
            .map(|&kj| {
                if kj == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(kj.abs().powf(sigma), 0.0)
                }
            })
            .collect();
        Ok(Self { symbol })
    }

    /// Airy group `V(t)`, symbol `exp(i k^3 t)`.
    pub fn airy(grid: &Grid, t: f64) -> Self {
        let symbol = grid
            .odd_wavenumbers()
            .iter()
            .map(|&kj| Complex64::from_polar(1.0, kj * kj * kj * t))
            .collect();
        Self { symbol }
    }

    /// Hilbert transform, symbol `-i sgn(k)`.
    pub fn hilbert(grid: &Grid) -> Self {
        let symbol = grid
            .odd_wavenumbers()
            .iter()
            .map(|&kj| {
                if kj == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, -kj.signum())
                }
            })
            .collect();
        Self { symbol }
    }

    /// Two-thirds rule: keeps `|k| <= (2/3) k_max`.
    pub fn dealias(grid: &Grid) -> Self {
        let symbol = (0..grid.n_points())
            .map(|j| {
                if grid.dealias_keep(j) {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        Self { symbol }
    }

    /// `exp(t * lambda(k))` for a per-mode generator `lambda`.
    pub fn exponential(generator: &[Complex64], t: f64) -> Self {
        Self { symbol: generator.iter().map(|l| (l * t).exp()).collect() }
    }

    pub fn symbol(&self) -> &[Complex64] {
        &self.symbol
    }

    pub fn compose(&self, other: &SpectralMultiplier) -> Self {
        let symbol = self.symbol.iter().zip(&other.symbol).map(|(a, b)| a * b).collect();
        Self { symbol }
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.symbol.iter().all(|s| (s.norm() - 1.0).abs() <= tol)
    }

    pub fn apply_in_place(&self, coeffs: &mut [Complex64]) {
        for (c, s) in coeffs.iter_mut().zip(&self.symbol) {
            *c *= s;
        }
    }

    pub fn apply_coeffs(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        coeffs.iter().zip(&self.symbol).map(|(c, s)| c * s).collect()
    }

    /// Applies the operator, returning a field in the input's representation.
    pub fn apply(&self, f: &GridField) -> GridField {
        assert_eq!(self.symbol.len(), f.grid().n_points());
        let c = self.apply_coeffs(&f.spectral_coefficients());
        f.like(c)
    }
}

pub fn derivative(f: &GridField, order: u32) -> Result<GridField> {
    if order == 0 {
        return Err(Error::Usage("derivative order must be positive".into()));
    }
    Ok(SpectralMultiplier::derivative(f.grid(), order).apply(f))
}

pub fn fractional_derivative(f: &GridField, sigma: f64) -> Result<GridField> {
    Ok(SpectralMultiplier::fractional(f.grid(), sigma)?.apply(f))
}

pub fn airy_group(f: &GridField, t: f64) -> GridField {
    SpectralMultiplier::airy(f.grid(), t).apply(f)
}

pub fn hilbert_transform(f: &GridField) -> GridField {
    SpectralMultiplier::hilbert(f.grid()).apply(f)
}

/// Two-thirds-rule truncation. The input must be spectral.
pub fn dealias(f: &GridField) -> Result<GridField> {
    if f.representation() != Representation::Spectral {
        return Err(Error::Usage("dealias expects a spectral field".into()));
    }
    Ok(SpectralMultiplier::dealias(f.grid()).apply(f))
}

/// Physical-space product of two fields followed by two-thirds truncation.
///
/// Returns coefficients.
pub fn dealiased_product_coeffs(grid: &Grid, a: &[f64], b: &[f64]) -> Vec<Complex64> {
    let prod: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    let mut c = grid.forward(&prod);
    zero_aliased(grid, &mut c);
    c
}

pub fn zero_aliased(grid: &Grid, coeffs: &mut [Complex64]) {
    for (j, c) in coeffs.iter_mut().enumerate() {
        if !grid.dealias_keep(j) {
            *c = Complex64::new(0.0, 0.0);
        }
    }
}

/// Dealiased product of two fields, returned in physical representation.
pub fn dealiased_product(a: &GridField, b: &GridField) -> GridField {
    let grid = a.grid().clone();
    let c = dealiased_product_coeffs(&grid, &a.physical_values(), &b.physical_values());
    GridField::spectral(grid, c).into_physical()
}
