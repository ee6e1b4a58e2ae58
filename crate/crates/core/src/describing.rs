//! Closed-form first-harmonic describing functions of the classic and the
//! fractional-order HIGS, plus quadrature of the higher harmonics.
//!
//! For `e = e_hat sin(wt)` the steady-state output over one period is
//!
//! ```text
//! u = B e_hat (sin(wt - p) + sin p)   0       <= wt < g
//! u = C e_hat sin(wt)                 g       <= wt < pi
//! u = B e_hat (sin(wt - p) - sin p)   pi      <= wt < pi + g
//! u = C e_hat sin(wt)                 pi + g  <= wt < 2 pi
//! ```
//!
//! with `p = pi alpha / 2`, `B = omega_h w^-alpha`, `C = k_h` and switching
//! angle `g`. Fourier coefficients use the `2/T` normalization, so a filter
//! stuck in gain mode has describing function exactly `k_h`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{HigsError, Result};
use crate::hybrid::HigsParams;
use crate::scalar::Real;

/// Sinusoidal operating point `e = e_hat sin(omega t)` for a filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DfQuery<T> {
    pub omega: T,
    pub e_hat: T,
    pub params: HigsParams<T>,
}

impl<T: Real> DfQuery<T> {
    pub fn new(omega: T, e_hat: T, params: HigsParams<T>) -> Result<Self> {
        if !(omega > T::zero() && omega.is_finite()) {
            return Err(HigsError::invalid("omega", format!("must be positive, got {omega}")));
        }
        if !(e_hat > T::zero() && e_hat.is_finite()) {
            return Err(HigsError::invalid("e_hat", format!("must be positive, got {e_hat}")));
        }
        Ok(Self { omega, e_hat, params })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DfSource {
    ClosedForm,
    Empirical,
}

impl DfSource {
    pub fn as_str(self) -> &'static str {
        match self {
            DfSource::ClosedForm => "closed_form",
            DfSource::Empirical => "empirical",
        }
    }
}

/// Complex gain of a filter at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyResponsePoint<T> {
    pub omega: T,
    pub value: Complex<T>,
    /// Switching angle, when known.
    pub gamma: Option<T>,
    pub source: DfSource,
}

impl<T: Real> FrequencyResponsePoint<T> {
    pub fn magnitude(&self) -> T {
        self.value.norm()
    }

    pub fn magnitude_db(&self) -> T {
        T::lit(20.0) * self.value.norm().log10()
    }

    pub fn phase_deg(&self) -> T {
        self.value.arg().to_degrees()
    }
}

/// Terms of the closed-form switching-angle solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaIntermediates<T> {
    /// `sin(pi alpha / 2)`
    pub a_sin: T,
    /// `omega_h omega^-alpha`
    pub b_gain: T,
    /// `k_h`
    pub c_gain: T,
    /// `(B sqrt(1 - A^2) - C)^2`
    pub a: T,
    /// `B^2 A^2`
    pub b: T,
    /// `(b - a) / (b + a)`, NaN when both vanish.
    pub x: T,
}

impl<T: Real> GammaIntermediates<T> {
    pub fn new(query: &DfQuery<T>) -> Self {
        let alpha = query.params.alpha.value();
        let a_sin = (T::FRAC_PI_2() * alpha).sin();
        let b_gain = query.params.omega_h * query.omega.powf(-alpha);
        let c_gain = query.params.k_h;
        let a = (b_gain * (T::one() - a_sin * a_sin).max(T::zero()).sqrt() - c_gain).powi(2);
        let b = (b_gain * a_sin).powi(2);
        Self {
            a_sin,
            b_gain,
            c_gain,
            a,
            b,
            x: (b - a) / (b + a),
        }
    }

    /// `B cos(p) - C`: integrator slope minus gain slope at the zero
    /// crossing, in units of `omega e_hat`.
    fn slope_margin(&self, half_angle: T) -> T {
        self.b_gain * half_angle.cos() - self.c_gain
    }
}

/// Switching angle of the classic HIGS, `2 atan(k_h omega / omega_h)`.
/// `omega_h = 0` gives `pi`.
pub fn gamma_classic<T: Real>(omega: T, omega_h: T, k_h: T) -> Result<T> {
    if omega.is_nan() || omega <= T::zero() {
        return Err(HigsError::invalid("omega", "must be positive"));
    }
    if omega_h == T::zero() {
        return Ok(T::PI());
    }
    Ok(T::lit(2.0) * (k_h * omega / omega_h).atan())
}

/// Residual of the continuity condition at the switching angle,
/// `B (sin(g - p) + sin p) - C sin g`, with the scale `B + C` of its terms.
fn continuity_residual<T: Real>(gi: &GammaIntermediates<T>, half_angle: T, gamma: T) -> (T, T) {
    let lhs = gi.b_gain * ((gamma - half_angle).sin() + gi.a_sin);
    let rhs = gi.c_gain * gamma.sin();
    (lhs - rhs, gi.b_gain + gi.c_gain)
}

/// Switching angle of the fractional-order HIGS.
///
/// The closed form `arccos(X)` is accepted when it satisfies the continuity
/// condition to 1e-6 relative; otherwise the root is bracketed and bisected.
/// When the integrator would leave the sector immediately at the zero
/// crossing (`B cos p >= C`) there is no root in `(0, pi)` and the filter
/// stays in gain mode: the angle is 0.
pub fn gamma_fractional<T: Real>(query: &DfQuery<T>) -> Result<T> {
    let gi = GammaIntermediates::new(query);
    let half_angle = T::FRAC_PI_2() * query.params.alpha.value();
    let margin = gi.slope_margin(half_angle);
    if margin.is_nan() || margin >= T::zero() {
        if margin.is_nan() {
            return Err(HigsError::NoRoot { residual: f64::NAN });
        }
        return Ok(T::zero());
    }
    let tol = T::lit(1e-6);
    if gi.x.is_finite() {
        let candidate = gi.x.max(-T::one()).min(T::one()).acos();
        let (res, scale) = continuity_residual(&gi, half_angle, candidate);
        if candidate > T::zero() && res.abs() <= tol * scale {
            return Ok(candidate);
        }
    }
    // Dividing the residual by 2 sin(g/2) > 0 leaves
    // margin * cos(g/2) + B A sin(g/2), negative at 0 and >= 0 at pi.
    let reduced = |g: T| margin * (g * T::lit(0.5)).cos() + gi.b_gain * gi.a_sin * (g * T::lit(0.5)).sin();
    let (mut lo, mut hi) = (T::zero(), T::PI());
    if reduced(hi) < T::zero() {
        // at alpha = 0 the root sits on pi itself
        let (res, scale) = continuity_residual(&gi, half_angle, hi);
        if res.abs() <= tol * scale {
            return Ok(hi);
        }
        return Err(HigsError::NoRoot {
            residual: res.to_f64_lossy(),
        });
    }
    for _ in 0..200 {
        let mid = (lo + hi) * T::lit(0.5);
        if reduced(mid) < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= T::epsilon() * T::PI() {
            break;
        }
    }
    let gamma = (lo + hi) * T::lit(0.5);
    let (res, scale) = continuity_residual(&gi, half_angle, gamma);
    if res.abs() <= tol * scale {
        Ok(gamma)
    } else {
        Err(HigsError::NoRoot {
            residual: res.to_f64_lossy(),
        })
    }
}

/// Describing function of the classic HIGS (amplitude independent):
///
/// ```text
/// D = omega_h/(j omega) (g/pi + j(e^{-2jg} - 1)/(2 pi) - 4j(e^{-jg} - 1)/(2 pi))
///   + k_h ((pi - g)/pi + j(e^{-2jg} - 1)/(2 pi))
/// ```
pub fn df_classic<T: Real>(omega: T, omega_h: T, k_h: T) -> Result<Complex<T>> {
    let gamma = gamma_classic(omega, omega_h, k_h)?;
    let pi = T::PI();
    let two_pi = T::TAU();
    let j = Complex::new(T::zero(), T::one());
    let e1 = Complex::from_polar(T::one(), -gamma) - T::one();
    let e2 = Complex::from_polar(T::one(), -T::lit(2.0) * gamma) - T::one();
    let integral = (Complex::from(gamma / pi) + j * e2 / two_pi - j * e1 * T::lit(4.0) / two_pi)
        * (Complex::from(omega_h) / Complex::new(T::zero(), omega));
    let gain = (Complex::from((pi - gamma) / pi) + j * e2 / two_pi) * k_h;
    Ok(integral + gain)
}

/// First-harmonic Fourier coefficients `(a_1, b_1)` of the steady-state
/// output for the switching angle `gamma`.
pub fn first_harmonic_coefficients<T: Real>(query: &DfQuery<T>, gamma: T) -> (T, T) {
    let gi = GammaIntermediates::new(query);
    let p = T::FRAC_PI_2() * query.params.alpha.value();
    let two = T::lit(2.0);
    let int_scale = gi.b_gain * query.e_hat / T::TAU();
    let gain_scale = gi.c_gain * query.e_hat / T::TAU();
    let a1 = int_scale
        * (-(two * gamma - p).cos() + p.cos() - two * gamma * p.sin() + two * (gamma - p).cos()
            - two * (gamma + p).cos())
        + gain_scale * ((two * gamma).cos() - T::one());
    let b1 = int_scale
        * (two * gamma * p.cos() - (two * gamma - p).sin() + T::lit(3.0) * p.sin() - two * (gamma + p).sin()
            + two * (gamma - p).sin())
        + gain_scale * (T::TAU() - two * gamma + (two * gamma).sin());
    (a1, b1)
}

/// Closed-form describing function `(b_1 + j a_1) / e_hat` of the
/// fractional-order HIGS.
pub fn df_fractional<T: Real>(query: &DfQuery<T>) -> Result<FrequencyResponsePoint<T>> {
    let gamma = gamma_fractional(query)?;
    let (a1, b1) = first_harmonic_coefficients(query, gamma);
    Ok(FrequencyResponsePoint {
        omega: query.omega,
        value: Complex::new(b1, a1) / query.e_hat,
        gamma: Some(gamma),
        source: DfSource::ClosedForm,
    })
}

/// Steady-state output at phase `theta = omega t` (any real value).
pub fn steady_state_output<T: Real>(query: &DfQuery<T>, gamma: T, theta: T) -> T {
    let gi = GammaIntermediates::new(query);
    let p = T::FRAC_PI_2() * query.params.alpha.value();
    let th = theta - T::TAU() * (theta / T::TAU()).floor();
    let pi = T::PI();
    let e = query.e_hat;
    if th < gamma {
        gi.b_gain * e * ((th - p).sin() + gi.a_sin)
    } else if th < pi {
        gi.c_gain * e * th.sin()
    } else if th < pi + gamma {
        gi.b_gain * e * ((th - p).sin() - gi.a_sin)
    } else {
        gi.c_gain * e * th.sin()
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre<T: Real>(n: usize) -> Vec<(T, T)> {
    let mut rule = Vec::with_capacity(n);
    let nf = T::from_count(n);
    for i in 0..n {
        let mut x = (T::PI() * (T::from_count(i) + T::lit(0.75)) / (nf + T::lit(0.5))).cos();
        let mut dp = T::one();
        for _ in 0..100 {
            let (mut p0, mut p1) = (T::one(), x);
            for k in 2..=n {
                let kf = T::from_count(k);
                let p2 = ((T::lit(2.0) * kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (x * p1 - p0) / (x * x - T::one());
            let dx = p1 / dp;
            x = x - dx;
            if dx.abs() <= T::epsilon() {
                break;
            }
        }
        rule.push((x, T::lit(2.0) / ((T::one() - x * x) * dp * dp)));
    }
    rule
}

fn composite_gl<T: Real>(
    rule: &[(T, T)],
    edges: &[T],
    panels: usize,
    f: &impl Fn(T) -> Complex<T>,
) -> Complex<T> {
    let mut total = Complex::new(T::zero(), T::zero());
    let half = T::lit(0.5);
    for seg in edges.windows(2) {
        let width = (seg[1] - seg[0]) / T::from_count(panels);
        for k in 0..panels {
            let lo = seg[0] + width * T::from_count(k);
            let mid = lo + width * half;
            for &(x, w) in rule {
                total = total + f(mid + x * width * half) * (w * width * half);
            }
        }
    }
    total
}

/// `n`-th harmonic coefficient `(b_n + j a_n) / e_hat` of the steady-state
/// output, by composite Gauss-Legendre quadrature over each smooth segment.
pub fn df_harmonic_n<T: Real>(query: &DfQuery<T>, n: usize) -> Result<Complex<T>> {
    if n == 0 {
        return Err(HigsError::invalid("n", "harmonic index must be at least 1"));
    }
    let gamma = gamma_fractional(query)?;
    let pi = T::PI();
    let nf = T::from_count(n);
    let mut edges = vec![T::zero(), gamma, pi, pi + gamma, T::TAU()];
    edges.dedup_by(|a, b| (*a - *b).abs() <= T::epsilon());
    let integrand = |th: T| {
        let u = steady_state_output(query, gamma, th);
        Complex::new(u * (nf * th).sin(), u * (nf * th).cos())
    };
    let rule = gauss_legendre::<T>(16);
    let mut panels = (n / 4).max(1);
    let mut prev = composite_gl(&rule, &edges, panels, &integrand);
    let scale = query.e_hat * (query.params.k_h + GammaIntermediates::new(query).b_gain);
    let tol = T::lit(1e-13) * scale.max(T::min_positive_value());
    let mut change = T::infinity();
    while panels < 4096 {
        panels *= 2;
        let next = composite_gl(&rule, &edges, panels, &integrand);
        change = (next - prev).norm();
        prev = next;
        if change <= tol {
            return Ok(prev / (pi * query.e_hat));
        }
    }
    Err(HigsError::QuadratureNotConverged {
        change: change.to_f64_lossy(),
    })
}
