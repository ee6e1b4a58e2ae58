//! Fractional-order operators.
//!
//! Differentiation and integration of sampled signals use Grünwald-Letnikov
//! weights over a finite memory window; history before the first sample is
//! zero. Linear fractional filters are realized as log-spaced pole/zero
//! ladders (CRONE / Oustaloup placement).

use num_complex::Complex;

use crate::error::{HigsError, Result};
use crate::lti::{ContinuousTf, Section};
use crate::scalar::{dot, Real};

/// Default memory length of a [`HistoryBuffer`], in samples.
pub const DEFAULT_MEMORY: usize = 1 << 16;

/// Operator order in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct FracOrder<T>(T);

impl<T: Real> FracOrder<T> {
    pub fn new(alpha: T) -> Result<Self> {
        if alpha >= T::zero() && alpha <= T::one() {
            Ok(Self(alpha))
        } else {
            Err(HigsError::invalid(
                "alpha",
                format!("order must lie in [0, 1], got {alpha}"),
            ))
        }
    }

    pub fn zero() -> Self {
        Self(T::zero())
    }

    pub fn one() -> Self {
        Self(T::one())
    }

    pub fn value(self) -> T {
        self.0
    }

    /// The complementary order `1 - alpha`.
    pub fn complement(self) -> Self {
        Self(T::one() - self.0)
    }
}

/// Uniformly sampled signal history, newest sample last, bounded by
/// `capacity`. Storage is mirrored so the live window is always one
/// contiguous slice.
#[derive(Debug, Clone)]
pub struct HistoryBuffer<T> {
    data: Vec<T>,
    next: usize,
    len: usize,
    capacity: usize,
    dt: T,
}

impl<T: Real> HistoryBuffer<T> {
    pub fn new(dt: T, capacity: usize) -> Result<Self> {
        if !(dt > T::zero() && dt.is_finite()) {
            return Err(HigsError::InvalidTimeStep(dt.to_f64_lossy()));
        }
        if capacity == 0 {
            return Err(HigsError::invalid("capacity", "must be at least 1"));
        }
        Ok(Self {
            data: vec![T::zero(); 2 * capacity],
            next: 0,
            len: 0,
            capacity,
            dt,
        })
    }

    pub fn from_samples(dt: T, capacity: usize, samples: impl IntoIterator<Item = T>) -> Result<Self> {
        let mut buf = Self::new(dt, capacity)?;
        for v in samples {
            buf.push(v);
        }
        Ok(buf)
    }

    pub fn push(&mut self, value: T) {
        self.data[self.next] = value;
        self.data[self.next + self.capacity] = value;
        self.next = (self.next + 1) % self.capacity;
        self.len = (self.len + 1).min(self.capacity);
    }

    /// Live window, oldest first.
    pub fn as_slice(&self) -> &[T] {
        let end = self.next + self.capacity;
        &self.data[end - self.len..end]
    }

    pub fn newest(&self) -> Option<T> {
        self.as_slice().last().copied()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn clear(&mut self) {
        self.len = 0;
        self.next = 0;
    }
}

/// Grünwald-Letnikov binomial weights `(-1)^k C(order, k)`, `k = 0..n`.
pub fn gl_weights<T: Real>(order: T, n: usize) -> Vec<T> {
    let mut w = Vec::with_capacity(n);
    if n == 0 {
        return w;
    }
    w.push(T::one());
    for k in 1..n {
        let kf = T::from_count(k);
        let prev = w[k - 1];
        w.push(prev * (T::one() - (order + T::one()) / kf));
    }
    w
}

/// Grünwald-Letnikov operator of a fixed signed order (negative orders
/// integrate) with cached weights. Reuse this when the same operator is
/// applied at every sample.
#[derive(Debug, Clone)]
pub struct GrunwaldLetnikov<T> {
    order: T,
    /// Weights stored oldest-first so they line up with the history slice.
    weights_rev: Vec<T>,
    scale: T,
}

impl<T: Real> GrunwaldLetnikov<T> {
    pub fn new(order: T, dt: T, memory: usize) -> Self {
        let mut weights_rev = gl_weights(order, memory);
        weights_rev.reverse();
        Self {
            order,
            weights_rev,
            scale: dt.powf(-order),
        }
    }

    pub fn order(&self) -> T {
        self.order
    }

    pub fn memory(&self) -> usize {
        self.weights_rev.len()
    }

    /// Applies the operator at the newest sample of `history`.
    pub fn apply(&self, history: &HistoryBuffer<T>) -> Result<T> {
        self.apply_recent(history, history.len())
    }

    /// Applies the operator using only the newest `recent` samples, treating
    /// everything older as zero.
    pub fn apply_recent(&self, history: &HistoryBuffer<T>, recent: usize) -> Result<T> {
        if history.is_empty() || recent == 0 {
            return Err(HigsError::InsufficientHistory);
        }
        let window = history.as_slice();
        let n = recent.min(window.len()).min(self.weights_rev.len());
        let samples = &window[window.len() - n..];
        let weights = &self.weights_rev[self.weights_rev.len() - n..];
        Ok(dot(samples, weights) * self.scale)
    }
}

/// Fractional derivative `D^alpha` at the newest sample of `history`.
///
/// `alpha = 0` returns the newest sample; `alpha = 1` is the backward
/// difference.
pub fn frac_diff<T: Real>(history: &HistoryBuffer<T>, order: FracOrder<T>) -> Result<T> {
    if history.is_empty() {
        return Err(HigsError::InsufficientHistory);
    }
    GrunwaldLetnikov::new(order.value(), history.dt(), history.len()).apply(history)
}

/// Fractional integral `D^-alpha` at the newest sample of `history`.
///
/// `alpha = 1` is the rectangular running sum over the window; `alpha = 0`
/// is the identity.
pub fn frac_int<T: Real>(history: &HistoryBuffer<T>, order: FracOrder<T>) -> Result<T> {
    if history.is_empty() {
        return Err(HigsError::InsufficientHistory);
    }
    GrunwaldLetnikov::new(-order.value(), history.dt(), history.len()).apply(history)
}

/// Steady-state action of `D^order` on `amplitude * sin(freq t)`: returns
/// the new amplitude `amplitude * freq^order` and the phase advance
/// `order * pi / 2`. Negative orders integrate.
pub fn sinusoid_frac_rule<T: Real>(amplitude: T, freq: T, order: T) -> Result<(T, T)> {
    if freq.is_nan() || freq <= T::zero() {
        return Err(HigsError::invalid("freq", "must be positive"));
    }
    Ok((amplitude * freq.powf(order), order * T::FRAC_PI_2()))
}

/// Band-limited rational approximation of a fractional integrator.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalFracFilter<T> {
    pub order: FracOrder<T>,
    pub band: (T, T),
    pub n_stages: usize,
    pub tf: ContinuousTf<T>,
    /// Worst phase deviation from `-order * 90°` over the band interior.
    pub phase_error_deg: T,
    /// Worst magnitude deviation from the ideal target over the band interior.
    pub magnitude_error_db: T,
}

impl<T: Real> RationalFracFilter<T> {
    pub fn response(&self, omega: T) -> Complex<T> {
        self.tf.response(omega)
    }
}

fn check_band<T: Real>(low: T, high: T) -> Result<()> {
    if low > T::zero() && high > low && high.is_finite() {
        Ok(())
    } else {
        Err(HigsError::DegenerateBand {
            low: low.to_f64_lossy(),
            high: high.to_f64_lossy(),
        })
    }
}

/// Log-spaced pole/zero pairs whose average slope over `[low, high]` is
/// `-20 * nu` dB/dec; unit DC gain.
fn ladder<T: Real>(nu: T, low: T, high: T, n_stages: usize) -> Vec<Section<T>> {
    let ratio = high / low;
    let n = T::from_count(n_stages);
    let half = T::lit(0.5);
    (0..n_stages)
        .map(|k| {
            let kf = T::from_count(k);
            let pole = low * ratio.powf((kf + half * (T::one() - nu)) / n);
            let zero = low * ratio.powf((kf + half * (T::one() + nu)) / n);
            Section::zero_pole(zero, pole)
        })
        .collect()
}

/// Worst phase and magnitude error of `tf` against `target` over the
/// central half (in log frequency) of `[low, high]`.
fn interior_error<T: Real>(
    tf: &ContinuousTf<T>,
    low: T,
    high: T,
    target: impl Fn(T) -> Complex<T>,
) -> (T, T) {
    let (l0, l1) = (low.ln(), high.ln());
    let span = l1 - l0;
    let points = 64;
    let mut phase_err = T::zero();
    let mut mag_err = T::zero();
    let twenty = T::lit(20.0);
    for i in 0..=points {
        let f = T::lit(0.25) + T::lit(0.5) * T::from_count(i) / T::from_count(points);
        let w = (l0 + span * f).exp();
        let h = tf.response(w);
        let t = target(w);
        let dphase = (h / t).arg().abs().to_degrees();
        let dmag = (twenty * (h.norm() / t.norm()).log10()).abs();
        phase_err = phase_err.max(dphase);
        mag_err = mag_err.max(dmag);
    }
    (phase_err, mag_err)
}

/// Rational approximation of `(j omega)^(-order)` within `band`.
///
/// `order = 0` is a unity pass-through and `order = 1` the exact integrator
/// `1/s`; intermediate orders use `n_stages` pole/zero pairs with the gain
/// matched at the geometric band centre.
pub fn design_rational_frac_filter<T: Real>(
    order: FracOrder<T>,
    band: (T, T),
    n_stages: usize,
) -> Result<RationalFracFilter<T>> {
    let (low, high) = band;
    check_band(low, high)?;
    if n_stages == 0 {
        return Err(HigsError::invalid("n_stages", "must be at least 1"));
    }
    let nu = order.value();
    let tf = if nu == T::zero() {
        ContinuousTf::unity()
    } else if nu == T::one() {
        ContinuousTf::unity().then(Section::integrator())
    } else {
        let raw = ContinuousTf::from_sections(T::one(), ladder(nu, low, high, n_stages));
        let centre = (low * high).sqrt();
        let gain = centre.powf(-nu) / raw.response(centre).norm();
        ContinuousTf::from_sections(gain, raw.sections)
    };
    let ideal = |w: T| Complex::from_polar(w.powf(-nu), -nu * T::FRAC_PI_2());
    let (phase_error_deg, magnitude_error_db) = interior_error(&tf, low, high, ideal);
    Ok(RationalFracFilter {
        order,
        band,
        n_stages,
        tf,
        phase_error_deg,
        magnitude_error_db,
    })
}

/// Fractional low-pass of order `order` with corner `cutoff`: unit gain
/// below the corner, `-20 * order` dB/dec from the corner up to `high`.
///
/// `order = 1` is the exact first-order low-pass `cutoff / (s + cutoff)`.
pub fn design_fractional_low_pass<T: Real>(
    order: FracOrder<T>,
    cutoff: T,
    high: T,
    n_stages: usize,
) -> Result<RationalFracFilter<T>> {
    check_band(cutoff, high)?;
    if n_stages == 0 {
        return Err(HigsError::invalid("n_stages", "must be at least 1"));
    }
    let nu = order.value();
    let tf = if nu == T::zero() {
        ContinuousTf::unity()
    } else if nu == T::one() {
        ContinuousTf::unity().then(Section::low_pass(cutoff))
    } else {
        ContinuousTf::from_sections(T::one(), ladder(nu, cutoff, high, n_stages))
    };
    let ideal = |w: T| Complex::from_polar((cutoff / w).powf(nu), -nu * T::FRAC_PI_2());
    let (phase_error_deg, magnitude_error_db) = interior_error(&tf, cutoff, high, ideal);
    Ok(RationalFracFilter {
        order,
        band: (cutoff, high),
        n_stages,
        tf,
        phase_error_deg,
        magnitude_error_db,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sine_history(dt: f64, n: usize, capacity: usize) -> HistoryBuffer<f64> {
        HistoryBuffer::from_samples(dt, capacity, (0..n).map(|k| (k as f64 * dt).sin())).unwrap()
    }

    #[test]
    fn order_bounds() {
        assert!(FracOrder::new(-0.1).is_err());
        assert!(FracOrder::new(1.1).is_err());
        assert!(FracOrder::new(f64::NAN).is_err());
        assert_eq!(FracOrder::new(0.3).unwrap().complement().value(), 0.7);
    }

    #[test]
    fn buffer_keeps_newest_window() {
        let buf = HistoryBuffer::from_samples(1.0, 3, [1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(buf.as_slice(), &[3.0, 4.0, 5.0]);
        assert_eq!(buf.newest(), Some(5.0));
        assert_eq!(buf.len(), 3);
    }

    #[test]
    fn empty_history_is_an_error() {
        let buf = HistoryBuffer::<f64>::new(0.1, 4).unwrap();
        assert_eq!(
            frac_diff(&buf, FracOrder::new(0.5).unwrap()),
            Err(HigsError::InsufficientHistory)
        );
        assert_eq!(
            frac_int(&buf, FracOrder::new(0.5).unwrap()),
            Err(HigsError::InsufficientHistory)
        );
    }

    #[test]
    fn order_zero_is_identity() {
        let buf = HistoryBuffer::from_samples(0.01, 16, [0.5, -2.0, 7.25]).unwrap();
        assert_eq!(frac_diff(&buf, FracOrder::zero()).unwrap(), 7.25);
        assert_eq!(frac_int(&buf, FracOrder::zero()).unwrap(), 7.25);
    }

    #[test]
    fn order_one_derivative_of_sine_at_pi() {
        let dt = 1e-4;
        let n = (PI / dt).round() as usize + 1;
        let buf = sine_history(dt, n, n);
        let d = frac_diff(&buf, FracOrder::one()).unwrap();
        assert!((d + 1.0).abs() < 1e-3, "{d}");
    }

    #[test]
    fn order_one_integral_of_constant() {
        let dt = 1e-3;
        let buf = HistoryBuffer::from_samples(dt, 4096, std::iter::repeat_n(1.0f64, 2000)).unwrap();
        let i = frac_int(&buf, FracOrder::one()).unwrap();
        assert!((i - 2.0).abs() < 1e-9, "{i}");
    }

    #[test]
    fn half_derivative_of_sine_follows_sinusoid_rule() {
        // 1000 samples per period, 20 periods of memory
        let dt = 2.0 * PI / 1000.0;
        let total = 30_000;
        let order = FracOrder::new(0.5).unwrap();
        let gl = GrunwaldLetnikov::new(0.5, dt, 20_000);
        let mut buf = HistoryBuffer::new(dt, 20_000).unwrap();
        let mut worst: f64 = 0.0;
        for k in 0..total {
            let t = k as f64 * dt;
            buf.push(t.sin());
            if k > 25_000 {
                let expect = (t + PI / 4.0).sin();
                worst = worst.max((gl.apply(&buf).unwrap() - expect).abs());
            }
        }
        assert!(worst < 0.01, "{worst}");
        let (amp, phase) = sinusoid_frac_rule(1.0, 1.0, order.value()).unwrap();
        assert_eq!(amp, 1.0);
        assert!((phase - PI / 4.0).abs() < 1e-15);
    }

    #[test]
    fn half_integral_of_sine_lags_by_quarter_pi() {
        let dt = 0.01;
        let n = 1 << 18;
        let buf = sine_history(dt, n, n);
        let t = (n - 1) as f64 * dt;
        let got = frac_int(&buf, FracOrder::new(0.5).unwrap()).unwrap();
        let expect = (t - PI / 4.0).sin();
        assert!((got - expect).abs() < 0.02, "{got} vs {expect}");
    }

    #[test]
    fn sinusoid_rule_examples() {
        assert_eq!(sinusoid_frac_rule(1.0, 4.0, 0.5).unwrap().0, 2.0);
        let (a, p) = sinusoid_frac_rule(3.0, 2.0, 1.0).unwrap();
        assert_eq!(a, 6.0);
        assert!((p - PI / 2.0).abs() < 1e-15);
        assert!(sinusoid_frac_rule(1.0, 0.0, 0.5).is_err());
    }

    #[test]
    fn weights_for_integer_orders() {
        assert_eq!(gl_weights(1.0, 4), vec![1.0, -1.0, 0.0, 0.0]);
        assert_eq!(gl_weights(-1.0, 3), vec![1.0, 1.0, 1.0]);
        assert_eq!(gl_weights(0.0, 3), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn rational_filter_edge_orders() {
        let unity = design_rational_frac_filter(FracOrder::zero(), (0.01, 100.0), 8).unwrap();
        assert_eq!(unity.response(3.0), Complex::new(1.0, 0.0));
        let int = design_rational_frac_filter(FracOrder::one(), (0.01, 100.0), 8).unwrap();
        let h = int.response(2.0);
        assert!((h - Complex::new(0.0, -0.5)).norm() < 1e-15);
    }

    #[test]
    fn rational_filter_half_order_phase_at_band_centre() {
        let f = design_rational_frac_filter(FracOrder::new(0.5).unwrap(), (0.01, 100.0), 8).unwrap();
        let phase = f.response(1.0f64).arg().to_degrees();
        assert!((phase + 45.0).abs() < 3.0, "{phase}");
        assert!(f.phase_error_deg < 3.0);
    }

    #[test]
    fn degenerate_band_rejected() {
        let o = FracOrder::new(0.5).unwrap();
        assert!(matches!(
            design_rational_frac_filter(o, (10.0, 1.0), 4),
            Err(HigsError::DegenerateBand { .. })
        ));
        assert!(design_rational_frac_filter(o, (0.0, 1.0), 4).is_err());
        assert!(design_rational_frac_filter(o, (0.1, 1.0), 0).is_err());
    }

    #[test]
    fn low_pass_edge_orders() {
        let lp = design_fractional_low_pass(FracOrder::one(), 2.0, 2000.0, 9).unwrap();
        assert!((lp.response(2.0f64).arg().to_degrees() + 45.0).abs() < 1e-9);
        let lp0 = design_fractional_low_pass(FracOrder::<f64>::zero(), 2.0, 2000.0, 9).unwrap();
        assert_eq!(lp0.response(50.0), Complex::new(1.0, 0.0));
    }

    #[test]
    fn low_pass_unit_dc_gain_and_in_band_slope() {
        let lp = design_fractional_low_pass(FracOrder::new(0.32).unwrap(), 1.0, 1e4, 12).unwrap();
        assert!((lp.response(1e-6f64).norm() - 1.0).abs() < 1e-6);
        let phase = lp.response(100.0f64).arg().to_degrees();
        assert!((phase + 0.32 * 90.0).abs() < 1.5, "{phase}");
    }
}
