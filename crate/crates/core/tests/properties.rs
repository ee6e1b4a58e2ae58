use std::f64::consts::TAU;

use higs::*;
use proptest::prelude::*;

fn sine_run(omega_h: f64, k_h: f64, alpha: f64, omega: f64, e_hat: f64) -> (TimeSeries<f64>, Vec<f64>) {
    let spp = 100;
    let dt = TAU / omega / spp as f64;
    let input = TimeSeries::sine(e_hat, omega, dt, 3 * spp).unwrap();
    let params = HigsParams::new(omega_h, k_h, alpha).unwrap();
    let filter = HigsFilter::with_memory(params, dt, 512, FracMemory::Full).unwrap();
    let u = higs_response_with(filter, &input).unwrap().output.values;
    (input, u)
}

fn log_range(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo.log10()..hi.log10()).prop_map(|x| 10f64.powf(x))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn output_scales_with_input(
        omega_h in log_range(0.1, 10.0),
        k_h in log_range(0.1, 10.0),
        alpha in 0.0..=1.0f64,
        omega in log_range(0.1, 10.0),
        c in prop::sample::select(vec![0.5, 1.0, 2.0]),
    ) {
        let (_, base) = sine_run(omega_h, k_h, alpha, omega, 1.0);
        let (_, scaled) = sine_run(omega_h, k_h, alpha, omega, c);
        let peak = base.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in base.iter().zip(&scaled) {
            prop_assert!((c * a - b).abs() <= 1e-9 * c * peak);
        }
    }

    #[test]
    fn output_stays_in_sector(
        omega_h in log_range(0.1, 10.0),
        k_h in log_range(0.1, 10.0),
        alpha in 0.0..=1.0f64,
        omega in log_range(0.01, 100.0),
        e_hat in log_range(0.1, 10.0),
    ) {
        let (input, u) = sine_run(omega_h, k_h, alpha, omega, e_hat);
        let tol = 10.0 * input.dt * omega_h * input.max_abs();
        for (&e, &u) in input.values.iter().zip(&u) {
            prop_assert!(u * e >= -tol);
            prop_assert!(u.abs() <= k_h * e.abs() + tol);
        }
    }

    #[test]
    fn runs_are_deterministic(
        alpha in 0.0..=1.0f64,
        omega in log_range(0.1, 10.0),
    ) {
        let (_, a) = sine_run(1.0, 1.0, alpha, omega, 1.0);
        let (_, b) = sine_run(1.0, 1.0, alpha, omega, 1.0);
        prop_assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn frac_diff_is_linear(
        alpha in 0.0..=1.0f64,
        a in -3.0..3.0f64,
        xs in prop::collection::vec(-1.0..1.0f64, 1..64),
        ys in prop::collection::vec(-1.0..1.0f64, 64),
    ) {
        let order = FracOrder::new(alpha).unwrap();
        let n = xs.len();
        let hx = HistoryBuffer::from_samples(0.01, 64, xs.iter().copied()).unwrap();
        let hy = HistoryBuffer::from_samples(0.01, 64, ys[..n].iter().copied()).unwrap();
        let hz = HistoryBuffer::from_samples(0.01, 64, xs.iter().zip(&ys).map(|(x, y)| a * x + y)).unwrap();
        let lhs = frac_diff(&hz, order).unwrap();
        let rhs = a * frac_diff(&hx, order).unwrap() + frac_diff(&hy, order).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
    }
}
