use crate::error::{invalid_arg, QPolicyError, Result};
use crate::mdp::QTable;

/// The control-variate baseline `f(s, a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineTable {
    pub f: QTable,
}

impl BaselineTable {
    pub fn zeros(num_states: usize, num_actions: usize) -> Self {
        Self {
            f: QTable::zeros(num_states, num_actions),
        }
    }

    pub fn mean(&self) -> f64 {
        let values = self.f.as_slice();
        values.iter().sum::<f64>() / values.len() as f64
    }

    /// `f(s, a) - mean(f)`.
    pub fn centered(&self) -> QTable {
        let mean = self.mean();
        let mut out = self.f.clone();
        for v in out.as_mut_slice() {
            *v -= mean;
        }
        out
    }
}

/// `q_hat = q_tilde + beta * (f - mean(f))`.
pub fn variance_reduce(q_tilde: &QTable, baseline: &BaselineTable, beta: f64) -> Result<QTable> {
    q_tilde.same_shape(&baseline.f)?;
    if beta == 0.0 {
        return Ok(q_tilde.clone());
    }
    let delta = baseline.centered();
    let mut out = q_tilde.clone();
    for (v, d) in out.as_mut_slice().iter_mut().zip(delta.as_slice()) {
        *v += beta * d;
    }
    Ok(out)
}

/// `-Cov(ae, cv) / Var(cv)`, the coefficient minimising the variance of
/// `ae + lambda * (cv - mean(cv))`.
pub fn estimate_lambda(ae_samples: &[f64], cv_samples: &[f64]) -> Result<f64> {
    if ae_samples.len() != cv_samples.len() {
        return Err(invalid_arg(format!(
            "sample lengths differ: {} vs {}",
            ae_samples.len(),
            cv_samples.len()
        )));
    }
    let n = ae_samples.len();
    if n < 2 {
        return Err(invalid_arg("at least two paired samples are required"));
    }
    let mean_x = ae_samples.iter().sum::<f64>() / n as f64;
    let mean_c = cv_samples.iter().sum::<f64>() / n as f64;
    let (mut cov, mut var) = (0.0, 0.0);
    for (&x, &c) in ae_samples.iter().zip(cv_samples) {
        cov += (x - mean_x) * (c - mean_c);
        var += (c - mean_c) * (c - mean_c);
    }
    if var <= 0.0 {
        return Err(QPolicyError::DegenerateControlVariate);
    }
    Ok(-cov / var)
}

/// EMA step `f <- (1 - eta) f + eta * q_hat`.
pub fn update_baseline(baseline: &BaselineTable, q_hat: &QTable, eta: f64) -> Result<BaselineTable> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(invalid_arg(format!("eta must lie in [0, 1], got {eta}")));
    }
    baseline.f.same_shape(q_hat)?;
    let mut f = baseline.f.clone();
    for (v, &q) in f.as_mut_slice().iter_mut().zip(q_hat.as_slice()) {
        *v = (1.0 - eta) * *v + eta * q;
    }
    Ok(BaselineTable { f })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Domain};
    use proptest::prelude::*;
    use rand_distr::{Distribution, StandardNormal};

    fn table(values: Vec<f64>) -> QTable {
        QTable::from_vec(values.len(), 1, values).unwrap()
    }

    #[test]
    fn zero_beta_and_constant_baseline_are_identities() {
        let q = table(vec![0.1, -0.3, 0.7]);
        let f = BaselineTable { f: table(vec![1.0, 5.0, -2.0]) };
        assert_eq!(variance_reduce(&q, &f, 0.0).unwrap(), q);
        let flat = BaselineTable { f: QTable::filled(3, 1, 0.25) };
        assert_eq!(variance_reduce(&q, &flat, 0.8).unwrap(), q);
        let wrong = BaselineTable::zeros(2, 1);
        assert!(matches!(
            variance_reduce(&q, &wrong, 0.5),
            Err(QPolicyError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn correlated_baseline_halves_error_variance() {
        // q_tilde = truth + e, f = truth + d with corr(e, d) = 0.8 and unit variances;
        // the optimal beta on the centred baseline is -0.8.
        let mut rng = stream_rng(11, Domain::Synthetic, 0, 0, 0);
        let n = 64;
        let truth: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let (mut raw, mut reduced) = (Vec::new(), Vec::new());
        for _ in 0..1000 {
            let mut q = Vec::with_capacity(n);
            let mut f = Vec::with_capacity(n);
            for &t in &truth {
                let z1: f64 = StandardNormal.sample(&mut rng);
                let z2: f64 = StandardNormal.sample(&mut rng);
                q.push(t + z1);
                f.push(t + 0.8 * z1 + 0.6 * z2);
            }
            // the control is centred on its known mean so only the noise term remains
            let mean_shift: Vec<f64> = f.iter().zip(&truth).map(|(fv, t)| fv - t).collect();
            let qt = table(q);
            let base = BaselineTable { f: table(mean_shift) };
            let qh = variance_reduce(&qt, &base, -0.8).unwrap();
            for i in 0..n {
                raw.push(qt.get(i, 0) - truth[i]);
                reduced.push(qh.get(i, 0) - truth[i]);
            }
        }
        let var = |x: &[f64]| {
            let m = x.iter().sum::<f64>() / x.len() as f64;
            x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64
        };
        assert!(var(&reduced) <= 0.5 * var(&raw), "{} vs {}", var(&reduced), var(&raw));
    }

    #[test]
    fn lambda_cases() {
        let x = [1.0, 2.0, 4.0, 3.0];
        assert!((estimate_lambda(&x, &x).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(estimate_lambda(&x, &[2.0; 4]), Err(QPolicyError::DegenerateControlVariate));
        assert!(estimate_lambda(&x, &[1.0, 2.0]).is_err());
        assert!(estimate_lambda(&[1.0], &[1.0]).is_err());

        let mut rng = stream_rng(5, Domain::Synthetic, 0, 0, 0);
        let a: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let b: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        assert!(estimate_lambda(&a, &b).unwrap().abs() <= 0.1);
    }

    #[test]
    fn lambda_recovers_gaussian_optimum() {
        let (rho, s_ae, s_cv) = (0.6, 2.0, 1.0);
        let mut rng = stream_rng(6, Domain::Synthetic, 0, 0, 0);
        let (mut ae, mut cv) = (Vec::new(), Vec::new());
        for _ in 0..100_000 {
            let z1: f64 = StandardNormal.sample(&mut rng);
            let z2: f64 = StandardNormal.sample(&mut rng);
            cv.push(s_cv * z1);
            ae.push(s_ae * (rho * z1 + (1.0f64 - rho * rho).sqrt() * z2));
        }
        let lambda = estimate_lambda(&ae, &cv).unwrap();
        assert!((lambda + 1.2).abs() <= 0.1, "{lambda}");
    }

    #[test]
    fn ema_endpoints_and_closed_form() {
        let f = BaselineTable { f: table(vec![1.0, -1.0, 3.0]) };
        let q = table(vec![0.5, 0.5, 0.5]);
        assert_eq!(update_baseline(&f, &q, 1.0).unwrap().f, q);
        assert_eq!(update_baseline(&f, &q, 0.0).unwrap(), f);
        assert!(update_baseline(&f, &q, 1.1).is_err());

        let eta = 0.3;
        let f0 = f.f.max_abs_diff(&q);
        let mut cur = f;
        for t in 1..=20 {
            cur = update_baseline(&cur, &q, eta).unwrap();
            let expected = (1.0f64 - eta).powi(t) * f0;
            assert!((cur.f.max_abs_diff(&q) - expected).abs() <= 1e-12 * f0);
        }
    }

    proptest! {
        #[test]
        fn ema_contracts_toward_its_input(
            f in prop::collection::vec(-5.0f64..5.0, 6),
            q in prop::collection::vec(-5.0f64..5.0, 6),
            eta in 0.0f64..=1.0,
        ) {
            let base = BaselineTable { f: table(f) };
            let q = table(q);
            let next = update_baseline(&base, &q, eta).unwrap();
            let before = base.f.max_abs_diff(&q);
            prop_assert!(next.f.max_abs_diff(&q) <= (1.0 - eta) * before + 1e-12);
        }
    }
}
