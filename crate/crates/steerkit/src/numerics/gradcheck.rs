//! Central-difference gradient oracle used to validate every analytic
//! gradient in the crate.

/// Central differences `(f(p + eps e_i) - f(p - eps e_i)) / 2 eps` per
/// coordinate. `eps` must be positive.
pub fn finite_diff_grad<F>(loss: F, params: &[f64], eps: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    assert!(eps > 0.0, "eps must be positive");
    let mut grad = Vec::with_capacity(params.len());
    let mut probe = params.to_vec();
    for i in 0..params.len() {
        let original = probe[i];
        probe[i] = original + eps;
        let plus = loss(&probe);
        probe[i] = original - eps;
        let minus = loss(&probe);
        probe[i] = original;
        grad.push((plus - minus) / (2.0 * eps));
    }
    grad
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_gradient() {
        let f = |p: &[f64]| p.iter().map(|x| x * x).sum::<f64>();
        let grad = finite_diff_grad(f, &[1.0, 2.0], 1e-6);
        assert!((grad[0] - 2.0).abs() < 1e-6);
        assert!((grad[1] - 4.0).abs() < 1e-6);
    }

    #[test]
    fn constant_function_has_zero_gradient() {
        let f = |_: &[f64]| 3.5;
        let grad = finite_diff_grad(f, &[1.0, -2.0, 0.5], 1e-5);
        assert_eq!(grad, vec![0.0, 0.0, 0.0]);
    }
}
