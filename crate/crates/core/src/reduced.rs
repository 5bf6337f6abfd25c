//! The amplitude equation `dM/dτ = -c M^{q★}` obtained by projecting the
//! rescaled flow onto the Gaussian mode and dropping the correction `ω`.
//!
//! Since `q★ - 1 = 1/(N+1)`, separating variables gives
//! `M(τ)^{-1/(N+1)} = M0^{-1/(N+1)} + cτ/(N+1)`, hence
//! `τ^{N+1} M(τ) → ((q★-1)c)^{-(N+1)}`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedState {
    pub tau: f64,
    pub mass: f64,
    /// Dissipation constant.
    pub c: f64,
    pub dim: usize,
}

fn critical_exponent(dim: usize) -> f64 {
    (dim as f64 + 2.0) / (dim as f64 + 1.0)
}

/// `-c M^{q★}`.
pub fn ode_rhs(s: &ReducedState) -> f64 {
    ode_rhs_with_exponent(s.mass, s.c, critical_exponent(s.dim))
}

/// `-c M^q` for an arbitrary exponent; negative masses are treated as zero.
pub fn ode_rhs_with_exponent(mass: f64, c: f64, q: f64) -> f64 {
    if mass <= 0.0 {
        0.0
    } else {
        -c * mass.powf(q)
    }
}

fn check_inputs(m0: f64, c: f64, dim: usize) -> Result<()> {
    if !(m0.is_finite() && m0 >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "M0",
            reason: format!("must be non-negative, got {m0}"),
        });
    }
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::InvalidParameter {
            name: "c",
            reason: format!("must be positive, got {c}"),
        });
    }
    if dim == 0 {
        return Err(Error::UnsupportedDimension(dim));
    }
    Ok(())
}

/// Closed-form solution `(M0^{-1/(N+1)} + cτ/(N+1))^{-(N+1)}`.
pub fn exact_solution(m0: f64, c: f64, tau: f64, dim: usize) -> Result<f64> {
    check_inputs(m0, c, dim)?;
    if tau < 0.0 {
        return Err(Error::InvalidParameter {
            name: "tau",
            reason: format!("must be non-negative, got {tau}"),
        });
    }
    if m0 == 0.0 || tau == 0.0 {
        return Ok(m0);
    }
    let k = dim as f64 + 1.0;
    Ok((m0.powf(-1.0 / k) + c * tau / k).powf(-k))
}

/// Reduced solution through `(tau0, m_at_tau0)`, evaluated at `tau ≥ tau0`.
pub fn matched_solution(tau0: f64, m_at_tau0: f64, c: f64, dim: usize, tau: f64) -> Result<f64> {
    exact_solution(m_at_tau0, c, tau - tau0, dim)
}

/// Limit of `τ^{N+1} M(τ)`, `((q★-1)c)^{-(N+1)}`.
pub fn asymptote(c: f64, dim: usize) -> f64 {
    let k = dim as f64 + 1.0;
    (c / k).powf(-k)
}

/// Classical RK4 on the amplitude equation from `τ = 0` to `tau_end`.
///
/// The step is shortened so that `tau_end` is reached exactly; the returned
/// samples include both ends.
pub fn integrate_reduced(
    m0: f64,
    c: f64,
    tau_end: f64,
    dt: f64,
    dim: usize,
) -> Result<Vec<ReducedState>> {
    check_inputs(m0, c, dim)?;
    if !(dt > 0.0 && dt <= 1e-2) {
        return Err(Error::InvalidParameter {
            name: "dt",
            reason: format!("must lie in (0, 0.01], got {dt}"),
        });
    }
    if !(tau_end.is_finite() && tau_end >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "tau_end",
            reason: format!("must be non-negative, got {tau_end}"),
        });
    }
    let q = critical_exponent(dim);
    let steps = ((tau_end / dt) - 1e-9).ceil().max(0.0) as usize;
    let h = if steps > 0 { tau_end / steps as f64 } else { 0.0 };
    let f = |m: f64| ode_rhs_with_exponent(m, c, q);
    let mut out = Vec::with_capacity(steps + 1);
    let mut m = m0;
    out.push(ReducedState { tau: 0.0, mass: m, c, dim });
    for s in 0..steps {
        let k1 = f(m);
        let k2 = f(m + 0.5 * h * k1);
        let k3 = f(m + 0.5 * h * k2);
        let k4 = f(m + h * k3);
        m += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        let tau = if s + 1 == steps { tau_end } else { (s + 1) as f64 * h };
        out.push(ReducedState { tau, mass: m, c, dim });
    }
    Ok(out)
}

/// `τ^{N+1} M(τ) / ((q★-1)c)^{-(N+1)} - 1`, evaluated from the closed form
/// `(1 + (N+1) M0^{-1/(N+1)} / (cτ))^{-(N+1)} - 1` without cancellation.
pub fn asymptote_deviation(m0: f64, c: f64, dim: usize, tau: f64) -> Result<f64> {
    check_inputs(m0, c, dim)?;
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tau",
            reason: format!("must be positive, got {tau}"),
        });
    }
    if m0 == 0.0 {
        return Ok(-1.0);
    }
    let k = dim as f64 + 1.0;
    let x = k * m0.powf(-1.0 / k) / (c * tau);
    Ok((-k * x.ln_1p()).exp_m1())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::linear_fit;
    use crate::gaussian::CriticalData;

    #[test]
    fn rhs_examples() {
        let s = |mass| ReducedState { tau: 0.0, mass, c: 0.7, dim: 1 };
        assert_eq!(ode_rhs(&s(0.0)), 0.0);
        assert_eq!(ode_rhs(&s(1.0)), -0.7);
        for lambda in [0.5, 2.0, 9.0] {
            let lhs = ode_rhs(&s(lambda * 1.3));
            let rhs = lambda.powf(1.5) * ode_rhs(&s(1.3));
            assert!((lhs - rhs).abs() < 1e-13 * rhs.abs());
        }
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(exact_solution(3.0, 0.2, 0.0, 2).unwrap(), 3.0);
        // dM/dτ = -M^{3/2}, M(0) = 1: M^{-1/2} = 1 + τ/2, so M(2) = 1/4
        assert!((exact_solution(1.0, 1.0, 2.0, 1).unwrap() - 0.25).abs() < 1e-15);
        assert!(exact_solution(-1.0, 1.0, 1.0, 1).is_err());
        assert!(exact_solution(1.0, 0.0, 1.0, 1).is_err());
        assert_eq!(exact_solution(0.0, 1.0, 5.0, 1).unwrap(), 0.0);
    }

    #[test]
    fn closed_form_satisfies_the_ode() {
        for dim in 1..=2 {
            let (m0, c) = (2.5, 0.4);
            for tau in [0.3, 2.0, 17.0] {
                let d = 1e-4;
                let deriv = (exact_solution(m0, c, tau + d, dim).unwrap()
                    - exact_solution(m0, c, tau - d, dim).unwrap())
                    / (2.0 * d);
                let state = ReducedState {
                    tau,
                    mass: exact_solution(m0, c, tau, dim).unwrap(),
                    c,
                    dim,
                };
                assert!((deriv - ode_rhs(&state)).abs() < 1e-8 * deriv.abs());
            }
        }
    }

    #[test]
    fn asymptote_matches_critical_amplitude() {
        for dim in 1..=2 {
            let crit = CriticalData::new(dim).unwrap();
            let a = asymptote(crit.c_mass, dim);
            assert!((a - crit.m_star).abs() < 1e-10 * crit.m_star);
            let k = dim as f64 + 1.0;
            let tau = 1e7_f64;
            let rescaled = tau.powf(k) * exact_solution(1.0, crit.c_mass, tau, dim).unwrap();
            assert!((rescaled / a - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn rk4_matches_closed_form() {
        let traj = integrate_reduced(1.0, 1.0, 50.0, 1e-3, 1).unwrap();
        for s in traj.iter().step_by(997) {
            let exact = exact_solution(1.0, 1.0, s.tau, 1).unwrap();
            assert!((s.mass - exact).abs() <= 1e-8 * exact);
        }
        assert_eq!(traj.last().unwrap().tau, 50.0);
        for w in traj.windows(2) {
            assert!(w[1].mass > 0.0 && w[1].mass <= w[0].mass);
        }
    }

    #[test]
    fn rk4_grid_of_parameters() {
        for dim in 1..=2 {
            for m0 in [0.1, 0.5, 1.0, 4.0, 10.0] {
                for c in [0.1, 1.0] {
                    let last = *integrate_reduced(m0, c, 50.0, 1e-3, dim).unwrap().last().unwrap();
                    let exact = exact_solution(m0, c, 50.0, dim).unwrap();
                    assert!((last.mass - exact).abs() <= 1e-8 * exact);
                }
            }
        }
    }

    #[test]
    fn rk4_is_fourth_order() {
        let err = |dt: f64| {
            let last = integrate_reduced(10.0, 2.0, 5.0, dt, 1).unwrap();
            (last.last().unwrap().mass - exact_solution(10.0, 2.0, 5.0, 1).unwrap()).abs()
        };
        let ratio = err(1e-2) / err(5e-3);
        assert!((14.0..=18.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn zero_and_invalid_inputs() {
        let traj = integrate_reduced(0.0, 1.0, 3.0, 1e-2, 1).unwrap();
        assert!(traj.iter().all(|s| s.mass == 0.0));
        assert!(integrate_reduced(-0.1, 1.0, 3.0, 1e-3, 1).is_err());
        assert!(integrate_reduced(1.0, 1.0, 3.0, 0.02, 1).is_err());
        assert_eq!(integrate_reduced(1.0, 1.0, 0.0, 1e-3, 1).unwrap().len(), 1);
    }

    #[test]
    fn deviation_decays_like_inverse_time() {
        let taus: Vec<f64> = (0..=20).map(|i| 10f64.powf(2.0 + 0.1 * i as f64)).collect();
        let logs: Vec<f64> = taus
            .iter()
            .map(|&t| asymptote_deviation(1.0, 0.16, 1, t).unwrap().abs().ln())
            .collect();
        let lt: Vec<f64> = taus.iter().map(|t| t.ln()).collect();
        let (slope, _) = linear_fit(&lt, &logs).unwrap();
        assert!((slope + 1.0).abs() < 0.05, "slope {slope}");
        assert!(asymptote_deviation(1.0, 1.0, 1, 0.0).is_err());
    }

    #[test]
    fn deviation_agrees_with_definition() {
        for dim in 1..=2 {
            let (m0, c) = (0.7, 0.3);
            let k = dim as f64 + 1.0;
            for tau in [1.0_f64, 10.0, 100.0] {
                let direct =
                    tau.powf(k) * exact_solution(m0, c, tau, dim).unwrap() / asymptote(c, dim) - 1.0;
                let stable = asymptote_deviation(m0, c, dim, tau).unwrap();
                assert!((direct - stable).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn deviation_for_tuned_initial_mass() {
        // M0^{-1/(N+1)} = c
        for dim in 1..=2 {
            let k = dim as f64 + 1.0;
            let c = 0.8_f64;
            let m0 = c.powf(-k);
            for tau in [0.5, 3.0, 40.0] {
                let expected = (1.0 + k / tau).powf(-k) - 1.0;
                let got = asymptote_deviation(m0, c, dim, tau).unwrap();
                assert!((got - expected).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn matched_solution_restarts_the_clock() {
        let m5 = exact_solution(1.0, 0.5, 5.0, 1).unwrap();
        let direct = exact_solution(1.0, 0.5, 15.0, 1).unwrap();
        let restarted = matched_solution(5.0, m5, 0.5, 1, 15.0).unwrap();
        assert!((direct - restarted).abs() < 1e-14);
    }
}
