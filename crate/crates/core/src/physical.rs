//! The equation `∂_t u = Δu - |∇u|^q` in the original variables, the change
//! of variables `u(t, x) = (1+t)^{-N/2} v(ln(1+t), x/(1+t)^{1/2})`, and the
//! error functional of the decay law.

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::fit::linear_fit;
use crate::gaussian::{heat_self_similar, CriticalData};
use crate::grid::Grid;
use crate::norms::{integrate, l1_norm, lp_norm};
use crate::operators::{gradient, InteriorStencil};
use crate::similarity::{
    check_stability, evolve_with, grad_pow, pin_boundary, Absorption, ImplicitDiffusion,
    Nonlinearity, Scheme, SimilarityState, SolverConfig, Trajectory,
};

/// A field at physical time `t` together with its absorption exponent.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalState {
    pub t: f64,
    pub field: ScalarField,
    pub exponent_q: f64,
}

impl PhysicalState {
    pub fn new(t: f64, field: ScalarField, exponent_q: f64) -> Self {
        Self {
            t,
            field,
            exponent_q,
        }
    }
}

/// `Δu - |∇u|^q`, zero on boundary nodes.
pub fn rhs_physical(u: &PhysicalState) -> ScalarField {
    let grid = *u.field.grid();
    let mut out = vec![0.0; grid.len()];
    PhysicalStepper::rhs_into(
        &InteriorStencil::new(&grid),
        u.exponent_q,
        true,
        u.field.values(),
        &mut out,
    );
    ScalarField::new(grid, out).expect("finite input gives finite output")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalRecord {
    pub t: f64,
    pub mass: f64,
    pub l1: f64,
    pub linf: f64,
    /// `max |∇u|` with the discrete gradient.
    pub grad_linf: f64,
    pub min_value: f64,
}

impl PhysicalRecord {
    pub fn of(state: &PhysicalState) -> Self {
        let f = &state.field;
        let grad = gradient(f);
        let grad_linf = (0..f.grid().len())
            .map(|k| grad.iter().map(|d| d.values()[k].powi(2)).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        Self {
            t: state.t,
            mass: integrate(f),
            l1: l1_norm(f),
            linf: f.max_abs(),
            grad_linf,
            min_value: f.min(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PhysicalTrajectory {
    pub records: Vec<PhysicalRecord>,
    pub snapshots: Vec<PhysicalState>,
    pub final_state: PhysicalState,
    pub dt: f64,
}

/// Time stepper for the physical equation on a fixed grid.
pub struct PhysicalStepper {
    grid: Grid,
    dt: f64,
    q: f64,
    absorb: bool,
    scheme: Scheme,
    stencil: InteriorStencil,
    implicit: Option<ImplicitDiffusion>,
    stages: [Vec<f64>; 5],
}

impl PhysicalStepper {
    pub fn new(grid: &Grid, q: f64, cfg: &SolverConfig) -> Result<Self> {
        cfg.validate(grid)?;
        if !(q.is_finite() && q > 0.0) {
            return Err(Error::InvalidParameter {
                name: "q",
                reason: format!("must be positive, got {q}"),
            });
        }
        if cfg.nonlinearity == Nonlinearity::Truncated {
            return Err(Error::InvalidParameter {
                name: "nonlinearity",
                reason: "the truncated form exists in similarity variables only".into(),
            });
        }
        Ok(Self {
            grid: *grid,
            dt: cfg.dt,
            q,
            absorb: cfg.nonlinearity == Nonlinearity::Full,
            scheme: cfg.scheme,
            stencil: InteriorStencil::new(grid),
            implicit: (cfg.scheme == Scheme::ImexEuler).then(|| ImplicitDiffusion::new(grid, cfg.dt)),
            stages: std::array::from_fn(|_| vec![0.0; grid.len()]),
        })
    }

    fn rhs_into(stencil: &InteriorStencil, q: f64, absorb: bool, v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        if absorb {
            stencil.apply(v, |k, s| out[k] = s.laplacian - grad_pow(s.grad_sq, q));
        } else {
            stencil.apply(v, |k, s| out[k] = s.laplacian);
        }
    }

    fn set_dt(&mut self, dt: f64) {
        if dt != self.dt {
            self.dt = dt;
            if self.scheme == Scheme::ImexEuler {
                self.implicit = Some(ImplicitDiffusion::new(&self.grid, dt));
            }
        }
    }

    pub fn step_in_place(&mut self, v: &mut [f64]) {
        let (dt, q, absorb) = (self.dt, self.q, self.absorb);
        let stencil = &self.stencil;
        match self.scheme {
            Scheme::ExplicitRk4 => {
                let [k1, k2, k3, k4, tmp] = &mut self.stages;
                Self::rhs_into(stencil, q, absorb, v, k1);
                for i in 0..v.len() {
                    tmp[i] = v[i] + 0.5 * dt * k1[i];
                }
                Self::rhs_into(stencil, q, absorb, tmp, k2);
                for i in 0..v.len() {
                    tmp[i] = v[i] + 0.5 * dt * k2[i];
                }
                Self::rhs_into(stencil, q, absorb, tmp, k3);
                for i in 0..v.len() {
                    tmp[i] = v[i] + dt * k3[i];
                }
                Self::rhs_into(stencil, q, absorb, tmp, k4);
                for i in 0..v.len() {
                    v[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
            }
            Scheme::ImexEuler => {
                if absorb {
                    let e = &mut self.stages[0];
                    e.iter_mut().for_each(|x| *x = 0.0);
                    stencil.apply(v, |k, s| e[k] = -grad_pow(s.grad_sq, q));
                    for (x, d) in v.iter_mut().zip(e.iter()) {
                        *x += dt * d;
                    }
                }
                self.implicit
                    .as_ref()
                    .expect("built for the IMEX scheme")
                    .solve(&self.grid, v);
            }
        }
    }

    /// Integrates to `t_target`, shortening the step uniformly to land on it.
    pub fn advance_to(&mut self, state: &mut PhysicalState, t_target: f64) -> Result<()> {
        let span = t_target - state.t;
        if span <= 0.0 {
            return Ok(());
        }
        let base = self.dt;
        let steps = (span / base - 1e-9).ceil().max(1.0) as usize;
        self.set_dt(span / steps as f64);
        let sup0 = state.field.max_abs().max(f64::MIN_POSITIVE);
        let start = state.t;
        for s in 0..steps {
            self.step_in_place(state.field.values_mut());
            check_stability(state.field.values(), sup0, start + (s + 1) as f64 * self.dt)?;
        }
        state.t = t_target;
        self.set_dt(base);
        Ok(())
    }
}

/// Integrates `∂_t u = Δu - |∇u|^q` from `t = 0` to `t_end`.
///
/// `cfg.tau_end` is not used; records are emitted every `cfg.record_every`
/// steps, the step being shortened so that `t_end` is a record time.
pub fn evolve_physical(
    u0: &ScalarField,
    q: f64,
    t_end: f64,
    cfg: &SolverConfig,
) -> Result<PhysicalTrajectory> {
    let grid = *u0.grid();
    cfg.validate(&grid)?;
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "t_end",
            reason: format!("must be non-negative, got {t_end}"),
        });
    }
    let chunks = if t_end > 0.0 {
        ((t_end / (cfg.dt * cfg.record_every as f64)) - 1e-9).ceil().max(1.0) as usize
    } else {
        0
    };
    let steps = chunks * cfg.record_every;
    let dt = if steps > 0 { t_end / steps as f64 } else { cfg.dt };
    let mut stepper = PhysicalStepper::new(&grid, q, &SolverConfig { dt, ..*cfg })?;

    let mut field = u0.clone();
    pin_boundary(&mut field);
    let mut state = PhysicalState::new(0.0, field, q);
    let sup0 = state.field.max_abs().max(f64::MIN_POSITIVE);
    let mut records = vec![PhysicalRecord::of(&state)];
    let mut snapshots = Vec::new();
    if cfg.store_snapshots {
        snapshots.push(state.clone());
    }
    for s in 0..steps {
        stepper.step_in_place(state.field.values_mut());
        state.t = (s + 1) as f64 * dt;
        check_stability(state.field.values(), sup0, state.t)?;
        if (s + 1) % cfg.record_every == 0 {
            records.push(PhysicalRecord::of(&state));
            if cfg.store_snapshots {
                snapshots.push(state.clone());
            }
        }
    }
    Ok(PhysicalTrajectory {
        records,
        snapshots,
        final_state: state,
        dt,
    })
}

/// Linear (1-D) or bilinear (2-D) interpolation of `f` at `x`.
fn sample(f: &ScalarField, x: [f64; 2]) -> Result<f64> {
    let grid = f.grid();
    let n = grid.points_per_axis();
    let l = grid.half_width();
    let h = grid.spacing();
    let locate = |c: f64| -> Result<(usize, f64)> {
        if c.abs() > l * (1.0 + 1e-12) {
            return Err(Error::OutsideGrid {
                coordinate: c,
                half_width: l,
            });
        }
        let pos = ((c + l) / h).clamp(0.0, (n - 1) as f64);
        let i = (pos.floor() as usize).min(n - 2);
        Ok((i, pos - i as f64))
    };
    let v = f.values();
    let (i, a) = locate(x[0])?;
    match grid.dim() {
        1 => Ok((1.0 - a) * v[i] + a * v[i + 1]),
        _ => {
            let (j, b) = locate(x[1])?;
            let at = |p: usize, q: usize| v[p * n + q];
            Ok((1.0 - a) * ((1.0 - b) * at(i, j) + b * at(i, j + 1))
                + a * ((1.0 - b) * at(i + 1, j) + b * at(i + 1, j + 1)))
        }
    }
}

/// Interpolates `f` onto `target` (same dimension).
pub fn resample(f: &ScalarField, target: &Grid) -> Result<ScalarField> {
    rescaled_samples(f, target, 1.0, 1.0)
}

fn rescaled_samples(f: &ScalarField, target: &Grid, stretch: f64, amplitude: f64) -> Result<ScalarField> {
    if f.grid().dim() != target.dim() {
        return Err(Error::GridMismatch);
    }
    let values = (0..target.len())
        .map(|k| {
            let p = target.point(k);
            sample(f, [p[0] * stretch, p[1] * stretch]).map(|s| amplitude * s)
        })
        .collect::<Result<Vec<f64>>>()?;
    ScalarField::new(*target, values)
}

/// `√(1+t)`, the length scale of the change of variables.
fn stretch(t: f64) -> f64 {
    (1.0 + t).sqrt()
}

/// Exact map to similarity variables on the naturally rescaled grid
/// (coordinates divided by `√(1+t)`).
pub fn to_similarity(u: &PhysicalState) -> SimilarityState {
    let s = stretch(u.t);
    let dim = u.field.grid().dim() as i32;
    let grid = u.field.grid().scaled(1.0 / s);
    let values = u.field.values().iter().map(|x| x * s.powi(dim)).collect();
    SimilarityState::new(
        u.t.ln_1p(),
        ScalarField::new(grid, values).expect("scaling keeps values finite"),
    )
}

/// Map to similarity variables sampled on `target` by interpolation.
pub fn to_similarity_on(u: &PhysicalState, target: &Grid) -> Result<SimilarityState> {
    if u.t == 0.0 && u.field.grid() == target {
        return Ok(SimilarityState::new(0.0, u.field.clone()));
    }
    let s = stretch(u.t);
    let field = rescaled_samples(&u.field, target, s, s.powi(target.dim() as i32))?;
    Ok(SimilarityState::new(u.t.ln_1p(), field))
}

/// Exact map back to physical variables on the naturally rescaled grid
/// (coordinates multiplied by `√(1+t)`, `t = e^τ - 1`).
pub fn from_similarity(v: &SimilarityState, exponent_q: f64) -> PhysicalState {
    let t = v.tau.exp_m1();
    let s = stretch(t);
    let dim = v.field.grid().dim() as i32;
    let grid = v.field.grid().scaled(s);
    let values = v.field.values().iter().map(|x| x / s.powi(dim)).collect();
    PhysicalState::new(
        t,
        ScalarField::new(grid, values).expect("scaling keeps values finite"),
        exponent_q,
    )
}

/// `E_p(t) = t^{N(1-1/p)/2} (ln t)^{N+1} ‖u(t) - M★ (ln t)^{-(N+1)} g(t)‖_p`.
pub fn asymptotic_law_error(u: &PhysicalState, p: f64, crit: &CriticalData) -> Result<f64> {
    if !(u.t > 1.0) {
        return Err(Error::TimeTooSmall(u.t));
    }
    let grid = u.field.grid();
    let n = grid.dim() as f64;
    let log_t = u.t.ln();
    let lead = crit.m_star * log_t.powf(-(n + 1.0));
    let g = heat_self_similar(u.t, grid)?;
    let diff = u.field.combine(1.0, &g, -lead)?;
    let norm = lp_norm(&diff, p)?;
    let time_factor = if p.is_infinite() {
        u.t.powf(0.5 * n)
    } else {
        u.t.powf(0.5 * n * (1.0 - 1.0 / p))
    };
    Ok(time_factor * log_t.powf(n + 1.0) * norm)
}

/// Settings of the `L¹` dichotomy probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeHorizon {
    /// Physical time at which the run switches to similarity variables.
    pub t_switch: f64,
    /// Final similarity time.
    pub tau_end: f64,
    pub nonlinearity: Nonlinearity,
    /// Keep the continuation snapshots (for the energy monitor).
    pub store_snapshots: bool,
}

impl Default for ProbeHorizon {
    fn default() -> Self {
        Self {
            t_switch: 3.0,
            tau_end: 60.0,
            nonlinearity: Nonlinearity::Full,
            store_snapshots: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct L1Probe {
    pub plateau_estimate: f64,
    pub decaying: bool,
    /// Fitted `-d ln‖u‖₁/dτ` on the last quarter of the run.
    pub tail_rate: f64,
    pub initial_l1: f64,
    /// `(τ, ‖u‖₁)` along the whole run.
    pub samples: Vec<(f64, f64)>,
    pub physical: PhysicalTrajectory,
    pub continuation: Trajectory,
}

/// Fitted rate below which `‖u‖₁` counts as flat.
pub const FLAT_RATE: f64 = 1e-3;

/// Decides whether `‖u(t)‖₁` tends to zero or to a positive limit.
///
/// The physical equation is integrated on the grid of `u0` up to
/// `t_switch`, mapped exactly onto the rescaled grid, and continued in
/// similarity variables, where the absorption carries the weight
/// `exp(γτ)`, `γ = (N+2-q(N+1))/2`. The tail is the last quarter of the
/// samples in `τ`; the run is "decaying" when the least-squares slope of
/// `ln‖u‖₁` there is at least [`FLAT_RATE`] in magnitude. The plateau is
/// the Aitken extrapolation of three equally spaced tail samples, kept in
/// `[0, last value]`.
pub fn l1_limit_probe(u0: &ScalarField, q: f64, horizon: &ProbeHorizon) -> Result<L1Probe> {
    if !(q > 1.0) {
        return Err(Error::InvalidParameter {
            name: "q",
            reason: format!("must exceed 1, got {q}"),
        });
    }
    if u0.min() < 0.0 {
        return Err(Error::InvalidParameter {
            name: "u0",
            reason: "must be non-negative".into(),
        });
    }
    let grid = *u0.grid();
    let tau_switch = horizon.t_switch.ln_1p();
    if !(horizon.t_switch >= 0.0 && horizon.tau_end >= tau_switch + 8.0) {
        return Err(Error::Inconclusive(format!(
            "similarity continuation [{tau_switch}, {}] shorter than 8 time units",
            horizon.tau_end
        )));
    }

    let mut cfg = SolverConfig::default_for(&grid, 0.0);
    cfg.nonlinearity = horizon.nonlinearity;
    let phys = evolve_physical(u0, q, horizon.t_switch, &cfg)?;
    let mut samples: Vec<(f64, f64)> = phys.records.iter().map(|r| (r.t.ln_1p(), r.l1)).collect();

    let v0 = to_similarity(&phys.final_state);
    let sim_grid = *v0.field.grid();
    let mut sim_cfg = SolverConfig::default_for(&sim_grid, horizon.tau_end);
    sim_cfg.nonlinearity = horizon.nonlinearity;
    sim_cfg.store_snapshots = horizon.store_snapshots;
    sim_cfg.record_every = ((0.25 / sim_cfg.dt).ceil() as usize).max(10);
    let sim = evolve_with(
        &v0.field,
        v0.tau,
        &sim_cfg,
        None,
        Absorption::for_exponent(q, grid.dim()),
    )?;
    samples.extend(sim.records.iter().skip(1).map(|r| (r.tau, r.l1)));

    let tail_start = horizon.tau_end - 0.25 * (horizon.tau_end - tau_switch);
    let tail: Vec<&(f64, f64)> = samples.iter().filter(|s| s.0 >= tail_start).collect();
    if tail.len() < 8 || tail.iter().any(|s| !(s.1 > 0.0)) {
        return Err(Error::Inconclusive(format!(
            "{} usable tail samples",
            tail.len()
        )));
    }
    let taus: Vec<f64> = tail.iter().map(|s| s.0).collect();
    let logs: Vec<f64> = tail.iter().map(|s| s.1.ln()).collect();
    let (slope, _) =
        linear_fit(&taus, &logs).ok_or_else(|| Error::Inconclusive("degenerate fit".into()))?;

    let last = tail.len() - 1;
    let k = last / 2;
    let (m0, m1, m2) = (tail[last - 2 * k].1, tail[last - k].1, tail[last].1);
    let (d1, d2) = (m1 - m0, m2 - m1);
    // Aitken needs monotone, contracting increments; otherwise the last
    // sample is the best available estimate.
    let contracting = d1 * d2 > 0.0 && d2.abs() < d1.abs() && d2.abs() > 1e-12 * m2;
    let plateau = if contracting {
        (m2 - d2 * d2 / (d2 - d1)).clamp(0.0, m2)
    } else {
        m2
    };
    Ok(L1Probe {
        plateau_estimate: plateau,
        decaying: slope.abs() >= FLAT_RATE,
        tail_rate: -slope,
        initial_l1: l1_norm(u0),
        samples,
        physical: phys,
        continuation: sim,
    })
}
