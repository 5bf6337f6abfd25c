//! Method-of-lines integration of the rescaled equation
//! `∂_τ v = L v - a(τ) |∇v|^q`, its truncated variant, and the diagnostics
//! recorded along trajectories.
//!
//! For the critical exponent the equation is autonomous (`a ≡ 1`). For a
//! general exponent the change of variables leaves the weight
//! `a(τ) = exp(γτ)` with `γ = (N + 2 - q(N+1))/2`.

use crate::error::{Error, Result};
use crate::field::{ScalarField, WeightParams};
use crate::gaussian::{gaussian_profile, CriticalData};
use crate::grid::Grid;
use crate::norms::{h1m_norm, h1m_norm_sq, integrate, l1_norm, l2_norm};
use crate::operators::InteriorStencil;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    ExplicitRk4,
    /// Backward Euler on the Laplacian, forward Euler on drift and absorption.
    ImexEuler,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Nonlinearity {
    Full,
    Truncated,
    Off,
}

/// Cutoff radius and weight of the truncated nonlinearity
/// `χ_ρ(‖v‖_m²) |∇v|^q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationParams {
    rho: f64,
    weight: WeightParams,
}

impl TruncationParams {
    pub fn new(rho: f64, weight: WeightParams) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::CutoffRadius(rho));
        }
        Ok(Self { rho, weight })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn weight(&self) -> WeightParams {
        self.weight
    }
}

/// Smooth cutoff with `χ_ρ(r) = 1` for `r ≤ ρ²` and `0` for `r ≥ 4ρ²`.
///
/// The bridge is the quintic smoothstep in `s = (r/ρ² - 1)/3`, which is C²
/// and monotone.
pub fn cutoff_chi(r: f64, rho: f64) -> Result<f64> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::CutoffRadius(rho));
    }
    if r.is_nan() || r < 0.0 {
        return Err(Error::InvalidParameter {
            name: "r",
            reason: format!("must be non-negative, got {r}"),
        });
    }
    let s = ((r / (rho * rho) - 1.0) / 3.0).clamp(0.0, 1.0);
    Ok(1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s))
}

/// Time-stepping parameters shared by the similarity and physical solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub dt: f64,
    /// Final time (similarity time for [`evolve`]).
    pub tau_end: f64,
    pub scheme: Scheme,
    pub record_every: usize,
    pub nonlinearity: Nonlinearity,
    /// Keep the field at every record (needed by [`energy_monitor`]).
    pub store_snapshots: bool,
}

impl SolverConfig {
    /// RK4 with `dt = h²/(6N)` and records every `max(10, ⌈0.02/dt⌉)` steps.
    pub fn default_for(grid: &Grid, tau_end: f64) -> Self {
        let dt = grid.spacing() * grid.spacing() / (6.0 * grid.dim() as f64);
        Self {
            dt,
            tau_end,
            scheme: Scheme::ExplicitRk4,
            record_every: default_record_every(dt),
            nonlinearity: Nonlinearity::Full,
            store_snapshots: false,
        }
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameter {
                name: "dt",
                reason: format!("must be positive, got {}", self.dt),
            });
        }
        if !(self.tau_end.is_finite() && self.tau_end >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "tau_end",
                reason: format!("must be non-negative, got {}", self.tau_end),
            });
        }
        if self.record_every == 0 {
            return Err(Error::InvalidParameter {
                name: "record_every",
                reason: "must be at least 1".into(),
            });
        }
        let limit = grid.explicit_step_limit();
        if self.scheme == Scheme::ExplicitRk4 && self.dt > limit {
            return Err(Error::StepTooLarge { dt: self.dt, limit });
        }
        Ok(())
    }
}

/// Records at least ten steps apart and roughly every 0.02 time units.
pub fn default_record_every(dt: f64) -> usize {
    ((0.02 / dt).ceil() as usize).max(10)
}

/// Exponent and time weight of the absorption term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Absorption {
    pub exponent: f64,
    /// `γ` in the weight `exp(γτ)`; zero at the critical exponent.
    pub growth: f64,
}

impl Absorption {
    pub fn critical(dim: usize) -> Self {
        let n = dim as f64;
        Self {
            exponent: (n + 2.0) / (n + 1.0),
            growth: 0.0,
        }
    }

    /// Similarity form of `|∇u|^q` for an arbitrary exponent.
    pub fn for_exponent(q: f64, dim: usize) -> Self {
        let n = dim as f64;
        let critical = (n + 2.0) / (n + 1.0);
        Self {
            exponent: q,
            growth: if q == critical {
                0.0
            } else {
                0.5 * (n + 2.0 - q * (n + 1.0))
            },
        }
    }

    pub fn weight_at(&self, tau: f64) -> f64 {
        if self.growth == 0.0 {
            1.0
        } else {
            (self.growth * tau).exp()
        }
    }
}

/// `|y|^q` from `|y|²`, with fast paths for the critical exponents.
#[inline]
pub(crate) fn grad_pow(grad_sq: f64, q: f64) -> f64 {
    if q == 1.5 {
        let a = grad_sq.sqrt();
        a * a.sqrt()
    } else if q == 4.0 / 3.0 {
        let c = grad_sq.cbrt();
        c * c
    } else if q == 2.0 {
        grad_sq
    } else {
        grad_sq.powf(0.5 * q)
    }
}

/// A field at similarity time `tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityState {
    pub tau: f64,
    pub field: ScalarField,
}

impl SimilarityState {
    pub fn new(tau: f64, field: ScalarField) -> Self {
        Self { tau, field }
    }

    pub fn mass(&self) -> f64 {
        integrate(&self.field)
    }
}

/// Exact solver of `(I - dt Δ_h) x = b` with homogeneous Dirichlet data.
pub(crate) enum ImplicitDiffusion {
    /// Constant-coefficient tridiagonal system, Thomas algorithm with the
    /// modified super-diagonal precomputed.
    Tridiagonal { r: f64, c_prime: Vec<f64>, denom: Vec<f64> },
    /// Diagonalization by the orthogonal sine transform on the interior.
    Sine { basis: Vec<f64>, inv_symbol: Vec<f64> },
}

impl ImplicitDiffusion {
    pub(crate) fn new(grid: &Grid, dt: f64) -> Self {
        let n = grid.points_per_axis();
        let m = n - 2;
        let r = dt / (grid.spacing() * grid.spacing());
        match grid.dim() {
            1 => {
                let (a, b) = (-r, 1.0 + 2.0 * r);
                let mut c_prime = vec![0.0; m];
                let mut denom = vec![0.0; m];
                denom[0] = b;
                c_prime[0] = a / b;
                for i in 1..m {
                    denom[i] = b - a * c_prime[i - 1];
                    c_prime[i] = a / denom[i];
                }
                Self::Tridiagonal { r, c_prime, denom }
            }
            _ => {
                let mp1 = (m + 1) as f64;
                let norm = (2.0 / mp1).sqrt();
                let mut basis = vec![0.0; m * m];
                for j in 0..m {
                    for k in 0..m {
                        basis[j * m + k] =
                            norm * (std::f64::consts::PI * ((j + 1) * (k + 1)) as f64 / mp1).sin();
                    }
                }
                let lambda: Vec<f64> = (1..=m)
                    .map(|k| {
                        let s = (std::f64::consts::PI * k as f64 / (2.0 * mp1)).sin();
                        4.0 * r * s * s
                    })
                    .collect();
                let mut inv_symbol = vec![0.0; m * m];
                for j in 0..m {
                    for k in 0..m {
                        inv_symbol[j * m + k] = 1.0 / (1.0 + lambda[j] + lambda[k]);
                    }
                }
                Self::Sine { basis, inv_symbol }
            }
        }
    }

    /// Solves in place on the interior of `x` (boundary entries untouched).
    pub(crate) fn solve(&self, grid: &Grid, x: &mut [f64]) {
        let n = grid.points_per_axis();
        let m = n - 2;
        match self {
            Self::Tridiagonal { r, c_prime, denom } => {
                let a = -r;
                let mut d = vec![0.0; m];
                d[0] = x[1] / denom[0];
                for i in 1..m {
                    d[i] = (x[i + 1] - a * d[i - 1]) / denom[i];
                }
                x[m] = d[m - 1];
                for i in (0..m - 1).rev() {
                    x[i + 1] = d[i] - c_prime[i] * x[i + 2];
                }
            }
            Self::Sine { basis, inv_symbol } => {
                let mut rhs = vec![0.0; m * m];
                for i in 0..m {
                    for j in 0..m {
                        rhs[i * m + j] = x[(i + 1) * n + (j + 1)];
                    }
                }
                let mut tmp = matmul(basis, &rhs, m);
                tmp = matmul(&tmp, basis, m);
                for (t, s) in tmp.iter_mut().zip(inv_symbol) {
                    *t *= s;
                }
                tmp = matmul(basis, &tmp, m);
                tmp = matmul(&tmp, basis, m);
                for i in 0..m {
                    for j in 0..m {
                        x[(i + 1) * n + (j + 1)] = tmp[i * m + j];
                    }
                }
            }
        }
    }
}

fn matmul(a: &[f64], b: &[f64], m: usize) -> Vec<f64> {
    let mut c = vec![0.0; m * m];
    for i in 0..m {
        for k in 0..m {
            let aik = a[i * m + k];
            if aik == 0.0 {
                continue;
            }
            let row = &b[k * m..(k + 1) * m];
            for (cij, bkj) in c[i * m..(i + 1) * m].iter_mut().zip(row) {
                *cij += aik * bkj;
            }
        }
    }
    c
}

/// Stateful stepper for one grid and one configuration.
pub struct Integrator {
    grid: Grid,
    dt: f64,
    scheme: Scheme,
    mode: Nonlinearity,
    truncation: Option<TruncationParams>,
    absorption: Absorption,
    stencil: InteriorStencil,
    implicit: Option<ImplicitDiffusion>,
    stages: [Vec<f64>; 5],
}

impl Integrator {
    pub fn new(
        grid: &Grid,
        cfg: &SolverConfig,
        truncation: Option<TruncationParams>,
        absorption: Absorption,
    ) -> Result<Self> {
        cfg.validate(grid)?;
        if cfg.nonlinearity == Nonlinearity::Truncated && truncation.is_none() {
            return Err(Error::MissingTruncation);
        }
        let len = grid.len();
        Ok(Self {
            grid: *grid,
            dt: cfg.dt,
            scheme: cfg.scheme,
            mode: cfg.nonlinearity,
            truncation,
            absorption,
            stencil: InteriorStencil::new(grid),
            implicit: (cfg.scheme == Scheme::ImexEuler).then(|| ImplicitDiffusion::new(grid, cfg.dt)),
            stages: std::array::from_fn(|_| vec![0.0; len]),
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Changes the step; rebuilds the implicit solver when needed.
    pub fn set_dt(&mut self, dt: f64) {
        if dt != self.dt {
            self.dt = dt;
            if self.scheme == Scheme::ImexEuler {
                self.implicit = Some(ImplicitDiffusion::new(&self.grid, dt));
            }
        }
    }

    /// Coefficient multiplying `|∇v|^q` at time `tau` for state `v`.
    pub fn absorption_factor(&self, tau: f64, v: &[f64]) -> f64 {
        match self.mode {
            Nonlinearity::Off => 0.0,
            Nonlinearity::Full => self.absorption.weight_at(tau),
            Nonlinearity::Truncated => {
                let t = self.truncation.expect("checked at construction");
                let field = ScalarField::from_raw(self.grid, v.to_vec());
                let r = h1m_norm_sq(&field, &t.weight());
                self.absorption.weight_at(tau) * cutoff_chi(r, t.rho()).expect("rho validated")
            }
        }
    }

    /// Writes `L_h v - a(τ) |∇_h v|^q` into `out`; zero on boundary nodes.
    pub fn rhs_into(&self, tau: f64, v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        let factor = self.absorption_factor(tau, v);
        let q = self.absorption.exponent;
        if factor == 0.0 {
            self.stencil.apply(v, |k, s| out[k] = s.linear);
        } else {
            self.stencil
                .apply(v, |k, s| out[k] = s.linear - factor * grad_pow(s.grad_sq, q));
        }
    }

    /// Active absorption `a(τ) χ ∫|∇v|^q` at the current state.
    pub fn active_dissipation(&self, tau: f64, v: &[f64]) -> f64 {
        let factor = self.absorption_factor(tau, v);
        if factor == 0.0 {
            return 0.0;
        }
        factor * dissipation_integral(&self.grid, v, self.absorption.exponent)
    }

    /// Advances `v` from `tau` by one step of size `dt()`.
    pub fn step_in_place(&mut self, tau: f64, v: &mut [f64]) {
        let dt = self.dt;
        match self.scheme {
            Scheme::ExplicitRk4 => {
                let [k1, k2, k3, k4, tmp] = &mut self.stages;
                let this = Self::rhs_view(
                    &self.grid,
                    &self.stencil,
                    self.mode,
                    self.truncation,
                    self.absorption,
                );
                this(tau, v, k1);
                for (t, (a, b)) in tmp.iter_mut().zip(v.iter().zip(k1.iter())) {
                    *t = a + 0.5 * dt * b;
                }
                this(tau + 0.5 * dt, tmp, k2);
                for (t, (a, b)) in tmp.iter_mut().zip(v.iter().zip(k2.iter())) {
                    *t = a + 0.5 * dt * b;
                }
                this(tau + 0.5 * dt, tmp, k3);
                for (t, (a, b)) in tmp.iter_mut().zip(v.iter().zip(k3.iter())) {
                    *t = a + dt * b;
                }
                this(tau + dt, tmp, k4);
                for i in 0..v.len() {
                    v[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
            }
            Scheme::ImexEuler => {
                let factor = self.absorption_factor(tau, v);
                let q = self.absorption.exponent;
                let explicit = &mut self.stages[0];
                explicit.iter_mut().for_each(|e| *e = 0.0);
                self.stencil.apply(v, |k, s| {
                    let mut e = s.linear - s.laplacian;
                    if factor != 0.0 {
                        e -= factor * grad_pow(s.grad_sq, q);
                    }
                    explicit[k] = e;
                });
                for (x, e) in v.iter_mut().zip(explicit.iter()) {
                    *x += dt * e;
                }
                self.implicit
                    .as_ref()
                    .expect("built for the IMEX scheme")
                    .solve(&self.grid, v);
            }
        }
    }

    // Borrow-splitting helper: evaluates the right-hand side without
    // borrowing the stage buffers.
    fn rhs_view<'a>(
        grid: &'a Grid,
        stencil: &'a InteriorStencil,
        mode: Nonlinearity,
        truncation: Option<TruncationParams>,
        absorption: Absorption,
    ) -> impl Fn(f64, &[f64], &mut [f64]) + 'a {
        move |tau, v, out| {
            out.iter_mut().for_each(|o| *o = 0.0);
            let factor = match mode {
                Nonlinearity::Off => 0.0,
                Nonlinearity::Full => absorption.weight_at(tau),
                Nonlinearity::Truncated => {
                    let t = truncation.expect("checked at construction");
                    let field = ScalarField::from_raw(*grid, v.to_vec());
                    let r = h1m_norm_sq(&field, &t.weight());
                    absorption.weight_at(tau) * cutoff_chi(r, t.rho()).expect("rho validated")
                }
            };
            let q = absorption.exponent;
            if factor == 0.0 {
                stencil.apply(v, |k, s| out[k] = s.linear);
            } else {
                stencil.apply(v, |k, s| out[k] = s.linear - factor * grad_pow(s.grad_sq, q));
            }
        }
    }

    /// Integrates from `tau` to `tau_target` with steps no larger than
    /// `dt()`, shortening them uniformly so the target is hit exactly.
    pub fn advance_to(&mut self, state: &mut SimilarityState, tau_target: f64) -> Result<()> {
        let span = tau_target - state.tau;
        if span <= 0.0 {
            return Ok(());
        }
        let base_dt = self.dt;
        let steps = (span / base_dt - 1e-9).ceil().max(1.0) as usize;
        self.set_dt(span / steps as f64);
        let sup0 = state.field.max_abs().max(f64::MIN_POSITIVE);
        let start = state.tau;
        let v = state.field.values_mut();
        for s in 0..steps {
            let tau = start + s as f64 * self.dt;
            self.step_in_place(tau, v);
            check_stability(v, sup0, tau + self.dt)?;
        }
        state.tau = tau_target;
        self.set_dt(base_dt);
        Ok(())
    }
}

pub(crate) fn pin_boundary(f: &mut ScalarField) {
    let grid = *f.grid();
    let v = f.values_mut();
    for (k, x) in v.iter_mut().enumerate() {
        if grid.is_boundary(k) {
            *x = 0.0;
        }
    }
}

/// Largest magnitude on the boundary and the adjacent layer of nodes.
///
/// Boundary samples are pinned to zero, so the layer inside them is what
/// reveals a solution reaching the edge of the box.
pub fn edge_max_abs(f: &ScalarField) -> f64 {
    let grid = f.grid();
    let last = grid.points_per_axis() - 1;
    let near = |i: usize| i <= 1 || i + 1 >= last;
    (0..grid.len())
        .filter(|&k| {
            let [i, j] = grid.unflatten(k);
            near(i) || (grid.dim() == 2 && near(j))
        })
        .map(|k| f.values()[k].abs())
        .fold(0.0, f64::max)
}

pub(crate) fn check_stability(v: &[f64], sup0: f64, tau: f64) -> Result<()> {
    let limit = 1e6 * sup0;
    for &x in v {
        if !(x.abs() <= limit) {
            return Err(Error::Unstable { tau, value: x.abs() });
        }
    }
    Ok(())
}

/// `∫|∇_h v|^q` over interior nodes, with the solver's gradient stencil.
pub fn dissipation_integral(grid: &Grid, v: &[f64], q: f64) -> f64 {
    let mut sum = 0.0;
    InteriorStencil::new(grid).apply(v, |k, s| {
        sum += grid.quadrature_weight(k) * grad_pow(s.grad_sq, q);
    });
    sum
}

/// Right-hand side of the critical rescaled equation (or its truncated or
/// linear variant, per `cfg.nonlinearity`).
pub fn rhs(
    state: &SimilarityState,
    cfg: &SolverConfig,
    trunc: Option<TruncationParams>,
) -> Result<ScalarField> {
    let grid = *state.field.grid();
    let integrator = Integrator::new(&grid, cfg, trunc, Absorption::critical(grid.dim()))?;
    let mut out = vec![0.0; grid.len()];
    integrator.rhs_into(state.tau, state.field.values(), &mut out);
    Ok(ScalarField::from_raw(grid, out))
}

/// One step of size `cfg.dt`.
pub fn step(
    state: &SimilarityState,
    cfg: &SolverConfig,
    trunc: Option<TruncationParams>,
) -> Result<SimilarityState> {
    let grid = *state.field.grid();
    let mut integrator = Integrator::new(&grid, cfg, trunc, Absorption::critical(grid.dim()))?;
    let mut next = state.clone();
    pin_boundary(&mut next.field);
    let sup0 = state.field.max_abs().max(f64::MIN_POSITIVE);
    integrator.step_in_place(state.tau, next.field.values_mut());
    next.tau = state.tau + cfg.dt;
    check_stability(next.field.values(), sup0, next.tau)?;
    Ok(next)
}

/// One row of measured quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub tau: f64,
    /// `∫ v`
    pub mass: f64,
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
    /// `‖v‖_m`
    pub h1m: f64,
    /// Absorption actually applied, `a(τ) χ ∫|∇v|^q`.
    pub dissipation: f64,
    /// `(∫|∇v|^{q★} - c M^{q★}) / (c M^{q★})`, absent when the mass is not
    /// positive.
    pub omega_ratio: Option<f64>,
    /// `‖v - M G‖_m`
    pub manifold_remainder: f64,
    /// `τ^{N+1} M`
    pub rescaled_mass: f64,
    pub min_value: f64,
}

impl DiagnosticsRecord {
    /// Physical time `t = e^τ - 1`.
    pub fn t(&self) -> f64 {
        self.tau.exp_m1()
    }
}

/// Output of [`evolve`].
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub records: Vec<DiagnosticsRecord>,
    /// One snapshot per record when requested.
    pub snapshots: Vec<SimilarityState>,
    pub final_state: SimilarityState,
    pub warnings: Vec<String>,
    /// Step actually used (the requested step shortened to land on `tau_end`).
    pub dt: f64,
}

/// Evaluates the diagnostics of a state.
pub struct Diagnostics {
    crit: CriticalData,
    weight: WeightParams,
    profile: ScalarField,
}

impl Diagnostics {
    pub fn new(grid: &Grid, weight: WeightParams) -> Result<Self> {
        Ok(Self {
            crit: CriticalData::new(grid.dim())?,
            weight,
            profile: gaussian_profile(grid),
        })
    }

    pub fn record(&self, state: &SimilarityState, dissipation: f64) -> DiagnosticsRecord {
        let f = &state.field;
        let mass = integrate(f);
        let raw = dissipation_integral(f.grid(), f.values(), self.crit.q_star);
        let omega_ratio = (mass > 0.0).then(|| {
            let lead = self.crit.c_mass * mass.powf(self.crit.q_star);
            (raw - lead) / lead
        });
        let remainder = f
            .combine(1.0, &self.profile, -mass)
            .map(|r| h1m_norm(&r, &self.weight))
            .expect("profile shares the grid");
        DiagnosticsRecord {
            tau: state.tau,
            mass,
            l1: l1_norm(f),
            l2: l2_norm(f),
            linf: f.max_abs(),
            h1m: h1m_norm(f, &self.weight),
            dissipation,
            omega_ratio,
            manifold_remainder: remainder,
            rescaled_mass: state.tau.powi(self.crit.dim as i32 + 1) * mass,
            min_value: f.min(),
        }
    }
}

/// Integrates the critical rescaled equation from `v0` to `cfg.tau_end`.
pub fn evolve(
    v0: &ScalarField,
    cfg: &SolverConfig,
    trunc: Option<TruncationParams>,
) -> Result<Trajectory> {
    evolve_with(v0, 0.0, cfg, trunc, Absorption::critical(v0.grid().dim()))
}

/// [`evolve`] for an arbitrary absorption term and starting time.
pub fn evolve_with(
    v0: &ScalarField,
    tau0: f64,
    cfg: &SolverConfig,
    trunc: Option<TruncationParams>,
    absorption: Absorption,
) -> Result<Trajectory> {
    let grid = *v0.grid();
    cfg.validate(&grid)?;
    let weight = trunc
        .map(|t| t.weight())
        .unwrap_or_else(|| WeightParams::default_for(grid.dim()));
    let diagnostics = Diagnostics::new(&grid, weight)?;

    // Steps are shortened so that tau_end is an exact multiple of the
    // record spacing.
    let span = cfg.tau_end - tau0;
    let chunks = if span > 0.0 {
        ((span / (cfg.dt * cfg.record_every as f64)) - 1e-9).ceil().max(1.0) as usize
    } else {
        0
    };
    let steps = chunks * cfg.record_every;
    let dt = if steps > 0 { span / steps as f64 } else { cfg.dt };
    let run_cfg = SolverConfig { dt, ..*cfg };
    let mut integrator = Integrator::new(&grid, &run_cfg, trunc, absorption)?;

    let mut field = v0.clone();
    pin_boundary(&mut field);
    let mut state = SimilarityState::new(tau0, field);
    let sup0 = state.field.max_abs().max(f64::MIN_POSITIVE);

    let mut records = Vec::with_capacity(chunks + 1);
    let mut snapshots = Vec::new();
    let mut warnings = Vec::new();
    let mut emit = |state: &SimilarityState, integrator: &Integrator, warnings: &mut Vec<String>| {
        let d = integrator.active_dissipation(state.tau, state.field.values());
        let rec = diagnostics.record(state, d);
        let edge = edge_max_abs(&state.field);
        if edge > 1e-10 * rec.linf && warnings.is_empty() {
            let msg = format!(
                "value {edge:e} next to the boundary exceeds 1e-10 of the sup norm at tau={}",
                state.tau
            );
            log::warn!("{msg}");
            warnings.push(msg);
        }
        records.push(rec);
        if cfg.store_snapshots {
            snapshots.push(state.clone());
        }
    };
    emit(&state, &integrator, &mut warnings);

    for s in 0..steps {
        let tau = tau0 + s as f64 * dt;
        integrator.step_in_place(tau, state.field.values_mut());
        state.tau = tau0 + (s + 1) as f64 * dt;
        check_stability(state.field.values(), sup0, state.tau)?;
        if (s + 1) % cfg.record_every == 0 {
            emit(&state, &integrator, &mut warnings);
        }
    }

    Ok(Trajectory {
        records,
        snapshots,
        final_state: state,
        warnings,
        dt,
    })
}

/// Derivative of a uniformly sampled series at every interior sample.
///
/// Fourth-order five-point stencils throughout (centred where possible,
/// shifted by one next to the ends); series shorter than five samples fall
/// back to the three-point central difference.
pub fn central_derivative(values: &[f64], spacing: f64) -> Vec<f64> {
    let n = values.len();
    let f = values;
    let d = 12.0 * spacing;
    (1..n.saturating_sub(1))
        .map(|i| {
            if n < 5 {
                (f[i + 1] - f[i - 1]) / (2.0 * spacing)
            } else if i == 1 {
                (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / d
            } else if i == n - 2 {
                (3.0 * f[n - 1] + 10.0 * f[n - 2] - 18.0 * f[n - 3] + 6.0 * f[n - 4] - f[n - 5]) / d
            } else {
                (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / d
            }
        })
        .collect()
}

/// Residual of `dM/dτ = -D` at one interior record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissipationResidual {
    pub tau: f64,
    pub mass_rate: f64,
    pub dissipation: f64,
    /// `dM/dτ + D`
    pub residual: f64,
}

fn uniform_spacing(records: &[DiagnosticsRecord]) -> Result<f64> {
    if records.len() < 3 {
        return Err(Error::TooFewRecords {
            needed: 3,
            got: records.len(),
        });
    }
    Ok(records[1].tau - records[0].tau)
}

/// Checks the mass balance `dM/dτ = -∫ a χ |∇v|^q` along a trajectory.
pub fn mass_dissipation_residual(trajectory: &Trajectory) -> Result<Vec<DissipationResidual>> {
    let recs = &trajectory.records;
    let spacing = uniform_spacing(recs)?;
    let masses: Vec<f64> = recs.iter().map(|r| r.mass).collect();
    Ok(central_derivative(&masses, spacing)
        .into_iter()
        .zip(&recs[1..recs.len() - 1])
        .map(|(rate, r)| DissipationResidual {
            tau: r.tau,
            mass_rate: rate,
            dissipation: r.dissipation,
            residual: rate + r.dissipation,
        })
        .collect())
}

/// `(∫|∇v|^{q★} - c M^{q★}) / (c M^{q★})`.
pub fn omega_ratio(state: &SimilarityState, crit: &CriticalData) -> Result<f64> {
    let mass = state.mass();
    if !(mass > 0.0) {
        return Err(Error::NonPositiveMass(mass));
    }
    let f = &state.field;
    let d = dissipation_integral(f.grid(), f.values(), crit.q_star);
    let lead = crit.c_mass * mass.powf(crit.q_star);
    Ok((d - lead) / lead)
}

/// `‖v - M G‖_m` with `M = ∫ v`.
pub fn manifold_remainder(state: &SimilarityState, weight: &WeightParams) -> f64 {
    let f = &state.field;
    let g = gaussian_profile(f.grid());
    let r = f
        .combine(1.0, &g, -state.mass())
        .expect("profile sampled on the same grid");
    h1m_norm(&r, weight)
}

/// Slack of the energy inequality at one interior record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergySlack {
    pub tau: f64,
    /// `½ d/dτ ∫v² + ∫|∇v|² - (N/4)∫v²`, non-positive for non-negative
    /// solutions.
    pub slack: f64,
    /// Sum of the magnitudes of the three terms.
    pub scale: f64,
}

/// Evaluates the energy inequality along stored snapshots.
///
/// `∫|∇v|²` and `(N/4)∫v²` are evaluated as the quadratic forms
/// `-⟨v, Δ_h v⟩` and `⟨v, (½ξ·∇_h + N/2) v⟩` of the scheme's own operators,
/// for which the linear identity holds exactly in the semi-discrete flow.
pub fn energy_monitor(trajectory: &Trajectory) -> Result<Vec<EnergySlack>> {
    let snaps = &trajectory.snapshots;
    if snaps.len() < 3 {
        return Err(Error::TooFewRecords {
            needed: 3,
            got: snaps.len(),
        });
    }
    let spacing = snaps[1].tau - snaps[0].tau;
    let grid = *snaps[0].field.grid();
    let stencil = InteriorStencil::new(&grid);
    let mut energy = Vec::with_capacity(snaps.len());
    let mut dirichlet = Vec::with_capacity(snaps.len());
    let mut growth = Vec::with_capacity(snaps.len());
    for s in snaps {
        let v = s.field.values();
        let (mut a, mut b) = (0.0, 0.0);
        stencil.apply(v, |k, st| {
            let w = grid.quadrature_weight(k) * v[k];
            a -= w * st.laplacian;
            b += w * (st.linear - st.laplacian);
        });
        energy.push(integrate(&s.field.map(|x| x * x)));
        dirichlet.push(a);
        growth.push(b);
    }
    Ok(central_derivative(&energy, spacing)
        .into_iter()
        .enumerate()
        .map(|(i, de)| {
            let k = i + 1;
            EnergySlack {
                tau: snaps[k].tau,
                slack: 0.5 * de + dirichlet[k] - growth[k],
                scale: 0.5 * de.abs() + dirichlet[k].abs() + growth[k].abs(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests;
