//! Newton corrector in the reduced symmetric basis, pseudo-arclength
//! predictor-corrector branch tracing from a bifurcation point, and
//! classification of how a branch terminates.
//!
//! Unknowns are the sine coefficients of θ and the cosine coefficients of γ₁
//! for wavenumbers 1..n/2−1, plus the speed c when an arclength constraint is
//! active. The Jacobian is built column-wise by forward finite differences in
//! this basis and solved densely.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::fmt;

use crate::error::WaveError;
use crate::geometry::CurveGeometry;
use crate::linear::BifurcationPoint;
use crate::spectral::Grid;
use crate::system::{residual, PhysicalParameters, WaveState};

/// Which root of the bifurcation-speed pair a branch starts from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BranchSign {
    Plus,
    Minus,
}

impl BranchSign {
    pub fn is_plus(self) -> bool {
        matches!(self, BranchSign::Plus)
    }
}

impl fmt::Display for BranchSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BranchSign::Plus => write!(f, "+"),
            BranchSign::Minus => write!(f, "-"),
        }
    }
}

/// Newton corrector settings.
#[derive(Clone, Copy, Debug)]
pub struct NewtonSettings {
    /// Convergence tolerance on the H1×H1 residual norm.
    pub tol_residual: f64,
    pub max_iters: usize,
    /// Relative forward-difference step for Jacobian columns.
    pub fd_step: f64,
    /// Backtracking line search (halving, at most 8 halvings).
    pub linesearch: bool,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        Self {
            tol_residual: 1e-11,
            max_iters: 50,
            fd_step: 1e-7,
            linesearch: true,
        }
    }
}

/// Why a Newton solve did not return a converged state.
#[derive(Clone, Debug, PartialEq)]
pub enum NewtonFailure {
    MaxIterations { last_norm: f64 },
    /// The iteration left the admissible set; carries the boundary event.
    DomainExit(WaveError),
    SingularJacobian,
}

impl fmt::Display for NewtonFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NewtonFailure::MaxIterations { last_norm } => {
                write!(f, "no convergence within the iteration budget (residual {last_norm:.3e})")
            }
            NewtonFailure::DomainExit(e) => write!(f, "left the admissible set: {e}"),
            NewtonFailure::SingularJacobian => write!(f, "singular Jacobian"),
        }
    }
}

/// Reduced representation of a symmetric state: sine coefficients of θ and
/// cosine coefficients of γ₁ for k = 1..n/2−1, plus the speed.
#[derive(Clone, Debug)]
pub struct StateVector {
    n: usize,
    coeffs: Vec<f64>,
    c: f64,
}

impl StateVector {
    pub fn flat(n: usize, c: f64) -> Self {
        Self {
            n,
            coeffs: vec![0.0; n - 2],
            c,
        }
    }

    pub fn from_state(state: &WaveState) -> Self {
        let n = state.grid().n();
        let half = n / 2;
        let theta_hat = state.theta.coefficients();
        let gamma_hat = state.gamma1.coefficients();
        let mut coeffs = Vec::with_capacity(n - 2);
        for k in 1..half {
            coeffs.push(-2.0 * theta_hat[k].im);
        }
        for k in 1..half {
            coeffs.push(2.0 * gamma_hat[k].re);
        }
        Self {
            n,
            coeffs,
            c: state.c,
        }
    }

    pub fn to_state(&self) -> WaveState {
        let grid = Grid::new(self.n).expect("state vector carries a valid grid size");
        let half = self.n / 2;
        let mut theta_hat = vec![Complex64::ZERO; self.n];
        let mut gamma_hat = vec![Complex64::ZERO; self.n];
        for k in 1..half {
            let b = self.coeffs[k - 1];
            theta_hat[k] = Complex64::new(0.0, -0.5 * b);
            theta_hat[self.n - k] = Complex64::new(0.0, 0.5 * b);
            let a = self.coeffs[half - 1 + k - 1];
            gamma_hat[k] = Complex64::new(0.5 * a, 0.0);
            gamma_hat[self.n - k] = Complex64::new(0.5 * a, 0.0);
        }
        let theta = crate::spectral::SpectralField::from_coefficients(
            grid,
            &theta_hat,
            crate::spectral::Parity::Odd,
        );
        let gamma1 = crate::spectral::SpectralField::from_coefficients(
            grid,
            &gamma_hat,
            crate::spectral::Parity::Even,
        );
        WaveState::new(theta, gamma1, self.c)
    }

    pub fn speed(&self) -> f64 {
        self.c
    }

    fn dim(&self) -> usize {
        self.coeffs.len()
    }

    /// H1-metric weight of coefficient slot j (the speed has weight 1).
    fn weight(&self, j: usize) -> f64 {
        let half = self.n / 2;
        let k = (j % (half - 1) + 1) as f64;
        0.5 * (1.0 + k * k)
    }

    /// Inner product in the continuation metric H1 × H1 × R.
    pub fn weighted_dot(&self, other: &Self) -> f64 {
        assert_eq!(self.n, other.n);
        let mut acc = self.c * other.c;
        for j in 0..self.dim() {
            acc += self.weight(j) * self.coeffs[j] * other.coeffs[j];
        }
        acc
    }

    pub fn weighted_norm(&self) -> f64 {
        self.weighted_dot(self).sqrt()
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        Self {
            n: self.n,
            coeffs: self
                .coeffs
                .iter()
                .zip(other.coeffs.iter())
                .map(|(a, b)| a - b)
                .collect(),
            c: self.c - other.c,
        }
    }

    pub fn add_scaled(&self, dir: &Self, s: f64) -> Self {
        assert_eq!(self.n, dir.n);
        Self {
            n: self.n,
            coeffs: self
                .coeffs
                .iter()
                .zip(dir.coeffs.iter())
                .map(|(a, b)| a + s * b)
                .collect(),
            c: self.c + s * dir.c,
        }
    }

    pub fn normalized(&self) -> Self {
        let norm = self.weighted_norm();
        assert!(norm > 0.0, "cannot normalize the zero direction");
        Self {
            n: self.n,
            coeffs: self.coeffs.iter().map(|v| v / norm).collect(),
            c: self.c / norm,
        }
    }

    /// Embeds the coefficients into a finer (or coarser) grid size.
    pub fn resample(&self, n_new: usize) -> Self {
        let half_old = self.n / 2;
        let half_new = n_new / 2;
        let keep = (half_old - 1).min(half_new - 1);
        let mut coeffs = vec![0.0; n_new - 2];
        for k in 1..=keep {
            coeffs[k - 1] = self.coeffs[k - 1];
            coeffs[half_new - 1 + k - 1] = self.coeffs[half_old - 1 + k - 1];
        }
        Self {
            n: n_new,
            coeffs,
            c: self.c,
        }
    }
}

/// What is held fixed during a Newton solve.
#[derive(Clone, Debug)]
pub enum SolveConstraint {
    /// The speed stays at its initial value; unknowns are the coefficients.
    FixedSpeed,
    /// Pseudo-arclength normalization ⟨u − base, tangent⟩_W = ds with the
    /// speed as an extra unknown.
    Arclength {
        base: StateVector,
        tangent: StateVector,
        ds: f64,
    },
}

/// A converged Newton solve.
#[derive(Clone, Debug)]
pub struct NewtonSolution {
    pub state: WaveState,
    pub residual_norm: f64,
    pub iterations: usize,
}

struct EvalOutput {
    reduced: Vec<f64>,
    norm_h1: f64,
    constraint: f64,
}

fn evaluate(
    u: &StateVector,
    constraint: &SolveConstraint,
    params: &PhysicalParameters,
) -> Result<EvalOutput, WaveError> {
    let state = u.to_state();
    let res = residual(&state, params)?;
    let half = u.n / 2;
    let mut reduced = Vec::with_capacity(u.n - 2);
    let r_theta_hat = res.r_theta.coefficients();
    let r_gamma_hat = res.r_gamma.coefficients();
    for k in 1..half {
        reduced.push(-2.0 * r_theta_hat[k].im);
    }
    for k in 1..half {
        reduced.push(2.0 * r_gamma_hat[k].re);
    }
    let constraint_value = match constraint {
        SolveConstraint::FixedSpeed => 0.0,
        SolveConstraint::Arclength { base, tangent, ds } => {
            u.sub(base).weighted_dot(tangent) - ds
        }
    };
    Ok(EvalOutput {
        reduced,
        norm_h1: res.norm_h1,
        constraint: constraint_value,
    })
}

fn merit(out: &EvalOutput) -> f64 {
    (out.norm_h1 * out.norm_h1 + out.constraint * out.constraint).sqrt()
}

/// Newton corrector for the fixed-point system, optionally with a
/// pseudo-arclength normalization row. Returns the converged state or the
/// failure mode; domain-boundary events are reported, not panicked on.
pub fn newton_solve(
    initial: &WaveState,
    constraint: &SolveConstraint,
    params: &PhysicalParameters,
    settings: &NewtonSettings,
) -> Result<NewtonSolution, NewtonFailure> {
    let mut u = StateVector::from_state(initial);
    let with_speed = matches!(constraint, SolveConstraint::Arclength { .. });
    let n_fields = u.dim();
    let dim = n_fields + usize::from(with_speed);

    let mut current = evaluate(&u, constraint, params).map_err(NewtonFailure::DomainExit)?;
    let tol_constraint = 1e-10 * (1.0 + u.weighted_norm());
    if current.norm_h1 <= settings.tol_residual && current.constraint.abs() <= tol_constraint {
        return Ok(NewtonSolution {
            state: u.to_state(),
            residual_norm: current.norm_h1,
            iterations: 0,
        });
    }

    for iter in 1..=settings.max_iters {
        // forward-difference Jacobian, one residual evaluation per column
        let columns: Vec<Result<Vec<f64>, WaveError>> = (0..dim)
            .into_par_iter()
            .map(|j| {
                let mut pert = u.clone();
                let (value, h);
                if j < n_fields {
                    h = settings.fd_step * (1.0 + pert.coeffs[j].abs());
                    pert.coeffs[j] += h;
                    value = evaluate(&pert, constraint, params)?;
                } else {
                    h = settings.fd_step * (1.0 + pert.c.abs());
                    pert.c += h;
                    value = evaluate(&pert, constraint, params)?;
                }
                Ok(value
                    .reduced
                    .iter()
                    .zip(current.reduced.iter())
                    .map(|(p, b)| (p - b) / h)
                    .collect())
            })
            .collect();

        let mut jac = DMatrix::zeros(dim, dim);
        for (j, col) in columns.into_iter().enumerate() {
            let col = col.map_err(NewtonFailure::DomainExit)?;
            for (i, v) in col.into_iter().enumerate() {
                jac[(i, j)] = v;
            }
        }
        let mut rhs = DVector::zeros(dim);
        for i in 0..n_fields {
            rhs[i] = -current.reduced[i];
        }
        if let SolveConstraint::Arclength { tangent, .. } = constraint {
            // the normalization row is linear: exact gradient, no FD
            for j in 0..n_fields {
                jac[(n_fields, j)] = u.weight(j) * tangent.coeffs[j];
            }
            jac[(n_fields, n_fields)] = tangent.c;
            rhs[n_fields] = -current.constraint;
        }

        let delta = jac
            .lu()
            .solve(&rhs)
            .ok_or(NewtonFailure::SingularJacobian)?;
        if !delta.iter().all(|v| v.is_finite()) {
            return Err(NewtonFailure::SingularJacobian);
        }

        let apply = |u: &StateVector, t: f64| -> StateVector {
            let mut next = u.clone();
            for j in 0..n_fields {
                next.coeffs[j] += t * delta[j];
            }
            if with_speed {
                next.c += t * delta[n_fields];
            }
            next
        };

        let mut chosen: Option<(StateVector, EvalOutput)> = None;
        let mut fallback: Option<(StateVector, EvalOutput)> = None;
        let mut last_domain_error = None;
        let halvings = if settings.linesearch { 8 } else { 0 };
        let mut t = 1.0;
        for _ in 0..=halvings {
            let candidate = apply(&u, t);
            match evaluate(&candidate, constraint, params) {
                Ok(out) => {
                    if !settings.linesearch || merit(&out) < merit(&current) {
                        chosen = Some((candidate, out));
                        break;
                    }
                    // remember the smallest evaluable step as a last resort
                    fallback = Some((candidate, out));
                }
                Err(e) => last_domain_error = Some(e),
            }
            t *= 0.5;
        }
        let (next_u, next_out) = match chosen.or(fallback) {
            Some(pair) => pair,
            None => {
                // every trial left the admissible set
                return Err(NewtonFailure::DomainExit(
                    last_domain_error.unwrap_or(WaveError::NotGraphlike(0.0)),
                ));
            }
        };
        u = next_u;
        current = next_out;

        if current.norm_h1 <= settings.tol_residual && current.constraint.abs() <= tol_constraint {
            return Ok(NewtonSolution {
                state: u.to_state(),
                residual_norm: current.norm_h1,
                iterations: iter,
            });
        }
    }

    Err(NewtonFailure::MaxIterations {
        last_norm: current.norm_h1,
    })
}

/// One accepted continuation point with its diagnostics.
#[derive(Clone, Debug)]
pub struct BranchRecord {
    pub state: WaveState,
    pub residual_norm: f64,
    /// H1 norm of θ.
    pub amplitude: f64,
    /// Interface length per period, L = M / mean(cos θ).
    pub length: f64,
    /// Sup norm of the curvature θ_α/σ.
    pub max_curvature: f64,
    /// H1 norm of the tangential velocity jump 2π(γ̄ + γ₁)/L.
    pub jump_h1: f64,
    /// Chord-arc infimum of the interface.
    pub chord_arc: f64,
    pub mean_sin_theta: f64,
    pub step_index: usize,
    pub arclength_param: f64,
}

impl BranchRecord {
    pub fn measure(
        state: WaveState,
        params: &PhysicalParameters,
        residual_norm: f64,
        step_index: usize,
        arclength_param: f64,
    ) -> Result<Self, WaveError> {
        let geometry = CurveGeometry::from_tangent_angle(&state.theta, params.period)?;
        let amplitude = state.amplitude();
        let max_curvature = geometry.curvature(&state.theta).sup_norm();
        let jump_h1 = geometry
            .tangential_velocity_jump(&state.gamma1, params.gamma_bar)
            .norm_h1();
        let chord_arc = geometry.chord_arc_infimum();
        let mean_sin_theta = state.theta.sin().mean().abs();
        Ok(Self {
            state,
            residual_norm,
            amplitude,
            length: geometry.length(),
            max_curvature,
            jump_h1,
            chord_arc,
            mean_sin_theta,
            step_index,
            arclength_param,
        })
    }

    /// σ of the recorded interface, recovered from the length.
    pub fn sigma(&self) -> f64 {
        self.length / (2.0 * PI)
    }
}

/// One boolean per branch-termination outcome.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OutcomeFlags {
    /// (a) interface length per period above threshold.
    pub length_blowup: bool,
    /// (b) curvature above threshold.
    pub curvature_blowup: bool,
    /// (c) tangential velocity jump (H1) above threshold.
    pub jump_blowup: bool,
    /// (d) chord-arc infimum below threshold: near self-intersection.
    pub self_intersection: bool,
    /// (e) returned to a flat configuration at a different speed, or came
    /// close to another branch.
    pub loop_or_branch_merge: bool,
    /// (f) speed magnitude above threshold.
    pub speed_blowup: bool,
}

impl OutcomeFlags {
    pub fn any(&self) -> bool {
        self.length_blowup
            || self.curvature_blowup
            || self.jump_blowup
            || self.self_intersection
            || self.loop_or_branch_merge
            || self.speed_blowup
    }

    pub fn none_triggered(&self) -> bool {
        !self.any()
    }

    /// Compact "a,c,e"-style rendering of the set flags.
    pub fn compact(&self) -> String {
        let mut parts = Vec::new();
        for (set, label) in [
            (self.length_blowup, "a"),
            (self.curvature_blowup, "b"),
            (self.jump_blowup, "c"),
            (self.self_intersection, "d"),
            (self.loop_or_branch_merge, "e"),
            (self.speed_blowup, "f"),
        ] {
            if set {
                parts.push(label);
            }
        }
        parts.join(",")
    }
}

impl fmt::Display for OutcomeFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.none_triggered() {
            write!(f, "none")
        } else {
            write!(f, "{}", self.compact())
        }
    }
}

/// Thresholds that turn the asymptotic outcomes into finite tests.
#[derive(Clone, Copy, Debug)]
pub struct OutcomeThresholds {
    pub length_max: f64,
    pub curvature_max: f64,
    pub jump_max: f64,
    /// Chord-arc floor, relative to σ.
    pub chord_arc_rel: f64,
    pub amplitude_min: f64,
    pub speed_start: f64,
    pub speed_tol: f64,
    pub speed_max: f64,
    /// Distance below which two branches are declared merged.
    pub merge_distance: f64,
    /// The speed-blowup flag is terminal only for equal densities with zero
    /// mean sheet strength; otherwise the crossing is downgraded to a warning.
    pub speed_flag_terminal: bool,
}

impl OutcomeThresholds {
    pub fn for_problem(params: &PhysicalParameters, speed_start: f64) -> Self {
        Self {
            length_max: 50.0 * params.period,
            curvature_max: 1e3 / params.period,
            jump_max: 1e3,
            chord_arc_rel: 1e-3,
            amplitude_min: 1e-6,
            speed_start,
            speed_tol: 1e-3,
            speed_max: 1e3,
            merge_distance: 1e-4,
            speed_flag_terminal: params.atwood == 0.0 && params.gamma_bar == 0.0,
        }
    }
}

/// Outcome flags plus human-readable warnings.
#[derive(Clone, Debug, Default)]
pub struct Classification {
    pub flags: OutcomeFlags,
    pub warnings: Vec<String>,
}

/// Applies the outcome thresholds to a record sequence.
pub fn classify_outcome(records: &[BranchRecord], thresholds: &OutcomeThresholds) -> Classification {
    assert!(!records.is_empty(), "classification needs at least one record");
    let mut flags = OutcomeFlags::default();
    let mut warnings = Vec::new();
    for rec in records {
        if rec.length > thresholds.length_max {
            flags.length_blowup = true;
        }
        if rec.max_curvature > thresholds.curvature_max {
            flags.curvature_blowup = true;
        }
        if rec.jump_h1 > thresholds.jump_max {
            flags.jump_blowup = true;
        }
        if rec.chord_arc < thresholds.chord_arc_rel * rec.sigma() {
            flags.self_intersection = true;
        }
        if rec.state.c.abs() > thresholds.speed_max {
            if thresholds.speed_flag_terminal {
                flags.speed_blowup = true;
            } else {
                warnings.push(format!(
                    "speed |c| = {:.3e} exceeded {:.3e}; the speed-blowup outcome is only \
                     terminal when atwood = 0 and gamma_bar = 0",
                    rec.state.c.abs(),
                    thresholds.speed_max
                ));
            }
        }
    }
    let last = records.last().expect("nonempty");
    if last.amplitude < thresholds.amplitude_min
        && (last.state.c - thresholds.speed_start).abs() > thresholds.speed_tol
    {
        flags.loop_or_branch_merge = true;
    }
    Classification { flags, warnings }
}

/// Maps a domain-boundary event raised by the residual to the outcome flag it
/// evidences: loss of the graphlike condition means the length per period is
/// diverging (a); a chord-arc failure means self-intersection (d).
pub fn flag_for_boundary_event(event: &WaveError) -> Option<OutcomeFlags> {
    let mut flags = OutcomeFlags::default();
    match event {
        WaveError::NotGraphlike(_) => flags.length_blowup = true,
        WaveError::SelfIntersecting(_) | WaveError::InnerCurveSelfIntersecting(_) => {
            flags.self_intersection = true
        }
        _ => return None,
    }
    Some(flags)
}

/// True when any state of one branch comes within `tol` (continuation
/// metric) of a state of the other; used for cross-branch merge detection.
pub fn branches_merge(a: &[BranchRecord], b: &[BranchRecord], tol: f64) -> bool {
    let av: Vec<StateVector> = a.iter().map(|r| StateVector::from_state(&r.state)).collect();
    let bv: Vec<StateVector> = b.iter().map(|r| StateVector::from_state(&r.state)).collect();
    for ra in &av {
        for rb in &bv {
            if ra.sub(rb).weighted_norm() < tol {
                return true;
            }
        }
    }
    false
}

/// Controls for one branch trace.
#[derive(Clone, Copy, Debug)]
pub struct TraceControls {
    pub max_steps: usize,
    pub ds_init: f64,
    pub ds_min: f64,
    pub ds_max: f64,
    pub newton: NewtonSettings,
    /// Overrides the default thresholds when set.
    pub thresholds: Option<OutcomeThresholds>,
}

impl Default for TraceControls {
    fn default() -> Self {
        Self {
            max_steps: 50,
            ds_init: 1e-3,
            ds_min: 1e-5,
            ds_max: 1e-1,
            newton: NewtonSettings::default(),
            thresholds: None,
        }
    }
}

/// Why a branch trace stopped.
#[derive(Clone, Debug, PartialEq)]
pub enum TerminationReason {
    OutcomeTriggered,
    MaxSteps,
    /// Step size fell below ds_min without a boundary event.
    StepUnderflow(NewtonFailure),
    /// Persistent domain-boundary event, already mapped to a flag.
    DomainBoundary(WaveError),
    /// The speed came too close to zero for the formulation to make sense.
    SpeedNearZero,
    /// The bifurcation point carries no crossing-number certificate.
    NotCertified,
    /// The first point off the trivial branch never converged.
    SeedFailed,
}

/// A traced branch: accepted records, the outcome classification and the
/// reason tracing stopped.
#[derive(Clone, Debug)]
pub struct TraceResult {
    pub records: Vec<BranchRecord>,
    pub classification: Classification,
    pub termination: TerminationReason,
}

/// Pseudo-arclength continuation from a bifurcation point of the trivial
/// branch. The first corrector uses the eigenfunction direction; later
/// predictors are secants of the last two accepted points. The step halves on
/// failure and grows by 1.3 after three straight successes, within
/// [ds_min, ds_max].
pub fn trace_branch(
    point: &BifurcationPoint,
    params: &PhysicalParameters,
    controls: &TraceControls,
) -> TraceResult {
    let mut classification = Classification::default();
    if !point.in_k {
        classification
            .warnings
            .push(format!("k = {} has no crossing-number certificate", point.k));
        return TraceResult {
            records: Vec::new(),
            classification,
            termination: TerminationReason::NotCertified,
        };
    }
    if point.speed == 0.0 {
        classification
            .warnings
            .push("bifurcation speed is zero; seeding is excluded".into());
        return TraceResult {
            records: Vec::new(),
            classification,
            termination: TerminationReason::SeedFailed,
        };
    }
    let grid = point.eigen_theta.grid();
    let thresholds = controls
        .thresholds
        .unwrap_or_else(|| OutcomeThresholds::for_problem(params, point.speed));

    let trivial = StateVector::flat(grid.n(), point.speed);
    let seed_direction = {
        let seed_state = WaveState::new(
            point.eigen_theta.clone(),
            point.eigen_gamma.clone(),
            point.speed,
        );
        let mut v = StateVector::from_state(&seed_state);
        v.c = 0.0; // tangent to a symmetric pitchfork has no speed component
        v.normalized()
    };

    let mut records: Vec<BranchRecord> = Vec::new();
    let mut base = trivial;
    let mut tangent = seed_direction;
    let mut ds = controls.ds_init.clamp(controls.ds_min, controls.ds_max);
    let mut arclength = 0.0;
    let mut streak = 0usize;
    let mut termination = TerminationReason::MaxSteps;

    while records.len() < controls.max_steps {
        let predictor = base.add_scaled(&tangent, ds);
        let constraint = SolveConstraint::Arclength {
            base: base.clone(),
            tangent: tangent.clone(),
            ds,
        };
        match newton_solve(&predictor.to_state(), &constraint, params, &controls.newton) {
            Ok(solution) => {
                let accepted = StateVector::from_state(&solution.state);
                if !records.is_empty() && solution.state.amplitude() <= 10.0 * f64::EPSILON {
                    classification
                        .warnings
                        .push("corrector collapsed onto the trivial branch".into());
                    termination = TerminationReason::SeedFailed;
                    break;
                }
                arclength += ds;
                let record = match BranchRecord::measure(
                    solution.state,
                    params,
                    solution.residual_norm,
                    records.len(),
                    arclength,
                ) {
                    Ok(r) => r,
                    Err(event) => {
                        if let Some(f) = flag_for_boundary_event(&event) {
                            merge_flags(&mut classification.flags, f);
                        }
                        termination = TerminationReason::DomainBoundary(event);
                        break;
                    }
                };
                tangent = accepted.sub(&base).normalized();
                base = accepted;
                records.push(record);
                streak += 1;
                if streak >= 3 {
                    ds = (ds * 1.3).min(controls.ds_max);
                    streak = 0;
                }

                let step_class = classify_outcome(&records, &thresholds);
                classification.warnings.extend(step_class.warnings);
                merge_flags(&mut classification.flags, step_class.flags);
                if classification.flags.any() {
                    termination = TerminationReason::OutcomeTriggered;
                    break;
                }
                if records.last().map(|r| r.state.c.abs()).unwrap_or(1.0) < 1e-6 {
                    classification.warnings.push(
                        "branch speed approached zero, where the traveling-wave reduction \
                         degenerates; trace stopped"
                            .into(),
                    );
                    termination = TerminationReason::SpeedNearZero;
                    break;
                }
            }
            Err(failure) => {
                streak = 0;
                ds *= 0.5;
                if ds >= controls.ds_min {
                    continue;
                }
                match failure {
                    NewtonFailure::DomainExit(event) => {
                        if let Some(f) = flag_for_boundary_event(&event) {
                            merge_flags(&mut classification.flags, f);
                        }
                        termination = TerminationReason::DomainBoundary(event);
                    }
                    other => {
                        termination = if records.is_empty() {
                            TerminationReason::SeedFailed
                        } else {
                            TerminationReason::StepUnderflow(other)
                        };
                    }
                }
                break;
            }
        }
    }

    if !records.is_empty() {
        let final_class = classify_outcome(&records, &thresholds);
        merge_flags(&mut classification.flags, final_class.flags);
    }
    TraceResult {
        records,
        classification,
        termination,
    }
}

fn merge_flags(into: &mut OutcomeFlags, from: OutcomeFlags) {
    into.length_blowup |= from.length_blowup;
    into.curvature_blowup |= from.curvature_blowup;
    into.jump_blowup |= from.jump_blowup;
    into.self_intersection |= from.self_intersection;
    into.loop_or_branch_merge |= from.loop_or_branch_merge;
    into.speed_blowup |= from.speed_blowup;
}

/// Re-converges a state on a finer grid, keeping the position along the
/// branch by a zero-step arclength constraint around the resampled point.
pub fn reconverge_on_grid(
    state: &WaveState,
    tangent: &StateVector,
    params: &PhysicalParameters,
    grid: Grid,
    settings: &NewtonSettings,
) -> Result<NewtonSolution, NewtonFailure> {
    let resampled = state.resample(grid);
    let base = StateVector::from_state(&resampled);
    let constraint = SolveConstraint::Arclength {
        base,
        tangent: tangent.resample(grid.n()).normalized(),
        ds: 0.0,
    };
    newton_solve(&resampled, &constraint, params, settings)
}
