//! The fully discrete time loop: force, Picard solve, postprocessing, marker
//! update and diagnostics, one step at a time.

use std::fmt;

use crate::app::config::ExperimentConfig;
use crate::app::forcing::{rotating_body_force, rotating_field};
use crate::assembly::load_vector;
use crate::diagnostics::{
    area_change_pct, broken_seminorm_squared, cfl_geometry, eta_from, polygon_area, velocity_nodal_values, DiagnosticsRecord,
    EnergyTracker,
};
use crate::error::{Result, SdgError};
use crate::ib::{advance_markers, assemble_force, init_curve, CurveKind, ImmersedBoundary};
use crate::mesh::Point;
use crate::postprocess::PostprocessedVelocity;
use crate::solver::{picard_solve, Discretization, TimeGrid};

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Completed,
    /// Non-finite or unsolvable state during `step`.
    BlownUp { step: usize, reason: String },
    MarkerEscaped { step: usize, index: usize },
    /// Any other error, with its message.
    Failed { step: usize, message: String },
}

impl RunStatus {
    /// Label written to output files.
    pub fn label(&self, picard_warnings: usize) -> &'static str {
        match self {
            RunStatus::Completed if picard_warnings > 0 => "picard_warnings",
            RunStatus::Completed => "completed",
            RunStatus::BlownUp { .. } => "blown_up",
            RunStatus::MarkerEscaped { .. } => "marker_escaped",
            RunStatus::Failed { .. } => "failed",
        }
    }
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunStatus::Completed => write!(f, "completed"),
            RunStatus::BlownUp { step, reason } => write!(f, "blown up at step {step}: {reason}"),
            RunStatus::MarkerEscaped { step, index } => write!(f, "marker {index} escaped at step {step}"),
            RunStatus::Failed { step, message } => write!(f, "failed at step {step}: {message}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkerSnapshot {
    pub step: usize,
    pub s: Vec<f64>,
    pub x: Vec<Point>,
}

/// Largest structural defects seen over a run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InvariantMonitor {
    /// `‖C u_h‖ / (max|C| ‖u_h‖)`.
    pub constraint_residual: f64,
    /// `|Σ_i f_i|` of the marker forces.
    pub total_force: f64,
    /// Relative energy-identity defect of the Picard iterates.
    pub energy_defect: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    /// Step 0 followed by one row per completed step.
    pub records: Vec<DiagnosticsRecord>,
    pub snapshots: Vec<MarkerSnapshot>,
    pub status: RunStatus,
    /// Steps whose Picard loop hit the iteration cap.
    pub picard_warnings: usize,
    pub invariants: InvariantMonitor,
}

impl RunRecord {
    pub fn initial_energy(&self) -> f64 {
        self.records[0].energy
    }

    /// `max_n Eⁿ / E⁰`; infinite once a row is non-finite.
    pub fn max_energy_ratio(&self) -> f64 {
        let e0 = self.initial_energy();
        self.records
            .iter()
            .map(|r| if r.energy.is_finite() { r.energy / e0 } else { f64::INFINITY })
            .fold(0.0, f64::max)
    }

    pub fn last(&self) -> &DiagnosticsRecord {
        self.records.last().expect("step 0 is always recorded")
    }
}

/// A run that can be advanced one step at a time.
#[derive(Debug)]
pub struct Simulation {
    pub config: ExperimentConfig,
    pub disc: Discretization,
    pub grid: TimeGrid,
    ib: ImmersedBoundary,
    u: Vec<f64>,
    body: Vec<f64>,
    velocity: PostprocessedVelocity,
    area0: f64,
    tracker: EnergyTracker,
    step: usize,
    records: Vec<DiagnosticsRecord>,
    snapshots: Vec<MarkerSnapshot>,
    status: Option<RunStatus>,
    picard_warnings: usize,
    invariants: InvariantMonitor,
}

fn constraint_residual(disc: &Discretization, u: &[f64]) -> f64 {
    let cu = disc.core.c.mul_vec(u);
    let num = cu.iter().map(|v| v * v).sum::<f64>().sqrt();
    let den = disc.core.c.max_abs() * u.iter().map(|v| v * v).sum::<f64>().sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

impl Simulation {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let disc = Discretization::unit_square(config.n)?;
        let grid = TimeGrid::new(config.t_final, config.steps)?;
        let ib = init_curve(config.experiment, &config.curve, config.m, config.kappa)?;
        let n2 = 2 * disc.n_velocity();
        let (u, body) = if config.experiment == CurveKind::EllipseRotating {
            let (rho, mu) = (config.rho, config.mu);
            let body = load_vector(&disc.mesh, &disc.spaces, |x| rotating_body_force(x, rho, mu));
            let u0 = disc.project_divergence_free(&load_vector(&disc.mesh, &disc.spaces, rotating_field))?;
            (u0, body)
        } else {
            (vec![0.0; n2], vec![0.0; n2])
        };
        let velocity = disc.postprocess(&u)?;
        let tracker = EnergyTracker::new(config.rho, grid.dt, config.mu);
        let area0 = polygon_area(&ib.x);
        let geom = cfl_geometry(&ib, &disc.mesh)?;
        let record = DiagnosticsRecord {
            step: 0,
            time: 0.0,
            area: area0,
            area_change_pct: 0.0,
            energy: tracker.energy(disc.l2_norm_squared(&u), &ib),
            eta: eta_from(ib.kappa, grid.dt, &geom),
            picard_iters: 0,
            picard_converged: true,
            h_s: geom.h_s,
            h_x: geom.h_x,
            max_segment: geom.max_segment,
            blown_up: false,
        };
        let snapshots = vec![MarkerSnapshot { step: 0, s: ib.s.clone(), x: ib.x.clone() }];
        Ok(Self {
            config,
            disc,
            grid,
            ib,
            u,
            body,
            velocity,
            area0,
            tracker,
            step: 0,
            records: vec![record],
            snapshots,
            status: None,
            picard_warnings: 0,
            invariants: InvariantMonitor::default(),
        })
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn time(&self) -> f64 {
        self.grid.time(self.step)
    }

    pub fn markers(&self) -> &ImmersedBoundary {
        &self.ib
    }

    /// Stacked velocity coefficients `(u₁, u₂)`.
    pub fn velocity(&self) -> &[f64] {
        &self.u
    }

    pub fn postprocessed_velocity(&self) -> &PostprocessedVelocity {
        &self.velocity
    }

    pub fn records(&self) -> &[DiagnosticsRecord] {
        &self.records
    }

    pub fn is_finished(&self) -> bool {
        self.status.is_some()
    }

    pub fn status(&self) -> Option<&RunStatus> {
        self.status.as_ref()
    }

    pub fn invariants(&self) -> InvariantMonitor {
        self.invariants
    }

    /// Advances one step. Returns `false` once the run has terminated.
    pub fn step(&mut self) -> bool {
        if self.status.is_some() {
            return false;
        }
        let n = self.step + 1;
        match self.try_step(n) {
            Ok(()) => {
                self.step = n;
                if self.status.is_some() {
                    return false;
                }
                if n % self.config.snapshot_stride == 0 || n == self.grid.steps {
                    self.snapshots.push(MarkerSnapshot { step: n, s: self.ib.s.clone(), x: self.ib.x.clone() });
                }
                if n == self.grid.steps {
                    self.status = Some(RunStatus::Completed);
                }
            }
            Err(e) => {
                self.status = Some(match e {
                    SdgError::MarkerEscaped { index, .. } => RunStatus::MarkerEscaped { step: n, index },
                    SdgError::SingularSystem(_) | SdgError::SolveDiverged { .. } | SdgError::PostprocessFailure(_) => {
                        RunStatus::BlownUp { step: n, reason: e.to_string() }
                    }
                    other => RunStatus::Failed { step: n, message: other.to_string() },
                });
            }
        }
        self.status.is_none()
    }

    fn blow_up(&mut self, n: usize, iters: usize, reason: &str) {
        let prev = self.records.last().expect("step 0 is always recorded").clone();
        self.records.push(DiagnosticsRecord {
            step: n,
            time: self.grid.time(n),
            energy: f64::NAN,
            picard_iters: iters,
            picard_converged: false,
            blown_up: true,
            ..prev
        });
        self.status = Some(RunStatus::BlownUp { step: n, reason: reason.to_string() });
    }

    fn try_step(&mut self, n: usize) -> Result<()> {
        let cfg = &self.config;
        let dt = self.grid.dt;
        let disc = &self.disc;
        let geom = cfl_geometry(&self.ib, &disc.mesh)?;
        let force = assemble_force(&disc.mesh, &disc.spaces, &self.ib)?;
        self.invariants.total_force = self.invariants.total_force.max(force.total_force().norm());
        let alpha = cfg.rho / dt;
        let rhs: Vec<f64> = disc
            .mass_times(&self.u)
            .iter()
            .zip(&force.values)
            .zip(&self.body)
            .map(|((m, f), b)| alpha * m + f + b)
            .collect();
        let outcome = picard_solve(disc, &self.u, &rhs, &cfg.picard, dt, cfg.rho, cfg.mu)?;
        if outcome.blown_up {
            self.blow_up(n, outcome.iterations, "non-finite Picard iterate");
            return Ok(());
        }
        if !outcome.converged {
            self.picard_warnings += 1;
        }
        self.invariants.energy_defect = self.invariants.energy_defect.max(outcome.energy_defect);
        let u = outcome.state.velocity();
        self.invariants.constraint_residual = self.invariants.constraint_residual.max(constraint_residual(disc, &u));
        let velocity = disc.postprocess(&u)?;
        let ib = advance_markers(&disc.mesh, &self.ib, &velocity, dt)?;
        let seminorm = broken_seminorm_squared(&disc.mesh, &velocity_nodal_values(&disc.spaces.velocity, &u));
        let energy = self.tracker.record(disc.l2_norm_squared(&u), seminorm, &ib);
        let area = polygon_area(&ib.x);
        let record = DiagnosticsRecord {
            step: n,
            time: self.grid.time(n),
            area,
            area_change_pct: area_change_pct(self.area0, area),
            energy,
            eta: eta_from(self.ib.kappa, dt, &geom),
            picard_iters: outcome.iterations,
            picard_converged: outcome.converged,
            h_s: geom.h_s,
            h_x: geom.h_x,
            max_segment: geom.max_segment,
            blown_up: !energy.is_finite(),
        };
        let blown = record.blown_up;
        self.records.push(record);
        self.u = u;
        self.velocity = velocity;
        self.ib = ib;
        if blown {
            self.status = Some(RunStatus::BlownUp { step: n, reason: "non-finite energy".into() });
        }
        Ok(())
    }

    /// Steps until termination.
    pub fn run_to_end(&mut self) {
        while self.step() {}
    }

    /// Copy of everything recorded so far.
    pub fn record(&self) -> RunRecord {
        RunRecord {
            config: self.config.clone(),
            records: self.records.clone(),
            snapshots: self.snapshots.clone(),
            status: self.status.clone().unwrap_or(RunStatus::Failed { step: self.step, message: "run not finished".into() }),
            picard_warnings: self.picard_warnings,
            invariants: self.invariants,
        }
    }

    pub fn into_record(self) -> RunRecord {
        RunRecord {
            config: self.config,
            records: self.records,
            snapshots: self.snapshots,
            status: self.status.unwrap_or(RunStatus::Failed { step: self.step, message: "run not finished".into() }),
            picard_warnings: self.picard_warnings,
            invariants: self.invariants,
        }
    }
}

/// Runs one experiment to its final time or until it terminates early.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunRecord> {
    let mut sim = Simulation::new(config.clone())?;
    sim.run_to_end();
    Ok(sim.into_record())
}
