//! The four solver validation experiments: generate a matrix, quantize it,
//! program it through the instruction set, solve, read out, and compare
//! against the floating-point answer.
//!
//! Error metric: elementwise relative error over reference components whose
//! magnitude is at least 1% of the largest reference component.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use super::compile::{input_vscale, solve_gain, solve_readout_scale, MvmPlan};
use super::config::{Experiment, ExperimentConfig, MatrixSource};
use super::generate::{gram, regression, uniform_vector, wishart};
use super::instance_seed;
use super::matrix_io::read_matrix;
use crate::amc::{TopologyConfig, TopologyKind};
use crate::error::{Error, Result};
use crate::mapping::{
    full_scale, quantize_matrix, reconstruct_effective_matrix, MappedMatrix, QuantizationScheme,
};
use crate::system::digital::power_iteration;
use crate::system::isa::{Instruction, Location, Wiring, WriteMode};
use crate::system::{run_program, Latched, MachineState, Value};

/// Components below this fraction of the largest reference magnitude are
/// left out of error statistics.
pub const ERROR_FLOOR: f64 = 0.01;

const INPUT_STREAM: u64 = 0x1_0000;
const POWER_ITERS: usize = 20_000;
const POWER_TOL: f64 = 1e-13;

/// Indices of components that count for error statistics.
pub fn counted_components(reference: &DVector<f64>) -> Vec<usize> {
    let floor = ERROR_FLOOR * reference.amax();
    (0..reference.len())
        .filter(|&i| reference[i].abs() >= floor && reference[i] != 0.0)
        .collect()
}

pub fn relative_errors(reference: &DVector<f64>, analog: &DVector<f64>) -> Vec<f64> {
    counted_components(reference)
        .into_iter()
        .map(|i| (analog[i] - reference[i]).abs() / reference[i].abs())
        .collect()
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// `|cos|` between two vectors.
pub fn cosine(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a.dot(b) / (a.norm() * b.norm())).abs()
}

/// Scales so the largest-magnitude component is +1.
pub fn unit_peak(v: &DVector<f64>) -> DVector<f64> {
    let peak = v
        .iter()
        .copied()
        .max_by(|a, b| a.abs().total_cmp(&b.abs()))
        .unwrap_or(1.0);
    if peak == 0.0 {
        v.clone()
    } else {
        v / peak
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub trial: usize,
    pub seed: u64,
    /// Problem-side input: `x` for MVM, `b` for INV/PINV, empty for EGV.
    pub input: DVector<f64>,
    pub reference: DVector<f64>,
    /// `None` when the analog solve failed.
    pub analog: Option<DVector<f64>>,
    /// Numerical failure reported by the solver.
    pub failure: Option<String>,
    pub saturated: usize,
    pub condition_estimate: f64,
    /// EGV only: `|cos|` between analog and reference eigenvectors.
    pub cosine: Option<f64>,
}

impl TrialOutcome {
    pub fn rel_errors(&self) -> Vec<f64> {
        self.analog
            .as_ref()
            .map(|a| relative_errors(&self.reference, a))
            .unwrap_or_default()
    }

    pub fn median_rel_error(&self) -> f64 {
        median(&self.rel_errors())
    }

    pub fn mean_rel_error(&self) -> f64 {
        mean(&self.rel_errors())
    }
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub config: ExperimentConfig,
    pub trials: Vec<TrialOutcome>,
}

impl ValidationReport {
    pub fn any_numerical_failure(&self) -> bool {
        self.trials.iter().any(|t| t.failure.is_some())
    }

    /// Median over the counted components of every successful trial.
    pub fn pooled_median(&self) -> f64 {
        let all: Vec<f64> = self
            .trials
            .iter()
            .flat_map(TrialOutcome::rel_errors)
            .collect();
        median(&all)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        s.push_str("# validation report\n");
        for line in self.config.to_text().lines() {
            let _ = writeln!(s, "# {line}");
        }
        s.push_str("trial,seed,index,numerical,analog,counted,rel_error\n");
        for t in &self.trials {
            let counted = counted_components(&t.reference);
            for i in 0..t.reference.len() {
                let r = t.reference[i];
                let (a, e) = match &t.analog {
                    Some(a) => {
                        let e = if counted.contains(&i) {
                            format!("{:?}", (a[i] - r).abs() / r.abs())
                        } else {
                            String::new()
                        };
                        (format!("{:?}", a[i]), e)
                    }
                    None => (String::new(), String::new()),
                };
                let _ = writeln!(
                    s,
                    "{},{},{i},{r:?},{a},{},{e}",
                    t.trial,
                    t.seed,
                    u8::from(counted.contains(&i))
                );
            }
        }
        for t in &self.trials {
            let status = t.failure.as_deref().unwrap_or("ok");
            let _ = write!(
                s,
                "# trial {} seed={} status={} median_rel_error={:?} mean_rel_error={:?} saturated={} condition={:?}",
                t.trial,
                t.seed,
                status,
                t.median_rel_error(),
                t.mean_rel_error(),
                t.saturated,
                t.condition_estimate
            );
            if let Some(c) = t.cosine {
                let _ = write!(s, " cosine={c:?}");
            }
            s.push('\n');
        }
        let _ = writeln!(
            s,
            "# summary pooled_median_rel_error={:?}",
            self.pooled_median()
        );
        s
    }
}

fn load_source(src: &MatrixSource, seed: u64) -> Result<(DMatrix<f64>, Option<DVector<f64>>)> {
    Ok(match src {
        MatrixSource::Wishart(n) => (wishart(*n, seed)?, None),
        MatrixSource::Gram(n) => (gram(*n, seed)?, None),
        MatrixSource::Regression(m, n) => {
            let r = regression(*m, *n, seed)?;
            (r.design, Some(r.response))
        }
        MatrixSource::File(p) => (read_matrix(p)?, None),
    })
}

fn plane_slot(k: usize) -> Location {
    Location::global(100 + k)
}

fn load_planes(state: &mut MachineState, mm: &MappedMatrix, first_slot: usize) {
    for (k, p) in mm.level_planes.iter().enumerate() {
        state.load(
            plane_slot(first_slot + k),
            Value::Matrix(p.levels.map(f64::from)),
        );
    }
}

fn wrv_pair(
    mm: &MappedMatrix,
    first_macro: usize,
    first_slot: usize,
    mode: WriteMode,
) -> Result<Vec<Instruction>> {
    if mm.scheme.n_slices != 1 {
        return Err(Error::Config(
            "bit slicing applies to MVM only; INV, PINV and EGV use 4-bit mapping".into(),
        ));
    }
    Ok((0..mm.level_planes.len())
        .map(|k| Instruction::Wrv {
            macro_id: first_macro + k,
            src: plane_slot(first_slot + k),
            mode,
            row: 0,
            col: 0,
        })
        .collect())
}

fn neg_of(mm: &MappedMatrix, pos: usize) -> Option<usize> {
    (mm.level_planes.len() == 2).then_some(pos + 1)
}

fn latched_flags(state: &MachineState, id: usize) -> (usize, f64) {
    match &state.macros[id].latch {
        Some(Latched::Single(r)) => (
            r.saturated.iter().filter(|&&s| s).count(),
            r.condition_estimate,
        ),
        _ => (0, f64::NAN),
    }
}

fn split_failure(e: Error) -> Result<String> {
    if e.is_numerical() {
        Ok(e.root().to_string())
    } else {
        Err(e)
    }
}

/// Dominant eigenvector oracle: smallest right singular vector of `A - lambda I`.
pub fn reference_eigenvector(a: &DMatrix<f64>, lambda: f64) -> DVector<f64> {
    let n = a.nrows();
    let shifted = a - DMatrix::identity(n, n) * lambda;
    let svd = shifted.svd(false, true);
    let k = svd.singular_values.imin();
    unit_peak(&svd.v_t.expect("requested").row(k).transpose())
}

/// Runs one trial of a validation experiment.
pub fn run_trial(cfg: &ExperimentConfig, trial: usize) -> Result<TrialOutcome> {
    let seed = instance_seed(cfg.seed, trial as u64);
    let (a, response) = load_source(&cfg.matrix_source(), seed)?;
    let params = cfg.effective_device();
    let mode = if cfg.noise {
        WriteMode::Verify
    } else {
        WriteMode::Ideal
    };
    let mut state = MachineState::new(params, cfg.converter, cfg.effective_write_verify(), seed)?;
    let scheme = QuantizationScheme::new(cfg.n_slices(), cfg.signed_mode, full_scale(&a))?;
    let mapped = quantize_matrix(&a, &scheme)?;
    let a_rec = reconstruct_effective_matrix(&mapped);
    let quantum = scheme.code_quantum();
    let input = Location::global(0);
    let out = Location::output(0);
    let (m, n) = a.shape();
    let kind = cfg.experiment;

    let mut outcome = TrialOutcome {
        trial,
        seed,
        input: DVector::zeros(0),
        reference: DVector::zeros(0),
        analog: None,
        failure: None,
        saturated: 0,
        condition_estimate: f64::NAN,
        cosine: None,
    };

    let program = match kind {
        Experiment::Mvm => {
            let x = uniform_vector(n, seed ^ INPUT_STREAM);
            outcome.reference = &a * &x;
            outcome.input = x.clone();
            // crossbar outputs are G^T v, so the array holds A^T
            let g = mapped.transpose();
            let vscale = input_vscale(x.amax(), &cfg.converter);
            let plan = MvmPlan::new(&g, 0, &params, vscale, &MvmPlan::exact_bounds(&g, &x))?;
            load_planes(&mut state, &g, 0);
            state.load(input, Value::Vector(x));
            let mut p = plan.setup(&g, plane_slot, mode);
            p.extend(plan.execute(input, out, Location::output(1)));
            p
        }
        Experiment::Inv => {
            if m != n {
                return Err(Error::Domain(format!(
                    "INV needs a square matrix, got {m}x{n}"
                )));
            }
            let b = uniform_vector(n, seed ^ INPUT_STREAM);
            outcome.input = b.clone();
            outcome.reference = a.clone().lu().solve(&b).ok_or(Error::SingularMatrix {
                pivot: 0.0,
                threshold: 0.0,
            })?;
            let Some(x_pred) = a_rec.clone().lu().solve(&b) else {
                outcome.failure = Some("quantized matrix is singular".into());
                return Ok(outcome);
            };
            let vscale = input_vscale(b.amax(), &cfg.converter);
            let gain = solve_gain(&x_pred, quantum, &params, vscale);
            load_planes(&mut state, &mapped, 0);
            state.load(input, Value::Vector(b));
            let mut p = wrv_pair(&mapped, 0, 0, mode)?;
            p.push(Instruction::cfg(
                0,
                &TopologyConfig::inv(gain),
                Wiring {
                    neg: neg_of(&mapped, 0),
                    ..Wiring::default()
                },
            ));
            p.push(Instruction::Exe {
                macro_id: 0,
                src: Some(input),
                vscale,
            });
            p.push(Instruction::Rdo {
                macro_id: 0,
                dst: out,
                scale: solve_readout_scale(gain, quantum, &params, vscale),
            });
            p
        }
        Experiment::Pinv => {
            let b = match response {
                Some(r) => r,
                None => uniform_vector(m, seed ^ INPUT_STREAM),
            };
            outcome.input = b.clone();
            outcome.reference = least_squares(&a, &b)?;
            let x_pred = match least_squares(&a_rec, &b) {
                Ok(x) => x,
                Err(e) => {
                    outcome.failure = Some(split_failure(e)?);
                    return Ok(outcome);
                }
            };
            let vscale = input_vscale(b.amax(), &cfg.converter);
            let gain = solve_gain(&x_pred, quantum, &params, vscale);
            let at = mapped.transpose();
            let planes = mapped.level_planes.len();
            load_planes(&mut state, &mapped, 0);
            load_planes(&mut state, &at, planes);
            state.load(input, Value::Vector(b));
            let mut p = wrv_pair(&mapped, 0, 0, mode)?;
            p.extend(wrv_pair(&at, planes, planes, mode)?);
            p.push(Instruction::cfg(
                0,
                &TopologyConfig::pinv(gain),
                Wiring {
                    neg: neg_of(&mapped, 0),
                    aux: Some(planes),
                    aux_neg: neg_of(&at, planes),
                },
            ));
            p.push(Instruction::Exe {
                macro_id: 0,
                src: Some(input),
                vscale,
            });
            p.push(Instruction::Rdo {
                macro_id: 0,
                dst: out,
                scale: solve_readout_scale(gain, quantum, &params, vscale),
            });
            p
        }
        Experiment::Egv => {
            if m != n {
                return Err(Error::Domain(format!(
                    "EGV needs a square matrix, got {m}x{n}"
                )));
            }
            let lambda_ref = power_iteration(&a, POWER_ITERS, POWER_TOL)?.lambda;
            outcome.reference = reference_eigenvector(&a, lambda_ref);
            let lambda = match cfg.lambda {
                Some(l) => l,
                None => power_iteration(&a_rec, POWER_ITERS, POWER_TOL)?.lambda,
            };
            load_planes(&mut state, &mapped, 0);
            let mut p = wrv_pair(&mapped, 0, 0, mode)?;
            p.push(Instruction::cfg(
                0,
                &TopologyConfig::egv(lambda, scheme.unit_conductance(&params)),
                Wiring {
                    neg: neg_of(&mapped, 0),
                    ..Wiring::default()
                },
            ));
            p.push(Instruction::Exe {
                macro_id: 0,
                src: None,
                vscale: 1.0,
            });
            p.push(Instruction::Rdo {
                macro_id: 0,
                dst: out,
                scale: 1.0,
            });
            p
        }
        other => {
            return Err(Error::Config(format!(
                "{} is not a validation experiment",
                other.name()
            )))
        }
    };
    let mut program = program;
    program.push(Instruction::Halt);

    if let Err(e) = run_program(&mut state, &program) {
        outcome.failure = Some(split_failure(e)?);
        return Ok(outcome);
    }
    let (saturated, cond) = latched_flags(&state, 0);
    outcome.saturated = saturated;
    outcome.condition_estimate = cond;
    let mut analog = state.get(out)?.as_vector()?.clone();
    if kind == Experiment::Egv {
        if analog.dot(&outcome.reference) < 0.0 {
            analog = -analog;
        }
        outcome.cosine = Some(cosine(&analog, &outcome.reference));
        // compare on the reference's normalization
        let peak = outcome.reference.iamax();
        if analog[peak] != 0.0 {
            analog /= analog[peak];
        }
    }
    outcome.analog = Some(analog);
    Ok(outcome)
}

/// Least-squares solution via the normal equations.
pub fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let normal = a.tr_mul(a);
    normal
        .lu()
        .solve(&a.tr_mul(b))
        .ok_or(Error::SingularMatrix {
            pivot: 0.0,
            threshold: 0.0,
        })
}

/// All trials of the configured experiment.
pub fn run_validation(cfg: &ExperimentConfig) -> Result<ValidationReport> {
    cfg.validate()?;
    if !matches!(
        cfg.experiment,
        Experiment::Mvm | Experiment::Inv | Experiment::Pinv | Experiment::Egv
    ) {
        return Err(Error::Config(format!(
            "{} is not a validation experiment",
            cfg.experiment.name()
        )));
    }
    let trials = (0..cfg.trials)
        .map(|t| run_trial(cfg, t))
        .collect::<Result<_>>()?;
    Ok(ValidationReport {
        config: cfg.clone(),
        trials,
    })
}

/// A complete MVM run through the instruction set: program the planes,
/// configure, execute and read out into `o:0`. Returns the final machine
/// and the program it ran.
pub fn program_demo(cfg: &ExperimentConfig) -> Result<(MachineState, Vec<Instruction>)> {
    cfg.validate()?;
    let (a, _) = load_source(&cfg.matrix_source(), cfg.seed)?;
    let params = cfg.effective_device();
    let mode = if cfg.noise {
        WriteMode::Verify
    } else {
        WriteMode::Ideal
    };
    let mut state = MachineState::new(
        params,
        cfg.converter,
        cfg.effective_write_verify(),
        cfg.seed,
    )?;
    let scheme = QuantizationScheme::new(cfg.n_slices(), cfg.signed_mode, full_scale(&a))?;
    let g = quantize_matrix(&a, &scheme)?.transpose();
    let x = uniform_vector(a.ncols(), cfg.seed ^ INPUT_STREAM);
    let plan = MvmPlan::new(
        &g,
        0,
        &params,
        input_vscale(x.amax(), &cfg.converter),
        &MvmPlan::exact_bounds(&g, &x),
    )?;
    load_planes(&mut state, &g, 0);
    state.load(Location::global(0), Value::Vector(x));
    let mut program = plan.setup(&g, plane_slot, mode);
    program.extend(plan.execute(
        Location::global(0),
        Location::output(0),
        Location::output(1),
    ));
    program.push(Instruction::Halt);
    run_program(&mut state, &program)?;
    Ok((state, program))
}

/// Topology the experiment configures.
pub fn topology_of(e: Experiment) -> Option<TopologyKind> {
    match e {
        Experiment::Mvm => Some(TopologyKind::Mvm),
        Experiment::Inv => Some(TopologyKind::Inv),
        Experiment::Pinv => Some(TopologyKind::Pinv),
        Experiment::Egv => Some(TopologyKind::Egv),
        _ => None,
    }
}
