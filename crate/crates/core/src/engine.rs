//! Cyclic coordinate descent over the entries of the transmit matrix.

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coeffs::{EntryCoefficients, RowState};
use crate::error::{Error, Result};
use crate::metrics::{objective, objective_with, Correlator, IslrReport};
use crate::model::{mpsk_symbol, ConstraintSpec, RunConfig, WaveformSet};
use crate::solvers::{
    grid_oracle, incoming_phase, solve_continuous, solve_energy, solve_par, DiscreteSolver, PolarSolution,
};

/// Grid size used when an analytic update has to be replaced.
const FALLBACK_GRID: usize = 401;

/// Why a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// A sweep decreased the objective by at most `zeta`.
    Threshold,
    MaxSweeps,
    /// A full sweep left every entry unchanged.
    Stall,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::Threshold => "threshold",
            StopReason::MaxSweeps => "max_sweeps",
            StopReason::Stall => "stall",
        }
    }
}

/// Metrics after one full sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    /// 1-based sweep index.
    pub sweep: usize,
    pub f_o: f64,
    pub spatial_islr_db: f64,
    pub range_islr_db: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Updates where the analytic solver result was replaced by a grid search.
    pub fallbacks: usize,
    pub updates: usize,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub initial: IslrReport,
    pub history: Vec<SweepRecord>,
    pub final_waveform: WaveformSet,
    pub final_report: IslrReport,
    pub sweeps_used: usize,
    pub stop_reason: StopReason,
    pub diagnostics: Diagnostics,
}

/// Random MPSK matrix: each entry `exp(j 2 pi l / l0)` with `l` uniform in
/// `0..l0`, drawn from ChaCha8 seeded with `seed`.
pub fn init_waveform(mt: usize, n: usize, l0: usize, seed: u64) -> Result<WaveformSet> {
    if l0 < 2 {
        return Err(Error::Config(format!("initial alphabet size must be >= 2, got {l0}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    WaveformSet::from_fn(mt, n, |_, _| mpsk_symbol(rng.random_range(0..l0), l0))
}

enum Updater {
    Energy,
    Par,
    Continuous,
    Discrete(DiscreteSolver),
}

impl Updater {
    fn new(constraint: &ConstraintSpec) -> Result<Self> {
        Ok(match *constraint {
            ConstraintSpec::Energy => Updater::Energy,
            ConstraintSpec::Par { .. } => Updater::Par,
            ConstraintSpec::ContinuousPhase => Updater::Continuous,
            ConstraintSpec::DiscretePhase { alphabet } => Updater::Discrete(DiscreteSolver::new(alphabet)?),
        })
    }

    fn solve(&self, c: &EntryCoefficients) -> Result<PolarSolution> {
        let phi0 = incoming_phase(c.current);
        Ok(match self {
            Updater::Energy => solve_energy(c, phi0),
            Updater::Par => solve_par(c, phi0)?,
            Updater::Continuous => solve_continuous(c),
            Updater::Discrete(solver) => solver.solve(c),
        })
    }
}

/// New value for one entry, or `None` to keep the current one.
fn update_entry(
    updater: &Updater,
    c: &EntryCoefficients,
    constraint: &ConstraintSpec,
    fallbacks: &mut usize,
) -> Result<Option<Complex64>> {
    let before = c.current_objective();
    let limit = before + 1e-12 * (1.0 + before.abs());
    let sol = updater.solve(c)?;
    let sol = if sol.f_value.is_finite() && sol.f_value <= limit {
        sol
    } else {
        *fallbacks += 1;
        let grid = grid_oracle(c, constraint, FALLBACK_GRID, FALLBACK_GRID)?;
        if !(grid.f_value.is_finite() && grid.f_value <= limit) {
            return Ok(None);
        }
        grid
    };
    let v = sol.value();
    Ok((v != c.current).then_some(v))
}

/// Runs coordinate descent from `s0`, or from a seeded random MPSK matrix.
pub fn run(cfg: &RunConfig, s0: Option<WaveformSet>) -> Result<RunRecord> {
    let start = Instant::now();
    let (mt, n) = (cfg.mt, cfg.n);
    let scenario = &cfg.scenario;
    let mut s = match s0 {
        Some(s) => {
            if s.mt() != mt || s.n() != n {
                return Err(Error::Dimension(format!(
                    "initial waveform is {}x{}, config expects {mt}x{n}",
                    s.mt(),
                    s.n()
                )));
            }
            s
        }
        None => {
            // A discrete run must start inside its own alphabet.
            let l0 = match cfg.constraint {
                ConstraintSpec::DiscretePhase { alphabet } => alphabet,
                _ => cfg.init_alphabet,
            };
            init_waveform(mt, n, l0, cfg.seed)?
        }
    };
    s.check_feasible(&cfg.constraint)?;
    if let ConstraintSpec::DiscretePhase { alphabet } = cfg.constraint {
        s.snap_to_alphabet(alphabet);
    }

    let corr = Correlator::new(n);
    let updater = Updater::new(&cfg.constraint)?;
    let initial = objective_with(&s, scenario, cfg.eta, &corr)?;
    let mut diagnostics = Diagnostics::default();
    let mut history = Vec::new();
    let mut prev = initial.objective;
    let mut report = initial;
    let mut stop_reason = StopReason::MaxSweeps;

    for sweep in 1..=cfg.max_sweeps {
        let mut changed = false;
        for t in 0..mt {
            let mut state = RowState::new(&s, t, scenario, &corr);
            for d in 0..n {
                let c = state.coefficients(&s, d, scenario, &cfg.constraint, cfg.eta);
                diagnostics.updates += 1;
                let Some(v) = update_entry(&updater, &c, &cfg.constraint, &mut diagnostics.fallbacks)? else {
                    continue;
                };
                let checked = cfg!(debug_assertions) && diagnostics.updates % 100 == 0;
                let before = if checked { Some(objective(&s, scenario, cfg.eta)?.objective) } else { None };
                state.update(&s, d, v, scenario);
                s.set(t, d, v);
                changed = true;
                if let Some(before) = before {
                    let after = objective(&s, scenario, cfg.eta)?.objective;
                    debug_assert!(after <= before + 1e-10 * (1.0 + before.abs()), "ascent {before} -> {after}");
                }
            }
        }
        report = objective_with(&s, scenario, cfg.eta, &corr)?;
        history.push(SweepRecord {
            sweep,
            f_o: report.objective,
            spatial_islr_db: report.spatial_islr_db,
            range_islr_db: report.range_islr_db,
        });
        if !changed {
            stop_reason = StopReason::Stall;
            break;
        }
        if prev - report.objective <= cfg.zeta {
            stop_reason = StopReason::Threshold;
            break;
        }
        prev = report.objective;
    }

    diagnostics.wall_time_s = start.elapsed().as_secs_f64();
    Ok(RunRecord {
        initial,
        sweeps_used: history.len(),
        history,
        final_waveform: s,
        final_report: report,
        stop_reason,
        diagnostics,
    })
}

/// Best-of-`trials` result for one weight.
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoPoint {
    pub eta: f64,
    /// NaN when every trial failed.
    pub spatial_islr_db: f64,
    pub range_islr_db: f64,
    /// Trial index of the kept run.
    pub trial: Option<usize>,
    /// The kept run, or the first error if every trial failed.
    pub record: Result<RunRecord>,
}

/// Runs `trials` seeded runs per weight (seeds `cfg.seed + trial`) in parallel
/// and keeps the lowest objective per weight. Points are sorted by `eta`.
pub fn pareto_sweep(template: &RunConfig, etas: &[f64], trials: usize) -> Result<Vec<ParetoPoint>> {
    if trials < 1 {
        return Err(Error::Config("trials must be >= 1".into()));
    }
    if let Some(eta) = etas.iter().find(|e| !(0.0..=1.0).contains(*e)) {
        return Err(Error::Config(format!("eta out of [0,1]: {eta}")));
    }
    let mut etas = etas.to_vec();
    etas.sort_by(f64::total_cmp);

    let jobs: Vec<(usize, usize)> = (0..etas.len()).flat_map(|i| (0..trials).map(move |k| (i, k))).collect();
    let results: Vec<Result<RunRecord>> = jobs
        .par_iter()
        .map(|&(i, k)| {
            let cfg = RunConfig { eta: etas[i], seed: template.seed.wrapping_add(k as u64), ..template.clone() };
            run(&cfg, None)
        })
        .collect();

    let mut results = results.into_iter();
    Ok(etas
        .iter()
        .map(|&eta| {
            let mut best: Option<(usize, RunRecord)> = None;
            let mut first_err = None;
            for k in 0..trials {
                match results.next().expect("one result per job") {
                    Ok(rec) => {
                        let better = best.as_ref().is_none_or(|(_, b)| rec.final_report.objective < b.final_report.objective);
                        if better {
                            best = Some((k, rec));
                        }
                    }
                    Err(e) => {
                        first_err.get_or_insert(e);
                    }
                }
            }
            match best {
                Some((k, rec)) => ParetoPoint {
                    eta,
                    spatial_islr_db: rec.final_report.spatial_islr_db,
                    range_islr_db: rec.final_report.range_islr_db,
                    trial: Some(k),
                    record: Ok(rec),
                },
                None => ParetoPoint {
                    eta,
                    spatial_islr_db: f64::NAN,
                    range_islr_db: f64::NAN,
                    trial: None,
                    record: Err(first_err.expect("trials >= 1")),
                },
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::mpsk_index;

    fn small(constraint: ConstraintSpec, eta: f64) -> RunConfig {
        RunConfig::new(3, 16, constraint, eta).unwrap().with_seed(5)
    }

    #[test]
    fn init_is_deterministic_mpsk() {
        let a = init_waveform(4, 32, 8, 42).unwrap();
        let b = init_waveform(4, 32, 8, 42).unwrap();
        assert_eq!(a, b);
        assert!(a.as_slice().iter().all(|z| mpsk_index(*z, 8).is_some() && (z.norm() - 1.0).abs() < 1e-15));
        assert_ne!(a, init_waveform(4, 32, 8, 43).unwrap());
        assert!(init_waveform(2, 4, 1, 0).is_err());
    }

    #[test]
    fn huge_zeta_stops_after_one_sweep() {
        let mut cfg = small(ConstraintSpec::ContinuousPhase, 0.5);
        cfg.zeta = 1e9;
        let rec = run(&cfg, None).unwrap();
        assert_eq!(rec.history.len(), 1);
        assert_eq!(rec.stop_reason, StopReason::Threshold);
    }

    #[test]
    fn runs_are_monotone_and_feasible() {
        let constraints = [
            ConstraintSpec::Energy,
            ConstraintSpec::par_db(1.5),
            ConstraintSpec::ContinuousPhase,
            ConstraintSpec::DiscretePhase { alphabet: 4 },
        ];
        for constraint in constraints {
            for eta in [0.0, 0.5, 1.0] {
                let rec = run(&small(constraint, eta), None).unwrap();
                let mut prev = rec.initial.objective;
                for h in &rec.history {
                    assert!(h.f_o <= prev + 1e-12, "{constraint:?} eta {eta}");
                    prev = h.f_o;
                }
                rec.final_waveform.check_feasible(&constraint).unwrap();
                assert_eq!(rec.diagnostics.fallbacks, 0);
                if rec.stop_reason == StopReason::Threshold {
                    let n = rec.history.len();
                    let before = if n > 1 { rec.history[n - 2].f_o } else { rec.initial.objective };
                    assert!(before - rec.history[n - 1].f_o <= 1e-6);
                }
            }
        }
    }

    #[test]
    fn run_is_deterministic() {
        let cfg = small(ConstraintSpec::DiscretePhase { alphabet: 8 }, 0.3);
        let a = run(&cfg, None).unwrap();
        let b = run(&cfg, None).unwrap();
        assert_eq!(a.final_waveform, b.final_waveform);
        assert_eq!(a.history, b.history);
    }

    #[test]
    fn infeasible_initial_is_rejected() {
        let cfg = small(ConstraintSpec::ContinuousPhase, 0.5);
        let s = WaveformSet::from_fn(3, 16, |_, _| Complex64::new(0.5, 0.0)).unwrap();
        assert!(matches!(run(&cfg, Some(s)), Err(Error::InfeasibleInitial(_))));
        let s = WaveformSet::from_fn(2, 16, |_, _| Complex64::new(1.0, 0.0)).unwrap();
        assert!(matches!(run(&cfg, Some(s)), Err(Error::Dimension(_))));
    }

    #[test]
    fn converged_waveform_stalls() {
        let mut cfg = small(ConstraintSpec::DiscretePhase { alphabet: 2 }, 0.0);
        cfg.zeta = 1e-300;
        let rec = run(&cfg, None).unwrap();
        assert_eq!(rec.stop_reason, StopReason::Stall);
    }

    #[test]
    fn pareto_points_sorted_and_selected() {
        let cfg = small(ConstraintSpec::DiscretePhase { alphabet: 4 }, 0.0);
        let points = pareto_sweep(&cfg, &[1.0, 0.0], 2).unwrap();
        assert_eq!(points.len(), 2);
        assert_eq!(points[0].eta, 0.0);
        for p in &points {
            let kept = p.record.as_ref().unwrap();
            for k in 0..2 {
                let other = run(&RunConfig { eta: p.eta, seed: cfg.seed + k, ..cfg.clone() }, None).unwrap();
                assert!(kept.final_report.objective <= other.final_report.objective);
            }
        }
        assert!(pareto_sweep(&cfg, &[1.5], 1).is_err());
        assert!(pareto_sweep(&cfg, &[0.5], 0).is_err());
    }
}
