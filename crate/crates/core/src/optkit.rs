//! Multi-start box-constrained maximization.
//!
//! Each start runs projected gradient ascent with finite-difference
//! gradients and Armijo backtracking, then a coordinate pattern search.
//! Work happens in the unit cube; starts are seeded from `(seed, index)` so
//! results do not depend on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gradient {
    Forward,
    Central,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptSettings {
    pub starts: usize,
    pub max_iters: usize,
    pub gradient: Gradient,
    /// Finite-difference step in unit-cube coordinates.
    pub fd_step: f64,
    /// Smallest pattern-search step in unit-cube coordinates.
    pub step_tol: f64,
    pub seed: u64,
    pub parallel: bool,
}

impl Default for OptSettings {
    fn default() -> Self {
        Self {
            starts: 1000,
            max_iters: 200,
            gradient: Gradient::Forward,
            fd_step: 1e-6,
            step_tol: 1e-10,
            seed: 0,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptDiagnostics {
    pub starts: usize,
    /// Starts dropped because the objective went non-finite.
    pub discarded: usize,
    /// Starts whose local search finished before the iteration cap.
    pub converged: usize,
    /// Largest local optima, best first (at most ten).
    pub top_values: Vec<f64>,
    /// Gap between the best and the tenth-best local optimum.
    pub spread: f64,
    pub evaluations: usize,
    /// Best value after each start, in start order.
    #[serde(skip)]
    pub best_so_far: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub diagnostics: OptDiagnostics,
}

struct LocalResult {
    u: Vec<f64>,
    value: f64,
    converged: bool,
    evaluations: usize,
}

/// Unit-cube view of a box objective.
struct Scaled<'a, F> {
    f: &'a F,
    lower: &'a [f64],
    width: Vec<f64>,
}

impl<F: Fn(&[f64]) -> f64> Scaled<'_, F> {
    fn to_x(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(self.lower)
            .zip(&self.width)
            .map(|((&u, &l), &w)| l + u * w)
            .collect()
    }

    fn eval(&self, u: &[f64], evals: &mut usize) -> f64 {
        *evals += 1;
        (self.f)(&self.to_x(u))
    }
}

fn check_box(lower: &[f64], upper: &[f64]) -> Result<()> {
    if lower.len() != upper.len() {
        return Err(Error::Dimension(format!(
            "box bounds have lengths {} and {}",
            lower.len(),
            upper.len()
        )));
    }
    for (i, (l, u)) in lower.iter().zip(upper).enumerate() {
        if !(l.is_finite() && u.is_finite() && l <= u) {
            return Err(Error::Validation(format!(
                "invalid bounds [{l}, {u}] for coordinate {i}"
            )));
        }
    }
    Ok(())
}

fn gradient<F: Fn(&[f64]) -> f64>(
    s: &Scaled<'_, F>,
    u: &[f64],
    fu: f64,
    settings: &OptSettings,
    evals: &mut usize,
) -> Vec<f64> {
    let h = settings.fd_step;
    let mut probe = u.to_vec();
    let mut g = vec![0.0; u.len()];
    for i in 0..u.len() {
        if s.width[i] == 0.0 {
            continue;
        }
        let ui = u[i];
        g[i] = match settings.gradient {
            Gradient::Forward => {
                let (step, sign) = if ui + h <= 1.0 { (h, 1.0) } else { (-h, -1.0) };
                probe[i] = ui + step;
                let fp = s.eval(&probe, evals);
                sign * (fp - fu) / h
            }
            Gradient::Central => {
                let hi = (ui + h).min(1.0);
                let lo = (ui - h).max(0.0);
                probe[i] = hi;
                let fp = s.eval(&probe, evals);
                probe[i] = lo;
                let fm = s.eval(&probe, evals);
                (fp - fm) / (hi - lo)
            }
        };
        probe[i] = ui;
    }
    g
}

/// Finite-difference gradient of `f` at `x` with step `h`.
pub fn finite_difference_gradient<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], h: f64, kind: Gradient) -> Vec<f64> {
    let fx = f(x);
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let xi = x[i];
            let d = match kind {
                Gradient::Forward => {
                    probe[i] = xi + h;
                    (f(&probe) - fx) / h
                }
                Gradient::Central => {
                    probe[i] = xi + h;
                    let fp = f(&probe);
                    probe[i] = xi - h;
                    (fp - f(&probe)) / (2.0 * h)
                }
            };
            probe[i] = xi;
            d
        })
        .collect()
}

fn project(u: &mut [f64]) {
    for v in u {
        *v = v.clamp(0.0, 1.0);
    }
}

fn local_ascent<F: Fn(&[f64]) -> f64>(s: &Scaled<'_, F>, start: Vec<f64>, settings: &OptSettings) -> LocalResult {
    let mut evals = 0;
    let mut u = start;
    let mut fu = s.eval(&u, &mut evals);
    if !fu.is_finite() {
        return LocalResult {
            u,
            value: fu,
            converged: false,
            evaluations: evals,
        };
    }
    let mut t = 0.1;
    let mut converged = false;
    for _ in 0..settings.max_iters {
        let g = gradient(s, &u, fu, settings, &mut evals);
        // Projected gradient: drop components pushing out of the cube.
        let pg: Vec<f64> = g
            .iter()
            .zip(&u)
            .map(|(&gi, &ui)| {
                if (ui <= 0.0 && gi < 0.0) || (ui >= 1.0 && gi > 0.0) {
                    0.0
                } else {
                    gi
                }
            })
            .collect();
        let norm = pg.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm.is_nan() || norm <= 1e-14 {
            converged = true;
            break;
        }
        let mut accepted = false;
        for _ in 0..40 {
            let mut trial: Vec<f64> = u.iter().zip(&pg).map(|(&ui, &gi)| ui + t * gi / norm).collect();
            project(&mut trial);
            let moved: f64 = trial.iter().zip(&u).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            if moved < settings.step_tol {
                break;
            }
            let ft = s.eval(&trial, &mut evals);
            let predicted: f64 = trial.iter().zip(&u).zip(&pg).map(|((a, b), gi)| (a - b) * gi).sum();
            if ft.is_finite() && ft > fu + 1e-4 * predicted.max(0.0) && ft > fu {
                u = trial;
                fu = ft;
                accepted = true;
                t = (t * 2.0).min(1.0);
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            converged = true;
            break;
        }
    }
    let (u, fu) = pattern_search(s, u, fu, settings, &mut evals);
    LocalResult {
        u,
        value: fu,
        converged,
        evaluations: evals,
    }
}

fn pattern_search<F: Fn(&[f64]) -> f64>(
    s: &Scaled<'_, F>,
    mut u: Vec<f64>,
    mut fu: f64,
    settings: &OptSettings,
    evals: &mut usize,
) -> (Vec<f64>, f64) {
    let mut step = 0.05;
    let budget = *evals + 400 * u.len().max(1) + 100;
    while step >= settings.step_tol && *evals < budget {
        let mut improved = false;
        for i in 0..u.len() {
            if s.width[i] == 0.0 {
                continue;
            }
            for dir in [1.0, -1.0] {
                let ui = u[i];
                let cand = (ui + dir * step).clamp(0.0, 1.0);
                if cand == ui {
                    continue;
                }
                u[i] = cand;
                let fc = s.eval(&u, evals);
                if fc.is_finite() && fc > fu {
                    fu = fc;
                    improved = true;
                    break;
                }
                u[i] = ui;
            }
        }
        if !improved {
            step *= 0.25;
        }
    }
    (u, fu)
}

fn start_point(seed: u64, index: usize, dim: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    (0..dim).map(|_| rng.random::<f64>()).collect()
}

/// Maximizes `f` over the box `[lower, upper]` from random starts.
pub fn maximize_box<F>(f: &F, lower: &[f64], upper: &[f64], settings: &OptSettings) -> Result<OptOutcome>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    maximize_box_from(f, lower, upper, settings, &[])
}

/// Like [`maximize_box`], with extra starting points tried first.
pub fn maximize_box_from<F>(
    f: &F,
    lower: &[f64],
    upper: &[f64],
    settings: &OptSettings,
    initial: &[Vec<f64>],
) -> Result<OptOutcome>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    check_box(lower, upper)?;
    let dim = lower.len();
    let width: Vec<f64> = lower.iter().zip(upper).map(|(l, u)| u - l).collect();
    let s = Scaled { f, lower, width };

    let mut starts: Vec<Vec<f64>> = Vec::with_capacity(initial.len() + settings.starts);
    for x in initial {
        if x.len() != dim {
            return Err(Error::Dimension(format!(
                "initial point has {} entries, box has {dim}",
                x.len()
            )));
        }
        starts.push(
            x.iter()
                .zip(lower)
                .zip(&s.width)
                .map(|((&x, &l), &w)| if w > 0.0 { ((x - l) / w).clamp(0.0, 1.0) } else { 0.0 })
                .collect(),
        );
    }
    let random = if dim == 0 { 1 } else { settings.starts.max(1) };
    starts.extend((0..random).map(|i| start_point(settings.seed, i, dim)));

    let run = |u: &Vec<f64>| local_ascent(&s, u.clone(), settings);
    let results: Vec<LocalResult> = if settings.parallel {
        starts.par_iter().map(run).collect()
    } else {
        starts.iter().map(run).collect()
    };

    let mut best: Option<(usize, f64)> = None;
    let mut best_so_far = Vec::with_capacity(results.len());
    let mut discarded = 0;
    let mut finite_values = Vec::new();
    for (i, r) in results.iter().enumerate() {
        if r.value.is_finite() {
            finite_values.push(r.value);
            if best.is_none_or(|(_, b)| r.value > b) {
                best = Some((i, r.value));
            }
        } else {
            discarded += 1;
        }
        best_so_far.push(best.map_or(f64::NEG_INFINITY, |(_, b)| b));
    }
    let (best_index, value) =
        best.ok_or_else(|| Error::Optimization("objective was non-finite from every starting point".into()))?;
    finite_values.sort_by(|a, b| b.total_cmp(a));
    finite_values.truncate(10);
    let spread = finite_values.first().unwrap() - finite_values.last().unwrap();

    Ok(OptOutcome {
        x: s.to_x(&results[best_index].u),
        value,
        diagnostics: OptDiagnostics {
            starts: results.len(),
            discarded,
            converged: results.iter().filter(|r| r.converged).count(),
            top_values: finite_values,
            spread,
            evaluations: results.iter().map(|r| r.evaluations).sum(),
            best_so_far,
        },
    })
}

/// Outcome of a constrained run; `constraint` is `g(x)` at the returned point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstrainedOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub constraint: f64,
    /// Final penalty weight.
    pub penalty: f64,
    pub diagnostics: OptDiagnostics,
}

/// Maximizes `f` subject to `g(x) ≥ 0` on a box by exact-penalty
/// continuation: maximize `f − μ·max(0, −g)` for growing μ, warm-started
/// from the previous stage. Feasible initial points are candidates for the
/// answer, so the result is never worse than the best of them.
pub fn maximize_constrained<F, G>(
    f: &F,
    g: &G,
    lower: &[f64],
    upper: &[f64],
    settings: &OptSettings,
    initial: &[Vec<f64>],
    feasibility_tol: f64,
) -> Result<ConstrainedOutcome>
where
    F: Fn(&[f64]) -> f64 + Sync,
    G: Fn(&[f64]) -> f64 + Sync,
{
    check_box(lower, upper)?;
    let clamp = |x: &[f64]| -> Vec<f64> {
        x.iter()
            .zip(lower.iter().zip(upper))
            .map(|(&v, (&l, &u))| v.clamp(l, u))
            .collect()
    };
    let mut best: Option<(Vec<f64>, f64, f64)> = None;
    let consider = |best: &mut Option<(Vec<f64>, f64, f64)>, x: Vec<f64>| {
        let gx = g(&x);
        let fx = f(&x);
        if gx >= -feasibility_tol && fx.is_finite() && best.as_ref().is_none_or(|(_, bf, _)| fx > *bf) {
            *best = Some((x, fx, gx));
        }
    };
    for x in initial {
        consider(&mut best, clamp(x));
    }

    let mut warm: Vec<Vec<f64>> = initial.iter().map(|x| clamp(x)).collect();
    let mut mu = 1.0;
    let mut last_diag = None;
    for stage in 0..9 {
        let penalized = |x: &[f64]| f(x) - mu * (-g(x)).max(0.0);
        let stage_settings = OptSettings {
            seed: settings.seed.wrapping_add(stage),
            starts: if stage == 0 {
                settings.starts
            } else {
                settings.starts / 4 + 1
            },
            ..settings.clone()
        };
        let out = maximize_box_from(&penalized, lower, upper, &stage_settings, &warm)?;
        consider(&mut best, out.x.clone());
        let feasible = g(&out.x) >= -feasibility_tol;
        warm.insert(0, out.x);
        last_diag = Some(out.diagnostics);
        if feasible {
            break;
        }
        mu *= 10.0;
    }
    let diagnostics = last_diag.expect("at least one stage runs");
    match best {
        Some((x, value, constraint)) => Ok(ConstrainedOutcome {
            x,
            value,
            constraint,
            penalty: mu,
            diagnostics,
        }),
        None => Err(Error::Infeasible(format!(
            "no point with constraint ≥ {} found (penalty weight reached {mu:e})",
            -feasibility_tol
        ))),
    }
}
