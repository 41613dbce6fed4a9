//! Weighted volumes `W(xi) = lim (p m)^{-n} sum_alpha e^{-<alpha,xi>/(p m)} dim (S/I)_{m,alpha}`,
//! Futaki invariants, and minimization of `W` over the Reeb cone.
//!
//! Samples `W_m` are computed in closed form from the Hilbert numerator (see
//! [`crate::series`]); standard-monomial enumeration is kept as a second,
//! truncated route. The limit is taken by Richardson extrapolation under
//! `W_m = W + c/m + O(1/m^2)`.

use std::sync::OnceLock;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grading::{ReebVector, TorusDirection, WeightedSetup};
use crate::groebner::{initial_ideal, GbLimits, Ideal};
use crate::hilbert::graded_dims_at;
use crate::series::{Dual, HilbertNumerator};

pub const DEFAULT_SCHEDULE: [u32; 4] = [8, 16, 32, 64];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VolumeMethod {
    /// Exact series sums from the Hilbert numerator.
    ClosedForm,
    /// Truncated standard-monomial sums; `lambda = None` picks the default window.
    Enumeration { lambda: Option<f64>, budget: u64 },
}

impl VolumeMethod {
    pub fn name(&self) -> &'static str {
        match self {
            VolumeMethod::ClosedForm => "closed_form",
            VolumeMethod::Enumeration { .. } => "enumeration",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub m: u32,
    pub value: f64,
    /// Bound on the mass left out by truncation; zero for closed-form sums.
    pub tail_bound: f64,
}

/// Richardson iterates `R_i = (m_{i+1} W_{i+1} - m_i W_i) / (m_{i+1} - m_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Extrapolation {
    pub value: f64,
    pub iterates: Vec<f64>,
    /// `|R_last - R_prev|`, or `|R - W_last|` with only two samples.
    pub error_estimate: f64,
    /// `|extrapolated - last sample|`.
    pub shift: f64,
}

pub fn richardson(samples: &[Sample]) -> Result<Extrapolation> {
    if samples.len() < 2 {
        return Err(Error::Invalid("extrapolation needs at least two degrees".into()));
    }
    let iterates: Vec<f64> = samples
        .windows(2)
        .map(|w| {
            let (m0, m1) = (w[0].m as f64, w[1].m as f64);
            (m1 * w[1].value - m0 * w[0].value) / (m1 - m0)
        })
        .collect();
    let last = samples.last().expect("nonempty").value;
    let value = *iterates.last().expect("nonempty");
    let error_estimate = match iterates.len() {
        1 => (value - last).abs(),
        l => (iterates[l - 1] - iterates[l - 2]).abs(),
    };
    Ok(Extrapolation { value, iterates, error_estimate, shift: (value - last).abs() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolumeEstimate {
    pub value: f64,
    pub samples: Vec<Sample>,
    pub extrapolated: f64,
    pub error_estimate: f64,
    pub shift: f64,
    pub tail_bound: f64,
    pub method: VolumeMethod,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FutakiReport {
    pub eta: Vec<f64>,
    pub via_sum: f64,
    pub via_sum_error: f64,
    pub via_fd: f64,
    /// Gap between the central differences at `h` and `h/2`.
    pub fd_gap: f64,
    pub fd_step: f64,
    pub agreement_gap: f64,
    /// `via_sum_error + fd_gap`.
    pub combined_error: f64,
    pub samples: Vec<Sample>,
}

impl FutakiReport {
    /// `agreement_gap <= max(1e-4, 10 * combined_error)`.
    pub fn consistent(&self) -> bool {
        self.agreement_gap <= (1e-4f64).max(10.0 * self.combined_error)
    }
}

fn check_schedule(schedule: &[u32]) -> Result<()> {
    if schedule.len() < 2 || schedule[0] == 0 || schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Invalid(format!("schedule must be at least two increasing positive degrees, got {schedule:?}")));
    }
    Ok(())
}

/// `S/I` with its weight data, ready for repeated evaluation at many `xi`.
#[derive(Debug)]
pub struct VolumeModel {
    ideal: Ideal,
    setup: WeightedSetup,
    limits: GbLimits,
    numerator: OnceLock<HilbertNumerator>,
}

impl VolumeModel {
    pub fn new(ideal: Ideal, setup: WeightedSetup, limits: GbLimits) -> Result<Self> {
        ideal.check_homogeneous(&setup)?;
        Ok(Self { ideal, setup, limits, numerator: OnceLock::new() })
    }

    /// Uses a numerator computed elsewhere (for instance a cached one).
    pub fn with_numerator(self, numerator: HilbertNumerator) -> Self {
        let _ = self.numerator.set(numerator);
        self
    }

    pub fn setup(&self) -> &WeightedSetup {
        &self.setup
    }

    pub fn ideal(&self) -> &Ideal {
        &self.ideal
    }

    pub fn numerator(&self) -> Result<&HilbertNumerator> {
        if let Some(n) = self.numerator.get() {
            return Ok(n);
        }
        let n = HilbertNumerator::of_ideal(&self.ideal, &self.setup, &self.limits)?;
        Ok(self.numerator.get_or_init(|| n))
    }

    /// `(W_m, dW_m/dt)` along `xi + t eta` for each `m`.
    fn closed_form(&self, xi: &[f64], eta: &[f64], schedule: &[u32]) -> Result<Vec<(u32, Dual)>> {
        let num = self.numerator()?;
        let n = self.setup.n() as i32;
        Ok(schedule
            .iter()
            .map(|&m| {
                let s = self.setup.p() as f64 * m as f64;
                (m, num.z(&self.setup, xi, eta, m).scale(s.powi(-n)))
            })
            .collect())
    }

    /// Per-degree samples of `W_m` (`value`) and of `-dW_m` along `eta` (`futaki`).
    fn samples(&self, xi: &ReebVector, eta: &[f64], schedule: &[u32], method: VolumeMethod) -> Result<(Vec<Sample>, Vec<Sample>)> {
        self.setup.require_reeb(xi)?;
        check_schedule(schedule)?;
        match method {
            VolumeMethod::ClosedForm => {
                let v = self.closed_form(xi.values(), eta, schedule)?;
                Ok((
                    v.iter().map(|(m, d)| Sample { m: *m, value: d.v, tail_bound: 0.0 }).collect(),
                    v.iter().map(|(m, d)| Sample { m: *m, value: -d.d, tail_bound: 0.0 }).collect(),
                ))
            }
            VolumeMethod::Enumeration { lambda, budget } => {
                let table = graded_dims_at(&self.ideal, &self.setup, xi, schedule, lambda, budget, &self.limits)?;
                let (p, n) = (self.setup.p(), self.setup.n());
                let mut w = Vec::new();
                let mut f = Vec::new();
                for &m in schedule {
                    let tail = table.tail_for(&self.setup, m);
                    w.push(Sample { m, value: table.weighted_sum(m, xi.values(), p, n), tail_bound: tail });
                    let eta_norm: f64 = eta.iter().map(|x| x.abs()).fold(0.0, f64::max);
                    f.push(Sample { m, value: table.futaki_sum(m, xi.values(), eta, p, n), tail_bound: tail * eta_norm });
                }
                Ok((w, f))
            }
        }
    }

    pub fn volume(&self, xi: &ReebVector, schedule: &[u32], method: VolumeMethod) -> Result<VolumeEstimate> {
        let zero = vec![0.0; self.setup.torus_rank()];
        let (samples, _) = self.samples(xi, &zero, schedule, method)?;
        let ex = richardson(&samples)?;
        Ok(VolumeEstimate {
            value: ex.value.max(0.0),
            extrapolated: ex.value,
            error_estimate: ex.error_estimate,
            shift: ex.shift,
            tail_bound: samples.iter().map(|s| s.tail_bound).fold(0.0, f64::max),
            samples,
            method,
        })
    }

    /// Extrapolated `W` and its gradient `dW/dxi_i` at `xi`.
    pub fn value_and_gradient(&self, xi: &ReebVector, schedule: &[u32]) -> Result<(f64, Vec<f64>)> {
        let k = self.setup.torus_rank();
        let mut grad = Vec::with_capacity(k);
        let mut value = 0.0;
        for i in 0..k {
            let e = TorusDirection::basis(i, k);
            let (w, f) = self.samples(xi, e.values(), schedule, VolumeMethod::ClosedForm)?;
            value = richardson(&w)?.value;
            grad.push(-richardson(&f)?.value);
        }
        Ok((value, grad))
    }

    fn extrapolated(&self, xi: &ReebVector, schedule: &[u32], method: VolumeMethod) -> Result<f64> {
        Ok(self.volume(xi, schedule, method)?.extrapolated)
    }

    /// `Fut_xi(eta)` by the sum formula and by central differences of `W`.
    pub fn futaki(&self, xi: &ReebVector, eta: &TorusDirection, schedule: &[u32], method: VolumeMethod) -> Result<FutakiReport> {
        let check = self.setup.require_reeb(xi)?;
        if eta.len() != self.setup.torus_rank() {
            return Err(crate::grading::GradingError::DimensionMismatch { expected: self.setup.torus_rank(), got: eta.len() }.into());
        }
        let (_, fut) = self.samples(xi, eta.values(), schedule, method)?;
        let ex = richardson(&fut)?;
        let (via_fd, fd_gap, fd_step) = if eta.is_zero() {
            (0.0, 0.0, 0.0)
        } else {
            let eta_norm = eta.values().iter().map(|x| x.abs()).fold(0.0, f64::max);
            let base = if check.margin.is_finite() {
                check.margin
            } else {
                xi.values().iter().map(|x| x.abs()).fold(1.0, f64::max)
            };
            let h0 = 1e-3 * base / eta_norm.max(1.0);
            let forward = self.setup.reeb_interior_step(xi, eta)?;
            let backward = self.setup.reeb_interior_step(xi, &eta.scaled(-1.0))?;
            if !(forward.t_max > h0 && backward.t_max > h0) {
                return Err(Error::FdStep(format!(
                    "xi is within {} of the Reeb cone boundary along eta; step {h0} does not fit",
                    forward.t_max.min(backward.t_max)
                )));
            }
            let stencil = [h0, -h0, h0 / 2.0, -h0 / 2.0];
            let vals: Vec<f64> = stencil
                .par_iter()
                .map(|&t| self.extrapolated(&xi.axpy_f64(t, eta), schedule, method))
                .collect::<Result<_>>()?;
            let d1 = -(vals[0] - vals[1]) / (2.0 * h0);
            let d2 = -(vals[2] - vals[3]) / h0;
            (d2, (d1 - d2).abs(), h0 / 2.0)
        };
        let agreement_gap = (ex.value - via_fd).abs();
        Ok(FutakiReport {
            eta: eta.values().to_vec(),
            via_sum: ex.value,
            via_sum_error: ex.error_estimate,
            via_fd,
            fd_gap,
            fd_step,
            agreement_gap,
            combined_error: ex.error_estimate + fd_gap,
            samples: fut,
        })
    }
}

/// `W(xi)` of `S/I`.
pub fn weighted_volume(ideal: &Ideal, setup: &WeightedSetup, xi: &ReebVector, schedule: &[u32], method: VolumeMethod) -> Result<VolumeEstimate> {
    VolumeModel::new(ideal.clone(), setup.clone(), GbLimits::default())?.volume(xi, schedule, method)
}

/// `Fut_xi(eta)` of `S/I`.
pub fn futaki(ideal: &Ideal, setup: &WeightedSetup, xi: &ReebVector, eta: &TorusDirection, schedule: &[u32]) -> Result<FutakiReport> {
    VolumeModel::new(ideal.clone(), setup.clone(), GbLimits::default())?.futaki(xi, eta, schedule, VolumeMethod::ClosedForm)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceReport {
    pub source: VolumeEstimate,
    pub central: VolumeEstimate,
    /// Largest `|W_m(S/I) - W_m(S/I_0)|` over the schedule.
    pub max_sample_gap: f64,
    pub value_gap: f64,
    pub tolerance: f64,
    /// The Hilbert numerators agree exactly.
    pub numerators_equal: bool,
    pub passed: bool,
    pub note: String,
}

/// Compares `W` of `S/I` with `W` of `S/I_0`, `I_0 = ini_rho(I)`.
pub fn degeneration_invariance_check(
    ideal: &Ideal,
    rho: &[i64],
    setup: &WeightedSetup,
    xi: &ReebVector,
    schedule: &[u32],
    limits: &GbLimits,
) -> Result<InvarianceReport> {
    let central = initial_ideal(ideal, rho, limits)?;
    invariance_between(ideal, &central, setup, xi, schedule, limits)
}

pub(crate) fn invariance_between(
    ideal: &Ideal,
    central: &Ideal,
    setup: &WeightedSetup,
    xi: &ReebVector,
    schedule: &[u32],
    limits: &GbLimits,
) -> Result<InvarianceReport> {
    let a = VolumeModel::new(ideal.clone(), setup.clone(), *limits)?;
    let b = VolumeModel::new(central.clone(), setup.clone(), *limits)?;
    let numerators_equal = a.numerator()? == b.numerator()?;
    let source = a.volume(xi, schedule, VolumeMethod::ClosedForm)?;
    let central = b.volume(xi, schedule, VolumeMethod::ClosedForm)?;
    let max_sample_gap = source
        .samples
        .iter()
        .zip(&central.samples)
        .map(|(x, y)| (x.value - y.value).abs())
        .fold(0.0, f64::max);
    let value_gap = (source.extrapolated - central.extrapolated).abs();
    let tolerance = source.error_estimate + central.error_estimate;
    let passed = value_gap <= tolerance;
    let note = if max_sample_gap == 0.0 {
        "samples identical".to_string()
    } else if numerators_equal {
        "Hilbert numerators agree; sample differences come from rounding".to_string()
    } else {
        "Hilbert numerators differ: the degeneration is not flat".to_string()
    };
    Ok(InvarianceReport { source, central, max_sample_gap, value_gap, tolerance, numerators_equal, passed, note })
}

#[derive(Debug, Clone)]
pub struct MinimizeOptions {
    /// Stop once `max_i |dW/dxi_i| <= tol`.
    pub tol: f64,
    pub max_iterations: usize,
    pub schedule: Vec<u32>,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self { tol: 1e-6, max_iterations: 200, schedule: DEFAULT_SCHEDULE.to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeResult {
    pub xi_star: ReebVector,
    pub volume: VolumeEstimate,
    pub futaki: Vec<FutakiReport>,
    pub iterations: usize,
    pub gradient_evaluations: usize,
    pub gradient_norm: f64,
    pub converged: bool,
    /// `W` after each accepted step, starting at `xi0`.
    pub history: Vec<f64>,
}

/// Projected gradient descent with Armijo backtracking on `W`.
pub fn minimize_volume(model: &VolumeModel, xi0: &ReebVector, opts: &MinimizeOptions) -> Result<MinimizeResult> {
    let setup = model.setup();
    let start_margin = setup.require_reeb(xi0)?.margin;
    let mut xi = xi0.clone();
    let (mut w, mut g) = model.value_and_gradient(&xi, &opts.schedule)?;
    let mut evals = 1;
    let mut history = vec![w];
    let mut step: f64 = 1.0;
    let mut iterations = 0;
    let sup = |g: &[f64]| g.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let mut converged = sup(&g) <= opts.tol;
    while !converged && iterations < opts.max_iterations {
        let dir = TorusDirection::from_f64(g.iter().map(|x| -x).collect());
        let interior = setup.reeb_interior_step(&xi, &dir)?;
        let gg: f64 = g.iter().map(|x| x * x).sum();
        let mut t = step.min(0.9 * interior.t_max);
        let accepted = loop {
            if t < 1e-14 {
                break None;
            }
            let cand = xi.axpy_f64(t, &dir);
            if setup.is_reeb(&cand)?.is_reeb {
                let wc = model.volume(&cand, &opts.schedule, VolumeMethod::ClosedForm)?.extrapolated;
                if wc.is_finite() && wc <= w - 1e-4 * t * gg {
                    break Some((cand, t, wc));
                }
            }
            t *= 0.5;
        };
        let Some((mut cand, mut t, wc)) = accepted else { break };
        // minimizer of the parabola through w, the slope -gg and wc; Armijo alone
        // accepts steps near 2/L and then zig-zags
        let curvature = wc - w + t * gg;
        if curvature > 0.0 {
            let tq = gg * t * t / (2.0 * curvature);
            if tq > 0.1 * t && tq < 0.9 * t {
                let alt = xi.axpy_f64(tq, &dir);
                let wq = model.volume(&alt, &opts.schedule, VolumeMethod::ClosedForm)?.extrapolated;
                if wq.is_finite() && wq < wc {
                    cand = alt;
                    t = tq;
                }
            }
        }
        xi = cand;
        iterations += 1;
        let check = setup.is_reeb(&xi)?;
        if check.margin < 1e-9 * start_margin.min(1.0) {
            let var = check.binding.map(|j| setup.vars().name(j).to_string()).unwrap_or_default();
            return Err(Error::Divergence { var, margin: check.margin });
        }
        let (nw, ng) = model.value_and_gradient(&xi, &opts.schedule)?;
        evals += 1;
        w = nw;
        g = ng;
        history.push(w);
        step = if t >= 0.9 * interior.t_max { t } else { 2.0 * t };
        converged = sup(&g) <= opts.tol;
    }
    if !converged {
        let check = setup.is_reeb(&xi)?;
        if check.margin < 1e-6 * start_margin.min(1.0) {
            let var = check.binding.map(|j| setup.vars().name(j).to_string()).unwrap_or_default();
            return Err(Error::Divergence { var, margin: check.margin });
        }
    }
    let k = setup.torus_rank();
    let futaki = (0..k)
        .map(|i| model.futaki(&xi, &TorusDirection::basis(i, k), &opts.schedule, VolumeMethod::ClosedForm))
        .collect::<Result<Vec<_>>>()?;
    let volume = model.volume(&xi, &opts.schedule, VolumeMethod::ClosedForm)?;
    Ok(MinimizeResult {
        xi_star: xi,
        volume,
        futaki,
        iterations,
        gradient_evaluations: evals,
        gradient_norm: sup(&g),
        converged,
        history,
    })
}

/// Least-squares fit `W_m ~ C/m` of the samples.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub c: f64,
    pub max_relative_residual: f64,
}

pub fn decay_fit(samples: &[Sample]) -> DecayFit {
    let scaled: Vec<f64> = samples.iter().map(|s| s.m as f64 * s.value).collect();
    let c = scaled.iter().sum::<f64>() / scaled.len().max(1) as f64;
    let max_relative_residual = scaled.iter().map(|x| ((x - c) / c).abs()).fold(0.0, f64::max);
    DecayFit { c, max_relative_residual }
}
