//! Jerk-augmented longitudinal state spaces and discrete LQR synthesis.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::SynthesisError;

/// Published cruise gains at the default tick, used as the default gain set.
pub const REFERENCE_K_CRUISE: [f64; 2] = [0.9047, 0.9074];
/// Published yielding gains at the default tick.
pub const REFERENCE_K_YIELD: [f64; 3] = [-0.0532, 0.3139, 0.3792];
/// Jerk scale of the yielding model.
pub const J_YIELD: f64 = 2.0;
/// Jerk scale of the cruising model.
pub const J_CRUISE: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaces {
    /// State `[v; a]`.
    pub cruise: StateSpace,
    /// State `[d; v; a]`, `d` the gap to the pedestrian's crossing line.
    pub yielding: StateSpace,
}

pub fn build_state_spaces(dt: f64, j_yield: f64, j_cruise: f64) -> StateSpaces {
    let cruise = StateSpace {
        a: DMatrix::from_row_slice(2, 2, &[1.0, dt, 0.0, 1.0]),
        b: DMatrix::from_row_slice(2, 1, &[j_cruise * dt * dt, j_cruise * dt]),
    };
    let yielding = StateSpace {
        a: DMatrix::from_row_slice(3, 3, &[1.0, -dt, 0.0, 0.0, 1.0, dt, 0.0, 0.0, 1.0]),
        b: DMatrix::from_row_slice(3, 1, &[0.0, j_yield * dt * dt, j_yield * dt]),
    };
    StateSpaces { cruise, yielding }
}

/// Cost weights the shipped gains were designed with.
pub fn cruise_weights() -> (DMatrix<f64>, DMatrix<f64>) {
    (
        DMatrix::from_diagonal(&DVector::from_vec(vec![1000.0, 1.0])),
        DMatrix::from_element(1, 1, 1000.0),
    )
}

pub fn yield_weights() -> (DMatrix<f64>, DMatrix<f64>) {
    (
        DMatrix::from_diagonal(&DVector::from_vec(vec![5.0, 100.0, 0.1])),
        DMatrix::from_element(1, 1, 1500.0),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiccatiOptions {
    /// Stop when the largest change in `P` is below `tolerance * max(1, |P|)`.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for RiccatiOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Synthesis {
    pub gain: DMatrix<f64>,
    pub cost_to_go: DMatrix<f64>,
    pub iterations: usize,
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

fn check_dims(q: &DMatrix<f64>, r: &DMatrix<f64>, a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(), SynthesisError> {
    let n = a.nrows();
    let m = b.ncols();
    if a.ncols() != n || b.nrows() != n || q.shape() != (n, n) || r.shape() != (m, m) || n == 0 || m == 0 {
        return Err(SynthesisError::Dimension(format!(
            "A {:?}, B {:?}, Q {:?}, R {:?}",
            a.shape(),
            b.shape(),
            q.shape(),
            r.shape()
        )));
    }
    Ok(())
}

/// `(R + B'PB)^-1 B'PA`.
fn feedback(p: &DMatrix<f64>, r: &DMatrix<f64>, a: &DMatrix<f64>, b: &DMatrix<f64>, iteration: usize) -> Result<DMatrix<f64>, SynthesisError> {
    let bt_p = b.transpose() * p;
    let s = r + &bt_p * b;
    let chol = s
        .cholesky()
        .ok_or(SynthesisError::Singular { iteration })?;
    Ok(chol.solve(&(bt_p * a)))
}

pub fn synthesize_gains(
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
) -> Result<Synthesis, SynthesisError> {
    synthesize_gains_with(q, r, a, b, RiccatiOptions::default())
}

/// Fixed-point iteration of the discrete algebraic Riccati equation
/// `P = Q + A'PA - A'PB (R + B'PB)^-1 B'PA`, started from `P = Q`.
pub fn synthesize_gains_with(
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    opts: RiccatiOptions,
) -> Result<Synthesis, SynthesisError> {
    check_dims(q, r, a, b)?;
    let at = a.transpose();
    let mut p = q.clone();
    let mut last_change = f64::INFINITY;
    for it in 1..=opts.max_iterations {
        let k = feedback(&p, r, a, b, it)?;
        let at_p = &at * &p;
        let mut next = q + &at_p * a - &at_p * b * &k;
        next = (&next + next.transpose()) * 0.5;
        if next.iter().any(|x| !x.is_finite()) {
            return Err(SynthesisError::NotConverged {
                iterations: it,
                last_change: f64::INFINITY,
                tolerance: opts.tolerance,
            });
        }
        last_change = max_abs(&(&next - &p));
        p = next;
        if last_change <= opts.tolerance * max_abs(&p).max(1.0) {
            let gain = feedback(&p, r, a, b, it)?;
            return Ok(Synthesis {
                gain,
                cost_to_go: p,
                iterations: it,
            });
        }
    }
    Err(SynthesisError::NotConverged {
        iterations: opts.max_iterations,
        last_change,
        tolerance: opts.tolerance,
    })
}

pub fn closed_loop(a: &DMatrix<f64>, b: &DMatrix<f64>, k: &DMatrix<f64>) -> DMatrix<f64> {
    a - b * k
}

/// Moduli of the eigenvalues of a square matrix, sorted descending.
pub fn eigenvalue_moduli(m: &DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = m.complex_eigenvalues().iter().map(|z| z.norm()).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    eigenvalue_moduli(m).first().copied().unwrap_or(0.0)
}

/// State-feedback gains used by the tracking layer plus the jerk scales of
/// the models they were designed for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GainSet {
    pub cruise: [f64; 2],
    pub yielding: [f64; 3],
    pub j_cruise: f64,
    pub j_yield: f64,
}

impl Default for GainSet {
    fn default() -> Self {
        Self {
            cruise: REFERENCE_K_CRUISE,
            yielding: REFERENCE_K_YIELD,
            j_cruise: J_CRUISE,
            j_yield: J_YIELD,
        }
    }
}

impl GainSet {
    pub fn cruise_row(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(1, 2, &self.cruise)
    }

    pub fn yield_row(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(1, 3, &self.yielding)
    }

    /// Spectral radii of the cruise and yield closed loops at `dt`.
    pub fn closed_loop_radii(&self, dt: f64) -> (f64, f64) {
        let ss = build_state_spaces(dt, self.j_yield, self.j_cruise);
        (
            spectral_radius(&closed_loop(&ss.cruise.a, &ss.cruise.b, &self.cruise_row())),
            spectral_radius(&closed_loop(&ss.yielding.a, &ss.yielding.b, &self.yield_row())),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GainMode {
    Cruise,
    Yield,
}

impl std::str::FromStr for GainMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cruise" | "crs" => Ok(Self::Cruise),
            "yield" | "yld" => Ok(Self::Yield),
            other => Err(format!("unknown gain mode '{other}' (expected cruise or yield)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainReport {
    pub mode: GainMode,
    pub dt: f64,
    pub gain: Vec<f64>,
    pub reference_gain: Vec<f64>,
    /// `max |K - K_reference|`.
    pub deviation: f64,
    pub closed_loop_moduli: Vec<f64>,
    pub iterations: usize,
}

/// Synthesizes the gain for `mode` at `dt` with the shipped cost weights and
/// compares it with the shipped gain.
pub fn gain_report(mode: GainMode, dt: f64, j_yield: f64, j_cruise: f64) -> Result<GainReport, SynthesisError> {
    let ss = build_state_spaces(dt, j_yield, j_cruise);
    let (sys, (q, r), reference) = match mode {
        GainMode::Cruise => (&ss.cruise, cruise_weights(), REFERENCE_K_CRUISE.to_vec()),
        GainMode::Yield => (&ss.yielding, yield_weights(), REFERENCE_K_YIELD.to_vec()),
    };
    let syn = synthesize_gains(&q, &r, &sys.a, &sys.b)?;
    let gain: Vec<f64> = syn.gain.iter().copied().collect();
    let deviation = gain
        .iter()
        .zip(&reference)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(GainReport {
        mode,
        dt,
        closed_loop_moduli: eigenvalue_moduli(&closed_loop(&sys.a, &sys.b, &syn.gain)),
        gain,
        reference_gain: reference,
        deviation,
        iterations: syn.iterations,
    })
}

/// Synthesizes gains over a grid of time steps and returns every report
/// for `mode`, the best match to the shipped gain first.
pub fn calibrate_dt(mode: GainMode, dts: &[f64], j_yield: f64, j_cruise: f64) -> Result<Vec<GainReport>, SynthesisError> {
    let mut out = dts
        .iter()
        .map(|&dt| gain_report(mode, dt, j_yield, j_cruise))
        .collect::<Result<Vec<_>, _>>()?;
    out.sort_by(|a, b| a.deviation.total_cmp(&b.deviation));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_zero_dynamics_needs_no_feedback() {
        let one = DMatrix::from_element(1, 1, 1.0);
        let zero = DMatrix::from_element(1, 1, 0.0);
        let s = synthesize_gains(&one, &one, &zero, &one).unwrap();
        assert!((s.cost_to_go[(0, 0)] - 1.0).abs() < 1e-12);
        assert!(s.gain[(0, 0)].abs() < 1e-12);
    }

    #[test]
    fn scalar_integrator_matches_closed_form() {
        // x+ = x + u, Q = R = 1: P^2 - P - 1 = 0, K = P / (1 + P)
        let one = DMatrix::from_element(1, 1, 1.0);
        let s = synthesize_gains(&one, &one, &one, &one).unwrap();
        let p = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((s.cost_to_go[(0, 0)] - p).abs() < 1e-9);
        assert!((s.gain[(0, 0)] - p / (1.0 + p)).abs() < 1e-9);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let q = DMatrix::identity(2, 2);
        let r = DMatrix::identity(1, 1);
        let a = DMatrix::identity(3, 3);
        let b = DMatrix::zeros(3, 1);
        assert!(matches!(synthesize_gains(&q, &r, &a, &b), Err(SynthesisError::Dimension(_))));
    }

    #[test]
    fn uncontrollable_unstable_mode_does_not_converge() {
        let q = DMatrix::identity(1, 1);
        let r = DMatrix::identity(1, 1);
        let a = DMatrix::from_element(1, 1, 1.5);
        let b = DMatrix::zeros(1, 1);
        let opts = RiccatiOptions {
            tolerance: 1e-10,
            max_iterations: 200,
        };
        assert!(matches!(
            synthesize_gains_with(&q, &r, &a, &b, opts),
            Err(SynthesisError::NotConverged { .. })
        ));
    }

    #[test]
    fn state_space_layout() {
        let ss = build_state_spaces(0.1, 2.0, 0.9);
        assert_eq!(ss.yielding.a[(0, 1)], -0.1);
        assert_eq!(ss.yielding.a[(1, 2)], 0.1);
        assert!((ss.yielding.b[(1, 0)] - 0.02).abs() < 1e-15);
        assert!((ss.yielding.b[(2, 0)] - 0.2).abs() < 1e-15);
        assert!((ss.cruise.b[(0, 0)] - 0.009).abs() < 1e-15);
        assert!((ss.cruise.b[(1, 0)] - 0.09).abs() < 1e-15);
    }

    #[test]
    fn shipped_gains_are_stable_at_default_tick() {
        let (c, y) = GainSet::default().closed_loop_radii(0.1);
        assert!((c - 0.9583).abs() < 1e-3, "{c}");
        assert!(y < 1.0, "{y}");
    }

    #[test]
    fn synthesized_gains_stabilize() {
        for mode in [GainMode::Cruise, GainMode::Yield] {
            let rep = gain_report(mode, 0.1, J_YIELD, J_CRUISE).unwrap();
            assert!(rep.closed_loop_moduli[0] < 1.0);
        }
    }
}
