//! Frequency-domain network transfers and assumption checks.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use super::spec::NetworkSpec;
use crate::error::{Error, Result};

/// Determinant magnitude below which a network assumption is violated.
pub const DET_THRESHOLD: f64 = 1e-8;

/// `I - W(e^{jω}) Δ F(e^{jω})`, entries `-W_ij F_ji` off the diagonal.
pub fn plant_loop_matrix(spec: &NetworkSpec, omega: f64) -> Result<DMatrix<Complex64>> {
    let l = spec.nodes();
    let mut m = DMatrix::<Complex64>::identity(l, l);
    for (i, j) in spec.graph().directed_edges() {
        m[(i, j)] -= spec.w(i, j).freq_response(omega)? * spec.f(j, i).freq_response(omega)?;
    }
    Ok(m)
}

/// `I - Q(e^{jω}) Δ P(e^{jω})`, entries `-Q_ij P_ji` off the diagonal.
pub fn reference_loop_matrix(spec: &NetworkSpec, omega: f64) -> Result<DMatrix<Complex64>> {
    let l = spec.nodes();
    let mut m = DMatrix::<Complex64>::identity(l, l);
    for (i, j) in spec.graph().directed_edges() {
        m[(i, j)] -= spec.q(i, j).freq_response(omega)? * spec.p(j, i).freq_response(omega)?;
    }
    Ok(m)
}

fn diag_eval(
    spec: &NetworkSpec,
    entry: impl Fn(usize) -> Result<Complex64>,
) -> Result<DMatrix<Complex64>> {
    let l = spec.nodes();
    let mut d = DMatrix::from_element(l, l, Complex64::new(0.0, 0.0));
    for i in 0..l {
        d[(i, i)] = entry(i)?;
    }
    Ok(d)
}

fn solve(
    m: DMatrix<Complex64>,
    rhs: DMatrix<Complex64>,
    what: &str,
    omega: f64,
) -> Result<DMatrix<Complex64>> {
    m.lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular(format!("{what} at omega = {omega}")))
}

/// `(I - WΔF)^{-1} G` at `e^{jω}`.
pub fn plant_transfer_eval(spec: &NetworkSpec, omega: f64) -> Result<DMatrix<Complex64>> {
    let g = diag_eval(spec, |i| spec.g(i).freq_response(omega))?;
    solve(plant_loop_matrix(spec, omega)?, g, "I - WΔF", omega)
}

/// `(I - QΔP)^{-1} T` at `e^{jω}`.
pub fn reference_transfer_eval(spec: &NetworkSpec, omega: f64) -> Result<DMatrix<Complex64>> {
    let t = diag_eval(spec, |i| spec.t(i).freq_response(omega))?;
    solve(reference_loop_matrix(spec, omega)?, t, "I - QΔP", omega)
}

/// Outcome of [`validate_network`].
#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    /// `min_ω |det(I - WΔF)|`
    pub plant_det_min: f64,
    /// `min_ω |det(I - QΔP)|`
    pub reference_det_min: f64,
    /// `min_ω |det((I - QΔP)^{-1} T - I)|`
    pub reference_gain_det_min: f64,
    /// `max_ω |det((I - QΔP)^{-1} T - I)|`
    pub reference_gain_det_max: f64,
    pub plant_well_posed: bool,
    pub reference_well_posed: bool,
    pub reference_not_identity: bool,
    pub messages: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.plant_well_posed && self.reference_well_posed && self.reference_not_identity
    }
}

/// Evaluates the network assumptions on a frequency grid.
///
/// Well-posedness of the plant and reference loops is required at every grid
/// point. The reference model must not reproduce its input, i.e.
/// `det((I - QΔP)^{-1} T - I)` must not vanish identically; reference models
/// with unit DC gain make this determinant small near `ω = 0`, so the check
/// uses its maximum over the grid.
pub fn validate_network(spec: &NetworkSpec, grid: &[f64]) -> ValidationReport {
    let mut plant_min = f64::INFINITY;
    let mut ref_min = f64::INFINITY;
    let mut gain_min = f64::INFINITY;
    let mut gain_max = 0.0_f64;
    let mut messages = Vec::new();
    let l = spec.nodes();
    for &w in grid {
        match plant_loop_matrix(spec, w) {
            Ok(m) => plant_min = plant_min.min(m.determinant().norm()),
            Err(e) => {
                plant_min = 0.0;
                messages.push(format!("plant loop at omega = {w}: {e}"));
            }
        }
        match reference_loop_matrix(spec, w) {
            Ok(m) => ref_min = ref_min.min(m.determinant().norm()),
            Err(e) => {
                ref_min = 0.0;
                messages.push(format!("reference loop at omega = {w}: {e}"));
            }
        }
        match reference_transfer_eval(spec, w) {
            Ok(t) => {
                let d = (t - DMatrix::<Complex64>::identity(l, l))
                    .determinant()
                    .norm();
                gain_min = gain_min.min(d);
                gain_max = gain_max.max(d);
            }
            Err(e) => messages.push(format!("reference transfer at omega = {w}: {e}")),
        }
    }
    if grid.is_empty() {
        gain_min = 0.0;
    }
    let plant_well_posed = plant_min >= DET_THRESHOLD;
    let reference_well_posed = ref_min >= DET_THRESHOLD;
    let reference_not_identity = gain_max >= DET_THRESHOLD;
    if !plant_well_posed {
        messages.push(format!("det(I - WΔF) reaches {plant_min:e} on the grid"));
    }
    if !reference_well_posed {
        messages.push(format!("det(I - QΔP) reaches {ref_min:e} on the grid"));
    }
    if !reference_not_identity {
        messages.push("reference model reproduces its input (y_d = r)".into());
    }
    ValidationReport {
        plant_det_min: plant_min,
        reference_det_min: ref_min,
        reference_gain_det_min: gain_min,
        reference_gain_det_max: gain_max,
        plant_well_posed,
        reference_well_posed,
        reference_not_identity,
        messages,
    }
}
