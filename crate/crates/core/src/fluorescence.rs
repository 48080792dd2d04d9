//! Resonantly driven two-level atom, `H = (Ω/2)σ_x` and `c = √γ σ`, with
//! closed-form expected currents for the standard unravelings.
//!
//! Basis order is `[|e⟩, |g⟩]`, `σ = |g⟩⟨e|`, and `x, y, z` are the
//! expectations of the Pauli matrices, so `⟨σ⟩ = (x - iy)/2`.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::operators::{pauli, re, CMatrix, DensityMatrix, LindbladModel, PureState, C64, I};
use crate::trajectory::{step_sme, Trajectory};
use crate::unravelings::{NoiseIncrement, UMatrix, UnravelingSpec, DEGENERATE_NORM};

const SCALAR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomParams {
    pub gamma: f64,
    pub omega: f64,
}

impl Default for AtomParams {
    fn default() -> Self {
        Self { gamma: 1.0, omega: 10.0 }
    }
}

impl AtomParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::Config(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !self.omega.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(())
    }
}

pub fn build_atom(params: &AtomParams) -> Result<LindbladModel> {
    params.validate()?;
    LindbladModel::new(
        pauli::sigma_x() * re(params.omega / 2.0),
        vec![pauli::sigma() * re(params.gamma.sqrt())],
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochPoint {
    pub fn of_matrix(rho: &CMatrix) -> Result<Self> {
        if rho.nrows() != 2 || rho.ncols() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, found: rho.nrows() });
        }
        let e = |p: CMatrix| linalg::trace(&(p * rho)).re;
        Ok(Self { x: e(pauli::sigma_x()), y: e(pauli::sigma_y()), z: e(pauli::sigma_z()) })
    }

    pub fn of_state(state: &PureState) -> Result<Self> {
        Self::of_matrix(&state.projector())
    }

    /// `⟨σ⟩ = (x - iy)/2`
    pub fn sigma(&self) -> C64 {
        C64::new(self.x, -self.y) * 0.5
    }
}

/// The five unravelings used for the fluorescence figures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// `u = 1`, x-quadrature homodyne.
    HomodyneX,
    /// `u = -1`, y-quadrature homodyne.
    HomodyneY,
    /// `u = 0`
    Heterodyne,
    InvariantPlus,
    InvariantMinus,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::HomodyneX,
        Scenario::HomodyneY,
        Scenario::Heterodyne,
        Scenario::InvariantPlus,
        Scenario::InvariantMinus,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::HomodyneX => "u_plus_1",
            Self::HomodyneY => "u_minus_1",
            Self::Heterodyne => "u_zero",
            Self::InvariantPlus => "invariant_plus",
            Self::InvariantMinus => "invariant_minus",
        }
    }

    pub fn spec(&self) -> UnravelingSpec {
        let fixed = |u: f64| UnravelingSpec::Fixed { u: UMatrix::scalar(re(u)).expect("|u| = 1") };
        match self {
            Self::HomodyneX => fixed(1.0),
            Self::HomodyneY => fixed(-1.0),
            Self::Heterodyne => UnravelingSpec::Heterodyne,
            Self::InvariantPlus => UnravelingSpec::InvariantStateDep { sign: 1 },
            Self::InvariantMinus => UnravelingSpec::InvariantStateDep { sign: -1 },
        }
    }

    /// Recognizes single-channel specs with a closed-form current.
    pub fn from_spec(spec: &UnravelingSpec) -> Result<Self> {
        let scalar = match spec {
            UnravelingSpec::Fixed { u } if u.k() == 1 => u.matrix()[(0, 0)],
            UnravelingSpec::Homodyne { eta, theta1, theta2 } => {
                crate::unravelings::homodyne_u(*eta, *theta1, *theta2)?.matrix()[(0, 0)]
            }
            UnravelingSpec::Heterodyne => re(0.0),
            UnravelingSpec::InvariantStateDep { sign: 1 } => return Ok(Self::InvariantPlus),
            UnravelingSpec::InvariantStateDep { sign: -1 } => return Ok(Self::InvariantMinus),
            other => return Err(Error::UnsupportedSpec(format!("{other:?}"))),
        };
        if (scalar - 1.0).norm() < SCALAR_TOL {
            Ok(Self::HomodyneX)
        } else if (scalar + 1.0).norm() < SCALAR_TOL {
            Ok(Self::HomodyneY)
        } else if scalar.norm() < SCALAR_TOL {
            Ok(Self::Heterodyne)
        } else {
            Err(Error::UnsupportedSpec(format!("u = {scalar}")))
        }
    }
}

/// Closed-form `E[J]` of the atom under `spec`.
pub fn scenario_expected_current(spec: &UnravelingSpec, params: &AtomParams, state: &PureState) -> Result<C64> {
    params.validate()?;
    let b = BlochPoint::of_state(state)?;
    let sg = params.gamma.sqrt();
    let s = b.sigma();
    // ⟨(c - ⟨c⟩)²⟩ = -γ⟨σ⟩², so the invariant u falls back to 0 with it.
    let degenerate = params.gamma * s.norm_sqr() <= DEGENERATE_NORM;
    Ok(match Scenario::from_spec(spec)? {
        Scenario::HomodyneX => re(sg * b.x),
        Scenario::HomodyneY => -I * (sg * b.y),
        Scenario::Heterodyne => s * sg,
        Scenario::InvariantPlus if degenerate => s * sg,
        Scenario::InvariantPlus => re(0.0),
        Scenario::InvariantMinus if degenerate => s * sg,
        Scenario::InvariantMinus => s * (2.0 * sg),
    })
}

/// `Δz - (Ωy - γ(z + 1))dt` along consecutive states; the conditional z
/// equation has no noise term for the `u = -1` unraveling.
pub fn z_drift_residual(states: &[PureState], params: &AtomParams, dt: f64) -> Result<Vec<f64>> {
    let bloch = states.iter().map(BlochPoint::of_state).collect::<Result<Vec<_>>>()?;
    Ok(bloch
        .windows(2)
        .map(|w| w[1].z - w[0].z - (params.omega * w[0].y - params.gamma * (w[0].z + 1.0)) * dt)
        .collect())
}

/// The `u = 1` stochastic master equation written out with Pauli matrices,
/// `dP = LP dt + √γ[½{σ_x - ⟨σ_x⟩, P} - (i/2)[σ_y, P]] dζ`, followed by the
/// same re-projection as [`step_sme`].
pub fn sme_u1_decomposed_step(
    model: &LindbladModel,
    projector: &DensityMatrix,
    dzeta: f64,
    params: &AtomParams,
    dt: f64,
) -> Result<DensityMatrix> {
    let p = projector.matrix();
    if p.nrows() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: p.nrows() });
    }
    let sx = pauli::sigma_x();
    let sy = pauli::sigma_y();
    let mx = linalg::trace(&(&sx * p)).re;
    let id = CMatrix::identity(2, 2);
    let sg = params.gamma.sqrt();
    let noise = linalg::anticommutator(&(sx - id * re(mx)), p) * re(0.5)
        - linalg::commutator(&sy, p) * (I * 0.5);
    let next = p + crate::operators::liouvillian_apply(model, p)? * re(dt) + noise * re(sg * dzeta);
    let (_, v) = linalg::dominant_eigenvector(&next);
    Ok(PureState::normalized(v)?.to_density())
}

/// The same step through the general stochastic master equation.
pub fn sme_u1_general_step(model: &LindbladModel, projector: &DensityMatrix, dzeta: f64, dt: f64) -> Result<DensityMatrix> {
    step_sme(model, projector, &NoiseIncrement { dxi: vec![re(dzeta)] }, dt)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FigureRow {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub re_j: f64,
    pub im_j: f64,
}

/// Bloch coordinates and the current per recorded time; the last state has
/// no following current and gets NaN.
pub fn figure_rows(traj: &Trajectory) -> Result<Vec<FigureRow>> {
    traj.times
        .iter()
        .zip(&traj.states)
        .enumerate()
        .map(|(i, (&t, s))| {
            let b = BlochPoint::of_state(s)?;
            let j = traj.record.currents.get(i).map(|c| c[0]).unwrap_or(C64::new(f64::NAN, f64::NAN));
            Ok(FigureRow { t, x: b.x, y: b.y, z: b.z, re_j: j.re, im_j: j.im })
        })
        .collect()
}

pub fn write_figure_csv<W: Write>(out: W, rows: &[FigureRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "x", "y", "z", "re_J", "im_J"])?;
    for r in rows {
        w.write_record([r.t, r.x, r.y, r.z, r.re_j, r.im_j].map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Phase `θ` for which homodyne `u = e^{2iθ}` equals the given real sign.
pub fn homodyne_phase(u_sign: f64) -> f64 {
    if u_sign >= 0.0 {
        0.0
    } else {
        PI / 2.0
    }
}
