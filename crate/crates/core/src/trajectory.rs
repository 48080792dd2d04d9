//! Time stepping of diffusive quantum trajectories.
//!
//! Three Euler–Itô discretizations of the same conditioned dynamics are
//! provided: the linear (unnormalized) stochastic Schrödinger equation driven
//! by the currents, the stochastic master equation for the projector, and the
//! nonlinear normalized stochastic Schrödinger equation with the
//! representation-invariant nonlinear Hamiltonian. The linear form is the
//! default for simulation; the other two exist for cross-validation.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::operators::{
    liouvillian_unchecked, re, CMatrix, CVector, DensityMatrix, LindbladModel, PureState, C64, I,
};
use crate::rng::{fill_standard_normal, trajectory_stream};
use crate::unravelings::{extremal_r, NoiseFactor, NoiseIncrement, UMatrix, UnravelingSpec};

/// Norm below which an unnormalized update is reported as a collapse.
pub const COLLAPSE_NORM: f64 = 1e-12;
/// Tolerance of the rank-one projector check on stochastic master equation
/// inputs.
pub const PROJECTOR_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stepper {
    #[default]
    Linear,
    Sme,
    NonlinearSse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryConfig {
    pub dt: f64,
    pub steps: usize,
    pub seed: u64,
    pub trajectory_index: u64,
    pub unraveling: UnravelingSpec,
    pub record_stride: usize,
    #[serde(default)]
    pub stepper: Stepper,
}

impl TrajectoryConfig {
    pub fn new(unraveling: UnravelingSpec, dt: f64, steps: usize) -> Self {
        Self {
            dt,
            steps,
            seed: 0,
            trajectory_index: 0,
            unraveling,
            record_stride: 1,
            stepper: Stepper::Linear,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if self.steps == 0 {
            return Err(Error::Config("steps must be at least 1".into()));
        }
        if self.record_stride == 0 {
            return Err(Error::Config("record_stride must be at least 1".into()));
        }
        Ok(())
    }

    pub fn with_index(&self, index: u64) -> Self {
        Self { trajectory_index: index, ..self.clone() }
    }
}

/// Currents and the Wiener increments that produced them, one entry per
/// recorded step. `J_k dt - dξ_k = dt ⟨u_kj c_j† + c_k⟩` at the pre-step
/// state.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MeasurementRecord {
    pub times: Vec<f64>,
    pub currents: Vec<Vec<C64>>,
    pub increments: Vec<Vec<C64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub trajectory_index: u64,
    /// Times of the recorded states, `n dt` for `n = 0, stride, ...`.
    pub times: Vec<f64>,
    pub states: Vec<PureState>,
    pub record: MeasurementRecord,
}

/// Infinitesimal Kraus operator `Ω_J = 1 - iH dt - ½Σc†c dt + ΣJ_k* c_k dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementOperator {
    matrix: CMatrix,
}

impl MeasurementOperator {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }
}

/// `E[J]_k = ⟨c_k + Σ_j u_kj c_j†⟩`
pub fn expected_current(model: &LindbladModel, u: &UMatrix, state: &PureState) -> Result<Vec<C64>> {
    model.check_dim(state.dim())?;
    if u.k() != model.channels() {
        return Err(Error::DimensionMismatch { expected: model.channels(), found: u.k() });
    }
    let means = model.lindblad_means(state);
    Ok(currents_from_means(u.matrix(), &means))
}

fn currents_from_means(u: &CMatrix, means: &[C64]) -> Vec<C64> {
    let k = means.len();
    (0..k)
        .map(|i| means[i] + (0..k).map(|j| u[(i, j)] * means[j].conj()).sum::<C64>())
        .collect()
}

/// Reusable buffers for the per-step arithmetic.
#[derive(Debug, Clone)]
pub(crate) struct Scratch {
    /// `c_k ψ`
    cpsi: Vec<CVector>,
    /// `c_k† ψ`
    cdpsi: Vec<CVector>,
    means: Vec<C64>,
    currents: Vec<C64>,
    tmp: CVector,
    z: Vec<f64>,
}

impl Scratch {
    pub(crate) fn new(n: usize, k: usize) -> Self {
        Self {
            cpsi: vec![CVector::zeros(n); k],
            cdpsi: vec![CVector::zeros(n); k],
            means: vec![C64::new(0.0, 0.0); k],
            currents: vec![C64::new(0.0, 0.0); k],
            tmp: CVector::zeros(n),
            z: vec![0.0; 2 * k],
        }
    }

    fn apply_lindblads(&mut self, model: &LindbladModel, psi: &CVector) {
        for (k, c) in model.lindblads().iter().enumerate() {
            self.cpsi[k].gemv(re(1.0), c, psi, re(0.0));
            self.means[k] = psi.dotc(&self.cpsi[k]);
        }
    }

    /// `J_k = E[J]_k + dξ_k / dt`, from the means already in the buffer.
    fn fill_currents(&mut self, u: &CMatrix, dxi: &[C64], dt: f64) {
        let k = self.means.len();
        for i in 0..k {
            let mut j = self.means[i];
            for l in 0..k {
                j += u[(i, l)] * self.means[l].conj();
            }
            self.currents[i] = j + dxi[i] / dt;
        }
    }

    /// Symmetrized `⟨(c_j - ⟨c_j⟩)(c_l - ⟨c_l⟩)⟩`, needs `apply_lindblads` first.
    fn correlation_moment(&mut self, model: &LindbladModel, psi: &CVector) -> CMatrix {
        for (k, cd) in model.adjoints().iter().enumerate() {
            self.cdpsi[k].gemv(re(1.0), cd, psi, re(0.0));
        }
        let k = self.means.len();
        CMatrix::from_fn(k, k, |j, l| {
            let jl = self.cdpsi[j].dotc(&self.cpsi[l]);
            let lj = self.cdpsi[l].dotc(&self.cpsi[j]);
            0.5 * (jl + lj) - self.means[j] * self.means[l]
        })
    }
}

pub(crate) fn is_positive(x: f64) -> bool {
    x > 0.0 && x.is_finite()
}

fn normalize_in_place(psi: &mut CVector) -> Result<()> {
    let norm = psi.norm();
    if !norm.is_finite() {
        return Err(Error::NonFinite);
    }
    if norm < COLLAPSE_NORM {
        return Err(Error::NormCollapse(norm));
    }
    *psi /= re(norm);
    Ok(())
}

fn check_step_inputs(model: &LindbladModel, n: usize, dxi: &NoiseIncrement, dt: f64) -> Result<()> {
    model.check_dim(n)?;
    if dxi.k() != model.channels() {
        return Err(Error::DimensionMismatch { expected: model.channels(), found: dxi.k() });
    }
    if !is_positive(dt) {
        return Err(Error::Config(format!("dt must be positive, got {dt}")));
    }
    Ok(())
}

/// `|φ̄⟩ ← |φ̄⟩ + dt(-iH - ½Σc†c + ΣJ_k* c_k)|φ̄⟩`, then renormalized. The
/// currents must already be in `ws.currents` and `c_k ψ` in `ws.cpsi`.
fn linear_update(model: &LindbladModel, psi: &mut CVector, dt: f64, ws: &mut Scratch) -> Result<()> {
    ws.tmp.gemv(re(dt), model.drift(), psi, re(0.0));
    for (cpsi, j) in ws.cpsi.iter().zip(&ws.currents) {
        ws.tmp.axpy(j.conj() * dt, cpsi, re(1.0));
    }
    *psi += &ws.tmp;
    normalize_in_place(psi)
}

/// Nonlinear SSE increment with `-iH_ψ = -iH - ½Σ(c†c - 2⟨c⟩*c + |⟨c⟩|²)`
/// plus `Σ(c_k - ⟨c_k⟩)ψ dξ_k*`, then renormalized.
fn nonlinear_update(
    model: &LindbladModel,
    psi: &mut CVector,
    dxi: &[C64],
    dt: f64,
    ws: &mut Scratch,
) -> Result<()> {
    ws.tmp.gemv(re(dt), model.drift(), psi, re(0.0));
    let mut scalar = C64::new(0.0, 0.0);
    for ((cpsi, m), d) in ws.cpsi.iter().zip(&ws.means).zip(dxi) {
        ws.tmp.axpy(m.conj() * dt + d.conj(), cpsi, re(1.0));
        scalar -= 0.5 * m.norm_sqr() * dt + d.conj() * m;
    }
    ws.tmp.axpy(scalar, psi, re(1.0));
    *psi += &ws.tmp;
    normalize_in_place(psi)
}

/// Euler–Itô projector update `P + LP dt + Σ[(c_k - ⟨c_k⟩)P dξ_k* + H.c.]`,
/// before re-projection.
fn sme_update_matrix(model: &LindbladModel, p: &CMatrix, dxi: &[C64], dt: f64) -> CMatrix {
    let n = p.nrows();
    let id = CMatrix::identity(n, n);
    let mut next = p + liouvillian_unchecked(model, p) * re(dt);
    for (c, d) in model.lindblads().iter().zip(dxi) {
        let mean = linalg::trace(&(c * p));
        let term = (c - &id * mean) * p * d.conj();
        next += &term + term.adjoint();
    }
    next
}

/// Largest-eigenvalue eigenvector of the updated projector.
fn sme_reproject(next: &CMatrix) -> Result<CVector> {
    if !linalg::is_finite(next) {
        return Err(Error::NonFinite);
    }
    let (_, v) = linalg::dominant_eigenvector(next);
    let mut v = v;
    normalize_in_place(&mut v)?;
    Ok(v)
}

/// One step of the linear SSE. Returns the renormalized state and the
/// currents `J_k` evaluated at the input state.
pub fn step_linear(
    model: &LindbladModel,
    u: &UMatrix,
    state: &PureState,
    dxi: &NoiseIncrement,
    dt: f64,
) -> Result<(PureState, Vec<C64>)> {
    check_step_inputs(model, state.dim(), dxi, dt)?;
    let mut ws = Scratch::new(model.dim(), model.channels());
    let mut psi = state.amplitudes().clone();
    ws.apply_lindblads(model, &psi);
    ws.fill_currents(u.matrix(), &dxi.dxi, dt);
    linear_update(model, &mut psi, dt, &mut ws)?;
    Ok((PureState::from_normalized_unchecked(psi), ws.currents))
}

fn projector_error(p: &CMatrix) -> f64 {
    let n = p.nrows();
    let idem = linalg::max_abs_diff(&(p * p), p);
    let tr = (linalg::trace(p) - re(1.0)).norm();
    let herm = linalg::hermiticity_error(p);
    idem.max(tr).max(herm).max(if n == 0 { f64::INFINITY } else { 0.0 })
}

/// One step of the stochastic master equation. The noise correlations `u`
/// enter only through the statistics of `dxi`. The output is re-projected
/// onto the dominant eigenvector of the updated matrix.
pub fn step_sme(
    model: &LindbladModel,
    projector: &DensityMatrix,
    dxi: &NoiseIncrement,
    dt: f64,
) -> Result<DensityMatrix> {
    check_step_inputs(model, projector.dim(), dxi, dt)?;
    let err = projector_error(projector.matrix());
    if err > PROJECTOR_TOL {
        return Err(Error::NotProjector(err));
    }
    let next = sme_update_matrix(model, projector.matrix(), &dxi.dxi, dt);
    let v = sme_reproject(&next)?;
    Ok(PureState::from_normalized_unchecked(v).to_density())
}

/// Same update as [`step_sme`] but on a state vector (up to global phase).
pub fn step_sme_state(
    model: &LindbladModel,
    state: &PureState,
    dxi: &NoiseIncrement,
    dt: f64,
) -> Result<PureState> {
    check_step_inputs(model, state.dim(), dxi, dt)?;
    let next = sme_update_matrix(model, &state.projector(), &dxi.dxi, dt);
    Ok(PureState::from_normalized_unchecked(sme_reproject(&next)?))
}

/// `H_ψ = H + ½(i⟨c_k⟩* c_k + H.c.) - (i/2)(c_k - ⟨c_k⟩)†(c_k - ⟨c_k⟩)`
pub fn nonlinear_hamiltonian(model: &LindbladModel, state: &PureState) -> Result<CMatrix> {
    model.check_dim(state.dim())?;
    let n = model.dim();
    let id = CMatrix::identity(n, n);
    let mut h = model.hamiltonian().clone();
    for (c, m) in model.lindblads().iter().zip(model.lindblad_means(state)) {
        let mean_field = c * (I * m.conj());
        h += (&mean_field + mean_field.adjoint()) * re(0.5);
        let centered = c - &id * m;
        h -= centered.adjoint() * centered * (I * 0.5);
    }
    Ok(h)
}

/// One step of the nonlinear SSE, renormalized.
pub fn step_nonlinear_sse(
    model: &LindbladModel,
    state: &PureState,
    dxi: &NoiseIncrement,
    dt: f64,
) -> Result<PureState> {
    check_step_inputs(model, state.dim(), dxi, dt)?;
    let mut ws = Scratch::new(model.dim(), model.channels());
    let mut psi = state.amplitudes().clone();
    ws.apply_lindblads(model, &psi);
    nonlinear_update(model, &mut psi, &dxi.dxi, dt, &mut ws)?;
    Ok(PureState::from_normalized_unchecked(psi))
}

pub fn measurement_operator(model: &LindbladModel, currents: &[C64], dt: f64) -> Result<MeasurementOperator> {
    if currents.len() != model.channels() {
        return Err(Error::DimensionMismatch { expected: model.channels(), found: currents.len() });
    }
    if !is_positive(dt) {
        return Err(Error::Config(format!("dt must be positive, got {dt}")));
    }
    let n = model.dim();
    let mut m = CMatrix::identity(n, n) + model.drift() * re(dt);
    for (c, j) in model.lindblads().iter().zip(currents) {
        m += c * (j.conj() * dt);
    }
    Ok(MeasurementOperator { matrix: m })
}

/// `ΩρΩ† / Tr[ρΩ†Ω]`
pub fn apply_measurement(omega: &MeasurementOperator, rho: &DensityMatrix) -> Result<DensityMatrix> {
    let om = omega.matrix();
    if om.nrows() != rho.dim() {
        return Err(Error::DimensionMismatch { expected: om.nrows(), found: rho.dim() });
    }
    let num = om * rho.matrix() * om.adjoint();
    let likelihood = linalg::trace(&num).re;
    if likelihood.is_nan() || likelihood <= 1e-14 {
        return Err(Error::VanishingLikelihood(likelihood));
    }
    Ok(DensityMatrix::from_matrix_unchecked(linalg::hermitian_part(&num) / re(likelihood)))
}

/// Multiplies the state by `e^{i dχ}` with the real `dχ = f dξ* + f* dξ`.
pub fn gauge_transform_step(state: &PureState, f: C64, dxi: C64) -> PureState {
    let dchi = 2.0 * (f * dxi.conj()).re;
    PureState::from_normalized_unchecked(state.amplitudes() * C64::from_polar(1.0, dchi))
}

/// Resolves the unraveling at each step, caching state-independent choices.
enum UResolver {
    Fixed(UMatrix, NoiseFactor),
    StateDependent { sign: f64, current: UMatrix },
}

impl UResolver {
    fn new(spec: &UnravelingSpec, model: &LindbladModel, initial: &PureState) -> Result<Self> {
        let u = spec.resolve(model, initial)?;
        Ok(match spec {
            UnravelingSpec::InvariantStateDep { sign } => {
                Self::StateDependent { sign: *sign as f64, current: u }
            }
            _ => {
                let factor = NoiseFactor::new(&u)?;
                Self::Fixed(u, factor)
            }
        })
    }

    /// Requires `ws.apply_lindblads` at `psi`.
    fn update(&mut self, model: &LindbladModel, psi: &CVector, ws: &mut Scratch) -> Result<()> {
        if let Self::StateDependent { sign, current } = self {
            let m = ws.correlation_moment(model, psi);
            let r = extremal_r(&m, *sign);
            *current = UMatrix::new(m * re(r))?;
        }
        Ok(())
    }

    fn u(&self) -> &UMatrix {
        match self {
            Self::Fixed(u, _) => u,
            Self::StateDependent { current, .. } => current,
        }
    }

    fn factor(&self) -> Result<std::borrow::Cow<'_, NoiseFactor>> {
        match self {
            Self::Fixed(_, f) => Ok(std::borrow::Cow::Borrowed(f)),
            Self::StateDependent { current, .. } => Ok(std::borrow::Cow::Owned(NoiseFactor::new(current)?)),
        }
    }
}

/// Source of the Wiener increments for one step, given the `u` in force and
/// the zero-based step number.
pub enum NoiseSource<'a> {
    /// Fresh standard normals mapped through the factor of `u`.
    Normals(&'a mut dyn FnMut(&mut [f64])),
    /// Explicit increments, e.g. transformed or replayed ones.
    Increments(&'a mut dyn FnMut(usize, &UMatrix) -> NoiseIncrement),
}

/// Steps `initial` forward `steps` times with an arbitrary noise source.
#[allow(clippy::too_many_arguments)]
pub fn run_with_noise(
    model: &LindbladModel,
    spec: &UnravelingSpec,
    stepper: Stepper,
    initial: &PureState,
    dt: f64,
    steps: usize,
    record_stride: usize,
    mut noise: NoiseSource<'_>,
) -> Result<Trajectory> {
    model.check_dim(initial.dim())?;
    if record_stride == 0 || !is_positive(dt) {
        return Err(Error::Config("dt and record_stride must be positive".into()));
    }
    let k = model.channels();
    let mut resolver = UResolver::new(spec, model, initial)?;
    let mut ws = Scratch::new(model.dim(), k);
    let mut psi = initial.amplitudes().clone();
    let n_records = steps / record_stride + 1;
    let mut times = Vec::with_capacity(n_records);
    let mut states = Vec::with_capacity(n_records);
    let mut record = MeasurementRecord::default();

    for n in 0..=steps {
        let recording = n % record_stride == 0;
        let t = n as f64 * dt;
        if recording {
            times.push(t);
            states.push(PureState::from_normalized_unchecked(psi.clone()));
        }
        if n == steps {
            break;
        }
        ws.apply_lindblads(model, &psi);
        resolver.update(model, &psi, &mut ws)?;
        let dxi = match &mut noise {
            NoiseSource::Normals(draw) => {
                draw(&mut ws.z);
                resolver.factor()?.increment(dt, &ws.z)
            }
            NoiseSource::Increments(next) => {
                let dxi = next(n, resolver.u());
                if dxi.k() != k {
                    return Err(Error::DimensionMismatch { expected: k, found: dxi.k() });
                }
                dxi
            }
        };
        ws.fill_currents(resolver.u().matrix(), &dxi.dxi, dt);
        if recording {
            record.times.push(t);
            record.currents.push(ws.currents.clone());
            record.increments.push(dxi.dxi.clone());
        }
        match stepper {
            Stepper::Linear => linear_update(model, &mut psi, dt, &mut ws)?,
            Stepper::NonlinearSse => nonlinear_update(model, &mut psi, &dxi.dxi, dt, &mut ws)?,
            Stepper::Sme => {
                let next = sme_update_matrix(model, &(&psi * psi.adjoint()), &dxi.dxi, dt);
                psi = sme_reproject(&next)?;
            }
        }
    }
    Ok(Trajectory { trajectory_index: 0, times, states, record })
}

/// Runs one trajectory with the stream owned by `(seed, trajectory_index)`.
pub fn run_trajectory(model: &LindbladModel, config: &TrajectoryConfig, initial: &PureState) -> Result<Trajectory> {
    config.validate()?;
    let mut rng = trajectory_stream(config.seed, config.trajectory_index);
    let mut draw = |z: &mut [f64]| fill_standard_normal(&mut rng, z);
    let mut traj = run_with_noise(
        model,
        &config.unraveling,
        config.stepper,
        initial,
        config.dt,
        config.steps,
        config.record_stride,
        NoiseSource::Normals(&mut draw),
    )?;
    traj.trajectory_index = config.trajectory_index;
    Ok(traj)
}

fn csv_header(n: usize, k: usize, keyed: bool) -> Vec<String> {
    let mut h = Vec::with_capacity(1 + 2 * (n + k) + keyed as usize);
    if keyed {
        h.push("trajectory_index".to_string());
    }
    h.push("t".to_string());
    for i in 0..n {
        h.push(format!("re_psi_{i}"));
        h.push(format!("im_psi_{i}"));
    }
    for i in 0..k {
        h.push(format!("re_J_{i}"));
        h.push(format!("im_J_{i}"));
    }
    h
}

fn csv_rows(traj: &Trajectory, k: usize, keyed: bool) -> Vec<Vec<String>> {
    traj.times
        .iter()
        .zip(&traj.states)
        .enumerate()
        .map(|(i, (t, s))| {
            let mut row = Vec::new();
            if keyed {
                row.push(traj.trajectory_index.to_string());
            }
            row.push(t.to_string());
            for a in s.amplitudes().iter() {
                row.push(a.re.to_string());
                row.push(a.im.to_string());
            }
            // the final recorded state has no following step, hence no current
            match traj.record.currents.get(i) {
                Some(js) => {
                    for j in js {
                        row.push(j.re.to_string());
                        row.push(j.im.to_string());
                    }
                }
                None => row.extend(std::iter::repeat_n("NaN".to_string(), 2 * k)),
            }
            row
        })
        .collect()
}

/// Writes `t,re_psi_0,im_psi_0,…,re_J_0,im_J_0,…`; the row of the final
/// state carries `NaN` currents.
pub fn write_trajectory_csv<W: Write>(out: W, traj: &Trajectory, k: usize) -> Result<()> {
    let n = traj.states.first().map_or(0, |s| s.dim());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(csv_header(n, k, false))?;
    for row in csv_rows(traj, k, false) {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Combined file with a leading `trajectory_index` column.
pub fn write_combined_csv<W: Write>(out: W, trajs: &[Trajectory], k: usize) -> Result<()> {
    let n = trajs.first().and_then(|t| t.states.first()).map_or(0, |s| s.dim());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(csv_header(n, k, true))?;
    for traj in trajs {
        for row in csv_rows(traj, k, true) {
            w.write_record(row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One parsed CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub trajectory_index: Option<u64>,
    pub t: f64,
    pub amplitudes: Vec<C64>,
    pub currents: Vec<C64>,
}

/// Parses files written by [`write_trajectory_csv`] or [`write_combined_csv`].
pub fn read_trajectory_csv<R: Read>(input: R) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    let keyed = headers.get(0) == Some("trajectory_index");
    let n = headers.iter().filter(|h| h.starts_with("re_psi_")).count();
    let k = headers.iter().filter(|h| h.starts_with("re_J_")).count();
    let offset = keyed as usize;
    let parse = |s: &str| -> Result<f64> {
        s.parse::<f64>().map_err(|e| Error::Config(format!("bad number {s:?}: {e}")))
    };
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).ok_or_else(|| Error::Config("short CSV row".into()));
        let trajectory_index = if keyed {
            Some(field(0)?.parse().map_err(|e| Error::Config(format!("bad index: {e}")))?)
        } else {
            None
        };
        let t = parse(field(offset)?)?;
        let pair = |i: usize| -> Result<C64> { Ok(C64::new(parse(field(i)?)?, parse(field(i + 1)?)?)) };
        let amplitudes = (0..n).map(|i| pair(offset + 1 + 2 * i)).collect::<Result<_>>()?;
        let currents = (0..k).map(|i| pair(offset + 1 + 2 * n + 2 * i)).collect::<Result<_>>()?;
        rows.push(CsvRow { trajectory_index, t, amplitudes, currents });
    }
    Ok(rows)
}
