//! Deterministic master-equation reference: RK4 integration, stationary
//! states and ensemble-versus-oracle statistics.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::operators::{liouvillian_unchecked, re, CMatrix, DensityMatrix, LindbladModel, PureState};
use crate::stats;

/// Relative singular-value threshold deciding the stationary kernel.
pub const KERNEL_TOL: f64 = 1e-8;
/// Absolute slack added to statistical gates to absorb floating-point
/// round-off when the ensemble is deterministic (e.g. at `t = 0`).
pub const ROUNDOFF_TOL: f64 = 1e-10;

/// Classical RK4 on `ρ̇ = Lρ`. Returns `steps + 1` matrices starting with
/// `rho0`.
pub fn integrate_master(model: &LindbladModel, rho0: &DensityMatrix, dt: f64, steps: usize) -> Result<Vec<DensityMatrix>> {
    integrate_master_strided(model, rho0, dt, steps, 1)
}

/// As [`integrate_master`], keeping every `stride`-th matrix.
pub fn integrate_master_strided(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    dt: f64,
    steps: usize,
    stride: usize,
) -> Result<Vec<DensityMatrix>> {
    model.check_dim(rho0.dim())?;
    if !crate::trajectory::is_positive(dt) || stride == 0 {
        return Err(Error::Config("dt and stride must be positive".into()));
    }
    let l = |r: &CMatrix| liouvillian_unchecked(model, r);
    let mut rho = rho0.matrix().clone();
    let mut out = Vec::with_capacity(steps / stride + 1);
    out.push(rho0.clone());
    let half = re(0.5 * dt);
    let full = re(dt);
    let sixth = re(dt / 6.0);
    for n in 1..=steps {
        let k1 = l(&rho);
        let k2 = l(&(&rho + &k1 * half));
        let k3 = l(&(&rho + &k2 * half));
        let k4 = l(&(&rho + &k3 * full));
        rho += (k1 + (k2 + k3) * re(2.0) + k4) * sixth;
        if n % stride == 0 {
            out.push(DensityMatrix::from_matrix_unchecked(rho.clone()));
        }
    }
    Ok(out)
}

/// `N² × N²` matrix of `L` acting on column-stacked `vec(ρ)`.
pub fn generator_matrix(model: &LindbladModel) -> CMatrix {
    let n = model.dim();
    let mut sup = CMatrix::zeros(n * n, n * n);
    for j in 0..n {
        for i in 0..n {
            let mut e = CMatrix::zeros(n, n);
            e[(i, j)] = re(1.0);
            let col = linalg::vectorize(&liouvillian_unchecked(model, &e));
            sup.set_column(i + n * j, &col);
        }
    }
    sup
}

/// Unique trace-one stationary state from the kernel of the vectorized
/// generator.
pub fn steady_state(model: &LindbladModel) -> Result<DensityMatrix> {
    let n = model.dim();
    let sup = generator_matrix(model);
    let svd = sup.svd(false, true);
    let v_t = svd.v_t.as_ref().expect("requested V");
    let s = &svd.singular_values;
    let smax = s.iter().copied().fold(0.0, f64::max);
    let threshold = KERNEL_TOL * smax.max(1.0);
    let kernel: Vec<usize> = (0..s.len()).filter(|&i| s[i] <= threshold).collect();
    if kernel.len() != 1 {
        return Err(Error::DegenerateSteadyState(kernel.len()));
    }
    // right singular vector = conjugated row of V†
    let v = v_t.row(kernel[0]).adjoint();
    let rho = linalg::unvectorize(&v, n);
    let tr = linalg::trace(&rho);
    let rho = linalg::hermitian_part(&(rho / tr));
    let residual = liouvillian_unchecked(model, &rho).norm();
    if residual > 1e-10 {
        return Err(Error::DegenerateSteadyState(0));
    }
    Ok(DensityMatrix::from_matrix_unchecked(rho))
}

#[derive(Debug, Clone)]
pub struct EnsembleSummary {
    pub times: Vec<f64>,
    pub mean_state: Vec<DensityMatrix>,
    pub trace_distance: Vec<f64>,
    /// Jackknife standard error of the trace distance.
    pub standard_error: Vec<f64>,
    pub n_trajectories: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryJson<'a> {
    pub times: &'a [f64],
    pub trace_distance: &'a [f64],
    pub stderr: &'a [f64],
    pub n_trajectories: usize,
    pub passed: bool,
}

impl EnsembleSummary {
    /// `distance ≤ k·se` at every time, up to [`ROUNDOFF_TOL`].
    pub fn passes(&self, k: f64) -> bool {
        self.failures(k).is_empty()
    }

    /// Times at which the gate fails.
    pub fn failures(&self, k: f64) -> Vec<f64> {
        self.times
            .iter()
            .zip(self.trace_distance.iter().zip(&self.standard_error))
            .filter(|(_, (d, se))| **d > k * **se + ROUNDOFF_TOL)
            .map(|(t, _)| *t)
            .collect()
    }

    pub fn to_json(&self, k: f64) -> Result<String> {
        let j = SummaryJson {
            times: &self.times,
            trace_distance: &self.trace_distance,
            stderr: &self.standard_error,
            n_trajectories: self.n_trajectories,
            passed: self.passes(k),
        };
        Ok(serde_json::to_string_pretty(&j)?)
    }
}

/// Mean projector per time, its trace distance to the oracle and the
/// jackknife standard error of that distance. `states[i][t]` is trajectory
/// `i` at time index `t`.
pub fn ensemble_summary(times: &[f64], states: &[Vec<PureState>], oracle: &[DensityMatrix]) -> Result<EnsembleSummary> {
    if oracle.len() != times.len() || states.iter().any(|s| s.len() != times.len()) {
        return Err(Error::GridMismatch);
    }
    let m = states.len();
    if m == 0 {
        return Err(Error::Config("empty ensemble".into()));
    }
    let n = oracle[0].dim();
    let mf = m as f64;
    let mut mean_state = Vec::with_capacity(times.len());
    let mut trace_distance = Vec::with_capacity(times.len());
    let mut standard_error = Vec::with_capacity(times.len());
    for (ti, target) in oracle.iter().enumerate() {
        let projectors: Vec<CMatrix> = states.iter().map(|s| s[ti].projector()).collect();
        let sum = projectors.iter().fold(CMatrix::zeros(n, n), |acc, p| acc + p);
        let mean = &sum / re(mf);
        trace_distance.push(linalg::trace_distance(&mean, target.matrix()));
        let se = if m > 1 {
            let loo: Vec<f64> = projectors
                .iter()
                .map(|p| linalg::trace_distance(&((&sum - p) / re(mf - 1.0)), target.matrix()))
                .collect();
            stats::jackknife_se(&loo)
        } else {
            0.0
        };
        standard_error.push(se);
        mean_state.push(DensityMatrix::from_matrix_unchecked(linalg::hermitian_part(&mean)));
    }
    Ok(EnsembleSummary { times: times.to_vec(), mean_state, trace_distance, standard_error, n_trajectories: m })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::pauli;
    use approx::assert_abs_diff_eq;

    fn atom(gamma: f64, omega: f64) -> LindbladModel {
        LindbladModel::new(pauli::sigma_x() * re(omega / 2.0), vec![pauli::sigma() * re(gamma.sqrt())]).unwrap()
    }

    fn bloch(m: &CMatrix) -> [f64; 3] {
        [
            linalg::trace(&(pauli::sigma_x() * m)).re,
            linalg::trace(&(pauli::sigma_y() * m)).re,
            linalg::trace(&(pauli::sigma_z() * m)).re,
        ]
    }

    /// RK4 on the optical Bloch equations, written independently of the
    /// matrix generator.
    fn bloch_ode(gamma: f64, omega: f64, b0: [f64; 3], dt: f64, steps: usize) -> [f64; 3] {
        let f = |b: [f64; 3]| {
            [
                -0.5 * gamma * b[0],
                -0.5 * gamma * b[1] - omega * b[2],
                omega * b[1] - gamma * (b[2] + 1.0),
            ]
        };
        let add = |a: [f64; 3], b: [f64; 3], s: f64| [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]];
        let mut b = b0;
        for _ in 0..steps {
            let k1 = f(b);
            let k2 = f(add(b, k1, dt / 2.0));
            let k3 = f(add(b, k2, dt / 2.0));
            let k4 = f(add(b, k3, dt));
            for i in 0..3 {
                b[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        b
    }

    #[test]
    fn commuting_state_is_constant() {
        let m = LindbladModel::new(pauli::sigma_z(), vec![]).unwrap();
        let rho = PureState::new(pauli::excited()).unwrap().to_density();
        let series = integrate_master(&m, &rho, 0.01, 50).unwrap();
        assert!(series.iter().all(|r| r == &rho));
    }

    #[test]
    fn decay_is_exponential() {
        let m = atom(1.0, 0.0);
        let rho = PureState::new(pauli::excited()).unwrap().to_density();
        let series = integrate_master(&m, &rho, 1e-3, 3000).unwrap();
        for (n, r) in series.iter().enumerate().step_by(250) {
            let t = n as f64 * 1e-3;
            assert_abs_diff_eq!(r.matrix()[(0, 0)].re, (-t).exp(), epsilon = 1e-8);
            assert_abs_diff_eq!(linalg::trace(r.matrix()).re, 1.0, epsilon = 1e-12);
            assert!(linalg::hermiticity_error(r.matrix()) < 1e-12);
        }
    }

    #[test]
    fn fluorescence_matches_bloch_equations() {
        let (gamma, omega) = (1.0, 10.0);
        let m = atom(gamma, omega);
        let plus = PureState::from_slice(&[re(1.0), re(1.0)]).unwrap().to_density();
        let dt = 1e-3;
        let series = integrate_master(&m, &plus, dt, 2000).unwrap();
        for n in [0usize, 500, 1000, 2000] {
            let b = bloch(series[n].matrix());
            let expect = bloch_ode(gamma, omega, [1.0, 0.0, 0.0], dt, n);
            for i in 0..3 {
                assert_abs_diff_eq!(b[i], expect[i], epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn richardson_halving_shows_fourth_order() {
        let m = atom(1.0, 10.0);
        let plus = PureState::from_slice(&[re(1.0), re(1.0)]).unwrap().to_density();
        let end = |dt: f64, steps: usize| integrate_master(&m, &plus, dt, steps).unwrap().pop().unwrap();
        let r1 = end(0.02, 50);
        let r2 = end(0.01, 100);
        let r4 = end(0.005, 200);
        let e1 = linalg::max_abs_diff(r1.matrix(), r2.matrix());
        let e2 = linalg::max_abs_diff(r2.matrix(), r4.matrix());
        let order = (e1 / e2).log2();
        assert!((order - 4.0).abs() < 0.3, "observed order {order}");
    }

    #[test]
    fn steady_state_examples() {
        let decay = steady_state(&atom(1.0, 0.0)).unwrap();
        assert_abs_diff_eq!(decay.matrix()[(1, 1)].re, 1.0, epsilon = 1e-10);

        let ss = steady_state(&atom(1.0, 10.0)).unwrap();
        let b = bloch(ss.matrix());
        assert_abs_diff_eq!(b[0], 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(b[1], 20.0 / 201.0, epsilon = 1e-9);
        assert_abs_diff_eq!(b[2], -1.0 / 201.0, epsilon = 1e-9);

        let unitary = LindbladModel::new(pauli::sigma_z(), vec![]).unwrap();
        assert!(matches!(steady_state(&unitary), Err(Error::DegenerateSteadyState(2))));
    }

    #[test]
    fn steady_state_is_fixed_point() {
        let m = atom(0.7, 3.0);
        let ss = steady_state(&m).unwrap();
        let series = integrate_master(&m, &ss, 1e-2, 500).unwrap();
        assert!(linalg::max_abs_diff(series.last().unwrap().matrix(), ss.matrix()) < 1e-8);
    }

    #[test]
    fn identical_ensemble_has_zero_distance() {
        let e = PureState::new(pauli::excited()).unwrap();
        let states = vec![vec![e.clone(), e.clone()]; 10];
        let oracle = vec![e.to_density(); 2];
        let s = ensemble_summary(&[0.0, 1.0], &states, &oracle).unwrap();
        assert!(s.trace_distance.iter().all(|d| *d < 1e-15));
        assert!(s.passes(3.0));
        assert!(matches!(ensemble_summary(&[0.0], &states, &oracle), Err(Error::GridMismatch)));
    }
}
