//! The `u`-matrix parameterization of diffusive unravelings.
//!
//! The complex Wiener increments satisfy `dξ_j dξ_k* = δ_jk dt` and
//! `dξ_j dξ_k = u_jk dt`. A symmetric `u` is admissible iff the covariance of
//! `(Re dξ, Im dξ)` is positive semi-definite, which holds iff `‖u‖ ≤ 1` in
//! the spectral norm.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::operators::{matrix_to_rows, re, rows_to_matrix, CMatrix, LindbladModel, PureState, C64};
use crate::rng::fill_standard_normal;

pub const SYMMETRY_TOL: f64 = 1e-12;
pub const NORM_TOL: f64 = 1e-10;
/// Eigenvalues of the real covariance in `[-CLAMP_TOL, 0]` are treated as zero.
pub const CLAMP_TOL: f64 = 1e-10;
/// Below this norm the invariant construction falls back to `u = 0`.
pub const DEGENERATE_NORM: f64 = 1e-9;

/// Validated noise-correlation matrix: symmetric with spectral norm ≤ 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<[f64; 2]>>", into = "Vec<Vec<[f64; 2]>>")]
pub struct UMatrix(CMatrix);

impl UMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        validate(&m)?;
        Ok(Self(m))
    }

    pub fn zeros(k: usize) -> Self {
        Self(CMatrix::zeros(k, k))
    }

    pub fn scalar(u: C64) -> Result<Self> {
        Self::new(CMatrix::from_element(1, 1, u))
    }

    pub fn k(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        spectral_norm(&self.0)
    }
}

impl TryFrom<Vec<Vec<[f64; 2]>>> for UMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<[f64; 2]>>) -> Result<Self> {
        let k = rows.len();
        UMatrix::new(rows_to_matrix(&rows, k)?)
    }
}

impl From<UMatrix> for Vec<Vec<[f64; 2]>> {
    fn from(u: UMatrix) -> Self {
        matrix_to_rows(&u.0)
    }
}

/// One complex Wiener increment per Lindblad channel.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseIncrement {
    pub dxi: Vec<C64>,
}

impl NoiseIncrement {
    pub fn zeros(k: usize) -> Self {
        Self { dxi: vec![C64::new(0.0, 0.0); k] }
    }

    pub fn k(&self) -> usize {
        self.dxi.len()
    }
}

/// Largest singular value.
pub fn spectral_norm(u: &CMatrix) -> f64 {
    if u.nrows() == 1 && u.ncols() == 1 {
        return u[(0, 0)].norm();
    }
    linalg::operator_norm(u)
}

/// Covariance of `(Re dξ, Im dξ)`:
/// `(dt/2) [[1 + Re u, Im u], [Im u, 1 - Re u]]`.
pub fn real_embedding(u: &CMatrix, dt: f64) -> DMatrix<f64> {
    let k = u.nrows();
    DMatrix::from_fn(2 * k, 2 * k, |r, c| {
        let (i, j) = (r % k, c % k);
        let delta = if i == j { 1.0 } else { 0.0 };
        let z = u[(i, j)];
        let v = match (r < k, c < k) {
            (true, true) => delta + z.re,
            (false, false) => delta - z.re,
            _ => z.im,
        };
        0.5 * dt * v
    })
}

pub fn validate(u: &CMatrix) -> Result<()> {
    if u.nrows() != u.ncols() {
        return Err(Error::DimensionMismatch { expected: u.nrows(), found: u.ncols() });
    }
    if !linalg::is_finite(u) {
        return Err(Error::NonFinite);
    }
    let asym = linalg::max_abs_diff(u, &u.transpose());
    if asym > SYMMETRY_TOL {
        return Err(Error::Asymmetric(asym));
    }
    let norm = spectral_norm(u);
    if norm > 1.0 + NORM_TOL {
        return Err(Error::NormExceeded(norm));
    }
    Ok(())
}

/// Linear map from `2K` independent standard normals to `√dt`-scaled
/// increments with the correlations of a fixed `u`.
#[derive(Debug, Clone)]
pub struct NoiseFactor {
    k: usize,
    /// Row-major `2K × 2K` square root of the unit-`dt` covariance.
    root: Vec<f64>,
}

impl NoiseFactor {
    /// Eigendecomposes the real covariance, clamping eigenvalues in
    /// `[-CLAMP_TOL, 0]` to zero so `‖u‖ = 1` is sampled exactly.
    pub fn new(u: &UMatrix) -> Result<Self> {
        let k = u.k();
        if k == 0 {
            return Ok(Self { k, root: Vec::new() });
        }
        if k == 1 {
            return Ok(Self::single(u.matrix()[(0, 0)]));
        }
        let cov = real_embedding(u.matrix(), 1.0);
        let eig = cov.symmetric_eigen();
        let n = 2 * k;
        let mut root = vec![0.0; n * n];
        for (col, &lambda) in eig.eigenvalues.iter().enumerate() {
            if lambda < -CLAMP_TOL {
                return Err(Error::CovarianceFactorization(lambda));
            }
            let s = lambda.max(0.0).sqrt();
            for row in 0..n {
                root[row * n + col] = eig.eigenvectors[(row, col)] * s;
            }
        }
        Ok(Self { k, root })
    }

    /// Closed-form eigendecomposition of the `2×2` covariance: eigenvalues
    /// `(1 ± |u|)/2` along directions rotated by `arg(u)/2`.
    fn single(u: C64) -> Self {
        let (r, phi) = u.to_polar();
        let r = r.min(1.0);
        let (s, c) = (0.5 * phi).sin_cos();
        let a = (0.5 * (1.0 + r)).sqrt();
        let b = (0.5 * (1.0 - r)).sqrt();
        // dξ = e^{iφ/2}(a z₀ + i b z₁)
        Self { k: 1, root: vec![a * c, -b * s, a * s, b * c] }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn normals_needed(&self) -> usize {
        2 * self.k
    }

    /// Maps standard normals `z` (length `2K`) to an increment.
    pub fn increment(&self, dt: f64, z: &[f64]) -> NoiseIncrement {
        let n = 2 * self.k;
        let sdt = dt.sqrt();
        let mut dxi = vec![C64::new(0.0, 0.0); self.k];
        for (i, d) in dxi.iter_mut().enumerate() {
            let row_re = &self.root[i * n..(i + 1) * n];
            let row_im = &self.root[(i + self.k) * n..(i + self.k + 1) * n];
            let x: f64 = row_re.iter().zip(z).map(|(a, b)| a * b).sum();
            let y: f64 = row_im.iter().zip(z).map(|(a, b)| a * b).sum();
            *d = C64::new(sdt * x, sdt * y);
        }
        NoiseIncrement { dxi }
    }
}

pub fn sample_increments<R: Rng + ?Sized>(u: &UMatrix, dt: f64, rng: &mut R) -> Result<NoiseIncrement> {
    let factor = NoiseFactor::new(u)?;
    let mut z = vec![0.0; factor.normals_needed()];
    fill_standard_normal(rng, &mut z);
    Ok(factor.increment(dt, &z))
}

/// `M_jk = ½⟨{c_j - ⟨c_j⟩, c_k - ⟨c_k⟩}⟩`, the symmetrized second moment
/// that the state-dependent invariant `u` is proportional to.
pub fn correlation_moment(model: &LindbladModel, state: &PureState) -> CMatrix {
    let psi = state.amplitudes();
    let k = model.channels();
    let applied: Vec<_> = model.lindblads().iter().map(|c| c * psi).collect();
    let adj_applied: Vec<_> = model.adjoints().iter().map(|cd| cd * psi).collect();
    let means: Vec<C64> = applied.iter().map(|v| psi.dotc(v)).collect();
    CMatrix::from_fn(k, k, |j, l| {
        // ⟨c_j c_l⟩ = (c_j†ψ)† (c_l ψ)
        let jl = adj_applied[j].dotc(&applied[l]);
        let lj = adj_applied[l].dotc(&applied[j]);
        0.5 * (jl + lj) - means[j] * means[l]
    })
}

/// `u_jk = R ⟨(c_j - ⟨c_j⟩)(c_k - ⟨c_k⟩)⟩`, symmetrized. Not validated: large
/// `|R|` can exceed the positivity bound.
pub fn u_state_dependent(model: &LindbladModel, state: &PureState, r: C64) -> CMatrix {
    correlation_moment(model, state) * r
}

/// `u_jk = R Tr[(c_j - Tr c_j/N)(c_k - Tr c_k/N)]`. Not validated.
pub fn u_trace(model: &LindbladModel, r: C64) -> CMatrix {
    let n = model.dim();
    let id = CMatrix::identity(n, n);
    let centered: Vec<CMatrix> = model
        .lindblads()
        .iter()
        .map(|c| c - &id * (linalg::trace(c) / n as f64))
        .collect();
    let k = centered.len();
    CMatrix::from_fn(k, k, |j, l| {
        let jl = linalg::trace(&(&centered[j] * &centered[l]));
        let lj = linalg::trace(&(&centered[l] * &centered[j]));
        0.5 * (jl + lj) * r
    })
}

/// Real `R = sign/‖M‖` making `‖R M‖ = 1`, or `0` when `‖M‖ ≤ 1e-9`.
pub fn extremal_r(m: &CMatrix, sign: f64) -> f64 {
    let norm = spectral_norm(m);
    if norm > DEGENERATE_NORM {
        sign.signum() / norm
    } else {
        0.0
    }
}

/// Beam-splitter homodyne pair: `u = η e^{2iθ₁} + (1-η) e^{2iθ₂}`.
pub fn homodyne_u(eta: f64, theta1: f64, theta2: f64) -> Result<UMatrix> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::EfficiencyOutOfRange(eta));
    }
    let u = C64::from_polar(eta, 2.0 * theta1) + C64::from_polar(1.0 - eta, 2.0 * theta2);
    UMatrix::scalar(u)
}

/// Which diffusive unraveling to simulate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum UnravelingSpec {
    Fixed { u: UMatrix },
    /// Single-channel beam-splitter homodyne scheme.
    Homodyne { eta: f64, theta1: f64, theta2: f64 },
    /// `u = 0`
    Heterodyne,
    /// State-dependent invariant `u` with real `R` at its extremal value of
    /// the given sign (`+1` or `-1`).
    #[serde(rename = "invariant")]
    InvariantStateDep { sign: i32 },
    /// State-independent invariant `u` built from traces.
    InvariantTrace {
        #[serde(rename = "R")]
        r: f64,
    },
}

impl UnravelingSpec {
    pub fn is_state_dependent(&self) -> bool {
        matches!(self, Self::InvariantStateDep { .. })
    }

    /// Checks the spec against a model without needing a state.
    pub fn check(&self, model: &LindbladModel) -> Result<()> {
        let k = model.channels();
        match self {
            Self::Fixed { u } if u.k() != k => {
                Err(Error::DimensionMismatch { expected: k, found: u.k() })
            }
            Self::Homodyne { .. } if k != 1 => Err(Error::HomodyneRequiresSingleChannel(k)),
            Self::InvariantStateDep { sign } if sign.abs() != 1 => {
                Err(Error::Config(format!("invariant sign must be +1 or -1, got {sign}")))
            }
            Self::InvariantTrace { .. } => UMatrix::new(u_trace(model, re(self.trace_r()))).map(|_| ()),
            _ => Ok(()),
        }
    }

    fn trace_r(&self) -> f64 {
        match self {
            Self::InvariantTrace { r } => *r,
            _ => 0.0,
        }
    }

    /// The `u` in force at `state`.
    pub fn resolve(&self, model: &LindbladModel, state: &PureState) -> Result<UMatrix> {
        self.check(model)?;
        match self {
            Self::Fixed { u } => Ok(u.clone()),
            Self::Homodyne { eta, theta1, theta2 } => homodyne_u(*eta, *theta1, *theta2),
            Self::Heterodyne => Ok(UMatrix::zeros(model.channels())),
            Self::InvariantStateDep { sign } => {
                let m = correlation_moment(model, state);
                let r = extremal_r(&m, *sign as f64);
                UMatrix::new(m * re(r))
            }
            Self::InvariantTrace { r } => UMatrix::new(u_trace(model, re(*r))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{pauli, rotate_lindblads};
    use crate::random;
    use crate::rng::trajectory_stream;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    /// Power iteration on `u† u`, independent of the SVD route.
    fn power_norm(u: &CMatrix) -> f64 {
        let g = u.adjoint() * u;
        let mut v = crate::CVector::from_fn(u.ncols(), |i, _| C64::new(1.0 + i as f64, 0.3));
        let mut lambda = 0.0;
        for _ in 0..5000 {
            let w = &g * &v;
            let n = w.norm();
            if n == 0.0 {
                return 0.0;
            }
            lambda = n;
            v = w / re(n);
        }
        lambda.sqrt()
    }

    fn decay_model(gamma: f64) -> LindbladModel {
        LindbladModel::new(CMatrix::zeros(2, 2), vec![pauli::sigma() * re(gamma.sqrt())]).unwrap()
    }

    #[test]
    fn spectral_norm_examples() {
        assert_eq!(spectral_norm(&CMatrix::zeros(1, 1)), 0.0);
        assert_eq!(spectral_norm(&CMatrix::from_element(1, 1, re(1.0))), 1.0);
        let mut rng = trajectory_stream(11, 0);
        for _ in 0..5 {
            let u = random::symmetric(&mut rng, 3);
            assert_abs_diff_eq!(spectral_norm(&u), power_norm(&u), epsilon = 1e-10);
        }
    }

    #[test]
    fn real_embedding_examples() {
        let e0 = real_embedding(&CMatrix::zeros(1, 1), 1.0);
        assert_eq!(e0, DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.5]));
        let e = real_embedding(&CMatrix::from_element(1, 1, re(0.5)), 1.0);
        assert_eq!(e, DMatrix::from_row_slice(2, 2, &[0.75, 0.0, 0.0, 0.25]));
        assert_abs_diff_eq!(linalg::real_symmetric_eigenvalues(&e)[0], 0.25);
        let e1 = real_embedding(&CMatrix::from_element(1, 1, re(1.0)), 1.0);
        assert_eq!(linalg::real_symmetric_eigenvalues(&e1), vec![0.0, 1.0]);
    }

    #[test]
    fn validate_examples() {
        assert!(validate(&CMatrix::from_element(1, 1, re(1.0))).is_ok());
        assert!(matches!(
            validate(&CMatrix::from_element(1, 1, re(1.01))),
            Err(Error::NormExceeded(_))
        ));
        let asym = CMatrix::from_row_slice(2, 2, &[re(0.0), re(0.1), re(0.2), re(0.0)]);
        assert!(matches!(validate(&asym), Err(Error::Asymmetric(_))));

        let mut rng = trajectory_stream(5, 0);
        let u = random::symmetric_with_norm(&mut rng, 2, 0.9);
        assert!(validate(&u).is_ok());
        let dt = 0.01;
        let min = linalg::real_symmetric_eigenvalues(&real_embedding(&u, dt))[0];
        assert_abs_diff_eq!(min, 0.05 * dt, epsilon = 1e-10);
    }

    struct Moments {
        k: usize,
        n: usize,
        herm: CMatrix,
        sym: CMatrix,
        herm_sq: DMatrix<f64>,
        sym_sq: DMatrix<f64>,
    }

    fn moments(u: &UMatrix, dt: f64, n: usize, seed: u64) -> Moments {
        let factor = NoiseFactor::new(u).unwrap();
        let k = u.k();
        let mut rng = trajectory_stream(seed, 0);
        let mut z = vec![0.0; 2 * k];
        let mut herm = CMatrix::zeros(k, k);
        let mut sym = CMatrix::zeros(k, k);
        let mut herm_sq = DMatrix::zeros(k, k);
        let mut sym_sq = DMatrix::zeros(k, k);
        for _ in 0..n {
            fill_standard_normal(&mut rng, &mut z);
            let d = factor.increment(dt, &z).dxi;
            for i in 0..k {
                for j in 0..k {
                    let h = d[i] * d[j].conj();
                    let s = d[i] * d[j];
                    herm[(i, j)] += h;
                    sym[(i, j)] += s;
                    herm_sq[(i, j)] += h.norm_sqr();
                    sym_sq[(i, j)] += s.norm_sqr();
                }
            }
        }
        Moments { k, n, herm, sym, herm_sq, sym_sq }
    }

    fn assert_moments(m: &Moments, u: &UMatrix, dt: f64) {
        let n = m.n as f64;
        for i in 0..m.k {
            for j in 0..m.k {
                let delta = if i == j { 1.0 } else { 0.0 };
                let hm = m.herm[(i, j)] / n;
                let sm = m.sym[(i, j)] / n;
                // standard error bound from the second moment of |product|
                let h_se = ((m.herm_sq[(i, j)] / n) / n).sqrt();
                let s_se = ((m.sym_sq[(i, j)] / n) / n).sqrt();
                assert!((hm - re(delta * dt)).norm() <= 3.0 * h_se, "herm {i}{j}: {hm}");
                assert!((sm - u.matrix()[(i, j)] * dt).norm() <= 3.0 * s_se, "sym {i}{j}: {sm}");
            }
        }
    }

    #[test]
    fn heterodyne_increments_are_isotropic() {
        let dt = 0.01;
        let u = UMatrix::zeros(1);
        let factor = NoiseFactor::new(&u).unwrap();
        let mut rng = trajectory_stream(1, 0);
        let n = 100_000;
        let (mut xx, mut yy, mut xy) = (Vec::new(), Vec::new(), Vec::new());
        let mut z = [0.0; 2];
        for _ in 0..n {
            fill_standard_normal(&mut rng, &mut z);
            let d = factor.increment(dt, &z).dxi[0];
            xx.push(d.re * d.re);
            yy.push(d.im * d.im);
            xy.push(d.re * d.im);
        }
        for (series, target) in [(&xx, dt / 2.0), (&yy, dt / 2.0), (&xy, 0.0)] {
            let (mean, se) = crate::stats::mean_and_se(series);
            assert!((mean - target).abs() <= 3.0 * se, "{mean} vs {target} (se {se})");
        }
    }

    #[test]
    fn homodyne_increments_are_real() {
        let dt = 0.01;
        let u = UMatrix::scalar(re(1.0)).unwrap();
        let factor = NoiseFactor::new(&u).unwrap();
        let mut rng = trajectory_stream(2, 0);
        let mut z = [0.0; 2];
        let mut sq = Vec::new();
        for _ in 0..100_000 {
            fill_standard_normal(&mut rng, &mut z);
            let d = factor.increment(dt, &z).dxi[0];
            assert_eq!(d.im, 0.0);
            sq.push(d.re * d.re);
        }
        let (mean, se) = crate::stats::mean_and_se(&sq);
        assert!((mean - dt).abs() <= 3.0 * se);
    }

    #[test]
    fn correlated_two_channel_moments() {
        let mut rng = trajectory_stream(3, 1);
        let u = UMatrix::new(random::symmetric_with_norm(&mut rng, 2, 0.8)).unwrap();
        let dt = 0.02;
        let m = moments(&u, dt, 100_000, 4);
        assert_moments(&m, &u, dt);
    }

    #[test]
    fn general_factor_matches_single_channel_closed_form() {
        // K = 1 uses the closed form; compare the covariance it implies with
        // the embedding.
        for &u in &[re(0.3), C64::new(-0.2, 0.7), C64::from_polar(1.0, 2.1)] {
            let f = NoiseFactor::new(&UMatrix::scalar(u).unwrap()).unwrap();
            let r = DMatrix::from_row_slice(2, 2, &f.root);
            let cov = &r * r.transpose();
            let target = real_embedding(&CMatrix::from_element(1, 1, u), 1.0);
            assert!((cov - target).abs().max() < 1e-14);
        }
    }

    #[test]
    fn state_dependent_examples() {
        let gamma = 0.7;
        let m = decay_model(gamma);
        let mut rng = trajectory_stream(8, 0);
        let psi = random::state(&mut rng, 2);
        let zero = u_state_dependent(&m, &psi, re(0.0));
        assert!(zero.iter().all(|z| z.norm() == 0.0));

        let s = crate::operators::expectation(&pauli::sigma(), &psi).unwrap();
        let mom = correlation_moment(&m, &psi);
        // M = -γ s²
        assert_abs_diff_eq!((mom[(0, 0)] + s * s * gamma).norm(), 0.0, epsilon = 1e-14);
        let r = extremal_r(&mom, 1.0);
        assert_abs_diff_eq!(r, 1.0 / (gamma * s.norm_sqr()), epsilon = 1e-9);
        let u = mom.clone() * re(r);
        assert_abs_diff_eq!((u[(0, 0)] + s / s.conj()).norm(), 0.0, epsilon = 1e-12);
        let un = mom * re(extremal_r(&correlation_moment(&m, &psi), -1.0));
        assert_abs_diff_eq!((un[(0, 0)] - s / s.conj()).norm(), 0.0, epsilon = 1e-12);

        let e = PureState::new(pauli::excited()).unwrap();
        let ue = u_state_dependent(&m, &e, re(123.0));
        assert_eq!(ue[(0, 0)].norm(), 0.0);
        assert_eq!(extremal_r(&CMatrix::zeros(1, 1), 1.0), 0.0);
    }

    #[test]
    fn trace_examples() {
        let m = decay_model(1.0);
        assert!(u_trace(&m, re(5.0)).iter().all(|z| z.norm() == 0.0));
        let x = LindbladModel::new(CMatrix::zeros(2, 2), vec![pauli::sigma_x()]).unwrap();
        assert_abs_diff_eq!(u_trace(&x, re(0.3))[(0, 0)].re, 0.6, epsilon = 1e-15);
        assert!(u_trace(&x, re(0.0)).iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn homodyne_examples() {
        let x = homodyne_u(1.0, 0.0, 0.0).unwrap();
        assert_abs_diff_eq!((x.matrix()[(0, 0)] - re(1.0)).norm(), 0.0, epsilon = 1e-15);
        let y = homodyne_u(1.0, PI / 2.0, 0.0).unwrap();
        assert_abs_diff_eq!((y.matrix()[(0, 0)] - re(-1.0)).norm(), 0.0, epsilon = 1e-15);
        let het = homodyne_u(0.5, 0.0, PI / 2.0).unwrap();
        assert_abs_diff_eq!(het.matrix()[(0, 0)].norm(), 0.0, epsilon = 1e-15);
        assert!(matches!(homodyne_u(1.5, 0.0, 0.0), Err(Error::EfficiencyOutOfRange(_))));
    }

    #[test]
    fn spec_json_shapes() {
        let specs = [
            (r#"{"type":"fixed","u":[[[0.5,0.0]]]}"#, UnravelingSpec::Fixed { u: UMatrix::scalar(re(0.5)).unwrap() }),
            (r#"{"type":"homodyne","eta":1.0,"theta1":0.0,"theta2":0.0}"#, UnravelingSpec::Homodyne { eta: 1.0, theta1: 0.0, theta2: 0.0 }),
            (r#"{"type":"heterodyne"}"#, UnravelingSpec::Heterodyne),
            (r#"{"type":"invariant","sign":-1}"#, UnravelingSpec::InvariantStateDep { sign: -1 }),
            (r#"{"type":"invariant_trace","R":0.25}"#, UnravelingSpec::InvariantTrace { r: 0.25 }),
        ];
        for (text, spec) in specs {
            let parsed: UnravelingSpec = serde_json::from_str(text).unwrap();
            assert_eq!(parsed, spec);
            assert_eq!(serde_json::to_string(&spec).unwrap(), text);
        }
        assert!(serde_json::from_str::<UnravelingSpec>(r#"{"type":"fixed","u":[[[2.0,0.0]]]}"#).is_err());
    }

    #[test]
    fn resolve_checks_model() {
        let two = LindbladModel::new(CMatrix::zeros(2, 2), vec![pauli::sigma(), pauli::sigma_z()]).unwrap();
        let psi = PureState::new(pauli::excited()).unwrap();
        let hom = UnravelingSpec::Homodyne { eta: 1.0, theta1: 0.0, theta2: 0.0 };
        assert!(matches!(hom.resolve(&two, &psi), Err(Error::HomodyneRequiresSingleChannel(2))));
        assert!(UnravelingSpec::InvariantStateDep { sign: 2 }.resolve(&two, &psi).is_err());
        let u = UnravelingSpec::Heterodyne.resolve(&two, &psi).unwrap();
        assert_eq!(u.k(), 2);
        let big = UnravelingSpec::InvariantTrace { r: 10.0 };
        assert!(matches!(big.resolve(&two, &psi), Err(Error::NormExceeded(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn embedding_min_eigenvalue_identity(seed in any::<u64>(), k in 1usize..=4, scale in 0.0f64..1.5, dt in 1e-4f64..1.0) {
            let mut rng = trajectory_stream(seed, 0);
            let u = random::symmetric_with_norm(&mut rng, k, scale);
            let min = linalg::real_symmetric_eigenvalues(&real_embedding(&u, dt))[0];
            prop_assert!((min - dt * (1.0 - spectral_norm(&u)) / 2.0).abs() < 1e-9);
        }

        #[test]
        fn homodyne_always_valid(eta in 0.0f64..=1.0, t1 in -10.0f64..10.0, t2 in -10.0f64..10.0) {
            let u = homodyne_u(eta, t1, t2).unwrap();
            prop_assert!(validate(u.matrix()).is_ok());
        }

        #[test]
        fn extremal_r_saturates_bound(seed in any::<u64>(), k in 1usize..=4, sign in prop::sample::select(vec![-1.0, 1.0])) {
            let mut rng = trajectory_stream(seed, 1);
            let m = random::symmetric(&mut rng, k);
            let u = &m * re(extremal_r(&m, sign));
            prop_assert!(validate(&u).is_ok());
            prop_assert!((spectral_norm(&u) - 1.0).abs() < 1e-10);
        }

        #[test]
        fn state_dependent_u_transforms_covariantly(seed in any::<u64>(), k in 1usize..=3) {
            let mut rng = trajectory_stream(seed, 2);
            let model = random::model(&mut rng, 3, k, 1.0);
            let t = random::unitary(&mut rng, k);
            let psi = random::state(&mut rng, 3);
            let r = C64::new(0.3, -0.2);
            let u = u_state_dependent(&model, &psi, r);
            let rotated = rotate_lindblads(&model, &t).unwrap();
            let u_rot = u_state_dependent(&rotated, &psi, r);
            let expected = &t * u * t.transpose();
            prop_assert!(linalg::max_abs_diff(&u_rot, &expected) < 1e-10);
        }
    }
}
