//! Model types: pure states, density matrices and the Lindblad generator
//! together with the representation freedom that leaves it unchanged.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Global tolerance for Hermiticity, unitarity and normalization checks.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Rank threshold for the Gram matrix of `{1, c_1, ..., c_K}`.
pub const INDEPENDENCE_TOL: f64 = 1e-8;

pub(crate) const I: C64 = C64::new(0.0, 1.0);

pub(crate) fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Two-level operators in the basis `[|e⟩, |g⟩]`, so that `σ_z|e⟩ = |e⟩`
/// and `σ = |g⟩⟨e|`.
pub mod pauli {
    use super::{re, CMatrix, CVector, C64};

    pub fn identity() -> CMatrix {
        CMatrix::identity(2, 2)
    }

    /// Lowering operator `|g⟩⟨e|`.
    pub fn sigma() -> CMatrix {
        let mut m = CMatrix::zeros(2, 2);
        m[(1, 0)] = re(1.0);
        m
    }

    pub fn sigma_x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[re(0.0), re(1.0), re(1.0), re(0.0)])
    }

    pub fn sigma_y() -> CMatrix {
        CMatrix::from_row_slice(
            2,
            2,
            &[re(0.0), C64::new(0.0, -1.0), C64::new(0.0, 1.0), re(0.0)],
        )
    }

    pub fn sigma_z() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[re(1.0), re(0.0), re(0.0), re(-1.0)])
    }

    pub fn excited() -> CVector {
        CVector::from_vec(vec![re(1.0), re(0.0)])
    }

    pub fn ground() -> CVector {
        CVector::from_vec(vec![re(0.0), re(1.0)])
    }
}

/// A unit vector in `C^N`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amps: CVector,
}

impl PureState {
    /// Accepts `amps` only if its norm is one within [`HERMITIAN_TOL`].
    pub fn new(amps: CVector) -> Result<Self> {
        let norm = amps.norm();
        if !norm.is_finite() {
            return Err(Error::NonFinite);
        }
        if (norm - 1.0).abs() > HERMITIAN_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { amps })
    }

    /// Rescales `amps` to unit norm.
    pub fn normalized(amps: CVector) -> Result<Self> {
        let norm = amps.norm();
        if !norm.is_finite() {
            return Err(Error::NonFinite);
        }
        if norm < 1e-300 {
            return Err(Error::NormCollapse(norm));
        }
        Ok(Self { amps: amps / re(norm) })
    }

    pub fn from_slice(amps: &[C64]) -> Result<Self> {
        Self::normalized(CVector::from_column_slice(amps))
    }

    pub(crate) fn from_normalized_unchecked(amps: CVector) -> Self {
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amps
    }

    pub fn into_amplitudes(self) -> CVector {
        self.amps
    }

    /// `|ψ⟩⟨ψ|`
    pub fn projector(&self) -> CMatrix {
        &self.amps * self.amps.adjoint()
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix { m: self.projector() }
    }
}

/// Hermitian, unit-trace, positive semi-definite `N×N` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: CMatrix,
}

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        if !linalg::is_finite(&m) {
            return Err(Error::NonFinite);
        }
        let herm = linalg::hermiticity_error(&m);
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidDensityMatrix(format!("not Hermitian ({herm:e})")));
        }
        let tr = linalg::trace(&m);
        if (tr - re(1.0)).norm() > HERMITIAN_TOL {
            return Err(Error::InvalidDensityMatrix(format!("trace {tr}")));
        }
        let min = linalg::hermitian_eigenvalues(&m)[0];
        if min < -HERMITIAN_TOL {
            return Err(Error::InvalidDensityMatrix(format!("eigenvalue {min:e}")));
        }
        Ok(Self { m })
    }

    pub fn maximally_mixed(n: usize) -> Self {
        Self { m: CMatrix::identity(n, n) * re(1.0 / n as f64) }
    }

    pub(crate) fn from_matrix_unchecked(m: CMatrix) -> Self {
        Self { m }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn purity(&self) -> f64 {
        linalg::trace(&(&self.m * &self.m)).re
    }
}

impl From<PureState> for DensityMatrix {
    fn from(s: PureState) -> Self {
        s.to_density()
    }
}

/// Hamiltonian plus ordered Lindblad operators, `ρ̇ = -i[H,ρ] + Σ D[c_k]ρ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelJson", into = "ModelJson")]
pub struct LindbladModel {
    hamiltonian: CMatrix,
    lindblads: Vec<CMatrix>,
    adjoints: Vec<CMatrix>,
    /// `Σ c_k† c_k`
    decay: CMatrix,
    /// `-iH - ½ Σ c_k† c_k`
    drift: CMatrix,
}

impl LindbladModel {
    pub fn new(hamiltonian: CMatrix, lindblads: Vec<CMatrix>) -> Result<Self> {
        let n = hamiltonian.nrows();
        if hamiltonian.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: hamiltonian.ncols() });
        }
        for c in &lindblads {
            if c.nrows() != n || c.ncols() != n {
                return Err(Error::DimensionMismatch { expected: n, found: c.nrows() });
            }
        }
        if !linalg::is_finite(&hamiltonian) || !lindblads.iter().all(linalg::is_finite) {
            return Err(Error::NonFinite);
        }
        let herm = linalg::hermiticity_error(&hamiltonian);
        if herm > HERMITIAN_TOL {
            return Err(Error::NonHermitian(herm));
        }
        if !linearly_independent_with_identity(&lindblads, n) {
            return Err(Error::LinearlyDependent);
        }
        Ok(Self::assemble(hamiltonian, lindblads))
    }

    fn assemble(hamiltonian: CMatrix, lindblads: Vec<CMatrix>) -> Self {
        let n = hamiltonian.nrows();
        let adjoints: Vec<CMatrix> = lindblads.iter().map(|c| c.adjoint()).collect();
        let decay = lindblads
            .iter()
            .zip(&adjoints)
            .fold(CMatrix::zeros(n, n), |acc, (c, cd)| acc + cd * c);
        let drift = &hamiltonian * (-I) - &decay * re(0.5);
        Self { hamiltonian, lindblads, adjoints, decay, drift }
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }

    /// Number of Lindblad operators `K`.
    pub fn channels(&self) -> usize {
        self.lindblads.len()
    }

    pub fn hamiltonian(&self) -> &CMatrix {
        &self.hamiltonian
    }

    pub fn lindblads(&self) -> &[CMatrix] {
        &self.lindblads
    }

    pub(crate) fn adjoints(&self) -> &[CMatrix] {
        &self.adjoints
    }

    /// `Σc_k†c_k`
    pub fn decay(&self) -> &CMatrix {
        &self.decay
    }

    pub(crate) fn drift(&self) -> &CMatrix {
        &self.drift
    }

    pub(crate) fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: n });
        }
        Ok(())
    }

    /// Vector of `⟨c_k⟩`.
    pub fn lindblad_means(&self, state: &PureState) -> Vec<C64> {
        let psi = state.amplitudes();
        self.lindblads.iter().map(|c| psi.dotc(&(c * psi))).collect()
    }
}

/// Gram-matrix rank test on the normalized, vectorized operators.
fn linearly_independent_with_identity(lindblads: &[CMatrix], n: usize) -> bool {
    let mut vecs: Vec<CVector> = Vec::with_capacity(lindblads.len() + 1);
    vecs.push(linalg::vectorize(&CMatrix::identity(n, n)));
    vecs.extend(lindblads.iter().map(linalg::vectorize));
    for v in vecs.iter_mut() {
        let norm = v.norm();
        if norm == 0.0 {
            return false;
        }
        *v /= re(norm);
    }
    let m = vecs.len();
    let gram = CMatrix::from_fn(m, m, |i, j| vecs[i].dotc(&vecs[j]));
    linalg::hermitian_eigenvalues(&gram)[0] > INDEPENDENCE_TOL
}

/// `⟨ψ|op|ψ⟩`
pub fn expectation(op: &CMatrix, state: &PureState) -> Result<C64> {
    let psi = state.amplitudes();
    if op.nrows() != psi.len() || op.ncols() != psi.len() {
        return Err(Error::DimensionMismatch { expected: op.nrows(), found: psi.len() });
    }
    Ok(psi.dotc(&(op * psi)))
}

/// `Lρ = -i[H,ρ] + Σ_k (c_k ρ c_k† - ½{c_k†c_k, ρ})`
pub fn liouvillian_apply(model: &LindbladModel, rho: &CMatrix) -> Result<CMatrix> {
    model.check_dim(rho.nrows())?;
    model.check_dim(rho.ncols())?;
    Ok(liouvillian_unchecked(model, rho))
}

pub(crate) fn liouvillian_unchecked(model: &LindbladModel, rho: &CMatrix) -> CMatrix {
    // drift ρ + ρ drift† = -i[H,ρ] - ½{Σc†c, ρ}
    let mut out = model.drift() * rho + rho * model.drift().adjoint();
    for (c, cd) in model.lindblads().iter().zip(model.adjoints()) {
        out += c * rho * cd;
    }
    out
}

/// `c_k → Σ_l T_kl c_l` for a unitary `K×K` matrix `T`.
pub fn rotate_lindblads(model: &LindbladModel, t: &CMatrix) -> Result<LindbladModel> {
    let k = model.channels();
    if t.nrows() != k || t.ncols() != k {
        return Err(Error::DimensionMismatch { expected: k, found: t.nrows() });
    }
    let err = linalg::unitarity_error(t);
    if err > HERMITIAN_TOL {
        return Err(Error::NonUnitary(err));
    }
    let n = model.dim();
    let rotated = (0..k)
        .map(|row| {
            (0..k).fold(CMatrix::zeros(n, n), |acc, l| acc + &model.lindblads()[l] * t[(row, l)])
        })
        .collect();
    LindbladModel::new(model.hamiltonian().clone(), rotated)
}

/// `c_k → c_k + χ_k` with the compensating Hamiltonian
/// `H → H + (i/2) Σ_k (χ_k c_k† - χ_k* c_k)` that keeps `L` fixed.
pub fn shift_lindblads(model: &LindbladModel, chi: &[C64]) -> Result<LindbladModel> {
    let k = model.channels();
    if chi.len() != k {
        return Err(Error::DimensionMismatch { expected: k, found: chi.len() });
    }
    let n = model.dim();
    let id = CMatrix::identity(n, n);
    let mut h = model.hamiltonian().clone();
    let mut shifted = Vec::with_capacity(k);
    for ((c, cd), &x) in model.lindblads().iter().zip(model.adjoints()).zip(chi) {
        h += (cd * x - c * x.conj()) * (I * 0.5);
        shifted.push(c + &id * x);
    }
    // exact Hermitian symmetrization removes round-off asymmetry
    let h = linalg::hermitian_part(&h);
    LindbladModel::new(h, shifted)
}

/// `W = Σ_k (c_k - ⟨c_k⟩) P (c_k - ⟨c_k⟩)†`
pub fn transition_rate_operator(model: &LindbladModel, state: &PureState) -> Result<CMatrix> {
    model.check_dim(state.dim())?;
    let n = model.dim();
    let psi = state.amplitudes();
    let mut w = CMatrix::zeros(n, n);
    for c in model.lindblads() {
        let cpsi = c * psi;
        let mean = psi.dotc(&cpsi);
        let v = cpsi - psi * mean;
        w += &v * v.adjoint();
    }
    Ok(w)
}

/// `w = Σ_k (⟨c_k†c_k⟩ - |⟨c_k⟩|²) = Tr W`
pub fn transition_rate(model: &LindbladModel, state: &PureState) -> Result<f64> {
    model.check_dim(state.dim())?;
    let psi = state.amplitudes();
    Ok(model
        .lindblads()
        .iter()
        .map(|c| {
            let cpsi = c * psi;
            cpsi.norm_squared() - psi.dotc(&cpsi).norm_sqr()
        })
        .sum())
}

#[derive(Serialize, Deserialize)]
struct ModelJson {
    dim: usize,
    hamiltonian: Vec<Vec<[f64; 2]>>,
    lindblads: Vec<Vec<Vec<[f64; 2]>>>,
}

pub(crate) fn matrix_to_rows(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub(crate) fn rows_to_matrix(rows: &[Vec<[f64; 2]>], n: usize) -> Result<CMatrix> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Config(format!("expected a {n}x{n} matrix")));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
}

impl TryFrom<ModelJson> for LindbladModel {
    type Error = Error;

    fn try_from(j: ModelJson) -> Result<Self> {
        let h = rows_to_matrix(&j.hamiltonian, j.dim)?;
        let ls = j
            .lindblads
            .iter()
            .map(|rows| rows_to_matrix(rows, j.dim))
            .collect::<Result<Vec<_>>>()?;
        LindbladModel::new(h, ls)
    }
}

impl From<LindbladModel> for ModelJson {
    fn from(m: LindbladModel) -> Self {
        ModelJson {
            dim: m.dim(),
            hamiltonian: matrix_to_rows(&m.hamiltonian),
            lindblads: m.lindblads.iter().map(matrix_to_rows).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::pauli::*;
    use super::*;
    use approx::assert_abs_diff_eq;

    fn decay(gamma: f64) -> LindbladModel {
        LindbladModel::new(CMatrix::zeros(2, 2), vec![sigma() * re(gamma.sqrt())]).unwrap()
    }

    fn plus() -> PureState {
        PureState::from_slice(&[re(1.0), re(1.0)]).unwrap()
    }

    // Direct 2×2 arithmetic, written out without nalgebra products.
    fn mat2(a: [[C64; 2]; 2], b: [[C64; 2]; 2]) -> [[C64; 2]; 2] {
        let mut out = [[re(0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        out
    }

    fn to_arr(m: &CMatrix) -> [[C64; 2]; 2] {
        [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
    }

    #[test]
    fn expectation_examples() {
        let e = PureState::new(excited()).unwrap();
        assert_abs_diff_eq!(expectation(&identity(), &e).unwrap().re, 1.0);
        assert_abs_diff_eq!(expectation(&sigma_z(), &e).unwrap().re, 1.0);
        // σ = [[0,0],[1,0]], ψ = (1,1)/√2 → ψ†σψ = ψ_g* ψ_e = 1/2
        let s = expectation(&sigma(), &plus()).unwrap();
        assert_abs_diff_eq!(s.re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s.im, 0.0, epsilon = 1e-15);
        assert!(matches!(
            expectation(&CMatrix::identity(3, 3), &e),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn liouvillian_decay_examples() {
        let m = LindbladModel::new(CMatrix::zeros(2, 2), vec![sigma()]).unwrap();
        let ee = PureState::new(excited()).unwrap().projector();
        let out = liouvillian_apply(&m, &ee).unwrap();
        // oracle: σ ρ σ† - ½{σ†σ, ρ} with σ†σ = |e⟩⟨e|
        let s = to_arr(&sigma());
        let sd = to_arr(&sigma().adjoint());
        let r = to_arr(&ee);
        let srs = mat2(mat2(s, r), sd);
        let n = mat2(sd, s);
        let anti = {
            let a = mat2(n, r);
            let b = mat2(r, n);
            [[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]]
        };
        for i in 0..2 {
            for j in 0..2 {
                let expect = srs[i][j] - anti[i][j] * 0.5;
                assert_abs_diff_eq!((out[(i, j)] - expect).norm(), 0.0, epsilon = 1e-15);
            }
        }
        // |g⟩⟨g| - |e⟩⟨e|
        assert_abs_diff_eq!(out[(1, 1)].re, 1.0);
        assert_abs_diff_eq!(out[(0, 0)].re, -1.0);

        let half = liouvillian_apply(&m, &(identity() * re(0.5))).unwrap();
        assert_abs_diff_eq!(half[(1, 1)].re, 0.5);
        assert_abs_diff_eq!(half[(0, 0)].re, -0.5);
    }

    #[test]
    fn liouvillian_vanishes_on_commuting_state() {
        let m = LindbladModel::new(sigma_z(), vec![]).unwrap();
        let rho = PureState::new(excited()).unwrap().projector();
        let out = liouvillian_apply(&m, &rho).unwrap();
        assert!(out.iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn rejects_dependent_or_invalid_models() {
        assert!(matches!(
            LindbladModel::new(CMatrix::zeros(2, 2), vec![identity()]),
            Err(Error::LinearlyDependent)
        ));
        assert!(matches!(
            LindbladModel::new(CMatrix::zeros(2, 2), vec![sigma(), sigma() * re(2.0)]),
            Err(Error::LinearlyDependent)
        ));
        assert!(matches!(
            LindbladModel::new(sigma(), vec![]),
            Err(Error::NonHermitian(_))
        ));
        assert!(matches!(
            LindbladModel::new(CMatrix::zeros(2, 2), vec![CMatrix::zeros(3, 3)]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rotation_examples() {
        let m = decay(1.0);
        let same = rotate_lindblads(&m, &CMatrix::identity(1, 1)).unwrap();
        assert_eq!(same.lindblads(), m.lindblads());
        let phase = CMatrix::from_element(1, 1, C64::from_polar(1.0, 0.7));
        let rotated = rotate_lindblads(&m, &phase).unwrap();
        let rho = DensityMatrix::maximally_mixed(2);
        let a = liouvillian_apply(&m, rho.matrix()).unwrap();
        let b = liouvillian_apply(&rotated, rho.matrix()).unwrap();
        assert!(linalg::max_abs_diff(&a, &b) < 1e-12);
        assert!(matches!(
            rotate_lindblads(&m, &CMatrix::from_element(1, 1, re(2.0))),
            Err(Error::NonUnitary(_))
        ));

        let two = LindbladModel::new(CMatrix::zeros(2, 2), vec![sigma(), sigma_z()]).unwrap();
        let swap = CMatrix::from_row_slice(2, 2, &[re(0.0), re(1.0), re(1.0), re(0.0)]);
        let swapped = rotate_lindblads(&two, &swap).unwrap();
        assert_eq!(swapped.lindblads()[0], sigma_z());
        assert_eq!(swapped.lindblads()[1], sigma());
    }

    #[test]
    fn shift_keeps_generator() {
        let m = LindbladModel::new(sigma_x() * re(5.0), vec![sigma()]).unwrap();
        let zero = shift_lindblads(&m, &[re(0.0)]).unwrap();
        assert_eq!(zero.lindblads(), m.lindblads());
        assert!(linalg::max_abs_diff(zero.hamiltonian(), m.hamiltonian()) < 1e-15);

        let alpha = C64::new(0.3, -0.8);
        let shifted = shift_lindblads(&m, &[alpha]).unwrap();
        let rho = CMatrix::from_row_slice(
            2,
            2,
            &[re(0.7), C64::new(0.1, 0.2), C64::new(0.1, -0.2), re(0.3)],
        );
        let a = liouvillian_apply(&m, &rho).unwrap();
        let b = liouvillian_apply(&shifted, &rho).unwrap();
        assert!(linalg::max_abs_diff(&a, &b) < 1e-12);

        let beta = C64::new(-1.1, 0.4);
        let twice = shift_lindblads(&shifted, &[beta]).unwrap();
        let once = shift_lindblads(&m, &[alpha + beta]).unwrap();
        assert!(linalg::max_abs_diff(&twice.lindblads()[0], &once.lindblads()[0]) < 1e-14);
        let c = liouvillian_apply(&twice, &rho).unwrap();
        assert!(linalg::max_abs_diff(&a, &c) < 1e-12);
        assert!(shift_lindblads(&m, &[]).is_err());
    }

    #[test]
    fn transition_rate_examples() {
        let gamma = 0.8;
        let m = decay(gamma);
        let g = PureState::new(ground()).unwrap();
        let e = PureState::new(excited()).unwrap();
        assert!(transition_rate_operator(&m, &g).unwrap().iter().all(|z| z.norm() < 1e-15));
        assert_abs_diff_eq!(transition_rate(&m, &g).unwrap(), 0.0);
        let w = transition_rate_operator(&m, &e).unwrap();
        assert_abs_diff_eq!(w[(1, 1)].re, gamma, epsilon = 1e-15);
        assert_abs_diff_eq!(w[(0, 0)].re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(transition_rate(&m, &e).unwrap(), gamma, epsilon = 1e-15);
        let wp = transition_rate_operator(&m, &plus()).unwrap();
        assert_abs_diff_eq!(linalg::trace(&wp).re, gamma / 4.0, epsilon = 1e-15);
    }

    #[test]
    fn model_json_round_trip() {
        let m = LindbladModel::new(sigma_x() * re(5.0), vec![sigma()]).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.starts_with("{\"dim\":2,\"hamiltonian\":[[[0.0,0.0],[5.0,0.0]]"));
        let back: LindbladModel = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        let bad = r#"{"dim":2,"hamiltonian":[[[0,0],[1,0]],[[0,0],[0,0]]],"lindblads":[]}"#;
        assert!(serde_json::from_str::<LindbladModel>(bad).is_err());
    }
}
