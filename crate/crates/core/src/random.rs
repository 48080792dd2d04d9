//! Random operators, models and `u`-matrices for property checks.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg;
use crate::operators::{re, CMatrix, CVector, LindbladModel, PureState, C64};

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Haar-distributed unitary from the QR decomposition of a Ginibre matrix.
pub fn unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let qr = ginibre(rng, n, n).qr();
    let q = qr.q();
    let r = qr.r();
    let mut out = q.clone();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { re(1.0) };
        for i in 0..n {
            out[(i, j)] = q[(i, j)] * phase;
        }
    }
    out
}

pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    linalg::hermitian_part(&ginibre(rng, n, n))
}

pub fn state<R: Rng + ?Sized>(rng: &mut R, n: usize) -> PureState {
    PureState::normalized(CVector::from_fn(n, |_, _| complex_gaussian(rng)))
        .expect("gaussian vector is nonzero")
}

/// Model with random Hermitian `H` and `k` random Lindblad operators scaled
/// by `strength / √n`.
pub fn model<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize, strength: f64) -> LindbladModel {
    loop {
        let h = hermitian(rng, n);
        let ls = (0..k)
            .map(|_| ginibre(rng, n, n) * re(strength / (n as f64).sqrt()))
            .collect();
        if let Ok(m) = LindbladModel::new(h, ls) {
            return m;
        }
    }
}

/// Random complex symmetric `k×k` matrix (unnormalized).
pub fn symmetric<R: Rng + ?Sized>(rng: &mut R, k: usize) -> CMatrix {
    let m = ginibre(rng, k, k);
    &m + m.transpose()
}

/// Random symmetric matrix rescaled to spectral norm `norm`.
pub fn symmetric_with_norm<R: Rng + ?Sized>(rng: &mut R, k: usize, norm: f64) -> CMatrix {
    let m = symmetric(rng, k);
    let s = linalg::operator_norm(&m);
    m * re(norm / s)
}
