//! Deterministic self-checks of the representation and discretization
//! identities, run by the command-line `verify` mode.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::fluorescence::{build_atom, sme_u1_decomposed_step, sme_u1_general_step, AtomParams};
use crate::linalg;
use crate::operators::{rotate_lindblads, shift_lindblads, transition_rate, transition_rate_operator, C64};
use crate::operators::{CMatrix, LindbladModel, PureState};
use crate::random;
use crate::rng::fill_standard_normal;
use crate::trajectory::{
    gauge_transform_step, run_with_noise, step_nonlinear_sse, step_sme_state, NoiseSource, Stepper,
    Trajectory,
};
use crate::unravelings::{real_embedding, NoiseFactor, NoiseIncrement, UMatrix, UnravelingSpec};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Worst observed discrepancy, or the observed exponent for order checks.
    pub value: f64,
    pub tolerance: f64,
}

impl Check {
    fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), passed: value <= tolerance, value, tolerance }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Runs every check with randomness drawn from `seed`.
pub fn run_all(seed: u64) -> Result<Report> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let checks = vec![
        eigenvalue_identity(&mut rng),
        rotation_invariance(&mut rng)?,
        shift_invariance(&mut rng)?,
        pathwise_rotation(&mut rng)?,
        pathwise_shift(&mut rng)?,
        gauge_invariance(&mut rng)?,
        stepper_agreement(&mut rng)?,
        atom_sme_decomposition(&mut rng)?,
    ];
    Ok(Report { seed, checks })
}

fn eigenvalue_identity(rng: &mut ChaCha8Rng) -> Check {
    let mut worst: f64 = 0.0;
    for k in 1..=4 {
        for _ in 0..25 {
            let norm = rand::Rng::random_range(rng, 0.0..1.0);
            let u = random::symmetric_with_norm(rng, k, norm);
            let min = linalg::real_symmetric_eigenvalues(&real_embedding(&u, 1.0))[0];
            worst = worst.max((min - 0.5 * (1.0 - norm)).abs());
        }
    }
    Check::at_most("covariance_min_eigenvalue", worst, 1e-10)
}

fn states(rng: &mut ChaCha8Rng, n: usize, count: usize) -> Vec<PureState> {
    (0..count).map(|_| random::state(rng, n)).collect()
}

fn rotation_invariance(rng: &mut ChaCha8Rng) -> Result<Check> {
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let model = random::model(rng, 3, 2, 1.0);
        let t = random::unitary(rng, 2);
        let rotated = rotate_lindblads(&model, &t)?;
        worst = worst.max(generator_difference(&model, &rotated, rng)?);
        for s in states(rng, 3, 5) {
            let w = transition_rate_operator(&model, &s)?;
            let w2 = transition_rate_operator(&rotated, &s)?;
            worst = worst.max(linalg::max_abs_diff(&w, &w2));
            worst = worst.max((transition_rate(&model, &s)? - transition_rate(&rotated, &s)?).abs());
        }
    }
    Ok(Check::at_most("rotation_invariance", worst, 1e-10))
}

fn shift_invariance(rng: &mut ChaCha8Rng) -> Result<Check> {
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let model = random::model(rng, 3, 2, 1.0);
        let chi: Vec<C64> = (0..2).map(|_| random::complex_gaussian(rng)).collect();
        let shifted = shift_lindblads(&model, &chi)?;
        worst = worst.max(generator_difference(&model, &shifted, rng)?);
        for s in states(rng, 3, 5) {
            let w = transition_rate_operator(&model, &s)?;
            let w2 = transition_rate_operator(&shifted, &s)?;
            worst = worst.max(linalg::max_abs_diff(&w, &w2));
        }
    }
    Ok(Check::at_most("shift_invariance", worst, 1e-10))
}

fn generator_difference(a: &LindbladModel, b: &LindbladModel, rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for s in states(rng, a.dim(), 5) {
        let rho = s.projector();
        let la = crate::operators::liouvillian_apply(a, &rho)?;
        let lb = crate::operators::liouvillian_apply(b, &rho)?;
        worst = worst.max(linalg::max_abs_diff(&la, &lb));
    }
    Ok(worst)
}

/// Runs `model` with fresh normals, returning the trajectory and increments
/// at every step.
pub fn reference_run(
    model: &LindbladModel,
    spec: &UnravelingSpec,
    stepper: Stepper,
    initial: &PureState,
    dt: f64,
    steps: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Trajectory> {
    let mut draw = |z: &mut [f64]| fill_standard_normal(rng, z);
    run_with_noise(model, spec, stepper, initial, dt, steps, 1, NoiseSource::Normals(&mut draw))
}

/// Replays `increments` mapped through `map`.
#[allow(clippy::too_many_arguments)]
pub fn replay_run(
    model: &LindbladModel,
    spec: &UnravelingSpec,
    stepper: Stepper,
    initial: &PureState,
    dt: f64,
    increments: &[Vec<C64>],
    map: &dyn Fn(&[C64]) -> Vec<C64>,
) -> Result<Trajectory> {
    let mut next = |n: usize, _: &UMatrix| NoiseIncrement { dxi: map(&increments[n]) };
    run_with_noise(model, spec, stepper, initial, dt, increments.len(), 1, NoiseSource::Increments(&mut next))
}

fn projector_distance(a: &[PureState], b: &[PureState]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| linalg::max_abs_diff(&x.projector(), &y.projector()))
        .fold(0.0, f64::max)
}

fn rotate_vec(t: &CMatrix, v: &[C64]) -> Vec<C64> {
    (0..t.nrows()).map(|i| (0..v.len()).map(|j| t[(i, j)] * v[j]).sum()).collect()
}

/// Same path under `c' = Tc`, `u' = TuTᵀ`, `dξ' = Tdξ`; currents map as
/// `J' = TJ`.
fn pathwise_rotation(rng: &mut ChaCha8Rng) -> Result<Check> {
    let mut worst: f64 = 0.0;
    let (dt, steps) = (1e-3, 500);
    for _ in 0..3 {
        let model = random::model(rng, 3, 2, 1.0);
        let t = random::unitary(rng, 2);
        let rotated = rotate_lindblads(&model, &t)?;
        let u = UMatrix::new(random::symmetric_with_norm(rng, 2, 0.8))?;
        let u_rot = UMatrix::new(&t * u.matrix() * t.transpose())?;
        let psi0 = random::state(rng, 3);
        for stepper in [Stepper::Linear, Stepper::Sme] {
            let spec = UnravelingSpec::Fixed { u: u.clone() };
            let a = reference_run(&model, &spec, stepper, &psi0, dt, steps, rng)?;
            let spec_rot = UnravelingSpec::Fixed { u: u_rot.clone() };
            let b = replay_run(&rotated, &spec_rot, stepper, &psi0, dt, &a.record.increments, &|d| rotate_vec(&t, d))?;
            worst = worst.max(projector_distance(&a.states, &b.states));
            for (ja, jb) in a.record.currents.iter().zip(&b.record.currents) {
                let mapped = rotate_vec(&t, ja);
                let diff = mapped.iter().zip(jb).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
                worst = worst.max(diff * dt);
            }
        }
    }
    Ok(Check::at_most("pathwise_rotation", worst, 1e-8))
}

/// Same increments under `c' = c + χ` through the stochastic master
/// equation, whose update only involves `c - ⟨c⟩` and the invariant
/// generator.
fn pathwise_shift(rng: &mut ChaCha8Rng) -> Result<Check> {
    let mut worst: f64 = 0.0;
    let (dt, steps) = (1e-3, 500);
    for _ in 0..3 {
        let model = random::model(rng, 3, 2, 1.0);
        let chi: Vec<C64> = (0..2).map(|_| random::complex_gaussian(rng)).collect();
        let shifted = shift_lindblads(&model, &chi)?;
        let spec = UnravelingSpec::Fixed { u: UMatrix::new(random::symmetric_with_norm(rng, 2, 0.5))? };
        let psi0 = random::state(rng, 3);
        let a = reference_run(&model, &spec, Stepper::Sme, &psi0, dt, steps, rng)?;
        let b = replay_run(&shifted, &spec, Stepper::Sme, &psi0, dt, &a.record.increments, &|d| d.to_vec())?;
        worst = worst.max(projector_distance(&a.states, &b.states));
    }
    Ok(Check::at_most("pathwise_shift", worst, 1e-8))
}

fn gauge_invariance(rng: &mut ChaCha8Rng) -> Result<Check> {
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let s = random::state(rng, 3);
        let f = random::complex_gaussian(rng);
        let d = random::complex_gaussian(rng) * 0.03;
        let g = gauge_transform_step(&s, f, d);
        worst = worst.max(linalg::max_abs_diff(&s.projector(), &g.projector()));
    }
    Ok(Check::at_most("gauge_invariance", worst, 1e-12))
}

/// One-step projector differences between the three steppers on shared
/// increments, fitted as `C dt^p` over a halving sequence. The nonlinear
/// SSE and the master equation differ at `O(dt^{3/2})`; the renormalized
/// linear SSE differs from both at `O(dt)`.
fn stepper_agreement(rng: &mut ChaCha8Rng) -> Result<Check> {
    let model = random::model(rng, 3, 2, 1.0);
    let u = UMatrix::new(random::symmetric_with_norm(rng, 2, 0.6))?;
    let factor = NoiseFactor::new(&u)?;
    let samples: Vec<(PureState, Vec<f64>)> = (0..50)
        .map(|_| {
            let mut z = vec![0.0; 4];
            fill_standard_normal(rng, &mut z);
            (random::state(rng, 3), z)
        })
        .collect();
    let dts = [1e-2, 5e-3, 2.5e-3, 1.25e-3];
    let mut sme_vs_nl = Vec::new();
    for &dt in &dts {
        let mut acc = 0.0;
        for (s, z) in &samples {
            let dxi = factor.increment(dt, z);
            let a = step_sme_state(&model, s, &dxi, dt)?;
            let b = step_nonlinear_sse(&model, s, &dxi, dt)?;
            acc += linalg::max_abs_diff(&a.projector(), &b.projector());
        }
        sme_vs_nl.push(acc / samples.len() as f64);
    }
    let slope = crate::stats::loglog_slope(&dts, &sme_vs_nl);
    Ok(Check {
        name: "sme_vs_nonlinear_order".into(),
        passed: slope >= 1.35,
        value: slope,
        tolerance: 1.35,
    })
}

fn atom_sme_decomposition(rng: &mut ChaCha8Rng) -> Result<Check> {
    let params = AtomParams::default();
    let model = build_atom(&params)?;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let rho = random::state(rng, 2).to_density();
        let dz = 0.03 * random::complex_gaussian(rng).re;
        let a = sme_u1_decomposed_step(&model, &rho, dz, &params, 1e-3)?;
        let b = sme_u1_general_step(&model, &rho, dz, 1e-3)?;
        worst = worst.max(linalg::max_abs_diff(a.matrix(), b.matrix()));
    }
    Ok(Check::at_most("atom_sme_decomposition", worst, 1e-12))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass_and_are_deterministic() {
        let a = run_all(1).unwrap();
        for c in &a.checks {
            assert!(c.passed, "{c:?}");
        }
        let b = run_all(1).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}
