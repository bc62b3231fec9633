#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qpathnet::paths::{MeasurementChain, Step};
use qpathnet::quantum::{Observable, Propagator, StateVector};

pub type C = Complex64;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_complex(rng: &mut impl Rng) -> C {
    C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

pub fn random_state(dim: usize, rng: &mut impl Rng) -> StateVector {
    let v: Vec<C> = (0..dim).map(|_| random_complex(rng)).collect();
    StateVector::normalized(v).unwrap()
}

pub fn random_hermitian(dim: usize, scale: f64, rng: &mut impl Rng) -> DMatrix<C> {
    let m = DMatrix::from_fn(dim, dim, |_, _| random_complex(rng) * scale);
    (&m + m.adjoint()) * C::new(0.5, 0.0)
}

pub fn random_unitary(dim: usize, rng: &mut impl Rng) -> DMatrix<C> {
    let m = DMatrix::from_fn(dim, dim, |_, _| random_complex(rng));
    m.qr().q()
}

/// Observable with a known eigenbasis (columns of a random unitary) and
/// eigenvalues separated by at least `min_gap`.
pub fn random_observable(dim: usize, min_gap: f64, rng: &mut impl Rng) -> (Observable, DMatrix<C>, Vec<f64>) {
    let u = random_unitary(dim, rng);
    let mut values: Vec<f64> = Vec::with_capacity(dim);
    let mut next = rng.random_range(-2.0..0.0);
    for _ in 0..dim {
        values.push(next);
        next += min_gap + rng.random_range(0.0..1.0);
    }
    let basis: Vec<StateVector> = (0..dim)
        .map(|i| StateVector::new(u.column(i).iter().copied().collect()).unwrap())
        .collect();
    (Observable::from_eigenbasis(&basis, &values).unwrap(), u, values)
}

/// Chain plus everything an oracle needs to recompute amplitudes from scratch.
pub struct RandomChain {
    pub chain: MeasurementChain,
    pub hamiltonian: DMatrix<C>,
    pub bases: Vec<DMatrix<C>>,
    pub eigenvalues: Vec<Vec<f64>>,
    pub times: Vec<f64>,
    pub final_time: f64,
    pub psi: DVector<C>,
    pub phi: DVector<C>,
}

pub fn random_chain(dim: usize, steps: usize, min_gap: f64, rng: &mut impl Rng) -> RandomChain {
    let hamiltonian = if rng.random_bool(0.2) {
        DMatrix::zeros(dim, dim)
    } else {
        random_hermitian(dim, 1.5, rng)
    };
    let mut times: Vec<f64> = (0..steps).map(|_| rng.random_range(0.05..2.0)).collect();
    times.sort_by(f64::total_cmp);
    for k in 1..steps {
        if times[k] <= times[k - 1] + 1e-3 {
            times[k] = times[k - 1] + 1e-3;
        }
    }
    let final_time = times.last().copied().unwrap_or(0.0) + rng.random_range(0.05..1.0);
    let mut step_list = Vec::new();
    let mut bases = Vec::new();
    let mut eigenvalues = Vec::new();
    for &t in &times {
        let (obs, u, vals) = random_observable(dim, min_gap, rng);
        step_list.push(Step::new(t, obs));
        bases.push(u);
        eigenvalues.push(vals);
    }
    let psi = random_state(dim, rng);
    let phi = random_state(dim, rng);
    let chain = MeasurementChain::new(
        psi.clone(),
        step_list,
        Propagator::new(hamiltonian.clone()).unwrap(),
        final_time,
        phi.clone(),
    )
    .unwrap();
    RandomChain {
        chain,
        hamiltonian,
        bases,
        eigenvalues,
        times,
        final_time,
        psi: psi.as_dvector().clone(),
        phi: phi.as_dvector().clone(),
    }
}

/// `exp(-i H t)` through nalgebra's Pade exponential.
pub fn oracle_unitary(h: &DMatrix<C>, t: f64) -> DMatrix<C> {
    (h * C::new(0.0, -t)).exp()
}

impl RandomChain {
    pub fn dim(&self) -> usize {
        self.psi.len()
    }

    /// Amplitudes of every path in lexicographic order, first step most significant.
    pub fn oracle_amplitudes(&self, final_state: &DVector<C>) -> Vec<C> {
        let dim = self.dim();
        let k = self.times.len();
        let count = dim.pow(k as u32);
        (0..count)
            .map(|flat| {
                let mut idx = vec![0; k];
                let mut rest = flat;
                for slot in idx.iter_mut().rev() {
                    *slot = rest % dim;
                    rest /= dim;
                }
                let mut state = oracle_unitary(&self.hamiltonian, self.times.first().copied().unwrap_or(self.final_time)) * &self.psi;
                for s in 0..k {
                    let e = self.bases[s].column(idx[s]).clone_owned();
                    let overlap = e.dotc(&state);
                    let next_t = if s + 1 < k { self.times[s + 1] } else { self.final_time };
                    state = oracle_unitary(&self.hamiltonian, next_t - self.times[s]) * e * overlap;
                }
                final_state.dotc(&state)
            })
            .collect()
    }

    pub fn oracle_transition(&self) -> C {
        self.phi.dotc(&(oracle_unitary(&self.hamiltonian, self.final_time) * &self.psi))
    }

    /// Eigenvalue of step `s` on the lexicographic path `flat`.
    pub fn eigenvalue_on_path(&self, flat: usize, s: usize) -> f64 {
        let dim = self.dim();
        let k = self.times.len();
        let digit = (flat / dim.pow((k - 1 - s) as u32)) % dim;
        self.eigenvalues[s][digit]
    }
}

/// Closed-form Gaussian-pointer moments of `|sum_m a_m G(xi - f_m)|^2`:
/// returns (integral, mean).
pub fn gaussian_oracle(points: &[(f64, C)], sigma: f64) -> (f64, f64) {
    let (mut norm, mut first) = (0.0, 0.0);
    for &(fm, am) in points {
        for &(fn_, an) in points {
            let overlap = (am * an.conj()).re * (-(fm - fn_).powi(2) / (8.0 * sigma * sigma)).exp();
            norm += overlap;
            first += overlap * (fm + fn_) / 2.0;
        }
    }
    (norm, first / norm)
}
