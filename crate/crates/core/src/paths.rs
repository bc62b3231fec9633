//! Virtual paths of a pre- and post-selected measurement chain.
//!
//! A chain with `K` intermediate steps on a `dim`-level system has `dim^K`
//! virtual paths, one per choice of eigenstate at every step. The amplitude of
//! a path is the product of the transition amplitudes along it, and the
//! amplitudes of all paths add up to `<phi|U(T)|psi>`.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quantum::{
    c, complete_basis, orthonormality_defect, Observable, Propagator, StateVector, C64,
    IDENTITY_TOL,
};

/// Default tolerance for treating two functional values as equal.
pub const DEFAULT_MERGE_TOL: f64 = 1e-9;
/// `|<phi|U(T)|psi>|` at or below this is a forbidden transition.
pub const FORBIDDEN_THRESHOLD: f64 = 1e-14;
/// Largest number of virtual paths a chain may have.
pub const MAX_PATHS: usize = 1_000_000;
// below this many paths amplitudes are computed on the calling thread
const PARALLEL_PATH_THRESHOLD: usize = 4096;

static NEXT_CHAIN_ID: AtomicU64 = AtomicU64::new(1);

/// One intermediate measurement: an observable coupled to the meter at `time`.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub time: f64,
    pub observable: Observable,
}

impl Step {
    pub fn new(time: f64, observable: Observable) -> Self {
        Self { time, observable }
    }
}

/// Pre-selected state, intermediate measurement steps and post-selected state.
///
/// Post-selection failure is represented by an orthonormal completion
/// `{|phi_perp,m>}` of the post-selected state. It is generated automatically
/// and can be replaced with [`MeasurementChain::with_post_complement`].
#[derive(Debug, Clone)]
pub struct MeasurementChain {
    id: u64,
    pre_state: StateVector,
    steps: Vec<Step>,
    propagator: Propagator,
    final_time: f64,
    post_state: StateVector,
    post_complement: Vec<StateVector>,
}

impl MeasurementChain {
    pub fn new(
        pre_state: StateVector,
        steps: Vec<Step>,
        propagator: Propagator,
        final_time: f64,
        post_state: StateVector,
    ) -> Result<Self> {
        let dim = propagator.dim();
        pre_state.ensure_dim(dim, "pre-selected state")?;
        post_state.ensure_dim(dim, "post-selected state")?;
        pre_state.ensure_normalized("pre-selected state")?;
        post_state.ensure_normalized("post-selected state")?;
        if !final_time.is_finite() || final_time <= 0.0 {
            return Err(Error::InvalidTimeOrdering(format!(
                "final time must be positive, got {final_time}"
            )));
        }
        let mut previous = 0.0;
        for (k, step) in steps.iter().enumerate() {
            step.observable
                .ensure_dim(dim, &format!("observable at step {k}"))?;
            if !(step.time.is_finite() && step.time > previous && step.time < final_time) {
                return Err(Error::InvalidTimeOrdering(format!(
                    "step {k} at t = {} must lie in ({previous}, {final_time})",
                    step.time
                )));
            }
            previous = step.time;
        }
        let count = (dim as u128).checked_pow(steps.len() as u32).unwrap_or(u128::MAX);
        if count > MAX_PATHS as u128 {
            return Err(Error::TooManyPaths {
                count,
                limit: MAX_PATHS,
            });
        }
        let post_complement = complete_basis(std::slice::from_ref(&post_state))?;
        Ok(Self {
            id: NEXT_CHAIN_ID.fetch_add(1, Ordering::Relaxed),
            pre_state,
            steps,
            propagator,
            final_time,
            post_state,
            post_complement,
        })
    }

    /// Replaces the automatically generated failure states.
    pub fn with_post_complement(mut self, complement: Vec<StateVector>) -> Result<Self> {
        let dim = self.dim();
        if complement.len() + 1 != dim {
            return Err(Error::DimensionMismatch {
                context: "post-selection completion size".into(),
                expected: dim - 1,
                found: complement.len(),
            });
        }
        let mut all = vec![self.post_state.clone()];
        for v in &complement {
            v.ensure_dim(dim, "post-selection completion")?;
        }
        all.extend(complement.iter().cloned());
        if orthonormality_defect(&all) > IDENTITY_TOL {
            return Err(Error::NotOrthonormal("post-selection completion".into()));
        }
        self.post_complement = complement;
        Ok(self)
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn dim(&self) -> usize {
        self.propagator.dim()
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn step_count(&self) -> usize {
        self.steps.len()
    }

    pub fn pre_state(&self) -> &StateVector {
        &self.pre_state
    }

    pub fn post_state(&self) -> &StateVector {
        &self.post_state
    }

    pub fn post_complement(&self) -> &[StateVector] {
        &self.post_complement
    }

    pub fn propagator(&self) -> &Propagator {
        &self.propagator
    }

    pub fn final_time(&self) -> f64 {
        self.final_time
    }

    /// Number of virtual paths, `dim^K`.
    pub fn path_count(&self) -> usize {
        self.dim().pow(self.steps.len() as u32)
    }

    /// Final states of every branch: the post-selected state first, then the
    /// completion in order.
    pub fn final_states(&self) -> Vec<&StateVector> {
        std::iter::once(&self.post_state)
            .chain(self.post_complement.iter())
            .collect()
    }

    /// `<phi|U(T)|psi>`.
    pub fn transition_amplitude(&self) -> C64 {
        let evolved = self.propagator.unitary(self.final_time) * self.pre_state.as_dvector();
        self.post_state.as_dvector().dotc(&evolved)
    }

    /// Amplitudes of every virtual path ending in the post-selected state,
    /// in lexicographic path order.
    pub fn path_amplitudes(&self) -> Vec<C64> {
        PathKernel::new(self, &self.post_state).amplitudes()
    }

    /// Path amplitudes for each final state, index 0 being the post-selected one.
    pub fn branch_path_amplitudes(&self) -> Vec<Vec<C64>> {
        self.final_states()
            .into_iter()
            .map(|phi| PathKernel::new(self, phi).amplitudes())
            .collect()
    }

    pub(crate) fn kernel(&self) -> PathKernel {
        PathKernel::new(self, &self.post_state)
    }
}

/// Transition amplitudes between consecutive steps of a chain, for one final state.
pub(crate) struct PathKernel {
    dim: usize,
    steps: usize,
    // <i_1|U(t_1)|psi>
    first: Vec<C64>,
    // hops[k][(j, i)] = <j_{k+1}|U(t_{k+1} - t_k)|i_k>
    hops: Vec<DMatrix<C64>>,
    // <phi|U(T - t_K)|i_K>
    last: Vec<C64>,
    direct: C64,
}

impl PathKernel {
    fn new(chain: &MeasurementChain, phi: &StateVector) -> Self {
        let dim = chain.dim();
        let prop = &chain.propagator;
        let psi = chain.pre_state.as_dvector();
        let phi = phi.as_dvector();
        let direct = phi.dotc(&(prop.unitary(chain.final_time) * psi));
        let steps = &chain.steps;
        if steps.is_empty() {
            return Self {
                dim,
                steps: 0,
                first: Vec::new(),
                hops: Vec::new(),
                last: Vec::new(),
                direct,
            };
        }
        let basis = |k: usize| steps[k].observable.eigenvectors();
        let evolved = prop.unitary(steps[0].time) * psi;
        let first = (0..dim).map(|i| basis(0).column(i).dotc(&evolved)).collect();
        let hops = (1..steps.len())
            .map(|k| {
                let u = prop.unitary(steps[k].time - steps[k - 1].time);
                basis(k).adjoint() * u * basis(k - 1)
            })
            .collect();
        let kk = steps.len() - 1;
        let back: DVector<C64> = prop.unitary(chain.final_time - steps[kk].time).adjoint() * phi;
        // <phi|U|i> = conj(<i|U^dagger|phi>)
        let last = (0..dim)
            .map(|i| basis(kk).column(i).dotc(&back).conj())
            .collect();
        Self {
            dim,
            steps: steps.len(),
            first,
            hops,
            last,
            direct,
        }
    }

    fn count(&self) -> usize {
        self.dim.pow(self.steps as u32)
    }

    fn amplitude_of(&self, indices: &[usize]) -> C64 {
        if self.steps == 0 {
            return self.direct;
        }
        let mut amp = self.first[indices[0]];
        for (k, hop) in self.hops.iter().enumerate() {
            amp *= hop[(indices[k + 1], indices[k])];
        }
        amp * self.last[indices[self.steps - 1]]
    }

    fn amplitude_at(&self, flat: usize) -> C64 {
        let path = VirtualPath::from_flat_index(flat, self.dim, self.steps);
        self.amplitude_of(&path.indices)
    }

    pub(crate) fn amplitudes(&self) -> Vec<C64> {
        let n = self.count();
        if n >= PARALLEL_PATH_THRESHOLD {
            (0..n).into_par_iter().map(|i| self.amplitude_at(i)).collect()
        } else {
            (0..n).map(|i| self.amplitude_at(i)).collect()
        }
    }
}

/// A virtual path: one eigenstate index (zero-based) per intermediate step.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VirtualPath {
    pub indices: Vec<usize>,
}

impl VirtualPath {
    pub fn new(indices: Vec<usize>) -> Self {
        Self { indices }
    }

    /// Decodes a lexicographic path number, first step most significant.
    pub fn from_flat_index(mut flat: usize, dim: usize, steps: usize) -> Self {
        let mut indices = vec![0; steps];
        for slot in indices.iter_mut().rev() {
            *slot = flat % dim;
            flat /= dim;
        }
        Self { indices }
    }

    pub fn flat_index(&self, dim: usize) -> usize {
        self.indices.iter().fold(0, |acc, &i| acc * dim + i)
    }

    fn validate(&self, chain: &MeasurementChain) -> Result<()> {
        if self.indices.len() != chain.step_count() || self.indices.iter().any(|&i| i >= chain.dim()) {
            return Err(Error::InvalidPath {
                path: self.indices.clone(),
                dim: chain.dim(),
                steps: chain.step_count(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for VirtualPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, i) in self.indices.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        write!(f, ")")
    }
}

/// All `dim^K` virtual paths in lexicographic order. A chain without
/// intermediate steps has the single empty path.
pub fn enumerate_paths(chain: &MeasurementChain) -> Vec<VirtualPath> {
    let (dim, steps) = (chain.dim(), chain.step_count());
    (0..chain.path_count())
        .map(|flat| VirtualPath::from_flat_index(flat, dim, steps))
        .collect()
}

/// `<phi|U(T-t_K)|i_K> ... <i_2|U(t_2-t_1)|i_1><i_1|U(t_1)|psi>`.
pub fn path_amplitude(chain: &MeasurementChain, path: &VirtualPath) -> Result<C64> {
    path.validate(chain)?;
    Ok(chain.kernel().amplitude_of(&path.indices))
}

/// A real number assigned to every virtual path.
#[derive(Debug, Clone, PartialEq)]
pub enum PathFunctional {
    /// Eigenvalue of the observable measured at step `k` (zero-based).
    EigenvalueAtStep(usize),
    /// `sum_k w_k * eigenvalue_at_step(k)`.
    LinearCombination(Vec<(usize, f64)>),
    /// 1 on path number `j` (lexicographic, zero-based), 0 elsewhere.
    IndicatorOfPath(usize),
    Constant(f64),
    /// Explicit value per path in lexicographic order.
    Table(Vec<f64>),
}

impl PathFunctional {
    /// Values on every path of `chain`, in lexicographic path order.
    pub fn values(&self, chain: &MeasurementChain) -> Result<Vec<f64>> {
        let (dim, steps, count) = (chain.dim(), chain.step_count(), chain.path_count());
        let check_step = |k: usize| {
            if k < steps {
                Ok(())
            } else {
                Err(Error::InvalidFunctional(format!(
                    "step {k} does not exist, chain has {steps} steps"
                )))
            }
        };
        let values = match self {
            PathFunctional::EigenvalueAtStep(k) => {
                check_step(*k)?;
                let eig = chain.steps()[*k].observable.eigenvalues();
                (0..count)
                    .map(|flat| eig[VirtualPath::from_flat_index(flat, dim, steps).indices[*k]])
                    .collect()
            }
            PathFunctional::LinearCombination(terms) => {
                for (k, w) in terms {
                    check_step(*k)?;
                    if !w.is_finite() {
                        return Err(Error::InvalidFunctional("non-finite weight".into()));
                    }
                }
                (0..count)
                    .map(|flat| {
                        let path = VirtualPath::from_flat_index(flat, dim, steps);
                        terms
                            .iter()
                            .map(|&(k, w)| w * chain.steps()[k].observable.eigenvalues()[path.indices[k]])
                            .sum()
                    })
                    .collect()
            }
            PathFunctional::IndicatorOfPath(j) => {
                if *j >= count {
                    return Err(Error::InvalidFunctional(format!(
                        "path {j} does not exist, chain has {count} paths"
                    )));
                }
                (0..count).map(|i| if i == *j { 1.0 } else { 0.0 }).collect()
            }
            PathFunctional::Constant(v) => vec![*v; count],
            PathFunctional::Table(table) => {
                if table.len() != count {
                    return Err(Error::InvalidFunctional(format!(
                        "table has {} entries, chain has {count} paths",
                        table.len()
                    )));
                }
                table.clone()
            }
        };
        if values.iter().any(|v: &f64| !v.is_finite()) {
            return Err(Error::InvalidFunctional("non-finite value".into()));
        }
        Ok(values)
    }

    pub fn value(&self, chain: &MeasurementChain, path: &VirtualPath) -> Result<f64> {
        path.validate(chain)?;
        Ok(self.values(chain)?[path.flat_index(chain.dim())])
    }
}

/// Summed path amplitudes per distinct functional value: the delta comb
/// `Phi(f) = sum_m A(f_m) delta(f - f_m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeDistribution {
    support: Vec<f64>,
    amps: Vec<C64>,
}

impl AmplitudeDistribution {
    /// Groups `(value, amplitude)` pairs whose values lie within `merge_tol`
    /// of the smallest value of their group.
    pub fn from_points(points: &[(f64, C64)], merge_tol: f64) -> Result<Self> {
        if !(merge_tol >= 0.0) {
            return Err(Error::NegativeTolerance(merge_tol));
        }
        if points.is_empty() {
            return Err(Error::InvalidArgument("empty amplitude distribution".into()));
        }
        if points.iter().any(|(f, a)| !f.is_finite() || !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::NonFinite("amplitude distribution".into()));
        }
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&a, &b| points[a].0.total_cmp(&points[b].0).then(a.cmp(&b)));
        let mut support: Vec<f64> = Vec::new();
        let mut amps: Vec<C64> = Vec::new();
        for i in order {
            let (f, a) = points[i];
            match support.last() {
                Some(&anchor) if f - anchor <= merge_tol => {
                    *amps.last_mut().expect("amps track support") += a;
                }
                _ => {
                    support.push(f);
                    amps.push(a);
                }
            }
        }
        Ok(Self { support, amps })
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, C64)> + '_ {
        self.support.iter().copied().zip(self.amps.iter().copied())
    }

    /// `int Phi(f) df`, the transition amplitude.
    pub fn total(&self) -> C64 {
        self.amps.iter().sum()
    }

    /// Smallest distance between neighbouring support values (infinite for a single point).
    pub fn min_gap(&self) -> f64 {
        self.support
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    fn non_forbidden_total(&self) -> Result<C64> {
        let total = self.total();
        if total.norm() <= FORBIDDEN_THRESHOLD {
            Err(Error::ForbiddenTransition {
                magnitude: total.norm(),
            })
        } else {
            Ok(total)
        }
    }

    /// `alpha(f_m) = A(f_m) / sum_n A(f_n)`.
    pub fn relative_amplitudes(&self) -> Result<Vec<(f64, C64)>> {
        let total = self.non_forbidden_total()?;
        Ok(self.iter().map(|(f, a)| (f, a / total)).collect())
    }

    /// `sum_m f_m A(f_m) / sum_m A(f_m)`.
    pub fn weak_value(&self) -> Result<C64> {
        let total = self.non_forbidden_total()?;
        let weighted: C64 = self.iter().map(|(f, a)| a * f).sum();
        Ok(weighted / total)
    }

    /// Squared moduli `|A(f_m)|^2`, the accurate-meter probabilities (unnormalised).
    pub fn strong_bins(&self) -> Vec<(f64, f64)> {
        self.iter().map(|(f, a)| (f, a.norm_sqr())).collect()
    }

    /// `sum_m f_m |A(f_m)|^2 / sum_m |A(f_m)|^2`.
    pub fn strong_mean(&self) -> Result<f64> {
        let weight: f64 = self.amps.iter().map(|a| a.norm_sqr()).sum();
        if weight == 0.0 {
            return Err(Error::AllAmplitudesZero);
        }
        let num: f64 = self.iter().map(|(f, a)| f * a.norm_sqr()).sum();
        Ok(num / weight)
    }
}

/// Groups the post-selected path amplitudes of `chain` by the value of `functional`.
pub fn amplitude_distribution(
    chain: &MeasurementChain,
    functional: &PathFunctional,
    merge_tol: f64,
) -> Result<AmplitudeDistribution> {
    if !(merge_tol >= 0.0) {
        return Err(Error::NegativeTolerance(merge_tol));
    }
    let values = functional.values(chain)?;
    let amps = chain.path_amplitudes();
    let points: Vec<(f64, C64)> = values.into_iter().zip(amps).collect();
    AmplitudeDistribution::from_points(&points, merge_tol)
}

/// Amplitude distributions for every final state: index 0 is the
/// post-selected branch, the rest follow the completion order.
pub fn branch_distributions(
    chain: &MeasurementChain,
    functional: &PathFunctional,
    merge_tol: f64,
) -> Result<Vec<AmplitudeDistribution>> {
    if !(merge_tol >= 0.0) {
        return Err(Error::NegativeTolerance(merge_tol));
    }
    let values = functional.values(chain)?;
    chain
        .branch_path_amplitudes()
        .into_iter()
        .map(|amps| {
            let points: Vec<(f64, C64)> = values.iter().copied().zip(amps).collect();
            AmplitudeDistribution::from_points(&points, merge_tol)
        })
        .collect()
}

pub fn relative_amplitudes(
    chain: &MeasurementChain,
    functional: &PathFunctional,
) -> Result<Vec<(f64, C64)>> {
    amplitude_distribution(chain, functional, DEFAULT_MERGE_TOL)?.relative_amplitudes()
}

pub fn weak_value(chain: &MeasurementChain, functional: &PathFunctional) -> Result<C64> {
    amplitude_distribution(chain, functional, DEFAULT_MERGE_TOL)?.weak_value()
}

pub fn strong_mean(chain: &MeasurementChain, functional: &PathFunctional) -> Result<f64> {
    amplitude_distribution(chain, functional, DEFAULT_MERGE_TOL)?.strong_mean()
}

/// A weighted superposition of virtual paths of one chain.
///
/// The functional value is `None` (indeterminate) once components with
/// different values are combined with non-zero weights.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBundle {
    chain_id: u64,
    amplitude: C64,
    value: Option<f64>,
}

impl PathBundle {
    pub fn from_path(
        chain: &MeasurementChain,
        path: &VirtualPath,
        functional: &PathFunctional,
    ) -> Result<Self> {
        Ok(Self {
            chain_id: chain.id(),
            amplitude: path_amplitude(chain, path)?,
            value: Some(functional.value(chain, path)?),
        })
    }

    pub fn amplitude(&self) -> C64 {
        self.amplitude
    }

    pub fn value(&self) -> Option<f64> {
        self.value
    }

    pub fn is_determinate(&self) -> bool {
        self.value.is_some()
    }
}

/// The bundle `alpha {p} + beta {q}` with amplitude `alpha A[p] + beta A[q]`.
pub fn combine_paths(alpha: C64, p: &PathBundle, beta: C64, q: &PathBundle) -> Result<PathBundle> {
    if p.chain_id != q.chain_id {
        return Err(Error::ChainMismatch);
    }
    let zero = c(0.0, 0.0);
    let value = match (alpha == zero, beta == zero) {
        (false, true) => p.value,
        (true, false) => q.value,
        (true, true) => None,
        (false, false) => match (p.value, q.value) {
            (Some(a), Some(b)) if (a - b).abs() <= DEFAULT_MERGE_TOL => Some(a),
            _ => None,
        },
    };
    Ok(PathBundle {
        chain_id: p.chain_id,
        amplitude: alpha * p.amplitude + beta * q.amplitude,
        value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn ket(re: &[f64]) -> StateVector {
        StateVector::from_real(re).unwrap()
    }

    fn single_step_chain(psi: &[f64], phi: &[f64], obs: Observable) -> MeasurementChain {
        MeasurementChain::new(
            ket(psi),
            vec![Step::new(0.5, obs)],
            Propagator::zero(psi.len()).unwrap(),
            1.0,
            ket(phi),
        )
        .unwrap()
    }

    fn sigma_z_diag() -> Observable {
        Observable::diagonal(&[1.0, -1.0]).unwrap()
    }

    #[test]
    fn enumerates_lexicographically() {
        let z = sigma_z_diag();
        let prop = Propagator::zero(2).unwrap();
        let chain = MeasurementChain::new(
            ket(&[1.0, 0.0]),
            vec![Step::new(0.3, z.clone()), Step::new(0.6, z)],
            prop,
            1.0,
            ket(&[1.0, 0.0]),
        )
        .unwrap();
        let shown: Vec<String> = enumerate_paths(&chain).iter().map(|p| p.to_string()).collect();
        assert_eq!(shown, ["(1,1)", "(1,2)", "(2,1)", "(2,2)"]);

        let three = single_step_chain(&[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0], Observable::diagonal(&[0.0, 1.0, 2.0]).unwrap());
        assert_eq!(enumerate_paths(&three).len(), 3);
    }

    #[test]
    fn no_steps_gives_single_empty_path() {
        let chain = MeasurementChain::new(
            ket(&[0.6, 0.8]),
            vec![],
            Propagator::zero(2).unwrap(),
            1.0,
            ket(&[1.0, 0.0]),
        )
        .unwrap();
        let paths = enumerate_paths(&chain);
        assert_eq!(paths, vec![VirtualPath::new(vec![])]);
        assert_abs_diff_eq!(path_amplitude(&chain, &paths[0]).unwrap().re, 0.6, epsilon = 1e-15);
    }

    #[test]
    fn amplitudes_of_orthogonal_paths() {
        let chain = single_step_chain(&[1.0, 0.0], &[1.0, 0.0], sigma_z_diag());
        let amps = chain.path_amplitudes();
        assert_eq!(amps[0], c(1.0, 0.0));
        assert_eq!(amps[1], c(0.0, 0.0));
    }

    #[test]
    fn amplitudes_direct_product_oracle() {
        let psi = [0.8f64.sqrt(), 0.2f64.sqrt()];
        let chain = single_step_chain(&psi, &[FRAC_1_SQRT_2, FRAC_1_SQRT_2], sigma_z_diag());
        let amps = chain.path_amplitudes();
        // <phi|i><i|psi> with real states
        assert_abs_diff_eq!(amps[0].re, FRAC_1_SQRT_2 * psi[0], epsilon = 1e-15);
        assert_abs_diff_eq!(amps[1].re, FRAC_1_SQRT_2 * psi[1], epsilon = 1e-15);
        assert_abs_diff_eq!(amps[0].re, 0.63246, epsilon = 1e-5);
        assert_abs_diff_eq!(amps[1].re, 0.31623, epsilon = 1e-5);
    }

    #[test]
    fn invalid_paths_rejected() {
        let chain = single_step_chain(&[1.0, 0.0], &[1.0, 0.0], sigma_z_diag());
        assert!(matches!(
            path_amplitude(&chain, &VirtualPath::new(vec![2])),
            Err(Error::InvalidPath { .. })
        ));
        assert!(matches!(
            path_amplitude(&chain, &VirtualPath::new(vec![0, 0])),
            Err(Error::InvalidPath { .. })
        ));
    }

    #[test]
    fn times_must_increase_inside_window() {
        let z = sigma_z_diag();
        let build = |times: &[f64]| {
            MeasurementChain::new(
                ket(&[1.0, 0.0]),
                times.iter().map(|&t| Step::new(t, z.clone())).collect(),
                Propagator::zero(2).unwrap(),
                1.0,
                ket(&[1.0, 0.0]),
            )
        };
        assert!(build(&[0.2, 0.4]).is_ok());
        for bad in [&[0.4, 0.2][..], &[0.0], &[1.0], &[0.3, 0.3]] {
            assert!(matches!(build(bad), Err(Error::InvalidTimeOrdering(_))));
        }
    }

    #[test]
    fn path_cap_enforced() {
        let z = sigma_z_diag();
        let steps: Vec<Step> = (1..=21).map(|k| Step::new(k as f64 / 22.0, z.clone())).collect();
        let err = MeasurementChain::new(ket(&[1.0, 0.0]), steps, Propagator::zero(2).unwrap(), 1.0, ket(&[1.0, 0.0]));
        assert!(matches!(err, Err(Error::TooManyPaths { .. })));
    }

    #[test]
    fn projector_relabels_support() {
        let proj = Observable::diagonal(&[1.0, 0.0]).unwrap();
        let chain = single_step_chain(&[0.6, 0.8], &[FRAC_1_SQRT_2, FRAC_1_SQRT_2], proj);
        let amps = chain.path_amplitudes();
        let dist = amplitude_distribution(&chain, &PathFunctional::EigenvalueAtStep(0), DEFAULT_MERGE_TOL).unwrap();
        assert_eq!(dist.support(), &[0.0, 1.0][..]);
        assert_eq!(dist.amplitudes(), &[amps[1], amps[0]][..]);
    }

    #[test]
    fn constant_functional_collapses_to_total() {
        let chain = single_step_chain(&[0.6, 0.8], &[FRAC_1_SQRT_2, FRAC_1_SQRT_2], sigma_z_diag());
        let dist = amplitude_distribution(&chain, &PathFunctional::Constant(2.5), DEFAULT_MERGE_TOL).unwrap();
        assert_eq!(dist.support(), &[2.5][..]);
        assert_abs_diff_eq!((dist.total() - chain.transition_amplitude()).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn negative_merge_tolerance_rejected() {
        let chain = single_step_chain(&[0.6, 0.8], &[1.0, 0.0], sigma_z_diag());
        assert!(matches!(
            amplitude_distribution(&chain, &PathFunctional::EigenvalueAtStep(0), -1.0),
            Err(Error::NegativeTolerance(_))
        ));
    }

    #[test]
    fn relative_amplitude_examples() {
        let three = AmplitudeDistribution::from_points(
            &[(0.0, c(1.0, 0.0)), (1.0, c(-1.0, 0.0)), (2.0, c(1.0, 0.0))],
            0.0,
        )
        .unwrap();
        let alpha: Vec<f64> = three.relative_amplitudes().unwrap().iter().map(|a| a.1.re).collect();
        assert_eq!(alpha, vec![1.0, -1.0, 1.0]);

        let ratio = AmplitudeDistribution::from_points(&[(1.0, c(1.0, 0.0)), (0.0, c(-1.01, 0.0))], 0.0).unwrap();
        let rel = ratio.relative_amplitudes().unwrap();
        // support sorted: f=0 carries -1.01, f=1 carries 1
        assert_abs_diff_eq!(rel[1].1.re, -100.0, epsilon = 1e-9);
        assert_abs_diff_eq!(rel[0].1.re, 101.0, epsilon = 1e-9);
        assert_abs_diff_eq!(ratio.weak_value().unwrap().re, -100.0, epsilon = 1e-9);

        let single = AmplitudeDistribution::from_points(&[(3.0, c(0.2, 0.1))], 0.0).unwrap();
        assert_abs_diff_eq!((single.relative_amplitudes().unwrap()[0].1 - c(1.0, 0.0)).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn forbidden_transition_detected() {
        let chain = single_step_chain(&[1.0, 0.0], &[0.0, 1.0], sigma_z_diag());
        assert!(matches!(
            weak_value(&chain, &PathFunctional::EigenvalueAtStep(0)),
            Err(Error::ForbiddenTransition { .. })
        ));
        assert!(matches!(
            strong_mean(&chain, &PathFunctional::EigenvalueAtStep(0)),
            Err(Error::AllAmplitudesZero)
        ));
    }

    #[test]
    fn weak_and_strong_on_textbook_chain() {
        let chain = single_step_chain(&[0.8f64.sqrt(), 0.2f64.sqrt()], &[FRAC_1_SQRT_2, FRAC_1_SQRT_2], sigma_z_diag());
        let f = PathFunctional::EigenvalueAtStep(0);
        // (A1 - A2)/(A1 + A2) with A_i = phi_i psi_i
        let (a1, a2) = (FRAC_1_SQRT_2 * 0.8f64.sqrt(), FRAC_1_SQRT_2 * 0.2f64.sqrt());
        let wv = weak_value(&chain, &f).unwrap();
        assert_abs_diff_eq!(wv.re, (a1 - a2) / (a1 + a2), epsilon = 1e-12);
        assert_abs_diff_eq!(wv.re, 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(wv.im, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(strong_mean(&chain, &f).unwrap(), 0.6, epsilon = 1e-12);

        let trivial = single_step_chain(&[1.0, 0.0], &[1.0, 0.0], sigma_z_diag());
        assert_eq!(strong_mean(&trivial, &f).unwrap(), 1.0);
        assert_eq!(weak_value(&trivial, &PathFunctional::IndicatorOfPath(0)).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn combining_paths() {
        let x = Observable::pauli_x();
        let z = Observable::pauli_z();
        let chain = MeasurementChain::new(
            ket(&[0.6, 0.8]),
            vec![Step::new(0.3, z), Step::new(0.6, x)],
            Propagator::zero(2).unwrap(),
            1.0,
            ket(&[FRAC_1_SQRT_2, -FRAC_1_SQRT_2]),
        )
        .unwrap();
        let diff = PathFunctional::LinearCombination(vec![(1, 1.0), (0, -1.0)]);
        let bundle = |i: usize| PathBundle::from_path(&chain, &VirtualPath::from_flat_index(i, 2, 2), &diff).unwrap();
        let (p1, p2, p4) = (bundle(0), bundle(1), bundle(3));
        let one = c(1.0, 0.0);
        let zero = c(0.0, 0.0);

        let same = combine_paths(one, &p1, zero, &p2).unwrap();
        assert_eq!(same.amplitude(), p1.amplitude());
        assert_eq!(same.value(), p1.value());

        let grouped = combine_paths(one, &p1, one, &p4).unwrap();
        assert_eq!(grouped.amplitude(), p1.amplitude() + p4.amplitude());
        assert_eq!(grouped.value(), Some(0.0));

        let mixed = combine_paths(one, &p1, one, &p2).unwrap();
        assert_eq!(mixed.amplitude(), p1.amplitude() + p2.amplitude());
        assert!(!mixed.is_determinate());

        let other = single_step_chain(&[1.0, 0.0], &[1.0, 0.0], sigma_z_diag());
        let foreign = PathBundle::from_path(&other, &VirtualPath::new(vec![0]), &PathFunctional::EigenvalueAtStep(0)).unwrap();
        assert_eq!(combine_paths(one, &p1, one, &foreign), Err(Error::ChainMismatch));
    }

    #[test]
    fn custom_completion_validated() {
        let chain = single_step_chain(&[1.0, 0.0], &[1.0, 0.0], sigma_z_diag());
        assert!(chain.clone().with_post_complement(vec![ket(&[0.0, -1.0])]).is_ok());
        assert!(matches!(
            chain.with_post_complement(vec![ket(&[1.0, 1.0])]),
            Err(Error::NotOrthonormal(_))
        ));
    }
}
