//! Von Neumann pointers coupled to path functionals.
//!
//! A meter shifts its pointer by the value of a functional on each virtual
//! path, so after post-selection the pointer wavefunction is
//! `M'(xi) = sum_m A(f_m) G(xi - f_m)` and readings are distributed with the
//! (unnormalised) density `P(xi) = |M'(xi)|^2`. All integrals are composite
//! trapezoid sums on uniform grids.

use std::f64::consts::PI;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::paths::{
    amplitude_distribution, branch_distributions, AmplitudeDistribution, MeasurementChain,
    PathFunctional, DEFAULT_MERGE_TOL,
};
use crate::quantum::{c, StateVector, C64};

/// Default number of grid steps per pointer width.
pub const STEPS_PER_WIDTH: f64 = 200.0;
/// Default grid padding beyond the shifted supports, in pointer widths, for Gaussian pointers.
pub const GAUSSIAN_PADDING: f64 = 8.0;
/// Minimum padding a Gaussian grid must have, in pointer widths.
pub const GAUSSIAN_COVERAGE: f64 = 5.0;
/// Largest number of nodes a (joint) grid may have.
pub const MAX_GRID_POINTS: usize = 200_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "shape")]
pub enum ProfileShape {
    /// `G(xi) = (2 pi w^2)^(-1/4) exp(-xi^2 / (4 w^2))`, so `G^2` is a normal
    /// density with standard deviation equal to the width.
    Gaussian,
    /// `G(xi) = 1/sqrt(w)` for `|xi| < w/2`, zero outside; at the window edge
    /// `G^2` takes the midpoint value `1/(2w)`.
    Rectangular,
    /// Unit-width profile sampled at `xs` (strictly increasing), linearly
    /// interpolated and zero outside the table. `int g(u)^2 du` must be 1.
    Tabulated { xs: Vec<f64>, values: Vec<f64> },
}

/// Initial pointer wavefunction `G(xi|w) = w^(-1/2) g(xi/w)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointerProfile {
    #[serde(flatten)]
    shape: ProfileShape,
    width: f64,
}

impl PointerProfile {
    pub fn new(shape: ProfileShape, width: f64) -> Result<Self> {
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::InvalidProfile(format!("width must be positive, got {width}")));
        }
        if let ProfileShape::Tabulated { xs, values } = &shape {
            if xs.len() != values.len() || xs.len() < 2 {
                return Err(Error::InvalidProfile(
                    "tabulated profile needs at least two (x, value) pairs".into(),
                ));
            }
            if xs.iter().chain(values).any(|v| !v.is_finite()) {
                return Err(Error::InvalidProfile("tabulated profile is not finite".into()));
            }
            if xs.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidProfile("tabulated abscissae must increase".into()));
            }
            let norm: f64 = xs
                .windows(2)
                .zip(values.windows(2))
                .map(|(x, g)| 0.5 * (x[1] - x[0]) * (g[0] * g[0] + g[1] * g[1]))
                .sum();
            if (norm - 1.0).abs() > 1e-8 {
                return Err(Error::InvalidProfile(format!(
                    "tabulated profile has int g^2 = {norm}, expected 1"
                )));
            }
        }
        Ok(Self { shape, width })
    }

    pub fn gaussian(width: f64) -> Result<Self> {
        Self::new(ProfileShape::Gaussian, width)
    }

    pub fn rectangular(width: f64) -> Result<Self> {
        Self::new(ProfileShape::Rectangular, width)
    }

    pub fn shape(&self) -> &ProfileShape {
        &self.shape
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn with_width(&self, width: f64) -> Result<Self> {
        Self::new(self.shape.clone(), width)
    }

    pub fn eval(&self, xi: f64) -> f64 {
        let w = self.width;
        match &self.shape {
            ProfileShape::Gaussian => {
                (2.0 * PI * w * w).powf(-0.25) * (-xi * xi / (4.0 * w * w)).exp()
            }
            ProfileShape::Rectangular => {
                let edge = (xi.abs() - 0.5 * w) / w;
                if edge.abs() <= 1e-9 {
                    (2.0 * w).sqrt().recip()
                } else if edge < 0.0 {
                    w.sqrt().recip()
                } else {
                    0.0
                }
            }
            ProfileShape::Tabulated { xs, values } => {
                let u = xi / w;
                let last = xs.len() - 1;
                if u < xs[0] || u > xs[last] {
                    return 0.0;
                }
                let k = xs.partition_point(|&x| x <= u).clamp(1, last);
                let t = (u - xs[k - 1]) / (xs[k] - xs[k - 1]);
                (values[k - 1] * (1.0 - t) + values[k] * t) / w.sqrt()
            }
        }
    }

    /// Half-width around each shift that a grid must cover.
    pub fn coverage_halfwidth(&self) -> f64 {
        match &self.shape {
            ProfileShape::Gaussian => GAUSSIAN_COVERAGE * self.width,
            ProfileShape::Rectangular => 0.5 * self.width,
            ProfileShape::Tabulated { xs, .. } => {
                xs[0].abs().max(xs[xs.len() - 1].abs()) * self.width
            }
        }
    }

    /// Default padding of a grid beyond the extreme shifts.
    pub fn default_padding(&self) -> f64 {
        match &self.shape {
            ProfileShape::Gaussian => GAUSSIAN_PADDING * self.width,
            ProfileShape::Rectangular => self.width,
            ProfileShape::Tabulated { .. } => self.coverage_halfwidth() + 0.05 * self.width,
        }
    }
}

/// Uniform grid `min + k * step`, `k = 0..len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    min: f64,
    step: f64,
    len: usize,
}

#[derive(Serialize, Deserialize)]
struct GridRepr {
    min: f64,
    max: f64,
    step: f64,
}

impl Serialize for Grid {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GridRepr {
            min: self.min,
            max: self.max(),
            step: self.step,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Grid {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = GridRepr::deserialize(d)?;
        Grid::new(r.min, r.max, r.step).map_err(serde::de::Error::custom)
    }
}

impl Grid {
    /// Smallest uniform grid starting at `min` with spacing `step` that reaches `max`.
    pub fn new(min: f64, max: f64, step: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && step.is_finite()) {
            return Err(Error::InvalidGrid("bounds and step must be finite".into()));
        }
        if !(step > 0.0 && max > min) {
            return Err(Error::InvalidGrid(format!(
                "need step > 0 and max > min, got [{min}, {max}] step {step}"
            )));
        }
        let intervals = ((max - min) / step - 1e-9).ceil().max(1.0);
        if intervals + 1.0 > MAX_GRID_POINTS as f64 {
            return Err(Error::InvalidGrid(format!(
                "{} nodes exceed the limit of {MAX_GRID_POINTS}",
                intervals + 1.0
            )));
        }
        Ok(Self {
            min,
            step,
            len: intervals as usize + 1,
        })
    }

    /// Default grid for readings of `profile` shifted over `[lo, hi]`. It spans
    /// exactly `[lo - padding, hi + padding]`; the step is shrunk, if needed, so
    /// that it divides the span, which keeps tail truncation symmetric.
    pub fn covering(lo: f64, hi: f64, profile: &PointerProfile, options: &GridOptions) -> Result<Self> {
        let w = profile.width();
        let step = options.step.unwrap_or(w / STEPS_PER_WIDTH);
        let padding = match options.padding {
            Some(p) => p * w,
            None => profile.default_padding(),
        };
        if !(step.is_finite() && step > 0.0 && padding.is_finite() && padding >= 0.0) {
            return Err(Error::InvalidGrid(format!("bad step {step} or padding {padding}")));
        }
        let span = hi - lo + 2.0 * padding;
        let intervals = (span / step - 1e-9).ceil().max(1.0);
        Self::new(lo - padding, hi + padding, span / intervals)
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.node(self.len - 1)
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn node(&self, k: usize) -> f64 {
        self.min + k as f64 * self.step
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(|k| self.node(k))
    }

    /// Trapezoid weight of node `k`.
    pub fn weight(&self, k: usize) -> f64 {
        if k == 0 || k + 1 == self.len {
            0.5 * self.step
        } else {
            self.step
        }
    }

    fn ensure_covers(&self, lo: f64, hi: f64, halfwidth: f64) -> Result<()> {
        let (need_min, need_max) = (lo - halfwidth, hi + halfwidth);
        let slack = 1e-9 * halfwidth.max(self.step);
        if self.min > need_min + slack || self.max() < need_max - slack {
            return Err(Error::GridTooNarrow {
                min: self.min,
                max: self.max(),
                need_min,
                need_max,
            });
        }
        Ok(())
    }
}

/// Overrides for default grid construction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct GridOptions {
    /// Absolute node spacing; default is width / 200.
    pub step: Option<f64>,
    /// Padding beyond the extreme shifts in units of the pointer width.
    pub padding: Option<f64>,
}

/// Pointer reading density on a grid. `norm` is the unnormalised total
/// `int P(xi) dxi`, the probability that this branch is recorded at all.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointerDistribution {
    pub grid: Grid,
    pub density: Vec<f64>,
    pub norm: f64,
}

impl PointerDistribution {
    pub fn new(grid: Grid, density: Vec<f64>) -> Result<Self> {
        if density.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                context: "pointer density".into(),
                expected: grid.len(),
                found: density.len(),
            });
        }
        let norm = density.iter().enumerate().map(|(k, p)| grid.weight(k) * p).sum();
        Ok(Self {
            grid,
            density,
            norm,
        })
    }

    /// `int xi P dxi / int P dxi`.
    pub fn mean(&self) -> Result<f64> {
        if !(self.norm > 1e-300) {
            return Err(Error::ZeroNorm);
        }
        let first: f64 = self
            .density
            .iter()
            .enumerate()
            .map(|(k, p)| self.grid.weight(k) * self.grid.node(k) * p)
            .sum();
        Ok(first / self.norm)
    }

    /// Trapezoid mass of the nodes in `[lo, hi)`.
    pub fn mass_between(&self, lo: f64, hi: f64) -> f64 {
        self.density
            .iter()
            .enumerate()
            .filter(|(k, _)| {
                let x = self.grid.node(*k);
                lo <= x && x < hi
            })
            .map(|(k, p)| self.grid.weight(k) * p)
            .sum()
    }

    /// Mass in the cells of the partition of the real line cut halfway
    /// between neighbouring support values.
    pub fn partition_masses(&self, support: &[f64]) -> Vec<f64> {
        (0..support.len())
            .map(|m| {
                let lo = if m == 0 {
                    f64::NEG_INFINITY
                } else {
                    0.5 * (support[m - 1] + support[m])
                };
                let hi = if m + 1 == support.len() {
                    f64::INFINITY
                } else {
                    0.5 * (support[m] + support[m + 1])
                };
                self.mass_between(lo, hi)
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "xi,density")?;
        for (x, p) in self.grid.nodes().zip(&self.density) {
            writeln!(out, "{x},{p}")?;
        }
        Ok(())
    }
}

pub fn mean_reading(distribution: &PointerDistribution) -> Result<f64> {
    distribution.mean()
}

/// A pointer coupled to a path functional.
#[derive(Debug, Clone, PartialEq)]
pub struct MeterSpec {
    pub functional: PathFunctional,
    pub profile: PointerProfile,
}

impl MeterSpec {
    pub fn new(functional: PathFunctional, profile: PointerProfile) -> Self {
        Self {
            functional,
            profile,
        }
    }

    /// Default grid covering every value the functional takes on `chain`.
    pub fn default_grid(&self, chain: &MeasurementChain, options: &GridOptions) -> Result<Grid> {
        let values = self.functional.values(chain)?;
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Grid::covering(lo, hi, &self.profile, options)
    }
}

/// `M'(xi) = sum_m A(f_m) G(xi - f_m)` on the grid nodes.
pub fn final_pointer_state(
    dist: &AmplitudeDistribution,
    profile: &PointerProfile,
    grid: &Grid,
) -> Result<Vec<C64>> {
    let support = dist.support();
    grid.ensure_covers(support[0], support[support.len() - 1], profile.coverage_halfwidth())?;
    Ok(grid
        .nodes()
        .map(|x| dist.iter().map(|(f, a)| a * profile.eval(x - f)).sum())
        .collect())
}

fn density_of(dist: &AmplitudeDistribution, profile: &PointerProfile, grid: &Grid) -> Result<PointerDistribution> {
    let amps = final_pointer_state(dist, profile, grid)?;
    PointerDistribution::new(*grid, amps.iter().map(|m| m.norm_sqr()).collect())
}

/// Reading density conditioned on successful post-selection (unnormalised).
pub fn reading_distribution(
    chain: &MeasurementChain,
    meter: &MeterSpec,
    grid: &Grid,
) -> Result<PointerDistribution> {
    let dist = amplitude_distribution(chain, &meter.functional, DEFAULT_MERGE_TOL)?;
    density_of(&dist, &meter.profile, grid)
}

/// Reading densities for every final state, post-selected branch first.
/// Their norms add up to one.
pub fn branch_reading_distributions(
    chain: &MeasurementChain,
    meter: &MeterSpec,
    grid: &Grid,
) -> Result<Vec<PointerDistribution>> {
    branch_distributions(chain, &meter.functional, DEFAULT_MERGE_TOL)?
        .iter()
        .map(|d| density_of(d, &meter.profile, grid))
        .collect()
}

/// Unnormalised system state right after a single-step meter reads `xi0`:
/// `sum_i G(xi0 - F[i]) <i|U(t_1)|psi> |i>`.
pub fn conditional_state(chain: &MeasurementChain, meter: &MeterSpec, xi0: f64) -> Result<StateVector> {
    if chain.step_count() != 1 {
        return Err(Error::RequiresSingleStep(chain.step_count()));
    }
    if !xi0.is_finite() {
        return Err(Error::NonFinite("pointer reading".into()));
    }
    let step = &chain.steps()[0];
    let values = meter.functional.values(chain)?;
    let evolved = chain.propagator().apply(step.time, chain.pre_state())?;
    let basis = step.observable.eigenvectors();
    let dim = chain.dim();
    let mut out = vec![c(0.0, 0.0); dim];
    for (i, f) in values.iter().enumerate() {
        let coeff = basis.column(i).dotc(evolved.as_dvector()) * meter.profile.eval(xi0 - f);
        for (slot, v) in out.iter_mut().zip(basis.column(i).iter()) {
            *slot += coeff * v;
        }
    }
    StateVector::new(out)
}

/// Joint density of several pointer readings on a tensor grid, stored
/// row-major (axis 0 slowest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    pub grids: Vec<Grid>,
    pub density: Vec<f64>,
    pub norm: f64,
}

impl JointDistribution {
    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.grids.len()];
        for r in (0..self.grids.len().saturating_sub(1)).rev() {
            strides[r] = strides[r + 1] * self.grids[r + 1].len();
        }
        strides
    }

    fn unravel(&self, mut flat: usize, out: &mut [usize]) {
        for r in (0..self.grids.len()).rev() {
            let n = self.grids[r].len();
            out[r] = flat % n;
            flat /= n;
        }
    }

    pub fn axes(&self) -> usize {
        self.grids.len()
    }

    pub fn at(&self, index: &[usize]) -> f64 {
        let flat: usize = index.iter().zip(self.strides()).map(|(i, s)| i * s).sum();
        self.density[flat]
    }

    /// Marginal density along `axis` restricted to nodes where every
    /// `(axis, lo, hi)` condition holds (`lo <= xi < hi`).
    pub fn conditional_marginal(&self, axis: usize, conditions: &[(usize, f64, f64)]) -> Result<PointerDistribution> {
        if axis >= self.axes() || conditions.iter().any(|c| c.0 >= self.axes()) {
            return Err(Error::InvalidArgument(format!(
                "axis out of range for a {}-meter distribution",
                self.axes()
            )));
        }
        let mut out = vec![0.0; self.grids[axis].len()];
        let mut idx = vec![0; self.axes()];
        for (flat, p) in self.density.iter().enumerate() {
            self.unravel(flat, &mut idx);
            let inside = conditions.iter().all(|&(r, lo, hi)| {
                let x = self.grids[r].node(idx[r]);
                lo <= x && x < hi
            });
            if !inside {
                continue;
            }
            let w: f64 = (0..self.axes())
                .filter(|&r| r != axis)
                .map(|r| self.grids[r].weight(idx[r]))
                .product();
            out[idx[axis]] += w * p;
        }
        PointerDistribution::new(self.grids[axis], out)
    }

    pub fn marginal(&self, axis: usize) -> Result<PointerDistribution> {
        self.conditional_marginal(axis, &[])
    }

    /// Mean reading of every meter.
    pub fn marginal_means(&self) -> Result<Vec<f64>> {
        (0..self.axes()).map(|r| self.marginal(r)?.mean()).collect()
    }

    /// Trapezoid probability mass of every node (product weights times density).
    pub fn node_masses(&self) -> Vec<f64> {
        let mut idx = vec![0; self.axes()];
        self.density
            .iter()
            .enumerate()
            .map(|(flat, p)| {
                self.unravel(flat, &mut idx);
                let w: f64 = idx.iter().zip(&self.grids).map(|(&i, g)| g.weight(i)).product();
                w * p
            })
            .collect()
    }

    /// Coordinates of the node with flat index `flat`.
    pub fn coordinates(&self, flat: usize) -> Vec<f64> {
        let mut idx = vec![0; self.axes()];
        self.unravel(flat, &mut idx);
        idx.iter().zip(&self.grids).map(|(&i, g)| g.node(i)).collect()
    }
}

// Paths sharing the same shift on every meter act on the pointers identically.
fn shift_groups(shifts: &[Vec<f64>], amps: &[C64]) -> (Vec<Vec<f64>>, Vec<C64>) {
    let mut keys: Vec<Vec<f64>> = Vec::new();
    let mut sums: Vec<C64> = Vec::new();
    for (s, a) in shifts.iter().zip(amps) {
        match keys
            .iter()
            .position(|k| k.iter().zip(s).all(|(x, y)| (x - y).abs() <= DEFAULT_MERGE_TOL))
        {
            Some(g) => sums[g] += a,
            None => {
                keys.push(s.clone());
                sums.push(*a);
            }
        }
    }
    (keys, sums)
}

fn joint_density(
    meters: &[MeterSpec],
    grids: &[Grid],
    shifts: &[Vec<f64>],
    amps: &[C64],
) -> Result<JointDistribution> {
    let (keys, sums) = shift_groups(shifts, amps);
    let axes = meters.len();
    // tables[r][g][k] = G_r(x_{r,k} - shift_{g,r})
    let tables: Vec<Vec<Vec<f64>>> = (0..axes)
        .map(|r| {
            keys.iter()
                .map(|key| grids[r].nodes().map(|x| meters[r].profile.eval(x - key[r])).collect())
                .collect()
        })
        .collect();
    let total: usize = grids.iter().map(|g| g.len()).product();
    let inner: usize = grids[1..].iter().map(|g| g.len()).product();
    let mut density = vec![0.0; total];
    density
        .par_chunks_mut(inner)
        .enumerate()
        .for_each(|(k0, slab)| {
            let coeff: Vec<C64> = sums.iter().enumerate().map(|(g, a)| a * tables[0][g][k0]).collect();
            let mut idx = vec![0usize; axes];
            for (flat, slot) in slab.iter_mut().enumerate() {
                let mut rest = flat;
                for r in (1..axes).rev() {
                    let n = grids[r].len();
                    idx[r] = rest % n;
                    rest /= n;
                }
                let m: C64 = coeff
                    .iter()
                    .enumerate()
                    .map(|(g, a)| a * (1..axes).map(|r| tables[r][g][idx[r]]).product::<f64>())
                    .sum();
                *slot = m.norm_sqr();
            }
        });
    let mut joint = JointDistribution {
        grids: grids.to_vec(),
        density,
        norm: 0.0,
    };
    joint.norm = joint.node_masses().iter().sum();
    Ok(joint)
}

fn joint_setup(chain: &MeasurementChain, meters: &[MeterSpec], grids: &[Grid]) -> Result<Vec<Vec<f64>>> {
    if meters.is_empty() {
        return Err(Error::NoMeters);
    }
    if grids.len() != meters.len() {
        return Err(Error::DimensionMismatch {
            context: "grids per meter".into(),
            expected: meters.len(),
            found: grids.len(),
        });
    }
    let total = grids.iter().try_fold(1usize, |acc, g| acc.checked_mul(g.len()));
    if total.is_none_or(|t| t > MAX_GRID_POINTS) {
        return Err(Error::InvalidGrid(format!(
            "joint grid exceeds {MAX_GRID_POINTS} nodes"
        )));
    }
    let per_meter: Vec<Vec<f64>> = meters
        .iter()
        .map(|m| m.functional.values(chain))
        .collect::<Result<_>>()?;
    for (r, (values, grid)) in per_meter.iter().zip(grids).enumerate() {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        grid.ensure_covers(lo, hi, meters[r].profile.coverage_halfwidth())?;
    }
    // shifts[path][meter]
    Ok((0..chain.path_count())
        .map(|p| per_meter.iter().map(|v| v[p]).collect())
        .collect())
}

/// `P(xi_1..xi_R) = |sum_paths A[path] prod_r G_r(xi_r - F_r[path])|^2`
/// for the post-selected branch.
pub fn joint_reading_distribution(
    chain: &MeasurementChain,
    meters: &[MeterSpec],
    grids: &[Grid],
) -> Result<JointDistribution> {
    let shifts = joint_setup(chain, meters, grids)?;
    joint_density(meters, grids, &shifts, &chain.path_amplitudes())
}

/// Joint densities for every final state, post-selected branch first.
pub fn joint_branch_distributions(
    chain: &MeasurementChain,
    meters: &[MeterSpec],
    grids: &[Grid],
) -> Result<Vec<JointDistribution>> {
    let shifts = joint_setup(chain, meters, grids)?;
    chain
        .branch_path_amplitudes()
        .iter()
        .map(|amps| joint_density(meters, grids, &shifts, amps))
        .collect()
}

/// Accurate-meter limit: `|A(f_m)|^2` for every distinct value of the functional.
pub fn strong_limit_bins(chain: &MeasurementChain, functional: &PathFunctional) -> Result<Vec<(f64, f64)>> {
    Ok(amplitude_distribution(chain, functional, DEFAULT_MERGE_TOL)?.strong_bins())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakLimitRow {
    pub width: f64,
    pub mean: f64,
    pub error: f64,
}

/// Mean readings of increasingly inaccurate Gaussian meters against `Re` of the weak value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakLimitReport {
    pub rows: Vec<WeakLimitRow>,
    pub weak_value: C64,
    pub limit: f64,
    pub final_error: f64,
    pub monotone: bool,
}

pub fn weak_limit_sweep(dist: &AmplitudeDistribution, widths: &[f64], options: &GridOptions) -> Result<WeakLimitReport> {
    if widths.is_empty() {
        return Err(Error::InvalidArgument("no widths given".into()));
    }
    if widths.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("widths must increase".into()));
    }
    let weak_value = dist.weak_value()?;
    let limit = weak_value.re;
    let support = dist.support();
    let rows = widths
        .iter()
        .map(|&w| {
            let profile = PointerProfile::gaussian(w)?;
            let grid = Grid::covering(support[0], support[support.len() - 1], &profile, options)?;
            let mean = density_of(dist, &profile, &grid)?.mean()?;
            Ok(WeakLimitRow {
                width: w,
                mean,
                error: (mean - limit).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let monotone = rows.windows(2).all(|r| r[1].error < r[0].error);
    let final_error = rows[rows.len() - 1].error;
    Ok(WeakLimitReport {
        rows,
        weak_value,
        limit,
        final_error,
        monotone,
    })
}

pub fn weak_limit_report(
    chain: &MeasurementChain,
    functional: &PathFunctional,
    widths: &[f64],
) -> Result<WeakLimitReport> {
    let dist = amplitude_distribution(chain, functional, DEFAULT_MERGE_TOL)?;
    weak_limit_sweep(&dist, widths, &GridOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::Step;
    use crate::quantum::{Observable, Propagator};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn ket(re: &[f64]) -> StateVector {
        StateVector::from_real(re).unwrap()
    }

    fn chain(psi: &[f64], phi: &[f64], eig: &[f64]) -> MeasurementChain {
        MeasurementChain::new(
            ket(psi),
            vec![Step::new(0.5, Observable::diagonal(eig).unwrap())],
            Propagator::zero(psi.len()).unwrap(),
            1.0,
            ket(phi),
        )
        .unwrap()
    }

    fn integrate(grid: &Grid, f: impl Fn(f64) -> f64) -> f64 {
        (0..grid.len()).map(|k| grid.weight(k) * f(grid.node(k))).sum()
    }

    #[test]
    fn profiles_are_normalised() {
        for profile in [
            PointerProfile::gaussian(0.7).unwrap(),
            PointerProfile::rectangular(0.5).unwrap(),
        ] {
            let grid = Grid::covering(0.0, 0.0, &profile, &GridOptions::default()).unwrap();
            let norm = integrate(&grid, |x| profile.eval(x).powi(2));
            assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn scaling_law() {
        let unit = PointerProfile::gaussian(1.0).unwrap();
        let wide = PointerProfile::gaussian(3.0).unwrap();
        for xi in [-4.0, -0.3, 0.0, 2.2] {
            assert_abs_diff_eq!(wide.eval(xi), unit.eval(xi / 3.0) / 3.0f64.sqrt(), epsilon = 1e-15);
        }
    }

    #[test]
    fn tabulated_profile_matches_table() {
        // triangle g(u) = sqrt(3/2) (1 - |u|) on [-1, 1] has int g^2 = 1
        let xs: Vec<f64> = (0..=20000).map(|k| -1.0 + k as f64 * 1e-4).collect();
        let values: Vec<f64> = xs.iter().map(|u| (1.5f64).sqrt() * (1.0 - u.abs())).collect();
        let p = PointerProfile::new(ProfileShape::Tabulated { xs, values }, 2.0).unwrap();
        assert_abs_diff_eq!(p.eval(1.0), (1.5f64).sqrt() * 0.5 / 2.0f64.sqrt(), epsilon = 1e-12);
        assert_eq!(p.eval(2.5), 0.0);
        assert_abs_diff_eq!(p.coverage_halfwidth(), 2.0, epsilon = 1e-12);

        let bad = ProfileShape::Tabulated {
            xs: vec![0.0, 1.0],
            values: vec![1.0, 2.0],
        };
        assert!(matches!(PointerProfile::new(bad, 1.0), Err(Error::InvalidProfile(_))));
    }

    #[test]
    fn single_point_is_shifted_profile() {
        let dist = AmplitudeDistribution::from_points(&[(1.5, c(1.0, 0.0))], 0.0).unwrap();
        let profile = PointerProfile::gaussian(0.4).unwrap();
        let grid = Grid::covering(1.5, 1.5, &profile, &GridOptions::default()).unwrap();
        let m = final_pointer_state(&dist, &profile, &grid).unwrap();
        for (k, x) in grid.nodes().enumerate() {
            assert_abs_diff_eq!(m[k].re, profile.eval(x - 1.5), epsilon = 1e-15);
        }
    }

    #[test]
    fn narrow_grid_rejected() {
        let dist = AmplitudeDistribution::from_points(&[(0.0, c(1.0, 0.0)), (1.0, c(1.0, 0.0))], 0.0).unwrap();
        let profile = PointerProfile::gaussian(1.0).unwrap();
        let grid = Grid::new(-3.0, 4.0, 0.01).unwrap();
        assert!(matches!(
            final_pointer_state(&dist, &profile, &grid),
            Err(Error::GridTooNarrow { .. })
        ));
    }

    #[test]
    fn rectangular_windows_are_disjoint() {
        let a = [c(0.3, 0.1), c(-0.2, 0.4)];
        let dist = AmplitudeDistribution::from_points(&[(0.0, a[0]), (1.0, a[1])], 0.0).unwrap();
        let profile = PointerProfile::rectangular(0.5).unwrap();
        let grid = Grid::covering(0.0, 1.0, &profile, &GridOptions::default()).unwrap();
        let m = final_pointer_state(&dist, &profile, &grid).unwrap();
        for (k, x) in grid.nodes().enumerate() {
            let g0 = profile.eval(x);
            let g1 = profile.eval(x - 1.0);
            assert!(g0 == 0.0 || g1 == 0.0);
            let expected = a[0].norm_sqr() * g0 * g0 + a[1].norm_sqr() * g1 * g1;
            assert_abs_diff_eq!(m[k].norm_sqr(), expected, epsilon = 1e-14);
        }
        let p = PointerDistribution::new(grid, m.iter().map(|z| z.norm_sqr()).collect()).unwrap();
        let masses = p.partition_masses(&[0.0, 1.0]);
        assert_abs_diff_eq!(masses[0], a[0].norm_sqr(), epsilon = 1e-12);
        assert_abs_diff_eq!(masses[1], a[1].norm_sqr(), epsilon = 1e-12);
    }

    #[test]
    fn unselected_readings_follow_eigenvalue_mixture() {
        let psi = [0.6, 0.8];
        let ch = chain(&psi, &[FRAC_1_SQRT_2, FRAC_1_SQRT_2], &[-1.0, 1.0]);
        let meter = MeterSpec::new(PathFunctional::EigenvalueAtStep(0), PointerProfile::gaussian(0.8).unwrap());
        let grid = meter.default_grid(&ch, &GridOptions::default()).unwrap();
        let branches = branch_reading_distributions(&ch, &meter, &grid).unwrap();
        let total_norm: f64 = branches.iter().map(|b| b.norm).sum();
        assert_abs_diff_eq!(total_norm, 1.0, epsilon = 1e-6);
        for (k, x) in grid.nodes().enumerate() {
            let summed: f64 = branches.iter().map(|b| b.density[k]).sum();
            let g = |y: f64| meter.profile.eval(y).powi(2);
            let expected = psi[0] * psi[0] * g(x + 1.0) + psi[1] * psi[1] * g(x - 1.0);
            assert_abs_diff_eq!(summed, expected, epsilon = 1e-13);
        }
    }

    #[test]
    fn forbidden_transition_density_vanishes_weakly() {
        let ch = chain(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2], &[FRAC_1_SQRT_2, -FRAC_1_SQRT_2], &[1.0, 0.0]);
        let meter = MeterSpec::new(PathFunctional::EigenvalueAtStep(0), PointerProfile::gaussian(100.0).unwrap());
        let grid = meter.default_grid(&ch, &GridOptions::default()).unwrap();
        let p = reading_distribution(&ch, &meter, &grid).unwrap();
        // |G(x-1) - G(x)|^2 / 4 integrates to (1 - exp(-1/(8 w^2))) / 2
        assert!(p.norm < 1e-4);
        assert_abs_diff_eq!(p.norm, 0.5 * (1.0 - (-1.0f64 / 80000.0).exp()), epsilon = 1e-12);
    }

    #[test]
    fn symmetric_density_mean() {
        let dist = AmplitudeDistribution::from_points(&[(-1.0, c(0.5, 0.0)), (3.0, c(0.5, 0.0))], 0.0).unwrap();
        let profile = PointerProfile::gaussian(0.9).unwrap();
        let grid = Grid::covering(-1.0, 3.0, &profile, &GridOptions::default()).unwrap();
        let p = density_of(&dist, &profile, &grid).unwrap();
        assert_abs_diff_eq!(p.mean().unwrap(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn zero_norm_has_no_mean() {
        let grid = Grid::new(0.0, 1.0, 0.1).unwrap();
        let p = PointerDistribution::new(grid, vec![0.0; grid.len()]).unwrap();
        assert_eq!(p.mean(), Err(Error::ZeroNorm));
    }

    #[test]
    fn strong_bins_match_squared_amplitudes() {
        let psi = [0.8f64.sqrt(), 0.2f64.sqrt()];
        let ch = chain(&psi, &[FRAC_1_SQRT_2, FRAC_1_SQRT_2], &[1.0, 0.0]);
        let bins = strong_limit_bins(&ch, &PathFunctional::EigenvalueAtStep(0)).unwrap();
        assert_eq!(bins.len(), 2);
        assert_abs_diff_eq!(bins[0].1, 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(bins[1].1, 0.4, epsilon = 1e-15);

        let trivial = chain(&[1.0, 0.0], &[1.0, 0.0], &[1.0, 0.0]);
        let bins = strong_limit_bins(&trivial, &PathFunctional::EigenvalueAtStep(0)).unwrap();
        assert_eq!(bins, vec![(0.0, 0.0), (1.0, 1.0)]);
    }

    #[test]
    fn conditional_state_limits() {
        let psi = [0.6, 0.8];
        let ch = chain(&psi, &[1.0, 0.0], &[0.0, 1.0]);
        let narrow = MeterSpec::new(PathFunctional::EigenvalueAtStep(0), PointerProfile::rectangular(0.1).unwrap());
        let s = conditional_state(&ch, &narrow, 0.0).unwrap();
        assert!(s.amplitudes()[1].norm() == 0.0 && s.amplitudes()[0].norm() > 0.0);

        let flat = MeterSpec::new(PathFunctional::EigenvalueAtStep(0), PointerProfile::rectangular(4.0).unwrap());
        let s = conditional_state(&ch, &flat, 0.5).unwrap();
        let n = s.norm();
        assert_abs_diff_eq!(s.amplitudes()[0].re / n, 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitudes()[1].re / n, 0.8, epsilon = 1e-15);

        let gauss = MeterSpec::new(PathFunctional::EigenvalueAtStep(0), PointerProfile::gaussian(0.3).unwrap());
        let s = conditional_state(&ch, &gauss, 0.5).unwrap();
        let g = gauss.profile.eval(0.5);
        assert_abs_diff_eq!(s.amplitudes()[0].re, g * 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitudes()[1].re, g * 0.8, epsilon = 1e-15);
    }

    #[test]
    fn conditional_state_needs_one_step() {
        let ch = MeasurementChain::new(ket(&[1.0, 0.0]), vec![], Propagator::zero(2).unwrap(), 1.0, ket(&[1.0, 0.0])).unwrap();
        let meter = MeterSpec::new(PathFunctional::Constant(0.0), PointerProfile::gaussian(1.0).unwrap());
        assert_eq!(conditional_state(&ch, &meter, 0.0), Err(Error::RequiresSingleStep(0)));
    }

    #[test]
    fn joint_with_one_meter_equals_single() {
        let ch = chain(&[0.6, 0.8], &[FRAC_1_SQRT_2, FRAC_1_SQRT_2], &[-1.0, 2.0]);
        let meter = MeterSpec::new(PathFunctional::EigenvalueAtStep(0), PointerProfile::gaussian(0.7).unwrap());
        let grid = meter.default_grid(&ch, &GridOptions::default()).unwrap();
        let single = reading_distribution(&ch, &meter, &grid).unwrap();
        let joint = joint_reading_distribution(&ch, std::slice::from_ref(&meter), &[grid]).unwrap();
        assert_eq!(joint.density, single.density);
        assert_eq!(joint.marginal(0).unwrap().density, single.density);
    }

    #[test]
    fn joint_requires_meters() {
        let ch = chain(&[0.6, 0.8], &[1.0, 0.0], &[0.0, 1.0]);
        assert_eq!(joint_reading_distribution(&ch, &[], &[]), Err(Error::NoMeters));
    }

    #[test]
    fn single_path_sweep_is_exact() {
        let ch = chain(&[1.0, 0.0], &[1.0, 0.0], &[0.7, -0.2]);
        let report = weak_limit_report(&ch, &PathFunctional::EigenvalueAtStep(0), &[0.1, 1.0, 10.0]).unwrap();
        for row in &report.rows {
            assert_abs_diff_eq!(row.mean, 0.7, epsilon = 1e-7);
        }
    }

    #[test]
    fn sweep_rejects_bad_widths() {
        let ch = chain(&[0.6, 0.8], &[1.0, 0.0], &[0.0, 1.0]);
        let f = PathFunctional::EigenvalueAtStep(0);
        assert!(weak_limit_report(&ch, &f, &[]).is_err());
        assert!(weak_limit_report(&ch, &f, &[10.0, 1.0]).is_err());
    }

    #[test]
    fn distribution_json_shape() {
        let grid = Grid::new(0.0, 1.0, 0.5).unwrap();
        let p = PointerDistribution::new(grid, vec![0.0, 1.0, 0.0]).unwrap();
        let v: serde_json::Value = serde_json::to_value(&p).unwrap();
        assert_eq!(v["grid"]["min"], 0.0);
        assert_eq!(v["grid"]["max"], 1.0);
        assert_eq!(v["grid"]["step"], 0.5);
        assert_eq!(v["norm"], 0.5);
        let back: PointerDistribution = serde_json::from_value(v).unwrap();
        assert_eq!(back, p);
        let mut csv = Vec::new();
        p.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap(), "xi,density\n0,0\n0.5,1\n1,0\n");
    }
}
