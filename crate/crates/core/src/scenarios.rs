//! Ready-made measurement scenarios with their expected results.
//!
//! Expected numbers are computed here from explicit amplitude products, never
//! through the path kernel, so [`verify_preset`] compares two independent
//! calculations.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::meter::{
    joint_reading_distribution, reading_distribution, weak_limit_sweep, GridOptions, MeterSpec,
    PointerProfile,
};
use crate::paths::{
    amplitude_distribution, enumerate_paths, MeasurementChain, PathFunctional, Step,
    DEFAULT_MERGE_TOL, FORBIDDEN_THRESHOLD,
};
use crate::quantum::{c, Observable, Propagator, StateVector, C64};
use crate::sampling::{sample_trials, Branch};

/// Where an expected number comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// A value stated in the published analysis this scenario reproduces.
    Published,
    /// A value obtained here from an independent formula.
    Computed,
    /// A value that holds by construction (symmetry, trivial chains).
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ToleranceClass {
    /// Closed-form quantities; absolute tolerance.
    Analytic,
    /// Grid integrals; absolute tolerance.
    Quadrature,
    /// Mean readings of a weak meter compared with their limit; absolute tolerance.
    WeakMeter,
    /// Last point of a width sweep; relative tolerance.
    SweepLimit,
    /// Sampled estimates; multiples of the standard error.
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub analytic: f64,
    pub quadrature: f64,
    pub weak_meter: f64,
    pub sweep_relative: f64,
    pub sigmas: f64,
    pub mc_trials: u64,
    pub seed: u64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            analytic: 1e-9,
            quadrature: 1e-6,
            weak_meter: 1e-3,
            sweep_relative: 0.05,
            sigmas: 3.0,
            mc_trials: 100_000,
            seed: 20_160_101,
        }
    }
}

impl Tolerances {
    pub fn bound(&self, class: ToleranceClass) -> f64 {
        match class {
            ToleranceClass::Analytic => self.analytic,
            ToleranceClass::Quadrature => self.quadrature,
            ToleranceClass::WeakMeter => self.weak_meter,
            ToleranceClass::SweepLimit => self.sweep_relative,
            ToleranceClass::MonteCarlo => self.sigmas,
        }
    }
}

/// An engine output that can be checked against a number.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Quantity {
    WeakValueRe { meter: usize },
    WeakValueIm { meter: usize },
    /// `Re A[path] / sum A`, path in lexicographic order.
    PathRelativeAmplitudeRe { path: usize },
    /// `|A(f)|^2` for the meter's functional.
    StrongBin { meter: usize, value: f64 },
    /// `|A(f)|^2 / sum_f' |A(f')|^2`.
    StrongConditionalBin { meter: usize, value: f64 },
    StrongMean { meter: usize },
    /// Mean reading of the meter at its own width on the default grid.
    MeterMean { meter: usize },
    /// Mean reading of every meter from the joint density.
    JointMarginalMean { meter: usize },
    /// Mean reading at the widest width of the Gaussian sweep.
    SweepFinalMean { meter: usize },
    /// Fraction of successful trials read nearest to `value` by a narrow rectangular meter.
    SampledStrongFraction { meter: usize, value: f64 },
    /// Post-selection probability `|<phi|U(T)|psi>|^2`.
    SuccessProbability,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectedValue {
    pub name: String,
    pub quantity: Quantity,
    pub value: f64,
    pub provenance: Provenance,
    pub tolerance: ToleranceClass,
}

impl ExpectedValue {
    fn new(name: &str, quantity: Quantity, value: f64, provenance: Provenance, tolerance: ToleranceClass) -> Self {
        Self {
            name: name.to_string(),
            quantity,
            value,
            provenance,
            tolerance,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioPreset {
    pub name: String,
    pub chain: MeasurementChain,
    pub meters: Vec<MeterSpec>,
    /// Gaussian widths for the weak-limit sweep, increasing; empty when not applicable.
    pub sweep_widths: Vec<f64>,
    pub expected: Vec<ExpectedValue>,
    /// Set when `<phi|U(T)|psi>` vanishes; weak quantities are then omitted.
    pub forbidden_transition: bool,
}

pub const PRESET_NAMES: [&str; 6] = [
    "projector",
    "projector-strong",
    "minus-hundred",
    "difference",
    "difference-contrast",
    "three-box",
];

/// Looks up a preset by name.
pub fn preset(name: &str) -> Result<ScenarioPreset> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    match name {
        "projector" => build_projector_postselected(
            &real_state(&[0.8f64.sqrt(), 0.2f64.sqrt()]),
            &real_state(&[h, h]),
            &[10.0, 100.0, 1000.0, 10000.0],
        ),
        "projector-strong" => {
            let mut p = build_projector_postselected(
                &real_state(&[0.8f64.sqrt(), 0.2f64.sqrt()]),
                &real_state(&[h, h]),
                &[0.25],
            )?;
            p.name = "projector-strong".into();
            p.sweep_widths.clear();
            p.meters[0].profile = PointerProfile::rectangular(0.25)?;
            p.expected.retain(|e| !matches!(e.quantity, Quantity::SweepFinalMean { .. }));
            for (value, prob) in [(1.0, 0.8), (0.0, 0.2)] {
                p.expected.push(ExpectedValue::new(
                    &format!("sampled_fraction[{value}]"),
                    Quantity::SampledStrongFraction { meter: 0, value },
                    prob,
                    Provenance::Computed,
                    ToleranceClass::MonteCarlo,
                ));
            }
            p.expected.push(ExpectedValue::new(
                "meter_mean",
                Quantity::MeterMean { meter: 0 },
                0.8,
                Provenance::Computed,
                ToleranceClass::Quadrature,
            ));
            Ok(p)
        }
        "minus-hundred" => {
            let n = (1.0f64 + 1.01 * 1.01).sqrt();
            let mut p = build_projector_postselected(
                &real_state(&[h, h]),
                &real_state(&[1.0 / n, -1.01 / n]),
                &[10.0, 100.0, 1000.0, 10000.0],
            )?;
            p.name = "minus-hundred".into();
            for e in &mut p.expected {
                if e.quantity == (Quantity::WeakValueRe { meter: 0 }) {
                    e.provenance = Provenance::Published;
                    e.value = -100.0;
                }
                if e.quantity == (Quantity::SweepFinalMean { meter: 0 }) {
                    e.provenance = Provenance::Published;
                }
            }
            Ok(p)
        }
        "difference" => build_difference_meter(
            &real_state(&[h, h]),
            &real_state(&[0.0, 1.0]),
            &Observable::pauli_z(),
            &Observable::pauli_x(),
            1.0,
            2.0,
            &[10.0, 100.0, 1000.0, 10000.0],
        ),
        "difference-contrast" => {
            let mut p = build_difference_meter(
                &real_state(&[h, h]),
                &real_state(&[0.0, 1.0]),
                &Observable::pauli_z(),
                &Observable::pauli_x(),
                1.0,
                2.0,
                &[0.5],
            )?;
            p.name = "difference-contrast".into();
            p.sweep_widths.clear();
            p.meters[0].profile = PointerProfile::rectangular(0.5)?;
            p.expected.retain(|e| !matches!(e.quantity, Quantity::SweepFinalMean { .. }));
            Ok(p)
        }
        "three-box" => build_three_box(c(1.0 / 3.0, 0.0)),
        other => Err(Error::InvalidArgument(format!(
            "unknown preset `{other}`; available: {}",
            PRESET_NAMES.join(", ")
        ))),
    }
}

fn real_state(v: &[f64]) -> StateVector {
    StateVector::from_real(v).expect("preset states are finite")
}

/// Path amplitudes from explicit inner products, lexicographic order.
pub fn direct_path_amplitudes(chain: &MeasurementChain) -> Result<Vec<C64>> {
    let prop = chain.propagator();
    let steps = chain.steps();
    enumerate_paths(chain)
        .iter()
        .map(|path| {
            let mut amp = c(1.0, 0.0);
            let mut state = chain.pre_state().clone();
            let mut t = 0.0;
            for (step, &i) in steps.iter().zip(&path.indices) {
                let basis = step.observable.eigenvector(i);
                amp *= basis.inner(&prop.apply(step.time - t, &state)?);
                state = basis;
                t = step.time;
            }
            amp *= chain.post_state().inner(&prop.apply(chain.final_time() - t, &state)?);
            Ok(amp)
        })
        .collect()
}

struct Direct {
    amps: Vec<C64>,
    total: C64,
}

impl Direct {
    fn new(chain: &MeasurementChain) -> Result<Self> {
        let amps = direct_path_amplitudes(chain)?;
        let total = amps.iter().sum();
        Ok(Self { amps, total })
    }

    fn forbidden(&self) -> bool {
        self.total.norm() < FORBIDDEN_THRESHOLD
    }

    /// Distinct functional values (merged like the engine) with summed amplitudes.
    fn bins(&self, values: &[f64]) -> Vec<(f64, C64)> {
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let mut bins: Vec<(f64, C64)> = Vec::new();
        for k in order {
            match bins.last_mut() {
                Some((anchor, sum)) if values[k] - *anchor <= DEFAULT_MERGE_TOL => *sum += self.amps[k],
                _ => bins.push((values[k], self.amps[k])),
            }
        }
        bins
    }

    fn weak(&self, values: &[f64]) -> C64 {
        values.iter().zip(&self.amps).map(|(f, a)| a * *f).sum::<C64>() / self.total
    }
}

fn meter_expectations(
    expected: &mut Vec<ExpectedValue>,
    direct: &Direct,
    chain: &MeasurementChain,
    meter: usize,
    functional: &PathFunctional,
    with_sweep: bool,
) -> Result<()> {
    let values = functional.values(chain)?;
    let bins = direct.bins(&values);
    let total: f64 = bins.iter().map(|(_, a)| a.norm_sqr()).sum();
    for (f, a) in &bins {
        expected.push(ExpectedValue::new(
            &format!("strong_bin[{meter}][{f}]"),
            Quantity::StrongBin { meter, value: *f },
            a.norm_sqr(),
            Provenance::Computed,
            ToleranceClass::Analytic,
        ));
    }
    if total > 0.0 {
        let mean = bins.iter().map(|(f, a)| f * a.norm_sqr()).sum::<f64>() / total;
        expected.push(ExpectedValue::new(
            &format!("strong_mean[{meter}]"),
            Quantity::StrongMean { meter },
            mean,
            Provenance::Computed,
            ToleranceClass::Analytic,
        ));
    }
    if !direct.forbidden() {
        let w = direct.weak(&values);
        expected.push(ExpectedValue::new(
            &format!("weak_value_re[{meter}]"),
            Quantity::WeakValueRe { meter },
            w.re,
            Provenance::Computed,
            ToleranceClass::Analytic,
        ));
        expected.push(ExpectedValue::new(
            &format!("weak_value_im[{meter}]"),
            Quantity::WeakValueIm { meter },
            w.im,
            Provenance::Computed,
            ToleranceClass::Analytic,
        ));
        if with_sweep {
            expected.push(ExpectedValue::new(
                &format!("sweep_final_mean[{meter}]"),
                Quantity::SweepFinalMean { meter },
                w.re,
                Provenance::Computed,
                ToleranceClass::SweepLimit,
            ));
        }
    }
    Ok(())
}

fn check_widths(widths: &[f64]) -> Result<()> {
    if widths.is_empty() {
        return Err(Error::InvalidArgument("at least one meter width is required".into()));
    }
    if widths.iter().any(|w| !(w.is_finite() && *w > 0.0)) || widths.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("meter widths must be positive and increasing".into()));
    }
    Ok(())
}

/// One projective measurement of `|1><1|` between `psi` and `phi`, free evolution.
/// The meter uses a Gaussian pointer of the last (largest) width.
pub fn build_projector_postselected(psi: &StateVector, phi: &StateVector, widths: &[f64]) -> Result<ScenarioPreset> {
    check_widths(widths)?;
    let dim = psi.dim();
    let mut eig = vec![0.0; dim];
    eig[0] = 1.0;
    let chain = MeasurementChain::new(
        psi.clone(),
        vec![Step::new(1.0, Observable::diagonal(&eig)?)],
        Propagator::zero(dim)?,
        2.0,
        phi.clone(),
    )?;
    let functional = PathFunctional::EigenvalueAtStep(0);
    let direct = Direct::new(&chain)?;
    let mut expected = vec![ExpectedValue::new(
        "success_probability",
        Quantity::SuccessProbability,
        direct.total.norm_sqr(),
        Provenance::Computed,
        ToleranceClass::Analytic,
    )];
    meter_expectations(&mut expected, &direct, &chain, 0, &functional, widths.len() > 1)?;
    Ok(ScenarioPreset {
        name: "projector".into(),
        meters: vec![MeterSpec::new(functional, PointerProfile::gaussian(widths[widths.len() - 1])?)],
        sweep_widths: if widths.len() > 1 { widths.to_vec() } else { vec![] },
        forbidden_transition: direct.forbidden(),
        chain,
        expected,
    })
}

/// Measures `A` at `t1` and `B` at `t2` with one pointer coupled to `B - A`.
pub fn build_difference_meter(
    psi: &StateVector,
    phi: &StateVector,
    a: &Observable,
    b: &Observable,
    t1: f64,
    t2: f64,
    widths: &[f64],
) -> Result<ScenarioPreset> {
    check_widths(widths)?;
    let dim = psi.dim();
    let chain = MeasurementChain::new(
        psi.clone(),
        vec![Step::new(t1, a.clone()), Step::new(t2, b.clone())],
        Propagator::zero(dim)?,
        t2 + (t2 - t1).max(1.0),
        phi.clone(),
    )?;
    let functional = PathFunctional::LinearCombination(vec![(1, 1.0), (0, -1.0)]);
    let direct = Direct::new(&chain)?;
    let mut expected = vec![ExpectedValue::new(
        "success_probability",
        Quantity::SuccessProbability,
        direct.total.norm_sqr(),
        Provenance::Computed,
        ToleranceClass::Analytic,
    )];
    meter_expectations(&mut expected, &direct, &chain, 0, &functional, widths.len() > 1)?;
    Ok(ScenarioPreset {
        name: "difference".into(),
        meters: vec![MeterSpec::new(functional, PointerProfile::gaussian(widths[widths.len() - 1])?)],
        sweep_widths: if widths.len() > 1 { widths.to_vec() } else { vec![] },
        forbidden_transition: direct.forbidden(),
        chain,
        expected,
    })
}

/// Three-state chain whose paths through the computational basis have
/// amplitudes `(C, -C, C)`. Requires `0 < |C| <= 1/3`, the largest value
/// normalised states allow.
pub fn three_box_states(amp: C64) -> Result<(StateVector, StateVector)> {
    let m = amp.norm();
    if !(m > 0.0 && m <= 1.0 / 3.0 + 1e-15) {
        return Err(Error::InvalidArgument(format!(
            "three-box amplitude must satisfy 0 < |C| <= 1/3, got |C| = {m}"
        )));
    }
    // psi = (p, q, p), |phi_i| = |C| / psi_i; 2 C^2/x + C^2/(1 - 2x) = 1 with x = p^2
    let g = |x: f64| 2.0 * m * m / x + m * m / (1.0 - 2.0 * x) - 1.0;
    let (mut lo, mut hi) = (1e-300f64, 1.0 / 3.0);
    if g(hi) < 0.0 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    let x = hi;
    let p = x.sqrt();
    let q = (1.0 - 2.0 * x).sqrt();
    let psi = StateVector::from_real(&[p, q, p])?;
    let targets = [amp, -amp, amp];
    let phi = StateVector::normalized(
        targets
            .iter()
            .zip(psi.amplitudes())
            .map(|(a, s)| a.conj() / s.re)
            .collect(),
    )?;
    Ok((psi, phi))
}

/// Two weak meters reading path indicators of the first and third paths.
pub fn build_three_box(amp: C64) -> Result<ScenarioPreset> {
    let (psi, phi) = three_box_states(amp)?;
    let chain = MeasurementChain::new(
        psi,
        vec![Step::new(1.0, Observable::diagonal(&[1.0, 2.0, 3.0])?)],
        Propagator::zero(3)?,
        2.0,
        phi,
    )?;
    let direct = Direct::new(&chain)?;
    let width = 1000.0;
    let meters = vec![
        MeterSpec::new(PathFunctional::IndicatorOfPath(0), PointerProfile::gaussian(width)?),
        MeterSpec::new(PathFunctional::IndicatorOfPath(2), PointerProfile::gaussian(width)?),
    ];
    let mut expected = Vec::new();
    for (k, path) in [0usize, 2].iter().enumerate() {
        expected.push(ExpectedValue::new(
            &format!("weak_value_re[{k}]"),
            Quantity::WeakValueRe { meter: k },
            1.0,
            Provenance::Published,
            ToleranceClass::Analytic,
        ));
        expected.push(ExpectedValue::new(
            &format!("joint_marginal_mean[{k}]"),
            Quantity::JointMarginalMean { meter: k },
            1.0,
            Provenance::Published,
            ToleranceClass::WeakMeter,
        ));
        expected.push(ExpectedValue::new(
            &format!("strong_conditional_bin[{k}][1]"),
            Quantity::StrongConditionalBin { meter: k, value: 1.0 },
            1.0,
            Provenance::Published,
            ToleranceClass::Analytic,
        ));
        let a = direct.amps[*path];
        expected.push(ExpectedValue::new(
            &format!("strong_bin[{k}][1]"),
            Quantity::StrongBin { meter: k, value: 1.0 },
            a.norm_sqr(),
            Provenance::Computed,
            ToleranceClass::Analytic,
        ));
    }
    expected.push(ExpectedValue::new(
        "relative_amplitude_re[2]",
        Quantity::PathRelativeAmplitudeRe { path: 1 },
        -1.0,
        Provenance::Published,
        ToleranceClass::Analytic,
    ));
    expected.push(ExpectedValue::new(
        "success_probability",
        Quantity::SuccessProbability,
        direct.total.norm_sqr(),
        Provenance::Computed,
        ToleranceClass::Analytic,
    ));
    Ok(ScenarioPreset {
        name: "three-box".into(),
        forbidden_transition: direct.forbidden(),
        chain,
        meters,
        sweep_widths: vec![],
        expected,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationEntry {
    pub name: String,
    pub quantity: Quantity,
    pub provenance: Provenance,
    pub tolerance_class: ToleranceClass,
    pub expected: f64,
    pub computed: f64,
    pub delta: f64,
    /// Threshold `delta` is compared against (absolute, relative or in standard errors).
    pub bound: f64,
    pub passed: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub preset: String,
    pub entries: Vec<VerificationEntry>,
    pub passed: bool,
}

fn meter_at<'a>(preset: &'a ScenarioPreset, k: usize) -> Result<&'a MeterSpec> {
    preset
        .meters
        .get(k)
        .ok_or_else(|| Error::InvalidArgument(format!("preset has no meter {k}")))
}

fn strong_bin(preset: &ScenarioPreset, meter: usize, value: f64) -> Result<(f64, f64)> {
    let dist = amplitude_distribution(&preset.chain, &meter_at(preset, meter)?.functional, DEFAULT_MERGE_TOL)?;
    let bins = dist.strong_bins();
    let total: f64 = bins.iter().map(|b| b.1).sum();
    let p = bins
        .iter()
        .find(|(f, _)| (f - value).abs() <= DEFAULT_MERGE_TOL)
        .map_or(0.0, |b| b.1);
    Ok((p, total))
}

/// Computed value, plus the standard error for sampled quantities and a note.
fn evaluate(preset: &ScenarioPreset, q: &Quantity, tol: &Tolerances) -> Result<(f64, Option<f64>, Option<String>)> {
    let chain = &preset.chain;
    let plain = |v: f64| Ok((v, None, None));
    match q {
        Quantity::WeakValueRe { meter } | Quantity::WeakValueIm { meter } => {
            let w = amplitude_distribution(chain, &meter_at(preset, *meter)?.functional, DEFAULT_MERGE_TOL)?
                .weak_value()?;
            plain(if matches!(q, Quantity::WeakValueRe { .. }) { w.re } else { w.im })
        }
        Quantity::PathRelativeAmplitudeRe { path } => {
            let amps = chain.path_amplitudes();
            let a = amps
                .get(*path)
                .ok_or_else(|| Error::InvalidArgument(format!("path {path} does not exist")))?;
            let total = chain.transition_amplitude();
            if total.norm() < FORBIDDEN_THRESHOLD {
                return Err(Error::ForbiddenTransition { magnitude: total.norm() });
            }
            plain((a / total).re)
        }
        Quantity::StrongBin { meter, value } => plain(strong_bin(preset, *meter, *value)?.0),
        Quantity::StrongConditionalBin { meter, value } => {
            let (p, total) = strong_bin(preset, *meter, *value)?;
            if total <= 0.0 {
                return Err(Error::ZeroProbability);
            }
            plain(p / total)
        }
        Quantity::StrongMean { meter } => {
            let dist = amplitude_distribution(chain, &meter_at(preset, *meter)?.functional, DEFAULT_MERGE_TOL)?;
            plain(dist.strong_mean()?)
        }
        Quantity::MeterMean { meter } => {
            let m = meter_at(preset, *meter)?;
            let grid = m.default_grid(chain, &GridOptions::default())?;
            plain(reading_distribution(chain, m, &grid)?.mean()?)
        }
        Quantity::JointMarginalMean { meter } => {
            let grids = preset
                .meters
                .iter()
                .map(|m| m.default_grid(chain, &GridOptions::default()))
                .collect::<Result<Vec<_>>>()?;
            let joint = joint_reading_distribution(chain, &preset.meters, &grids)?;
            plain(joint.marginal(*meter)?.mean()?)
        }
        Quantity::SweepFinalMean { meter } => {
            let dist = amplitude_distribution(chain, &meter_at(preset, *meter)?.functional, DEFAULT_MERGE_TOL)?;
            let report = weak_limit_sweep(&dist, &preset.sweep_widths, &GridOptions::default())?;
            let last = report.rows[report.rows.len() - 1].mean;
            let note = format!(
                "errors {}",
                report
                    .rows
                    .iter()
                    .map(|r| format!("{:.3e}", r.error))
                    .collect::<Vec<_>>()
                    .join(" > ")
            );
            Ok((last, None, Some(if report.monotone { note } else { format!("{note} (not monotone)") })))
        }
        Quantity::SampledStrongFraction { meter, value } => {
            let m = meter_at(preset, *meter)?;
            let dist = amplitude_distribution(chain, &m.functional, DEFAULT_MERGE_TOL)?;
            let support = dist.support().to_vec();
            let width = 0.25 * dist.min_gap().min(1.0);
            let strong = MeterSpec::new(m.functional.clone(), PointerProfile::rectangular(width)?);
            let grid = strong.default_grid(chain, &GridOptions::default())?;
            let run = sample_trials(chain, &[strong], &[grid], tol.mc_trials, tol.seed)?;
            let target = support
                .iter()
                .position(|f| (f - value).abs() <= DEFAULT_MERGE_TOL)
                .ok_or_else(|| Error::InvalidArgument(format!("{value} is not a value of the functional")))?;
            let nearest = |x: f64| {
                (0..support.len())
                    .min_by(|&i, &j| (support[i] - x).abs().total_cmp(&(support[j] - x).abs()))
                    .unwrap_or(0)
            };
            let successes: Vec<f64> = run
                .records
                .iter()
                .filter(|r| r.branch == Branch::Success)
                .map(|r| r.readings[0])
                .collect();
            let n = successes.len() as f64;
            if n == 0.0 {
                return Err(Error::ZeroProbability);
            }
            let hits = successes.iter().filter(|&&x| nearest(x) == target).count() as f64;
            let frac = hits / n;
            Ok((frac, Some(n), Some(format!("{} successful trials of {}", n, tol.mc_trials))))
        }
        Quantity::SuccessProbability => plain(chain.transition_amplitude().norm_sqr()),
    }
}

/// Recomputes every expected value with the engine and compares.
pub fn verify_preset(preset: &ScenarioPreset, tol: &Tolerances) -> VerificationReport {
    let entries: Vec<VerificationEntry> = preset
        .expected
        .iter()
        .map(|e| {
            let bound = tol.bound(e.tolerance);
            let base = VerificationEntry {
                name: e.name.clone(),
                quantity: e.quantity.clone(),
                provenance: e.provenance,
                tolerance_class: e.tolerance,
                expected: e.value,
                computed: f64::NAN,
                delta: f64::NAN,
                bound,
                passed: false,
                note: None,
            };
            match evaluate(preset, &e.quantity, tol) {
                Err(err) => VerificationEntry {
                    note: Some(err.to_string()),
                    ..base
                },
                Ok((computed, sample_size, note)) => {
                    let delta = match e.tolerance {
                        ToleranceClass::SweepLimit => ((computed - e.value) / e.value).abs(),
                        ToleranceClass::MonteCarlo => {
                            // binomial standard error of the expected fraction
                            let n = sample_size.unwrap_or(1.0);
                            let se = (e.value * (1.0 - e.value) / n).sqrt();
                            if se > 0.0 {
                                (computed - e.value).abs() / se
                            } else if computed == e.value {
                                0.0
                            } else {
                                f64::INFINITY
                            }
                        }
                        _ => (computed - e.value).abs(),
                    };
                    let monotone_ok = !note.as_deref().is_some_and(|n| n.ends_with("(not monotone)"));
                    VerificationEntry {
                        computed,
                        delta,
                        passed: delta <= bound && monotone_ok,
                        note,
                        ..base
                    }
                }
            }
        })
        .collect();
    VerificationReport {
        preset: preset.name.clone(),
        passed: entries.iter().all(|e| e.passed),
        entries,
    }
}
