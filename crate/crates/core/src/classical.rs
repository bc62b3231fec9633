//! Classical ball-and-connector networks.
//!
//! A connector has two inlets and two outlets and moves a ball from inlet `j`
//! to outlet `i` with probability `w(i|j)`. Outlets are wired either to an
//! inlet of another connector or to a named receptacle; a ball inserted at the
//! entry inlet wanders until it reaches a receptacle. Inlets and outlets are
//! numbered 1 and 2 in the public API.

use std::collections::{HashMap, HashSet};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::paths::MeasurementChain;
use crate::sampling::trial_rng;

const STOCHASTIC_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalConnector {
    pub label: String,
    /// `w[out][in]`, zero based.
    pub w: [[f64; 2]; 2],
    #[serde(default)]
    pub blocked: [bool; 2],
    #[serde(default)]
    pub value: Option<f64>,
}

impl ClassicalConnector {
    pub fn new(label: impl Into<String>, w: [[f64; 2]; 2]) -> Result<Self> {
        let c = Self {
            label: label.into(),
            w,
            blocked: [false; 2],
            value: None,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn uniform(label: impl Into<String>) -> Self {
        Self::new(label, [[0.5; 2]; 2]).expect("uniform connector is stochastic")
    }

    pub fn identity(label: impl Into<String>) -> Self {
        Self::new(label, [[1.0, 0.0], [0.0, 1.0]]).expect("identity connector is stochastic")
    }

    pub fn with_value(mut self, value: f64) -> Self {
        self.value = Some(value);
        self
    }

    /// Closes outlet `outlet` (1 or 2); the ball then always leaves by the other one.
    pub fn with_blocked(mut self, outlet: usize) -> Result<Self> {
        let k = outlet_index(outlet)?;
        self.blocked[k] = true;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidNetwork(format!("connector `{}`: {msg}", self.label)));
        if self.w.iter().flatten().any(|p| !p.is_finite() || *p < 0.0) {
            return bad("transition probabilities must be finite and non-negative".into());
        }
        for j in 0..2 {
            let s = self.w[0][j] + self.w[1][j];
            if (s - 1.0).abs() > STOCHASTIC_TOL {
                return bad(format!("column for inlet {} sums to {s}", j + 1));
            }
        }
        if self.blocked[0] && self.blocked[1] {
            return bad("both outlets are blocked".into());
        }
        if self.value.is_some_and(|v| !v.is_finite()) {
            return bad("value is not finite".into());
        }
        Ok(())
    }

    /// Exit probability after the blocking rule, zero-based indices.
    pub fn effective(&self, out: usize, inlet: usize) -> f64 {
        if self.blocked[out] {
            0.0
        } else if self.blocked[1 - out] {
            1.0
        } else {
            self.w[out][inlet]
        }
    }
}

fn outlet_index(k: usize) -> Result<usize> {
    match k {
        1 | 2 => Ok(k - 1),
        _ => Err(Error::InvalidNetwork(format!("ports are numbered 1 and 2, got {k}"))),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Connector { label: String, inlet: usize },
    Receptacle(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Wire {
    pub from: String,
    pub outlet: usize,
    pub to: Target,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub connectors: Vec<ClassicalConnector>,
    pub wiring: Vec<Wire>,
    pub entry: String,
    #[serde(default = "first_port")]
    pub entry_inlet: usize,
}

fn first_port() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Connector { index: usize, inlet: usize },
    Receptacle(usize),
}

/// Validated acyclic network.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalNetwork {
    spec: NetworkSpec,
    outs: Vec<[Option<Node>; 2]>,
    receptacles: Vec<String>,
    entry: usize,
    entry_inlet: usize,
}

/// One hop: connector index, inlet and outlet (zero based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hop {
    pub connector: usize,
    pub inlet: usize,
    pub outlet: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalPath {
    pub hops: Vec<Hop>,
    pub receptacle: String,
    pub probability: f64,
}

impl ClassicalPath {
    /// Values of the traversed connectors that carry one, in travel order.
    pub fn connector_values(&self, network: &ClassicalNetwork) -> Vec<f64> {
        self.hops
            .iter()
            .filter_map(|h| network.spec.connectors[h.connector].value)
            .collect()
    }

    /// Human-readable route such as `f1 <- b1 <- a1 <- in`.
    pub fn describe(&self, network: &ClassicalNetwork) -> String {
        let mut parts = vec![self.receptacle.clone()];
        parts.extend(self.hops.iter().rev().map(|h| network.spec.connectors[h.connector].label.clone()));
        parts.join(" <- ")
    }
}

impl ClassicalNetwork {
    pub fn new(spec: NetworkSpec) -> Result<Self> {
        let mut index = HashMap::new();
        for (k, c) in spec.connectors.iter().enumerate() {
            c.validate()?;
            if index.insert(c.label.clone(), k).is_some() {
                return Err(Error::InvalidNetwork(format!("duplicate connector label `{}`", c.label)));
            }
        }
        let lookup = |label: &str| {
            index
                .get(label)
                .copied()
                .ok_or_else(|| Error::InvalidNetwork(format!("unknown connector `{label}`")))
        };
        let entry = lookup(&spec.entry)?;
        let entry_inlet = outlet_index(spec.entry_inlet)?;

        let mut outs: Vec<[Option<Node>; 2]> = vec![[None, None]; spec.connectors.len()];
        let mut receptacles: Vec<String> = Vec::new();
        let mut fed: HashSet<(usize, usize)> = HashSet::from([(entry, entry_inlet)]);
        for wire in &spec.wiring {
            let from = lookup(&wire.from)?;
            let o = outlet_index(wire.outlet)?;
            if outs[from][o].is_some() {
                return Err(Error::InvalidNetwork(format!(
                    "outlet {} of `{}` is wired twice",
                    wire.outlet, wire.from
                )));
            }
            let node = match &wire.to {
                Target::Connector { label, inlet } => {
                    let to = lookup(label)?;
                    let i = outlet_index(*inlet)?;
                    if !fed.insert((to, i)) {
                        return Err(Error::InvalidNetwork(format!("inlet {inlet} of `{label}` is wired twice")));
                    }
                    Node::Connector { index: to, inlet: i }
                }
                Target::Receptacle(name) => {
                    let k = match receptacles.iter().position(|r| r == name) {
                        Some(k) => k,
                        None => {
                            receptacles.push(name.clone());
                            receptacles.len() - 1
                        }
                    };
                    Node::Receptacle(k)
                }
            };
            outs[from][o] = Some(node);
        }
        for (k, c) in spec.connectors.iter().enumerate() {
            for o in 0..2 {
                if !c.blocked[o] && outs[k][o].is_none() {
                    return Err(Error::InvalidNetwork(format!(
                        "open outlet {} of `{}` is not wired",
                        o + 1,
                        c.label
                    )));
                }
            }
        }
        let net = Self {
            spec,
            outs,
            receptacles,
            entry,
            entry_inlet,
        };
        net.check_acyclic()?;
        Ok(net)
    }

    fn check_acyclic(&self) -> Result<()> {
        // 0 unvisited, 1 on stack, 2 done
        fn visit(net: &ClassicalNetwork, k: usize, state: &mut [u8]) -> Result<()> {
            match state[k] {
                1 => return Err(Error::CyclicNetwork(net.spec.connectors[k].label.clone())),
                2 => return Ok(()),
                _ => {}
            }
            state[k] = 1;
            for node in net.outs[k].iter().flatten() {
                if let Node::Connector { index, .. } = node {
                    visit(net, *index, state)?;
                }
            }
            state[k] = 2;
            Ok(())
        }
        let mut state = vec![0u8; self.spec.connectors.len()];
        for k in 0..state.len() {
            visit(self, k, &mut state)?;
        }
        Ok(())
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn connectors(&self) -> &[ClassicalConnector] {
        &self.spec.connectors
    }

    pub fn receptacles(&self) -> &[String] {
        &self.receptacles
    }

    /// Two layers of crossed connectors, `in -> {a1, a2} -> {b1, b2} -> {f1, f2}`;
    /// outlet 1 of `b1` and outlet 2 of `b2` lead to `f1`.
    pub fn two_layer(
        w_in: ClassicalConnector,
        a: [ClassicalConnector; 2],
        b: [ClassicalConnector; 2],
    ) -> Result<Self> {
        let labels = |c: &[ClassicalConnector; 2]| [c[0].label.clone(), c[1].label.clone()];
        let (la, lb) = (labels(&a), labels(&b));
        let conn = |label: &str, inlet| Target::Connector {
            label: label.to_string(),
            inlet,
        };
        let wire = |from: &str, outlet, to| Wire {
            from: from.to_string(),
            outlet,
            to,
        };
        let recep = |name: &str| Target::Receptacle(name.to_string());
        let entry = w_in.label.clone();
        let wiring = vec![
            wire(&entry, 1, conn(&la[0], 1)),
            wire(&entry, 2, conn(&la[1], 1)),
            wire(&la[0], 1, conn(&lb[0], 1)),
            wire(&la[0], 2, conn(&lb[1], 2)),
            wire(&la[1], 2, conn(&lb[0], 2)),
            wire(&la[1], 1, conn(&lb[1], 1)),
            wire(&lb[0], 1, recep("f1")),
            wire(&lb[0], 2, recep("f2")),
            wire(&lb[1], 2, recep("f1")),
            wire(&lb[1], 1, recep("f2")),
        ];
        let [a1, a2] = a;
        let [b1, b2] = b;
        Self::new(NetworkSpec {
            connectors: vec![w_in, a1, a2, b1, b2],
            wiring,
            entry,
            entry_inlet: 1,
        })
    }

    /// Classical comparator of a two-level chain: every connector moves the ball
    /// with the squared modulus of the corresponding quantum transition
    /// amplitude, so each path is travelled with probability `|A[path]|^2`
    /// (receptacle `f1` is the post-selected state, `f2` its complement).
    /// Step `k` connectors are labelled `a`, `b`, ... followed by the eigenstate number.
    pub fn from_chain(chain: &MeasurementChain) -> Result<Self> {
        if chain.dim() != 2 {
            return Err(Error::InvalidNetwork(format!(
                "connectors have two outlets; chain dimension is {}",
                chain.dim()
            )));
        }
        if chain.step_count() == 0 {
            return Err(Error::InvalidNetwork("chain has no intermediate steps".into()));
        }
        let prop = chain.propagator();
        let steps = chain.steps();
        let k_max = steps.len();
        let name = |k: usize, i: usize| {
            if k < 26 {
                format!("{}{}", (b'a' + k as u8) as char, i + 1)
            } else {
                format!("s{}_{}", k + 1, i + 1)
            }
        };
        let prob = |from: &crate::quantum::StateVector, t: f64, to: &crate::quantum::StateVector| -> Result<f64> {
            Ok(to.inner(&prop.apply(t, from)?).norm_sqr())
        };
        let column = |p0: f64, p1: f64| -> [[f64; 2]; 2] {
            // guard against rounding drift away from a stochastic column
            let s = p0 + p1;
            [[p0 / s, p0 / s], [p1 / s, p1 / s]]
        };

        let mut connectors = Vec::new();
        let mut wiring = Vec::new();
        let first = &steps[0];
        let e0 = first.observable.eigenvector(0);
        let e1 = first.observable.eigenvector(1);
        let pre = chain.pre_state();
        connectors.push(ClassicalConnector::new(
            "in",
            column(prob(pre, first.time, &e0)?, prob(pre, first.time, &e1)?),
        )?);
        for i in 0..2 {
            wiring.push(Wire {
                from: "in".into(),
                outlet: i + 1,
                to: Target::Connector {
                    label: name(0, i),
                    inlet: 1,
                },
            });
        }
        for k in 0..k_max {
            let here = &steps[k];
            for i in 0..2 {
                let state = here.observable.eigenvector(i);
                let (targets, dt): (Vec<_>, f64) = if k + 1 < k_max {
                    let next = &steps[k + 1];
                    (
                        (0..2).map(|j| next.observable.eigenvector(j)).collect(),
                        next.time - here.time,
                    )
                } else {
                    let mut finals = vec![chain.post_state().clone()];
                    finals.extend(chain.post_complement().iter().cloned());
                    (finals, chain.final_time() - here.time)
                };
                let p0 = prob(&state, dt, &targets[0])?;
                let p1 = prob(&state, dt, &targets[1])?;
                connectors.push(
                    ClassicalConnector::new(name(k, i), column(p0, p1))?
                        .with_value(here.observable.eigenvalues()[i]),
                );
                for j in 0..2 {
                    let to = if k + 1 < k_max {
                        Target::Connector {
                            label: name(k + 1, j),
                            inlet: if i == j { 1 } else { 2 },
                        }
                    } else {
                        Target::Receptacle(format!("f{}", j + 1))
                    };
                    wiring.push(Wire {
                        from: name(k, i),
                        outlet: j + 1,
                        to,
                    });
                }
            }
        }
        Self::new(NetworkSpec {
            connectors,
            wiring,
            entry: "in".into(),
            entry_inlet: 1,
        })
    }

    fn walk(&self, k: usize, inlet: usize, prob: f64, hops: &mut Vec<Hop>, out: &mut Vec<ClassicalPath>) {
        let c = &self.spec.connectors[k];
        for o in 0..2 {
            let w = c.effective(o, inlet);
            if w == 0.0 {
                continue;
            }
            hops.push(Hop {
                connector: k,
                inlet,
                outlet: o,
            });
            match self.outs[k][o].as_ref().expect("open outlets are wired") {
                Node::Connector { index, inlet } => self.walk(*index, *inlet, prob * w, hops, out),
                Node::Receptacle(r) => out.push(ClassicalPath {
                    hops: hops.clone(),
                    receptacle: self.receptacles[*r].clone(),
                    probability: prob * w,
                }),
            }
            hops.pop();
        }
    }

    /// Every route with non-zero probability, depth first, outlet 1 before outlet 2.
    pub fn paths(&self) -> Vec<ClassicalPath> {
        let mut out = Vec::new();
        self.walk(self.entry, self.entry_inlet, 1.0, &mut Vec::new(), &mut out);
        out
    }

    /// Releases one ball and returns the outlets it took.
    pub fn run_ball(&self, rng: &mut impl Rng) -> (Vec<usize>, usize) {
        let (mut k, mut inlet) = (self.entry, self.entry_inlet);
        let mut choices = Vec::new();
        loop {
            let c = &self.spec.connectors[k];
            let o = if rng.random::<f64>() < c.effective(0, inlet) { 0 } else { 1 };
            choices.push(o);
            match self.outs[k][o].as_ref().expect("open outlets are wired") {
                Node::Connector { index, inlet: i } => {
                    k = *index;
                    inlet = *i;
                }
                Node::Receptacle(r) => return (choices, *r),
            }
        }
    }
}

pub fn classical_paths(network: &ClassicalNetwork) -> Vec<ClassicalPath> {
    network.paths()
}

/// `sum_cond p[i] F[i] / sum_cond p[i]` over paths ending in one of `condition`.
pub fn classical_mean(paths: &[ClassicalPath], values: &[f64], condition: &[&str]) -> Result<f64> {
    if values.len() != paths.len() {
        return Err(Error::DimensionMismatch {
            context: "functional values per classical path".into(),
            expected: paths.len(),
            found: values.len(),
        });
    }
    if condition.is_empty() {
        return Err(Error::InvalidArgument("condition needs at least one receptacle".into()));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (p, v) in paths.iter().zip(values) {
        if condition.contains(&p.receptacle.as_str()) {
            num += p.probability * v;
            den += p.probability;
        }
    }
    if den <= 0.0 {
        return Err(Error::ZeroConditionalProbability);
    }
    Ok(num / den)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassicalSample {
    pub trials: u64,
    pub seed: u64,
    /// Counts aligned with [`ClassicalNetwork::paths`].
    pub counts: Vec<u64>,
}

impl ClassicalSample {
    pub fn frequencies(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64 / self.trials as f64).collect()
    }

    /// Empirical conditional mean of `values` and its standard error.
    pub fn conditional_mean(&self, paths: &[ClassicalPath], values: &[f64], condition: &[&str]) -> Result<(f64, f64)> {
        let mut n = 0u64;
        let (mut s1, mut s2) = (0.0, 0.0);
        for ((p, v), &c) in paths.iter().zip(values).zip(&self.counts) {
            if condition.contains(&p.receptacle.as_str()) {
                n += c;
                s1 += c as f64 * v;
                s2 += c as f64 * v * v;
            }
        }
        if n == 0 {
            return Err(Error::ZeroConditionalProbability);
        }
        let nf = n as f64;
        let mean = s1 / nf;
        let var = if n > 1 { ((s2 - nf * mean * mean) / (nf - 1.0)).max(0.0) } else { 0.0 };
        Ok((mean, (var / nf).sqrt()))
    }
}

/// Releases `trials` balls; ball `i` uses its own random stream.
pub fn classical_sample(network: &ClassicalNetwork, trials: u64, seed: u64) -> Result<ClassicalSample> {
    if trials == 0 {
        return Err(Error::InvalidArgument("at least one trial is required".into()));
    }
    let paths = network.paths();
    let lookup: HashMap<Vec<usize>, usize> = paths
        .iter()
        .enumerate()
        .map(|(k, p)| (p.hops.iter().map(|h| h.outlet).collect(), k))
        .collect();
    let counts = (0..trials)
        .into_par_iter()
        .map(|id| {
            let (choices, _) = network.run_ball(&mut trial_rng(seed, id));
            lookup[&choices]
        })
        .fold(
            || vec![0u64; paths.len()],
            |mut acc, k| {
                acc[k] += 1;
                acc
            },
        )
        .reduce(
            || vec![0u64; paths.len()],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Ok(ClassicalSample { trials, seed, counts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn uniform_fig1a() -> ClassicalNetwork {
        ClassicalNetwork::two_layer(
            ClassicalConnector::uniform("in"),
            [ClassicalConnector::uniform("a1"), ClassicalConnector::uniform("a2")],
            [ClassicalConnector::uniform("b1"), ClassicalConnector::uniform("b2")],
        )
        .unwrap()
    }

    #[test]
    fn identity_network_has_one_path() {
        let net = ClassicalNetwork::two_layer(
            ClassicalConnector::identity("in"),
            [ClassicalConnector::identity("a1"), ClassicalConnector::identity("a2")],
            [ClassicalConnector::identity("b1"), ClassicalConnector::identity("b2")],
        )
        .unwrap();
        let paths = net.paths();
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].probability, 1.0);
        assert_eq!(paths[0].describe(&net), "f1 <- b1 <- a1 <- in");
    }

    #[test]
    fn uniform_network_has_eight_equal_paths() {
        let paths = uniform_fig1a().paths();
        assert_eq!(paths.len(), 8);
        for p in &paths {
            assert_eq!(p.probability, 0.125);
        }
        assert_eq!(paths.iter().filter(|p| p.receptacle == "f1").count(), 4);
    }

    #[test]
    fn connector_validation() {
        assert!(ClassicalConnector::new("x", [[0.6, 0.5], [0.5, 0.5]]).is_err());
        assert!(ClassicalConnector::new("x", [[-0.1, 0.5], [1.1, 0.5]]).is_err());
        let c = ClassicalConnector::uniform("x").with_blocked(2).unwrap();
        assert_eq!(c.effective(0, 1), 1.0);
        assert_eq!(c.effective(1, 0), 0.0);
        assert!(c.with_blocked(1).is_err());
    }

    #[test]
    fn blocked_outlet_removes_paths() {
        let net = ClassicalNetwork::two_layer(
            ClassicalConnector::uniform("in"),
            [ClassicalConnector::uniform("a1").with_blocked(2).unwrap(), ClassicalConnector::uniform("a2")],
            [ClassicalConnector::uniform("b1"), ClassicalConnector::uniform("b2")],
        )
        .unwrap();
        let paths = net.paths();
        assert_eq!(paths.len(), 6);
        let total: f64 = paths.iter().map(|p| p.probability).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn cycles_and_double_wiring_rejected() {
        let c = |l: &str| ClassicalConnector::uniform(l);
        let to = |l: &str, inlet| Target::Connector {
            label: l.into(),
            inlet,
        };
        let wire = |from: &str, outlet, t| Wire {
            from: from.into(),
            outlet,
            to: t,
        };
        let cyclic = NetworkSpec {
            connectors: vec![c("x"), c("y")],
            wiring: vec![
                wire("x", 1, to("y", 1)),
                wire("x", 2, Target::Receptacle("f".into())),
                wire("y", 1, to("x", 2)),
                wire("y", 2, Target::Receptacle("f".into())),
            ],
            entry: "x".into(),
            entry_inlet: 1,
        };
        assert!(matches!(ClassicalNetwork::new(cyclic), Err(Error::CyclicNetwork(_))));

        let doubled = NetworkSpec {
            connectors: vec![c("x"), c("y")],
            wiring: vec![
                wire("x", 1, to("y", 1)),
                wire("x", 2, to("y", 1)),
                wire("y", 1, Target::Receptacle("f".into())),
                wire("y", 2, Target::Receptacle("f".into())),
            ],
            entry: "x".into(),
            entry_inlet: 1,
        };
        assert!(matches!(ClassicalNetwork::new(doubled), Err(Error::InvalidNetwork(_))));

        let dangling = NetworkSpec {
            connectors: vec![c("x")],
            wiring: vec![wire("x", 1, Target::Receptacle("f".into()))],
            entry: "x".into(),
            entry_inlet: 1,
        };
        assert!(matches!(ClassicalNetwork::new(dangling), Err(Error::InvalidNetwork(_))));
    }

    #[test]
    fn means_under_conditions() {
        let net = uniform_fig1a();
        let paths = net.paths();
        let constant = vec![3.5; paths.len()];
        assert_abs_diff_eq!(classical_mean(&paths, &constant, &["f1"]).unwrap(), 3.5, epsilon = 1e-15);

        let a = ClassicalConnector::uniform;
        let valued = ClassicalNetwork::two_layer(
            a("in"),
            [a("a1").with_value(-1.0), a("a2").with_value(1.0)],
            [a("b1").with_value(-1.0), a("b2").with_value(1.0)],
        )
        .unwrap();
        let paths = valued.paths();
        let diff: Vec<f64> = paths
            .iter()
            .map(|p| {
                let v = p.connector_values(&valued);
                v[1] - v[0]
            })
            .collect();
        assert_abs_diff_eq!(classical_mean(&paths, &diff, &["f1", "f2"]).unwrap(), 0.0, epsilon = 1e-15);
        assert_eq!(classical_mean(&paths, &diff, &["nowhere"]), Err(Error::ZeroConditionalProbability));
    }

    #[test]
    fn deterministic_sampling() {
        let net = ClassicalNetwork::two_layer(
            ClassicalConnector::identity("in"),
            [ClassicalConnector::identity("a1"), ClassicalConnector::identity("a2")],
            [ClassicalConnector::identity("b1"), ClassicalConnector::identity("b2")],
        )
        .unwrap();
        let s = classical_sample(&net, 1000, 9).unwrap();
        assert_eq!(s.frequencies(), vec![1.0]);
        let u = uniform_fig1a();
        assert_eq!(classical_sample(&u, 300, 5).unwrap(), classical_sample(&u, 300, 5).unwrap());
    }
}
