//! Named composite sequences and phase transformations.
//!
//! Phases are stored in units of pi exactly as tabulated and converted to
//! radians when a [`CompositeSequence`] is built.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ErrorModel;
use crate::su2::{anagram_phases, CompositeSequence, PulseSpec};

/// Tolerance used when classifying phases against the canonical ranges.
const RANGE_TOL: f64 = 1e-12;

/// A tabulated sequence together with the expansion coefficients its phases
/// were chosen to nullify.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedSequence {
    pub name: String,
    pub phases_pi: Vec<f64>,
    pub areas_pi: Vec<f64>,
    /// Multi-indices `(j, k)` or `(j, k, l)` of nullified coefficients.
    pub nullified: Vec<Vec<usize>>,
    /// Model the nullified indices refer to.
    #[serde(default = "default_model")]
    pub model: ErrorModel,
    /// Transformations applied since the sequence left the table.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub history: Vec<String>,
}

fn default_model() -> ErrorModel {
    ErrorModel::Double
}

impl NamedSequence {
    fn anagram(name: &str, interior_pi: &[f64], nullified: &[&[usize]], model: ErrorModel) -> Self {
        let phases_pi = anagram_phases(interior_pi);
        NamedSequence {
            name: name.to_string(),
            areas_pi: vec![1.0; phases_pi.len()],
            phases_pi,
            nullified: nullified.iter().map(|t| t.to_vec()).collect(),
            model,
            history: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.phases_pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases_pi.is_empty()
    }

    /// Interior phases `phi_2 .. phi_{n+1}` in radians.
    pub fn interior_phases(&self) -> Vec<f64> {
        let n = self.len() / 2;
        self.phases_pi[1..=n].iter().map(|p| p * PI).collect()
    }

    pub fn to_sequence(&self) -> Result<CompositeSequence> {
        if self.areas_pi.len() != self.phases_pi.len() {
            return Err(Error::DimensionMismatch {
                expected: self.phases_pi.len(),
                got: self.areas_pi.len(),
            });
        }
        let pulses = self
            .areas_pi
            .iter()
            .zip(&self.phases_pi)
            .map(|(a, p)| PulseSpec::resonant(a * PI, p * PI))
            .collect();
        let mut seq = CompositeSequence::new(self.name.clone(), pulses)?;
        seq.history = self.history.clone();
        Ok(seq)
    }

    /// Inverse of [`to_sequence`](Self::to_sequence) for exporting
    /// arbitrary (e.g. transformed) sequences.
    pub fn from_sequence(seq: &CompositeSequence, nullified: Vec<Vec<usize>>, model: ErrorModel) -> Self {
        NamedSequence {
            name: seq.label.clone(),
            phases_pi: seq.pulses.iter().map(|p| p.phase / PI).collect(),
            areas_pi: seq.pulses.iter().map(|p| p.area / PI).collect(),
            nullified,
            model,
            history: seq.history.clone(),
        }
    }
}

fn table() -> &'static [NamedSequence] {
    static TABLE: OnceLock<Vec<NamedSequence>> = OnceLock::new();
    TABLE.get_or_init(|| {
        use ErrorModel::{Double, Triple};
        let a3: &[&[usize]] = &[&[1, 0], &[3, 0]];
        vec![
            NamedSequence::anagram("B3", &[2.0 / 3.0], &[&[1, 0]], Double),
            NamedSequence::anagram("B5a", &[0.8, 0.4], a3, Double),
            NamedSequence::anagram("B5b", &[0.4, 1.2], a3, Double),
            NamedSequence::anagram("B5c", &[1.2, 1.6], a3, Double),
            NamedSequence::anagram("B5d", &[1.6, 0.8], a3, Double),
            NamedSequence::anagram("Phi5", &[0.7433, 0.3951], &[&[1, 0], &[1, 1]], Double),
            NamedSequence::anagram(
                "Phi7",
                &[0.5906, -0.3069, -0.5749],
                &[&[1, 0], &[1, 1], &[3, 0]],
                Double,
            ),
            NamedSequence::anagram(
                "Phi9a",
                &[0.8095, 0.5444, 1.1007, 0.1715],
                &[&[1, 0], &[1, 1], &[1, 2], &[3, 0]],
                Double,
            ),
            NamedSequence::anagram(
                "Phi9b",
                &[1.4073, 0.2688, 0.6144, 1.6587],
                &[&[1, 0], &[1, 1], &[3, 0], &[3, 1]],
                Double,
            ),
            NamedSequence::anagram(
                "Phi11a",
                &[0.6713, 0.3049, 1.0965, 0.7176, 0.0956],
                &[&[1, 0], &[1, 1], &[3, 0], &[3, 1], &[5, 0]],
                Double,
            ),
            NamedSequence::anagram(
                "Phi11b",
                &[0.6934, 0.3176, 1.1303, 0.7420, 0.1010],
                &[&[1, 0], &[1, 1], &[1, 2], &[3, 0], &[3, 1]],
                Double,
            ),
            NamedSequence::anagram(
                "Phi13a",
                &[0.8097, 0.2288, -0.0720, -0.9158, -0.1132, 0.8688],
                &[&[1, 0], &[1, 1], &[3, 0], &[3, 1], &[5, 0], &[5, 1]],
                Double,
            ),
            // The printed row reads "0.2744)" for the middle phase.
            NamedSequence::anagram(
                "Phi13b",
                &[0.8150, 0.2523, 0.6393, -0.2552, -0.4568, 0.2744],
                &[&[1, 0], &[1, 1], &[1, 2], &[3, 0], &[3, 1], &[3, 2]],
                Double,
            ),
            NamedSequence::anagram(
                "Phi13c",
                &[0.7639, 0.1842, -0.1071, -0.8840, -0.0756, 0.8432],
                &[&[1, 0], &[1, 1], &[1, 2], &[3, 0], &[3, 1], &[5, 0]],
                Double,
            ),
            NamedSequence::anagram("U9", &[0.635, 1.35, 0.553, 0.297], &[&[1, 0]], Double),
            // The nullified set behind T9 is not known; it is checked by its profile.
            NamedSequence::anagram("T9", &[1.348, 1.257, 0.166, 0.167], &[], Triple),
        ]
    })
}

/// Names of all fixed catalog entries. Any `B<N>` with odd `N` is also
/// accepted by [`get`].
pub fn names() -> Vec<&'static str> {
    table().iter().map(|s| s.name.as_str()).collect()
}

pub fn entries() -> &'static [NamedSequence] {
    table()
}

fn normalize(name: &str) -> String {
    name.trim().replace('Φ', "Phi").to_ascii_lowercase()
}

/// Looks up a catalog entry by name (`Φ` and `Phi` are interchangeable,
/// case is ignored). `B<N>` for odd `N` not in the table is generated from
/// the first Bn formula reduced into `[0, 2pi)`.
pub fn get(name: &str) -> Result<NamedSequence> {
    let key = normalize(name);
    if let Some(entry) = table().iter().find(|s| normalize(&s.name) == key) {
        return Ok(entry.clone());
    }
    if let Some(n_pulses) = key.strip_prefix('b').and_then(|n| n.parse::<usize>().ok()) {
        let phases_pi = bn_phases(n_pulses, BnVariant::First, true)?;
        let n = n_pulses / 2;
        return Ok(NamedSequence {
            name: format!("B{n_pulses}"),
            areas_pi: vec![1.0; n_pulses],
            phases_pi,
            nullified: (0..n).map(|i| vec![2 * i + 1, 0]).collect(),
            model: ErrorModel::Double,
            history: Vec::new(),
        });
    }
    Err(Error::UnknownSequence(name.to_string()))
}

pub fn get_sequence(name: &str) -> Result<CompositeSequence> {
    get(name)?.to_sequence()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BnVariant {
    /// `k (k - 1) n / N`
    First,
    /// `k (k - 1) / N`
    Second,
}

/// Phases of the Bn family for `N = 2n + 1` pulses, in units of pi.
/// With `reduce` each phase is taken modulo 2 (i.e. `2pi`) into `[0, 2)`;
/// otherwise the raw formula values are returned.
pub fn bn_phases(n_pulses: usize, variant: BnVariant, reduce: bool) -> Result<Vec<f64>> {
    if n_pulses < 3 || n_pulses.is_multiple_of(2) {
        return Err(Error::InvalidLength(n_pulses));
    }
    let n = (n_pulses / 2) as u64;
    let big_n = n_pulses as u64;
    Ok((1..=big_n)
        .map(|k| {
            let numer = match variant {
                BnVariant::First => k * (k - 1) * n,
                BnVariant::Second => k * (k - 1),
            };
            let numer = if reduce { numer % (2 * big_n) } else { numer };
            numer as f64 / big_n as f64
        })
        .collect())
}

/// Phase transformations that leave the transition probability unchanged
/// in the absence of phase errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseTransform {
    SignFlip,
    /// Adds `2 pi m` to the phase of pulse `k` (1-based) for each `(k, m)`.
    Add2Pi(Vec<(usize, i64)>),
    Reverse,
    /// Adds the same phase (radians) to every pulse.
    GlobalShift(f64),
}

impl fmt::Display for PhaseTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhaseTransform::SignFlip => f.write_str("signflip"),
            PhaseTransform::Reverse => f.write_str("reverse"),
            PhaseTransform::GlobalShift(phi) => write!(f, "shift:{}", phi / PI),
            PhaseTransform::Add2Pi(shifts) => {
                f.write_str("add2pi")?;
                for (k, m) in shifts {
                    write!(f, ":{k}:{m:+}")?;
                }
                Ok(())
            }
        }
    }
}

/// Parses `signflip`, `reverse`, `shift:<phase in units of pi>` and
/// `add2pi:<k>:<m>[:<k>:<m>...]`.
impl FromStr for PhaseTransform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidTransform(s.to_string());
        let mut parts = s.trim().split(':');
        let head = parts.next().ok_or_else(bad)?.to_ascii_lowercase().replace(['_', '-'], "");
        let rest: Vec<&str> = parts.collect();
        match head.as_str() {
            "signflip" | "flip" if rest.is_empty() => Ok(PhaseTransform::SignFlip),
            "reverse" if rest.is_empty() => Ok(PhaseTransform::Reverse),
            "shift" | "globalshift" if rest.len() == 1 => {
                let v: f64 = rest[0].parse().map_err(|_| bad())?;
                Ok(PhaseTransform::GlobalShift(v * PI))
            }
            "add2pi" if !rest.is_empty() && rest.len().is_multiple_of(2) => {
                let shifts = rest
                    .chunks(2)
                    .map(|c| {
                        let k = c[0].parse::<usize>().map_err(|_| bad())?;
                        let m = c[1].trim_start_matches('+').parse::<i64>().map_err(|_| bad())?;
                        Ok((k, m))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(PhaseTransform::Add2Pi(shifts))
            }
            _ => Err(bad()),
        }
    }
}

/// Applies `op` and appends it to the sequence history.
pub fn transform(seq: &CompositeSequence, op: &PhaseTransform) -> Result<CompositeSequence> {
    let mut phases = seq.phases();
    let mut out = match op {
        PhaseTransform::SignFlip => {
            phases.iter_mut().for_each(|p| *p = -*p);
            seq.with_phases(&phases)
        }
        PhaseTransform::GlobalShift(phi) => {
            phases.iter_mut().for_each(|p| *p += phi);
            seq.with_phases(&phases)
        }
        PhaseTransform::Add2Pi(shifts) => {
            for &(k, m) in shifts {
                if k == 0 || k > phases.len() {
                    return Err(Error::InvalidTransform(format!(
                        "pulse index {k} outside 1..={}",
                        phases.len()
                    )));
                }
                phases[k - 1] += 2.0 * PI * m as f64;
            }
            seq.with_phases(&phases)
        }
        PhaseTransform::Reverse => {
            let pulses: Vec<PulseSpec> = seq.pulses.iter().rev().copied().collect();
            let mut rev = CompositeSequence::new(seq.label.clone(), pulses)?;
            rev.history = seq.history.clone();
            rev
        }
    };
    out.history.push(op.to_string());
    Ok(out)
}

/// Result of [`canonicalize`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CanonicalPhases {
    /// Canonical phases in radians.
    pub phases: Vec<f64>,
    /// Global shift that was added (radians).
    pub shift: f64,
    pub flipped: bool,
    /// All phases within `[0, 2pi)`.
    pub in_zero_two_pi: bool,
    /// All phases within `(-pi, pi]`.
    pub in_symmetric_pi: bool,
    /// Positions of phases lying outside both ranges. They are reported,
    /// never wrapped.
    pub outside_both: Vec<usize>,
}

pub fn in_zero_two_pi(phase: f64) -> bool {
    (-RANGE_TOL..2.0 * PI - RANGE_TOL).contains(&phase)
}

pub fn in_symmetric_pi(phase: f64) -> bool {
    phase > -PI + RANGE_TOL && phase <= PI + RANGE_TOL
}

/// Shifts the first phase to zero and flips signs so that the first
/// nonzero phase is positive. Phases are never reduced modulo `2pi`.
pub fn canonicalize(phases: &[f64]) -> CanonicalPhases {
    let shift = phases.first().map_or(0.0, |p| -p);
    let mut out: Vec<f64> = phases.iter().map(|p| p + shift).collect();
    let flipped = out.iter().find(|p| p.abs() > RANGE_TOL).is_some_and(|p| *p < 0.0);
    if flipped {
        out.iter_mut().for_each(|p| *p = -*p);
    }
    // avoid -0.0 in outputs
    out.iter_mut().filter(|p| **p == 0.0).for_each(|p| *p = 0.0);
    let outside_both = out
        .iter()
        .enumerate()
        .filter(|(_, &p)| !in_zero_two_pi(p) && !in_symmetric_pi(p))
        .map(|(i, _)| i)
        .collect();
    CanonicalPhases {
        in_zero_two_pi: out.iter().all(|&p| in_zero_two_pi(p)),
        in_symmetric_pi: out.iter().all(|&p| in_symmetric_pi(p)),
        phases: out,
        shift,
        flipped,
        outside_both,
    }
}
