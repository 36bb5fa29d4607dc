//! Exact SU(2) propagators for single pulses and pulse trains.
//!
//! A propagator is stored through its Cayley-Klein pair `(a, b)`:
//!
//! ```text
//!     U = [  a    b  ]
//!         [ -b*   a* ]
//! ```
//!
//! so `|a|^2 + |b|^2 = 1` holds by construction and the transition
//! probability out of the initial state is `|b|^2`.

use std::f64::consts::PI;
use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ErrorModel, Errors, NOMINAL_DURATION, NOMINAL_RABI};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Below this value of `|generalized Rabi frequency * duration|` the
/// rectangular propagator switches to its small-argument series.
pub const SINC_SWITCH: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Propagator {
    pub a: Complex64,
    pub b: Complex64,
}

impl Propagator {
    pub const IDENTITY: Propagator = Propagator {
        a: Complex64::new(1.0, 0.0),
        b: Complex64::new(0.0, 0.0),
    };

    pub fn new(a: Complex64, b: Complex64) -> Self {
        Propagator { a, b }
    }

    /// Upper-left matrix element `U11 = a`.
    pub fn u11(&self) -> Complex64 {
        self.a
    }

    /// Upper-right matrix element `U12 = b`.
    pub fn u12(&self) -> Complex64 {
        self.b
    }

    /// Lower-left matrix element `U21 = -b*`.
    pub fn u21(&self) -> Complex64 {
        -self.b.conj()
    }

    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        [[self.a, self.b], [-self.b.conj(), self.a.conj()]]
    }

    /// `|a|^2 + |b|^2 - 1`.
    pub fn unitarity_defect(&self) -> f64 {
        self.a.norm_sqr() + self.b.norm_sqr() - 1.0
    }
}

/// Matrix product `self * rhs`: `rhs` acts first.
impl Mul for Propagator {
    type Output = Propagator;

    fn mul(self, rhs: Propagator) -> Propagator {
        Propagator {
            a: self.a * rhs.a - self.b * rhs.b.conj(),
            b: self.a * rhs.b + self.b * rhs.a.conj(),
        }
    }
}

/// Ideal resonant pulse of the given area with the field phase imprinted on
/// the off-diagonal element.
pub fn resonant_propagator(area: f64, phase: f64) -> Propagator {
    let (s, c) = (area / 2.0).sin_cos();
    Propagator {
        a: Complex64::new(c, 0.0),
        b: -I * s * Complex64::from_polar(1.0, phase),
    }
}

/// Rectangular pulse with constant Rabi frequency and detuning, i.e. the
/// exponential of `-i T/2 (rabi sigma_x + detuning sigma_z)` with the phase
/// imprinted on the coupling.
pub fn rectangular_propagator(rabi: f64, detuning: f64, duration: f64, phase: f64) -> Result<Propagator> {
    if duration.is_nan() || duration <= 0.0 {
        return Err(Error::InvalidDuration(duration));
    }
    let general = rabi.hypot(detuning);
    let half = general * duration / 2.0;
    // sin(half) / general, continued through general = 0
    let sin_over = if (general * duration).abs() < SINC_SWITCH {
        duration / 2.0 * (1.0 - half * half / 6.0)
    } else {
        half.sin() / general
    };
    Ok(Propagator {
        a: Complex64::new(half.cos(), -detuning * sin_over),
        b: -I * rabi * sin_over * Complex64::from_polar(1.0, phase),
    })
}

/// Product of a pulse train. `seq[0]` acts first, so the result is
/// `seq[n-1] * ... * seq[1] * seq[0]`.
pub fn compose(seq: &[Propagator]) -> Result<Propagator> {
    let (first, rest) = seq.split_first().ok_or(Error::EmptySequence)?;
    Ok(rest.iter().fold(*first, |acc, &u| u * acc))
}

/// `|b|^2`, clamped into `[0, 1]`.
pub fn transition_probability(u: &Propagator) -> f64 {
    u.b.norm_sqr().clamp(0.0, 1.0)
}

/// Nominal parameters of one pulse in a train.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    /// Nominal pulse area in radians.
    pub area: f64,
    /// Nominal phase in radians.
    pub phase: f64,
    /// Rabi frequency used by the rectangular model.
    pub rabi: f64,
    /// Detuning used by the rectangular model.
    pub detuning: f64,
    pub duration: f64,
}

impl PulseSpec {
    /// Resonant pulse of the given area and unit duration.
    pub fn resonant(area: f64, phase: f64) -> Self {
        PulseSpec {
            area,
            phase,
            rabi: area / NOMINAL_DURATION,
            detuning: 0.0,
            duration: NOMINAL_DURATION,
        }
    }

    pub fn pi(phase: f64) -> Self {
        debug_assert!((NOMINAL_RABI * NOMINAL_DURATION - PI).abs() < 1e-15);
        PulseSpec::resonant(PI, phase)
    }

    /// Propagator of this pulse at the given error point.
    pub fn propagator(&self, model: ErrorModel, errors: &Errors) -> Propagator {
        let phase = self.phase * (1.0 + errors.epsilon);
        match model {
            ErrorModel::Double => resonant_propagator(self.area * (1.0 + errors.alpha), phase),
            ErrorModel::Triple => {
                let rabi = self.rabi * (1.0 + errors.alpha);
                let detuning = self.detuning + NOMINAL_RABI * errors.delta;
                rectangular_propagator(rabi, detuning, self.duration, phase)
                    .expect("pulse durations are validated on construction")
            }
        }
    }
}

/// An ordered pulse train.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositeSequence {
    pub label: String,
    pub pulses: Vec<PulseSpec>,
    /// All areas pi, phases palindromic with zero outer phases.
    pub symmetric: bool,
    /// Transformations applied since the sequence was taken from the catalog.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub history: Vec<String>,
}

impl CompositeSequence {
    pub fn new(label: impl Into<String>, pulses: Vec<PulseSpec>) -> Result<Self> {
        if pulses.is_empty() {
            return Err(Error::EmptySequence);
        }
        if let Some(p) = pulses.iter().find(|p| p.duration.is_nan() || p.duration <= 0.0) {
            return Err(Error::InvalidDuration(p.duration));
        }
        let symmetric = is_anagram(&pulses);
        Ok(CompositeSequence {
            label: label.into(),
            pulses,
            symmetric,
            history: Vec::new(),
        })
    }

    /// Train of nominal pi pulses with the given phases (radians).
    pub fn from_phases(label: impl Into<String>, phases: &[f64]) -> Result<Self> {
        Self::new(label, phases.iter().map(|&p| PulseSpec::pi(p)).collect())
    }

    /// Symmetric train `0, p2, ..., p_{n+1}, ..., p2, 0` built from the
    /// `n` interior phases (radians).
    pub fn anagram(label: impl Into<String>, interior: &[f64]) -> Result<Self> {
        Self::from_phases(label, &anagram_phases(interior))
    }

    pub fn len(&self) -> usize {
        self.pulses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }

    pub fn phases(&self) -> Vec<f64> {
        self.pulses.iter().map(|p| p.phase).collect()
    }

    /// Replaces the phases keeping every other pulse parameter.
    pub fn with_phases(&self, phases: &[f64]) -> Self {
        assert_eq!(phases.len(), self.pulses.len());
        let pulses: Vec<PulseSpec> = self
            .pulses
            .iter()
            .zip(phases)
            .map(|(p, &phase)| PulseSpec { phase, ..*p })
            .collect();
        let symmetric = is_anagram(&pulses);
        CompositeSequence {
            label: self.label.clone(),
            pulses,
            symmetric,
            history: self.history.clone(),
        }
    }
}

/// Expands `n` interior phases into the full palindromic phase list of
/// length `2n + 1`.
pub fn anagram_phases(interior: &[f64]) -> Vec<f64> {
    let mut phases = Vec::with_capacity(2 * interior.len() + 1);
    phases.push(0.0);
    phases.extend_from_slice(interior);
    phases.extend(interior.iter().rev().skip(1));
    phases.push(0.0);
    phases
}

fn is_anagram(pulses: &[PulseSpec]) -> bool {
    let n = pulses.len();
    pulses.iter().all(|p| (p.area - PI).abs() < 1e-12)
        && pulses[0].phase == 0.0
        && (0..n / 2).all(|k| pulses[k].phase == pulses[n - 1 - k].phase)
}

/// Total propagator of `seq` with its pulses perturbed according to `model`.
/// `errors` is `(alpha, epsilon)` for the double model and
/// `(alpha, delta, epsilon)` for the triple model.
pub fn sequence_propagator(seq: &CompositeSequence, model: ErrorModel, errors: &[f64]) -> Result<Propagator> {
    let errors = Errors::from_slice(model, errors)?;
    Ok(propagator_at(seq, model, &errors))
}

/// Infallible core of [`sequence_propagator`].
pub fn propagator_at(seq: &CompositeSequence, model: ErrorModel, errors: &Errors) -> Propagator {
    seq.pulses
        .iter()
        .fold(Propagator::IDENTITY, |acc, p| p.propagator(model, errors) * acc)
}

/// Transition probability of `seq` at a point in error space.
pub fn probability_at(seq: &CompositeSequence, model: ErrorModel, errors: &Errors) -> f64 {
    transition_probability(&propagator_at(seq, model, errors))
}
