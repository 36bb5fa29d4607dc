//! Taylor expansion of the total propagator around the zero-error point.
//!
//! The pulse train is evaluated with every error variable lifted into a
//! [`TruncatedSeries`]; the upper-left element of the resulting propagator
//! carries the coefficients `c[j, k(, l)]` of `alpha^j epsilon^k (delta^l)`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::jets::TruncatedSeries;
pub use crate::model::ErrorModel;
use crate::model::NOMINAL_RABI;
use crate::su2::CompositeSequence;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Series variable slots. Coefficient multi-indices follow this order.
pub const ALPHA: usize = 0;
pub const EPSILON: usize = 1;
pub const DELTA: usize = 2;

/// Even pulse-area orders examined by [`check_even_j`].
pub const EVEN_ORDERS: [usize; 3] = [0, 2, 4];

/// Magnitude below which a coefficient counts as vanishing in [`check_even_j`].
pub const EVEN_J_TOLERANCE: f64 = 1e-10;

/// Number of series variables the model needs.
pub fn model_vars(model: ErrorModel) -> usize {
    model.default_caps().len()
}

/// Cayley-Klein pair with series-valued entries.
#[derive(Debug, Clone)]
pub struct JetPropagator {
    pub a: TruncatedSeries,
    pub b: TruncatedSeries,
}

impl JetPropagator {
    fn then(&self, later: &JetPropagator) -> JetPropagator {
        JetPropagator {
            a: &(&later.a * &self.a) - &(&later.b * &self.b.conj()),
            b: &(&later.a * &self.b) + &(&later.b * &self.a.conj()),
        }
    }
}

/// Jet-valued total propagator of `seq` under `model`.
///
/// `caps` must cover at least the model's variables (`alpha, epsilon` or
/// `alpha, epsilon, delta`); extra trailing variables are allowed and stay
/// free for callers that lift additional quantities.
pub fn jet_propagator(seq: &CompositeSequence, model: ErrorModel, caps: &[usize]) -> Result<JetPropagator> {
    let phases: Vec<TruncatedSeries> = seq
        .pulses
        .iter()
        .map(|p| TruncatedSeries::constant(caps, Complex64::new(p.phase, 0.0)))
        .collect();
    jet_propagator_with_phases(seq, model, caps, &phases)
}

/// Like [`jet_propagator`] but with the nominal phases supplied as series,
/// which lets a caller differentiate with respect to the phases themselves.
pub fn jet_propagator_with_phases(
    seq: &CompositeSequence,
    model: ErrorModel,
    caps: &[usize],
    phases: &[TruncatedSeries],
) -> Result<JetPropagator> {
    let needed = model_vars(model);
    if caps.len() < needed {
        return Err(Error::DimensionMismatch {
            expected: needed,
            got: caps.len(),
        });
    }
    if phases.len() != seq.len() {
        return Err(Error::DimensionMismatch {
            expected: seq.len(),
            got: phases.len(),
        });
    }
    if seq.is_empty() {
        return Err(Error::EmptySequence);
    }

    let alpha = TruncatedSeries::lift_variable(caps, ALPHA, 0.0)?;
    let scale_eps = TruncatedSeries::lift_variable(caps, EPSILON, 1.0)?;
    let delta = match model {
        ErrorModel::Triple => Some(TruncatedSeries::lift_variable(caps, DELTA, 0.0)?),
        ErrorModel::Double => None,
    };
    let scale_alpha = alpha.add_scalar(ONE);

    let mut total: Option<JetPropagator> = None;
    for (pulse, phase) in seq.pulses.iter().zip(phases) {
        let imprint = (phase * &scale_eps).exp_i();
        let single = match &delta {
            None => {
                let half = &scale_alpha * (pulse.area / 2.0);
                JetPropagator {
                    a: half.cos(),
                    b: &half.sin().scale(-I) * &imprint,
                }
            }
            Some(delta) => {
                let rabi = &scale_alpha * pulse.rabi;
                let detuning = (delta * NOMINAL_RABI).add_scalar(Complex64::new(pulse.detuning, 0.0));
                let general_sq = &(&rabi * &rabi) + &(&detuning * &detuning);
                if general_sq.constant_term().re <= 0.0 {
                    return Err(Error::DegenerateExpansion);
                }
                let general = general_sq.sqrt()?;
                let half = &general * (pulse.duration / 2.0);
                let sin_over = half.sin().divide(&general)?;
                JetPropagator {
                    a: &half.cos() - &(&detuning * &sin_over).scale(I),
                    b: &(&rabi * &sin_over).scale(-I) * &imprint,
                }
            }
        };
        total = Some(match total {
            None => single,
            Some(acc) => acc.then(&single),
        });
    }
    Ok(total.expect("non-empty sequence"))
}

/// Taylor coefficients of `U11` indexed by powers of `(alpha, epsilon[, delta])`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    pub caps: Vec<usize>,
    pub entries: BTreeMap<Vec<usize>, Complex64>,
}

impl CoefficientTable {
    pub fn from_series(series: &TruncatedSeries) -> Self {
        CoefficientTable {
            caps: series.caps().to_vec(),
            entries: series.iter().map(|(idx, c)| (idx.to_vec(), c)).collect(),
        }
    }

    pub fn get(&self, index: &[usize]) -> Result<Complex64> {
        self.entries.get(index).copied().ok_or_else(|| Error::IndexOutOfRange {
            index: index.to_vec(),
            caps: self.caps.clone(),
        })
    }

    /// Largest `|c|` over entries with the given `alpha` order, restricted to
    /// entries with zero `delta` order when present.
    pub fn max_abs_at_alpha_order(&self, j: usize) -> f64 {
        self.entries
            .iter()
            .filter(|(idx, _)| idx[ALPHA] == j && idx.get(DELTA).is_none_or(|&l| l == 0))
            .map(|(_, c)| c.norm())
            .fold(0.0, f64::max)
    }
}

impl Serialize for CoefficientTable {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Entry<'a> {
            idx: &'a [usize],
            re: f64,
            im: f64,
        }
        let entries: Vec<Entry<'_>> = self
            .entries
            .iter()
            .map(|(idx, c)| Entry { idx, re: c.re, im: c.im })
            .collect();
        let mut s = serializer.serialize_struct("CoefficientTable", 2)?;
        s.serialize_field("caps", &self.caps)?;
        s.serialize_field("entries", &entries)?;
        s.end()
    }
}

/// Exact Taylor coefficients of `U11` of the composed propagator.
pub fn expand_u11(seq: &CompositeSequence, model: ErrorModel, caps: &[usize]) -> Result<CoefficientTable> {
    if caps.len() != model_vars(model) {
        return Err(Error::DimensionMismatch {
            expected: model_vars(model),
            got: caps.len(),
        });
    }
    let jet = jet_propagator(seq, model, caps)?;
    Ok(CoefficientTable::from_series(&jet.a))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvenOrderRow {
    pub j: usize,
    pub max_abs: f64,
    pub vanishes: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvenOrderReport {
    pub sequence: String,
    pub tolerance: f64,
    pub rows: Vec<EvenOrderRow>,
}

impl EvenOrderReport {
    pub fn holds(&self) -> bool {
        self.rows.iter().all(|r| r.vanishes)
    }

    pub fn row(&self, j: usize) -> Option<&EvenOrderRow> {
        self.rows.iter().find(|r| r.j == j)
    }
}

/// Checks that every coefficient with even `alpha` order `j` in
/// [`EVEN_ORDERS`] vanishes, for every `epsilon` order within the caps.
/// Under the triple model the `delta`-free slice is examined.
pub fn check_even_j(seq: &CompositeSequence, model: ErrorModel, caps: &[usize]) -> Result<EvenOrderReport> {
    if !seq.symmetric {
        return Err(Error::NotSymmetric(seq.label.clone()));
    }
    let table = expand_u11(seq, model, caps)?;
    let rows = EVEN_ORDERS
        .iter()
        .filter(|&&j| j <= caps[ALPHA])
        .map(|&j| {
            let max_abs = table.max_abs_at_alpha_order(j);
            EvenOrderRow {
                j,
                max_abs,
                vanishes: max_abs < EVEN_J_TOLERANCE,
            }
        })
        .collect();
    Ok(EvenOrderReport {
        sequence: seq.label.clone(),
        tolerance: EVEN_J_TOLERANCE,
        rows,
    })
}
