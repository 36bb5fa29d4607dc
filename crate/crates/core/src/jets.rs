//! Truncated multivariate power series with complex coefficients.
//!
//! A series in variables `x_0 .. x_{d-1}` keeps every monomial whose exponent
//! in `x_v` does not exceed `caps[v]`. Truncation of this box shape commutes
//! with multiplication, so every stored coefficient of a product (and of any
//! elementary function of a series) equals the corresponding coefficient of
//! the exact result.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, PartialEq, Eq)]
struct Shape {
    caps: Vec<usize>,
    strides: Vec<usize>,
    // multi-index of each flat position, row-major
    indices: Vec<Vec<usize>>,
}

impl Shape {
    fn new(caps: &[usize]) -> Self {
        let mut strides = vec![1; caps.len()];
        for v in (0..caps.len().saturating_sub(1)).rev() {
            strides[v] = strides[v + 1] * (caps[v + 1] + 1);
        }
        let len: usize = caps.iter().map(|c| c + 1).product();
        let indices = (0..len)
            .map(|flat| caps.iter().zip(&strides).map(|(c, s)| (flat / s) % (c + 1)).collect())
            .collect();
        Shape {
            caps: caps.to_vec(),
            strides,
            indices,
        }
    }

    fn len(&self) -> usize {
        self.indices.len()
    }

    fn flat(&self, index: &[usize]) -> Option<usize> {
        if index.len() != self.caps.len() || index.iter().zip(&self.caps).any(|(i, c)| i > c) {
            return None;
        }
        Some(index.iter().zip(&self.strides).map(|(i, s)| i * s).sum())
    }

    /// Nilpotency degree of the non-constant part.
    fn total_order(&self) -> usize {
        self.caps.iter().sum()
    }
}

#[derive(Clone, PartialEq)]
pub struct TruncatedSeries {
    shape: Arc<Shape>,
    coeffs: Vec<Complex64>,
}

impl fmt::Debug for TruncatedSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut map = f.debug_map();
        for (idx, c) in self.iter() {
            if c != ZERO {
                map.entry(&idx, &c);
            }
        }
        map.finish()
    }
}

impl TruncatedSeries {
    pub fn zeros(caps: &[usize]) -> Self {
        let shape = Arc::new(Shape::new(caps));
        let coeffs = vec![ZERO; shape.len()];
        TruncatedSeries { shape, coeffs }
    }

    pub fn constant(caps: &[usize], value: Complex64) -> Self {
        let mut s = Self::zeros(caps);
        s.coeffs[0] = value;
        s
    }

    /// The series `value + x_index`.
    pub fn lift_variable(caps: &[usize], index: usize, value: f64) -> Result<Self> {
        if index >= caps.len() {
            return Err(Error::BadVariable {
                index,
                num_vars: caps.len(),
            });
        }
        let mut s = Self::constant(caps, Complex64::new(value, 0.0));
        if caps[index] >= 1 {
            s.coeffs[s.shape.strides[index]] = ONE;
        }
        Ok(s)
    }

    /// A constant with the same shape as `self`.
    pub fn constant_like(&self, value: Complex64) -> Self {
        let mut coeffs = vec![ZERO; self.coeffs.len()];
        coeffs[0] = value;
        TruncatedSeries {
            shape: Arc::clone(&self.shape),
            coeffs,
        }
    }

    pub fn caps(&self) -> &[usize] {
        &self.shape.caps
    }

    pub fn num_vars(&self) -> usize {
        self.shape.caps.len()
    }

    pub fn constant_term(&self) -> Complex64 {
        self.coeffs[0]
    }

    /// Taylor coefficient of `prod x_v^{index[v]}`, i.e. the mixed partial
    /// derivative at the origin divided by `prod index[v]!`.
    pub fn coefficient(&self, index: &[usize]) -> Result<Complex64> {
        self.shape
            .flat(index)
            .map(|f| self.coeffs[f])
            .ok_or_else(|| Error::IndexOutOfRange {
                index: index.to_vec(),
                caps: self.shape.caps.clone(),
            })
    }

    /// All `(multi-index, coefficient)` pairs in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (&[usize], Complex64)> + '_ {
        self.shape.indices.iter().map(Vec::as_slice).zip(self.coeffs.iter().copied())
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        self.map(|c| c * factor)
    }

    /// Coefficientwise complex conjugate. For real variables this is the
    /// series of the conjugated function.
    pub fn conj(&self) -> Self {
        self.map(|c| c.conj())
    }

    pub fn add_scalar(&self, value: Complex64) -> Self {
        let mut out = self.clone();
        out.coeffs[0] += value;
        out
    }

    /// Largest coefficient magnitude.
    pub fn max_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn divide(&self, rhs: &Self) -> Result<Self> {
        self.check_shape(rhs)?;
        Ok(self * &rhs.recip()?)
    }

    pub fn recip(&self) -> Result<Self> {
        let c0 = self.constant_term();
        if c0 == ZERO {
            return Err(Error::ZeroConstantTerm);
        }
        let inv = c0.inv();
        let mut term = inv;
        let coeffs = (0..=self.shape.total_order())
            .map(|_| {
                let t = term;
                term *= -inv;
                t
            })
            .collect::<Vec<_>>();
        Ok(self.compose_taylor(&coeffs))
    }

    pub fn sin(&self) -> Self {
        let (s, c) = (self.constant_term().sin(), self.constant_term().cos());
        self.compose_taylor(&cyclic_taylor([s, c, -s, -c], self.shape.total_order()))
    }

    pub fn cos(&self) -> Self {
        let (s, c) = (self.constant_term().sin(), self.constant_term().cos());
        self.compose_taylor(&cyclic_taylor([c, -s, -c, s], self.shape.total_order()))
    }

    pub fn exp(&self) -> Self {
        let e = self.constant_term().exp();
        let mut term = e;
        let coeffs = (0..=self.shape.total_order())
            .map(|n| {
                if n > 0 {
                    term /= n as f64;
                }
                term
            })
            .collect::<Vec<_>>();
        self.compose_taylor(&coeffs)
    }

    /// `exp(i * self)`.
    pub fn exp_i(&self) -> Self {
        self.scale(I).exp()
    }

    pub fn sqrt(&self) -> Result<Self> {
        let c0 = self.constant_term();
        if c0.re.is_nan() || c0.re <= 0.0 || c0.im != 0.0 {
            return Err(Error::NonPositiveSqrt(c0));
        }
        let root = c0.re.sqrt();
        // binomial(1/2, n) / c0^n
        let mut term = root;
        let coeffs = (0..=self.shape.total_order())
            .map(|n| {
                if n > 0 {
                    term *= (0.5 - (n - 1) as f64) / (n as f64 * c0.re);
                }
                Complex64::new(term, 0.0)
            })
            .collect::<Vec<_>>();
        Ok(self.compose_taylor(&coeffs))
    }

    /// Evaluates `sum_n taylor[n] * (self - c0)^n` by Horner's rule. The
    /// nilpotent remainder vanishes beyond the total order, so the sum is
    /// exact once `taylor` covers it.
    fn compose_taylor(&self, taylor: &[Complex64]) -> Self {
        let mut rest = self.clone();
        rest.coeffs[0] = ZERO;
        let mut acc = self.constant_like(*taylor.last().unwrap_or(&ZERO));
        for &a in taylor.iter().rev().skip(1) {
            acc = (&acc * &rest).add_scalar(a);
        }
        acc
    }

    fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        TruncatedSeries {
            shape: Arc::clone(&self.shape),
            coeffs: self.coeffs.iter().map(|&c| f(c)).collect(),
        }
    }

    fn check_shape(&self, rhs: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.shape, &rhs.shape) || self.shape.caps == rhs.shape.caps {
            Ok(())
        } else {
            Err(Error::ShapeMismatch {
                left: self.shape.caps.clone(),
                right: rhs.shape.caps.clone(),
            })
        }
    }

    fn assert_shape(&self, rhs: &Self) {
        if let Err(e) = self.check_shape(rhs) {
            panic!("{e}");
        }
    }
}

fn cyclic_taylor(derivs: [Complex64; 4], order: usize) -> Vec<Complex64> {
    let mut fact = 1.0;
    (0..=order)
        .map(|n| {
            if n > 0 {
                fact *= n as f64;
            }
            derivs[n % 4] / fact
        })
        .collect()
}

// Binary operators panic on mismatched shapes.

impl Add for &TruncatedSeries {
    type Output = TruncatedSeries;

    fn add(self, rhs: &TruncatedSeries) -> TruncatedSeries {
        self.assert_shape(rhs);
        TruncatedSeries {
            shape: Arc::clone(&self.shape),
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &TruncatedSeries {
    type Output = TruncatedSeries;

    fn sub(self, rhs: &TruncatedSeries) -> TruncatedSeries {
        self.assert_shape(rhs);
        TruncatedSeries {
            shape: Arc::clone(&self.shape),
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &TruncatedSeries {
    type Output = TruncatedSeries;

    fn mul(self, rhs: &TruncatedSeries) -> TruncatedSeries {
        self.assert_shape(rhs);
        let shape = &self.shape;
        let caps = &shape.caps;
        let mut out = vec![ZERO; shape.len()];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == ZERO {
                continue;
            }
            let left = &shape.indices[i];
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                if b == ZERO {
                    continue;
                }
                let right = &shape.indices[j];
                if left.iter().zip(right).zip(caps).all(|((l, r), c)| l + r <= *c) {
                    // strides are linear in the multi-index
                    out[i + j] += a * b;
                }
            }
        }
        TruncatedSeries {
            shape: Arc::clone(shape),
            coeffs: out,
        }
    }
}

impl Neg for &TruncatedSeries {
    type Output = TruncatedSeries;

    fn neg(self) -> TruncatedSeries {
        self.map(|c| -c)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $method:ident) => {
        impl $tr for TruncatedSeries {
            type Output = TruncatedSeries;

            fn $method(self, rhs: TruncatedSeries) -> TruncatedSeries {
                (&self).$method(&rhs)
            }
        }

        impl $tr<&TruncatedSeries> for TruncatedSeries {
            type Output = TruncatedSeries;

            fn $method(self, rhs: &TruncatedSeries) -> TruncatedSeries {
                (&self).$method(rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for TruncatedSeries {
    type Output = TruncatedSeries;

    fn neg(self) -> TruncatedSeries {
        -&self
    }
}

impl Mul<Complex64> for &TruncatedSeries {
    type Output = TruncatedSeries;

    fn mul(self, rhs: Complex64) -> TruncatedSeries {
        self.scale(rhs)
    }
}

impl Mul<f64> for &TruncatedSeries {
    type Output = TruncatedSeries;

    fn mul(self, rhs: f64) -> TruncatedSeries {
        self.map(|c| c * rhs)
    }
}
