//! Reference implementations used only by tests. They build every pulse
//! matrix explicitly and multiply 2x2 complex matrices, without going
//! through the library's Cayley-Klein representation or truncated series.

#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::Matrix2;
use num_complex::Complex64;
use rayon::prelude::*;

pub type C = Complex64;
pub type M2 = Matrix2<C>;

pub const I: C = C::new(0.0, 1.0);

/// One pulse of a train for the oracle.
#[derive(Debug, Clone, Copy)]
pub struct OraclePulse {
    pub area: f64,
    pub phase: f64,
    pub rabi: f64,
    pub detuning: f64,
    pub duration: f64,
}

impl OraclePulse {
    pub fn resonant(area: f64, phase: f64) -> Self {
        OraclePulse {
            area,
            phase,
            rabi: area,
            detuning: 0.0,
            duration: 1.0,
        }
    }
}

pub fn pulses(phases_pi: &[f64], areas_pi: &[f64]) -> Vec<OraclePulse> {
    phases_pi
        .iter()
        .zip(areas_pi)
        .map(|(p, a)| OraclePulse::resonant(a * PI, p * PI))
        .collect()
}

pub fn pi_train(phases_pi: &[f64]) -> Vec<OraclePulse> {
    pulses(phases_pi, &vec![1.0; phases_pi.len()])
}

/// Rotation with area `theta` about an axis at azimuth `phi`, both possibly
/// complex: `cos(theta/2) 1 - i sin(theta/2) (cos phi sx + sin phi sy)`.
pub fn rotation(theta: C, phi: C) -> M2 {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    M2::new(c, -I * s * (I * phi).exp(), -I * s * (-I * phi).exp(), c)
}

fn hamiltonian(rabi: C, detuning: C, phi: C) -> M2 {
    M2::new(
        detuning / 2.0,
        rabi / 2.0 * (I * phi).exp(),
        rabi / 2.0 * (-I * phi).exp(),
        -detuning / 2.0,
    )
}

/// `exp(-i H T)` with `H = (Delta sz + Omega (cos phi sx + sin phi sy)) / 2`,
/// evaluated with a general matrix exponential.
pub fn rectangular_expm(rabi: C, detuning: C, duration: f64, phi: C) -> M2 {
    (hamiltonian(rabi, detuning, phi) * (-I * duration)).exp()
}

/// Same as [`rectangular_expm`] through Cayley-Hamilton: a traceless `M`
/// has `exp(M) = cosh(s) 1 + sinh(s)/s M` with `s^2 = -det M`.
pub fn rectangular(rabi: C, detuning: C, duration: f64, phi: C) -> M2 {
    let m = hamiltonian(rabi, detuning, phi) * (-I * duration);
    let s2 = -(m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]);
    let s = s2.sqrt();
    let shc = if s.norm() < 1e-4 {
        1.0 + s2 / 6.0 + s2 * s2 / 120.0
    } else {
        s.sinh() / s
    };
    M2::identity() * s.cosh() + m * shc
}

/// Full propagator of the double error model at (possibly complex)
/// `alpha` and `epsilon`. The first pulse acts first.
pub fn double_matrix(train: &[OraclePulse], alpha: C, epsilon: C) -> M2 {
    train.iter().fold(M2::identity(), |acc, p| {
        rotation((1.0 + alpha) * p.area, (1.0 + epsilon) * p.phase) * acc
    })
}

/// Full propagator of the triple error model.
pub fn triple_matrix(train: &[OraclePulse], alpha: C, delta: C, epsilon: C) -> M2 {
    train.iter().fold(M2::identity(), |acc, p| {
        let rabi = (1.0 + alpha) * p.rabi;
        let detuning = p.detuning + PI * delta;
        rectangular(rabi, detuning, p.duration, (1.0 + epsilon) * p.phase) * acc
    })
}

pub fn double_u11(train: &[OraclePulse], alpha: C, epsilon: C) -> C {
    double_matrix(train, alpha, epsilon)[(0, 0)]
}

pub fn probability(m: &M2) -> f64 {
    m[(0, 1)].norm_sqr()
}

/// Taylor coefficient of `f` at the origin for the multi-index `order`,
/// from a roots-of-unity difference stencil of `nodes` points per variable
/// on circles of the given radii.
pub fn contour_coefficient<F>(f: F, order: &[usize], radii: &[f64], nodes: usize) -> C
where
    F: Fn(&[C]) -> C + Sync,
{
    let vars = order.len();
    let total = nodes.pow(vars as u32);
    let sum: C = (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut rest = flat;
            let mut point = vec![C::new(0.0, 0.0); vars];
            let mut weight = C::new(1.0, 0.0);
            for v in 0..vars {
                let k = rest % nodes;
                rest /= nodes;
                let angle = 2.0 * PI * k as f64 / nodes as f64;
                point[v] = C::from_polar(radii[v], angle);
                weight *= C::from_polar(1.0, -angle * order[v] as f64);
            }
            f(&point) * weight
        })
        .sum();
    let scale: f64 = order.iter().zip(radii).map(|(&n, &r)| r.powi(n as i32)).product();
    sum / (total as f64 * scale)
}

/// Growth rates of the propagator entries per unit imaginary part of each
/// error variable, used to pick stencil radii.
pub fn growth_rates(train: &[OraclePulse], vars: usize) -> Vec<f64> {
    let area: f64 = train.iter().map(|p| p.rabi.abs().max(p.area.abs())).sum::<f64>() / 2.0;
    let phase: f64 = train.iter().map(|p| p.phase.abs()).sum();
    let detuning = PI * train.len() as f64 / 2.0;
    [area, phase, detuning][..vars].iter().map(|w| w.max(1.0)).collect()
}

/// Radius balancing rounding against growth for a derivative of order `n`.
pub fn stencil_radius(n: usize, rate: f64) -> f64 {
    (n.max(1) as f64 / rate).min(1.0)
}

/// Oracle coefficient of `U11` with an error estimate taken from a second
/// evaluation at radii scaled by `0.7`.
pub fn oracle_coefficient<F>(f: F, order: &[usize], rates: &[f64]) -> (C, f64)
where
    F: Fn(&[C]) -> C + Sync,
{
    let nodes = if order.len() > 2 { 24 } else { 32 };
    let radii: Vec<f64> = order.iter().zip(rates).map(|(&n, &w)| stencil_radius(n, w)).collect();
    let first = contour_coefficient(&f, order, &radii, nodes);
    let smaller: Vec<f64> = radii.iter().map(|r| 0.7 * r).collect();
    let second = contour_coefficient(&f, order, &smaller, nodes);
    (first, (first - second).norm())
}

/// Central-difference estimate of the `n`-th derivative of a real-variable
/// function with step `h`.
pub fn central_difference<F: Fn(f64) -> C>(f: &F, n: usize, h: f64) -> C {
    // sum_i (-1)^i binom(n, i) f((n/2 - i) h) / h^n
    let mut acc = C::new(0.0, 0.0);
    let mut binom = 1.0;
    for i in 0..=n {
        let x = (n as f64 / 2.0 - i as f64) * h;
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        acc += f(x) * (sign * binom);
        binom = binom * (n - i) as f64 / (i + 1) as f64;
    }
    acc / h.powi(n as i32)
}

/// Richardson-extrapolated central difference from steps `h` and `h / 2`.
/// For odd `n` the raw stencil uses half-steps, which keeps the error
/// expansion even in `h`.
pub fn richardson<F: Fn(f64) -> C>(f: &F, n: usize, h: f64) -> C {
    let coarse = central_difference(f, n, h);
    let fine = central_difference(f, n, h / 2.0);
    (fine * 4.0 - coarse) / 3.0
}

/// Mixed partial `d^j/da^j d^k/de^k` at the origin via nested Richardson
/// central differences.
pub fn mixed_richardson<F: Fn(f64, f64) -> C>(f: &F, j: usize, k: usize, h: f64) -> C {
    let outer = |a: f64| richardson(&|e: f64| f(a, e), k, h);
    richardson(&outer, j, h)
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|v| v as f64).product()
}
