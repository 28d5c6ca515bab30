//! Callable functions with derivative jets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::FaceFrame;
use crate::jet::{factorial, JetLayout, Series};

/// A function on `R^n` that can report partial derivatives `∂^α u(x)` up to
/// [`FunctionSample::max_order`].
pub trait FunctionSample: Send + Sync {
    fn dim(&self) -> usize;

    fn max_order(&self) -> usize;

    /// `∂^α u(x)` without order checks.
    fn derivative(&self, x: &[f64], alpha: &[usize]) -> f64;

    /// All derivatives of total order `≤ order` in graded lexicographic order.
    fn jet_unchecked(&self, x: &[f64], order: usize) -> Vec<f64> {
        JetLayout::get(self.dim(), order)
            .indices
            .iter()
            .map(|a| self.derivative(x, a))
            .collect()
    }

    fn eval(&self, x: &[f64], alpha: &[usize]) -> Result<f64> {
        if alpha.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: alpha.len(),
            });
        }
        let k: usize = alpha.iter().sum();
        check_order(k, self.max_order())?;
        Ok(self.derivative(x, alpha))
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.derivative(x, &vec![0; self.dim()])
    }

    fn jet(&self, x: &[f64], order: usize) -> Result<Vec<f64>> {
        check_order(order, self.max_order())?;
        Ok(self.jet_unchecked(x, order))
    }
}

pub(crate) fn check_order(requested: usize, available: usize) -> Result<()> {
    if requested > available {
        return Err(Error::JetOrderExceeded { requested, available });
    }
    Ok(())
}

/// Smooth univariate factors with closed-form derivatives of every order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Univariate {
    /// `Σ c_i t^i`.
    Poly { coeffs: Vec<f64> },
    /// `sin(freq·t + phase)`.
    Sin { freq: f64, phase: f64 },
    /// `exp(rate·t)`.
    Exp { rate: f64 },
    /// `exp(1 − 1/(1 − τ²))` for `τ = (t − center)/radius`, `|τ| < 1`, else 0.
    Bump { center: f64, radius: f64 },
    /// The `order`-th derivative of `base`.
    Derivative { base: Box<Univariate>, order: usize },
}

impl Univariate {
    pub fn one() -> Self {
        Univariate::Poly { coeffs: vec![1.0] }
    }

    pub fn monomial(k: usize) -> Self {
        let mut coeffs = vec![0.0; k + 1];
        coeffs[k] = 1.0;
        Univariate::Poly { coeffs }
    }

    pub fn derivative(&self, k: usize, t: f64) -> f64 {
        match self {
            Univariate::Poly { coeffs } => coeffs
                .iter()
                .enumerate()
                .skip(k)
                .map(|(i, c)| {
                    let fall: f64 = ((i - k + 1)..=i).map(|j| j as f64).product();
                    c * fall * t.powi((i - k) as i32)
                })
                .sum(),
            Univariate::Sin { freq, phase } => {
                freq.powi(k as i32) * (freq * t + phase + k as f64 * std::f64::consts::FRAC_PI_2).sin()
            }
            Univariate::Exp { rate } => rate.powi(k as i32) * (rate * t).exp(),
            Univariate::Bump { center, radius } => {
                let tau = (t - center) / radius;
                if tau.abs() >= 1.0 {
                    return 0.0;
                }
                let n = k + 1;
                let tau_s = Series::linear(tau, 1.0 / radius, n);
                let g = tau_s.mul(&tau_s).scale(-1.0).add_scalar(1.0);
                let e = g.recip().scale(-1.0).add_scalar(1.0).exp();
                e.derivative(k)
            }
            Univariate::Derivative { base, order } => base.derivative(k + order, t),
        }
    }
}

/// Finite sums of separable products `Σ_t c_t Π_i f_{t,i}(x_i)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Analytic {
    dim: usize,
    terms: Vec<(f64, Vec<Univariate>)>,
    max_order: usize,
}

impl Analytic {
    /// Jets of analytic functions are unbounded in principle; this cap keeps
    /// the bookkeeping finite.
    pub const DEFAULT_MAX_ORDER: usize = 16;

    pub fn new(dim: usize, terms: Vec<(f64, Vec<Univariate>)>) -> Result<Self> {
        for (_, f) in &terms {
            if f.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: f.len() });
            }
        }
        Ok(Analytic {
            dim,
            terms,
            max_order: Self::DEFAULT_MAX_ORDER,
        })
    }

    pub fn with_max_order(mut self, k: usize) -> Self {
        self.max_order = k;
        self
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Analytic::new(dim, vec![(c, vec![Univariate::one(); dim])]).expect("consistent dims")
    }

    pub fn zero(dim: usize) -> Self {
        Analytic::new(dim, vec![]).expect("consistent dims")
    }

    /// `a · x`.
    pub fn linear(a: &[f64]) -> Self {
        let dim = a.len();
        let terms = (0..dim)
            .map(|i| {
                let mut f = vec![Univariate::one(); dim];
                f[i] = Univariate::monomial(1);
                (a[i], f)
            })
            .collect();
        Analytic::new(dim, terms).expect("consistent dims")
    }

    /// `Σ_i x_i²`.
    pub fn squared_norm(dim: usize) -> Self {
        let terms = (0..dim)
            .map(|i| {
                let mut f = vec![Univariate::one(); dim];
                f[i] = Univariate::monomial(2);
                (1.0, f)
            })
            .collect();
        Analytic::new(dim, terms).expect("consistent dims")
    }

    /// `sin(freq·x + phase)` in 1D.
    pub fn sine(freq: f64, phase: f64) -> Self {
        Analytic::new(1, vec![(1.0, vec![Univariate::Sin { freq, phase }])]).expect("1d")
    }

    pub fn product(dim: usize, coeff: f64, factors: Vec<Univariate>) -> Result<Self> {
        Analytic::new(dim, vec![(coeff, factors)])
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.terms.iter_mut().for_each(|(a, _)| *a *= c);
        out
    }

    /// Sum of two functions of the same dimension.
    pub fn plus(&self, other: &Analytic) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(Analytic {
            dim: self.dim,
            terms,
            max_order: self.max_order.min(other.max_order),
        })
    }

    /// `−Δu` as another analytic function.
    pub fn neg_laplacian(&self) -> Analytic {
        let mut terms = Vec::new();
        for (c, f) in &self.terms {
            for i in 0..self.dim {
                let mut g = f.clone();
                g[i] = differentiate(&f[i], 2);
                terms.push((-c, g));
            }
        }
        Analytic {
            dim: self.dim,
            terms,
            max_order: self.max_order.saturating_sub(2),
        }
    }

    /// `∂u/∂x_i` as another analytic function.
    pub fn partial(&self, i: usize) -> Analytic {
        let terms = self
            .terms
            .iter()
            .map(|(c, f)| {
                let mut g = f.clone();
                g[i] = differentiate(&f[i], 1);
                (*c, g)
            })
            .collect();
        Analytic {
            dim: self.dim,
            terms,
            max_order: self.max_order.saturating_sub(1),
        }
    }
}

fn differentiate(f: &Univariate, k: usize) -> Univariate {
    match f {
        Univariate::Derivative { base, order } => Univariate::Derivative {
            base: base.clone(),
            order: order + k,
        },
        other => Univariate::Derivative {
            base: Box::new(other.clone()),
            order: k,
        },
    }
}

impl FunctionSample for Analytic {
    fn dim(&self) -> usize {
        self.dim
    }

    fn max_order(&self) -> usize {
        self.max_order
    }

    fn derivative(&self, x: &[f64], alpha: &[usize]) -> f64 {
        self.terms
            .iter()
            .map(|(c, f)| c * f.iter().zip(alpha).zip(x).map(|((fi, &a), &xi)| fi.derivative(a, xi)).product::<f64>())
            .sum()
    }
}

/// Linear combination `Σ c_i u_i` of borrowed functions.
pub struct Combination<'a> {
    dim: usize,
    terms: Vec<(f64, &'a dyn FunctionSample)>,
}

impl<'a> Combination<'a> {
    pub fn new(terms: Vec<(f64, &'a dyn FunctionSample)>) -> Result<Self> {
        let dim = terms.first().map(|t| t.1.dim()).ok_or(Error::InvalidParameters("empty combination".into()))?;
        if let Some((_, f)) = terms.iter().find(|t| t.1.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: f.dim() });
        }
        Ok(Combination { dim, terms })
    }

    /// `u − v`.
    pub fn difference(u: &'a dyn FunctionSample, v: &'a dyn FunctionSample) -> Result<Self> {
        Combination::new(vec![(1.0, u), (-1.0, v)])
    }
}

impl FunctionSample for Combination<'_> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn max_order(&self) -> usize {
        self.terms.iter().map(|t| t.1.max_order()).min().unwrap_or(0)
    }

    fn derivative(&self, x: &[f64], alpha: &[usize]) -> f64 {
        self.terms.iter().map(|(c, f)| c * f.derivative(x, alpha)).sum()
    }

    fn jet_unchecked(&self, x: &[f64], order: usize) -> Vec<f64> {
        let mut out = vec![0.0; JetLayout::get(self.dim, order).len()];
        for (c, f) in &self.terms {
            for (o, v) in out.iter_mut().zip(f.jet_unchecked(x, order)) {
                *o += c * v;
            }
        }
        out
    }
}

/// Wraps a closure `(x, α) -> ∂^α u(x)`.
pub struct FnSample<F> {
    dim: usize,
    max_order: usize,
    f: F,
}

impl<F> FnSample<F>
where
    F: Fn(&[f64], &[usize]) -> f64 + Send + Sync,
{
    pub fn new(dim: usize, max_order: usize, f: F) -> Self {
        FnSample { dim, max_order, f }
    }
}

impl<F> FunctionSample for FnSample<F>
where
    F: Fn(&[f64], &[usize]) -> f64 + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn max_order(&self) -> usize {
        self.max_order
    }

    fn derivative(&self, x: &[f64], alpha: &[usize]) -> f64 {
        (self.f)(x, alpha)
    }
}


/// `d^k/dt^k u(x + t τ)` at `t = 0`: `Σ_{|β|=k} k!/β! τ^β ∂^β u(x)`.
pub fn directional_derivative(u: &dyn FunctionSample, x: &[f64], tau: &[f64], k: usize) -> f64 {
    crate::jet::indices_of_order(u.dim(), k)
        .iter()
        .map(|b| factorial(k) / b.factorial() * b.monomial(tau) * u.derivative(x, b))
        .sum()
}

/// Which scalar field on a boundary face a [`FaceTrace`] restricts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceKind {
    /// `u|_Γ`.
    Value,
    /// `∂u/∂n|_Γ`.
    NormalDerivative,
}

/// Restriction of an ambient function to a straight face, parametrized by
/// arc length; derivatives are tangential.
pub struct FaceTrace<'a> {
    u: &'a dyn FunctionSample,
    frame: FaceFrame,
    kind: TraceKind,
}

impl<'a> FaceTrace<'a> {
    pub fn new(u: &'a dyn FunctionSample, frame: FaceFrame, kind: TraceKind) -> Self {
        FaceTrace { u, frame, kind }
    }

    pub fn frame(&self) -> &FaceFrame {
        &self.frame
    }
}

impl FunctionSample for FaceTrace<'_> {
    fn dim(&self) -> usize {
        1
    }

    fn max_order(&self) -> usize {
        let base = match self.kind {
            TraceKind::Value => self.u.max_order(),
            TraceKind::NormalDerivative => self.u.max_order().saturating_sub(1),
        };
        if self.frame.curved {
            0
        } else {
            base
        }
    }

    fn derivative(&self, t: &[f64], alpha: &[usize]) -> f64 {
        let x = self.frame.at(t[0]);
        let k = alpha[0];
        let tau = self.frame.tangent_at(&x).unwrap_or_default();
        match self.kind {
            TraceKind::Value => {
                if tau.is_empty() {
                    self.u.value(&x)
                } else {
                    directional_derivative(self.u, &x, &tau, k)
                }
            }
            TraceKind::NormalDerivative => {
                let n = self.frame.normal_at(&x);
                (0..self.u.dim())
                    .map(|i| {
                        let di = Partial { u: self.u, i };
                        let v = if tau.is_empty() {
                            di.value(&x)
                        } else {
                            directional_derivative(&di, &x, &tau, k)
                        };
                        n[i] * v
                    })
                    .sum()
            }
        }
    }
}

/// `∂u/∂x_i` of a borrowed function.
pub struct Partial<'a> {
    pub u: &'a dyn FunctionSample,
    pub i: usize,
}

impl FunctionSample for Partial<'_> {
    fn dim(&self) -> usize {
        self.u.dim()
    }

    fn max_order(&self) -> usize {
        self.u.max_order().saturating_sub(1)
    }

    fn derivative(&self, x: &[f64], alpha: &[usize]) -> f64 {
        let mut a = alpha.to_vec();
        a[self.i] += 1;
        self.u.derivative(x, &a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(f: &Univariate, k: usize, t: f64) -> f64 {
        let h = 1e-5;
        (f.derivative(k - 1, t + h) - f.derivative(k - 1, t - h)) / (2.0 * h)
    }

    #[test]
    fn univariate_derivatives_match_finite_differences() {
        let fs = [
            Univariate::Poly { coeffs: vec![1.0, -2.0, 0.5, 3.0] },
            Univariate::Sin { freq: 3.0, phase: 0.2 },
            Univariate::Exp { rate: -1.5 },
            Univariate::Bump { center: 0.5, radius: 0.4 },
        ];
        for f in &fs {
            for k in 1..=4 {
                for &t in &[0.3, 0.55, 0.71] {
                    let a = f.derivative(k, t);
                    let b = fd(f, k, t);
                    assert!((a - b).abs() <= 1e-5 * (1.0 + a.abs()), "{f:?} k={k} t={t}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn bump_vanishes_outside_support() {
        let b = Univariate::Bump { center: 0.5, radius: 0.4 };
        assert_eq!(b.derivative(0, 0.05), 0.0);
        assert_eq!(b.derivative(3, 0.95), 0.0);
        assert!((b.derivative(0, 0.5) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn neg_laplacian_of_squared_norm() {
        let u = Analytic::squared_norm(2);
        let f = u.neg_laplacian();
        assert!((f.value(&[0.3, -0.7]) + 4.0).abs() < 1e-14);
    }

    #[test]
    fn symbolic_derivative_agrees_with_direct() {
        let u = Analytic::product(2, 1.0, vec![Univariate::Sin { freq: 3.0, phase: 0.0 }, Univariate::Bump { center: 0.5, radius: 0.45 }]).unwrap();
        let ux = u.partial(0);
        let x = [0.37, 0.61];
        assert!((ux.value(&x) - u.derivative(&x, &[1, 0])).abs() < 1e-14);
        let f = u.neg_laplacian();
        let want = -(u.derivative(&x, &[2, 0]) + u.derivative(&x, &[0, 2]));
        assert!((f.value(&x) - want).abs() < 1e-12);
    }

    #[test]
    fn order_check() {
        let u = Analytic::sine(1.0, 0.0).with_max_order(2);
        assert!(u.eval(&[0.1], &[2]).is_ok());
        let err = u.eval(&[0.1], &[3]).unwrap_err();
        assert!(err.to_string().starts_with("jet order exceeded"));
    }
}
