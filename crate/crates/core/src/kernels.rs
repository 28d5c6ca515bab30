//! Radial kernels with exact derivative jets.
//!
//! Every kernel is `Φ(x, c) = φ(ε|x − c|)` for a unit profile `φ`. Jets are
//! produced by Taylor-mode differentiation of `ψ(t) = φ(√t)` composed with
//! `t = |z|²`: around `z`, `t(z + h) = |z|² + δ(h)` with `δ(h) = 2 z·h + |h|²`,
//! so `Φ(z + h) = Σ_j ψ^{(j)}(|z|²) δ(h)^j / j!` truncated at the requested
//! order. The derivatives `ψ^{(j)} = 2^{-j} (ρ⁻¹ d/dρ)^j φ` are kept in closed
//! form as `e^{-aρ}` times a Laurent polynomial in `ρ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::check_order;
use crate::jet::{factorial, JetLayout};

/// Highest jet order computed for the (infinitely smooth) Gaussian.
pub const GAUSSIAN_MAX_ORDER: usize = 12;

/// Kernel families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum KernelFamily {
    Gaussian,
    /// Matérn kernel of half-integer smoothness `nu` (1.5, 2.5, …).
    Matern { nu: f64 },
    /// Wendland's compactly supported `φ_{ℓ,k}` with `ℓ = k + 2`, positive
    /// definite for `n ≤ 3`.
    Wendland { smoothness: usize },
}

/// User-facing kernel configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    #[serde(flatten)]
    pub family: KernelFamily,
    pub shape: f64,
    /// Overrides the nominal smoothness `m̃` derived from the native space.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_tilde: Option<f64>,
}

/// `Σ c_e ρ^e` with integer (possibly negative) exponents.
#[derive(Clone, Debug, PartialEq)]
struct Laurent(Vec<(i32, f64)>);

impl Laurent {
    fn from_poly(coeffs: &[f64]) -> Self {
        Laurent(
            coeffs
                .iter()
                .enumerate()
                .filter(|(_, c)| **c != 0.0)
                .map(|(e, c)| (e as i32, *c))
                .collect(),
        )
    }

    /// `(L' − a L)/ρ`, i.e. `e^{aρ} ρ⁻¹ d/dρ (e^{-aρ} L)`.
    fn radial_step(&self, decay: f64) -> Self {
        let mut terms: Vec<(i32, f64)> = Vec::new();
        let mut add = |e: i32, c: f64| {
            if let Some(t) = terms.iter_mut().find(|t| t.0 == e) {
                t.1 += c;
            } else {
                terms.push((e, c));
            }
        };
        for &(e, c) in &self.0 {
            if e != 0 {
                add(e - 2, e as f64 * c);
            }
            if decay != 0.0 {
                add(e - 1, -decay * c);
            }
        }
        terms.retain(|t| t.1 != 0.0);
        terms.sort_by_key(|t| t.0);
        Laurent(terms)
    }

    fn is_singular_at_zero(&self) -> bool {
        self.0.iter().any(|t| t.0 < 0)
    }

    fn eval(&self, rho: f64) -> f64 {
        self.0.iter().map(|&(e, c)| c * rho.powi(e)).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Profile {
    Gaussian,
    /// `F_j(ρ) = scale · e^{-decay ρ} · L_j(ρ)` on `ρ < support`.
    Radial {
        decay: f64,
        support: Option<f64>,
        scale: f64,
        derivs: Vec<Laurent>,
    },
}

/// A radial kernel with a fixed shape parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    family: KernelFamily,
    shape: f64,
    m_tilde: Option<f64>,
    profile: Profile,
    max_order: usize,
}

impl Kernel {
    pub fn new(family: KernelFamily, shape: f64) -> Result<Self> {
        if !(shape > 0.0) || !shape.is_finite() {
            return Err(Error::InvalidParameters(format!("shape parameter {shape} must be positive")));
        }
        let (profile, max_order) = match family {
            KernelFamily::Gaussian => (Profile::Gaussian, GAUSSIAN_MAX_ORDER),
            KernelFamily::Matern { nu } => {
                let p2 = 2.0 * nu - 1.0;
                if p2 < 0.0 || p2.fract() != 0.0 || p2 % 2.0 != 0.0 || nu > 12.5 {
                    return Err(Error::InvalidParameters(format!(
                        "matern smoothness {nu} must be a half-integer in [0.5, 12.5]"
                    )));
                }
                let p = (nu - 0.5).round() as usize;
                // e^{-ρ} Σ_i (p+i)!/(i!(p−i)!) (2ρ)^{p−i}, normalized by p!/(2p)!
                let mut coeffs = vec![0.0; p + 1];
                for i in 0..=p {
                    coeffs[p - i] = factorial(p + i) / (factorial(i) * factorial(p - i)) * 2f64.powi((p - i) as i32);
                }
                let scale = factorial(p) / factorial(2 * p);
                (radial_profile(&coeffs, 1.0, None, scale, 2 * p), 2 * p)
            }
            KernelFamily::Wendland { smoothness: k } => {
                let coeffs = wendland_coefficients(k)?;
                (radial_profile(&coeffs, 0.0, Some(1.0), 1.0, 2 * k), 2 * k)
            }
        };
        Ok(Kernel {
            family,
            shape,
            m_tilde: None,
            profile,
            max_order,
        })
    }

    pub fn from_config(cfg: &KernelConfig) -> Result<Self> {
        let mut k = Kernel::new(cfg.family.clone(), cfg.shape)?;
        k.m_tilde = cfg.m_tilde;
        Ok(k)
    }

    pub fn gaussian(shape: f64) -> Self {
        Kernel::new(KernelFamily::Gaussian, shape).expect("valid gaussian")
    }

    pub fn matern(nu: f64, shape: f64) -> Result<Self> {
        Kernel::new(KernelFamily::Matern { nu }, shape)
    }

    pub fn wendland(smoothness: usize, shape: f64) -> Result<Self> {
        Kernel::new(KernelFamily::Wendland { smoothness }, shape)
    }

    pub fn family(&self) -> &KernelFamily {
        &self.family
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    /// Highest total derivative order for which jets are continuous.
    pub fn max_jet_order(&self) -> usize {
        self.max_order
    }

    /// Order `τ` of the Sobolev space `H^τ(R^n)` norm-equivalent to the
    /// native space (infinite for the Gaussian).
    pub fn native_order(&self, n: usize) -> f64 {
        match self.family {
            KernelFamily::Gaussian => f64::INFINITY,
            KernelFamily::Matern { nu } => nu + n as f64 / 2.0,
            KernelFamily::Wendland { smoothness } => n as f64 / 2.0 + smoothness as f64 + 0.5,
        }
    }

    /// Nominal `m̃` with `Ũ = H^{m̃+2}`: the configured override, otherwise
    /// `native_order − 2`.
    pub fn m_tilde(&self, n: usize) -> f64 {
        self.m_tilde.unwrap_or_else(|| self.native_order(n) - 2.0)
    }

    pub fn config(&self) -> KernelConfig {
        KernelConfig {
            family: self.family.clone(),
            shape: self.shape,
            m_tilde: self.m_tilde,
        }
    }

    /// `ψ^{(j)}(ρ²)` for `j = 0..=count-1` at unit shape. At `ρ = 0` only
    /// orders `j ≤ max_needed` are evaluated; higher ones multiply vanishing
    /// Taylor coefficients and are returned as zero.
    fn psi_derivatives(&self, rho: f64, count: usize, max_needed_at_zero: usize) -> Vec<f64> {
        match &self.profile {
            Profile::Gaussian => {
                let e = (-rho * rho).exp();
                (0..count).map(|j| if j % 2 == 0 { e } else { -e }).collect()
            }
            Profile::Radial {
                decay,
                support,
                scale,
                derivs,
            } => {
                if support.is_some_and(|s| rho >= s) {
                    return vec![0.0; count];
                }
                let ex = scale * (-decay * rho).exp();
                (0..count)
                    .map(|j| {
                        let l = &derivs[j];
                        if rho == 0.0 && (j > max_needed_at_zero || l.is_singular_at_zero()) {
                            return 0.0;
                        }
                        ex * l.eval(rho) / 2f64.powi(j as i32)
                    })
                    .collect()
            }
        }
    }

    /// All derivatives `∂^α_x Φ(x, c)` with `|α| ≤ max_order`, in graded
    /// lexicographic order.
    pub fn jet(&self, x: &[f64], c: &[f64], max_order: usize) -> Result<Vec<f64>> {
        check_order(max_order, self.max_order)?;
        if x.len() != c.len() {
            return Err(Error::DimensionMismatch {
                expected: c.len(),
                got: x.len(),
            });
        }
        Ok(self.jet_unchecked(x, c, max_order))
    }

    pub(crate) fn jet_unchecked(&self, x: &[f64], c: &[f64], max_order: usize) -> Vec<f64> {
        let dim = x.len();
        let layout = JetLayout::get(dim, max_order);
        let eps = self.shape;
        let z: Vec<f64> = x.iter().zip(c).map(|(a, b)| eps * (a - b)).collect();
        let t0: f64 = z.iter().map(|v| v * v).sum();
        let rho = t0.sqrt();
        let k = max_order;
        let psi = self.psi_derivatives(rho, k + 1, k / 2);

        // δ(h) = 2 z·h + |h|²
        let mut delta = vec![0.0; layout.len()];
        for i in (0..dim).filter(|_| k >= 1) {
            let e = layout.position(&unit(dim, i)).expect("first-order index");
            delta[e] = 2.0 * z[i];
            if k >= 2 {
                let e2 = layout.position(&scaled_unit(dim, i, 2)).expect("second-order index");
                delta[e2] = 1.0;
            }
        }
        let mut acc = vec![0.0; layout.len()];
        acc[0] = psi[k] / factorial(k);
        let mut tmp = vec![0.0; layout.len()];
        for j in (0..k).rev() {
            layout.mul(&acc, &delta, &mut tmp);
            std::mem::swap(&mut acc, &mut tmp);
            acc[0] += psi[j] / factorial(j);
        }
        for (v, a) in acc.iter_mut().zip(&layout.indices) {
            *v *= a.factorial() * eps.powi(a.order() as i32);
        }
        acc
    }

    /// `Φ(x, c)`.
    pub fn value(&self, x: &[f64], c: &[f64]) -> f64 {
        self.jet_unchecked(x, c, 0)[0]
    }
}

fn unit(dim: usize, i: usize) -> Vec<usize> {
    scaled_unit(dim, i, 1)
}

fn scaled_unit(dim: usize, i: usize, k: usize) -> Vec<usize> {
    let mut a = vec![0; dim];
    a[i] = k;
    a
}

fn radial_profile(coeffs: &[f64], decay: f64, support: Option<f64>, scale: f64, max_order: usize) -> Profile {
    let mut derivs = vec![Laurent::from_poly(coeffs)];
    // one extra derivative beyond the supported order, for jets at the cap
    for _ in 0..max_order.max(1) + 1 {
        let next = derivs.last().expect("nonempty").radial_step(decay);
        derivs.push(next);
    }
    Profile::Radial {
        decay,
        support,
        scale,
        derivs,
    }
}

/// Monomial coefficients of `φ_{k+2,k}(ρ)` on `[0, 1]`, scaled to `φ(0) = 1`.
fn wendland_coefficients(k: usize) -> Result<Vec<f64>> {
    // (1−ρ)^{e} · p(ρ)
    let (e, p): (usize, Vec<f64>) = match k {
        0 => (2, vec![1.0]),
        1 => (4, vec![1.0, 4.0]),
        2 => (6, vec![3.0, 18.0, 35.0]),
        3 => (8, vec![1.0, 8.0, 25.0, 32.0]),
        _ => {
            return Err(Error::InvalidParameters(format!(
                "wendland smoothness {k} not supported (0..=3)"
            )))
        }
    };
    let mut base = vec![1.0];
    for _ in 0..e {
        let mut next = vec![0.0; base.len() + 1];
        for (i, b) in base.iter().enumerate() {
            next[i] += b;
            next[i + 1] -= b;
        }
        base = next;
    }
    let mut out = vec![0.0; base.len() + p.len() - 1];
    for (i, b) in base.iter().enumerate() {
        for (j, q) in p.iter().enumerate() {
            out[i + j] += b * q;
        }
    }
    let c0 = out[0];
    // integer arithmetic above is exact; normalize last
    Ok(out.iter().map(|v| v / c0).collect())
}

/// Closed-form Gaussian jet `∂^α exp(−ε²|x−c|²) = Π_i (−ε)^{α_i} H_{α_i}(ε z_i) e^{−ε² z_i²}`
/// with physicists' Hermite polynomials; an independent route to
/// [`Kernel::jet`] for the Gaussian family.
pub fn gaussian_jet_closed_form(shape: f64, x: &[f64], c: &[f64], max_order: usize) -> Vec<f64> {
    let layout = JetLayout::get(x.len(), max_order);
    layout
        .indices
        .iter()
        .map(|a| {
            a.iter()
                .enumerate()
                .map(|(i, &k)| {
                    let u = shape * (x[i] - c[i]);
                    (-shape).powi(k as i32) * hermite(k, u) * (-u * u).exp()
                })
                .product()
        })
        .collect()
}

fn hermite(n: usize, x: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, 2.0 * x);
    if n == 0 {
        return h0;
    }
    for k in 1..n {
        let h2 = 2.0 * x * h1 - 2.0 * k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_at_center() {
        let k = Kernel::gaussian(1.0);
        let j = k.jet(&[0.3], &[0.3], 2).unwrap();
        assert!((j[0] - 1.0).abs() < 1e-15);
        assert!(j[1].abs() < 1e-15);
        assert!((j[2] + 2.0).abs() < 1e-14);
    }

    #[test]
    fn gaussian_matches_closed_form() {
        let k = Kernel::gaussian(1.7);
        let x = [0.2, -0.4];
        let c = [0.5, 0.1];
        let a = k.jet(&x, &c, 6).unwrap();
        let b = gaussian_jet_closed_form(1.7, &x, &c, 6);
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() <= 1e-12 * (1.0 + v.abs()), "{u} vs {v}");
        }
    }

    #[test]
    fn matern_profiles() {
        let m32 = Kernel::matern(1.5, 1.0).unwrap();
        let r: f64 = 0.7;
        assert!((m32.value(&[r], &[0.0]) - (1.0 + r) * (-r).exp()).abs() < 1e-15);
        let m52 = Kernel::matern(2.5, 1.0).unwrap();
        assert!((m52.value(&[r], &[0.0]) - (1.0 + r + r * r / 3.0) * (-r).exp()).abs() < 1e-15);
        assert_eq!(m52.max_jet_order(), 4);
    }

    #[test]
    fn matern_odd_derivatives_at_center_are_zero() {
        let k = Kernel::matern(4.5, 2.0).unwrap();
        let j = k.jet(&[0.1, 0.2], &[0.1, 0.2], 8).unwrap();
        assert!(j.iter().all(|v| v.is_finite()));
        let l = JetLayout::get(2, 8);
        for (v, a) in j.iter().zip(&l.indices) {
            if a.order() % 2 == 1 {
                assert_eq!(*v, 0.0);
            }
        }
    }

    #[test]
    fn wendland_profile_and_support() {
        let k = Kernel::wendland(1, 1.0).unwrap();
        let r: f64 = 0.4;
        let want = (1.0 - r).powi(4) * (4.0 * r + 1.0);
        assert!((k.value(&[r], &[0.0]) - want).abs() < 1e-14);
        assert_eq!(k.value(&[1.2], &[0.0]), 0.0);
    }

    #[test]
    fn unsupported_order_is_an_error() {
        let k = Kernel::matern(2.5, 1.0).unwrap();
        let err = k.jet(&[0.0], &[0.1], 5).unwrap_err();
        assert!(err.to_string().starts_with("jet order exceeded"));
    }

    #[test]
    fn invalid_parameters() {
        assert!(Kernel::new(KernelFamily::Gaussian, 0.0).is_err());
        assert!(Kernel::matern(2.0, 1.0).is_err());
        assert!(Kernel::wendland(7, 1.0).is_err());
    }
}
