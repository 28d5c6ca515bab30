//! Multi-indices and truncated Taylor arithmetic.
//!
//! A jet of a function at a point is the vector of all partial derivatives
//! `∂^α u(x)` with `|α| ≤ order`, stored in graded lexicographic order:
//! ascending total degree, and within one degree descending in the first
//! coordinate, e.g. `(0,0), (1,0), (0,1), (2,0), (1,1), (0,2)`.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

/// A multi-index `α = (α_1, …, α_n)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(pub Vec<usize>);

impl MultiIndex {
    pub fn zero(dim: usize) -> Self {
        MultiIndex(vec![0; dim])
    }

    /// The unit index `e_i` in `dim` dimensions.
    pub fn unit(dim: usize, i: usize) -> Self {
        let mut a = vec![0; dim];
        a[i] = 1;
        MultiIndex(a)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Total order `|α|`.
    pub fn order(&self) -> usize {
        self.0.iter().sum()
    }

    /// `α! = Π α_i!`.
    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&a| factorial(a)).product()
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `x^α` for a point `x`.
    pub fn monomial(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .map(|(&a, &xi)| xi.powi(a as i32))
            .product()
    }
}

impl std::ops::Deref for MultiIndex {
    type Target = [usize];
    fn deref(&self) -> &[usize] {
        &self.0
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// All multi-indices of exactly total order `order` in `dim` dimensions,
/// descending in the first coordinate.
pub fn indices_of_order(dim: usize, order: usize) -> Vec<MultiIndex> {
    fn rec(dim: usize, left: usize, prefix: &mut Vec<usize>, out: &mut Vec<MultiIndex>) {
        if prefix.len() + 1 == dim {
            prefix.push(left);
            out.push(MultiIndex(prefix.clone()));
            prefix.pop();
            return;
        }
        for a in (0..=left).rev() {
            prefix.push(a);
            rec(dim, left - a, prefix, out);
            prefix.pop();
        }
    }
    if dim == 0 {
        return if order == 0 { vec![MultiIndex(vec![])] } else { vec![] };
    }
    let mut out = Vec::new();
    rec(dim, order, &mut Vec::with_capacity(dim), &mut out);
    out
}

/// All multi-indices with `|α| ≤ order`, graded lexicographic.
pub fn indices_up_to(dim: usize, order: usize) -> Vec<MultiIndex> {
    (0..=order).flat_map(|k| indices_of_order(dim, k)).collect()
}

/// `#{α : |α| ≤ order}` in `dim` dimensions.
pub fn count_up_to(dim: usize, order: usize) -> usize {
    binomial(dim + order, order).round() as usize
}

/// Index bookkeeping for jets of a fixed dimension and order.
#[derive(Debug)]
pub struct JetLayout {
    pub dim: usize,
    pub order: usize,
    pub indices: Vec<MultiIndex>,
    lookup: HashMap<MultiIndex, usize>,
    /// Triples `(i, j, k)` with `indices[i] + indices[j] == indices[k]`.
    products: Vec<(u32, u32, u32)>,
}

impl JetLayout {
    fn build(dim: usize, order: usize) -> Self {
        let indices = indices_up_to(dim, order);
        let lookup: HashMap<_, _> = indices
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i))
            .collect();
        let mut products = Vec::new();
        for (i, a) in indices.iter().enumerate() {
            for (j, b) in indices.iter().enumerate() {
                if a.order() + b.order() <= order {
                    let k = lookup[&a.add(b)];
                    products.push((i as u32, j as u32, k as u32));
                }
            }
        }
        JetLayout {
            dim,
            order,
            indices,
            lookup,
            products,
        }
    }

    /// Shared layout for `(dim, order)`; layouts are built once and leaked.
    pub fn get(dim: usize, order: usize) -> &'static JetLayout {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), &'static JetLayout>>> =
            OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("jet layout cache poisoned");
        guard
            .entry((dim, order))
            .or_insert_with(|| Box::leak(Box::new(JetLayout::build(dim, order))))
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn position(&self, alpha: &[usize]) -> Option<usize> {
        self.lookup.get(&MultiIndex(alpha.to_vec())).copied()
    }

    /// Product of two truncated Taylor polynomials in this layout.
    pub fn mul(&self, a: &[f64], b: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for &(i, j, k) in &self.products {
            out[k as usize] += a[i as usize] * b[j as usize];
        }
    }

    /// Converts Taylor coefficients `c_α` into derivatives `α! c_α` in place.
    pub fn coefficients_to_derivatives(&self, c: &mut [f64]) {
        for (v, a) in c.iter_mut().zip(&self.indices) {
            *v *= a.factorial();
        }
    }
}

/// Truncated univariate Taylor series `Σ c_k h^k`, used for derivatives of
/// composite scalar functions.
#[derive(Clone, Debug, PartialEq)]
pub struct Series(pub Vec<f64>);

impl Series {
    pub fn constant(c: f64, len: usize) -> Self {
        let mut v = vec![0.0; len];
        v[0] = c;
        Series(v)
    }

    /// The series of `a + b·h`.
    pub fn linear(a: f64, b: f64, len: usize) -> Self {
        let mut v = vec![0.0; len];
        v[0] = a;
        if len > 1 {
            v[1] = b;
        }
        Series(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mul(&self, other: &Series) -> Series {
        let n = self.len();
        let mut out = vec![0.0; n];
        for i in 0..n {
            for j in 0..n - i {
                out[i + j] += self.0[i] * other.0[j];
            }
        }
        Series(out)
    }

    pub fn scale(&self, s: f64) -> Series {
        Series(self.0.iter().map(|v| v * s).collect())
    }

    pub fn add_scalar(&self, s: f64) -> Series {
        let mut v = self.0.clone();
        v[0] += s;
        Series(v)
    }

    pub fn recip(&self) -> Series {
        let n = self.len();
        let mut out = vec![0.0; n];
        out[0] = 1.0 / self.0[0];
        for k in 1..n {
            let s: f64 = (1..=k).map(|j| self.0[j] * out[k - j]).sum();
            out[k] = -s / self.0[0];
        }
        Series(out)
    }

    pub fn exp(&self) -> Series {
        let n = self.len();
        let mut out = vec![0.0; n];
        out[0] = self.0[0].exp();
        // y' = a' y  ⇒  k y_k = Σ_{j=1..k} j a_j y_{k-j}
        for k in 1..n {
            let s: f64 = (1..=k).map(|j| j as f64 * self.0[j] * out[k - j]).sum();
            out[k] = s / k as f64;
        }
        Series(out)
    }

    /// k-th derivative at the expansion point.
    pub fn derivative(&self, k: usize) -> f64 {
        self.0.get(k).copied().unwrap_or(0.0) * factorial(k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_lex_order_2d() {
        let idx = indices_up_to(2, 2);
        let want = [[0, 0], [1, 0], [0, 1], [2, 0], [1, 1], [0, 2]];
        assert_eq!(idx.len(), want.len());
        for (a, w) in idx.iter().zip(want) {
            assert_eq!(a.0, w.to_vec());
        }
    }

    #[test]
    fn counts_match_binomial() {
        for dim in 1..=3 {
            for order in 0..=6 {
                assert_eq!(indices_up_to(dim, order).len(), count_up_to(dim, order));
            }
        }
    }

    #[test]
    fn layout_product_matches_polynomial_multiplication() {
        // (1 + x + y)^2 = 1 + 2x + 2y + x^2 + 2xy + y^2
        let l = JetLayout::get(2, 2);
        let a = [1.0, 1.0, 1.0, 0.0, 0.0, 0.0];
        let mut out = vec![0.0; 6];
        l.mul(&a, &a, &mut out);
        assert_eq!(out, vec![1.0, 2.0, 2.0, 1.0, 2.0, 1.0]);
    }

    #[test]
    fn series_exp_of_linear() {
        // exp(2h) = Σ 2^k h^k / k!
        let s = Series::linear(0.0, 2.0, 6).exp();
        for k in 0..6 {
            assert!((s.derivative(k) - 2f64.powi(k as i32)).abs() < 1e-12);
        }
    }

    #[test]
    fn series_recip() {
        // 1/(1 - h) = Σ h^k
        let s = Series::linear(1.0, -1.0, 5).recip();
        assert!(s.0.iter().all(|&c| (c - 1.0).abs() < 1e-15));
    }
}
