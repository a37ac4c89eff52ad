//! Second-order forward differentiation in three variables.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Index of `(i, j)` in the packed upper triangle `xx, xy, xz, yy, yz, zz`.
pub const fn packed(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    match (i, j) {
        (0, 0) => 0,
        (0, 1) => 1,
        (0, 2) => 2,
        (1, 1) => 3,
        (1, 2) => 4,
        _ => 5,
    }
}

const PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

/// Value, gradient and (packed, symmetric) Hessian of a function of `(x, y, z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperDual {
    pub value: f64,
    pub grad: [f64; 3],
    pub hess: [f64; 6],
}

impl HyperDual {
    pub const fn constant(value: f64) -> Self {
        Self { value, grad: [0.0; 3], hess: [0.0; 6] }
    }

    /// The coordinate function `axis` evaluated at `value`.
    pub fn variable(axis: usize, value: f64) -> Self {
        let mut grad = [0.0; 3];
        grad[axis] = 1.0;
        Self { value, grad, hess: [0.0; 6] }
    }

    pub fn hessian(&self, i: usize, j: usize) -> f64 {
        self.hess[packed(i, j)]
    }

    /// Applies a scalar function given its value and first two derivatives at `self.value`.
    pub fn chain(self, f: f64, df: f64, d2f: f64) -> Self {
        let g = self.grad;
        let mut hess = [0.0; 6];
        for (h, ((i, j), own)) in hess.iter_mut().zip(PAIRS.iter().zip(self.hess)) {
            *h = df * own + d2f * g[*i] * g[*j];
        }
        Self { value: f, grad: g.map(|gi| df * gi), hess }
    }

    pub fn recip(self) -> Self {
        let r = 1.0 / self.value;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }

    pub fn sqrt(self) -> Self {
        let s = self.value.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.value))
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn exp(self) -> Self {
        let e = self.value.exp();
        self.chain(e, e, e)
    }

    pub fn ln(self) -> Self {
        let r = 1.0 / self.value;
        self.chain(self.value.ln(), r, -r * r)
    }

    /// `self^k` by repeated multiplication.
    pub fn powi(self, k: u32) -> Self {
        let mut acc = HyperDual::constant(1.0);
        for _ in 0..k {
            acc = acc * self;
        }
        acc
    }
}

impl Add for HyperDual {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut r = self;
        r.value += o.value;
        r.grad.iter_mut().zip(o.grad).for_each(|(a, b)| *a += b);
        r.hess.iter_mut().zip(o.hess).for_each(|(a, b)| *a += b);
        r
    }
}

impl Sub for HyperDual {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl Neg for HyperDual {
    type Output = Self;
    fn neg(self) -> Self {
        Self { value: -self.value, grad: self.grad.map(|g| -g), hess: self.hess.map(|h| -h) }
    }
}

impl Mul for HyperDual {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let (a, b) = (self, o);
        let grad = [0, 1, 2].map(|i| a.value * b.grad[i] + b.value * a.grad[i]);
        let mut hess = [0.0; 6];
        for (k, &(i, j)) in PAIRS.iter().enumerate() {
            hess[k] = a.value * b.hess[k]
                + b.value * a.hess[k]
                + a.grad[i] * b.grad[j]
                + a.grad[j] * b.grad[i];
        }
        Self { value: a.value * b.value, grad, hess }
    }
}

impl Div for HyperDual {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Self) -> Self {
        self * o.recip()
    }
}
