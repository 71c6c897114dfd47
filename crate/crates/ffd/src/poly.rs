//! Scalar shadows of the transfer recursions.
//!
//! Products like A(u)A(-u) collapse to scalars, and those scalars obey closed
//! recursions in w = u^2 with coefficients built from cos^2 / sin^2 of the
//! gate angles.  The final polynomial P_M(w) carries the whole single-particle
//! spectrum: its roots are w_k = -u_k^2.  Because every coefficient of the A
//! and B/C chains is nonnegative (D stays nonpositive), the recursion never
//! cancels and plain f64 tracks it to a few ulps per step; a double-double
//! variant is available for long chains.

use crate::circuit::{CircuitSpec, Family};
use crate::dd::Dd;

/// Minimal ring interface shared by f64 and [`Dd`].
pub trait Real: Copy {
    const ZERO: Self;
    const ONE: Self;
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
    fn add(self, o: Self) -> Self;
    fn sub(self, o: Self) -> Self;
    fn mul(self, o: Self) -> Self;
    fn neg(self) -> Self;
}

impl Real for f64 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn sub(self, o: Self) -> Self {
        self - o
    }
    fn mul(self, o: Self) -> Self {
        self * o
    }
    fn neg(self) -> Self {
        -self
    }
}

impl Real for Dd {
    const ZERO: Self = Dd::ZERO;
    const ONE: Self = Dd::ONE;
    fn from_f64(v: f64) -> Self {
        Dd::from_f64(v)
    }
    fn to_f64(self) -> f64 {
        Dd::to_f64(self)
    }
    fn add(self, o: Self) -> Self {
        Dd::add(self, o)
    }
    fn sub(self, o: Self) -> Self {
        Dd::sub(self, o)
    }
    fn mul(self, o: Self) -> Self {
        Dd::mul(self, o)
    }
    fn neg(self) -> Self {
        Dd::neg(self)
    }
}

/// Polynomial in w, coefficients in ascending order.
#[derive(Debug, Clone)]
pub struct Poly<T> {
    pub coeffs: Vec<T>,
}

impl<T: Real> Poly<T> {
    pub fn constant(v: T) -> Self {
        let mut p = Poly { coeffs: vec![v] };
        p.trim();
        p
    }

    pub fn w() -> Self {
        Poly {
            coeffs: vec![T::ZERO, T::ONE],
        }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeff(&self, k: usize) -> T {
        self.coeffs.get(k).copied().unwrap_or(T::ZERO)
    }

    pub fn lead(&self) -> T {
        self.coeffs.last().copied().unwrap_or(T::ZERO)
    }

    fn trim(&mut self) {
        while self.coeffs.len() > 1 && self.coeffs.last().unwrap().to_f64() == 0.0 {
            self.coeffs.pop();
        }
        if self.coeffs.is_empty() {
            self.coeffs.push(T::ZERO);
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.coeffs.len().max(o.coeffs.len());
        let mut coeffs = Vec::with_capacity(n);
        for k in 0..n {
            coeffs.push(self.coeff(k).add(o.coeff(k)));
        }
        let mut p = Poly { coeffs };
        p.trim();
        p
    }

    pub fn scaled(&self, f: T) -> Self {
        let mut p = Poly {
            coeffs: self.coeffs.iter().map(|c| c.mul(f)).collect(),
        };
        p.trim();
        p
    }

    /// Multiply by w.
    pub fn shifted(&self) -> Self {
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(T::ZERO);
        coeffs.extend_from_slice(&self.coeffs);
        let mut p = Poly { coeffs };
        p.trim();
        p
    }

    /// Multiply by (c0 + c1 w).
    pub fn linear_times(&self, c0: T, c1: T) -> Self {
        self.scaled(c0).add(&self.shifted().scaled(c1))
    }

    pub fn eval(&self, w: T) -> T {
        let mut acc = T::ZERO;
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(w).add(*c);
        }
        acc
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.to_f64()).collect()
    }
}

/// Scalar counterparts of the four operator sequences, taken to the last
/// milestone M; `a_prev` is the A-polynomial one milestone earlier, which
/// the mode normalizations need.
#[derive(Debug, Clone)]
pub struct ScalarChain<T> {
    pub a: Poly<T>,
    pub a_prev: Poly<T>,
    pub b: Poly<T>,
    pub c: Poly<T>,
    pub d: Poly<T>,
}

/// Number of single-particle modes for a chain of M gates.
pub fn mode_count(m: usize) -> usize {
    (m + 2) / 3
}

/// Run the scalar recursion for the circuit's family and angles.
pub fn scalar_chain<T: Real>(spec: &CircuitSpec) -> ScalarChain<T> {
    let sq = |v: f64| {
        let t = T::from_f64(v);
        t.mul(t)
    };
    let mut a = Poly::constant(T::ONE);
    let mut b = Poly::<T>::w();
    let mut c = Poly::<T>::w();
    let mut d = Poly::constant(T::ONE.neg());
    let mut a_prev = a.clone();

    let stride = spec.family().stride();
    let mut m = stride;
    while m <= spec.m() {
        let mi = m as isize;
        let (x0, y0) = (sq(spec.x(mi)), sq(spec.y(mi)));
        let (na, nb, nc, nd) = match spec.family() {
            Family::I => (
                a.scaled(x0).add(&b.scaled(y0)),
                c.clone(),
                a.shifted(),
                d.clone(),
            ),
            Family::II => {
                let (x1, y1) = (sq(spec.x(mi - 1)), sq(spec.y(mi - 1)));
                let na = a
                    .scaled(x1.mul(x0))
                    .add(&b.scaled(y1))
                    .add(&c.scaled(x1.mul(y0)));
                let nb = a.shifted();
                let nc = a
                    .scaled(x1)
                    .add(&b.scaled(x0.mul(y1)))
                    .add(&d.scaled(y0.mul(y1).neg()))
                    .shifted();
                let nd = a.scaled(x0).add(&c.scaled(y0)).scaled(T::ONE.neg());
                (na, nb, nc, nd)
            }
            Family::III => {
                let (x1, y1) = (sq(spec.x(mi - 1)), sq(spec.y(mi - 1)));
                let (x2, y2) = (sq(spec.x(mi - 2)), sq(spec.y(mi - 2)));
                let na = a
                    .linear_times(x0, y0)
                    .scaled(x2.mul(x1))
                    .add(&b.scaled(y2))
                    .add(&c.scaled(x2.mul(y1)));
                let nb = a
                    .shifted()
                    .scaled(x2)
                    .add(&b.linear_times(y0, x0).scaled(y2.mul(x1)))
                    .add(&d.shifted().scaled(y1.mul(y2).neg()));
                let nc = a
                    .shifted()
                    .scaled(x2.mul(x1))
                    .add(&b.scaled(y2).add(&c.scaled(x2.mul(y1))).linear_times(y0, x0));
                let nd = a
                    .scaled(x2.neg())
                    .add(&d.scaled(y1.mul(y2)))
                    .linear_times(x0, y0)
                    .add(&b.scaled(y2.mul(x1).neg()));
                (na, nb, nc, nd)
            }
        };
        a_prev = a;
        a = na;
        b = nb;
        c = nc;
        d = nd;
        m += stride;
    }

    ScalarChain {
        a,
        a_prev,
        b,
        c,
        d,
    }
}
