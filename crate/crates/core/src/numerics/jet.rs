use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use super::NumericsError;
use crate::expr::{self, Expr, ExprError, Func, ScalarField};

/// Largest number of independent variables a jet can carry.
pub const MAX_VARS: usize = 6;
const HESS_LEN: usize = MAX_VARS * (MAX_VARS + 1) / 2;

#[inline]
fn tri(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * MAX_VARS + j - i - i * i.saturating_sub(1) / 2
}

/// Truncated Taylor jet: value, gradient and (upper-triangle) Hessian.
#[derive(Clone, Copy, PartialEq)]
pub struct Jet {
    order: u8,
    nvars: u8,
    value: f64,
    grad: [f64; MAX_VARS],
    hess: [f64; HESS_LEN],
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.nvars();
        let mut d = f.debug_struct("Jet");
        d.field("order", &self.order).field("value", &self.value);
        if self.order >= 1 {
            d.field("grad", &&self.grad[..n]);
        }
        if self.order >= 2 {
            let h: Vec<Vec<f64>> = (0..n)
                .map(|i| (0..n).map(|j| self.hess(i, j)).collect())
                .collect();
            d.field("hess", &h);
        }
        d.finish()
    }
}

impl Jet {
    pub fn constant(c: f64, nvars: usize, order: u8) -> Self {
        assert!(nvars <= MAX_VARS && order <= 2, "jet shape out of range");
        Self {
            order,
            nvars: nvars as u8,
            value: c,
            grad: [0.0; MAX_VARS],
            hess: [0.0; HESS_LEN],
        }
    }

    /// The coordinate function `u^i` evaluated at `x`.
    pub fn variable(i: usize, x: f64, nvars: usize, order: u8) -> Self {
        let mut j = Self::constant(x, nvars, order);
        if order >= 1 {
            j.grad[i] = 1.0;
        }
        j
    }

    pub fn from_parts(value: f64, grad: &[f64], hess: Option<&[Vec<f64>]>) -> Self {
        let n = grad.len();
        let order = if hess.is_some() {
            2
        } else if n > 0 {
            1
        } else {
            0
        };
        let mut j = Self::constant(value, n, order);
        j.grad[..n].copy_from_slice(grad);
        if let Some(h) = hess {
            for a in 0..n {
                for b in a..n {
                    j.hess[tri(a, b)] = h[a][b];
                }
            }
        }
        j
    }

    pub fn order(&self) -> u8 {
        self.order
    }

    pub fn nvars(&self) -> usize {
        self.nvars as usize
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn grad(&self) -> &[f64] {
        &self.grad[..self.nvars()]
    }

    pub fn d(&self, i: usize) -> f64 {
        self.grad[i]
    }

    pub fn hess(&self, i: usize, j: usize) -> f64 {
        self.hess[tri(i, j)]
    }

    /// Jet of the partial derivative `∂_i` of this jet, one order lower.
    pub fn partial(&self, i: usize) -> Self {
        assert!(self.order >= 1, "partial of an order-0 jet");
        let mut out = Self::constant(self.grad[i], self.nvars(), self.order - 1);
        if self.order == 2 {
            for j in 0..self.nvars() {
                out.grad[j] = self.hess(i, j);
            }
        }
        out
    }

    /// Drops derivative slots above `order`.
    pub fn truncate(&self, order: u8) -> Self {
        let mut out = *self;
        out.order = order.min(self.order);
        if out.order < 2 {
            out.hess = [0.0; HESS_LEN];
        }
        if out.order < 1 {
            out.grad = [0.0; MAX_VARS];
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.grad.iter().all(|x| x.is_finite())
            && self.hess.iter().all(|x| x.is_finite())
    }

    fn meet(&self, other: &Self) -> (u8, u8) {
        debug_assert_eq!(
            self.nvars, other.nvars,
            "jets over different variable counts"
        );
        (self.order.min(other.order), self.nvars.max(other.nvars))
    }

    /// `f(self)` given `f`, `f'` and `f''` at the value.
    pub fn compose(&self, f0: f64, f1: f64, f2: f64) -> Self {
        let mut out = *self;
        out.value = f0;
        let n = self.nvars();
        if self.order >= 1 {
            for i in 0..n {
                out.grad[i] = f1 * self.grad[i];
            }
        }
        if self.order >= 2 {
            for i in 0..n {
                for j in i..n {
                    let k = tri(i, j);
                    out.hess[k] = f1 * self.hess[k] + f2 * self.grad[i] * self.grad[j];
                }
            }
        }
        out
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = *self;
        out.value *= c;
        out.grad.iter_mut().for_each(|x| *x *= c);
        out.hess.iter_mut().for_each(|x| *x *= c);
        out
    }

    pub fn recip(&self) -> Result<Self, NumericsError> {
        let x = self.value;
        if x == 0.0 {
            return Err(NumericsError::DivisionByZero);
        }
        let r = 1.0 / x;
        Ok(self.compose(r, -r * r, 2.0 * r * r * r))
    }

    pub fn div(&self, other: &Self) -> Result<Self, NumericsError> {
        Ok(*self * other.recip()?)
    }

    /// `self^c` for constant `c`.
    pub fn powf(&self, c: f64) -> Result<Self, NumericsError> {
        let x = self.value;
        if c == 0.0 {
            return Ok(self.compose(1.0, 0.0, 0.0));
        }
        if c == 1.0 {
            return Ok(*self);
        }
        if x < 0.0 && c.fract() != 0.0 {
            return Err(NumericsError::Domain(
                "negative base with non-integer exponent",
            ));
        }
        let p = |e: f64| {
            if e.fract() == 0.0 {
                x.powi(e as i32)
            } else {
                x.powf(e)
            }
        };
        let f1 = if self.order >= 1 { c * p(c - 1.0) } else { 0.0 };
        let f2 = if self.order >= 2 {
            c * (c - 1.0) * p(c - 2.0)
        } else {
            0.0
        };
        let out = self.compose(p(c), f1, f2);
        if out.is_finite() {
            Ok(out)
        } else {
            Err(NumericsError::Domain("power is singular at this point"))
        }
    }

    pub fn sqrt(&self) -> Result<Self, NumericsError> {
        self.apply(Func::Sqrt)
    }

    pub fn exp(&self) -> Self {
        let e = self.value.exp();
        self.compose(e, e, e)
    }

    pub fn ln(&self) -> Result<Self, NumericsError> {
        self.apply(Func::Ln)
    }

    /// Applies an elementary function through the chain rule.
    pub fn apply(&self, f: Func) -> Result<Self, NumericsError> {
        let x = self.value;
        let (f0, f1, f2) = match f {
            Func::Sin => (x.sin(), x.cos(), -x.sin()),
            Func::Cos => (x.cos(), -x.sin(), -x.cos()),
            Func::Tan => {
                let c = x.cos();
                if c == 0.0 {
                    return Err(NumericsError::Domain("tan at a pole"));
                }
                let t = x.tan();
                let s = 1.0 + t * t;
                (t, s, 2.0 * t * s)
            }
            Func::Sinh => (x.sinh(), x.cosh(), x.sinh()),
            Func::Cosh => (x.cosh(), x.sinh(), x.cosh()),
            Func::Tanh => {
                let t = x.tanh();
                let s = 1.0 - t * t;
                (t, s, -2.0 * t * s)
            }
            Func::Exp => {
                let e = x.exp();
                (e, e, e)
            }
            Func::Ln => {
                if x <= 0.0 {
                    return Err(NumericsError::Domain("logarithm of a non-positive value"));
                }
                (x.ln(), 1.0 / x, -1.0 / (x * x))
            }
            Func::Sqrt => {
                if x < 0.0 || (x == 0.0 && self.order >= 1) {
                    return Err(NumericsError::Domain("square root at or below zero"));
                }
                let s = x.sqrt();
                (s, 0.5 / s, -0.25 / (s * x))
            }
            Func::Abs => {
                if x == 0.0 && self.order >= 1 {
                    return Err(NumericsError::Domain("abs is not differentiable at zero"));
                }
                (x.abs(), x.signum(), 0.0)
            }
            Func::Sign => {
                if x == 0.0 {
                    return Err(NumericsError::Domain("sign is not differentiable at zero"));
                }
                (x.signum(), 0.0, 0.0)
            }
        };
        let out = self.compose(f0, f1, f2);
        if out.is_finite() {
            Ok(out)
        } else {
            Err(NumericsError::NonFinite("elementary function"))
        }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let (order, nvars) = self.meet(&o);
        let mut out = self;
        out.order = order;
        out.nvars = nvars;
        out.value += o.value;
        for k in 0..MAX_VARS {
            out.grad[k] += o.grad[k];
        }
        for k in 0..HESS_LEN {
            out.hess[k] += o.hess[k];
        }
        out.truncate(order)
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let (order, nvars) = self.meet(&o);
        let n = nvars as usize;
        let mut out = Jet::constant(self.value * o.value, n, order);
        if order >= 1 {
            for i in 0..n {
                out.grad[i] = self.value * o.grad[i] + o.value * self.grad[i];
            }
        }
        if order >= 2 {
            for i in 0..n {
                for j in i..n {
                    let k = tri(i, j);
                    out.hess[k] = self.value * o.hess[k]
                        + o.value * self.hess[k]
                        + self.grad[i] * o.grad[j]
                        + self.grad[j] * o.grad[i];
                }
            }
        }
        out
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, c: f64) -> Jet {
        self.value += c;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, c: f64) -> Jet {
        self.value -= c;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, c: f64) -> Jet {
        self.scale(c)
    }
}

/// Jet of `f` at `coords`, populated from exact symbolic partials.
pub fn jet_eval(f: &ScalarField, coords: &[f64], order: u8) -> Result<Jet, ExprError> {
    let n = f.chart().dim();
    let value = f.eval_coords(coords)?;
    let mut j = Jet::constant(value, n, order);
    if f.is_constant() {
        return Ok(j);
    }
    if order >= 1 {
        for i in 0..n {
            if f.depends_on(i) {
                j.grad[i] = f.eval_partial(&[i], coords)?;
            }
        }
    }
    if order >= 2 {
        for a in 0..n {
            if !f.depends_on(a) {
                continue;
            }
            for b in a..n {
                if f.depends_on(b) {
                    j.hess[tri(a, b)] = f.eval_partial(&[a, b], coords)?;
                }
            }
        }
    }
    Ok(j)
}

/// Forward-mode evaluation of a bare tree in jet arithmetic. Integral nodes
/// fall back to symbolic partials, since their derivatives are integrals.
pub fn forward_eval(
    e: &std::sync::Arc<Expr>,
    coords: &[f64],
    order: u8,
) -> Result<Jet, NumericsError> {
    let n = coords.len();
    let go = |x: &std::sync::Arc<Expr>| forward_eval(x, coords, order);
    Ok(match &**e {
        Expr::Num(c) => Jet::constant(*c, n, order),
        Expr::Coord(i) => Jet::variable(*i, coords[*i], n, order),
        Expr::Neg(a) => -go(a)?,
        Expr::Add(a, b) => go(a)? + go(b)?,
        Expr::Sub(a, b) => go(a)? - go(b)?,
        Expr::Mul(a, b) => go(a)? * go(b)?,
        Expr::Div(a, b) => go(a)?.div(&go(b)?)?,
        Expr::Pow(a, b) => {
            let base = go(a)?;
            if b.max_coord().is_none() {
                let c = expr::eval_expr(b, coords).map_err(|f| NumericsError::Domain(f.reason))?;
                base.powf(c)?
            } else {
                // a^b = exp(b ln a)
                (go(b)? * base.ln()?).exp()
            }
        }
        Expr::Call(f, a) => go(a)?.apply(*f)?,
        Expr::Integral(_) => {
            let value = expr::eval_expr(e, coords).map_err(|f| NumericsError::Domain(f.reason))?;
            let mut j = Jet::constant(value, n, order);
            let at = |idx: &[usize]| -> Result<f64, NumericsError> {
                let mut d = e.clone();
                for &i in idx {
                    d = expr::derivative(&d, i);
                }
                expr::eval_expr(&d, coords).map_err(|f| NumericsError::Domain(f.reason))
            };
            if order >= 1 {
                for i in 0..n {
                    j.grad[i] = at(&[i])?;
                }
            }
            if order >= 2 {
                for a in 0..n {
                    for b in a..n {
                        j.hess[tri(a, b)] = at(&[a, b])?;
                    }
                }
            }
            j
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Chart;
    use std::sync::Arc;

    #[test]
    fn triangle_indexing_is_a_bijection() {
        let mut seen = [false; HESS_LEN];
        for i in 0..MAX_VARS {
            for j in i..MAX_VARS {
                assert!(!seen[tri(i, j)]);
                seen[tri(i, j)] = true;
                assert_eq!(tri(i, j), tri(j, i));
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn product_and_reciprocal() {
        let a = Jet::from_parts(2.0, &[1.0, 0.0], None);
        let b = Jet::from_parts(3.0, &[0.0, 1.0], None);
        let p = a * b;
        assert_eq!(p.value(), 6.0);
        assert_eq!(p.grad(), [3.0, 2.0]);
        let r = a.recip().unwrap();
        assert_eq!(r.value(), 0.5);
        assert_eq!(r.grad(), [-0.25, 0.0]);
        assert!(Jet::constant(0.0, 2, 1).recip().is_err());
    }

    #[test]
    fn exp_second_order() {
        let x = Jet::variable(0, 0.0, 1, 2);
        let e = x.exp();
        assert_eq!((e.value(), e.d(0), e.hess(0, 0)), (1.0, 1.0, 1.0));
    }

    #[test]
    fn symbolic_jets() {
        let c = Arc::new(Chart::with_names(&["x1", "x2", "x3"], &["v", "y5"]).unwrap());
        let at = [0.0, 3.0, 0.0, 2.0, 0.0];
        let f = ScalarField::parse("x2*v", &c).unwrap();
        let j = jet_eval(&f, &at, 1).unwrap();
        assert_eq!((j.value(), j.d(1), j.d(3)), (6.0, 2.0, 3.0));
        let f = ScalarField::parse("v^2", &c).unwrap();
        assert_eq!(jet_eval(&f, &at, 2).unwrap().hess(3, 3), 2.0);
        let f = ScalarField::parse("5", &c).unwrap();
        let j = jet_eval(&f, &at, 2).unwrap();
        assert!(j.grad().iter().all(|&g| g == 0.0));
        assert!((0..5).all(|i| (0..5).all(|k| j.hess(i, k) == 0.0)));
    }

    #[test]
    fn partial_extraction() {
        let c = Arc::new(Chart::tangent(1).unwrap());
        let f = ScalarField::parse("x1^2*y1^3", &c).unwrap();
        let at = [2.0, 3.0];
        let j = jet_eval(&f, &at, 2).unwrap();
        let dy = j.partial(1);
        assert_eq!(dy.value(), 4.0 * 27.0);
        assert_eq!(dy.d(0), 4.0 * 27.0);
        assert_eq!(dy.d(1), 4.0 * 18.0);
    }
}
