//! Light simplification: constant folding and a handful of unit/zero
//! identities. The smart constructors here are also what the differentiator
//! builds with, which keeps derivative trees from filling up with `0*...`.

use std::sync::Arc;

use super::{eval, Expr, Func, Integral};

fn finite(c: f64) -> Option<Arc<Expr>> {
    c.is_finite().then(|| Expr::num(c))
}

pub fn neg(a: Arc<Expr>) -> Arc<Expr> {
    match &*a {
        Expr::Num(c) => Expr::num(-c),
        Expr::Neg(inner) => inner.clone(),
        _ => Arc::new(Expr::Neg(a)),
    }
}

pub fn add(a: Arc<Expr>, b: Arc<Expr>) -> Arc<Expr> {
    match (a.as_num(), b.as_num()) {
        (Some(x), Some(y)) => finite(x + y).unwrap_or_else(|| Arc::new(Expr::Add(a, b))),
        (Some(x), _) if x == 0.0 => b,
        (_, Some(y)) if y == 0.0 => a,
        _ => Arc::new(Expr::Add(a, b)),
    }
}

pub fn sub(a: Arc<Expr>, b: Arc<Expr>) -> Arc<Expr> {
    match (a.as_num(), b.as_num()) {
        (Some(x), Some(y)) => finite(x - y).unwrap_or_else(|| Arc::new(Expr::Sub(a, b))),
        (Some(x), _) if x == 0.0 => neg(b),
        (_, Some(y)) if y == 0.0 => a,
        _ => Arc::new(Expr::Sub(a, b)),
    }
}

pub fn mul(a: Arc<Expr>, b: Arc<Expr>) -> Arc<Expr> {
    match (a.as_num(), b.as_num()) {
        (Some(x), Some(y)) => finite(x * y).unwrap_or_else(|| Arc::new(Expr::Mul(a, b))),
        (Some(x), _) if x == 0.0 => Expr::num(0.0),
        (_, Some(y)) if y == 0.0 => Expr::num(0.0),
        (Some(x), _) if x == 1.0 => b,
        (_, Some(y)) if y == 1.0 => a,
        (Some(x), _) if x == -1.0 => neg(b),
        (_, Some(y)) if y == -1.0 => neg(a),
        _ => Arc::new(Expr::Mul(a, b)),
    }
}

pub fn div(a: Arc<Expr>, b: Arc<Expr>) -> Arc<Expr> {
    match (a.as_num(), b.as_num()) {
        (Some(x), Some(y)) if y != 0.0 => {
            finite(x / y).unwrap_or_else(|| Arc::new(Expr::Div(a, b)))
        }
        (Some(x), _) if x == 0.0 && b.as_num() != Some(0.0) => Expr::num(0.0),
        (_, Some(y)) if y == 1.0 => a,
        (_, Some(y)) if y == -1.0 => neg(a),
        _ => Arc::new(Expr::Div(a, b)),
    }
}

pub fn pow(a: Arc<Expr>, b: Arc<Expr>) -> Arc<Expr> {
    match (a.as_num(), b.as_num()) {
        (_, Some(y)) if y == 1.0 => a,
        (_, Some(y)) if y == 0.0 => Expr::num(1.0),
        (Some(_), Some(_)) => {
            let folded = eval::eval(&Expr::Pow(a.clone(), b.clone()), &[]).ok();
            folded
                .and_then(finite)
                .unwrap_or_else(|| Arc::new(Expr::Pow(a, b)))
        }
        _ => Arc::new(Expr::Pow(a, b)),
    }
}

pub fn call(f: Func, a: Arc<Expr>) -> Arc<Expr> {
    let node = Arc::new(Expr::Call(f, a));
    if node.max_coord().is_none() {
        // folds only when the value is in the function's domain
        if let Ok(c) = eval::eval(&node, &[]) {
            return Expr::num(c);
        }
    }
    node
}

pub fn integral(integrand: Arc<Expr>, var: usize, lower: f64, panels: usize) -> Arc<Expr> {
    if integrand.is_zero() {
        return Expr::num(0.0);
    }
    Arc::new(Expr::Integral(Arc::new(Integral {
        integrand,
        var,
        lower,
        panels,
    })))
}

/// Rebuilds `e` bottom-up through the smart constructors.
pub fn simplify(e: &Arc<Expr>) -> Arc<Expr> {
    match &**e {
        Expr::Num(_) | Expr::Coord(_) => e.clone(),
        Expr::Neg(a) => neg(simplify(a)),
        Expr::Add(a, b) => add(simplify(a), simplify(b)),
        Expr::Sub(a, b) => sub(simplify(a), simplify(b)),
        Expr::Mul(a, b) => mul(simplify(a), simplify(b)),
        Expr::Div(a, b) => div(simplify(a), simplify(b)),
        Expr::Pow(a, b) => pow(simplify(a), simplify(b)),
        Expr::Call(f, a) => call(*f, simplify(a)),
        Expr::Integral(int) => integral(simplify(&int.integrand), int.var, int.lower, int.panels),
    }
}
