use std::sync::Arc;

use super::simplify::{add, call, div, integral, mul, neg, pow, sub};
use super::{Expr, Func};

/// Exact derivative of `e` with respect to coordinate `i`.
pub fn derivative(e: &Arc<Expr>, i: usize) -> Arc<Expr> {
    if !e.depends_on(i) {
        return Expr::num(0.0);
    }
    match &**e {
        Expr::Num(_) => Expr::num(0.0),
        Expr::Coord(j) => Expr::num(if *j == i { 1.0 } else { 0.0 }),
        Expr::Neg(a) => neg(derivative(a, i)),
        Expr::Add(a, b) => add(derivative(a, i), derivative(b, i)),
        Expr::Sub(a, b) => sub(derivative(a, i), derivative(b, i)),
        Expr::Mul(a, b) => add(
            mul(derivative(a, i), b.clone()),
            mul(a.clone(), derivative(b, i)),
        ),
        Expr::Div(a, b) => {
            let da = derivative(a, i);
            if !b.depends_on(i) {
                return div(da, b.clone());
            }
            let db = derivative(b, i);
            div(
                sub(mul(da, b.clone()), mul(a.clone(), db)),
                pow(b.clone(), Expr::num(2.0)),
            )
        }
        Expr::Pow(a, b) => {
            if !b.depends_on(i) {
                // b*a^(b-1)*a'
                let lowered = pow(a.clone(), sub(b.clone(), Expr::num(1.0)));
                return mul(mul(b.clone(), lowered), derivative(a, i));
            }
            // a^b*(b'*ln(a) + b*a'/a)
            let log_term = mul(derivative(b, i), call(Func::Ln, a.clone()));
            let da = derivative(a, i);
            let inner = if da.is_zero() {
                log_term
            } else {
                add(log_term, div(mul(b.clone(), da), a.clone()))
            };
            mul(e.clone(), inner)
        }
        Expr::Call(f, a) => {
            let outer = match f {
                Func::Sin => call(Func::Cos, a.clone()),
                Func::Cos => neg(call(Func::Sin, a.clone())),
                Func::Tan => div(
                    Expr::num(1.0),
                    pow(call(Func::Cos, a.clone()), Expr::num(2.0)),
                ),
                Func::Sinh => call(Func::Cosh, a.clone()),
                Func::Cosh => call(Func::Sinh, a.clone()),
                Func::Tanh => sub(
                    Expr::num(1.0),
                    pow(call(Func::Tanh, a.clone()), Expr::num(2.0)),
                ),
                Func::Exp => e.clone(),
                Func::Ln => div(Expr::num(1.0), a.clone()),
                Func::Sqrt => div(Expr::num(0.5), e.clone()),
                Func::Abs => call(Func::Sign, a.clone()),
                Func::Sign => return Expr::num(0.0),
            };
            mul(outer, derivative(a, i))
        }
        Expr::Integral(int) => {
            if int.var == i {
                // upper limit is the coordinate itself
                int.integrand.clone()
            } else {
                integral(
                    derivative(&int.integrand, i),
                    int.var,
                    int.lower,
                    int.panels,
                )
            }
        }
    }
}
