use super::{Expr, Func};

/// Offending node and reason for a failed evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalFault {
    pub node: Expr,
    pub reason: &'static str,
}

fn fault<T>(node: &Expr, reason: &'static str) -> Result<T, EvalFault> {
    Err(EvalFault {
        node: node.clone(),
        reason,
    })
}

fn checked(node: &Expr, x: f64) -> Result<f64, EvalFault> {
    if x.is_finite() {
        Ok(x)
    } else {
        fault(node, "non-finite result")
    }
}

pub fn pow(node: &Expr, base: f64, exp: f64) -> Result<f64, EvalFault> {
    if base == 0.0 && exp < 0.0 {
        return fault(node, "zero raised to a negative power");
    }
    if base < 0.0 && exp.fract() != 0.0 {
        return fault(node, "negative base with non-integer exponent");
    }
    let r = if exp.fract() == 0.0 && exp.abs() <= i32::MAX as f64 {
        base.powi(exp as i32)
    } else {
        base.powf(exp)
    };
    checked(node, r)
}

pub fn apply(node: &Expr, f: Func, x: f64) -> Result<f64, EvalFault> {
    let r = match f {
        Func::Sin => x.sin(),
        Func::Cos => x.cos(),
        Func::Tan => x.tan(),
        Func::Sinh => x.sinh(),
        Func::Cosh => x.cosh(),
        Func::Tanh => x.tanh(),
        Func::Exp => x.exp(),
        Func::Ln => {
            if x <= 0.0 {
                return fault(node, "logarithm of a non-positive value");
            }
            x.ln()
        }
        Func::Sqrt => {
            if x < 0.0 {
                return fault(node, "square root of a negative value");
            }
            x.sqrt()
        }
        Func::Abs => x.abs(),
        Func::Sign => {
            if x == 0.0 {
                return fault(node, "sign is not differentiable at zero");
            }
            x.signum()
        }
    };
    checked(node, r)
}

pub fn eval(e: &Expr, u: &[f64]) -> Result<f64, EvalFault> {
    match e {
        Expr::Num(c) => Ok(*c),
        Expr::Coord(i) => Ok(u[*i]),
        Expr::Neg(a) => Ok(-eval(a, u)?),
        Expr::Add(a, b) => checked(e, eval(a, u)? + eval(b, u)?),
        Expr::Sub(a, b) => checked(e, eval(a, u)? - eval(b, u)?),
        Expr::Mul(a, b) => checked(e, eval(a, u)? * eval(b, u)?),
        Expr::Div(a, b) => {
            let num = eval(a, u)?;
            let den = eval(b, u)?;
            if den == 0.0 {
                return fault(e, "division by zero");
            }
            checked(e, num / den)
        }
        Expr::Pow(a, b) => pow(e, eval(a, u)?, eval(b, u)?),
        Expr::Call(f, a) => apply(e, *f, eval(a, u)?),
        Expr::Integral(int) => {
            let upper = u[int.var];
            let mut scratch = u.to_vec();
            let mut first_fault = None;
            let value = crate::numerics::simpson(
                |t| {
                    scratch[int.var] = t;
                    match eval(&int.integrand, &scratch) {
                        Ok(y) => y,
                        Err(f) => {
                            first_fault.get_or_insert(f);
                            f64::NAN
                        }
                    }
                },
                int.lower,
                upper,
                int.panels,
            );
            if let Some(f) = first_fault {
                return Err(f);
            }
            match value {
                Ok(v) => checked(e, v),
                Err(_) => fault(e, "non-finite quadrature sample"),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::{Chart, ExprError, ScalarField};
    use std::sync::Arc;

    fn chart() -> Arc<Chart> {
        Arc::new(Chart::with_names(&["x1", "x2", "x3"], &["v", "y5"]).unwrap())
    }

    #[test]
    fn spec_points() {
        let c = chart();
        let f = ScalarField::parse("exp(2*x1)", &c).unwrap();
        assert_eq!(f.eval_coords(&[0.0; 5]).unwrap(), 1.0);
        let f = ScalarField::parse("abs(x3*v)", &c).unwrap();
        assert_eq!(f.eval_coords(&[0.0, 0.0, -2.0, 3.0, 0.0]).unwrap(), 6.0);
    }

    #[test]
    fn domain_errors_name_node_and_point() {
        let c = chart();
        let f = ScalarField::parse("1 + ln(x2)", &c).unwrap();
        match f.eval_coords(&[0.0; 5]).unwrap_err() {
            ExprError::Domain { node, point, .. } => {
                assert_eq!(node, "ln(x2)");
                assert!(point.contains("x2=0"));
            }
            e => panic!("unexpected {e:?}"),
        }
        for src in ["sqrt(x1 - 1)", "v/x1", "sign(x1)", "x1^-1", "(x1 - 1)^0.5"] {
            let f = ScalarField::parse(src, &c).unwrap();
            assert!(matches!(
                f.eval_coords(&[0.0; 5]),
                Err(ExprError::Domain { .. })
            ));
        }
    }

    #[test]
    fn dimension_mismatch() {
        let f = ScalarField::parse("x1", &chart()).unwrap();
        assert!(matches!(
            f.eval_coords(&[0.0; 3]),
            Err(ExprError::PointDimension {
                expected: 5,
                found: 3
            })
        ));
    }
}
