use super::{Chart, Expr};

// Binding strength used to decide where parentheses are required.
const ADD: u8 = 1;
const MUL: u8 = 2;
const NEG: u8 = 3;
const POW: u8 = 4;
const ATOM: u8 = 5;

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => ADD,
        Expr::Mul(..) | Expr::Div(..) => MUL,
        Expr::Neg(_) => NEG,
        Expr::Pow(..) => POW,
        Expr::Num(c) if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) => NEG,
        _ => ATOM,
    }
}

pub(super) fn number(c: f64) -> String {
    if c.fract() == 0.0 && c.abs() < 1e15 {
        format!("{}", c as i64)
    } else {
        format!("{c:?}")
    }
}

pub(super) fn render(e: &Expr, chart: &Chart) -> String {
    let mut out = String::new();
    write(e, chart, &mut out);
    out
}

fn wrap(e: &Expr, chart: &Chart, paren: bool, out: &mut String) {
    if paren {
        out.push('(');
        write(e, chart, out);
        out.push(')');
    } else {
        write(e, chart, out);
    }
}

fn write(e: &Expr, chart: &Chart, out: &mut String) {
    match e {
        Expr::Num(c) => out.push_str(&number(*c)),
        Expr::Coord(i) => out.push_str(chart.name(*i)),
        Expr::Neg(a) => {
            out.push('-');
            // `-` followed by a negative literal or another negation needs a
            // separator to avoid reading as a different token stream
            wrap(a, chart, prec(a) < POW, out);
        }
        Expr::Add(a, b) | Expr::Sub(a, b) => {
            write(a, chart, out);
            out.push_str(if matches!(e, Expr::Add(..)) {
                " + "
            } else {
                " - "
            });
            wrap(b, chart, prec(b) <= ADD || prec(b) == NEG, out);
        }
        Expr::Mul(a, b) | Expr::Div(a, b) => {
            wrap(a, chart, prec(a) < MUL, out);
            out.push_str(if matches!(e, Expr::Mul(..)) { "*" } else { "/" });
            wrap(b, chart, prec(b) <= MUL || prec(b) == NEG, out);
        }
        Expr::Pow(a, b) => {
            wrap(a, chart, prec(a) <= POW, out);
            out.push('^');
            wrap(b, chart, prec(b) < POW, out);
        }
        Expr::Call(f, a) => {
            out.push_str(f.name());
            out.push('(');
            write(a, chart, out);
            out.push(')');
        }
        Expr::Integral(int) => {
            out.push_str("integrate(");
            write(&int.integrand, chart, out);
            out.push_str(", ");
            out.push_str(chart.name(int.var));
            out.push_str(", ");
            out.push_str(&number(int.lower));
            out.push_str(", ");
            out.push_str(&int.panels.to_string());
            out.push(')');
        }
    }
}
