//! Fixtures and random generators shared by the integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use nholo::dconn::DMetric;
use nholo::expr::{Chart, ScalarField};
use nholo::lagrange::Lagrangian;
use nholo::nconn::NConnection;
use nholo::numerics::Sampler;

pub fn chart() -> Arc<Chart> {
    Arc::new(Chart::with_names(&["x1", "x2"], &["y1", "y2"]).unwrap())
}

pub const FIXTURES: [(&str, &str); 3] = [
    ("flat", "y1^2 + y2^2"),
    ("conformal", "exp(2*x1)*(y1^2 + y2^2)"),
    (
        "off-diagonal",
        "(2 + x2^2)*y1^2 + x1*y1*y2 + (2 + x1^2)*y2^2",
    ),
];

pub fn fixtures() -> Vec<(&'static str, Lagrangian)> {
    let c = chart();
    FIXTURES
        .iter()
        .map(|(name, src)| (*name, Lagrangian::parse(src, &c).unwrap()))
        .collect()
}

pub fn points(rng: &mut Sampler, count: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..count).map(|_| rng.vector(dim, -1.0, 1.0)).collect()
}

/// Smooth expression in the chart coordinates, bounded on `[-1, 1]^4`.
pub fn random_expr(rng: &mut Sampler, depth: usize) -> String {
    const NAMES: [&str; 4] = ["x1", "x2", "y1", "y2"];
    if depth == 0 || rng.unit() < 0.2 {
        return if rng.unit() < 0.7 {
            NAMES[rng.below(4)].to_string()
        } else {
            format!("{:.3}", rng.uniform(-2.0, 2.0))
        };
    }
    let a = random_expr(rng, depth - 1);
    match rng.below(11) {
        0 => format!("({a}) + ({})", random_expr(rng, depth - 1)),
        1 => format!("({a}) - ({})", random_expr(rng, depth - 1)),
        2 | 3 => format!("({a})*({})", random_expr(rng, depth - 1)),
        4 => format!("({a})/(2 + sin({}))", random_expr(rng, depth - 1)),
        5 => format!("sin({a})"),
        6 => format!("cos({a})"),
        7 => format!("exp(sin({a}))"),
        8 => format!("sqrt(1 + ({a})^2)"),
        9 => format!("ln(2 + tanh({a}))"),
        _ => format!("({a})^{}", 2 + rng.below(2)),
    }
}

fn coef(rng: &mut Sampler) -> String {
    format!("{:.4}", rng.uniform(-0.3, 0.3))
}

/// Diagonally dominant block metric with a y-dependent N-connection.
pub fn random_metric(rng: &mut Sampler) -> DMetric {
    let c = chart();
    let mut f = |template: &str| {
        let mut s = template.to_string();
        while s.contains("{c}") {
            s = s.replacen("{c}", &coef(rng), 1);
        }
        ScalarField::parse(&s, &c).unwrap()
    };
    let g12 = f("{c}*x1*y2");
    let g = vec![
        vec![f("2 + {c}*sin(x2 + y1)"), g12.clone()],
        vec![g12, f("2 + {c}*cos(x1*y2)")],
    ];
    let h12 = f("{c}*sin(y1 - x1)");
    let h = vec![
        vec![f("2 + {c}*x2*y1^2"), h12.clone()],
        vec![h12, f("2 + {c}*y2*x1")],
    ];
    let n = vec![
        vec![f("{c}*y1*x2 + {c}*y2^2"), f("{c}*sin(y1)")],
        vec![f("{c}*x1*y2"), f("{c}*(y1 + y2*x2)")],
    ];
    let ncon = NConnection::symbolic(&c, n).unwrap();
    DMetric::new(g, h, ncon).unwrap()
}

/// Polynomial vector field with random coefficients for the curvature oracle.
pub fn random_vector_field(rng: &mut Sampler) -> Vec<ScalarField> {
    let c = chart();
    (0..4)
        .map(|_| {
            let s = format!(
                "{} + {}*x1 + {}*x2*y1 + {}*y2^2 + {}*sin(y1)",
                coef(rng),
                coef(rng),
                coef(rng),
                coef(rng),
                coef(rng)
            );
            ScalarField::parse(&s, &c).unwrap()
        })
        .collect()
}

pub fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m: f64, x| {
        if x.is_nan() {
            f64::INFINITY
        } else {
            m.max(x.abs())
        }
    })
}
