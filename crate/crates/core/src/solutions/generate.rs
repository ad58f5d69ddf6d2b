use std::sync::Arc;

use super::{abc_coefficients, AnsatzData, SampleWindow, V, Y5};
use crate::expr::{Chart, Func, ScalarField};
use crate::numerics::jet_eval;
use crate::{Error, Result};

fn stage(stage: &str, message: impl Into<String>) -> Error {
    Error::Stage {
        stage: stage.to_string(),
        message: message.into(),
    }
}

/// Tags an error with the stage it came from, keeping existing stage tags.
fn in_stage(name: &'static str) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::Stage { .. } => e,
        e => stage(name, e.to_string()),
    }
}

fn x_only(name: &str, f: &ScalarField) -> Result<()> {
    if f.depends_on(V) || f.depends_on(Y5) {
        Err(Error::Shape(format!(
            "{name} may depend on x1, x2, x3 only"
        )))
    } else {
        Ok(())
    }
}

fn coord(chart: &Arc<Chart>, k: usize) -> ScalarField {
    ScalarField::coordinate(chart, chart.name(k)).expect("chart coordinate")
}

fn sqrt_abs(f: &ScalarField) -> ScalarField {
    f.apply(Func::Abs).apply(Func::Sqrt)
}

fn is_zero(f: &ScalarField) -> bool {
    f.body().is_zero()
}

/// Solution families of the `g2, g3` equation.
#[derive(Debug, Clone)]
pub enum GFamily {
    /// `g2 = g3 = g0·exp(a2·x2 + a3·x3)`.
    Exponential { g0: f64, a2: f64, a3: f64 },
    /// `g2 = g2(x2)` prescribed, `g3 = (c1 + c2·∫_{lower}^{x2} √|g2| dx2)²`.
    Integrated {
        g2: ScalarField,
        c1: f64,
        c2: f64,
        lower: f64,
    },
    /// `g2 = g2(x2)`, `g3 = g3(x3)`: every term of the equation carries a
    /// vanishing derivative.
    Separated { g2: ScalarField, g3: ScalarField },
}

/// Builds `(g2, g3)` and checks both are bounded away from zero on the window.
pub fn solve_g_block(
    chart: &Arc<Chart>,
    family: &GFamily,
    window: &SampleWindow,
    panels: usize,
) -> Result<(ScalarField, ScalarField)> {
    let (x2, x3) = (coord(chart, 1), coord(chart, 2));
    let only = |name: &str, f: &ScalarField, allowed: usize| -> Result<()> {
        if (0..chart.dim()).any(|k| k != allowed && f.depends_on(k)) {
            Err(Error::Shape(format!(
                "{name} may depend on {} only",
                chart.name(allowed)
            )))
        } else {
            Ok(())
        }
    };
    let (g2, g3) = match family {
        GFamily::Exponential { g0, a2, a3 } => {
            let g = x2
                .scale(*a2)
                .add(&x3.scale(*a3))
                .apply(Func::Exp)
                .scale(*g0);
            (g.clone(), g)
        }
        GFamily::Integrated { g2, c1, c2, lower } => {
            only("g2", g2, 1)?;
            let root = ScalarField::constant(chart, *c1)
                .add(&sqrt_abs(g2).integrate(1, *lower, panels).scale(*c2));
            (g2.clone(), root.powf(2.0))
        }
        GFamily::Separated { g2, g3 } => {
            only("g2", g2, 1)?;
            only("g3", g3, 2)?;
            (g2.clone(), g3.clone())
        }
    };
    for (name, f) in [("g2", &g2), ("g3", &g3)] {
        let mut sign = 0.0;
        for p in window.points() {
            let s = f.eval_coords(&p)?.signum();
            if s == 0.0 || (sign != 0.0 && s != sign) {
                return Err(Error::Degenerate(format!(
                    "{name} vanishes on the window near {p:?}"
                )));
            }
            sign = s;
        }
    }
    Ok((g2, g3))
}

/// `√|h5| = s1 + s2·∫_{lo}^{v} √|h4| dv` when `h4* ≠ 0`, else `s1 + s2·v`.
pub fn h5_from_h4(
    h4: &ScalarField,
    s1: &ScalarField,
    s2: &ScalarField,
    window: &SampleWindow,
    panels: usize,
) -> Result<ScalarField> {
    x_only("h5 seed 1", s1)?;
    x_only("h5 seed 2", s2)?;
    if is_zero(s2) {
        return Err(Error::Degenerate(
            "second h5 seed is zero, so h5* = 0".into(),
        ));
    }
    let mut sign = 0.0;
    for p in window.admissible_points(&[]) {
        let s = h4.eval_coords(&p)?.signum();
        if s == 0.0 || (sign != 0.0 && s != sign) {
            return Err(Error::Degenerate(format!(
                "h4 changes sign on the window near {p:?}"
            )));
        }
        sign = s;
    }
    let chart = h4.chart();
    let integral = if h4.depends_on(V) {
        sqrt_abs(h4).integrate(V, window.v_lower(), panels)
    } else {
        coord(chart, V)
    };
    Ok(s1.add(&s2.mul(&integral)).powf(2.0))
}

/// `h4 = h0²·((√|h5|)*)²`.
pub fn h4_from_h5(
    h5: &ScalarField,
    h0: &ScalarField,
    window: &SampleWindow,
) -> Result<ScalarField> {
    x_only("h0", h0)?;
    if !h5.depends_on(V) {
        return Err(Error::Degenerate(
            "h5 does not depend on v, so h5* = 0".into(),
        ));
    }
    let h5s = h5.partial_field(&[V]);
    for p in window.admissible_points(&[]) {
        if h5s.eval_coords(&p)? == 0.0 {
            return Err(Error::Degenerate(format!(
                "h5* vanishes on the window at {p:?}"
            )));
        }
    }
    let root_s = sqrt_abs(h5).partial_field(&[V]);
    Ok(h0.mul(&root_s).powf(2.0))
}

#[derive(Debug, Clone)]
pub enum WMode {
    /// User fields, accepted when `α_i = β = 0` on the window.
    Free([ScalarField; 3]),
    /// `w_k = ∂_k ln Q / ∂_v ln Q` with `Q = √|h4 h5| / |h5*|`; needs `β ≠ 0`.
    /// This equals `α_k/β`, which makes the mixed Ricci components vanish,
    /// so it satisfies `w β − α = 0` rather than `w β + α = 0`.
    Algebraic,
}

pub fn w_fields(
    h4: &ScalarField,
    h5: &ScalarField,
    mode: &WMode,
    window: &SampleWindow,
    tol: f64,
) -> Result<[ScalarField; 3]> {
    let points = window.admissible_points(&[h4, h5]);
    match mode {
        WMode::Free(w) => {
            for p in &points {
                let abc = abc_coefficients(h4, h5, p)?;
                let worst = abc.alpha.iter().fold(abc.beta.abs(), |m, x| m.max(x.abs()));
                if worst > tol {
                    return Err(stage(
                        "w",
                        format!("free w needs α = β = 0, found {worst:.3e} at {p:?}"),
                    ));
                }
            }
            Ok(w.clone())
        }
        WMode::Algebraic => {
            for p in &points {
                let beta = abc_coefficients(h4, h5, p)?.beta;
                if beta.abs() <= tol {
                    return Err(Error::Degenerate(format!(
                        "β = {beta:.3e} at {p:?}; the algebraic w branch needs β ≠ 0"
                    )));
                }
            }
            let q = sqrt_abs(&h4.mul(h5)).div(&h5.partial_field(&[V]).apply(Func::Abs));
            let lq = q.apply(Func::Ln);
            let den = lq.partial_field(&[V]);
            Ok([0, 1, 2].map(|k| lq.partial_field(&[k]).div(&den)))
        }
    }
}

/// Integrand choices for `n_k = n_k[1] + n_k[2]·∫ I dv`.
#[derive(Debug, Clone)]
pub enum NBranch {
    /// Picks from the dependence of `h4`, `h5` on `v`.
    Auto,
    /// `I = h4/(√|h5|)³`, for `h5* ≠ 0`.
    H5Varying,
    /// `I = h4`, for `h5* = 0`.
    H5Constant,
    /// `I = (√|h5|)⁻³`, for `h4* = 0`.
    H4Constant,
    /// `I = √|h4|/(√|h5|)³`, the solution of `n** + γ n* = 0` with
    /// `γ = 3h5*/(2h5) − h4*/(2h4)`.
    RicciConsistent,
    /// `I = h#` for a prescribed field, the `h5* = 0` limit `n* = n[1]·h#`.
    Prescribed(ScalarField),
}

impl NBranch {
    fn resolve(&self, h4: &ScalarField, h5: &ScalarField) -> Result<NBranch> {
        let (v4, v5) = (h4.depends_on(V), h5.depends_on(V));
        let misuse = |what: &str| Err(stage("n", format!("branch misuse: {what}")));
        match self {
            NBranch::Auto => Ok(if !v5 {
                NBranch::H5Constant
            } else if !v4 {
                NBranch::H4Constant
            } else {
                NBranch::H5Varying
            }),
            NBranch::H5Varying if !v5 => misuse("h5 does not depend on v"),
            NBranch::H5Constant if v5 => misuse("h5 depends on v"),
            NBranch::H4Constant if v4 => misuse("h4 depends on v"),
            b => Ok(b.clone()),
        }
    }

    /// Whether the branch solves the `n`-equation with `gamma_ricci`.
    fn uses_ricci_gamma(&self) -> bool {
        matches!(self, NBranch::RicciConsistent)
    }
}

pub fn n_fields(
    h4: &ScalarField,
    h5: &ScalarField,
    seeds: &[(ScalarField, ScalarField); 3],
    branch: &NBranch,
    window: &SampleWindow,
    panels: usize,
) -> Result<[ScalarField; 3]> {
    for (a, b) in seeds {
        x_only("n seed", a)?;
        x_only("n seed", b)?;
    }
    let r5 = sqrt_abs(h5);
    let integrand = match branch.resolve(h4, h5)? {
        NBranch::H5Varying => h4.div(&r5.powf(3.0)),
        NBranch::H5Constant => h4.clone(),
        NBranch::H4Constant => r5.powf(-3.0),
        NBranch::RicciConsistent => sqrt_abs(h4).div(&r5.powf(3.0)),
        NBranch::Prescribed(f) => f.clone(),
        NBranch::Auto => unreachable!("resolved above"),
    };
    let integral = integrand.integrate(V, window.v_lower(), panels);
    Ok([0, 1, 2].map(|k| {
        let (n1, n2) = &seeds[k];
        if is_zero(n2) {
            n1.clone()
        } else {
            n1.add(&n2.mul(&integral))
        }
    }))
}

/// Conformal factor data: `ϖ^{q1/q2} = h4`.
#[derive(Debug, Clone)]
pub struct Conformal {
    pub varpi: ScalarField,
    pub q1: i32,
    pub q2: i32,
    /// Uses `ζ_i = ∂_iϖ/ϖ*` instead of `−w_i + ∂_iϖ/ϖ*`.
    pub vacuum: bool,
}

/// `ζ_i` fields with the worst `ϖ^{q1/q2} − h4` and `∂_iϖ − (w_i + ζ_i)ϖ*`
/// residuals over the window.
#[derive(Debug, Clone)]
pub struct ConformalFields {
    pub zeta: [ScalarField; 3],
    pub power_residual: f64,
    pub confeq_residual: f64,
}

pub fn conformal_fields(
    a: &AnsatzData,
    c: &Conformal,
    window: &SampleWindow,
) -> Result<ConformalFields> {
    if c.q1 == 0 || c.q2 == 0 {
        return Err(Error::Shape("q1 and q2 must be nonzero".into()));
    }
    if c.varpi.depends_on(Y5) {
        return Err(Error::Shape("ϖ may not depend on y5".into()));
    }
    let chart = &a.chart;
    let zeta = if c.varpi.is_constant() {
        [0, 1, 2].map(|_| ScalarField::constant(chart, 0.0))
    } else if !c.varpi.depends_on(V) {
        return Err(Error::Degenerate("ϖ is not constant but ϖ* = 0".into()));
    } else {
        let vs = c.varpi.partial_field(&[V]);
        [0, 1, 2].map(|i| {
            let base = c.varpi.partial_field(&[i]).div(&vs);
            if c.vacuum {
                base
            } else {
                base.sub(&a.w[i])
            }
        })
    };
    let q = c.q1 as f64 / c.q2 as f64;
    let mut power_residual: f64 = 0.0;
    let mut confeq_residual: f64 = 0.0;
    let mut guards = vec![&a.h4];
    let vs = c.varpi.partial_field(&[V]);
    if !c.varpi.is_constant() {
        guards.push(&vs);
    }
    for p in window.admissible_points(&guards) {
        let pv = jet_eval(&c.varpi, &p, 1)?;
        power_residual =
            power_residual.max((pv.value().abs().powf(q) - a.h4.eval_coords(&p)?).abs());
        for i in 0..3 {
            let s = a.w[i].eval_coords(&p)? + zeta[i].eval_coords(&p)?;
            confeq_residual = confeq_residual.max((pv.d(i) - s * pv.d(V)).abs());
        }
    }
    Ok(ConformalFields {
        zeta,
        power_residual,
        confeq_residual,
    })
}

#[derive(Debug, Clone)]
pub enum HBranch {
    /// `h5` given, `h4 = h0²((√|h5|)*)²`.
    FromH5 { h5: ScalarField, h0: ScalarField },
    /// `h4` given, `√|h5| = s1 + s2·∫√|h4| dv`.
    FromH4 {
        h4: ScalarField,
        s1: ScalarField,
        s2: ScalarField,
    },
    /// Both given, checked against the `h`-equation.
    Direct { h4: ScalarField, h5: ScalarField },
}

/// Inputs of the constructive generator.
#[derive(Debug, Clone)]
pub struct Recipe {
    pub chart: Arc<Chart>,
    pub g: GFamily,
    pub g1sign: f64,
    pub h: HBranch,
    pub w: WMode,
    pub n_seeds: [(ScalarField, ScalarField); 3],
    pub n_branch: NBranch,
    pub conformal: Option<Conformal>,
    pub panels: usize,
    pub tol: f64,
}

impl Recipe {
    /// Family A with `a2 = a3 = 1`, `h5 = v²`, `h0 = 1`, small constant `w`,
    /// constant `n` seeds and `ϖ = 1`.
    pub fn family_a(chart: &Arc<Chart>) -> Self {
        let k = |c: f64| ScalarField::constant(chart, c);
        Self {
            chart: chart.clone(),
            g: GFamily::Exponential {
                g0: 1.0,
                a2: 1.0,
                a3: 1.0,
            },
            g1sign: 1.0,
            h: HBranch::FromH5 {
                h5: ScalarField::parse("v^2", chart).expect("static expression"),
                h0: k(1.0),
            },
            w: WMode::Free([k(0.3), k(-0.2), k(0.1)]),
            n_seeds: [
                (k(0.5), k(1.0 / 3.0)),
                (k(0.2), k(2.0 / 3.0)),
                (k(0.1), k(0.0)),
            ],
            n_branch: NBranch::Auto,
            conformal: None,
            panels: 4096,
            tol: 1e-6,
        }
    }
}

fn max_over<F>(points: &[Vec<f64>], mut f: F) -> Result<(f64, Option<Vec<f64>>)>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let mut worst = (0.0, None);
    for p in points {
        let x = f(p)?.abs();
        if x > worst.0 || x.is_nan() {
            worst = (x, Some(p.clone()));
        }
    }
    Ok(worst)
}

fn check(stage_name: &str, what: &str, worst: (f64, Option<Vec<f64>>), tol: f64) -> Result<()> {
    match worst {
        (x, Some(p)) if !(x <= tol) => Err(stage(
            stage_name,
            format!("{what} residual {x:.3e} exceeds {tol:.1e} at {p:?}"),
        )),
        _ => Ok(()),
    }
}

/// Runs the generator stages in order, aborting with the stage name when a
/// residual exceeds `recipe.tol` on the admissible window points.
pub fn build_solution(recipe: &Recipe, window: &SampleWindow) -> Result<AnsatzData> {
    let chart = &recipe.chart;
    let tol = recipe.tol;
    let mut a = AnsatzData::trivial(chart);
    a.g1sign = recipe.g1sign;

    let (g2, g3) =
        solve_g_block(chart, &recipe.g, window, recipe.panels).map_err(in_stage("g-block"))?;
    a.g2 = g2;
    a.g3 = g3;
    let pts = window.admissible_points(&[&a.g2, &a.g3]);
    check(
        "g-block",
        "g-equation",
        max_over(&pts, |p| {
            Ok(super::g_equation(
                &jet_eval(&a.g2, p, 2)?,
                &jet_eval(&a.g3, p, 2)?,
            )?)
        })?,
        tol,
    )?;

    let (h4, h5) = match &recipe.h {
        HBranch::FromH5 { h5, h0 } => (
            h4_from_h5(h5, h0, window).map_err(in_stage("h-block"))?,
            h5.clone(),
        ),
        HBranch::FromH4 { h4, s1, s2 } => (
            h4.clone(),
            h5_from_h4(h4, s1, s2, window, recipe.panels).map_err(in_stage("h-block"))?,
        ),
        HBranch::Direct { h4, h5 } => (h4.clone(), h5.clone()),
    };
    a.h4 = h4;
    a.h5 = h5;
    let pts = window.admissible_points(&[&a.g2, &a.g3, &a.h4, &a.h5]);
    check(
        "h-block",
        "h-equation",
        max_over(&pts, |p| Ok(abc_coefficients(&a.h4, &a.h5, p)?.beta))?,
        tol,
    )?;

    a.w = w_fields(&a.h4, &a.h5, &recipe.w, window, tol).map_err(in_stage("w"))?;
    let sign = if matches!(recipe.w, WMode::Algebraic) {
        -1.0
    } else {
        1.0
    };
    check(
        "w",
        "w-equation",
        max_over(&pts, |p| {
            let abc = abc_coefficients(&a.h4, &a.h5, p)?;
            let mut worst: f64 = 0.0;
            for i in 0..3 {
                worst = worst.max((a.w[i].eval_coords(p)? * abc.beta + sign * abc.alpha[i]).abs());
            }
            Ok(worst)
        })?,
        tol,
    )?;

    let branch = recipe
        .n_branch
        .resolve(&a.h4, &a.h5)
        .map_err(in_stage("n"))?;
    a.n = n_fields(
        &a.h4,
        &a.h5,
        &recipe.n_seeds,
        &branch,
        window,
        recipe.panels,
    )
    .map_err(in_stage("n"))?;
    check(
        "n",
        "n-equation",
        max_over(&pts, |p| {
            let abc = abc_coefficients(&a.h4, &a.h5, p)?;
            let gamma = if branch.uses_ricci_gamma() {
                abc.gamma_ricci
            } else {
                abc.gamma
            };
            let mut worst: f64 = 0.0;
            for k in 0..3 {
                let n = jet_eval(&a.n[k], p, 2)?;
                worst = worst.max((n.hess(V, V) + gamma * n.d(V)).abs());
            }
            Ok(worst)
        })?,
        tol,
    )?;

    if let Some(c) = &recipe.conformal {
        let cf = conformal_fields(&a, c, window).map_err(in_stage("conformal"))?;
        check("conformal", "power", (cf.power_residual, Some(vec![])), tol)?;
        check(
            "conformal",
            "confeq",
            (cf.confeq_residual, Some(vec![])),
            tol,
        )?;
        a.varpi = c.varpi.clone();
        a.zeta = cf.zeta;
        // The frame conditions on h4 only matter once ϖ varies.
        if !c.varpi.is_constant() {
            check(
                "conformal",
                "δh4",
                max_over(&pts, |p| {
                    let r = super::vacuum_residuals(&a, p)?;
                    Ok(r.c_h4.iter().fold(0.0f64, |m, x| m.max(x.abs())))
                })?,
                tol,
            )?;
        }
    }
    check(
        "frame",
        "δϖ",
        max_over(&pts, |p| {
            let r = super::vacuum_residuals(&a, p)?;
            Ok(r.c_varpi.iter().fold(0.0f64, |m, x| m.max(x.abs())))
        })?,
        tol,
    )?;
    Ok(a)
}
