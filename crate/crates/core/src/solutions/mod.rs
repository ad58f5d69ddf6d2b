//! Five-dimensional off-diagonal vacuum ansatz: residuals of the reduced
//! vacuum system, the constructive generator, window sweeps and the
//! four-dimensional almost Kähler example.
//!
//! The ansatz chart is `(x1, x2, x3 | v, y5)`. Derivatives along `v` are
//! written with a star, `f* = ∂f/∂v`.

mod generate;
mod kahler;
mod window;

use std::sync::Arc;

pub use generate::{
    build_solution, conformal_fields, h4_from_h5, h5_from_h4, n_fields, solve_g_block, w_fields,
    Conformal, GFamily, HBranch, NBranch, Recipe, WMode,
};
pub use kahler::{kahler_chart, kahler_example, H4Reading, KahlerChecks, KahlerExample};
pub use window::{sweep, SampleWindow, Sweep, SweepPoint};

use crate::dconn::DMetric;
use crate::expr::{Chart, ScalarField};
use crate::nconn::NConnection;
use crate::numerics::{jet_eval, Jet};
use crate::{Error, Result};

/// Chart index of `v = y⁴`.
pub const V: usize = 3;
/// Chart index of `y⁵`.
pub const Y5: usize = 4;

pub fn ansatz_chart() -> Arc<Chart> {
    Arc::new(Chart::with_names(&["x1", "x2", "x3"], &["v", "y5"]).expect("static chart"))
}

/// Coefficient fields of the ansatz. `w` feeds the `y⁴` row of N and `n`
/// the `y⁵` row.
#[derive(Debug, Clone)]
pub struct AnsatzData {
    pub chart: Arc<Chart>,
    pub varpi: ScalarField,
    pub g1sign: f64,
    pub g2: ScalarField,
    pub g3: ScalarField,
    pub h4: ScalarField,
    pub h5: ScalarField,
    pub w: [ScalarField; 3],
    pub n: [ScalarField; 3],
    pub zeta: [ScalarField; 3],
}

impl AnsatzData {
    /// Unit blocks, `w = n = ζ = 0`, `ϖ = 1`.
    pub fn trivial(chart: &Arc<Chart>) -> Self {
        let one = ScalarField::constant(chart, 1.0);
        let zero = ScalarField::constant(chart, 0.0);
        let z3 = || [zero.clone(), zero.clone(), zero.clone()];
        Self {
            chart: chart.clone(),
            varpi: one.clone(),
            g1sign: 1.0,
            g2: one.clone(),
            g3: one.clone(),
            h4: one.clone(),
            h5: one,
            w: z3(),
            n: z3(),
            zeta: z3(),
        }
    }

    /// Checks the coordinate dependence the ansatz allows.
    pub fn validate(&self) -> Result<()> {
        if self.chart.n() != 3 || self.chart.m() != 2 {
            return Err(Error::Shape("ansatz chart must have n = 3, m = 2".into()));
        }
        if self.g1sign.abs() != 1.0 {
            return Err(Error::Shape("g1sign must be ±1".into()));
        }
        for (name, f) in [("g2", &self.g2), ("g3", &self.g3)] {
            if f.depends_on(0) || f.depends_on(V) || f.depends_on(Y5) {
                return Err(Error::Shape(format!("{name} may depend on x2, x3 only")));
            }
        }
        let rest = [&self.varpi, &self.h4, &self.h5]
            .into_iter()
            .chain(self.w.iter())
            .chain(self.n.iter())
            .chain(self.zeta.iter());
        if rest.into_iter().any(|f| f.depends_on(Y5)) {
            return Err(Error::Shape(
                "ansatz coefficients may not depend on y5".into(),
            ));
        }
        Ok(())
    }

    /// Block metric: `g = diag(±ϖ, ϖg2, ϖg3)`, `h = diag(ϖh4, ϖh5)`,
    /// `N_i^4 = w_i`, `N_i^5 = n_i`.
    pub fn dmetric(&self) -> Result<DMetric> {
        self.validate()?;
        let p = &self.varpi;
        let ncon = NConnection::symbolic(&self.chart, vec![self.w.to_vec(), self.n.to_vec()])?;
        DMetric::diagonal(
            vec![p.scale(self.g1sign), p.mul(&self.g2), p.mul(&self.g3)],
            vec![p.mul(&self.h4), p.mul(&self.h5)],
            ncon,
        )
    }

    pub fn with_h5(&self, h5: ScalarField) -> Self {
        Self { h5, ..self.clone() }
    }

    /// `h5 → h5·(1 + eps·v)`, every other field unchanged.
    pub fn perturbed(&self, eps: f64) -> Self {
        let v = ScalarField::coordinate(&self.chart, "v").expect("ansatz chart has v");
        let factor = ScalarField::constant(&self.chart, 1.0).add(&v.scale(eps));
        self.with_h5(self.h5.mul(&factor))
    }
}

/// Coefficients of the reduced system at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Abc {
    pub alpha: [f64; 3],
    pub beta: f64,
    /// `3h5*/(2h5) − h4*/h4`, as printed.
    pub gamma: f64,
    /// `3h5*/(2h5) − h4*/(2h4)`, the value for which the `n`-equation
    /// matches the vanishing of the Ricci blocks when `h4* ≠ 0`.
    pub gamma_ricci: f64,
}

fn nonzero(name: &str, x: f64) -> Result<f64> {
    if x == 0.0 || !x.is_finite() {
        Err(Error::Degenerate(format!(
            "{name} vanishes at the sample point"
        )))
    } else {
        Ok(x)
    }
}

fn abc_from_jets(h4: &Jet, h5: &Jet) -> Result<Abc> {
    let a4 = nonzero("h4", h4.value())?;
    let a5 = nonzero("h5", h5.value())?;
    // ∂ ln√|h4 h5|
    let dlog = |k: usize| 0.5 * (h4.d(k) / a4 + h5.d(k) / a5);
    let s5 = h5.d(V);
    let mut alpha = [0.0; 3];
    for (i, a) in alpha.iter_mut().enumerate() {
        *a = h5.hess(i, V) - s5 * dlog(i);
    }
    Ok(Abc {
        alpha,
        beta: h5.hess(V, V) - s5 * dlog(V),
        gamma: 1.5 * s5 / a5 - h4.d(V) / a4,
        gamma_ricci: 1.5 * s5 / a5 - 0.5 * h4.d(V) / a4,
    })
}

pub fn abc_coefficients(h4: &ScalarField, h5: &ScalarField, p: &[f64]) -> Result<Abc> {
    abc_from_jets(&jet_eval(h4, p, 2)?, &jet_eval(h5, p, 2)?)
}

/// Residuals of the reduced vacuum system and of the frame conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    pub r1: f64,
    pub r2: f64,
    pub r3: [f64; 3],
    pub r4: [f64; 3],
    /// `δ̂_i h4`.
    pub c_h4: [f64; 3],
    /// `δ̂_i ϖ`.
    pub c_varpi: [f64; 3],
}

impl Residuals {
    /// Largest of `|r1|, |r2|, |r3_i|, |r4_i|`.
    pub fn max_vacuum(&self) -> f64 {
        self.r3
            .iter()
            .chain(&self.r4)
            .fold(self.r1.abs().max(self.r2.abs()), |m, x| m.max(x.abs()))
    }

    /// Largest of the `δ̂_i` conditions.
    pub fn max_conditions(&self) -> f64 {
        self.c_h4
            .iter()
            .chain(&self.c_varpi)
            .fold(0.0, |m: f64, x| m.max(x.abs()))
    }
}

/// Left-hand side of the `g2, g3` equation; `•` is `∂_{x2}`, `′` is `∂_{x3}`.
fn g_equation(g2: &Jet, g3: &Jet) -> Result<f64> {
    let a2 = nonzero("g2", g2.value())?;
    let a3 = nonzero("g3", g3.value())?;
    let (x2, x3) = (1, 2);
    Ok(
        g3.hess(x2, x2) - g2.d(x2) * g3.d(x2) / (2.0 * a2) - g3.d(x2).powi(2) / (2.0 * a3)
            + g2.hess(x3, x3)
            - g2.d(x3) * g3.d(x3) / (2.0 * a3)
            - g2.d(x3).powi(2) / (2.0 * a2),
    )
}

pub fn vacuum_residuals(a: &AnsatzData, p: &[f64]) -> Result<Residuals> {
    let j = |f: &ScalarField| jet_eval(f, p, 2);
    let (g2, g3, h4, h5) = (j(&a.g2)?, j(&a.g3)?, j(&a.h4)?, j(&a.h5)?);
    let abc = abc_from_jets(&h4, &h5)?;
    let varpi = j(&a.varpi)?;
    let mut out = Residuals {
        r1: g_equation(&g2, &g3)?,
        r2: abc.beta,
        r3: [0.0; 3],
        r4: [0.0; 3],
        c_h4: [0.0; 3],
        c_varpi: [0.0; 3],
    };
    for i in 0..3 {
        let w = jet_eval(&a.w[i], p, 0)?.value();
        let zeta = jet_eval(&a.zeta[i], p, 0)?.value();
        let n = j(&a.n[i])?;
        out.r3[i] = w * abc.beta + abc.alpha[i];
        out.r4[i] = n.hess(V, V) + abc.gamma * n.d(V);
        let delta = |f: &Jet| f.d(i) - (w + zeta) * f.d(V) + n.value() * f.d(Y5);
        out.c_h4[i] = delta(&h4);
        out.c_varpi[i] = delta(&varpi);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dconn::{d_curvature, ricci_scalar_einstein, DConnection};

    fn sf(s: &str) -> ScalarField {
        ScalarField::parse(s, &ansatz_chart()).unwrap()
    }

    const P: [f64; 5] = [0.3, 0.7, -0.4, 1.7, 0.2];

    fn max_ricci(a: &AnsatzData, p: &[f64]) -> f64 {
        let co = DConnection::canonical(&a.dmetric().unwrap()).at(p).unwrap();
        let (r, _) = d_curvature(&co).unwrap();
        let data = ricci_scalar_einstein(&co, &r).unwrap();
        data.ricci
            .iter()
            .flatten()
            .fold(0.0, |m: f64, x| m.max(x.abs()))
    }

    #[test]
    fn trivial_ansatz_has_zero_residuals() {
        let a = AnsatzData::trivial(&ansatz_chart());
        let r = vacuum_residuals(&a, &P).unwrap();
        assert_eq!(r.max_vacuum(), 0.0);
        assert_eq!(r.max_conditions(), 0.0);
        assert_eq!(max_ricci(&a, &P), 0.0);
    }

    #[test]
    fn exponential_g_pair() {
        let mut a = AnsatzData::trivial(&ansatz_chart());
        a.g2 = sf("exp(x2 + 2*x3)");
        a.g3 = a.g2.clone();
        assert!(vacuum_residuals(&a, &P).unwrap().r1.abs() < 1e-10);
    }

    #[test]
    fn quadratic_h5() {
        let mut a = AnsatzData::trivial(&ansatz_chart());
        a.h5 = sf("v^2");
        assert!(vacuum_residuals(&a, &P).unwrap().r2.abs() < 1e-14);
        let abc = abc_coefficients(&a.h4, &a.h5, &[0.0, 0.0, 0.0, 2.0, 0.0]).unwrap();
        assert_eq!(abc.gamma, 1.5);
        assert_eq!(abc.alpha, [0.0; 3]);
        assert_eq!(abc.beta, 0.0);
    }

    #[test]
    fn beta_equals_r2() {
        let mut a = AnsatzData::trivial(&ansatz_chart());
        a.h4 = sf("2 + sin(x1*v)");
        a.h5 = sf("exp(0.3*v*x2) + v^2");
        let r = vacuum_residuals(&a, &P).unwrap();
        let abc = abc_coefficients(&a.h4, &a.h5, &P).unwrap();
        assert_eq!(r.r2, abc.beta);
        assert!(r.r2.abs() > 1e-3);
    }

    #[test]
    fn zero_h4_is_degenerate() {
        let mut a = AnsatzData::trivial(&ansatz_chart());
        a.h4 = sf("v - 1.7");
        assert!(matches!(
            vacuum_residuals(&a, &P),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn y5_dependence_rejected() {
        let mut a = AnsatzData::trivial(&ansatz_chart());
        a.w[0] = sf("y5");
        assert!(a.dmetric().is_err());
        let mut a = AnsatzData::trivial(&ansatz_chart());
        a.g2 = sf("1 + v^2");
        assert!(a.dmetric().is_err());
    }

    /// Family A with `h4 = 1`, `h5 = v²`, constant `w` and `n` from the
    /// `∫ v⁻³` branch: the residuals and every Ricci component vanish.
    #[test]
    fn closed_form_vacuum_fixture() {
        let mut a = AnsatzData::trivial(&ansatz_chart());
        a.g2 = sf("exp(x2 + x3)");
        a.g3 = a.g2.clone();
        a.h5 = sf("v^2");
        a.w = [sf("0.3"), sf("-0.2"), sf("0.1")];
        a.n = [sf("0.5 - 1/(6*v^2)"), sf("0.2 - 1/(3*v^2)"), sf("0.1")];
        let r = vacuum_residuals(&a, &P).unwrap();
        assert!(r.max_vacuum() < 1e-12, "{r:?}");
        assert!(max_ricci(&a, &P) < 1e-10, "{}", max_ricci(&a, &P));
        let pert = a.perturbed(0.1);
        assert!(vacuum_residuals(&pert, &P).unwrap().r2.abs() > 1e-2);
        assert!(max_ricci(&pert, &P) > 1e-3);
    }

    /// With `h4* ≠ 0` the printed `γ` accepts an `n` whose Ricci blocks do
    /// not vanish; `gamma_ricci` selects the flat one.
    #[test]
    fn gamma_reading_with_varying_h4() {
        let mut a = AnsatzData::trivial(&ansatz_chart());
        a.g2 = sf("exp(x2 + x3)");
        a.g3 = a.g2.clone();
        a.h4 = sf("exp(2*v)");
        a.h5 = sf("exp(2*v)");
        a.w = [sf("0.3"), sf("-0.2"), sf("0.1")];
        a.n = [sf("1 - exp(-v)"), sf("0.5*(1 - exp(-v))"), sf("0.2")];
        assert!(vacuum_residuals(&a, &P).unwrap().max_vacuum() < 1e-12);
        assert!(max_ricci(&a, &P) > 1e-3);
        a.n = [sf("1 - exp(-2*v)/2"), sf("0.5*(1 - exp(-2*v))"), sf("0.2")];
        assert!(max_ricci(&a, &P) < 1e-10);
        let abc = abc_coefficients(&a.h4, &a.h5, &P).unwrap();
        let n = jet_eval(&a.n[0], &P, 2).unwrap();
        assert!((n.hess(V, V) + abc.gamma_ricci * n.d(V)).abs() < 1e-12);
    }
}
