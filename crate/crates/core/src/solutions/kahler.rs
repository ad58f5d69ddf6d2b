use std::sync::Arc;

use crate::dconn::DMetric;
use crate::expr::{Chart, ScalarField};
use crate::nconn::{DVector, NConnection};
use crate::numerics::{jet_eval, Sampler};
use crate::{Error, Result};

const X3: usize = 1;
const V4: usize = 2;

/// Denominator of `h4 = a² g / |g · v^k|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum H4Reading {
    /// `|g v²|`, as in the final metric and in `θ`, `F`.
    #[default]
    GV2,
    /// `|g v|`, as where `h#` is first introduced.
    GV,
}

/// Four-dimensional almost Kähler example on `(x2, x3 | v, y5)` with
/// `g_22 = g(x3)`, `g_33 = 0`, `h_44 = h#`, `h_55 = 0`, `ϖ = (h#)^{q2/q1}`.
/// The blocks are degenerate, so everything is evaluated pointwise without
/// inverting them.
#[derive(Debug, Clone)]
pub struct KahlerExample {
    pub a: f64,
    pub g: ScalarField,
    pub h4: ScalarField,
    pub varpi: ScalarField,
    pub reading: H4Reading,
    pub dmetric: DMetric,
}

/// Worst residuals over the sampled points.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KahlerChecks {
    /// `2 g g″ − (g′)²`.
    pub ode: f64,
    /// `F(F X) + X`.
    pub f_squared: f64,
    /// `θ(X, Y) + θ(Y, X)`.
    pub theta_antisymmetry: f64,
    /// `θ(X, X)`.
    pub theta_diagonal: f64,
    /// `θ(X, Y) − g(F X, Y)`.
    pub theta_vs_gf: f64,
    /// `θ(X, Y) + g(F X, Y)`.
    pub theta_vs_gf_flipped: f64,
}

pub fn kahler_chart() -> Arc<Chart> {
    Arc::new(Chart::with_names(&["x2", "x3"], &["v", "y5"]).expect("static chart"))
}

/// Builds the example. `g` must depend on `x3` only; `w`, `n` default to zero.
pub fn kahler_example(
    a: f64,
    g: &ScalarField,
    reading: H4Reading,
    q: (i32, i32),
    ncon: Option<NConnection>,
) -> Result<KahlerExample> {
    let chart = g.chart().clone();
    if chart.n() != 2 || chart.m() != 2 {
        return Err(Error::Shape(
            "the example lives on a chart with n = m = 2".into(),
        ));
    }
    if (0..chart.dim()).any(|k| k != X3 && g.depends_on(k)) {
        return Err(Error::Shape("g may depend on x3 only".into()));
    }
    if a == 0.0 || !a.is_finite() {
        return Err(Error::Degenerate("a must be a nonzero constant".into()));
    }
    if q.0 == 0 || q.1 == 0 {
        return Err(Error::Shape("q1 and q2 must be nonzero".into()));
    }
    let v = ScalarField::coordinate(&chart, chart.name(V4))?;
    let vk = match reading {
        H4Reading::GV2 => v.powf(2.0),
        H4Reading::GV => v,
    };
    let h4 = g
        .scale(a * a)
        .div(&g.mul(&vk).apply(crate::expr::Func::Abs));
    let varpi = h4.powf(q.1 as f64 / q.0 as f64);
    let zero = ScalarField::constant(&chart, 0.0);
    let ncon = ncon.unwrap_or_else(|| NConnection::zero(&chart));
    let dmetric = DMetric::diagonal(
        vec![varpi.mul(g), zero.clone()],
        vec![varpi.mul(&h4), zero],
        ncon,
    )?;
    Ok(KahlerExample {
        a,
        g: g.clone(),
        h4,
        varpi,
        reading,
        dmetric,
    })
}

impl KahlerExample {
    fn g_at(&self, p: &[f64]) -> Result<f64> {
        if p[V4] == 0.0 {
            return Err(Error::Degenerate("the example is singular at v = 0".into()));
        }
        let g = self.g.eval_coords(p)?;
        if g == 0.0 {
            return Err(Error::Degenerate(format!("g vanishes at x3 = {}", p[X3])));
        }
        Ok(g)
    }

    /// `√|g v²| / a`.
    pub fn scale(&self, p: &[f64]) -> Result<f64> {
        let g = self.g_at(p)?;
        Ok((g * p[V4] * p[V4]).abs().sqrt() / self.a)
    }

    pub fn ode_residual(&self, p: &[f64]) -> Result<f64> {
        let j = jet_eval(&self.g, p, 2)?;
        Ok(2.0 * j.value() * j.hess(X3, X3) - j.d(X3).powi(2))
    }

    /// `F(h2, h3, v4, v5) = (−v4/s, −v5/s, s h2, s h3)`.
    pub fn apply_f(&self, p: &[f64], x: &DVector) -> Result<DVector> {
        let s = self.scale(p)?;
        Ok(DVector::new(
            vec![-x.v[0] / s, -x.v[1] / s],
            vec![s * x.h[0], s * x.h[1]],
        ))
    }

    /// `θ(X, Y) = ϖ g a/√|g v²| (X⁴Y² − X²Y⁴)`.
    pub fn theta(&self, p: &[f64], x: &DVector, y: &DVector) -> Result<f64> {
        let c = self.varpi.eval_coords(p)? * self.g_at(p)? / self.scale(p)?;
        Ok(c * (x.v[0] * y.h[0] - x.h[0] * y.v[0]))
    }

    /// The degenerate block metric on d-vectors.
    pub fn metric(&self, p: &[f64], x: &DVector, y: &DVector) -> Result<f64> {
        let w = self.varpi.eval_coords(p)?;
        Ok(w * (self.g_at(p)? * x.h[0] * y.h[0] + self.h4.eval_coords(p)? * x.v[0] * y.v[0]))
    }

    /// Worst residuals over `points`, with `pairs` random d-vector pairs per point.
    pub fn checks(&self, points: &[Vec<f64>], pairs: usize, seed: u64) -> Result<KahlerChecks> {
        let mut rng = Sampler::new(seed);
        let mut out = KahlerChecks::default();
        let up = |m: &mut f64, x: f64| *m = m.max(x.abs());
        for p in points {
            up(&mut out.ode, self.ode_residual(p)?);
            for _ in 0..pairs {
                let x = DVector::from_flat(2, &rng.vector(4, -1.0, 1.0));
                let y = DVector::from_flat(2, &rng.vector(4, -1.0, 1.0));
                let ffx = self.apply_f(p, &self.apply_f(p, &x)?)?;
                for (a, b) in ffx.flat().iter().zip(x.flat()) {
                    up(&mut out.f_squared, a + b);
                }
                let txy = self.theta(p, &x, &y)?;
                up(&mut out.theta_antisymmetry, txy + self.theta(p, &y, &x)?);
                up(&mut out.theta_diagonal, self.theta(p, &x, &x)?);
                let gfxy = self.metric(p, &self.apply_f(p, &x)?, &y)?;
                up(&mut out.theta_vs_gf, txy - gfxy);
                up(&mut out.theta_vs_gf_flipped, txy + gfxy);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solutions::SampleWindow;

    fn window() -> Vec<Vec<f64>> {
        SampleWindow::new(
            vec![-1.0, 0.5, 0.5, 0.0],
            vec![1.0, 2.0, 2.0, 0.0],
            vec![3, 4, 4, 1],
        )
        .unwrap()
        .points()
    }

    #[test]
    fn quadratic_seed() {
        let c = kahler_chart();
        let g = ScalarField::parse("x3^2", &c).unwrap();
        let ex = kahler_example(1.5, &g, H4Reading::GV2, (1, 1), None).unwrap();
        let r = ex.checks(&window(), 4, 7).unwrap();
        assert_eq!(r.ode, 0.0);
        assert!(
            r.f_squared < 1e-12 && r.theta_diagonal == 0.0 && r.theta_antisymmetry == 0.0,
            "{r:?}"
        );
        // The displayed θ is −g(F·, ·).
        assert!(r.theta_vs_gf_flipped < 1e-12, "{r:?}");
        assert!(r.theta_vs_gf > 1e-3);
        let gv = kahler_example(1.5, &g, H4Reading::GV, (1, 1), None).unwrap();
        let r = gv.checks(&window(), 4, 7).unwrap();
        assert!(r.theta_vs_gf_flipped > 1e-3);
    }

    #[test]
    fn singular_points_rejected() {
        let c = kahler_chart();
        let g = ScalarField::parse("x3^2", &c).unwrap();
        let ex = kahler_example(1.0, &g, H4Reading::GV2, (1, 1), None).unwrap();
        assert!(matches!(
            ex.scale(&[0.0, 0.0, 1.0, 0.0]),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(
            ex.scale(&[0.0, 1.0, 0.0, 0.0]),
            Err(Error::Degenerate(_))
        ));
        assert!(kahler_example(
            1.0,
            &ScalarField::parse("x2", &c).unwrap(),
            H4Reading::GV2,
            (1, 1),
            None
        )
        .is_err());
    }
}
