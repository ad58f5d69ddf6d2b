//! Geometrization of a regular Lagrangian `L(x, y)` on the tangent-bundle
//! model: Hessian metric, semispray, canonical N-connection, the Sasaki
//! lift, the almost complex structure `F` and the form `θ(X, Y) = g(FX, Y)`.

use std::sync::Arc;

use crate::dconn::DMetric;
use crate::expr::{Chart, Expr, ScalarField};
use crate::nconn::{DVector, NConnection, NField};
use crate::numerics::{invert_with_cond, jet_eval, rk4_step, solve, Jet, JetMatrix};
use crate::{Error, Result};

/// Hessians with a larger 1-norm condition estimate count as singular.
pub const REGULARITY_COND: f64 = 1e10;

/// Trajectory components beyond this magnitude abort integration.
pub const BLOW_UP: f64 = 1e12;

type Mat = Vec<Vec<f64>>;

/// A Lagrangian on a chart with `m = n`, with its derived symbolic fields.
#[derive(Debug, Clone)]
pub struct Lagrangian {
    field: ScalarField,
    /// `g_ij = ½ ∂²L/∂y^i∂y^j`
    g: Vec<Vec<ScalarField>>,
    /// `B_l = ∂²L/∂y^l∂x^k y^k − ∂L/∂x^l`
    b: Vec<ScalarField>,
}

fn coord_field(chart: &Arc<Chart>, i: usize) -> ScalarField {
    ScalarField::new(chart.clone(), Expr::coord(i)).expect("coordinate inside chart")
}

fn eval_matrix(fields: &[Vec<ScalarField>], coords: &[f64]) -> Result<Mat> {
    fields
        .iter()
        .map(|r| {
            r.iter()
                .map(|f| f.eval_coords(coords).map_err(Error::from))
                .collect()
        })
        .collect()
}

fn regular_inverse(g: &Mat) -> Result<Mat> {
    match invert_with_cond(g) {
        Ok((inv, cond)) if cond < REGULARITY_COND => Ok(inv),
        Ok((_, cond)) => Err(Error::Singular {
            what: "Hessian".into(),
            cond,
        }),
        Err(e) => Err(Error::from(e).singular_in("Hessian")),
    }
}

impl Lagrangian {
    pub fn new(field: ScalarField) -> Result<Self> {
        let chart = field.chart().clone();
        let n = chart.n();
        if chart.m() != n {
            return Err(Error::Shape("a Lagrangian needs a chart with m = n".into()));
        }
        let g = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let (p, q) = if i <= j { (i, j) } else { (j, i) };
                        field.partial_field(&[n + p, n + q]).scale(0.5).simplify()
                    })
                    .collect()
            })
            .collect();
        let b = (0..n)
            .map(|l| {
                let mut s = field.partial_field(&[l]).neg();
                for k in 0..n {
                    let t = field
                        .partial_field(&[n + l, k])
                        .mul(&coord_field(&chart, n + k));
                    s = s.add(&t);
                }
                s.simplify()
            })
            .collect();
        Ok(Self { field, g, b })
    }

    pub fn parse(source: &str, chart: &Arc<Chart>) -> Result<Self> {
        Self::new(ScalarField::parse(source, chart)?)
    }

    pub fn chart(&self) -> &Arc<Chart> {
        self.field.chart()
    }

    pub fn n(&self) -> usize {
        self.chart().n()
    }

    pub fn field(&self) -> &ScalarField {
        &self.field
    }

    /// Symbolic `g_ij`.
    pub fn metric_fields(&self) -> &[Vec<ScalarField>] {
        &self.g
    }

    /// Symbolic `B_j = ∂²L/∂y^j∂x^k y^k − ∂L/∂x^j`, so that `G^i = ¼ g^ij B_j`.
    pub fn semispray_numerators(&self) -> &[ScalarField] {
        &self.b
    }

    /// `(g_ij, g^ij)` at a point.
    pub fn hessian_metric(&self, coords: &[f64]) -> Result<(Mat, Mat)> {
        let g = eval_matrix(&self.g, coords)?;
        let inv = regular_inverse(&g)?;
        Ok((g, inv))
    }

    /// `G^i = ¼ g^ij (∂²L/∂y^j∂x^k y^k − ∂L/∂x^j)`.
    pub fn semispray(&self, coords: &[f64]) -> Result<Vec<f64>> {
        let (_, ginv) = self.hessian_metric(coords)?;
        let b = self
            .b
            .iter()
            .map(|f| f.eval_coords(coords).map_err(Error::from))
            .collect::<Result<Vec<_>>>()?;
        Ok(ginv
            .iter()
            .map(|row| 0.25 * row.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>())
            .collect())
    }

    /// `N^i_j = ∂G^i/∂y^j` as a composite N-connection.
    pub fn canonical_nconnection(&self) -> NConnection {
        let n = self.n();
        let dg = (0..n)
            .map(|j| {
                (0..n)
                    .map(|p| {
                        (0..n)
                            .map(|q| self.g[p][q].partial_field(&[n + j]))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let db = (0..n)
            .map(|j| (0..n).map(|l| self.b[l].partial_field(&[n + j])).collect())
            .collect();
        let field = CanonicalN {
            n,
            g: self.g.clone(),
            dg,
            b: self.b.clone(),
            db,
        };
        NConnection::composite(self.chart(), Arc::new(field))
    }

    /// Sasaki lift: both blocks equal to the Hessian metric, N canonical.
    pub fn sasaki_metric(&self) -> Result<DMetric> {
        DMetric::sasaki(self.g.clone(), self.canonical_nconnection())
    }

    /// `θ(X, Y) = g(FX, Y)` in adapted components.
    pub fn symplectic_form(&self, x: &DVector, y: &DVector, coords: &[f64]) -> Result<f64> {
        let (g, _) = self.hessian_metric(coords)?;
        Ok(sasaki_product(&g, &almost_complex_apply(x), y))
    }

    /// Euler relation residual `y^i ∂L/∂y^i − 2L`; zero for 2-homogeneous L.
    pub fn homogeneity_residual(&self, coords: &[f64]) -> Result<f64> {
        let n = self.n();
        let mut s = -2.0 * self.field.eval_coords(coords)?;
        for i in 0..n {
            s += coords[n + i] * self.field.eval_partial(&[n + i], coords)?;
        }
        Ok(s)
    }

    /// Integrates `ẍ + 2G(x, ẋ) = 0` and, independently, the Euler–Lagrange
    /// system `2 g_ij ẍ^j = ∂L/∂x^i − ∂²L/∂y^i∂x^j ẋ^j` (solved by LU) with
    /// RK4, returning the max-norm distance between the trajectories.
    pub fn euler_lagrange_check(
        &self,
        x0: &[f64],
        y0: &[f64],
        steps: usize,
        h: f64,
    ) -> Result<ElCheck> {
        let n = self.n();
        if x0.len() != n || y0.len() != n {
            return Err(Error::Shape(format!(
                "initial data needs {n} + {n} components"
            )));
        }
        let geodesic = |s: &[f64]| -> Result<Vec<f64>> {
            let g = self.semispray(s)?;
            Ok(s[n..]
                .iter()
                .copied()
                .chain(g.iter().map(|v| -2.0 * v))
                .collect())
        };
        let euler_lagrange = |s: &[f64]| -> Result<Vec<f64>> {
            let hess = eval_matrix(&self.g, s)?;
            regular_inverse(&hess)?;
            let two_g: Mat = hess
                .iter()
                .map(|r| r.iter().map(|v| 2.0 * v).collect())
                .collect();
            let mut rhs = vec![0.0; n];
            for (i, r) in rhs.iter_mut().enumerate() {
                *r = self.field.eval_partial(&[i], s)?;
                for j in 0..n {
                    *r -= self.field.eval_partial(&[n + i, j], s)? * s[n + j];
                }
            }
            let acc = solve(&two_g, &rhs).map_err(|e| Error::from(e).singular_in("Hessian"))?;
            Ok(s[n..].iter().copied().chain(acc).collect())
        };
        let mut a: Vec<f64> = x0.iter().chain(y0).copied().collect();
        let mut b = a.clone();
        let mut worst: f64 = 0.0;
        for step in 1..=steps {
            a = rk4_step(&a, geodesic, h)?;
            b = rk4_step(&b, euler_lagrange, h)?;
            if a.iter().chain(&b).any(|v| v.abs() > BLOW_UP) {
                return Err(Error::BlowUp { step });
            }
            let dev = a
                .iter()
                .zip(&b)
                .fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
            worst = worst.max(dev);
        }
        Ok(ElCheck {
            max_deviation: worst,
            geodesic_end: a,
            euler_lagrange_end: b,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElCheck {
    pub max_deviation: f64,
    /// Final `(x, ẋ)` of the semispray route.
    pub geodesic_end: Vec<f64>,
    /// Final `(x, ẋ)` of the Euler–Lagrange route.
    pub euler_lagrange_end: Vec<f64>,
}

/// Composite `N^a_j = ¼ g^ap (∂_{y^j} B_p − ∂_{y^j} g_pq g^ql B_l)`.
struct CanonicalN {
    n: usize,
    g: Vec<Vec<ScalarField>>,
    /// `[j][p][q] = ∂g_pq/∂y^j`
    dg: Vec<Vec<Vec<ScalarField>>>,
    b: Vec<ScalarField>,
    /// `[j][l] = ∂B_l/∂y^j`
    db: Vec<Vec<ScalarField>>,
}

impl NField for CanonicalN {
    fn jets(&self, coords: &[f64], order: u8) -> Result<Vec<Vec<Jet>>> {
        let n = self.n;
        let je = |f: &ScalarField| jet_eval(f, coords, order).map_err(Error::from);
        regular_inverse(&eval_matrix(&self.g, coords)?)?;
        let mut gm = JetMatrix::zeros(n, n, coords.len(), order);
        for p in 0..n {
            for q in 0..n {
                gm[(p, q)] = je(&self.g[p][q])?;
            }
        }
        let ginv = gm
            .inverse()
            .map_err(|e| Error::from(e).singular_in("Hessian"))?;
        let b = self.b.iter().map(je).collect::<Result<Vec<_>>>()?;
        let z = Jet::constant(0.0, coords.len(), order);
        let u: Vec<Jet> = (0..n)
            .map(|q| (0..n).fold(z, |acc, l| acc + ginv[(q, l)] * b[l]))
            .collect();
        let mut out = vec![vec![z; n]; n];
        for j in 0..n {
            let mut inner = Vec::with_capacity(n);
            for p in 0..n {
                let mut s = je(&self.db[j][p])?;
                for (q, uq) in u.iter().enumerate() {
                    if !self.dg[j][p][q].body().is_zero() {
                        s = s - je(&self.dg[j][p][q])? * *uq;
                    }
                }
                inner.push(s);
            }
            for (a, row) in out.iter_mut().enumerate() {
                row[j] = (0..n).fold(z, |acc, p| acc + ginv[(a, p)] * inner[p]) * 0.25;
            }
        }
        Ok(out)
    }

    fn describe(&self, a: usize, i: usize) -> String {
        format!("dG^{}/dy^{} of the Lagrangian", a + 1, i + 1)
    }
}

/// Directly supplied `(g_ij, N^i_j)`, bypassing a Lagrangian.
#[derive(Debug, Clone)]
pub struct GeneralizedLagrange {
    pub g: Vec<Vec<ScalarField>>,
    pub ncon: NConnection,
}

impl GeneralizedLagrange {
    pub fn new(g: Vec<Vec<ScalarField>>, ncon: NConnection) -> Result<Self> {
        // Validates shape and symmetry through the lift.
        DMetric::sasaki(g.clone(), ncon.clone())?;
        Ok(Self { g, ncon })
    }

    pub fn sasaki_metric(&self) -> Result<DMetric> {
        DMetric::sasaki(self.g.clone(), self.ncon.clone())
    }

    pub fn symplectic_form(&self, x: &DVector, y: &DVector, coords: &[f64]) -> Result<f64> {
        let g = eval_matrix(&self.g, coords)?;
        Ok(sasaki_product(&g, &almost_complex_apply(x), y))
    }
}

/// `F(h, v) = (−v, h)`: `F e_i = e_{n+i}`, `F e_{n+i} = −e_i`.
pub fn almost_complex_apply(x: &DVector) -> DVector {
    DVector::new(x.v.iter().map(|c| -c).collect(), x.h.clone())
}

/// `g_ij X^i Y^j + g_ab X^a Y^b` with both blocks equal to `g`.
pub fn sasaki_product(g: &[Vec<f64>], x: &DVector, y: &DVector) -> f64 {
    let n = g.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += g[i][j] * (x.h[i] * y.h[j] + x.v[i] * y.v[j]);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Sampler;

    fn chart() -> Arc<Chart> {
        Arc::new(Chart::tangent(2).unwrap())
    }

    const CONFORMAL: &str = "exp(2*x1)*(y1^2 + y2^2)";
    const OFFDIAG: &str = "(2 + sin(x1))*y1^2 + cos(x2)*y1*y2 + (2 + cos(x1))*y2^2";

    #[test]
    fn flat_lagrangian() {
        let lag = Lagrangian::parse("y1^2 + y2^2", &chart()).unwrap();
        let p = [0.3, 0.1, 0.7, -0.2];
        let (g, _) = lag.hessian_metric(&p).unwrap();
        assert_eq!(g, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(lag.semispray(&p).unwrap(), vec![0.0, 0.0]);
        assert!(lag
            .canonical_nconnection()
            .values(&p)
            .unwrap()
            .iter()
            .flatten()
            .all(|&v| v == 0.0));
        assert!(lag.homogeneity_residual(&p).unwrap().abs() < 1e-15);
    }

    #[test]
    fn conformal_semispray_and_n() {
        let lag = Lagrangian::parse(CONFORMAL, &chart()).unwrap();
        let (y1, y2) = (0.7, -0.4);
        let p = [0.25, -0.6, y1, y2];
        let g = lag.semispray(&p).unwrap();
        assert!((g[0] - 0.5 * (y1 * y1 - y2 * y2)).abs() < 1e-13);
        assert!((g[1] - y1 * y2).abs() < 1e-13);
        let nv = lag.canonical_nconnection().values(&p).unwrap();
        let expect = [[y1, -y2], [y2, y1]];
        for a in 0..2 {
            for j in 0..2 {
                assert!((nv[a][j] - expect[a][j]).abs() < 1e-13, "{nv:?}");
            }
        }
    }

    /// Christoffels of `a_ij(x)` by central differences.
    fn christoffel_fd(lag: &Lagrangian, x: &[f64]) -> Vec<Vec<Vec<f64>>> {
        let at = |x: &[f64]| lag.hessian_metric(&[x[0], x[1], 0.0, 0.0]).unwrap();
        let eps = 1e-5;
        let da: Vec<Mat> = (0..2)
            .map(|k| {
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[k] += eps;
                xm[k] -= eps;
                let (gp, _) = at(&xp);
                let (gm, _) = at(&xm);
                (0..2)
                    .map(|i| {
                        (0..2)
                            .map(|j| (gp[i][j] - gm[i][j]) / (2.0 * eps))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let (_, ginv) = at(x);
        (0..2)
            .map(|i| {
                (0..2)
                    .map(|j| {
                        (0..2)
                            .map(|k| {
                                0.5 * (0..2)
                                    .map(|l| ginv[i][l] * (da[j][l][k] + da[k][l][j] - da[l][j][k]))
                                    .sum::<f64>()
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn quadratic_lagrangian_matches_christoffels() {
        let lag = Lagrangian::parse(OFFDIAG, &chart()).unwrap();
        let ncon = lag.canonical_nconnection();
        let mut s = Sampler::new(7);
        for _ in 0..10 {
            let p = s.vector(4, -1.0, 1.0);
            let gam = christoffel_fd(&lag, &p[..2]);
            let y = &p[2..];
            let g = lag.semispray(&p).unwrap();
            let nv = ncon.values(&p).unwrap();
            for i in 0..2 {
                let mut gi = 0.0;
                for j in 0..2 {
                    let mut nij = 0.0;
                    for k in 0..2 {
                        gi += 0.5 * gam[i][j][k] * y[j] * y[k];
                        nij += gam[i][j][k] * y[k];
                    }
                    assert!((nv[i][j] - nij).abs() < 1e-8);
                }
                assert!((g[i] - gi).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn composite_n_derivatives_match_finite_differences() {
        let lag = Lagrangian::parse("exp(x2)*y1^4/12 + y2^2*(1 + x1^2) + y1*y2", &chart()).unwrap();
        let ncon = lag.canonical_nconnection();
        let p = [0.2, 0.3, 0.8, -0.5];
        let jets = ncon.jets(&p, 2).unwrap();
        let eps = 1e-5;
        for k in 0..4 {
            let mut pp = p;
            let mut pm = p;
            pp[k] += eps;
            pm[k] -= eps;
            let vp = ncon.values(&pp).unwrap();
            let vm = ncon.values(&pm).unwrap();
            let jp = ncon.jets(&pp, 1).unwrap();
            let jm = ncon.jets(&pm, 1).unwrap();
            for a in 0..2 {
                for i in 0..2 {
                    let fd = (vp[a][i] - vm[a][i]) / (2.0 * eps);
                    assert!((jets[a][i].d(k) - fd).abs() < 1e-6, "d{k} N[{a}][{i}]");
                    for l in 0..4 {
                        let fd2 = (jp[a][i].d(l) - jm[a][i].d(l)) / (2.0 * eps);
                        assert!((jets[a][i].hess(k, l) - fd2).abs() < 1e-5);
                    }
                }
            }
        }
    }

    #[test]
    fn singular_hessian_reported() {
        let lag = Lagrangian::parse("y1^2 + x1*y2^2", &chart()).unwrap();
        let err = lag.hessian_metric(&[0.0, 0.0, 1.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::Singular { .. }), "{err:?}");
        assert!(lag
            .canonical_nconnection()
            .values(&[0.0, 0.0, 1.0, 1.0])
            .is_err());
        let off = Lagrangian::parse("y1*y2", &chart()).unwrap();
        let (g, _) = off.hessian_metric(&[0.0; 4]).unwrap();
        assert_eq!(g, vec![vec![0.0, 0.5], vec![0.5, 0.0]]);
    }

    #[test]
    fn complex_structure_and_form() {
        let lag = Lagrangian::parse("y1^2 + y2^2", &chart()).unwrap();
        let p = [0.0; 4];
        let e1 = DVector::basis(2, 2, 0);
        let ve1 = DVector::basis(2, 2, 2);
        assert_eq!(almost_complex_apply(&e1), ve1);
        assert_eq!(lag.symplectic_form(&e1, &ve1, &p).unwrap(), 1.0);
        assert_eq!(lag.symplectic_form(&ve1, &e1, &p).unwrap(), -1.0);
        let conf = Lagrangian::parse(CONFORMAL, &chart()).unwrap();
        let mut s = Sampler::new(3);
        for _ in 0..20 {
            let q = s.vector(4, -1.0, 1.0);
            let x = DVector::from_flat(2, &s.vector(4, -2.0, 2.0));
            let y = DVector::from_flat(2, &s.vector(4, -2.0, 2.0));
            assert_eq!(almost_complex_apply(&almost_complex_apply(&x)), x.neg());
            let t = conf.symplectic_form(&x, &y, &q).unwrap()
                + conf.symplectic_form(&y, &x, &q).unwrap();
            assert!(t.abs() < 1e-12);
            let (g, _) = conf.hessian_metric(&q).unwrap();
            let herm = sasaki_product(&g, &almost_complex_apply(&x), &almost_complex_apply(&y))
                - sasaki_product(&g, &x, &y);
            assert!(herm.abs() < 1e-12);
        }
    }

    #[test]
    fn geodesics_agree() {
        let flat = Lagrangian::parse("y1^2 + y2^2", &chart()).unwrap();
        let r = flat
            .euler_lagrange_check(&[0.0, 0.0], &[1.0, 0.5], 1000, 1e-3)
            .unwrap();
        assert!(r.max_deviation <= 1e-10);
        assert!((r.geodesic_end[0] - 1.0).abs() < 1e-10);
        let conf = Lagrangian::parse(CONFORMAL, &chart()).unwrap();
        let r = conf
            .euler_lagrange_check(&[0.1, -0.2], &[0.4, 0.3], 1000, 1e-3)
            .unwrap();
        assert!(r.max_deviation <= 1e-7, "{}", r.max_deviation);
        let r = conf
            .euler_lagrange_check(&[0.1, -0.2], &[0.0, 0.0], 100, 1e-3)
            .unwrap();
        assert_eq!(r.max_deviation, 0.0);
        assert_eq!(r.geodesic_end, vec![0.1, -0.2, 0.0, 0.0]);
    }

    #[test]
    fn blow_up_detected() {
        // ẍ1 = 2 x1³ escapes in finite time with a constant Hessian.
        let lag = Lagrangian::parse("y1^2 + y2^2 + x1^4", &chart()).unwrap();
        let err = lag
            .euler_lagrange_check(&[10.0, 0.0], &[0.0, 0.0], 100_000, 1e-3)
            .unwrap_err();
        assert!(
            matches!(err, Error::BlowUp { .. } | Error::Numerics(_)),
            "{err:?}"
        );
    }

    #[test]
    fn sasaki_lift_is_almost_hermitian() {
        use crate::dconn::{
            compat_residuals, levi_civita_and_deformation, theta_components, DConnection,
        };
        for src in [
            CONFORMAL,
            OFFDIAG,
            "exp(x2)*y1^4/12 + y2^2*(1 + x1^2) + y1*y2",
        ] {
            let lag = Lagrangian::parse(src, &chart()).unwrap();
            let dm = lag.sasaki_metric().unwrap();
            let dc = DConnection::canonical(&dm);
            let p = [0.2, -0.3, 0.6, 0.45];
            let co = dc.at(&p).unwrap();
            let theta = theta_components(co.metric().unwrap()).unwrap();
            let r = compat_residuals(&co, Some(&theta)).unwrap();
            assert!(r.dg < 1e-10 && r.dtheta < 1e-10, "{src}: {r:?}");
            let lc = levi_civita_and_deformation(&dc, &p).unwrap();
            assert!(lc.residual < 1e-9, "{src}: {}", lc.residual);
        }
    }
}
