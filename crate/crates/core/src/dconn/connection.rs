use std::sync::Arc;

use super::metric::{DMetric, MetricJets};
use crate::expr::ScalarField;
use crate::numerics::{jet_eval, Jet};
use crate::{Error, Result};

/// Which coefficient formulas a [`DConnection`] uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConnectionKind {
    /// The canonical d-connection of a block metric.
    Canonical,
    /// Tangent-bundle model (`m = n`): the v-blocks reuse the h-block
    /// formulas, and both C-blocks are built from the g-block.
    TangentModel,
}

/// Symbolic distortion `P^γ_{αβ}`, stored flat in the same layout as
/// [`Coefficients`]. Missing entries are zero.
#[derive(Debug, Clone)]
pub struct Deformation {
    dim: usize,
    fields: Vec<Option<ScalarField>>,
}

impl Deformation {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            fields: vec![None; dim * dim * dim],
        }
    }

    /// Sets `P^γ_{αβ}` as the coefficient of `e_γ` in `P(e_α) e_β`,
    /// i.e. slot `[gamma][beta][alpha]`.
    pub fn set(&mut self, gamma: usize, beta: usize, alpha: usize, f: ScalarField) {
        let d = self.dim;
        self.fields[(gamma * d + beta) * d + alpha] = Some(f);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn jets(&self, coords: &[f64], order: u8) -> Result<Vec<Jet>> {
        let nv = coords.len();
        self.fields
            .iter()
            .map(|f| match f {
                Some(f) => jet_eval(f, coords, order).map_err(Error::from),
                None => Ok(Jet::constant(0.0, nv, order)),
            })
            .collect()
    }
}

/// A linear connection on the adapted frame of a [`DMetric`]: the canonical
/// or tangent-model d-connection, optionally shifted by a distortion.
#[derive(Debug, Clone)]
pub struct DConnection {
    metric: DMetric,
    kind: ConnectionKind,
    deformation: Option<Arc<Deformation>>,
}

impl DConnection {
    pub fn canonical(metric: &DMetric) -> Self {
        Self {
            metric: metric.clone(),
            kind: ConnectionKind::Canonical,
            deformation: None,
        }
    }

    pub fn tangent_model(metric: &DMetric) -> Result<Self> {
        if metric.n() != metric.m() {
            return Err(Error::Shape("tangent model needs m = n".into()));
        }
        Ok(Self {
            metric: metric.clone(),
            kind: ConnectionKind::TangentModel,
            deformation: None,
        })
    }

    /// `self + P`. The result is a d-connection only when `P` preserves the
    /// splitting.
    pub fn deformed(&self, p: Deformation) -> Result<Self> {
        if p.dim() != self.metric.dim() {
            return Err(Error::Shape("deformation dimension mismatch".into()));
        }
        Ok(Self {
            deformation: Some(Arc::new(p)),
            ..self.clone()
        })
    }

    pub fn metric(&self) -> &DMetric {
        &self.metric
    }

    pub fn kind(&self) -> ConnectionKind {
        self.kind
    }

    pub fn is_deformed(&self) -> bool {
        self.deformation.is_some()
    }

    /// Coefficients at a point as order-1 jets, together with the order-2
    /// metric jets they were built from.
    pub fn at(&self, coords: &[f64]) -> Result<Coefficients> {
        let mj = self.metric.jets(coords, 2)?;
        let mut c = match self.kind {
            ConnectionKind::Canonical => canonical_coefficients(&mj),
            ConnectionKind::TangentModel => tangent_coefficients(&mj),
        };
        if let Some(p) = &self.deformation {
            for (slot, pj) in c.data.iter_mut().zip(p.jets(coords, 1)?) {
                *slot = *slot + pj;
            }
        }
        Ok(c.with_metric(mj))
    }
}

/// Connection coefficients at a point. `get(γ, β, α)` is the component of
/// `D_{e_α} e_β` along `e_γ`, flat frame indices `0..n+m`.
#[derive(Debug, Clone)]
pub struct Coefficients {
    n: usize,
    m: usize,
    data: Vec<Jet>,
    metric: Option<MetricJets>,
}

impl Coefficients {
    pub fn zeros(n: usize, m: usize, nvars: usize, order: u8) -> Self {
        let d = n + m;
        Self {
            n,
            m,
            data: vec![Jet::constant(0.0, nvars, order); d * d * d],
            metric: None,
        }
    }

    pub fn from_fn(n: usize, m: usize, mut f: impl FnMut(usize, usize, usize) -> Jet) -> Self {
        let d = n + m;
        let mut data = Vec::with_capacity(d * d * d);
        for g in 0..d {
            for b in 0..d {
                for a in 0..d {
                    data.push(f(g, b, a));
                }
            }
        }
        Self {
            n,
            m,
            data,
            metric: None,
        }
    }

    fn with_metric(mut self, mj: MetricJets) -> Self {
        self.metric = Some(mj);
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.n + self.m
    }

    #[inline]
    pub fn get(&self, gamma: usize, beta: usize, alpha: usize) -> &Jet {
        let d = self.dim();
        &self.data[(gamma * d + beta) * d + alpha]
    }

    pub fn set(&mut self, gamma: usize, beta: usize, alpha: usize, j: Jet) {
        let d = self.dim();
        self.data[(gamma * d + beta) * d + alpha] = j;
    }

    pub fn value(&self, gamma: usize, beta: usize, alpha: usize) -> f64 {
        self.get(gamma, beta, alpha).value()
    }

    /// Metric jets, present when built by [`DConnection::at`].
    pub fn metric(&self) -> Option<&MetricJets> {
        self.metric.as_ref()
    }

    pub(crate) fn metric_or_err(&self) -> Result<&MetricJets> {
        self.metric
            .as_ref()
            .ok_or_else(|| Error::Shape("coefficients carry no metric data".into()))
    }

    /// Block `L^i_{jk}` values `[i][j][k]`.
    pub fn l_h(&self) -> Vec<Vec<Vec<f64>>> {
        let n = self.n;
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|k| self.value(i, j, k)).collect())
                    .collect()
            })
            .collect()
    }

    /// Block `L^a_{bk}` values `[a][b][k]`.
    pub fn l_v(&self) -> Vec<Vec<Vec<f64>>> {
        let (n, m) = (self.n, self.m);
        (0..m)
            .map(|a| {
                (0..m)
                    .map(|b| (0..n).map(|k| self.value(n + a, n + b, k)).collect())
                    .collect()
            })
            .collect()
    }

    /// Block `C^i_{jc}` values `[i][j][c]`.
    pub fn c_h(&self) -> Vec<Vec<Vec<f64>>> {
        let (n, m) = (self.n, self.m);
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..m).map(|c| self.value(i, j, n + c)).collect())
                    .collect()
            })
            .collect()
    }

    /// Block `C^a_{bc}` values `[a][b][c]`.
    pub fn c_v(&self) -> Vec<Vec<Vec<f64>>> {
        let (n, m) = (self.n, self.m);
        (0..m)
            .map(|a| {
                (0..m)
                    .map(|b| (0..m).map(|c| self.value(n + a, n + b, n + c)).collect())
                    .collect()
            })
            .collect()
    }

    /// Max componentwise difference over every slot.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a.value() - b.value()).abs())
            .fold(0.0, f64::max)
    }
}

fn zero_like(mj: &MetricJets, order: u8) -> Jet {
    Jet::constant(0.0, mj.g[(0, 0)].nvars(), order)
}

/// The canonical d-connection:
///
/// ```text
/// L^i_jk = ½ g^ir (e_k g_jr + e_j g_kr − e_r g_jk)
/// L^a_bk = ∂_b N_k^a + ½ h^ac (e_k h_bc − ∂_b N_k^d h_dc − ∂_c N_k^d h_db)
/// C^i_jc = ½ g^ik ∂_c g_jk
/// C^a_bc = ½ h^ad (∂_c h_bd + ∂_b h_cd − ∂_d h_bc)
/// ```
pub(crate) fn canonical_coefficients(mj: &MetricJets) -> Coefficients {
    let (n, m) = (mj.n(), mj.m());
    let fr = &mj.frame;
    let z = zero_like(mj, 1);
    let mut out = Coefficients::zeros(n, m, z.nvars(), 1);
    let ginv = |i: usize, j: usize| mj.ginv[(i, j)].truncate(1);
    let hinv = |a: usize, b: usize| mj.hinv[(a, b)].truncate(1);
    let eg = |i: usize, j: usize, k: usize| fr.e(&mj.g[(i, j)], k);
    let eh = |a: usize, b: usize, k: usize| fr.e(&mj.h[(a, b)], k);
    let h1 = |a: usize, b: usize| mj.h[(a, b)].truncate(1);

    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let s = (0..n).fold(z, |acc, r| {
                    acc + ginv(i, r) * (eg(j, r, k) + eg(k, r, j) - eg(j, k, r))
                });
                out.set(i, j, k, s * 0.5);
            }
        }
    }
    for a in 0..m {
        for b in 0..m {
            for k in 0..n {
                let s = (0..m).fold(z, |acc, c| {
                    let mut t = eh(b, c, k);
                    for d in 0..m {
                        t = t - fr.dn_dy(d, k, b) * h1(d, c) - fr.dn_dy(d, k, c) * h1(d, b);
                    }
                    acc + hinv(a, c) * t
                });
                out.set(n + a, n + b, k, fr.dn_dy(a, k, b) + s * 0.5);
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            for c in 0..m {
                let s = (0..n).fold(z, |acc, k| acc + ginv(i, k) * eg(j, k, n + c));
                out.set(i, j, n + c, s * 0.5);
            }
        }
    }
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                let s = (0..m).fold(z, |acc, d| {
                    acc + hinv(a, d) * (eh(b, d, n + c) + eh(c, d, n + b) - eh(b, c, n + d))
                });
                out.set(n + a, n + b, n + c, s * 0.5);
            }
        }
    }
    out
}

/// Tangent-bundle model: `(L̂, Ĉ)` from the g-block alone,
/// `Ĉ^i_jk = ½ g^ir (∂_{y^k} g_jr + ∂_{y^j} g_kr − ∂_{y^r} g_jk)`, each used
/// in both the h- and v-positions.
pub(crate) fn tangent_coefficients(mj: &MetricJets) -> Coefficients {
    let n = mj.n();
    let fr = &mj.frame;
    let z = zero_like(mj, 1);
    let mut out = Coefficients::zeros(n, n, z.nvars(), 1);
    let ginv = |i: usize, j: usize| mj.ginv[(i, j)].truncate(1);
    let eg = |i: usize, j: usize, k: usize| fr.e(&mj.g[(i, j)], k);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let l = (0..n).fold(z, |acc, r| {
                    acc + ginv(i, r) * (eg(j, r, k) + eg(k, r, j) - eg(j, k, r))
                }) * 0.5;
                let c = (0..n).fold(z, |acc, r| {
                    acc + ginv(i, r) * (eg(j, r, n + k) + eg(k, r, n + j) - eg(j, k, n + r))
                }) * 0.5;
                out.set(i, j, k, l);
                out.set(n + i, n + j, k, l);
                out.set(i, j, n + k, c);
                out.set(n + i, n + j, n + k, c);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Chart;
    use crate::nconn::NConnection;

    fn sf(s: &str, c: &Arc<Chart>) -> ScalarField {
        ScalarField::parse(s, c).unwrap()
    }

    #[test]
    fn flat_is_zero() {
        let c = Arc::new(Chart::tangent(2).unwrap());
        let one = sf("1", &c);
        let dm =
            DMetric::diagonal(vec![one.clone(); 2], vec![one; 2], NConnection::zero(&c)).unwrap();
        let co = DConnection::canonical(&dm)
            .at(&[0.1, 0.2, 0.3, 0.4])
            .unwrap();
        for g in 0..4 {
            for b in 0..4 {
                for a in 0..4 {
                    assert_eq!(co.value(g, b, a), 0.0);
                }
            }
        }
    }

    #[test]
    fn one_dimensional_christoffel() {
        // g = e^{2x}: L = ½ g⁻¹ g' = 1.
        let c = Arc::new(Chart::with_names(&["x"], &["y"]).unwrap());
        let g = sf("exp(2*x)", &c);
        let h = sf("y^2 + 1", &c);
        let dm = DMetric::diagonal(vec![g], vec![h], NConnection::zero(&c)).unwrap();
        let co = DConnection::canonical(&dm).at(&[0.3, 0.5]).unwrap();
        assert!((co.value(0, 0, 0) - 1.0).abs() < 1e-14);
        let y: f64 = 0.5;
        assert!((co.value(1, 1, 1) - y / (y * y + 1.0)).abs() < 1e-14);
        assert_eq!(co.value(0, 0, 1), 0.0);
    }

    #[test]
    fn y_independent_g_has_no_c_h() {
        let c = Arc::new(Chart::tangent(2).unwrap());
        let ncon = NConnection::parse(&c, &[&["y1*x2", "y2"], &["0", "x1*y1"]]).unwrap();
        let dm = DMetric::diagonal(
            vec![sf("2 + sin(x1)", &c), sf("exp(x2)", &c)],
            vec![sf("1 + y1^2", &c), sf("3", &c)],
            ncon,
        )
        .unwrap();
        let co = DConnection::canonical(&dm)
            .at(&[0.2, -0.1, 0.7, 0.4])
            .unwrap();
        assert!(co.c_h().iter().flatten().flatten().all(|&x| x == 0.0));
    }
}
