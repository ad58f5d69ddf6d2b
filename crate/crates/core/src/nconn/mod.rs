//! Nonlinear connections: adapted frames `e_i = ∂_i - N_i^a ∂_a`,
//! `e_a = ∂_a`, the N-curvature, anholonomy coefficients and the almost
//! product structure.

mod frame;

use std::fmt;
use std::sync::Arc;

pub use frame::{AdaptedFrame, FrameIndex, HIdx, VIdx};

use crate::expr::{Chart, ScalarField};
use crate::numerics::{jet_eval, Jet};
use crate::{Error, Result};

/// Coefficients `N_i^a` that are not plain expressions, e.g. the canonical
/// N-connection of a Lagrangian, which involves an inverse Hessian.
pub trait NField: Send + Sync {
    /// Jets of `N_i^a` at `coords`, indexed `[a][i]`.
    fn jets(&self, coords: &[f64], order: u8) -> Result<Vec<Vec<Jet>>>;

    /// Human-readable description of entry `[a][i]`.
    fn describe(&self, a: usize, i: usize) -> String;
}

#[derive(Clone)]
enum Source {
    Symbolic(Vec<Vec<ScalarField>>),
    Composite(Arc<dyn NField>),
}

/// An N-connection over a chart, stored as the `m × n` matrix `N_i^a`.
#[derive(Clone)]
pub struct NConnection {
    chart: Arc<Chart>,
    source: Source,
}

impl fmt::Debug for NConnection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<String>> = (0..self.m())
            .map(|a| (0..self.n()).map(|i| self.describe(a, i)).collect())
            .collect();
        f.debug_struct("NConnection").field("N", &rows).finish()
    }
}

impl NConnection {
    /// `entries[a][i] = N_i^a`.
    pub fn symbolic(chart: &Arc<Chart>, entries: Vec<Vec<ScalarField>>) -> Result<Self> {
        if entries.len() != chart.m() || entries.iter().any(|r| r.len() != chart.n()) {
            return Err(Error::Shape(format!(
                "N-connection needs {} rows of {} entries",
                chart.m(),
                chart.n()
            )));
        }
        if entries.iter().flatten().any(|f| f.chart() != chart) {
            return Err(Error::Shape(
                "N-connection entry over a different chart".into(),
            ));
        }
        Ok(Self {
            chart: chart.clone(),
            source: Source::Symbolic(entries),
        })
    }

    /// Parses `rows[a][i]` as `N_i^a`.
    pub fn parse(chart: &Arc<Chart>, rows: &[&[&str]]) -> Result<Self> {
        let entries = rows
            .iter()
            .map(|r| r.iter().map(|s| ScalarField::parse(s, chart)).collect())
            .collect::<std::result::Result<Vec<Vec<_>>, _>>()?;
        Self::symbolic(chart, entries)
    }

    pub fn zero(chart: &Arc<Chart>) -> Self {
        let z = ScalarField::constant(chart, 0.0);
        Self {
            chart: chart.clone(),
            source: Source::Symbolic(vec![vec![z; chart.n()]; chart.m()]),
        }
    }

    pub fn composite(chart: &Arc<Chart>, field: Arc<dyn NField>) -> Self {
        Self {
            chart: chart.clone(),
            source: Source::Composite(field),
        }
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn n(&self) -> usize {
        self.chart.n()
    }

    pub fn m(&self) -> usize {
        self.chart.m()
    }

    /// Symbolic entries `[a][i]`, when available.
    pub fn entries(&self) -> Option<&[Vec<ScalarField>]> {
        match &self.source {
            Source::Symbolic(e) => Some(e),
            Source::Composite(_) => None,
        }
    }

    pub fn describe(&self, a: usize, i: usize) -> String {
        match &self.source {
            Source::Symbolic(e) => e[a][i].to_string(),
            Source::Composite(c) => c.describe(a, i),
        }
    }

    /// Jets of `N_i^a`, indexed `[a][i]`.
    pub fn jets(&self, coords: &[f64], order: u8) -> Result<Vec<Vec<Jet>>> {
        match &self.source {
            Source::Symbolic(e) => e
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|f| jet_eval(f, coords, order).map_err(Error::from))
                        .collect()
                })
                .collect(),
            Source::Composite(c) => c.jets(coords, order),
        }
    }

    pub fn values(&self, coords: &[f64]) -> Result<Vec<Vec<f64>>> {
        Ok(self
            .jets(coords, 0)?
            .iter()
            .map(|r| r.iter().map(Jet::value).collect())
            .collect())
    }

    /// Adapted frame data at a point, with N carried to `order`.
    pub fn frame_at(&self, coords: &[f64], order: u8) -> Result<AdaptedFrame> {
        AdaptedFrame::new(self.n(), self.m(), self.jets(coords, order)?)
    }
}

/// `e_α f` at `coords`.
pub fn adapted_derivative(
    ncon: &NConnection,
    f: &ScalarField,
    index: FrameIndex,
    coords: &[f64],
) -> Result<f64> {
    let frame = ncon.frame_at(coords, 0)?;
    let fj = jet_eval(f, coords, 1)?;
    Ok(frame.e(&fj, index.flat(ncon.n())).value())
}

/// `Ω^a_{ij} = ∂_j N_i^a - ∂_i N_j^a + N_i^b ∂_b N_j^a - N_j^b ∂_b N_i^a`,
/// indexed `[a][i][j]`.
pub fn n_curvature(ncon: &NConnection, coords: &[f64]) -> Result<Vec<Vec<Vec<f64>>>> {
    Ok(ncon.frame_at(coords, 1)?.omega())
}

/// Anholonomy coefficients `W^γ_{αβ}` with `[e_α, e_β] = W^γ_{αβ} e_γ`,
/// flat-indexed `[γ][α][β]`.
pub fn anholonomy(ncon: &NConnection, coords: &[f64]) -> Result<Vec<Vec<Vec<f64>>>> {
    Ok(ncon.frame_at(coords, 1)?.anholonomy())
}

/// Applies `e_α` to a symbolic field, producing a new symbolic field.
fn apply_symbolic(
    entries: &[Vec<ScalarField>],
    n: usize,
    f: &ScalarField,
    alpha: usize,
) -> ScalarField {
    let chart = f.chart();
    if alpha >= n {
        return f.partial_field(&[alpha]);
    }
    let mut out = f.partial_field(&[alpha]);
    for (a, row) in entries.iter().enumerate() {
        let term = row[alpha].mul(&f.partial_field(&[chart.v_index(a)]));
        out = out.sub(&term);
    }
    out
}

/// `(e_α(e_β f) - e_β(e_α f))(p)` by nested application of the frame
/// operators. Symbolic connections are differentiated symbolically; composite
/// ones go through jets.
pub fn bracket_oracle(
    ncon: &NConnection,
    alpha: FrameIndex,
    beta: FrameIndex,
    f: &ScalarField,
    coords: &[f64],
) -> Result<f64> {
    let n = ncon.n();
    let (a, b) = (alpha.flat(n), beta.flat(n));
    match ncon.entries() {
        Some(entries) => {
            let eb = apply_symbolic(entries, n, f, b);
            let ea = apply_symbolic(entries, n, f, a);
            let eab = apply_symbolic(entries, n, &eb, a);
            let eba = apply_symbolic(entries, n, &ea, b);
            Ok(eab.eval_coords(coords)? - eba.eval_coords(coords)?)
        }
        None => {
            let frame = ncon.frame_at(coords, 1)?;
            let fj = jet_eval(f, coords, 2)?;
            let eb = frame.e(&fj, b);
            let ea = frame.e(&fj, a);
            Ok(frame.e(&eb, a).value() - frame.e(&ea, b).value())
        }
    }
}

/// A vector with components in the adapted frame `(e_i, e_a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DVector {
    pub h: Vec<f64>,
    pub v: Vec<f64>,
}

impl DVector {
    pub fn new(h: Vec<f64>, v: Vec<f64>) -> Self {
        Self { h, v }
    }

    pub fn zero(n: usize, m: usize) -> Self {
        Self::new(vec![0.0; n], vec![0.0; m])
    }

    /// Unit vector along the flat frame index `alpha`.
    pub fn basis(n: usize, m: usize, alpha: usize) -> Self {
        let mut x = Self::zero(n, m);
        if alpha < n {
            x.h[alpha] = 1.0;
        } else {
            x.v[alpha - n] = 1.0;
        }
        x
    }

    pub fn from_flat(n: usize, flat: &[f64]) -> Self {
        Self::new(flat[..n].to_vec(), flat[n..].to_vec())
    }

    pub fn flat(&self) -> Vec<f64> {
        self.h.iter().chain(&self.v).copied().collect()
    }

    pub fn neg(&self) -> Self {
        Self::new(
            self.h.iter().map(|x| -x).collect(),
            self.v.iter().map(|x| -x).collect(),
        )
    }
}

/// Almost product structure `P = H - V`: `(h, v) ↦ (h, -v)`.
pub fn almost_product(x: &DVector) -> DVector {
    DVector::new(x.h.clone(), x.v.iter().map(|c| -c).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chart11() -> Arc<Chart> {
        Arc::new(Chart::with_names(&["x1"], &["y1"]).unwrap())
    }

    #[test]
    fn holonomic_limit() {
        let c = Arc::new(Chart::tangent(2).unwrap());
        let ncon = NConnection::zero(&c);
        let f = ScalarField::parse("x1^2*y2 + sin(x2)", &c).unwrap();
        let p = [0.3, 0.7, -1.1, 2.0];
        let e0 = adapted_derivative(&ncon, &f, FrameIndex::h(0), &p).unwrap();
        assert!((e0 - 2.0 * 0.3 * 2.0).abs() < 1e-15);
        let w = anholonomy(&ncon, &p).unwrap();
        assert!(w.iter().flatten().flatten().all(|&x| x == 0.0));
        for a in 0..4 {
            for b in 0..4 {
                let r = bracket_oracle(
                    &ncon,
                    FrameIndex::from_flat(2, a),
                    FrameIndex::from_flat(2, b),
                    &f,
                    &p,
                )
                .unwrap();
                assert_eq!(r, 0.0);
            }
        }
    }

    #[test]
    fn linear_vertical_connection() {
        let c = chart11();
        let ncon = NConnection::parse(&c, &[&["y1"]]).unwrap();
        let f = ScalarField::parse("y1", &c).unwrap();
        let e = adapted_derivative(&ncon, &f, FrameIndex::h(0), &[0.4, 1.5]).unwrap();
        assert_eq!(e, -1.5);
    }

    #[test]
    fn y_only_connection_curvature() {
        let c = Arc::new(Chart::with_names(&["x1", "x2"], &["y1"]).unwrap());
        let ncon = NConnection::parse(&c, &[&["y1^2", "sin(y1)"]]).unwrap();
        let p = [0.2, -0.4, 0.9];
        let om = n_curvature(&ncon, &p).unwrap();
        let y: f64 = 0.9;
        let (n1, n2, d1, d2) = (y * y, y.sin(), 2.0 * y, y.cos());
        let expect = n1 * d2 - n2 * d1;
        assert!((om[0][0][1] - expect).abs() < 1e-14);
        assert_eq!(om[0][0][1], -om[0][1][0]);
        assert_eq!(om[0][0][0], 0.0);
    }

    #[test]
    fn almost_product_is_involution() {
        let x = DVector::new(vec![1.0, 2.0], vec![3.0]);
        assert_eq!(almost_product(&almost_product(&x)), x);
        assert_eq!(
            almost_product(&DVector::new(vec![0.0, 0.0], vec![3.0])),
            DVector::new(vec![0.0, 0.0], vec![-3.0])
        );
    }
}
