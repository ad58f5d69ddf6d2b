use std::sync::Arc;

use crate::expr::{Chart, ScalarField};
use crate::nconn::{AdaptedFrame, NConnection};
use crate::numerics::{invert_values, invert_with_cond, jet_eval, Jet, JetMatrix};
use crate::{Error, Result};

/// Block metric `g = g_ij dx^i dx^j + h_ab δy^a δy^b` with its N-connection.
#[derive(Debug, Clone)]
pub struct DMetric {
    chart: Arc<Chart>,
    g: Vec<Vec<ScalarField>>,
    h: Vec<Vec<ScalarField>>,
    ncon: NConnection,
}

fn check_block(
    name: &str,
    block: &[Vec<ScalarField>],
    size: usize,
    chart: &Arc<Chart>,
) -> Result<()> {
    if block.len() != size || block.iter().any(|r| r.len() != size) {
        return Err(Error::Shape(format!("{name}-block must be {size}x{size}")));
    }
    for i in 0..size {
        for j in 0..i {
            if block[i][j].body() != block[j][i].body() {
                return Err(Error::Shape(format!(
                    "{name}-block is not symmetric at ({}, {})",
                    j + 1,
                    i + 1
                )));
            }
        }
    }
    if block.iter().flatten().any(|f| f.chart() != chart) {
        return Err(Error::Shape(format!(
            "{name}-block entry over a different chart"
        )));
    }
    Ok(())
}

impl DMetric {
    pub fn new(
        g: Vec<Vec<ScalarField>>,
        h: Vec<Vec<ScalarField>>,
        ncon: NConnection,
    ) -> Result<Self> {
        let chart = ncon.chart().clone();
        check_block("g", &g, chart.n(), &chart)?;
        check_block("h", &h, chart.m(), &chart)?;
        Ok(Self { chart, g, h, ncon })
    }

    /// Diagonal blocks from expression lists.
    pub fn diagonal(g: Vec<ScalarField>, h: Vec<ScalarField>, ncon: NConnection) -> Result<Self> {
        let chart = ncon.chart().clone();
        let zero = ScalarField::constant(&chart, 0.0);
        let diag = |d: Vec<ScalarField>| -> Vec<Vec<ScalarField>> {
            let k = d.len();
            (0..k)
                .map(|i| {
                    (0..k)
                        .map(|j| if i == j { d[i].clone() } else { zero.clone() })
                        .collect()
                })
                .collect()
        };
        Self::new(diag(g), diag(h), ncon)
    }

    /// Sasaki-type lift: both blocks equal to `g`.
    pub fn sasaki(g: Vec<Vec<ScalarField>>, ncon: NConnection) -> Result<Self> {
        if ncon.n() != ncon.m() {
            return Err(Error::Shape("Sasaki lift needs m = n".into()));
        }
        Self::new(g.clone(), g, ncon)
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

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn g_fields(&self) -> &[Vec<ScalarField>] {
        &self.g
    }

    pub fn h_fields(&self) -> &[Vec<ScalarField>] {
        &self.h
    }

    pub fn ncon(&self) -> &NConnection {
        &self.ncon
    }

    pub fn with_ncon(&self, ncon: NConnection) -> Result<Self> {
        Self::new(self.g.clone(), self.h.clone(), ncon)
    }

    fn block_jets(block: &[Vec<ScalarField>], coords: &[f64], order: u8) -> Result<JetMatrix> {
        let k = block.len();
        let mut out = Vec::with_capacity(k * k);
        for i in 0..k {
            for j in 0..k {
                out.push(if j < i {
                    None
                } else {
                    Some(jet_eval(&block[i][j], coords, order)?)
                });
            }
        }
        let mut m = JetMatrix::from_fn(k, k, |i, j| {
            out[i * k + j].unwrap_or(Jet::constant(0.0, 0, 0))
        });
        for i in 0..k {
            for j in 0..i {
                m[(i, j)] = m[(j, i)];
            }
        }
        Ok(m)
    }

    /// Metric blocks, their inverses and the frame, all as jets of `order`.
    pub fn jets(&self, coords: &[f64], order: u8) -> Result<MetricJets> {
        let g = Self::block_jets(&self.g, coords, order)?;
        let h = Self::block_jets(&self.h, coords, order)?;
        let ginv = g
            .inverse()
            .map_err(|e| Error::from(e).singular_in("g-block"))?;
        let hinv = h
            .inverse()
            .map_err(|e| Error::from(e).singular_in("h-block"))?;
        let frame = self.ncon.frame_at(coords, order)?;
        Ok(MetricJets {
            g,
            h,
            ginv,
            hinv,
            frame,
        })
    }

    /// Largest condition estimate of the two blocks at a point.
    pub fn block_condition(&self, coords: &[f64]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for block in [&self.g, &self.h] {
            let vals = block
                .iter()
                .map(|r| {
                    r.iter()
                        .map(|f| f.eval_coords(coords))
                        .collect::<std::result::Result<Vec<_>, _>>()
                })
                .collect::<std::result::Result<Vec<_>, _>>()?;
            match invert_with_cond(&vals) {
                Ok((_, c)) => worst = worst.max(c),
                Err(_) => return Ok(f64::INFINITY),
            }
        }
        Ok(worst)
    }
}

/// Jets of a [`DMetric`] at one point.
#[derive(Debug, Clone)]
pub struct MetricJets {
    pub g: JetMatrix,
    pub h: JetMatrix,
    pub ginv: JetMatrix,
    pub hinv: JetMatrix,
    pub frame: AdaptedFrame,
}

impl MetricJets {
    pub fn n(&self) -> usize {
        self.frame.n()
    }

    pub fn m(&self) -> usize {
        self.frame.m()
    }

    /// Adapted-frame metric component `g_{αβ}` (block diagonal).
    pub fn adapted(&self, alpha: usize, beta: usize) -> Option<Jet> {
        let n = self.n();
        match (alpha < n, beta < n) {
            (true, true) => Some(self.g[(alpha, beta)]),
            (false, false) => Some(self.h[(alpha - n, beta - n)]),
            _ => None,
        }
    }

    /// Inverse adapted-frame metric component `g^{αβ}`.
    pub fn adapted_inv(&self, alpha: usize, beta: usize) -> Option<Jet> {
        let n = self.n();
        match (alpha < n, beta < n) {
            (true, true) => Some(self.ginv[(alpha, beta)]),
            (false, false) => Some(self.hinv[(alpha - n, beta - n)]),
            _ => None,
        }
    }
}

/// Coordinate-frame metric: `g_ij + N_i^a N_j^b h_ab`, `N_i^e h_ae`, `h_ab`.
pub fn assemble_coordinate_metric(dm: &DMetric, coords: &[f64], order: u8) -> Result<JetMatrix> {
    let mj = dm.jets_no_inverse(coords, order)?;
    Ok(assemble_from(&mj.0, &mj.1, &mj.2))
}

pub(crate) fn assemble_from(g: &JetMatrix, h: &JetMatrix, frame: &AdaptedFrame) -> JetMatrix {
    let (n, m) = (frame.n(), frame.m());
    let d = n + m;
    let zero = g[(0, 0)] * 0.0;
    JetMatrix::from_fn(d, d, |r, c| match (r < n, c < n) {
        (true, true) => {
            let mut acc = g[(r, c)];
            for a in 0..m {
                for b in 0..m {
                    acc = acc + *frame.nn(a, r) * *frame.nn(b, c) * h[(a, b)];
                }
            }
            acc
        }
        (true, false) => (0..m).fold(zero, |acc, e| acc + *frame.nn(e, r) * h[(c - n, e)]),
        (false, true) => (0..m).fold(zero, |acc, e| acc + *frame.nn(e, c) * h[(r - n, e)]),
        (false, false) => h[(r - n, c - n)],
    })
}

impl DMetric {
    fn jets_no_inverse(
        &self,
        coords: &[f64],
        order: u8,
    ) -> Result<(JetMatrix, JetMatrix, AdaptedFrame)> {
        Ok((
            Self::block_jets(&self.g, coords, order)?,
            Self::block_jets(&self.h, coords, order)?,
            self.ncon.frame_at(coords, order)?,
        ))
    }
}

/// Inverse of [`assemble_coordinate_metric`] on plain values:
/// `h` = bottom-right, `N_i^a = h^{ab} G_{i,b}`, `g = G_hh - N N h`.
/// Returns `(g, h, N[a][i])`.
pub type Blocks = (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<Vec<f64>>);

pub fn extract_blocks(full: &[Vec<f64>], n: usize) -> Result<Blocks> {
    let d = full.len();
    let m = d - n;
    let h: Vec<Vec<f64>> = (0..m)
        .map(|a| (0..m).map(|b| full[n + a][n + b]).collect())
        .collect();
    let hinv = invert_values(&h).map_err(|e| Error::from(e).singular_in("h-block"))?;
    let nn: Vec<Vec<f64>> = (0..m)
        .map(|a| {
            (0..n)
                .map(|i| (0..m).map(|b| hinv[a][b] * full[i][n + b]).sum())
                .collect()
        })
        .collect();
    let g = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mut acc = full[i][j];
                    for a in 0..m {
                        for b in 0..m {
                            acc -= nn[a][i] * nn[b][j] * h[a][b];
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect();
    Ok((g, h, nn))
}
