use rayon::prelude::*;

use super::{vacuum_residuals, AnsatzData, Residuals, V};
use crate::dconn::{d_curvature, ricci_scalar_einstein, DConnection};
use crate::expr::ScalarField;
use crate::{Error, Result};

/// Rectangular sampling grid with exclusion margins around singular loci.
/// A coordinate with count 1 is pinned at its lower bound.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleWindow {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub counts: Vec<usize>,
    /// Points with `|v|` below this are skipped.
    pub v_margin: f64,
    /// Points where `|g2|, |g3|, |h4|, |h5|` or `|h5*|` fall below this are skipped.
    pub block_margin: f64,
}

impl SampleWindow {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, counts: Vec<usize>) -> Result<Self> {
        if lo.len() != hi.len() || lo.len() != counts.len() {
            return Err(Error::Shape(
                "window bounds and counts differ in length".into(),
            ));
        }
        for k in 0..lo.len() {
            let ok = match counts[k] {
                0 => false,
                1 => lo[k].is_finite(),
                _ => lo[k] < hi[k] && hi[k].is_finite(),
            };
            if !ok {
                return Err(Error::Shape(format!(
                    "window coordinate {k}: need lo < hi and count ≥ 2, or count 1"
                )));
            }
        }
        Ok(Self {
            lo,
            hi,
            counts,
            v_margin: 0.5,
            block_margin: 0.1,
        })
    }

    /// `x1, x2, x3 ∈ [-1, 1]`, `v ∈ [1, 3]` on six nodes each, `y5` pinned at 0.
    pub fn standard() -> Self {
        Self::new(
            vec![-1.0, -1.0, -1.0, 1.0, 0.0],
            vec![1.0, 1.0, 1.0, 3.0, 0.0],
            vec![6, 6, 6, 6, 1],
        )
        .expect("static window")
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Base point of the `v`-quadratures.
    pub fn v_lower(&self) -> f64 {
        self.lo[V]
    }

    fn node(&self, k: usize, i: usize) -> f64 {
        if self.counts[k] == 1 {
            self.lo[k]
        } else {
            self.lo[k] + (self.hi[k] - self.lo[k]) * i as f64 / (self.counts[k] - 1) as f64
        }
    }

    /// Grid points in row-major order, last coordinate fastest.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        let mut out = Vec::with_capacity(self.len());
        let mut idx = vec![0usize; d];
        for _ in 0..self.len() {
            out.push((0..d).map(|k| self.node(k, idx[k])).collect());
            for k in (0..d).rev() {
                idx[k] += 1;
                if idx[k] < self.counts[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        out
    }

    /// Whether `p` clears the `v` margin and every field in `fields` clears
    /// the block margin. Evaluation failures count as excluded.
    pub fn clears(&self, fields: &[&ScalarField], p: &[f64]) -> bool {
        if p.len() > V && p[V].abs() < self.v_margin {
            return false;
        }
        fields
            .iter()
            .all(|f| f.eval_coords(p).is_ok_and(|x| x.abs() >= self.block_margin))
    }

    /// Points clearing the margins for `fields`.
    pub fn admissible_points(&self, fields: &[&ScalarField]) -> Vec<Vec<f64>> {
        self.points()
            .into_iter()
            .filter(|p| self.clears(fields, p))
            .collect()
    }

    /// Margin check against the ansatz blocks and, when `h5` varies in `v`, `h5*`.
    pub fn admits(&self, a: &AnsatzData, p: &[f64]) -> bool {
        let mut fields = vec![&a.g2, &a.g3, &a.h4, &a.h5];
        let h5s;
        if a.h5.depends_on(V) {
            h5s = a.h5.partial_field(&[V]);
            fields.push(&h5s);
        }
        self.clears(&fields, p)
    }
}

/// Residuals and the largest Ricci component at one admissible point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub coords: Vec<f64>,
    pub residuals: Residuals,
    pub ricci: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub points: Vec<SweepPoint>,
    pub excluded: usize,
}

impl Sweep {
    fn worst(&self, f: impl Fn(&SweepPoint) -> f64) -> Option<(f64, &[f64])> {
        // First maximum in grid order, so ties resolve deterministically.
        self.points.iter().fold(None, |best, p| {
            let x = f(p);
            match best {
                Some((b, _)) if b >= x => best,
                _ => Some((x, p.coords.as_slice())),
            }
        })
    }

    pub fn max_vacuum(&self) -> Option<(f64, &[f64])> {
        self.worst(|p| p.residuals.max_vacuum())
    }

    pub fn max_conditions(&self) -> Option<(f64, &[f64])> {
        self.worst(|p| p.residuals.max_conditions())
    }

    pub fn max_ricci(&self) -> Option<(f64, &[f64])> {
        self.worst(|p| p.ricci.unwrap_or(0.0))
    }

    pub fn mean(&self, f: impl Fn(&SweepPoint) -> f64) -> f64 {
        if self.points.is_empty() {
            return 0.0;
        }
        self.points.iter().map(f).sum::<f64>() / self.points.len() as f64
    }
}

fn max_ricci_at(dc: &DConnection, p: &[f64]) -> Result<f64> {
    let co = dc.at(p)?;
    let (r, _) = d_curvature(&co)?;
    let data = ricci_scalar_einstein(&co, &r)?;
    Ok(data
        .ricci
        .iter()
        .flatten()
        .fold(0.0, |m: f64, x| m.max(x.abs())))
}

/// Residuals, and optionally the Ricci d-tensor, over the admissible window
/// points. Points are processed in parallel and collected in grid order.
pub fn sweep(a: &AnsatzData, window: &SampleWindow, with_ricci: bool) -> Result<Sweep> {
    if window.dim() != a.chart.dim() {
        return Err(Error::Shape(
            "window dimension does not match the ansatz chart".into(),
        ));
    }
    let dc = if with_ricci {
        Some(DConnection::canonical(&a.dmetric()?))
    } else {
        a.validate()?;
        None
    };
    let all = window.points();
    let results: Vec<Option<SweepPoint>> = all
        .par_iter()
        .map(|p| -> Result<Option<SweepPoint>> {
            if !window.admits(a, p) {
                return Ok(None);
            }
            let residuals = vacuum_residuals(a, p)?;
            let ricci = dc.as_ref().map(|dc| max_ricci_at(dc, p)).transpose()?;
            Ok(Some(SweepPoint {
                coords: p.clone(),
                residuals,
                ricci,
            }))
        })
        .collect::<Result<_>>()?;
    let excluded = results.iter().filter(|r| r.is_none()).count();
    Ok(Sweep {
        points: results.into_iter().flatten().collect(),
        excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solutions::ansatz_chart;

    #[test]
    fn grid_order_and_pinning() {
        let w = SampleWindow::new(vec![0.0, 5.0], vec![1.0, 5.0], vec![3, 1]).unwrap();
        assert_eq!(
            w.points(),
            vec![vec![0.0, 5.0], vec![0.5, 5.0], vec![1.0, 5.0]]
        );
        assert_eq!(SampleWindow::standard().len(), 1296);
    }

    #[test]
    fn invalid_windows() {
        assert!(SampleWindow::new(vec![1.0], vec![0.0], vec![4]).is_err());
        assert!(SampleWindow::new(vec![0.0], vec![1.0], vec![0]).is_err());
        assert!(SampleWindow::new(vec![0.0], vec![1.0], vec![2, 2]).is_err());
    }

    #[test]
    fn margins_exclude_singular_points() {
        let c = ansatz_chart();
        let mut a = AnsatzData::trivial(&c);
        a.h5 = ScalarField::parse("v^2", &c).unwrap();
        let w = SampleWindow::new(
            vec![0.0, 0.0, 0.0, -1.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0, 0.0],
            vec![1, 1, 1, 5, 1],
        )
        .unwrap();
        let s = sweep(&a, &w, false).unwrap();
        // v ∈ {-1, -0.5, 0, 0.5, 1}; only |v| < 0.5 is dropped.
        assert_eq!(s.excluded, 1);
        assert_eq!(s.points.len(), 4);
    }
}
