use super::connection::{Coefficients, DConnection};
use super::curvature::curvature_general;
use super::metric::{assemble_from, DMetric};
use super::tensor::{DTensor, Slot};
use crate::numerics::{Jet, JetMatrix};
use crate::{Error, Result};

/// Levi-Civita connection of the coordinate metric, read in the adapted
/// frame, with the distortion to the canonical d-connection.
#[derive(Debug, Clone)]
pub struct LeviCivitaComparison {
    /// `∇` coefficients, same layout as [`Coefficients`].
    pub levi_civita: Coefficients,
    /// Distortion blocks: `P^i_jk = 0`, `P^a_bk = ∂_b N_k^a`,
    /// `P^i_jc = ½ g^ik Ω^a_jk h_ca`, `P^a_bc = 0`.
    pub distortion: Vec<DTensor>,
    /// Max over the four blocks of `|Γ̂ − (∇ + P)|`.
    pub residual: f64,
    /// Max over the four blocks of `|Γ̂ − ∇|`, for scale.
    pub gap: f64,
}

/// Christoffel symbols `Γ^λ_{μν}` of a coordinate metric given as order-2
/// jets, returned as order-1 jets `[λ][μ][ν]`.
fn christoffel(gm: &JetMatrix) -> Result<Vec<Vec<Vec<Jet>>>> {
    let d = gm.rows();
    let ginv = gm
        .inverse()
        .map_err(|e| Error::from(e).singular_in("coordinate metric"))?;
    let dg = |s: usize, t: usize, mu: usize| gm[(s, t)].partial(mu);
    let z = dg(0, 0, 0) * 0.0;
    Ok((0..d)
        .map(|l| {
            (0..d)
                .map(|mu| {
                    (0..d)
                        .map(|nu| {
                            (0..d).fold(z, |acc, s| {
                                acc + ginv[(l, s)].truncate(1)
                                    * (dg(s, nu, mu) + dg(s, mu, nu) - dg(mu, nu, s))
                            }) * 0.5
                        })
                        .collect()
                })
                .collect()
        })
        .collect())
}

/// `∇_{e_α} e_β = ϑ^γ(e_α(E_β) + Γ(E_α, E_β)) e_γ` with `E` the coordinate
/// components of the adapted frame and `ϑ` the dual coframe.
fn adapted_levi_civita(
    dm: &DMetric,
    coords: &[f64],
) -> Result<(Coefficients, crate::nconn::AdaptedFrame)> {
    let mj = dm.jets(coords, 2)?;
    let (n, m) = (dm.n(), dm.m());
    let d = n + m;
    let gm = assemble_from(&mj.g, &mj.h, &mj.frame);
    let chr = christoffel(&gm)?;
    let fr = &mj.frame;
    let nv = coords.len();
    // E_α^μ, order 2.
    let e = |alpha: usize, mu: usize| -> Jet {
        if alpha < n && mu >= n {
            -*fr.nn(mu - n, alpha)
        } else {
            Jet::constant(if alpha == mu { 1.0 } else { 0.0 }, nv, 2)
        }
    };
    // ϑ^γ_ν, order 1.
    let einv = |g: usize, nu: usize| -> Jet {
        if g >= n && nu < n {
            fr.nn(g - n, nu).truncate(1)
        } else {
            Jet::constant(if g == nu { 1.0 } else { 0.0 }, nv, 1)
        }
    };
    let z = Jet::constant(0.0, nv, 1);
    let mut inner = vec![vec![vec![z; d]; d]; d]; // [α][β][ν]
    for (alpha, row) in inner.iter_mut().enumerate() {
        for (beta, col) in row.iter_mut().enumerate() {
            for (nu, slot) in col.iter_mut().enumerate() {
                let mut s = z;
                for mu in 0..d {
                    let ea = e(alpha, mu).truncate(1);
                    if ea.value() == 0.0 {
                        continue;
                    }
                    s = s + ea * e(beta, nu).partial(mu);
                    for lam in 0..d {
                        s = s + ea * e(beta, lam).truncate(1) * chr[nu][mu][lam];
                    }
                }
                *slot = s;
            }
        }
    }
    let lc = Coefficients::from_fn(n, m, |g, beta, alpha| {
        (0..d).fold(z, |acc, nu| acc + einv(g, nu) * inner[alpha][beta][nu])
    });
    Ok((lc, mj.frame))
}

pub fn levi_civita_and_deformation(
    dc: &DConnection,
    coords: &[f64],
) -> Result<LeviCivitaComparison> {
    let dm = dc.metric();
    let (n, m) = (dm.n(), dm.m());
    let (lc, frame) = adapted_levi_civita(dm, coords)?;
    let co = dc.at(coords)?;
    let mj = co.metric_or_err()?;
    let om = frame.omega();
    let ginv = mj.ginv.values();
    let h = mj.h.values();
    let p_cv = |i: usize, j: usize, c: usize| -> f64 {
        let mut s = 0.0;
        for k in 0..n {
            for a in 0..m {
                s += ginv[i][k] * om[a][j][k] * h[c][a];
            }
        }
        0.5 * s
    };
    let distortion = vec![
        DTensor::zeros("P^i_jk", &[Slot::HU, Slot::HL, Slot::HL], n, m),
        DTensor::from_fn("P^a_bk", &[Slot::VU, Slot::VL, Slot::HL], n, m, |x| {
            frame.dn_dy(x[0], x[2], x[1]).value()
        }),
        DTensor::from_fn("P^i_jc", &[Slot::HU, Slot::HL, Slot::VL], n, m, |x| {
            p_cv(x[0], x[1], x[2])
        }),
        DTensor::zeros("P^a_bc", &[Slot::VU, Slot::VL, Slot::VL], n, m),
    ];
    // The comparison takes the first lower index of ∇ as the derivative slot
    // in the L^a_bk block: ∇^a_{kb} + ∂_b N_k^a.
    let mut residual: f64 = 0.0;
    let mut gap: f64 = 0.0;
    let mut track = |hat: f64, nabla: f64, p: f64| {
        residual = residual.max((hat - nabla - p).abs());
        gap = gap.max((hat - nabla).abs());
    };
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                track(co.value(i, j, k), lc.value(i, j, k), 0.0);
            }
            for c in 0..m {
                track(
                    co.value(i, j, n + c),
                    lc.value(i, j, n + c),
                    distortion[2].get(&[i, j, c]),
                );
            }
        }
    }
    for a in 0..m {
        for b in 0..m {
            for k in 0..n {
                track(
                    co.value(n + a, n + b, k),
                    lc.value(n + a, k, n + b),
                    distortion[1].get(&[a, b, k]),
                );
            }
            for c in 0..m {
                track(
                    co.value(n + a, n + b, n + c),
                    lc.value(n + a, n + b, n + c),
                    0.0,
                );
            }
        }
    }
    Ok(LeviCivitaComparison {
        levi_civita: lc,
        distortion,
        residual,
        gap,
    })
}

/// Max `|Ric(∇)|` of the Levi-Civita connection at a point.
pub fn levi_civita_ricci_residual(dm: &DMetric, coords: &[f64]) -> Result<f64> {
    let (lc, frame) = adapted_levi_civita(dm, coords)?;
    let r = curvature_general(&lc, &frame);
    let d = r.dim();
    let mut worst: f64 = 0.0;
    for b in 0..d {
        for g in 0..d {
            let s: f64 = (0..d).map(|a| r.get(a, b, g, a)).sum();
            worst = worst.max(s.abs());
        }
    }
    Ok(worst)
}
