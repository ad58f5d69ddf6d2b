use super::connection::{Coefficients, DConnection};
use super::tensor::{DTensor, Slot};
use crate::Result;

/// Full torsion array `[γ][α][β] = T(e_β, e_α)^γ`
/// `= Γ[γ][α][β] − Γ[γ][β][α] − W^γ_{βα}`.
pub fn torsion_full(co: &Coefficients) -> Result<Vec<f64>> {
    let d = co.dim();
    let w = co.metric_or_err()?.frame.anholonomy();
    let mut t = vec![0.0; d * d * d];
    for g in 0..d {
        for a in 0..d {
            for b in 0..d {
                t[(g * d + a) * d + b] = co.value(g, a, b) - co.value(g, b, a) - w[g][b][a];
            }
        }
    }
    Ok(t)
}

/// The five torsion blocks of a d-connection:
/// `T^i_jk = L^i_jk − L^i_kj`, `T^i_ja = C^i_ja`, `T^a_ji = Ω^a_ji`,
/// `T^a_bi = ∂_b N_i^a − L^a_bi`, `T^a_bc = C^a_bc − C^a_cb`.
pub fn d_torsion(co: &Coefficients) -> Result<Vec<DTensor>> {
    let (n, m) = (co.n(), co.m());
    let fr = &co.metric_or_err()?.frame;
    let om = fr.omega();
    Ok(vec![
        DTensor::from_fn("T^i_jk", &[Slot::HU, Slot::HL, Slot::HL], n, m, |x| {
            co.value(x[0], x[1], x[2]) - co.value(x[0], x[2], x[1])
        }),
        DTensor::from_fn("T^i_ja", &[Slot::HU, Slot::HL, Slot::VL], n, m, |x| {
            co.value(x[0], x[1], n + x[2])
        }),
        DTensor::from_fn("T^a_ji", &[Slot::VU, Slot::HL, Slot::HL], n, m, |x| {
            om[x[0]][x[1]][x[2]]
        }),
        DTensor::from_fn("T^a_bi", &[Slot::VU, Slot::VL, Slot::HL], n, m, |x| {
            fr.dn_dy(x[0], x[2], x[1]).value() - co.value(n + x[0], n + x[1], x[2])
        }),
        DTensor::from_fn("T^a_bc", &[Slot::VU, Slot::VL, Slot::VL], n, m, |x| {
            co.value(n + x[0], n + x[1], n + x[2]) - co.value(n + x[0], n + x[2], n + x[1])
        }),
    ])
}

/// Torsion from its definition as the covariant exterior derivative of the
/// coframe, `T^α = dϑ^α + ω^α_μ ∧ ϑ^μ`, with `ϑ^i = dx^i`,
/// `ϑ^a = dy^a + N_i^a dx^i` differentiated in coordinates and evaluated
/// on frame pairs. Same layout as [`torsion_full`].
pub fn torsion_direct(dc: &DConnection, coords: &[f64]) -> Result<Vec<f64>> {
    let co = dc.at(coords)?;
    let (n, m) = (co.n(), co.m());
    let d = n + m;
    let nj = dc.metric().ncon().jets(coords, 1)?;
    // Coordinate components of e_α.
    let vec_of = |alpha: usize| -> Vec<f64> {
        let mut v = vec![0.0; d];
        if alpha < n {
            v[alpha] = 1.0;
            for a in 0..m {
                v[n + a] = -nj[a][alpha].value();
            }
        } else {
            v[alpha] = 1.0;
        }
        v
    };
    let frame_vecs: Vec<Vec<f64>> = (0..d).map(vec_of).collect();
    // dϑ^a(X, Y) = ∂_μ N_i^a (X^μ Y^i − Y^μ X^i); dϑ^i = 0.
    let dtheta = |g: usize, x: &[f64], y: &[f64]| -> f64 {
        if g < n {
            return 0.0;
        }
        let a = g - n;
        let mut s = 0.0;
        for i in 0..n {
            for mu in 0..d {
                s += nj[a][i].d(mu) * (x[mu] * y[i] - y[mu] * x[i]);
            }
        }
        s
    };
    let mut t = vec![0.0; d * d * d];
    for g in 0..d {
        for a in 0..d {
            for b in 0..d {
                // T(e_b, e_a)^g = dϑ^g(e_b, e_a) + Γ[g][a][b] − Γ[g][b][a]
                t[(g * d + a) * d + b] = dtheta(g, &frame_vecs[b], &frame_vecs[a])
                    + co.value(g, a, b)
                    - co.value(g, b, a);
            }
        }
    }
    Ok(t)
}
