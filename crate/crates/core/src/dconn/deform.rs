use super::connection::{DConnection, Deformation};
use super::curvature::{curvature_general, d_curvature};
use super::torsion::torsion_full;
use crate::Result;

/// Max over components of `|R(Γ + P) − [R(Γ) + D_δP_γ − D_γP_δ + T(e_δ,e_γ)·P + P∧P]|`,
/// where `(D_δ P)^α_{βγ} = e_δ P^α_{βγ} + Γ^α_{μδ} P^μ_{βγ} − Γ^μ_{βδ} P^α_{μγ}
/// − Γ^μ_{γδ} P^α_{βμ}`. The base curvature comes from the block formulas,
/// the deformed one from the general formula.
pub fn curvature_deformation_check(
    base: &DConnection,
    p: &Deformation,
    coords: &[f64],
) -> Result<f64> {
    let co = base.at(coords)?;
    let dfd = base.deformed(p.clone())?.at(coords)?;
    let frame = &co.metric_or_err()?.frame;
    let d = co.dim();
    let r_hat = if base.is_deformed() {
        curvature_general(&co, frame)
    } else {
        d_curvature(&co)?.0
    };
    let r_def = curvature_general(&dfd, frame);
    let pj = p.jets(coords, 1)?;
    let pv = |a: usize, b: usize, g: usize| pj[(a * d + b) * d + g].value();
    let t = torsion_full(&co)?;
    // T(e_δ, e_γ)^μ lives at [μ][γ][δ].
    let tor = |mu: usize, g: usize, dl: usize| t[(mu * d + g) * d + dl];
    let dp = |dl: usize, a: usize, b: usize, g: usize| -> f64 {
        let mut s = frame.e(&pj[(a * d + b) * d + g], dl).value();
        for mu in 0..d {
            s += co.value(a, mu, dl) * pv(mu, b, g)
                - co.value(mu, b, dl) * pv(a, mu, g)
                - co.value(mu, g, dl) * pv(a, b, mu);
        }
        s
    };
    let mut worst: f64 = 0.0;
    for a in 0..d {
        for b in 0..d {
            for g in 0..d {
                for dl in 0..d {
                    let mut pred = r_hat.get(a, b, g, dl) + dp(dl, a, b, g) - dp(g, a, b, dl);
                    for mu in 0..d {
                        pred += tor(mu, g, dl) * pv(a, b, mu) + pv(mu, b, g) * pv(a, mu, dl)
                            - pv(mu, b, dl) * pv(a, mu, g);
                    }
                    worst = worst.max((r_def.get(a, b, g, dl) - pred).abs());
                }
            }
        }
    }
    Ok(worst)
}
