//! Distinguished connections on a block metric: coordinate assembly, the
//! canonical d-connection, torsion and curvature blocks, Ricci and Einstein
//! d-tensors, the Levi-Civita comparison and the almost symplectic
//! machinery of the tangent-bundle model.
//!
//! Frame indices are flat, `0..n` horizontal and `n..n+m` vertical.
//! Connection coefficients are stored as `Γ[γ][β][α]`, the component along
//! `e_γ` of `D_{e_α} e_β`.

mod connection;
mod curvature;
mod deform;
mod levi;
mod metric;
mod symplectic;
mod tensor;
mod torsion;

pub use connection::{Coefficients, ConnectionKind, DConnection, Deformation};
pub use curvature::{
    commutator_oracle, curvature_general, d_curvature, ricci_scalar_einstein, Curvature,
    OracleSample, RicciData,
};
pub use deform::curvature_deformation_check;
pub use levi::{levi_civita_and_deformation, levi_civita_ricci_residual, LeviCivitaComparison};
pub use metric::{assemble_coordinate_metric, extract_blocks, Blocks, DMetric, MetricJets};
pub use symplectic::{
    compat_residuals, cyclic_residual, symmetrize_reconstruct, theta_components, CompatResiduals,
    Reconstruction,
};
pub use tensor::{Block, DTensor, Position, Slot};
pub use torsion::{d_torsion, torsion_direct, torsion_full};

/// Canonical d-connection of a block metric.
pub fn canonical_dconnection(dm: &DMetric) -> DConnection {
    DConnection::canonical(dm)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::expr::{Chart, ScalarField};
    use crate::nconn::NConnection;

    fn chart() -> Arc<Chart> {
        Arc::new(Chart::tangent(2).unwrap())
    }

    fn sf(s: &str, c: &Arc<Chart>) -> ScalarField {
        ScalarField::parse(s, c).unwrap()
    }

    /// Sasaki lift of `e^{2x1}(y1² + y2²)`.
    fn conformal() -> DMetric {
        let c = chart();
        let ncon = NConnection::parse(&c, &[&["y1", "-y2"], &["y2", "y1"]]).unwrap();
        let g = sf("exp(2*x1)", &c);
        let z = sf("0", &c);
        DMetric::sasaki(vec![vec![g.clone(), z.clone()], vec![z, g]], ncon).unwrap()
    }

    /// Generic metric with y-dependent blocks and a nonlinear N.
    fn generic() -> DMetric {
        let c = chart();
        let ncon = NConnection::parse(
            &c,
            &[
                &["y1*x2 + 0.3*y2^2", "sin(y1) + x1"],
                &["x1*y2", "0.2*y1*y2 + x2"],
            ],
        )
        .unwrap();
        let g = vec![
            vec![sf("2 + sin(x1*y2)", &c), sf("0.3*cos(x2 + y1)", &c)],
            vec![sf("0.3*cos(x2 + y1)", &c), sf("2 + x1^2*y1^2", &c)],
        ];
        let h = vec![
            vec![sf("3 + y1^2", &c), sf("0.2*x1*y2", &c)],
            vec![sf("0.2*x1*y2", &c), sf("2 + exp(0.3*x2*y2)", &c)],
        ];
        DMetric::new(g, h, ncon).unwrap()
    }

    const P: [f64; 4] = [0.31, -0.42, 0.77, 0.53];

    #[test]
    fn canonical_contract_on_generic_metric() {
        let dc = DConnection::canonical(&generic());
        let co = dc.at(&P).unwrap();
        let t = d_torsion(&co).unwrap();
        assert!(t[0].max_abs() < 1e-12, "T^i_jk {}", t[0]);
        assert!(t[4].max_abs() < 1e-12, "T^a_bc {}", t[4]);
        let r = compat_residuals(&co, None).unwrap();
        assert!(r.dg < 1e-12, "Dg {}", r.dg);
    }

    #[test]
    fn torsion_blocks_match_definition() {
        let dc = DConnection::canonical(&generic());
        let co = dc.at(&P).unwrap();
        let full = torsion_full(&co).unwrap();
        let direct = torsion_direct(&dc, &P).unwrap();
        let worst = full
            .iter()
            .zip(&direct)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(worst < 1e-12, "{worst}");
        let om = crate::nconn::n_curvature(dc.metric().ncon(), &P).unwrap();
        let t = d_torsion(&co).unwrap();
        for a in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    assert_eq!(t[2].get(&[a, i, j]), om[a][i][j]);
                }
            }
        }
        // T^a_bi block against the full array slot [a][i][b].
        for a in 0..2 {
            for b in 0..2 {
                for i in 0..2 {
                    assert!(
                        (t[3].get(&[a, b, i]) - full[((2 + a) * 4 + i) * 4 + 2 + b]).abs() < 1e-12
                    );
                }
            }
        }
    }

    #[test]
    fn blocks_agree_with_general_formula() {
        let dc = DConnection::canonical(&generic());
        let co = dc.at(&P).unwrap();
        let (blocks, _) = d_curvature(&co).unwrap();
        let general = curvature_general(&co, &co.metric().unwrap().frame);
        assert!(
            blocks.max_abs_diff(&general) < 1e-10,
            "{}",
            blocks.max_abs_diff(&general)
        );
    }

    #[test]
    fn commutator_oracle_generic() {
        let dm = generic();
        let c = dm.chart().clone();
        let z: Vec<ScalarField> = ["x1*y2 + 1", "sin(x2) - y1", "exp(0.2*y1*x1)", "x2^2 + y2"]
            .iter()
            .map(|s| sf(s, &c))
            .collect();
        let out = commutator_oracle(&DConnection::canonical(&dm), &P, &z).unwrap();
        assert!(
            out.relative_deviation() < 1e-9,
            "{}",
            out.relative_deviation()
        );
    }

    #[test]
    fn ricci_trace_identity() {
        let dc = DConnection::canonical(&generic());
        let co = dc.at(&P).unwrap();
        let (r, _) = d_curvature(&co).unwrap();
        let data = ricci_scalar_einstein(&co, &r).unwrap();
        assert!(data.trace_residual < 1e-9 * (1.0 + data.scalar.abs()));
        // h→v mixed slots vanish for a d-connection.
        for i in 0..2 {
            for a in 0..2 {
                let direct: f64 = (0..2).map(|k| -r.get(k, i, k, 2 + a)).sum();
                assert!((data.ricci[i][2 + a] - direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn conformal_sasaki_is_almost_hermitian() {
        let dm = conformal();
        let co = DConnection::canonical(&dm).at(&P).unwrap();
        let theta = theta_components(co.metric().unwrap()).unwrap();
        let r = compat_residuals(&co, Some(&theta)).unwrap();
        assert!(r.dg < 1e-12 && r.dtheta < 1e-12, "{r:?}");
        let tm = DConnection::tangent_model(&dm).unwrap().at(&P).unwrap();
        assert!(tm.max_abs_diff(&co) < 1e-12);
    }

    #[test]
    fn levi_civita_distortion() {
        for dm in [conformal(), generic()] {
            let cmp = levi_civita_and_deformation(&DConnection::canonical(&dm), &P).unwrap();
            assert!(cmp.residual < 1e-10, "{}", cmp.residual);
            assert!(cmp.gap > 1e-3);
        }
    }

    #[test]
    fn levi_civita_flat_product() {
        let c = chart();
        let dm = DMetric::diagonal(
            vec![sf("1", &c), sf("1", &c)],
            vec![sf("1", &c), sf("1", &c)],
            NConnection::zero(&c),
        )
        .unwrap();
        let cmp = levi_civita_and_deformation(&DConnection::canonical(&dm), &P).unwrap();
        assert_eq!(cmp.residual, 0.0);
        assert_eq!(levi_civita_ricci_residual(&dm, &P).unwrap(), 0.0);
    }

    #[test]
    fn deformation_identity() {
        let dm = generic();
        let c = dm.chart().clone();
        let mut p = Deformation::zero(4);
        p.set(0, 1, 2, sf("0.1*x1*y2", &c));
        p.set(2, 3, 0, sf("0.2*sin(x2 + y1)", &c));
        p.set(1, 2, 3, sf("0.05*exp(y2)", &c));
        p.set(3, 0, 1, sf("0.3", &c));
        let dc = DConnection::canonical(&dm);
        let r = curvature_deformation_check(&dc, &p, &P).unwrap();
        assert!(r < 1e-10, "{r}");
        assert!(curvature_deformation_check(&dc, &Deformation::zero(4), &P).unwrap() < 1e-14);
    }

    #[test]
    fn reconstruction_round_trip() {
        let dm = conformal();
        let co = DConnection::canonical(&dm).at(&P).unwrap();
        let theta = theta_components(co.metric().unwrap()).unwrap();
        let rec = symmetrize_reconstruct(&co, &theta).unwrap();
        assert!(
            rec.residual < 1e-10,
            "{} flipped {}",
            rec.residual,
            rec.residual_flipped
        );
        assert!(rec.raised_residual < 1e-10);
    }
}
