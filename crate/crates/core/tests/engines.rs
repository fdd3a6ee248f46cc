use regionboot::methods::pvalue_report;
use regionboot::rejection_lab::{
    default_ladder, epsilon_ladder, ladder_base, rejection_probability, table1_points, table2, LadderProbe,
};
use regionboot::{LabConfig, Method, PipelineConfig, Region, RejectionRow, Scheme, SurfaceJet};

#[test]
fn quad_report_orders_the_cone_methods() {
    let y = table1_points()[0];
    let methods = Method::parse_list("signed_lr,bp,au2,au3,dbp,dau").unwrap();
    let report = pvalue_report(&Region::cone(), &y, &methods, &PipelineConfig::quad()).unwrap();
    let vertex_distance = y[0].hypot(y[1]);
    assert!((report.lambda_hat - vertex_distance).abs() < 1e-9, "{}", report.lambda_hat);
    assert!(report.mu_hat.iter().all(|x| x.abs() < 1e-9));
    let p = |m| report.get(m).unwrap();
    assert!(p(Method::Bp) < p(Method::SignedLr));
    assert!(p(Method::SignedLr) < p(Method::Au2));
    assert!(p(Method::Au2) < p(Method::Au3));
    assert!(p(Method::Au3) < p(Method::Dau));
}

#[test]
fn mc_pipeline_tracks_quadrature() {
    let y = [0.71, 1.63];
    let methods = [Method::Bp, Method::Au2, Method::Au3];
    let exact = pvalue_report(&Region::cone(), &y, &methods, &PipelineConfig::quad()).unwrap();
    let noisy = pvalue_report(&Region::cone(), &y, &methods, &PipelineConfig::mc(200_000, 42)).unwrap();
    for v in &noisy.values {
        let se = v.stderr.unwrap();
        let diff = (v.pvalue.unwrap() - exact.get(v.method).unwrap()).abs();
        assert!(diff < 5.0 * se + 2e-3, "{}: diff {diff} se {se}", v.method);
    }
}

#[test]
fn described_regions_run_end_to_end() {
    let region = Region::parse(r#"{"kind":"custom","table":[[-3,1.7],[-1,0.6],[0,0.1],[1,0.6],[3,1.7]]}"#).unwrap();
    let report = pvalue_report(&region, &[0.5, 1.2], &[Method::Bp, Method::Dbp], &PipelineConfig::quad()).unwrap();
    for v in &report.values {
        let p = v.pvalue.unwrap();
        assert!(p > 0.0 && p < 0.5, "{}: {p}", v.method);
    }
}

#[test]
fn flat_region_signed_lr_is_alpha_everywhere() {
    let flat = Region::jet(SurfaceJet::zero(1));
    let u_list = [-2.0, 0.0, 1.5, 3.0];
    let rows = table2(&flat, &u_list, 0.05, &[Method::SignedLr], Scheme::Quad, &LabConfig::default()).unwrap();
    assert_eq!(rows.len(), 4);
    for row in rows {
        assert!((row.prob - 0.05).abs() < 1e-9, "u={}: {}", row.u, row.prob);
    }
}

#[test]
fn dau_rejection_far_from_the_vertex() {
    let cone = Region::cone();
    let row = rejection_probability(Method::Dau, &cone, &[3.0, -cone.h(&[3.0])], 0.05, Scheme::Quad, &LabConfig::default()).unwrap();
    assert!((row.prob - 0.0509).abs() < 1e-3, "{}", row.prob);
    let text = serde_json::to_string(&row).unwrap();
    let back: RejectionRow = serde_json::from_str(&text).unwrap();
    assert_eq!(back, row);
}

#[test]
fn engines_approach_their_expansions() {
    let cfg = LabConfig::default();
    let eps = default_ladder();
    let bp = epsilon_ladder(&ladder_base(), &eps, &LadderProbe::BpOracle { lambda0: 1.5 }, 0.05, &cfg).unwrap();
    assert!(bp.slope >= 3.5, "{bp:?}");
    let dbp = epsilon_ladder(&ladder_base(), &eps, &LadderProbe::DbpOracle { lambda0: 1.5 }, 0.05, &cfg).unwrap();
    assert!(dbp.slope >= 3.0, "{dbp:?}");
}
