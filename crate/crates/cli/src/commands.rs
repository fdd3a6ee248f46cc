//! Subcommand implementations.

use std::path::PathBuf;

use regionboot::methods::{pvalue_report, Method, PValueReport};
use regionboot::multiscale::{au_k, bp_curve, dau, dbp_curve, fit_poly, value_at_one, CurveKind, Extrapolation, FitResult};
use regionboot::oracle::{au_expansion, bp_expansion, dbp_expansion, nbp_expansion, pv_expansion, reject_dbp, reject_nbp};
use regionboot::rejection_lab::{default_u_list, table1, table1_cases, table2, LabConfig, RejectionRow, Scheme};
use regionboot::surface_jets::beta_summary;
use regionboot::{CenterRule, GeometricSummary, Region};
use serde::Serialize;

use crate::args::{CurveArgs, CurveKindArg, OracleArgs, PvalueArgs, SchemeArg, TableArgs};
use crate::config::{parse_list, Settings};
use crate::error::{CliError, EngineContext};
use crate::output::{percent, write_csv, write_json, Envelope};

pub fn pvalue(args: &PvalueArgs, threads: usize) -> Result<(), CliError> {
    let settings = Settings::resolve(&args.knobs, threads)?;
    let region = settings.require_region()?;
    let y = settings.require_y(&region)?;
    let methods = settings.methods.clone().unwrap_or_else(|| Method::ALL.to_vec());
    let report = pvalue_report(&region, &y, &methods, &settings.pipeline()).during("pvalue_report")?;

    println!("y = ({}), lambda_hat = {:.6}", join(&report.y), report.lambda_hat);
    println!("{:<10} {:>10} {:>10}", "method", "p (%)", "z");
    for v in &report.values {
        match (v.pvalue, v.z) {
            (Some(p), Some(z)) => println!("{:<10} {:>10} {:>10.4}", v.method.name(), percent(p), z),
            _ => println!("{:<10} {:>10} {:>10}  {}", v.method.name(), "-", "-", v.note.as_deref().unwrap_or("")),
        }
    }

    let out = args.out.clone().unwrap_or_else(|| settings.out_dir.join("pvalue.json"));
    write_json(&out, &Envelope::new("pvalue", &settings, ReportBody { report: &report }))?;
    Ok(())
}

#[derive(Serialize)]
struct ReportBody<'a> {
    report: &'a PValueReport,
}

#[derive(Serialize)]
struct TableConfig<'a> {
    #[serde(flatten)]
    settings: &'a Settings,
    table: u8,
    scheme: Scheme,
    u_list: Vec<f64>,
    lab: Option<LabConfig>,
}

#[derive(Serialize)]
struct Table1Row {
    case: String,
    y_u: f64,
    y_v: f64,
    method: Method,
    pvalue: Option<f64>,
    percent: String,
    note: String,
}

#[derive(Serialize)]
struct Table2Row {
    method: Method,
    u: f64,
    alpha: f64,
    prob: f64,
    scheme: Scheme,
    percent: String,
}

pub fn table(args: &TableArgs, threads: usize) -> Result<(), CliError> {
    let settings = Settings::resolve(&args.knobs, threads)?;
    match args.which {
        1 => table_one(&settings),
        _ => table_two(args, &settings),
    }
}

fn table_one(settings: &Settings) -> Result<(), CliError> {
    let methods = settings.methods.clone().unwrap_or_else(|| Method::ALL.to_vec());
    let cases = table1_cases();
    let reports = table1(&cases, &methods, &settings.pipeline()).during("table1")?;
    let mut rows = Vec::new();
    for ((label, y, _), report) in cases.iter().zip(&reports) {
        for v in &report.values {
            rows.push(Table1Row {
                case: label.clone(),
                y_u: y[0],
                y_v: y[1],
                method: v.method,
                pvalue: v.pvalue,
                percent: v.pvalue.map(percent).unwrap_or_default(),
                note: v.note.clone().unwrap_or_default(),
            });
        }
    }

    print!("{:<10}", "method");
    for (label, _, _) in &cases {
        print!(" {label:>10}");
    }
    println!();
    for &m in &methods {
        print!("{:<10}", m.name());
        for report in &reports {
            print!(" {:>10}", report.get(m).map(percent).unwrap_or_else(|| "-".into()));
        }
        println!();
    }

    let config = TableConfig {
        settings,
        table: 1,
        scheme: Scheme::Quad,
        u_list: Vec::new(),
        lab: None,
    };
    write_csv(&settings.out_dir.join("table1.csv"), &rows)?;
    write_json(&settings.out_dir.join("table1.json"), &Envelope::new("table 1", &config, Reports { reports: &reports }))?;
    Ok(())
}

#[derive(Serialize)]
struct Reports<'a> {
    reports: &'a [PValueReport],
}

#[derive(Serialize)]
struct Rows<'a> {
    rows: &'a [RejectionRow],
}

fn table_two(args: &TableArgs, settings: &Settings) -> Result<(), CliError> {
    let methods = settings
        .methods
        .clone()
        .unwrap_or_else(|| vec![Method::Mcb, Method::Bp, Method::Au2, Method::Au3, Method::Dbp, Method::Dau]);
    let region = match &settings.region {
        Some(_) => settings.require_region()?,
        None => Region::cone(),
    };
    let u_list = match &args.u_list {
        Some(text) => parse_list(text, "--u-list")?,
        None => default_u_list(),
    };
    let scheme = match args.scheme {
        SchemeArg::Quad => Scheme::Quad,
        SchemeArg::Mc => Scheme::Mc,
    };
    if scheme == Scheme::Mc && args.draws == 0 {
        return Err(CliError::usage("--draws must be positive"));
    }
    let lab = LabConfig {
        pipeline: settings.pipeline(),
        mc_replicates: args.draws,
        seed: settings.seed,
        ..LabConfig::default()
    };
    let rows = table2(&region, &u_list, settings.alpha, &methods, scheme, &lab).during("table2")?;

    print!("{:<6}", "u");
    for u in &u_list {
        print!(" {u:>7}");
    }
    println!();
    for m in &methods {
        print!("{:<6}", m.name());
        for r in rows.iter().filter(|r| r.method == *m) {
            print!(" {:>7}", percent(r.prob));
        }
        println!();
    }

    let csv_rows: Vec<Table2Row> = rows
        .iter()
        .map(|r| Table2Row {
            method: r.method,
            u: r.u,
            alpha: r.alpha,
            prob: r.prob,
            scheme: r.scheme,
            percent: percent(r.prob),
        })
        .collect();
    let config = TableConfig {
        settings,
        table: 2,
        scheme,
        u_list,
        lab: Some(lab),
    };
    write_csv(&settings.out_dir.join("table2.csv"), &csv_rows)?;
    write_json(&settings.out_dir.join("table2.json"), &Envelope::new("table 2", &config, Rows { rows: &rows }))?;
    Ok(())
}

#[derive(Serialize)]
struct CurveRow {
    sigma2: f64,
    z: f64,
    se: f64,
    kind: CurveKind,
}

#[derive(Serialize)]
struct CurveConfig<'a> {
    #[serde(flatten)]
    settings: &'a Settings,
    kind: CurveKind,
    degree: usize,
}

#[derive(Serialize)]
struct CurveBody {
    fit: FitResult,
    z_at_one: f64,
    extrapolations: Vec<(String, Extrapolation)>,
}

pub fn curve(args: &CurveArgs, threads: usize) -> Result<(), CliError> {
    let settings = Settings::resolve(&args.knobs, threads)?;
    let region = settings.require_region()?;
    let y = settings.require_y(&region)?;
    let pipeline = settings.pipeline();
    let (curve, kind) = match args.kind {
        CurveKindArg::Bp => (bp_curve(&region, &y, &settings.scales, &pipeline.engine).during("bp_curve")?, CurveKind::Bp),
        CurveKindArg::Dbp => (
            dbp_curve(&region, &y, &settings.scales, &CenterRule::Projection, &pipeline.engine).during("dbp_curve")?,
            CurveKind::Dbp,
        ),
    };
    let degree = args.degree.unwrap_or(match kind {
        CurveKind::Bp => 2,
        CurveKind::Dbp => 1,
    });
    let fit = fit_poly(&curve, degree).during("fit_poly")?;
    let extrapolations = match kind {
        CurveKind::Bp => vec![
            ("au2".to_string(), au_k(&curve, 2, settings.mode).during("au_k")?),
            ("au3".to_string(), au_k(&curve, 3, settings.mode).during("au_k")?),
        ],
        CurveKind::Dbp => vec![("dau".to_string(), dau(&curve, settings.mode).during("dau")?)],
    };
    let z_at_one = value_at_one(&curve).during("value_at_one")?;

    println!("{:>8} {:>12} {:>12}", "sigma2", "z", "se");
    for i in 0..curve.scales.len() {
        println!("{:>8.4} {:>12.6} {:>12.6}", curve.scales[i], curve.z[i], curve.se[i]);
    }
    println!("z(1) = {z_at_one:.4}");
    for (name, x) in &extrapolations {
        println!("{name}: z(-1) = {:.4}, p = {}%", x.z, percent(x.pvalue));
    }

    let rows: Vec<CurveRow> = (0..curve.scales.len())
        .map(|i| CurveRow {
            sigma2: curve.scales[i],
            z: curve.z[i],
            se: curve.se[i],
            kind,
        })
        .collect();
    let config = CurveConfig {
        settings: &settings,
        kind,
        degree,
    };
    let stem = match kind {
        CurveKind::Bp => "bp_curve",
        CurveKind::Dbp => "dbp_curve",
    };
    write_csv(&settings.out_dir.join(format!("{stem}.csv")), &rows)?;
    let body = CurveBody {
        fit,
        z_at_one,
        extrapolations,
    };
    write_json(&settings.out_dir.join(format!("{stem}_fit.json")), &Envelope::new("curve", &config, body))?;
    Ok(())
}

#[derive(Serialize)]
struct OracleConfig<'a> {
    #[serde(flatten)]
    settings: &'a Settings,
    tau2: f64,
    sigma2: f64,
    kappa: f64,
    source: &'static str,
}

#[derive(Serialize)]
struct OracleBody {
    summary: GeometricSummary,
    values: OracleValues,
    rejection: OracleRejection,
}

#[derive(Serialize)]
struct OracleValues {
    bp: f64,
    nbp: f64,
    au: f64,
    pv: f64,
    dbp: f64,
    dau: f64,
}

#[derive(Serialize)]
struct OracleRejection {
    bp: f64,
    au: f64,
    dbp: f64,
    dau: f64,
}

pub fn oracle(args: &OracleArgs, threads: usize) -> Result<(), CliError> {
    let settings = Settings::resolve(&args.knobs, threads)?;
    let (summary, source) = if let Some(text) = &args.summary {
        let g: GeometricSummary = serde_json::from_str(text).map_err(|e| CliError::usage(format!("--summary: {e}")))?;
        (g, "summary")
    } else if let (Some(lambda0), Some(gamma)) = (args.lambda0, &args.gamma) {
        let g = parse_list(gamma, "--gamma")?;
        let g: [f64; 4] = g.try_into().map_err(|_| CliError::usage("--gamma needs four values"))?;
        (beta_summary(g, lambda0), "gamma")
    } else {
        let region = settings.require_region()?;
        let y = settings.require_y(&region)?;
        (region.geometric_summary(&y).during("geometric_summary")?, "region")
    };
    let alpha = settings.alpha;
    let gammas = [summary.gamma1, summary.gamma2, summary.gamma3, summary.gamma4];
    let values = OracleValues {
        bp: bp_expansion(&summary, args.sigma2).during("bp_expansion")?,
        nbp: nbp_expansion(&summary, args.sigma2),
        au: au_expansion(&summary),
        pv: pv_expansion(&summary),
        dbp: dbp_expansion(&summary, args.tau2, args.sigma2, args.kappa).during("dbp_expansion")?,
        dau: dbp_expansion(&summary, args.tau2, -args.tau2, args.kappa).during("dbp_expansion")?,
    };
    let rejection = OracleRejection {
        bp: reject_nbp(gammas, alpha, 1.0).during("reject_nbp")?,
        au: reject_nbp(gammas, alpha, -1.0).during("reject_nbp")?,
        dbp: reject_dbp(summary.beta3, alpha, 1.0).during("reject_dbp")?,
        dau: reject_dbp(summary.beta3, alpha, -1.0).during("reject_dbp")?,
    };

    println!(
        "beta = ({:.6}, {:.6}, {:.6}, {:.6})",
        summary.beta0, summary.beta1, summary.beta2, summary.beta3
    );
    for (name, p) in [("bp", values.bp), ("nbp", values.nbp), ("au", values.au), ("pv", values.pv), ("dbp", values.dbp), ("dau", values.dau)] {
        println!("{name:<4} {:>10}%", percent(p));
    }

    let config = OracleConfig {
        settings: &settings,
        tau2: args.tau2,
        sigma2: args.sigma2,
        kappa: args.kappa,
        source,
    };
    let out: PathBuf = args.out.clone().unwrap_or_else(|| settings.out_dir.join("oracle.json"));
    let body = OracleBody {
        summary,
        values,
        rejection,
    };
    write_json(&out, &Envelope::new("oracle", &config, body))?;
    Ok(())
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ")
}
