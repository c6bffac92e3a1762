//! The five subcommands. Each writes CSV and JSON under the output
//! directory, plus an SVG drawn from the same rows when `--plot` is set.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};
use std::path::Path;

use anyhow::anyhow;
use prismconn::analytic::{
    assemble_pfc, bulk_term, cone_shape, corner_shape, corner_term, edge_term, phase_map,
    Component, PfcBreakdown,
};
use prismconn::channel::ConnectivityModel;
use prismconn::geometry::{build_house, BoundaryFeature, Domain, FeatureSet};
use prismconn::quadrature::{assemble_pfc_numeric, IntegralKind, IntegralSpec};
use prismconn::simulator::{sweep, SampleSize, SimConfig, SimResult};
use serde::Serialize;

use crate::args::{CommandKind, JobSpec, Sweep};
use crate::plot::{label_grid, Chart, Series};
use crate::Failure;

pub const BREAKDOWN_HEADER: [&str; 8] =
    ["rho", "label", "multiplicity", "prefactor", "exponent_rate", "value", "p_out", "p_fc"];
pub const SWEEP_HEADER: [&str; 8] =
    ["rho", "N", "trials", "fc_count", "p_fc_hat", "std_err", "p_min_deg_hat", "wall_time_s"];
pub const COMPARE_HEADER: [&str; 8] =
    ["rho", "N", "trials", "fc_count", "p_out_hat", "std_err", "p_out_analytic", "z_score"];
pub const PHASE_HEADER: [&str; 3] = ["rho", "L", "dominant_label"];
pub const VALIDATE_HEADER: [&str; 7] =
    ["kind", "params", "closed_form", "quadrature", "rel_error", "tolerance", "pass"];
pub const CONE_HEADER: [&str; 4] = ["theta_over_pi", "corner_f", "cone_f", "rel_diff"];

const COMPONENT_COLORS: [(Component, &str); 4] = [
    (Component::Bulk, "green"),
    (Component::Face, "goldenrod"),
    (Component::Edge, "purple"),
    (Component::Corner, "blue"),
];

pub fn dispatch(spec: &JobSpec) -> Result<(), Failure> {
    match spec.command {
        CommandKind::Analytic => analytic(spec),
        CommandKind::Simulate => simulate(spec),
        CommandKind::Compare => compare(spec),
        CommandKind::PhaseMap => phase(spec),
        CommandKind::Validate => validate(spec),
    }
}

fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Result<(), Failure>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Plain decimal in the usual range, exponent form for very small or large values.
pub fn num(x: f64) -> String {
    if x != 0.0 && x.is_finite() && !(1e-4..1e7).contains(&x.abs()) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    std::fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn write_svg(spec: &JobSpec, name: &str, svg: impl FnOnce() -> String) -> Result<(), Failure> {
    if spec.plot {
        std::fs::write(spec.out.join(name), svg())?;
    }
    Ok(())
}

fn setup(spec: &JobSpec) -> Result<(Domain, ConnectivityModel), Failure> {
    Ok((spec.domain.build()?, spec.model.build()?))
}

/// Densities of the sweep; node counts become `N / V`.
fn densities(spec: &JobSpec, domain: &Domain) -> Vec<f64> {
    match spec.sweep.as_ref().expect("sweep checked at resolve") {
        Sweep::Density(r) => r.clone(),
        Sweep::Count(n) => n.iter().map(|&n| n as f64 / domain.volume()).collect(),
    }
}

fn breakdowns(spec: &JobSpec, features: &FeatureSet, model: &ConnectivityModel, rhos: &[f64]) -> Result<Vec<PfcBreakdown>, Failure> {
    let out = rhos
        .iter()
        .map(|&rho| {
            if spec.quadrature {
                assemble_pfc_numeric(features, model, rho, spec.rel_tol)
            } else {
                assemble_pfc(features, model, rho)
            }
        })
        .collect::<prismconn::Result<Vec<_>>>()?;
    let outside: Vec<f64> = out.iter().filter(|b| !b.asymptotic_regime).map(|b| b.rho).collect();
    if !outside.is_empty() {
        log::warn!("expansion outside its dense regime at rho = {outside:?}");
    }
    Ok(out)
}

fn analytic(spec: &JobSpec) -> Result<(), Failure> {
    let (domain, model) = setup(spec)?;
    let rhos = densities(spec, &domain);
    let all = breakdowns(spec, &domain.features(), &model, &rhos)?;

    let long = all.iter().flat_map(|b| {
        b.terms.iter().map(move |t| {
            vec![
                num(b.rho),
                t.label.to_string(),
                t.multiplicity.to_string(),
                num(t.prefactor),
                num(t.exponent_rate),
                num(t.value(b.rho)),
                num(b.p_out),
                num(b.p_fc),
            ]
        })
    });
    write_csv(&spec.out.join("analytic_breakdown.csv"), &BREAKDOWN_HEADER, long)?;

    let labels: Vec<String> = all[0].groups.iter().map(|g| g.label.clone()).collect();
    let mut header = vec!["rho"];
    header.extend(labels.iter().map(String::as_str));
    header.push("total");
    let wide = all.iter().map(|b| {
        let mut row = vec![num(b.rho)];
        row.extend(b.groups.iter().map(|g| num(g.value)));
        row.push(num(b.p_out));
        row
    });
    write_csv(&spec.out.join("analytic_groups.csv"), &header, wide)?;
    write_json(&spec.out.join("analytic.json"), &all)?;

    write_svg(spec, "analytic.svg", || {
        let mut series: Vec<Series> = COMPONENT_COLORS
            .iter()
            .filter(|(c, _)| all[0].groups.iter().any(|g| g.component == *c))
            .map(|&(c, color)| Series {
                name: c.symbol().to_string(),
                color,
                points: all.iter().map(|b| (b.rho, b.component_value(c))).collect(),
                errors: None,
                line: true,
            })
            .collect();
        series.push(Series {
            name: "total".into(),
            color: "black",
            points: all.iter().map(|b| (b.rho, b.p_out)).collect(),
            errors: None,
            line: true,
        });
        Chart {
            title: "Outage probability by boundary component".into(),
            x_label: "rho".into(),
            y_label: "P_out".into(),
            log_y: true,
            series,
        }
        .to_svg()
    })
}

fn run_sweep(spec: &JobSpec, domain: &Domain, model: &ConnectivityModel) -> Result<Vec<SimResult>, Failure> {
    let sizes: Vec<SampleSize> = match spec.sweep.as_ref().expect("sweep checked at resolve") {
        Sweep::Density(r) => r.iter().map(|&rho| SampleSize::Density(rho)).collect(),
        Sweep::Count(n) => n.iter().map(|&n| SampleSize::Count(n)).collect(),
    };
    let config = SimConfig::new(domain.clone(), *model, sizes[0])
        .with_trials(spec.trials)
        .with_seed(spec.seed);
    Ok(sweep(&config, &sizes)?)
}

fn simulate(spec: &JobSpec) -> Result<(), Failure> {
    let (domain, model) = setup(spec)?;
    let results = run_sweep(spec, &domain, &model)?;
    let rows = results.iter().map(|r| {
        vec![
            num(r.rho),
            r.n_nodes.to_string(),
            r.n_trials.to_string(),
            r.fc_count.to_string(),
            num(r.p_fc_hat),
            num(r.std_err),
            num(r.p_min_deg_hat),
            num(r.wall_time),
        ]
    });
    write_csv(&spec.out.join("sweep.csv"), &SWEEP_HEADER, rows)?;
    write_json(&spec.out.join("sweep.json"), &results)?;
    write_svg(spec, "sweep.svg", || {
        Chart {
            title: "Simulated outage probability".into(),
            x_label: "rho".into(),
            y_label: "P_out".into(),
            log_y: true,
            series: vec![Series {
                name: "simulation".into(),
                color: "black",
                points: results.iter().map(|r| (r.rho, r.p_out_hat())).collect(),
                errors: Some(results.iter().map(|r| r.std_err).collect()),
                line: false,
            }],
        }
        .to_svg()
    })
}

#[derive(Serialize)]
struct ComparePoint<'a> {
    simulation: &'a SimResult,
    analytic: &'a PfcBreakdown,
    z_score: Option<f64>,
}

/// `(p_out_hat - analytic) / std_err`, undefined when every trial agreed.
pub fn z_score(sim: &SimResult, analytic: f64) -> Option<f64> {
    (sim.fc_count != 0 && sim.fc_count != sim.n_trials).then(|| (sim.p_out_hat() - analytic) / sim.std_err)
}

fn compare(spec: &JobSpec) -> Result<(), Failure> {
    let (domain, model) = setup(spec)?;
    let results = run_sweep(spec, &domain, &model)?;
    let rhos: Vec<f64> = results.iter().map(|r| r.rho).collect();
    let all = breakdowns(spec, &domain.features(), &model, &rhos)?;
    let points: Vec<ComparePoint> = results
        .iter()
        .zip(&all)
        .map(|(s, b)| ComparePoint { simulation: s, analytic: b, z_score: z_score(s, b.p_out) })
        .collect();
    let rows = points.iter().map(|p| {
        vec![
            num(p.simulation.rho),
            p.simulation.n_nodes.to_string(),
            p.simulation.n_trials.to_string(),
            p.simulation.fc_count.to_string(),
            num(p.simulation.p_out_hat()),
            num(p.simulation.std_err),
            num(p.analytic.p_out),
            p.z_score.map_or(String::new(), num),
        ]
    });
    write_csv(&spec.out.join("compare.csv"), &COMPARE_HEADER, rows)?;
    write_json(&spec.out.join("compare.json"), &points)?;
    write_svg(spec, "compare.svg", || {
        Chart {
            title: "Expansion against simulation".into(),
            x_label: "rho".into(),
            y_label: "P_out".into(),
            log_y: true,
            series: vec![
                Series {
                    name: "expansion".into(),
                    color: "black",
                    points: all.iter().map(|b| (b.rho, b.p_out)).collect(),
                    errors: None,
                    line: true,
                },
                Series {
                    name: "simulation".into(),
                    color: "red",
                    points: results.iter().map(|r| (r.rho, r.p_out_hat())).collect(),
                    errors: Some(results.iter().map(|r| r.std_err).collect()),
                    line: false,
                },
            ],
        }
        .to_svg()
    })
}

fn phase(spec: &JobSpec) -> Result<(), Failure> {
    let model = spec.model.build()?;
    let beta = model
        .beta()
        .filter(|_| model.has_closed_forms())
        .ok_or_else(|| Failure::Config(anyhow!("phase-map needs the mimo_mrc_2x2 model")))?;
    let rhos = match spec.sweep.as_ref() {
        Some(Sweep::Density(r)) => r.clone(),
        _ => unreachable!("phase-map sweep resolved to densities"),
    };
    let lengths = spec.lengths.clone().expect("lengths resolved for phase-map");
    let map = phase_map(beta, &rhos, &lengths)?;

    let path = spec.out.join("phase_map.csv");
    {
        use std::io::Write;
        let mut f = std::fs::File::create(&path)?;
        writeln!(
            f,
            "# house phase map, beta={beta}, {} rho points x {} L points",
            rhos.len(),
            lengths.len()
        )?;
    }
    let file = std::fs::OpenOptions::new().append(true).open(&path)?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(PHASE_HEADER)?;
    for (rho, l, c) in map.iter() {
        w.write_record([num(rho), num(l), c.symbol().to_string()])?;
    }
    w.flush()?;
    write_json(&spec.out.join("phase_map.json"), &map)?;
    write_svg(spec, "phase_map.svg", || {
        let cells: Vec<Vec<&str>> = map.cells.iter().map(|row| row.iter().map(|c| c.symbol()).collect()).collect();
        let palette: Vec<(&str, &'static str)> = COMPONENT_COLORS.iter().map(|&(c, col)| (c.symbol(), col)).collect();
        label_grid("Dominant contribution", "rho", "L", &rhos, &lengths, &cells, &palette)
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationRow {
    pub kind: String,
    pub params: String,
    pub closed_form: f64,
    pub quadrature: f64,
    pub rel_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

const K: f64 = 23.0 - std::f64::consts::SQRT_2;

fn row(kind: &str, params: String, closed: f64, quad: f64, tolerance: f64) -> ValidationRow {
    let rel_error = (quad - closed).abs() / closed.abs();
    ValidationRow {
        kind: kind.into(),
        params,
        closed_form: closed,
        quadrature: quad,
        rel_error,
        tolerance,
        pass: rel_error <= tolerance,
    }
}

/// Closed forms against the quadrature oracle over the default grid.
pub fn validation_rows(rel_tol: f64, edge_length: f64) -> Result<Vec<ValidationRow>, Failure> {
    let mut rows = Vec::new();
    for beta in [0.5, 1.0, 2.0] {
        let model = ConnectivityModel::mimo_mrc(beta)?;
        let eval = |kind: IntegralKind| IntegralSpec::new(kind, model).with_rel_tol(rel_tol).evaluate();
        for angle in [FRAC_PI_3, FRAC_PI_2, 3.0 * PI / 4.0] {
            let (r2, theta2, z2) = (0.05, 0.5 * angle, 0.04);
            let g = theta2.sin() - (theta2 - angle).sin();
            let closed = (14.0 * z2 * angle + K / 2.0 * (PI / beta).sqrt() * angle + 7.0 * PI * r2 * g) / (8.0 * beta);
            let quad = eval(IntegralKind::InnerCorner { r2, theta2, z2, angle })?;
            rows.push(row(
                "inner_corner",
                format!("beta={beta} theta={:.4}pi r2={r2} theta2={theta2:.4} z2={z2}", angle / PI),
                closed,
                quad,
                1e-4,
            ));
        }
        let radius = 1e5 / beta.sqrt();
        let depth = 0.05;
        let closed = PI / (4.0 * beta) * (K / 2.0 * (PI / beta).sqrt() + 14.0 * depth);
        let quad = eval(IntegralKind::InnerFace { r2: radius - depth, radius })?;
        rows.push(row("inner_face", format!("beta={beta} R={radius} depth={depth}"), closed, quad, 1e-4));
        let quad = eval(IntegralKind::InnerBulk)?;
        rows.push(row("inner_bulk", format!("beta={beta}"), K / 4.0 * (PI / beta).powf(1.5), quad, 1e-8));
    }
    let (beta, rho) = (1.0, 1.0);
    let model = ConnectivityModel::mimo_mrc(beta)?;
    let outer = |feature: BoundaryFeature| {
        IntegralSpec::new(IntegralKind::Outer { feature, rho }, model)
            .with_rel_tol(rel_tol)
            .evaluate()
    };
    for angle in [FRAC_PI_2, 3.0 * PI / 4.0] {
        let closed = corner_term(angle, beta)?.outer_integral(rho);
        let quad = outer(BoundaryFeature::corner(angle, 1))?;
        rows.push(row("outer_corner", format!("beta=1 rho=1 theta={:.2}pi", angle / PI), closed, quad, 1e-3));
        let closed = edge_term(angle, edge_length, beta)?.outer_integral(rho);
        let quad = outer(BoundaryFeature::edge(angle, edge_length, 1))?;
        rows.push(row(
            "outer_edge",
            format!("beta=1 rho=1 theta={:.2}pi L={edge_length}", angle / PI),
            closed,
            quad,
            1e-2,
        ));
    }
    let v = build_house(5.0)?.volume();
    let closed = bulk_term(v, beta)?.outer_integral(rho);
    rows.push(row("outer_bulk", format!("beta=1 rho=1 V={v}"), closed, outer(BoundaryFeature::bulk(v))?, 1e-6));
    Ok(rows)
}

fn validate(spec: &JobSpec) -> Result<(), Failure> {
    let rows = validation_rows(spec.rel_tol, spec.edge_length)?;
    let csv_rows = rows.iter().map(|r| {
        vec![
            r.kind.clone(),
            r.params.clone(),
            num(r.closed_form),
            num(r.quadrature),
            num(r.rel_error),
            num(r.tolerance),
            r.pass.to_string(),
        ]
    });
    write_csv(&spec.out.join("validate.csv"), &VALIDATE_HEADER, csv_rows)?;
    write_json(&spec.out.join("validate.json"), &rows)?;

    let cone: Vec<(f64, f64, f64)> = (1..40)
        .map(|i| {
            let t = PI * i as f64 / 40.0;
            (i as f64 / 40.0, corner_shape(t), cone_shape(t))
        })
        .collect();
    let cone_rows = cone.iter().map(|&(t, a, b)| {
        vec![num(t), num(a), num(b), num(((b - a) / a).abs())]
    });
    write_csv(&spec.out.join("corner_cone.csv"), &CONE_HEADER, cone_rows)?;
    write_svg(spec, "corner_cone.svg", || {
        let series = |name: &str, color, pick: fn(&(f64, f64, f64)) -> f64| Series {
            name: name.into(),
            color,
            points: cone.iter().map(|p| (p.0, pick(p))).collect(),
            errors: None,
            line: true,
        };
        Chart {
            title: "Corner and cone shape functions".into(),
            x_label: "theta / pi".into(),
            y_label: "f(theta)".into(),
            log_y: true,
            series: vec![series("corner", "blue", |p| p.1), series("cone", "red", |p| p.2)],
        }
        .to_svg()
    })?;

    let failed: Vec<String> = rows.iter().filter(|r| !r.pass).map(|r| format!("{} ({})", r.kind, r.params)).collect();
    if failed.is_empty() {
        println!("validate: all {} rows pass", rows.len());
        Ok(())
    } else {
        Err(Failure::Validation(format!("{} of {} rows: {}", failed.len(), rows.len(), failed.join("; "))))
    }
}
