//! Acceptance run. One PASS/FAIL line per criterion; exits non-zero if any fail.
//!
//! Run with `cargo test -p prismconn --test acceptance`. The two Monte Carlo
//! reproductions take a few minutes on one core.

mod common;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI, SQRT_2};
use std::time::Instant;

use common::{
    all_pairs, closure_connected, graph_from_mask, printed_half_cylinder, printed_house,
    printed_mismatch, uniformity_chi_square,
};
use prismconn::analytic::{
    assemble_pfc, bulk_term, cone_shape, cone_term, corner_shape, corner_term, edge_term,
    phase_map, Component, PfcBreakdown, TermLabel,
};
use prismconn::channel::ConnectivityModel;
use prismconn::geometry::{
    build_half_cylinder, build_house, build_right_prism, BoundaryFeature, Domain, Polygon2D,
};
use prismconn::quadrature::Oracle;
use prismconn::simulator::{analyze_graph, estimate, run_trial, SampleSize, SimConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Tolerances, pinned.
const PRINTED_REL: f64 = 1e-12;
const INNER_REL: f64 = 1e-4;
const INNER_BULK_REL: f64 = 1e-8;
const OUTER_CORNER_REL: f64 = 1e-3;
const OUTER_EDGE_REL: f64 = 1e-2;
const OUTER_BULK_REL: f64 = 1e-6;
const SIM_TRIALS: u64 = 200_000;
const SIM_SIGMAS: f64 = 3.0;
const SIM_MODEL_REL: f64 = 0.20;
const EXPONENT_REL: f64 = 1e-12;
const RATIO_ABS: f64 = 2.0 * f64::EPSILON;
const IMPLICATION_TRIALS: u64 = 100_000;
const CONE_BAND: f64 = 0.25;
const CHI_SQUARE_SAMPLES: usize = 1_000_000;
const CHI_SQUARE_ALPHA: f64 = 0.001;
const LINK_DRAWS: u64 = 1_000_000;
const LINK_SIGMAS: f64 = 4.0;

const BETAS: [f64; 3] = [0.5, 1.0, 2.0];
const ANGLES: [f64; 3] = [FRAC_PI_3, FRAC_PI_2, 3.0 * PI / 4.0];
const K: f64 = 23.0 - SQRT_2;

type Outcome = (bool, String);
type Criterion = (&'static str, fn() -> Outcome);

fn mrc(beta: f64) -> ConnectivityModel {
    ConnectivityModel::mimo_mrc(beta).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn house_features(l: f64) -> prismconn::geometry::FeatureSet {
    build_house(l).unwrap().features()
}

fn printed_forms() -> Outcome {
    let mut worst = 0.0_f64;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let (l, beta, rho) = (rng.random_range(1.0..100.0), rng.random_range(0.2..4.0), rng.random_range(0.05..6.0));
        let b = assemble_pfc(&house_features(l), &mrc(beta), rho).unwrap();
        worst = worst.max(printed_mismatch(&b, &printed_house(l, beta, rho)));
        let (r, h) = (rng.random_range(1.0..20.0), rng.random_range(1.0..20.0));
        let d = build_half_cylinder(r, h).unwrap();
        let b = assemble_pfc(&d.features(), &mrc(beta), rho).unwrap();
        worst = worst.max(printed_mismatch(&b, &printed_half_cylinder(r, h, beta, rho)));
    }
    (worst < PRINTED_REL, format!("worst rel {worst:.2e} over 200 random (L, r, h, beta, rho), tol {PRINTED_REL:e}"))
}

fn quadrature_suite() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    let mut inner = 0.0_f64;
    let mut face = 0.0_f64;
    let mut bulk = 0.0_f64;
    for beta in BETAS {
        let o = Oracle::new(mrc(beta));
        for angle in ANGLES {
            let e = o.inner_corner(angle).unwrap();
            inner = inner
                .max(rel(e.constant, K / 16.0 * (PI / beta).sqrt() * angle / beta))
                .max(rel(e.z_slope, 7.0 * angle / (4.0 * beta)))
                .max(rel(e.radial_slope, 7.0 * PI / (8.0 * beta)));
        }
        let radius = 1e5 / beta.sqrt();
        let f = o.inner_face(radius).unwrap();
        let flat = PI / (4.0 * beta) * K / 2.0 * (PI / beta).sqrt();
        face = face.max(rel(f.value(radius), flat)).max(rel(f.depth_slope, 14.0 * PI / (4.0 * beta)));
        let b = o.inner_bulk().unwrap();
        bulk = bulk.max(rel(b.mass, K / 4.0 * (PI / beta).powf(1.5)));
    }
    ok &= inner < INNER_REL && face < INNER_REL && bulk < INNER_BULK_REL;
    notes.push(format!("inner corner {inner:.1e}, face {face:.1e} (tol {INNER_REL:e}); bulk {bulk:.1e} (tol {INNER_BULK_REL:e})"));

    let o = Oracle::new(mrc(1.0));
    let rho = 1.0;
    let mut outer = |label: &str, feature: BoundaryFeature, closed: f64, tol: f64| {
        let q = o.outer_integral(&feature, rho).unwrap();
        let r = rel(q, closed);
        ok &= r < tol;
        notes.push(format!("outer {label} {r:.1e} (tol {tol:e})"));
    };
    for angle in [FRAC_PI_2, 3.0 * PI / 4.0] {
        let c = corner_term(angle, 1.0).unwrap().outer_integral(rho);
        outer(&format!("corner {:.2}pi", angle / PI), BoundaryFeature::corner(angle, 1), c, OUTER_CORNER_REL);
    }
    for angle in [FRAC_PI_2, 3.0 * PI / 4.0] {
        let e = edge_term(angle, 5.0, 1.0).unwrap().outer_integral(rho);
        outer(&format!("edge {:.2}pi L=5", angle / PI), BoundaryFeature::edge(angle, 5.0, 1), e, OUTER_EDGE_REL);
    }
    let v = build_house(5.0).unwrap().volume();
    outer("bulk", BoundaryFeature::bulk(v), bulk_term(v, 1.0).unwrap().outer_integral(rho), OUTER_BULK_REL);
    (ok, notes.join("; "))
}

/// Simulates each `(rho, size)` point and compares with the analytic total at `rho`.
fn reproduce(domain: &Domain, points: &[(f64, usize)], seed: u64) -> Outcome {
    let features = domain.features();
    let mut ok = true;
    let mut notes = Vec::new();
    for (i, &(rho, n)) in points.iter().enumerate() {
        let config = SimConfig::new(domain.clone(), mrc(1.0), SampleSize::Count(n))
            .with_trials(SIM_TRIALS)
            .with_seed(seed + i as u64);
        let sim = estimate(&config).unwrap();
        let analytic = assemble_pfc(&features, &mrc(1.0), rho).unwrap().p_out;
        let p = sim.p_out_hat();
        let allowed = (SIM_SIGMAS * sim.std_err).max(SIM_MODEL_REL * analytic);
        let pass = (p - analytic).abs() <= allowed;
        ok &= pass;
        notes.push(format!(
            "rho={rho} N={n}: sim {p:.5} ± {:.5}, analytic {analytic:.5}, ratio {:.2}{}",
            sim.std_err,
            p / analytic,
            if pass { "" } else { " OUT" }
        ));
    }
    (ok, notes.join("; "))
}

fn house_outage() -> Outcome {
    let domain = build_house(5.0).unwrap();
    let (mut ok, mut note) = reproduce(&domain, &[(0.8, 125), (1.0, 156), (1.2, 187)], 300);
    // low-density divergence
    let rho = 0.25;
    let config = SimConfig::new(domain.clone(), mrc(1.0), SampleSize::Density(rho))
        .with_trials(SIM_TRIALS)
        .with_seed(399);
    let sim = estimate(&config).unwrap();
    let analytic = assemble_pfc(&domain.features(), &mrc(1.0), rho).unwrap().p_out;
    let diverges = analytic - sim.p_out_hat() > SIM_SIGMAS * sim.std_err;
    ok &= diverges;
    note.push_str(&format!(
        "; rho=0.25 N={}: analytic {analytic:.3} vs sim {:.4} ± {:.4}{}",
        sim.n_nodes,
        sim.p_out_hat(),
        sim.std_err,
        if diverges { " (diverges)" } else { " (no divergence)" }
    ));
    (ok, note)
}

fn half_cylinder_outage() -> Outcome {
    let domain = build_half_cylinder(5.0, 4.0).unwrap();
    let v = domain.volume();
    let points: Vec<(f64, usize)> = [1.0, 1.2].iter().map(|&rho| (rho, (rho * v).round() as usize)).collect();
    reproduce(&domain, &points, 500)
}

fn dominance() -> Outcome {
    let features = house_features(5.0);
    let mut ok = true;
    let mut worst_rho = None;
    for i in 0..=1900 {
        let rho = 1.0 + 0.01 * i as f64;
        let b = assemble_pfc(&features, &mrc(1.0), rho).unwrap();
        let corner = b.component_value(Component::Corner);
        let others = [Component::Bulk, Component::Face, Component::Edge].map(|c| b.component_value(c));
        if others.iter().any(|&v| v >= corner) {
            ok = false;
            worst_rho.get_or_insert(rho);
        }
    }
    let rhos: Vec<f64> = (1..=120).map(|i| 0.05 * i as f64).collect();
    let lengths: Vec<f64> = (0..40).map(|i| 5.0 * 1.1f64.powi(i)).collect();
    let map = phase_map(1.0, &rhos, &lengths).unwrap();
    let mut broken = 0;
    let mut outside = 0;
    for (li, &l) in lengths.iter().enumerate() {
        let features = house_features(l);
        let mut last = Component::Bulk;
        let mut last_any = Component::Bulk;
        let mut broken_any = false;
        for (ri, &rho) in rhos.iter().enumerate() {
            let c = map.get(li, ri);
            broken_any |= c < last_any;
            last_any = c;
            let b: PfcBreakdown = assemble_pfc(&features, &mrc(1.0), rho).unwrap();
            if !b.asymptotic_regime {
                continue;
            }
            if c < last {
                broken += 1;
            }
            last = c;
        }
        outside += broken_any as usize;
    }
    ok &= broken == 0;
    (
        ok,
        format!(
            "corner group largest on rho in [1, 20]: {}; rays with order violations inside the dense regime: {broken} of {} (counting rho below it: {outside})",
            worst_rho.map_or("yes".to_string(), |r| format!("no, first at rho={r}")),
            lengths.len()
        ),
    )
}

fn exponent_laws() -> Outcome {
    let mut worst = 0.0_f64;
    let tri = build_right_prism(Polygon2D::new(vec![[0.0, 0.0], [4.0, 0.0], [1.0, 3.0]]).unwrap(), 6.0).unwrap();
    let hept = build_right_prism(Polygon2D::regular(7, 3.0).unwrap(), 2.0).unwrap();
    for beta in BETAS {
        let m = mrc(beta).bulk_mass().unwrap();
        for d in [build_house(5.0).unwrap(), build_half_cylinder(5.0, 4.0).unwrap(), tri.clone(), hept.clone()] {
            let b = assemble_pfc(&d.features(), &mrc(beta), 1.0).unwrap();
            for (t, f) in b.terms.iter().zip(d.features().iter()) {
                worst = worst.max(rel(t.exponent_rate, f.solid_angle / (4.0 * PI) * m));
            }
        }
    }
    let b = assemble_pfc(&house_features(5.0), &mrc(1.0), 1.0).unwrap();
    let rate = |codim: u8| {
        b.terms
            .iter()
            .find(|t| match t.label {
                TermLabel::Edge { angle, .. } | TermLabel::Corner { angle } => angle == FRAC_PI_2,
                _ => t.codim == codim,
            } && t.codim == codim)
            .map(|t| t.exponent_rate)
    };
    let u = rate(0).unwrap();
    let mut ratio_gap = 0.0_f64;
    for (codim, share) in [(1, 0.5), (2, 0.25), (3, 0.125)] {
        let r = rate(codim).map_or(f64::INFINITY, |v| v / u);
        ratio_gap = ratio_gap.max((r - share).abs());
    }
    (
        worst < EXPONENT_REL && ratio_gap <= RATIO_ABS,
        format!("worst rel {worst:.1e} (tol {EXPONENT_REL:e}); house ratio gap {ratio_gap:.1e} (tol 2 ulp)"),
    )
}

fn graph_exactness() -> Outcome {
    let pairs = all_pairs(6);
    let mut mismatches = 0;
    let mut connected = 0;
    for mask in 0..1u64 << pairs.len() {
        let edges = graph_from_mask(&pairs, mask);
        let got = analyze_graph(6, &edges).connected;
        let want = closure_connected(6, &edges);
        mismatches += (got != want) as usize;
        connected += want as usize;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let pairs12 = all_pairs(12);
    for _ in 0..1000 {
        let p: f64 = rng.random_range(0.05..0.5);
        let edges: Vec<_> = pairs12.iter().copied().filter(|_| rng.random_bool(p)).collect();
        mismatches += (analyze_graph(12, &edges).connected != closure_connected(12, &edges)) as usize;
    }
    let config = SimConfig::new(build_house(5.0).unwrap(), mrc(1.0), SampleSize::Density(0.6))
        .with_trials(IMPLICATION_TRIALS)
        .with_seed(70);
    let n = config.node_count().unwrap();
    let mut violations = 0;
    let mut fc = 0;
    for index in 0..IMPLICATION_TRIALS {
        let t = run_trial(&config, index).unwrap();
        violations += (t.connected && t.min_degree < 1 || !t.is_consistent(n)) as usize;
        fc += t.connected as usize;
    }
    (
        mismatches == 0 && violations == 0 && connected == 26_704,
        format!(
            "{mismatches} mismatches over 2^15 + 1000 graphs ({connected} connected on 6 vertices); {violations} implication violations over {IMPLICATION_TRIALS} trials ({fc} connected)"
        ),
    )
}

fn cone() -> Outcome {
    let mut shared = true;
    let mut worst = 0.0_f64;
    let mut worst_at = 0.0;
    for i in 0..=200 {
        let angle = FRAC_PI_4 + (PI / 2.0) * i as f64 / 200.0;
        shared &= cone_term(angle, 1.0).unwrap().exponent_rate == corner_term(angle, 1.0).unwrap().exponent_rate;
        let r = rel(cone_shape(angle), corner_shape(angle));
        if r > worst {
            worst = r;
            worst_at = angle;
        }
    }
    let diverges = corner_shape(PI - 1e-6) > 1e5;
    let bounded = (0..=1000).map(|i| cone_shape(FRAC_PI_2 + FRAC_PI_2 * i as f64 / 1000.0)).all(|f| f.is_finite() && f < 1.0);
    (
        shared && worst <= CONE_BAND && diverges && bounded,
        format!(
            "exponents shared: {shared}; worst shape gap {:.1}% at {:.3}pi (band {:.0}%); corner diverges: {diverges}; cone bounded: {bounded}",
            100.0 * worst,
            worst_at / PI,
            100.0 * CONE_BAND
        ),
    )
}

fn sampler_and_links() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    let hept = build_right_prism(Polygon2D::regular(7, 3.0).unwrap(), 2.0).unwrap();
    for (name, d) in [("house(5)", build_house(5.0).unwrap()), ("half_cylinder(5,4)", build_half_cylinder(5.0, 4.0).unwrap()), ("7-gon prism", hept)] {
        let (stat, df, p) = uniformity_chi_square(&d, CHI_SQUARE_SAMPLES, 9);
        ok &= p > CHI_SQUARE_ALPHA;
        notes.push(format!("{name} chi2 {stat:.1}/{df} p={p:.3}"));
    }
    let model = mrc(1.0);
    let h = model.h(1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let hits = (0..LINK_DRAWS).filter(|_| model.sample_link(1.0, &mut rng).unwrap()).count() as f64;
    let rate = hits / LINK_DRAWS as f64;
    let sd = (h * (1.0 - h) / LINK_DRAWS as f64).sqrt();
    let z = (rate - h) / sd;
    let exact = 3.0 / 1f64.exp() - (-2.0f64).exp();
    ok &= z.abs() <= LINK_SIGMAS && rel(h, exact) < 1e-14;
    notes.push(format!("link rate {rate:.5} vs h(1)={h:.5}, z={z:.2}"));
    (ok, notes.join("; "))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("closed-form fidelity", printed_forms),
        ("quadrature oracle suite", quadrature_suite),
        ("house outage vs simulation", house_outage),
        ("half-cylinder outage vs simulation", half_cylinder_outage),
        ("dominance structure", dominance),
        ("exponent laws", exponent_laws),
        ("connectivity decision", graph_exactness),
        ("cone approximation", cone),
        ("sampler and link fidelity", sampler_and_links),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = check();
        failed += !ok as usize;
        println!(
            "criterion {}: {} [{name}] ({detail}) [{:.1}s]",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {} passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
