//! Oracles shared by the integration tests.
#![allow(dead_code)]

use prismconn::geometry::{Domain, DomainKind, Point2};
use prismconn::quadrature::adaptive::{integrate_with_breaks, Tolerance};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

pub const BINS_PER_AXIS: usize = 4;

/// Chi-square statistic, degrees of freedom and upper-tail p-value for
/// `samples` uniform draws binned on a 4×4×4 grid over the bounding box.
/// Expected counts use the exact volume of each bin inside the domain.
pub fn uniformity_chi_square(domain: &Domain, samples: usize, seed: u64) -> (f64, f64, f64) {
    let (lo, hi) = domain.bounding_box();
    let k = BINS_PER_AXIS;
    let edges = |axis: usize| -> Vec<f64> {
        (0..=k)
            .map(|i| lo[axis] + (hi[axis] - lo[axis]) * i as f64 / k as f64)
            .collect()
    };
    let (ex, ey, ez) = (edges(0), edges(1), edges(2));
    let bin_of = |v: f64, axis: usize| -> usize {
        let t = (v - lo[axis]) / (hi[axis] - lo[axis]);
        ((t * k as f64) as usize).min(k - 1)
    };

    let mut counts = vec![0u64; k * k * k];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let p = domain.sample_uniform(&mut rng);
        counts[(bin_of(p[0], 0) * k + bin_of(p[1], 1)) * k + bin_of(p[2], 2)] += 1;
    }

    let volume = domain.volume();
    let mut stat = 0.0;
    let mut cells = 0usize;
    for i in 0..k {
        for j in 0..k {
            for l in 0..k {
                let v = bin_volume(domain, [ex[i], ex[i + 1]], [ey[j], ey[j + 1]], [ez[l], ez[l + 1]]);
                let observed = counts[(i * k + j) * k + l] as f64;
                let expected = samples as f64 * v / volume;
                if expected < 1e-9 {
                    assert_eq!(observed, 0.0, "samples in an empty bin");
                    continue;
                }
                stat += (observed - expected).powi(2) / expected;
                cells += 1;
            }
        }
    }
    let df = (cells - 1) as f64;
    let p = ChiSquared::new(df).unwrap().sf(stat);
    (stat, df, p)
}

/// Volume of `[x] × [y] × [z]` inside the domain.
pub fn bin_volume(domain: &Domain, x: [f64; 2], y: [f64; 2], z: [f64; 2]) -> f64 {
    match domain.kind() {
        DomainKind::RightPrism { base, height } => {
            // base polygon lives in (x, z); extrusion along y
            let clipped = clip_to_rect(base.vertices(), x, z);
            let dy = (y[1].min(*height) - y[0].max(0.0)).max(0.0);
            shoelace(&clipped) * dy
        }
        DomainKind::HalfCylinder { radius, height } => {
            let r = *radius;
            let dz = (z[1].min(*height) - z[0].max(0.0)).max(0.0);
            let top = |x: f64| (r * r - x * x).max(0.0).sqrt();
            let mut breaks = Vec::new();
            for yy in y {
                if yy.abs() < r {
                    let s = (r * r - yy * yy).sqrt();
                    breaks.extend([-s, s]);
                }
            }
            breaks.sort_by(f64::total_cmp);
            let area = integrate_with_breaks(
                |xx| Ok((y[1].min(top(xx)) - y[0].max(0.0)).max(0.0)),
                x[0].max(-r),
                x[1].min(r),
                &breaks,
                &Tolerance::relative(1e-12).with_abs(1e-14),
            )
            .unwrap()
            .value;
            area * dz
        }
    }
}

fn clip_to_rect(poly: &[Point2], u: [f64; 2], v: [f64; 2]) -> Vec<Point2> {
    // Sutherland–Hodgman against the four sides
    let planes: [(usize, f64, f64); 4] = [(0, u[0], 1.0), (0, u[1], -1.0), (1, v[0], 1.0), (1, v[1], -1.0)];
    let mut out = poly.to_vec();
    for (axis, c, sign) in planes {
        let inside = |p: &Point2| sign * (p[axis] - c) >= 0.0;
        let input = std::mem::take(&mut out);
        for (idx, cur) in input.iter().enumerate() {
            let prev = input[(idx + input.len() - 1) % input.len()];
            let crossing = |a: Point2, b: Point2| {
                let t = (c - a[axis]) / (b[axis] - a[axis]);
                [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
            };
            match (inside(&prev), inside(cur)) {
                (true, true) => out.push(*cur),
                (true, false) => out.push(crossing(prev, *cur)),
                (false, true) => {
                    out.push(crossing(prev, *cur));
                    out.push(*cur);
                }
                (false, false) => {}
            }
        }
        if out.is_empty() {
            break;
        }
    }
    out
}

fn shoelace(poly: &[Point2]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut twice = 0.0;
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        twice += a[0] * b[1] - a[1] * b[0];
    }
    0.5 * twice.abs()
}

/// Connectivity by boolean transitive closure (Warshall).
pub fn closure_connected(n: usize, edges: &[(usize, usize)]) -> bool {
    if n == 0 {
        return false;
    }
    let mut reach = vec![vec![false; n]; n];
    for (i, row) in reach.iter_mut().enumerate() {
        row[i] = true;
    }
    for &(a, b) in edges {
        reach[a][b] = true;
        reach[b][a] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    reach[0].iter().all(|&r| r)
}

/// Connected components by breadth-first search over an adjacency matrix.
pub fn bfs_components(n: usize, edges: &[(usize, usize)]) -> usize {
    let mut adj = vec![vec![false; n]; n];
    for &(a, b) in edges {
        adj[a][b] = true;
        adj[b][a] = true;
    }
    let mut seen = vec![false; n];
    let mut count = 0;
    for s in 0..n {
        if seen[s] {
            continue;
        }
        count += 1;
        let mut queue = std::collections::VecDeque::from([s]);
        seen[s] = true;
        while let Some(v) = queue.pop_front() {
            for w in 0..n {
                if adj[v][w] && !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    count
}

/// All pairs `i < j` on `n` vertices, in lexicographic order.
pub fn all_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

/// Edges of the graph whose pair `k` is present when bit `k` of `mask` is set.
pub fn graph_from_mask(pairs: &[(usize, usize)], mask: u64) -> Vec<(usize, usize)> {
    pairs
        .iter()
        .enumerate()
        .filter(|(k, _)| mask >> k & 1 == 1)
        .map(|(_, &p)| p)
        .collect()
}

/// A printed group of the house or half-cylinder expansion: the label, the
/// coefficient in front of the exponential (outer integral, without the
/// global factor ρ) and the coefficient of ρ in the exponent.
pub struct PrintedGroup {
    pub label: &'static str,
    pub coefficient: f64,
    pub rate: f64,
}

const PI: f64 = std::f64::consts::PI;
const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// The house groups `U, F, E1, E2, C1, C2` as printed.
pub fn printed_house(l: f64, beta: f64, rho: f64) -> Vec<PrintedGroup> {
    let k = 23.0 - SQRT_2;
    let pb = (PI / beta).powf(1.5);
    let v = 1.25 * l.powi(3);
    let s = (11.0 + 2.0 * SQRT_2) / 2.0 * l * l;
    vec![
        PrintedGroup {
            label: "U",
            coefficient: v,
            rate: k * PI.powf(1.5) / (4.0 * beta.powf(1.5)),
        },
        PrintedGroup {
            label: "F",
            coefficient: 2.0 * beta * s / (7.0 * PI * rho),
            rate: k * PI.powf(1.5) / (8.0 * beta.powf(1.5)),
        },
        PrintedGroup {
            label: "E1",
            coefficient: l * (9.0 + 2.0 * SQRT_2) * 16.0 * beta * beta / (49.0 * PI * PI * rho * rho),
            rate: k / 16.0 * pb,
        },
        PrintedGroup {
            label: "E2",
            coefficient: 2.0 * l * 16.0 * SQRT_2 * beta * beta / (49.0 * PI * PI * rho * rho),
            rate: k * 3.0 / 32.0 * pb,
        },
        PrintedGroup {
            label: "C1",
            coefficient: 6.0 * 512.0 * beta.powi(3) / (343.0 * PI.powi(3) * rho.powi(3)),
            rate: k / 32.0 * pb,
        },
        PrintedGroup {
            label: "C2",
            coefficient: 4.0 * 1024.0 * SQRT_2 * beta.powi(3) / (1029.0 * PI.powi(3) * rho.powi(3)),
            rate: k * 3.0 / 64.0 * pb,
        },
    ]
}

/// The half-cylinder groups `U, F, E, C` as printed.
pub fn printed_half_cylinder(r: f64, h: f64, beta: f64, rho: f64) -> Vec<PrintedGroup> {
    let k = 23.0 - SQRT_2;
    let rate = |d: f64| k * PI.powf(1.5) / (d * beta.powf(1.5));
    vec![
        PrintedGroup {
            label: "U",
            coefficient: PI * r * r * h / 2.0,
            rate: rate(4.0),
        },
        PrintedGroup {
            label: "F",
            coefficient: (PI * r * r + 2.0 * r * h + PI * r * h) * 2.0 * beta / (7.0 * PI * rho),
            rate: rate(8.0),
        },
        PrintedGroup {
            label: "E",
            coefficient: (2.0 * PI * r + 4.0 * r + 2.0 * h) * 16.0 * beta * beta / (49.0 * PI * PI * rho * rho),
            rate: rate(16.0),
        },
        PrintedGroup {
            label: "C",
            coefficient: 4.0 * 512.0 * beta.powi(3) / (343.0 * PI.powi(3) * rho.powi(3)),
            rate: rate(32.0),
        },
    ]
}

/// Largest relative mismatch between a breakdown and printed groups, over
/// group coefficients (`Σ multiplicity · prefactor · ρ^-ℓ`) and exponent rates.
pub fn printed_mismatch(b: &prismconn::analytic::PfcBreakdown, printed: &[PrintedGroup]) -> f64 {
    use prismconn::analytic::{Component, TermLabel};
    let mut worst = 0.0_f64;
    assert_eq!(b.groups.len(), printed.len(), "group count");
    for (g, p) in b.groups.iter().zip(printed) {
        assert_eq!(g.label, p.label);
        let members: Vec<_> = b
            .terms
            .iter()
            .filter(|t| {
                let c = match t.label {
                    TermLabel::Bulk => Component::Bulk,
                    TermLabel::Face => Component::Face,
                    TermLabel::Edge { .. } => Component::Edge,
                    TermLabel::Corner { .. } | TermLabel::Cone { .. } => Component::Corner,
                };
                let angle = match t.label {
                    TermLabel::Edge { angle, .. } | TermLabel::Corner { angle } => Some(angle),
                    _ => None,
                };
                c == g.component
                    && match (angle, g.angle) {
                        (Some(a), Some(b)) => (a - b).abs() < 1e-9,
                        (None, None) => true,
                        _ => false,
                    }
            })
            .collect();
        let coefficient: f64 = members
            .iter()
            .map(|t| t.multiplicity as f64 * t.prefactor * b.rho.powi(-(t.codim as i32)))
            .sum();
        worst = worst.max((coefficient - p.coefficient).abs() / p.coefficient.abs());
        for t in &members {
            worst = worst.max((t.exponent_rate - p.rate).abs() / p.rate);
        }
        let outer = p.coefficient * (-b.rho * p.rate).exp();
        if outer > 1e-290 {
            worst = worst.max((g.value / b.rho - outer).abs() / outer);
        }
    }
    worst
}
