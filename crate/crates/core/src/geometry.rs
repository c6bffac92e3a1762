//! Domains, boundary-feature inventories and uniform point sampling.
//!
//! Coordinate conventions:
//!
//! * A right prism's cross-section polygon is given in `(u, v)` coordinates,
//!   placed in the `x`–`z` plane (`x = u`, `z = v`) and extruded along `y`
//!   over `[0, height]`. With this convention the "house" prism has its
//!   square footprint `[0, L] x [0, L]` in `x`–`y`, walls for `z in [0, L]`
//!   and the roof for `z in [L, 3L/2]` with cross-section
//!   `|x - L/2| <= 3L/2 - z`.
//! * The half-cylinder has its axis along `z` over `[0, height]`, the curved
//!   face on `x² + y² = r²` and the flat face on the plane `y = 0` (`y >= 0`
//!   inside).

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type Point2 = [f64; 2];
pub type Point3 = [f64; 3];

/// Angles closer than this (radians) are treated as the same angle class.
pub const ANGLE_TOLERANCE: f64 = 1e-9;

/// Relative tolerance used for coincident vertices and membership tests.
const LENGTH_TOLERANCE: f64 = 1e-12;

/// A strictly convex polygon with counter-clockwise vertices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Polygon2D {
    vertices: Vec<Point2>,
}

impl Polygon2D {
    pub fn new(vertices: Vec<Point2>) -> Result<Self> {
        let q = vertices.len();
        if q < 3 {
            return Err(Error::InvalidGeometry(format!(
                "polygon needs at least 3 vertices, got {q}"
            )));
        }
        if vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidGeometry("non-finite vertex coordinate".into()));
        }
        let scale = coordinate_scale(&vertices);
        for i in 0..q {
            for j in (i + 1)..q {
                if dist2(vertices[i], vertices[j]).sqrt() <= LENGTH_TOLERANCE * scale {
                    return Err(Error::InvalidGeometry(format!(
                        "vertices {i} and {j} coincide"
                    )));
                }
            }
        }
        for i in 0..q {
            let a = vertices[i];
            let b = vertices[(i + 1) % q];
            let c = vertices[(i + 2) % q];
            let turn = cross(sub(b, a), sub(c, b));
            if turn <= LENGTH_TOLERANCE * scale * scale {
                return Err(Error::InvalidGeometry(format!(
                    "polygon is not strictly convex and counter-clockwise at vertex {}",
                    (i + 1) % q
                )));
            }
        }
        // Consecutive left turns alone admit self-intersecting stars.
        let total_turn: f64 = (0..q)
            .map(|i| {
                let e0 = sub(vertices[(i + 1) % q], vertices[i]);
                let e1 = sub(vertices[(i + 2) % q], vertices[(i + 1) % q]);
                cross(e0, e1).atan2(dot(e0, e1))
            })
            .sum();
        if (total_turn - 2.0 * PI).abs() > 1e-6 {
            return Err(Error::InvalidGeometry(
                "polygon winds more than once (self-intersecting)".into(),
            ));
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn area(&self) -> f64 {
        let q = self.len();
        0.5 * (0..q)
            .map(|i| cross(self.vertices[i], self.vertices[(i + 1) % q]))
            .sum::<f64>()
    }

    /// Length of side `i`, joining vertex `i` to vertex `i + 1`.
    pub fn side_lengths(&self) -> Vec<f64> {
        let q = self.len();
        (0..q)
            .map(|i| dist2(self.vertices[i], self.vertices[(i + 1) % q]).sqrt())
            .collect()
    }

    pub fn perimeter(&self) -> f64 {
        self.side_lengths().iter().sum()
    }

    /// Interior angle at each vertex, in radians.
    pub fn interior_angles(&self) -> Vec<f64> {
        let q = self.len();
        (0..q)
            .map(|i| {
                let prev = self.vertices[(i + q - 1) % q];
                let here = self.vertices[i];
                let next = self.vertices[(i + 1) % q];
                let e0 = sub(here, prev);
                let e1 = sub(next, here);
                PI - cross(e0, e1).atan2(dot(e0, e1))
            })
            .collect()
    }

    /// Closed-region membership with a small relative tolerance.
    pub fn contains(&self, p: Point2) -> bool {
        let q = self.len();
        let scale = coordinate_scale(&self.vertices);
        (0..q).all(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % q];
            cross(sub(b, a), sub(p, a)) >= -LENGTH_TOLERANCE * scale * scale
        })
    }

    /// Regular `q`-gon with the given circumradius, first vertex on the +u axis.
    pub fn regular(q: usize, circumradius: f64) -> Result<Self> {
        if !(circumradius > 0.0) {
            return Err(Error::InvalidGeometry("circumradius must be positive".into()));
        }
        let vertices = (0..q)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / q as f64;
                [circumradius * a.cos(), circumradius * a.sin()]
            })
            .collect();
        Self::new(vertices)
    }

    /// House cross-section: square of side `l` topped by a right-angled
    /// isosceles triangle with apex at `(l/2, 3l/2)`.
    pub fn house(l: f64) -> Result<Self> {
        if !(l > 0.0) || !l.is_finite() {
            return Err(Error::InvalidGeometry(format!("house side must be positive, got {l}")));
        }
        Self::new(vec![[0.0, 0.0], [l, 0.0], [l, l], [0.5 * l, 1.5 * l], [0.0, l]])
    }

    fn fan_triangles(&self) -> Vec<[Point2; 3]> {
        let v0 = self.vertices[0];
        self.vertices
            .windows(2)
            .skip(1)
            .map(|w| [v0, w[0], w[1]])
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum DomainKind {
    RightPrism { base: Polygon2D, height: f64 },
    HalfCylinder { radius: f64, height: f64 },
}

/// A bounded convex region in which nodes are deployed.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    kind: DomainKind,
    volume: f64,
    surface_area: f64,
    // Fan triangulation and cumulative area fractions; empty for the half-cylinder.
    triangles: Vec<[Point2; 3]>,
    cumulative: Vec<f64>,
}

pub fn build_right_prism(base: Polygon2D, height: f64) -> Result<Domain> {
    check_positive("prism height", height)?;
    let area = base.area();
    let volume = area * height;
    let surface_area = 2.0 * area + base.perimeter() * height;

    let triangles = base.fan_triangles();
    let mut acc = 0.0;
    let mut cumulative: Vec<f64> = triangles
        .iter()
        .map(|t| {
            acc += 0.5 * cross(sub(t[1], t[0]), sub(t[2], t[0]));
            acc / area
        })
        .collect();
    if let Some(last) = cumulative.last_mut() {
        *last = 1.0;
    }

    Ok(Domain {
        kind: DomainKind::RightPrism { base, height },
        volume,
        surface_area,
        triangles,
        cumulative,
    })
}

pub fn build_house(l: f64) -> Result<Domain> {
    build_right_prism(Polygon2D::house(l)?, l)
}

pub fn build_half_cylinder(radius: f64, height: f64) -> Result<Domain> {
    check_positive("half-cylinder radius", radius)?;
    check_positive("half-cylinder height", height)?;
    Ok(Domain {
        kind: DomainKind::HalfCylinder { radius, height },
        volume: 0.5 * PI * radius * radius * height,
        surface_area: PI * radius * radius + 2.0 * radius * height + PI * radius * height,
        triangles: Vec::new(),
        cumulative: Vec::new(),
    })
}

impl Domain {
    pub fn kind(&self) -> &DomainKind {
        &self.kind
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn surface_area(&self) -> f64 {
        self.surface_area
    }

    /// `V^(1/3)`, the typical length used for the `sqrt(beta) L >> 1` regime check.
    pub fn characteristic_length(&self) -> f64 {
        self.volume.cbrt()
    }

    /// Axis-aligned bounding box as `(min, max)` corners.
    pub fn bounding_box(&self) -> (Point3, Point3) {
        match &self.kind {
            DomainKind::RightPrism { base, height } => {
                let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
                for v in base.vertices() {
                    for k in 0..2 {
                        lo[k] = lo[k].min(v[k]);
                        hi[k] = hi[k].max(v[k]);
                    }
                }
                ([lo[0], 0.0, lo[1]], [hi[0], *height, hi[1]])
            }
            DomainKind::HalfCylinder { radius, height } => {
                ([-radius, 0.0, 0.0], [*radius, *radius, *height])
            }
        }
    }

    /// Upper bound on the distance between any two points of the domain.
    pub fn diameter_bound(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        dist3(lo, hi)
    }

    pub fn contains(&self, p: Point3) -> bool {
        let [x, y, z] = p;
        match &self.kind {
            DomainKind::RightPrism { base, height } => {
                let eps = LENGTH_TOLERANCE * height.max(1.0);
                y >= -eps && y <= height + eps && base.contains([x, z])
            }
            DomainKind::HalfCylinder { radius, height } => {
                let eps = LENGTH_TOLERANCE * radius.max(*height).max(1.0);
                y >= -eps
                    && z >= -eps
                    && z <= height + eps
                    && x * x + y * y <= radius * radius * (1.0 + 2.0 * LENGTH_TOLERANCE)
            }
        }
    }

    /// Draws one point uniformly from the domain volume.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Point3 {
        match &self.kind {
            DomainKind::RightPrism { height, .. } => {
                let pick: f64 = rng.random();
                let idx = self
                    .cumulative
                    .partition_point(|&c| c <= pick)
                    .min(self.triangles.len() - 1);
                let [a, b, c] = self.triangles[idx];
                let (mut s, mut t): (f64, f64) = (rng.random(), rng.random());
                if s + t > 1.0 {
                    s = 1.0 - s;
                    t = 1.0 - t;
                }
                let u = a[0] + s * (b[0] - a[0]) + t * (c[0] - a[0]);
                let v = a[1] + s * (b[1] - a[1]) + t * (c[1] - a[1]);
                [u, height * rng.random::<f64>(), v]
            }
            DomainKind::HalfCylinder { radius, height } => {
                let s = radius * rng.random::<f64>().sqrt();
                let phi = PI * rng.random::<f64>();
                [s * phi.cos(), s * phi.sin(), height * rng.random::<f64>()]
            }
        }
    }

    pub fn features(&self) -> FeatureSet {
        enumerate_features(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum FeatureKind {
    Bulk,
    Face,
    Edge,
    Corner,
}

impl FeatureKind {
    /// 3 minus the feature dimension.
    pub fn codim(self) -> u8 {
        match self {
            FeatureKind::Bulk => 0,
            FeatureKind::Face => 1,
            FeatureKind::Edge => 2,
            FeatureKind::Corner => 3,
        }
    }
}

/// One bulk, face, edge or corner object, possibly repeated `multiplicity` times.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryFeature {
    pub kind: FeatureKind,
    /// Volume of the object in its own dimension (`3 - codim`); 1 for corners.
    pub measure: f64,
    /// Dihedral angle in radians; edges and corners only.
    pub dihedral: Option<f64>,
    /// Solid angle in steradians.
    pub solid_angle: f64,
    pub multiplicity: usize,
}

impl BoundaryFeature {
    pub fn bulk(volume: f64) -> Self {
        Self {
            kind: FeatureKind::Bulk,
            measure: volume,
            dihedral: None,
            solid_angle: 4.0 * PI,
            multiplicity: 1,
        }
    }

    pub fn face(area: f64) -> Self {
        Self {
            kind: FeatureKind::Face,
            measure: area,
            dihedral: None,
            solid_angle: 2.0 * PI,
            multiplicity: 1,
        }
    }

    pub fn edge(dihedral: f64, length: f64, multiplicity: usize) -> Self {
        Self {
            kind: FeatureKind::Edge,
            measure: length,
            dihedral: Some(dihedral),
            solid_angle: 2.0 * dihedral,
            multiplicity,
        }
    }

    /// A right-prism corner: its solid angle equals the dihedral angle numerically.
    pub fn corner(dihedral: f64, multiplicity: usize) -> Self {
        Self {
            kind: FeatureKind::Corner,
            measure: 1.0,
            dihedral: Some(dihedral),
            solid_angle: dihedral,
            multiplicity,
        }
    }

    pub fn codim(&self) -> u8 {
        self.kind.codim()
    }

    pub fn is_right_angled(&self) -> bool {
        self.dihedral
            .is_some_and(|a| (a - FRAC_PI_2).abs() <= ANGLE_TOLERANCE)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureSet {
    pub bulk: BoundaryFeature,
    pub face: BoundaryFeature,
    /// Sorted by dihedral angle, then by decreasing length.
    pub edges: Vec<BoundaryFeature>,
    /// Sorted by dihedral angle.
    pub corners: Vec<BoundaryFeature>,
}

impl FeatureSet {
    pub fn edge_count(&self) -> usize {
        self.edges.iter().map(|e| e.multiplicity).sum()
    }

    pub fn corner_count(&self) -> usize {
        self.corners.iter().map(|c| c.multiplicity).sum()
    }

    pub fn total_edge_length(&self) -> f64 {
        self.edges
            .iter()
            .map(|e| e.measure * e.multiplicity as f64)
            .sum()
    }

    /// Distinct dihedral angles present among edges and corners, ascending.
    pub fn angle_classes(features: &[BoundaryFeature]) -> Vec<f64> {
        let mut classes: Vec<f64> = Vec::new();
        for a in features.iter().filter_map(|f| f.dihedral) {
            if !classes.iter().any(|c| (c - a).abs() <= ANGLE_TOLERANCE) {
                classes.push(a);
            }
        }
        classes.sort_by(f64::total_cmp);
        classes
    }

    pub fn iter(&self) -> impl Iterator<Item = &BoundaryFeature> {
        std::iter::once(&self.bulk)
            .chain(std::iter::once(&self.face))
            .chain(self.edges.iter())
            .chain(self.corners.iter())
    }
}

/// Full boundary-feature inventory of a domain.
pub fn enumerate_features(domain: &Domain) -> FeatureSet {
    let mut edges = Vec::new();
    let mut corners = Vec::new();
    let length_tol;

    match domain.kind() {
        DomainKind::RightPrism { base, height } => {
            length_tol = LENGTH_TOLERANCE * coordinate_scale(base.vertices()).max(*height);
            let angles = base.interior_angles();
            for side in base.side_lengths() {
                // one copy on each cap, always perpendicular to the side walls
                edges.push((FRAC_PI_2, side, 2));
            }
            for &a in &angles {
                edges.push((a, *height, 1));
                corners.push((a, 2));
            }
        }
        DomainKind::HalfCylinder { radius, height } => {
            length_tol = LENGTH_TOLERANCE * radius.max(*height);
            edges.push((FRAC_PI_2, PI * radius, 2));
            edges.push((FRAC_PI_2, 2.0 * radius, 2));
            edges.push((FRAC_PI_2, *height, 2));
            corners.push((FRAC_PI_2, 4));
        }
    }

    FeatureSet {
        bulk: BoundaryFeature::bulk(domain.volume()),
        face: BoundaryFeature::face(domain.surface_area()),
        edges: merge_edges(edges, length_tol),
        corners: merge_corners(corners),
    }
}

fn merge_edges(raw: Vec<(f64, f64, usize)>, length_tol: f64) -> Vec<BoundaryFeature> {
    let mut merged: Vec<BoundaryFeature> = Vec::new();
    for (angle, length, count) in raw {
        match merged.iter_mut().find(|e| {
            (e.dihedral.unwrap() - angle).abs() <= ANGLE_TOLERANCE
                && (e.measure - length).abs() <= length_tol
        }) {
            Some(e) => e.multiplicity += count,
            None => merged.push(BoundaryFeature::edge(angle, length, count)),
        }
    }
    merged.sort_by(|a, b| {
        a.dihedral
            .unwrap()
            .total_cmp(&b.dihedral.unwrap())
            .then(b.measure.total_cmp(&a.measure))
    });
    merged
}

fn merge_corners(raw: Vec<(f64, usize)>) -> Vec<BoundaryFeature> {
    let mut merged: Vec<BoundaryFeature> = Vec::new();
    for (angle, count) in raw {
        match merged
            .iter_mut()
            .find(|c| (c.dihedral.unwrap() - angle).abs() <= ANGLE_TOLERANCE)
        {
            Some(c) => c.multiplicity += count,
            None => merged.push(BoundaryFeature::corner(angle, count)),
        }
    }
    merged.sort_by(|a, b| a.dihedral.unwrap().total_cmp(&b.dihedral.unwrap()));
    merged
}

/// Serialized domain description, e.g. `{"kind":"house","L":5.0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    House {
        #[serde(rename = "L")]
        l: f64,
    },
    HalfCylinder {
        r: f64,
        h: f64,
    },
    Prism {
        base: Vec<Point2>,
        height: f64,
    },
}

impl DomainSpec {
    pub fn build(&self) -> Result<Domain> {
        match self {
            DomainSpec::House { l } => build_house(*l),
            DomainSpec::HalfCylinder { r, h } => build_half_cylinder(*r, *h),
            DomainSpec::Prism { base, height } => {
                build_right_prism(Polygon2D::new(base.clone())?, *height)
            }
        }
    }
}

fn check_positive(what: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidGeometry(format!("{what} must be positive, got {value}")))
    }
}

fn coordinate_scale(points: &[Point2]) -> f64 {
    points
        .iter()
        .flatten()
        .fold(0.0_f64, |m, c| m.max(c.abs()))
        .max(f64::MIN_POSITIVE)
}

fn sub(a: Point2, b: Point2) -> Point2 {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(a: Point2, b: Point2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn dot(a: Point2, b: Point2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn dist2(a: Point2, b: Point2) -> f64 {
    let d = sub(a, b);
    dot(d, d)
}

pub(crate) fn dist3(a: Point3, b: Point3) -> f64 {
    let (dx, dy, dz) = (a[0] - b[0], a[1] - b[1], a[2] - b[2]);
    (dx * dx + dy * dy + dz * dz).sqrt()
}
