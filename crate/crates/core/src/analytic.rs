//! Closed-form boundary contributions to the outage probability.
//!
//! In the dense regime the probability that the network is *not* fully
//! connected is a sum over boundary objects (bulk, faces, edges, corners):
//!
//! ```text
//! P_out ≈ Σ_k ρ^(1-ℓ) G_k V_k exp(-ρ (ω_k / 4π) M)
//! ```
//!
//! where `ℓ` is the codimension of object `k`, `V_k` its measure, `ω_k` its
//! solid angle, `G_k` a geometric factor and `M` the connection mass of the
//! link model. Closed forms for `G_k` and the exponent are registered only
//! for the 2x2 MIMO-MRC channel with `eta = 2`; other models go through
//! [`crate::quadrature::assemble_pfc_numeric`].

use std::f64::consts::{PI, SQRT_2};
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{ConnectivityModel, Family};
use crate::geometry::{self, BoundaryFeature, FeatureKind, FeatureSet, ANGLE_TOLERANCE};
use crate::{Error, Result};

/// Closed forms are refused within this distance of a straight angle.
pub const STRAIGHT_ANGLE_GUARD: f64 = 1e-6;

/// Below this value of `sqrt(beta) L` the expansion is flagged as unreliable.
pub const MIN_SCALED_LENGTH: f64 = 5.0;

/// `23 - sqrt(2)`, the constant shared by every MIMO-MRC exponent.
const MRC_MASS_CONSTANT: f64 = 23.0 - SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TermLabel {
    Bulk,
    Face,
    Edge { angle: f64, length: f64 },
    Corner { angle: f64 },
    Cone { solid_angle: f64 },
}

impl fmt::Display for TermLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TermLabel::Bulk => write!(f, "bulk"),
            TermLabel::Face => write!(f, "face"),
            TermLabel::Edge { angle, length } => {
                write!(f, "edge(theta={:.6},L={})", angle, length)
            }
            TermLabel::Corner { angle } => write!(f, "corner(theta={:.6})", angle),
            TermLabel::Cone { solid_angle } => write!(f, "cone(theta={:.6})", solid_angle),
        }
    }
}

/// One additive term of the boundary expansion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContributionTerm {
    pub label: TermLabel,
    pub codim: u8,
    /// `G_k V_k`.
    pub prefactor: f64,
    /// `1 - codim`.
    pub density_power: i32,
    /// Coefficient of `ρ` in the exponent, `(ω / 4π) M`.
    pub exponent_rate: f64,
    pub multiplicity: usize,
}

impl ContributionTerm {
    fn new(label: TermLabel, codim: u8, prefactor: f64, exponent_rate: f64) -> Self {
        Self {
            label,
            codim,
            prefactor,
            density_power: 1 - codim as i32,
            exponent_rate,
            multiplicity: 1,
        }
    }

    pub fn with_multiplicity(mut self, multiplicity: usize) -> Self {
        self.multiplicity = multiplicity;
        self
    }

    /// Contribution of a single instance to `P_out` at density `rho`,
    /// `prefactor · ρ^(1-ℓ) · exp(-ρ · exponent_rate)`.
    pub fn value(&self, rho: f64) -> f64 {
        self.prefactor * rho.powi(self.density_power) * (-rho * self.exponent_rate).exp()
    }

    /// The outer integral for one instance, i.e. [`Self::value`] without the
    /// overall factor `ρ`.
    pub fn outer_integral(&self, rho: f64) -> f64 {
        self.value(rho) / rho
    }

    /// `multiplicity · value(rho)`.
    pub fn total(&self, rho: f64) -> f64 {
        self.multiplicity as f64 * self.value(rho)
    }
}

// Closed-form registry ------------------------------------------------------

/// A `(prefactor, exponent rate)` pair for one feature type.
#[derive(Clone, Copy)]
struct ClosedForm {
    prefactor: fn(&BoundaryFeature, f64) -> f64,
    exponent_rate: fn(&BoundaryFeature, f64) -> f64,
}

fn corner_prefactor(f: &BoundaryFeature, beta: f64) -> f64 {
    let t = f.dihedral.expect("corner carries a dihedral angle");
    256.0 * beta.powi(3) / (343.0 * PI * PI * t * t.sin())
}

fn corner_rate(f: &BoundaryFeature, beta: f64) -> f64 {
    let t = f.dihedral.expect("corner carries a dihedral angle");
    MRC_MASS_CONSTANT * PI.sqrt() * t / (16.0 * beta.powf(1.5))
}

fn edge_prefactor(f: &BoundaryFeature, beta: f64) -> f64 {
    let t = f.dihedral.expect("edge carries a dihedral angle");
    16.0 * f.measure * beta * beta / (49.0 * PI * PI * t.sin())
}

fn edge_rate(f: &BoundaryFeature, beta: f64) -> f64 {
    let t = f.dihedral.expect("edge carries a dihedral angle");
    MRC_MASS_CONSTANT * PI.sqrt() * t / (8.0 * beta.powf(1.5))
}

fn face_prefactor(f: &BoundaryFeature, beta: f64) -> f64 {
    2.0 * beta * f.measure / (7.0 * PI)
}

fn face_rate(_: &BoundaryFeature, beta: f64) -> f64 {
    MRC_MASS_CONSTANT * PI.powf(1.5) / (8.0 * beta.powf(1.5))
}

fn bulk_prefactor(f: &BoundaryFeature, _: f64) -> f64 {
    f.measure
}

fn bulk_rate(_: &BoundaryFeature, beta: f64) -> f64 {
    MRC_MASS_CONSTANT * PI.powf(1.5) / (4.0 * beta.powf(1.5))
}

const MIMO_MRC_FORMS: [(FeatureKind, ClosedForm); 4] = [
    (
        FeatureKind::Bulk,
        ClosedForm {
            prefactor: bulk_prefactor,
            exponent_rate: bulk_rate,
        },
    ),
    (
        FeatureKind::Face,
        ClosedForm {
            prefactor: face_prefactor,
            exponent_rate: face_rate,
        },
    ),
    (
        FeatureKind::Edge,
        ClosedForm {
            prefactor: edge_prefactor,
            exponent_rate: edge_rate,
        },
    ),
    (
        FeatureKind::Corner,
        ClosedForm {
            prefactor: corner_prefactor,
            exponent_rate: corner_rate,
        },
    ),
];

fn closed_form(kind: FeatureKind, family: Family) -> Option<ClosedForm> {
    match family {
        Family::MimoMrc2x2 => MIMO_MRC_FORMS
            .iter()
            .find(|(k, _)| *k == kind)
            .map(|(_, form)| *form),
        Family::RayleighSiso | Family::HardDisk => None,
    }
}

fn term_for(feature: &BoundaryFeature, family: Family, beta: f64) -> Result<ContributionTerm> {
    let form = closed_form(feature.kind, family)
        .ok_or_else(|| Error::UnsupportedModel(format!("{family:?}")))?;
    let label = match feature.kind {
        FeatureKind::Bulk => TermLabel::Bulk,
        FeatureKind::Face => TermLabel::Face,
        FeatureKind::Edge => TermLabel::Edge {
            angle: feature.dihedral.unwrap_or(f64::NAN),
            length: feature.measure,
        },
        FeatureKind::Corner => TermLabel::Corner {
            angle: feature.dihedral.unwrap_or(f64::NAN),
        },
    };
    Ok(ContributionTerm::new(
        label,
        feature.codim(),
        (form.prefactor)(feature, beta),
        (form.exponent_rate)(feature, beta),
    )
    .with_multiplicity(feature.multiplicity))
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")))
    }
}

fn check_dihedral(angle: f64) -> Result<()> {
    let max = PI - STRAIGHT_ANGLE_GUARD;
    if angle > 0.0 && angle <= max {
        Ok(())
    } else {
        Err(Error::AngleOutOfRange {
            angle,
            min: 0.0,
            max,
        })
    }
}

// Per-feature terms (MIMO-MRC, eta = 2) --------------------------------------

/// A right-prism corner of dihedral angle `angle`.
pub fn corner_term(angle: f64, beta: f64) -> Result<ContributionTerm> {
    check_dihedral(angle)?;
    check_beta(beta)?;
    term_for(&BoundaryFeature::corner(angle, 1), Family::MimoMrc2x2, beta)
}

/// An edge of dihedral angle `angle` and length `length`.
pub fn edge_term(angle: f64, length: f64, beta: f64) -> Result<ContributionTerm> {
    check_dihedral(angle)?;
    check_beta(beta)?;
    if !(length > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "edge length must be positive, got {length}"
        )));
    }
    if beta.sqrt() * length < MIN_SCALED_LENGTH {
        log::warn!(
            "edge of length {length} has sqrt(beta) L = {:.3} < {MIN_SCALED_LENGTH}; \
             the edge expansion assumes sqrt(beta) L >> 1",
            beta.sqrt() * length
        );
    }
    term_for(&BoundaryFeature::edge(angle, length, 1), Family::MimoMrc2x2, beta)
}

/// All faces of a domain with total surface area `area`.
pub fn face_term(area: f64, beta: f64) -> Result<ContributionTerm> {
    check_beta(beta)?;
    if !(area > 0.0) {
        return Err(Error::InvalidParameter(format!("area must be positive, got {area}")));
    }
    term_for(&BoundaryFeature::face(area), Family::MimoMrc2x2, beta)
}

/// The bulk of a domain of volume `volume`.
pub fn bulk_term(volume: f64, beta: f64) -> Result<ContributionTerm> {
    check_beta(beta)?;
    if !(volume > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "volume must be positive, got {volume}"
        )));
    }
    term_for(&BoundaryFeature::bulk(volume), Family::MimoMrc2x2, beta)
}

/// A cone of solid angle `solid_angle` standing in for a general corner.
/// The apex half-angle `λ` satisfies `solid_angle = 2π (1 - cos λ)`.
pub fn cone_term(solid_angle: f64, beta: f64) -> Result<ContributionTerm> {
    if !(solid_angle > 0.0 && solid_angle < 2.0 * PI) {
        return Err(Error::AngleOutOfRange {
            angle: solid_angle,
            min: 0.0,
            max: 2.0 * PI,
        });
    }
    check_beta(beta)?;
    let t = solid_angle;
    let poly = t * t - 6.0 * PI * t + 8.0 * PI * PI;
    let prefactor = 1024.0 * beta.powi(3) * PI.powi(4) / (343.0 * t * t * poly * poly);
    let rate = MRC_MASS_CONSTANT * PI.sqrt() * t / (16.0 * beta.powf(1.5));
    Ok(ContributionTerm::new(
        TermLabel::Cone { solid_angle },
        3,
        prefactor,
        rate,
    ))
}

/// Corner prefactor divided by `256 β³ / (343 π ϑ)`: `csc(ϑ) / π`.
pub fn corner_shape(angle: f64) -> f64 {
    1.0 / (PI * angle.sin())
}

/// Cone prefactor divided by the same factor as [`corner_shape`]:
/// `4 π⁵ / (ϑ (ϑ² - 6πϑ + 8π²)²)`.
pub fn cone_shape(angle: f64) -> f64 {
    let poly = angle * angle - 6.0 * PI * angle + 8.0 * PI * PI;
    4.0 * PI.powi(5) / (angle * poly * poly)
}

// Assembly -------------------------------------------------------------------

/// The four component groups used for dominance, in increasing codimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Component {
    Bulk,
    Face,
    Edge,
    Corner,
}

impl Component {
    pub const ALL: [Component; 4] = [
        Component::Bulk,
        Component::Face,
        Component::Edge,
        Component::Corner,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Component::Bulk => "bulk",
            Component::Face => "face",
            Component::Edge => "edge",
            Component::Corner => "corner",
        }
    }

    /// `U`, `F`, `E`, `C`.
    pub fn symbol(self) -> &'static str {
        match self {
            Component::Bulk => "U",
            Component::Face => "F",
            Component::Edge => "E",
            Component::Corner => "C",
        }
    }

    fn of(label: &TermLabel) -> Self {
        match label {
            TermLabel::Bulk => Component::Bulk,
            TermLabel::Face => Component::Face,
            TermLabel::Edge { .. } => Component::Edge,
            TermLabel::Corner { .. } | TermLabel::Cone { .. } => Component::Corner,
        }
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Sum of the terms sharing a component and (for edges and corners) an angle class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermGroup {
    /// `U`, `F`, `E`/`E1`/`E2`…, `C`/`C1`/`C2`…, numbered by increasing angle.
    pub label: String,
    pub component: Component,
    pub angle: Option<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PfcBreakdown {
    pub rho: f64,
    pub terms: Vec<ContributionTerm>,
    pub groups: Vec<TermGroup>,
    /// `Σ multiplicity · value(ρ)`, unclamped.
    pub p_out: f64,
    /// `1 - p_out`, unclamped (negative when the expansion breaks down).
    pub p_fc: f64,
    pub p_fc_clamped: f64,
    /// Set when `p_out > 1`.
    pub clamped: bool,
    /// False when `p_out > 1` or the domain is too small compared with the
    /// link range (`V^(1/3) / r0 < 5`).
    pub asymptotic_regime: bool,
    pub dominant: Component,
}

impl PfcBreakdown {
    pub(crate) fn from_terms(terms: Vec<ContributionTerm>, rho: f64, scaled_length: f64) -> Self {
        let groups = group_terms(&terms, rho);
        let p_out: f64 = terms.iter().map(|t| t.total(rho)).sum();
        let p_fc = 1.0 - p_out;
        let clamped = p_out > 1.0;
        let mut out = Self {
            rho,
            terms,
            groups,
            p_out,
            p_fc,
            p_fc_clamped: p_fc.clamp(0.0, 1.0),
            clamped,
            asymptotic_regime: !clamped && scaled_length >= MIN_SCALED_LENGTH,
            dominant: Component::Bulk,
        };
        out.dominant = out.dominant_component();
        out
    }

    pub fn component_value(&self, component: Component) -> f64 {
        self.groups
            .iter()
            .filter(|g| g.component == component)
            .map(|g| g.value)
            .sum()
    }

    pub fn group(&self, label: &str) -> Option<&TermGroup> {
        self.groups.iter().find(|g| g.label == label)
    }

    /// Largest of the four component sums; ties go to the higher codimension.
    fn dominant_component(&self) -> Component {
        let mut best = Component::Bulk;
        let mut best_value = f64::NEG_INFINITY;
        for c in Component::ALL {
            let v = self.component_value(c);
            if v >= best_value {
                best = c;
                best_value = v;
            }
        }
        best
    }
}

fn group_terms(terms: &[ContributionTerm], rho: f64) -> Vec<TermGroup> {
    let mut groups = Vec::new();
    for component in Component::ALL {
        let members: Vec<&ContributionTerm> = terms
            .iter()
            .filter(|t| Component::of(&t.label) == component)
            .collect();
        if members.is_empty() {
            continue;
        }
        let angle_of = |t: &ContributionTerm| match t.label {
            TermLabel::Edge { angle, .. } | TermLabel::Corner { angle } => Some(angle),
            TermLabel::Cone { solid_angle } => Some(solid_angle),
            TermLabel::Bulk | TermLabel::Face => None,
        };
        let mut classes: Vec<Option<f64>> = Vec::new();
        for t in &members {
            let a = angle_of(t);
            let known = classes.iter().any(|c| match (c, a) {
                (Some(c), Some(a)) => (c - a).abs() <= ANGLE_TOLERANCE,
                (None, None) => true,
                _ => false,
            });
            if !known {
                classes.push(a);
            }
        }
        classes.sort_by(|a, b| a.unwrap_or(0.0).total_cmp(&b.unwrap_or(0.0)));
        let numbered = classes.len() > 1;
        for (i, class) in classes.iter().enumerate() {
            let value = members
                .iter()
                .filter(|t| match (angle_of(t), class) {
                    (Some(a), Some(c)) => (a - c).abs() <= ANGLE_TOLERANCE,
                    (None, None) => true,
                    _ => false,
                })
                .map(|t| t.total(rho))
                .sum();
            let label = if numbered {
                format!("{}{}", component.symbol(), i + 1)
            } else {
                component.symbol().to_string()
            };
            groups.push(TermGroup {
                label,
                component,
                angle: *class,
                value,
            });
        }
    }
    groups
}

/// Closed-form terms for every feature of `features`, MIMO-MRC only.
pub fn closed_form_terms(
    features: &FeatureSet,
    model: &ConnectivityModel,
) -> Result<Vec<ContributionTerm>> {
    if !model.has_closed_forms() {
        return Err(Error::UnsupportedModel(format!("{:?}", model.family())));
    }
    let beta = model.beta().expect("closed-form models carry beta");
    for f in features.edges.iter().chain(features.corners.iter()) {
        check_dihedral(f.dihedral.unwrap_or(f64::NAN))?;
    }
    features
        .iter()
        .map(|f| term_for(f, model.family(), beta))
        .collect()
}

/// `P_fc ≈ 1 - ρ Σ (outer integrals)` from the closed forms.
pub fn assemble_pfc(
    features: &FeatureSet,
    model: &ConnectivityModel,
    rho: f64,
) -> Result<PfcBreakdown> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidParameter(format!("density must be positive, got {rho}")));
    }
    let terms = closed_form_terms(features, model)?;
    let scaled = features.bulk.measure.cbrt() / model.r0();
    Ok(PfcBreakdown::from_terms(terms, rho, scaled))
}

/// Largest of `U`, `F`, `E`, `C` for the house of side `l`.
pub fn dominant_component(l: f64, beta: f64, rho: f64) -> Result<Component> {
    let features = geometry::build_house(l)?.features();
    let model = ConnectivityModel::mimo_mrc(beta)?;
    Ok(assemble_pfc(&features, &model, rho)?.dominant)
}

/// Dominant component over a `(ρ, L)` grid for the house.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseMap {
    pub beta: f64,
    pub rhos: Vec<f64>,
    pub lengths: Vec<f64>,
    /// `cells[i][j]` is the dominant component at `lengths[i]`, `rhos[j]`.
    pub cells: Vec<Vec<Component>>,
}

impl PhaseMap {
    pub fn get(&self, length_index: usize, rho_index: usize) -> Component {
        self.cells[length_index][rho_index]
    }

    /// `(rho, L, component)` in row-major order over `L` then `rho`.
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64, Component)> + '_ {
        self.lengths.iter().enumerate().flat_map(move |(i, &l)| {
            self.rhos
                .iter()
                .enumerate()
                .map(move |(j, &rho)| (rho, l, self.cells[i][j]))
        })
    }
}

pub fn phase_map(beta: f64, rhos: &[f64], lengths: &[f64]) -> Result<PhaseMap> {
    check_beta(beta)?;
    check_grid("density", rhos)?;
    check_grid("length", lengths)?;
    let model = ConnectivityModel::mimo_mrc(beta)?;
    let cells = lengths
        .par_iter()
        .map(|&l| {
            let features = geometry::build_house(l)?.features();
            let terms = closed_form_terms(&features, &model)?;
            Ok(rhos
                .iter()
                .map(|&rho| PfcBreakdown::from_terms(terms.clone(), rho, f64::INFINITY).dominant)
                .collect())
        })
        .collect::<Result<Vec<Vec<Component>>>>()?;
    Ok(PhaseMap {
        beta,
        rhos: rhos.to_vec(),
        lengths: lengths.to_vec(),
        cells,
    })
}

fn check_grid(what: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter(format!("{what} grid is empty")));
    }
    if grid.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidParameter(format!("{what} grid must be positive")));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(format!(
            "{what} grid must be strictly increasing"
        )));
    }
    Ok(())
}
