//! Numeric oracle for the inner and outer integrals of the boundary expansion.
//!
//! The inner integrals are the first-order expansions of `∫ H(|r1 - r2|) dr1`
//! about a point `r2` sitting on a corner, an edge, a face or in the bulk.
//! Each expansion is linear in the offset of `r2`, so the oracle returns the
//! constant and the slope(s) as separate numbers. The outer integral then
//! integrates `exp(-ρ · inner)` over the local coordinate patch.
//!
//! Everything here is computed by nested adaptive Gauss–Kronrod quadrature
//! with the polar angle pre-integrated analytically.

pub mod adaptive;

use std::f64::consts::PI;

use serde::Serialize;

use crate::analytic::{ContributionTerm, PfcBreakdown, TermLabel};
use crate::channel::{ConnectivityModel, Family};
use crate::geometry::{BoundaryFeature, FeatureKind, FeatureSet};
use crate::{Error, Result};

use adaptive::{integrate_with_breaks, try_integrate, Tolerance};

pub const MIN_REL_TOL: f64 = 1e-12;
pub const MAX_REL_TOL: f64 = 1e-3;
pub const DEFAULT_REL_TOL: f64 = 1e-10;

/// Outer integrals are cut where the integrand has fallen by `exp(-60)`.
const OUTER_DECAY_CUTOFF: f64 = 60.0;

/// Radius, in units of the truncation radius, used for the planar face limit.
const PLANAR_FACE_RADIUS: f64 = 1e9;

/// First-order expansion at a corner or at the middle of an edge:
/// `constant + z_slope · z2 + radial_slope · r2 · (sin θ2 - sin(θ2 - ϑ))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WedgeExpansion {
    pub angle: f64,
    pub constant: f64,
    pub z_slope: f64,
    pub radial_slope: f64,
}

impl WedgeExpansion {
    pub fn value(&self, r2: f64, theta2: f64, z2: f64) -> f64 {
        self.constant + self.z_slope * z2 + self.radial_slope * r2 * wedge_factor(theta2, self.angle)
    }
}

/// `∫_0^ϑ cos(θ - θ2) dθ`.
pub fn wedge_factor(theta2: f64, angle: f64) -> f64 {
    theta2.sin() - (theta2 - angle).sin()
}

/// First-order expansion below the surface of a ball of radius `radius`:
/// `constant + depth_slope · (radius - r2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FaceExpansion {
    pub radius: f64,
    pub constant: f64,
    pub depth_slope: f64,
}

impl FaceExpansion {
    pub fn value(&self, r2: f64) -> f64 {
        self.constant + self.depth_slope * (self.radius - r2)
    }
}

/// Expansion about the centre of full space: `mass + first_moment · r2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BulkExpansion {
    pub mass: f64,
    pub first_moment: f64,
}

/// Quadrature settings shared by all oracle integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Oracle {
    model: ConnectivityModel,
    r_max: f64,
    rel_tol: f64,
}

impl Oracle {
    pub fn new(model: ConnectivityModel) -> Self {
        Self {
            model,
            r_max: model.truncation_radius(),
            rel_tol: DEFAULT_REL_TOL,
        }
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Result<Self> {
        if !(MIN_REL_TOL..=MAX_REL_TOL).contains(&rel_tol) {
            return Err(Error::InvalidParameter(format!(
                "tolerance {rel_tol} outside [{MIN_REL_TOL}, {MAX_REL_TOL}]"
            )));
        }
        self.rel_tol = rel_tol;
        Ok(self)
    }

    /// Truncation radius; must not cut into the non-negligible part of `H`.
    pub fn with_r_max(mut self, r_max: f64) -> Result<Self> {
        let min = self.model.truncation_radius();
        if !(r_max >= min && r_max.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "truncation radius {r_max} is below {min}"
            )));
        }
        self.r_max = r_max;
        Ok(self)
    }

    pub fn model(&self) -> &ConnectivityModel {
        &self.model
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn rel_tol(&self) -> f64 {
        self.rel_tol
    }

    fn tol(&self) -> Tolerance {
        Tolerance::relative(self.rel_tol)
    }

    fn h(&self, r: f64) -> f64 {
        self.model.eval(r)
    }

    fn h_prime(&self, r: f64) -> Result<f64> {
        self.model
            .h_prime(r)
            .ok_or_else(|| Error::UnsupportedModel(format!("{:?} has no derivative", self.model.family())))
    }

    fn require_smooth(&self) -> Result<()> {
        if self.model.family() == Family::HardDisk {
            return Err(Error::UnsupportedModel(
                "first-order terms need a differentiable pair function".into(),
            ));
        }
        Ok(())
    }

    /// `∫_0^a f(r) ∫_0^b g(r, z) dz dr`.
    fn quarter_plane<F>(&self, r_hi: f64, z_hi: f64, g: F) -> Result<f64>
    where
        F: Fn(f64, f64) -> Result<f64>,
    {
        let tol = self.tol();
        let inner = tol.nested();
        Ok(try_integrate(
            |r| Ok(try_integrate(|z| g(r, z), 0.0, z_hi, &inner)?.value),
            0.0,
            r_hi,
            &tol,
        )?
        .value)
    }

    /// Inner integral at a corner of dihedral angle `angle`, over
    /// `[0,∞) × [0,ϑ) × [0,∞)` in cylindrical coordinates.
    pub fn inner_corner(&self, angle: f64) -> Result<WedgeExpansion> {
        check_wedge_angle(angle)?;
        self.require_smooth()?;
        self.wedge(angle, self.r_max, false)
    }

    /// Inner integral at the middle of an edge of length `length`, over
    /// `[0,∞) × [0,ϑ) × (-L/2, L/2)`. The `z2` slope vanishes by symmetry.
    pub fn inner_edge(&self, angle: f64, length: f64) -> Result<WedgeExpansion> {
        check_wedge_angle(angle)?;
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "edge length must be positive, got {length}"
            )));
        }
        self.require_smooth()?;
        self.wedge(angle, (0.5 * length).min(self.r_max), true)
    }

    fn wedge(&self, angle: f64, z_hi: f64, symmetric: bool) -> Result<WedgeExpansion> {
        let rm = self.r_max;
        let span = if symmetric { 2.0 } else { 1.0 };
        let constant = angle
            * span
            * self.quarter_plane(rm, z_hi, |r, z| Ok(r * self.h(r.hypot(z))))?;
        let z_slope = if symmetric {
            0.0
        } else {
            -angle
                * self.quarter_plane(rm, z_hi, |r, z| {
                    let s = r.hypot(z);
                    if s == 0.0 {
                        return Ok(0.0);
                    }
                    Ok(r * z / s * self.h_prime(s)?)
                })?
        };
        let radial_slope = -span
            * self.quarter_plane(rm, z_hi, |r, z| {
                let s = r.hypot(z);
                if s == 0.0 {
                    return Ok(0.0);
                }
                Ok(r * r / s * self.h_prime(s)?)
            })?;
        Ok(WedgeExpansion {
            angle,
            constant,
            z_slope,
            radial_slope,
        })
    }

    /// Inner integral below the surface of a ball of radius `radius`.
    ///
    /// The polar angle is traded for the pair distance `d`, which turns
    /// `r1² sin θ dθ` into `r1 d dd / R` and keeps the integrand well
    /// conditioned for `R ≫ r_max`.
    pub fn inner_face(&self, radius: f64) -> Result<FaceExpansion> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "radius must be positive, got {radius}"
            )));
        }
        self.require_smooth()?;
        let tol = self.tol();
        let inner = tol.nested();
        let rm = self.r_max;
        let r = radius;
        // depth below the surface t = R - r1; pair distance d ∈ [t, min(2R - t, r_max)]
        let t_hi = r.min(rm);
        let constant = 2.0 * PI / r
            * try_integrate(
                |t| {
                    let d_hi = (2.0 * r - t).min(rm);
                    if d_hi <= t {
                        return Ok(0.0);
                    }
                    let w = try_integrate(|d| Ok(d * self.h(d)), t, d_hi, &inner)?.value;
                    Ok((r - t) * w)
                },
                0.0,
                t_hi,
                &tol,
            )?
            .value;
        let moment = 2.0 * PI
            * try_integrate(
                |t| {
                    let d_hi = (2.0 * r - t).min(rm);
                    if d_hi <= t {
                        return Ok(0.0);
                    }
                    let chord = t * (2.0 * r - t);
                    let w = try_integrate(
                        |d| Ok((d * d + chord) * self.h_prime(d)?),
                        t,
                        d_hi,
                        &inner,
                    )?
                    .value;
                    Ok((r - t) / (2.0 * r * r) * w)
                },
                0.0,
                t_hi,
                &tol,
            )?
            .value;
        // the expansion is written in (r2 - R); flip to depth R - r2
        Ok(FaceExpansion {
            radius,
            constant,
            depth_slope: -moment,
        })
    }

    /// Inner integral about the origin over full space.
    pub fn inner_bulk(&self) -> Result<BulkExpansion> {
        let tol = self.tol();
        let r0 = self.model.r0();
        let radial = integrate_with_breaks(|r| Ok(r * r * self.h(r)), 0.0, self.r_max, &[r0], &tol)?;
        let mass = 4.0 * PI * radial.value;
        let first_moment = match self.model.family() {
            Family::HardDisk => 0.0,
            _ => {
                let gradient =
                    try_integrate(|r| Ok(r * r * self.h_prime(r)?), 0.0, self.r_max, &tol)?.value;
                let angular = try_integrate(
                    |t| Ok(t.cos() * t.sin()),
                    0.0,
                    PI,
                    &tol.with_abs(1e-12),
                )?
                .value;
                2.0 * PI * gradient * angular
            }
        };
        Ok(BulkExpansion { mass, first_moment })
    }

    /// Outer integral `∫ exp(-ρ · inner(r2)) dr2` for one instance of
    /// `feature` (its multiplicity is ignored).
    ///
    /// Corners use `[0,∞)² × [0,ϑ)`, edges the `(-L/2, L/2)` axis, faces a
    /// ball with the feature's surface area and the bulk a ball with its
    /// volume.
    pub fn outer_integral(&self, feature: &BoundaryFeature, rho: f64) -> Result<f64> {
        let (rate, reduced) = self.outer_parts(feature, rho, false)?;
        Ok((-rho * rate).exp() * reduced)
    }

    /// `(exponent constant, outer integral with exp(-ρ·constant) divided out)`.
    fn outer_parts(&self, feature: &BoundaryFeature, rho: f64, planar: bool) -> Result<(f64, f64)> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidParameter(format!("density must be positive, got {rho}")));
        }
        let tol = self.tol();
        match feature.kind {
            FeatureKind::Corner => {
                let e = self.inner_corner(dihedral(feature)?)?;
                let along = decaying_exponential(rho * e.z_slope, &tol)?;
                Ok((e.constant, along * self.wedge_section(&e, rho)?))
            }
            FeatureKind::Edge => {
                let e = self.inner_edge(dihedral(feature)?, feature.measure)?;
                Ok((e.constant, feature.measure * self.wedge_section(&e, rho)?))
            }
            FeatureKind::Face => {
                let area = feature.measure;
                if planar {
                    let e = self.inner_face(PLANAR_FACE_RADIUS * self.r_max)?;
                    Ok((e.constant, area * decaying_exponential(rho * e.depth_slope, &tol)?))
                } else {
                    let radius = (area / (4.0 * PI)).sqrt();
                    let e = self.inner_face(radius)?;
                    let k = rho * e.depth_slope;
                    let depth = if k > 0.0 {
                        (OUTER_DECAY_CUTOFF / k).min(radius)
                    } else {
                        radius
                    };
                    let shell = try_integrate(
                        |t| {
                            let r2 = radius - t;
                            Ok(4.0 * PI * r2 * r2 * (-k * t).exp())
                        },
                        0.0,
                        depth,
                        &tol,
                    )?
                    .value;
                    Ok((e.constant, shell))
                }
            }
            FeatureKind::Bulk => {
                let e = self.inner_bulk()?;
                let radius = (3.0 * feature.measure / (4.0 * PI)).cbrt();
                // the first moment vanishes; keep it in the exponent anyway
                let k = rho * e.first_moment;
                let ball = try_integrate(
                    |r| Ok(4.0 * PI * r * r * (-k * r).exp()),
                    0.0,
                    radius,
                    &tol,
                )?
                .value;
                Ok((e.mass, ball))
            }
        }
    }

    /// `∫_0^ϑ dθ ∫_0^∞ r exp(-ρ c r g(θ)) dr` for the wedge cross-section.
    fn wedge_section(&self, e: &WedgeExpansion, rho: f64) -> Result<f64> {
        let tol = self.tol();
        let inner = tol.nested();
        let k = rho * e.radial_slope;
        if !(k > 0.0) {
            return Err(Error::Divergent("non-decaying radial exponent".into()));
        }
        Ok(try_integrate(
            |theta| {
                let a = k * wedge_factor(theta, e.angle);
                let hi = OUTER_DECAY_CUTOFF / a;
                Ok(try_integrate(|r| Ok(r * (-a * r).exp()), 0.0, hi, &inner)?.value)
            },
            0.0,
            e.angle,
            &tol,
        )?
        .value)
    }
}

/// `∫_0^∞ exp(-k z) dz`, cut at `exp(-60)`.
fn decaying_exponential(k: f64, tol: &Tolerance) -> Result<f64> {
    if !(k > 0.0) {
        return Err(Error::Divergent("non-decaying exponent".into()));
    }
    Ok(try_integrate(|z| Ok((-k * z).exp()), 0.0, OUTER_DECAY_CUTOFF / k, tol)?.value)
}

fn dihedral(feature: &BoundaryFeature) -> Result<f64> {
    feature
        .dihedral
        .ok_or_else(|| Error::InvalidGeometry(format!("{:?} without a dihedral angle", feature.kind)))
}

fn check_wedge_angle(angle: f64) -> Result<()> {
    if angle > 0.0 && angle < PI {
        Ok(())
    } else {
        Err(Error::AngleOutOfRange {
            angle,
            min: 0.0,
            max: PI,
        })
    }
}

/// Which integral an [`IntegralSpec`] evaluates.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IntegralKind {
    InnerCorner {
        r2: f64,
        theta2: f64,
        z2: f64,
        angle: f64,
    },
    InnerEdge {
        r2: f64,
        theta2: f64,
        z2: f64,
        angle: f64,
        length: f64,
    },
    InnerFace {
        r2: f64,
        radius: f64,
    },
    InnerBulk,
    Outer {
        feature: BoundaryFeature,
        rho: f64,
    },
}

/// A single oracle integral together with its quadrature settings.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralSpec {
    pub kind: IntegralKind,
    pub model: ConnectivityModel,
    pub r_max: f64,
    pub rel_tol: f64,
}

impl IntegralSpec {
    pub fn new(kind: IntegralKind, model: ConnectivityModel) -> Self {
        Self {
            kind,
            model,
            r_max: model.truncation_radius(),
            rel_tol: DEFAULT_REL_TOL,
        }
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_r_max(mut self, r_max: f64) -> Self {
        self.r_max = r_max;
        self
    }

    pub fn oracle(&self) -> Result<Oracle> {
        Oracle::new(self.model)
            .with_rel_tol(self.rel_tol)?
            .with_r_max(self.r_max)
    }

    pub fn evaluate(&self) -> Result<f64> {
        let oracle = self.oracle()?;
        match self.kind {
            IntegralKind::InnerCorner {
                r2,
                theta2,
                z2,
                angle,
            } => {
                check_offset(r2, theta2, z2, angle)?;
                Ok(oracle.inner_corner(angle)?.value(r2, theta2, z2))
            }
            IntegralKind::InnerEdge {
                r2,
                theta2,
                z2,
                angle,
                length,
            } => {
                check_offset(r2, theta2, z2.abs(), angle)?;
                Ok(oracle.inner_edge(angle, length)?.value(r2, theta2, z2))
            }
            IntegralKind::InnerFace { r2, radius } => {
                if !(0.0..=radius).contains(&r2) {
                    return Err(Error::InvalidParameter(format!(
                        "r2 = {r2} outside [0, {radius}]"
                    )));
                }
                Ok(oracle.inner_face(radius)?.value(r2))
            }
            IntegralKind::InnerBulk => Ok(oracle.inner_bulk()?.mass),
            IntegralKind::Outer { ref feature, rho } => oracle.outer_integral(feature, rho),
        }
    }
}

fn check_offset(r2: f64, theta2: f64, z2: f64, angle: f64) -> Result<()> {
    if r2 < 0.0 || z2 < 0.0 || !(0.0..=angle).contains(&theta2) {
        return Err(Error::InvalidParameter(format!(
            "offset (r2={r2}, theta2={theta2}, z2={z2}) outside the wedge"
        )));
    }
    Ok(())
}

/// Numeric counterpart of [`crate::analytic::assemble_pfc`] for any smooth
/// pair function. Faces use the planar limit of the surface expansion.
pub fn assemble_pfc_numeric(
    features: &FeatureSet,
    model: &ConnectivityModel,
    rho: f64,
    rel_tol: f64,
) -> Result<PfcBreakdown> {
    let oracle = Oracle::new(*model).with_rel_tol(rel_tol)?;
    let terms = features
        .iter()
        .map(|f| numeric_term(&oracle, f, rho))
        .collect::<Result<Vec<_>>>()?;
    let scaled = features.bulk.measure.cbrt() / model.r0();
    Ok(PfcBreakdown::from_terms(terms, rho, scaled))
}

/// A term whose value at `rho` equals `ρ ×` the numeric outer integral.
fn numeric_term(oracle: &Oracle, feature: &BoundaryFeature, rho: f64) -> Result<ContributionTerm> {
    let (rate, reduced) = oracle.outer_parts(feature, rho, true)?;
    let codim = feature.codim();
    let label = match feature.kind {
        FeatureKind::Bulk => TermLabel::Bulk,
        FeatureKind::Face => TermLabel::Face,
        FeatureKind::Edge => TermLabel::Edge {
            angle: dihedral(feature)?,
            length: feature.measure,
        },
        FeatureKind::Corner => TermLabel::Corner {
            angle: dihedral(feature)?,
        },
    };
    Ok(ContributionTerm {
        label,
        codim,
        prefactor: reduced * rho.powi(codim as i32),
        density_power: 1 - codim as i32,
        exponent_rate: rate,
        multiplicity: feature.multiplicity,
    })
}
