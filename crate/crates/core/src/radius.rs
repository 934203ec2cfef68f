//! Poisson-disc threshold fields.
//!
//! A field maps a location to the minimum allowed separation around it. The
//! parametric family used for k-space masks is `r(x) = (|x|₂ + offset) / γ`,
//! so density grows with `γ` and falls off with distance from the origin.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{norm, Domain};

/// Default offset of the parametric family.
pub const DEFAULT_OFFSET: f64 = 0.15;

/// Location-dependent threshold distance.
///
/// `radius` must be positive and finite everywhere in the domain it is used on.
pub trait RadiusField: Send + Sync {
    fn radius(&self, p: &[f64]) -> f64;

    /// Density knob; the radius is non-increasing in it.
    fn gamma(&self) -> f64;

    /// Lower and upper bounds of the field over `domain`.
    fn bounds(&self, domain: &Domain) -> Result<RadiusBounds>;

    /// Serializable description, when the field has one.
    fn spec(&self) -> Option<FieldSpec> {
        None
    }
}

/// A field family whose radius scales as `1/γ`.
pub trait GammaFamily: RadiusField + Sized {
    fn with_gamma(&self, gamma: f64) -> Result<Self>;
}

/// How a pair of bounds was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundsMethod {
    ClosedForm,
    /// `r_min` declared by the caller, `r_max` probed.
    Declared { probes_per_axis: usize },
    /// Both bounds from a probe grid; `r_min` is divided and `r_max`
    /// multiplied by `safety`. Advisory only.
    Probed { probes_per_axis: usize, safety: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusBounds {
    pub r_min: f64,
    pub r_max: f64,
    pub method: BoundsMethod,
}

impl RadiusBounds {
    pub fn new(r_min: f64, r_max: f64, method: BoundsMethod) -> Result<Self> {
        if !(r_min > 0.0) || !r_min.is_finite() {
            return Err(Error::InvalidParameter(format!("r_min must be positive, got {r_min}")));
        }
        if !(r_max >= r_min) || !r_max.is_finite() {
            return Err(Error::InvalidParameter(format!("need r_min <= r_max, got [{r_min}, {r_max}]")));
        }
        Ok(Self { r_min, r_max, method })
    }
}

/// Field family name plus parameters, as recorded in metadata.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FieldSpec {
    Parametric { gamma: f64, offset: f64 },
    Constant { radius: f64 },
}

impl FieldSpec {
    pub fn gamma(&self) -> f64 {
        match *self {
            FieldSpec::Parametric { gamma, .. } => gamma,
            FieldSpec::Constant { radius } => 1.0 / radius,
        }
    }
}

/// Evaluates a field and enforces the positivity contract.
pub fn eval_radius<F: RadiusField + ?Sized>(field: &F, p: &[f64]) -> Result<f64> {
    let r = field.radius(p);
    if r > 0.0 && r.is_finite() {
        Ok(r)
    } else {
        Err(Error::RadiusContract { radius: r, at: p.to_vec() })
    }
}

pub fn radius_bounds<F: RadiusField + ?Sized>(field: &F, domain: &Domain) -> Result<RadiusBounds> {
    field.bounds(domain)
}

/// Same family with a new density parameter.
pub fn scaled_field<F: GammaFamily>(field: &F, gamma: f64) -> Result<F> {
    field.with_gamma(gamma)
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("gamma must be positive and finite, got {gamma}")))
    }
}

/// `r(x) = (|x|₂ + offset) / γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParametricField {
    gamma: f64,
    offset: f64,
}

impl ParametricField {
    pub fn new(gamma: f64) -> Result<Self> {
        Self::with_offset(gamma, DEFAULT_OFFSET)
    }

    pub fn with_offset(gamma: f64, offset: f64) -> Result<Self> {
        check_gamma(gamma)?;
        if !offset.is_finite() {
            return Err(Error::InvalidParameter(format!("offset must be finite, got {offset}")));
        }
        Ok(Self { gamma, offset })
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }
}

impl RadiusField for ParametricField {
    #[inline]
    fn radius(&self, p: &[f64]) -> f64 {
        (norm(p) + self.offset) / self.gamma
    }

    fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `r_min` at the domain point nearest the origin, `r_max` at the farthest corner.
    fn bounds(&self, domain: &Domain) -> Result<RadiusBounds> {
        let origin = vec![0.0; domain.dim()];
        let r_min = self.radius(&domain.nearest_point(&origin));
        let r_max = self.radius(&domain.farthest_corner(&origin));
        RadiusBounds::new(r_min, r_max, BoundsMethod::ClosedForm)
    }

    fn spec(&self) -> Option<FieldSpec> {
        Some(FieldSpec::Parametric { gamma: self.gamma, offset: self.offset })
    }
}

impl GammaFamily for ParametricField {
    fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::with_offset(gamma, self.offset)
    }
}

/// Constant threshold `base / γ`; `ConstantField::new(r)` has `γ = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantField {
    base: f64,
    gamma: f64,
}

impl ConstantField {
    pub fn new(r: f64) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::InvalidParameter(format!("constant radius must be positive, got {r}")));
        }
        Ok(Self { base: r, gamma: 1.0 })
    }

    pub fn value(&self) -> f64 {
        self.base / self.gamma
    }
}

impl RadiusField for ConstantField {
    #[inline]
    fn radius(&self, _p: &[f64]) -> f64 {
        self.base / self.gamma
    }

    fn gamma(&self) -> f64 {
        self.gamma
    }

    fn bounds(&self, _domain: &Domain) -> Result<RadiusBounds> {
        let r = self.value();
        RadiusBounds::new(r, r, BoundsMethod::ClosedForm)
    }

    fn spec(&self) -> Option<FieldSpec> {
        Some(FieldSpec::Constant { radius: self.value() })
    }
}

impl GammaFamily for ConstantField {
    fn with_gamma(&self, gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        Ok(Self { base: self.base, gamma })
    }
}

/// Arbitrary user field.
///
/// The grid structures are sized from `r_min`, so a custom field should
/// declare a true lower bound. Without one, bounds come from a probe grid and
/// are flagged [`BoundsMethod::Probed`].
#[derive(Clone)]
pub struct CustomField {
    f: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    declared_r_min: Option<f64>,
    probes_per_axis: usize,
    safety: f64,
}

impl fmt::Debug for CustomField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomField")
            .field("declared_r_min", &self.declared_r_min)
            .field("probes_per_axis", &self.probes_per_axis)
            .field("safety", &self.safety)
            .finish_non_exhaustive()
    }
}

impl CustomField {
    pub fn new(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            f: Arc::new(f),
            declared_r_min: None,
            probes_per_axis: 65,
            safety: 2.0,
        }
    }

    pub fn with_r_min(mut self, r_min: f64) -> Self {
        self.declared_r_min = Some(r_min);
        self
    }

    pub fn with_probes(mut self, per_axis: usize, safety: f64) -> Self {
        self.probes_per_axis = per_axis.max(2);
        self.safety = safety.max(1.0);
        self
    }
}

impl RadiusField for CustomField {
    fn radius(&self, p: &[f64]) -> f64 {
        (self.f)(p)
    }

    fn gamma(&self) -> f64 {
        1.0
    }

    fn bounds(&self, domain: &Domain) -> Result<RadiusBounds> {
        let (lo, hi) = probe_extremes(self, domain, self.probes_per_axis)?;
        match self.declared_r_min {
            Some(r_min) => RadiusBounds::new(
                r_min,
                hi.max(r_min) * self.safety,
                BoundsMethod::Declared { probes_per_axis: self.probes_per_axis },
            ),
            None => RadiusBounds::new(
                lo / self.safety,
                hi * self.safety,
                BoundsMethod::Probed { probes_per_axis: self.probes_per_axis, safety: self.safety },
            ),
        }
    }
}

/// Min and max of the field over a regular probe lattice including the domain faces.
pub fn probe_extremes<F: RadiusField + ?Sized>(
    field: &F,
    domain: &Domain,
    per_axis: usize,
) -> Result<(f64, f64)> {
    let n = domain.dim();
    let per_axis = per_axis.max(2);
    let total = per_axis
        .checked_pow(n as u32)
        .filter(|&t| t <= 1 << 24)
        .ok_or_else(|| Error::InvalidParameter("probe lattice too large".into()))?;
    let mut p = vec![0.0; n];
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for flat in 0..total {
        let mut rem = flat;
        for (d, x) in p.iter_mut().enumerate() {
            let i = rem % per_axis;
            rem /= per_axis;
            *x = domain.lo()[d] + domain.extent(d) * i as f64 / (per_axis - 1) as f64;
        }
        let r = eval_radius(field, &p)?;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok((lo, hi))
}
