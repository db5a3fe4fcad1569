//! The physical problem family: parameters, radial potentials and named presets.
//!
//! Units are dimensionless throughout (ħ = c = 1). The magnetic potential B(r)
//! is identically zero for every instance and is therefore not stored.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Anomalous coupling used by the extended-oscillator presets.
///
/// With this sign the electric term E(r) = γ₀ + γ₁ r enters the upper diagonal
/// entry of the radial operator as +γ₀ + γ₁ r, so γ₁ > 0 confines.
pub const EXTENDED_MU_N: f64 = -1.0;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("missing parameter `{0}`")]
    MissingParameter(String),
    #[error("preset {preset} does not accept parameter `{name}`")]
    UnexpectedParameter { preset: Preset, name: String },
    #[error("kappa = {value} is not valid in {geometry} geometry")]
    InvalidKappa { value: f64, geometry: Geometry },
    #[error("invalid instance: {0}")]
    Validation(String),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    ThreeD,
    Planar,
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Geometry::ThreeD => f.write_str("3D"),
            Geometry::Planar => f.write_str("planar"),
        }
    }
}

/// Total angular momentum label, stored as twice its value so half-integers are exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Kappa(i32);

impl Kappa {
    pub fn from_twice(twice: i32) -> Result<Self, ModelError> {
        if twice == 0 {
            return Err(ModelError::Validation("kappa must be nonzero".into()));
        }
        Ok(Kappa(twice))
    }

    /// Accepts integers and half-integers only.
    pub fn from_f64(value: f64) -> Result<Self, ModelError> {
        let twice = 2.0 * value;
        if !twice.is_finite() || (twice - twice.round()).abs() > 1e-12 || twice.abs() > 1e6 {
            return Err(ModelError::Validation(format!(
                "kappa = {value} is neither an integer nor a half-integer"
            )));
        }
        Self::from_twice(twice.round() as i32)
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 2.0
    }

    pub fn twice(self) -> i32 {
        self.0
    }

    pub fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }

    pub fn validate_for(self, geometry: Geometry) -> Result<(), ModelError> {
        let ok = match geometry {
            Geometry::ThreeD => self.is_integer(),
            Geometry::Planar => !self.is_integer(),
        };
        if ok {
            Ok(())
        } else {
            Err(ModelError::InvalidKappa {
                value: self.value(),
                geometry,
            })
        }
    }
}

impl Serialize for Kappa {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.value())
    }
}

impl<'de> Deserialize<'de> for Kappa {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        Kappa::from_f64(v).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    pub mass: f64,
    pub kappa: Kappa,
    pub mu_n: f64,
    /// Energy parameter; unknown (None) while solving an eigenproblem.
    pub epsilon: Option<f64>,
}

impl PhysicalParams {
    pub fn new(mass: f64, kappa: f64, mu_n: f64) -> Result<Self, ModelError> {
        Ok(PhysicalParams {
            mass,
            kappa: Kappa::from_f64(kappa)?,
            mu_n,
            epsilon: None,
        })
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = Some(epsilon);
        self
    }
}

/// Coefficients of V(r) = α/r + Σ αᵢ rⁱ, W(r) = β/r + Σ βᵢ rⁱ and E(r) = Σ γᵢ rⁱ.
///
/// `alpha_poly` and `beta_poly` hold the coefficients of r¹…rˢ and `gamma_poly`
/// those of r⁰…rˢ; the constructor pads all three to a common s.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PotentialSpec {
    pub alpha: f64,
    pub beta: f64,
    pub alpha_poly: Vec<f64>,
    pub beta_poly: Vec<f64>,
    pub gamma_poly: Vec<f64>,
}

impl PotentialSpec {
    pub fn new(
        alpha: f64,
        beta: f64,
        mut alpha_poly: Vec<f64>,
        mut beta_poly: Vec<f64>,
        mut gamma_poly: Vec<f64>,
    ) -> Self {
        let s = alpha_poly
            .len()
            .max(beta_poly.len())
            .max(gamma_poly.len().saturating_sub(1));
        alpha_poly.resize(s, 0.0);
        beta_poly.resize(s, 0.0);
        gamma_poly.resize(s + 1, 0.0);
        PotentialSpec {
            alpha,
            beta,
            alpha_poly,
            beta_poly,
            gamma_poly,
        }
    }

    /// Maximal degree s of the polynomial parts.
    pub fn degree(&self) -> usize {
        self.alpha_poly.len()
    }

    pub fn is_consistent(&self) -> bool {
        let s = self.alpha_poly.len();
        self.beta_poly.len() == s && self.gamma_poly.len() == s + 1
    }

    /// V(r)
    pub fn vector(&self, r: f64) -> f64 {
        self.alpha / r + poly_from_one(&self.alpha_poly, r)
    }

    /// W(r)
    pub fn scalar(&self, r: f64) -> f64 {
        self.beta / r + poly_from_one(&self.beta_poly, r)
    }

    /// E(r)
    pub fn electric(&self, r: f64) -> f64 {
        self.gamma_poly.iter().rev().fold(0.0, |acc, &c| acc * r + c)
    }

    fn all_finite(&self) -> bool {
        self.alpha.is_finite()
            && self.beta.is_finite()
            && self
                .alpha_poly
                .iter()
                .chain(&self.beta_poly)
                .chain(&self.gamma_poly)
                .all(|c| c.is_finite())
    }
}

fn poly_from_one(coeffs: &[f64], r: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * r + c) * r
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub params: PhysicalParams,
    pub potentials: PotentialSpec,
    pub geometry: Geometry,
}

impl ProblemInstance {
    pub fn new(
        params: PhysicalParams,
        potentials: PotentialSpec,
        geometry: Geometry,
    ) -> Result<Self, ModelError> {
        let inst = ProblemInstance {
            params,
            potentials,
            geometry,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.params.kappa.validate_for(self.geometry)?;
        if !self.potentials.is_consistent() {
            return Err(ModelError::Validation(
                "potential coefficient lists have inconsistent lengths".into(),
            ));
        }
        if !self.params.mass.is_finite() || !self.params.mu_n.is_finite() || !self.potentials.all_finite()
        {
            return Err(ModelError::Validation("non-finite coefficient".into()));
        }
        Ok(())
    }

    pub fn kappa(&self) -> f64 {
        self.params.kappa.value()
    }

    /// eB̃ of a planar instance, recovered from the E-coefficient eB̃/2.
    pub fn field_strength(&self) -> Option<f64> {
        match self.geometry {
            Geometry::Planar => self.potentials.gamma_poly.get(1).map(|g| 2.0 * g * self.params.mu_n),
            Geometry::ThreeD => None,
        }
    }

    pub fn to_json(&self) -> Result<String, ModelError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let inst: ProblemInstance = serde_json::from_str(text)?;
        inst.validate()?;
        Ok(inst)
    }
}

/// On-disk layout of a problem instance; key names are fixed.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    geometry: Geometry,
    #[serde(rename = "M")]
    mass: f64,
    kappa: Kappa,
    mu_n: f64,
    alpha: f64,
    beta: f64,
    alpha_poly: Vec<f64>,
    beta_poly: Vec<f64>,
    gamma_poly: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    epsilon: Option<f64>,
}

impl Serialize for ProblemInstance {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        InstanceFile {
            geometry: self.geometry,
            mass: self.params.mass,
            kappa: self.params.kappa,
            mu_n: self.params.mu_n,
            alpha: self.potentials.alpha,
            beta: self.potentials.beta,
            alpha_poly: self.potentials.alpha_poly.clone(),
            beta_poly: self.potentials.beta_poly.clone(),
            gamma_poly: self.potentials.gamma_poly.clone(),
            epsilon: self.params.epsilon,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ProblemInstance {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let f = InstanceFile::deserialize(d)?;
        let potentials = PotentialSpec {
            alpha: f.alpha,
            beta: f.beta,
            alpha_poly: f.alpha_poly,
            beta_poly: f.beta_poly,
            gamma_poly: f.gamma_poly,
        };
        Ok(ProblemInstance {
            params: PhysicalParams {
                mass: f.mass,
                kappa: f.kappa,
                mu_n: f.mu_n,
                epsilon: f.epsilon,
            },
            potentials,
            geometry: f.geometry,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    DiracOscillator,
    ExtendedOscillatorES,
    DiracCoulomb,
    PlanarCoulombMagnetic,
    ExtendedOscillatorQES,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::DiracOscillator,
        Preset::ExtendedOscillatorES,
        Preset::DiracCoulomb,
        Preset::PlanarCoulombMagnetic,
        Preset::ExtendedOscillatorQES,
    ];

    /// Canonical parameter names accepted by [`preset`].
    pub fn parameters(self) -> &'static [&'static str] {
        match self {
            Preset::DiracOscillator => &["M", "kappa", "mu_n"],
            Preset::ExtendedOscillatorES => &["M", "kappa", "beta1", "gamma1"],
            Preset::DiracCoulomb => &["M", "kappa", "alpha", "beta"],
            Preset::PlanarCoulombMagnetic => &["M", "kappa", "alpha", "btilde"],
            Preset::ExtendedOscillatorQES => &["M", "kappa", "alpha", "beta1", "gamma0", "gamma1"],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::DiracOscillator => "oscillator",
            Preset::ExtendedOscillatorES => "extended-oscillator",
            Preset::DiracCoulomb => "coulomb",
            Preset::PlanarCoulombMagnetic => "planar",
            Preset::ExtendedOscillatorQES => "extended-qes",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.to_ascii_lowercase().replace('_', "-");
        Ok(match key.as_str() {
            "oscillator" | "dirac-oscillator" | "diracoscillator" => Preset::DiracOscillator,
            "extended-oscillator" | "extended-oscillator-es" | "extendedoscillatores" => {
                Preset::ExtendedOscillatorES
            }
            "coulomb" | "dirac-coulomb" | "diraccoulomb" => Preset::DiracCoulomb,
            "planar" | "planar-coulomb-magnetic" | "planarcoulombmagnetic" => {
                Preset::PlanarCoulombMagnetic
            }
            "extended-qes" | "extended-oscillator-qes" | "extendedoscillatorqes" => {
                Preset::ExtendedOscillatorQES
            }
            _ => return Err(ModelError::UnknownPreset(s.to_string())),
        })
    }
}

fn canonical_key(key: &str) -> String {
    match key.to_ascii_lowercase().replace('-', "_").as_str() {
        "m" | "mass" => "M".to_string(),
        "mu" | "mun" => "mu_n".to_string(),
        "b_tilde" | "eb" | "e_btilde" => "btilde".to_string(),
        other => other.to_string(),
    }
}

/// The forced constants of the exactly solvable extended oscillator:
/// returns (ω, β, γ₀) with β = −κ tan 2ω and γ₀ = −M tan 2ω.
pub fn extended_forced_constants(
    mass: f64,
    kappa: f64,
    beta1: f64,
    gamma1: f64,
) -> Result<(f64, f64, f64), ModelError> {
    let radius = gamma1.hypot(beta1);
    if radius == 0.0 {
        return Err(ModelError::Validation(
            "beta1 and gamma1 cannot both vanish".into(),
        ));
    }
    let omega = 0.5 * beta1.atan2(gamma1);
    let c = gamma1 / radius;
    if c.abs() < 1e-12 {
        return Err(ModelError::Validation(
            "cos 2ω = 0: the forced constants diverge".into(),
        ));
    }
    let tan2w = beta1 / gamma1;
    Ok((omega, -kappa * tan2w, -mass * tan2w))
}

/// Builds a problem instance with the potential pattern of a named case.
pub fn preset(name: Preset, params: &BTreeMap<String, f64>) -> Result<ProblemInstance, ModelError> {
    let allowed = name.parameters();
    let mut values: BTreeMap<String, f64> = BTreeMap::new();
    for (key, &v) in params {
        let canon = canonical_key(key);
        if !allowed.contains(&canon.as_str()) {
            return Err(ModelError::UnexpectedParameter {
                preset: name,
                name: key.clone(),
            });
        }
        if !v.is_finite() {
            return Err(ModelError::Validation(format!("parameter `{key}` is not finite")));
        }
        values.insert(canon, v);
    }
    let get = |k: &str| -> Result<f64, ModelError> {
        values
            .get(k)
            .copied()
            .ok_or_else(|| ModelError::MissingParameter(k.to_string()))
    };
    for k in allowed {
        get(k)?;
    }
    let mass = get("M")?;
    let kappa = get("kappa")?;

    let (geometry, mu_n, potentials) = match name {
        Preset::DiracOscillator => (
            Geometry::ThreeD,
            get("mu_n")?,
            PotentialSpec::new(0.0, 0.0, vec![], vec![], vec![0.0, -1.0]),
        ),
        Preset::ExtendedOscillatorES => {
            let (beta1, gamma1) = (get("beta1")?, get("gamma1")?);
            let (_, beta, gamma0) = extended_forced_constants(mass, kappa, beta1, gamma1)?;
            (
                Geometry::ThreeD,
                EXTENDED_MU_N,
                PotentialSpec::new(0.0, beta, vec![], vec![beta1], vec![gamma0, gamma1]),
            )
        }
        Preset::DiracCoulomb => (
            Geometry::ThreeD,
            0.0,
            PotentialSpec::new(get("alpha")?, get("beta")?, vec![], vec![], vec![]),
        ),
        Preset::PlanarCoulombMagnetic => (
            Geometry::Planar,
            1.0,
            PotentialSpec::new(get("alpha")?, 0.0, vec![], vec![], vec![0.0, get("btilde")? / 2.0]),
        ),
        Preset::ExtendedOscillatorQES => (
            Geometry::ThreeD,
            EXTENDED_MU_N,
            PotentialSpec::new(
                get("alpha")?,
                0.0,
                vec![],
                vec![get("beta1")?],
                vec![get("gamma0")?, get("gamma1")?],
            ),
        ),
    };
    let params = PhysicalParams {
        mass,
        kappa: Kappa::from_f64(kappa)?,
        mu_n,
        epsilon: None,
    };
    ProblemInstance::new(params, potentials, geometry)
}
