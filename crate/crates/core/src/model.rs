//! Build configurations and self-describing model files.
//!
//! A model file stores the config it came from together with the knot tables
//! of the built profile. Loading a model rebuilds the closed-form pieces from
//! the config and takes every tabulated piece from the file, so evaluations
//! after a reload are bit-identical to the ones made right after the build.

use serde::{Deserialize, Serialize};

use crate::copula::ProfileCopula;
use crate::error::{Error, Result};
use crate::families::{GFamily, LFunction, LSpec};
use crate::prescribed::{Construction, PrescribedCopula};
use crate::profile::{BuildOptions, GSource, Positivity, Profile, ProfileKind, ProfileTables};
use crate::separable::{Provenance, SeparableCopula};
use crate::support::{SupportFunction, SupportSpec};

pub const FORMAT: &str = "oscopula-model";
pub const VERSION: u32 = 1;

/// Numeric options of a config; every field is optional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptionsConfig {
    pub knots: usize,
    pub epsilon: f64,
    pub rel_tol: f64,
}

impl Default for OptionsConfig {
    fn default() -> Self {
        let d = BuildOptions::default();
        Self {
            knots: d.knots,
            epsilon: d.epsilon,
            rel_tol: d.rel_tol,
        }
    }
}

impl OptionsConfig {
    pub fn build_options(&self) -> Result<BuildOptions> {
        let o = BuildOptions {
            knots: self.knots,
            epsilon: self.epsilon,
            rel_tol: self.rel_tol,
        };
        o.validate()?;
        Ok(o)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstructionName {
    #[serde(rename = "main")]
    Main,
    #[serde(rename = "from_L", alias = "from_l")]
    FromL,
    #[serde(rename = "from_G", alias = "from_g")]
    FromG,
    #[serde(rename = "piecewise_power")]
    PiecewisePower,
    #[serde(rename = "gaussian_power")]
    GaussianPower,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeparableConfig {
    #[serde(rename = "G", default, skip_serializing_if = "Option::is_none")]
    pub g: Option<GFamily>,
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub l: Option<LSpec>,
    #[serde(default)]
    pub options: OptionsConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrescribedConfig {
    pub construction: ConstructionName,
    #[serde(rename = "H", default, skip_serializing_if = "Option::is_none")]
    pub h: Option<SupportSpec>,
    #[serde(rename = "G", default, skip_serializing_if = "Option::is_none")]
    pub g: Option<GFamily>,
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub l: Option<LSpec>,
    /// Corner of the piecewise-linear support.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u0: Option<f64>,
    /// Shift of the Gaussian support.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Exponent of the power constructions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default)]
    pub options: OptionsConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelConfig {
    Separable(SeparableConfig),
    Prescribed(PrescribedConfig),
}

fn need<T>(value: Option<T>, what: &str, construction: &str) -> Result<T> {
    value.ok_or_else(|| Error::Config(format!("construction '{construction}' needs field '{what}'")))
}

fn forbid<T>(value: &Option<T>, what: &str, construction: &str) -> Result<()> {
    match value {
        Some(_) => Err(Error::Config(format!("construction '{construction}' does not take field '{what}'"))),
        None => Ok(()),
    }
}

impl ModelConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))
    }

    pub fn options(&self) -> &OptionsConfig {
        match self {
            Self::Separable(c) => &c.options,
            Self::Prescribed(c) => &c.options,
        }
    }

    /// Support curve named by the config, if any.
    pub fn support(&self) -> Result<Option<SupportFunction>> {
        let Self::Prescribed(c) = self else {
            return Ok(None);
        };
        let h = match c.construction {
            ConstructionName::Main | ConstructionName::FromL | ConstructionName::FromG => {
                SupportFunction::from_spec(&need(c.h, "H", "main/from_L/from_G")?)?
            }
            ConstructionName::PiecewisePower => SupportFunction::piecewise_linear(need(c.u0, "u0", "piecewise_power")?)?,
            ConstructionName::GaussianPower => SupportFunction::gaussian_shift(need(c.delta, "delta", "gaussian_power")?)?,
        };
        Ok(Some(h))
    }

    /// Source of `G` named by the config.
    fn source(&self) -> Result<GSource> {
        match self {
            Self::Separable(c) => match (c.g, c.l) {
                (Some(g), None) => {
                    g.validate()?;
                    Ok(GSource::Family(g))
                }
                (None, Some(l)) => Ok(GSource::FromL(LFunction::from_spec(&l)?)),
                _ => Err(Error::Config("a separable config needs exactly one of 'G' and 'L'".into())),
            },
            Self::Prescribed(c) => match c.construction {
                ConstructionName::Main => {
                    forbid(&c.g, "G", "main")?;
                    forbid(&c.l, "L", "main")?;
                    Ok(GSource::FromL(LFunction::support_gap(&self.support()?.expect("support"))))
                }
                ConstructionName::FromL => {
                    forbid(&c.g, "G", "from_L")?;
                    Ok(GSource::FromL(LFunction::from_spec(&need(c.l, "L", "from_L")?)?))
                }
                ConstructionName::FromG => {
                    forbid(&c.l, "L", "from_G")?;
                    let g = need(c.g, "G", "from_G")?;
                    g.validate()?;
                    Ok(GSource::Family(g))
                }
                ConstructionName::PiecewisePower => {
                    Ok(GSource::Family(GFamily::Power { k: need(c.k, "k", "piecewise_power")? }))
                }
                ConstructionName::GaussianPower => {
                    Ok(GSource::FromL(LFunction::linear(need(c.k, "k", "gaussian_power")?)?))
                }
            },
        }
    }
}

/// What kind of copula a model holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "tag", rename_all = "snake_case")]
pub enum ModelTag {
    Separable(Provenance),
    Prescribed(Construction),
}

impl ModelTag {
    /// Whether `K` is evaluated from a closed form rather than a table.
    pub fn closed_form_k(&self) -> bool {
        matches!(
            self,
            Self::Prescribed(Construction::Main) | Self::Prescribed(Construction::PiecewisePower)
        )
    }
}

/// A built copula together with the config it came from.
#[derive(Debug, Clone)]
pub struct Model {
    config: ModelConfig,
    tag: ModelTag,
    positivity: Positivity,
    copula: ProfileCopula,
}

/// On-disk form of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub config: ModelConfig,
    #[serde(flatten)]
    pub tag: ModelTag,
    pub closed_form_k: bool,
    pub profile_kind: ProfileKind,
    pub u0: f64,
    pub epsilon: f64,
    pub positivity: Positivity,
    pub tables: ProfileTables,
}

impl Model {
    /// Builds the copula described by `config`.
    pub fn build(config: ModelConfig) -> Result<Self> {
        let opts = config.options().build_options()?;
        let (tag, positivity, copula) = match &config {
            ModelConfig::Separable(c) => {
                let sc = match (c.g, c.l) {
                    (Some(g), None) => SeparableCopula::from_g(g, &opts)?,
                    (None, Some(l)) => SeparableCopula::from_l(LFunction::from_spec(&l)?, &opts)?,
                    _ => return Err(Error::Config("a separable config needs exactly one of 'G' and 'L'".into())),
                };
                (ModelTag::Separable(sc.provenance()), sc.positivity(), sc.core().clone())
            }
            ModelConfig::Prescribed(c) => {
                let pc = match c.construction {
                    ConstructionName::PiecewisePower => {
                        forbid(&c.h, "H", "piecewise_power")?;
                        PrescribedCopula::piecewise_power(need(c.u0, "u0", "piecewise_power")?, need(c.k, "k", "piecewise_power")?, &opts)?
                    }
                    ConstructionName::GaussianPower => {
                        forbid(&c.h, "H", "gaussian_power")?;
                        PrescribedCopula::gaussian_power(need(c.delta, "delta", "gaussian_power")?, need(c.k, "k", "gaussian_power")?, &opts)?
                    }
                    name => {
                        for (v, f) in [(c.u0, "u0"), (c.delta, "delta"), (c.k, "k")] {
                            forbid(&v, f, "main/from_L/from_G")?;
                        }
                        let h = config.support()?.expect("support");
                        match (name, config.source()?) {
                            (ConstructionName::Main, _) => PrescribedCopula::build_main(&h, &opts)?,
                            (ConstructionName::FromL, GSource::FromL(l)) => PrescribedCopula::build_with_l(&h, l, &opts)?,
                            (_, GSource::Family(g)) => PrescribedCopula::build_with_g(&h, g, &opts)?,
                            _ => unreachable!("source matches construction"),
                        }
                    }
                };
                (ModelTag::Prescribed(pc.construction()), pc.positivity(), pc.core().clone())
            }
        };
        Ok(Self {
            config,
            tag,
            positivity,
            copula,
        })
    }

    pub fn from_config_json(text: &str) -> Result<Self> {
        Self::build(ModelConfig::from_json(text)?)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn tag(&self) -> ModelTag {
        self.tag
    }

    /// Positivity analysis recorded when the model was built.
    pub fn positivity(&self) -> Positivity {
        self.positivity
    }

    pub fn copula(&self) -> &ProfileCopula {
        &self.copula
    }

    pub fn copula_mut(&mut self) -> &mut ProfileCopula {
        &mut self.copula
    }

    pub fn profile(&self) -> &Profile {
        self.copula.profile()
    }

    pub fn u0(&self) -> f64 {
        self.profile().u0()
    }

    pub fn to_file(&self) -> ModelFile {
        let p = self.profile();
        ModelFile {
            format: FORMAT.into(),
            version: VERSION,
            config: self.config.clone(),
            tag: self.tag,
            closed_form_k: self.tag.closed_form_k(),
            profile_kind: p.kind(),
            u0: p.u0(),
            epsilon: p.epsilon(),
            positivity: self.positivity,
            tables: p.tables().clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("model serializes")
    }

    /// Rebuilds a model from its file without quadrature. The tables are
    /// taken as stored; use the validation checks to judge them.
    pub fn from_file(file: ModelFile) -> Result<Self> {
        if file.format != FORMAT || file.version != VERSION {
            return Err(Error::Config(format!(
                "unsupported model format '{}' version {}",
                file.format, file.version
            )));
        }
        let support = file.config.support()?;
        let source = file.config.source()?;
        if let Some(h) = &support {
            if h.u0().to_bits() != file.u0.to_bits() {
                return Err(Error::Config(format!("stored u0 {} does not match the support curve", file.u0)));
            }
        }
        let profile = Profile::from_tables(file.profile_kind, source, support, file.epsilon, file.tables)?;
        Ok(Self {
            config: file.config,
            tag: file.tag,
            positivity: file.positivity,
            copula: ProfileCopula::new(profile),
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid model file: {e}")))?;
        Self::from_file(file)
    }
}
