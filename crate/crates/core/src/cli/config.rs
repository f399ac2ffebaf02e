use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::expr::Expr;
use crate::constraints::ConstraintMap;
use crate::elliptic::{CoefficientField, RegularityClass, Sym2};
use crate::geometry::{DomainKind, RegionDescriptor};
use crate::runge::CoveringParams;
use crate::whitney::ReductionParams;
use crate::{Error, Point, Result};

/// One experiment, as read from a TOML file. Top-level keys come first, then
/// the one-level tables `[coefficients]`, `[regularity]`, `[region]`,
/// `[runge]` and `[reduction]`. Unknown keys anywhere are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub domain: DomainKind,
    pub h_target: f64,
    /// Required for expression coefficients; presets supply their own.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_claim: Option<f64>,
    pub constraint: ConstraintMap,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub coefficients: CoefficientSpec,
    #[serde(default)]
    pub regularity: RegularitySpec,
    /// Defaults to the disk about the domain centre with half the inradius.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<RegionDescriptor>,
    #[serde(default)]
    pub runge: RungeSpec,
    #[serde(default)]
    pub reduction: ReductionParams,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Either `preset` alone or expression strings for the entries. Missing
/// `a12`, `b`, `c` and `q` entries are zero.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a11: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a12: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a22: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b1: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b2: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c2: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<String>,
}

impl CoefficientSpec {
    pub fn preset(name: &str) -> Self {
        CoefficientSpec {
            preset: Some(name.to_string()),
            ..Default::default()
        }
    }

    fn expressions(&self) -> [(&'static str, &Option<String>); 8] {
        [
            ("a11", &self.a11),
            ("a12", &self.a12),
            ("a22", &self.a22),
            ("b1", &self.b1),
            ("b2", &self.b2),
            ("c1", &self.c1),
            ("c2", &self.c2),
            ("q", &self.q),
        ]
    }
}

/// Unset entries fall back to the coefficient class: presets know theirs,
/// expression coefficients are taken as `ℓ = 1`. `alpha` then defaults to
/// 0.9 for `ℓ = 1` and 0.1 for `ℓ = 0`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularitySpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ell: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

/// Ball radius `r` (default `min(15h, 0.15·inradius)`), Fourier degree `m`,
/// relative Tikhonov weight and relative C¹ tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RungeSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_m() -> usize {
    32
}

fn default_delta() -> f64 {
    1e-8
}

fn default_tolerance() -> f64 {
    0.05
}

impl Default for RungeSpec {
    fn default() -> Self {
        RungeSpec {
            r: None,
            m: default_m(),
            delta: default_delta(),
            tolerance: default_tolerance(),
        }
    }
}

/// Rotation angle of the principal axes in the `aniso-smooth` preset.
pub fn aniso_angle(p: Point) -> f64 {
    2.0 * p[0] + 1.5 * p[1] * p[1]
}

/// Coefficients of a named preset with their natural `λ` and regularity.
fn preset_field(name: &str) -> Result<(CoefficientField, f64, RegularityClass)> {
    let smooth = RegularityClass::smooth();
    let name = name.trim();
    if let Some(rest) = name.strip_prefix("helmholtz") {
        let k = rest
            .trim()
            .strip_prefix("k")
            .and_then(|r| r.trim().strip_prefix('='))
            .and_then(|v| v.trim().parse::<f64>().ok())
            .filter(|k| k.is_finite())
            .ok_or_else(|| Error::Config(format!("preset `{name}`: expected `helmholtz k=<value>`")))?;
        return Ok((CoefficientField::helmholtz(k), 1.0, smooth));
    }
    Ok(match name {
        "laplace" => (CoefficientField::laplace(), 1.0, smooth),
        // eigenvalues 1 and 2; the claim leaves room for rounding
        "aniso-smooth" => (
            CoefficientField::diffusion(|p| Sym2::rotated(aniso_angle(p), 1.0, 2.0), 0.9, smooth),
            0.9,
            smooth,
        ),
        "iso-smooth" => {
            let pi = std::f64::consts::PI;
            (
                CoefficientField::diffusion(
                    move |p| Sym2::scalar(1.0 + 0.5 * (pi * p[0]).sin() * (pi * p[1]).sin()),
                    0.5,
                    smooth,
                ),
                0.5,
                smooth,
            )
        }
        // 4×4 checkerboard of conductivities 0.1 and 1.9 on the unit cell
        "rough-l0" => {
            let pi = std::f64::consts::PI;
            let rough = RegularityClass::rough();
            (
                CoefficientField::diffusion(
                    move |p| {
                        let s = (4.0 * pi * p[0]).sin() * (4.0 * pi * p[1]).sin();
                        Sym2::scalar(if s >= 0.0 { 1.9 } else { 0.1 })
                    },
                    0.05,
                    rough,
                ),
                0.05,
                rough,
            )
        }
        other => {
            return Err(Error::Config(format!(
                "unknown preset `{other}` (expected laplace, helmholtz k=<v>, aniso-smooth, iso-smooth or rough-l0)"
            )))
        }
    })
}

fn parse_entry(name: &str, src: &Option<String>) -> Result<Option<Expr>> {
    src.as_deref()
        .map(|s| {
            Expr::parse(s).map_err(|e| match e {
                Error::Config(msg) => Error::Config(format!("coefficient {name}: {msg}")),
                other => other,
            })
        })
        .transpose()
}

fn expression_field(spec: &CoefficientSpec, lambda: f64, reg: RegularityClass) -> Result<CoefficientField> {
    let mut parsed = Vec::new();
    for (name, src) in spec.expressions() {
        parsed.push(parse_entry(name, src)?);
    }
    let [a11, a12, a22, b1, b2, c1, c2, q]: [Option<Expr>; 8] =
        parsed.try_into().expect("eight coefficient entries");
    let (Some(a11), Some(a22)) = (a11, a22) else {
        return Err(Error::Config("expression coefficients need at least a11 and a22".into()));
    };
    let zero = || Expr::Num(0.0);
    let a12 = a12.unwrap_or_else(zero);
    let a = Arc::new((a11, a12, a22));
    let mut field = CoefficientField::diffusion(
        move |p| Sym2 {
            xx: a.0.eval(p),
            xy: a.1.eval(p),
            yy: a.2.eval(p),
        },
        lambda,
        reg,
    );
    if b1.is_some() || b2.is_some() {
        let b = Arc::new((b1.unwrap_or_else(zero), b2.unwrap_or_else(zero)));
        field = field.with_b(move |p| [b.0.eval(p), b.1.eval(p)]);
    }
    if c1.is_some() || c2.is_some() {
        let c = Arc::new((c1.unwrap_or_else(zero), c2.unwrap_or_else(zero)));
        field = field.with_c(move |p| [c.0.eval(p), c.1.eval(p)]);
    }
    if let Some(q) = q {
        field = field.with_q(move |p| q.eval(p));
    }
    Ok(field)
}

/// Validated, compute-ready form of a [`ScenarioConfig`].
#[derive(Clone, Debug)]
pub struct ResolvedScenario {
    pub coefficients: CoefficientField,
    pub lambda: f64,
    pub regularity: RegularityClass,
    pub region: RegionDescriptor,
    pub covering: CoveringParams,
}

impl ScenarioConfig {
    /// Parses and validates; nothing is computed.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.resolve()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Minimal scenario around a preset, with every other entry defaulted.
    pub fn with_preset(domain: DomainKind, h_target: f64, preset: &str, constraint: ConstraintMap) -> Self {
        ScenarioConfig {
            domain,
            h_target,
            lambda_claim: None,
            constraint,
            seed: 0,
            output_dir: default_output_dir(),
            coefficients: CoefficientSpec::preset(preset),
            regularity: RegularitySpec::default(),
            region: None,
            runge: RungeSpec::default(),
            reduction: ReductionParams::default(),
        }
    }

    /// Checks every entry and builds the coefficient field.
    pub fn resolve(&self) -> Result<ResolvedScenario> {
        let cfg = |msg: String| Err(Error::Config(msg));
        if !(self.h_target > 0.0 && self.h_target <= 0.5) {
            return cfg(format!("h_target must lie in (0, 0.5], got {}", self.h_target));
        }
        if let Some(l) = self.lambda_claim {
            if !(l > 0.0 && l.is_finite()) {
                return cfg(format!("lambda_claim must be positive, got {l}"));
            }
        }
        let preset = match &self.coefficients.preset {
            Some(name) => {
                if let Some((entry, _)) = self.coefficients.expressions().iter().find(|(_, e)| e.is_some()) {
                    return cfg(format!("coefficient `{entry}` cannot be combined with a preset"));
                }
                Some(preset_field(name)?)
            }
            None => None,
        };
        let default_ell = preset.as_ref().map_or(1, |p| p.2.ell);
        let ell = self.regularity.ell.unwrap_or(default_ell);
        if ell > 1 {
            return cfg(format!("regularity.ell must be 0 or 1, got {ell}"));
        }
        let alpha = self.regularity.alpha.unwrap_or(if ell == 1 { 0.9 } else { 0.1 });
        if !(alpha > 0.0 && alpha < 1.0) {
            return cfg(format!("regularity.alpha must lie in (0, 1), got {alpha}"));
        }
        let regularity = RegularityClass { ell, alpha };
        if self.constraint.ell_required() > ell {
            log::warn!(
                "constraint {} needs ℓ = {} solutions but the coefficients are declared ℓ = {ell}",
                self.constraint.name(),
                self.constraint.ell_required()
            );
        }
        let (coefficients, lambda) = match preset {
            Some((field, natural, _)) => {
                let lambda = self.lambda_claim.unwrap_or(natural);
                (field.with_lambda(lambda).with_regularity(regularity), lambda)
            }
            None => {
                let Some(lambda) = self.lambda_claim else {
                    return cfg("lambda_claim is required with expression coefficients".into());
                };
                (expression_field(&self.coefficients, lambda, regularity)?, lambda)
            }
        };
        let region = self.region.clone().unwrap_or(RegionDescriptor::Disk {
            center: self.domain.center(),
            radius: 0.5 * self.domain.inradius(),
        });
        match &region {
            RegionDescriptor::Disk { radius, .. } if !(*radius > 0.0) => {
                return cfg(format!("region radius must be positive, got {radius}"))
            }
            RegionDescriptor::Polygon { vertices } if vertices.len() < 3 => {
                return cfg("region polygon needs at least 3 vertices".into())
            }
            _ => {}
        }
        if region.clearance(self.domain) <= 0.0 {
            return cfg("region must lie strictly inside the domain".into());
        }
        let rs = &self.runge;
        if rs.m == 0 {
            return cfg("runge.m must be at least 1".into());
        }
        if !(rs.delta > 0.0) {
            return cfg(format!("runge.delta must be positive, got {}", rs.delta));
        }
        if !(rs.tolerance > 0.0) {
            return cfg(format!("runge.tolerance must be positive, got {}", rs.tolerance));
        }
        let radius = match rs.r {
            Some(r) if !(r > 0.0) => return cfg(format!("runge.r must be positive, got {r}")),
            Some(r) => r,
            None => CoveringParams::default_radius(self.h_target, self.domain.inradius()),
        };
        let red = &self.reduction;
        if !(red.theta >= 0.0) {
            return cfg(format!("reduction.theta must be non-negative, got {}", red.theta));
        }
        if red.max_tries == 0 {
            return cfg("reduction.max_tries must be at least 1".into());
        }
        if let Some(s) = red.scale0 {
            if !(s > 0.0) {
                return cfg(format!("reduction.scale0 must be positive, got {s}"));
            }
        }
        Ok(ResolvedScenario {
            coefficients,
            lambda,
            regularity,
            region,
            covering: CoveringParams {
                radius,
                delta_rel: rs.delta,
                tolerance: rs.tolerance,
            },
        })
    }
}
