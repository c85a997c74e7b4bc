//! Run configuration: a single TOML file with a versioned schema.
//!
//! Every section is optional; absent keys take the documented defaults, so an
//! empty file describes the straight cone `b0 = −0.5` at `M∞ = 10`.

use std::path::{Path, PathBuf};

use conical_glimm::scheme::{BoundarySpec, SchemeConfig};
use conical_glimm::GasParams;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Schema version understood by this build.
pub const SCHEMA_VERSION: u32 = 1;

/// Complete run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Schema version of the file.
    pub schema_version: u32,
    /// Gas constants.
    pub gas: GasSection,
    /// Cone and its perturbation.
    pub boundary: BoundarySection,
    /// Mesh and marching parameters.
    pub scheme: SchemeSection,
    /// Output location and content.
    pub outputs: OutputSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            gas: GasSection::default(),
            boundary: BoundarySection::default(),
            scheme: SchemeSection::default(),
            outputs: OutputSection::default(),
        }
    }
}

/// Sound speed and free-stream speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GasSection {
    /// Sound speed `c`.
    pub c: f64,
    /// Free-stream axial speed `u∞` (so `M∞ = u∞/c`).
    pub u_inf: f64,
}

impl Default for GasSection {
    fn default() -> Self {
        Self { c: 1.0, u_inf: 10.0 }
    }
}

/// Unit of the boundary lengths (`xi`, `length`, `start`, sample coordinates).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthUnit {
    /// Multiples of the axial mesh `Δx`.
    Dx,
    /// Absolute axial length.
    Absolute,
}

/// Shape family of an analytic perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalyticShape {
    /// Decaying oscillation `aℓ·sin(ξ/ℓ)/(1 + ξ/ℓ)²`.
    Sinusoid,
    /// Compact bump `aℓ·sin²(π(ξ − ξs)/ℓ)/π` on `[ξs, ξs + ℓ]`.
    Bump,
}

/// Boundary kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    /// The unperturbed cone.
    Straight,
    /// Slope change `delta` at `xi`.
    Kink,
    /// Piecewise-linear perturbation through `points` `(ξ, β)` from `(0, 0)`.
    Sampled,
    /// Closed-form perturbation `shape` with `amplitude`, `length`, `start`.
    Analytic,
}

/// Parameters of the boundary perturbation; which keys are required depends
/// on the kind.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryParameters {
    /// Kink position.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<f64>,
    /// Kink slope change.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Sample points `[[ξ, β], ...]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<(f64, f64)>>,
    /// Analytic shape family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<AnalyticShape>,
    /// Analytic slope amplitude.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    /// Analytic length scale.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
    /// Start of a bump.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
}

/// Cone slope, perturbation and start of the perturbed part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundarySection {
    /// Base cone slope `b0 < 0`.
    pub b0: f64,
    /// Start of the perturbed part `x0 > 0`.
    pub x0: f64,
    /// Unit of the perturbation lengths.
    pub length_unit: LengthUnit,
    /// Perturbation kind.
    pub kind: BoundaryKind,
    /// Perturbation parameters.
    pub parameters: BoundaryParameters,
}

impl Default for BoundarySection {
    fn default() -> Self {
        Self {
            b0: -0.5,
            x0: 1.0,
            length_unit: LengthUnit::Dx,
            kind: BoundaryKind::Straight,
            parameters: BoundaryParameters::default(),
        }
    }
}

/// Mesh and marching parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchemeSection {
    /// Axial mesh (derived from the CFL margin when absent).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dx: Option<f64>,
    /// Self-similar grid size (derived from the layer width when absent).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dsigma: Option<f64>,
    /// Number of steps.
    pub n_steps: usize,
    /// Sampling-sequence seed.
    pub seed: u64,
    /// CFL safety ratio.
    pub cfl_margin: f64,
    /// Cells across the background layer when `dsigma` is derived.
    pub layer_cells: usize,
    /// Admissible neighborhood radius of the post-shock state, units of `u∞`.
    pub p2_radius: f64,
}

impl Default for SchemeSection {
    fn default() -> Self {
        let d = SchemeConfig::default();
        Self {
            dx: d.dx,
            dsigma: d.dsigma,
            n_steps: d.n_steps,
            seed: d.seed,
            cfl_margin: d.cfl_margin,
            layer_cells: d.layer_cells,
            p2_radius: d.p2_radius,
        }
    }
}

/// Output format selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    /// Tables (slices, front, diagnostics).
    Csv,
    /// Summaries and verdicts.
    Json,
}

/// Output location and content.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// Output directory.
    pub dir: PathBuf,
    /// Write every `slice_every`-th slice (0 disables slice output).
    pub slice_every: usize,
    /// Formats to write.
    pub formats: Vec<Format>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), slice_every: 50, formats: vec![Format::Csv, Format::Json] }
    }
}

impl OutputSection {
    /// Whether `f` is requested.
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

impl RunConfig {
    /// Reads and validates a configuration file.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Parses and validates configuration text.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks the schema version, the standing hypotheses and value ranges.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |path: &str, msg: String| Err(CliError::Config(format!("{path}: {msg}")));
        if self.schema_version != SCHEMA_VERSION {
            return bad(
                "schema_version",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", self.schema_version),
            );
        }
        if !(self.gas.c > 0.0 && self.gas.c.is_finite()) {
            return bad("gas.c", format!("sound speed must be positive, got {}", self.gas.c));
        }
        if !(self.gas.u_inf > self.gas.c && self.gas.u_inf.is_finite()) {
            return bad(
                "gas.u_inf",
                format!("hypothesis H2 violated: need M∞ = u_inf/c > 1, got {}", self.gas.u_inf / self.gas.c),
            );
        }
        if !(self.boundary.b0 < 0.0 && self.boundary.b0.is_finite()) {
            return bad("boundary.b0", format!("hypothesis H1 violated: need b0 < 0, got {}", self.boundary.b0));
        }
        if !(self.boundary.x0 > 0.0 && self.boundary.x0.is_finite()) {
            return bad("boundary.x0", format!("must be positive, got {}", self.boundary.x0));
        }
        for (name, v) in [("scheme.dx", self.scheme.dx), ("scheme.dsigma", self.scheme.dsigma)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return bad(name, format!("must be positive, got {v}"));
                }
            }
        }
        if self.scheme.n_steps == 0 {
            return bad("scheme.n_steps", "must be at least 1".into());
        }
        if !(self.scheme.cfl_margin >= 1.0) {
            return bad("scheme.cfl_margin", format!("must be at least 1, got {}", self.scheme.cfl_margin));
        }
        if self.scheme.layer_cells < 2 {
            return bad("scheme.layer_cells", "must be at least 2".into());
        }
        if !(self.scheme.p2_radius > 0.0) {
            return bad("scheme.p2_radius", format!("must be positive, got {}", self.scheme.p2_radius));
        }
        self.boundary_spec(1.0)?.validate().map_err(|e| CliError::Config(format!("boundary.parameters: {e}")))
    }

    /// Gas parameters.
    pub fn params(&self) -> Result<GasParams, CliError> {
        GasParams::new(self.gas.c, self.gas.u_inf).map_err(|e| CliError::Config(format!("gas: {e}")))
    }

    /// Scheme configuration.
    pub fn scheme_config(&self) -> SchemeConfig {
        let s = &self.scheme;
        SchemeConfig {
            dx: s.dx,
            dsigma: s.dsigma,
            layer_cells: s.layer_cells,
            cfl_margin: s.cfl_margin,
            seed: s.seed,
            n_steps: s.n_steps,
            x0: self.boundary.x0,
            p2_radius: s.p2_radius,
        }
    }

    /// Boundary perturbation with lengths scaled by `dx` when given in mesh units.
    pub fn boundary_spec(&self, dx: f64) -> Result<BoundarySpec, CliError> {
        let k = match self.boundary.length_unit {
            LengthUnit::Dx => dx,
            LengthUnit::Absolute => 1.0,
        };
        let prm = &self.boundary.parameters;
        let kind = self.boundary.kind;
        let missing = |key: &str| CliError::Config(format!("boundary.parameters.{key}: required for kind = {kind:?}"));
        let need = |v: Option<f64>, key: &str| v.ok_or_else(|| missing(key));
        Ok(match kind {
            BoundaryKind::Straight => BoundarySpec::Straight,
            BoundaryKind::Kink => BoundarySpec::Kink { xi: need(prm.xi, "xi")? * k, delta: need(prm.delta, "delta")? },
            BoundaryKind::Sampled => {
                let points = prm.points.as_ref().ok_or_else(|| missing("points"))?;
                BoundarySpec::Sampled { points: points.iter().map(|(x, b)| (x * k, b * k)).collect() }
            }
            BoundaryKind::Analytic => {
                let shape = prm.shape.ok_or_else(|| missing("shape"))?;
                let amplitude = need(prm.amplitude, "amplitude")?;
                let length = need(prm.length, "length")? * k;
                match shape {
                    AnalyticShape::Sinusoid => BoundarySpec::Sinusoid { amplitude, length },
                    AnalyticShape::Bump => {
                        BoundarySpec::Bump { start: need(prm.start, "start")? * k, length, amplitude }
                    }
                }
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_default() {
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
    }

    #[test]
    fn kink_lengths_scale_with_dx() {
        let cfg =
            RunConfig::parse("[boundary]\nkind = \"kink\"\n[boundary.parameters]\nxi = 20\ndelta = 0.005\n").unwrap();
        assert_eq!(cfg.boundary_spec(0.5).unwrap(), BoundarySpec::Kink { xi: 10.0, delta: 0.005 });
    }

    #[test]
    fn hypotheses_are_named() {
        let e = RunConfig::parse("[boundary]\nb0 = 0.1\n").unwrap_err().to_string();
        assert!(e.contains("boundary.b0") && e.contains("H1"), "{e}");
        let e = RunConfig::parse("[gas]\nu_inf = 0.5\n").unwrap_err().to_string();
        assert!(e.contains("gas.u_inf") && e.contains("H2"), "{e}");
    }

    #[test]
    fn missing_parameter_names_its_path() {
        let e =
            RunConfig::parse("[boundary]\nkind = \"kink\"\n[boundary.parameters]\nxi = 3\n").unwrap_err().to_string();
        assert!(e.contains("boundary.parameters.delta"), "{e}");
    }
}
