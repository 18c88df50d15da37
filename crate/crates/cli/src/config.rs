//! Run configuration: presets, a flat TOML file and command-line flags, merged in
//! that order of increasing precedence.

use anisoweight::ineq::TestFunction;
use anisoweight::plap::BoundaryDatum;
use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Every key is optional; absent keys take the subcommand's default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subcommand: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_tilde: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Quadrature relative tolerance.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    /// Ball family size, or number of test functions.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub num_radii: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub half: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_scaling: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grading: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    /// Uniform halvings of `h`; `solve` uses the finest mesh.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refinements: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f0: Option<TestFunction>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f1: Option<TestFunction>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi0: Option<BoundaryDatum>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub holder: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field_out: Option<PathBuf>,
    /// Turn a negative verdict into exit code 1.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub require: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident; $($f:ident),*) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f; } )*
    };
}

impl RunConfig {
    /// Keys set in `top` replace those in `self`.
    pub fn overlay(mut self, top: RunConfig) -> RunConfig {
        overlay!(self, top; subcommand, preset, theta, n, p, q, p0, m, p_tilde, seed, tol, count, r_min,
            r_max, num_radii, levels, radius, half, fit_scaling, h, grading, depth, refinements, solver_tol,
            f0, f1, phi0, fit_min, fit_max, holder, pairs, field, field_out, require, out, format);
        self
    }

    pub fn from_toml(text: &str) -> Result<RunConfig, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn preset(name: &str) -> Result<RunConfig, CliError> {
        match name {
            // u* = x_n(1 − |x|²)
            "manufactured-p2" => Ok(RunConfig {
                preset: Some(name.into()),
                theta: Some([0.0; 3]),
                n: Some(2),
                p: Some(2.0),
                f0: Some(TestFunction::affine(vec![0.0, 8.0], 0.0)),
                phi0: Some(BoundaryDatum::Zero),
                h: Some(0.125),
                grading: Some(1.0),
                depth: Some(0),
                refinements: Some(3),
                ..Default::default()
            }),
            // u ≈ r^{√2−1} sin φ
            "decay-x2" => Ok(RunConfig {
                preset: Some(name.into()),
                theta: Some([0.0, 2.0, 0.0]),
                n: Some(2),
                p: Some(2.0),
                phi0: Some(BoundaryDatum::Sine { mode: 1, amplitude: 1.0 }),
                h: Some(0.005),
                grading: Some(3.0),
                depth: Some(6),
                fit_min: Some(1e-3),
                fit_max: Some(0.1),
                ..Default::default()
            }),
            "witness-doubling" => Ok(RunConfig {
                preset: Some(name.into()),
                theta: Some([0.0, 5.0, 0.0]),
                n: Some(2),
                p: Some(2.0),
                ..Default::default()
            }),
            _ => Err(CliError::Usage(format!(
                "unknown preset {name:?} (manufactured-p2, decay-x2, witness-doubling)"
            ))),
        }
    }

    pub fn theta(&self) -> Result<[f64; 3], CliError> {
        self.theta.ok_or_else(|| missing("theta"))
    }

    pub fn n(&self) -> Result<usize, CliError> {
        self.n.ok_or_else(|| missing("n"))
    }

    pub fn p(&self) -> Result<f64, CliError> {
        self.p.ok_or_else(|| missing("p"))
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or(Format::Json)
    }
}

fn missing(key: &str) -> CliError {
    CliError::Usage(format!("missing required --{} (or `{key}` in the config file)", key.replace('_', "-")))
}

/// `a,b,c`
pub fn parse_theta(s: &str) -> Result<[f64; 3], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<_, _>>()?;
    v.try_into().map_err(|v: Vec<f64>| format!("expected three components, got {}", v.len()))
}

/// `zero`, `const:V`, `sine:K[:A]`, or a JSON object.
pub fn parse_phi0(s: &str) -> Result<BoundaryDatum, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |t: &str| t.parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    match parts.as_slice() {
        ["zero"] => Ok(BoundaryDatum::Zero),
        ["const", v] => Ok(BoundaryDatum::Constant { value: num(v)? }),
        ["sine", k] | ["sine", k, _] => {
            let mode = k.parse::<u32>().map_err(|e| format!("{k:?}: {e}"))?;
            let amplitude = if parts.len() == 3 { num(parts[2])? } else { 1.0 };
            Ok(BoundaryDatum::Sine { mode, amplitude })
        }
        _ => serde_json::from_str(s).map_err(|e| format!("boundary datum: {e}")),
    }
}

pub fn parse_function(s: &str) -> Result<TestFunction, String> {
    serde_json::from_str(s).map_err(|e| format!("test function: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let c = RunConfig::preset("manufactured-p2").unwrap().overlay(RunConfig {
            subcommand: Some("solve".into()),
            seed: Some(7),
            format: Some(Format::Csv),
            phi0: Some(BoundaryDatum::Table {
                phi: vec![0.0, 1.0],
                values: vec![0.25, -1.5e-7],
            }),
            out: Some("a/b.csv".into()),
            ..Default::default()
        });
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn overlay_prefers_top() {
        let base = RunConfig {
            n: Some(2),
            p: Some(2.0),
            ..Default::default()
        };
        let top = RunConfig {
            n: Some(3),
            ..Default::default()
        };
        let c = base.overlay(top);
        assert_eq!((c.n, c.p), (Some(3), Some(2.0)));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml("n = 2\nbogus = 1\n").is_err());
    }

    #[test]
    fn parses_flag_values() {
        assert_eq!(parse_theta("0, 5,0").unwrap(), [0.0, 5.0, 0.0]);
        assert!(parse_theta("1,2").is_err());
        assert_eq!(parse_phi0("sine:2:0.5").unwrap(), BoundaryDatum::Sine { mode: 2, amplitude: 0.5 });
        assert_eq!(parse_phi0("const:-1").unwrap(), BoundaryDatum::Constant { value: -1.0 });
        assert_eq!(parse_phi0(r#"{"kind":"zero"}"#).unwrap(), BoundaryDatum::Zero);
        assert!(parse_phi0("cosine:1").is_err());
        assert!(parse_function(r#"{"kind":"affine","slope":[0,8],"offset":0}"#).is_ok());
    }
}
