//! Run configuration: a TOML file with every key optional, overlaid by flags.

use serde::{Deserialize, Serialize};

use catsim::quadrature::Rule;
use catsim::reduction::{self, QuadratureSpec};
use catsim::{CatSpec, ModelParams};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelSection,
    pub times: TimeSection,
    pub quadrature: QuadratureSection,
    pub thresholds: ThresholdSection,
    pub classical: ClassicalSection,
    pub oracle: OracleSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub m: f64,
    pub hbar: f64,
    pub omega12: f64,
    pub omega13: f64,
    pub omega23: f64,
    /// Second-packet offsets `d₁, d₂, d₃`.
    pub d: [f64; 3],
    pub sigma: [f64; 3],
}

impl Default for ModelSection {
    fn default() -> Self {
        let p = ModelParams::paper();
        Self {
            m: p.m,
            hbar: p.hbar,
            omega12: p.omega12,
            omega13: p.omega13,
            omega23: p.omega23,
            d: p.offsets(),
            sigma: p.sigmas(),
        }
    }
}

impl ModelSection {
    pub fn params(&self) -> ModelParams {
        ModelParams {
            m: self.m,
            omega12: self.omega12,
            omega13: self.omega13,
            omega23: self.omega23,
            hbar: self.hbar,
            cats: std::array::from_fn(|i| CatSpec::new(self.d[i], self.sigma[i])),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSection {
    /// Report series `start, start + step, …, end`.
    pub start: f64,
    pub end: f64,
    pub step: f64,
    /// Profile times for `reduce`.
    pub profiles: Vec<f64>,
}

impl Default for TimeSection {
    fn default() -> Self {
        Self {
            start: 0.005,
            end: 10.505,
            step: 0.05,
            profiles: vec![2.005, 3.005, 3.505, 4.005, 5.005, 5.505, 6.005, 10.005],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleName {
    Trapezoid,
    GaussLegendre,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSection {
    /// Nodes per integrated axis for single profiles.
    pub points: usize,
    /// Nodes per axis of the three-axis evaluation behind `report`.
    pub report_points: usize,
    pub output_points: usize,
    /// Box half-width; absent means the adaptive extent rule.
    pub extent: Option<f64>,
    pub rule: RuleName,
    pub panels: usize,
    pub upsample: usize,
    /// Step-halving check at every n-th report time (0 disables).
    pub convergence_stride: usize,
}

impl Default for QuadratureSection {
    fn default() -> Self {
        Self {
            points: reduction::DEFAULT_POINTS,
            report_points: 96,
            output_points: reduction::DEFAULT_OUTPUT_POINTS,
            extent: None,
            rule: RuleName::Trapezoid,
            panels: 8,
            upsample: reduction::DEFAULT_UPSAMPLE,
            convergence_stride: 10,
        }
    }
}

impl QuadratureSection {
    fn rule(&self) -> Rule {
        match self.rule {
            RuleName::Trapezoid => Rule::Trapezoid,
            RuleName::GaussLegendre => Rule::GaussLegendre { panels: self.panels },
        }
    }

    pub fn profile_spec(&self) -> QuadratureSpec {
        QuadratureSpec { extent: self.extent, points: self.points, rule: self.rule() }
    }

    pub fn report_spec(&self) -> QuadratureSpec {
        QuadratureSpec { extent: self.extent, points: self.report_points, rule: self.rule() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThresholdSection {
    pub theta_dec: f64,
    pub hold: f64,
}

impl Default for ThresholdSection {
    fn default() -> Self {
        Self { theta_dec: reduction::THETA_DEC, hold: reduction::HOLD }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassicalSection {
    pub dt: f64,
    pub tmax: f64,
}

impl Default for ClassicalSection {
    fn default() -> Self {
        Self { dt: catsim::classical::DEFAULT_DT, tmax: 12.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSection {
    pub grid_points: usize,
    pub grid_dt: f64,
    pub grid_times: Vec<f64>,
    pub grid_quadrature_points: usize,
    pub convolve_points: usize,
    pub convolve_sigmas: f64,
    pub convolve_times: Vec<f64>,
    pub random_points: usize,
    pub seed: u64,
    pub rk4_step: f64,
    pub rk4_tmax: f64,
    pub short_time: f64,
}

impl Default for OracleSection {
    fn default() -> Self {
        Self {
            grid_points: 128,
            grid_dt: 0.005,
            grid_times: vec![1.0, 3.0],
            grid_quadrature_points: 128,
            convolve_points: 128,
            convolve_sigmas: 10.0,
            convolve_times: vec![0.5, 3.005],
            random_points: 20,
            seed: 7,
            rk4_step: 1e-4,
            rk4_tmax: 10.0,
            short_time: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: String,
    pub emit_svg: bool,
    pub run_oracle: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: "out".into(), emit_svg: false, run_oracle: false }
    }
}

pub fn parse(text: &str) -> Result<RunConfig, String> {
    toml::from_str(text).map_err(|e| e.to_string())
}

pub fn render(cfg: &RunConfig) -> String {
    toml::to_string(cfg).expect("config always serialises")
}

/// `a,b,c` or `start:end:step`.
pub fn parse_times(spec: &str) -> Result<Vec<f64>, String> {
    let spec = spec.trim();
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("time range must be start:end:step, got '{spec}'"));
        }
        let v: Vec<f64> = parts
            .iter()
            .map(|p| p.trim().parse::<f64>().map_err(|e| format!("bad number '{p}': {e}")))
            .collect::<Result<_, _>>()?;
        if !(v[2] > 0.0) || v[1] < v[0] {
            return Err(format!("time range needs step > 0 and end >= start, got '{spec}'"));
        }
        Ok(catsim::reduction::time_range(v[0], v[1], v[2]))
    } else {
        spec.split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|e| format!("bad time '{p}': {e}")))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        assert_eq!(parse(&render(&cfg)).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(parse("[model]\nmass = 2.0\n").is_err());
        assert!(parse("[nonsense]\n").is_err());
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg = parse("[model]\nomega12 = 0.4\n").unwrap();
        assert_eq!(cfg.model.omega12, 0.4);
        assert_eq!(cfg.model.omega13, 0.1);
    }

    #[test]
    fn time_specs() {
        assert_eq!(parse_times("1, 2.5,3").unwrap(), vec![1.0, 2.5, 3.0]);
        assert_eq!(parse_times("0:1:0.5").unwrap(), vec![0.0, 0.5, 1.0]);
        assert!(parse_times("1:0:0.5").is_err());
        assert!(parse_times("x").is_err());
    }
}
