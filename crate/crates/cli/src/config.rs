use serde::{Deserialize, Serialize};

use scatmap::exprs::parse;
use scatmap::flow::SeparatrixMode;
use scatmap::geometry::GeometryConfig;
use scatmap::hamgen::GeneratingConfig;
use scatmap::melnikov::QuadConfig;
use scatmap::model::{hamiltonian_to_field, Pendulum, PotentialSpec, RotatorSpec, Sign};
use scatmap::verify::{GronwallConfig, SuiteConfig, TEST_HAMILTONIAN};
use scatmap::{ExtendedState, PerturbationField, SystemSpec};

/// Errors in the configuration, as opposed to numerical failures.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "configuration error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_err(e: impl std::fmt::Display) -> anyhow::Error {
    ConfigError(e.to_string()).into()
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub system: SystemConfig,
    pub perturbation: PerturbationConfig,
    pub numeric: NumericConfig,
    pub experiment: ExperimentConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub n: usize,
    pub d: usize,
    /// `h0(I) = linear . I + I . quadratic . I / 2 (+ cubic / 6)`; the
    /// defaults are `0` and the identity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadratic: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cubic: Option<Vec<f64>>,
    /// Defaults to `n` builtin-cosine pendula with sign `+1`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pendulum: Vec<PendulumConfig>,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            n: 1,
            d: 1,
            linear: None,
            quadratic: None,
            cubic: None,
            pendulum: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PendulumConfig {
    #[serde(default = "builtin_cosine")]
    pub potential: PotentialSpec,
    /// `+1` or `-1`.
    #[serde(default = "plus_one")]
    pub sign: f64,
}

fn builtin_cosine() -> PotentialSpec {
    PotentialSpec::BuiltinCosine
}

fn plus_one() -> f64 {
    1.0
}

impl Default for PendulumConfig {
    fn default() -> Self {
        Self {
            potential: PotentialSpec::BuiltinCosine,
            sign: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerturbationMode {
    #[default]
    Hamiltonian,
    Direct,
    Dissipation,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PerturbationConfig {
    pub mode: PerturbationMode,
    /// `H1` for the Hamiltonian mode.
    pub hamiltonian: Option<String>,
    /// `(dp, dq, dI, dtheta)` component expressions for the direct mode.
    pub components: Option<Vec<String>>,
    pub pendulum_rate: f64,
    pub action_rate: f64,
    /// Declared bound of `|X1|`.
    pub c1: Option<f64>,
    pub eps_max: Option<f64>,
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        Self {
            mode: PerturbationMode::Hamiltonian,
            hamiltonian: Some(TEST_HAMILTONIAN.into()),
            components: None,
            pendulum_rate: 1.0,
            action_rate: 1.0,
            c1: None,
            eps_max: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeparatrixChoice {
    #[default]
    Auto,
    Numeric,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericConfig {
    pub separatrix: SeparatrixChoice,
    pub quad: QuadConfig,
    pub geometry: GeometryConfig,
    pub generating: GeneratingConfig,
    pub suite: SuiteConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sample {
    pub action: Vec<f64>,
    pub angle: Vec<f64>,
    #[serde(default)]
    pub t: f64,
    /// Separatrix times of the homoclinic point, or the guess for them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub action: Vec<f64>,
    pub angle: Vec<f64>,
    #[serde(default)]
    pub t: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub eps: Vec<f64>,
    pub samples: Vec<Sample>,
    /// Refine each sample's `tau` to the zero of the splitting integral.
    pub locate_zero: bool,
    pub gronwall: GronwallConfig,
    pub gronwall_start: InitialState,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            eps: vec![1e-2, 3e-3, 1e-3, 3e-4],
            samples: vec![Sample {
                action: vec![0.3],
                angle: vec![0.1],
                t: 0.2,
                tau: Some(vec![0.0]),
            }],
            locate_zero: true,
            gronwall: GronwallConfig::default(),
            gronwall_start: InitialState {
                p: vec![0.1],
                q: vec![0.3],
                action: vec![0.4],
                angle: vec![0.0],
                t: 0.0,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: String,
    pub format: Format,
    /// Also write a gnuplot script next to convergence tables.
    pub gnuplot: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: "scatmap-out".into(),
            format: Format::Csv,
            gnuplot: false,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        toml::from_str(text).map_err(config_err)
    }

    pub fn load(path: &std::path::Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    fn rotator(&self) -> anyhow::Result<RotatorSpec> {
        let s = &self.system;
        let linear = s.linear.clone().unwrap_or_else(|| vec![0.0; s.d]);
        if linear.len() != s.d {
            return Err(config_err(format!(
                "system.linear has {} entries, d = {}",
                linear.len(),
                s.d
            )));
        }
        let quadratic = s.quadratic.clone().unwrap_or_else(|| {
            (0..s.d)
                .map(|i| (0..s.d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect()
        });
        RotatorSpec::new(linear, quadratic, s.cubic.clone()).map_err(config_err)
    }

    fn pendula(&self) -> anyhow::Result<Vec<Pendulum>> {
        let s = &self.system;
        if s.pendulum.is_empty() {
            return Ok(vec![Pendulum::cosine(Sign::Plus); s.n]);
        }
        if s.pendulum.len() != s.n {
            return Err(config_err(format!(
                "system.pendulum has {} entries, n = {}",
                s.pendulum.len(),
                s.n
            )));
        }
        s.pendulum
            .iter()
            .map(|p| {
                Ok(Pendulum::new(
                    p.potential.clone(),
                    Sign::from_value(p.sign).map_err(config_err)?,
                ))
            })
            .collect()
    }

    /// The validated system.
    pub fn system(&self) -> anyhow::Result<SystemSpec> {
        SystemSpec::new(self.rotator()?, self.pendula()?).map_err(config_err)
    }

    /// The system without potential validation, for negative controls.
    pub fn system_unchecked(&self) -> anyhow::Result<SystemSpec> {
        SystemSpec::new_unchecked(self.rotator()?, self.pendula()?).map_err(config_err)
    }

    pub fn field(&self, spec: &SystemSpec) -> anyhow::Result<PerturbationField> {
        let p = &self.perturbation;
        let layout = spec.layout();
        let mut field = match p.mode {
            PerturbationMode::Hamiltonian => {
                let src = p.hamiltonian.as_deref().ok_or_else(|| {
                    config_err("perturbation.hamiltonian is required in hamiltonian mode")
                })?;
                let h1 = parse(src, layout).map_err(config_err)?;
                hamiltonian_to_field(spec, &h1).map_err(config_err)?
            }
            PerturbationMode::Direct => {
                let srcs = p.components.as_ref().ok_or_else(|| {
                    config_err("perturbation.components is required in direct mode")
                })?;
                let exprs = srcs
                    .iter()
                    .map(|s| parse(s, layout).map_err(config_err))
                    .collect::<anyhow::Result<Vec<_>>>()?;
                PerturbationField::direct(layout, &exprs).map_err(config_err)?
            }
            PerturbationMode::Dissipation => {
                PerturbationField::dissipation(spec.n(), spec.d(), p.pendulum_rate, p.action_rate)
            }
        };
        if let Some(c1) = p.c1 {
            field = field.with_c1(c1);
        }
        if let Some(m) = p.eps_max {
            field = field.with_eps_max(m);
        }
        Ok(field)
    }

    pub fn separatrix_mode(&self) -> SeparatrixMode {
        match self.numeric.separatrix {
            SeparatrixChoice::Auto => SeparatrixMode::Auto,
            SeparatrixChoice::Numeric => SeparatrixMode::ForceNumeric,
        }
    }

    pub fn check_samples(&self, spec: &SystemSpec) -> anyhow::Result<()> {
        for (k, s) in self.experiment.samples.iter().enumerate() {
            if s.action.len() != spec.d() || s.angle.len() != spec.d() {
                return Err(config_err(format!(
                    "experiment.samples[{k}] needs {} actions and angles",
                    spec.d()
                )));
            }
            if let Some(t) = &s.tau {
                if t.len() != spec.n() {
                    return Err(config_err(format!(
                        "experiment.samples[{k}].tau needs {} entries",
                        spec.n()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn gronwall_start(&self, spec: &SystemSpec) -> anyhow::Result<ExtendedState> {
        let s = &self.experiment.gronwall_start;
        let z = ExtendedState::new(&s.p, &s.q, &s.action, &s.angle, s.t).map_err(config_err)?;
        spec.check_state(&z).map_err(config_err)?;
        Ok(z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_survive_a_toml_round_trip() {
        let cfg = RunConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        let back = RunConfig::from_toml(&text).unwrap();
        assert_eq!(
            serde_json::to_value(&back).unwrap(),
            serde_json::to_value(&cfg).unwrap()
        );
    }

    #[test]
    fn empty_file_is_the_default_experiment() {
        let cfg = RunConfig::from_toml("").unwrap();
        let spec = cfg.system().unwrap();
        assert_eq!((spec.n(), spec.d()), (1, 1));
        assert!(cfg.field(&spec).unwrap().hamiltonian().is_some());
        cfg.check_samples(&spec).unwrap();
    }

    #[test]
    fn mismatched_dimensions_are_config_errors() {
        let cfg = RunConfig::from_toml("[system]\nn = 2\nd = 1\n[[system.pendulum]]\nsign = 1\n")
            .unwrap();
        let e = cfg.system().unwrap_err();
        assert!(e.downcast_ref::<ConfigError>().is_some());
        let cfg = RunConfig::from_toml("[system]\nn = 1\nd = 2\n").unwrap();
        let spec = cfg.system().unwrap();
        assert!(cfg.check_samples(&spec).is_err());
        let bad_sign =
            RunConfig::from_toml("[system]\nn = 1\nd = 1\n[[system.pendulum]]\nsign = 0.5\n")
                .unwrap();
        assert!(bad_sign.system().is_err());
    }

    #[test]
    fn direct_mode_needs_every_component() {
        let cfg = RunConfig::from_toml(
            "[perturbation]\nmode = \"direct\"\ncomponents = [\"0\", \"0\"]\n",
        )
        .unwrap();
        let spec = cfg.system().unwrap();
        assert!(cfg.field(&spec).is_err());
        let cfg = RunConfig::from_toml(
            "[perturbation]\nmode = \"direct\"\ncomponents = [\"-p\", \"0\", \"0\", \"0\"]\n",
        )
        .unwrap();
        assert!(cfg.field(&spec).unwrap().hamiltonian().is_none());
    }
}
