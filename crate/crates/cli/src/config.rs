//! Experiment configuration: TOML, merged over per-scenario defaults,
//! unknown keys rejected.

use std::fmt;

use kronfilt::adaptive::{EngineConfig, ScalingFunction, Structure};
use kronfilt::analysis::{Algorithm, ComplexityQuery};
use kronfilt::anc::{AncScenario, SourceSpec};
use kronfilt::nkp::InitScheme;
use kronfilt::nonlinear::{FebSpec, NonlinearScenario};
use kronfilt::scenario::{AlgorithmSpec, NoiseSpec, SysIdScenario, SystemSpec};
use kronfilt::signalgen::{AlphaStableParams, ArModel, DistortionKind, DistortionModel};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::{Table, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Sysid,
    Echo,
    Nonlinear,
    Anc,
    Theory,
    Complexity,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Sysid => "sysid",
            ScenarioKind::Echo => "echo",
            ScenarioKind::Nonlinear => "nonlinear",
            ScenarioKind::Anc => "anc",
            ScenarioKind::Theory => "theory",
            ScenarioKind::Complexity => "complexity",
        }
    }

    /// Sections a config for this scenario may contain.
    fn sections(self) -> &'static [&'static str] {
        match self {
            ScenarioKind::Sysid | ScenarioKind::Echo => &["engine", "system", "input", "noise"],
            ScenarioKind::Nonlinear => &["engine", "nonlinear"],
            ScenarioKind::Anc => &["engine", "anc"],
            ScenarioKind::Theory => &["theory"],
            ScenarioKind::Complexity => &["complexity"],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterKind {
    Nkp,
    Nlms,
    Nsaf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algorithm: Option<FilterKind>,
    pub samples: usize,
    pub trials: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub engine: Option<EngineSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<InputSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonlinear: Option<NonlinearSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anc: Option<AncSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theory: Option<TheorySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub complexity: Option<ComplexitySection>,
}

/// Adaptive filter parameters. Baseline filters use `d1·d2` taps, `mu1`,
/// `bands` and `bank_len`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineSection {
    pub d1: usize,
    pub d2: usize,
    pub rank: usize,
    pub bands: usize,
    pub bank_len: usize,
    pub mu1: f64,
    pub mu2: f64,
    pub delta: f64,
    pub interval: usize,
    pub scaling: ScalingKind,
    /// ψ for MCC, β for LC; ignored without scaling.
    pub scaling_param: f64,
    pub structure: StructureKind,
    pub init: InitKind,
    pub lambda: f64,
    pub sequential_m1: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingKind {
    None,
    Mcc,
    Lc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructureKind {
    Type1,
    Type2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    Original,
    Yim,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSection {
    Sparse {
        length: usize,
        active_taps: usize,
        decay_rate: f64,
        /// Pins one response for all trials; drawn per trial when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    RandomKronecker {
        d1: usize,
        d2: usize,
        rank: usize,
    },
    Explicit {
        taps: Vec<f64>,
    },
}

/// AR excitation `x(n) = Σ a_i x(n-i) + stddev·w(n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSection {
    pub ar: Vec<f64>,
    pub stddev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSection {
    None,
    Gaussian { variance: f64 },
    AlphaStable { alpha: f64, gamma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistortionName {
    Identity,
    LoudspeakerSigmoid,
    SoftClip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpansionKind {
    Tfln,
    Volterra2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearSection {
    pub distortion: DistortionName,
    pub phi: f64,
    pub tau: f64,
    pub expansion: ExpansionKind,
    /// Trigonometric order `A` (TFLN only).
    pub order: usize,
    /// Memory length `B`.
    pub memory: usize,
    pub noise_variance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub post_fir: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AncSection {
    pub primary: Vec<f64>,
    pub secondary: Vec<f64>,
    pub secondary_estimate: Vec<f64>,
    pub source_ar: Vec<f64>,
    pub source_stddev: f64,
    /// Adds an α-stable stream to the reference when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub impulses: Option<ImpulseSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImpulseSection {
    pub alpha: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheorySection {
    pub mu1: f64,
    pub mu2: f64,
    pub noise_variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexitySection {
    pub d: u64,
    pub d1: u64,
    pub d2: u64,
    pub p: u64,
    pub n: u64,
    pub l: u64,
    pub k: u64,
}

/// Problems found while loading a config, one entry per field.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<String>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

fn one(msg: impl Into<String>) -> ConfigErrors {
    ConfigErrors(vec![msg.into()])
}

fn reference_engine() -> EngineSection {
    EngineSection {
        d1: 25,
        d2: 20,
        rank: 2,
        bands: 4,
        bank_len: 33,
        mu1: 0.03,
        mu2: 0.03,
        delta: 1e-6,
        interval: 4,
        scaling: ScalingKind::None,
        scaling_param: 1.0,
        structure: StructureKind::Type2,
        init: InitKind::Original,
        lambda: 0.01,
        sequential_m1: false,
    }
}

fn sparse_system() -> SystemSection {
    SystemSection::Sparse {
        length: 500,
        active_taps: 64,
        decay_rate: 0.1,
        seed: None,
    }
}

/// Built-in defaults of a scenario; every parameter is present.
pub fn defaults(scenario: ScenarioKind) -> ExperimentConfig {
    let base = ExperimentConfig {
        scenario,
        algorithm: None,
        samples: 0,
        trials: 1,
        seed: 1,
        engine: None,
        system: None,
        input: None,
        noise: None,
        nonlinear: None,
        anc: None,
        theory: None,
        complexity: None,
    };
    match scenario {
        ScenarioKind::Sysid => ExperimentConfig {
            algorithm: Some(FilterKind::Nkp),
            samples: 30_000,
            trials: 50,
            engine: Some(reference_engine()),
            system: Some(sparse_system()),
            input: Some(InputSection { ar: vec![], stddev: 1.0 }),
            noise: Some(NoiseSection::Gaussian { variance: 0.01 }),
            ..base
        },
        ScenarioKind::Echo => ExperimentConfig {
            algorithm: Some(FilterKind::Nkp),
            samples: 30_000,
            trials: 50,
            engine: Some(reference_engine()),
            system: Some(sparse_system()),
            input: Some(InputSection { ar: vec![0.9], stddev: 1.0 }),
            noise: Some(NoiseSection::Gaussian { variance: 0.001 }),
            ..base
        },
        ScenarioKind::Nonlinear => ExperimentConfig {
            samples: 20_000,
            trials: 20,
            engine: Some(EngineSection {
                d1: 10,
                d2: 5,
                mu1: 0.01,
                mu2: 0.01,
                lambda: 0.1,
                ..reference_engine()
            }),
            nonlinear: Some(NonlinearSection {
                distortion: DistortionName::LoudspeakerSigmoid,
                phi: 2.0,
                tau: 0.3,
                expansion: ExpansionKind::Tfln,
                order: 2,
                memory: 10,
                noise_variance: 1e-3,
                post_fir: None,
            }),
            ..base
        },
        ScenarioKind::Anc => ExperimentConfig {
            samples: 80_000,
            trials: 20,
            engine: Some(EngineSection {
                d1: 10,
                d2: 10,
                mu1: 0.01,
                mu2: 0.01,
                ..reference_engine()
            }),
            anc: Some(AncSection {
                primary: vec![0.0, 0.0, 0.0, 1.0, -0.3, 0.2],
                secondary: vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.5],
                secondary_estimate: vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.5],
                source_ar: vec![],
                source_stddev: 1.0,
                impulses: None,
            }),
            ..base
        },
        ScenarioKind::Theory => ExperimentConfig {
            theory: Some(TheorySection {
                mu1: 0.2,
                mu2: 0.2,
                noise_variance: 0.01,
            }),
            ..base
        },
        ScenarioKind::Complexity => ExperimentConfig {
            complexity: Some(ComplexitySection {
                d: 500,
                d1: 25,
                d2: 20,
                p: 2,
                n: 4,
                l: 33,
                k: 4,
            }),
            ..base
        },
    }
}

/// Overlays `user` on `base`. A table carrying a `kind` key replaces the
/// default wholesale, since its fields depend on the variant.
fn merge(base: &mut Table, user: Table) {
    for (key, value) in user {
        match (base.get_mut(&key), value) {
            (Some(Value::Table(b)), Value::Table(u)) if !u.contains_key("kind") => merge(b, u),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

impl ExperimentConfig {
    /// Parses `text`, fills in the scenario's defaults and validates.
    pub fn from_toml(text: &str) -> Result<Self, ConfigErrors> {
        let user: Table = text.parse().map_err(|e: toml::de::Error| one(format!("syntax: {}", e.message())))?;
        let scenario = match user.get("scenario") {
            Some(v) => v
                .clone()
                .try_into::<ScenarioKind>()
                .map_err(|_| one(format!("scenario: unknown scenario {v}")))?,
            None => return Err(one("scenario: missing")),
        };
        let allowed = scenario.sections();
        let stray: Vec<String> = user
            .iter()
            .filter(|(k, v)| v.is_table() && !allowed.contains(&k.as_str()))
            .map(|(k, _)| format!("{k}: section does not apply to scenario `{}`", scenario.name()))
            .collect();
        if !stray.is_empty() {
            return Err(ConfigErrors(stray));
        }
        let mut merged = match Value::try_from(defaults(scenario)) {
            Ok(Value::Table(t)) => t,
            _ => unreachable!("defaults serialize to a table"),
        };
        merge(&mut merged, user);
        let cfg: ExperimentConfig = Value::Table(merged)
            .try_into()
            .map_err(|e: toml::de::Error| one(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical TOML rendering, in hex.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_toml().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// Collects every field-level problem rather than stopping at the first.
    pub fn validate(&self) -> Result<(), ConfigErrors> {
        let mut errs = Vec::new();
        let mut check = |field: &str, r: Result<(), String>| {
            if let Err(e) = r {
                errs.push(format!("{field}: {e}"));
            }
        };
        let needs_run = !matches!(self.scenario, ScenarioKind::Theory | ScenarioKind::Complexity);
        if needs_run {
            check("samples", if self.samples > 0 { Ok(()) } else { Err("must be >= 1".into()) });
            check("trials", if self.trials > 0 { Ok(()) } else { Err("must be >= 1".into()) });
        }
        let missing = |name: &str| format!("{name}: section required for scenario `{}`", self.scenario.name());
        for &section in self.scenario.sections() {
            let present = match section {
                "engine" => self.engine.is_some(),
                "system" => self.system.is_some(),
                "input" => self.input.is_some(),
                "noise" => self.noise.is_some(),
                "nonlinear" => self.nonlinear.is_some(),
                "anc" => self.anc.is_some(),
                "theory" => self.theory.is_some(),
                _ => self.complexity.is_some(),
            };
            if !present {
                errs.push(missing(section));
            }
        }
        if !errs.is_empty() {
            return Err(ConfigErrors(errs));
        }
        let mut errs = Vec::new();
        let mut push = |field: &str, r: kronfilt::error::Result<()>| {
            if let Err(e) = r {
                errs.push(format!("{field}: {e}"));
            }
        };
        if let Some(e) = &self.engine {
            push("engine", e.to_config().and_then(|c| c.validate()));
        }
        if let Some(s) = &self.system {
            push("system", s.to_spec().map(|_| ()));
        }
        if let Some(i) = &self.input {
            push("input", i.to_model().map(|_| ()));
        }
        if let Some(n) = &self.noise {
            push("noise", n.to_spec().map(|_| ()));
        }
        if let Some(n) = &self.nonlinear {
            push("nonlinear", n.feb().map(|_| ()));
            push("nonlinear", n.scenario(self.samples).map(|_| ()));
        }
        if let Some(a) = &self.anc {
            push("anc", a.scenario().map(|_| ()));
        }
        if let Some(c) = &self.complexity {
            push("complexity", kronfilt::analysis::complexity(&c.query(Algorithm::Nlms)).map(|_| ()));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigErrors(errs))
        }
    }

    pub fn algorithm_spec(&self) -> kronfilt::error::Result<AlgorithmSpec> {
        let e = self.engine.as_ref().expect("validated");
        Ok(match self.algorithm.unwrap_or(FilterKind::Nkp) {
            FilterKind::Nkp => AlgorithmSpec::Nkp(e.to_config()?),
            FilterKind::Nlms => AlgorithmSpec::Nlms {
                len: e.d1 * e.d2,
                mu: e.mu1,
            },
            FilterKind::Nsaf => AlgorithmSpec::Nsaf {
                len: e.d1 * e.d2,
                mu: e.mu1,
                bands: e.bands,
                bank_len: e.bank_len,
            },
        })
    }

    pub fn sysid_scenario(&self) -> kronfilt::error::Result<SysIdScenario> {
        Ok(SysIdScenario {
            system: self.system.as_ref().expect("validated").to_spec()?,
            input: self.input.as_ref().expect("validated").to_model()?,
            noise: self.noise.as_ref().expect("validated").to_spec()?,
            samples: self.samples,
        })
    }
}

impl EngineSection {
    pub fn to_config(&self) -> kronfilt::error::Result<EngineConfig> {
        let scaling = match self.scaling {
            ScalingKind::None => ScalingFunction::None,
            ScalingKind::Mcc => ScalingFunction::mcc(self.scaling_param)?,
            ScalingKind::Lc => ScalingFunction::lc(self.scaling_param)?,
        };
        Ok(EngineConfig {
            d1: self.d1,
            d2: self.d2,
            rank: self.rank,
            bands: self.bands,
            bank_len: self.bank_len,
            mu1: self.mu1,
            mu2: self.mu2,
            delta: self.delta,
            interval: self.interval,
            scaling,
            structure: match self.structure {
                StructureKind::Type1 => Structure::TypeI,
                StructureKind::Type2 => Structure::TypeII,
            },
            init: match self.init {
                InitKind::Original => InitScheme::Original,
                InitKind::Yim => InitScheme::Yim,
            },
            lambda: self.lambda,
            sequential_m1: self.sequential_m1,
        })
    }
}

impl SystemSection {
    pub fn to_spec(&self) -> kronfilt::error::Result<SystemSpec> {
        let spec = match self {
            SystemSection::Sparse {
                length,
                active_taps,
                decay_rate,
                seed,
            } => SystemSpec::Sparse {
                length: *length,
                active_taps: *active_taps,
                decay_rate: *decay_rate,
                seed: *seed,
            },
            SystemSection::RandomKronecker { d1, d2, rank } => SystemSpec::RandomKronecker {
                d1: *d1,
                d2: *d2,
                rank: *rank,
            },
            SystemSection::Explicit { taps } => SystemSpec::Explicit(taps.clone()),
        };
        spec.generate(kronfilt::rng::Seed::new(0))?;
        Ok(spec)
    }
}

impl InputSection {
    pub fn to_model(&self) -> kronfilt::error::Result<ArModel> {
        ArModel::new(self.ar.clone(), self.stddev)
    }
}

impl NoiseSection {
    pub fn to_spec(&self) -> kronfilt::error::Result<NoiseSpec> {
        Ok(match *self {
            NoiseSection::None => NoiseSpec::None,
            NoiseSection::Gaussian { variance } => {
                kronfilt::signalgen::gen_gaussian(variance, 0, 0)?;
                NoiseSpec::Gaussian { variance }
            }
            NoiseSection::AlphaStable { alpha, gamma } => NoiseSpec::AlphaStable(AlphaStableParams::new(alpha, gamma)?),
        })
    }
}

impl NonlinearSection {
    pub fn feb(&self) -> kronfilt::error::Result<FebSpec> {
        match self.expansion {
            ExpansionKind::Tfln => FebSpec::tfln(self.order, self.memory),
            ExpansionKind::Volterra2 => FebSpec::volterra2(self.memory),
        }
    }

    pub fn scenario(&self, samples: usize) -> kronfilt::error::Result<NonlinearScenario> {
        let kind = match self.distortion {
            DistortionName::Identity => DistortionKind::Identity,
            DistortionName::LoudspeakerSigmoid => DistortionKind::LoudspeakerSigmoid,
            DistortionName::SoftClip => DistortionKind::SoftClip,
        };
        kronfilt::signalgen::gen_gaussian(self.noise_variance, 0, 0)?;
        if let Some(f) = &self.post_fir {
            kronfilt::signalgen::Fir::new(f.clone())?;
        }
        Ok(NonlinearScenario {
            distortion: DistortionModel::new(kind, self.phi, self.tau)?,
            noise_variance: self.noise_variance,
            samples,
            post_fir: self.post_fir.clone(),
        })
    }
}

impl AncSection {
    pub fn scenario(&self) -> kronfilt::error::Result<AncScenario> {
        let base = ArModel::new(self.source_ar.clone(), self.source_stddev)?;
        let source = match &self.impulses {
            None => SourceSpec::Ar(base),
            Some(i) => SourceSpec::Contaminated {
                base,
                impulses: AlphaStableParams::new(i.alpha, i.gamma)?,
            },
        };
        let s = AncScenario {
            primary_ir: self.primary.clone(),
            secondary_ir: self.secondary.clone(),
            secondary_estimate_ir: self.secondary_estimate.clone(),
            source,
        };
        s.validate()?;
        Ok(s)
    }
}

impl ComplexitySection {
    pub fn query(&self, algorithm: Algorithm) -> ComplexityQuery {
        ComplexityQuery {
            algorithm,
            d: self.d,
            d1: self.d1,
            d2: self.d2,
            p: self.p,
            n: self.n,
            l: self.l,
            k: self.k,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        for s in [
            ScenarioKind::Sysid,
            ScenarioKind::Echo,
            ScenarioKind::Nonlinear,
            ScenarioKind::Anc,
            ScenarioKind::Theory,
            ScenarioKind::Complexity,
        ] {
            let d = defaults(s);
            assert_eq!(ExperimentConfig::from_toml(&d.to_toml()).unwrap(), d);
            let minimal = format!("scenario = \"{}\"\n", s.name());
            assert_eq!(ExperimentConfig::from_toml(&minimal).unwrap(), d);
        }
    }

    #[test]
    fn variant_tables_replace_defaults() {
        let cfg = ExperimentConfig::from_toml(
            "scenario = \"sysid\"\n[system]\nkind = \"random_kronecker\"\nd1 = 4\nd2 = 3\nrank = 1\n[engine]\nd1 = 4\nd2 = 3\n",
        )
        .unwrap();
        assert_eq!(cfg.system, Some(SystemSection::RandomKronecker { d1: 4, d2: 3, rank: 1 }));
        assert_eq!(cfg.engine.as_ref().unwrap().rank, 2);
    }

    #[test]
    fn errors_are_listed_per_field() {
        let e = ExperimentConfig::from_toml("scenario = \"sysid\"\n[engine]\nrank = 0\n[input]\nar = [1.5]\n").unwrap_err();
        assert_eq!(e.0.len(), 2, "{e}");
        assert!(e.0[0].starts_with("engine:") && e.0[1].starts_with("input:"));
        let e = ExperimentConfig::from_toml("scenario = \"theory\"\n[engine]\nd1 = 3\n").unwrap_err();
        assert!(e.0[0].contains("does not apply"));
        assert!(ExperimentConfig::from_toml("scenario = \"sysid\"\n[engine]\nmu3 = 1.0\n").is_err());
        assert!(ExperimentConfig::from_toml("scenario = \"plot\"\n").is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = defaults(ScenarioKind::Sysid);
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.seed += 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
