//! Scenario files: a TOML dialect with explicit units (`_mw`, `_mj`, `_s`
//! suffixes) converted to SI at parse time. Unknown keys are rejected so a
//! typo cannot silently change a run.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use ems_core::domain::{EssKind, EssSpec, GeneratorSpec, LoadSpec, ScenarioTrace, SystemSpec};
use ems_core::formulation::ObjectiveWeights;
use ems_core::scheduler::Event;

const MW: f64 = 1e6;
const MJ: f64 = 1e6;

/// Parse/validation failure; `field` names the offending entry.
#[derive(Debug)]
pub struct ScenarioError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl std::error::Error for ScenarioError {}

fn err<T>(field: impl Into<String>, message: impl Into<String>) -> Result<T, ScenarioError> {
    Err(ScenarioError { field: field.into(), message: message.into() })
}

/// The file schema, one-to-one with the TOML structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub system: SystemBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<RhoBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<WeightsBlock>,
    #[serde(default, rename = "generator", skip_serializing_if = "Vec::is_empty")]
    pub generators: Vec<GeneratorBlock>,
    #[serde(default, rename = "ess", skip_serializing_if = "Vec::is_empty")]
    pub ess: Vec<EssBlock>,
    #[serde(default, rename = "load", skip_serializing_if = "Vec::is_empty")]
    pub loads: Vec<LoadBlock>,
    #[serde(default, rename = "event", skip_serializing_if = "Vec::is_empty")]
    pub events: Vec<EventBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemBlock {
    /// Spinning-reserve factor in (0, 1].
    pub beta: f64,
    /// Control sampling interval, seconds.
    pub dt_s: f64,
    /// Mission duration, seconds (steps = mission_s / dt_s).
    pub mission_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RhoBlock {
    /// Horizon length in steps.
    pub np: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsBlock {
    pub omega1: f64,
    pub omega2: f64,
    pub omega3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorBlock {
    pub p_min_mw: f64,
    pub p_max_mw: f64,
    pub ramp_min_mw_per_s: f64,
    pub ramp_max_mw_per_s: f64,
    #[serde(default)]
    pub p_init_mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EssBlock {
    pub kind: EssKindField,
    pub p_min_mw: f64,
    pub p_max_mw: f64,
    pub ramp_min_mw_per_s: f64,
    pub ramp_max_mw_per_s: f64,
    pub energy_mj: f64,
    pub soc_min: f64,
    pub soc_max: f64,
    pub soc_init: f64,
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(default)]
    pub p_init_mw: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EssKindField {
    Bess,
    Scess,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadBlock {
    pub weight: f64,
    pub rated_mw: f64,
    #[serde(default)]
    pub discrete: bool,
    /// Command steps for a discrete load (delta_o = 1/granularity).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub granularity: Option<u32>,
    pub profile: ProfileBlock,
}

/// Exactly one of the three forms must be present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant_mw: Option<f64>,
    /// One commanded power per mission step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps_mw: Option<Vec<f64>>,
    /// Piecewise-constant segments, each holding until its end time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segments: Option<Vec<SegmentBlock>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentBlock {
    pub until_s: f64,
    pub mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventBlock {
    pub kind: EventKindField,
    pub at_s: f64,
    /// Generator index for a trip event.
    pub generator: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKindField {
    GeneratorTrip,
}

/// A fully resolved scenario, ready to run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub system: SystemSpec,
    pub trace: ScenarioTrace,
    pub weights: ObjectiveWeights,
    /// Horizon from the file's `[rho]` block, when present.
    pub np: Option<usize>,
    pub events: Vec<Event>,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<ScenarioFile, ScenarioError> {
        toml::from_str(text).map_err(|e| ScenarioError {
            field: "file".into(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<ScenarioFile, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|e| ScenarioError {
            field: "file".into(),
            message: format!("{}: {e}", path.display()),
        })?;
        ScenarioFile::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serialization cannot fail")
    }

    /// Resolve units, profiles and invariants into a runnable scenario.
    /// `dt_override`/`np_override` come from the command line.
    pub fn resolve(
        &self,
        dt_override: Option<f64>,
        np_override: Option<usize>,
    ) -> Result<Scenario, ScenarioError> {
        let dt = dt_override.unwrap_or(self.system.dt_s);
        if !(dt > 0.0) {
            return err("system.dt_s", format!("must be > 0, got {dt}"));
        }
        let steps_f = self.system.mission_s / dt;
        let mission_steps = steps_f.round() as usize;
        if mission_steps < 1 {
            return err(
                "system.mission_s",
                format!("{} s at dt {} s gives no steps", self.system.mission_s, dt),
            );
        }
        if (steps_f - mission_steps as f64).abs() > 1e-9 * steps_f.max(1.0) {
            return err(
                "system.mission_s",
                format!("{} s is not a whole number of {dt} s steps", self.system.mission_s),
            );
        }

        let mut loads = Vec::with_capacity(self.loads.len());
        for (i, block) in self.loads.iter().enumerate() {
            let field = |name: &str| format!("load[{i}].{name}");
            let granularity_n = match (block.discrete, block.granularity) {
                (true, Some(n)) if n >= 1 => n,
                (true, Some(_)) => return err(field("granularity"), "must be >= 1"),
                (true, None) => return err(field("granularity"), "required for a discrete load"),
                (false, Some(_)) => {
                    return err(field("granularity"), "only meaningful for a discrete load")
                }
                (false, None) => 1,
            };
            let profile = block.profile.resolve(&field("profile"), mission_steps, dt)?;
            loads.push(LoadSpec {
                id: i,
                weight_w: block.weight,
                rated_power: block.rated_mw * MW,
                discrete: block.discrete,
                granularity_n,
                profile,
            });
        }

        let generators = self
            .generators
            .iter()
            .enumerate()
            .map(|(g, b)| GeneratorSpec {
                id: g,
                p_min: b.p_min_mw * MW,
                p_max: b.p_max_mw * MW,
                ramp_min: b.ramp_min_mw_per_s * MW,
                ramp_max: b.ramp_max_mw_per_s * MW,
                p_init: b.p_init_mw * MW,
            })
            .collect();

        let ess = self
            .ess
            .iter()
            .enumerate()
            .map(|(e, b)| EssSpec {
                id: e,
                kind: match b.kind {
                    EssKindField::Bess => EssKind::Bess,
                    EssKindField::Scess => EssKind::Scess,
                },
                p_min: b.p_min_mw * MW,
                p_max: b.p_max_mw * MW,
                ramp_min: b.ramp_min_mw_per_s * MW,
                ramp_max: b.ramp_max_mw_per_s * MW,
                energy_capacity: b.energy_mj * MJ,
                soc_min: b.soc_min,
                soc_max: b.soc_max,
                alpha: b.alpha,
                soc_init: b.soc_init,
                p_init: b.p_init_mw * MW,
            })
            .collect();

        let system = SystemSpec {
            loads,
            generators,
            ess,
            beta: self.system.beta,
            dt,
            mission_steps,
        };
        system.validate().map_err(|e| ScenarioError { field: e.field, message: e.message })?;

        let weights = match &self.weights {
            Some(w) => ObjectiveWeights::new(w.omega1, w.omega2, w.omega3),
            None => ObjectiveWeights::ZERO,
        };
        if !weights.is_valid() {
            return err("weights", format!("must be finite and >= 0, got {weights:?}"));
        }

        let mut events = Vec::with_capacity(self.events.len());
        for (k, ev) in self.events.iter().enumerate() {
            let field = |name: &str| format!("event[{k}].{name}");
            if ev.generator >= system.generators.len() {
                return err(field("generator"), format!("index {} out of range", ev.generator));
            }
            let at = ev.at_s / dt;
            if at < 0.0 {
                return err(field("at_s"), "must be >= 0");
            }
            events.push(match ev.kind {
                EventKindField::GeneratorTrip => Event::GeneratorTrip {
                    at_step: at.round() as usize,
                    generator: ev.generator,
                },
            });
        }

        if let Some(rho) = &self.rho {
            if rho.np < 1 {
                return err("rho.np", "must be >= 1");
            }
        }

        let trace = ScenarioTrace::from_system(&system);
        Ok(Scenario {
            system,
            trace,
            weights,
            np: np_override.or(self.rho.as_ref().map(|r| r.np)),
            events,
        })
    }
}

impl ProfileBlock {
    fn resolve(&self, field: &str, steps: usize, dt: f64) -> Result<Vec<f64>, ScenarioError> {
        let forms =
            self.constant_mw.is_some() as u8 + self.steps_mw.is_some() as u8 + self.segments.is_some() as u8;
        if forms != 1 {
            return err(
                field,
                "exactly one of constant_mw, steps_mw or segments is required",
            );
        }
        if let Some(c) = self.constant_mw {
            return Ok(vec![c * MW; steps]);
        }
        if let Some(series) = &self.steps_mw {
            if series.len() != steps {
                return err(
                    field,
                    format!("steps_mw has {} entries, mission needs {steps}", series.len()),
                );
            }
            return Ok(series.iter().map(|p| p * MW).collect());
        }
        let segments = self.segments.as_ref().unwrap();
        if segments.is_empty() {
            return err(field, "segments must not be empty");
        }
        for w in segments.windows(2) {
            if w[1].until_s <= w[0].until_s {
                return err(field, "segment end times must strictly increase");
            }
        }
        let mut out = Vec::with_capacity(steps);
        for t in 0..steps {
            let at = t as f64 * dt;
            let seg = segments.iter().find(|s| at < s.until_s).unwrap_or(segments.last().unwrap());
            out.push(seg.mw * MW);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
[system]
beta = 0.95
dt_s = 0.5
mission_s = 2.0

[weights]
omega1 = 0.005
omega2 = 0.03
omega3 = 0.05

[rho]
np = 2

[[generator]]
p_min_mw = 0.0
p_max_mw = 15.0
ramp_min_mw_per_s = -1.0
ramp_max_mw_per_s = 1.0

[[ess]]
kind = "bess"
p_min_mw = -10.0
p_max_mw = 10.0
ramp_min_mw_per_s = -5.0
ramp_max_mw_per_s = 5.0
energy_mj = 1000.0
soc_min = 0.1
soc_max = 0.8
soc_init = 0.5

[[load]]
weight = 2.0
rated_mw = 10.0
profile = { constant_mw = 6.0 }

[[load]]
weight = 1.0
rated_mw = 8.0
discrete = true
granularity = 4
profile = { segments = [ { until_s = 1.0, mw = 2.0 }, { until_s = 2.0, mw = 6.0 } ] }
"#;

    #[test]
    fn parses_and_resolves() {
        let file = ScenarioFile::parse(SMALL).unwrap();
        let sc = file.resolve(None, None).unwrap();
        assert_eq!(sc.system.mission_steps, 4);
        assert_eq!(sc.system.loads.len(), 2);
        assert_eq!(sc.system.loads[0].profile[0], 6.0e6);
        // Segment profile: 2 MW until 1 s (steps 0-1), then 6 MW.
        assert_eq!(sc.system.loads[1].profile, vec![2.0e6, 2.0e6, 6.0e6, 6.0e6]);
        assert_eq!(sc.np, Some(2));
        assert_eq!(sc.weights.omega2, 0.03);
    }

    #[test]
    fn unknown_key_is_rejected() {
        let bad = SMALL.replace("omega1", "omega_one");
        let e = ScenarioFile::parse(&bad).unwrap_err();
        assert!(e.message.contains("omega_one"), "{}", e.message);
    }

    #[test]
    fn profile_forms_are_exclusive() {
        let bad = SMALL.replace(
            "profile = { constant_mw = 6.0 }",
            "profile = { constant_mw = 6.0, steps_mw = [1.0, 1.0, 1.0, 1.0] }",
        );
        let file = ScenarioFile::parse(&bad).unwrap();
        let e = file.resolve(None, None).unwrap_err();
        assert!(e.field.contains("load[0].profile"), "{}", e.field);
    }

    #[test]
    fn named_field_in_validation_error() {
        let bad = SMALL.replace("soc_init = 0.5", "soc_init = 0.95");
        let file = ScenarioFile::parse(&bad).unwrap();
        let e = file.resolve(None, None).unwrap_err();
        assert!(e.field.contains("soc_init"), "{}", e.field);
    }

    #[test]
    fn roundtrip_is_identical() {
        let file = ScenarioFile::parse(SMALL).unwrap();
        let text = file.to_toml();
        let again = ScenarioFile::parse(&text).unwrap();
        assert_eq!(file, again);
    }

    #[test]
    fn dt_override_resamples_segments() {
        let file = ScenarioFile::parse(SMALL).unwrap();
        let sc = file.resolve(Some(0.25), None).unwrap();
        assert_eq!(sc.system.mission_steps, 8);
        assert_eq!(sc.system.loads[1].profile[3], 2.0e6); // t=0.75 s
        assert_eq!(sc.system.loads[1].profile[4], 6.0e6); // t=1.0 s
    }

    #[test]
    fn step_series_requires_matching_length() {
        let bad = SMALL.replace(
            "profile = { constant_mw = 6.0 }",
            "profile = { steps_mw = [6.0, 6.0] }",
        );
        let file = ScenarioFile::parse(&bad).unwrap();
        let e = file.resolve(None, None).unwrap_err();
        assert!(e.message.contains("mission needs 4"), "{}", e.message);
    }
}
