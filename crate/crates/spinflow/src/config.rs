//! Experiment configuration: strict TOML with unit-suffixed quantities.
//!
//! Unknown keys are fatal everywhere. Quantities are strings with explicit
//! units ("13 MHz", "51.2 mT", "0.2 ms") normalized to SI on parse; a few
//! fields accept "auto" (matching field, pump rate matched to the extracted
//! coupling) and are resolved eagerly so the stored metadata replays
//! byte-identically.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::effective::{CoherentBond, DirectedBond, EffectiveModel, TopologyTag};
use crate::error::{Error, Result};
use crate::model::chain::{constants, ChainSpec, Topology};
use crate::model::site::SiteSpec;
use crate::model::{matching_field, refine_pair_matching, Branch};
use crate::traj::field::{FieldProtocol, Waveform};
use crate::units::{format_quantity, parse_quantity, Dimension};
use crate::TAU;

/// Pump rate realizing the critically damped one-directional transfer for a
/// given coupling (Hz): the no-overshoot optimum of the 4-spin master
/// equation sits at this multiple of the angular coupling.
pub const CRITICAL_PUMP_FACTOR: f64 = 2.6;

pub fn pump_rate_for_coupling(j_eff_hz: f64) -> f64 {
    CRITICAL_PUMP_FACTOR * TAU * j_eff_hz.abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    PairDynamics,
    ChainQjm,
    EffectiveChain,
    EffectiveRing,
    EffectiveTree,
    KmcLargeN,
    FieldScan,
    DefectProtocol,
    EpScan,
    GammaEffOracle,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    /// Up-polarization on site 1, down elsewhere.
    Forward,
    /// Down on all sites except the last.
    Reversed,
    AllUp,
    AllDown,
    /// Maximally mixed nuclear state (random configuration per trajectory).
    Mixed,
    /// Explicit pattern, `true` = up.
    Pattern(Vec<bool>),
}

impl InitialState {
    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "forward" => Ok(Self::Forward),
            "reversed" => Ok(Self::Reversed),
            "all_up" => Ok(Self::AllUp),
            "all_down" => Ok(Self::AllDown),
            "mixed" | "unpolarized" => Ok(Self::Mixed),
            pattern => {
                let bits: Option<Vec<bool>> = pattern
                    .chars()
                    .map(|c| match c {
                        'u' => Some(true),
                        'd' => Some(false),
                        _ => None,
                    })
                    .collect();
                match bits {
                    Some(b) if !b.is_empty() => Ok(Self::Pattern(b)),
                    _ => Err(Error::Config(format!(
                        "initial_state `{pattern}` is not a preset name or a u/d pattern"
                    ))),
                }
            }
        }
    }

    pub fn serialize(&self) -> String {
        match self {
            Self::Forward => "forward".into(),
            Self::Reversed => "reversed".into(),
            Self::AllUp => "all_up".into(),
            Self::AllDown => "all_down".into(),
            Self::Mixed => "mixed".into(),
            Self::Pattern(bits) => {
                bits.iter().map(|&b| if b { 'u' } else { 'd' }).collect()
            }
        }
    }

    /// Concrete pattern for n sites, when deterministic.
    pub fn pattern(&self, n: usize) -> Result<Option<Vec<bool>>> {
        let out = match self {
            Self::Forward => {
                let mut v = vec![false; n];
                v[0] = true;
                Some(v)
            }
            Self::Reversed => {
                let mut v = vec![false; n];
                v[n - 1] = true;
                Some(v)
            }
            Self::AllUp => Some(vec![true; n]),
            Self::AllDown => Some(vec![false; n]),
            Self::Mixed => None,
            Self::Pattern(bits) => {
                if bits.len() != n {
                    return Err(Error::Config(format!(
                        "initial pattern has {} sites, model has {n}",
                        bits.len()
                    )));
                }
                Some(bits.clone())
            }
        };
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpScanSpec {
    pub j_eff: f64,
    pub delta_max: f64,
    pub gamma_max: f64,
    pub n_delta: usize,
    pub n_gamma: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSpec {
    pub pump_rate: f64,
    pub relax_rate: f64,
    pub n_intervals: usize,
    pub n_samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub scenario: Scenario,
    pub chain: Option<ChainSpec>,
    pub effective: Option<EffectiveModel>,
    pub protocol: Option<FieldProtocol>,
    pub initial_state: InitialState,
    pub t_max: f64,
    pub n_outputs: usize,
    pub n_traj: usize,
    pub master_seed: u64,
    /// Half-width of the static-field scan (field_scan scenario).
    pub scan_halfwidth: Option<f64>,
    pub ep: Option<EpScanSpec>,
    pub oracle: Option<OracleSpec>,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        use Scenario::*;
        let need_chain = matches!(
            self.scenario,
            PairDynamics | ChainQjm | FieldScan | DefectProtocol
        );
        let need_effective =
            matches!(self.scenario, EffectiveChain | EffectiveRing | EffectiveTree | KmcLargeN);
        if need_chain && self.chain.is_none() {
            return Err(Error::Config(format!(
                "scenario {:?} requires a [chain] section",
                self.scenario
            )));
        }
        if need_effective && self.effective.is_none() {
            return Err(Error::Config(format!(
                "scenario {:?} requires an [effective] section",
                self.scenario
            )));
        }
        if matches!(self.scenario, EpScan) && self.ep.is_none() {
            return Err(Error::Config("ep_scan requires an [ep] section".into()));
        }
        if matches!(self.scenario, GammaEffOracle) && self.oracle.is_none() {
            return Err(Error::Config("gamma_eff_oracle requires an [oracle] section".into()));
        }
        if matches!(self.scenario, FieldScan) && self.scan_halfwidth.is_none() {
            return Err(Error::Config("field_scan requires scan_halfwidth".into()));
        }
        if let Some(c) = &self.chain {
            c.validate()?;
            if matches!(self.scenario, PairDynamics) && c.sites.len() != 2 {
                return Err(Error::Config("pair_dynamics needs exactly 2 sites".into()));
            }
        }
        if let Some(m) = &self.effective {
            m.validate()?;
            if matches!(self.scenario, EffectiveRing)
                && !matches!(m.topology_tag, TopologyTag::Ring)
            {
                return Err(Error::Config("effective_ring needs ring topology".into()));
            }
        }
        if !matches!(self.scenario, EpScan | GammaEffOracle) {
            if !(self.t_max > 0.0) {
                return Err(Error::Config("t_max must be positive".into()));
            }
            if self.n_outputs < 2 {
                return Err(Error::Config("n_outputs must be at least 2".into()));
            }
        }
        Ok(())
    }

    /// Output time grid.
    pub fn time_grid(&self) -> Vec<f64> {
        (0..=self.n_outputs)
            .map(|k| k as f64 * self.t_max / self.n_outputs as f64)
            .collect()
    }
}

// ---------------------------------------------------------------------------
// on-disk representation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub scenario: Scenario,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_outputs: Option<usize>,
    #[serde(default = "default_n_traj")]
    pub n_traj: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scan_halfwidth: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chain: Option<ChainSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub effective: Option<EffectiveSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub protocol: Option<ProtocolSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ep: Option<EpSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSection>,
}

fn default_n_traj() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteSection {
    pub a_zz: String,
    pub a_zx: String,
    pub ap_zz: String,
    pub ap_zx: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSection {
    pub sites: Vec<SiteSection>,
    pub topology: String,
    pub j_d: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_zfs: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_e: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_n: Option<String>,
    /// Field value or "auto" (solve the alpha matching condition; refined
    /// to the exact pair degeneracy for 2-site chains).
    pub b_field: String,
    /// Pump rate or "auto" (critically matched to the extracted coupling).
    pub pump_rate: String,
    pub relax_rate: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EffectiveSection {
    pub n_sites: usize,
    pub topology: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub directed_bonds: Vec<DirectedBondSection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub coherent_bonds: Vec<CoherentBondSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirectedBondSection {
    pub from: usize,
    pub to: usize,
    pub rate: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoherentBondSection {
    pub a: usize,
    pub b: usize,
    pub j: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    pub waveform: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_center: Option<String>,
    pub amplitude: String,
    pub frequency: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps_per_period: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpSection {
    pub j_eff: String,
    pub delta_max: String,
    pub gamma_max: String,
    pub n_delta: usize,
    pub n_gamma: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    pub pump_rate: String,
    pub relax_rate: String,
    pub n_intervals: usize,
    pub n_samples: usize,
}

// ---------------------------------------------------------------------------
// resolution
// ---------------------------------------------------------------------------

fn resolve_chain(section: &ChainSection) -> Result<ChainSpec> {
    let mut sites = Vec::with_capacity(section.sites.len());
    for (k, s) in section.sites.iter().enumerate() {
        sites.push(SiteSpec::new(
            parse_quantity(&format!("sites[{k}].a_zz"), &s.a_zz, Dimension::Frequency)?,
            parse_quantity(&format!("sites[{k}].a_zx"), &s.a_zx, Dimension::Frequency)?,
            parse_quantity(&format!("sites[{k}].ap_zz"), &s.ap_zz, Dimension::Frequency)?,
            parse_quantity(&format!("sites[{k}].ap_zx"), &s.ap_zx, Dimension::Frequency)?,
        )?);
    }
    let topology = match section.topology.as_str() {
        "open" => Topology::Open,
        "ring" => Topology::Ring,
        other => return Err(Error::Config(format!("unknown chain topology `{other}`"))),
    };
    let mut spec = ChainSpec {
        sites,
        topology,
        j_d: parse_quantity("j_d", &section.j_d, Dimension::Frequency)?,
        d_zfs: match &section.d_zfs {
            Some(q) => parse_quantity("d_zfs", q, Dimension::Frequency)?,
            None => constants::D_ZFS,
        },
        gamma_e: match &section.gamma_e {
            Some(q) => parse_quantity("gamma_e", q, Dimension::GyromagneticRatio)?,
            None => constants::GAMMA_E,
        },
        gamma_n: match &section.gamma_n {
            Some(q) => parse_quantity("gamma_n", q, Dimension::GyromagneticRatio)?,
            None => constants::GAMMA_N,
        },
        b_field: 0.0,
        pump_rate: 0.0,
        relax_rate: parse_quantity("relax_rate", &section.relax_rate, Dimension::Frequency)?,
    };
    spec.b_field = if section.b_field.trim() == "auto" {
        let m = matching_field(&spec, Branch::Alpha)?;
        if spec.sites.len() == 2 {
            refine_pair_matching(&spec, m.b_m)?
        } else {
            m.b_m
        }
    } else {
        parse_quantity("b_field", &section.b_field, Dimension::Field)?
    };
    spec.pump_rate = if section.pump_rate.trim() == "auto" {
        let j = crate::model::extracted_coupling(&spec)?;
        pump_rate_for_coupling(j)
    } else {
        parse_quantity("pump_rate", &section.pump_rate, Dimension::Frequency)?
    };
    spec.validate()?;
    Ok(spec)
}

fn resolve_effective(section: &EffectiveSection) -> Result<EffectiveModel> {
    let tag = match section.topology.as_str() {
        "open" => TopologyTag::Open,
        "ring" => TopologyTag::Ring,
        "tree" => TopologyTag::Tree,
        other => return Err(Error::Config(format!("unknown effective topology `{other}`"))),
    };
    let model = if let Some(rate) = &section.rate {
        if !section.directed_bonds.is_empty() || !section.coherent_bonds.is_empty() {
            return Err(Error::Config(
                "give either a uniform `rate` or explicit bond lists, not both".into(),
            ));
        }
        let r = parse_quantity("rate", rate, Dimension::Frequency)?;
        match tag {
            TopologyTag::Open => EffectiveModel::open_chain(section.n_sites, r),
            TopologyTag::Ring => EffectiveModel::ring(section.n_sites, r),
            TopologyTag::Tree => {
                return Err(Error::Config("tree topology needs explicit bond lists".into()))
            }
        }
    } else {
        let mut directed = Vec::new();
        for (k, b) in section.directed_bonds.iter().enumerate() {
            if b.from == 0 || b.to == 0 {
                return Err(Error::Config("bond sites are 1-based".into()));
            }
            directed.push(DirectedBond {
                from: b.from - 1,
                to: b.to - 1,
                rate: parse_quantity(
                    &format!("directed_bonds[{k}].rate"),
                    &b.rate,
                    Dimension::Frequency,
                )?,
            });
        }
        let mut coherent = Vec::new();
        for (k, b) in section.coherent_bonds.iter().enumerate() {
            if b.a == 0 || b.b == 0 {
                return Err(Error::Config("bond sites are 1-based".into()));
            }
            coherent.push(CoherentBond {
                a: b.a - 1,
                b: b.b - 1,
                j: parse_quantity(
                    &format!("coherent_bonds[{k}].j"),
                    &b.j,
                    Dimension::Frequency,
                )?,
            });
        }
        EffectiveModel {
            n_sites: section.n_sites,
            directed_bonds: directed,
            coherent_bonds: coherent,
            topology_tag: tag,
        }
    };
    model.validate()?;
    Ok(model)
}

fn resolve_protocol(section: &ProtocolSection, chain_b: Option<f64>) -> Result<FieldProtocol> {
    let waveform = match section.waveform.as_str() {
        "constant" => Waveform::Constant,
        "triangular" => Waveform::Triangular,
        other => return Err(Error::Config(format!("unknown waveform `{other}`"))),
    };
    let b_center = match &section.b_center {
        Some(q) => parse_quantity("protocol.b_center", q, Dimension::Field)?,
        None => chain_b.ok_or_else(|| {
            Error::Config("protocol.b_center required without a [chain] section".into())
        })?,
    };
    Ok(FieldProtocol {
        b_center,
        amplitude: parse_quantity("protocol.amplitude", &section.amplitude, Dimension::Field)?,
        frequency: parse_quantity("protocol.frequency", &section.frequency, Dimension::Frequency)?,
        waveform,
        steps_per_period: section.steps_per_period.unwrap_or(200).max(4),
    })
}

pub fn resolve(file: &ConfigFile) -> Result<ExperimentSpec> {
    let chain = file.chain.as_ref().map(resolve_chain).transpose()?;
    let effective = file.effective.as_ref().map(resolve_effective).transpose()?;
    let protocol = file
        .protocol
        .as_ref()
        .map(|p| resolve_protocol(p, chain.as_ref().map(|c| c.b_field)))
        .transpose()?;
    let spec = ExperimentSpec {
        scenario: file.scenario,
        chain,
        effective,
        protocol,
        initial_state: match &file.initial_state {
            Some(s) => InitialState::parse(s)?,
            None => InitialState::Mixed,
        },
        t_max: match &file.t_max {
            Some(q) => parse_quantity("t_max", q, Dimension::Time)?,
            None => 0.0,
        },
        n_outputs: file.n_outputs.unwrap_or(200),
        n_traj: file.n_traj,
        master_seed: file.master_seed,
        scan_halfwidth: file
            .scan_halfwidth
            .as_ref()
            .map(|q| parse_quantity("scan_halfwidth", q, Dimension::Field))
            .transpose()?,
        ep: file
            .ep
            .as_ref()
            .map(|e| {
                Ok::<_, Error>(EpScanSpec {
                    j_eff: parse_quantity("ep.j_eff", &e.j_eff, Dimension::Frequency)?,
                    delta_max: parse_quantity("ep.delta_max", &e.delta_max, Dimension::Frequency)?,
                    gamma_max: parse_quantity("ep.gamma_max", &e.gamma_max, Dimension::Frequency)?,
                    n_delta: e.n_delta,
                    n_gamma: e.n_gamma,
                })
            })
            .transpose()?,
        oracle: file
            .oracle
            .as_ref()
            .map(|o| {
                Ok::<_, Error>(OracleSpec {
                    pump_rate: parse_quantity("oracle.pump_rate", &o.pump_rate, Dimension::Frequency)?,
                    relax_rate: parse_quantity(
                        "oracle.relax_rate",
                        &o.relax_rate,
                        Dimension::Frequency,
                    )?,
                    n_intervals: o.n_intervals,
                    n_samples: o.n_samples,
                })
            })
            .transpose()?,
    };
    spec.validate()?;
    Ok(spec)
}

/// Serialize a resolved spec back into the on-disk form with canonical SI
/// unit strings.
pub fn to_config_file(spec: &ExperimentSpec) -> ConfigFile {
    let fq = |v: f64| format_quantity(v, Dimension::Frequency);
    let chain = spec.chain.as_ref().map(|c| ChainSection {
        sites: c
            .sites
            .iter()
            .map(|s| SiteSection {
                a_zz: fq(s.a_zz),
                a_zx: fq(s.a_zx),
                ap_zz: fq(s.ap_zz),
                ap_zx: fq(s.ap_zx),
            })
            .collect(),
        topology: match c.topology {
            Topology::Open => "open".into(),
            Topology::Ring => "ring".into(),
            Topology::Tree(_) => "tree".into(),
        },
        j_d: fq(c.j_d),
        d_zfs: Some(fq(c.d_zfs)),
        gamma_e: Some(format_quantity(c.gamma_e, Dimension::GyromagneticRatio)),
        gamma_n: Some(format_quantity(c.gamma_n, Dimension::GyromagneticRatio)),
        b_field: format_quantity(c.b_field, Dimension::Field),
        pump_rate: fq(c.pump_rate),
        relax_rate: fq(c.relax_rate),
    });
    let effective = spec.effective.as_ref().map(|m| EffectiveSection {
        n_sites: m.n_sites,
        topology: match m.topology_tag {
            TopologyTag::Open => "open".into(),
            TopologyTag::Ring => "ring".into(),
            TopologyTag::Tree => "tree".into(),
        },
        rate: None,
        directed_bonds: m
            .directed_bonds
            .iter()
            .map(|b| DirectedBondSection { from: b.from + 1, to: b.to + 1, rate: fq(b.rate) })
            .collect(),
        coherent_bonds: m
            .coherent_bonds
            .iter()
            .map(|b| CoherentBondSection { a: b.a + 1, b: b.b + 1, j: fq(b.j) })
            .collect(),
    });
    let protocol = spec.protocol.as_ref().map(|p| ProtocolSection {
        waveform: match p.waveform {
            Waveform::Constant => "constant".into(),
            Waveform::Triangular => "triangular".into(),
        },
        b_center: Some(format_quantity(p.b_center, Dimension::Field)),
        amplitude: format_quantity(p.amplitude, Dimension::Field),
        frequency: fq(p.frequency),
        steps_per_period: Some(p.steps_per_period),
    });
    ConfigFile {
        scenario: spec.scenario,
        t_max: Some(format_quantity(spec.t_max, Dimension::Time)),
        n_outputs: Some(spec.n_outputs),
        n_traj: spec.n_traj,
        master_seed: spec.master_seed,
        initial_state: Some(spec.initial_state.serialize()),
        scan_halfwidth: spec.scan_halfwidth.map(|v| format_quantity(v, Dimension::Field)),
        chain,
        effective,
        protocol,
        ep: spec.ep.as_ref().map(|e| EpSection {
            j_eff: fq(e.j_eff),
            delta_max: fq(e.delta_max),
            gamma_max: fq(e.gamma_max),
            n_delta: e.n_delta,
            n_gamma: e.n_gamma,
        }),
        oracle: spec.oracle.as_ref().map(|o| OracleSection {
            pump_rate: fq(o.pump_rate),
            relax_rate: fq(o.relax_rate),
            n_intervals: o.n_intervals,
            n_samples: o.n_samples,
        }),
    }
}

pub fn parse_config_str(text: &str) -> Result<ExperimentSpec> {
    let file: ConfigFile =
        toml::from_str(text).map_err(|e| Error::Config(format!("TOML parse error: {e}")))?;
    resolve(&file)
}

pub fn parse_config(path: &Path) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text)
}

pub fn serialize_config(spec: &ExperimentSpec) -> String {
    toml::to_string_pretty(&to_config_file(spec)).expect("config serialization")
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
scenario = "effective_chain"
t_max = "0.5 s"
n_outputs = 100
n_traj = 1
master_seed = 7
initial_state = "mixed"

[effective]
n_sites = 4
topology = "open"
rate = "13.35 Hz"
"#;

    #[test]
    fn parses_effective_config() {
        let spec = parse_config_str(SAMPLE).unwrap();
        assert_eq!(spec.scenario, Scenario::EffectiveChain);
        let m = spec.effective.unwrap();
        assert_eq!(m.n_sites, 4);
        assert_eq!(m.directed_bonds.len(), 3);
        assert!((m.directed_bonds[0].rate - 13.35).abs() < 1e-12);
    }

    #[test]
    fn unknown_key_is_fatal() {
        let bad = SAMPLE.replace("master_seed = 7", "master_seed = 7\nbogus_key = 1");
        assert!(parse_config_str(&bad).is_err());
    }

    #[test]
    fn malformed_unit_names_key() {
        let bad = SAMPLE.replace("\"13.35 Hz\"", "\"13 Mhzz\"");
        let err = parse_config_str(&bad).unwrap_err();
        assert!(format!("{err}").contains("rate"));
    }

    #[test]
    fn round_trip_preserves_spec() {
        let spec = parse_config_str(SAMPLE).unwrap();
        let text = serialize_config(&spec);
        let again = parse_config_str(&text).unwrap();
        assert_eq!(spec, again);
    }

    #[test]
    fn initial_state_patterns() {
        assert_eq!(
            InitialState::parse("udd").unwrap(),
            InitialState::Pattern(vec![true, false, false])
        );
        assert!(InitialState::parse("xyz").is_err());
        let f = InitialState::Forward.pattern(3).unwrap().unwrap();
        assert_eq!(f, vec![true, false, false]);
    }

    #[test]
    fn scenario_requirements_enforced() {
        let missing = SAMPLE.replace("[effective]", "[chain_not]").replace("chain_not", "effective_x");
        assert!(parse_config_str(&missing).is_err());
    }
}
