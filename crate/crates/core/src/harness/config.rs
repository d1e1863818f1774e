//! Experiment configuration files.
//!
//! A config is TOML restricted to scalar or array values under dotted
//! keys, e.g. `ris.p_c = "-10 dBm"`. An optional top-level
//! `include = ["base.toml"]` pulls in other files first; keys in the
//! including file win. Anything not mentioned keeps its reference value.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use toml::Value;

use crate::agents::MsatConfig;
use crate::env::EnvConfig;
use crate::error::{Error, Result};
use crate::meta::MetaConfig;
use crate::nn::OptimizerKind;
use crate::units::{db_to_amplitude, db_to_linear, dbm_to_watts};

/// Surface sizes of the reference sweeps.
pub const PAPER_M_VALUES: [usize; 4] = [9, 16, 25, 36];
/// Base-station antenna counts of the reference sweeps.
pub const PAPER_NBS_VALUES: [usize; 4] = [3, 5, 7, 11];

/// Reference position of the terrestrial surface in the fixed baseline.
pub const FIXED_RIS_POSITION: [f64; 3] = [75.0, 75.0, 100.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    Mmsat,
    Msat,
    PassiveRis,
    FixedRis,
}

impl Baseline {
    pub const ALL: [Baseline; 4] = [Baseline::Mmsat, Baseline::Msat, Baseline::PassiveRis, Baseline::FixedRis];

    pub fn as_str(self) -> &'static str {
        match self {
            Baseline::Mmsat => "mmsat",
            Baseline::Msat => "msat",
            Baseline::PassiveRis => "passive_ris",
            Baseline::FixedRis => "fixed_ris",
        }
    }

    /// Whether the run meta-trains before adapting to the evaluation task.
    pub fn is_meta(self) -> bool {
        !matches!(self, Baseline::Msat)
    }
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Baseline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Baseline::ALL.into_iter().find(|b| b.as_str() == s).ok_or_else(|| {
            Error::config("run.baseline", format!("unknown baseline `{s}` (mmsat, msat, passive_ris, fixed_ris)"))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Number of surface elements.
    M,
    /// BS transmit budget, W.
    PMax,
    /// BS antennas.
    NBs,
    /// Per-user QoS threshold, bps/Hz.
    Qos,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::M => "m",
            SweepAxis::PMax => "p_max",
            SweepAxis::NBs => "n_bs",
            SweepAxis::Qos => "qos",
        }
    }

    /// Applies one axis value to an environment config.
    pub fn apply(self, env: &mut EnvConfig, value: f64) -> Result<()> {
        let count = |v: f64| -> Result<usize> {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::config("sweep.values", format!("{v} is not a positive integer")))
            }
        };
        match self {
            SweepAxis::M => env.set_num_elements(count(value)?),
            SweepAxis::NBs => env.channel.n_bs = count(value)?,
            SweepAxis::PMax => env.set_p_max(value),
            SweepAxis::Qos => env.qos = vec![value; env.num_users],
        }
        Ok(())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "m" => Ok(SweepAxis::M),
            "p_max" => Ok(SweepAxis::PMax),
            "n_bs" => Ok(SweepAxis::NBs),
            "qos" => Ok(SweepAxis::Qos),
            _ => Err(Error::config("sweep.axis", format!("unknown axis `{s}` (m, p_max, n_bs, qos)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: String,
    pub env: EnvConfig,
    pub agent: MsatConfig,
    pub meta: MetaConfig,
    pub baseline: Baseline,
    /// Training episodes of a from-scratch run.
    pub episodes: usize,
    pub sweep: Option<SweepSpec>,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    /// Permit surface sizes and antenna counts outside the reference sets.
    pub allow_extra_values: bool,
    /// Log per-slot rate and power with every record.
    pub detail: bool,
    /// Record elapsed seconds per episode. Off by default so that metrics
    /// files are reproducible byte for byte.
    pub wall_clock: bool,
}

impl ExperimentConfig {
    /// Reference scenario: full-size network, 2500 episodes.
    pub fn reference() -> Self {
        Self {
            scenario: "default".into(),
            env: EnvConfig::table_defaults(),
            agent: MsatConfig::default(),
            meta: MetaConfig { e_trn: 2500, ..MetaConfig::default() },
            baseline: Baseline::Mmsat,
            episodes: 2500,
            sweep: None,
            seeds: vec![0],
            out_dir: PathBuf::from("out"),
            allow_extra_values: false,
            detail: false,
            wall_clock: false,
        }
    }

    /// Small network and 200 episodes; non-reference sizes allowed.
    pub fn desk_scale() -> Self {
        Self {
            env: EnvConfig::desk_scale(),
            meta: MetaConfig::default(),
            episodes: 200,
            allow_extra_values: true,
            ..Self::reference()
        }
    }

    /// Reads a config file. `desk_scale` starts from the desk preset
    /// instead of the reference one; `run.desk_scale = true` in the file
    /// does the same.
    pub fn load(path: impl AsRef<Path>, desk_scale: bool) -> Result<Self> {
        let flat = read_layered(path.as_ref(), &mut Vec::new())?;
        Self::from_flat(flat, desk_scale)
    }

    /// Parses config text; includes resolve relative to `base_dir`.
    pub fn parse(text: &str, base_dir: &Path, desk_scale: bool) -> Result<Self> {
        let flat = parse_layered(text, "<config>", base_dir, &mut Vec::new())?;
        Self::from_flat(flat, desk_scale)
    }

    fn from_flat(mut flat: BTreeMap<String, Value>, desk_scale: bool) -> Result<Self> {
        let desk = match flat.remove("run.desk_scale") {
            Some(v) => desk_scale || as_bool("run.desk_scale", &v)?,
            None => desk_scale,
        };
        let mut cfg = if desk { Self::desk_scale() } else { Self::reference() };
        // K first so that a QoS list given in the same file is not resized away
        if let Some(v) = flat.remove("env.k") {
            cfg.env.set_num_users(as_count("env.k", &v)?);
        }
        for (key, value) in &flat {
            cfg.set(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, v: &Value) -> Result<()> {
        let e = &mut self.env;
        let a = &mut self.agent;
        let m = &mut self.meta;
        let f = |v: &Value| as_f64(key, v);
        let n = |v: &Value| as_count(key, v);
        let w = |v: &Value| as_watts(key, v);
        let b = |v: &Value| as_bool(key, v);
        match key {
            "scenario.name" => self.scenario = as_str(key, v)?.to_string(),

            "run.baseline" => self.baseline = as_str(key, v)?.parse()?,
            "run.episodes" => self.episodes = n(v)?,
            "run.seeds" => self.seeds = as_list(key, v)?.iter().map(|x| as_u64(key, x)).collect::<Result<_>>()?,
            "run.out" => self.out_dir = PathBuf::from(as_str(key, v)?),
            "run.allow_extra_values" => self.allow_extra_values = b(v)?,
            "run.detail" => self.detail = b(v)?,
            "run.wall_clock" => self.wall_clock = b(v)?,

            "env.m" => e.set_num_elements(n(v)?),
            "env.mx" => e.channel.mx = n(v)?,
            "env.my" => e.channel.my = n(v)?,
            "env.n_bs" => e.channel.n_bs = n(v)?,
            "env.horizon" => e.horizon = n(v)?,
            "env.slot_dt" => e.slot_dt = f(v)?,
            "env.p_max" => e.set_p_max(w(v)?),
            "env.qos" => {
                e.qos = match v {
                    Value::Array(xs) => xs.iter().map(&f).collect::<Result<_>>()?,
                    x => vec![f(x)?; e.num_users],
                }
            }
            "env.bs_pos" => e.bs_pos = as_vec3(key, v)?,
            "env.q_min" => e.q_min = as_vec3(key, v)?,
            "env.q_max" => e.q_max = as_vec3(key, v)?,
            "env.uav_init" => e.uav_init = as_vec3(key, v)?,
            "env.v_max" => e.v_max = f(v)?,
            "env.a_max_uav" => e.a_max_uav = f(v)?,
            "env.c_max" => e.c_max = f(v)?,
            "env.user_step_std" => e.user_step_std = f(v)?,
            "env.common_sinr_excludes_self" => e.sinr.common_sinr_excludes_self = b(v)?,

            "channel.c0" => {
                e.channel.c0 = as_ratio(key, v)?;
                e.scales.channel = e.channel.c0.sqrt();
            }
            "channel.d0" => e.channel.d0 = f(v)?,
            "channel.alpha_bs_u" => e.channel.alpha_bs_u = f(v)?,
            "channel.alpha_u_k" => e.channel.alpha_u_k = f(v)?,
            "channel.k_bs_u" => e.channel.k_bs_u = as_ratio(key, v)?,
            "channel.k_u_k" => e.channel.k_u_k = as_ratio(key, v)?,
            "channel.zeta_phase" => e.channel.zeta_phase = f(v)?,
            "channel.printed_cos_beta" => e.channel.use_printed_cos_beta = b(v)?,

            "ris.p_c" => e.ris_power.p_c = w(v)?,
            "ris.p_dc" => e.ris_power.p_dc = w(v)?,
            "ris.eta" => e.ris_power.amp_eff = f(v)?,
            "ris.nu" => e.ris_power.nu = f(v)?,
            "ris.p_i" => e.ris_power.p_amp_budget = w(v)?,
            "ris.a_max" => e.a_max_ris = as_amplitude(key, v)?,
            "ris.static_power_counts_all" => e.ris_power.static_power_counts_all = b(v)?,

            "noise.sigma_k" => e.sigma_k2 = w(v)?,
            "noise.sigma_z" => e.sigma_z2 = w(v)?,

            "bs.pa_eff" => e.bs_power.pa_eff = f(v)?,
            "bs.p_cir_bs" => e.bs_power.p_cir_bs = w(v)?,
            "bs.p_cir_user" => e.bs_power.p_cir_user = w(v)?,

            "uav.p_b" => e.uav_power.p_b = w(v)?,
            "uav.p_i" => e.uav_power.p_i = w(v)?,
            "uav.omega" => e.uav_power.omega = f(v)?,
            "uav.rotor_r" => e.uav_power.rotor_r = f(v)?,
            "uav.d_ratio" => e.uav_power.d_ratio = f(v)?,
            "uav.air_density" => e.uav_power.air_density = f(v)?,
            "uav.solidity" => e.uav_power.solidity = f(v)?,
            "uav.disk_area" => e.uav_power.disk_area = f(v)?,
            "uav.v_induced" => e.uav_power.v_induced = f(v)?,
            "uav.profile_drag" => e.uav_power.profile_drag = f(v)?,
            "uav.corr" => e.uav_power.corr = f(v)?,
            "uav.weight" => e.uav_power.weight = f(v)?,

            "baseline.fixed_position" => e.variant.fixed_position = Some(as_vec3(key, v)?),

            "agent.hidden" => {
                let h: Vec<usize> = as_list(key, v)?.iter().map(&n).collect::<Result<_>>()?;
                *a = a.clone().with_hidden(&h);
            }
            "agent.batch_size" => a.batch_size = n(v)?,
            "agent.buffer_capacity" => a.buffer_capacity = n(v)?,
            "agent.gamma" => {
                a.sac.gamma = f(v)?;
                a.td3.gamma = a.sac.gamma;
            }
            "agent.tau" => {
                a.sac.tau = f(v)?;
                a.td3.tau_critic = a.sac.tau;
                a.td3.tau_actor = a.sac.tau;
            }
            "agent.lr_actor" => {
                a.sac.lr_actor = f(v)?;
                a.td3.lr_actor = a.sac.lr_actor;
            }
            "agent.lr_critic" => {
                a.sac.lr_critic = f(v)?;
                a.td3.lr_critic = a.sac.lr_critic;
            }
            "agent.optimizer" => {
                let k = as_optimizer(key, v)?;
                a.sac.optimizer = k;
                a.td3.optimizer = k;
            }
            "agent.temperature" => a.sac.temperature = f(v)?,
            "agent.log10_entropy" => a.sac.log10_entropy = b(v)?,
            "agent.tanh_correction" => a.sac.tanh_correction = b(v)?,
            "agent.policy_noise" => a.td3.policy_noise = f(v)?,
            "agent.noise_clip" => a.td3.noise_clip = f(v)?,
            "agent.explore_std" => a.td3.explore_std = f(v)?,
            "agent.policy_delay" => a.td3.policy_delay = n(v)? as u64,
            "agent.literal_actor_sign" => a.td3.literal_actor_sign = b(v)?,

            "meta.tasks" => m.tasks = n(v)?,
            "meta.n_inner" => m.n_inner = as_u64(key, v)? as usize,
            "meta.inner_lr" => m.inner_lr = f(v)?,
            "meta.beta" => m.beta_meta = f(v)?,
            "meta.outer_optimizer" => m.outer_optimizer = as_optimizer(key, v)?,
            "meta.e_trn" => m.e_trn = as_u64(key, v)? as usize,
            "meta.e_adp" => m.e_adp = as_u64(key, v)? as usize,

            "sweep.axis" | "sweep.values" => self.set_sweep(key, v)?,

            _ => return Err(Error::config(key, "unknown key")),
        }
        Ok(())
    }

    fn set_sweep(&mut self, key: &str, v: &Value) -> Result<()> {
        let spec = self.sweep.get_or_insert(SweepSpec { axis: SweepAxis::M, values: Vec::new() });
        if key == "sweep.axis" {
            spec.axis = as_str(key, v)?.parse()?;
        } else {
            // power values may carry units; resolved once the axis is known
            spec.values = as_list(key, v)?.iter().map(|x| as_watts(key, x)).collect::<Result<_>>()?;
        }
        Ok(())
    }

    /// Applies run-level variants for a baseline to the environment config.
    pub fn env_for(&self, baseline: Baseline) -> EnvConfig {
        let mut env = self.env.clone();
        match baseline {
            Baseline::PassiveRis => env.variant.passive_ris = true,
            Baseline::FixedRis => {
                if env.variant.fixed_position.is_none() {
                    env.variant.fixed_position = Some(FIXED_RIS_POSITION);
                }
            }
            Baseline::Mmsat | Baseline::Msat => {}
        }
        env
    }

    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.meta.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::config("run.seeds", "at least one seed is required"));
        }
        if self.agent.batch_size == 0 {
            return Err(Error::config("agent.batch_size", "must be positive"));
        }
        if self.agent.buffer_capacity < self.agent.batch_size {
            return Err(Error::config("agent.buffer_capacity", "must hold at least one batch"));
        }
        if !self.allow_extra_values {
            check_reference("env.m", self.env.num_elements(), &PAPER_M_VALUES)?;
            check_reference("env.n_bs", self.env.n_bs(), &PAPER_NBS_VALUES)?;
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                return Err(Error::config("sweep.values", "needs at least one value"));
            }
            for &v in &s.values {
                let mut probe = self.env.clone();
                s.axis.apply(&mut probe, v)?;
                if !self.allow_extra_values {
                    match s.axis {
                        SweepAxis::M => check_reference("sweep.values", probe.num_elements(), &PAPER_M_VALUES)?,
                        SweepAxis::NBs => check_reference("sweep.values", probe.n_bs(), &PAPER_NBS_VALUES)?,
                        _ => {}
                    }
                }
                probe.validate()?;
            }
        }
        Ok(())
    }
}

fn check_reference(field: &str, v: usize, allowed: &[usize]) -> Result<()> {
    if allowed.contains(&v) {
        Ok(())
    } else {
        Err(Error::config(
            field,
            format!("{v} is not one of {allowed:?}; set run.allow_extra_values or use the desk-scale preset"),
        ))
    }
}

fn read_layered(path: &Path, stack: &mut Vec<PathBuf>) -> Result<BTreeMap<String, Value>> {
    let canonical = path.canonicalize().map_err(|e| parse_err(path.display(), format!("cannot open: {e}")))?;
    if stack.contains(&canonical) {
        return Err(parse_err(path.display(), "include cycle"));
    }
    let text = std::fs::read_to_string(path)?;
    stack.push(canonical);
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let out = parse_layered(&text, &path.display().to_string(), base, stack);
    stack.pop();
    out
}

fn parse_layered(
    text: &str,
    origin: &str,
    base_dir: &Path,
    stack: &mut Vec<PathBuf>,
) -> Result<BTreeMap<String, Value>> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| parse_err(origin, e.message()))?;
    let mut flat = BTreeMap::new();
    if let Some(inc) = table.get("include") {
        let files = match inc {
            Value::String(s) => vec![s.clone()],
            Value::Array(xs) => xs
                .iter()
                .map(|x| x.as_str().map(str::to_string).ok_or_else(|| Error::config("include", "expected file names")))
                .collect::<Result<_>>()?,
            _ => return Err(Error::config("include", "expected a file name or a list of them")),
        };
        for f in files {
            flat.extend(read_layered(&base_dir.join(f), stack)?);
        }
    }
    let mut own = BTreeMap::new();
    flatten("", &table, &mut own);
    own.remove("include");
    flat.extend(own);
    Ok(flat)
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, Value>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(t) => flatten(&key, t, out),
            other => {
                out.insert(key, other.clone());
            }
        }
    }
}

fn parse_err(origin: impl fmt::Display, message: impl Into<String>) -> Error {
    Error::Parse { origin: origin.to_string(), message: message.into() }
}

/// Known keys, for help output and tests.
pub fn known_keys() -> BTreeSet<&'static str> {
    [
        "scenario.name",
        "run.baseline",
        "run.episodes",
        "run.seeds",
        "run.out",
        "run.allow_extra_values",
        "run.detail",
        "run.wall_clock",
        "run.desk_scale",
        "env.k",
        "env.m",
        "env.mx",
        "env.my",
        "env.n_bs",
        "env.horizon",
        "env.slot_dt",
        "env.p_max",
        "env.qos",
        "env.bs_pos",
        "env.q_min",
        "env.q_max",
        "env.uav_init",
        "env.v_max",
        "env.a_max_uav",
        "env.c_max",
        "env.user_step_std",
        "env.common_sinr_excludes_self",
        "channel.c0",
        "channel.d0",
        "channel.alpha_bs_u",
        "channel.alpha_u_k",
        "channel.k_bs_u",
        "channel.k_u_k",
        "channel.zeta_phase",
        "channel.printed_cos_beta",
        "ris.p_c",
        "ris.p_dc",
        "ris.eta",
        "ris.nu",
        "ris.p_i",
        "ris.a_max",
        "ris.static_power_counts_all",
        "noise.sigma_k",
        "noise.sigma_z",
        "bs.pa_eff",
        "bs.p_cir_bs",
        "bs.p_cir_user",
        "uav.p_b",
        "uav.p_i",
        "uav.omega",
        "uav.rotor_r",
        "uav.d_ratio",
        "uav.air_density",
        "uav.solidity",
        "uav.disk_area",
        "uav.v_induced",
        "uav.profile_drag",
        "uav.corr",
        "uav.weight",
        "baseline.fixed_position",
        "agent.hidden",
        "agent.batch_size",
        "agent.buffer_capacity",
        "agent.gamma",
        "agent.tau",
        "agent.lr_actor",
        "agent.lr_critic",
        "agent.optimizer",
        "agent.temperature",
        "agent.log10_entropy",
        "agent.tanh_correction",
        "agent.policy_noise",
        "agent.noise_clip",
        "agent.explore_std",
        "agent.policy_delay",
        "agent.literal_actor_sign",
        "meta.tasks",
        "meta.n_inner",
        "meta.inner_lr",
        "meta.beta",
        "meta.outer_optimizer",
        "meta.e_trn",
        "meta.e_adp",
        "sweep.axis",
        "sweep.values",
    ]
    .into_iter()
    .collect()
}

fn as_f64(key: &str, v: &Value) -> Result<f64> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        Value::String(s) => {
            s.trim().replace('\u{2212}', "-").parse().map_err(|_| Error::config(key, format!("`{s}` is not a number")))
        }
        _ => Err(Error::config(key, "expected a number")),
    }
}

fn as_u64(key: &str, v: &Value) -> Result<u64> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        _ => Err(Error::config(key, "expected a non-negative integer")),
    }
}

fn as_count(key: &str, v: &Value) -> Result<usize> {
    match as_u64(key, v)? {
        0 => Err(Error::config(key, "must be at least 1")),
        n => Ok(n as usize),
    }
}

fn as_bool(key: &str, v: &Value) -> Result<bool> {
    v.as_bool().ok_or_else(|| Error::config(key, "expected true or false"))
}

fn as_str<'a>(key: &str, v: &'a Value) -> Result<&'a str> {
    v.as_str().ok_or_else(|| Error::config(key, "expected a string"))
}

fn as_list<'a>(key: &str, v: &'a Value) -> Result<&'a [Value]> {
    v.as_array().map(Vec::as_slice).ok_or_else(|| Error::config(key, "expected a list"))
}

fn as_vec3(key: &str, v: &Value) -> Result<[f64; 3]> {
    let xs = as_list(key, v)?;
    if xs.len() != 3 {
        return Err(Error::config(key, format!("expected 3 coordinates, got {}", xs.len())));
    }
    Ok([as_f64(key, &xs[0])?, as_f64(key, &xs[1])?, as_f64(key, &xs[2])?])
}

fn as_optimizer(key: &str, v: &Value) -> Result<OptimizerKind> {
    match as_str(key, v)? {
        "adam" => Ok(OptimizerKind::Adam),
        "sgd" => Ok(OptimizerKind::Sgd),
        s => Err(Error::config(key, format!("unknown optimizer `{s}` (adam, sgd)"))),
    }
}

/// Splits `"-10 dBm"` into `(-10.0, "dBm")`. Bare numbers have an empty unit.
fn split_unit(key: &str, v: &Value) -> Result<(f64, String)> {
    let Value::String(s) = v else {
        return Ok((as_f64(key, v)?, String::new()));
    };
    let s = s.trim().replace('\u{2212}', "-");
    let at = s.find(|c: char| c.is_ascii_alphabetic() && c != 'e' && c != 'E').unwrap_or(s.len());
    let (num, unit) = s.split_at(at);
    let x =
        num.trim().parse().map_err(|_| Error::config(key, format!("`{s}` is not a number with an optional unit")))?;
    Ok((x, unit.trim().to_string()))
}

/// Power: `dBm`, `mW` or `W`; a bare number is watts.
fn as_watts(key: &str, v: &Value) -> Result<f64> {
    let (x, unit) = split_unit(key, v)?;
    match unit.as_str() {
        "" | "W" => Ok(x),
        "mW" => Ok(x * 1e-3),
        "dBm" => Ok(dbm_to_watts(x)),
        u => Err(Error::config(key, format!("unit `{u}` is not a power unit (W, mW, dBm)"))),
    }
}

/// Power ratio: `dB` or linear.
fn as_ratio(key: &str, v: &Value) -> Result<f64> {
    let (x, unit) = split_unit(key, v)?;
    match unit.as_str() {
        "" => Ok(x),
        "dB" => Ok(db_to_linear(x)),
        u => Err(Error::config(key, format!("unit `{u}` is not a ratio unit (dB)"))),
    }
}

/// Amplitude: a power gain in `dB`, or a linear amplitude.
fn as_amplitude(key: &str, v: &Value) -> Result<f64> {
    let (x, unit) = split_unit(key, v)?;
    match unit.as_str() {
        "" => Ok(x),
        "dB" => Ok(db_to_amplitude(x)),
        u => Err(Error::config(key, format!("unit `{u}` is not a gain unit (dB)"))),
    }
}
