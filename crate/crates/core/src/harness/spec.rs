use crate::error::{Error, Result};
use crate::scenario::{db_to_linear, dbm_to_watts, linear_to_db, watts_to_dbm, Mode, Scheme, SystemConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

/// Parameter varied across an experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// BS power budget, dBm.
    Pbs,
    /// Residual SI degree, dB.
    SigmaSi,
    /// UL secrecy target, bits/s/Hz.
    RbarUl,
    /// Transmit and receive antennas (set equal).
    NtNr,
    /// DL and UL users per zone (set equal).
    KL,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 5] = [SweepAxis::Pbs, SweepAxis::SigmaSi, SweepAxis::RbarUl, SweepAxis::NtNr, SweepAxis::KL];

    pub fn unit(self) -> &'static str {
        match self {
            SweepAxis::Pbs => "dBm",
            SweepAxis::SigmaSi => "dB",
            SweepAxis::RbarUl => "bits/s/Hz",
            SweepAxis::NtNr => "antennas",
            SweepAxis::KL => "users per zone",
        }
    }

    /// The axis value `cfg` already has.
    pub fn value_of(self, cfg: &SystemConfig) -> f64 {
        match self {
            SweepAxis::Pbs => watts_to_dbm(cfg.pbs_max),
            SweepAxis::SigmaSi => linear_to_db(cfg.sigma_si),
            SweepAxis::RbarUl => cfg.rbar_ul,
            SweepAxis::NtNr => cfg.nt as f64,
            SweepAxis::KL => cfg.k as f64,
        }
    }

    /// `cfg` with this axis set to `v`, validated.
    pub fn apply(self, cfg: &SystemConfig, v: f64) -> Result<SystemConfig> {
        let count = || {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::Config(format!("{self} needs a positive integer, got {v}")))
            }
        };
        let mut out = cfg.clone();
        match self {
            SweepAxis::Pbs => out.pbs_max = dbm_to_watts(v),
            SweepAxis::SigmaSi => out.sigma_si = db_to_linear(v),
            SweepAxis::RbarUl => out.rbar_ul = v,
            SweepAxis::NtNr => {
                out.nt = count()?;
                out.nr = out.nt;
            }
            SweepAxis::KL => {
                out.k = count()?;
                out.l = out.k;
            }
        }
        out.validate()?;
        Ok(out)
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepAxis::Pbs => "pbs",
            SweepAxis::SigmaSi => "sigma_si",
            SweepAxis::RbarUl => "rbar_ul",
            SweepAxis::NtNr => "nt_nr",
            SweepAxis::KL => "k_l",
        })
    }
}

impl FromStr for SweepAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "pbs" | "pbs_max" => Ok(SweepAxis::Pbs),
            "sigma_si" | "si" => Ok(SweepAxis::SigmaSi),
            "rbar_ul" | "rbar" => Ok(SweepAxis::RbarUl),
            "nt_nr" | "antennas" => Ok(SweepAxis::NtNr),
            "k_l" | "users" => Ok(SweepAxis::KL),
            other => Err(Error::Parse(format!("unknown sweep axis '{other}'"))),
        }
    }
}

/// Parses `AXIS=v1,v2,...`.
pub fn parse_sweep(s: &str) -> Result<(SweepAxis, Vec<f64>)> {
    let (axis, vals) = s.split_once('=').ok_or_else(|| Error::Parse(format!("sweep '{s}' is not AXIS=v1,v2,...")))?;
    let values = vals
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| Error::Parse(format!("sweep value '{v}': {e}"))))
        .collect::<Result<Vec<_>>>()?;
    Ok((axis.trim().parse()?, values))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub base: SystemConfig,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub schemes: Vec<Scheme>,
    pub modes: Vec<Mode>,
    pub n_runs: usize,
    pub base_seed: u64,
    pub out: PathBuf,
    /// Worker threads; 0 lets the pool decide.
    pub jobs: usize,
    /// Write measured solve times. Off, the column is zero and the file
    /// depends on the spec alone.
    pub record_timing: bool,
}

impl ExperimentSpec {
    /// One run of every scheme at the base config's own `Pbs`.
    pub fn new(base: SystemConfig, out: impl Into<PathBuf>) -> Self {
        let value = SweepAxis::Pbs.value_of(&base);
        ExperimentSpec {
            modes: vec![base.mode],
            base,
            axis: SweepAxis::Pbs,
            values: vec![value],
            schemes: Scheme::ALL.to_vec(),
            n_runs: 1,
            base_seed: 0,
            out: out.into(),
            jobs: 0,
            record_timing: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Config("sweep needs at least one value".into()));
        }
        if self.n_runs == 0 {
            return Err(Error::Config("n_runs must be at least 1".into()));
        }
        if self.schemes.is_empty() || self.modes.is_empty() {
            return Err(Error::Config("at least one scheme and one mode are required".into()));
        }
        for &v in &self.values {
            self.axis.apply(&self.base, v)?;
        }
        Ok(())
    }

    /// Config of sweep point `idx`, with `mode` set.
    pub fn config_at(&self, idx: usize, mode: Mode) -> Result<SystemConfig> {
        let mut cfg = self.axis.apply(&self.base, self.values[idx])?;
        cfg.mode = mode;
        Ok(cfg)
    }
}

/// Seed of run `run` at sweep point `sweep`; every scheme and mode of the
/// run shares it.
pub fn run_seed(base_seed: u64, sweep: usize, run: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(base_seed.to_le_bytes());
    h.update((sweep as u64).to_le_bytes());
    h.update((run as u64).to_le_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest is 32 bytes"))
}
