//! Cell geometry, path loss, channel draws and the system configuration.

use crate::error::{Error, Result};
use crate::scalar::{CMat, CVec, Scalar};
use nalgebra::DMatrix;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EveModel {
    Ewci,
    Scsi,
    Wcs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    MaxminAll,
    MaxminDl,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mode {
    pub eve: EveModel,
    pub objective: Objective,
}

impl Mode {
    pub const fn new(eve: EveModel, objective: Objective) -> Self {
        Mode { eve, objective }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let e = match self.eve {
            EveModel::Ewci => "ewci",
            EveModel::Scsi => "scsi",
            EveModel::Wcs => "wcs",
        };
        match self.objective {
            Objective::MaxminAll => write!(f, "{e}"),
            Objective::MaxminDl => write!(f, "{e}-dl"),
        }
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.to_ascii_lowercase();
        let (base, objective) = match s.strip_suffix("-dl") {
            Some(b) => (b.to_string(), Objective::MaxminDl),
            None => (s.clone(), Objective::MaxminAll),
        };
        let eve = match base.as_str() {
            "ewci" => EveModel::Ewci,
            "scsi" => EveModel::Scsi,
            "wcs" => EveModel::Wcs,
            _ => return Err(Error::Parse(format!("unknown mode '{s}'"))),
        };
        Ok(Mode { eve, objective })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    ProposedFd,
    ConventionalFd,
    Hd,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::ProposedFd, Scheme::ConventionalFd, Scheme::Hd];
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::ProposedFd => "proposed-fd",
            Scheme::ConventionalFd => "conventional-fd",
            Scheme::Hd => "hd",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "proposed-fd" | "proposed" | "fd" => Ok(Scheme::ProposedFd),
            "conventional-fd" | "conventional" => Ok(Scheme::ConventionalFd),
            "hd" => Ok(Scheme::Hd),
            other => Err(Error::Parse(format!("unknown scheme '{other}'"))),
        }
    }
}

/// Concave minorant used for the UL rates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UlBound {
    /// MMSE filter frozen at the expansion point; the SINR then has the DL
    /// shape `r²/φ` and takes the DL minorant.
    #[default]
    Filter,
    /// Log-determinant minorant through `Ω = Φ_ℓ^{-1} − Φ_{ℓ-1}^{-1}`.
    Mmse,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    pub feas_tol: f64,
    pub gap_tol: f64,
    pub max_ipm_iters: u32,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            feas_tol: 1e-8,
            gap_tol: 1e-8,
            max_ipm_iters: 200,
        }
    }
}

/// All scalar system parameters. Powers in watts, distances in meters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    pub k: usize,
    pub l: usize,
    pub m: usize,
    pub nt: usize,
    pub nr: usize,
    pub ne: Vec<usize>,
    pub pbs_max: f64,
    pub pu_max: f64,
    pub sigma_si: f64,
    pub sigma2: f64,
    /// bits/s/Hz
    pub rbar_ul: f64,
    pub eps_outage: f64,
    /// nats/s/Hz
    pub sca_tol: f64,
    pub max_iters: usize,
    /// nats/s/Hz
    pub eta_bar_min: f64,
    pub cell_radius: f64,
    pub inner_radius: f64,
    pub min_bs_distance: f64,
    pub rician_k_si_db: f64,
    pub mode: Mode,
    pub scheme: Scheme,
    /// Fraction of the BS budget given to AN in the starting point.
    pub init_an_fraction: f64,
    pub max_init_passes: usize,
    /// Share of time given to the DL block in the HD baseline.
    pub hd_time_split: f64,
    pub ul_bound: UlBound,
    pub solver: SolverSettings,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            k: 2,
            l: 2,
            m: 2,
            nt: 5,
            nr: 5,
            ne: vec![2, 2],
            pbs_max: dbm_to_watts(26.0),
            pu_max: dbm_to_watts(23.0),
            sigma_si: db_to_linear(-75.0),
            sigma2: noise_power(-174.0, 10e6),
            rbar_ul: 2.0,
            eps_outage: 0.99,
            sca_tol: 1e-3,
            max_iters: 40,
            eta_bar_min: 0.05,
            cell_radius: 100.0,
            inner_radius: 50.0,
            min_bs_distance: 10.0,
            rician_k_si_db: 5.0,
            mode: Mode::new(EveModel::Ewci, Objective::MaxminAll),
            scheme: Scheme::ProposedFd,
            init_an_fraction: 0.1,
            max_init_passes: 10,
            hd_time_split: 0.5,
            ul_bound: UlBound::Filter,
            solver: SolverSettings::default(),
        }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.k == 0 || self.l == 0 || self.nt == 0 || self.nr == 0 {
            return bad("k, l, nt and nr must be at least 1");
        }
        if self.ne.len() != self.m {
            return bad("ne must list one antenna count per eavesdropper");
        }
        if self.ne.iter().any(|&n| n == 0) {
            return bad("every eavesdropper needs at least one antenna");
        }
        let finite_pos = |x: f64| x.is_finite() && x > 0.0;
        if !finite_pos(self.pbs_max) || !finite_pos(self.pu_max) || !finite_pos(self.sigma2) {
            return bad("powers must be positive");
        }
        if !(0.0..1.0).contains(&self.sigma_si) {
            return bad("sigma_si must lie in [0, 1)");
        }
        if !(self.eps_outage > 0.0 && self.eps_outage < 1.0) {
            return bad("eps_outage must lie in (0, 1)");
        }
        if !finite_pos(self.sca_tol) || self.max_iters == 0 {
            return bad("sca_tol must be positive and max_iters nonzero");
        }
        if !(self.rbar_ul >= 0.0) || !(self.eta_bar_min.is_finite()) {
            return bad("rbar_ul must be nonnegative");
        }
        if !(self.inner_radius > 0.0 && self.inner_radius < self.cell_radius) {
            return bad("inner_radius must be positive and below cell_radius");
        }
        if !(self.min_bs_distance >= 0.0) {
            return bad("min_bs_distance must be nonnegative");
        }
        if !(0.0..1.0).contains(&self.init_an_fraction) {
            return bad("init_an_fraction must lie in [0, 1)");
        }
        if !(self.hd_time_split > 0.0 && self.hd_time_split < 1.0) {
            return bad("hd_time_split must lie in (0, 1)");
        }
        if self.max_init_passes == 0 {
            return bad("max_init_passes must be nonzero");
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SystemConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// UL secrecy-rate target in nats/s/Hz.
    pub fn rbar_ul_nats(&self) -> f64 {
        self.rbar_ul * std::f64::consts::LN_2
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Path loss in dB for a distance in km.
pub fn pathloss_db(d_km: f64, los: bool) -> Result<f64> {
    if !(d_km > 0.0) {
        return Err(Error::Domain(format!("distance must be positive, got {d_km}")));
    }
    Ok(if los {
        103.8 + 20.9 * d_km.log10()
    } else {
        145.4 + 37.5 * d_km.log10()
    })
}

/// Noise power in watts from a PSD in dBm/Hz over a bandwidth in Hz.
pub fn noise_power(psd_dbm_per_hz: f64, bandwidth_hz: f64) -> f64 {
    dbm_to_watts(psd_dbm_per_hz + 10.0 * bandwidth_hz.log10())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
    /// 0 = inner zone, 1 = outer zone.
    pub zone: usize,
}

impl Position {
    pub fn bs_distance(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Users are stored zone-major: all zone-0 users first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub dl: Vec<Position>,
    pub ul: Vec<Position>,
    pub eves: Vec<Position>,
}

impl Topology {
    /// Distance in meters from UL user `ul` to DL user `dl`.
    pub fn ul_dl_distance(&self, ul: usize, dl: usize) -> f64 {
        self.ul[ul].distance(&self.dl[dl])
    }
}

const MAX_REJECTIONS: usize = 1_000_000;
// User-to-user links closer than this are evaluated at this distance.
const MIN_LINK_DISTANCE: f64 = 1.0;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn place(rng: &mut ChaCha8Rng, r_in: f64, r_out: f64, min_d: f64, zone: usize) -> Result<Position> {
    for _ in 0..MAX_REJECTIONS {
        let u: f64 = rng.random();
        let r = (r_in * r_in + u * (r_out * r_out - r_in * r_in)).sqrt();
        let th = rng.random::<f64>() * std::f64::consts::TAU;
        if r >= min_d {
            return Ok(Position { x: r * th.cos(), y: r * th.sin(), zone });
        }
    }
    Err(Error::Geometry(MAX_REJECTIONS))
}

pub fn sample_topology(config: &SystemConfig, seed: u64) -> Result<Topology> {
    let mut rng = rng_for(seed, 0);
    let zone_radii = [(0.0, config.inner_radius), (config.inner_radius, config.cell_radius)];
    let mut draw = |zone: usize| {
        let (a, b) = zone_radii[zone];
        place(&mut rng, a, b, config.min_bs_distance, zone)
    };
    let mut dl = Vec::with_capacity(2 * config.k);
    let mut ul = Vec::with_capacity(2 * config.l);
    for zone in 0..2 {
        for _ in 0..config.k {
            dl.push(draw(zone)?);
        }
    }
    for zone in 0..2 {
        for _ in 0..config.l {
            ul.push(draw(zone)?);
        }
    }
    let mut eves = Vec::with_capacity(config.m);
    for m in 0..config.m {
        eves.push(draw(m % 2)?);
    }
    Ok(Topology { dl, ul, eves })
}

/// Eavesdropper channel knowledge: instantaneous draws or second moments.
#[derive(Clone, Debug, PartialEq)]
pub enum EveCsi<T: Scalar> {
    Full {
        /// BS transmit array to Eve, Nt x Ne.
        h: CMat<T>,
        /// BS receive array to Eve, Nr x Ne (used by the HD baseline).
        h_rx: CMat<T>,
        /// Per UL user, Ne entries.
        g: Vec<CVec<T>>,
    },
    Stats {
        /// E{H H^H} over the Nt transmit antennas.
        hbar: CMat<T>,
        /// E{H_rx H_rx^H} over the Nr receive antennas.
        hbar_rx: CMat<T>,
        /// E{g g^H} per UL user.
        gbar: Vec<T>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct EveChannels<T: Scalar> {
    pub ne: usize,
    /// Large-scale gain of the BS link.
    pub bs_gain: T,
    /// Large-scale gain from each UL user.
    pub ul_gain: Vec<T>,
    pub csi: EveCsi<T>,
}

/// One draw of every channel in the cell.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSet<T: Scalar> {
    pub nt: usize,
    pub nr: usize,
    pub dl_zone: Vec<usize>,
    pub ul_zone: Vec<usize>,
    /// BS transmit array to each DL user.
    pub h: Vec<CVec<T>>,
    /// Each UL user to the BS receive array.
    pub g: Vec<CVec<T>>,
    /// CCI, indexed `[dl][ul]`.
    pub f: DMatrix<Complex<T>>,
    /// Loop channel, Nt x Nr, unit mean power per entry.
    pub g_si: CMat<T>,
    pub eves: Vec<EveChannels<T>>,
    /// BS receive array to each DL user (HD baseline only).
    pub h_rx: Vec<CVec<T>>,
    /// Each UL user to the BS transmit array (HD baseline only).
    pub g_tx: Vec<CVec<T>>,
}

fn cn<T: Scalar>(rng: &mut ChaCha8Rng, scale: f64) -> Complex<T> {
    let s = scale * std::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(T::lit(s * re), T::lit(s * im))
}

fn cn_vec<T: Scalar>(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> CVec<T> {
    CVec::from_fn(n, |_, _| cn(rng, scale))
}

fn cn_mat<T: Scalar>(rng: &mut ChaCha8Rng, r: usize, c: usize, scale: f64) -> CMat<T> {
    let mut m = CMat::zeros(r, c);
    for j in 0..c {
        for i in 0..r {
            m[(i, j)] = cn(rng, scale);
        }
    }
    m
}

fn gain(d_m: f64, los: bool) -> f64 {
    let pl = pathloss_db(d_m.max(MIN_LINK_DISTANCE) / 1000.0, los).expect("positive distance");
    10f64.powf(-pl / 10.0)
}

pub fn sample_channels<T: Scalar>(topo: &Topology, config: &SystemConfig, seed: u64) -> ChannelSet<T> {
    let mut rng = rng_for(seed, 1);
    let (nt, nr) = (config.nt, config.nr);
    let h = topo
        .dl
        .iter()
        .map(|p| cn_vec(&mut rng, nt, gain(p.bs_distance(), true).sqrt()))
        .collect();
    let g = topo
        .ul
        .iter()
        .map(|p| cn_vec(&mut rng, nr, gain(p.bs_distance(), true).sqrt()))
        .collect();
    let mut f = DMatrix::from_element(topo.dl.len(), topo.ul.len(), Complex::new(T::zero(), T::zero()));
    for k in 0..topo.dl.len() {
        for l in 0..topo.ul.len() {
            f[(k, l)] = cn(&mut rng, gain(topo.ul_dl_distance(l, k), false).sqrt());
        }
    }
    let kf = db_to_linear(config.rician_k_si_db);
    let los = (kf / (kf + 1.0)).sqrt();
    let nlos = (1.0 / (kf + 1.0)).sqrt();
    let mut g_si = CMat::zeros(nt, nr);
    for j in 0..nr {
        for i in 0..nt {
            g_si[(i, j)] = Complex::new(T::lit(los), T::zero()) + cn::<T>(&mut rng, nlos);
        }
    }
    let mut eves = Vec::with_capacity(topo.eves.len());
    for (m, p) in topo.eves.iter().enumerate() {
        let ne = config.ne[m];
        let bs_gain = gain(p.bs_distance(), true);
        let ul_gain: Vec<f64> = topo.ul.iter().map(|u| gain(u.distance(p), true)).collect();
        let hm = cn_mat(&mut rng, nt, ne, bs_gain.sqrt());
        let gm = ul_gain.iter().map(|&gu| cn_vec(&mut rng, ne, gu.sqrt())).collect();
        let h_rx = cn_mat(&mut rng, nr, ne, bs_gain.sqrt());
        eves.push(EveChannels {
            ne,
            bs_gain: T::lit(bs_gain),
            ul_gain: ul_gain.iter().map(|&x| T::lit(x)).collect(),
            csi: EveCsi::Full { h: hm, h_rx, g: gm },
        });
    }
    let h_rx = topo
        .dl
        .iter()
        .map(|p| cn_vec(&mut rng, nr, gain(p.bs_distance(), true).sqrt()))
        .collect();
    let g_tx = topo
        .ul
        .iter()
        .map(|p| cn_vec(&mut rng, nt, gain(p.bs_distance(), true).sqrt()))
        .collect();
    ChannelSet {
        nt,
        nr,
        dl_zone: topo.dl.iter().map(|p| p.zone).collect(),
        ul_zone: topo.ul.iter().map(|p| p.zone).collect(),
        h,
        g,
        f,
        g_si,
        eves,
        h_rx,
        g_tx,
    }
}

/// Replaces instantaneous Eve channels by their second moments under the draw model.
pub fn derive_scsi<T: Scalar>(channels: &ChannelSet<T>) -> ChannelSet<T> {
    let mut out = channels.clone();
    let (nt, nr) = (channels.nt, channels.nr);
    for e in out.eves.iter_mut() {
        let s = T::lit(e.ne as f64);
        let eye = |n: usize| CMat::<T>::identity(n, n) * Complex::new(s * e.bs_gain, T::zero());
        e.csi = EveCsi::Stats {
            hbar: eye(nt),
            hbar_rx: eye(nr),
            gbar: e.ul_gain.iter().map(|&gu| s * gu).collect(),
        };
    }
    out
}

impl<T: Scalar> ChannelSet<T> {
    pub fn n_dl(&self) -> usize {
        self.h.len()
    }

    pub fn n_ul(&self) -> usize {
        self.g.len()
    }

    /// Short content hash used to check that paired runs saw the same draw.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        let mut put = |z: &Complex<T>| {
            hasher.update(z.re.to_f64_lossy().to_le_bytes());
            hasher.update(z.im.to_f64_lossy().to_le_bytes());
        };
        self.h.iter().chain(&self.g).chain(&self.h_rx).chain(&self.g_tx).for_each(|v| v.iter().for_each(&mut put));
        self.f.iter().for_each(&mut put);
        self.g_si.iter().for_each(&mut put);
        for e in &self.eves {
            match &e.csi {
                EveCsi::Full { h, h_rx, g } => {
                    h.iter().chain(h_rx.iter()).for_each(&mut put);
                    g.iter().for_each(|v| v.iter().for_each(&mut put));
                }
                EveCsi::Stats { hbar, hbar_rx, gbar } => {
                    hbar.iter().chain(hbar_rx.iter()).for_each(&mut put);
                    gbar.iter().for_each(|x| put(&Complex::new(*x, T::zero())));
                }
            }
        }
        let out = hasher.finalize();
        out.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-300)
    }

    #[test]
    fn pathloss_reference_points() {
        assert!(close(pathloss_db(1.0, true).unwrap(), 103.8, 1e-12));
        assert!(close(pathloss_db(1.0, false).unwrap(), 145.4, 1e-12));
        assert!(close(pathloss_db(0.1, true).unwrap(), 103.8 - 20.9, 1e-12));
        assert!(pathloss_db(0.0, true).is_err());
        assert!(pathloss_db(-1.0, false).is_err());
    }

    #[test]
    fn noise_reference_points() {
        assert!(close(noise_power(-174.0, 1e7), 10f64.powf(-13.4), 1e-12));
        assert!(close(noise_power(0.0, 1.0), 1e-3, 1e-12));
        assert!(close(watts_to_dbm(noise_power(-174.0, 1.0)), -174.0, 1e-12));
    }

    #[test]
    fn default_topology_zone_counts() {
        let cfg = SystemConfig::default();
        let t = sample_topology(&cfg, 7).unwrap();
        assert_eq!((t.dl.len(), t.ul.len(), t.eves.len()), (4, 4, 2));
        for zone in 0..2 {
            assert_eq!(t.dl.iter().filter(|p| p.zone == zone).count(), 2);
            assert_eq!(t.ul.iter().filter(|p| p.zone == zone).count(), 2);
            assert_eq!(t.eves.iter().filter(|p| p.zone == zone).count(), 1);
        }
        assert_eq!(t, sample_topology(&cfg, 7).unwrap());
    }

    #[test]
    fn topology_respects_radii() {
        let cfg = SystemConfig::default();
        let mut max_d: f64 = 0.0;
        for seed in 0..1000 {
            let t = sample_topology(&cfg, seed).unwrap();
            for p in t.dl.iter().chain(&t.ul).chain(&t.eves) {
                let d = p.bs_distance();
                assert!(d >= cfg.min_bs_distance);
                if p.zone == 0 {
                    assert!(d <= cfg.inner_radius);
                } else {
                    assert!(d >= cfg.inner_radius);
                }
                max_d = max_d.max(d);
            }
        }
        assert!(max_d <= cfg.cell_radius);
    }

    #[test]
    fn impossible_geometry_is_reported() {
        let cfg = SystemConfig { min_bs_distance: 500.0, ..SystemConfig::default() };
        assert!(matches!(sample_topology(&cfg, 1), Err(Error::Geometry(_))));
    }

    #[test]
    fn dl_gain_matches_pathloss_on_average() {
        let cfg = SystemConfig::default();
        let topo = sample_topology(&cfg, 3).unwrap();
        let d = topo.dl[0].bs_distance();
        let expect = cfg.nt as f64 * 10f64.powf(-pathloss_db(d / 1000.0, true).unwrap() / 10.0);
        let n = 10_000;
        let mean: f64 = (0..n)
            .map(|s| crate::scalar::norm_sq(&sample_channels::<f64>(&topo, &cfg, s).h[0]))
            .sum::<f64>()
            / n as f64;
        assert!(close(mean, expect, 0.03), "{mean} vs {expect}");
    }

    #[test]
    fn si_rician_power_split() {
        let cfg = SystemConfig { m: 0, ne: vec![], ..SystemConfig::default() };
        let topo = sample_topology(&cfg, 3).unwrap();
        let n = 10_000;
        let (mut det, mut scat) = (0.0, 0.0);
        let los = (db_to_linear(5.0) / (db_to_linear(5.0) + 1.0)).sqrt();
        for s in 0..n {
            let z = sample_channels::<f64>(&topo, &cfg, s).g_si[(1, 2)];
            det += los * los;
            scat += (z - Complex::new(los, 0.0)).norm_sqr();
        }
        assert!(close(det / scat, db_to_linear(5.0), 0.03), "{}", det / scat);
    }

    #[test]
    fn channels_are_deterministic() {
        let cfg = SystemConfig::default();
        let topo = sample_topology(&cfg, 11).unwrap();
        let a = sample_channels::<f64>(&topo, &cfg, 11);
        let b = sample_channels::<f64>(&topo, &cfg, 11);
        assert_eq!(a, b);
        assert_eq!(a.digest(), b.digest());
        assert_ne!(a.digest(), sample_channels::<f64>(&topo, &cfg, 12).digest());
    }

    #[test]
    fn scsi_moments_follow_draw_model() {
        let cfg = SystemConfig::default();
        let topo = sample_topology(&cfg, 5).unwrap();
        let mut ch = sample_channels::<f64>(&topo, &cfg, 5);
        ch.eves[0].bs_gain = 1e-9;
        ch.eves[1].bs_gain = 0.0;
        let s = derive_scsi(&ch);
        match &s.eves[0].csi {
            EveCsi::Stats { hbar, gbar, .. } => {
                let want = CMat::<f64>::identity(5, 5) * Complex::new(2e-9, 0.0);
                assert!((hbar - want).norm() < 1e-24);
                assert!(gbar.iter().all(|&x| x >= 0.0));
            }
            _ => panic!("expected statistics"),
        }
        match &s.eves[1].csi {
            EveCsi::Stats { hbar, .. } => assert_eq!(hbar.norm(), 0.0),
            _ => panic!("expected statistics"),
        }
    }

    #[test]
    fn config_roundtrip_and_validation() {
        let cfg = SystemConfig::default();
        let back = SystemConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, back);
        assert!(SystemConfig::from_toml("k = 3\nbogus = 1\n").is_err());
        assert!(SystemConfig::from_toml("sigma_si = 1.5\n").is_err());
        assert!(SystemConfig::from_toml("inner_radius = 200.0\n").is_err());
        let partial = SystemConfig::from_toml("k = 3\n").unwrap();
        assert_eq!(partial.k, 3);
        assert_eq!(partial.l, 2);
    }

    #[test]
    fn mode_and_scheme_parse() {
        assert_eq!("wcs-dl".parse::<Mode>().unwrap(), Mode::new(EveModel::Wcs, Objective::MaxminDl));
        assert_eq!("ewci".parse::<Mode>().unwrap().to_string(), "ewci");
        assert_eq!("hd".parse::<Scheme>().unwrap(), Scheme::Hd);
        assert!("xyz".parse::<Scheme>().is_err());
    }
}
