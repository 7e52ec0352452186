use crate::error::{Error, Result};
use crate::scenario::{Mode, Scheme};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Status {
    Ok,
    /// The run finished but its point failed the exact audit.
    AuditFailed,
    InitFailed,
    UlInfeasible,
    SolverFailed,
    Panicked,
    Failed,
}

impl Status {
    const NAMES: [(Status, &'static str); 7] = [
        (Status::Ok, "ok"),
        (Status::AuditFailed, "audit-failed"),
        (Status::InitFailed, "init-failed"),
        (Status::UlInfeasible, "ul-infeasible"),
        (Status::SolverFailed, "solver-failed"),
        (Status::Panicked, "panicked"),
        (Status::Failed, "failed"),
    ];

    pub fn of_error(e: &Error) -> Status {
        match e {
            Error::Init(_) => Status::InitFailed,
            Error::UplinkQos(_) => Status::UlInfeasible,
            Error::Solver { .. } => Status::SolverFailed,
            _ => Status::Failed,
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = Status::NAMES.iter().find(|(s, _)| s == self).map(|(_, n)| *n).unwrap_or("failed");
        f.write_str(name)
    }
}

impl FromStr for Status {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Status::NAMES
            .iter()
            .find(|(_, n)| *n == s)
            .map(|(st, _)| *st)
            .ok_or_else(|| Error::Parse(format!("unknown status '{s}'")))
    }
}

/// One scheme in one mode on one draw. Rates in bits/s/Hz, AN fraction in
/// percent, solve time in seconds. CSV columns follow the field order.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRecord {
    pub run: usize,
    pub seed: u64,
    pub channel_hash: String,
    pub scheme: Scheme,
    pub mode: Mode,
    pub sweep_value: f64,
    pub min_sr: f64,
    /// DL users then UL users, cell-wide order.
    pub user_srs: Vec<f64>,
    pub iterations: usize,
    pub solve_time: f64,
    pub tau: Vec<f64>,
    pub an_fraction: f64,
    pub status: Status,
    /// Termination reason or error message.
    pub detail: String,
}

pub const COLUMNS: [&str; 14] = [
    "run",
    "seed",
    "channel_hash",
    "scheme",
    "mode",
    "sweep_value",
    "min_sr",
    "user_srs",
    "iterations",
    "solve_time",
    "tau",
    "an_fraction",
    "status",
    "detail",
];

/// Nine significant digits.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.8e}")
    }
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|&x| fmt_float(x)).collect::<Vec<_>>().join(";")
}

fn parse_float(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("number '{s}': {e}")))
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    if s.trim().is_empty() {
        return Ok(vec![]);
    }
    s.split(';').map(parse_float).collect()
}

fn parse_int<T: FromStr>(s: &str, what: &str) -> Result<T> {
    s.trim().parse::<T>().map_err(|_| Error::Parse(format!("{what} '{s}' is not an integer")))
}

impl ResultRecord {
    pub fn is_ok(&self) -> bool {
        self.status == Status::Ok
    }

    pub fn fields(&self) -> [String; 14] {
        [
            self.run.to_string(),
            self.seed.to_string(),
            self.channel_hash.clone(),
            self.scheme.to_string(),
            self.mode.to_string(),
            fmt_float(self.sweep_value),
            fmt_float(self.min_sr),
            fmt_list(&self.user_srs),
            self.iterations.to_string(),
            fmt_float(self.solve_time),
            fmt_list(&self.tau),
            fmt_float(self.an_fraction),
            self.status.to_string(),
            self.detail.clone(),
        ]
    }

    pub fn from_fields(r: &csv::StringRecord) -> Result<Self> {
        if r.len() != COLUMNS.len() {
            return Err(Error::Parse(format!("row has {} fields, expected {}", r.len(), COLUMNS.len())));
        }
        Ok(ResultRecord {
            run: parse_int(&r[0], "run")?,
            seed: parse_int(&r[1], "seed")?,
            channel_hash: r[2].to_string(),
            scheme: r[3].parse()?,
            mode: r[4].parse()?,
            sweep_value: parse_float(&r[5])?,
            min_sr: parse_float(&r[6])?,
            user_srs: parse_list(&r[7])?,
            iterations: parse_int(&r[8], "iterations")?,
            solve_time: parse_float(&r[9])?,
            tau: parse_list(&r[10])?,
            an_fraction: parse_float(&r[11])?,
            status: r[12].parse()?,
            detail: r[13].to_string(),
        })
    }
}

pub fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(false).from_writer(w)
}

/// Reads every record; `#` lines are skipped and the header row is checked.
pub fn read_records<R: Read>(r: R) -> Result<Vec<ResultRecord>> {
    let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).has_headers(true).from_reader(r);
    let header = rd.headers()?.clone();
    if header.iter().ne(COLUMNS.iter().copied()) {
        return Err(Error::Parse(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    rd.records().map(|row| ResultRecord::from_fields(&row?)).collect()
}

pub fn read_records_file(path: &std::path::Path) -> Result<Vec<ResultRecord>> {
    read_records(std::fs::File::open(path)?)
}
