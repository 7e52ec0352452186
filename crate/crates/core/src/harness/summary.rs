use super::record::{fmt_float, ResultRecord};
use crate::scenario::{Mode, Scheme};
use std::collections::HashMap;
use std::fmt;

/// Statistics of one (sweep value, mode, scheme) cell over its ok records.
#[derive(Clone, Debug, PartialEq)]
pub struct CellStats {
    pub sweep_value: f64,
    pub mode: Mode,
    pub scheme: Scheme,
    pub records: usize,
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation; zero for a single record.
    pub std: f64,
    /// Mean over the records whose min-SR is above zero.
    pub mean_nonzero: f64,
    pub count_nonzero: usize,
    pub an_mean: f64,
    pub iter_mean: f64,
}

/// Paired gain of `scheme` over `baseline`, on runs where both are ok.
#[derive(Clone, Debug, PartialEq)]
pub struct Gain {
    pub sweep_value: f64,
    pub mode: Mode,
    pub scheme: Scheme,
    pub baseline: Scheme,
    pub pairs: usize,
    /// bits/s/Hz
    pub abs_gain: f64,
    pub pct_gain: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Summary {
    pub cells: Vec<CellStats>,
    pub gains: Vec<Gain>,
}

impl Summary {
    pub fn cell(&self, sweep_value: f64, mode: Mode, scheme: Scheme) -> Option<&CellStats> {
        self.cells.iter().find(|c| c.sweep_value == sweep_value && c.mode == mode && c.scheme == scheme)
    }

    pub fn gain(&self, sweep_value: f64, mode: Mode, scheme: Scheme, baseline: Scheme) -> Option<&Gain> {
        self.gains
            .iter()
            .find(|g| g.sweep_value == sweep_value && g.mode == mode && g.scheme == scheme && g.baseline == baseline)
    }
}

pub fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

pub fn sample_std(v: &[f64]) -> f64 {
    match v.len() {
        0 => f64::NAN,
        1 => 0.0,
        n => {
            let m = mean(v);
            (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        }
    }
}

fn rank(s: Scheme) -> usize {
    Scheme::ALL.iter().position(|&x| x == s).unwrap_or(usize::MAX)
}

fn first_seen<T: PartialEq + Copy>(items: impl Iterator<Item = T>) -> Vec<T> {
    let mut out = vec![];
    for x in items {
        if !out.contains(&x) {
            out.push(x);
        }
    }
    out
}

/// Per-cell statistics and pairwise scheme gains. Cells appear in the order
/// their sweep values and modes first occur; schemes in their fixed order.
pub fn summarize(records: &[ResultRecord]) -> Summary {
    let values = first_seen(records.iter().map(|r| r.sweep_value.to_bits()));
    let modes = first_seen(records.iter().map(|r| r.mode));
    let mut schemes = first_seen(records.iter().map(|r| r.scheme));
    schemes.sort_by_key(|&s| rank(s));
    let mut out = Summary::default();
    for &vb in &values {
        let value = f64::from_bits(vb);
        for &mode in &modes {
            let here: Vec<&ResultRecord> = records.iter().filter(|r| r.sweep_value.to_bits() == vb && r.mode == mode).collect();
            let mut by_run: HashMap<(Scheme, usize), f64> = HashMap::new();
            for &scheme in &schemes {
                let all: Vec<&&ResultRecord> = here.iter().filter(|r| r.scheme == scheme).collect();
                if all.is_empty() {
                    continue;
                }
                let ok: Vec<&&ResultRecord> = all.iter().copied().filter(|r| r.is_ok()).collect();
                let sr: Vec<f64> = ok.iter().map(|r| r.min_sr).collect();
                let nonzero: Vec<f64> = sr.iter().copied().filter(|&x| x > 0.0).collect();
                for r in &ok {
                    by_run.insert((scheme, r.run), r.min_sr);
                }
                out.cells.push(CellStats {
                    sweep_value: value,
                    mode,
                    scheme,
                    records: all.len(),
                    count: sr.len(),
                    mean: mean(&sr),
                    std: sample_std(&sr),
                    mean_nonzero: mean(&nonzero),
                    count_nonzero: nonzero.len(),
                    an_mean: mean(&ok.iter().map(|r| r.an_fraction).collect::<Vec<_>>()),
                    iter_mean: mean(&ok.iter().map(|r| r.iterations as f64).collect::<Vec<_>>()),
                });
            }
            for (ai, &a) in schemes.iter().enumerate() {
                for &b in &schemes[ai + 1..] {
                    let mut pa = vec![];
                    let mut pb = vec![];
                    let mut runs: Vec<usize> = by_run.keys().filter(|(s, _)| *s == a).map(|&(_, r)| r).collect();
                    runs.sort_unstable();
                    for r in runs {
                        if let Some(&y) = by_run.get(&(b, r)) {
                            pa.push(by_run[&(a, r)]);
                            pb.push(y);
                        }
                    }
                    let (ma, mb) = (mean(&pa), mean(&pb));
                    out.gains.push(Gain {
                        sweep_value: value,
                        mode,
                        scheme: a,
                        baseline: b,
                        pairs: pa.len(),
                        abs_gain: ma - mb,
                        pct_gain: if mb != 0.0 { 100.0 * (ma - mb) / mb } else { f64::NAN },
                    });
                }
            }
        }
    }
    out
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "sweep_value,mode,scheme,records,count,mean,std,mean_nonzero,count_nonzero,an_mean,iter_mean")?;
        for c in &self.cells {
            writeln!(
                f,
                "{},{},{},{},{},{},{},{},{},{},{}",
                fmt_float(c.sweep_value),
                c.mode,
                c.scheme,
                c.records,
                c.count,
                fmt_float(c.mean),
                fmt_float(c.std),
                fmt_float(c.mean_nonzero),
                c.count_nonzero,
                fmt_float(c.an_mean),
                fmt_float(c.iter_mean)
            )?;
        }
        writeln!(f, "sweep_value,mode,scheme,baseline,pairs,abs_gain,pct_gain")?;
        for g in &self.gains {
            writeln!(
                f,
                "{},{},{},{},{},{},{}",
                fmt_float(g.sweep_value),
                g.mode,
                g.scheme,
                g.baseline,
                g.pairs,
                fmt_float(g.abs_gain),
                fmt_float(g.pct_gain)
            )?;
        }
        Ok(())
    }
}
