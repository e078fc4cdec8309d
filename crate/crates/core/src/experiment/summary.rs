use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::swarm::EventKind;

use super::records::RunLog;

/// Mean across seeds (population std) of one series at one jump.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub series: String,
    pub t: u64,
    pub acc_mean: f64,
    pub acc_std: f64,
    pub loss_mean: f64,
    pub loss_std: f64,
    pub cum_sgd_mean: f64,
    pub cum_sgd_std: f64,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesSummary {
    pub series: String,
    pub value: Option<f64>,
    pub runs: usize,
    pub final_acc_mean: f64,
    pub final_acc_std: f64,
    /// Accuracy averaged over the last `tail_frac` of jumps.
    pub tail_acc_mean: f64,
    pub tail_acc_std: f64,
    pub cum_sgd_mean: f64,
    pub cum_sgd_std: f64,
    /// Aggregation events (collisions and rendezvous) per run.
    pub collisions_mean: f64,
    /// Walker-jumps per aggregation participation, pooled over runs;
    /// infinite when no walker ever aggregated.
    pub collision_interval: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub metrics: Vec<MetricsRow>,
    pub series: Vec<SeriesSummary>,
}

/// Per-run curves reduced over walkers.
struct RunCurve {
    times: Vec<u64>,
    acc: Vec<f64>,
    loss: Vec<f64>,
    cum_sgd: Vec<f64>,
    total_sgd: f64,
    aggregations: usize,
    participations: usize,
    tail_acc: f64,
}

fn run_curve(log: &RunLog) -> Result<RunCurve> {
    let h = &log.header;
    let bad = |msg: String| Error::Log(format!("run '{}': {msg}", h.run_id));
    let w = h.walkers;
    if w == 0 || h.jumps == 0 {
        return Err(bad("empty run".into()));
    }
    if log.jumps.len() as u64 != h.jumps * w as u64 {
        return Err(bad(format!(
            "{} jump records, expected {}",
            log.jumps.len(),
            h.jumps * w as u64
        )));
    }
    let mut curve = RunCurve {
        times: Vec::new(),
        acc: Vec::new(),
        loss: Vec::new(),
        cum_sgd: Vec::new(),
        total_sgd: 0.0,
        aggregations: 0,
        participations: 0,
        tail_acc: 0.0,
    };
    for (k, chunk) in log.jumps.chunks(w).enumerate() {
        let t = k as u64 + 1;
        if chunk.iter().any(|r| r.t != t || r.run_id != h.run_id) {
            return Err(bad(format!("records out of order at jump {t}")));
        }
        curve.total_sgd += chunk.iter().map(|r| r.iters as f64).sum::<f64>();
        let evaluated = chunk.iter().filter(|r| r.acc.is_some()).count();
        if evaluated == 0 {
            continue;
        }
        if evaluated != w {
            return Err(bad(format!("partial evaluation at jump {t}")));
        }
        let mut acc = 0.0;
        let mut loss = 0.0;
        for r in chunk {
            let a = r.acc.unwrap_or(0.0);
            if !(0.0..=1.0).contains(&a) {
                return Err(bad(format!("accuracy {a} out of range")));
            }
            acc += a;
            loss += r.loss.unwrap_or(f64::NAN);
        }
        curve.times.push(t);
        curve.acc.push(acc / w as f64);
        curve.loss.push(loss / w as f64);
        curve.cum_sgd.push(curve.total_sgd);
    }
    if curve.times.last() != Some(&h.jumps) {
        return Err(bad("final jump was not evaluated".into()));
    }
    let tail_len = ((h.tail_frac * h.jumps as f64).ceil() as u64).max(1);
    let tail_start = h.jumps.saturating_sub(tail_len);
    let tail: Vec<f64> = curve
        .times
        .iter()
        .zip(&curve.acc)
        .filter(|(&t, _)| t > tail_start)
        .map(|(_, &a)| a)
        .collect();
    curve.tail_acc = tail.iter().sum::<f64>() / tail.len() as f64;
    for ev in &log.events {
        if matches!(ev.kind, EventKind::Collide | EventKind::Rendezvous) {
            curve.aggregations += 1;
            curve.participations += ev.walkers.len();
        }
    }
    Ok(curve)
}

/// Mean and population standard deviation.
pub(crate) fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Reduces run logs to per-jump curves and per-series summaries. Series
/// appear in the order of their first run.
pub fn summarize(logs: &[RunLog]) -> Result<Summary> {
    if logs.is_empty() {
        return Err(Error::Log("no runs to summarize".into()));
    }
    let mut order: Vec<&str> = Vec::new();
    let mut groups: BTreeMap<&str, Vec<&RunLog>> = BTreeMap::new();
    for log in logs {
        let s = log.header.series.as_str();
        if !groups.contains_key(s) {
            order.push(s);
        }
        groups.entry(s).or_default().push(log);
    }

    let mut metrics = Vec::new();
    let mut series = Vec::new();
    for name in order {
        let runs = &groups[name];
        let first = &runs[0].header;
        let mut seen = std::collections::BTreeSet::new();
        for r in runs {
            let h = &r.header;
            if h.jumps != first.jumps
                || h.walkers != first.walkers
                || h.tail_frac != first.tail_frac
                || h.value != first.value
            {
                return Err(Error::Log(format!("series '{name}' mixes incompatible runs")));
            }
            if !seen.insert(h.run_id.as_str()) {
                return Err(Error::Log(format!("duplicate run '{}'", h.run_id)));
            }
        }
        let curves = runs.iter().map(|r| run_curve(r)).collect::<Result<Vec<_>>>()?;
        if curves.iter().any(|c| c.times != curves[0].times) {
            return Err(Error::Log(format!("series '{name}' mixes evaluation cadences")));
        }
        for (k, &t) in curves[0].times.iter().enumerate() {
            let col = |f: &dyn Fn(&RunCurve) -> f64| mean_std(&curves.iter().map(f).collect::<Vec<_>>());
            let (acc_mean, acc_std) = col(&|c| c.acc[k]);
            let (loss_mean, loss_std) = col(&|c| c.loss[k]);
            let (cum_sgd_mean, cum_sgd_std) = col(&|c| c.cum_sgd[k]);
            metrics.push(MetricsRow {
                series: name.to_string(),
                t,
                acc_mean,
                acc_std,
                loss_mean,
                loss_std,
                cum_sgd_mean,
                cum_sgd_std,
                runs: curves.len(),
            });
        }
        let finals: Vec<f64> = curves.iter().map(|c| *c.acc.last().unwrap_or(&0.0)).collect();
        let tails: Vec<f64> = curves.iter().map(|c| c.tail_acc).collect();
        let sgd: Vec<f64> = curves.iter().map(|c| c.total_sgd).collect();
        let aggs: Vec<f64> = curves.iter().map(|c| c.aggregations as f64).collect();
        let parts: usize = curves.iter().map(|c| c.participations).sum();
        let walker_jumps = (first.walkers as u64 * first.jumps) as f64 * curves.len() as f64;
        let (final_acc_mean, final_acc_std) = mean_std(&finals);
        let (tail_acc_mean, tail_acc_std) = mean_std(&tails);
        let (cum_sgd_mean, cum_sgd_std) = mean_std(&sgd);
        series.push(SeriesSummary {
            series: name.to_string(),
            value: first.value,
            runs: curves.len(),
            final_acc_mean,
            final_acc_std,
            tail_acc_mean,
            tail_acc_std,
            cum_sgd_mean,
            cum_sgd_std,
            collisions_mean: mean_std(&aggs).0,
            collision_interval: if parts == 0 {
                f64::INFINITY
            } else {
                walker_jumps / parts as f64
            },
        });
    }
    Ok(Summary { metrics, series })
}

fn num(x: f64) -> String {
    if x.is_infinite() {
        "inf".into()
    } else {
        format!("{x:.6}")
    }
}

impl Summary {
    pub fn metrics_csv(&self) -> String {
        let mut s = String::from(
            "series,t,acc_mean,acc_std,loss_mean,loss_std,cum_sgd_mean,cum_sgd_std,runs\n",
        );
        for r in &self.metrics {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                r.series,
                r.t,
                num(r.acc_mean),
                num(r.acc_std),
                num(r.loss_mean),
                num(r.loss_std),
                num(r.cum_sgd_mean),
                num(r.cum_sgd_std),
                r.runs
            );
        }
        s
    }

    pub fn summary_csv(&self) -> String {
        let mut s = String::from(
            "series,value,runs,final_acc_mean,final_acc_std,tail_acc_mean,tail_acc_std,\
             cum_sgd_mean,cum_sgd_std,collisions_mean,collision_interval\n",
        );
        for r in &self.series {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.series,
                r.value.map(num).unwrap_or_default(),
                r.runs,
                num(r.final_acc_mean),
                num(r.final_acc_std),
                num(r.tail_acc_mean),
                num(r.tail_acc_std),
                num(r.cum_sgd_mean),
                num(r.cum_sgd_std),
                num(r.collisions_mean),
                num(r.collision_interval)
            );
        }
        s
    }

    pub fn get(&self, series: &str) -> Option<&SeriesSummary> {
        self.series.iter().find(|s| s.series == series)
    }

    /// Writes `metrics.csv` and `summary.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        for (name, body) in [("metrics.csv", self.metrics_csv()), ("summary.csv", self.summary_csv())] {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(|e| Error::file(&path, e))?;
        }
        Ok(())
    }
}
