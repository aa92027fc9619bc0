//! CSV writers. Numbers use 17 significant digits; lines end in LF.

use std::io::Write;

use super::EnsembleStats;
use crate::diagnostics::{CheckRow, ConcentrationReport};
use crate::error::Result;
use crate::integrator::Path;

pub const ENSEMBLE_HEADER: &str = "t,metric,mean,var,ci_lo,ci_hi,n_paths";
pub const CONCENTRATION_HEADER: &str = "t,eps,q0,q1_hat,empirical_tail,bound,se";
pub const PATH_PREFIXES: [&str; 6] = ["x", "y", "m", "w", "f", "s"];
pub const CHECKS_HEADER: &str = "check,item,bound,observed,verdict";

/// Shortest-exact scientific notation with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Counts the bytes passed to the inner writer.
struct Counting<W> {
    inner: W,
    bytes: usize,
}

impl<W: Write> Write for Counting<W> {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.bytes += n;
        Ok(n)
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.inner.flush()
    }
}

fn counted(out: impl Write, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<usize> {
    let mut w = Counting { inner: out, bytes: 0 };
    body(&mut w)?;
    w.flush()?;
    Ok(w.bytes)
}

/// `t,metric,mean,var,ci_lo,ci_hi,n_paths`, metric by metric.
pub fn export_stats_csv(stats: &EnsembleStats, out: impl Write) -> Result<usize> {
    counted(out, |w| {
        writeln!(w, "{ENSEMBLE_HEADER}")?;
        for (name, s) in &stats.metrics {
            for k in 0..s.times.len() {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{}",
                    num(s.times[k]),
                    name,
                    num(s.mean[k]),
                    num(s.var[k]),
                    num(s.ci_lo[k]),
                    num(s.ci_hi[k]),
                    s.n_paths
                )?;
            }
        }
        Ok(())
    })
}

/// `t,x_0..,y_..,m_..,w_..,f_..,s_..` on every `thin`-th grid point and the
/// last one; `f` and `s` are the running drift and noise sums.
pub fn export_path_csv(path: &Path, thin: usize, out: impl Write) -> Result<usize> {
    let d = path.dim();
    let thin = thin.max(1);
    counted(out, |w| {
        let mut header = vec!["t".to_string()];
        for prefix in PATH_PREFIXES {
            header.extend((0..d).map(|i| format!("{prefix}_{i}")));
        }
        writeln!(w, "{}", header.join(","))?;
        let last = path.len().saturating_sub(1);
        for k in (0..path.len()).filter(|&k| k % thin == 0 || k == last) {
            let mut fields = vec![num(path.times[k])];
            for series in [&path.x, &path.y, &path.m, &path.w, &path.drift, &path.noise] {
                fields.extend(series[k].iter().map(|&v| num(v)));
            }
            writeln!(w, "{}", fields.join(","))?;
        }
        Ok(())
    })
}

/// `t,eps,q0,q1_hat,empirical_tail,bound,se`.
pub fn export_concentration_csv(report: Option<&ConcentrationReport>, out: impl Write) -> Result<usize> {
    counted(out, |w| {
        writeln!(w, "{CONCENTRATION_HEADER}")?;
        if let Some(r) = report {
            for i in 0..r.times.len() {
                for j in 0..r.eps_levels.len() {
                    writeln!(
                        w,
                        "{},{},{},{},{},{},{}",
                        num(r.times[i]),
                        num(r.eps_levels[j]),
                        num(r.q0[i]),
                        num(r.q1_hat[i]),
                        num(r.empirical_tail[i][j]),
                        num(r.bound[j]),
                        num(r.standard_errors[i][j])
                    )?;
                }
            }
        }
        Ok(())
    })
}

/// `check,item,bound,observed,verdict`.
pub fn export_checks_csv(rows: &[CheckRow], out: impl Write) -> Result<usize> {
    counted(out, |w| {
        writeln!(w, "{CHECKS_HEADER}")?;
        for r in rows {
            writeln!(
                w,
                "{},{},{},{},{}",
                r.check,
                r.item,
                num(r.bound),
                num(r.observed),
                r.verdict.as_str()
            )?;
        }
        Ok(())
    })
}
