use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::run::{RunOutput, CERTIFICATE_FILE};
use crate::{Error, Result};

pub const CSV_HEADER: &str = "t,node,x,u,z,w";

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// One row per `(t, node)`, nodes numbered from 1. The closing state
/// `X(steps)` has empty `u`, `z`, `w` fields.
pub fn write_csv(out: &RunOutput) -> String {
    let log = &out.log;
    let (n, steps) = (log.n(), log.t());
    let mut s = String::with_capacity((steps + 1) * n * 96);
    s.push_str(CSV_HEADER);
    s.push('\n');
    for t in 0..steps {
        let (x, u, z, w) = (log.x(t), log.u(t), log.z(t), &out.disturbances[t]);
        for i in 0..n {
            let _ = writeln!(s, "{t},{},{},{},{},{}", i + 1, num(x[i]), num(u[i]), num(z[i]), num(w[i]));
        }
    }
    for (i, &v) in log.x(steps).iter().enumerate() {
        let _ = writeln!(s, "{steps},{},{},,,", i + 1, num(v));
    }
    s
}

/// Writes `trajectory.csv`, `summary.json` and, for adversarial runs,
/// the certificate into `dir`.
pub fn write_run(out: &RunOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("trajectory.csv"), write_csv(out))?;
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&out.summary)?)?;
    if let Some(cert) = out.adversary.as_ref().and_then(|a| a.certificate.as_ref()) {
        fs::write(dir.join(CERTIFICATE_FILE), serde_json::to_string_pretty(cert)?)?;
    }
    Ok(())
}

/// Parses `a:b:step` into the inclusive grid `a, a+step, …` up to `b`.
pub fn parse_range(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::Config(format!("range `{s}` must look like start:end:step"));
    let parts: Vec<f64> = s.split(':').map(|p| p.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|_| bad())?;
    let [a, b, h] = parts[..] else { return Err(bad()) };
    if !(a.is_finite() && b.is_finite() && h > 0.0 && h.is_finite() && b >= a) {
        return Err(bad());
    }
    let count = ((b - a) / h + 1e-9).floor() as usize;
    if count > 100_000 {
        return Err(Error::Config(format!("range `{s}` has too many points")));
    }
    Ok((0..=count).map(|k| a + k as f64 * h).collect())
}
