//! CSV output: version header, config echo as comments, then one row per
//! output time with 17 significant digits, LF line endings. Values written
//! here round-trip bit-exactly through `f64` parsing.

use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::observables::ObservableSeries;
use crate::scenarios::runner::ScenarioError;

/// Render a series to the on-disk CSV format.
pub fn render_csv(series: &ObservableSeries, config_echo: &[(String, String)]) -> String {
    let mut out = String::new();
    out.push_str(&format!("# {} v{}\n", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")));
    for (k, v) in config_echo {
        out.push_str(&format!("# {k} = {v}\n"));
    }
    out.push_str("t_fs");
    for (name, _) in &series.channels {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for i in 0..series.len() {
        out.push_str(&format!("{:.16e}", series.times_fs[i]));
        for (_, values) in &series.channels {
            out.push_str(&format!(",{:.16e}", values[i]));
        }
        out.push('\n');
    }
    out
}

/// Write the CSV and return the SHA-256 digest of its bytes. A partially
/// written file is removed on failure.
pub fn write_csv(
    series: &ObservableSeries,
    config_echo: &[(String, String)],
    path: &Path,
) -> Result<String, ScenarioError> {
    let text = render_csv(series, config_echo);
    let write = || -> std::io::Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(text.as_bytes())?;
        f.sync_all()
    };
    if let Err(e) = write() {
        let _ = std::fs::remove_file(path);
        return Err(ScenarioError::Io { path: path.display().to_string(), source: e });
    }
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    Ok(format!("{:x}", hasher.finalize()))
}

/// Parse a CSV produced by [`render_csv`]; comments are skipped.
pub fn parse_csv(text: &str) -> Option<ObservableSeries> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next()?;
    let mut cols = header.split(',');
    if cols.next()? != "t_fs" {
        return None;
    }
    let names: Vec<&str> = cols.collect();
    let mut series = ObservableSeries::new(&names);
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let t: f64 = parts.next()?.parse().ok()?;
        let values: Vec<f64> = parts.map(|p| p.parse().ok()).collect::<Option<_>>()?;
        if values.len() != names.len() {
            return None;
        }
        series.push_row(t, &values);
    }
    Some(series)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_bit_exact() {
        let mut s = ObservableSeries::new(&["A_au", "n_H"]);
        s.push_row(0.0, &[0.1234567890123456789, 1e-21]);
        s.push_row(2.0, &[-3.9e-12, 0.9999999999999999]);
        let text = render_csv(&s, &[("grid.N_k".into(), "64".into())]);
        assert!(text.starts_with(&format!("# driven-lattice-sim v{}\n", env!("CARGO_PKG_VERSION"))));
        assert!(text.contains("# grid.N_k = 64\n"));
        assert!(!text.contains('\r'));

        let back = parse_csv(&text).unwrap();
        assert_eq!(back.len(), 2);
        for (orig, parsed) in s.channels.iter().zip(back.channels.iter()) {
            assert_eq!(orig.0, parsed.0);
            for (a, b) in orig.1.iter().zip(parsed.1.iter()) {
                assert_eq!(a.to_bits(), b.to_bits(), "bit-exact roundtrip");
            }
        }
    }

    #[test]
    fn empty_series_gives_header_only() {
        let s = ObservableSeries::new(&["J_au"]);
        let text = render_csv(&s, &[]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2); // version + column header
        assert_eq!(lines[1], "t_fs,J_au");
    }

    #[test]
    fn write_reports_digest_and_is_stable() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        let mut s = ObservableSeries::new(&["J_au"]);
        s.push_row(0.0, &[0.5]);
        let d1 = write_csv(&s, &[], &path).unwrap();
        let d2 = write_csv(&s, &[], &path).unwrap();
        assert_eq!(d1, d2);
        assert_eq!(d1.len(), 64);
        assert!(path.exists());
    }

    #[test]
    fn failed_write_leaves_no_partial_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("no_such_subdir").join("out.csv");
        let s = ObservableSeries::new(&["J_au"]);
        assert!(write_csv(&s, &[], &path).is_err());
        assert!(!path.exists());
    }
}
