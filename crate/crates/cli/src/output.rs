//! Report artifacts: `<kind>.csv` and the two-column `<kind>.plot.dat`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use lklab_core::RatioReport;

use crate::CliError;

/// Writes `(n, ratio)` rows under a `#` header, 12 significant digits.
pub fn emit_plotdata(report: &RatioReport, path: &Path) -> Result<(), CliError> {
    if report.rows.is_empty() {
        return Err(CliError::Invalid("empty report".into()));
    }
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# {} n ratio", report.label)?;
    for r in &report.rows {
        writeln!(w, "{} {:.11e}", r.n, r.ratio)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a file written by [`emit_plotdata`].
pub fn read_plotdata(path: &Path) -> Result<Vec<(u32, f64)>, CliError> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = || CliError::Config {
            line: i + 1,
            msg: format!("bad plot-data row {line:?}"),
        };
        let mut parts = line.split_whitespace();
        let n = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let ratio = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        if parts.next().is_some() {
            return Err(bad());
        }
        rows.push((n, ratio));
    }
    Ok(rows)
}

/// Writes both artifacts for `kind` into `dir` and returns their paths.
pub fn write_report(report: &RatioReport, dir: &Path, kind: &str) -> Result<(PathBuf, PathBuf), CliError> {
    let csv = dir.join(format!("{kind}.csv"));
    let mut w = BufWriter::new(File::create(&csv)?);
    report.write_csv(&mut w)?;
    w.flush()?;
    let dat = dir.join(format!("{kind}.plot.dat"));
    emit_plotdata(report, &dat)?;
    Ok((csv, dat))
}

#[cfg(test)]
mod tests {
    use super::*;
    use lklab_core::bounds::Criterion;

    fn report(values: &[(u32, f64)]) -> RatioReport {
        RatioReport::from_values(
            "lemma2",
            "x=1".into(),
            values.iter().map(|&(n, c)| (n, c, 3.0)),
            Criterion::TwoSided { spread: 10.0 },
        )
        .unwrap()
    }

    #[test]
    fn plotdata_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.plot.dat");
        let r = report(&[(10, 1.0), (11, 2.0 / 3.0 + 1e-3), (12, std::f64::consts::PI)]);
        emit_plotdata(&r, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("# lemma2 n ratio\n"));
        let back = read_plotdata(&path).unwrap();
        assert_eq!(back.len(), 3);
        for (row, (n, ratio)) in r.rows.iter().zip(back) {
            assert_eq!(row.n, n);
            let printed: f64 = format!("{:.11e}", row.ratio).parse().unwrap();
            assert!((printed - ratio).abs() <= 1e-12 * printed);
            // Twelve significant digits: half a unit in the last place.
            assert!((row.ratio - ratio).abs() <= 5e-12 * row.ratio);
        }
    }

    #[test]
    fn constant_series() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.plot.dat");
        emit_plotdata(&report(&[(1, 3.0), (2, 3.0), (3, 3.0)]), &path).unwrap();
        let back = read_plotdata(&path).unwrap();
        assert!(back.iter().all(|&(_, r)| r == 1.0));
    }

    #[test]
    fn rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.plot.dat");
        std::fs::write(&path, "# x\n1 2 3\n").unwrap();
        assert!(read_plotdata(&path).is_err());
    }
}
