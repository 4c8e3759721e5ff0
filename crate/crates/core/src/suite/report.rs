use std::io::{self, Write};

use serde::Serialize;

use super::ResidualReport;

pub const CSV_HEADER: &str = "name,backend,n_paths,max_resid,mean_resid,stderr,z,pass,seconds";

/// Shortest round-trip form; scientific notation for very small or large values.
pub(crate) fn num(x: f64) -> String {
    ryu::Buffer::new().format(x).to_string()
}

pub(crate) fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn csv_row(r: &ResidualReport) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{}",
        quote(&r.name),
        r.backend.name(),
        r.n_paths,
        num(r.max_resid),
        num(r.mean_resid),
        opt(r.stderr),
        opt(r.z),
        r.pass,
        opt(r.seconds)
    )
}

pub fn write_csv<W: Write>(reports: &[ResidualReport], mut w: W) -> io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in reports {
        writeln!(w, "{}", csv_row(r))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Document<'a> {
    seed: u64,
    pass: bool,
    checks: &'a [ResidualReport],
}

pub fn write_json<W: Write>(seed: u64, reports: &[ResidualReport], mut w: W) -> io::Result<()> {
    let doc = Document { seed, pass: reports.iter().all(|r| r.pass), checks: reports };
    serde_json::to_writer_pretty(&mut w, &doc)?;
    writeln!(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Backend, CheckKind};
    use std::collections::BTreeMap;

    fn report() -> ResidualReport {
        ResidualReport {
            name: "a,b".into(),
            check: CheckKind::Fukushima,
            backend: Backend::Chain,
            n_paths: 3,
            max_resid: 1e-12,
            mean_resid: 0.0,
            stderr: None,
            z: None,
            pass: true,
            seconds: None,
            tolerance: 1e-9,
            details: BTreeMap::new(),
            convergence: None,
            error: None,
        }
    }

    #[test]
    fn csv_quotes_and_blanks() {
        let mut buf = Vec::new();
        write_csv(&[report()], &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s, format!("{CSV_HEADER}\n\"a,b\",chain,3,1e-12,0.0,,,true,\n"));
    }

    #[test]
    fn empty_report_has_header() {
        let mut buf = Vec::new();
        write_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{CSV_HEADER}\n"));
    }
}
