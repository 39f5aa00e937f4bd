//! CSV and manifest emission. Every float is printed with 17 significant
//! digits ("{:.16e}"), enough to round-trip f64 exactly, so identical
//! numeric results serialize to byte-identical artifacts regardless of
//! worker count or run order.

use crate::error::{Error, Result};
use crate::experiment::{ThetaTable, VarianceReport};
use crate::galois::{FrobeniusTable, GaloisContext};
use crate::sieve::euler_phi;
use std::io::Write;

pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_theta_csv<W: Write>(w: &mut W, ctx: &GaloisContext, table: &ThetaTable) -> Result<()> {
    if table.is_empty() {
        return Err(Error::Domain("theta table has no rows".into()));
    }
    writeln!(w, "q,a,theta,main,error")?;
    let density = ctx.class_density.value();
    let mut phi_cache = (0u64, 0f64);
    for (q, a, theta) in table.iter() {
        if phi_cache.0 != q {
            phi_cache = (q, euler_phi(q) as f64);
        }
        let main = density * table.x as f64 / phi_cache.1;
        writeln!(
            w,
            "{q},{a},{},{},{}",
            fmt_float(theta),
            fmt_float(main),
            fmt_float(theta - main)
        )?;
    }
    Ok(())
}

pub fn write_variance_csv<W: Write>(w: &mut W, report: &VarianceReport) -> Result<()> {
    if report.rows.is_empty() {
        return Err(Error::Domain("variance report has no rows".into()));
    }
    writeln!(w, "x,Q,V,xQlogx,ratio")?;
    for r in &report.rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.x,
            r.q_max,
            fmt_float(r.v),
            fmt_float(r.xq_log_x),
            fmt_float(r.ratio_thm1)
        )?;
    }
    Ok(())
}

pub fn write_thm2_csv<W: Write>(w: &mut W, report: &VarianceReport) -> Result<()> {
    if report.rows.is_empty() {
        return Err(Error::Domain("asymptotic report has no rows".into()));
    }
    let (slope, intercept) = match (report.fitted_slope, report.fitted_intercept) {
        (Some(s), Some(i)) => (s, i),
        _ => {
            return Err(Error::Domain(
                "asymptotic report carries no fitted line".into(),
            ))
        }
    };
    writeln!(w, "x,S,S_over_x2,logx,fitted_slope,fitted_intercept")?;
    for r in &report.rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.x,
            fmt_float(r.v),
            fmt_float(r.s_over_x2),
            fmt_float(r.log_x),
            fmt_float(slope),
            fmt_float(intercept)
        )?;
    }
    Ok(())
}

pub fn write_frequencies_csv<W: Write>(w: &mut W, table: &FrobeniusTable) -> Result<()> {
    let freqs = crate::galois::type_frequencies(table);
    if freqs.is_empty() {
        return Err(Error::Domain("no classified primes to report".into()));
    }
    writeln!(w, "cycle_type,count,fraction")?;
    for (ty, count, fraction) in freqs {
        writeln!(w, "{ty},{count},{}", fmt_float(fraction))?;
    }
    Ok(())
}

#[derive(Debug)]
pub struct ManifestInfo<'a> {
    pub version: &'a str,
    pub subcommand: &'a str,
    pub workers: usize,
    pub wall_seconds: f64,
    pub config_text: &'a str,
}

pub fn write_manifest<W: Write>(w: &mut W, info: &ManifestInfo<'_>) -> Result<()> {
    writeln!(w, "version = {}", info.version)?;
    writeln!(w, "subcommand = {}", info.subcommand)?;
    writeln!(w, "workers = {}", info.workers)?;
    writeln!(w, "wall_seconds = {:.3}", info.wall_seconds)?;
    writeln!(w)?;
    writeln!(w, "# configuration as interpreted")?;
    write!(w, "{}", info.config_text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::VarianceRow;

    #[test]
    fn float_format_examples() {
        assert_eq!(fmt_float(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_float(-0.5), "-5.0000000000000000e-1");
        assert_eq!(fmt_float(66.83306026657525), "6.6833060266575245e1");
        assert_eq!(
            fmt_float("6.6833060266575245e1".parse().unwrap()),
            "6.6833060266575245e1"
        );
    }

    #[test]
    fn float_format_round_trips() {
        for &v in &[
            std::f64::consts::PI,
            1e-300,
            -2.2250738585072014e-308,
            98765.43210987654,
            0.1 + 0.2,
        ] {
            let parsed: f64 = fmt_float(v).parse().unwrap();
            assert_eq!(parsed.to_bits(), v.to_bits(), "{v}");
        }
    }

    fn demo_report() -> VarianceReport {
        let row = |x: u64, q: u64, v: f64| {
            let xf = x as f64;
            VarianceRow {
                x,
                q_max: q,
                v,
                xq_log_x: xf * q as f64 * xf.ln(),
                ratio_thm1: v / (xf * q as f64 * xf.ln()),
                s_over_x2: v / (xf * xf),
                log_x: xf.ln(),
            }
        };
        VarianceReport {
            rows: vec![row(10, 3, 66.83306026657525), row(100, 10, 3456.78)],
            fitted_slope: Some(1.01),
            fitted_intercept: Some(-2.5),
            fitted_cprime: None,
        }
    }

    #[test]
    fn variance_csv_shape() {
        let mut buf = Vec::new();
        write_variance_csv(&mut buf, &demo_report()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "x,Q,V,xQlogx,ratio");
        assert!(lines[1].starts_with("10,3,6.6833060266575245e1,"));
        assert!(!text.contains('\r'));
        assert!(text.ends_with('\n'));

        let single = VarianceReport {
            rows: demo_report().rows[..1].to_vec(),
            ..Default::default()
        };
        let mut buf = Vec::new();
        write_variance_csv(&mut buf, &single).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 2);
    }

    #[test]
    fn identical_reports_serialize_identically() {
        let report = demo_report();
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_variance_csv(&mut a, &report).unwrap();
        write_variance_csv(&mut b, &report).unwrap();
        assert_eq!(a, b);
        let mut a2 = Vec::new();
        let mut b2 = Vec::new();
        write_thm2_csv(&mut a2, &report).unwrap();
        write_thm2_csv(&mut b2, &report).unwrap();
        assert_eq!(a2, b2);
    }

    #[test]
    fn thm2_csv_shape() {
        let mut buf = Vec::new();
        write_thm2_csv(&mut buf, &demo_report()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x,S,S_over_x2,logx,fitted_slope,fitted_intercept");
        assert_eq!(lines.len(), 3);
        for line in &lines[1..] {
            assert_eq!(line.matches(',').count(), 5);
        }
        // fit columns repeat on every row
        assert!(lines[1].ends_with(&format!("{},{}", fmt_float(1.01), fmt_float(-2.5))));
        assert!(lines[2].ends_with(&format!("{},{}", fmt_float(1.01), fmt_float(-2.5))));
    }

    #[test]
    fn empty_reports_are_rejected() {
        let empty = VarianceReport::default();
        assert!(write_variance_csv(&mut Vec::new(), &empty).is_err());
        assert!(write_thm2_csv(&mut Vec::new(), &empty).is_err());
        // rows but no fit
        let mut no_fit = demo_report();
        no_fit.fitted_slope = None;
        assert!(write_thm2_csv(&mut Vec::new(), &no_fit).is_err());
    }

    #[test]
    fn theta_csv_contents() {
        use crate::experiment::theta_table;
        use crate::galois::test_fixtures::trivial_spec;
        use crate::galois::{build_context, classify_primes};
        use crate::sieve::sieve_primes;

        let ctx = build_context(&trivial_spec()).unwrap();
        let primes = sieve_primes(10).unwrap();
        let table = classify_primes(&ctx, 10, &primes).unwrap();
        let t = theta_table(&ctx, &table, 3).unwrap();
        let mut buf = Vec::new();
        write_theta_csv(&mut buf, &ctx, &t).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "q,a,theta,main,error");
        // rows: (1,1), (2,1), (3,1), (3,2)
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("1,1,"));
        assert!(lines[4].starts_with("3,2,"));
        // theta(10;3,1) = log 7, main = 5, error = log 7 - 5
        let fields: Vec<&str> = lines[3].split(',').collect();
        assert_eq!(fields[0], "3");
        assert_eq!(fields[1], "1");
        let theta: f64 = fields[2].parse().unwrap();
        let main: f64 = fields[3].parse().unwrap();
        let error: f64 = fields[4].parse().unwrap();
        assert_eq!(theta.to_bits(), 7f64.ln().to_bits());
        assert_eq!(main, 5.0);
        assert_eq!(error.to_bits(), (7f64.ln() - 5.0).to_bits());
    }

    #[test]
    fn frequencies_csv_contents() {
        use crate::galois::test_fixtures::s3_spec;
        use crate::galois::{build_context, classify_primes};
        use crate::sieve::sieve_primes;

        let ctx = build_context(&s3_spec()).unwrap();
        let primes = sieve_primes(100).unwrap();
        let table = classify_primes(&ctx, 100, &primes).unwrap();
        let mut buf = Vec::new();
        write_frequencies_csv(&mut buf, &table).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("cycle_type,count,fraction\n"));
        assert!(text.contains("1+2,"));
        assert!(text.contains("3,"));
    }

    #[test]
    fn manifest_echoes_config() {
        let info = ManifestInfo {
            version: "0.1.0",
            subcommand: "variance",
            workers: 8,
            wall_seconds: 0.1234,
            config_text: "[context]\nname = demo\n",
        };
        let mut buf = Vec::new();
        write_manifest(&mut buf, &info).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("version = 0.1.0"));
        assert!(text.contains("subcommand = variance"));
        assert!(text.contains("workers = 8"));
        assert!(text.contains("wall_seconds = 0.123"));
        assert!(text.contains("name = demo"));
    }
}
