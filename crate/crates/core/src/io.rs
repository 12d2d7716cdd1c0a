//! Plain-text CSV helpers shared by every artifact writer.
//!
//! Reals are written with 17 significant digits so that a value read back
//! with `str::parse::<f64>` is bit-identical to the one written.

use std::io::Write;

use crate::error::Result;

/// 17 significant digits in scientific notation; round-trips every `f64`.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes a `t,value` series.
pub fn write_series<W: Write>(mut out: W, series: &[(f64, f64)]) -> Result<()> {
    writeln!(out, "t,value")?;
    for &(t, v) in series {
        writeln!(out, "{},{}", fmt_real(t), fmt_real(v))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip() {
        for v in [0.0, -0.0, 1.0 / 3.0, std::f64::consts::PI, 1e-300, -2.5e17, f64::MIN_POSITIVE] {
            let s = fmt_real(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
    }

    #[test]
    fn series_has_header() {
        let mut buf = Vec::new();
        write_series(&mut buf, &[(0.0, 1.0), (0.5, 0.25)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "t,value");
        assert_eq!(lines.len(), 3);
    }
}
