//! CSV and JSON emission. CSV is UTF-8, comma-separated, LF line endings,
//! with floats at 17 significant digits. JSON objects serialize with
//! lexicographic key order.

use std::io::Write;

use crate::diagnostics::DiagnosticsRecord;
use crate::error::Result;

pub const CSV_HEADER: &str =
    "t,energy_e,functional_h,slope_sup,slope_argmax,min_ux,max_abs_u,mean_u,tail_fraction";

/// 17-significant-digit decimal form.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_diagnostics_csv(mut w: impl Write, records: &[DiagnosticsRecord]) -> Result<()> {
    w.write_all(CSV_HEADER.as_bytes())?;
    w.write_all(b"\n")?;
    for r in records {
        let row = [
            r.t,
            r.energy_e,
            r.functional_h,
            r.slope_sup,
            r.slope_argmax,
            r.min_ux,
            r.max_abs_u,
            r.mean_u,
            r.tail_fraction,
        ]
        .map(fmt_float)
        .join(",");
        w.write_all(row.as_bytes())?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Pretty JSON with a trailing newline. Key order is lexicographic because
/// `serde_json::Map` is ordered.
pub fn to_json_string(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json serialization");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_row_format() {
        let rec = DiagnosticsRecord {
            t: 0.5,
            energy_e: 1.0 / 3.0,
            functional_h: 2.0,
            slope_sup: 3.0,
            slope_argmax: 0.25,
            min_ux: -3.0,
            max_abs_u: 1.0,
            mean_u: 0.0,
            tail_fraction: 1e-12,
        };
        let mut buf = Vec::new();
        write_diagnostics_csv(&mut buf, &[rec]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        let row = lines.next().unwrap();
        assert!(row.starts_with("5.0000000000000000e-1,3.3333333333333331e-1,"));
        assert!(!text.contains('\r'));
    }

    #[test]
    fn json_keys_sorted() {
        let v = serde_json::json!({"zeta": 1, "alpha": 2, "mid": {"b": 1, "a": 2}});
        let s = to_json_string(&v);
        let alpha = s.find("alpha").unwrap();
        let zeta = s.find("zeta").unwrap();
        assert!(alpha < zeta);
    }
}
