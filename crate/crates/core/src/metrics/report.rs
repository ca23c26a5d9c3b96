use serde::Serialize;

use crate::domain::{BoundingBox, Image};
use crate::error::{Error, Result};
use crate::metrics::{mse, psnr_masked, region_mse, Psnr};

/// Default quality/anonymity balance of the combined score.
pub const DEFAULT_ALPHA: f64 = 0.999;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalRow {
    pub method: String,
    /// PSNR outside the boxes, dB.
    pub psnr_outside: Psnr,
    /// MSE inside the boxes; larger is more anonymous.
    pub mse_inside: f64,
    pub mse_overall: f64,
    /// `alpha * mse_overall - (1 - alpha) * mse_inside`; lower is better.
    pub combined: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub alpha: f64,
    pub rows: Vec<EvalRow>,
}

/// One row per candidate, in input order.
pub fn evaluate(
    original: &Image,
    candidates: &[(String, Image)],
    boxes: &[BoundingBox],
    alpha: f64,
) -> Result<EvalReport> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    let rows = candidates
        .iter()
        .map(|(method, estimate)| {
            let mse_overall = mse(original, estimate)?;
            let mse_inside = region_mse(original, estimate, boxes)?;
            Ok(EvalRow {
                method: method.clone(),
                psnr_outside: psnr_masked(original, estimate, boxes)?,
                mse_inside,
                mse_overall,
                combined: alpha * mse_overall - (1.0 - alpha) * mse_inside,
            })
        })
        .collect::<Result<_>>()?;
    Ok(EvalReport { alpha, rows })
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Comma-separated table with a header row.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["method", "psnr_outside_db", "mse_inside", "mse_overall", "combined"])
            .expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                r.method.clone(),
                r.psnr_outside.to_string(),
                format!("{:.6e}", r.mse_inside),
                format!("{:.6e}", r.mse_overall),
                format!("{:.6e}", r.combined),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is UTF-8")
    }

    pub fn row(&self, method: &str) -> Option<&EvalRow> {
        self.rows.iter().find(|r| r.method == method)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::defocus_baseline;
    use crate::phantom::Phantom;

    #[test]
    fn original_and_defocus_rows() {
        let ph = Phantom::generate(64, 1, 3);
        let candidates = vec![
            ("original".to_string(), ph.image.clone()),
            ("defocus".to_string(), defocus_baseline(&ph.image).unwrap()),
        ];
        let report = evaluate(&ph.image, &candidates, &ph.boxes, DEFAULT_ALPHA).unwrap();
        let orig = report.row("original").unwrap();
        assert!(orig.psnr_outside.is_infinite());
        assert_eq!(orig.mse_inside, 0.0);
        let blur = report.row("defocus").unwrap();
        assert!(blur.mse_inside > 0.0);
        assert!(!blur.psnr_outside.is_infinite());

        let csv = report.to_csv();
        assert!(csv.starts_with("method,psnr_outside_db"));
        assert!(csv.contains("original,inf,"));
        let json = report.to_json();
        assert!(json.contains("\"inf\""));
        let again = evaluate(&ph.image, &candidates, &ph.boxes, DEFAULT_ALPHA).unwrap();
        assert_eq!(again, report);
    }

    #[test]
    fn rejects_bad_alpha() {
        let img = Image::filled(8, 1, 0.0).unwrap();
        let b = vec![BoundingBox::new("a", 0, 0, 2, 2).unwrap()];
        assert!(evaluate(&img, &[], &b, 1.5).is_err());
    }
}
