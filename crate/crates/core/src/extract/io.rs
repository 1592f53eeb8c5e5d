//! Measurement CSV: one row per point, `#` comment lines ignored.
//!
//! ```text
//! device_id,kind,W_um,L_um,LOV_um,cox_nF_cm2,fixed_bias_V,v_V,id_A
//! d01,transfer,380,35,5,35,-5,1.0,-2.1e-12
//! ```
//!
//! Rows sharing (device_id, kind, fixed_bias_V) form one sweep, in file order.

use std::io::{Read, Write};

use crate::model::DeviceGeometry;

use super::{ExtractError, IvSweep, Result, SweepKind};

pub const MEASUREMENT_COLUMNS: [&str; 9] =
    ["device_id", "kind", "W_um", "L_um", "LOV_um", "cox_nF_cm2", "fixed_bias_V", "v_V", "id_A"];

const UM: f64 = 1e-6;
/// nF/cm² to F/m².
const NF_PER_CM2: f64 = 1e-5;

struct Group {
    device_id: String,
    kind: SweepKind,
    fixed_bias: f64,
    geom: [f64; 3],
    cox: f64,
    points: Vec<(f64, f64)>,
}

pub fn read_measurements<R: Read>(r: R) -> Result<Vec<IvSweep>> {
    let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).flexible(false).from_reader(r);
    let headers = rd.headers()?.clone();
    let mut idx = [0usize; 9];
    for (slot, col) in idx.iter_mut().zip(MEASUREMENT_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == col)
            .ok_or_else(|| ExtractError::Schema(format!("missing column '{col}'")))?;
    }
    let mut groups: Vec<Group> = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |k: usize| rec.get(idx[k]).unwrap_or("");
        let num = |k: usize| -> Result<f64> {
            field(k).parse::<f64>().map_err(|_| ExtractError::Row {
                line,
                message: format!("{}: bad number '{}'", MEASUREMENT_COLUMNS[k], field(k)),
            })
        };
        let device_id = field(0).to_string();
        let kind: SweepKind =
            field(1).parse().map_err(|e: ExtractError| ExtractError::Row { line, message: e.to_string() })?;
        let geom = [num(2)? * UM, num(3)? * UM, num(4)? * UM];
        let cox = num(5)? * NF_PER_CM2;
        let fixed_bias = num(6)?;
        let point = (num(7)?, num(8)?);
        match groups.iter_mut().find(|g| g.device_id == device_id && g.kind == kind && g.fixed_bias == fixed_bias) {
            Some(g) => g.points.push(point),
            None => groups.push(Group { device_id, kind, fixed_bias, geom, cox, points: vec![point] }),
        }
    }
    groups
        .into_iter()
        .map(|g| {
            let geom = DeviceGeometry::new(g.geom[0], g.geom[1], g.geom[2])?;
            IvSweep::new(g.kind, g.device_id, geom, g.cox, g.fixed_bias, g.points)
        })
        .collect()
}

/// Shortest decimal form after rounding to 12 significant digits, so unit
/// conversions do not leave binary residue in the file.
fn tidy(x: f64) -> String {
    let r: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    format!("{r}")
}

pub fn write_measurements<W: Write>(w: W, sweeps: &[IvSweep], comment: Option<&str>) -> Result<()> {
    let mut w = w;
    if let Some(c) = comment {
        for line in c.lines() {
            writeln!(w, "# {line}")?;
        }
    }
    let mut out = csv::Writer::from_writer(w);
    out.write_record(MEASUREMENT_COLUMNS)?;
    for s in sweeps {
        for &(v, i) in &s.points {
            out.write_record([
                s.device_id.clone(),
                s.kind.as_str().to_string(),
                tidy(s.geom.w / UM),
                tidy(s.geom.l / UM),
                tidy(s.geom.lov / UM),
                tidy(s.cox / NF_PER_CM2),
                tidy(s.fixed_bias),
                tidy(v),
                format!("{i:e}"),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}
