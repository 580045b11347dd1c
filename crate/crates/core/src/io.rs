//! CSV readers and writers for envelopes, field dumps and result tables.
//!
//! Floats are written with the shortest representation that reads back to
//! the same bits, so identical inputs give identical files.

use std::io::{Read, Write};

use crate::asymptotics::{AsymptoteRow, DispersionTimeRow};
use crate::observables::{DispersionCurve, FieldSample};
use crate::{Error, Result};

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Reads `k_eV,phi` rows of a tabulated envelope.
pub fn read_table_csv<R: Read>(reader: R) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::InvalidInput(format!("envelope table needs a '{name}' column, found {headers:?}")))
    };
    let (ik, ip) = (col("k_eV")?, col("phi")?);
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parse = |i: usize| -> Result<f64> {
            let field = rec.get(i).unwrap_or("");
            field
                .parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("row {}: cannot parse '{field}' as a number", line + 1)))
        };
        out.push((parse(ik)?, parse(ip)?));
    }
    Ok(out)
}

pub fn read_table_file(path: &std::path::Path) -> Result<Vec<(f64, f64)>> {
    read_table_csv(std::fs::File::open(path)?)
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().from_writer(w)
}

/// `t,x,y,z,rho,jx,jy,jz,re_psi,im_psi`
pub fn write_field_dump<W: Write>(w: W, samples: &[FieldSample]) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["t", "x", "y", "z", "rho", "jx", "jy", "jz", "re_psi", "im_psi"])?;
    for s in samples {
        out.write_record(
            [s.t, s.x.x, s.x.y, s.x.z, s.rho, s.j.x, s.j.y, s.j.z, s.psi.re, s.psi.im].map(num),
        )?;
    }
    out.flush()?;
    Ok(())
}

/// `t,analytic,measured,err,sigma_xL2,sigma_xT2,norm`; columns without data
/// are left empty.
pub fn write_dispersion_curve<W: Write>(w: W, curve: &DispersionCurve) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["t", "analytic", "measured", "err", "sigma_xL2", "sigma_xT2", "norm"])?;
    for (i, &t) in curve.times.iter().enumerate() {
        let m = curve.measured.as_ref().map(|v| &v[i]);
        out.write_record([
            num(t),
            num(curve.analytic[i]),
            opt(m.map(|m| m.sigma_x2)),
            opt(m.map(|m| m.error)),
            opt(curve.sigma_xl2.as_ref().map(|v| v[i])),
            opt(curve.sigma_xt2.as_ref().map(|v| v[i])),
            opt(m.map(|m| m.norm)),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// `r,flux_norm,prob_norm,method,err`; a quantity that was not computed is
/// left empty.
pub fn write_asymptote_rows<W: Write>(w: W, rows: &[AsymptoteRow]) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["r", "flux_norm", "prob_norm", "method", "err"])?;
    for r in rows {
        out.write_record([num(r.r), opt(r.flux.map(|n| n.value)), opt(r.prob.map(|n| n.value)), r.method.name().to_string(), num(r.err())])?;
    }
    out.flush()?;
    Ok(())
}

/// `mass_eV,gamma,model,tau_L_s,tau_T_s,tau_p_s`
pub fn write_dispersion_times<W: Write>(w: W, rows: &[DispersionTimeRow]) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["mass_eV", "gamma", "model", "tau_L_s", "tau_T_s", "tau_p_s"])?;
    for r in rows {
        out.write_record([
            num(r.mass_ev),
            num(r.gamma),
            r.model.name().to_string(),
            num(r.tau_l_s),
            num(r.tau_t_s),
            num(r.tau_p_s),
        ])?;
    }
    out.flush()?;
    Ok(())
}
