//! File formats.
//!
//! Every CSV written here may start with `#` comment lines carrying the
//! resolved configuration and seed; readers skip them. Indices are 1-based in
//! all files. Floats are written in shortest round-trip form so that reruns
//! are byte-identical.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::diagnostics::{Ess, Rhat};
use crate::error::{Error, Result};
use crate::gibbs::ChainOutput;
use crate::inference::ReplicationSummary;
use crate::model::{derive_ground_truth, Dataset, GroundTruth};
use crate::posterior::EnumeratedPosterior;

/// Crate version plus the git revision it was built from, when known.
pub fn version_stamp() -> String {
    format!("{} ({})", env!("CARGO_PKG_VERSION"), option_env!("BAYES_SCREEN_GIT_REV").unwrap_or("unknown"))
}

fn parse_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), message: message.into() }
}

fn create(path: &Path, comments: &[String]) -> Result<csv::Writer<BufWriter<File>>> {
    let mut file = BufWriter::new(File::create(path)?);
    for c in comments {
        for line in c.lines() {
            writeln!(file, "# {line}")?;
        }
    }
    Ok(csv::Writer::from_writer(file))
}

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    Ok(csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_path(path)?)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

pub fn write_dataset(path: &Path, d: &Dataset, comments: &[String]) -> Result<()> {
    let mut w = create(path, comments)?;
    let mut header = vec!["y".to_string()];
    header.extend((1..=d.p()).map(|j| format!("x{j}")));
    w.write_record(&header)?;
    let mut row = Vec::with_capacity(d.p() + 1);
    for i in 0..d.n() {
        row.clear();
        row.push(d.y()[i].to_string());
        row.extend((0..d.p()).map(|j| d.x()[(i, j)].to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let mut r = reader(path)?;
    let header = r.headers()?.clone();
    if header.get(0) != Some("y") {
        return Err(parse_err(path, "first column must be 'y'"));
    }
    for (k, name) in header.iter().enumerate().skip(1) {
        if name != format!("x{k}") {
            return Err(parse_err(path, format!("expected column 'x{k}', found '{name}'")));
        }
    }
    let p = header.len() - 1;
    let mut y = Vec::new();
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let vals = rec
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| parse_err(path, format!("row {}: {e}", line + 1)))?;
        if vals.len() != p + 1 {
            return Err(parse_err(path, format!("row {} has {} fields, expected {}", line + 1, vals.len(), p + 1)));
        }
        y.push(vals[0]);
        rows.push(vals[1..].to_vec());
    }
    if rows.is_empty() {
        return Err(parse_err(path, "no observations"));
    }
    Dataset::from_rows(y, &rows)
}

/// Sidecar layout: a `sigma0_sq=<v>` line, then a `j,beta0_j` table of the
/// nonzero coefficients.
pub fn write_ground_truth(path: &Path, truth: &GroundTruth, comments: &[String]) -> Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    for c in comments {
        for line in c.lines() {
            writeln!(file, "# {line}")?;
        }
    }
    writeln!(file, "sigma0_sq={}", truth.sigma0_sq)?;
    writeln!(file, "j,beta0_j")?;
    for j in truth.gamma0.iter() {
        writeln!(file, "{},{}", j + 1, truth.beta0[j])?;
    }
    file.flush()?;
    Ok(())
}

/// Reads a ground-truth sidecar for a design with `p` columns.
pub fn read_ground_truth(path: &Path, p: usize) -> Result<GroundTruth> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    let sigma0_sq = lines
        .next()
        .and_then(|l| l.strip_prefix("sigma0_sq="))
        .ok_or_else(|| parse_err(path, "missing 'sigma0_sq=' line"))?
        .parse::<f64>()
        .map_err(|e| parse_err(path, e.to_string()))?;
    if lines.next() != Some("j,beta0_j") {
        return Err(parse_err(path, "missing 'j,beta0_j' header"));
    }
    let mut beta0 = vec![0.0; p];
    for line in lines {
        let (j, b) = line.split_once(',').ok_or_else(|| parse_err(path, format!("bad row '{line}'")))?;
        let j: usize = j.trim().parse().map_err(|_| parse_err(path, format!("bad index '{j}'")))?;
        if j < 1 || j > p {
            return Err(parse_err(path, format!("index {j} outside 1..={p}")));
        }
        beta0[j - 1] = b.trim().parse().map_err(|_| parse_err(path, format!("bad value '{b}'")))?;
    }
    derive_ground_truth(beta0, sigma0_sq)
}

/// `gamma,count`, most visited first.
pub fn write_model_counts(path: &Path, out: &ChainOutput, comments: &[String]) -> Result<()> {
    let mut w = create(path, comments)?;
    w.write_record(["gamma", "count"])?;
    let mut rows: Vec<_> = out.model_counts.iter().collect();
    rows.sort_by(|(ga, ca), (gb, cb)| cb.cmp(ca).then_with(|| ga.tie_break_cmp(gb)));
    for (g, c) in rows {
        w.write_record([g.label(), c.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `models.csv`, `scalars.csv`, `beta.csv` (when recorded) and
/// `meta.json` into `dir`.
pub fn write_chain_output(dir: &Path, out: &ChainOutput, meta: &serde_json::Value, comments: &[String]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_model_counts(&dir.join("models.csv"), out, comments)?;

    let mut w = create(&dir.join("scalars.csv"), comments)?;
    w.write_record(["iter", "sigma_sq", "c", "t_n"])?;
    for k in 0..out.iterations.len() {
        w.write_record([
            out.iterations[k].to_string(),
            out.sigma_sq_draws[k].to_string(),
            out.c_draws[k].to_string(),
            out.t_n_draws[k].to_string(),
        ])?;
    }
    w.flush()?;

    if let Some(draws) = &out.beta_draws {
        let mut cols: Vec<usize> = draws.iter().flat_map(|d| d.iter().map(|(j, _)| *j)).collect();
        cols.sort_unstable();
        cols.dedup();
        let mut w = create(&dir.join("beta.csv"), comments)?;
        let mut header = vec!["iter".to_string()];
        header.extend(cols.iter().map(|j| format!("x{}", j + 1)));
        w.write_record(&header)?;
        for (k, draw) in draws.iter().enumerate() {
            let mut row = vec![0.0; cols.len()];
            for &(j, b) in draw {
                let pos = cols.binary_search(&j).expect("column collected above");
                row[pos] = b;
            }
            let mut rec = vec![out.iterations[k].to_string()];
            rec.extend(row.iter().map(f64::to_string));
            w.write_record(&rec)?;
        }
        w.flush()?;
    }

    let mut meta = meta.clone();
    if let Some(obj) = meta.as_object_mut() {
        obj.insert("seed".into(), out.seed.into());
        obj.insert("stream".into(), out.stream.into());
        obj.insert("version".into(), version_stamp().into());
        obj.insert("mh_accept_rate".into(), out.mh_accept_rate.into());
        obj.insert("c_updates_skipped".into(), out.c_updates_skipped.into());
        obj.insert("residual_drift_failures".into(), out.residual_drift_failures.into());
    }
    std::fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(())
}

pub fn write_enumeration(path: &Path, post: &EnumeratedPosterior, comments: &[String]) -> Result<()> {
    let mut w = create(path, comments)?;
    w.write_record(["gamma", "log_score", "prob"])?;
    for e in &post.entries {
        w.write_record([e.gamma.label(), e.log_score.to_string(), e.prob.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary(path: &Path, summary: &ReplicationSummary, comments: &[String]) -> Result<()> {
    let mut w = create(path, comments)?;
    w.write_record(["rep", "selected_gamma", "freq_true", "fcr", "mean_ci_len", "size", "err"])?;
    for r in &summary.records {
        w.write_record([
            (r.rep + 1).to_string(),
            r.selected.label(),
            r.freq_true.to_string(),
            opt(r.fcr),
            opt(r.mean_ci_length()),
            r.size.to_string(),
            opt(r.err),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_aggregate(path: &Path, summary: &ReplicationSummary, comments: &[String]) -> Result<()> {
    let agg = &summary.aggregates;
    let mut w = create(path, comments)?;
    let mut header = vec!["replications".to_string()];
    header.extend(agg.f_eta.iter().map(|(eta, _)| format!("F({eta})")));
    header.extend(["MSSM", "ME", "sd", "FCR", "mean_ci_len"].map(String::from));
    w.write_record(&header)?;
    let mut row = vec![agg.replications.to_string()];
    row.extend(agg.f_eta.iter().map(|(_, v)| v.to_string()));
    row.extend([agg.mssm.to_string(), opt(agg.me), opt(agg.err_sd), opt(agg.fcr), opt(agg.mean_ci_length)]);
    w.write_record(&row)?;
    w.flush()?;
    Ok(())
}

/// One `quantity,rhat,ess_min` row per monitored scalar.
pub fn write_diagnostics(path: &Path, rows: &[(String, Rhat, Ess)], comments: &[String]) -> Result<()> {
    let mut w = create(path, comments)?;
    w.write_record(["quantity", "rhat", "ess_min"])?;
    for (name, rhat, ess) in rows {
        w.write_record([name.clone(), rhat.value.to_string(), ess.value.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `scalars.csv` back as `(sigma_sq, c, t_n)` columns.
pub fn read_scalars(path: &Path) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let mut r = reader(path)?;
    let (mut s, mut c, mut t) = (Vec::new(), Vec::new(), Vec::new());
    for rec in r.records() {
        let rec = rec?;
        let get = |k: usize| -> Result<f64> {
            rec.get(k)
                .ok_or_else(|| parse_err(path, "short row"))?
                .parse()
                .map_err(|e: std::num::ParseFloatError| parse_err(path, e.to_string()))
        };
        s.push(get(1)?);
        c.push(get(2)?);
        t.push(get(3)?);
    }
    Ok((s, c, t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dataset_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let d = Dataset::new(vec![0.1, -2.5, 1e-17], vec![1.0, 2.0, 3.0, 0.3, -0.7, 1.0 / 3.0], 3, 2).unwrap();
        write_dataset(&path, &d, &["seed=1".into()]).unwrap();
        let back = read_dataset(&path).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn bad_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        std::fs::write(&path, "y,x2\n1,2\n").unwrap();
        assert!(matches!(read_dataset(&path), Err(Error::Parse { .. })));
    }

    #[test]
    fn ground_truth_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gt.csv");
        let gt = derive_ground_truth(vec![0.0, 2.5, 0.0, -1.25], 2.0).unwrap();
        write_ground_truth(&path, &gt, &[]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "sigma0_sq=2\nj,beta0_j\n2,2.5\n4,-1.25\n");
        assert_eq!(read_ground_truth(&path, 4).unwrap(), gt);
        assert!(read_ground_truth(&path, 3).is_err());
    }
}
