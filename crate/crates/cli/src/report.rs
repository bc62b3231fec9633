//! Consolidates run summaries into a table and plot-ready CSV files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;

#[derive(Debug)]
pub struct ReportError(pub String);

impl std::fmt::Display for ReportError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ReportError {}

/// `%.12g`: twelve significant digits, trailing zeros trimmed.
pub fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim(&format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim(mantissa))
    }
}

struct Summary {
    path: PathBuf,
    value: Value,
}

impl Summary {
    fn name(&self) -> &str {
        self.value["name"].as_str().unwrap_or("?")
    }

    fn mode(&self) -> &str {
        self.value["mode"].as_str().unwrap_or("?")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub table: String,
    pub files: Vec<PathBuf>,
}

fn num(v: &Value) -> Option<f64> {
    v.as_f64()
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".into(), sig12)
}

struct Table {
    rows: Vec<[String; 4]>,
}

impl Table {
    fn push(&mut self, s: &Summary, quantity: impl Into<String>, value: String) {
        self.rows.push([s.name().into(), s.mode().into(), quantity.into(), value]);
    }

    fn render(&self, header: [&str; 4]) -> String {
        let mut width = header.map(str::len);
        for r in &self.rows {
            for (w, c) in width.iter_mut().zip(r) {
                *w = (*w).max(c.len());
            }
        }
        let mut out = String::new();
        let line = |out: &mut String, cells: [&str; 4]| {
            let _ = writeln!(
                out,
                "{:<w0$}  {:<w1$}  {:<w2$}  {:>w3$}",
                cells[0],
                cells[1],
                cells[2],
                cells[3],
                w0 = width[0],
                w1 = width[1],
                w2 = width[2],
                w3 = width[3]
            );
        };
        line(&mut out, header);
        for r in &self.rows {
            line(&mut out, [&r[0], &r[1], &r[2], &r[3]]);
        }
        out
    }
}

fn exact_rows(t: &mut Table, s: &Summary) {
    let meters = s.value["meters"].as_array().cloned().unwrap_or_default();
    let suffix = |k: usize| if meters.len() > 1 { format!("[{}]", k + 1) } else { String::new() };
    for (k, m) in meters.iter().enumerate() {
        let sfx = suffix(k);
        t.push(s, format!("strong_mean{sfx}"), cell(num(&m["strong_mean"])));
        t.push(s, format!("weak_value_re{sfx}"), cell(num(&m["weak_value"][0])));
        t.push(s, format!("weak_value_im{sfx}"), cell(num(&m["weak_value"][1])));
        t.push(s, format!("norm{sfx}"), cell(num(&m["norm"])));
        t.push(s, format!("mean_reading{sfx}"), cell(num(&m["mean_reading"])));
    }
}

fn sweep_rows(t: &mut Table, s: &Summary) {
    for r in s.value["rows"].as_array().into_iter().flatten() {
        t.push(s, format!("mean[width={}]", cell(num(&r["width"]))), cell(num(&r["mean"])));
    }
    t.push(s, "limit", cell(num(&s.value["limit"])));
    t.push(s, "final_error", cell(num(&s.value["final_error"])));
    t.push(s, "monotone", s.value["monotone"].to_string());
}

fn sample_rows(t: &mut Table, s: &Summary) {
    t.push(s, "trials", s.value["trials"].to_string());
    t.push(s, "success_fraction", cell(num(&s.value["success_fraction"])));
    t.push(s, "success_fraction_se", cell(num(&s.value["success_fraction_se"])));
    let means = s.value["conditional_means"].as_array().cloned().unwrap_or_default();
    for k in 0..means.len() {
        let sfx = if means.len() > 1 { format!("[{}]", k + 1) } else { String::new() };
        t.push(s, format!("conditional_mean{sfx}"), cell(num(&means[k])));
        t.push(s, format!("conditional_se{sfx}"), cell(num(&s.value["conditional_se"][k])));
    }
}

fn classical_rows(t: &mut Table, s: &Summary) {
    if let Some(p) = s.value["receptacle_probabilities"].as_object() {
        for (r, v) in p {
            t.push(s, format!("probability[{r}]"), cell(num(v)));
        }
    }
    if let Some(m) = s.value["means"].as_object() {
        for (f, per) in m {
            for (cond, v) in per.as_object().into_iter().flatten() {
                t.push(s, format!("mean[{f}|{cond}]"), cell(num(v)));
            }
        }
    }
}

fn write_plot(path: &Path, header: &str, rows: impl Iterator<Item = Vec<f64>>) -> Result<(), ReportError> {
    let mut text = format!("{header}\n");
    for r in rows {
        let cells: Vec<String> = r.into_iter().map(sig12).collect();
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| ReportError(format!("{}: {e}", path.display())))
}

fn read_distribution(path: &Path) -> Result<Vec<Vec<f64>>, ReportError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| ReportError(format!("{}: {e}", path.display())))?;
    reader
        .records()
        .map(|r| {
            let r = r.map_err(|e| ReportError(format!("{}: {e}", path.display())))?;
            r.iter()
                .map(|c| c.parse::<f64>().map_err(|e| ReportError(format!("{}: {e}", path.display()))))
                .collect()
        })
        .collect()
}

/// Builds the table; when `out` is given also writes plot CSVs there.
pub fn report(inputs: &[PathBuf], out: Option<&Path>) -> Result<Report, ReportError> {
    if inputs.is_empty() {
        return Err(ReportError("no summary files given".into()));
    }
    let summaries = inputs
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p).map_err(|e| ReportError(format!("{}: {e}", p.display())))?;
            let value: Value =
                serde_json::from_str(&text).map_err(|e| ReportError(format!("{}: not a summary: {e}", p.display())))?;
            if !value["mode"].is_string() || !value["dim"].is_u64() {
                return Err(ReportError(format!("{}: not a run summary", p.display())));
            }
            Ok(Summary { path: p.clone(), value })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let dims: Vec<u64> = summaries.iter().filter_map(|s| s.value["dim"].as_u64()).collect();
    if dims.iter().any(|&d| d != dims[0]) {
        return Err(ReportError(format!(
            "summaries mix system dimensions {dims:?}; report one dimension at a time"
        )));
    }

    let mut table = Table { rows: Vec::new() };
    let mut files = Vec::new();
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(|e| ReportError(format!("{}: {e}", dir.display())))?;
    }
    for s in &summaries {
        match s.mode() {
            "exact" => exact_rows(&mut table, s),
            "sweep" => sweep_rows(&mut table, s),
            "sample" => sample_rows(&mut table, s),
            "classical" => classical_rows(&mut table, s),
            other => return Err(ReportError(format!("{}: unknown mode `{other}`", s.path.display()))),
        }
        let Some(dir) = out else { continue };
        let base = s.path.parent().unwrap_or(Path::new("."));
        match s.mode() {
            "exact" => {
                let n = s.value["meters"].as_array().map_or(0, Vec::len);
                let stems: Vec<String> = if n == 1 {
                    vec!["distribution".into()]
                } else {
                    (1..=n).map(|k| format!("distribution_{k}")).collect()
                };
                for stem in stems {
                    let src = base.join(format!("{stem}.csv"));
                    if src.exists() {
                        let dst = dir.join(format!("{}_{stem}.csv", s.name()));
                        write_plot(&dst, "xi,density", read_distribution(&src)?.into_iter())?;
                        files.push(dst);
                    }
                }
            }
            "sweep" => {
                let dst = dir.join(format!("{}_sweep.csv", s.name()));
                let rows = s.value["rows"]
                    .as_array()
                    .into_iter()
                    .flatten()
                    .map(|r| vec![num(&r["width"]).unwrap_or(f64::NAN), num(&r["mean"]).unwrap_or(f64::NAN)]);
                write_plot(&dst, "width,mean", rows)?;
                files.push(dst);
            }
            _ => {}
        }
    }

    let mut text = table.render(["scenario", "mode", "quantity", "value"]);

    // sampled versus exact, matched by scenario name
    let mut comparison = Table { rows: Vec::new() };
    for sample in summaries.iter().filter(|s| s.mode() == "sample") {
        let Some(exact) = summaries.iter().find(|s| s.mode() == "exact" && s.name() == sample.name()) else {
            continue;
        };
        let mut rows = Vec::new();
        let means = sample.value["conditional_means"].as_array().cloned().unwrap_or_default();
        for k in 0..means.len() {
            let emp = num(&means[k]);
            let se = num(&sample.value["conditional_se"][k]);
            let ex = num(&exact.value["meters"][k]["mean_reading"]);
            let z = match (emp, se, ex) {
                (Some(e), Some(s), Some(x)) if s > 0.0 => Some((e - x) / s),
                _ => None,
            };
            let sfx = if means.len() > 1 { format!("[{}]", k + 1) } else { String::new() };
            comparison.push(sample, format!("empirical_mean{sfx}"), cell(emp));
            comparison.push(sample, format!("exact_mean{sfx}"), cell(ex));
            comparison.push(sample, format!("se{sfx}"), cell(se));
            comparison.push(sample, format!("z{sfx}"), cell(z));
            rows.push(vec![
                (k + 1) as f64,
                emp.unwrap_or(f64::NAN),
                ex.unwrap_or(f64::NAN),
                se.unwrap_or(f64::NAN),
                z.unwrap_or(f64::NAN),
            ]);
        }
        if let Some(dir) = out {
            let dst = dir.join(format!("{}_comparison.csv", sample.name()));
            write_plot(&dst, "meter,empirical,exact,se,z", rows.into_iter())?;
            files.push(dst);
        }
    }
    if !comparison.rows.is_empty() {
        text.push('\n');
        text.push_str(&comparison.render(["scenario", "mode", "comparison", "value"]));
    }
    Ok(Report { table: text, files })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(sig12(1.0), "1");
        assert_eq!(sig12(-100.0), "-100");
        assert_eq!(sig12(2.0 / 3.0), "0.666666666667");
        assert_eq!(sig12(123456.789012345), "123456.789012");
        assert_eq!(sig12(1.5e-9), "1.5e-9");
        assert_eq!(sig12(6.02214076e23), "6.02214076e23");
        assert_eq!(sig12(0.0), "0");
        assert_eq!(sig12(-0.000123), "-0.000123");
    }
}
