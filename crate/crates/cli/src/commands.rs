use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use bellsim_core::model_file::save_model;
use bellsim_core::processing::{exact_windowed, write_scan_csv};
use bellsim_core::stats::{
    cbd_analysis, chsh_s, eberhard_j, signaling_report, violation_frequency, CorrelationTable,
    SignalingReport,
};
use bellsim_core::{
    estimate_correlations, jp_feasible, match_coincidences, per_row_chsh, post_select,
    run_context_protocol, run_spreadsheet_protocol, run_timeseries_protocol, window_scan, Context,
    Dataset, DatasetKind, Error, JpVerdict, ModelKind, PairwiseSystem, Result,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{self, ProtocolConfig};

fn create_dir(out: &Path) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| Error::Io {
        path: out.into(),
        source: e,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn warn(message: &str) {
    eprintln!("warning: {message}");
}

/// `Ok` as the serialized value, `Undefined` as `{"undefined": reason}`
/// with a warning; other errors propagate.
fn defined<T: Serialize>(what: &str, r: Result<T>) -> Result<Value> {
    match r {
        Ok(v) => Ok(serde_json::to_value(v)?),
        Err(Error::Undefined(reason)) => {
            warn(&format!("{what} undefined: {reason}"));
            Ok(json!({ "undefined": reason }))
        }
        Err(e) => Err(e),
    }
}

pub fn simulate(config_path: &Path, out: &Path) -> Result<()> {
    let loaded = config::load(config_path)?;
    let model = loaded.model()?;
    let seed = loaded.config.seed;
    let (dataset, name) = match loaded.protocol()? {
        ProtocolConfig::Contexts { counts } => (
            run_context_protocol(&model, counts.expand(), seed)?,
            "raw.csv",
        ),
        ProtocolConfig::Spreadsheet { rows } => (
            run_spreadsheet_protocol(&model, *rows, seed)?,
            "spreadsheet.csv",
        ),
        ProtocolConfig::TimeSeries {
            emissions,
            spacing,
            schedule,
        } => (
            run_timeseries_protocol(&model, *emissions, *schedule, *spacing, seed)?,
            "streams.csv",
        ),
    };
    create_dir(out)?;
    let csv = out.join(name);
    dataset.write(&csv)?;
    save_model(&model, &out.join("model.json"))?;
    write_json(&out.join("config.json"), &loaded.config)?;
    println!(
        "{}: {} records ({:?})",
        csv.display(),
        dataset.records.len(),
        dataset.kind
    );
    Ok(())
}

#[derive(Clone, Copy, Debug, Default)]
pub struct AnalyzeFlags {
    pub post_select: bool,
    pub chsh: bool,
    pub eberhard: bool,
    pub nosignaling: bool,
    pub cbd: bool,
}

pub fn analyze(
    dataset_path: &Path,
    flags: AnalyzeFlags,
    window: Option<f64>,
    out: &Path,
) -> Result<()> {
    let input = Dataset::read(dataset_path)?;
    let raw = match input.kind {
        DatasetKind::Streams => {
            let w = window
                .ok_or_else(|| Error::invalid("--window", "streams need a coincidence window"))?;
            match_coincidences(&input, w)?
        }
        _ => input.clone(),
    };
    if flags.eberhard && raw.kind == DatasetKind::Final {
        return Err(Error::Undefined(
            "Eberhard J needs raw counts with undetected outcomes; this dataset is post-selected"
                .into(),
        ));
    }
    if flags.post_select && raw.kind == DatasetKind::Spreadsheet {
        return Err(Error::Dataset(
            "post-selection applies to raw pair data, not spreadsheet rows".into(),
        ));
    }
    if raw.records.is_empty() {
        warn(&format!("{} has no records", file_name(dataset_path)));
    }
    create_dir(out)?;
    let fin = if flags.post_select && raw.kind == DatasetKind::Raw {
        let fin = post_select(&raw)?;
        fin.write(&out.join("final.csv"))?;
        Some(fin)
    } else {
        None
    };
    let raw_table = estimate_correlations(&raw)?;
    let final_table = fin.as_ref().map(estimate_correlations).transpose()?;
    let primary = final_table.as_ref().unwrap_or(&raw_table);

    let mut report = serde_json::Map::new();
    report.insert("dataset".into(), json!(file_name(dataset_path)));
    report.insert("kind".into(), serde_json::to_value(input.kind)?);
    report.insert("records".into(), json!(input.records.len()));
    report.insert(
        "provenance".into(),
        serde_json::to_value(&input.provenance)?,
    );
    if let Some(w) = window.filter(|_| input.kind == DatasetKind::Streams) {
        report.insert("window".into(), json!(w));
    }
    let mut tables = serde_json::Map::new();
    tables.insert(
        table_key(&raw_table).into(),
        serde_json::to_value(&raw_table)?,
    );
    if let Some(t) = &final_table {
        tables.insert("final".into(), serde_json::to_value(t)?);
        tables.insert(
            "selection".into(),
            serde_json::to_value(&fin.as_ref().unwrap().selection)?,
        );
    }
    report.insert("tables".into(), Value::Object(tables));

    let mut text = String::new();
    writeln!(
        text,
        "dataset {} ({:?}, {} records)",
        file_name(dataset_path),
        input.kind,
        input.records.len()
    )
    .ok();
    table_text(&mut text, &raw_table);
    if let Some(t) = &final_table {
        table_text(&mut text, t);
    }

    if flags.chsh {
        let mut chsh = serde_json::Map::new();
        for t in std::iter::once(&raw_table).chain(final_table.as_ref()) {
            let value = chsh_s(t);
            if let Ok(v) = &value {
                writeln!(
                    text,
                    "CHSH {:<11} S_max = {:.6} (signs {:?}), S_canonical = {:.6}, se = {:.6}",
                    table_key(t),
                    v.max,
                    v.argmax,
                    v.canonical,
                    v.se
                )
                .ok();
            }
            chsh.insert(table_key(t).into(), defined("CHSH", value)?);
        }
        if raw.kind == DatasetKind::Spreadsheet {
            let check = spreadsheet_check(&raw, &raw_table)?;
            writeln!(
                text,
                "spreadsheet bound: {}",
                if check["holds"] == json!(true) {
                    "holds"
                } else {
                    "VIOLATED"
                }
            )
            .ok();
            chsh.insert("spreadsheet_bound".into(), check);
        }
        report.insert("chsh".into(), Value::Object(chsh));
    }
    if flags.eberhard {
        let j = eberhard_j(&raw_table);
        if let Ok(j) = &j {
            writeln!(text, "Eberhard J = {j:.6} (local bound 0)").ok();
        }
        report.insert("eberhard_j".into(), defined("Eberhard J", j)?);
    }
    if flags.nosignaling {
        let mut sig = serde_json::Map::new();
        for t in std::iter::once(&raw_table).chain(final_table.as_ref()) {
            let r = signaling_report(t);
            if let Ok(r) = &r {
                signaling_text(&mut text, table_key(t), r);
            }
            sig.insert(table_key(t).into(), defined("signaling deltas", r)?);
        }
        report.insert("signaling".into(), Value::Object(sig));
    }
    if flags.cbd {
        let r = cbd_analysis(primary);
        if let Ok(r) = &r {
            writeln!(
                text,
                "CbD ({}): s_odd = {:.6}, delta_c = {:.6}, contextual = {}",
                table_key(primary),
                r.s_odd,
                r.delta_c,
                r.contextual
            )
            .ok();
        }
        report.insert("cbd".into(), defined("CbD", r)?);
    }
    write_json(&out.join("report.json"), &Value::Object(report))?;
    write_text(&out.join("report.txt"), &text)?;
    print!("{text}");
    Ok(())
}

fn table_key(t: &CorrelationTable) -> &'static str {
    match t.source {
        bellsim_core::TableSource::Final | bellsim_core::TableSource::ExactFinal => "final",
        bellsim_core::TableSource::Spreadsheet => "spreadsheet",
        _ => "raw",
    }
}

fn table_text(text: &mut String, t: &CorrelationTable) {
    writeln!(
        text,
        "{:<12}{:>10}{:>12}{:>12}{:>12}{:>12}",
        table_key(t),
        "n",
        "E",
        "se(E)",
        "<A>",
        "<B>"
    )
    .ok();
    for ctx in Context::ALL {
        match &t.entries[ctx.index()] {
            Some(e) => writeln!(
                text,
                "{:<12}{:>10}{:>12.6}{:>12.6}{:>12.6}{:>12.6}",
                ctx.to_string(),
                e.n.unwrap_or(0),
                e.correlation,
                e.se_correlation,
                e.marginal_a,
                e.marginal_b
            ),
            None => writeln!(text, "{:<12}{:>10}{:>12}", ctx.to_string(), 0, "undefined"),
        }
        .ok();
    }
}

fn signaling_text(text: &mut String, key: &str, r: &SignalingReport) {
    for d in &r.deltas {
        let z = d.z.map(|z| format!("{z:.2}")).unwrap_or_else(|| "-".into());
        writeln!(
            text,
            "signaling {key:<11} {:<6} delta = {:+.6}, z = {z}",
            d.name, d.delta
        )
        .ok();
    }
}

/// Every row contributes exactly ±2, so the sample value of every sign
/// pattern lies in [−2, 2].
fn spreadsheet_check(ds: &Dataset, table: &CorrelationTable) -> Result<Value> {
    let rows = ds.rows()?;
    let mut bad_rows = 0u64;
    for r in rows {
        match per_row_chsh(&r.values) {
            Ok(v) if v.abs() == 2 => {}
            _ => bad_rows += 1,
        }
    }
    let s = chsh_s(table).ok();
    let within = s.map(|s| s.max <= 2.0 + 1e-12 && s.canonical >= -2.0 - 1e-12);
    Ok(json!({
        "rows": rows.len(),
        "rows_not_plus_minus_two": bad_rows,
        "sample_within_bound": within,
        "holds": bad_rows == 0 && within != Some(false),
    }))
}

pub fn replicate(config_path: &Path, out: &Path) -> Result<()> {
    let loaded = config::load(config_path)?;
    let model = loaded.model()?;
    let rc = loaded.replicate()?;
    let vf = violation_frequency(
        &model,
        rc.protocol,
        rc.n_per_context,
        rc.replications,
        loaded.config.seed,
    )?;
    create_dir(out)?;
    let csv_path = out.join("replicate.csv");
    let mut text = String::from(
        "model,protocol,n_per_context,replications,master_seed,count_ge,fraction_ge,ci_ge_lower,ci_ge_upper,se_ge,\
         count_gt,fraction_gt,ci_gt_lower,ci_gt_upper,se_gt,s_mean,s_min,s_max\n",
    );
    writeln!(
        text,
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        model.name(),
        serde_json::to_value(vf.protocol)?
            .as_str()
            .unwrap_or_default(),
        vf.n_per_context,
        vf.replications,
        vf.master_seed,
        vf.count_ge,
        vf.fraction_ge,
        vf.ci_ge.lower,
        vf.ci_ge.upper,
        vf.ci_ge.se,
        vf.count_gt,
        vf.fraction_gt,
        vf.ci_gt.lower,
        vf.ci_gt.upper,
        vf.ci_gt.se,
        vf.s_mean,
        vf.s_min,
        vf.s_max
    )
    .ok();
    write_text(&csv_path, &text)?;
    let mut per = String::from("replication,S\n");
    for (r, s) in vf.s_values.iter().enumerate() {
        writeln!(per, "{r},{s}").ok();
    }
    write_text(&out.join("replicate_s.csv"), &per)?;
    write_json(
        &out.join("replicate.json"),
        &json!({ "model": model.name(), "config": loaded.config, "result": vf }),
    )?;
    println!(
        "{}: fraction S >= 2 = {} ({} of {}), 95% CI [{:.4}, {:.4}]; fraction S > 2 = {}",
        csv_path.display(),
        vf.fraction_ge,
        vf.count_ge,
        vf.replications,
        vf.ci_ge.lower,
        vf.ci_ge.upper,
        vf.fraction_gt
    );
    Ok(())
}

pub fn window_scan_cmd(config_path: &Path, out: &Path) -> Result<()> {
    let loaded = config::load(config_path)?;
    let model = loaded.model()?;
    let windows = loaded.windows()?;
    let ProtocolConfig::TimeSeries {
        emissions,
        spacing,
        schedule,
    } = loaded.protocol()?
    else {
        return Err(Error::invalid(
            "protocol.kind",
            "window scans need the `time_series` protocol",
        ));
    };
    let streams =
        run_timeseries_protocol(&model, *emissions, *schedule, *spacing, loaded.config.seed)?;
    let rows = window_scan(&streams, windows)?;
    create_dir(out)?;
    streams.write(&out.join("streams.csv"))?;
    write_scan_csv(&rows, &out.join("scan.csv"))?;
    let monotone = rows
        .windows(2)
        .all(|p| p[0].window > p[1].window || p[0].retained_fraction <= p[1].retained_fraction);
    let exact: Vec<Value> = if model.kind() == ModelKind::TimeTag {
        windows
            .iter()
            .map(|&w| {
                let ex = exact_windowed(&model, w)?;
                let e = ex.post_correlations();
                Ok(match e {
                    Some(e) => {
                        let f = e.map(|v| bellsim_core::prob::to_f64(&v));
                        json!({ "window": w, "post_correlations": f, "s_max": bellsim_core::stats::chsh_from_correlations(f).max })
                    }
                    None => json!({ "window": w, "undefined": "a context has zero coincidence probability" }),
                })
            })
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    write_json(
        &out.join("scan.json"),
        &json!({ "model": model.name(), "config": loaded.config, "retained_monotone": monotone, "rows": rows, "exact": exact }),
    )?;
    if !monotone {
        warn("retained fraction is not monotone in the window");
    }
    for r in &rows {
        let s = r
            .chsh
            .map(|c| format!("{:.6} ± {:.6}", c.max, c.se))
            .unwrap_or_else(|| "undefined".into());
        println!(
            "W = {:<8} retained = {:.6}  S_max = {s}",
            r.window, r.retained_fraction
        );
    }
    Ok(())
}

pub fn check_jp(table: &Path, out: &Path) -> Result<()> {
    let system = match table.extension().and_then(|e| e.to_str()) {
        Some("csv") => PairwiseSystem::from_csv(table)?,
        _ => {
            let text = fs::read_to_string(table).map_err(|e| Error::Io {
                path: table.into(),
                source: e,
            })?;
            PairwiseSystem::from_json(&text)?
        }
    };
    let result = jp_feasible(&system)?;
    create_dir(out)?;
    let verdict = serde_json::to_value(result.verdict)?;
    let verified = result.certificate.as_ref().map(|c| c.verify(&system));
    write_json(
        &out.join("jp.json"),
        &json!({
            "table": file_name(table),
            "system": system,
            "correlations": system.correlations(),
            "result": result,
            "certificate_verified": verified,
        }),
    )?;
    println!(
        "{}: {}",
        file_name(table),
        verdict.as_str().unwrap_or_default()
    );
    if let Some(m) = &result.inconsistent_marginal {
        println!("marginals inconsistent: {}", serde_json::to_string(m)?);
    }
    if let Some(c) = &result.certificate {
        println!(
            "certificate: {} (verified: {})",
            serde_json::to_string(&c.y)?,
            verified == Some(true)
        );
    }
    if result.verdict == JpVerdict::Feasible || result.verdict == JpVerdict::MarginalFeasible {
        if let Some(w) = &result.witness {
            println!("witness residual: {:e}", w.residual(&system));
        }
    }
    Ok(())
}

const REPORT_INPUTS: [&str; 4] = ["report.json", "replicate.json", "scan.json", "jp.json"];

fn collect(dir: &Path, found: &mut Vec<PathBuf>) -> Result<()> {
    let entries = fs::read_dir(dir).map_err(|e| Error::Io {
        path: dir.into(),
        source: e,
    })?;
    for entry in entries {
        let path = entry
            .map_err(|e| Error::Io {
                path: dir.into(),
                source: e,
            })?
            .path();
        if path.is_dir() {
            collect(&path, found)?;
        } else if REPORT_INPUTS.contains(&file_name(&path).as_str()) {
            found.push(path);
        }
    }
    Ok(())
}

pub fn report(out: &Path) -> Result<()> {
    let mut found = Vec::new();
    collect(out, &mut found)?;
    found.sort();
    if found.is_empty() {
        warn(&format!("no outputs found under {}", out.display()));
    }
    let mut sources = serde_json::Map::new();
    let mut text = String::new();
    for path in &found {
        let rel = path
            .strip_prefix(out)
            .unwrap_or(path)
            .to_string_lossy()
            .replace('\\', "/");
        let body = fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
        let value: Value = serde_json::from_str(&body)?;
        writeln!(text, "{rel}: {}", headline(&value)).ok();
        sources.insert(rel, value);
    }
    write_json(&out.join("summary.json"), &json!({ "sources": sources }))?;
    write_text(&out.join("summary.txt"), &text)?;
    print!("{text}");
    Ok(())
}

fn headline(v: &Value) -> String {
    if let Some(c) = v.get("chsh") {
        let pick = c
            .get("final")
            .or_else(|| c.get("raw"))
            .or_else(|| c.get("spreadsheet"));
        if let Some(max) = pick.and_then(|p| p.get("max")) {
            return format!("S_max = {max}");
        }
    }
    if let Some(r) = v.get("result") {
        if let Some(f) = r.get("fraction_ge") {
            return format!("fraction S >= 2 = {f}");
        }
        if let Some(verdict) = r.get("verdict") {
            return format!("JP {}", verdict.as_str().unwrap_or_default());
        }
    }
    if let Some(rows) = v.get("rows").and_then(Value::as_array) {
        let s: Vec<String> = rows
            .iter()
            .map(|r| {
                let s = r
                    .pointer("/chsh/max")
                    .map(Value::to_string)
                    .unwrap_or_else(|| "undefined".into());
                format!("W={} S={s}", r["window"])
            })
            .collect();
        return s.join("; ");
    }
    "no headline".into()
}
