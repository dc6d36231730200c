use std::fs;
use std::path::Path;

use serde_json::Value;

use hompnr::detection::{sample_clicks, ClickHistogram, DetectionChain};
use hompnr::io::{
    distribution_from_text, distribution_to_text, export_results, histogram_to_text, ingest_click_records, OutputFormat,
};
use hompnr::measures::ConditioningSpec;
use hompnr::pipeline::{bootstrap_uncertainty, run_scan, BootstrapOptions, Preset, ScanConfig, ScanResult, Source};

fn lossless_config(r: f64, delays: Vec<f64>) -> ScanConfig {
    let mut cfg = ScanConfig::operating_point();
    cfg.source = Source::Squeezing { r };
    cfg.chain = DetectionChain::lossless(8, 8).unwrap();
    cfg.delays_ps = delays;
    cfg
}

#[test]
fn zero_delay_lossless_scan_is_separable() {
    let result = run_scan(&lossless_config(0.5, vec![0.0])).unwrap();
    assert_eq!(result.records.len(), 1);
    let r = result.records[0].variants[0].analytic;
    assert!(r.mutual_information < 1e-10);
    assert!((r.schmidt_k - 1.0).abs() < 1e-8);
    assert!(r.corr.abs() < 1e-8);
}

#[test]
fn records_follow_requested_delay_order() {
    let delays = vec![3.0, -7.5, 0.0, 12.0, -1.0];
    let result = run_scan(&lossless_config(0.3, delays.clone())).unwrap();
    let got: Vec<f64> = result.records.iter().map(|r| r.delay_ps).collect();
    assert_eq!(got, delays);
    for rec in &result.records {
        assert_eq!(rec.ideal.provenance().to_string(), "ideal");
        assert_eq!(rec.lossy.provenance().to_string(), "lossy");
        assert_eq!(rec.clicks.provenance().to_string(), "clicks");
        assert_eq!(rec.deconvolved.provenance().to_string(), "deconvolved");
    }
}

#[test]
fn errors_carry_delay_context() {
    let mut cfg = lossless_config(1.0, vec![0.0]);
    cfg.cutoff = Some(8);
    let msg = run_scan(&cfg).unwrap_err().to_string();
    assert!(msg.contains("delay"), "{msg}");
}

#[test]
fn conditioned_scan_dips_at_zero_delay() {
    let mut cfg = ScanConfig::operating_point();
    cfg.conditioning = vec![ConditioningSpec::two_photon_no_vacuum()];
    let result = run_scan(&cfg).unwrap();
    let corr_at = |rec: &hompnr::pipeline::DelayRecord| rec.variants[1].analytic.corr;
    let zero = result.records.iter().find(|r| r.delay_ps == 0.0).unwrap();
    assert_eq!(zero.variants[1].label, "le2-novac");
    assert!(corr_at(zero) < 0.0);
    for rec in result.records.iter().filter(|r| r.delay_ps.abs() >= 6.0) {
        assert!(corr_at(zero).abs() > corr_at(rec).abs(), "delay {}", rec.delay_ps);
    }
}

#[test]
fn mean_photon_band_brackets_nominal() {
    let mut cfg = ScanConfig::operating_point();
    cfg.delays_ps = vec![-10.0, 0.0, 4.0];
    cfg.mean_photon_sigma = Some(0.008);
    let result = run_scan(&cfg).unwrap();
    for rec in &result.records {
        let v = &rec.variants[0];
        let band = v.band.unwrap();
        assert!(band.corr.low <= v.analytic.corr && v.analytic.corr <= band.corr.high);
        assert!(band.mutual_information.low <= v.analytic.mutual_information);
        let p11 = rec.component_bands.unwrap()[0];
        assert!(p11.low < rec.components.p11 && rec.components.p11 < p11.high);
    }
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for entry in walk(dir) {
        out.push((
            entry.strip_prefix(dir).unwrap().display().to_string(),
            fs::read(&entry).unwrap(),
        ));
    }
    out.sort();
    out
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut files = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            files.extend(walk(&p));
        } else {
            files.push(p);
        }
    }
    files
}

#[test]
fn exports_do_not_depend_on_thread_count() {
    let mut cfg = ScanConfig::operating_point();
    cfg.delays_ps = vec![-6.0, -2.0, 0.0, 1.0, 5.0];
    cfg.shots = Some(1_500_000);
    cfg.seed = 99;
    cfg.bootstrap_resamples = 40;
    cfg.conditioning = vec![ConditioningSpec::two_photon_no_vacuum()];
    let run = |threads: usize, format: OutputFormat| {
        let dir = tempfile::tempdir().unwrap();
        let result = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_scan(&cfg).unwrap());
        export_results(&result, dir.path(), format).unwrap();
        read_dir_sorted(dir.path())
    };
    for format in [OutputFormat::Table, OutputFormat::Structured] {
        let one = run(1, format);
        let four = run(4, format);
        assert!(!one.is_empty());
        assert_eq!(one, four);
    }
}

/// `(measure, delay, variant, z)` with `z = (sampled − analytic) / bootstrap std`
/// for a 10⁶-shot scan at the operating point.
fn consistency_scores() -> Vec<(&'static str, f64, String, f64)> {
    let mut cfg = ScanConfig::operating_point();
    cfg.shots = Some(1_000_000);
    cfg.seed = 2024;
    cfg.conditioning = vec![ConditioningSpec::two_photon_no_vacuum()];
    let result = run_scan(&cfg).unwrap();
    let mut out = Vec::new();
    for rec in &result.records {
        for v in &rec.variants {
            let s = v.sampled.unwrap();
            let i = v.intervals.unwrap();
            for (name, sampled, analytic, std) in [
                ("corr", s.corr, v.analytic.corr, i.corr.std),
                ("K", s.schmidt_k, v.analytic.schmidt_k, i.schmidt_k.std),
                (
                    "MI",
                    s.mutual_information,
                    v.analytic.mutual_information,
                    i.mutual_information.std,
                ),
            ] {
                out.push((name, rec.delay_ps, v.label.clone(), (sampled - analytic) / std));
            }
        }
    }
    out
}

#[test]
fn sampled_measures_agree_with_analytic_within_three_sigma() {
    let scores = consistency_scores();
    let outliers: Vec<_> = scores.iter().filter(|s| s.3.abs() >= 3.0).collect();
    assert!(
        outliers.is_empty(),
        "{} of {} comparisons beyond 3 sigma: {outliers:?}",
        outliers.len(),
        scores.len()
    );
}

#[test]
fn sampled_measure_scores_look_standard_normal() {
    let scores = consistency_scores();
    for name in ["corr", "K", "MI"] {
        let z: Vec<f64> = scores.iter().filter(|s| s.0 == name).map(|s| s.3).collect();
        let n = z.len() as f64;
        let mean = z.iter().sum::<f64>() / n;
        let sd = (z.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
        assert!(mean.abs() < 0.5, "{name}: mean z {mean}");
        assert!((0.6..1.5).contains(&sd), "{name}: sd of z {sd}");
    }
    // 246 Gaussian scores put ~0.66 beyond 3 sigma on average; 5 or more has p < 1e-3
    let beyond = scores.iter().filter(|s| s.3.abs() >= 3.0).count();
    assert!(beyond < 5, "{beyond} scores beyond 3 sigma");
}

fn operating_clicks() -> hompnr::JointDistribution {
    let mut cfg = ScanConfig::operating_point();
    cfg.delays_ps = vec![2.0];
    run_scan(&cfg).unwrap().records.remove(0).clicks
}

#[test]
fn bootstrap_point_mass_has_zero_width() {
    let mut counts = vec![0u64; 81];
    counts[0] = 5000;
    let hist = ClickHistogram::new(8, 8, counts).unwrap();
    let chain = DetectionChain::lossless(8, 8).unwrap();
    let i = bootstrap_uncertainty(
        &hist,
        &chain,
        &[ConditioningSpec::none()],
        &BootstrapOptions::new(20, 1),
    )
    .unwrap();
    assert_eq!(i[0].corr.width(), 0.0);
    assert_eq!(i[0].schmidt_k.width(), 0.0);
    assert_eq!(i[0].mutual_information.width(), 0.0);
}

#[test]
fn bootstrap_rejects_empty_histogram() {
    let hist = ClickHistogram::new(8, 8, vec![0; 81]).unwrap();
    let chain = DetectionChain::lossless(8, 8).unwrap();
    assert!(bootstrap_uncertainty(
        &hist,
        &chain,
        &[ConditioningSpec::none()],
        &BootstrapOptions::new(20, 1)
    )
    .is_err());
}

#[test]
fn bootstrap_width_shrinks_with_shots() {
    let clicks = operating_clicks();
    let chain = DetectionChain::lossless(8, 8).unwrap();
    let spec = [ConditioningSpec::none()];
    for seed in 0..10 {
        let width = |shots| {
            let hist = sample_clicks(&clicks, shots, seed).unwrap();
            bootstrap_uncertainty(&hist, &chain, &spec, &BootstrapOptions::new(100, seed + 1000)).unwrap()[0]
        };
        let small = width(10_000);
        let large = width(1_000_000);
        assert!(large.corr.width() < small.corr.width(), "seed {seed}");
        assert!(large.schmidt_k.width() < small.schmidt_k.width(), "seed {seed}");
        assert!(
            large.mutual_information.width() < small.mutual_information.width(),
            "seed {seed}"
        );
    }
}

#[test]
fn bootstrap_is_reproducible() {
    let hist = sample_clicks(&operating_clicks(), 100_000, 3).unwrap();
    let chain = DetectionChain::lossless(8, 8).unwrap();
    let spec = [ConditioningSpec::none(), ConditioningSpec::vacuum_removed()];
    let a = bootstrap_uncertainty(&hist, &chain, &spec, &BootstrapOptions::new(50, 8)).unwrap();
    let b = bootstrap_uncertainty(&hist, &chain, &spec, &BootstrapOptions::new(50, 8)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn histogram_export_ingest_round_trip() {
    let hist = sample_clicks(&operating_clicks(), 250_000, 17).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.txt");
    fs::write(&path, histogram_to_text(&hist)).unwrap();
    assert_eq!(ingest_click_records(&path).unwrap(), hist);
    let json = dir.path().join("h.json");
    hompnr::io::write_histogram(&json, &hist, OutputFormat::Structured).unwrap();
    assert_eq!(ingest_click_records(&json).unwrap(), hist);
}

#[test]
fn distribution_file_reproduces_fifteen_digits() {
    let d = run_scan(&lossless_config(0.5, vec![1.5]))
        .unwrap()
        .records
        .remove(0)
        .lossy;
    let back = distribution_from_text(&distribution_to_text(&d), "mem").unwrap();
    for ((_, _, a), (_, _, b)) in d.iter().zip(back.iter()) {
        assert!(a == b || ((a - b) / a).abs() < 1e-15);
    }
}

#[test]
fn empty_scan_exports_header_only_table() {
    let dir = tempfile::tempdir().unwrap();
    export_results(&ScanResult::empty(), dir.path(), OutputFormat::Table).unwrap();
    let text = fs::read_to_string(dir.path().join("measures.tsv")).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("delay_ps\t"));
}

// Minimal validator for the subset of JSON Schema used in docs/.
fn validate(value: &Value, schema: &Value, root: &Value, path: &str) -> Result<(), String> {
    if let Some(r) = schema.get("$ref").and_then(Value::as_str) {
        let name = r
            .strip_prefix("#/$defs/")
            .ok_or_else(|| format!("unsupported ref {r}"))?;
        return validate(value, &root["$defs"][name], root, path);
    }
    if let Some(any) = schema.get("anyOf").and_then(Value::as_array) {
        return if any.iter().any(|s| validate(value, s, root, path).is_ok()) {
            Ok(())
        } else {
            Err(format!("{path}: matches no alternative"))
        };
    }
    if let Some(t) = schema.get("type") {
        let types: Vec<&str> = match t {
            Value::String(s) => vec![s.as_str()],
            Value::Array(a) => a.iter().filter_map(Value::as_str).collect(),
            _ => return Err("bad type".into()),
        };
        let ok = types.iter().any(|t| match *t {
            "object" => value.is_object(),
            "array" => value.is_array(),
            "string" => value.is_string(),
            "number" => value.is_number(),
            "integer" => value.is_u64() || value.is_i64(),
            "boolean" => value.is_boolean(),
            "null" => value.is_null(),
            _ => false,
        });
        if !ok {
            return Err(format!("{path}: expected {types:?}, got {value}"));
        }
    }
    if let Some(e) = schema.get("enum").and_then(Value::as_array) {
        if !e.contains(value) {
            return Err(format!("{path}: {value} not in enum"));
        }
    }
    if let Some(obj) = value.as_object() {
        for key in schema.get("required").and_then(Value::as_array).into_iter().flatten() {
            let key = key.as_str().unwrap();
            if !obj.contains_key(key) {
                return Err(format!("{path}: missing {key}"));
            }
        }
        let props = schema.get("properties").and_then(Value::as_object);
        for (k, v) in obj {
            match props.and_then(|p| p.get(k)) {
                Some(s) => validate(v, s, root, &format!("{path}.{k}"))?,
                None if schema.get("additionalProperties") == Some(&Value::Bool(false)) => {
                    return Err(format!("{path}: unexpected key {k}"))
                }
                None => {}
            }
        }
    }
    if let (Some(items), Some(arr)) = (schema.get("items"), value.as_array()) {
        for (i, v) in arr.iter().enumerate() {
            validate(v, items, root, &format!("{path}[{i}]"))?;
        }
    }
    Ok(())
}

fn schema() -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/scan-result.schema.json");
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn structured_export_matches_documented_schema() {
    let schema = schema();
    let mut cfg = ScanConfig::operating_point();
    cfg.delays_ps = vec![-3.0, 0.0];
    cfg.shots = Some(20_000);
    cfg.bootstrap_resamples = 10;
    cfg.mean_photon_sigma = Some(0.008);
    cfg.conditioning = vec![ConditioningSpec::vacuum_removed()];
    for result in [
        run_scan(&cfg).unwrap(),
        ScanResult::empty(),
        Preset::Fig3.run(None, 0).unwrap().unwrap(),
    ] {
        let dir = tempfile::tempdir().unwrap();
        export_results(&result, dir.path(), OutputFormat::Structured).unwrap();
        let doc: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("scan.json")).unwrap()).unwrap();
        validate(&doc, &schema, &schema, "$").unwrap();
    }
    // the validator does reject documents that break the schema
    let bad = serde_json::json!({"schema_version": 1, "records": []});
    assert!(validate(&bad, &schema, &schema, "$").is_err());
}

#[test]
fn presets_record_their_defaults() {
    let result = Preset::Fig5a.run(None, 0).unwrap().unwrap();
    assert_eq!(result.records.len(), 41);
    assert!(result.notes.iter().any(|n| n.contains("preset fig5a")));
    assert!(Preset::OperatingPoint.run(None, 0).unwrap().is_none());
}
