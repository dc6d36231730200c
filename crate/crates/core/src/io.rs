//! File formats: click histograms, joint distributions, and scan exports.
//! The byte-level layouts are described in `docs/formats.md`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::detection::ClickHistogram;
use crate::distribution::{JointDistribution, Provenance};
use crate::error::{Error, Result};
use crate::pipeline::{Band, ScanResult};

pub const HISTOGRAM_FORMAT: &str = "hompnr-click-histogram";
pub const DISTRIBUTION_FORMAT: &str = "hompnr-joint-distribution";
pub const FORMAT_VERSION: u32 = 1;

/// Refuse histogram headers that would allocate more cells than this.
pub const MAX_HISTOGRAM_CELLS: usize = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Table,
    Structured,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table" => Ok(OutputFormat::Table),
            "structured" => Ok(OutputFormat::Structured),
            other => Err(Error::invalid(format!(
                "unknown format '{other}' (expected table or structured)"
            ))),
        }
    }
}

fn parse_err(path: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        message: message.into(),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Non-blank, non-comment lines with their 1-based line numbers.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn is_json(text: &str) -> bool {
    text.trim_start().starts_with('{')
}

fn json_err(path: &str, e: serde_json::Error) -> Error {
    parse_err(path, e.line(), e.to_string())
}

// ---------------------------------------------------------------------------
// Click histograms

pub fn histogram_to_text(hist: &ClickHistogram) -> String {
    let mut out = format!("{} {} {}\n", hist.bins_a(), hist.bins_b(), hist.total_shots());
    for ka in 0..=hist.bins_a() {
        for kb in 0..=hist.bins_b() {
            let _ = writeln!(out, "{ka} {kb} {}", hist.get(ka, kb));
        }
    }
    out
}

fn parse_u64(field: &str, path: &str, line: usize, what: &str) -> Result<u64> {
    use std::num::IntErrorKind;
    field.parse::<u64>().map_err(|e| match e.kind() {
        IntErrorKind::PosOverflow => parse_err(path, line, format!("{what} '{field}' overflows 64 bits")),
        _ => parse_err(path, line, format!("{what} '{field}' is not a non-negative integer")),
    })
}

fn parse_usize(field: &str, path: &str, line: usize, what: &str) -> Result<usize> {
    let v = parse_u64(field, path, line, what)?;
    usize::try_from(v).map_err(|_| parse_err(path, line, format!("{what} '{field}' is too large")))
}

fn fields<const N: usize>(l: &str, path: &str, line: usize, layout: &str) -> Result<[String; N]> {
    let parts: Vec<&str> = l.split_whitespace().collect();
    if parts.len() != N {
        return Err(parse_err(
            path,
            line,
            format!("expected {N} fields `{layout}`, found {}", parts.len()),
        ));
    }
    Ok(std::array::from_fn(|i| parts[i].to_string()))
}

/// Parses the text histogram layout. `path` only labels error messages.
pub fn histogram_from_text(text: &str, path: &str) -> Result<ClickHistogram> {
    let mut lines = data_lines(text);
    let (hline, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "missing header `bins_A bins_B total_shots`"))?;
    let [ba, bb, total] = fields::<3>(header, path, hline, "bins_A bins_B total_shots")?;
    let bins_a = parse_usize(&ba, path, hline, "bins_A")?;
    let bins_b = parse_usize(&bb, path, hline, "bins_B")?;
    let total = parse_u64(&total, path, hline, "total_shots")?;
    if bins_a == 0 || bins_b == 0 {
        return Err(parse_err(path, hline, "bin counts must be at least 1"));
    }
    let cells = (bins_a + 1)
        .checked_mul(bins_b + 1)
        .filter(|&c| c <= MAX_HISTOGRAM_CELLS)
        .ok_or_else(|| parse_err(path, hline, "histogram header describes too many cells"))?;

    let mut counts: Vec<Option<u64>> = vec![None; cells];
    let mut sum: u64 = 0;
    for (ln, l) in lines {
        let [ka, kb, c] = fields::<3>(l, path, ln, "k_A k_B count")?;
        let ka = parse_usize(&ka, path, ln, "k_A")?;
        let kb = parse_usize(&kb, path, ln, "k_B")?;
        if ka > bins_a {
            return Err(parse_err(path, ln, format!("k_A={ka} exceeds bins_A={bins_a}")));
        }
        if kb > bins_b {
            return Err(parse_err(path, ln, format!("k_B={kb} exceeds bins_B={bins_b}")));
        }
        let c = parse_u64(&c, path, ln, "count")?;
        let slot = &mut counts[ka * (bins_b + 1) + kb];
        if slot.is_some() {
            return Err(parse_err(path, ln, format!("duplicate cell ({ka}, {kb})")));
        }
        *slot = Some(c);
        sum = sum
            .checked_add(c)
            .ok_or_else(|| parse_err(path, ln, "count overflow: total exceeds 64 bits"))?;
    }
    if let Some(missing) = counts.iter().position(Option::is_none) {
        return Err(parse_err(
            path,
            hline,
            format!(
                "missing cell ({}, {}); all {cells} cells must be listed",
                missing / (bins_b + 1),
                missing % (bins_b + 1)
            ),
        ));
    }
    if sum != total {
        return Err(parse_err(
            path,
            hline,
            format!("header total_shots={total} but counts sum to {sum}"),
        ));
    }
    ClickHistogram::new(bins_a, bins_b, counts.into_iter().flatten().collect())
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HistogramDocument {
    format: String,
    version: u32,
    bins_a: usize,
    bins_b: usize,
    total_shots: u64,
    counts: Vec<Vec<u64>>,
}

pub fn histogram_to_json(hist: &ClickHistogram) -> String {
    let doc = HistogramDocument {
        format: HISTOGRAM_FORMAT.into(),
        version: FORMAT_VERSION,
        bins_a: hist.bins_a(),
        bins_b: hist.bins_b(),
        total_shots: hist.total_shots(),
        counts: hist.counts().chunks(hist.bins_b() + 1).map(<[u64]>::to_vec).collect(),
    };
    serde_json::to_string_pretty(&doc).expect("histogram serializes") + "\n"
}

pub fn histogram_from_json(text: &str, path: &str) -> Result<ClickHistogram> {
    let doc: HistogramDocument = serde_json::from_str(text).map_err(|e| json_err(path, e))?;
    if doc.format != HISTOGRAM_FORMAT || doc.version != FORMAT_VERSION {
        return Err(parse_err(
            path,
            1,
            format!("expected format {HISTOGRAM_FORMAT} version {FORMAT_VERSION}"),
        ));
    }
    if doc.counts.len() != doc.bins_a + 1 || doc.counts.iter().any(|r| r.len() != doc.bins_b + 1) {
        return Err(parse_err(path, 1, "counts must be a (bins_a+1) x (bins_b+1) array"));
    }
    let flat: Vec<u64> = doc.counts.into_iter().flatten().collect();
    let hist = ClickHistogram::new(doc.bins_a, doc.bins_b, flat).map_err(|e| parse_err(path, 1, e.to_string()))?;
    if hist.total_shots() != doc.total_shots {
        return Err(parse_err(
            path,
            1,
            format!(
                "total_shots={} but counts sum to {}",
                doc.total_shots,
                hist.total_shots()
            ),
        ));
    }
    Ok(hist)
}

/// Reads a click histogram in either the text or the JSON layout.
pub fn ingest_click_records(path: &Path) -> Result<ClickHistogram> {
    let text = read_text(path)?;
    let label = path.display().to_string();
    if is_json(&text) {
        histogram_from_json(&text, &label)
    } else {
        histogram_from_text(&text, &label)
    }
}

pub fn write_histogram(path: &Path, hist: &ClickHistogram, format: OutputFormat) -> Result<()> {
    let text = match format {
        OutputFormat::Table => histogram_to_text(hist),
        OutputFormat::Structured => histogram_to_json(hist),
    };
    write_text(path, &text)
}

// ---------------------------------------------------------------------------
// Joint distributions

pub fn distribution_to_text(dist: &JointDistribution) -> String {
    let mut out = format!(
        "# {DISTRIBUTION_FORMAT} v{FORMAT_VERSION}\n# provenance: {}\n# leakage: {:e}\n{} {}\n",
        dist.provenance(),
        dist.leakage(),
        dist.rows(),
        dist.cols()
    );
    for (na, nb, p) in dist.iter() {
        let _ = writeln!(out, "{na} {nb} {p:e}");
    }
    out
}

fn parse_f64(field: &str, path: &str, line: usize, what: &str) -> Result<f64> {
    field
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| parse_err(path, line, format!("{what} '{field}' is not a finite number")))
}

pub fn distribution_from_text(text: &str, path: &str) -> Result<JointDistribution> {
    let mut provenance = Provenance::External;
    let mut leakage = 0.0;
    for (i, l) in text.lines().enumerate() {
        let Some(comment) = l.trim().strip_prefix('#') else {
            continue;
        };
        if let Some(v) = comment.trim().strip_prefix("provenance:") {
            provenance = v
                .trim()
                .parse()
                .map_err(|_| parse_err(path, i + 1, format!("unknown provenance '{}'", v.trim())))?;
        } else if let Some(v) = comment.trim().strip_prefix("leakage:") {
            leakage = parse_f64(v.trim(), path, i + 1, "leakage")?;
        }
    }

    let mut lines = data_lines(text);
    let (hline, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "missing header `rows cols`"))?;
    let [r, c] = fields::<2>(header, path, hline, "rows cols")?;
    let rows = parse_usize(&r, path, hline, "rows")?;
    let cols = parse_usize(&c, path, hline, "cols")?;
    let cells = rows
        .checked_mul(cols)
        .filter(|&n| n > 0 && n <= MAX_HISTOGRAM_CELLS)
        .ok_or_else(|| parse_err(path, hline, "invalid distribution shape"))?;

    let mut probs: Vec<Option<f64>> = vec![None; cells];
    for (ln, l) in lines {
        let [a, b, p] = fields::<3>(l, path, ln, "n_A n_B probability")?;
        let na = parse_usize(&a, path, ln, "n_A")?;
        let nb = parse_usize(&b, path, ln, "n_B")?;
        if na >= rows || nb >= cols {
            return Err(parse_err(
                path,
                ln,
                format!("entry ({na}, {nb}) outside the {rows}x{cols} grid"),
            ));
        }
        let p = parse_f64(&p, path, ln, "probability")?;
        let slot = &mut probs[na * cols + nb];
        if slot.is_some() {
            return Err(parse_err(path, ln, format!("duplicate entry ({na}, {nb})")));
        }
        *slot = Some(p);
    }
    if let Some(missing) = probs.iter().position(Option::is_none) {
        return Err(parse_err(
            path,
            hline,
            format!("missing entry ({}, {})", missing / cols, missing % cols),
        ));
    }
    let dist = JointDistribution::new(rows, cols, probs.into_iter().flatten().collect(), provenance)
        .map_err(|e| parse_err(path, hline, e.to_string()))?;
    Ok(dist.with_leakage(leakage))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DistributionDocument {
    format: String,
    version: u32,
    provenance: Provenance,
    leakage: f64,
    probabilities: Vec<Vec<f64>>,
}

pub fn distribution_to_json(dist: &JointDistribution) -> String {
    let doc = DistributionDocument {
        format: DISTRIBUTION_FORMAT.into(),
        version: FORMAT_VERSION,
        provenance: dist.provenance(),
        leakage: dist.leakage(),
        probabilities: dist.to_rows(),
    };
    serde_json::to_string_pretty(&doc).expect("distribution serializes") + "\n"
}

pub fn distribution_from_json(text: &str, path: &str) -> Result<JointDistribution> {
    let doc: DistributionDocument = serde_json::from_str(text).map_err(|e| json_err(path, e))?;
    if doc.format != DISTRIBUTION_FORMAT || doc.version != FORMAT_VERSION {
        return Err(parse_err(
            path,
            1,
            format!("expected format {DISTRIBUTION_FORMAT} version {FORMAT_VERSION}"),
        ));
    }
    let dist = JointDistribution::from_rows(&doc.probabilities, doc.provenance)
        .map_err(|e| parse_err(path, 1, e.to_string()))?;
    Ok(dist.with_leakage(doc.leakage))
}

pub fn read_distribution(path: &Path) -> Result<JointDistribution> {
    let text = read_text(path)?;
    let label = path.display().to_string();
    if is_json(&text) {
        distribution_from_json(&text, &label)
    } else {
        distribution_from_text(&text, &label)
    }
}

pub fn write_distribution(path: &Path, dist: &JointDistribution, format: OutputFormat) -> Result<()> {
    let text = match format {
        OutputFormat::Table => distribution_to_text(dist),
        OutputFormat::Structured => distribution_to_json(dist),
    };
    write_text(path, &text)
}

/// Contents of a file handed to the analysis command.
#[derive(Clone, Debug, PartialEq)]
pub enum AnalysisInput {
    Histogram(ClickHistogram),
    Distribution(JointDistribution),
}

/// Reads either a click histogram or a joint distribution, telling them
/// apart by the header (three fields vs two) or the JSON `format` key.
pub fn read_analysis_input(path: &Path) -> Result<AnalysisInput> {
    let text = read_text(path)?;
    let label = path.display().to_string();
    if is_json(&text) {
        let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| json_err(&label, e))?;
        return match value.get("format").and_then(|v| v.as_str()) {
            Some(HISTOGRAM_FORMAT) => histogram_from_json(&text, &label).map(AnalysisInput::Histogram),
            Some(DISTRIBUTION_FORMAT) => distribution_from_json(&text, &label).map(AnalysisInput::Distribution),
            _ => Err(parse_err(&label, 1, "unrecognized document format")),
        };
    }
    let header = data_lines(&text)
        .next()
        .map(|(ln, l)| (ln, l.split_whitespace().count()));
    match header {
        Some((_, 3)) => histogram_from_text(&text, &label).map(AnalysisInput::Histogram),
        Some((_, 2)) => distribution_from_text(&text, &label).map(AnalysisInput::Distribution),
        Some((ln, _)) => Err(parse_err(
            &label,
            ln,
            "header must be `bins_A bins_B total_shots` or `rows cols`",
        )),
        None => Err(parse_err(&label, 1, "empty file")),
    }
}

// ---------------------------------------------------------------------------
// Scan exports

pub const MEASURES_HEADER: &str = "delay_ps\toverlap\tvariant\tcorr\tschmidt_k\tmutual_information\tdegenerate_marginal\tcorr_low\tcorr_high\tschmidt_k_low\tschmidt_k_high\tmi_low\tmi_high";
pub const COMPONENTS_HEADER: &str = "delay_ps\tp11\tp22\tp20\tp02\tp11_low\tp11_high\tp22_low\tp22_high\tp20_low\tp20_high\tp02_low\tp02_high\tsampled_p11\tsampled_p22\tsampled_p20\tsampled_p02";
pub const SAMPLED_HEADER: &str = "delay_ps\tvariant\tcorr\tschmidt_k\tmutual_information\tcorr_low\tcorr_high\tcorr_std\tschmidt_k_low\tschmidt_k_high\tschmidt_k_std\tmi_low\tmi_high\tmi_std\tnegative_mass";

fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:e}")
    }
}

fn band_cols(b: Option<Band>) -> [String; 2] {
    match b {
        Some(b) => [num(b.low), num(b.high)],
        None => ["nan".into(), "nan".into()],
    }
}

/// Per-delay, per-variant analytic measures.
pub fn measures_table(result: &ScanResult) -> String {
    let mut out = format!("{MEASURES_HEADER}\n");
    for rec in &result.records {
        for v in &rec.variants {
            let r = v.analytic;
            let [cl, ch] = band_cols(v.band.map(|b| b.corr));
            let [kl, kh] = band_cols(v.band.map(|b| b.schmidt_k));
            let [ml, mh] = band_cols(v.band.map(|b| b.mutual_information));
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{cl}\t{ch}\t{kl}\t{kh}\t{ml}\t{mh}",
                num(rec.delay_ps),
                num(rec.overlap),
                v.label,
                num(r.corr),
                num(r.schmidt_k),
                num(r.mutual_information),
                u8::from(r.degenerate_marginal),
            );
        }
    }
    out
}

pub fn components_table(result: &ScanResult) -> String {
    let mut out = format!("{COMPONENTS_HEADER}\n");
    for rec in &result.records {
        let c = rec.components;
        let mut row = vec![num(rec.delay_ps), num(c.p11), num(c.p22), num(c.p20), num(c.p02)];
        for i in 0..4 {
            row.extend(band_cols(rec.component_bands.map(|b| b[i])));
        }
        match &rec.sampled {
            Some(s) => {
                let sc = s.components;
                row.extend([num(sc.p11), num(sc.p22), num(sc.p20), num(sc.p02)]);
            }
            None => row.extend(std::iter::repeat_n("nan".to_string(), 4)),
        }
        out.push_str(&row.join("\t"));
        out.push('\n');
    }
    out
}

/// Monte Carlo measures with bootstrap intervals; header-only without sampling.
pub fn sampled_table(result: &ScanResult) -> String {
    let mut out = format!("{SAMPLED_HEADER}\n");
    for rec in &result.records {
        let Some(s) = &rec.sampled else { continue };
        for v in &rec.variants {
            let (Some(r), Some(i)) = (v.sampled, v.intervals) else {
                continue;
            };
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                num(rec.delay_ps),
                v.label,
                num(r.corr),
                num(r.schmidt_k),
                num(r.mutual_information),
                num(i.corr.low),
                num(i.corr.high),
                num(i.corr.std),
                num(i.schmidt_k.low),
                num(i.schmidt_k.high),
                num(i.schmidt_k.std),
                num(i.mutual_information.low),
                num(i.mutual_information.high),
                num(i.mutual_information.std),
                num(s.negative_mass),
            );
        }
    }
    out
}

#[derive(Serialize)]
struct Metadata<'a> {
    schema_version: u32,
    squeeze_r: f64,
    total_cutoff: usize,
    config: &'a Option<crate::pipeline::ScanConfig>,
    notes: &'a [String],
}

/// Writes a scan into `dir` (created if needed) and returns the paths written.
///
/// `Table`: `measures.tsv`, `components.tsv`, `sampled.tsv`, `metadata.json`
/// and one text file per stored distribution under `distributions/`.
/// `Structured`: a single `scan.json` holding the whole result.
pub fn export_results(result: &ScanResult, dir: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let mut put = |path: PathBuf, text: &str| -> Result<()> {
        write_text(&path, text)?;
        written.push(path);
        Ok(())
    };
    match format {
        OutputFormat::Structured => {
            let text = serde_json::to_string_pretty(result)? + "\n";
            put(dir.join("scan.json"), &text)?;
        }
        OutputFormat::Table => {
            put(dir.join("measures.tsv"), &measures_table(result))?;
            put(dir.join("components.tsv"), &components_table(result))?;
            put(dir.join("sampled.tsv"), &sampled_table(result))?;
            let meta = Metadata {
                schema_version: result.schema_version,
                squeeze_r: result.squeeze_r,
                total_cutoff: result.total_cutoff,
                config: &result.config,
                notes: &result.notes,
            };
            put(
                dir.join("metadata.json"),
                &(serde_json::to_string_pretty(&meta)? + "\n"),
            )?;
            if !result.records.is_empty() {
                let ddir = dir.join("distributions");
                fs::create_dir_all(&ddir).map_err(|e| Error::io(&ddir, e))?;
                for (i, rec) in result.records.iter().enumerate() {
                    for (kind, d) in [
                        ("ideal", &rec.ideal),
                        ("lossy", &rec.lossy),
                        ("clicks", &rec.clicks),
                        ("deconvolved", &rec.deconvolved),
                    ] {
                        put(ddir.join(format!("d{i:03}_{kind}.txt")), &distribution_to_text(d))?;
                    }
                    if let Some(s) = &rec.sampled {
                        put(
                            ddir.join(format!("d{i:03}_histogram.txt")),
                            &histogram_to_text(&s.histogram),
                        )?;
                        put(
                            ddir.join(format!("d{i:03}_sampled_deconvolved.txt")),
                            &distribution_to_text(&s.deconvolved),
                        )?;
                    }
                }
            }
        }
    }
    Ok(written)
}
